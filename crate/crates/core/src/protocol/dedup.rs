//! Per-origin duplicate suppression for flooded packets.

/// Sliding acceptance window over 32-bit sequence numbers using serial
/// number arithmetic, so wraparound is handled. Sequence numbers more than
/// [`SeqWindow::WIDTH`] behind the newest accepted one are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqWindow {
    highest: u32,
    /// Bit `i` set: `highest - i` has been accepted.
    mask: u64,
}

impl SeqWindow {
    pub const WIDTH: u32 = 64;

    pub fn new(first: u32) -> Self {
        SeqWindow { highest: first, mask: 1 }
    }

    pub fn highest(&self) -> u32 {
        self.highest
    }

    /// Records `seq`; returns false if it was already seen or is too old.
    pub fn accept(&mut self, seq: u32) -> bool {
        let ahead = seq.wrapping_sub(self.highest);
        if ahead != 0 && ahead < 1 << 31 {
            self.mask = if ahead >= Self::WIDTH { 0 } else { self.mask << ahead };
            self.mask |= 1;
            self.highest = seq;
            return true;
        }
        let behind = self.highest.wrapping_sub(seq);
        if behind >= Self::WIDTH {
            return false;
        }
        let bit = 1u64 << behind;
        if self.mask & bit != 0 {
            return false;
        }
        self.mask |= bit;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_and_reordering() {
        let mut w = SeqWindow::new(7);
        assert!(!w.accept(7));
        assert!(w.accept(9));
        assert!(w.accept(8));
        assert!(!w.accept(8));
        assert_eq!(w.highest(), 9);
    }

    #[test]
    fn old_sequence_numbers_fall_out() {
        let mut w = SeqWindow::new(0);
        assert!(w.accept(100));
        assert!(!w.accept(36));
        assert!(w.accept(37));
    }

    #[test]
    fn wraps_around() {
        let mut w = SeqWindow::new(u32::MAX - 1);
        assert!(w.accept(u32::MAX));
        assert!(w.accept(0));
        assert!(w.accept(1));
        assert!(!w.accept(u32::MAX));
        assert_eq!(w.highest(), 1);
    }

    proptest! {
        #[test]
        fn each_recent_seq_accepted_once(start in any::<u32>(), offsets in proptest::collection::vec(0u32..40, 1..80)) {
            let mut w = SeqWindow::new(start);
            let mut seen = std::collections::HashSet::from([start]);
            for o in offsets {
                let s = start.wrapping_add(o);
                prop_assert_eq!(w.accept(s), seen.insert(s));
            }
        }
    }
}
