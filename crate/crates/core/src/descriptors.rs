//! Routing descriptors and the pre-computed routing table.
//!
//! A data packet carries a `<case, path, phase, step>` descriptor instead of
//! a cell list. Each gateway looks the descriptor up in a table shared by
//! all nodes to learn the next move and the descriptor to forward. The
//! table is derived from the path templates in [`crate::paths`], for all
//! four cases and all eight paths.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::grid::{Cell, Move};
use crate::paths::{self, CaseId, CaseKind, Count, PathError, PhaseKind, RouteShape, Segment, Symmetry};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DescriptorError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("descriptor {0} does not address a move of its path")]
    OutOfRange(RoutingDescriptor),
    #[error("step {0} does not fit in one byte")]
    StepOverflow(u32),
    #[error("malformed descriptor bytes {0:02x?}")]
    Malformed([u8; 4]),
    #[error("descriptor case does not match the route {from} -> {to}")]
    RouteMismatch { from: Cell, to: Cell },
}

/// Position of a packet along one of the parallel paths. The canonical
/// deltas are kept alongside the four wire fields; they are recomputed from
/// the route endpoints when a descriptor is read off the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoutingDescriptor {
    pub case: CaseId,
    pub path: u8,
    pub phase: u8,
    pub step: u32,
    pub dx: u32,
    pub dy: u32,
}

impl fmt::Display for RoutingDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{}{}, {}, {}, {}>",
            self.case.kind.number(),
            if self.case.symmetry == Symmetry::IDENTITY {
                String::new()
            } else {
                format!("/{:03b}", self.case.symmetry.bits())
            },
            self.path,
            self.phase,
            self.step
        )
    }
}

/// What follows the current move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextStep {
    Continue { phase: u8, step: u32 },
    EndOfPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutingTableEntry {
    /// Move in canonical orientation; the descriptor's symmetry maps it
    /// onto the grid.
    pub next_move: Move,
    pub next: NextStep,
}

/// Result of advancing a packet by one hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    Forward(RoutingDescriptor),
    Delivered,
}

#[derive(Debug, Clone)]
struct TablePhase {
    phase: PhaseKind,
    segments: Vec<Segment>,
}

impl TablePhase {
    fn len(&self, dx: u32, dy: u32) -> u32 {
        self.segments.iter().map(|s| s.count.eval(dx, dy)).sum()
    }

    fn move_at(&self, step: u32, dx: u32, dy: u32) -> Option<Move> {
        let mut left = step;
        for s in &self.segments {
            let n = s.count.eval(dx, dy);
            if left <= n {
                return Some(s.mv);
            }
            left -= n;
        }
        None
    }
}

/// Routing table for every case and path.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    rows: [[Vec<TablePhase>; 8]; 4],
}

impl Default for RoutingTable {
    fn default() -> Self {
        Self::new()
    }
}

impl RoutingTable {
    pub fn new() -> Self {
        let rows = CaseKind::ALL.map(|kind| {
            std::array::from_fn(|i| {
                paths::template(kind, i as u8 + 1)
                    .expect("path index in range")
                    .iter()
                    .map(|&(phase, segs)| TablePhase {
                        phase,
                        segments: segs.to_vec(),
                    })
                    .collect()
            })
        });
        RoutingTable { rows }
    }

    /// Table shared by every node.
    pub fn global() -> &'static RoutingTable {
        static TABLE: OnceLock<RoutingTable> = OnceLock::new();
        TABLE.get_or_init(RoutingTable::new)
    }

    fn phases(&self, kind: CaseKind, path: u8) -> Result<&[TablePhase], PathError> {
        if !(1..=8).contains(&path) {
            return Err(PathError::BadPathIndex(path));
        }
        Ok(&self.rows[kind as usize - 1][path as usize - 1])
    }

    fn first_from(phases: &[TablePhase], from: usize, dx: u32, dy: u32) -> NextStep {
        phases[from..]
            .iter()
            .find(|p| p.len(dx, dy) > 0)
            .map_or(NextStep::EndOfPath, |p| NextStep::Continue {
                phase: p.phase.number(),
                step: 1,
            })
    }

    pub fn lookup(&self, desc: &RoutingDescriptor) -> Result<RoutingTableEntry, DescriptorError> {
        let phases = self.phases(desc.case.kind, desc.path)?;
        let bad = || DescriptorError::OutOfRange(*desc);
        let at = phases
            .iter()
            .position(|p| p.phase.number() == desc.phase)
            .ok_or_else(bad)?;
        let here = &phases[at];
        let len = here.len(desc.dx, desc.dy);
        if desc.step == 0 || desc.step > len {
            return Err(bad());
        }
        let next_move = here.move_at(desc.step, desc.dx, desc.dy).ok_or_else(bad)?;
        let next = if desc.step < len {
            NextStep::Continue {
                phase: desc.phase,
                step: desc.step + 1,
            }
        } else {
            Self::first_from(phases, at + 1, desc.dx, desc.dy)
        };
        Ok(RoutingTableEntry { next_move, next })
    }

    /// Symbolic rows for one path in routing-table layout:
    /// `(phase, step range, move, next phase, next step)`.
    pub fn describe(&self, kind: CaseKind, path: u8) -> Result<Vec<[String; 5]>, PathError> {
        let phases = self.phases(kind, path)?;
        let mut rows = Vec::new();
        for (at, p) in phases.iter().enumerate() {
            let after = phases
                .get(at + 1)
                .map_or("end of path".to_string(), |n| n.phase.number().to_string());
            let after_step = if at + 1 < phases.len() { "1" } else { "-" };
            let mut offset = 0u32;
            for seg in &p.segments {
                let last_seg = std::ptr::eq(seg, p.segments.last().unwrap());
                match seg.count {
                    Count::Fixed(n) => {
                        for i in 1..=n {
                            let step = offset + i;
                            let end = last_seg && i == n;
                            rows.push([
                                p.phase.number().to_string(),
                                step.to_string(),
                                seg.mv.to_string(),
                                if end { after.clone() } else { p.phase.number().to_string() },
                                if end { after_step.to_string() } else { (step + 1).to_string() },
                            ]);
                        }
                        offset += n;
                    }
                    var => {
                        let pre = if offset == 0 { String::new() } else { format!("{offset}+") };
                        rows.push([
                            p.phase.number().to_string(),
                            format!("{pre}1 <= i <= {pre}{}", before_last(var)),
                            seg.mv.to_string(),
                            p.phase.number().to_string(),
                            "i+1".to_string(),
                        ]);
                        rows.push([
                            p.phase.number().to_string(),
                            format!("{pre}{var}"),
                            seg.mv.to_string(),
                            if last_seg { after.clone() } else { p.phase.number().to_string() },
                            if last_seg { after_step.to_string() } else { "i+1".to_string() },
                        ]);
                    }
                }
            }
        }
        rows.push(["end of path".into(), "-".into(), "-".into(), "-".into(), "-".into()]);
        Ok(rows)
    }
}

fn before_last(c: Count) -> String {
    match c {
        Count::Fixed(n) => n.saturating_sub(1).to_string(),
        Count::DyMinus1 => "dy-2".into(),
        Count::DxMinusDyMinus1 => "dx-dy-2".into(),
        Count::DxMinus2 => "dx-3".into(),
    }
}

/// Descriptor for the first move of path `path_index` from `source` to `dest`.
pub fn initial_descriptor(source: Cell, dest: Cell, path_index: u8) -> Result<RoutingDescriptor, DescriptorError> {
    let shape = RouteShape::of(source, dest).ok_or(PathError::SameCell(source))?;
    let table = RoutingTable::global();
    let phases = table.phases(shape.case.kind, path_index)?;
    match RoutingTable::first_from(phases, 0, shape.dx, shape.dy) {
        NextStep::Continue { phase, step } => Ok(RoutingDescriptor {
            case: shape.case,
            path: path_index,
            phase,
            step,
            dx: shape.dx,
            dy: shape.dy,
        }),
        // every path has a non-empty source exit phase
        NextStep::EndOfPath => unreachable!("path without moves"),
    }
}

pub fn lookup(desc: &RoutingDescriptor) -> Result<RoutingTableEntry, DescriptorError> {
    RoutingTable::global().lookup(desc)
}

/// Applies the descriptor's move at `current` and returns the next cell
/// together with the forwarded descriptor, or `Delivered` once the final
/// move has been taken. Grid bounds are not checked here.
pub fn next_cell(current: Cell, desc: &RoutingDescriptor) -> Result<(Cell, Hop), DescriptorError> {
    let entry = lookup(desc)?;
    let cell = current.step(desc.case.symmetry.apply(entry.next_move));
    let hop = match entry.next {
        NextStep::Continue { phase, step } => Hop::Forward(RoutingDescriptor { phase, step, ..*desc }),
        NextStep::EndOfPath => Hop::Delivered,
    };
    Ok((cell, hop))
}

/// Four-byte wire form: `[case | flags << 3][path][phase][step]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WireDescriptor(pub [u8; 4]);

impl WireDescriptor {
    pub fn case_number(&self) -> u8 {
        self.0[0] & 0b111
    }

    pub fn symmetry(&self) -> Symmetry {
        Symmetry::from_bits((self.0[0] >> 3) & 0b111)
    }

    pub fn path(&self) -> u8 {
        self.0[1]
    }

    pub fn phase(&self) -> u8 {
        self.0[2]
    }

    pub fn step(&self) -> u8 {
        self.0[3]
    }
}

impl fmt::Display for WireDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{}/{:03b}, {}, {}, {}>",
            self.case_number(),
            self.symmetry().bits(),
            self.path(),
            self.phase(),
            self.step()
        )
    }
}

impl RoutingDescriptor {
    pub fn to_wire(&self) -> Result<WireDescriptor, DescriptorError> {
        let step = u8::try_from(self.step).map_err(|_| DescriptorError::StepOverflow(self.step))?;
        Ok(WireDescriptor([
            self.case.kind.number() | self.case.symmetry.bits() << 3,
            self.path,
            self.phase,
            step,
        ]))
    }

    /// Rebuilds a descriptor from its wire form, recomputing the deltas
    /// from the route endpoints.
    pub fn from_wire(w: WireDescriptor, source: Cell, dest: Cell) -> Result<Self, DescriptorError> {
        let kind = CaseKind::from_number(w.case_number()).ok_or(DescriptorError::Malformed(w.0))?;
        if w.0[0] >> 6 != 0 {
            return Err(DescriptorError::Malformed(w.0));
        }
        let shape = RouteShape::of(source, dest).ok_or(PathError::SameCell(source))?;
        if shape.case.kind != kind || shape.case.symmetry != w.symmetry() {
            return Err(DescriptorError::RouteMismatch { from: source, to: dest });
        }
        let desc = RoutingDescriptor {
            case: shape.case,
            path: w.path(),
            phase: w.phase(),
            step: w.step() as u32,
            dx: shape.dx,
            dy: shape.dy,
        };
        lookup(&desc)?;
        Ok(desc)
    }
}
