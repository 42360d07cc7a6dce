//! Random-waypoint motion inside the square region `[0, delta]^2`.

use rand::{Rng, RngExt};

use crate::grid::Position;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leg {
    Moving { target: Position, speed: f64 },
    Paused { left: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWaypoint {
    pub delta: f64,
    pub speed: [f64; 2],
    pub pause: f64,
}

impl RandomWaypoint {
    fn next_leg<R: Rng>(&self, rng: &mut R) -> Leg {
        let target = Position::new(rng.random_range(0.0..=self.delta), rng.random_range(0.0..=self.delta));
        let [lo, hi] = self.speed;
        let speed = if lo < hi { rng.random_range(lo..=hi) } else { lo };
        Leg::Moving { target, speed }
    }

    pub fn start<R: Rng>(&self, rng: &mut R) -> Leg {
        self.next_leg(rng)
    }

    /// Advances `pos` by `dt` seconds along `leg`, drawing new waypoints as
    /// needed. A zero-speed leg never ends.
    pub fn advance<R: Rng>(&self, pos: Position, leg: &mut Leg, dt: f64, rng: &mut R) -> Position {
        let mut pos = pos;
        let mut left = dt;
        // bounded so degenerate zero-length legs cannot spin
        for _ in 0..64 {
            if left <= 0.0 {
                break;
            }
            match *leg {
                Leg::Paused { left: p } => {
                    if p > left {
                        *leg = Leg::Paused { left: p - left };
                        break;
                    }
                    left -= p;
                    *leg = self.next_leg(rng);
                }
                Leg::Moving { target, speed } => {
                    if speed <= 0.0 {
                        break;
                    }
                    let dist = pos.distance(target);
                    let reach = speed * left;
                    if reach < dist {
                        let f = reach / dist;
                        pos = Position::new(pos.x + (target.x - pos.x) * f, pos.y + (target.y - pos.y) * f);
                        break;
                    }
                    pos = target;
                    left -= dist / speed;
                    *leg = if self.pause > 0.0 {
                        Leg::Paused { left: self.pause }
                    } else {
                        self.next_leg(rng)
                    };
                }
            }
        }
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rwp(speed: f64, pause: f64) -> RandomWaypoint {
        RandomWaypoint {
            delta: 100.0,
            speed: [speed, speed],
            pause,
        }
    }

    #[test]
    fn zero_speed_stays_put() {
        let m = rwp(0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut leg = m.start(&mut rng);
        let p = Position::new(10.0, 20.0);
        assert_eq!(m.advance(p, &mut leg, 5.0, &mut rng), p);
    }

    #[test]
    fn straight_travel_at_constant_speed() {
        let m = rwp(2.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut leg = Leg::Moving {
            target: Position::new(50.0, 0.0),
            speed: 2.0,
        };
        let p = m.advance(Position::new(0.0, 0.0), &mut leg, 0.5, &mut rng);
        assert!((p.x - 1.0).abs() < 1e-12 && p.y == 0.0);
    }

    #[test]
    fn pauses_at_waypoint_then_moves_on() {
        let m = rwp(1.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let target = Position::new(1.0, 0.0);
        let mut leg = Leg::Moving { target, speed: 1.0 };
        let p = m.advance(Position::new(0.0, 0.0), &mut leg, 1.5, &mut rng);
        assert_eq!(p, target);
        assert!(matches!(leg, Leg::Paused { left } if (left - 1.5).abs() < 1e-12));
        let p = m.advance(p, &mut leg, 1.0, &mut rng);
        assert_eq!(p, target);
        let p = m.advance(p, &mut leg, 1.0, &mut rng);
        assert!(p != target);
        assert!(matches!(leg, Leg::Moving { .. }));
    }

    #[test]
    fn positions_stay_in_region() {
        let m = RandomWaypoint {
            delta: 50.0,
            speed: [0.5, 20.0],
            pause: 0.3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut leg = m.start(&mut rng);
        let mut p = Position::new(25.0, 25.0);
        for _ in 0..5000 {
            p = m.advance(p, &mut leg, 0.1, &mut rng);
            assert!((0.0..=50.0).contains(&p.x) && (0.0..=50.0).contains(&p.y));
        }
    }

    #[test]
    fn waypoints_spread_over_the_region() {
        // stationary distribution of random waypoint favours the centre but
        // still visits every quadrant
        let m = RandomWaypoint {
            delta: 100.0,
            speed: [5.0, 5.0],
            pause: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut leg = m.start(&mut rng);
        let mut p = Position::new(50.0, 50.0);
        let mut hist = [[0u32; 4]; 4];
        for _ in 0..40_000 {
            p = m.advance(p, &mut leg, 0.5, &mut rng);
            let i = ((p.x / 25.0) as usize).min(3);
            let j = ((p.y / 25.0) as usize).min(3);
            hist[i][j] += 1;
        }
        let centre = hist[1][1] + hist[1][2] + hist[2][1] + hist[2][2];
        let corners = hist[0][0] + hist[0][3] + hist[3][0] + hist[3][3];
        assert!(hist.iter().flatten().all(|&c| c > 0));
        assert!(centre > 2 * corners, "centre {centre} corners {corners}");
    }
}
