//! Geometry of the virtual `k x k` cell grid laid over a square region.
//!
//! A region of side `delta` meters is partitioned into square cells of side
//! `d`. Cells are addressed by integer column/row coordinates. The cell side
//! is chosen so that any node can reach every node in the eight surrounding
//! cells, which requires `r >= 2 * sqrt(2) * d`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack accepted when comparing a radio range against the
/// `2 * sqrt(2) * d` reach requirement. Ranges quoted to a few decimals
/// (e.g. `1414.2` for a 500 m cell) are treated as meeting it exactly.
pub const RANGE_SLACK: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid must have at least one cell per side")]
    NoCells,
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("range {r} m cannot reach all neighbor cells of side {d} m (needs {need:.3} m)")]
    RangeTooShort { r: f64, d: f64, need: f64 },
    #[error("{k} cells of side {d} m do not cover a region of side {delta} m")]
    RegionUncovered { k: u32, d: f64, delta: f64 },
    #[error("range {r} m over a {delta} m region needs {cells} cells per side, more than supported")]
    TooManyCells { delta: f64, r: f64, cells: f64 },
}

/// Parameters of the virtual grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Cells per side.
    pub k: u32,
    /// Cell side length in meters.
    pub d: f64,
    /// Side of the physical region in meters.
    pub delta: f64,
    /// Radio transmission range in meters.
    pub r: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64, GridError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(GridError::NonPositive { name, value })
    }
}

/// Minimum range for which every point of a cell reaches every point of
/// its neighbor cells.
pub fn required_range(d: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * d
}

/// Number of cells per side when the cell side is pushed to its maximum
/// `r / (2 sqrt 2)`. Rounded up so the grid still covers the region.
pub fn cells_from_range(delta: f64, r: f64) -> Result<u32, GridError> {
    let delta = positive("delta", delta)?;
    let r = positive("r", r)?;
    let exact = required_range(delta) / r;
    let cells = (exact * (1.0 - RANGE_SLACK)).ceil().max(1.0);
    if cells > u32::MAX as f64 {
        return Err(GridError::TooManyCells { delta, r, cells });
    }
    Ok(cells as u32)
}

impl GridConfig {
    pub fn new(k: u32, d: f64, delta: f64, r: f64) -> Result<Self, GridError> {
        let cfg = GridConfig { k, d, delta, r };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Grid with `k` cells per side exactly covering a region of side `delta`.
    pub fn square(k: u32, delta: f64, r: f64) -> Result<Self, GridError> {
        if k == 0 {
            return Err(GridError::NoCells);
        }
        Self::new(k, positive("delta", delta)? / k as f64, delta, r)
    }

    /// Grid with the largest admissible cells for range `r`.
    pub fn from_range(delta: f64, r: f64) -> Result<Self, GridError> {
        let k = cells_from_range(delta, r)?;
        Self::square(k, delta, r)
    }

    /// Unit-cell grid whose range exactly meets the neighbor-reach bound.
    pub fn unit(k: u32) -> Self {
        GridConfig {
            k,
            d: 1.0,
            delta: k as f64,
            r: required_range(1.0),
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.k == 0 {
            return Err(GridError::NoCells);
        }
        positive("d", self.d)?;
        positive("delta", self.delta)?;
        positive("r", self.r)?;
        let need = required_range(self.d);
        if self.r < need * (1.0 - RANGE_SLACK) {
            return Err(GridError::RangeTooShort {
                r: self.r,
                d: self.d,
                need,
            });
        }
        if (self.k as f64) * self.d < self.delta * (1.0 - 1e-12) {
            return Err(GridError::RegionUncovered {
                k: self.k,
                d: self.d,
                delta: self.delta,
            });
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        (self.k as usize) * (self.k as usize)
    }

    pub fn contains(&self, c: Cell) -> bool {
        let k = self.k as i64;
        (0..k).contains(&(c.x as i64)) && (0..k).contains(&(c.y as i64))
    }

    /// Cell holding a position. Positions on the closed upper edge of the
    /// region fall into the last row/column.
    pub fn cell_of(&self, pos: Position) -> Cell {
        let last = self.k as i64 - 1;
        let axis = |v: f64| ((v / self.d).floor() as i64).clamp(0, last) as i32;
        Cell::new(axis(pos.x), axis(pos.y))
    }

    /// Bounded move: `None` if the result leaves the grid.
    pub fn step(&self, c: Cell, m: Move) -> Option<Cell> {
        let next = c.step(m);
        self.contains(next).then_some(next)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let k = self.k as i32;
        (0..k).flat_map(move |y| (0..k).map(move |x| Cell::new(x, y)))
    }

    /// Dense row-major index of an in-grid cell.
    pub fn index(&self, c: Cell) -> Option<usize> {
        self.contains(c)
            .then(|| c.y as usize * self.k as usize + c.x as usize)
    }

    pub fn center(&self, c: Cell) -> Position {
        Position::new((c.x as f64 + 0.5) * self.d, (c.y as f64 + 0.5) * self.d)
    }

    /// Neighbor cells of `c` that lie inside the grid.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        Move::ALL.into_iter().filter_map(move |m| self.step(c, m))
    }
}

/// Integer coordinates of a grid cell. Coordinates may be negative or
/// exceed the grid while a path is being expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn step(self, m: Move) -> Cell {
        let (dx, dy) = m.delta();
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn chebyshev(self, other: Cell) -> u32 {
        (self.x - other.x)
            .unsigned_abs()
            .max((self.y - other.y).unsigned_abs())
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        (self.x - other.x).unsigned_abs() + (self.y - other.y).unsigned_abs()
    }

    /// The move leading from `self` to an adjacent cell.
    pub fn move_to(self, other: Cell) -> Option<Move> {
        Move::from_delta(other.x - self.x, other.y - self.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("expected a cell as `x,y`, got `{0}`")]
pub struct ParseCellError(String);

impl FromStr for Cell {
    type Err = ParseCellError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseCellError(s.to_string());
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (x, y) = t.split_once(',').ok_or_else(err)?;
        Ok(Cell::new(
            x.trim().parse().map_err(|_| err())?,
            y.trim().parse().map_err(|_| err())?,
        ))
    }
}

/// True iff the cells share a side or a corner. A cell is not its own
/// neighbor.
pub fn are_neighbor_cells(a: Cell, b: Cell) -> bool {
    a.chebyshev(b) == 1
}

/// One of the eight unit moves between adjacent cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    PlusXPlusY,
    PlusXMinusY,
    MinusXPlusY,
    MinusXMinusY,
}

impl Move {
    pub const ALL: [Move; 8] = [
        Move::PlusX,
        Move::MinusX,
        Move::PlusY,
        Move::MinusY,
        Move::PlusXPlusY,
        Move::PlusXMinusY,
        Move::MinusXPlusY,
        Move::MinusXMinusY,
    ];

    pub const fn delta(self) -> (i32, i32) {
        match self {
            Move::PlusX => (1, 0),
            Move::MinusX => (-1, 0),
            Move::PlusY => (0, 1),
            Move::MinusY => (0, -1),
            Move::PlusXPlusY => (1, 1),
            Move::PlusXMinusY => (1, -1),
            Move::MinusXPlusY => (-1, 1),
            Move::MinusXMinusY => (-1, -1),
        }
    }

    pub fn from_delta(dx: i32, dy: i32) -> Option<Move> {
        Move::ALL.into_iter().find(|m| m.delta() == (dx, dy))
    }

    pub fn inverse(self) -> Move {
        let (dx, dy) = self.delta();
        Move::from_delta(-dx, -dy).expect("negated unit move")
    }

    /// Exchange the roles of the x and y axes.
    pub fn swap_axes(self) -> Move {
        let (dx, dy) = self.delta();
        Move::from_delta(dy, dx).expect("swapped unit move")
    }

    pub fn mirror_x(self) -> Move {
        let (dx, dy) = self.delta();
        Move::from_delta(-dx, dy).expect("mirrored unit move")
    }

    pub fn mirror_y(self) -> Move {
        let (dx, dy) = self.delta();
        Move::from_delta(dx, -dy).expect("mirrored unit move")
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Move::PlusX => "<+x>",
            Move::MinusX => "<-x>",
            Move::PlusY => "<+y>",
            Move::MinusY => "<-y>",
            Move::PlusXPlusY => "<+x,+y>",
            Move::PlusXMinusY => "<+x,-y>",
            Move::MinusXPlusY => "<-x,+y>",
            Move::MinusXMinusY => "<-x,-y>",
        };
        f.write_str(s)
    }
}

/// A point in the physical region, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}
