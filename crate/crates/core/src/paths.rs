//! Construction of the (up to) eight cell-disjoint paths between two cells.
//!
//! Every source/destination pair is reduced to one of four canonical shapes
//! with `dx >= dy >= 0` by optionally swapping the axes and mirroring each
//! axis. Each canonical shape has eight fixed move templates, grouped in
//! phases: source exit, diagonal run, straight run, destination entry. The
//! run lengths depend on the canonical deltas; everything else is constant.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, GridConfig, Move};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("source and destination are the same cell {0}")]
    SameCell(Cell),
    #[error("path index {0} is outside 1..=8")]
    BadPathIndex(u8),
    #[error("deltas ({dx},{dy}) do not match case {case}")]
    DeltaMismatch { case: u8, dx: u32, dy: u32 },
}

/// The four canonical source/destination shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseKind {
    /// `dx > dy >= 1`
    Skewed = 1,
    /// `dx >= 2, dy = 0`
    Straight = 2,
    /// `dx = 1, dy = 0`
    Adjacent = 3,
    /// `dx = dy >= 1`
    Diagonal = 4,
}

impl CaseKind {
    pub const ALL: [CaseKind; 4] = [
        CaseKind::Skewed,
        CaseKind::Straight,
        CaseKind::Adjacent,
        CaseKind::Diagonal,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<CaseKind> {
        CaseKind::ALL.into_iter().find(|c| c.number() == n)
    }

    /// Whether canonical deltas `dx >= dy >= 0` belong to this case.
    pub fn admits(self, dx: u32, dy: u32) -> bool {
        match self {
            CaseKind::Skewed => dx > dy && dy >= 1,
            CaseKind::Straight => dx >= 2 && dy == 0,
            CaseKind::Adjacent => dx == 1 && dy == 0,
            CaseKind::Diagonal => dx == dy && dx >= 1,
        }
    }

    fn of(dx: u32, dy: u32) -> CaseKind {
        debug_assert!(dx >= dy && dx > 0);
        match (dx, dy) {
            (1, 0) => CaseKind::Adjacent,
            (_, 0) => CaseKind::Straight,
            _ if dx == dy => CaseKind::Diagonal,
            _ => CaseKind::Skewed,
        }
    }
}

/// Axis swap and sign mirrors mapping a canonical path onto the real grid.
/// The swap is applied first, then the mirrors (which refer to real axes).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symmetry {
    pub swap: bool,
    pub mirror_x: bool,
    pub mirror_y: bool,
}

impl Symmetry {
    pub const IDENTITY: Symmetry = Symmetry {
        swap: false,
        mirror_x: false,
        mirror_y: false,
    };

    pub fn all() -> impl Iterator<Item = Symmetry> {
        (0u8..8).map(Symmetry::from_bits)
    }

    pub fn bits(self) -> u8 {
        self.swap as u8 | (self.mirror_x as u8) << 1 | (self.mirror_y as u8) << 2
    }

    pub fn from_bits(b: u8) -> Symmetry {
        Symmetry {
            swap: b & 1 != 0,
            mirror_x: b & 2 != 0,
            mirror_y: b & 4 != 0,
        }
    }

    /// Canonical move to real move.
    pub fn apply(self, m: Move) -> Move {
        let m = if self.swap { m.swap_axes() } else { m };
        let m = if self.mirror_x { m.mirror_x() } else { m };
        if self.mirror_y {
            m.mirror_y()
        } else {
            m
        }
    }

    /// Canonical offset to real offset.
    pub fn apply_offset(self, dx: i32, dy: i32) -> (i32, i32) {
        let (x, y) = if self.swap { (dy, dx) } else { (dx, dy) };
        (
            if self.mirror_x { -x } else { x },
            if self.mirror_y { -y } else { y },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseId {
    pub kind: CaseKind,
    pub symmetry: Symmetry,
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "case {}", self.kind.number())?;
        let s = self.symmetry;
        let flags: Vec<&str> = [
            (s.swap, "swap x/y"),
            (s.mirror_x, "mirror x"),
            (s.mirror_y, "mirror y"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        if !flags.is_empty() {
            write!(f, " [{}]", flags.join(", "))?;
        }
        Ok(())
    }
}

/// A classified source/destination pair: its case and canonical deltas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RouteShape {
    pub case: CaseId,
    pub dx: u32,
    pub dy: u32,
}

impl RouteShape {
    pub fn of(source: Cell, dest: Cell) -> Option<RouteShape> {
        let rdx = dest.x - source.x;
        let rdy = dest.y - source.y;
        if rdx == 0 && rdy == 0 {
            return None;
        }
        let (ax, ay) = (rdx.unsigned_abs(), rdy.unsigned_abs());
        let swap = ay > ax;
        let (dx, dy) = if swap { (ay, ax) } else { (ax, ay) };
        Some(RouteShape {
            case: CaseId {
                kind: CaseKind::of(dx, dy),
                symmetry: Symmetry {
                    swap,
                    mirror_x: rdx < 0,
                    mirror_y: rdy < 0,
                },
            },
            dx,
            dy,
        })
    }
}

/// Case of a source/destination pair; `None` when they coincide.
pub fn classify(source: Cell, dest: Cell) -> Option<CaseId> {
    RouteShape::of(source, dest).map(|s| s.case)
}

/// Position of a group of moves along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhaseKind {
    SourceExit = 1,
    Diagonal = 2,
    /// Horizontal, or vertical when the axes are swapped.
    Straight = 3,
    DestinationEntry = 4,
}

impl PhaseKind {
    pub const ALL: [PhaseKind; 4] = [
        PhaseKind::SourceExit,
        PhaseKind::Diagonal,
        PhaseKind::Straight,
        PhaseKind::DestinationEntry,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<PhaseKind> {
        PhaseKind::ALL.into_iter().find(|p| p.number() == n)
    }
}

/// Repetition count of a template segment, possibly depending on the
/// canonical deltas. Non-positive values expand to no moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Fixed(u32),
    DyMinus1,
    DxMinusDyMinus1,
    DxMinus2,
}

impl Count {
    pub fn eval(self, dx: u32, dy: u32) -> u32 {
        let (dx, dy) = (dx as i64, dy as i64);
        let v = match self {
            Count::Fixed(n) => n as i64,
            Count::DyMinus1 => dy - 1,
            Count::DxMinusDyMinus1 => dx - dy - 1,
            Count::DxMinus2 => dx - 2,
        };
        v.max(0) as u32
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Fixed(n) => write!(f, "{n}"),
            Count::DyMinus1 => f.write_str("dy-1"),
            Count::DxMinusDyMinus1 => f.write_str("dx-dy-1"),
            Count::DxMinus2 => f.write_str("dx-2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub mv: Move,
    pub count: Count,
}

/// A canonical path template: phases in order, each a list of segments.
pub type Template = &'static [(PhaseKind, &'static [Segment])];

const fn one(mv: Move) -> Segment {
    Segment {
        mv,
        count: Count::Fixed(1),
    }
}

const fn rep(mv: Move, n: u32) -> Segment {
    Segment {
        mv,
        count: Count::Fixed(n),
    }
}

const fn var(mv: Move, count: Count) -> Segment {
    Segment { mv, count }
}

use Move::{
    MinusX as NX, MinusXMinusY as NXNY, MinusXPlusY as NXPY, MinusY as NY, PlusX as PX,
    PlusXMinusY as PXNY, PlusXPlusY as PXPY, PlusY as PY,
};
use PhaseKind::{DestinationEntry as ENTRY, Diagonal as DIAG, SourceExit as EXIT, Straight as RUN};

const SKEW_DIAG: &[Segment] = &[var(PXPY, Count::DyMinus1)];
const SKEW_RUN: &[Segment] = &[var(PX, Count::DxMinusDyMinus1)];
const STRAIGHT_RUN: &[Segment] = &[var(PX, Count::DxMinus2)];

static SKEWED: [Template; 8] = [
    &[(EXIT, &[one(PXPY)]), (DIAG, SKEW_DIAG), (RUN, SKEW_RUN), (ENTRY, &[one(PX)])],
    &[(EXIT, &[one(PX)]), (DIAG, SKEW_DIAG), (RUN, SKEW_RUN), (ENTRY, &[one(PXPY)])],
    &[(EXIT, &[one(PY), one(PXPY)]), (DIAG, SKEW_DIAG), (RUN, SKEW_RUN), (ENTRY, &[one(PXNY)])],
    &[(EXIT, &[one(PXNY)]), (DIAG, SKEW_DIAG), (RUN, SKEW_RUN), (ENTRY, &[one(PXPY), one(PY)])],
    &[
        (EXIT, &[one(NXPY), rep(PXPY, 2)]),
        (DIAG, SKEW_DIAG),
        (RUN, SKEW_RUN),
        (ENTRY, &[one(PXNY), one(NY)]),
    ],
    &[
        (EXIT, &[one(NY), one(PXNY)]),
        (DIAG, SKEW_DIAG),
        (RUN, SKEW_RUN),
        (ENTRY, &[rep(PXPY, 2), one(NXPY)]),
    ],
    &[
        (EXIT, &[one(NX), one(NXPY), rep(PXPY, 3)]),
        (DIAG, SKEW_DIAG),
        (RUN, SKEW_RUN),
        (ENTRY, &[rep(PXNY, 2), one(NXNY)]),
    ],
    &[
        (EXIT, &[one(NXNY), rep(PXNY, 2)]),
        (DIAG, SKEW_DIAG),
        (RUN, SKEW_RUN),
        (ENTRY, &[rep(PXPY, 3), one(NXPY), one(NX)]),
    ],
];

static STRAIGHT: [Template; 8] = [
    &[(EXIT, &[one(PX)]), (RUN, STRAIGHT_RUN), (ENTRY, &[one(PX)])],
    &[(EXIT, &[one(PXPY)]), (RUN, STRAIGHT_RUN), (ENTRY, &[one(PXNY)])],
    &[(EXIT, &[one(PXNY)]), (RUN, STRAIGHT_RUN), (ENTRY, &[one(PXPY)])],
    &[(EXIT, &[one(PY), one(PXPY)]), (RUN, STRAIGHT_RUN), (ENTRY, &[one(PXNY), one(NY)])],
    &[(EXIT, &[one(NY), one(PXNY)]), (RUN, STRAIGHT_RUN), (ENTRY, &[one(PXPY), one(PY)])],
    &[
        (EXIT, &[one(NXPY), rep(PXPY, 2)]),
        (RUN, STRAIGHT_RUN),
        (ENTRY, &[rep(PXNY, 2), one(NXNY)]),
    ],
    &[
        (EXIT, &[one(NXNY), rep(PXNY, 2)]),
        (RUN, STRAIGHT_RUN),
        (ENTRY, &[rep(PXPY, 2), one(NXPY)]),
    ],
    &[
        (EXIT, &[one(NX), one(NXPY), rep(PXPY, 3)]),
        (RUN, STRAIGHT_RUN),
        (ENTRY, &[rep(PXNY, 3), one(NXNY), one(NX)]),
    ],
];

static ADJACENT: [Template; 8] = [
    &[(EXIT, &[one(PX)])],
    &[(EXIT, &[one(PXPY)]), (ENTRY, &[one(NY)])],
    &[(EXIT, &[one(PXNY)]), (ENTRY, &[one(PY)])],
    &[(EXIT, &[one(PY)]), (ENTRY, &[one(PXNY)])],
    &[(EXIT, &[one(NY)]), (ENTRY, &[one(PXPY)])],
    &[(EXIT, &[one(NXPY), one(PXPY)]), (ENTRY, &[one(PX), one(PXNY), one(NXNY)])],
    &[(EXIT, &[one(NXNY), one(PXNY)]), (ENTRY, &[one(PX), one(PXPY), one(NXPY)])],
    &[
        (EXIT, &[one(NX), one(NXPY), rep(PXPY, 2)]),
        (ENTRY, &[one(PX), rep(PXNY, 2), one(NXNY), one(NX)]),
    ],
];

static DIAGONAL: [Template; 8] = [
    &[(EXIT, &[one(PXPY)]), (DIAG, SKEW_DIAG)],
    &[(EXIT, &[one(PX)]), (DIAG, SKEW_DIAG), (ENTRY, &[one(PY)])],
    &[(EXIT, &[one(PY)]), (DIAG, SKEW_DIAG), (ENTRY, &[one(PX)])],
    &[(EXIT, &[one(PXNY)]), (DIAG, SKEW_DIAG), (ENTRY, &[one(PXPY), one(NXPY)])],
    &[(EXIT, &[one(NXPY), one(PXPY)]), (DIAG, SKEW_DIAG), (ENTRY, &[one(PXNY)])],
    &[
        (EXIT, &[one(NY), one(PXNY)]),
        (DIAG, SKEW_DIAG),
        (ENTRY, &[rep(PXPY, 2), one(NXPY), one(NX)]),
    ],
    &[
        (EXIT, &[one(NX), one(NXPY), rep(PXPY, 2)]),
        (DIAG, SKEW_DIAG),
        (ENTRY, &[one(PXNY), one(NY)]),
    ],
    &[
        (EXIT, &[one(NXNY), rep(PXNY, 2)]),
        (DIAG, SKEW_DIAG),
        (ENTRY, &[rep(PXPY, 3), rep(NXPY, 2), one(NXNY)]),
    ],
];

/// Canonical template of path `path` (1..=8) for a case.
pub fn template(kind: CaseKind, path: u8) -> Result<Template, PathError> {
    if !(1..=8).contains(&path) {
        return Err(PathError::BadPathIndex(path));
    }
    let table = match kind {
        CaseKind::Skewed => &SKEWED,
        CaseKind::Straight => &STRAIGHT,
        CaseKind::Adjacent => &ADJACENT,
        CaseKind::Diagonal => &DIAGONAL,
    };
    Ok(table[path as usize - 1])
}

/// One phase of an instantiated path: real moves with repetition counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub kind: PhaseKind,
    pub moves: Vec<(Move, u32)>,
}

impl Phase {
    pub fn len(&self) -> u32 {
        self.moves.iter().map(|&(_, n)| n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One of the eight paths for a specific source/destination pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSpec {
    pub case: CaseId,
    pub path_index: u8,
    pub dx: u32,
    pub dy: u32,
    pub phases: Vec<Phase>,
}

impl PathSpec {
    fn instantiate(shape: RouteShape, path_index: u8) -> Result<PathSpec, PathError> {
        let t = template(shape.case.kind, path_index)?;
        let phases = t
            .iter()
            .map(|&(kind, segs)| Phase {
                kind,
                moves: segs
                    .iter()
                    .map(|s| (shape.case.symmetry.apply(s.mv), s.count.eval(shape.dx, shape.dy)))
                    .collect(),
            })
            .collect();
        Ok(PathSpec {
            case: shape.case,
            path_index,
            dx: shape.dx,
            dy: shape.dy,
            phases,
        })
    }

    /// Flattened move sequence.
    pub fn moves(&self) -> impl Iterator<Item = Move> + '_ {
        self.phases
            .iter()
            .flat_map(|p| p.moves.iter())
            .flat_map(|&(m, n)| std::iter::repeat_n(m, n as usize))
    }

    pub fn len(&self) -> u32 {
        self.phases.iter().map(Phase::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first_move(&self) -> Option<Move> {
        self.moves().next()
    }
}

impl fmt::Display for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phases: Vec<String> = self
            .phases
            .iter()
            .map(|p| {
                p.moves
                    .iter()
                    .map(|&(m, n)| if n == 1 { m.to_string() } else { format!("{m}^{n}") })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        f.write_str(&phases.join(" ; "))
    }
}

/// The eight paths from `source` to `dest`, in path-index order.
pub fn build_paths(source: Cell, dest: Cell) -> Result<Vec<PathSpec>, PathError> {
    let shape = RouteShape::of(source, dest).ok_or(PathError::SameCell(source))?;
    (1..=8).map(|i| PathSpec::instantiate(shape, i)).collect()
}

/// A single path from `source` to `dest`.
pub fn build_path(source: Cell, dest: Cell, path_index: u8) -> Result<PathSpec, PathError> {
    let shape = RouteShape::of(source, dest).ok_or(PathError::SameCell(source))?;
    PathSpec::instantiate(shape, path_index)
}

/// Cell sequence of a path, source first and destination last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedPath {
    pub cells: Vec<Cell>,
}

impl ExpandedPath {
    /// Number of moves.
    pub fn len(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn source(&self) -> Cell {
        self.cells[0]
    }

    pub fn dest(&self) -> Cell {
        *self.cells.last().expect("expanded path has a source")
    }

    /// Cells strictly between the endpoints.
    pub fn interior(&self) -> &[Cell] {
        if self.cells.len() < 2 {
            &[]
        } else {
            &self.cells[1..self.cells.len() - 1]
        }
    }

    pub fn fits(&self, cfg: &GridConfig) -> bool {
        self.cells.iter().all(|&c| cfg.contains(c))
    }
}

pub fn expand(spec: &PathSpec, source: Cell) -> ExpandedPath {
    let mut cells = Vec::with_capacity(spec.len() as usize + 1);
    cells.push(source);
    let mut here = source;
    for m in spec.moves() {
        here = here.step(m);
        cells.push(here);
    }
    ExpandedPath { cells }
}

/// In-grid paths from `source` to `dest`, ascending by path index. Paths
/// that would leave the grid are dropped, never rerouted.
pub fn feasible_paths(
    source: Cell,
    dest: Cell,
    cfg: &GridConfig,
) -> Result<Vec<(u8, ExpandedPath)>, PathError> {
    Ok(build_paths(source, dest)?
        .iter()
        .map(|spec| (spec.path_index, expand(spec, source)))
        .filter(|(_, p)| p.fits(cfg))
        .collect())
}

/// A shared cell between two paths, excluding their common endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overlap {
    pub first: usize,
    pub second: usize,
    pub cell: Cell,
}

/// Checks that no two paths share a cell other than the source and the
/// destination, and that no path revisits a cell. Returns the first
/// conflict found.
pub fn check_disjoint(paths: &[&ExpandedPath]) -> Result<(), Overlap> {
    let mut owner: std::collections::HashMap<Cell, usize> = std::collections::HashMap::new();
    for (i, p) in paths.iter().enumerate() {
        let (s, d) = (p.source(), p.dest());
        let mut mine = HashSet::new();
        for &c in p.interior() {
            if c == s || c == d || !mine.insert(c) {
                return Err(Overlap {
                    first: i,
                    second: i,
                    cell: c,
                });
            }
            if let Some(&j) = owner.get(&c) {
                return Err(Overlap {
                    first: j,
                    second: i,
                    cell: c,
                });
            }
            owner.insert(c, i);
        }
    }
    Ok(())
}

/// Closed-form length of path `path_index` for canonical deltas.
///
/// Case 4 rows 6 and 7 are listed as `dy + 4`; their move templates
/// actually expand to `dy + 5` moves. The closed-form value is returned
/// here; [`PathSpec::len`] gives the expanded length.
pub fn path_length(kind: CaseKind, path_index: u8, dx: u32, dy: u32) -> Result<u32, PathError> {
    const EXTRA: [[u32; 8]; 4] = [
        [0, 0, 1, 1, 3, 3, 6, 6],
        [0, 0, 0, 2, 2, 4, 4, 8],
        [0, 1, 1, 1, 1, 4, 4, 8],
        [0, 1, 1, 2, 2, 4, 4, 8],
    ];
    if !(1..=8).contains(&path_index) {
        return Err(PathError::BadPathIndex(path_index));
    }
    if !kind.admits(dx, dy) {
        return Err(PathError::DeltaMismatch {
            case: kind.number(),
            dx,
            dy,
        });
    }
    let base = if kind == CaseKind::Diagonal { dy } else { dx };
    Ok(base + EXTRA[kind as usize - 1][path_index as usize - 1])
}

/// Canonical `(dx, dy)` pairs for a case with `1 <= dx, dy <= max` (or
/// `dy = 0` for the axis-aligned cases).
pub fn canonical_deltas(kind: CaseKind, max: u32) -> Vec<(u32, u32)> {
    match kind {
        CaseKind::Skewed => (2..=max)
            .flat_map(|dx| (1..dx).map(move |dy| (dx, dy)))
            .collect(),
        CaseKind::Straight => (2..=max).map(|dx| (dx, 0)).collect(),
        CaseKind::Adjacent => vec![(1, 0)],
        CaseKind::Diagonal => (1..=max).map(|d| (d, d)).collect(),
    }
}

/// Real destination offset for canonical deltas under a symmetry.
pub fn real_offset(sym: Symmetry, dx: u32, dy: u32) -> (i32, i32) {
    sym.apply_offset(dx as i32, dy as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn classify_examples() {
        let id = classify(c(0, 0), c(5, 2)).unwrap();
        assert_eq!(id.kind, CaseKind::Skewed);
        assert_eq!(id.symmetry, Symmetry::IDENTITY);
        assert_eq!(classify(c(3, 3), c(3, 3)), None);
        let id = classify(c(5, 2), c(0, 0)).unwrap();
        assert_eq!(id.kind, CaseKind::Skewed);
        assert!(id.symmetry.mirror_x && id.symmetry.mirror_y && !id.symmetry.swap);
    }

    #[test]
    fn classify_swaps_and_axis_cases() {
        let id = classify(c(0, 0), c(2, 5)).unwrap();
        assert_eq!(id.kind, CaseKind::Skewed);
        assert!(id.symmetry.swap);
        let id = classify(c(0, 0), c(0, 3)).unwrap();
        assert_eq!(id.kind, CaseKind::Straight);
        assert!(id.symmetry.swap);
        assert_eq!(classify(c(4, 4), c(4, 3)).unwrap().kind, CaseKind::Adjacent);
        assert_eq!(classify(c(4, 4), c(1, 1)).unwrap().kind, CaseKind::Diagonal);
    }

    #[test]
    fn skewed_path_one_phases() {
        let spec = build_path(c(0, 0), c(5, 2), 1).unwrap();
        let phases: Vec<_> = spec.phases.iter().map(|p| (p.kind, p.moves.clone())).collect();
        assert_eq!(
            phases,
            vec![
                (PhaseKind::SourceExit, vec![(Move::PlusXPlusY, 1)]),
                (PhaseKind::Diagonal, vec![(Move::PlusXPlusY, 1)]),
                (PhaseKind::Straight, vec![(Move::PlusX, 2)]),
                (PhaseKind::DestinationEntry, vec![(Move::PlusX, 1)]),
            ]
        );
        assert_eq!(
            expand(&spec, c(0, 0)).cells,
            vec![c(0, 0), c(1, 1), c(2, 2), c(3, 2), c(4, 2), c(5, 2)]
        );
    }

    #[test]
    fn adjacent_and_diagonal_examples() {
        let spec = build_path(c(0, 0), c(1, 0), 1).unwrap();
        assert_eq!(spec.moves().collect::<Vec<_>>(), vec![Move::PlusX]);
        assert_eq!(expand(&build_path(c(2, 2), c(3, 2), 1).unwrap(), c(2, 2)).cells, vec![c(2, 2), c(3, 2)]);
        let spec = build_path(c(0, 0), c(3, 3), 1).unwrap();
        assert_eq!(spec.to_string(), "<+x,+y> ; <+x,+y>^2");
        assert_eq!(build_path(c(0, 4), c(1, 4), 8).unwrap().len(), 9);
    }

    #[test]
    fn same_cell_rejected() {
        assert_eq!(build_paths(c(3, 3), c(3, 3)), Err(PathError::SameCell(c(3, 3))));
    }

    #[test]
    fn mirrored_moves_substituted() {
        let spec = build_path(c(5, 0), c(0, 2), 1).unwrap();
        assert_eq!(spec.first_move(), Some(Move::MinusXPlusY));
        let spec = build_path(c(0, 0), c(2, 5), 2).unwrap();
        assert_eq!(spec.first_move(), Some(Move::PlusY));
    }

    #[test]
    fn zero_length_runs() {
        // dx = dy + 1: empty straight run; dy = 1: empty diagonal run
        let spec = build_path(c(0, 0), c(2, 1), 1).unwrap();
        assert!(spec.phases[1].is_empty() && spec.phases[2].is_empty());
        assert_eq!(expand(&spec, c(0, 0)).dest(), c(2, 1));
        let spec = build_path(c(0, 0), c(2, 0), 1).unwrap();
        assert!(spec.phases[1].is_empty());
        assert_eq!(spec.len(), 2);
    }

    #[test]
    fn feasibility_near_borders() {
        let cfg = GridConfig::unit(10);
        let f = feasible_paths(c(0, 0), c(5, 2), &cfg).unwrap();
        assert!(f.len() <= 4);
        assert!(f.iter().all(|(i, _)| *i <= 4));
        let cfg = GridConfig::unit(15);
        assert_eq!(feasible_paths(c(4, 4), c(9, 6), &cfg).unwrap().len(), 8);
        // In a 2x2 grid the two single-detour paths through (1,1) and (0,1)
        // also fit.
        let cfg = GridConfig::unit(2);
        let f = feasible_paths(c(0, 0), c(1, 0), &cfg).unwrap();
        assert_eq!(f.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![1, 2, 4]);
    }

    #[test]
    fn closed_form_lengths() {
        assert_eq!(path_length(CaseKind::Skewed, 1, 5, 2), Ok(5));
        assert_eq!(path_length(CaseKind::Straight, 8, 4, 0), Ok(12));
        assert_eq!(path_length(CaseKind::Diagonal, 5, 3, 3), Ok(5));
        assert!(path_length(CaseKind::Diagonal, 5, 3, 2).is_err());
        assert!(path_length(CaseKind::Skewed, 9, 5, 2).is_err());
    }

    /// Hand-derived expanded lengths per template row (exit + runs + entry).
    fn hand_lengths(kind: CaseKind, dx: u32, dy: u32) -> [u32; 8] {
        match kind {
            CaseKind::Skewed => [dx, dx, dx + 1, dx + 1, dx + 3, dx + 3, dx + 6, dx + 6],
            CaseKind::Straight => [dx, dx, dx, dx + 2, dx + 2, dx + 4, dx + 4, dx + 8],
            CaseKind::Adjacent => [1, 2, 2, 2, 2, 5, 5, 9],
            CaseKind::Diagonal => [dy, dy + 1, dy + 1, dy + 2, dy + 2, dy + 5, dy + 5, dy + 8],
        }
    }

    #[test]
    fn expanded_lengths_match_hand_count() {
        for kind in CaseKind::ALL {
            for (dx, dy) in canonical_deltas(kind, 12) {
                let paths = build_paths(c(0, 0), c(dx as i32, dy as i32)).unwrap();
                let got: Vec<u32> = paths.iter().map(PathSpec::len).collect();
                assert_eq!(got, hand_lengths(kind, dx, dy), "{kind:?} ({dx},{dy})");
            }
        }
    }

    #[test]
    fn diagonal_rows_six_and_seven_exceed_closed_form_length() {
        for d in 1..=12 {
            for path in [6u8, 7] {
                let spec = build_path(c(0, 0), c(d, d), path).unwrap();
                let table = path_length(CaseKind::Diagonal, path, d as u32, d as u32).unwrap();
                assert_eq!(spec.len(), table + 1);
            }
        }
    }

    #[test]
    fn disjoint_endpoint_correct_no_backtrack() {
        for kind in CaseKind::ALL {
            for (dx, dy) in canonical_deltas(kind, 12) {
                for sym in Symmetry::all() {
                    let (ox, oy) = real_offset(sym, dx, dy);
                    if sym.swap && (dx == dy) {
                        continue;
                    }
                    let (s, d) = (c(20, 20), c(20 + ox, 20 + oy));
                    let shape = RouteShape::of(s, d).unwrap();
                    assert_eq!((shape.case.kind, shape.dx, shape.dy), (kind, dx, dy));
                    let specs = build_paths(s, d).unwrap();
                    let expanded: Vec<_> = specs.iter().map(|p| expand(p, s)).collect();
                    for (spec, e) in specs.iter().zip(&expanded) {
                        assert_eq!(e.dest(), d);
                        let mv: Vec<Move> = spec.moves().collect();
                        assert!(mv.windows(2).all(|w| w[1] != w[0].inverse()));
                        assert!(e.cells.windows(2).all(|w| crate::grid::are_neighbor_cells(w[0], w[1])));
                    }
                    let refs: Vec<&ExpandedPath> = expanded.iter().collect();
                    assert_eq!(check_disjoint(&refs), Ok(()), "{kind:?} ({dx},{dy}) {sym:?}");
                }
            }
        }
    }

    #[test]
    fn disjointness_check_reports_overlap() {
        let a = ExpandedPath { cells: vec![c(0, 0), c(1, 1), c(2, 0)] };
        let b = ExpandedPath { cells: vec![c(0, 0), c(1, 1), c(2, 0)] };
        let err = check_disjoint(&[&a, &b]).unwrap_err();
        assert_eq!((err.first, err.second, err.cell), (0, 1, c(1, 1)));
    }
}
