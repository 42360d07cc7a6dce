//! Cell-bucketed index for closed-disk neighbour queries.

use crate::grid::{Cell, GridConfig, Position};

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    grid: GridConfig,
    buckets: Vec<Vec<usize>>,
}

impl SpatialIndex {
    pub fn new(grid: GridConfig) -> Self {
        SpatialIndex {
            grid,
            buckets: vec![Vec::new(); grid.cell_count()],
        }
    }

    fn bucket(&mut self, c: Cell) -> &mut Vec<usize> {
        let i = self.grid.index(c).expect("indexed cell lies in the grid");
        &mut self.buckets[i]
    }

    pub fn insert(&mut self, node: usize, c: Cell) {
        self.bucket(c).push(node);
    }

    pub fn relocate(&mut self, node: usize, from: Cell, to: Cell) {
        if from != to {
            self.bucket(from).retain(|&n| n != node);
            self.insert(node, to);
        }
    }

    pub fn in_cell(&self, c: Cell) -> &[usize] {
        self.grid.index(c).map_or(&[], |i| &self.buckets[i])
    }

    /// Nodes at distance at most `r` from `center`, ascending by index.
    pub fn within(&self, center: Position, r: f64, positions: &[Position], out: &mut Vec<usize>) {
        out.clear();
        let c = self.grid.cell_of(center);
        let reach = (r / self.grid.d).ceil() as i32;
        let last = self.grid.k as i32 - 1;
        for y in (c.y - reach).max(0)..=(c.y + reach).min(last) {
            for x in (c.x - reach).max(0)..=(c.x + reach).min(last) {
                for &n in self.in_cell(Cell::new(x, y)) {
                    if positions[n].distance(center) <= r {
                        out.push(n);
                    }
                }
            }
        }
        out.sort_unstable();
    }
}
