//! Per-node protocol state machine: beaconing and gateway election,
//! cell-exit notification with parity-pruned flooding, and parallel data
//! routing at sources and gateways.
//!
//! Every handler is a plain method on [`NodeState`]; the caller owns the
//! clock and the radio. Time is in seconds.

mod dedup;
mod packet;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::descriptors::{self, DescriptorError, Hop};
use crate::grid::{are_neighbor_cells, Cell, GridConfig, Position};
use crate::paths::{self, PathError};

pub use dedup::SeqWindow;
pub use packet::{
    decode, Beacon, CellExit, Frame, GatewayRoute, GatewayRouteFrame, Packet, PacketClass, WireError,
    BEACON_LEN, CELL_EXIT_LEN, GATEWAY_ROUTE_LEN,
};

pub type NodeId = u32;
pub type Energy = u32;

/// Upper bound on parallel paths between two cells.
pub const MAX_PATHS: u8 = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RouteError {
    #[error("no location known for node {0}")]
    UnknownDestination(NodeId),
    #[error("at least one path must be requested")]
    NoPathsRequested,
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub beacon_period: f64,
    /// Gateway entries older than this many beacon periods are ignored.
    pub gateway_ttl_periods: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            beacon_period: 1.0,
            gateway_ttl_periods: 3.0,
        }
    }
}

impl ProtocolConfig {
    pub fn gateway_ttl(&self) -> f64 {
        self.beacon_period * self.gateway_ttl_periods
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatewayEntry {
    pub node: NodeId,
    pub energy: Energy,
    pub refreshed: f64,
}

/// Result of receiving a cell-exit broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BroadcastOutcome {
    Duplicate,
    Accepted { forward: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DispatchOutcome {
    Send(GatewayRoute),
    /// No gateway is known for the first-hop cell; the payload is lost.
    NoGateway(Cell),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub payload: u32,
    pub path: u8,
    pub outcome: DispatchOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceRoute {
    /// Destination shares the source's cell.
    Direct { dest: NodeId, payloads: Vec<u32> },
    Parallel { paths: Vec<u8>, dispatches: Vec<Dispatch> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatewayAction {
    /// Hand the payload to `dest` if it is in `cell`.
    Deliver { dest: NodeId, cell: Cell },
    Forward(GatewayRoute),
    NoGateway(Cell),
    /// The next hop would leave the grid or overshoot the destination.
    Unreachable(Cell),
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub pos: Position,
    pub cell: Cell,
    pub energy: Energy,
    seq: u32,
    location_table: BTreeMap<NodeId, Cell>,
    gateway_table: BTreeMap<Cell, GatewayEntry>,
    seen: BTreeMap<NodeId, SeqWindow>,
    cfg: ProtocolConfig,
}

impl NodeState {
    pub fn new(id: NodeId, pos: Position, cell: Cell, energy: Energy, cfg: ProtocolConfig) -> Self {
        NodeState {
            id,
            pos,
            cell,
            energy,
            seq: 0,
            location_table: BTreeMap::from([(id, cell)]),
            gateway_table: BTreeMap::new(),
            seen: BTreeMap::new(),
            cfg,
        }
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn is_active(&self) -> bool {
        self.energy > 0
    }

    pub fn seq(&self) -> u32 {
        self.seq
    }

    pub fn location_of(&self, node: NodeId) -> Option<Cell> {
        self.location_table.get(&node).copied()
    }

    /// Installs a location entry without a broadcast, for bootstrapping.
    pub fn learn_location(&mut self, node: NodeId, cell: Cell) {
        if node != self.id {
            self.location_table.insert(node, cell);
        }
    }

    pub fn locations(&self) -> impl Iterator<Item = (NodeId, Cell)> + '_ {
        self.location_table.iter().map(|(&n, &c)| (n, c))
    }

    pub fn gateway_entries(&self) -> impl Iterator<Item = (Cell, GatewayEntry)> + '_ {
        self.gateway_table.iter().map(|(&c, &e)| (c, e))
    }

    /// Removes energy, saturating at zero. Returns the amount removed.
    pub fn spend(&mut self, cost: Energy) -> Energy {
        let taken = cost.min(self.energy);
        self.energy -= taken;
        taken
    }

    fn fresh(&self, e: &GatewayEntry, now: f64) -> bool {
        now - e.refreshed <= self.cfg.gateway_ttl()
    }

    /// Fresh gateway recorded for `cell`, if any.
    pub fn gateway_for(&self, cell: Cell, now: f64) -> Option<NodeId> {
        self.gateway_table
            .get(&cell)
            .filter(|e| self.fresh(e, now))
            .map(|e| e.node)
    }

    /// True when this node is the recorded gateway of its own cell, or when
    /// no fresh entry exists for it.
    pub fn is_gateway(&self, now: f64) -> bool {
        self.gateway_for(self.cell, now).is_none_or(|g| g == self.id)
    }

    pub fn prune_expired(&mut self, now: f64) {
        let ttl = self.cfg.gateway_ttl();
        self.gateway_table.retain(|_, e| now - e.refreshed <= ttl);
    }

    /// Periodic beacon. The node also records its own beacon, so its
    /// gateway table sees itself as a candidate.
    pub fn on_tick_beacon(&mut self, now: f64) -> Option<Beacon> {
        let b = self.beacon()?;
        self.on_beacon(&b, now);
        Some(b)
    }

    /// The beacon this node would send now, without recording it locally.
    pub fn beacon(&self) -> Option<Beacon> {
        self.is_active().then_some(Beacon {
            sender: self.id,
            energy: self.energy,
            cell: self.cell,
        })
    }

    /// Returns true when the gateway table changed.
    pub fn on_beacon(&mut self, b: &Beacon, now: f64) -> bool {
        if b.cell != self.cell && !are_neighbor_cells(b.cell, self.cell) {
            return false;
        }
        let ttl = self.cfg.gateway_ttl();
        let install = match self.gateway_table.get(&b.cell) {
            Some(e) if now - e.refreshed <= ttl => e.node == b.sender || b.energy > e.energy,
            _ => true,
        };
        if install {
            self.gateway_table.insert(
                b.cell,
                GatewayEntry {
                    node: b.sender,
                    energy: b.energy,
                    refreshed: now,
                },
            );
        }
        install
    }

    /// Moves the node; emits a cell-exit packet when the cell changes.
    pub fn relocate(&mut self, pos: Position, cell: Cell) -> Option<CellExit> {
        self.pos = pos;
        (cell != self.cell).then(|| self.on_cell_change(cell))
    }

    /// Records the new cell and returns the packet this node originates.
    pub fn on_cell_change(&mut self, new_cell: Cell) -> CellExit {
        self.cell = new_cell;
        self.seq = self.seq.wrapping_add(1);
        self.location_table.insert(self.id, new_cell);
        let id = self.id;
        self.gateway_table
            .retain(|&c, e| c == new_cell || (are_neighbor_cells(c, new_cell) && e.node != id));
        self.mark_seen(id, self.seq);
        CellExit {
            origin: id,
            new_cell,
            seq: self.seq,
        }
    }

    fn mark_seen(&mut self, origin: NodeId, seq: u32) -> bool {
        match self.seen.get_mut(&origin) {
            Some(w) => w.accept(seq),
            None => {
                self.seen.insert(origin, SeqWindow::new(seq));
                true
            }
        }
    }

    pub fn on_broadcast(&mut self, p: &CellExit, now: f64) -> BroadcastOutcome {
        if !self.mark_seen(p.origin, p.seq) {
            return BroadcastOutcome::Duplicate;
        }
        if p.origin != self.id {
            self.location_table.insert(p.origin, p.new_cell);
        }
        let forward = self.is_gateway(now) && self.cell.manhattan(p.new_cell).is_multiple_of(2);
        BroadcastOutcome::Accepted { forward }
    }

    /// Splits `payloads` round-robin over up to `n` feasible paths towards
    /// `dest`, in ascending path order.
    pub fn source_route(
        &self,
        dest: NodeId,
        payloads: &[u32],
        n: u8,
        grid: &GridConfig,
        now: f64,
    ) -> Result<SourceRoute, RouteError> {
        if n == 0 {
            return Err(RouteError::NoPathsRequested);
        }
        let dest_cell = self.location_of(dest).ok_or(RouteError::UnknownDestination(dest))?;
        if dest_cell == self.cell {
            return Ok(SourceRoute::Direct {
                dest,
                payloads: payloads.to_vec(),
            });
        }
        let feasible = paths::feasible_paths(self.cell, dest_cell, grid)?;
        let used = n.min(MAX_PATHS) as usize;
        let chosen: Vec<u8> = feasible.iter().take(used).map(|(i, _)| *i).collect();
        let mut dispatches = Vec::with_capacity(payloads.len());
        for (j, &payload) in payloads.iter().enumerate() {
            let path = chosen[j % chosen.len()];
            let desc = descriptors::initial_descriptor(self.cell, dest_cell, path)?;
            let (first, hop) = descriptors::next_cell(self.cell, &desc)?;
            let descriptor = match hop {
                Hop::Forward(next) => next,
                Hop::Delivered => desc,
            };
            let outcome = match self.gateway_for(first, now) {
                Some(gateway) => DispatchOutcome::Send(GatewayRoute {
                    gateway,
                    payload,
                    source: self.id,
                    dest,
                    source_cell: self.cell,
                    dest_cell,
                    at_cell: first,
                    descriptor,
                }),
                None => DispatchOutcome::NoGateway(first),
            };
            dispatches.push(Dispatch { payload, path, outcome });
        }
        Ok(SourceRoute::Parallel { paths: chosen, dispatches })
    }

    /// Handles a data packet addressed to this node as gateway of
    /// `p.at_cell`.
    pub fn on_gateway_route(&self, p: &GatewayRoute, grid: &GridConfig, now: f64) -> Result<GatewayAction, RouteError> {
        if p.at_cell == p.dest_cell {
            return Ok(GatewayAction::Deliver {
                dest: p.dest,
                cell: p.dest_cell,
            });
        }
        let (next, hop) = descriptors::next_cell(p.at_cell, &p.descriptor)?;
        let descriptor = match hop {
            Hop::Forward(d) => d,
            Hop::Delivered if next == p.dest_cell => p.descriptor,
            Hop::Delivered => return Ok(GatewayAction::Unreachable(next)),
        };
        if !grid.contains(next) {
            return Ok(GatewayAction::Unreachable(next));
        }
        Ok(match self.gateway_for(next, now) {
            Some(gateway) => GatewayAction::Forward(GatewayRoute {
                gateway,
                at_cell: next,
                descriptor,
                ..*p
            }),
            None => GatewayAction::NoGateway(next),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: NodeId, cell: (i32, i32), energy: Energy) -> NodeState {
        let c = Cell::new(cell.0, cell.1);
        NodeState::new(id, Position::new(c.x as f64 + 0.5, c.y as f64 + 0.5), c, energy, ProtocolConfig::default())
    }

    fn beacon(sender: NodeId, energy: Energy, cell: (i32, i32)) -> Beacon {
        Beacon {
            sender,
            energy,
            cell: Cell::new(cell.0, cell.1),
        }
    }

    #[test]
    fn beacon_copies_fields_and_inactive_nodes_are_silent() {
        let mut b = node(2, (3, 4), 80);
        assert_eq!(b.on_tick_beacon(0.0), Some(beacon(2, 80, (3, 4))));
        assert!(b.is_gateway(0.0));
        let mut dead = node(3, (3, 4), 0);
        assert_eq!(dead.on_tick_beacon(0.0), None);
    }

    #[test]
    fn higher_energy_takes_over_ties_keep_incumbent() {
        let mut a = node(1, (3, 4), 10);
        assert!(a.on_beacon(&beacon(7, 70, (3, 4)), 0.0));
        assert!(a.on_beacon(&beacon(2, 80, (3, 4)), 0.1));
        assert_eq!(a.gateway_for(Cell::new(3, 4), 0.1), Some(2));
        assert!(!a.on_beacon(&beacon(9, 80, (3, 4)), 0.2));
        assert_eq!(a.gateway_for(Cell::new(3, 4), 0.2), Some(2));
        assert!(!a.is_gateway(0.2));
    }

    #[test]
    fn incumbent_refresh_lowers_recorded_energy() {
        let mut a = node(1, (0, 0), 10);
        a.on_beacon(&beacon(2, 80, (1, 0)), 0.0);
        assert!(a.on_beacon(&beacon(2, 60, (1, 0)), 1.0));
        assert!(a.on_beacon(&beacon(3, 70, (1, 0)), 1.5));
        assert_eq!(a.gateway_for(Cell::new(1, 0), 1.5), Some(3));
    }

    #[test]
    fn distant_beacons_are_ignored() {
        let mut a = node(1, (1, 1), 10);
        assert!(!a.on_beacon(&beacon(2, 99, (9, 9)), 0.0));
        assert_eq!(a.gateway_entries().count(), 0);
    }

    #[test]
    fn entries_expire_after_three_periods() {
        let mut a = node(1, (2, 2), 10);
        a.on_beacon(&beacon(2, 80, (2, 2)), 0.0);
        assert!(!a.is_gateway(3.0));
        assert!(a.is_gateway(3.01));
        assert!(a.on_beacon(&beacon(5, 1, (2, 2)), 3.5));
        a.prune_expired(10.0);
        assert_eq!(a.gateway_entries().count(), 0);
    }

    #[test]
    fn cell_change_bumps_sequence() {
        let mut a = node(1, (2, 2), 10);
        for _ in 0..6 {
            a.on_cell_change(Cell::new(2, 2));
        }
        assert_eq!(a.on_cell_change(Cell::new(2, 3)), CellExit { origin: 1, new_cell: Cell::new(2, 3), seq: 7 });
        assert_eq!(a.relocate(Position::new(2.9, 3.9), Cell::new(2, 3)), None);
        assert_eq!(a.relocate(Position::new(2.5, 4.1), Cell::new(2, 4)).map(|p| p.seq), Some(8));
        assert_eq!(a.relocate(Position::new(2.5, 5.1), Cell::new(2, 5)).map(|p| p.seq), Some(9));
        assert_eq!(a.location_of(1), Some(Cell::new(2, 5)));
    }

    #[test]
    fn cell_change_prunes_gateway_table() {
        let mut a = node(1, (2, 2), 10);
        a.on_tick_beacon(0.0);
        a.on_beacon(&beacon(2, 5, (1, 1)), 0.0);
        a.on_beacon(&beacon(3, 5, (3, 3)), 0.0);
        a.on_cell_change(Cell::new(3, 2));
        let cells: Vec<Cell> = a.gateway_entries().map(|(c, _)| c).collect();
        // (1,1) is no longer adjacent; the stale self-entry for (2,2) goes too
        assert_eq!(cells, vec![Cell::new(3, 3)]);
        assert!(a.is_gateway(0.0));
    }

    #[test]
    fn broadcast_parity_and_dedup() {
        let p = CellExit {
            origin: 9,
            new_cell: Cell::new(4, 4),
            seq: 7,
        };
        let mut odd = node(1, (5, 6), 10);
        assert_eq!(odd.on_broadcast(&p, 0.0), BroadcastOutcome::Accepted { forward: false });
        assert_eq!(odd.location_of(9), Some(Cell::new(4, 4)));
        let mut even = node(2, (6, 6), 10);
        assert_eq!(even.on_broadcast(&p, 0.0), BroadcastOutcome::Accepted { forward: true });
        let moved = CellExit { new_cell: Cell::new(0, 0), ..p };
        assert_eq!(even.on_broadcast(&moved, 0.0), BroadcastOutcome::Duplicate);
        assert_eq!(even.location_of(9), Some(Cell::new(4, 4)));
    }

    #[test]
    fn non_gateways_never_forward() {
        let mut a = node(1, (4, 4), 10);
        a.on_beacon(&beacon(2, 99, (4, 4)), 0.0);
        let p = CellExit { origin: 9, new_cell: Cell::new(4, 4), seq: 1 };
        assert_eq!(a.on_broadcast(&p, 0.0), BroadcastOutcome::Accepted { forward: false });
    }

    #[test]
    fn originator_discards_its_own_echo() {
        let mut a = node(1, (0, 0), 10);
        let p = a.on_cell_change(Cell::new(1, 0));
        assert_eq!(a.on_broadcast(&p, 0.0), BroadcastOutcome::Duplicate);
    }

    /// Source in `at` that knows a gateway for every neighbor cell.
    fn source_at(at: (i32, i32)) -> NodeState {
        let mut s = node(1, at, 50);
        for (i, c) in GridConfig::unit(20).neighbors(Cell::new(at.0, at.1)).enumerate() {
            s.on_beacon(&Beacon { sender: 100 + i as u32, energy: 1, cell: c }, 0.0);
        }
        s
    }

    #[test]
    fn round_robin_assignment() {
        let mut s = source_at((2, 2));
        s.learn_location(2, Cell::new(7, 2));
        let grid = GridConfig::unit(10);
        let SourceRoute::Parallel { paths, dispatches } = s.source_route(2, &[1, 2, 3, 4, 5], 3, &grid, 0.0).unwrap() else {
            panic!()
        };
        assert_eq!(paths, vec![1, 2, 3]);
        let order: Vec<u8> = dispatches.iter().map(|d| d.path).collect();
        assert_eq!(order, vec![1, 2, 3, 1, 2]);
        assert!(dispatches.iter().all(|d| matches!(d.outcome, DispatchOutcome::Send(_))));
    }

    #[test]
    fn path_count_is_clamped() {
        let mut s = source_at((6, 6));
        s.learn_location(2, Cell::new(11, 8));
        let grid = GridConfig::unit(20);
        let SourceRoute::Parallel { paths, .. } = s.source_route(2, &[1], 12, &grid, 0.0).unwrap() else { panic!() };
        assert_eq!(paths, (1..=8).collect::<Vec<u8>>());
        // near a corner only some paths fit
        let mut c = node(1, (0, 0), 50);
        c.learn_location(2, Cell::new(1, 0));
        let SourceRoute::Parallel { paths, .. } = c.source_route(2, &[1], 8, &GridConfig::unit(2), 0.0).unwrap() else {
            panic!()
        };
        assert_eq!(paths, vec![1, 2, 4]);
    }

    #[test]
    fn same_cell_and_unknown_destinations() {
        let mut s = node(1, (2, 2), 50);
        let grid = GridConfig::unit(10);
        assert_eq!(s.source_route(2, &[1], 1, &grid, 0.0), Err(RouteError::UnknownDestination(2)));
        s.learn_location(2, Cell::new(2, 2));
        assert_eq!(
            s.source_route(2, &[1, 2], 4, &grid, 0.0),
            Ok(SourceRoute::Direct { dest: 2, payloads: vec![1, 2] })
        );
        assert_eq!(s.source_route(2, &[1], 0, &grid, 0.0), Err(RouteError::NoPathsRequested));
    }

    #[test]
    fn missing_first_hop_gateway_is_reported() {
        let mut s = node(1, (2, 2), 50);
        s.learn_location(2, Cell::new(5, 2));
        let SourceRoute::Parallel { dispatches, .. } = s.source_route(2, &[1], 1, &GridConfig::unit(10), 0.0).unwrap() else {
            panic!()
        };
        assert_eq!(dispatches[0].outcome, DispatchOutcome::NoGateway(Cell::new(3, 2)));
    }

    #[test]
    fn gateway_forwards_then_delivers() {
        let grid = GridConfig::unit(10);
        let mut s = source_at((2, 2));
        s.learn_location(2, Cell::new(4, 2));
        let SourceRoute::Parallel { dispatches, .. } = s.source_route(2, &[1], 1, &grid, 0.0).unwrap() else { panic!() };
        let DispatchOutcome::Send(p) = dispatches[0].outcome.clone() else { panic!() };
        assert_eq!(p.at_cell, Cell::new(3, 2));

        let mut mid = node(p.gateway, (3, 2), 50);
        assert_eq!(mid.on_gateway_route(&p, &grid, 0.0).unwrap(), GatewayAction::NoGateway(Cell::new(4, 2)));
        mid.on_beacon(&beacon(77, 5, (4, 2)), 0.0);
        let GatewayAction::Forward(q) = mid.on_gateway_route(&p, &grid, 0.0).unwrap() else { panic!() };
        assert_eq!((q.gateway, q.at_cell), (77, Cell::new(4, 2)));

        let last = node(77, (4, 2), 50);
        assert_eq!(
            last.on_gateway_route(&q, &grid, 0.0).unwrap(),
            GatewayAction::Deliver { dest: 2, cell: Cell::new(4, 2) }
        );
    }
}
