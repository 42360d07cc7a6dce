//! Deterministic discrete-event simulator hosting protocol nodes.
//!
//! Events run in `(time, insertion order)` order on an integer nanosecond
//! clock. All randomness comes from one ChaCha8 stream seeded by the
//! scenario, so a scenario and seed fix the metrics and the trace bytes.
//!
//! Radio model: a closed disk of radius `r`, constant one-hop delay `tau`,
//! optional i.i.d. per-receiver loss, no collisions. Broadcasts are consumed
//! by every in-range node; a unicast only by its addressee, which alone is
//! charged receive energy. A node with less energy than a transmit (receive)
//! costs can no longer send (receive).

mod metrics;
mod mobility;
mod radio;
mod scenario;
#[cfg(feature = "parallel")]
mod sweep;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Cell, GridConfig, Position};
use crate::paths;
use crate::protocol::{
    BroadcastOutcome, DispatchOutcome, GatewayAction, NodeId, NodeState, Packet, ProtocolConfig, SourceRoute,
    MAX_PATHS,
};

pub use metrics::{write_energy, write_rows, DropCause, Drops, Metrics, MetricsRow};
pub use mobility::{Leg, RandomWaypoint};
pub use radio::SpatialIndex;
pub use scenario::{
    GridSection, LocationBootstrap, MobilityModel, MobilitySection, NodesSection, Placement, ProtocolSection,
    RadioSection, Scenario, ScenarioError, TrafficMode, TrafficSpec,
};
#[cfg(feature = "parallel")]
pub use sweep::{sweep, Axis, SweepError, SweepRow};

pub type Nanos = u64;

pub fn to_nanos(seconds: f64) -> Nanos {
    (seconds * 1e9).round() as Nanos
}

pub fn to_seconds(t: Nanos) -> f64 {
    t as f64 / 1e9
}

fn fmt_time(t: Nanos) -> String {
    format!("{}.{:09}", t / 1_000_000_000, t % 1_000_000_000)
}

#[derive(Debug, Clone)]
enum Event {
    Beacon(usize),
    Mobility,
    Announce(usize),
    Traffic { spec: usize, index: u32 },
    Transmit { node: usize, packet: Packet },
    Arrive { node: usize, packet: Packet },
    Direct { payload: u32, dest: usize },
}

#[derive(Debug)]
struct Scheduled {
    at: Nanos,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

#[derive(Debug, Clone)]
struct PayloadRecord {
    message: usize,
    slot: usize,
    delivered: bool,
}

#[derive(Debug, Clone)]
struct MessageRecord {
    sent_at: Nanos,
    slots_done: Vec<bool>,
    remaining: usize,
}

/// Acceptance and forwarding counts of one flooded cell-exit packet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BroadcastStats {
    /// Nodes other than the originator that accepted it.
    pub accepted: u32,
    /// Re-broadcasts, excluding the originator's transmission.
    pub forwarded: u32,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub metrics: Metrics,
    pub trace: Option<String>,
}

pub struct Simulator {
    scenario: Scenario,
    grid: GridConfig,
    nodes: Vec<NodeState>,
    positions: Vec<Position>,
    legs: Vec<Leg>,
    mover: Option<RandomWaypoint>,
    index: SpatialIndex,
    busy_until: Vec<Nanos>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: Nanos,
    end: Nanos,
    tau: Nanos,
    rng: ChaCha8Rng,
    metrics: Metrics,
    payloads: Vec<PayloadRecord>,
    messages: Vec<MessageRecord>,
    broadcasts: BTreeMap<(NodeId, u32), BroadcastStats>,
    forwarders: BTreeMap<(NodeId, u32), Vec<NodeId>>,
    trace: Option<String>,
    scratch: Vec<usize>,
}

impl Simulator {
    pub fn new(scenario: &Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let grid = scenario.grid_config()?;
        let n = scenario.node_count()? as usize;
        let pcfg: ProtocolConfig = scenario.protocol_config();
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

        let positions: Vec<Position> = match scenario.nodes.placement {
            Placement::Uniform => (0..n)
                .map(|_| Position::new(rng.random_range(0.0..grid.delta), rng.random_range(0.0..grid.delta)))
                .collect(),
            Placement::PerCell => {
                let per = n / grid.cell_count();
                grid.cells()
                    .flat_map(|c| std::iter::repeat_n(c, per))
                    .map(|c| {
                        let u: f64 = rng.random();
                        let v: f64 = rng.random();
                        Position::new((c.x as f64 + u) * grid.d, (c.y as f64 + v) * grid.d)
                    })
                    .collect()
            }
        };
        let [e_lo, e_hi] = scenario.nodes.energy;
        let mut index = SpatialIndex::new(grid);
        let nodes: Vec<NodeState> = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let cell = grid.cell_of(p);
                index.insert(i, cell);
                let energy = rng.random_range(e_lo..=e_hi);
                NodeState::new(i as NodeId, p, cell, energy, pcfg)
            })
            .collect();

        let mover = (scenario.mobility.model == MobilityModel::RandomWaypoint).then_some(RandomWaypoint {
            delta: grid.delta,
            speed: scenario.mobility.speed,
            pause: scenario.mobility.pause,
        });
        let legs = match &mover {
            Some(m) => (0..n).map(|_| m.start(&mut rng)).collect(),
            None => Vec::new(),
        };

        let mut sim = Simulator {
            scenario: scenario.clone(),
            grid,
            metrics: Metrics {
                seed: scenario.seed,
                initial_energy: nodes.iter().map(|n| n.energy).collect(),
                ..Default::default()
            },
            nodes,
            positions,
            legs,
            mover,
            index,
            busy_until: vec![0; n],
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            end: to_nanos(scenario.duration),
            tau: to_nanos(scenario.radio.tau).max(1),
            rng,
            payloads: Vec::new(),
            messages: Vec::new(),
            broadcasts: BTreeMap::new(),
            forwarders: BTreeMap::new(),
            trace: None,
            scratch: Vec::new(),
        };
        sim.bootstrap();
        Ok(sim)
    }

    fn bootstrap(&mut self) {
        let period = self.scenario.protocol.beacon_period;
        let n = self.nodes.len();
        for i in 0..n {
            let offset = self.rng.random_range(0.0..period);
            self.schedule(to_nanos(offset), Event::Beacon(i));
        }
        match self.scenario.protocol.location {
            LocationBootstrap::Oracle => {
                let cells: Vec<Cell> = self.nodes.iter().map(|n| n.cell).collect();
                for node in &mut self.nodes {
                    for (j, &c) in cells.iter().enumerate() {
                        node.learn_location(j as NodeId, c);
                    }
                }
            }
            LocationBootstrap::Announce => {
                for i in 0..n {
                    let at = period + self.rng.random_range(0.0..period);
                    self.schedule(to_nanos(at), Event::Announce(i));
                }
            }
        }
        if self.mover.is_some() {
            self.schedule(to_nanos(self.scenario.mobility.tick), Event::Mobility);
        }
        for (spec, t) in self.scenario.traffic.iter().enumerate() {
            let at = to_nanos(t.time);
            self.queue.push(Scheduled {
                at,
                seq: self.seq,
                event: Event::Traffic { spec, index: 0 },
            });
            self.seq += 1;
        }
    }

    /// Records a newline-delimited event trace.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(String::new());
        self
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn now(&self) -> f64 {
        to_seconds(self.now)
    }

    pub fn broadcast_stats(&self, origin: NodeId, seq: u32) -> Option<BroadcastStats> {
        self.broadcasts.get(&(origin, seq)).copied()
    }

    /// Nodes that re-broadcast a flood, in forwarding order.
    pub fn broadcast_forwarders(&self, origin: NodeId, seq: u32) -> &[NodeId] {
        self.forwarders.get(&(origin, seq)).map_or(&[], Vec::as_slice)
    }

    fn schedule(&mut self, at: Nanos, event: Event) {
        self.queue.push(Scheduled { at, seq: self.seq, event });
        self.seq += 1;
    }

    fn log(&mut self, node: usize, what: std::fmt::Arguments) {
        if let Some(t) = &mut self.trace {
            let _ = writeln!(t, "{} {} {}", fmt_time(self.now), node, what);
        }
    }

    /// Makes `node` re-announce its current cell as if it had just entered
    /// it. Returns the flood's key for [`Simulator::broadcast_stats`].
    pub fn originate_broadcast(&mut self, node: NodeId) -> (NodeId, u32) {
        let i = node as usize;
        let cell = self.nodes[i].cell;
        let p = self.nodes[i].on_cell_change(cell);
        self.broadcasts.insert((p.origin, p.seq), BroadcastStats::default());
        self.transmit(i, Packet::CellExit(p));
        (p.origin, p.seq)
    }

    /// Runs every event scheduled at or before `t` seconds (capped at the
    /// scenario duration).
    pub fn run_until(&mut self, t: f64) {
        let stop = to_nanos(t).min(self.end);
        while self.queue.peek().is_some_and(|s| s.at <= stop) {
            let s = self.queue.pop().unwrap();
            self.now = s.at;
            self.handle(s.event);
        }
        self.now = self.now.max(stop);
    }

    pub fn finish(mut self) -> Outcome {
        self.run_until(to_seconds(self.end));
        self.metrics.residual_energy = self.nodes.iter().map(|n| n.energy).collect();
        Outcome {
            metrics: self.metrics,
            trace: self.trace,
        }
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::Beacon(i) => self.on_beacon_tick(i),
            Event::Mobility => self.on_mobility_tick(),
            Event::Announce(i) => {
                self.originate_broadcast(i as NodeId);
            }
            Event::Traffic { spec, index } => self.on_traffic(spec, index),
            Event::Transmit { node, packet } => self.emit(node, packet),
            Event::Arrive { node, packet } => self.on_arrival(node, packet),
            Event::Direct { payload, dest } => {
                if self.nodes[dest].is_active() {
                    self.deliver(payload, dest);
                } else {
                    self.drop_payload(payload, dest, DropCause::Unreachable);
                }
            }
        }
    }

    fn on_beacon_tick(&mut self, i: usize) {
        let period = to_nanos(self.scenario.protocol.beacon_period);
        self.schedule(self.now + period, Event::Beacon(i));
        let now = self.now();
        self.nodes[i].prune_expired(now);
        if let Some(b) = self.nodes[i].beacon() {
            self.metrics.beacons_sent += 1;
            // the sender records its own beacon when everyone else does
            self.schedule(
                self.now + self.tau,
                Event::Arrive {
                    node: i,
                    packet: Packet::Beacon(b),
                },
            );
            self.transmit(i, Packet::Beacon(b));
        }
    }

    fn on_mobility_tick(&mut self) {
        let Some(mover) = self.mover else { return };
        let tick = self.scenario.mobility.tick;
        self.schedule(self.now + to_nanos(tick), Event::Mobility);
        for i in 0..self.nodes.len() {
            let pos = mover.advance(self.positions[i], &mut self.legs[i], tick, &mut self.rng);
            self.positions[i] = pos;
            let cell = self.grid.cell_of(pos);
            let from = self.nodes[i].cell;
            self.index.relocate(i, from, cell);
            if let Some(p) = self.nodes[i].relocate(pos, cell) {
                self.log(i, format_args!("move {from} -> {cell}"));
                self.broadcasts.insert((p.origin, p.seq), BroadcastStats::default());
                self.transmit(i, Packet::CellExit(p));
            }
        }
    }

    fn transmit(&mut self, node: usize, packet: Packet) {
        if self.scenario.radio.queue {
            let start = self.now.max(self.busy_until[node]);
            self.busy_until[node] = start + self.tau;
            if start > self.now {
                self.schedule(start, Event::Transmit { node, packet });
                return;
            }
        }
        self.emit(node, packet);
    }

    fn lost(&mut self) -> bool {
        let loss = self.scenario.radio.loss;
        loss > 0.0 && self.rng.random_bool(loss)
    }

    fn emit(&mut self, node: usize, packet: Packet) {
        let radio = &self.scenario.radio;
        let (tx_cost, rx_cost, r) = (radio.tx_cost, radio.rx_cost, self.grid.r);
        if self.nodes[node].energy == 0 || self.nodes[node].energy < tx_cost {
            if let Packet::GatewayRoute(g) = packet {
                self.drop_payload(g.payload, node, DropCause::Unreachable);
            }
            return;
        }
        self.nodes[node].spend(tx_cost);
        self.metrics.transmissions += 1;
        if self.trace.is_some() {
            let hex: String = packet
                .encode()
                .map(|b| b.iter().map(|x| format!("{x:02x}")).collect())
                .unwrap_or_default();
            self.log(node, format_args!("tx {packet} hex={hex}"));
        }
        let arrive = self.now + self.tau;
        let can_receive = |n: &NodeState| n.energy > 0 && n.energy >= rx_cost;
        match packet {
            Packet::GatewayRoute(g) => {
                let to = g.gateway as usize;
                let in_range = self.positions[to].distance(self.positions[node]) <= r;
                if to >= self.nodes.len() || !in_range || !can_receive(&self.nodes[to]) {
                    self.drop_payload(g.payload, node, DropCause::Unreachable);
                } else if self.lost() {
                    self.drop_payload(g.payload, node, DropCause::Loss);
                } else {
                    self.nodes[to].spend(rx_cost);
                    self.metrics.receptions += 1;
                    self.schedule(arrive, Event::Arrive { node: to, packet });
                }
            }
            Packet::Beacon(_) | Packet::CellExit(_) => {
                let mut receivers = std::mem::take(&mut self.scratch);
                self.index.within(self.positions[node], r, &self.positions, &mut receivers);
                for &to in &receivers {
                    if to == node || !can_receive(&self.nodes[to]) || self.lost() {
                        continue;
                    }
                    self.nodes[to].spend(rx_cost);
                    self.metrics.receptions += 1;
                    self.schedule(arrive, Event::Arrive { node: to, packet });
                }
                self.scratch = receivers;
            }
        }
    }

    fn on_arrival(&mut self, node: usize, packet: Packet) {
        let now = self.now();
        match packet {
            Packet::Beacon(b) => {
                self.nodes[node].on_beacon(&b, now);
            }
            Packet::CellExit(c) => {
                let outcome = self.nodes[node].on_broadcast(&c, now);
                let BroadcastOutcome::Accepted { forward } = outcome else { return };
                let stats = self.broadcasts.entry((c.origin, c.seq)).or_default();
                stats.accepted += 1;
                if forward {
                    stats.forwarded += 1;
                    self.metrics.broadcasts_forwarded += 1;
                    self.forwarders.entry((c.origin, c.seq)).or_default().push(node as NodeId);
                    self.transmit(node, packet);
                }
            }
            Packet::GatewayRoute(g) => {
                let action = self.nodes[node].on_gateway_route(&g, &self.grid, now);
                match action {
                    Ok(GatewayAction::Deliver { dest, cell }) => {
                        let d = dest as usize;
                        let here = d == node
                            || (self.nodes[d].cell == cell
                                && self.nodes[d].is_active()
                                && self.positions[d].distance(self.positions[node]) <= self.grid.r);
                        if here {
                            self.deliver(g.payload, d);
                        } else if self.nodes[d].cell != cell {
                            self.drop_payload(g.payload, node, DropCause::StaleLocation);
                        } else {
                            self.drop_payload(g.payload, node, DropCause::Unreachable);
                        }
                    }
                    Ok(GatewayAction::Forward(q)) => self.transmit(node, Packet::GatewayRoute(q)),
                    Ok(GatewayAction::NoGateway(c)) => {
                        let cause = self.missing_gateway_cause(c);
                        self.drop_payload(g.payload, node, cause);
                    }
                    Ok(GatewayAction::Unreachable(_)) | Err(_) => {
                        self.drop_payload(g.payload, node, DropCause::Unreachable)
                    }
                }
            }
        }
    }

    fn missing_gateway_cause(&self, c: Cell) -> DropCause {
        if self.index.in_cell(c).iter().any(|&n| self.nodes[n].is_active()) {
            DropCause::NoGateway
        } else {
            DropCause::EmptyCell
        }
    }

    fn on_traffic(&mut self, spec: usize, index: u32) {
        let t = self.scenario.traffic[spec].clone();
        if index + 1 < t.count {
            self.schedule(self.now + to_nanos(t.interval), Event::Traffic { spec, index: index + 1 });
        }
        let n = self.nodes.len();
        let source = match t.source {
            Some(s) => s as usize,
            None => loop {
                let s = self.rng.random_range(0..n);
                if t.dest != Some(s as NodeId) {
                    break s;
                }
            },
        };
        let dest = match t.dest {
            Some(d) => d as usize,
            None => loop {
                let d = self.rng.random_range(0..n);
                if d != source {
                    break d;
                }
            },
        };
        self.send_message(source, dest, t.payloads, t.paths, t.mode);
    }

    fn new_payloads(&mut self, message: usize, slots: usize, copies: usize) -> Vec<u32> {
        let mut ids = Vec::with_capacity(slots * copies);
        for slot in 0..slots {
            for _ in 0..copies {
                self.payloads.push(PayloadRecord {
                    message,
                    slot,
                    delivered: false,
                });
                ids.push(self.payloads.len() as u32);
            }
        }
        self.metrics.payloads_sent += ids.len() as u64;
        ids
    }

    fn send_message(&mut self, source: usize, dest: usize, payloads: u32, paths: u8, mode: TrafficMode) {
        let slots = payloads as usize;
        let message = self.messages.len();
        self.messages.push(MessageRecord {
            sent_at: self.now,
            slots_done: vec![false; slots],
            remaining: slots,
        });
        self.metrics.messages_sent += 1;
        self.log(source, format_args!("send dst={dest} payloads={payloads} paths={paths}"));

        let src = &self.nodes[source];
        let requested = paths.min(MAX_PATHS) as usize;
        let Some(dest_cell) = src.location_of(dest as NodeId) else {
            let copies = if mode == TrafficMode::Copies { requested } else { 1 };
            for id in self.new_payloads(message, slots, copies) {
                self.drop_payload(id, source, DropCause::Unreachable);
            }
            return;
        };
        if dest_cell == src.cell {
            for id in self.new_payloads(message, slots, 1) {
                self.schedule(self.now + self.tau, Event::Direct { payload: id, dest });
            }
            return;
        }
        let feasible = paths::feasible_paths(src.cell, dest_cell, &self.grid).map_or(0, |f| f.len());
        let used = requested.min(feasible).max(1);
        let copies = if mode == TrafficMode::Copies { used } else { 1 };
        let ids = self.new_payloads(message, slots, copies);
        let route = self.nodes[source].source_route(dest as NodeId, &ids, used as u8, &self.grid, self.now());
        let Ok(SourceRoute::Parallel { dispatches, .. }) = route else {
            for id in ids {
                self.drop_payload(id, source, DropCause::Unreachable);
            }
            return;
        };
        for d in dispatches {
            match d.outcome {
                DispatchOutcome::Send(g) => self.transmit(source, Packet::GatewayRoute(g)),
                DispatchOutcome::NoGateway(c) => {
                    let cause = self.missing_gateway_cause(c);
                    self.drop_payload(d.payload, source, cause);
                }
            }
        }
    }

    fn deliver(&mut self, payload: u32, dest: usize) {
        let rec = &mut self.payloads[payload as usize - 1];
        if rec.delivered {
            return;
        }
        rec.delivered = true;
        let (message, slot) = (rec.message, rec.slot);
        let m = &mut self.messages[message];
        self.metrics.payloads_delivered += 1;
        self.metrics.delays.push(to_seconds(self.now - m.sent_at));
        if !m.slots_done[slot] {
            m.slots_done[slot] = true;
            m.remaining -= 1;
            if m.remaining == 0 {
                self.metrics.messages_delivered += 1;
                self.metrics.completion_times.push(to_seconds(self.now - m.sent_at));
            }
        }
        self.log(dest, format_args!("deliver payload={payload}"));
    }

    fn drop_payload(&mut self, payload: u32, at: usize, cause: DropCause) {
        self.metrics.drops.add(cause);
        self.log(at, format_args!("drop {} payload={payload}", cause.as_str()));
    }
}

/// Runs `scenario` to completion.
pub fn run(scenario: &Scenario) -> Result<Outcome, ScenarioError> {
    Ok(Simulator::new(scenario)?.finish())
}

/// Runs `scenario` to completion, recording the event trace.
pub fn run_traced(scenario: &Scenario) -> Result<Outcome, ScenarioError> {
    Ok(Simulator::new(scenario)?.with_trace().finish())
}
