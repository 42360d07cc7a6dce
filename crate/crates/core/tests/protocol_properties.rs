use std::collections::BTreeMap;

use proptest::prelude::*;

use prp::grid::{Cell, GridConfig, Position};
use prp::protocol::{NodeState, ProtocolConfig, SourceRoute};
use prp::sim::{Scenario, Simulator};

fn populated(k: u32, density: u32, seed: u64, extra: &str) -> Simulator {
    let s = Scenario::from_toml(&format!(
        "seed = {seed}\nduration = 1000.0\n[grid]\nk = {k}\nd = 25.0\n\
         [nodes]\nplacement = \"per_cell\"\ndensity = {density}\nenergy = [10000, 90000]\n{extra}"
    ))
    .unwrap();
    Simulator::new(&s).unwrap()
}

fn even_offset_cells(grid: &GridConfig, origin: Cell) -> u32 {
    grid.cells().filter(|c| c.manhattan(origin) % 2 == 0).count() as u32
}

#[test]
fn every_node_accepts_every_flood_once() {
    for k in 2..=12 {
        let mut sim = populated(k, 1, k as u64, "[protocol]\nlocation = \"oracle\"\n");
        sim.run_until(2.5);
        let n = sim.nodes().len() as u32;
        let grid = *sim.grid();
        for origin in grid.cells() {
            let id = sim.nodes().iter().find(|x| x.cell == origin).unwrap().id;
            let (o, s) = sim.originate_broadcast(id);
            sim.run_until(sim.now() + 0.5);
            let st = sim.broadcast_stats(o, s).unwrap();
            assert_eq!(st.accepted, n - 1, "k={k} origin {origin}");
            // the originator forwards first, so it is excluded from the count
            assert_eq!(st.forwarded + 1, even_offset_cells(&grid, origin), "k={k} origin {origin}");
        }
    }
}

#[test]
fn forwarders_sit_on_even_offsets_one_per_cell() {
    let mut sim = populated(9, 3, 4, "[protocol]\nlocation = \"oracle\"\n");
    sim.run_until(2.5);
    let origin = Cell::new(4, 2);
    let id = sim.nodes().iter().find(|x| x.cell == origin).unwrap().id;
    let (o, s) = sim.originate_broadcast(id);
    sim.run_until(3.5);
    let cells: Vec<Cell> = sim
        .broadcast_forwarders(o, s)
        .iter()
        .map(|&f| sim.nodes()[f as usize].cell)
        .collect();
    assert!(cells.iter().all(|c| c.manhattan(origin) % 2 == 0));
    let mut unique = cells.clone();
    unique.sort_by_key(|c| (c.x, c.y));
    unique.dedup();
    assert_eq!(unique.len(), cells.len());
    // the origin cell's gateway repeats the flood unless it originated it
    let originator_leads = sim.nodes()[id as usize].is_gateway(sim.now());
    assert_eq!(cells.contains(&origin), !originator_leads);
}

#[test]
fn gateway_election_converges_to_richest_node() {
    for seed in 0..5 {
        let mut sim = populated(6, 4, seed, "");
        sim.run_until(2.1);
        let now = sim.now();
        let grid = *sim.grid();
        let mut richest: BTreeMap<(i32, i32), (u32, u32)> = BTreeMap::new();
        for n in sim.nodes() {
            let e = richest.entry((n.cell.x, n.cell.y)).or_insert((n.energy, n.id));
            if n.energy > e.0 {
                *e = (n.energy, n.id);
            }
        }
        for n in sim.nodes() {
            for c in std::iter::once(n.cell).chain(grid.neighbors(n.cell)) {
                assert_eq!(
                    n.gateway_for(c, now),
                    Some(richest[&(c.x, c.y)].1),
                    "seed {seed}: node {} view of {c}",
                    n.id
                );
            }
        }
    }
}

fn assert_locations_consistent(sim: &Simulator) {
    let truth: Vec<Cell> = sim.nodes().iter().map(|n| n.cell).collect();
    for n in sim.nodes() {
        for (id, &cell) in truth.iter().enumerate() {
            assert_eq!(n.location_of(id as u32), Some(cell), "node {} about {id}", n.id);
        }
    }
}

#[test]
fn announced_locations_reach_everyone() {
    let s = Scenario::from_toml(
        "seed = 2\nduration = 20.0\n[grid]\nk = 7\nd = 20.0\n[nodes]\nplacement = \"per_cell\"\ndensity = 2\n",
    )
    .unwrap();
    let mut sim = Simulator::new(&s).unwrap();
    sim.run_until(5.0);
    assert_locations_consistent(&sim);
}

#[test]
fn location_tables_match_true_cells_after_moves_settle() {
    // nodes walk to one waypoint each, then pause for the rest of the run
    let s = Scenario::from_toml(
        "seed = 11\nduration = 200.0\n[grid]\nk = 4\nd = 20.0\n\
         [nodes]\nplacement = \"per_cell\"\ndensity = 6\n\
         [mobility]\nmodel = \"random_waypoint\"\nspeed = [8.0, 12.0]\npause = 1000.0\n",
    )
    .unwrap();
    let mut sim = Simulator::new(&s).unwrap();
    sim.run_until(40.0);
    // stale gateway entries have expired and every cell is populated, so
    // floods are lossless from here on
    assert!(sim.grid().cells().all(|c| sim.nodes().iter().any(|n| n.cell == c)));
    for id in 0..sim.nodes().len() as u32 {
        sim.originate_broadcast(id);
        sim.run_until(sim.now() + 0.2);
    }
    assert_locations_consistent(&sim);
}

proptest! {
    #[test]
    fn round_robin_counts_differ_by_at_most_one(m in 1usize..200, n in 1u8..=8) {
        let grid = GridConfig::unit(30);
        let mut s = NodeState::new(1, Position::new(355.0, 355.0), Cell::new(10, 10), 100, ProtocolConfig::default());
        s.learn_location(2, Cell::new(17, 14));
        let payloads: Vec<u32> = (0..m as u32).collect();
        let SourceRoute::Parallel { paths, dispatches } = s.source_route(2, &payloads, n, &grid, 0.0).unwrap() else {
            panic!("distinct cells route in parallel")
        };
        prop_assert_eq!(paths.len(), n as usize);
        let mut counts = [0usize; 9];
        for d in &dispatches {
            counts[d.path as usize] += 1;
        }
        let used: Vec<usize> = paths.iter().map(|&p| counts[p as usize]).collect();
        prop_assert!(used.iter().max().unwrap() - used.iter().min().unwrap() <= 1);
        prop_assert_eq!(used.iter().sum::<usize>(), m);
    }
}
