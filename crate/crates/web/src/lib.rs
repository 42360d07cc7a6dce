//! Browser bindings. Every export returns a JSON string so the page needs no
//! generated type glue beyond `wasm-bindgen`'s string passing.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use prp::analysis::{delivery_prob_mobile, delivery_prob_static, path_length_table};
use prp::grid::{Cell, GridConfig};
use prp::paths::{build_paths, check_disjoint, expand, ExpandedPath, RouteShape};
use prp::sim::{Scenario, Simulator};

#[derive(Serialize)]
struct PathView {
    index: u8,
    length: u32,
    table_length: u32,
    feasible: bool,
    moves: String,
    cells: Vec<[i32; 2]>,
}

#[derive(Serialize)]
struct Layout {
    case: String,
    dx: u32,
    dy: u32,
    paths: Vec<PathView>,
    disjoint: bool,
}

#[derive(Serialize)]
struct CurvePoint {
    density: f64,
    fixed: f64,
    mobile: f64,
}

#[derive(Serialize)]
struct Flood {
    k: u32,
    origin: [i32; 2],
    /// Forwarding cell and its order in the flood.
    forwarders: Vec<[i32; 3]>,
    reached: u32,
    nodes: u32,
}

fn error_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

fn layout(source: Cell, dest: Cell, k: u32) -> Result<Layout, String> {
    let grid = GridConfig::unit(k);
    for c in [source, dest] {
        if !grid.contains(c) {
            return Err(format!("cell {c} is outside the {k}x{k} grid"));
        }
    }
    let shape = RouteShape::of(source, dest).ok_or("source and destination are the same cell")?;
    let table = path_length_table(shape.case.kind, shape.dx, shape.dy).map_err(|e| e.to_string())?;
    let mut paths = Vec::with_capacity(8);
    let mut feasible: Vec<ExpandedPath> = Vec::new();
    for spec in build_paths(source, dest).map_err(|e| e.to_string())? {
        let expanded = expand(&spec, source);
        let fits = expanded.fits(&grid);
        paths.push(PathView {
            index: spec.path_index,
            length: spec.len(),
            table_length: table[spec.path_index as usize - 1],
            feasible: fits,
            moves: spec.to_string(),
            cells: expanded.cells.iter().map(|c| [c.x, c.y]).collect(),
        });
        if fits {
            feasible.push(expanded);
        }
    }
    let refs: Vec<&ExpandedPath> = feasible.iter().collect();
    Ok(Layout {
        case: shape.case.to_string(),
        dx: shape.dx,
        dy: shape.dy,
        paths,
        disjoint: check_disjoint(&refs).is_ok(),
    })
}

/// The eight paths between two cells of a `k` x `k` grid.
#[wasm_bindgen(js_name = pathLayout)]
pub fn path_layout(sx: i32, sy: i32, dx: i32, dy: i32, k: u32) -> String {
    match layout(Cell::new(sx, sy), Cell::new(dx, dy), k) {
        Ok(l) => serde_json::to_string(&l).expect("plain data"),
        Err(e) => error_json(e),
    }
}

/// Static and mobile delivery bounds against density for one grid size.
#[wasm_bindgen(js_name = deliveryCurve)]
pub fn delivery_curve(k: f64, p: f64, max_density: f64) -> String {
    if !(k >= 1.0) || !(0.0..=1.0).contains(&p) || !(max_density > 0.0) {
        return error_json("need k >= 1, 0 <= p <= 1 and a positive density range");
    }
    let steps = 60;
    let points: Result<Vec<CurvePoint>, _> = (1..=steps)
        .map(|i| {
            let density = max_density * i as f64 / steps as f64;
            let n = density * k * k;
            delivery_prob_mobile(n, k, p).map(|mobile| CurvePoint {
                density,
                fixed: delivery_prob_static(n, k),
                mobile,
            })
        })
        .collect();
    match points {
        Ok(p) => serde_json::to_string(&p).expect("plain data"),
        Err(e) => error_json(e),
    }
}

fn flood(k: u32, origin: Cell, seed: u64) -> Result<Flood, String> {
    let scenario = Scenario::from_toml(&format!(
        "seed = {seed}\nduration = 10.0\n[grid]\nk = {k}\nd = 50.0\n\
         [nodes]\nplacement = \"per_cell\"\ndensity = 2\n[protocol]\nlocation = \"oracle\"\n"
    ))
    .map_err(|e| e.to_string())?;
    let mut sim = Simulator::new(&scenario).map_err(|e| e.to_string())?;
    if !sim.grid().contains(origin) {
        return Err(format!("cell {origin} is outside the {k}x{k} grid"));
    }
    sim.run_until(2.5);
    let start = sim
        .nodes()
        .iter()
        .find(|n| n.cell == origin)
        .ok_or("origin cell is empty")?
        .id;
    let (o, s) = sim.originate_broadcast(start);
    sim.run_until(3.5);
    let cell_of = |id: u32| sim.nodes()[id as usize].cell;
    Ok(Flood {
        k,
        origin: [origin.x, origin.y],
        forwarders: sim
            .broadcast_forwarders(o, s)
            .iter()
            .enumerate()
            .map(|(i, &id)| [cell_of(id).x, cell_of(id).y, i as i32])
            .collect(),
        reached: sim.broadcast_stats(o, s).unwrap_or_default().accepted,
        nodes: sim.nodes().len() as u32,
    })
}

/// Floods one cell-exit announcement from `(x, y)` over a static grid with
/// two nodes per cell and reports which cells re-broadcast it.
#[wasm_bindgen(js_name = broadcastPattern)]
pub fn broadcast_pattern(k: u32, x: i32, y: i32, seed: u32) -> String {
    if !(2..=20).contains(&k) {
        return error_json("k must be between 2 and 20");
    }
    match flood(k, Cell::new(x, y), seed as u64) {
        Ok(f) => serde_json::to_string(&f).expect("plain data"),
        Err(e) => error_json(e),
    }
}
