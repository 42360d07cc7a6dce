//! The acceptance suite as a library call, used by `prp verify`.

use std::time::Instant;

use crate::analysis::{delivery_prob_mobile, delivery_prob_static, exit_probability, message_delay_bound};
use crate::descriptors::{initial_descriptor, next_cell, Hop};
use crate::grid::{required_range, Cell, GridConfig};
use crate::paths::{
    build_paths, canonical_deltas, check_disjoint, expand, feasible_paths, path_length, real_offset, CaseKind,
    ExpandedPath, Symmetry,
};
use crate::sim::{run, run_traced, write_rows, Metrics, Scenario, Simulator};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub number: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2}. {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.number,
            self.name,
            self.detail
        )
    }
}

type Check = fn() -> (bool, String);

const SWEEP_MAX: u32 = 12;
const ANCHOR: Cell = Cell::new(100, 100);

/// Every canonical case, symmetry and delta up to [`SWEEP_MAX`], as
/// `(kind, dx, dy, dest)` with the source at [`ANCHOR`].
fn sweep_pairs() -> Vec<(CaseKind, u32, u32, Cell)> {
    let mut out = Vec::new();
    for kind in CaseKind::ALL {
        for (dx, dy) in canonical_deltas(kind, SWEEP_MAX) {
            for sym in Symmetry::all() {
                let (ox, oy) = real_offset(sym, dx, dy);
                out.push((kind, dx, dy, Cell::new(ANCHOR.x + ox, ANCHOR.y + oy)));
            }
        }
    }
    out
}

fn expanded(dest: Cell) -> Vec<ExpandedPath> {
    build_paths(ANCHOR, dest)
        .expect("distinct cells")
        .iter()
        .map(|p| expand(p, ANCHOR))
        .collect()
}

fn c1_disjoint() -> (bool, String) {
    let t = Instant::now();
    let pairs = sweep_pairs();
    let mut bad = Vec::new();
    for &(kind, dx, dy, dest) in &pairs {
        let paths = expanded(dest);
        let refs: Vec<&ExpandedPath> = paths.iter().collect();
        if let Err(o) = check_disjoint(&refs) {
            bad.push(format!(
                "case {} dx={dx} dy={dy}{}: paths {} and {} meet at {}",
                kind.number(),
                if dx == dy + 1 { " (dx = dy+1)" } else { "" },
                o.first + 1,
                o.second + 1,
                o.cell
            ));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let mut detail = format!("{} pairs, {} violations in {secs:.2} s", pairs.len(), bad.len());
    if let Some(b) = bad.first() {
        detail += &format!("; {b}");
    }
    (bad.is_empty() && secs < 10.0, detail)
}

fn c2_lengths() -> (bool, String) {
    let mut bad: Vec<(u8, u8, u32, u32, usize, u32)> = Vec::new();
    for (kind, dx, dy, dest) in sweep_pairs() {
        for (i, p) in expanded(dest).iter().enumerate() {
            let table = path_length(kind, i as u8 + 1, dx, dy).expect("admissible");
            if p.len() as u32 != table {
                bad.push((kind.number(), i as u8 + 1, dx, dy, p.len(), table));
            }
        }
    }
    bad.sort_unstable();
    bad.dedup();
    let mut detail = format!("{} (case, path, dx, dy) mismatches over all symmetries", bad.len());
    if let Some(&(c, p, dx, dy, got, want)) = bad.first() {
        detail += &format!("; first: case {c} path {p} dx={dx} dy={dy} expands to {got}, table says {want}");
    }
    (bad.is_empty(), detail)
}

fn c3_descriptors() -> (bool, String) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (_, _, _, dest) in sweep_pairs() {
        for (i, p) in expanded(dest).iter().enumerate() {
            let path = i as u8 + 1;
            let mut desc = initial_descriptor(ANCHOR, dest, path).expect("valid path");
            let mut walked = vec![ANCHOR];
            let mut here = ANCHOR;
            while walked.len() <= p.cells.len() {
                let (next, hop) = next_cell(here, &desc).expect("table entry");
                walked.push(next);
                here = next;
                match hop {
                    Hop::Forward(d) => desc = d,
                    Hop::Delivered => break,
                }
            }
            checked += 1;
            if walked != p.cells {
                bad.push(format!("{ANCHOR}->{dest} path {path}"));
            }
        }
    }
    let mut detail = format!("{checked} paths walked, {} differ", bad.len());
    if let Some(b) = bad.first() {
        detail += &format!("; first: {b}");
    }
    (bad.is_empty(), detail)
}

fn c4_static_bound() -> (bool, String) {
    let main = delivery_prob_static(675.0, 15.0);
    let failing: Vec<String> = (10..=20)
        .map(|k| (k, delivery_prob_static(3.0 * (k * k) as f64, k as f64)))
        .filter(|&(_, p)| p < 0.95)
        .map(|(k, p)| format!("k={k}: {p:.5}"))
        .collect();
    let pass = (0.97..=0.99).contains(&main) && failing.is_empty();
    let mut detail = format!("Pd(675, 15) = {main:.5}");
    if !failing.is_empty() {
        detail += &format!("; below 0.95 at density 3: {}", failing.join(", "));
    }
    (pass, detail)
}

fn c5_exit() -> (bool, String) {
    match exit_probability(100.0, 1.0, 1.0) {
        Ok(p) => ((p - 0.01414).abs() <= 0.0005, format!("p = {p:.5}")),
        Err(e) => (false, e.to_string()),
    }
}

fn c6_mobile() -> (bool, String) {
    match delivery_prob_mobile(675.0, 15.0, 0.1) {
        Ok(p) => (p > 0.8, format!("Pd(675, 15, 0.1) = {p:.5} (needs > 0.8)")),
        Err(e) => (false, e.to_string()),
    }
}

fn full_grid(k: u32, per_cell: u32, extra: &str) -> Scenario {
    Scenario::from_toml(&format!(
        "seed = {k}\nduration = 10000.0\n[grid]\nk = {k}\nd = 50.0\n\
         [nodes]\nplacement = \"per_cell\"\ndensity = {per_cell}\nenergy = [40000, 80000]\n\
         [protocol]\nlocation = \"oracle\"\n{extra}"
    ))
    .expect("built-in scenario")
}

fn c7_broadcast() -> (bool, String) {
    let mut pass = true;
    let mut notes = Vec::new();
    for k in [4u32, 8, 12] {
        let mut sim = Simulator::new(&full_grid(k, 2, "")).expect("valid scenario");
        sim.run_until(2.5);
        let n = sim.nodes().len() as u32;
        let half = (k * k) as f64 / 2.0;
        let cells: Vec<Cell> = sim.grid().cells().collect();
        let (mut lo, mut hi, mut missed) = (u32::MAX, 0, 0u32);
        for c in cells {
            let origin = sim.nodes().iter().find(|x| x.cell == c).expect("populated").id;
            let (o, s) = sim.originate_broadcast(origin);
            sim.run_until(sim.now() + 0.5);
            let st = sim.broadcast_stats(o, s).unwrap_or_default();
            lo = lo.min(st.forwarded);
            hi = hi.max(st.forwarded);
            missed += (n - 1).saturating_sub(st.accepted);
        }
        let ok = lo as f64 >= half - k as f64 && hi as f64 <= half + k as f64 && missed == 0;
        pass &= ok;
        notes.push(format!("k={k} forwarded {lo}..{hi} (k^2/2 = {half}), missed receptions {missed}"));
    }
    (pass, notes.join("; "))
}

fn c8_delay() -> (bool, String) {
    let t = Instant::now();
    let (m, s, tau) = (1u32 << 20, 1u32 << 10, 0.008);
    let mut pass = true;
    let mut notes = Vec::new();
    for k in [10u32, 15] {
        let grid = GridConfig::square(k, 50.0 * k as f64, required_range(50.0)).expect("valid grid");
        let Some((src, dst)) = grid
            .cells()
            .flat_map(|a| grid.cells().map(move |b| (a, b)))
            .filter(|&(a, b)| a != b && feasible_paths(a, b, &grid).is_ok_and(|f| f.len() == 8))
            .max_by_key(|&(a, b)| (a.chebyshev(b), std::cmp::Reverse((a.y, a.x, b.y, b.x))))
        else {
            pass = false;
            notes.push(format!("k={k}: no pair with eight feasible paths"));
            continue;
        };
        let bound = message_delay_bound(m as f64, s as f64, tau, k as f64);
        let traffic = format!(
            "[radio]\ntau = {tau}\nqueue = true\n[[traffic]]\ntime = 3.0\nsource = {}\ndest = {}\npayloads = {}\npaths = 8\nsize = {s}\n",
            grid.index(src).unwrap() * 2,
            grid.index(dst).unwrap() * 2,
            m / s
        );
        let mut scenario = full_grid(k, 2, &traffic);
        scenario.duration = 3.0 + 2.0 * bound;
        let metrics = run(&scenario).expect("valid scenario").metrics;
        let done = metrics.completion_times.first().copied();
        pass &= done.is_some_and(|d| d <= bound);
        notes.push(format!(
            "k={k} {src}->{dst}: completed in {} (bound {bound:.3} s)",
            done.map_or("never".into(), |d| format!("{d:.3} s"))
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    notes.push(format!("{secs:.1} s"));
    (pass, notes.join("; "))
}

fn run_all(scenarios: Vec<Scenario>) -> Vec<Metrics> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        scenarios.par_iter().map(|s| run(s).expect("valid scenario").metrics).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        scenarios.iter().map(|s| run(s).expect("valid scenario").metrics).collect()
    }
}

fn c9_sim_vs_bound() -> (bool, String) {
    let k = 10u32;
    let mut pass = true;
    let mut notes = Vec::new();
    for density in [1u32, 2, 3, 4] {
        let scenarios = (0..30u64)
            .map(|seed| {
                Scenario::from_toml(&format!(
                    "seed = {}\nduration = 8.0\n[grid]\nk = {k}\nd = 100.0\n[nodes]\ndensity = {density}\n\
                     [[traffic]]\ntime = 3.0\ncount = 20\ninterval = 0.2\npaths = 8\nmode = \"copies\"\n",
                    1000 + seed
                ))
                .expect("built-in scenario")
            })
            .collect();
        let runs = run_all(scenarios);
        let sent: u64 = runs.iter().map(|m| m.messages_sent).sum();
        let got: u64 = runs.iter().map(|m| m.messages_delivered).sum();
        let ratio = got as f64 / sent as f64;
        let bound = delivery_prob_static((density * k * k) as f64, k as f64);
        pass &= ratio >= bound - 0.05;
        notes.push(format!("density {density}: {ratio:.3} >= {bound:.3} - 0.05"));
    }
    (pass, notes.join("; "))
}

fn c10_determinism() -> (bool, String) {
    let scenarios = [
        full_grid(5, 1, "[radio]\nloss = 0.1\n[[traffic]]\ntime = 2.0\ncount = 5\npayloads = 3\n"),
        Scenario::from_toml(
            "seed = 99\nduration = 15.0\n[grid]\nk = 8\nd = 30.0\n[nodes]\ncount = 150\n\
             [mobility]\nmodel = \"random_waypoint\"\nspeed = [0.5, 6.0]\npause = 1.0\n\
             [[traffic]]\ntime = 3.0\ncount = 12\ninterval = 0.5\npayloads = 8\n",
        )
        .expect("built-in scenario"),
    ];
    let mut pass = true;
    for mut s in scenarios {
        s.duration = s.duration.min(15.0);
        let bytes = |s: &Scenario| {
            let o = run_traced(s).expect("valid scenario");
            let mut csv = Vec::new();
            write_rows(&mut csv, &[o.metrics.row()]).expect("in-memory write");
            (csv, o.trace.unwrap_or_default())
        };
        pass &= bytes(&s) == bytes(&s);
    }
    (pass, "metrics CSV and trace compared byte for byte over repeated runs".into())
}

/// Runs every acceptance criterion in order.
pub fn verify_all() -> Vec<CriterionResult> {
    let checks: [(&'static str, Check); 10] = [
        ("cell-disjointness sweep", c1_disjoint),
        ("path lengths match the length table", c2_lengths),
        ("descriptor walk matches path expansion", c3_descriptors),
        ("static delivery bound at density 3", c4_static_bound),
        ("cell-exit probability", c5_exit),
        ("mobile delivery bound above 0.8", c6_mobile),
        ("broadcast forwarding count and coverage", c7_broadcast),
        ("large-message delay within bound", c8_delay),
        ("simulated delivery versus static bound", c9_sim_vs_bound),
        ("determinism", c10_determinism),
    ];
    checks
        .iter()
        .enumerate()
        .map(|(i, (name, f))| {
            let (pass, detail) = f();
            CriterionResult {
                number: i as u8 + 1,
                name,
                pass,
                detail,
            }
        })
        .collect()
}
