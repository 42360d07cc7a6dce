use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use prp::analysis::{
    broadcast_cost, delivery_prob_mobile, delivery_prob_static, emit_figures, exit_probability, figure,
    message_delay_bound, path_length_table, single_path_delay, AnalysisParams, FigureId, FigureParams,
};
use prp::grid::{Cell, GridConfig};
use prp::paths::{build_paths, check_disjoint, expand, ExpandedPath, RouteShape};
use prp::sim::{run, run_traced, sweep, write_energy, write_rows, Axis, Scenario};
use prp::verify::verify_all;

/// Parallel cell-disjoint routing: path inspection, analytical bounds and
/// simulation.
#[derive(Parser)]
#[command(name = "prp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the eight paths between two cells.
    Paths {
        /// Source cell as x,y.
        source: Cell,
        /// Destination cell as x,y.
        dest: Cell,
        /// Grid side; paths leaving a k x k grid are marked infeasible.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Emit a figure's curves or evaluate one formula as CSV.
    Analyze {
        /// fig9..fig13, figures, exit-prob, pd-static, pd-mobile, delay or broadcast.
        target: String,
        #[command(flatten)]
        params: ParamFlags,
        /// Output file (a directory for `figures`); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario and print its metrics row.
    Simulate {
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the event trace to FILE, or to stderr when FILE is omitted.
        #[arg(long, value_name = "FILE", num_args = 0..=1, default_missing_value = "-")]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-node initial and residual energy CSV.
        #[arg(long, value_name = "FILE")]
        energy: Option<PathBuf>,
    },
    /// Run a scenario over a range of values of one numeric field.
    Sweep {
        scenario: PathBuf,
        /// key=v1,v2,... or key=start:stop:step, e.g. nodes.density=1:4:1.
        #[arg(long)]
        axis: Axis,
        /// Seeds per axis point.
        #[arg(long, default_value_t = 10)]
        seeds: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria, one line each.
    Verify,
}

#[derive(Args, Default)]
struct ParamFlags {
    /// Node count.
    #[arg(long)]
    n: Option<f64>,
    /// Cells per side.
    #[arg(long)]
    k: Option<f64>,
    /// Region side (m).
    #[arg(long)]
    delta: Option<f64>,
    /// Radio range (m).
    #[arg(long)]
    r: Option<f64>,
    /// Cell side (m).
    #[arg(long)]
    d: Option<f64>,
    /// Node speed (m/s).
    #[arg(long = "s")]
    speed: Option<f64>,
    /// Packet transmission time (s).
    #[arg(long)]
    t: Option<f64>,
    /// Cell-exit probability.
    #[arg(long)]
    p: Option<f64>,
    /// Message size (bytes).
    #[arg(long = "m")]
    message: Option<f64>,
    /// Fragment size (bytes).
    #[arg(long = "frag")]
    fragment: Option<f64>,
    /// One-hop delay (s).
    #[arg(long)]
    tau: Option<f64>,
}

impl ParamFlags {
    fn apply(&self) -> AnalysisParams {
        let mut a = AnalysisParams::default();
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut a.n, self.n);
        set(&mut a.k, self.k);
        set(&mut a.delta, self.delta);
        set(&mut a.r, self.r);
        set(&mut a.d, self.d);
        set(&mut a.speed, self.speed);
        set(&mut a.t, self.t);
        set(&mut a.p, self.p);
        set(&mut a.message, self.message);
        set(&mut a.fragment, self.fragment);
        set(&mut a.tau, self.tau);
        a
    }

    fn figure_params(&self) -> FigureParams {
        let mut fp = FigureParams {
            base: self.apply(),
            ..FigureParams::default()
        };
        if let Some(k) = self.k {
            fp.density_ks = vec![k];
            fp.mobility_k = k;
        }
        if let Some(p) = self.p {
            fp.mobility_ps = vec![p];
        }
        fp
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_paths(out: &mut dyn Write, source: Cell, dest: Cell, k: Option<u32>) -> Result<()> {
    let Some(shape) = RouteShape::of(source, dest) else {
        bail!("source and destination are the same cell {source}");
    };
    let grid = k.map(GridConfig::unit);
    if let Some(g) = &grid {
        for c in [source, dest] {
            if !g.contains(c) {
                bail!("cell {c} is outside the {0}x{0} grid", g.k);
            }
        }
    }
    write!(out, "{source} -> {dest}: {}, dx={} dy={}", shape.case, shape.dx, shape.dy)?;
    match &grid {
        Some(g) => writeln!(out, ", grid {0}x{0}", g.k)?,
        None => writeln!(out, ", unbounded grid")?,
    }
    let table = path_length_table(shape.case.kind, shape.dx, shape.dy)?;
    let mut feasible: Vec<(u8, ExpandedPath)> = Vec::new();
    for spec in build_paths(source, dest)? {
        let cells = expand(&spec, source);
        let fits = grid.as_ref().is_none_or(|g| cells.fits(g));
        writeln!(
            out,
            "path {} length {}{}: {spec}",
            spec.path_index,
            spec.len(),
            if fits { "" } else { " INFEASIBLE" }
        )?;
        let listing: Vec<String> = cells.cells.iter().map(Cell::to_string).collect();
        writeln!(out, "  {}", listing.join(" "))?;
        if fits {
            feasible.push((spec.path_index, cells));
        }
    }
    let refs: Vec<&ExpandedPath> = feasible.iter().map(|(_, p)| p).collect();
    let ids: Vec<String> = feasible.iter().map(|(i, _)| i.to_string()).collect();
    writeln!(out, "feasible: {} [{}]", feasible.len(), ids.join(","))?;
    match check_disjoint(&refs) {
        Ok(()) => writeln!(out, "disjoint: true")?,
        Err(o) => writeln!(
            out,
            "disjoint: false (paths {} and {} share {})",
            feasible[o.first].0, feasible[o.second].0, o.cell
        )?,
    }
    let lengths: Vec<String> = table.iter().map(u32::to_string).collect();
    writeln!(out, "table lengths: {}", lengths.join(" "))?;
    Ok(())
}

fn write_single(out: &mut dyn Write, header: &[&str], row: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    w.write_record(row.iter().map(f64::to_string))?;
    w.flush()?;
    Ok(())
}

fn cmd_analyze(target: &str, flags: &ParamFlags, out: Option<&Path>) -> Result<()> {
    let a = flags.apply();
    if target == "figures" {
        let Some(dir) = out else {
            bail!("`analyze figures` needs --out DIR");
        };
        for path in emit_figures(dir, &flags.figure_params())? {
            eprintln!("wrote {}", path.display());
        }
        return Ok(());
    }
    let mut w = output(out)?;
    match target {
        "exit-prob" => {
            let p = exit_probability(a.d, a.speed, a.t)?;
            write_single(&mut w, &["d", "s", "t", "p"], &[a.d, a.speed, a.t, p])?;
        }
        "pd-static" => {
            let pd = delivery_prob_static(a.n, a.k);
            write_single(&mut w, &["N", "k", "Pd"], &[a.n, a.k, pd])?;
        }
        "pd-mobile" => {
            let pd = delivery_prob_mobile(a.n, a.k, a.p)?;
            write_single(&mut w, &["N", "k", "p", "Pd"], &[a.n, a.k, a.p, pd])?;
        }
        "delay" => {
            let t = message_delay_bound(a.message, a.fragment, a.tau, a.k);
            let single = single_path_delay(a.message, a.fragment, a.tau, a.k);
            write_single(
                &mut w,
                &["M", "s", "tau", "k", "T_parallel", "T_single_path"],
                &[a.message, a.fragment, a.tau, a.k, t, single],
            )?;
        }
        "broadcast" => {
            let c = broadcast_cost(a.delta, a.r);
            write_single(
                &mut w,
                &["delta", "r", "k", "packets", "delay_hops"],
                &[a.delta, a.r, c.k, c.packets, c.delay_hops],
            )?;
        }
        fig => {
            let id: FigureId = fig.parse()?;
            figure(id, &flags.figure_params())?.write_csv(&mut w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::load(path).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn cmd_simulate(
    path: &Path,
    seed: Option<u64>,
    trace: Option<&Path>,
    out: Option<&Path>,
    energy: Option<&Path>,
) -> Result<()> {
    let mut scenario = load(path)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let outcome = if trace.is_some() { run_traced(&scenario) } else { run(&scenario) }
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    if let Some(t) = trace {
        let text = outcome.trace.as_deref().unwrap_or_default();
        if t == Path::new("-") {
            io::stderr().lock().write_all(text.as_bytes())?;
        } else {
            std::fs::write(t, text).with_context(|| format!("cannot write {}", t.display()))?;
        }
    }
    if let Some(e) = energy {
        write_energy(output(Some(e))?, &outcome.metrics)?;
    }
    write_rows(output(out)?, &[outcome.metrics.row()])?;
    Ok(())
}

fn cmd_sweep(path: &Path, axis: &Axis, seeds: u32, out: Option<&Path>) -> Result<()> {
    let scenario = load(path)?;
    let rows = sweep(&scenario, axis, seeds)?;
    let mut w = csv::Writer::from_writer(output(out)?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_verify() -> Result<bool> {
    let results = verify_all();
    let passed = results.iter().filter(|r| r.pass).count();
    for r in &results {
        println!("{r}");
    }
    println!("{passed}/{} criteria passed", results.len());
    Ok(passed == results.len())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Paths { source, dest, k } => {
            cmd_paths(&mut io::stdout().lock(), *source, *dest, *k).map(|_| true)
        }
        Command::Analyze { target, params, out } => cmd_analyze(target, params, out.as_deref()).map(|_| true),
        Command::Simulate {
            scenario,
            seed,
            trace,
            out,
            energy,
        } => cmd_simulate(scenario, *seed, trace.as_deref(), out.as_deref(), energy.as_deref()).map(|_| true),
        Command::Sweep {
            scenario,
            axis,
            seeds,
            out,
        } => cmd_sweep(scenario, axis, *seeds, out.as_deref()).map(|_| true),
        Command::Verify => cmd_verify(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
