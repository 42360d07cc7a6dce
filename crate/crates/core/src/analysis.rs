//! Closed-form performance bounds and the curves built from them.
//!
//! All probabilities are lower bounds on delivery over eight cell-disjoint
//! paths, assuming nodes are uniformly spread over the `k^2` cells. Grid
//! sizes may be non-integral here: `k = 2 sqrt(2) delta / r` is used as-is
//! when curves are plotted against the radio range.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::grid::required_range;
use crate::paths::{path_length, CaseKind, PathError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("speed {speed} m/s over {t} s crosses more than the mean exit distance {d_avg:.3} m")]
    ExitAssumption { speed: f64, t: f64, d_avg: f64 },
    #[error("unknown figure `{0}` (expected fig9..fig13)")]
    UnknownFigure(String),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Every symbol used by the bounds, with the values used in the curves.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    /// Node count.
    pub n: f64,
    /// Cells per side.
    pub k: f64,
    /// Region side (m).
    pub delta: f64,
    /// Radio range (m).
    pub r: f64,
    /// Cell side (m).
    pub d: f64,
    /// Node speed (m/s).
    pub speed: f64,
    /// Packet transmission time (s).
    pub t: f64,
    /// Cell-exit probability during one transmission.
    pub p: f64,
    /// Message size (bytes).
    pub message: f64,
    /// Fragment size (bytes).
    pub fragment: f64,
    /// One-hop delay (s).
    pub tau: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            n: 100.0,
            k: 15.0,
            delta: 500.0,
            r: 200.0,
            d: 100.0,
            speed: 1.0,
            t: 1.0,
            p: 0.0,
            message: (1u32 << 20) as f64,
            fragment: (1u32 << 10) as f64,
            tau: 0.008,
        }
    }
}

/// The eight closed-form path lengths for a case and canonical deltas.
pub fn path_length_table(kind: CaseKind, dx: u32, dy: u32) -> Result<[u32; 8], PathError> {
    let mut out = [0; 8];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = path_length(kind, i as u8 + 1, dx, dy)?;
    }
    Ok(out)
}

/// Mean excess of the eight closed-form lengths over the shortest one.
pub fn mean_excess(kind: CaseKind) -> f64 {
    let (dx, dy) = match kind {
        CaseKind::Skewed => (5, 2),
        CaseKind::Straight => (4, 0),
        CaseKind::Adjacent => (1, 0),
        CaseKind::Diagonal => (3, 3),
    };
    let t = path_length_table(kind, dx, dy).expect("admissible deltas");
    let min = *t.iter().min().unwrap() as f64;
    t.iter().map(|&l| l as f64 - min).sum::<f64>() / 8.0
}

/// Probability that a given cell hosts at least one of `n` nodes.
pub fn p_nonempty(n: f64, k: f64) -> f64 {
    let empty = (n * (-1.0 / (k * k)).ln_1p()).exp();
    1.0 - empty
}

/// Probability that at least one of eight paths of length `k + 3` has every
/// cell occupied, each hop also surviving with probability `1 - p`.
fn eight_path_bound(n: f64, k: f64, p: f64) -> f64 {
    let hops = k + 3.0;
    let single = p_nonempty(n, k).powf(hops) * (1.0 - p).powf(hops);
    1.0 - (1.0 - single).powi(8)
}

/// Delivery lower bound for static nodes.
pub fn delivery_prob_static(n: f64, k: f64) -> f64 {
    eight_path_bound(n, k, 0.0)
}

/// Delivery lower bound when a forwarding node leaves its cell mid-hop
/// with probability `p`.
pub fn delivery_prob_mobile(n: f64, k: f64, p: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::OutOfRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    Ok(eight_path_bound(n, k, p))
}

/// Probability that a node leaves its cell during a transmission of `t`
/// seconds at `speed` m/s in cells of side `d`. The mean distance to the
/// cell border is taken as `d sqrt(2) / 2`.
pub fn exit_probability(d: f64, speed: f64, t: f64) -> Result<f64, AnalysisError> {
    let d_avg = d * std::f64::consts::SQRT_2 / 2.0;
    if speed < 0.0 || t < 0.0 {
        return Err(AnalysisError::OutOfRange {
            name: "speed*t",
            value: speed * t,
            range: "[0, inf)",
        });
    }
    if speed * t > d_avg {
        return Err(AnalysisError::ExitAssumption { speed, t, d_avg });
    }
    Ok(speed * t / d_avg)
}

/// Upper bound on the time to move a `message`-byte message cut into
/// `fragment`-byte packets over eight paths no longer than `k + 8` hops.
pub fn message_delay_bound(message: f64, fragment: f64, tau: f64, k: f64) -> f64 {
    (message / fragment) * tau * (k + 8.0) / 8.0
}

/// Same message pushed down one shortest path of at most `k` hops.
pub fn single_path_delay(message: f64, fragment: f64, tau: f64, k: f64) -> f64 {
    (message / fragment) * tau * k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadcastCost {
    /// Cells per side with maximal cells, not rounded.
    pub k: f64,
    /// Forwarded copies, `k^2 / 2`.
    pub packets: f64,
    /// Worst-case hops from a corner cell.
    pub delay_hops: f64,
}

pub fn broadcast_cost(delta: f64, r: f64) -> BroadcastCost {
    let k = required_range(delta) / r;
    BroadcastCost {
        k,
        packets: k * k / 2.0,
        delay_hops: k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// Delivery bound against node density.
    DeliveryVsDensity,
    /// Delivery bound against radio range.
    DeliveryVsRange,
    /// Message delay bound against radio range.
    DelayVsRange,
    /// Delivery bound with mobility against density.
    DeliveryWithMobility,
    /// Broadcast copies against radio range.
    BroadcastVsRange,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [
        FigureId::DeliveryVsDensity,
        FigureId::DeliveryVsRange,
        FigureId::DelayVsRange,
        FigureId::DeliveryWithMobility,
        FigureId::BroadcastVsRange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::DeliveryVsDensity => "fig9",
            FigureId::DeliveryVsRange => "fig10",
            FigureId::DelayVsRange => "fig11",
            FigureId::DeliveryWithMobility => "fig12",
            FigureId::BroadcastVsRange => "fig13",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AnalysisError::UnknownFigure(s.to_string()))
    }
}

/// Parameter grids for the figure curves.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureParams {
    pub densities: Vec<f64>,
    pub density_ks: Vec<f64>,
    pub ranges: Vec<f64>,
    pub mobility_ps: Vec<f64>,
    /// Grid size for the mobility curves.
    pub mobility_k: f64,
    pub base: AnalysisParams,
}

fn linspace(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

impl Default for FigureParams {
    fn default() -> Self {
        FigureParams {
            densities: linspace(0.25, 6.0, 0.25),
            density_ks: vec![10.0, 15.0, 20.0],
            ranges: linspace(50.0, 1400.0, 10.0),
            mobility_ps: vec![0.0, 0.05, 0.1],
            mobility_k: 15.0,
            base: AnalysisParams::default(),
        }
    }
}

/// A computed figure: fixed-parameter comment, column names, rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub id: FigureId,
    pub comment: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FigureTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# {}", self.comment)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn label(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        v.to_string()
    }
}

pub fn figure(id: FigureId, fp: &FigureParams) -> Result<FigureTable, AnalysisError> {
    let b = &fp.base;
    let range_k = |r: f64| required_range(b.delta) / r;
    let table = match id {
        FigureId::DeliveryVsDensity => FigureTable {
            id,
            comment: "delivery lower bound vs density, N = density * k^2, p = 0".into(),
            header: std::iter::once("density".to_string())
                .chain(fp.density_ks.iter().map(|k| format!("Pd_k{}", label(*k))))
                .collect(),
            rows: fp
                .densities
                .iter()
                .map(|&den| {
                    std::iter::once(den)
                        .chain(fp.density_ks.iter().map(|&k| delivery_prob_static(den * k * k, k)))
                        .collect()
                })
                .collect(),
        },
        FigureId::DeliveryVsRange => FigureTable {
            id,
            comment: format!("delivery lower bound vs range, N={}, delta={}, k=2*sqrt(2)*delta/r", b.n, b.delta),
            header: vec!["r".into(), "k".into(), "Pd".into()],
            rows: fp
                .ranges
                .iter()
                .map(|&r| vec![r, range_k(r), delivery_prob_static(b.n, range_k(r).max(1.0))])
                .collect(),
        },
        FigureId::DelayVsRange => FigureTable {
            id,
            comment: format!(
                "message delay bound vs range, M={}, s={}, tau={}, delta={}",
                b.message, b.fragment, b.tau, b.delta
            ),
            header: vec!["r".into(), "k".into(), "T_parallel".into(), "T_single_path".into()],
            rows: fp
                .ranges
                .iter()
                .map(|&r| {
                    let k = range_k(r);
                    vec![
                        r,
                        k,
                        message_delay_bound(b.message, b.fragment, b.tau, k),
                        single_path_delay(b.message, b.fragment, b.tau, k),
                    ]
                })
                .collect(),
        },
        FigureId::DeliveryWithMobility => {
            let k = fp.mobility_k;
            let mut rows = Vec::with_capacity(fp.densities.len());
            for &den in &fp.densities {
                let mut row = vec![den];
                for &p in &fp.mobility_ps {
                    row.push(delivery_prob_mobile(den * k * k, k, p)?);
                }
                rows.push(row);
            }
            FigureTable {
                id,
                comment: format!("delivery lower bound with mobility vs density, k={}", label(k)),
                header: std::iter::once("density".to_string())
                    .chain(fp.mobility_ps.iter().map(|p| format!("Pd_p{p}")))
                    .collect(),
                rows,
            }
        }
        FigureId::BroadcastVsRange => FigureTable {
            id,
            comment: format!("broadcast copies vs range, delta={}", b.delta),
            header: vec!["r".into(), "k".into(), "packets".into(), "delay_hops".into()],
            rows: fp
                .ranges
                .iter()
                .map(|&r| {
                    let c = broadcast_cost(b.delta, r);
                    vec![r, c.k, c.packets, c.delay_hops]
                })
                .collect(),
        },
    };
    Ok(table)
}

/// Writes `figN.csv` for every figure into `dir`.
pub fn emit_figures(dir: &Path, fp: &FigureParams) -> Result<Vec<PathBuf>, AnalysisError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| AnalysisError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for id in FigureId::ALL {
        let path = dir.join(format!("{id}.csv"));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        figure(id, fp)?
            .write_csv(io::BufWriter::new(file))
            .map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
