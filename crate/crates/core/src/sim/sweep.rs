//! Repeated runs over one numeric scenario field, fanned out with rayon and
//! merged back in point order.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::{run, MobilityModel, Scenario, ScenarioError};
use crate::analysis::{delivery_prob_mobile, delivery_prob_static, exit_probability};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("axis `{0}` must look like key=v1,v2,... or key=start:stop:step")]
    AxisSyntax(String),
    #[error("axis `{0}` is not a numeric scenario field")]
    NonNumeric(String),
    #[error("at {key} = {value}: {source}")]
    Point { key: String, value: f64, source: ScenarioError },
    #[error("seeds per point must be at least 1")]
    NoSeeds,
    #[error("scenario: {0}")]
    Base(String),
}

/// A dotted scenario key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

impl FromStr for Axis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SweepError::AxisSyntax(s.to_owned());
        let (key, spec) = s.split_once('=').ok_or_else(bad)?;
        let key = key.trim();
        if key.is_empty() {
            return Err(bad());
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let values: Vec<f64> = if spec.contains(':') {
            let parts: Vec<f64> = spec.split(':').map(num).collect::<Result<_, _>>()?;
            let [start, stop, step] = parts[..] else { return Err(bad()) };
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        } else {
            spec.split(',').map(num).collect::<Result<_, _>>()?
        };
        if values.is_empty() {
            return Err(bad());
        }
        Ok(Axis {
            key: key.to_owned(),
            values,
        })
    }
}

/// Aggregate over the seeds of one axis point. Ratios are mean and
/// standard error over runs that sent traffic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub key: String,
    pub value: f64,
    pub runs: usize,
    pub nodes: u32,
    pub k: u32,
    pub density: f64,
    pub message_ratio: Option<f64>,
    pub message_ratio_stderr: Option<f64>,
    pub delivery_ratio: Option<f64>,
    pub delivery_ratio_stderr: Option<f64>,
    pub mean_delay: Option<f64>,
    pub broadcasts_forwarded: f64,
    pub exit_probability: Option<f64>,
    pub bound_static: f64,
    pub bound_mobile: Option<f64>,
}

fn mean_stderr(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (Some(mean), None);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

fn set_key(doc: &mut toml::Table, key: &str, value: f64) -> Result<(), SweepError> {
    let non_numeric = || SweepError::NonNumeric(key.to_owned());
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().ok_or_else(non_numeric)?;
    let mut table = doc;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(non_numeric)?;
    }
    let whole = value.fract() == 0.0 && value.abs() < 9.0e15;
    let new = match table.get(leaf) {
        Some(toml::Value::Float(_)) => toml::Value::Float(value),
        Some(toml::Value::Integer(_)) if whole => toml::Value::Integer(value as i64),
        Some(toml::Value::Integer(_)) => toml::Value::Float(value),
        Some(_) => return Err(non_numeric()),
        None if whole => toml::Value::Integer(value as i64),
        None => toml::Value::Float(value),
    };
    table.insert(leaf.to_owned(), new);
    // node count and density are alternatives
    if key == "nodes.density" {
        table.remove("count");
    } else if key == "nodes.count" {
        table.remove("density");
    }
    Ok(())
}

fn point_scenario(base: &toml::Table, key: &str, value: f64) -> Result<Scenario, SweepError> {
    let mut doc = base.clone();
    set_key(&mut doc, key, value)?;
    let text = toml::to_string(&doc).map_err(|e| SweepError::Base(e.to_string()))?;
    Scenario::from_toml(&text).map_err(|source| SweepError::Point {
        key: key.to_owned(),
        value,
        source,
    })
}

/// Runs `seeds` seeds (scenario seed, seed+1, ...) at every axis value.
pub fn sweep(base: &Scenario, axis: &Axis, seeds: u32) -> Result<Vec<SweepRow>, SweepError> {
    if seeds == 0 {
        return Err(SweepError::NoSeeds);
    }
    let doc: toml::Table = toml::from_str(&base.to_toml()).map_err(|e| SweepError::Base(e.to_string()))?;
    let points: Vec<Scenario> = axis
        .values
        .iter()
        .map(|&v| point_scenario(&doc, &axis.key, v))
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(usize, Scenario)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            (0..seeds as u64).map(move |j| {
                (
                    i,
                    Scenario {
                        seed: s.seed.wrapping_add(j),
                        ..s.clone()
                    },
                )
            })
        })
        .collect();
    let results: Vec<(usize, super::Metrics)> = jobs
        .into_par_iter()
        .map(|(i, s)| run(&s).map(|o| (i, o.metrics)))
        .collect::<Result<_, _>>()
        .map_err(|e| SweepError::Base(e.to_string()))?;

    points
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let runs: Vec<&super::Metrics> = results.iter().filter(|(j, _)| *j == i).map(|(_, m)| m).collect();
            let grid = s.grid_config().map_err(|e| SweepError::Base(e.to_string()))?;
            let nodes = s.node_count().map_err(|e| SweepError::Base(e.to_string()))?;
            let (n, k) = (nodes as f64, grid.k as f64);
            let msg: Vec<f64> = runs.iter().filter_map(|m| m.message_ratio()).collect();
            let pay: Vec<f64> = runs.iter().filter_map(|m| m.delivery_ratio()).collect();
            let delays: Vec<f64> = runs.iter().flat_map(|m| m.delays.iter().copied()).collect();
            let (message_ratio, message_ratio_stderr) = mean_stderr(&msg);
            let (delivery_ratio, delivery_ratio_stderr) = mean_stderr(&pay);
            let p = match s.mobility.model {
                MobilityModel::None => Some(0.0),
                MobilityModel::RandomWaypoint => {
                    let speed = (s.mobility.speed[0] + s.mobility.speed[1]) / 2.0;
                    exit_probability(grid.d, speed, s.radio.tau).ok()
                }
            };
            Ok(SweepRow {
                key: axis.key.clone(),
                value: axis.values[i],
                runs: runs.len(),
                nodes,
                k: grid.k,
                density: n / (k * k),
                message_ratio,
                message_ratio_stderr,
                delivery_ratio,
                delivery_ratio_stderr,
                mean_delay: mean_stderr(&delays).0,
                broadcasts_forwarded: runs.iter().map(|m| m.broadcasts_forwarded as f64).sum::<f64>()
                    / runs.len() as f64,
                exit_probability: p,
                bound_static: delivery_prob_static(n, k),
                bound_mobile: p.and_then(|p| delivery_prob_mobile(n, k, p).ok()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_syntax() {
        let a: Axis = "nodes.density=1,2,3".parse().unwrap();
        assert_eq!(a.values, vec![1.0, 2.0, 3.0]);
        let b: Axis = "grid.k=4:10:2".parse().unwrap();
        assert_eq!(b.values, vec![4.0, 6.0, 8.0, 10.0]);
        assert!("nodes.density".parse::<Axis>().is_err());
        assert!("x=1:2".parse::<Axis>().is_err());
        assert!("x=a,b".parse::<Axis>().is_err());
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((se.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_stderr(&[]), (None, None));
    }

    fn base() -> Scenario {
        Scenario::from_toml(
            "duration = 4.0\n[grid]\nk = 4\nd = 10.0\n[nodes]\ncount = 32\n[protocol]\nlocation = \"oracle\"\n\
             [[traffic]]\ntime = 2.0\ncount = 4\ninterval = 0.2\nmode = \"copies\"\n",
        )
        .unwrap()
    }

    #[test]
    fn non_numeric_axis_is_rejected() {
        let err = sweep(&base(), &"protocol.location=1".parse().unwrap(), 1).unwrap_err();
        assert!(matches!(err, SweepError::NonNumeric(_)), "{err}");
        let err = sweep(&base(), &"nodes.speed=1".parse().unwrap(), 1).unwrap_err();
        assert!(err.to_string().contains("speed"), "{err}");
    }

    #[test]
    fn density_axis_replaces_count_and_reports_bounds() {
        let rows = sweep(&base(), &"nodes.density=1,3".parse().unwrap(), 3).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].nodes, rows[1].nodes), (16, 48));
        assert_eq!(rows[1].runs, 3);
        assert!((rows[1].bound_static - delivery_prob_static(48.0, 4.0)).abs() < 1e-15);
        assert_eq!(rows[1].bound_mobile, Some(rows[1].bound_static));
        // deterministic regardless of thread scheduling
        assert_eq!(rows, sweep(&base(), &"nodes.density=1,3".parse().unwrap(), 3).unwrap());
    }

    #[test]
    fn float_fields_accept_whole_values() {
        let rows = sweep(&base(), &"radio.tau=1".parse().unwrap(), 1).unwrap();
        assert_eq!(rows.len(), 1);
    }
}
