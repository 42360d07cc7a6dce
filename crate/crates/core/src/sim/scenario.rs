//! TOML scenario files.
//!
//! ```toml
//! seed = 7
//! duration = 20.0
//!
//! [grid]
//! k = 10
//! d = 100.0            # or `delta`; `range` defaults to 2*sqrt(2)*d
//!
//! [nodes]
//! placement = "per_cell" # or "uniform"
//! density = 3            # or `count` (uniform only)
//! energy = [5000, 10000]
//!
//! [mobility]
//! model = "random_waypoint"
//! speed = [0.5, 2.0]
//! pause = 1.0
//!
//! [[traffic]]
//! time = 3.0
//! source = 0            # omitted: drawn at random
//! dest = 42
//! payloads = 16
//! paths = 8
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{cells_from_range, required_range, GridConfig, GridError};
use crate::protocol::{Energy, NodeId, ProtocolConfig};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("invalid grid: {0}")]
    Grid(#[from] GridError),
}

fn invalid(key: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.to_owned(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    /// Simulated seconds; events past this time are discarded.
    pub duration: f64,
    pub grid: GridSection,
    pub nodes: NodesSection,
    #[serde(default)]
    pub mobility: MobilitySection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub radio: RadioSection,
    #[serde(default)]
    pub traffic: Vec<TrafficSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub k: Option<u32>,
    pub d: Option<f64>,
    pub delta: Option<f64>,
    pub range: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    Uniform,
    PerCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodesSection {
    #[serde(default)]
    pub placement: Placement,
    pub count: Option<u32>,
    /// Mean nodes per cell.
    pub density: Option<f64>,
    #[serde(default = "default_energy")]
    pub energy: [Energy; 2],
}

fn default_energy() -> [Energy; 2] {
    [100_000, 100_000]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityModel {
    #[default]
    None,
    RandomWaypoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilitySection {
    pub model: MobilityModel,
    /// Speed range in m/s.
    pub speed: [f64; 2],
    /// Pause at each waypoint in seconds.
    pub pause: f64,
    /// Interval between position updates in seconds.
    pub tick: f64,
}

impl Default for MobilitySection {
    fn default() -> Self {
        MobilitySection {
            model: MobilityModel::None,
            speed: [0.0, 0.0],
            pause: 0.0,
            tick: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationBootstrap {
    /// Every node floods a cell-exit for its starting cell during the
    /// second beacon period.
    #[default]
    Announce,
    /// Location tables start with every node's true cell.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub beacon_period: f64,
    pub gateway_ttl_periods: f64,
    pub location: LocationBootstrap,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        ProtocolSection {
            beacon_period: p.beacon_period,
            gateway_ttl_periods: p.gateway_ttl_periods,
            location: LocationBootstrap::Announce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioSection {
    /// One-hop delay in seconds.
    pub tau: f64,
    /// Independent per-receiver loss probability.
    pub loss: f64,
    pub tx_cost: Energy,
    pub rx_cost: Energy,
    /// At most one transmission per node per `tau`.
    pub queue: bool,
}

impl Default for RadioSection {
    fn default() -> Self {
        RadioSection {
            tau: 0.008,
            loss: 0.0,
            tx_cost: 1,
            rx_cost: 1,
            queue: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficMode {
    /// Payloads are split round-robin over the paths.
    #[default]
    Fragments,
    /// Every payload is sent once on each path; a copy arriving suffices.
    Copies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub time: f64,
    pub source: Option<NodeId>,
    pub dest: Option<NodeId>,
    #[serde(default = "one")]
    pub payloads: u32,
    #[serde(default = "eight")]
    pub paths: u8,
    /// Payload size in bytes. Affects only reporting.
    #[serde(default = "kib")]
    pub size: u32,
    #[serde(default)]
    pub mode: TrafficMode,
    /// Number of messages generated by this entry.
    #[serde(default = "one")]
    pub count: u32,
    /// Seconds between successive messages of this entry.
    #[serde(default = "one_second")]
    pub interval: f64,
}

fn one() -> u32 {
    1
}
fn eight() -> u8 {
    8
}
fn kib() -> u32 {
    1024
}
fn one_second() -> f64 {
    1.0
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn grid_config(&self) -> Result<GridConfig, ScenarioError> {
        let g = &self.grid;
        let (k, d, delta) = match (g.k, g.d, g.delta) {
            (Some(k), Some(d), None) => (k, d, k as f64 * d),
            (Some(k), None, Some(delta)) => (k, delta / k.max(1) as f64, delta),
            (Some(k), Some(d), Some(delta)) => (k, d, delta),
            (None, None, Some(delta)) => {
                let r = g.range.ok_or_else(|| invalid("grid.range", "required when `grid.k` is omitted"))?;
                let k = cells_from_range(delta, r)?;
                (k, delta / k as f64, delta)
            }
            (Some(_), None, None) => return Err(invalid("grid", "one of `d` or `delta` is required")),
            _ => return Err(invalid("grid.k", "required unless `delta` and `range` are given")),
        };
        let r = g.range.unwrap_or_else(|| required_range(d));
        Ok(GridConfig::new(k, d, delta, r)?)
    }

    /// Node count implied by the placement section.
    pub fn node_count(&self) -> Result<u32, ScenarioError> {
        let k = self.grid_config()?.k as f64;
        let n = &self.nodes;
        match (n.placement, n.count, n.density) {
            (_, Some(_), Some(_)) => Err(invalid("nodes.count", "give either `count` or `density`, not both")),
            (Placement::Uniform, Some(c), None) => Ok(c),
            (Placement::Uniform, None, Some(rho)) => Ok((rho * k * k).round() as u32),
            (Placement::PerCell, None, Some(rho)) => Ok(rho as u32 * (k * k) as u32),
            (Placement::PerCell, Some(_), None) => Err(invalid("nodes.count", "per_cell placement takes `density`")),
            (_, None, None) => Err(invalid("nodes.count", "one of `count` or `density` is required")),
        }
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig {
            beacon_period: self.protocol.beacon_period,
            gateway_ttl_periods: self.protocol.gateway_ttl_periods,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.grid_config()?;
        let pos = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive, got {v}")))
            }
        };
        pos("duration", self.duration)?;
        if let Some(rho) = self.nodes.density {
            if !(rho.is_finite() && rho >= 0.0) {
                return Err(invalid("nodes.density", format!("must be non-negative, got {rho}")));
            }
            if self.nodes.placement == Placement::PerCell && rho.fract() != 0.0 {
                return Err(invalid("nodes.density", "per_cell placement needs a whole number"));
            }
        }
        let n = self.node_count()?;
        if n == 0 {
            return Err(invalid("nodes", "at least one node is required"));
        }
        let [e_lo, e_hi] = self.nodes.energy;
        if e_lo > e_hi {
            return Err(invalid("nodes.energy", "minimum exceeds maximum"));
        }
        let m = &self.mobility;
        let [s_lo, s_hi] = m.speed;
        if !(s_lo.is_finite() && s_hi.is_finite() && 0.0 <= s_lo && s_lo <= s_hi) {
            return Err(invalid("mobility.speed", "need 0 <= min <= max"));
        }
        if !(m.pause.is_finite() && m.pause >= 0.0) {
            return Err(invalid("mobility.pause", "must be non-negative"));
        }
        pos("mobility.tick", m.tick)?;
        pos("protocol.beacon_period", self.protocol.beacon_period)?;
        pos("protocol.gateway_ttl_periods", self.protocol.gateway_ttl_periods)?;
        pos("radio.tau", self.radio.tau)?;
        if !(0.0..=1.0).contains(&self.radio.loss) {
            return Err(invalid("radio.loss", "must lie in [0, 1]"));
        }
        for (i, t) in self.traffic.iter().enumerate() {
            let key = |f: &str| format!("traffic[{i}].{f}");
            if !(t.time.is_finite() && t.time >= 0.0) {
                return Err(invalid(&key("time"), "must be non-negative"));
            }
            for (f, id) in [("source", t.source), ("dest", t.dest)] {
                if id.is_some_and(|id| id >= n) {
                    return Err(invalid(&key(f), format!("no node {} among {n}", id.unwrap())));
                }
            }
            if t.source.is_some() && t.source == t.dest {
                return Err(invalid(&key("dest"), "equals source"));
            }
            if n < 2 && (t.source.is_none() || t.dest.is_none()) {
                return Err(invalid(&key("source"), "random endpoints need at least two nodes"));
            }
            if t.payloads == 0 {
                return Err(invalid(&key("payloads"), "must be at least 1"));
            }
            if t.paths == 0 {
                return Err(invalid(&key("paths"), "must be at least 1"));
            }
            if t.count > 1 {
                pos(&key("interval"), t.interval)?;
            }
        }
        Ok(())
    }
}
