use std::io;

use serde::Serialize;

use crate::protocol::Energy;

/// Why a payload copy was lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropCause {
    /// The sender knew no gateway for the next cell, which had nodes.
    NoGateway,
    /// The next cell held no active node.
    EmptyCell,
    /// The destination was not in the cell it was routed to.
    StaleLocation,
    /// Lost on the radio.
    Loss,
    /// Addressee out of range or out of energy, the path left the grid, or
    /// the source had no location for the destination.
    Unreachable,
}

impl DropCause {
    pub fn as_str(self) -> &'static str {
        match self {
            DropCause::NoGateway => "no_gateway",
            DropCause::EmptyCell => "empty_cell",
            DropCause::StaleLocation => "stale_location",
            DropCause::Loss => "loss",
            DropCause::Unreachable => "unreachable",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Drops {
    pub no_gateway: u64,
    pub empty_cell: u64,
    pub stale_location: u64,
    pub loss: u64,
    pub unreachable: u64,
}

impl Drops {
    pub fn add(&mut self, cause: DropCause) {
        *match cause {
            DropCause::NoGateway => &mut self.no_gateway,
            DropCause::EmptyCell => &mut self.empty_cell,
            DropCause::StaleLocation => &mut self.stale_location,
            DropCause::Loss => &mut self.loss,
            DropCause::Unreachable => &mut self.unreachable,
        } += 1;
    }

    pub fn total(&self) -> u64 {
        self.no_gateway + self.empty_cell + self.stale_location + self.loss + self.unreachable
    }
}

/// Counters and samples collected over one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub seed: u64,
    pub payloads_sent: u64,
    pub payloads_delivered: u64,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    /// End-to-end delay of every delivered payload copy, in seconds.
    pub delays: Vec<f64>,
    /// Time from send to completion for every completed message.
    pub completion_times: Vec<f64>,
    pub broadcasts_forwarded: u64,
    pub beacons_sent: u64,
    pub transmissions: u64,
    pub receptions: u64,
    pub drops: Drops,
    pub initial_energy: Vec<Energy>,
    pub residual_energy: Vec<Energy>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn max(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::max)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn delivery_ratio(&self) -> Option<f64> {
        ratio(self.payloads_delivered, self.payloads_sent)
    }

    pub fn message_ratio(&self) -> Option<f64> {
        ratio(self.messages_delivered, self.messages_sent)
    }

    pub fn row(&self) -> MetricsRow {
        let total = |v: &[Energy]| v.iter().map(|&e| e as u64).sum::<u64>();
        MetricsRow {
            seed: self.seed,
            payloads_sent: self.payloads_sent,
            payloads_delivered: self.payloads_delivered,
            delivery_ratio: self.delivery_ratio(),
            messages_sent: self.messages_sent,
            messages_delivered: self.messages_delivered,
            message_ratio: self.message_ratio(),
            mean_delay: mean(&self.delays),
            max_delay: max(&self.delays),
            mean_completion: mean(&self.completion_times),
            max_completion: max(&self.completion_times),
            broadcasts_forwarded: self.broadcasts_forwarded,
            beacons_sent: self.beacons_sent,
            transmissions: self.transmissions,
            receptions: self.receptions,
            drop_no_gateway: self.drops.no_gateway,
            drop_empty_cell: self.drops.empty_cell,
            drop_stale_location: self.drops.stale_location,
            drop_loss: self.drops.loss,
            drop_unreachable: self.drops.unreachable,
            energy_initial: total(&self.initial_energy),
            energy_residual: total(&self.residual_energy),
            energy_min: self.residual_energy.iter().copied().min(),
        }
    }
}

/// One CSV row per run. Undefined ratios and empty samples are left blank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub payloads_sent: u64,
    pub payloads_delivered: u64,
    pub delivery_ratio: Option<f64>,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub message_ratio: Option<f64>,
    pub mean_delay: Option<f64>,
    pub max_delay: Option<f64>,
    pub mean_completion: Option<f64>,
    pub max_completion: Option<f64>,
    pub broadcasts_forwarded: u64,
    pub beacons_sent: u64,
    pub transmissions: u64,
    pub receptions: u64,
    pub drop_no_gateway: u64,
    pub drop_empty_cell: u64,
    pub drop_stale_location: u64,
    pub drop_loss: u64,
    pub drop_unreachable: u64,
    pub energy_initial: u64,
    pub energy_residual: u64,
    pub energy_min: Option<Energy>,
}

pub fn write_rows<W: io::Write>(out: W, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EnergyRow {
    node: usize,
    initial: Energy,
    residual: Energy,
}

/// Per-node energy table.
pub fn write_energy<W: io::Write>(out: W, m: &Metrics) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (node, (&initial, &residual)) in m.initial_energy.iter().zip(&m.residual_energy).enumerate() {
        w.serialize(EnergyRow { node, initial, residual })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_leaves_ratio_blank() {
        let m = Metrics {
            beacons_sent: 10,
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_rows(&mut buf, &[m.row()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        let col = |name| row[header.iter().position(|h| *h == name).unwrap()];
        assert_eq!(col("delivery_ratio"), "");
        assert_eq!(col("beacons_sent"), "10");
    }

    #[test]
    fn drops_accumulate_by_cause() {
        let mut d = Drops::default();
        d.add(DropCause::Loss);
        d.add(DropCause::Loss);
        d.add(DropCause::EmptyCell);
        assert_eq!((d.loss, d.empty_cell, d.total()), (2, 1, 3));
    }
}
