//! Parameter sweeps over station counts, one comparison per point and seed.

use thiserror::Error;

use crate::simulator::{compare, Scenario, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    MsCount,
    RsCount,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ms_count" => Some(SweepAxis::MsCount),
            "rs_count" => Some(SweepAxis::RsCount),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::MsCount => "ms_count",
            SweepAxis::RsCount => "rs_count",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Strictly increasing axis values.
    pub values: Vec<usize>,
    /// Count of the other station kind, held fixed.
    pub fixed: usize,
    pub scenario: Scenario,
    pub seeds_per_point: usize,
    /// Seeds are `first_seed, first_seed + 1, ...`.
    pub first_seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("sweep values must be non-empty")]
    NoValues,
    #[error("sweep values must be strictly increasing")]
    NotIncreasing,
    #[error("seeds_per_point must be at least 1")]
    NoSeeds,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() {
            return Err(SweepError::NoValues);
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SweepError::NotIncreasing);
        }
        if self.seeds_per_point == 0 {
            return Err(SweepError::NoSeeds);
        }
        Ok(())
    }

    /// The configuration of one sweep point.
    pub fn point_config(&self, base: &SimConfig, value: usize, seed: u64) -> SimConfig {
        let (n_ms, n_rs) = match self.axis {
            SweepAxis::MsCount => (value, self.fixed),
            SweepAxis::RsCount => (self.fixed, value),
        };
        SimConfig { scenario: self.scenario, n_ms, n_rs, seed, ..base.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub ebcd_mean_mj: f64,
    pub dijkstra_mean_mj: f64,
    pub savings_percent: f64,
    pub power_capped: f64,
    pub unreachable: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepRow {
    Data { axis_value: usize, seed: u64, stats: PointStats },
    Error { axis_value: usize, seed: u64, message: String },
    /// Mean over the point's successful seeds; None if every seed failed.
    Mean { axis_value: usize, stats: Option<PointStats> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
}

impl SweepOutcome {
    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r, SweepRow::Error { .. })).count()
    }
}

fn mean(stats: &[PointStats]) -> Option<PointStats> {
    if stats.is_empty() {
        return None;
    }
    let n = stats.len() as f64;
    let avg = |f: fn(&PointStats) -> f64| stats.iter().map(f).sum::<f64>() / n;
    Some(PointStats {
        ebcd_mean_mj: avg(|s| s.ebcd_mean_mj),
        dijkstra_mean_mj: avg(|s| s.dijkstra_mean_mj),
        savings_percent: avg(|s| s.savings_percent),
        power_capped: avg(|s| s.power_capped),
        unreachable: avg(|s| s.unreachable),
    })
}

/// Runs every point in specification order. A failing point becomes an
/// error row and the sweep continues.
pub fn run_sweep(spec: &SweepSpec, base: &SimConfig) -> Result<SweepOutcome, SweepError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &value in &spec.values {
        let mut ok = Vec::new();
        for k in 0..spec.seeds_per_point as u64 {
            let seed = spec.first_seed.wrapping_add(k);
            match compare(&spec.point_config(base, value, seed)) {
                Ok(r) => {
                    let stats = PointStats {
                        ebcd_mean_mj: r.ebcd.mean_energy_per_frame_mj,
                        dijkstra_mean_mj: r.baseline.mean_energy_per_frame_mj,
                        savings_percent: r.savings_percent,
                        power_capped: (r.ebcd.power_capped_links + r.baseline.power_capped_links) as f64,
                        unreachable: r.ebcd.unreachable_count as f64,
                    };
                    ok.push(stats.clone());
                    rows.push(SweepRow::Data { axis_value: value, seed, stats });
                }
                Err(e) => rows.push(SweepRow::Error { axis_value: value, seed, message: e.to_string() }),
            }
        }
        rows.push(SweepRow::Mean { axis_value: value, stats: mean(&ok) });
    }
    Ok(SweepOutcome { rows })
}
