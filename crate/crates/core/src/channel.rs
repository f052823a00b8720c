//! Physical-layer math: SUI path loss, received power, interference,
//! required transmit power and MCS selection.
//!
//! dB/dBm appear only at the configuration boundary; everything here past
//! the conversion helpers works in linear mW, Hz and power ratios.
//! Transcendentals go through `libm` so results do not depend on the
//! platform's math library.

use thiserror::Error;

const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * libm::log10(ratio)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// SUI terrain categories: A is hilly with heavy foliage, C flat with light
/// tree density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terrain {
    A,
    B,
    C,
}

impl Terrain {
    /// `(a, b, c)` in `γ = a − b·h_b + c/h_b`.
    pub fn constants(self) -> (f64, f64, f64) {
        match self {
            Terrain::A => (4.6, 0.0075, 12.6),
            Terrain::B => (4.0, 0.0065, 17.1),
            Terrain::C => (3.6, 0.005, 20.0),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A" | "a" => Some(Terrain::A),
            "B" | "b" => Some(Terrain::B),
            "C" | "c" => Some(Terrain::C),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Terrain::A => "A",
            Terrain::B => "B",
            Terrain::C => "C",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub carrier_freq_mhz: f64,
    pub reference_dist_m: f64,
    pub terrain: Terrain,
    pub noise_density_dbm_per_hz: f64,
    pub shadowing_enabled: bool,
    pub shadowing_sigma_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            carrier_freq_mhz: 3500.0,
            reference_dist_m: 100.0,
            terrain: Terrain::B,
            // The thermal-noise row of the parameter table, -100 dBm, read as
            // a density per MHz of channel.
            noise_density_dbm_per_hz: -160.0,
            shadowing_enabled: false,
            shadowing_sigma_db: 8.0,
        }
    }
}

impl ChannelConfig {
    pub fn noise_density_mw_per_hz(&self) -> f64 {
        dbm_to_mw(self.noise_density_dbm_per_hz)
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_S / (self.carrier_freq_mhz * 1e6)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("distance {distance_m} m is below the reference distance {reference_m} m")]
    BelowReferenceDistance { distance_m: f64, reference_m: f64 },
    #[error("antenna heights must be positive")]
    NonPositiveHeight,
    #[error("invalid MCS table: {0}")]
    InvalidMcsTable(String),
}

/// SUI path-loss exponent for a base antenna height.
pub fn sui_exponent(terrain: Terrain, base_height_m: f64) -> f64 {
    let (a, b, c) = terrain.constants();
    a - b * base_height_m + c / base_height_m
}

/// Median SUI path loss in dB (no shadowing term; callers add a lognormal
/// draw when shadowing is enabled).
///
/// `PL = A + 10γ·log10(d/d0) + X_f + X_h` with the free-space intercept
/// `A = 20·log10(4π·d0/λ)`, frequency correction `X_f = 6·log10(f/2000)` and
/// receive-height correction `X_h = −10.8·log10(h_r/2)` (terrain A/B) or
/// `−20·log10(h_r/2)` (terrain C).
pub fn sui_path_loss_db(
    cc: &ChannelConfig,
    distance_m: f64,
    base_height_m: f64,
    remote_height_m: f64,
) -> Result<f64, ChannelError> {
    if !(base_height_m > 0.0) || !(remote_height_m > 0.0) {
        return Err(ChannelError::NonPositiveHeight);
    }
    let d0 = cc.reference_dist_m;
    if distance_m < d0 {
        return Err(ChannelError::BelowReferenceDistance { distance_m, reference_m: d0 });
    }
    let intercept = 20.0 * libm::log10(4.0 * std::f64::consts::PI * d0 / cc.wavelength_m());
    let gamma = sui_exponent(cc.terrain, base_height_m);
    let x_f = 6.0 * libm::log10(cc.carrier_freq_mhz / 2000.0);
    let x_h = match cc.terrain {
        Terrain::A | Terrain::B => -10.8 * libm::log10(remote_height_m / 2.0),
        Terrain::C => -20.0 * libm::log10(remote_height_m / 2.0),
    };
    Ok(intercept + 10.0 * gamma * libm::log10(distance_m / d0) + x_f + x_h)
}

/// Received power `G_i·G_j·P_i / L(i,j)` in mW.
pub fn received_power_mw(
    tx_power_mw: f64,
    gain_tx_linear: f64,
    gain_rx_linear: f64,
    path_loss_linear: f64,
) -> f64 {
    debug_assert!(path_loss_linear > 0.0);
    gain_tx_linear * gain_rx_linear * tx_power_mw / path_loss_linear
}

/// Interference at a receiver: the plain sum of co-frame received powers.
/// The caller leaves the subject transmitter out of the list.
pub fn interference_mw(other_received_powers_mw: &[f64]) -> f64 {
    other_received_powers_mw.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsLevel {
    pub index: u32,
    pub bits_per_slot: u32,
    pub snr_threshold_db: f64,
}

impl McsLevel {
    pub fn snr_threshold_linear(&self) -> f64 {
        db_to_linear(self.snr_threshold_db)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    levels: Vec<McsLevel>,
    thresholds_linear: Vec<f64>,
}

impl Default for McsTable {
    fn default() -> Self {
        McsTable::from_pairs(&[
            (48, 6.0),
            (72, 8.5),
            (96, 11.5),
            (144, 15.0),
            (192, 19.0),
            (216, 21.0),
        ])
        .expect("default table is valid")
    }
}

impl McsTable {
    pub fn new(levels: Vec<McsLevel>) -> Result<Self, ChannelError> {
        if levels.is_empty() {
            return Err(ChannelError::InvalidMcsTable("table is empty".into()));
        }
        for w in levels.windows(2) {
            if w[1].index <= w[0].index {
                return Err(ChannelError::InvalidMcsTable("indices not increasing".into()));
            }
            if w[1].bits_per_slot <= w[0].bits_per_slot {
                return Err(ChannelError::InvalidMcsTable(
                    "bits per slot not strictly increasing".into(),
                ));
            }
            if !(w[1].snr_threshold_db > w[0].snr_threshold_db) {
                return Err(ChannelError::InvalidMcsTable(
                    "SNR thresholds not strictly increasing".into(),
                ));
            }
        }
        if levels.iter().any(|l| l.bits_per_slot == 0 || !l.snr_threshold_db.is_finite()) {
            return Err(ChannelError::InvalidMcsTable(
                "bits per slot must be positive and thresholds finite".into(),
            ));
        }
        let thresholds_linear = levels.iter().map(McsLevel::snr_threshold_linear).collect();
        Ok(McsTable { levels, thresholds_linear })
    }

    /// Build from `(bits_per_slot, snr_threshold_db)` pairs, indexed from 1.
    pub fn from_pairs(pairs: &[(u32, f64)]) -> Result<Self, ChannelError> {
        McsTable::new(
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(bits, snr))| McsLevel {
                    index: i as u32 + 1,
                    bits_per_slot: bits,
                    snr_threshold_db: snr,
                })
                .collect(),
        )
    }

    pub fn levels(&self) -> &[McsLevel] {
        &self.levels
    }

    pub fn lowest(&self) -> &McsLevel {
        &self.levels[0]
    }

    pub(crate) fn threshold_linear(&self, position: usize) -> f64 {
        self.thresholds_linear[position]
    }

    /// Position in `levels()` of the highest level whose linear SNR
    /// threshold does not exceed `max_snr_linear`.
    pub(crate) fn highest_within(&self, max_snr_linear: f64) -> Option<usize> {
        self.thresholds_linear.iter().rposition(|&t| t <= max_snr_linear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub path_loss_db: f64,
    pub path_loss_linear: f64,
    pub gain_product_linear: f64,
    pub noise_plus_interference_mw: f64,
}

impl LinkBudget {
    pub fn new(path_loss_db: f64, gain_product_linear: f64, noise_plus_interference_mw: f64) -> Self {
        LinkBudget {
            path_loss_db,
            path_loss_linear: db_to_linear(path_loss_db),
            gain_product_linear,
            noise_plus_interference_mw,
        }
    }
}

/// Transmit power that lands exactly on `level`'s SNR threshold at the
/// receiver: `10^(δ/10)·(B·N0 + I)·L / (G_i·G_j)`.
pub fn required_tx_power_mw(
    level: &McsLevel,
    bandwidth_hz: f64,
    noise_density_mw_per_hz: f64,
    interference_mw: f64,
    path_loss_linear: f64,
    gain_product_linear: f64,
) -> f64 {
    level.snr_threshold_linear() * (bandwidth_hz * noise_density_mw_per_hz + interference_mw)
        * path_loss_linear
        / gain_product_linear
}

/// Highest MCS level whose required power fits under `tx_power_max_mw`, or
/// `None` when even the lowest level does not.
pub fn select_mcs(table: &McsTable, budget: &LinkBudget, tx_power_max_mw: f64) -> Option<McsLevel> {
    let scale = budget.noise_plus_interference_mw * budget.path_loss_linear
        / budget.gain_product_linear;
    table
        .levels
        .iter()
        .zip(&table.thresholds_linear)
        .rev()
        .find(|(_, &t)| t * scale <= tx_power_max_mw)
        .map(|(l, _)| *l)
}
