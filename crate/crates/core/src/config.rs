//! Sectioned `key = value` configuration for [`SimConfig`].
//!
//! ```text
//! # comment
//! [sim]
//! n_ms = 30
//! [frame]
//! slots_per_frame = 48
//! bco.n_bees = 20      # dotted keys work anywhere
//! ```
//!
//! Missing keys keep their defaults, unknown keys are errors, and every
//! error carries the key and the line (or override position) it came from.
//! [`serialize`] writes every key, so `parse(serialize(c)) == c`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::baseline::BaselineWeight;
use crate::channel::{McsTable, Terrain};
use crate::energy::DistRule;
use crate::simulator::{Scenario, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    /// 1-based position among command-line overrides.
    Override(usize),
    /// A cross-field check on a key left at its default.
    Default,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Override(n) => write!(f, "override #{n}"),
            Location::Default => write!(f, "default value"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{location}: syntax error: {message}")]
    Syntax { location: Location, message: String },
    #[error("{location}: unknown key `{key}`")]
    UnknownKey { location: Location, key: String },
    #[error("{location}: `{key}` = {value} is out of range: {expected}")]
    OutOfRange { location: Location, key: String, value: String, expected: String },
    #[error("{location}: `{key}` has invalid value {value:?}: {message}")]
    InvalidValue { location: Location, key: String, value: String, message: String },
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { key, .. }
            | ConfigError::OutOfRange { key, .. }
            | ConfigError::InvalidValue { key, .. } => Some(key),
        }
    }

    pub fn location(&self) -> Location {
        match self {
            ConfigError::Syntax { location, .. }
            | ConfigError::UnknownKey { location, .. }
            | ConfigError::OutOfRange { location, .. }
            | ConfigError::InvalidValue { location, .. } => *location,
        }
    }
}

enum Problem {
    Invalid(String),
    Range(String),
}

type Getter = fn(&SimConfig) -> String;
type Setter = fn(&mut SimConfig, &str) -> Result<(), Problem>;

struct Key {
    section: &'static str,
    name: &'static str,
    get: Getter,
    set: Setter,
}

fn uint<T: TryFrom<u64>>(v: &str, min: u64, max: u64) -> Result<T, Problem> {
    let x: u64 = v.parse().map_err(|_| Problem::Invalid("expected a non-negative integer".into()))?;
    if x < min || x > max {
        return Err(Problem::Range(format!("expected {min}..={max}")));
    }
    T::try_from(x).map_err(|_| Problem::Range("does not fit".into()))
}

/// Finite float in `[lo, hi]`; `open_lo` excludes `lo`.
fn float(v: &str, lo: f64, hi: f64, open_lo: bool) -> Result<f64, Problem> {
    let x: f64 = v.parse().map_err(|_| Problem::Invalid("expected a number".into()))?;
    if !x.is_finite() {
        return Err(Problem::Invalid("expected a finite number".into()));
    }
    if x < lo || x > hi || (open_lo && x == lo) {
        let open = if open_lo { "(" } else { "[" };
        return Err(Problem::Range(format!("expected {open}{lo}, {hi}]")));
    }
    Ok(x)
}

fn positive(v: &str) -> Result<f64, Problem> {
    float(v, 0.0, f64::MAX, true)
}

fn boolean(v: &str) -> Result<bool, Problem> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Problem::Invalid("expected true or false".into())),
    }
}

fn parse_levels(v: &str) -> Result<McsTable, Problem> {
    let mut pairs = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (bits, snr) = item
            .split_once(':')
            .ok_or_else(|| Problem::Invalid(format!("level {item:?} is not bits:snr_db")))?;
        let bits: u32 = bits
            .trim()
            .parse()
            .map_err(|_| Problem::Invalid(format!("bad bits per slot in {item:?}")))?;
        let snr: f64 = snr
            .trim()
            .parse()
            .map_err(|_| Problem::Invalid(format!("bad SNR threshold in {item:?}")))?;
        pairs.push((bits, snr));
    }
    McsTable::from_pairs(&pairs).map_err(|e| Problem::Invalid(e.to_string()))
}

fn format_levels(t: &McsTable) -> String {
    t.levels()
        .iter()
        .map(|l| format!("{}:{}", l.bits_per_slot, l.snr_threshold_db))
        .collect::<Vec<_>>()
        .join(", ")
}

const MAX: u64 = u32::MAX as u64;

macro_rules! key {
    ($section:literal, $name:literal, |$c:ident| $get:expr, |$m:ident, $v:ident| $set:expr) => {
        Key {
            section: $section,
            name: $name,
            get: |$c| $get.to_string(),
            set: |$m, $v| {
                $set;
                Ok(())
            },
        }
    };
}

fn keys() -> Vec<Key> {
    vec![
        key!("sim", "scenario", |c| c.scenario.name(), |c, v| {
            c.scenario = Scenario::parse(v).ok_or_else(|| Problem::Invalid("expected 3hop, 4hop or 5hop".into()))?
        }),
        key!("sim", "n_rs", |c| c.n_rs, |c, v| c.n_rs = uint(v, 0, MAX)?),
        key!("sim", "n_ms", |c| c.n_ms, |c, v| c.n_ms = uint(v, 0, MAX)?),
        key!("sim", "n_frames", |c| c.n_frames, |c, v| c.n_frames = uint(v, 1, MAX)?),
        key!("sim", "seed", |c| c.seed, |c, v| c.seed = uint(v, 0, u64::MAX)?),
        key!("sim", "re_route_interval", |c| c.re_route_interval, |c, v| c.re_route_interval = uint(v, 0, MAX)?),
        key!("sim", "demand_min_bits", |c| c.demand_min_bits, |c, v| c.demand_min_bits = uint(v, 0, MAX)?),
        key!("sim", "demand_max_bits", |c| c.demand_max_bits, |c, v| c.demand_max_bits = uint(v, 0, MAX)?),
        key!("sim", "routing_demand_bits", |c| c.routing_demand_bits, |c, v| {
            c.routing_demand_bits = uint(v, 0, MAX)?
        }),
        key!("sim", "baseline_weight", |c| c.baseline_weight.name(), |c, v| {
            c.baseline_weight =
                BaselineWeight::parse(v).ok_or_else(|| Problem::Invalid("expected distance or energy".into()))?
        }),
        key!("sim", "power_cap_fallback", |c| c.fitness.power_cap_fallback, |c, v| {
            c.fitness.power_cap_fallback = boolean(v)?
        }),
        key!("topology", "transparent_fraction", |c| c.topology.transparent_fraction, |c, v| {
            c.topology.transparent_fraction = float(v, 0.0, 1.0, false)?
        }),
        key!("topology", "deployment_radius_m", |c| c.topology.deployment_radius_m, |c, v| {
            c.topology.deployment_radius_m = positive(v)?
        }),
        key!("topology", "d_min_m", |c| c.topology.d_min_m, |c, v| c.topology.d_min_m = float(v, 0.0, f64::MAX, false)?),
        key!("topology", "d_max_m", |c| c.topology.d_max_m, |c, v| c.topology.d_max_m = positive(v)?),
        key!("topology", "bandwidth_min_hz", |c| c.topology.bandwidth_min_hz, |c, v| {
            c.topology.bandwidth_min_hz = positive(v)?
        }),
        key!("topology", "bandwidth_max_hz", |c| c.topology.bandwidth_max_hz, |c, v| {
            c.topology.bandwidth_max_hz = positive(v)?
        }),
        key!("topology", "bs_rs_gain_min_db", |c| c.topology.bs_rs_gain_min_db, |c, v| {
            c.topology.bs_rs_gain_min_db = float(v, -100.0, 100.0, false)?
        }),
        key!("topology", "bs_rs_gain_max_db", |c| c.topology.bs_rs_gain_max_db, |c, v| {
            c.topology.bs_rs_gain_max_db = float(v, -100.0, 100.0, false)?
        }),
        key!("topology", "ms_gain_min_db", |c| c.topology.ms_gain_min_db, |c, v| {
            c.topology.ms_gain_min_db = float(v, -100.0, 100.0, false)?
        }),
        key!("topology", "ms_gain_max_db", |c| c.topology.ms_gain_max_db, |c, v| {
            c.topology.ms_gain_max_db = float(v, -100.0, 100.0, false)?
        }),
        key!("topology", "bs_height_m", |c| c.topology.bs_height_m, |c, v| c.topology.bs_height_m = positive(v)?),
        key!("topology", "rs_height_m", |c| c.topology.rs_height_m, |c, v| c.topology.rs_height_m = positive(v)?),
        key!("topology", "ms_height_m", |c| c.topology.ms_height_m, |c, v| c.topology.ms_height_m = positive(v)?),
        key!("topology", "tx_power_max_mw", |c| c.topology.tx_power_max_mw, |c, v| {
            c.topology.tx_power_max_mw = positive(v)?
        }),
        key!("topology", "max_routes_per_ms", |c| c.topology.max_routes_per_ms, |c, v| {
            c.topology.max_routes_per_ms = uint(v, 1, MAX)?
        }),
        key!("channel", "carrier_freq_mhz", |c| c.channel.carrier_freq_mhz, |c, v| {
            c.channel.carrier_freq_mhz = positive(v)?
        }),
        key!("channel", "reference_dist_m", |c| c.channel.reference_dist_m, |c, v| {
            c.channel.reference_dist_m = positive(v)?
        }),
        key!("channel", "terrain", |c| c.channel.terrain.name(), |c, v| {
            c.channel.terrain = Terrain::parse(v).ok_or_else(|| Problem::Invalid("expected A, B or C".into()))?
        }),
        key!("channel", "noise_density_dbm_per_hz", |c| c.channel.noise_density_dbm_per_hz, |c, v| {
            c.channel.noise_density_dbm_per_hz = float(v, -300.0, 100.0, false)?
        }),
        key!("channel", "shadowing_enabled", |c| c.channel.shadowing_enabled, |c, v| {
            c.channel.shadowing_enabled = boolean(v)?
        }),
        key!("channel", "shadowing_sigma_db", |c| c.channel.shadowing_sigma_db, |c, v| {
            c.channel.shadowing_sigma_db = float(v, 0.0, 100.0, false)?
        }),
        key!("mcs", "levels", |c| format_levels(&c.mcs), |c, v| c.mcs = parse_levels(v)?),
        key!("frame", "frame_duration_s", |c| c.frame.frame_duration_s, |c, v| c.frame.frame_duration_s = positive(v)?),
        key!("frame", "slots_per_frame", |c| c.frame.slots_per_frame, |c, v| c.frame.slots_per_frame = uint(v, 1, MAX)?),
        key!("bco", "n_bees", |c| c.bco.n_bees, |c, v| c.bco.n_bees = uint(v, 1, MAX)?),
        key!("bco", "max_inner_steps", |c| c.bco.max_inner_steps, |c, v| c.bco.max_inner_steps = uint(v, 0, MAX)?),
        key!("bco", "max_iterations", |c| c.bco.max_iterations, |c, v| c.bco.max_iterations = uint(v, 1, MAX)?),
        key!("bco", "stagnation_limit", |c| c.bco.stagnation_limit, |c, v| c.bco.stagnation_limit = uint(v, 1, MAX)?),
        key!("bco", "elite_count", |c| c.bco.elite_count, |c, v| c.bco.elite_count = uint(v, 1, MAX)?),
        key!("bco", "dist_rule", |c| c.fitness.dist_rule.name(), |c, v| {
            c.fitness.dist_rule =
                DistRule::parse(v).ok_or_else(|| Problem::Invalid("expected bottleneck or first_hop".into()))?
        }),
        key!("bco", "normalize_fitness", |c| c.fitness.normalize, |c, v| c.fitness.normalize = boolean(v)?),
    ]
}

const SECTIONS: [&str; 6] = ["sim", "topology", "channel", "mcs", "frame", "bco"];

/// Accumulates assignments and remembers where each key was set.
struct Builder {
    keys: Vec<Key>,
    cfg: SimConfig,
    seen: HashMap<String, Location>,
}

impl Builder {
    fn new(base: SimConfig) -> Self {
        Builder { keys: keys(), cfg: base, seen: HashMap::new() }
    }

    fn set(&mut self, full_key: &str, value: &str, location: Location) -> Result<(), ConfigError> {
        let value = unquote(value);
        let key = self
            .keys
            .iter()
            .find(|k| full_key.split_once('.') == Some((k.section, k.name)))
            .ok_or_else(|| ConfigError::UnknownKey { location, key: full_key.to_string() })?;
        (key.set)(&mut self.cfg, value).map_err(|p| match p {
            Problem::Invalid(message) => ConfigError::InvalidValue {
                location,
                key: full_key.to_string(),
                value: value.to_string(),
                message,
            },
            Problem::Range(expected) => ConfigError::OutOfRange {
                location,
                key: full_key.to_string(),
                value: value.to_string(),
                expected,
            },
        })?;
        self.seen.insert(full_key.to_string(), location);
        Ok(())
    }

    /// Cross-field checks, reported against the later-set key of the pair.
    fn finish(self) -> Result<SimConfig, ConfigError> {
        let c = &self.cfg;
        let pairs: [(&str, &str, bool); 6] = [
            ("sim.demand_min_bits", "sim.demand_max_bits", c.demand_min_bits <= c.demand_max_bits),
            ("topology.d_min_m", "topology.d_max_m", c.topology.d_min_m <= c.topology.d_max_m),
            (
                "topology.bandwidth_min_hz",
                "topology.bandwidth_max_hz",
                c.topology.bandwidth_min_hz <= c.topology.bandwidth_max_hz,
            ),
            (
                "topology.bs_rs_gain_min_db",
                "topology.bs_rs_gain_max_db",
                c.topology.bs_rs_gain_min_db <= c.topology.bs_rs_gain_max_db,
            ),
            (
                "topology.ms_gain_min_db",
                "topology.ms_gain_max_db",
                c.topology.ms_gain_min_db <= c.topology.ms_gain_max_db,
            ),
            ("bco.elite_count", "bco.n_bees", c.bco.elite_count <= c.bco.n_bees),
        ];
        for (lo, hi, ok) in pairs {
            if ok {
                continue;
            }
            let at = |k: &str| self.seen.get(k).copied();
            let (key, location) = match (at(lo), at(hi)) {
                (Some(a), Some(b)) if later(b, a) => (hi, b),
                (Some(a), _) => (lo, a),
                (None, Some(b)) => (hi, b),
                (None, None) => (lo, Location::Default),
            };
            let value = self.keys.iter().find(|k| key.split_once('.') == Some((k.section, k.name)));
            return Err(ConfigError::OutOfRange {
                location,
                key: key.to_string(),
                value: value.map(|k| (k.get)(c)).unwrap_or_default(),
                expected: format!("{lo} must not exceed {hi}"),
            });
        }
        Ok(self.cfg)
    }
}

fn later(a: Location, b: Location) -> bool {
    use Location::*;
    match (a, b) {
        (Override(x), Override(y)) | (Line(x), Line(y)) => x > y,
        (Override(_), _) => true,
        _ => false,
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

fn strip_comment(line: &str) -> &str {
    // Comments start at '#' or ';' outside double quotes.
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' | ';' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_into(text: &str, b: &mut Builder) -> Result<(), ConfigError> {
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let location = Location::Line(i + 1);
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { location, message: "unterminated section header".into() })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::Syntax { location, message: format!("unknown section [{name}]") });
            }
            section = Some(name);
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { location, message: format!("expected key = value, got {line:?}") })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { location, message: "empty key".into() });
        }
        let full = match (k.contains('.'), section) {
            (true, _) => k.to_string(),
            (false, Some(s)) => format!("{s}.{k}"),
            (false, None) => return Err(ConfigError::UnknownKey { location, key: k.to_string() }),
        };
        b.set(&full, v, location)?;
    }
    Ok(())
}

/// Parse a configuration file; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut b = Builder::new(SimConfig::default());
    parse_into(text, &mut b)?;
    b.finish()
}

/// Parse a file, then apply `section.key=value` overrides in order.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<SimConfig, ConfigError> {
    let mut b = Builder::new(SimConfig::default());
    parse_into(text, &mut b)?;
    for (i, o) in overrides.iter().enumerate() {
        let location = Location::Override(i + 1);
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { location, message: format!("expected key=value, got {o:?}") })?;
        b.set(k.trim(), v, location)?;
    }
    b.finish()
}

/// Every key, grouped by section.
pub fn serialize(cfg: &SimConfig) -> String {
    let keys = keys();
    let mut out = String::new();
    for section in SECTIONS {
        out.push_str(&format!("[{section}]\n"));
        for k in keys.iter().filter(|k| k.section == section) {
            out.push_str(&format!("{} = {}\n", k.name, (k.get)(cfg)));
        }
        out.push('\n');
    }
    out
}

/// All known keys as `section.key`.
pub fn known_keys() -> Vec<String> {
    keys().iter().map(|k| format!("{}.{}", k.section, k.name)).collect()
}
