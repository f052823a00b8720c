//! Relay network topologies: stations, candidate links and uplink routes.
//!
//! Station ids are dense indices: the base station is always id 0, relay
//! stations follow, then mobile stations. Links are directed uplink edges
//! (MS→RS, MS→BS, RS→RS, RS→BS) that exist iff the endpoint distance lies in
//! the configured `[d_min, d_max]` window.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StationId(pub u32);

impl StationId {
    pub const BASE: StationId = StationId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StationKind {
    BaseStation,
    TransparentRs,
    NonTransparentRs,
    MobileStation,
}

impl StationKind {
    pub fn is_relay(self) -> bool {
        matches!(self, StationKind::TransparentRs | StationKind::NonTransparentRs)
    }

    /// Whether a station of this kind can receive uplink traffic.
    pub fn is_receiver(self) -> bool {
        !matches!(self, StationKind::MobileStation)
    }

    fn tag(self) -> &'static str {
        match self {
            StationKind::BaseStation => "bs",
            StationKind::TransparentRs => "trs",
            StationKind::NonTransparentRs => "ntrs",
            StationKind::MobileStation => "ms",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "bs" => StationKind::BaseStation,
            "trs" => StationKind::TransparentRs,
            "ntrs" => StationKind::NonTransparentRs,
            "ms" => StationKind::MobileStation,
            _ => return None,
        })
    }
}

/// Whether a directed uplink edge between the two kinds is allowed.
pub fn direction_legal(from: StationKind, to: StationKind) -> bool {
    use StationKind::*;
    matches!(
        (from, to),
        (MobileStation, TransparentRs | NonTransparentRs | BaseStation)
            | (TransparentRs | NonTransparentRs, TransparentRs | NonTransparentRs | BaseStation)
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: StationId,
    pub kind: StationKind,
    pub position: Point,
    pub antenna_height_m: f64,
    pub antenna_gain_db: f64,
    pub tx_power_max_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: StationId,
    pub to: StationId,
    pub distance_m: f64,
    pub bandwidth_hz: f64,
}

/// Generation parameters. Defaults follow the usual simulation table:
/// 200–2000 m links, 3.5–10 MHz channels, 5–20 dB BS/RS gains, 1–10 dB MS
/// gains, antenna heights 30/10/2 m and a 1000 mW transmit cap.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub n_rs: usize,
    pub n_ms: usize,
    pub max_hops: usize,
    pub transparent_fraction: f64,
    pub deployment_radius_m: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
    pub bandwidth_min_hz: f64,
    pub bandwidth_max_hz: f64,
    pub bs_rs_gain_min_db: f64,
    pub bs_rs_gain_max_db: f64,
    pub ms_gain_min_db: f64,
    pub ms_gain_max_db: f64,
    pub bs_height_m: f64,
    pub rs_height_m: f64,
    pub ms_height_m: f64,
    pub tx_power_max_mw: f64,
    pub max_routes_per_ms: usize,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            n_rs: 10,
            n_ms: 100,
            max_hops: 3,
            transparent_fraction: 0.3,
            deployment_radius_m: 2000.0,
            d_min_m: 200.0,
            d_max_m: 2000.0,
            bandwidth_min_hz: 3.5e6,
            bandwidth_max_hz: 10e6,
            bs_rs_gain_min_db: 5.0,
            bs_rs_gain_max_db: 20.0,
            ms_gain_min_db: 1.0,
            ms_gain_max_db: 10.0,
            bs_height_m: 30.0,
            rs_height_m: 10.0,
            ms_height_m: 2.0,
            tx_power_max_mw: 1000.0,
            max_routes_per_ms: 256,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("deployment radius must be positive, got {0}")]
    ZeroRadius(f64),
    #[error("impossible topology configuration: {0}")]
    ImpossibleConfig(String),
    #[error("station {0} has no route to the base station")]
    NoRouteExists(StationId),
    #[error("station {0} is not a mobile station")]
    NotMobile(StationId),
    #[error("topology text line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An uplink route; `hops[0]` is the mobile station, the last entry the BS.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Route {
    pub hops: Vec<StationId>,
}

impl Route {
    pub fn new(hops: Vec<StationId>) -> Self {
        Route { hops }
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn source(&self) -> StationId {
        self.hops[0]
    }

    /// Consecutive (from, to) pairs.
    pub fn edges(&self) -> impl Iterator<Item = (StationId, StationId)> + '_ {
        self.hops.windows(2).map(|w| (w[0], w[1]))
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.hops.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RouteViolation {
    TooShort,
    UnknownStation(StationId),
    FirstNotMobile(StationId),
    LastNotBase(StationId),
    IntermediateNotRelay(StationId),
    RepeatedStation(StationId),
    MissingLink(StationId, StationId),
    HopBoundExceeded { hops: usize, max_hops: usize },
    TransparentInLongRoute(StationId),
}

#[derive(Debug, Clone)]
pub struct Topology {
    stations: Vec<Station>,
    links: Vec<Link>,
    out_links: Vec<Vec<usize>>,
    max_hops: usize,
    deployment_radius_m: f64,
    max_routes_per_ms: usize,
    unreachable: Vec<StationId>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.stations == other.stations
            && self.links == other.links
            && self.max_hops == other.max_hops
            && self.deployment_radius_m.to_bits() == other.deployment_radius_m.to_bits()
            && self.max_routes_per_ms == other.max_routes_per_ms
    }
}

impl Topology {
    /// Assemble a topology from explicit stations and links. Stations must
    /// be indexed by id with the single base station at id 0; links must be
    /// direction-legal.
    pub fn from_parts(
        stations: Vec<Station>,
        mut links: Vec<Link>,
        max_hops: usize,
        deployment_radius_m: f64,
        max_routes_per_ms: usize,
    ) -> Result<Self, TopologyError> {
        if stations.is_empty() || stations[0].kind != StationKind::BaseStation {
            return Err(TopologyError::ImpossibleConfig(
                "station 0 must be the base station".into(),
            ));
        }
        for (i, s) in stations.iter().enumerate() {
            if s.id.index() != i {
                return Err(TopologyError::ImpossibleConfig(format!(
                    "station at position {i} has id {}",
                    s.id
                )));
            }
            if i > 0 && s.kind == StationKind::BaseStation {
                return Err(TopologyError::ImpossibleConfig(
                    "more than one base station".into(),
                ));
            }
            if !(s.antenna_height_m > 0.0) || !(s.tx_power_max_mw > 0.0) {
                return Err(TopologyError::ImpossibleConfig(format!(
                    "station {} has non-positive height or power",
                    s.id
                )));
            }
        }
        if max_routes_per_ms == 0 {
            return Err(TopologyError::ImpossibleConfig(
                "max_routes_per_ms must be at least 1".into(),
            ));
        }
        links.sort_by_key(|l| (l.from, l.to));
        let mut out_links = vec![Vec::new(); stations.len()];
        for (idx, l) in links.iter().enumerate() {
            let (Some(a), Some(b)) = (stations.get(l.from.index()), stations.get(l.to.index()))
            else {
                return Err(TopologyError::ImpossibleConfig(format!(
                    "link {}->{} references an unknown station",
                    l.from, l.to
                )));
            };
            if !direction_legal(a.kind, b.kind) {
                return Err(TopologyError::ImpossibleConfig(format!(
                    "link {}->{} is not a legal uplink direction",
                    l.from, l.to
                )));
            }
            if idx > 0 && links[idx - 1].from == l.from && links[idx - 1].to == l.to {
                return Err(TopologyError::ImpossibleConfig(format!(
                    "duplicate link {}->{}",
                    l.from, l.to
                )));
            }
            out_links[l.from.index()].push(idx);
        }
        let mut topo = Topology {
            stations,
            links,
            out_links,
            max_hops,
            deployment_radius_m,
            max_routes_per_ms,
            unreachable: Vec::new(),
        };
        topo.unreachable = topo
            .mobile_stations()
            .filter(|&ms| topo.min_hops_to_base(ms).is_none_or(|h| h > max_hops))
            .collect();
        Ok(topo)
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn station(&self, id: StationId) -> &Station {
        &self.stations[id.index()]
    }

    pub fn get_station(&self, id: StationId) -> Option<&Station> {
        self.stations.get(id.index())
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Indices into [`Topology::links`] of the links leaving `id`, ordered by
    /// destination id.
    pub fn out_links(&self, id: StationId) -> &[usize] {
        &self.out_links[id.index()]
    }

    pub fn link_index(&self, from: StationId, to: StationId) -> Option<usize> {
        self.links
            .binary_search_by(|l| (l.from, l.to).cmp(&(from, to)))
            .ok()
    }

    pub fn link(&self, from: StationId, to: StationId) -> Option<&Link> {
        self.link_index(from, to).map(|i| &self.links[i])
    }

    pub fn max_hops(&self) -> usize {
        self.max_hops
    }

    pub fn deployment_radius_m(&self) -> f64 {
        self.deployment_radius_m
    }

    pub fn max_routes_per_ms(&self) -> usize {
        self.max_routes_per_ms
    }

    /// Mobile stations that have no valid route within `max_hops`.
    pub fn unreachable(&self) -> &[StationId] {
        &self.unreachable
    }

    pub fn is_reachable(&self, ms: StationId) -> bool {
        self.unreachable.binary_search(&ms).is_err()
    }

    pub fn mobile_stations(&self) -> impl Iterator<Item = StationId> + '_ {
        self.stations
            .iter()
            .filter(|s| s.kind == StationKind::MobileStation)
            .map(|s| s.id)
    }

    pub fn reachable_mobile_stations(&self) -> impl Iterator<Item = StationId> + '_ {
        self.mobile_stations().filter(|&ms| self.is_reachable(ms))
    }

    pub fn relay_stations(&self) -> impl Iterator<Item = StationId> + '_ {
        self.stations.iter().filter(|s| s.kind.is_relay()).map(|s| s.id)
    }

    /// Total link distance along a route, summed in hop order. Returns None
    /// if a hop has no link.
    pub fn route_distance(&self, route: &Route) -> Option<f64> {
        route
            .edges()
            .map(|(a, b)| self.link(a, b).map(|l| l.distance_m))
            .sum()
    }

    /// Fewest hops from `ms` to the base station under the relay-kind rules.
    /// A fewest-hop walk never repeats a station, so this is exact for
    /// simple routes.
    fn min_hops_to_base(&self, ms: StationId) -> Option<usize> {
        let mut best = None;
        for &li in self.out_links(ms) {
            let to = self.links[li].to;
            match self.station(to).kind {
                StationKind::BaseStation => return Some(1),
                StationKind::TransparentRs => {
                    if self.link(to, StationId::BASE).is_some() {
                        best = Some(2);
                    }
                }
                _ => {}
            }
        }
        // BFS over non-transparent relays only.
        let mut depth = vec![usize::MAX; self.stations.len()];
        let mut queue = VecDeque::new();
        for &li in self.out_links(ms) {
            let to = self.links[li].to;
            if self.station(to).kind == StationKind::NonTransparentRs {
                depth[to.index()] = 1;
                queue.push_back(to);
            }
        }
        while let Some(u) = queue.pop_front() {
            let d = depth[u.index()];
            if best.is_some_and(|b| d + 1 >= b) {
                break;
            }
            for &li in self.out_links(u) {
                let v = self.links[li].to;
                match self.station(v).kind {
                    StationKind::BaseStation => {
                        best = Some(best.map_or(d + 1, |b: usize| b.min(d + 1)));
                    }
                    StationKind::NonTransparentRs if depth[v.index()] == usize::MAX => {
                        depth[v.index()] = d + 1;
                        queue.push_back(v);
                    }
                    _ => {}
                }
            }
        }
        best
    }

    /// Serialize to the plain-text station/link format read by
    /// [`Topology::from_text`]. Floats are written in shortest round-trip
    /// form, so a reload is bit-identical.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[topology]\n");
        let _ = writeln!(out, "max_hops = {}", self.max_hops);
        let _ = writeln!(out, "deployment_radius_m = {:?}", self.deployment_radius_m);
        let _ = writeln!(out, "max_routes_per_ms = {}", self.max_routes_per_ms);
        out.push_str("\n[stations]\n# id, kind, x_m, y_m, height_m, gain_db, tx_power_max_mw\n");
        for s in &self.stations {
            let _ = writeln!(
                out,
                "station = {}, {}, {:?}, {:?}, {:?}, {:?}, {:?}",
                s.id,
                s.kind.tag(),
                s.position.x,
                s.position.y,
                s.antenna_height_m,
                s.antenna_gain_db,
                s.tx_power_max_mw
            );
        }
        out.push_str("\n[links]\n# from, to, distance_m, bandwidth_hz\n");
        for l in &self.links {
            let _ = writeln!(
                out,
                "link = {}, {}, {:?}, {:?}",
                l.from, l.to, l.distance_m, l.bandwidth_hz
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TopologyError> {
        let mut section = String::new();
        let mut max_hops = None;
        let mut radius = None;
        let mut cap = None;
        let mut stations = Vec::new();
        let mut links = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |message: String| TopologyError::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let fields: Vec<&str> = value.split(',').map(str::trim).collect();
            let num = |i: usize| -> Result<f64, TopologyError> {
                fields
                    .get(i)
                    .and_then(|f| f.parse::<f64>().ok())
                    .ok_or_else(|| err(format!("field {} of `{key}` is not a number", i + 1)))
            };
            let id = |i: usize| -> Result<StationId, TopologyError> {
                fields
                    .get(i)
                    .and_then(|f| f.parse::<u32>().ok())
                    .map(StationId)
                    .ok_or_else(|| err(format!("field {} of `{key}` is not a station id", i + 1)))
            };
            match (section.as_str(), key) {
                ("topology", "max_hops") => {
                    max_hops = Some(value.parse().map_err(|_| err("bad max_hops".into()))?)
                }
                ("topology", "deployment_radius_m") => {
                    radius = Some(value.parse().map_err(|_| err("bad radius".into()))?)
                }
                ("topology", "max_routes_per_ms") => {
                    cap = Some(value.parse().map_err(|_| err("bad max_routes_per_ms".into()))?)
                }
                ("stations", "station") => {
                    if fields.len() != 7 {
                        return Err(err(format!("station needs 7 fields, got {}", fields.len())));
                    }
                    let kind = StationKind::from_tag(fields[1])
                        .ok_or_else(|| err(format!("unknown station kind `{}`", fields[1])))?;
                    stations.push(Station {
                        id: id(0)?,
                        kind,
                        position: Point { x: num(2)?, y: num(3)? },
                        antenna_height_m: num(4)?,
                        antenna_gain_db: num(5)?,
                        tx_power_max_mw: num(6)?,
                    });
                }
                ("links", "link") => {
                    if fields.len() != 4 {
                        return Err(err(format!("link needs 4 fields, got {}", fields.len())));
                    }
                    links.push(Link {
                        from: id(0)?,
                        to: id(1)?,
                        distance_m: num(2)?,
                        bandwidth_hz: num(3)?,
                    });
                }
                _ => return Err(err(format!("unknown key `{key}` in section [{section}]"))),
            }
        }
        let missing = |what: &str| TopologyError::Parse {
            line: 0,
            message: format!("missing topology.{what}"),
        };
        Topology::from_parts(
            stations,
            links,
            max_hops.ok_or_else(|| missing("max_hops"))?,
            radius.ok_or_else(|| missing("deployment_radius_m"))?,
            cap.ok_or_else(|| missing("max_routes_per_ms"))?,
        )
    }
}

fn check_range(name: &str, lo: f64, hi: f64) -> Result<(), TopologyError> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(TopologyError::ImpossibleConfig(format!(
            "{name} range [{lo}, {hi}] is empty"
        )))
    }
}

/// Build a random topology. The result is a pure function of `(cfg, seed)`.
///
/// The BS sits at the origin; relays and mobiles are placed uniformly in the
/// deployment disc (rejection sampling on the bounding square, which keeps
/// the placement free of transcendental functions).
pub fn generate_topology(cfg: &TopologyConfig, seed: u64) -> Result<Topology, TopologyError> {
    let radius = cfg.deployment_radius_m;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(TopologyError::ZeroRadius(radius));
    }
    if !(cfg.d_min_m > 0.0) || cfg.d_min_m >= cfg.d_max_m {
        return Err(TopologyError::ImpossibleConfig(format!(
            "link distance window [{}, {}] is empty",
            cfg.d_min_m, cfg.d_max_m
        )));
    }
    if cfg.d_min_m > 2.0 * radius {
        return Err(TopologyError::ImpossibleConfig(format!(
            "d_min {} exceeds the deployment diameter {}",
            cfg.d_min_m,
            2.0 * radius
        )));
    }
    check_range("bandwidth", cfg.bandwidth_min_hz, cfg.bandwidth_max_hz)?;
    check_range("BS/RS gain", cfg.bs_rs_gain_min_db, cfg.bs_rs_gain_max_db)?;
    check_range("MS gain", cfg.ms_gain_min_db, cfg.ms_gain_max_db)?;
    if !(cfg.bandwidth_min_hz > 0.0) {
        return Err(TopologyError::ImpossibleConfig("bandwidth must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.transparent_fraction) {
        return Err(TopologyError::ImpossibleConfig(format!(
            "transparent_fraction {} outside [0, 1]",
            cfg.transparent_fraction
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_transparent = (cfg.transparent_fraction * cfg.n_rs as f64).round() as usize;
    if cfg.max_hops >= 3 && cfg.n_rs >= 1 {
        // Chains of three or more hops need at least one non-transparent RS.
        n_transparent = n_transparent.min(cfg.n_rs - 1);
    }

    let place = |rng: &mut ChaCha8Rng| loop {
        let x = rng.random_range(-radius..=radius);
        let y = rng.random_range(-radius..=radius);
        if x * x + y * y <= radius * radius {
            break Point { x, y };
        }
    };

    let mut stations = Vec::with_capacity(1 + cfg.n_rs + cfg.n_ms);
    stations.push(Station {
        id: StationId::BASE,
        kind: StationKind::BaseStation,
        position: Point { x: 0.0, y: 0.0 },
        antenna_height_m: cfg.bs_height_m,
        antenna_gain_db: rng.random_range(cfg.bs_rs_gain_min_db..=cfg.bs_rs_gain_max_db),
        tx_power_max_mw: cfg.tx_power_max_mw,
    });
    for i in 0..cfg.n_rs {
        let position = place(&mut rng);
        stations.push(Station {
            id: StationId(stations.len() as u32),
            kind: if i < n_transparent {
                StationKind::TransparentRs
            } else {
                StationKind::NonTransparentRs
            },
            position,
            antenna_height_m: cfg.rs_height_m,
            antenna_gain_db: rng.random_range(cfg.bs_rs_gain_min_db..=cfg.bs_rs_gain_max_db),
            tx_power_max_mw: cfg.tx_power_max_mw,
        });
    }
    for _ in 0..cfg.n_ms {
        let position = place(&mut rng);
        stations.push(Station {
            id: StationId(stations.len() as u32),
            kind: StationKind::MobileStation,
            position,
            antenna_height_m: cfg.ms_height_m,
            antenna_gain_db: rng.random_range(cfg.ms_gain_min_db..=cfg.ms_gain_max_db),
            tx_power_max_mw: cfg.tx_power_max_mw,
        });
    }

    let mut links = Vec::new();
    for a in &stations {
        for b in &stations {
            if a.id == b.id || !direction_legal(a.kind, b.kind) {
                continue;
            }
            let d = a.position.distance(&b.position);
            if d >= cfg.d_min_m && d <= cfg.d_max_m {
                links.push(Link {
                    from: a.id,
                    to: b.id,
                    distance_m: d,
                    bandwidth_hz: rng.random_range(cfg.bandwidth_min_hz..=cfg.bandwidth_max_hz),
                });
            }
        }
    }
    Topology::from_parts(
        stations,
        links,
        cfg.max_hops,
        radius,
        cfg.max_routes_per_ms,
    )
}

/// Candidate routes for one MS plus whether the cap truncated them.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub routes: Vec<Route>,
    pub truncated: bool,
}

#[derive(PartialEq)]
struct Ranked {
    distance: f64,
    hops: Vec<StationId>,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.hops.len().cmp(&other.hops.len()))
            .then_with(|| self.hops.cmp(&other.hops))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'a> {
    topo: &'a Topology,
    max_hops: usize,
    cap: usize,
    base: Point,
    best: BinaryHeap<Ranked>,
    truncated: bool,
    path: Vec<StationId>,
    on_path: Vec<bool>,
}

impl Search<'_> {
    fn offer(&mut self, distance: f64) {
        let cand = Ranked { distance, hops: self.path.clone() };
        if self.best.len() < self.cap {
            self.best.push(cand);
        } else {
            self.truncated = true;
            if cand < *self.best.peek().expect("cap >= 1") {
                self.best.pop();
                self.best.push(cand);
            }
        }
    }

    fn pruned(&mut self, at: StationId, distance: f64) -> bool {
        if self.best.len() < self.cap {
            return false;
        }
        // Remaining path length is at least the straight line to the BS.
        let bound = distance + self.topo.station(at).position.distance(&self.base);
        let worst = self.best.peek().expect("cap >= 1").distance;
        let prune = bound > worst * (1.0 + 1e-12);
        if prune && !self.truncated && self.completion_exists(at) {
            self.truncated = true;
        }
        prune
    }

    /// Whether the current partial path (ending at non-transparent relay
    /// `at`) can still reach the BS within the hop budget.
    fn completion_exists(&self, at: StationId) -> bool {
        let budget = self.max_hops - (self.path.len() - 1);
        let mut depth = vec![usize::MAX; self.topo.stations.len()];
        let mut queue = VecDeque::from([at]);
        depth[at.index()] = 0;
        while let Some(u) = queue.pop_front() {
            let d = depth[u.index()];
            if d >= budget {
                continue;
            }
            for &li in self.topo.out_links(u) {
                let v = self.topo.links[li].to;
                match self.topo.station(v).kind {
                    StationKind::BaseStation => return true,
                    StationKind::NonTransparentRs
                        if !self.on_path[v.index()] && depth[v.index()] == usize::MAX =>
                    {
                        depth[v.index()] = d + 1;
                        queue.push_back(v);
                    }
                    _ => {}
                }
            }
        }
        false
    }

    fn extend(&mut self, at: StationId, distance: f64) {
        let hops_used = self.path.len() - 1;
        if hops_used >= self.max_hops || self.pruned(at, distance) {
            return;
        }
        let at_kind = self.topo.station(at).kind;
        for &li in self.topo.out_links(at) {
            let link = &self.topo.links[li];
            let next = link.to;
            if self.on_path[next.index()] {
                continue;
            }
            let next_kind = self.topo.station(next).kind;
            let d = distance + link.distance_m;
            match next_kind {
                StationKind::BaseStation => {
                    self.path.push(next);
                    self.offer(d);
                    self.path.pop();
                }
                StationKind::TransparentRs => {
                    // Only as the single relay of a two-hop route.
                    if at_kind != StationKind::MobileStation || self.max_hops < 2 {
                        continue;
                    }
                    if let Some(up) = self.topo.link(next, StationId::BASE) {
                        self.path.push(next);
                        self.path.push(StationId::BASE);
                        self.offer(d + up.distance_m);
                        self.path.pop();
                        self.path.pop();
                    }
                }
                StationKind::NonTransparentRs => {
                    self.path.push(next);
                    self.on_path[next.index()] = true;
                    self.extend(next, d);
                    self.on_path[next.index()] = false;
                    self.path.pop();
                }
                StationKind::MobileStation => {}
            }
        }
    }
}

/// All valid routes from `ms` within `max_hops`, capped at `cap`. When the cap
/// binds, the shortest-distance candidates are kept. Output is sorted
/// lexicographically by hop sequence.
pub fn enumerate_routes_capped(
    t: &Topology,
    ms: StationId,
    max_hops: usize,
    cap: usize,
) -> Result<Enumeration, TopologyError> {
    if t.get_station(ms).map(|s| s.kind) != Some(StationKind::MobileStation) {
        return Err(TopologyError::NotMobile(ms));
    }
    let mut search = Search {
        topo: t,
        max_hops,
        cap: cap.max(1),
        base: t.station(StationId::BASE).position,
        best: BinaryHeap::new(),
        truncated: false,
        path: vec![ms],
        on_path: vec![false; t.stations.len()],
    };
    search.on_path[ms.index()] = true;
    search.extend(ms, 0.0);
    let truncated = search.truncated;
    let mut routes: Vec<Route> = search.best.into_iter().map(|r| Route::new(r.hops)).collect();
    if routes.is_empty() {
        return Err(TopologyError::NoRouteExists(ms));
    }
    routes.sort();
    Ok(Enumeration { routes, truncated })
}

/// Candidate routes for `ms`, using the topology's `max_routes_per_ms` cap.
pub fn enumerate_routes(
    t: &Topology,
    ms: StationId,
    max_hops: usize,
) -> Result<Vec<Route>, TopologyError> {
    enumerate_routes_capped(t, ms, max_hops, t.max_routes_per_ms).map(|e| e.routes)
}

/// Every violated route invariant; empty means valid.
pub fn validate_route(t: &Topology, r: &Route) -> Vec<RouteViolation> {
    let mut v = Vec::new();
    if r.hops.len() < 2 {
        v.push(RouteViolation::TooShort);
        return v;
    }
    for &id in &r.hops {
        if t.get_station(id).is_none() {
            v.push(RouteViolation::UnknownStation(id));
        }
    }
    if !v.is_empty() {
        return v;
    }
    let first = r.hops[0];
    let last = *r.hops.last().expect("len >= 2");
    if t.station(first).kind != StationKind::MobileStation {
        v.push(RouteViolation::FirstNotMobile(first));
    }
    if t.station(last).kind != StationKind::BaseStation {
        v.push(RouteViolation::LastNotBase(last));
    }
    let inner = &r.hops[1..r.hops.len() - 1];
    for &id in inner {
        if !t.station(id).kind.is_relay() {
            v.push(RouteViolation::IntermediateNotRelay(id));
        }
    }
    let mut seen = vec![false; t.stations.len()];
    for &id in &r.hops {
        if std::mem::replace(&mut seen[id.index()], true) {
            v.push(RouteViolation::RepeatedStation(id));
        }
    }
    for (a, b) in r.edges() {
        if t.link(a, b).is_none() {
            v.push(RouteViolation::MissingLink(a, b));
        }
    }
    if r.hop_count() > t.max_hops {
        v.push(RouteViolation::HopBoundExceeded { hops: r.hop_count(), max_hops: t.max_hops });
    }
    if r.hop_count() != 2 {
        for &id in inner {
            if t.station(id).kind == StationKind::TransparentRs {
                v.push(RouteViolation::TransparentInLongRoute(id));
            }
        }
    }
    v
}
