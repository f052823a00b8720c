#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaysim_core::channel::{ChannelConfig, McsTable};
use relaysim_core::energy::FrameConfig;
use relaysim_core::radio::RadioMap;
use relaysim_core::routing::{CandidateSet, FitnessOptions, RoutingContext};
use relaysim_core::topology::{
    direction_legal, generate_topology, validate_route, Link, Point, Route, Station, StationId, StationKind,
    Topology, TopologyConfig,
};

pub fn station(id: u32, kind: StationKind, x: f64, y: f64) -> Station {
    let (h, g) = match kind {
        StationKind::BaseStation => (30.0, 12.0),
        StationKind::MobileStation => (2.0, 5.0),
        _ => (10.0, 12.0),
    };
    Station {
        id: StationId(id),
        kind,
        position: Point { x, y },
        antenna_height_m: h,
        antenna_gain_db: g,
        tx_power_max_mw: 1000.0,
    }
}

/// Random graph with 3..=8 stations, mixed relay kinds and a random subset
/// of the legal links (Euclidean lengths).
pub fn random_graph(seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=8u32);
    let n_ms = rng.random_range(1..=(n - 1).min(3));
    let mut stations = vec![station(0, StationKind::BaseStation, 0.0, 0.0)];
    for id in 1..n {
        let kind = if id > n - 1 - n_ms {
            StationKind::MobileStation
        } else if rng.random_bool(0.3) {
            StationKind::TransparentRs
        } else {
            StationKind::NonTransparentRs
        };
        let (x, y) = (rng.random_range(-1500.0..1500.0), rng.random_range(-1500.0..1500.0));
        stations.push(station(id, kind, x, y));
    }
    let mut links = Vec::new();
    for a in &stations {
        for b in &stations {
            if a.id != b.id && direction_legal(a.kind, b.kind) && rng.random_bool(0.6) {
                links.push(Link {
                    from: a.id,
                    to: b.id,
                    distance_m: a.position.distance(&b.position).max(1.0),
                    bandwidth_hz: rng.random_range(3.5e6..10e6),
                });
            }
        }
    }
    let max_hops = rng.random_range(1..=5);
    Topology::from_parts(stations, links, max_hops, 2000.0, 256).unwrap()
}

/// Every valid route from `ms`, built by trying every ordered selection of
/// relays as intermediates and keeping what the route validator accepts.
pub fn all_valid_routes(t: &Topology, ms: StationId) -> Vec<Route> {
    let others: Vec<StationId> = t
        .stations()
        .iter()
        .filter(|s| s.kind.is_relay())
        .map(|s| s.id)
        .collect();
    let mut out = Vec::new();
    let mut path = vec![ms];
    fn rec(t: &Topology, others: &[StationId], path: &mut Vec<StationId>, used: &mut Vec<bool>, out: &mut Vec<Route>) {
        let mut r = path.clone();
        r.push(StationId::BASE);
        let r = Route::new(r);
        if validate_route(t, &r).is_empty() {
            out.push(r);
        }
        if path.len() > others.len() {
            return;
        }
        for (i, &o) in others.iter().enumerate() {
            if !used[i] {
                used[i] = true;
                path.push(o);
                rec(t, others, path, used, out);
                path.pop();
                used[i] = false;
            }
        }
    }
    let mut used = vec![false; others.len()];
    rec(t, &others, &mut path, &mut used, &mut out);
    out
}

pub fn brute_force_shortest(t: &Topology, ms: StationId) -> Option<f64> {
    all_valid_routes(t, ms)
        .iter()
        .map(|r| t.route_distance(r).unwrap())
        .min_by(f64::total_cmp)
}

/// A small generated instance (≤ `max_ms` MS, ≤ 4 RS, 3 hops) whose joint
/// search space fits the exhaustive limit.
pub struct Instance {
    pub topology: Topology,
    pub radio: RadioMap,
    pub candidates: CandidateSet,
}

impl Instance {
    pub fn ctx(&self) -> RoutingContext<'_> {
        RoutingContext::uniform(&self.radio, &self.candidates, 1450, FrameConfig::default(), FitnessOptions::default())
            .unwrap()
    }
}

pub fn small_instance(seed: u64, max_ms: usize, limit: u128) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n_rs = rng.random_range(1..=4);
    let mut n_ms = rng.random_range(2..=max_ms);
    let mut topo_seed = seed;
    loop {
        let cfg = TopologyConfig { n_rs, n_ms, max_hops: 3, ..Default::default() };
        let topology = generate_topology(&cfg, topo_seed).unwrap();
        let candidates = CandidateSet::build(&topology, 3).unwrap();
        if candidates.joint_size() <= limit && !candidates.is_empty() {
            let radio = RadioMap::new(&topology, &ChannelConfig::default(), &McsTable::default(), 0).unwrap();
            return Instance { topology, radio, candidates };
        }
        if candidates.is_empty() {
            topo_seed = topo_seed.wrapping_add(1_000_003);
        } else {
            n_ms -= 1;
        }
    }
}
