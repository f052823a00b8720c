//! Frame-by-frame uplink simulation and the EBCD-vs-baseline comparison.
//!
//! A run builds the topology and radio map from the seed, routes every
//! reachable MS once (with the expected demand), then steps frames. Each
//! frame samples a demand per MS, queues it, and serves queues round-robin
//! out of a shared slot budget. Routes whose MS holds queued bits compete
//! for slots; the ones granted slots form the frame's concurrent
//! transmitter set for interference, and every hop is then re-resolved
//! against that set before energy is charged.

use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use crate::baseline::{dijkstra_routes_weighted, BaselineWeight, WeightedGraph};
use crate::bco::{run_ebcd, BcoError, BcoParams};
use crate::channel::{ChannelConfig, ChannelError, McsTable};
use crate::energy::{link_energy_mj, slots_needed, EnergyBreakdown, EnergyError, FrameConfig, ResolvedHop};
use crate::radio::{InterferenceField, RadioMap};
use crate::rng::{keyed_seed, split_seed, stream_rng, Stream, StreamHash};
use crate::routing::{CandidateSet, FitnessOptions, RoutingContext, Solution};
use crate::topology::{generate_topology, Topology, TopologyConfig, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scenario {
    #[default]
    ThreeHop,
    FourHop,
    FiveHop,
}

impl Scenario {
    pub fn max_hops(self) -> usize {
        match self {
            Scenario::ThreeHop => 3,
            Scenario::FourHop => 4,
            Scenario::FiveHop => 5,
        }
    }

    /// Accepts `3hop`, `3` and the like.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().trim_end_matches("hop") {
            "3" => Some(Scenario::ThreeHop),
            "4" => Some(Scenario::FourHop),
            "5" => Some(Scenario::FiveHop),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ThreeHop => "3hop",
            Scenario::FourHop => "4hop",
            Scenario::FiveHop => "5hop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Ebcd,
    Dijkstra,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ebcd => "ebcd",
            Algorithm::Dijkstra => "dijkstra",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub n_rs: usize,
    pub n_ms: usize,
    pub n_frames: usize,
    pub seed: u64,
    /// Re-route every this many frames using the previous frame's demands;
    /// 0 routes once.
    pub re_route_interval: usize,
    pub demand_min_bits: u64,
    pub demand_max_bits: u64,
    /// Demand assumed per MS when routing.
    pub routing_demand_bits: u64,
    pub baseline_weight: BaselineWeight,
    pub fitness: FitnessOptions,
    /// Counts and hop bound here are ignored; they come from the fields
    /// above.
    pub topology: TopologyConfig,
    pub channel: ChannelConfig,
    pub frame: FrameConfig,
    pub mcs: McsTable,
    /// The seed here is ignored; the optimizer seed derives from `seed`.
    pub bco: BcoParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scenario: Scenario::ThreeHop,
            n_rs: 10,
            n_ms: 100,
            n_frames: 2000,
            seed: 0,
            re_route_interval: 0,
            demand_min_bits: 900,
            demand_max_bits: 2000,
            routing_demand_bits: 1450,
            baseline_weight: BaselineWeight::Distance,
            fitness: FitnessOptions::default(),
            topology: TopologyConfig::default(),
            channel: ChannelConfig::default(),
            frame: FrameConfig::default(),
            mcs: McsTable::default(),
            bco: BcoParams::default(),
        }
    }
}

impl SimConfig {
    pub fn topology_config(&self) -> TopologyConfig {
        TopologyConfig {
            n_rs: self.n_rs,
            n_ms: self.n_ms,
            max_hops: self.scenario.max_hops(),
            ..self.topology.clone()
        }
    }

    pub fn bco_params(&self) -> BcoParams {
        BcoParams { seed: split_seed(self.seed, Stream::Bco), ..self.bco.clone() }
    }

    /// Checks the cross-field constraints the individual parsers cannot.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.n_frames == 0 {
            return bad("n_frames must be at least 1".into());
        }
        if self.demand_min_bits > self.demand_max_bits {
            return bad(format!(
                "demand_min_bits {} exceeds demand_max_bits {}",
                self.demand_min_bits, self.demand_max_bits
            ));
        }
        if self.frame.slots_per_frame == 0 || !(self.frame.frame_duration_s > 0.0) {
            return bad("frame duration and slot count must be positive".into());
        }
        self.bco.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Bco(#[from] BcoError),
    #[error("frame {frame}: a hop needed more than the power cap and power_cap_fallback is off")]
    PowerCapExceeded { frame: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameResult {
    pub frame_index: usize,
    pub total_energy_mj: f64,
    pub per_class_energy: EnergyBreakdown,
    pub slots_used: u64,
    /// Slots needed to drain every queue at this frame's resolved MCS levels.
    pub slots_demanded: u64,
    pub bits_served: u64,
    /// Bits still queued after the frame.
    pub carried_over_bits: u64,
    /// Hops that transmitted this frame at the power cap.
    pub power_capped_links: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub mean_energy_per_frame_mj: f64,
    pub frames: Vec<FrameResult>,
    pub unreachable_count: usize,
    /// Time spent routing. Not deterministic; excluded from comparisons.
    pub routing_wallclock_s: f64,
    pub energy: EnergyBreakdown,
    /// Bits sampled for reachable MSs.
    pub bits_sampled: u64,
    pub bits_served: u64,
    pub bits_queued: u64,
    pub power_capped_links: u64,
    /// Fingerprint of the full demand sequence (all MSs, all frames).
    pub demand_hash: u64,
    pub routes: Solution,
}

impl RunReport {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        RunReport { routing_wallclock_s: 0.0, ..self.clone() }
            == RunReport { routing_wallclock_s: 0.0, ..other.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub ebcd: RunReport,
    pub baseline: RunReport,
    pub savings_percent: f64,
}

/// `100·(base − other)/base`, 0 when the base uses no energy.
pub fn savings_percent(base_mj: f64, other_mj: f64) -> f64 {
    if base_mj == 0.0 {
        0.0
    } else {
        100.0 * (base_mj - other_mj) / base_mj
    }
}

/// Per-frame network state: fixed routes and the per-MS queues.
pub struct FrameState<'a> {
    radio: &'a RadioMap,
    frame: FrameConfig,
    /// Link indices per reachable MS, in MS id order.
    routes: Vec<Vec<usize>>,
    queues: Vec<u64>,
    field: InterferenceField,
}

impl<'a> FrameState<'a> {
    pub fn new(radio: &'a RadioMap, frame: FrameConfig, routes: Vec<Vec<usize>>) -> Self {
        let n = routes.len();
        FrameState { radio, frame, routes, queues: vec![0; n], field: InterferenceField::new(radio) }
    }

    pub fn queues(&self) -> &[u64] {
        &self.queues
    }

    pub fn set_routes(&mut self, routes: Vec<Vec<usize>>) {
        assert_eq!(routes.len(), self.routes.len());
        self.routes = routes;
    }
}

/// Slots to push `bits` end to end over hops with the given bits per slot.
fn route_slots(bits: u64, per_slot: &[u32]) -> u64 {
    per_slot.iter().map(|&d| slots_needed(bits, d)).sum()
}

/// Largest `b ≤ queued` whose route fits in `budget` slots.
fn max_servable(queued: u64, per_slot: &[u32], budget: u64) -> u64 {
    if route_slots(queued, per_slot) <= budget {
        return queued;
    }
    let (mut lo, mut hi) = (0, queued);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if route_slots(mid, per_slot) <= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Round-robin service starting at MS position `start`; returns bits per MS.
fn allocate(queues: &[u64], per_slot: &[Vec<u32>], start: usize, budget: u64) -> Vec<u64> {
    let n = queues.len();
    let mut served = vec![0; n];
    let mut left = budget;
    for k in 0..n {
        let i = (start + k) % n;
        if queues[i] == 0 || left == 0 {
            continue;
        }
        let b = max_servable(queues[i], &per_slot[i], left);
        served[i] = b;
        left -= route_slots(b, &per_slot[i]);
    }
    served
}

/// Advance one frame: enqueue `demands` (one per route), resolve the channel
/// and serve queues out of the slot budget.
pub fn frame_step(state: &mut FrameState<'_>, demands: &[u64], frame_index: usize) -> FrameResult {
    assert_eq!(demands.len(), state.queues.len(), "one demand per routed MS");
    for (q, &d) in state.queues.iter_mut().zip(demands) {
        *q += d;
    }
    let n = state.queues.len();
    let budget = state.frame.slots_per_frame as u64;
    let start = if n == 0 { 0 } else { frame_index % n };
    let radio = state.radio;

    // Pass 1: interference-free levels decide who gets slots.
    let isolated: Vec<Vec<u32>> = state
        .routes
        .iter()
        .map(|r| r.iter().map(|&li| radio.link(li).isolated.level.bits_per_slot).collect())
        .collect();
    let granted = allocate(&state.queues, &isolated, start, budget);

    // Pass 2: the granted routes are the concurrent transmitters.
    state.field.build(
        radio,
        state.routes.iter().zip(&granted).filter(|(_, &b)| b > 0).map(|(r, _)| r.as_slice()),
    );
    let resolved: Vec<Vec<ResolvedHop>> = state
        .routes
        .iter()
        .map(|r| r.iter().map(|&li| state.field.resolve(radio, li)).collect())
        .collect();
    let per_slot: Vec<Vec<u32>> = resolved
        .iter()
        .map(|r| r.iter().map(|h| h.level.bits_per_slot).collect())
        .collect();
    let served = allocate(&state.queues, &per_slot, start, budget);

    let mut out = FrameResult { frame_index, ..Default::default() };
    for i in 0..n {
        let q = state.queues[i];
        if q == 0 {
            continue;
        }
        out.slots_demanded += route_slots(q, &per_slot[i]);
        let b = served[i];
        if b == 0 {
            continue;
        }
        out.slots_used += route_slots(b, &per_slot[i]);
        for h in &resolved[i] {
            out.per_class_energy.add(h.class, link_energy_mj(b, &h.level, &state.frame, h.tx_power_mw));
            out.power_capped_links += h.capped as u64;
        }
        out.bits_served += b;
        state.queues[i] = q - b;
    }
    out.total_energy_mj = out.per_class_energy.total_mj;
    out.carried_over_bits = state.queues.iter().sum();
    out
}

/// Topology, radio map and candidate routes shared by both algorithms of a
/// comparison.
pub struct Prepared {
    pub topology: Topology,
    pub radio: RadioMap,
    pub candidates: CandidateSet,
}

impl Prepared {
    pub fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let topology = generate_topology(&cfg.topology_config(), split_seed(cfg.seed, Stream::Topology))?;
        let radio = RadioMap::new(&topology, &cfg.channel, &cfg.mcs, split_seed(cfg.seed, Stream::Shadowing))?;
        let candidates = CandidateSet::build(&topology, cfg.scenario.max_hops())?;
        Ok(Prepared { topology, radio, candidates })
    }

    fn link_lists(&self, s: &Solution) -> Vec<Vec<usize>> {
        self.candidates
            .ms
            .iter()
            .map(|ms| {
                let r = &s.assignment[ms];
                r.edges()
                    .map(|(a, b)| self.topology.link_index(a, b).expect("routes use topology links"))
                    .collect()
            })
            .collect()
    }

    /// Route every reachable MS with `algorithm` for the given per-MS
    /// demands (MS id order over reachable MSs).
    pub fn route(
        &self,
        cfg: &SimConfig,
        algorithm: Algorithm,
        demands: Vec<u64>,
        bco_seed: u64,
    ) -> Result<Solution, SimError> {
        if self.candidates.is_empty() {
            return Ok(Solution::default());
        }
        match algorithm {
            Algorithm::Ebcd => {
                let ctx = RoutingContext::new(&self.radio, &self.candidates, demands, cfg.frame, cfg.fitness)?;
                let params = BcoParams { seed: bco_seed, ..cfg.bco.clone() };
                Ok(run_ebcd(&ctx, &params)?.best)
            }
            Algorithm::Dijkstra => {
                let g = match cfg.baseline_weight {
                    BaselineWeight::Distance => WeightedGraph::distances(&self.topology),
                    BaselineWeight::Energy => {
                        WeightedGraph::energies(&self.topology, &self.radio, cfg.routing_demand_bits, &cfg.frame)
                    }
                };
                Ok(dijkstra_routes_weighted(&self.topology, &g).solution)
            }
        }
    }

    pub fn run(&self, cfg: &SimConfig, algorithm: Algorithm) -> Result<RunReport, SimError> {
        let n_routed = self.candidates.len();
        let bco_seed = split_seed(cfg.seed, Stream::Bco);
        let clock = Instant::now();
        let mut routes = self.route(cfg, algorithm, vec![cfg.routing_demand_bits; n_routed], bco_seed)?;
        let mut wallclock = clock.elapsed().as_secs_f64();

        let mut state = FrameState::new(&self.radio, cfg.frame, self.link_lists(&routes));
        let mut rng = stream_rng(cfg.seed, Stream::Demands);
        let mut hash = StreamHash::default();
        let mut report = RunReport {
            algorithm,
            mean_energy_per_frame_mj: 0.0,
            frames: Vec::with_capacity(cfg.n_frames),
            unreachable_count: self.topology.unreachable().len(),
            routing_wallclock_s: 0.0,
            energy: EnergyBreakdown::default(),
            bits_sampled: 0,
            bits_served: 0,
            bits_queued: 0,
            power_capped_links: 0,
            demand_hash: 0,
            routes: Solution::default(),
        };
        let mut demands = vec![0u64; n_routed];
        for f in 0..cfg.n_frames {
            if cfg.re_route_interval > 0 && f > 0 && f % cfg.re_route_interval == 0 && n_routed > 0 {
                let clock = Instant::now();
                routes = self.route(cfg, algorithm, demands.clone(), keyed_seed(bco_seed, f as u64))?;
                wallclock += clock.elapsed().as_secs_f64();
                state.set_routes(self.link_lists(&routes));
            }
            // Every MS draws, reachable or not, so the stream does not
            // depend on routing.
            let mut slot = 0;
            for ms in self.topology.mobile_stations() {
                let d = rng.random_range(cfg.demand_min_bits..=cfg.demand_max_bits);
                hash.push(d);
                if slot < n_routed && self.candidates.ms[slot] == ms {
                    demands[slot] = d;
                    report.bits_sampled += d;
                    slot += 1;
                }
            }
            let fr = frame_step(&mut state, &demands, f);
            if fr.power_capped_links > 0 && !cfg.fitness.power_cap_fallback {
                return Err(SimError::PowerCapExceeded { frame: f });
            }
            report.energy += &fr.per_class_energy;
            report.bits_served += fr.bits_served;
            report.power_capped_links += fr.power_capped_links;
            report.frames.push(fr);
        }
        report.bits_queued = state.queues().iter().sum();
        report.mean_energy_per_frame_mj =
            report.frames.iter().map(|f| f.total_energy_mj).sum::<f64>() / cfg.n_frames as f64;
        report.routing_wallclock_s = wallclock;
        report.demand_hash = hash.finish();
        report.routes = routes;
        Ok(report)
    }
}

/// One simulation run.
pub fn run(cfg: &SimConfig, algorithm: Algorithm) -> Result<RunReport, SimError> {
    Prepared::new(cfg)?.run(cfg, algorithm)
}

/// Both algorithms on the same topology and demand stream.
pub fn compare(cfg: &SimConfig) -> Result<ComparisonReport, SimError> {
    let p = Prepared::new(cfg)?;
    let ebcd = p.run(cfg, Algorithm::Ebcd)?;
    let baseline = p.run(cfg, Algorithm::Dijkstra)?;
    debug_assert_eq!(ebcd.demand_hash, baseline.demand_hash);
    let savings = savings_percent(baseline.mean_energy_per_frame_mj, ebcd.mean_energy_per_frame_mj);
    Ok(ComparisonReport { ebcd, baseline, savings_percent: savings })
}
