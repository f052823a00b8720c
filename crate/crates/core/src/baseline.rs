//! Shortest-path baseline and an exhaustive oracle for small instances.
//!
//! The baseline runs Dijkstra over the hop-layered expansion `(station,
//! hops used)` so it respects exactly the constraints the candidate
//! enumeration does: the hop bound, no repeated stations, and transparent
//! relays only as the single relay of a two-hop route. Ties break on fewer
//! hops, then on the lexicographic hop sequence.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::energy::{link_energy_mj, EnergyError, FrameConfig};
use crate::radio::RadioMap;
use crate::routing::{solution_cost_with, CostScratch, RoutingContext, Solution};
use crate::topology::{Route, StationId, StationKind, Topology};

/// Which scalar Dijkstra minimizes per link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineWeight {
    #[default]
    Distance,
    /// Interference-free energy of the link at the routing demand.
    Energy,
}

impl BaselineWeight {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "distance" => Some(BaselineWeight::Distance),
            "energy" => Some(BaselineWeight::Energy),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaselineWeight::Distance => "distance",
            BaselineWeight::Energy => "energy",
        }
    }
}

/// Directed uplink graph with one positive weight per topology link.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub nodes: Vec<StationId>,
    /// `(from, to, weight)`, parallel to `Topology::links`.
    pub edges: Vec<(StationId, StationId, f64)>,
}

impl WeightedGraph {
    pub fn distances(t: &Topology) -> Self {
        WeightedGraph {
            nodes: t.stations().iter().map(|s| s.id).collect(),
            edges: t.links().iter().map(|l| (l.from, l.to, l.distance_m)).collect(),
        }
    }

    pub fn energies(t: &Topology, radio: &RadioMap, demand_bits: u64, fc: &FrameConfig) -> Self {
        WeightedGraph {
            nodes: t.stations().iter().map(|s| s.id).collect(),
            edges: radio
                .links()
                .iter()
                .map(|l| {
                    let h = &l.isolated;
                    (l.from, l.to, link_energy_mj(demand_bits, &h.level, fc, h.tx_power_mw))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DijkstraResult {
    pub solution: Solution,
    /// Total weight of each returned route.
    pub weights: BTreeMap<StationId, f64>,
    /// MSs with no constrained route.
    pub unreachable: Vec<StationId>,
}

#[derive(Debug, Clone, PartialEq)]
struct Label {
    weight: f64,
    path: Vec<StationId>,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| self.path.len().cmp(&other.path.len()))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Constrained shortest route from `ms`, or None.
fn shortest_from(t: &Topology, g: &WeightedGraph, ms: StationId) -> Option<Label> {
    let max_hops = t.max_hops();
    let n = t.stations().len();
    // settled[layer * n + station]
    let mut settled = vec![false; (max_hops + 1) * n];
    let mut heap = BinaryHeap::from([Reverse(Label { weight: 0.0, path: vec![ms] })]);
    while let Some(Reverse(label)) = heap.pop() {
        let at = *label.path.last().expect("non-empty");
        let layer = label.path.len() - 1;
        if at == StationId::BASE {
            // Labels pop in (weight, hops, path) order, so the first BS
            // label is the constrained optimum.
            return Some(label);
        }
        let slot = layer * n + at.index();
        if std::mem::replace(&mut settled[slot], true) || layer >= max_hops {
            continue;
        }
        let at_kind = t.station(at).kind;
        for &li in t.out_links(at) {
            let (_, to, w) = g.edges[li];
            let legal = match (at_kind, t.station(to).kind) {
                (_, StationKind::BaseStation) => true,
                (StationKind::TransparentRs, _) => false,
                (StationKind::MobileStation, StationKind::TransparentRs) => max_hops >= 2,
                (_, StationKind::NonTransparentRs) => true,
                _ => false,
            };
            if !legal || label.path.contains(&to) {
                continue;
            }
            let mut path = label.path.clone();
            path.push(to);
            heap.push(Reverse(Label { weight: label.weight + w, path }));
        }
    }
    None
}

/// Dijkstra routes for every MS under arbitrary positive link weights.
pub fn dijkstra_routes_weighted(t: &Topology, g: &WeightedGraph) -> DijkstraResult {
    let mut out = DijkstraResult {
        solution: Solution::default(),
        weights: BTreeMap::new(),
        unreachable: Vec::new(),
    };
    for ms in t.mobile_stations() {
        match shortest_from(t, g, ms) {
            Some(l) => {
                out.weights.insert(ms, l.weight);
                out.solution.assignment.insert(ms, Route::new(l.path));
            }
            None => out.unreachable.push(ms),
        }
    }
    out
}

/// Minimum-total-distance constrained route per MS.
pub fn dijkstra_routes(t: &Topology) -> DijkstraResult {
    dijkstra_routes_weighted(t, &WeightedGraph::distances(t))
}

pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("{size} joint assignments exceed the exhaustive limit of {limit}")]
    TooLarge { size: u128, limit: u128 },
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub solution: Solution,
    pub assignment: Vec<usize>,
    pub cost: f64,
}

/// Global minimum of the solution cost over every joint assignment of the
/// context's candidates. Assignments are visited in lexicographic order and
/// only a strictly lower cost replaces the incumbent.
pub fn exhaustive_best(ctx: &RoutingContext<'_>) -> Result<ExhaustiveResult, BaselineError> {
    let size = ctx.candidates.joint_size();
    if size > EXHAUSTIVE_LIMIT {
        return Err(BaselineError::TooLarge { size, limit: EXHAUSTIVE_LIMIT });
    }
    let radix: Vec<usize> = ctx.candidates.candidates.iter().map(Vec::len).collect();
    let mut scratch = CostScratch::new(ctx.radio);
    let mut current = vec![0usize; radix.len()];
    let mut best = (current.clone(), solution_cost_with(ctx, &current, &mut scratch)?);
    'outer: loop {
        let mut k = radix.len();
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            current[k] += 1;
            if current[k] < radix[k] {
                break;
            }
            current[k] = 0;
        }
        let cost = solution_cost_with(ctx, &current, &mut scratch)?;
        if cost < best.1 {
            best = (current.clone(), cost);
        }
    }
    Ok(ExhaustiveResult {
        solution: ctx.candidates.to_solution(&best.0),
        assignment: best.0,
        cost: best.1,
    })
}
