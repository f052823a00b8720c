//! The joint routing problem shared by the bee-colony optimizer and the
//! exhaustive oracle: per-MS candidate routes, joint assignments and the
//! interference-coupled solution cost.

use std::collections::BTreeMap;

use crate::energy::{route_fitness, DistRule, EnergyError, FitnessComponents, FrameConfig, ResolvedHop};
use crate::radio::{InterferenceField, Overlay, RadioMap};
use crate::topology::{enumerate_routes_capped, Route, StationId, Topology, TopologyError};

#[derive(Debug, Clone, PartialEq)]
pub struct RouteCandidate {
    pub route: Route,
    /// Indices into the topology's link list, in hop order.
    pub links: Vec<usize>,
    pub distance_m: f64,
}

impl RouteCandidate {
    pub fn new(t: &Topology, route: Route) -> Option<Self> {
        let links: Option<Vec<usize>> = route.edges().map(|(a, b)| t.link_index(a, b)).collect();
        let links = links?;
        let distance_m = links.iter().map(|&i| t.links()[i].distance_m).sum();
        Some(RouteCandidate { route, links, distance_m })
    }
}

/// Candidate routes for every reachable MS, in MS id order.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub ms: Vec<StationId>,
    pub candidates: Vec<Vec<RouteCandidate>>,
    /// MSs whose candidate list hit the enumeration cap.
    pub truncated: Vec<StationId>,
}

impl CandidateSet {
    pub fn build(t: &Topology, max_hops: usize) -> Result<Self, TopologyError> {
        let mut out = CandidateSet { ms: Vec::new(), candidates: Vec::new(), truncated: Vec::new() };
        for ms in t.reachable_mobile_stations() {
            let e = enumerate_routes_capped(t, ms, max_hops, t.max_routes_per_ms())?;
            if e.truncated {
                out.truncated.push(ms);
            }
            out.ms.push(ms);
            out.candidates.push(
                e.routes
                    .into_iter()
                    .map(|r| RouteCandidate::new(t, r).expect("enumerated routes use existing links"))
                    .collect(),
            );
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ms.is_empty()
    }

    /// Number of joint assignments, saturating.
    pub fn joint_size(&self) -> u128 {
        self.candidates
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    pub fn to_solution(&self, assignment: &[usize]) -> Solution {
        Solution {
            assignment: self
                .ms
                .iter()
                .zip(assignment)
                .enumerate()
                .map(|(pos, (&ms, &c))| (ms, self.candidates[pos][c].route.clone()))
                .collect(),
        }
    }

    /// Map a solution onto candidate indices; None if some route is not a
    /// candidate.
    pub fn assignment_of(&self, s: &Solution) -> Option<Vec<usize>> {
        self.ms
            .iter()
            .zip(&self.candidates)
            .map(|(ms, cands)| {
                let r = s.assignment.get(ms)?;
                cands.iter().position(|c| &c.route == r)
            })
            .collect()
    }
}

/// One route per reachable MS.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Solution {
    pub assignment: BTreeMap<StationId, Route>,
}

/// Per-MS min/max of the three fitness terms over its candidates, taken
/// interference-free. Used only with `normalize_fitness`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TermBounds {
    lo: [f64; 3],
    hi: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessOptions {
    pub dist_rule: DistRule,
    pub normalize: bool,
    /// When false, a hop that cannot meet the lowest MCS threshold is an
    /// error instead of running at the power cap.
    pub power_cap_fallback: bool,
}

impl Default for FitnessOptions {
    fn default() -> Self {
        FitnessOptions { dist_rule: DistRule::Bottleneck, normalize: false, power_cap_fallback: true }
    }
}

/// Everything needed to score a joint assignment.
pub struct RoutingContext<'a> {
    pub radio: &'a RadioMap,
    pub candidates: &'a CandidateSet,
    /// Demand assumed for routing, per MS position in `candidates`.
    pub demand_bits: Vec<u64>,
    pub frame: FrameConfig,
    pub options: FitnessOptions,
    bounds: Option<Vec<TermBounds>>,
}

impl<'a> RoutingContext<'a> {
    pub fn new(
        radio: &'a RadioMap,
        candidates: &'a CandidateSet,
        demand_bits: Vec<u64>,
        frame: FrameConfig,
        options: FitnessOptions,
    ) -> Result<Self, EnergyError> {
        assert_eq!(demand_bits.len(), candidates.len(), "one demand per reachable MS");
        let mut ctx = RoutingContext { radio, candidates, demand_bits, frame, options, bounds: None };
        if options.normalize {
            let mut bounds = Vec::with_capacity(candidates.len());
            let mut hops = Vec::new();
            for (pos, cands) in candidates.candidates.iter().enumerate() {
                let mut b = TermBounds { lo: [f64::INFINITY; 3], hi: [f64::NEG_INFINITY; 3] };
                for c in cands {
                    hops.clear();
                    hops.extend(c.links.iter().map(|&li| radio.link(li).isolated));
                    let f = route_fitness(&hops, ctx.demand_bits[pos], &frame, options.dist_rule)?;
                    for (k, x) in [f.energy_term, f.traffic_term, 1.0 / f.dist_term].into_iter().enumerate() {
                        b.lo[k] = b.lo[k].min(x);
                        b.hi[k] = b.hi[k].max(x);
                    }
                }
                bounds.push(b);
            }
            ctx.bounds = Some(bounds);
        }
        Ok(ctx)
    }

    /// Uniform routing demand for every MS.
    pub fn uniform(
        radio: &'a RadioMap,
        candidates: &'a CandidateSet,
        demand_bits: u64,
        frame: FrameConfig,
        options: FitnessOptions,
    ) -> Result<Self, EnergyError> {
        RoutingContext::new(radio, candidates, vec![demand_bits; candidates.len()], frame, options)
    }

    pub fn n_ms(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidates_of(&self, pos: usize) -> &[RouteCandidate] {
        &self.candidates.candidates[pos]
    }

    /// Scalar route score used by the optimizer: raw `F`, or with
    /// normalization `1 + Σ (x − min)/(max − min)` over the three terms (the
    /// offset keeps the cost positive for recruitment).
    fn score(&self, pos: usize, f: &FitnessComponents) -> f64 {
        match &self.bounds {
            None => f.f_value,
            Some(bounds) => {
                let b = &bounds[pos];
                let terms = [f.energy_term, f.traffic_term, 1.0 / f.dist_term];
                1.0 + terms
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| {
                        let span = b.hi[k] - b.lo[k];
                        if span > 0.0 { ((x - b.lo[k]) / span).max(0.0) } else { 0.0 }
                    })
                    .sum::<f64>()
            }
        }
    }
}

/// Reusable buffers for cost evaluation.
pub struct CostScratch {
    field: InterferenceField,
    hops: Vec<ResolvedHop>,
    overlay: Overlay,
}

impl CostScratch {
    pub fn new(radio: &RadioMap) -> Self {
        CostScratch { field: InterferenceField::new(radio), hops: Vec::new(), overlay: Overlay::default() }
    }
}

/// Resolve every hop of `routes` (one link list per MS position) under their
/// mutual interference.
pub fn resolve_routes(
    radio: &RadioMap,
    routes: &[&[usize]],
    scratch: &mut InterferenceField,
) -> Vec<Vec<ResolvedHop>> {
    scratch.build(radio, routes.iter().copied());
    routes
        .iter()
        .map(|links| links.iter().map(|&li| scratch.resolve(radio, li)).collect())
        .collect()
}

/// Per-MS fitness of an arbitrary route set (one link list per MS position),
/// with interference from all of them.
pub fn route_set_fitness(
    ctx: &RoutingContext<'_>,
    routes: &[&[usize]],
    scratch: &mut CostScratch,
) -> Result<Vec<FitnessComponents>, EnergyError> {
    let radio = ctx.radio;
    let CostScratch { field, hops, .. } = scratch;
    field.build(radio, routes.iter().copied());
    routes
        .iter()
        .enumerate()
        .map(|(pos, links)| {
            hops.clear();
            for &li in links.iter() {
                let h = field.resolve(radio, li);
                if h.capped && !ctx.options.power_cap_fallback {
                    return Err(EnergyError::InfeasibleHop { from: h.from, to: h.to });
                }
                hops.push(h);
            }
            route_fitness(hops, ctx.demand_bits[pos], &ctx.frame, ctx.options.dist_rule)
        })
        .collect()
}

/// Σ over MSs of the route score, all routes of the assignment treated as
/// concurrent transmitters. Summation runs in MS id order.
pub fn solution_cost_with(
    ctx: &RoutingContext<'_>,
    assignment: &[usize],
    scratch: &mut CostScratch,
) -> Result<f64, EnergyError> {
    let radio = ctx.radio;
    let cands = &ctx.candidates.candidates;
    let CostScratch { field, hops, .. } = scratch;
    field.build(
        radio,
        assignment.iter().enumerate().map(|(pos, &c)| cands[pos][c].links.as_slice()),
    );
    let mut total = 0.0;
    for (pos, &c) in assignment.iter().enumerate() {
        hops.clear();
        for &li in &cands[pos][c].links {
            let h = field.resolve(radio, li);
            if h.capped && !ctx.options.power_cap_fallback {
                return Err(EnergyError::InfeasibleHop { from: h.from, to: h.to });
            }
            hops.push(h);
        }
        let f = route_fitness(hops, ctx.demand_bits[pos], &ctx.frame, ctx.options.dist_rule)?;
        total += ctx.score(pos, &f);
    }
    Ok(total)
}

/// Approximate cost of every candidate for MS `pos` with the rest of the
/// assignment fixed. Agrees with [`solution_cost_with`] up to rounding.
pub fn candidate_costs(
    ctx: &RoutingContext<'_>,
    assignment: &[usize],
    pos: usize,
    scratch: &mut CostScratch,
    out: &mut Vec<f64>,
) -> Result<(), EnergyError> {
    let radio = ctx.radio;
    let cands = &ctx.candidates.candidates;
    let CostScratch { field, hops, overlay } = scratch;
    field.build(
        radio,
        assignment
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != pos)
            .map(|(q, &c)| cands[q][c].links.as_slice()),
    );
    out.clear();
    for cand in &cands[pos] {
        overlay.set(radio, &cand.links);
        let mut total = 0.0;
        for (q, &c) in assignment.iter().enumerate() {
            let links = if q == pos { &cand.links } else { &cands[q][c].links };
            hops.clear();
            for &li in links {
                let h = overlay.resolve(field, radio, li);
                if h.capped && !ctx.options.power_cap_fallback {
                    return Err(EnergyError::InfeasibleHop { from: h.from, to: h.to });
                }
                hops.push(h);
            }
            let f = route_fitness(hops, ctx.demand_bits[q], &ctx.frame, ctx.options.dist_rule)?;
            total += ctx.score(q, &f);
        }
        out.push(total);
    }
    Ok(())
}

pub fn solution_cost(ctx: &RoutingContext<'_>, assignment: &[usize]) -> Result<f64, EnergyError> {
    solution_cost_with(ctx, assignment, &mut CostScratch::new(ctx.radio))
}

/// Score of an arbitrary [`Solution`] (routes need not be candidates).
pub fn solution_cost_of(
    ctx: &RoutingContext<'_>,
    t: &Topology,
    s: &Solution,
) -> Result<f64, EnergyError> {
    let routes: Vec<RouteCandidate> = ctx
        .candidates
        .ms
        .iter()
        .map(|ms| {
            let r = s.assignment.get(ms).cloned().ok_or(EnergyError::EmptyRoute)?;
            RouteCandidate::new(t, r).ok_or(EnergyError::EmptyRoute)
        })
        .collect::<Result<_, _>>()?;
    let lists: Vec<&[usize]> = routes.iter().map(|c| c.links.as_slice()).collect();
    let mut scratch = CostScratch::new(ctx.radio);
    let fits = route_set_fitness(ctx, &lists, &mut scratch)?;
    Ok(fits.iter().enumerate().map(|(pos, f)| ctx.score(pos, f)).sum())
}
