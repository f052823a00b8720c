//! Bee-colony route optimizer.
//!
//! Each bee holds a joint assignment (one candidate route per MS). An
//! iteration lets every bee forage with `max_inner_steps` elitist
//! coordinate moves, keeps the `elite_count` best bees untouched, and lets
//! the others abandon their solution with probability proportional to how
//! far they trail the iteration best. Abandoning bees are recruited to a
//! solution drawn with probability `f_i / Σ f_k`, where quality `f = 1/cost`.
//! The search stops after `max_iterations` or `stagnation_limit` iterations
//! without a strict improvement of the best cost.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::energy::EnergyError;
pub use crate::routing::{solution_cost, Solution};
use crate::routing::{candidate_costs, solution_cost_with, CandidateSet, CostScratch, RoutingContext};

#[derive(Debug, Clone, PartialEq)]
pub struct BcoParams {
    pub n_bees: usize,
    /// Local-improvement steps per bee per iteration; 0 means two per MS.
    pub max_inner_steps: usize,
    pub max_iterations: usize,
    pub stagnation_limit: usize,
    pub elite_count: usize,
    pub seed: u64,
}

impl Default for BcoParams {
    fn default() -> Self {
        BcoParams {
            n_bees: 30,
            max_inner_steps: 0,
            max_iterations: 100,
            stagnation_limit: 20,
            elite_count: 2,
            seed: 0,
        }
    }
}

impl BcoParams {
    pub fn validate(&self) -> Result<(), BcoError> {
        let bad = |m: &str| Err(BcoError::InvalidParams(m.to_string()));
        if self.n_bees == 0 {
            return bad("n_bees must be at least 1");
        }
        if self.elite_count == 0 || self.elite_count > self.n_bees {
            return bad("elite_count must be in 1..=n_bees");
        }
        if self.max_iterations == 0 || self.stagnation_limit == 0 {
            return bad("iteration limits must be at least 1");
        }
        Ok(())
    }

    pub fn inner_steps(&self, n_ms: usize) -> usize {
        if self.max_inner_steps == 0 {
            2 * n_ms
        } else {
            self.max_inner_steps
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BcoError {
    #[error("no mobile station has a candidate route")]
    EmptyCandidates,
    #[error("recruitment needs positive costs, got {0}")]
    NonPositiveCost(f64),
    #[error("invalid optimizer parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbcdResult {
    pub best: Solution,
    /// Candidate index per MS position, parallel to the candidate set.
    pub best_assignment: Vec<usize>,
    pub best_cost: f64,
    /// Best-so-far cost after each iteration.
    pub cost_trace: Vec<f64>,
    pub iterations_run: usize,
}

/// A bee's foraging state.
#[derive(Debug, Clone, PartialEq)]
pub struct Bee {
    pub assignment: Vec<usize>,
    pub cost: f64,
    /// Next MS position to revisit (round-robin).
    cursor: usize,
    /// Consecutive local steps that changed nothing. Once this reaches the
    /// number of MSs the assignment is a coordinate-wise fixed point.
    unchanged: usize,
}

impl Bee {
    pub fn new(ctx: &RoutingContext<'_>, assignment: Vec<usize>, cursor: usize) -> Result<Self, BcoError> {
        let cost = solution_cost(ctx, &assignment)?;
        Ok(Bee { assignment, cost, cursor, unchanged: 0 })
    }

    pub fn is_settled(&self) -> bool {
        self.unchanged >= self.assignment.len()
    }
}

/// Quality-proportional recruitment: `P_i = f_i / Σ f_k` with `f_i = 1/cost_i`.
pub fn recruitment_probabilities(costs: &[f64]) -> Result<Vec<f64>, BcoError> {
    if let Some(&c) = costs.iter().find(|&&c| !(c > 0.0) || !c.is_finite()) {
        return Err(BcoError::NonPositiveCost(c));
    }
    let quality: Vec<f64> = costs.iter().map(|c| 1.0 / c).collect();
    let total: f64 = quality.iter().sum();
    Ok(quality.into_iter().map(|q| q / total).collect())
}

/// `n_bees` assignments with a uniformly random candidate per MS.
pub fn init_population<R: Rng>(
    candidates: &CandidateSet,
    p: &BcoParams,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>, BcoError> {
    if candidates.is_empty() || candidates.candidates.iter().any(Vec::is_empty) {
        return Err(BcoError::EmptyCandidates);
    }
    Ok((0..p.n_bees)
        .map(|_| {
            candidates
                .candidates
                .iter()
                .map(|c| rng.random_range(0..c.len()))
                .collect()
        })
        .collect())
}

/// One elitist step: take the bee's next MS, score every candidate route
/// for it with the rest of the assignment fixed, and move to the cheapest
/// (lowest candidate index on ties, i.e. lexicographically smallest route).
/// Candidates are screened incrementally; the chosen move is then re-scored
/// exactly and kept only if the exact cost does not increase. Returns
/// whether the assignment changed.
pub fn local_improve(
    ctx: &RoutingContext<'_>,
    bee: &mut Bee,
    scratch: &mut CostScratch,
) -> Result<bool, BcoError> {
    let n = bee.assignment.len();
    if n == 0 {
        return Ok(false);
    }
    let pos = bee.cursor % n;
    bee.cursor = (pos + 1) % n;
    let current = bee.assignment[pos];
    let mut costs = Vec::new();
    candidate_costs(ctx, &bee.assignment, pos, scratch, &mut costs)?;
    let mut best = current;
    for (c, &x) in costs.iter().enumerate() {
        if x < costs[best] || (x == costs[best] && c < best) {
            best = c;
        }
    }
    if best != current {
        let previous = std::mem::replace(&mut bee.assignment[pos], best);
        let exact = solution_cost_with(ctx, &bee.assignment, scratch)?;
        if exact <= bee.cost {
            bee.cost = exact;
            bee.unchanged = 0;
            return Ok(true);
        }
        bee.assignment[pos] = previous;
    }
    bee.unchanged += 1;
    Ok(false)
}

fn rank(a: &Bee, b: &Bee) -> Ordering {
    a.cost.total_cmp(&b.cost).then_with(|| a.assignment.cmp(&b.assignment))
}

fn roulette<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Run the colony to completion. Deterministic for a given context and
/// `params.seed`.
pub fn run_ebcd(ctx: &RoutingContext<'_>, params: &BcoParams) -> Result<EbcdResult, BcoError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_ms = ctx.n_ms();
    let starts = init_population(ctx.candidates, params, &mut rng)?;
    let mut bees = starts
        .into_iter()
        .map(|a| {
            let cursor = rng.random_range(0..n_ms);
            Bee::new(ctx, a, cursor)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut scratch = CostScratch::new(ctx.radio);
    let inner = params.inner_steps(n_ms);

    let mut best = bees.iter().min_by(|a, b| rank(a, b)).expect("n_bees >= 1").clone();
    let mut trace = Vec::new();
    let mut stagnant = 0;
    let mut iterations = 0;

    while iterations < params.max_iterations {
        iterations += 1;
        for bee in bees.iter_mut() {
            for _ in 0..inner {
                if bee.is_settled() {
                    break;
                }
                local_improve(ctx, bee, &mut scratch)?;
            }
        }

        let mut order: Vec<usize> = (0..bees.len()).collect();
        order.sort_by(|&a, &b| rank(&bees[a], &bees[b]));
        let iter_best = &bees[order[0]];
        if iter_best.cost < best.cost {
            best = iter_best.clone();
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        trace.push(best.cost);
        if stagnant >= params.stagnation_limit {
            break;
        }

        let costs: Vec<f64> = bees.iter().map(|b| b.cost).collect();
        let probs = recruitment_probabilities(&costs)?;
        let lo = bees[order[0]].cost;
        let hi = bees[*order.last().expect("non-empty")].cost;
        let snapshot = bees.clone();
        for &b in &order[params.elite_count.min(order.len())..] {
            let abandon = if hi > lo { (bees[b].cost - lo) / (hi - lo) } else { 0.0 };
            let u: f64 = rng.random();
            if u < abandon {
                let dancer = &snapshot[roulette(&probs, &mut rng)];
                let bee = &mut bees[b];
                bee.assignment.clone_from(&dancer.assignment);
                bee.cost = dancer.cost;
                bee.unchanged = dancer.unchanged;
            }
        }
    }

    Ok(EbcdResult {
        best: ctx.candidates.to_solution(&best.assignment),
        best_assignment: best.assignment,
        best_cost: best.cost,
        cost_trace: trace,
        iterations_run: iterations,
    })
}
