//! Derivative-free global maximization over one or two copies of the unit
//! sphere (or ball), optionally times a positive scalar searched in log₂ scale.
//!
//! The search runs in two phases. In dimension 2 an exhaustive angular grid
//! (times a log-scalar grid) is evaluated; above dimension 2 a seeded random
//! sample takes its place. The best cells and a batch of seeded random points
//! then start independent Nelder–Mead runs with restarts. Sphere points are
//! carried as unnormalized vectors and normalized inside the objective, so the
//! local search never meets a chart singularity.
//!
//! Every value reported is attained at the returned argmax, so it is a
//! certified lower bound on the supremum, never a claim of the supremum.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm_spaces::{NormedSpace, Vector};

/// Half-width of the open band around an excluded scalar value.
pub const EXCLUSION_HALF_WIDTH: f64 = 1e-6;
/// Constraint violation accepted as feasible by [`minimize_constrained`].
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Relative tolerance for two starts to count as reaching the same optimum.
pub const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSet {
    Sphere,
    Ball,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRange {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchDomain {
    pub space: NormedSpace,
    pub sphere_count: usize,
    pub unit_set: UnitSet,
    pub scalar: Option<ScalarRange>,
    pub excluded_scalar: Option<f64>,
}

impl SearchDomain {
    pub fn spheres(space: NormedSpace, sphere_count: usize) -> Result<Self> {
        if !(1..=2).contains(&sphere_count) {
            return Err(Error::InvalidParameter(format!("sphere count must be 1 or 2, got {sphere_count}")));
        }
        Ok(Self { space, sphere_count, unit_set: UnitSet::Sphere, scalar: None, excluded_scalar: None })
    }

    /// Search the closed unit ball instead of the sphere.
    pub fn in_ball(mut self) -> Self {
        self.unit_set = UnitSet::Ball;
        self
    }

    pub fn with_scalar(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("scalar interval must satisfy 0 < lo < hi, got ({lo}, {hi})")));
        }
        self.scalar = Some(ScalarRange { lo, hi });
        Ok(self)
    }

    pub fn excluding(mut self, value: f64) -> Self {
        self.excluded_scalar = Some(value);
        self
    }

    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn encoded_len(&self) -> usize {
        self.sphere_count * self.dim() + usize::from(self.scalar.is_some())
    }

    fn log_bounds(&self) -> Option<(f64, f64)> {
        self.scalar.map(|r| (r.lo.log2(), r.hi.log2()))
    }

    fn scalar_admissible(&self, s: f64) -> bool {
        match self.excluded_scalar {
            Some(ex) => (s - ex).abs() >= EXCLUSION_HALF_WIDTH,
            None => true,
        }
    }

    /// Map an encoded search vector to a point of the domain.
    fn decode(&self, z: &[f64]) -> Option<DecodedPoint> {
        let d = self.dim();
        let mut blocks = Vec::with_capacity(self.sphere_count);
        for k in 0..self.sphere_count {
            let raw = &z[k * d..(k + 1) * d];
            let n = self.space.norm_slice(raw);
            if !(n > 1e-300 && n.is_finite()) {
                return None;
            }
            let div = match self.unit_set {
                UnitSet::Sphere => n,
                UnitSet::Ball => n.max(1.0),
            };
            blocks.push(raw.iter().map(|c| c / div).collect::<Vec<f64>>());
        }
        let scalar = match self.log_bounds() {
            Some((lo, hi)) => {
                let s = z[self.sphere_count * d];
                if !(s >= lo && s <= hi) {
                    return None;
                }
                let value = s.exp2();
                if !self.scalar_admissible(value) {
                    return None;
                }
                Some(value)
            }
            None => None,
        };
        Some(DecodedPoint { blocks, scalar })
    }

    fn random_encoded<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.encoded_len());
        for _ in 0..self.sphere_count {
            let u = self.space.random_unit(rng);
            let r = match self.unit_set {
                UnitSet::Sphere => 1.0,
                UnitSet::Ball => rng.random_range(0.0..1.0f64).powf(1.0 / self.dim() as f64),
            };
            z.extend(u.coords().iter().map(|c| c * r));
        }
        if let Some((lo, hi)) = self.log_bounds() {
            z.push(self.random_log_scalar(rng, lo, hi));
        }
        z
    }

    /// Half the draws are uniform in log scale; the rest crowd the excluded
    /// value, where suprema of ratio-type objectives tend to sit.
    fn random_log_scalar<R: Rng>(&self, rng: &mut R, lo: f64, hi: f64) -> f64 {
        match self.excluded_scalar {
            Some(ex) if rng.random_bool(0.5) => {
                let offset = (-rng.random_range(1.0..20.0f64)).exp2();
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (ex.log2() + sign * offset).clamp(lo, hi)
            }
            _ => rng.random_range(lo..=hi),
        }
    }

    /// Log₂ scalar grid: uniform points plus offsets 2^-k on both sides of the
    /// excluded value.
    fn scalar_grid(&self) -> Vec<f64> {
        let Some((lo, hi)) = self.log_bounds() else {
            return vec![f64::NAN];
        };
        const UNIFORM: usize = 33;
        let mut grid: Vec<f64> =
            (0..UNIFORM).map(|i| lo + (hi - lo) * i as f64 / (UNIFORM - 1) as f64).collect();
        if let Some(ex) = self.excluded_scalar {
            let c = ex.log2();
            for k in 1..=20 {
                let off = (-(k as f64)).exp2();
                grid.extend([c - off, c + off].into_iter().filter(|s| *s >= lo && *s <= hi));
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }
}

/// Borrowed view of a domain point handed to objectives.
#[derive(Clone, Copy, Debug)]
pub struct Probe<'a> {
    pub x: &'a [f64],
    pub y: Option<&'a [f64]>,
    pub scalar: Option<f64>,
}

struct DecodedPoint {
    blocks: Vec<Vec<f64>>,
    scalar: Option<f64>,
}

impl DecodedPoint {
    fn probe(&self) -> Probe<'_> {
        Probe { x: &self.blocks[0], y: self.blocks.get(1).map(|b| b.as_slice()), scalar: self.scalar }
    }

    fn into_point(self) -> DomainPoint {
        DomainPoint { vectors: self.blocks.into_iter().map(Vector::from_raw).collect(), scalar: self.scalar }
    }
}

/// An owned point of the search domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    pub vectors: Vec<Vector>,
    pub scalar: Option<f64>,
}

impl DomainPoint {
    pub fn probe(&self) -> Probe<'_> {
        Probe { x: self.vectors[0].coords(), y: self.vectors.get(1).map(|v| v.coords()), scalar: self.scalar }
    }

    fn encode(&self) -> Vec<f64> {
        let mut z: Vec<f64> = self.vectors.iter().flat_map(|v| v.coords().iter().copied()).collect();
        if let Some(s) = self.scalar {
            z.push(s.log2());
        }
        z
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub value_tolerance: f64,
    pub seed: u64,
    pub grid_resolution: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            max_iterations: 2000,
            step_tolerance: 1e-8,
            value_tolerance: 1e-10,
            seed: 0,
            grid_resolution: 180,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.starts > 0
            && self.max_iterations > 0
            && self.grid_resolution > 0
            && self.step_tolerance > 0.0
            && self.value_tolerance > 0.0;
        if !ok {
            return Err(Error::InvalidParameter("optimizer settings must all be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub best_value: f64,
    pub argmax: DomainPoint,
    pub iterations_used: usize,
    pub improvement_trace: Vec<TracePoint>,
    /// Best value of the exhaustive grid phase (dimension 2 only).
    pub grid_best: Option<f64>,
    pub abandoned_starts: usize,
    /// The start that produced the argmax stopped on tolerance rather than on
    /// the iteration cap, or at least two starts reached the best value
    /// within [`AGREEMENT_TOL`] (relative).
    pub converged: bool,
}

struct Candidate {
    value: f64,
    z: Vec<f64>,
}

fn better(a_val: f64, a_z: &[f64], b_val: f64, b_z: &[f64]) -> bool {
    match a_val.total_cmp(&b_val) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => lex_cmp(a_z, b_z) == Ordering::Less,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

enum Eval {
    Value(f64),
    Excluded,
    NonFinite,
}

fn evaluate<F>(objective: &F, domain: &SearchDomain, z: &[f64]) -> Eval
where
    F: Fn(&Probe) -> Option<f64>,
{
    match domain.decode(z) {
        None => Eval::Excluded,
        Some(p) => match objective(&p.probe()) {
            None => Eval::Excluded,
            Some(v) if v.is_finite() => Eval::Value(v),
            Some(_) => Eval::NonFinite,
        },
    }
}

fn start_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9) ^ 0x94D0_49BB_1331_11EB)
}

/// Keep the `k` best candidates, ordered best first.
fn push_top(top: &mut Vec<Candidate>, cand: Candidate, k: usize) {
    if top.len() == k {
        let worst = top.last().expect("non-empty");
        if !better(cand.value, &cand.z, worst.value, &worst.z) {
            return;
        }
        top.pop();
    }
    let pos = top
        .iter()
        .position(|c| better(cand.value, &cand.z, c.value, &c.z))
        .unwrap_or(top.len());
    top.insert(pos, cand);
}

fn merge_top(mut parts: Vec<Vec<Candidate>>, k: usize) -> Vec<Candidate> {
    let mut top = Vec::with_capacity(k);
    for part in parts.drain(..) {
        for c in part {
            push_top(&mut top, c, k);
        }
    }
    top
}

/// Exhaustive angle grid in dimension 2; returns the `keep` best cells.
fn grid_phase<F>(objective: &F, domain: &SearchDomain, config: &OptimizerConfig, keep: usize) -> Vec<Candidate>
where
    F: Fn(&Probe) -> Option<f64> + Sync,
{
    let g = config.grid_resolution;
    let units: Vec<Vec<f64>> = (0..g)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / g as f64;
            let raw = [t.cos(), t.sin()];
            let n = domain.space.norm_slice(&raw);
            raw.iter().map(|c| c / n).collect()
        })
        .collect();
    let scalars = domain.scalar_grid();
    let second = if domain.sphere_count == 2 { g } else { 1 };

    let parts: Vec<Vec<Candidate>> = (0..g)
        .into_par_iter()
        .map(|i| {
            let mut top = Vec::with_capacity(keep);
            for j in 0..second {
                for &s in &scalars {
                    let mut z = units[i].clone();
                    if domain.sphere_count == 2 {
                        z.extend_from_slice(&units[j]);
                    }
                    if domain.scalar.is_some() {
                        z.push(s);
                    }
                    if let Eval::Value(value) = evaluate(objective, domain, &z) {
                        push_top(&mut top, Candidate { value, z }, keep);
                    }
                }
            }
            top
        })
        .collect();
    merge_top(parts, keep)
}

fn sample_phase<F>(objective: &F, domain: &SearchDomain, config: &OptimizerConfig, keep: usize) -> Vec<Candidate>
where
    F: Fn(&Probe) -> Option<f64> + Sync,
{
    const CHUNK: usize = 256;
    let total = config.starts * 64;
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<Vec<Candidate>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(start_seed(config.seed ^ 0x5A5A_5A5A, c as u64));
            let mut top = Vec::with_capacity(keep);
            for _ in 0..CHUNK {
                let z = domain.random_encoded(&mut rng);
                if let Eval::Value(value) = evaluate(objective, domain, &z) {
                    push_top(&mut top, Candidate { value, z }, keep);
                }
            }
            top
        })
        .collect();
    merge_top(parts, keep)
}

struct StartResult {
    best: Option<Candidate>,
    iterations: usize,
    trace: Vec<TracePoint>,
    converged: bool,
    abandoned: bool,
}

/// Renormalize sphere blocks so restarts see unit-scale coordinates.
fn renormalize(domain: &SearchDomain, z: &mut [f64]) {
    let d = domain.dim();
    for k in 0..domain.sphere_count {
        let block = &mut z[k * d..(k + 1) * d];
        let n = domain.space.norm_slice(block);
        let div = match domain.unit_set {
            UnitSet::Sphere => n,
            UnitSet::Ball => n.max(1.0),
        };
        if n > 0.0 && n.is_finite() {
            block.iter_mut().for_each(|c| *c /= div);
        }
    }
}

/// Nelder–Mead (dimension-adaptive coefficients) maximizing from `z0`, with
/// restarts around the incumbent until a restart stops paying.
fn local_search<F>(objective: &F, domain: &SearchDomain, config: &OptimizerConfig, z0: Vec<f64>) -> StartResult
where
    F: Fn(&Probe) -> Option<f64>,
{
    const MAX_RESTARTS: usize = 8;
    let n = z0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let vector_len = domain.sphere_count * domain.dim();

    let mut result = StartResult { best: None, iterations: 0, trace: Vec::new(), converged: false, abandoned: false };
    let mut incumbent = z0;
    let mut incumbent_value = match evaluate(objective, domain, &incumbent) {
        Eval::Value(v) => v,
        Eval::Excluded => f64::NEG_INFINITY,
        Eval::NonFinite => {
            result.abandoned = true;
            return result;
        }
    };
    if incumbent_value.is_finite() {
        result.trace.push(TracePoint { iteration: 0, value: incumbent_value });
    }

    // cost is the negated objective; excluded points cost +inf
    let cost = |z: &[f64]| -> std::result::Result<f64, ()> {
        match evaluate(objective, domain, z) {
            Eval::Value(v) => Ok(-v),
            Eval::Excluded => Ok(f64::INFINITY),
            Eval::NonFinite => Err(()),
        }
    };

    'restarts: for restart in 0..=MAX_RESTARTS {
        renormalize(domain, &mut incumbent);
        let shrink = 0.5f64.powi(restart as i32);
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(incumbent.clone());
        for i in 0..n {
            let mut z = incumbent.clone();
            z[i] += if i < vector_len { 0.1 } else { 0.5 } * shrink;
            simplex.push(z);
        }
        let mut values = Vec::with_capacity(n + 1);
        for z in &simplex {
            match cost(z) {
                Ok(c) => values.push(c),
                Err(()) => {
                    result.abandoned = true;
                    break 'restarts;
                }
            }
        }
        let before = incumbent_value;
        let mut converged = false;

        while result.iterations < config.max_iterations {
            result.iterations += 1;
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            let simplex_sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
            let values_sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
            simplex = simplex_sorted;
            values = values_sorted;

            if -values[0] > incumbent_value {
                incumbent_value = -values[0];
                incumbent = simplex[0].clone();
                result.trace.push(TracePoint { iteration: result.iterations, value: incumbent_value });
            }

            let spread = values[n] - values[0];
            let size = simplex[1..]
                .iter()
                .map(|z| z.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if (spread.is_finite() && spread <= config.value_tolerance) || size <= config.step_tolerance {
                converged = true;
                break;
            }

            let centroid: Vec<f64> =
                (0..n).map(|k| simplex[..n].iter().map(|z| z[k]).sum::<f64>() / nf).collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
            };

            let xr = along(alpha);
            let Ok(fr) = cost(&xr) else {
                result.abandoned = true;
                break 'restarts;
            };
            if fr < values[0] {
                let xe = along(alpha * gamma);
                let Ok(fe) = cost(&xe) else {
                    result.abandoned = true;
                    break 'restarts;
                };
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
                continue;
            }
            let (xc, outside) = if fr < values[n] { (along(alpha * rho), true) } else { (along(-rho), false) };
            let Ok(fc) = cost(&xc) else {
                result.abandoned = true;
                break 'restarts;
            };
            if (outside && fc <= fr) || (!outside && fc < values[n]) {
                simplex[n] = xc;
                values[n] = fc;
                continue;
            }
            for i in 1..=n {
                let z: Vec<f64> =
                    simplex[0].iter().zip(&simplex[i]).map(|(b, w)| b + sigma * (w - b)).collect();
                match cost(&z) {
                    Ok(c) => {
                        simplex[i] = z;
                        values[i] = c;
                    }
                    Err(()) => {
                        result.abandoned = true;
                        break 'restarts;
                    }
                }
            }
        }

        // pick up an improvement found on the final iteration
        for (z, v) in simplex.iter().zip(&values) {
            if -v > incumbent_value {
                incumbent_value = -v;
                incumbent = z.clone();
                result.trace.push(TracePoint { iteration: result.iterations, value: incumbent_value });
            }
        }
        result.converged = converged;
        let gained = incumbent_value - before;
        if result.iterations >= config.max_iterations || !(gained > config.value_tolerance) && restart > 0 {
            break;
        }
    }

    if incumbent_value.is_finite() {
        result.best = Some(Candidate { value: incumbent_value, z: incumbent });
    }
    result
}

fn run<F>(
    objective: &F,
    domain: &SearchDomain,
    config: &OptimizerConfig,
    phase: Vec<Candidate>,
    grid_best: Option<f64>,
    mut starts: Vec<Vec<f64>>,
) -> Result<OptimizationOutcome>
where
    F: Fn(&Probe) -> Option<f64> + Sync,
{
    for (i, c) in phase.iter().enumerate() {
        if i < starts.len() {
            starts[i] = c.z.clone();
        }
    }
    let results: Vec<StartResult> =
        starts.into_par_iter().map(|z| local_search(objective, domain, config, z)).collect();

    let mut best: Option<(Candidate, bool)> = None;
    let mut trace = Vec::new();
    let mut offset = 0;
    let mut running = f64::NEG_INFINITY;
    let top = phase.into_iter().next();
    if let Some(top) = &top {
        running = top.value;
        trace.push(TracePoint { iteration: 0, value: running });
    }
    let finals: Vec<f64> = results.iter().filter_map(|r| r.best.as_ref().map(|c| c.value)).collect();
    let mut abandoned = 0;
    for r in results {
        abandoned += usize::from(r.abandoned);
        for t in &r.trace {
            if t.value > running {
                running = t.value;
                trace.push(TracePoint { iteration: offset + t.iteration, value: t.value });
            }
        }
        offset += r.iterations;
        if let Some(c) = r.best {
            let replace = match &best {
                None => true,
                Some((b, _)) => better(c.value, &c.z, b.value, &b.z),
            };
            if replace {
                best = Some((c, r.converged));
            }
        }
    }
    // the phase point only wins when every start from it was abandoned
    if let Some(top) = top {
        if best.as_ref().map_or(true, |(b, _)| top.value > b.value) {
            best = Some((top, false));
        }
    }
    let (winner, converged) =
        best.ok_or_else(|| Error::InvalidParameter("objective admits no point of the search domain".into()))?;
    let scale = winner.value.abs().max(1.0);
    let agreeing = finals.iter().filter(|&&v| (winner.value - v).abs() <= AGREEMENT_TOL * scale).count();
    let converged = converged || agreeing >= 2;
    let point = domain.decode(&winner.z).expect("winning point decodes");
    let best_value = objective(&point.probe()).filter(|v| v.is_finite()).expect("winning point re-evaluates");
    if trace.is_empty() || trace.last().map(|t| t.value) != Some(best_value) {
        if trace.last().map_or(true, |t| best_value > t.value) {
            trace.push(TracePoint { iteration: offset, value: best_value });
        }
    }
    Ok(OptimizationOutcome {
        best_value,
        argmax: point.into_point(),
        iterations_used: offset,
        improvement_trace: trace,
        grid_best,
        abandoned_starts: abandoned,
        converged,
    })
}

/// Maximize `objective` over `domain`. Deterministic for fixed inputs,
/// regardless of the number of worker threads.
pub fn maximize<F>(objective: F, domain: &SearchDomain, config: &OptimizerConfig) -> Result<OptimizationOutcome>
where
    F: Fn(&Probe) -> Option<f64> + Sync,
{
    config.validate()?;
    let keep = (config.starts / 2).max(1);
    let (phase, grid_best) = if domain.dim() == 2 {
        let top = grid_phase(&objective, domain, config, keep);
        let gb = top.first().map(|c| c.value);
        (top, gb)
    } else {
        (sample_phase(&objective, domain, config, keep), None)
    };
    let starts: Vec<Vec<f64>> = (0..config.starts)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(start_seed(config.seed, i as u64));
            domain.random_encoded(&mut rng)
        })
        .collect();
    run(&objective, domain, config, phase, grid_best, starts)
}

/// Local refinement only, starting from the given points.
pub fn refine_from<F>(
    objective: F,
    domain: &SearchDomain,
    config: &OptimizerConfig,
    seeds: &[DomainPoint],
) -> Result<OptimizationOutcome>
where
    F: Fn(&Probe) -> Option<f64> + Sync,
{
    config.validate()?;
    let starts: Vec<Vec<f64>> = seeds.iter().map(|p| p.encode()).collect();
    run(&objective, domain, config, Vec::new(), None, starts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feasibility {
    Feasible,
    InfeasibleAtTolerance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedOutcome {
    /// Minimized objective value at the incumbent.
    pub value: f64,
    pub argmin: DomainPoint,
    pub violation: f64,
    pub feasibility: Feasibility,
    pub penalty_weight: f64,
    /// Outcome of the last penalized maximization (in the negated orientation).
    pub search: OptimizationOutcome,
}

/// Minimize `objective` subject to `margin >= 0` by maximizing the negated
/// objective minus a quadratic penalty whose weight grows tenfold per round
/// until the incumbent violates the constraint by less than 1e-8.
pub fn minimize_constrained<F, G>(
    objective: F,
    margin: G,
    domain: &SearchDomain,
    config: &OptimizerConfig,
) -> Result<ConstrainedOutcome>
where
    F: Fn(&Probe) -> Option<f64> + Sync,
    G: Fn(&Probe) -> Option<f64> + Sync,
{
    const MAX_ROUNDS: usize = 12;
    let mut weight = 1e4;
    let penalized = |w: f64| {
        let objective = &objective;
        let margin = &margin;
        move |p: &Probe| -> Option<f64> {
            let f = objective(p)?;
            let m = margin(p)?;
            let v = (-m).max(0.0);
            Some(-f - w * v * v)
        }
    };
    let violation_at = |pt: &DomainPoint| margin(&pt.probe()).map_or(f64::INFINITY, |m| (-m).max(0.0));

    let mut search = maximize(penalized(weight), domain, config)?;
    let mut violation = violation_at(&search.argmax);
    for _ in 0..MAX_ROUNDS {
        if violation < FEASIBILITY_TOL {
            break;
        }
        weight *= 10.0;
        search = refine_from(penalized(weight), domain, config, std::slice::from_ref(&search.argmax))?;
        violation = violation_at(&search.argmax);
    }
    let value = objective(&search.argmax.probe())
        .ok_or_else(|| Error::InvalidParameter("objective undefined at incumbent".into()))?;
    Ok(ConstrainedOutcome {
        value,
        argmin: search.argmax.clone(),
        violation,
        feasibility: if violation < FEASIBILITY_TOL { Feasibility::Feasible } else { Feasibility::InfeasibleAtTolerance },
        penalty_weight: weight,
        search,
    })
}
