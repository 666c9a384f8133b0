//! Estimators for the geometric constants of a normed space, each returning
//! a witness whose re-evaluation reproduces the reported number.
//!
//! | constant | definition (suprema over nonzero pairs unless stated) |
//! |---|---|
//! | `mr` | sup α_p/β_p, searched as sup ‖λx₁ − λ^{1−p}x₂‖/‖λ^{2−p}x₁ − x₂‖ over unit x₁, x₂ and λ ≠ 1 |
//! | `dr` | sup α/β (angular over skew angular distance) |
//! | `dw` | sup (‖x‖+‖y‖)/‖x−y‖ · α[x, y] |
//! | `delta` | inf{1 − ‖(x+y)/2‖ : x, y in the ball, ‖x−y‖ ≥ ε} |
//! | `eps0` | sup{ε : δ(ε) = 0} |
//! | `rho` | sup{(‖x+τy‖ + ‖x−τy‖)/2 − 1 : x, y unit} |
//! | `rho-prime` | lim ρ(τ)/τ as τ → 0⁺ |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angular::{self, Exponent};
use crate::error::{Error, Result};
use crate::norm_spaces::{NormedSpace, Vector};
use crate::optimizer::{
    maximize, minimize_constrained, refine_from, DomainPoint, Feasibility, OptimizerConfig, Probe, SearchDomain,
};

/// Log-scale search interval for λ and for the DW radius.
pub const SCALAR_LO: f64 = 1.0 / 1024.0;
pub const SCALAR_HI: f64 = 1024.0;
/// δ below this counts as zero when locating ε₀.
pub const DELTA_ZERO: f64 = 1e-6;
pub const EPS0_BISECTION_STEPS: usize = 40;
/// ε₀ below 2 minus this margin counts as uniformly non-square.
pub const NONSQUARE_MARGIN: f64 = 0.05;
/// Slack on the analytic range of each constant.
pub const RANGE_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantKind {
    Mr,
    Dr,
    Dw,
    Delta,
    Eps0,
    Rho,
    RhoPrime,
}

impl ConstantKind {
    pub const ALL: [ConstantKind; 7] = [
        ConstantKind::Mr,
        ConstantKind::Dr,
        ConstantKind::Dw,
        ConstantKind::Delta,
        ConstantKind::Eps0,
        ConstantKind::Rho,
        ConstantKind::RhoPrime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstantKind::Mr => "mr",
            ConstantKind::Dr => "dr",
            ConstantKind::Dw => "dw",
            ConstantKind::Delta => "delta",
            ConstantKind::Eps0 => "eps0",
            ConstantKind::Rho => "rho",
            ConstantKind::RhoPrime => "rho-prime",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Closed interval every estimate must land in, before slack.
    /// `param` is τ for ρ.
    pub fn analytic_range(self, param: Option<f64>) -> (f64, f64) {
        match self {
            ConstantKind::Mr | ConstantKind::Dr => (1.0, 2.0),
            ConstantKind::Dw => (2.0, 4.0),
            ConstantKind::Delta => (0.0, 1.0),
            ConstantKind::Eps0 => (0.0, 2.0),
            ConstantKind::Rho => {
                let tau = param.unwrap_or(0.0);
                ((tau - 1.0).max(0.0), tau)
            }
            ConstantKind::RhoPrime => (0.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessForm {
    /// Unit x₁, x₂ and the quotient λ.
    SphereLambda,
    /// A raw nonzero pair.
    RawPair,
    /// Unit or ball vectors with the constant's parameter as scalar.
    Pair,
    Single,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub form: WitnessForm,
    pub vectors: Vec<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<f64>,
}

impl Witness {
    pub fn pair(x: Vector, y: Vector, scalar: Option<f64>) -> Self {
        Self { form: WitnessForm::Pair, vectors: vec![x, y], scalar }
    }

    pub fn raw_pair(x: Vector, y: Vector) -> Self {
        Self { form: WitnessForm::RawPair, vectors: vec![x, y], scalar: None }
    }

    pub fn sphere_lambda(x1: Vector, x2: Vector, lambda: f64) -> Self {
        Self { form: WitnessForm::SphereLambda, vectors: vec![x1, x2], scalar: Some(lambda) }
    }

    pub fn single(x: Vector, scalar: Option<f64>) -> Self {
        Self { form: WitnessForm::Single, vectors: vec![x], scalar }
    }

    fn two(&self) -> Result<(&Vector, &Vector)> {
        match self.vectors.as_slice() {
            [x, y] => Ok((x, y)),
            _ => Err(Error::InvalidParameter("witness needs exactly two vectors".into())),
        }
    }

    /// For sphere-λ witnesses, the equivalent raw pair (λx₁, x₂).
    pub fn to_raw_pair(&self) -> Result<Witness> {
        let (x, y) = self.two()?;
        match (self.form, self.scalar) {
            (WitnessForm::SphereLambda, Some(lambda)) => Ok(Witness::raw_pair(x.scaled(lambda), y.clone())),
            _ => Ok(Witness::raw_pair(x.clone(), y.clone())),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub abandoned_starts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_best: Option<f64>,
    /// Best value of the secondary search form, when one was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_value: Option<f64>,
    /// An independent estimate of the same number (ρ'(0) via ε₀ of the dual).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
    /// (τ, ρ(τ)/τ) pairs feeding the ρ'(0) extrapolation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quotients: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub constant: ConstantKind,
    pub space: NormedSpace,
    /// p for mr, ε for delta, τ for rho.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    pub value: f64,
    pub witness: Witness,
    pub config: OptimizerConfig,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

impl EstimateResult {
    /// The number the witness certifies: the value itself, except for ρ'(0)
    /// where it is the quotient at the smallest τ.
    pub fn certified_value(&self) -> f64 {
        match self.constant {
            ConstantKind::RhoPrime => self.diagnostics.quotients.last().map_or(self.value, |q| q.1),
            _ => self.value,
        }
    }

    /// Re-evaluate the defining expression at the witness.
    pub fn reevaluate(&self) -> Result<f64> {
        evaluate_witness(self.constant, &self.space, self.param, &self.witness)
    }

    pub fn in_range(&self) -> bool {
        let (lo, hi) = self.constant.analytic_range(self.param);
        self.value >= lo - RANGE_SLACK && self.value <= hi + RANGE_SLACK
    }
}

fn require_param(param: Option<f64>, what: &str) -> Result<f64> {
    param.ok_or_else(|| Error::InvalidParameter(format!("{what} needs its parameter")))
}

/// Evaluate the defining expression of `kind` at `witness`.
pub fn evaluate_witness(kind: ConstantKind, space: &NormedSpace, param: Option<f64>, witness: &Witness) -> Result<f64> {
    let (x, y) = witness.two()?;
    match kind {
        ConstantKind::Mr => {
            let p = Exponent::extended(require_param(param, "mr")?)?;
            match (witness.form, witness.scalar) {
                (WitnessForm::SphereLambda, Some(lambda)) => angular::sphere_lambda_ratio(space, x, y, lambda, p),
                _ => angular::ratio(space, x, y, p),
            }
        }
        ConstantKind::Dr => {
            let raw = witness.to_raw_pair()?;
            let (u, v) = raw.two()?;
            let beta = angular::skew_angular_distance(space, u, v)?;
            if !(beta > angular::DEGENERACY_REL) {
                return Err(Error::DegenerateDenominator { value: beta, threshold: angular::DEGENERACY_REL });
            }
            Ok(angular::angular_distance(space, u, v)? / beta)
        }
        ConstantKind::Dw => {
            let nx = space.norm(x)?;
            let ny = space.norm(y)?;
            let d = space.norm(&x.combine(1.0, y, -1.0))?;
            if d == 0.0 {
                return Err(Error::DegenerateDenominator { value: 0.0, threshold: 0.0 });
            }
            Ok((nx + ny) / d * angular::angular_distance(space, x, y)?)
        }
        ConstantKind::Delta => Ok(1.0 - 0.5 * space.norm(&x.combine(1.0, y, 1.0))?),
        ConstantKind::Eps0 => space.norm(&x.combine(1.0, y, -1.0)),
        ConstantKind::Rho => {
            let tau = require_param(param, "rho")?;
            rho_at(space, x, y, tau)
        }
        ConstantKind::RhoPrime => {
            let tau = witness.scalar.ok_or_else(|| Error::InvalidParameter("rho-prime witness needs tau".into()))?;
            Ok(rho_at(space, x, y, tau)? / tau)
        }
    }
}

fn rho_at(space: &NormedSpace, x: &Vector, y: &Vector, tau: f64) -> Result<f64> {
    let plus = space.norm(&x.combine(1.0, y, tau))?;
    let minus = space.norm(&x.combine(1.0, y, -tau))?;
    Ok(0.5 * (plus + minus) - 1.0)
}

fn pair_domain(space: &NormedSpace) -> Result<SearchDomain> {
    SearchDomain::spheres(space.clone(), 2)
}

fn first_unit(space: &NormedSpace) -> Vector {
    let e = Vector::basis(space.dim(), 0);
    let n = space.norm_slice(e.coords());
    e.scaled(1.0 / n)
}

/// MR_p: maximize the sphere-λ form, cross-checked by a sampled search over
/// raw pairs; the larger of the two is reported. p = 1 is exactly 1.
pub fn estimate_mr(space: &NormedSpace, p: Exponent, config: &OptimizerConfig) -> Result<EstimateResult> {
    if !p.in_unit_interval() && !p.is_extended() {
        return Err(Error::ExponentOutOfRange { p: p.value() });
    }
    let pv = p.value();
    if pv == 1.0 {
        // α₁ = β₁ = ‖x − y‖ for every pair
        let e = first_unit(space);
        let witness = Witness::sphere_lambda(e.clone(), e.scaled(-1.0), 2.0);
        return Ok(EstimateResult {
            constant: ConstantKind::Mr,
            space: space.clone(),
            param: Some(1.0),
            value: 1.0,
            witness,
            config: config.clone(),
            converged: true,
            diagnostics: Diagnostics { note: Some("exact: alpha_1 = beta_1".into()), ..Default::default() },
        });
    }

    let domain = pair_domain(space)?.with_scalar(SCALAR_LO, SCALAR_HI)?.excluding(1.0);
    let objective =
        |pr: &Probe| angular::sphere_lambda_raw(space, pr.x, pr.y?, pr.scalar?, pv).ok();
    let outcome = maximize(objective, &domain, config)?;
    let primary_witness = Witness::sphere_lambda(
        outcome.argmax.vectors[0].clone(),
        outcome.argmax.vectors[1].clone(),
        outcome.argmax.scalar.expect("scalar domain"),
    );

    let (secondary_value, secondary_witness) = sample_raw_pairs(space, pv, config);
    let (value, witness) = match secondary_value {
        Some(s) if s > outcome.best_value => (s, secondary_witness.expect("paired with value")),
        _ => (outcome.best_value, primary_witness),
    };
    Ok(EstimateResult {
        constant: ConstantKind::Mr,
        space: space.clone(),
        param: Some(pv),
        value,
        witness,
        config: config.clone(),
        converged: outcome.converged,
        diagnostics: Diagnostics {
            iterations: outcome.iterations_used,
            abandoned_starts: outcome.abandoned_starts,
            grid_best: outcome.grid_best,
            secondary_value,
            ..Default::default()
        },
    })
}

/// Best α_p/β_p over seeded random raw pairs with log-uniform radii.
fn sample_raw_pairs(space: &NormedSpace, p: f64, config: &OptimizerConfig) -> (Option<f64>, Option<Witness>) {
    let count = config.starts * 64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xA11CE);
    let mut best: Option<(f64, Witness)> = None;
    for _ in 0..count {
        let ru = rng.random_range(-10.0..10.0f64).exp2();
        // half the pairs have nearly equal norms
        let rv = if rng.random_bool(0.5) { ru * rng.random_range(-0.05..0.05f64).exp2() } else { rng.random_range(-10.0..10.0f64).exp2() };
        let u = space.random_unit(&mut rng).scaled(ru);
        let v = space.random_unit(&mut rng).scaled(rv);
        let nu = space.norm_slice(u.coords());
        let nv = space.norm_slice(v.coords());
        if let Ok(r) = angular::ratio_raw(space, u.coords(), nu, v.coords(), nv, p) {
            if best.as_ref().map_or(true, |(b, _)| r > *b) {
                best = Some((r, Witness::raw_pair(u, v)));
            }
        }
    }
    match best {
        Some((v, w)) => (Some(v), Some(w)),
        None => (None, None),
    }
}

/// DR: sup α/β over raw pairs (λx₁, x₂), evaluated with the plain angular
/// and skew angular distances rather than the p-machinery.
pub fn estimate_dr(space: &NormedSpace, config: &OptimizerConfig) -> Result<EstimateResult> {
    let domain = pair_domain(space)?.with_scalar(SCALAR_LO, SCALAR_HI)?.excluding(1.0);
    let objective = |pr: &Probe| {
        let lambda = pr.scalar?;
        let u: Vec<f64> = pr.x.iter().map(|c| lambda * c).collect();
        let v = pr.y?;
        let nu = space.norm_slice(&u);
        let nv = space.norm_slice(v);
        let beta = space.norm_combination(-1.0 / nv, &u, 1.0 / nu, v);
        if !(beta > angular::DEGENERACY_REL) {
            return None;
        }
        Some(space.norm_combination(1.0 / nu, &u, -1.0 / nv, v) / beta)
    };
    let outcome = maximize(objective, &domain, config)?;
    let lambda = outcome.argmax.scalar.expect("scalar domain");
    let witness = Witness::raw_pair(outcome.argmax.vectors[0].scaled(lambda), outcome.argmax.vectors[1].clone());
    Ok(EstimateResult {
        constant: ConstantKind::Dr,
        space: space.clone(),
        param: None,
        value: outcome.best_value,
        witness,
        config: config.clone(),
        converged: outcome.converged,
        diagnostics: Diagnostics {
            iterations: outcome.iterations_used,
            abandoned_starts: outcome.abandoned_starts,
            grid_best: outcome.grid_best,
            ..Default::default()
        },
    })
}

/// DW: x unit, y = r·(unit) with r log-searched over [2^-10, 2^10].
pub fn estimate_dw(space: &NormedSpace, config: &OptimizerConfig) -> Result<EstimateResult> {
    let domain = pair_domain(space)?.with_scalar(SCALAR_LO, SCALAR_HI)?;
    let objective = |pr: &Probe| {
        let r = pr.scalar?;
        let y = pr.y?;
        // Actual norms, not 1: sphere points are unit only up to rounding and
        // the value must match re-evaluation at the witness.
        let (nx, ny) = (space.norm_slice(pr.x), space.norm_slice(y));
        let d = space.norm_combination(1.0, pr.x, -r, y);
        if !(d > angular::DEGENERACY_REL * r.max(1.0)) {
            return None;
        }
        Some((nx + r * ny) / d * space.norm_combination(1.0 / nx, pr.x, -1.0 / ny, y))
    };
    let outcome = maximize(objective, &domain, config)?;
    let r = outcome.argmax.scalar.expect("scalar domain");
    let witness = Witness::raw_pair(outcome.argmax.vectors[0].clone(), outcome.argmax.vectors[1].scaled(r));
    // Near the supremum ‖x − ry‖ is small and rounding r·y shifts the quotient
    // by more than 1e-9; report what the stored witness certifies.
    let value = evaluate_witness(ConstantKind::Dw, space, None, &witness).unwrap_or(outcome.best_value);
    Ok(EstimateResult {
        constant: ConstantKind::Dw,
        space: space.clone(),
        param: None,
        value,
        witness,
        config: config.clone(),
        converged: outcome.converged,
        diagnostics: Diagnostics {
            iterations: outcome.iterations_used,
            abandoned_starts: outcome.abandoned_starts,
            grid_best: outcome.grid_best,
            ..Default::default()
        },
    })
}

/// Modulus of convexity δ(ε), ε in [0, 2].
pub fn modulus_convexity(space: &NormedSpace, eps: f64, config: &OptimizerConfig) -> Result<EstimateResult> {
    if !(0.0..=2.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in [0, 2], got {eps}")));
    }
    if eps == 0.0 {
        let e = first_unit(space);
        return Ok(EstimateResult {
            constant: ConstantKind::Delta,
            space: space.clone(),
            param: Some(0.0),
            value: 0.0,
            witness: Witness::pair(e.clone(), e, Some(0.0)),
            config: config.clone(),
            converged: true,
            diagnostics: Diagnostics { note: Some("exact: x = y is feasible".into()), ..Default::default() },
        });
    }
    let domain = pair_domain(space)?.in_ball();
    let objective = |pr: &Probe| Some(1.0 - 0.5 * space.norm_combination(1.0, pr.x, 1.0, pr.y?));
    let margin = |pr: &Probe| Some(space.norm_combination(1.0, pr.x, -1.0, pr.y?) - eps);
    let out = minimize_constrained(objective, margin, &domain, config)?;
    let witness = Witness::pair(out.argmin.vectors[0].clone(), out.argmin.vectors[1].clone(), Some(eps));
    let feasible = out.feasibility == Feasibility::Feasible;
    Ok(EstimateResult {
        constant: ConstantKind::Delta,
        space: space.clone(),
        param: Some(eps),
        value: out.value,
        witness,
        config: config.clone(),
        converged: feasible && out.search.converged,
        diagnostics: Diagnostics {
            iterations: out.search.iterations_used,
            abandoned_starts: out.search.abandoned_starts,
            note: (!feasible).then(|| format!("infeasible at tolerance: violation {:e}", out.violation)),
            ..Default::default()
        },
    })
}

/// ε₀ by bisection on the predicate δ(ε) < 1e-6. The value is ‖x − y‖ of the
/// farthest-apart zero-δ witness found, so it is reproduced by the witness.
pub fn eps0(space: &NormedSpace, config: &OptimizerConfig) -> Result<EstimateResult> {
    let mut best = modulus_convexity(space, 0.0, config)?;
    let mut best_distance = 0.0;
    let mut iterations = 0;
    let consider = |est: EstimateResult, best: &mut EstimateResult, best_distance: &mut f64| -> Result<bool> {
        let zero = est.value < DELTA_ZERO;
        if zero {
            let (x, y) = est.witness.two()?;
            let d = space.norm(&x.combine(1.0, y, -1.0))?;
            if d > *best_distance {
                *best_distance = d;
                *best = est;
            }
        }
        Ok(zero)
    };

    let at_two = modulus_convexity(space, 2.0, config)?;
    iterations += at_two.diagnostics.iterations;
    let mut converged = true;
    if !consider(at_two, &mut best, &mut best_distance)? {
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..EPS0_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let est = modulus_convexity(space, mid, config)?;
            iterations += est.diagnostics.iterations;
            converged &= est.diagnostics.note.is_none() || est.value >= DELTA_ZERO;
            if consider(est, &mut best, &mut best_distance)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let (x, y) = best.witness.two()?;
    let witness = Witness::pair(x.clone(), y.clone(), best.param);
    Ok(EstimateResult {
        constant: ConstantKind::Eps0,
        space: space.clone(),
        param: None,
        value: best_distance,
        witness,
        config: config.clone(),
        converged,
        diagnostics: Diagnostics {
            iterations,
            note: Some(format!("last zero-delta witness at epsilon = {}", best.param.unwrap_or(0.0))),
            ..Default::default()
        },
    })
}

/// Modulus of smoothness ρ(τ), τ > 0.
pub fn modulus_smoothness(space: &NormedSpace, tau: f64, config: &OptimizerConfig) -> Result<EstimateResult> {
    smoothness_from(space, tau, config, None)
}

/// ρ(τ), additionally refining from `warm` (typically the witness at a
/// larger τ). Needed when the maximizer sits on a thin ridge that shrinks
/// with τ, as at the corners of a polyhedral ball.
fn smoothness_from(space: &NormedSpace, tau: f64, config: &OptimizerConfig, warm: Option<&Witness>) -> Result<EstimateResult> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let domain = pair_domain(space)?;
    let objective = |pr: &Probe| {
        let y = pr.y?;
        Some(0.5 * (space.norm_combination(1.0, pr.x, tau, y) + space.norm_combination(1.0, pr.x, -tau, y)) - 1.0)
    };
    let mut outcome = maximize(objective, &domain, config)?;
    if let Some(w) = warm {
        let seed = DomainPoint { vectors: w.vectors.clone(), scalar: None };
        let refined = refine_from(objective, &domain, config, &[seed])?;
        if refined.best_value > outcome.best_value {
            outcome.iterations_used += refined.iterations_used;
            outcome.best_value = refined.best_value;
            outcome.argmax = refined.argmax;
            outcome.converged = refined.converged;
        }
    }
    Ok(EstimateResult {
        constant: ConstantKind::Rho,
        space: space.clone(),
        param: Some(tau),
        value: outcome.best_value,
        witness: Witness::pair(outcome.argmax.vectors[0].clone(), outcome.argmax.vectors[1].clone(), Some(tau)),
        config: config.clone(),
        converged: outcome.converged,
        diagnostics: Diagnostics {
            iterations: outcome.iterations_used,
            abandoned_starts: outcome.abandoned_starts,
            grid_best: outcome.grid_best,
            ..Default::default()
        },
    })
}

/// τ grid for the ρ'(0) extrapolation: 2^-2, ..., 2^-9.
pub fn rho_prime_taus() -> Vec<f64> {
    (2..=9).map(|k| (-(k as f64)).exp2()).collect()
}

/// Richardson extrapolation of samples g(τ) taken at halving τ, assuming an
/// expansion in integer powers of τ. Returns the diagonal of the tableau.
pub fn richardson_diagonal(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut table = vec![vec![0.0; n]; n];
    for i in 0..n {
        table[i][0] = samples[i];
        for j in 1..=i {
            let factor = (j as f64).exp2() - 1.0;
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / factor;
        }
    }
    (0..n).map(|i| table[i][i]).collect()
}

/// ρ'(0) by Richardson extrapolation of ρ(τ)/τ, with ε₀(X*)/2 attached as an
/// independent cross-check (not averaged in).
pub fn rho_prime_zero(space: &NormedSpace, config: &OptimizerConfig) -> Result<EstimateResult> {
    let taus = rho_prime_taus();
    let mut quotients = Vec::with_capacity(taus.len());
    let mut iterations = 0;
    let mut last = None;
    for &tau in &taus {
        let est = smoothness_from(space, tau, config, last.as_ref().map(|e: &EstimateResult| &e.witness))?;
        iterations += est.diagnostics.iterations;
        quotients.push((tau, est.value / tau));
        last = Some(est);
    }
    let last = last.expect("non-empty tau grid");
    let diagonal = richardson_diagonal(&quotients.iter().map(|q| q.1).collect::<Vec<_>>());
    let value = *diagonal.last().expect("non-empty");
    let previous = diagonal[diagonal.len() - 2];
    let stable = (value - previous).abs() < NONSQUARE_MARGIN && (-0.05..=1.05).contains(&value);

    let (cross_check, note) = match space.dual() {
        Ok(dual) => (Some(eps0(&dual, config)?.value / 2.0), None),
        Err(e) => (None, Some(format!("no dual cross-check: {e}"))),
    };
    let (x, y) = last.witness.two()?;
    Ok(EstimateResult {
        constant: ConstantKind::RhoPrime,
        space: space.clone(),
        param: None,
        value,
        witness: Witness::pair(x.clone(), y.clone(), last.param),
        config: config.clone(),
        converged: stable && last.converged,
        diagnostics: Diagnostics { iterations, cross_check, quotients, note, ..Default::default() },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonSquareness {
    pub uniformly_nonsquare: bool,
    /// 2 − ε₀
    pub margin: f64,
    pub eps0: EstimateResult,
}

/// Uniform non-squareness, decided as ε₀ < 2 − 0.05.
pub fn is_uniformly_nonsquare(space: &NormedSpace, config: &OptimizerConfig) -> Result<NonSquareness> {
    let e = eps0(space, config)?;
    Ok(NonSquareness { uniformly_nonsquare: e.value < 2.0 - NONSQUARE_MARGIN, margin: 2.0 - e.value, eps0: e })
}

/// Dispatch by constant name; `param` is p, ε, or τ as the constant needs.
pub fn estimate(
    kind: ConstantKind,
    space: &NormedSpace,
    param: Option<f64>,
    extended_p: bool,
    config: &OptimizerConfig,
) -> Result<EstimateResult> {
    match kind {
        ConstantKind::Mr => {
            let p = require_param(param, "mr")?;
            let p = if extended_p { Exponent::extended(p)? } else { Exponent::new(p)? };
            estimate_mr(space, p, config)
        }
        ConstantKind::Dr => estimate_dr(space, config),
        ConstantKind::Dw => estimate_dw(space, config),
        ConstantKind::Delta => modulus_convexity(space, require_param(param, "delta")?, config),
        ConstantKind::Eps0 => eps0(space, config),
        ConstantKind::Rho => modulus_smoothness(space, require_param(param, "rho")?, config),
        ConstantKind::RhoPrime => rho_prime_zero(space, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::default()
    }

    #[test]
    fn richardson_recovers_polynomial_limit() {
        let taus = rho_prime_taus();
        let g: Vec<f64> = taus.iter().map(|t| 0.3 + 2.0 * t - 5.0 * t * t + t.powi(3)).collect();
        assert_abs_diff_eq!(*richardson_diagonal(&g).last().unwrap(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn mr_p_one_is_exact() {
        let space = NormedSpace::lp(1.0, 2).unwrap();
        let est = estimate_mr(&space, Exponent::new(1.0).unwrap(), &cfg()).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.reevaluate().unwrap(), 1.0);
    }

    #[test]
    fn mr_l2_is_one() {
        let space = NormedSpace::lp(2.0, 2).unwrap();
        let est = estimate_mr(&space, Exponent::new(0.5).unwrap(), &cfg()).unwrap();
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(est.reevaluate().unwrap(), est.value, epsilon = 1e-9);
    }

    #[test]
    fn mr_l1_p0_reaches_two() {
        let space = NormedSpace::lp(1.0, 2).unwrap();
        let est = estimate_mr(&space, Exponent::new(0.0).unwrap(), &cfg()).unwrap();
        assert!(est.value >= 1.99 && est.value <= 2.0 + 1e-6, "{}", est.value);
        assert_abs_diff_eq!(est.reevaluate().unwrap(), est.value, epsilon = 1e-9);
    }

    #[test]
    fn delta_examples() {
        let l2 = NormedSpace::lp(2.0, 2).unwrap();
        let est = modulus_convexity(&l2, 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(est.value, 1.0 - 0.75f64.sqrt(), epsilon = 1e-4);
        assert_eq!(modulus_convexity(&l2, 0.0, &cfg()).unwrap().value, 0.0);
        let l1 = NormedSpace::lp(1.0, 2).unwrap();
        assert_abs_diff_eq!(modulus_convexity(&l1, 1.9, &cfg()).unwrap().value, 0.0, epsilon = 1e-4);
        assert!(modulus_convexity(&l1, 2.5, &cfg()).is_err());
    }

    #[test]
    fn rho_examples() {
        let l2 = NormedSpace::lp(2.0, 2).unwrap();
        let est = modulus_smoothness(&l2, 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(est.value, 2f64.sqrt() - 1.0, epsilon = 1e-4);
        let l1 = NormedSpace::lp(1.0, 2).unwrap();
        let est = modulus_smoothness(&l1, 0.5, &cfg()).unwrap();
        assert_abs_diff_eq!(est.value, 0.5, epsilon = 1e-4);
        assert!(modulus_smoothness(&l1, 0.0, &cfg()).is_err());
    }

    #[test]
    fn constant_names_round_trip() {
        for k in ConstantKind::ALL {
            assert_eq!(ConstantKind::parse(k.name()), Some(k));
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }
}
