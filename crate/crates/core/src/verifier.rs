//! Checks of the inequalities relating MR_p to the other constants.
//!
//! Verdict rules: `violated` needs a pointwise breach backed by a witness
//! that re-confirms it; comparisons between two search estimates (each only
//! a lower or upper bound of the true constant) are at worst `inconclusive`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::angular::{self, upper_cap, Exponent, LemmaCase};
use crate::constants::{self, EstimateResult, Witness};
use crate::error::{Error, Result};
use crate::norm_spaces::NormedSpace;
use crate::optimizer::OptimizerConfig;
use crate::report::{Check, Finding, InequalityReport, Verdict, TENSION_KIND};

/// Slack on the lower bounds, absorbing estimator bias.
pub const LOWER_BOUND_SLACK: f64 = 0.05;
/// Slack on estimates compared to the analytic [1, 2] range and the cap.
pub const RANGE_SLACK: f64 = 1e-6;
/// MR within this of 1 counts as equal to 1.
pub const UNIT_TOL: f64 = 1e-3;
/// |MR_0 − DR| within this counts as equal.
pub const IDENTITY_TOL: f64 = 1e-6;
/// Relative rounding allowance before a pointwise comparison counts as breached.
pub const POINTWISE_REL: f64 = 1e-9;
pub const DEFAULT_P_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub lemma_samples: usize,
    pub factor_samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { lemma_samples: 10_000, factor_samples: 10_000 }
    }
}

/// Radius quotient ‖y‖/‖x‖ for the i-th sample: cycles through 2^(k/2),
/// k = −12..=12, so the equal-norm case is always hit.
fn radius_ratio(i: usize) -> f64 {
    let k = (i % 25) as f64 - 12.0;
    (k / 2.0).exp2()
}

/// Sample nonzero pairs and test the case-appropriate comparison of α_p
/// with β_p. p in [0, 1] needs no flag; p in (1, 2) or p < 0 must come in
/// as an extended exponent.
pub fn check_lemma_pointwise(space: &NormedSpace, p: Exponent, sample_count: usize, seed: u64) -> InequalityReport {
    let pv = p.value();
    let mut report = InequalityReport::new(space.to_string(), vec![pv]);
    let case = match LemmaCase::for_exponent(pv) {
        Ok(case) => case,
        Err(e) => {
            report.push(
                Check::new("lemma-pointwise", "no case applies", 0.0, 0.0, 0.0, Verdict::Inconclusive)
                    .at_p(pv)
                    .with_note(e.to_string()),
            );
            return report;
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut evaluated = 0usize;
    // worst relative excess (α − bound)/bound
    let mut worst: Option<(f64, f64, f64, Witness)> = None;
    for i in 0..sample_count.max(1) {
        let scale = rng.random_range(-3.0..3.0f64).exp2();
        let x = space.random_unit(&mut rng).scaled(scale);
        let y = space.random_unit(&mut rng).scaled(scale * radius_ratio(i));
        let nx = space.norm_slice(x.coords());
        let ny = space.norm_slice(y.coords());
        let alpha = angular::alpha_raw(space, x.coords(), nx, y.coords(), ny, pv);
        let beta = angular::beta_raw(space, x.coords(), nx, y.coords(), ny, pv);
        let bound = case.bound(pv, nx, ny, beta);
        if !(alpha.is_finite() && bound.is_finite()) || bound <= 0.0 {
            continue;
        }
        evaluated += 1;
        let excess = (alpha - bound) / bound;
        if excess > POINTWISE_REL {
            violations += 1;
        }
        if worst.as_ref().map_or(true, |w| excess > w.0) {
            worst = Some((excess, alpha, bound, Witness::raw_pair(x, y)));
        }
    }
    let statement = case.statement();
    let check = match worst {
        None => Check::new("lemma-pointwise", statement, 0.0, 0.0, 0.0, Verdict::Inconclusive)
            .with_note("no evaluable pairs"),
        Some((_, alpha, bound, witness)) => {
            let verdict = if violations > 0 { Verdict::Violated } else { Verdict::Holds };
            let check = Check::new("lemma-pointwise", statement, alpha, bound, bound - alpha, verdict)
                .with_note(format!("{violations} violations in {evaluated} pairs; worst pair shown"));
            check.with_witness(witness)
        }
    };
    report.push(check.at_p(pv));
    report
}

/// Check max(‖x‖^{p−1}‖y‖^{1−p}, ‖y‖^{p−1}‖x‖^{1−p}) ≥ 1, cycling through the
/// cases ‖x‖ = ‖y‖, ‖x‖ > ‖y‖ and ‖x‖ < ‖y‖. Equal norms must give exactly 1.
pub fn check_max_factor(space: &NormedSpace, p: f64, sample_count: usize, seed: u64) -> Result<InequalityReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ExponentOutOfRange { p });
    }
    let mut report = InequalityReport::new(space.to_string(), vec![p]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_factor = f64::INFINITY;
    let mut min_witness = None;
    let mut below_one = 0usize;
    let mut equal_not_one = 0usize;
    let mut cases = [0usize; 3];
    for i in 0..sample_count.max(3) {
        let x = space.random_unit(&mut rng).scaled(rng.random_range(-6.0..6.0f64).exp2());
        let nx = space.norm_slice(x.coords());
        let ny_target = match i % 3 {
            0 => nx,
            1 => nx * rng.random_range(-6.0..-0.01f64).exp2(),
            _ => nx * rng.random_range(0.01..6.0f64).exp2(),
        };
        let u = space.random_unit(&mut rng);
        let y = if i % 3 == 0 { u.scaled(nx) } else { u.scaled(ny_target) };
        let ny = if i % 3 == 0 { nx } else { space.norm_slice(y.coords()) };
        cases[i % 3] += 1;
        let factor = angular::max_factor(nx, ny, p);
        if i % 3 == 0 && factor != 1.0 {
            equal_not_one += 1;
        }
        if factor < 1.0 {
            below_one += 1;
        }
        if factor < min_factor {
            min_factor = factor;
            min_witness = Some(Witness::raw_pair(x, y));
        }
    }
    let verdict = if below_one > 0 || equal_not_one > 0 { Verdict::Violated } else { Verdict::Holds };
    let mut check = Check::new("max-factor", "max(|x|^(p-1)|y|^(1-p), |y|^(p-1)|x|^(1-p)) >= 1", min_factor, 1.0, min_factor - 1.0, verdict)
        .at_p(p)
        .with_note(format!(
            "cases equal/greater/less: {}/{}/{}; below one: {below_one}; equal norms not exactly one: {equal_not_one}",
            cases[0], cases[1], cases[2]
        ));
    if let Some(w) = min_witness {
        check = check.with_witness(w);
    }
    report.push(check);
    Ok(report)
}

/// Space-level quantities shared by every p.
struct SpaceConstants {
    eps0: EstimateResult,
    rho_prime: EstimateResult,
    dr: EstimateResult,
}

fn mr_checks(
    report: &mut InequalityReport,
    space: &NormedSpace,
    p: f64,
    mr: &EstimateResult,
    shared: &SpaceConstants,
    options: &VerifyOptions,
    config: &OptimizerConfig,
) -> Result<()> {
    let value = mr.value;
    let witness = mr.witness.clone();

    let range_verdict = if value > 2.0 + RANGE_SLACK {
        Verdict::Violated
    } else if value < 1.0 - RANGE_SLACK {
        Verdict::Inconclusive
    } else {
        Verdict::Holds
    };
    let mut range = Check::new("mr-range", "1 <= MR_p <= 2", value, 2.0, (2.0 - value).min(value - 1.0), range_verdict).at_p(p);
    if range_verdict == Verdict::Violated {
        range = range.with_witness(witness.clone());
    }
    report.push(range);

    let cap = upper_cap(p);
    let lemma = check_lemma_pointwise(space, Exponent::new(p)?, options.lemma_samples, config.seed);
    let lemma_violated = lemma.violations().next().cloned();
    report.extend(lemma);
    let cap_check = if value > cap + RANGE_SLACK {
        Check::new("mr-upper-cap", "MR_p <= (4-3p)/(2-p)", value, cap, cap - value, Verdict::Violated)
            .with_witness(witness.clone())
            .with_note("the reported witness exceeds the cap")
    } else if let Some(breach) = lemma_violated {
        let mut c = Check::new("mr-upper-cap", "MR_p <= (4-3p)/(2-p)", value, cap, cap - value, Verdict::Violated)
            .with_note("a sampled pair breaks the pointwise comparison the cap rests on");
        c.witness = breach.witness;
        c
    } else {
        Check::new("mr-upper-cap", "MR_p <= (4-3p)/(2-p)", value, cap, cap - value, Verdict::Holds)
    };
    report.push(cap_check.at_p(p));

    let factor = check_max_factor(space, p, options.factor_samples, config.seed)?;
    report.extend(factor);

    let eps0 = shared.eps0.value;
    let demand = eps0.max(1.0);
    report.push(lower_bound_check("mr-lower-eps0", "MR_p >= max(eps0, 1)", value, demand, p));
    let rho_demand = (2.0 * shared.rho_prime.value).max(1.0);
    report.push(lower_bound_check("mr-lower-rho-prime", "MR_p >= max(2 rho'(0), 1)", value, rho_demand, p));

    if cap < demand - LOWER_BOUND_SLACK {
        report.add_finding(tension(p, cap, demand, "eps0", value, &witness));
    }
    if cap < rho_demand - LOWER_BOUND_SLACK {
        report.add_finding(tension(p, cap, rho_demand, "2 rho'(0)", value, &witness));
    }

    if p == 0.0 {
        let dr = shared.dr.value;
        let diff = (value - dr).abs();
        let verdict = if diff < IDENTITY_TOL { Verdict::Holds } else { Verdict::Inconclusive };
        report.push(Check::new("mr-equals-dr", "MR_0 = DR", value, dr, IDENTITY_TOL - diff, verdict).at_p(p));

        let nonsquare = eps0 < 2.0 - LOWER_BOUND_SLACK;
        let below_two = value < 2.0 - LOWER_BOUND_SLACK;
        let verdict = if nonsquare == below_two { Verdict::Holds } else { Verdict::Inconclusive };
        report.push(
            Check::new("nonsquare-iff-mr-below-two", "uniformly non-square iff MR_0 < 2", value, 2.0, 2.0 - value, verdict)
                .at_p(p)
                .with_note(format!("eps0 = {eps0}")),
        );
    }

    if p < 1.0 {
        let inner = space.is_inner_product();
        let is_one = (value - 1.0).abs() <= UNIT_TOL;
        let (verdict, note) = match (inner, is_one) {
            (true, true) | (false, false) => (Verdict::Holds, None),
            // a witness above 1 in an inner product space is a certified breach
            (true, false) if value > 1.0 + UNIT_TOL => (Verdict::Violated, Some("witness exceeds 1 in an inner product space")),
            (true, false) => (Verdict::Inconclusive, Some("estimate below 1")),
            (false, true) => (Verdict::Inconclusive, Some("no witness above 1 found outside an inner product space")),
        };
        let mut c = Check::new("inner-product-iff-mr-one", "inner product space iff MR_p = 1", value, 1.0, UNIT_TOL - (value - 1.0).abs(), verdict)
            .at_p(p);
        if verdict == Verdict::Violated {
            c = c.with_witness(witness.clone());
        }
        if let Some(n) = note {
            c = c.with_note(n);
        }
        report.push(c);
    }
    Ok(())
}

fn lower_bound_check(id: &str, statement: &str, value: f64, demand: f64, p: f64) -> Check {
    let rhs = demand - LOWER_BOUND_SLACK;
    let verdict = if value >= rhs { Verdict::Holds } else { Verdict::Inconclusive };
    Check::new(id, statement, value, rhs, value - rhs, verdict).at_p(p)
}

fn tension(p: f64, cap: f64, demand: f64, source: &str, estimate: f64, witness: &Witness) -> Finding {
    Finding {
        kind: TENSION_KIND.to_string(),
        p,
        upper_cap: cap,
        lower_demand: demand,
        description: format!(
            "the pointwise bound caps MR_p at (4-3p)/(2-p) = {cap:.6}, while the lower bound demands MR_p >= {demand:.6} from {source}; both cannot hold"
        ),
        best_estimate: Some(estimate),
        witness: Some(witness.clone()),
    }
}

/// Run every check for each p in `p_grid` (a subset of [0, 1]).
pub fn verify_space(space: &NormedSpace, p_grid: &[f64], config: &OptimizerConfig) -> Result<InequalityReport> {
    verify_space_with(space, p_grid, config, &VerifyOptions::default())
}

pub fn verify_space_with(
    space: &NormedSpace,
    p_grid: &[f64],
    config: &OptimizerConfig,
    options: &VerifyOptions,
) -> Result<InequalityReport> {
    if p_grid.is_empty() {
        return Err(Error::InvalidParameter("empty p grid".into()));
    }
    for &p in p_grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ExponentOutOfRange { p });
        }
    }
    config.validate()?;
    let shared = SpaceConstants {
        eps0: constants::eps0(space, config)?,
        rho_prime: constants::rho_prime_zero(space, config)?,
        dr: constants::estimate_dr(space, config)?,
    };
    let mut report = InequalityReport::new(space.to_string(), p_grid.to_vec());
    for &p in p_grid {
        let mr = constants::estimate_mr(space, Exponent::new(p)?, config)?;
        mr_checks(&mut report, space, p, &mr, &shared, options, config)?;
    }
    report.checks.sort_by(|a, b| {
        a.claim_id.cmp(&b.claim_id).then(a.p.unwrap_or(f64::NAN).total_cmp(&b.p.unwrap_or(f64::NAN)))
    });
    report.summarize();
    Ok(report)
}

/// Shape checks on the moduli: δ non-decreasing on ε = 0, 0.2, ..., 2 and
/// ρ midpoint-convex on τ = 0.25, 0.5, ..., 2. Both compare estimates, so a
/// failure is inconclusive.
pub fn check_moduli_shape(space: &NormedSpace, config: &OptimizerConfig) -> Result<InequalityReport> {
    let mut report = InequalityReport::new(space.to_string(), Vec::new());
    let eps: Vec<f64> = (0..=10).map(|i| i as f64 * 0.2).collect();
    let deltas = eps
        .iter()
        .map(|&e| constants::modulus_convexity(space, e, config).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let worst_drop = deltas.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    let verdict = if worst_drop > 1e-6 { Verdict::Inconclusive } else { Verdict::Holds };
    report.push(Check::new("delta-monotone", "delta is non-decreasing in epsilon", worst_drop, 1e-6, 1e-6 - worst_drop, verdict));

    let taus: Vec<f64> = (1..=8).map(|i| i as f64 * 0.25).collect();
    let rhos = taus
        .iter()
        .map(|&t| constants::modulus_smoothness(space, t, config).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let worst_excess = rhos.windows(3).map(|w| w[1] - 0.5 * (w[0] + w[2])).fold(f64::NEG_INFINITY, f64::max);
    let verdict = if worst_excess > 1e-8 { Verdict::Inconclusive } else { Verdict::Holds };
    report.push(Check::new("rho-convex", "rho is convex in tau", worst_excess, 1e-8, 1e-8 - worst_excess, verdict));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_holds_on_l2_and_l1() {
        for space in [NormedSpace::lp(2.0, 2).unwrap(), NormedSpace::lp(1.0, 2).unwrap()] {
            let r = check_lemma_pointwise(&space, Exponent::new(0.5).unwrap(), 10_000, 3);
            assert_eq!(r.summary, Verdict::Holds, "{space}: {:?}", r.checks);
        }
    }

    #[test]
    fn lemma_at_p_one_is_equality() {
        let space = NormedSpace::lp(3.0, 3).unwrap();
        let r = check_lemma_pointwise(&space, Exponent::new(1.0).unwrap(), 2_000, 1);
        let c = &r.checks[0];
        assert_eq!(c.verdict, Verdict::Holds);
        assert!(c.margin.abs() < 1e-9 * c.rhs.max(1.0));
    }

    #[test]
    fn lemma_reports_missing_case() {
        let space = NormedSpace::lp(2.0, 2).unwrap();
        let r = check_lemma_pointwise(&space, Exponent::extended(2.5).unwrap(), 10, 1);
        assert_eq!(r.summary, Verdict::Inconclusive);
    }

    #[test]
    fn max_factor_cases() {
        assert_eq!(angular::max_factor(1.5, 1.5, 0.3), 1.0);
        assert_eq!(angular::max_factor(2.0, 1.0, 0.0), 2.0);
        let space = NormedSpace::lp(3.0, 3).unwrap();
        let r = check_max_factor(&space, 0.7, 10_000, 9).unwrap();
        assert_eq!(r.summary, Verdict::Holds);
        assert!(check_max_factor(&space, 1.5, 10, 9).is_err());
    }

    #[test]
    fn rejects_bad_grid() {
        let space = NormedSpace::lp(2.0, 2).unwrap();
        assert!(verify_space(&space, &[1.5], &OptimizerConfig::default()).is_err());
        assert!(verify_space(&space, &[], &OptimizerConfig::default()).is_err());
    }
}
