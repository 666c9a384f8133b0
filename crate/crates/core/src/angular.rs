//! p-angular and skew p-angular distances and their ratio.
//!
//! For nonzero x, y and real p:
//!
//! ```text
//! α_p[x, y] = ‖ x‖x‖^{p-1} − y‖y‖^{p-1} ‖
//! β_p[x, y] = ‖ x‖y‖^{p-1} − y‖x‖^{p-1} ‖
//! ```
//!
//! At p = 0 these are the angular and skew angular distances; at p = 1 both
//! collapse to ‖x − y‖.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm_spaces::{NormedSpace, Vector};

/// Relative band below which β_p counts as zero.
pub const DEGENERACY_REL: f64 = 1e-10;
/// Tolerance on ‖x‖ = 1 for sphere arguments.
pub const SPHERE_TOL: f64 = 1e-9;

/// The exponent p. Outside [0, 1] only when built with [`Exponent::extended`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    p: f64,
    extended: bool,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ExponentOutOfRange { p });
        }
        Ok(Self { p, extended: false })
    }

    /// Any finite p. Constants built on MR_p still refuse p outside [0, 1]
    /// unless this flag is set.
    pub fn extended(p: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent must be finite, got {p}")));
        }
        Ok(Self { p, extended: true })
    }

    pub fn value(self) -> f64 {
        self.p
    }

    pub fn is_extended(self) -> bool {
        self.extended
    }

    pub fn in_unit_interval(self) -> bool {
        (0.0..=1.0).contains(&self.p)
    }
}

/// n^e with 0^0 and n^0 both taken as 1.
#[inline]
pub(crate) fn pow(n: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        n.powf(e)
    }
}

fn nonzero_norm(space: &NormedSpace, x: &Vector) -> Result<f64> {
    let n = space.norm(x)?;
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(n)
}

#[inline]
pub(crate) fn alpha_raw(space: &NormedSpace, x: &[f64], nx: f64, y: &[f64], ny: f64, p: f64) -> f64 {
    space.norm_combination(pow(nx, p - 1.0), x, -pow(ny, p - 1.0), y)
}

#[inline]
pub(crate) fn beta_raw(space: &NormedSpace, x: &[f64], nx: f64, y: &[f64], ny: f64, p: f64) -> f64 {
    space.norm_combination(pow(ny, p - 1.0), x, -pow(nx, p - 1.0), y)
}

/// β_p values at or below this are treated as zero.
pub fn degeneracy_threshold(nx: f64, ny: f64, p: f64) -> f64 {
    DEGENERACY_REL * pow(nx.max(ny), p)
}

pub fn p_angular(space: &NormedSpace, x: &Vector, y: &Vector, p: Exponent) -> Result<f64> {
    let nx = nonzero_norm(space, x)?;
    let ny = nonzero_norm(space, y)?;
    Ok(alpha_raw(space, x.coords(), nx, y.coords(), ny, p.value()))
}

pub fn skew_p_angular(space: &NormedSpace, x: &Vector, y: &Vector, p: Exponent) -> Result<f64> {
    let nx = nonzero_norm(space, x)?;
    let ny = nonzero_norm(space, y)?;
    Ok(beta_raw(space, x.coords(), nx, y.coords(), ny, p.value()))
}

/// α_p / β_p, refusing pairs whose β_p falls inside the degeneracy band.
pub fn ratio(space: &NormedSpace, x: &Vector, y: &Vector, p: Exponent) -> Result<f64> {
    let nx = nonzero_norm(space, x)?;
    let ny = nonzero_norm(space, y)?;
    ratio_raw(space, x.coords(), nx, y.coords(), ny, p.value())
}

pub(crate) fn ratio_raw(space: &NormedSpace, x: &[f64], nx: f64, y: &[f64], ny: f64, p: f64) -> Result<f64> {
    let beta = beta_raw(space, x, nx, y, ny, p);
    let threshold = degeneracy_threshold(nx, ny, p);
    if !(beta > threshold) {
        return Err(Error::DegenerateDenominator { value: beta, threshold });
    }
    Ok(alpha_raw(space, x, nx, y, ny, p) / beta)
}

/// ‖λx₁ − λ^{1−p}x₂‖ / ‖λ^{2−p}x₁ − x₂‖ for unit x₁, x₂ and λ > 0.
///
/// Equals `ratio(λ·x₁, x₂, p)` (or any positive multiple of that pair),
/// since λ plays the role of the norm quotient ‖u‖/‖v‖.
pub fn sphere_lambda_ratio(space: &NormedSpace, x1: &Vector, x2: &Vector, lambda: f64, p: Exponent) -> Result<f64> {
    for x in [x1, x2] {
        let n = space.norm(x)?;
        if (n - 1.0).abs() > SPHERE_TOL {
            return Err(Error::OffSphere { norm: n });
        }
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    sphere_lambda_raw(space, x1.coords(), x2.coords(), lambda, p.value())
}

pub(crate) fn sphere_lambda_raw(space: &NormedSpace, x1: &[f64], x2: &[f64], lambda: f64, p: f64) -> Result<f64> {
    let lead = pow(lambda, 2.0 - p);
    let den = space.norm_combination(lead, x1, -1.0, x2);
    let threshold = DEGENERACY_REL * lead.max(1.0);
    if !(den > threshold) {
        return Err(Error::DegenerateDenominator { value: den, threshold });
    }
    let num = space.norm_combination(lambda, x1, -pow(lambda, 1.0 - p), x2);
    Ok(num / den)
}

/// Angular distance ‖x/‖x‖ − y/‖y‖‖, written out without the p machinery.
pub fn angular_distance(space: &NormedSpace, x: &Vector, y: &Vector) -> Result<f64> {
    let nx = nonzero_norm(space, x)?;
    let ny = nonzero_norm(space, y)?;
    Ok(space.norm_combination(1.0 / nx, x.coords(), -1.0 / ny, y.coords()))
}

/// Skew angular distance ‖y/‖x‖ − x/‖y‖‖.
pub fn skew_angular_distance(space: &NormedSpace, x: &Vector, y: &Vector) -> Result<f64> {
    let nx = nonzero_norm(space, x)?;
    let ny = nonzero_norm(space, y)?;
    Ok(space.norm_combination(-1.0 / ny, x.coords(), 1.0 / nx, y.coords()))
}

/// max(‖x‖^{p−1}‖y‖^{1−p}, ‖y‖^{p−1}‖x‖^{1−p}); at least 1 whenever p <= 1.
pub fn max_factor(nx: f64, ny: f64, p: f64) -> f64 {
    let e = 1.0 - p;
    (pow(ny / nx, e)).max(pow(nx / ny, e))
}

/// Which branch of the α_p/β_p comparison applies, chosen by the sign and
/// size of p/(2 − p).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaCase {
    /// p/(2−p) >= 1, i.e. 1 < p < 2
    AboveOne,
    /// 0 <= p/(2−p) <= 1, i.e. 0 <= p <= 1
    UnitInterval,
    /// p/(2−p) <= 0, i.e. p < 0
    Negative,
}

impl LemmaCase {
    pub fn for_exponent(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(LemmaCase::UnitInterval)
        } else if p > 1.0 && p < 2.0 {
            Ok(LemmaCase::AboveOne)
        } else if p < 0.0 {
            Ok(LemmaCase::Negative)
        } else {
            Err(Error::InvalidParameter(format!("no comparison of alpha_p and beta_p for p = {p}")))
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            LemmaCase::AboveOne => "alpha_p <= p/(2-p) * A * beta_p",
            LemmaCase::UnitInterval => "alpha_p <= (4-3p)/(2-p) * beta_p / A",
            LemmaCase::Negative => {
                "alpha_p <= (4-3p)/(2-p) * max(|x|^p,|y|^p) / max(|x||y|^(p-1),|y||x|^(p-1)) * beta_p"
            }
        }
    }

    /// Right-hand side of the case inequality for a pair with norms nx, ny and skew distance beta.
    pub fn bound(self, p: f64, nx: f64, ny: f64, beta: f64) -> f64 {
        let a = max_factor(nx, ny, p);
        match self {
            LemmaCase::AboveOne => p / (2.0 - p) * a * beta,
            LemmaCase::UnitInterval => (4.0 - 3.0 * p) / (2.0 - p) * beta / a,
            LemmaCase::Negative => {
                let num = pow(nx, p).max(pow(ny, p));
                let den = (nx * pow(ny, p - 1.0)).max(ny * pow(nx, p - 1.0));
                (4.0 - 3.0 * p) / (2.0 - p) * num / den * beta
            }
        }
    }
}

/// (4 − 3p)/(2 − p): the universal upper cap on α_p/β_p for p in [0, 1].
pub fn upper_cap(p: f64) -> f64 {
    (4.0 - 3.0 * p) / (2.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn p(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    #[test]
    fn p_angular_examples() {
        let l2 = NormedSpace::lp(2.0, 2).unwrap();
        let a = p_angular(&l2, &v(&[2.0, 0.0]), &v(&[0.0, 3.0]), p(1.0)).unwrap();
        assert_relative_eq!(a, 13f64.sqrt(), max_relative = 1e-15);
        let a = p_angular(&l2, &v(&[2.0, 0.0]), &v(&[-2.0, 0.0]), p(0.5)).unwrap();
        assert_relative_eq!(a, 2.0 * 2f64.sqrt(), max_relative = 1e-15);
        let a = p_angular(&l2, &v(&[5.0, 0.0]), &v(&[0.0, 0.1]), p(0.0)).unwrap();
        assert_relative_eq!(a, 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(p_angular(&l2, &Vector::zeros(2), &v(&[1.0, 0.0]), p(0.5)), Err(Error::ZeroVector));
    }

    #[test]
    fn skew_examples() {
        let l2 = NormedSpace::lp(2.0, 2).unwrap();
        let b = skew_p_angular(&l2, &v(&[2.0, 0.0]), &v(&[0.0, 3.0]), p(1.0)).unwrap();
        assert_relative_eq!(b, 13f64.sqrt(), max_relative = 1e-15);
        let b = skew_p_angular(&l2, &v(&[2.0, 0.0]), &v(&[0.0, 1.0]), p(0.0)).unwrap();
        assert_relative_eq!(b, 4.25f64.sqrt(), max_relative = 1e-15);
        for q in [0.0, 0.3, 1.0] {
            let x = v(&[1.5, -0.5]);
            let y = x.scaled(-1.0);
            let a = p_angular(&l2, &x, &y, p(q)).unwrap();
            let b = skew_p_angular(&l2, &x, &y, p(q)).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-15);
            assert_relative_eq!(a, 2.0 * l2.norm(&x).unwrap().powf(q), max_relative = 1e-14);
        }
    }

    #[test]
    fn ratio_examples() {
        let l1 = NormedSpace::lp(1.0, 2).unwrap();
        let x = v(&[0.7, -0.3]);
        assert_relative_eq!(ratio(&l1, &x, &x.scaled(-1.0), p(0.4)).unwrap(), 1.0, max_relative = 1e-15);
        assert!(matches!(ratio(&l1, &x, &x, p(0.4)), Err(Error::DegenerateDenominator { .. })));
        // representatives with norm quotient 0.9 of the sphere pair (1,0), (0.81,0.19)
        let r = ratio(&l1, &v(&[0.9, 0.0]), &v(&[0.81, 0.19]), p(0.0)).unwrap();
        assert_relative_eq!(r, 1.8, max_relative = 1e-12);
    }

    #[test]
    fn sphere_lambda_examples() {
        let l1 = NormedSpace::lp(1.0, 2).unwrap();
        let x1 = v(&[1.0, 0.0]);
        let x2 = v(&[0.81, 0.19]);
        // numerator 2λ(1−a), denominator (1−a) at a = λ² = 0.81
        let expected = (2.0 * 0.9 * (1.0 - 0.81)) / (1.0 - 0.81);
        let r = sphere_lambda_ratio(&l1, &x1, &x2, 0.9, p(0.0)).unwrap();
        assert_relative_eq!(r, expected, max_relative = 1e-12);
        assert_relative_eq!(r, 1.8, max_relative = 1e-12);

        let l2 = NormedSpace::lp(2.0, 2).unwrap();
        let e = v(&[0.6, 0.8]);
        let r = sphere_lambda_ratio(&l2, &e, &e.scaled(-1.0), 2.0, p(0.0)).unwrap();
        assert_relative_eq!(r, 0.8, max_relative = 1e-14);

        let y = v(&[0.0, 1.0]);
        let near = sphere_lambda_ratio(&l2, &e, &y, 1.0 + 1e-9, p(0.5)).unwrap();
        assert!((near - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sphere_lambda_errors() {
        let l2 = NormedSpace::lp(2.0, 2).unwrap();
        let e = v(&[1.0, 0.0]);
        assert!(matches!(
            sphere_lambda_ratio(&l2, &v(&[2.0, 0.0]), &e, 0.5, p(0.5)),
            Err(Error::OffSphere { .. })
        ));
        assert!(matches!(sphere_lambda_ratio(&l2, &e, &e, 0.0, p(0.5)), Err(Error::InvalidParameter(_))));
        assert!(matches!(sphere_lambda_ratio(&l2, &e, &e, 1.0, p(0.5)), Err(Error::DegenerateDenominator { .. })));
    }

    #[test]
    fn exponent_range() {
        assert!(Exponent::new(1.5).is_err());
        assert!(Exponent::new(-0.1).is_err());
        assert!(Exponent::extended(1.5).unwrap().is_extended());
        assert!(Exponent::extended(f64::NAN).is_err());
    }

    #[test]
    fn max_factor_cases() {
        assert_eq!(max_factor(3.0, 3.0, 0.4), 1.0);
        assert_relative_eq!(max_factor(2.0, 1.0, 0.0), 2.0);
        assert!(max_factor(1.0, 5.0, 0.5) > 1.0);
        assert_eq!(max_factor(1.0, 5.0, 1.0), 1.0);
    }

    #[test]
    fn lemma_cases() {
        assert_eq!(LemmaCase::for_exponent(0.5).unwrap(), LemmaCase::UnitInterval);
        assert_eq!(LemmaCase::for_exponent(1.5).unwrap(), LemmaCase::AboveOne);
        assert_eq!(LemmaCase::for_exponent(-1.0).unwrap(), LemmaCase::Negative);
        assert!(LemmaCase::for_exponent(2.0).is_err());
        assert_relative_eq!(upper_cap(0.5), 5.0 / 3.0);
        assert_eq!(upper_cap(0.0), 2.0);
        assert_eq!(upper_cap(1.0), 1.0);
    }
}
