//! Finite-dimensional real normed spaces.
//!
//! Three norm families are supported: plain ℓq, diagonally weighted ℓq, and
//! polyhedral norms given by the vertex set of their (origin-symmetric) unit
//! ball. Every family evaluates the norm, its dual norm, and a norming
//! functional, and each can construct its dual space.

use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::Witness;
use crate::error::{Error, Result};
use crate::report::{Check, InequalityReport, Verdict};

/// Tolerance used when matching mirror vertices and facet normals.
const GEOMETRY_TOL: f64 = 1e-9;
/// Upper bound on vertex combinations examined during facet enumeration.
const MAX_FACET_COMBINATIONS: u128 = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("vector must have at least one coordinate".into()));
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, t: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * t).collect())
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: f64, other: &Vector, b: f64) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect())
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }
}

/// A linear functional acting by the standard pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualFunctional(Vec<f64>);

impl DualFunctional {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, x: &Vector) -> f64 {
        dot(&self.0, x.coords())
    }
}

/// Exponent of an ℓq norm. Infinity is a separate case, never a large `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinite,
}

impl LpExponent {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::InvalidSpace(format!("exponent must be >= 1, got {q}")));
        }
        Ok(if q.is_infinite() { LpExponent::Infinite } else { LpExponent::Finite(q) })
    }

    /// Hölder conjugate: 1/q + 1/q' = 1.
    pub fn conjugate(self) -> Self {
        match self {
            LpExponent::Infinite => LpExponent::Finite(1.0),
            LpExponent::Finite(q) if q == 1.0 => LpExponent::Infinite,
            LpExponent::Finite(q) => LpExponent::Finite(q / (q - 1.0)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            LpExponent::Finite(q) => q,
            LpExponent::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for LpExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpExponent::Finite(q) => write!(f, "{q}"),
            LpExponent::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for LpExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LpExponent::Finite(q) => s.serialize_f64(*q),
            LpExponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LpExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let q = match Raw::deserialize(d)? {
            Raw::Num(q) => q,
            Raw::Text(t) if t == "inf" || t == "infinity" => f64::INFINITY,
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom)?,
        };
        LpExponent::new(q).map_err(serde::de::Error::custom)
    }
}

/// Serialized form of a space. The polyhedral variant is also the on-disk
/// vertex file format: `{"type": "polyhedral", "dim": n, "vertices": [[...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpaceSpec {
    Lp { q: LpExponent, dim: usize },
    WeightedLp { q: LpExponent, dim: usize, weights: Vec<f64> },
    Polyhedral { dim: usize, vertices: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum NormFamily {
    Lp { q: LpExponent },
    WeightedLp { q: LpExponent, weights: Vec<f64> },
    Polyhedral { vertices: Vec<Vec<f64>> },
}

/// A real normed space of dimension at least 2. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpec", into = "SpaceSpec")]
pub struct NormedSpace {
    dim: usize,
    family: NormFamily,
    // ‖x‖ = ‖D x‖_q with D = diag(scale) for the ℓq families.
    scale: Vec<f64>,
    // Facet normals a of the polyhedral unit ball {x : a·x <= 1}, sorted lexicographically.
    facets: Vec<Vec<f64>>,
}

impl TryFrom<SpaceSpec> for NormedSpace {
    type Error = Error;

    fn try_from(spec: SpaceSpec) -> Result<Self> {
        match spec {
            SpaceSpec::Lp { q, dim } => NormedSpace::lp(q.value(), dim),
            SpaceSpec::WeightedLp { q, dim, weights } => {
                if weights.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: weights.len() });
                }
                NormedSpace::weighted_lp(q.value(), weights)
            }
            SpaceSpec::Polyhedral { dim, vertices } => {
                if let Some(bad) = vertices.iter().find(|v| v.len() != dim) {
                    return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
                }
                NormedSpace::polyhedral(vertices)
            }
        }
    }
}

impl From<NormedSpace> for SpaceSpec {
    fn from(space: NormedSpace) -> Self {
        space.spec()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidSpace(format!("dimension must be >= 2, got {dim}")));
    }
    Ok(())
}

impl NormedSpace {
    /// ℓq on ℝ^dim; pass `f64::INFINITY` for the max norm.
    pub fn lp(q: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let q = LpExponent::new(q)?;
        Ok(Self { dim, family: NormFamily::Lp { q }, scale: vec![1.0; dim], facets: Vec::new() })
    }

    pub fn linf(dim: usize) -> Result<Self> {
        Self::lp(f64::INFINITY, dim)
    }

    /// (Σ wᵢ|xᵢ|^q)^{1/q}, or maxᵢ wᵢ|xᵢ| when q is infinite.
    pub fn weighted_lp(q: f64, weights: Vec<f64>) -> Result<Self> {
        let dim = weights.len();
        check_dim(dim)?;
        let q = LpExponent::new(q)?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpace(format!("weights must be positive and finite, got {w}")));
        }
        let scale = match q {
            LpExponent::Finite(qv) => weights.iter().map(|w| w.powf(1.0 / qv)).collect(),
            LpExponent::Infinite => weights.clone(),
        };
        Ok(Self { dim, family: NormFamily::WeightedLp { q, weights }, scale, facets: Vec::new() })
    }

    /// Polyhedral norm whose unit ball is the convex hull of `vertices`.
    ///
    /// The set must be origin-symmetric and span the space, which together
    /// put the origin in the interior of the hull.
    pub fn polyhedral(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vertices.first().map(|v| v.len()).unwrap_or(0);
        check_dim(dim)?;
        for v in &vertices {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            if let Some(index) = v.iter().position(|c| !c.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        let mut unique: Vec<Vec<f64>> = Vec::with_capacity(vertices.len());
        for v in &vertices {
            if !unique.iter().any(|u| approx_eq(u, v)) {
                unique.push(v.clone());
            }
        }
        for v in &unique {
            let mirror: Vec<f64> = v.iter().map(|c| -c).collect();
            if !unique.iter().any(|u| approx_eq(u, &mirror)) {
                return Err(Error::AsymmetricVertices { vertex: v.clone(), missing: mirror });
            }
        }
        let rows = DMatrix::from_fn(unique.len(), dim, |i, j| unique[i][j]);
        if rows.svd(false, false).rank(GEOMETRY_TOL) < dim {
            return Err(Error::InvalidSpace(
                "polyhedral vertex set does not span the space (origin not interior)".into(),
            ));
        }
        let facets = enumerate_facets(&unique, dim)?;
        Ok(Self { dim, family: NormFamily::Polyhedral { vertices: unique }, scale: vec![1.0; dim], facets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &NormFamily {
        &self.family
    }

    /// Facet normals of a polyhedral ball; empty for the ℓq families.
    pub fn facets(&self) -> &[Vec<f64>] {
        &self.facets
    }

    pub fn spec(&self) -> SpaceSpec {
        match &self.family {
            NormFamily::Lp { q } => SpaceSpec::Lp { q: *q, dim: self.dim },
            NormFamily::WeightedLp { q, weights } => {
                SpaceSpec::WeightedLp { q: *q, dim: self.dim, weights: weights.clone() }
            }
            NormFamily::Polyhedral { vertices } => {
                SpaceSpec::Polyhedral { dim: self.dim, vertices: vertices.clone() }
            }
        }
    }

    /// True for norms induced by an inner product (weighted ℓ2 included).
    pub fn is_inner_product(&self) -> bool {
        matches!(
            self.family,
            NormFamily::Lp { q: LpExponent::Finite(q) } | NormFamily::WeightedLp { q: LpExponent::Finite(q), .. }
                if q == 2.0
        )
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        if let Some(index) = x.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(())
    }

    pub fn norm(&self, x: &Vector) -> Result<f64> {
        self.check_vector(x.coords())?;
        Ok(self.norm_slice(x.coords()))
    }

    /// Norm of a raw coordinate slice; the caller guarantees the dimension.
    pub fn norm_slice(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.family {
            NormFamily::Lp { q } | NormFamily::WeightedLp { q, .. } => {
                lq_norm(*q, x.iter().zip(&self.scale).map(|(c, s)| c * s))
            }
            NormFamily::Polyhedral { .. } => {
                self.facets.iter().map(|a| dot(a, x)).fold(0.0, f64::max)
            }
        }
    }

    /// ‖a·x + b·y‖ without allocating for small dimensions.
    pub fn norm_combination(&self, a: f64, x: &[f64], b: f64, y: &[f64]) -> f64 {
        const STACK: usize = 8;
        if self.dim <= STACK {
            let mut buf = [0.0; STACK];
            for i in 0..self.dim {
                buf[i] = a * x[i] + b * y[i];
            }
            self.norm_slice(&buf[..self.dim])
        } else {
            let v: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect();
            self.norm_slice(&v)
        }
    }

    /// sup{ f·x : ‖x‖ <= 1 }
    pub fn dual_norm(&self, f: &DualFunctional) -> Result<f64> {
        self.check_vector(f.coords())?;
        Ok(self.dual_norm_slice(f.coords()))
    }

    pub fn dual_norm_slice(&self, f: &[f64]) -> f64 {
        match &self.family {
            NormFamily::Lp { q } | NormFamily::WeightedLp { q, .. } => {
                lq_norm(q.conjugate(), f.iter().zip(&self.scale).map(|(c, s)| c / s))
            }
            NormFamily::Polyhedral { vertices } => {
                vertices.iter().map(|v| dot(f, v).abs()).fold(0.0, f64::max)
            }
        }
    }

    /// A functional f with dual norm 1 and f·x = ‖x‖.
    ///
    /// At non-smooth points the lexicographically smallest admissible
    /// functional is returned.
    pub fn norming_functional(&self, x: &Vector) -> Result<DualFunctional> {
        self.check_vector(x.coords())?;
        if x.is_zero() {
            return Err(Error::ZeroVector);
        }
        let coords = match &self.family {
            NormFamily::Lp { q } | NormFamily::WeightedLp { q, .. } => {
                let y: Vec<f64> = x.coords().iter().zip(&self.scale).map(|(c, s)| c * s).collect();
                let g = lq_norming(*q, &y);
                g.iter().zip(&self.scale).map(|(gi, s)| gi * s).collect()
            }
            NormFamily::Polyhedral { .. } => {
                let n = self.norm_slice(x.coords());
                let tol = 1e-12 * n;
                // facets are sorted, so the first active one is the lexicographic minimum
                self.facets
                    .iter()
                    .find(|a| dot(a, x.coords()) >= n - tol)
                    .cloned()
                    .expect("some facet attains the polyhedral norm")
            }
        };
        DualFunctional::new(coords)
    }

    /// The dual space X*, built analytically for ℓq families and by polarity
    /// (facet normals become vertices) for polyhedral balls.
    pub fn dual(&self) -> Result<NormedSpace> {
        match &self.family {
            NormFamily::Lp { q } => NormedSpace::lp(q.conjugate().value(), self.dim),
            NormFamily::WeightedLp { q, .. } => {
                let qd = q.conjugate();
                let weights = self
                    .scale
                    .iter()
                    .map(|s| match qd {
                        LpExponent::Finite(qv) => s.powf(-qv),
                        LpExponent::Infinite => 1.0 / s,
                    })
                    .collect();
                NormedSpace::weighted_lp(qd.value(), weights)
            }
            NormFamily::Polyhedral { .. } => NormedSpace::polyhedral(self.facets.clone()),
        }
    }

    /// `count` unit vectors from normalized Gaussian draws; identical for identical seeds.
    pub fn sphere_sample(&self, count: usize, seed: u64) -> Vec<Vector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.random_unit(&mut rng)).collect()
    }

    pub(crate) fn random_unit<R: Rng>(&self, rng: &mut R) -> Vector {
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
            let n = self.norm_slice(&v);
            if n > 1e-300 && n.is_finite() {
                return Vector(v.into_iter().map(|c| c / n).collect());
            }
        }
    }

    /// Minkowski gauge of a polyhedral ball by bisection on hull membership.
    ///
    /// Membership is decided by Carathéodory: a point lies in the hull iff it
    /// lies in a simplex spanned by dim + 1 vertices. Independent of the facet
    /// enumeration that backs [`NormedSpace::norm`], and much slower.
    pub fn gauge_by_bisection(&self, x: &Vector) -> Result<f64> {
        self.check_vector(x.coords())?;
        let NormFamily::Polyhedral { vertices } = &self.family else {
            return Err(Error::Unsupported("bisection gauge needs a polyhedral space".into()));
        };
        if x.is_zero() {
            return Ok(0.0);
        }
        let inside = |t: f64| hull_contains(vertices, &x.scaled(1.0 / t).0);
        let mut hi = 1.0;
        while !inside(hi) {
            hi *= 2.0;
        }
        let mut lo = hi;
        while inside(lo) {
            lo *= 0.5;
        }
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

impl fmt::Display for NormedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            NormFamily::Lp { q } => write!(f, "l{q}:{}", self.dim),
            NormFamily::WeightedLp { q, weights } => {
                write!(f, "wl{q}:{}:{}", self.dim, weights.iter().map(|w| w.to_string()).join(","))
            }
            NormFamily::Polyhedral { vertices } => write!(f, "poly:{}:{}v", self.dim, vertices.len()),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn approx_eq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= GEOMETRY_TOL * (1.0 + x.abs().max(y.abs())))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn lq_norm(q: LpExponent, coords: impl Iterator<Item = f64> + Clone) -> f64 {
    match q {
        LpExponent::Infinite => coords.map(f64::abs).fold(0.0, f64::max),
        LpExponent::Finite(q) if q == 1.0 => coords.map(f64::abs).sum(),
        LpExponent::Finite(q) if q == 2.0 => coords.map(|c| c * c).sum::<f64>().sqrt(),
        LpExponent::Finite(q) => {
            let m = coords.clone().map(f64::abs).fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            m * coords.map(|c| (c.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }
}

/// Norming functional of plain ℓq at a nonzero y.
fn lq_norming(q: LpExponent, y: &[f64]) -> Vec<f64> {
    let sign = |c: f64| if c > 0.0 { 1.0 } else { -1.0 };
    match q {
        // zero coordinates admit any value in [-1, 1]; -1 is the lexicographic minimum
        LpExponent::Finite(qv) if qv == 1.0 => y.iter().map(|&c| sign(c)).collect(),
        LpExponent::Finite(qv) => {
            let n = lq_norm(q, y.iter().copied());
            y.iter()
                .map(|&c| if c == 0.0 { 0.0 } else { sign(c) * (c.abs() / n).powf(qv - 1.0) })
                .collect()
        }
        LpExponent::Infinite => {
            let m = y.iter().map(|c| c.abs()).fold(0.0, f64::max);
            let tol = 1e-12 * m;
            y.iter()
                .enumerate()
                .filter(|(_, c)| c.abs() >= m - tol)
                .map(|(i, &c)| {
                    let mut e = vec![0.0; y.len()];
                    e[i] = sign(c);
                    e
                })
                .min_by(|a, b| lex_cmp(a, b))
                .expect("nonzero vector has an active coordinate")
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// Facet normals {a : a·v <= 1 for all vertices, with equality on dim affinely
/// independent vertices}, by brute force over vertex subsets.
fn enumerate_facets(vertices: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    if binomial(vertices.len(), dim) > MAX_FACET_COMBINATIONS {
        return Err(Error::Unsupported(format!(
            "{} vertices in dimension {dim} is too many for facet enumeration",
            vertices.len()
        )));
    }
    let mut facets: Vec<Vec<f64>> = Vec::new();
    for subset in (0..vertices.len()).combinations(dim) {
        let m = DMatrix::from_fn(dim, dim, |i, j| vertices[subset[i]][j]);
        let Some(a) = m.lu().solve(&DVector::from_element(dim, 1.0)) else {
            continue;
        };
        let a: Vec<f64> = a.iter().copied().collect();
        if a.iter().any(|c| !c.is_finite()) {
            continue;
        }
        let supporting = vertices.iter().all(|v| dot(&a, v) <= 1.0 + GEOMETRY_TOL);
        if supporting && !facets.iter().any(|f| approx_eq(f, &a)) {
            facets.push(a);
        }
    }
    facets.sort_by(|a, b| lex_cmp(a, b));
    Ok(facets)
}

fn hull_contains(vertices: &[Vec<f64>], y: &[f64]) -> bool {
    let dim = y.len();
    let rhs = DVector::from_iterator(dim + 1, y.iter().copied().chain(std::iter::once(1.0)));
    (0..vertices.len()).combinations(dim + 1).any(|subset| {
        let m = DMatrix::from_fn(dim + 1, dim + 1, |i, j| if i < dim { vertices[subset[j]][i] } else { 1.0 });
        match m.lu().solve(&rhs) {
            Some(bary) => bary.iter().all(|&w| w.is_finite() && w >= -1e-12),
            None => false,
        }
    })
}

/// Sample-based check of the norm axioms: absolute homogeneity, symmetry, and
/// the triangle inequality at 1e-9, plus agreement with the bisection gauge
/// for polyhedral spaces. Violations are reported with the offending sample.
pub fn validate_norm(space: &NormedSpace, trials: usize, seed: u64) -> InequalityReport {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InequalityReport::new(space.to_string(), Vec::new());

    struct Worst {
        excess: f64,
        witness: Option<Witness>,
        violations: usize,
    }
    let mut homogeneity = Worst { excess: f64::NEG_INFINITY, witness: None, violations: 0 };
    let mut symmetry = Worst { excess: f64::NEG_INFINITY, witness: None, violations: 0 };
    let mut triangle = Worst { excess: f64::NEG_INFINITY, witness: None, violations: 0 };

    let record = |w: &mut Worst, excess: f64, witness: Witness| {
        if excess > 0.0 {
            w.violations += 1;
        }
        if excess > w.excess {
            w.excess = excess;
            w.witness = Some(witness);
        }
    };

    for _ in 0..trials {
        let rx = 2f64.powf(rng.random_range(-6.0..6.0));
        let ry = 2f64.powf(rng.random_range(-6.0..6.0));
        let x = space.random_unit(&mut rng).scaled(rx);
        let y = space.random_unit(&mut rng).scaled(ry);
        let t: f64 = rng.random_range(-10.0..10.0);
        let nx = space.norm_slice(x.coords());
        let ny = space.norm_slice(y.coords());

        let ntx = space.norm_slice(x.scaled(t).coords());
        let excess = (ntx - t.abs() * nx).abs() - TOL * (1.0 + t.abs() * nx);
        record(&mut homogeneity, excess, Witness::pair(x.clone(), x.scaled(t), Some(t)));

        let nmx = space.norm_slice(x.scaled(-1.0).coords());
        let excess = (nmx - nx).abs() - TOL * (1.0 + nx);
        record(&mut symmetry, excess, Witness::single(x.clone(), None));

        let nsum = space.norm_combination(1.0, x.coords(), 1.0, y.coords());
        let excess = nsum - (nx + ny) - TOL * (1.0 + nx + ny);
        record(&mut triangle, excess, Witness::pair(x, y, None));
    }

    let mut push = |id: &str, statement: &str, w: Worst| {
        let excess = if w.excess.is_finite() { w.excess } else { 0.0 };
        let verdict = if w.violations == 0 { Verdict::Holds } else { Verdict::Violated };
        let mut check = Check::new(id, statement, excess, 0.0, -excess, verdict)
            .with_note(format!("{} violations in {trials} trials", w.violations));
        if verdict == Verdict::Violated {
            if let Some(witness) = w.witness {
                check = check.with_witness(witness);
            }
        }
        report.push(check);
    };
    push("norm-homogeneity", "||t x|| = |t| ||x||", homogeneity);
    push("norm-symmetry", "||-x|| = ||x||", symmetry);
    push("norm-triangle", "||x + y|| <= ||x|| + ||y||", triangle);

    if let NormFamily::Polyhedral { .. } = space.family() {
        let mut worst = Worst { excess: f64::NEG_INFINITY, witness: None, violations: 0 };
        for _ in 0..trials.min(200) {
            let x = space.random_unit(&mut rng).scaled(2f64.powf(rng.random_range(-3.0..3.0)));
            let by_facets = space.norm_slice(x.coords());
            let by_bisection = space.gauge_by_bisection(&x).expect("polyhedral space");
            let excess = (by_facets - by_bisection).abs() - TOL * (1.0 + by_facets);
            record(&mut worst, excess, Witness::single(x, Some(by_bisection)));
        }
        push("gauge-agreement", "facet gauge = bisection gauge", worst);
    }
    report
}
