//! Randomized invariants over cheap pointwise quantities, plus a few
//! seeded end-to-end checks on estimator witnesses.

use geoconst::angular::{self, upper_cap, Exponent};
use geoconst::cli::parse_space;
use geoconst::constants::{self, ConstantKind};
use geoconst::norm_spaces::{NormedSpace, Vector};
use geoconst::optimizer::OptimizerConfig;
use geoconst::verifier;
use geoconst::Verdict;
use proptest::prelude::*;

fn space_strategy() -> impl Strategy<Value = NormedSpace> {
    prop_oneof![
        (1.0f64..8.0, 2usize..5).prop_map(|(q, d)| NormedSpace::lp(q, d).unwrap()),
        (2usize..5).prop_map(|d| NormedSpace::linf(d).unwrap()),
        (1.0f64..4.0, prop::collection::vec(0.2f64..5.0, 2..4))
            .prop_map(|(q, w)| NormedSpace::weighted_lp(q, w).unwrap()),
    ]
}

fn pair(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-10.0f64..10.0, dim), prop::collection::vec(-10.0f64..10.0, dim))
}

fn nonzero(c: &[f64]) -> bool {
    c.iter().map(|v| v.abs()).sum::<f64>() > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_axioms((space, (x, y), t) in space_strategy()
        .prop_flat_map(|s| { let d = s.dim(); (Just(s), pair(d), -5.0f64..5.0) }))
    {
        let nx = space.norm_slice(&x);
        let ny = space.norm_slice(&y);
        prop_assert!(nx >= 0.0);
        let scaled: Vec<f64> = x.iter().map(|v| t * v).collect();
        prop_assert!((space.norm_slice(&scaled) - t.abs() * nx).abs() <= 1e-9 * (1.0 + t.abs() * nx));
        let sum = space.norm_combination(1.0, &x, 1.0, &y);
        prop_assert!(sum <= nx + ny + 1e-9 * (1.0 + nx + ny));
    }

    #[test]
    fn alpha_one_equals_beta_one((space, (x, y)) in space_strategy()
        .prop_flat_map(|s| { let d = s.dim(); (Just(s), pair(d)) }))
    {
        prop_assume!(nonzero(&x) && nonzero(&y));
        let (x, y) = (Vector::new(x).unwrap(), Vector::new(y).unwrap());
        let p = Exponent::new(1.0).unwrap();
        let a = angular::p_angular(&space, &x, &y, p).unwrap();
        let b = angular::skew_p_angular(&space, &x, &y, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn sphere_lambda_matches_scaled_ratio(
        (space, (x, y)) in space_strategy().prop_flat_map(|s| { let d = s.dim(); (Just(s), pair(d)) }),
        lambda in 0.05f64..20.0,
        p in 0.0f64..1.0,
    ) {
        prop_assume!(nonzero(&x) && nonzero(&y));
        let (nx, ny) = (space.norm_slice(&x), space.norm_slice(&y));
        let x1 = Vector::new(x.iter().map(|v| v / nx).collect()).unwrap();
        let x2 = Vector::new(y.iter().map(|v| v / ny).collect()).unwrap();
        let p = Exponent::new(p).unwrap();
        let direct = angular::ratio(&space, &x1.scaled(lambda), &x2, p);
        let sphere = angular::sphere_lambda_ratio(&space, &x1, &x2, lambda, p);
        if let (Ok(a), Ok(b)) = (direct, sphere) {
            prop_assert!((a - b).abs() <= 1e-7 * (1.0 + a), "{a} vs {b}");
        }
    }

    #[test]
    fn pointwise_ratio_respects_cap(
        (space, (x, y)) in space_strategy().prop_flat_map(|s| { let d = s.dim(); (Just(s), pair(d)) }),
        p in 0.0f64..=1.0,
    ) {
        prop_assume!(nonzero(&x) && nonzero(&y));
        let (x, y) = (Vector::new(x).unwrap(), Vector::new(y).unwrap());
        if let Ok(r) = angular::ratio(&space, &x, &y, Exponent::new(p).unwrap()) {
            prop_assert!(r <= upper_cap(p) * (1.0 + 1e-9), "ratio {r} above cap at p={p}");
        }
    }

    #[test]
    fn space_text_round_trips(q in 1.0f64..10.0, dim in 2usize..6, inf in any::<bool>()) {
        let q = (q * 4.0).round() / 4.0;
        let space = if inf { NormedSpace::linf(dim).unwrap() } else { NormedSpace::lp(q, dim).unwrap() };
        let text = space.to_string();
        let back = parse_space(&text).unwrap();
        prop_assert_eq!(back, space);
    }
}

fn quick() -> OptimizerConfig {
    OptimizerConfig { starts: 8, grid_resolution: 64, ..OptimizerConfig::default() }
}

#[test]
fn isometric_plane_norms_share_mr() {
    let l1 = NormedSpace::lp(1.0, 2).unwrap();
    let linf = NormedSpace::linf(2).unwrap();
    for p in [0.0, 0.25, 0.5, 0.75] {
        let p = Exponent::new(p).unwrap();
        let a = constants::estimate_mr(&l1, p, &quick()).unwrap().value;
        let b = constants::estimate_mr(&linf, p, &quick()).unwrap().value;
        assert!((a - b).abs() <= 2e-2, "p={}: {a} vs {b}", p.value());
    }
}

#[test]
fn witnesses_reproduce_their_values() {
    let spaces = [NormedSpace::lp(1.0, 2).unwrap(), NormedSpace::lp(3.0, 2).unwrap(), NormedSpace::linf(2).unwrap()];
    let cases = [
        (ConstantKind::Mr, Some(0.5)),
        (ConstantKind::Dr, None),
        (ConstantKind::Dw, None),
        (ConstantKind::Delta, Some(1.0)),
        (ConstantKind::Rho, Some(0.5)),
    ];
    for space in &spaces {
        for (kind, param) in cases {
            let e = constants::estimate(kind, space, param, false, &quick()).unwrap();
            let again = e.reevaluate().unwrap();
            let want = e.certified_value();
            assert!((again - want).abs() <= 1e-9 * (1.0 + want.abs()), "{space} {kind:?}: {again} vs {want}");
            assert!(e.in_range(), "{space} {kind:?}: {} out of range", e.value);
        }
    }
}

#[test]
fn moduli_have_expected_shape() {
    for space in [NormedSpace::lp(2.0, 2).unwrap(), NormedSpace::lp(1.0, 2).unwrap()] {
        let report = verifier::check_moduli_shape(&space, &quick()).unwrap();
        assert!(
            report.checks.iter().all(|c| c.verdict != Verdict::Violated),
            "{space}: {:?}",
            report.checks
        );
    }
}
