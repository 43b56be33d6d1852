use std::f64::consts::PI;

use super::*;
use crate::geometry::{random_mcp_density, MixingField};

const NN: BoundaryConditions = BoundaryConditions::NEUMANN_NEUMANN;
const DN: BoundaryConditions = BoundaryConditions::DIRICHLET_NEUMANN;

fn p(k: f64, n: f64) -> CurvatureParams {
    CurvatureParams::new(k, n).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn uniform_density_all_boundary_conditions() {
    let cases = [
        (NN, PI * PI),
        (DN, PI * PI / 4.0),
        (BoundaryConditions::NEUMANN_DIRICHLET, PI * PI / 4.0),
        (BoundaryConditions::DIRICHLET_DIRICHLET, PI * PI),
    ];
    for (bc, want) in cases {
        let r = spectral_gap_fn(|_| 1.0, 0.0, 1.0, 1024, bc).unwrap();
        assert!(rel(r.eigenvalue, want) < 1e-9, "{bc:?}: {}", r.eigenvalue);
        assert!(r.error_estimate > 0.0);
        assert_eq!(r.zero_location.is_some(), bc.is_neumann_neumann());
    }
}

#[test]
fn sine_density_gap_is_two() {
    let r = spectral_gap_fn(|x: f64| x.sin().max(0.0), 0.0, PI, 1024, NN).unwrap();
    assert!((r.eigenvalue - 2.0).abs() < 1e-8, "{}", r.eigenvalue);
    assert!(r.floored_nodes >= 1);
}

#[test]
fn second_order_convergence() {
    let mut prev: Option<f64> = None;
    for n in [64, 128, 256, 512, 1024] {
        let g = GridDensity::from_fn(0.0, 1.0, n, |_| 1.0).unwrap();
        let err = (discrete_eigenvalue(&g, NN).unwrap() - PI * PI).abs();
        if let Some(e) = prev {
            assert!(e / err >= 3.5, "ratio {} at n = {n}", e / err);
        }
        prev = Some(err);
    }
}

#[test]
fn eigenfunction_is_normalized_and_increasing() {
    let h = ModelDensity::new(p(-1.0, 3.0), 2.0)
        .unwrap()
        .sample(1024)
        .unwrap();
    let r = spectral_gap(&h, NN).unwrap();
    let dx = h.dx();
    let n = h.cells();
    let norm: f64 = (0..=n)
        .map(|i| {
            let m = if i == 0 || i == n { 0.5 } else { 1.0 };
            m * dx * h.samples()[i] * r.eigenfunction[i].powi(2)
        })
        .sum();
    assert!((norm - 1.0).abs() < 1e-12);
    assert!(r.eigenfunction.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn model_eigenfunctions_are_monotone() {
    for (k, n, d) in [
        (0.0, 3.0, 1.0),
        (-1.0, 2.0, 3.0),
        (1.0, 5.0, 4.0),
        (1.0, 13.0, 5.0),
    ] {
        let h = ModelDensity::new(p(k, n), d).unwrap().sample(512).unwrap();
        let r = spectral_gap(&h, NN).unwrap();
        let scale = r.eigenfunction.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(
            r.eigenfunction
                .windows(2)
                .all(|w| w[1] - w[0] > -1e-12 * scale),
            "({k}, {n}, {d})"
        );
    }
}

#[test]
fn rayleigh_examples() {
    let n = 1024;
    let h = GridDensity::from_fn(0.0, 1.0, n, |_| 1.0).unwrap();
    let cos: Vec<f64> = (0..=n).map(|i| (PI * h.x(i)).cos()).collect();
    assert!(rel(rayleigh_quotient(&h, &cos).unwrap(), PI * PI) < 1e-5);
    let lin: Vec<f64> = (0..=n).map(|i| h.x(i)).collect();
    assert!(rel(rayleigh_quotient(&h, &lin).unwrap(), 12.0) < 1e-5);
}

#[test]
fn rayleigh_of_eigenfunction_matches_eigenvalue() {
    let h = random_mcp_density(p(0.0, 3.0), 1.0, 9, 2048).unwrap();
    let r = spectral_gap(&h, NN).unwrap();
    let q = rayleigh_quotient(&h, &r.eigenfunction).unwrap();
    assert!(
        (q - r.eigenvalue).abs() <= 1.01 * r.error_estimate + 1e-10 * r.eigenvalue,
        "{q} vs {} +- {}",
        r.eigenvalue,
        r.error_estimate
    );
}

#[test]
fn rayleigh_rejects_degenerate_input() {
    let h = GridDensity::from_fn(0.0, 1.0, 16, |x| 1.0 + x).unwrap();
    assert!(matches!(
        rayleigh_quotient(&h, &[2.0; 17]),
        Err(Error::Domain(_))
    ));
    assert!(rayleigh_quotient(&h, &[1.0; 5]).is_err());
}

#[test]
fn zero_location_examples() {
    let r = spectral_gap_fn(|_| 1.0, 0.0, 1.0, 512, NN).unwrap();
    assert!((r.zero_location.unwrap() - 0.5).abs() < 1e-9);

    for (k, n, d) in [(0.0, 4.0, 1.0), (-1.0, 2.0, 2.0), (1.0, 3.0, 2.5)] {
        let h = ModelDensity::new(p(k, n), d).unwrap().sample(1024).unwrap();
        let r = spectral_gap(&h, NN).unwrap();
        assert!((r.zero_location.unwrap() - d / 2.0).abs() < h.dx());
    }

    let h = random_mcp_density(p(1.0, 5.0), 2.0, 4, 1024).unwrap();
    let z = spectral_gap(&h, NN).unwrap().zero_location.unwrap();
    assert!(z > 0.0 && z < 2.0);
}

#[test]
fn zero_location_errors() {
    let r = spectral_gap_fn(|_| 1.0, 0.0, 1.0, 64, DN).unwrap();
    assert!(eigenfunction_zero(&r).is_err());
    let mut r = spectral_gap_fn(|_| 1.0, 0.0, 1.0, 64, NN).unwrap();
    r.eigenfunction = (0..r.eigenfunction.len())
        .map(|i| (3.0 * PI * i as f64 / 128.0).cos())
        .collect();
    assert_eq!(eigenfunction_zero(&r), Err(Error::SignChanges(3)));
}

#[test]
fn osc_examples() {
    let h1 = GridDensity::from_fn(0.0, 1.0, 32, |x| 1.0 + x * x).unwrap();
    assert_eq!(osc(&h1, &h1).unwrap(), 1.0);
    let h2 = GridDensity::from_fn(0.0, 1.0, 32, |x| 3.5 * (1.0 + x * x)).unwrap();
    assert!((osc(&h1, &h2).unwrap() - 1.0).abs() < 1e-15);
    let one = GridDensity::from_fn(0.0, 1.0, 32, |_| 1.0).unwrap();
    let ramp = GridDensity::from_fn(0.0, 1.0, 32, |x| 1.0 + x).unwrap();
    assert_eq!(osc(&one, &ramp).unwrap(), 2.0);
    let other = GridDensity::from_fn(0.0, 2.0, 32, |_| 1.0).unwrap();
    assert!(osc(&one, &other).is_err());
    let zero_end = GridDensity::from_fn(0.0, 1.0, 32, |x| x).unwrap();
    assert!(osc(&one, &zero_end).is_err());
}

#[test]
fn osc_perturbation_bound() {
    let q = p(-1.0, 4.0);
    for seed in 0..6 {
        let h1 = random_mcp_density(q, 1.5, seed, 1024).unwrap();
        let h2 = random_mcp_density(q, 1.5, seed + 100, 1024).unwrap();
        let o = osc(&h1, &h2).unwrap();
        let a = gap_estimate(&h1, NN).unwrap();
        let b = gap_estimate(&h2, NN).unwrap();
        let slack = a.error_estimate + b.error_estimate;
        assert!(b.eigenvalue >= a.eigenvalue / o - slack);
        assert!(b.eigenvalue <= a.eigenvalue * o + slack);
    }
}

#[test]
fn scaling_covariance() {
    let h = |x: f64| 1.0 + 0.5 * (3.0 * x).sin() + x * x;
    let base = gap_estimate_fn(h, 0.0, 2.0, 1024, NN).unwrap();
    for a in [0.5, 2.0] {
        let scaled = gap_estimate_fn(|x| h(a * x), 0.0, 2.0 / a, 1024, NN).unwrap();
        let tol = scaled.error_estimate + a * a * base.error_estimate + 1e-12;
        assert!((scaled.eigenvalue - a * a * base.eigenvalue).abs() <= tol);
    }
}

#[test]
fn dirichlet_neumann_domain_monotonicity() {
    let g = random_mcp_density(p(0.0, 3.0), 1.0, 21, 2048).unwrap();
    let mut prev = f64::INFINITY;
    for hi in [1280, 1536, 1792, 2048] {
        let sub = g.restrict(1024, hi).unwrap();
        let e = gap_estimate(&sub, DN).unwrap();
        assert!(e.eigenvalue + e.error_estimate < prev, "{hi}");
        prev = e.eigenvalue - e.error_estimate;
    }
}

#[test]
fn full_gap_equals_half_interval_dirichlet_gap() {
    let h = ModelDensity::new(p(1.0, 4.0), 3.0)
        .unwrap()
        .sample(2048)
        .unwrap();
    let full = gap_estimate(&h, NN).unwrap();
    let half = gap_estimate(&h.restrict(1024, 2048).unwrap(), DN).unwrap();
    assert!(rel(full.eigenvalue, half.eigenvalue) < 1e-10);
}

#[test]
fn odd_grids_and_degenerate_weights_fail() {
    let g = GridDensity::from_fn(0.0, 1.0, 33, |_| 1.0).unwrap();
    assert!(gap_estimate(&g, NN).is_err());
    assert!(discrete_eigenvalue(&g, NN).is_ok());
    let tiny = GridDensity::new(0.0, 1.0, vec![1e-320; 9]).unwrap();
    assert!(matches!(
        gap_estimate(&tiny, NN),
        Err(Error::DegenerateWeight(_))
    ));
}

#[test]
fn ode_comparison_identity_is_equality() {
    let q = p(0.0, 3.0);
    let r = check_ode_comparison(q, 1.0, |x| if x < 0.5 { 0.0 } else { 1.0 }, 1024).unwrap();
    assert!(rel(r.lambda_perturbed, r.lambda_model) < 1e-8, "{r:?}");
    assert!(r.holds);
}

#[test]
fn ode_comparison_random_perturbations_hold() {
    for (k, n, d) in [(0.0, 3.0, 1.0), (-1.0, 2.0, 2.0), (1.0, 5.0, 2.0)] {
        for seed in 0..5 {
            let field = MixingField::random(d, seed);
            let r = check_ode_comparison(p(k, n), d, |x| field.eval(x), 1024).unwrap();
            assert!(r.holds, "({k}, {n}, {d}) seed {seed}: {r:?}");
        }
    }
}

#[test]
fn ode_comparison_rejects_inadmissible_inputs() {
    assert!(check_ode_comparison(p(0.0, 3.0), 1.0, |_| -0.5, 256).is_err());
    let q = p(1.0, 2.0);
    assert!(check_ode_comparison(q, PI, |_| 0.5, 256).is_err());
}

#[test]
fn summary_serializes_wire_fields() {
    let r = spectral_gap_fn(|_| 1.0, 0.0, 1.0, 16, NN).unwrap();
    let s = serde_json::to_value(r.summary(false)).unwrap();
    let keys: Vec<_> = s.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["error", "lambda", "n", "zero"]);
    let s = serde_json::to_value(r.summary(true)).unwrap();
    assert_eq!(s["eigenfunction"].as_array().unwrap().len(), 33);
}
