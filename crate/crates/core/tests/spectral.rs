use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ultracontract::geometry::*;
use ultracontract::spectral::*;

/// Lowest Dirichlet eigenvalue of the hyperbolic plane ball of radius `r_max`
/// by shooting `φ'' + coth r φ' + λ φ = 0` from the pole.
fn hyperbolic_plane_shooting(r_max: f64, lo: f64, hi: f64) -> f64 {
    let end_value = |lambda: f64| {
        let h = 1e-3;
        let r0 = 1e-3;
        let mut r = r0;
        let mut y = 1.0 - lambda * r0 * r0 / 4.0;
        let mut z = -lambda * r0 / 2.0;
        let rhs = |r: f64, y: f64, z: f64| (z, -z / r.tanh() - lambda * y);
        let steps = ((r_max - r0) / h).round() as usize;
        let h = (r_max - r0) / steps as f64;
        for _ in 0..steps {
            let (a1, b1) = rhs(r, y, z);
            let (a2, b2) = rhs(r + h / 2.0, y + h * a1 / 2.0, z + h * b1 / 2.0);
            let (a3, b3) = rhs(r + h / 2.0, y + h * a2 / 2.0, z + h * b2 / 2.0);
            let (a4, b4) = rhs(r + h, y + h * a3, z + h * b3);
            y += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            z += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            r += h;
        }
        y
    };
    let (mut lo, mut hi) = (lo, hi);
    assert!(end_value(lo) > 0.0 && end_value(hi) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if end_value(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn pole_operator(m: &ModelManifold, v: &Potential) -> DiscreteOperator {
    discretize(m, v, 0.0).unwrap()
}

#[test]
fn hyperbolic_space_ground_state_energy() {
    let g = RadialGrid::new(30.0, 4096).unwrap();
    let m = ModelManifold::hyperbolic(3, g).unwrap();
    let lambda = lowest_eigenpair(&pole_operator(&m, &Potential::zero())).unwrap().lambda;
    // Three dimensions reduce to a string: λ = 1 + (π/R)² exactly.
    let truncated = 1.0 + (PI / 30.0).powi(2);
    assert!((lambda / truncated - 1.0).abs() < 1e-4, "{lambda} vs {truncated}");
    assert!((lambda - 1.0).abs() < 0.02);
}

#[test]
fn hyperbolic_plane_ground_state_matches_shooting() {
    let g = RadialGrid::new(30.0, 4096).unwrap();
    let m = ModelManifold::hyperbolic(2, g).unwrap();
    let lambda = lowest_eigenpair(&pole_operator(&m, &Potential::zero())).unwrap().lambda;
    let oracle = hyperbolic_plane_shooting(30.0, 0.25, 0.27);
    assert!((lambda / oracle - 1.0).abs() < 1e-4, "{lambda} vs {oracle}");
}

#[test]
fn disk_eigenvalue_ratios_follow_bessel_zeros() {
    let zeros: [f64; 6] = [2.404825557695773, 5.520078110286311, 8.653727912911013, 11.791534439014281, 14.930917708487787, 18.071063967910922];
    let g = RadialGrid::new(1.0, 2001).unwrap();
    let m = ModelManifold::euclidean(2, g).unwrap();
    let pairs = eigenpairs(&pole_operator(&m, &Potential::zero()), 6).unwrap();
    for j in 1..6 {
        let got = pairs[j].lambda / pairs[0].lambda;
        let want = (zeros[j] / zeros[0]).powi(2);
        assert!((got / want - 1.0).abs() < 0.01, "j={j}: {got} vs {want}");
    }
}

#[test]
fn eigenvectors_are_orthonormal_in_the_weighted_inner_product() {
    let g = RadialGrid::new(20.0, 4096).unwrap();
    let ex = Example1::new(3.0).build(g).unwrap();
    let op = pole_operator(&ex.manifold, &ex.potential);
    let pairs = eigenpairs(&op, 12).unwrap();
    for a in &pairs {
        for b in &pairs {
            let gram: f64 = (op.first..=op.last)
                .map(|i| {
                    let l = op.log_mass[i - op.first] + a.log_abs_phi[i] + b.log_abs_phi[i];
                    a.phi[i].signum() * b.phi[i].signum() * l.exp()
                })
                .sum();
            let want = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
            assert!((gram - want).abs() < 1e-10, "λ={} λ'={}: {gram}", a.lambda, b.lambda);
        }
    }
}

#[test]
fn ground_state_is_positive_and_simple() {
    let g = RadialGrid::new(20.0, 2048).unwrap();
    let ex = Example2::new(3.0, 1.0).build(g).unwrap();
    let pairs = eigenpairs(&pole_operator(&ex.manifold, &ex.potential), 2).unwrap();
    let s = pairs[0].sign_v[0];
    assert!(pairs[0].sign_v.iter().all(|&x| x == s));
    assert!(pairs[1].lambda > pairs[0].lambda * (1.0 + 1e-6));
    assert!(pairs[0].lambda > 0.0);
}

#[test]
fn rayleigh_quotients_dominate_the_ground_state() {
    let g = RadialGrid::new(10.0, 1001).unwrap();
    let ex = Example1::new(2.0).build(g).unwrap();
    let op = pole_operator(&ex.manifold, &ex.potential);
    let lambda = lowest_eigenpair(&op).unwrap().lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let centre: f64 = rng.gen_range(0.0..9.0);
        let width: f64 = rng.gen_range(0.2..3.0);
        let u: Vec<f64> = g.nodes().iter().map(|r| (-((r - centre) / width).powi(2)).exp() * rng.gen_range(0.5..1.5)).collect();
        let rq = (op.log_quadratic_form(&u) - op.log_mass_norm_sq(&u)).exp();
        assert!(rq >= lambda * (1.0 - 1e-10), "{rq} < {lambda}");
    }
}

#[test]
fn ground_state_decreases_with_the_domain() {
    let h = 0.01;
    let lambdas: Vec<f64> = [5.0, 10.0, 20.0]
        .iter()
        .map(|&r| {
            let g = RadialGrid::new(r, (r / h) as usize + 1).unwrap();
            let m = ModelManifold::hyperbolic(3, g).unwrap();
            lowest_eigenpair(&pole_operator(&m, &Potential::zero())).unwrap().lambda
        })
        .collect();
    assert!(lambdas.windows(2).all(|w| w[1] < w[0]), "{lambdas:?}");
}

#[test]
fn discrete_form_converges_to_the_dirichlet_integral_at_second_order() {
    // u = cos(πr/2R) on the unit ball of R³: ∫ u'² r² dr = π²/24 + 1/4.
    let exact = PI * PI / 24.0 + 0.25;
    let err = |n: usize| {
        let g = RadialGrid::new(1.0, n).unwrap();
        let m = ModelManifold::euclidean(3, g).unwrap();
        let op = pole_operator(&m, &Potential::zero());
        let u: Vec<f64> = g.nodes().iter().map(|r| (0.5 * PI * r).cos()).collect();
        (op.quadratic_form(&u) - exact).abs()
    };
    let (e1, e2) = (err(201), err(401));
    let ratio = e1 / e2;
    assert!((3.0..=5.0).contains(&ratio), "{e1} {e2}");
}

#[test]
fn hyperbolic_exterior_eigenvalue_respects_the_spectral_gap() {
    let g = RadialGrid::new(40.0, 4096).unwrap();
    let m = ModelManifold::hyperbolic(2, g).unwrap();
    let value = exterior_eigenvalue_truncated(&m, &Potential::zero(), 5.0).unwrap();
    assert!(value >= 0.25, "{value}");
}

#[test]
fn curvature_example_exterior_eigenvalues_increase() {
    let g = RadialGrid::new(12.0, 4096).unwrap();
    let ex = Example1::new(3.0).build(g).unwrap();
    let curve = ExteriorCurve::compute(&ex.manifold, &ex.potential, &[2.0, 4.0, 8.0]).unwrap();
    assert!(curve.values.windows(2).all(|w| w[1] > w[0]), "{curve:?}");
    let r = lambda0_inverse_curve(&curve, 0.5 * (curve.values[1] + curve.values[2])).unwrap();
    assert!(r > 4.0 && r < 8.0);
}

#[test]
fn exterior_radius_must_leave_room() {
    let g = RadialGrid::new(10.0, 1001).unwrap();
    let m = ModelManifold::hyperbolic(2, g).unwrap();
    assert!(exterior_eigenvalue(&m, &Potential::zero(), 9.5).is_err());
    assert!(exterior_eigenvalue(&m, &Potential::zero(), 0.0).is_err());
}

#[test]
fn resolution_cap_is_enforced() {
    let g = RadialGrid::new(10.0, 400).unwrap();
    let m = ModelManifold::hyperbolic(2, g).unwrap();
    let op = pole_operator(&m, &Potential::zero());
    assert!(eigenpairs(&op, 101).is_err());
    assert_eq!(eigenpairs(&op, 100).unwrap().len(), 100);
}

#[test]
fn spectrum_csv_layout() {
    let g = RadialGrid::new(5.0, 101).unwrap();
    let m = ModelManifold::hyperbolic(2, g).unwrap();
    let pairs = eigenpairs(&pole_operator(&m, &Potential::zero()), 3).unwrap();
    let mut out = Vec::new();
    write_spectrum_csv(&g, &pairs, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("r,phi0@lambda="));
    assert_eq!(header.split(',').count(), 4);
    assert_eq!(text.lines().count(), 102);
}
