use std::f64::consts::PI;

use ultracontract::geometry::*;
use ultracontract::heat::*;
use ultracontract::spectral::*;

fn pole_operator(m: &ModelManifold, v: &Potential) -> DiscreteOperator {
    discretize(m, v, 0.0).unwrap()
}

fn bump(g: &RadialGrid, centre: f64, width: f64) -> Vec<f64> {
    let mut u: Vec<f64> = g.nodes().iter().map(|r| (-((r - centre) / width).powi(2)).exp()).collect();
    u[g.n - 1] = 0.0;
    u
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max) / scale
}

#[test]
fn hyperbolic_kernel_matches_the_closed_form() {
    // h(o, r, t) = (4πt)^{-3/2} (r / sinh r) e^{−t − r²/4t} on H³; the radial
    // measure omits the sphere area 4π.
    let g = RadialGrid::new(15.0, 2048).unwrap();
    let m = ModelManifold::hyperbolic(3, g).unwrap();
    let pairs = eigenpairs(&pole_operator(&m, &Potential::zero()), 512).unwrap();
    let t = 0.5;
    let snap = heat_kernel_from_pole(&pairs, t).unwrap();
    for r in [0.5, 1.0, 2.0, 3.0, 4.0] {
        let i = g.nearest(r);
        let r = g.node(i);
        let exact = (4.0 * PI * t).powf(-1.5) * r / r.sinh() * (-t - r * r / (4.0 * t)).exp();
        let got = snap.values[i] / (4.0 * PI);
        assert!((got / exact - 1.0).abs() < 1e-3, "r={r}: {got} vs {exact}");
    }
}

#[test]
fn hyperbolic_intrinsic_supremum_grows_with_the_domain() {
    // Not a stable quantity: the ground state of a hyperbolic ball decays
    // exponentially, so the ratio h/φ₀² near the boundary keeps growing.
    let sup = |r_max: f64| {
        let g = RadialGrid::new(r_max, (r_max * 100.0) as usize + 1).unwrap();
        let m = ModelManifold::hyperbolic(2, g).unwrap();
        let (_, reports) = resolved_intrinsic_sup(&pole_operator(&m, &Potential::zero()), &g.nodes(), &[1.0]).unwrap();
        assert!(reports[0].is_resolved());
        reports[0].s_empirical
    };
    let (small, large) = (sup(15.0), sup(30.0));
    assert!(large > 2.0 * small, "{small} vs {large}");
}

#[test]
fn crank_nicolson_agrees_with_the_expansion() {
    let g = RadialGrid::new(10.0, 1001).unwrap();
    let m = ModelManifold::hyperbolic(3, g).unwrap();
    let op = pole_operator(&m, &Potential::zero());
    let pairs = eigenpairs(&op, 250).unwrap();
    let u0 = bump(&g, 5.0, 1.0);
    let cn = crank_nicolson_evolve(&op, &u0, 0.5, 1000).unwrap();
    let ex = expansion_evolve(&op, &pairs, &u0, 0.5);
    let err = max_rel(&cn, &ex);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn crank_nicolson_error_is_second_order_in_time() {
    let g = RadialGrid::new(10.0, 501).unwrap();
    let m = ModelManifold::hyperbolic(3, g).unwrap();
    let op = pole_operator(&m, &Potential::zero());
    let pairs = eigenpairs(&op, 125).unwrap();
    let u0 = bump(&g, 5.0, 1.0);
    let ex = expansion_evolve(&op, &pairs, &u0, 0.5);
    let e: Vec<f64> = [50, 100].iter().map(|&s| max_rel(&crank_nicolson_evolve(&op, &u0, 0.5, s).unwrap(), &ex)).collect();
    let ratio = e[0] / e[1];
    assert!((3.0..=5.0).contains(&ratio), "{e:?}");
}

#[test]
fn ground_state_decays_at_its_eigenvalue() {
    let g = RadialGrid::new(20.0, 2048).unwrap();
    let ex = Example1::new(3.0).build(g).unwrap();
    let op = pole_operator(&ex.manifold, &ex.potential);
    let p = lowest_eigenpair(&op).unwrap();
    let t = 0.25;
    let out = crank_nicolson_evolve(&op, &p.phi, t, 2000).unwrap();
    let want: Vec<f64> = p.phi.iter().map(|x| x * (-p.lambda * t).exp()).collect();
    let err = max_rel(&out, &want);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn mass_does_not_increase() {
    let g = RadialGrid::new(10.0, 1001).unwrap();
    let ex = Example2::new(2.0, 1.0).build(g).unwrap();
    let op = pole_operator(&ex.manifold, &ex.potential);
    let mass = |u: &[f64]| -> f64 { (op.first..=op.last).map(|i| u[i] * op.log_mass[i - op.first].exp()).sum() };
    let mut u = bump(&g, 3.0, 1.0);
    let mut last = mass(&u);
    for _ in 0..8 {
        u = crank_nicolson_evolve(&op, &u, 0.05, 50).unwrap();
        let now = mass(&u);
        assert!(now <= last * (1.0 + 1e-12), "{now} > {last}");
        last = now;
    }
}

#[test]
fn semigroup_property_holds_for_the_expansion() {
    let g = RadialGrid::new(20.0, 2048).unwrap();
    let ex = Example1::new(3.0).build(g).unwrap();
    let pairs = eigenpairs(&pole_operator(&ex.manifold, &ex.potential), 512).unwrap();
    for (t, s) in [(0.25, 0.25), (0.5, 0.5), (0.1, 1.0)] {
        let res = semigroup_residual(&pairs, t, s).unwrap();
        assert!(res < 1e-8, "t={t} s={s}: {res}");
    }
}

#[test]
fn kernel_mass_is_sub_markov() {
    // A small ball keeps the inner products ⟨φ_j, 1⟩ ~ √μ(ball) of order one,
    // so the expansion sum does not cancel large terms.
    let g = RadialGrid::new(5.0, 501).unwrap();
    let m = ModelManifold::hyperbolic(3, g).unwrap();
    let op = pole_operator(&m, &Potential::zero());
    let pairs = eigenpairs_unchecked(&op, op.active_len()).unwrap();
    let mut last = f64::INFINITY;
    for t in [0.1, 0.2, 0.5, 1.0, 2.0] {
        let snap = heat_kernel_from_pole(&pairs, t).unwrap();
        let a = snapshot_mass(&op, &snap);
        let b = kernel_mass(&op, &pairs, t);
        assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        assert!(b <= 1.0 + 1e-10 && b <= last + 1e-10, "t={t}: {b}");
        assert!(snap.values.iter().all(|&h| h >= -1e-12));
        last = b;
    }
    assert!(last < 0.5);
}

#[test]
fn intrinsic_supremum_is_at_least_one_and_non_increasing() {
    let g = RadialGrid::new(20.0, 2048).unwrap();
    let ex = Example1::new(3.0).build(g).unwrap();
    let times = [0.1, 0.25, 0.5, 1.0, 2.0];
    let (pairs, reports) = resolved_intrinsic_sup(&pole_operator(&ex.manifold, &ex.potential), &g.nodes(), &times).unwrap();
    for w in reports.windows(2) {
        assert!(w[1].log_s_empirical <= w[0].log_s_empirical);
    }
    for r in &reports {
        assert!(r.log_s_empirical >= 0.0);
        assert!(r.is_resolved(), "{r:?}");
        assert!((log_intrinsic_sup(&pairs, r.t) - r.log_s_empirical).abs() < 1e-9 * r.log_s_empirical.abs().max(1.0));
        assert!(r.s_pole <= r.s_empirical * (1.0 + 1e-9));
    }
}

#[test]
fn too_few_modes_is_reported() {
    let g = RadialGrid::new(10.0, 1001).unwrap();
    let m = ModelManifold::hyperbolic(3, g).unwrap();
    let pairs = eigenpairs(&pole_operator(&m, &Potential::zero()), 4).unwrap();
    assert!(matches!(heat_kernel_from_pole(&pairs, 0.01), Err(ultracontract::Error::InsufficientModes { .. })));
    assert!(heat_kernel_from_pole(&pairs, 0.0).is_err());
}

#[test]
fn crank_nicolson_rejects_bad_input() {
    let g = RadialGrid::new(10.0, 101).unwrap();
    let m = ModelManifold::hyperbolic(3, g).unwrap();
    let op = pole_operator(&m, &Potential::zero());
    let u0 = bump(&g, 5.0, 1.0);
    assert!(crank_nicolson_evolve(&op, &u0, 0.5, 5).is_err());
    let mut bad = u0.clone();
    bad[3] = f64::NAN;
    assert!(crank_nicolson_evolve(&op, &bad, 0.5, 50).is_err());
}
