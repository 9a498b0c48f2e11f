use proptest::prelude::*;
use ultracontract::cli::parse_config;
use ultracontract::numerics::log_sum_exp;
use ultracontract::profiles::*;
use ultracontract::tridiag::SymTridiag;
use ultracontract::verify::{fit_constants, FitModel};

fn sectional(delta: f64) -> RateFunction {
    sectional_rate(PowerLawProfile::power(1.0, delta), PowerLawProfile::power(2.0, delta), BoundConstants::default(), 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sectional_rate_is_non_increasing(delta in 2.2f64..5.0, a in -12.0f64..2.0, b in -12.0f64..2.0) {
        let beta = sectional(delta);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (x, y) = (beta.ln_value(lo.exp()), beta.ln_value(hi.exp()));
        prop_assert!(y <= x + 1e-12 * x.abs().max(1.0), "{x} {y}");
    }

    #[test]
    fn rate_of_its_inverse_stays_below(theta in 0.1f64..3.0, eps in 0.2f64..1.0, excess in 1e-3f64..50.0) {
        let beta = RateFunction::exp_power(theta, eps);
        let ln_s = beta.ln_infimum() + excess;
        let r = beta_inverse(&beta, ln_s.exp());
        prop_assert!(r > 0.0 && r.is_finite());
        prop_assert!(beta.ln_value(r) <= ln_s + 1e-8f64.ln_1p());
        // Minimality: slightly smaller r violates the bound.
        prop_assert!(beta.ln_value(r * (1.0 - 1e-6)) > ln_s);
    }

    #[test]
    fn inverse_below_the_infimum_is_empty(theta in 0.1f64..3.0, eps in 0.2f64..1.0) {
        let beta = RateFunction::exp_power(theta, eps);
        prop_assert_eq!(beta_inverse(&beta, 0.5 * beta.infimum()), f64::INFINITY);
    }

    #[test]
    fn profile_inverse_round_trips(c in 0.1f64..5.0, p in 0.5f64..4.0, y in 0.01f64..1e4) {
        let k = PowerLawProfile::power(c, p);
        let r = k.inverse(y).unwrap();
        if r > 0.0 {
            prop_assert!((k.value(r) / y - 1.0).abs() < 1e-8, "{} vs {y}", k.value(r));
        } else {
            prop_assert!(k.value(0.0) >= y);
        }
    }

    #[test]
    fn log_sum_exp_matches_direct_sum(xs in prop::collection::vec(-50.0f64..50.0, 1..20)) {
        let direct: f64 = xs.iter().map(|x| x.exp()).sum();
        prop_assert!((log_sum_exp(xs.iter().copied()) - direct.ln()).abs() < 1e-12 * direct.ln().abs().max(1.0));
    }

    #[test]
    fn tridiagonal_spectrum_sums_to_the_trace(
        diag in prop::collection::vec(0.0f64..10.0, 6..30),
        seed in prop::collection::vec(-3.0f64..-0.1, 29),
    ) {
        let n = diag.len();
        let m = SymTridiag::new(diag.clone(), seed[..n - 1].to_vec()).unwrap();
        let all = m.lowest_eigenvalues(n);
        let trace: f64 = diag.iter().sum();
        prop_assert!((all.iter().sum::<f64>() - trace).abs() < 1e-9 * trace.max(1.0));
        prop_assert!(all.windows(2).all(|w| w[0] <= w[1]));
        let (lo, hi) = m.gershgorin();
        prop_assert!(all.iter().all(|&l| l >= lo - 1e-9 && l <= hi + 1e-9));
    }

    #[test]
    fn inflated_fit_dominates_every_sample(
        c in 0.1f64..10.0,
        rate in -3.0f64..3.0,
        noise in prop::collection::vec(-0.3f64..0.3, 12),
    ) {
        let samples: Vec<(f64, f64)> = noise.iter().enumerate().map(|(i, e)| {
            let x = 0.25 * i as f64;
            (x, c * (rate * x).exp() * e.exp())
        }).collect();
        let f = fit_constants(&samples, FitModel::LogAffine).unwrap();
        for &(x, y) in &samples {
            prop_assert!(f.eval_inflated(x) >= y * (1.0 - 1e-12));
        }
    }

    #[test]
    fn config_echo_round_trips(
        delta in 0.5f64..6.0,
        theta in 0.1f64..3.0,
        n in 16usize..5000,
        r_max in 5.0f64..40.0,
        seed in any::<u64>(),
        count in 1usize..500,
        eps in 0.01f64..0.99,
        example in prop::sample::select(vec!["e1", "e2", "custom"]),
        family in prop::sample::select(vec!["gaussian_bump", "polynomial_bump", "random_mix"]),
    ) {
        let text = format!(
            "example = {example}\ndelta = {delta}\ntheta = {theta}\nseed = {seed}\ncount = {count}\nfamily = {family}\n[grid]\nn = {n}\nr_max = {r_max}\nladder = {}, {}, {r_max}\n[constants]\nepsilon = {eps}\n",
            0.5 * r_max, 0.75 * r_max
        );
        let parsed = parse_config(&text);
        // e2 needs δ > 1.
        if example == "e2" && delta <= 1.0 {
            prop_assert!(parsed.is_err());
        } else {
            let c = parsed.unwrap();
            prop_assert_eq!(parse_config(&c.echo()).unwrap(), c);
        }
    }
}

proptest! {
    // Each case evaluates Ψ by adaptive quadrature.
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn psi_is_non_increasing(theta in 0.2f64..2.0, eps in 0.3f64..0.9, a in 0.05f64..5.0, b in 0.05f64..5.0) {
        let beta = RateFunction::exp_power(theta, eps);
        let base = beta.infimum();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let x = psi(&beta, base * (1.0 + lo)).unwrap().finite().unwrap();
        let y = psi(&beta, base * (1.0 + hi)).unwrap().finite().unwrap();
        prop_assert!(y <= x * (1.0 + 1e-9), "{x} {y}");
    }

    #[test]
    fn psi_inverse_round_trips(theta in 0.2f64..2.0, eps in 0.3f64..0.9, u in 0.01f64..2.0) {
        let beta = RateFunction::exp_power(theta, eps);
        let ln_t = psi_inverse_ln(&beta, u).unwrap();
        let back = psi_ln(&beta, ln_t).unwrap().finite().unwrap();
        prop_assert!((back / u - 1.0).abs() < 1e-6, "{back} vs {u}");
    }

    #[test]
    fn iu_bound_is_non_increasing_in_time(delta in 2.5f64..5.0, a in 0.05f64..2.0, b in 0.05f64..2.0) {
        let beta = sectional(delta);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let x = iu_upper_bound_ln(&beta, 0.5, lo).unwrap();
        let y = iu_upper_bound_ln(&beta, 0.5, hi).unwrap();
        prop_assert!(y <= x + 1e-9 * x.abs().max(1.0), "{x} {y}");
    }
}
