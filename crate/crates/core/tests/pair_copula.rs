mod common;

use common::{brute_tau, grid, interior, sample_pairs};
use copulasmote::pair_copula::*;
use copulasmote::Error;
use proptest::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn spec(f: CopulaFamily, r: Rotation, p: &[f64]) -> PairCopulaSpec {
    PairCopulaSpec::new(f, r, p.to_vec()).unwrap()
}

/// Composite Simpson rule with `m` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

#[test]
fn cdf_worked_values() {
    let ind = PairCopulaSpec::independence();
    assert_eq!(copula_cdf(&ind, 0.5, 0.5).unwrap(), 0.25);

    let clayton = spec(CopulaFamily::Clayton, Rotation::R0, &[2.0]);
    let c = copula_cdf(&clayton, 0.5, 0.5).unwrap();
    assert!((c - 0.377964).abs() < 1e-6);
    // midpoint integral of the density over [0, 0.5]^2 as an independent cross-check
    let m = 500;
    let cell = 0.5 / m as f64;
    let mut integral = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (u, v) = ((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
            integral += copula_log_density(&clayton, u, v).unwrap().exp() * cell * cell;
        }
    }
    assert!((integral - c).abs() < 2e-3, "integral {integral} vs {c}");

    let gauss = spec(CopulaFamily::Gaussian, Rotation::R0, &[0.5]);
    let g = copula_cdf(&gauss, 0.5, 0.5).unwrap();
    assert!((g - (0.25 + 0.5f64.asin() / (2.0 * std::f64::consts::PI))).abs() < 1e-10);
    assert!((g - 1.0 / 3.0).abs() < 1e-10);
}

#[test]
fn gaussian_cdf_matches_quadrature_off_median() {
    // Φ2(x, y; ρ) = ∫_{-∞}^{y} φ(z) Φ((x - ρz)/√(1-ρ²)) dz
    let norm = Normal::new(0.0, 1.0).unwrap();
    for &rho in &[-0.95f64, -0.4, 0.6, 0.97] {
        let s = spec(CopulaFamily::Gaussian, Rotation::R0, &[rho]);
        for &(u, v) in &[(0.2, 0.7), (0.9, 0.4), (0.05, 0.1)] {
            let (x, y) = (norm.inverse_cdf(u), norm.inverse_cdf(v));
            let f = |z: f64| norm.pdf(z) * norm.cdf((x - rho * z) / (1.0 - rho * rho).sqrt());
            let oracle = simpson(f, -12.0, y, 20_000);
            let c = copula_cdf(&s, u, v).unwrap();
            assert!((c - oracle).abs() < 1e-9, "rho {rho} ({u},{v}): {c} vs {oracle}");
        }
    }
}

#[test]
fn cdf_boundary_conditions() {
    for s in grid() {
        for x in interior() {
            let c0 = copula_cdf(&s, x, 0.0).unwrap();
            let c1 = copula_cdf(&s, x, 1.0).unwrap();
            let c2 = copula_cdf(&s, 0.0, x).unwrap();
            let c3 = copula_cdf(&s, 1.0, x).unwrap();
            assert!(c0.abs() < 1e-9 && c2.abs() < 1e-9, "{s:?} at {x}");
            assert!((c1 - x).abs() < 1e-9 && (c3 - x).abs() < 1e-9, "{s:?} at {x}: {c1} {c3}");
        }
    }
}

#[test]
fn log_density_matches_mixed_difference() {
    let s = spec(CopulaFamily::Clayton, Rotation::R0, &[2.0]);
    let (u, v, h) = (0.5, 0.5, 1e-4);
    let c = |a, b| copula_cdf(&s, a, b).unwrap();
    let fd = (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h)) / (4.0 * h * h);
    let dens = copula_log_density(&s, u, v).unwrap().exp();
    assert!(((dens - fd) / dens).abs() < 1e-4, "{dens} vs {fd}");
    assert_eq!(copula_log_density(&spec(CopulaFamily::Gaussian, Rotation::R0, &[0.0]), 0.3, 0.7).unwrap(), 0.0);
}

#[test]
fn density_matches_mixed_difference_on_grid() {
    let step = 1e-4;
    for s in grid() {
        for &(u, v) in &[(0.3, 0.6), (0.75, 0.2), (0.5, 0.5)] {
            let c = |a, b| copula_cdf(&s, a, b).unwrap();
            let fd = (c(u + step, v + step) - c(u + step, v - step) - c(u - step, v + step)
                + c(u - step, v - step))
                / (4.0 * step * step);
            let dens = copula_log_density(&s, u, v).unwrap().exp();
            assert!(((dens - fd) / dens).abs() < 1e-3, "{s:?} at ({u},{v}): {dens} vs {fd}");
        }
    }
}

#[test]
fn h_function_values() {
    let ind = PairCopulaSpec::independence();
    assert_eq!(h_function(&ind, 0.42, 0.9).unwrap(), 0.42);
    let clayton = spec(CopulaFamily::Clayton, Rotation::R0, &[2.0]);
    let h = h_function(&clayton, 0.5, 0.5).unwrap();
    assert!((h - 8.0 * 7f64.powf(-1.5)).abs() < 1e-12);
    assert!((h - 0.431959).abs() < 1e-6);
    let g = spec(CopulaFamily::Gaussian, Rotation::R0, &[0.7]);
    assert!((h_function(&g, 0.5, 0.5).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn h_functions_are_cdf_derivatives() {
    let step = 1e-6;
    for s in grid() {
        for &(u, v) in &[(0.3, 0.6), (0.8, 0.15)] {
            let c = |a, b| copula_cdf(&s, a, b).unwrap();
            let dv = (c(u, v + step) - c(u, v - step)) / (2.0 * step);
            let du = (c(u + step, v) - c(u - step, v)) / (2.0 * step);
            assert!((h_function(&s, u, v).unwrap() - dv).abs() < 1e-5, "{s:?} dC/dv");
            assert!((h_function_given_u(&s, u, v).unwrap() - du).abs() < 1e-5, "{s:?} dC/du");
        }
    }
}

#[test]
fn h_function_bounds_and_monotonicity() {
    for s in grid() {
        for v in interior() {
            assert!(h_function(&s, 0.0, v).unwrap() < 1e-9);
            assert!(h_function(&s, 1.0, v).unwrap() > 1.0 - 1e-9);
            let mut last = 0.0;
            for i in 0..=100 {
                let h = h_function(&s, i as f64 / 100.0, v).unwrap();
                assert!(h >= last - 1e-12, "{s:?} not monotone at v={v}");
                last = h;
            }
        }
    }
}

#[test]
fn inverse_h_values_and_round_trip() {
    assert_eq!(inverse_h_function(&PairCopulaSpec::independence(), 0.3, 0.8).unwrap(), 0.3);
    let clayton = spec(CopulaFamily::Clayton, Rotation::R0, &[2.0]);
    assert!((inverse_h_function(&clayton, 0.431959, 0.5).unwrap() - 0.5).abs() < 1e-5);
    for s in grid() {
        for u in interior() {
            for v in interior() {
                let p = h_function(&s, u, v).unwrap();
                let back = inverse_h_function(&s, p, v).unwrap();
                assert!((back - u).abs() < 1e-6, "{s:?} ({u}, {v}) -> {back}");
                let resid = h_function(&s, back, v).unwrap() - p;
                assert!(resid.abs() < 1e-8, "{s:?} residual {resid}");
            }
        }
    }
}

#[test]
fn density_integrates_to_one() {
    let m = 200;
    for s in grid() {
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                let u = (i as f64 + 0.5) / m as f64;
                let v = (j as f64 + 0.5) / m as f64;
                total += copula_log_density(&s, u, v).unwrap().exp();
            }
        }
        total /= (m * m) as f64;
        assert!((total - 1.0).abs() < 0.01, "{s:?} integrates to {total}");
    }
}

#[test]
fn sampled_tau_matches_analytic() {
    let cases = [
        spec(CopulaFamily::Gaussian, Rotation::R0, &[0.5]),
        spec(CopulaFamily::Gaussian, Rotation::R0, &[-0.8]),
        spec(CopulaFamily::Clayton, Rotation::R0, &[2.0]),
        spec(CopulaFamily::Clayton, Rotation::R90, &[3.0]),
        spec(CopulaFamily::Gumbel, Rotation::R0, &[2.0]),
        spec(CopulaFamily::Gumbel, Rotation::R270, &[1.5]),
    ];
    for (i, s) in cases.iter().enumerate() {
        let (u, v) = sample_pairs(s, 100_000, 100 + i as u64);
        let tau = empirical_kendall_tau(&u, &v).unwrap().tau;
        assert!((tau - s.kendall_tau()).abs() < 0.01, "{s:?}: {tau} vs {}", s.kendall_tau());
    }
}

#[test]
fn tau_inversion_examples() {
    let rho = tau_to_parameter(CopulaFamily::Gaussian, 1.0 / 3.0).unwrap()[0];
    assert!((rho - 0.5).abs() < 1e-12);
    let theta = tau_to_parameter(CopulaFamily::Clayton, 0.5).unwrap()[0];
    assert!((theta - 2.0).abs() < 1e-12);
    assert_eq!(tau_to_parameter(CopulaFamily::Gumbel, 0.0).unwrap(), vec![1.0]);
    for (family, params) in [(CopulaFamily::Gaussian, vec![rho]), (CopulaFamily::Clayton, vec![theta])] {
        let (u, v) = sample_pairs(&spec(family, Rotation::R0, &params), 100_000, 7);
        let tau = empirical_kendall_tau(&u, &v).unwrap().tau;
        let target = if family == CopulaFamily::Gaussian { 1.0 / 3.0 } else { 0.5 };
        assert!((tau - target).abs() < 0.01, "{family}: {tau}");
    }
    assert!(matches!(tau_to_parameter(CopulaFamily::Gumbel, -0.3), Err(Error::UnattainableTau { .. })));
    assert!(matches!(tau_to_parameter(CopulaFamily::Gaussian, 1.0), Err(Error::UnattainableTau { .. })));
}

#[test]
fn frank_tau_inversion_precision() {
    for &tau in &[-0.7, -0.25, 0.1, 0.5, 0.8] {
        let theta = tau_to_parameter(CopulaFamily::Frank, tau).unwrap()[0];
        let s = spec(CopulaFamily::Frank, Rotation::R0, &[theta]);
        assert!((s.kendall_tau() - tau).abs() < 1e-8);
    }
}

#[test]
fn kendall_examples() {
    let t = |x: &[f64], y: &[f64]| empirical_kendall_tau(x, y).unwrap();
    assert_eq!(t(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).tau, 1.0);
    assert!((t(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).tau - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(t(&[1.0, 2.0], &[2.0, 1.0]).tau, -1.0);
    let flat = t(&[2.0, 2.0, 2.0], &[1.0, 5.0, 3.0]);
    assert!(flat.degenerate && flat.tau == 0.0);
}

#[test]
fn fit_independent_uniforms() {
    let mut picked = 0;
    for seed in 0..20 {
        let (u, v) = sample_pairs(&PairCopulaSpec::independence(), 500, 1000 + seed);
        let fit = fit_pair_copula(&u, &v, &default_library()).unwrap();
        picked += fit.spec.is_independence() as usize;
    }
    assert!(picked >= 19, "independence chosen {picked}/20");
}

#[test]
fn fit_recovers_clayton() {
    let truth = spec(CopulaFamily::Clayton, Rotation::R0, &[2.0]);
    let (u, v) = sample_pairs(&truth, 2000, 42);
    let fit = fit_pair_copula(&u, &v, &default_library()).unwrap();
    assert_eq!(fit.spec.family, CopulaFamily::Clayton);
    assert_eq!(fit.spec.rotation, Rotation::R0);
    assert!((1.7..=2.3).contains(&fit.spec.params[0]), "{:?}", fit.spec);
    assert_eq!(fit.spec.n_obs, 2000);
    assert!((fit.spec.bic - (2000f64.ln() - 2.0 * fit.spec.loglik)).abs() < 1e-9);
}

#[test]
fn fit_recovers_rotations_and_two_parameter_family() {
    let truth = spec(CopulaFamily::Gumbel, Rotation::R90, &[2.5]);
    let (u, v) = sample_pairs(&truth, 2000, 5);
    let fit = fit_pair_copula(&u, &v, &default_library()).unwrap();
    assert_eq!((fit.spec.family, fit.spec.rotation), (CopulaFamily::Gumbel, Rotation::R90));
    assert!((fit.spec.params[0] - 2.5).abs() < 0.3);

    let truth = spec(CopulaFamily::StudentT, Rotation::R0, &[0.6, 3.0]);
    let (u, v) = sample_pairs(&truth, 3000, 9);
    let fit = fit_pair_copula(&u, &v, &default_library()).unwrap();
    assert_eq!(fit.spec.family, CopulaFamily::StudentT);
    assert!((fit.spec.params[0] - 0.6).abs() < 0.06);
    assert!((2.0..=5.0).contains(&fit.spec.params[1]), "{:?}", fit.spec);
}

#[test]
fn fit_degenerate_and_invalid_inputs() {
    let u = vec![0.5; 10];
    let v: Vec<f64> = (1..=10).map(|i| i as f64 / 11.0).collect();
    let fit = fit_pair_copula(&u, &v, &default_library()).unwrap();
    assert!(fit.spec.is_independence());
    assert_eq!(fit.flag, Some(FitFlag::Degenerate));
    assert!(fit_pair_copula(&v[..5], &v[..5], &default_library()).is_err());
    assert!(fit_pair_copula(&u, &v[..9], &default_library()).is_err());
    let bad = [(CopulaFamily::Frank, Rotation::R90)];
    assert!(matches!(fit_pair_copula(&v, &v, &bad), Err(Error::InvalidSpec(_))));
}

#[test]
fn fit_all_failed_falls_back() {
    // Clayton alone cannot fit negative dependence: every candidate is skipped.
    let u: Vec<f64> = (1..=50).map(|i| i as f64 / 51.0).collect();
    let v: Vec<f64> = u.iter().rev().copied().collect();
    let fit = fit_pair_copula(&u, &v, &[(CopulaFamily::Clayton, Rotation::R0)]).unwrap();
    assert!(fit.spec.is_independence());
    assert_eq!(fit.flag, Some(FitFlag::AllCandidatesFailed));
}

#[test]
fn bic_tie_breaks_prefer_independence() {
    // exactly independent-looking data: all parametric fits gain little and pay the penalty
    let u: Vec<f64> = (1..=40).map(|i| i as f64 / 41.0).collect();
    let v: Vec<f64> = (0..40).map(|i| ((i * 17) % 40 + 1) as f64 / 41.0).collect();
    let fit = fit_pair_copula(&u, &v, &default_library()).unwrap();
    assert!(fit.spec.is_independence(), "{:?}", fit.spec);
    assert_eq!(fit.spec.bic, 0.0);
    assert_eq!(fit.spec.loglik, 0.0);
}

#[test]
fn bic_scaling() {
    let ind = PairCopulaSpec::independence();
    assert_eq!(ind.bic, 0.0);
    for k in 0..=2 {
        let diff = bic(k, 400, -3.0) - bic(k, 200, -3.0);
        assert!((diff - k as f64 * 2f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn spec_json_round_trip() {
    let s = spec(CopulaFamily::Gumbel, Rotation::R270, &[2.0]);
    let json = serde_json::to_string(&s).unwrap();
    assert!(json.contains("270"));
    let back: PairCopulaSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);
    assert!(serde_json::from_str::<Rotation>("45").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kendall_matches_brute_force(xs in prop::collection::vec((0u8..6, 0u8..6), 2..60)) {
        let x: Vec<f64> = xs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = xs.iter().map(|p| p.1 as f64).collect();
        let fast = empirical_kendall_tau(&x, &y).unwrap().tau;
        prop_assert!((fast - brute_tau(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn round_trip_random_parameters(
        fam in 0usize..5,
        rot in 0usize..4,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        u in 0.001f64..0.999,
        v in 0.001f64..0.999,
    ) {
        let family = [CopulaFamily::Gaussian, CopulaFamily::StudentT, CopulaFamily::Clayton,
            CopulaFamily::Gumbel, CopulaFamily::Frank][fam];
        let rotation = if family.admits_rotation() { Rotation::ALL[rot] } else { Rotation::R0 };
        let params = match family {
            CopulaFamily::Gaussian => vec![1.9 * a - 0.95],
            CopulaFamily::StudentT => vec![1.9 * a - 0.95, 2.0 + 28.0 * b],
            CopulaFamily::Clayton => vec![0.05 + 14.0 * a],
            CopulaFamily::Gumbel => vec![1.0 + 9.0 * a],
            _ => vec![if b < 0.5 { -(0.1 + 20.0 * a) } else { 0.1 + 20.0 * a }],
        };
        let s = PairCopulaSpec::new(family, rotation, params).unwrap();
        let p = h_function(&s, u, v).unwrap();
        let back = inverse_h_function(&s, p, v).unwrap();
        prop_assert!((h_function(&s, back, v).unwrap() - p).abs() < 1e-8);
        let c = copula_cdf(&s, u, v).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!(c <= u.min(v) + 1e-9 && c >= (u + v - 1.0).max(0.0) - 1e-9);
    }
}
