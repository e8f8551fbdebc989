use kdv_vessel::error::VesselError;
use kdv_vessel::evolution::{integrate_b_with, make_lattice, time_grid, ConservationPolicy};
use kdv_vessel::scalar::{cx, re};
use kdv_vessel::soliton::{beta_soliton, log_tau_soliton};
use kdv_vessel::spectral::{beta_odd, q_odd_continuum};
use kdv_vessel::stencil::Stencil;
use kdv_vessel::transfer::symmetry_residual;
use kdv_vessel::vessel::log_tau;
use kdv_vessel::{
    build_discrete_vessel, build_soliton, lyapunov_residual, normalization_residual, tau, tau_cauchy_3, Accuracy,
    DiscreteSpectrum, QuadratureSpectrum, SolitonSpec, SpectrumFlavor,
};
use proptest::prelude::*;

fn distinct(k: &[f64], gap: f64) -> bool {
    k.iter()
        .enumerate()
        .all(|(i, a)| k[i + 1..].iter().all(|b| (a - b).abs() > gap))
}

fn soliton_params(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.3f64..1.8, n),
        prop::collection::vec(0.2f64..5.0, n),
    )
        .prop_filter("wavenumbers must be separated", |(k, _)| distinct(k, 0.05))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soliton_operator_is_hermitian_and_solves_lyapunov(
        (k, c) in soliton_params(3),
        x in -3.0f64..3.0,
        t in -0.5f64..0.5,
    ) {
        let v = build_soliton(&SolitonSpec::from_normalized(k, c).unwrap()).unwrap();
        let op = v.operator(x, t).unwrap();
        prop_assert!((&op - op.adjoint()).norm() <= 1e-12 * (1.0 + op.norm()));
        prop_assert!(lyapunov_residual(&v, x, t).unwrap() < 1e-12);
        prop_assert!(normalization_residual(&v, x, t).unwrap() < 1e-12 * (1.0 + op.norm()));
    }

    #[test]
    fn beta_is_minus_log_derivative_of_tau(
        (k, c) in soliton_params(2),
        x in -2.0f64..2.0,
        t in -0.3f64..0.3,
    ) {
        let spec = SolitonSpec::from_normalized(k, c).unwrap();
        let v = build_soliton(&spec).unwrap();
        let h = 1e-4;
        let d = Stencil::centered(1, Accuracy::Fourth)
            .unwrap()
            .apply_real(x, h, |s| Ok(log_tau(&v, s, t)?.log_abs))
            .unwrap();
        let beta = v.evaluate(x, t).unwrap().beta;
        prop_assert!((beta + d).abs() < 1e-7 * (1.0 + beta.abs()), "beta {beta} vs {}", -d);
        let shifted = beta_soliton(&spec, x, t).unwrap();
        prop_assert!((shifted - beta).abs() < 1e-9 * (1.0 + beta.abs()));
        let lt = log_tau_soliton(&spec, x, t).unwrap();
        prop_assert!((lt - log_tau(&v, x, t).unwrap().log_abs).abs() < 1e-9 * (1.0 + lt.abs()));
    }

    #[test]
    fn three_soliton_tau_matches_cauchy_expansion(
        (k, c) in soliton_params(3),
        x in -2.0f64..2.0,
        t in -0.5f64..0.5,
    ) {
        let spec = SolitonSpec::from_normalized(k, c).unwrap();
        let v = build_soliton(&spec).unwrap();
        let a = tau(&v, x, t).unwrap();
        let b = tau_cauchy_3(&spec, x, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b.abs());
    }

    #[test]
    fn transfer_function_symmetry_off_spectrum(
        amps in prop::collection::vec(0.05f64..0.5, 3),
        r in 0.3f64..4.0,
        angle in 0.0f64..std::f64::consts::TAU,
        x in -2.0f64..2.0,
        t in -0.5f64..0.5,
    ) {
        let spec = DiscreteSpectrum::new(
            vec![1.0, 2.0, 3.0],
            amps.iter().map(|a| re(*a)).collect(),
            SpectrumFlavor::AlmostPeriodic,
        ).unwrap();
        let v = build_discrete_vessel(&spec).unwrap();
        let lambda = cx(r * angle.cos(), r * angle.sin());
        let clear = v.spectrum().iter().all(|s| (lambda - s).norm() > 0.25 && (-lambda.conj() - s).norm() > 0.25);
        prop_assume!(clear);
        prop_assert!(symmetry_residual(&v, lambda, x, t).unwrap() < 1e-10);
    }

    #[test]
    fn symmetric_amplitudes_stay_symmetric(
        half in prop::collection::vec(0.01f64..0.2, 3),
        t_end in 0.05f64..0.3,
    ) {
        let lattice = make_lattice(1.0, 3).unwrap();
        let p0: Vec<f64> = half.iter().rev().chain(half.iter()).copied().collect();
        let traj = integrate_b_with(&lattice, &p0, &time_grid(t_end, 60).unwrap(), ConservationPolicy::Monitor);
        prop_assume!(!matches!(traj, Err(VesselError::NegativeAmplitude { .. })));
        prop_assert_eq!(traj.unwrap().max_symmetry(), 0.0);
    }

    #[test]
    fn second_order_stencil_is_exact_on_quadratics(
        coef in prop::collection::vec(-5.0f64..5.0, 3),
        x in -2.0f64..2.0,
        h in 0.01f64..0.2,
    ) {
        let f = |s: f64| coef[0] + coef[1] * s + coef[2] * s * s;
        let d1 = Stencil::centered(1, Accuracy::Second).unwrap().apply_real(x, h, |s| Ok(f(s))).unwrap();
        let d2 = Stencil::centered(2, Accuracy::Second).unwrap().apply_real(x, h, |s| Ok(f(s))).unwrap();
        prop_assert!((d1 - (coef[1] + 2.0 * coef[2] * x)).abs() < 1e-10 / h);
        prop_assert!((d2 - 2.0 * coef[2]).abs() < 1e-10 / (h * h));
    }

    #[test]
    fn fourth_order_stencil_is_exact_on_quartics(
        coef in prop::collection::vec(-5.0f64..5.0, 5),
        x in -2.0f64..2.0,
        h in 0.01f64..0.2,
    ) {
        let f = |s: f64| coef.iter().rev().fold(0.0, |acc, c| acc * s + c);
        let df = |s: f64| coef.iter().enumerate().skip(1).rev().fold(0.0, |acc, (i, c)| acc * s + i as f64 * c);
        let d1 = Stencil::centered(1, Accuracy::Fourth).unwrap().apply_real(x, h, |s| Ok(f(s))).unwrap();
        prop_assert!((d1 - df(x)).abs() < 1e-10 / h);
    }

    #[test]
    fn odd_construction_has_even_beta(
        amps in prop::collection::vec(0.05f64..1.0, 4),
        x in 0.0f64..6.0,
    ) {
        let spec = DiscreteSpectrum::new(
            vec![0.5, 1.0, 1.7, 2.3],
            amps.iter().map(|a| re(*a)).collect(),
            SpectrumFlavor::AlmostPeriodic,
        ).unwrap();
        prop_assert!((beta_odd(&spec, x) - beta_odd(&spec, -x)).abs() < 1e-12);
    }

    #[test]
    fn odd_continuum_potential_is_odd(scale in 0.1f64..2.0, x in 0.0f64..6.0) {
        let spec = QuadratureSpectrum::gauss_legendre(32, 3.0, |s: f64| re(scale * (-s * s).exp())).unwrap();
        prop_assert!((q_odd_continuum(&spec, x) + q_odd_continuum(&spec, -x)).abs() < 1e-10);
    }
}
