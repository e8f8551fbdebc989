use kdv_vessel::evolution::{beta_from_b, integrate_b, integrate_b_with, make_lattice, time_grid, ConservationPolicy};
use kdv_vessel::soliton::beta_soliton;
use kdv_vessel::verify::{beta_pde_residual, kdv_residual, q_from_beta, sample_field};
use kdv_vessel::vessel::potential;
use kdv_vessel::{
    build_soliton, one_soliton_reference, q_soliton, Accuracy, FiniteVesselF32, Grid2D, SolitonSpec, SolitonSpecF32,
    VesselError,
};

#[test]
fn single_precision_soliton_tracks_double() {
    let spec32 = SolitonSpecF32::from_normalized(vec![0.7, 1.3], vec![1.0, 2.0]).unwrap();
    let spec64 = SolitonSpec::from_normalized(vec![0.7, 1.3], vec![1.0, 2.0]).unwrap();
    let v32: FiniteVesselF32 = build_soliton(&spec32).unwrap();
    let v64 = build_soliton(&spec64).unwrap();
    for (x, t) in [(-1.0, 0.1), (0.0, 0.0), (0.8, -0.2)] {
        let a = v32.evaluate(x as f32, t as f32).unwrap().beta as f64;
        let b = v64.evaluate(x, t).unwrap().beta;
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        let qa = q_soliton(&spec32, x as f32, t as f32).unwrap() as f64;
        assert!((qa - q_soliton(&spec64, x, t).unwrap()).abs() < 1e-3);
    }
}

#[test]
fn vessel_potential_agrees_with_shifted_formula() {
    let spec = SolitonSpec::from_normalized(vec![0.5, 1.0, 1.4], vec![0.3, 1.0, 3.0]).unwrap();
    let v = build_soliton(&spec).unwrap();
    for x in [-2.0_f64, -0.5, 0.0, 1.1, 2.5] {
        let a = potential(&v, x, 0.2).unwrap();
        let b = q_soliton(&spec, x, 0.2).unwrap();
        assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
    }
}

#[test]
fn sampled_beta_reproduces_potential_and_pde() {
    let spec = SolitonSpec::from_normalized(vec![1.0], vec![1.0]).unwrap();
    let grid = Grid2D::with_steps(-6.0, 6.0, 0.02, -0.5, 0.5, 0.02).unwrap();
    let beta = sample_field(&grid, "beta", |x, t| beta_soliton(&spec, x, t)).unwrap();
    let q = q_from_beta(&beta).unwrap();
    let reference = sample_field(&grid, "q", |x, t| Ok(one_soliton_reference(1.0, 1.0, x, t))).unwrap();
    let mut worst: f64 = 0.0;
    for (ix, it) in cells(&grid) {
        if let Some(v) = q.get(ix, it) {
            worst = worst.max((v - reference.get(ix, it).unwrap()).abs());
        }
    }
    assert!(worst < 2e-3, "{worst}");
    assert!(beta_pde_residual(&beta, Accuracy::Fourth).unwrap().max_abs() < 1e-4);
    assert!(kdv_residual(&reference, Accuracy::Fourth).unwrap().max_abs() < 1e-3);
}

fn cells(grid: &Grid2D<f64>) -> impl Iterator<Item = (usize, usize)> + '_ {
    let (nx, nt) = grid.shape();
    (0..nx).flat_map(move |i| (0..nt).map(move |j| (i, j)))
}

#[test]
fn lattice_beta_is_finite_and_bounded() {
    let lattice = make_lattice(1.0_f64, 4).unwrap();
    let p0 = vec![0.02, 0.05, 0.1, 0.2, 0.2, 0.1, 0.05, 0.02];
    let traj = integrate_b_with(
        &lattice,
        &p0,
        &time_grid(0.05, 50).unwrap(),
        ConservationPolicy::Monitor,
    )
    .unwrap();
    let bound: f64 = p0.iter().enumerate().map(|(i, p)| 2.0 * p / lattice.k(i).powi(2)).sum();
    for x in [-1.0, 0.0, 0.7] {
        let b = beta_from_b(&lattice, &traj, x, 0.03).unwrap();
        assert!(b.is_finite() && b.abs() <= bound);
    }
}

#[test]
fn invalid_specs_are_configuration_errors() {
    let e = SolitonSpec::from_normalized(vec![-1.0], vec![1.0]).unwrap_err();
    assert!(e.is_configuration());
    let e = Grid2D::new(0.0, 1.0, 3, 0.0, 1.0, 3).unwrap_err();
    assert!(matches!(
        e,
        VesselError::GridTooSmall(_) | VesselError::InvalidParameter { .. }
    ));
}

#[test]
fn enforced_conservation_rejects_generic_data() {
    let lattice = make_lattice(1.0_f64, 2).unwrap();
    let err = integrate_b(&lattice, &[0.1, 0.2, 0.2, 0.1], &time_grid(0.5, 100).unwrap()).unwrap_err();
    assert!(matches!(err, VesselError::ConservationBreach { .. }));
}
