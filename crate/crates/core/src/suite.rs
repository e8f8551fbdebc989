//! Named acceptance checks. Each check runs a fixed experiment on reference
//! constructions and compares every measured quantity with a pinned bound.
//!
//! ```no_run
//! use kdv_vessel::suite::{run_check, Check, SuiteOptions};
//!
//! let outcome = run_check(Check::CauchyDeterminant, &SuiteOptions::default()).unwrap();
//! println!("{} {}", outcome.check, if outcome.pass { "PASS" } else { "FAIL" });
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VesselError};
use crate::evolution::{dbnt_rhs, integrate_b_with, make_lattice, time_grid, ConservationPolicy, Lattice};
use crate::scalar::{cx, re, Cx};
use crate::soliton::{build_soliton, one_soliton_reference, q_soliton, tau_cauchy_3, SolitonSpec};
use crate::spectral::{
    build_discrete_vessel, build_quadrature_vessel, fixed_vector_residual, DiscreteSpectrum, QuadratureSpectrum,
    SpectrumFlavor,
};
use crate::stencil::Accuracy;
use crate::transfer::{
    ds_residual, gl_residual, intertwining_residual, moment_recursion_residual, q_from_k_diag, symmetry_residual,
};
use crate::verify::{convergence_order, kdv_residual, sample_field, Grid1D, Grid2D, ROUNDOFF_FLOOR};
use crate::vessel::{
    evolution_residuals_with, integrate_standard_construction, lyapunov_residual, normalization_residual, FiniteVessel,
    ResidualReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Fewer random probes and smaller grids; tolerances unchanged.
    #[default]
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = VesselError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(VesselError::invalid(
                "level",
                format!("expected quick or full, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    SolitonIdentity,
    CauchyDeterminant,
    VesselIdentities,
    EvolutionConditions,
    KdvResidual,
    TransferSymmetry,
    GelfandLevitan,
    FixedVector,
    MomentRecursion,
    CoefficientSystem,
    Periodicity,
    QFromK,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::SolitonIdentity,
        Check::CauchyDeterminant,
        Check::VesselIdentities,
        Check::EvolutionConditions,
        Check::KdvResidual,
        Check::TransferSymmetry,
        Check::GelfandLevitan,
        Check::FixedVector,
        Check::MomentRecursion,
        Check::CoefficientSystem,
        Check::Periodicity,
        Check::QFromK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::SolitonIdentity => "soliton_identity",
            Check::CauchyDeterminant => "cauchy_determinant",
            Check::VesselIdentities => "vessel_identities",
            Check::EvolutionConditions => "evolution_conditions",
            Check::KdvResidual => "kdv_residual",
            Check::TransferSymmetry => "transfer_symmetry",
            Check::GelfandLevitan => "gelfand_levitan",
            Check::FixedVector => "fixed_vector",
            Check::MomentRecursion => "moment_recursion",
            Check::CoefficientSystem => "coefficient_system",
            Check::Periodicity => "periodicity",
            Check::QFromK => "q_from_k",
        }
    }

    fn stream(self) -> u64 {
        Check::ALL.iter().position(|c| *c == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = VesselError;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| VesselError::invalid("check", format!("unknown check {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl Measurement {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64, bound: Bound) -> Self {
        let pass = match bound {
            Bound::AtMost => value <= tolerance,
            Bound::AtLeast => value >= tolerance,
        };
        Self {
            name: name.into(),
            value,
            tolerance,
            bound,
            pass,
        }
    }

    /// How far the value sits toward (below 1) or past (above 1) its bound.
    pub fn severity(&self) -> f64 {
        if self.value.is_nan() {
            return f64::INFINITY;
        }
        match self.bound {
            Bound::AtMost => self.value / self.tolerance,
            Bound::AtLeast => self.tolerance / self.value.max(f64::MIN_POSITIVE),
        }
    }
}

/// Result of one named check. `value` and `tolerance` repeat the measurement
/// with the largest severity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_ms: f64,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
}

impl CheckOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &Measurement> {
        self.measurements.iter().filter(|m| !m.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub level: Level,
    pub seed: u64,
    /// Tolerance replacements keyed by `check` (every upper bound of the
    /// check) or `check.measurement`.
    pub overrides: BTreeMap<String, f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            level: Level::Quick,
            seed: 0x5eed,
            overrides: BTreeMap::new(),
        }
    }
}

impl SuiteOptions {
    fn tolerance(&self, check: Check, name: &str, bound: Bound, pinned: f64) -> f64 {
        if let Some(v) = self.overrides.get(&format!("{}.{}", check.name(), name)) {
            return *v;
        }
        match (bound, self.overrides.get(check.name())) {
            (Bound::AtMost, Some(v)) => *v,
            _ => pinned,
        }
    }
}

struct Recorder<'a> {
    check: Check,
    opts: &'a SuiteOptions,
    rng: ChaCha8Rng,
    measurements: Vec<Measurement>,
    notes: Vec<String>,
}

impl<'a> Recorder<'a> {
    fn new(check: Check, opts: &'a SuiteOptions) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(check.stream());
        Self {
            check,
            opts,
            rng,
            measurements: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn probes(&self, quick: usize, full: usize) -> usize {
        match self.opts.level {
            Level::Quick => quick,
            Level::Full => full,
        }
    }

    fn points(&mut self, n: usize, x: (f64, f64), t: (f64, f64)) -> Vec<(f64, f64)> {
        (0..n)
            .map(|_| (self.rng.random_range(x.0..x.1), self.rng.random_range(t.0..t.1)))
            .collect()
    }

    fn at_most(&mut self, name: impl Into<String>, value: f64, pinned: f64) {
        self.record(name.into(), value, pinned, Bound::AtMost);
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, pinned: f64) {
        self.record(name.into(), value, pinned, Bound::AtLeast);
    }

    fn record(&mut self, name: String, value: f64, pinned: f64, bound: Bound) {
        let tol = self.opts.tolerance(self.check, &name, bound, pinned);
        self.measurements.push(Measurement::new(name, value, tol, bound));
    }

    /// Records an observed order, passing automatically when the finer
    /// residual already sits at the roundoff floor.
    fn order(&mut self, name: impl Into<String>, coarse: f64, fine: f64, pinned: f64) {
        let name = name.into();
        if fine <= ROUNDOFF_FLOOR || coarse <= 0.0 {
            self.notes.push(format!(
                "{name}: residual at roundoff floor ({fine:e}); order not resolved"
            ));
            self.record(name, f64::INFINITY, pinned, Bound::AtLeast);
            return;
        }
        let order = convergence_order(coarse, fine).map(|c| c.order).unwrap_or(f64::NAN);
        self.record(name, order, pinned, Bound::AtLeast);
    }

    fn finish(self, started: Instant) -> CheckOutcome {
        let worst = self
            .measurements
            .iter()
            .max_by(|a, b| a.severity().total_cmp(&b.severity()))
            .cloned();
        let (value, tolerance) = worst.map(|m| (m.value, m.tolerance)).unwrap_or((0.0, 0.0));
        CheckOutcome {
            check: self.check.name().to_string(),
            value,
            tolerance,
            pass: !self.measurements.is_empty() && self.measurements.iter().all(|m| m.pass),
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
            measurements: self.measurements,
            notes: self.notes,
        }
    }
}

/// The reference constructions shared by the checks.
pub mod reference {
    use super::*;

    pub fn one_soliton(k: f64) -> Result<FiniteVessel<f64>> {
        build_soliton(&SolitonSpec::from_normalized(vec![k], vec![1.0])?)
    }

    pub fn soliton(k: &[f64]) -> Result<FiniteVessel<f64>> {
        build_soliton(&soliton_spec(k)?)
    }

    pub fn soliton_spec(k: &[f64]) -> Result<SolitonSpec<f64>> {
        SolitonSpec::from_normalized(k.to_vec(), vec![1.0; k.len()])
    }

    /// `kₙ = n·k0`, `bₙ = 1/(2n)`, almost periodic.
    pub fn discrete_spectrum(n: usize, k0: f64) -> Result<DiscreteSpectrum<f64>> {
        DiscreteSpectrum::new(
            (1..=n).map(|i| i as f64 * k0).collect(),
            (1..=n).map(|i| re(0.5 / i as f64)).collect(),
            SpectrumFlavor::AlmostPeriodic,
        )
    }

    pub fn discrete(n: usize, k0: f64) -> Result<FiniteVessel<f64>> {
        build_discrete_vessel(&discrete_spectrum(n, k0)?)
    }

    /// Gauss–Legendre nodes on `(0, 3)` with density `0.3e^{−s²/2}`.
    pub fn quadrature_spectrum(nodes: usize) -> Result<QuadratureSpectrum<f64>> {
        QuadratureSpectrum::gauss_legendre(nodes, 3.0, |s: f64| re(0.3 * (-0.5 * s * s).exp()))
    }

    pub fn quadrature(nodes: usize) -> Result<FiniteVessel<f64>> {
        build_quadrature_vessel(&quadrature_spectrum(nodes)?)
    }

    /// The named constructions used by checks that sweep "every vessel".
    pub fn catalogue() -> Result<Vec<(&'static str, FiniteVessel<f64>)>> {
        Ok(vec![
            ("soliton1", one_soliton(0.8)?),
            ("soliton2", soliton(&[0.5, 1.2])?),
            ("discrete", discrete(3, 1.0)?),
            ("quadrature", quadrature(16)?),
        ])
    }
}

pub fn run_check(check: Check, opts: &SuiteOptions) -> Result<CheckOutcome> {
    let started = Instant::now();
    let mut rec = Recorder::new(check, opts);
    match check {
        Check::SolitonIdentity => soliton_identity(&mut rec)?,
        Check::CauchyDeterminant => cauchy_determinant(&mut rec)?,
        Check::VesselIdentities => vessel_identities(&mut rec)?,
        Check::EvolutionConditions => evolution_conditions(&mut rec)?,
        Check::KdvResidual => kdv_residual_check(&mut rec)?,
        Check::TransferSymmetry => transfer_symmetry(&mut rec)?,
        Check::GelfandLevitan => gelfand_levitan(&mut rec)?,
        Check::FixedVector => fixed_vector(&mut rec)?,
        Check::MomentRecursion => moment_recursion(&mut rec)?,
        Check::CoefficientSystem => coefficient_system(&mut rec)?,
        Check::Periodicity => periodicity(&mut rec)?,
        Check::QFromK => q_from_k(&mut rec)?,
    }
    let elapsed = started.elapsed().as_secs_f64();
    let limit = match check {
        Check::SolitonIdentity => Some(2.0),
        Check::CauchyDeterminant => Some(1.0),
        Check::KdvResidual => Some(30.0),
        _ => None,
    };
    if let Some(limit) = limit {
        rec.at_most("runtime_s", elapsed, limit);
    }
    Ok(rec.finish(started))
}

/// Runs `checks` in order; numerical errors abort the run.
pub fn run_checks(checks: &[Check], opts: &SuiteOptions) -> Result<Vec<CheckOutcome>> {
    checks.iter().map(|c| run_check(*c, opts)).collect()
}

pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckOutcome>> {
    run_checks(&Check::ALL, opts)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(
        0.0,
        |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) },
    )
}

fn soliton_identity(rec: &mut Recorder) -> Result<()> {
    let (nx, nt) = (rec.probes(201, 401), rec.probes(41, 81));
    let grid = Grid2D::new(-10.0, 10.0, nx, -2.0, 2.0, nt)?;
    for k in [0.5, 1.0, 2.0] {
        let spec = SolitonSpec::from_normalized(vec![k], vec![1.0])?;
        let err = sample_field(&grid, "q error", |x, t| {
            Ok(q_soliton(&spec, x, t)? - one_soliton_reference(k, 1.0, x, t))
        })?;
        rec.at_most(format!("k={k}"), err.max_abs(), 1e-8);
    }
    Ok(())
}

fn cauchy_determinant(rec: &mut Recorder) -> Result<()> {
    let spec = SolitonSpec::from_normalized(vec![1.0, 2.0, 3.0], vec![1.0; 3])?;
    let vessel = build_soliton(&spec)?;
    let n = rec.probes(100, 100);
    let pts = rec.points(n, (-3.0, 3.0), (-3.0, 3.0));
    let errs = pts
        .par_iter()
        .map(|&(x, t)| {
            let a = crate::vessel::tau(&vessel, x, t)?;
            let b = tau_cauchy_3(&spec, x, t)?;
            Ok((a - b).abs() / b.abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    rec.at_most("relative_error", max_of(errs), 1e-10);
    Ok(())
}

fn vessel_identities(rec: &mut Recorder) -> Result<()> {
    let vessels = [
        ("soliton", reference::soliton(&[0.5, 1.0, 1.5])?),
        ("discrete", reference::discrete(4, 1.0)?),
        ("quadrature", reference::quadrature(32)?),
    ];
    let n = rec.probes(50, 50);
    for (name, v) in &vessels {
        let pts = rec.points(n, (-3.0, 3.0), (-1.0, 1.0));
        let mut lyap: f64 = 0.0;
        let mut norm: f64 = 0.0;
        for (x, t) in pts {
            lyap = lyap.max(lyapunov_residual(v, x, t)?);
            let scale = 1.0 + v.operator(x, t)?.norm();
            norm = norm.max(normalization_residual(v, x, t)? / scale);
        }
        rec.at_most(format!("{name}.lyapunov"), lyap, 1e-12);
        rec.at_most(format!("{name}.normalization"), norm, 1e-12);
    }
    Ok(())
}

fn worst_differential(v: &FiniteVessel<f64>, pts: &[(f64, f64)], h: f64, acc: Accuracy) -> Result<f64> {
    let reports = pts
        .iter()
        .map(|&(x, t)| evolution_residuals_with(v, x, t, h, acc))
        .collect::<Result<Vec<ResidualReport<f64>>>>()?;
    Ok(max_of(
        reports
            .iter()
            .flat_map(|r| r.differential().into_iter().map(|(_, v)| v)),
    ))
}

fn evolution_conditions(rec: &mut Recorder) -> Result<()> {
    let soliton = reference::soliton(&[0.5, 1.0])?;
    let grid = Grid1D::new(-3.0, 3.0, 1201)?;
    let tabulated = integrate_standard_construction(
        soliton.a(),
        &soliton.couplings(0.0, 0.0)?,
        &soliton.operator(0.0, 0.0)?,
        0.0,
        &grid,
    )?;
    let vessels = [
        ("soliton", soliton),
        ("discrete", reference::discrete(3, 1.0)?),
        ("quadrature", reference::quadrature(16)?),
        ("tabulated", tabulated),
    ];
    let n = rec.probes(5, 20);
    for (name, v) in &vessels {
        let mut pts = rec.points(n, (-2.0, 2.0), (-0.5, 0.5));
        if !v.supports_time() {
            pts.iter_mut().for_each(|p| p.1 = 0.0);
        }
        rec.at_most(
            format!("{name}.residual"),
            worst_differential(v, &pts, 1e-3, Accuracy::Fourth)?,
            1e-6,
        );
        let coarse = worst_differential(v, &pts, 1e-2, Accuracy::Second)?;
        let fine = worst_differential(v, &pts, 5e-3, Accuracy::Second)?;
        rec.order(format!("{name}.order"), coarse, fine, 1.9);
    }
    rec.notes
        .push("tabulated vessel lives on t = 0; only DB and DX apply".into());
    Ok(())
}

fn kdv_residual_check(rec: &mut Recorder) -> Result<()> {
    let t_max = match rec.opts.level {
        Level::Quick => 0.25,
        Level::Full => 1.0,
    };
    for k in [vec![0.6, 1.0], vec![0.5, 0.8, 1.1]] {
        let spec = reference::soliton_spec(&k)?;
        let mut worst = [0.0; 2];
        for (slot, h) in [0.02, 0.01].into_iter().enumerate() {
            let grid = Grid2D::with_steps(-8.0, 8.0, h, -t_max, t_max, h)?;
            let q = sample_field(&grid, "q", |x, t| q_soliton(&spec, x, t))?;
            worst[slot] = kdv_residual(&q, Accuracy::Fourth)?.max_abs();
        }
        let label = format!("{}-soliton", k.len());
        rec.at_most(format!("{label}.residual"), worst[1], 1e-3);
        rec.order(format!("{label}.order"), worst[0], worst[1], 3.5);
    }
    Ok(())
}

/// Minimum distance between a sampled λ and the spectrum or its mirror.
pub const LAMBDA_CLEARANCE: f64 = 0.25;

/// `count` seeded samples with `0.3 ≤ |λ| < 4`, each at least
/// [`LAMBDA_CLEARANCE`] from `spectrum` and from its mirror `−λ̄`.
pub fn sample_lambdas(seed: u64, count: usize, spectrum: &[Cx<f64>]) -> Vec<Cx<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_lambda(&mut rng, spectrum)).collect()
}

fn random_lambda(rng: &mut ChaCha8Rng, spectrum: &[Cx<f64>]) -> Cx<f64> {
    loop {
        let r: f64 = rng.random_range(0.3..4.0);
        let a: f64 = rng.random_range(0.0..2.0 * PI);
        let l = cx(r * a.cos(), r * a.sin());
        let clear = spectrum
            .iter()
            .all(|s| (l - s).norm() > LAMBDA_CLEARANCE && (-l.conj() - s).norm() > LAMBDA_CLEARANCE);
        if clear {
            return l;
        }
    }
}

fn transfer_symmetry(rec: &mut Recorder) -> Result<()> {
    let n = rec.probes(25, 100);
    let x_grid = Grid1D::with_step(-1.0, 1.0, 1e-3)?;
    let minus_i = cx(0.0, -1.0);
    for (name, v) in reference::catalogue()? {
        let mut worst = (0.0, cx(0.0, 0.0), 0.0, 0.0);
        for _ in 0..n {
            let lambda = random_lambda(&mut rec.rng, v.spectrum());
            let x = rec.rng.random_range(-2.0..2.0);
            let t = rec.rng.random_range(-0.5..0.5);
            let r = symmetry_residual(&v, lambda, x, t)?;
            if !(r <= worst.0) {
                worst = (r, lambda, x, t);
            }
        }
        let (r, lambda, x, t) = worst;
        rec.notes.push(format!(
            "{name}: worst symmetry residual at λ = {lambda:.4}, (x, t) = ({x:.4}, {t:.4})"
        ));
        rec.at_most(format!("{name}.symmetry"), r, 1e-10);

        let lambda = cx(0.7, 1.3);
        let coarse = ds_residual(&v, lambda, 0.3, 0.1, 1e-2)?;
        let fine = ds_residual(&v, lambda, 0.3, 0.1, 5e-3)?;
        rec.order(format!("{name}.ds_order"), coarse, fine, 1.9);

        rec.at_most(
            format!("{name}.intertwining"),
            intertwining_residual(&v, minus_i, &x_grid, 0.0)?,
            1e-5,
        );
    }
    rec.notes
        .push("λ = −i is a pole of the k = 1 soliton; the soliton constructions use k ≠ 1".into());
    Ok(())
}

fn gelfand_levitan(rec: &mut Recorder) -> Result<()> {
    let vessels = [
        ("soliton1", reference::one_soliton(1.0)?),
        ("soliton2", reference::soliton(&[0.5, 1.0])?),
    ];
    for (name, v) in &vessels {
        let coarse = gl_residual(v, 0.0, 1.5, 0.7, 101, 0.0)?;
        let fine = gl_residual(v, 0.0, 1.5, 0.7, 201, 0.0)?;
        rec.at_most(format!("{name}.residual"), fine, 1e-8);
        rec.at_least(format!("{name}.refinement"), coarse / fine, 12.0);
    }
    Ok(())
}

fn fixed_vector(rec: &mut Recorder) -> Result<()> {
    let n = rec.probes(10, 50);
    for size in [4, 16] {
        let v = reference::discrete(size, 0.5)?;
        let xs = rec.points(n, (-5.0, 5.0), (0.0, 1.0));
        let worst = max_of(
            xs.iter()
                .map(|&(x, _)| fixed_vector_residual(&v, x))
                .collect::<Result<Vec<_>>>()?,
        );
        rec.at_most(format!("discrete{size}"), worst, 1e-10);
    }
    let v = reference::quadrature(64)?;
    let xs = rec.points(n, (-5.0, 5.0), (0.0, 1.0));
    let worst = max_of(
        xs.iter()
            .map(|&(x, _)| fixed_vector_residual(&v, x))
            .collect::<Result<Vec<_>>>()?,
    );
    rec.at_most("quadrature64", worst, 1e-8);
    Ok(())
}

fn moment_recursion(rec: &mut Recorder) -> Result<()> {
    let v = reference::one_soliton(1.0)?;
    let pts = rec.points(10, (-2.0, 2.0), (-0.5, 0.5));
    for n in 0..4 {
        let worst = max_of(
            pts.iter()
                .map(|&(x, t)| moment_recursion_residual(&v, x, t, n, 1e-4))
                .collect::<Result<Vec<_>>>()?,
        );
        rec.at_most(format!("n={n}"), worst, 1e-6);
    }
    Ok(())
}

/// `ṗ_N` by direct enumeration of integer pairs `n + m = N`.
fn brute_force_rhs(lattice: &Lattice<f64>, p: &[f64], t: f64) -> Vec<f64> {
    let idx = lattice.indices();
    let k0 = lattice.k0();
    idx.iter()
        .map(|&target| {
            let kn = target as f64 * k0;
            let mut sum = 0.0;
            for (a, &n) in idx.iter().enumerate() {
                for (b, &m) in idx.iter().enumerate() {
                    if n + m == target {
                        let (ka, kb) = (n as f64 * k0, m as f64 * k0);
                        sum += p[a] * p[b] / (ka * kb) * (6.0 * ka * kb * kn * t).cos();
                    }
                }
            }
            -1.5 * kn * kn * sum
        })
        .collect()
}

fn coefficient_system(rec: &mut Recorder) -> Result<()> {
    let lattice = make_lattice(1.0, 2)?;
    let mut mismatch: f64 = 0.0;
    for _ in 0..rec.probes(10, 50) {
        let half: Vec<f64> = (0..2).map(|_| rec.rng.random_range(0.05..1.0)).collect();
        let p = vec![half[1], half[0], half[0], half[1]];
        let t = rec.rng.random_range(-1.0..1.0);
        let fast = dbnt_rhs(&lattice, &p, t)?;
        let slow = brute_force_rhs(&lattice, &p, t);
        mismatch = mismatch.max(max_of(fast.iter().zip(&slow).map(|(a, b)| (a - b).abs())));
    }
    rec.at_most("rhs_mismatch", mismatch, 0.0);

    let p0 = [0.1, 0.2, 0.2, 0.1];
    let traj = integrate_b_with(&lattice, &p0, &time_grid(0.5, 500)?, ConservationPolicy::Monitor)?;
    rec.at_most("conservation", traj.max_conservation(), 1e-12);
    rec.at_most("symmetry", traj.max_symmetry(), 1e-12);

    let run = |steps| -> Result<Vec<f64>> {
        Ok(
            integrate_b_with(&lattice, &p0, &time_grid(0.5, steps)?, ConservationPolicy::Monitor)?
                .last()
                .to_vec(),
        )
    };
    let (a, b, c) = (run(50)?, run(100)?, run(200)?);
    let e1 = max_of(a.iter().zip(&c).map(|(a, c)| (a - c).abs()));
    let e2 = max_of(b.iter().zip(&c).map(|(b, c)| (b - c).abs()));
    let order = ((e1 - e2) / e2).log2();
    rec.at_least("rk4_order_low", order, 3.7);
    rec.at_most("rk4_order_high", order, 4.3);
    Ok(())
}

fn periodicity(rec: &mut Recorder) -> Result<()> {
    let period = 2.0 * PI;
    let spec = DiscreteSpectrum::periodic(period, &[1, 2, 3, 4], (1..=4).map(|n| re(0.5 / n as f64)).collect())?;
    let v = build_discrete_vessel(&spec)?;
    let t_period = period.powi(3) / (2.0 * PI).powi(2);
    let pts = rec.points(20, (-2.0, 2.0), (-1.0, 1.0));
    let (mut dx, mut dt): (f64, f64) = (0.0, 0.0);
    for (x, t) in pts {
        let b = v.evaluate(x, t)?.beta;
        dx = dx.max((v.evaluate(x + period, t)?.beta - b).abs());
        dt = dt.max((v.evaluate(x, t + t_period)?.beta - b).abs());
    }
    rec.at_most("x_shift", dx, 1e-10);
    rec.at_most("t_shift", dt, 1e-10);
    Ok(())
}

fn q_from_k(rec: &mut Recorder) -> Result<()> {
    let mut wrong_sign = 0usize;
    let mut minus_gap: f64 = 0.0;
    let pts = rec.points(rec.probes(3, 10), (-2.0, 2.0), (0.0, 1.0));
    let soliton_specs = [
        ("soliton1", reference::soliton_spec(&[0.8])?),
        ("soliton2", reference::soliton_spec(&[0.5, 1.2])?),
    ];
    for (name, v) in reference::catalogue()? {
        let spec = soliton_specs.iter().find(|(n, _)| *n == name).map(|(_, s)| s);
        let (mut coarse, mut fine): (f64, f64) = (0.0, 0.0);
        for &(x, _) in &pts {
            let a = q_from_k_diag(&v, x, 0.0, 1e-2)?;
            let b = q_from_k_diag(&v, x, 0.0, 5e-3)?;
            let reference = match spec {
                Some(s) => q_soliton(s, x, 0.0)?,
                None => b.reference,
            };
            wrong_sign += usize::from(a.sign != 1) + usize::from(b.sign != 1);
            minus_gap = minus_gap.max((b.minus - reference).abs());
            coarse = coarse.max((a.value - reference).abs());
            fine = fine.max((b.value - reference).abs());
        }
        rec.at_most(format!("{name}.discrepancy"), fine, 1e-4);
        rec.order(format!("{name}.order"), coarse, fine, 1.9);
    }
    rec.at_most("sign_mismatches", wrong_sign as f64, 0.0);
    rec.notes.push(format!(
        "matched sign +1: q = 2 d/dx K(x,x); the candidate q = −2 d/dx K(x,x) misses the analytic potential by up to {minus_gap:.3e}"
    ));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert!("nope".parse::<Check>().is_err());
        assert_eq!("full".parse::<Level>().unwrap(), Level::Full);
    }

    #[test]
    fn overrides_replace_upper_bounds() {
        let mut opts = SuiteOptions::default();
        opts.overrides.insert("periodicity".into(), 10.0);
        opts.overrides.insert("gelfand_levitan.soliton1.refinement".into(), 2.0);
        assert_eq!(
            opts.tolerance(Check::Periodicity, "x_shift", Bound::AtMost, 1e-10),
            10.0
        );
        assert_eq!(opts.tolerance(Check::Periodicity, "x_shift", Bound::AtLeast, 3.0), 3.0);
        assert_eq!(
            opts.tolerance(Check::GelfandLevitan, "soliton1.refinement", Bound::AtLeast, 12.0),
            2.0
        );
    }

    #[test]
    fn severity_orders_failures_first() {
        let ok = Measurement::new("a", 1e-12, 1e-10, Bound::AtMost);
        let bad = Measurement::new("b", 1.0, 4.0, Bound::AtLeast);
        assert!(ok.pass && !bad.pass);
        assert!(bad.severity() > ok.severity());
        assert!(!Measurement::new("n", f64::NAN, 1.0, Bound::AtMost).pass);
    }

    #[test]
    fn brute_force_matches_on_wider_lattice() {
        let l = make_lattice(0.7, 4).unwrap();
        let p: Vec<f64> = (0..l.len()).map(|i| 0.1 + 0.01 * i as f64).collect();
        assert_eq!(dbnt_rhs(&l, &p, 0.3).unwrap(), brute_force_rhs(&l, &p, 0.3));
    }
}
