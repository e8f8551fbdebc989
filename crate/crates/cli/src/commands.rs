use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use kdv_vessel::evolution::{integrate_b_with, make_lattice, time_grid, ConservationPolicy};
use kdv_vessel::soliton::{beta_soliton, log_tau_soliton};
use kdv_vessel::suite::{run_checks, sample_lambdas, Check, CheckOutcome, Level, SuiteOptions};
use kdv_vessel::transfer::{gl_kernels, gl_residual, symmetry_residual, TransferFunction};
use kdv_vessel::vessel::potential;
use kdv_vessel::{build_discrete_vessel, build_quadrature_vessel, build_soliton, q_soliton, FiniteVessel, Grid2D};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    discrete_spectrum, quadrature_spectrum, soliton_spec, Format, GridConfig, RunConfig, VesselConfig,
};
use crate::error::CliError;
use crate::output::{with_sink, Cell, Table};
use crate::{Common, SolitonArgs, VerifyArgs};

const DEFAULT_SEED: u64 = 0x5eed;

pub struct Context {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
    pub level: Level,
}

impl Context {
    pub fn new(common: &Common) -> Result<Self, CliError> {
        let config = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let output = config.output.clone();
        Ok(Self {
            out: common
                .out
                .clone()
                .or_else(|| output.as_ref().and_then(|o| o.path.clone())),
            format: common.format.or_else(|| output.as_ref().and_then(|o| o.format)),
            seed: common.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
            level: common.level.unwrap_or_default(),
            config,
        })
    }

    fn grid(&self) -> Result<Grid2D<f64>, CliError> {
        self.config
            .grid
            .as_ref()
            .ok_or_else(|| CliError::Config("grid: required for this subcommand".into()))?
            .build()
    }

    fn vessel_config(&self) -> Result<&VesselConfig, CliError> {
        self.config
            .vessel
            .as_ref()
            .ok_or_else(|| CliError::Config("vessel: required for this subcommand".into()))
    }

    /// Builds any of the three closed-form constructions.
    fn vessel(&self) -> Result<FiniteVessel<f64>, CliError> {
        Ok(match self.vessel_config()? {
            VesselConfig::Soliton { k, b_abs } => build_soliton(&soliton_spec(k, b_abs)?)?,
            VesselConfig::Discrete { k, b_abs, flavor } => {
                build_discrete_vessel(&discrete_spectrum(k, b_abs, *flavor)?)?
            }
            VesselConfig::Quadrature { s_max, nodes, density } => {
                build_quadrature_vessel(&quadrature_spectrum(*s_max, *nodes, *density)?)?
            }
            VesselConfig::Evolution { .. } => {
                return Err(CliError::Config(
                    "vessel.evolution: this subcommand needs a vessel construction".into(),
                ))
            }
        })
    }

    fn emit(&self, table: &Table) -> Result<(), CliError> {
        let format = self.format.unwrap_or(Format::Csv);
        with_sink(self.out.as_deref(), |w| table.write_to(w, format))
    }
}

fn grid_points(grid: &Grid2D<f64>) -> Vec<(f64, f64)> {
    let (nx, nt) = grid.shape();
    (0..nt)
        .flat_map(|j| (0..nx).map(move |i| (grid.x.node(i), grid.t.node(j))))
        .collect()
}

fn field_table(rows: Vec<[f64; 5]>) -> Table {
    let mut table = Table::new(vec!["x", "t", "tau", "beta", "q"]);
    for r in rows {
        table.push(r.iter().map(|v| Cell::Num(*v)).collect());
    }
    table
}

pub fn soliton(ctx: &Context, args: &SolitonArgs) -> Result<u8, CliError> {
    let spec = match (&args.k, &args.b_abs) {
        (Some(k), Some(b)) => soliton_spec(k, b)?,
        (None, None) => match ctx.vessel_config()? {
            VesselConfig::Soliton { k, b_abs } => soliton_spec(k, b_abs)?,
            _ => {
                return Err(CliError::Config(
                    "vessel: the soliton subcommand needs a soliton vessel".into(),
                ))
            }
        },
        _ => return Err(CliError::Config("--k and --b-abs must be given together".into())),
    };
    let grid = match &args.grid {
        Some(g) => GridConfig::parse_flag(g)?.build()?,
        None => ctx.grid()?,
    };
    let rows = grid_points(&grid)
        .into_par_iter()
        .map(|(x, t)| {
            let log_tau = log_tau_soliton(&spec, x, t)?;
            Ok([x, t, log_tau.exp(), beta_soliton(&spec, x, t)?, q_soliton(&spec, x, t)?])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    ctx.emit(&field_table(rows))?;
    Ok(0)
}

pub fn spectral(ctx: &Context) -> Result<u8, CliError> {
    if matches!(
        ctx.vessel_config()?,
        VesselConfig::Soliton { .. } | VesselConfig::Evolution { .. }
    ) {
        return Err(CliError::Config(
            "vessel: the spectral subcommand needs a discrete or quadrature vessel".into(),
        ));
    }
    let vessel = ctx.vessel()?;
    let grid = ctx.grid()?;
    let rows = grid_points(&grid)
        .into_par_iter()
        .map(|(x, t)| {
            let state = vessel.evaluate(x, t)?;
            Ok([x, t, state.tau, state.beta, potential(&vessel, x, t)?])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    ctx.emit(&field_table(rows))?;
    Ok(0)
}

pub fn evolve(ctx: &Context) -> Result<u8, CliError> {
    let VesselConfig::Evolution {
        k0,
        m,
        p0,
        t_end,
        steps,
    } = ctx.vessel_config()?
    else {
        return Err(CliError::Config(
            "vessel: the evolve subcommand needs an evolution section".into(),
        ));
    };
    let lattice = make_lattice(*k0, *m)?;
    let traj = integrate_b_with(&lattice, p0, &time_grid(*t_end, *steps)?, ConservationPolicy::Monitor)?;
    eprintln!(
        "conservation residual max {:.3e}; symmetry residual max {:.3e}",
        traj.max_conservation(),
        traj.max_symmetry()
    );
    let mut table = Table::new(vec!["t", "k", "p"]);
    for (t, p) in traj.times.iter().zip(&traj.p) {
        for (i, v) in p.iter().enumerate() {
            table.push(vec![Cell::Num(*t), Cell::Num(lattice.k(i)), Cell::Num(*v)]);
        }
    }
    ctx.emit(&table)?;
    Ok(0)
}

pub fn transfer(ctx: &Context) -> Result<u8, CliError> {
    let vessel = ctx.vessel()?;
    let grid = ctx.grid()?;
    let settings = ctx.config.transfer.clone();
    let lambdas = match &settings {
        Some(s) if !s.lambda.is_empty() => s.lambda.iter().map(|[a, b]| kdv_vessel::scalar::cx(*a, *b)).collect(),
        _ => sample_lambdas(ctx.seed, settings.map(|s| s.count).unwrap_or(8), vessel.spectrum()),
    };
    let mut table = Table::new(vec![
        "x",
        "t",
        "lambda_re",
        "lambda_im",
        "s11_re",
        "s11_im",
        "s12_re",
        "s12_im",
        "s21_re",
        "s21_im",
        "s22_re",
        "s22_im",
        "symmetry",
    ]);
    for (x, t) in grid_points(&grid) {
        let tf = TransferFunction::new(&vessel, x, t)?;
        for l in &lambdas {
            let s = tf.eval(*l)?;
            let mut row = vec![Cell::Num(x), Cell::Num(t), Cell::Num(l.re), Cell::Num(l.im)];
            for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                row.push(Cell::Num(s[(i, j)].re));
                row.push(Cell::Num(s[(i, j)].im));
            }
            row.push(Cell::Num(symmetry_residual(&vessel, *l, x, t)?));
            table.push(row);
        }
    }
    ctx.emit(&table)?;
    Ok(0)
}

pub fn scatter(ctx: &Context) -> Result<u8, CliError> {
    let vessel = ctx.vessel()?;
    let grid = ctx.grid()?;
    let settings = ctx
        .config
        .scatter
        .ok_or_else(|| CliError::Config("scatter: required for this subcommand".into()))?;
    let t = grid.t.min();
    let xs = grid.x.nodes();
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| xs.iter().filter(move |&&y| y <= x).map(move |&y| (x, y)))
        .collect();
    let rows = pairs
        .into_par_iter()
        .map(|(x, y)| {
            let k = gl_kernels(&vessel, settings.x0, x, y, t)?;
            let r = if x > y {
                gl_residual(&vessel, settings.x0, x, y, settings.nodes, t)?
            } else {
                f64::NAN
            };
            Ok([x, y, t, k.omega.re, k.omega.im, k.k.re, k.k.im, r])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(vec![
        "x",
        "y",
        "t",
        "omega_re",
        "omega_im",
        "k_re",
        "k_im",
        "gl_residual",
    ]);
    for r in rows {
        table.push(r.iter().map(|v| Cell::Num(*v)).collect());
    }
    ctx.emit(&table)?;
    Ok(0)
}

#[derive(Serialize)]
struct Report<'a> {
    seed: u64,
    level: Level,
    pass: bool,
    checks: &'a [CheckOutcome],
}

fn report(ctx: &Context, checks: &[Check], overrides: BTreeMap<String, f64>) -> Result<u8, CliError> {
    let opts = SuiteOptions {
        level: ctx.level,
        seed: ctx.seed,
        overrides,
    };
    let outcomes = run_checks(checks, &opts)?;
    let pass = outcomes.iter().all(|o| o.pass);
    eprintln!("seed {}", ctx.seed);
    for o in &outcomes {
        eprintln!(
            "{} {:<22} value {:.3e} tolerance {:.3e} {:.0} ms",
            if o.pass { "PASS" } else { "FAIL" },
            o.check,
            o.value,
            o.tolerance,
            o.runtime_ms
        );
        for m in o.failures() {
            eprintln!("    {} = {:.3e} ({:?} {:.3e})", m.name, m.value, m.bound, m.tolerance);
        }
    }
    let format = ctx.format.unwrap_or(Format::Json);
    with_sink(ctx.out.as_deref(), |w: &mut dyn Write| match format {
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut *w,
                &Report {
                    seed: ctx.seed,
                    level: ctx.level,
                    pass,
                    checks: &outcomes,
                },
            )?;
            w.write_all(b"\n")?;
            Ok(())
        }
        Format::Csv => {
            let mut table = Table::new(vec!["check", "value", "tolerance", "pass", "runtime_ms"]);
            for o in &outcomes {
                table.push(vec![
                    Cell::Text(o.check.clone()),
                    Cell::Num(o.value),
                    Cell::Num(o.tolerance),
                    Cell::Bool(o.pass),
                    Cell::Num(o.runtime_ms),
                ]);
            }
            table.write_to(w, Format::Csv)
        }
    })?;
    Ok(if pass { 0 } else { 1 })
}

pub fn verify(ctx: &Context, args: &VerifyArgs) -> Result<u8, CliError> {
    let mut checks = Vec::new();
    let mut overrides = BTreeMap::new();
    for (check, tolerance, measurement) in ctx.config.checks()? {
        if let Some(t) = tolerance {
            let key = match measurement {
                Some(m) => format!("{check}.{m}"),
                None => check.name().to_string(),
            };
            overrides.insert(key, t);
        }
        if !checks.contains(&check) {
            checks.push(check);
        }
    }
    for name in &args.checks {
        let check = name
            .parse::<Check>()
            .map_err(|_| CliError::Config(format!("--check: unknown check {name:?}")))?;
        if !checks.contains(&check) {
            checks.push(check);
        }
    }
    if checks.is_empty() {
        return Err(CliError::Config(
            "checks: list at least one check in the config or with --check".into(),
        ));
    }
    report(ctx, &checks, overrides)
}

pub fn suite(ctx: &Context) -> Result<u8, CliError> {
    report(ctx, &Check::ALL, BTreeMap::new())
}
