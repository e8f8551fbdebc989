//! Run configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use kdv_vessel::scalar::re;
use kdv_vessel::suite::Check;
use kdv_vessel::{DiscreteSpectrum, Grid2D, QuadratureSpectrum, SolitonSpec, SpectrumFlavor};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub vessel: Option<VesselConfig>,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
    pub output: Option<OutputConfig>,
    pub seed: Option<u64>,
    pub transfer: Option<TransferConfig>,
    pub scatter: Option<ScatterConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VesselConfig {
    Soliton {
        k: Vec<f64>,
        b_abs: Vec<f64>,
    },
    Discrete {
        k: Vec<f64>,
        b_abs: Vec<f64>,
        #[serde(default)]
        flavor: FlavorConfig,
    },
    Quadrature {
        s_max: f64,
        nodes: usize,
        density: DensityConfig,
    },
    Evolution {
        k0: f64,
        #[serde(rename = "M")]
        m: usize,
        p0: Vec<f64>,
        t_end: f64,
        steps: usize,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FlavorConfig {
    Periodic {
        period: f64,
    },
    #[default]
    AlmostPeriodic,
}

/// `c(s) = amplitude · exp(−s²/(2 width²))`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Gaussian { amplitude: f64, width: f64 },
    Constant { amplitude: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub name: String,
    /// Replaces every upper bound of the check, or only `measurement`'s.
    pub tolerance: Option<f64>,
    pub measurement: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    /// Explicit `[re, im]` pairs; otherwise `count` seeded samples.
    #[serde(default)]
    pub lambda: Vec<[f64; 2]>,
    #[serde(default = "default_lambda_count")]
    pub count: usize,
}

fn default_lambda_count() -> usize {
    8
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub x0: f64,
    pub nodes: usize,
}

/// Check, tolerance override, measurement the override targets.
pub type CheckRequest = (Check, Option<f64>, Option<String>);

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn checks(&self) -> Result<Vec<CheckRequest>, CliError> {
        self.checks
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let check = c
                    .name
                    .parse::<Check>()
                    .map_err(|_| CliError::Config(format!("checks[{i}].name: unknown check {:?}", c.name)))?;
                if let Some(t) = c.tolerance {
                    if !(t.is_finite() && t >= 0.0) {
                        return Err(CliError::Config(format!(
                            "checks[{i}].tolerance: must be finite and non-negative"
                        )));
                    }
                }
                Ok((check, c.tolerance, c.measurement.clone()))
            })
            .collect()
    }
}

fn positive(path: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!("{path}: must not be empty")));
    }
    for (i, v) in values.iter().enumerate() {
        if !(v.is_finite() && *v > 0.0) {
            return Err(CliError::Config(format!(
                "{path}[{i}]: must be positive and finite, got {v}"
            )));
        }
    }
    Ok(())
}

fn same_len(path: &str, a: &[f64], b: &[f64]) -> Result<(), CliError> {
    if a.len() != b.len() {
        return Err(CliError::Config(format!(
            "{path}: expected {} entries, got {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

pub fn soliton_spec(k: &[f64], b_abs: &[f64]) -> Result<SolitonSpec<f64>, CliError> {
    positive("vessel.soliton.k", k)?;
    positive("vessel.soliton.b_abs", b_abs)?;
    same_len("vessel.soliton.b_abs", k, b_abs)?;
    Ok(SolitonSpec::new(k.to_vec(), b_abs.iter().map(|b| re(*b)).collect())?)
}

pub fn discrete_spectrum(k: &[f64], b_abs: &[f64], flavor: FlavorConfig) -> Result<DiscreteSpectrum<f64>, CliError> {
    positive("vessel.discrete.k", k)?;
    positive("vessel.discrete.b_abs", b_abs)?;
    same_len("vessel.discrete.b_abs", k, b_abs)?;
    let flavor = match flavor {
        FlavorConfig::Periodic { period } => {
            positive("vessel.discrete.flavor.periodic.period", &[period])?;
            SpectrumFlavor::Periodic { period }
        }
        FlavorConfig::AlmostPeriodic => SpectrumFlavor::AlmostPeriodic,
    };
    Ok(DiscreteSpectrum::new(
        k.to_vec(),
        b_abs.iter().map(|b| re(*b)).collect(),
        flavor,
    )?)
}

pub fn quadrature_spectrum(
    s_max: f64,
    nodes: usize,
    density: DensityConfig,
) -> Result<QuadratureSpectrum<f64>, CliError> {
    positive("vessel.quadrature.s_max", &[s_max])?;
    if nodes == 0 {
        return Err(CliError::Config("vessel.quadrature.nodes: must be at least 1".into()));
    }
    let c = match density {
        DensityConfig::Gaussian { amplitude, width } => {
            positive("vessel.quadrature.density.gaussian.amplitude", &[amplitude])?;
            positive("vessel.quadrature.density.gaussian.width", &[width])?;
            Box::new(move |s: f64| re(amplitude * (-s * s / (2.0 * width * width)).exp())) as Box<dyn Fn(f64) -> _>
        }
        DensityConfig::Constant { amplitude } => {
            positive("vessel.quadrature.density.constant.amplitude", &[amplitude])?;
            Box::new(move |_: f64| re(amplitude))
        }
    };
    Ok(QuadratureSpectrum::gauss_legendre(nodes, s_max, c)?)
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid2D<f64>, CliError> {
        let ordered = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ordered(self.x_min, self.x_max) {
            return Err(CliError::Config("grid.x_max: must exceed grid.x_min".into()));
        }
        if !ordered(self.t_min, self.t_max) {
            return Err(CliError::Config("grid.t_max: must exceed grid.t_min".into()));
        }
        Ok(Grid2D::new(
            self.x_min, self.x_max, self.nx, self.t_min, self.t_max, self.nt,
        )?)
    }

    /// `XMIN,XMAX,NX,TMIN,TMAX,NT`.
    pub fn parse_flag(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || CliError::Config(format!("--grid: expected XMIN,XMAX,NX,TMIN,TMAX,NT, got {s:?}"));
        if parts.len() != 6 {
            return Err(bad());
        }
        let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
        let n = |i: usize| parts[i].parse::<usize>().map_err(|_| bad());
        Ok(Self {
            x_min: f(0)?,
            x_max: f(1)?,
            nx: n(2)?,
            t_min: f(3)?,
            t_max: f(4)?,
            nt: n(5)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let err = RunConfig::parse(r#"{"vessel": {"soliton": {"k": [1.0], "b_abs": [1.0], "c": 2}}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("vessel.soliton"), "{msg}");
    }

    #[test]
    fn negative_wavenumber_names_the_field() {
        let err = soliton_spec(&[1.0, -2.0], &[1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("vessel.soliton.k[1]"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn grid_flag_parses() {
        let g = GridConfig::parse_flag("-1,1,11,0,0.5,9").unwrap();
        assert_eq!((g.nx, g.nt), (11, 9));
        assert!(GridConfig::parse_flag("1,2,3").is_err());
    }

    #[test]
    fn evolution_section_uses_capital_m() {
        let c = RunConfig::parse(
            r#"{"vessel": {"evolution": {"k0": 1.0, "M": 2, "p0": [0.1, 0.2, 0.2, 0.1], "t_end": 0.5, "steps": 10}}}"#,
        )
        .unwrap();
        assert!(matches!(c.vessel, Some(VesselConfig::Evolution { m: 2, .. })));
    }
}
