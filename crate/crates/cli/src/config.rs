//! TOML experiment configuration and its translation into core types.
//! Sections mirror the type names: [model], [model.domain], [model.noise],
//! [grid], [estimator], [experiment].

use std::path::{Path, PathBuf};

use serde::Deserialize;

use spde_react::estimate::{select_bandwidth, select_bandwidth_growing, EstimatorConfig, Mode};
use spde_react::model::{Boundary, Domain, ModelSpec, NoiseSpec, ReactionFn};
use spde_react::simulate::GridSpec;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub estimator: Option<EstimatorSection>,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub nu: f64,
    pub horizon: f64,
    /// "allen-cahn", "zero", or "constant" (with `constant = value`).
    pub reaction: String,
    pub constant: Option<f64>,
    /// Explicit noise level; omit to derive it from the coupling law.
    pub sigma: Option<f64>,
    pub domain: DomainSection,
    pub noise: NoiseSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub left: f64,
    pub right: f64,
    /// "dirichlet" or "neumann".
    pub boundary: String,
    pub gamma_left: f64,
    pub gamma_right: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// "white", "riesz" (with `rho`), or "spectral" (with `rho1`, `rho2`).
    pub kind: String,
    pub rho: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_space: usize,
    /// Omit for the parabolic default n_space^2.
    pub n_time: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub x0: f64,
    /// Omit for the balance rule at the model's noise level.
    pub h: Option<f64>,
    pub beta: Option<f64>,
    pub alpha_bar: Option<f64>,
    /// "small-diffusivity" (default) or "growing-window" (with `gamma`).
    pub mode: Option<String>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_runs: Option<usize>,
    pub base_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub x0_grid: Option<Vec<f64>>,
    pub nu_list: Option<Vec<f64>>,
    pub gamma_list: Option<Vec<f64>>,
    pub h_list: Option<Vec<f64>>,
    pub a_low: Option<f64>,
    pub a_high: Option<f64>,
    /// Slice time for occupation / variance-scan; defaults to the horizon.
    pub t: Option<f64>,
    /// Stored binary trajectory for `estimate`; omit to simulate afresh.
    pub trajectory: Option<PathBuf>,
    /// `simulate`: also dump the trajectory in binary form.
    pub binary: Option<bool>,
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|err| {
        CliError::Config(format!("cannot read config {}: {err}", path.display()))
    })?;
    toml::from_str(&text)
        .map_err(|err| CliError::Config(format!("bad config {}: {err}", path.display())))
}

impl FileConfig {
    pub fn build_model(&self) -> Result<ModelSpec, CliError> {
        let m = &self.model;
        let boundary = match m.domain.boundary.as_str() {
            "dirichlet" => Boundary::Dirichlet,
            "neumann" => Boundary::Neumann,
            other => {
                return Err(CliError::Config(format!(
                    "unknown boundary \"{other}\" (expected \"dirichlet\" or \"neumann\")"
                )))
            }
        };
        let domain = Domain::new(
            m.domain.left,
            m.domain.right,
            boundary,
            m.domain.gamma_left,
            m.domain.gamma_right,
        )?;
        let noise = match m.noise.kind.as_str() {
            "white" => NoiseSpec::white(),
            "riesz" => NoiseSpec::riesz(m.noise.rho.ok_or_else(|| {
                CliError::Config("riesz noise needs `rho`".into())
            })?)?,
            "spectral" => {
                let rho1 = m.noise.rho1.ok_or_else(|| {
                    CliError::Config("spectral noise needs `rho1` and `rho2`".into())
                })?;
                let rho2 = m.noise.rho2.ok_or_else(|| {
                    CliError::Config("spectral noise needs `rho1` and `rho2`".into())
                })?;
                NoiseSpec::spectral(rho1, rho2)?
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown noise kind \"{other}\" (expected \"white\", \"riesz\", or \"spectral\")"
                )))
            }
        };
        let reaction = match m.reaction.as_str() {
            "allen-cahn" => ReactionFn::allen_cahn(),
            "zero" => ReactionFn::zero(),
            "constant" => ReactionFn::constant(m.constant.ok_or_else(|| {
                CliError::Config("constant reaction needs `constant = value`".into())
            })?),
            other => {
                return Err(CliError::Config(format!(
                    "unknown reaction \"{other}\" (expected \"allen-cahn\", \"zero\", or \"constant\")"
                )))
            }
        };
        let mut model = ModelSpec::new(domain, m.nu, noise, reaction, m.horizon)?;
        if let Some(sigma) = m.sigma {
            model = model.with_sigma(sigma);
        }
        Ok(model)
    }

    pub fn build_grid(&self, model: &ModelSpec) -> Result<GridSpec, CliError> {
        Ok(match self.grid.n_time {
            Some(n_time) => GridSpec::new(model, self.grid.n_space, n_time)?,
            None => GridSpec::with_default_time(model, self.grid.n_space)?,
        })
    }

    pub fn build_estimator(&self, model: &ModelSpec) -> Result<EstimatorConfig, CliError> {
        let e = self.estimator.as_ref().ok_or_else(|| {
            CliError::Config("this command needs an [estimator] section".into())
        })?;
        let beta = e.beta.unwrap_or(2.0);
        let mode = match e.mode.as_deref().unwrap_or("small-diffusivity") {
            "small-diffusivity" => Mode::SmallDiffusivity,
            "growing-window" => Mode::GrowingWindow {
                gamma: e.gamma.ok_or_else(|| {
                    CliError::Config("growing-window mode needs `gamma`".into())
                })?,
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown estimator mode \"{other}\""
                )))
            }
        };
        let h = e.h.unwrap_or_else(|| match mode {
            Mode::SmallDiffusivity => select_bandwidth(model.sigma, beta),
            Mode::GrowingWindow { gamma } => select_bandwidth_growing(gamma, beta),
        });
        let mut est = EstimatorConfig::new(e.x0, h, model.nu, model.sigma)?
            .with_beta(beta)?
            .with_mode(mode)?;
        if let Some(alpha_bar) = e.alpha_bar {
            est = est.with_alpha_bar(alpha_bar)?;
        }
        Ok(est)
    }

    pub fn n_runs(&self) -> usize {
        self.experiment.n_runs.unwrap_or(200)
    }

    pub fn base_seed(&self) -> u64 {
        self.experiment.base_seed.unwrap_or(1)
    }
}
