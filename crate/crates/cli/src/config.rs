//! JSON run configuration.
//!
//! Parsing fills in every default, so [`RunConfig::canonical_json`] of a parsed
//! config parses back to an identical value and re-serialises byte for byte.

use crate::error::{CliError, Result};
use replimut_core::catalog::{self, ClosedFormCase};
use replimut_core::spectral::{AutoGrid, Count, GridPolicy};
use replimut_core::{Fitness, FitnessPolynomial, Grid, Polynomial};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Eigs,
    Evolve,
    Sweep,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigs => "eigs",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }
}

/// Catalog entry with parameters, normal-form coefficients `w_0..w_{2s−1}`,
/// or plain ascending coefficients of `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FitnessSpec {
    Catalog {
        catalog: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Coefficients {
        coefficients: Vec<f64>,
    },
    Polynomial {
        polynomial: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keyword {
    Auto,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridSpec {
    Auto(Keyword),
    Fixed { half_length: f64, nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CountSpec {
    All(Keyword),
    Lowest(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    CenteredGaussian,
    Gaussian { center: f64 },
    OffCenteredMixture { epsilon: f64 },
    Csv { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    CrankNicolson,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoSettings {
    pub target_rel_error: f64,
    pub max_nodes: usize,
}

impl Default for AutoSettings {
    fn default() -> Self {
        let a = AutoGrid::default();
        AutoSettings { target_rel_error: a.target_rel_error, max_nodes: a.max_nodes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSettings {
    pub rel_tol: f64,
    pub global_rel_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_separation: Option<f64>,
}

impl Default for ModeSettings {
    fn default() -> Self {
        ModeSettings { rel_tol: 1e-3, global_rel_tol: 0.2, min_separation: None }
    }
}

fn default_grid() -> GridSpec {
    GridSpec::Auto(Keyword::Auto)
}

fn default_k() -> CountSpec {
    CountSpec::Lowest(10)
}

fn default_method() -> Method {
    Method::Series
}

fn default_columns() -> usize {
    10
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub fitness: FitnessSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_k")]
    pub k: CountSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_columns")]
    pub eigenfunction_columns: usize,
    #[serde(default)]
    pub modes: ModeSettings,
    #[serde(default)]
    pub auto_grid: AutoSettings,
    /// `verify` only: also run the reproduction criteria.
    #[serde(default = "default_true")]
    pub criteria: bool,
}

impl RunConfig {
    /// Configuration used by `verify` when no file is given.
    pub fn default_verify() -> RunConfig {
        RunConfig {
            command: Some(Command::Verify),
            fitness: FitnessSpec::Catalog { catalog: "harmonic".into(), params: BTreeMap::new() },
            sigma: Some(1.0),
            sigmas: None,
            grid: default_grid(),
            k: default_k(),
            initial: Some(InitialSpec::CenteredGaussian),
            times: None,
            method: default_method(),
            dt: None,
            eigenfunction_columns: default_columns(),
            modes: ModeSettings::default(),
            auto_grid: AutoSettings::default(),
            criteria: true,
        }
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(CliError::config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    pub fn canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }

    /// Fixes the command (from the command line) and checks every field it needs.
    pub fn resolve(mut self, command: Command) -> Result<RunConfig> {
        match self.command {
            Some(c) if c != command => {
                return Err(CliError::config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )))
            }
            _ => self.command = Some(command),
        }
        self.validate()?;
        Ok(self)
    }

    pub fn command(&self) -> Command {
        self.command.expect("resolved config")
    }

    fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(format!("{name} must be finite")))
            }
        };
        match &self.fitness {
            FitnessSpec::Catalog { params, .. } => {
                for (k, v) in params {
                    finite(k, *v)?;
                }
            }
            FitnessSpec::Coefficients { coefficients: c } | FitnessSpec::Polynomial { polynomial: c } => {
                for v in c {
                    finite("fitness coefficient", *v)?;
                }
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(CliError::config("sigma must be positive and finite"));
            }
        }
        if let GridSpec::Fixed { half_length, nodes } = self.grid {
            if !(half_length > 0.0 && half_length.is_finite()) || nodes < 3 {
                return Err(CliError::config("grid needs half_length > 0 and at least 3 nodes"));
            }
        }
        if let GridSpec::Auto(Keyword::All) = self.grid {
            return Err(CliError::config("grid must be \"auto\" or {half_length, nodes}"));
        }
        match self.k {
            CountSpec::Lowest(0) => return Err(CliError::config("k must be at least 1")),
            CountSpec::All(Keyword::Auto) => return Err(CliError::config("k must be a positive integer or \"all\"")),
            _ => {}
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::config("dt must be positive"));
            }
        }
        if self.eigenfunction_columns == 0 {
            return Err(CliError::config("eigenfunction_columns must be at least 1"));
        }
        let m = &self.modes;
        if !(m.rel_tol > 0.0 && m.rel_tol < 1.0) || !(m.global_rel_tol > 0.0 && m.global_rel_tol < 1.0) {
            return Err(CliError::config("mode tolerances must lie in (0, 1)"));
        }
        if let Some(sep) = m.min_separation {
            finite("min_separation", sep)?;
        }
        if !(self.auto_grid.target_rel_error > 0.0 && self.auto_grid.target_rel_error.is_finite()) {
            return Err(CliError::config("auto_grid.target_rel_error must be positive"));
        }
        if let InitialSpec::Gaussian { center } = self.initial.clone().unwrap_or(InitialSpec::CenteredGaussian) {
            finite("initial center", center)?;
        }
        if let Some(InitialSpec::OffCenteredMixture { epsilon }) = self.initial {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(CliError::config("epsilon must be nonnegative and finite"));
            }
        }
        match self.command() {
            Command::Eigs | Command::Verify => {}
            Command::Evolve => {
                if self.initial.is_none() {
                    return Err(CliError::config("evolve needs an initial data spec"));
                }
                let times = self.times.as_deref().unwrap_or(&[]);
                if times.is_empty() {
                    return Err(CliError::config("evolve needs a nonempty times list"));
                }
                if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(CliError::config("times must be finite, nonnegative and strictly ascending"));
                }
            }
            Command::Sweep => {
                let s = self.sigmas.as_deref().unwrap_or(&[]);
                if s.is_empty() {
                    return Err(CliError::config("sweep needs a nonempty sigmas list"));
                }
                if s.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(CliError::config("sigmas must be positive and finite"));
                }
                let up = s.windows(2).all(|w| w[0] < w[1]);
                let down = s.windows(2).all(|w| w[0] > w[1]);
                if !(up || down) {
                    return Err(CliError::config("sigmas must be strictly sorted"));
                }
            }
        }
        Ok(())
    }

    pub fn count(&self) -> Count {
        match self.k {
            CountSpec::All(_) => Count::All,
            CountSpec::Lowest(k) => Count::Lowest(k),
        }
    }

    pub fn auto_grid(&self) -> AutoGrid {
        AutoGrid {
            target_rel_error: self.auto_grid.target_rel_error,
            max_nodes: self.auto_grid.max_nodes,
            ..AutoGrid::default()
        }
    }

    pub fn grid_policy(&self) -> Result<GridPolicy> {
        Ok(match self.grid {
            GridSpec::Fixed { half_length, nodes } => GridPolicy::Fixed(Grid::new(half_length, nodes)?),
            GridSpec::Auto(_) => GridPolicy::Auto(self.auto_grid()),
        })
    }
}

/// A fitness function built from a [`FitnessSpec`].
pub struct Model {
    pub id: String,
    pub fitness: Box<dyn Fitness>,
    /// `σ` at which a closed-form case has its known ground state.
    pub natural_sigma: Option<f64>,
    pub closed_form: Option<ClosedFormCase>,
}

impl Model {
    /// `σ` from the config, else the closed-form case's own value.
    pub fn sigma(&self, config: &RunConfig) -> Result<f64> {
        config
            .sigma
            .or(self.natural_sigma)
            .ok_or_else(|| CliError::config("sigma is required for this fitness"))
    }
}

const CATALOG: &[(&str, &[&str])] = &[
    ("harmonic", &["sigma"]),
    ("decic", &[]),
    ("xie_wang_fu", &["omega", "g", "v2"]),
    ("zaslavski", &["b", "c"]),
    ("quartic", &[]),
    ("double_well", &[]),
    ("scaled_double_well", &[]),
    ("narrow_wide_narrow", &[]),
    ("wide_narrow_wide", &[]),
    ("uni_modal_quartic", &["constant"]),
];

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|(n, _)| *n).collect()
}

pub fn build_model(spec: &FitnessSpec, sigma: Option<f64>) -> Result<Model> {
    match spec {
        FitnessSpec::Catalog { catalog: name, params } => {
            let (_, allowed) = CATALOG
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| CliError::config(format!("unknown catalog entry `{name}`; known: {}", catalog_names().join(", "))))?;
            if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(CliError::config(format!("`{name}` has no parameter `{bad}`")));
            }
            let p = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
            let closed = |case: ClosedFormCase| Model {
                id: name.clone(),
                natural_sigma: Some(case.sigma),
                fitness: Box::new(case.clone()),
                closed_form: Some(case),
            };
            let poly = |p: Polynomial| Model { id: name.clone(), fitness: Box::new(p), natural_sigma: None, closed_form: None };
            Ok(match name.as_str() {
                "harmonic" => closed(catalog::harmonic(p("sigma", sigma.unwrap_or(1.0)))?),
                "decic" => closed(catalog::decic()),
                "xie_wang_fu" => closed(catalog::xie_wang_fu(p("omega", 1.0), p("g", 1.0), p("v2", 0.5))?),
                "zaslavski" => closed(catalog::zaslavski(p("b", 1.0), p("c", 0.0))?),
                "quartic" => poly(Polynomial::monomial(-1.0, 4)),
                "double_well" => poly(catalog::double_well()),
                "scaled_double_well" => poly(catalog::scaled_double_well()),
                "narrow_wide_narrow" => poly(catalog::narrow_wide_narrow()),
                "wide_narrow_wide" => poly(catalog::wide_narrow_wide()),
                "uni_modal_quartic" => poly(catalog::uni_modal_quartic(p("constant", 0.0))),
                _ => unreachable!(),
            })
        }
        FitnessSpec::Coefficients { coefficients } => {
            let f = FitnessPolynomial::from_coefficients(coefficients.clone())?;
            Ok(Model { id: "normal_form".into(), fitness: Box::new(f), natural_sigma: None, closed_form: None })
        }
        FitnessSpec::Polynomial { polynomial } => {
            let p = Polynomial::new(polynomial.clone());
            if p.degree() < 2 || p.degree() % 2 == 1 || p.leading() >= 0.0 {
                return Err(CliError::config("polynomial fitness must have even degree >= 2 and a negative leading coefficient"));
            }
            Ok(Model { id: "polynomial".into(), fitness: Box::new(p), natural_sigma: None, closed_form: None })
        }
    }
}
