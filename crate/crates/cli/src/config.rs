//! Ensemble configuration files.
//!
//! ```json
//! {
//!   "statistics": "boson",
//!   "degrees": false,
//!   "particles": [
//!     {"spin": "up", "theta": 0.785, "omega": 0.0},
//!     {"spin": "down", "theta": 0.3, "omega": 1.2, "phi": 1.2, "gamma": 0.5, "chi": 1}
//!   ]
//! }
//! ```
//!
//! `phi` defaults to π/2 (no weight outside the detectors) and `gamma` to 0.
//! `chi` names the remainder mode; particles without one share χ0. With `"degrees": true`
//! every angle is read in degrees.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use ident_core::{mode_ket, Error as CoreError, ParticleEnsemble, PseudoSpin, SingleParticleKet, SpatialMode, Statistics};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticsName {
    #[default]
    Boson,
    Fermion,
}

impl From<StatisticsName> for Statistics {
    fn from(s: StatisticsName) -> Self {
        match s {
            StatisticsName::Boson => Statistics::Boson,
            StatisticsName::Fermion => Statistics::Fermion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl From<Spin> for PseudoSpin {
    fn from(s: Spin) -> Self {
        match s {
            Spin::Up => PseudoSpin::Up,
            Spin::Down => PseudoSpin::Down,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub spin: Spin,
    pub theta: f64,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default)]
    pub statistics: StatisticsName,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degrees: bool,
    pub particles: Vec<ParticleConfig>,
}

/// Ensemble built from a config, particles reordered spin-up first.
#[derive(Debug, Clone)]
pub struct LoadedEnsemble {
    pub ensemble: ParticleEnsemble,
    /// `order[k]` is the file index of the k-th particle of `ensemble`.
    pub order: Vec<usize>,
    /// Particle kets in file order.
    pub file_kets: Vec<SingleParticleKet>,
}

/// A settable scalar inside a config, written `particles[i].field`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamPath {
    pub index: usize,
    pub field: ParamField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamField {
    Theta,
    Omega,
    Phi,
    Gamma,
}

impl ParamField {
    fn name(self) -> &'static str {
        match self {
            ParamField::Theta => "theta",
            ParamField::Omega => "omega",
            ParamField::Phi => "phi",
            ParamField::Gamma => "gamma",
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "particles[{}].{}", self.index, self.field.name())
    }
}

impl FromStr for ParamPath {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("bad parameter path `{s}`; expected particles[<i>].<theta|omega|phi|gamma>"));
        let rest = s.trim().strip_prefix("particles[").ok_or_else(bad)?;
        let (index, field) = rest.split_once("].").ok_or_else(bad)?;
        let index: usize = index.parse().map_err(|_| bad())?;
        let field = match field {
            "theta" => ParamField::Theta,
            "omega" => ParamField::Omega,
            "phi" => ParamField::Phi,
            "gamma" => ParamField::Gamma,
            _ => return Err(bad()),
        };
        Ok(ParamPath { index, field })
    }
}

impl EnsembleConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: EnsembleConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
            line: Some(e.line()),
            field: None,
            message: strip_position(&e.to_string()),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics.into()
    }

    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    /// Overwrites one parameter, in the config's own angle unit.
    pub fn set(&mut self, path: ParamPath, value: f64) -> Result<(), CliError> {
        self.check_path(path)?;
        let p = &mut self.particles[path.index];
        match path.field {
            ParamField::Theta => p.theta = value,
            ParamField::Omega => p.omega = value,
            ParamField::Phi => p.phi = Some(value),
            ParamField::Gamma => p.gamma = Some(value),
        }
        Ok(())
    }

    pub fn check_path(&self, path: ParamPath) -> Result<(), CliError> {
        if path.index >= self.particles.len() {
            return Err(CliError::Usage(format!(
                "parameter {path} does not exist: the config has {} particles",
                self.particles.len()
            )));
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.particles.is_empty() {
            return Err(CliError::Config {
                line: None,
                field: Some("particles".into()),
                message: "at least one particle is required".into(),
            });
        }
        self.modes().map(|_| ())
    }

    fn to_radians(&self, x: f64) -> f64 {
        if self.degrees {
            x.to_radians()
        } else {
            x
        }
    }

    /// Spatial modes in file order.
    pub fn modes(&self) -> Result<Vec<SpatialMode>, CliError> {
        self.particles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let phi = p.phi.map_or(FRAC_PI_2, |x| self.to_radians(x));
                let gamma = p.gamma.map_or(0.0, |x| self.to_radians(x));
                SpatialMode::with_remainder(self.to_radians(p.theta), self.to_radians(p.omega), phi, gamma, p.chi)
                    .map_err(|e| match e {
                        CoreError::OutOfRange { what, value, range } => CliError::Config {
                            line: None,
                            field: Some(format!("particles[{i}].{what}")),
                            message: format!("{value} (radians) is outside {range}"),
                        },
                        other => CliError::Core(other),
                    })
            })
            .collect()
    }

    pub fn load(&self) -> Result<LoadedEnsemble, CliError> {
        let modes = self.modes()?;
        let spins: Vec<PseudoSpin> = self.particles.iter().map(|p| p.spin.into()).collect();
        let file_kets = modes.iter().zip(&spins).map(|(m, s)| mode_ket(m, *s)).collect();
        // stable: ups keep their relative order, then downs
        let mut order: Vec<usize> = (0..modes.len()).collect();
        order.sort_by_key(|&i| spins[i] != PseudoSpin::Up);
        let n_up = spins.iter().filter(|s| **s == PseudoSpin::Up).count();
        let sorted = order.iter().map(|&i| modes[i]).collect();
        let ensemble = ParticleEnsemble::new(n_up, sorted, self.statistics())?;
        Ok(LoadedEnsemble { ensemble, order, file_kets })
    }
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}
