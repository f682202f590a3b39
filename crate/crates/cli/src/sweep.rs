//! Parameter grids over config values.
//!
//! A sweep file looks like
//!
//! ```json
//! {"axes": [
//!   {"path": "particles[0].theta", "start": 0.0, "stop": 1.5707963267948966, "steps": 21},
//!   {"path": "particles[1].omega", "values": [0.0, 3.141592653589793]}
//! ]}
//! ```
//!
//! and the same axes can be given inline as `particles[0].theta=0:1.5707963267948966:21`
//! or `particles[1].omega=0,3.141592653589793`. Grid points run in
//! lexicographic order with the last axis varying fastest.

use std::str::FromStr;

use serde::Deserialize;

use crate::config::{EnsembleConfig, ParamPath};
use crate::CliError;

pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub path: ParamPath,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisFile {
    path: String,
    start: Option<f64>,
    stop: Option<f64>,
    steps: Option<usize>,
    values: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    axes: Vec<AxisFile>,
}

/// `steps` evenly spaced values from `start` to `stop` inclusive.
pub fn range_values(start: f64, stop: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::Usage("sweep steps must be at least 1".into()));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Usage("sweep range bounds must be finite".into()));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| if k == steps - 1 { stop } else { start + (stop - start) * k as f64 / last })
        .collect())
}

impl Axis {
    fn from_file(a: AxisFile) -> Result<Self, CliError> {
        let path: ParamPath = a.path.parse()?;
        let values = match (a.start, a.stop, a.steps, a.values) {
            (Some(start), Some(stop), Some(steps), None) => range_values(start, stop, steps)?,
            (None, None, None, Some(values)) => values,
            _ => {
                return Err(CliError::Usage(format!(
                    "axis {path}: give either start/stop/steps or values"
                )))
            }
        };
        Axis::new(path, values)
    }

    pub fn new(path: ParamPath, values: Vec<f64>) -> Result<Self, CliError> {
        if values.is_empty() {
            return Err(CliError::Usage(format!("axis {path} has no values")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Usage(format!("axis {path} has a non-finite value {v}")));
        }
        Ok(Axis { path, values })
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (path, spec) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad axis `{s}`; expected <path>=<start:stop:steps|v1,v2,...>")))?;
        let path: ParamPath = path.parse()?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("axis {path}: `{t}` is not a number")))
        };
        let values = if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            let [start, stop, steps] = parts[..] else {
                return Err(CliError::Usage(format!("axis {path}: range must be start:stop:steps")));
            };
            let steps: usize = steps
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("axis {path}: `{steps}` is not a step count")))?;
            range_values(num(start)?, num(stop)?, steps)?
        } else {
            spec.split(',').map(num).collect::<Result<_, _>>()?
        };
        Axis::new(path, values)
    }
}

impl SweepSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self, CliError> {
        if axes.is_empty() {
            return Err(CliError::Usage("a sweep needs at least one axis".into()));
        }
        let spec = SweepSpec { axes };
        spec.len()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: SweepFile = serde_json::from_str(text).map_err(|e| CliError::Config {
            line: Some(e.line()),
            field: None,
            message: e.to_string(),
        })?;
        Self::new(file.axes.into_iter().map(Axis::from_file).collect::<Result<_, _>>()?)
    }

    /// Number of grid points, refusing grids above [`MAX_GRID_POINTS`].
    pub fn len(&self) -> Result<usize, CliError> {
        let mut total: usize = 1;
        for a in &self.axes {
            total = total
                .checked_mul(a.values.len())
                .filter(|&t| t <= MAX_GRID_POINTS)
                .ok_or_else(|| CliError::Usage(format!("sweep grid exceeds {MAX_GRID_POINTS} points")))?;
        }
        Ok(total)
    }

    pub fn is_empty(&self) -> bool {
        self.axes.iter().any(|a| a.values.is_empty())
    }

    pub fn check_against(&self, config: &EnsembleConfig) -> Result<(), CliError> {
        self.axes.iter().try_for_each(|a| config.check_path(a.path))
    }

    /// Axis values of grid point `index`.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            let n = axis.values.len();
            *slot = axis.values[index % n];
            index /= n;
        }
        out
    }

    /// The config with grid point `index` substituted.
    pub fn apply(&self, config: &EnsembleConfig, index: usize) -> Result<EnsembleConfig, CliError> {
        let mut c = config.clone();
        for (axis, v) in self.axes.iter().zip(self.point(index)) {
            c.set(axis.path, v)?;
        }
        Ok(c)
    }
}
