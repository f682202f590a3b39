//! Subcommand implementations. Each builds a serializable record and hands
//! it to the single output writer.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ident_core::detection::entanglement_from_sectors;
use ident_core::{
    schmidt_decompose, sector_entanglement, transition_amplitude_with, verify_schmidt_equivalence_for, Bipartition,
    Measure, PermanentMethod, SectorDecomposition, Side,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EnsembleConfig, LoadedEnsemble};
use crate::sweep::{Axis, SweepSpec};
use crate::verify::{self, Suite, VerifyOptions};
use crate::{open_output, tolerance_override, Cli, CliError, Command, Common, Format};

/// Rows evaluated in parallel before each write.
const SWEEP_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexRecord {
    pub re: f64,
    pub im: f64,
}

impl From<ident_core::Complex64> for ComplexRecord {
    fn from(z: ident_core::Complex64) -> Self {
        ComplexRecord { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeRecord {
    pub amplitude: ComplexRecord,
    pub abs: f64,
    pub method: &'static str,
    pub statistics: &'static str,
    pub n_particles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyAmplitude {
    pub key: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementRecord {
    pub entropy: Option<f64>,
    pub concurrence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorRecord {
    pub q: usize,
    pub p: f64,
    pub amplitudes: Vec<KeyAmplitude>,
    pub entanglement: EntanglementRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectRecord {
    pub n_particles: usize,
    pub n_up: usize,
    pub statistics: &'static str,
    /// File index of each particle after the spin-up-first reordering.
    pub particle_order: Vec<usize>,
    pub sectors: Vec<SectorRecord>,
    pub detected: f64,
    pub leak: f64,
    /// Sector averages weighted by the detected probabilities.
    pub entanglement: EntanglementRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtSectorRecord {
    pub q: usize,
    pub p: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SchmidtRecord {
    Sectors { sectors: Vec<SchmidtSectorRecord> },
    Split {
        split: (usize, usize),
        input_coefficients: Vec<f64>,
        output_coefficients: Vec<f64>,
        max_abs_diff: f64,
    },
}

fn stats_name(s: ident_core::Statistics) -> &'static str {
    match s {
        ident_core::Statistics::Boson => "boson",
        ident_core::Statistics::Fermion => "fermion",
    }
}

fn method_name(m: PermanentMethod) -> &'static str {
    match m {
        PermanentMethod::Ryser => "ryser",
        PermanentMethod::Naive => "naive",
    }
}

fn load_config(common: &Common) -> Result<EnsembleConfig, CliError> {
    let path = common.config.as_deref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
    EnsembleConfig::from_path(path)
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

/// Fixed CSV number format: 17 significant digits.
pub fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    let common = &cli.common;
    let method: PermanentMethod = common.method.into();
    let tolerance = tolerance_override()?;
    match &cli.command {
        Command::Amplitude { bra } => {
            let record = amplitude(&load_config(common)?, &EnsembleConfig::from_path(bra)?, method)?;
            emit(common, Format::Json, |out, format| match format {
                Format::Json => write_json(out, &record),
                Format::Csv => {
                    writeln!(out, "re,im,abs,method")?;
                    let z = record.amplitude;
                    writeln!(out, "{},{},{},{}", csv_number(z.re), csv_number(z.im), csv_number(record.abs), record.method)?;
                    Ok(())
                }
            })?;
            Ok(true)
        }
        Command::Project => {
            let record = project(&load_config(common)?, method)?;
            emit(common, Format::Json, |out, format| match format {
                Format::Json => write_json(out, &record),
                Format::Csv => {
                    writeln!(out, "q,p,entropy,concurrence")?;
                    for s in &record.sectors {
                        let e = &s.entanglement;
                        let f = |x: Option<f64>| csv_number(x.unwrap_or(f64::NAN));
                        writeln!(out, "{},{},{},{}", s.q, csv_number(s.p), f(e.entropy), f(e.concurrence))?;
                    }
                    Ok(())
                }
            })?;
            Ok(true)
        }
        Command::Sweep { sweep, axes } => {
            let config = load_config(common)?;
            let spec = sweep_spec(sweep.as_deref(), axes)?;
            spec.check_against(&config)?;
            let format = common.format.unwrap_or(Format::Csv);
            let mut out = open_output(&common.output)?;
            run_sweep(&config, &spec, common.measure.into(), method, common.threads, format, &mut *out)?;
            out.flush()?;
            Ok(true)
        }
        Command::Schmidt { split } => {
            let split = split.as_deref().map(parse_split).transpose()?;
            let record = schmidt(&load_config(common)?, split)?;
            emit(common, Format::Json, |out, format| match format {
                Format::Json => write_json(out, &record),
                Format::Csv => Err(CliError::Usage("schmidt output is JSON only".into())),
            })?;
            Ok(true)
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let report = verify::run(suite, VerifyOptions { seed: common.seed, tolerance, method })?;
            emit(common, Format::Json, |out, format| match format {
                Format::Json => write_json(out, &report),
                Format::Csv => {
                    writeln!(out, "suite,cases,failures,max_error,tolerance,seed")?;
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        report.suite,
                        report.cases,
                        report.failures,
                        csv_number(report.max_error),
                        csv_number(report.tolerance),
                        report.seed
                    )?;
                    Ok(())
                }
            })?;
            Ok(report.passed())
        }
    }
}

fn emit(
    common: &Common,
    default: Format,
    body: impl FnOnce(&mut dyn Write, Format) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut out = open_output(&common.output)?;
    body(&mut *out, common.format.unwrap_or(default))?;
    out.flush()?;
    Ok(())
}

pub fn parse_split(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("bad split `{s}`; expected N_L,N_R"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn amplitude(ket: &EnsembleConfig, bra: &EnsembleConfig, method: PermanentMethod) -> Result<AmplitudeRecord, CliError> {
    if ket.statistics() != bra.statistics() {
        return Err(CliError::Usage("bra and ket configs use different statistics".into()));
    }
    if ket.n_particles() != bra.n_particles() {
        return Err(CliError::Usage(format!(
            "bra has {} particles but ket has {}",
            bra.n_particles(),
            ket.n_particles()
        )));
    }
    let (k, b) = (ket.load()?, bra.load()?);
    let z = transition_amplitude_with(&b.file_kets, &k.file_kets, ket.statistics(), method)?;
    Ok(AmplitudeRecord {
        amplitude: z.into(),
        abs: z.norm(),
        method: method_name(method),
        statistics: stats_name(ket.statistics()),
        n_particles: ket.n_particles(),
    })
}

fn averages(d: &SectorDecomposition) -> Result<EntanglementRecord, CliError> {
    let get = |m: Measure| match entanglement_from_sectors(d, m) {
        Ok(x) => Ok(Some(x)),
        Err(ident_core::Error::EmptySector) => Ok(None),
        Err(e) => Err(CliError::Core(e)),
    };
    Ok(EntanglementRecord { entropy: get(Measure::Entropy)?, concurrence: get(Measure::Concurrence)? })
}

pub fn project(config: &EnsembleConfig, method: PermanentMethod) -> Result<ProjectRecord, CliError> {
    let LoadedEnsemble { ensemble, order, .. } = config.load()?;
    let d = ident_core::detection::project_onto_detectors_with(&ensemble, method)?;
    let sectors = d
        .sectors
        .iter()
        .map(|s| {
            let e = |m| sector_entanglement(&s.state, Side::R, m).map(Some);
            Ok(SectorRecord {
                q: s.q,
                p: s.probability,
                amplitudes: s
                    .state
                    .iter()
                    .map(|(k, a)| KeyAmplitude { key: k.to_string(), re: a.re, im: a.im })
                    .collect(),
                entanglement: EntanglementRecord { entropy: e(Measure::Entropy)?, concurrence: e(Measure::Concurrence)? },
            })
        })
        .collect::<Result<_, ident_core::Error>>()?;
    Ok(ProjectRecord {
        n_particles: ensemble.n_particles(),
        n_up: ensemble.n_up(),
        statistics: stats_name(ensemble.statistics()),
        particle_order: order,
        sectors,
        detected: d.detected_probability(),
        leak: d.leak_probability,
        entanglement: averages(&d)?,
    })
}

pub fn schmidt(config: &EnsembleConfig, split: Option<(usize, usize)>) -> Result<SchmidtRecord, CliError> {
    let ensemble = config.load()?.ensemble;
    match split {
        Some(split) => {
            let r = verify_schmidt_equivalence_for(&ensemble, split)?;
            Ok(SchmidtRecord::Split {
                split,
                input_coefficients: r.input_coefficients,
                output_coefficients: r.output_coefficients,
                max_abs_diff: r.max_abs_diff,
            })
        }
        None => {
            let d = ident_core::project_onto_detectors(&ensemble)?;
            let sectors = d
                .sectors
                .iter()
                .map(|s| {
                    let coefficients = schmidt_decompose(&s.state, &Bipartition::left_right())?.coefficients;
                    Ok(SchmidtSectorRecord { q: s.q, p: s.probability, coefficients })
                })
                .collect::<Result<_, ident_core::Error>>()?;
            Ok(SchmidtRecord::Sectors { sectors })
        }
    }
}

pub fn sweep_spec(file: Option<&Path>, axes: &[String]) -> Result<SweepSpec, CliError> {
    match (file, axes.is_empty()) {
        (Some(_), false) => Err(CliError::Usage("give either --sweep or --axis, not both".into())),
        (Some(path), true) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read sweep {}: {e}", path.display())))?;
            SweepSpec::from_json(&text)
        }
        (None, _) => SweepSpec::new(axes.iter().map(|a| a.parse::<Axis>()).collect::<Result<_, _>>()?),
    }
}

/// One grid point: axis values, p_q for q = 0..=N, leak, entanglement.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameters: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub leak: f64,
    pub entanglement: f64,
}

pub fn sweep_point(
    config: &EnsembleConfig,
    spec: &SweepSpec,
    index: usize,
    measure: Measure,
    method: PermanentMethod,
) -> Result<SweepRow, CliError> {
    let parameters = spec.point(index);
    let context = |e: CliError| {
        let at: Vec<String> = spec.axes.iter().zip(&parameters).map(|(a, v)| format!("{}={v}", a.path)).collect();
        CliError::Usage(format!("grid point {index} ({}): {e}", at.join(", ")))
    };
    let c = spec.apply(config, index).map_err(context)?;
    let ensemble = c.load().map_err(context)?.ensemble;
    let d = ident_core::detection::project_onto_detectors_with(&ensemble, method)
        .map_err(|e| context(e.into()))?;
    let mut probabilities = vec![0.0; ensemble.n_particles() + 1];
    for s in &d.sectors {
        probabilities[s.q] = s.probability;
    }
    let entanglement = match entanglement_from_sectors(&d, measure) {
        Ok(x) => x,
        Err(ident_core::Error::EmptySector) => f64::NAN,
        Err(e) => return Err(context(e.into())),
    };
    Ok(SweepRow { parameters, probabilities, leak: d.leak_probability, entanglement })
}

pub fn sweep_columns(config: &EnsembleConfig, spec: &SweepSpec, measure: Measure) -> Vec<String> {
    let mut cols: Vec<String> = spec.axes.iter().map(|a| a.path.to_string()).collect();
    cols.extend((0..=config.n_particles()).map(|q| format!("p_{q}")));
    cols.push("leak".into());
    cols.push(measure.name().into());
    cols
}

#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    config: &EnsembleConfig,
    spec: &SweepSpec,
    measure: Measure,
    method: PermanentMethod,
    threads: usize,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let total = spec.len()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let columns = sweep_columns(config, spec, measure);
    match format {
        Format::Csv => writeln!(out, "{}", columns.join(","))?,
        Format::Json => {
            write!(out, "{{\"columns\":")?;
            serde_json::to_writer(&mut *out, &columns).map_err(|e| CliError::Io(e.into()))?;
            write!(out, ",\"rows\":[")?;
        }
    }
    let mut start = 0;
    while start < total {
        let end = (start + SWEEP_CHUNK).min(total);
        let rows: Vec<SweepRow> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| sweep_point(config, spec, i, measure, method))
                .collect::<Result<_, _>>()
        })?;
        for (offset, row) in rows.iter().enumerate() {
            let values = row
                .parameters
                .iter()
                .chain(&row.probabilities)
                .chain([&row.leak, &row.entanglement]);
            match format {
                Format::Csv => {
                    let mut line = String::new();
                    for (k, v) in values.enumerate() {
                        if k > 0 {
                            line.push(',');
                        }
                        let _ = write!(line, "{}", csv_number(*v));
                    }
                    writeln!(out, "{line}")?;
                }
                Format::Json => {
                    if start + offset > 0 {
                        write!(out, ",")?;
                    }
                    let v: Vec<f64> = values.copied().collect();
                    serde_json::to_writer(&mut *out, &v).map_err(|e| CliError::Io(e.into()))?;
                }
            }
        }
        start = end;
    }
    if format == Format::Json {
        writeln!(out, "]}}")?;
    }
    Ok(())
}
