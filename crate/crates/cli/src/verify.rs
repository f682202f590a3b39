//! Verification suites run by `ident verify <suite>`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::fmt;
use std::str::FromStr;

use ident_core::closed_form::{n2_average_concurrence, n3_average_concurrence_reported, same_side};
use ident_core::detection::sector_reduced_density;
use ident_core::states::symmetrize_labeled;
use ident_core::{
    expand_first_quantized, label_split_coefficients, make_product_state,
    project_onto_detectors_with, schmidt_decompose, transition_amplitude_with, verify_schmidt_equivalence,
    Bipartition, Complex64, Error as CoreError, Measure, ModeLabel, ParticleEnsemble, PermanentMethod, SingleParticleKet, SpatialMode,
    Statistics,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Theorem1,
    N2ClosedForm,
    N3ClosedForm,
    Schmidt,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Theorem1, Suite::N2ClosedForm, Suite::N3ClosedForm, Suite::Schmidt, Suite::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::N2ClosedForm => "n2-closed-form",
            Suite::N3ClosedForm => "n3-closed-form",
            Suite::Schmidt => "schmidt",
            Suite::Oracle => "oracle",
        }
    }

    /// Tolerance used when no override is given.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::N3ClosedForm => 1e-9,
            _ => 1e-10,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            CliError::Usage(format!("unknown suite `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub detail: String,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub method: PermanentMethod,
}

struct Tally {
    cases: usize,
    failures: usize,
    max_error: f64,
    tol: f64,
}

impl Tally {
    fn new(tol: f64) -> Self {
        Tally { cases: 0, failures: 0, max_error: 0.0, tol }
    }

    fn record(&mut self, error: f64) {
        self.cases += 1;
        if error.is_nan() || error >= self.tol {
            self.failures += 1;
        }
        if error.is_nan() || error > self.max_error {
            self.max_error = if error.is_nan() { f64::INFINITY } else { error };
        }
    }

    fn report(self, suite: Suite, seed: u64, detail: String) -> Report {
        Report {
            suite: suite.name().into(),
            cases: self.cases,
            failures: self.failures,
            max_error: self.max_error,
            tolerance: self.tol,
            seed,
            detail,
        }
    }
}

pub fn run(suite: Suite, opts: VerifyOptions) -> Result<Report, CliError> {
    let tol = opts.tolerance.unwrap_or(suite.default_tolerance());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    match suite {
        Suite::Theorem1 => theorem1(&mut rng, tol, opts),
        Suite::N2ClosedForm => n2(&mut rng, tol, opts),
        Suite::N3ClosedForm => n3(&mut rng, tol, opts),
        Suite::Schmidt => schmidt(tol, opts),
        Suite::Oracle => oracle(&mut rng, tol, opts),
    }
}

fn omega(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.0..TAU)
}

fn sector_entanglement_total(ens: &ParticleEnsemble, method: PermanentMethod, measure: Measure) -> Result<f64, CliError> {
    let d = project_onto_detectors_with(ens, method)?;
    Ok(ident_core::detection::entanglement_from_sectors(&d, measure)?)
}

fn theorem1(rng: &mut ChaCha8Rng, tol: f64, opts: VerifyOptions) -> Result<Report, CliError> {
    let mut t = Tally::new(tol);
    let mut worst_second: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=6);
        let n_up = rng.random_range(0..=n);
        let zero_up = rng.random_bool(0.5);
        let modes: Vec<SpatialMode> = (0..n)
            .map(|k| {
                let theta = if (k < n_up) == zero_up {
                    if rng.random_bool(0.5) {
                        0.0
                    } else {
                        FRAC_PI_2
                    }
                } else {
                    rng.random_range(0.0..=FRAC_PI_2)
                };
                SpatialMode::new(theta, omega(rng))
            })
            .collect::<Result<_, _>>()?;
        let ens = ParticleEnsemble::bosons(n_up, modes)?;
        let d = project_onto_detectors_with(&ens, opts.method)?;
        let mut err: f64 = 0.0;
        for s in &d.sectors {
            let ev = sector_reduced_density(&s.state, ident_core::Side::R)?.eigenvalues();
            let second = ev.get(1).copied().unwrap_or(0.0);
            worst_second = worst_second.max(second);
            err = err.max(second);
        }
        for m in [Measure::Entropy, Measure::Concurrence] {
            err = err.max(ident_core::detection::entanglement_from_sectors(&d, m)?);
        }
        t.record(err);
    }
    let detail = format!("coherences of one spin group forced to zero; max second eigenvalue {worst_second:.3e}");
    Ok(t.report(Suite::Theorem1, opts.seed, detail))
}

fn n2(rng: &mut ChaCha8Rng, tol: f64, opts: VerifyOptions) -> Result<Report, CliError> {
    let mut t = Tally::new(tol);
    let grid: Vec<f64> = (0..20).map(|k| FRAC_PI_2 * k as f64 / 19.0).collect();
    let mut worst = (0.0, 0.0, 0.0);
    for &t1 in &grid {
        for &t2 in &grid {
            for _ in 0..10 {
                let modes = vec![SpatialMode::new(t1, omega(rng))?, SpatialMode::new(t2, omega(rng))?];
                let ens = ParticleEnsemble::bosons(1, modes)?;
                let e = sector_entanglement_total(&ens, opts.method, Measure::Concurrence)?;
                let expect = n2_average_concurrence(t1, t2);
                if (e - expect).abs() > t.max_error {
                    worst = (t1, t2, e);
                }
                t.record((e - expect).abs());
            }
        }
    }
    let detail = format!(
        "average concurrence vs C1*C2/4; worst at theta = ({:.6}, {:.6}): computed {:.12}, closed form {:.12}",
        worst.0,
        worst.1,
        worst.2,
        n2_average_concurrence(worst.0, worst.1)
    );
    Ok(t.report(Suite::N2ClosedForm, opts.seed, detail))
}

fn n3(rng: &mut ChaCha8Rng, tol: f64, opts: VerifyOptions) -> Result<Report, CliError> {
    let mut t = Tally::new(tol);
    let (mut same, mut opposite) = (0, 0);
    for k in 0..500 {
        let (lo, hi) = (0.02..FRAC_PI_4 - 0.02, FRAC_PI_4 + 0.02..FRAC_PI_2 - 0.02);
        let t1 = if rng.random_bool(0.5) { rng.random_range(lo.clone()) } else { rng.random_range(hi.clone()) };
        let t2 = if (t1 < FRAC_PI_4) == (k % 2 == 0) { rng.random_range(lo) } else { rng.random_range(hi) };
        let theta = [t1, t2, rng.random_range(0.02..FRAC_PI_2 - 0.02)];
        let w = [omega(rng), omega(rng), omega(rng)];
        if same_side(t1, t2) {
            same += 1;
        } else {
            opposite += 1;
        }
        let modes = (0..3).map(|j| SpatialMode::new(theta[j], w[j])).collect::<Result<_, _>>()?;
        let ens = ParticleEnsemble::bosons(2, modes)?;
        let e = sector_entanglement_total(&ens, opts.method, Measure::Concurrence)?;
        t.record((e - n3_average_concurrence_reported(theta, w)).abs());
    }
    let detail = format!("average concurrence vs coherence form with the +/- branch rule; {same} same-side and {opposite} opposite-side draws");
    Ok(t.report(Suite::N3ClosedForm, opts.seed, detail))
}

fn schmidt(tol: f64, opts: VerifyOptions) -> Result<Report, CliError> {
    let mut t = Tally::new(tol);
    let expect = [(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()];
    let r = verify_schmidt_equivalence(3, 2, 0.7, 1.1, (2, 1))?;
    let mut err = r.max_abs_diff;
    for list in [&r.input_coefficients, &r.output_coefficients] {
        if list.len() != expect.len() {
            err = f64::INFINITY;
        } else {
            for (a, b) in list.iter().zip(expect) {
                err = err.max((a - b).abs());
            }
        }
    }
    t.record(err);
    let mode = SpatialMode::new(FRAC_PI_2 / 5.0, 0.3)?;
    for n_total in 2..=6 {
        for n_up in 0..=n_total {
            let ens = ParticleEnsemble::complete_overlap(n_total, n_up, mode, Statistics::Boson)?;
            let psi = make_product_state(&ens.kets(), Statistics::Boson)?;
            for n_x in 1..n_total {
                let svd = schmidt_decompose(&psi, &Bipartition::Labels(n_x))?.coefficients;
                let formula = label_split_coefficients(n_total, n_up, n_x)?;
                let mut e: f64 = 0.0;
                for k in 0..svd.len().max(formula.len()) {
                    e = e.max((svd.get(k).copied().unwrap_or(0.0) - formula.get(k).copied().unwrap_or(0.0)).abs());
                }
                t.record(e);
            }
        }
    }
    let detail = format!(
        "(N, n, split) = (3, 2, (2, 1)) gives {:?} -> {:?}; binomial coefficients vs SVD for N <= 6",
        r.input_coefficients, r.output_coefficients
    );
    Ok(t.report(Suite::Schmidt, opts.seed, detail))
}

const LABELS: [ModeLabel; 4] = [ModeLabel::L_UP, ModeLabel::L_DOWN, ModeLabel::R_UP, ModeLabel::R_DOWN];

fn random_ket(rng: &mut ChaCha8Rng) -> Result<SingleParticleKet, CliError> {
    let amps: Vec<(ModeLabel, Complex64)> = LABELS
        .iter()
        .map(|l| (*l, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let norm = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    Ok(SingleParticleKet::new(amps.into_iter().map(|(l, a)| (l, a / norm)))?)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// ⟨bras|kets⟩ from the explicit permutation expansions, each side scaled by
/// sqrt(Πν!/N!)/Πν! so that arrangements are counted once.
fn expansion_amplitude(bras: &[SingleParticleKet], kets: &[SingleParticleKet], stats: Statistics) -> Result<Complex64, CliError> {
    let scale = |list: &[SingleParticleKet]| {
        let nu: f64 = match stats {
            Statistics::Fermion => 1.0,
            Statistics::Boson => ident_core::states::multiplicities(list).iter().map(|&m| factorial(m)).product(),
        };
        (nu / factorial(list.len())).sqrt() / nu
    };
    let inner = symmetrize_labeled(bras, stats)?.inner(&symmetrize_labeled(kets, stats)?);
    Ok(inner * scale(bras) * scale(kets))
}

fn random_ensemble(rng: &mut ChaCha8Rng, n: usize, stats: Statistics) -> Result<ParticleEnsemble, CliError> {
    let modes = (0..n)
        .map(|_| {
            let theta = rng.random_range(0.0..=FRAC_PI_2);
            let w = omega(rng);
            if rng.random_bool(0.5) {
                let chi = if rng.random_bool(0.5) { None } else { Some(rng.random_range(0..3)) };
                SpatialMode::with_remainder(theta, w, rng.random_range(0.2..FRAC_PI_2), omega(rng), chi)
            } else {
                SpatialMode::new(theta, w)
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(ParticleEnsemble::new(rng.random_range(0..=n), modes, stats)?)
}

fn oracle(rng: &mut ChaCha8Rng, tol: f64, opts: VerifyOptions) -> Result<Report, CliError> {
    let mut t = Tally::new(tol);
    let (mut amp_err, mut proj_err): (f64, f64) = (0.0, 0.0);
    for n in 1..=5 {
        for k in 0..200 {
            let stats = if k % 2 == 0 { Statistics::Boson } else { Statistics::Fermion };
            let kets = (0..n).map(|_| random_ket(rng)).collect::<Result<Vec<_>, _>>()?;
            let mut bras = (0..n).map(|_| random_ket(rng)).collect::<Result<Vec<_>, _>>()?;
            if stats == Statistics::Boson && n > 1 && rng.random_bool(0.3) {
                bras[1] = bras[0].clone();
            }
            let lib = transition_amplitude_with(&bras, &kets, stats, opts.method)?;
            let e = (lib - expansion_amplitude(&bras, &kets, stats)?).norm();
            amp_err = amp_err.max(e);
            t.record(e);

            let ens = random_ensemble(rng, n, stats)?;
            let both = (project_onto_detectors_with(&ens, opts.method), expand_first_quantized(&ens.kets(), stats));
            let (projected, full) = match both {
                (Ok(d), Ok(full)) => (d.projected_state(), full.collect(stats)?),
                // Pauli exclusion: both paths must agree that the state vanishes
                (Err(CoreError::NullState { .. }), Err(CoreError::NullState { .. })) => {
                    t.record(0.0);
                    continue;
                }
                (Err(CoreError::NullState { .. }), Ok(_)) | (Ok(_), Err(CoreError::NullState { .. })) => {
                    t.record(f64::INFINITY);
                    continue;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e.into()),
            };
            let detected = full.filtered(|key| key.labels().iter().all(|l| l.spatial.is_detector()));
            let mut e: f64 = 0.0;
            for key in detected.keys() {
                let lib = projected.as_ref().map(|p| p.amplitude(key)).unwrap_or_default();
                e = e.max((lib - detected.amplitude(key)).norm());
            }
            if let Some(p) = &projected {
                for (key, a) in p.iter() {
                    e = e.max((a - detected.amplitude(key)).norm());
                }
            }
            proj_err = proj_err.max(e);
            t.record(e);
        }
    }
    let detail = format!(
        "N <= 5, bosons and fermions; transition amplitude {amp_err:.3e}, detector projection {proj_err:.3e}"
    );
    Ok(t.report(Suite::Oracle, opts.seed, detail))
}
