//! Projection of a symmetrized ensemble onto two detectors L and R, sector
//! decomposition by the number of particles found at L, and the
//! coherence-based separability criterion.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::algebra::{symmetrized_partial_trace, DensityMatrix, OverlapMatrix};
use crate::error::{Error, Result};
use crate::linalg::{determinant, permanent, ComplexMatrix, PermanentMethod};
use crate::measures::Measure;
use crate::states::{
    enumerate_keys, gram_norm_sq, mode_ket, ModeLabel, OccupationKey, PseudoSpin, SingleParticleKet, SpatialLabel,
    SpatialMode, Statistics, SymmetricKet,
};
use crate::tolerance::Tolerances;

/// Largest ensemble accepted by the projection.
pub const PROJECTION_LIMIT: usize = 12;

/// Spatial coherence 2 cos θ sin θ of a mode in the detector basis.
pub fn coherence(mode: &SpatialMode) -> f64 {
    2.0 * mode.theta().cos() * mode.theta().sin()
}

/// N particles, the first `n_up` with pseudospin up and the rest down.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    n_up: usize,
    modes: Vec<SpatialMode>,
    statistics: Statistics,
}

impl ParticleEnsemble {
    pub fn new(n_up: usize, modes: Vec<SpatialMode>, statistics: Statistics) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Consistency("ensemble needs at least one particle".into()));
        }
        if n_up > modes.len() {
            return Err(Error::Consistency(format!("n_up = {n_up} exceeds N = {}", modes.len())));
        }
        Ok(ParticleEnsemble { n_up, modes, statistics })
    }

    pub fn bosons(n_up: usize, modes: Vec<SpatialMode>) -> Result<Self> {
        Self::new(n_up, modes, Statistics::Boson)
    }

    /// Every particle in the same spatial mode.
    pub fn complete_overlap(n_total: usize, n_up: usize, mode: SpatialMode, statistics: Statistics) -> Result<Self> {
        Self::new(n_up, vec![mode; n_total], statistics)
    }

    pub fn n_particles(&self) -> usize {
        self.modes.len()
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn n_down(&self) -> usize {
        self.modes.len() - self.n_up
    }

    pub fn modes(&self) -> &[SpatialMode] {
        &self.modes
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn spin(&self, k: usize) -> PseudoSpin {
        if k < self.n_up {
            PseudoSpin::Up
        } else {
            PseudoSpin::Down
        }
    }

    pub fn kets(&self) -> Vec<SingleParticleKet> {
        self.modes.iter().enumerate().map(|(k, m)| mode_ket(m, self.spin(k))).collect()
    }

    pub fn coherences(&self) -> Vec<f64> {
        self.modes.iter().map(coherence).collect()
    }

    /// Same ensemble with every ω shifted by `delta`.
    pub fn with_phase_shift(&self, delta: f64) -> Result<Self> {
        let modes = self
            .modes
            .iter()
            .map(|m| SpatialMode::with_remainder(m.theta(), m.omega() + delta, m.phi(), m.gamma(), m.chi_id()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n_up, modes, self.statistics)
    }
}

/// Detection outcome with α spin-up and β spin-down particles at L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectionMatrixSpec {
    pub alpha: usize,
    pub beta: usize,
}

impl DetectionMatrixSpec {
    pub fn new(alpha: usize, beta: usize) -> Self {
        DetectionMatrixSpec { alpha, beta }
    }

    pub fn q(&self) -> usize {
        self.alpha + self.beta
    }

    fn check(&self, ensemble: &ParticleEnsemble) -> Result<()> {
        if self.alpha > ensemble.n_up() || self.beta > ensemble.n_down() {
            return Err(Error::DetectionBounds {
                alpha: self.alpha,
                beta: self.beta,
                n_up: ensemble.n_up(),
                n_total: ensemble.n_particles(),
            });
        }
        Ok(())
    }

    /// Detector labels in key order: L↑ × α, L↓ × β, R↑ × (n − α), R↓ × (N − n − β).
    pub fn labels(&self, ensemble: &ParticleEnsemble) -> Result<Vec<ModeLabel>> {
        self.check(ensemble)?;
        let mut labels = Vec::with_capacity(ensemble.n_particles());
        labels.extend(std::iter::repeat_n(ModeLabel::L_UP, self.alpha));
        labels.extend(std::iter::repeat_n(ModeLabel::L_DOWN, self.beta));
        labels.extend(std::iter::repeat_n(ModeLabel::R_UP, ensemble.n_up() - self.alpha));
        labels.extend(std::iter::repeat_n(ModeLabel::R_DOWN, ensemble.n_down() - self.beta));
        Ok(labels)
    }

    pub fn key(&self, ensemble: &ParticleEnsemble) -> Result<OccupationKey> {
        self.labels(ensemble).map(OccupationKey::new)
    }

    /// Every admissible (α, β) for the ensemble.
    pub fn all(ensemble: &ParticleEnsemble) -> Vec<DetectionMatrixSpec> {
        (0..=ensemble.n_up())
            .flat_map(|a| (0..=ensemble.n_down()).map(move |b| DetectionMatrixSpec::new(a, b)))
            .collect()
    }
}

/// A^{αβ}: entry (j, k) is ⟨Φ^{αβ}_j|Ψ_k⟩ with detector rows in key order and
/// particle columns.
pub fn build_detection_matrix(ensemble: &ParticleEnsemble, spec: DetectionMatrixSpec) -> Result<OverlapMatrix> {
    let labels = spec.labels(ensemble)?;
    let kets = ensemble.kets();
    ComplexMatrix::from_fn(labels.len(), kets.len(), |j, k| kets[k].amplitude(&labels[j])).map(OverlapMatrix)
}

/// Outcome group with `q` particles at L.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    pub q: usize,
    /// Probability of the group before any renormalization.
    pub probability: f64,
    /// Normalized state over {L, R} ⊗ {↑, ↓}.
    pub state: SymmetricKet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorDecomposition {
    /// Nonempty sectors in ascending q.
    pub sectors: Vec<Sector>,
    /// Weight outside the two-detector subspace.
    pub leak_probability: f64,
}

impl SectorDecomposition {
    pub fn detected_probability(&self) -> f64 {
        self.sectors.iter().map(|s| s.probability).sum()
    }

    /// Σ_q p_q + leak
    pub fn total_probability(&self) -> f64 {
        self.detected_probability() + self.leak_probability
    }

    pub fn sector(&self, q: usize) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.q == q)
    }

    /// The detected state Σ_q √p_q |Φ_q⟩ (unnormalized when there is leak).
    pub fn projected_state(&self) -> Option<SymmetricKet> {
        let first = self.sectors.first()?;
        let mut out = SymmetricKet::zero(first.state.n_particles(), first.state.statistics());
        for s in &self.sectors {
            for (key, amp) in s.state.iter() {
                out.accumulate(key.clone(), amp * s.probability.sqrt()).ok()?;
            }
        }
        Some(out)
    }
}

fn detector_projection(ket: &SingleParticleKet) -> SingleParticleKet {
    SingleParticleKet::unnormalized(ket.iter().filter(|(l, _)| l.spatial.is_detector()).map(|(l, a)| (*l, *a)))
}

/// Projects the normalized symmetrized ensemble state onto L/R detection
/// outcomes and groups the amplitudes by q.
pub fn project_onto_detectors(ensemble: &ParticleEnsemble) -> Result<SectorDecomposition> {
    project_onto_detectors_with(ensemble, PermanentMethod::Ryser)
}

pub fn project_onto_detectors_with(ensemble: &ParticleEnsemble, method: PermanentMethod) -> Result<SectorDecomposition> {
    let n = ensemble.n_particles();
    if n > PROJECTION_LIMIT {
        return Err(Error::SizeLimit { what: "detector projection", size: n, limit: PROJECTION_LIMIT });
    }
    let stats = ensemble.statistics();
    let kets = ensemble.kets();
    let norm_sq = gram_norm_sq(&kets, stats, method)?;
    if norm_sq < Tolerances::DEFAULT.pruning {
        return Err(Error::NullState { norm_sq });
    }
    let projected: Vec<SingleParticleKet> = kets.iter().map(detector_projection).collect();
    let detected = gram_norm_sq(&projected, stats, method)?;
    let leak_probability = (1.0 - detected / norm_sq).max(0.0);

    let scale = 1.0 / norm_sq.sqrt();
    let mut groups: BTreeMap<usize, SymmetricKet> = BTreeMap::new();
    for spec in DetectionMatrixSpec::all(ensemble) {
        let key = spec.key(ensemble)?;
        let a = build_detection_matrix(ensemble, spec)?.into_inner();
        let amp = match stats {
            Statistics::Boson => permanent(&a, method)? / key.multiplicity_factorial().sqrt(),
            Statistics::Fermion if key.has_repeats() => continue,
            Statistics::Fermion => determinant(&a)?,
        } * scale;
        if amp.norm() < Tolerances::DEFAULT.pruning {
            continue;
        }
        groups
            .entry(spec.q())
            .or_insert_with(|| SymmetricKet::zero(n, stats))
            .accumulate(key, amp)?;
    }

    let mut sectors = Vec::new();
    for (q, unnormalized) in groups {
        let probability = unnormalized.norm_sq();
        if probability < Tolerances::DEFAULT.pruning {
            continue;
        }
        sectors.push(Sector { q, probability, state: unnormalized.normalized()? });
    }
    Ok(SectorDecomposition { sectors, leak_probability })
}

/// Which detector's reduced state is returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    L,
    R,
}

fn is_left(label: &ModeLabel) -> bool {
    label.spatial == SpatialLabel::L
}

/// Reduced state on `side` of a fixed-q sector state, obtained by tracing
/// the other detector out with its spin-resolved identity.
pub fn sector_reduced_density(state: &SymmetricKet, side: Side) -> Result<DensityMatrix> {
    let mut keys = state.keys();
    let first = keys.next().ok_or(Error::EmptySector)?;
    let q = first.count(is_left);
    if keys.any(|k| k.count(is_left) != q) {
        return Err(Error::Consistency("state mixes different numbers of particles at L".into()));
    }
    if state.keys().flat_map(|k| k.labels()).any(|l| !l.spatial.is_detector()) {
        return Err(Error::Consistency("sector state has weight outside the detectors".into()));
    }
    let distinct = state.statistics() == Statistics::Fermion;
    let basis = match side {
        Side::R => enumerate_keys(&[ModeLabel::L_UP, ModeLabel::L_DOWN], q, distinct),
        Side::L => enumerate_keys(&[ModeLabel::R_UP, ModeLabel::R_DOWN], state.n_particles() - q, distinct),
    };
    let rho = crate::algebra::pure_to_density(state)?;
    if basis.iter().all(|k| k.is_empty()) {
        // nothing on the traced side: the reduced state is the state itself
        return Ok(rho);
    }
    symmetrized_partial_trace(&rho, &basis)
}

/// Entanglement of one normalized sector state across L|R.
pub fn sector_entanglement(state: &SymmetricKet, side: Side, measure: Measure) -> Result<f64> {
    if state.is_empty() {
        return Err(Error::EmptySector);
    }
    measure.of_density(&sector_reduced_density(state, side)?)
}

/// Σ_q p_q E(Φ_q) with the p_q renormalized over the detected sectors.
pub fn entanglement_from_sectors(decomposition: &SectorDecomposition, measure: Measure) -> Result<f64> {
    let detected = decomposition.detected_probability();
    if decomposition.sectors.is_empty() || detected < Tolerances::DEFAULT.pruning {
        return Err(Error::EmptySector);
    }
    let mut total = 0.0;
    for s in &decomposition.sectors {
        total += s.probability / detected * sector_entanglement(&s.state, Side::R, measure)?;
    }
    Ok(total)
}

pub fn entanglement_of_particles(ensemble: &ParticleEnsemble, measure: Measure) -> Result<f64> {
    entanglement_from_sectors(&project_onto_detectors(ensemble)?, measure)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparabilityVerdict {
    /// Every spin-up coherence or every spin-down coherence vanishes.
    pub criterion_holds: bool,
    pub entanglement: f64,
    pub separable: bool,
}

impl SeparabilityVerdict {
    /// The criterion is sufficient: it must never hold on an entangled state.
    pub fn is_consistent(&self) -> bool {
        !self.criterion_holds || self.separable
    }
}

/// Coherence criterion against the measured entanglement of particles.
pub fn theorem1_separability_check(ensemble: &ParticleEnsemble) -> Result<SeparabilityVerdict> {
    theorem1_separability_check_with(ensemble, Measure::Entropy, Tolerances::DEFAULT.comparison)
}

pub fn theorem1_separability_check_with(
    ensemble: &ParticleEnsemble,
    measure: Measure,
    threshold: f64,
) -> Result<SeparabilityVerdict> {
    const COHERENCE_ZERO: f64 = 1e-12;
    let c = ensemble.coherences();
    let (up, down) = c.split_at(ensemble.n_up());
    let criterion_holds =
        up.iter().all(|&x| x.abs() < COHERENCE_ZERO) || down.iter().all(|&x| x.abs() < COHERENCE_ZERO);
    let entanglement = entanglement_of_particles(ensemble, measure)?;
    Ok(SeparabilityVerdict { criterion_holds, entanglement, separable: entanglement < threshold })
}

/// Amplitude the paper-style way, perm(A^{αβ}) / (N! N_N(Φ^{αβ}) N_N(Ψ)),
/// with N_N(Ψ) taken from exact equality of the particle kets.
pub fn detection_amplitude_unnormalized(
    ensemble: &ParticleEnsemble,
    spec: DetectionMatrixSpec,
    method: PermanentMethod,
) -> Result<Complex64> {
    let labels = spec.labels(ensemble)?;
    let bras: Vec<SingleParticleKet> = labels.iter().map(|l| SingleParticleKet::basis(*l)).collect();
    crate::algebra::transition_amplitude_with(&bras, &ensemble.kets(), ensemble.statistics(), method)
}
