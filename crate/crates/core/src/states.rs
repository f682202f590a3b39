//! Single-particle kets and symmetrized N-particle states.
//!
//! N-particle states are stored in the occupation basis: a sparse map from
//! a sorted multiset of single-particle labels to its amplitude. The literal
//! pseudo-labeled form (a sum over N! label assignments) is available through
//! [`expand_first_quantized`] and serves as the brute-force reference for
//! everything built on permanents.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{determinant, permanent, ComplexMatrix, PermanentMethod};
use crate::tolerance::Tolerances;

/// Largest N accepted by [`expand_first_quantized`].
pub const EXPANSION_LIMIT: usize = 6;
/// Largest N accepted when converting an occupation-basis state back to
/// pseudo-labeled form.
pub const LABELED_LIMIT: usize = 8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Spatial part of a single-particle basis label: the two detector modes
/// and any number of remainder modes orthogonal to both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpatialLabel {
    L,
    R,
    Chi(u32),
}

impl SpatialLabel {
    pub fn is_detector(self) -> bool {
        matches!(self, SpatialLabel::L | SpatialLabel::R)
    }
}

impl fmt::Display for SpatialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialLabel::L => write!(f, "L"),
            SpatialLabel::R => write!(f, "R"),
            SpatialLabel::Chi(i) => write!(f, "χ{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PseudoSpin {
    Up,
    Down,
}

impl fmt::Display for PseudoSpin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PseudoSpin::Up => write!(f, "↑"),
            PseudoSpin::Down => write!(f, "↓"),
        }
    }
}

/// One element of the orthonormal single-particle basis (spatial ⊗ spin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub spatial: SpatialLabel,
    pub spin: PseudoSpin,
}

impl ModeLabel {
    pub const L_UP: ModeLabel = ModeLabel::new(SpatialLabel::L, PseudoSpin::Up);
    pub const L_DOWN: ModeLabel = ModeLabel::new(SpatialLabel::L, PseudoSpin::Down);
    pub const R_UP: ModeLabel = ModeLabel::new(SpatialLabel::R, PseudoSpin::Up);
    pub const R_DOWN: ModeLabel = ModeLabel::new(SpatialLabel::R, PseudoSpin::Down);

    pub const fn new(spatial: SpatialLabel, spin: PseudoSpin) -> Self {
        ModeLabel { spatial, spin }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.spatial, self.spin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Statistics {
    #[default]
    Boson,
    Fermion,
}

/// Spatial wavefunction of one particle expressed against the detector
/// modes: sin φ (cos θ |L⟩ + e^{iω} sin θ |R⟩) + e^{iγ} cos φ |χ⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialMode {
    theta: f64,
    omega: f64,
    phi: f64,
    gamma: f64,
    chi_id: Option<u32>,
}

impl SpatialMode {
    /// Mode fully inside the detector subspace (φ = π/2).
    pub fn new(theta: f64, omega: f64) -> Result<Self> {
        Self::with_remainder(theta, omega, FRAC_PI_2, 0.0, None)
    }

    pub fn with_remainder(theta: f64, omega: f64, phi: f64, gamma: f64, chi_id: Option<u32>) -> Result<Self> {
        check_angle("theta", theta)?;
        check_angle("phi", phi)?;
        if !omega.is_finite() {
            return Err(Error::OutOfRange { what: "omega", value: omega, range: "finite" });
        }
        if !gamma.is_finite() {
            return Err(Error::OutOfRange { what: "gamma", value: gamma, range: "finite" });
        }
        Ok(SpatialMode {
            theta: theta.clamp(0.0, FRAC_PI_2),
            omega: omega.rem_euclid(TAU),
            phi: phi.clamp(0.0, FRAC_PI_2),
            gamma: gamma.rem_euclid(TAU),
            chi_id,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn chi_id(&self) -> Option<u32> {
        self.chi_id
    }

    /// Remainder label; modes without an explicit id share χ0.
    pub fn remainder_label(&self) -> SpatialLabel {
        SpatialLabel::Chi(self.chi_id.unwrap_or(0))
    }

    /// ⟨L|ψ⟩
    pub fn left_amplitude(&self) -> Complex64 {
        Complex64::new(self.phi.sin() * self.theta.cos(), 0.0)
    }

    /// ⟨R|ψ⟩
    pub fn right_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.phi.sin() * self.theta.sin(), self.omega)
    }

    /// ⟨χ|ψ⟩
    pub fn remainder_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.phi.cos(), self.gamma)
    }
}

fn check_angle(what: &'static str, value: f64) -> Result<()> {
    const SLACK: f64 = 1e-12;
    if value.is_finite() && (-SLACK..=FRAC_PI_2 + SLACK).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value, range: "[0, π/2]" })
    }
}

/// Complex amplitudes over the single-particle basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleKet {
    amplitudes: BTreeMap<ModeLabel, Complex64>,
}

impl SingleParticleKet {
    /// Builds a ket and checks it has unit norm.
    pub fn new(amplitudes: impl IntoIterator<Item = (ModeLabel, Complex64)>) -> Result<Self> {
        let ket = Self::unnormalized(amplitudes);
        let norm_sq = ket.norm_sq();
        if (norm_sq - 1.0).abs() > Tolerances::DEFAULT.normalization {
            return Err(Error::Normalization { norm_sq });
        }
        Ok(ket)
    }

    /// Builds a ket without the unit-norm check.
    pub fn unnormalized(amplitudes: impl IntoIterator<Item = (ModeLabel, Complex64)>) -> Self {
        let mut map = BTreeMap::new();
        for (label, amp) in amplitudes {
            *map.entry(label).or_insert(ZERO) += amp;
        }
        map.retain(|_, a: &mut Complex64| a.norm() >= Tolerances::DEFAULT.pruning);
        SingleParticleKet { amplitudes: map }
    }

    pub fn basis(label: ModeLabel) -> Self {
        SingleParticleKet {
            amplitudes: BTreeMap::from([(label, ONE)]),
        }
    }

    pub fn amplitude(&self, label: &ModeLabel) -> Complex64 {
        self.amplitudes.get(label).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeLabel, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &ModeLabel> {
        self.amplitudes.keys()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &SingleParticleKet) -> Complex64 {
        self.amplitudes
            .iter()
            .filter_map(|(l, a)| other.amplitudes.get(l).map(|b| a.conj() * b))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }
}

/// |ψ⟩ ⊗ |s⟩ for a spatial mode and pseudospin.
pub fn mode_ket(mode: &SpatialMode, spin: PseudoSpin) -> SingleParticleKet {
    SingleParticleKet::unnormalized([
        (ModeLabel::new(SpatialLabel::L, spin), mode.left_amplitude()),
        (ModeLabel::new(SpatialLabel::R, spin), mode.right_amplitude()),
        (ModeLabel::new(mode.remainder_label(), spin), mode.remainder_amplitude()),
    ])
}

/// Canonical (sorted) multiset of single-particle labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationKey(Vec<ModeLabel>);

impl OccupationKey {
    pub fn new(mut labels: Vec<ModeLabel>) -> Self {
        labels.sort();
        OccupationKey(labels)
    }

    pub fn vacuum() -> Self {
        OccupationKey(Vec::new())
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Occupation counts of each distinct label, in key order.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 && self.0[i - 1] == *l {
                *out.last_mut().unwrap() += 1;
            } else {
                out.push(1);
            }
        }
        out
    }

    pub fn has_repeats(&self) -> bool {
        self.0.windows(2).any(|w| w[0] == w[1])
    }

    pub fn count(&self, pred: impl Fn(&ModeLabel) -> bool) -> usize {
        self.0.iter().filter(|l| pred(l)).count()
    }

    /// Splits into (selected, rest) together with the parity (+1/-1) of the
    /// shuffle that moves the selected entries in front of the rest.
    pub fn split(&self, selected: impl Fn(&ModeLabel) -> bool) -> (OccupationKey, OccupationKey, f64) {
        let mut sel = Vec::new();
        let mut rest = Vec::new();
        let mut crossings = 0usize;
        for l in &self.0 {
            if selected(l) {
                crossings += rest.len();
                sel.push(*l);
            } else {
                rest.push(*l);
            }
        }
        let sign = if crossings.is_multiple_of(2) { 1.0 } else { -1.0 };
        (OccupationKey(sel), OccupationKey(rest), sign)
    }

    /// Concatenates two keys (result re-sorted) and returns the parity of the
    /// sort relative to `self` followed by `other`.
    pub fn join(&self, other: &OccupationKey) -> (OccupationKey, f64) {
        let mut all = self.0.clone();
        all.extend_from_slice(&other.0);
        let sign = sort_parity(&all);
        all.sort();
        (OccupationKey(all), sign)
    }

    /// Π m_l! over the multiplicities.
    pub fn multiplicity_factorial(&self) -> f64 {
        self.multiplicities().iter().map(|&m| factorial(m)).product()
    }
}

impl fmt::Display for OccupationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "⟩")
    }
}

/// Parity of the permutation that sorts `items` (+1 even, -1 odd). Equal
/// entries are treated as already ordered.
pub(crate) fn sort_parity<T: Ord>(items: &[T]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            if items[i] > items[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Permutation-(anti)symmetric N-particle state in the occupation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricKet {
    n_particles: usize,
    statistics: Statistics,
    amplitudes: BTreeMap<OccupationKey, Complex64>,
}

impl SymmetricKet {
    pub fn zero(n_particles: usize, statistics: Statistics) -> Self {
        SymmetricKet {
            n_particles,
            statistics,
            amplitudes: BTreeMap::new(),
        }
    }

    pub fn vacuum(statistics: Statistics) -> Self {
        SymmetricKet {
            n_particles: 0,
            statistics,
            amplitudes: BTreeMap::from([(OccupationKey::vacuum(), ONE)]),
        }
    }

    /// Collects amplitudes; entries below the pruning threshold are dropped.
    pub fn from_amplitudes(
        n_particles: usize,
        statistics: Statistics,
        amplitudes: impl IntoIterator<Item = (OccupationKey, Complex64)>,
    ) -> Result<Self> {
        let mut ket = Self::zero(n_particles, statistics);
        for (key, amp) in amplitudes {
            ket.accumulate(key, amp)?;
        }
        ket.prune();
        Ok(ket)
    }

    /// Adds `amp` to the entry for `key`.
    pub fn accumulate(&mut self, key: OccupationKey, amp: Complex64) -> Result<()> {
        if key.len() != self.n_particles {
            return Err(Error::Consistency(format!(
                "key {key} has {} particles, state has {}",
                key.len(),
                self.n_particles
            )));
        }
        if self.statistics == Statistics::Fermion && key.has_repeats() {
            return Err(Error::Consistency(format!("fermionic key {key} repeats a label")));
        }
        *self.amplitudes.entry(key).or_insert(ZERO) += amp;
        Ok(())
    }

    pub fn prune(&mut self) {
        let tol = Tolerances::DEFAULT.pruning;
        self.amplitudes.retain(|_, a| a.norm() >= tol);
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn amplitude(&self, key: &OccupationKey) -> Complex64 {
        self.amplitudes.get(key).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OccupationKey, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &OccupationKey> {
        self.amplitudes.keys()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &SymmetricKet) -> Complex64 {
        self.amplitudes
            .iter()
            .filter_map(|(k, a)| other.amplitudes.get(k).map(|b| a.conj() * b))
            .sum()
    }

    pub fn scaled(&self, c: Complex64) -> SymmetricKet {
        let mut out = self.clone();
        out.amplitudes.values_mut().for_each(|a| *a *= c);
        out.prune();
        out
    }

    /// Unit-norm copy; a state with norm² below the pruning threshold is an error.
    pub fn normalized(&self) -> Result<SymmetricKet> {
        let norm_sq = self.norm_sq();
        if norm_sq < Tolerances::DEFAULT.pruning {
            return Err(Error::NullState { norm_sq });
        }
        Ok(self.scaled(Complex64::new(1.0 / norm_sq.sqrt(), 0.0)))
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sq() - 1.0).abs() <= tol
    }

    /// Keeps only the entries whose key satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(&OccupationKey) -> bool) -> SymmetricKet {
        SymmetricKet {
            n_particles: self.n_particles,
            statistics: self.statistics,
            amplitudes: self
                .amplitudes
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, a)| (k.clone(), *a))
                .collect(),
        }
    }
}

/// Groups equal items and returns their counts ν_1, …, ν_l.
pub fn multiplicities<T: PartialEq>(items: &[T]) -> Vec<usize> {
    let mut reps: Vec<(&T, usize)> = Vec::new();
    for it in items {
        match reps.iter_mut().find(|(r, _)| *r == it) {
            Some((_, c)) => *c += 1,
            None => reps.push((it, 1)),
        }
    }
    reps.into_iter().map(|(_, c)| c).collect()
}

/// sqrt(Π ν_j! / N!).
pub fn normalization_total(multiplicities: &[usize], n_total: usize) -> Result<f64> {
    let sum: usize = multiplicities.iter().sum();
    if sum != n_total {
        return Err(Error::Consistency(format!(
            "multiplicities sum to {sum}, expected {n_total}"
        )));
    }
    if multiplicities.contains(&0) {
        return Err(Error::Consistency("multiplicities must be at least 1".into()));
    }
    let log_num: f64 = multiplicities.iter().map(|&m| ln_factorial(m)).sum();
    Ok((0.5 * (log_num - ln_factorial(n_total))).exp())
}

/// Normalization of the n-particle subsystem state built as a sum over
/// distinct pseudo-label assignments out of `n_total` labels:
/// 1/sqrt(number of distinct assignments) = sqrt((N-n)! Π ν_j! / N!).
pub fn normalization_subsystem<T: PartialEq>(sub_states: &[T], n_total: usize) -> Result<f64> {
    let n = sub_states.len();
    if n == 0 || n > n_total {
        return Err(Error::Consistency(format!(
            "subsystem of {n} particles in a system of {n_total}"
        )));
    }
    let log_num: f64 = multiplicities(sub_states).iter().map(|&m| ln_factorial(m)).sum::<f64>()
        + ln_factorial(n_total - n);
    Ok((0.5 * (log_num - ln_factorial(n_total))).exp())
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Overlap matrix with entries ⟨bras[i]|kets[j]⟩.
pub fn overlap_matrix(bras: &[SingleParticleKet], kets: &[SingleParticleKet]) -> Result<ComplexMatrix> {
    ComplexMatrix::from_fn(bras.len(), kets.len(), |i, j| bras[i].inner(&kets[j]))
}

fn key_overlap(key: &OccupationKey, kets: &[SingleParticleKet]) -> Result<ComplexMatrix> {
    ComplexMatrix::from_fn(key.len(), kets.len(), |i, j| kets[j].amplitude(&key.labels()[i]))
}

/// ⟨key|U(kets)⟩ where U is the symmetrization with Gram norm² perm(G)
/// (det(G) for fermions): perm(A_key)/sqrt(Π m!).
pub fn unnormalized_amplitude(
    key: &OccupationKey,
    kets: &[SingleParticleKet],
    statistics: Statistics,
    method: PermanentMethod,
) -> Result<Complex64> {
    if key.len() != kets.len() {
        return Err(Error::Consistency(format!(
            "key has {} particles, {} kets supplied",
            key.len(),
            kets.len()
        )));
    }
    let a = key_overlap(key, kets)?;
    match statistics {
        Statistics::Boson => Ok(permanent(&a, method)? / key.multiplicity_factorial().sqrt()),
        Statistics::Fermion if key.has_repeats() => Ok(ZERO),
        Statistics::Fermion => determinant(&a),
    }
}

/// Squared norm of U(kets): perm(G) or det(G) of the Gram matrix.
pub fn gram_norm_sq(kets: &[SingleParticleKet], statistics: Statistics, method: PermanentMethod) -> Result<f64> {
    let g = overlap_matrix(kets, kets)?;
    let v = match statistics {
        Statistics::Boson => permanent(&g, method)?,
        Statistics::Fermion => determinant(&g)?,
    };
    Ok(v.re)
}

/// True when every slot of `key` can be matched to a distinct ket with
/// nonzero amplitude on that slot's label.
fn has_perfect_matching(key: &OccupationKey, kets: &[SingleParticleKet]) -> bool {
    fn augment(
        slot: usize,
        key: &OccupationKey,
        kets: &[SingleParticleKet],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for (k, ket) in kets.iter().enumerate() {
            if seen[k] || ket.amplitude(&key.labels()[slot]) == ZERO {
                continue;
            }
            seen[k] = true;
            let current = owner[k];
            if current.is_none_or(|other| augment(other, key, kets, seen, owner)) {
                owner[k] = Some(slot);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; kets.len()];
    (0..key.len()).all(|slot| {
        let mut seen = vec![false; kets.len()];
        augment(slot, key, kets, &mut seen, &mut owner)
    })
}

/// Every occupation key of size `n` over `labels` (sorted, distinct);
/// without repeats when `distinct` is set.
pub fn enumerate_keys(labels: &[ModeLabel], n: usize, distinct: bool) -> Vec<OccupationKey> {
    fn rec(labels: &[ModeLabel], start: usize, n: usize, distinct: bool, cur: &mut Vec<ModeLabel>, out: &mut Vec<OccupationKey>) {
        if cur.len() == n {
            out.push(OccupationKey(cur.clone()));
            return;
        }
        for i in start..labels.len() {
            cur.push(labels[i]);
            rec(labels, if distinct { i + 1 } else { i }, n, distinct, cur, out);
            cur.pop();
        }
    }
    let mut sorted = labels.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out = Vec::new();
    rec(&sorted, 0, n, distinct, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Normalized (anti)symmetrized product state of `kets`.
pub fn make_product_state(kets: &[SingleParticleKet], statistics: Statistics) -> Result<SymmetricKet> {
    make_product_state_with(kets, statistics, PermanentMethod::Ryser)
}

pub fn make_product_state_with(
    kets: &[SingleParticleKet],
    statistics: Statistics,
    method: PermanentMethod,
) -> Result<SymmetricKet> {
    if kets.is_empty() {
        return Err(Error::Consistency("at least one ket is required".into()));
    }
    let norm_sq = gram_norm_sq(kets, statistics, method)?;
    if norm_sq < Tolerances::DEFAULT.pruning {
        return Err(Error::NullState { norm_sq });
    }
    let scale = 1.0 / norm_sq.sqrt();
    let labels: Vec<ModeLabel> = kets.iter().flat_map(|k| k.support().copied()).collect();
    let mut state = SymmetricKet::zero(kets.len(), statistics);
    for key in enumerate_keys(&labels, kets.len(), statistics == Statistics::Fermion) {
        if !has_perfect_matching(&key, kets) {
            continue;
        }
        let amp = unnormalized_amplitude(&key, kets, statistics, method)?;
        state.accumulate(key, amp * scale)?;
    }
    state.prune();
    Ok(state)
}

/// Pseudo-labeled N-particle vector: entry `t[a]` is the single-particle
/// label carried by pseudo-label `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledState {
    n_particles: usize,
    terms: BTreeMap<Vec<ModeLabel>, Complex64>,
}

impl LabeledState {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn terms(&self) -> &BTreeMap<Vec<ModeLabel>, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, labels: &[ModeLabel]) -> Complex64 {
        self.terms.get(labels).copied().unwrap_or(ZERO)
    }

    pub fn norm_sq(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &LabeledState) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|(k, a)| other.terms.get(k).map(|b| a.conj() * b))
            .sum()
    }

    pub fn normalized(&self) -> Result<LabeledState> {
        let norm_sq = self.norm_sq();
        if norm_sq < Tolerances::DEFAULT.pruning {
            return Err(Error::NullState { norm_sq });
        }
        let s = 1.0 / norm_sq.sqrt();
        Ok(LabeledState {
            n_particles: self.n_particles,
            terms: self.terms.iter().map(|(k, a)| (k.clone(), a * s)).collect(),
        })
    }

    /// Projects onto the symmetric (antisymmetric) occupation basis:
    /// ⟨K|v⟩ = Σ_t sgn(t) v[t] sqrt(Π m_K! / N!) over the terms t that sort to K.
    pub fn collect(&self, statistics: Statistics) -> Result<SymmetricKet> {
        let n = self.n_particles;
        let mut out = SymmetricKet::zero(n, statistics);
        for (t, a) in &self.terms {
            let key = OccupationKey::new(t.clone());
            if statistics == Statistics::Fermion && key.has_repeats() {
                continue;
            }
            let sign = match statistics {
                Statistics::Boson => 1.0,
                Statistics::Fermion => sort_parity(t),
            };
            let w = (key.multiplicity_factorial() / factorial(n)).sqrt();
            out.accumulate(key, a * sign * w)?;
        }
        out.prune();
        Ok(out)
    }
}

/// Calls `f` with every permutation of `0..n` and its sign.
pub(crate) fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize], f64)) {
    fn rec(k: usize, p: &mut Vec<usize>, sign: f64, f: &mut impl FnMut(&[usize], f64)) {
        if k == p.len() {
            f(p, sign);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, if i == k { sign } else { -sign }, f);
            p.swap(k, i);
        }
    }
    let mut p: Vec<usize> = (0..n).collect();
    rec(0, &mut p, 1.0, &mut f);
}

/// Raw symmetrization Σ_σ sgn(σ)^{[fermion]} ⊗_i |ψ_i⟩_{σ(i)}, expanded over
/// the single-particle basis. No normalization is applied.
pub fn symmetrize_labeled(kets: &[SingleParticleKet], statistics: Statistics) -> Result<LabeledState> {
    let n = kets.len();
    if n > EXPANSION_LIMIT {
        return Err(Error::SizeLimit {
            what: "first-quantized expansion",
            size: n,
            limit: EXPANSION_LIMIT,
        });
    }
    // label tuples are encoded as base-d integers over the sorted alphabet
    let mut alphabet: Vec<ModeLabel> = kets.iter().flat_map(|k| k.support().copied()).collect();
    alphabet.sort();
    alphabet.dedup();
    let d = alphabet.len().max(1);
    let supports: Vec<Vec<(usize, Complex64)>> = kets
        .iter()
        .map(|k| k.iter().map(|(l, a)| (alphabet.binary_search(l).unwrap(), *a)).collect())
        .collect();
    let mut acc: HashMap<usize, Complex64> = HashMap::new();
    let mut ket_at = vec![0usize; n];
    for_each_permutation(n, |sigma, sign| {
        let sign = match statistics {
            Statistics::Boson => 1.0,
            Statistics::Fermion => sign,
        };
        // position sigma[i] carries ket i
        for (i, &pos) in sigma.iter().enumerate() {
            ket_at[pos] = i;
        }
        fn walk(
            pos: usize,
            code: usize,
            amp: Complex64,
            d: usize,
            ket_at: &[usize],
            supports: &[Vec<(usize, Complex64)>],
            acc: &mut HashMap<usize, Complex64>,
        ) {
            if pos == ket_at.len() {
                *acc.entry(code).or_insert(ZERO) += amp;
                return;
            }
            for &(digit, b) in &supports[ket_at[pos]] {
                walk(pos + 1, code * d + digit, amp * b, d, ket_at, supports, acc);
            }
        }
        walk(0, 0, Complex64::new(sign, 0.0), d, &ket_at, &supports, &mut acc);
    });
    let mut terms: BTreeMap<Vec<ModeLabel>, Complex64> = BTreeMap::new();
    for (mut code, a) in acc {
        let mut t = vec![alphabet.first().copied().unwrap_or(ModeLabel::L_UP); n];
        for slot in t.iter_mut().rev() {
            *slot = alphabet[code % d];
            code /= d;
        }
        terms.insert(t, a);
    }
    let tol = Tolerances::DEFAULT.pruning;
    terms.retain(|_, a| a.norm() >= tol);
    Ok(LabeledState { n_particles: n, terms })
}

/// The literal pseudo-labeled form of the (anti)symmetrized product state,
/// normalized to unit norm.
pub fn expand_first_quantized(kets: &[SingleParticleKet], statistics: Statistics) -> Result<LabeledState> {
    symmetrize_labeled(kets, statistics)?.normalized()
}

/// Inverse of [`LabeledState::collect`]: spreads each occupation amplitude
/// over the distinct label arrangements of its key.
pub fn to_labeled(state: &SymmetricKet) -> Result<LabeledState> {
    let n = state.n_particles();
    if n > LABELED_LIMIT {
        return Err(Error::SizeLimit {
            what: "pseudo-labeled conversion",
            size: n,
            limit: LABELED_LIMIT,
        });
    }
    let mut terms = BTreeMap::new();
    for (key, a) in state.iter() {
        let w = (key.multiplicity_factorial() / factorial(n)).sqrt();
        let mut arrangement = key.labels().to_vec();
        loop {
            let sign = match state.statistics() {
                Statistics::Boson => 1.0,
                Statistics::Fermion => sort_parity(&arrangement),
            };
            terms.insert(arrangement.clone(), a * sign * w);
            if !next_permutation(&mut arrangement) {
                break;
            }
        }
    }
    Ok(LabeledState { n_particles: n, terms })
}

/// Lexicographic successor of a multiset arrangement; false after the last.
fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
