//! Transition amplitudes, single-particle contraction, density matrices and
//! the symmetrized partial trace.

use std::collections::{BTreeMap, BTreeSet};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{determinant, permanent, ComplexMatrix, PermanentMethod};
use crate::states::{
    enumerate_keys, multiplicities, normalization_total, overlap_matrix, unnormalized_amplitude, ModeLabel,
    OccupationKey, SingleParticleKet, Statistics, SymmetricKet,
};
use crate::tolerance::Tolerances;

/// N×N overlap matrix with entries ⟨Φ_i|Ψ_j⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix(pub ComplexMatrix);

impl OverlapMatrix {
    pub fn new(bras: &[SingleParticleKet], kets: &[SingleParticleKet]) -> Result<Self> {
        overlap_matrix(bras, kets).map(OverlapMatrix)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

/// ⟨Φ_1,…,Φ_N|Ψ_1,…,Ψ_N⟩ = perm(A) / (N! N_N(Φ) N_N(Ψ)); for fermions the
/// determinant replaces the permanent and every multiplicity is 1.
pub fn transition_amplitude(
    bras: &[SingleParticleKet],
    kets: &[SingleParticleKet],
    statistics: Statistics,
) -> Result<Complex64> {
    transition_amplitude_with(bras, kets, statistics, PermanentMethod::Ryser)
}

pub fn transition_amplitude_with(
    bras: &[SingleParticleKet],
    kets: &[SingleParticleKet],
    statistics: Statistics,
    method: PermanentMethod,
) -> Result<Complex64> {
    let n = kets.len();
    if bras.len() != n {
        return Err(Error::Consistency(format!("{} bras against {n} kets", bras.len())));
    }
    if n == 0 {
        return Err(Error::Consistency("at least one particle is required".into()));
    }
    let a = OverlapMatrix::new(bras, kets)?;
    match statistics {
        Statistics::Boson => {
            let norm_bra = normalization_total(&multiplicities(bras), n)?;
            let norm_ket = normalization_total(&multiplicities(kets), n)?;
            let n_fact: f64 = (1..=n).map(|k| k as f64).product();
            Ok(permanent(a.matrix(), method)? / (n_fact * norm_bra * norm_ket))
        }
        Statistics::Fermion => determinant(a.matrix()),
    }
}

/// Contraction of one bra against a symmetrized ket list:
/// Σ_i ⟨Φ|Ψ_i⟩ |Ψ_1,…,(Ψ_i),…,Ψ_N⟩, each (N−1)-particle term carrying the
/// paper-style normalization N_{N−1}(ν) of its own ket list. For fermions the
/// i-th term picks up (−1)^i. The result is not normalized.
pub fn contract_single(
    bra: &SingleParticleKet,
    kets: &[SingleParticleKet],
    statistics: Statistics,
) -> Result<SymmetricKet> {
    let n = kets.len();
    if n == 0 {
        return Err(Error::Consistency("contraction needs at least one ket".into()));
    }
    let mut out = SymmetricKet::zero(n - 1, statistics);
    let labels: Vec<ModeLabel> = kets.iter().flat_map(|k| k.support().copied()).collect();
    for i in 0..n {
        let weight = bra.inner(&kets[i]);
        if weight.norm() < Tolerances::DEFAULT.pruning {
            continue;
        }
        let sign = match statistics {
            Statistics::Fermion if i % 2 == 1 => -1.0,
            _ => 1.0,
        };
        let rest: Vec<SingleParticleKet> = kets
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, k)| k.clone())
            .collect();
        let norm = match statistics {
            Statistics::Boson if !rest.is_empty() => {
                1.0 / multiplicities(&rest).iter().map(|&m| crate::states::factorial(m)).product::<f64>().sqrt()
            }
            _ => 1.0,
        };
        for key in enumerate_keys(&labels, n - 1, statistics == Statistics::Fermion) {
            let amp = unnormalized_amplitude(&key, &rest, statistics, PermanentMethod::Ryser)?;
            if amp.norm() >= Tolerances::DEFAULT.pruning {
                out.accumulate(key, amp * weight * sign * norm)?;
            }
        }
    }
    out.prune();
    Ok(out)
}

/// Hermitian positive semidefinite operator on an occupation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis: Vec<OccupationKey>,
    entries: Mat<Complex64>,
    statistics: Statistics,
}

impl DensityMatrix {
    /// Checks Hermiticity, the eigenvalue floor and the trace bound.
    pub fn new(basis: Vec<OccupationKey>, entries: Mat<Complex64>, statistics: Statistics) -> Result<Self> {
        Self::with_tolerance(basis, entries, statistics, Tolerances::DEFAULT.comparison)
    }

    pub fn with_tolerance(
        basis: Vec<OccupationKey>,
        entries: Mat<Complex64>,
        statistics: Statistics,
        tol: f64,
    ) -> Result<Self> {
        let d = basis.len();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::InvalidDensity(format!(
                "{}x{} entries for a basis of {d}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if let Some(n) = basis.first().map(OccupationKey::len) {
            if basis.iter().any(|k| k.len() != n) {
                return Err(Error::InvalidDensity("basis mixes particle numbers".into()));
            }
        }
        if basis.iter().collect::<BTreeSet<_>>().len() != d {
            return Err(Error::InvalidDensity("basis has duplicate keys".into()));
        }
        let mut hermitian_gap: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let z = entries[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                hermitian_gap = hermitian_gap.max((z - entries[(j, i)].conj()).norm());
            }
        }
        if hermitian_gap > tol {
            return Err(Error::InvalidDensity(format!("not Hermitian (gap {hermitian_gap:e})")));
        }
        let rho = DensityMatrix { basis, entries, statistics };
        let trace = rho.trace();
        if !(-tol..=1.0 + tol).contains(&trace) {
            return Err(Error::InvalidDensity(format!("trace {trace} outside [0, 1]")));
        }
        if let Some(&min) = rho.eigenvalues().last() {
            if min < -tol {
                return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(rho)
    }

    pub fn basis(&self) -> &[OccupationKey] {
        &self.basis
    }

    pub fn entries(&self) -> &Mat<Complex64> {
        &self.entries
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, key: &OccupationKey) -> Option<usize> {
        self.basis.iter().position(|k| k == key)
    }

    pub fn get(&self, row: &OccupationKey, col: &OccupationKey) -> Complex64 {
        match (self.index_of(row), self.index_of(col)) {
            (Some(i), Some(j)) => self.entries[(i, j)],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        let d = self.dim();
        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|ij| self.entries[ij].norm_sqr()).sum()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        // the entries are Hermitian by construction, so the decomposition
        // cannot fail short of non-finite input, which `new` rejects
        let mut ev = self.entries.self_adjoint_eigenvalues(faer::Side::Lower).unwrap_or_default();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > threshold).count()
    }

    /// Convex combination Σ_a p_a ρ_a over the union of the bases.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<DensityMatrix> {
        let statistics = parts.first().map_or(Statistics::Boson, |(_, r)| r.statistics);
        let basis: Vec<OccupationKey> = parts
            .iter()
            .flat_map(|(_, r)| r.basis.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&OccupationKey, usize> = basis.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut entries = Mat::zeros(basis.len(), basis.len());
        for (p, rho) in parts {
            if *p < 0.0 {
                return Err(Error::InvalidDensity(format!("negative weight {p}")));
            }
            for (i, ki) in rho.basis.iter().enumerate() {
                for (j, kj) in rho.basis.iter().enumerate() {
                    entries[(index[ki], index[kj])] += rho.entries[(i, j)] * *p;
                }
            }
        }
        DensityMatrix::new(basis, entries, statistics)
    }
}

/// |ψ⟩⟨ψ| for a normalized state.
pub fn pure_to_density(psi: &SymmetricKet) -> Result<DensityMatrix> {
    let norm_sq = psi.norm_sq();
    if (norm_sq - 1.0).abs() > 1e-10 {
        return Err(Error::Normalization { norm_sq });
    }
    let basis: Vec<OccupationKey> = psi.keys().cloned().collect();
    let amps: Vec<Complex64> = psi.iter().map(|(_, a)| *a).collect();
    let d = basis.len();
    let entries = Mat::from_fn(d, d, |i, j| amps[i] * amps[j].conj());
    DensityMatrix::new(basis, entries, psi.statistics())
}

/// Traces out the subsystem spanned by `subsystem_basis`.
///
/// The subsystem is the set of single-particle labels occurring in the
/// basis keys. Every key of ρ splits uniquely into its subsystem part and
/// the remainder; the subsystem part must be one of the basis keys (this is
/// the I_S |Ψ⟩ = |Ψ⟩ condition). The returned operator lives on the
/// remainder keys.
pub fn symmetrized_partial_trace(rho: &DensityMatrix, subsystem_basis: &[OccupationKey]) -> Result<DensityMatrix> {
    symmetrized_partial_trace_with(rho, subsystem_basis, &Tolerances::DEFAULT)
}

pub fn symmetrized_partial_trace_with(
    rho: &DensityMatrix,
    subsystem_basis: &[OccupationKey],
    tol: &Tolerances,
) -> Result<DensityMatrix> {
    let n_sub = match subsystem_basis.first() {
        Some(k) => k.len(),
        None => return Err(Error::Consistency("empty subsystem basis".into())),
    };
    if subsystem_basis.iter().any(|k| k.len() != n_sub) {
        return Err(Error::Consistency("subsystem basis mixes particle numbers".into()));
    }
    let modes: BTreeSet<ModeLabel> = subsystem_basis.iter().flat_map(|k| k.labels().iter().copied()).collect();
    let members: BTreeSet<&OccupationKey> = subsystem_basis.iter().collect();
    let fermion = rho.statistics == Statistics::Fermion;

    // (subsystem key, remainder key, sign) per row of rho, or None if uncovered
    let mut deficit = 0.0;
    let splits: Vec<Option<(OccupationKey, OccupationKey, f64)>> = rho
        .basis
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let (sub, rest, sign) = key.split(|l| modes.contains(l));
            if members.contains(&sub) {
                Some((sub, rest, if fermion { sign } else { 1.0 }))
            } else {
                deficit += rho.entries[(i, i)].re;
                None
            }
        })
        .collect();
    if deficit > tol.comparison {
        return Err(Error::IncompleteBasis { deficit });
    }

    let out_basis: Vec<OccupationKey> = splits
        .iter()
        .flatten()
        .map(|(_, rest, _)| rest.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&OccupationKey, usize> = out_basis.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut entries = Mat::zeros(out_basis.len(), out_basis.len());
    for (i, si) in splits.iter().enumerate() {
        let Some((sub_i, rest_i, sign_i)) = si else { continue };
        for (j, sj) in splits.iter().enumerate() {
            let Some((sub_j, rest_j, sign_j)) = sj else { continue };
            if sub_i == sub_j {
                entries[(index[rest_i], index[rest_j])] += rho.entries[(i, j)] * (sign_i * sign_j);
            }
        }
    }
    DensityMatrix::with_tolerance(out_basis, entries, rho.statistics, tol.comparison)
}
