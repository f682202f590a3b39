//! Entanglement quantifiers and Schmidt decompositions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;

use crate::algebra::DensityMatrix;
use crate::detection::{project_onto_detectors, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::states::{to_labeled, ModeLabel, SpatialMode, Statistics, SymmetricKet};

/// Eigenvalues at or below this are treated as zero.
pub const EIGEN_CUTOFF: f64 = 1e-14;
/// Schmidt coefficients below this are dropped.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;

const TRACE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Measure {
    /// von Neumann entropy in bits.
    #[default]
    Entropy,
    /// I-concurrence sqrt(2 (1 − Tr ρ²)).
    Concurrence,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Entropy => "entropy",
            Measure::Concurrence => "concurrence",
        }
    }

    /// Value of the measure for the pure state whose reduced state is `rho`.
    pub fn of_density(self, rho: &DensityMatrix) -> Result<f64> {
        match self {
            Measure::Entropy => von_neumann_entropy(rho),
            Measure::Concurrence => concurrence(rho),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(Measure::Entropy),
            "concurrence" => Ok(Measure::Concurrence),
            other => Err(Error::Consistency(format!("unknown measure `{other}`"))),
        }
    }
}

fn check_trace(rho: &DensityMatrix) -> Result<()> {
    let t = rho.trace();
    if (t - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::Normalization { norm_sq: t });
    }
    Ok(())
}

fn significant_eigenvalues(rho: &DensityMatrix) -> Vec<f64> {
    rho.eigenvalues().into_iter().filter(|&v| v > EIGEN_CUTOFF).collect()
}

/// −Σ λ log₂ λ over the eigenvalues above the cutoff.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    check_trace(rho)?;
    Ok(significant_eigenvalues(rho).iter().map(|&v| -v * v.log2()).sum::<f64>().max(0.0))
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// sqrt(2 (1 − Tr ρ²)), evaluated as 2 sqrt(Σ_{i<j} λ_i λ_j) over the
/// eigenvalues above the cutoff so that rank-1 states give exactly zero.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    check_trace(rho)?;
    Ok(pairwise_concurrence(&significant_eigenvalues(rho)))
}

fn pairwise_concurrence(weights: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, a) in weights.iter().enumerate() {
        for b in &weights[i + 1..] {
            acc += a * b;
        }
    }
    2.0 * acc.sqrt()
}

/// Way of cutting a pure state in two.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Bipartition {
    /// Modes in the set against all other modes.
    Modes(BTreeSet<ModeLabel>),
    /// First `n` pseudo-labels against the remaining ones.
    Labels(usize),
}

impl Bipartition {
    /// Detector L (both spins) against everything else.
    pub fn left_right() -> Self {
        Bipartition::Modes([ModeLabel::L_UP, ModeLabel::L_DOWN].into_iter().collect())
    }
}

/// Concurrence of a normalized pure state across the bipartition.
pub fn concurrence_pure(psi: &SymmetricKet, bipartition: &Bipartition) -> Result<f64> {
    let s = schmidt_decompose(psi, bipartition)?;
    let w: Vec<f64> = s.coefficients.iter().map(|l| l * l).collect();
    Ok(pairwise_concurrence(&w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtResult {
    /// Descending, nonnegative, Σλ² = 1.
    pub coefficients: Vec<f64>,
    /// Labels indexing the components of the left basis vectors.
    pub left_index: Vec<Vec<ModeLabel>>,
    pub right_index: Vec<Vec<ModeLabel>>,
    /// One vector per coefficient, over `left_index`.
    pub left_basis: Vec<Vec<Complex64>>,
    /// One vector per coefficient, over `right_index`; carries the phases.
    pub right_basis: Vec<Vec<Complex64>>,
    pub bipartition: Bipartition,
    /// Largest entry of the coefficient matrix minus its reconstruction.
    pub reconstruction_error: f64,
}

impl SchmidtResult {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }
}

/// Row labels, column labels and the matrix itself.
type CoefficientMatrix = (Vec<Vec<ModeLabel>>, Vec<Vec<ModeLabel>>, Mat<Complex64>);

/// Coefficient matrix of `psi` across the bipartition.
fn coefficient_matrix(
    psi: &SymmetricKet,
    bipartition: &Bipartition,
) -> Result<CoefficientMatrix> {
    let mut entries: BTreeMap<(Vec<ModeLabel>, Vec<ModeLabel>), Complex64> = BTreeMap::new();
    match bipartition {
        Bipartition::Modes(set) => {
            if set.is_empty() {
                return Err(Error::Bipartition("empty mode set".into()));
            }
            let fermion = psi.statistics() == Statistics::Fermion;
            for (key, amp) in psi.iter() {
                let (sub, rest, sign) = key.split(|l| set.contains(l));
                let sign = if fermion { sign } else { 1.0 };
                *entries.entry((sub.labels().to_vec(), rest.labels().to_vec())).or_default() += amp * sign;
            }
        }
        Bipartition::Labels(n_x) => {
            let n = psi.n_particles();
            if *n_x == 0 || *n_x >= n {
                return Err(Error::Bipartition(format!("label split {n_x} of {n} particles leaves a side empty")));
            }
            let labeled = to_labeled(psi)?;
            for (labels, amp) in labeled.terms() {
                let (x, y) = labels.split_at(*n_x);
                *entries.entry((x.to_vec(), y.to_vec())).or_default() += *amp;
            }
        }
    }
    let rows: Vec<Vec<ModeLabel>> = entries.keys().map(|(r, _)| r.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let cols: Vec<Vec<ModeLabel>> = entries.keys().map(|(_, c)| c.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let ri: BTreeMap<&Vec<ModeLabel>, usize> = rows.iter().enumerate().map(|(i, r)| (r, i)).collect();
    let ci: BTreeMap<&Vec<ModeLabel>, usize> = cols.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut m = Mat::zeros(rows.len(), cols.len());
    for ((r, c), v) in &entries {
        m[(ri[r], ci[c])] = *v;
    }
    Ok((rows, cols, m))
}

/// Schmidt form of a normalized pure state via the singular values of its
/// coefficient matrix.
pub fn schmidt_decompose(psi: &SymmetricKet, bipartition: &Bipartition) -> Result<SchmidtResult> {
    let norm_sq = psi.norm_sq();
    if (norm_sq - 1.0).abs() > 1e-10 {
        return Err(Error::Normalization { norm_sq });
    }
    let (left_index, right_index, m) = coefficient_matrix(psi, bipartition)?;
    let svd = m.svd().map_err(|e| Error::Bipartition(format!("singular value decomposition failed: {e:?}")))?;
    let (u, v, sigma) = (svd.U(), svd.V(), svd.S().column_vector());
    let mut order: Vec<usize> = (0..sigma.nrows()).collect();
    order.sort_by(|&a, &b| sigma[b].re.total_cmp(&sigma[a].re));
    order.retain(|&k| sigma[k].re >= SCHMIDT_CUTOFF);

    let coefficients: Vec<f64> = order.iter().map(|&k| sigma[k].re).collect();
    let left_basis: Vec<Vec<Complex64>> = order.iter().map(|&k| (0..m.nrows()).map(|i| u[(i, k)]).collect()).collect();
    // ψ = Σ_k λ_k u_k ⊗ conj(v_k)
    let right_basis: Vec<Vec<Complex64>> =
        order.iter().map(|&k| (0..m.ncols()).map(|j| v[(j, k)].conj()).collect()).collect();

    let mut reconstruction_error: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let r: Complex64 = coefficients
                .iter()
                .enumerate()
                .map(|(k, &l)| left_basis[k][i] * right_basis[k][j] * l)
                .sum();
            reconstruction_error = reconstruction_error.max((m[(i, j)] - r).norm());
        }
    }
    Ok(SchmidtResult {
        coefficients,
        left_index,
        right_index,
        left_basis,
        right_basis,
        bipartition: bipartition.clone(),
        reconstruction_error,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// λ_{n_X, n_Y} = sqrt(C(N_X, n_X) C(N_Y, n_Y) / C(N, n)) for every feasible
/// n_X + n_Y = n, descending: the label-split Schmidt coefficients of n
/// spin-up and N − n spin-down particles sharing one spatial mode.
pub fn label_split_coefficients(n_total: usize, n_up: usize, n_x: usize) -> Result<Vec<f64>> {
    if n_up > n_total || n_x > n_total {
        return Err(Error::Consistency(format!("n = {n_up}, N_X = {n_x} with N = {n_total}")));
    }
    let n_y = n_total - n_x;
    let total = binomial(n_total, n_up);
    let mut out: Vec<f64> = (0..=n_up.min(n_x))
        .filter(|&a| n_up - a <= n_y)
        .map(|a| (binomial(n_x, a) * binomial(n_y, n_up - a) / total).sqrt())
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtEquivalence {
    /// Label split of the input state, N_L labels against N_R.
    pub input_coefficients: Vec<f64>,
    /// Mode split L|R of the sector with N_L particles at L.
    pub output_coefficients: Vec<f64>,
    pub max_abs_diff: f64,
}

/// Compares the label-based Schmidt form of N particles sharing the mode
/// (θ, ω) with the mode-based Schmidt form after detection with N_L
/// particles at L and N_R at R.
pub fn verify_schmidt_equivalence(
    n_total: usize,
    n_up: usize,
    theta: f64,
    omega: f64,
    split: (usize, usize),
) -> Result<SchmidtEquivalence> {
    let mode = SpatialMode::new(theta, omega)?;
    let ensemble = ParticleEnsemble::complete_overlap(n_total, n_up, mode, Statistics::Boson)?;
    verify_schmidt_equivalence_for(&ensemble, split)
}

/// As [`verify_schmidt_equivalence`] for an arbitrary ensemble, where the
/// particles may overlap only partially.
pub fn verify_schmidt_equivalence_for(ensemble: &ParticleEnsemble, split: (usize, usize)) -> Result<SchmidtEquivalence> {
    let n = ensemble.n_particles();
    if split.0 + split.1 != n {
        return Err(Error::Consistency(format!("split {}+{} does not match N = {n}", split.0, split.1)));
    }
    if split.0 == 0 || split.1 == 0 {
        return Err(Error::Bipartition("both sides of the split need particles".into()));
    }
    let input = crate::states::make_product_state(&ensemble.kets(), ensemble.statistics())?;
    let input_coefficients = schmidt_decompose(&input, &Bipartition::Labels(split.0))?.coefficients;
    let decomposition = project_onto_detectors(ensemble)?;
    let sector = decomposition.sector(split.0).ok_or(Error::EmptySector)?;
    let output_coefficients = schmidt_decompose(&sector.state, &Bipartition::left_right())?.coefficients;
    let len = input_coefficients.len().max(output_coefficients.len());
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let max_abs_diff = (0..len)
        .map(|k| (at(&input_coefficients, k) - at(&output_coefficients, k)).abs())
        .fold(0.0, f64::max);
    Ok(SchmidtEquivalence { input_coefficients, output_coefficients, max_abs_diff })
}
