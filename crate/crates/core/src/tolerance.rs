//! Numerical thresholds shared by every module.

/// Comparison, normalization and pruning thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Equality of derived quantities, Hermiticity, PSD floor, separability.
    pub comparison: f64,
    /// Unit-norm checks on kets.
    pub normalization: f64,
    /// Amplitudes and probabilities below this are dropped from sparse maps.
    pub pruning: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        comparison: 1e-10,
        normalization: 1e-12,
        pruning: 1e-14,
    };

    pub fn with_comparison(self, comparison: f64) -> Self {
        Tolerances { comparison, ..self }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
