//! Closed-form expressions for two and three particles, used as reference
//! values by the verification suites.
//!
//! Three-particle formulas take (θ₁, θ₂, θ₃) and (ω₁, ω₂, ω₃) for two
//! spin-up particles and one spin-down particle.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;

use crate::states::{ModeLabel, OccupationKey};

/// Average concurrence C₁C₂/4 reported for two particles.
pub fn n2_average_concurrence(theta1: f64, theta2: f64) -> f64 {
    let c1 = 2.0 * theta1.cos() * theta1.sin();
    let c2 = 2.0 * theta2.cos() * theta2.sin();
    c1 * c2 / 4.0
}

/// Reduced-state eigenvalue weights of the two-particle q = 1 sector,
/// (sin²θ₁cos²θ₂, cos²θ₁sin²θ₂) normalized to unit sum.
pub fn n2_sector_weights(theta1: f64, theta2: f64) -> (f64, f64) {
    let a = (theta1.sin() * theta2.cos()).powi(2);
    let b = (theta1.cos() * theta2.sin()).powi(2);
    (a / (a + b), b / (a + b))
}

/// Unnormalized three-particle detected state, as (key, amplitude) pairs.
pub fn n3_projected_amplitudes(theta: [f64; 3], omega: [f64; 3]) -> Vec<(OccupationKey, Complex64)> {
    use ModeLabel as M;
    let (c, s): (Vec<f64>, Vec<f64>) = theta.iter().map(|t| (t.cos(), t.sin())).unzip();
    let e = |w: f64| Complex64::from_polar(1.0, w);
    let [w1, w2, w3] = omega;
    let mixed = e(w2) * c[0] * s[1] + e(w1) * s[0] * c[1];
    let key = |labels: &[ModeLabel]| OccupationKey::new(labels.to_vec());
    vec![
        (key(&[M::L_UP, M::L_UP, M::L_DOWN]), Complex64::new(c[0] * c[1] * c[2], 0.0)),
        (key(&[M::L_UP, M::L_UP, M::R_DOWN]), e(w3) * c[0] * c[1] * s[2]),
        (key(&[M::L_UP, M::L_DOWN, M::R_UP]), mixed * c[2] * FRAC_1_SQRT_2),
        (key(&[M::R_UP, M::R_UP, M::L_DOWN]), e(w1 + w2) * s[0] * s[1] * c[2]),
        (key(&[M::R_UP, M::R_DOWN, M::L_UP]), e(w3) * mixed * s[2] * FRAC_1_SQRT_2),
        (key(&[M::R_UP, M::R_UP, M::R_DOWN]), e(w1 + w2 + w3) * s[0] * s[1] * s[2]),
    ]
}

/// Squared norm of [`n3_projected_amplitudes`].
pub fn n3_norm_sq(theta: [f64; 3], omega: [f64; 3]) -> f64 {
    n3_projected_amplitudes(theta, omega).iter().map(|(_, a)| a.norm_sqr()).sum()
}

/// Numerator of the three-particle average concurrence:
/// sqrt(c₁²s₂² + s₁²c₂² + 2cos(ω₁−ω₂)c₁s₁c₂s₂) · s₃c₃(c₁c₂ + s₁s₂).
pub fn n3_numerator(theta: [f64; 3], omega: [f64; 3]) -> f64 {
    let [t1, t2, t3] = theta;
    let (c1, s1, c2, s2) = (t1.cos(), t1.sin(), t2.cos(), t2.sin());
    let inner = c1 * c1 * s2 * s2 + s1 * s1 * c2 * c2 + 2.0 * (omega[0] - omega[1]).cos() * c1 * s1 * c2 * s2;
    inner.max(0.0).sqrt() * t3.sin() * t3.cos() * (c1 * c2 + s1 * s2)
}

/// Reported three-particle average concurrence: numerator over the squared
/// norm of the detected state.
pub fn n3_average_concurrence(theta: [f64; 3], omega: [f64; 3]) -> f64 {
    n3_numerator(theta, omega) / n3_norm_sq(theta, omega)
}

/// True when θ₁ and θ₂ lie on the same side of π/4.
pub fn same_side(theta1: f64, theta2: f64) -> bool {
    (theta1 - FRAC_PI_4) * (theta2 - FRAC_PI_4) >= 0.0
}

fn coherences(theta: [f64; 3]) -> [f64; 3] {
    theta.map(|t| 2.0 * t.cos() * t.sin())
}

/// Coherence form of the numerator exactly as reported:
/// C₃ (1 + C₁C₂cos(ω₁−ω₂) ± r)^{1/2} (1 + C₁C₂/4 ∓ r)^{1/2}, r = sqrt((1−C₁²)(1−C₂²)),
/// upper signs when θ₁, θ₂ are on the same side of π/4.
pub fn n3_coherence_numerator_reported(theta: [f64; 3], omega: [f64; 3]) -> f64 {
    let [c1, c2, c3] = coherences(theta);
    let r = ((1.0 - c1 * c1).max(0.0) * (1.0 - c2 * c2).max(0.0)).sqrt();
    let sigma = if same_side(theta[0], theta[1]) { 1.0 } else { -1.0 };
    let first = 1.0 + c1 * c2 * (omega[0] - omega[1]).cos() + sigma * r;
    let second = 1.0 + c1 * c2 / 4.0 - sigma * r;
    c3 * first.max(0.0).sqrt() * second.max(0.0).sqrt()
}

/// Reported coherence form divided by the squared norm of the detected state.
pub fn n3_average_concurrence_reported(theta: [f64; 3], omega: [f64; 3]) -> f64 {
    n3_coherence_numerator_reported(theta, omega) / n3_norm_sq(theta, omega)
}

/// Coherence form that equals [`n3_numerator`] identically:
/// (C₃/4) (1 + C₁C₂cos(ω₁−ω₂) − σr)^{1/2} (1 + C₁C₂ + σr)^{1/2}, σ = +1 on the same side.
pub fn n3_coherence_numerator(theta: [f64; 3], omega: [f64; 3]) -> f64 {
    let [c1, c2, c3] = coherences(theta);
    let r = ((1.0 - c1 * c1).max(0.0) * (1.0 - c2 * c2).max(0.0)).sqrt();
    let sigma = if same_side(theta[0], theta[1]) { 1.0 } else { -1.0 };
    let first = 1.0 + c1 * c2 * (omega[0] - omega[1]).cos() - sigma * r;
    let second = 1.0 + c1 * c2 + sigma * r;
    c3 / 4.0 * first.max(0.0).sqrt() * second.max(0.0).sqrt()
}
