//! Shared helpers for the integration suites: seeded randomness and
//! brute-force oracles built from explicit pseudo-labeled expansions.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use ident_core::{
    Complex64, ComplexMatrix, ModeLabel, OccupationKey, ParticleEnsemble, PseudoSpin, SingleParticleKet,
    SpatialLabel, SpatialMode, Statistics,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Labeled = BTreeMap<Vec<ModeLabel>, Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One line per acceptance criterion, written past the test harness capture.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr();
    let _ = writeln!(err, "[acceptance {id}] {verdict} {name}: {detail}");
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| random_complex(rng)).unwrap()
}

pub const DETECTOR_LABELS: [ModeLabel; 4] = [ModeLabel::L_UP, ModeLabel::L_DOWN, ModeLabel::R_UP, ModeLabel::R_DOWN];

/// Unit ket with random amplitudes on a random nonempty subset of `labels`.
pub fn random_ket<R: Rng>(rng: &mut R, labels: &[ModeLabel]) -> SingleParticleKet {
    loop {
        let mut amps: Vec<(ModeLabel, Complex64)> = Vec::new();
        for l in labels {
            if rng.random_bool(0.7) {
                amps.push((*l, random_complex(rng)));
            }
        }
        let norm: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.1 {
            return SingleParticleKet::new(amps.into_iter().map(|(l, a)| (l, a / norm))).unwrap();
        }
    }
}

pub fn random_theta<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0.0..=FRAC_PI_2)
}

pub fn random_omega<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0.0..TAU)
}

/// Random mode; with `remainder`, φ < π/2 half of the time and a random χ id.
pub fn random_mode<R: Rng>(rng: &mut R, remainder: bool) -> SpatialMode {
    let (theta, omega) = (random_theta(rng), random_omega(rng));
    if remainder && rng.random_bool(0.5) {
        let phi = rng.random_range(0.2..FRAC_PI_2);
        let chi = if rng.random_bool(0.5) { None } else { Some(rng.random_range(0..3)) };
        SpatialMode::with_remainder(theta, omega, phi, random_omega(rng), chi).unwrap()
    } else {
        SpatialMode::new(theta, omega).unwrap()
    }
}

pub fn random_ensemble<R: Rng>(rng: &mut R, n: usize, remainder: bool) -> ParticleEnsemble {
    let n_up = rng.random_range(0..=n);
    let modes = (0..n).map(|_| random_mode(rng, remainder)).collect();
    ParticleEnsemble::bosons(n_up, modes).unwrap()
}

pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out.into_iter()
        .map(|p| {
            let mut inversions = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            (p, if inversions % 2 == 0 { 1.0 } else { -1.0 })
        })
        .collect()
}

/// Σ_σ (sgn σ) ⊗_a |ψ_{σ(a)}⟩_a expanded over the single-particle basis,
/// with no normalization.
pub fn raw_expansion(kets: &[SingleParticleKet], fermion: bool) -> Labeled {
    let mut out = Labeled::new();
    for (perm, sign) in permutations(kets.len()) {
        let s = if fermion { sign } else { 1.0 };
        let mut partial: Vec<(Vec<ModeLabel>, Complex64)> = vec![(Vec::new(), c(s, 0.0))];
        for &k in &perm {
            let mut next = Vec::new();
            for (labels, amp) in &partial {
                for (l, a) in kets[k].iter() {
                    let mut t = labels.clone();
                    t.push(*l);
                    next.push((t, amp * a));
                }
            }
            partial = next;
        }
        for (t, a) in partial {
            *out.entry(t).or_default() += a;
        }
    }
    out
}

pub fn labeled_inner(a: &Labeled, b: &Labeled) -> Complex64 {
    a.iter().map(|(k, x)| x.conj() * b.get(k).copied().unwrap_or_default()).sum()
}

fn exact_multiplicity_factorial(kets: &[SingleParticleKet]) -> f64 {
    let mut seen: Vec<(&SingleParticleKet, usize)> = Vec::new();
    for k in kets {
        match seen.iter_mut().find(|(s, _)| *s == k) {
            Some((_, m)) => *m += 1,
            None => seen.push((k, 1)),
        }
    }
    seen.iter().map(|(_, m)| (1..=*m).product::<usize>() as f64).product()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Transition amplitude from the explicit expansions. The symmetrized state
/// sums each distinct arrangement once, i.e. the full permutation sum divided
/// by Πν!, with prefactor sqrt(Πν!/N!).
pub fn oracle_transition(bras: &[SingleParticleKet], kets: &[SingleParticleKet], stats: Statistics) -> Complex64 {
    let fermion = stats == Statistics::Fermion;
    let n = kets.len();
    let state = |list: &[SingleParticleKet]| {
        let nu = if fermion { 1.0 } else { exact_multiplicity_factorial(list) };
        let scale = (nu / factorial(n)).sqrt() / nu;
        raw_expansion(list, fermion).into_iter().map(|(k, v)| (k, v * scale)).collect::<Labeled>()
    };
    labeled_inner(&state(bras), &state(kets))
}

/// Normalized labeled state of the ensemble restricted to the detector
/// labels, collected onto occupation keys.
pub fn oracle_projection(ensemble: &ParticleEnsemble) -> BTreeMap<OccupationKey, Complex64> {
    let fermion = ensemble.statistics() == Statistics::Fermion;
    let n = ensemble.n_particles();
    let full = raw_expansion(&ensemble.kets(), fermion);
    let norm = full.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let mut out: BTreeMap<OccupationKey, Complex64> = BTreeMap::new();
    for (labels, amp) in &full {
        if labels.iter().any(|l| !matches!(l.spatial, SpatialLabel::L | SpatialLabel::R)) {
            continue;
        }
        let key = OccupationKey::new(labels.clone());
        let m: f64 = key.multiplicities().iter().map(|&m| factorial(m)).product();
        let sign = if fermion { inversion_sign(labels) } else { 1.0 };
        *out.entry(key).or_default() += amp / norm * sign * (m / factorial(n)).sqrt();
    }
    out.retain(|_, a| a.norm() > 1e-14);
    out
}

fn inversion_sign(labels: &[ModeLabel]) -> f64 {
    let mut inv = 0;
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] > labels[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn up(mode: SpatialMode) -> SingleParticleKet {
    ident_core::mode_ket(&mode, PseudoSpin::Up)
}

pub fn pair(t1: f64, w1: f64, t2: f64, w2: f64) -> ParticleEnsemble {
    ParticleEnsemble::bosons(1, vec![SpatialMode::new(t1, w1).unwrap(), SpatialMode::new(t2, w2).unwrap()]).unwrap()
}

pub fn trio(theta: [f64; 3], omega: [f64; 3]) -> ParticleEnsemble {
    let modes = (0..3).map(|k| SpatialMode::new(theta[k], omega[k]).unwrap()).collect();
    ParticleEnsemble::bosons(2, modes).unwrap()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}
