//! Acceptance criteria, one test per criterion. Each test writes a single
//! PASS/FAIL line to stderr before asserting.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use common::*;
use ident_core::closed_form::{n2_average_concurrence, n2_sector_weights, n3_average_concurrence_reported, same_side};
use ident_core::detection::sector_reduced_density;
use ident_core::linalg::{permanent_naive, permanent_ryser, NAIVE_PERMANENT_LIMIT};
use ident_core::{
    entanglement_of_particles, label_split_coefficients, make_product_state, project_onto_detectors,
    schmidt_decompose, transition_amplitude, verify_schmidt_equivalence, Bipartition, ComplexMatrix, Measure,
    ParticleEnsemble, SingleParticleKet, SpatialMode, Statistics,
};
use rand::Rng;

#[test]
fn criterion_1_two_particle_closed_form() {
    let start = Instant::now();
    let mut rng = rng(1);
    let grid = linspace(0.0, FRAC_PI_2, 20);
    let mut max_err: f64 = 0.0;
    let mut worst = (0.0, 0.0, 0.0, 0.0);
    for &t1 in &grid {
        for &t2 in &grid {
            for _ in 0..10 {
                let (w1, w2) = (random_omega(&mut rng), random_omega(&mut rng));
                let e = entanglement_of_particles(&pair(t1, w1, t2, w2), Measure::Concurrence).unwrap();
                let err = (e - n2_average_concurrence(t1, t2)).abs();
                if err > max_err {
                    max_err = err;
                    worst = (t1, t2, e, n2_average_concurrence(t1, t2));
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = max_err < 1e-10 && elapsed < 5.0;
    report(
        1,
        "N=2 average concurrence equals C1C2/4",
        pass,
        &format!(
            "max |E - C1C2/4| = {max_err:.3e} (tol 1e-10) at theta = ({:.4}, {:.4}): computed {:.6}, closed form {:.6}; {elapsed:.2} s",
            worst.0, worst.1, worst.2, worst.3
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_two_particle_reduced_state() {
    let mut rng = rng(2);
    let mut max_err: f64 = 0.0;
    for _ in 0..100 {
        let (t1, t2) = (rng.random_range(0.01..FRAC_PI_2 - 0.01), rng.random_range(0.01..FRAC_PI_2 - 0.01));
        let d = project_onto_detectors(&pair(t1, random_omega(&mut rng), t2, random_omega(&mut rng))).unwrap();
        let rho = sector_reduced_density(&d.sector(1).unwrap().state, ident_core::Side::R).unwrap();
        let ev = rho.eigenvalues();
        let (a, b) = n2_sector_weights(t1, t2);
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let lo_ev = ev.get(1).copied().unwrap_or(0.0);
        max_err = max_err.max((ev[0] - hi).abs()).max((lo_ev - lo).abs());
    }
    let pass = max_err < 1e-10;
    report(2, "N=2 sector q=1 reduced eigenvalues", pass, &format!("max deviation {max_err:.3e} (tol 1e-10)"));
    assert!(pass);
}

#[test]
fn criterion_3_three_particle_closed_form() {
    let mut rng = rng(3);
    let mut max_err: f64 = 0.0;
    let (mut same, mut opposite) = (0, 0);
    for k in 0..500 {
        // alternate between the two sign branches
        let (lo, hi) = (0.02..FRAC_PI_4 - 0.02, FRAC_PI_4 + 0.02..FRAC_PI_2 - 0.02);
        let t1 = if rng.random_bool(0.5) { rng.random_range(lo.clone()) } else { rng.random_range(hi.clone()) };
        let t2_low = (t1 < FRAC_PI_4) == (k % 2 == 0);
        let t2 = if t2_low { rng.random_range(lo) } else { rng.random_range(hi) };
        let theta = [t1, t2, rng.random_range(0.02..FRAC_PI_2 - 0.02)];
        let omega = [random_omega(&mut rng), random_omega(&mut rng), random_omega(&mut rng)];
        if same_side(t1, t2) {
            same += 1;
        } else {
            opposite += 1;
        }
        let e = entanglement_of_particles(&trio(theta, omega), Measure::Concurrence).unwrap();
        max_err = max_err.max((e - n3_average_concurrence_reported(theta, omega)).abs());
    }
    let pass = max_err < 1e-9 && same > 0 && opposite > 0;
    report(
        3,
        "N=3 average concurrence equals the reported coherence form",
        pass,
        &format!("max deviation {max_err:.3e} (tol 1e-9); branches: {same} same side, {opposite} opposite"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_phase_counterexample() {
    let mut max_e: f64 = 0.0;
    for c3 in [0.3f64, 0.7, 1.0] {
        let t3 = c3.asin() / 2.0;
        for w2 in [0.0, 0.9, 2.5] {
            let ens = trio([FRAC_PI_4, FRAC_PI_4, t3], [w2 + PI, w2, 0.4]);
            for m in [Measure::Entropy, Measure::Concurrence] {
                max_e = max_e.max(entanglement_of_particles(&ens, m).unwrap());
            }
        }
    }
    let pass = max_e < 1e-10;
    report(4, "N=3 unentangled at C1=C2=1, w1-w2=pi", pass, &format!("max entanglement {max_e:.3e} (tol 1e-10)"));
    assert!(pass);
}

#[test]
fn criterion_5_coherence_criterion() {
    let mut rng = rng(5);
    let mut failures = 0;
    let mut worst_second: f64 = 0.0;
    let mut worst_total: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=6);
        let n_up = rng.random_range(0..=n);
        let zero_up = rng.random_bool(0.5);
        let modes: Vec<SpatialMode> = (0..n)
            .map(|k| {
                let forced = (k < n_up) == zero_up;
                let theta = if forced {
                    if rng.random_bool(0.5) {
                        0.0
                    } else {
                        FRAC_PI_2
                    }
                } else {
                    random_theta(&mut rng)
                };
                SpatialMode::new(theta, random_omega(&mut rng)).unwrap()
            })
            .collect();
        let ens = ParticleEnsemble::bosons(n_up, modes).unwrap();
        let d = project_onto_detectors(&ens).unwrap();
        let mut ok = true;
        for s in &d.sectors {
            let ev = sector_reduced_density(&s.state, ident_core::Side::R).unwrap().eigenvalues();
            let second = ev.get(1).copied().unwrap_or(0.0);
            worst_second = worst_second.max(second);
            ok &= second < 1e-10;
        }
        for m in [Measure::Entropy, Measure::Concurrence] {
            let e = entanglement_of_particles(&ens, m).unwrap();
            worst_total = worst_total.max(e);
            ok &= e < 1e-10;
        }
        if !ok {
            failures += 1;
        }
    }
    let pass = failures == 0;
    report(
        5,
        "coherence criterion implies separability",
        pass,
        &format!("{failures} failures in 1000; max second eigenvalue {worst_second:.3e}, max entanglement {worst_total:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_schmidt_equivalence() {
    let expect = [(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()];
    let r = verify_schmidt_equivalence(3, 2, 0.7, 1.1, (2, 1)).unwrap();
    let mut max_err: f64 = r.max_abs_diff;
    for list in [&r.input_coefficients, &r.output_coefficients] {
        if list.len() != 2 {
            max_err = f64::INFINITY;
            continue;
        }
        for (a, b) in list.iter().zip(expect) {
            max_err = max_err.max((a - b).abs());
        }
    }
    let mut formula_err: f64 = 0.0;
    let mut cases = 0;
    for n_total in 2..=6 {
        for n_up in 0..=n_total {
            let mode = SpatialMode::new(FRAC_PI_2 / 5.0, 0.3).unwrap();
            let ens = ParticleEnsemble::complete_overlap(n_total, n_up, mode, Statistics::Boson).unwrap();
            let psi = make_product_state(&ens.kets(), Statistics::Boson).unwrap();
            for n_x in 1..n_total {
                let svd = schmidt_decompose(&psi, &Bipartition::Labels(n_x)).unwrap().coefficients;
                let formula = label_split_coefficients(n_total, n_up, n_x).unwrap();
                let len = svd.len().max(formula.len());
                for k in 0..len {
                    let a = svd.get(k).copied().unwrap_or(0.0);
                    let b = formula.get(k).copied().unwrap_or(0.0);
                    formula_err = formula_err.max((a - b).abs());
                }
                cases += 1;
            }
        }
    }
    let pass = max_err < 1e-10 && formula_err < 1e-10;
    report(
        6,
        "Schmidt equivalence and binomial coefficients",
        pass,
        &format!(
            "(3,2,(2,1)) deviation {max_err:.3e}; binomial formula vs SVD over {cases} cases {formula_err:.3e} (tol 1e-10)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_oracle_equivalence() {
    let mut rng = rng(7);
    let mut amp_err: f64 = 0.0;
    let mut proj_err: f64 = 0.0;
    for n in 1..=5 {
        for _ in 0..200 {
            let kets: Vec<SingleParticleKet> = (0..n)
                .map(|_| random_ket(&mut rng, &DETECTOR_LABELS))
                .collect();
            let mut bras: Vec<SingleParticleKet> = (0..n).map(|_| random_ket(&mut rng, &DETECTOR_LABELS)).collect();
            if n > 1 && rng.random_bool(0.3) {
                bras[1] = bras[0].clone();
            }
            let lib = transition_amplitude(&bras, &kets, Statistics::Boson).unwrap();
            amp_err = amp_err.max((lib - oracle_transition(&bras, &kets, Statistics::Boson)).norm());

            let ens = random_ensemble(&mut rng, n, true);
            let oracle = oracle_projection(&ens);
            let projected = project_onto_detectors(&ens).unwrap().projected_state();
            let mut keys: Vec<_> = oracle.keys().cloned().collect();
            if let Some(p) = &projected {
                keys.extend(p.keys().cloned());
            }
            for key in keys {
                let lib = projected.as_ref().map(|p| p.amplitude(&key)).unwrap_or_default();
                let want = oracle.get(&key).copied().unwrap_or_default();
                proj_err = proj_err.max((lib - want).norm());
            }
        }
    }
    let pass = amp_err < 1e-10 && proj_err < 1e-10;
    report(
        7,
        "permanent paths match explicit expansions",
        pass,
        &format!("transition amplitude {amp_err:.3e}, projection {proj_err:.3e} (tol 1e-10)"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_permanent_kernels() {
    let mut rng = rng(8);
    let mut max_rel: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..=7);
        let m = random_matrix(&mut rng, n);
        let naive = permanent_naive(&m).unwrap();
        let ryser = permanent_ryser(&m).unwrap();
        max_rel = max_rel.max((ryser - naive).norm() / naive.norm().max(f64::MIN_POSITIVE));
    }
    let mut exact = true;
    for n in 1..=12 {
        let f: f64 = (1..=n).map(|k| k as f64).product();
        let ones = ComplexMatrix::ones(n, n);
        exact &= permanent_ryser(&ones).unwrap() == common::c(f, 0.0);
        if n <= NAIVE_PERMANENT_LIMIT {
            exact &= permanent_naive(&ones).unwrap() == common::c(f, 0.0);
        }
    }
    let pass = max_rel < 1e-10 && exact;
    report(
        8,
        "Ryser matches naive; all-ones gives n!",
        pass,
        &format!("max relative error {max_rel:.3e} (tol 1e-10); all-ones exact up to 12: {exact}"),
    );
    assert!(pass);
}

#[test]
fn criterion_9_completeness() {
    let mut rng = rng(9);
    let mut max_err: f64 = 0.0;
    let mut leaky = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=6);
        let ens = random_ensemble(&mut rng, n, true);
        let d = project_onto_detectors(&ens).unwrap();
        if d.leak_probability > 1e-12 {
            leaky += 1;
        }
        max_err = max_err.max((d.total_probability() - 1.0).abs());
    }
    let pass = max_err < 1e-10 && leaky > 0;
    report(
        9,
        "sector probabilities plus leak sum to one",
        pass,
        &format!("max |sum p_q + leak - 1| = {max_err:.3e} (tol 1e-10); {leaky} of 1000 ensembles leak"),
    );
    assert!(pass);
}
