//! End-to-end runs of the `ident` binary.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ident_core::closed_form::n3_projected_amplitudes;
use ident_core::{
    entanglement_of_particles, transition_amplitude, Complex64, Measure, ParticleEnsemble, SpatialMode, Statistics,
};
use serde_json::Value;
use tempfile::TempDir;

fn ident(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ident"));
    cmd.args(args).env_remove("IDENT_TOLERANCE");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = ident(args, &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn ok_text(args: &[&str]) -> String {
    let out = ident(args, &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(TempDir::new().unwrap())
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn particles(list: &[(&str, f64, f64)]) -> String {
    let items: Vec<String> = list
        .iter()
        .map(|(spin, t, w)| format!(r#"{{"spin": "{spin}", "theta": {t:?}, "omega": {w:?}}}"#))
        .collect();
    format!("{{\"particles\": [\n  {}\n]}}", items.join(",\n  "))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol
}

#[test]
fn project_pair_at_even_splitting() {
    let d = Dir::new();
    let cfg = d.file("pair.json", &particles(&[("up", FRAC_PI_4, 0.0), ("down", FRAC_PI_4, 0.0)]));
    let v = ok_json(&["project", "--config", s(&cfg)]);
    let sectors = v["sectors"].as_array().unwrap();
    let ps: Vec<(u64, f64)> = sectors.iter().map(|x| (x["q"].as_u64().unwrap(), x["p"].as_f64().unwrap())).collect();
    assert_eq!(ps.len(), 3);
    for ((q, p), (eq, ep)) in ps.iter().zip([(0, 0.25), (1, 0.5), (2, 0.25)]) {
        assert_eq!(*q, eq);
        assert!(close(*p, ep, 1e-12), "p_{q} = {p}");
    }
    // the q = 1 sector is (|L↑R↓⟩ + |L↓R↑⟩)/√2 with concurrence 1; the
    // others are product states
    assert!(close(sectors[1]["entanglement"]["concurrence"].as_f64().unwrap(), 1.0, 1e-12));
    assert!(sectors[0]["entanglement"]["concurrence"].as_f64().unwrap().abs() < 1e-12);
    assert!(close(v["entanglement"]["concurrence"].as_f64().unwrap(), 0.5, 1e-12));
    assert!(close(v["entanglement"]["entropy"].as_f64().unwrap(), 0.5, 1e-12));
    assert!(v["leak"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn project_three_particles_at_equal_angles() {
    let d = Dir::new();
    let cfg = d.file(
        "trio.json",
        &particles(&[("up", FRAC_PI_4, 0.0), ("down", FRAC_PI_4, 0.0), ("up", FRAC_PI_4, 0.0)]),
    );
    let v = ok_json(&["project", "--config", s(&cfg)]);
    assert_eq!(v["particle_order"], serde_json::json!([0, 2, 1]));
    let expect = n3_projected_amplitudes([FRAC_PI_4; 3], [0.0; 3]);
    let norm = expect.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    let mut seen = 0;
    for sector in v["sectors"].as_array().unwrap() {
        let p = sector["p"].as_f64().unwrap();
        for a in sector["amplitudes"].as_array().unwrap() {
            let key = a["key"].as_str().unwrap();
            let z = Complex64::new(a["re"].as_f64().unwrap(), a["im"].as_f64().unwrap()) * p.sqrt();
            let (_, want) = expect.iter().find(|(k, _)| k.to_string() == key).expect("key in closed form");
            assert!((z - want / norm).norm() < 1e-12, "{key}: {z} vs {}", want / norm);
            seen += 1;
        }
    }
    assert_eq!(seen, expect.len());
}

#[test]
fn project_with_everything_at_left() {
    let d = Dir::new();
    let cfg = d.file("left.json", &particles(&[("up", 0.0, 0.3), ("down", 0.0, 1.0), ("up", 0.0, 2.0)]));
    let v = ok_json(&["project", "--config", s(&cfg)]);
    let sectors = v["sectors"].as_array().unwrap();
    assert_eq!(sectors.len(), 1);
    assert_eq!(sectors[0]["q"], 3);
    assert_eq!(v["entanglement"]["entropy"].as_f64().unwrap(), 0.0);
    assert_eq!(v["entanglement"]["concurrence"].as_f64().unwrap(), 0.0);
}

#[test]
fn project_csv_and_output_file() {
    let d = Dir::new();
    let cfg = d.file("pair.json", &particles(&[("up", 0.3, 0.0), ("down", 1.1, 0.5)]));
    let out = d.0.path().join("out.csv");
    ok_text(&["project", "--config", s(&cfg), "--format", "csv", "--output", s(&out)]);
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,p,entropy,concurrence"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn amplitude_identical_and_orthogonal() {
    let d = Dir::new();
    let a = d.file("a.json", &particles(&[("up", 0.4, 0.2), ("down", 1.0, 2.0)]));
    let v = ok_json(&["amplitude", "--config", s(&a), "--bra", s(&a)]);
    assert!(close(v["amplitude"]["re"].as_f64().unwrap(), 1.0, 1e-12));
    assert!(close(v["amplitude"]["im"].as_f64().unwrap(), 0.0, 1e-12));
    assert_eq!(v["method"], "ryser");
    let b = d.file("b.json", &particles(&[("up", 0.4, 0.2), ("up", 1.0, 2.0)]));
    let v = ok_json(&["amplitude", "--config", s(&a), "--bra", s(&b), "--method", "naive"]);
    assert_eq!(v["abs"].as_f64().unwrap(), 0.0);
    assert_eq!(v["method"], "naive");
}

#[test]
fn amplitude_matches_library() {
    let d = Dir::new();
    let ket = [("up", 0.3, 0.1), ("down", 1.2, 2.2), ("up", 0.9, 4.0)];
    let bra = [("up", 1.4, 0.7), ("down", 0.2, 5.1), ("down", 0.6, 1.9)];
    let (k, b) = (d.file("k.json", &particles(&ket)), d.file("b.json", &particles(&bra)));
    let v = ok_json(&["amplitude", "--config", s(&k), "--bra", s(&b)]);
    let kets = |list: &[(&str, f64, f64)]| {
        list.iter()
            .map(|(spin, t, w)| {
                let spin = if *spin == "up" { ident_core::PseudoSpin::Up } else { ident_core::PseudoSpin::Down };
                ident_core::mode_ket(&SpatialMode::new(*t, *w).unwrap(), spin)
            })
            .collect::<Vec<_>>()
    };
    let want = transition_amplitude(&kets(&bra), &kets(&ket), Statistics::Boson).unwrap();
    assert!(close(v["amplitude"]["re"].as_f64().unwrap(), want.re, 1e-14));
    assert!(close(v["amplitude"]["im"].as_f64().unwrap(), want.im, 1e-14));
}

#[test]
fn amplitude_size_mismatch_is_usage_error() {
    let d = Dir::new();
    let a = d.file("a.json", &particles(&[("up", 0.4, 0.2), ("down", 1.0, 2.0)]));
    let b = d.file("b.json", &particles(&[("up", 0.4, 0.2)]));
    let out = ident(&["amplitude", "--config", s(&a), "--bra", s(&b)], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_theta_matches_library() {
    let d = Dir::new();
    let cfg = d.file("pair.json", &particles(&[("up", 0.1, 0.0), ("down", FRAC_PI_4, 0.0)]));
    let text = ok_text(&[
        "sweep",
        "--config",
        s(&cfg),
        "--axis",
        &format!("particles[0].theta=0:{FRAC_PI_2:?}:9"),
        "--measure",
        "concurrence",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("particles[0].theta,p_0,p_1,p_2,leak,concurrence"));
    let mut ratios = Vec::new();
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let t1 = cols[0];
        let ens = ParticleEnsemble::bosons(1, vec![SpatialMode::new(t1, 0.0).unwrap(), SpatialMode::new(FRAC_PI_4, 0.0).unwrap()]).unwrap();
        let want = entanglement_of_particles(&ens, Measure::Concurrence).unwrap();
        assert!(close(cols[5], want, 1e-15), "theta {t1}: {} vs {want}", cols[5]);
        // with the second particle evenly split the column is linear in C1
        let c1 = (2.0 * t1).sin();
        if c1 > 1e-6 {
            ratios.push(cols[5] / c1);
        } else {
            assert!(cols[5].abs() < 1e-12);
        }
    }
    assert_eq!(ratios.len(), 7);
    assert!(ratios.iter().all(|r| close(*r, ratios[0], 1e-12)), "{ratios:?}");
}

#[test]
fn sweep_over_phase_is_flat() {
    let d = Dir::new();
    let cfg = d.file("pair.json", &particles(&[("up", 0.5, 0.0), ("down", 1.2, 0.0)]));
    for measure in ["entropy", "concurrence"] {
        let text = ok_text(&["sweep", "--config", s(&cfg), "--axis", "particles[0].omega=0:6.283185307179586:25", "--measure", measure]);
        let values: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(values.len(), 25);
        let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi - lo < 1e-12, "{measure}: spread {}", hi - lo);
        assert!(lo > 0.0);
    }
}

#[test]
fn one_point_sweep_equals_project() {
    let d = Dir::new();
    let cfg = d.file("trio.json", &particles(&[("up", 0.3, 0.4), ("down", 1.0, 2.0), ("up", 0.8, 1.0)]));
    let v = ok_json(&["project", "--config", s(&cfg), "--measure", "entropy"]);
    let text = ok_text(&["sweep", "--config", s(&cfg), "--axis", "particles[0].theta=0.3"]);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let mut p = [0.0; 4];
    for sector in v["sectors"].as_array().unwrap() {
        p[sector["q"].as_u64().unwrap() as usize] = sector["p"].as_f64().unwrap();
    }
    assert_eq!(&row[1..5], &p);
    assert_eq!(row[5], v["leak"].as_f64().unwrap());
    assert_eq!(row[6], v["entanglement"]["entropy"].as_f64().unwrap());
}

#[test]
fn sweep_output_is_stable_across_threads() {
    let d = Dir::new();
    let cfg = d.file("trio.json", &particles(&[("up", 0.3, 0.4), ("down", 1.0, 2.0), ("up", 0.8, 1.0)]));
    let sweep = d.file(
        "grid.json",
        r#"{"axes": [{"path": "particles[0].theta", "start": 0, "stop": 1.5, "steps": 12},
                     {"path": "particles[2].omega", "values": [0, 1, 2, 3]}]}"#,
    );
    let run = |threads: &str| ok_text(&["sweep", "--config", s(&cfg), "--sweep", s(&sweep), "--threads", threads]);
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("0"));
    assert_eq!(one.lines().count(), 49);
    let second = one.lines().nth(2).unwrap();
    for field in second.split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.len(), 18, "{field}");
    }
}

#[test]
fn sweep_json_format() {
    let d = Dir::new();
    let cfg = d.file("pair.json", &particles(&[("up", 0.5, 0.0), ("down", 1.2, 0.0)]));
    let v = ok_json(&["sweep", "--config", s(&cfg), "--axis", "particles[1].theta=0.1,0.2,0.3", "--format", "json"]);
    assert_eq!(v["columns"][0], "particles[1].theta");
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_errors_are_usage_errors() {
    let d = Dir::new();
    let cfg = d.file("pair.json", &particles(&[("up", 0.5, 0.0), ("down", 1.2, 0.0)]));
    for axis in ["particles[5].theta=0:1:3", "particles[0].spin=1", "particles[0].theta=0:1:0", "particles[0].theta=0:3:3"] {
        let out = ident(&["sweep", "--config", s(&cfg), "--axis", axis], &[]);
        assert_eq!(out.status.code(), Some(2), "{axis}");
    }
    let big = ["--axis", "particles[0].theta=0:1:1001", "--axis", "particles[1].theta=0:1:1000"];
    let mut args = vec!["sweep", "--config", s(&cfg)];
    args.extend(big);
    assert_eq!(ident(&args, &[]).status.code(), Some(2));
}

#[test]
fn schmidt_split_reproduces_known_pair() {
    let d = Dir::new();
    let cfg = d.file("same.json", &particles(&[("up", 0.7, 1.1), ("up", 0.7, 1.1), ("down", 0.7, 1.1)]));
    let v = ok_json(&["schmidt", "--config", s(&cfg), "--split", "2,1"]);
    let expect = [(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()];
    for key in ["input_coefficients", "output_coefficients"] {
        let got: Vec<f64> = v[key].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(got.len(), 2);
        for (a, b) in got.iter().zip(expect) {
            assert!(close(*a, b, 1e-10), "{key}: {a} vs {b}");
        }
    }
    let v = ok_json(&["schmidt", "--config", s(&cfg)]);
    assert!(!v["sectors"].as_array().unwrap().is_empty());
    assert_eq!(ident(&["schmidt", "--config", s(&cfg), "--split", "2,2"], &[]).status.code(), Some(2));
}

fn verify(suite: &str, env: &[(&str, &str)]) -> (i32, Value) {
    let out = ident(&["verify", suite, "--seed", "3"], env);
    let code = out.status.code().unwrap();
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, report)
}

#[test]
fn verify_passing_suites() {
    for (suite, cases) in [("theorem1", 1000), ("schmidt", 86)] {
        let (code, r) = verify(suite, &[]);
        assert_eq!(code, 0, "{r}");
        assert_eq!(r["suite"], suite);
        assert_eq!(r["cases"], cases);
        assert_eq!(r["failures"], 0);
        assert!(r["max_error"].as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn verify_oracle_suite() {
    let (code, r) = verify("oracle", &[]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["cases"], 2000);
}

#[test]
fn verify_exit_code_follows_failures() {
    for suite in ["n2-closed-form", "n3-closed-form"] {
        let (code, r) = verify(suite, &[]);
        let failures = r["failures"].as_u64().unwrap();
        assert_eq!(code, if failures == 0 { 0 } else { 1 }, "{r}");
        assert!(r["cases"].as_u64().unwrap() >= 500);
    }
}

#[test]
fn tolerance_override() {
    let (code, r) = verify("schmidt", &[("IDENT_TOLERANCE", "1e-300")]);
    assert_eq!(code, 1);
    assert_eq!(r["tolerance"].as_f64().unwrap(), 1e-300);
    assert!(r["failures"].as_u64().unwrap() > 0);
    let (code, _) = verify("schmidt", &[("IDENT_TOLERANCE", "1e-6")]);
    assert_eq!(code, 0);
    for bad in ["abc", "-1", "0", "inf"] {
        assert_eq!(verify("schmidt", &[("IDENT_TOLERANCE", bad)]).0, 2, "{bad}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let d = Dir::new();
    let bad_line = d.file("bad.json", "{\n  \"particles\": [\n    {\"spin\": \"up\", \"omega\": 0.0}\n  ]\n}");
    let out = ident(&["project", "--config", s(&bad_line)], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("theta"), "{err}");

    let bad_range = d.file("range.json", &particles(&[("up", 0.1, 0.0), ("up", 2.0, 0.0)]));
    let out = ident(&["project", "--config", s(&bad_range)], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("particles[1].theta"));

    assert_eq!(ident(&["project"], &[]).status.code(), Some(2));
    assert_eq!(ident(&["project", "--config", "/nonexistent.json"], &[]).status.code(), Some(2));
    assert_eq!(ident(&["verify", "theorem2"], &[]).status.code(), Some(2));
    assert_eq!(ident(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(ident(&["project", "--measure", "negativity"], &[]).status.code(), Some(2));
    assert_eq!(ident(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn degrees_flag() {
    let d = Dir::new();
    let rad = d.file("rad.json", &particles(&[("up", FRAC_PI_4, 0.0), ("down", 0.5, 1.0)]));
    let deg = d.file(
        "deg.json",
        &format!(
            r#"{{"degrees": true, "particles": [{{"spin": "up", "theta": 45, "omega": 0}}, {{"spin": "down", "theta": {:?}, "omega": {:?}}}]}}"#,
            0.5f64.to_degrees(),
            1.0f64.to_degrees()
        ),
    );
    let (a, b) = (ok_json(&["project", "--config", s(&rad)]), ok_json(&["project", "--config", s(&deg)]));
    let e = |v: &Value| v["entanglement"]["entropy"].as_f64().unwrap();
    assert!(close(e(&a), e(&b), 1e-12));
}

#[test]
fn fermion_config() {
    let d = Dir::new();
    let cfg = d.file(
        "f.json",
        r#"{"statistics": "fermion", "particles": [{"spin": "up", "theta": 0.3, "omega": 0}, {"spin": "up", "theta": 1.2, "omega": 1}]}"#,
    );
    let v = ok_json(&["project", "--config", s(&cfg)]);
    assert_eq!(v["statistics"], "fermion");
    let total: f64 = v["sectors"].as_array().unwrap().iter().map(|x| x["p"].as_f64().unwrap()).sum();
    assert!(close(total + v["leak"].as_f64().unwrap(), 1.0, 1e-12));
    // two spin-up fermions in the same mode vanish
    let same = d.file(
        "same.json",
        r#"{"statistics": "fermion", "particles": [{"spin": "up", "theta": 0.3, "omega": 0}, {"spin": "up", "theta": 0.3, "omega": 0}]}"#,
    );
    assert_eq!(ident(&["project", "--config", s(&same)], &[]).status.code(), Some(2));
}
