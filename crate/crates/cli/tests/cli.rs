//! End-to-end tests of the command-line interface: every pipeline writes its
//! documented files, determinism is byte-exact, and the exit-code contract
//! holds (0 success, 2 numerical warning, 1 hard error).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_specdet")
}

/// Fresh directory under the cargo-managed test tmpdir.
fn tmp(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if d.exists() {
        fs::remove_dir_all(&d).unwrap();
    }
    fs::create_dir_all(&d).unwrap();
    d
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("SPECDET_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

const FREE_KIRCHHOFF: &str = r#"
task = "levinson"

[potential.edge1]
family = "zero"

[potential.edge2]
family = "zero"

[interaction]
preset = "kirchhoff"
"#;

#[test]
fn levinson_pipeline_free_kirchhoff() {
    let dir = tmp("levinson_free");
    let cfg = write(&dir, "free.toml", FREE_KIRCHHOFF);
    let out_dir = dir.join("out");
    let out = run(&[
        "levinson",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("levinson.json")).unwrap()).unwrap();
    assert_eq!(rep["n"], 0);
    assert_eq!(rep["p"], 1);
    assert_eq!(rep["x"], 1);
    assert_eq!(rep["x_label"], "Q");
    assert!(rep["residual"].as_f64().unwrap() < 1e-10);

    let phase = fs::read_to_string(out_dir.join("phase.csv")).unwrap();
    assert!(phase.starts_with("k,eta,abs_d\n"), "header: {phase:.40}");
    assert!(phase.lines().count() > 100);
}

const FREE_DELTA_M2_DET: &str = r#"
task = "det"

[potential.edge1]
family = "zero"

[potential.edge2]
family = "zero"

[interaction]
preset = "delta"
params = [-2.0]

[grid]
axis = "imaginary"
scale = "log"
min = 0.5
max = 2.0
count = 61
"#;

#[test]
fn det_grid_skips_reference_pole_and_is_deterministic() {
    let dir = tmp("det_free_delta");
    let cfg = write(&dir, "det.toml", FREE_DELTA_M2_DET);
    let (o1, o2) = (dir.join("a"), dir.join("b"));
    for o in [&o1, &o2] {
        let out = run(&[
            "det",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            o.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        // The log-spaced grid lands exactly on the reference-operator
        // eigenvalue at kappa = 1; that row is skipped with a warning.
        assert!(
            stderr(&out).contains("reference-operator pole"),
            "expected a pole-skip warning, got: {}",
            stderr(&out)
        );
    }

    let text = fs::read_to_string(o1.join("det.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "re_zeta,im_zeta,re_d,im_d,abs_d,arg_d,re_l,im_l"
    );
    let rows = csv_rows(&o1.join("det.csv"));
    assert_eq!(rows.len(), 60, "one of 61 grid rows is the skipped pole");
    for r in &rows {
        let (re_d, im_d) = (r[2], r[3]);
        assert!(
            (re_d - 1.0).abs() < 1e-12 && im_d.abs() < 1e-12,
            "free determinant should be 1: {re_d}, {im_d}"
        );
    }

    // Byte-identical re-runs.
    assert_eq!(
        fs::read(o1.join("det.csv")).unwrap(),
        fs::read(o2.join("det.csv")).unwrap()
    );
}

const WELL_TRACE_CHECK: &str = r#"
task = "trace-check"

[potential.edge1]
family = "square_well"
depth = -4.0
width = 1.0

[potential.edge2]
family = "zero"

[interaction]
preset = "kirchhoff"

[discretization]
h = 0.02
x_max = 16.0
t = [4.0, 9.0, 16.0]
"#;

#[test]
fn trace_check_pipeline_passes() {
    let dir = tmp("trace_check");
    let cfg = write(&dir, "tc.toml", WELL_TRACE_CHECK);
    let out_dir = dir.join("out");
    let out = run(&[
        "trace-check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("trace_check.json")).unwrap())
            .unwrap();
    assert_eq!(rep["all_pass"], true);
    let cases = rep["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 3);
    for c in cases {
        assert!(c["rel_error"].as_f64().unwrap() < 1e-3);
        assert_eq!(c["pass"], true);
    }
}

const WELL_SPECTRUM: &str = r#"
task = "spectrum"

[potential.edge1]
family = "square_well"
depth = -4.0
width = 1.0

[potential.edge2]
family = "zero"

[interaction]
preset = "kirchhoff"
"#;

#[test]
fn spectrum_pipeline_finds_the_bound_state() {
    let dir = tmp("spectrum_well");
    let cfg = write(&dir, "sp.toml", WELL_SPECTRUM);
    let out_dir = dir.join("out");
    let out = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rows = csv_rows(&out_dir.join("eigenvalues.csv"));
    assert_eq!(rows.len(), 1);
    assert!(
        (rows[0][0] - 1.347_224_058_366_429_7).abs() < 1e-8,
        "kappa = {}",
        rows[0][0]
    );
    assert_eq!(rows[0][2], 1.0, "multiplicity");
    // Kirchhoff's reference operator has no strictly positive decay rates:
    // only the header line.
    let poles = fs::read_to_string(out_dir.join("poles.csv")).unwrap();
    assert_eq!(poles.lines().count(), 1);
}

const WELL_JOST: &str = r#"
task = "jost"

[potential.edge1]
family = "square_well"
depth = -4.0
width = 1.0

[potential.edge2]
family = "zero"

[interaction]
preset = "kirchhoff"

[zeta]
re = 0.0
im = 2.0
samples = 33
"#;

#[test]
fn jost_pipeline_writes_traces_and_boundary_data() {
    let dir = tmp("jost_well");
    let cfg = write(&dir, "jost.toml", WELL_JOST);
    let out_dir = dir.join("out");
    let out = run(&[
        "jost",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("jost.json")).unwrap()).unwrap();
    // At zeta = 2i the free edge has w = 1, w' = i zeta = -2 (complex
    // values serialize as [re, im] pairs).
    assert!((rep["edge2"]["w"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((rep["edge2"]["wp"][0].as_f64().unwrap() + 2.0).abs() < 1e-12);
    for f in ["jost_edge1.csv", "jost_edge2.csv"] {
        let rows = csv_rows(&out_dir.join(f));
        assert_eq!(rows.len(), 33, "{f} sample count");
    }
}

const WELL_SSF: &str = r#"
task = "ssf"

[potential.edge1]
family = "square_well"
depth = -4.0
width = 1.0

[potential.edge2]
family = "zero"

[interaction]
preset = "kirchhoff"

[grid]
axis = "real"
scale = "linear"
min = -4.0
max = 4.0
count = 161
"#;

#[test]
fn ssf_pipeline_steps_at_the_bound_state() {
    let dir = tmp("ssf_well");
    let cfg = write(&dir, "ssf.toml", WELL_SSF);
    let out_dir = dir.join("out");
    let out = run(&[
        "ssf",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rows = csv_rows(&out_dir.join("ssf.csv"));
    assert_eq!(rows.len(), 161);
    let xi_at = |l: f64| -> f64 {
        rows.iter()
            .min_by(|a, b| {
                (a[0] - l)
                    .abs()
                    .partial_cmp(&(b[0] - l).abs())
                    .unwrap()
            })
            .unwrap()[1]
    };
    // Below the bound state at -1.815 the shift vanishes; between it and
    // zero exactly one eigenvalue has entered.
    assert_eq!(xi_at(-3.0), 0.0);
    assert_eq!(xi_at(-1.0), -1.0);
}

const SMALL_TRACENORM: &str = r#"
task = "tracenorm"

[potential.edge1]
family = "square_well"
depth = -4.0
width = 1.0

[potential.edge2]
family = "zero"

[interaction]
preset = "kirchhoff"

[discretization]
h = 0.04
x_max = 8.0
t = [4.0, 8.0]
"#;

#[test]
fn tracenorm_pipeline_writes_points_and_slope() {
    let dir = tmp("tracenorm_small");
    let cfg = write(&dir, "tn.toml", SMALL_TRACENORM);
    let out_dir = dir.join("out");
    let out = run(&[
        "tracenorm",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rows = csv_rows(&out_dir.join("trace_norm.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows[0][1] > rows[1][1], "norm should decay in t");
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("trace_norm.json")).unwrap())
            .unwrap();
    assert!(rep["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn multi_config_fans_out_into_stem_subdirectories() {
    let dir = tmp("fanout");
    let a = write(&dir, "free.toml", FREE_KIRCHHOFF);
    let b = write(
        &dir,
        "delta.toml",
        &FREE_KIRCHHOFF.replace(
            "preset = \"kirchhoff\"",
            "preset = \"delta\"\nparams = [2.0]",
        ),
    );
    let base = dir.join("out");
    let out = run(&[
        "levinson",
        "--config",
        a.to_str().unwrap(),
        "--config",
        b.to_str().unwrap(),
        "--out",
        base.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(base.join("free").join("levinson.json").exists());
    assert!(base.join("delta").join("levinson.json").exists());
}

#[test]
fn duplicate_config_stems_are_a_usage_error() {
    let dir = tmp("dup_stems");
    let sub1 = dir.join("one");
    let sub2 = dir.join("two");
    fs::create_dir_all(&sub1).unwrap();
    fs::create_dir_all(&sub2).unwrap();
    let a = write(&sub1, "case.toml", FREE_KIRCHHOFF);
    let b = write(&sub2, "case.toml", FREE_KIRCHHOFF);
    let out = run(&[
        "levinson",
        "--config",
        a.to_str().unwrap(),
        "--config",
        b.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("case"), "stderr: {}", stderr(&out));
}

#[test]
fn task_mismatch_is_a_hard_error() {
    let dir = tmp("mismatch");
    let cfg = write(&dir, "det_task.toml", FREE_DELTA_M2_DET);
    let out = run(&[
        "levinson",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("task"),
        "stderr should explain the task mismatch: {}",
        stderr(&out)
    );
}

#[test]
fn missing_config_is_a_hard_error() {
    let dir = tmp("missing_cfg");
    let out = run(&[
        "det",
        "--config",
        dir.join("nope.toml").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn validate_accepts_good_and_flags_bad_scenarios() {
    let dir = tmp("validate");
    let good = write(&dir, "good.toml", WELL_TRACE_CHECK);
    let out = run(&["validate", "--config", good.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let bad_det = write(
        &dir,
        "bad_det.toml",
        r#"
task = "det"
[potential.edge1]
family = "zero"
[potential.edge2]
family = "zero"
[interaction]
a = 1.0
b = 0.0
c = 0.0
d = 0.5
phi = 0.0
"#,
    );
    let out = run(&["validate", "--config", bad_det.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &stderr(&out);
    assert!(text.contains("interaction"), "diagnostics: {text}");

    let bad_sing = write(
        &dir,
        "bad_singular.toml",
        r#"
task = "det"
[potential.edge1]
family = "zero"
[potential.edge2]
family = "zero"
[interaction]
preset = "delta_delta1"
params = [1.0, 2.0]
"#,
    );
    let out = run(&["validate", "--config", bad_sing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    let bad_h = write(
        &dir,
        "bad_h.toml",
        &WELL_TRACE_CHECK.replace("h = 0.02", "h = 0.5"),
    );
    let out = run(&["validate", "--config", bad_h.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    // Unparseable TOML is itself reported as a diagnostic: validate answers
    // "is this file usable" without hard-failing on its content.
    let broken = write(&dir, "broken.toml", "task = [unclosed");
    let out = run(&["validate", "--config", broken.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    // A missing file, by contrast, is an I/O failure.
    let out = run(&[
        "validate",
        "--config",
        dir.join("absent.toml").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}
