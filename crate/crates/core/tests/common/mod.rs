//! Golden-file cases shared by the cli and acceptance targets.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_ddvv");

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Runs the binary from the fixture directory so echoed paths stay relative.
pub fn ddvv(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(fixtures())
        .output()
        .expect("binary runs")
}

/// (golden name, arguments, expected exit code)
pub const CASES: &[(&str, &[&str], i32)] = &[
    ("check_pair", &["check", "pair.json"], 0),
    ("check_skew3", &["check", "skew3.json"], 0),
    ("check_quat_json", &["check", "quat_conj.json", "--output", "json"], 0),
    ("check_generic_csv", &["check", "generic.json", "--output", "csv"], 0),
    ("check_malformed", &["check", "malformed.json"], 2),
    ("check_asymmetric", &["check", "asymmetric.json"], 2),
    ("check_shape_ops", &["check", "umbilic.json"], 2),
    ("geom_umbilic", &["geom", "umbilic.json"], 0),
    ("geom_wintgen", &["geom", "wintgen.json"], 0),
    ("geom_random", &["geom", "random_shape.json", "--output", "json"], 0),
    ("geom_curve", &["geom", "curve.json"], 2),
    ("geom_tuple", &["geom", "pair.json"], 2),
    ("translate_h1h2", &["translate", "h1h2.json"], 0),
    ("translate_zero", &["translate", "zero.json"], 0),
    ("translate_generic", &["translate", "generic.json", "--output", "json"], 0),
    ("translate_skew", &["translate", "skew3.json"], 2),
    ("normal_form_conj", &["normal-form", "pair_conj.json"], 0),
    ("normal_form_quat", &["normal-form", "quat_conj.json"], 0),
    ("normal_form_zero", &["normal-form", "zero.json"], 0),
    ("normal_form_generic", &["normal-form", "generic.json"], 0),
    ("normal_form_skew_generic", &["normal-form", "skew_generic.json"], 0),
    ("normal_form_shape", &["normal-form", "wintgen.json", "--output", "json"], 0),
    ("normal_form_missing", &["normal-form", "no_such_file.json"], 2),
    (
        "search_ascend",
        &["search", "--n", "3", "--m", "3", "--trials", "8", "--seed", "5", "--output", "csv"],
        0,
    ),
    (
        "search_ascend_report",
        &["search", "--n", "3", "--m", "3", "--trials", "8", "--seed", "5"],
        0,
    ),
    (
        "search_fuzz",
        &["search", "--n", "4", "--m", "3", "--symmetry", "skew", "--mode", "fuzz", "--trials", "100", "--seed", "7", "--output", "csv"],
        0,
    ),
    (
        "search_fuzz_report",
        &["search", "--n", "4", "--m", "3", "--mode", "fuzz", "--trials", "100", "--seed", "7", "--output", "json"],
        0,
    ),
    ("search_bad", &["search", "--n", "0", "--m", "3"], 2),
    ("fmax_identity", &["fmax", "--n", "2"], 0),
    ("fmax_barycenter", &["fmax", "--n", "2", "--epsilon", "0.3333333333333333"], 0),
    ("fmax_haar", &["fmax", "--n", "2", "--q", "haar", "--seed", "3"], 0),
    ("fmax_file", &["fmax", "--n", "2", "--q", "q_perm.json", "--output", "json"], 0),
    ("fmax_not_orthogonal", &["fmax", "--n", "2", "--q", "q_bad.json"], 2),
    ("fmax_empty", &["fmax", "--n", "2", "--epsilon", "0.5"], 2),
    ("gen_sympair", &["gen", "--family", "sympair", "--n", "2", "--m", "2", "--mu", "1"], 0),
    ("gen_zero", &["gen", "--family", "sympair", "--mu", "0"], 0),
    ("gen_skewquat", &["gen", "--family", "skewquat", "--n", "4", "--m", "3", "--lambda", "1"], 0),
    (
        "gen_shape_eq",
        &["gen", "--family", "shape-eq", "--n", "3", "--m", "3", "--mu", "0.5", "--lambda1", "1", "--lambda3", "2", "--c", "1", "--conjugate", "--seed", "9"],
        0,
    ),
    ("gen_bad", &["gen", "--family", "skew3", "--m", "2"], 2),
    ("usage_unknown", &["frobnicate"], 2),
    ("usage_bad_output", &["check", "pair.json", "--output", "xml"], 2),
];

pub fn check_case(name: &str, args: &[&str], code: i32) -> Result<(), String> {
    let out = ddvv(args);
    if out.status.code() != Some(code) {
        return Err(format!(
            "{name}: exit {:?}, expected {code}; stderr: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    if code == 2 && out.stderr.is_empty() {
        return Err(format!("{name}: bad input without a message"));
    }
    let golden = fs::read(golden_dir().join(format!("{name}.out")))
        .map_err(|e| format!("{name}: missing golden ({e})"))?;
    if out.stdout != golden {
        return Err(format!(
            "{name}: stdout differs from golden\n--- got ---\n{}",
            String::from_utf8_lossy(&out.stdout)
        ));
    }
    Ok(())
}
