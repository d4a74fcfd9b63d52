//! End-to-end tests of the command line interface: spawn the binary, check
//! stdout and exit codes against frozen reference output.

use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_epsforms")
}

/// Cache directory shared by the tests in this file so repeated space
/// constructions amortize; tests that exercise the cache itself use their own.
fn shared_cache() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| TempDir::new().expect("tempdir")).path()
}

fn run_with_cache(cache: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("EPSFORMS_CACHE", cache)
        .output()
        .expect("spawn cli")
}

fn run(args: &[&str]) -> Output {
    run_with_cache(shared_cache(), args)
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

#[test]
fn dform_reports_components_signature_and_dual() {
    let out = run(&["dform", "--level", "15", "--epsilon", "-1,-1"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("components: 3^-1 + 5^-1"), "{text}");
    assert!(text.contains("signature mod 8: 2"), "{text}");
    assert!(text.contains("character discriminant: -15"), "{text}");
    assert!(text.contains("dual epsilon: 3=+1,5=-1"), "{text}");
    assert!(text.contains("norm residues mod 15: 0, 2, 3, 5, 8, 12"), "{text}");
}

#[test]
fn dform_rejects_unsupported_level() {
    let out = run(&["dform", "--level", "9"]);
    assert_eq!(out.status.code(), Some(4), "level 9 has a square factor");
    let out = run(&["dform", "--level", "30"]);
    assert_eq!(out.status.code(), Some(4), "level 30 has three prime factors");
}

#[test]
fn basis_matches_reference_expansion() {
    let out = run(&["basis", "--level", "3", "--weight", "-1", "--epsilon", "-1", "--prec", "9"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("level 3 weight -1 epsilon 3=-1"), "{text}");
    assert!(
        text.contains("f_-1 = q^-1 + 9 - 82q^2 + 189q^3 - 892q^5 + 1782q^6 - 6234q^8"),
        "{text}"
    );
    assert!(
        text.contains("f_-3 = 1/2 q^-3 + 45 + 16038q^2 + 50058q^3 + 2125035q^5"),
        "{text}"
    );
}

#[test]
fn lift_reproduces_known_form() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("pp.json");
    std::fs::write(
        &path,
        r#"{"schema_version":1,"level":15,"weight":-1,"character":"kronecker",
            "epsilon":{"3":-1,"5":-1},"lattice_denom":1,"truncation":-2,
            "coefficients":[[-3,"1/2"]]}"#,
    )
    .unwrap();
    let out = run(&["lift", "--principal-part", path.to_str().unwrap(), "--prec", "13"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("f = 1/2 q^-3 - 1/2 + 3q^2 - 1/2 q^3 - 3q^5 - 3q^8 + 6q^12"),
        "{text}"
    );
}

#[test]
fn lift_reports_obstruction_witness() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("pp.json");
    // no form with a simple pole at q^-1 exists for these signs; the dual
    // cusp form starting at q pairs nonzero against the principal part
    std::fs::write(
        &path,
        r#"{"schema_version":1,"level":15,"weight":-1,"character":"kronecker",
            "epsilon":{"3":-1,"5":1},"lattice_denom":1,"truncation":0,
            "coefficients":[[-1,"1"]]}"#,
    )
    .unwrap();
    let out = run(&["lift", "--principal-part", path.to_str().unwrap(), "--prec", "13"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("obstructed: 1 dual cusp form(s)"), "{text}");
    assert!(text.contains("witness at order 1: pairing value 1"), "{text}");
    assert!(text.contains("q - 3q^4 - 3q^6 + 9q^9 + 5q^10"), "{text}");
}

#[test]
fn duality_grid_holds() {
    let out = run(&[
        "duality", "--level", "15", "--weight", "-1", "--epsilon", "-1,-1",
        "--m-range", "-15..-1", "--d-range", "-15..0",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("identities checked: 42"), "{text}");
    assert!(text.contains("all identities hold"), "{text}");
}

#[test]
fn integrality_certifies_reference_space() {
    let out = run(&["integrality", "--level", "3", "--weight", "-1", "--epsilon", "+1"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("f_-2: certified integral (clearing eta(1)^-6 eta(3)^18"),
        "{text}"
    );
    assert!(text.contains("f_-3: certified integral (clearing eta(3)^24"), "{text}");
    assert!(text.contains("partner signs [3=-1]"), "{text}");
}

#[test]
fn vvmf_splits_into_norm_components() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("form.json");
    let out = run(&[
        "basis", "--level", "3", "--weight", "-1", "--epsilon", "-1",
        "--from", "-1", "--prec", "20", "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let first_line = stdout(&out).lines().next().expect("one document").to_string();
    std::fs::write(&path, first_line).unwrap();

    let out = run(&["vvmf", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("level 3 epsilon 3=-1 weight -1"), "{text}");
    // one component per group element; the c and -c components agree
    assert_eq!(text.matches("component (").count(), 3, "{text}");
    assert!(text.contains("component (0) norm 0: 18 + 378q + 3564q^2"), "{text}");
    assert!(text.contains("component (1) norm 2/3: q^(-1/3) - 82q^(2/3)"), "{text}");
    assert!(text.contains("component (2) norm 2/3: q^(-1/3) - 82q^(2/3)"), "{text}");
}

#[test]
fn check_weil_transformation_holds() {
    let out = run(&[
        "check-weil", "--level", "3", "--weight", "-1", "--epsilon", "-1", "--order", "-1",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("transformation law holds"), "{text}");
}

#[test]
fn output_is_deterministic_and_cache_survives_roundtrip() {
    let args = &["basis", "--level", "3", "--weight", "-1", "--epsilon", "+1", "--from", "-9", "--prec", "12"];

    let cold = TempDir::new().unwrap();
    let first = run_with_cache(cold.path(), args);
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr(&first));
    let entries = std::fs::read_dir(cold.path()).unwrap().count();
    assert!(entries > 0, "first run should populate the cache");
    let warm = run_with_cache(cold.path(), args);
    assert_eq!(warm.status.code(), Some(0));
    assert_eq!(first.stdout, warm.stdout, "cold and warm runs must agree byte for byte");

    let other = TempDir::new().unwrap();
    let fresh = run_with_cache(other.path(), args);
    assert_eq!(first.stdout, fresh.stdout, "independent caches must not change output");
}
