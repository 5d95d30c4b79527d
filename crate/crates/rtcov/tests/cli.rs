//! End-to-end tests of the command-line interface.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(name);
    p.to_string_lossy().into_owned()
}

fn rtcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtcov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn analyze_prints_exact_cost_assertion() {
    let out = rtcov(&[
        "analyze",
        &corpus("nrev.pl"),
        "--entry",
        "nrev/2",
        "--scenario",
        "off",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(
        text.trim(),
        ":- true pred nrev(X,Y) : (list(X),var(Y),length(X,L)) => \
         (list(X),list(Y),length(X,L),length(Y,L)) + \
         cost(exact(0.5*L**2+1.5*L+1),[steps])."
    );
}

#[test]
fn analyze_with_centers_prints_accumulated_rows() {
    let out = rtcov(&[
        "analyze",
        &corpus("app.pl"),
        "--scenario",
        "full",
        "--centers",
        "app/3,list/1,var/1,bit_ops",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("app_rtc/3 + cost(exact(l_A+1),[steps,acc])"),
        "{text}"
    );
    assert!(
        text.contains("var/1 + cost(exact(l_A+1),[steps,acc])"),
        "{text}"
    );
    assert!(
        text.contains("bit_ops/1 + cost(exact(3*l_A+3),[steps,acc])"),
        "{text}"
    );
    assert!(text.contains("list/1 + cost(exact(1.5*l_A**2"), "{text}");
}

#[test]
fn analyze_undefined_entry_fails() {
    let out = rtcov(&["analyze", &corpus("nrev.pl"), "--entry", "nosuch/2"]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not defined"), "{err}");
}

#[test]
fn bench_structured_output_is_deterministic() {
    let run = || {
        let out = rtcov(&[
            "bench",
            "--sizes",
            "6",
            "--seed",
            "7",
            "--format",
            "structured",
        ]);
        stdout(&out)
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "byte-identical reports for identical inputs and seed");
    assert!(a.starts_with("rtcov-report 1\n"));
    assert_eq!(a.lines().count(), 25, "header plus 24 rows");
    // exact rows report zero deviation
    for bench in ["app", "nrev", "sift", "pfxsum"] {
        for scen in ["off", "full", "opt"] {
            let needle = format!("bench={bench} rtc={scen}");
            let line = a
                .lines()
                .find(|l| l.contains(&needle))
                .unwrap_or_else(|| panic!("missing row {needle}"));
            assert!(line.contains("devpct=0.00"), "{line}");
            assert!(line.contains("exact=true"), "{line}");
        }
    }
}

#[test]
fn bench_exit_code_reports_false_rows() {
    let out = rtcov(&["bench", "--sizes", "4", "--seed", "1"]);
    // full rows are false under the admissible-overhead assertion
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn profile_reports_steps_and_centers() {
    let out = rtcov(&[
        "profile",
        &corpus("nrev.pl"),
        "--goal",
        "nrev([a,b,c],Y)",
        "--scenario",
        "full",
        "--centers",
        "list/1,var/1,bit_ops",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("steps: 158"), "{text}");
    assert!(text.contains("Y = [c,b,a]"), "{text}");
    assert!(text.contains("list/1"), "{text}");
}

#[test]
fn profile_flags_violations_with_source_names() {
    let out = rtcov(&[
        "profile",
        &corpus("nrev.pl"),
        "--goal",
        "nrev(broken,Y)",
        "--scenario",
        "full",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(
        text.contains("violation: calls check failed for nrev/2"),
        "{text}"
    );
}

#[test]
fn verify_global_overhead_spec() {
    let out = rtcov(&[
        "verify",
        &corpus("nrev.pl"),
        "--spec",
        ":- check pred * + cost(so_ub(constant),[steps,rtc_ratio]).",
    ]);
    // full row is false -> exit 1
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("full: overhead ratio L -> false"), "{text}");
    assert!(text.contains("opt: overhead ratio 1 -> checked"), "{text}");
    assert!(text.contains(":- false pred"), "{text}");
    assert!(text.contains(":- checked pred"), "{text}");
}

#[test]
fn verify_band_spec_checks_everywhere() {
    let out = rtcov(&[
        "verify",
        &corpus("nrev.pl"),
        "--scenario",
        "off",
        "--spec",
        ":- check pred nrev(X,Y) : (list(X),var(Y)) + cost(lb(0),[steps]).",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_splits_on_a_crossing_spec() {
    let out = rtcov(&[
        "verify",
        &corpus("nrev.pl"),
        "--spec",
        ":- check pred nrev(X,Y) : (list(X),var(Y)) + cost(ub(100),[steps,rtc_ratio]).",
    ]);
    let text = stdout(&out);
    assert!(text.contains("L in 0.."), "{text}");
    assert!(text.contains("..inf"), "{text}");
    assert!(text.contains(":- checked pred"), "{text}");
    assert!(text.contains(":- false pred"), "{text}");
}

#[test]
fn instrument_output_reparses() {
    let out = rtcov(&["instrument", &corpus("nrev.pl"), "--scenario", "full"]);
    assert!(out.status.success());
    let text = stdout(&out);
    rtcov::lang::parse_program(&text).expect("instrumented program parses");
    assert!(text.contains("reify_check(list(A)"), "{text}");
    assert!(text.contains("warn_if_false"), "{text}");
}

#[test]
fn parse_error_exits_with_tool_error() {
    let dir = std::env::temp_dir().join("rtcov_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.pl");
    std::fs::write(&bad, "p(a) :- ,q.\n").unwrap();
    let out = rtcov(&["analyze", bad.to_str().unwrap(), "--entry", "p/1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parse error"), "{err}");
}
