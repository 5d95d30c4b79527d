//! Golden comparison of the structured benchmark report: byte-exact for
//! a fixed seed and size. Regenerate with
//! `cargo run -p rtcov -- bench --sizes 6 --seed 42 --format structured`.

#[test]
fn structured_bench_report_matches_golden() {
    let rows = rtcov::bench::run_bench(&rtcov::bench::BenchConfig {
        max_size: 6,
        seed: 42,
    })
    .unwrap();
    let got = rtcov::report::structured(&rows);
    let want = include_str!("golden/bench_structured.txt");
    assert_eq!(got, want, "structured report drifted from the golden file");
}
