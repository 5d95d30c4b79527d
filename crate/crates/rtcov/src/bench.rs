//! The bundled benchmark corpus and the full report pipeline: analyze
//! every benchmark under off/full/opt, measure deviation against the
//! interpreter, derive overhead ratios, and verify the global
//! admissible-overhead assertion.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cost::{self, analyze, goal_size_env, ovhd_order_expr, Analysis, Bound};
use crate::error::AnalysisError;
use crate::instrument::{parse_discharge_file, syntactic_discharge, DischargeSet, Scenario};
use crate::interp::{self, SolveOptions};
use crate::lang::{normalize_assertions, prelude, CostExpr, PredId, Program, Term};
use crate::verify::{check_spec, global_overhead_spec, Inferred, Verdict};

pub struct Benchmark {
    pub name: &'static str,
    pub source: &'static str,
    pub discharge: Option<&'static str>,
    pub entry: (&'static str, usize),
}

pub const CORPUS: &[Benchmark] = &[
    Benchmark {
        name: "app",
        source: include_str!("../corpus/app.pl"),
        discharge: None,
        entry: ("app", 3),
    },
    Benchmark {
        name: "nrev",
        source: include_str!("../corpus/nrev.pl"),
        discharge: None,
        entry: ("nrev", 2),
    },
    Benchmark {
        name: "sift",
        source: include_str!("../corpus/sift.pl"),
        discharge: None,
        entry: ("sift", 2),
    },
    Benchmark {
        name: "pfxsum",
        source: include_str!("../corpus/pfxsum.pl"),
        discharge: None,
        entry: ("pfxsum", 2),
    },
    Benchmark {
        name: "oins",
        source: include_str!("../corpus/oins.pl"),
        discharge: Some(include_str!("../corpus/oins.discharge")),
        entry: ("oins", 3),
    },
    Benchmark {
        name: "mmtx",
        source: include_str!("../corpus/mmtx.pl"),
        discharge: Some(include_str!("../corpus/mmtx.discharge")),
        entry: ("mmtx", 3),
    },
    Benchmark {
        name: "ldiff",
        source: include_str!("../corpus/ldiff.pl"),
        discharge: Some(include_str!("../corpus/ldiff.discharge")),
        entry: ("ldiff", 3),
    },
    Benchmark {
        name: "bsts",
        source: include_str!("../corpus/bsts.pl"),
        discharge: Some(include_str!("../corpus/bsts.discharge")),
        entry: ("bsts", 2),
    },
];

pub fn corpus_benchmark(name: &str) -> Option<&'static Benchmark> {
    CORPUS.iter().find(|b| b.name == name)
}

impl Benchmark {
    pub fn entry_pred(&self) -> PredId {
        PredId::new(self.entry.0, self.entry.1)
    }

    pub fn program(&self) -> Program {
        let parsed = crate::lang::parse_program(self.source).expect("corpus parses");
        prelude::extend(&normalize_assertions(&parsed).expect("corpus normalizes"))
    }

    /// The discharge set driving this benchmark's `opt` scenario:
    /// whatever the syntactic discharger proves plus the bundled file.
    pub fn discharge_set(&self, program: &Program) -> DischargeSet {
        let mut set = syntactic_discharge(program);
        if let Some(text) = self.discharge {
            set.extend(parse_discharge_file(text).expect("corpus discharge parses"));
        }
        set
    }

    /// Deterministic worst-case input of the given size.
    pub fn worst_goal(&self, size: u64) -> Term {
        let s = size as usize;
        match self.name {
            "app" => Term::comp(
                "app",
                vec![atoms("a", s), atoms("b", s.div_ceil(2) + 1), Term::var("C")],
            ),
            "nrev" => Term::comp("nrev", vec![atoms("x", s), Term::var("Y")]),
            "sift" => Term::comp(
                "sift",
                vec![
                    ints(&(0..s).map(|i| 2 + i as i64).collect::<Vec<_>>()),
                    Term::var("P"),
                ],
            ),
            "pfxsum" => Term::comp(
                "pfxsum",
                vec![
                    ints(&(0..s).map(|i| i as i64 + 1).collect::<Vec<_>>()),
                    Term::var("P"),
                ],
            ),
            "oins" => {
                // insert past the end: full traversal
                let sorted: Vec<i64> = (0..s as i64).map(|i| 2 * i).collect();
                Term::comp(
                    "oins",
                    vec![Term::Int(2 * s as i64 + 1), ints(&sorted), Term::var("R")],
                )
            }
            "mmtx" => {
                let r = (s % 4) + 1;
                let c = (s % 3) + 1;
                let cb = (s % 5 % 3) + 1;
                Term::comp(
                    "mmtx",
                    vec![matrix(r, c, 1), matrix(c, cb, 2), Term::var("C")],
                )
            }
            "ldiff" => {
                // disjoint lists: every membership test misses
                Term::comp(
                    "ldiff",
                    vec![atoms("e", s), atoms("w", s.div_ceil(2) + 1), Term::var("C")],
                )
            }
            "bsts" => {
                let d = size.min(8) as u32;
                // probe beyond the maximum: walks a full root-to-leaf path
                let n = 1i64 << (d + 1);
                Term::comp("bsts", vec![Term::Int(n + 1), complete_tree(d, 0, n)])
            }
            other => panic!("unknown benchmark {other}"),
        }
    }

    /// Randomized valid input with sizes up to `max_size`.
    pub fn random_goal(&self, rng: &mut ChaCha8Rng, max_size: u64) -> Term {
        let s = rng.gen_range(0..=max_size) as usize;
        match self.name {
            "app" => {
                let t = rng.gen_range(0..=max_size) as usize;
                Term::comp("app", vec![atoms("a", s), atoms("b", t), Term::var("C")])
            }
            "nrev" => Term::comp("nrev", vec![atoms("x", s), Term::var("Y")]),
            "sift" => {
                let vals: Vec<i64> = (0..s).map(|_| rng.gen_range(2..99)).collect();
                Term::comp("sift", vec![ints(&vals), Term::var("P")])
            }
            "pfxsum" => {
                let vals: Vec<i64> = (0..s).map(|_| rng.gen_range(-9..99)).collect();
                Term::comp("pfxsum", vec![ints(&vals), Term::var("P")])
            }
            "oins" => {
                let mut vals: Vec<i64> = (0..s).map(|_| rng.gen_range(0..60)).collect();
                vals.sort_unstable();
                let e = rng.gen_range(0..70);
                Term::comp("oins", vec![Term::Int(e), ints(&vals), Term::var("R")])
            }
            "mmtx" => {
                let r = rng.gen_range(1..=4usize);
                let c = rng.gen_range(1..=4usize);
                let cb = rng.gen_range(1..=4usize);
                Term::comp(
                    "mmtx",
                    vec![
                        matrix(r, c, rng.gen_range(0..5)),
                        matrix(c, cb, rng.gen_range(0..5)),
                        Term::var("C"),
                    ],
                )
            }
            "ldiff" => {
                let t = rng.gen_range(0..=max_size) as usize;
                // overlapping alphabets: hits and misses mix
                let a: Vec<Term> = (0..s)
                    .map(|_| Term::atom(&format!("k{}", rng.gen_range(0..8))))
                    .collect();
                let b: Vec<Term> = (0..t)
                    .map(|_| Term::atom(&format!("k{}", rng.gen_range(0..8))))
                    .collect();
                Term::comp("ldiff", vec![Term::list(a), Term::list(b), Term::var("C")])
            }
            "bsts" => {
                let d = rng.gen_range(0..=max_size.min(8)) as u32;
                let tree = random_tree(rng, d);
                let probe = rng.gen_range(0..200);
                Term::comp("bsts", vec![Term::Int(probe), tree])
            }
            other => panic!("unknown benchmark {other}"),
        }
    }
}

fn atoms(prefix: &str, n: usize) -> Term {
    Term::list(
        (0..n)
            .map(|i| Term::atom(&format!("{prefix}{i}")))
            .collect(),
    )
}

fn ints(vals: &[i64]) -> Term {
    Term::list(vals.iter().map(|v| Term::Int(*v)).collect())
}

fn matrix(rows: usize, cols: usize, seed: i64) -> Term {
    Term::list(
        (0..rows)
            .map(|i| {
                ints(
                    &(0..cols)
                        .map(|j| seed + (i * cols + j) as i64)
                        .collect::<Vec<_>>(),
                )
            })
            .collect(),
    )
}

/// Complete binary search tree of the given depth over (lo, hi).
pub fn complete_tree(depth: u32, lo: i64, hi: i64) -> Term {
    if depth == 0 {
        return Term::atom("leaf");
    }
    let mid = (lo + hi) / 2;
    Term::comp(
        "node",
        vec![
            complete_tree(depth - 1, lo, mid),
            Term::Int(mid),
            complete_tree(depth - 1, mid, hi),
        ],
    )
}

/// Search tree of exactly the given depth with a random shape.
pub fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Term {
    fn build(rng: &mut ChaCha8Rng, depth: u32, lo: i64, hi: i64) -> Term {
        if depth == 0 {
            return Term::atom("leaf");
        }
        let mid = (lo + hi) / 2;
        // one side carries the full depth; the other is random
        let left_deep = rng.gen_bool(0.5);
        let other = rng.gen_range(0..depth);
        let (dl, dr) = if left_deep {
            (depth - 1, other.min(depth - 1))
        } else {
            (other.min(depth - 1), depth - 1)
        };
        Term::comp(
            "node",
            vec![
                build(rng, dl, lo, mid),
                Term::Int(mid),
                build(rng, dr, mid, hi),
            ],
        )
    }
    build(rng, depth, 0, 1 << (depth + 2))
}

#[derive(Clone, Debug)]
pub struct ReportRow {
    pub bench: String,
    pub scenario: String,
    pub bound_lower: String,
    pub bound_upper: String,
    pub exact: bool,
    pub dev_pct: Option<f64>,
    pub undefined_samples: usize,
    pub ovhd: Option<String>,
    pub verdict: Option<Verdict>,
    pub analysis_ms: u128,
}

pub struct BenchConfig {
    pub max_size: u64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> BenchConfig {
        BenchConfig {
            max_size: 12,
            seed: 42,
        }
    }
}

pub struct ScenarioResult {
    pub analysis: Analysis,
    pub row: ReportRow,
}

fn bound_strings(b: &Bound) -> (String, String) {
    (format!("{}", b.lower_expr()), format!("{}", b.upper_expr()))
}

/// Analyze one benchmark under one scenario and measure the deviation of
/// the upper bound at worst-case inputs of sizes 1..=max.
pub fn run_scenario(
    bench: &Benchmark,
    program: &Program,
    scenario: &Scenario,
    cfg: &BenchConfig,
    base: Option<&Bound>,
) -> Result<ScenarioResult, AnalysisError> {
    let start = Instant::now();
    let analysis = analyze(program, bench.entry_pred(), scenario)?;
    let analysis_ms = start.elapsed().as_millis();

    let mut inputs = vec![];
    for s in 1..=cfg.max_size {
        let goal = bench.worst_goal(s);
        let env = goal_size_env(&analysis, &goal);
        inputs.push((goal, env));
    }
    let dev = interp::measure_deviation(
        &analysis.instrumented.program,
        &analysis.bound.upper_expr(),
        &inputs,
        SolveOptions::default(),
    )
    .map_err(|e| AnalysisError::UnknownEntry(e.to_string()))?;

    let (ovhd, verdict) = match base {
        None => (None, None),
        Some(base_bound) => {
            let q = match (&analysis.bound.upper, &base_bound.upper) {
                (Some(up), Some(bup)) => ovhd_order_expr(up, bup),
                _ => CostExpr::Infinity,
            };
            let band = cost::overhead_ratio(&analysis.bound, base_bound)
                .map_err(|e| AnalysisError::UnknownEntry(e.to_string()))?;
            let spec = global_overhead_spec();
            let outcome = check_spec(
                &spec,
                &Inferred::Ratio {
                    band: &band,
                    ovhd: &q,
                },
            )
            .map_err(|e| AnalysisError::UnknownEntry(e.to_string()))?;
            (Some(format!("{q}")), Some(outcome.overall()))
        }
    };

    let (bound_lower, bound_upper) = bound_strings(&analysis.bound);
    let row = ReportRow {
        bench: bench.name.to_string(),
        scenario: scenario.name().to_string(),
        bound_lower,
        bound_upper,
        exact: analysis.bound.exact(),
        dev_pct: dev.mean_pct,
        undefined_samples: dev.undefined,
        ovhd,
        verdict,
        analysis_ms,
    };
    Ok(ScenarioResult { analysis, row })
}

/// Run the whole corpus: every benchmark under off, full, and opt.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<ReportRow>, AnalysisError> {
    let mut rows = vec![];
    for bench in CORPUS {
        let program = bench.program();
        let off = run_scenario(bench, &program, &Scenario::Off, cfg, None)?;
        let full = run_scenario(
            bench,
            &program,
            &Scenario::Full,
            cfg,
            Some(&off.analysis.bound),
        )?;
        let discharge = bench.discharge_set(&program);
        let opt = run_scenario(
            bench,
            &program,
            &Scenario::Opt(discharge),
            cfg,
            Some(&off.analysis.bound),
        )?;
        rows.push(off.row);
        rows.push(full.row);
        rows.push(opt.row);
    }
    Ok(rows)
}

/// Seeded randomized goals for property-style runs.
pub fn random_goals(bench: &Benchmark, seed: u64, count: usize, max_size: u64) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| bench.random_goal(&mut rng, max_size))
        .collect()
}
