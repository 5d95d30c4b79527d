//! Command-line front end: analyze, verify, profile, bench.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rtcov::bench::{run_bench, BenchConfig};
use rtcov::cost::{self, analyze, analyze_accumulated, ovhd_order_expr};
use rtcov::instrument::{parse_discharge_file, syntactic_discharge, Scenario};
use rtcov::interp::{parse_center, solve, CenterId, SolveOptions};
use rtcov::lang::{
    self, normalize_assertions, parse_assertion_text, parse_goal_term, parse_program, prelude,
    program_to_string, PredId, Program,
};
use rtcov::report;
use rtcov::verify::{check_spec, AdmissibleSpec, Inferred, Verdict};

#[derive(Parser)]
#[command(
    name = "rtcov",
    about = "Cost-bound analysis and verification of run-time check overhead for logic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ScenarioArg {
    Off,
    Full,
    Opt,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Table,
    Structured,
}

#[derive(Args)]
struct ProgramArgs {
    /// Source file to analyze
    file: PathBuf,
    /// Entry predicate, e.g. rev/2 (default: the single export)
    #[arg(long)]
    entry: Option<String>,
    /// Instrumentation scenario
    #[arg(long, value_enum, default_value = "off")]
    scenario: ScenarioArg,
    /// Discharge file for the opt scenario (merged with the syntactic
    /// discharger's result)
    #[arg(long)]
    discharge: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Infer cost bounds and print them as `true pred` assertions
    Analyze {
        #[command(flatten)]
        prog: ProgramArgs,
        /// Cost centers for an accumulated-cost breakdown, e.g.
        /// "list/1,var/1,bit_ops"
        #[arg(long)]
        centers: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Check admissible-overhead specifications against inferred bounds
    Verify {
        #[command(flatten)]
        prog: ProgramArgs,
        /// Inline assertion text or a path to a spec file
        #[arg(long)]
        spec: String,
    },
    /// Run a goal under the step-counting interpreter
    Profile {
        #[command(flatten)]
        prog: ProgramArgs,
        /// Goal to run, e.g. 'rev([a,b,c],Y)'
        #[arg(long)]
        goal: String,
        /// Cost centers to attribute steps to
        #[arg(long)]
        centers: Option<String>,
        /// Step budget
        #[arg(long, default_value = "100000000")]
        budget: u64,
        /// Keep executing after a violation
        #[arg(long)]
        keep_going: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Analyze, measure, and verify the bundled benchmark corpus
    Bench {
        /// Largest input size used for deviation measurement
        #[arg(long, default_value = "12")]
        sizes: u64,
        /// Random seed for sampled inputs
        #[arg(long, default_value = "42")]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Print the instrumented program for a scenario
    Instrument {
        #[command(flatten)]
        prog: ProgramArgs,
    },
}

fn load_program(args: &ProgramArgs) -> Result<(Program, PredId), String> {
    let text = std::fs::read_to_string(&args.file)
        .map_err(|e| format!("cannot read {}: {e}", args.file.display()))?;
    let parsed = parse_program(&text).map_err(|e| e.to_string())?;
    let program = prelude::extend(&normalize_assertions(&parsed).map_err(|e| e.to_string())?);
    let entry = match &args.entry {
        Some(s) => {
            let (name, arity) = s
                .split_once('/')
                .ok_or_else(|| format!("bad entry '{s}', expected name/arity"))?;
            PredId::new(name, arity.parse::<usize>().map_err(|e| e.to_string())?)
        }
        None => *program
            .exports
            .iter()
            .next()
            .ok_or("no exports; pass --entry name/arity")?,
    };
    if !program.has_pred(entry) {
        return Err(format!("entry predicate {entry} is not defined"));
    }
    Ok((program, entry))
}

fn build_scenario(args: &ProgramArgs, program: &Program) -> Result<Scenario, String> {
    Ok(match args.scenario {
        ScenarioArg::Off => Scenario::Off,
        ScenarioArg::Full => Scenario::Full,
        ScenarioArg::Opt => {
            let mut set = syntactic_discharge(program);
            if let Some(path) = &args.discharge {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                set.extend(parse_discharge_file(&text).map_err(|e| e.to_string())?);
            }
            Scenario::Opt(set)
        }
    })
}

fn parse_centers(s: &str) -> Result<Vec<CenterId>, String> {
    s.split(',')
        .map(|c| parse_center(c).ok_or_else(|| format!("bad center '{c}'")))
        .collect()
}

fn cmd_analyze(prog: ProgramArgs, centers: Option<String>, format: Format) -> Result<i32, String> {
    let (program, entry) = load_program(&prog)?;
    let scenario = build_scenario(&prog, &program)?;
    let analysis = analyze(&program, entry, &scenario).map_err(|e| e.to_string())?;
    // report with the original (pre-normalization) head variables
    let raw_text = std::fs::read_to_string(&prog.file).map_err(|e| e.to_string())?;
    let raw = parse_program(&raw_text).map_err(|e| e.to_string())?;
    let raw_assertion = raw
        .assertions
        .iter()
        .find(|a| a.head_pred() == Some(entry))
        .cloned();
    let raw_assertion = match raw_assertion {
        Some(a) => a,
        None => program
            .assertions_of(entry)
            .first()
            .cloned()
            .cloned()
            .ok_or("entry has no assertion")?,
    };
    if format == Format::Structured {
        println!("rtcov-analysis 1");
        println!(
            "bound entry={} rtc={} lower={} upper={} exact={}",
            entry,
            scenario.name(),
            analysis.bound.lower_expr(),
            analysis.bound.upper_expr(),
            analysis.bound.exact()
        );
    } else {
        let out = report::true_assertion(&raw_assertion, &analysis);
        println!("{}", lang::assertion_to_string(&out));
    }

    if let Some(centers) = centers {
        let centers = parse_centers(&centers)?;
        let acc =
            analyze_accumulated(&program, entry, &scenario, &centers).map_err(|e| e.to_string())?;
        if format == Format::Structured {
            for (c, b) in &acc.per_center {
                println!(
                    "acc center={} lower={} upper={} exact={}",
                    c,
                    b.lower_expr(),
                    b.upper_expr(),
                    b.exact()
                );
            }
        } else {
            println!("% accumulated cost per center");
            for (c, b) in &acc.per_center {
                let shown = match c {
                    CenterId::Pred(p) if *p == entry => {
                        format!("{}_rtc/{}", p.name, p.arity)
                    }
                    other => other.to_string(),
                };
                println!("{}", report::acc_assertion(&shown, entry, b));
            }
        }
    }
    Ok(0)
}

fn cmd_verify(prog: ProgramArgs, spec: String) -> Result<i32, String> {
    let (program, entry) = load_program(&prog)?;
    let spec_text = if std::path::Path::new(&spec).exists() {
        std::fs::read_to_string(&spec).map_err(|e| e.to_string())?
    } else {
        spec.clone()
    };
    let mut specs: Vec<AdmissibleSpec> = vec![];
    for line in spec_text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let a = parse_assertion_text(line).map_err(|e| e.to_string())?;
        specs.extend(AdmissibleSpec::from_assertion(&a));
    }
    if specs.is_empty() {
        return Err("no cost specifications found in --spec".into());
    }

    let off = analyze(&program, entry, &Scenario::Off).map_err(|e| e.to_string())?;
    let discharge = {
        let mut set = syntactic_discharge(&program);
        if let Some(path) = &prog.discharge {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            set.extend(parse_discharge_file(&text).map_err(|e| e.to_string())?);
        }
        set
    };
    let scenarios = vec![(Scenario::Full, "full"), (Scenario::Opt(discharge), "opt")];

    let mut verdicts = vec![];
    for spec in &specs {
        if let Some(t) = spec.target {
            if t != entry && !program.has_pred(t) {
                return Err(format!("spec references unknown predicate {t}"));
            }
        }
        match spec.kind {
            lang::CostKind::RtcRatio => {
                for (scenario, name) in &scenarios {
                    let rtc = analyze(&program, entry, scenario).map_err(|e| e.to_string())?;
                    let band =
                        cost::overhead_ratio(&rtc.bound, &off.bound).map_err(|e| e.to_string())?;
                    let q = match (&rtc.bound.upper, &off.bound.upper) {
                        (Some(a), Some(b)) => ovhd_order_expr(a, b),
                        _ => lang::CostExpr::Infinity,
                    };
                    let outcome = check_spec(
                        spec,
                        &Inferred::Ratio {
                            band: &band,
                            ovhd: &q,
                        },
                    )
                    .map_err(|e| e.to_string())?;
                    println!(
                        "% {entry} {name}: overhead ratio {} -> {}",
                        q,
                        outcome.overall().name()
                    );
                    for a in rtcov::verify::emit_outcomes(&outcome) {
                        println!("{}", lang::assertion_to_string(&a));
                    }
                    verdicts.push(outcome.overall());
                }
            }
            _ => {
                let scenario = build_scenario(&prog, &program)?;
                let a = analyze(&program, entry, &scenario).map_err(|e| e.to_string())?;
                let outcome =
                    check_spec(spec, &Inferred::Cost(&a.bound)).map_err(|e| e.to_string())?;
                println!(
                    "% {entry} {}: cost bound [{}, {}] -> {}",
                    scenario.name(),
                    a.bound.lower_expr(),
                    a.bound.upper_expr(),
                    outcome.overall().name()
                );
                for em in rtcov::verify::emit_outcomes(&outcome) {
                    println!("{}", lang::assertion_to_string(&em));
                }
                verdicts.push(outcome.overall());
            }
        }
    }
    Ok(report::exit_code(&verdicts))
}

#[allow(clippy::too_many_arguments)]
fn cmd_profile(
    prog: ProgramArgs,
    goal: String,
    centers: Option<String>,
    budget: u64,
    keep_going: bool,
    format: Format,
) -> Result<i32, String> {
    let (program, _entry) = load_program(&prog)?;
    let scenario = build_scenario(&prog, &program)?;
    let inst = rtcov::instrument::apply_scenario(&program, &scenario).map_err(|e| e.to_string())?;
    let goal = parse_goal_term(&goal).map_err(|e| e.to_string())?;
    let centers = match centers {
        Some(s) => parse_centers(&s)?,
        None => vec![],
    };
    let result = solve(
        &inst.program,
        &goal,
        &centers,
        SolveOptions { budget, keep_going },
    )
    .map_err(|e| e.to_string())?;
    if format == Format::Structured {
        println!("rtcov-profile 1");
        println!("answers {}", result.answers.len());
        println!("steps total={}", result.steps.total);
        for (c, n) in &result.steps.per_center {
            println!("steps center={c} count={n}");
        }
        if let Some(v) = &result.violation {
            println!("violation label={} pred={}", v.label, v.pred);
        }
    } else {
        println!("answers: {}", result.answers.len());
        for (i, ans) in result.answers.iter().enumerate() {
            let binds: Vec<String> = ans.iter().map(|(v, t)| format!("{v} = {t}")).collect();
            println!("  {}: {}", i + 1, binds.join(", "));
        }
        println!("steps: {}", result.steps.total);
        if !result.steps.per_center.is_empty() {
            println!("per center:");
            for (c, n) in &result.steps.per_center {
                println!("  {c:<16} {n}");
            }
        }
    }
    match &result.violation {
        Some(v) => {
            println!("violation: {} check failed for {}", v.label, v.pred);
            Ok(1)
        }
        None => Ok(0),
    }
}

fn cmd_bench(sizes: u64, seed: u64, format: Format) -> Result<i32, String> {
    let rows = run_bench(&BenchConfig {
        max_size: sizes,
        seed,
    })
    .map_err(|e| e.to_string())?;
    match format {
        Format::Table => print!("{}", report::table(&rows)),
        Format::Structured => print!("{}", report::structured(&rows)),
    }
    let verdicts: Vec<Verdict> = rows.iter().filter_map(|r| r.verdict).collect();
    Ok(report::exit_code(&verdicts))
}

fn cmd_instrument(prog: ProgramArgs) -> Result<i32, String> {
    let (program, _entry) = load_program(&prog)?;
    let scenario = build_scenario(&prog, &program)?;
    let inst = rtcov::instrument::apply_scenario(&program, &scenario).map_err(|e| e.to_string())?;
    print!("{}", program_to_string(&inst.program));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze {
            prog,
            centers,
            format,
        } => cmd_analyze(prog, centers, format),
        Command::Verify { prog, spec } => cmd_verify(prog, spec),
        Command::Profile {
            prog,
            goal,
            centers,
            budget,
            keep_going,
            format,
        } => cmd_profile(prog, goal, centers, budget, keep_going, format),
        Command::Bench {
            sizes,
            seed,
            format,
        } => cmd_bench(sizes, seed, format),
        Command::Instrument { prog } => cmd_instrument(prog),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
