use std::collections::HashMap;

use super::*;
use crate::interp::{solve, SolveOptions, ViolationLabel};
use crate::lang::tests::REV_SRC;
use crate::lang::{normalize_assertions, parse_goal_term, parse_program, prelude};

fn rev_program() -> Program {
    let p = parse_program(REV_SRC).unwrap();
    prelude::extend(&normalize_assertions(&p).unwrap())
}

fn pid(name: &str, arity: usize) -> PredId {
    PredId::new(name, arity)
}

fn count_reify(goals: &[Goal]) -> usize {
    goals
        .iter()
        .filter(|g| matches!(g, Goal::ReifyCheck(..)))
        .count()
}

fn count_combine(goals: &[Goal]) -> usize {
    goals
        .iter()
        .filter(|g| matches!(g, Goal::BitCombine(..)))
        .count()
}

#[test]
fn app_check_block_matches_wrap_structure() {
    // app/3 with pre (list,term,var), post (list,term,list):
    // C: 3 reified checks, one combination D/\(E/\F), a 'calls' warning;
    // S: 3 reified checks, two combinations (the last being (R#1)\/H),
    // a 'success' warning.
    let p = rev_program();
    let block = compile_pred_checks(&p, pid("app", 3)).unwrap();
    assert_eq!(count_reify(&block.compiled_c), 3);
    assert_eq!(count_combine(&block.compiled_c), 1);
    assert!(matches!(
        block.compiled_c.last(),
        Some(Goal::WarnIfFalse(_, l)) if l.name() == "calls"
    ));
    // nested right-associated conjunction
    let combo = block
        .compiled_c
        .iter()
        .find_map(|g| match g {
            Goal::BitCombine(_, e) => Some(e.clone()),
            _ => None,
        })
        .unwrap();
    match combo {
        ArithExpr::Bin(ArithOp::BitAnd, _, rhs) => {
            assert!(matches!(*rhs, ArithExpr::Bin(ArithOp::BitAnd, _, _)));
        }
        other => panic!("expected D/\\(E/\\F), got {other:?}"),
    }
    assert_eq!(count_reify(&block.compiled_s), 3);
    assert_eq!(count_combine(&block.compiled_s), 2);
    let last_combine = block
        .compiled_s
        .iter()
        .filter_map(|g| match g {
            Goal::BitCombine(_, e) => Some(e.clone()),
            _ => None,
        })
        .next_back()
        .unwrap();
    match last_combine {
        ArithExpr::Bin(ArithOp::BitOr, lhs, _) => {
            assert!(matches!(*lhs, ArithExpr::Bin(ArithOp::BitXor, _, _)));
        }
        other => panic!("expected (R#1)\\/H, got {other:?}"),
    }
    assert!(matches!(
        block.compiled_s.last(),
        Some(Goal::WarnIfFalse(_, l)) if l.name() == "success"
    ));
    assert_eq!(block.status_vars.len(), 1);
    assert_eq!(block.first_prop, Some(pid("list", 1)));
}

#[test]
fn vacuous_checks_compile_to_constant_true() {
    let src = "\
:- check pred p(X) : true => true.
p(a).
";
    let p = normalize_assertions(&parse_program(src).unwrap()).unwrap();
    let block = compile_pred_checks(&p, pid("p", 1)).unwrap();
    assert_eq!(count_reify(&block.compiled_c), 0);
    assert_eq!(count_combine(&block.compiled_c), 1);
    assert!(matches!(
        block.compiled_c.first(),
        Some(Goal::BitCombine(_, ArithExpr::Int(1)))
    ));
    // post `true` reduces to nothing to check
    assert_eq!(count_reify(&block.compiled_s), 0);
}

#[test]
fn two_preconditions_are_disjoined() {
    let src = "\
:- check pred p(X) : list(X).
:- check pred p(X) : num(X).
p(a).
";
    let p = prelude::extend(&normalize_assertions(&parse_program(src).unwrap()).unwrap());
    let block = compile_pred_checks(&p, pid("p", 1)).unwrap();
    assert_eq!(block.status_vars.len(), 2);
    let disj = block
        .compiled_c
        .iter()
        .filter_map(|g| match g {
            Goal::BitCombine(_, e) => Some(e.clone()),
            _ => None,
        })
        .next_back()
        .unwrap();
    assert!(matches!(disj, ArithExpr::Bin(ArithOp::BitOr, _, _)));
}

/// Evaluate a compiled check block over a fixed assignment of reified
/// outcomes; returns the warned value per label.
fn simulate(goals: &[Goal], outcomes: &[(String, i64)]) -> HashMap<String, i64> {
    let mut env: HashMap<Sym, i64> = HashMap::new();
    let mut warned = HashMap::new();
    let mut idx = 0usize;
    fn eval(e: &ArithExpr, env: &HashMap<Sym, i64>) -> i64 {
        match e {
            ArithExpr::Int(n) => *n,
            ArithExpr::Var(v) => env[v],
            ArithExpr::Bin(op, a, b) => {
                let (x, y) = (eval(a, env), eval(b, env));
                match op {
                    ArithOp::BitAnd => x & y,
                    ArithOp::BitOr => x | y,
                    ArithOp::BitXor => x ^ y,
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Mul => x * y,
                    ArithOp::Mod => x.rem_euclid(y),
                }
            }
        }
    }
    for g in goals {
        match g {
            Goal::ReifyCheck(_, Term::Var(v)) => {
                env.insert(*v, outcomes[idx].1);
                idx += 1;
            }
            Goal::BitCombine(Term::Var(v), e) => {
                let val = eval(e, &env);
                env.insert(*v, val);
            }
            Goal::WarnIfFalse(Term::Var(v), label) => {
                warned.insert(label.name(), env[v]);
            }
            _ => {}
        }
    }
    warned
}

#[test]
fn compiled_blocks_are_truth_table_equivalent() {
    // two assertions, 2 + 2 literals: compiled C must equal Pre1 \/ Pre2,
    // compiled S must equal (Pre1 -> Post1) /\ (Pre2 -> Post2),
    // exhaustively over all reification outcomes.
    let src = "\
:- check pred p(X,Y) : (list(X),num(Y)) => list(Y).
:- check pred p(X,Y) : (num(X);list(Y)) => num(X).
p(a,b).
";
    let p = prelude::extend(&normalize_assertions(&parse_program(src).unwrap()).unwrap());
    let block = compile_pred_checks(&p, pid("p", 2)).unwrap();
    let n_c = count_reify(&block.compiled_c);
    let n_s = count_reify(&block.compiled_s);
    assert_eq!((n_c, n_s), (4, 2));
    for bits in 0..(1u32 << (n_c + n_s)) {
        let c_out: Vec<(String, i64)> = (0..n_c)
            .map(|i| (format!("c{i}"), ((bits >> i) & 1) as i64))
            .collect();
        let s_out: Vec<(String, i64)> = (0..n_s)
            .map(|i| (format!("s{i}"), ((bits >> (n_c + i)) & 1) as i64))
            .collect();
        // direct formula evaluation
        let pre1 = c_out[0].1 & c_out[1].1;
        let pre2 = c_out[2].1 | c_out[3].1;
        let post1 = s_out[0].1;
        let post2 = s_out[1].1;
        let expect_calls = pre1 | pre2;
        let expect_success = ((pre1 ^ 1) | post1) & ((pre2 ^ 1) | post2);

        let warned_c = simulate(&block.compiled_c, &c_out);
        assert_eq!(warned_c["calls"], expect_calls, "bits={bits:b}");
        // S sees the status vars bound by C
        let mut joint = block.compiled_c.clone();
        joint.extend(block.compiled_s.clone());
        let mut outcomes = c_out.clone();
        outcomes.extend(s_out.clone());
        let warned = simulate(&joint, &outcomes);
        assert_eq!(warned["success"], expect_success, "bits={bits:b}");
    }
}

#[test]
fn off_scenario_is_identity() {
    let p = rev_program();
    let inst = apply_scenario(&p, &Scenario::Off).unwrap();
    assert!(inst.origin.is_empty());
    assert_eq!(inst.program.pred_ids(), p.pred_ids());
    for &id in p.pred_ids() {
        assert_eq!(inst.program.clauses_of(id), p.clauses_of(id));
    }
}

#[test]
fn full_scenario_wraps_both_predicates() {
    let p = rev_program();
    let inst = apply_scenario(&p, &Scenario::Full).unwrap();
    let prog = &inst.program;
    for name in ["rev", "rev_c", "rev_s", "rev_r"] {
        let arity = match name {
            "rev" | "rev_r" => 2,
            _ => 3, // head args + 1 status var
        };
        assert!(prog.has_pred(pid(name, arity)), "missing {name}/{arity}");
    }
    for name in ["app", "app_c", "app_s", "app_r"] {
        let arity = match name {
            "app" | "app_r" => 3,
            _ => 4,
        };
        assert!(prog.has_pred(pid(name, arity)), "missing {name}/{arity}");
    }
    // renamed predicate holds exactly the original clauses
    assert_eq!(prog.clauses_of(pid("rev_r", 2)).len(), 2);
    assert_eq!(inst.origin[&pid("rev_r", 2)].role, PredRole::Renamed);
    assert_eq!(inst.origin[&pid("rev_r", 2)].original, pid("rev", 2));
    // rev_r calls the wrapped rev and the wrapped app (mutual structure)
    let rec = &prog.clauses_of(pid("rev_r", 2))[1];
    let calls: Vec<PredId> = rec
        .body
        .iter()
        .filter_map(|g| match g {
            Goal::Call(t) => t.pred_id(),
            _ => None,
        })
        .collect();
    assert_eq!(calls, vec![pid("rev", 2), pid("app", 3)]);
}

#[test]
fn full_scenario_preserves_answers_and_costs_cubically() {
    let p = rev_program();
    let inst = apply_scenario(&p, &Scenario::Full).unwrap();
    let goal = parse_goal_term("rev([a,b,c],Y)").unwrap();
    let off = solve(&p, &goal, &[], SolveOptions::default()).unwrap();
    let full = solve(&inst.program, &goal, &[], SolveOptions::default()).unwrap();
    assert_eq!(off.answers, full.answers);
    assert!(full.violation.is_none());
    // 0.5 L^3 + 8.5 L^2 + 19 L + 11 at L=3 under the default model
    assert_eq!(full.steps.total, 158);
    assert_eq!(off.steps.total, 10);
}

#[test]
fn full_scenario_flags_ill_typed_calls() {
    let p = rev_program();
    let inst = apply_scenario(&p, &Scenario::Full).unwrap();
    let goal = parse_goal_term("rev(foo,Y)").unwrap();
    let off = solve(&p, &goal, &[], SolveOptions::default()).unwrap();
    let full = solve(&inst.program, &goal, &[], SolveOptions::default()).unwrap();
    assert!(off.violation.is_none());
    let v = full.violation.expect("violation");
    assert_eq!(v.label, ViolationLabel::Calls);
    assert_eq!(v.pred, pid("rev", 2));
}

#[test]
fn predicate_without_assertions_stays_bare_in_full() {
    let src = "\
:- check pred p(X) : list(X).
p(X) :- helper(X).
helper(_).
";
    let p = prelude::extend(&normalize_assertions(&parse_program(src).unwrap()).unwrap());
    let inst = apply_scenario(&p, &Scenario::Full).unwrap();
    assert_eq!(
        inst.program.clauses_of(pid("helper", 1)),
        p.clauses_of(pid("helper", 1))
    );
    assert!(!inst.origin.contains_key(&pid("helper", 1)));
}

#[test]
fn syntactic_discharge_reproduces_interface_simplification() {
    // On the rev/app program the discharger proves both posts and both
    // pres at internal call sites; only rev's exported calls check stays.
    let mut p = rev_program();
    p.exports.insert(pid("rev", 2));
    let d = syntactic_discharge(&p);
    assert!(d.contains(&(pid("rev", 2), 1, DischargePart::Pre)));
    assert!(d.contains(&(pid("rev", 2), 1, DischargePart::Post)));
    assert!(d.contains(&(pid("app", 3), 1, DischargePart::Pre)));
    assert!(d.contains(&(pid("app", 3), 1, DischargePart::Post)));
    // never a calls entry
    assert!(d.iter().all(|(_, _, part)| *part != DischargePart::Calls));
}

#[test]
fn syntactic_discharge_of_empty_program_is_empty() {
    let p = parse_program("").unwrap();
    assert!(syntactic_discharge(&p).is_empty());
}

#[test]
fn sorted_postcondition_is_not_discharged() {
    let src = "\
:- export(oins/3).
:- prop(sorted/1).
sorted([]).
sorted([X|Xs]) :- lbound(X,Xs), sorted(Xs).
lbound(_,[]).
lbound(X,[Y|Ys]) :- X =< Y, lbound(X,Ys).
:- check pred oins(E,L,R) : (num(E),sorted(L),var(R)) => sorted(R).
oins(E,[],[E]).
oins(E,[X|Xs],[E,X|Xs]) :- E =< X.
oins(E,[X|Xs],[X|Ys]) :- E > X, oins(E,Xs,Ys).
";
    let p = prelude::extend(&normalize_assertions(&parse_program(src).unwrap()).unwrap());
    let d = syntactic_discharge(&p);
    assert!(!d.contains(&(pid("oins", 3), 1, DischargePart::Post)));
}

#[test]
fn opt_scenario_keeps_interface_only() {
    let mut p = rev_program();
    p.exports.insert(pid("rev", 2));
    let d = syntactic_discharge(&p);
    let inst = apply_scenario(&p, &Scenario::Opt(d)).unwrap();
    let prog = &inst.program;
    // interface: rev -> rev_c + rev_r; rev_r -> rev_i; app untouched
    assert!(
        prog.has_pred(pid("rev_c", 2)),
        "calls-only checker, no status vars"
    );
    assert!(prog.has_pred(pid("rev_i", 2)));
    assert!(
        !prog.has_pred(pid("rev_s", 2)),
        "post discharged: no success block"
    );
    assert_eq!(prog.clauses_of(pid("app", 3)), p.clauses_of(pid("app", 3)));
    // rev_c holds exactly the two reified interface checks
    let c_clause = &prog.clauses_of(pid("rev_c", 2))[0];
    assert_eq!(count_reify(&c_clause.body), 2);
    // internal recursion goes through rev_i, not the wrapper
    let rec = &prog.clauses_of(pid("rev_i", 2))[1];
    let calls: Vec<PredId> = rec
        .body
        .iter()
        .filter_map(|g| match g {
            Goal::Call(t) => t.pred_id(),
            _ => None,
        })
        .collect();
    assert_eq!(calls, vec![pid("rev_i", 2), pid("app", 3)]);
}

#[test]
fn opt_scenario_cost_matches_interface_only_analysis() {
    // 0.5 L^2 + 2.5 L + 7 at L=3 -> 19 steps
    let mut p = rev_program();
    p.exports.insert(pid("rev", 2));
    let d = syntactic_discharge(&p);
    let inst = apply_scenario(&p, &Scenario::Opt(d)).unwrap();
    let goal = parse_goal_term("rev([a,b,c],Y)").unwrap();
    let r = solve(&inst.program, &goal, &[], SolveOptions::default()).unwrap();
    assert_eq!(r.steps.total, 19);
    assert_eq!(r.answers[0][0].1, "[c,b,a]");
}

#[test]
fn opt_checks_are_subset_of_full_checks() {
    let mut p = rev_program();
    p.exports.insert(pid("rev", 2));
    let d = syntactic_discharge(&p);
    let full = apply_scenario(&p, &Scenario::Full).unwrap();
    let opt = apply_scenario(&p, &Scenario::Opt(d)).unwrap();
    for len in 0..6 {
        let items: Vec<String> = (0..len).map(|i| format!("x{i}")).collect();
        let goal = parse_goal_term(&format!("rev([{}],Y)", items.join(","))).unwrap();
        let f = solve(&full.program, &goal, &[], SolveOptions::default()).unwrap();
        let o = solve(&opt.program, &goal, &[], SolveOptions::default()).unwrap();
        assert!(o.steps.total <= f.steps.total, "len={len}");
        assert_eq!(o.answers, f.answers);
    }
}

#[test]
fn discharge_file_round_trip() {
    let text = "\
% interface checks verified elsewhere
discharge(oins/3, 1, pre).
discharge(oins/3, 1, post).
discharge(oins/3, 1, calls).
";
    let d = parse_discharge_file(text).unwrap();
    assert_eq!(d.len(), 3);
    assert!(d.contains(&(pid("oins", 3), 1, DischargePart::Calls)));
    assert!(parse_discharge_file("discharge(oops).").is_err());
}

#[test]
fn discharge_referencing_missing_assertion_errors() {
    let p = rev_program();
    let mut d = DischargeSet::new();
    d.insert((pid("rev", 2), 7, DischargePart::Pre));
    assert!(matches!(
        apply_scenario(&p, &Scenario::Opt(d)),
        Err(InstrumentError::BadDischarge(_))
    ));
}

#[test]
fn fully_discharged_exported_pred_keeps_bare_interface() {
    let src = "\
:- export(p/1).
:- check pred p(X) : list(X).
p([]).
p([_|Xs]) :- p(Xs).
";
    let p = prelude::extend(&normalize_assertions(&parse_program(src).unwrap()).unwrap());
    let mut d = DischargeSet::new();
    d.insert((pid("p", 1), 1, DischargePart::Pre));
    d.insert((pid("p", 1), 1, DischargePart::Calls));
    let inst = apply_scenario(&p, &Scenario::Opt(d)).unwrap();
    // p -> p_r -> p_i with no checker at all
    assert!(!inst.program.has_pred(pid("p_c", 1)));
    let goal = parse_goal_term("p([a,b])").unwrap();
    let r = solve(&inst.program, &goal, &[], SolveOptions::default()).unwrap();
    // wrapper + split + 3 internal steps
    assert_eq!(r.steps.total, 5);
}
