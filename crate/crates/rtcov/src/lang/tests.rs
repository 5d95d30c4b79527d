use std::collections::BTreeMap;

use super::poly::{exp_power_sum, power_sum, rat, rat_frac, sum_over, PolyExp, Rat};
use super::*;
use crate::error::LangError;

/// Example program: list reversal with assertions on rev/2 and app/3.
pub const REV_SRC: &str = "\
:- check pred rev(X,Y) : (list(X),var(Y)) => (list(X),list(Y)).
rev([], []).     rev([X|Xs], Y):- rev(Xs, Ys), app(Ys,X,Y).

:- check pred app(Y,X,Z) : (list(Y), term(X), var(Z))
                        => (list(Y), term(X), list(Z)).
app([],X,[X]).   app([E|Y],X,[E|T]):- app(Y,X,T).
";

fn nat_env(pairs: &[(&str, i64)]) -> BTreeMap<Sym, Rat> {
    pairs.iter().map(|(n, v)| (Sym::new(n), rat(*v))).collect()
}

#[test]
fn parses_rev_example() {
    let p = parse_program(REV_SRC).unwrap();
    assert_eq!(p.pred_ids().len(), 2);
    assert_eq!(p.clauses_of(PredId::new("rev", 2)).len(), 2);
    assert_eq!(p.clauses_of(PredId::new("app", 3)).len(), 2);
    assert_eq!(p.assertions.len(), 2);
    assert!(p
        .assertions
        .iter()
        .all(|a| a.status == AssertionStatus::Check && a.kind == AssertionKind::Pred));
    let rev_a = &p.assertions[0];
    assert_eq!(rev_a.head_pred(), Some(PredId::new("rev", 2)));
    assert_eq!(rev_a.pre.as_ref().unwrap().lits().len(), 2);
    assert_eq!(rev_a.post.as_ref().unwrap().lits().len(), 2);
}

#[test]
fn parses_empty_program() {
    let p = parse_program("").unwrap();
    assert!(p.pred_ids().is_empty());
    assert!(p.assertions.is_empty());
}

#[test]
fn parses_universal_assertion() {
    let p = parse_program(":- check pred * + cost(so_ub(linear),[steps,rtc_ratio]).\n").unwrap();
    assert_eq!(p.assertions.len(), 1);
    let a = &p.assertions[0];
    assert!(a.universal);
    assert!(a.head.is_none());
    assert_eq!(a.comp.len(), 1);
    assert_eq!(a.comp[0].kind, CostKind::RtcRatio);
    assert!(matches!(
        a.comp[0].qualifier,
        CostQualifier::SoUb(OrderSpec::Ident(OrderIdent::Linear))
    ));
}

#[test]
fn cost_kind_defaults_to_std() {
    let p = parse_program(":- check pred p(A) : num(A) + cost(ub(2*A),[steps]).\np(0).\n").unwrap();
    assert_eq!(p.assertions[0].comp[0].kind, CostKind::Std);
}

#[test]
fn eval_rev_cost_at_10() {
    // 0.5*L**2+1.5*L+1 at L=10 -> 66
    let f = parse_cost_expr_text("0.5*L**2+1.5*L+1").unwrap();
    let v = eval_cost_expr(&f, &nat_env(&[("L", 10)])).unwrap();
    assert_eq!(v.as_rat().unwrap(), &rat(66));
}

#[test]
fn eval_constant_needs_no_env() {
    let f = parse_cost_expr_text("7").unwrap();
    let v = eval_cost_expr(&f, &BTreeMap::new()).unwrap();
    assert_eq!(v.as_rat().unwrap(), &rat(7));
}

#[test]
fn eval_exponential() {
    // 2**D + D at D=5 -> 37
    let f = parse_cost_expr_text("2**D+D").unwrap();
    let v = eval_cost_expr(&f, &nat_env(&[("D", 5)])).unwrap();
    assert_eq!(v.as_rat().unwrap(), &rat(37));
}

#[test]
fn eval_unbound_var_errors() {
    let f = parse_cost_expr_text("L+1").unwrap();
    assert!(matches!(
        eval_cost_expr(&f, &BTreeMap::new()),
        Err(EvalError::Unbound(_))
    ));
}

#[test]
fn eval_infinity_propagates() {
    let f = parse_cost_expr_text("inf+3").unwrap();
    assert_eq!(
        eval_cost_expr(&f, &BTreeMap::new()).unwrap(),
        CostValue::Infinity
    );
}

#[test]
fn assertion_print_parse_round_trip() {
    let p = parse_program(REV_SRC).unwrap();
    for a in &p.assertions {
        let text = assertion_to_string(a);
        let b = parse_assertion_text(&text).unwrap();
        assert_eq!(*a, b, "round-trip failed for {text}");
    }
}

#[test]
fn checked_assertion_prints_like_source() {
    let mut a = parse_program(REV_SRC).unwrap().assertions[0].clone();
    a.status = AssertionStatus::Checked;
    let s = assertion_to_string(&a);
    assert_eq!(
        s,
        ":- checked pred rev(X,Y) : (list(X),var(Y)) => (list(X),list(Y))."
    );
}

#[test]
fn interval_precondition_round_trips() {
    let text = ":- checked pred rev(X,Y) : (list(X),length(X,L),L in 0..100) => list(Y).";
    let a = parse_assertion_text(text).unwrap();
    let printed = assertion_to_string(&a);
    let b = parse_assertion_text(&printed).unwrap();
    assert_eq!(a, b);
    assert!(printed.contains("L in 0..100"));
}

#[test]
fn comparison_conjunct_round_trips() {
    let text = ":- check pred rev(X,Y) : (length(X,L),L =< 7) => list(Y).";
    let a = parse_assertion_text(text).unwrap();
    let b = parse_assertion_text(&assertion_to_string(&a)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn normalize_groups_by_predicate() {
    let p = parse_program(REV_SRC).unwrap();
    let n = normalize_assertions(&p).unwrap();
    assert_eq!(n.assertions.len(), 2);
    // canonical head variables
    let rev_a = &n.assertions[0];
    assert_eq!(
        rev_a.head,
        Some(Term::comp("rev", vec![Term::var("A"), Term::var("B")]))
    );
    let lits = rev_a.pre.as_ref().unwrap().lits().len();
    assert_eq!(lits, 2);
}

#[test]
fn normalize_is_idempotent() {
    let p = parse_program(REV_SRC).unwrap();
    let once = normalize_assertions(&p).unwrap();
    let twice = normalize_assertions(&once).unwrap();
    assert_eq!(once.assertions, twice.assertions);
}

#[test]
fn normalize_empty_is_noop() {
    let p = parse_program("q(a).\n").unwrap();
    let n = normalize_assertions(&p).unwrap();
    assert!(n.assertions.is_empty());
    assert_eq!(n.pred_ids(), p.pred_ids());
}

#[test]
fn universal_expansion_counts_defined_predicates() {
    let src = "\
:- check pred * + cost(so_ub(linear),[steps,rtc_ratio]).
p(0).
q(X,X).
r(a,b,c).
";
    let p = parse_program(src).unwrap();
    let n = normalize_assertions(&p).unwrap();
    assert_eq!(n.assertions.len(), 3);
    assert!(n.assertions.iter().all(|a| !a.universal));
    let heads: Vec<PredId> = n.assertions.iter().filter_map(|a| a.head_pred()).collect();
    assert!(heads.contains(&PredId::new("p", 1)));
    assert!(heads.contains(&PredId::new("q", 2)));
    assert!(heads.contains(&PredId::new("r", 3)));
}

#[test]
fn export_and_prop_directives() {
    let src = "\
:- export(rev/2).
:- prop(myprop/1).
myprop(x).
rev([],[]).
";
    let p = parse_program(src).unwrap();
    assert!(p.exports.contains(&PredId::new("rev", 2)));
    assert!(p.is_prop(PredId::new("myprop", 1)));
}

#[test]
fn cost_model_directive() {
    let p = parse_program(":- cost_model(is, 0).\np(0).\n").unwrap();
    assert_eq!(p.cost_model().is_goal, 0);
    assert_eq!(p.cost_model().clause, 1);
}

#[test]
fn syntax_error_has_position() {
    let err = parse_program("p(a) :- ,q.\n").unwrap_err();
    match err {
        LangError::Parse { line, col, .. } => {
            assert_eq!(line, 1);
            assert!(col > 1);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn power_sum_matches_brute_force() {
    let n = Sym::new("n");
    for m in 0..=5u32 {
        let closed = power_sum(m, n);
        for upto in 0..=8i64 {
            let direct: i64 = (1..=upto).map(|k| k.pow(m)).sum();
            let env = BTreeMap::from([(n, rat(upto))]);
            assert_eq!(closed.eval(&env).unwrap(), rat(direct), "m={m} n={upto}");
        }
    }
}

#[test]
fn exp_power_sum_matches_brute_force() {
    let n = Sym::new("n");
    for m in 0..=2u32 {
        for base in [2i64, 3] {
            let closed = exp_power_sum(m, &rat(base), n);
            for upto in 0..=7i64 {
                let direct: i64 = (1..=upto).map(|k| k.pow(m) * base.pow(k as u32)).sum();
                let env = BTreeMap::from([(n, rat(upto))]);
                assert_eq!(
                    closed.eval(&env).unwrap(),
                    rat(direct),
                    "m={m} base={base} n={upto}"
                );
            }
        }
    }
}

#[test]
fn sum_over_handles_mixed_terms() {
    // sum_{k=1}^{n} (3k + 3*m + 13) = 1.5 n^2 + 1.5 n + (3m+13) n
    let (k, n, m) = (Sym::new("k"), Sym::new("n"), Sym::new("m"));
    let body = PolyExp::var(k)
        .scale(&rat(3))
        .add(&PolyExp::var(m).scale(&rat(3)))
        .add(&PolyExp::int(13));
    let s = sum_over(&body, k, n);
    for nn in 0..=6i64 {
        for mm in 0..=4i64 {
            let direct: i64 = (1..=nn).map(|kk| 3 * kk + 3 * mm + 13).sum();
            let env = BTreeMap::from([(n, rat(nn)), (m, rat(mm))]);
            assert_eq!(s.eval(&env).unwrap(), rat(direct));
        }
    }
}

#[test]
fn polyexp_subst_shifts_exponentials() {
    // 3*2^d with d := e - 1  ->  1.5*2^e
    let d = Sym::new("d");
    let e = Sym::new("e");
    let p = PolyExp::exp_var(rat(2), d).scale(&rat(3));
    let shifted = p.subst(d, &PolyExp::var(e).add(&PolyExp::int(-1))).unwrap();
    let env = BTreeMap::from([(e, rat(4))]);
    assert_eq!(shifted.eval(&env).unwrap(), rat(24)); // 3*2^3
    assert_eq!(shifted.terms[0].coeff, rat_frac(3, 2));
}

#[test]
fn canonicalization_is_idempotent_and_preserves_eval() {
    let exprs = [
        "0.5*L**2+1.5*L+1",
        "(L+1)*(L+2)",
        "2**D+3*D",
        "L*M+L+M+1",
        "3*2**(D+2)+1.5*(D-1)**2",
    ];
    let mut seed = 12345u64;
    for src in exprs {
        let e = parse_cost_expr_text(src).unwrap();
        let c1 = e.canonical();
        let c2 = c1.canonical();
        assert_eq!(c1, c2, "canonical not idempotent for {src}");
        for _ in 0..100 {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let l = ((seed >> 33) % 20) as i64;
            let d = ((seed >> 13) % 10) as i64;
            let env = nat_env(&[("L", l), ("M", (l * 7 + 3) % 11), ("D", d)]);
            let a = eval_cost_expr(&e, &env).unwrap();
            let b = eval_cost_expr(&c1, &env).unwrap();
            assert_eq!(a, b, "eval mismatch for {src}");
        }
    }
}

#[test]
fn cost_expr_display_round_trips() {
    for src in [
        "0.5*L**2+1.5*L+1",
        "2**D+D",
        "l_A+l_B",
        "l_B/l_A+1",
        "95/6*L",
    ] {
        let e = parse_cost_expr_text(src).unwrap();
        let printed = format!("{e}");
        let back = parse_cost_expr_text(&printed).unwrap();
        // structural equality after canonicalization
        assert_eq!(
            e.canonical(),
            back.canonical(),
            "display round-trip failed: {src} -> {printed}"
        );
    }
}

#[test]
fn skeleton_keeps_dominant_monomials() {
    // 1.5 lA^2 + 3 lA lB + 14.5 lA + 3 lB + 13 -> {lA^2, lA*lB}
    let e = parse_cost_expr_text("1.5*l_A**2+3*l_A*l_B+14.5*l_A+3*l_B+13").unwrap();
    let p = e.to_polyexp().unwrap();
    let sk = p.skeleton();
    assert_eq!(sk.terms.len(), 2);
    let expect = parse_cost_expr_text("l_A**2+l_A*l_B")
        .unwrap()
        .to_polyexp()
        .unwrap();
    assert_eq!(sk, expect);
    // exponential dominates polynomial
    let e = parse_cost_expr_text("3*2**D+1.5*D**2+23.5*D").unwrap();
    let sk = e.to_polyexp().unwrap().skeleton();
    assert_eq!(
        sk,
        parse_cost_expr_text("2**D").unwrap().to_polyexp().unwrap()
    );
}

#[test]
fn duplicate_variable_names_stay_interned() {
    let a = Sym::new("hello");
    let b = Sym::new("hello");
    assert_eq!(a, b);
    assert_eq!(a.name(), "hello");
}
