//! Report rendering: the human-readable table and the stable structured
//! format used for byte-comparable golden output.
//!
//! The structured format is versioned, line-oriented `key=value` records.
//! Analysis timings are reported only in the human table so structured
//! reports are deterministic for a given seed.

use crate::bench::ReportRow;
use crate::cost::{Analysis, Bound};
use crate::lang::assertion::{
    AssertionKind, AssertionStatus, CostKind, CostQualifier, CostSpec, PredAssertion, PropFormula,
};
use crate::lang::poly::PolyExp;
use crate::lang::{PredId, Sym, Term};
use crate::sizes::Metric;

pub const STRUCTURED_HEADER: &str = "rtcov-report 1";

pub fn structured(rows: &[ReportRow]) -> String {
    let mut out = String::from(STRUCTURED_HEADER);
    out.push('\n');
    for r in rows {
        let dev = match r.dev_pct {
            Some(d) => format!("{d:.2}"),
            None => "undefined".to_string(),
        };
        out.push_str(&format!(
            "row bench={} rtc={} lower={} upper={} exact={} devpct={} ovhd={} verif={}\n",
            r.bench,
            r.scenario,
            r.bound_lower,
            r.bound_upper,
            r.exact,
            dev,
            r.ovhd.as_deref().unwrap_or("-"),
            r.verdict.map(|v| v.name()).unwrap_or("-"),
        ));
    }
    out
}

pub fn table(rows: &[ReportRow]) -> String {
    let mut cells: Vec<[String; 7]> = vec![[
        "Bench.".into(),
        "RTC".into(),
        "Bound Inferred".into(),
        "%D".into(),
        "T_A(ms)".into(),
        "Ovhd".into(),
        "Verif.".into(),
    ]];
    for r in rows {
        let bound = if r.exact {
            r.bound_upper.clone()
        } else {
            format!("{} (ub; lb {})", r.bound_upper, r.bound_lower)
        };
        let dev = match r.dev_pct {
            Some(d) => format!("{d:.2}"),
            None => "-".into(),
        };
        cells.push([
            r.bench.clone(),
            r.scenario.clone(),
            bound,
            dev,
            r.analysis_ms.to_string(),
            r.ovhd.clone().unwrap_or_else(|| "-".into()),
            r.verdict
                .map(|v| v.name().to_string())
                .unwrap_or_else(|| "-".into()),
        ]);
    }
    let mut width = [0usize; 7];
    for row in &cells {
        for (i, c) in row.iter().enumerate() {
            width[i] = width[i].max(c.len());
        }
    }
    let mut out = String::new();
    for (ri, row) in cells.iter().enumerate() {
        for (i, c) in row.iter().enumerate() {
            out.push_str(&format!("{:<w$}  ", c, w = width[i]));
        }
        out.push('\n');
        if ri == 0 {
            out.push_str(&"-".repeat(width.iter().sum::<usize>() + 14));
            out.push('\n');
        }
    }
    out
}

/// Build the `true pred` assertion reporting an inferred bound, in the
/// style the analyzer's output uses: the original head and formulas plus
/// size-binding conjuncts and the cost property.
pub fn true_assertion(raw: &PredAssertion, analysis: &Analysis) -> PredAssertion {
    let entry = analysis.entry;
    let mut head_vars: Vec<Sym> = raw.head_vars();
    if head_vars.len() != entry.arity {
        head_vars = (0..entry.arity)
            .map(|i| Sym::new(&crate::lang::assertion::canonical_arg_name(i)))
            .collect();
    }

    // size-binding literals: length(X,L) etc. for sized inputs, and for
    // outputs whose size equals an input size exactly
    let mut pre_lits: Vec<Term> = raw
        .pre
        .as_ref()
        .map(|f| f.lits().into_iter().cloned().collect())
        .unwrap_or_default();
    let mut post_lits: Vec<Term> = raw
        .post
        .as_ref()
        .map(|f| f.lits().into_iter().cloned().collect())
        .unwrap_or_default();

    let lit_name = |m: Metric| match m {
        Metric::Len => "length",
        Metric::Inner => "row_length",
        Metric::Depth => "depth",
        Metric::IntVal => "value",
    };
    for (j, m, sym) in analysis.metrics.params_of(entry) {
        let display = analysis.display.get(&sym).copied().unwrap_or(sym);
        let lit = Term::comp(
            lit_name(m),
            vec![Term::Var(head_vars[j]), Term::Var(display)],
        );
        pre_lits.push(lit.clone());
        post_lits.push(lit);
    }
    #[allow(clippy::needless_range_loop)]
    for j in 0..entry.arity {
        if !analysis.metrics.is_output(entry, j) {
            continue;
        }
        for m in analysis.metrics.of(entry, j) {
            let Some(rel) = analysis.rels.get(&(entry, j, m)) else {
                continue;
            };
            if rel.hi.as_ref() != Some(&rel.lo) {
                continue;
            }
            // the relation is exact; name it when it matches one input
            let renamed = rename_to_display(&rel.lo, analysis);
            if renamed.terms.len() == 1 {
                if let Some((v, 1)) = renamed.terms[0].mono.iter().next().map(|(v, p)| (*v, *p)) {
                    if renamed.terms[0].coeff == crate::lang::poly::rat(1)
                        && renamed.terms[0].exps.is_empty()
                    {
                        post_lits.push(Term::comp(
                            lit_name(m),
                            vec![Term::Var(head_vars[j]), Term::Var(v)],
                        ));
                    }
                }
            }
        }
    }

    let qualifier = if analysis.bound.exact() {
        CostQualifier::Exact(analysis.bound.lower_expr())
    } else {
        CostQualifier::Band(analysis.bound.lower_expr(), analysis.bound.upper_expr())
    };
    PredAssertion {
        status: AssertionStatus::True,
        kind: AssertionKind::Pred,
        head: Some(Term::comp(
            &entry.name.name(),
            head_vars.iter().map(|v| Term::Var(*v)).collect(),
        )),
        pre: Some(PropFormula::and_lits(pre_lits)),
        post: if post_lits.is_empty() {
            None
        } else {
            Some(PropFormula::and_lits(post_lits))
        },
        comp: vec![CostSpec {
            qualifier,
            resource: Sym::new("steps"),
            kind: CostKind::Std,
        }],
        universal: false,
    }
}

fn rename_to_display(p: &PolyExp, analysis: &Analysis) -> PolyExp {
    let mut out = p.clone();
    for (from, to) in &analysis.display {
        if let Some(next) = out.subst(*from, &PolyExp::var(*to)) {
            out = next;
        }
    }
    out
}

/// Accumulated-cost assertion for one center.
pub fn acc_assertion(center: &str, entry: PredId, bound: &Bound) -> String {
    let qualifier = if bound.exact() {
        format!("exact({})", bound.lower_expr())
    } else {
        format!("band({},{})", bound.lower_expr(), bound.upper_expr())
    };
    format!(":- true pred {entry} @ {center} + cost({qualifier},[steps,acc]).",)
}

/// One pass/fail line per acceptance criterion, used by the acceptance
/// suite's output.
pub fn criterion_line(name: &str, pass: bool) -> String {
    format!(
        "acceptance {}: {}",
        name,
        if pass { "PASS" } else { "FAIL" }
    )
}

/// Exit code convention: 0 all checked, 1 any false, 2 any undecided.
pub fn exit_code(verdicts: &[crate::verify::Verdict]) -> i32 {
    use crate::verify::Verdict::*;
    if verdicts.contains(&False) {
        1
    } else if verdicts.contains(&Check) {
        2
    } else {
        0
    }
}
