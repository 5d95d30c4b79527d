//! Printing of terms, goals, clauses, assertions, and programs.
//! `parse(print(x))` is structurally the identity on this subset.

use super::assertion::{
    AssertionKind, CostKind, CostQualifier, CostSpec, OrderSpec, PredAssertion, PropFormula,
};
use super::program::{ArithExpr, ArithOp, Clause, CmpOp, Goal, Program};
use super::term::Term;

pub fn term_to_string(t: &Term) -> String {
    match t {
        Term::Var(v) => v.to_string(),
        Term::Atom(a) => {
            let name = a.name();
            if name == "[]"
                || name
                    .chars()
                    .next()
                    .map(|c| c.is_ascii_lowercase())
                    .unwrap_or(false)
            {
                name
            } else {
                format!("'{name}'")
            }
        }
        Term::Int(n) => n.to_string(),
        Term::Comp(f, args) => {
            let fname = f.name();
            if fname == "." && args.len() == 2 {
                return list_to_string(t);
            }
            if args.len() == 2 {
                if let "in" | ".." | "=<" | ">=" | "<" | ">" | "=:=" | "=\\=" | "==" | "\\==" =
                    fname.as_str()
                {
                    let sep = if fname == ".." { "" } else { " " };
                    return format!(
                        "{}{sep}{}{sep}{}",
                        term_to_string(&args[0]),
                        fname,
                        term_to_string(&args[1])
                    );
                }
            }
            let inner: Vec<String> = args.iter().map(term_to_string).collect();
            format!("{}({})", fname, inner.join(","))
        }
    }
}

fn list_to_string(t: &Term) -> String {
    let mut items = vec![];
    let mut cur = t;
    loop {
        match cur {
            Term::Comp(f, args) if f.name() == "." && args.len() == 2 => {
                items.push(term_to_string(&args[0]));
                cur = &args[1];
            }
            Term::Atom(a) if a.name() == "[]" => {
                return format!("[{}]", items.join(","));
            }
            other => {
                return format!("[{}|{}]", items.join(","), term_to_string(other));
            }
        }
    }
}

pub fn arith_to_string(e: &ArithExpr) -> String {
    fn prec(op: ArithOp) -> u8 {
        match op {
            ArithOp::BitOr | ArithOp::BitXor => 1,
            ArithOp::BitAnd => 2,
            ArithOp::Add | ArithOp::Sub => 3,
            ArithOp::Mul | ArithOp::Mod => 4,
        }
    }
    fn go(e: &ArithExpr, min: u8) -> String {
        match e {
            ArithExpr::Int(n) => n.to_string(),
            ArithExpr::Var(v) => v.to_string(),
            ArithExpr::Bin(op, a, b) => {
                let p = prec(*op);
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                    ArithOp::Mod => " mod ",
                    ArithOp::BitAnd => "/\\",
                    ArithOp::BitOr => "\\/",
                    ArithOp::BitXor => "#",
                };
                let s = format!("{}{}{}", go(a, p), sym, go(b, p + 1));
                if p < min {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }
    go(e, 0)
}

pub fn goal_to_string(g: &Goal) -> String {
    match g {
        Goal::Call(t) => term_to_string(t),
        Goal::Is(t, e) | Goal::BitCombine(t, e) => {
            format!("{} is {}", term_to_string(t), arith_to_string(e))
        }
        Goal::Compare(op, a, b) => {
            let sym = match op {
                CmpOp::Eq => "=:=",
                CmpOp::Ne => "=\\=",
                CmpOp::Lt => "<",
                CmpOp::Gt => ">",
                CmpOp::Le => "=<",
                CmpOp::Ge => ">=",
            };
            format!("{} {} {}", arith_to_string(a), sym, arith_to_string(b))
        }
        Goal::TermCmp(eq, a, b) => format!(
            "{} {} {}",
            term_to_string(a),
            if *eq { "==" } else { "\\==" },
            term_to_string(b)
        ),
        Goal::TypeTest(k, t) => format!("{}({})", k.name(), term_to_string(t)),
        Goal::ReifyCheck(p, r) => {
            format!("reify_check({},{})", term_to_string(p), term_to_string(r))
        }
        Goal::WarnIfFalse(t, label) => {
            format!("warn_if_false({},'{}')", term_to_string(t), label)
        }
        Goal::True => "true".to_string(),
    }
}

pub fn clause_to_string(c: &Clause) -> String {
    if c.body.is_empty() {
        format!("{}.", term_to_string(&c.head))
    } else {
        let goals: Vec<String> = c.body.iter().map(goal_to_string).collect();
        format!("{} :- {}.", term_to_string(&c.head), goals.join(", "))
    }
}

pub fn formula_to_string(f: &PropFormula) -> String {
    match f {
        PropFormula::Lit(t) => term_to_string(t),
        PropFormula::And(xs) => {
            if xs.is_empty() {
                return "true".into();
            }
            let parts: Vec<String> = xs.iter().map(formula_to_string).collect();
            format!("({})", parts.join(","))
        }
        PropFormula::Or(xs) => {
            let parts: Vec<String> = xs.iter().map(formula_to_string).collect();
            format!("({})", parts.join(";"))
        }
    }
}

pub fn cost_spec_to_string(s: &CostSpec) -> String {
    let qual = match &s.qualifier {
        CostQualifier::Exact(e) => format!("exact({e})"),
        CostQualifier::Ub(e) => format!("ub({e})"),
        CostQualifier::Lb(e) => format!("lb({e})"),
        CostQualifier::Band(l, u) => format!("band({l},{u})"),
        CostQualifier::OUb(e) => format!("o_ub({e})"),
        CostQualifier::SoUb(OrderSpec::Ident(id)) => format!("so_ub({})", id.name()),
        CostQualifier::SoUb(OrderSpec::Expr(e)) => format!("so_ub({e})"),
    };
    let kind = match s.kind {
        CostKind::Std => String::new(),
        k => format!(",{}", k.name()),
    };
    format!("cost({qual},[{}{kind}])", s.resource)
}

pub fn assertion_to_string(a: &PredAssertion) -> String {
    let mut out = format!(":- {} ", a.status.name());
    out.push_str(match a.kind {
        AssertionKind::Pred => "pred ",
        AssertionKind::Calls => "calls ",
    });
    match &a.head {
        None => out.push('*'),
        Some(h) => out.push_str(&term_to_string(h)),
    }
    if let Some(pre) = &a.pre {
        out.push_str(" : ");
        out.push_str(&formula_to_string(pre));
    }
    if let Some(post) = &a.post {
        out.push_str(" => ");
        out.push_str(&formula_to_string(post));
    }
    if !a.comp.is_empty() {
        out.push_str(" + ");
        let specs: Vec<String> = a.comp.iter().map(cost_spec_to_string).collect();
        if specs.len() == 1 {
            out.push_str(&specs[0]);
        } else {
            out.push('(');
            out.push_str(&specs.join(","));
            out.push(')');
        }
    }
    out.push('.');
    out
}

pub fn program_to_string(p: &Program) -> String {
    let mut out = String::new();
    for pid in &p.exports {
        out.push_str(&format!(":- export({pid}).\n"));
    }
    for (k, v) in &p.cost_model_overrides {
        out.push_str(&format!(":- cost_model({k},{v}).\n"));
    }
    for pid in &p.props {
        if p.has_pred(*pid) {
            out.push_str(&format!(":- prop({pid}).\n"));
        }
    }
    for a in &p.assertions {
        out.push_str(&assertion_to_string(a));
        out.push('\n');
    }
    for &pid in p.pred_ids() {
        for c in p.clauses_of(pid) {
            out.push_str(&clause_to_string(c));
            out.push('\n');
        }
    }
    out
}
