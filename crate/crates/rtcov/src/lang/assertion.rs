//! Assertions: statuses, pred/calls assertions, prop formulas, cost specs.

use std::collections::HashMap;
use std::fmt;

use super::cost_expr::CostExpr;
use super::program::Program;
use super::term::{PredId, Sym, Term};
use crate::error::LangError;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AssertionStatus {
    Check,
    Checked,
    False,
    True,
    Trust,
}

impl AssertionStatus {
    pub fn name(self) -> &'static str {
        match self {
            AssertionStatus::Check => "check",
            AssertionStatus::Checked => "checked",
            AssertionStatus::False => "false",
            AssertionStatus::True => "true",
            AssertionStatus::Trust => "trust",
        }
    }

    pub fn from_name(s: &str) -> Option<AssertionStatus> {
        Some(match s {
            "check" => AssertionStatus::Check,
            "checked" => AssertionStatus::Checked,
            "false" => AssertionStatus::False,
            "true" => AssertionStatus::True,
            "trust" => AssertionStatus::Trust,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AssertionKind {
    Pred,
    Calls,
}

/// Conjunction/disjunction tree of prop literals.
#[derive(Clone, PartialEq, Debug)]
pub enum PropFormula {
    Lit(Term),
    And(Vec<PropFormula>),
    Or(Vec<PropFormula>),
}

impl PropFormula {
    pub fn lits(&self) -> Vec<&Term> {
        match self {
            PropFormula::Lit(t) => vec![t],
            PropFormula::And(xs) | PropFormula::Or(xs) => {
                xs.iter().flat_map(|x| x.lits()).collect()
            }
        }
    }

    pub fn and_lits(lits: Vec<Term>) -> PropFormula {
        if lits.len() == 1 {
            PropFormula::Lit(lits.into_iter().next().unwrap())
        } else {
            PropFormula::And(lits.into_iter().map(PropFormula::Lit).collect())
        }
    }

    pub fn rename(&self, map: &HashMap<Sym, Sym>) -> PropFormula {
        match self {
            PropFormula::Lit(t) => PropFormula::Lit(t.rename(map)),
            PropFormula::And(xs) => PropFormula::And(xs.iter().map(|x| x.rename(map)).collect()),
            PropFormula::Or(xs) => PropFormula::Or(xs.iter().map(|x| x.rename(map)).collect()),
        }
    }
}

/// Symbolic complexity-order identifiers for `so_ub/1`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OrderIdent {
    Constant,
    Logarithmic,
    Linear,
    Quadratic,
    Cubic,
    Exponential,
}

impl OrderIdent {
    pub fn name(self) -> &'static str {
        match self {
            OrderIdent::Constant => "constant",
            OrderIdent::Logarithmic => "logarithmic",
            OrderIdent::Linear => "linear",
            OrderIdent::Quadratic => "quadratic",
            OrderIdent::Cubic => "cubic",
            OrderIdent::Exponential => "exponential",
        }
    }

    pub fn from_name(s: &str) -> Option<OrderIdent> {
        Some(match s {
            "constant" => OrderIdent::Constant,
            "logarithmic" => OrderIdent::Logarithmic,
            "linear" => OrderIdent::Linear,
            "quadratic" => OrderIdent::Quadratic,
            "cubic" => OrderIdent::Cubic,
            "exponential" => OrderIdent::Exponential,
            _ => return None,
        })
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum OrderSpec {
    Ident(OrderIdent),
    /// Order expression over the free parameter N, e.g. `N**4`, `2**N`.
    Expr(CostExpr),
}

#[derive(Clone, PartialEq, Debug)]
pub enum CostQualifier {
    Exact(CostExpr),
    Ub(CostExpr),
    Lb(CostExpr),
    Band(CostExpr, CostExpr),
    /// Complexity order of an upper bound, with explicit argument relation.
    OUb(CostExpr),
    /// Symbolic complexity order of an upper bound.
    SoUb(OrderSpec),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CostKind {
    Std,
    Acc,
    RtcRatio,
}

impl CostKind {
    pub fn name(self) -> &'static str {
        match self {
            CostKind::Std => "std",
            CostKind::Acc => "acc",
            CostKind::RtcRatio => "rtc_ratio",
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct CostSpec {
    pub qualifier: CostQualifier,
    /// Resource metric; only `steps` is meaningful here.
    pub resource: Sym,
    pub kind: CostKind,
}

#[derive(Clone, PartialEq, Debug)]
pub struct PredAssertion {
    pub status: AssertionStatus,
    pub kind: AssertionKind,
    /// None only for universal (`pred *`) assertions.
    pub head: Option<Term>,
    pub pre: Option<PropFormula>,
    pub post: Option<PropFormula>,
    pub comp: Vec<CostSpec>,
    pub universal: bool,
}

impl PredAssertion {
    pub fn head_pred(&self) -> Option<PredId> {
        self.head.as_ref().and_then(|h| h.pred_id())
    }

    pub fn head_vars(&self) -> Vec<Sym> {
        let mut vs = vec![];
        if let Some(h) = &self.head {
            h.vars(&mut vs);
        }
        vs
    }
}

/// Canonical head argument names: A, B, ..., Z, A1, ...
pub fn canonical_arg_name(i: usize) -> String {
    let letters = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    if i < 26 {
        (letters[i] as char).to_string()
    } else {
        format!("{}{}", letters[i % 26] as char, i / 26)
    }
}

/// Group assertions per predicate, rename head arguments to canonical
/// distinct variables, and expand universal assertions into one assertion
/// per defined predicate. Idempotent.
pub fn normalize_assertions(program: &Program) -> Result<Program, LangError> {
    let mut out = program.clone();
    let mut expanded: Vec<PredAssertion> = vec![];
    for a in &program.assertions {
        if a.universal {
            for &pid in program.pred_ids() {
                if program.is_prop(pid) || program.role(pid) != super::program::PredRole::Normal {
                    continue;
                }
                let args: Vec<Term> = (0..pid.arity)
                    .map(|i| Term::var(&canonical_arg_name(i)))
                    .collect();
                expanded.push(PredAssertion {
                    status: a.status,
                    kind: a.kind,
                    head: Some(Term::comp(&pid.name.name(), args)),
                    pre: a.pre.clone(),
                    post: a.post.clone(),
                    comp: a.comp.clone(),
                    universal: false,
                });
            }
        } else {
            expanded.push(a.clone());
        }
    }

    // canonical head-variable renaming
    let mut renamed: Vec<PredAssertion> = vec![];
    for a in expanded {
        let head = a
            .head
            .clone()
            .ok_or_else(|| LangError::Assertion("non-universal assertion without a head".into()))?;
        let pid = head.pred_id().ok_or_else(|| {
            LangError::Assertion("assertion head must be an atom or compound".into())
        })?;
        if program.has_pred(pid) {
            // arity consistency with clauses is implied by PredId equality;
            // a name with a different arity is a different predicate
        } else if !program.pred_ids().iter().any(|p| p.name == pid.name) {
            // heads may reference built-in props; leave those alone
        } else {
            return Err(LangError::Assertion(format!(
                "assertion head {pid} does not match any clause arity"
            )));
        }
        let mut map: HashMap<Sym, Sym> = HashMap::new();
        let mut args_ok = true;
        for (i, arg) in head.args().iter().enumerate() {
            match arg {
                Term::Var(v) => {
                    let canon = Sym::new(&canonical_arg_name(i));
                    if map.contains_key(v) {
                        args_ok = false;
                    }
                    map.insert(*v, canon);
                }
                _ => args_ok = false,
            }
        }
        if !args_ok {
            return Err(LangError::Assertion(format!(
                "assertion head for {pid} must have distinct variable arguments"
            )));
        }
        let args: Vec<Term> = (0..pid.arity)
            .map(|i| Term::var(&canonical_arg_name(i)))
            .collect();
        renamed.push(PredAssertion {
            status: a.status,
            kind: a.kind,
            head: Some(Term::comp(&pid.name.name(), args)),
            pre: a.pre.as_ref().map(|f| f.rename(&map)),
            post: a.post.as_ref().map(|f| f.rename(&map)),
            comp: a.comp.clone(),
            universal: false,
        });
    }

    // stable grouping by predicate, preserving relative order
    let mut groups: Vec<(PredId, Vec<PredAssertion>)> = vec![];
    for a in renamed {
        let pid = a.head_pred().expect("renamed assertions have heads");
        match groups.iter_mut().find(|(p, _)| *p == pid) {
            Some((_, v)) => v.push(a),
            None => groups.push((pid, vec![a])),
        }
    }
    out.assertions = groups.into_iter().flat_map(|(_, v)| v).collect();
    Ok(out)
}

impl fmt::Display for PredAssertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::printer::assertion_to_string(self))
    }
}
