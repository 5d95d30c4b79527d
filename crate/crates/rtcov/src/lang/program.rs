//! Programs: clauses, goals, built-in goal kinds, and the cost model.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::assertion::PredAssertion;
use super::term::{PredId, Sym, Term};

/// Arithmetic expression inside `is/2` and comparisons.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ArithExpr {
    Int(i64),
    Var(Sym),
    Bin(ArithOp, Box<ArithExpr>, Box<ArithExpr>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Mod,
    /// bitwise and `/\`
    BitAnd,
    /// bitwise or `\/`
    BitOr,
    /// bitwise xor `#`
    BitXor,
}

impl ArithOp {
    pub fn is_bitwise(self) -> bool {
        matches!(self, ArithOp::BitAnd | ArithOp::BitOr | ArithOp::BitXor)
    }
}

impl ArithExpr {
    pub fn has_bitwise(&self) -> bool {
        match self {
            ArithExpr::Bin(op, a, b) => op.is_bitwise() || a.has_bitwise() || b.has_bitwise(),
            _ => false,
        }
    }

    pub fn vars(&self, out: &mut Vec<Sym>) {
        match self {
            ArithExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            ArithExpr::Bin(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            _ => {}
        }
    }
}

/// Arithmetic comparison operators.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CmpOp {
    /// `=:=`
    Eq,
    /// `=\=`
    Ne,
    /// `<`
    Lt,
    /// `>`
    Gt,
    /// `=<`
    Le,
    /// `>=`
    Ge,
}

/// Built-in type tests; these are also usable as prop literals.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TestKind {
    Var,
    Term,
    Num,
    Int,
    Nat,
    Atm,
    Atomic,
}

impl TestKind {
    pub fn from_name(name: &str) -> Option<TestKind> {
        Some(match name {
            "var" => TestKind::Var,
            "term" => TestKind::Term,
            "num" => TestKind::Num,
            "int" => TestKind::Int,
            "nat" => TestKind::Nat,
            "atm" => TestKind::Atm,
            "atomic" => TestKind::Atomic,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Var => "var",
            TestKind::Term => "term",
            TestKind::Num => "num",
            TestKind::Int => "int",
            TestKind::Nat => "nat",
            TestKind::Atm => "atm",
            TestKind::Atomic => "atomic",
        }
    }
}

/// One body goal.
#[derive(Clone, PartialEq, Debug)]
pub enum Goal {
    /// Call to a user predicate or a clause-defined property.
    Call(Term),
    /// `X is Expr` (plain arithmetic).
    Is(Term, ArithExpr),
    /// `R is Expr` with bitwise operators; emitted by the instrumenter to
    /// combine reified check results, attributed to the `bit_ops` center.
    BitCombine(Term, ArithExpr),
    /// Arithmetic comparison.
    Compare(CmpOp, ArithExpr, ArithExpr),
    /// Structural `==` (eq true) or `\==` (eq false).
    TermCmp(bool, Term, Term),
    /// Built-in type test.
    TypeTest(TestKind, Term),
    /// `reify_check(Prop, R)`: run the property check without binding the
    /// checked term; unify R with 1 (held) or 0 (failed). Never fails.
    ReifyCheck(Term, Term),
    /// `warn_if_false(R, Label)`: raise a violation if R == 0.
    WarnIfFalse(Term, Sym),
    True,
}

impl Goal {
    /// Goals usable as a clause-selection guard: tests that bind nothing.
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            Goal::Compare(..) | Goal::TermCmp(..) | Goal::TypeTest(..)
        )
    }

    pub fn vars(&self, out: &mut Vec<Sym>) {
        match self {
            Goal::Call(t) | Goal::TypeTest(_, t) => t.vars(out),
            Goal::Is(t, e) | Goal::BitCombine(t, e) => {
                t.vars(out);
                e.vars(out);
            }
            Goal::Compare(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Goal::TermCmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Goal::ReifyCheck(p, r) => {
                p.vars(out);
                r.vars(out);
            }
            Goal::WarnIfFalse(t, _) => t.vars(out),
            Goal::True => {}
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Goal>,
}

impl Clause {
    pub fn fact(head: Term) -> Clause {
        Clause { head, body: vec![] }
    }

    pub fn pred_id(&self) -> PredId {
        self.head.pred_id().expect("clause head is callable")
    }
}

/// Step costs per construct. The resource is resolution steps, so all
/// values are naturals; a clause application costs `clause`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CostModel {
    pub clause: u64,
    pub is_goal: u64,
    pub type_test: u64,
    pub compare: u64,
    pub reify: u64,
    pub warn: u64,
}

impl Default for CostModel {
    fn default() -> CostModel {
        CostModel {
            clause: 1,
            is_goal: 1,
            type_test: 1,
            compare: 0,
            reify: 0,
            warn: 0,
        }
    }
}

impl CostModel {
    pub fn set(&mut self, key: &str, value: u64) -> bool {
        match key {
            "clause" => self.clause = value,
            "is" => self.is_goal = value,
            "type_test" => self.type_test = value,
            "compare" => self.compare = value,
            "reify_check" => self.reify = value,
            "warn_if_false" => self.warn = value,
            _ => return false,
        }
        true
    }
}

/// Role a predicate plays after instrumentation; `Normal` for source
/// predicates. Roles drive cost-center attribution and reporting.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PredRole {
    Normal,
    /// Replaces the original predicate; calls checks and the renamed body.
    Wrapper,
    /// The renamed original clauses (`p'`).
    Renamed,
    /// Compiled precondition checks (`p_C`).
    CheckerC,
    /// Compiled postcondition checks (`p_S`).
    CheckerS,
    /// Boundary predicate between exported wrapper and internal code.
    InterfaceSplit,
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    order: Vec<PredId>,
    clauses: HashMap<PredId, Vec<Clause>>,
    pub assertions: Vec<PredAssertion>,
    pub exports: BTreeSet<PredId>,
    pub props: BTreeSet<PredId>,
    pub cost_model_overrides: BTreeMap<String, u64>,
    pub roles: BTreeMap<PredId, PredRole>,
    /// For harness predicates: the first property their check block
    /// reifies. Used by cost-center attribution.
    pub first_prop: BTreeMap<PredId, PredId>,
    /// For instrumentation-generated predicates: the source predicate
    /// they belong to. Violations are reported in source names.
    pub origin_owner: BTreeMap<PredId, PredId>,
}

impl Program {
    pub fn new() -> Program {
        Program::default()
    }

    pub fn cost_model(&self) -> CostModel {
        let mut m = CostModel::default();
        for (k, v) in &self.cost_model_overrides {
            m.set(k, *v);
        }
        m
    }

    pub fn pred_ids(&self) -> &[PredId] {
        &self.order
    }

    pub fn has_pred(&self, id: PredId) -> bool {
        self.clauses.contains_key(&id)
    }

    pub fn clauses_of(&self, id: PredId) -> &[Clause] {
        self.clauses.get(&id).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn add_clause(&mut self, clause: Clause) {
        let id = clause.pred_id();
        if !self.clauses.contains_key(&id) {
            self.order.push(id);
        }
        self.clauses.entry(id).or_default().push(clause);
    }

    pub fn remove_pred(&mut self, id: PredId) {
        self.clauses.remove(&id);
        self.order.retain(|p| *p != id);
    }

    pub fn role(&self, id: PredId) -> PredRole {
        self.roles.get(&id).copied().unwrap_or(PredRole::Normal)
    }

    pub fn is_prop(&self, id: PredId) -> bool {
        self.props.contains(&id)
    }

    pub fn assertions_of(&self, id: PredId) -> Vec<&PredAssertion> {
        self.assertions
            .iter()
            .filter(|a| a.head_pred() == Some(id))
            .collect()
    }

    /// Predicates called from the body goals of `id`'s clauses.
    pub fn callees(&self, id: PredId) -> Vec<PredId> {
        let mut out = vec![];
        for cl in self.clauses_of(id) {
            for g in &cl.body {
                let target = match g {
                    Goal::Call(t) => t.pred_id(),
                    Goal::ReifyCheck(p, _) => p.pred_id(),
                    _ => None,
                };
                if let Some(t) = target {
                    if self.has_pred(t) && !out.contains(&t) {
                        out.push(t);
                    }
                }
            }
        }
        out
    }
}
