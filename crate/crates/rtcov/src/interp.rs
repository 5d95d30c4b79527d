//! Resolution interpreter with exact step counting and cost-center
//! attribution. Every inferred bound is validated against runs of this
//! interpreter.
//!
//! Semantics: depth-first left-to-right resolution enumerating all
//! answers. Clause selection is guard-aware: a clause is *applied* (and
//! charged one clause step plus its guard costs) only when its head
//! unifies and its leading guard prefix of test built-ins succeeds;
//! rejected candidates cost nothing. Work done by an applied clause whose
//! remaining body later fails stays counted.

use std::collections::{BTreeMap, HashMap};

use crate::error::RunError;
use crate::lang::poly::Rat;
use crate::lang::program::{ArithExpr, ArithOp, CmpOp, CostModel, Goal, PredRole, TestKind};
use crate::lang::{CostExpr, PredId, Program, Sym, Term};

/// A cost center: a predicate, or the pseudo-center collecting the
/// bitwise combination goals emitted by the instrumenter.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum CenterId {
    Pred(PredId),
    BitOps,
}

impl std::fmt::Display for CenterId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CenterId::Pred(p) => write!(f, "{p}"),
            CenterId::BitOps => write!(f, "bit_ops/1"),
        }
    }
}

/// Parse a CLI-style center name: `list/1`, `bit_ops`, `app_rtc/3`.
/// The `_rtc` suffix refers to the instrumented entry predicate.
pub fn parse_center(s: &str) -> Option<CenterId> {
    let s = s.trim();
    if s == "bit_ops" || s == "bit_ops/1" {
        return Some(CenterId::BitOps);
    }
    let (name, arity) = s.split_once('/')?;
    let arity: usize = arity.parse().ok()?;
    let name = name.strip_suffix("_rtc").unwrap_or(name);
    Some(CenterId::Pred(PredId::new(name, arity)))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ViolationLabel {
    Calls,
    Success,
}

impl std::fmt::Display for ViolationLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViolationLabel::Calls => write!(f, "calls"),
            ViolationLabel::Success => write!(f, "success"),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Violation {
    pub label: ViolationLabel,
    /// The user predicate whose check fired, in source names.
    pub pred: PredId,
}

#[derive(Clone, Default, Debug)]
pub struct StepCount {
    pub total: u64,
    pub per_center: BTreeMap<CenterId, u64>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    /// One entry per answer: goal variables with their bindings, rendered.
    pub answers: Vec<Vec<(Sym, String)>>,
    pub steps: StepCount,
    pub violation: Option<Violation>,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub budget: u64,
    /// Keep executing after a violation (test harness use).
    pub keep_going: bool,
}

impl Default for SolveOptions {
    fn default() -> SolveOptions {
        SolveOptions {
            budget: 100_000_000,
            keep_going: false,
        }
    }
}

/// Runtime terms use numeric variables into the binding store.
#[derive(Clone, PartialEq, Debug)]
enum RTerm {
    Var(usize),
    Atom(Sym),
    Int(i64),
    Comp(Sym, Vec<RTerm>),
}

enum Stop {
    Violation,
    Budget,
    /// Early exit used by property checks once one solution is found.
    Done,
}

type CompiledClause = (RTerm, Vec<Goal>, HashMap<Sym, usize>, usize);

struct Machine<'a> {
    program: &'a Program,
    clauses: HashMap<PredId, std::rc::Rc<Vec<CompiledClause>>>,
    model: CostModel,
    centers: Vec<CenterId>,
    bindings: Vec<Option<RTerm>>,
    trail: Vec<usize>,
    steps: u64,
    per_center: BTreeMap<CenterId, u64>,
    budget: u64,
    keep_going: bool,
    violation: Option<Violation>,
    answers: Vec<Vec<(Sym, String)>>,
    goal_vars: Vec<(Sym, usize)>,
}

impl<'a> Machine<'a> {
    fn new(program: &'a Program, centers: &[CenterId], opts: SolveOptions) -> Machine<'a> {
        // Precompile clauses: head as RTerm template with var slots numbered
        // per clause; instantiation offsets them into the store.
        let mut clauses = HashMap::new();
        for &pid in program.pred_ids() {
            let mut list = vec![];
            for cl in program.clauses_of(pid) {
                let mut map = HashMap::new();
                let head = template(&cl.head, &mut map);
                let n = map.len();
                list.push((head, cl.body.clone(), map, n));
            }
            clauses.insert(pid, std::rc::Rc::new(list));
        }
        Machine {
            program,
            clauses,
            model: program.cost_model(),
            centers: centers.to_vec(),
            bindings: vec![],
            trail: vec![],
            steps: 0,
            per_center: BTreeMap::new(),
            budget: opts.budget,
            keep_going: opts.keep_going,
            violation: None,
            answers: vec![],
            goal_vars: vec![],
        }
    }

    fn fresh(&mut self) -> usize {
        self.bindings.push(None);
        self.bindings.len() - 1
    }

    fn charge(&mut self, amount: u64, center: CenterId) -> Result<(), Stop> {
        if amount == 0 {
            return Ok(());
        }
        self.steps += amount;
        *self.per_center.entry(center).or_insert(0) += amount;
        if self.steps > self.budget {
            return Err(Stop::Budget);
        }
        Ok(())
    }

    fn deref(&self, t: &RTerm) -> RTerm {
        let mut cur = t.clone();
        while let RTerm::Var(v) = cur {
            match &self.bindings[v] {
                Some(b) => cur = b.clone(),
                None => return RTerm::Var(v),
            }
        }
        cur
    }

    fn bind(&mut self, v: usize, t: RTerm) {
        self.bindings[v] = Some(t);
        self.trail.push(v);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.bindings[v] = None;
        }
    }

    /// Unify without occurs-check. `protect` is a watermark: variables
    /// below it may not be bound (used for non-binding property checks).
    fn unify(&mut self, a: &RTerm, b: &RTerm, protect: usize) -> bool {
        let a = self.deref(a);
        let b = self.deref(b);
        match (a, b) {
            (RTerm::Var(x), RTerm::Var(y)) if x == y => true,
            (RTerm::Var(x), other) => {
                if x < protect {
                    match other {
                        RTerm::Var(y) if y >= protect => {
                            self.bind(y, RTerm::Var(x));
                            true
                        }
                        _ => false,
                    }
                } else {
                    self.bind(x, other);
                    true
                }
            }
            (other, RTerm::Var(y)) => {
                if y < protect {
                    false
                } else {
                    self.bind(y, other);
                    true
                }
            }
            (RTerm::Atom(x), RTerm::Atom(y)) => x == y,
            (RTerm::Int(x), RTerm::Int(y)) => x == y,
            (RTerm::Comp(f, xs), RTerm::Comp(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                for (x, y) in xs.iter().zip(ys.iter()) {
                    if !self.unify(x, y, protect) {
                        return false;
                    }
                }
                true
            }
            _ => false,
        }
    }

    fn instantiate(&mut self, tmpl: &RTerm, base: usize) -> RTerm {
        match tmpl {
            RTerm::Var(i) => RTerm::Var(base + i),
            RTerm::Comp(f, args) => {
                RTerm::Comp(*f, args.iter().map(|a| self.instantiate(a, base)).collect())
            }
            other => other.clone(),
        }
    }

    fn term_to_rterm(&mut self, t: &Term, vars: &mut HashMap<Sym, usize>) -> RTerm {
        match t {
            Term::Var(v) => {
                let id = *vars.entry(*v).or_insert_with(|| {
                    self.bindings.push(None);
                    self.bindings.len() - 1
                });
                RTerm::Var(id)
            }
            Term::Atom(a) => RTerm::Atom(*a),
            Term::Int(n) => RTerm::Int(*n),
            Term::Comp(f, args) => RTerm::Comp(
                *f,
                args.iter().map(|a| self.term_to_rterm(a, vars)).collect(),
            ),
        }
    }

    fn eval_arith(&self, e: &ArithExpr, vars: &HashMap<Sym, usize>) -> Result<i64, RunError> {
        match e {
            ArithExpr::Int(n) => Ok(*n),
            ArithExpr::Var(v) => {
                let id = vars
                    .get(v)
                    .ok_or_else(|| RunError::Arith(format!("unbound variable {v}")))?;
                match self.deref(&RTerm::Var(*id)) {
                    RTerm::Int(n) => Ok(n),
                    other => Err(RunError::Arith(format!(
                        "expected a number, got {}",
                        self.render(&other)
                    ))),
                }
            }
            ArithExpr::Bin(op, a, b) => {
                let x = self.eval_arith(a, vars)?;
                let y = self.eval_arith(b, vars)?;
                Ok(match op {
                    ArithOp::Add => x.wrapping_add(y),
                    ArithOp::Sub => x.wrapping_sub(y),
                    ArithOp::Mul => x.wrapping_mul(y),
                    ArithOp::Mod => {
                        if y == 0 {
                            return Err(RunError::Arith("mod by zero".into()));
                        }
                        x.rem_euclid(y)
                    }
                    ArithOp::BitAnd => x & y,
                    ArithOp::BitOr => x | y,
                    ArithOp::BitXor => x ^ y,
                })
            }
        }
    }

    fn type_test(&self, k: TestKind, t: &RTerm) -> bool {
        let t = self.deref(t);
        match k {
            TestKind::Var => matches!(t, RTerm::Var(_)),
            TestKind::Term => true,
            TestKind::Num | TestKind::Int => matches!(t, RTerm::Int(_)),
            TestKind::Nat => matches!(t, RTerm::Int(n) if n >= 0),
            TestKind::Atm => matches!(t, RTerm::Atom(_)),
            TestKind::Atomic => matches!(t, RTerm::Atom(_) | RTerm::Int(_)),
        }
    }

    fn render(&self, t: &RTerm) -> String {
        term_to_string_r(self, t)
    }

    /// Attribution target for the clause step of predicate `pid`.
    fn clause_center(&self, pid: PredId, ctx: CenterId) -> CenterId {
        match self.program.role(pid) {
            PredRole::Wrapper
            | PredRole::CheckerC
            | PredRole::CheckerS
            | PredRole::InterfaceSplit => {
                if let Some(fp) = self.program.first_prop.get(&pid) {
                    let c = CenterId::Pred(*fp);
                    if self.centers.contains(&c) {
                        return c;
                    }
                }
                if self.centers.contains(&CenterId::Pred(pid)) {
                    CenterId::Pred(pid)
                } else {
                    ctx
                }
            }
            _ => {
                if self.centers.contains(&CenterId::Pred(pid)) {
                    CenterId::Pred(pid)
                } else {
                    ctx
                }
            }
        }
    }

    /// Context for the body of `pid` once entered.
    fn body_context(&self, pid: PredId, ctx: CenterId) -> CenterId {
        if self.centers.contains(&CenterId::Pred(pid)) {
            CenterId::Pred(pid)
        } else {
            ctx
        }
    }

    fn bitops_center(&self, ctx: CenterId) -> CenterId {
        if self.centers.contains(&CenterId::BitOps) {
            CenterId::BitOps
        } else {
            ctx
        }
    }

    /// Solve a predicate call; invokes `cont` for every answer.
    /// `protect` is the non-binding watermark for property checks.
    fn solve_call(
        &mut self,
        goal: &RTerm,
        ctx: CenterId,
        protect: usize,
        cont: &mut dyn FnMut(&mut Machine<'a>) -> Result<(), Stop>,
    ) -> Result<(), Stop> {
        let goal = self.deref(goal);
        let pid = match &goal {
            RTerm::Atom(a) => PredId { name: *a, arity: 0 },
            RTerm::Comp(f, args) => PredId {
                name: *f,
                arity: args.len(),
            },
            _ => return Ok(()), // unbound or numeric goal: fail silently
        };
        let Some(clauses) = self.clauses.get(&pid) else {
            return Ok(()); // undefined predicate inside a check: fail
        };
        let clauses = std::rc::Rc::clone(clauses);
        let body_ctx = self.body_context(pid, ctx);
        let step_center = self.clause_center(pid, ctx);
        for (head_tmpl, body, varmap, nvars) in clauses.iter() {
            let mark = self.trail.len();
            let base = self.bindings.len();
            for _ in 0..*nvars {
                self.fresh();
            }
            let head = self.instantiate(head_tmpl, base);
            if !self.unify(&goal, &head, protect) {
                self.undo_to(mark);
                self.bindings.truncate(base);
                continue;
            }
            // guard prefix: evaluate before charging anything
            let ids: HashMap<Sym, usize> = varmap.iter().map(|(s, i)| (*s, base + i)).collect();
            let mut guard_len = 0;
            let mut guards_ok = true;
            for g in body.iter() {
                if !g.is_guard() {
                    break;
                }
                guard_len += 1;
                if !self.eval_guard(g, &ids) {
                    guards_ok = false;
                    break;
                }
            }
            if !guards_ok {
                self.undo_to(mark);
                self.bindings.truncate(base);
                continue;
            }
            // the clause applies: charge its step and guard costs
            self.charge(self.model.clause, step_center)?;
            for g in body.iter().take(guard_len) {
                let cost = match g {
                    Goal::TypeTest(..) => self.model.type_test,
                    _ => self.model.compare,
                };
                self.charge(cost, body_ctx)?;
            }
            self.solve_seq(&body[guard_len..], &ids, body_ctx, protect, cont)?;
            self.undo_to(mark);
            // bindings past base stay allocated; harmless
        }
        Ok(())
    }

    fn eval_guard(&mut self, g: &Goal, ids: &HashMap<Sym, usize>) -> bool {
        match g {
            Goal::Compare(op, a, b) => {
                let (Ok(x), Ok(y)) = (self.eval_arith(a, ids), self.eval_arith(b, ids)) else {
                    return false;
                };
                match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Gt => x > y,
                    CmpOp::Le => x <= y,
                    CmpOp::Ge => x >= y,
                }
            }
            Goal::TermCmp(eq, a, b) => {
                let mut vars = HashMap::new();
                let ra = self.goal_term(a, ids, &mut vars);
                let rb = self.goal_term(b, ids, &mut vars);
                let equal = self.terms_equal(&ra, &rb);
                if *eq {
                    equal
                } else {
                    !equal
                }
            }
            Goal::TypeTest(k, t) => {
                let mut vars = HashMap::new();
                let rt = self.goal_term(t, ids, &mut vars);
                self.type_test(*k, &rt)
            }
            _ => true,
        }
    }

    fn terms_equal(&self, a: &RTerm, b: &RTerm) -> bool {
        let a = self.deref(a);
        let b = self.deref(b);
        match (&a, &b) {
            (RTerm::Comp(f, xs), RTerm::Comp(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.terms_equal(x, y))
            }
            _ => a == b,
        }
    }

    /// Convert a source term in a clause body to a runtime term, using the
    /// clause's variable map (extended for first occurrences).
    fn goal_term(
        &mut self,
        t: &Term,
        ids: &HashMap<Sym, usize>,
        extra: &mut HashMap<Sym, usize>,
    ) -> RTerm {
        match t {
            Term::Var(v) => {
                if let Some(i) = ids.get(v) {
                    RTerm::Var(*i)
                } else {
                    let id = *extra.entry(*v).or_insert_with(|| {
                        self.bindings.push(None);
                        self.bindings.len() - 1
                    });
                    RTerm::Var(id)
                }
            }
            Term::Atom(a) => RTerm::Atom(*a),
            Term::Int(n) => RTerm::Int(*n),
            Term::Comp(f, args) => {
                let rs: Vec<RTerm> = args.iter().map(|a| self.goal_term(a, ids, extra)).collect();
                RTerm::Comp(*f, rs)
            }
        }
    }

    fn solve_seq(
        &mut self,
        goals: &[Goal],
        ids: &HashMap<Sym, usize>,
        ctx: CenterId,
        protect: usize,
        cont: &mut dyn FnMut(&mut Machine<'a>) -> Result<(), Stop>,
    ) -> Result<(), Stop> {
        let Some((first, rest)) = goals.split_first() else {
            return cont(self);
        };
        match first {
            Goal::True => self.solve_seq(rest, ids, ctx, protect, cont),
            Goal::Call(t) => {
                let mut extra = HashMap::new();
                let rt = self.goal_term(t, ids, &mut extra);
                let mut ids2 = ids.clone();
                ids2.extend(extra);
                self.solve_call(&rt, ctx, protect, &mut |m| {
                    m.solve_seq(rest, &ids2, ctx, protect, cont)
                })
            }
            Goal::Is(t, e) | Goal::BitCombine(t, e) => {
                let center = if matches!(first, Goal::BitCombine(..)) {
                    self.bitops_center(ctx)
                } else {
                    ctx
                };
                let mut extra = HashMap::new();
                let lhs = self.goal_term(t, ids, &mut extra);
                let mut ids2 = ids.clone();
                ids2.extend(extra);
                let v = match self.eval_arith(e, &ids2) {
                    Ok(v) => v,
                    Err(_) => return Ok(()), // evaluation failure: goal fails
                };
                self.charge(self.model.is_goal, center)?;
                let mark = self.trail.len();
                if self.unify(&lhs, &RTerm::Int(v), protect) {
                    self.solve_seq(rest, &ids2, ctx, protect, cont)?;
                }
                self.undo_to(mark);
                Ok(())
            }
            Goal::Compare(..) | Goal::TermCmp(..) | Goal::TypeTest(..) => {
                let cost = match first {
                    Goal::TypeTest(..) => self.model.type_test,
                    _ => self.model.compare,
                };
                self.charge(cost, ctx)?;
                let mut ids2 = ids.clone();
                let mut extra = HashMap::new();
                // materialize any new vars for term comparisons
                if let Goal::TermCmp(_, a, b) = first {
                    let _ = self.goal_term(a, ids, &mut extra);
                    let _ = self.goal_term(b, ids, &mut extra);
                }
                if let Goal::TypeTest(_, t) = first {
                    let _ = self.goal_term(t, ids, &mut extra);
                }
                ids2.extend(extra.clone());
                if self.eval_guard(first, &ids2) {
                    self.solve_seq(rest, &ids2, ctx, protect, cont)?;
                }
                Ok(())
            }
            Goal::ReifyCheck(p, r) => {
                let mut extra = HashMap::new();
                let rp = self.goal_term(p, ids, &mut extra);
                let rr = self.goal_term(r, ids, &mut extra);
                let mut ids2 = ids.clone();
                ids2.extend(extra);
                self.charge(self.model.reify, ctx)?;
                let ok = self.check_property(&rp, ctx)?;
                let mark = self.trail.len();
                let bit = RTerm::Int(if ok { 1 } else { 0 });
                if self.unify(&rr, &bit, protect) {
                    self.solve_seq(rest, &ids2, ctx, protect, cont)?;
                }
                self.undo_to(mark);
                Ok(())
            }
            Goal::WarnIfFalse(t, label) => {
                let mut extra = HashMap::new();
                let rt = self.goal_term(t, ids, &mut extra);
                self.charge(self.model.warn, ctx)?;
                if matches!(self.deref(&rt), RTerm::Int(0)) {
                    let label = if label.name() == "success" {
                        ViolationLabel::Success
                    } else {
                        ViolationLabel::Calls
                    };
                    let pred = match ctx {
                        CenterId::Pred(p) => {
                            self.program.origin_owner.get(&p).copied().unwrap_or(p)
                        }
                        CenterId::BitOps => PredId::new("bit_ops", 1),
                    };
                    if self.violation.is_none() {
                        self.violation = Some(Violation { label, pred });
                    }
                    if !self.keep_going {
                        return Err(Stop::Violation);
                    }
                    return Ok(()); // check failed: warn raised, goal fails
                }
                let mut ids2 = ids.clone();
                ids2.extend(extra);
                self.solve_seq(rest, &ids2, ctx, protect, cont)
            }
        }
    }

    /// Non-binding property check: run the property goal; any attempt to
    /// bind a variable that existed before the check fails that path.
    /// Steps are attributed to the property's own center when declared.
    fn check_property(&mut self, p: &RTerm, ctx: CenterId) -> Result<bool, Stop> {
        let p = self.deref(p);
        // built-in test props
        if let Some(pid) = rterm_pred(&p) {
            if pid.arity == 1 {
                if let Some(k) = TestKind::from_name(&pid.name.name()) {
                    let center = if self.centers.contains(&CenterId::Pred(pid)) {
                        CenterId::Pred(pid)
                    } else {
                        ctx
                    };
                    self.charge(self.model.type_test, center)?;
                    let arg = match &p {
                        RTerm::Comp(_, args) => args[0].clone(),
                        _ => return Ok(false),
                    };
                    return Ok(self.type_test(k, &arg));
                }
            }
            let watermark = self.bindings.len();
            let mark = self.trail.len();
            let mut found = false;
            let r = self.solve_call(&p, ctx, watermark, &mut |_m: &mut Machine<'a>| {
                found = true;
                Err(Stop::Done)
            });
            self.undo_to(mark);
            match r {
                Ok(()) | Err(Stop::Done) => Ok(found),
                Err(e) => Err(e),
            }
        } else {
            Ok(false)
        }
    }
}

fn rterm_pred(t: &RTerm) -> Option<PredId> {
    match t {
        RTerm::Atom(a) => Some(PredId { name: *a, arity: 0 }),
        RTerm::Comp(f, args) => Some(PredId {
            name: *f,
            arity: args.len(),
        }),
        _ => None,
    }
}

fn template(t: &Term, map: &mut HashMap<Sym, usize>) -> RTerm {
    match t {
        Term::Var(v) => {
            let n = map.len();
            RTerm::Var(*map.entry(*v).or_insert(n))
        }
        Term::Atom(a) => RTerm::Atom(*a),
        Term::Int(n) => RTerm::Int(*n),
        Term::Comp(f, args) => RTerm::Comp(*f, args.iter().map(|a| template(a, map)).collect()),
    }
}

fn term_to_string_r(m: &Machine<'_>, t: &RTerm) -> String {
    let t = m.deref(t);
    match &t {
        RTerm::Var(v) => format!("_G{v}"),
        RTerm::Atom(a) => a.name(),
        RTerm::Int(n) => n.to_string(),
        RTerm::Comp(f, args) => {
            if f.name() == "." && args.len() == 2 {
                let mut items = vec![];
                let mut cur = t.clone();
                loop {
                    match cur {
                        RTerm::Comp(ref g, ref xs) if g.name() == "." && xs.len() == 2 => {
                            items.push(term_to_string_r(m, &xs[0]));
                            cur = m.deref(&xs[1]);
                        }
                        RTerm::Atom(a) if a.name() == "[]" => {
                            return format!("[{}]", items.join(","));
                        }
                        other => {
                            return format!(
                                "[{}|{}]",
                                items.join(","),
                                term_to_string_r(m, &other)
                            );
                        }
                    }
                }
            }
            let inner: Vec<String> = args.iter().map(|a| term_to_string_r(m, a)).collect();
            format!("{}({})", f.name(), inner.join(","))
        }
    }
}

/// Depth-first resolution of `goal` against `program`, counting steps.
///
/// Each clause application costs the model's clause step, attributed to
/// the nearest enclosing cost center on the call stack (the entry
/// predicate when no centers are given). Built-ins add their model costs.
pub fn solve(
    program: &Program,
    goal: &Term,
    centers: &[CenterId],
    opts: SolveOptions,
) -> Result<RunResult, RunError> {
    let entry = goal
        .pred_id()
        .ok_or_else(|| RunError::Unsupported("goal must be an atom or compound".into()))?;
    if !program.has_pred(entry) {
        return Err(RunError::UnknownPredicate(entry.to_string()));
    }
    let mut centers = centers.to_vec();
    let entry_center = CenterId::Pred(entry);
    if !centers.contains(&entry_center) {
        centers.push(entry_center);
    }

    // Deep derivations need real stack room; solve on a dedicated thread.
    let program = program.clone();
    let goal = goal.clone();
    let handle = std::thread::Builder::new()
        .stack_size(256 * 1024 * 1024)
        .spawn(move || solve_inner(&program, &goal, &centers, opts))
        .expect("spawn interpreter thread");
    handle.join().expect("interpreter thread panicked")
}

fn solve_inner(
    program: &Program,
    goal: &Term,
    centers: &[CenterId],
    opts: SolveOptions,
) -> Result<RunResult, RunError> {
    let entry = goal.pred_id().expect("checked by solve");
    let mut m = Machine::new(program, centers, opts);
    let mut vars = HashMap::new();
    let rgoal = m.term_to_rterm(goal, &mut vars);
    let mut goal_vars: Vec<(Sym, usize)> = vars.into_iter().collect();
    goal_vars.sort();
    m.goal_vars = goal_vars;

    let ctx = CenterId::Pred(entry);
    let r = m.solve_call(&rgoal, ctx, 0, &mut |m: &mut Machine<'_>| {
        let ans: Vec<(Sym, String)> = m
            .goal_vars
            .clone()
            .iter()
            .map(|(s, id)| (*s, m.render(&RTerm::Var(*id))))
            .collect();
        m.answers.push(ans);
        Ok(())
    });
    match r {
        Ok(()) | Err(Stop::Violation) | Err(Stop::Done) => Ok(RunResult {
            answers: m.answers,
            steps: StepCount {
                total: m.steps,
                per_center: m.per_center,
            },
            violation: m.violation,
        }),
        Err(Stop::Budget) => Err(RunError::BudgetExceeded(m.budget)),
    }
}

/// Mean percentage deviation of a bound against measured step counts.
/// Inputs pair a goal with the size assignment for the bound's variables.
/// Runs where the measured cost is zero are excluded from the mean.
pub struct Deviation {
    pub mean_pct: Option<f64>,
    pub undefined: usize,
    pub samples: usize,
}

pub fn measure_deviation(
    program: &Program,
    bound: &CostExpr,
    inputs: &[(Term, BTreeMap<Sym, Rat>)],
    opts: SolveOptions,
) -> Result<Deviation, RunError> {
    use num_traits::{Signed, ToPrimitive, Zero};
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut undefined = 0usize;
    for (goal, env) in inputs {
        let run = solve(program, goal, &[], opts)?;
        let measured = Rat::from_integer(run.steps.total.into());
        if measured.is_zero() {
            undefined += 1;
            continue;
        }
        let expected = bound
            .eval(env)
            .map_err(|e| RunError::Unsupported(e.to_string()))?;
        let expected = match expected.as_rat() {
            Some(r) => r.clone(),
            None => {
                undefined += 1;
                continue;
            }
        };
        let dev = (&expected - &measured).abs() / &measured;
        sum += dev.to_f64().unwrap_or(f64::NAN) * 100.0;
        n += 1;
    }
    Ok(Deviation {
        mean_pct: if n > 0 { Some(sum / n as f64) } else { None },
        undefined,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_goal_term, parse_program, prelude};

    fn rev_program() -> Program {
        prelude::extend(&parse_program(crate::lang::tests::REV_SRC).unwrap())
    }

    fn run(p: &Program, goal: &str) -> RunResult {
        solve(
            p,
            &parse_goal_term(goal).unwrap(),
            &[],
            SolveOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn rev_of_three_costs_ten_steps() {
        // 0.5*L^2 + 1.5*L + 1 at L=3
        let p = rev_program();
        let r = run(&p, "rev([a,b,c],Y)");
        assert_eq!(r.steps.total, 10);
        assert_eq!(r.answers.len(), 1);
        assert_eq!(r.answers[0][0].1, "[c,b,a]");
        assert!(r.violation.is_none());
    }

    #[test]
    fn app_base_case_is_one_step() {
        let p = rev_program();
        let r = run(&p, "app([],x,Z)");
        assert_eq!(r.steps.total, 1);
        assert_eq!(r.answers.len(), 1);
        assert_eq!(r.answers[0][0].1, "[x]");
    }

    #[test]
    fn deterministic_across_runs() {
        let p = rev_program();
        let a = run(&p, "rev([a,b,c,d],Y)");
        let b = run(&p, "rev([a,b,c,d],Y)");
        assert_eq!(a.steps.total, b.steps.total);
        assert_eq!(a.answers, b.answers);
    }

    #[test]
    fn step_additivity_for_conjunctions() {
        // cost(p :- q, r) = 1 + cost(q) + cost(r)
        let src = "\
both(X,Y) :- one(X), two(Y).
one(a) :- aux(a).
aux(a).
two(b).
";
        let p = parse_program(src).unwrap();
        let q = run(&p, "one(X)");
        let r = run(&p, "two(Y)");
        let both = run(&p, "both(X,Y)");
        assert_eq!(both.steps.total, 1 + q.steps.total + r.steps.total);
    }

    #[test]
    fn budget_exceeded_is_an_error() {
        let src = "loop(X) :- loop(X).\n";
        let p = parse_program(src).unwrap();
        let r = solve(
            &p,
            &parse_goal_term("loop(a)").unwrap(),
            &[],
            SolveOptions {
                budget: 1000,
                keep_going: false,
            },
        );
        assert!(matches!(r, Err(RunError::BudgetExceeded(_))));
    }

    #[test]
    fn unknown_predicate_is_an_error() {
        let p = rev_program();
        let r = solve(
            &p,
            &parse_goal_term("nosuch(a)").unwrap(),
            &[],
            SolveOptions::default(),
        );
        assert!(matches!(r, Err(RunError::UnknownPredicate(_))));
    }

    #[test]
    fn guard_rejected_clauses_cost_nothing() {
        // first-argument-indexed dispatch: only the applied clause counts
        let src = "\
pick(1,Cs,Cs).
pick(0,Cs,[x|Cs]).
";
        let p = parse_program(src).unwrap();
        let r = run(&p, "pick(1,[a],Out)");
        assert_eq!(r.steps.total, 1);
        let r = run(&p, "pick(0,[a],Out)");
        assert_eq!(r.steps.total, 1);
    }

    #[test]
    fn arithmetic_guards_select_without_cost() {
        let src = "\
cls(X) :- X < 5, small(X).
cls(X) :- X >= 5, big(X).
small(_).
big(_).
";
        let p = parse_program(src).unwrap();
        // applied clause: 1 (cls) + 0 (comparison) + 1 (small/big)
        assert_eq!(run(&p, "cls(3)").steps.total, 2);
        assert_eq!(run(&p, "cls(9)").steps.total, 2);
    }

    #[test]
    fn all_answers_enumerated() {
        let src = "\
choice(a).
choice(b).
choice(c).
";
        let p = parse_program(src).unwrap();
        let r = run(&p, "choice(X)");
        assert_eq!(r.answers.len(), 3);
        let vals: Vec<&str> = r.answers.iter().map(|a| a[0].1.as_str()).collect();
        assert_eq!(vals, ["a", "b", "c"]);
        assert_eq!(r.steps.total, 3);
    }

    #[test]
    fn is_goal_costs_one_step_by_default() {
        let src = "inc(X,Y) :- Y is X + 1.\n";
        let p = parse_program(src).unwrap();
        let r = run(&p, "inc(4,Y)");
        assert_eq!(r.steps.total, 2); // clause + is
        assert_eq!(r.answers[0][0].1, "5");
    }

    #[test]
    fn cost_model_override_zeroes_is() {
        let src = ":- cost_model(is, 0).\ninc(X,Y) :- Y is X + 1.\n";
        let p = parse_program(src).unwrap();
        let r = run(&p, "inc(4,Y)");
        assert_eq!(r.steps.total, 1);
    }

    #[test]
    fn property_check_does_not_bind() {
        // reify_check(list(V), R) on an unbound V must give R = 0 and
        // leave V unbound.
        let src = "\
probe(V,R) :- reify_check(list(V),R).
";
        let p = prelude::extend(&parse_program(src).unwrap());
        let r = run(&p, "probe(V,R)");
        assert_eq!(r.answers.len(), 1);
        let binds: std::collections::HashMap<String, String> = r.answers[0]
            .iter()
            .map(|(s, v)| (s.to_string(), v.clone()))
            .collect();
        assert_eq!(binds["R"], "0");
        assert!(binds["V"].starts_with("_G"), "V stayed unbound");
        // and on a real list it succeeds
        let r = run(&p, "probe([a,b],R)");
        assert_eq!(
            r.answers[0]
                .iter()
                .find(|(s, _)| s.name() == "R")
                .unwrap()
                .1,
            "1"
        );
    }

    #[test]
    fn list_check_costs_length_plus_one() {
        let src = "probe(V,R) :- reify_check(list(V),R).\n";
        let p = prelude::extend(&parse_program(src).unwrap());
        // probe clause (1) + list([a,b,c]) = 4 clause steps
        let r = run(&p, "probe([a,b,c],R)");
        assert_eq!(r.steps.total, 5);
    }

    #[test]
    fn warn_if_false_raises_calls_violation_and_halts() {
        let src = "\
guarded(X) :- reify_check(list(X),R), warn_if_false(R,'calls'), work(X).
work(_) :- extra(1).
extra(_).
";
        let p = prelude::extend(&parse_program(src).unwrap());
        let r = run(&p, "guarded(notalist)");
        let v = r.violation.expect("violation raised");
        assert_eq!(v.label, ViolationLabel::Calls);
        assert!(r.answers.is_empty());
        // halted before work/1 ran: 1 (guarded) + 0 (failed list check
        // applies no clause: 'notalist' matches neither list clause head)
        assert_eq!(r.steps.total, 1);
    }

    #[test]
    fn keep_going_continues_after_violation() {
        let src = "\
guarded(X) :- reify_check(list(X),R), warn_if_false(R,'calls'), work(X).
work(_).
";
        let p = prelude::extend(&parse_program(src).unwrap());
        let r = solve(
            &p,
            &parse_goal_term("guarded(bad)").unwrap(),
            &[],
            SolveOptions {
                budget: 1000,
                keep_going: true,
            },
        )
        .unwrap();
        assert!(r.violation.is_some());
        assert!(r.answers.is_empty()); // the check still fails the goal
    }

    #[test]
    fn per_center_attribution_to_property_centers() {
        let src = "\
probe(V) :- reify_check(list(V),R), warn_if_false(R,'calls').
";
        let p = prelude::extend(&parse_program(src).unwrap());
        let list_c = CenterId::Pred(PredId::new("list", 1));
        let r = solve(
            &p,
            &parse_goal_term("probe([a,b])").unwrap(),
            &[list_c],
            SolveOptions::default(),
        )
        .unwrap();
        // probe clause -> entry center; list traversal (3 steps) -> list/1
        assert_eq!(r.steps.per_center[&list_c], 3);
        assert_eq!(
            r.steps.per_center[&CenterId::Pred(PredId::new("probe", 1))],
            1
        );
        assert_eq!(r.steps.total, 4);
    }

    #[test]
    fn steps_equal_sum_of_centers() {
        let p = rev_program();
        let r = solve(
            &p,
            &parse_goal_term("rev([a,b,c,d,e],Y)").unwrap(),
            &[CenterId::Pred(PredId::new("app", 3))],
            SolveOptions::default(),
        )
        .unwrap();
        let sum: u64 = r.steps.per_center.values().sum();
        assert_eq!(sum, r.steps.total);
    }
}
