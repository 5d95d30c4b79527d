//! Closed-form solving of the recurrence classes the analysis produces.
//!
//! Supported: `C(n) = C(n-1) + q(n)` with polynomial-exponential `q`
//! (solved by exact symbolic summation), `C(n) = a*C(n-1) + q(n)` with
//! `a >= 2` and polynomial `q` (exponential plus a particular solution by
//! undetermined coefficients), and non-recursive combinations. Anything
//! else is approximated by dominance or reported unsolved.

use num_traits::Zero;

use crate::lang::poly::{rat, sum_over, PolyExp, Rat};
use crate::lang::Sym;

/// Guard on the primary parameter.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Guard {
    Exactly(u32),
    AtLeast(u32),
}

/// One recurrence equation: under `guard`, the value is
/// `add + self_calls * C(primary - 1)`.
#[derive(Clone, Debug)]
pub struct Equation {
    pub guard: Guard,
    pub add: PolyExp,
    pub self_calls: u32,
    /// For lower bounds: the recursive sizes are not known to decrease by
    /// exactly one, so the recursion may bottom out immediately; treat
    /// each self call as costing only the base value.
    pub loose_lower: bool,
}

#[derive(Clone, Debug)]
pub struct Recurrence {
    pub primary: Sym,
    pub equations: Vec<Equation>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Upper,
    Lower,
}

/// Pointwise comparison by sampling each variable over a small grid.
/// Returns true when `a(x) >= b(x)` on every sample point; `floor`
/// restricts the sampled values of `floor_var`.
pub fn sampled_ge(a: &PolyExp, b: &PolyExp) -> bool {
    sampled_ge_from(a, b, None)
}

pub fn sampled_ge_from(a: &PolyExp, b: &PolyExp, floor: Option<(Sym, u32)>) -> bool {
    let mut vars = a.vars();
    for v in b.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let diff = a.sub(b);
    sample_envs(&vars, floor)
        .into_iter()
        .all(|env| match diff.eval(&env) {
            Some(v) => v >= Rat::zero(),
            None => false,
        })
}

fn sample_envs(
    vars: &[Sym],
    floor: Option<(Sym, u32)>,
) -> Vec<std::collections::BTreeMap<Sym, Rat>> {
    let points: Vec<i64> = vec![0, 1, 3, 8, 17];
    let mut envs = vec![std::collections::BTreeMap::new()];
    for v in vars {
        let offset = match floor {
            Some((fv, at)) if fv == *v => at as i64,
            _ => 0,
        };
        let mut next = vec![];
        for env in &envs {
            for p in &points {
                let mut e = env.clone();
                e.insert(*v, rat(*p + offset));
                next.push(e);
            }
        }
        envs = next;
    }
    envs
}

/// Pick the candidate that dominates all others on samples (upper mode)
/// or is dominated by all others (lower mode). None when incomparable.
pub fn select_dominant(candidates: &[PolyExp], mode: Mode) -> Option<PolyExp> {
    select_dominant_from(candidates, mode, None)
}

pub fn select_dominant_from(
    candidates: &[PolyExp],
    mode: Mode,
    floor: Option<(Sym, u32)>,
) -> Option<PolyExp> {
    if candidates.is_empty() {
        return None;
    }
    'outer: for c in candidates {
        for other in candidates {
            let ok = match mode {
                Mode::Upper => sampled_ge_from(c, other, floor),
                Mode::Lower => sampled_ge_from(other, c, floor),
            };
            if !ok {
                continue 'outer;
            }
        }
        return Some(c.clone());
    }
    None
}

/// Substitute the primary parameter with a constant.
fn at_point(p: &PolyExp, primary: Sym, k: u32) -> Option<PolyExp> {
    p.subst(primary, &PolyExp::int(k as i64))
}

/// Particular solution of `P(n) - a*P(n-1) = q(n)` with `q` polynomial in
/// the primary (other variables as symbolic coefficients is not
/// supported here; `q` must be univariate in `primary` plus constants).
fn exp_particular(q: &PolyExp, a: &Rat, primary: Sym) -> Option<PolyExp> {
    // degree of q in primary; reject exponential factors on primary
    let mut deg = 0u32;
    for t in &q.terms {
        if t.exps.contains_key(&primary) {
            return None;
        }
        deg = deg.max(t.mono.get(&primary).copied().unwrap_or(0));
    }
    let m = deg as usize;
    // unknowns c_0..c_m: P(n) = sum c_i n^i; equations at n = 1..=m+1
    let mut rows: Vec<Vec<Rat>> = vec![];
    let mut rhs: Vec<Rat> = vec![];
    for s in 1..=(m + 1) as i64 {
        let mut row = vec![];
        for i in 0..=m as u32 {
            let cur = rat(s).pow(i as i32);
            let prev = rat(s - 1).pow(i as i32);
            row.push(cur - prev * a);
        }
        rows.push(row);
        let env_q = at_point(q, primary, s as u32)?;
        // q may still contain other symbolic variables; the linear solve
        // needs rational entries, so require constants here
        rhs.push(env_q.as_constant()?);
    }
    let coeffs = gauss(rows, rhs)?;
    let nv = PolyExp::var(primary);
    let mut p = PolyExp::zero();
    for (i, c) in coeffs.iter().enumerate() {
        p = p.add(&nv.pow(i as u32).scale(c));
    }
    Some(p)
}

#[allow(clippy::needless_range_loop)]
fn gauss(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &p;
                for c in 0..n {
                    let v = &a[col][c] * &f;
                    a[r][c] -= v;
                }
                let v = &b[col] * &f;
                b[r] -= v;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Solve a recurrence to a closed form, or None when out of class.
pub fn solve(rec: &Recurrence, mode: Mode) -> Option<PolyExp> {
    let primary = rec.primary;
    let steps: Vec<&Equation> = rec.equations.iter().filter(|e| e.self_calls > 0).collect();
    let bases: Vec<&Equation> = rec
        .equations
        .iter()
        .filter(|e| e.self_calls == 0 && matches!(e.guard, Guard::Exactly(_)))
        .collect();
    let anytime: Vec<&Equation> = rec
        .equations
        .iter()
        .filter(|e| e.self_calls == 0 && matches!(e.guard, Guard::AtLeast(_)))
        .collect();

    if steps.is_empty() {
        // non-recursive: dominant combination of clause values
        let candidates: Vec<PolyExp> = rec.equations.iter().map(|e| e.add.clone()).collect();
        return select_dominant(&candidates, mode);
    }

    // one recursion shape: pick the dominant step when several
    let step = if steps.len() == 1 {
        steps[0].clone()
    } else {
        let adds: Vec<PolyExp> = steps.iter().map(|e| e.add.clone()).collect();
        let chosen = select_dominant(&adds, mode)?;
        let e = steps
            .iter()
            .find(|e| e.add == chosen)
            .expect("chosen from the set");
        if steps.iter().any(|o| o.self_calls != e.self_calls) {
            return None;
        }
        (*e).clone()
    };
    let step_from = match step.guard {
        Guard::AtLeast(k) => k,
        Guard::Exactly(_) => return None,
    };
    if step_from == 0 {
        return None; // would never reach a base case
    }
    let base_at = step_from - 1;
    let base_val: PolyExp = {
        // base values hold at the base point: pin the primary there
        let matching: Vec<PolyExp> = bases
            .iter()
            .filter(|e| matches!(e.guard, Guard::Exactly(k) if k == base_at))
            .filter_map(|e| at_point(&e.add, primary, base_at))
            .collect();
        if matching.is_empty() {
            // calls below the guard fail immediately and cost nothing
            PolyExp::zero()
        } else {
            select_dominant(&matching, mode)?
        }
    };

    let a = step.self_calls;
    let solution = if mode == Mode::Lower && step.loose_lower {
        // the recursion may bottom out at once: each self call is worth
        // at least the base value; below the guard only the base applies
        let cand = step.add.clone().add(&base_val.scale(&rat(a as i64)));
        select_dominant(&[cand, base_val.clone()], Mode::Lower)?
    } else if a == 1 {
        // C(n) = C(n-1) + q(n), C(base_at) = b:
        // C(n) = b + sum_{k=1..n} q(k) - sum_{k=1..base_at} q(k)
        let total = sum_over(&step.add, primary, primary);
        let below = at_point(&total, primary, base_at)?;
        base_val.add(&total).sub(&below)
    } else {
        match mode {
            Mode::Upper => {
                // C(n) = a*C(n-1) + q(n)
                let a_rat = rat(a as i64);
                let p = exp_particular(&step.add, &a_rat, primary)?;
                // A = (b - P(base_at)) / a^base_at
                let p_at = at_point(&p, primary, base_at)?.as_constant()?;
                let b = base_val.as_constant()?;
                let scale =
                    (b - p_at) / Rat::new(a_rat.numer().pow(base_at), a_rat.denom().pow(base_at));
                PolyExp::exp_var(a_rat, primary).scale(&scale).add(&p)
            }
            Mode::Lower => {
                // descend one branch; the other a-1 land at the base
                let extra = base_val.scale(&rat((a - 1) as i64));
                let add = step.add.add(&extra);
                let total = sum_over(&add, primary, primary);
                let below = at_point(&total, primary, base_at)?;
                base_val.add(&total).sub(&below)
            }
        }
    };

    // fold in clauses applicable at arbitrary sizes
    if anytime.is_empty() {
        return Some(solution);
    }
    match mode {
        Mode::Lower => {
            // below the recursion guard only the base applies, so the
            // reported lower must also sit under the base value
            let mut candidates: Vec<PolyExp> = vec![solution, base_val];
            candidates.extend(anytime.iter().map(|e| e.add.clone()));
            select_dominant_from(&candidates, mode, None)
        }
        Mode::Upper => {
            let mut candidates: Vec<PolyExp> = vec![solution.clone()];
            candidates.extend(anytime.iter().map(|e| e.add.clone()));
            let winner =
                select_dominant_from(&candidates, Mode::Upper, Some((primary, step_from)))?;
            if winner == solution {
                return Some(winner);
            }
            // an anytime winner must also cover the base point
            let at_base = at_point(&winner, primary, base_at)?;
            if sampled_ge(&at_base, &base_val) {
                Some(winner)
            } else {
                None
            }
        }
    }
}

/// Tarjan strongly connected components, emitted in reverse topological
/// order (callees before callers).
pub fn sccs<N: Copy + Eq + std::hash::Hash>(
    nodes: &[N],
    edges: impl Fn(N) -> Vec<N>,
) -> Vec<Vec<N>> {
    struct State<N> {
        index: std::collections::HashMap<N, usize>,
        low: std::collections::HashMap<N, usize>,
        on_stack: std::collections::HashSet<N>,
        stack: Vec<N>,
        counter: usize,
        out: Vec<Vec<N>>,
    }
    fn strongconnect<N: Copy + Eq + std::hash::Hash>(
        v: N,
        st: &mut State<N>,
        edges: &impl Fn(N) -> Vec<N>,
    ) {
        st.index.insert(v, st.counter);
        st.low.insert(v, st.counter);
        st.counter += 1;
        st.stack.push(v);
        st.on_stack.insert(v);
        for w in edges(v) {
            if !st.index.contains_key(&w) {
                strongconnect(w, st, edges);
                let lw = st.low[&w];
                let lv = st.low[&v];
                st.low.insert(v, lv.min(lw));
            } else if st.on_stack.contains(&w) {
                let iw = st.index[&w];
                let lv = st.low[&v];
                st.low.insert(v, lv.min(iw));
            }
        }
        if st.low[&v] == st.index[&v] {
            let mut comp = vec![];
            loop {
                let w = st.stack.pop().unwrap();
                st.on_stack.remove(&w);
                comp.push(w);
                if w == v {
                    break;
                }
            }
            st.out.push(comp);
        }
    }
    let mut st = State {
        index: Default::default(),
        low: Default::default(),
        on_stack: Default::default(),
        stack: vec![],
        counter: 0,
        out: vec![],
    };
    for &n in nodes {
        if !st.index.contains_key(&n) {
            strongconnect(n, &mut st, &edges);
        }
    }
    st.out
}
