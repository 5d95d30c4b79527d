//! Symbolic cost expressions over size variables.
//!
//! `CostExpr` is the user-facing expression tree (parsed from and printed
//! to assertion syntax). Analysis works on the canonical [`PolyExp`] form
//! where possible; quotients and max stay symbolic.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{rat, rat_to_string, PolyExp, Rat};
use super::term::Sym;

#[derive(Clone, PartialEq, Debug)]
pub enum CostExpr {
    Const(Rat),
    Var(Sym),
    Add(Vec<CostExpr>),
    Mul(Vec<CostExpr>),
    /// Natural-number power.
    Pow(Box<CostExpr>, u32),
    /// `base ** e` with rational base > 0.
    Exp(Rat, Box<CostExpr>),
    Log2(Box<CostExpr>),
    Div(Box<CostExpr>, Box<CostExpr>),
    Max(Box<CostExpr>, Box<CostExpr>),
    Infinity,
}

/// Result of exact evaluation.
#[derive(Clone, PartialEq, Debug)]
pub enum CostValue {
    Finite(Rat),
    Infinity,
}

impl CostValue {
    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            CostValue::Finite(r) => Some(r),
            CostValue::Infinity => None,
        }
    }
}

#[derive(Clone, PartialEq, Debug, thiserror::Error)]
pub enum EvalError {
    #[error("unbound size variable {0}")]
    Unbound(String),
    #[error("division by zero")]
    DivZero,
    #[error("non-integer exponent")]
    NonIntegerExponent,
    #[error("log2 of a non-power-of-two value")]
    InexactLog,
}

impl CostExpr {
    pub fn int(n: i64) -> CostExpr {
        CostExpr::Const(rat(n))
    }

    pub fn var(name: &str) -> CostExpr {
        CostExpr::Var(Sym::new(name))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, CostExpr::Infinity)
    }

    pub fn vars(&self) -> Vec<Sym> {
        fn walk(e: &CostExpr, out: &mut Vec<Sym>) {
            match e {
                CostExpr::Var(v) => {
                    if !out.contains(v) {
                        out.push(*v);
                    }
                }
                CostExpr::Add(xs) | CostExpr::Mul(xs) => xs.iter().for_each(|x| walk(x, out)),
                CostExpr::Pow(x, _) | CostExpr::Exp(_, x) | CostExpr::Log2(x) => walk(x, out),
                CostExpr::Div(a, b) | CostExpr::Max(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        let mut out = vec![];
        walk(self, &mut out);
        out
    }

    /// Exact evaluation under a natural-number assignment. Infinity
    /// propagates through every operation.
    pub fn eval(&self, env: &BTreeMap<Sym, Rat>) -> Result<CostValue, EvalError> {
        use CostValue::*;
        Ok(match self {
            CostExpr::Const(c) => Finite(c.clone()),
            CostExpr::Var(v) => Finite(
                env.get(v)
                    .ok_or_else(|| EvalError::Unbound(v.to_string()))?
                    .clone(),
            ),
            CostExpr::Add(xs) => {
                let mut acc = Rat::zero();
                for x in xs {
                    match x.eval(env)? {
                        Finite(r) => acc += r,
                        Infinity => return Ok(Infinity),
                    }
                }
                Finite(acc)
            }
            CostExpr::Mul(xs) => {
                let mut acc = Rat::one();
                for x in xs {
                    match x.eval(env)? {
                        Finite(r) => acc *= r,
                        Infinity => return Ok(Infinity),
                    }
                }
                Finite(acc)
            }
            CostExpr::Pow(x, k) => match x.eval(env)? {
                Finite(r) => Finite(r.pow(*k as i32)),
                Infinity => Infinity,
            },
            CostExpr::Exp(base, e) => match e.eval(env)? {
                Finite(r) => {
                    if !r.is_integer() {
                        return Err(EvalError::NonIntegerExponent);
                    }
                    let n = r
                        .to_integer()
                        .to_i64()
                        .ok_or(EvalError::NonIntegerExponent)?;
                    if n.abs() > 1 << 20 {
                        return Err(EvalError::NonIntegerExponent);
                    }
                    let p = if n >= 0 {
                        Rat::new(base.numer().pow(n as u32), base.denom().pow(n as u32))
                    } else {
                        Rat::new(base.denom().pow((-n) as u32), base.numer().pow((-n) as u32))
                    };
                    Finite(p)
                }
                Infinity => Infinity,
            },
            CostExpr::Log2(x) => match x.eval(env)? {
                Finite(r) => {
                    if !r.is_integer() || !r.is_positive() {
                        return Err(EvalError::InexactLog);
                    }
                    let mut n = r.to_integer();
                    let mut k = 0i64;
                    let two = num_bigint::BigInt::from(2);
                    while (&n % &two).is_zero() {
                        n /= &two;
                        k += 1;
                    }
                    if !n.is_one() {
                        return Err(EvalError::InexactLog);
                    }
                    Finite(rat(k))
                }
                Infinity => Infinity,
            },
            CostExpr::Div(a, b) => match (a.eval(env)?, b.eval(env)?) {
                (_, Infinity) => Finite(Rat::zero()),
                (Infinity, _) => Infinity,
                (Finite(x), Finite(y)) => {
                    if y.is_zero() {
                        return Err(EvalError::DivZero);
                    }
                    Finite(x / y)
                }
            },
            CostExpr::Max(a, b) => match (a.eval(env)?, b.eval(env)?) {
                (Infinity, _) | (_, Infinity) => Infinity,
                (Finite(x), Finite(y)) => Finite(if x >= y { x } else { y }),
            },
            CostExpr::Infinity => Infinity,
        })
    }

    pub fn eval_f64(&self, env: &BTreeMap<Sym, f64>) -> f64 {
        match self {
            CostExpr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
            CostExpr::Var(v) => env.get(v).copied().unwrap_or(f64::NAN),
            CostExpr::Add(xs) => xs.iter().map(|x| x.eval_f64(env)).sum(),
            CostExpr::Mul(xs) => xs.iter().map(|x| x.eval_f64(env)).product(),
            CostExpr::Pow(x, k) => x.eval_f64(env).powi(*k as i32),
            CostExpr::Exp(b, e) => b.to_f64().unwrap_or(f64::NAN).powf(e.eval_f64(env)),
            CostExpr::Log2(x) => x.eval_f64(env).log2(),
            CostExpr::Div(a, b) => a.eval_f64(env) / b.eval_f64(env),
            CostExpr::Max(a, b) => a.eval_f64(env).max(b.eval_f64(env)),
            CostExpr::Infinity => f64::INFINITY,
        }
    }

    /// Convert to canonical polynomial-exponential form, when representable.
    pub fn to_polyexp(&self) -> Option<PolyExp> {
        match self {
            CostExpr::Const(c) => Some(PolyExp::constant(c.clone())),
            CostExpr::Var(v) => Some(PolyExp::var(*v)),
            CostExpr::Add(xs) => {
                let mut acc = PolyExp::zero();
                for x in xs {
                    acc = acc.add(&x.to_polyexp()?);
                }
                Some(acc)
            }
            CostExpr::Mul(xs) => {
                let mut acc = PolyExp::int(1);
                for x in xs {
                    acc = acc.mul(&x.to_polyexp()?);
                }
                Some(acc)
            }
            CostExpr::Pow(x, k) => Some(x.to_polyexp()?.pow(*k)),
            CostExpr::Exp(base, e) => {
                // base^(w + c) with integer c
                let inner = e.to_polyexp()?;
                PolyExp::exp_var(base.clone(), Sym::new("#t")).subst(Sym::new("#t"), &inner)
            }
            CostExpr::Div(a, b) => {
                let num = a.to_polyexp()?;
                let den = b.to_polyexp()?;
                let c = den.as_constant()?;
                if c.is_zero() {
                    return None;
                }
                Some(num.scale(&(Rat::one() / c)))
            }
            _ => None,
        }
    }

    /// Inverse of `to_polyexp`; always succeeds. Terms are ordered by
    /// decreasing growth so `0.5*L**2+1.5*L+1` reads naturally.
    pub fn from_polyexp(p: &PolyExp) -> CostExpr {
        if p.terms.is_empty() {
            return CostExpr::int(0);
        }
        let mut ordered: Vec<&super::poly::PTerm> = p.terms.iter().collect();
        ordered.sort_by(|a, b| {
            let ka = (
                a.exps.values().cloned().fold(Rat::one(), |x, y| x * y),
                a.degree(),
                a.mono.iter().map(|(k, v)| (*k, *v)).collect::<Vec<_>>(),
            );
            let kb = (
                b.exps.values().cloned().fold(Rat::one(), |x, y| x * y),
                b.degree(),
                b.mono.iter().map(|(k, v)| (*k, *v)).collect::<Vec<_>>(),
            );
            kb.cmp(&ka)
        });
        let mut parts: Vec<CostExpr> = vec![];
        for t in ordered {
            let mut factors: Vec<CostExpr> = vec![];
            if !t.coeff.is_one() || (t.mono.is_empty() && t.exps.is_empty()) {
                factors.push(CostExpr::Const(t.coeff.clone()));
            }
            for (v, b) in &t.exps {
                factors.push(CostExpr::Exp(b.clone(), Box::new(CostExpr::Var(*v))));
            }
            for (v, pw) in &t.mono {
                if *pw == 1 {
                    factors.push(CostExpr::Var(*v));
                } else {
                    factors.push(CostExpr::Pow(Box::new(CostExpr::Var(*v)), *pw));
                }
            }
            parts.push(if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                CostExpr::Mul(factors)
            });
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            CostExpr::Add(parts)
        }
    }

    /// Canonicalize: polynomial-exponential parts are expanded and merged;
    /// quotients keep canonical numerator/denominator. Idempotent.
    pub fn canonical(&self) -> CostExpr {
        if let Some(p) = self.to_polyexp() {
            return CostExpr::from_polyexp(&p);
        }
        match self {
            CostExpr::Add(xs) => {
                let mut poly = PolyExp::zero();
                let mut rest: Vec<CostExpr> = vec![];
                let mut queue: Vec<CostExpr> = xs.iter().map(|x| x.canonical()).collect();
                queue.reverse();
                while let Some(c) = queue.pop() {
                    if let CostExpr::Add(inner) = c {
                        // flatten nested sums
                        for x in inner.into_iter().rev() {
                            queue.push(x);
                        }
                        continue;
                    }
                    if let Some(p) = c.to_polyexp() {
                        poly = poly.add(&p);
                    } else {
                        rest.push(c);
                    }
                }
                let mut parts = vec![];
                if !poly.is_zero() {
                    parts.push(CostExpr::from_polyexp(&poly));
                }
                parts.extend(rest);
                match parts.len() {
                    0 => CostExpr::int(0),
                    1 => parts.pop().unwrap(),
                    _ => CostExpr::Add(parts),
                }
            }
            CostExpr::Div(a, b) => CostExpr::Div(Box::new(a.canonical()), Box::new(b.canonical())),
            CostExpr::Max(a, b) => CostExpr::Max(Box::new(a.canonical()), Box::new(b.canonical())),
            other => other.clone(),
        }
    }
}

fn needs_parens_in_mul(e: &CostExpr) -> bool {
    matches!(e, CostExpr::Add(_) | CostExpr::Div(..))
}

impl fmt::Display for CostExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostExpr::Const(c) => {
                if c.is_negative() {
                    write!(f, "({})", rat_to_string(c))
                } else {
                    write!(f, "{}", rat_to_string(c))
                }
            }
            CostExpr::Var(v) => write!(f, "{v}"),
            CostExpr::Add(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        // fold leading minus of a term into the separator
                        if let Some(s) = negative_term_string(x) {
                            write!(f, "-{s}")?;
                            continue;
                        }
                        write!(f, "+")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            CostExpr::Mul(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    if needs_parens_in_mul(x) {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
            CostExpr::Pow(x, k) => {
                if matches!(**x, CostExpr::Var(_) | CostExpr::Const(_)) {
                    write!(f, "{x}**{k}")
                } else {
                    write!(f, "({x})**{k}")
                }
            }
            CostExpr::Exp(b, e) => {
                if matches!(**e, CostExpr::Var(_) | CostExpr::Const(_)) {
                    write!(f, "{}**{e}", rat_to_string(b))
                } else {
                    write!(f, "{}**({e})", rat_to_string(b))
                }
            }
            CostExpr::Log2(x) => write!(f, "log2({x})"),
            CostExpr::Div(a, b) => {
                if matches!(**a, CostExpr::Add(_)) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, "/")?;
                if matches!(**b, CostExpr::Var(_) | CostExpr::Const(_)) {
                    write!(f, "{b}")
                } else {
                    write!(f, "({b})")
                }
            }
            CostExpr::Max(a, b) => write!(f, "max({a},{b})"),
            CostExpr::Infinity => write!(f, "inf"),
        }
    }
}

/// If `e` prints with a single leading negative coefficient, return its
/// magnitude rendering so `a + (-b)` prints as `a-b`.
fn negative_term_string(e: &CostExpr) -> Option<String> {
    match e {
        CostExpr::Const(c) if c.is_negative() => Some(rat_to_string(&c.abs())),
        CostExpr::Mul(xs) => match xs.first() {
            Some(CostExpr::Const(c)) if c.is_negative() => {
                let mut head = vec![CostExpr::Const(c.abs())];
                head.extend(xs.iter().skip(1).cloned());
                if c.abs().is_one() && xs.len() > 1 {
                    head.remove(0);
                }
                let m = if head.len() == 1 {
                    head.pop().unwrap()
                } else {
                    CostExpr::Mul(head)
                };
                Some(format!("{m}"))
            }
            _ => None,
        },
        _ => None,
    }
}
