//! Canonical polynomial-exponential form for cost functions.
//!
//! A `PolyExp` is a sum of terms `coeff * prod(v^k) * prod(base^v)` with
//! exact rational coefficients. This covers every closed form the solver
//! produces: multivariate polynomials plus single-variable exponentials
//! such as `3*2^d - 2`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::term::Sym;

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// One term: `coeff * prod(v^pow) * prod(base_v^v)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PTerm {
    pub coeff: Rat,
    /// Variable powers, e.g. {L: 2} for L^2. No zero powers stored.
    pub mono: BTreeMap<Sym, u32>,
    /// Exponential factors `base^v`, keyed by variable. Base != 1.
    pub exps: BTreeMap<Sym, Rat>,
}

impl PTerm {
    pub fn constant(c: Rat) -> PTerm {
        PTerm {
            coeff: c,
            mono: BTreeMap::new(),
            exps: BTreeMap::new(),
        }
    }

    #[allow(clippy::type_complexity)]
    fn key(&self) -> (Vec<(Sym, u32)>, Vec<(Sym, Rat)>) {
        (
            self.mono.iter().map(|(k, v)| (*k, *v)).collect(),
            self.exps.iter().map(|(k, v)| (*k, v.clone())).collect(),
        )
    }

    pub fn degree(&self) -> u32 {
        self.mono.values().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.mono.is_empty() && self.exps.is_empty()
    }

    fn mul(&self, other: &PTerm) -> PTerm {
        let mut mono = self.mono.clone();
        for (v, p) in &other.mono {
            *mono.entry(*v).or_insert(0) += p;
        }
        let mut exps = self.exps.clone();
        for (v, b) in &other.exps {
            let e = exps.entry(*v).or_insert_with(Rat::one);
            *e *= b;
            if e.is_one() {
                exps.remove(v);
            }
        }
        PTerm {
            coeff: &self.coeff * &other.coeff,
            mono,
            exps,
        }
    }
}

/// Sum of `PTerm`s in canonical order (merged keys, no zero coefficients).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PolyExp {
    pub terms: Vec<PTerm>,
}

impl PolyExp {
    pub fn zero() -> PolyExp {
        PolyExp { terms: vec![] }
    }

    pub fn constant(c: Rat) -> PolyExp {
        PolyExp {
            terms: vec![PTerm::constant(c)],
        }
        .normalized()
    }

    pub fn int(n: i64) -> PolyExp {
        PolyExp::constant(rat(n))
    }

    pub fn var(v: Sym) -> PolyExp {
        PolyExp {
            terms: vec![PTerm {
                coeff: Rat::one(),
                mono: BTreeMap::from([(v, 1)]),
                exps: BTreeMap::new(),
            }],
        }
    }

    /// `base^v`
    pub fn exp_var(base: Rat, v: Sym) -> PolyExp {
        if base.is_one() {
            return PolyExp::int(1);
        }
        PolyExp {
            terms: vec![PTerm {
                coeff: Rat::one(),
                mono: BTreeMap::new(),
                exps: BTreeMap::from([(v, base)]),
            }],
        }
    }

    pub fn normalized(mut self) -> PolyExp {
        self.terms.sort_by_key(|a| a.key());
        let mut out: Vec<PTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            match out.last_mut() {
                Some(last) if last.key() == t.key() => last.coeff += &t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| !t.coeff.is_zero());
        PolyExp { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 && self.terms[0].is_constant() {
            return Some(self.terms[0].coeff.clone());
        }
        None
    }

    pub fn vars(&self) -> Vec<Sym> {
        let mut vs: Vec<Sym> = vec![];
        for t in &self.terms {
            for v in t.mono.keys().chain(t.exps.keys()) {
                if !vs.contains(v) {
                    vs.push(*v);
                }
            }
        }
        vs
    }

    pub fn add(&self, other: &PolyExp) -> PolyExp {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        PolyExp { terms }.normalized()
    }

    pub fn sub(&self, other: &PolyExp) -> PolyExp {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> PolyExp {
        if c.is_zero() {
            return PolyExp::zero();
        }
        PolyExp {
            terms: self
                .terms
                .iter()
                .map(|t| PTerm {
                    coeff: &t.coeff * c,
                    mono: t.mono.clone(),
                    exps: t.exps.clone(),
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &PolyExp) -> PolyExp {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        PolyExp { terms }.normalized()
    }

    pub fn pow(&self, k: u32) -> PolyExp {
        let mut acc = PolyExp::int(1);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact evaluation at a natural-number assignment.
    /// Exponential factors require natural exponents.
    pub fn eval(&self, env: &BTreeMap<Sym, Rat>) -> Option<Rat> {
        let mut total = Rat::zero();
        for t in &self.terms {
            let mut val = t.coeff.clone();
            for (v, p) in &t.mono {
                let x = env.get(v)?;
                for _ in 0..*p {
                    val *= x;
                }
            }
            for (v, base) in &t.exps {
                let x = env.get(v)?;
                let n = x.to_integer().to_i64()?;
                if !(0..=1 << 20).contains(&n) || !x.is_integer() {
                    return None;
                }
                let num = base.numer().pow(n as u32);
                let den = base.denom().pow(n as u32);
                val *= Rat::new(num, den);
            }
            total += val;
        }
        Some(total)
    }

    pub fn eval_f64(&self, env: &BTreeMap<Sym, f64>) -> f64 {
        let mut total = 0.0;
        for t in &self.terms {
            let mut val = t.coeff.to_f64().unwrap_or(f64::NAN);
            for (v, p) in &t.mono {
                val *= env.get(v).copied().unwrap_or(0.0).powi(*p as i32);
            }
            for (v, base) in &t.exps {
                let b = base.to_f64().unwrap_or(f64::NAN);
                val *= b.powf(env.get(v).copied().unwrap_or(0.0));
            }
            total += val;
        }
        total
    }

    /// Substitute `v := repl`. Exponential factors on `v` only accept an
    /// affine replacement `w + c` (or a constant) with integer `c`;
    /// anything else returns None.
    pub fn subst(&self, v: Sym, repl: &PolyExp) -> Option<PolyExp> {
        let mut out = PolyExp::zero();
        for t in self.terms.iter() {
            let mut part = PolyExp {
                terms: vec![PTerm {
                    coeff: t.coeff.clone(),
                    mono: t
                        .mono
                        .iter()
                        .filter(|(k, _)| **k != v)
                        .map(|(k, p)| (*k, *p))
                        .collect(),
                    exps: t
                        .exps
                        .iter()
                        .filter(|(k, _)| **k != v)
                        .map(|(k, b)| (*k, b.clone()))
                        .collect(),
                }],
            };
            if let Some(p) = t.mono.get(&v) {
                part = part.mul(&repl.pow(*p));
            }
            if let Some(base) = t.exps.get(&v) {
                // base^(repl) with repl = w + c or constant c
                let (w, c) = affine_of(repl)?;
                let ci = c.to_integer().to_i64()?;
                if !c.is_integer() || ci.abs() > 1 << 16 {
                    return None;
                }
                let shift = if ci >= 0 {
                    Rat::new(base.numer().pow(ci as u32), base.denom().pow(ci as u32))
                } else {
                    Rat::new(
                        base.denom().pow((-ci) as u32),
                        base.numer().pow((-ci) as u32),
                    )
                };
                let factor = match w {
                    Some(w) => PolyExp::exp_var(base.clone(), w).scale(&shift),
                    None => PolyExp::constant(shift),
                };
                part = part.mul(&factor);
            }
            out = out.add(&part);
        }
        Some(out)
    }

    /// Largest terms under pointwise asymptotic dominance, coefficients
    /// dropped. Only positive-coefficient terms participate.
    pub fn skeleton(&self) -> PolyExp {
        let pos: Vec<&PTerm> = self
            .terms
            .iter()
            .filter(|t| t.coeff.is_positive())
            .collect();
        let mut keep: Vec<PTerm> = vec![];
        'outer: for t in &pos {
            for u in &pos {
                if !std::ptr::eq(*t, *u) && dominates(u, t) && !dominates(t, u) {
                    continue 'outer;
                }
            }
            let mut k = (*t).clone();
            k.coeff = Rat::one();
            if !keep.contains(&k) {
                keep.push(k);
            }
        }
        PolyExp { terms: keep }.normalized()
    }
}

/// `a` asymptotically dominates `b`: for every variable, `a`'s growth is
/// at least `b`'s (exponential base first, then power).
pub fn dominates(a: &PTerm, b: &PTerm) -> bool {
    let mut vars: Vec<Sym> = vec![];
    for v in a
        .mono
        .keys()
        .chain(a.exps.keys())
        .chain(b.mono.keys())
        .chain(b.exps.keys())
    {
        if !vars.contains(v) {
            vars.push(*v);
        }
    }
    let one = Rat::one();
    for v in vars {
        let ba = a.exps.get(&v).unwrap_or(&one);
        let bb = b.exps.get(&v).unwrap_or(&one);
        if ba > bb {
            continue;
        }
        if ba < bb {
            return false;
        }
        if a.mono.get(&v).unwrap_or(&0) < b.mono.get(&v).unwrap_or(&0) {
            return false;
        }
    }
    true
}

/// Decompose as `w + c` (single variable, coefficient 1) or constant.
fn affine_of(p: &PolyExp) -> Option<(Option<Sym>, Rat)> {
    let mut var: Option<Sym> = None;
    let mut c = Rat::zero();
    for t in &p.terms {
        if t.is_constant() {
            c += &t.coeff;
        } else if t.exps.is_empty()
            && t.mono.len() == 1
            && *t.mono.values().next().unwrap() == 1
            && t.coeff.is_one()
        {
            if var.is_some() {
                return None;
            }
            var = Some(*t.mono.keys().next().unwrap());
        } else {
            return None;
        }
    }
    Some((var, c))
}

/// Exact solver for small linear systems (used by closed-form summation).
#[allow(clippy::needless_range_loop)]
fn solve_linear(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
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

/// Closed form of `sum_{k=1}^{n} k^m` as a polynomial in `n`, built by
/// solving `S(n) - S(n-1) = n^m`, `S(0) = 0` with an undetermined
/// polynomial of degree m+1.
pub fn power_sum(m: u32, n: Sym) -> PolyExp {
    let deg = (m + 1) as usize;
    // S(n) = sum_{i=1}^{deg} c_i n^i  (no constant term; S(0)=0)
    // Condition: S(n) - S(n-1) = n^m for deg+... sample at n = 1..deg.
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for s in 1..=deg as i64 {
        let mut row = Vec::new();
        for i in 1..=deg as u32 {
            let cur = rat(s).pow(i as i32);
            let prev = rat(s - 1).pow(i as i32);
            row.push(cur - prev);
        }
        rows.push(row);
        rhs.push(rat(s).pow(m as i32));
    }
    let coeffs = solve_linear(rows, rhs).expect("power_sum system is nonsingular");
    let nv = PolyExp::var(n);
    let mut out = PolyExp::zero();
    for (i, c) in coeffs.iter().enumerate() {
        out = out.add(&nv.pow((i + 1) as u32).scale(c));
    }
    out
}

/// Closed form of `sum_{k=1}^{n} k^m b^k` (b != 1) as
/// `b^n * p(n) + const` with deg(p) = m, by undetermined coefficients.
pub fn exp_power_sum(m: u32, base: &Rat, n: Sym) -> PolyExp {
    let deg = m as usize;
    // S(n) = b^n p(n) + c with p(n) = sum_{i=0}^{m} a_i n^i.
    // S(n) - S(n-1) = n^m b^n  =>  p(n) - p(n-1)/b = n^m.
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for s in 1..=(deg + 1) as i64 {
        let mut row = Vec::new();
        for i in 0..=deg as u32 {
            let cur = rat(s).pow(i as i32);
            let prev = rat(s - 1).pow(i as i32);
            row.push(cur - prev / base);
        }
        rows.push(row);
        rhs.push(rat(s).pow(m as i32));
    }
    let coeffs = solve_linear(rows, rhs).expect("exp_power_sum system is nonsingular");
    let nv = PolyExp::var(n);
    let bexp = PolyExp::exp_var(base.clone(), n);
    let mut p = PolyExp::zero();
    for (i, c) in coeffs.iter().enumerate() {
        p = p.add(&nv.pow(i as u32).scale(c));
    }
    // c = -p(0)
    let c = -coeffs[0].clone();
    bexp.mul(&p).add(&PolyExp::constant(c))
}

/// Sum `body` over `k = 1..=n`, treating other variables as constants.
/// Exponentials on variables other than `k` pass through as factors.
pub fn sum_over(body: &PolyExp, k: Sym, n: Sym) -> PolyExp {
    let mut out = PolyExp::zero();
    for t in &body.terms {
        let kpow = t.mono.get(&k).copied().unwrap_or(0);
        let kbase = t.exps.get(&k).cloned();
        let mut rest = t.clone();
        rest.mono.remove(&k);
        rest.exps.remove(&k);
        let summed = match kbase {
            None => power_sum(kpow, n),
            Some(b) => exp_power_sum(kpow, &b, n),
        };
        out = out.add(&summed.mul(&PolyExp { terms: vec![rest] }));
    }
    out
}

/// Render a rational: integer, short decimal (0.5), or fraction (95/6).
pub fn rat_to_string(r: &Rat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let den = r.denom();
    // terminating decimal when den = 2^a * 5^b, keep it short
    let mut d = den.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut digits = 0u32;
    while (&d % &two).is_zero() {
        d /= &two;
        digits += 1;
    }
    let mut fives = 0u32;
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    digits = digits.max(fives);
    if d == BigInt::from(1) && digits <= 6 {
        let scale = BigInt::from(10).pow(digits);
        let scaled = r.numer() * &scale / den;
        let neg = scaled.is_negative();
        let mag = scaled.magnitude().to_string();
        let mag = format!("{:0>width$}", mag, width = (digits + 1) as usize);
        let split = mag.len() - digits as usize;
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        s.push_str(&mag[..split]);
        s.push('.');
        s.push_str(&mag[split..]);
        s
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn term_body_to_string(t: &PTerm) -> Vec<String> {
    let mut factors = vec![];
    for (v, b) in &t.exps {
        factors.push(format!("{}**{}", rat_to_string(b), v));
    }
    for (v, p) in &t.mono {
        if *p == 1 {
            factors.push(v.to_string());
        } else {
            factors.push(format!("{v}**{p}"));
        }
    }
    factors
}

impl fmt::Display for PolyExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest growth first for readability
        let mut terms: Vec<&PTerm> = self.terms.iter().collect();
        terms.sort_by(|a, b| {
            let ka = (
                a.exps.values().cloned().fold(Rat::one(), |x, y| x * y),
                a.degree(),
                a.key(),
            );
            let kb = (
                b.exps.values().cloned().fold(Rat::one(), |x, y| x * y),
                b.degree(),
                b.key(),
            );
            kb.cmp(&ka)
        });
        for (i, t) in terms.iter().enumerate() {
            let mut factors = term_body_to_string(t);
            let coeff = t.coeff.clone();
            let mag = coeff.abs();
            if i == 0 {
                if coeff.is_negative() {
                    write!(f, "-")?;
                }
            } else if coeff.is_negative() {
                write!(f, "-")?;
            } else {
                write!(f, "+")?;
            }
            if factors.is_empty() || !mag.is_one() {
                factors.insert(0, rat_to_string(&mag));
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}
