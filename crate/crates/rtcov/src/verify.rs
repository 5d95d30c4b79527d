//! Verification of admissible-overhead specifications against inferred
//! bounds: function comparison with integer crossing isolation,
//! checked/false/check verdicts, and assertion splitting by size
//! intervals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cost::{asymptotic_order, Bound, ComplexityOrder, RatioBand};
use crate::error::VerifyError;
use crate::lang::assertion::{
    AssertionKind, AssertionStatus, CostKind, CostQualifier, OrderIdent, OrderSpec, PredAssertion,
    PropFormula,
};
use crate::lang::poly::{rat, PolyExp, Rat};
use crate::lang::{CostExpr, PredId, Sym, Term};

/// An admissible-overhead band: both sides optional (0 and infinity when
/// omitted), or a symbolic order for `so_ub`/`o_ub` specifications.
#[derive(Clone, Debug)]
pub struct AdmissibleSpec {
    /// None = universal target.
    pub target: Option<PredId>,
    pub band: SpecBand,
    pub kind: CostKind,
    /// The source assertion, for reporting and splitting.
    pub origin: PredAssertion,
}

#[derive(Clone, Debug)]
pub enum SpecBand {
    /// [lower, upper] cost functions; omitted sides are 0 / infinity.
    Functions {
        lower: Option<CostExpr>,
        upper: Option<CostExpr>,
    },
    /// Upper bound at the complexity-order level.
    Order(ComplexityOrder),
}

impl AdmissibleSpec {
    /// Extract specs from an assertion's cost properties.
    pub fn from_assertion(a: &PredAssertion) -> Vec<AdmissibleSpec> {
        let mut out = vec![];
        for spec in &a.comp {
            if spec.resource.name() != "steps" {
                continue;
            }
            let band = match &spec.qualifier {
                CostQualifier::Exact(f) => SpecBand::Functions {
                    lower: Some(f.clone()),
                    upper: Some(f.clone()),
                },
                CostQualifier::Ub(f) => SpecBand::Functions {
                    lower: None,
                    upper: Some(f.clone()),
                },
                CostQualifier::Lb(f) => SpecBand::Functions {
                    lower: Some(f.clone()),
                    upper: None,
                },
                CostQualifier::Band(l, u) => SpecBand::Functions {
                    lower: Some(l.clone()),
                    upper: Some(u.clone()),
                },
                CostQualifier::OUb(f) => SpecBand::Order(asymptotic_order(f)),
                CostQualifier::SoUb(OrderSpec::Expr(f)) => SpecBand::Order(asymptotic_order(f)),
                CostQualifier::SoUb(OrderSpec::Ident(id)) => SpecBand::Order(match id {
                    OrderIdent::Constant => ComplexityOrder::constant(),
                    OrderIdent::Logarithmic => ComplexityOrder {
                        exp_base: Rat::one(),
                        degree: 0,
                        log_power: 1,
                    },
                    OrderIdent::Linear => ComplexityOrder::polynomial(1),
                    OrderIdent::Quadratic => ComplexityOrder::polynomial(2),
                    OrderIdent::Cubic => ComplexityOrder::polynomial(3),
                    OrderIdent::Exponential => ComplexityOrder {
                        exp_base: rat(2),
                        degree: 0,
                        log_power: 0,
                    },
                }),
            };
            out.push(AdmissibleSpec {
                target: a.head_pred(),
                band,
                kind: spec.kind,
                origin: a.clone(),
            });
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Checked,
    False,
    Check,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Checked => "checked",
            Verdict::False => "false",
            Verdict::Check => "check",
        }
    }

    fn status(self) -> AssertionStatus {
        match self {
            Verdict::Checked => AssertionStatus::Checked,
            Verdict::False => AssertionStatus::False,
            Verdict::Check => AssertionStatus::Check,
        }
    }
}

/// Inclusive integer interval; `hi == None` means unbounded above.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Interval {
    pub lo: u64,
    pub hi: Option<u64>,
}

impl Interval {
    pub fn all() -> Interval {
        Interval { lo: 0, hi: None }
    }
}

/// Verification outcome: disjoint verdict pieces covering all sizes >= 0.
#[derive(Clone, Debug)]
pub struct VerificationOutcome {
    /// The size variable the intervals constrain (single-variable case);
    /// None when the verdict is uniform over all sizes.
    pub split_var: Option<Sym>,
    pub pieces: Vec<(Interval, Verdict)>,
    pub origin: PredAssertion,
}

impl VerificationOutcome {
    pub fn uniform(verdict: Verdict, origin: PredAssertion) -> VerificationOutcome {
        VerificationOutcome {
            split_var: None,
            pieces: vec![(Interval::all(), verdict)],
            origin,
        }
    }

    pub fn overall(&self) -> Verdict {
        if self.pieces.iter().all(|(_, v)| *v == Verdict::Checked) {
            Verdict::Checked
        } else if self.pieces.iter().any(|(_, v)| *v == Verdict::False) {
            Verdict::False
        } else {
            Verdict::Check
        }
    }
}

/// Result of comparing two cost functions pointwise over naturals.
#[derive(Clone, PartialEq, Debug)]
pub enum CompareResult {
    /// f(x) <= g(x) for every assignment.
    AlwaysLe,
    /// f(x) > g(x) for every assignment.
    AlwaysGt,
    /// Single-variable comparison with sign changes at integer points:
    /// maximal intervals where f <= g holds or fails, in order.
    Crossings(Sym, Vec<(Interval, bool)>),
    /// Could not be decided.
    Unknown,
}

const SCAN_LIMIT: u64 = 1 << 20;

fn poly_eval_at(p: &PolyExp, v: Sym, x: u64) -> Option<Rat> {
    let env = BTreeMap::from([(v, rat(x as i64))]);
    p.eval(&env)
}

/// Cauchy-style bound on the largest real root of a univariate
/// polynomial: 1 + max |a_i| / |a_lead|.
fn root_bound(p: &PolyExp, v: Sym) -> u64 {
    let mut lead_deg = 0u32;
    for t in &p.terms {
        lead_deg = lead_deg.max(t.mono.get(&v).copied().unwrap_or(0));
    }
    let mut lead = Rat::zero();
    let mut maxabs = Rat::zero();
    for t in &p.terms {
        let d = t.mono.get(&v).copied().unwrap_or(0);
        if d == lead_deg {
            lead += t.coeff.clone();
        } else if t.coeff.abs() > maxabs {
            maxabs = t.coeff.abs();
        }
    }
    if lead.is_zero() {
        return 4;
    }
    let b = (maxabs / lead.abs()).to_f64().unwrap_or(1e6).abs();
    (b.ceil() as u64).saturating_add(2)
}

/// Compare `f <= g` where both convert to polynomial-exponential form.
/// Single-variable polynomial differences get exact integer crossing
/// points; anything else is decided asymptotically plus sampled
/// falsification, with Unknown as the honest fallback.
pub fn compare_functions(f: &CostExpr, g: &CostExpr) -> CompareResult {
    if f == g {
        return CompareResult::AlwaysLe;
    }
    let (Some(fp), Some(gp)) = (f.to_polyexp(), g.to_polyexp()) else {
        return compare_by_order(f, g);
    };
    let diff = fp.sub(&gp); // f - g
    if diff.is_zero() {
        return CompareResult::AlwaysLe;
    }
    let vars = diff.vars();
    if vars.is_empty() {
        let c = diff.as_constant().unwrap();
        return if c <= Rat::zero() {
            CompareResult::AlwaysLe
        } else {
            CompareResult::AlwaysGt
        };
    }
    if vars.len() > 1 || diff.terms.iter().any(|t| !t.exps.is_empty()) {
        return compare_by_order(f, g);
    }
    let v = vars[0];
    // exact sign scan with a root bound for the tail
    let bound = root_bound(&diff, v).min(SCAN_LIMIT);
    let mut pieces: Vec<(Interval, bool)> = vec![];
    let mut start = 0u64;
    let mut current = match poly_eval_at(&diff, v, 0) {
        Some(c) => c <= Rat::zero(),
        None => return CompareResult::Unknown,
    };
    for x in 1..=bound {
        let le = match poly_eval_at(&diff, v, x) {
            Some(c) => c <= Rat::zero(),
            None => return CompareResult::Unknown,
        };
        if le != current {
            pieces.push((
                Interval {
                    lo: start,
                    hi: Some(x - 1),
                },
                current,
            ));
            start = x;
            current = le;
        }
    }
    // beyond the root bound the sign is fixed by the leading coefficient
    pieces.push((
        Interval {
            lo: start,
            hi: None,
        },
        current,
    ));
    if pieces.len() == 1 {
        return if pieces[0].1 {
            CompareResult::AlwaysLe
        } else {
            CompareResult::AlwaysGt
        };
    }
    CompareResult::Crossings(v, pieces)
}

/// Order-level comparison with sampled falsification.
fn compare_by_order(f: &CostExpr, g: &CostExpr) -> CompareResult {
    let of = asymptotic_order(f);
    let og = asymptotic_order(g);
    // sample a grid; any point with f > g falsifies AlwaysLe
    let mut vars = f.vars();
    for v in g.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let mut any_gt = false;
    let mut any_le = false;
    let points = [0.0f64, 1.0, 2.0, 5.0, 13.0, 40.0];
    let mut envs: Vec<BTreeMap<Sym, f64>> = vec![BTreeMap::new()];
    for v in &vars {
        let mut next = vec![];
        for env in &envs {
            for p in points {
                let mut e = env.clone();
                e.insert(*v, p);
                next.push(e);
            }
        }
        envs = next;
        if envs.len() > 4096 {
            break;
        }
    }
    for env in &envs {
        let a = f.eval_f64(env);
        let b = g.eval_f64(env);
        if !a.is_finite() || !b.is_finite() {
            continue;
        }
        if a > b + 1e-9 {
            any_gt = true;
        } else {
            any_le = true;
        }
    }
    if of < og && !any_gt {
        return CompareResult::AlwaysLe;
    }
    if of > og && !any_le {
        return CompareResult::AlwaysGt;
    }
    CompareResult::Unknown
}

/// What a spec is checked against.
pub enum Inferred<'a> {
    Cost(&'a Bound),
    Ratio {
        band: &'a RatioBand,
        /// order of the overhead-ratio expression (dominant-skeleton
        /// quotient), used for order-level specs
        ovhd: &'a CostExpr,
    },
}

/// Per-direction order of a ratio expression: the strongest growth when
/// one size variable grows and the others stay fixed. A quotient like
/// `l_B/l_A + 1` is linear in this sense (grow `l_B`), although the
/// joint-N convention would call it constant.
pub fn ratio_direction_order(e: &CostExpr) -> ComplexityOrder {
    fn per_var(e: &CostExpr, v: Sym) -> ComplexityOrder {
        match e {
            CostExpr::Add(xs) => xs
                .iter()
                .map(|x| per_var(x, v))
                .max_by(|a, b| a.partial_cmp(b).unwrap())
                .unwrap_or_else(ComplexityOrder::constant),
            CostExpr::Mul(xs) => {
                let mut acc = ComplexityOrder::constant();
                for o in xs.iter().map(|x| per_var(x, v)) {
                    acc = ComplexityOrder {
                        exp_base: acc.exp_base * o.exp_base,
                        degree: acc.degree + o.degree,
                        log_power: acc.log_power + o.log_power,
                    };
                }
                acc
            }
            CostExpr::Div(a, b) => {
                let oa = per_var(a, v);
                let ob = per_var(b, v);
                ComplexityOrder {
                    exp_base: oa.exp_base / ob.exp_base,
                    degree: oa.degree - ob.degree,
                    log_power: oa.log_power - ob.log_power,
                }
            }
            CostExpr::Pow(x, k) => {
                let o = per_var(x, v);
                ComplexityOrder {
                    exp_base: o.exp_base,
                    degree: o.degree * *k as i64,
                    log_power: o.log_power * *k as i32,
                }
            }
            CostExpr::Exp(base, x) => {
                if x.vars().contains(&v) && *base > Rat::one() {
                    ComplexityOrder {
                        exp_base: base.clone(),
                        degree: 0,
                        log_power: 0,
                    }
                } else {
                    ComplexityOrder::constant()
                }
            }
            CostExpr::Log2(x) => {
                if x.vars().contains(&v) {
                    ComplexityOrder {
                        exp_base: Rat::one(),
                        degree: 0,
                        log_power: 1,
                    }
                } else {
                    ComplexityOrder::constant()
                }
            }
            CostExpr::Var(w) if *w == v => ComplexityOrder::polynomial(1),
            CostExpr::Max(a, b) => {
                let (oa, ob) = (per_var(a, v), per_var(b, v));
                if oa >= ob {
                    oa
                } else {
                    ob
                }
            }
            _ => ComplexityOrder::constant(),
        }
    }
    if matches!(e, CostExpr::Infinity) {
        return ComplexityOrder {
            exp_base: rat(i64::MAX / 2),
            degree: 0,
            log_power: 0,
        };
    }
    e.vars()
        .into_iter()
        .map(|v| per_var(e, v))
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .unwrap_or_else(ComplexityOrder::constant)
}

/// Check one spec against an inferred bound or ratio band.
///
/// For function bands: checked where inferred.upper <= spec.upper and
/// inferred.lower >= spec.lower; false where inferred.lower > spec.upper
/// or inferred.upper < spec.lower; check elsewhere. Order-level specs
/// compare complexity orders and are insensitive to constant factors.
pub fn check_spec(
    spec: &AdmissibleSpec,
    inferred: &Inferred<'_>,
) -> Result<VerificationOutcome, VerifyError> {
    match (&spec.band, inferred) {
        (SpecBand::Order(limit), Inferred::Ratio { ovhd, .. }) => {
            let order = ratio_direction_order(ovhd);
            let v = if order <= *limit {
                Verdict::Checked
            } else {
                Verdict::False
            };
            Ok(VerificationOutcome::uniform(v, spec.origin.clone()))
        }
        (SpecBand::Order(limit), Inferred::Cost(bound)) => {
            let up_order = asymptotic_order(&bound.upper_expr());
            let lo_order = asymptotic_order(&bound.lower_expr());
            let v = if up_order <= *limit {
                Verdict::Checked
            } else if lo_order > *limit {
                Verdict::False
            } else {
                Verdict::Check
            };
            Ok(VerificationOutcome::uniform(v, spec.origin.clone()))
        }
        (SpecBand::Functions { lower, upper }, inf) => {
            let (inf_lower, inf_upper) = match inf {
                Inferred::Cost(b) => (b.lower_expr(), b.upper_expr()),
                Inferred::Ratio { band, .. } => (band.lower.clone(), band.upper.clone()),
            };
            // checked requires inferred.upper <= spec.upper and
            // inferred.lower >= spec.lower
            let within_upper = match upper {
                None => CompareResult::AlwaysLe,
                Some(u) => compare_norm(&inf_upper, u),
            };
            let within_lower = match lower {
                None => CompareResult::AlwaysLe,
                Some(l) => compare_norm(l, &inf_lower),
            };
            // false requires inferred.lower > spec.upper (or upper < lower)
            let beyond_upper = match upper {
                None => CompareResult::AlwaysLe, // never beyond infinity
                Some(u) => compare_norm(&inf_lower, u),
            };
            combine_band_outcomes(spec, within_upper, within_lower, beyond_upper)
        }
    }
}

/// Comparison on ratio expressions: cross-multiplied when the expressions
/// are single quotients so crossings stay polynomial and exact.
fn compare_norm(f: &CostExpr, g: &CostExpr) -> CompareResult {
    // f <= g with f possibly Div(a,b): a/b <= g  <=>  a <= g*b (b > 0)
    if let CostExpr::Div(a, b) = f {
        if let (Some(_), Some(bp)) = (a.to_polyexp(), b.to_polyexp()) {
            let rhs = CostExpr::Mul(vec![g.clone(), CostExpr::from_polyexp(&bp)]);
            return compare_functions(a, &rhs.canonical());
        }
    }
    if let CostExpr::Div(a, b) = g {
        if let (Some(_), Some(bp)) = (a.to_polyexp(), b.to_polyexp()) {
            let lhs = CostExpr::Mul(vec![f.clone(), CostExpr::from_polyexp(&bp)]);
            return compare_functions(&lhs.canonical(), a);
        }
    }
    compare_functions(f, g)
}

fn combine_band_outcomes(
    spec: &AdmissibleSpec,
    within_upper: CompareResult,
    within_lower: CompareResult,
    beyond_upper: CompareResult,
) -> Result<VerificationOutcome, VerifyError> {
    use CompareResult::*;
    // an undecided lower side degrades checked to check
    let lower_ok = matches!(within_lower, AlwaysLe);
    match within_upper {
        AlwaysLe if lower_ok => Ok(VerificationOutcome::uniform(
            Verdict::Checked,
            spec.origin.clone(),
        )),
        AlwaysLe => Ok(VerificationOutcome::uniform(
            Verdict::Check,
            spec.origin.clone(),
        )),
        AlwaysGt => {
            // inferred.upper > spec.upper everywhere; definite falsity
            // needs inferred.lower > spec.upper
            let v = match beyond_upper {
                AlwaysGt => Verdict::False,
                _ => Verdict::Check,
            };
            Ok(VerificationOutcome::uniform(v, spec.origin.clone()))
        }
        Crossings(v, pieces) => {
            let mut out = vec![];
            for (iv, le) in pieces {
                let verdict = if le && lower_ok {
                    Verdict::Checked
                } else if le {
                    Verdict::Check
                } else {
                    // upper exceeds the band here; false when the lower
                    // bound also exceeds (exact bounds), else check
                    match &beyond_upper {
                        AlwaysGt => Verdict::False,
                        Crossings(_, lower_pieces) => {
                            if interval_all_gt(lower_pieces, &iv) {
                                Verdict::False
                            } else {
                                Verdict::Check
                            }
                        }
                        _ => Verdict::Check,
                    }
                };
                out.push((iv, verdict));
            }
            Ok(VerificationOutcome {
                split_var: Some(v),
                pieces: out,
                origin: spec.origin.clone(),
            })
        }
        Unknown => Ok(VerificationOutcome::uniform(
            Verdict::Check,
            spec.origin.clone(),
        )),
    }
}

fn interval_all_gt(pieces: &[(Interval, bool)], iv: &Interval) -> bool {
    // every point of iv falls in pieces where le == false
    for (piv, le) in pieces {
        let overlap_lo = piv.lo.max(iv.lo);
        let overlap_hi = match (piv.hi, iv.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, b) => b,
        };
        let overlaps = match overlap_hi {
            Some(h) => overlap_lo <= h,
            None => true,
        };
        if overlaps && *le {
            return false;
        }
    }
    true
}

/// Emit one assertion per outcome piece. Full-range outcomes rewrite the
/// status; split outcomes add an interval conjunct `length(X,V), V in
/// a..b` to the precondition; an undecided full-range outcome returns the
/// original assertion unchanged.
pub fn emit_outcomes(outcome: &VerificationOutcome) -> Vec<PredAssertion> {
    let base = &outcome.origin;
    if outcome.pieces.len() == 1 {
        let (_, verdict) = &outcome.pieces[0];
        let mut a = base.clone();
        a.status = verdict.status();
        return vec![a];
    }
    let var = outcome.split_var.unwrap_or_else(|| Sym::new("N"));
    outcome
        .pieces
        .iter()
        .map(|(iv, verdict)| {
            let mut a = base.clone();
            a.status = verdict.status();
            let hi_term = match iv.hi {
                Some(h) => Term::Int(h as i64),
                None => Term::atom("inf"),
            };
            let conjunct = Term::comp(
                "in",
                vec![
                    Term::Var(var),
                    Term::comp("..", vec![Term::Int(iv.lo as i64), hi_term]),
                ],
            );
            a.pre = Some(match &a.pre {
                Some(PropFormula::And(xs)) => {
                    let mut xs = xs.clone();
                    xs.push(PropFormula::Lit(conjunct));
                    PropFormula::And(xs)
                }
                Some(other) => PropFormula::And(vec![other.clone(), PropFormula::Lit(conjunct)]),
                None => PropFormula::Lit(conjunct),
            });
            a
        })
        .collect()
}

/// Convenience: the `pred *` admissible-overhead spec used by reports:
/// relative overhead at most constant (Ovhd <= 1).
pub fn global_overhead_spec() -> AdmissibleSpec {
    let origin = PredAssertion {
        status: AssertionStatus::Check,
        kind: AssertionKind::Pred,
        head: None,
        pre: None,
        post: None,
        comp: vec![crate::lang::assertion::CostSpec {
            qualifier: CostQualifier::SoUb(OrderSpec::Ident(OrderIdent::Constant)),
            resource: Sym::new("steps"),
            kind: CostKind::RtcRatio,
        }],
        universal: true,
    };
    AdmissibleSpec {
        target: None,
        band: SpecBand::Order(ComplexityOrder::constant()),
        kind: CostKind::RtcRatio,
        origin,
    }
}

/// Largest integer x in [0, limit] with p(x) <= q(x) under exact
/// arithmetic; used by tests as an independent crossing oracle.
pub fn crossing_oracle(p: &PolyExp, q: &PolyExp, v: Sym, limit: u64) -> Option<u64> {
    let mut last = None;
    for x in 0..=limit {
        let env = BTreeMap::from([(v, Rat::from_integer(BigInt::from(x)))]);
        let a = p.eval(&env)?;
        let b = q.eval(&env)?;
        if a <= b {
            last = Some(x);
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{assertion_to_string, parse_assertion_text, parse_cost_expr_text};

    fn expr(s: &str) -> CostExpr {
        parse_cost_expr_text(s).unwrap()
    }

    fn poly(s: &str) -> PolyExp {
        expr(s).to_polyexp().unwrap()
    }

    #[test]
    fn interface_cost_exceeds_base_but_stays_within_factor_two() {
        // f = 0.5 L^2 + 2.5 L + 7 (interface checks), g = base cost
        let f = expr("0.5*L**2+2.5*L+7");
        let g = expr("0.5*L**2+1.5*L+1");
        assert_eq!(compare_functions(&g, &f), CompareResult::AlwaysLe);
        assert_eq!(compare_functions(&f, &g), CompareResult::AlwaysGt);
        // the ratio f/g drops to 2 at L = 3 and stays below it
        // (oracle: exact scan of f - 2g; f(3)=19, 2g(3)=20)
        let two_g = poly("L**2+3*L+2");
        let cross = crossing_oracle(&poly("0.5*L**2+2.5*L+7"), &two_g, Sym::new("L"), 1000);
        assert_eq!(cross, Some(1000), "ratio stays below 2 for large L");
        let double = expr("L**2+3*L+2");
        match compare_functions(&f, &double) {
            CompareResult::Crossings(v, pieces) => {
                assert_eq!(v, Sym::new("L"));
                assert_eq!(pieces.len(), 2);
                assert_eq!(pieces[0], (Interval { lo: 0, hi: Some(2) }, false));
                assert_eq!(pieces[1], (Interval { lo: 3, hi: None }, true));
            }
            other => panic!("expected crossings, got {other:?}"),
        }
    }

    #[test]
    fn equal_functions_compare_le() {
        let f = expr("3*N+1");
        assert_eq!(compare_functions(&f, &f), CompareResult::AlwaysLe);
    }

    #[test]
    fn quadratic_crosses_scaled_linear_at_hundred() {
        // oracle first: the last point where L^2 <= 100 L is exactly 100
        let cross = crossing_oracle(&poly("L**2"), &poly("100*L"), Sym::new("L"), 4000);
        assert_eq!(cross, Some(100));
        match compare_functions(&expr("L**2"), &expr("100*L")) {
            CompareResult::Crossings(_, pieces) => {
                assert_eq!(
                    pieces,
                    vec![
                        (
                            Interval {
                                lo: 0,
                                hi: Some(100)
                            },
                            true
                        ),
                        (Interval { lo: 101, hi: None }, false),
                    ]
                );
            }
            other => panic!("expected crossing at 100, got {other:?}"),
        }
    }

    fn ratio_inferred(lo: &str, hi: &str, ovhd: &str) -> (RatioBand, CostExpr) {
        (
            RatioBand {
                lower: expr(lo),
                upper: expr(hi),
            },
            expr(ovhd).canonical(),
        )
    }

    #[test]
    fn global_spec_rejects_linear_ratio_and_accepts_constant() {
        let spec = global_overhead_spec();
        // full instrumentation of the quadratic benchmark: ratio order L
        let (band, ovhd) = ratio_inferred("L", "L", "L");
        let out = check_spec(
            &spec,
            &Inferred::Ratio {
                band: &band,
                ovhd: &ovhd,
            },
        )
        .unwrap();
        assert_eq!(out.overall(), Verdict::False);
        // interface-only: ratio order 1
        let (band, ovhd) = ratio_inferred("1", "1", "1");
        let out = check_spec(
            &spec,
            &Inferred::Ratio {
                band: &band,
                ovhd: &ovhd,
            },
        )
        .unwrap();
        assert_eq!(out.overall(), Verdict::Checked);
        // asymmetric quotient: unbounded in one direction
        let (band, ovhd) = ratio_inferred("1", "l_B/l_A+1", "l_B/l_A+1");
        let out = check_spec(
            &spec,
            &Inferred::Ratio {
                band: &band,
                ovhd: &ovhd,
            },
        )
        .unwrap();
        assert_eq!(out.overall(), Verdict::False);
    }

    #[test]
    fn band_spec_accepts_enclosed_ratio() {
        // spec cost(ub(2*A)) on the ratio; inferred band [1, A]
        let a = parse_assertion_text(
            ":- check pred p(A,B) : (nat(A),var(B)) + cost(ub(2*A),[steps,rtc_ratio]).",
        )
        .unwrap();
        let specs = AdmissibleSpec::from_assertion(&a);
        assert_eq!(specs.len(), 1);
        let (band, ovhd) = ratio_inferred("1", "A", "A");
        let out = check_spec(
            &specs[0],
            &Inferred::Ratio {
                band: &band,
                ovhd: &ovhd,
            },
        )
        .unwrap();
        assert_eq!(out.overall(), Verdict::Checked);
    }

    #[test]
    fn spec_with_infinite_upper_checks_everywhere() {
        let a = parse_assertion_text(":- check pred p(A) : nat(A) + cost(lb(0),[steps]).").unwrap();
        let specs = AdmissibleSpec::from_assertion(&a);
        let b = Bound {
            lower: poly("2**D"),
            upper: None,
        };
        let out = check_spec(&specs[0], &Inferred::Cost(&b)).unwrap();
        assert_eq!(out.overall(), Verdict::Checked);
    }

    #[test]
    fn full_range_outcomes_emit_single_assertions() {
        let a = parse_assertion_text(
            ":- check pred nrev(X,Y) : (list(X),var(Y)) + cost(so_ub(constant),[steps,rtc_ratio]).",
        )
        .unwrap();
        let out = VerificationOutcome::uniform(Verdict::False, a.clone());
        let emitted = emit_outcomes(&out);
        assert_eq!(emitted.len(), 1);
        assert_eq!(emitted[0].status, AssertionStatus::False);
        let out = VerificationOutcome::uniform(Verdict::Checked, a.clone());
        assert_eq!(emit_outcomes(&out)[0].status, AssertionStatus::Checked);
        let out = VerificationOutcome::uniform(Verdict::Check, a.clone());
        assert_eq!(emit_outcomes(&out)[0], a, "undecided keeps the original");
    }

    #[test]
    fn crossing_outcome_splits_into_two_assertions() {
        let a = parse_assertion_text(
            ":- check pred p(X,Y) : (list(X),length(X,L)) + cost(ub(100*L),[steps]).",
        )
        .unwrap();
        let outcome = VerificationOutcome {
            split_var: Some(Sym::new("L")),
            pieces: vec![
                (
                    Interval {
                        lo: 0,
                        hi: Some(100),
                    },
                    Verdict::Checked,
                ),
                (Interval { lo: 101, hi: None }, Verdict::False),
            ],
            origin: a,
        };
        let emitted = emit_outcomes(&outcome);
        assert_eq!(emitted.len(), 2);
        let s0 = assertion_to_string(&emitted[0]);
        let s1 = assertion_to_string(&emitted[1]);
        assert!(s0.starts_with(":- checked pred"), "{s0}");
        assert!(s0.contains("L in 0..100"), "{s0}");
        assert!(s1.starts_with(":- false pred"), "{s1}");
        assert!(s1.contains("L in 101..inf"), "{s1}");
        // emitted pieces parse back
        for s in [&s0, &s1] {
            parse_assertion_text(s).unwrap();
        }
    }

    #[test]
    fn pieces_partition_all_sizes() {
        match compare_functions(&expr("L**2"), &expr("100*L")) {
            CompareResult::Crossings(_, pieces) => {
                let mut next = 0u64;
                for (iv, _) in &pieces {
                    assert_eq!(iv.lo, next);
                    match iv.hi {
                        Some(h) => next = h + 1,
                        None => next = u64::MAX,
                    }
                }
                assert_eq!(next, u64::MAX, "last interval unbounded");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn widening_the_band_preserves_checked() {
        // if ub(B) yields checked, every ub(B') with B' >= B does too
        let inferred = Bound {
            lower: poly("2*L+1"),
            upper: Some(poly("2*L+1")),
        };
        for (tight, wide) in [("2*L+1", "2*L+5"), ("3*L+2", "L**2+3*L+2")] {
            let make = |u: &str| {
                let a = parse_assertion_text(&format!(
                    ":- check pred p(X) : list(X) + cost(ub({u}),[steps])."
                ))
                .unwrap();
                AdmissibleSpec::from_assertion(&a).remove(0)
            };
            let v1 = check_spec(&make(tight), &Inferred::Cost(&inferred))
                .unwrap()
                .overall();
            let v2 = check_spec(&make(wide), &Inferred::Cost(&inferred))
                .unwrap()
                .overall();
            assert_eq!(v1, Verdict::Checked);
            assert_eq!(v2, Verdict::Checked);
        }
    }

    #[test]
    fn order_verdicts_ignore_constant_factors() {
        let spec = global_overhead_spec();
        for scale in [1i64, 3, 17, 400] {
            let s = format!("{scale}");
            let (band, ovhd) = ratio_inferred(&s, &s, "1");
            let out = check_spec(
                &spec,
                &Inferred::Ratio {
                    band: &band,
                    ovhd: &ovhd,
                },
            )
            .unwrap();
            assert_eq!(out.overall(), Verdict::Checked, "scale {scale}");
            let lin = format!("{scale}*L");
            let (band, ovhd) = ratio_inferred(&lin, &lin, &lin);
            let out = check_spec(
                &spec,
                &Inferred::Ratio {
                    band: &band,
                    ovhd: &ovhd,
                },
            )
            .unwrap();
            assert_eq!(out.overall(), Verdict::False, "scale {scale}");
        }
    }

    #[test]
    fn ratio_direction_order_examples() {
        assert_eq!(
            ratio_direction_order(&expr("l_B/l_A+1").canonical()),
            ComplexityOrder::polynomial(1)
        );
        assert_eq!(
            ratio_direction_order(&expr("1")),
            ComplexityOrder::constant()
        );
        let o = ratio_direction_order(&CostExpr::Div(Box::new(expr("2**D")), Box::new(expr("D"))));
        assert!(o.exp_base > Rat::one());
        assert_eq!(
            ratio_direction_order(&expr("l_A+l_B")),
            ComplexityOrder::polynomial(1)
        );
    }
}
