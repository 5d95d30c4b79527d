//! Parser for the source language: clauses, directives, assertions.
//!
//! The grammar is a small Edinburgh-style subset: facts, rules with
//! `,`-conjunction bodies, arithmetic via `is/2`, comparison built-ins,
//! and assertion directives. Directives start with `:-` and end with `.`.

use std::fmt::Write as _;

use num_traits::Zero;

use super::assertion::{
    AssertionKind, AssertionStatus, CostKind, CostQualifier, CostSpec, OrderIdent, OrderSpec,
    PredAssertion, PropFormula,
};
use super::cost_expr::CostExpr;
use super::poly::{rat, Rat};
use super::program::{ArithExpr, ArithOp, Clause, CmpOp, Goal, Program, TestKind};
use super::term::{PredId, Sym, Term};
use crate::error::LangError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Atom(String),
    Var(String),
    Int(i64),
    Dec(Rat),
    Punct(&'static str),
    End, // '.'
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> LangError {
        LangError::Parse {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, LangError> {
        let mut out = vec![];
        while let Some(c) = self.peek() {
            let (line, col) = (self.line, self.col);
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'%' => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                b'a'..=b'z' => {
                    let mut s = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            s.push(self.bump() as char);
                        } else {
                            break;
                        }
                    }
                    out.push((Tok::Atom(s), line, col));
                }
                b'A'..=b'Z' | b'_' => {
                    let mut s = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            s.push(self.bump() as char);
                        } else {
                            break;
                        }
                    }
                    out.push((Tok::Var(s), line, col));
                }
                b'0'..=b'9' => {
                    let mut s = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() {
                            s.push(self.bump() as char);
                        } else {
                            break;
                        }
                    }
                    // decimal point only when a digit follows
                    if self.peek() == Some(b'.')
                        && self.peek2().map(|c| c.is_ascii_digit()).unwrap_or(false)
                    {
                        self.bump();
                        let mut frac = String::new();
                        while let Some(c) = self.peek() {
                            if c.is_ascii_digit() {
                                frac.push(self.bump() as char);
                            } else {
                                break;
                            }
                        }
                        let scale = 10i64.pow(frac.len() as u32);
                        let whole: i64 = s.parse().map_err(|_| self.err("number too large"))?;
                        let fpart: i64 = frac.parse().map_err(|_| self.err("number too large"))?;
                        out.push((
                            Tok::Dec(Rat::new((whole * scale + fpart).into(), scale.into())),
                            line,
                            col,
                        ));
                    } else if let Ok(n) = s.parse::<i64>() {
                        out.push((Tok::Int(n), line, col));
                    } else {
                        // big constants only make sense in cost expressions
                        let big: num_bigint::BigInt =
                            s.parse().map_err(|_| self.err("bad number"))?;
                        out.push((Tok::Dec(Rat::from_integer(big)), line, col));
                    }
                }
                b'\'' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.peek() {
                            Some(b'\'') => {
                                self.bump();
                                break;
                            }
                            Some(_) => s.push(self.bump() as char),
                            None => return Err(self.err("unterminated quoted atom")),
                        }
                    }
                    out.push((Tok::Atom(s), line, col));
                }
                b'.' => {
                    self.bump();
                    // '..' interval operator
                    if self.peek() == Some(b'.') {
                        self.bump();
                        out.push((Tok::Punct(".."), line, col));
                    } else {
                        out.push((Tok::End, line, col));
                    }
                }
                _ => {
                    let two: &[u8] = &self.src[self.pos..(self.pos + 2).min(self.src.len())];
                    let three: &[u8] = &self.src[self.pos..(self.pos + 3).min(self.src.len())];
                    let p3: Option<&'static str> = match three {
                        b"=:=" => Some("=:="),
                        b"=\\=" => Some("=\\="),
                        b"\\==" => Some("\\=="),
                        _ => None,
                    };
                    if let Some(p) = p3 {
                        for _ in 0..3 {
                            self.bump();
                        }
                        out.push((Tok::Punct(p), line, col));
                        continue;
                    }
                    let p2: Option<&'static str> = match two {
                        b":-" => Some(":-"),
                        b"=>" => Some("=>"),
                        b"=<" => Some("=<"),
                        b">=" => Some(">="),
                        b"==" => Some("=="),
                        b"**" => Some("**"),
                        b"/\\" => Some("/\\"),
                        b"\\/" => Some("\\/"),
                        _ => None,
                    };
                    if let Some(p) = p2 {
                        for _ in 0..2 {
                            self.bump();
                        }
                        out.push((Tok::Punct(p), line, col));
                        continue;
                    }
                    let p1: Option<&'static str> = match c {
                        b'(' => Some("("),
                        b')' => Some(")"),
                        b'[' => Some("["),
                        b']' => Some("]"),
                        b',' => Some(","),
                        b'|' => Some("|"),
                        b':' => Some(":"),
                        b';' => Some(";"),
                        b'+' => Some("+"),
                        b'-' => Some("-"),
                        b'*' => Some("*"),
                        b'/' => Some("/"),
                        b'<' => Some("<"),
                        b'>' => Some(">"),
                        b'#' => Some("#"),
                        b'=' => Some("="),
                        _ => None,
                    };
                    match p1 {
                        Some(p) => {
                            self.bump();
                            out.push((Tok::Punct(p), line, col));
                        }
                        None => {
                            return Err(self.err(format!("unexpected character '{}'", c as char)))
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

pub struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn err_here(&self, msg: impl Into<String>) -> LangError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .or_else(|| self.toks.last().map(|(_, l, c)| (*l, *c)))
            .unwrap_or((1, 1));
        LangError::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), LangError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err_here(format!("expected '{p}'")))
        }
    }

    fn expect_end(&mut self) -> Result<(), LangError> {
        match self.next() {
            Some(Tok::End) => Ok(()),
            _ => Err(self.err_here("expected '.'")),
        }
    }

    fn eat_atom(&mut self, want: &str) -> bool {
        if let Some(Tok::Atom(a)) = self.peek() {
            if a == want {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn expect_atom(&mut self) -> Result<String, LangError> {
        match self.next() {
            Some(Tok::Atom(a)) => Ok(a),
            _ => Err(self.err_here("expected an atom")),
        }
    }

    fn expect_int(&mut self) -> Result<i64, LangError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(n),
            _ => Err(self.err_here("expected an integer")),
        }
    }

    // ---- terms ----

    fn parse_term(&mut self) -> Result<Term, LangError> {
        match self.next() {
            Some(Tok::Var(v)) => Ok(Term::var(&v)),
            Some(Tok::Int(n)) => Ok(Term::Int(n)),
            Some(Tok::Atom(a)) => {
                if self.eat_punct("(") {
                    let mut args = vec![self.parse_term_infix()?];
                    while self.eat_punct(",") {
                        args.push(self.parse_term_infix()?);
                    }
                    self.expect_punct(")")?;
                    Ok(Term::comp(&a, args))
                } else {
                    Ok(Term::atom(&a))
                }
            }
            Some(Tok::Punct("[")) => self.parse_list(),
            Some(Tok::Punct("-")) => match self.next() {
                Some(Tok::Int(n)) => Ok(Term::Int(-n)),
                _ => Err(self.err_here("expected an integer after '-'")),
            },
            _ => Err(self.err_here("expected a term")),
        }
    }

    /// Term with optional infix comparison/range, used inside argument and
    /// formula positions, e.g. `L =< 7`, `L in 0..100`.
    fn parse_term_infix(&mut self) -> Result<Term, LangError> {
        let t = self.parse_term()?;
        let op: Option<String> = match self.peek() {
            Some(Tok::Punct(p))
                if ["=<", ">=", "<", ">", "=:=", "=\\=", "==", "\\==", ".."].contains(p) =>
            {
                Some(p.to_string())
            }
            Some(Tok::Atom(a)) if a == "in" || a == "mod" => Some(a.clone()),
            _ => None,
        };
        match op {
            None => Ok(t),
            Some(op) => {
                self.pos += 1;
                let rhs = self.parse_term_infix()?;
                Ok(Term::comp(&op, vec![t, rhs]))
            }
        }
    }

    fn parse_list(&mut self) -> Result<Term, LangError> {
        if self.eat_punct("]") {
            return Ok(Term::nil());
        }
        let mut items = vec![self.parse_term_infix()?];
        while self.eat_punct(",") {
            items.push(self.parse_term_infix()?);
        }
        let tail = if self.eat_punct("|") {
            self.parse_term()?
        } else {
            Term::nil()
        };
        self.expect_punct("]")?;
        let mut t = tail;
        for item in items.into_iter().rev() {
            t = Term::cons(item, t);
        }
        Ok(t)
    }

    // ---- arithmetic expressions (is/2 and comparisons) ----

    fn parse_arith(&mut self) -> Result<ArithExpr, LangError> {
        self.parse_arith_prec(0)
    }

    fn arith_op(&self) -> Option<(ArithOp, u8)> {
        match self.peek() {
            Some(Tok::Punct("\\/")) => Some((ArithOp::BitOr, 1)),
            Some(Tok::Punct("#")) => Some((ArithOp::BitXor, 1)),
            Some(Tok::Punct("/\\")) => Some((ArithOp::BitAnd, 2)),
            Some(Tok::Punct("+")) => Some((ArithOp::Add, 3)),
            Some(Tok::Punct("-")) => Some((ArithOp::Sub, 3)),
            Some(Tok::Punct("*")) => Some((ArithOp::Mul, 4)),
            Some(Tok::Atom(a)) if a == "mod" => Some((ArithOp::Mod, 4)),
            _ => None,
        }
    }

    fn parse_arith_prec(&mut self, min: u8) -> Result<ArithExpr, LangError> {
        let mut lhs = self.parse_arith_primary()?;
        while let Some((op, prec)) = self.arith_op() {
            if prec < min {
                break;
            }
            self.pos += 1;
            let rhs = self.parse_arith_prec(prec + 1)?;
            lhs = ArithExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_arith_primary(&mut self) -> Result<ArithExpr, LangError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(ArithExpr::Int(n)),
            Some(Tok::Var(v)) => Ok(ArithExpr::Var(Sym::new(&v))),
            Some(Tok::Punct("(")) => {
                let e = self.parse_arith()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Some(Tok::Punct("-")) => {
                let e = self.parse_arith_primary()?;
                Ok(ArithExpr::Bin(
                    ArithOp::Sub,
                    Box::new(ArithExpr::Int(0)),
                    Box::new(e),
                ))
            }
            _ => Err(self.err_here("expected an arithmetic expression")),
        }
    }

    // ---- goals ----

    fn parse_goal(&mut self) -> Result<Goal, LangError> {
        // Parse a primary term first, then look for an infix goal operator.
        let checkpoint = self.pos;
        let t = self.parse_term()?;
        let cmp: Option<CmpOp> = match self.peek() {
            Some(Tok::Punct("=<")) => Some(CmpOp::Le),
            Some(Tok::Punct(">=")) => Some(CmpOp::Ge),
            Some(Tok::Punct("<")) => Some(CmpOp::Lt),
            Some(Tok::Punct(">")) => Some(CmpOp::Gt),
            Some(Tok::Punct("=:=")) => Some(CmpOp::Eq),
            Some(Tok::Punct("=\\=")) => Some(CmpOp::Ne),
            _ => None,
        };
        if let Some(op) = cmp {
            self.pos = checkpoint;
            let lhs = self.parse_arith()?;
            self.pos += 1; // the operator we already saw
            let rhs = self.parse_arith()?;
            return Ok(Goal::Compare(op, lhs, rhs));
        }
        match self.peek() {
            Some(Tok::Punct("==")) => {
                self.pos += 1;
                let rhs = self.parse_term()?;
                Ok(Goal::TermCmp(true, t, rhs))
            }
            Some(Tok::Punct("\\==")) => {
                self.pos += 1;
                let rhs = self.parse_term()?;
                Ok(Goal::TermCmp(false, t, rhs))
            }
            Some(Tok::Atom(a)) if a == "is" => {
                self.pos += 1;
                let e = self.parse_arith()?;
                if e.has_bitwise() {
                    Ok(Goal::BitCombine(t, e))
                } else {
                    Ok(Goal::Is(t, e))
                }
            }
            _ => Ok(classify_call(t)),
        }
    }

    fn parse_body(&mut self) -> Result<Vec<Goal>, LangError> {
        let mut goals = vec![self.parse_goal()?];
        while self.eat_punct(",") {
            goals.push(self.parse_goal()?);
        }
        Ok(goals)
    }

    // ---- formulas ----

    fn parse_formula(&mut self) -> Result<PropFormula, LangError> {
        let mut parts = vec![self.parse_formula_conj()?];
        while self.eat_punct(";") {
            parts.push(self.parse_formula_conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PropFormula::Or(parts)
        })
    }

    fn parse_formula_conj(&mut self) -> Result<PropFormula, LangError> {
        let mut parts = vec![self.parse_formula_prim()?];
        while self.eat_punct(",") {
            parts.push(self.parse_formula_prim()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PropFormula::And(parts)
        })
    }

    fn parse_formula_prim(&mut self) -> Result<PropFormula, LangError> {
        if self.eat_punct("(") {
            let f = self.parse_formula()?;
            self.expect_punct(")")?;
            return Ok(f);
        }
        if self.eat_atom("true") {
            return Ok(PropFormula::And(vec![]));
        }
        Ok(PropFormula::Lit(self.parse_term_infix()?))
    }

    // ---- cost expressions ----

    fn parse_cost_expr(&mut self) -> Result<CostExpr, LangError> {
        self.parse_cost_prec(0)
    }

    fn cost_op(&self) -> Option<(u8, &'static str)> {
        match self.peek() {
            Some(Tok::Punct("+")) => Some((1, "+")),
            Some(Tok::Punct("-")) => Some((1, "-")),
            Some(Tok::Punct("*")) => Some((2, "*")),
            Some(Tok::Punct("/")) => Some((2, "/")),
            Some(Tok::Punct("**")) => Some((3, "**")),
            _ => None,
        }
    }

    fn parse_cost_prec(&mut self, min: u8) -> Result<CostExpr, LangError> {
        let mut lhs = self.parse_cost_primary()?;
        while let Some((prec, op)) = self.cost_op() {
            if prec < min {
                break;
            }
            self.pos += 1;
            // '**' is right-associative; the rest left-associative
            let rhs = if op == "**" {
                self.parse_cost_prec(prec)?
            } else {
                self.parse_cost_prec(prec + 1)?
            };
            lhs = match op {
                "+" => CostExpr::Add(vec![lhs, rhs]),
                "-" => CostExpr::Add(vec![lhs, CostExpr::Mul(vec![CostExpr::int(-1), rhs])]),
                "*" => CostExpr::Mul(vec![lhs, rhs]),
                "/" => CostExpr::Div(Box::new(lhs), Box::new(rhs)),
                "**" => match (&lhs, &rhs) {
                    (CostExpr::Const(b), _) => CostExpr::Exp(b.clone(), Box::new(rhs)),
                    (_, CostExpr::Const(k)) if k.is_integer() && !k.is_zero() => {
                        use num_traits::ToPrimitive;
                        let k = k
                            .to_integer()
                            .to_u32()
                            .ok_or_else(|| self.err_here("exponent out of range"))?;
                        CostExpr::Pow(Box::new(lhs), k)
                    }
                    _ => return Err(self.err_here("unsupported '**' operands")),
                },
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn parse_cost_primary(&mut self) -> Result<CostExpr, LangError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(CostExpr::int(n)),
            Some(Tok::Dec(r)) => Ok(CostExpr::Const(r)),
            Some(Tok::Var(v)) => Ok(CostExpr::Var(Sym::new(&v))),
            Some(Tok::Punct("(")) => {
                let e = self.parse_cost_expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Some(Tok::Punct("-")) => {
                let e = self.parse_cost_primary()?;
                Ok(CostExpr::Mul(vec![CostExpr::int(-1), e]))
            }
            Some(Tok::Atom(a)) if a == "inf" => Ok(CostExpr::Infinity),
            Some(Tok::Atom(a)) if a == "log2" => {
                self.expect_punct("(")?;
                let e = self.parse_cost_expr()?;
                self.expect_punct(")")?;
                Ok(CostExpr::Log2(Box::new(e)))
            }
            Some(Tok::Atom(a)) if a == "max" => {
                self.expect_punct("(")?;
                let x = self.parse_cost_expr()?;
                self.expect_punct(",")?;
                let y = self.parse_cost_expr()?;
                self.expect_punct(")")?;
                Ok(CostExpr::Max(Box::new(x), Box::new(y)))
            }
            // lowercase names like l_A, d_T act as size variables here
            Some(Tok::Atom(a)) => Ok(CostExpr::Var(Sym::new(&a))),
            _ => Err(self.err_here("expected a cost expression")),
        }
    }

    // ---- cost specs ----

    fn parse_cost_spec(&mut self) -> Result<CostSpec, LangError> {
        if !self.eat_atom("cost") {
            return Err(self.err_here("expected cost(...) property"));
        }
        self.expect_punct("(")?;
        let qual_name = self.expect_atom()?;
        self.expect_punct("(")?;
        let qualifier = match qual_name.as_str() {
            "exact" => CostQualifier::Exact(self.parse_cost_expr()?),
            "ub" => CostQualifier::Ub(self.parse_cost_expr()?),
            "lb" => CostQualifier::Lb(self.parse_cost_expr()?),
            "band" => {
                let lo = self.parse_cost_expr()?;
                self.expect_punct(",")?;
                let hi = self.parse_cost_expr()?;
                CostQualifier::Band(lo, hi)
            }
            "o_ub" => CostQualifier::OUb(self.parse_cost_expr()?),
            "so_ub" => {
                let spec = if let Some(Tok::Atom(a)) = self.peek() {
                    match OrderIdent::from_name(a) {
                        Some(id) => {
                            self.pos += 1;
                            OrderSpec::Ident(id)
                        }
                        None => OrderSpec::Expr(self.parse_cost_expr()?),
                    }
                } else {
                    OrderSpec::Expr(self.parse_cost_expr()?)
                };
                CostQualifier::SoUb(spec)
            }
            other => return Err(self.err_here(format!("unknown cost qualifier '{other}'"))),
        };
        self.expect_punct(")")?;
        self.expect_punct(",")?;
        self.expect_punct("[")?;
        let resource = self.expect_atom()?;
        let kind = if self.eat_punct(",") {
            match self.expect_atom()?.as_str() {
                "std" => CostKind::Std,
                "acc" => CostKind::Acc,
                "rtc_ratio" => CostKind::RtcRatio,
                other => return Err(self.err_here(format!("unknown cost kind '{other}'"))),
            }
        } else {
            CostKind::Std
        };
        self.expect_punct("]")?;
        self.expect_punct(")")?;
        Ok(CostSpec {
            qualifier,
            resource: Sym::new(&resource),
            kind,
        })
    }

    fn parse_comp(&mut self) -> Result<Vec<CostSpec>, LangError> {
        let parens = self.eat_punct("(");
        let mut specs = vec![self.parse_cost_spec()?];
        while self.eat_punct(",") {
            specs.push(self.parse_cost_spec()?);
        }
        if parens {
            self.expect_punct(")")?;
        }
        Ok(specs)
    }

    // ---- directives ----

    fn parse_pred_indicator(&mut self) -> Result<PredId, LangError> {
        let parens = self.eat_punct("(");
        let name = self.expect_atom()?;
        self.expect_punct("/")?;
        let arity = self.expect_int()?;
        if parens {
            self.expect_punct(")")?;
        }
        if arity < 0 {
            return Err(self.err_here("arity must be non-negative"));
        }
        Ok(PredId::new(&name, arity as usize))
    }

    fn parse_assertion(&mut self, status: AssertionStatus) -> Result<PredAssertion, LangError> {
        let kind = if self.eat_atom("pred") {
            AssertionKind::Pred
        } else if self.eat_atom("calls") {
            AssertionKind::Calls
        } else {
            return Err(self.err_here("expected 'pred' or 'calls' after assertion status"));
        };
        // universal: pred *
        if kind == AssertionKind::Pred && self.eat_punct("*") {
            let comp = if self.eat_punct("+") {
                self.parse_comp()?
            } else {
                vec![]
            };
            self.expect_end()?;
            return Ok(PredAssertion {
                status,
                kind,
                head: None,
                pre: None,
                post: None,
                comp,
                universal: true,
            });
        }
        let head = self.parse_term()?;
        if head.pred_id().is_none() {
            return Err(self.err_here("assertion head must be an atom or compound"));
        }
        let pre = if self.eat_punct(":") {
            Some(self.parse_formula()?)
        } else {
            None
        };
        let post = if self.eat_punct("=>") {
            if kind == AssertionKind::Calls {
                return Err(self.err_here("calls assertions cannot have a postcondition"));
            }
            Some(self.parse_formula()?)
        } else {
            None
        };
        let comp = if self.eat_punct("+") {
            self.parse_comp()?
        } else {
            vec![]
        };
        self.expect_end()?;
        Ok(PredAssertion {
            status,
            kind,
            head: Some(head),
            pre,
            post,
            comp,
            universal: false,
        })
    }

    fn parse_directive(&mut self, program: &mut Program) -> Result<(), LangError> {
        if self.eat_atom("export") {
            let pid = self.parse_pred_indicator()?;
            self.expect_end()?;
            program.exports.insert(pid);
            return Ok(());
        }
        if self.eat_atom("prop") {
            let pid = self.parse_pred_indicator()?;
            self.expect_end()?;
            program.props.insert(pid);
            return Ok(());
        }
        if self.eat_atom("cost_model") {
            self.expect_punct("(")?;
            let key = self.expect_atom()?;
            // tolerate an optional /arity on the key
            if self.eat_punct("/") {
                self.expect_int()?;
            }
            self.expect_punct(",")?;
            let v = self.expect_int()?;
            self.expect_punct(")")?;
            self.expect_end()?;
            if v < 0 {
                return Err(self.err_here("cost must be non-negative"));
            }
            let mut m = super::program::CostModel::default();
            if !m.set(&key, v as u64) {
                return Err(self.err_here(format!("unknown cost model key '{key}'")));
            }
            program.cost_model_overrides.insert(key, v as u64);
            return Ok(());
        }
        if let Some(Tok::Atom(a)) = self.peek() {
            if let Some(status) = AssertionStatus::from_name(a) {
                self.pos += 1;
                let a = self.parse_assertion(status)?;
                program.assertions.push(a);
                return Ok(());
            }
        }
        Err(self.err_here("unknown directive"))
    }

    fn parse_clause(&mut self) -> Result<Clause, LangError> {
        let head = self.parse_term()?;
        if head.pred_id().is_none() {
            return Err(self.err_here("clause head must be an atom or compound"));
        }
        let body = if self.eat_punct(":-") {
            self.parse_body()?
        } else {
            vec![]
        };
        self.expect_end()?;
        Ok(Clause { head, body })
    }
}

/// Classify a parsed call term into its goal kind.
fn classify_call(t: Term) -> Goal {
    if let Some(pid) = t.pred_id() {
        let name = pid.name.name();
        match (name.as_str(), pid.arity) {
            ("true", 0) => return Goal::True,
            ("reify_check", 2) => {
                let args = t.args();
                return Goal::ReifyCheck(args[0].clone(), args[1].clone());
            }
            ("warn_if_false", 2) => {
                let args = t.args();
                let label = match &args[1] {
                    Term::Atom(s) => *s,
                    _ => Sym::new("check"),
                };
                return Goal::WarnIfFalse(args[0].clone(), label);
            }
            (n, 1) => {
                if let Some(k) = TestKind::from_name(n) {
                    return Goal::TypeTest(k, t.args()[0].clone());
                }
            }
            _ => {}
        }
    }
    Goal::Call(t)
}

/// Parse a complete source file into a `Program`.
pub fn parse_program(src: &str) -> Result<Program, LangError> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let mut program = Program::new();
    while p.peek().is_some() {
        if p.eat_punct(":-") {
            p.parse_directive(&mut program)?;
        } else {
            let clause = p.parse_clause()?;
            program.add_clause(clause);
        }
    }
    validate(&program)?;
    Ok(program)
}

/// Parse a single goal, e.g. a CLI `--goal 'rev([a,b],X)'`.
pub fn parse_goal_term(src: &str) -> Result<Term, LangError> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let t = p.parse_term()?;
    if let Some(tok) = p.peek() {
        if *tok != Tok::End {
            return Err(p.err_here("trailing input after goal"));
        }
    }
    Ok(t)
}

/// Parse one standalone assertion directive, e.g. an inline CLI spec:
/// `:- check pred * + cost(so_ub(constant),[steps,rtc_ratio]).`
/// The leading `:- ` may be omitted.
pub fn parse_assertion_text(src: &str) -> Result<PredAssertion, LangError> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    p.eat_punct(":-");
    let status = match p.next() {
        Some(Tok::Atom(a)) => AssertionStatus::from_name(&a).ok_or_else(|| LangError::Parse {
            line: 1,
            col: 1,
            msg: format!("unknown assertion status '{a}'"),
        })?,
        _ => {
            return Err(LangError::Parse {
                line: 1,
                col: 1,
                msg: "expected an assertion status".into(),
            })
        }
    };
    p.parse_assertion(status)
}

/// Parse a cost expression in assertion syntax, e.g. `0.5*L**2+1.5*L+1`.
pub fn parse_cost_expr_text(src: &str) -> Result<CostExpr, LangError> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.parse_cost_expr()?;
    if p.peek().is_some() && p.peek() != Some(&Tok::End) {
        return Err(p.err_here("trailing input after expression"));
    }
    Ok(e)
}

fn validate(program: &Program) -> Result<(), LangError> {
    for a in &program.assertions {
        if let Some(pid) = a.head_pred() {
            if !program.has_pred(pid)
                && TestKind::from_name(&pid.name.name()).is_none()
                && !crate::lang::prelude::is_prelude_prop(pid)
            {
                return Err(LangError::Assertion(format!(
                    "assertion for {pid} has no clauses and is not a built-in"
                )));
            }
        }
    }
    Ok(())
}

/// Convenience used by tests: render a rational for diagnostics.
pub fn show_rat(r: &Rat) -> String {
    let mut s = String::new();
    let _ = write!(s, "{}", super::poly::rat_to_string(r));
    s
}

pub fn rat_from_int(n: i64) -> Rat {
    rat(n)
}
