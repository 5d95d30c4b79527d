//! Terms of the analyzed language: variables, atoms, integers, compounds.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

/// Interned atom/functor name.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u32);

struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static TABLE: OnceLock<RwLock<Interner>> = OnceLock::new();
    TABLE.get_or_init(|| {
        RwLock::new(Interner {
            names: Vec::new(),
            index: HashMap::new(),
        })
    })
}

impl Sym {
    pub fn new(name: &str) -> Sym {
        {
            let t = interner().read().unwrap();
            if let Some(&i) = t.index.get(name) {
                return Sym(i);
            }
        }
        let mut t = interner().write().unwrap();
        if let Some(&i) = t.index.get(name) {
            return Sym(i);
        }
        let i = t.names.len() as u32;
        t.names.push(name.to_string());
        t.index.insert(name.to_string(), i);
        Sym(i)
    }

    pub fn name(self) -> String {
        interner().read().unwrap().names[self.0 as usize].clone()
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Predicate identifier: name plus arity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredId {
    pub name: Sym,
    pub arity: usize,
}

impl PredId {
    pub fn new(name: &str, arity: usize) -> PredId {
        PredId {
            name: Sym::new(name),
            arity,
        }
    }
}

impl fmt::Display for PredId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl fmt::Debug for PredId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A term. Variables are named; clause-level renaming happens in the
/// interpreter, so the same `Var` name in two clauses is unrelated.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Sym),
    Atom(Sym),
    Int(i64),
    Comp(Sym, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Sym::new(name))
    }

    pub fn atom(name: &str) -> Term {
        Term::Atom(Sym::new(name))
    }

    pub fn comp(name: &str, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Atom(Sym::new(name))
        } else {
            Term::Comp(Sym::new(name), args)
        }
    }

    pub fn nil() -> Term {
        Term::atom("[]")
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Comp(Sym::new("."), vec![head, tail])
    }

    /// Build a proper list from items.
    pub fn list(items: Vec<Term>) -> Term {
        let mut t = Term::nil();
        for item in items.into_iter().rev() {
            t = Term::cons(item, t);
        }
        t
    }

    pub fn functor(&self) -> Option<(Sym, usize)> {
        match self {
            Term::Atom(s) => Some((*s, 0)),
            Term::Comp(s, args) => Some((*s, args.len())),
            _ => None,
        }
    }

    pub fn pred_id(&self) -> Option<PredId> {
        self.functor().map(|(name, arity)| PredId { name, arity })
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Comp(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Collect variable names in first-occurrence order.
    pub fn vars(&self, out: &mut Vec<Sym>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Comp(_, args) => {
                for a in args {
                    a.vars(out);
                }
            }
            _ => {}
        }
    }

    /// Length of a proper list, if this term is one.
    pub fn list_len(&self) -> Option<usize> {
        let mut n = 0;
        let mut t = self;
        loop {
            match t {
                Term::Atom(s) if s.name() == "[]" => return Some(n),
                Term::Comp(s, args) if args.len() == 2 && s.name() == "." => {
                    n += 1;
                    t = &args[1];
                }
                _ => return None,
            }
        }
    }

    /// Apply a variable renaming.
    pub fn rename(&self, map: &HashMap<Sym, Sym>) -> Term {
        match self {
            Term::Var(v) => Term::Var(*map.get(v).unwrap_or(v)),
            Term::Comp(s, args) => Term::Comp(*s, args.iter().map(|a| a.rename(map)).collect()),
            other => other.clone(),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::lang::printer::term_to_string(self))
    }
}
