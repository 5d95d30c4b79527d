//! Error types shared across the analyzer.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LangError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("assertion error: {0}")]
    Assertion(String),
    #[error("duplicate export declaration for {0}")]
    DuplicateExport(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InstrumentError {
    #[error("prop literal {0} is not a declared property or built-in test")]
    NotAProperty(String),
    #[error("discharge entry references missing assertion: {0}")]
    BadDischarge(String),
    #[error("cannot generate a fresh name for {0}")]
    FreshNameExhausted(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RunError {
    #[error("step budget exceeded ({0} steps)")]
    BudgetExceeded(u64),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("arithmetic error: {0}")]
    Arith(String),
    #[error("unsupported goal at run time: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("entry predicate {0} is not defined")]
    UnknownEntry(String),
    #[error("entry predicate {0} has no assertion with a precondition")]
    NoEntryAssertion(String),
    #[error("conflicting size metrics for {0} argument {1}")]
    MetricConflict(String, usize),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifyError {
    #[error("specification references unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("specification kind does not match the inferred artifact: {0}")]
    KindMismatch(String),
}
