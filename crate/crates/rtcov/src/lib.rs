//! Static cost-bound analysis and verification of run-time check overhead
//! for a small logic language.
//!
//! The pipeline: parse a program with assertions, instrument it with
//! run-time checks (`off`/`full`/`opt` scenarios), infer argument-size
//! relations and cost recurrences, solve them to closed-form lower/upper
//! bounds, derive overhead ratios of instrumented vs. original cost, and
//! verify them against admissible-overhead assertions. A step-counting
//! resolution interpreter provides the dynamic ground truth for every
//! inferred bound.

pub mod error;
pub mod lang;

pub use error::{AnalysisError, InstrumentError, LangError, RunError, VerifyError};
pub mod bench;
pub mod cost;
pub mod instrument;
pub mod interp;
pub mod recur;
pub mod report;
pub mod sizes;
pub mod verify;
