//! Numerical estimation of p-angular distance constants and related
//! geometric constants (moduli of convexity and smoothness, ε₀, ρ'(0)) of
//! finite-dimensional normed spaces, with witness-backed inequality checks.

pub mod angular;
pub mod cli;
pub mod constants;
pub mod error;
pub mod norm_spaces;
pub mod optimizer;
pub mod report;
pub mod verifier;

pub use angular::{Exponent, LemmaCase};
pub use constants::{ConstantKind, EstimateResult, Witness};
pub use error::{Error, Result};
pub use norm_spaces::{NormedSpace, SpaceSpec, Vector};
pub use optimizer::OptimizerConfig;
pub use report::{Check, Finding, InequalityReport, Verdict};
