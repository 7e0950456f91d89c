//! Exact arithmetic for arithmetic sequences `1 = a_0 < a_1 < ...` with
//! `a_{n-1} | a_n`, their derived sequences, canonical mixed-radix expansions
//! of points of `T = R/Z`, finite-horizon natural densities and
//! statistical-convergence verdicts.

pub mod constructions;
pub mod density;
pub mod error;
pub mod membership;
pub mod reproduce;
pub mod scan;
pub mod sequence;
pub mod torus;

pub use density::{density_upto, scaled_union_density, BlockUnion, DensityEstimate, IndexSet};
pub use error::{Error, Result};
pub use membership::{
    classical_verdict, statistical_verdict, structural_classical_member, structural_s_nonmember,
    verdicts, Verdict, VerdictConfig, VerdictReport,
};
pub use reproduce::{reproduce, Check, ReproReport};
pub use scan::{scan_norms, Along, NormScan, ScanConfig};
pub use sequence::{ArithSeq, DerivedSeq, NamedRule, RatioSpec};
pub use torus::{
    canonical_expansion, evaluate, frac_mul, norm, DigitExpansion, NormEnclosure, Rational01,
    TorusPoint,
};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
