//! Numerical toolkit for the coupled semilinear system
//!
//! ```text
//!   -Δu = λ f(v),  -Δv = γ f(u)  in the unit ball B ⊂ R^N,
//!    u = v = 0                   on ∂B,
//! ```
//!
//! restricted to radial solutions. The crate provides
//!
//! * [`nonlinearity`]: preset and user-supplied `f` with the convexity ratio
//!   `τ(t) = f f'' / f'^2` and its finite-horizon bounds;
//! * [`regularity`]: the quadratic `P_f`, its largest root `α*` and the
//!   dimension threshold `N(f)` below which extremal solutions are bounded;
//! * [`grid`] and [`solver`]: a cell-centered radial discretization with a
//!   damped Newton solver on the interleaved block-tridiagonal Jacobian;
//! * [`continuation`]: minimal branches, folds `λ*(σ)`, the extremal curve and
//!   near-extremal growth diagnostics;
//! * [`stability`]: the semistability eigenvalue, the coupled principal
//!   eigenvalue, the comparison check `v ≤ u ≤ (λ/γ) v` and the integral
//!   probes used by the regularity argument.
//!
//! The dimension `N` is a real parameter throughout.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod nonlinearity;
pub mod quadrature;
pub mod regularity;
pub mod solver;
pub mod stability;

pub use continuation::{
    extremal_curve, growth_classification, growth_slope_ratio, near_extremal_profile, trace_branch,
    Branch, BranchPoint, ContinuationSettings, CurveEntry, GrowthClass, GrowthThresholds,
    NearExtremalProfile, ProfileEntry,
};
pub use error::{Error, Result};
pub use grid::RadialGrid;
pub use nonlinearity::{Nonlinearity, PresetKind, TauEstimate, TauSource};
pub use regularity::{alpha_star, nf_threshold, pf_eval, regularity_report, RegularityReport};
pub use solver::{newton_solve, residual, BlockSystem, NewtonSettings, SolutionPair};
pub use stability::{
    check_comparison, check_inequality5, coupled_eta, mu1_semistability, proof_probe,
    singular_threshold_scan, stability_report, ProofProbe, SingularScanRow, StabilityReport,
};

/// Crate version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
