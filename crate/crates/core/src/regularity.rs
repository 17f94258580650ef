//! Dimension thresholds for bounded extremal solutions.
//!
//! With `τ−, τ+` the limit bounds of `f f'' / f'^2`, the quadratic
//!
//! ```text
//!   P_f(α; τ−, τ+) = (2 − τ−)² α² − 4 (2 − τ+) α + 4 (1 − τ+)
//! ```
//!
//! is negative at `α = 1` whenever `0 < τ− ≤ τ+ < 2`, so it has a largest
//! root `α* > 1`. Extremal solutions are bounded in every dimension below
//!
//! ```text
//!   N(f) = (2 α* (2 − τ+) + 2 τ+) / τ+ · max{1, τ+}.
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::{Nonlinearity, TauSource};

/// Sample count used for sampled `τ` estimates inside reports.
pub const REPORT_TAU_SAMPLES: usize = 256;

pub fn pf_eval(alpha: f64, tau1: f64, tau2: f64) -> f64 {
    let a = 2.0 - tau1;
    a * a * alpha * alpha - 4.0 * (2.0 - tau2) * alpha + 4.0 * (1.0 - tau2)
}

pub fn is_admissible(tau_minus: f64, tau_plus: f64) -> bool {
    tau_minus > 0.0 && tau_minus <= tau_plus && tau_plus < 2.0
}

fn check_admissible(tau_minus: f64, tau_plus: f64) -> Result<()> {
    if is_admissible(tau_minus, tau_plus) {
        Ok(())
    } else {
        Err(Error::Inadmissible { tau_minus, tau_plus })
    }
}

/// Both real roots of `P_f`, largest first.
///
/// Written as `a α² − 2 b α + c` with `b = 2(2 − τ+) > 0`. The large root
/// `(b + √(b² − ac)) / a` has no cancellation; the small one comes from the
/// product of roots `c / a`, which stays accurate as `τ+ → 1` and `c → 0`.
pub fn pf_roots(tau_minus: f64, tau_plus: f64) -> Result<(f64, f64)> {
    check_admissible(tau_minus, tau_plus)?;
    let a = (2.0 - tau_minus).powi(2);
    let b = 2.0 * (2.0 - tau_plus);
    let c = 4.0 * (1.0 - tau_plus);
    let disc = b * b - a * c;
    if disc < 0.0 {
        // unreachable on the admissible set since P_f(1) < 0
        return Err(Error::Domain(format!("negative discriminant {disc}")));
    }
    let large = (b + disc.sqrt()) / a;
    let small = c / (a * large);
    Ok((large, small))
}

/// Largest root `α*` of `P_f(·; τ−, τ+)`.
pub fn alpha_star(tau_minus: f64, tau_plus: f64) -> Result<f64> {
    pf_roots(tau_minus, tau_plus).map(|(large, _)| large)
}

/// Dimension threshold `N(f)`.
pub fn nf_threshold(tau_minus: f64, tau_plus: f64) -> Result<f64> {
    let alpha = alpha_star(tau_minus, tau_plus)?;
    Ok(nf_from_alpha(alpha, tau_plus))
}

fn nf_from_alpha(alpha: f64, tau_plus: f64) -> f64 {
    (2.0 * alpha * (2.0 - tau_plus) + 2.0 * tau_plus) / tau_plus * tau_plus.max(1.0)
}

/// Largest integer strictly below `n`.
pub fn max_integer_dim(n: f64) -> i64 {
    let fl = n.floor();
    if fl == n {
        fl as i64 - 1
    } else {
        fl as i64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub alpha_star: Option<f64>,
    pub n_threshold: Option<f64>,
    pub max_integer_dim: Option<i64>,
    pub admissible: bool,
    pub tau_source: TauSource,
    pub horizon: f64,
    /// Why the report is inadmissible; empty otherwise.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<String>,
}

/// Chains `τ` bounds, `α*` and `N(f)`. Inadmissible bounds produce a report
/// with `admissible = false` instead of an error.
pub fn regularity_report(f: &Nonlinearity, horizon: f64) -> RegularityReport {
    let est = match f.tau_bounds(horizon, REPORT_TAU_SAMPLES) {
        Ok(est) => est,
        Err(e) => {
            return RegularityReport {
                tau_minus: f64::NAN,
                tau_plus: f64::NAN,
                alpha_star: None,
                n_threshold: None,
                max_integer_dim: None,
                admissible: false,
                tau_source: if f.closed_form_tau().is_some() {
                    TauSource::ClosedForm
                } else {
                    TauSource::Sampled
                },
                horizon,
                reasons: vec![e.to_string()],
            }
        }
    };
    let (tm, tp) = (est.tau_minus, est.tau_plus);
    let mut reasons = Vec::new();
    if !(tm > 0.0) {
        reasons.push(format!("tau_minus = {tm} is not positive"));
    }
    if !(tm <= tp) {
        reasons.push(format!("tau_minus = {tm} exceeds tau_plus = {tp}"));
    }
    if !(tp < 2.0) {
        reasons.push(format!("tau_plus = {tp} is not below 2"));
    }
    let (alpha, n) = if reasons.is_empty() {
        match alpha_star(tm, tp) {
            Ok(alpha) => (Some(alpha), Some(nf_from_alpha(alpha, tp))),
            Err(e) => {
                reasons.push(e.to_string());
                (None, None)
            }
        }
    } else {
        (None, None)
    };
    RegularityReport {
        tau_minus: tm,
        tau_plus: tp,
        alpha_star: alpha,
        n_threshold: n,
        max_integer_dim: n.map(max_integer_dim),
        admissible: reasons.is_empty(),
        tau_source: est.source,
        horizon,
        reasons,
    }
}
