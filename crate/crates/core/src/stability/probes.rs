//! Integral probes from the boundedness argument, evaluated on computed
//! solutions.
//!
//! With `f̃ = f - 1` and the test function `φ = f̃(u)^α / f'(u)^{α/2}`,
//! semistability gives
//!
//! ```text
//!   √(λγ) ∫ f'(u)^{1/2-α} f'(v)^{1/2} f̃(u)^{2α}  ≤  λ ∫ θ(u) f(v),
//!   θ(t) = α² ∫_0^t f̃^{2α-2} f'^{2-α} (1 - f̃ f'' / (2 f'^2))² ds,
//! ```
//!
//! and Hölder's inequality gives
//!
//! ```text
//!   ∫ f̃(u)^{2α-1} f'(u)^{1-α} f̃(v)  ≤  I^{(2α-1)/2α} J^{1/2α}
//! ```
//!
//! with `I` the left integral above and `J` its mirror in `(u, v)`.
//! All integrands are formed in log space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::{integrate, log_sum_exp};
use crate::regularity::pf_eval;
use crate::solver::SolutionPair;

const THETA_REL_TOL: f64 = 1e-12;

/// `exp` of a sum of `exponent · log-factor` terms. A `-inf` factor with a
/// positive exponent forces the product to zero, whatever the other factors.
fn ln_product(terms: &[(f64, f64)]) -> f64 {
    if terms.iter().any(|&(e, l)| e > 0.0 && l == f64::NEG_INFINITY) {
        return f64::NEG_INFINITY;
    }
    terms.iter().map(|&(e, l)| if e == 0.0 { 0.0 } else { e * l }).sum()
}

fn theta_integrand(f: &Nonlinearity, alpha: f64, s: f64) -> f64 {
    let (lft, ldf, lddf) = (f.ln_ftilde(s), f.ln_df(s), f.ln_ddf(s));
    let ratio = if lddf == f64::NEG_INFINITY { 0.0 } else { (lft + lddf - 2.0 * ldf).exp() };
    let factor = (1.0 - 0.5 * ratio).powi(2);
    alpha * alpha * ln_product(&[(2.0 * alpha - 2.0, lft), (2.0 - alpha, ldf)]).exp() * factor
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be >= 1, got {alpha}")));
    }
    Ok(())
}

/// `θ(t)` by adaptive Gauss–Kronrod quadrature.
pub fn theta_integral(f: &Nonlinearity, alpha: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("theta needs t >= 0, got {t}")));
    }
    integrate(|s| theta_integrand(f, alpha, s), 0.0, t, 0.0, THETA_REL_TOL)
}

/// `θ` at every point of `ts` (any order), integrating once across the
/// sorted points.
pub fn theta_table(f: &Nonlinearity, alpha: f64, ts: &[f64]) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));
    let mut out = vec![0.0; ts.len()];
    let (mut prev_t, mut acc) = (0.0, 0.0);
    for k in order {
        let t = ts[k];
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("theta needs t >= 0, got {t}")));
        }
        if t > prev_t {
            acc += integrate(|s| theta_integrand(f, alpha, s), prev_t, t, 0.0, THETA_REL_TOL)?;
            prev_t = t;
        }
        out[k] = acc;
    }
    Ok(out)
}

/// `ln ∫ exp(g) r^{N-1} dr` over the grid.
fn ln_integral(grid: &RadialGrid, ln_g: impl Iterator<Item = f64>) -> f64 {
    log_sum_exp(ln_g.zip(grid.volumes()).map(|(g, v)| g + v.ln()))
}

fn ln_i(f: &Nonlinearity, alpha: f64, a: f64, b: f64) -> f64 {
    ln_product(&[(0.5 - alpha, f.ln_df(a)), (0.5, f.ln_df(b)), (2.0 * alpha, f.ln_ftilde(a))])
}

/// Both sides of the semistability-derived inequality, `(lhs, rhs)`.
pub fn check_inequality8(grid: &RadialGrid, sol: &SolutionPair, f: &Nonlinearity, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let ln_lhs = 0.5 * (sol.lambda * sol.gamma).ln()
        + ln_integral(grid, sol.u.iter().zip(&sol.v).map(|(&u, &v)| ln_i(f, alpha, u, v)));
    let lhs = if sol.lambda * sol.gamma == 0.0 { 0.0 } else { ln_lhs.exp() };
    let theta = theta_table(f, alpha, &sol.u)?;
    let g: Vec<f64> = theta.iter().zip(&sol.v).map(|(th, &v)| th * f.f(v)).collect();
    let rhs = sol.lambda * grid.integrate(&g);
    Ok((lhs, rhs))
}

/// Margins `C₁ f̃(t)^{τ₂} - f'(t)` with `C₁ = f'(T) / f̃(T)^{τ₂}`.
///
/// Requires `τ(t) ≤ τ₂` on `[T, max ts]`, checked on a geometric grid.
pub fn check_bound12(f: &Nonlinearity, tau2: f64, t0: f64, ts: &[f64]) -> Result<Vec<f64>> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter(format!("T must be positive, got {t0}")));
    }
    let t_max = ts.iter().copied().fold(t0, f64::max);
    let grid: Vec<f64> = if t_max > t0 {
        crate::nonlinearity::geometric_grid(t0, t_max, 512).collect()
    } else {
        vec![t0]
    };
    for t in grid {
        let tau = f.tau_at(t)?;
        if tau > tau2 * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("tau({t}) = {tau} exceeds tau2 = {tau2}")));
        }
    }
    let (dft0, lft0) = (f.df(t0), f.ln_ftilde(t0));
    Ok(ts
        .iter()
        .map(|&t| {
            let scaled = if t == t0 { dft0 } else { dft0 * (tau2 * (f.ln_ftilde(t) - lft0)).exp() };
            scaled - f.df(t)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HoelderProbe {
    pub lhs: f64,
    pub i: f64,
    pub j: f64,
    pub rhs: f64,
    pub ln_lhs: f64,
    pub ln_i: f64,
    pub ln_j: f64,
    pub ln_rhs: f64,
}

impl HoelderProbe {
    /// `lhs ≤ rhs · (1 + rel)`, compared in log space.
    pub fn holds(&self, rel: f64) -> bool {
        self.ln_lhs == f64::NEG_INFINITY || self.ln_lhs <= self.ln_rhs + rel.ln_1p()
    }
}

/// Hölder step: `(lhs, I, J, rhs)`, each also in log form.
pub fn hoelder_probe(grid: &RadialGrid, sol: &SolutionPair, f: &Nonlinearity, alpha: f64) -> Result<HoelderProbe> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    let pairs = || sol.u.iter().zip(&sol.v);
    let ln_lhs = ln_integral(
        grid,
        pairs().map(|(&u, &v)| {
            ln_product(&[(2.0 * alpha - 1.0, f.ln_ftilde(u)), (1.0 - alpha, f.ln_df(u)), (1.0, f.ln_ftilde(v))])
        }),
    );
    let ln_i_val = ln_integral(grid, pairs().map(|(&u, &v)| ln_i(f, alpha, u, v)));
    let ln_j_val = ln_integral(grid, pairs().map(|(&u, &v)| ln_i(f, alpha, v, u)));
    let p = (2.0 * alpha - 1.0) / (2.0 * alpha);
    let q = 1.0 / (2.0 * alpha);
    let ln_rhs = ln_product(&[(p, ln_i_val), (q, ln_j_val)]);
    Ok(HoelderProbe {
        lhs: ln_lhs.exp(),
        i: ln_i_val.exp(),
        j: ln_j_val.exp(),
        rhs: ln_rhs.exp(),
        ln_lhs,
        ln_i: ln_i_val,
        ln_j: ln_j_val,
        ln_rhs,
    })
}

/// All probes for one solution and one exponent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofProbe {
    pub alpha: f64,
    /// `(t, θ(t))` at nine equispaced points of `[0, sup u]`.
    pub theta_values: Vec<(f64, f64)>,
    pub ineq8_lhs: f64,
    pub ineq8_rhs: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub hoelder_lhs: f64,
    pub hoelder_rhs: f64,
    /// Whether some `τ₁ < τ−`, `τ₂ > τ+` close to the closed-form bounds give
    /// `P_f(α; τ₁, τ₂) < 0`; `None` without closed-form bounds.
    pub alpha_in_window: Option<bool>,
}

pub fn proof_probe(grid: &RadialGrid, sol: &SolutionPair, f: &Nonlinearity, alpha: f64) -> Result<ProofProbe> {
    let (ineq8_lhs, ineq8_rhs) = check_inequality8(grid, sol, f, alpha)?;
    let h = hoelder_probe(grid, sol, f, alpha)?;
    let top = sol.sup_u();
    let ts: Vec<f64> = (0..9).map(|k| top * k as f64 / 8.0).collect();
    let theta = theta_table(f, alpha, &ts)?;
    let alpha_in_window = f.closed_form_tau().map(|(tm, tp)| {
        let d = 1e-9;
        pf_eval(alpha, (tm - d).max(0.0), tp + d) < 0.0
    });
    Ok(ProofProbe {
        alpha,
        theta_values: ts.into_iter().zip(theta).collect(),
        ineq8_lhs,
        ineq8_rhs,
        i: h.i,
        j: h.j,
        hoelder_lhs: h.lhs,
        hoelder_rhs: h.rhs,
        alpha_in_window,
    })
}
