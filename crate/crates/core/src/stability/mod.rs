//! Stability of computed solutions.
//!
//! The operational test is the semistability inequality
//!
//! ```text
//!   √(λγ) ∫ √(f'(u) f'(v)) φ² ≤ ∫ |∇φ|²     for all φ with φ(1) = 0,
//! ```
//!
//! whose discrete form is `μ1 ≥ 0` for the symmetric operator
//! `-L - √(λγ f'(u) f'(v))` in the `r^{N-1}`-weighted product. The principal
//! eigenvalue `η` of the coupled linearization is computed independently as
//! a cross-check.
//!
//! The coupling in the second equation of the coupled eigenproblem is taken
//! as `γ f'(u)`, the Fréchet derivative of `γ f(u)`.

mod probes;
mod singular;

pub use probes::{
    check_bound12, check_inequality8, hoelder_probe, proof_probe, theta_integral, theta_table,
    HoelderProbe, ProofProbe,
};
pub use singular::{
    sign_change_bracket, singular_pair_residual, singular_threshold_scan, SingularScanRow,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::linalg::{BlockSystem, SymTridiag};
use crate::nonlinearity::Nonlinearity;
use crate::solver::{jacobian, SolutionPair};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub mu1: f64,
    pub eta: f64,
    #[serde(skip)]
    pub eigenfunction: Vec<f64>,
    pub comparison_ok: bool,
    pub max_comparison_violation: f64,
}

fn require_converged(sol: &SolutionPair) -> Result<()> {
    if !sol.converged {
        return Err(Error::InvalidParameter("solution is not converged".into()));
    }
    Ok(())
}

/// Smallest eigenpair of `-L - diag(potential)` in the weighted product.
///
/// Returns `μ1` as the Rayleigh quotient of the returned eigenfunction,
/// computed with [`RadialGrid::dirichlet_energy`] and
/// [`RadialGrid::integrate`], and the eigenfunction normalized to unit
/// weighted norm with positive sign.
pub fn principal_eigenpair(grid: &RadialGrid, potential: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (kd, ko) = grid.stiffness();
    let vol = grid.volumes();
    let m = grid.cells();
    if potential.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: potential.len() });
    }
    let t = SymTridiag {
        diag: (0..m).map(|i| kd[i] / vol[i] - potential[i]).collect(),
        off: (0..m - 1).map(|i| ko[i] / (vol[i] * vol[i + 1]).sqrt()).collect(),
    };
    let (_, psi, _) = t.smallest_eigenpair()?;
    let mut phi: Vec<f64> = psi.iter().zip(vol).map(|(p, v)| p / v.sqrt()).collect();
    let norm = grid.integrate(&phi.iter().map(|p| p * p).collect::<Vec<_>>()).sqrt();
    phi.iter_mut().for_each(|p| *p /= norm);
    let mu = rayleigh_margin(grid, potential, &phi)?;
    Ok((mu, phi))
}

/// `∫|φ'|² r^{N-1} - ∫ potential φ² r^{N-1}`.
fn rayleigh_margin(grid: &RadialGrid, potential: &[f64], phi: &[f64]) -> Result<f64> {
    let energy = grid.dirichlet_energy(phi)?;
    let pot: Vec<f64> = potential.iter().zip(phi).map(|(c, p)| c * p * p).collect();
    Ok(energy - grid.integrate(&pot))
}

/// `√(λγ f'(u_i) f'(v_i))`.
pub fn semistability_potential(sol: &SolutionPair, f: &Nonlinearity) -> Vec<f64> {
    let lg = sol.lambda * sol.gamma;
    sol.u.iter().zip(&sol.v).map(|(&u, &v)| (lg * f.df(u) * f.df(v)).sqrt()).collect()
}

/// Semistability eigenvalue `μ1` and its eigenfunction.
pub fn mu1_semistability(grid: &RadialGrid, sol: &SolutionPair, f: &Nonlinearity) -> Result<(f64, Vec<f64>)> {
    require_converged(sol)?;
    principal_eigenpair(grid, &semistability_potential(sol, f))
}

/// Principal eigenvalue `η` of the coupled linearization
///
/// ```text
///   -L ζ - λ f'(v) χ = η ζ,   -L χ - γ f'(u) ζ = η χ.
/// ```
///
/// The operator has nonpositive off-diagonal entries, so `η` is real and
/// simple with a positive eigenvector, and for every positive `x`
///
/// ```text
///   min_i (A x)_i / x_i  ≤  η  ≤  max_i (A x)_i / x_i.
/// ```
///
/// Noda's iteration shifts by the lower bound and inverts, which keeps the
/// iterate positive and squeezes both bounds onto `η`.
pub fn coupled_eta(grid: &RadialGrid, sol: &SolutionPair, f: &Nonlinearity) -> Result<f64> {
    require_converged(sol)?;
    let a = jacobian(grid, f, sol.lambda, sol.gamma, &sol.u, &sol.v)?;
    let (_, phi) = mu1_semistability(grid, sol, f)?;
    let start: Vec<f64> = phi.iter().map(|p| p.abs().max(f64::MIN_POSITIVE)).collect();
    noda_principal_eigenvalue(&a, &start, &start)
}

/// Collatz–Wielandt bounds `(min, max)` of `(A x)_i / x_i`.
fn collatz_bounds(a: &BlockSystem, xu: &[f64], xv: &[f64]) -> (f64, f64) {
    let (au, av) = a.apply(xu, xv);
    let ratios = au.iter().zip(xu).chain(av.iter().zip(xv)).map(|(ax, x)| ax / x);
    ratios.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

pub(crate) fn noda_principal_eigenvalue(a: &BlockSystem, xu: &[f64], xv: &[f64]) -> Result<f64> {
    const MAX_ITERS: usize = 60;
    let mut xu = xu.to_vec();
    let mut xv = xv.to_vec();
    let (mut lo, mut hi) = collatz_bounds(a, &xu, &xv);
    let mut best = (lo, hi);
    let scale = a.diag.iter().map(|d| d[0][0].abs()).fold(1.0, f64::max);
    let target = |lo: f64| 1e-11 * (1.0 + lo.abs());
    let mut stalls = 0;
    for iter in 0..MAX_ITERS {
        if hi - lo <= target(lo) {
            return Ok(0.5 * (lo + hi));
        }
        // a shift exactly at η is singular; back off by a hair
        let shift = lo - 16.0 * f64::EPSILON * scale;
        let lu = a.shifted(shift).factor()?;
        let (yu, yv) = lu.solve(&xu, &xv);
        let norm = yu.iter().chain(&yv).fold(0.0, |acc: f64, y| acc.max(y.abs()));
        if !norm.is_finite() || yu.iter().chain(&yv).any(|&y| !(y > 0.0)) {
            // lost positivity at round-off level; keep the best bounds so far
            break;
        }
        xu = yu.iter().map(|y| y / norm).collect();
        xv = yv.iter().map(|y| y / norm).collect();
        let (l, h) = collatz_bounds(a, &xu, &xv);
        lo = l;
        hi = h;
        if hi - lo < best.1 - best.0 {
            best = (lo, hi);
            stalls = 0;
        } else {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        }
        if iter + 1 == MAX_ITERS {
            break;
        }
    }
    let (lo, hi) = best;
    // bounds stagnate at the round-off level of (A x)_i / x_i
    if hi - lo <= 1e-7 * (1.0 + lo.abs()) {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::EigenStagnation { residual: hi - lo, iterations: MAX_ITERS })
    }
}

/// Comparison check `v ≤ u ≤ (λ/γ) v`, valid for `λ ≥ γ > 0`.
///
/// Returns whether the largest nodewise violation is within `tolerance`,
/// and that violation.
pub fn check_comparison(sol: &SolutionPair, tolerance: f64) -> Result<(bool, f64)> {
    require_converged(sol)?;
    if !(sol.gamma > 0.0 && sol.lambda >= sol.gamma) {
        return Err(Error::InvalidParameter(format!(
            "comparison needs λ >= γ > 0, got λ={}, γ={}",
            sol.lambda, sol.gamma
        )));
    }
    let ratio = sol.lambda / sol.gamma;
    let worst = sol
        .u
        .iter()
        .zip(&sol.v)
        .map(|(&u, &v)| (v - u).max(u - ratio * v).max(0.0))
        .fold(0.0, f64::max);
    Ok((worst <= tolerance, worst))
}

/// Margins `∫|φ'|² - √(λγ) ∫ √(f'(u) f'(v)) φ²` for nodal test functions.
///
/// The boundary condition `φ(1) = 0` is built into the discrete Dirichlet
/// form, so any nodal vector is admissible.
pub fn check_inequality5(
    grid: &RadialGrid,
    sol: &SolutionPair,
    f: &Nonlinearity,
    test_functions: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let potential = semistability_potential(sol, f);
    test_functions.iter().map(|phi| rayleigh_margin(grid, &potential, phi)).collect()
}

/// Random polynomials `(1 - r) p(r)` with `deg p ≤ 6` and coefficients in
/// `[-1, 1]`, sampled at the grid nodes.
pub fn random_test_functions(grid: &RadialGrid, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let degree = rng.gen_range(0..=6);
            let coef: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            grid.nodes()
                .iter()
                .map(|&r| (1.0 - r) * coef.iter().rev().fold(0.0, |acc, c| acc * r + c))
                .collect()
        })
        .collect()
}

/// `μ1`, `η` and the comparison check for one solution. The comparison is
/// skipped (reported as passing with zero violation) when `γ > λ` or `γ = 0`.
pub fn stability_report(
    grid: &RadialGrid,
    sol: &SolutionPair,
    f: &Nonlinearity,
    comparison_tol: f64,
) -> Result<StabilityReport> {
    let (mu1, eigenfunction) = mu1_semistability(grid, sol, f)?;
    let eta = coupled_eta(grid, sol, f)?;
    let (comparison_ok, max_comparison_violation) = if sol.gamma > 0.0 && sol.lambda >= sol.gamma {
        check_comparison(sol, comparison_tol)?
    } else if sol.lambda > 0.0 && sol.gamma > sol.lambda {
        check_comparison(&sol.swapped(), comparison_tol)?
    } else {
        (true, 0.0)
    };
    Ok(StabilityReport { mu1, eta, eigenfunction, comparison_ok, max_comparison_violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{newton_solve, NewtonSettings};

    fn solve(grid: &RadialGrid, f: &Nonlinearity, lambda: f64, gamma: f64) -> SolutionPair {
        let z = vec![0.0; grid.cells()];
        newton_solve(grid, f, lambda, gamma, (&z, &z), &NewtonSettings::default()).unwrap()
    }

    #[test]
    fn dirichlet_neumann_eigenvalue_on_the_interval() {
        let g = RadialGrid::new(1.0, 1024).unwrap();
        let sol = SolutionPair::zero(1024);
        let (mu, phi) = mu1_semistability(&g, &sol, &Nonlinearity::exponential()).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 4.0;
        assert!((mu - exact).abs() < 1e-3, "{mu}");
        assert!(phi.iter().all(|&p| p > 0.0));
        // cos(πr/2) shape
        let c = phi[0];
        for (r, p) in g.nodes().iter().zip(&phi).step_by(97) {
            assert!((p / c - (std::f64::consts::FRAC_PI_2 * r).cos()).abs() < 1e-3);
        }
    }

    #[test]
    fn rayleigh_identity() {
        let g = RadialGrid::new(2.0, 256).unwrap();
        let e = Nonlinearity::exponential();
        let sol = solve(&g, &e, 1.2, 0.6);
        let (mu, phi) = mu1_semistability(&g, &sol, &e).unwrap();
        let margin = check_inequality5(&g, &sol, &e, std::slice::from_ref(&phi)).unwrap()[0];
        let norm2 = g.integrate(&phi.iter().map(|p| p * p).collect::<Vec<_>>());
        assert!((margin - mu * norm2).abs() < 1e-8 * norm2);
        assert_eq!(check_inequality5(&g, &sol, &e, &[vec![0.0; 256]]).unwrap(), vec![0.0]);
    }

    #[test]
    fn eta_matches_mu1_for_symmetric_pairs() {
        let g = RadialGrid::new(2.0, 256).unwrap();
        let e = Nonlinearity::exponential();
        for lambda in [0.0, 0.5, 1.5, 1.95] {
            let sol = if lambda == 0.0 { SolutionPair::zero(256) } else { solve(&g, &e, lambda, lambda) };
            let (mu, _) = mu1_semistability(&g, &sol, &e).unwrap();
            let eta = coupled_eta(&g, &sol, &e).unwrap();
            assert!((eta - mu).abs() <= 1e-6 * (1.0 + mu.abs()), "λ={lambda}: η={eta} μ1={mu}");
        }
    }

    #[test]
    fn eta_positive_on_asymmetric_minimal_solution() {
        let g = RadialGrid::new(3.0, 256).unwrap();
        let e = Nonlinearity::exponential();
        let sol = solve(&g, &e, 3.0, 1.0);
        let eta = coupled_eta(&g, &sol, &e).unwrap();
        let (mu, _) = mu1_semistability(&g, &sol, &e).unwrap();
        assert!(eta > 0.0 && mu > 0.0, "η={eta} μ1={mu}");
    }

    #[test]
    fn comparison_examples() {
        let g = RadialGrid::new(3.0, 128).unwrap();
        let e = Nonlinearity::exponential();
        let sym = solve(&g, &e, 2.0, 2.0);
        let (ok, viol) = check_comparison(&sym, 1e-9).unwrap();
        assert!(ok && viol <= 1e-9);

        let asym = solve(&g, &e, 3.0, 1.5);
        assert!(check_comparison(&asym, 1e-9).unwrap().0);

        let mut bad = sym.clone();
        bad.u[40] -= 1e-3;
        let (ok, viol) = check_comparison(&bad, 1e-9).unwrap();
        assert!(!ok);
        assert!((viol - 1e-3).abs() < 1e-9);

        assert!(check_comparison(&asym.swapped(), 1e-9).is_err());
    }

    #[test]
    fn random_test_functions_are_deterministic() {
        let g = RadialGrid::new(2.0, 64).unwrap();
        assert_eq!(random_test_functions(&g, 5, 11), random_test_functions(&g, 5, 11));
        assert_ne!(random_test_functions(&g, 5, 11), random_test_functions(&g, 5, 12));
    }

    #[test]
    fn unconverged_solutions_are_rejected() {
        let g = RadialGrid::new(2.0, 32).unwrap();
        let mut sol = SolutionPair::zero(32);
        sol.converged = false;
        assert!(mu1_semistability(&g, &sol, &Nonlinearity::exponential()).is_err());
    }
}
