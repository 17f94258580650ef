//! Discrete radial system
//!
//! ```text
//!   R_u = -L u - λ f(v),   R_v = -L v - γ f(u)
//! ```
//!
//! and its damped Newton solver. Unknowns are interleaved per node so the
//! Jacobian is block tridiagonal with 2×2 blocks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
pub use crate::linalg::BlockSystem;
use crate::nonlinearity::Nonlinearity;

/// Nodal solution of the discrete system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub lambda: f64,
    pub gamma: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub newton_iters: usize,
}

impl SolutionPair {
    /// The trivial pair `u = v = 0` at `λ = γ = 0`.
    pub fn zero(m: usize) -> Self {
        Self {
            u: vec![0.0; m],
            v: vec![0.0; m],
            lambda: 0.0,
            gamma: 0.0,
            residual_norm: 0.0,
            converged: true,
            newton_iters: 0,
        }
    }

    pub fn sup_u(&self) -> f64 {
        sup_norm(&self.u)
    }

    pub fn sup_v(&self) -> f64 {
        sup_norm(&self.v)
    }

    /// Same solution with the roles of `(u, λ)` and `(v, γ)` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            u: self.v.clone(),
            v: self.u.clone(),
            lambda: self.gamma,
            gamma: self.lambda,
            ..self.clone()
        }
    }
}

pub(crate) fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonSettings {
    /// Sup-norm residual target. Targets below the round-off floor of the
    /// discrete operator (`~ ε ‖L‖ ‖u‖`) are raised to that floor.
    pub tol: f64,
    pub max_iters: usize,
    /// Smallest step fraction tried before giving up.
    pub min_damping: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 60, min_damping: 2f64.powi(-20) }
    }
}

fn check_lengths(grid: &RadialGrid, u: &[f64], v: &[f64]) -> Result<()> {
    for w in [u, v] {
        if w.len() != grid.cells() {
            return Err(Error::LengthMismatch { expected: grid.cells(), got: w.len() });
        }
    }
    Ok(())
}

pub fn residual(
    grid: &RadialGrid,
    f: &Nonlinearity,
    lambda: f64,
    gamma: f64,
    u: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lengths(grid, u, v)?;
    Ok(residual_unchecked(grid, f, lambda, gamma, u, v))
}

fn residual_unchecked(
    grid: &RadialGrid,
    f: &Nonlinearity,
    lambda: f64,
    gamma: f64,
    u: &[f64],
    v: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let m = grid.cells();
    let mut ru = vec![0.0; m];
    let mut rv = vec![0.0; m];
    grid.laplacian_into(u, &mut ru);
    grid.laplacian_into(v, &mut rv);
    for i in 0..m {
        ru[i] = -ru[i] - lambda * f.f(v[i]);
        rv[i] = -rv[i] - gamma * f.f(u[i]);
    }
    (ru, rv)
}

/// Exact derivative of [`residual`]:
/// `[[-L, -λ diag f'(v)], [-γ diag f'(u), -L]]`.
pub fn jacobian(
    grid: &RadialGrid,
    f: &Nonlinearity,
    lambda: f64,
    gamma: f64,
    u: &[f64],
    v: &[f64],
) -> Result<BlockSystem> {
    check_lengths(grid, u, v)?;
    let (lower, d, upper) = grid.neg_laplacian_rows();
    let diag = (0..grid.cells())
        .map(|i| [[d[i], -lambda * f.df(v[i])], [-gamma * f.df(u[i]), d[i]]])
        .collect();
    Ok(BlockSystem { lower, diag, upper })
}

/// Round-off floor of the residual at state `(u, v)`.
fn residual_floor(grid: &RadialGrid, f: &Nonlinearity, lambda: f64, gamma: f64, u: &[f64], v: &[f64]) -> f64 {
    let (l, d, up) = grid.neg_laplacian_rows();
    let op_norm = (0..grid.cells()).map(|i| l[i].abs() + d[i].abs() + up[i].abs()).fold(0.0, f64::max);
    let size = sup_norm(u).max(sup_norm(v));
    let source = lambda.max(gamma) * f.f(size);
    64.0 * f64::EPSILON * (op_norm * size + source)
}

/// Damped Newton from `init`. A step is halved, down to
/// `settings.min_damping`, while it neither lowers the sup-norm residual nor
/// shrinks the simplified Newton correction.
pub fn newton_solve(
    grid: &RadialGrid,
    f: &Nonlinearity,
    lambda: f64,
    gamma: f64,
    init: (&[f64], &[f64]),
    settings: &NewtonSettings,
) -> Result<SolutionPair> {
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", settings.tol)));
    }
    if !(lambda >= 0.0 && gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("need λ, γ >= 0, got ({lambda}, {gamma})")));
    }
    check_lengths(grid, init.0, init.1)?;
    let mut u = init.0.to_vec();
    let mut v = init.1.to_vec();
    let (ru, rv) = residual_unchecked(grid, f, lambda, gamma, &u, &v);
    let mut res = sup_norm(&ru).max(sup_norm(&rv));
    let mut r = (ru, rv);

    let fail = |u: Vec<f64>, v: Vec<f64>, res: f64, iterations: usize| Error::NonConvergence {
        lambda,
        gamma,
        residual: res,
        iterations,
        last: Box::new(SolutionPair {
            u,
            v,
            lambda,
            gamma,
            residual_norm: res,
            converged: false,
            newton_iters: iterations,
        }),
    };

    for iter in 0..=settings.max_iters {
        let target = settings.tol.max(residual_floor(grid, f, lambda, gamma, &u, &v));
        if res.is_finite() && res <= target {
            return Ok(SolutionPair {
                u,
                v,
                lambda,
                gamma,
                residual_norm: res,
                converged: true,
                newton_iters: iter,
            });
        }
        if iter == settings.max_iters || !res.is_finite() {
            return Err(fail(u, v, res, iter));
        }
        let jac = jacobian(grid, f, lambda, gamma, &u, &v)?;
        let lu = match jac.factor() {
            Ok(lu) => lu,
            Err(_) => return Err(fail(u, v, res, iter)),
        };
        let (du, dv) = lu.solve(&r.0, &r.1);
        let dnorm = sup_norm(&du).max(sup_norm(&dv));

        let mut step = 1.0;
        loop {
            let tu: Vec<f64> = u.iter().zip(&du).map(|(x, d)| x - step * d).collect();
            let tv: Vec<f64> = v.iter().zip(&dv).map(|(x, d)| x - step * d).collect();
            let tr = residual_unchecked(grid, f, lambda, gamma, &tu, &tv);
            let tres = sup_norm(&tr.0).max(sup_norm(&tr.1));
            // Accept on a residual decrease, or when the simplified Newton
            // correction shrinks; the latter is insensitive to the row
            // scaling, which varies like 1/h² near the origin.
            let accept = tres < res || {
                let (bu, bv) = lu.solve(&tr.0, &tr.1);
                tres.is_finite() && sup_norm(&bu).max(sup_norm(&bv)) <= (1.0 - 0.25 * step) * dnorm
            };
            if accept {
                u = tu;
                v = tv;
                r = tr;
                res = tres;
                break;
            }
            step *= 0.5;
            if step < settings.min_damping {
                return Err(fail(u, v, res, iter + 1));
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn residual_examples() {
        let g = RadialGrid::new(3.0, 32).unwrap();
        let e = Nonlinearity::exponential();
        let z = vec![0.0; 32];
        let (ru, rv) = residual(&g, &e, 0.0, 0.0, &z, &z).unwrap();
        assert!(ru.iter().chain(&rv).all(|&x| x == 0.0));
        let (ru, rv) = residual(&g, &e, 1.0, 2.0, &z, &z).unwrap();
        assert!(ru.iter().all(|&x| x == -1.0));
        assert!(rv.iter().all(|&x| x == -2.0));
        let w: Vec<f64> = g.nodes().iter().map(|r| 0.3 * (1.0 - r * r)).collect();
        let (ru, rv) = residual(&g, &e, 0.7, 0.7, &w, &w).unwrap();
        assert_eq!(ru, rv);
        assert!(residual(&g, &e, 1.0, 1.0, &z[..3], &z).is_err());
    }

    #[test]
    fn jacobian_structure() {
        let g = RadialGrid::new(2.0, 20).unwrap();
        let e = Nonlinearity::exponential();
        let w: Vec<f64> = g.nodes().iter().map(|r| 1.0 - r * r).collect();
        let j = jacobian(&g, &e, 0.0, 0.0, &w, &w).unwrap();
        assert!(j.diag.iter().all(|d| d[0][1] == 0.0 && d[1][0] == 0.0));
        let j = jacobian(&g, &e, 0.8, 0.8, &w, &w).unwrap();
        assert!(j.diag.iter().all(|d| d[0][1] == d[1][0] && d[0][0] == d[1][1]));
    }

    #[test]
    fn jacobian_matches_directional_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in ["exp", "pow:2", "pow:4", "exppow:2"] {
            let f: Nonlinearity = spec.parse().unwrap();
            for n_dim in [1.0, 2.0, 3.5] {
                let g = RadialGrid::new(n_dim, 64).unwrap();
                let u: Vec<f64> = g.nodes().iter().map(|r| (1.0 - r * r) * rng.gen_range(0.1..2.0)).collect();
                let v: Vec<f64> = g.nodes().iter().map(|r| (1.0 - r) * rng.gen_range(0.1..2.0)).collect();
                let du: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let dv: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let (lambda, gamma) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
                let eps = 1e-5;
                let r0 = residual(&g, &f, lambda, gamma, &u, &v).unwrap();
                let up: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + eps * b).collect();
                let vp: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + eps * b).collect();
                let r1 = residual(&g, &f, lambda, gamma, &up, &vp).unwrap();
                let (ju, jv) = jacobian(&g, &f, lambda, gamma, &u, &v).unwrap().apply(&du, &dv);
                let num: f64 = (0..64)
                    .map(|i| (r1.0[i] - r0.0[i] - eps * ju[i]).powi(2) + (r1.1[i] - r0.1[i] - eps * jv[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let den: f64 = (0..64).map(|i| (eps * ju[i]).powi(2) + (eps * jv[i]).powi(2)).sum::<f64>().sqrt();
                assert!(num / den < 1e-6, "{spec} N={n_dim}: {}", num / den);
            }
        }
    }

    #[test]
    fn trivial_solve() {
        let g = RadialGrid::new(3.0, 64).unwrap();
        let z = vec![0.0; 64];
        let s = newton_solve(&g, &Nonlinearity::exponential(), 0.0, 0.0, (&z, &z), &NewtonSettings::default()).unwrap();
        assert!(s.converged && s.newton_iters <= 1);
        assert!(s.u.iter().chain(&s.v).all(|&x| x == 0.0));
    }

    #[test]
    fn small_lambda_matches_leading_order() {
        let g = RadialGrid::new(3.0, 512).unwrap();
        let z = vec![0.0; 512];
        let lambda = 1e-3;
        let s = newton_solve(&g, &Nonlinearity::exponential(), lambda, lambda, (&z, &z), &NewtonSettings::default()).unwrap();
        let center = g.center_value(&s.u);
        assert!((center - lambda / 6.0).abs() < 2e-6, "{center}");
    }

    #[test]
    fn swap_covariance_is_exact() {
        let g = RadialGrid::new(2.0, 128).unwrap();
        let e = Nonlinearity::exponential();
        let z = vec![0.0; 128];
        let set = NewtonSettings::default();
        let a = newton_solve(&g, &e, 1.0, 0.4, (&z, &z), &set).unwrap();
        let b = newton_solve(&g, &e, 0.4, 1.0, (&z, &z), &set).unwrap();
        assert_eq!(a.u, b.v);
        assert_eq!(a.v, b.u);
        assert_eq!(a.newton_iters, b.newton_iters);
    }

    #[test]
    fn symmetric_parameters_give_equal_components() {
        let g = RadialGrid::new(2.0, 256).unwrap();
        let z = vec![0.0; 256];
        let set = NewtonSettings::default();
        let s = newton_solve(&g, &Nonlinearity::power(2.0).unwrap(), 0.9, 0.9, (&z, &z), &set).unwrap();
        assert!(max_abs_diff(&s.u, &s.v) <= 10.0 * set.tol);
        assert!(s.u.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn beyond_the_fold_fails_with_last_iterate() {
        let g = RadialGrid::new(2.0, 128).unwrap();
        let z = vec![0.0; 128];
        match newton_solve(&g, &Nonlinearity::exponential(), 2.5, 2.5, (&z, &z), &NewtonSettings::default()) {
            Err(Error::NonConvergence { last, .. }) => {
                assert!(!last.converged);
                assert_eq!(last.u.len(), 128);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_settings() {
        let g = RadialGrid::new(2.0, 16).unwrap();
        let z = vec![0.0; 16];
        let bad = NewtonSettings { tol: 0.0, ..Default::default() };
        assert!(newton_solve(&g, &Nonlinearity::exponential(), 1.0, 1.0, (&z, &z), &bad).is_err());
    }
}
