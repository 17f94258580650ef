//! Fixtures shared by the benchmarks.

use extremal_core::{newton_solve, NewtonSettings, Nonlinearity, RadialGrid, SolutionPair};

/// A converged exponential solution at `(λ, σλ)` on `m` cells in dimension `n`.
pub fn exp_solution(n: f64, m: usize, lambda: f64, sigma: f64) -> (RadialGrid, Nonlinearity, SolutionPair) {
    let grid = RadialGrid::new(n, m).expect("valid grid");
    let f = Nonlinearity::exponential();
    let z = vec![0.0; m];
    let sol = newton_solve(&grid, &f, lambda, sigma * lambda, (&z, &z), &NewtonSettings::default())
        .expect("below the fold");
    (grid, f, sol)
}
