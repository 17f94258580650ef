//! Stability of the explicit singular pair `u = v = -2 ln r`,
//! `λ = γ = 2(N-2)`, for the exponential nonlinearity.
//!
//! The potential `λ e^u = 2(N-2)/r²` is not integrable against the
//! cell-centered midpoint rule near the origin, so the principal eigenvalue
//! uses a piecewise-linear Galerkin discretization whose element integrals
//! are exact in the singular first cell. The eigenvalue is located by
//! inertia counting on `A - xB`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

const GAUSS_POINTS: usize = 16;
const WINDOW: (f64, f64) = (0.1, 0.9);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularScanRow {
    pub n_dim: f64,
    pub mu1: f64,
    /// RMS residual of the singular pair on the interior window.
    pub residual_norm: f64,
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `(LL, LR, RR)` element moments `∫ r^p φ_a φ_b` on `[0, h]` with hat
/// functions `1 - r/h`, `r/h`; exact for `p > -1`.
fn first_cell_moments(p: f64, h: f64) -> (f64, f64, f64) {
    let s = h.powf(p + 1.0);
    (
        2.0 / ((p + 1.0) * (p + 2.0) * (p + 3.0)) * s,
        1.0 / ((p + 2.0) * (p + 3.0)) * s,
        1.0 / (p + 3.0) * s,
    )
}

fn cell_moments(p: f64, a: f64, h: f64, gl: &[(f64, f64)]) -> (f64, f64, f64) {
    let (mut ll, mut lr, mut rr) = (0.0, 0.0, 0.0);
    for &(s, w) in gl {
        let wr = w * h * (a + h * s).powf(p);
        ll += wr * (1.0 - s) * (1.0 - s);
        lr += wr * (1.0 - s) * s;
        rr += wr * s * s;
    }
    (ll, lr, rr)
}

/// Assembled tridiagonal pencil `(A, B)` on vertices `0..m`, vertex `m`
/// clamped to zero.
struct Pencil {
    a_diag: Vec<f64>,
    a_off: Vec<f64>,
    b_diag: Vec<f64>,
    b_off: Vec<f64>,
}

impl Pencil {
    fn assemble(n_dim: f64, m: usize) -> Pencil {
        let h = 1.0 / m as f64;
        let c = 2.0 * (n_dim - 2.0);
        let gl = gauss_legendre(GAUSS_POINTS);
        let mut a_diag = vec![0.0; m];
        let mut a_off = vec![0.0; m - 1];
        let mut b_diag = vec![0.0; m];
        let mut b_off = vec![0.0; m - 1];
        for e in 0..m {
            let a = e as f64 * h;
            let k = ((a + h).powf(n_dim) - a.powf(n_dim)) / n_dim / (h * h);
            let (pot, mass) = if c == 0.0 {
                ((0.0, 0.0, 0.0), cell_moments(n_dim - 1.0, a, h, &gl))
            } else if e == 0 {
                (first_cell_moments(n_dim - 3.0, h), first_cell_moments(n_dim - 1.0, h))
            } else {
                (cell_moments(n_dim - 3.0, a, h, &gl), cell_moments(n_dim - 1.0, a, h, &gl))
            };
            a_diag[e] += k - c * pot.0;
            b_diag[e] += mass.0;
            if e + 1 < m {
                a_diag[e + 1] += k - c * pot.2;
                b_diag[e + 1] += mass.2;
                a_off[e] += -k - c * pot.1;
                b_off[e] += mass.1;
            }
        }
        Pencil { a_diag, a_off, b_diag, b_off }
    }

    /// Number of generalized eigenvalues below `x` (negative pivots of
    /// `A - xB`).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..self.a_diag.len() {
            let diag = self.a_diag[i] - x * self.b_diag[i];
            d = if i == 0 {
                diag
            } else {
                let off = self.a_off[i - 1] - x * self.b_off[i - 1];
                diag - off * off / d
            };
            if d == 0.0 {
                d = -f64::EPSILON * diag.abs().max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn smallest_eigenvalue(&self) -> Result<f64> {
        let mut lo = -1.0;
        while self.count_below(lo) > 0 {
            lo *= 2.0;
            if !lo.is_finite() {
                return Err(Error::Domain("no lower bound for the singular pencil".into()));
            }
        }
        let mut hi = 1.0;
        while self.count_below(hi) == 0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Domain("no upper bound for the singular pencil".into()));
            }
        }
        while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > 0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Volume-weighted RMS of `-Δu - λ e^u` for the singular pair over the
/// cells with centers in `[0.1, 0.9]`. The RMS is used instead of the sup
/// norm because the sup is attained at the window edge, whose nearest node
/// moves with `m`.
pub fn singular_pair_residual(grid: &RadialGrid) -> Result<f64> {
    let n = grid.n_dim();
    if !(n > 2.0) {
        return Err(Error::InvalidParameter(format!("singular pair needs N > 2, got {n}")));
    }
    let u: Vec<f64> = grid.nodes().iter().map(|r| -2.0 * r.ln()).collect();
    let lap = grid.apply_laplacian(&u)?;
    let lambda = 2.0 * (n - 2.0);
    let (mut sq, mut vol) = (0.0, 0.0);
    for i in 0..grid.cells() {
        let r = grid.nodes()[i];
        if r >= WINDOW.0 && r <= WINDOW.1 {
            let res = -lap[i] - lambda * u[i].exp();
            sq += grid.volumes()[i] * res * res;
            vol += grid.volumes()[i];
        }
    }
    Ok((sq / vol).sqrt())
}

/// Principal semistability eigenvalue at the singular pair for each `N`.
pub fn singular_threshold_scan(n_values: &[f64], m: usize) -> Result<Vec<SingularScanRow>> {
    if let Some(bad) = n_values.iter().find(|n| !(**n > 2.0 && n.is_finite())) {
        return Err(Error::InvalidParameter(format!("singular scan needs N > 2, got {bad}")));
    }
    if m < RadialGrid::MIN_CELLS {
        return Err(Error::InvalidParameter(format!(
            "need at least {} cells, got {m}",
            RadialGrid::MIN_CELLS
        )));
    }
    n_values
        .par_iter()
        .map(|&n_dim| {
            let residual_norm = singular_pair_residual(&RadialGrid::new(n_dim, m)?)?;
            let mu1 = Pencil::assemble(n_dim, m).smallest_eigenvalue()?;
            Ok(SingularScanRow { n_dim, mu1, residual_norm })
        })
        .collect()
}

/// First adjacent pair (by `N`) across which `μ1` goes from negative to
/// nonnegative.
pub fn sign_change_bracket(rows: &[SingularScanRow]) -> Option<(f64, f64)> {
    let mut sorted: Vec<&SingularScanRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.n_dim.total_cmp(&b.n_dim));
    sorted
        .windows(2)
        .find(|w| w[0].mu1 < 0.0 && w[1].mu1 >= 0.0)
        .map(|w| (w[0].n_dim, w[1].n_dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = gauss_legendre(GAUSS_POINTS);
        let sum: f64 = gl.iter().map(|p| p.1).sum();
        assert!((sum - 1.0).abs() < 1e-14);
        for k in [1, 7, 20, 31] {
            let v: f64 = gl.iter().map(|&(x, w)| w * x.powi(k)).sum();
            assert!((v - 1.0 / (k + 1) as f64).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn first_cell_matches_quadrature_for_smooth_power() {
        let gl = gauss_legendre(GAUSS_POINTS);
        let h = 0.25;
        let exact = first_cell_moments(2.0, h);
        let quad = cell_moments(2.0, 0.0, h, &gl);
        assert!((exact.0 - quad.0).abs() < 1e-15);
        assert!((exact.1 - quad.1).abs() < 1e-15);
        assert!((exact.2 - quad.2).abs() < 1e-15);
    }

    #[test]
    fn pencil_without_potential_gives_dirichlet_eigenvalue() {
        // N = 2 kills the potential; λ₁ of the unit disk is j₀₁².
        let p = Pencil::assemble(2.0, 512);
        let j01 = 2.404_825_557_695_773_f64;
        assert!((p.smallest_eigenvalue().unwrap() - j01 * j01).abs() < 1e-3);
    }

    #[test]
    fn residual_is_second_order() {
        let r1 = singular_pair_residual(&RadialGrid::new(5.0, 256).unwrap()).unwrap();
        let r2 = singular_pair_residual(&RadialGrid::new(5.0, 512).unwrap()).unwrap();
        assert!((r1 / r2 - 4.0).abs() < 0.2, "{r1} {r2}");
    }

    #[test]
    fn signs_and_bracket() {
        let rows = singular_threshold_scan(&[8.0, 12.0], 512).unwrap();
        assert!(rows[0].mu1 < 0.0 && rows[1].mu1 > 0.0, "{rows:?}");
        assert_eq!(sign_change_bracket(&rows), Some((8.0, 12.0)));
        assert!(singular_threshold_scan(&[2.0], 64).is_err());
        assert!(singular_pair_residual(&RadialGrid::new(2.0, 64).unwrap()).is_err());
    }
}
