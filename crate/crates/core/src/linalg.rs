//! Tridiagonal kernels: the 2×2-block system behind Newton and the coupled
//! eigenproblem, and a symmetric tridiagonal eigensolver (Sturm bisection
//! followed by shifted inverse iteration).

use crate::error::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

fn inv2(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

fn mul2(a: &Mat2, x: [f64; 2]) -> [f64; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

/// Block-tridiagonal matrix on interleaved unknowns `(u_i, v_i)`.
///
/// Off-diagonal blocks are scalar multiples of the identity (both components
/// share one radial operator); diagonal blocks are full 2×2. Row `i` reads
/// `lower[i] x_{i-1} + diag[i] x_i + upper[i] x_{i+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<Mat2>,
    pub upper: Vec<f64>,
}

impl BlockSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `(A - s I)`.
    pub fn shifted(&self, s: f64) -> Self {
        let mut out = self.clone();
        for d in &mut out.diag {
            d[0][0] -= s;
            d[1][1] -= s;
        }
        out
    }

    pub fn apply(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.len();
        let mut ou = vec![0.0; m];
        let mut ov = vec![0.0; m];
        for i in 0..m {
            let [a, b] = mul2(&self.diag[i], [u[i], v[i]]);
            let (mut a, mut b) = (a, b);
            if i > 0 {
                a += self.lower[i] * u[i - 1];
                b += self.lower[i] * v[i - 1];
            }
            if i + 1 < m {
                a += self.upper[i] * u[i + 1];
                b += self.upper[i] * v[i + 1];
            }
            ou[i] = a;
            ov[i] = b;
        }
        (ou, ov)
    }

    /// Block LU (block Thomas) factorization without pivoting across rows.
    pub fn factor(&self) -> Result<BlockLu> {
        let m = self.len();
        let mut inv_piv = Vec::with_capacity(m);
        let mut prev: Option<Mat2> = None;
        for i in 0..m {
            let mut d = self.diag[i];
            if let Some(p) = prev {
                let s = self.lower[i] * self.upper[i - 1];
                for r in 0..2 {
                    for c in 0..2 {
                        d[r][c] -= s * p[r][c];
                    }
                }
            }
            let inv = inv2(&d).ok_or(Error::Singular(i))?;
            inv_piv.push(inv);
            prev = Some(inv);
        }
        Ok(BlockLu { inv_piv, lower: self.lower.clone(), upper: self.upper.clone() })
    }
}

/// Factorization produced by [`BlockSystem::factor`].
#[derive(Clone, Debug)]
pub struct BlockLu {
    inv_piv: Vec<Mat2>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BlockLu {
    pub fn solve(&self, bu: &[f64], bv: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.inv_piv.len();
        let mut y = vec![[0.0; 2]; m];
        for i in 0..m {
            let mut r = [bu[i], bv[i]];
            if i > 0 {
                let t = mul2(&self.inv_piv[i - 1], y[i - 1]);
                r[0] -= self.lower[i] * t[0];
                r[1] -= self.lower[i] * t[1];
            }
            y[i] = r;
        }
        let mut xu = vec![0.0; m];
        let mut xv = vec![0.0; m];
        for i in (0..m).rev() {
            let mut r = y[i];
            if i + 1 < m {
                r[0] -= self.upper[i] * xu[i + 1];
                r[1] -= self.upper[i] * xv[i + 1];
            }
            let [a, b] = mul2(&self.inv_piv[i], r);
            xu[i] = a;
            xv[i] = b;
        }
        (xu, xv)
    }
}

/// Real symmetric tridiagonal matrix; `off[i]` couples `i` and `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence / LDLᵀ
    /// inertia).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.len() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - if i == 0 { 0.0 } else { e2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Solves `(T - s I) x = b` by the Thomas algorithm.
    pub fn solve_shifted(&self, s: f64, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0] - s;
        if piv == 0.0 {
            return Err(Error::Singular(0));
        }
        c[0] = if n > 1 { self.off[0] / piv } else { 0.0 };
        d[0] = b[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - s - self.off[i - 1] * c[i - 1];
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::Singular(i));
            }
            c[i] = if i + 1 < n { self.off[i] / piv } else { 0.0 };
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Smallest eigenvalue by bisection on the Sturm count.
    pub fn smallest_eigenvalue_bracket(&self) -> (f64, f64) {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        while hi - lo > 4.0 * f64::EPSILON * scale {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo, hi)
    }

    /// Smallest eigenpair: bisection brackets the eigenvalue, inverse
    /// iteration shifted just below it returns the eigenvector, and the
    /// eigenvalue is reported as the Rayleigh quotient of that vector.
    /// The eigenvector is normalized to unit Euclidean norm with a positive
    /// first entry.
    pub fn smallest_eigenpair(&self) -> Result<(f64, Vec<f64>, f64)> {
        let n = self.len();
        let (lo, hi) = self.smallest_eigenvalue_bracket();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        // shift strictly below the spectrum keeps T - sI positive definite
        let mut shift = lo - 8.0 * f64::EPSILON * scale;
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut residual = f64::INFINITY;
        let mut rq = lo;
        for iter in 0..50 {
            let y = match self.solve_shifted(shift, &x) {
                Ok(y) => y,
                Err(_) => {
                    shift -= 8.0 * f64::EPSILON * scale;
                    continue;
                }
            };
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::EigenStagnation { residual, iterations: iter });
            }
            x = y.into_iter().map(|v| v / norm).collect();
            let tx = self.apply(&x);
            rq = x.iter().zip(&tx).map(|(a, b)| a * b).sum();
            residual = tx.iter().zip(&x).map(|(t, x)| (t - rq * x).powi(2)).sum::<f64>().sqrt();
            if residual <= 64.0 * f64::EPSILON * scale && iter >= 1 {
                break;
            }
        }
        if residual > 1e-6 * scale {
            return Err(Error::EigenStagnation { residual, iterations: 50 });
        }
        if x[0] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        Ok((rq, x, residual))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_block(a: &BlockSystem) -> Vec<Vec<f64>> {
        let m = a.len();
        let mut d = vec![vec![0.0; 2 * m]; 2 * m];
        for i in 0..m {
            for r in 0..2 {
                for c in 0..2 {
                    d[2 * i + r][2 * i + c] = a.diag[i][r][c];
                }
                if i > 0 {
                    d[2 * i + r][2 * (i - 1) + r] = a.lower[i];
                }
                if i + 1 < m {
                    d[2 * i + r][2 * (i + 1) + r] = a.upper[i];
                }
            }
        }
        d
    }

    fn sample_system(m: usize) -> BlockSystem {
        BlockSystem {
            lower: (0..m).map(|i| -1.0 - 0.1 * i as f64).collect(),
            upper: (0..m).map(|i| -1.2 + 0.05 * i as f64).collect(),
            diag: (0..m)
                .map(|i| [[4.0 + i as f64 * 0.01, -0.7], [-0.3 - 0.01 * i as f64, 4.5]])
                .collect(),
        }
    }

    #[test]
    fn block_lu_solves() {
        let a = sample_system(12);
        let xu: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let xv: Vec<f64> = (0..12).map(|i| (i as f64 * 0.3).cos()).collect();
        let (bu, bv) = a.apply(&xu, &xv);
        let (su, sv) = a.factor().unwrap().solve(&bu, &bv);
        for i in 0..12 {
            assert!((su[i] - xu[i]).abs() < 1e-12 && (sv[i] - xv[i]).abs() < 1e-12);
        }
        // apply agrees with the dense assembly
        let d = dense_block(&a);
        for i in 0..12 {
            let row: f64 = (0..24)
                .map(|j| d[2 * i][j] * if j % 2 == 0 { xu[j / 2] } else { xv[j / 2] })
                .sum();
            assert!((row - bu[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_block_is_reported() {
        let a = BlockSystem { lower: vec![0.0; 2], upper: vec![0.0; 2], diag: vec![[[1.0, 0.0], [0.0, 1.0]], [[1.0, 2.0], [2.0, 4.0]]] };
        assert!(matches!(a.factor(), Err(Error::Singular(1))));
    }

    #[test]
    fn sturm_count_and_smallest_eigenpair_of_second_difference() {
        // eigenvalues 2 - 2 cos(kπ/(n+1))
        let n = 50;
        let t = SymTridiag { diag: vec![2.0; n], off: vec![-1.0; n - 1] };
        let exact = |k: usize| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
        assert_eq!(t.count_below(exact(1) - 1e-9), 0);
        assert_eq!(t.count_below(exact(1) + 1e-9), 1);
        assert_eq!(t.count_below(exact(3) + 1e-9), 3);
        let (mu, x, res) = t.smallest_eigenpair().unwrap();
        assert!((mu - exact(1)).abs() < 1e-13, "{mu}");
        assert!(res < 1e-12);
        assert!(x.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn shifted_solve() {
        let t = SymTridiag { diag: vec![3.0, 4.0, 5.0], off: vec![1.0, -2.0] };
        let b = [1.0, 2.0, 3.0];
        let x = t.solve_shifted(0.5, &b).unwrap();
        let tx = t.apply(&x);
        for i in 0..3 {
            assert!((tx[i] - 0.5 * x[i] - b[i]).abs() < 1e-13);
        }
    }
}
