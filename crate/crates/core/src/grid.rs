//! Cell-centered radial mesh and the flux-form radial Laplacian.
//!
//! Nodes sit at `r_i = (i - 1/2) h`, faces at `r_{i+1/2} = i h`. The operator
//!
//! ```text
//!   (L w)_i = [ a_{i+1/2} (w_{i+1} - w_i) - a_{i-1/2} (w_i - w_{i-1}) ] / V_i
//!   a_{k}   = r_k^{N-1} / h,       V_i = (r_{i+1/2}^N - r_{i-1/2}^N) / N
//! ```
//!
//! has a zero flux through the center face and a reflective ghost
//! `w_{m+1} = -w_m` at `r = 1`. `V_i` is the exact `r^{N-1}`-measure of cell
//! `i`, so `M = diag(V)` and the symmetric stiffness `K = -M L` give the
//! discrete weighted `L²` product and Dirichlet form. All quadratures in the
//! crate use these two objects.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    n_dim: f64,
    m: usize,
    h: f64,
    nodes: Vec<f64>,
    volumes: Vec<f64>,
    /// `a_k` for faces `k = 0..=m`.
    face_coef: Vec<f64>,
}

impl RadialGrid {
    pub const MIN_CELLS: usize = 16;

    pub fn new(n_dim: f64, m: usize) -> Result<Self> {
        if !(n_dim >= 1.0 && n_dim.is_finite()) {
            return Err(Error::InvalidParameter(format!("dimension must be >= 1, got {n_dim}")));
        }
        if m < Self::MIN_CELLS {
            return Err(Error::InvalidParameter(format!(
                "need at least {} cells, got {m}",
                Self::MIN_CELLS
            )));
        }
        let h = 1.0 / m as f64;
        let nodes = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
        let face = |k: usize| k as f64 * h;
        let volumes = (0..m)
            .map(|i| (face(i + 1).powf(n_dim) - face(i).powf(n_dim)) / n_dim)
            .collect();
        let face_coef = (0..=m)
            .map(|k| if k == 0 { 0.0 } else { face(k).powf(n_dim - 1.0) / h })
            .collect();
        Ok(Self { n_dim, m, h, nodes, volumes, face_coef })
    }

    pub fn n_dim(&self) -> f64 {
        self.n_dim
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cell measures `V_i = ∫_cell r^{N-1} dr`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn face_coef(&self) -> &[f64] {
        &self.face_coef
    }

    fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.m {
            return Err(Error::LengthMismatch { expected: self.m, got: w.len() });
        }
        Ok(())
    }

    /// Discrete `Δw`.
    pub fn apply_laplacian(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_len(w)?;
        let mut out = vec![0.0; self.m];
        self.laplacian_into(w, &mut out);
        Ok(out)
    }

    pub(crate) fn laplacian_into(&self, w: &[f64], out: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            let inner = if i == 0 { 0.0 } else { self.face_coef[i] * (w[i] - w[i - 1]) };
            let ghost = if i + 1 == m { -w[i] } else { w[i + 1] };
            let outer = self.face_coef[i + 1] * (ghost - w[i]);
            out[i] = (outer - inner) / self.volumes[i];
        }
    }

    /// Symmetric tridiagonal stiffness `K = -M L` as `(diag, off)` with
    /// `off[i] = K_{i,i+1}`.
    pub fn stiffness(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        let a = &self.face_coef;
        let mut diag: Vec<f64> = (0..m).map(|i| a[i] + a[i + 1]).collect();
        diag[m - 1] += a[m];
        let off = (0..m - 1).map(|i| -a[i + 1]).collect();
        (diag, off)
    }

    /// Rows of `-L = M^{-1} K` as `(lower, diag, upper)`; `lower[i]` couples
    /// row `i` to `i - 1` (unused at `i = 0`), `upper[i]` to `i + 1`.
    pub fn neg_laplacian_rows(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (kd, ko) = self.stiffness();
        let m = self.m;
        let v = &self.volumes;
        let diag = (0..m).map(|i| kd[i] / v[i]).collect();
        let lower = (0..m).map(|i| if i == 0 { 0.0 } else { ko[i - 1] / v[i] }).collect();
        let upper = (0..m).map(|i| if i + 1 == m { 0.0 } else { ko[i] / v[i] }).collect();
        (lower, diag, upper)
    }

    /// `∫ g r^{N-1} dr` by the cell-measure midpoint rule.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.volumes).map(|(g, v)| g * v).sum()
    }

    /// `∫ |φ'|² r^{N-1} dr` with `φ(1) = 0`, i.e. `φᵀ K φ`.
    ///
    /// Interior faces use the centered difference; the last half cell uses
    /// the slope from `φ_m` to the boundary value zero.
    pub fn dirichlet_energy(&self, phi: &[f64]) -> Result<f64> {
        self.check_len(phi)?;
        let a = &self.face_coef;
        let m = self.m;
        let interior: f64 = (0..m - 1).map(|i| a[i + 1] * (phi[i + 1] - phi[i]).powi(2)).sum();
        Ok(interior + 2.0 * a[m] * phi[m - 1] * phi[m - 1])
    }

    /// Value at `r = 0` from the even quadratic through the first two nodes.
    pub fn center_value(&self, w: &[f64]) -> f64 {
        (9.0 * w[0] - w[1]) / 8.0
    }
}
