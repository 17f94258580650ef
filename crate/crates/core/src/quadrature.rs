//! Adaptive Gauss–Kronrod quadrature and log-space summation.

use crate::error::{Error, Result};

// 15-point Kronrod nodes/weights on [-1, 1] with the embedded 7-point Gauss
// rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = hl * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let (kron, gauss) = (kron * hl, gauss * hl);
    if !kron.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok((kron, (kron - gauss).abs()))
}

/// `∫_a^b f` to `max(abs_tol, rel_tol |I|)` by global adaptive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("infinite interval [{a}, {b}]")));
    }
    const MAX_INTERVALS: usize = 4000;
    let (i0, e0) = gk15(&f, a, b)?;
    let mut parts = vec![(a, b, i0, e0)];
    let mut total = i0;
    let mut err = e0;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] (error estimate {err:.3e})"
            )));
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, pi, pe) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine resolution
            return Ok(total);
        }
        let (i1, e1) = gk15(&f, lo, mid)?;
        let (i2, e2) = gk15(&f, mid, hi)?;
        total += i1 + i2 - pi;
        err += e1 + e2 - pe;
        parts.push((lo, mid, i1, e1));
        parts.push((mid, hi, i2, e2));
    }
    // recompute to shed accumulated update round-off
    Ok(parts.iter().map(|p| p.2).sum())
}

/// `ln Σ exp(x_k)`; `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max.is_nan() {
        return f64::NAN;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
