//! Nonlinearities `f` with `f(0) = 1`, increasing, convex and superlinear.
//!
//! Every nonlinearity exposes the value triple `(f, f', f'')` together with
//! overflow-safe logarithms of the same quantities. The logarithmic forms are
//! what the integral probes use: `exp` of a solution value of 30 is harmless,
//! but `(e^u - 1)^{12}` is not.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Preset families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    /// `f(t) = e^t`
    Exponential,
    /// `f(t) = (1 + t)^p`, `p > 1`
    Power,
    /// `f(t) = e^{t^a}`, `a > 0`
    ExpPower,
}

#[derive(Clone)]
enum Family {
    Exponential,
    Power { p: f64 },
    ExpPower { a: f64 },
    Custom { f: ScalarFn, df: ScalarFn, ddf: ScalarFn },
}

/// A nonlinearity together with its derivatives.
///
/// Values are immutable after construction; clones share the closures of
/// custom nonlinearities.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    params: Vec<f64>,
    family: Family,
    closed_form_tau: Option<(f64, f64)>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("closed_form_tau", &self.closed_form_tau)
            .finish()
    }
}

/// Where a pair of convexity bounds came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSource {
    ClosedForm,
    Sampled,
}

/// Bounds on `τ(t) = f f'' / f'^2` for large `t`.
///
/// Sampled estimates only see `[horizon / 100, horizon]`; the true `liminf`
/// and `limsup` are not computable from samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauEstimate {
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub horizon: f64,
    pub sample_count: usize,
    pub source: TauSource,
}

/// Outcome of one sampled invariant of condition (R).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub first_violation: Option<f64>,
}

/// Per-invariant report produced by [`Nonlinearity::check_condition_r`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub horizon: f64,
    pub checks: Vec<InvariantCheck>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `ln(e^x - 1)` for `x >= 0`, finite for any finite `x > 0`.
pub(crate) fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

impl Nonlinearity {
    pub fn exponential() -> Self {
        Self {
            name: "exp".into(),
            params: Vec::new(),
            family: Family::Exponential,
            closed_form_tau: Some((1.0, 1.0)),
        }
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("power family needs p > 1, got {p}")));
        }
        let tau = (p - 1.0) / p;
        Ok(Self {
            name: format!("pow:{p}"),
            params: vec![p],
            family: Family::Power { p },
            closed_form_tau: Some((tau, tau)),
        })
    }

    pub fn exp_power(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("exp-power family needs a > 0, got {a}")));
        }
        Ok(Self {
            name: format!("exppow:{a}"),
            params: vec![a],
            family: Family::ExpPower { a },
            closed_form_tau: Some((1.0, 1.0)),
        })
    }

    pub fn make_preset(kind: PresetKind, params: &[f64]) -> Result<Self> {
        let one = |what: &str| -> Result<f64> {
            match params {
                [x] => Ok(*x),
                _ => Err(Error::InvalidParameter(format!(
                    "{what} takes exactly one parameter, got {}",
                    params.len()
                ))),
            }
        };
        match kind {
            PresetKind::Exponential if params.is_empty() => Ok(Self::exponential()),
            PresetKind::Exponential => Err(Error::InvalidParameter(
                "exponential takes no parameters".into(),
            )),
            PresetKind::Power => Self::power(one("power")?),
            PresetKind::ExpPower => Self::exp_power(one("exp-power")?),
        }
    }

    /// A user-supplied nonlinearity. No invariant is enforced here; use
    /// [`check_condition_r`](Self::check_condition_r) to diagnose it.
    pub fn custom<F, D, DD>(name: impl Into<String>, f: F, df: D, ddf: DD) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        DD: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            params: Vec::new(),
            family: Family::Custom { f: Arc::new(f), df: Arc::new(df), ddf: Arc::new(ddf) },
            closed_form_tau: None,
        }
    }

    /// Same evaluators, but with the closed-form `τ` bounds dropped so that
    /// [`tau_bounds`](Self::tau_bounds) takes the sampled path.
    pub fn without_closed_form(mut self) -> Self {
        self.closed_form_tau = None;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn closed_form_tau(&self) -> Option<(f64, f64)> {
        self.closed_form_tau
    }

    pub fn kind(&self) -> Option<PresetKind> {
        match self.family {
            Family::Exponential => Some(PresetKind::Exponential),
            Family::Power { .. } => Some(PresetKind::Power),
            Family::ExpPower { .. } => Some(PresetKind::ExpPower),
            Family::Custom { .. } => None,
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential => t.exp(),
            Family::Power { p } => (1.0 + t).powf(*p),
            Family::ExpPower { a } => t.powf(*a).exp(),
            Family::Custom { f, .. } => f(t),
        }
    }

    pub fn df(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential => t.exp(),
            Family::Power { p } => p * (1.0 + t).powf(p - 1.0),
            Family::ExpPower { a } => {
                if t == 0.0 {
                    return if *a > 1.0 { 0.0 } else if *a == 1.0 { 1.0 } else { f64::INFINITY };
                }
                a * t.powf(a - 1.0) * t.powf(*a).exp()
            }
            Family::Custom { df, .. } => df(t),
        }
    }

    pub fn ddf(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential => t.exp(),
            Family::Power { p } => p * (p - 1.0) * (1.0 + t).powf(p - 2.0),
            Family::ExpPower { a } if *a == 1.0 => t.exp(),
            Family::ExpPower { a } => {
                let x = t.powf(*a);
                a * t.powf(a - 2.0) * (a - 1.0 + a * x) * x.exp()
            }
            Family::Custom { ddf, .. } => ddf(t),
        }
    }

    /// `f̃(t) = f(t) - f(0) = f(t) - 1`.
    pub fn ftilde(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential => t.exp_m1(),
            Family::Power { p } => (p * t.ln_1p()).exp_m1(),
            Family::ExpPower { a } => t.powf(*a).exp_m1(),
            Family::Custom { f, .. } => f(t) - f(0.0),
        }
    }

    pub fn ln_f(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential => t,
            Family::Power { p } => p * t.ln_1p(),
            Family::ExpPower { a } => t.powf(*a),
            Family::Custom { f, .. } => f(t).ln(),
        }
    }

    pub fn ln_df(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential => t,
            Family::Power { p } => p.ln() + (p - 1.0) * t.ln_1p(),
            Family::ExpPower { a } => a.ln() + (a - 1.0) * t.ln() + t.powf(*a),
            Family::Custom { df, .. } => df(t).ln(),
        }
    }

    pub fn ln_ddf(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential => t,
            Family::Power { p } => (p * (p - 1.0)).ln() + (p - 2.0) * t.ln_1p(),
            Family::ExpPower { a } if *a == 1.0 => t,
            Family::ExpPower { a } => {
                let x = t.powf(*a);
                (a * (a - 1.0 + a * x)).ln() + (a - 2.0) * t.ln() + x
            }
            Family::Custom { ddf, .. } => ddf(t).ln(),
        }
    }

    /// `ln f̃(t)`; `-inf` at `t = 0`.
    pub fn ln_ftilde(&self, t: f64) -> f64 {
        match &self.family {
            Family::Exponential => ln_expm1(t),
            Family::Power { p } => ln_expm1(p * t.ln_1p()),
            Family::ExpPower { a } => ln_expm1(t.powf(*a)),
            Family::Custom { f, .. } => (f(t) - f(0.0)).ln(),
        }
    }

    /// Convexity ratio `τ(t) = f(t) f''(t) / f'(t)^2`.
    pub fn tau_at(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("tau is evaluated at t > 0, got {t}")));
        }
        let tau = match &self.family {
            Family::Exponential => 1.0,
            Family::Power { p } => (p - 1.0) / p,
            Family::ExpPower { a } => 1.0 + (a - 1.0) / (a * t.powf(*a)),
            Family::Custom { f, df, ddf } => {
                let d = df(t);
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::Domain(format!("f'({t}) = {d} is not positive")));
                }
                f(t) * ddf(t) / (d * d)
            }
        };
        if !tau.is_finite() {
            return Err(Error::Domain(format!("tau({t}) is not finite")));
        }
        Ok(tau)
    }

    /// Bounds on `τ` at large `t`: the closed form when known, otherwise the
    /// min/max over a geometric grid on `[horizon / 100, horizon]`.
    pub fn tau_bounds(&self, horizon: f64, samples: usize) -> Result<TauEstimate> {
        validate_tau_sampling(horizon, samples)?;
        match self.closed_form_tau {
            Some((tau_minus, tau_plus)) => Ok(TauEstimate {
                tau_minus,
                tau_plus,
                horizon,
                sample_count: 0,
                source: TauSource::ClosedForm,
            }),
            None => self.sampled_tau_bounds(horizon, samples),
        }
    }

    /// Always takes the sampled path, even when a closed form is known.
    pub fn sampled_tau_bounds(&self, horizon: f64, samples: usize) -> Result<TauEstimate> {
        validate_tau_sampling(horizon, samples)?;
        let mut tau_minus = f64::INFINITY;
        let mut tau_plus = f64::NEG_INFINITY;
        for t in geometric_grid(horizon / 100.0, horizon, samples) {
            let tau = self.tau_at(t)?;
            tau_minus = tau_minus.min(tau);
            tau_plus = tau_plus.max(tau);
        }
        Ok(TauEstimate {
            tau_minus: tau_minus.max(0.0),
            tau_plus,
            horizon,
            sample_count: samples,
            source: TauSource::Sampled,
        })
    }

    /// Samples each invariant of condition (R) on `{0} ∪` a geometric grid of
    /// `(0, horizon]`. Violations are reported, never raised.
    pub fn check_condition_r(&self, horizon: f64) -> ConditionReport {
        const SAMPLES: usize = 256;
        let mut ts = vec![0.0];
        ts.extend(geometric_grid(horizon * 1e-4, horizon, SAMPLES));

        let first = |pred: &dyn Fn(f64) -> bool| ts.iter().copied().find(|&t| !pred(t));
        let mut checks = Vec::new();
        let mut push = |name, violation: Option<f64>| {
            checks.push(InvariantCheck { name, passed: violation.is_none(), first_violation: violation })
        };

        push("f(0) = 1", ((self.f(0.0) - 1.0).abs() > 1e-12).then_some(0.0));
        push("f' >= 0", first(&|t| self.df(t) >= 0.0));
        push("f'' >= 0", first(&|t| self.ddf(t) >= 0.0));
        push("f' > 0 for t > 0", first(&|t| t == 0.0 || self.df(t) > 0.0));

        // f(t)/t increasing over the top decade of the horizon, compared in
        // log space so that fast-growing presets do not overflow.
        let upper = &ts[1 + 3 * SAMPLES / 4..];
        let ratio = |t: f64| self.ln_f(t) - t.ln();
        let superlinear = upper
            .windows(2)
            .find(|w| !(ratio(w[1]) > ratio(w[0])))
            .map(|w| w[1]);
        push("f(t)/t increasing", superlinear);

        ConditionReport { horizon, checks }
    }
}

fn validate_tau_sampling(horizon: f64, samples: usize) -> Result<()> {
    if !(horizon > 1.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau horizon must exceed 1, got {horizon}")));
    }
    if samples < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 tau samples, got {samples}")));
    }
    Ok(())
}

/// `n` points from `lo` to `hi` (inclusive) with constant ratio.
pub(crate) fn geometric_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let ratio = (hi / lo).ln() / (n.max(2) - 1) as f64;
    (0..n).map(move |k| if k + 1 == n { hi } else { lo * (ratio * k as f64).exp() })
}

impl FromStr for Nonlinearity {
    type Err = Error;

    /// Parses `exp`, `pow:<p>` or `exppow:<a>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let param = |rest: &str| {
            rest.parse::<f64>().map_err(|_| Error::UnknownPreset(s.to_string()))
        };
        if s == "exp" {
            Ok(Self::exponential())
        } else if let Some(rest) = s.strip_prefix("pow:") {
            Self::power(param(rest)?)
        } else if let Some(rest) = s.strip_prefix("exppow:") {
            Self::exp_power(param(rest)?)
        } else {
            Err(Error::UnknownPreset(s.to_string()))
        }
    }
}
