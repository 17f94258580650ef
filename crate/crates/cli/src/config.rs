//! Run configuration: a flat JSON document whose keys can each be
//! overridden from the command line.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use extremal_core::{ContinuationSettings, GrowthThresholds, NewtonSettings};

use crate::CliError;

/// A list given as a JSON array, a single number, or a comma-separated
/// string.
fn real_list<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(f64),
        Many(Vec<f64>),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::One(x) => Ok(vec![x]),
        Raw::Many(v) => Ok(v),
        Raw::Text(s) => parse_csv(&s).map_err(serde::de::Error::custom),
    }
}

pub fn parse_csv(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

fn default_n_values() -> Vec<f64> {
    (0..=40).map(|k| 9.0 + 0.05 * k as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nonlinearity: String,
    pub dim: f64,
    pub cells: usize,
    #[serde(deserialize_with = "real_list")]
    pub sigma: Vec<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(deserialize_with = "real_list")]
    pub alphas: Vec<f64>,
    #[serde(deserialize_with = "real_list")]
    pub epsilons: Vec<f64>,
    #[serde(deserialize_with = "real_list")]
    pub n_values: Vec<f64>,
    /// Sampling horizon for `τ` bounds and the derivative growth bound grid.
    pub horizon: f64,
    pub tol: f64,
    pub max_newton_iters: usize,
    pub step0: f64,
    pub lambda_min_step: f64,
    pub secant_predictor: bool,
    pub allow_small_epsilon: bool,
    pub bounded_below: f64,
    pub unbounded_above: f64,
    /// Random test functions per branch point for the semistability margin check.
    pub test_functions: usize,
    pub seed: u64,
    /// Where the output goes; not part of the embedded metadata, so moving
    /// an output file does not change its bytes.
    #[serde(skip_serializing)]
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = ContinuationSettings::default();
        let g = GrowthThresholds::default();
        Self {
            nonlinearity: "exp".into(),
            dim: 2.0,
            cells: 1024,
            sigma: vec![1.0],
            lambda: None,
            gamma: None,
            alphas: vec![2.0, 3.0, 4.0],
            epsilons: Vec::new(),
            n_values: default_n_values(),
            horizon: 100.0,
            tol: c.newton.tol,
            max_newton_iters: c.newton.max_iters,
            step0: c.step0,
            lambda_min_step: c.lambda_min_step,
            secant_predictor: c.secant_predictor,
            allow_small_epsilon: c.allow_small_epsilon,
            bounded_below: g.bounded_below,
            unbounded_above: g.unbounded_above,
            test_functions: 0,
            seed: 0,
            out: None,
        }
    }
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub nonlinearity: Option<String>,
    pub dim: Option<f64>,
    pub cells: Option<usize>,
    pub sigma: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
    pub n_values: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, over: Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = over.$field { cfg.$field = v; })*
            };
        }
        apply!(nonlinearity, dim, cells, sigma, alphas, epsilons, n_values, seed);
        if over.lambda.is_some() {
            cfg.lambda = over.lambda;
        }
        if over.gamma.is_some() {
            cfg.gamma = over.gamma;
        }
        if over.out.is_some() {
            cfg.out = over.out;
        }
        Ok(cfg)
    }

    pub fn continuation(&self) -> ContinuationSettings {
        ContinuationSettings {
            step0: self.step0,
            lambda_min_step: self.lambda_min_step,
            newton: self.newton(),
            secant_predictor: self.secant_predictor,
            keep_snapshots: false,
            allow_small_epsilon: self.allow_small_epsilon,
            ..ContinuationSettings::default()
        }
    }

    pub fn newton(&self) -> NewtonSettings {
        NewtonSettings { tol: self.tol, max_iters: self.max_newton_iters, ..NewtonSettings::default() }
    }

    pub fn thresholds(&self) -> GrowthThresholds {
        GrowthThresholds { bounded_below: self.bounded_below, unbounded_above: self.unbounded_above }
    }

    /// The resolved configuration as embedded in every output file.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_accept_three_shapes() {
        for text in [r#"{"sigma": 0.5}"#, r#"{"sigma": [0.5]}"#, r#"{"sigma": "0.5"}"#] {
            let c: RunConfig = serde_json::from_str(text).unwrap();
            assert_eq!(c.sigma, vec![0.5]);
        }
        let c: RunConfig = serde_json::from_str(r#"{"alphas": "2, 3,4"}"#).unwrap();
        assert_eq!(c.alphas, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn unknown_keys_and_bad_lists_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"dimension": 3}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"sigma": "a,b"}"#).is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"dim": 3, "cells": 64, "nonlinearity": "pow:2"}"#).unwrap();
        let over = Overrides { dim: Some(5.0), ..Default::default() };
        let c = RunConfig::load(Some(&p), over).unwrap();
        assert_eq!((c.dim, c.cells, c.nonlinearity.as_str()), (5.0, 64, "pow:2"));
    }
}
