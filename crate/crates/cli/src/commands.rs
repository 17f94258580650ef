//! One function per subcommand. Each returns the process exit code.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use extremal_core::io::{self, Table};
use extremal_core::stability::{
    check_bound12, random_test_functions, sign_change_bracket, singular_threshold_scan,
};
use extremal_core::{
    check_inequality5, extremal_curve, growth_classification, growth_slope_ratio,
    near_extremal_profile, newton_solve, proof_probe, regularity_report, trace_branch,
    mu1_semistability, Branch, ContinuationSettings, GrowthClass, Nonlinearity, ProfileEntry,
    RadialGrid, SolutionPair,
};

use crate::config::RunConfig;
use crate::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INADMISSIBLE: u8 = 2;

/// `μ1` at or above this counts as semistable.
const SEMISTABLE_FLOOR: f64 = -1e-6;

fn nonlinearity(cfg: &RunConfig) -> Result<Nonlinearity, CliError> {
    Ok(cfg.nonlinearity.parse()?)
}

fn make_grid(cfg: &RunConfig) -> Result<RadialGrid, CliError> {
    Ok(RadialGrid::new(cfg.dim, cfg.cells)?)
}

/// Writes the primary output to `out` (or stdout) and the summary next to
/// it as `<stem>.summary.json` (or to stderr when printing to stdout).
fn emit(cfg: &RunConfig, primary: &str, summary: Option<&str>) -> Result<(), CliError> {
    match &cfg.out {
        Some(out) => {
            let path = Path::new(out);
            std::fs::write(path, primary)?;
            if let Some(s) = summary {
                std::fs::write(summary_path(path), s)?;
                print!("{s}");
            }
        }
        None => {
            print!("{primary}");
            if let Some(s) = summary {
                eprint!("{s}");
            }
        }
    }
    Ok(())
}

pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn document<T: Serialize>(payload: &T, cfg: &RunConfig) -> Result<String, CliError> {
    Ok(io::json_document(payload, &cfg.to_json())?)
}

pub fn regularity(cfg: &RunConfig) -> Result<u8, CliError> {
    let f = nonlinearity(cfg)?;
    let report = regularity_report(&f, cfg.horizon);
    emit(cfg, &document(&report, cfg)?, None)?;
    Ok(if report.admissible { EXIT_OK } else { EXIT_INADMISSIBLE })
}

/// Branch along `γ = σλ`; rays with `σ > 1` are traced as `1/σ` and the
/// components exchanged afterwards.
fn ray_branch(grid: &RadialGrid, f: &Nonlinearity, sigma: f64, settings: &ContinuationSettings) -> Result<Branch, CliError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CliError::Config(format!("sigma must be positive, got {sigma}")));
    }
    if sigma <= 1.0 {
        return Ok(trace_branch(grid, f, sigma, settings)?);
    }
    let b = trace_branch(grid, f, 1.0 / sigma, settings)?;
    Ok(Branch {
        sigma,
        lambda_star: b.gamma_star(),
        lambda_star_bracket: b.lambda_star_bracket / sigma,
        points: b
            .points
            .into_iter()
            .map(|mut p| {
                std::mem::swap(&mut p.lambda, &mut p.gamma);
                std::mem::swap(&mut p.sup_u, &mut p.sup_v);
                p.snapshot = p.snapshot.map(|s| s.swapped());
                p
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct BranchSummary {
    sigma: f64,
    lambda_star: f64,
    gamma_star: f64,
    bracket: f64,
    points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<Vec<ProfileEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope_ratio: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<GrowthClass>,
}

pub fn trace(cfg: &RunConfig) -> Result<u8, CliError> {
    let f = nonlinearity(cfg)?;
    let g = make_grid(cfg)?;
    let settings = ContinuationSettings { keep_snapshots: true, ..cfg.continuation() };
    let tests = random_test_functions(&g, cfg.test_functions, cfg.seed);

    let mut columns = vec!["sigma", "lambda", "gamma", "sup_u", "sup_v", "mu1", "eta", "comparison_violation"];
    if !tests.is_empty() {
        columns.push("min_ineq5_margin");
    }
    let mut table = Table::new(&columns);
    let mut summaries = Vec::new();
    for &sigma in &cfg.sigma {
        let branch = ray_branch(&g, &f, sigma, &settings)?;
        for p in &branch.points {
            let snap = p.snapshot.as_ref().expect("snapshots are kept");
            let mut row = vec![sigma, p.lambda, p.gamma, p.sup_u, p.sup_v, p.mu1, p.eta, p.comparison_violation];
            if !tests.is_empty() {
                let margins = check_inequality5(&g, snap, &f, &tests)?;
                row.push(margins.into_iter().fold(f64::INFINITY, f64::min));
            }
            table.push_floats(&row);
        }
        let mut summary = BranchSummary {
            sigma,
            lambda_star: branch.lambda_star,
            gamma_star: sigma * branch.lambda_star,
            bracket: branch.lambda_star_bracket,
            points: branch.points.len(),
            profile: None,
            slope_ratio: None,
            classification: None,
        };
        if !cfg.epsilons.is_empty() {
            let profile = near_extremal_profile(&g, &f, sigma, &cfg.epsilons, &settings)?;
            summary.slope_ratio = Some(growth_slope_ratio(&profile.entries).ok().flatten());
            summary.classification = growth_classification(&profile.entries, &cfg.thresholds()).ok();
            summary.profile = Some(profile.entries);
        }
        summaries.push(summary);
    }
    let csv = table.to_csv_string(&cfg.to_json(), &[]);
    emit(cfg, &csv, Some(&document(&json!({ "branches": summaries }), cfg)?))?;
    Ok(EXIT_OK)
}

pub fn extremal_curve_cmd(cfg: &RunConfig) -> Result<u8, CliError> {
    let f = nonlinearity(cfg)?;
    let g = make_grid(cfg)?;
    if cfg.sigma.is_empty() {
        return Err(CliError::Config("sigma list is empty".into()));
    }
    let entries = extremal_curve(&g, &f, &cfg.sigma, &cfg.continuation())?;
    if entries.iter().all(|e| e.error.is_some()) {
        return Err(CliError::Solver("every sigma failed".into()));
    }
    emit(cfg, &io::curve_table(&entries).to_csv_string(&cfg.to_json(), &[]), None)?;
    Ok(EXIT_OK)
}

/// Minimal solution at `(λ, γ)`, reached by continuation along its ray.
fn minimal_solution(cfg: &RunConfig, g: &RadialGrid, f: &Nonlinearity) -> Result<SolutionPair, CliError> {
    let lambda = cfg.lambda.ok_or_else(|| CliError::Config("probe needs `lambda`".into()))?;
    let sigma0 = cfg.sigma.first().copied().unwrap_or(1.0);
    let gamma = cfg.gamma.unwrap_or(sigma0 * lambda);
    if !(lambda > 0.0 && gamma > 0.0) {
        return Err(CliError::Config(format!("need lambda, gamma > 0, got ({lambda}, {gamma})")));
    }
    let settings = ContinuationSettings { keep_snapshots: true, ..cfg.continuation() };
    let branch = ray_branch(g, f, gamma / lambda, &settings)?;
    if lambda >= branch.lambda_star {
        return Err(CliError::Solver(format!(
            "lambda={lambda} is beyond the fold lambda*={} of this ray",
            branch.lambda_star
        )));
    }
    let init = branch.nearest_snapshot_below(lambda).expect("branch starts at zero");
    Ok(newton_solve(g, f, lambda, gamma, (&init.u, &init.v), &cfg.newton())?)
}

pub fn probe(cfg: &RunConfig) -> Result<u8, CliError> {
    let f = nonlinearity(cfg)?;
    let g = make_grid(cfg)?;
    if let Some(bad) = cfg.alphas.iter().find(|a| !(**a > 1.0)) {
        return Err(CliError::Config(format!("alpha must exceed 1, got {bad}")));
    }
    let sol = minimal_solution(cfg, &g, &f)?;
    let (mu1, _) = mu1_semistability(&g, &sol, &f)?;
    let probes: Vec<Value> = cfg
        .alphas
        .iter()
        .map(|&a| proof_probe(&g, &sol, &f, a).map(|p| io::probe_json(&p)))
        .collect::<Result<_, _>>()?;

    // derivative growth bound on a geometric grid of [T, horizon], T = horizon / 100
    let t0 = cfg.horizon / 100.0;
    let ts: Vec<f64> = (0..64).map(|k| t0 * 100f64.powf(k as f64 / 63.0)).collect();
    let mut tau2 = f.tau_bounds(cfg.horizon, 256)?.tau_plus;
    for &t in &ts {
        tau2 = tau2.max(f.tau_at(t)?);
    }
    let margins = check_bound12(&f, tau2, t0, &ts)?;
    let bound12 = json!({
        "T": t0,
        "tau2": tau2,
        "min_margin": margins.iter().copied().fold(f64::INFINITY, f64::min),
        "samples": ts.len(),
    });
    let payload = json!({
        "lambda": sol.lambda,
        "gamma": sol.gamma,
        "mu1": mu1,
        "semistable": mu1 >= SEMISTABLE_FLOOR,
        "probes": probes,
        "bound12": bound12,
    });
    emit(cfg, &document(&payload, cfg)?, None)?;
    Ok(EXIT_OK)
}

pub fn singular_scan(cfg: &RunConfig) -> Result<u8, CliError> {
    if nonlinearity(cfg)?.name() != "exp" {
        return Err(CliError::Config("singular-scan is defined for the exponential nonlinearity only".into()));
    }
    let rows = singular_threshold_scan(&cfg.n_values, cfg.cells)?;
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.n_dim.total_cmp(&b.n_dim));
    let bracket = sign_change_bracket(&sorted);
    let csv = io::scan_table(&sorted).to_csv_string(&cfg.to_json(), &[]);
    emit(cfg, &csv, Some(&document(&json!({ "bracket": bracket }), cfg)?))?;
    Ok(EXIT_OK)
}
