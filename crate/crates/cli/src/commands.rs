use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use sonine_core::expr::{Bindings, Expr};
use sonine_core::kernels::LICM_MAX_ORDER;
use sonine_core::sonine::{csc_report, default_check_grid, wsc1_report, wsc2_report, SonineData, VerificationReport};
use sonine_core::subdiffusion::{solve_subdiffusion, PdeConfig, PdeForcing};
use sonine_core::vie::{
    manufactured_forcing, solve_first_kind, solve_nonlocal_ode, FirstKindProblem, Forcing, NonlocalOdeProblem,
    RefinementHistory, SolveReport, Strategy, Variant,
};

use crate::config::{parse_expr, RunConfig};
use crate::{classify, CliError, Kind};

/// The single stdout line.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub status: String,
    pub max_residual: Option<f64>,
    pub error: Option<f64>,
    pub order: Option<Value>,
}

impl Summary {
    pub fn new(command: &'static str, status: impl Into<String>) -> Self {
        Summary {
            command,
            status: status.into(),
            max_residual: None,
            error: None,
            order: None,
        }
    }
}

/// Outcome of one solve at one resolution.
struct Level {
    steps: usize,
    files: Vec<(&'static str, String)>,
    max_residual: Option<f64>,
    error: Option<f64>,
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn finish(config: &RunConfig, dir: &Path, mut files: Vec<(&'static str, String)>, summary: &Summary) -> Result<(), CliError> {
    if !config.wants("csv") {
        files.clear();
    }
    if config.wants("json") {
        files.push(("summary.json", serde_json::to_string_pretty(summary).expect("summary serialises")));
    }
    write_outputs(dir, &files)
}

pub fn verify(config: &RunConfig, dir: &Path) -> Result<Summary, CliError> {
    let pair = config.pair()?;
    let weight = config.weight()?;
    let b = pair.horizon();
    let tol = &config.tolerances;
    let data = SonineData::with_rule_size(pair.clone(), weight.clone(), config.jacobi_n()).map_err(classify)?;

    let csc_grid: Vec<f64> = (1..=10).map(|k| b * k as f64 / 10.0).collect();
    let mut reports: Vec<(&'static str, VerificationReport)> = vec![(
        "csc.csv",
        csc_report(&pair, &csc_grid, config.jacobi_n(), tol.csc).map_err(classify)?,
    )];
    let grid = default_check_grid(b, 8);
    reports.push(("wsc1.csv", wsc1_report(&data, &grid, tol.continuity).map_err(classify)?));
    if pair.is_constant() {
        reports.push(("wsc2.csv", wsc2_report(&pair, &weight, &grid, tol.continuity).map_err(classify)?));
    }
    let licm = pair.licm_report(LICM_MAX_ORDER);

    let mut failures = Vec::new();
    for (_, r) in &reports {
        eprintln!("{}", r.summary());
        if !r.informational && !r.pass {
            failures.push(r.summary());
        }
    }
    let licm_line = match licm.first_violation {
        None => format!("LICM order<={} points={} pass", licm.order, licm.points),
        Some((n, t)) => format!("LICM order<={} points={} fail (order {n} sign at t = {t})", licm.order, licm.points),
    };
    eprintln!("{licm_line}");
    if !licm.pass {
        failures.push(licm_line);
    }

    let mut summary = Summary::new("verify", if failures.is_empty() { "pass" } else { "fail" });
    summary.max_residual = reports
        .iter()
        .filter(|(_, r)| !r.informational)
        .map(|(_, r)| r.max_residual)
        .reduce(f64::max);
    let files = reports.iter().map(|(name, r)| (*name, r.to_csv())).collect();
    finish(config, dir, files, &summary)?;
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(CliError::Verification { summary: Box::new(summary), detail: failures.join("; ") })
    }
}

fn residual_csv(report: &SolveReport) -> String {
    let mut out = String::from("t,residual\n");
    if let Some(res) = &report.residuals {
        for (t, r) in report.times.iter().zip(res) {
            if r.is_finite() {
                let _ = writeln!(out, "{t:e},{r:e}");
            }
        }
    }
    out
}

/// Max error, or the discrete L¹ relative error when the solution is singular
/// at the origin.
fn vie_error(report: &SolveReport, exact: &Option<Expr>) -> Result<Option<f64>, CliError> {
    let Some(exact) = exact else { return Ok(None) };
    let u = |t: f64| exact.eval(&Bindings::t(t)).unwrap_or(f64::NAN);
    if let Some(t) = report.times.iter().copied().filter(|t| *t > 0.0).find(|t| !u(*t).is_finite()) {
        return Err(CliError::Config(format!("forcing.exact is not finite at t = {t}")));
    }
    Ok(Some(if report.singular_origin {
        report.l1_relative_error(u)
    } else {
        report.max_error(u)
    }))
}

fn solve_vie(config: &RunConfig, variant: Variant, steps: usize) -> Result<Level, CliError> {
    let pair = config.pair()?;
    let weight = config.weight()?;
    let section = config.forcing()?;
    let exact = config.exact()?;
    let forcing = if section.manufactured {
        let u = exact.as_ref().ok_or_else(|| CliError::Config("manufactured forcing needs forcing.exact".into()))?;
        manufactured_forcing(&pair, &weight, variant, u).map_err(classify)?
    } else {
        let f = section.f.as_ref().ok_or_else(|| CliError::Config("forcing.f is required".into()))?;
        Forcing::from_expr(&parse_expr("forcing.f", f)?).map_err(classify)?
    };
    let mesh = config.mesh(steps, pair.alpha0())?;
    let problem = FirstKindProblem { pair, weight, forcing, variant };
    let report = solve_first_kind(&problem, &mesh, Strategy::SecondKind).map_err(classify)?;
    Ok(Level {
        steps,
        max_residual: report.max_residual(),
        error: vie_error(&report, &exact)?,
        files: vec![("solution.csv", report.to_csv()), ("residual.csv", residual_csv(&report))],
    })
}

fn solve_ode(config: &RunConfig, steps: usize) -> Result<Level, CliError> {
    let pair = config.pair()?;
    let weight = config.weight()?;
    let section = config.forcing()?;
    if section.manufactured {
        return Err(CliError::Config("manufactured forcing is not available for the ode kind".into()));
    }
    let f = section.f.as_ref().ok_or_else(|| CliError::Config("forcing.f is required".into()))?;
    let forcing = Forcing::from_expr(&parse_expr("forcing.f", f)?).map_err(classify)?;
    let mesh = config.mesh(steps, pair.alpha0())?;
    let problem = NonlocalOdeProblem { pair, weight, forcing, c: section.c };
    let report = solve_nonlocal_ode(&problem, &mesh).map_err(classify)?;
    Ok(Level {
        steps,
        max_residual: report.max_residual(),
        error: vie_error(&report, &config.exact()?)?,
        files: vec![("solution.csv", report.to_csv())],
    })
}

fn solve_pde(config: &RunConfig, steps: usize, interior: usize) -> Result<Level, CliError> {
    let pair = config.pair()?;
    let weight = config.weight()?;
    let section = config.forcing()?;
    let (forcing, exact) = if section.manufactured {
        let (Some(time), Some(space)) = (&section.time, &section.space) else {
            return Err(CliError::Config("manufactured pde forcing needs forcing.time and forcing.space".into()));
        };
        let exact = parse_expr("forcing.exact", &format!("({time})*({space})"))?;
        let time = parse_expr("forcing.time", time)?;
        let space = parse_expr("forcing.space", space)?;
        (PdeForcing::manufactured(&pair, &weight, &time, &space).map_err(classify)?, Some(exact))
    } else {
        let f = section.f.as_ref().ok_or_else(|| CliError::Config("forcing.f is required".into()))?;
        (PdeForcing::from_expr(&parse_expr("forcing.f", f)?).map_err(classify)?, config.exact()?)
    };
    let initial = parse_expr("forcing.initial", section.initial.as_deref().unwrap_or("0"))?;
    // smooth-in-time data: uniform unless a grading is configured
    let mesh = if config.mesh.grading.is_some() {
        config.mesh(steps, pair.alpha0())?
    } else {
        sonine_core::quadrature::Mesh::uniform(pair.horizon(), steps).map_err(classify)?
    };
    let pde = PdeConfig { interior, mesh, pair, weight, forcing, initial, exact };
    let sol = solve_subdiffusion(&pde).map_err(classify)?;
    Ok(Level {
        steps,
        max_residual: sol.diagnostics.iter().map(|d| d.linear_residual).reduce(f64::max),
        error: sol.final_error,
        files: vec![("solution.csv", sol.to_csv())],
    })
}

fn run_level(config: &RunConfig, kind: Kind, steps: usize, interior: usize) -> Result<Level, CliError> {
    match kind {
        Kind::Vie1 => solve_vie(config, Variant::Weighted, steps),
        Kind::Vie1k => solve_vie(config, Variant::KKernel, steps),
        Kind::Ode => solve_ode(config, steps),
        Kind::Pde => solve_pde(config, steps, interior),
    }
}

pub fn solve(config: &RunConfig, kind: Kind, dir: &Path) -> Result<Summary, CliError> {
    let level = run_level(config, kind, config.steps(), config.interior())?;
    let mut summary = Summary::new("solve", "ok");
    summary.max_residual = level.max_residual;
    summary.error = level.error;
    if let Some(e) = level.error {
        eprintln!("N={} error={e:e}", level.steps);
    }
    finish(config, dir, level.files, &summary)?;
    Ok(summary)
}

pub fn converge(config: &RunConfig, kind: Kind, doublings: usize, dir: &Path) -> Result<Summary, CliError> {
    let section = config.forcing()?;
    let has_exact = match kind {
        Kind::Pde if section.manufactured => true,
        _ => section.exact.is_some(),
    };
    if !has_exact {
        return Err(CliError::Config("converge needs an exact solution (forcing.exact)".into()));
    }
    let levels = (0..=doublings)
        .into_par_iter()
        .map(|d| run_level(config, kind, config.steps() << d, config.interior() << d))
        .collect::<Result<Vec<_>, _>>()?;
    let steps: Vec<usize> = levels.iter().map(|l| l.steps).collect();
    let errors: Vec<f64> = levels.iter().map(|l| l.error.unwrap_or(f64::NAN)).collect();
    let history = RefinementHistory::from_errors(&steps, &errors);
    for row in &history.rows {
        eprintln!("N={} error={:e}", row.steps, row.error);
    }
    let mut summary = Summary::new("converge", "ok");
    let last = levels.last().expect("at least one level");
    summary.max_residual = last.max_residual;
    summary.error = last.error;
    summary.order = if doublings == 0 {
        None
    } else if history.all_exact() {
        Some(Value::from("exact"))
    } else {
        history.last_order().map(Value::from)
    };
    finish(config, dir, vec![("convergence.csv", history.to_csv())], &summary)?;
    Ok(summary)
}
