//! Run drivers behind the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use debond::energy_audit::{audit, AuditOptions, EnergyLedger};
use debond::griffith::{run, CoupledDiagnostics, StopReason};
use debond::oracle::{discrepancy_l2, solve_reference, OracleHistory};
use debond::prescribed::{march, Solution};

use crate::config::{FrontSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::output;
use crate::report::{Bound, Check, Convergence, EnergySummary, LevelRow, Orders, Report, Verification, WindowReport};

/// Verification thresholds, fixed from the refinement studies of the bundled scenarios.
pub const MIN_ORDER: f64 = 1.0;
/// Griffith fronts switch on with a speed jump, which caps both orders near 1.
pub const COUPLED_MIN_ORDER: f64 = 0.8;
pub const RATE_FORM_TOL: f64 = 1e-10;
pub const TWO_PATH_TOL: f64 = 1e-3;
pub const KKT_REL_TOL: f64 = 1e-3;

/// A solved run with its energy audit.
pub struct Solved {
    pub solution: Solution,
    pub ledger: EnergyLedger,
    pub stop_reason: StopReason,
    pub coupled: Option<CoupledDiagnostics>,
}

pub struct Artifacts {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

pub fn solve_at(cfg: &RunConfig, dt: f64) -> Result<Solved> {
    let data = cfg.problem()?;
    let tough = cfg.toughness()?;
    let horizon = cfg.physics.horizon;
    let options = AuditOptions::default();
    match cfg.front()? {
        Some(front) => {
            let solution = march(&data, &front, horizon, &cfg.solver_at(dt))?;
            let ledger = audit(&solution.patches, &front, tough.as_ref(), &options)?;
            Ok(Solved {
                solution,
                ledger,
                stop_reason: StopReason::Horizon,
                coupled: None,
            })
        }
        None => {
            let tough = tough.ok_or_else(|| CliError::Config("a griffith front needs a toughness".into()))?;
            let g = run(&data, &tough, horizon, &cfg.coupled_at(dt))?;
            let ledger = audit(&g.patches, &g.front, Some(&tough), &options)?;
            Ok(Solved {
                solution: g.solution(),
                ledger,
                stop_reason: g.stop_reason,
                coupled: Some(g.diagnostics),
            })
        }
    }
}

fn report(cfg: &RunConfig, command: &str, dt: f64, s: &Solved) -> Report {
    Report {
        schema_version: crate::report::SCHEMA_VERSION,
        command: command.into(),
        name: cfg.name.clone(),
        dt,
        horizon: cfg.physics.horizon,
        t_end: s.solution.t_end(),
        stop_reason: s.stop_reason,
        windows: s.solution.patches.iter().map(WindowReport::from).collect(),
        seam_jumps: s.solution.seam_jumps.clone(),
        coupled: s.coupled.clone(),
        energy: EnergySummary::from(&s.ledger),
        verification: None,
        convergence: None,
    }
}

fn write_run(cfg: &RunConfig, out: &Path, s: &Solved, report: &Report) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut files = vec![out.join(output::LEDGER_FILE), out.join(output::FRONT_FILE), out.join(output::FIELD_FILE)];
    output::write_ledger(&files[0], &s.ledger)?;
    output::write_front(&files[1], &s.solution.front, s.solution.t_end())?;
    output::write_snapshots(&files[2], &s.solution, &cfg.snapshot_times(), cfg.outputs.snapshot_points)?;
    files.extend(output::write_report(out, report)?);
    if cfg.outputs.plot {
        let plot = out.join(output::PLOT_FILE);
        output::write_plot(&plot, true, true, report.convergence.is_some())?;
        files.push(plot);
    }
    Ok(files)
}

pub fn run_prescribed(cfg: &RunConfig, out: &Path) -> Result<Artifacts> {
    if cfg.is_coupled() {
        return Err(CliError::Config("solve-prescribed needs a prescribed front; use solve-coupled".into()));
    }
    let dt = cfg.numerics.dt;
    let s = solve_at(cfg, dt)?;
    let report = report(cfg, "solve-prescribed", dt, &s);
    let files = write_run(cfg, out, &s, &report)?;
    Ok(Artifacts { report, files })
}

pub fn run_coupled(cfg: &RunConfig, out: &Path) -> Result<Artifacts> {
    if !cfg.is_coupled() {
        return Err(CliError::Config("solve-coupled needs front.kind = \"griffith\"".into()));
    }
    let dt = cfg.numerics.dt;
    let s = solve_at(cfg, dt)?;
    let report = report(cfg, "solve-coupled", dt, &s);
    let files = write_run(cfg, out, &s, &report)?;
    Ok(Artifacts { report, files })
}

fn oracle_for(cfg: &RunConfig, s: &Solved, dt: f64) -> Result<(OracleHistory, f64)> {
    let data = cfg.problem()?;
    let hist = solve_reference(&data, &s.solution.front, s.solution.t_end(), dt, dt / 2.0)?;
    let d = discrepancy_l2(&hist, &s.solution)?;
    Ok((hist, d))
}

/// `L1` distance in time between the closed-form energy rate and the differenced energy.
pub fn rate_l1(l: &EnergyLedger) -> f64 {
    let n = l.len();
    if n < 3 {
        return f64::NAN;
    }
    (1..n - 1)
        .map(|i| (l.energy_rate[i] - l.energy_rate_fd[i]).abs() * (l.times[i + 1] - l.times[i]))
        .sum()
}

fn largest(xs: impl Iterator<Item = f64>) -> f64 {
    xs.filter(|x| x.is_finite()).fold(0.0, f64::max)
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Least-squares slope of `log2(err)` against level.
pub fn fitted_order(errs: &[f64]) -> Option<f64> {
    if errs.len() < 2 || errs.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return None;
    }
    let n = errs.len() as f64;
    let my = errs.iter().map(|e| e.log2()).sum::<f64>() / n;
    let mx = (n - 1.0) / 2.0;
    let (num, den) = errs.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, e)| {
        let x = k as f64 - mx;
        (a + x * (e.log2() - my), b + x * x)
    });
    Some(-num / den)
}

pub fn verification(cfg: &RunConfig, dt: f64) -> Result<(Solved, Verification)> {
    let base = solve_at(cfg, dt)?;
    let fine = solve_at(cfg, dt / 2.0)?;
    let (hist, d_base) = oracle_for(cfg, &base, dt)?;
    let (_, d_fine) = oracle_for(cfg, &fine, dt / 2.0)?;
    let min_order = if cfg.is_coupled() { COUPLED_MIN_ORDER } else { MIN_ORDER };
    let mut checks = vec![Check::at_least("oracle_order", order(d_base, d_fine), min_order)];

    let tol = cfg.numerics.tol;
    let contraction = largest(base.solution.patches.iter().flat_map(|p| {
        let d = &p.diagnostics;
        let q = p.plan.contraction_bound;
        d.factors
            .iter()
            .zip(&d.changes)
            .filter(move |(_, c)| **c > 1e3 * tol)
            .map(move |(f, _)| f / q)
    }));
    checks.push(Check::at_most("contraction_ratio", contraction, 1.0));

    let l = &base.ledger;
    let forms = largest(
        (0..l.len()).map(|i| (l.energy_rate[i] - l.energy_rate_trace[i]).abs() / l.energy_rate[i].abs().max(1.0)),
    );
    checks.push(Check::at_most("rate_forms", forms, RATE_FORM_TOL));
    checks.push(Check::at_least("rate_order", order(rate_l1(l), rate_l1(&fine.ledger)), min_order));

    let moving: Vec<usize> = (0..l.len().saturating_sub(1)).filter(|i| l.g_quotient[*i].is_finite()).collect();
    if moving.is_empty() {
        checks.push(Check::skipped("two_path_err", Bound::AtMost, TWO_PATH_TOL));
    } else {
        let gap = largest(
            moving.iter().map(|&i| (l.g_quotient[i] - l.g_beta[i]).abs() / l.g_beta[i].abs().max(1e-12)),
        );
        checks.push(Check::at_most("two_path_err", gap, TWO_PATH_TOL));
    }

    match cfg.toughness()? {
        Some(t) => {
            let scale = t.bounds().1;
            checks.push(Check::at_most("kkt", l.max_kkt_residual(), KKT_REL_TOL * scale));
            let bad = l.mdp_flags.iter().filter(|f| !**f).count();
            checks.push(Check::at_most("mdp_violations", bad as f64, 0.0));
        }
        None => {
            checks.push(Check::skipped("kkt", Bound::AtMost, KKT_REL_TOL));
            checks.push(Check::skipped("mdp_violations", Bound::AtMost, 0.0));
        }
    }

    let identity_map = cfg.front == FrontSpec::Static {} || base.ledger.rho.iter().all(|r| *r == cfg.geometry.initial_width);
    if identity_map {
        checks.push(Check::at_most("identity_principal", (hist.min_principal - 1.0).abs(), 1e-12));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok((
        base,
        Verification {
            checks,
            min_principal: hist.min_principal,
            identity_map,
            passed,
        },
    ))
}

/// Writes the verification report; the caller maps `passed = false` to a failure.
pub fn run_verify(cfg: &RunConfig, out: &Path) -> Result<Artifacts> {
    let dt = cfg.numerics.dt;
    let (s, v) = verification(cfg, dt)?;
    let mut report = report(cfg, "verify", dt, &s);
    report.verification = Some(v);
    let files = write_run(cfg, out, &s, &report)?;
    Ok(Artifacts { report, files })
}

pub fn convergence(cfg: &RunConfig, levels: usize) -> Result<(Solved, Convergence)> {
    let levels = levels.max(1);
    let mut rows = Vec::with_capacity(levels);
    let mut first = None;
    for k in 0..levels {
        let dt = cfg.numerics.dt / f64::powi(2.0, k as i32);
        let s = solve_at(cfg, dt)?;
        let (_, d) = oracle_for(cfg, &s, dt)?;
        let kkt = cfg.toughness()?.map(|_| s.ledger.max_kkt_residual());
        rows.push(LevelRow {
            level: k,
            dt,
            oracle_l2: d,
            rate_l1: rate_l1(&s.ledger),
            edp_relative: s.ledger.max_relative_edp(),
            kkt_max: kkt,
        });
        if first.is_none() {
            first = Some(s);
        }
    }
    let pick = |f: fn(&LevelRow) -> f64| fitted_order(&rows.iter().map(f).collect::<Vec<_>>());
    let orders = Orders {
        oracle_l2: pick(|r| r.oracle_l2),
        rate_l1: pick(|r| r.rate_l1),
        edp_relative: pick(|r| r.edp_relative),
    };
    let edp_decreasing = rows.windows(2).all(|w| w[1].edp_relative < w[0].edp_relative);
    let warning = (levels == 1).then(|| "single level: no orders fitted".to_string());
    let base = first.expect("at least one level");
    Ok((
        base,
        Convergence {
            levels: rows,
            orders,
            edp_decreasing,
            warning,
        },
    ))
}

pub fn run_convergence(cfg: &RunConfig, levels: usize, out: &Path) -> Result<Artifacts> {
    let (s, c) = convergence(cfg, levels)?;
    fs::create_dir_all(out)?;
    let table = out.join(output::CONVERGENCE_FILE);
    output::write_convergence(&table, &c.levels)?;
    let mut report = report(cfg, "converge", cfg.numerics.dt, &s);
    report.convergence = Some(c);
    let mut files = write_run(cfg, out, &s, &report)?;
    files.push(table);
    Ok(Artifacts { report, files })
}
