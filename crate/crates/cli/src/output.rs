//! CSV series, field snapshots, gnuplot scripts and the JSON report.

use std::fs;
use std::path::{Path, PathBuf};

use debond::energy_audit::EnergyLedger;
use debond::geometry::FrontCurve;
use debond::prescribed::{evaluate_field, Solution};

use crate::error::Result;
use crate::report::{Report, LevelRow, SCHEMA};

pub const LEDGER_FILE: &str = "ledger.csv";
pub const FRONT_FILE: &str = "front.csv";
pub const FIELD_FILE: &str = "fields.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SCHEMA_FILE: &str = "report.schema.json";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const PLOT_FILE: &str = "plot.gp";

pub const LEDGER_COLUMNS: [&str; 11] = [
    "t",
    "rho",
    "rho_dot",
    "E",
    "A_fric",
    "T_total",
    "W",
    "D_debond",
    "G0",
    "edp_residual",
    "kkt_residual",
];

pub const FIELD_COLUMNS: [&str; 7] = ["t", "r", "h", "v", "u", "v_t", "v_r"];

/// 17 significant digits, enough to read back the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(num))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ledger(path: &Path, l: &EnergyLedger) -> Result<()> {
    let rows = (0..l.len()).map(|i| {
        vec![
            l.times[i],
            l.rho[i],
            l.rho_dot[i],
            l.internal[i],
            l.friction[i],
            l.total[i],
            l.work[i],
            l.debond[i],
            l.g0[i],
            l.edp_residual[i],
            l.kkt_residual[i],
        ]
    });
    write_rows(path, &LEDGER_COLUMNS, rows)
}

/// Front knots up to `t_end`.
pub fn write_front(path: &Path, front: &FrontCurve, t_end: f64) -> Result<()> {
    let mut knots: Vec<(f64, f64)> = front.knots().iter().copied().filter(|k| k.0 < t_end).collect();
    knots.push((t_end, front.rho(t_end)?));
    write_rows(path, &["t", "rho"], knots.into_iter().map(|(t, r)| vec![t, r]))
}

pub fn write_snapshots(path: &Path, solution: &Solution, times: &[f64], points: usize) -> Result<()> {
    let t_end = solution.t_end();
    let mut rows = Vec::new();
    for &t in times {
        let t = t.min(t_end);
        let rho = solution.front.rho(t)?;
        for k in 0..points {
            let r = rho * k as f64 / (points - 1) as f64;
            let s = evaluate_field(solution, t, r)?;
            rows.push(vec![t, r, s.h, s.v, s.u, s.v_t, s.v_r]);
        }
    }
    write_rows(path, &FIELD_COLUMNS, rows.into_iter())
}

pub fn write_convergence(path: &Path, levels: &[LevelRow]) -> Result<()> {
    let rows = levels.iter().map(|l| {
        vec![
            l.level as f64,
            l.dt,
            l.oracle_l2,
            l.rate_l1,
            l.edp_relative,
            l.kkt_max.unwrap_or(f64::NAN),
        ]
    });
    let mut w = writer(path)?;
    w.write_record(["level", "dt", "oracle_l2", "rate_l1", "edp_relative", "kkt_max"])?;
    for row in rows {
        let mut fields: Vec<String> = vec![format!("{}", row[0] as usize)];
        fields.extend(row[1..].iter().map(|x| num(*x)));
        w.write_record(fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the report with its schema next to it.
pub fn write_report(dir: &Path, report: &Report) -> Result<Vec<PathBuf>> {
    let path = dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text)?;
    let schema = dir.join(SCHEMA_FILE);
    fs::write(&schema, SCHEMA)?;
    Ok(vec![path, schema])
}

/// Gnuplot script for the files present in a run directory.
pub fn plot_script(ledger: bool, fields: bool, convergence: bool) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset grid\n");
    if ledger {
        s.push_str(
            "\nset terminal pngcairo size 900,600\nset output 'front.png'\nset xlabel 't'\nset ylabel 'rho'\n\
             plot 'ledger.csv' using 1:2 with lines, '' using 1:3 with lines\n\
             \nset output 'energy.png'\nset ylabel 'energy'\n\
             plot 'ledger.csv' using 1:4 with lines, '' using 1:5 with lines, '' using 1:6 with lines, \
             '' using 1:7 with lines, '' using 1:8 with lines\n\
             \nset output 'residuals.png'\nset ylabel 'residual'\n\
             plot 'ledger.csv' using 1:10 with lines, '' using 1:11 with lines\n",
        );
    }
    if fields {
        s.push_str(
            "\nset output 'fields.png'\nset xlabel 'r'\nset ylabel 'v'\n\
             plot 'fields.csv' using 2:4:1 with points palette title 'v'\n",
        );
    }
    if convergence {
        s.push_str(
            "\nset output 'convergence.png'\nset logscale xy\nset xlabel 'dt'\nset ylabel 'error'\n\
             plot 'convergence.csv' using 2:3 with linespoints, '' using 2:4 with linespoints, \
             '' using 2:5 with linespoints\n",
        );
    }
    s
}

pub fn write_plot(path: &Path, ledger: bool, fields: bool, convergence: bool) -> Result<()> {
    fs::write(path, plot_script(ledger, fields, convergence))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_read_back_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
