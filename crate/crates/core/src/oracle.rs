//! Finite-difference reference solver on a fixed interval.
//!
//! The moving interval `[0, rho(t)]` is mapped onto `[0, rho0]` by
//! `y = rho0 r / rho(t)`, turning the `h` equation into
//! `U_tt + 2 a U_ty - B1 U_yy + b U_y = c U` with `a = -y rho' / rho`,
//! `B1 = (rho0 / rho)^2 - a^2` and `b = 2 y rho'^2 / rho^2 - y rho'' / rho`.
//! Time stepping is leapfrog with the mixed term taken implicitly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};
use crate::fields::{kernel_coefficient, to_h_data, HData, ProblemData};
use crate::geometry::FrontCurve;
use crate::prescribed::Solution;

pub fn fixed_map(front: &FrontCurve, t: f64, r: f64) -> Result<f64> {
    let rho = front.rho(t)?;
    if r < -1e-12 || r > rho + 1e-12 {
        return Err(DebondError::OutOfDomain {
            what: "r",
            value: r,
            lo: 0.0,
            hi: rho,
        });
    }
    Ok(front.rho0() * r / rho)
}

pub fn inverse_map(front: &FrontCurve, t: f64, y: f64) -> Result<f64> {
    Ok(y * front.rho(t)? / front.rho0())
}

/// Coefficients of the mapped equation at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedDomainCoeffs {
    /// Principal coefficient `B1` of `-U_yy`.
    pub principal: f64,
    /// Coefficient `2 a` of `U_ty`.
    pub mixed: f64,
    /// Coefficient `b` of `U_y`.
    pub transport: f64,
    /// Zeroth-order coefficient `c(r)` on the right-hand side.
    pub reaction: f64,
    /// Coercivity margin, equal to `B1` at this point.
    pub delta: f64,
}

fn coeffs_from(
    rho0: f64,
    rho: f64,
    rho_dot: f64,
    rho_ddot: f64,
    y: f64,
    alpha: f64,
    outer: f64,
) -> FixedDomainCoeffs {
    let a = -y * rho_dot / rho;
    let b1 = (rho0 / rho).powi(2) - a * a;
    let b = 2.0 * y * rho_dot * rho_dot / (rho * rho) - y * rho_ddot / rho;
    FixedDomainCoeffs {
        principal: b1,
        mixed: 2.0 * a,
        transport: b,
        reaction: kernel_coefficient(alpha, outer, y * rho / rho0),
        delta: b1,
    }
}

/// Coefficients for a piecewise-linear front (`rho'' = 0` inside pieces).
pub fn coeffs(front: &FrontCurve, t: f64, y: f64, alpha: f64) -> Result<FixedDomainCoeffs> {
    let rho = front.rho(t)?;
    let rho_dot = front.rho_dot(t)?;
    let c = coeffs_from(front.rho0(), rho, rho_dot, 0.0, y, alpha, front.outer());
    if !(c.principal > 0.0) {
        return Err(DebondError::Coercivity {
            t,
            y,
            coefficient: c.principal,
        });
    }
    Ok(c)
}

/// Stored time levels of a reference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleHistory {
    pub dy: f64,
    pub dt: f64,
    pub rho0: f64,
    pub times: Vec<f64>,
    pub fronts: Vec<f64>,
    /// `values[n][j] = U(t_n, j dy)`.
    pub values: Vec<Vec<f64>>,
    pub min_principal: f64,
}

impl OracleHistory {
    pub fn nodes(&self) -> usize {
        self.values.first().map(|v| v.len()).unwrap_or(0)
    }

    /// `h` at level `n` and physical `r`, by linear interpolation in `y`.
    pub fn value_at_level(&self, n: usize, r: f64) -> f64 {
        let y = self.rho0 * r / self.fronts[n];
        let x = (y / self.dy).clamp(0.0, (self.nodes() - 1) as f64);
        let j = (x.floor() as usize).min(self.nodes() - 2);
        let th = x - j as f64;
        (1.0 - th) * self.values[n][j] + th * self.values[n][j + 1]
    }

    /// Discrete energy at an interior level, static fronts only.
    pub fn energy(&self, n: usize, data: &HData, alpha: f64) -> f64 {
        let u = &self.values;
        let t = self.times[n];
        let mut acc = 0.0;
        let nodes = self.nodes();
        for j in 0..nodes {
            let r = j as f64 * self.dy;
            let h = u[n][j];
            let h_t = (u[n + 1][j] - u[n - 1][j]) / (2.0 * self.dt);
            let h_r = if j == 0 {
                (u[n][1] - u[n][0]) / self.dy
            } else if j == nodes - 1 {
                (u[n][j] - u[n][j - 1]) / self.dy
            } else {
                (u[n][j + 1] - u[n][j - 1]) / (2.0 * self.dy)
            };
            let a = h_t - 0.5 * alpha * h;
            let b = h_r + 0.5 * h / (data.outer - r);
            let w = if j == 0 || j == nodes - 1 { 0.5 } else { 1.0 };
            acc += w * (a * a + b * b);
        }
        std::f64::consts::PI * (-alpha * t).exp() * acc * self.dy
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for k in 1..n {
        c[k - 1] = upper[k - 1] / beta;
        beta = diag[k] - lower[k] * c[k - 1];
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
}

/// Leapfrog reference run on `[0, horizon]`.
pub fn solve_reference(
    data: &ProblemData,
    front: &FrontCurve,
    horizon: f64,
    dy: f64,
    dt: f64,
) -> Result<OracleHistory> {
    let hd = to_h_data(data)?;
    let rho0 = front.rho0();
    let nodes_f = rho0 / dy;
    if (nodes_f - nodes_f.round()).abs() > 1e-9 || nodes_f.round() < 2.0 {
        return Err(DebondError::InvalidData(format!("dy = {dy} must divide rho0 = {rho0}")));
    }
    let n_y = nodes_f.round() as usize;
    let steps_f = horizon / dt;
    let steps = if (steps_f - steps_f.round()).abs() < 1e-9 {
        steps_f.round() as usize
    } else {
        steps_f.floor() as usize
    };
    let (alpha, outer) = (data.alpha, data.outer_radius);
    let fronts: Vec<f64> = (0..=steps + 1).map(|n| front.rho_at(n as f64 * dt)).collect();
    let times: Vec<f64> = (0..=steps).map(|n| n as f64 * dt).collect();
    let ys: Vec<f64> = (0..=n_y).map(|j| j as f64 * dy).collect();
    let mut min_principal = f64::INFINITY;

    let level_coeffs = |n: usize, min_b: &mut f64| -> Result<Vec<FixedDomainCoeffs>> {
        let rho = fronts[n];
        let (rd, rdd) = if n == 0 {
            (front.rho_dot_at(0.0), 0.0)
        } else {
            (
                (fronts[n + 1] - fronts[n - 1]) / (2.0 * dt),
                (fronts[n + 1] - 2.0 * fronts[n] + fronts[n - 1]) / (dt * dt),
            )
        };
        let cs: Vec<FixedDomainCoeffs> =
            ys.iter().map(|&y| coeffs_from(rho0, rho, rd, rdd, y, alpha, outer)).collect();
        let mut bmax: f64 = 0.0;
        for (j, c) in cs.iter().enumerate() {
            if !(c.principal > 0.0) {
                return Err(DebondError::Coercivity {
                    t: n as f64 * dt,
                    y: ys[j],
                    coefficient: c.principal,
                });
            }
            *min_b = min_b.min(c.principal);
            bmax = bmax.max(c.principal);
        }
        let bound = 0.9 * dy / bmax.sqrt();
        if dt > bound {
            return Err(DebondError::Cfl { dt, bound });
        }
        Ok(cs)
    };

    let dyy = |u: &[f64], j: usize| (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (dy * dy);
    let dy1 = |u: &[f64], j: usize| (u[j + 1] - u[j - 1]) / (2.0 * dy);

    let u0: Vec<f64> = ys.iter().map(|&y| hd.h0(y)).collect();
    let ut: Vec<f64> = ys
        .iter()
        .map(|&y| hd.h1(y) + y * front.rho_dot_at(0.0) / rho0 * hd.h0_dot(y))
        .collect();
    let mut values = vec![u0.clone()];
    if steps == 0 {
        return Ok(OracleHistory {
            dy,
            dt,
            rho0,
            times,
            fronts: fronts[..1].to_vec(),
            values,
            min_principal: f64::NAN,
        });
    }
    let c0 = level_coeffs(0, &mut min_principal)?;
    let mut u1 = vec![0.0; n_y + 1];
    for j in 1..n_y {
        let c = &c0[j];
        let utt = c.principal * dyy(&u0, j) - c.transport * dy1(&u0, j) + c.reaction * u0[j] - c.mixed * dy1(&ut, j);
        u1[j] = u0[j] + dt * ut[j] + 0.5 * dt * dt * utt;
    }
    u1[0] = hd.z(dt);
    u1[n_y] = 0.0;
    values.push(u1);

    for n in 1..steps {
        let cs = level_coeffs(n, &mut min_principal)?;
        let (prev, cur) = (&values[n - 1], &values[n]);
        let interior = n_y - 1;
        let kap: Vec<f64> = (1..n_y).map(|j| 0.5 * cs[j].mixed * dt / (2.0 * dy)).collect();
        let mut rhs: Vec<f64> = (1..n_y)
            .into_par_iter()
            .map(|j| {
                let c = &cs[j];
                let k = kap[j - 1];
                2.0 * cur[j] - prev[j]
                    + k * (prev[j + 1] - prev[j - 1])
                    + dt * dt * (c.principal * dyy(cur, j) - c.transport * dy1(cur, j) + c.reaction * cur[j])
            })
            .collect();
        let z_next = hd.z((n + 1) as f64 * dt);
        rhs[0] += kap[0] * z_next;
        let lower: Vec<f64> = kap.iter().map(|k| -k).collect();
        let diag = vec![1.0; interior];
        let upper = kap.clone();
        thomas(&lower, &diag, &upper, &mut rhs);
        let mut next = Vec::with_capacity(n_y + 1);
        next.push(z_next);
        next.extend_from_slice(&rhs);
        next.push(0.0);
        values.push(next);
    }
    Ok(OracleHistory {
        dy,
        dt,
        rho0,
        times,
        fronts: fronts[..=steps].to_vec(),
        values,
        min_principal,
    })
}

/// Discrete `L^2(0, T; L^2)` distance between the oracle and a marched solution,
/// over the oracle levels that fall on the solution's lattice rows.
pub fn discrepancy_l2(history: &OracleHistory, solution: &Solution) -> Result<f64> {
    let dt_rep = solution.patches[0].dt();
    let ratio = (dt_rep / history.dt).round() as usize;
    let mut acc = 0.0;
    let mut levels = 0;
    for (n, &t) in history.times.iter().enumerate() {
        if ratio == 0 || n % ratio != 0 || t > solution.t_end() + 1e-12 {
            continue;
        }
        let p = solution.patch_at(t)?;
        let tl = t - p.t_start();
        for j in 0..history.nodes() {
            let r = j as f64 * history.dy * history.fronts[n] / history.rho0;
            let e = history.values[n][j] - p.value(tl, r)?;
            acc += e * e * history.dy;
        }
        levels += 1;
    }
    if levels == 0 {
        return Err(DebondError::LatticeCoverage("no shared time levels".into()));
    }
    Ok((acc * dt_rep).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;

    #[test]
    fn map_endpoints_and_scaling() {
        let f = FrontCurve::linear(1.0, 0.5, 3.0, 2.0).unwrap();
        assert_eq!(fixed_map(&f, 1.0, 0.0).unwrap(), 0.0);
        assert!((fixed_map(&f, 1.0, 1.5).unwrap() - 1.0).abs() < 1e-15);
        let g = FrontCurve::linear(1.0, 0.5, 3.0, 2.5).unwrap();
        assert!((fixed_map(&g, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let y = fixed_map(&f, 0.7, 0.4).unwrap();
        assert!((inverse_map(&f, 0.7, y).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn coefficient_examples() {
        let f = FrontCurve::constant(1.0, 3.0, 1.0).unwrap();
        let c = coeffs(&f, 0.5, 0.3, 0.0).unwrap();
        assert_eq!(c.principal, 1.0);
        assert_eq!(c.mixed, 0.0);
        let c = coeffs_from(1.0, 1.5, 0.5, 0.0, 1.0, 0.0, 3.0);
        assert!((c.principal - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_data_stays_zero() {
        let d = ProblemData::new(3.0, 1.0, 0.5, 0.5, Profile::Zero, Profile::Zero, Profile::Zero).unwrap();
        let f = FrontCurve::linear(1.0, 0.4, 3.0, 1.0).unwrap();
        let h = solve_reference(&d, &f, 0.5, 1.0 / 32.0, 1.0 / 64.0).unwrap();
        assert!(h.values.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn cfl_violation_is_reported() {
        let d = ProblemData::new(3.0, 1.0, 0.0, 0.5, Profile::Zero, Profile::Zero, Profile::Zero).unwrap();
        let f = FrontCurve::constant(1.0, 3.0, 1.0).unwrap();
        assert!(matches!(
            solve_reference(&d, &f, 0.5, 1.0 / 32.0, 1.0 / 16.0),
            Err(DebondError::Cfl { .. })
        ));
    }
}
