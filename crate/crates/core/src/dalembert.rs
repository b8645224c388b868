//! Free wave solution on the moving interval and its traveling-wave split.
//!
//! `A(t, r) = f_plus(t + r) + f_minus(t - r)` solves `A_tt = A_rr` with
//! `A(t, 0) = z(t)`, `A(t, rho(t)) = 0` and the initial data `(h0, h1)`.

use crate::error::{DebondError, Result};
use crate::fields::HData;
use crate::geometry::FrontCurve;

/// Traveling waves of the free solution for one window.
#[derive(Debug, Clone, Copy)]
pub struct TravelingWaves<'a> {
    pub data: &'a HData,
    pub front: &'a FrontCurve,
    pub t_star: f64,
}

pub fn traveling_decomposition<'a>(data: &'a HData, front: &'a FrontCurve) -> TravelingWaves<'a> {
    TravelingWaves {
        data,
        front,
        t_star: front.t_end(),
    }
}

impl TravelingWaves<'_> {
    pub fn f_plus(&self, s: f64) -> f64 {
        let d = self.data;
        if s <= d.rho0 {
            0.5 * d.h0(s) + 0.5 * d.h1_integral(s)
        } else {
            let u = -self.front.omega_at(s);
            -0.5 * d.h0(u) + 0.5 * d.h1_integral(u)
        }
    }

    pub fn f_minus(&self, s: f64) -> f64 {
        let d = self.data;
        if s <= 0.0 {
            0.5 * d.h0(-s) - 0.5 * d.h1_integral(-s)
        } else {
            d.z(s) - 0.5 * d.h0(s) - 0.5 * d.h1_integral(s)
        }
    }

    pub fn f_plus_dot(&self, s: f64) -> f64 {
        let d = self.data;
        if s < d.rho0 {
            0.5 * (d.h0_dot(s) + d.h1(s))
        } else {
            let u = -self.front.omega_at(s);
            0.5 * self.front.omega_dot_at(s) * (d.h0_dot(u) - d.h1(u))
        }
    }

    pub fn f_minus_dot(&self, s: f64) -> f64 {
        let d = self.data;
        if s <= 0.0 {
            -0.5 * d.h0_dot(-s) + 0.5 * d.h1(-s)
        } else {
            d.z_dot(s) - 0.5 * d.h0_dot(s) - 0.5 * d.h1(s)
        }
    }

    pub fn value(&self, t: f64, r: f64) -> f64 {
        self.f_plus(t + r) + self.f_minus(t - r)
    }

    pub fn derivatives(&self, t: f64, r: f64) -> (f64, f64) {
        if r > self.front.rho_at(t) + 1e-12 {
            return (0.0, 0.0);
        }
        let p = self.f_plus_dot(t + r);
        let m = self.f_minus_dot(t - r);
        (p + m, p - m)
    }
}

fn check_apex(front: &FrontCurve, t: f64, r: f64) -> Result<()> {
    let tol = 1e-10;
    let rho0 = front.rho0();
    let inside = t >= -tol && r >= -tol && t <= front.t_end() + tol && r <= front.rho_at(t) + tol;
    let covered = t <= r + tol || t + r <= rho0 + tol;
    if inside && covered {
        Ok(())
    } else {
        Err(DebondError::ApexOutside { t, r })
    }
}

/// Free solution at a point of the admissible region.
pub fn free_solution(data: &HData, front: &FrontCurve, t: f64, r: f64) -> Result<f64> {
    check_apex(front, t, r)?;
    Ok(traveling_decomposition(data, front).value(t, r))
}

/// `(A_t, A_r)`, assembled from the wave slopes; zero past the front.
pub fn free_derivatives(waves: &TravelingWaves<'_>, t: f64, r: f64) -> Result<(f64, f64)> {
    if r > waves.front.rho_at(t) + 1e-12 {
        return Ok((0.0, 0.0));
    }
    check_apex(waves.front, t, r)?;
    Ok(waves.derivatives(t, r))
}
