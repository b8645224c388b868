//! Front parametrization, characteristic maps and dependence regions.
//!
//! Coordinates: `t` is time, `r` the distance from the clamped outer rim, so the
//! debonded annulus is `0 <= r <= rho(t)`. Characteristic coordinates are
//! `xi = t - r` and `eta = t + r`.

use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};

const DOMAIN_SLACK: f64 = 1e-12;

/// Piecewise-linear debonding front `t -> rho(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontCurve {
    knots: Vec<(f64, f64)>,
    outer: f64,
}

impl FrontCurve {
    pub fn new(knots: Vec<(f64, f64)>, outer: f64) -> Result<Self> {
        if knots.len() < 2 {
            return Err(DebondError::InvalidFront("need at least two knots".into()));
        }
        if !(outer.is_finite() && outer > 0.0) {
            return Err(DebondError::InvalidFront(format!("outer radius {outer} is not positive")));
        }
        if knots[0].0 != 0.0 {
            return Err(DebondError::InvalidFront(format!(
                "first knot must sit at t = 0, found {}",
                knots[0].0
            )));
        }
        if !(knots[0].1 > 0.0) {
            return Err(DebondError::InvalidFront("initial width must be positive".into()));
        }
        for (t, rho) in &knots {
            if !(t.is_finite() && rho.is_finite()) {
                return Err(DebondError::InvalidFront("non-finite knot".into()));
            }
            if *rho >= outer {
                return Err(DebondError::InvalidFront(format!(
                    "width {rho} at t = {t} reaches the outer radius {outer}"
                )));
            }
        }
        for w in knots.windows(2) {
            let (t0, r0) = w[0];
            let (t1, r1) = w[1];
            if !(t1 > t0) {
                return Err(DebondError::InvalidFront(format!(
                    "knot times must increase strictly ({t0} then {t1})"
                )));
            }
            let slope = (r1 - r0) / (t1 - t0);
            if !(0.0..1.0).contains(&slope) {
                return Err(DebondError::InvalidFront(format!(
                    "slope {slope} on [{t0}, {t1}] is outside [0, 1)"
                )));
            }
        }
        Ok(FrontCurve { knots, outer })
    }

    pub fn constant(rho0: f64, outer: f64, t_end: f64) -> Result<Self> {
        Self::new(vec![(0.0, rho0), (t_end, rho0)], outer)
    }

    pub fn linear(rho0: f64, speed: f64, outer: f64, t_end: f64) -> Result<Self> {
        Self::new(vec![(0.0, rho0), (t_end, rho0 + speed * t_end)], outer)
    }

    /// Samples a closed-form front on `n` uniform intervals.
    pub fn sampled(rho: impl Fn(f64) -> f64, outer: f64, t_end: f64, n: usize) -> Result<Self> {
        let n = n.max(1);
        let knots = (0..=n)
            .map(|k| {
                let t = t_end * k as f64 / n as f64;
                (t, rho(t))
            })
            .collect();
        Self::new(knots, outer)
    }

    /// Front sampled on uniform rows `t_i = i dt`.
    pub fn from_rows(dt: f64, rows: &[f64], outer: f64) -> Result<Self> {
        let knots = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i as f64 * dt, *r))
            .collect();
        Self::new(knots, outer)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn rho0(&self) -> f64 {
        self.knots[0].1
    }

    pub fn t_end(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    /// Slope of every knot interval.
    pub fn speeds(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    fn slack(&self) -> f64 {
        DOMAIN_SLACK * self.t_end().max(1.0)
    }

    fn check_time(&self, what: &'static str, t: f64) -> Result<()> {
        let s = self.slack();
        if t >= -s && t <= self.t_end() + s {
            Ok(())
        } else {
            Err(DebondError::OutOfDomain {
                what,
                value: t,
                lo: 0.0,
                hi: self.t_end(),
            })
        }
    }

    /// Index of the knot interval used for `t` (right-continuous at knots).
    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        if t <= self.knots[0].0 {
            return 0;
        }
        if t >= self.knots[n - 1].0 {
            return n - 2;
        }
        let idx = self.knots.partition_point(|k| k.0 <= t);
        (idx - 1).min(n - 2)
    }

    fn slope(&self, k: usize) -> f64 {
        let (t0, r0) = self.knots[k];
        let (t1, r1) = self.knots[k + 1];
        (r1 - r0) / (t1 - t0)
    }

    /// `rho(t)` with linear extrapolation past the ends.
    pub(crate) fn rho_at(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let (t0, r0) = self.knots[k];
        if t < 0.0 {
            return r0;
        }
        r0 + self.slope(k) * (t - t0)
    }

    pub(crate) fn rho_dot_at(&self, t: f64) -> f64 {
        self.slope(self.segment(t))
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        self.check_time("t", t)?;
        Ok(self.rho_at(t))
    }

    /// Right derivative of the front.
    pub fn rho_dot(&self, t: f64) -> Result<f64> {
        self.check_time("t", t)?;
        Ok(self.rho_dot_at(t))
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        self.check_time("t", t)?;
        Ok(t - self.rho_at(t))
    }

    pub fn psi(&self, t: f64) -> Result<f64> {
        self.check_time("t", t)?;
        Ok(t + self.rho_at(t))
    }

    pub(crate) fn psi_inverse_at(&self, s: f64) -> f64 {
        let n = self.knots.len();
        let psi_k = |k: usize| self.knots[k].0 + self.knots[k].1;
        let k = if s <= psi_k(0) {
            0
        } else if s >= psi_k(n - 1) {
            n - 2
        } else {
            let mut lo = 0;
            let mut hi = n - 1;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if psi_k(mid) <= s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let (t0, _) = self.knots[k];
        t0 + (s - psi_k(k)) / (1.0 + self.slope(k))
    }

    pub fn psi_inverse(&self, s: f64) -> Result<f64> {
        let lo = self.rho0();
        let hi = self.t_end() + self.rho_at(self.t_end());
        let sl = self.slack();
        if s < lo - sl || s > hi + sl {
            return Err(DebondError::OutOfDomain {
                what: "s",
                value: s,
                lo,
                hi,
            });
        }
        Ok(self.psi_inverse_at(s).max(0.0))
    }

    pub(crate) fn omega_at(&self, s: f64) -> f64 {
        if s < self.rho0() {
            -self.rho0()
        } else {
            let t = self.psi_inverse_at(s).max(0.0);
            t - self.rho_at(t)
        }
    }

    pub(crate) fn omega_dot_at(&self, s: f64) -> f64 {
        if s < self.rho0() {
            0.0
        } else {
            let b = self.rho_dot_at(self.psi_inverse_at(s).max(0.0));
            (1.0 - b) / (1.0 + b)
        }
    }

    fn check_omega_arg(&self, s: f64) -> Result<()> {
        let hi = self.t_end() + self.rho_at(self.t_end());
        if s > hi + self.slack() || s.is_nan() {
            return Err(DebondError::OutOfDomain {
                what: "s",
                value: s,
                lo: f64::NEG_INFINITY,
                hi,
            });
        }
        Ok(())
    }

    /// Reflection map `phi o psi^{-1}`, equal to `-rho0` below `rho0`.
    pub fn omega(&self, s: f64) -> Result<f64> {
        self.check_omega_arg(s)?;
        Ok(self.omega_at(s))
    }

    pub fn omega_dot(&self, s: f64) -> Result<f64> {
        self.check_omega_arg(s)?;
        Ok(self.omega_dot_at(s))
    }

    pub(crate) fn lambda_at(&self, s: f64) -> f64 {
        let n = self.knots.len();
        let phi_k = |k: usize| self.knots[k].0 - self.knots[k].1;
        let k = if s <= phi_k(0) {
            0
        } else if s >= phi_k(n - 1) {
            n - 2
        } else {
            let mut lo = 0;
            let mut hi = n - 1;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if phi_k(mid) <= s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        self.knots[k].0 + (s - phi_k(k)) / (1.0 - self.slope(k))
    }

    /// Inverse of `phi`.
    pub fn lambda_of(&self, s: f64) -> Result<f64> {
        let lo = -self.rho0();
        let hi = self.t_end() - self.rho_at(self.t_end());
        let sl = self.slack();
        if s < lo - sl || s > hi + sl {
            return Err(DebondError::OutOfDomain {
                what: "s",
                value: s,
                lo,
                hi,
            });
        }
        Ok(self.lambda_at(s).max(0.0))
    }

    /// The same front seen from time `t0`, re-based to local time zero.
    pub fn shifted(&self, t0: f64) -> Result<FrontCurve> {
        self.check_time("t0", t0)?;
        let end = self.t_end();
        let eps = self.slack();
        if t0 >= end - eps {
            let rho = self.rho_at(end);
            return Self::new(vec![(0.0, rho), (eps.max(1e-9), rho)], self.outer);
        }
        let mut knots = vec![(0.0, self.rho_at(t0))];
        for &(t, rho) in &self.knots {
            if t > t0 + eps {
                knots.push((t - t0, rho));
            }
        }
        Self::new(knots, self.outer)
    }

    /// Restriction to `[0, t1]`.
    pub fn truncated(&self, t1: f64) -> Result<FrontCurve> {
        self.check_time("t1", t1)?;
        let mut knots: Vec<(f64, f64)> =
            self.knots.iter().copied().filter(|k| k.0 < t1 - self.slack()).collect();
        knots.push((t1, self.rho_at(t1)));
        Self::new(knots, self.outer)
    }

    /// Whether `(t, r)` lies in the closed debonded region.
    pub fn contains(&self, t: f64, r: f64) -> bool {
        t >= 0.0 && r >= 0.0 && r <= self.rho_at(t) + 1e-12
    }

    /// Rate of change of the debonded area per unit width.
    pub fn annulus_area_derivative(&self, rho: f64) -> Result<f64> {
        annulus_area_derivative(self.outer, rho)
    }
}

/// `d/d rho` of the annulus area `pi (R^2 - (R - rho)^2)`.
pub fn annulus_area_derivative(outer: f64, rho: f64) -> Result<f64> {
    if !(0.0..outer).contains(&rho) {
        return Err(DebondError::OutOfDomain {
            what: "rho",
            value: rho,
            lo: 0.0,
            hi: outer,
        });
    }
    Ok(2.0 * std::f64::consts::PI * (outer - rho))
}

/// Which part of the space-time domain an apex belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeCase {
    /// Backward cone touches neither the rim nor the reflected front.
    Omega1,
    /// Cone reaches the rim `r = 0`.
    Omega2,
    /// Cone reaches the reflection of the front.
    Omega3,
}

/// Truncated dependence region of an apex, in characteristic coordinates:
/// `{xi_lo <= xi <= xi_hi, eta_lo <= eta <= eta_hi, eta >= |xi|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeRegion {
    pub apex: (f64, f64),
    pub case: ConeCase,
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub eta_lo: f64,
    pub eta_hi: f64,
}

impl ConeRegion {
    pub fn is_empty(&self) -> bool {
        self.apex.0 <= 0.0 || self.xi_lo >= self.xi_hi || self.eta_lo >= self.eta_hi
    }

    /// The region as a convex polygon in the `(xi, eta)` plane.
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        if self.is_empty() {
            return Vec::new();
        }
        let rect = vec![
            [self.xi_lo, self.eta_lo],
            [self.xi_hi, self.eta_lo],
            [self.xi_hi, self.eta_hi],
            [self.xi_lo, self.eta_hi],
        ];
        // eta >= xi and eta >= -xi
        let p = clip_halfplane(&rect, [1.0, -1.0], 0.0);
        clip_halfplane(&p, [-1.0, -1.0], 0.0)
    }

    pub fn contains(&self, t: f64, r: f64) -> bool {
        let xi = t - r;
        let eta = t + r;
        xi >= self.xi_lo && xi <= self.xi_hi && eta >= self.eta_lo && eta <= self.eta_hi && t >= 0.0 && r >= 0.0
    }
}

/// Builds the truncated region `P(t, r)` for an apex of the debonded domain.
pub fn cone_region(front: &FrontCurve, t: f64, r: f64) -> Result<ConeRegion> {
    let rho0 = front.rho0();
    let tol = 1e-12 * rho0.max(1.0);
    if t < -tol || r < -tol || r > front.rho_at(t.max(0.0)) + tol || t > front.t_end() + tol {
        return Err(DebondError::ApexOutside { t, r });
    }
    let xi = t - r;
    let eta = t + r;
    let case = if t <= r + tol {
        if eta <= rho0 + tol {
            ConeCase::Omega1
        } else {
            ConeCase::Omega3
        }
    } else if eta <= rho0 + tol {
        ConeCase::Omega2
    } else {
        return Err(DebondError::ApexOutside { t, r });
    };
    let xi_lo = front.omega_at(eta).max(-eta);
    Ok(ConeRegion {
        apex: (t, r),
        case,
        xi_lo,
        xi_hi: xi,
        eta_lo: xi.abs(),
        eta_hi: eta,
    })
}

/// Exact `(t, r)` area of the region.
pub fn region_area(region: &ConeRegion) -> f64 {
    0.5 * polygon_area(&region.polygon())
}

/// Keeps the part of a convex polygon with `n . p <= c`.
pub fn clip_halfplane(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    if poly.is_empty() {
        return out;
    }
    let side = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - c;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (fa, fb) = (side(&a), side(&b));
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let s = fa / (fa - fb);
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

/// Clips a convex polygon to an axis-aligned box.
pub fn clip_box(poly: &[[f64; 2]], x: (f64, f64), y: (f64, f64)) -> Vec<[f64; 2]> {
    let p = clip_halfplane(poly, [-1.0, 0.0], -x.0);
    let p = clip_halfplane(&p, [1.0, 0.0], x.1);
    let p = clip_halfplane(&p, [0.0, -1.0], -y.0);
    clip_halfplane(&p, [0.0, 1.0], y.1)
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    polygon_area_centroid(poly).0
}

/// Unsigned area and centroid of a simple polygon.
pub fn polygon_area_centroid(poly: &[[f64; 2]]) -> (f64, [f64; 2]) {
    if poly.len() < 3 {
        return (0.0, [0.0, 0.0]);
    }
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    if a.abs() < 1e-300 {
        return (0.0, poly[0]);
    }
    (0.5 * a.abs(), [cx / (3.0 * a), cy / (3.0 * a)])
}
