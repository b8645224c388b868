//! Cone integrals on a characteristic lattice and their derivative traces.
//!
//! The lattice has nodes `(t_i, r_j) = (i dt, j dt)`. In `(xi, eta)` units of
//! `dt` the field is piecewise linear on the criss-cross triangulation whose
//! diamonds are centered at the nodes of opposite parity to the apex, so the
//! edges `xi = t - r`, `eta = t + r` and `eta = |t - r|` of every lattice cone
//! fall on triangle edges. Only the reflected edge `xi = omega(eta)` is clipped.

use crate::error::{DebondError, Result};
use crate::geometry::{clip_box, polygon_area_centroid, ConeRegion, FrontCurve};

const SNAP: f64 = 1e-9;

/// Nodal field on the lattice, zero outside the debonded region.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLattice {
    dt: f64,
    fronts: Vec<f64>,
    last_inside: Vec<usize>,
    cols: usize,
    values: Vec<f64>,
}

impl CharLattice {
    /// Zero field with `rows` time levels under the given front.
    pub fn new(dt: f64, front: &FrontCurve, rows: usize) -> Result<Self> {
        if !(dt > 0.0) || rows == 0 {
            return Err(DebondError::LatticeCoverage(format!("bad lattice: dt = {dt}, rows = {rows}")));
        }
        let t_last = (rows - 1) as f64 * dt;
        if t_last > front.t_end() + 1e-9 * dt.max(1.0) {
            return Err(DebondError::LatticeCoverage(format!(
                "lattice reaches t = {t_last} past the front end {}",
                front.t_end()
            )));
        }
        let fronts = (0..rows).map(|i| front.rho_at(i as f64 * dt)).collect();
        Ok(Self::from_fronts(dt, fronts))
    }

    pub fn from_fronts(dt: f64, fronts: Vec<f64>) -> Self {
        let last_inside: Vec<usize> = fronts
            .iter()
            .map(|rho| ((rho / dt) + 1e-9).floor().max(0.0) as usize)
            .collect();
        let cols = last_inside.iter().copied().max().unwrap_or(0) + 2;
        let values = vec![0.0; fronts.len() * cols];
        CharLattice {
            dt,
            fronts,
            last_inside,
            cols,
            values,
        }
    }

    pub fn zeros_like(&self) -> Self {
        CharLattice {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    /// Fills every inside node with `f(t, r)`.
    pub fn filled(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self.zeros_like();
        for i in 0..self.rows() {
            for j in 0..=self.last_inside[i] {
                out.set(i, j, f(self.t(i), self.r(j)));
            }
        }
        out
    }

    /// Fills every stored node, including the padding column past the front.
    pub fn filled_everywhere(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self.zeros_like();
        for i in 0..self.rows() {
            for j in 0..self.cols {
                out.set(i, j, f(self.t(i), self.r(j)));
            }
        }
        out
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn rows(&self) -> usize {
        self.fronts.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn t_last(&self) -> f64 {
        self.t(self.rows() - 1)
    }

    pub fn front_at_row(&self, i: usize) -> f64 {
        self.fronts[i]
    }

    pub fn last_inside(&self, i: usize) -> usize {
        self.last_inside[i]
    }

    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        i < self.rows() && j <= self.last_inside[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.rows() || j >= self.cols {
            0.0
        } else {
            self.values[i * self.cols + j]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let c = self.cols;
        self.values[i * c + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolates along row `i`; linear to zero between the last node and the front.
    pub fn row_value(&self, i: usize, sigma: f64) -> f64 {
        let rho = self.fronts[i];
        let sigma = sigma.max(0.0);
        if sigma > rho + 1e-12 {
            return 0.0;
        }
        let x = sigma / self.dt;
        let m = self.last_inside[i];
        let j = x.floor() as usize;
        if j < m {
            let th = x - j as f64;
            return (1.0 - th) * self.get(i, j) + th * self.get(i, j + 1);
        }
        let rm = self.r(m);
        let gap = rho - rm;
        let vm = self.get(i, m);
        if sigma <= rm || gap <= 1e-14 {
            return vm;
        }
        vm * ((rho - sigma) / gap).max(0.0)
    }

    /// Value at an arbitrary point. Between rows the blend follows `r / rho(t)`,
    /// so the front value stays zero.
    pub fn value_at(&self, tau: f64, sigma: f64) -> Result<f64> {
        let x = tau / self.dt;
        let last = (self.rows() - 1) as f64;
        if x < -SNAP || x > last + SNAP {
            return Err(DebondError::LatticeCoverage(format!(
                "time {tau} outside lattice [0, {}]",
                self.t_last()
            )));
        }
        let x = x.clamp(0.0, last);
        let i = x.floor() as usize;
        let th = x - i as f64;
        if th < SNAP || i + 1 >= self.rows() {
            return Ok(self.row_value(i, sigma));
        }
        if th > 1.0 - SNAP {
            return Ok(self.row_value(i + 1, sigma));
        }
        let (r0, r1) = (self.fronts[i], self.fronts[i + 1]);
        let rho = r0 + th * (r1 - r0);
        if sigma > rho + 1e-12 {
            return Ok(0.0);
        }
        let y = sigma / rho;
        Ok((1.0 - th) * self.row_value(i, y * r0) + th * self.row_value(i + 1, y * r1))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_diff(&self, other: &CharLattice) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Lattice with the same geometry holding `c(r_j) * value`.
    pub fn scaled_by(&self, c: impl Fn(f64) -> f64) -> CharLattice {
        let mut out = self.zeros_like();
        let coeffs: Vec<f64> = (0..self.cols).map(|j| c(self.r(j))).collect();
        for i in 0..self.rows() {
            for (j, cj) in coeffs.iter().enumerate().take(self.last_inside[i].min(self.cols - 1) + 1) {
                out.set(i, j, cj * self.get(i, j));
            }
        }
        out
    }

    /// Copy of `other`'s values onto this geometry, nodes outside set to zero.
    pub fn regridded(&self, other: &CharLattice) -> CharLattice {
        let mut out = self.zeros_like();
        for i in 0..self.rows().min(other.rows()) {
            for j in 0..=self.last_inside[i] {
                if other.is_inside(i, j) {
                    out.set(i, j, other.get(i, j));
                }
            }
        }
        out
    }
}

/// Direction of a characteristic segment in the `(t, r)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `r` increases with `t`.
    Plus45,
    /// `r` decreases with `t`.
    Minus45,
}

/// Trapezoid rule along `(t0 + s, r0 +- s)`, `0 <= s <= length`, with nodes at
/// every row crossing.
pub fn line_integral_along_characteristic(
    h: &CharLattice,
    start: (f64, f64),
    direction: Direction,
    length: f64,
) -> Result<f64> {
    if length <= 0.0 {
        return Ok(0.0);
    }
    let (t0, r0) = start;
    let sign = match direction {
        Direction::Plus45 => 1.0,
        Direction::Minus45 => -1.0,
    };
    let dt = h.dt();
    let point = |s: f64| h.value_at(t0 + s, r0 + sign * s);
    let k_lo = (t0 / dt + SNAP).floor() as i64 + 1;
    let k_hi = ((t0 + length) / dt - SNAP).ceil() as i64 - 1;
    let mut s_prev = 0.0;
    let mut v_prev = point(0.0)?;
    let mut total = 0.0;
    for k in k_lo..=k_hi {
        let s = k as f64 * dt - t0;
        if s <= s_prev || s >= length {
            continue;
        }
        let v = h.row_value(k as usize, r0 + sign * s);
        total += 0.5 * (s - s_prev) * (v + v_prev);
        s_prev = s;
        v_prev = v;
    }
    let v_end = point(length)?;
    total += 0.5 * (length - s_prev) * (v_end + v_prev);
    Ok(total)
}

/// Sum of `area * value` over the lattice triangles clipped to the box
/// `[xi_lo, xi_hi] x [eta_lo, eta_hi]` (all in `dt` units). `parity` selects the
/// diamond centers `i + j = parity (mod 2)`.
fn tile_sum(h: &CharLattice, xi: (f64, f64), eta: (f64, f64), parity: i64) -> f64 {
    let snap = |v: f64| {
        let r = v.round();
        if (v - r).abs() < SNAP {
            r
        } else {
            v
        }
    };
    let (xi_lo, xi_hi) = (snap(xi.0), snap(xi.1));
    let (eta_lo, eta_hi) = (snap(eta.0), snap(eta.1));
    if xi_lo >= xi_hi || eta_lo >= eta_hi {
        return 0.0;
    }
    let first = |lo: f64| {
        let mut c = (lo - 1.0).floor() as i64 + 1;
        if (c - parity).rem_euclid(2) != 0 {
            c += 1;
        }
        c
    };
    let mut total = 0.0;
    let mut ec = first(eta_lo);
    while (ec as f64) < eta_hi + 1.0 {
        let mut xc = first(xi_lo);
        while (xc as f64) < xi_hi + 1.0 {
            let (ip, jp) = ((xc + ec) / 2, (ec - xc) / 2);
            if ip >= 0 && jp >= 0 {
                total += tile(h, ip as usize, jp as usize, xc as f64, ec as f64, (xi_lo, xi_hi), (eta_lo, eta_hi));
            }
            xc += 2;
        }
        ec += 2;
    }
    total
}

/// Corner points with their values.
type Triangle = ([[f64; 2]; 3], [f64; 3]);

fn tile(h: &CharLattice, i: usize, j: usize, xc: f64, ec: f64, xi: (f64, f64), eta: (f64, f64)) -> f64 {
    let cv = h.get(i, j);
    let nv = h.get(i + 1, j);
    let ev = h.get(i, j + 1);
    let sv = if i >= 1 { h.get(i - 1, j) } else { 0.0 };
    let wv = if j >= 1 { h.get(i, j - 1) } else { 0.0 };
    let n = [xc + 1.0, ec + 1.0];
    let e = [xc - 1.0, ec + 1.0];
    let s = [xc - 1.0, ec - 1.0];
    let w = [xc + 1.0, ec - 1.0];
    let c = [xc, ec];
    let full = xc - 1.0 >= xi.0 && xc + 1.0 <= xi.1 && ec - 1.0 >= eta.0 && ec + 1.0 <= eta.1;
    let mut tris: [Option<Triangle>; 4] = [None; 4];
    tris[0] = Some(([n, e, c], [nv, ev, cv]));
    if i >= 1 {
        tris[1] = Some(([e, s, c], [ev, sv, cv]));
        if j >= 1 {
            tris[2] = Some(([s, w, c], [sv, wv, cv]));
        }
    }
    if j >= 1 {
        tris[3] = Some(([w, n, c], [wv, nv, cv]));
    }
    let mut acc = 0.0;
    for (pts, vals) in tris.iter().flatten() {
        if full {
            acc += (vals[0] + vals[1] + vals[2]) / 3.0;
        } else {
            let poly = clip_box(pts, xi, eta);
            let (area, cen) = polygon_area_centroid(&poly);
            if area > 0.0 {
                acc += area * linear_at(pts, vals, cen);
            }
        }
    }
    acc
}

fn linear_at(p: &[[f64; 2]; 3], v: &[f64; 3], q: [f64; 2]) -> f64 {
    let (ax, ay) = (p[1][0] - p[0][0], p[1][1] - p[0][1]);
    let (bx, by) = (p[2][0] - p[0][0], p[2][1] - p[0][1]);
    let det = ax * by - ay * bx;
    let (qx, qy) = (q[0] - p[0][0], q[1] - p[0][1]);
    let l1 = (qx * by - qy * bx) / det;
    let l2 = (ax * qy - ay * qx) / det;
    v[0] + l1 * (v[1] - v[0]) + l2 * (v[2] - v[0])
}

/// `int int_P H dt dr` over a truncated region.
pub fn phi_of(h: &CharLattice, region: &ConeRegion) -> Result<f64> {
    if region.is_empty() {
        return Ok(0.0);
    }
    let (t, r) = region.apex;
    if t > h.t_last() + SNAP * h.dt() {
        return Err(DebondError::LatticeCoverage(format!(
            "apex time {t} beyond lattice end {}",
            h.t_last()
        )));
    }
    let dt = h.dt();
    let (ti, rj) = (t / dt, r / dt);
    let parity = if (ti - ti.round()).abs() < SNAP && (rj - rj.round()).abs() < SNAP {
        (ti.round() as i64 + rj.round() as i64 + 1).rem_euclid(2)
    } else {
        1
    };
    let sum = tile_sum(
        h,
        (region.xi_lo / dt, region.xi_hi / dt),
        (region.eta_lo / dt, region.eta_hi / dt),
        parity,
    );
    Ok(0.5 * dt * dt * sum)
}

/// Cone integral at lattice node `(i, j)`.
fn node_integral(h: &CharLattice, front: &FrontCurve, i: usize, j: usize) -> f64 {
    let dt = h.dt();
    let (ii, jj) = (i as f64, j as f64);
    let eta = ii + jj;
    let xi_lo = (front.omega_at(eta * dt) / dt).max(-eta);
    let sum = tile_sum(h, (xi_lo, ii - jj), ((ii - jj).abs(), eta), ((i + j + 1) % 2) as i64);
    0.5 * dt * dt * sum
}

/// Cone integrals at every node where `active(i, j)` holds, using the exact
/// four-point recursion where it applies. The active set must contain
/// the neighbours `(i-1, j+-1)` and `(i-2, j)` of every recursive node.
pub fn cone_integrals(
    h: &CharLattice,
    front: &FrontCurve,
    active: &(dyn Fn(usize, usize) -> bool + Sync),
) -> CharLattice {
    let dt = h.dt();
    let rho_k = front.rho0();
    let mut phi = h.zeros_like();
    let on = |i: usize, j: usize| i == 0 || j == 0 || active(i, j);
    for i in 1..h.rows() {
        let m = h.last_inside(i);
        for j in 1..=m {
            if !active(i, j) {
                continue;
            }
            let unreflected = i <= j || (i + j) as f64 * dt <= rho_k + 1e-12 * rho_k.max(1.0);
            let recursive = i >= 2
                && j < h.last_inside(i - 1)
                && unreflected
                && on(i - 1, j + 1)
                && on(i - 1, j - 1)
                && on(i - 2, j);
            let v = if recursive {
                phi.get(i - 1, j + 1) + phi.get(i - 1, j - 1) - phi.get(i - 2, j)
                    + dt * dt
                        * (h.get(i, j)
                            + h.get(i - 1, j + 1)
                            + h.get(i - 2, j)
                            + h.get(i - 1, j - 1)
                            + 2.0 * h.get(i - 1, j))
                        / 3.0
            } else {
                node_integral(h, front, i, j)
            };
            phi.set(i, j, v);
        }
    }
    phi
}

/// Boundary line integrals `(g1, g2)` with `Phi_t = g1 + g2`, `Phi_r = g1 - g2`.
pub fn phi_time_trace(h: &CharLattice, t: f64, r: f64, front: &FrontCurve) -> Result<(f64, f64)> {
    let tol = 1e-12;
    if t < -tol || r < -tol || r > front.rho_at(t) + tol {
        return Err(DebondError::ApexOutside { t, r });
    }
    if t <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let eta = t + r;
    let rho_k = front.rho0();
    let g1 = if eta <= rho_k {
        line_integral_along_characteristic(h, (0.0, eta), Direction::Minus45, t)?
    } else {
        let tau_star = front.psi_inverse_at(eta).clamp(0.0, t);
        let u = -front.omega_at(eta);
        let reflected = line_integral_along_characteristic(h, (0.0, u), Direction::Plus45, tau_star)?;
        let top =
            line_integral_along_characteristic(h, (tau_star, eta - tau_star), Direction::Minus45, t - tau_star)?;
        top - front.omega_dot_at(eta) * reflected
    };
    let g2 = if t <= r {
        line_integral_along_characteristic(h, (0.0, r - t), Direction::Plus45, t)?
    } else {
        let xi = t - r;
        line_integral_along_characteristic(h, (xi, 0.0), Direction::Plus45, r)?
            - line_integral_along_characteristic(h, (0.0, xi), Direction::Minus45, xi)?
    };
    Ok((g1, g2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cone_region, region_area};

    fn ones(dt: f64, front: &FrontCurve, rows: usize) -> CharLattice {
        CharLattice::new(dt, front, rows).unwrap().filled_everywhere(|_, _| 1.0)
    }

    #[test]
    fn unit_field_integrates_to_region_area() {
        let f = FrontCurve::constant(1.0, 3.0, 1.0).unwrap();
        let h = ones(0.05, &f, 21);
        for (t, r) in [(0.3, 0.5), (0.5, 0.2), (0.3, 0.8), (0.25, 0.9), (0.33, 0.41)] {
            let reg = cone_region(&f, t, r).unwrap();
            let v = phi_of(&h, &reg).unwrap();
            assert!((v - region_area(&reg)).abs() < 1e-12, "{t} {r}: {v} vs {}", region_area(&reg));
        }
    }

    #[test]
    fn recursion_matches_direct_tiles() {
        let f = FrontCurve::linear(1.0, 0.3, 3.0, 0.5).unwrap();
        let base = CharLattice::new(1.0 / 32.0, &f, 17).unwrap();
        let h = base.filled(|t, r| (1.0 + t) * (r * 3.0).cos());
        let all = |_: usize, _: usize| true;
        let phi = cone_integrals(&h, &f, &all);
        for i in 0..h.rows() {
            for j in 0..=h.last_inside(i) {
                let reg = cone_region(&f, h.t(i), h.r(j)).unwrap();
                let direct = phi_of(&h, &reg).unwrap();
                assert!((phi.get(i, j) - direct).abs() < 1e-13, "node {i},{j}");
            }
        }
    }

    #[test]
    fn line_integrals() {
        let f = FrontCurve::constant(1.0, 3.0, 1.0).unwrap();
        let h = ones(0.05, &f, 21);
        let v = line_integral_along_characteristic(&h, (0.0, 0.1), Direction::Plus45, 0.7).unwrap();
        assert!((v - 0.7).abs() < 1e-14);
        let ht = CharLattice::new(0.05, &f, 21).unwrap().filled(|t, _| t);
        let v = line_integral_along_characteristic(&ht, (0.0, 0.1), Direction::Plus45, 0.6).unwrap();
        assert!((v - 0.18).abs() < 1e-14);
    }

    #[test]
    fn unit_field_traces() {
        let f = FrontCurve::constant(1.0, 3.0, 1.0).unwrap();
        let h = ones(0.05, &f, 21);
        let (g1, _) = phi_time_trace(&h, 0.4, 0.3, &f).unwrap();
        assert!((g1 - 0.4).abs() < 1e-14);
        let (_, g2) = phi_time_trace(&h, 0.5, 0.2, &f).unwrap();
        assert!((g2 + 0.1).abs() < 1e-14);
    }
}
