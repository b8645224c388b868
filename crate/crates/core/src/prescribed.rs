//! Fixed-point solver for a prescribed front.
//!
//! On each window the solution is the fixed point of
//! `L[h] = A + (1/2) Phi[c h]`, iterated from the free solution `A`. Windows are
//! short enough for `L` to contract; at each seam the end row and its exact
//! time derivative become the initial data of the next window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dalembert::traveling_decomposition;
use crate::error::{DebondError, Result};
use crate::fields::{kernel_coefficient, to_h_data, u_from_v, v_from_h, HData, ProblemData, RadialFn};
use crate::geometry::{cone_region, FrontCurve};
use crate::profile::PiecewiseCubic;
use crate::quadrature::{cone_integrals, phi_of, phi_time_trace, CharLattice};

/// Numerical controls shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub window_multiplier: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dt: 1.0 / 64.0,
            tol: 1e-10,
            max_iter: 200,
            window_multiplier: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DebondError::InvalidData(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(DebondError::InvalidData("tolerance and iteration cap must be positive".into()));
        }
        if !(self.window_multiplier > 0.0 && self.window_multiplier < 2.0) {
            return Err(DebondError::InvalidData(format!(
                "window multiplier {} must lie in (0, 2) to keep the bound below 1",
                self.window_multiplier
            )));
        }
        Ok(())
    }
}

/// Certified window length at width `rho_k` (before rounding to the lattice).
pub fn window_length(rho_k: f64, outer: f64, alpha: f64) -> f64 {
    let gap = outer - rho_k;
    let third = (4.0 / rho_k) / (alpha * alpha + 4.0 / (gap * gap));
    0.5 * (0.5 * rho_k).min(0.5 * gap).min(third)
}

/// Analytic sup-norm Lipschitz constant of `L` on a window of length `len`.
pub fn contraction_bound(rho_k: f64, outer: f64, alpha: f64, len: f64) -> f64 {
    let gap = outer - rho_k;
    rho_k * len / 4.0 * (alpha * alpha + 4.0 / (gap * gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub rho_at_start: f64,
    pub contraction_bound: f64,
    /// False when lattice rounding forced a window longer than the certified one.
    pub certified: bool,
}

impl WindowPlan {
    pub fn len(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn steps(&self, dt: f64) -> usize {
        (self.len() / dt).round() as usize
    }
}

/// Number of lattice steps covering `span`.
pub fn lattice_steps(span: f64, dt: f64) -> usize {
    let x = span / dt;
    if (x - x.round()).abs() < 1e-9 {
        x.round() as usize
    } else {
        x.floor() as usize
    }
}

/// One window starting at `t_start`, at most `remaining` steps long.
#[allow(clippy::too_many_arguments)]
pub fn plan_one(
    index: usize,
    t_start: f64,
    rho_k: f64,
    outer: f64,
    alpha: f64,
    dt: f64,
    multiplier: f64,
    remaining: usize,
) -> WindowPlan {
    let raw = multiplier * window_length(rho_k, outer, alpha);
    let steps = lattice_steps(raw, dt).max(1).min(remaining.max(1));
    let len = steps as f64 * dt;
    let q = contraction_bound(rho_k, outer, alpha, len);
    WindowPlan {
        index,
        t_start,
        t_end: t_start + len,
        rho_at_start: rho_k,
        contraction_bound: q,
        certified: q < 1.0 && len <= raw + 1e-12,
    }
}

/// Lattice-aligned windows covering `[0, horizon]`.
pub fn plan_windows(
    front: &FrontCurve,
    alpha: f64,
    horizon: f64,
    dt: f64,
    multiplier: f64,
) -> Result<Vec<WindowPlan>> {
    if horizon > front.t_end() + 1e-9 {
        return Err(DebondError::OutOfDomain {
            what: "horizon",
            value: horizon,
            lo: 0.0,
            hi: front.t_end(),
        });
    }
    let total = lattice_steps(horizon, dt);
    if total == 0 {
        return Err(DebondError::InvalidData(format!("horizon {horizon} is shorter than dt = {dt}")));
    }
    let mut plans = Vec::new();
    let mut done = 0;
    while done < total {
        let t0 = done as f64 * dt;
        let plan = plan_one(
            plans.len(),
            t0,
            front.rho_at(t0),
            front.outer(),
            alpha,
            dt,
            multiplier,
            total - done,
        );
        done += plan.steps(dt);
        plans.push(plan);
    }
    Ok(plans)
}

/// Everything `L` needs on one window: local data, local front, lattice and `A`.
#[derive(Debug, Clone)]
pub struct WindowProblem {
    pub plan: WindowPlan,
    pub data: HData,
    pub front: FrontCurve,
    free: CharLattice,
    kernel_scale: f64,
}

impl WindowProblem {
    /// `front` is the local front (time zero at the window start).
    pub fn new(plan: WindowPlan, data: HData, front: FrontCurve, dt: f64) -> Result<Self> {
        let rows = plan.steps(dt) + 1;
        let base = CharLattice::new(dt, &front, rows)?;
        let free = free_lattice(&base, &data, &front);
        Ok(WindowProblem {
            plan,
            data,
            front,
            free,
            kernel_scale: 1.0,
        })
    }

    /// Multiplies the kernel, e.g. zero to recover the free solution.
    pub fn with_kernel_scale(mut self, scale: f64) -> Self {
        self.kernel_scale = scale;
        self
    }

    pub fn free(&self) -> &CharLattice {
        &self.free
    }

    pub fn dt(&self) -> f64 {
        self.free.dt()
    }

    pub fn kernel_of(&self, h: &CharLattice) -> CharLattice {
        let (alpha, outer, s) = (self.data.alpha, self.data.outer, self.kernel_scale);
        h.scaled_by(|r| s * kernel_coefficient(alpha, outer, r))
    }

    /// `L[h]` at every node, boundary rows reimposed.
    pub fn apply_l(&self, h: &CharLattice) -> CharLattice {
        let all = |_: usize, _: usize| true;
        self.apply_l_on(h, &all)
    }

    /// `L[h]` on the nodes selected by `active`; other nodes keep `A`.
    pub fn apply_l_on(&self, h: &CharLattice, active: &(dyn Fn(usize, usize) -> bool + Sync)) -> CharLattice {
        let f = self.kernel_of(h);
        let phi = cone_integrals(&f, &self.front, active);
        let mut out = self.free.clone();
        for i in 1..out.rows() {
            for j in 1..=out.last_inside(i) {
                if active(i, j) {
                    out.set(i, j, self.free.get(i, j) + 0.5 * phi.get(i, j));
                }
            }
        }
        self.impose_boundary(&mut out);
        out
    }

    fn impose_boundary(&self, h: &mut CharLattice) {
        for j in 0..=h.last_inside(0) {
            h.set(0, j, self.data.h0(h.r(j)));
        }
        for i in 0..h.rows() {
            h.set(i, 0, self.data.z(h.t(i)));
        }
    }

    /// Picard iteration from `A` until the sup change drops below `tol`.
    pub fn solve(&self, tol: f64, max_iter: usize) -> Result<FieldPatch> {
        self.solve_from(self.free.clone(), tol, max_iter)
    }

    pub fn solve_from(&self, start: CharLattice, tol: f64, max_iter: usize) -> Result<FieldPatch> {
        let mut h = self.free.regridded(&start);
        self.impose_boundary(&mut h);
        let mut changes = Vec::new();
        for _ in 0..max_iter {
            let next = self.apply_l(&h);
            let d = next.sup_diff(&h);
            h = next;
            changes.push(d);
            if d < tol {
                return Ok(self.finish(h, changes, tol));
            }
        }
        let factor = measured_factor(&changes);
        Err(DebondError::NoConvergence {
            iterations: changes.len(),
            last_change: *changes.last().unwrap_or(&f64::NAN),
            factor,
        })
    }

    fn finish(&self, h: CharLattice, changes: Vec<f64>, tol: f64) -> FieldPatch {
        let q = self.plan.contraction_bound;
        let first = changes[0];
        let iteration_bound = if first <= tol || !(q < 1.0) || q <= 0.0 {
            1
        } else {
            ((tol / first).ln() / q.ln()).ceil().max(0.0) as usize + 1
        };
        let factors = changes.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
        let kernel = self.kernel_of(&h);
        FieldPatch {
            plan: self.plan,
            data: self.data.clone(),
            front: self.front.clone(),
            free: self.free.clone(),
            kernel,
            h,
            diagnostics: PicardDiagnostics {
                iterations: changes.len(),
                final_change: *changes.last().unwrap(),
                changes,
                factors,
                error_bound: if q < 1.0 { tol * q / (1.0 - q) } else { f64::NAN },
                iteration_bound,
            },
        }
    }
}

fn measured_factor(changes: &[f64]) -> f64 {
    let n = changes.len();
    if n < 2 || changes[n - 2] == 0.0 {
        return f64::NAN;
    }
    changes[n - 1] / changes[n - 2]
}

/// `A` at the inside nodes.
pub fn free_lattice(base: &CharLattice, data: &HData, front: &FrontCurve) -> CharLattice {
    let waves = traveling_decomposition(data, front);
    let mut out = base.zeros_like();
    let rows: Vec<Vec<f64>> = (0..base.rows())
        .into_par_iter()
        .map(|i| {
            (0..=base.last_inside(i))
                .map(|j| waves.value(base.t(i), base.r(j)))
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    pub final_change: f64,
    pub changes: Vec<f64>,
    pub factors: Vec<f64>,
    /// `tol q / (1 - q)`, NaN on uncertified windows.
    pub error_bound: f64,
    pub iteration_bound: usize,
}

/// Converged field on one window.
#[derive(Debug, Clone)]
pub struct FieldPatch {
    pub plan: WindowPlan,
    pub data: HData,
    pub front: FrontCurve,
    pub free: CharLattice,
    pub kernel: CharLattice,
    pub h: CharLattice,
    pub diagnostics: PicardDiagnostics,
}

/// `h`, its derivatives and the reconstructed displacement at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub t: f64,
    pub r: f64,
    pub h: f64,
    pub h_t: f64,
    pub h_r: f64,
    pub v: f64,
    pub v_t: f64,
    pub v_r: f64,
    /// Displacement `u` at physical radius `radius = R - r`.
    pub u: f64,
    pub radius: f64,
}

impl FieldPatch {
    pub fn dt(&self) -> f64 {
        self.h.dt()
    }

    pub fn t_start(&self) -> f64 {
        self.plan.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.plan.t_end
    }

    /// Front at local time `t`.
    pub fn rho(&self, t: f64) -> f64 {
        self.front.rho_at(t)
    }

    /// `(h_t, h_r)` from the wave slopes plus the exact cone-integral traces.
    pub fn derivatives(&self, t: f64, r: f64) -> Result<(f64, f64)> {
        if r > self.front.rho_at(t) + 1e-12 {
            return Ok((0.0, 0.0));
        }
        let waves = traveling_decomposition(&self.data, &self.front);
        let (a_t, a_r) = waves.derivatives(t, r);
        let (g1, g2) = phi_time_trace(&self.kernel, t, r, &self.front)?;
        Ok((a_t + 0.5 * (g1 + g2), a_r + 0.5 * (g1 - g2)))
    }

    pub fn value(&self, t: f64, r: f64) -> Result<f64> {
        self.h.value_at(t, r)
    }

    /// Full sample at local time `t`.
    pub fn sample(&self, t: f64, r: f64) -> Result<FieldSample> {
        let h = self.value(t, r)?;
        let (h_t, h_r) = self.derivatives(t, r)?;
        self.sample_from(t, r, h, h_t, h_r)
    }

    pub(crate) fn sample_from(&self, t: f64, r: f64, h: f64, h_t: f64, h_r: f64) -> Result<FieldSample> {
        let abs_t = self.plan.t_start + t;
        let vs = v_from_h(h, h_t, h_r, abs_t, r, self.data.outer, self.data.alpha)?;
        let u = u_from_v(vs.v, r, self.data.outer);
        Ok(FieldSample {
            t: abs_t,
            r,
            h,
            h_t,
            h_r,
            v: vs.v,
            v_t: vs.v_t,
            v_r: vs.v_r,
            u: u.u,
            radius: u.radius,
        })
    }

    /// `sup |L[h] - h|` at the lattice nodes, with every cone integral taken
    /// directly over its clipped region rather than through the recursion.
    pub fn representation_residual(&self) -> Result<f64> {
        let h = &self.h;
        let res: Result<Vec<f64>> = (1..h.rows())
            .into_par_iter()
            .map(|i| {
                let mut worst: f64 = 0.0;
                for j in 1..=h.last_inside(i) {
                    let reg = cone_region(&self.front, h.t(i), h.r(j))?;
                    let phi = phi_of(&self.kernel, &reg)?;
                    let l = self.free.get(i, j) + 0.5 * phi;
                    worst = worst.max((l - h.get(i, j)).abs());
                }
                Ok(worst)
            })
            .collect();
        Ok(res?.into_iter().fold(0.0, f64::max))
    }

    /// Data for the window that starts at this patch's last row.
    pub fn restart_data(&self) -> Result<HData> {
        let h = &self.h;
        let i = h.rows() - 1;
        let t = h.t_last();
        let rho = h.front_at_row(i);
        let m = h.last_inside(i);
        let gap = rho - h.r(m);
        let node_count = if gap > 1e-9 * h.dt() { m + 1 } else { m };
        let mut xs = Vec::with_capacity(node_count + 1);
        let mut ys = Vec::with_capacity(node_count + 1);
        let mut ds = Vec::with_capacity(node_count + 1);
        let mut vt = Vec::with_capacity(node_count + 1);
        let traces: Result<Vec<(f64, f64)>> =
            (0..node_count).into_par_iter().map(|j| self.derivatives(t, h.r(j))).collect();
        let traces = traces?;
        for (j, (ht, hr)) in traces.into_iter().enumerate() {
            xs.push(h.r(j));
            ys.push(h.get(i, j));
            ds.push(hr);
            vt.push(ht);
        }
        let (ht, hr) = self.derivatives(t, rho)?;
        xs.push(rho);
        ys.push(0.0);
        ds.push(hr);
        vt.push(ht);
        ys[0] = self.data.z(t);
        let h0 = RadialFn::Sampled(PiecewiseCubic::hermite(xs.clone(), ys, ds)?);
        let h1 = RadialFn::Sampled(PiecewiseCubic::with_difference_slopes(xs, vt)?);
        let data = HData {
            rho0: rho,
            outer: self.data.outer,
            alpha: self.data.alpha,
            load: self.data.load.shifted(t),
            h0,
            h1,
        };
        data.check_compatibility()?;
        Ok(data)
    }
}

/// Marched solution over several windows.
#[derive(Debug, Clone)]
pub struct Solution {
    pub patches: Vec<FieldPatch>,
    pub front: FrontCurve,
    pub seam_jumps: Vec<f64>,
}

impl Solution {
    /// The patch whose window owns absolute time `t` (latest seam `<= t`).
    pub fn patch_at(&self, t: f64) -> Result<&FieldPatch> {
        let eps = 1e-12;
        let last = self.patches.last().ok_or_else(|| DebondError::InvalidData("empty solution".into()))?;
        if t < -eps || t > last.t_end() + eps {
            return Err(DebondError::OutOfDomain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: last.t_end(),
            });
        }
        Ok(self
            .patches
            .iter()
            .rev()
            .find(|p| p.t_start() <= t + eps)
            .unwrap_or(&self.patches[0]))
    }

    pub fn t_end(&self) -> f64 {
        self.patches.last().map(|p| p.t_end()).unwrap_or(0.0)
    }
}

/// `(h, h_t, h_r, v, v_t, v_r, u)` at absolute `(t, r)`.
pub fn evaluate_field(solution: &Solution, t: f64, r: f64) -> Result<FieldSample> {
    let p = solution.patch_at(t)?;
    p.sample(t - p.t_start(), r)
}

/// Solves one window from its data.
pub fn solve_window(
    data: &HData,
    front_local: &FrontCurve,
    plan: WindowPlan,
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FieldPatch> {
    WindowProblem::new(plan, data.clone(), front_local.clone(), dt)?.solve(tol, max_iter)
}

/// Marches windows over `[0, horizon]` for a prescribed front.
pub fn march(data: &ProblemData, front: &FrontCurve, horizon: f64, options: &SolverOptions) -> Result<Solution> {
    options.validate()?;
    if (front.rho0() - data.initial_width).abs() > 1e-12 || (front.outer() - data.outer_radius).abs() > 1e-12 {
        return Err(DebondError::InvalidFront(
            "front does not start at the initial width of the data".into(),
        ));
    }
    let plans = plan_windows(front, data.alpha, horizon, options.dt, options.window_multiplier)?;
    march_on(data, front, &plans, options)
}

/// Marches the given consecutive windows, e.g. to replay the seams of a coupled run.
pub fn march_on(data: &ProblemData, front: &FrontCurve, plans: &[WindowPlan], options: &SolverOptions) -> Result<Solution> {
    options.validate()?;
    let mut hdata = to_h_data(data)?;
    let mut patches: Vec<FieldPatch> = Vec::with_capacity(plans.len());
    let mut seam_jumps = Vec::new();
    for &plan in plans {
        if let Some(prev) = patches.last() {
            hdata = prev.restart_data()?;
        }
        let local = front.shifted(plan.t_start)?.truncated(plan.len())?;
        let patch = solve_window(&hdata, &local, plan, options.dt, options.tol, options.max_iter)?;
        if let Some(prev) = patches.last() {
            seam_jumps.push(seam_jump(prev, &patch));
        }
        patches.push(patch);
    }
    Ok(Solution {
        patches,
        front: front.clone(),
        seam_jumps,
    })
}

/// Sup difference between a patch's end row and the next patch's first row.
pub fn seam_jump(prev: &FieldPatch, next: &FieldPatch) -> f64 {
    let i = prev.h.rows() - 1;
    let m = prev.h.last_inside(i).max(next.h.last_inside(0));
    (0..=m).fold(0.0, |acc: f64, j| acc.max((prev.h.get(i, j) - next.h.get(0, j)).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;

    #[test]
    fn first_window_length() {
        assert!((window_length(1.0, 3.0, 0.0) - 0.25).abs() < 1e-15);
        let f = FrontCurve::constant(1.0, 3.0, 2.0).unwrap();
        let p = plan_windows(&f, 0.0, 0.1, 1.0 / 64.0, 1.0).unwrap();
        assert_eq!(p.len(), 1);
        let p = plan_windows(&f, 0.0, 1.0, 1.0 / 64.0, 1.0).unwrap();
        assert_eq!(p.len(), 4);
        assert!((p[0].contraction_bound - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn large_damping_shrinks_windows() {
        let a = window_length(1.0, 3.0, 10.0);
        let b = window_length(1.0, 3.0, 20.0);
        assert!((a / b - 4.0).abs() < 0.05);
    }

    #[test]
    fn zero_data_gives_zero_field_in_one_iteration() {
        let d = ProblemData::new(3.0, 1.0, 1.0, 0.5, Profile::Zero, Profile::Zero, Profile::Zero).unwrap();
        let f = FrontCurve::linear(1.0, 0.2, 3.0, 0.5).unwrap();
        let s = march(&d, &f, 0.5, &SolverOptions::default()).unwrap();
        assert_eq!(s.patches.len(), 2);
        for p in &s.patches {
            assert_eq!(p.h.sup_norm(), 0.0);
            assert_eq!(p.diagnostics.iterations, 1);
        }
    }
}
