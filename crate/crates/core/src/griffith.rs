//! Coupled solver: the front follows Griffith's criterion.
//!
//! A window starts at a seam with width `rho_k`. In the characteristic
//! variable `s = t - rho(t)` it covers `[s0, s0 + y]`, `s0 = -rho_k`, and the
//! unknowns are the field on the strip `{t - r <= s0 + y}` and the front
//! `lambda = phi^{-1}` up to `s0 + y`. They are found as a fixed point of
//! `(psi1, psi2)`; the field on the whole window is then re-solved for the
//! converged front and restarts the next window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};
use crate::fields::{kernel_coefficient, to_h_data, HData, ProblemData, Toughness};
use crate::geometry::FrontCurve;
use crate::prescribed::{
    contraction_bound, lattice_steps, march, plan_one, seam_jump, FieldPatch, Solution, SolverOptions, WindowPlan,
    WindowProblem,
};
use crate::quadrature::{line_integral_along_characteristic, CharLattice, Direction};

const STALL_FACTOR: f64 = 0.9;
const SPEED_CEILING: f64 = 1.0 - 1e-12;

/// Controls of the coupled run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CoupledOptions {
    pub solver: SolverOptions,
    /// The run stops once `rho >= R - stop_margin`; defaults to `2 dt`.
    pub stop_margin: Option<f64>,
    /// Target of the product metric; defaults to the solver tolerance.
    pub metric_tol: Option<f64>,
    /// Skip the front-independent triangle solve used as a diagnostic.
    pub skip_triangle_check: bool,
}

impl CoupledOptions {
    pub fn stop_margin(&self) -> f64 {
        self.stop_margin.unwrap_or(2.0 * self.solver.dt)
    }

    pub fn metric_tol(&self) -> f64 {
        self.metric_tol.unwrap_or(self.solver.tol)
    }

    fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.stop_margin() >= self.solver.dt) {
            return Err(DebondError::InvalidData(format!(
                "stop margin {} is below dt = {}",
                self.stop_margin(),
                self.solver.dt
            )));
        }
        if !(self.metric_tol() > 0.0) {
            return Err(DebondError::InvalidData("metric tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// One coupled window in local time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledWindow {
    pub index: usize,
    /// Absolute time of the seam.
    pub t_start: f64,
    pub rho_start: f64,
    /// `[s0, s0 + y]` in `s = t - rho(t)`.
    pub s_range: (f64, f64),
    pub y: f64,
    /// Longest admissible duration `T`.
    pub time_cap: f64,
    pub time_steps: usize,
    /// Sup-norm cap `M` on the strip field.
    pub sup_cap: f64,
    pub metric_tol: f64,
    /// Toughness piece in force and the breakpoint past which it is frozen.
    pub kappa_piece: usize,
    pub kappa_cap: f64,
    /// Whether `y` meets both self-map estimates.
    pub certified: bool,
}

impl CoupledWindow {
    pub fn s_end(&self) -> f64 {
        self.s_range.1
    }

    /// Same window with half the width.
    pub fn halved(&self) -> CoupledWindow {
        let y = 0.5 * self.y;
        CoupledWindow {
            y,
            s_range: (self.s_range.0, self.s_range.0 + y),
            ..*self
        }
    }

    fn in_strip(&self, t: f64, r: f64, dt: f64) -> bool {
        t - r <= self.s_end() + dt * (1.0 + 1e-9)
    }
}

/// `lambda' = (1 + max(Lambda, 1)) / 2`.
pub fn lambda_rhs(release_ratio: f64) -> f64 {
    0.5 * (1.0 + release_ratio.max(1.0))
}

/// Front speed `max(0, (Lambda - 1) / (Lambda + 1))`, i.e. `1 - 1 / lambda'`.
pub fn speed_from_ratio(release_ratio: f64) -> f64 {
    if release_ratio > 1.0 {
        ((release_ratio - 1.0) / (release_ratio + 1.0)).min(SPEED_CEILING)
    } else {
        0.0
    }
}

/// `G0 / kappa` at local `(t, rho)` from a kernel lattice `F = c h`.
pub fn release_ratio(
    kernel: &CharLattice,
    data: &HData,
    tough: &Toughness,
    window: &CoupledWindow,
    t: f64,
    rho: f64,
) -> Result<f64> {
    let foot = (rho - t).max(0.0);
    let i = line_integral_along_characteristic(kernel, (0.0, foot), Direction::Plus45, t)?;
    let b = data.h0_dot(foot) - data.h1(foot) - i;
    let g0 = (-data.alpha * (window.t_start + t)).exp() * b * b / (2.0 * (data.outer - rho));
    Ok(g0 / tough.eval_clamped(window.kappa_piece, rho, window.kappa_cap))
}

fn kernel_lattice(h: &CharLattice, data: &HData) -> CharLattice {
    h.scaled_by(|r| kernel_coefficient(data.alpha, data.outer, r))
}

fn local_plan(window: &CoupledWindow, steps: usize, dt: f64, outer: f64, alpha: f64) -> WindowPlan {
    let len = steps as f64 * dt;
    let q = contraction_bound(window.rho_start, outer, alpha, len);
    WindowPlan {
        index: window.index,
        t_start: window.t_start,
        t_end: window.t_start + len,
        rho_at_start: window.rho_start,
        contraction_bound: q,
        certified: q < 1.0 && window.certified,
    }
}

/// Front rows produced by [`psi2`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRows {
    pub rows: Vec<f64>,
    /// Last row with `s_i <= s0 + y`.
    pub last_in_window: usize,
}

/// Integrates the front equation on `[s0, s0 + y]` with the field frozen.
/// Rows past the window continue with the last speed.
pub fn psi2(
    window: &CoupledWindow,
    data: &HData,
    tough: &Toughness,
    h: &CharLattice,
    stop_at: f64,
) -> Result<FrontRows> {
    let dt = h.dt();
    let kernel = kernel_lattice(h, data);
    let n = window.time_steps;
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(window.rho_start);
    let mut speed = 0.0;
    let mut last_in_window = 0;
    for i in 0..n {
        let t = i as f64 * dt;
        let rho = rows[i];
        if rho >= stop_at {
            speed = 0.0;
        } else if t - rho <= window.s_end() + 1e-12 * dt {
            last_in_window = i;
            speed = speed_from_ratio(release_ratio(&kernel, data, tough, window, t, rho)?);
        }
        rows.push(rho + dt * speed);
    }
    Ok(FrontRows { rows, last_in_window })
}

/// `A + Phi[c h] / 2` on the strip for the front given by `rows`.
pub fn psi1(window: &CoupledWindow, data: &HData, h: &CharLattice, rows: &[f64]) -> Result<CharLattice> {
    let dt = h.dt();
    let front = FrontCurve::from_rows(dt, rows, data.outer)?;
    let plan = local_plan(window, rows.len() - 1, dt, data.outer, data.alpha);
    let problem = WindowProblem::new(plan, data.clone(), front, dt)?;
    let start = problem.free().regridded(h);
    let w = *window;
    let active = move |i: usize, j: usize| w.in_strip(i as f64 * dt, j as f64 * dt, dt);
    Ok(problem.apply_l_on(&start, &active))
}

fn strip_l2(a: &CharLattice, b: &CharLattice, window: &CoupledWindow) -> f64 {
    let dt = a.dt();
    let mut acc = 0.0;
    for i in 0..a.rows().min(b.rows()) {
        let m = a.last_inside(i).max(b.last_inside(i));
        for j in 0..=m {
            if window.in_strip(a.t(i), a.r(j), dt) {
                let d = a.get(i, j) - b.get(i, j);
                acc += d * d;
            }
        }
    }
    (acc * dt * dt).sqrt()
}

fn strip_sup(a: &CharLattice, window: &CoupledWindow) -> f64 {
    let dt = a.dt();
    let mut s: f64 = 0.0;
    for i in 0..a.rows() {
        for j in 0..=a.last_inside(i) {
            if window.in_strip(a.t(i), a.r(j), dt) {
                s = s.max(a.get(i, j).abs());
            }
        }
    }
    s
}

/// `sup |lambda_a - lambda_b|` over `[s0, s0 + y]`, at the knots of both fronts.
fn lambda_c0(a: &FrontCurve, b: &FrontCurve, window: &CoupledWindow) -> f64 {
    let (lo, hi) = window.s_range;
    let mut pts: Vec<f64> = a
        .knots()
        .iter()
        .chain(b.knots())
        .map(|(t, r)| t - r)
        .filter(|s| *s >= lo && *s <= hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.iter().fold(0.0, |m, &s| m.max((a.lambda_at(s) - b.lambda_at(s)).abs()))
}

/// Convergence record of one coupled window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    pub index: usize,
    pub t_start: f64,
    pub y_initial: f64,
    pub y_final: f64,
    pub halvings: usize,
    pub certified: bool,
    pub iterations: usize,
    pub metric: Vec<f64>,
    pub factors: Vec<f64>,
    /// The front left the time cap before `s` reached `s0 + y`.
    pub lambda_end_exceeds_cap: bool,
    /// The window was cut at a toughness breakpoint.
    pub at_breakpoint: bool,
    pub end_row: usize,
}

/// Converged strip field and front of one window.
#[derive(Debug, Clone)]
pub struct CoupledSolution {
    pub window: CoupledWindow,
    pub h: CharLattice,
    pub rows: Vec<f64>,
    pub end_row: usize,
    pub diagnostics: WindowDiagnostics,
}

fn geometric_tail(factors: &[f64]) -> f64 {
    let n = factors.len();
    if n < 3 {
        return 0.0;
    }
    let tail = &factors[n - 3..];
    if tail.iter().any(|f| !(*f > 0.0)) {
        return 0.0;
    }
    (tail.iter().map(|f| f.ln()).sum::<f64>() / 3.0).exp()
}

fn stationary_free(window: &CoupledWindow, data: &HData, dt: f64) -> Result<CharLattice> {
    let rows = vec![window.rho_start; window.time_steps + 1];
    let front = FrontCurve::from_rows(dt, &rows, data.outer)?;
    let plan = local_plan(window, window.time_steps, dt, data.outer, data.alpha);
    Ok(WindowProblem::new(plan, data.clone(), front, dt)?.free().clone())
}

/// Alternates `psi1` and `psi2` until the product metric drops below the
/// window tolerance, halving `y` on a stall.
pub fn solve_coupled_window(
    window: CoupledWindow,
    data: &HData,
    tough: &Toughness,
    options: &CoupledOptions,
) -> Result<CoupledSolution> {
    let dt = options.solver.dt;
    let stop_at = data.outer - options.stop_margin();
    let mut window = window;
    let y_initial = window.y;
    let mut halvings = 0;
    let mut stall_history = Vec::new();
    loop {
        match iterate_window(&window, data, tough, options, stop_at) {
            Ok((h, front_rows, metric)) => {
                let factors: Vec<f64> =
                    metric.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
                let rows = front_rows.rows;
                let n = window.time_steps;
                let mut end_row = front_rows.last_in_window + 1;
                let exceeds = end_row > n;
                end_row = end_row.min(n);
                let mut at_breakpoint = false;
                if window.kappa_cap < data.outer {
                    if let Some(i) = (1..=end_row).find(|&i| rows[i] >= window.kappa_cap - 1e-12) {
                        at_breakpoint = true;
                        end_row = i;
                    }
                }
                if let Some(i) = (1..=end_row).find(|&i| rows[i] >= stop_at) {
                    end_row = end_row.min(i);
                }
                let diagnostics = WindowDiagnostics {
                    index: window.index,
                    t_start: window.t_start,
                    y_initial,
                    y_final: window.y,
                    halvings,
                    certified: window.certified,
                    iterations: metric.len(),
                    metric,
                    factors,
                    lambda_end_exceeds_cap: exceeds,
                    at_breakpoint,
                    end_row,
                };
                return Ok(CoupledSolution {
                    window,
                    h,
                    rows,
                    end_row,
                    diagnostics,
                });
            }
            Err(Stall(factors)) => {
                stall_history.extend(factors);
                let next = window.halved();
                if next.y < dt * (1.0 - 1e-9) {
                    return Err(DebondError::WindowUnderflow { factors: stall_history });
                }
                window = next;
                halvings += 1;
            }
        }
    }
}

struct Stall(Vec<f64>);

impl From<DebondError> for Stall {
    fn from(_: DebondError) -> Self {
        Stall(Vec::new())
    }
}

fn iterate_window(
    window: &CoupledWindow,
    data: &HData,
    tough: &Toughness,
    options: &CoupledOptions,
    stop_at: f64,
) -> std::result::Result<(CharLattice, FrontRows, Vec<f64>), Stall> {
    let dt = options.solver.dt;
    let mut h = stationary_free(window, data, dt)?;
    let mut front = FrontRows {
        rows: vec![window.rho_start; window.time_steps + 1],
        last_in_window: 0,
    };
    let mut metric = Vec::new();
    let mut factors = Vec::new();
    for _ in 0..options.solver.max_iter {
        let next_front = psi2(window, data, tough, &h, stop_at)?;
        let next_h = psi1(window, data, &h, &front.rows)?;
        let old_curve = FrontCurve::from_rows(dt, &front.rows, data.outer)?;
        let new_curve = FrontCurve::from_rows(dt, &next_front.rows, data.outer)?;
        let d = strip_l2(&next_h, &next_h.regridded(&h), window).max(lambda_c0(&old_curve, &new_curve, window));
        if let Some(prev) = metric.last() {
            if *prev > 0.0 {
                factors.push(d / prev);
            }
        }
        metric.push(d);
        h = next_h;
        front = next_front;
        if d < window.metric_tol {
            // One more psi2 so the rows match the returned field.
            let rows = psi2(window, data, tough, &h, stop_at)?;
            return Ok((h, rows, metric));
        }
        if strip_sup(&h, window) > window.sup_cap || geometric_tail(&factors) >= STALL_FACTOR {
            return Err(Stall(factors));
        }
    }
    Err(Stall(factors))
}

fn sup_slope(data: &HData, rho_k: f64) -> (f64, f64) {
    let n = 512;
    let mut dh0: f64 = 0.0;
    let mut int = 0.0;
    let mut prev = 0.0;
    for k in 0..=n {
        let r = rho_k * k as f64 / n as f64;
        let a = data.h0_dot(r).abs();
        let v = a + data.h1(r).abs();
        dh0 = dh0.max(a);
        if k > 0 {
            int += 0.5 * (prev + v) * rho_k / n as f64;
        }
        prev = v;
    }
    (dh0, int)
}

/// Window with `y` from the self-map estimates, floored at `dt`.
pub fn plan_coupled_window(
    index: usize,
    t_start: f64,
    data: &HData,
    tough: &Toughness,
    time_cap_steps: usize,
    options: &CoupledOptions,
) -> Result<CoupledWindow> {
    let dt = options.solver.dt;
    let rho_k = data.rho0;
    let outer = data.outer;
    let alpha = data.alpha;
    let cap = (time_cap_steps as f64 * dt).max(dt);
    let probe = CoupledWindow {
        index,
        t_start,
        rho_start: rho_k,
        s_range: (-rho_k, -rho_k + dt),
        y: dt,
        time_cap: cap,
        time_steps: time_cap_steps.max(1),
        sup_cap: f64::INFINITY,
        metric_tol: options.metric_tol(),
        kappa_piece: tough.piece_index(rho_k),
        kappa_cap: tough.next_breakpoint_after(rho_k),
        certified: false,
    };
    let free = stationary_free(&probe, data, dt)?;
    let (h0_sup, h1_sup) = data.sup_bound();
    let sup_cap = 2.0 * free.sup_norm() + h0_sup + h1_sup;
    let (dh0_sup, data_int) = sup_slope(data, rho_k);
    let gap = outer - rho_k - cap;
    let (c1, _) = tough.bounds();
    let mut chosen = None;
    if gap > 0.0 {
        let c_gap = 0.25 * (alpha * alpha + 1.0 / (gap * gap));
        let bracket = dh0_sup + h1_sup + cap * c_gap * sup_cap;
        let ratio_bound = (-alpha * t_start).exp() * bracket * bracket / (2.0 * c1 * gap);
        let mut y = 0.5 * rho_k;
        while y >= dt * (1.0 - 1e-9) {
            let psi1_ok = data_int + 0.5 * c_gap * sup_cap * cap * y <= sup_cap;
            let psi2_ok = y * lambda_rhs(ratio_bound) <= cap;
            if psi1_ok && psi2_ok {
                chosen = Some(y);
                break;
            }
            y *= 0.5;
        }
    }
    let (y, certified) = match chosen {
        Some(y) => (y, true),
        None => (dt, false),
    };
    Ok(CoupledWindow {
        s_range: (-rho_k, -rho_k + y),
        y,
        sup_cap: if sup_cap > 0.0 { sup_cap } else { f64::INFINITY },
        certified,
        ..probe
    })
}

/// Why a coupled run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Horizon,
    FullyDebonded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledDiagnostics {
    pub windows: Vec<WindowDiagnostics>,
    /// Sup difference on `{t + r <= rho0}` against the front-independent solve.
    pub triangle_mismatch: f64,
    pub seam_jumps: Vec<f64>,
}

/// Output of a coupled run.
#[derive(Debug, Clone)]
pub struct GriffithRun {
    pub front: FrontCurve,
    pub patches: Vec<FieldPatch>,
    pub t_star: f64,
    pub stop_reason: StopReason,
    pub diagnostics: CoupledDiagnostics,
}

impl GriffithRun {
    /// The run as a marched solution, for sampling and auditing.
    pub fn solution(&self) -> Solution {
        Solution {
            patches: self.patches.clone(),
            front: self.front.clone(),
            seam_jumps: self.diagnostics.seam_jumps.clone(),
        }
    }
}

/// Front-independent field on `{t + r <= rho0}`, returned as a marched
/// solution for a front frozen at `rho0`.
pub fn triangle_solution(data: &ProblemData, options: &SolverOptions) -> Result<Solution> {
    let span = data.initial_width.min(data.horizon);
    let front = FrontCurve::constant(data.initial_width, data.outer_radius, span.max(options.dt))?;
    march(data, &front, span.max(options.dt), options)
}

fn triangle_mismatch(run_patches: &[FieldPatch], reference: &Solution, rho0: f64) -> Result<f64> {
    let worst: Result<Vec<f64>> = run_patches
        .par_iter()
        .map(|p| {
            let mut m: f64 = 0.0;
            for i in 0..p.h.rows() {
                let t = p.t_start() + p.h.t(i);
                if t > reference.t_end() + 1e-12 {
                    break;
                }
                for j in 0..=p.h.last_inside(i) {
                    let r = p.h.r(j);
                    if t + r <= rho0 - 1e-12 {
                        let q = reference.patch_at(t)?;
                        let v = q.value(t - q.t_start(), r)?;
                        m = m.max((v - p.h.get(i, j)).abs());
                    }
                }
            }
            Ok(m)
        })
        .collect();
    Ok(worst?.into_iter().fold(0.0, f64::max))
}

/// Marches coupled windows until the horizon or full debonding.
pub fn run(data: &ProblemData, tough: &Toughness, horizon: f64, options: &CoupledOptions) -> Result<GriffithRun> {
    options.validate()?;
    data.validate()?;
    let dt = options.solver.dt;
    let outer = data.outer_radius;
    let stop_at = outer - options.stop_margin();
    if data.initial_width >= stop_at {
        return Err(DebondError::InvalidData(format!(
            "initial width {} is already within the stop margin of R = {outer}",
            data.initial_width
        )));
    }
    let total = lattice_steps(horizon, dt);
    if total == 0 {
        return Err(DebondError::InvalidData(format!("horizon {horizon} is shorter than dt = {dt}")));
    }
    let mut hdata = to_h_data(data)?;
    let mut rows_global = vec![data.initial_width];
    let mut patches: Vec<FieldPatch> = Vec::new();
    let mut windows = Vec::new();
    let mut seam_jumps = Vec::new();
    let mut done = 0usize;
    let mut stop_reason = StopReason::Horizon;
    while done < total {
        let rho_k = *rows_global.last().unwrap();
        if rho_k >= stop_at {
            stop_reason = StopReason::FullyDebonded;
            break;
        }
        let t_k = done as f64 * dt;
        let plan = plan_one(
            patches.len(),
            t_k,
            rho_k,
            outer,
            data.alpha,
            dt,
            options.solver.window_multiplier,
            total - done,
        );
        let window = plan_coupled_window(patches.len(), t_k, &hdata, tough, plan.steps(dt), options)?;
        let coupled = solve_coupled_window(window, &hdata, tough, options)?;
        let end = coupled.end_row;
        let rows = &coupled.rows[..=end];
        let local = FrontCurve::from_rows(dt, rows, outer)?;
        let plan_r = local_plan(&coupled.window, end, dt, outer, data.alpha);
        let problem = WindowProblem::new(plan_r, hdata.clone(), local, dt)?;
        let patch = problem.solve_from(coupled.h.clone(), options.solver.tol, options.solver.max_iter)?;
        if let Some(prev) = patches.last() {
            seam_jumps.push(seam_jump(prev, &patch));
        }
        rows_global.extend_from_slice(&rows[1..]);
        windows.push(coupled.diagnostics);
        done += end;
        let last_row = *rows.last().unwrap();
        if done < total && last_row < stop_at {
            hdata = patch.restart_data()?;
        }
        patches.push(patch);
        if last_row >= stop_at {
            stop_reason = StopReason::FullyDebonded;
            break;
        }
    }
    let front = FrontCurve::from_rows(dt, &rows_global, outer)?;
    let t_star = (rows_global.len() - 1) as f64 * dt;
    let triangle = if options.skip_triangle_check {
        f64::NAN
    } else {
        let reference = triangle_solution(data, &options.solver)?;
        triangle_mismatch(&patches, &reference, data.initial_width)?
    };
    Ok(GriffithRun {
        front,
        patches,
        t_star,
        stop_reason,
        diagnostics: CoupledDiagnostics {
            windows,
            triangle_mismatch: triangle,
            seam_jumps,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;

    #[test]
    fn slope_and_speed_from_ratio() {
        assert_eq!(lambda_rhs(0.5), 1.0);
        assert_eq!(lambda_rhs(3.0), 2.0);
        assert_eq!(speed_from_ratio(0.7), 0.0);
        assert!((speed_from_ratio(3.0) - 0.5).abs() < 1e-15);
        for l in [1.5, 4.0, 30.0] {
            assert!((1.0 - 1.0 / lambda_rhs(l) - speed_from_ratio(l)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_data_keeps_front_at_rest() {
        let d = ProblemData::new(3.0, 1.0, 0.5, 0.4, Profile::Zero, Profile::Zero, Profile::Zero).unwrap();
        let k = Toughness::constant(0.1, 1.0, 3.0).unwrap();
        let run = run(&d, &k, 0.4, &CoupledOptions::default()).unwrap();
        assert_eq!(run.stop_reason, StopReason::Horizon);
        assert!(run.front.knots().iter().all(|(_, r)| *r == 1.0));
        assert!(run.patches.iter().all(|p| p.h.sup_norm() == 0.0));
    }
}
