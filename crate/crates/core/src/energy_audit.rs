//! Energies, energy rates, energy release rate and balance checks.
//!
//! Every rate formula is evaluated window-locally: the patch owning a time
//! carries the translated data, and all traces are taken from it.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};
use crate::fields::Toughness;
use crate::geometry::{annulus_area_derivative, FrontCurve};
use crate::prescribed::{FieldPatch, FieldSample};
use crate::profile::integrate_split;
use crate::quadrature::{line_integral_along_characteristic, Direction};

/// Front speed `beta` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FrontSpeed(f64);

impl FrontSpeed {
    pub fn new(beta: f64) -> Result<Self> {
        if (0.0..1.0).contains(&beta) {
            Ok(FrontSpeed(beta))
        } else {
            Err(DebondError::OutOfDomain {
                what: "front speed",
                value: beta,
                lo: 0.0,
                hi: 1.0,
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Radial samples at lattice nodes, cell midpoints and the front.
fn radial_samples(patch: &FieldPatch, t: f64) -> Result<Vec<FieldSample>> {
    let rho = patch.rho(t);
    let dr = patch.dt();
    let mut nodes: Vec<f64> = (0..).map(|j| j as f64 * dr).take_while(|r| *r < rho - 1e-9 * dr).collect();
    nodes.push(rho);
    let mut rs = Vec::with_capacity(2 * nodes.len());
    for w in nodes.windows(2) {
        rs.push(w[0]);
        rs.push(0.5 * (w[0] + w[1]));
    }
    rs.push(rho);
    rs.into_iter().map(|r| patch.sample(t, r)).collect()
}

/// Simpson's rule cell by cell over node, midpoint, node triples.
fn simpson(samples: &[FieldSample], f: impl Fn(&FieldSample) -> f64) -> f64 {
    samples
        .windows(3)
        .step_by(2)
        .map(|w| (w[2].r - w[0].r) / 6.0 * (f(&w[0]) + 4.0 * f(&w[1]) + f(&w[2])))
        .sum()
}

/// `pi int_0^rho (R - r)(v_t^2 + v_r^2) dr` at local time `t`.
pub fn internal_energy(patch: &FieldPatch, t: f64) -> Result<f64> {
    let s = radial_samples(patch, t)?;
    let outer = patch.data.outer;
    Ok(PI * simpson(&s, |q| (outer - q.r) * (q.v_t * q.v_t + q.v_r * q.v_r)))
}

/// Rate `2 pi alpha int_0^rho (R - r) v_t^2 dr` of friction dissipation.
pub fn friction_rate(patch: &FieldPatch, t: f64) -> Result<f64> {
    let alpha = patch.data.alpha;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let s = radial_samples(patch, t)?;
    let outer = patch.data.outer;
    Ok(2.0 * PI * alpha * simpson(&s, |q| (outer - q.r) * q.v_t * q.v_t))
}

/// Friction dissipated on `[0, t]`, trapezoid in time over lattice rows.
pub fn friction_dissipation(patches: &[FieldPatch], t: f64) -> Result<f64> {
    cumulative(patches, t, friction_rate)
}

/// External work on `[0, t]`, trapezoid in time over lattice rows.
pub fn external_work(patches: &[FieldPatch], t: f64) -> Result<f64> {
    cumulative(patches, t, |p, s| Ok(p.data.load.w_dot(s) * load_response(p, s, p.data.load.w_dot(s))?))
}

fn cumulative(
    patches: &[FieldPatch],
    t: f64,
    rate: impl Fn(&FieldPatch, f64) -> Result<f64> + Sync,
) -> Result<f64> {
    let mut acc = 0.0;
    for p in patches {
        if p.t_start() >= t {
            break;
        }
        let stop = (t - p.t_start()).min(p.t_end() - p.t_start());
        let dt = p.dt();
        let mut knots: Vec<f64> = (0..).map(|i| i as f64 * dt).take_while(|s| *s < stop - 1e-9 * dt).collect();
        knots.push(stop);
        let vals: Result<Vec<f64>> = knots.par_iter().map(|&s| rate(p, s)).collect();
        let vals = vals?;
        acc += knots
            .windows(2)
            .zip(vals.windows(2))
            .map(|(k, v)| 0.5 * (k[1] - k[0]) * (v[0] + v[1]))
            .sum::<f64>();
    }
    Ok(acc)
}

/// `2 pi int_{rho0}^{rho(t)} (R - r) kappa(r) dr`.
pub fn debond_dissipation(front: &FrontCurve, tough: &Toughness, t: f64) -> Result<f64> {
    let rho = front.rho(t)?;
    let rho0 = front.rho0();
    if rho <= rho0 {
        return Ok(0.0);
    }
    let outer = front.outer();
    let breaks = tough.breakpoints();
    let cells = (((rho - rho0) / 0.01).ceil() as usize).max(1);
    Ok(2.0
        * PI
        * integrate_split(rho0, rho, &breaks, cells, |r| {
            (outer - r) * tough.eval(r.min(outer - 1e-15)).unwrap_or(0.0)
        }))
}

/// `dh0(rho - t) - h1(rho - t) - int_0^t F(tau, tau + rho - t) dtau` at local `t`.
pub fn front_bracket(patch: &FieldPatch, t: f64) -> Result<f64> {
    let rho = patch.rho(t);
    let foot = rho - t;
    if foot < -1e-12 {
        return Err(DebondError::ApexOutside { t, r: rho });
    }
    let d = &patch.data;
    let i = line_integral_along_characteristic(&patch.kernel, (0.0, foot.max(0.0)), Direction::Plus45, t)?;
    Ok(d.h0_dot(foot) - d.h1(foot) - i)
}

/// Closed-form `G_0` at local time `t`. Never negative.
pub fn err_g0(patch: &FieldPatch, t: f64) -> Result<f64> {
    let b = front_bracket(patch, t)?;
    let abs_t = patch.t_start() + t;
    let rho = patch.rho(t);
    Ok((-patch.data.alpha * abs_t).exp() * b * b / (2.0 * (patch.data.outer - rho)))
}

pub fn err_gbeta(g0: f64, beta: FrontSpeed) -> f64 {
    let b = beta.get();
    (1.0 - b) / (1.0 + b) * g0
}

/// `-Tdot / (rho' dA/drho)`; the rate must exclude the rim power.
pub fn err_from_energy_quotient(outer: f64, rho: f64, rho_dot: f64, t_dot: f64) -> Result<f64> {
    if !(rho_dot > 0.0) {
        return Err(DebondError::OutOfDomain {
            what: "front speed",
            value: rho_dot,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(-t_dot / (rho_dot * annulus_area_derivative(outer, rho)?))
}

/// `Q(t, gamma)`: rim force conjugate to the opening rate `gamma`.
pub fn load_response(patch: &FieldPatch, t: f64, gamma: f64) -> Result<f64> {
    let d = &patch.data;
    let outer = d.outer;
    let abs_t = patch.t_start() + t;
    let i = line_integral_along_characteristic(&patch.kernel, (0.0, t), Direction::Minus45, t)?;
    let traces = d.h0_dot(t) + d.h1(t) + i;
    Ok(2.0
        * PI
        * outer
        * (gamma + 0.5 * (d.alpha - 1.0 / outer) * d.load.w(t)
            - outer.powf(-0.5) * (-0.5 * d.alpha * abs_t).exp() * traces))
}

/// Both evaluations of `dT/dt` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRate {
    /// Closed form in `h` variables: front term plus rim power.
    pub closed_form: f64,
    /// Boundary form in `v` variables from the exact traces.
    pub trace_form: f64,
    /// Front contribution of the closed form.
    pub front_part: f64,
    /// Rim power `w' Q(t, w')`.
    pub rim_power: f64,
}

pub fn energy_rate(patch: &FieldPatch, t: f64) -> Result<EnergyRate> {
    let d = &patch.data;
    let outer = d.outer;
    let abs_t = patch.t_start() + t;
    let rho = patch.rho(t);
    let beta = patch.front.rho_dot_at(t);
    let b = front_bracket(patch, t)?;
    let front_part = -PI * beta * (1.0 - beta) / (1.0 + beta) * (-d.alpha * abs_t).exp() * b * b;
    let w_dot = d.load.w_dot(t);
    let rim_power = w_dot * load_response(patch, t, w_dot)?;
    let at_front = patch.sample(t, rho)?;
    let at_rim = patch.sample(t, 0.0)?;
    let trace_form = PI
        * (outer - rho)
        * (beta * (at_front.v_t.powi(2) + at_front.v_r.powi(2)) + 2.0 * at_front.v_r * at_front.v_t)
        - 2.0 * PI * outer * at_rim.v_r * at_rim.v_t;
    Ok(EnergyRate {
        closed_form: front_part + rim_power,
        trace_form,
        front_part,
        rim_power,
    })
}

/// Sampling and tolerance controls for [`audit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Lattice rows between samples.
    pub stride: usize,
    /// Absolute tolerance on KKT and maximal-dissipation checks.
    pub kkt_tol: f64,
    /// Relative mismatch between closed-form and differenced rates that raises a flag.
    pub rate_flag_tol: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            stride: 1,
            kkt_tol: 1e-3,
            rate_flag_tol: 0.05,
        }
    }
}

/// Energy series on a shared time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_dot: Vec<f64>,
    pub internal: Vec<f64>,
    pub friction: Vec<f64>,
    pub total: Vec<f64>,
    pub work: Vec<f64>,
    /// Toughness dissipation, or the energy released at the front when no toughness is given.
    pub debond: Vec<f64>,
    pub g0: Vec<f64>,
    pub g_beta: Vec<f64>,
    /// Energy-quotient release rate; NaN where the front is at rest.
    pub g_quotient: Vec<f64>,
    /// Toughness at the front; NaN without a toughness law.
    /// KKT entries are NaN there and at the final sample.
    pub kappa: Vec<f64>,
    pub energy_rate: Vec<f64>,
    pub energy_rate_trace: Vec<f64>,
    /// Centered difference of `total`, logged as a diagnostic.
    pub energy_rate_fd: Vec<f64>,
    pub edp_residual: Vec<f64>,
    pub kkt_residual: Vec<f64>,
    /// `true` where the speed is the maximal admissible one.
    pub mdp_flags: Vec<bool>,
    /// `true` where closed-form and differenced rates disagree.
    pub rate_flags: Vec<bool>,
}

impl EnergyLedger {
    /// `max |EDP residual| / max(T(0) + W, eps)`.
    pub fn max_relative_edp(&self) -> f64 {
        let t0 = self.total.first().copied().unwrap_or(0.0);
        let scale = self.work.iter().map(|w| (t0 + w).abs()).fold(t0.abs(), f64::max).max(1e-300);
        self.edp_residual.iter().fold(0.0, |a: f64, r| a.max(r.abs())) / scale
    }

    pub fn max_kkt_residual(&self) -> f64 {
        self.kkt_residual.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Record {
    t: f64,
    rho: f64,
    rho_dot: f64,
    internal: f64,
    friction_rate: f64,
    rate: EnergyRate,
    g0: f64,
}

fn record(patch: &FieldPatch, t: f64) -> Result<Record> {
    Ok(Record {
        t: patch.t_start() + t,
        rho: patch.rho(t),
        rho_dot: patch.front.rho_dot_at(t),
        internal: internal_energy(patch, t)?,
        friction_rate: friction_rate(patch, t)?,
        rate: energy_rate(patch, t)?,
        g0: err_g0(patch, t)?,
    })
}

fn trapezoid_series(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for k in 1..t.len() {
        out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
    }
    out
}

/// Fills the energy ledger of a marched or coupled run.
pub fn audit(
    patches: &[FieldPatch],
    front: &FrontCurve,
    tough: Option<&Toughness>,
    options: &AuditOptions,
) -> Result<EnergyLedger> {
    if patches.is_empty() {
        return Err(DebondError::InvalidData("nothing to audit".into()));
    }
    let stride = options.stride.max(1);
    let mut jobs: Vec<(usize, f64)> = Vec::new();
    let last = patches.len() - 1;
    let mut global_row = 0usize;
    for (k, p) in patches.iter().enumerate() {
        let rows = p.h.rows();
        let end = if k == last { rows } else { rows - 1 };
        for i in 0..end {
            if (global_row + i).is_multiple_of(stride) || (k == last && i == rows - 1) {
                jobs.push((k, p.h.t(i)));
            }
        }
        global_row += rows - 1;
    }
    let records: Result<Vec<Record>> = jobs.par_iter().map(|&(k, t)| record(&patches[k], t)).collect();
    let records = records?;

    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let internal: Vec<f64> = records.iter().map(|r| r.internal).collect();
    let friction = trapezoid_series(&times, &records.iter().map(|r| r.friction_rate).collect::<Vec<_>>());
    let work = trapezoid_series(&times, &records.iter().map(|r| r.rate.rim_power).collect::<Vec<_>>());
    let total: Vec<f64> = internal.iter().zip(&friction).map(|(e, a)| e + a).collect();
    let debond: Vec<f64> = match tough {
        Some(k) => times.iter().map(|&t| debond_dissipation(front, k, t)).collect::<Result<_>>()?,
        // Without a toughness, account for the energy the front actually takes.
        None => {
            let outer = front.outer();
            let released = records
                .iter()
                .map(|r| {
                    let beta = FrontSpeed::new(r.rho_dot.clamp(0.0, 1.0 - 1e-15))?;
                    Ok(err_gbeta(r.g0, beta) * 2.0 * PI * (outer - r.rho) * r.rho_dot)
                })
                .collect::<Result<Vec<f64>>>()?;
            trapezoid_series(&times, &released)
        }
    };
    let n = times.len();
    let energy_rate_fd: Vec<f64> = (0..n)
        .map(|k| {
            if n < 2 {
                return f64::NAN;
            }
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (total[b] - total[a]) / (times[b] - times[a])
        })
        .collect();

    let mut ledger = EnergyLedger {
        times,
        rho: records.iter().map(|r| r.rho).collect(),
        rho_dot: records.iter().map(|r| r.rho_dot).collect(),
        internal,
        friction,
        total,
        work,
        debond,
        g0: records.iter().map(|r| r.g0).collect(),
        g_beta: Vec::with_capacity(n),
        g_quotient: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
        energy_rate: records.iter().map(|r| r.rate.closed_form).collect(),
        energy_rate_trace: records.iter().map(|r| r.rate.trace_form).collect(),
        energy_rate_fd,
        edp_residual: Vec::with_capacity(n),
        kkt_residual: Vec::with_capacity(n),
        mdp_flags: Vec::with_capacity(n),
        rate_flags: Vec::with_capacity(n),
    };
    let outer = front.outer();
    for (k, r) in records.iter().enumerate() {
        let beta = FrontSpeed::new(r.rho_dot.clamp(0.0, 1.0 - 1e-15))?;
        let g_beta = err_gbeta(r.g0, beta);
        ledger.g_beta.push(g_beta);
        let front_rate = r.rate.trace_form - r.rate.rim_power;
        ledger.g_quotient.push(if r.rho_dot > 0.0 {
            err_from_energy_quotient(outer, r.rho, r.rho_dot, front_rate)?
        } else {
            f64::NAN
        });
        let kappa = match tough {
            Some(t) => t.eval(r.rho.min(outer - 1e-12))?,
            None => f64::NAN,
        };
        ledger.kappa.push(kappa);
        // No right derivative exists at the end of the run.
        let terminal = k + 1 == n;
        if kappa.is_finite() && !terminal {
            let gap = g_beta - kappa;
            ledger.kkt_residual.push(gap.max(0.0) + (gap * r.rho_dot).abs());
            let best = if r.g0 > kappa { (r.g0 - kappa) / (r.g0 + kappa) } else { 0.0 };
            ledger.mdp_flags.push((best - r.rho_dot).abs() <= options.kkt_tol);
        } else {
            ledger.kkt_residual.push(f64::NAN);
            ledger.mdp_flags.push(true);
        }
        ledger
            .edp_residual
            .push(ledger.total[k] + ledger.debond[k] - ledger.total[0] - ledger.work[k]);
        let closed = ledger.energy_rate[k];
        let fd = ledger.energy_rate_fd[k];
        let scale = closed.abs().max(fd.abs()).max(1e-12);
        ledger.rate_flags.push((closed - fd).abs() > options.rate_flag_tol * scale);
    }
    Ok(ledger)
}
