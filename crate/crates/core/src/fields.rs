//! Problem data, the `u -> v -> h` transformation chain, kernels and toughness.
//!
//! `v(t, r)` is the radial displacement at distance `r` from the rim and
//! `h = (R - r)^{1/2} e^{alpha t / 2} v` removes both the damping and the
//! first-order term, leaving `h_tt - h_rr = c(r) h`.

use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};
use crate::profile::{gauss5, PiecewiseCubic, Profile};

/// Absolute tolerance on the compatibility conditions.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Radial problem data in the `v` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemData {
    pub outer_radius: f64,
    pub initial_width: f64,
    pub alpha: f64,
    pub horizon: f64,
    /// Prescribed opening at the rim.
    pub w: Profile,
    pub v0: Profile,
    pub v1: Profile,
}

impl ProblemData {
    pub fn new(
        outer_radius: f64,
        initial_width: f64,
        alpha: f64,
        horizon: f64,
        w: Profile,
        v0: Profile,
        v1: Profile,
    ) -> Result<Self> {
        let data = ProblemData {
            outer_radius,
            initial_width,
            alpha,
            horizon,
            w,
            v0,
            v1,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let (r, rho0) = (self.outer_radius, self.initial_width);
        if !(rho0.is_finite() && r.is_finite() && rho0 > 0.0 && rho0 < r) {
            return Err(DebondError::InvalidData(format!(
                "need 0 < initial width < outer radius, got {rho0} and {r}"
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(DebondError::InvalidData(format!("damping {} must be >= 0", self.alpha)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(DebondError::InvalidData(format!("horizon {} must be positive", self.horizon)));
        }
        self.w.validate()?;
        self.v0.validate()?;
        self.v1.validate()?;
        let gap0 = self.v0.value(0.0) - self.w.value(0.0);
        if gap0.abs() > COMPATIBILITY_TOL {
            return Err(DebondError::Compatibility(format!(
                "v0(0) - w(0) = {gap0:e}"
            )));
        }
        let gap1 = self.v0.value(rho0);
        if gap1.abs() > COMPATIBILITY_TOL {
            return Err(DebondError::Compatibility(format!("v0(rho0) = {gap1:e}")));
        }
        // v1 must be bounded, not merely square integrable.
        let n = 512;
        for k in 0..=n {
            let x = rho0 * k as f64 / n as f64;
            if !self.v1.value(x).is_finite() || !self.v0.value(x).is_finite() {
                return Err(DebondError::InvalidData(format!("initial data unbounded near r = {x}")));
            }
        }
        Ok(())
    }
}

/// Rim opening seen in `h` variables, in window-local time.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoad {
    pub w: Profile,
    pub alpha: f64,
    pub outer: f64,
    /// Absolute time of local `t = 0`.
    pub origin: f64,
}

impl BoundaryLoad {
    fn weight(&self, t: f64) -> f64 {
        self.outer.sqrt() * (0.5 * self.alpha * (self.origin + t)).exp()
    }

    pub fn w(&self, t: f64) -> f64 {
        self.w.value(self.origin + t)
    }

    pub fn w_dot(&self, t: f64) -> f64 {
        self.w.derivative(self.origin + t)
    }

    /// `z(t) = R^{1/2} e^{alpha t / 2} w(t)`.
    pub fn z(&self, t: f64) -> f64 {
        self.weight(t) * self.w(t)
    }

    pub fn z_dot(&self, t: f64) -> f64 {
        self.weight(t) * (self.w_dot(t) + 0.5 * self.alpha * self.w(t))
    }

    pub fn shifted(&self, dt: f64) -> BoundaryLoad {
        BoundaryLoad {
            origin: self.origin + dt,
            ..self.clone()
        }
    }
}

/// A function of `r` on `[0, rho0]` with value, slope and running integral.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialFn {
    /// `(R - r)^{1/2} (base(r) + extra_weight * extra(r))`.
    Transformed {
        outer: f64,
        base: Profile,
        extra: Profile,
        extra_weight: f64,
        grid: Vec<f64>,
        cumulative: Vec<f64>,
    },
    Sampled(PiecewiseCubic),
}

impl RadialFn {
    pub fn transformed(outer: f64, base: Profile, extra: Profile, extra_weight: f64, extent: f64) -> Self {
        let cells = 2048;
        let mut grid: Vec<f64> = (0..=cells).map(|k| extent * k as f64 / cells as f64).collect();
        for b in base.breakpoints().into_iter().chain(extra.breakpoints()) {
            if b > 0.0 && b < extent {
                grid.push(b);
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut f = RadialFn::Transformed {
            outer,
            base,
            extra,
            extra_weight,
            grid: grid.clone(),
            cumulative: Vec::new(),
        };
        let mut cum = Vec::with_capacity(grid.len());
        cum.push(0.0);
        for w in grid.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + gauss5(w[0], w[1], |x| f.value(x)));
        }
        if let RadialFn::Transformed { cumulative, .. } = &mut f {
            *cumulative = cum;
        }
        f
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialFn::Transformed {
                outer,
                base,
                extra,
                extra_weight,
                ..
            } => {
                let s = (outer - r).max(0.0).sqrt();
                s * (base.value(r) + extra_weight * extra.value(r))
            }
            RadialFn::Sampled(t) => t.value(r),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            RadialFn::Transformed {
                outer,
                base,
                extra,
                extra_weight,
                ..
            } => {
                let gap = (outer - r).max(1e-300);
                let s = gap.sqrt();
                let inner = base.value(r) + extra_weight * extra.value(r);
                let inner_d = base.derivative(r) + extra_weight * extra.derivative(r);
                -0.5 * inner / s + s * inner_d
            }
            RadialFn::Sampled(t) => t.derivative(r),
        }
    }

    /// `int_0^r` of the function.
    pub fn integral(&self, r: f64) -> f64 {
        match self {
            RadialFn::Transformed { grid, cumulative, .. } => {
                let n = grid.len();
                if r <= 0.0 {
                    return -gauss5(r, 0.0, |x| self.value(x));
                }
                if r >= grid[n - 1] {
                    return cumulative[n - 1] + gauss5(grid[n - 1], r, |x| self.value(x));
                }
                let k = grid.partition_point(|g| *g <= r) - 1;
                cumulative[k] + gauss5(grid[k], r, |x| self.value(x))
            }
            RadialFn::Sampled(t) => t.integral(r) - t.integral(0.0),
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        match self {
            RadialFn::Transformed { base, extra, .. } => {
                base.has_analytic_derivative() && extra.has_analytic_derivative()
            }
            RadialFn::Sampled(_) => false,
        }
    }
}

/// Data of the auxiliary problem, in the local time of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct HData {
    pub rho0: f64,
    pub outer: f64,
    pub alpha: f64,
    pub load: BoundaryLoad,
    pub h0: RadialFn,
    pub h1: RadialFn,
}

impl HData {
    pub fn origin(&self) -> f64 {
        self.load.origin
    }

    pub fn z(&self, t: f64) -> f64 {
        self.load.z(t)
    }

    pub fn z_dot(&self, t: f64) -> f64 {
        self.load.z_dot(t)
    }

    pub fn h0(&self, r: f64) -> f64 {
        self.h0.value(r)
    }

    pub fn h0_dot(&self, r: f64) -> f64 {
        self.h0.derivative(r)
    }

    pub fn h1(&self, r: f64) -> f64 {
        self.h1.value(r)
    }

    pub fn h1_integral(&self, r: f64) -> f64 {
        self.h1.integral(r)
    }

    pub fn check_compatibility(&self) -> Result<()> {
        let g0 = self.h0(0.0) - self.z(0.0);
        let g1 = self.h0(self.rho0);
        if g0.abs() > COMPATIBILITY_TOL || g1.abs() > COMPATIBILITY_TOL {
            return Err(DebondError::Compatibility(format!(
                "h0(0) - z(0) = {g0:e}, h0(rho0) = {g1:e}"
            )));
        }
        Ok(())
    }

    /// Sup of `|h0|` and `|h1|` sampled on the data interval.
    pub fn sup_bound(&self) -> (f64, f64) {
        let n = 1024;
        let mut a: f64 = 0.0;
        let mut b: f64 = 0.0;
        for k in 0..=n {
            let r = self.rho0 * k as f64 / n as f64;
            a = a.max(self.h0(r).abs());
            b = b.max(self.h1(r).abs());
        }
        (a, b)
    }
}

/// Images `z, h0, h1` of the `v` data.
pub fn to_h_data(data: &ProblemData) -> Result<HData> {
    data.validate()?;
    let outer = data.outer_radius;
    let rho0 = data.initial_width;
    let h0 = RadialFn::transformed(outer, data.v0.clone(), Profile::Zero, 0.0, rho0);
    let h1 = RadialFn::transformed(outer, data.v1.clone(), data.v0.clone(), 0.5 * data.alpha, rho0);
    let hd = HData {
        rho0,
        outer,
        alpha: data.alpha,
        load: BoundaryLoad {
            w: data.w.clone(),
            alpha: data.alpha,
            outer,
            origin: 0.0,
        },
        h0,
        h1,
    };
    hd.check_compatibility()?;
    Ok(hd)
}

/// Displacement and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VState {
    pub v: f64,
    pub v_t: f64,
    pub v_r: f64,
}

/// Undoes the `h` weighting at absolute time `t`.
pub fn v_from_h(h: f64, h_t: f64, h_r: f64, t: f64, r: f64, outer: f64, alpha: f64) -> Result<VState> {
    if !(r < outer) {
        return Err(DebondError::OutOfDomain {
            what: "r",
            value: r,
            lo: 0.0,
            hi: outer,
        });
    }
    let gap = outer - r;
    let w = (-0.5 * alpha * t).exp() / gap.sqrt();
    Ok(VState {
        v: w * h,
        v_t: w * (h_t - 0.5 * alpha * h),
        v_r: w * (h_r + 0.5 * h / gap),
    })
}

/// Forward weighting `v -> h` with derivatives.
pub fn h_from_v(v: VState, t: f64, r: f64, outer: f64, alpha: f64) -> (f64, f64, f64) {
    let gap = outer - r;
    let w = (0.5 * alpha * t).exp() * gap.sqrt();
    let h = w * v.v;
    (h, w * v.v_t + 0.5 * alpha * h, w * v.v_r - 0.5 * h / gap)
}

/// Film displacement at physical radius `|x| = R - r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSample {
    pub radius: f64,
    pub u: f64,
}

pub fn u_from_v(v: f64, r: f64, outer: f64) -> RadialSample {
    RadialSample { radius: outer - r, u: v }
}

/// `c(sigma) = (alpha^2 + 1 / (R - sigma)^2) / 4`.
pub fn kernel_coefficient(alpha: f64, outer: f64, sigma: f64) -> f64 {
    let g = outer - sigma;
    0.25 * (alpha * alpha + 1.0 / (g * g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    F,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub kind: KernelKind,
    pub value: f64,
}

/// Source of the `h` equation.
pub fn kernel_f(alpha: f64, outer: f64, sigma: f64, h: f64) -> KernelSample {
    KernelSample {
        kind: KernelKind::F,
        value: kernel_coefficient(alpha, outer, sigma) * h,
    }
}

/// Source of the `v` equation.
pub fn kernel_g(alpha: f64, outer: f64, sigma: f64, v_t: f64, v_r: f64) -> KernelSample {
    KernelSample {
        kind: KernelKind::G,
        value: -v_r / (outer - sigma) - alpha * v_t,
    }
}

/// Piecewise toughness on `[rho0, R)`, right-continuous at breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Toughness {
    pieces: Vec<(f64, Profile)>,
    rho0: f64,
    outer: f64,
    c1: f64,
    c2: f64,
}

impl Toughness {
    pub fn new(pieces: Vec<(f64, Profile)>, rho0: f64, outer: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(DebondError::InvalidToughness("no pieces".into()));
        }
        if (pieces[0].0 - rho0).abs() > 1e-12 {
            return Err(DebondError::InvalidToughness(format!(
                "first piece starts at {} instead of rho0 = {rho0}",
                pieces[0].0
            )));
        }
        for w in pieces.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(DebondError::InvalidToughness("breakpoints must increase".into()));
            }
        }
        if pieces.last().unwrap().0 >= outer {
            return Err(DebondError::InvalidToughness("breakpoint beyond the outer radius".into()));
        }
        let mut c1 = f64::INFINITY;
        let mut c2: f64 = 0.0;
        for (k, (start, p)) in pieces.iter().enumerate() {
            p.validate()
                .map_err(|e| DebondError::InvalidToughness(e.to_string()))?;
            let end = pieces.get(k + 1).map(|q| q.0).unwrap_or(outer);
            let n = 256;
            for m in 0..=n {
                let r = start + (end - start) * m as f64 / n as f64;
                let v = p.value(r);
                c1 = c1.min(v);
                c2 = c2.max(v);
            }
        }
        if !(c1 > 0.0 && c2.is_finite()) {
            return Err(DebondError::InvalidToughness(format!(
                "toughness must stay positive and bounded (min {c1}, max {c2})"
            )));
        }
        let start = pieces[0].0;
        Ok(Toughness {
            pieces,
            rho0: start,
            outer,
            c1,
            c2,
        })
    }

    pub fn constant(kappa: f64, rho0: f64, outer: f64) -> Result<Self> {
        Self::new(vec![(rho0, Profile::constant(kappa))], rho0, outer)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }

    pub fn pieces(&self) -> &[(f64, Profile)] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.0).collect()
    }

    pub fn piece_index(&self, r: f64) -> usize {
        self.pieces.partition_point(|p| p.0 <= r).saturating_sub(1)
    }

    /// First breakpoint strictly above `r`, or the outer radius.
    pub fn next_breakpoint_after(&self, r: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.0)
            .find(|b| *b > r + 1e-12)
            .unwrap_or(self.outer)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= self.rho0 - 1e-12 && r < self.outer) {
            return Err(DebondError::OutOfDomain {
                what: "r",
                value: r,
                lo: self.rho0,
                hi: self.outer,
            });
        }
        Ok(self.clamp(self.pieces[self.piece_index(r)].1.value(r)))
    }

    /// Piece `index` held constant past `cap`.
    pub fn eval_clamped(&self, index: usize, r: f64, cap: f64) -> f64 {
        self.clamp(self.pieces[index].1.value(r.min(cap)))
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.c1, self.c2)
    }
}

/// Short alias used by the drivers.
pub fn kappa_eval(tough: &Toughness, r: f64) -> Result<f64> {
    tough.eval(r)
}
