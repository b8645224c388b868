#![allow(dead_code)]

use debond::fields::{ProblemData, Toughness};
use debond::geometry::FrontCurve;
use debond::griffith::CoupledOptions;
use debond::prescribed::SolverOptions;
use debond::profile::Profile;

pub const OUTER: f64 = 3.0;
pub const RHO0: f64 = 1.0;

/// Clamped film released from a sine-bump displacement.
pub fn bump(alpha: f64, horizon: f64) -> ProblemData {
    ProblemData::new(OUTER, RHO0, alpha, horizon, Profile::Zero, Profile::sine_bump(0.2, 0.2, 0.8), Profile::Zero)
        .unwrap()
}

/// Same initial bump with a smooth pull at the rim.
pub fn loaded_bump(alpha: f64, horizon: f64) -> ProblemData {
    ProblemData::new(
        OUTER,
        RHO0,
        alpha,
        horizon,
        Profile::sine_bump(0.1, 0.1, 0.6),
        Profile::sine_bump(0.2, 0.2, 0.8),
        Profile::Zero,
    )
    .unwrap()
}

/// Rim lifted to height `a` with a linear initial profile, so the front
/// sees a release rate of a²/2 at t = 0.
pub fn opening(a: f64, alpha: f64, horizon: f64) -> ProblemData {
    ProblemData::new(OUTER, RHO0, alpha, horizon, Profile::constant(a), Profile::affine(a, -a), Profile::Zero)
        .unwrap()
}

pub fn static_front(t_end: f64) -> FrontCurve {
    FrontCurve::constant(RHO0, OUTER, t_end).unwrap()
}

pub fn linear_front(t_end: f64) -> FrontCurve {
    FrontCurve::linear(RHO0, 0.3, OUTER, t_end).unwrap()
}

/// Rests, then advances at two different speeds.
pub fn piecewise_front(t_end: f64) -> FrontCurve {
    let last = t_end.max(1.0);
    FrontCurve::new(vec![(0.0, 1.0), (0.3, 1.0), (0.7, 1.2), (last, 1.2 + 0.15 * (last - 0.7))], OUTER).unwrap()
}

pub fn fronts(t_end: f64) -> Vec<(&'static str, FrontCurve)> {
    vec![
        ("static", static_front(t_end)),
        ("linear", linear_front(t_end)),
        ("piecewise", piecewise_front(t_end)),
    ]
}

pub fn kappa(k: f64) -> Toughness {
    Toughness::constant(k, RHO0, OUTER).unwrap()
}

pub fn solver(dt: f64) -> SolverOptions {
    SolverOptions { dt, ..SolverOptions::default() }
}

pub fn coupled(dt: f64) -> CoupledOptions {
    CoupledOptions { solver: solver(dt), ..CoupledOptions::default() }
}

/// Fitted order of a sequence of errors at successively halved steps.
pub fn fitted_order(errs: &[f64]) -> f64 {
    let n = errs.len() as f64;
    let xs: Vec<f64> = (0..errs.len()).map(|k| -(k as f64) * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
