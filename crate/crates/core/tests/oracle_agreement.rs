mod common;

use common::{fitted_order, piecewise_front};
use debond::fields::ProblemData;
use debond::geometry::FrontCurve;
use debond::oracle::{discrepancy_l2, solve_reference};
use debond::prescribed::{march, SolverOptions};
use debond::profile::Profile;

fn sine_bump() -> ProblemData {
    ProblemData::new(3.0, 1.0, 1.0, 1.0, Profile::Zero, Profile::sine_bump(0.2, 0.2, 0.8), Profile::Zero).unwrap()
}

fn discrepancy(data: &ProblemData, front: &FrontCurve, dt: f64) -> f64 {
    let opts = SolverOptions { dt, ..SolverOptions::default() };
    let sol = march(data, front, data.horizon, &opts).unwrap();
    let hist = solve_reference(data, front, data.horizon, dt, dt / 2.0).unwrap();
    discrepancy_l2(&hist, &sol).unwrap()
}

#[test]
fn static_front_discrepancy_shrinks() {
    let data = sine_bump();
    let front = FrontCurve::constant(1.0, 3.0, 1.0).unwrap();
    let errs: Vec<f64> = [16.0, 32.0, 64.0, 128.0].iter().map(|n| discrepancy(&data, &front, 1.0 / n)).collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(fitted_order(&errs) >= 1.0, "{errs:?}");
    assert!(errs[3] < 1e-3);
}

#[test]
fn moving_front_discrepancy_shrinks() {
    let data = sine_bump();
    let front = FrontCurve::linear(1.0, 0.3, 3.0, 1.0).unwrap();
    let errs: Vec<f64> = [16.0, 32.0, 64.0].iter().map(|n| discrepancy(&data, &front, 1.0 / n)).collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(fitted_order(&errs) >= 1.0, "{errs:?}");
}

#[test]
fn piecewise_front_discrepancy_shrinks() {
    let data = sine_bump();
    let front = piecewise_front(1.0);
    let errs: Vec<f64> = [16.0, 32.0, 64.0].iter().map(|n| discrepancy(&data, &front, 1.0 / n)).collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    assert!(fitted_order(&errs) >= 1.0, "{errs:?}");
}
