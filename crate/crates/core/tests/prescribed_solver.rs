mod common;

use common::*;
use debond::dalembert::free_solution;
use debond::fields::to_h_data;
use debond::prescribed::{evaluate_field, march, march_on, WindowProblem};
use debond::quadrature::CharLattice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(base: &CharLattice, rng: &mut ChaCha8Rng) -> CharLattice {
    let mut h = base.zeros_like();
    for i in 0..h.rows() {
        for j in 0..=h.last_inside(i) {
            h.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    h
}

#[test]
fn measured_contraction_stays_below_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for alpha in [0.0, 1.0] {
        for (name, front) in fronts(1.0) {
            let sol = march(&bump(alpha, 1.0), &front, 1.0, &solver(1.0 / 32.0)).unwrap();
            for p in &sol.patches {
                let prob = WindowProblem::new(p.plan, p.data.clone(), p.front.clone(), p.dt()).unwrap();
                for _ in 0..20 {
                    let a = random_field(&p.h, &mut rng);
                    let b = random_field(&p.h, &mut rng);
                    let q = prob.apply_l(&a).sup_diff(&prob.apply_l(&b)) / a.sup_diff(&b);
                    assert!(q <= p.plan.contraction_bound, "{name} alpha={alpha} window {}: {q}", p.plan.index);
                }
            }
        }
    }
}

#[test]
fn picard_within_geometric_bound() {
    for alpha in [0.0, 1.0] {
        for (name, front) in fronts(1.0) {
            let sol = march(&loaded_bump(alpha, 1.0), &front, 1.0, &solver(1.0 / 32.0)).unwrap();
            for p in &sol.patches {
                let d = &p.diagnostics;
                assert!(d.final_change < 1e-10);
                assert!(d.iterations <= d.iteration_bound + 2, "{name}: {d:?}");
                assert!(p.plan.contraction_bound < 1.0);
            }
        }
    }
}

#[test]
fn converged_field_satisfies_representation() {
    for (_, front) in fronts(0.5) {
        let sol = march(&loaded_bump(1.0, 0.5), &front, 0.5, &solver(1.0 / 64.0)).unwrap();
        for p in &sol.patches {
            let res = p.representation_residual().unwrap();
            assert!(res <= 1e-9, "{res}");
        }
    }
}

#[test]
fn undamped_field_without_kernel_is_free_wave() {
    let data = bump(1.0, 0.6);
    let front = linear_front(0.6);
    let sol = march(&data, &front, 0.6, &solver(1.0 / 32.0)).unwrap();
    let p = &sol.patches[0];
    let prob = WindowProblem::new(p.plan, p.data.clone(), p.front.clone(), p.dt()).unwrap().with_kernel_scale(0.0);
    let patch = prob.solve(1e-12, 10).unwrap();
    let hd = to_h_data(&data).unwrap();
    let local = p.front.clone();
    for i in 0..patch.h.rows() {
        for j in 0..=patch.h.last_inside(i) {
            let exact = free_solution(&hd, &local, patch.h.t(i), patch.h.r(j)).unwrap();
            assert!((patch.h.get(i, j) - exact).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_data_gives_zero_field() {
    let data = debond::fields::ProblemData::new(
        OUTER,
        RHO0,
        1.0,
        1.0,
        debond::profile::Profile::Zero,
        debond::profile::Profile::Zero,
        debond::profile::Profile::Zero,
    )
    .unwrap();
    let sol = march(&data, &piecewise_front(1.0), 1.0, &solver(1.0 / 32.0)).unwrap();
    for p in &sol.patches {
        assert_eq!(p.h.sup_norm(), 0.0);
    }
}

#[test]
fn seams_are_continuous() {
    let sol = march(&loaded_bump(1.0, 2.0), &linear_front(2.0), 2.0, &solver(1.0 / 32.0)).unwrap();
    assert!(sol.patches.len() > 1);
    assert!(sol.seam_jumps.iter().all(|j| *j < 1e-9), "{:?}", sol.seam_jumps);
    for w in sol.patches.windows(2) {
        let t = w[1].t_start();
        let local = t - w[0].t_start();
        let rho = w[1].rho(0.0);
        for k in 0..=8 {
            let r = rho * k as f64 / 8.0;
            let a = w[0].value(local, r).unwrap();
            let b = evaluate_field(&sol, t, r).unwrap();
            assert!((a - b.h).abs() < 1e-9, "{a} {}", b.h);
        }
    }
}

#[test]
fn replayed_windows_reproduce_field() {
    let data = loaded_bump(1.0, 1.5);
    let front = piecewise_front(1.5);
    let sol = march(&data, &front, 1.5, &solver(1.0 / 32.0)).unwrap();
    let plans: Vec<_> = sol.patches.iter().map(|p| p.plan).collect();
    let again = march_on(&data, &front, &plans, &solver(1.0 / 32.0)).unwrap();
    for (a, b) in sol.patches.iter().zip(&again.patches) {
        assert_eq!(a.h.sup_diff(&b.h), 0.0);
    }
}
