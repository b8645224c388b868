use debond::dalembert::free_solution;
use debond::energy_audit::{err_gbeta, FrontSpeed};
use debond::fields::{h_from_v, to_h_data, v_from_h, ProblemData, Toughness, VState};
use debond::geometry::{cone_region, polygon_area, region_area, FrontCurve};
use debond::griffith::{lambda_rhs, speed_from_ratio};
use debond::oracle::{fixed_map, inverse_map};
use debond::profile::{PiecewiseCubic, Profile};
use proptest::prelude::*;

fn front_strategy() -> impl Strategy<Value = FrontCurve> {
    prop::collection::vec(0.0f64..0.9, 1..5).prop_map(|speeds| {
        let mut knots = vec![(0.0, 1.0)];
        for (k, s) in speeds.iter().enumerate() {
            let (t, r) = knots[k];
            knots.push((t + 0.25, r + 0.25 * s));
        }
        FrontCurve::new(knots, 3.0).unwrap()
    })
}

proptest! {
    #[test]
    fn phi_and_lambda_are_inverse(front in front_strategy(), u in 0.0f64..1.0) {
        let t = u * front.t_end();
        let s = front.phi(t).unwrap();
        prop_assert!((front.lambda_of(s).unwrap() - t).abs() < 1e-12);
        let p = front.psi(t).unwrap();
        prop_assert!((front.psi_inverse(p).unwrap() - t).abs() < 1e-12);
    }

    #[test]
    fn reflection_map_is_contracting(front in front_strategy(), u in 0.0f64..1.0) {
        let hi = front.t_end() + front.rho(front.t_end()).unwrap();
        let s = front.rho0() + u * (hi - front.rho0());
        let w = front.omega(s).unwrap();
        prop_assert!(w >= -front.rho0() - 1e-12 && w <= s);
        let d = front.omega_dot(s).unwrap();
        prop_assert!(d > 0.0 && d <= 1.0);
    }

    #[test]
    fn cone_regions_lie_in_the_domain(front in front_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let t = 0.01 + u * (front.t_end() - 0.01);
        let r = v * front.rho(t).unwrap();
        match cone_region(&front, t, r) {
            Ok(reg) => {
                let area = region_area(&reg);
                prop_assert!(area >= 0.0);
                // never more than the full backward light cone
                prop_assert!(area <= t * t + 1e-12);
                prop_assert!((area - 0.5 * polygon_area(&reg.polygon())).abs() < 1e-12);
            }
            Err(_) => prop_assert!(t > r && t + r > front.rho0()),
        }
    }

    #[test]
    fn release_rate_scaling(g0 in 0.0f64..10.0, b1 in 0.0f64..0.999, b2 in 0.0f64..0.999) {
        let lo = b1.min(b2);
        let hi = b1.max(b2);
        let a = err_gbeta(g0, FrontSpeed::new(lo).unwrap());
        let b = err_gbeta(g0, FrontSpeed::new(hi).unwrap());
        prop_assert!(b <= a);
        if g0 > 0.0 && hi > lo + 1e-9 {
            prop_assert!(b < a);
        }
        prop_assert!((a - (1.0 - lo) / (1.0 + lo) * g0).abs() <= 1e-14 * g0.max(1.0));
    }

    #[test]
    fn front_speed_is_subsonic(ratio in 0.0f64..1e6) {
        let b = speed_from_ratio(ratio);
        prop_assert!((0.0..1.0).contains(&b));
        prop_assert!(lambda_rhs(ratio) >= 1.0);
    }

    #[test]
    fn weighting_round_trip(h in -2.0f64..2.0, ht in -2.0f64..2.0, hr in -2.0f64..2.0,
                            t in 0.0f64..3.0, r in 0.0f64..2.9, alpha in 0.0f64..2.0) {
        let v = v_from_h(h, ht, hr, t, r, 3.0, alpha).unwrap();
        let (h2, ht2, hr2) = h_from_v(v, t, r, 3.0, alpha);
        prop_assert!((h - h2).abs() < 1e-12 && (ht - ht2).abs() < 1e-12 && (hr - hr2).abs() < 1e-12);
        let back = v_from_h(h2, ht2, hr2, t, r, 3.0, alpha).unwrap();
        let VState { v: a, .. } = back;
        prop_assert!((a - v.v).abs() < 1e-12);
    }

    #[test]
    fn fixed_map_round_trip(front in front_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let t = u * front.t_end();
        let r = v * front.rho(t).unwrap();
        let y = fixed_map(&front, t, r).unwrap();
        prop_assert!((0.0..=front.rho0() + 1e-12).contains(&y));
        prop_assert!((inverse_map(&front, t, y).unwrap() - r).abs() < 1e-12);
    }

    #[test]
    fn hermite_reproduces_nodes(ys in prop::collection::vec(-1.0f64..1.0, 3..12)) {
        let n = ys.len();
        let xs: Vec<f64> = (0..n).map(|k| k as f64 * 0.1).collect();
        let p = PiecewiseCubic::monotone(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert!((p.value(*x) - y).abs() < 1e-14);
        }
        // monotone data stays monotone between nodes
        let mut sorted = ys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = PiecewiseCubic::monotone(xs.clone(), sorted).unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 0..=200 {
            let v = q.value(xs[n - 1] * k as f64 / 200.0);
            prop_assert!(v >= last - 1e-14);
            last = v;
        }
    }

    #[test]
    fn toughness_stays_in_bounds(k0 in 0.05f64..2.0, k1 in 0.05f64..2.0, b in 1.2f64..2.5, u in 0.0f64..1.0) {
        let tough = Toughness::new(vec![(1.0, Profile::constant(k0)), (b, Profile::constant(k1))], 1.0, 3.0).unwrap();
        let (c1, c2) = tough.bounds();
        let r = 1.0 + u * 1.99;
        let k = tough.eval(r).unwrap();
        prop_assert!(k >= c1 && k <= c2);
        prop_assert_eq!(k, if r < b { k0 } else { k1 });
    }

    #[test]
    fn free_solution_meets_boundary_data(amp in 0.0f64..0.5, lo in 0.05f64..0.4, len in 0.2f64..0.5,
                                          front in front_strategy(), u in 0.0f64..1.0) {
        let data = ProblemData::new(3.0, 1.0, 0.7, 1.0, Profile::Zero,
            Profile::sine_bump(amp, lo, lo + len), Profile::Zero).unwrap();
        let hd = to_h_data(&data).unwrap();
        let t = u * front.t_end().min(1.0);
        prop_assert!(free_solution(&hd, &front, t, 0.0).unwrap().abs() < 1e-12);
        if t <= 0.5 {
            let rho = front.rho(t).unwrap();
            prop_assert!(free_solution(&hd, &front, t, rho).unwrap().abs() < 1e-12);
        }
    }
}
