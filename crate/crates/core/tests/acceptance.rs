mod common;

use std::process::ExitCode;

use common::*;
use debond::energy_audit::{audit, energy_rate, err_gbeta, AuditOptions, EnergyLedger, FrontSpeed};
use debond::fields::{ProblemData, Toughness};
use debond::griffith::{run, GriffithRun, StopReason};
use debond::oracle::{discrepancy_l2, solve_reference};
use debond::prescribed::{march, WindowProblem};
use debond::profile::Profile;
use debond::quadrature::CharLattice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn coupled_audit(data: &ProblemData, tough: &Toughness, horizon: f64, dt: f64) -> Result<(GriffithRun, EnergyLedger), String> {
    let g = run(data, tough, horizon, &coupled(dt)).map_err(fail)?;
    let l = audit(&g.patches, &g.front, Some(tough), &AuditOptions::default()).map_err(fail)?;
    Ok((g, l))
}

fn random_field(base: &CharLattice, rng: &mut ChaCha8Rng) -> CharLattice {
    let mut h = base.zeros_like();
    for i in 0..h.rows() {
        for j in 0..=h.last_inside(i) {
            h.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    h
}

fn contraction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_ratio: f64 = 0.0;
    let mut windows = 0;
    for alpha in [0.0, 1.0] {
        for (name, front) in fronts(1.0) {
            let sol = march(&bump(alpha, 1.0), &front, 1.0, &solver(1.0 / 32.0)).map_err(fail)?;
            for p in &sol.patches {
                windows += 1;
                let d = &p.diagnostics;
                if !(d.final_change < 1e-10 && d.iterations <= d.iteration_bound + 2) {
                    return Err(format!("{name} alpha={alpha}: {} iterations, bound {}", d.iterations, d.iteration_bound));
                }
                let prob = WindowProblem::new(p.plan, p.data.clone(), p.front.clone(), p.dt()).map_err(fail)?;
                for _ in 0..20 {
                    let a = random_field(&p.h, &mut rng);
                    let b = random_field(&p.h, &mut rng);
                    let q = prob.apply_l(&a).sup_diff(&prob.apply_l(&b)) / a.sup_diff(&b);
                    worst_ratio = worst_ratio.max(q / p.plan.contraction_bound);
                }
            }
        }
    }
    ensure(
        worst_ratio <= 1.0,
        format!("{windows} windows, worst measured/bound = {worst_ratio:.3}"),
    )
}

fn representation() -> Check {
    let sol = march(&loaded_bump(1.0, 0.5), &linear_front(0.5), 0.5, &solver(1.0 / 256.0)).map_err(fail)?;
    let mut worst: f64 = 0.0;
    for p in &sol.patches {
        worst = worst.max(p.representation_residual().map_err(fail)?);
    }
    ensure(worst <= 1e-9, format!("max nodewise residual {worst:.2e} at dt = 1/256"))
}

fn oracle() -> Check {
    let data = bump(1.0, 1.0);
    let front = static_front(1.0);
    let mut errs = Vec::new();
    for n in [16.0, 32.0, 64.0, 128.0] {
        let dt = 1.0 / n;
        let sol = march(&data, &front, 1.0, &solver(dt)).map_err(fail)?;
        let hist = solve_reference(&data, &front, 1.0, dt, dt / 2.0).map_err(fail)?;
        errs.push(discrepancy_l2(&hist, &sol).map_err(fail)?);
    }
    let order = fitted_order(&errs);
    let finest = errs[3];
    ensure(
        order >= 1.0 && finest <= 1e-3 && errs.windows(2).all(|w| w[1] < w[0]),
        format!("discrepancies {}, order {order:.2}", sci(&errs)),
    )
}

fn supercritical() -> (ProblemData, Toughness, f64) {
    let k = 0.1;
    let data = opening(1.0, 0.0, 1.0);
    (data, kappa(k), k)
}

fn energy_balance() -> Check {
    let (data, tough, k) = supercritical();
    let jump = data.v0.derivative(RHO0) - data.v1.value(RHO0);
    if jump * jump <= 2.0 * (OUTER - RHO0) * k {
        return Err("scenario is not supercritical".into());
    }
    let mut res = Vec::new();
    for n in [32.0, 64.0, 128.0] {
        let (g, l) = coupled_audit(&data, &tough, 1.0, 1.0 / n)?;
        if g.front.rho(1.0).map_err(fail)? <= RHO0 {
            return Err("front did not move".into());
        }
        res.push(l.max_relative_edp());
    }
    ensure(
        res[0] <= 1e-2 && res.windows(2).all(|w| w[1] < w[0]),
        format!("max relative EDP residual {}", sci(&res)),
    )
}

fn kkt() -> Check {
    let (data, tough, k) = supercritical();
    let (_, l) = coupled_audit(&data, &tough, 1.0, 1.0 / 32.0)?;
    let tol = 1e-3 * k;
    let mut worst: f64 = 0.0;
    let mut ode: f64 = 0.0;
    for i in 0..l.len() {
        let b = l.rho_dot[i];
        if !(0.0..1.0).contains(&b) {
            return Err(format!("speed {b} at t = {}", l.times[i]));
        }
        if i + 1 == l.len() {
            continue;
        }
        if l.g_beta[i] > k + tol {
            return Err(format!("G = {} above toughness at t = {}", l.g_beta[i], l.times[i]));
        }
        worst = worst.max(((l.g_beta[i] - k) * b).abs());
        let g0 = l.g0[i];
        ode = ode.max((b - ((g0 - k) / (g0 + k)).max(0.0)).abs());
    }
    ensure(
        worst <= tol && ode <= 1e-3,
        format!("complementarity {worst:.2e}, flow rule mismatch {ode:.2e}"),
    )
}

fn release_rate() -> Check {
    let mut algebraic: f64 = 0.0;
    for k in 0..=100 {
        let g0 = 0.1 * k as f64;
        let mut last = f64::INFINITY;
        for m in 0..1000 {
            let b = m as f64 / 1000.0;
            let g = err_gbeta(g0, FrontSpeed::new(b).map_err(fail)?);
            if g0 > 0.0 {
                algebraic = algebraic.max((g / g0 - (1.0 - b) / (1.0 + b)).abs());
                if g >= last {
                    return Err(format!("not decreasing at beta = {b}"));
                }
            }
            last = g;
        }
    }
    let near = err_gbeta(1.0, FrontSpeed::new(1.0 - 1e-12).map_err(fail)?);
    let (data, tough, _) = supercritical();
    let (_, l) = coupled_audit(&data, &tough, 1.0, 1.0 / 64.0)?;
    let mut two_path: f64 = 0.0;
    for i in 0..l.len() - 1 {
        if l.g_quotient[i].is_finite() {
            two_path = two_path.max((l.g_quotient[i] - l.g_beta[i]).abs() / l.g_beta[i].abs().max(1e-12));
        }
    }
    ensure(
        algebraic <= 1e-14 && near < 1e-11 && two_path <= 1e-3,
        format!("ratio error {algebraic:.1e}, G near sonic {near:.1e}, two-path {two_path:.2e}"),
    )
}

fn rate_formula() -> Check {
    let data = loaded_bump(1.0, 0.6);
    let front = linear_front(0.6);
    let mut forms: f64 = 0.0;
    let mut errs = Vec::new();
    for n in [32.0, 64.0, 128.0] {
        let sol = march(&data, &front, 0.6, &solver(1.0 / n)).map_err(fail)?;
        for p in &sol.patches {
            for i in 0..p.h.rows() {
                let r = energy_rate(p, p.h.t(i)).map_err(fail)?;
                forms = forms.max((r.closed_form - r.trace_form).abs() / r.closed_form.abs().max(1.0));
            }
        }
        let l = audit(&sol.patches, &front, None, &AuditOptions::default()).map_err(fail)?;
        let e: f64 = (1..l.len() - 1)
            .map(|i| (l.energy_rate[i] - l.energy_rate_fd[i]).abs() * (l.times[i + 1] - l.times[i]))
            .sum();
        errs.push(e);
    }
    let order = fitted_order(&errs);
    ensure(
        forms <= 1e-10 && order >= 1.0,
        format!("form mismatch {forms:.1e}, difference mismatch {}, order {order:.2}", sci(&errs)),
    )
}

fn degenerate() -> Check {
    let zero = ProblemData::new(OUTER, RHO0, 1.0, 1.0, Profile::Zero, Profile::Zero, Profile::Zero).map_err(fail)?;
    let (g, l) = coupled_audit(&zero, &kappa(0.1), 1.0, 1.0 / 32.0)?;
    let field_zero = g.patches.iter().all(|p| p.h.sup_norm() == 0.0);
    let energies_zero = [&l.internal, &l.friction, &l.work, &l.debond].iter().all(|v| v.iter().all(|x| *x == 0.0));
    let frozen = l.rho.iter().all(|r| *r == RHO0);
    if !(field_zero && energies_zero && frozen) {
        return Err("zero data left a trace".into());
    }
    let (g, l) = coupled_audit(&loaded_bump(1.0, 1.0), &kappa(1e6), 1.0, 1.0 / 32.0)?;
    let tough_frozen = g.stop_reason == StopReason::Horizon && l.rho.iter().all(|r| *r == RHO0);
    let edp = l.max_relative_edp();
    let (_, l) = coupled_audit(&opening(1.0, 0.0, 1.0), &kappa(0.1), 1.0, 1.0 / 32.0)?;
    let no_friction = l.friction.iter().all(|x| *x == 0.0);
    ensure(
        tough_frozen && edp <= 1e-2 && no_friction,
        format!("zero data inert, stiff glue EDP {edp:.2e}, undamped friction identically 0: {no_friction}"),
    )
}

fn full_debond() -> Check {
    let dt = 1.0 / 32.0;
    let g = run(&opening(1.0, 0.0, 5.0), &kappa(0.05), 5.0, &coupled(dt)).map_err(fail)?;
    let rho = g.front.rho(g.t_star).map_err(fail)?;
    ensure(
        g.stop_reason == StopReason::FullyDebonded && rho >= OUTER - 2.0 * dt,
        format!("stop {:?} at t* = {:.4}, width {rho:.4}", g.stop_reason, g.t_star),
    )
}

fn main() -> ExitCode {
    let checks: [Criterion; 9] = [
        ("contraction certificate", contraction),
        ("representation residual", representation),
        ("oracle equivalence", oracle),
        ("energy-dissipation balance", energy_balance),
        ("Griffith KKT", kkt),
        ("release rate structure", release_rate),
        ("energy-rate formula", rate_formula),
        ("degenerate suites", degenerate),
        ("full debonding stop", full_debond),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
