//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use gfmsim_core::analysis::{
    build_gc_design_model, build_is_closed_loop, design_target, is_overshoot_free, max_rocof,
    step_metrics, DesignParams, StepMetrics,
};
use gfmsim_core::config::{preset, Config};
use gfmsim_core::controllers::{
    linearize_controller, map_droop_to_vsg, ControllerParams, ControllerState, OperatingPoint,
    Strategy, UdcParams,
};
use gfmsim_core::ode::Rk4;
use gfmsim_core::plant::{power_flow, Mode, PlantParams};
use gfmsim_core::sim::{
    cross_validate_small_signal, run_comparison, run_parallel_sharing, run_scenario,
    solve_equilibrium, step_segment_metrics, Event, EventKind, Scenario,
};
use gfmsim_core::tf::{step_response, TransferFunction, C64};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn config(name: &str) -> Config {
    Config::from_json_str(preset(name).expect("bundled preset")).expect("preset validates")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_gc_ordering() -> Outcome {
    let start = Instant::now();
    let cfg = config("gc_compare.json");
    let scenarios: Vec<Scenario> = Strategy::ALL
        .iter()
        .map(|&s| cfg.scenario_for(s).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let rows = run_comparison(&scenarios, &cfg.comparison_options()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let get = |s: Strategy| rows.iter().find(|r| r.strategy == s).unwrap().metrics;
    let (d, v, u) = (get(Strategy::Droop), get(Strategy::Vsg), get(Strategy::Udc));
    let detail = format!(
        "overshoot udc {:.2}% < droop {:.2}% < vsg {:.2}%, settling udc {:.3} s < vsg {:.3} s, runtime {:.2} s",
        u.overshoot_pct, d.overshoot_pct, v.overshoot_pct, u.settling_time_2pct, v.settling_time_2pct, elapsed
    );
    check(
        u.overshoot_pct < d.overshoot_pct
            && d.overshoot_pct < v.overshoot_pct
            && u.settling_time_2pct < v.settling_time_2pct
            && u.overshoot_pct <= 5.0
            && elapsed < 10.0,
        detail,
    )
}

fn controller_rates(
    c: &ControllerParams,
    base: &ControllerState,
    p: f64,
    x: &[f64],
    dx: &mut [f64],
) -> gfmsim_core::Result<()> {
    let mut st = *base;
    c.unpack(x, &mut st);
    let d = c.derivatives(&st, p, 0.0)?;
    c.pack_rates(&d, dx);
    Ok(())
}

fn controller_omega(c: &ControllerParams, base: &ControllerState, x: &[f64], p: f64) -> f64 {
    let mut st = *base;
    c.unpack(x, &mut st);
    c.derivatives(&st, p, 0.0).expect("finite inputs").omega
}

/// Drives both controllers with the same measured power for 10 s at 1e-4
/// and returns `max |omega_udc - omega_vsg|`.
fn equivalence_gap(u: &UdcParams, levels: &[(f64, f64)], ripple: (f64, f64)) -> f64 {
    let cu = ControllerParams::Udc(*u);
    let cv = ControllerParams::Vsg(map_droop_to_vsg(u).expect("valid mapping"));
    let base = ControllerState::at_rest(u.omega0, u.v_ref);
    let power = |t: f64| {
        let step = levels.iter().rev().find(|(t0, _)| t >= *t0).map_or(0.0, |&(_, p)| p);
        step + ripple.0 * (ripple.1 * t).sin()
    };
    let mut xu = vec![0.0; cu.dynamic_dim()];
    let mut xv = vec![0.0; cv.dynamic_dim()];
    cu.pack(&base, &mut xu);
    cv.pack(&base, &mut xv);
    let (mut ru, mut rv) = (Rk4::new(xu.len()), Rk4::new(xv.len()));
    let dt = 1e-4;
    let mut worst = 0.0f64;
    for k in 0..100_000 {
        let t = k as f64 * dt;
        ru.step(|t, x: &[f64], dx: &mut [f64]| controller_rates(&cu, &base, power(t), x, dx), t, &mut xu, dt)
            .expect("udc integrates");
        rv.step(|t, x: &[f64], dx: &mut [f64]| controller_rates(&cv, &base, power(t), x, dx), t, &mut xv, dt)
            .expect("vsg integrates");
        let p = power(t + dt);
        worst = worst.max((controller_omega(&cu, &base, &xu, p) - controller_omega(&cv, &base, &xv, p)).abs());
    }
    worst
}

fn c2_droop_vsg_equivalence() -> Outcome {
    let start = Instant::now();
    let kp0 = PI / 12_000.0;
    let strategy = (
        0.5f64..1.5,
        0.01f64..0.1,
        0.0f64..200.0,
        prop::collection::vec((0.0f64..8.0, -1000.0f64..1000.0), 1..4),
        (0.0f64..200.0, 1.0f64..60.0),
    );
    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases: 24,
            failure_persistence: None,
            ..PropConfig::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let worst = std::cell::Cell::new(0.0f64);
    let result = runner.run(&strategy, |(kp_scale, tau, xi, mut levels, ripple)| {
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));
        let u = UdcParams {
            kp_droop: kp0 * kp_scale,
            tau,
            xi,
            m: 0.0,
            ..UdcParams::default()
        };
        let gap = equivalence_gap(&u, &levels, ripple) / u.omega0;
        worst.set(worst.get().max(gap));
        prop_assert!(gap < 1e-6, "relative gap {gap:e} for {u:?}");
        Ok(())
    });
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "max |d omega|/omega0 = {:.3e} over 24 random cases (limit 1e-6), runtime {elapsed:.2} s",
        worst.get()
    );
    match result {
        Ok(()) if elapsed < 5.0 => Ok(detail),
        Ok(()) => Err(detail),
        Err(e) => Err(format!("{detail}; {e}")),
    }
}

fn c3_small_signal_fidelity() -> Outcome {
    let cfg = config("gc_udc.json");
    let rated = cfg.ratings.reference_power_w;
    let mut sc = cfg.scenario().map_err(|e| e.to_string())?;
    sc.events = vec![Event {
        time: 1.0,
        kind: EventKind::ReferenceStep,
        value: 0.01 * rated,
    }];
    sc.t_end = 4.0;
    let dp = match &sc.controller {
        ControllerParams::Udc(u) => u.design_model().ok_or("gc_udc preset has no design")?,
        _ => return Err("gc_udc preset is not a udc scenario".into()),
    };
    let nonlinear = cross_validate_small_signal(&sc, Some(&dp), rated).map_err(|e| e.to_string())?;
    sc.plant.linearized = true;
    let linear = cross_validate_small_signal(&sc, Some(&dp), rated).map_err(|e| e.to_string())?;
    check(
        nonlinear.max_rel_deviation < 0.02 && linear.max_rel_deviation < 1e-6,
        format!(
            "1% step: nonlinear deviation {:.3e} (limit 2e-2), linearized plant {:.3e} (limit 1e-6)",
            nonlinear.max_rel_deviation, linear.max_rel_deviation
        ),
    )
}

fn c4_rocof_oracle() -> Outcome {
    let cfg = config("is_vsg_rocof.json");
    let sc = cfg.scenario().map_err(|e| e.to_string())?;
    let (j, omega0) = match &sc.controller {
        ControllerParams::Vsg(v) => (v.j, v.omega0),
        _ => return Err("is_vsg_rocof preset is not a vsg scenario".into()),
    };
    let step = sc
        .events
        .iter()
        .find(|e| e.kind == EventKind::LoadStep)
        .ok_or("preset has no load step")?;
    let trace = run_scenario(&sc).map_err(|e| e.to_string())?;
    let k0 = sc.event_step(step);
    let measured = max_rocof(&trace.freq[k0..], sc.dt, 0.1);
    let oracle = step.value / (j * omega0) / (2.0 * PI);
    check(
        rel(measured, oracle) < 0.05 && (oracle - 0.151).abs() < 5e-4,
        format!(
            "J = {j}, 1 kW step: max ROCOF {measured:.5} Hz/s vs oracle {oracle:.5} Hz/s ({:.2}%)",
            100.0 * rel(measured, oracle)
        ),
    )
}

fn sample_design(rng: &mut ChaCha8Rng) -> DesignParams {
    let t_p1 = rng.gen_range(0.02..0.2);
    let t_p2 = rng.gen_range(0.005..0.6 * t_p1);
    let t_p3 = rng.gen_range(0.0011..0.6 * t_p2);
    let t_z1 = rng.gen_range(0.05 * t_p1..t_p1);
    let beta = rng.gen_range(0.0..t_p2);
    DesignParams::new(t_z1, t_p1, t_p2, t_p3, beta)
}

fn negative_real(p: &C64) -> bool {
    p.re < 0.0 && p.im.abs() <= 1e-9 * p.re.abs()
}

fn c5_design_guarantees() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let plant = PlantParams {
        p_load: 1000.0,
        ..PlantParams::nameplate()
    };
    let mut worst_dc = 0.0f64;
    let mut worst_rise = 0.0f64;
    for case in 0..100 {
        let dp = sample_design(&mut rng);
        if dp.validate().is_err() || !is_overshoot_free(&dp) {
            return Err(format!("case {case}: sampler produced {dp:?}"));
        }
        let target_poles = design_target(&dp).and_then(|t| t.poles()).map_err(|e| e.to_string())?;
        if target_poles.len() != 3 || !target_poles.iter().all(negative_real) {
            return Err(format!("case {case}: target poles {target_poles:?}"));
        }

        let udc = UdcParams {
            xi: 0.0,
            design: Some(dp),
            ..UdcParams::default()
        };
        let step_at = 0.2;
        let sc = Scenario {
            mode: Mode::Is,
            controller: ControllerParams::Udc(udc),
            plant,
            events: vec![Event {
                time: step_at,
                kind: EventKind::LoadStep,
                value: 1000.0,
            }],
            t_end: step_at + 12.0 * dp.t_p1,
            dt: 1e-4,
        };
        let eq = solve_equilibrium(&sc).map_err(|e| e.to_string())?;
        let op = OperatingPoint {
            state: eq.state,
            p: eq.p,
            q: eq.q,
        };
        let lf = linearize_controller(&sc.controller, &op).map_err(|e| e.to_string())?;
        let is_poles = build_is_closed_loop(&lf).and_then(|t| t.poles()).map_err(|e| e.to_string())?;
        if is_poles.len() != 3 || !is_poles.iter().all(negative_real) {
            return Err(format!("case {case}: islanded loop poles {is_poles:?}"));
        }

        let trace = run_scenario(&sc).map_err(|e| e.to_string())?;
        let f = &trace.freq[sc.event_step(&sc.events[0])..];
        let drop = f[0] - f[f.len() - 1];
        let noise = 1e-9 * drop.abs();
        if let Some(k) = f.windows(2).position(|w| w[1] - w[0] > noise) {
            return Err(format!("case {case}: frequency rises at sample {k} for {dp:?}"));
        }
        worst_rise = worst_rise.max(f.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max) / drop);

        let dc = build_gc_design_model(&dp, &PlantParams::nameplate())
            .map_err(|e| e.to_string())?
            .dc_gain();
        worst_dc = worst_dc.max((dc - 1.0).abs());
    }
    check(
        worst_dc <= 1e-9,
        format!(
            "100 designs: all target and islanded poles negative real, traces monotone (largest upward step {worst_rise:.1e} of the drop), max |dc gain - 1| = {worst_dc:.1e}"
        ),
    )
}

fn first_order(tau: f64, t: f64) -> f64 {
    1.0 - (-t / tau).exp()
}

fn second_order(zeta: f64, wn: f64, t: f64) -> f64 {
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    1.0 - (-zeta * wn * t).exp() * ((wd * t).cos() + zeta * wn / wd * (wd * t).sin())
}

fn c6_metric_oracles() -> Outcome {
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for tau in [0.1, 1.0, 10.0] {
        let dt = tau / 1000.0;
        let analytic: Vec<f64> = (0..=20_000).map(|k| first_order(tau, k as f64 * dt)).collect();
        let tf = TransferFunction::first_order_lag(1.0, tau).map_err(|e| e.to_string())?;
        let simulated = step_response(&tf, 20.0 * tau, dt).map_err(|e| e.to_string())?;
        for series in [&analytic, &simulated] {
            let m = step_metrics(series, dt, 1.0).map_err(|e| e.to_string())?;
            let e = rel(m.rise_time_10_90, 9f64.ln() * tau).max(rel(m.settling_time_2pct, 50f64.ln() * tau));
            worst = worst.max(e);
        }

        for zeta in [0.3, 0.5, 0.7] {
            let wn = 1.0 / tau;
            let dt = tau / 500.0;
            let n = (16.0 / (zeta * wn * dt)).ceil() as usize;
            let analytic: Vec<f64> = (0..=n).map(|k| second_order(zeta, wn, k as f64 * dt)).collect();
            let tf = TransferFunction::from_coeffs(&[wn * wn], &[wn * wn, 2.0 * zeta * wn, 1.0])
                .map_err(|e| e.to_string())?;
            let simulated = step_response(&tf, n as f64 * dt, dt).map_err(|e| e.to_string())?;
            let want = 100.0 * (-PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
            for series in [&analytic, &simulated] {
                let m: StepMetrics = step_metrics(series, dt, 1.0).map_err(|e| e.to_string())?;
                let e = rel(m.overshoot_pct, want);
                if e >= 0.005 {
                    lines.push(format!("tau {tau} zeta {zeta}: {:.4}% vs {want:.4}%", m.overshoot_pct));
                }
                worst = worst.max(e);
            }
        }
    }
    check(
        worst < 0.005 && lines.is_empty(),
        format!(
            "worst relative error {worst:.2e} over 3 first-order and 9 second-order cases, analytic and simulated{}",
            lines.iter().map(|l| format!("; {l}")).collect::<String>()
        ),
    )
}

fn c7_power_flow() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for theta in [-1.2, -0.35, 0.02, 0.5, 1.4] {
        for e in [200.0, 350.0, 380.0, 400.0, 650.0] {
            for v in [220.0, 380.0] {
                for x in [0.05, 0.942_477_796] {
                    let ee = C64::from_polar(e, theta);
                    let s = ee * ((ee - C64::new(v, 0.0)) / C64::new(0.0, x)).conj();
                    let (p, q) = power_flow(e, v, theta, x);
                    let err = (C64::new(p, q) - s).norm() / s.norm();
                    worst = worst.max(err);
                    count += 1;
                }
            }
        }
    }
    check(worst < 1e-9, format!("{count}-point grid: max relative error {worst:.2e}"))
}

fn c8_parallel_sharing() -> Outcome {
    let cfg = config("is_parallel.json");
    let ps = cfg.parallel_scenario().map_err(|e| e.to_string())?;
    let kp = |c: &ControllerParams| match c {
        ControllerParams::Droop(d) => Ok(d.kp_droop),
        ControllerParams::Udc(u) => Ok(u.kp_droop),
        ControllerParams::Vsg(_) => Err("parallel preset units must be droop or udc".to_string()),
    };
    let expected = kp(&ps.units[1].controller)? / kp(&ps.units[0].controller)?;
    let (_, _, with) = run_parallel_sharing(&ps).map_err(|e| e.to_string())?;
    let (_, _, without) = run_parallel_sharing(&ps.without_compensation()).map_err(|e| e.to_string())?;
    let ratio = with.p1 / with.p2;
    check(
        rel(ratio, expected) < 0.01 && with.max_theta_diff <= without.max_theta_diff,
        format!(
            "P1/P2 = {ratio:.5} vs {expected:.5}; max |theta1 - theta2| {:.4e} rad compensated vs {:.4e} rad uncompensated",
            with.max_theta_diff, without.max_theta_diff
        ),
    )
}

fn metric_values(m: &StepMetrics) -> [(&'static str, f64); 5] {
    [
        ("rise", m.rise_time_10_90),
        ("settling", m.settling_time_2pct),
        ("overshoot", m.overshoot_pct),
        ("steady_state", m.steady_state),
        ("rocof", m.max_rocof.unwrap_or(0.0)),
    ]
}

fn c9_numerical_hygiene() -> Outcome {
    let mut worst = (0.0f64, String::new());
    for name in ["gc_compare.json", "is_compare.json"] {
        let cfg = config(name);
        let opts = cfg.comparison_options();
        for s in cfg.available_strategies() {
            let sc = cfg.scenario_for(s).map_err(|e| e.to_string())?;
            let half = Scenario { dt: sc.dt / 2.0, ..sc.clone() };
            let mut pair = Vec::new();
            for run in [&sc, &half] {
                let trace = run_scenario(run).map_err(|e| e.to_string())?;
                pair.push(step_segment_metrics(run, &trace, &opts).map_err(|e| e.to_string())?);
            }
            for ((label, a), (_, b)) in metric_values(&pair[0]).into_iter().zip(metric_values(&pair[1])) {
                let scale = a.abs().max(b.abs());
                let change = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
                if change >= worst.0 {
                    worst = (change, format!("{name} {} {label}", s.as_str()));
                }
            }
        }
    }

    let sc = config("gc_udc.json").scenario().map_err(|e| e.to_string())?;
    let a = run_scenario(&sc).map_err(|e| e.to_string())?.to_csv(9);
    let b = run_scenario(&sc).map_err(|e| e.to_string())?.to_csv(9);
    let identical = a == b;
    check(
        worst.0 < 0.005 && identical,
        format!(
            "largest metric change on halving dt {:.3e} ({}), repeated CSV identical: {identical}",
            worst.0, worst.1
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("gc overshoot/settling ordering", c1_gc_ordering),
        ("udc vs mapped vsg equivalence", c2_droop_vsg_equivalence),
        ("small-signal fidelity", c3_small_signal_fidelity),
        ("rocof oracle", c4_rocof_oracle),
        ("design-form guarantees", c5_design_guarantees),
        ("step-metric oracles", c6_metric_oracles),
        ("power-flow brute force", c7_power_flow),
        ("parallel sharing", c8_parallel_sharing),
        ("numerical hygiene", c9_numerical_hygiene),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
