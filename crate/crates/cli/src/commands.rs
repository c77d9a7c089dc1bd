use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gfmsim_core::analysis::{
    build_gc_closed_loop, build_gc_design_model, build_is_closed_loop, design_target,
    is_overshoot_free, MetricsReport,
};
use gfmsim_core::config::{Config, ConfigError};
use gfmsim_core::controllers::{linearize_controller, OperatingPoint, Strategy};
use gfmsim_core::sim::{
    run_comparison, run_parallel_sharing, run_scenario, solve_equilibrium, step_segment_metrics, Trace,
};
use gfmsim_core::tf::{Polynomial, TransferFunction};
use gfmsim_core::Error;

use crate::report::{self, Column};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::config(format!("cannot write `{}`: {e}", path.display())))
}

fn prepare(out_dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Failure::config(format!("cannot create `{}`: {e}", out_dir.display())))
}

fn with_suffix(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn write_trace(trace: &Trace, csv: &Path, precision: usize) -> Result<(), Failure> {
    write(csv, &trace.to_csv(precision))?;
    write(&with_suffix(csv, "", "dat"), &trace.to_dat(precision))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn simulate(config: &Path, out_dir: &Path) -> Result<(), Failure> {
    let cfg = Config::load(config)?;
    prepare(out_dir)?;
    let precision = cfg.output.precision;
    let trace_path = out_dir.join(&cfg.output.trace_path);
    let metrics_path = out_dir.join(&cfg.output.metrics_path);

    if cfg.scenario.is_some() {
        let sc = cfg.scenario()?;
        let opts = cfg.comparison_options();
        let trace = run_scenario(&sc)?;
        let m = step_segment_metrics(&sc, &trace, &opts)?;
        let rep = MetricsReport::new(sc.controller.strategy().as_str(), sc.mode.as_str(), &m, opts.rocof_limit);
        write_trace(&trace, &trace_path, precision)?;
        write(&metrics_path, &to_json(&rep))?;
        print!("{}", report::table(std::slice::from_ref(&rep), &Column::ALL));
        println!("trace:   {}", trace_path.display());
        println!("metrics: {}", metrics_path.display());
    }

    if cfg.parallel.is_some() {
        let ps = cfg.parallel_scenario()?;
        let (a, b, on) = run_parallel_sharing(&ps)?;
        let mut json = serde_json::json!({ "sharing": on });
        println!(
            "P1 = {:.3} W, P2 = {:.3} W, ratio {:.6} (expected {:.6}), max |theta1 - theta2| = {:.6e} rad",
            on.p1, on.p2, on.ratio, on.expected_ratio, on.max_theta_diff
        );
        if cfg.parallel.as_ref().is_some_and(|p| p.compare_compensation) {
            let (_, _, off) = run_parallel_sharing(&ps.without_compensation())?;
            println!("without compensation: max |theta1 - theta2| = {:.6e} rad", off.max_theta_diff);
            json["without_compensation"] = serde_json::to_value(off).expect("report serializes");
        }
        let (p1, p2) = (
            with_suffix(&trace_path, "_unit1", "csv"),
            with_suffix(&trace_path, "_unit2", "csv"),
        );
        write_trace(&a, &p1, precision)?;
        write_trace(&b, &p2, precision)?;
        let sharing_path = if cfg.scenario.is_some() {
            with_suffix(&metrics_path, "_sharing", "json")
        } else {
            metrics_path
        };
        write(&sharing_path, &to_json(&json))?;
        println!("traces:  {}, {}", p1.display(), p2.display());
        println!("metrics: {}", sharing_path.display());
    }
    Ok(())
}

pub fn compare(
    config: &Path,
    strategies: Option<&[String]>,
    metrics: Option<&[String]>,
    out_dir: &Path,
) -> Result<(), Failure> {
    let cfg = Config::load(config)?;
    let strategies: Vec<Strategy> = match strategies {
        Some(list) => list
            .iter()
            .map(|s| s.parse::<Strategy>().map_err(Failure::config))
            .collect::<Result<_, _>>()?,
        None => cfg.available_strategies(),
    };
    if strategies.is_empty() {
        return Err(Failure::config("no strategies selected"));
    }
    let columns: Vec<Column> = match metrics {
        Some(list) => list
            .iter()
            .map(|m| {
                Column::parse(m).ok_or_else(|| {
                    Failure::config(format!("unknown metric `{m}` (expected rise, settle, overshoot or rocof)"))
                })
            })
            .collect::<Result<_, _>>()?,
        None => vec![Column::Rise, Column::Settle, Column::Overshoot],
    };
    let scenarios = strategies
        .iter()
        .map(|&s| cfg.scenario_for(s))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = cfg.comparison_options();
    let rows = run_comparison(&scenarios, &opts)?;
    let reports: Vec<MetricsReport> = rows.iter().map(|r| r.report(opts.rocof_limit)).collect();

    prepare(out_dir)?;
    let path = out_dir.join(&cfg.output.metrics_path);
    write(&path, &to_json(&reports))?;
    print!("{}", report::table(&reports, &columns));
    println!("metrics: {}", path.display());
    Ok(())
}

fn describe(out: &mut String, title: &str, g: &TransferFunction) -> Result<(), Failure> {
    let poles = g.poles()?;
    let zeros = g.zeros()?;
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "  poles: {}", report::format_roots(&poles));
    let _ = writeln!(out, "  zeros: {}", report::format_roots(&zeros));
    let _ = writeln!(out, "  dc gain: {:.6}", g.dc_gain());
    let _ = writeln!(out, "  stable: {}", poles.iter().all(|p| p.re < 0.0));
    Ok(())
}

pub fn analyze(config: &Path, out_dir: &Path) -> Result<(), Failure> {
    let cfg = Config::load(config)?;
    let design = cfg.effective_design();
    if cfg.scenario.is_none() && design.is_none() {
        return Err(Failure::config("analyze needs a `scenario` or `design` block"));
    }
    let mut out = String::new();
    let mut curves: Vec<(String, TransferFunction)> = Vec::new();

    if cfg.scenario.is_some() {
        let sc = cfg.scenario()?;
        let eq = solve_equilibrium(&sc)?;
        let op = OperatingPoint {
            state: eq.state,
            p: eq.p,
            q: eq.q,
        };
        let lf = linearize_controller(&sc.controller, &op)?;
        let strategy = sc.controller.strategy();
        let gc = build_gc_closed_loop(&lf, &sc.plant)?;
        let is = build_is_closed_loop(&lf)?;
        let _ = writeln!(out, "strategy {strategy}, operating point P = {:.3} W", eq.p);
        let _ = writeln!(out, "  G_F = {}", lf.g_f);
        let _ = writeln!(out, "  G_L = {}", lf.g_l);
        let _ = writeln!(out, "  G_B = {}", lf.g_b);
        let _ = writeln!(out, "  frequency stiffness: {:.6} W/(rad/s)", lf.frequency_stiffness());
        describe(&mut out, "grid-connected dP/dP_ref", &gc)?;
        describe(&mut out, "islanded d_omega/dP_load", &is)?;
        curves.push((format!("{strategy}_gc"), gc));
        curves.push((format!("{strategy}_is"), is));
    }

    if let Some(dp) = design {
        let target = design_target(&dp)?;
        let poles = target.poles()?;
        let zeros = target.zeros()?;
        let real_negative = |r: &[gfmsim_core::tf::C64]| {
            r.iter().all(|p| p.re < 0.0 && p.im.abs() <= 1e-9 * p.norm())
        };
        let shape_ok = poles.len() >= 3 && real_negative(&poles) && zeros.len() == 1 && real_negative(&zeros);
        let _ = writeln!(out, "design target (1 + s t_z1) / prod(1 + s t_pk)");
        let _ = writeln!(out, "  poles ({}): {}", poles.len(), report::format_roots(&poles));
        let _ = writeln!(out, "  zero: {} (expected {:.6})", report::format_roots(&zeros), -1.0 / dp.t_z1);
        let _ = writeln!(
            out,
            "  three negative real poles + one negative real zero: {}",
            if shape_ok { "satisfied" } else { "NOT satisfied" }
        );
        let _ = writeln!(out, "  overshoot-free islanded response: {}", is_overshoot_free(&dp));
        let plant = match &cfg.scenario {
            Some(s) => s.plant,
            None => cfg
                .parallel
                .as_ref()
                .map(|p| p.plant)
                .unwrap_or_else(gfmsim_core::plant::PlantParams::nameplate),
        };
        let model = build_gc_design_model(&dp, &plant)?;
        let _ = writeln!(out, "grid-connected design model");
        let _ = writeln!(out, "  poles: {}", report::format_roots(&model.poles()?));
        let _ = writeln!(out, "  dc gain: {:.3}", model.dc_gain());
        let _ = writeln!(out, "  stable: {}", model.is_stable()?);
        let lead = TransferFunction::new(Polynomial::time_constant(dp.beta), Polynomial::one())?;
        let is_model = target.series(&lead).scale(-dp.gain());
        curves.push(("design_gc".into(), model));
        curves.push(("design_is".into(), is_model));
    }

    print!("{out}");
    prepare(out_dir)?;
    let path = out_dir.join(&cfg.output.response_path);
    let refs: Vec<(&str, &TransferFunction)> = curves.iter().map(|(n, g)| (n.as_str(), g)).collect();
    write(&path, &report::frequency_response(&refs, cfg.analysis.response_w_max, 200))?;
    println!("response: {}", path.display());
    Ok(())
}
