use serde::Serialize;

use super::engine::newton;
use super::scenario::{Event, EventKind, Trace};
use crate::controllers::{ControllerParams, ControllerState, Derivatives};
use crate::ode::Rk4;
use crate::plant::PlantParams;
use crate::{Error, Result};

/// One inverter on the shared islanded bus.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelUnit {
    pub controller: ControllerParams,
    /// Reactance between the unit and the bus, ohm.
    pub x_line: f64,
}

/// Two units feeding one load. The bus is linearized: unit `i` injects
/// `K_i (theta_i - theta_bus)` with `K_i = e0 v0 / x_i`, and the bus angle
/// balances the injections against the load at every instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelScenario {
    pub units: [ParallelUnit; 2],
    /// Shared `e0`, `v0`, `omega0` and base load.
    pub plant: PlantParams,
    /// Load steps; other event kinds are rejected.
    pub events: Vec<Event>,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharingReport {
    /// Final active power of each unit, W.
    pub p1: f64,
    pub p2: f64,
    pub ratio: f64,
    /// Ratio of the units' static frequency stiffness.
    pub expected_ratio: f64,
    /// Largest `|theta_1 - theta_2|` over the run, rad.
    pub max_theta_diff: f64,
}

/// Static power per rad/s of frequency deviation.
fn stiffness(c: &ControllerParams) -> f64 {
    match c {
        ControllerParams::Droop(p) => (1.0 + p.m * p.n) / p.kp_droop,
        ControllerParams::Udc(p) => (1.0 + p.m * p.n) / p.kp_droop + p.xi,
        ControllerParams::Vsg(p) => p.d + p.k_omega,
    }
}

impl ParallelScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be finite and > 0"));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::param("t_end", "must be finite and >= dt"));
        }
        self.plant.validate()?;
        for (i, u) in self.units.iter().enumerate() {
            u.controller.validate().map_err(|e| prefix(e, &format!("units[{i}].")))?;
            if !(u.x_line > 0.0 && u.x_line.is_finite()) {
                return Err(Error::param(format!("units[{i}].x_line"), "must be finite and > 0"));
            }
            for tau in u.controller.filter_time_constants() {
                if self.dt > tau / 10.0 {
                    return Err(Error::param("dt", format!("must be <= tau/10 = {} s", tau / 10.0)));
                }
            }
        }
        let (a, b) = (
            self.units[0].controller.nominal_omega(),
            self.units[1].controller.nominal_omega(),
        );
        if (a - b).abs() > 1e-12 * a {
            return Err(Error::param("units", "both units need the same nominal frequency"));
        }
        let mut last = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if e.kind != EventKind::LoadStep {
                return Err(Error::param(format!("events[{i}].kind"), "only load steps apply to the shared bus"));
            }
            if !(e.time >= last && e.time <= self.t_end) {
                return Err(Error::param(format!("events[{i}].time"), "must be sorted and within [0, t_end]"));
            }
            last = e.time;
        }
        Ok(())
    }

    /// Same scenario with the coupling compensation removed from both units.
    pub fn without_compensation(&self) -> Self {
        let mut out = self.clone();
        for u in &mut out.units {
            match &mut u.controller {
                ControllerParams::Droop(p) => {
                    p.m = 0.0;
                    p.n = 0.0;
                }
                ControllerParams::Udc(p) => {
                    p.m = 0.0;
                    p.n = 0.0;
                }
                ControllerParams::Vsg(_) => {}
            }
        }
        out
    }
}

fn prefix(e: Error, p: &str) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::InvalidParameter {
            field: format!("{p}{field}"),
            reason,
        },
        other => other,
    }
}

struct Bus<'a> {
    ps: &'a ParallelScenario,
    dims: [usize; 2],
    gains: [f64; 2],
    load: f64,
}

struct BusSample {
    d: [Derivatives; 2],
    p: [f64; 2],
}

impl Bus<'_> {
    fn split(&self, x: &[f64]) -> [ControllerState; 2] {
        let mut out = [0, 1].map(|i| {
            let c = &self.ps.units[i].controller;
            ControllerState::at_rest(c.nominal_omega(), c.v_ref())
        });
        let mut off = 0;
        for i in 0..2 {
            self.ps.units[i].controller.unpack(&x[off..off + self.dims[i]], &mut out[i]);
            off += self.dims[i];
        }
        out[0].theta = x[off];
        out[1].theta = x[off + 1];
        out
    }

    fn sample(&self, x: &[f64]) -> Result<BusSample> {
        let st = self.split(x);
        let k = self.gains;
        let theta_bus = (k[0] * st[0].theta + k[1] * st[1].theta - self.load) / (k[0] + k[1]);
        let p = [k[0] * (st[0].theta - theta_bus), k[1] * (st[1].theta - theta_bus)];
        let d0 = self.ps.units[0].controller.derivatives(&st[0], p[0], 0.0)?;
        let d1 = self.ps.units[1].controller.derivatives(&st[1], p[1], 0.0)?;
        Ok(BusSample { d: [d0, d1], p })
    }

    fn rates(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let s = self.sample(x)?;
        let mut off = 0;
        for i in 0..2 {
            self.ps.units[i]
                .controller
                .pack_rates(&s.d[i], &mut dx[off..off + self.dims[i]]);
            off += self.dims[i];
        }
        dx[off] = s.d[0].omega - self.ps.plant.omega0;
        dx[off + 1] = s.d[1].omega - self.ps.plant.omega0;
        Ok(())
    }
}

/// Simulates both units from the shared-bus equilibrium.
pub fn run_parallel_sharing(ps: &ParallelScenario) -> Result<(Trace, Trace, SharingReport)> {
    ps.validate()?;
    let dims = [ps.units[0].controller.dynamic_dim(), ps.units[1].controller.dynamic_dim()];
    let gains = [0, 1].map(|i| ps.plant.e0 * ps.plant.v0 / ps.units[i].x_line);
    let mut bus = Bus {
        ps,
        dims,
        gains,
        load: ps.plant.p_load,
    };
    let n = dims[0] + dims[1];
    let dim = n + 2;
    let pscale = ps
        .events
        .iter()
        .fold(ps.plant.p_load.max(1e3), |m, e| m.max(e.value.abs()));

    // unknowns: controller states and theta_1, with theta_2 pinned at zero
    let mut x0 = vec![0.0; dim];
    for i in 0..2 {
        let c = &ps.units[i].controller;
        let off = if i == 0 { 0 } else { dims[0] };
        c.pack(
            &ControllerState::at_rest(c.nominal_omega(), c.v_ref()),
            &mut x0[off..off + dims[i]],
        );
    }
    let f = |y: &[f64]| -> Result<Vec<f64>> {
        let mut x = y.to_vec();
        x.push(0.0);
        let mut dx = vec![0.0; dim];
        bus.rates(&x, &mut dx)?;
        let sync = dx[n] - dx[n + 1];
        dx.truncate(n);
        dx.push(sync);
        Ok(dx)
    };
    let mut steps: Vec<f64> = x0[..n].iter().map(|v| 1e-6 * v.abs().max(pscale)).collect();
    steps.push(1e-7);
    let (y, residual) = newton(&f, x0[..=n].to_vec(), &steps, 1.0 + pscale);
    if !(residual < 1e-9) {
        return Err(Error::UnstableEquilibrium { residual });
    }
    let mut x = y;
    x.push(0.0);

    let steps_n = (ps.t_end / ps.dt).round() as usize;
    let mut traces = [Trace::with_capacity(ps.dt, steps_n + 1), Trace::with_capacity(ps.dt, steps_n + 1)];
    let mut rk = Rk4::new(dim);
    let mut next = 0;
    let mut max_diff = 0.0f64;
    for k in 0..=steps_n {
        let t = k as f64 * ps.dt;
        while next < ps.events.len() && (ps.events[next].time / ps.dt).round() as usize <= k {
            bus.load += ps.events[next].value;
            next += 1;
        }
        let s = bus.sample(&x)?;
        let theta = [x[n], x[n + 1]];
        max_diff = max_diff.max((theta[0] - theta[1]).abs());
        for i in 0..2 {
            let tr = &mut traces[i];
            tr.t.push(t);
            tr.omega.push(s.d[i].omega);
            tr.freq.push(s.d[i].omega / (2.0 * std::f64::consts::PI));
            tr.v.push(s.d[i].v);
            tr.p.push(s.p[i]);
            tr.q.push(0.0);
            tr.theta.push(theta[i]);
            tr.p_ref_effective.push(ps.units[i].controller.p_ref());
            tr.p_load_effective.push(bus.load);
        }
        if k == steps_n {
            break;
        }
        rk.step(|_t, x: &[f64], dx: &mut [f64]| bus.rates(x, dx), t, &mut x, ps.dt)?;
        if let Some(i) = x.iter().position(|v| !v.is_finite() || v.abs() > 1e6 * pscale) {
            return Err(Error::NumericalBlowup {
                t: t + ps.dt,
                state: if i >= n { "theta" } else { "controller" },
            });
        }
    }

    let [a, b] = traces;
    let (p1, p2) = (*a.p.last().unwrap(), *b.p.last().unwrap());
    let report = SharingReport {
        p1,
        p2,
        ratio: p1 / p2,
        expected_ratio: stiffness(&ps.units[0].controller) / stiffness(&ps.units[1].controller),
        max_theta_diff: max_diff,
    };
    Ok((a, b, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::DroopParams;

    fn scenario(kp2_factor: f64) -> ParallelScenario {
        let base = DroopParams::default();
        let unit = |kp: f64| ParallelUnit {
            controller: ControllerParams::Droop(DroopParams { kp_droop: kp, ..base }),
            x_line: PlantParams::nameplate().x_line,
        };
        ParallelScenario {
            units: [unit(base.kp_droop), unit(base.kp_droop * kp2_factor)],
            plant: PlantParams::nameplate(),
            events: vec![Event {
                time: 0.2,
                kind: EventKind::LoadStep,
                value: 1000.0,
            }],
            t_end: 2.0,
            dt: 1e-4,
        }
    }

    #[test]
    fn identical_units_share_equally() {
        let (a, b, r) = run_parallel_sharing(&scenario(1.0)).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(r.p1, r.p2);
        assert!((r.p1 - 1000.0).abs() < 1e-3);
        assert_eq!(r.max_theta_diff, 0.0);
    }

    #[test]
    fn sharing_follows_droop_gains() {
        let (_, _, r) = run_parallel_sharing(&scenario(2.0)).unwrap();
        assert!((r.expected_ratio - 2.0).abs() < 1e-12);
        assert!((r.ratio - 2.0).abs() < 0.01 * 2.0, "{r:?}");
        assert!((r.p1 + r.p2 - 2000.0).abs() < 1e-6);
    }

    #[test]
    fn other_events_rejected() {
        let mut ps = scenario(1.0);
        ps.events[0].kind = EventKind::Island;
        assert!(ps.validate().is_err());
    }
}
