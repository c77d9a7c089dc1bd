use nalgebra::{DMatrix, DVector};

use super::scenario::{EventKind, Scenario, Trace};
use crate::controllers::{ControllerParams, ControllerState, Derivatives};
use crate::ode::Rk4;
use crate::plant::{Mode, PlantParams};
use crate::{Error, Result};

/// Pre-event operating point of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub state: ControllerState,
    pub p: f64,
    pub q: f64,
    /// Scaled residual reached by the solver.
    pub residual: f64,
}

/// Controller and plant under fixed inputs for the duration of one step.
pub(crate) struct Model<'a> {
    pub ctrl: ControllerParams,
    pub plant: &'a PlantParams,
    pub mode: Mode,
    pub load: f64,
    pub n: usize,
}

pub(crate) struct Sample {
    pub d: Derivatives,
    pub p: f64,
    pub q: f64,
}

impl<'a> Model<'a> {
    pub fn new(ctrl: ControllerParams, plant: &'a PlantParams, mode: Mode, load: f64) -> Self {
        let n = ctrl.dynamic_dim();
        Self {
            ctrl,
            plant,
            mode,
            load,
            n,
        }
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn controller_state(&self, x: &[f64]) -> ControllerState {
        let mut st = ControllerState::at_rest(self.ctrl.nominal_omega(), self.ctrl.v_ref());
        self.ctrl.unpack(&x[..self.n], &mut st);
        st.theta = x[self.n];
        st
    }

    pub fn sample(&self, x: &[f64]) -> Result<Sample> {
        let st = self.controller_state(x);
        match self.mode {
            Mode::Is => {
                let (p, q) = (self.load, self.plant.q_load);
                let d = self.ctrl.derivatives(&st, p, q)?;
                Ok(Sample { d, p, q })
            }
            Mode::Gc => {
                // outputs depend on the measured power only through filter
                // states; a couple of passes settle any direct term
                let mut d = self.ctrl.derivatives(&st, 0.0, 0.0)?;
                let (mut p, mut q) = self.plant.transfer(d.v, st.theta);
                for _ in 0..4 {
                    let next = self.ctrl.derivatives(&st, p, q)?;
                    let settled = next.v == d.v && next.omega == d.omega;
                    d = next;
                    (p, q) = self.plant.transfer(d.v, st.theta);
                    if settled {
                        break;
                    }
                }
                let d = self.ctrl.derivatives(&st, p, q)?;
                Ok(Sample { d, p, q })
            }
        }
    }

    pub fn rates(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let s = self.sample(x)?;
        self.ctrl.pack_rates(&s.d, &mut dx[..self.n]);
        dx[self.n] = s.d.omega - self.plant.omega0;
        Ok(())
    }
}

pub(crate) fn power_scale(sc: &Scenario) -> f64 {
    let mut s = sc.controller.p_ref().abs().max(sc.plant.p_load).max(1e3);
    for e in &sc.events {
        s = s.max(e.value.abs());
    }
    s
}

/// Damped Newton iteration on `f(x) = 0` with a central-difference Jacobian.
/// Returns the solution and its scaled residual.
pub(crate) fn newton(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    mut x: Vec<f64>,
    steps: &[f64],
    residual_scale: f64,
) -> (Vec<f64>, f64) {
    let measure = |x: &[f64]| -> f64 {
        match f(x) {
            Ok(r) if r.iter().all(|v| v.is_finite()) => {
                r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / residual_scale
            }
            _ => f64::INFINITY,
        }
    };
    let n = x.len();
    let mut res = measure(&x);
    for _ in 0..60 {
        if res < 1e-14 {
            break;
        }
        let Ok(r) = f(&x) else { break };
        let mut jac = DMatrix::zeros(n, n);
        let mut ok = true;
        for j in 0..n {
            let h = steps[j].max(1e-9 * x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            match (f(&xp), f(&xm)) {
                (Ok(rp), Ok(rm)) => {
                    for i in 0..n {
                        jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                    }
                }
                _ => ok = false,
            }
        }
        if !ok {
            break;
        }
        let Some(delta) = jac.lu().solve(&DVector::from_vec(r.iter().map(|v| -v).collect())) else {
            break;
        };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-8 {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
            let r_trial = measure(&trial);
            if r_trial < res {
                x = trial;
                res = r_trial;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, res)
}

fn initial_guess(model: &Model<'_>, p_target: f64) -> Vec<f64> {
    let mut x = vec![0.0; model.dim()];
    let st = ControllerState::at_rest(model.ctrl.nominal_omega(), model.ctrl.v_ref());
    model.ctrl.pack(&st, &mut x[..model.n]);
    if model.mode == Mode::Gc {
        let pl = model.plant;
        let s = (p_target * pl.x_line / (pl.e0 * pl.v0)).clamp(-0.9, 0.9);
        x[model.n] = s.asin();
    }
    x
}

fn solve_model(model: &Model<'_>, pscale: f64, p_target: f64) -> Result<(Vec<f64>, f64)> {
    let n = model.n;
    let x0 = initial_guess(model, p_target);
    let mut steps: Vec<f64> = x0[..n].iter().map(|v| 1e-6 * v.abs().max(pscale)).collect();
    steps.push(1e-7);
    let theta_fixed = x0[n];
    let (x, residual) = match model.mode {
        Mode::Gc => {
            let f = |x: &[f64]| -> Result<Vec<f64>> {
                let mut dx = vec![0.0; n + 1];
                model.rates(x, &mut dx)?;
                Ok(dx)
            };
            newton(&f, x0, &steps, 1.0 + pscale)
        }
        Mode::Is => {
            // the angle drifts freely in the islanded bus; solve the rest
            let f = |y: &[f64]| -> Result<Vec<f64>> {
                let mut x = y.to_vec();
                x.push(theta_fixed);
                let mut dx = vec![0.0; n + 1];
                model.rates(&x, &mut dx)?;
                dx.truncate(n);
                Ok(dx)
            };
            let (mut y, r) = newton(&f, x0[..n].to_vec(), &steps[..n], 1.0 + pscale);
            y.push(theta_fixed);
            (y, r)
        }
    };
    if !(residual < 1e-9) {
        return Err(Error::UnstableEquilibrium { residual });
    }
    Ok((x, residual))
}

/// Operating point before any event fires.
pub fn solve_equilibrium(sc: &Scenario) -> Result<Equilibrium> {
    sc.validate()?;
    let model = Model::new(sc.controller.clone(), &sc.plant, sc.mode, sc.plant.p_load);
    let (x, residual) = solve_model(&model, power_scale(sc), sc.controller.p_ref())?;
    let s = model.sample(&x)?;
    let mut state = model.controller_state(&x);
    state.omega = s.d.omega;
    state.v = s.d.v;
    Ok(Equilibrium {
        state,
        p: s.p,
        q: s.q,
        residual,
    })
}

pub(crate) fn state_label(model: &Model<'_>, i: usize) -> &'static str {
    if i == model.n {
        "theta"
    } else {
        match model.ctrl {
            ControllerParams::Vsg(_) if i == 0 => "omega",
            _ if i == model.n - 1 => "filter_q",
            _ => "filter_p",
        }
    }
}

pub(crate) fn check_blowup(model: &Model<'_>, x: &[f64], t: f64, pscale: f64) -> Result<()> {
    for (i, &v) in x.iter().enumerate() {
        let nominal = if i == model.n {
            std::f64::consts::PI
        } else if matches!(model.ctrl, ControllerParams::Vsg(_)) && i == 0 {
            model.ctrl.nominal_omega()
        } else {
            pscale
        };
        if !v.is_finite() || v.abs() > 1e6 * nominal {
            return Err(Error::NumericalBlowup {
                t,
                state: state_label(model, i),
            });
        }
    }
    Ok(())
}

/// Integrates a scenario from its pre-event equilibrium with fixed-step RK4.
pub fn run_scenario(sc: &Scenario) -> Result<Trace> {
    sc.validate()?;
    let pscale = power_scale(sc);
    let mut model = Model::new(sc.controller.clone(), &sc.plant, sc.mode, sc.plant.p_load);
    let (mut x, _) = solve_model(&model, pscale, sc.controller.p_ref())?;

    let steps = sc.steps();
    let mut trace = Trace::with_capacity(sc.dt, steps + 1);
    let mut rk = Rk4::new(model.dim());
    let mut next_event = 0;
    for k in 0..=steps {
        let t = k as f64 * sc.dt;
        while next_event < sc.events.len() && sc.event_step(&sc.events[next_event]) <= k {
            let e = sc.events[next_event];
            match e.kind {
                EventKind::ReferenceStep => {
                    let p_ref = model.ctrl.p_ref() + e.value;
                    model.ctrl.set_p_ref(p_ref);
                }
                EventKind::LoadStep => model.load += e.value,
                EventKind::Island => model.mode = Mode::Is,
                EventKind::Reconnect => model.mode = Mode::Gc,
            }
            next_event += 1;
        }

        let s = model.sample(&x)?;
        trace.t.push(t);
        trace.omega.push(s.d.omega);
        trace.freq.push(s.d.omega / (2.0 * std::f64::consts::PI));
        trace.v.push(s.d.v);
        trace.p.push(s.p);
        trace.q.push(s.q);
        trace.theta.push(x[model.n]);
        trace.p_ref_effective.push(model.ctrl.p_ref());
        trace.p_load_effective.push(model.load);
        if k == steps {
            break;
        }

        rk.step(|_t, x: &[f64], dx: &mut [f64]| model.rates(x, dx), t, &mut x, sc.dt)?;
        check_blowup(&model, &x, t + sc.dt, pscale)?;
    }
    Ok(trace)
}
