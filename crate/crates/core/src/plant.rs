//! Phasor-level network model.
//!
//! The inverter is an ideal EMF `E` behind a purely reactive line `X`
//! feeding a bus of magnitude `V`. In grid-connected mode the bus is an
//! infinite bus rotating at the nominal frequency; in islanded mode the
//! inverter alone serves the local load.

use serde::{Deserialize, Serialize};

use crate::tf::TransferFunction;
use crate::{Error, Result};

/// Operating mode of the point of common coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Grid connected: Switch 1 closed.
    Gc,
    /// Islanded: Switch 1 open, load served by the inverter.
    Is,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Gc => "gc",
            Mode::Is => "is",
        }
    }
}

fn default_false() -> bool {
    false
}

/// Line and bus parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// Line reactance X, ohm.
    pub x_line: f64,
    /// Inverter EMF magnitude at the operating point, V.
    pub e0: f64,
    /// Grid (or bus) voltage magnitude, V.
    pub v0: f64,
    /// Nominal angular frequency of the grid, rad/s.
    pub omega0: f64,
    /// Base load at the PCC, W. Served by the inverter in islanded mode.
    #[serde(default)]
    pub p_load: f64,
    /// Base reactive load at the PCC, var.
    #[serde(default)]
    pub q_load: f64,
    /// Replace `sin(theta)` by `theta` and hold `E = e0`, `Q = 0`.
    #[serde(default = "default_false")]
    pub linearized: bool,
}

impl PlantParams {
    /// Nameplate system: 380 V on both sides of a 3 mH line at 50 Hz.
    pub fn nameplate() -> Self {
        let omega0 = crate::OMEGA_50HZ;
        Self {
            x_line: omega0 * 3e-3,
            e0: 380.0,
            v0: 380.0,
            omega0,
            p_load: 1000.0,
            q_load: 0.0,
            linearized: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("x_line", self.x_line)?;
        positive("e0", self.e0)?;
        positive("v0", self.v0)?;
        positive("omega0", self.omega0)?;
        if !(self.p_load >= 0.0) || !self.p_load.is_finite() {
            return Err(Error::param("p_load", "must be finite and >= 0"));
        }
        if !self.q_load.is_finite() {
            return Err(Error::param("q_load", "must be finite"));
        }
        Ok(())
    }

    /// Active and reactive power delivered across the line for an inverter
    /// EMF `e` leading the bus by `theta`.
    pub fn transfer(&self, e: f64, theta: f64) -> (f64, f64) {
        if self.linearized {
            (self.e0 * self.v0 * theta / self.x_line, 0.0)
        } else {
            power_flow(e, self.v0, theta, self.x_line)
        }
    }

    /// `E0 V0 / X`, W/rad.
    pub fn linearized_gain(&self) -> f64 {
        linearized_gain(self)
    }

    /// Small-signal plant `dP/d(omega) = K_theta / s`: the angle is the
    /// integral of the frequency deviation.
    pub fn angle_plant(&self) -> TransferFunction {
        TransferFunction::integrator(self.linearized_gain())
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, "must be finite and > 0"))
    }
}

/// Power at the sending end of a lossless line:
/// `P = E V sin(theta) / X`, `Q = (E^2 - E V cos(theta)) / X`.
pub fn power_flow(e: f64, v: f64, theta: f64, x: f64) -> (f64, f64) {
    let (sin, cos) = theta.sin_cos();
    (e * v * sin / x, (e * e - e * v * cos) / x)
}

/// Slope of `P(theta)` at `theta = 0`.
pub fn linearized_gain(p: &PlantParams) -> f64 {
    p.e0 * p.v0 / p.x_line
}

/// Timed change of the islanded load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadStep {
    pub time: f64,
    pub delta_w: f64,
}

/// Switch state and load at the PCC.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub mode: Mode,
    /// Base load before any scheduled step, W.
    pub p_load: f64,
    /// Angle of the infinite bus in the nominal rotating frame, rad.
    pub theta_grid: f64,
    /// Load steps sorted by time.
    pub load_steps: Vec<LoadStep>,
}

impl GridState {
    pub fn new(mode: Mode, p_load: f64) -> Self {
        Self {
            mode,
            p_load,
            theta_grid: 0.0,
            load_steps: Vec::new(),
        }
    }

    pub fn with_load_steps(mut self, mut steps: Vec<LoadStep>) -> Self {
        steps.sort_by(|a, b| a.time.total_cmp(&b.time));
        self.load_steps = steps;
        self
    }

    /// Load demanded at time `t`, piecewise constant in the step schedule.
    pub fn load_at(&self, t: f64) -> f64 {
        self.p_load
            + self
                .load_steps
                .iter()
                .take_while(|s| s.time <= t)
                .map(|s| s.delta_w)
                .sum::<f64>()
    }
}

/// Active power the islanded inverter must deliver at time `t`.
pub fn islanded_bus_power(gs: &GridState, t: f64) -> Result<f64> {
    match gs.mode {
        Mode::Is => Ok(gs.load_at(t)),
        Mode::Gc => Err(Error::WrongMode { expected: "islanded" }),
    }
}
