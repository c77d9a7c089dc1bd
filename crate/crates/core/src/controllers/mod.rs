//! Reference-EMF generation laws.
//!
//! Each law maps measured active/reactive power to the inverter's angular
//! frequency and EMF magnitude. Dynamic states (low-pass filters, the VSG
//! rotor speed and governor) are exposed as time derivatives so a caller can
//! integrate them with any fixed-step scheme. The phase angle obeys
//! `d(theta)/dt = omega`; simulations integrate it relative to the nominal
//! rotating frame.

mod droop;
mod linearize;
mod udc;
mod vsg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use droop::{droop_derivatives, solve_coupling, DroopParams};
pub use linearize::{linearize_controller, numerical_power_response, OperatingPoint};
pub use udc::{map_droop_to_vsg, map_vsg_to_droop, udc_derivatives, ActiveFilter, UdcParams};
pub use vsg::{vsg_derivatives, VsgParams};

use crate::{Error, Result};

/// Largest active-channel filter order (the three-pole design form).
pub const MAX_FILTER_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Droop,
    Vsg,
    Udc,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Droop, Strategy::Vsg, Strategy::Udc];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Droop => "droop",
            Strategy::Vsg => "vsg",
            Strategy::Udc => "udc",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "droop" => Ok(Strategy::Droop),
            "vsg" => Ok(Strategy::Vsg),
            "udc" => Ok(Strategy::Udc),
            other => Err(format!("unknown strategy `{other}` (expected droop, vsg or udc)")),
        }
    }
}

/// Controller state shared by all laws.
///
/// Unused entries stay at zero: droop uses `x_filter_p[0]`, the VSG keeps its
/// governor filter in `x_filter_p[0]` and its rotor speed in `omega`, the
/// unified controller uses as many filter entries as its filter order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    /// Active-channel filter states, W.
    pub x_filter_p: [f64; MAX_FILTER_ORDER],
    /// Reactive-channel filter state, var.
    pub x_filter_q: f64,
    /// Angular frequency, rad/s.
    pub omega: f64,
    /// Phase angle, rad.
    pub theta: f64,
    /// EMF magnitude, V.
    pub v: f64,
}

impl ControllerState {
    /// All filters at rest, `omega` and `v` at the given values.
    pub fn at_rest(omega: f64, v: f64) -> Self {
        Self {
            x_filter_p: [0.0; MAX_FILTER_ORDER],
            x_filter_q: 0.0,
            omega,
            theta: 0.0,
            v,
        }
    }
}

/// Time derivatives of the dynamic states plus the algebraic outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub d_filter_p: [f64; MAX_FILTER_ORDER],
    pub d_filter_q: f64,
    /// Nonzero only where `omega` is itself a state (VSG).
    pub d_omega: f64,
    /// Output angular frequency, rad/s; also `d(theta)/dt`.
    pub omega: f64,
    /// Output EMF magnitude, V.
    pub v: f64,
}

impl Derivatives {
    pub(crate) fn outputs(omega: f64, v: f64) -> Self {
        Self {
            d_filter_p: [0.0; MAX_FILTER_ORDER],
            d_filter_q: 0.0,
            d_omega: 0.0,
            omega,
            v,
        }
    }
}

/// One of the three control laws with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerParams {
    Droop(DroopParams),
    Vsg(VsgParams),
    Udc(UdcParams),
}

impl ControllerParams {
    pub fn strategy(&self) -> Strategy {
        match self {
            ControllerParams::Droop(_) => Strategy::Droop,
            ControllerParams::Vsg(_) => Strategy::Vsg,
            ControllerParams::Udc(_) => Strategy::Udc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ControllerParams::Droop(p) => p.validate(),
            ControllerParams::Vsg(p) => p.validate(),
            ControllerParams::Udc(p) => p.validate(),
        }
    }

    /// Active power reference, W.
    pub fn p_ref(&self) -> f64 {
        match self {
            ControllerParams::Droop(p) => p.p_ref,
            ControllerParams::Vsg(p) => p.p_ref,
            ControllerParams::Udc(p) => p.p_ref,
        }
    }

    pub fn set_p_ref(&mut self, value: f64) {
        match self {
            ControllerParams::Droop(p) => p.p_ref = value,
            ControllerParams::Vsg(p) => p.p_ref = value,
            ControllerParams::Udc(p) => p.p_ref = value,
        }
    }

    /// EMF magnitude set point, V.
    pub fn v_ref(&self) -> f64 {
        match self {
            ControllerParams::Droop(p) => p.v_ref,
            ControllerParams::Vsg(p) => p.v_ref,
            ControllerParams::Udc(p) => p.v_ref,
        }
    }

    /// Frequency the law returns to with zero power deviation.
    pub fn nominal_omega(&self) -> f64 {
        match self {
            ControllerParams::Droop(p) => p.omega_ref,
            ControllerParams::Vsg(p) => p.omega0,
            ControllerParams::Udc(p) => p.omega0,
        }
    }

    /// Filter time constants that bound the integration step.
    pub fn filter_time_constants(&self) -> Vec<f64> {
        match self {
            ControllerParams::Droop(p) => vec![p.tau],
            ControllerParams::Vsg(p) => {
                if p.tau > 0.0 {
                    vec![p.tau]
                } else {
                    Vec::new()
                }
            }
            ControllerParams::Udc(p) => match &p.design {
                Some(d) => vec![p.tau, d.t_p1, d.t_p2, d.t_p3],
                None => vec![p.tau],
            },
        }
    }

    pub fn derivatives(&self, st: &ControllerState, meas_p: f64, meas_q: f64) -> Result<Derivatives> {
        match self {
            ControllerParams::Droop(p) => droop_derivatives(p, st, meas_p, meas_q),
            ControllerParams::Vsg(p) => vsg_derivatives(p, st, meas_p),
            ControllerParams::Udc(p) => udc_derivatives(p, st, meas_p, meas_q),
        }
    }

    /// Number of dynamic controller states in the packed layout.
    pub fn dynamic_dim(&self) -> usize {
        match self {
            ControllerParams::Droop(_) => 2,
            ControllerParams::Vsg(_) => 2,
            ControllerParams::Udc(p) => p.active_filter().order() + 1,
        }
    }

    /// Writes the dynamic states into `out[..dynamic_dim()]`.
    pub fn pack(&self, st: &ControllerState, out: &mut [f64]) {
        match self {
            ControllerParams::Droop(_) => {
                out[0] = st.x_filter_p[0];
                out[1] = st.x_filter_q;
            }
            ControllerParams::Vsg(_) => {
                out[0] = st.omega;
                out[1] = st.x_filter_p[0];
            }
            ControllerParams::Udc(_) => {
                let n = self.dynamic_dim() - 1;
                out[..n].copy_from_slice(&st.x_filter_p[..n]);
                out[n] = st.x_filter_q;
            }
        }
    }

    /// Reads the dynamic states from `x[..dynamic_dim()]`.
    pub fn unpack(&self, x: &[f64], st: &mut ControllerState) {
        match self {
            ControllerParams::Droop(_) => {
                st.x_filter_p[0] = x[0];
                st.x_filter_q = x[1];
            }
            ControllerParams::Vsg(_) => {
                st.omega = x[0];
                st.x_filter_p[0] = x[1];
            }
            ControllerParams::Udc(_) => {
                let n = self.dynamic_dim() - 1;
                st.x_filter_p[..n].copy_from_slice(&x[..n]);
                st.x_filter_q = x[n];
            }
        }
    }

    /// Writes the state rates in packed layout.
    pub fn pack_rates(&self, d: &Derivatives, out: &mut [f64]) {
        match self {
            ControllerParams::Droop(_) => {
                out[0] = d.d_filter_p[0];
                out[1] = d.d_filter_q;
            }
            ControllerParams::Vsg(_) => {
                out[0] = d.d_omega;
                out[1] = d.d_filter_p[0];
            }
            ControllerParams::Udc(_) => {
                let n = self.dynamic_dim() - 1;
                out[..n].copy_from_slice(&d.d_filter_p[..n]);
                out[n] = d.d_filter_q;
            }
        }
    }
}

pub(crate) fn check_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, "must be finite"))
    }
}

pub(crate) fn check_positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, "must be finite and > 0"))
    }
}

pub(crate) fn check_nonnegative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, "must be finite and >= 0"))
    }
}
