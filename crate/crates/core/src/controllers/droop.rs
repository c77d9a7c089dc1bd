use serde::{Deserialize, Serialize};

use super::{check_finite, check_nonnegative, check_positive, ControllerState, Derivatives};
use crate::{Error, Result, OMEGA_50HZ};

/// Filtered P-f / Q-V droop with coupling compensation.
///
/// `omega = omega_ref - kp/(tau s + 1) (P - p_ref) + m (v_ref - v)`
/// `v     = v_ref - kd/(tau s + 1) (Q - q_ref) - n (omega_ref - omega)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroopParams {
    /// (rad/s)/W
    pub kp_droop: f64,
    /// V/var
    pub kd_droop: f64,
    /// Measurement filter time constant, s.
    pub tau: f64,
    /// Voltage-deviation compensation, (rad/s)/V.
    #[serde(default)]
    pub m: f64,
    /// Frequency-deviation compensation, V/(rad/s).
    #[serde(default)]
    pub n: f64,
    pub omega_ref: f64,
    pub v_ref: f64,
    #[serde(default)]
    pub p_ref: f64,
    #[serde(default)]
    pub q_ref: f64,
}

impl Default for DroopParams {
    /// 50 Hz, 380 V; 12 kW of rated power moves the frequency by 0.5 Hz and
    /// 12 kvar moves the voltage by 5 %; 5 Hz measurement filter.
    fn default() -> Self {
        Self {
            kp_droop: std::f64::consts::PI / 12_000.0,
            kd_droop: 0.05 * 380.0 / 12_000.0,
            tau: 1.0 / (10.0 * std::f64::consts::PI),
            m: 0.0,
            n: 0.0,
            omega_ref: OMEGA_50HZ,
            v_ref: 380.0,
            p_ref: 0.0,
            q_ref: 0.0,
        }
    }
}

impl DroopParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("kp_droop", self.kp_droop)?;
        check_positive("kd_droop", self.kd_droop)?;
        check_positive("tau", self.tau)?;
        check_nonnegative("m", self.m)?;
        check_nonnegative("n", self.n)?;
        check_positive("omega_ref", self.omega_ref)?;
        check_positive("v_ref", self.v_ref)?;
        check_finite("p_ref", self.p_ref)?;
        check_finite("q_ref", self.q_ref)
    }
}

/// Solves the two compensated output equations simultaneously.
///
/// `omega = omega_u + m (v_ref - v)` and `v = v_u - n (omega_ref - omega)`,
/// where `omega_u`, `v_u` are the uncompensated outputs. The determinant of
/// this 2x2 system is `1 + m n`.
pub fn solve_coupling(
    omega_u: f64,
    v_u: f64,
    m: f64,
    n: f64,
    omega_ref: f64,
    v_ref: f64,
) -> Result<(f64, f64)> {
    let det = 1.0 + m * n;
    if det.abs() < 1e-12 {
        return Err(Error::SingularCoupling { determinant: det });
    }
    let omega = (omega_u + m * (v_ref - v_u) + m * n * omega_ref) / det;
    let v = v_u - n * (omega_ref - omega);
    Ok((omega, v))
}

/// `x_filter_p[0]` holds the filtered `P - p_ref`, `x_filter_q` the filtered
/// `Q - q_ref`.
pub fn droop_derivatives(
    p: &DroopParams,
    st: &ControllerState,
    meas_p: f64,
    meas_q: f64,
) -> Result<Derivatives> {
    check_finite("meas_P", meas_p)?;
    check_finite("meas_Q", meas_q)?;
    let omega_u = p.omega_ref - p.kp_droop * st.x_filter_p[0];
    let v_u = p.v_ref - p.kd_droop * st.x_filter_q;
    let (omega, v) = solve_coupling(omega_u, v_u, p.m, p.n, p.omega_ref, p.v_ref)?;

    let mut d = Derivatives::outputs(omega, v);
    d.d_filter_p[0] = ((meas_p - p.p_ref) - st.x_filter_p[0]) / p.tau;
    d.d_filter_q = ((meas_q - p.q_ref) - st.x_filter_q) / p.tau;
    Ok(d)
}
