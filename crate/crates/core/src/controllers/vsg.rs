use serde::{Deserialize, Serialize};

use super::{check_finite, check_nonnegative, check_positive, ControllerState, Derivatives};
use crate::{Error, Result, OMEGA_50HZ};

/// Virtual synchronous generator: swing equation with a filtered P/f
/// governor.
///
/// `J d(omega)/dt = (P_m - P - D (omega - omega0)) / omega`
/// `P_m = p_ref + k_omega / (tau s + 1) (omega_ref - omega)`
///
/// The damping `D` acts in the power domain (W per rad/s), the same units as
/// the unified controller's governor coefficient. `tau = 0` removes the
/// governor filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VsgParams {
    /// Virtual inertia, kg m^2.
    pub j: f64,
    /// Damping, W/(rad/s).
    pub d: f64,
    /// Governor gain, W/(rad/s).
    pub k_omega: f64,
    /// Governor filter time constant, s (0 = unfiltered).
    pub tau: f64,
    /// Nominal grid angular frequency, rad/s.
    pub omega0: f64,
    /// Governor reference, rad/s.
    pub omega_ref: f64,
    #[serde(default)]
    pub p_ref: f64,
    /// EMF magnitude held by the VSG, V.
    pub v_ref: f64,
}

impl Default for VsgParams {
    /// Nameplate inertia and damping at 50 Hz, 380 V.
    fn default() -> Self {
        Self {
            j: 3.36,
            d: 100.0,
            k_omega: 12_000.0 / std::f64::consts::PI,
            tau: 1.0 / (10.0 * std::f64::consts::PI),
            omega0: OMEGA_50HZ,
            omega_ref: OMEGA_50HZ,
            p_ref: 0.0,
            v_ref: 380.0,
        }
    }
}

impl VsgParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("j", self.j)?;
        check_nonnegative("d", self.d)?;
        check_nonnegative("k_omega", self.k_omega)?;
        check_nonnegative("tau", self.tau)?;
        check_positive("omega0", self.omega0)?;
        check_positive("omega_ref", self.omega_ref)?;
        check_finite("p_ref", self.p_ref)?;
        check_positive("v_ref", self.v_ref)
    }

    fn governor(&self, st: &ControllerState) -> f64 {
        if self.tau > 0.0 {
            st.x_filter_p[0]
        } else {
            self.k_omega * (self.omega_ref - st.omega)
        }
    }
}

/// `st.omega` is the rotor speed state; `x_filter_p[0]` the filtered governor
/// output in W.
pub fn vsg_derivatives(p: &VsgParams, st: &ControllerState, meas_p: f64) -> Result<Derivatives> {
    if !(st.omega > 0.0) || !st.omega.is_finite() {
        return Err(Error::NonPhysicalFrequency { omega: st.omega });
    }
    check_finite("meas_P", meas_p)?;

    let p_m = p.p_ref + p.governor(st);
    let mut d = Derivatives::outputs(st.omega, p.v_ref);
    d.d_omega = (p_m - meas_p - p.d * (st.omega - p.omega0)) / (p.j * st.omega);
    if p.tau > 0.0 {
        d.d_filter_p[0] = (p.k_omega * (p.omega_ref - st.omega) - st.x_filter_p[0]) / p.tau;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_has_zero_acceleration() {
        let p = VsgParams {
            p_ref: 4000.0,
            ..VsgParams::default()
        };
        let st = ControllerState::at_rest(p.omega0, p.v_ref);
        let d = vsg_derivatives(&p, &st, 4000.0).unwrap();
        assert_eq!(d.d_omega, 0.0);
        assert_eq!(d.d_filter_p[0], 0.0);
        assert_eq!(d.omega, p.omega0);
    }

    #[test]
    fn damping_only_deceleration() {
        // K_omega = 0, P = P_ref, omega - omega0 = 0.1 with the default J and D
        let p = VsgParams {
            k_omega: 0.0,
            ..VsgParams::default()
        };
        let omega = p.omega0 + 0.1;
        let st = ControllerState::at_rest(omega, p.v_ref);
        let d = vsg_derivatives(&p, &st, p.p_ref).unwrap();
        let want = -100.0 * 0.1 / (3.36 * omega);
        assert!((d.d_omega - want).abs() < 1e-9 * want.abs());
    }

    #[test]
    fn inertial_slope_after_load_pickup() {
        let p = VsgParams::default();
        let st = ControllerState::at_rest(p.omega0, p.v_ref);
        let d = vsg_derivatives(&p, &st, p.p_ref + 1000.0).unwrap();
        let want = -1000.0 / (3.36 * 100.0 * std::f64::consts::PI);
        assert!((d.d_omega - want).abs() < 1e-12);
        assert!((d.d_omega + 0.947).abs() < 1e-3);
        let rocof_hz = d.d_omega.abs() / (2.0 * std::f64::consts::PI);
        assert!((rocof_hz - 0.151).abs() < 1e-3);
    }

    #[test]
    fn governor_filter_and_unfiltered_mode() {
        let mut p = VsgParams::default();
        let st = ControllerState::at_rest(p.omega_ref - 0.2, p.v_ref);
        let d = vsg_derivatives(&p, &st, 0.0).unwrap();
        let want = p.k_omega * 0.2 / p.tau;
        assert!((d.d_filter_p[0] - want).abs() < 1e-9 * want);

        p.tau = 0.0;
        let d = vsg_derivatives(&p, &st, 0.0).unwrap();
        assert_eq!(d.d_filter_p[0], 0.0);
        let p_m = p.k_omega * 0.2;
        let want = (p_m - p.d * (st.omega - p.omega0)) / (p.j * st.omega);
        assert!((d.d_omega - want).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_frequency_is_rejected() {
        let p = VsgParams::default();
        let st = ControllerState::at_rest(0.0, 380.0);
        assert!(matches!(
            vsg_derivatives(&p, &st, 0.0),
            Err(Error::NonPhysicalFrequency { .. })
        ));
    }
}
