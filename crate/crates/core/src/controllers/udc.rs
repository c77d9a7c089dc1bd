use serde::{Deserialize, Serialize};

use super::{
    check_finite, check_nonnegative, check_positive, solve_coupling, ControllerState, Derivatives,
    VsgParams, MAX_FILTER_ORDER,
};
use crate::analysis::DesignParams;
use crate::tf::{Polynomial, TransferFunction};
use crate::{Error, Result, OMEGA_50HZ};

/// Unified droop/VSG controller.
///
/// `omega = omega0 + kp F(s) [p_ref + xi (omega_ref - omega) - H(s) P] + m (v_ref - v)`
///
/// `F(s) = 1/(tau s + 1)` by default. With a `design` block, `F(s)` is the
/// three-pole/one-zero shape `(1 + s t_z1) / prod(1 + s t_pk)` and the
/// measured power passes through `H(s) = 1 + beta s`. The reactive channel is
/// the compensated Q-V droop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UdcParams {
    /// (rad/s)/W
    pub kp_droop: f64,
    /// Filter time constant, s (active channel without a design, reactive channel always).
    pub tau: f64,
    /// Governor adjustment coefficient, W/(rad/s).
    #[serde(default)]
    pub xi: f64,
    /// (rad/s)/V
    #[serde(default)]
    pub m: f64,
    pub omega0: f64,
    pub omega_ref: f64,
    pub v_ref: f64,
    #[serde(default)]
    pub p_ref: f64,
    /// V/var
    pub kd_droop: f64,
    /// V/(rad/s)
    #[serde(default)]
    pub n: f64,
    #[serde(default)]
    pub q_ref: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignParams>,
}

impl Default for UdcParams {
    fn default() -> Self {
        Self {
            kp_droop: std::f64::consts::PI / 12_000.0,
            tau: 1.0 / (10.0 * std::f64::consts::PI),
            xi: 100.0,
            m: 0.0,
            omega0: OMEGA_50HZ,
            omega_ref: OMEGA_50HZ,
            v_ref: 380.0,
            p_ref: 0.0,
            kd_droop: 0.05 * 380.0 / 12_000.0,
            n: 0.0,
            q_ref: 0.0,
            design: None,
        }
    }
}

impl UdcParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("kp_droop", self.kp_droop)?;
        check_positive("tau", self.tau)?;
        check_nonnegative("xi", self.xi)?;
        check_nonnegative("m", self.m)?;
        check_positive("omega0", self.omega0)?;
        check_positive("omega_ref", self.omega_ref)?;
        check_positive("v_ref", self.v_ref)?;
        check_finite("p_ref", self.p_ref)?;
        check_positive("kd_droop", self.kd_droop)?;
        check_nonnegative("n", self.n)?;
        check_finite("q_ref", self.q_ref)?;
        if let Some(d) = &self.design {
            d.validate().map_err(|e| match e {
                Error::InvalidDesign { field, reason } => Error::InvalidDesign {
                    field: format!("design.{field}"),
                    reason,
                },
                other => other,
            })?;
            if let Some(g) = d.gain {
                if (g - self.kp_droop).abs() > 1e-12 * self.kp_droop {
                    return Err(Error::design(
                        "design.gain",
                        "must equal kp_droop or be omitted inside a controller block",
                    ));
                }
            }
        }
        Ok(())
    }

    /// The active filter realization used by [`udc_derivatives`].
    pub fn active_filter(&self) -> ActiveFilter {
        match &self.design {
            Some(d) => ActiveFilter::three_pole(d),
            None => ActiveFilter::first_order(self.tau),
        }
    }

    /// Design block with the loop gain set to `kp_droop`.
    pub fn design_model(&self) -> Option<DesignParams> {
        self.design.map(|d| DesignParams {
            gain: Some(self.kp_droop),
            ..d
        })
    }
}

const N1: usize = MAX_FILTER_ORDER + 1;

/// Observable-canonical realization of the active filter with two inputs
/// sharing one denominator:
///
/// `y = N/D * u - beta s N/D * P`
///
/// `u` reaches the output only through the strictly proper `N/D`, so the
/// frequency never feeds through to itself algebraically; the measured-power
/// path may carry a direct term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveFilter {
    order: usize,
    /// Monic denominator, ascending `a_0 .. a_{n-1}` (leading 1 implied).
    den: [f64; MAX_FILTER_ORDER],
    /// Numerator of the `u` path, ascending, degree < n.
    num_u: [f64; MAX_FILTER_ORDER],
    /// Strictly proper numerator of the measured-power path.
    num_p: [f64; MAX_FILTER_ORDER],
    /// Direct term of the measured-power path.
    direct_p: f64,
}

impl ActiveFilter {
    /// `1/(tau s + 1)`; `x[0]` is the filtered input itself.
    pub fn first_order(tau: f64) -> Self {
        let mut den = [0.0; MAX_FILTER_ORDER];
        let mut num_u = [0.0; MAX_FILTER_ORDER];
        den[0] = 1.0 / tau;
        num_u[0] = 1.0 / tau;
        Self {
            order: 1,
            den,
            num_u,
            num_p: [0.0; MAX_FILTER_ORDER],
            direct_p: 0.0,
        }
    }

    /// `(1 + s t_z1) / prod (1 + s t_pk)` with measured-power lead `beta`.
    pub fn three_pole(d: &DesignParams) -> Self {
        // monic denominator prod (s + 1/t_pk)
        let mut den_full = [0.0; N1];
        den_full[0] = 1.0;
        for (deg, t) in [d.t_p1, d.t_p2, d.t_p3].into_iter().enumerate() {
            let r = 1.0 / t;
            for k in (0..=deg + 1).rev() {
                let shifted = if k > 0 { den_full[k - 1] } else { 0.0 };
                den_full[k] = shifted + r * den_full[k];
            }
        }
        let scale = 1.0 / (d.t_p1 * d.t_p2 * d.t_p3);
        let num = [scale, scale * d.t_z1, 0.0, 0.0];
        Self::with_lead(3, den_full, num, d.beta)
    }

    fn with_lead(order: usize, den_full: [f64; N1], num: [f64; N1], beta: f64) -> Self {
        // measured path numerator: -beta * s * num, degree <= order
        let mut meas = [0.0; N1];
        for k in 0..order {
            meas[k + 1] = -beta * num[k];
        }
        let direct_p = meas[order];
        let mut den = [0.0; MAX_FILTER_ORDER];
        let mut num_u = [0.0; MAX_FILTER_ORDER];
        let mut num_p = [0.0; MAX_FILTER_ORDER];
        for k in 0..order {
            den[k] = den_full[k];
            num_u[k] = num[k];
            num_p[k] = meas[k] - direct_p * den_full[k];
        }
        Self {
            order,
            den,
            num_u,
            num_p,
            direct_p,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Filter output for state `x` and measured power `meas_p`.
    pub fn output(&self, x: &[f64], meas_p: f64) -> f64 {
        x[0] + self.direct_p * meas_p
    }

    /// State rates for governor-compensated input `u` and measured power.
    pub fn rates(&self, x: &[f64], u: f64, meas_p: f64, dx: &mut [f64]) {
        let n = self.order;
        for k in 0..n {
            let idx = n - 1 - k;
            let next = if k + 1 < n { x[k + 1] } else { 0.0 };
            dx[k] = -self.den[idx] * x[0] + next + self.num_u[idx] * u + self.num_p[idx] * meas_p;
        }
    }

    fn den_poly(&self) -> Polynomial {
        let mut c = self.den[..self.order].to_vec();
        c.push(1.0);
        Polynomial::new(c)
    }

    /// `N/D`: transfer from the governor-compensated input to the output.
    pub fn reference_path(&self) -> TransferFunction {
        TransferFunction::new(Polynomial::new(self.num_u[..self.order].to_vec()), self.den_poly())
            .expect("monic denominator")
    }

    /// `-beta s N/D`: transfer from measured power to the output.
    pub fn measurement_lead(&self) -> TransferFunction {
        let strictly = TransferFunction::new(
            Polynomial::new(self.num_p[..self.order].to_vec()),
            self.den_poly(),
        )
        .expect("monic denominator");
        strictly.parallel(&TransferFunction::gain(self.direct_p))
    }
}

/// `x_filter_p[..order]` holds the active filter states (W for the default
/// first-order filter), `x_filter_q` the filtered `Q - q_ref`.
pub fn udc_derivatives(
    p: &UdcParams,
    st: &ControllerState,
    meas_p: f64,
    meas_q: f64,
) -> Result<Derivatives> {
    check_finite("meas_P", meas_p)?;
    check_finite("meas_Q", meas_q)?;
    let filter = p.active_filter();
    let y = filter.output(&st.x_filter_p, meas_p);
    let omega_u = p.omega0 + p.kp_droop * y;
    let v_u = p.v_ref - p.kd_droop * st.x_filter_q;
    let (omega, v) = solve_coupling(omega_u, v_u, p.m, p.n, p.omega_ref, p.v_ref)?;

    let u = p.p_ref + p.xi * (p.omega_ref - omega) - meas_p;
    let mut d = Derivatives::outputs(omega, v);
    filter.rates(&st.x_filter_p, u, meas_p, &mut d.d_filter_p);
    d.d_filter_q = ((meas_q - p.q_ref) - st.x_filter_q) / p.tau;
    Ok(d)
}

/// VSG parameters sharing the unified controller's active power loop.
///
/// Matching the coefficients of the linearized swing equation against the
/// unified law gives `D = xi`, `J omega0 = tau / kp` and a governor whose
/// filtered gain equals `1/kp`. The filter time constant is absorbed into
/// the inertia, so the mapped governor is unfiltered (`tau = 0`). The two
/// laws coincide when `omega_ref = omega0`.
pub fn map_droop_to_vsg(p: &UdcParams) -> Result<VsgParams> {
    check_positive("kp_droop", p.kp_droop)?;
    check_positive("tau", p.tau)?;
    check_positive("omega0", p.omega0)?;
    if p.design.is_some() {
        return Err(Error::param(
            "design",
            "the VSG mapping is defined for the first-order filter only",
        ));
    }
    Ok(VsgParams {
        j: p.tau / (p.kp_droop * p.omega0),
        d: p.xi,
        k_omega: 1.0 / p.kp_droop,
        tau: 0.0,
        omega0: p.omega0,
        omega_ref: p.omega_ref,
        p_ref: p.p_ref,
        v_ref: p.v_ref,
    })
}

/// Inverse of [`map_droop_to_vsg`]: returns `(kp_droop, tau, xi)`.
pub fn map_vsg_to_droop(v: &VsgParams) -> Result<(f64, f64, f64)> {
    check_positive("k_omega", v.k_omega)?;
    check_positive("j", v.j)?;
    let kp = 1.0 / v.k_omega;
    Ok((kp, v.j * v.omega0 * kp, v.d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::{droop_derivatives, DroopParams};
    use crate::tf::C64;

    fn plain() -> UdcParams {
        UdcParams {
            xi: 0.0,
            ..UdcParams::default()
        }
    }

    #[test]
    fn without_governor_matches_droop_about_omega0() {
        let u = plain();
        let d = DroopParams {
            kp_droop: u.kp_droop,
            kd_droop: u.kd_droop,
            tau: u.tau,
            omega_ref: u.omega0,
            v_ref: u.v_ref,
            ..DroopParams::default()
        };
        for &(x, meas) in &[(0.0, 0.0), (1500.0, 2000.0), (-300.0, 800.0)] {
            let mut su = ControllerState::at_rest(u.omega0, u.v_ref);
            su.x_filter_p[0] = -x;
            let mut sd = su;
            sd.x_filter_p[0] = x;
            let a = udc_derivatives(&u, &su, meas, 0.0).unwrap();
            let b = droop_derivatives(&d, &sd, meas, 0.0).unwrap();
            assert!((a.omega - b.omega).abs() < 1e-12);
            assert!((a.d_filter_p[0] + b.d_filter_p[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn static_governor_gain() {
        let p = UdcParams {
            kp_droop: 1e-4,
            xi: 200.0,
            omega_ref: OMEGA_50HZ + 0.05,
            ..UdcParams::default()
        };
        // filter settled on u = xi (omega_ref - omega) with P = P_ref
        let mut st = ControllerState::at_rest(OMEGA_50HZ, p.v_ref);
        st.x_filter_p[0] = 200.0 * 0.05;
        let d = udc_derivatives(&p, &st, p.p_ref, 0.0).unwrap();
        assert!((d.omega - p.omega0 - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn zero_deviation_fixed_point() {
        let p = UdcParams {
            p_ref: 6000.0,
            m: 0.01,
            n: 1.0,
            ..UdcParams::default()
        };
        let st = ControllerState::at_rest(p.omega0, p.v_ref);
        let d = udc_derivatives(&p, &st, p.p_ref, p.q_ref).unwrap();
        assert_eq!(d.omega, p.omega0);
        assert_eq!(d.v, p.v_ref);
        assert_eq!(d.d_filter_p, [0.0; MAX_FILTER_ORDER]);
    }

    #[test]
    fn mapping_values() {
        let p = UdcParams {
            kp_droop: 1e-4,
            tau: 0.0318,
            xi: 100.0,
            ..UdcParams::default()
        };
        let v = map_droop_to_vsg(&p).unwrap();
        assert!((v.j - 0.0318 / (1e-4 * OMEGA_50HZ)).abs() < 1e-12);
        assert!((v.j - 1.0122).abs() < 1e-4);
        assert!((v.k_omega - 1e4).abs() < 1e-8);
        assert_eq!(v.d, 100.0);
        assert_eq!(v.tau, 0.0);

        let (kp, tau, xi) = map_vsg_to_droop(&v).unwrap();
        assert!((kp - p.kp_droop).abs() <= 1e-12 * p.kp_droop);
        assert!((tau - p.tau).abs() <= 1e-12 * p.tau);
        assert_eq!(xi, p.xi);
    }

    #[test]
    fn mapping_rejects_designed_filter() {
        let p = UdcParams {
            design: Some(DesignParams::new(0.04, 0.05, 0.005, 0.002, 0.005)),
            ..UdcParams::default()
        };
        assert!(map_droop_to_vsg(&p).is_err());
    }

    #[test]
    fn three_pole_realization_matches_design_shape() {
        let dp = DesignParams::new(0.04, 0.05, 0.005, 0.002, 0.005);
        let f = ActiveFilter::three_pole(&dp);
        let target = dp.target().unwrap();
        let lead = target.series(
            &TransferFunction::new(Polynomial::new(vec![0.0, -dp.beta]), Polynomial::one()).unwrap(),
        );
        for w in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let s = C64::new(0.0, w);
            let a = f.reference_path().eval(s);
            let b = target.eval(s);
            assert!((a - b).norm() < 1e-10 * b.norm());
            let c = f.measurement_lead().eval(s);
            let e = lead.eval(s);
            assert!((c - e).norm() < 1e-10 * e.norm());
        }
    }

    #[test]
    fn first_order_lead_has_direct_term() {
        let f = ActiveFilter::with_lead(1, [10.0, 1.0, 0.0, 0.0], [10.0, 0.0, 0.0, 0.0], 0.02);
        // -beta s * 10/(s+10) = -0.2 + 2/(s+10)
        assert!((f.direct_p + 0.2).abs() < 1e-15);
        assert!((f.num_p[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn design_gain_must_match_kp() {
        let mut dp = DesignParams::new(0.04, 0.05, 0.005, 0.002, 0.005);
        dp.gain = Some(1.0);
        let p = UdcParams {
            design: Some(dp),
            ..UdcParams::default()
        };
        assert!(p.validate().is_err());
        let ok = UdcParams {
            design: Some(DesignParams { gain: None, ..dp }),
            ..UdcParams::default()
        };
        assert!(ok.validate().is_ok());
        assert_eq!(ok.design_model().unwrap().gain, Some(ok.kp_droop));
    }
}
