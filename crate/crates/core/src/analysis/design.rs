use serde::{Deserialize, Serialize};

use crate::plant::PlantParams;
use crate::tf::{Polynomial, TransferFunction};
use crate::{Error, Result};

fn default_beta() -> f64 {
    0.01
}

/// Time constants of the three-pole/one-zero loop shape, seconds.
///
/// `gain` scales the forward path of the grid-connected model; it defaults
/// to one when omitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignParams {
    pub t_z1: f64,
    pub t_p1: f64,
    pub t_p2: f64,
    pub t_p3: f64,
    /// Lead on the measured power, s.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
}

impl DesignParams {
    pub fn new(t_z1: f64, t_p1: f64, t_p2: f64, t_p3: f64, beta: f64) -> Self {
        Self {
            t_z1,
            t_p1,
            t_p2,
            t_p3,
            beta,
            gain: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }

    fn check(&self, allow_zero_tz: bool) -> Result<()> {
        for (name, t) in [("t_p1", self.t_p1), ("t_p2", self.t_p2), ("t_p3", self.t_p3)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::design(name, "pole time constant must be finite and > 0"));
            }
        }
        let tz_ok = if allow_zero_tz { self.t_z1 >= 0.0 } else { self.t_z1 > 0.0 };
        if !(tz_ok && self.t_z1.is_finite()) {
            return Err(Error::design("t_z1", "zero time constant must be finite and > 0"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::design("beta", "must be finite and >= 0"));
        }
        if let Some(g) = self.gain {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::design("gain", "must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn gain(&self) -> f64 {
        self.gain.unwrap_or(1.0)
    }

    fn poles(&self) -> [f64; 3] {
        [self.t_p1, self.t_p2, self.t_p3]
    }

    /// `(1 + s t_z1) / prod (1 + s t_pk)`.
    pub fn target(&self) -> Result<TransferFunction> {
        design_target(self)
    }

}

/// The target loop shape with an exactly cancelling pole/zero pair removed.
pub fn design_target(dp: &DesignParams) -> Result<TransferFunction> {
    dp.validate()?;
    let mut poles = dp.poles().to_vec();
    let mut num = Polynomial::time_constant(dp.t_z1);
    if let Some(i) = poles
        .iter()
        .position(|&t| (t - dp.t_z1).abs() <= 1e-12 * t)
    {
        poles.remove(i);
        num = Polynomial::one();
    }
    TransferFunction::new(num, lag_product(&poles))
}

/// Grid-connected small-signal model `dP / dP_ref` with the target shape
/// in the forward path and `1 + beta s` on the measured power:
///
/// `K V0 Vg (1 + s t_z1) / (sX prod(1 + s t_pk) + K V0 Vg (1 + s t_z1)(1 + beta s))`
pub fn build_gc_design_model(dp: &DesignParams, plant: &PlantParams) -> Result<TransferFunction> {
    dp.check(true)?;
    let k = dp.gain() * plant.e0 * plant.v0;
    let zero = Polynomial::time_constant(dp.t_z1).scale(k);
    let lags = lag_product(&dp.poles());
    let sx = Polynomial::new(vec![0.0, plant.x_line]);
    let den = &(&sx * &lags) + &(&zero * &Polynomial::time_constant(dp.beta));
    TransferFunction::new(zero, den)
}

fn lag_product(ts: &[f64]) -> Polynomial {
    ts.iter()
        .fold(Polynomial::one(), |acc, &t| &acc * &Polynomial::time_constant(t))
}

/// True when every step response of `(1 + s t_z1)(1 + beta s) / prod(1 + s t_pk)`
/// is monotone.
///
/// The check pairs the sorted zero time constants with the sorted pole time
/// constants: each factor `(1 + s z)/(1 + s p)` with `z <= p` has a
/// nonnegative impulse response, and so does their product.
pub fn is_overshoot_free(dp: &DesignParams) -> bool {
    let mut zeros: Vec<f64> = [dp.t_z1, dp.beta].into_iter().filter(|&z| z > 0.0).collect();
    let mut poles = dp.poles().to_vec();
    zeros.sort_by(|a, b| b.total_cmp(a));
    poles.sort_by(|a, b| b.total_cmp(a));
    zeros.iter().zip(&poles).all(|(z, p)| z <= p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::C64;

    #[test]
    fn target_poles_are_negative_reciprocals() {
        let dp = DesignParams::new(0.05, 0.1, 0.2, 0.5, 0.01);
        let g = design_target(&dp).unwrap();
        let poles = g.poles().unwrap();
        let expect = [-2.0, -5.0, -10.0];
        assert_eq!(poles.len(), 3);
        for (p, e) in poles.iter().zip(expect) {
            assert!((p.re - e).abs() < 1e-9 && p.im.abs() < 1e-12, "{p}");
        }
        let z = g.zeros().unwrap();
        assert!((z[0].re + 20.0).abs() < 1e-9);
        assert!((g.dc_gain() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cancellation_leaves_two_poles() {
        let dp = DesignParams::new(0.1, 0.1, 0.2, 0.5, 0.0);
        let g = design_target(&dp).unwrap();
        assert_eq!(g.den().degree(), 2);
        assert_eq!(g.num().degree(), 0);
        assert!((g.dc_gain() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_time_constants_name_the_field() {
        let dp = DesignParams::new(0.1, 0.1, -0.2, 0.5, 0.0);
        match design_target(&dp) {
            Err(Error::InvalidDesign { field, .. }) => assert_eq!(field, "t_p2"),
            other => panic!("{other:?}"),
        }
        let dp = DesignParams::new(0.0, 0.1, 0.2, 0.5, 0.0);
        assert!(design_target(&dp).is_err());
    }

    #[test]
    fn gc_model_unity_dc_gain() {
        let plant = PlantParams::nameplate();
        let dp = DesignParams::new(0.1, 0.05, 0.1, 0.3, 0.01);
        let g = build_gc_design_model(&dp, &plant).unwrap();
        assert!((g.dc_gain() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gc_model_pointwise() {
        let plant = PlantParams::nameplate();
        let mut dp = DesignParams::new(0.04, 0.05, 0.005, 0.002, 0.005);
        dp.gain = Some(2.6e-4);
        let g = build_gc_design_model(&dp, &plant).unwrap();
        let k = 2.6e-4 * plant.e0 * plant.v0;
        for s in [C64::new(0.0, 1.0), C64::new(-3.0, 40.0), C64::new(5.0, -300.0)] {
            let one = C64::new(1.0, 0.0);
            let lag = (one + s * dp.t_p1) * (one + s * dp.t_p2) * (one + s * dp.t_p3);
            let zero = one + s * dp.t_z1;
            let raw = zero * k / (s * plant.x_line * lag + zero * (one + s * dp.beta) * k);
            assert!((g.eval(s) - raw).norm() < 1e-9 * raw.norm());
        }
    }

    #[test]
    fn gc_model_without_zero_or_lead() {
        let plant = PlantParams::nameplate();
        let dp = DesignParams::new(0.0, 0.05, 0.1, 0.3, 0.0);
        let g = build_gc_design_model(&dp, &plant).unwrap();
        let k = plant.e0 * plant.v0;
        let s = C64::new(-1.0, 7.0);
        let one = C64::new(1.0, 0.0);
        let lag = (one + s * 0.05) * (one + s * 0.1) * (one + s * 0.3);
        let raw = C64::new(k, 0.0) / (s * plant.x_line * lag + k);
        assert!((g.eval(s) - raw).norm() < 1e-9 * raw.norm());
    }

    #[test]
    fn overshoot_free_region() {
        assert!(is_overshoot_free(&DesignParams::new(0.04, 0.05, 0.005, 0.002, 0.005)));
        assert!(!is_overshoot_free(&DesignParams::new(0.2, 0.05, 0.005, 0.002, 0.0)));
        assert!(!is_overshoot_free(&DesignParams::new(0.04, 0.05, 0.005, 0.002, 0.01)));
    }

    #[test]
    fn serde_defaults() {
        let dp: DesignParams =
            serde_json::from_str(r#"{"t_z1":0.1,"t_p1":0.2,"t_p2":0.3,"t_p3":0.4}"#).unwrap();
        assert_eq!(dp.beta, 0.01);
        assert_eq!(dp.gain, None);
        assert!(serde_json::from_str::<DesignParams>(r#"{"t_z1":0.1,"t_p1":0.2,"t_p2":0.3,"t_p3":0.4,"x":1}"#).is_err());
    }
}
