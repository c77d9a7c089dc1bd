use nalgebra::{DMatrix, DVector};

use super::{ControllerParams, ControllerState};
use crate::analysis::LoopFunctions;
use crate::tf::{Polynomial, TransferFunction, C64};
use crate::{Error, Result};

/// Equilibrium about which a controller is linearized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub state: ControllerState,
    /// Measured active power, W.
    pub p: f64,
    /// Measured reactive power, var.
    pub q: f64,
}

fn equilibrium_residual(params: &ControllerParams, op: &OperatingPoint) -> Result<f64> {
    let d = params.derivatives(&op.state, op.p, op.q)?;
    let mut rates = vec![0.0; params.dynamic_dim()];
    params.pack_rates(&d, &mut rates);
    let scale = 1.0f64.max(op.p.abs()).max(op.q.abs()).max(op.state.omega.abs());
    Ok(rates.iter().fold(0.0f64, |m, r| m.max(r.abs())) / scale)
}

/// Small-signal loop branches of a controller at an equilibrium.
///
/// The frequency/voltage coupling is resolved with the reactive channel held
/// at its operating value, which scales the forward path by `1/(1 + m n)`.
/// The VSG's division by `omega` is taken at `omega0`.
pub fn linearize_controller(params: &ControllerParams, op: &OperatingPoint) -> Result<LoopFunctions> {
    params.validate()?;
    let residual = equilibrium_residual(params, op)?;
    if residual > 1e-9 {
        return Err(Error::NotAnEquilibrium { residual });
    }
    match params {
        ControllerParams::Droop(p) => LoopFunctions::new(
            TransferFunction::zero(),
            TransferFunction::first_order_lag(p.kp_droop / (1.0 + p.m * p.n), p.tau)?,
            TransferFunction::gain(1.0),
        ),
        ControllerParams::Vsg(p) => {
            let g_f = if p.tau > 0.0 {
                TransferFunction::first_order_lag(p.k_omega, p.tau)?
            } else {
                TransferFunction::gain(p.k_omega)
            };
            let g_l = TransferFunction::new(
                Polynomial::one(),
                Polynomial::new(vec![p.d, p.j * p.omega0]),
            )?;
            LoopFunctions::new(g_f, g_l, TransferFunction::gain(1.0))
        }
        ControllerParams::Udc(p) => {
            let k = p.kp_droop / (1.0 + p.m * p.n);
            let (g_l, g_b) = match &p.design {
                Some(d) => (
                    d.target()?.scale(k),
                    TransferFunction::new(Polynomial::time_constant(d.beta), Polynomial::one())?,
                ),
                None => (
                    TransferFunction::first_order_lag(k, p.tau)?,
                    TransferFunction::gain(1.0),
                ),
            };
            LoopFunctions::new(TransferFunction::gain(p.xi), g_l, g_b)
        }
    }
}

/// Frequency response `d_omega / dP` of the nonlinear controller, obtained
/// from a central-difference Jacobian at the operating point and evaluated at
/// each point of `s`.
///
/// The power reference is held fixed, so this should agree with
/// `-G_B G_L / (1 + G_F G_L)` from [`linearize_controller`].
pub fn numerical_power_response(
    params: &ControllerParams,
    op: &OperatingPoint,
    s: &[C64],
) -> Result<Vec<C64>> {
    let n = params.dynamic_dim();
    let mut x0 = vec![0.0; n];
    params.pack(&op.state, &mut x0);

    let eval = |x: &[f64], p: f64| -> Result<(Vec<f64>, f64)> {
        let mut st = op.state;
        params.unpack(x, &mut st);
        let d = params.derivatives(&st, p, op.q)?;
        let mut r = vec![0.0; n];
        params.pack_rates(&d, &mut r);
        Ok((r, d.omega))
    };

    let power_scale = op.p.abs().max(op.q.abs()).max(1e3);
    let mut a = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    for j in 0..n {
        let h = 1e-6 * x0[j].abs().max(power_scale);
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[j] += h;
        xm[j] -= h;
        let (rp, wp) = eval(&xp, op.p)?;
        let (rm, wm) = eval(&xm, op.p)?;
        for i in 0..n {
            a[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
        c[j] = (wp - wm) / (2.0 * h);
    }
    let h = 1e-6 * power_scale;
    let (rp, wp) = eval(&x0, op.p + h)?;
    let (rm, wm) = eval(&x0, op.p - h)?;
    let b = DVector::from_iterator(n, rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * h)));
    let d = (wp - wm) / (2.0 * h);

    let ac = a.map(|v| C64::new(v, 0.0));
    let bc = b.map(|v| C64::new(v, 0.0));
    s.iter()
        .map(|&sv| {
            let m = DMatrix::from_diagonal_element(n, n, sv) - &ac;
            let x = m
                .lu()
                .solve(&bc)
                .ok_or(Error::NumericalFailure { residual: f64::INFINITY })?;
            Ok(c.iter().zip(x.iter()).map(|(ci, xi)| xi * *ci).sum::<C64>() + d)
        })
        .collect()
}
