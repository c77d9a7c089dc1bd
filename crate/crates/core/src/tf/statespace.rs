use std::convert::Infallible;

use nalgebra::{DMatrix, DVector, RowDVector};

use super::{TransferFunction, C64};
use crate::ode::Rk4;
use crate::{Error, Result};

/// Single-input single-output realization `x' = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl StateSpace {
    /// Controllable canonical realization of a proper transfer function.
    ///
    /// With `den = s^n + a_{n-1} s^{n-1} + ... + a_0` the last row of `A`
    /// holds `-a_k`, `B = e_n`, and `C` is the strictly proper remainder of
    /// the numerator after the direct term `D` has been split off.
    pub fn controllable_canonical(g: &TransferFunction) -> Result<Self> {
        let n = g.den().degree();
        if !g.is_proper() {
            return Err(Error::ImproperTransferFunction {
                num: g.num().degree(),
                den: n,
            });
        }
        // den is monic by construction
        let d = g.num().coeff(n);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        let mut c = RowDVector::zeros(n);
        for k in 0..n {
            a[(n - 1, k)] = -g.den().coeff(k);
            c[k] = g.num().coeff(k) - d * g.den().coeff(k);
        }
        let mut b = DVector::zeros(n);
        if n > 0 {
            b[n - 1] = 1.0;
        }
        Ok(Self { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Frequency response `C (sI - A)^-1 B + D`.
    pub fn eval(&self, s: C64) -> C64 {
        let n = self.order();
        if n == 0 {
            return C64::new(self.d, 0.0);
        }
        let mut m: DMatrix<C64> = self.a.map(|v| C64::new(-v, 0.0));
        for i in 0..n {
            m[(i, i)] += s;
        }
        let rhs: DVector<C64> = self.b.map(|v| C64::new(v, 0.0));
        match m.lu().solve(&rhs) {
            Some(x) => {
                let mut y = C64::new(self.d, 0.0);
                for i in 0..n {
                    y += x[i] * self.c[i];
                }
                y
            }
            None => C64::new(f64::INFINITY, 0.0),
        }
    }

    /// `x' = A x + B u` written into `dx`.
    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.order();
        for i in 0..n {
            let mut acc = self.b[i] * u;
            for j in 0..n {
                acc += self.a[(i, j)] * x[j];
            }
            dx[i] = acc;
        }
    }

    pub fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }
}

/// Unit-step response of `g` sampled at `k * dt` for `k = 0..=round(t_end/dt)`.
///
/// The realization is integrated from rest with fixed-step RK4, so the
/// samples are deterministic for a given `(g, t_end, dt)`.
pub fn step_response(g: &TransferFunction, t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "must be a positive finite step"));
    }
    if !(t_end > dt) || !t_end.is_finite() {
        return Err(Error::param("t_end", "must exceed dt"));
    }
    let ss = g.to_state_space()?;
    let steps = (t_end / dt).round() as usize;
    let n = ss.order();
    let mut x = vec![0.0; n];
    let mut rk = Rk4::new(n);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(ss.output(&x, 1.0));
    for k in 0..steps {
        rk.step(
            |_t, x: &[f64], dx: &mut [f64]| -> std::result::Result<(), Infallible> {
                ss.derivative(x, 1.0, dx);
                Ok(())
            },
            k as f64 * dt,
            &mut x,
            dt,
        )
        .unwrap_or_else(|e| match e {});
        out.push(ss.output(&x, 1.0));
    }
    Ok(out)
}
