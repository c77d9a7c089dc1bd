//! Polynomial roots as eigenvalues of a balanced companion matrix.

use std::cmp::Ordering;

use nalgebra::{DMatrix, Schur};

use super::{Polynomial, C64};
use crate::{Error, Result};

const MAX_QR_SWEEPS: usize = 200;
const NEWTON_POLISH_STEPS: usize = 3;
/// Accepted relative residual |p(r)| / sum |c_k| |r|^k.
const RESIDUAL_TOL: f64 = 1e-8;

/// Companion matrix of the monic form of `p` (degree >= 1).
///
/// Ones on the subdiagonal, `-c_k / c_n` in the last column, so the
/// characteristic polynomial is `p / c_n`.
pub fn companion_matrix(p: &Polynomial) -> DMatrix<f64> {
    let n = p.degree();
    let lead = p.leading();
    let mut m = DMatrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -p.coeff(i) / lead;
    }
    m
}

/// Parlett-Reinsch balancing by powers of two, in place.
///
/// A diagonal similarity transform that equalizes row and column norms;
/// eigenvalues are unchanged and the QR iteration loses less accuracy.
pub fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let sum = col + row;
            let mut f = 1.0;
            let mut c = col;
            let lower = row / RADIX;
            while c < lower {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            let upper = row * RADIX;
            while c > upper {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + row) / f < 0.95 * sum {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

fn relative_residual(p: &Polynomial, r: C64) -> f64 {
    let scale: f64 = p
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs() * r.norm().powi(k as i32))
        .sum();
    if scale == 0.0 {
        return 0.0;
    }
    p.eval(r).norm() / scale
}

fn polish(p: &Polynomial, dp: &Polynomial, mut r: C64) -> C64 {
    let mut best = p.eval(r).norm();
    for _ in 0..NEWTON_POLISH_STEPS {
        let d = dp.eval(r);
        if d.norm() == 0.0 {
            break;
        }
        let candidate = r - p.eval(r) / d;
        let value = p.eval(candidate).norm();
        if !(value < best) {
            break;
        }
        best = value;
        r = candidate;
    }
    r
}

fn by_real_part_desc(a: &C64, b: &C64) -> Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

pub(super) fn roots(p: &Polynomial) -> Result<Vec<C64>> {
    if p.is_zero() {
        return Err(Error::param("polynomial", "the zero polynomial has no finite root set"));
    }
    if p.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::NumericalFailure { residual: f64::NAN });
    }

    // exact roots at the origin are deflated before the eigen solve
    let zeros_at_origin = p.coeffs().iter().take_while(|&&c| c == 0.0).count();
    let reduced = Polynomial::new(p.coeffs()[zeros_at_origin..].to_vec());
    let mut out = vec![C64::new(0.0, 0.0); zeros_at_origin];

    match reduced.degree() {
        0 => {}
        1 => out.push(C64::new(-reduced.coeff(0) / reduced.coeff(1), 0.0)),
        n => {
            let mut m = companion_matrix(&reduced);
            balance(&mut m);
            let schur = Schur::try_new(m, f64::EPSILON, MAX_QR_SWEEPS * n)
                .ok_or(Error::NumericalFailure { residual: f64::INFINITY })?;
            let dp = reduced.derivative();
            for ev in schur.complex_eigenvalues().iter() {
                let mut r = polish(&reduced, &dp, *ev);
                if r.im.abs() <= 1e-14 * r.norm().max(1.0) {
                    r.im = 0.0;
                }
                out.push(r);
            }
            let residual = out
                .iter()
                .skip(zeros_at_origin)
                .map(|r| relative_residual(&reduced, *r))
                .fold(0.0, f64::max);
            if !(residual <= RESIDUAL_TOL) {
                return Err(Error::NumericalFailure { residual });
            }
        }
    }

    out.sort_by(by_real_part_desc);
    Ok(out)
}
