use std::fmt;

use super::{Polynomial, StateSpace, C64};
use crate::{Error, Result};

/// Rational function `num(s) / den(s)`.
///
/// Kept in canonical form: `den` has a leading coefficient of one. No
/// pole/zero cancellation is attempted, so the denominator degree always
/// reflects how the function was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let lead = den.leading();
        Ok(Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        })
    }

    /// Convenience constructor from ascending coefficient slices.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
        }
    }

    pub fn zero() -> Self {
        Self::gain(0.0)
    }

    /// `k / (1 + s*tau)`.
    pub fn first_order_lag(k: f64, tau: f64) -> Result<Self> {
        Self::new(Polynomial::constant(k), Polynomial::time_constant(tau))
    }

    /// `k / s`.
    pub fn integrator(k: f64) -> Self {
        Self::new(Polynomial::constant(k), Polynomial::s()).expect("s is nonzero")
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    pub fn eval(&self, s: C64) -> C64 {
        self.num.eval(s) / self.den.eval(s)
    }

    /// `num(0) / den(0)`; infinite when there is a pole at the origin.
    pub fn dc_gain(&self) -> f64 {
        self.num.coeff(0) / self.den.coeff(0)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// Cascade `self * other`.
    pub fn series(&self, other: &TransferFunction) -> Self {
        Self::new(&self.num * &other.num, &self.den * &other.den)
            .expect("product of nonzero denominators is nonzero")
    }

    /// Sum `self + other`.
    pub fn parallel(&self, other: &TransferFunction) -> Self {
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        Self::new(num, &self.den * &other.den).expect("product of nonzero denominators is nonzero")
    }

    /// Negative feedback: `self / (1 + self * back)`.
    pub fn feedback(&self, back: &TransferFunction) -> Result<Self> {
        let num = &self.num * &back.den;
        let den = &(&self.den * &back.den) + &(&self.num * &back.num);
        if den.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        Self::new(num, den)
    }

    /// Roots of the denominator, sorted by real part descending.
    pub fn poles(&self) -> Result<Vec<C64>> {
        self.den.roots()
    }

    /// Roots of the numerator; empty for a constant or zero numerator.
    pub fn zeros(&self) -> Result<Vec<C64>> {
        if self.num.is_zero() {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    /// True when every pole has a strictly negative real part.
    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.poles()?.iter().all(|p| p.re < 0.0))
    }

    pub fn to_state_space(&self) -> Result<StateSpace> {
        StateSpace::controllable_canonical(self)
    }
}

impl fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}
