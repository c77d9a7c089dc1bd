//! Classical fixed-step 4th-order Runge-Kutta.
//!
//! Scratch buffers are allocated once per integrator so a simulation loop
//! does not allocate per step. No adaptive stepping: identical inputs give
//! bit-identical trajectories.

/// Fixed-step RK4 integrator for systems of dimension `dim`.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.k1.len()
    }

    /// Advances `x` from `t` to `t + h` in place.
    ///
    /// `f(t, x, dx)` writes the time derivative of `x` into `dx`.
    pub fn step<F, E>(&mut self, mut f: F, t: f64, x: &mut [f64], h: f64) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        debug_assert_eq!(x.len(), self.dim());
        let half = 0.5 * h;

        f(t, x, &mut self.k1)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        f(t + half, &self.tmp, &mut self.k2)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        f(t + half, &self.tmp, &mut self.k3)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f(t + h, &self.tmp, &mut self.k4)?;

        let sixth = h / 6.0;
        for i in 0..x.len() {
            x[i] += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}
