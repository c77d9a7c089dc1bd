use crate::plant::PlantParams;
use crate::tf::{Polynomial, TransferFunction};
use crate::{Error, Result};

/// Branches of the small-signal power loop
/// `d_omega = G_L [dP_ref - G_B dP - G_F d_omega]`.
///
/// `g_l` is the forward (filter) path, `g_f` feeds frequency back into the
/// power reference, `g_b` shapes the measured power before it is compared
/// with the reference. `g_b` may be a lead such as `1 + beta s` as long as
/// `g_l` rolls off fast enough for the closed loops to stay proper.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopFunctions {
    pub g_f: TransferFunction,
    pub g_l: TransferFunction,
    pub g_b: TransferFunction,
}

impl LoopFunctions {
    pub fn new(g_f: TransferFunction, g_l: TransferFunction, g_b: TransferFunction) -> Result<Self> {
        let lf = Self { g_f, g_l, g_b };
        lf.check_proper()?;
        let forward = lf.g_b.series(&lf.g_l);
        if !forward.is_proper() {
            return Err(Error::ImproperTransferFunction {
                num: forward.num().degree(),
                den: forward.den().degree(),
            });
        }
        Ok(lf)
    }

    fn check_proper(&self) -> Result<()> {
        for g in [&self.g_f, &self.g_l] {
            if !g.is_proper() {
                return Err(Error::ImproperTransferFunction {
                    num: g.num().degree(),
                    den: g.den().degree(),
                });
            }
        }
        Ok(())
    }

    /// Static power needed per rad/s of sustained frequency deviation,
    /// `(1 + G_F G_L) / (G_L G_B)` at `s = 0`.
    pub fn frequency_stiffness(&self) -> f64 {
        let gl = self.g_l.dc_gain();
        let gb = self.g_b.dc_gain();
        1.0 / (gl * gb) + self.g_f.dc_gain() / gb
    }
}

/// Grid-connected loop `dP / dP_ref`.
///
/// With `K = E0 V0` and the angle plant `K/(sX)`:
/// `K G_L / (sX (1 + G_F G_L) + K G_L G_B)`.
pub fn build_gc_closed_loop(lf: &LoopFunctions, plant: &PlantParams) -> Result<TransferFunction> {
    lf.check_proper()?;
    let k = plant.e0 * plant.v0;
    let (nf, df) = (lf.g_f.num(), lf.g_f.den());
    let (nl, dl) = (lf.g_l.num(), lf.g_l.den());
    let (nb, db) = (lf.g_b.num(), lf.g_b.den());

    let num = (nl * df).scale(k);
    let num = &num * db;
    let inner = &(dl * df) + &(nf * nl);
    let sx = Polynomial::new(vec![0.0, plant.x_line]);
    let den = &(&(&sx * &inner) * db) + &(&(nl * nb) * df).scale(k);
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    TransferFunction::new(num, den)
}

/// Islanded loop `d_omega / dP_load = -G_B G_L / (1 + G_F G_L)`.
pub fn build_is_closed_loop(lf: &LoopFunctions) -> Result<TransferFunction> {
    lf.check_proper()?;
    let (nf, df) = (lf.g_f.num(), lf.g_f.den());
    let (nl, dl) = (lf.g_l.num(), lf.g_l.den());
    let (nb, db) = (lf.g_b.num(), lf.g_b.den());

    let num = (&(nb * nl) * df).scale(-1.0);
    let den = db * &(&(dl * df) + &(nf * nl));
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    TransferFunction::new(num, den)
}
