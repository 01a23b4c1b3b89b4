//! Logarithmic Flory-Huggins potential.
//!
//! `B(r) = (1+r) ln(1+r) + (1-r) ln(1-r)` is the convex mixing entropy,
//! `F = B - lambda r^2 / 2` the double-well potential, `beta = B'` and
//! `f = F' = beta - lambda r`. All of them are singular at `r = +-1`; any
//! argument outside the open interval is reported as a domain error.

use crate::error::{Error, Result};
use crate::grid::Field;

/// Model constants of the functionalized Cahn-Hilliard energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    /// Interface width.
    pub eps: f64,
    /// Functionalization strength.
    pub eta: f64,
    /// Quadratic well depth of `F`.
    pub lam: f64,
    /// Functionalization exponent, 1 (strong) or 2 (weak).
    pub p: u32,
}

impl PhysParams {
    pub fn new(eps: f64, eta: f64, lam: f64, p: u32) -> Result<Self> {
        let pp = PhysParams { eps, eta, lam, p };
        pp.validate()?;
        Ok(pp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("eta", self.eta), ("lam", self.lam)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.p != 1 && self.p != 2 {
            return Err(Error::Config(format!("p must be 1 or 2, got {}", self.p)));
        }
        Ok(())
    }

    /// `eps^p * eta`
    pub fn func_weight(&self) -> f64 {
        self.eps.powi(self.p as i32) * self.eta
    }
}

/// Well depth placing the minima of `F` at `+-r_star`.
pub fn lambda_for_wells(r_star: f64) -> f64 {
    ((1.0 + r_star) / (1.0 - r_star)).ln() / r_star
}

/// `ln(19) / 0.9`: wells at `+-0.9`.
pub fn lambda_wells_09() -> f64 {
    19f64.ln() / 0.9
}

#[inline]
fn check(r: f64) -> Result<()> {
    if r.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { value: r })
    }
}

/// `beta(r) = ln((1+r)/(1-r))` and its first three derivatives.
pub fn beta_family(r: f64) -> Result<(f64, f64, f64, f64)> {
    check(r)?;
    let q = 1.0 - r * r;
    Ok((
        beta_unchecked(r),
        2.0 / q,
        4.0 * r / (q * q),
        4.0 * (1.0 + 3.0 * r * r) / (q * q * q),
    ))
}

/// `(B(r), F(r), f(r))`
pub fn mixing_family(r: f64, pp: &PhysParams) -> Result<(f64, f64, f64)> {
    check(r)?;
    let b = mixing_entropy_unchecked(r);
    Ok((
        b,
        b - 0.5 * pp.lam * r * r,
        beta_unchecked(r) - pp.lam * r,
    ))
}

#[inline]
pub(crate) fn beta_unchecked(r: f64) -> f64 {
    // ln(1+r) - ln(1-r), accurate near 0
    r.ln_1p() - (-r).ln_1p()
}

#[inline]
pub(crate) fn mixing_entropy_unchecked(r: f64) -> f64 {
    (1.0 + r) * r.ln_1p() + (1.0 - r) * (-r).ln_1p()
}

/// True iff `||f||_inf <= 1 - margin` (strictly below 1 when `margin == 0`).
pub fn admissible(f: &Field, margin: f64) -> bool {
    let m = f.max_abs();
    if margin > 0.0 {
        m <= 1.0 - margin
    } else {
        m < 1.0
    }
}

/// Error form of [`admissible`] with margin 0, reporting the worst cell.
pub fn ensure_admissible(f: &Field) -> Result<()> {
    let (index, max_abs) = f.argmax_abs();
    if max_abs < 1.0 {
        Ok(())
    } else {
        Err(Error::Inadmissible {
            max_abs,
            index,
            bound: 1.0,
        })
    }
}
