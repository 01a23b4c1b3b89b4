//! Discrete FCH energy, its convex-concave split and the variational
//! derivatives that define the per-step nonlinear system.
//!
//! The mixed gradient term is always formed face-first, `a_z(|D_z phi|^2)`,
//! never as a cell-centered squared gradient. The convexity of `E_c` relies on it.

use crate::error::Result;
use crate::grid::{dot, grad_norm_sq, laplacian, Field, Grid};
use crate::potential::{beta_unchecked, ensure_admissible, mixing_entropy_unchecked, PhysParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `E_h = E_c - E_e`
    pub total: f64,
    pub convex: f64,
    pub concave: f64,
    /// Discrete Cahn-Hilliard energy `(eps^2/2)||grad phi||^2 + <F(phi), 1>`.
    pub ch: f64,
    /// Phase-field Willmore energy `E_h + eps^p eta E_ch`.
    pub pfw: f64,
}

/// Pointwise `beta`, `beta'`, `beta''` of an admissible field.
struct BetaFields {
    b0: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
}

impl BetaFields {
    fn new(phi: &Field) -> Result<Self> {
        ensure_admissible(phi)?;
        let n = phi.values().len();
        let (mut b0, mut b1, mut b2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &r in phi.values() {
            let q = 1.0 - r * r;
            b0.push(beta_unchecked(r));
            b1.push(2.0 / q);
            b2.push(4.0 * r / (q * q));
        }
        Ok(BetaFields { b0, b1, b2 })
    }
}

/// `sum_z a_z(|D_z phi|^2)` on cells.
pub fn face_gradient_sq(phi: &Field) -> Field {
    let g = *phi.grid();
    let v = phi.values();
    let mut out = vec![0.0; v.len()];
    for axis in 0..g.dim() {
        let inv_h = 1.0 / g.h(axis);
        let sq: Vec<f64> = (0..v.len())
            .map(|i| {
                let d = (v[g.next(i, axis)] - v[i]) * inv_h;
                d * d
            })
            .collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o += 0.5 * (sq[i] + sq[g.prev(i, axis)]);
        }
    }
    Field::from_vec(g, out)
}

/// `sum_z d_z(A_z(w) D_z phi)`
fn weighted_divergence(w: &[f64], phi: &Field) -> Field {
    let g = *phi.grid();
    let v = phi.values();
    let mut out = vec![0.0; v.len()];
    for axis in 0..g.dim() {
        let inv_h = 1.0 / g.h(axis);
        let flux: Vec<f64> = (0..v.len())
            .map(|i| {
                let j = g.next(i, axis);
                0.5 * (w[i] + w[j]) * (v[j] - v[i]) * inv_h
            })
            .collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o += (flux[i] - flux[g.prev(i, axis)]) * inv_h;
        }
    }
    Field::from_vec(g, out)
}

fn sum_dot(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

fn sum(grid: &Grid, a: impl Iterator<Item = f64>) -> f64 {
    grid.cell_volume() * a.sum::<f64>()
}

struct Terms {
    convex: f64,
    concave: f64,
    grad_sq: f64,
    f_integral: f64,
}

fn terms(phi: &Field, pp: &PhysParams, want_ch: bool) -> Result<Terms> {
    let bf = BetaFields::new(phi)?;
    let g = phi.grid();
    let (eps2, w, lam) = (pp.eps * pp.eps, pp.func_weight(), pp.lam);
    let lap = laplacian(phi);
    let fgs = face_gradient_sq(phi);
    let grad_sq = grad_norm_sq(phi);
    let phi_sq = dot(phi, phi);

    let convex = 0.5 * eps2 * eps2 * dot(&lap, &lap)
        + 0.5 * sum_dot(g, &bf.b0, &bf.b0)
        + 0.5 * (lam * lam + lam * w) * phi_sq
        + eps2 * sum_dot(g, &bf.b1, fgs.values());
    let b_integral = sum(g, phi.values().iter().map(|&r| mixing_entropy_unchecked(r)));
    let concave = (0.5 * eps2 * w + lam * eps2) * grad_sq
        + lam * sum_dot(g, phi.values(), &bf.b0)
        + w * b_integral;
    let f_integral = if want_ch { b_integral - 0.5 * lam * phi_sq } else { 0.0 };
    Ok(Terms {
        convex,
        concave,
        grad_sq,
        f_integral,
    })
}

/// All energies of an admissible state.
pub fn energy_total(phi: &Field, pp: &PhysParams) -> Result<EnergyBreakdown> {
    let t = terms(phi, pp, true)?;
    let total = t.convex - t.concave;
    let ch = 0.5 * pp.eps * pp.eps * t.grad_sq + t.f_integral;
    Ok(EnergyBreakdown {
        total,
        convex: t.convex,
        concave: t.concave,
        ch,
        pfw: total + pp.func_weight() * ch,
    })
}

/// `E_c(phi)`
pub fn energy_convex(phi: &Field, pp: &PhysParams) -> Result<f64> {
    Ok(terms(phi, pp, false)?.convex)
}

/// `E_e(phi)`
pub fn energy_concave(phi: &Field, pp: &PhysParams) -> Result<f64> {
    Ok(terms(phi, pp, false)?.concave)
}

/// `delta E_c / delta phi`:
/// `eps^4 D^2 phi + beta beta' + eps^2 beta'' sum a(|D phi|^2) - 2 eps^2 sum d(A(beta') D phi) + lam (lam + eps^p eta) phi`
pub fn var_convex(phi: &Field, pp: &PhysParams) -> Result<Field> {
    let bf = BetaFields::new(phi)?;
    let (eps2, w, lam) = (pp.eps * pp.eps, pp.func_weight(), pp.lam);
    let bilap = laplacian(&laplacian(phi));
    let fgs = face_gradient_sq(phi);
    let div = weighted_divergence(&bf.b1, phi);
    let zero_order = lam * (lam + w);
    let v = phi.values();
    let out = (0..v.len())
        .map(|i| {
            eps2 * eps2 * bilap.values()[i]
                + bf.b0[i] * bf.b1[i]
                + eps2 * bf.b2[i] * fgs.values()[i]
                - 2.0 * eps2 * div.values()[i]
                + zero_order * v[i]
        })
        .collect();
    Ok(Field::from_vec(*phi.grid(), out))
}

/// `delta E_e / delta phi = -eps^2 (2 lam + eps^p eta) D phi + lam phi beta' + (lam + eps^p eta) beta`
pub fn var_concave(phi: &Field, pp: &PhysParams) -> Result<Field> {
    let bf = BetaFields::new(phi)?;
    let (eps2, w, lam) = (pp.eps * pp.eps, pp.func_weight(), pp.lam);
    let lap = laplacian(phi);
    let v = phi.values();
    let out = (0..v.len())
        .map(|i| {
            -eps2 * (2.0 * lam + w) * lap.values()[i] + lam * v[i] * bf.b1[i] + (lam + w) * bf.b0[i]
        })
        .collect();
    Ok(Field::from_vec(*phi.grid(), out))
}

/// `N_h(phi) = phi / dt - D_h (delta E_c / delta phi)`
pub fn nonlinear_map(phi: &Field, dt: f64, pp: &PhysParams) -> Result<Field> {
    let mut out = laplacian(&var_convex(phi, pp)?);
    out.scale(-1.0);
    out.axpy(1.0 / dt, phi);
    Ok(out)
}

/// `f^n = phi^n / dt - D_h (delta E_e / delta phi)(phi^n)`, so that
/// `N_h(phi) = f^n` is the step `(phi - phi^n) / dt = D_h mu`.
pub fn rhs_explicit(phi_n: &Field, dt: f64, pp: &PhysParams) -> Result<Field> {
    let mut out = laplacian(&var_concave(phi_n, pp)?);
    out.scale(-1.0);
    out.axpy(1.0 / dt, phi_n);
    Ok(out)
}

/// Discrete chemical potential of a step, `var_convex(new) - var_concave(old)`.
pub fn chemical_potential(phi_new: &Field, phi_old: &Field, pp: &PhysParams) -> Result<Field> {
    let mut mu = var_convex(phi_new, pp)?;
    mu.axpy(-1.0, &var_concave(phi_old, pp)?);
    Ok(mu)
}

/// `omega = -eps^2 D_h phi + f(phi)`
pub fn omega_field(phi: &Field, pp: &PhysParams) -> Result<Field> {
    ensure_admissible(phi)?;
    let lap = laplacian(phi);
    let eps2 = pp.eps * pp.eps;
    Ok(lap.zip_map(phi, |l, r| -eps2 * l + beta_unchecked(r) - pp.lam * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::grid::mean;
    use crate::potential::{beta_family, lambda_wells_09, mixing_family};
    use approx::assert_relative_eq;

    fn pp() -> PhysParams {
        PhysParams::new(0.5, 1.0, 3.0, 2).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let g = Grid::unit_square(6).unwrap();
        let z = Field::zeros(g);
        let e = energy_total(&z, &pp()).unwrap();
        assert_eq!(e, EnergyBreakdown { total: 0.0, convex: 0.0, concave: 0.0, ch: 0.0, pfw: 0.0 });
        assert!(var_convex(&z, &pp()).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(var_concave(&z, &pp()).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(omega_field(&z, &pp()).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_state_energy() {
        let g = Grid::unit_square(4).unwrap();
        let e = energy_total(&Field::constant(g, 0.5), &pp()).unwrap();
        let l3 = 3f64.ln();
        let b = mixing_family(0.5, &pp()).unwrap().0;
        let expected = 0.5 * l3 * l3 + 4.875 * 0.25 - 1.5 * l3 - 0.25 * b;
        assert_relative_eq!(e.total, expected, max_relative = 1e-13);
        assert_relative_eq!(e.total, 0.108900, epsilon = 1e-6);
        assert_relative_eq!(e.total, e.convex - e.concave, max_relative = 1e-15);
        assert_relative_eq!(e.pfw, e.total + 0.25 * e.ch, max_relative = 1e-14);
    }

    #[test]
    fn constant_state_derivatives() {
        let g = Grid::unit_square(4).unwrap();
        let p = pp();
        let w = p.func_weight();
        for c in [-0.7, 0.2, 0.85] {
            let phi = Field::constant(g, c);
            let (b, b1, _, _) = beta_family(c).unwrap();
            let vc = b * b1 + p.lam * (p.lam + w) * c;
            let ve = p.lam * c * b1 + (p.lam + w) * b;
            for &v in var_convex(&phi, &p).unwrap().values() {
                assert_relative_eq!(v, vc, max_relative = 1e-13);
            }
            for &v in var_concave(&phi, &p).unwrap().values() {
                assert_relative_eq!(v, ve, max_relative = 1e-13);
            }
            for &v in chemical_potential(&phi, &phi, &p).unwrap().values() {
                assert_relative_eq!(v, vc - ve, max_relative = 1e-12, epsilon = 1e-13);
            }
            let dt = 0.01;
            for &v in nonlinear_map(&phi, dt, &p).unwrap().values() {
                assert_relative_eq!(v, c / dt, max_relative = 1e-13);
            }
            for &v in rhs_explicit(&phi, dt, &p).unwrap().values() {
                assert_relative_eq!(v, c / dt, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn omega_vanishes_at_wells() {
        let g = Grid::unit_square(4).unwrap();
        let p = PhysParams::new(0.03, 4.0, lambda_wells_09(), 1).unwrap();
        for &v in omega_field(&Field::constant(g, 0.9), &p).unwrap().values() {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn mean_identities() {
        let g = Grid::new_2d([8, 6], [1.0, 0.75]).unwrap();
        let phi = Field::from_fn(g, |x| 0.3 + 0.5 * (6.0 * x[0]).sin() * (9.0 * x[1]).cos());
        let dt = 0.05;
        let m = mean(&phi);
        assert_relative_eq!(mean(&nonlinear_map(&phi, dt, &pp()).unwrap()), m / dt, max_relative = 1e-10);
        assert_relative_eq!(mean(&rhs_explicit(&phi, dt, &pp()).unwrap()), m / dt, max_relative = 1e-10);
    }

    #[test]
    fn inadmissible_inputs_rejected() {
        let g = Grid::new_1d(4, 1.0).unwrap();
        let bad = Field::new(g, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(energy_total(&bad, &pp()), Err(Error::Inadmissible { index: 1, .. })));
        assert!(var_convex(&bad, &pp()).is_err());
        assert!(var_concave(&bad, &pp()).is_err());
        assert!(nonlinear_map(&bad, 0.1, &pp()).is_err());
        assert!(rhs_explicit(&bad, 0.1, &pp()).is_err());
        assert!(omega_field(&bad, &pp()).is_err());
    }
}
