//! Preconditioned steepest descent (PSD) for the per-step system `N_h(phi) = f`.
//!
//! Solving `N_h(phi) = f` on the mass-constrained affine space is the same as
//! minimizing the strictly convex objective
//!
//! ```text
//! J(phi) = (dt/2) ||phi/dt - f||_{-1,h}^2 + E_c(phi),
//! ```
//!
//! whose `L^2` gradient satisfies `-Delta_h grad J = N_h(phi) - f`. The search
//! direction solves `L_h d = r - mean(r)` with the constant-coefficient operator
//! `L_h = 1/dt - eps^4 D^3 + eps^2 theta1 D^2 - (lam^2 + lam eps^p eta + theta2) D`,
//! and the step length is the exact minimizer of `J` along `d`, i.e. the root of
//! `g(alpha) = <N_h(phi + alpha d) - f, (-Delta_h)^{-1} d>`.

use crate::energy::{energy_convex, nonlinear_map};
use crate::error::{Error, Result};
use crate::grid::{dot, laplacian, mean, norm, Field, Norm, SpectralWorkspace};
use crate::potential::{ensure_admissible, PhysParams};

/// Relative bracket width at which the line search accepts its estimate.
const ALPHA_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub theta1: f64,
    pub theta2: f64,
    /// Relative residual target: `||N(phi) - f||_2 <= tol_res * max(1, ||f||_2)`.
    pub tol_res: f64,
    pub max_iter: usize,
    /// Line-search target `|g(alpha)| <= ls_tol * |g(0)|`.
    pub ls_tol: f64,
    pub ls_max: usize,
    /// Trial states keep `1 - |phi + alpha d| >= ls_margin * (1 - |phi|)`.
    pub ls_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta1: 1.0,
            theta2: 1.0,
            tol_res: 1e-9,
            max_iter: 500,
            ls_tol: 1e-6,
            ls_max: 100,
            ls_margin: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.theta1 >= 0.0 && self.theta2 >= 0.0) {
            return bad("theta1 and theta2 must be non-negative");
        }
        if !(self.tol_res > 0.0) {
            return bad("tol_res must be positive");
        }
        if self.max_iter < 1 || self.ls_max < 1 {
            return bad("iteration caps must be at least 1");
        }
        if !(self.ls_tol > 0.0) {
            return bad("ls_tol must be positive");
        }
        if !(self.ls_margin > 0.0 && self.ls_margin < 1.0) {
            return bad("ls_margin must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final `||N(phi) - f||_2`.
    pub residual: f64,
    /// Residual threshold that was met.
    pub target: f64,
    pub ls_evals: usize,
    /// `1 - ||phi||_inf` of the returned state.
    pub margin: f64,
    /// The residual stopped at its floating-point floor above `target`:
    /// the last update was below the resolution of `phi`.
    pub at_roundoff: bool,
}

/// Fourier symbol of `L_h` at eigenvalue `sigma` of `-Delta_h`.
pub fn precond_symbol(sigma: f64, dt: f64, pp: &PhysParams, cfg: &SolverConfig) -> f64 {
    let eps2 = pp.eps * pp.eps;
    let c = pp.lam * pp.lam + pp.lam * pp.func_weight() + cfg.theta2;
    1.0 / dt + sigma * (c + sigma * (eps2 * cfg.theta1 + sigma * eps2 * eps2))
}

/// `L_h d` evaluated with stencils.
pub fn precond_apply(d: &Field, dt: f64, pp: &PhysParams, cfg: &SolverConfig) -> Field {
    let eps2 = pp.eps * pp.eps;
    let c = pp.lam * pp.lam + pp.lam * pp.func_weight() + cfg.theta2;
    let l1 = laplacian(d);
    let l2 = laplacian(&l1);
    let l3 = laplacian(&l2);
    let mut out = d.clone();
    out.scale(1.0 / dt);
    out.axpy(-eps2 * eps2, &l3);
    out.axpy(eps2 * cfg.theta1, &l2);
    out.axpy(-c, &l1);
    out
}

/// Mean-zero `d` with `L_h d = r - mean(r)`.
pub fn precond_solve(
    r: &Field,
    dt: f64,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Field {
    let mut d = ws.apply_symbol(r, |s| {
        if s > 0.0 {
            1.0 / precond_symbol(s, dt, pp, cfg)
        } else {
            0.0
        }
    });
    let m = mean(&d);
    d.add_constant(-m);
    d
}

/// PSD objective `J(phi) = (dt/2)||phi/dt - f||_{-1,h}^2 + E_c(phi)`.
pub fn psd_objective(
    phi: &Field,
    f: &Field,
    dt: f64,
    pp: &PhysParams,
    ws: &mut SpectralWorkspace,
) -> Result<f64> {
    let mut g = phi.clone();
    g.scale(1.0 / dt);
    g.axpy(-1.0, f);
    let m = mean(&g);
    g.add_constant(-m);
    let psi = ws.inv_neg_laplacian_unchecked(&g);
    Ok(0.5 * dt * dot(&g, &psi) + energy_convex(phi, pp)?)
}

/// Result of a line minimization.
#[derive(Debug, Clone)]
pub struct LineStep {
    pub alpha: f64,
    pub evals: usize,
    /// `N_h(phi + alpha d)`, when it was evaluated.
    pub n_at_alpha: Option<Field>,
}

/// Largest `alpha >= 0` keeping `||phi + alpha d||_inf <= 1 - margin (1 - ||phi||_inf)`.
pub fn admissible_step_bound(phi: &Field, d: &Field, margin: f64) -> f64 {
    let bound = 1.0 - margin * (1.0 - phi.max_abs());
    phi.values()
        .iter()
        .zip(d.values())
        .filter(|(_, &di)| di != 0.0)
        .map(|(&p, &di)| if di > 0.0 { (bound - p) / di } else { (-bound - p) / di })
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

struct LineProblem<'a> {
    phi: &'a Field,
    d: &'a Field,
    psi_d: &'a Field,
    f: &'a Field,
    dt: f64,
    pp: &'a PhysParams,
    evals: usize,
}

impl LineProblem<'_> {
    fn trial(&self, alpha: f64) -> Field {
        let mut x = self.phi.clone();
        x.axpy(alpha, self.d);
        x
    }

    fn eval(&mut self, alpha: f64) -> Result<(f64, Field)> {
        Ok(self.eval_with_noise(alpha)?.0)
    }

    /// `g(alpha)`, `N_h` at the trial point and the cancellation level of `g`.
    fn eval_with_noise(&mut self, alpha: f64) -> Result<((f64, Field), f64)> {
        self.evals += 1;
        let n = nonlinear_map(&self.trial(alpha), self.dt, self.pp)?;
        let (np, fp) = (dot(&n, self.psi_d), dot(self.f, self.psi_d));
        let noise = 64.0 * f64::EPSILON * (np.abs() + fp.abs());
        Ok(((np - fp, n), noise))
    }
}

/// `g(alpha) = <N_h(phi + alpha d) - f, (-Delta_h)^{-1} d>`.
pub fn line_derivative(
    phi: &Field,
    d: &Field,
    f: &Field,
    alpha: f64,
    dt: f64,
    pp: &PhysParams,
    ws: &mut SpectralWorkspace,
) -> Result<f64> {
    let psi_d = ws.inv_neg_laplacian_unchecked(d);
    let mut lp = LineProblem { phi, d, psi_d: &psi_d, f, dt, pp, evals: 0 };
    Ok(lp.eval(alpha)?.0)
}

/// Exact minimization of `J` along `d`: bracket by doubling from `alpha = 1`
/// within the admissible interval, then safeguarded regula falsi.
pub fn line_minimize(
    phi: &Field,
    d: &Field,
    f: &Field,
    dt: f64,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Result<LineStep> {
    ensure_admissible(phi)?;
    let psi_d = ws.inv_neg_laplacian_unchecked(d);
    let n0 = nonlinear_map(phi, dt, pp)?;
    line_search(phi, &n0, d, &psi_d, f, dt, pp, cfg)
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    phi: &Field,
    n0: &Field,
    d: &Field,
    psi_d: &Field,
    f: &Field,
    dt: f64,
    pp: &PhysParams,
    cfg: &SolverConfig,
) -> Result<LineStep> {
    let zero = LineStep { alpha: 0.0, evals: 0, n_at_alpha: None };
    if d.values().iter().all(|&v| v == 0.0) {
        return Ok(zero);
    }
    let mut lp = LineProblem { phi, d, psi_d, f, dt, pp, evals: 0 };
    let g0 = dot(n0, psi_d) - dot(f, psi_d);
    let tol = cfg.ls_tol * g0.abs();
    let alpha_max = admissible_step_bound(phi, d, cfg.ls_margin);
    if g0 >= 0.0 || alpha_max == 0.0 {
        return Ok(zero);
    }
    // bracket
    let (mut a, mut ga) = (0.0, g0);
    let mut b = alpha_max.min(1.0);
    let ((mut gb, mut nb), mut noise) = lp.eval_with_noise(b)?;
    while gb < 0.0 {
        if gb.abs() <= tol.max(noise) {
            return Ok(LineStep { alpha: b, evals: lp.evals, n_at_alpha: Some(nb) });
        }
        if b >= alpha_max {
            // minimizer sits beyond the safety margin; take the constrained optimum
            return Ok(LineStep { alpha: b, evals: lp.evals, n_at_alpha: Some(nb) });
        }
        if lp.evals >= cfg.ls_max {
            return Err(Error::LineSearch {
                evaluations: lp.evals,
                reason: format!("no sign change of g up to alpha = {b:e}"),
            });
        }
        a = b;
        ga = gb;
        b = (2.0 * b).min(alpha_max);
        ((gb, nb), noise) = lp.eval_with_noise(b)?;
    }
    if gb <= tol.max(noise) {
        return Ok(LineStep { alpha: b, evals: lp.evals, n_at_alpha: Some(nb) });
    }

    // Illinois regula falsi on [a, b] with g(a) < 0 < g(b)
    let mut side = 0i8;
    let mut width = b - a;
    let mut bisect = false;
    loop {
        if lp.evals >= cfg.ls_max {
            return Err(Error::LineSearch {
                evaluations: lp.evals,
                reason: format!("bracket [{a:e}, {b:e}] not resolved"),
            });
        }
        let mut x = b - gb * (b - a) / (gb - ga);
        if bisect || !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let ((gx, nx), noise) = lp.eval_with_noise(x)?;
        // below these levels further refinement only chases round-off in g
        if gx.abs() <= tol.max(noise) || (b - a) <= ALPHA_RTOL * b {
            return Ok(LineStep { alpha: x, evals: lp.evals, n_at_alpha: Some(nx) });
        }
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        // fall back to bisection when the bracket stops halving
        bisect = b - a > 0.5 * width;
        width = b - a;
    }
}

/// Solves `N_h(phi) = f` by PSD starting from `phi_init`.
///
/// `f - phi_init / dt` must be mean-zero up to round-off: every update
/// direction is mean-zero, so the iterates keep the mass of `phi_init`.
pub fn psd_solve_rhs(
    phi_init: &Field,
    f: &Field,
    dt: f64,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Result<(Field, SolveReport)> {
    ensure_admissible(phi_init)?;
    let target = cfg.tol_res * norm(f, Norm::L2)?.max(1.0);
    let mut phi = phi_init.clone();
    let mut n_phi = nonlinear_map(&phi, dt, pp)?;
    let mut ls_evals = 0;
    let mut iterations = 0;
    let mut stalled = false;
    loop {
        let mut r = f.clone();
        r.axpy(-1.0, &n_phi);
        let residual = norm(&r, Norm::L2)?;
        if residual <= target || stalled {
            return Ok((
                phi.clone(),
                SolveReport {
                    iterations,
                    residual,
                    target,
                    ls_evals,
                    margin: 1.0 - phi.max_abs(),
                    at_roundoff: residual > target,
                },
            ));
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NonConvergence { iterations, residual, target });
        }
        let d = precond_solve(&r, dt, pp, cfg, ws);
        let psi_d = ws.inv_neg_laplacian_unchecked(&d);
        let step = line_search(&phi, &n_phi, &d, &psi_d, f, dt, pp, cfg)?;
        ls_evals += step.evals;
        iterations += 1;
        if step.alpha == 0.0 {
            // no descent left at round-off level
            return Err(Error::NonConvergence { iterations, residual, target });
        }
        stalled = step.alpha * d.max_abs() <= 4.0 * f64::EPSILON * phi.max_abs();
        phi.axpy(step.alpha, &d);
        n_phi = match step.n_at_alpha {
            Some(n) => n,
            None => nonlinear_map(&phi, dt, pp)?,
        };
    }
}

/// One implicit step of the scheme: solves `N_h(phi) = f^n` from `phi^n`.
pub fn psd_solve(
    phi_n: &Field,
    dt: f64,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Result<(Field, SolveReport)> {
    let f = crate::energy::rhs_explicit(phi_n, dt, pp)?;
    psd_solve_rhs(phi_n, &f, dt, pp, cfg, ws)
}
