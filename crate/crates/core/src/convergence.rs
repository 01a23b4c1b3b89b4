//! Manufactured-solution convergence study.

use crate::dynamics::advance_forced;
use crate::error::{Error, Result};
use crate::grid::{norm, Grid, Norm, SpectralWorkspace};
use crate::potential::PhysParams;
use crate::scenarios::{manufactured_forcing, manufactured_state};
use crate::solver::SolverConfig;

/// How the time step is tied to the mesh size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// `dt = c h^2`
    Parabolic(f64),
    /// `dt = c h`
    Linear(f64),
}

impl Coupling {
    pub fn dt(&self, h: f64) -> f64 {
        match *self {
            Coupling::Parabolic(c) => c * h * h,
            Coupling::Linear(c) => c * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// `||P_h Phi(T) - phi^M||_2`
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub coupling: Coupling,
    pub t_end: f64,
    pub phys: PhysParams,
    pub solver: SolverConfig,
    pub refine: usize,
}

impl StudyConfig {
    /// Model constants and horizon of the standard study.
    pub fn standard(coupling: Coupling) -> Self {
        StudyConfig {
            coupling,
            t_end: 0.32,
            phys: PhysParams { eps: 0.5, eta: 1.0, lam: 3.0, p: 2 },
            solver: SolverConfig::default(),
            refine: 4,
        }
    }
}

/// Largest uniform step not exceeding `nominal` that divides `t_end`, with the step count.
pub fn uniform_steps(t_end: f64, nominal: f64) -> (f64, usize) {
    if t_end <= 0.0 {
        return (nominal, 0);
    }
    let m = ((t_end / nominal) * (1.0 - 1e-12)).ceil().max(1.0);
    (t_end / m, m as usize)
}

/// Runs the forced scheme on an `n x n` unit-square grid and measures the error at `t_end`.
pub fn run_case(n: usize, cfg: &StudyConfig) -> Result<ConvergenceRow> {
    cfg.phys.validate()?;
    cfg.solver.validate()?;
    let grid = Grid::unit_square(n)?;
    let h = grid.h(0);
    let (dt, _) = uniform_steps(cfg.t_end, cfg.coupling.dt(h));
    let mut ws = SpectralWorkspace::new(grid);
    let phi0 = manufactured_state(&grid, 0.0)?;
    let (phi, steps) = advance_forced(&phi0, 0.0, cfg.t_end, dt, &cfg.phys, &cfg.solver, &mut ws, |t| {
        manufactured_forcing(&grid, t, &cfg.phys, cfg.refine)
    })?;
    let mut err = manufactured_state(&grid, cfg.t_end)?;
    err.axpy(-1.0, &phi);
    Ok(ConvergenceRow { n, h, dt, steps, error: norm(&err, Norm::L2)? })
}

/// Least-squares slope of `ln(error)` against `ln(n)`; `None` for fewer than two rows.
pub fn fit_slope(rows: &[ConvergenceRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.error.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Slopes between consecutive rows.
pub fn pair_slopes(rows: &[ConvergenceRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| (w[1].error / w[0].error).ln() / (w[1].n as f64 / w[0].n as f64).ln())
        .collect()
}

/// Runs every `n` in order.
pub fn run_study(ns: &[usize], cfg: &StudyConfig) -> Result<Vec<ConvergenceRow>> {
    if ns.is_empty() {
        return Err(Error::Config("empty list of grid sizes".into()));
    }
    ns.iter().map(|&n| run_case(n, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(n: usize, error: f64) -> ConvergenceRow {
        ConvergenceRow { n, h: 1.0 / n as f64, dt: 0.0, steps: 0, error }
    }

    #[test]
    fn slope_of_exact_power_law() {
        let rows: Vec<_> = [8, 16, 32, 64].iter().map(|&n| row(n, 3.0 * (n as f64).powf(-2.0))).collect();
        assert_relative_eq!(fit_slope(&rows).unwrap(), -2.0, max_relative = 1e-12);
        for s in pair_slopes(&rows) {
            assert_relative_eq!(s, -2.0, max_relative = 1e-12);
        }
        assert_eq!(fit_slope(&rows[..1]), None);
        assert!(pair_slopes(&rows[..1]).is_empty());
    }

    #[test]
    fn couplings() {
        assert_relative_eq!(Coupling::Parabolic(16.0).dt(0.0625), 0.0625);
        assert_relative_eq!(Coupling::Linear(1.0).dt(0.0625), 0.0625);
        let (dt, m) = uniform_steps(0.32, 1.0 / 64.0);
        assert_eq!(m, 21);
        assert_relative_eq!(dt, 0.32 / 21.0);
        assert_eq!(uniform_steps(0.32, 0.02).1, 16);
    }
}
