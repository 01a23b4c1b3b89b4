//! Time integration: single steps, fixed-step and adaptive drivers.
//!
//! Every accepted step is checked against the three structural properties of
//! the scheme: mass conservation, energy decay and strict admissibility. A
//! violation aborts with [`Error::Assertion`].
//!
//! The adaptive controller monitors the per-step changes
//! `r_E = |E(phi^{n+1}) - E(phi^n)| / |Omega|` and
//! `r_phi = ||phi^{n+1} - phi^n||_2 / sqrt(|Omega|)`.
//! If either exceeds `rate_hi` the step is redone with a smaller `dt`; if both
//! are below `rate_lo` the next step grows.

use crate::energy::{chemical_potential, energy_total, rhs_explicit, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, mean, norm, Field, Norm, SpectralWorkspace};
use crate::potential::PhysParams;
use crate::solver::{psd_solve_rhs, SolveReport, SolverConfig};

/// Relative bound on the drift of the mean from the initial state.
pub const MASS_TOLERANCE: f64 = 1e-10;
/// Relative bound on the change of the mean over a single step.
const STEP_MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub dt_max: f64,
    pub dt_min: f64,
    /// First trial step.
    pub dt_init: f64,
    pub rate_hi: f64,
    pub rate_lo: f64,
    pub grow: f64,
    pub shrink: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            dt_max: 2e-3,
            dt_min: 1e-8,
            dt_init: 1e-5,
            rate_hi: 1e-1,
            rate_lo: 1e-3,
            grow: 2.0,
            shrink: 0.5,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return bad("need 0 < dt_min <= dt_max");
        }
        if !(self.dt_init >= self.dt_min && self.dt_init <= self.dt_max) {
            return bad("dt_init must lie in [dt_min, dt_max]");
        }
        if !(self.rate_lo > 0.0 && self.rate_lo < self.rate_hi) {
            return bad("need 0 < rate_lo < rate_hi");
        }
        if !(self.grow > 1.0 && self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("need grow > 1 > shrink > 0");
        }
        Ok(())
    }
}

/// Diagnostics of one accepted step (or of the initial state, with `step == 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    /// Step size that produced this state; 0 for the initial record.
    pub dt: f64,
    pub energy: EnergyBreakdown,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    pub h2norm: f64,
    /// `||grad_h mu^{n+1}||_2`; 0 for the initial record.
    pub gradmu: f64,
    pub psd_iters: usize,
    pub residual: f64,
    /// Per-step energy change monitored by the adaptive controller.
    pub rate_energy: f64,
    /// Per-step phase change monitored by the adaptive controller.
    pub rate_phase: f64,
    /// Attempts discarded before this step was accepted.
    pub redone: usize,
}

impl DiagnosticsRecord {
    /// Record of a state that was not produced by a step.
    pub fn initial(phi: &Field, t: f64, pp: &PhysParams) -> Result<Self> {
        Ok(DiagnosticsRecord {
            step: 0,
            t,
            dt: 0.0,
            energy: energy_total(phi, pp)?,
            mass: mean(phi),
            min: phi.min(),
            max: phi.max(),
            h2norm: norm(phi, Norm::H2)?,
            gradmu: 0.0,
            psd_iters: 0,
            residual: 0.0,
            rate_energy: 0.0,
            rate_phase: 0.0,
            redone: 0,
        })
    }

    /// `1 - ||phi||_inf`
    pub fn margin(&self) -> f64 {
        1.0 - self.min.abs().max(self.max.abs())
    }
}

/// Everything a driver needs from one solved step.
struct Solved {
    phi: Field,
    record: DiagnosticsRecord,
}

fn assertion(step: usize, t: f64, quantity: &'static str, value: f64, bound: f64) -> Error {
    Error::Assertion { step, t, quantity, value, bound }
}

/// Solves one step from `phi_n` (energy `e_n`) and checks it. `forcing` is
/// added to the right-hand side and disables the energy checks.
#[allow(clippy::too_many_arguments)]
fn solve_step(
    phi_n: &Field,
    e_n: &EnergyBreakdown,
    step: usize,
    t_new: f64,
    dt: f64,
    forcing: Option<&Field>,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Result<Solved> {
    let mut f = rhs_explicit(phi_n, dt, pp)?;
    if let Some(s) = forcing {
        f.axpy(1.0, s);
    }
    let (phi, rep): (Field, SolveReport) = psd_solve_rhs(phi_n, &f, dt, pp, cfg, ws)?;

    let (idx, max_abs) = phi.argmax_abs();
    if !(max_abs < 1.0) {
        return Err(Error::Inadmissible { max_abs, index: idx, bound: 1.0 });
    }
    let m_old = mean(phi_n);
    let m_new = mean(&phi);
    let mass_bound = STEP_MASS_TOLERANCE * m_old.abs().max(1.0);
    if (m_new - m_old).abs() > mass_bound {
        return Err(assertion(step, t_new, "mass change", (m_new - m_old).abs(), mass_bound));
    }

    let energy = energy_total(&phi, pp)?;
    let mu = chemical_potential(&phi, phi_n, pp)?;
    let gradmu_sq = grad_norm_sq(&mu);
    if forcing.is_none() {
        let slack = 10.0 * cfg.tol_res * e_n.total.abs().max(1.0);
        let de = energy.total - e_n.total;
        if de > slack {
            return Err(assertion(step, t_new, "energy increase", de, slack));
        }
        let dissipation = de + dt * gradmu_sq;
        if dissipation > slack {
            return Err(assertion(step, t_new, "energy dissipation defect", dissipation, slack));
        }
    }

    let vol = phi.grid().volume();
    let mut diff = phi.clone();
    diff.axpy(-1.0, phi_n);
    let record = DiagnosticsRecord {
        step,
        t: t_new,
        dt,
        energy,
        mass: m_new,
        min: phi.min(),
        max: phi.max(),
        h2norm: norm(&phi, Norm::H2)?,
        gradmu: gradmu_sq.sqrt(),
        psd_iters: rep.iterations,
        residual: rep.residual,
        rate_energy: (energy.total - e_n.total).abs() / vol,
        rate_phase: norm(&diff, Norm::L2)? / vol.sqrt(),
        redone: 0,
    };
    Ok(Solved { phi, record })
}

/// One step of the scheme. The record carries `step = 1` and `t = dt`.
pub fn step(
    phi_n: &Field,
    dt: f64,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Result<(Field, DiagnosticsRecord)> {
    check_dt(dt)?;
    let e_n = energy_total(phi_n, pp)?;
    let s = solve_step(phi_n, &e_n, 1, dt, dt, None, pp, cfg, ws)?;
    Ok((s.phi, s.record))
}

/// One step with an explicit source added: `N_h(phi) = f^n + source`.
/// The source must have zero mean; energy checks are skipped.
pub fn step_forced(
    phi_n: &Field,
    dt: f64,
    source: &Field,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Result<(Field, DiagnosticsRecord)> {
    check_dt(dt)?;
    phi_n.grid().check_same(source.grid())?;
    let e_n = energy_total(phi_n, pp)?;
    let s = solve_step(phi_n, &e_n, 1, dt, dt, Some(source), pp, cfg, ws)?;
    Ok((s.phi, s.record))
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("time step must be positive, got {dt}")))
    }
}

fn check_global_mass(rec: &DiagnosticsRecord, m0: f64) -> Result<()> {
    let bound = MASS_TOLERANCE * m0.abs().max(1.0);
    let drift = (rec.mass - m0).abs();
    if drift > bound {
        return Err(assertion(rec.step, rec.t, "mass drift", drift, bound));
    }
    Ok(())
}

/// `n_steps` steps of constant size `dt` starting at `t = 0`.
pub fn advance_fixed(
    phi: &Field,
    dt: f64,
    n_steps: usize,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Result<(Vec<DiagnosticsRecord>, Field)> {
    let mut records = Vec::with_capacity(n_steps);
    let last = advance_fixed_with(phi, 0.0, dt, n_steps, pp, cfg, ws, |r, _| {
        records.push(*r);
        Ok(())
    })?;
    Ok((records, last))
}

/// [`advance_fixed`] from time `t0`, reporting each accepted step to `observer`.
#[allow(clippy::too_many_arguments)]
pub fn advance_fixed_with(
    phi: &Field,
    t0: f64,
    dt: f64,
    n_steps: usize,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
    mut observer: impl FnMut(&DiagnosticsRecord, &Field) -> Result<()>,
) -> Result<Field> {
    if n_steps > 0 {
        check_dt(dt)?;
    }
    let m0 = mean(phi);
    let mut cur = phi.clone();
    let mut e = energy_total(&cur, pp)?;
    for k in 1..=n_steps {
        let t = t0 + k as f64 * dt;
        let s = solve_step(&cur, &e, k, t, dt, None, pp, cfg, ws)?;
        check_global_mass(&s.record, m0)?;
        observer(&s.record, &s.phi)?;
        e = s.record.energy;
        cur = s.phi;
    }
    Ok(cur)
}

/// Forced fixed-step integration: `floor((t_end - t0) / dt)` full steps plus
/// a final partial step landing on `t_end`. `source(t)` is evaluated at the
/// new time level of each step.
pub fn advance_forced(
    phi: &Field,
    t0: f64,
    t_end: f64,
    dt: f64,
    pp: &PhysParams,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
    mut source: impl FnMut(f64) -> Result<Field>,
) -> Result<(Field, usize)> {
    check_dt(dt)?;
    let span = t_end - t0;
    if !(span >= 0.0) {
        return Err(Error::Config(format!("t_end {t_end} precedes t0 {t0}")));
    }
    let full = (span / dt * (1.0 + 1e-12)).floor() as usize;
    let mut cur = phi.clone();
    let mut steps = 0;
    let mut t = t0;
    let mut take = |cur: &Field, h: f64, t_new: f64, k: usize, ws: &mut SpectralWorkspace| -> Result<Field> {
        let s = source(t_new)?;
        let e = energy_total(cur, pp)?;
        Ok(solve_step(cur, &e, k, t_new, h, Some(&s), pp, cfg, ws)?.phi)
    };
    for k in 1..=full {
        let t_new = if k == full && (t_end - (t0 + k as f64 * dt)).abs() <= 1e-12 * t_end.abs().max(1.0) {
            t_end
        } else {
            t0 + k as f64 * dt
        };
        cur = take(&cur, t_new - t, t_new, k, ws)?;
        t = t_new;
        steps += 1;
    }
    let rest = t_end - t;
    if rest > 1e-12 * t_end.abs().max(1.0) {
        cur = take(&cur, rest, t_end, steps + 1, ws)?;
        steps += 1;
    }
    Ok((cur, steps))
}

/// Decision of the adaptive controller on a trial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// Discard and retry with this step size.
    Redo(f64),
    /// Keep the step; use this size next.
    Accept(f64),
}

/// Controller rule applied to the monitored per-step changes of a trial step of size `dt`.
pub fn classify(rate_energy: f64, rate_phase: f64, dt: f64, acfg: &AdaptiveConfig) -> Verdict {
    if rate_energy.max(rate_phase) > acfg.rate_hi {
        Verdict::Redo(dt * acfg.shrink)
    } else if rate_energy < acfg.rate_lo && rate_phase < acfg.rate_lo {
        Verdict::Accept((dt * acfg.grow).min(acfg.dt_max))
    } else {
        Verdict::Accept(dt)
    }
}

/// Adaptive integration from `t = 0` to `t_end`.
pub fn advance_adaptive(
    phi: &Field,
    t_end: f64,
    pp: &PhysParams,
    acfg: &AdaptiveConfig,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
) -> Result<(Vec<DiagnosticsRecord>, Field)> {
    let mut records = Vec::new();
    let last = advance_adaptive_with(phi, 0.0, t_end, pp, acfg, cfg, ws, |r, _| {
        records.push(*r);
        Ok(())
    })?;
    Ok((records, last))
}

/// [`advance_adaptive`] from `t0`, reporting each accepted step to `observer`.
#[allow(clippy::too_many_arguments)]
pub fn advance_adaptive_with(
    phi: &Field,
    t0: f64,
    t_end: f64,
    pp: &PhysParams,
    acfg: &AdaptiveConfig,
    cfg: &SolverConfig,
    ws: &mut SpectralWorkspace,
    mut observer: impl FnMut(&DiagnosticsRecord, &Field) -> Result<()>,
) -> Result<Field> {
    acfg.validate()?;
    let m0 = mean(phi);
    let mut cur = phi.clone();
    let mut e = energy_total(&cur, pp)?;
    let mut t = t0;
    let mut dt = acfg.dt_init;
    let mut k = 0;
    let mut redone = 0;
    let eps_t = 1e-12 * t_end.abs().max(1.0);
    while t_end - t > eps_t {
        let remaining = t_end - t;
        let last = dt >= remaining - eps_t;
        let h = if last { remaining } else { dt };
        let t_new = if last { t_end } else { t + h };
        let shrink_to = |reason: String| -> Result<f64> {
            let next = h * acfg.shrink;
            if next < acfg.dt_min {
                return Err(Error::StepTooSmall { t, dt: next, dt_min: acfg.dt_min, reason });
            }
            Ok(next)
        };
        let s = match solve_step(&cur, &e, k + 1, t_new, h, None, pp, cfg, ws) {
            Ok(s) => s,
            Err(err) if err.is_solver_failure() => {
                dt = shrink_to(err.to_string())?;
                redone += 1;
                continue;
            }
            Err(err) => return Err(err),
        };
        match classify(s.record.rate_energy, s.record.rate_phase, h, acfg) {
            Verdict::Redo(_) => {
                dt = shrink_to(format!(
                    "per-step change (energy {:e}, phase {:e}) above {:e}",
                    s.record.rate_energy, s.record.rate_phase, acfg.rate_hi
                ))?;
                redone += 1;
                continue;
            }
            Verdict::Accept(next) => {
                // a clipped final step does not define the controller state
                if !last || h == dt {
                    dt = next;
                }
            }
        }
        k += 1;
        let mut rec = s.record;
        rec.redone = redone;
        redone = 0;
        check_global_mass(&rec, m0)?;
        observer(&rec, &s.phi)?;
        e = rec.energy;
        cur = s.phi;
        t = t_new;
    }
    Ok(cur)
}
