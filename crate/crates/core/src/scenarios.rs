//! Initial conditions, manufactured solution and named presets.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{mean, Field, Grid, PeriodicFft};
use crate::potential::{beta_family, lambda_wells_09, PhysParams};

/// Ring amplitude of the pearling profile.
pub const PEARL_AMPLITUDE: f64 = 1.8;
/// Background value of the pearling profile.
pub const PEARL_OFFSET: f64 = -0.9;
pub const PEARL_RADIUS: f64 = 0.42;
pub const PEARL_CENTER: [f64; 2] = [0.5, 0.5];

/// Least common x-period of the two meandering interfaces.
pub const MEANDER_PERIOD: f64 = 30.0;
/// Half-height needed to contain both interfaces.
pub const MEANDER_MIN_HALF_HEIGHT: f64 = 6.9;

/// Name of the generator behind [`init_spinodal`].
pub const RNG_NAME: &str = "ChaCha8Rng";

fn require_unit_square(grid: &Grid, what: &str) -> Result<()> {
    if grid.dim() == 2 && grid.len(0) == 1.0 && grid.len(1) == 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} needs the 2D unit square")))
    }
}

/// `1.8 / cosh((|x - c| - 0.42) / (ell eps)) - 0.9`
pub fn pearling_profile(x: [f64; 2], ell: f64, eps: f64) -> f64 {
    let r = (x[0] - PEARL_CENTER[0]).hypot(x[1] - PEARL_CENTER[1]);
    PEARL_AMPLITUDE / ((r - PEARL_RADIUS) / (ell * eps)).cosh() + PEARL_OFFSET
}

pub fn init_pearling(grid: &Grid, ell: f64, eps: f64) -> Result<Field> {
    require_unit_square(grid, "pearling")?;
    if !(ell > 0.0 && eps > 0.0) {
        return Err(Error::Config(format!("pearling needs ell > 0 and eps > 0, got {ell}, {eps}")));
    }
    Ok(Field::from_fn(*grid, |x| pearling_profile(x, ell, eps)))
}

/// Stripe profile in centred coordinates (`y` in `(-H/2, H/2)`).
pub fn meandering_profile(x: f64, y: f64) -> f64 {
    if y > 0.5 * (4.0 * PI * x / 12.0).sin() + 6.4 || y < 0.5 * (4.0 * PI * x / 15.0).sin() - 5.6 {
        -0.9
    } else {
        0.9
    }
}

/// Meandering stripe on `(0, Lx) x (-Ly/2, Ly/2)`; grid coordinates are
/// shifted down by `Ly/2`.
pub fn init_meandering(grid: &Grid) -> Result<Field> {
    if grid.dim() != 2 {
        return Err(Error::Config("meandering needs a 2D grid".into()));
    }
    let periods = grid.len(0) / MEANDER_PERIOD;
    if (periods - periods.round()).abs() > 1e-9 || periods.round() < 1.0 {
        return Err(Error::Config(format!(
            "meandering x-length {} is not a multiple of {MEANDER_PERIOD}",
            grid.len(0)
        )));
    }
    let half = 0.5 * grid.len(1);
    if half <= MEANDER_MIN_HALF_HEIGHT {
        return Err(Error::Config(format!(
            "meandering y-length {} must exceed {}",
            grid.len(1),
            2.0 * MEANDER_MIN_HALF_HEIGHT
        )));
    }
    Ok(Field::from_fn(*grid, |x| meandering_profile(x[0], x[1] - half)))
}

/// `0.5 + 0.01 (2 r - 1)` with `r` uniform on `[0, 1)` from a seeded ChaCha8 stream.
pub fn init_spinodal(grid: &Grid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..grid.cells())
        .map(|_| 0.5 + 0.01 * (2.0 * rng.gen::<f64>() - 1.0))
        .collect();
    Field::from_vec(*grid, v)
}

/// `Phi(x, y, t) = sin(2 pi x) cos(2 pi y) cos(t) / pi`
pub fn manufactured_value(x: [f64; 2], t: f64) -> f64 {
    (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos() * t.cos() / PI
}

pub fn manufactured_state(grid: &Grid, t: f64) -> Result<Field> {
    require_unit_square(grid, "the manufactured solution")?;
    Ok(Field::from_fn(*grid, |x| manufactured_value(x, t)))
}

/// Nonlinear part of the continuous chemical potential of the manufactured
/// solution at a point. The linear part is handled in closed form.
fn manufactured_mu_nonlinear(x: [f64; 2], t: f64, pp: &PhysParams) -> Result<f64> {
    let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
    let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
    let a = t.cos() / PI;
    let phi = a * sx * cy;
    let grad_sq = (2.0 * PI * a).powi(2) * ((cx * cy).powi(2) + (sx * sy).powi(2));
    let lap = -MMS_K2 * phi;
    let (b0, b1, b2, _) = beta_family(phi)?;
    let lap_beta = b1 * lap + b2 * grad_sq;
    let (eps2, w, lam) = (pp.eps * pp.eps, pp.func_weight(), pp.lam);
    Ok(b0 * b1 + eps2 * b2 * grad_sq - 2.0 * eps2 * lap_beta - lam * phi * b1 - (lam + w) * b0)
}

/// Squared wavenumber of the manufactured mode.
const MMS_K2: f64 = 8.0 * PI * PI;

/// Multiplier of `Phi` in the linear part `eps^4 Lap^2 + eps^2 (2 lam + w) Lap + lam (lam + w)` of `mu`.
fn manufactured_linear_symbol(pp: &PhysParams) -> f64 {
    let (eps2, w, lam) = (pp.eps * pp.eps, pp.func_weight(), pp.lam);
    eps2 * eps2 * MMS_K2 * MMS_K2 - eps2 * (2.0 * lam + w) * MMS_K2 + lam * (lam + w)
}

/// Source `S = dPhi/dt - Laplacian mu(Phi)` at the cell centres of `grid`.
///
/// The nonlinear part of `mu` is sampled on a grid refined by `refine`; its
/// Laplacian is taken spectrally there and the result is interpolated
/// trigonometrically to the coarse centres.
pub fn manufactured_forcing(grid: &Grid, t: f64, pp: &PhysParams, refine: usize) -> Result<Field> {
    require_unit_square(grid, "the manufactured forcing")?;
    if refine < 4 {
        return Err(Error::Config(format!("refine factor must be at least 4, got {refine}")));
    }
    let fine = Grid::new_2d([grid.n(0) * refine, grid.n(1) * refine], [1.0, 1.0])?;
    let mut buf = Vec::with_capacity(fine.cells());
    for idx in 0..fine.cells() {
        buf.push(Complex64::new(manufactured_mu_nonlinear(fine.center(idx), t, pp)?, 0.0));
    }
    let mut fft = PeriodicFft::new(fine);
    fft.forward(&mut buf);
    let kx = fft.wavenumbers(0);
    let ky = fft.wavenumbers(1);
    // coarse centre i sits h (r - 1) / (2 r) beyond fine centre r i
    let shift = [grid.h(0) * (refine - 1) as f64 / (2.0 * refine as f64), grid.h(1) * (refine - 1) as f64 / (2.0 * refine as f64)];
    let n1 = fine.n(1);
    // modes at round-off level would only carry amplified noise
    let floor = 64.0 * f64::EPSILON * buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for (idx, c) in buf.iter_mut().enumerate() {
        if c.norm() <= floor {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let (i, j) = (idx / n1, idx % n1);
        let (wx, wy) = (2.0 * PI * kx[i] as f64, 2.0 * PI * ky[j] as f64);
        let phase = Complex64::from_polar(1.0, wx * shift[0] + wy * shift[1]);
        *c *= phase * -(wx * wx + wy * wy);
    }
    fft.inverse(&mut buf);
    let dt_phi = |x: [f64; 2]| -(2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos() * t.sin() / PI;
    let lin = -MMS_K2 * manufactured_linear_symbol(pp);
    let mut s = Field::from_fn(*grid, |_| 0.0);
    let nc1 = grid.n(1);
    for (idx, v) in s.values_mut().iter_mut().enumerate() {
        let (i, j) = (idx / nc1, idx % nc1);
        let lap_mu = buf[(i * refine) * n1 + j * refine].re;
        let x = grid.center(idx);
        *v = dt_phi(x) - lap_mu - lin * manufactured_value(x, t);
    }
    let m = mean(&s);
    s.add_constant(-m);
    Ok(s)
}

/// Number of 4-connected components of `{phi > threshold}` with periodic wrap.
pub fn count_components(phi: &Field, threshold: f64) -> usize {
    let g = phi.grid();
    let v = phi.values();
    let mut seen = vec![false; v.len()];
    let mut queue = VecDeque::new();
    let mut count = 0;
    for start in 0..v.len() {
        if seen[start] || v[start] <= threshold {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            for axis in 0..g.dim() {
                for nb in [g.next(c, axis), g.prev(c, axis)] {
                    if !seen[nb] && v[nb] > threshold {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Convergence,
    Pearling,
    Meandering,
    Spinodal,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Convergence,
        ScenarioKind::Pearling,
        ScenarioKind::Meandering,
        ScenarioKind::Spinodal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Convergence => "convergence",
            ScenarioKind::Pearling => "pearling",
            ScenarioKind::Meandering => "meandering",
            ScenarioKind::Spinodal => "spinodal",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{name}'")))
    }
}

/// A fully specified experiment: grid, model constants, initial data and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n: [usize; 2],
    pub len: [f64; 2],
    pub phys: PhysParams,
    /// Pearling interface-width parameter.
    pub ell: f64,
    pub seed: u64,
    pub t_end: f64,
}

impl Scenario {
    pub fn preset(kind: ScenarioKind) -> Self {
        let wells = lambda_wells_09();
        let phys = |eps, eta, lam, p| PhysParams { eps, eta, lam, p };
        match kind {
            ScenarioKind::Convergence => Scenario {
                kind,
                n: [64, 64],
                len: [1.0, 1.0],
                phys: phys(0.5, 1.0, 3.0, 2),
                ell: 0.0,
                seed: 0,
                t_end: 0.32,
            },
            ScenarioKind::Pearling => Scenario {
                kind,
                n: [256, 256],
                len: [1.0, 1.0],
                phys: phys(0.03, 4.0, wells, 1),
                ell: 0.35,
                seed: 0,
                t_end: 10.0,
            },
            ScenarioKind::Meandering => Scenario {
                kind,
                n: [7680, 3840],
                len: [30.0, 15.0],
                phys: phys(0.01, 10.0, wells, 1),
                ell: 0.0,
                seed: 0,
                t_end: 100.0,
            },
            ScenarioKind::Spinodal => Scenario {
                kind,
                n: [256, 256],
                len: [1.0, 1.0],
                phys: phys(0.008, 8.0, wells, 1),
                ell: 0.0,
                seed: 0,
                t_end: 500.0,
            },
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new_2d(self.n, self.len)
    }

    pub fn initial_state(&self) -> Result<Field> {
        self.phys.validate()?;
        let g = self.grid()?;
        match self.kind {
            ScenarioKind::Convergence => manufactured_state(&g, 0.0),
            ScenarioKind::Pearling => init_pearling(&g, self.ell, self.phys.eps),
            ScenarioKind::Meandering => init_meandering(&g),
            ScenarioKind::Spinodal => Ok(init_spinodal(&g, self.seed)),
        }
    }
}
