use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{mean, Field, Grid};
use crate::error::{Error, Result};

/// Relative mean tolerance accepted by the inverse Laplacian.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// Multidimensional complex FFT over a grid's natural row-major layout.
pub struct PeriodicFft {
    grid: Grid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    column: Vec<Complex64>,
}

impl PeriodicFft {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = (0..grid.dim())
            .map(|a| planner.plan_fft_forward(grid.n(a)))
            .collect();
        let inverse = (0..grid.dim())
            .map(|a| planner.plan_fft_inverse(grid.n(a)))
            .collect();
        PeriodicFft {
            grid,
            forward,
            inverse,
            column: vec![Complex64::default(); grid.n(0)],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    /// Inverse transform in place, normalized so that `inverse(forward(x)) == x`.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.run(buf, false);
        let s = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|c| *c *= s);
    }

    fn run(&mut self, buf: &mut [Complex64], fwd: bool) {
        assert_eq!(buf.len(), self.grid.cells());
        let plans = if fwd { &self.forward } else { &self.inverse };
        if self.grid.dim() == 1 {
            plans[0].process(buf);
            return;
        }
        let (n0, n1) = (self.grid.n(0), self.grid.n(1));
        // contiguous rows along axis 1
        plans[1].process(buf);
        for j in 0..n1 {
            for i in 0..n0 {
                self.column[i] = buf[i * n1 + j];
            }
            plans[0].process(&mut self.column);
            for i in 0..n0 {
                buf[i * n1 + j] = self.column[i];
            }
        }
    }

    /// Signed integer wavenumbers along an axis in FFT order.
    /// The Nyquist index of an even axis maps to `+n/2`.
    pub fn wavenumbers(&self, axis: usize) -> Vec<i64> {
        let n = self.grid.n(axis) as i64;
        (0..n).map(|k| if k <= n / 2 { k } else { k - n }).collect()
    }
}

/// Spectral diagonalization of the periodic stencil Laplacian.
///
/// `sigma[k]` holds the eigenvalue of `-Delta_h` for the discrete Fourier mode
/// stored at flat index `k`; it is zero only for the constant mode.
pub struct SpectralWorkspace {
    fft: PeriodicFft,
    sigma: Vec<f64>,
    buf: Vec<Complex64>,
}

impl SpectralWorkspace {
    pub fn new(grid: Grid) -> Self {
        let per_axis: Vec<Vec<f64>> = (0..grid.dim())
            .map(|a| {
                let n = grid.n(a);
                let h = grid.h(a);
                (0..n)
                    .map(|k| {
                        let s = (PI * k as f64 / n as f64).sin();
                        4.0 / (h * h) * s * s
                    })
                    .collect()
            })
            .collect();
        let sigma = (0..grid.cells())
            .map(|idx| {
                let c = grid.coords(idx);
                (0..grid.dim()).map(|a| per_axis[a][c[a]]).sum()
            })
            .collect();
        SpectralWorkspace {
            fft: PeriodicFft::new(grid),
            sigma,
            buf: vec![Complex64::default(); grid.cells()],
        }
    }

    pub fn grid(&self) -> &Grid {
        self.fft.grid()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Smallest nonzero eigenvalue of `-Delta_h`.
    pub fn sigma_min(&self) -> f64 {
        self.sigma
            .iter()
            .copied()
            .filter(|&s| s > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies the Fourier multiplier `symbol(sigma)` to `f`.
    pub fn apply_symbol(&mut self, f: &Field, symbol: impl Fn(f64) -> f64) -> Field {
        assert_eq!(f.grid(), self.grid(), "workspace built for a different grid");
        for (b, &v) in self.buf.iter_mut().zip(f.values()) {
            *b = Complex64::new(v, 0.0);
        }
        self.fft.forward(&mut self.buf);
        for (b, &s) in self.buf.iter_mut().zip(&self.sigma) {
            *b *= symbol(s);
        }
        self.fft.inverse(&mut self.buf);
        Field::from_vec(*f.grid(), self.buf.iter().map(|c| c.re).collect())
    }

    /// `(-Delta_h)^{-1}` restricted to mean-zero fields; the constant mode is dropped.
    pub(crate) fn inv_neg_laplacian_unchecked(&mut self, f: &Field) -> Field {
        let mut psi = self.apply_symbol(f, |s| if s > 0.0 { 1.0 / s } else { 0.0 });
        let m = mean(&psi);
        psi.add_constant(-m);
        psi
    }

    fn check_mean(f: &Field) -> Result<Field> {
        let m = mean(f);
        let tol = MEAN_TOLERANCE * f.max_abs();
        if m.abs() > tol {
            return Err(Error::NonZeroMean { mean: m, tol });
        }
        let mut g = f.clone();
        g.add_constant(-m);
        Ok(g)
    }

    /// `psi[f] = (-Delta_h)^{-1} f`, the unique mean-zero periodic solution.
    pub fn inv_neg_laplacian(&mut self, f: &Field) -> Result<Field> {
        let g = Self::check_mean(f)?;
        Ok(self.inv_neg_laplacian_unchecked(&g))
    }

    /// `||f||_{-1,h} = sqrt(<f, psi[f]>)`.
    pub fn norm_hm1(&mut self, f: &Field) -> Result<f64> {
        let g = Self::check_mean(f)?;
        let psi = self.inv_neg_laplacian_unchecked(&g);
        Ok(super::dot(&g, &psi).max(0.0).sqrt())
    }
}
