//! Periodic cell-centered grids and the discrete calculus on them.
//!
//! Cell values live at `((i - 1/2) h_x, (j - 1/2) h_y)`. Face component `k`
//! along an axis holds the value at face `k + 1/2`, i.e. between cell `k`
//! and cell `k + 1` (wrapping periodically).

mod spectral;

pub use spectral::{PeriodicFft, SpectralWorkspace};

use crate::error::{Error, Result};

/// Uniform periodic rectangular mesh in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    len: [f64; 2],
}

impl Grid {
    pub fn new_1d(n: usize, len: f64) -> Result<Self> {
        Self::build(1, [n, 1], [len, 1.0])
    }

    pub fn new_2d(n: [usize; 2], len: [f64; 2]) -> Result<Self> {
        Self::build(2, n, len)
    }

    /// `n x n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new_2d([n, n], [1.0, 1.0])
    }

    fn build(dim: usize, n: [usize; 2], len: [f64; 2]) -> Result<Self> {
        for axis in 0..dim {
            if n[axis] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} needs at least 2 cells, got {}",
                    n[axis]
                )));
            }
            if !(len[axis] > 0.0 && len[axis].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} length must be positive, got {}",
                    len[axis]
                )));
            }
        }
        Ok(Grid { dim, n, len })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn len(&self, axis: usize) -> f64 {
        self.len[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.len[axis] / self.n[axis] as f64
    }

    pub fn cells(&self) -> usize {
        (0..self.dim).map(|a| self.n[a]).product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).product()
    }

    /// |Omega|
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.len[a]).product()
    }

    /// Flat-index stride of an axis (row-major, axis 0 slowest).
    pub fn stride(&self, axis: usize) -> usize {
        if self.dim == 2 && axis == 0 {
            self.n[1]
        } else {
            1
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            i * self.n[1] + j
        }
    }

    /// Integer cell coordinates of a flat index.
    pub fn coords(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n[1], idx % self.n[1]]
        }
    }

    /// Physical position of a cell center. Unused axes report 0.
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let c = self.coords(idx);
        let mut x = [0.0; 2];
        for axis in 0..self.dim {
            x[axis] = (c[axis] as f64 + 0.5) * self.h(axis);
        }
        x
    }

    /// Periodic neighbour `idx + 1` along `axis`.
    #[inline]
    pub fn next(&self, idx: usize, axis: usize) -> usize {
        let s = self.stride(axis);
        let n = self.n[axis];
        if (idx / s) % n + 1 == n {
            idx + s - n * s
        } else {
            idx + s
        }
    }

    /// Periodic neighbour `idx - 1` along `axis`.
    #[inline]
    pub fn prev(&self, idx: usize, axis: usize) -> usize {
        let s = self.stride(axis);
        let n = self.n[axis];
        if (idx / s) % n == 0 {
            idx + n * s - s
        } else {
            idx - s
        }
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Scalar cell-centered grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite value {} at cell {i}",
                values[i]
            )));
        }
        Ok(Field { grid, values })
    }

    pub(crate) fn from_vec(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Field { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.cells()],
        }
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.cells()).map(|i| f(grid.center(i))).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn try_map<E>(&self, f: impl Fn(f64) -> std::result::Result<f64, E>) -> std::result::Result<Field, E> {
        let values = self
            .values
            .iter()
            .map(|&v| f(v))
            .collect::<std::result::Result<Vec<_>, E>>()?;
        Ok(Field::from_vec(self.grid, values))
    }

    /// Pointwise combination; panics if the grids differ.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "zip_map on mismatched grids");
        Field::from_vec(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Field) {
        assert_eq!(self.grid, other.grid, "axpy on mismatched grids");
        for (s, &o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn add_constant(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v += c);
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and magnitude of the largest |value|.
    pub fn argmax_abs(&self) -> (usize, f64) {
        self.values
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            })
    }
}

/// Face-centered vector grid function, one component per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl FaceField {
    pub fn new(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.cells()) {
            return Err(Error::GridMismatch(
                "face field needs one full-size component per axis".into(),
            ));
        }
        Ok(FaceField { grid, comps })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
}

/// `D_axis f`: forward difference onto faces.
pub fn face_diff(f: &Field, axis: usize) -> Vec<f64> {
    let g = f.grid;
    let inv_h = 1.0 / g.h(axis);
    let v = &f.values;
    (0..v.len()).map(|i| (v[g.next(i, axis)] - v[i]) * inv_h).collect()
}

/// `A_axis f`: average onto faces.
pub fn face_avg(f: &Field, axis: usize) -> Vec<f64> {
    let g = f.grid;
    let v = &f.values;
    (0..v.len()).map(|i| 0.5 * (v[g.next(i, axis)] + v[i])).collect()
}

/// `a_axis g`: average of a face component back onto cells.
pub fn cell_avg(grid: &Grid, g: &[f64], axis: usize) -> Field {
    let values = (0..g.len())
        .map(|i| 0.5 * (g[i] + g[grid.prev(i, axis)]))
        .collect();
    Field::from_vec(*grid, values)
}

/// `d_axis g`: difference of a face component back onto cells.
pub fn cell_diff(grid: &Grid, g: &[f64], axis: usize) -> Field {
    let inv_h = 1.0 / grid.h(axis);
    let values = (0..g.len())
        .map(|i| (g[i] - g[grid.prev(i, axis)]) * inv_h)
        .collect();
    Field::from_vec(*grid, values)
}

/// `grad_h f`
pub fn gradient(f: &Field) -> FaceField {
    FaceField {
        grid: f.grid,
        comps: (0..f.grid.dim()).map(|a| face_diff(f, a)).collect(),
    }
}

/// `grad_h . F`
pub fn divergence(ff: &FaceField) -> Field {
    let grid = ff.grid;
    let mut out = vec![0.0; grid.cells()];
    for (axis, comp) in ff.comps.iter().enumerate() {
        let inv_h = 1.0 / grid.h(axis);
        for (i, o) in out.iter_mut().enumerate() {
            *o += (comp[i] - comp[grid.prev(i, axis)]) * inv_h;
        }
    }
    Field::from_vec(grid, out)
}

/// Standard periodic 3-point (1D) / 5-point (2D) Laplacian, `sum d(D f)`.
pub fn laplacian(f: &Field) -> Field {
    let g = f.grid;
    let v = &f.values;
    let mut out = vec![0.0; v.len()];
    for axis in 0..g.dim() {
        let inv_h = 1.0 / g.h(axis);
        for (i, o) in out.iter_mut().enumerate() {
            // same operation order as cell_diff(face_diff(..))
            let fwd = (v[g.next(i, axis)] - v[i]) * inv_h;
            let bwd = (v[i] - v[g.prev(i, axis)]) * inv_h;
            *o += (fwd - bwd) * inv_h;
        }
    }
    Field::from_vec(g, out)
}

pub(crate) fn dot(f: &Field, g: &Field) -> f64 {
    debug_assert_eq!(f.grid, g.grid);
    f.grid.cell_volume() * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>()
}

/// `<f, g>_Omega`
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    Ok(dot(f, g))
}

/// `[F, G]_Omega = sum_axis <a_axis(F^axis G^axis), 1>`.
pub fn inner_face(ff: &FaceField, gg: &FaceField) -> Result<f64> {
    ff.grid.check_same(&gg.grid)?;
    // a_axis preserves the cell sum on a periodic grid
    let s: f64 = ff
        .comps
        .iter()
        .zip(&gg.comps)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
        .sum();
    Ok(ff.grid.cell_volume() * s)
}

/// `||grad_h f||_2^2`
pub fn grad_norm_sq(f: &Field) -> f64 {
    let g = f.grid;
    let v = &f.values;
    let mut s = 0.0;
    for axis in 0..g.dim() {
        let inv_h = 1.0 / g.h(axis);
        for i in 0..v.len() {
            let d = (v[g.next(i, axis)] - v[i]) * inv_h;
            s += d * d;
        }
    }
    g.cell_volume() * s
}

/// `f-bar = |Omega|^-1 <f, 1>`
pub fn mean(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() / f.values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    L2,
    Lp(f64),
    Linf,
    H1,
    H2,
}

pub fn norm(f: &Field, kind: Norm) -> Result<f64> {
    let vol = f.grid.cell_volume();
    let l2sq = || dot(f, f);
    Ok(match kind {
        Norm::L2 => l2sq().sqrt(),
        Norm::Lp(p) => {
            if !(p >= 1.0) {
                return Err(Error::InvalidNorm(p));
            }
            (vol * f.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
        }
        Norm::Linf => f.max_abs(),
        Norm::H1 => (l2sq() + grad_norm_sq(f)).sqrt(),
        Norm::H2 => {
            let lap = laplacian(f);
            (l2sq() + grad_norm_sq(f) + dot(&lap, &lap)).sqrt()
        }
    })
}
