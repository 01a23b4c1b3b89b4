//! Dense reference implementations used as test oracles.
//!
//! Nothing here calls the library's stencils, FFTs or solvers: operators are
//! assembled entry by entry from their defining formulas and inverted with
//! nalgebra's LU.

#![allow(dead_code)]

use fch_core::{Field, Grid, PhysParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn neighbour(grid: &Grid, idx: usize, axis: usize, step: isize) -> usize {
    let n = grid.n(axis) as isize;
    let (mut i, mut j) = if grid.dim() == 1 {
        (idx as isize, 0)
    } else {
        ((idx / grid.n(1)) as isize, (idx % grid.n(1)) as isize)
    };
    if axis == 0 {
        i = (i + step).rem_euclid(n);
    } else {
        j = (j + step).rem_euclid(n);
    }
    if grid.dim() == 1 {
        i as usize
    } else {
        (i as usize) * grid.n(1) + j as usize
    }
}

/// Cell-to-face difference `(f_{k+1} - f_k) / h`.
pub fn diff_matrix(grid: &Grid, axis: usize) -> DMatrix<f64> {
    let n = grid.cells();
    let h = grid.len(axis) / grid.n(axis) as f64;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, neighbour(grid, k, axis, 1))] += 1.0 / h;
        m[(k, k)] -= 1.0 / h;
    }
    m
}

/// Cell-to-face average `(f_{k+1} + f_k) / 2`.
pub fn avg_matrix(grid: &Grid, axis: usize) -> DMatrix<f64> {
    let n = grid.cells();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, neighbour(grid, k, axis, 1))] += 0.5;
        m[(k, k)] += 0.5;
    }
    m
}

/// Face-to-cell difference `(g_{k+1/2} - g_{k-1/2}) / h`.
pub fn face_diff_matrix(grid: &Grid, axis: usize) -> DMatrix<f64> {
    let n = grid.cells();
    let h = grid.len(axis) / grid.n(axis) as f64;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] += 1.0 / h;
        m[(k, neighbour(grid, k, axis, -1))] -= 1.0 / h;
    }
    m
}

/// Face-to-cell average `(g_{k+1/2} + g_{k-1/2}) / 2`.
pub fn face_avg_matrix(grid: &Grid, axis: usize) -> DMatrix<f64> {
    let n = grid.cells();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] += 0.5;
        m[(k, neighbour(grid, k, axis, -1))] += 0.5;
    }
    m
}

/// Five-point (three-point in 1D) periodic Laplacian.
pub fn laplacian_matrix(grid: &Grid) -> DMatrix<f64> {
    let n = grid.cells();
    let mut m = DMatrix::zeros(n, n);
    for axis in 0..grid.dim() {
        let h = grid.len(axis) / grid.n(axis) as f64;
        let w = 1.0 / (h * h);
        for k in 0..n {
            m[(k, neighbour(grid, k, axis, 1))] += w;
            m[(k, neighbour(grid, k, axis, -1))] += w;
            m[(k, k)] -= 2.0 * w;
        }
    }
    m
}

pub fn vec_of(f: &Field) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

pub fn field_of(grid: &Grid, v: &DVector<f64>) -> Field {
    Field::new(*grid, v.iter().copied().collect()).unwrap()
}

pub fn cell_volume(grid: &Grid) -> f64 {
    (0..grid.dim()).map(|a| grid.len(a) / grid.n(a) as f64).product()
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

/// `b_i - sum_j a_ij x_j` with compensated (twice working precision) accumulation.
fn residual_row(a: &DMatrix<f64>, i: usize, x: &DVector<f64>, b: f64) -> f64 {
    let (mut s, mut c) = (b, 0.0);
    for j in 0..x.len() {
        let p = -a[(i, j)] * x[j];
        let ep = (-a[(i, j)]).mul_add(x[j], -p);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// LU solve followed by iterative refinement with compensated residuals, so the
/// result is accurate well beyond `cond(A) * eps` for exactly representable `A`.
pub fn refined_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let lu = a.clone().lu();
    let mut x = lu.solve(b).expect("matrix is nonsingular");
    for _ in 0..4 {
        let r = DVector::from_fn(b.len(), |i, _| residual_row(a, i, &x, b[i]));
        x += lu.solve(&r).unwrap();
    }
    x
}

/// Mean-zero solution of `-Lap psi = f` via LU of the bordered system
/// `[-L 1; 1^T 0] [psi; c] = [f; 0]`.
pub fn dense_inv_neg_laplacian(grid: &Grid, f: &DVector<f64>) -> DVector<f64> {
    let n = grid.cells();
    let l = laplacian_matrix(grid);
    let mut a = DMatrix::zeros(n + 1, n + 1);
    let mut b = DVector::zeros(n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = -l[(i, j)];
        }
        a[(i, n)] = 1.0;
        a[(n, i)] = 1.0;
        b[i] = f[i];
    }
    let x = refined_solve(&a, &b);
    x.rows(0, n).into_owned()
}

/// `L_h = I/dt - eps^4 L^3 + eps^2 theta1 L^2 - (lam^2 + lam eps^p eta + theta2) L`
pub fn precond_matrix(grid: &Grid, dt: f64, pp: &PhysParams, theta1: f64, theta2: f64) -> DMatrix<f64> {
    let n = grid.cells();
    let l = laplacian_matrix(grid);
    let l2 = &l * &l;
    let l3 = &l2 * &l;
    let e2 = pp.eps * pp.eps;
    let w = pp.eps.powi(pp.p as i32) * pp.eta;
    DMatrix::identity(n, n) / dt - l3 * (e2 * e2) + l2 * (e2 * theta1) - l * (pp.lam * pp.lam + pp.lam * w + theta2)
}

pub fn beta(r: f64) -> f64 {
    ((1.0 + r) / (1.0 - r)).ln()
}

pub fn beta1(r: f64) -> f64 {
    2.0 / (1.0 - r * r)
}

pub fn beta2(r: f64) -> f64 {
    4.0 * r / (1.0 - r * r).powi(2)
}

pub fn entropy(r: f64) -> f64 {
    (1.0 + r) * (1.0 + r).ln() + (1.0 - r) * (1.0 - r).ln()
}

fn map(v: &DVector<f64>, f: impl Fn(f64) -> f64) -> DVector<f64> {
    v.map(f)
}

/// Dense evaluation of the convex and concave energies.
pub fn dense_energies(grid: &Grid, phi: &DVector<f64>, pp: &PhysParams) -> (f64, f64) {
    let vol = cell_volume(grid);
    let e2 = pp.eps * pp.eps;
    let w = pp.eps.powi(pp.p as i32) * pp.eta;
    let lam = pp.lam;
    let lap = laplacian_matrix(grid) * phi;
    let b = map(phi, beta);
    let b1 = map(phi, beta1);
    let mut mixed = 0.0;
    let mut grad_sq = 0.0;
    for axis in 0..grid.dim() {
        let dphi = diff_matrix(grid, axis) * phi;
        let sq = dphi.component_mul(&dphi);
        let cell = face_avg_matrix(grid, axis) * &sq;
        mixed += b1.dot(&cell);
        grad_sq += sq.sum();
    }
    let convex = vol
        * (0.5 * e2 * e2 * lap.dot(&lap)
            + 0.5 * b.dot(&b)
            + 0.5 * (lam * lam + lam * w) * phi.dot(phi)
            + e2 * mixed);
    let concave = vol
        * ((0.5 * e2 * w + lam * e2) * grad_sq + lam * phi.dot(&b) + w * map(phi, entropy).sum());
    (convex, concave)
}

/// Dense variational derivative of the convex energy.
pub fn dense_var_convex(grid: &Grid, phi: &DVector<f64>, pp: &PhysParams) -> DVector<f64> {
    let e2 = pp.eps * pp.eps;
    let w = pp.eps.powi(pp.p as i32) * pp.eta;
    let l = laplacian_matrix(grid);
    let b = map(phi, beta);
    let b1 = map(phi, beta1);
    let b2 = map(phi, beta2);
    let mut out = &l * (&l * phi) * (e2 * e2) + b.component_mul(&b1) + phi * (pp.lam * (pp.lam + w));
    for axis in 0..grid.dim() {
        let dm = diff_matrix(grid, axis);
        let dphi = &dm * phi;
        let cell_sq = face_avg_matrix(grid, axis) * dphi.component_mul(&dphi);
        out += b2.component_mul(&cell_sq) * e2;
        let flux = (avg_matrix(grid, axis) * &b1).component_mul(&dphi);
        out -= face_diff_matrix(grid, axis) * flux * (2.0 * e2);
    }
    out
}

/// Dense variational derivative of the concave energy.
pub fn dense_var_concave(grid: &Grid, phi: &DVector<f64>, pp: &PhysParams) -> DVector<f64> {
    let e2 = pp.eps * pp.eps;
    let w = pp.eps.powi(pp.p as i32) * pp.eta;
    let lam = pp.lam;
    let l = laplacian_matrix(grid);
    -(l * phi) * (e2 * (2.0 * lam + w))
        + phi.component_mul(&map(phi, beta1)) * lam
        + map(phi, beta) * (lam + w)
}

/// `N(phi) = phi / dt - L var_convex(phi)`
pub fn dense_nonlinear(grid: &Grid, phi: &DVector<f64>, dt: f64, pp: &PhysParams) -> DVector<f64> {
    phi / dt - laplacian_matrix(grid) * dense_var_convex(grid, phi, pp)
}

/// `f = phi / dt - L var_concave(phi)`
pub fn dense_rhs(grid: &Grid, phi: &DVector<f64>, dt: f64, pp: &PhysParams) -> DVector<f64> {
    phi / dt - laplacian_matrix(grid) * dense_var_concave(grid, phi, pp)
}

/// Damped Newton for `N(phi) = f` with a central-difference Jacobian and
/// backtracking on the residual norm that keeps iterates inside (-1, 1).
pub fn newton_solve(grid: &Grid, phi0: &DVector<f64>, f: &DVector<f64>, dt: f64, pp: &PhysParams) -> DVector<f64> {
    let n = grid.cells();
    let residual = |x: &DVector<f64>| dense_nonlinear(grid, x, dt, pp) - f;
    let mut x = phi0.clone();
    let mut r = residual(&x);
    let scale = f.norm().max(1.0);
    for _ in 0..100 {
        if r.norm() <= 1e-13 * scale {
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        let s = 1e-6;
        for j in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += s;
            xm[j] -= s;
            let col = (residual(&xp) - residual(&xm)) / (2.0 * s);
            jac.set_column(j, &col);
        }
        let step = jac.lu().solve(&(-&r)).expect("Jacobian is nonsingular");
        let mut t = 1.0;
        loop {
            let trial = &x + &step * t;
            if trial.amax() < 1.0 {
                let rt = residual(&trial);
                if rt.norm() < r.norm() || t < 1e-8 {
                    x = trial;
                    r = rt;
                    break;
                }
            }
            t *= 0.5;
        }
    }
    x
}

/// Admissible random field `c + a (2 u - 1)`.
pub fn random_field(grid: &Grid, rng: &mut ChaCha8Rng, centre: f64, amplitude: f64) -> Field {
    Field::new(*grid, (0..grid.cells()).map(|_| centre + amplitude * (2.0 * rng.gen::<f64>() - 1.0)).collect())
        .unwrap()
}

/// Mean-zero random field.
pub fn random_mean_zero(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let v: Vec<f64> = (0..grid.cells()).map(|_| rng.gen::<f64>() - 0.5).collect();
    let m = v.iter().sum::<f64>() / v.len() as f64;
    Field::new(*grid, v.into_iter().map(|x| x - m).collect()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
