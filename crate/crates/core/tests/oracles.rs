//! Library operators and solvers against the dense references in `common`.

mod common;

use common::*;
use fch_core::energy::*;
use fch_core::grid::*;
use fch_core::potential::lambda_wells_09;
use fch_core::solver::*;
use fch_core::{Field, Grid, PhysParams};
use nalgebra::DVector;

fn grids() -> Vec<Grid> {
    vec![
        Grid::new_1d(4, 1.0).unwrap(),
        Grid::new_1d(7, 2.5).unwrap(),
        Grid::unit_square(8).unwrap(),
        Grid::new_2d([6, 8], [1.5, 0.75]).unwrap(),
    ]
}

fn weak() -> PhysParams {
    PhysParams::new(0.5, 1.0, 3.0, 2).unwrap()
}

fn strong() -> PhysParams {
    PhysParams::new(0.12, 4.0, lambda_wells_09(), 1).unwrap()
}

#[test]
fn stencils_match_dense_matrices() {
    let mut r = rng(1);
    for g in grids() {
        let f = random_field(&g, &mut r, 0.0, 1.0);
        let v = vec_of(&f);
        let scale = max_abs(f.values()) * (g.n(0) as f64 / g.len(0)).powi(2) * 4.0;
        for axis in 0..g.dim() {
            let d = face_diff(&f, axis);
            assert!(max_abs_diff(&d, (diff_matrix(&g, axis) * &v).as_slice()) <= 1e-13 * scale);
            let a = face_avg(&f, axis);
            assert!(max_abs_diff(&a, (avg_matrix(&g, axis) * &v).as_slice()) <= 1e-15);
            let dd = cell_diff(&g, f.values(), axis);
            assert!(max_abs_diff(dd.values(), (face_diff_matrix(&g, axis) * &v).as_slice()) <= 1e-13 * scale);
            let aa = cell_avg(&g, f.values(), axis);
            assert!(max_abs_diff(aa.values(), (face_avg_matrix(&g, axis) * &v).as_slice()) <= 1e-15);
        }
        let lap = laplacian(&f);
        let dense = laplacian_matrix(&g) * &v;
        assert!(max_abs_diff(lap.values(), dense.as_slice()) <= 1e-13 * scale);
    }
}

#[test]
fn inverse_laplacian_matches_bordered_lu() {
    let mut r = rng(2);
    for g in grids() {
        let mut ws = SpectralWorkspace::new(g);
        for _ in 0..5 {
            let f = random_mean_zero(&g, &mut r);
            let psi = ws.inv_neg_laplacian(&f).unwrap();
            let dense = dense_inv_neg_laplacian(&g, &vec_of(&f));
            let rel = max_abs_diff(psi.values(), dense.as_slice()) / dense.amax();
            assert!(rel <= 1e-12, "relative error {rel:e}");
        }
    }
}

#[test]
fn spectral_symbols_match_laplacian_eigenvalues() {
    for g in grids() {
        let ws = SpectralWorkspace::new(g);
        let l = laplacian_matrix(&g);
        let n1 = if g.dim() == 2 { g.n(1) } else { 1 };
        for idx in 0..g.cells() {
            let (k0, k1) = (idx / n1, idx % n1);
            // real cosine mode with wavenumbers (k0, k1)
            let mode = DVector::from_fn(g.cells(), |c, _| {
                let (i, j) = (c / n1, c % n1);
                let th = 2.0 * std::f64::consts::PI
                    * (k0 as f64 * i as f64 / g.n(0) as f64
                        + if g.dim() == 2 { k1 as f64 * j as f64 / g.n(1) as f64 } else { 0.0 });
                th.cos() + th.sin()
            });
            let applied = -(&l * &mode);
            let sigma = ws.sigma()[idx];
            let err = (applied - &mode * sigma).amax();
            assert!(err <= 1e-12 * sigma.max(1.0) * mode.amax(), "mode {idx}: {err:e}");
        }
    }
}

#[test]
fn preconditioner_matches_dense_solve() {
    let mut r = rng(3);
    let pp = weak();
    for g in grids() {
        let mut ws = SpectralWorkspace::new(g);
        for (t1, t2) in [(1.0, 1.0), (3.0, 0.25)] {
            let cfg = SolverConfig { theta1: t1, theta2: t2, ..Default::default() };
            let rr = random_field(&g, &mut r, 0.3, 1.0);
            let d = precond_solve(&rr, 0.01, &pp, &cfg, &mut ws);
            let mut rhs = vec_of(&rr);
            let m = rhs.mean();
            rhs.add_scalar_mut(-m);
            let dense = refined_solve(&precond_matrix(&g, 0.01, &pp, t1, t2), &rhs);
            let rel = max_abs_diff(d.values(), dense.as_slice()) / dense.amax();
            assert!(rel <= 1e-12, "relative error {rel:e}");
        }
    }
}

#[test]
fn energies_and_maps_match_dense_evaluation() {
    let mut r = rng(4);
    for pp in [weak(), strong()] {
        for g in grids() {
            let phi = random_field(&g, &mut r, 0.1, 0.8);
            let v = vec_of(&phi);
            let (ec, ee) = dense_energies(&g, &v, &pp);
            assert!((energy_convex(&phi, &pp).unwrap() - ec).abs() <= 1e-12 * ec.abs().max(1.0));
            assert!((energy_concave(&phi, &pp).unwrap() - ee).abs() <= 1e-12 * ee.abs().max(1.0));

            let check = |lib: &Field, dense: &DVector<f64>| {
                let rel = max_abs_diff(lib.values(), dense.as_slice()) / dense.amax().max(1.0);
                assert!(rel <= 1e-12, "relative error {rel:e}");
            };
            check(&var_convex(&phi, &pp).unwrap(), &dense_var_convex(&g, &v, &pp));
            check(&var_concave(&phi, &pp).unwrap(), &dense_var_concave(&g, &v, &pp));
            check(&nonlinear_map(&phi, 0.01, &pp).unwrap(), &dense_nonlinear(&g, &v, 0.01, &pp));
            check(&rhs_explicit(&phi, 0.01, &pp).unwrap(), &dense_rhs(&g, &v, 0.01, &pp));

            let lap = laplacian_matrix(&g) * &v;
            let omega = DVector::from_fn(g.cells(), |i, _| {
                -pp.eps * pp.eps * lap[i] + beta(v[i]) - pp.lam * v[i]
            });
            check(&omega_field(&phi, &pp).unwrap(), &omega);
        }
    }
}

#[test]
fn psd_matches_damped_newton() {
    let mut r = rng(5);
    let g = Grid::unit_square(8).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    for (pp, dt) in [(weak(), 1e-3), (strong(), 1e-2), (strong(), 1.0)] {
        for _ in 0..3 {
            let phi_n = random_field(&g, &mut r, 0.2, 0.6);
            let (phi, rep) = psd_solve(&phi_n, dt, &pp, &SolverConfig::default(), &mut ws).unwrap();
            let v = vec_of(&phi_n);
            let f = dense_rhs(&g, &v, dt, &pp);
            let newton = newton_solve(&g, &v, &f, dt, &pp);
            let mut diff = phi.clone();
            diff.axpy(-1.0, &field_of(&g, &newton));
            let err = norm(&diff, Norm::L2).unwrap();
            assert!(err <= 1e-8, "PSD vs Newton {err:e} ({rep:?})");
            assert!(rep.margin > 0.0);
            assert!((mean(&phi) - mean(&phi_n)).abs() <= 1e-12);
        }
    }
}

/// Sign change of `g` located by nested uniform scans, 1000 samples per level.
fn scan_root(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..4 {
        let samples = 1000;
        let step = (hi - lo) / samples as f64;
        let mut prev = lo;
        for k in 1..=samples {
            let a = lo + k as f64 * step;
            if g(a) >= 0.0 {
                hi = a;
                lo = prev;
                break;
            }
            prev = a;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn line_minimizer_matches_scan() {
    let mut r = rng(6);
    let g = Grid::unit_square(8).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let pp = strong();
    let dt = 1e-2;
    let cfg = SolverConfig { ls_tol: 1e-13, ..Default::default() };
    let vol = cell_volume(&g);
    for _ in 0..3 {
        let phi_n = random_field(&g, &mut r, 0.1, 0.5);
        let f = rhs_explicit(&phi_n, dt, &pp).unwrap();
        // a perturbed iterate and its preconditioned residual direction
        let mut phi = phi_n.clone();
        let mut bump = random_mean_zero(&g, &mut r);
        bump.scale(0.2);
        phi.axpy(1.0, &bump);
        let mut res = f.clone();
        res.axpy(-1.0, &nonlinear_map(&phi, dt, &pp).unwrap());
        let d = precond_solve(&res, dt, &pp, &cfg, &mut ws);
        let step = line_minimize(&phi, &d, &f, dt, &pp, &cfg, &mut ws).unwrap();

        let (pv, dv, fv) = (vec_of(&phi), vec_of(&d), vec_of(&f));
        let psi = dense_inv_neg_laplacian(&g, &dv);
        let gfun = |a: f64| vol * (dense_nonlinear(&g, &(&pv + &dv * a), dt, &pp) - &fv).dot(&psi);
        let amax = admissible_step_bound(&phi, &d, cfg.ls_margin);
        assert!(gfun(0.0) < 0.0);
        assert!(gfun(amax) > 0.0, "minimizer must be interior for this check");
        let expect = scan_root(gfun, 0.0, amax);
        assert!((step.alpha - expect).abs() <= 1e-8 * expect.max(1.0), "{} vs {expect}", step.alpha);
    }
}
