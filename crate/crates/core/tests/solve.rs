use std::f64::consts::PI;

use nalgebra::DMatrix;
use schauder_core::fields::{
    random_rough_coefficients, random_rough_coefficients_with, CoefficientField, Convention, Pattern, VectorField,
};
use schauder_core::lattice::{AnisotropicGrid, Boundary, GridFunction, TimeAxis};
use schauder_core::solve::{
    nondiv_system, solve_elliptic_div, solve_elliptic_nondiv, solve_parabolic_div, solve_parabolic_nondiv,
};

fn slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn square(n: usize) -> AnisotropicGrid {
    AnisotropicGrid::cube(2, 1, -1.0, 1.0, n).unwrap()
}

fn ustar(x: &[f64]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

#[test]
fn nondiv_manufactured_rate() {
    let a0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    let mut errs_id = Vec::new();
    for n in [17, 33, 65] {
        let g = square(n);
        let a = CoefficientField::constant(&g, 0.2, &a0).unwrap();
        let f = GridFunction::from_fn(&g, |_, x| {
            let (sx, cx) = (PI * x[0]).sin_cos();
            let (sy, cy) = (PI * x[1]).sin_cos();
            -PI * PI * (2.0 * sx * sy + sx * sy) + 2.0 * 0.6 * PI * PI * cx * cy
        });
        let (u, rep) = solve_elliptic_nondiv(&a, &f, 1e-12).unwrap();
        assert!(rep.residual <= 1e-12);
        let exact = GridFunction::from_fn(&g, |_, x| ustar(x));
        errs.push(u.sub(&exact).unwrap().sup_abs());
        let fi = GridFunction::from_fn(&g, |_, x| -2.0 * PI * PI * ustar(x));
        let (ui, _) = solve_elliptic_nondiv(&CoefficientField::identity(&g), &fi, 1e-12).unwrap();
        errs_id.push(ui.sub(&exact).unwrap().sup_abs());
        hs.push(g.spacing(0));
    }
    for e in [&errs, &errs_id] {
        let s = slope(&hs, e);
        assert!((s - 2.0).abs() <= 0.2, "slope {s}, errors {e:?}");
    }
}

#[test]
fn div_manufactured_rate_and_agreement() {
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [17, 33, 65] {
        let g = square(n);
        let h = g.spacing(0);
        // smooth variable coefficients, flux a grad u*
        let amat = |x: &[f64]| {
            let s = 1.0 + 0.5 * x[1] * x[1];
            DMatrix::from_row_slice(2, 2, &[s, 0.3 * x[0], 0.3 * x[0], 1.5])
        };
        let a = CoefficientField::from_fn(&g, 0.2, Pattern::Constant, |_, x| amat(x)).unwrap();
        let grad = |x: &[f64]| {
            let (sx, cx) = (PI * x[0]).sin_cos();
            let (sy, cy) = (PI * x[1]).sin_cos();
            [PI * cx * sy, PI * sx * cy]
        };
        let f0 = GridFunction::from_fn(&g, |_, x| {
            let m = amat(x);
            let gr = grad(x);
            m[(0, 0)] * gr[0] + m[(0, 1)] * gr[1]
        });
        let f1 = GridFunction::from_fn(&g, |_, x| {
            let m = amat(x);
            let gr = grad(x);
            m[(1, 0)] * gr[0] + m[(1, 1)] * gr[1]
        });
        let (u, rep) = solve_elliptic_div(&a, &VectorField::new(vec![f0, f1]).unwrap(), 1e-12).unwrap();
        assert_eq!(rep.steps, 1);
        let exact = GridFunction::from_fn(&g, |_, x| ustar(x));
        errs.push(u.sub(&exact).unwrap().sup_abs());
        hs.push(h);

        // identity: divergence and nondivergence solutions agree within 10 h^2
        let id = CoefficientField::identity(&g);
        let gx = GridFunction::from_fn(&g, |_, x| grad(x)[0]);
        let gy = GridFunction::from_fn(&g, |_, x| grad(x)[1]);
        let (ud, _) = solve_elliptic_div(&id, &VectorField::new(vec![gx, gy]).unwrap(), 1e-12).unwrap();
        let lap = GridFunction::from_fn(&g, |_, x| -2.0 * PI * PI * ustar(x));
        let (un, _) = solve_elliptic_nondiv(&id, &lap, 1e-12).unwrap();
        assert!(ud.sub(&un).unwrap().sup_abs() <= 10.0 * h * h);
    }
    let s = slope(&hs, &errs);
    assert!((s - 2.0).abs() <= 0.2, "slope {s}, errors {errs:?}");
}

#[test]
fn zero_data_gives_zero() {
    let g = square(17);
    let a = random_rough_coefficients_with(&g, 0.2, Pattern::XppOnly, 3, Convention::Divergence).unwrap();
    let (u, rep) = solve_elliptic_nondiv(&a, &GridFunction::zeros(&g), 1e-10).unwrap();
    assert_eq!(u.sup_abs(), 0.0);
    assert_eq!(rep.iterations, 0);
    let (u, _) = solve_elliptic_div(&a, &VectorField::zeros(&g), 1e-10).unwrap();
    assert_eq!(u.sup_abs(), 0.0);
    let gt = g.clone().with_time(TimeAxis { t0: 0.0, t1: 0.25, n: 5 }).unwrap();
    let (u, _) = solve_parabolic_nondiv(&a, &GridFunction::zeros(&gt), &GridFunction::zeros(&g), 1e-10).unwrap();
    assert_eq!(u.sup_abs(), 0.0);
    let (u, _) = solve_parabolic_div(&a, &VectorField::zeros(&gt), &GridFunction::zeros(&g), 1e-10).unwrap();
    assert_eq!(u.sup_abs(), 0.0);
}

#[test]
fn rejects_bad_coefficients() {
    let g = square(9);
    let bad = CoefficientField::constant(&g, 0.5, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.1])).unwrap();
    assert!(solve_elliptic_nondiv(&bad, &GridFunction::constant(&g, 1.0), 1e-10).is_err());
}

#[test]
fn bounded_bandwidth() {
    let g = square(17);
    let a = random_rough_coefficients(&g, 0.2, Pattern::XppOnly, 1).unwrap();
    let sys = nondiv_system(&a, &GridFunction::constant(&g, 1.0), 1e-10).unwrap();
    assert_eq!(sys.matrix.n(), 15 * 15);
    assert!(sys.matrix.max_row_len() <= 9);
}

#[test]
fn maximum_principle_diagonal() {
    let g = square(33);
    let a = CoefficientField::from_fn(&g, 0.2, Pattern::XppOnly, |_, x| {
        let s = if x[1] > 0.1 { 3.0 } else { 0.4 };
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, s])
    })
    .unwrap();
    let f = GridFunction::from_fn(&g, |_, x| -(1.0 + (5.0 * x[0]).sin().abs()) * (x[1] + 1.0));
    let (u, _) = solve_elliptic_nondiv(&a, &f, 1e-12).unwrap();
    let min = u.values().iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min >= -1e-12 * u.sup_abs(), "min {min}");
}

#[test]
fn linearity() {
    let g = square(33);
    let tol = 1e-10;
    let a = random_rough_coefficients(&g, 0.2, Pattern::XppOnly, 11).unwrap();
    let f1 = GridFunction::from_fn(&g, |_, x| (3.0 * x[0]).cos() * x[1].signum());
    let f2 = GridFunction::from_fn(&g, |_, x| x[0] * x[1] + 1.0);
    let (u1, _) = solve_elliptic_nondiv(&a, &f1, tol).unwrap();
    let (u2, _) = solve_elliptic_nondiv(&a, &f2, tol).unwrap();
    let (u12, _) = solve_elliptic_nondiv(&a, &f1.add(&f2).unwrap(), tol).unwrap();
    let diff = u12.sub(&u1.add(&u2).unwrap()).unwrap().sup_abs();
    assert!(diff <= 10.0 * tol * u12.sup_abs().max(1.0), "diff {diff}");
}

#[test]
fn commutes_with_xprime_translation_on_torus() {
    let n = 32;
    let period = 2.0;
    let g = AnisotropicGrid::new(
        2,
        1,
        vec![[0.0, period * (n - 1) as f64 / n as f64], [-1.0, 1.0]],
        vec![n, 33],
        vec![Boundary::Periodic, Boundary::DirichletBox],
        None,
    )
    .unwrap();
    let a = random_rough_coefficients(&g, 0.2, Pattern::XppOnly, 5).unwrap();
    let fx = |x: f64, y: f64| (PI * x).sin() * (1.0 + y.signum()) + (2.0 * PI * x).cos() * y;
    let s = 5usize;
    let h = g.spacing(0);
    let f = GridFunction::from_fn(&g, |_, x| fx(x[0], x[1]));
    let fs = GridFunction::from_fn(&g, |_, x| fx(x[0] - s as f64 * h, x[1]));
    let tol = 1e-12;
    let (u, _) = solve_elliptic_nondiv(&a, &f, tol).unwrap();
    let (us, _) = solve_elliptic_nondiv(&a, &fs, tol).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..33 {
            worst = worst.max((us.get(&[(i + s) % n, j]) - u.get(&[i, j])).abs());
        }
    }
    assert!(worst <= 1e-8 * u.sup_abs(), "worst {worst}");
}

#[test]
fn eigenmode_decay() {
    let n = 17;
    let nt = 9;
    let g = square(n);
    let gt = g.clone().with_time(TimeAxis { t0: 0.0, t1: 0.1, n: nt }).unwrap();
    let h = g.spacing(0);
    let tau = 0.1 / (nt - 1) as f64;
    let phi = |x: &[f64]| (PI * (x[0] + 1.0) / 2.0).sin() * (PI * (x[1] + 1.0) / 2.0).sin();
    let u0 = GridFunction::from_fn(&g, |_, x| phi(x));
    let lam = 2.0 * 4.0 / (h * h) * (PI * h / 4.0).sin().powi(2);
    let (u, rep) = solve_parabolic_nondiv(&CoefficientField::identity(&g), &GridFunction::zeros(&gt), &u0, 1e-14).unwrap();
    assert_eq!(rep.steps, nt - 1);
    assert_eq!(rep.assemblies, 1);
    let want = 1.0 / (1.0 + tau * lam);
    let m = g.spatial_len();
    let centre = g.ravel(&[8, 8]);
    for k in 1..nt {
        let r = u.values()[k * m + centre] / u.values()[(k - 1) * m + centre];
        assert!((r - want).abs() <= 1e-10, "step {k}: {r} vs {want}");
    }
}

#[test]
fn parabolic_first_order_in_tau() {
    // quadratic in space: the spatial stencil is exact, leaving the time error
    let g = square(9);
    let w = |x: &[f64]| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]);
    let lap = |x: &[f64]| -2.0 * (1.0 - x[1] * x[1]) - 2.0 * (1.0 - x[0] * x[0]);
    let mut taus = Vec::new();
    let mut errs = Vec::new();
    for nt in [9, 17, 33, 65] {
        let gt = g.clone().with_time(TimeAxis { t0: 0.0, t1: 1.0, n: nt }).unwrap();
        let f = GridFunction::from_fn(&gt, |t, x| (t.cos() - t.sin()) * w(x) - (t.sin() + t.cos()) * lap(x));
        let u0 = GridFunction::from_fn(&g, |_, x| w(x));
        let (u, _) = solve_parabolic_nondiv(&CoefficientField::identity(&g), &f, &u0, 1e-13).unwrap();
        let exact = GridFunction::from_fn(&gt, |t, x| (t.sin() + t.cos()) * w(x));
        errs.push(u.sub(&exact).unwrap().sup_abs());
        taus.push(1.0 / (nt - 1) as f64);
    }
    let s = slope(&taus, &errs);
    assert!((s - 1.0).abs() <= 0.2, "slope {s}, errors {errs:?}");
}

#[test]
fn backward_euler_is_stable() {
    let g = square(17);
    let gt = g.clone().with_time(TimeAxis { t0: 0.0, t1: 0.5, n: 11 }).unwrap();
    let a = random_rough_coefficients(&gt, 0.2, Pattern::TAndXpp, 9).unwrap();
    let u0 = GridFunction::from_fn(&g, |_, x| (1.0 - x[0] * x[0]) * (3.0 * x[1]).cos().abs() * (1.0 - x[1] * x[1]));
    let (u, _) = solve_parabolic_nondiv(&a, &GridFunction::zeros(&gt), &u0, 1e-12).unwrap();
    let mut prev = f64::INFINITY;
    for k in 0..11 {
        let s = u.time_slice(k).unwrap().sup_abs();
        assert!(s <= prev * (1.0 + 1e-9), "step {k}: {s} > {prev}");
        prev = s;
    }
}

#[test]
fn matrix_reuse_is_bit_identical() {
    let g = square(17);
    let gt = g.clone().with_time(TimeAxis { t0: 0.0, t1: 0.25, n: 6 }).unwrap();
    let a = random_rough_coefficients_with(&g, 0.2, Pattern::XppOnly, 4, Convention::Divergence).unwrap();
    // the same spatial field repeated along time
    let at = CoefficientField::from_fn(&gt, 0.2, Pattern::XppOnly, |_, x| {
        let k = g.ravel(&[g.index_of(0, x[0]).unwrap(), g.index_of(1, x[1]).unwrap()]);
        a.matrix_at(k)
    })
    .unwrap();
    let f0 = GridFunction::from_fn(&gt, |t, x| t * x[0].cos() * x[1].signum());
    let f1 = GridFunction::from_fn(&gt, |t, x| t * x[1]);
    let fv = VectorField::new(vec![f0, f1]).unwrap();
    let u0 = GridFunction::zeros(&g);
    let (ua, ra) = solve_parabolic_div(&a, &fv, &u0, 1e-10).unwrap();
    let (ub, rb) = solve_parabolic_div(&at, &fv, &u0, 1e-10).unwrap();
    assert_eq!(ra.assemblies, 1);
    assert_eq!(rb.assemblies, 1);
    assert_eq!(ua.values(), ub.values());
    assert_eq!(ra.iterations, rb.iterations);

    // a coefficient jump in time forces a second assembly
    let jump = random_rough_coefficients_with(&gt, 0.2, Pattern::TOnly, 4, Convention::Divergence).unwrap();
    let (_, rj) = solve_parabolic_div(&jump, &fv, &u0, 1e-10).unwrap();
    assert!(rj.assemblies >= 1 && rj.assemblies <= 5);
}

#[test]
fn parabolic_div_matches_nondiv_for_identity() {
    let g = square(33);
    let h = g.spacing(0);
    let gt = g.clone().with_time(TimeAxis { t0: 0.0, t1: 0.25, n: 9 }).unwrap();
    let grad = |x: &[f64]| [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()];
    let fx = GridFunction::from_fn(&gt, |t, x| t * grad(x)[0]);
    let fy = GridFunction::from_fn(&gt, |t, x| t * grad(x)[1]);
    let lap = GridFunction::from_fn(&gt, |t, x| -2.0 * PI * PI * t * ustar(x));
    let id = CoefficientField::identity(&g);
    let u0 = GridFunction::zeros(&g);
    let (ud, _) = solve_parabolic_div(&id, &VectorField::new(vec![fx, fy]).unwrap(), &u0, 1e-12).unwrap();
    let (un, _) = solve_parabolic_nondiv(&id, &lap, &u0, 1e-12).unwrap();
    assert!(ud.sub(&un).unwrap().sup_abs() <= 10.0 * h * h);
}
