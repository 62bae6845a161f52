//! Counterexample experiments.

use super::config::ExperimentConfig;
use super::report::{EstimateReport, Series, Verdict};
use crate::error::{Error, Result};
use crate::fields::CoefficientField;
use crate::lattice::{AnisotropicGrid, Boundary};
use crate::oracle::{counterexample_mixed, halfplane_counterexample_data, PLATEAU_RADIUS};
use crate::solve::solve_elliptic_nondiv;
use crate::util::loglog_slope;

/// Half-width of the C1 window around the origin.
pub const C1_HALF_WIDTH: f64 = 0.25;

/// Closed-form second derivatives on grids refined toward the origin. Sups
/// run over the nodes of the plateau disk, origin excluded, so the cutoff
/// taper does not mask the singular growth.
pub fn run_c1(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new(cfg);
    let mut hs = Vec::new();
    let (mut sxy, mut sxx, mut syy) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &cfg.resolutions {
        let h = 2.0 * C1_HALF_WIDTH / (n - 1) as f64;
        let (mut mxy, mut mxx, mut myy) = (0.0_f64, 0.0_f64, 0.0_f64);
        let mid = (n - 1) / 2;
        for i in 0..n {
            for j in 0..n {
                if i == mid && j == mid {
                    continue;
                }
                let x = (i as f64 - mid as f64) * h;
                let y = (j as f64 - mid as f64) * h;
                if x.hypot(y) > PLATEAU_RADIUS {
                    continue;
                }
                let v = counterexample_mixed(x, y)?;
                mxy = mxy.max(v.u_xy.abs());
                mxx = mxx.max(v.u_xx.abs());
                myy = myy.max(v.u_yy.abs());
            }
        }
        hs.push(h);
        sxy.push(mxy);
        sxx.push(mxx);
        syy.push(myy);
    }
    let s: Vec<f64> = hs.iter().map(|h| (1.0 / h).ln().sqrt()).collect();
    let pts = |ys: &[f64], xs: &[f64]| xs.iter().zip(ys).map(|(x, y)| [*x, *y]).collect::<Vec<_>>();
    let series = |x: &str, y: &str, points| Series { x_label: x.into(), y_label: y.into(), points };
    rep.series.insert("sup_u_xy_vs_h".into(), series("h", "sup |u_xy|", pts(&sxy, &hs)));
    rep.series.insert("sup_u_xy_vs_sqrt_ln".into(), series("sqrt(ln(1/h))", "sup |u_xy|", pts(&sxy, &s)));
    rep.series.insert("sup_u_xx_vs_h".into(), series("h", "sup |u_xx|", pts(&sxx, &hs)));
    rep.series.insert("sup_u_yy_vs_h".into(), series("h", "sup |u_yy|", pts(&syy, &hs)));

    // one-parameter fit sup ~ c sqrt(ln(1/h))
    let c = s.iter().zip(&sxy).map(|(a, b)| a * b).sum::<f64>() / s.iter().map(|a| a * a).sum::<f64>();
    let resid = s.iter().zip(&sxy).map(|(a, b)| ((b - c * a) / b).abs()).fold(0.0, f64::max);
    let lnln: Vec<f64> = hs.iter().map(|h| (1.0 / h).ln()).collect();
    let exponent = loglog_slope(&lnln, &sxy);
    rep.scalars.insert("sqrt_ln_fit_c".into(), c);
    rep.scalars.insert("sqrt_ln_fit_max_rel_residual".into(), resid);
    rep.scalars.insert("free_exponent_of_ln".into(), exponent);

    let monotone = sxy.windows(2).all(|w| w[1] > w[0]);
    rep.verdicts.push(Verdict::check("u_xy monotone growth", monotone, sxy[sxy.len() - 1], sxy[0], "sup |u_xy| strictly increasing as h decreases"));
    let fine = hs.len() - 1;
    let growth = hs
        .iter()
        .position(|h| (h / hs[fine] - 16.0).abs() < 1e-9)
        .map(|k| sxy[fine] / sxy[k])
        .unwrap_or(f64::NAN);
    rep.scalars.insert("growth_over_16x".into(), growth);
    rep.verdicts.push(Verdict::at_least("u_xy growth over 16x refinement", growth, 1.5, "sup |u_xy| at finest h / at 16 h"));
    for (name, v) in [("u_xx", &sxx), ("u_yy", &syy)] {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(0.0, f64::max);
        let var = hi / lo - 1.0;
        rep.scalars.insert(format!("{name}_variation"), var);
        rep.verdicts.push(Verdict::at_most(&format!("{name} bounded"), var, 0.10, "max / min - 1 of the sup over refinements"));
    }
    rep.verdicts.push(Verdict::at_most(
        "sqrt(ln) fit",
        resid,
        0.20,
        "max relative residual of sup |u_xy| against c sqrt(ln(1/h))",
    ));
    Ok(rep)
}

/// Scales `eps` at which `v(eps, -eps)` is reported.
pub const C2_EPS: [f64; 3] = [0.125, 0.0625, 0.03125];

fn halfplane_grid(half: f64, n_x1: usize) -> Result<AnisotropicGrid> {
    AnisotropicGrid::new(
        2,
        1,
        vec![[0.0, half], [-half, half]],
        vec![n_x1, 2 * n_x1 - 1],
        vec![Boundary::DirichletBox; 2],
        None,
    )
}

/// `(v(eps, -eps) for eps in C2_EPS, v(0, -eps) for eps in C2_EPS)`.
fn halfplane_run(g: &AnisotropicGrid, tol: f64) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let data = halfplane_counterexample_data(g)?;
    let (u, rep) = solve_elliptic_nondiv(&CoefficientField::identity(g), &data.f, tol)?;
    let h1 = g.spacing(0);
    let h2 = g.spacing(1);
    let idx = |axis: usize, x: f64| g.index_of(axis, x).ok_or_else(|| Error::InvalidGrid(format!("{x} is not a node")));
    let mut corner = Vec::new();
    let mut edge = Vec::new();
    for eps in C2_EPS {
        let (i, j) = (idx(0, eps)?, idx(1, -eps)?);
        let d11 = (u.get(&[i + 1, j]) - 2.0 * u.get(&[i, j]) + u.get(&[i - 1, j])) / (h1 * h1);
        corner.push(d11);
        // on x^1 = 0 the equation gives D_11 u = f - D_22 u, with D_22 u from the boundary values
        let d22 = (u.get(&[0, j + 1]) - 2.0 * u.get(&[0, j]) + u.get(&[0, j - 1])) / (h2 * h2);
        edge.push(data.f.get(&[0, j]) - d22);
    }
    Ok((corner, edge, rep.iterations))
}

/// Half-plane problem: `v = D_1^2 u` near the corner.
pub fn run_c2(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new(cfg);
    let base = cfg.resolutions[0];
    let mut runs: Vec<(String, AnisotropicGrid)> = cfg
        .resolutions
        .iter()
        .map(|&n| halfplane_grid(2.0, n).map(|g| (format!("box2_n{n}"), g)))
        .collect::<Result<_>>()?;
    runs.push((format!("box4_n{}", 2 * base - 1), halfplane_grid(4.0, 2 * base - 1)?));
    let mut deltas = Vec::new();
    let mut all_edge_zero = true;
    for (name, g) in &runs {
        let (corner, edge, iters) = halfplane_run(g, cfg.tol)?;
        for (k, eps) in C2_EPS.iter().enumerate() {
            rep.scalars.insert(format!("{name}: v(eps,-eps), eps={eps}"), corner[k]);
            rep.scalars.insert(format!("{name}: v(0,-eps), eps={eps}"), edge[k]);
        }
        rep.scalars.insert(format!("{name}: iterations"), iters as f64);
        all_edge_zero &= edge.iter().all(|v| *v == 0.0);
        let dhat = corner.iter().cloned().fold(f64::INFINITY, f64::min);
        rep.scalars.insert(format!("{name}: delta_hat"), dhat);
        rep.series.insert(
            name.clone(),
            Series { x_label: "eps".into(), y_label: "v(eps,-eps)".into(), points: C2_EPS.iter().zip(&corner).map(|(e, v)| [*e, *v]).collect() },
        );
        deltas.push(dhat);
    }
    rep.verdicts.push(Verdict::check("v(0,-eps) = 0", all_edge_zero, 0.0, 0.0, "exact zero on x^1 = 0 for every eps and run"));
    rep.verdicts.push(Verdict::check("delta_hat > 0", deltas[0] > 0.0, deltas[0], 0.0, "min over eps of v(eps,-eps), base run"));
    for (k, (name, _)) in runs.iter().enumerate().skip(1) {
        let change = (deltas[k] / deltas[0] - 1.0).abs();
        rep.verdicts.push(Verdict::at_most(&format!("delta_hat stable: {name}"), change, 0.25, "|delta_hat / delta_hat(base) - 1|"));
    }
    Ok(rep)
}
