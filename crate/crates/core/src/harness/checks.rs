//! Mollifier bounds and Campanato equivalence.

use super::config::ExperimentConfig;
use super::estimates::{grid, xprime_seminorm};
use super::par_map;
use super::report::{EstimateReport, Series, Verdict};
use crate::campanato::{campanato_quotient, interior_centres, PolyClass};
use crate::error::Result;
use crate::fields::{cusp_terms, evaluate_terms};
use crate::lattice::{AnisotropicGrid, Boundary, GridFunction, TimeAxis};
use crate::mollify::{check_xprime_mollifier, check_zprime_mollifier, MollifierReport};
use crate::util::mix_seed;

/// Exponents tried by the mollifier checks.
pub const L1_DELTAS: [f64; 3] = [0.3, 0.5, 0.7];
/// Scales of the `x'` mollifier check.
pub const L1_EPS_X: [f64; 4] = [0.25, 0.125, 0.0625, 0.03125];
/// Scales of the `z'` mollifier check.
pub const L1_EPS_Z: [f64; 3] = [0.25, 0.125, 0.0625];

/// Rough, bounded factor in the frozen variable.
fn rough_xpp(y: f64) -> f64 {
    if y >= 0.0 {
        1.5
    } else {
        0.5
    }
}

fn mollifier_verdicts(rep: &mut EstimateReport, tag: &str, l: &MollifierReport) {
    let pre = format!("{tag} delta={}", l.delta);
    rep.scalars.insert(format!("{pre}: slope"), l.slope);
    rep.scalars.insert(format!("{pre}: max_lhs_ratio"), l.max_ratio);
    rep.scalars.insert(format!("{pre}: ratio_variation"), l.ratio_variation);
    rep.series.insert(
        format!("{pre}: sup_diff"),
        Series { x_label: "eps".into(), y_label: "sup |v - v_eps|".into(), points: l.eps.iter().zip(&l.sup_diff).map(|(a, b)| [*a, *b]).collect() },
    );
    rep.verdicts.push(Verdict::at_most(&format!("{pre}: slope"), (l.slope - l.delta).abs(), 0.05, "|log-log slope of sup |v - v_eps| - delta|"));
    rep.verdicts.push(Verdict::at_most(&format!("{pre}: gradient ratio"), l.ratio_variation, 2.0, "largest factor between consecutive eps"));
    let finite = l.lhs_ratio.iter().all(|v| v.is_finite());
    rep.verdicts.push(Verdict::check(&format!("{pre}: bounded left side"), finite, l.max_ratio, f64::INFINITY, "max over eps of lhs / [v]"));
}

/// `x'` and `z'` mollifier bounds on a cusp in `x'` times a jump in `x''`.
pub fn run_l1(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new(cfg);
    let n = cfg.resolutions[0];
    let gx = AnisotropicGrid::new(2, 1, vec![[-1.0, 1.0]; 2], vec![n, 5], vec![Boundary::DirichletBox; 2], None)?;
    let nz = (n - 1) / 4 + 1;
    let gz = AnisotropicGrid::new(2, 1, vec![[-1.0, 1.0]; 2], vec![nz, 5], vec![Boundary::DirichletBox; 2], None)?
        .with_time(TimeAxis { t0: -0.25, t1: 0.25, n })?;
    let out = par_map(&L1_DELTAS, |&delta| -> Result<(MollifierReport, MollifierReport)> {
        let vx = GridFunction::from_fn(&gx, |_, x| x[0].abs().powf(delta) * rough_xpp(x[1]));
        let lx = check_xprime_mollifier(&vx, delta, 0, &L1_EPS_X, cfg.margin)?;
        let vz = GridFunction::from_fn(&gz, |t, x| (x[0].abs() + t.abs().sqrt()).powf(delta) * rough_xpp(x[1]));
        let lz = check_zprime_mollifier(&vz, delta, &L1_EPS_Z, cfg.margin)?;
        Ok((lx, lz))
    });
    for r in out {
        let (lx, lz) = r?;
        mollifier_verdicts(&mut rep, "x'", &lx);
        mollifier_verdicts(&mut rep, "z'", &lz);
    }
    Ok(rep)
}

/// Orders compared by the Campanato check.
pub const Q1_ORDERS: [u8; 2] = [1, 2];

/// Ratio of the Campanato quotient to the pointwise seminorm, one value per member.
fn q1_ratios(cfg: &ExperimentConfig, n: usize, k: u8, radii: &[f64]) -> Result<Vec<f64>> {
    let g = grid(cfg, n, false)?;
    let stride = (n - 1) / 8;
    let centres = interior_centres(&g, cfg.margin, stride);
    let members: Vec<usize> = (0..cfg.ensemble).collect();
    par_map(&members, |&m| -> Result<f64> {
        let seed = mix_seed(mix_seed(cfg.seed, m as u64), 2);
        let terms = cusp_terms(&g, k as f64 + cfg.delta, seed, true)?;
        let u = evaluate_terms(&g, &terms, false);
        let camp = campanato_quotient(&u, k, cfg.delta, PolyClass::Ptilde(k), &centres, radii)?;
        let pointwise = xprime_seminorm(&u, k as usize, cfg.delta, cfg.margin)?;
        Ok(camp / pointwise)
    })
    .into_iter()
    .collect()
}

/// Two-sided comparison of the Campanato quotient with the pointwise seminorm.
pub fn run_q1(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new(cfg);
    let coarse = *cfg.resolutions.iter().min().unwrap_or(&17);
    // same radii at every resolution
    let h = 2.0 / (coarse - 1) as f64;
    let mut radii = vec![];
    let mut r = 0.25;
    while r >= 4.0 * h * (1.0 - 1e-12) {
        radii.push(r);
        r *= 0.5;
    }
    for k in Q1_ORDERS {
        let mut c1 = vec![];
        let mut c2 = vec![];
        for &n in &cfg.resolutions {
            let ratios = q1_ratios(cfg, n, k, &radii)?;
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            rep.scalars.insert(format!("k={k} n={n}: c1"), lo);
            rep.scalars.insert(format!("k={k} n={n}: c2"), hi);
            c1.push(lo);
            c2.push(hi);
        }
        rep.series.insert(
            format!("k={k}: c1"),
            Series { x_label: "n".into(), y_label: "c1".into(), points: cfg.resolutions.iter().zip(&c1).map(|(n, v)| [*n as f64, *v]).collect() },
        );
        rep.series.insert(
            format!("k={k}: c2"),
            Series { x_label: "n".into(), y_label: "c2".into(), points: cfg.resolutions.iter().zip(&c2).map(|(n, v)| [*n as f64, *v]).collect() },
        );
        let positive = c1.iter().all(|v| v.is_finite() && *v > 0.0) && c2.iter().all(|v| v.is_finite());
        rep.verdicts.push(Verdict::check(&format!("k={k}: 0 < c1 <= c2 < inf"), positive, c1[c1.len() - 1], 0.0, "finest resolution"));
        let l = c1.len();
        for (name, c) in [("c1", &c1), ("c2", &c2)] {
            let f = if l >= 2 { (c[l - 1] / c[l - 2]).max(c[l - 2] / c[l - 1]) } else { f64::NAN };
            rep.verdicts.push(Verdict::at_most(&format!("k={k}: {name} stable"), f, 2.0, "factor between the two finest resolutions"));
        }
    }
    Ok(rep)
}
