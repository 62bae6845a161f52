//! Ensemble estimate experiments.

use super::config::ExperimentConfig;
use super::report::{Branch, EstimateReport, MemberRecord, Verdict};
use super::par_map;
use crate::error::{Error, Result};
use crate::fields::{
    degenerate_coefficients, hoelder_coefficients, random_rough_coefficients, random_rough_coefficients_with,
    synthetic_rhs, Convention, Pattern, RhsKind, VectorField,
};
use crate::lattice::{derivative_along, fd_derivative, restrict_interior, AnisotropicGrid, Axis, GridFunction, MultiIndex, TimeAxis};
use crate::seminorm::{seminorm_partial, seminorm_time_half, seminorm_xprime, seminorm_zprime, Family, PairBudget, SeminormSpec};
use crate::solve::{solve_elliptic_div, solve_elliptic_nondiv, solve_parabolic_div, solve_parabolic_nondiv, SolveReport};
use crate::util::{median, mix_seed};

/// Final time of parabolic runs.
pub const FINAL_TIME: f64 = 0.25;

/// Streams derived from a member seed.
const COEFF: u64 = 1;
const DATA: u64 = 2;

pub(crate) fn grid(cfg: &ExperimentConfig, n: usize, parabolic: bool) -> Result<AnisotropicGrid> {
    let g = AnisotropicGrid::cube(cfg.d, cfg.q, -1.0, 1.0, n)?;
    if parabolic {
        g.with_time(TimeAxis { t0: 0.0, t1: FINAL_TIME, n: (n - 1) / 4 + 1 })
    } else {
        Ok(g)
    }
}

/// Numerator, denominator and control of one member solve.
pub(crate) struct Measure {
    pub num: f64,
    pub den: f64,
    pub control: Option<f64>,
    pub report: SolveReport,
}

/// `max_{|alpha| = k} [D^alpha u]_{x',delta}` on the interior; derivatives
/// are taken on the full grid first.
pub fn xprime_seminorm(u: &GridFunction, k: usize, delta: f64, margin: f64) -> Result<f64> {
    let mut best = 0.0_f64;
    for a in MultiIndex::of_order(u.grid().q(), k) {
        let du = derivative_along(u, &a.0)?;
        best = best.max(seminorm_xprime(&restrict_interior(&du, margin)?, delta)?);
    }
    Ok(best)
}

/// As [`xprime_seminorm`] with the parabolic `z'` quotient.
pub fn zprime_seminorm(u: &GridFunction, k: usize, delta: f64, margin: f64) -> Result<f64> {
    let mut best = 0.0_f64;
    for a in MultiIndex::of_order(u.grid().q(), k) {
        let du = derivative_along(u, &a.0)?;
        best = best.max(seminorm_zprime(&restrict_interior(&du, margin)?, delta)?);
    }
    Ok(best)
}

/// `max_{|beta| = k} [D^beta u]_{x'',delta}` over all spatial `beta`: the
/// control quantity that fails to stay bounded for rough coefficients.
pub fn xpp_control(u: &GridFunction, k: usize, delta: f64, margin: f64) -> Result<f64> {
    let g = u.grid();
    let xpp: Vec<usize> = (g.q()..g.d()).collect();
    let mut best = 0.0_f64;
    for b in MultiIndex::of_order(g.d(), k) {
        let du = derivative_along(u, &b.0)?;
        best = best.max(seminorm_partial(&restrict_interior(&du, margin)?, &xpp, delta, PairBudget::default())?);
    }
    Ok(best)
}

/// `sup |D^2 u|` on the interior over all second derivatives.
pub fn second_derivative_sup(u: &GridFunction, margin: f64) -> Result<f64> {
    let mut best = 0.0_f64;
    for b in MultiIndex::of_order(u.grid().d(), 2) {
        best = best.max(restrict_interior(&derivative_along(u, &b.0)?, margin)?.sup_abs());
    }
    Ok(best)
}

fn unit(d: usize, i: usize, j: usize) -> Vec<usize> {
    let mut v = vec![0; d];
    v[i] += 1;
    v[j] += 1;
    v
}

/// Full seminorm of `D_{x'} u` of order `1 + delta` (all first derivatives
/// of `D_{x'} u`, quotients in every variable) and its `x''` component
/// (quotients in `x''` of `D_{x''} D_{x'} u`).
pub fn full_dxprime(u: &GridFunction, delta: f64, margin: f64) -> Result<(f64, f64)> {
    let g = u.grid();
    let (d, q) = (g.d(), g.q());
    let xpp: Vec<usize> = (q..d).collect();
    let full = SeminormSpec::new(Family::Full, 0, delta);
    let (mut all, mut comp) = (0.0_f64, 0.0_f64);
    for i in 0..q {
        for j in 0..d {
            let w = restrict_interior(&derivative_along(u, &unit(d, i, j))?, margin)?;
            all = all.max(full.evaluate(&w)?);
            if j >= q {
                comp = comp.max(seminorm_partial(&w, &xpp, delta, PairBudget::default())?);
            }
        }
    }
    Ok((all, comp))
}

fn vector_data(g: &AnisotropicGrid, delta: f64, seed: u64, kind: RhsKind) -> Result<VectorField> {
    let comps = (0..g.d())
        .map(|i| synthetic_rhs(g, delta, mix_seed(seed, 100 + i as u64), kind).map(|s| s.f))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}

fn vector_seminorm(f: &VectorField, delta: f64, margin: f64, z: bool) -> Result<f64> {
    let mut best = 0.0_f64;
    for c in f.components() {
        best = best.max(if z { zprime_seminorm(c, 0, delta, margin)? } else { xprime_seminorm(c, 0, delta, margin)? });
    }
    Ok(best)
}

/// Runs `measure` for every (resolution, member) and builds the records.
pub(crate) fn ensemble<F>(cfg: &ExperimentConfig, measure: F) -> Vec<MemberRecord>
where
    F: Fn(usize, u64) -> Result<Measure> + Sync,
{
    let jobs: Vec<(usize, usize)> = cfg
        .resolutions
        .iter()
        .flat_map(|&n| (0..cfg.ensemble).map(move |m| (n, m)))
        .collect();
    par_map(&jobs, |&(n, m)| {
        let seed = mix_seed(cfg.seed, m as u64);
        let h = 2.0 / (n - 1) as f64;
        let mut rec = MemberRecord {
            member: m,
            seed,
            resolution: n,
            h,
            data_seminorm: 0.0,
            solution_seminorm: 0.0,
            ratio: None,
            control: None,
            iterations: 0,
            residual: 0.0,
            flags: vec![],
        };
        match measure(n, seed) {
            Ok(ms) => {
                rec.data_seminorm = ms.den;
                rec.solution_seminorm = ms.num;
                rec.control = ms.control;
                rec.iterations = ms.report.iterations;
                rec.residual = ms.report.residual;
                if ms.den > 1e-12 * ms.num.abs().max(f64::MIN_POSITIVE) && ms.num.is_finite() {
                    rec.ratio = Some(ms.num / ms.den);
                } else {
                    rec.flags.push("degenerate-data".into());
                }
            }
            Err(e) => rec.flags.push(format!("failure: {e}")),
        }
        rec
    })
}

fn push_branch(rep: &mut EstimateReport, name: &str, members: Vec<MemberRecord>, control: bool) {
    rep.branches.push(Branch::new(name, members));
    let i = rep.branches.len() - 1;
    rep.stability_verdicts(i, control);
}

/// Nondivergence elliptic, `a = a(x'')`.
pub fn run_e1(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let (delta, margin) = (cfg.delta, cfg.margin);
    let members = ensemble(cfg, |n, seed| {
        let g = grid(cfg, n, false)?;
        let a = random_rough_coefficients(&g, cfg.nu, Pattern::XppOnly, mix_seed(seed, COEFF))?;
        let f = synthetic_rhs(&g, delta, mix_seed(seed, DATA), RhsKind::RoughXpp)?.f;
        let (u, report) = solve_elliptic_nondiv(&a, &f, cfg.tol)?;
        Ok(Measure {
            num: xprime_seminorm(&u, 2, delta, margin)?,
            den: xprime_seminorm(&f, 0, delta, margin)?,
            control: Some(xpp_control(&u, 2, delta, margin)?),
            report,
        })
    });
    let mut rep = EstimateReport::new(cfg);
    push_branch(&mut rep, "nondiv", members, true);
    Ok(rep)
}

/// Divergence elliptic, `a = a(x'')`.
pub fn run_e2(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let (delta, margin) = (cfg.delta, cfg.margin);
    let members = ensemble(cfg, |n, seed| {
        let g = grid(cfg, n, false)?;
        let a = random_rough_coefficients_with(&g, cfg.nu, Pattern::XppOnly, mix_seed(seed, COEFF), Convention::Divergence)?;
        let f = vector_data(&g, delta, mix_seed(seed, DATA), RhsKind::RoughXpp)?;
        let (u, report) = solve_elliptic_div(&a, &f, cfg.tol)?;
        Ok(Measure {
            num: xprime_seminorm(&u, 1, delta, margin)?,
            den: vector_seminorm(&f, delta, margin, false)?,
            control: Some(xpp_control(&u, 1, delta, margin)?),
            report,
        })
    });
    let mut rep = EstimateReport::new(cfg);
    push_branch(&mut rep, "div", members, true);
    Ok(rep)
}

/// Nondivergence parabolic, `a = a(t, x'')`.
pub fn run_e3(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let (delta, margin) = (cfg.delta, cfg.margin);
    let members = ensemble(cfg, |n, seed| {
        let g = grid(cfg, n, true)?;
        let a = random_rough_coefficients(&g, cfg.nu, Pattern::TAndXpp, mix_seed(seed, COEFF))?;
        let f = synthetic_rhs(&g, delta, mix_seed(seed, DATA), RhsKind::TimeDependent)?.f;
        let (u, report) = solve_parabolic_nondiv(&a, &f, &GridFunction::zeros(&g.spatial()), cfg.tol)?;
        Ok(Measure {
            num: xprime_seminorm(&u, 2, delta, margin)?,
            den: xprime_seminorm(&f, 0, delta, margin)?,
            control: Some(xpp_control(&u, 2, delta, margin)?),
            report,
        })
    });
    let mut rep = EstimateReport::new(cfg);
    push_branch(&mut rep, "parabolic-nondiv", members, true);
    Ok(rep)
}

/// Divergence parabolic, `a = a(t, x'')`.
pub fn run_e4(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let (delta, margin) = (cfg.delta, cfg.margin);
    let members = ensemble(cfg, |n, seed| {
        let g = grid(cfg, n, true)?;
        let a = random_rough_coefficients_with(&g, cfg.nu, Pattern::TAndXpp, mix_seed(seed, COEFF), Convention::Divergence)?;
        let f = vector_data(&g, delta, mix_seed(seed, DATA), RhsKind::TimeDependent)?;
        let (u, report) = solve_parabolic_div(&a, &f, &GridFunction::zeros(&g.spatial()), cfg.tol)?;
        Ok(Measure {
            num: xprime_seminorm(&u, 1, delta, margin)?,
            den: vector_seminorm(&f, delta, margin, false)?,
            control: Some(xpp_control(&u, 1, delta, margin)?),
            report,
        })
    });
    let mut rep = EstimateReport::new(cfg);
    push_branch(&mut rep, "parabolic-div", members, true);
    Ok(rep)
}

/// Parabolic `z'` seminorms with `a = a(x'')`, both forms.
pub fn run_e5(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let (delta, margin) = (cfg.delta, cfg.margin);
    let nondiv = ensemble(cfg, |n, seed| {
        let g = grid(cfg, n, true)?;
        let a = random_rough_coefficients(&g.spatial(), cfg.nu, Pattern::XppOnly, mix_seed(seed, COEFF))?;
        let f = synthetic_rhs(&g, delta, mix_seed(seed, DATA), RhsKind::TimeDependent)?.f;
        let (u, report) = solve_parabolic_nondiv(&a, &f, &GridFunction::zeros(&g.spatial()), cfg.tol)?;
        let ut = fd_derivative(&u, Axis::Time, 1)?;
        Ok(Measure {
            num: zprime_seminorm(&ut, 0, delta, margin)? + zprime_seminorm(&u, 2, delta, margin)?,
            den: zprime_seminorm(&f, 0, delta, margin)?,
            control: Some(xpp_control(&u, 2, delta, margin)?),
            report,
        })
    });
    let div = ensemble(cfg, |n, seed| {
        let g = grid(cfg, n, true)?;
        let a = random_rough_coefficients_with(&g.spatial(), cfg.nu, Pattern::XppOnly, mix_seed(seed, COEFF), Convention::Divergence)?;
        let f = vector_data(&g, delta, mix_seed(seed, DATA), RhsKind::TimeDependent)?;
        let (u, report) = solve_parabolic_div(&a, &f, &GridFunction::zeros(&g.spatial()), cfg.tol)?;
        Ok(Measure {
            num: zprime_seminorm(&u, 1, delta, margin)? + seminorm_time_half(&restrict_interior(&u, margin)?, delta)?,
            den: vector_seminorm(&f, delta, margin, true)?,
            control: Some(xpp_control(&u, 1, delta, margin)?),
            report,
        })
    });
    let mut rep = EstimateReport::new(cfg);
    push_branch(&mut rep, "zprime-nondiv", nondiv, true);
    push_branch(&mut rep, "zprime-div", div, true);
    Ok(rep)
}

/// Values of `K` used by [`run_e6`].
pub const E6_K: [f64; 3] = [0.0, 0.25, 0.5];

/// Coefficients Hoelder in `x'`: the ratio against `[f] + K [D^2 u]_0` is
/// recorded as `ratio`, the ratio against `[f]` alone as `control`.
pub fn run_e6(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let (delta, margin) = (cfg.delta, cfg.margin);
    let mut rep = EstimateReport::new(cfg);
    for k in E6_K {
        let members = ensemble(cfg, |n, seed| {
            let g = grid(cfg, n, false)?;
            let a = hoelder_coefficients(&g, cfg.nu, k, delta, mix_seed(seed, COEFF))?;
            let f = synthetic_rhs(&g, delta, mix_seed(seed, DATA), RhsKind::RoughXpp)?.f;
            let (u, report) = solve_elliptic_nondiv(&a, &f, cfg.tol)?;
            let num = xprime_seminorm(&u, 2, delta, margin)?;
            let fs = xprime_seminorm(&f, 0, delta, margin)?;
            let d2 = second_derivative_sup(&u, margin)?;
            Ok(Measure { num, den: fs + k * d2, control: Some(num / fs), report })
        });
        push_branch(&mut rep, &format!("K={k}"), members, false);
    }
    let mut medians = Vec::new();
    for (b, k) in rep.branches.iter().zip(E6_K) {
        let fine = b.aggregates.last().map(|a| a.resolution).unwrap_or(0);
        let plain: Vec<f64> = b.members.iter().filter(|m| m.resolution == fine).filter_map(|m| m.control).collect();
        let med = median(&plain);
        rep.scalars.insert(format!("plain ratio at finest, median, K={k}"), med);
        rep.scalars.insert(format!("plain ratio at finest, max, K={k}"), plain.iter().cloned().fold(f64::NAN, f64::max));
        medians.push(med);
    }
    let increasing = medians.windows(2).all(|w| w[1] > w[0]);
    rep.verdicts.push(Verdict::check(
        "plain ratio grows with K",
        increasing,
        medians[medians.len() - 1] / medians[0],
        1.0,
        "ensemble median of [u]_{x',2+d}/[f]_{x',d} at the finest grid, strictly increasing over K",
    ));
    Ok(rep)
}

/// Degenerate coefficients in the `x''` block.
pub fn run_e7(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let (delta, margin) = (cfg.delta, cfg.margin);
    let members = ensemble(cfg, |n, seed| {
        let g = grid(cfg, n, false)?;
        let a = degenerate_coefficients(&g, cfg.nu, mix_seed(seed, COEFF))?;
        let f = synthetic_rhs(&g, delta, mix_seed(seed, DATA), RhsKind::RoughXpp)?.f;
        let (u, report) = solve_elliptic_nondiv(&a, &f, cfg.tol)?;
        Ok(Measure {
            num: xprime_seminorm(&u, 2, delta, margin)?,
            den: xprime_seminorm(&f, 0, delta, margin)?,
            control: None,
            report,
        })
    });
    let mut rep = EstimateReport::new(cfg);
    push_branch(&mut rep, "degenerate", members, false);
    Ok(rep)
}

/// Full regularity of `D_{x'} u`: constant coefficients (stable), rough
/// `a(x'')` (the `x''` component grows), and `a(t)` (parabolic, stable).
pub fn run_e8(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let (delta, margin) = (cfg.delta, cfg.margin);
    let elliptic = |pattern: Pattern| {
        ensemble(cfg, move |n, seed| {
            let g = grid(cfg, n, false)?;
            let a = random_rough_coefficients(&g, cfg.nu, pattern, mix_seed(seed, COEFF))?;
            let f = synthetic_rhs(&g, delta, mix_seed(seed, DATA), RhsKind::RoughXpp)?.f;
            let (u, report) = solve_elliptic_nondiv(&a, &f, cfg.tol)?;
            let (full, comp) = full_dxprime(&u, delta, margin)?;
            Ok(Measure { num: full, den: xprime_seminorm(&f, 0, delta, margin)?, control: Some(comp), report })
        })
    };
    let constant = elliptic(Pattern::Constant);
    let rough = elliptic(Pattern::XppOnly);
    let t_only = ensemble(cfg, |n, seed| {
        let g = grid(cfg, n, true)?;
        let a = random_rough_coefficients(&g, cfg.nu, Pattern::TOnly, mix_seed(seed, COEFF))?;
        let f = synthetic_rhs(&g, delta, mix_seed(seed, DATA), RhsKind::TimeDependent)?.f;
        let (u, report) = solve_parabolic_nondiv(&a, &f, &GridFunction::zeros(&g.spatial()), cfg.tol)?;
        let (full, comp) = full_dxprime(&u, delta, margin)?;
        let mut time = 0.0_f64;
        for a in MultiIndex::of_order(g.q(), 1) {
            time = time.max(seminorm_time_half(&restrict_interior(&derivative_along(&u, &a.0)?, margin)?, delta)?);
        }
        Ok(Measure { num: full + time, den: xprime_seminorm(&f, 0, delta, margin)?, control: Some(comp), report })
    });
    let mut rep = EstimateReport::new(cfg);
    rep.branches.push(Branch::new("constant", constant));
    rep.stability_verdicts(0, false);
    rep.branches.push(Branch::new("rough", rough));
    let g = rep.branches[1].control_growth.unwrap_or(f64::NAN);
    rep.verdicts.push(Verdict::at_least("rough: x'' component growth", g, 2.0, "max [D_{x''} D_{x'} u]_{x'',d}, finest / coarsest"));
    rep.branches.push(Branch::new("t-only", t_only));
    rep.stability_verdicts(2, false);
    if rep.branches.iter().all(|b| b.members.iter().all(|m| m.ratio.is_none())) {
        return Err(Error::InvalidArgument("every E8 member failed".into()));
    }
    Ok(rep)
}
