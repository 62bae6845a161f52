//! Vanishing-moment kernel and partial, parabolic and full mollification.
//!
//! The kernel is `eta(t) = (alpha + beta t^2) b(t)` with the bump
//! `b(t) = exp(1 / (t^2 - 1))` on `(-1, 1)`. Its zeroth moment is one and its
//! first and second moments vanish, so mollification reproduces polynomials
//! of degree two in the mollified variables. `beta` is negative, hence the
//! kernel changes sign and mollification does not preserve positivity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{fd_derivative, restrict_interior, Axis, GridFunction, MultiIndex};
use crate::seminorm::{seminorm_xprime, seminorm_xprime_k, seminorm_zprime};
use crate::util::loglog_slope;

/// The bump `exp(1/(t^2 - 1))`, zero outside `(-1, 1)`.
pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 / (t * t - 1.0)).exp()
    } else {
        0.0
    }
}

/// Infinitely smooth step: 0 for `s <= 0`, 1 for `s >= 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// Plateau bump: 1 on `|t| <= 1`, 0 on `|t| >= 2`, smooth in between.
pub fn plateau_bump(t: f64) -> f64 {
    smooth_step(2.0 - t.abs())
}

fn simpson_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("adaptive quadrature did not converge".into()));
    }
    Ok(simpson_adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    // split at a few interior points so the first estimate is not degenerate
    let n = 8;
    let mut total = 0.0;
    for k in 0..n {
        let lo = a + (b - a) * k as f64 / n as f64;
        let hi = a + (b - a) * (k + 1) as f64 / n as f64;
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_adaptive(&f, lo, hi, fa, fm, fb, whole, tol / n as f64, 40)?;
    }
    Ok(total)
}

/// Kernel `eta(t) = (alpha + beta t^2) b(t)` and its quadrature moments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel1D {
    pub alpha: f64,
    pub beta: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Solves `alpha s0 + beta s2 = 1`, `alpha s2 + beta s4 = 0`.
fn moment_system(s0: f64, s2: f64, s4: f64) -> (f64, f64) {
    let det = s0 * s4 - s2 * s2;
    (s4 / det, -s2 / det)
}

/// Builds the kernel, solving for `alpha, beta` from quadrature moments of the bump.
pub fn build_kernel() -> Result<Kernel1D> {
    let tol = 1e-13;
    let s0 = integrate(bump, -1.0, 1.0, tol)?;
    let s2 = integrate(|t| t * t * bump(t), -1.0, 1.0, tol)?;
    let s4 = integrate(|t| t.powi(4) * bump(t), -1.0, 1.0, tol)?;
    let (alpha, beta) = moment_system(s0, s2, s4);
    let eta = |t: f64| (alpha + beta * t * t) * bump(t);
    let m0 = integrate(eta, -1.0, 1.0, tol)?;
    let m1 = integrate(|t| t * eta(t), -1.0, 1.0, tol)?;
    let m2 = integrate(|t| t * t * eta(t), -1.0, 1.0, tol)?;
    Ok(Kernel1D { alpha, beta, m0, m1, m2 })
}

impl Kernel1D {
    pub fn eval(&self, t: f64) -> f64 {
        (self.alpha + self.beta * t * t) * bump(t)
    }

    /// Trapezoid weights `w_j`, `|j| <= M`, for a kernel of half-width
    /// `ratio` lattice steps. The polynomial factor is re-solved from lattice
    /// sums of the bump, so the discrete moments `sum w_j = 1`,
    /// `sum j w_j = 0`, `sum j^2 w_j = 0` hold to rounding.
    pub fn lattice_weights(&self, ratio: f64) -> Vec<f64> {
        let m = (ratio * (1.0 - 1e-12)).floor() as usize;
        let ts: Vec<f64> = (-(m as isize)..=m as isize).map(|j| j as f64 / ratio).collect();
        let (mut s0, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for &t in &ts {
            let b = bump(t) / ratio;
            s0 += b;
            s2 += t * t * b;
            s4 += t.powi(4) * b;
        }
        let (a, be) = moment_system(s0, s2, s4);
        ts.iter().map(|&t| (a + be * t * t) * bump(t) / ratio).collect()
    }
}

fn kernel() -> Kernel1D {
    // cached by value; cheap to rebuild but deterministic either way
    use std::sync::OnceLock;
    static K: OnceLock<Kernel1D> = OnceLock::new();
    *K.get_or_init(|| build_kernel().expect("kernel quadrature converges"))
}

/// Convolution along one array axis with constant extension (wrap on periodic axes).
fn convolve_axis(u: &GridFunction, array_axis: usize, w: &[f64]) -> GridFunction {
    let g = u.grid();
    let n = g.shape()[array_axis];
    let s = g.strides()[array_axis];
    let periodic = g.array_periodic(array_axis);
    let m = (w.len() / 2) as isize;
    let v = u.values();
    let mut out = vec![0.0; v.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let p = ((k / s) % n) as isize;
        let base = k - p as usize * s;
        let mut acc = 0.0;
        for (jj, wj) in w.iter().enumerate() {
            let j = jj as isize - m;
            let mut pj = p - j;
            if periodic {
                pj = pj.rem_euclid(n as isize);
            } else {
                pj = pj.clamp(0, n as isize - 1);
            }
            acc += wj * v[base + pj as usize * s];
        }
        *o = acc;
    }
    GridFunction::new(g.clone(), out).expect("finite convolution")
}

fn mollify_axes(u: &GridFunction, axes: &[(usize, f64)]) -> GridFunction {
    let k = kernel();
    let mut cur = u.clone();
    for &(a, ratio) in axes {
        cur = convolve_axis(&cur, a, &k.lattice_weights(ratio));
    }
    cur
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps = {eps} must be positive")))
    }
}

/// Partial mollification in `x'` with kernel `prod_i eta(x^i / eps) / eps^q`.
pub fn mollify_xprime(u: &GridFunction, eps: f64) -> Result<GridFunction> {
    check_eps(eps)?;
    let g = u.grid();
    let mut axes = Vec::new();
    for a in g.xprime_axes() {
        let h = g.array_spacing(a);
        if eps < 2.0 * h * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!("eps = {eps} < 2h = {}", 2.0 * h)));
        }
        axes.push((a, eps / h));
    }
    Ok(mollify_axes(u, &axes))
}

/// Parabolic mollification in `(t, x')`: scale `eps^2` in time, `eps` in `x'`.
pub fn mollify_zprime(u: &GridFunction, eps: f64) -> Result<GridFunction> {
    check_eps(eps)?;
    let g = u.grid();
    let ta = g
        .time_axis()
        .ok_or_else(|| Error::InvalidArgument("parabolic mollification needs a time axis".into()))?;
    let tau = ta.tau();
    if eps * eps < 2.0 * tau * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("eps^2 = {} < 2 tau = {}", eps * eps, 2.0 * tau)));
    }
    let mut axes = vec![(0, eps * eps / tau)];
    for a in g.xprime_axes() {
        let h = g.array_spacing(a);
        if eps < 2.0 * h * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!("eps = {eps} < 2h = {}", 2.0 * h)));
        }
        axes.push((a, eps / h));
    }
    Ok(mollify_axes(u, &axes))
}

/// Mollification in all spatial variables; time is untouched.
pub fn mollify_full(u: &GridFunction, eps: f64) -> Result<GridFunction> {
    check_eps(eps)?;
    let g = u.grid();
    let mut axes = Vec::new();
    for a in g.spatial_axes() {
        let h = g.array_spacing(a);
        if eps < 2.0 * h * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!("eps = {eps} < 2h = {}", 2.0 * h)));
        }
        axes.push((a, eps / h));
    }
    Ok(mollify_axes(u, &axes))
}

/// Both sides of the mollifier bounds for a list of scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierReport {
    pub delta: f64,
    pub k: u8,
    pub eps: Vec<f64>,
    /// `sup |v - v^eps|` on the interior.
    pub sup_diff: Vec<f64>,
    /// `eps^{1-delta} sup |D_{x'} v^eps| / [v]`.
    pub grad_ratio: Vec<f64>,
    /// Full left side divided by `[v]`.
    pub lhs_ratio: Vec<f64>,
    /// `sup |v - v^eps| / (eps^{k+delta} [v]_{k+delta})`.
    pub approx_ratio: Vec<f64>,
    /// `[v]` of order `delta` (partial or parabolic).
    pub seminorm: f64,
    /// `[v]` of order `k + delta`.
    pub seminorm_k: f64,
    /// Log-log slope of `sup_diff` against `eps`.
    pub slope: f64,
    pub max_ratio: f64,
    /// Largest factor between consecutive `grad_ratio` entries.
    pub ratio_variation: f64,
}

fn consecutive_variation(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[0] / w[1]).max(w[1] / w[0])).fold(1.0, f64::max)
}

fn sup_xprime_derivatives(u: &GridFunction, order: usize, margin: f64) -> Result<f64> {
    let mut best = 0.0_f64;
    for alpha in MultiIndex::of_order(u.grid().q(), order) {
        let du = crate::lattice::derivative_xprime(u, &alpha)?;
        best = best.max(restrict_interior(&du, margin)?.sup_abs());
    }
    Ok(best)
}

/// Interior points, additionally dropping the outer quarters of the time axis.
fn interior_sup(u: &GridFunction, margin: f64) -> Result<f64> {
    let r = restrict_interior(u, margin)?;
    match r.grid().time_axis() {
        None => Ok(r.sup_abs()),
        Some(ta) => {
            let m = r.grid().spatial_len();
            let lo = ta.n / 4;
            let hi = ta.n - ta.n / 4;
            Ok(r.values()[lo * m..hi * m].iter().fold(0.0, |a, v| a.max(v.abs())))
        }
    }
}

/// Checks `eps^{1-delta} sup|D v^eps| + eps^{2-delta} sup|D^2 v^eps| <= N [v]_{x',delta}`
/// and `sup|v - v^eps| <= N eps^{k+delta} [v]_{x',k+delta}` on the interior.
pub fn check_xprime_mollifier(v: &GridFunction, delta: f64, k: u8, eps_list: &[f64], margin: f64) -> Result<MollifierReport> {
    let s0 = seminorm_xprime(v, delta)?;
    let sk = if k == 0 { s0 } else { seminorm_xprime_k(v, k, delta)? };
    let mut rep = MollifierReport {
        delta,
        k,
        eps: eps_list.to_vec(),
        sup_diff: vec![],
        grad_ratio: vec![],
        lhs_ratio: vec![],
        approx_ratio: vec![],
        seminorm: s0,
        seminorm_k: sk,
        slope: 0.0,
        max_ratio: 0.0,
        ratio_variation: 0.0,
    };
    for &eps in eps_list {
        let m = mollify_xprime(v, eps)?;
        let diff = interior_sup(&v.sub(&m)?, margin)?;
        let d1 = sup_xprime_derivatives(&m, 1, margin)?;
        let d2 = sup_xprime_derivatives(&m, 2, margin)?;
        let g = eps.powf(1.0 - delta) * d1;
        let lhs = g + eps.powf(2.0 - delta) * d2;
        rep.sup_diff.push(diff);
        rep.grad_ratio.push(g / s0);
        rep.lhs_ratio.push(lhs / s0);
        rep.approx_ratio.push(diff / (eps.powf(k as f64 + delta) * sk));
    }
    finish(&mut rep);
    Ok(rep)
}

/// Parabolic counterpart: `eps^{2-delta} sup|D_t v^eps| + eps^{2-delta} sup|D^2_{x'} v^eps|
/// + eps^{1-delta} sup|D_{x'} v^eps| <= N [v]_{z',delta/2,delta}`.
pub fn check_zprime_mollifier(v: &GridFunction, delta: f64, eps_list: &[f64], margin: f64) -> Result<MollifierReport> {
    let s0 = seminorm_zprime(v, delta)?;
    let mut rep = MollifierReport {
        delta,
        k: 0,
        eps: eps_list.to_vec(),
        sup_diff: vec![],
        grad_ratio: vec![],
        lhs_ratio: vec![],
        approx_ratio: vec![],
        seminorm: s0,
        seminorm_k: s0,
        slope: 0.0,
        max_ratio: 0.0,
        ratio_variation: 0.0,
    };
    for &eps in eps_list {
        let m = mollify_zprime(v, eps)?;
        let diff = interior_sup(&v.sub(&m)?, margin)?;
        let mut d1 = 0.0_f64;
        let mut d2 = 0.0_f64;
        for alpha in MultiIndex::of_order(v.grid().q(), 1) {
            d1 = d1.max(interior_sup(&crate::lattice::derivative_xprime(&m, &alpha)?, margin)?);
        }
        for alpha in MultiIndex::of_order(v.grid().q(), 2) {
            d2 = d2.max(interior_sup(&crate::lattice::derivative_xprime(&m, &alpha)?, margin)?);
        }
        let dt = interior_sup(&fd_derivative(&m, Axis::Time, 1)?, margin)?;
        let g = eps.powf(1.0 - delta) * d1;
        let lhs = g + eps.powf(2.0 - delta) * (d2 + dt);
        rep.sup_diff.push(diff);
        rep.grad_ratio.push(g / s0);
        rep.lhs_ratio.push(lhs / s0);
        rep.approx_ratio.push(diff / (eps.powf(delta) * s0));
    }
    finish(&mut rep);
    Ok(rep)
}

fn finish(rep: &mut MollifierReport) {
    rep.slope = loglog_slope(&rep.eps, &rep.sup_diff);
    rep.max_ratio = rep.lhs_ratio.iter().cloned().fold(0.0, f64::max);
    rep.ratio_variation = consecutive_variation(&rep.grad_ratio);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{AnisotropicGrid, TimeAxis};

    #[test]
    fn kernel_moments() {
        let k = build_kernel().unwrap();
        assert!((k.m0 - 1.0).abs() <= 1e-10);
        assert!(k.m1.abs() <= 1e-10);
        assert!(k.m2.abs() <= 1e-10);
        assert!(k.beta < 0.0);
        // frozen from an independent scipy quad run
        assert!((k.alpha - 4.2645459311645935).abs() < 1e-9);
        assert!((k.beta + 12.726684160015992).abs() < 1e-9);
    }

    #[test]
    fn lattice_moments_exact() {
        let k = build_kernel().unwrap();
        for ratio in [2.0, 3.0, 4.5, 8.0, 32.0] {
            let w = k.lattice_weights(ratio);
            let m = (w.len() / 2) as f64;
            let s0: f64 = w.iter().sum();
            let s1: f64 = w.iter().enumerate().map(|(j, v)| (j as f64 - m) * v).sum();
            let s2: f64 = w.iter().enumerate().map(|(j, v)| (j as f64 - m).powi(2) * v).sum();
            assert!((s0 - 1.0).abs() < 1e-13 && s1.abs() < 1e-12 && s2.abs() < 1e-11, "ratio {ratio}");
        }
    }

    #[test]
    fn quadratics_reproduced() {
        let g = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 65).unwrap();
        let u = GridFunction::from_fn(&g, |_, x| 1.0 + 2.0 * x[0] - 3.0 * x[0] * x[0] + x[1].abs());
        let m = mollify_xprime(&u, 0.25).unwrap();
        // only points at least eps from the x' boundary see no extension
        let err = restrict_interior(&m.sub(&u).unwrap(), 0.25).unwrap().sup_abs();
        assert!(err <= 1e-6, "err = {err}");
        let c = GridFunction::constant(&g, 2.5);
        let mc = mollify_xprime(&c, 0.25).unwrap();
        assert!(mc.sub(&c).unwrap().sup_abs() < 1e-12);
        let gx = GridFunction::from_fn(&g, |_, x| (7.0 * x[1]).sin().signum());
        assert!(mollify_xprime(&gx, 0.25).unwrap().sub(&gx).unwrap().sup_abs() < 1e-12);
        assert!(mollify_xprime(&u, 0.03).is_err());
    }

    #[test]
    fn full_and_parabolic_reproduction() {
        let g = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 65)
            .unwrap()
            .with_time(TimeAxis { t0: -1.0, t1: 1.0, n: 129 })
            .unwrap();
        let u = GridFunction::from_fn(&g, |t, x| 0.5 + t - 2.0 * x[0] * x[0] + x[0] * t + (3.0 * x[1]).cos());
        let m = mollify_zprime(&u, 0.5).unwrap();
        let e = interior_sup(&m.sub(&u).unwrap(), 0.3).unwrap();
        assert!(e <= 1e-6, "zprime err {e}");
        let v = GridFunction::from_fn(&g, |t, x| t.sin() + x[0] * x[1] - x[1] * x[1]);
        let mf = mollify_full(&v, 0.25).unwrap();
        let e = interior_sup(&mf.sub(&v).unwrap(), 0.25).unwrap();
        assert!(e <= 1e-6, "full err {e}");
        let tt = GridFunction::from_fn(&g, |t, _| t.sin());
        assert!(mollify_full(&tt, 0.25).unwrap().sub(&tt).unwrap().sup_abs() < 1e-12);
    }

    #[test]
    fn kernel_sign_change_breaks_positivity() {
        let g = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 129).unwrap();
        let u = GridFunction::from_fn(&g, |_, x| if x[0].abs() < 0.1 { 1.0 } else { 0.0 });
        let m = mollify_xprime(&u, 0.25).unwrap();
        assert!(m.values().iter().any(|&v| v < -1e-6));
    }

    #[test]
    fn cusp_rate() {
        let g = AnisotropicGrid::new(
            2,
            1,
            vec![[-1.0, 1.0], [-1.0, 1.0]],
            vec![1025, 5],
            vec![crate::lattice::Boundary::DirichletBox; 2],
            None,
        )
        .unwrap();
        let v = GridFunction::from_fn(&g, |_, x| x[0].abs().sqrt() * (1.0 + x[1]));
        let eps: Vec<f64> = (2..=5).map(|j| 0.5f64.powi(j)).collect();
        let r = check_xprime_mollifier(&v, 0.5, 0, &eps, 0.25).unwrap();
        assert!((r.slope - 0.5).abs() <= 0.05, "slope {}", r.slope);
        assert!(r.ratio_variation <= 2.0);
    }
}
