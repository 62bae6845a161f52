//! Independent reference computations: spectral constant-coefficient
//! solves, closed-form counterexample derivatives, exhaustive seminorm
//! maximisation and discrete minimax polynomial fits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{derivative_along, fibers, AnisotropicGrid, Boundary, GridFunction};
use crate::mollify::plateau_bump;
use crate::seminorm::{pair_denominator, SeminormSpec};
use crate::util::{smoothstep5, smoothstep5_d1, smoothstep5_d2};

fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let strides = crate::lattice::row_major_strides(shape);
    let total = data.len();
    for (ax, &n) in shape.iter().enumerate() {
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let s = strides[ax];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in 0..total {
            if (start / s) % n != 0 {
                continue;
            }
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[start + k * s];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                data[start + k * s] = *v;
            }
        }
    }
    if inverse {
        let scale = 1.0 / total as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Symbol used by the spectral solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    /// `a^{ij} k_i k_j`.
    Continuous,
    /// Symbol of the central stencil with the 4-point cross.
    Stencil,
}

fn spectral(a: &DMatrix<f64>, f: &GridFunction, symbol: Symbol) -> Result<GridFunction> {
    let g = f.grid();
    let d = g.d();
    if g.has_time() || g.boundary().iter().any(|b| *b != Boundary::Periodic) {
        return Err(Error::InvalidArgument("spectral solve needs a fully periodic spatial grid".into()));
    }
    if a.nrows() != d || a.ncols() != d || a.clone().cholesky().is_none() || (a - a.transpose()).amax() > 0.0 {
        return Err(Error::InvalidArgument("coefficient matrix must be symmetric positive definite".into()));
    }
    let mean = f.values().iter().sum::<f64>() / f.values().len() as f64;
    if mean.abs() > 1e-12 * f.sup_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(format!("data has mean {mean:e} on the torus")));
    }
    let shape = g.shape();
    let h: Vec<f64> = (0..d).map(|i| g.spacing(i)).collect();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, &shape, false);
    let strides = crate::lattice::row_major_strides(&shape);
    let mut k = vec![0.0; d];
    for (flat, v) in data.iter_mut().enumerate() {
        let mut zero = true;
        for i in 0..d {
            let n = shape[i];
            let m = (flat / strides[i]) % n;
            let sm = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            zero &= m == 0;
            k[i] = 2.0 * PI * sm / (n as f64 * h[i]);
        }
        if zero {
            *v = Complex64::new(0.0, 0.0);
            continue;
        }
        let mut sigma = 0.0;
        for i in 0..d {
            for j in 0..d {
                sigma += match symbol {
                    Symbol::Continuous => a[(i, j)] * k[i] * k[j],
                    Symbol::Stencil if i == j => a[(i, i)] * (2.0 - 2.0 * (k[i] * h[i]).cos()) / (h[i] * h[i]),
                    Symbol::Stencil => a[(i, j)] * (k[i] * h[i]).sin() * (k[j] * h[j]).sin() / (h[i] * h[j]),
                };
            }
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument("symbol vanishes at a nonzero mode".into()));
        }
        *v = -*v / sigma;
    }
    fft_nd(&mut data, &shape, true);
    GridFunction::new(g.clone(), data.iter().map(|c| c.re).collect())
}

/// Fourier solution of `a^{ij} D_ij u = f` on the torus with the continuous
/// symbol; the zero mode of `u` is set to zero.
pub fn spectral_solve_constant(a: &DMatrix<f64>, f: &GridFunction) -> Result<GridFunction> {
    spectral(a, f, Symbol::Continuous)
}

/// As [`spectral_solve_constant`] with the symbol of the finite-difference
/// stencil, so it inverts the discrete operator exactly.
pub fn spectral_solve_stencil(a: &DMatrix<f64>, f: &GridFunction) -> Result<GridFunction> {
    spectral(a, f, Symbol::Stencil)
}

/// Values of `u = xy (-ln(x^2+y^2))^{1/2} zeta` and its second derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedValues {
    pub u: f64,
    pub u_xx: f64,
    pub u_yy: f64,
    /// `+inf` at the origin.
    pub u_xy: f64,
    pub u_xy_bounded: bool,
}

/// Radius where the cutoff reaches zero.
pub const CUTOFF_RADIUS: f64 = 0.5;
/// Radius of the plateau `zeta = 1`.
pub const PLATEAU_RADIUS: f64 = 0.25;

/// Radial cutoff `zeta = S(2(1 - r/R))` with the quintic smoothstep `S`,
/// and its first and second radial derivatives.
fn cutoff(r: f64) -> (f64, f64, f64) {
    let s = 2.0 * (1.0 - r / CUTOFF_RADIUS);
    let ds = -2.0 / CUTOFF_RADIUS;
    (smoothstep5(s), smoothstep5_d1(s) * ds, smoothstep5_d2(s) * ds * ds)
}

/// Closed-form derivatives of the mixed-derivative counterexample.
pub fn counterexample_mixed(x: f64, y: f64) -> Result<MixedValues> {
    let r2 = x * x + y * y;
    let r = r2.sqrt();
    if !(r < CUTOFF_RADIUS) || !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidArgument(format!("({x}, {y}) outside the support")));
    }
    if r2 == 0.0 {
        return Ok(MixedValues { u: 0.0, u_xx: 0.0, u_yy: 0.0, u_xy: f64::INFINITY, u_xy_bounded: false });
    }
    let big_l = (-r2.ln()).sqrt();
    let l3 = big_l.powi(3);
    let (rl, r2l, r2l3) = (r2 * big_l, r2 * r2 * big_l, r2 * r2 * l3);
    let lx = -x / rl;
    let ly = -y / rl;
    let lxx = -1.0 / rl + 2.0 * x * x / r2l - x * x / r2l3;
    let lyy = -1.0 / rl + 2.0 * y * y / r2l - y * y / r2l3;
    let lxy = 2.0 * x * y / r2l - x * y / r2l3;
    let w = x * y * big_l;
    let wx = y * big_l + x * y * lx;
    let wy = x * big_l + x * y * ly;
    let wxx = 2.0 * y * lx + x * y * lxx;
    let wyy = 2.0 * x * ly + x * y * lyy;
    let wxy = big_l + x * lx + y * ly + x * y * lxy;
    let (z, zr, zrr) = if r <= PLATEAU_RADIUS { (1.0, 0.0, 0.0) } else { cutoff(r) };
    // Cartesian derivatives of the radial cutoff
    let zx = zr * x / r;
    let zy = zr * y / r;
    let zxx = zrr * x * x / r2 + zr * (1.0 / r - x * x / (r2 * r));
    let zyy = zrr * y * y / r2 + zr * (1.0 / r - y * y / (r2 * r));
    let zxy = zrr * x * y / r2 - zr * x * y / (r2 * r);
    Ok(MixedValues {
        u: w * z,
        u_xx: wxx * z + 2.0 * wx * zx + w * zxx,
        u_yy: wyy * z + 2.0 * wy * zy + w * zyy,
        u_xy: wxy * z + wx * zy + wy * zx + w * zxy,
        u_xy_bounded: true,
    })
}

/// Right-hand side and boundary data of the half-plane problem.
#[derive(Clone, Debug)]
pub struct HalfplaneData {
    pub f: GridFunction,
    /// Dirichlet data on the box: zero on `x^1 = 0` and on the far sides.
    pub boundary: GridFunction,
}

/// `f = eta(x^1) eta(x^2) 1_{x^2 >= 0}` with the plateau bump, on a box
/// `[0, L] x [-L, L]`, `L >= 2`.
pub fn halfplane_counterexample_data(grid: &AnisotropicGrid) -> Result<HalfplaneData> {
    let e = grid.extents();
    let l = e.get(0).map(|v| v[1]).unwrap_or(0.0);
    if grid.d() != 2
        || grid.has_time()
        || grid.boundary().iter().any(|b| *b != Boundary::DirichletBox)
        || e[0][0] != 0.0
        || l < 2.0
        || e[1] != [-l, l]
    {
        return Err(Error::InvalidGrid("half-plane data needs a Dirichlet box [0, L] x [-L, L] with L >= 2".into()));
    }
    let f = GridFunction::from_fn(grid, |_, x| if x[1] >= 0.0 { plateau_bump(x[0]) * plateau_bump(x[1]) } else { 0.0 });
    Ok(HalfplaneData { f, boundary: GridFunction::zeros(grid) })
}

/// Largest pair in an exhaustive scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMax {
    pub value: f64,
    /// Flat indices of the maximising pair (first found in scan order).
    pub pair: (usize, usize),
    /// Index of the derivative `D^beta` in the spec's derivative set.
    pub derivative: usize,
}

/// Upper limit on the number of pairs an exhaustive scan may visit.
pub const BRUTE_FORCE_LIMIT: usize = 100_000_000;

/// Exhaustive maximisation of the seminorm quotient over all admissible pairs.
pub fn brute_force_argmax(u: &GridFunction, spec: &SeminormSpec) -> Result<PairMax> {
    spec.validate()?;
    let (axes, metric, gamma) = spec.geometry(u)?;
    let betas = spec.derivative_set(u);
    let fs = fibers(u.grid(), &axes);
    let n = fs.first().map(|f| f.len()).unwrap_or(0);
    if n < 2 {
        return Err(Error::InvalidArgument("fewer than two points in the quotient directions".into()));
    }
    let total = betas.len().saturating_mul(fs.len()).saturating_mul(n * (n - 1) / 2);
    if total > BRUTE_FORCE_LIMIT {
        return Err(Error::Budget(format!("{total} pairs exceed {BRUTE_FORCE_LIMIT}")));
    }
    let shape = u.grid().shape();
    let mut best = PairMax { value: 0.0, pair: (0, 0), derivative: 0 };
    let mut off = vec![0isize; axes.len()];
    for (b, beta) in betas.iter().enumerate() {
        let du = derivative_along(u, beta)?;
        let v = du.values();
        for f in &fs {
            let idx = f.indices();
            let pos: Vec<Vec<usize>> = idx.iter().map(|&k| axes.iter().map(|&a| unravel_axis(k, &shape, a)).collect()).collect();
            for i in 0..idx.len() {
                for j in i + 1..idx.len() {
                    for (o, (pj, pi)) in off.iter_mut().zip(pos[j].iter().zip(&pos[i])) {
                        *o = *pj as isize - *pi as isize;
                    }
                    let q = (v[idx[i]] - v[idx[j]]).abs() / pair_denominator(&metric, &off, gamma);
                    if q > best.value {
                        best = PairMax { value: q, pair: (idx[i], idx[j]), derivative: b };
                    }
                }
            }
        }
    }
    Ok(best)
}

fn unravel_axis(flat: usize, shape: &[usize], axis: usize) -> usize {
    let stride: usize = shape[axis + 1..].iter().product();
    (flat / stride) % shape[axis]
}

/// Exhaustive seminorm value; see [`brute_force_argmax`].
pub fn brute_force_seminorm(u: &GridFunction, spec: &SeminormSpec) -> Result<f64> {
    brute_force_argmax(u, spec).map(|m| m.value)
}

fn cheb_basis(t: f64, degree: usize) -> Vec<f64> {
    let mut b = vec![1.0; degree + 1];
    if degree >= 1 {
        b[1] = t;
    }
    for k in 2..=degree {
        b[k] = 2.0 * t * b[k - 1] - b[k - 2];
    }
    b
}

/// Best uniform approximation error of the samples by polynomials of the
/// given degree, by single-point exchange on the sample set.
pub fn chebyshev_fit_1d(t: &[f64], u: &[f64], degree: usize) -> Result<f64> {
    let n = t.len();
    if n != u.len() {
        return Err(Error::InvalidArgument("sample and value counts differ".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let ts: Vec<f64> = order.iter().map(|&i| t[i]).collect();
    let us: Vec<f64> = order.iter().map(|&i| u[i]).collect();
    if n < degree + 2 || ts.windows(2).any(|w| !(w[1] > w[0])) || ts.iter().chain(&us).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("need degree + 2 distinct finite samples".into()));
    }
    let (lo, hi) = (ts[0], ts[n - 1]);
    let s: Vec<f64> = ts.iter().map(|&v| (2.0 * v - lo - hi) / (hi - lo)).collect();
    let m = degree + 2;
    let mut refs: Vec<usize> = (0..m).map(|k| ((k as f64) * (n - 1) as f64 / (m - 1) as f64).round() as usize).collect();
    refs.dedup();
    if refs.len() != m {
        return Err(Error::InvalidArgument("degenerate sample set".into()));
    }
    let mut last_level = -1.0;
    for _ in 0..10_000 {
        let a = DMatrix::from_fn(m, m, |r, c| {
            if c < degree + 1 {
                cheb_basis(s[refs[r]], degree)[c]
            } else if r % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        });
        let b = DVector::from_iterator(m, refs.iter().map(|&i| us[i]));
        let sol = a.lu().solve(&b).ok_or_else(|| Error::InvalidArgument("singular exchange system".into()))?;
        let level = sol[degree + 1].abs();
        let err: Vec<f64> = (0..n)
            .map(|i| us[i] - cheb_basis(s[i], degree).iter().zip(sol.iter()).map(|(p, c)| p * c).sum::<f64>())
            .collect();
        let (jmax, emax) = err.iter().enumerate().fold((0, 0.0_f64), |acc, (i, e)| if e.abs() > acc.1 { (i, e.abs()) } else { acc });
        if emax <= level * (1.0 + 1e-12) + 1e-15 || level <= last_level {
            return Ok(emax.max(level));
        }
        last_level = level;
        let sg = |i: usize| err[i] >= 0.0;
        let sj = sg(jmax);
        let p = refs.partition_point(|&r| r < jmax);
        if p == 0 {
            if sg(refs[0]) == sj {
                refs[0] = jmax;
            } else {
                refs.pop();
                refs.insert(0, jmax);
            }
        } else if p == m {
            if sg(refs[m - 1]) == sj {
                refs[m - 1] = jmax;
            } else {
                refs.remove(0);
                refs.push(jmax);
            }
        } else if sg(refs[p - 1]) == sj {
            refs[p - 1] = jmax;
        } else {
            refs[p] = jmax;
        }
    }
    Err(Error::NoConvergence { iterations: 10_000, residual: last_level })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheb_basics() {
        let t: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
        let abs: Vec<f64> = t.iter().map(|v| v.abs()).collect();
        assert!((chebyshev_fit_1d(&t, &abs, 1).unwrap() - 0.5).abs() < 1e-12);
        let poly: Vec<f64> = t.iter().map(|v| 1.0 - 2.0 * v + 0.5 * v * v).collect();
        assert!(chebyshev_fit_1d(&t, &poly, 2).unwrap() < 1e-12);
        assert!(chebyshev_fit_1d(&t[..3], &abs[..3], 2).is_err());
        assert!(chebyshev_fit_1d(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn mixed_origin_and_support() {
        let v = counterexample_mixed(0.0, 0.0).unwrap();
        assert!(!v.u_xy_bounded);
        assert!(counterexample_mixed(0.5, 0.0).is_err());
        assert!(counterexample_mixed(0.4, 0.4).is_err());
        assert!(counterexample_mixed(0.3, 0.3).is_ok());
    }
}
