//! Finite-difference solvers for nondivergence and divergence form elliptic
//! and parabolic operators on a box, with zero Dirichlet data on
//! non-periodic axes.

pub mod sparse;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{CoefficientField, VectorField};
use crate::lattice::{AnisotropicGrid, Boundary, GridFunction};
use sparse::{gmres, Csr, CsrBuilder, Ilu0};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 20_000;
const RESTART: usize = 60;

/// Diagnostics of a (possibly time-stepped) solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Largest relative residual over all linear solves.
    pub residual: f64,
    /// Total GMRES iterations.
    pub iterations: usize,
    /// Seconds; excluded from anything that must be reproducible.
    pub wall_time: f64,
    pub steps: usize,
    /// Number of matrix assemblies (time steps reuse the previous matrix
    /// when the coefficients are unchanged).
    pub assemblies: usize,
}

/// Assembled sparse system with its solver settings.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl LinearSystem {
    /// Solves from the zero initial guess.
    pub fn solve(&self) -> Result<(Vec<f64>, sparse::GmresOutcome)> {
        let ilu = Ilu0::new(&self.matrix)?;
        let mut x = vec![0.0; self.matrix.n()];
        let out = gmres(&self.matrix, &ilu, &self.rhs, &mut x, self.tol, self.max_iter, RESTART)?;
        Ok((x, out))
    }
}

/// Unknown numbering: interior nodes on Dirichlet axes, all nodes on periodic ones.
struct Unknowns {
    shape: Vec<usize>,
    periodic: Vec<bool>,
    h: Vec<f64>,
    ushape: Vec<usize>,
    n: usize,
}

impl Unknowns {
    fn new(grid: &AnisotropicGrid) -> Self {
        let d = grid.d();
        let shape = grid.counts().to_vec();
        let periodic: Vec<bool> = grid.boundary().iter().map(|b| *b == Boundary::Periodic).collect();
        let ushape: Vec<usize> = (0..d).map(|i| if periodic[i] { shape[i] } else { shape[i] - 2 }).collect();
        let n = ushape.iter().product();
        let h = (0..d).map(|i| grid.spacing(i)).collect();
        Self { shape, periodic, h, ushape, n }
    }

    fn all_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    fn node_multi(&self, mut k: usize) -> Vec<usize> {
        let d = self.shape.len();
        let mut m = vec![0; d];
        for i in (0..d).rev() {
            m[i] = k % self.ushape[i] + usize::from(!self.periodic[i]);
            k /= self.ushape[i];
        }
        m
    }

    fn node_flat(&self, m: &[usize]) -> usize {
        m.iter().zip(&self.shape).fold(0, |acc, (&v, &n)| acc * n + v)
    }

    fn unknown(&self, m: &[usize]) -> Option<usize> {
        let mut k = 0;
        for i in 0..m.len() {
            let v = if self.periodic[i] {
                m[i]
            } else {
                if m[i] == 0 || m[i] + 1 == self.shape[i] {
                    return None;
                }
                m[i] - 1
            };
            k = k * self.ushape[i] + v;
        }
        Some(k)
    }

    /// `m + s e_i`, wrapping on periodic axes. Interior nodes never leave the box.
    fn shifted(&self, m: &[usize], i: usize, s: isize) -> Vec<usize> {
        let mut out = m.to_vec();
        let n = self.shape[i] as isize;
        let v = m[i] as isize + s;
        out[i] = if self.periodic[i] { v.rem_euclid(n) as usize } else { v as usize };
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Form {
    Nondivergence,
    Divergence,
}

/// Assembles `A = -L_h` on the unknowns for a spatial coefficient field.
fn assemble(a: &CoefficientField, un: &Unknowns, form: Form) -> Csr {
    let d = un.shape.len();
    let entries: Vec<Vec<&[f64]>> = (0..d).map(|i| (0..d).map(|j| a.entry(i, j)).collect()).collect();
    let mut b = CsrBuilder::new(un.n);
    let push = |b: &mut CsrBuilder, node: &[usize], v: f64| {
        if let Some(q) = un.unknown(node) {
            b.push(q, v);
        }
    };
    for p in 0..un.n {
        let m = un.node_multi(p);
        let fm = un.node_flat(&m);
        b.push(p, 0.0);
        for i in 0..d {
            let h2 = un.h[i] * un.h[i];
            match form {
                Form::Nondivergence => {
                    let c = entries[i][i][fm] / h2;
                    b.push(p, 2.0 * c);
                    for s in [-1, 1] {
                        push(&mut b, &un.shifted(&m, i, s), -c);
                    }
                }
                Form::Divergence => {
                    for s in [-1, 1] {
                        let nb = un.shifted(&m, i, s);
                        let c = 0.5 * (entries[i][i][fm] + entries[i][i][un.node_flat(&nb)]) / h2;
                        b.push(p, c);
                        push(&mut b, &nb, -c);
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                if i == j || (form == Form::Nondivergence && j < i) {
                    continue;
                }
                let c = 1.0 / (4.0 * un.h[i] * un.h[j]);
                for si in [-1isize, 1] {
                    let ni = un.shifted(&m, i, si);
                    let aij = match form {
                        // both (i, j) and (j, i) folded into one 4-point cross
                        Form::Nondivergence => 2.0 * entries[i][j][fm],
                        Form::Divergence => entries[i][j][un.node_flat(&ni)],
                    };
                    for sj in [-1isize, 1] {
                        let q = un.shifted(&ni, j, sj);
                        push(&mut b, &q, -((si * sj) as f64) * aij * c);
                    }
                }
            }
        }
        b.finish_row();
    }
    b.build()
}

fn check_inputs(a: &CoefficientField, grid: &AnisotropicGrid, form: Form) -> Result<()> {
    if a.grid().spatial() != grid.spatial() {
        return Err(Error::InvalidArgument("coefficient and data grids differ".into()));
    }
    if a.grid().has_time() && a.grid() != grid {
        return Err(Error::InvalidArgument("time-dependent coefficients need the data's time axis".into()));
    }
    a.check_ellipticity()?;
    if form == Form::Divergence && !a.frobenius_bound() {
        return Err(Error::Ellipticity("sum |a^{ij}|^2 exceeds nu^{-2}".into()));
    }
    Ok(())
}

fn gather(un: &Unknowns, values: &[f64], sign: f64) -> Vec<f64> {
    (0..un.n).map(|p| sign * values[un.node_flat(&un.node_multi(p))]).collect()
}

/// Central divergence `sum_i (f_i(p + e_i) - f_i(p - e_i)) / 2h_i`, i.e. the
/// face differences of the face-averaged field, at each unknown.
fn divergence_rhs(un: &Unknowns, f: &[&[f64]], sign: f64) -> Vec<f64> {
    (0..un.n)
        .map(|p| {
            let m = un.node_multi(p);
            let mut s = 0.0;
            for (i, fi) in f.iter().enumerate() {
                let fp = fi[un.node_flat(&un.shifted(&m, i, 1))];
                let fmn = fi[un.node_flat(&un.shifted(&m, i, -1))];
                s += (fp - fmn) / (2.0 * un.h[i]);
            }
            sign * s
        })
        .collect()
}

fn scatter(un: &Unknowns, x: &[f64], out: &mut [f64]) {
    for (p, v) in x.iter().enumerate() {
        out[un.node_flat(&un.node_multi(p))] = *v;
    }
}

fn elliptic(a: &CoefficientField, grid: &AnisotropicGrid, rhs: Vec<f64>, form: Form, tol: f64) -> Result<(GridFunction, SolveReport)> {
    let start = Instant::now();
    if grid.has_time() {
        return Err(Error::InvalidArgument("elliptic solve on a grid with a time axis".into()));
    }
    let un = Unknowns::new(grid);
    let mut matrix = assemble(a, &un, form);
    let mut rhs = rhs;
    let torus = un.all_periodic();
    if torus {
        let d = grid.d();
        let constant = (0..d).all(|i| (i..d).all(|j| a.entry(i, j).iter().all(|v| *v == a.entry(i, j)[0])));
        if form == Form::Nondivergence && !constant {
            return Err(Error::InvalidArgument("full-torus nondivergence solve needs constant coefficients".into()));
        }
        let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
        let scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if mean.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!("data has mean {mean:e} on the torus")));
        }
        // pin the first unknown; the remaining rows determine the rest
        let mut b = CsrBuilder::new(un.n);
        b.push(0, 1.0);
        b.finish_row();
        for p in 1..un.n {
            let (cols, vals) = matrix.row(p);
            for (c, v) in cols.iter().zip(vals) {
                b.push(*c, *v);
            }
            b.finish_row();
        }
        matrix = b.build();
        rhs[0] = 0.0;
    }
    let sys = LinearSystem { matrix, rhs, tol, max_iter: DEFAULT_MAX_ITER };
    let (mut x, out) = sys.solve()?;
    if torus {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= mean);
    }
    let mut values = vec![0.0; grid.len()];
    scatter(&un, &x, &mut values);
    let report = SolveReport {
        residual: out.residual,
        iterations: out.iterations,
        wall_time: start.elapsed().as_secs_f64(),
        steps: 1,
        assemblies: 1,
    };
    Ok((GridFunction::new(grid.clone(), values)?, report))
}

/// Solves `a^{ij} D_ij u = f` with the central 4-point cross for mixed terms.
pub fn solve_elliptic_nondiv(a: &CoefficientField, f: &GridFunction, tol: f64) -> Result<(GridFunction, SolveReport)> {
    check_inputs(a, f.grid(), Form::Nondivergence)?;
    let un = Unknowns::new(f.grid());
    let rhs = gather(&un, f.values(), -1.0);
    elliptic(a, f.grid(), rhs, Form::Nondivergence, tol)
}

/// Solves `D_i(a^{ij} D_j u) = div f` in flux form.
pub fn solve_elliptic_div(a: &CoefficientField, f: &VectorField, tol: f64) -> Result<(GridFunction, SolveReport)> {
    check_inputs(a, f.grid(), Form::Divergence)?;
    let un = Unknowns::new(f.grid());
    let comps: Vec<&[f64]> = f.components().iter().map(|c| c.values()).collect();
    let rhs = divergence_rhs(&un, &comps, -1.0);
    elliptic(a, f.grid(), rhs, Form::Divergence, tol)
}

fn parabolic<R>(a: &CoefficientField, grid: &AnisotropicGrid, u0: &GridFunction, form: Form, tol: f64, mut rhs_at: R) -> Result<(GridFunction, SolveReport)>
where
    R: FnMut(&Unknowns, usize) -> Vec<f64>,
{
    let start = Instant::now();
    let ta = *grid.time_axis().ok_or_else(|| Error::InvalidArgument("parabolic solve needs a time axis".into()))?;
    if u0.grid() != &grid.spatial() {
        return Err(Error::InvalidArgument("initial data must live on the spatial grid".into()));
    }
    let tau = ta.tau();
    let un = Unknowns::new(grid);
    let m = grid.spatial_len();
    let mut values = vec![0.0; grid.len()];
    values[..m].copy_from_slice(u0.values());
    let mut x = gather(&un, u0.values(), 1.0);
    let mut current: Option<(CoefficientField, Csr, Ilu0)> = None;
    let mut report = SolveReport { residual: 0.0, iterations: 0, wall_time: 0.0, steps: 0, assemblies: 0 };
    for n in 1..ta.n {
        // coefficients frozen at the step's end time
        let an = if a.grid().has_time() { a.time_slice(n)? } else { a.clone() };
        let reuse = matches!(&current, Some((prev, _, _)) if *prev == an);
        if !reuse {
            let mut mat = assemble(&an, &un, form);
            mat.add_diagonal(1.0 / tau);
            let ilu = Ilu0::new(&mat)?;
            current = Some((an, mat, ilu));
            report.assemblies += 1;
        }
        let (_, mat, ilu) = current.as_ref().expect("assembled");
        let mut rhs = rhs_at(&un, n);
        for (r, xv) in rhs.iter_mut().zip(&x) {
            *r += xv / tau;
        }
        let out = gmres(mat, ilu, &rhs, &mut x, tol, DEFAULT_MAX_ITER, RESTART)?;
        report.residual = report.residual.max(out.residual);
        report.iterations += out.iterations;
        report.steps += 1;
        scatter(&un, &x, &mut values[n * m..(n + 1) * m]);
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((GridFunction::new(grid.clone(), values)?, report))
}

/// Backward Euler for `u_t - a^{ij} D_ij u = f`, initial data `u0` on the spatial grid.
pub fn solve_parabolic_nondiv(a: &CoefficientField, f: &GridFunction, u0: &GridFunction, tol: f64) -> Result<(GridFunction, SolveReport)> {
    check_inputs(a, f.grid(), Form::Nondivergence)?;
    let m = f.grid().spatial_len();
    parabolic(a, f.grid(), u0, Form::Nondivergence, tol, |un, n| gather(un, &f.values()[n * m..(n + 1) * m], 1.0))
}

/// Backward Euler for `u_t - D_i(a^{ij} D_j u) = div f`.
pub fn solve_parabolic_div(a: &CoefficientField, f: &VectorField, u0: &GridFunction, tol: f64) -> Result<(GridFunction, SolveReport)> {
    check_inputs(a, f.grid(), Form::Divergence)?;
    let m = f.grid().spatial_len();
    parabolic(a, f.grid(), u0, Form::Divergence, tol, |un, n| {
        let comps: Vec<&[f64]> = f.components().iter().map(|c| &c.values()[n * m..(n + 1) * m]).collect();
        divergence_rhs(un, &comps, 1.0)
    })
}

/// Assembled system for `a^{ij} D_ij u = f`, exposed for inspection.
pub fn nondiv_system(a: &CoefficientField, f: &GridFunction, tol: f64) -> Result<LinearSystem> {
    check_inputs(a, f.grid(), Form::Nondivergence)?;
    let un = Unknowns::new(f.grid());
    Ok(LinearSystem { matrix: assemble(a, &un, Form::Nondivergence), rhs: gather(&un, f.values(), -1.0), tol, max_iter: DEFAULT_MAX_ITER })
}

/// Assembled system for `D_i(a^{ij} D_j u) = div f`.
pub fn div_system(a: &CoefficientField, f: &VectorField, tol: f64) -> Result<LinearSystem> {
    check_inputs(a, f.grid(), Form::Divergence)?;
    let un = Unknowns::new(f.grid());
    let comps: Vec<&[f64]> = f.components().iter().map(|c| c.values()).collect();
    Ok(LinearSystem { matrix: assemble(a, &un, Form::Divergence), rhs: divergence_rhs(&un, &comps, -1.0), tol, max_iter: DEFAULT_MAX_ITER })
}

/// Applies the discrete nondivergence operator `a^{ij} D_ij` to `u` at
/// every unknown node; other nodes get zero.
pub fn apply_nondiv(a: &CoefficientField, u: &GridFunction) -> Result<GridFunction> {
    if a.grid() != u.grid() {
        return Err(Error::InvalidArgument("coefficient and function grids differ".into()));
    }
    let un = Unknowns::new(u.grid());
    let d = un.shape.len();
    let mut out = vec![0.0; u.grid().len()];
    let v = u.values();
    for p in 0..un.n {
        let m = un.node_multi(p);
        let fm = un.node_flat(&m);
        let mut s = 0.0;
        for i in 0..d {
            let h2 = un.h[i] * un.h[i];
            let up = v[un.node_flat(&un.shifted(&m, i, 1))];
            let um = v[un.node_flat(&un.shifted(&m, i, -1))];
            s += a.entry(i, i)[fm] * (up - 2.0 * v[fm] + um) / h2;
            for j in i + 1..d {
                let mut c = 0.0;
                for si in [-1isize, 1] {
                    for sj in [-1isize, 1] {
                        c += (si * sj) as f64 * v[un.node_flat(&un.shifted(&un.shifted(&m, i, si), j, sj))];
                    }
                }
                s += 2.0 * a.entry(i, j)[fm] * c / (4.0 * un.h[i] * un.h[j]);
            }
        }
        out[fm] = s;
    }
    GridFunction::new(u.grid().clone(), out)
}
