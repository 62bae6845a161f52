//! Compressed sparse rows, ILU(0) and restarted GMRES.

use crate::error::{Error, Result};

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Row-by-row builder; duplicate columns within a row are summed.
#[derive(Debug, Default)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    row: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, row_ptr: vec![0], ..Default::default() }
    }

    pub fn push(&mut self, col: usize, val: f64) {
        self.row.push((col, val));
    }

    pub fn finish_row(&mut self) {
        self.row.sort_by_key(|e| e.0);
        let mut last = usize::MAX;
        for &(c, v) in &self.row {
            if c == last {
                *self.vals.last_mut().expect("row entry") += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = c;
            }
        }
        self.row.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> Csr {
        assert_eq!(self.row_ptr.len(), self.n + 1, "every row must be finished");
        Csr { n: self.n, row_ptr: self.row_ptr, cols: self.cols, vals: self.vals }
    }
}

impl Csr {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Largest number of entries in a row.
    pub fn max_row_len(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    /// Adds `c` to every diagonal entry; the diagonal must be stored.
    pub fn add_diagonal(&mut self, c: f64) {
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            let k = self.row_ptr[i] + cols.binary_search(&i).expect("stored diagonal");
            self.vals[k] += c;
        }
    }
}

/// Incomplete LU factorisation with the sparsity of the matrix.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![0; n];
        for i in 0..n {
            let (cols, _) = lu.row(i);
            diag[i] = lu.row_ptr[i]
                + cols.binary_search(&i).map_err(|_| Error::InvalidArgument(format!("row {i} lacks a diagonal")))?;
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            for k in start..diag[i] {
                let j = lu.cols[k];
                let piv = lu.vals[diag[j]];
                if piv == 0.0 {
                    return Err(Error::InvalidArgument(format!("zero pivot at row {j}")));
                }
                let l = lu.vals[k] / piv;
                lu.vals[k] = l;
                for kk in diag[j] + 1..lu.row_ptr[j + 1] {
                    let p = pos[lu.cols[kk]];
                    if p != usize::MAX {
                        lu.vals[p] -= l * lu.vals[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
            if lu.vals[diag[i]] == 0.0 {
                return Err(Error::InvalidArgument(format!("zero pivot at row {i}")));
            }
        }
        Ok(Self { lu, diag })
    }

    /// Solves `LU y = x` in place.
    pub fn apply(&self, x: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = x[i];
            for k in lu.row_ptr[i]..self.diag[i] {
                s -= lu.vals[k] * x[lu.cols[k]];
            }
            x[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = x[i];
            for k in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[k] * x[lu.cols[k]];
            }
            x[i] = s / lu.vals[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// True relative residual `|b - Ax| / |b|`.
    pub residual: f64,
}

/// Right-preconditioned restarted GMRES. `x` holds the initial guess and
/// receives the solution. Convergence is declared on the true residual.
pub fn gmres(a: &Csr, m: &Ilu0, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize, restart: usize) -> Result<GmresOutcome> {
    let n = a.n();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresOutcome { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut iters = 0;
    let true_residual = |x: &[f64], r: &mut [f64]| {
        a.matvec(x, r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        norm(r) / bnorm
    };
    let mut res = true_residual(x, &mut r);
    let mut stalled = 0;
    while res > tol {
        if iters >= max_iter || stalled > 2 {
            return Err(Error::NoConvergence { iterations: iters, residual: res });
        }
        let beta = res * bnorm;
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && iters < max_iter {
            z.copy_from_slice(&v[k]);
            m.apply(&mut z);
            a.matvec(&z, &mut w);
            for (j, vj) in v.iter().enumerate() {
                let hj = dot(&w, vj);
                h[j][k] = hj;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hj * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iters += 1;
            k += 1;
            // small safety factor so the true residual usually lands below tol
            if g[k].abs() <= 0.5 * tol * bnorm || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        for (j, yj) in y.iter().enumerate() {
            for (zi, vi) in z.iter_mut().zip(&v[j]) {
                *zi += yj * vi;
            }
        }
        m.apply(&mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        let new = true_residual(x, &mut r);
        stalled = if new > 0.9 * res { stalled + 1 } else { 0 };
        res = new;
    }
    Ok(GmresOutcome { iterations: iters, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        let mut b = CsrBuilder::new(n);
        for i in 0..n {
            if i > 0 {
                b.push(i - 1, -1.0);
            }
            b.push(i, 2.0);
            if i + 1 < n {
                b.push(i + 1, -1.0);
            }
            b.finish_row();
        }
        b.build()
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        let a = laplace_1d(50);
        let m = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; 50];
        a.matvec(&x, &mut b);
        m.apply(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric() {
        let n = 200;
        let mut bld = CsrBuilder::new(n);
        for i in 0..n {
            bld.push(i, 4.0);
            if i > 0 {
                bld.push(i - 1, -1.5);
            }
            if i + 7 < n {
                bld.push(i + 7, -0.7);
            }
            bld.push(i, 0.1);
            bld.finish_row();
        }
        let a = bld.build();
        assert_eq!(a.max_row_len(), 3);
        let m = Ilu0::new(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 5) as f64).collect();
        let mut x = vec![0.0; n];
        let out = gmres(&a, &m, &b, &mut x, 1e-12, 500, 30).unwrap();
        assert!(out.residual <= 1e-12);
        let mut x2 = vec![0.0; n];
        let out2 = gmres(&a, &m, &b, &mut x2, 1e-12, 500, 30).unwrap();
        assert_eq!(out, out2);
        assert_eq!(x, x2);
    }

    #[test]
    fn gmres_reports_failure() {
        let a = laplace_1d(400);
        let m = Ilu0::new(&laplace_1d(400)).unwrap();
        let b = vec![1.0; 400];
        let mut x = vec![0.0; 400];
        assert!(gmres(&a, &m, &b, &mut x, 1e-10, 1000, 20).is_ok());
        // identity-free preconditioner on a harder system with a tiny budget
        let mut bld = CsrBuilder::new(400);
        for i in 0..400 {
            bld.push(i, 1.0);
            bld.finish_row();
        }
        let id = Ilu0::new(&bld.build()).unwrap();
        let mut x = vec![0.0; 400];
        assert!(matches!(gmres(&a, &id, &b, &mut x, 1e-10, 5, 5), Err(Error::NoConvergence { .. })));
    }
}
