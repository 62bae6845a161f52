//! Coefficient fields with prescribed dependence patterns and synthetic data
//! with known partial seminorm bounds.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{AnisotropicGrid, Axis, GridFunction};
use crate::util::{smoothstep5, SMOOTHSTEP5_LIP};

/// Which variables a coefficient field may depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Pattern {
    Constant,
    TOnly,
    XppOnly,
    TAndXpp,
    /// `a0(x'') + K rho(x') B(x'')` with `[rho]_{x',delta} = 1`.
    XprimeHoelder { k: f64, delta: f64 },
}

impl Pattern {
    fn support(&self, grid: &AnisotropicGrid) -> Result<Vec<Axis>> {
        let xpp: Vec<Axis> = (grid.q()..grid.d()).map(Axis::Space).collect();
        let need_time = matches!(self, Pattern::TOnly | Pattern::TAndXpp);
        if need_time && !grid.has_time() {
            return Err(Error::InvalidArgument("time-dependent pattern on a grid without time".into()));
        }
        Ok(match self {
            Pattern::Constant => vec![],
            Pattern::TOnly => vec![Axis::Time],
            Pattern::XppOnly | Pattern::XprimeHoelder { .. } => xpp,
            Pattern::TAndXpp => std::iter::once(Axis::Time).chain(xpp).collect(),
        })
    }
}

/// Eigenvalue range convention for random matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Eigenvalues in `[nu, 1/nu]`.
    Nondivergence,
    /// Eigenvalues in `[nu, 1/(nu sqrt d)]`, so that also `sum |a^{ij}|^2 <= nu^{-2}`.
    Divergence,
}

/// Random axis-aligned partition of a box, used for piecewise-constant fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    axes: Vec<Axis>,
    breaks: Vec<Vec<f64>>,
}

impl Partition {
    /// Cell count per axis uniform in 4..=16, breakpoints uniform in the
    /// axis range. Depends only on the RNG state and the axis ranges, not on
    /// point counts, so refinements see the same continuum field.
    pub fn random<R: Rng>(grid: &AnisotropicGrid, axes: &[Axis], rng: &mut R) -> Self {
        let mut breaks = Vec::with_capacity(axes.len());
        for &ax in axes {
            let (a, b) = axis_range(grid, ax);
            let cells = rng.random_range(4..=16usize);
            let mut br: Vec<f64> = (0..cells - 1).map(|_| a + (b - a) * rng.random::<f64>()).collect();
            br.sort_by(|x, y| x.total_cmp(y));
            breaks.push(br);
        }
        Self { axes: axes.to_vec(), breaks }
    }

    pub fn n_cells(&self) -> usize {
        self.breaks.iter().map(|b| b.len() + 1).product()
    }

    pub fn cell_of(&self, t: f64, x: &[f64]) -> usize {
        let mut c = 0;
        for (ax, br) in self.axes.iter().zip(&self.breaks) {
            let v = match ax {
                Axis::Time => t,
                Axis::Space(i) => x[*i],
            };
            let k = br.partition_point(|&b| b <= v);
            c = c * (br.len() + 1) + k;
        }
        c
    }
}

fn axis_range(grid: &AnisotropicGrid, ax: Axis) -> (f64, f64) {
    match ax {
        Axis::Time => {
            let ta = grid.time_axis().expect("time axis checked by caller");
            (ta.t0, ta.t1)
        }
        Axis::Space(i) => (grid.extents()[i][0], grid.extents()[i][1]),
    }
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

fn random_spd<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    let q = random_orthogonal(n, rng);
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| lo + (hi - lo) * rng.random::<f64>()));
    let a = &q * lam * q.transpose();
    // exact symmetry
    DMatrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] })
}

/// Symmetric matrix field `a^{ij}` sampled at every lattice point.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    grid: AnisotropicGrid,
    nu: f64,
    pattern: Pattern,
    degenerate: bool,
    seed: Option<u64>,
    /// Packed upper triangle, row by row: (0,0), (0,1), ..., (1,1), ...
    entries: Vec<Vec<f64>>,
}

/// JSON descriptor written next to the per-entry files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientDescriptor {
    pub pattern: Pattern,
    pub nu: f64,
    pub degenerate: bool,
    pub seed: Option<u64>,
    pub symmetric: bool,
    pub frobenius_bound: bool,
}

fn packed(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

impl CoefficientField {
    /// Builds a field from a matrix-valued function of `(t, x)`; only the
    /// upper triangle is read.
    pub fn from_fn<F>(grid: &AnisotropicGrid, nu: f64, pattern: Pattern, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, &[f64]) -> DMatrix<f64>,
    {
        check_nu(nu)?;
        let d = grid.d();
        let m = d * (d + 1) / 2;
        let mut entries = vec![Vec::with_capacity(grid.len()); m];
        let shape = grid.shape();
        let mut multi = vec![0usize; shape.len()];
        let mut x = vec![0.0; d];
        for _ in 0..grid.len() {
            let t = grid.point(&multi, &mut x);
            let a = f(t, &x);
            for i in 0..d {
                for j in i..d {
                    entries[packed(d, i, j)].push(a[(i, j)]);
                }
            }
            for ax in (0..shape.len()).rev() {
                multi[ax] += 1;
                if multi[ax] < shape[ax] {
                    break;
                }
                multi[ax] = 0;
            }
        }
        Ok(Self { grid: grid.clone(), nu, pattern, degenerate: false, seed: None, entries })
    }

    /// Constant matrix `a` everywhere.
    pub fn constant(grid: &AnisotropicGrid, nu: f64, a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != grid.d() || a.ncols() != grid.d() {
            return Err(Error::InvalidArgument("matrix size differs from d".into()));
        }
        Self::from_fn(grid, nu, Pattern::Constant, |_, _| a.clone())
    }

    /// Identity with `nu = 1/2`, admissible in both conventions for `d <= 4`.
    pub fn identity(grid: &AnisotropicGrid) -> Self {
        Self::constant(grid, 0.5, &DMatrix::identity(grid.d(), grid.d())).expect("identity is admissible")
    }

    pub fn grid(&self) -> &AnisotropicGrid {
        &self.grid
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn pattern(&self) -> Pattern {
        self.pattern
    }
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
    pub fn is_symmetric(&self) -> bool {
        true
    }

    /// Values of `a^{ij}` at every lattice point.
    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        &self.entries[packed(self.grid.d(), i, j)]
    }

    pub fn entry_function(&self, i: usize, j: usize) -> GridFunction {
        GridFunction::new(self.grid.clone(), self.entry(i, j).to_vec()).expect("finite entries")
    }

    pub fn matrix_at(&self, flat: usize) -> DMatrix<f64> {
        let d = self.grid.d();
        DMatrix::from_fn(d, d, |i, j| self.entries[packed(d, i, j)][flat])
    }

    /// `max sum_{ij} |a^{ij}|^2 <= nu^{-2}` over all points.
    pub fn frobenius_bound(&self) -> bool {
        let d = self.grid.d();
        let lim = 1.0 / (self.nu * self.nu) * (1.0 + 1e-12);
        (0..self.grid.len()).all(|k| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let v = self.entries[packed(d, i, j)][k];
                    s += v * v;
                }
            }
            s <= lim
        })
    }

    /// Two-sided eigenvalue test at every point, tolerance `1e-12`. For
    /// degenerate fields the lower bound applies to `xi'` only, which is
    /// `a - nu P' >= 0` with `P'` the projector onto `x'`.
    pub fn check_ellipticity(&self) -> Result<()> {
        let d = self.grid.d();
        let q = self.grid.q();
        let tol = 1e-12;
        for k in 0..self.grid.len() {
            let mut a = self.matrix_at(k);
            let upper = SymmetricEigen::new(a.clone()).eigenvalues.max();
            if upper > 1.0 / self.nu + tol {
                return Err(Error::Ellipticity(format!("eigenvalue {upper} > 1/nu at point {k}")));
            }
            let lower = if self.degenerate {
                for i in 0..q {
                    a[(i, i)] -= self.nu;
                }
                SymmetricEigen::new(a).eigenvalues.min()
            } else {
                SymmetricEigen::new(a).eigenvalues.min() - self.nu
            };
            if lower < -tol {
                return Err(Error::Ellipticity(format!("lower bound fails by {} at point {k}", -lower)));
            }
            let _ = d;
        }
        Ok(())
    }

    /// Coefficients at time index `n` as a field on the spatial grid.
    pub fn time_slice(&self, n: usize) -> Result<Self> {
        let ta = self
            .grid
            .time_axis()
            .ok_or_else(|| Error::InvalidArgument("coefficient field has no time axis".into()))?;
        if n >= ta.n {
            return Err(Error::InvalidArgument(format!("time index {n} out of range")));
        }
        let m = self.grid.spatial_len();
        Ok(Self {
            grid: self.grid.spatial(),
            nu: self.nu,
            pattern: self.pattern,
            degenerate: self.degenerate,
            seed: self.seed,
            entries: self.entries.iter().map(|e| e[n * m..(n + 1) * m].to_vec()).collect(),
        })
    }

    pub fn descriptor(&self) -> CoefficientDescriptor {
        CoefficientDescriptor {
            pattern: self.pattern,
            nu: self.nu,
            degenerate: self.degenerate,
            seed: self.seed,
            symmetric: true,
            frobenius_bound: self.frobenius_bound(),
        }
    }

    /// Writes `a_ij.{json,bin}` for `i <= j` plus `descriptor.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let d = self.grid.d();
        for i in 0..d {
            for j in i..d {
                self.entry_function(i, j).save(&dir.join(format!("a_{}{}", i + 1, j + 1)))?;
            }
        }
        fs::write(dir.join("descriptor.json"), serde_json::to_string_pretty(&self.descriptor())?)?;
        Ok(())
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("nu = {nu} not in (0, 1]")))
    }
}

/// Piecewise-constant SPD field on a random partition of the pattern's support.
pub fn random_rough_coefficients(grid: &AnisotropicGrid, nu: f64, pattern: Pattern, seed: u64) -> Result<CoefficientField> {
    random_rough_coefficients_with(grid, nu, pattern, seed, Convention::Nondivergence)
}

pub fn random_rough_coefficients_with(
    grid: &AnisotropicGrid,
    nu: f64,
    pattern: Pattern,
    seed: u64,
    convention: Convention,
) -> Result<CoefficientField> {
    check_nu(nu)?;
    if matches!(pattern, Pattern::XprimeHoelder { .. }) {
        return Err(Error::InvalidArgument("use hoelder_coefficients for x'-Hoelder fields".into()));
    }
    let d = grid.d();
    let hi = match convention {
        Convention::Nondivergence => 1.0 / nu,
        Convention::Divergence => 1.0 / (nu * (d as f64).sqrt()),
    };
    if hi < nu {
        return Err(Error::InvalidArgument("empty eigenvalue range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let part = Partition::random(grid, &pattern.support(grid)?, &mut rng);
    let cells: Vec<DMatrix<f64>> = (0..part.n_cells()).map(|_| random_spd(d, nu, hi, &mut rng)).collect();
    let mut field = CoefficientField::from_fn(grid, nu, pattern, |t, x| cells[part.cell_of(t, x)].clone())?;
    field.seed = Some(seed);
    Ok(field)
}

/// `x''`-dependent block-diagonal field with `x'` block in `[nu, 1/nu]` and
/// `x''` block eigenvalues in `[0, 1/nu]`.
pub fn degenerate_coefficients(grid: &AnisotropicGrid, nu: f64, seed: u64) -> Result<CoefficientField> {
    check_nu(nu)?;
    let (d, q) = (grid.d(), grid.q());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let part = Partition::random(grid, &Pattern::XppOnly.support(grid)?, &mut rng);
    let cells: Vec<DMatrix<f64>> = (0..part.n_cells())
        .map(|_| {
            let a1 = random_spd(q, nu, 1.0 / nu, &mut rng);
            let a2 = random_spd(d - q, 0.0, 1.0 / nu, &mut rng);
            let mut a = DMatrix::zeros(d, d);
            a.view_mut((0, 0), (q, q)).copy_from(&a1);
            a.view_mut((q, q), (d - q, d - q)).copy_from(&a2);
            a
        })
        .collect();
    let mut field = CoefficientField::from_fn(grid, nu, Pattern::XppOnly, |t, x| cells[part.cell_of(t, x)].clone())?;
    field.degenerate = true;
    field.seed = Some(seed);
    Ok(field)
}

/// Degenerate field built from one fixed matrix, e.g. `diag(1, 0)`.
pub fn degenerate_constant(grid: &AnisotropicGrid, nu: f64, a: &DMatrix<f64>) -> Result<CoefficientField> {
    let mut f = CoefficientField::constant(grid, nu, a)?;
    f.degenerate = true;
    Ok(f)
}

/// `a(x', x'') = clip(a0(x'') + K rho(x') B(x''))` with
/// `rho = min(|x' - c|, r0)^delta`, `c` the centre of the `x'` box and `r0`
/// its smallest half-width. `a0` is the `XppOnly` draw of
/// [`random_rough_coefficients`] with the same seed, so `K = 0` reproduces it.
/// `B` is symmetric with unit Frobenius norm and `clip` projects the
/// eigenvalues onto `[nu, 1/nu]`. The projection is nonexpansive in the
/// Frobenius norm, hence `[a^{ij}]_{x',delta} <= K`.
pub fn hoelder_coefficients(grid: &AnisotropicGrid, nu: f64, k: f64, delta: f64, seed: u64) -> Result<CoefficientField> {
    check_nu(nu)?;
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("K = {k} must be >= 0")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} not in (0, 1)")));
    }
    let (d, q) = (grid.d(), grid.q());
    let centre: Vec<f64> = (0..q).map(|i| 0.5 * (grid.extents()[i][0] + grid.extents()[i][1])).collect();
    let r0 = (0..q)
        .map(|i| 0.5 * (grid.extents()[i][1] - grid.extents()[i][0]))
        .fold(f64::INFINITY, f64::min);
    // a perturbation wider than the whole eigenvalue window cannot be clipped meaningfully
    if k * r0.powf(delta) > 1.0 / nu - nu {
        return Err(Error::InvalidArgument(format!(
            "K = {k} too large for nu = {nu}: perturbation exceeds the window [{nu}, {}]",
            1.0 / nu
        )));
    }
    let base = random_rough_coefficients(grid, nu, Pattern::XppOnly, seed)?;
    let mut brng = ChaCha8Rng::seed_from_u64(crate::util::mix_seed(seed, 0xB));
    let part = Partition::random(grid, &Pattern::XppOnly.support(grid)?, &mut ChaCha8Rng::seed_from_u64(seed));
    let bs: Vec<DMatrix<f64>> = (0..part.n_cells())
        .map(|_| {
            let b = DMatrix::<f64>::from_fn(d, d, |_, _| brng.random_range(-1.0..1.0));
            let b = DMatrix::from_fn(d, d, |i, j| if i <= j { b[(i, j)] } else { b[(j, i)] });
            let m = b.norm();
            b / m
        })
        .collect();
    // from_fn visits points in flat order
    let mut flat = 0usize;
    let mut field = CoefficientField::from_fn(grid, nu, Pattern::XprimeHoelder { k, delta }, |t, x| {
        let a0 = base.matrix_at(flat);
        flat += 1;
        let c = part.cell_of(t, x);
        let r = (0..q).map(|i| (x[i] - centre[i]).powi(2)).sum::<f64>().sqrt().min(r0);
        clip_eigenvalues(a0 + &bs[c] * (k * r.powf(delta)), nu, 1.0 / nu)
    })?;
    field.seed = Some(seed);
    Ok(field)
}

/// Projects the eigenvalues of a symmetric matrix onto `[lo, hi]`.
fn clip_eigenvalues(a: DMatrix<f64>, lo: f64, hi: f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(a.clone());
    if e.eigenvalues.iter().all(|l| *l >= lo && *l <= hi) {
        return a;
    }
    let l = DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.clamp(lo, hi)));
    let v = &e.eigenvectors;
    let c = v * l * v.transpose();
    // symmetrise against round-off
    DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]))
}

/// Components `f^1, ..., f^d` of a vector field on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<GridFunction>,
}

impl VectorField {
    pub fn new(components: Vec<GridFunction>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty vector field".into()))?;
        if components.len() != first.grid().d() {
            return Err(Error::InvalidArgument("vector field needs d components".into()));
        }
        if components.iter().any(|c| c.grid() != first.grid()) {
            return Err(Error::InvalidArgument("components on different grids".into()));
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: &AnisotropicGrid) -> Self {
        Self { components: vec![GridFunction::zeros(grid); grid.d()] }
    }

    pub fn grid(&self) -> &AnisotropicGrid {
        self.components[0].grid()
    }

    pub fn component(&self, i: usize) -> &GridFunction {
        &self.components[i]
    }

    pub fn components(&self) -> &[GridFunction] {
        &self.components
    }
}

/// Kind of synthetic data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsKind {
    /// 2 to 4 cusps with piecewise-constant `x''` profiles.
    RoughXpp,
    /// A single unit cusp at the centre with `psi = 1`.
    Smooth,
    /// As `RoughXpp`, times a smooth ramp `theta(t)` vanishing at `t0`.
    TimeDependent,
}

/// One term `c phi(x' - p) psi(x'')` with `phi(s) = |s|^e chi(|s| / R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspTerm {
    pub centre: Vec<f64>,
    pub coeff: f64,
    pub exponent: f64,
    pub radius: f64,
    pub psi: Option<(Partition, Vec<f64>)>,
}

impl CuspTerm {
    /// Radial profile `|s|^e chi(|s|/R)` where `chi = 1` on `[0, 1/2]` and
    /// tapers to zero at 1.
    pub fn profile(&self, s: f64) -> f64 {
        let r = s / self.radius;
        if r >= 1.0 {
            return 0.0;
        }
        s.powf(self.exponent) * smoothstep5(2.0 * (1.0 - r))
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let s = self.centre.iter().enumerate().map(|(i, c)| (x[i] - c).powi(2)).sum::<f64>().sqrt();
        let psi = match &self.psi {
            Some((p, v)) => v[p.cell_of(t, x)],
            None => 1.0,
        };
        self.coeff * self.profile(s) * psi
    }

    pub fn psi_sup(&self) -> f64 {
        match &self.psi {
            Some((_, v)) => v.iter().fold(0.0, |m, a| m.max(a.abs())),
            None => 1.0,
        }
    }

    /// Upper bound for `[phi]_{delta}` when `exponent = delta < 1`:
    /// `1 + (R Lip(chi))^delta`.
    pub fn profile_seminorm_bound(&self) -> f64 {
        1.0 + (2.0 * SMOOTHSTEP5_LIP).powf(self.exponent)
    }
}

/// Synthetic data and its analytic seminorm bound.
#[derive(Clone, Debug)]
pub struct SyntheticRhs {
    pub f: GridFunction,
    pub terms: Vec<CuspTerm>,
    pub time_ramp: bool,
    /// Upper bound for `[f]_{x',delta}`.
    pub seminorm_bound: f64,
}

/// Smooth ramp `sin^2(pi (t - t0) / (2 (t1 - t0)))`, zero with zero slope at `t0`.
pub fn time_ramp(grid: &AnisotropicGrid, t: f64) -> f64 {
    match grid.time_axis() {
        Some(ta) => {
            let s = ((t - ta.t0) / (ta.t1 - ta.t0)).clamp(0.0, 1.0);
            (0.5 * std::f64::consts::PI * s).sin().powi(2)
        }
        None => 1.0,
    }
}

/// Cusp terms with exponent `exponent`, centres on the dyadic sub-lattice
/// `c + L j / 8`, `|j| <= 2`, of the `x'` box (`c` centre, `L` half-width).
pub fn cusp_terms(grid: &AnisotropicGrid, exponent: f64, seed: u64, rough: bool) -> Result<Vec<CuspTerm>> {
    let q = grid.q();
    let centre: Vec<f64> = (0..q).map(|i| 0.5 * (grid.extents()[i][0] + grid.extents()[i][1])).collect();
    let half = (0..q)
        .map(|i| 0.5 * (grid.extents()[i][1] - grid.extents()[i][0]))
        .fold(f64::INFINITY, f64::min);
    let radius = 0.75 * half;
    if !rough {
        return Ok(vec![CuspTerm { centre, coeff: 1.0, exponent, radius, psi: None }]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4usize);
    let xpp: Vec<Axis> = (q..grid.d()).map(Axis::Space).collect();
    let mut terms = Vec::with_capacity(n);
    for _ in 0..n {
        let p: Vec<f64> = centre
            .iter()
            .map(|c| c + half * rng.random_range(-2i32..=2) as f64 / 8.0)
            .collect();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let coeff = sign * rng.random_range(0.5..1.0);
        let part = Partition::random(grid, &xpp, &mut rng);
        let vals: Vec<f64> = (0..part.n_cells())
            .map(|_| {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * rng.random_range(0.5..1.5)
            })
            .collect();
        terms.push(CuspTerm { centre: p, coeff, exponent, radius, psi: Some((part, vals)) });
    }
    Ok(terms)
}

/// Evaluates `theta(t) sum_k terms_k` on the grid.
pub fn evaluate_terms(grid: &AnisotropicGrid, terms: &[CuspTerm], ramp: bool) -> GridFunction {
    GridFunction::from_fn(grid, |t, x| {
        let th = if ramp { time_ramp(grid, t) } else { 1.0 };
        th * terms.iter().map(|c| c.eval(t, x)).sum::<f64>()
    })
}

/// `f = theta(t) sum_k c_k phi_delta(x' - p_k) psi_k(x'')`.
pub fn synthetic_rhs(grid: &AnisotropicGrid, delta: f64, seed: u64, kind: RhsKind) -> Result<SyntheticRhs> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} not in (0, 1)")));
    }
    let ramp = kind == RhsKind::TimeDependent;
    if ramp && !grid.has_time() {
        return Err(Error::InvalidArgument("time-dependent data needs a time axis".into()));
    }
    let terms = cusp_terms(grid, delta, seed, kind != RhsKind::Smooth)?;
    let f = evaluate_terms(grid, &terms, ramp);
    let seminorm_bound = terms
        .iter()
        .map(|c| c.coeff.abs() * c.psi_sup() * c.profile_seminorm_bound())
        .sum();
    Ok(SyntheticRhs { f, terms, time_ramp: ramp, seminorm_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TimeAxis;
    use crate::seminorm::seminorm_xprime;

    fn g2(n: usize) -> AnisotropicGrid {
        AnisotropicGrid::cube(2, 1, -1.0, 1.0, n).unwrap()
    }

    #[test]
    fn constant_pattern_is_single_spd() {
        let a = random_rough_coefficients(&g2(9), 0.2, Pattern::Constant, 3).unwrap();
        a.check_ellipticity().unwrap();
        let m0 = a.matrix_at(0);
        assert!((0..81).all(|k| a.matrix_at(k) == m0));
        let ev = SymmetricEigen::new(m0).eigenvalues;
        assert!(ev.min() >= 0.2 - 1e-12 && ev.max() <= 5.0 + 1e-12);
    }

    #[test]
    fn xpp_only_constant_along_xprime() {
        let g = g2(33);
        let a = random_rough_coefficients(&g, 0.2, Pattern::XppOnly, 1).unwrap();
        for j in 0..33 {
            for i in 1..33 {
                for e in 0..3 {
                    assert_eq!(a.entries[e][i * 33 + j], a.entries[e][j]);
                }
            }
        }
        // and genuinely varies along x''
        assert!((0..33).any(|j| a.entry(0, 0)[j] != a.entry(0, 0)[0]));
    }

    #[test]
    fn determinism() {
        let g = g2(17);
        let a = random_rough_coefficients(&g, 0.2, Pattern::XppOnly, 1).unwrap();
        let b = random_rough_coefficients(&g, 0.2, Pattern::XppOnly, 1).unwrap();
        let c = random_rough_coefficients(&g, 0.2, Pattern::XppOnly, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn divergence_convention_respects_frobenius() {
        let g = g2(17);
        let a = random_rough_coefficients_with(&g, 0.2, Pattern::XppOnly, 5, Convention::Divergence).unwrap();
        a.check_ellipticity().unwrap();
        assert!(a.frobenius_bound());
    }

    #[test]
    fn time_patterns() {
        let g = g2(9).with_time(TimeAxis { t0: 0.0, t1: 1.0, n: 5 }).unwrap();
        let a = random_rough_coefficients(&g, 0.3, Pattern::TOnly, 9).unwrap();
        let s = g.spatial_len();
        for n in 0..5 {
            for k in 1..s {
                assert_eq!(a.entry(0, 1)[n * s + k], a.entry(0, 1)[n * s]);
            }
        }
        assert!(random_rough_coefficients(&g2(9), 0.3, Pattern::TOnly, 9).is_err());
        assert!(random_rough_coefficients(&g2(9), 0.0, Pattern::Constant, 9).is_err());
        assert!(random_rough_coefficients(&g2(9), 1.5, Pattern::Constant, 9).is_err());
    }

    #[test]
    fn degenerate_examples() {
        let g = g2(9);
        let a = degenerate_constant(&g, 1.0, &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]))).unwrap();
        a.check_ellipticity().unwrap();
        let r = degenerate_coefficients(&g2(17), 0.2, 4).unwrap();
        r.check_ellipticity().unwrap();
        for k in 0..g2(17).len() {
            assert!(r.matrix_at(k)[(0, 0)] >= 0.2 - 1e-12);
        }
        // a degenerate field is not uniformly elliptic in the full sense
        let mut full = a.clone();
        full.degenerate = false;
        assert!(full.check_ellipticity().is_err());
    }

    #[test]
    fn hoelder_field_seminorm_bounded_by_k() {
        let g = g2(33);
        let a0 = hoelder_coefficients(&g, 0.2, 0.0, 0.5, 7).unwrap();
        assert_eq!(a0.entries, random_rough_coefficients(&g, 0.2, Pattern::XppOnly, 7).unwrap().entries);
        let a = hoelder_coefficients(&g, 0.2, 0.1, 0.5, 7).unwrap();
        a.check_ellipticity().unwrap();
        let mut worst = 0.0_f64;
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let s = seminorm_xprime(&a.entry_function(i, j), 0.5).unwrap();
            assert!(s <= 0.1 + 1e-9, "entry ({i},{j}) seminorm {s}");
            worst = worst.max(s);
        }
        assert!(worst > 0.0);
        assert!(hoelder_coefficients(&g, 0.2, 5.0, 0.5, 7).is_err());
    }

    #[test]
    fn rhs_scaling_and_bound() {
        let g = g2(65);
        let r = synthetic_rhs(&g, 0.5, 3, RhsKind::RoughXpp).unwrap();
        let s = seminorm_xprime(&r.f, 0.5).unwrap();
        assert!(s > 0.0 && s <= r.seminorm_bound);
        let s2 = seminorm_xprime(&r.f.scale(2.0), 0.5).unwrap();
        assert_eq!(s2, 2.0 * s);
        assert!(synthetic_rhs(&g, 1.0, 3, RhsKind::Smooth).is_err());
        assert!(synthetic_rhs(&g, 0.5, 3, RhsKind::TimeDependent).is_err());
    }
}
