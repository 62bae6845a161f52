//! Anisotropic tensor-product lattices, grid functions and finite differences.
//!
//! Values are stored row-major over `(t, x^1, ..., x^d)` with the time index
//! slowest. The first `q` spatial axes are the regular directions `x'`, the
//! remaining `d - q` axes are `x''`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary tag of a spatial axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    DirichletBox,
    /// Period is `n * h`; the extent lists the first and last sample.
    Periodic,
}

/// Uniform time axis `t0 = t_0 < ... < t_{n-1} = t1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl TimeAxis {
    pub fn tau(&self) -> f64 {
        (self.t1 - self.t0) / (self.n - 1) as f64
    }

    pub fn coord(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.tau()
    }
}

/// Axis selector. Spatial axes are zero-based, so `Space(0)` is `x^1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Time,
    Space(usize),
}

#[derive(Deserialize)]
struct GridRepr {
    d: usize,
    q: usize,
    extents: Vec<[f64; 2]>,
    counts: Vec<usize>,
    boundary: Vec<Boundary>,
    time_axis: Option<TimeAxis>,
}

/// Tensor-product lattice over a box in `R^d`, optionally times an interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr")]
pub struct AnisotropicGrid {
    d: usize,
    q: usize,
    extents: Vec<[f64; 2]>,
    counts: Vec<usize>,
    boundary: Vec<Boundary>,
    time_axis: Option<TimeAxis>,
}

impl TryFrom<GridRepr> for AnisotropicGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        AnisotropicGrid::new(r.d, r.q, r.extents, r.counts, r.boundary, r.time_axis)
    }
}

impl AnisotropicGrid {
    pub fn new(
        d: usize,
        q: usize,
        extents: Vec<[f64; 2]>,
        counts: Vec<usize>,
        boundary: Vec<Boundary>,
        time_axis: Option<TimeAxis>,
    ) -> Result<Self> {
        if !(2..=4).contains(&d) {
            return Err(Error::InvalidGrid(format!("d = {d} outside 2..=4")));
        }
        if q < 1 || q >= d {
            return Err(Error::InvalidGrid(format!("q = {q} must satisfy 1 <= q < d = {d}")));
        }
        if extents.len() != d || counts.len() != d || boundary.len() != d {
            return Err(Error::InvalidGrid("extents, counts and boundary need d entries".into()));
        }
        for i in 0..d {
            let [a, b] = extents[i];
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidGrid(format!("empty extent [{a}, {b}] on axis {i}")));
            }
            if counts[i] < 3 {
                return Err(Error::InvalidGrid(format!("axis {i} has {} < 3 points", counts[i])));
            }
        }
        if let Some(ta) = &time_axis {
            if ta.n < 2 || !(ta.t1 > ta.t0) || !ta.t0.is_finite() || !ta.t1.is_finite() {
                return Err(Error::InvalidGrid("time axis needs n >= 2 and t1 > t0".into()));
            }
        }
        Ok(Self { d, q, extents, counts, boundary, time_axis })
    }

    /// Dirichlet box `[lo, hi]^d` with `n` points per axis.
    pub fn cube(d: usize, q: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(d, q, vec![[lo, hi]; d], vec![n; d], vec![Boundary::DirichletBox; d], None)
    }

    /// Fully periodic grid with period `period` and `n` samples per axis starting at 0.
    pub fn torus(d: usize, q: usize, period: f64, n: usize) -> Result<Self> {
        let last = period * (n - 1) as f64 / n as f64;
        Self::new(d, q, vec![[0.0, last]; d], vec![n; d], vec![Boundary::Periodic; d], None)
    }

    pub fn with_time(mut self, time_axis: TimeAxis) -> Result<Self> {
        self.time_axis = Some(time_axis);
        Self::new(self.d, self.q, self.extents, self.counts, self.boundary, self.time_axis)
    }

    pub fn with_boundary(mut self, axis: usize, b: Boundary) -> Self {
        self.boundary[axis] = b;
        self
    }

    /// The same spatial lattice without a time axis.
    pub fn spatial(&self) -> Self {
        let mut g = self.clone();
        g.time_axis = None;
        g
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn extents(&self) -> &[[f64; 2]] {
        &self.extents
    }
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
    pub fn boundary(&self) -> &[Boundary] {
        &self.boundary
    }
    pub fn time_axis(&self) -> Option<&TimeAxis> {
        self.time_axis.as_ref()
    }
    pub fn has_time(&self) -> bool {
        self.time_axis.is_some()
    }

    pub fn spacing(&self, i: usize) -> f64 {
        (self.extents[i][1] - self.extents[i][0]) / (self.counts[i] - 1) as f64
    }

    pub fn coord(&self, i: usize, k: usize) -> f64 {
        self.extents[i][0] + k as f64 * self.spacing(i)
    }

    /// Lattice index of coordinate `x` on axis `i`, if `x` is a lattice point.
    pub fn index_of(&self, i: usize, x: f64) -> Option<usize> {
        let s = (x - self.extents[i][0]) / self.spacing(i);
        let k = s.round();
        if (s - k).abs() > 1e-9 || k < 0.0 || k as usize >= self.counts[i] {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Array axis position of `axis` in the row-major layout.
    pub fn array_axis(&self, axis: Axis) -> Result<usize> {
        let off = usize::from(self.has_time());
        match axis {
            Axis::Time if self.has_time() => Ok(0),
            Axis::Time => Err(Error::InvalidArgument("grid has no time axis".into())),
            Axis::Space(i) if i < self.d => Ok(i + off),
            Axis::Space(i) => Err(Error::InvalidArgument(format!("spatial axis {i} out of range"))),
        }
    }

    /// Inverse of [`array_axis`](Self::array_axis).
    pub fn axis_of(&self, array_axis: usize) -> Axis {
        if self.has_time() {
            if array_axis == 0 {
                Axis::Time
            } else {
                Axis::Space(array_axis - 1)
            }
        } else {
            Axis::Space(array_axis)
        }
    }

    /// Array shape, time first when present.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.d + 1);
        if let Some(t) = &self.time_axis {
            s.push(t.n);
        }
        s.extend_from_slice(&self.counts);
        s
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape())
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of points of one time slice.
    pub fn spatial_len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        let shape = self.shape();
        debug_assert_eq!(multi.len(), shape.len());
        let mut k = 0;
        for (m, n) in multi.iter().zip(&shape) {
            k = k * n + m;
        }
        k
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            out[a] = flat % shape[a];
            flat /= shape[a];
        }
        out
    }

    /// Spacing of an array axis (`tau` for time).
    pub fn array_spacing(&self, array_axis: usize) -> f64 {
        match self.axis_of(array_axis) {
            Axis::Time => self.time_axis.as_ref().map(|t| t.tau()).unwrap_or(0.0),
            Axis::Space(i) => self.spacing(i),
        }
    }

    pub fn array_periodic(&self, array_axis: usize) -> bool {
        match self.axis_of(array_axis) {
            Axis::Time => false,
            Axis::Space(i) => self.boundary[i] == Boundary::Periodic,
        }
    }

    /// Time coordinate and spatial coordinates of a multi-index.
    pub fn point(&self, multi: &[usize], x: &mut [f64]) -> f64 {
        let off = usize::from(self.has_time());
        for i in 0..self.d {
            x[i] = self.coord(i, multi[i + off]);
        }
        match &self.time_axis {
            Some(t) => t.coord(multi[0]),
            None => 0.0,
        }
    }

    /// Array axes of the regular variables `x'`.
    pub fn xprime_axes(&self) -> Vec<usize> {
        let off = usize::from(self.has_time());
        (0..self.q).map(|i| i + off).collect()
    }

    /// Array axes of the frozen variables `x''`.
    pub fn xpp_axes(&self) -> Vec<usize> {
        let off = usize::from(self.has_time());
        (self.q..self.d).map(|i| i + off).collect()
    }

    pub fn spatial_axes(&self) -> Vec<usize> {
        let off = usize::from(self.has_time());
        (0..self.d).map(|i| i + off).collect()
    }
}

pub fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// Multi-index `alpha` over the `q` regular axes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// `alpha!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| (1..=a).product::<usize>() as f64).product()
    }

    /// All multi-indices of length `q` with `|alpha| = k`, lexicographically descending.
    pub fn of_order(q: usize, k: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0; q];
        fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if pos + 1 == cur.len() {
                cur[pos] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for a in (0..=left).rev() {
                cur[pos] = a;
                rec(pos + 1, left - a, cur, out);
            }
        }
        if q > 0 {
            rec(0, k, &mut cur, &mut out);
        }
        out
    }

    /// All multi-indices with `|alpha| <= k`, ordered by total order.
    pub fn up_to(q: usize, k: usize) -> Vec<MultiIndex> {
        (0..=k).flat_map(|j| Self::of_order(q, j)).collect()
    }
}

/// Real samples on an [`AnisotropicGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: AnisotropicGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: AnisotropicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &AnisotropicGrid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &AnisotropicGrid, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f(t, x)`; `t = 0` on grids without time.
    pub fn from_fn<F: FnMut(f64, &[f64]) -> f64>(grid: &AnisotropicGrid, mut f: F) -> Self {
        let shape = grid.shape();
        let mut multi = vec![0usize; shape.len()];
        let mut x = vec![0.0; grid.d()];
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let t = grid.point(&multi, &mut x);
            values.push(f(t, &x));
            for a in (0..shape.len()).rev() {
                multi[a] += 1;
                if multi[a] < shape[a] {
                    break;
                }
                multi[a] = 0;
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub(crate) fn from_parts_unchecked(grid: AnisotropicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &AnisotropicGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn get(&self, multi: &[usize]) -> f64 {
        self.values[self.grid.ravel(multi)]
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("grid functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// One time slice as a function on the spatial grid.
    pub fn time_slice(&self, k: usize) -> Result<Self> {
        let ta = self
            .grid
            .time_axis()
            .ok_or_else(|| Error::InvalidArgument("no time axis".into()))?;
        if k >= ta.n {
            return Err(Error::InvalidArgument(format!("time index {k} out of range")));
        }
        let m = self.grid.spatial_len();
        Ok(Self { grid: self.grid.spatial(), values: self.values[k * m..(k + 1) * m].to_vec() })
    }

    /// Writes `<stem>.json` (grid metadata) and `<stem>.bin` (f64 little endian).
    pub fn save(&self, stem: &Path) -> Result<()> {
        let (json, bin) = sidecar_paths(stem);
        let meta = FileMeta { grid: self.grid.clone(), dtype: "f64-le".into(), layout: "row-major, time slowest".into() };
        fs::write(json, serde_json::to_string_pretty(&meta)?)?;
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(bin, bytes)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let (json, bin) = sidecar_paths(stem);
        let meta: FileMeta = serde_json::from_str(&fs::read_to_string(json)?)?;
        if meta.dtype != "f64-le" {
            return Err(Error::InvalidArgument(format!("unsupported dtype {}", meta.dtype)));
        }
        let bytes = fs::read(bin)?;
        if bytes.len() != 8 * meta.grid.len() {
            return Err(Error::InvalidArgument("data file size does not match grid".into()));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(meta.grid, values)
    }
}

#[derive(Serialize, Deserialize)]
struct FileMeta {
    #[serde(flatten)]
    grid: AnisotropicGrid,
    dtype: String,
    layout: String,
}

fn sidecar_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

/// A sub-lattice obtained by freezing all array axes except `axes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fiber {
    pub base: usize,
    pub axes: Vec<usize>,
    pub shape: Vec<usize>,
    pub strides: Vec<usize>,
}

impl Fiber {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat indices in row-major order of the free axes.
    pub fn indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut m = vec![0usize; self.shape.len()];
        let mut flat = self.base;
        for _ in 0..self.len() {
            out.push(flat);
            for a in (0..m.len()).rev() {
                m[a] += 1;
                flat += self.strides[a];
                if m[a] < self.shape[a] {
                    break;
                }
                flat -= self.strides[a] * self.shape[a];
                m[a] = 0;
            }
        }
        out
    }
}

/// Partition of the lattice into fibers along the free array axes `axes`.
pub fn fibers(grid: &AnisotropicGrid, axes: &[usize]) -> Vec<Fiber> {
    let shape = grid.shape();
    let strides = grid.strides();
    let frozen: Vec<usize> = (0..shape.len()).filter(|a| !axes.contains(a)).collect();
    let fshape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let fstrides: Vec<usize> = axes.iter().map(|&a| strides[a]).collect();
    let count: usize = frozen.iter().map(|&a| shape[a]).product();
    let mut out = Vec::with_capacity(count);
    let mut m = vec![0usize; frozen.len()];
    for _ in 0..count {
        let base: usize = frozen.iter().zip(&m).map(|(&a, &k)| k * strides[a]).sum();
        out.push(Fiber { base, axes: axes.to_vec(), shape: fshape.clone(), strides: fstrides.clone() });
        for j in (0..m.len()).rev() {
            m[j] += 1;
            if m[j] < shape[frozen[j]] {
                break;
            }
            m[j] = 0;
        }
    }
    out
}

/// Slices at fixed `x''`: each is a function of `x'`, or of `(t, x')` on
/// grids with time.
pub fn slices_xpp(u: &GridFunction) -> Vec<Fiber> {
    let g = u.grid();
    let mut axes = Vec::new();
    if g.has_time() {
        axes.push(0);
    }
    axes.extend(g.xprime_axes());
    fibers(g, &axes)
}

/// Lattice derivative along `axis`: central in the interior, one-sided
/// second order at non-periodic ends.
pub fn fd_derivative(u: &GridFunction, axis: Axis, order: u8) -> Result<GridFunction> {
    let g = u.grid();
    let a = g.array_axis(axis)?;
    if order != 1 && order != 2 {
        return Err(Error::InvalidArgument(format!("derivative order {order} not in {{1, 2}}")));
    }
    let n = g.shape()[a];
    let s = g.strides()[a];
    let h = g.array_spacing(a);
    let periodic = g.array_periodic(a);
    let need = if order == 1 { 3 } else { 4 };
    if !periodic && n < need {
        return Err(Error::InvalidArgument(format!("axis needs >= {need} points for one-sided closure")));
    }
    let v = u.values();
    let mut out = vec![0.0; v.len()];
    let c1 = 1.0 / (2.0 * h);
    let c2 = 1.0 / (h * h);
    for (k, o) in out.iter_mut().enumerate() {
        let p = (k / s) % n;
        let at = |j: isize| -> f64 {
            let pj = p as isize + j;
            let pj = if periodic { pj.rem_euclid(n as isize) } else { pj } as usize;
            v[k - p * s + pj * s]
        };
        *o = match (order, p) {
            (1, 0) if !periodic => (-3.0 * at(0) + 4.0 * at(1) - at(2)) * c1,
            (1, p) if !periodic && p == n - 1 => (3.0 * at(0) - 4.0 * at(-1) + at(-2)) * c1,
            (1, _) => (at(1) - at(-1)) * c1,
            (_, 0) if !periodic => (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * c2,
            (_, p) if !periodic && p == n - 1 => {
                (2.0 * at(0) - 5.0 * at(-1) + 4.0 * at(-2) - at(-3)) * c2
            }
            _ => (at(1) - 2.0 * at(0) + at(-1)) * c2,
        };
    }
    Ok(GridFunction::from_parts_unchecked(g.clone(), out))
}

/// Mixed derivative `D_ij`, `i != j`, as the composition of first
/// differences (the 4-point cross in the interior).
pub fn fd_mixed(u: &GridFunction, i: Axis, j: Axis) -> Result<GridFunction> {
    if i == j {
        return Err(Error::InvalidArgument("mixed derivative needs two distinct axes".into()));
    }
    fd_derivative(&fd_derivative(u, i, 1)?, j, 1)
}

/// `D^alpha u` over the regular axes, built from the lattice stencils.
pub fn derivative_xprime(u: &GridFunction, alpha: &MultiIndex) -> Result<GridFunction> {
    derivative_along(u, &alpha.0)
}

/// `D^beta u` where `beta[i]` is the order along spatial axis `i`
/// (`beta.len() <= d`). Orders are at most 2 per axis and 2 in total.
pub fn derivative_along(u: &GridFunction, beta: &[usize]) -> Result<GridFunction> {
    let total: usize = beta.iter().sum();
    if total > 2 {
        return Err(Error::InvalidArgument("derivative order above 2".into()));
    }
    let nz: Vec<usize> = (0..beta.len()).filter(|&i| beta[i] > 0).collect();
    match nz.as_slice() {
        [] => Ok(u.clone()),
        [i] => fd_derivative(u, Axis::Space(*i), beta[*i] as u8),
        [i, j] => fd_mixed(u, Axis::Space(*i), Axis::Space(*j)),
        _ => unreachable!(),
    }
}

/// Sub-box with every spatial extent shrunk by `margin` of its length per side.
pub fn restrict_interior(u: &GridFunction, margin: f64) -> Result<GridFunction> {
    if !(0.0..0.5).contains(&margin) {
        return Err(Error::InvalidArgument(format!("margin {margin} not in [0, 0.5)")));
    }
    let g = u.grid();
    let mut lo = Vec::with_capacity(g.d());
    let mut counts = Vec::with_capacity(g.d());
    let mut extents = Vec::with_capacity(g.d());
    for i in 0..g.d() {
        let n = g.counts()[i];
        let k = (margin * (n - 1) as f64 - 1e-9).ceil().max(0.0) as usize;
        if n < 2 * k + 3 {
            return Err(Error::InvalidArgument(format!("margin leaves fewer than 3 points on axis {i}")));
        }
        lo.push(k);
        counts.push(n - 2 * k);
        extents.push([g.coord(i, k), g.coord(i, n - 1 - k)]);
    }
    if lo.iter().all(|&k| k == 0) {
        return Ok(u.clone());
    }
    let sub = AnisotropicGrid::new(
        g.d(),
        g.q(),
        extents,
        counts,
        vec![Boundary::DirichletBox; g.d()],
        g.time_axis().cloned(),
    )?;
    let off = usize::from(g.has_time());
    let shape = sub.shape();
    let mut m = vec![0usize; shape.len()];
    let mut src = vec![0usize; shape.len()];
    let mut values = Vec::with_capacity(sub.len());
    for _ in 0..sub.len() {
        for a in 0..shape.len() {
            src[a] = if a < off { m[a] } else { m[a] + lo[a - off] };
        }
        values.push(u.values()[g.ravel(&src)]);
        for a in (0..shape.len()).rev() {
            m[a] += 1;
            if m[a] < shape[a] {
                break;
            }
            m[a] = 0;
        }
    }
    Ok(GridFunction::from_parts_unchecked(sub, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_count() {
        let g = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 5).unwrap();
        assert_eq!(g.spacing(0), 0.5);
        assert_eq!(g.spacing(1), 0.5);
        let g3 = AnisotropicGrid::cube(3, 2, 0.0, 1.0, 3).unwrap();
        assert_eq!(g3.len(), 27);
        assert!(AnisotropicGrid::cube(2, 0, 0.0, 1.0, 5).is_err());
        assert!(AnisotropicGrid::cube(2, 2, 0.0, 1.0, 5).is_err());
        assert!(AnisotropicGrid::cube(2, 1, 0.0, 1.0, 2).is_err());
        assert!(AnisotropicGrid::cube(2, 1, 1.0, 1.0, 5).is_err());
    }

    #[test]
    fn ravel_round_trip() {
        let g = AnisotropicGrid::new(
            3,
            1,
            vec![[0.0, 1.0], [-1.0, 2.0], [0.0, 0.5]],
            vec![4, 3, 5],
            vec![Boundary::DirichletBox; 3],
            Some(TimeAxis { t0: 0.0, t1: 1.0, n: 3 }),
        )
        .unwrap();
        for k in 0..g.len() {
            assert_eq!(g.ravel(&g.unravel(k)), k);
        }
        for k in 0..g.counts()[1] {
            assert_eq!(g.index_of(1, g.coord(1, k)), Some(k));
        }
        assert_eq!(g.index_of(1, 0.1234), None);
    }

    #[test]
    fn exact_on_low_degree() {
        let g = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 9).unwrap();
        let u = GridFunction::from_fn(&g, |_, x| 3.0 * x[0] + 7.0);
        let du = fd_derivative(&u, Axis::Space(0), 1).unwrap();
        assert!(du.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
        let u = GridFunction::from_fn(&g, |_, x| x[0] * x[0]);
        let d2 = fd_derivative(&u, Axis::Space(0), 2).unwrap();
        assert!(d2.values().iter().all(|v| (v - 2.0).abs() < 1e-11));
        let u = GridFunction::from_fn(&g, |_, x| x[0] * x[1]);
        let m = fd_mixed(&u, Axis::Space(0), Axis::Space(1)).unwrap();
        assert!(m.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let u = GridFunction::from_fn(&g, |_, x| x[0] + x[1]);
        let m = fd_mixed(&u, Axis::Space(0), Axis::Space(1)).unwrap();
        assert!(m.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn sine_derivative_accuracy() {
        let g = AnisotropicGrid::cube(2, 1, -1.5, 1.5, 301).unwrap();
        let u = GridFunction::from_fn(&g, |_, x| x[0].sin());
        let du = fd_derivative(&u, Axis::Space(0), 1).unwrap();
        let err = GridFunction::from_fn(&g, |_, x| x[0].cos()).sub(&du).unwrap().sup_abs();
        assert!(err <= 2e-5, "err = {err}");
        let u = GridFunction::from_fn(&g, |_, x| x[0].sin() * x[1].sin());
        let m = fd_mixed(&u, Axis::Space(0), Axis::Space(1)).unwrap();
        let err = GridFunction::from_fn(&g, |_, x| x[0].cos() * x[1].cos()).sub(&m).unwrap().sup_abs();
        assert!(err <= 5e-5, "err = {err}");
    }

    #[test]
    fn derivative_errors() {
        let g = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 5).unwrap();
        let u = GridFunction::zeros(&g);
        assert!(fd_derivative(&u, Axis::Space(2), 1).is_err());
        assert!(fd_derivative(&u, Axis::Space(0), 3).is_err());
        assert!(fd_derivative(&u, Axis::Time, 1).is_err());
        assert!(fd_mixed(&u, Axis::Space(0), Axis::Space(0)).is_err());
    }

    #[test]
    fn slice_counts() {
        let g = AnisotropicGrid::new(
            2,
            1,
            vec![[0.0, 1.0]; 2],
            vec![5, 7],
            vec![Boundary::DirichletBox; 2],
            None,
        )
        .unwrap();
        let s = slices_xpp(&GridFunction::zeros(&g));
        assert_eq!(s.len(), 7);
        assert!(s.iter().all(|f| f.len() == 5));

        let g = AnisotropicGrid::cube(3, 1, 0.0, 1.0, 4).unwrap();
        assert_eq!(slices_xpp(&GridFunction::zeros(&g)).len(), 16);

        let g = AnisotropicGrid::cube(2, 1, 0.0, 1.0, 4)
            .unwrap()
            .with_time(TimeAxis { t0: 0.0, t1: 1.0, n: 3 })
            .unwrap();
        let s = slices_xpp(&GridFunction::zeros(&g));
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|f| f.shape == vec![3, 4]));
    }

    #[test]
    fn restrict_examples() {
        let g = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 9).unwrap();
        let u = GridFunction::from_fn(&g, |_, x| x[0] + 10.0 * x[1]);
        assert_eq!(restrict_interior(&u, 0.0).unwrap(), u);
        let r = restrict_interior(&u, 0.25).unwrap();
        assert_eq!(r.grid().counts(), &[5, 5]);
        assert_eq!(r.grid().extents()[0], [-0.5, 0.5]);
        assert_eq!(r.get(&[0, 0]), -0.5 - 5.0);
        let g5 = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 5).unwrap();
        assert!(restrict_interior(&GridFunction::zeros(&g5), 0.49).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = AnisotropicGrid::cube(2, 1, -1.0, 1.0, 5)
            .unwrap()
            .with_time(TimeAxis { t0: 0.0, t1: 0.5, n: 3 })
            .unwrap();
        let u = GridFunction::from_fn(&g, |t, x| t + x[0] * x[1].sin());
        let stem = dir.path().join("u");
        u.save(&stem).unwrap();
        assert_eq!(GridFunction::load(&stem).unwrap(), u);
    }

    #[test]
    fn multi_index_sets() {
        assert_eq!(MultiIndex::of_order(2, 2).len(), 3);
        assert_eq!(MultiIndex::up_to(2, 2).len(), 6);
        assert_eq!(MultiIndex(vec![2, 1]).factorial(), 2.0);
    }
}
