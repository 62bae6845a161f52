//! Partial Taylor polynomials, polynomial classes with coefficients depending
//! on frozen variables, local best-fit errors and Campanato quotients.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{derivative_along, fd_derivative, AnisotropicGrid, Axis, GridFunction, MultiIndex};

/// Polynomial class tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolyClass {
    /// Polynomials of degree `<= k` in `x'` with coefficients depending on `x''` (and `t`).
    Ptilde(u8),
    /// `sum_i a^i(x'') x^i + b(x'')`, `i <= q`.
    Phat1,
    /// `a(x'') t + sum a^i x^i + sum a^{ij} x^i x^j + b(x'')`, `i, j <= q`.
    Phat2,
    /// `sum_i a^i(t) x^i + b(t)`, `i <= d`.
    Pbar1,
}

/// Regular (polynomial) array axes, frozen array axes and monomial
/// exponents over the regular axes.
struct Layout {
    regular: Vec<usize>,
    frozen: Vec<usize>,
    monomials: Vec<Vec<usize>>,
}

fn layout(grid: &AnisotropicGrid, class: PolyClass) -> Result<Layout> {
    let (q, d) = (grid.q(), grid.d());
    let time = grid.has_time();
    let all: Vec<usize> = (0..grid.shape().len()).collect();
    let (regular, monomials): (Vec<usize>, Vec<Vec<usize>>) = match class {
        PolyClass::Ptilde(k) => {
            if k > 2 {
                return Err(Error::InvalidArgument(format!("Ptilde({k}) not supported")));
            }
            (grid.xprime_axes(), MultiIndex::up_to(q, k as usize).into_iter().map(|a| a.0).collect())
        }
        PolyClass::Phat1 | PolyClass::Phat2 => {
            if !time {
                return Err(Error::InvalidArgument("parabolic polynomial class needs a time axis".into()));
            }
            let mut reg = vec![0];
            reg.extend(grid.xprime_axes());
            let mut mons = vec![vec![0; q + 1]];
            for i in 0..q {
                let mut e = vec![0; q + 1];
                e[i + 1] = 1;
                mons.push(e);
            }
            if class == PolyClass::Phat2 {
                let mut e = vec![0; q + 1];
                e[0] = 1;
                mons.push(e);
                for a in MultiIndex::of_order(q, 2) {
                    let mut e = vec![0];
                    e.extend(a.0);
                    mons.push(e);
                }
            }
            (reg, mons)
        }
        PolyClass::Pbar1 => {
            let mut mons = vec![vec![0; d]];
            for i in 0..d {
                let mut e = vec![0; d];
                e[i] = 1;
                mons.push(e);
            }
            (grid.spatial_axes(), mons)
        }
    };
    let frozen = all.into_iter().filter(|a| !regular.contains(a)).collect();
    Ok(Layout { regular, frozen, monomials })
}

/// Element of a polynomial class: polynomial in the regular variables about
/// `centre`, with one coefficient per monomial and frozen slice.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSlice {
    class: PolyClass,
    grid: AnisotropicGrid,
    regular: Vec<usize>,
    frozen: Vec<usize>,
    /// Expansion point in the regular variables (array-axis order).
    centre: Vec<f64>,
    monomials: Vec<Vec<usize>>,
    /// `coeffs[m][s]`: coefficient of monomial `m` on frozen slice `s`.
    coeffs: Vec<Vec<f64>>,
}

impl PolynomialSlice {
    pub fn class(&self) -> PolyClass {
        self.class
    }

    pub fn monomials(&self) -> &[Vec<usize>] {
        &self.monomials
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    fn slice_id(&self, multi: &[usize]) -> usize {
        let shape = self.grid.shape();
        self.frozen.iter().fold(0, |acc, &a| acc * shape[a] + multi[a])
    }

    fn coord(&self, array_axis: usize, k: usize) -> f64 {
        match self.grid.axis_of(array_axis) {
            Axis::Time => self.grid.time_axis().map(|t| t.coord(k)).unwrap_or(0.0),
            Axis::Space(i) => self.grid.coord(i, k),
        }
    }

    pub fn eval_flat(&self, flat: usize) -> f64 {
        let multi = self.grid.unravel(flat);
        let s = self.slice_id(&multi);
        let dx: Vec<f64> = self
            .regular
            .iter()
            .zip(&self.centre)
            .map(|(&a, c)| self.coord(a, multi[a]) - c)
            .collect();
        self.monomials
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| c[s] * e.iter().zip(&dx).map(|(&p, x)| x.powi(p as i32)).product::<f64>())
            .sum()
    }

    pub fn to_grid_function(&self) -> GridFunction {
        let values = (0..self.grid.len()).map(|k| self.eval_flat(k)).collect();
        GridFunction::new(self.grid.clone(), values).expect("finite polynomial")
    }
}

fn lattice_index(grid: &AnisotropicGrid, axis: Axis, x: f64) -> Result<usize> {
    let k = match axis {
        Axis::Time => {
            let ta = grid.time_axis().ok_or_else(|| Error::InvalidArgument("no time axis".into()))?;
            let s = (x - ta.t0) / ta.tau();
            let k = s.round();
            ((s - k).abs() <= 1e-9 && k >= 0.0 && (k as usize) < ta.n).then_some(k as usize)
        }
        Axis::Space(i) => grid.index_of(i, x),
    };
    k.ok_or_else(|| Error::InvalidArgument(format!("{x} is not a lattice coordinate on {axis:?}")))
}

/// Reads `fields[m]` at `(regular = point, frozen = every slice)`.
fn gather(
    grid: &AnisotropicGrid,
    lay: &Layout,
    point: &[usize],
    fields: &[GridFunction],
    scales: &[f64],
) -> Vec<Vec<f64>> {
    let shape = grid.shape();
    let n_slices: usize = lay.frozen.iter().map(|&a| shape[a]).product();
    let mut coeffs = vec![Vec::with_capacity(n_slices); fields.len()];
    let mut multi = vec![0usize; shape.len()];
    for (a, &p) in lay.regular.iter().zip(point) {
        multi[*a] = p;
    }
    let mut fm = vec![0usize; lay.frozen.len()];
    for _ in 0..n_slices {
        for (j, &a) in lay.frozen.iter().enumerate() {
            multi[a] = fm[j];
        }
        let k = grid.ravel(&multi);
        for (m, f) in fields.iter().enumerate() {
            coeffs[m].push(f.values()[k] * scales[m]);
        }
        for j in (0..fm.len()).rev() {
            fm[j] += 1;
            if fm[j] < shape[lay.frozen[j]] {
                break;
            }
            fm[j] = 0;
        }
    }
    coeffs
}

/// Partial Taylor polynomial `sum_{|alpha|<=k} (x'-x0')^alpha D^alpha u(x0', x'') / alpha!`.
pub fn taylor_xprime(u: &GridFunction, x0: &[f64], k: u8) -> Result<PolynomialSlice> {
    let g = u.grid();
    if x0.len() != g.q() {
        return Err(Error::InvalidArgument("x0' needs q coordinates".into()));
    }
    let lay = layout(g, PolyClass::Ptilde(k))?;
    let point: Vec<usize> = (0..g.q()).map(|i| lattice_index(g, Axis::Space(i), x0[i])).collect::<Result<_>>()?;
    let mut fields = Vec::new();
    let mut scales = Vec::new();
    for e in &lay.monomials {
        fields.push(derivative_along(u, e)?);
        scales.push(1.0 / MultiIndex(e.clone()).factorial());
    }
    let coeffs = gather(g, &lay, &point, &fields, &scales);
    let centre = point.iter().enumerate().map(|(i, &p)| g.coord(i, p)).collect();
    Ok(PolynomialSlice { class: PolyClass::Ptilde(k), grid: g.clone(), regular: lay.regular, frozen: lay.frozen, centre, monomials: lay.monomials, coeffs })
}

/// Parabolic partial Taylor polynomial about `z0' = (t0, x0')`; order 1
/// gives `Phat1` (no `t` term), order 2 gives `Phat2`.
pub fn taylor_zprime(u: &GridFunction, t0: f64, x0: &[f64], order: u8) -> Result<PolynomialSlice> {
    let g = u.grid();
    let class = match order {
        1 => PolyClass::Phat1,
        2 => PolyClass::Phat2,
        _ => return Err(Error::InvalidArgument(format!("order {order} not in {{1, 2}}"))),
    };
    if x0.len() != g.q() {
        return Err(Error::InvalidArgument("x0' needs q coordinates".into()));
    }
    let lay = layout(g, class)?;
    let mut point = vec![lattice_index(g, Axis::Time, t0)?];
    for i in 0..g.q() {
        point.push(lattice_index(g, Axis::Space(i), x0[i])?);
    }
    let mut fields = Vec::new();
    let mut scales = Vec::new();
    for e in &lay.monomials {
        if e[0] == 1 {
            fields.push(fd_derivative(u, Axis::Time, 1)?);
            scales.push(1.0);
        } else {
            fields.push(derivative_along(u, &e[1..])?);
            scales.push(1.0 / MultiIndex(e[1..].to_vec()).factorial());
        }
    }
    let coeffs = gather(g, &lay, &point, &fields, &scales);
    let mut centre = vec![g.time_axis().expect("checked").coord(point[0])];
    centre.extend((0..g.q()).map(|i| g.coord(i, point[i + 1])));
    Ok(PolynomialSlice { class, grid: g.clone(), regular: lay.regular, frozen: lay.frozen, centre, monomials: lay.monomials, coeffs })
}

/// `w(t, x0) + sum_i D_i w(t, x0) (x^i - x0^i)` with coefficients depending on `t`.
pub fn taylor_x_firstorder(u: &GridFunction, x0: &[f64]) -> Result<PolynomialSlice> {
    let g = u.grid();
    if x0.len() != g.d() {
        return Err(Error::InvalidArgument("x0 needs d coordinates".into()));
    }
    let lay = layout(g, PolyClass::Pbar1)?;
    let point: Vec<usize> = (0..g.d()).map(|i| lattice_index(g, Axis::Space(i), x0[i])).collect::<Result<_>>()?;
    let mut fields = Vec::new();
    for e in &lay.monomials {
        fields.push(derivative_along(u, e)?);
    }
    let scales = vec![1.0; fields.len()];
    let coeffs = gather(g, &lay, &point, &fields, &scales);
    let centre = point.iter().enumerate().map(|(i, &p)| g.coord(i, p)).collect();
    Ok(PolynomialSlice { class: PolyClass::Pbar1, grid: g.clone(), regular: lay.regular, frozen: lay.frozen, centre, monomials: lay.monomials, coeffs })
}

/// Sup of `|u - p|` over `B_r(x0)` (or `Q_r(z0)` for parabolic classes and
/// for `Pbar1` on grids with time), where `p` is the least-squares fit from
/// the class on each frozen slice; the maximum over slices is returned.
///
/// `centre` is a lattice multi-index in array order. Slices with fewer
/// points than the class dimension are skipped; if none can be fitted the
/// fit is underdetermined.
pub fn best_fit_error(u: &GridFunction, centre: &[usize], r: f64, class: PolyClass) -> Result<f64> {
    let g = u.grid();
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let shape = g.shape();
    if centre.len() != shape.len() || centre.iter().zip(&shape).any(|(c, n)| c >= n) {
        return Err(Error::InvalidArgument("centre is not a lattice multi-index".into()));
    }
    let lay = layout(g, class)?;
    let cylinder = g.has_time() && !matches!(class, PolyClass::Ptilde(_));
    let spatial = g.spatial_axes();
    // index window per axis
    let mut lo = vec![0usize; shape.len()];
    let mut hi = vec![0usize; shape.len()];
    for a in 0..shape.len() {
        let h = g.array_spacing(a);
        let c = centre[a] as isize;
        let (l, u) = match g.axis_of(a) {
            Axis::Time if cylinder => (c - ((r * r) / h + 1e-9).floor() as isize, c),
            Axis::Time => (0, shape[a] as isize - 1),
            Axis::Space(_) => {
                let m = (r / h + 1e-9).floor() as isize;
                (c - m, c + m)
            }
        };
        lo[a] = l.max(0) as usize;
        hi[a] = u.min(shape[a] as isize - 1) as usize;
    }
    let mut slices: BTreeMap<Vec<usize>, Vec<(usize, Vec<f64>)>> = BTreeMap::new();
    let mut m = lo.clone();
    let r2 = r * r * (1.0 + 1e-12);
    loop {
        let mut dist2 = 0.0;
        for &a in &spatial {
            let dx = (m[a] as isize - centre[a] as isize) as f64 * g.array_spacing(a);
            dist2 += dx * dx;
        }
        if dist2 <= r2 {
            let key: Vec<usize> = lay.frozen.iter().map(|&a| m[a]).collect();
            let local: Vec<f64> = lay
                .regular
                .iter()
                .map(|&a| {
                    let scale = if matches!(g.axis_of(a), Axis::Time) { r * r } else { r };
                    (m[a] as isize - centre[a] as isize) as f64 * g.array_spacing(a) / scale
                })
                .collect();
            slices.entry(key).or_default().push((g.ravel(&m), local));
        }
        let mut a = shape.len();
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            m[a] += 1;
            if m[a] <= hi[a] {
                break;
            }
            m[a] = lo[a];
            if a == 0 {
                a = usize::MAX;
                break;
            }
        }
        if a == usize::MAX {
            break;
        }
    }
    let dim = lay.monomials.len();
    let vals = u.values();
    let mut best = 0.0_f64;
    let mut fitted = 0usize;
    for pts in slices.values() {
        if pts.len() < dim {
            continue;
        }
        let a = DMatrix::from_fn(pts.len(), dim, |i, j| {
            lay.monomials[j].iter().zip(&pts[i].1).map(|(&p, x)| x.powi(p as i32)).product::<f64>()
        });
        let b = DVector::from_iterator(pts.len(), pts.iter().map(|(k, _)| vals[*k]));
        let svd = a.clone().svd(true, true);
        let coef = svd
            .solve(&b, 1e-12 * svd.singular_values.max())
            .map_err(|e| Error::Underdetermined(e.to_string()))?;
        let res = &b - &a * coef;
        best = best.max(res.amax());
        fitted += 1;
    }
    if fitted == 0 {
        return Err(Error::Underdetermined(format!("no slice of the ball holds {dim} points")));
    }
    Ok(best)
}

/// `max over centres and radii of r^{-k-delta} best_fit_error`.
pub fn campanato_quotient(
    u: &GridFunction,
    k: u8,
    delta: f64,
    class: PolyClass,
    centres: &[Vec<usize>],
    radii: &[f64],
) -> Result<f64> {
    let mut best = 0.0_f64;
    for c in centres {
        for &r in radii {
            let e = best_fit_error(u, c, r, class)?;
            best = best.max(e / r.powf(k as f64 + delta));
        }
    }
    Ok(best)
}

/// Centres on a sub-lattice with the given point stride inside the interior
/// region (margin fraction per side). Time index, if any, is the last one.
pub fn interior_centres(grid: &AnisotropicGrid, margin: f64, stride: usize) -> Vec<Vec<usize>> {
    let shape = grid.shape();
    let spatial = grid.spatial_axes();
    let ranges: Vec<Vec<usize>> = spatial
        .iter()
        .map(|&a| {
            let n = shape[a];
            let k = (margin * (n - 1) as f64 - 1e-9).ceil().max(0.0) as usize;
            let mid = (n - 1) / 2;
            let mut v: Vec<usize> = (k..=n - 1 - k).filter(|i| (*i as isize - mid as isize) % stride as isize == 0).collect();
            v.dedup();
            v
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; spatial.len()];
    loop {
        let mut c = vec![0usize; shape.len()];
        if grid.has_time() {
            c[0] = shape[0] - 1;
        }
        for (j, &a) in spatial.iter().enumerate() {
            c[a] = ranges[j][idx[j]];
        }
        out.push(c);
        let mut j = spatial.len();
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < ranges[j].len() {
                break;
            }
            idx[j] = 0;
            if j == 0 {
                return out;
            }
        }
    }
}

/// Dyadic radii `r_max 2^{-j}` down to `4 h_max`.
pub fn dyadic_radii(grid: &AnisotropicGrid, r_max: f64) -> Vec<f64> {
    let h = (0..grid.d()).map(|i| grid.spacing(i)).fold(0.0, f64::max);
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= 4.0 * h * (1.0 - 1e-12) {
        out.push(r);
        r *= 0.5;
    }
    out
}
