//! Hoelder seminorm estimators on lattices.
//!
//! Every estimator is a maximum of difference quotients `|u(a) - u(b)| / rho(a, b)^gamma`
//! over pairs `a != b` inside a fiber of the lattice. The fiber fixes the
//! variables over which only a supremum is taken (for the partial seminorm in
//! `x'` these are `t` and `x''`), and `rho` is either Euclidean or the
//! parabolic distance `|dx| + |dt|^{1/2}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{derivative_along, fibers, Fiber, GridFunction, MultiIndex};

/// How many pairs are inspected per fiber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairBudget {
    /// All pairs, regardless of cost.
    Exact,
    /// Nearest-neighbour pairs plus `n_pairs` seeded random pairs per fiber.
    Sampled { n_pairs: usize, seed: u64 },
    /// Exact when a fiber has at most `max_exact` pairs, sampled otherwise.
    Auto { max_exact: usize, n_pairs: usize, seed: u64 },
}

impl Default for PairBudget {
    fn default() -> Self {
        PairBudget::Auto { max_exact: 1_000_000, n_pairs: 200_000, seed: 0x5eed }
    }
}

/// Seminorm family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `[u]_{x',delta}`: quotients in `x'`, sup over `t` and `x''`.
    Xprime,
    /// `[u]_{z',delta/2,delta}`: quotients in `(t, x')` with the parabolic distance.
    ZprimeParabolic,
    /// `<u>_{1+delta}`: quotients in `t` with exponent `(1+delta)/2`.
    TimeHalfOrder,
    /// Hoelder quotient in all spatial variables (and `t` with the parabolic
    /// distance when the grid has time).
    Full,
}

/// A seminorm request: family, derivative order `k`, exponent and budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormSpec {
    pub family: Family,
    pub order: u8,
    pub delta: f64,
    pub budget: PairBudget,
}

impl SeminormSpec {
    pub fn new(family: Family, order: u8, delta: f64) -> Self {
        Self { family, order, delta, budget: PairBudget::default() }
    }

    pub fn with_budget(mut self, budget: PairBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta = {} not in (0, 1)", self.delta)));
        }
        if self.order > 2 {
            return Err(Error::InvalidArgument(format!("order {} > 2", self.order)));
        }
        Ok(())
    }

    /// Fibers, metric and exponent of the order-zero quotient.
    pub(crate) fn geometry(&self, u: &GridFunction) -> Result<(Vec<usize>, Vec<MetricAxis>, f64)> {
        let g = u.grid();
        let spatial = |axes: &[usize]| -> Vec<MetricAxis> {
            axes.iter().map(|&a| MetricAxis { spacing: g.array_spacing(a), sqrt: false }).collect()
        };
        match self.family {
            Family::Xprime => {
                let axes = g.xprime_axes();
                let m = spatial(&axes);
                Ok((axes, m, self.delta))
            }
            Family::ZprimeParabolic => {
                let ta = g
                    .time_axis()
                    .ok_or_else(|| Error::InvalidArgument("parabolic seminorm needs a time axis".into()))?;
                let mut axes = vec![0];
                axes.extend(g.xprime_axes());
                let mut m = vec![MetricAxis { spacing: ta.tau(), sqrt: true }];
                m.extend(spatial(&g.xprime_axes()));
                Ok((axes, m, self.delta))
            }
            Family::TimeHalfOrder => {
                let ta = g
                    .time_axis()
                    .ok_or_else(|| Error::InvalidArgument("time seminorm needs a time axis".into()))?;
                Ok((vec![0], vec![MetricAxis { spacing: ta.tau(), sqrt: false }], 0.5 * (1.0 + self.delta)))
            }
            Family::Full => {
                let mut axes = Vec::new();
                let mut m = Vec::new();
                if let Some(ta) = g.time_axis() {
                    axes.push(0);
                    m.push(MetricAxis { spacing: ta.tau(), sqrt: true });
                }
                let sp = g.spatial_axes();
                m.extend(spatial(&sp));
                axes.extend(sp);
                Ok((axes, m, self.delta))
            }
        }
    }

    /// Derivatives `D^beta u` entering an order-`k` seminorm, as spatial-axis
    /// order vectors.
    pub(crate) fn derivative_set(&self, u: &GridFunction) -> Vec<Vec<usize>> {
        let g = u.grid();
        let k = self.order as usize;
        let (q, d) = (g.q(), g.d());
        match self.family {
            Family::Full => MultiIndex::of_order(d, k).into_iter().map(|a| a.0).collect(),
            _ => MultiIndex::of_order(q, k).into_iter().map(|a| a.0).collect(),
        }
    }

    pub fn evaluate(&self, u: &GridFunction) -> Result<f64> {
        self.validate()?;
        let (axes, metric, gamma) = self.geometry(u)?;
        let mut best = 0.0_f64;
        for beta in self.derivative_set(u) {
            let du = derivative_along(u, &beta)?;
            best = best.max(max_quotient(&du, &axes, &metric, gamma, self.budget)?);
        }
        Ok(best)
    }
}

/// One axis of the pair metric. Time axes in parabolic metrics use `sqrt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct MetricAxis {
    pub spacing: f64,
    pub sqrt: bool,
}

/// `rho(offset)^gamma` for an integer lattice offset. Shared with the
/// brute-force oracle so both produce identical floating-point quotients.
pub(crate) fn pair_denominator(metric: &[MetricAxis], offset: &[isize], gamma: f64) -> f64 {
    let mut sq = 0.0;
    let mut extra = 0.0;
    for (m, &o) in metric.iter().zip(offset) {
        let len = o.unsigned_abs() as f64 * m.spacing;
        if m.sqrt {
            extra += len.sqrt();
        } else {
            sq += len * len;
        }
    }
    (sq.sqrt() + extra).powf(gamma)
}

fn fiber_seed(seed: u64, id: usize) -> u64 {
    seed ^ (id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Max quotient over all fibers along `axes`.
pub(crate) fn max_quotient(
    u: &GridFunction,
    axes: &[usize],
    metric: &[MetricAxis],
    gamma: f64,
    budget: PairBudget,
) -> Result<f64> {
    let fs = fibers(u.grid(), axes);
    let n = fs.first().map(|f| f.len()).unwrap_or(0);
    if n < 2 {
        return Err(Error::InvalidArgument("fewer than two points in the quotient directions".into()));
    }
    let total = n * (n - 1) / 2;
    let vals = u.values();
    let mut best = 0.0_f64;
    for (id, f) in fs.iter().enumerate() {
        let v = match budget {
            PairBudget::Exact => exact_fiber(vals, f, metric, gamma),
            PairBudget::Sampled { n_pairs, seed } => {
                if n_pairs >= total {
                    exact_fiber(vals, f, metric, gamma)
                } else {
                    sampled_fiber(vals, f, metric, gamma, n_pairs, fiber_seed(seed, id))
                }
            }
            PairBudget::Auto { max_exact, n_pairs, seed } => {
                if total <= max_exact || n_pairs >= total {
                    exact_fiber(vals, f, metric, gamma)
                } else {
                    sampled_fiber(vals, f, metric, gamma, n_pairs, fiber_seed(seed, id))
                }
            }
        };
        best = best.max(v);
    }
    Ok(best)
}

fn exact_fiber(vals: &[f64], f: &Fiber, metric: &[MetricAxis], gamma: f64) -> f64 {
    let r = f.shape.len();
    let mut best = 0.0_f64;
    // odometer over offsets in prod [-(n_k-1), n_k-1], keeping lexicographically positive ones
    let mut o: Vec<isize> = f.shape.iter().map(|&n| -(n as isize - 1)).collect();
    o[0] = 0;
    let mut lo = vec![0usize; r];
    let mut hi = vec![0usize; r];
    let mut a = vec![0usize; r];
    loop {
        let positive = o.iter().find(|&&x| x != 0).map(|&x| x > 0).unwrap_or(false);
        if positive {
            let den = pair_denominator(metric, &o, gamma);
            let mut shift = 0isize;
            for k in 0..r {
                lo[k] = (-o[k]).max(0) as usize;
                hi[k] = f.shape[k] - o[k].max(0) as usize;
                shift += o[k] * f.strides[k] as isize;
            }
            best = best.max(scan_offset(vals, f, &lo, &hi, &mut a, shift, den));
        }
        // advance
        let mut k = r;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            o[k] += 1;
            if o[k] <= f.shape[k] as isize - 1 {
                break;
            }
            o[k] = -(f.shape[k] as isize - 1);
            if k == 0 {
                return best;
            }
        }
    }
}

fn scan_offset(
    vals: &[f64],
    f: &Fiber,
    lo: &[usize],
    hi: &[usize],
    a: &mut [usize],
    shift: isize,
    den: f64,
) -> f64 {
    let r = f.shape.len();
    if (0..r).any(|k| lo[k] >= hi[k]) {
        return 0.0;
    }
    a.copy_from_slice(lo);
    let last = r - 1;
    let s_last = f.strides[last];
    let mut best = 0.0_f64;
    loop {
        let mut base = f.base;
        for k in 0..last {
            base += a[k] * f.strides[k];
        }
        let mut p = base + lo[last] * s_last;
        for _ in lo[last]..hi[last] {
            let qidx = (p as isize + shift) as usize;
            let v = (vals[p] - vals[qidx]).abs() / den;
            if v > best {
                best = v;
            }
            p += s_last;
        }
        let mut k = last;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            a[k] += 1;
            if a[k] < hi[k] {
                break;
            }
            a[k] = lo[k];
            if k == 0 {
                return best;
            }
        }
    }
}

fn sampled_fiber(vals: &[f64], f: &Fiber, metric: &[MetricAxis], gamma: f64, n_pairs: usize, seed: u64) -> f64 {
    let r = f.shape.len();
    let mut best = 0.0_f64;
    // all nearest-neighbour pairs
    for k in 0..r {
        let mut o = vec![0isize; r];
        o[k] = 1;
        let den = pair_denominator(metric, &o, gamma);
        let lo = vec![0usize; r];
        let mut hi = f.shape.clone();
        hi[k] -= 1;
        let mut a = vec![0usize; r];
        best = best.max(scan_offset(vals, f, &lo, &hi, &mut a, f.strides[k] as isize, den));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = vec![0isize; r];
    let logn: Vec<f64> = f.shape.iter().map(|&n| (n as f64 + 1.0).ln()).collect();
    for _ in 0..n_pairs {
        for k in 0..r {
            // log-uniform magnitude in [0, n_k - 1]
            let m = ((rng.random::<f64>() * logn[k]).exp().floor() as isize - 1).clamp(0, f.shape[k] as isize - 1);
            o[k] = if rng.random::<bool>() { m } else { -m };
        }
        if o.iter().all(|&x| x == 0) {
            continue;
        }
        let mut p = f.base as isize;
        let mut qq = p;
        for k in 0..r {
            let lo = (-o[k]).max(0) as usize;
            let hi = f.shape[k] - o[k].max(0) as usize;
            let ak = rng.random_range(lo..hi) as isize;
            p += ak * f.strides[k] as isize;
            qq += (ak + o[k]) * f.strides[k] as isize;
        }
        let v = (vals[p as usize] - vals[qq as usize]).abs() / pair_denominator(metric, &o, gamma);
        if v > best {
            best = v;
        }
    }
    best
}

/// `[u]_{x',delta}` with the default pair budget.
pub fn seminorm_xprime(u: &GridFunction, delta: f64) -> Result<f64> {
    SeminormSpec::new(Family::Xprime, 0, delta).evaluate(u)
}

/// `[u]_{x',k+delta} = max_{|alpha|=k} [D^alpha u]_{x',delta}`.
pub fn seminorm_xprime_k(u: &GridFunction, k: u8, delta: f64) -> Result<f64> {
    SeminormSpec::new(Family::Xprime, k, delta).evaluate(u)
}

/// `[u]_{z',delta/2,delta}` with the parabolic distance in `(t, x')`.
pub fn seminorm_zprime(u: &GridFunction, delta: f64) -> Result<f64> {
    SeminormSpec::new(Family::ZprimeParabolic, 0, delta).evaluate(u)
}

/// `<u>_{1+delta}`: sup over `x` of `|u(t,x) - u(s,x)| / |t - s|^{(1+delta)/2}`.
pub fn seminorm_time_half(u: &GridFunction, delta: f64) -> Result<f64> {
    SeminormSpec::new(Family::TimeHalfOrder, 0, delta).evaluate(u)
}

/// Full Hoelder seminorm of order `k` in all variables.
pub fn seminorm_full(u: &GridFunction, k: u8, delta: f64) -> Result<f64> {
    SeminormSpec::new(Family::Full, k, delta).evaluate(u)
}

/// Hoelder quotient along an arbitrary set of spatial axes (zero-based),
/// sup over every other variable.
pub fn seminorm_partial(u: &GridFunction, spatial_axes: &[usize], delta: f64, budget: PairBudget) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} not in (0, 1)")));
    }
    let g = u.grid();
    let off = usize::from(g.has_time());
    let mut axes = Vec::with_capacity(spatial_axes.len());
    for &i in spatial_axes {
        if i >= g.d() {
            return Err(Error::InvalidArgument(format!("spatial axis {i} out of range")));
        }
        axes.push(i + off);
    }
    axes.sort_unstable();
    axes.dedup();
    let metric: Vec<MetricAxis> = axes.iter().map(|&a| MetricAxis { spacing: g.array_spacing(a), sqrt: false }).collect();
    max_quotient(u, &axes, &metric, delta, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{AnisotropicGrid, TimeAxis};

    fn g2(n: usize) -> AnisotropicGrid {
        AnisotropicGrid::cube(2, 1, -1.0, 1.0, n).unwrap()
    }

    #[test]
    fn xpp_only_vanishes() {
        let u = GridFunction::from_fn(&g2(9), |_, x| (5.0 * x[1]).sin().signum());
        assert_eq!(seminorm_xprime(&u, 0.5).unwrap(), 0.0);
        assert!(seminorm_full(&u, 0, 0.5).unwrap() > 0.0);
    }

    #[test]
    fn abs_and_linear_on_interval() {
        // |x| on [-1, 1]: the maximum 1 is attained at (0, +-1); x itself gives 2^{1/2}.
        let u = GridFunction::from_fn(&g2(9), |_, x| x[0].abs());
        assert!((seminorm_xprime(&u, 0.5).unwrap() - 1.0).abs() < 1e-14);
        let u = GridFunction::from_fn(&g2(9), |_, x| x[0]);
        assert!((seminorm_xprime(&u, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let a = seminorm_xprime(&u.scale(3.0), 0.5).unwrap();
        assert!((a - 3.0 * 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn quadratic_has_zero_second_order_seminorm() {
        let g = AnisotropicGrid::cube(3, 2, -1.0, 1.0, 7).unwrap();
        let u = GridFunction::from_fn(&g, |_, x| (x[0] * x[0] + 3.0 * x[0] * x[1]) * (1.0 + x[2].abs()));
        assert!(seminorm_xprime_k(&u, 2, 0.5).unwrap() < 1e-10);
        let u = GridFunction::from_fn(&g, |_, x| x[0] * x[1] * (2.0 + (3.0 * x[2]).cos()));
        assert!(seminorm_xprime_k(&u, 2, 0.5).unwrap() < 1e-10);
    }

    #[test]
    fn parabolic_distance() {
        let m = [MetricAxis { spacing: 1.0, sqrt: true }, MetricAxis { spacing: 1.0, sqrt: false }];
        assert_eq!(pair_denominator(&m, &[1, 1], 1.0), 2.0);
    }

    #[test]
    fn time_seminorms() {
        let g = g2(5).with_time(TimeAxis { t0: 0.0, t1: 1.0, n: 9 }).unwrap();
        let u = GridFunction::from_fn(&g, |t, _| t);
        let v = seminorm_time_half(&u, 0.5).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!((seminorm_time_half(&u.scale(2.0), 0.5).unwrap() - 2.0).abs() < 1e-14);
        let c = GridFunction::from_fn(&g, |_, x| x[1]);
        assert_eq!(seminorm_time_half(&c, 0.5).unwrap(), 0.0);
        assert_eq!(seminorm_zprime(&c, 0.5).unwrap(), 0.0);
        // u = t: the largest gap wins because |dt|^{1 - delta/2} grows
        let z = seminorm_zprime(&u, 0.5).unwrap();
        assert!((z - 1.0).abs() < 1e-14);
        assert!(seminorm_zprime(&GridFunction::zeros(&g2(5)), 0.5).is_err());
    }

    #[test]
    fn sampled_all_pairs_is_exact() {
        let g = g2(11);
        let u = GridFunction::from_fn(&g, |_, x| (3.0 * x[0]).sin() * x[1] + x[0].abs().sqrt());
        let ex = SeminormSpec::new(Family::Full, 0, 0.4).with_budget(PairBudget::Exact).evaluate(&u).unwrap();
        let all = SeminormSpec::new(Family::Full, 0, 0.4)
            .with_budget(PairBudget::Sampled { n_pairs: 121 * 60, seed: 1 })
            .evaluate(&u)
            .unwrap();
        assert_eq!(ex, all);
        let few = SeminormSpec::new(Family::Full, 0, 0.4)
            .with_budget(PairBudget::Sampled { n_pairs: 50, seed: 1 })
            .evaluate(&u)
            .unwrap();
        assert!(few <= ex);
    }

    #[test]
    fn partial_axes_select_directions() {
        let u = GridFunction::from_fn(&g2(9), |_, x| x[1]);
        assert_eq!(seminorm_partial(&u, &[0], 0.5, PairBudget::Exact).unwrap(), 0.0);
        assert!(seminorm_partial(&u, &[1], 0.5, PairBudget::Exact).unwrap() > 0.0);
    }
}
