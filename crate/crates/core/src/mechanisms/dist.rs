use std::cmp::Ordering;
use std::str::FromStr;

use num_traits::Float;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{lift, MechError};

/// Largest number of bins a grid may have unless a caller asks for more.
pub const DEFAULT_MAX_BINS: usize = 1 << 16;

/// Equal-width bins covering `[lo, hi]`. Values are represented by bin
/// midpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<F> {
    lo: F,
    hi: F,
    step: F,
    bins: usize,
}

pub type RealGrid = Grid<f64>;

impl<F: Float> Grid<F> {
    pub fn new(lo: F, hi: F, step: F) -> Result<Self, MechError> {
        Self::with_max_bins(lo, hi, step, DEFAULT_MAX_BINS)
    }

    pub fn with_max_bins(lo: F, hi: F, step: F, max_bins: usize) -> Result<Self, MechError> {
        let bad = |m: String| Err(MechError::InvalidGrid(m));
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad("need finite lo < hi".into());
        }
        if !(step > F::zero() && step.is_finite()) {
            return bad("step must be positive".into());
        }
        let n = (hi - lo) / step;
        let rounded = n.round();
        if (n - rounded).abs() > lift::<F>(1e-6) * rounded.max(F::one()) || rounded < F::one() {
            return bad("(hi - lo) / step must be a positive integer".into());
        }
        let bins = rounded.to_usize().unwrap_or(usize::MAX);
        if bins > max_bins {
            return bad(format!("{bins} bins exceeds the limit of {max_bins}"));
        }
        Ok(Grid { lo, hi, step, bins })
    }

    pub fn lo(&self) -> F {
        self.lo
    }

    pub fn hi(&self) -> F {
        self.hi
    }

    pub fn step(&self) -> F {
        self.step
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Left edge of bin `i`; `edge(bins())` is `hi`.
    pub fn edge(&self, i: usize) -> F {
        if i >= self.bins {
            self.hi
        } else {
            self.lo + self.step * lift(i as f64)
        }
    }

    pub fn center(&self, i: usize) -> F {
        self.lo + self.step * lift(i as f64 + 0.5)
    }

    /// Bin containing `x`, clamped to the edge bins.
    pub fn index_of(&self, x: F) -> usize {
        let k = ((x - self.lo) / self.step).floor();
        if !(k > F::zero()) {
            0
        } else {
            k.to_usize().unwrap_or(usize::MAX).min(self.bins - 1)
        }
    }

    pub fn snap(&self, x: F) -> F {
        self.center(self.index_of(x))
    }

    fn covers(&self, center: F) -> Result<(), MechError> {
        if center >= self.lo && center <= self.hi {
            Ok(())
        } else {
            Err(MechError::GridTooNarrow {
                center: center.to_f64().unwrap_or(f64::NAN),
                lo: self.lo.to_f64().unwrap_or(f64::NAN),
                hi: self.hi.to_f64().unwrap_or(f64::NAN),
            })
        }
    }
}

impl FromStr for Grid<f64> {
    type Err = MechError;

    /// `lo:hi:step`
    fn from_str(s: &str) -> Result<Self, MechError> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
        match nums.as_deref() {
            Ok([lo, hi, step]) => Grid::new(*lo, *hi, *step),
            _ => Err(MechError::InvalidGrid(format!("expected lo:hi:step, got `{s}`"))),
        }
    }
}

/// A finite distribution: `mass[i]` is the probability of `support[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist<V, F = f64> {
    support: Vec<V>,
    mass: Vec<F>,
}

pub type RealDist = Dist<f64, f64>;

fn mass_tol<F: Float>() -> F {
    lift::<F>(1e-9).max(F::epsilon() * lift(1000.0))
}

impl<V, F: Float> Dist<V, F> {
    pub fn point(v: V) -> Self {
        Dist { support: vec![v], mass: vec![F::one()] }
    }

    pub fn from_parts(support: Vec<V>, mass: Vec<F>) -> Result<Self, MechError> {
        if support.len() != mass.len() || support.is_empty() {
            return Err(MechError::DomainError("support and masses must be nonempty and of equal length".into()));
        }
        if mass.iter().any(|m| !(*m >= F::zero())) {
            return Err(MechError::DomainError("negative mass".into()));
        }
        let d = Dist { support, mass };
        if (d.total() - F::one()).abs() > mass_tol() {
            return Err(MechError::DomainError(format!("masses sum to {}", d.total().to_f64().unwrap_or(f64::NAN))));
        }
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[V] {
        &self.support
    }

    pub fn masses(&self) -> &[F] {
        &self.mass
    }

    pub fn iter(&self) -> impl Iterator<Item = (&V, F)> {
        self.support.iter().zip(self.mass.iter().copied())
    }

    pub fn total(&self) -> F {
        self.mass.iter().copied().fold(F::zero(), |a, b| a + b)
    }

    pub fn map<W>(self, f: impl FnMut(V) -> W) -> Dist<W, F> {
        Dist { support: self.support.into_iter().map(f).collect(), mass: self.mass }
    }

    /// Sort the support and merge equal values, dropping zero masses.
    pub fn normalize_by(self, cmp: impl Fn(&V, &V) -> Ordering) -> Self {
        let mut pairs: Vec<(V, F)> = self.support.into_iter().zip(self.mass).filter(|(_, m)| *m > F::zero()).collect();
        pairs.sort_by(|a, b| cmp(&a.0, &b.0));
        let mut support: Vec<V> = Vec::with_capacity(pairs.len());
        let mut mass: Vec<F> = Vec::with_capacity(pairs.len());
        for (v, m) in pairs {
            match support.last() {
                Some(last) if cmp(last, &v) == Ordering::Equal => {
                    let k = mass.len() - 1;
                    mass[k] = mass[k] + m;
                }
                _ => {
                    support.push(v);
                    mass.push(m);
                }
            }
        }
        Dist { support, mass }
    }

    /// The mixture `Σ_v p(v) · f(v)`.
    pub fn bind<W, E>(
        &self,
        mut f: impl FnMut(&V) -> Result<Dist<W, F>, E>,
        cmp: impl Fn(&W, &W) -> Ordering,
    ) -> Result<Dist<W, F>, E> {
        let mut support = Vec::new();
        let mut mass = Vec::new();
        for (v, p) in self.iter() {
            if p <= F::zero() {
                continue;
            }
            let d = f(v)?;
            for (w, q) in d.support.into_iter().zip(d.mass) {
                support.push(w);
                mass.push(p * q);
            }
        }
        Ok(Dist { support, mass }.normalize_by(cmp))
    }
}

impl<F: Float> Dist<F, F> {
    pub fn mean(&self) -> F {
        self.iter().fold(F::zero(), |a, (v, m)| a + *v * m)
    }

    /// Move every value to its grid bin and merge.
    pub fn snap(self, grid: &Grid<F>) -> Self {
        self.map(|v| grid.snap(v)).normalize_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
    }

    fn aligned(&self, other: &Self) -> Vec<(F, F)> {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.len() || j < other.len() {
            let ord = match (self.support.get(i), other.support.get(j)) {
                (Some(a), Some(b)) => a.partial_cmp(b).unwrap_or(Ordering::Equal),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push((self.mass[i], F::zero()));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((F::zero(), other.mass[j]));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.mass[i], other.mass[j]));
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    /// Total variation distance. Both supports must be sorted.
    pub fn tv_distance(&self, other: &Self) -> F {
        let half = lift::<F>(0.5);
        self.aligned(other).into_iter().fold(F::zero(), |a, (p, q)| a + (p - q).abs()) * half
    }

    /// Smallest δ with `P(S) ≤ e^ε Q(S) + δ` for every event S. Both
    /// supports must be sorted.
    pub fn required_delta(&self, other: &Self, eps: F) -> F {
        let k = eps.exp();
        self.aligned(other).into_iter().fold(F::zero(), |a, (p, q)| a + (p - k * q).max(F::zero()))
    }
}

/// Discretised Laplace distribution: each bin gets the probability of its
/// interval, and the tails beyond the grid fold into the edge bins.
pub fn laplace_pmf<F: Float>(center: F, scale: F, grid: &Grid<F>) -> Result<Dist<F, F>, MechError> {
    if !(scale > F::zero() && scale.is_finite()) {
        return Err(MechError::InvalidScale(scale.to_f64().unwrap_or(f64::NAN)));
    }
    grid.covers(center)?;
    let half = lift::<F>(0.5);
    // probability below x, and above x, each computed without cancellation
    let below = |x: F| if x <= center { half * ((x - center) / scale).exp() } else { F::one() - half * ((center - x) / scale).exp() };
    let above = |x: F| if x >= center { half * ((center - x) / scale).exp() } else { F::one() - half * ((x - center) / scale).exp() };
    let n = grid.bins();
    let mut mass = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (grid.edge(i), grid.edge(i + 1));
        let lower = if i == 0 { F::zero() } else { below(a) };
        let upper_tail = if i + 1 == n { F::zero() } else { above(b) };
        let m = if b <= center {
            below(b) - lower
        } else if a >= center {
            (if i == 0 { F::one() } else { above(a) }) - upper_tail
        } else {
            F::one() - lower - upper_tail
        };
        mass.push(m.max(F::zero()));
    }
    let total = mass.iter().copied().fold(F::zero(), |s, m| s + m);
    let mass = mass.into_iter().map(|m| m / total).collect();
    Ok(Dist { support: (0..n).map(|i| grid.center(i)).collect(), mass })
}

/// Discretised Gaussian distribution with tails folded into the edge bins.
pub fn gauss_pmf(center: f64, sigma: f64, grid: &RealGrid) -> Result<RealDist, MechError> {
    super::check_scale(sigma)?;
    grid.covers(center)?;
    if sigma == 0.0 {
        return Ok(Dist::point(grid.snap(center)));
    }
    let normal = Normal::new(center, sigma).map_err(|e| MechError::DomainError(e.to_string()))?;
    let n = grid.bins();
    let mut mass = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (grid.edge(i), grid.edge(i + 1));
        let m = if b <= center {
            normal.cdf(b) - if i == 0 { 0.0 } else { normal.cdf(a) }
        } else if a >= center {
            (if i == 0 { 1.0 } else { normal.sf(a) }) - if i + 1 == n { 0.0 } else { normal.sf(b) }
        } else {
            1.0 - if i == 0 { 0.0 } else { normal.cdf(a) } - if i + 1 == n { 0.0 } else { normal.sf(b) }
        };
        mass.push(m.max(0.0));
    }
    let total: f64 = mass.iter().sum();
    Ok(Dist { support: (0..n).map(|i| grid.center(i)).collect(), mass: mass.into_iter().map(|m| m / total).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_validation() {
        let g: RealGrid = "-20:21:0.01".parse().unwrap();
        assert_eq!(g.bins(), 4100);
        assert!("0:1".parse::<RealGrid>().is_err());
        assert!(Grid::new(1.0, 0.0, 0.1).is_err());
        assert!(Grid::new(0.0, 1.0, 0.3).is_err());
        assert!(Grid::with_max_bins(0.0, 1.0, 0.001, 100).is_err());
        assert_eq!(g.index_of(-100.0), 0);
        assert_eq!(g.index_of(100.0), 4099);
    }

    #[test]
    fn laplace_pmf_normalised_and_centred() {
        let g = Grid::new(-20.0, 21.0, 0.01).unwrap();
        let d = laplace_pmf(0.0, 1.0, &g).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-9);
        // mean by midpoint-rule integration of the density over a wide range
        let (lo, hi, n) = (-60.0f64, 60.0f64, 1_200_000);
        let h = (hi - lo) / n as f64;
        let oracle: f64 = (0..n).map(|i| lo + (i as f64 + 0.5) * h).map(|x| x * 0.5 * (-(x - 0.5).abs()).exp() * h).sum();
        let d = laplace_pmf(0.5, 1.0, &g).unwrap();
        assert!((oracle - 0.5).abs() < 1e-6);
        assert!((d.mean() - oracle).abs() < g.step());
    }

    #[test]
    fn laplace_pmf_symmetric() {
        let g = Grid::new(-5.0, 5.0, 0.1).unwrap();
        let d = laplace_pmf(0.0, 0.7, &g).unwrap();
        let m = d.masses();
        for i in 0..m.len() {
            assert!((m[i] - m[m.len() - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn laplace_pmf_errors() {
        let g = Grid::new(-1.0, 1.0, 0.5).unwrap();
        assert!(matches!(laplace_pmf(3.0, 1.0, &g), Err(MechError::GridTooNarrow { .. })));
        assert!(matches!(laplace_pmf(0.0, 0.0, &g), Err(MechError::InvalidScale(_))));
    }

    #[test]
    fn gauss_pmf_normalised() {
        let g = Grid::new(-10.0, 10.0, 0.05).unwrap();
        let d = gauss_pmf(1.0, 1.5, &g).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-9);
        assert!((d.mean() - 1.0).abs() < g.step());
    }

    #[test]
    fn bind_of_points() {
        let d: RealDist = Dist::point(3.0);
        let e = d.bind(|v| Ok::<_, ()>(Dist::point(v + 1.0)), |a: &f64, b| a.total_cmp(b)).unwrap();
        assert_eq!(e, Dist::point(4.0));
    }

    #[test]
    fn required_delta_of_identical_is_zero() {
        let g = Grid::new(-5.0, 5.0, 0.1).unwrap();
        let d = laplace_pmf(0.0, 1.0, &g).unwrap();
        assert_eq!(d.required_delta(&d, 0.0), 0.0);
        assert_eq!(d.tv_distance(&d), 0.0);
    }

    proptest! {
        #[test]
        fn laplace_ratio_bounded(c in -3.0f64..3.0, delta in 0.0f64..2.0, b in 0.3f64..3.0) {
            let g = Grid::new(-10.0, 10.0, 0.05).unwrap();
            let p = laplace_pmf(c, b, &g).unwrap();
            let q = laplace_pmf(c + delta, b, &g).unwrap();
            let bound = (delta / b).exp() + 1e-6 + g.step() / b;
            for i in 1..g.bins() - 1 {
                prop_assert!(p.masses()[i] <= bound * q.masses()[i]);
                prop_assert!(q.masses()[i] <= bound * p.masses()[i]);
            }
        }

        #[test]
        fn masses_sum_to_one(c in -4.0f64..4.0, b in 0.05f64..5.0) {
            let g = Grid::new(-5.0, 5.0, 0.25).unwrap();
            let d = laplace_pmf(c, b, &g).unwrap();
            prop_assert!((d.total() - 1.0).abs() < 1e-9);
            prop_assert!(Dist::from_parts(d.support().to_vec(), d.masses().to_vec()).is_ok());
        }
    }
}
