//! Noise mechanisms: seeded samplers for execution and discretised
//! distributions for exact evaluation.
//!
//! Randomness comes from ChaCha8 seeded with a `u64`, which yields the
//! same stream on every platform.

mod dist;

use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use dist::{gauss_pmf, laplace_pmf, Dist, Grid, RealDist, RealGrid, DEFAULT_MAX_BINS};

/// The seeded random stream used by every sampler.
#[derive(Debug, Clone)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in the open interval (0, 1), with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        loop {
            let bits = self.0.next_u64() >> 11;
            if bits != 0 {
                return bits as f64 * (1.0 / (1u64 << 53) as f64);
            }
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// An independent stream derived from this one, for per-trial use.
    pub fn split(&mut self) -> Rng {
        Rng::from_seed(self.0.next_u64())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechError {
    #[error("invalid noise scale {0}")]
    InvalidScale(f64),
    #[error("parameter out of range: {0}")]
    DomainError(String),
    #[error("no scores to choose from")]
    EmptyScores,
    #[error("grid [{lo}, {hi}] does not contain the centre {center}")]
    GridTooNarrow { center: f64, lo: f64, hi: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

fn check_scale<F: Float>(scale: F) -> Result<(), MechError> {
    if scale.is_finite() && scale >= F::zero() {
        Ok(())
    } else {
        Err(MechError::InvalidScale(scale.to_f64().unwrap_or(f64::NAN)))
    }
}

fn lift<F: Float>(x: f64) -> F {
    F::from(x).expect("float conversion")
}

/// Inverse-CDF Laplace sample with the given centre and scale.
pub fn laplace_sample<F: Float>(center: F, scale: F, rng: &mut Rng) -> Result<F, MechError> {
    check_scale(scale)?;
    if scale.is_zero() {
        return Ok(center);
    }
    let u: F = lift(rng.uniform() - 0.5);
    let two = F::one() + F::one();
    Ok(center - scale * u.signum() * (F::one() - two * u.abs()).ln())
}

/// Standard deviation of the Gaussian mechanism for sensitivity `s`.
pub fn gauss_sigma<F: Float>(s: F, eps: F, delta: F) -> Result<F, MechError> {
    let bad = |what: &str| Err(MechError::DomainError(what.to_string()));
    if !(s > F::zero() && s.is_finite()) {
        return bad("gauss sensitivity must be positive");
    }
    if !(eps > F::zero() && eps.is_finite()) {
        return bad("gauss epsilon must be positive");
    }
    if !(delta > F::zero() && delta < F::one()) {
        return bad("gauss delta must lie in (0, 1)");
    }
    let two = F::one() + F::one();
    Ok((two * s * s * (lift::<F>(1.25) / delta).ln()).sqrt() / eps)
}

/// Box–Muller Gaussian sample. Uses two uniforms per call.
pub fn gauss_sample<F: Float>(center: F, sigma: F, rng: &mut Rng) -> Result<F, MechError> {
    check_scale(sigma)?;
    let u1 = rng.uniform();
    let u2 = rng.uniform();
    if sigma.is_zero() {
        return Ok(center);
    }
    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    Ok(center + sigma * lift(z))
}

/// Selection probabilities of the exponential mechanism.
pub fn exp_mech_probs<F: Float>(scores: &[F], eps: F, sens: F) -> Result<Vec<F>, MechError> {
    if scores.is_empty() {
        return Err(MechError::EmptyScores);
    }
    if !(eps > F::zero() && eps.is_finite()) || !(sens > F::zero() && sens.is_finite()) {
        return Err(MechError::DomainError("exponential mechanism needs positive epsilon and sensitivity".into()));
    }
    let max = scores.iter().copied().fold(F::neg_infinity(), F::max);
    let two = F::one() + F::one();
    let w: Vec<F> = scores.iter().map(|&s| (eps * (s - max) / (two * sens)).exp()).collect();
    let total = w.iter().copied().fold(F::zero(), |a, b| a + b);
    Ok(w.into_iter().map(|x| x / total).collect())
}

pub fn exp_mech<F: Float>(scores: &[F], eps: F, sens: F, rng: &mut Rng) -> Result<usize, MechError> {
    let probs = exp_mech_probs(scores, eps, sens)?;
    let u: F = lift(rng.uniform());
    let mut acc = F::zero();
    for (i, p) in probs.iter().enumerate() {
        acc = acc + *p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_degenerate_and_deterministic() {
        let mut r = Rng::from_seed(1);
        assert_eq!(laplace_sample(7.0, 0.0, &mut r).unwrap(), 7.0);
        let a: f64 = laplace_sample(0.0, 1.0, &mut Rng::from_seed(42)).unwrap();
        let b: f64 = laplace_sample(0.0, 1.0, &mut Rng::from_seed(42)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(laplace_sample(0.0, -1.0, &mut r).is_err());
        assert!(laplace_sample(0.0, f64::INFINITY, &mut r).is_err());
    }

    #[test]
    fn laplace_moments() {
        let mut r = Rng::from_seed(5);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| laplace_sample(0.0, 1.0, &mut r).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 2.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn gauss_sigma_oracle() {
        // sqrt(2 ln(1.25e5)), evaluated separately
        let want = 4.844805262605389;
        assert!((gauss_sigma(1.0, 1.0, 1e-5).unwrap() - want).abs() < 1e-3);
        assert!((gauss_sigma(2.0, 1.0, 1e-5).unwrap() - 2.0 * want).abs() < 1e-9);
        assert!((gauss_sigma(1.0, 2.0, 1e-5).unwrap() - want / 2.0).abs() < 1e-9);
        assert!(gauss_sigma(1.0, 1.0, 1.0).is_err());
        assert!(gauss_sigma(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn gauss_variance() {
        let mut r = Rng::from_seed(9);
        assert_eq!(gauss_sample(3.0, 0.0, &mut r).unwrap(), 3.0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| gauss_sample(0.0, 2.0, &mut r).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var / 4.0 - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn exp_mech_frequencies() {
        let (eps, sens) = (0.5, 1.0);
        let scores = [0.0, 2.0_f64.ln() * 2.0 * sens / eps];
        let mut r = Rng::from_seed(3);
        let n = 100_000;
        let ones = (0..n).filter(|_| exp_mech(&scores, eps, sens, &mut r).unwrap() == 1).count();
        let p = ones as f64 / n as f64;
        assert!((p - 2.0 / 3.0).abs() < 0.02, "p {p}");
        assert_eq!(exp_mech::<f64>(&[], 1.0, 1.0, &mut r), Err(MechError::EmptyScores));
    }

    #[test]
    fn exp_mech_uniform_when_scores_equal() {
        let mut r = Rng::from_seed(11);
        let k = 4;
        let n = 10_000;
        let mut counts = vec![0usize; k];
        for _ in 0..n {
            counts[exp_mech(&[1.0; 4], 1.0, 1.0, &mut r).unwrap()] += 1;
        }
        let expected = n as f64 / k as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 0.999 quantile of chi-square with 3 degrees of freedom
        assert!(chi2 < 16.27, "chi2 {chi2}");
        let p = exp_mech_probs(&[0.0, 5.0], 1e-9, 1.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn f32_instantiation() {
        let s: f32 = gauss_sigma(1.0f32, 1.0, 1e-5).unwrap();
        assert!((s - 4.8448).abs() < 1e-3);
    }
}
