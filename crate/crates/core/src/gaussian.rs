//! Four-dimensional Gaussian model of `(B^x, B^y, B^z, I^z)` and its moments.

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CouplingSet;
use crate::tables::{double_factorial_odd, CovarianceEntries};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianModel {
    pub cov: CovarianceEntries<f64>,
}

impl GaussianModel {
    pub fn new(sigma2: f64, beta2: f64, alpha2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !(alpha2 > 0.0) || !beta2.is_finite() {
            return Err(Error::InvalidParameter("need sigma2 > 0 and alpha2 > 0".into()));
        }
        // tolerate rounding on the degenerate boundary alpha2 sigma2 = beta2^2
        if beta2 * beta2 > alpha2 * sigma2 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter("covariance is not positive semidefinite".into()));
        }
        Ok(GaussianModel { cov: CovarianceEntries { sigma2, beta2, alpha2 } })
    }

    pub fn from_couplings(c: &CouplingSet) -> Result<Self> {
        let cov = CovarianceEntries::<f64>::new(c);
        GaussianModel::new(cov.sigma2, cov.beta2, cov.alpha2)
    }

    /// `I^z = (beta2/sigma) g3 + sqrt(alpha2 - beta2^2/sigma2) g4` next to `B = sigma (g1, g2, g3)`.
    fn factors(&self) -> (f64, f64, f64) {
        let s = self.cov.sigma2.sqrt();
        let a = self.cov.beta2 / s;
        let b = (self.cov.alpha2 - self.cov.beta2 * self.cov.beta2 / self.cov.sigma2).max(0.0).sqrt();
        (s, a, b)
    }
}

fn odd_double_factorial(m: u32) -> Result<f64> {
    Ok(double_factorial_odd(m)?.to_f64().unwrap_or(f64::INFINITY))
}

/// `<(I^z)^2 |B|^{2m}>`.
pub fn analytic_moment(m: u32, g: &GaussianModel) -> Result<f64> {
    let df = odd_double_factorial(m)?;
    let CovarianceEntries { sigma2, beta2, alpha2 } = g.cov;
    let lead = df * sigma2.powi(m as i32) * alpha2;
    let sub = if m == 0 { 0.0 } else { 2.0 * m as f64 / 3.0 * df * sigma2.powi(m as i32 - 1) * beta2 * beta2 };
    Ok(lead + sub)
}

/// `int d^3B |B|^{2m} exp(-B^2/(2 sigma^2))`, optionally weighted by `cos^2 theta`.
pub fn wick_radial_integral(m: u32, sigma: f64, with_cos2: bool) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let norm = (2.0 * std::f64::consts::PI).powf(1.5);
    Ok(if with_cos2 {
        norm * odd_double_factorial(m + 1)? / 3.0 * sigma.powi(2 * m as i32 + 5)
    } else {
        norm * odd_double_factorial(m)? * sigma.powi(2 * m as i32 + 3)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: u64,
}

/// Shards per estimate; fixed so results do not depend on the thread count.
pub const SHARDS: u64 = 64;

fn shard_seed(seed: u64, shard: u64) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(shard + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample mean of `(I^z)^2 |B|^{2m}` with its standard error.
pub fn monte_carlo_moment(m: u32, g: &GaussianModel, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!("need at least 10^4 samples, got {samples}")));
    }
    let (s, a, b) = g.factors();
    let per = samples / SHARDS;
    let extra = samples % SHARDS;
    let sums: Vec<(f64, f64, u64)> = (0..SHARDS)
        .into_par_iter()
        .map(|k| {
            let count = per + u64::from(k < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, k));
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let g1: f64 = StandardNormal.sample(&mut rng);
                let g2: f64 = StandardNormal.sample(&mut rng);
                let g3: f64 = StandardNormal.sample(&mut rng);
                let g4: f64 = StandardNormal.sample(&mut rng);
                let b2 = s * s * (g1 * g1 + g2 * g2 + g3 * g3);
                let iz = a * g3 + b * g4;
                let v = iz * iz * b2.powi(m as i32);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2, count)
        })
        .collect();
    let (t1, t2) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let n = samples as f64;
    let mean = t1 / n;
    let var = ((t2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate { mean, standard_error: (var / n).sqrt(), samples })
}
