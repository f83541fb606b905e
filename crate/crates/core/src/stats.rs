//! Seedable sampling and steady-state statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_BATCHES: usize = 30;

/// Random stream identified by `(seed, stream_id)`.
///
/// Streams come from the ChaCha8 stream counter, so each replication gets
/// its own sequence no matter which thread runs it or in what order.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

const LN_FACT_TABLE: [f64; 10] = [
    0.0,
    0.0,
    std::f64::consts::LN_2,
    1.791_759_469_228_055,
    3.178_053_830_347_146,
    4.787_491_742_782_046,
    6.579_251_212_010_101,
    8.525_161_361_065_415,
    10.604_602_902_745_25,
    12.801_827_480_081_469,
];

/// `ln k!`, exact table below 10 and Stirling series above.
pub fn ln_factorial(k: u64) -> f64 {
    if let Some(&v) = LN_FACT_TABLE.get(k as usize) {
        return v;
    }
    let x = (k + 1) as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Poisson draw: sequential inversion for `rate < 10`, Hörmann's PTRS
/// transformed rejection above.
pub fn poisson_sample(rng: &mut RngHandle, rate: f64) -> Result<u64> {
    if rate < 0.0 || rate.is_nan() {
        return Err(Error::NegativeRate(rate));
    }
    if !rate.is_finite() {
        return Err(invalid("rate", "must be finite"));
    }
    if rate == 0.0 {
        return Ok(0);
    }
    if rate < 10.0 {
        Ok(poisson_inversion(rng, rate))
    } else {
        Ok(poisson_ptrs(rng, rate))
    }
}

fn poisson_inversion(rng: &mut RngHandle, rate: f64) -> u64 {
    let u = rng.uniform();
    let mut p = (-rate).exp();
    let mut cdf = p;
    let mut k = 0u64;
    // the cdf can stall just short of 1 in floating point
    while u > cdf && k < 1000 {
        k += 1;
        p *= rate / k as f64;
        cdf += p;
    }
    k
}

fn poisson_ptrs(rng: &mut RngHandle, rate: f64) -> u64 {
    let smu = rate.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let ln_rate = rate.ln();
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        if lhs <= -rate + k * ln_rate - ln_factorial(k as u64) {
            return k as u64;
        }
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchStats {
    pub n_batches: usize,
    #[serde(skip_serializing)]
    pub batch_means: Vec<f64>,
    pub overall_mean: f64,
    pub ci_halfwidth: f64,
}

impl BatchStats {
    /// Grand mean and normal-approximation 95% half-width of a set of batch
    /// means. The result does not depend on the order of `batch_means`.
    pub fn from_batch_means(mut batch_means: Vec<f64>) -> Self {
        let k = batch_means.len();
        batch_means.sort_by(f64::total_cmp);
        let mean = batch_means.iter().copied().collect::<CompensatedSum>().value() / k as f64;
        let ci_halfwidth = if k > 1 {
            let ss = batch_means
                .iter()
                .map(|b| (b - mean).powi(2))
                .collect::<CompensatedSum>()
                .value();
            Z95 * (ss / (k - 1) as f64).sqrt() / (k as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n_batches: k,
            batch_means,
            overall_mean: mean,
            ci_halfwidth,
        }
    }

    /// Pools the batches of two independent estimates.
    pub fn merge(&self, other: &BatchStats) -> BatchStats {
        let mut all = self.batch_means.clone();
        all.extend_from_slice(&other.batch_means);
        Self::from_batch_means(all)
    }

    pub fn lower(&self) -> f64 {
        self.overall_mean - self.ci_halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.overall_mean + self.ci_halfwidth
    }

    pub fn overlaps(&self, other: &BatchStats) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

/// Splits `series` into `n_batches` equal batches (the remainder at the end
/// is dropped) and returns the batch-means estimate.
pub fn batch_ci(series: &[f64], n_batches: usize) -> Result<BatchStats> {
    if n_batches == 0 || series.len() < 2 * n_batches {
        return Err(Error::TooShort {
            len: series.len(),
            batches: n_batches,
        });
    }
    let size = series.len() / n_batches;
    let means = series
        .chunks_exact(size)
        .take(n_batches)
        .map(|c| c.iter().copied().collect::<CompensatedSum>().value() / size as f64)
        .collect();
    Ok(BatchStats::from_batch_means(means))
}

/// Streaming batch means over a run of known length.
///
/// Each observation is a `(numerator, denominator)` pair and a batch reports
/// the ratio of its sums, so plain averages use a denominator of 1 and
/// per-customer averages weight by the customer mass.
#[derive(Debug, Clone)]
pub struct BatchAccumulator {
    batch_len: u64,
    n_batches: usize,
    seen: u64,
    num: CompensatedSum,
    den: CompensatedSum,
    means: Vec<f64>,
}

impl BatchAccumulator {
    pub fn new(total: u64, n_batches: usize) -> Result<Self> {
        if n_batches == 0 || total < 2 * n_batches as u64 {
            return Err(Error::TooShort {
                len: total as usize,
                batches: n_batches,
            });
        }
        Ok(Self {
            batch_len: total / n_batches as u64,
            n_batches,
            seen: 0,
            num: CompensatedSum::default(),
            den: CompensatedSum::default(),
            means: Vec::with_capacity(n_batches),
        })
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.push_ratio(x, 1.0);
    }

    #[inline]
    pub fn push_ratio(&mut self, num: f64, den: f64) {
        if self.means.len() == self.n_batches {
            return;
        }
        self.num.add(num);
        self.den.add(den);
        self.seen += 1;
        if self.seen == self.batch_len {
            let d = self.den.value();
            self.means.push(if d > 0.0 { self.num.value() / d } else { 0.0 });
            self.num = CompensatedSum::default();
            self.den = CompensatedSum::default();
            self.seen = 0;
        }
    }

    pub fn finish(self) -> BatchStats {
        BatchStats::from_batch_means(self.means)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(draws: &[u64]) -> (f64, f64) {
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<u64>() as f64 / n;
        let var = draws.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_rate_is_zero() {
        let mut rng = RngHandle::new(1, 0);
        assert!((0..1000).all(|_| poisson_sample(&mut rng, 0.0).unwrap() == 0));
    }

    #[test]
    fn negative_rate_rejected() {
        let mut rng = RngHandle::new(1, 0);
        assert_eq!(poisson_sample(&mut rng, -0.5), Err(Error::NegativeRate(-0.5)));
    }

    #[test]
    fn unit_rate_moments() {
        let mut rng = RngHandle::new(42, 0);
        let draws: Vec<u64> = (0..1_000_000).map(|_| poisson_sample(&mut rng, 1.0).unwrap()).collect();
        let (mean, var) = moments(&draws);
        assert!((0.997..=1.003).contains(&mean), "mean {mean}");
        assert!(var >= 0.99 * mean && var <= 1.01 * mean, "var {var}");
    }

    #[test]
    fn ptrs_moments_and_pmf() {
        for rate in [10.0, 25.0, 400.0] {
            let mut rng = RngHandle::new(7, 3);
            let n = 400_000;
            let draws: Vec<u64> = (0..n).map(|_| poisson_sample(&mut rng, rate).unwrap()).collect();
            let (mean, var) = moments(&draws);
            let se = (rate / n as f64).sqrt();
            assert!((mean - rate).abs() < 4.0 * se, "rate {rate} mean {mean}");
            assert!((var / rate - 1.0).abs() < 0.02, "rate {rate} var {var}");
            // frequency of the mode against the pmf
            let mode = rate.floor() as u64;
            let freq = draws.iter().filter(|&&k| k == mode).count() as f64 / n as f64;
            let pmf = (-rate + mode as f64 * rate.ln() - ln_factorial(mode)).exp();
            let sd = (pmf * (1.0 - pmf) / n as f64).sqrt();
            assert!((freq - pmf).abs() < 5.0 * sd, "rate {rate}: {freq} vs {pmf}");
        }
    }

    #[test]
    fn ln_factorial_matches_direct_sum() {
        for k in 0..200u64 {
            let direct: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
            assert!((ln_factorial(k) - direct).abs() < 1e-10 * direct.max(1.0), "k={k}");
        }
    }

    #[test]
    fn same_stream_same_draws() {
        let mut a = RngHandle::new(9, 4);
        let mut b = RngHandle::new(9, 4);
        for _ in 0..1000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let n = 100_000;
        let mut a = RngHandle::new(5, 0);
        let mut b = RngHandle::new(5, 1);
        let xs: Vec<f64> = (0..n).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.uniform()).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
        assert_ne!(xs[..10], ys[..10]);
    }

    #[test]
    fn constant_series_has_zero_ci() {
        let s = batch_ci(&[2.5; 600], 30).unwrap();
        assert_eq!(s.ci_halfwidth, 0.0);
        assert_eq!(s.overall_mean, 2.5);
    }

    #[test]
    fn uniform_mean_covered() {
        let mut rng = RngHandle::new(11, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| rng.uniform()).collect();
        let s = batch_ci(&xs, 30).unwrap();
        assert!((s.overall_mean - 0.5).abs() <= s.ci_halfwidth);
        assert!(s.ci_halfwidth > 0.0 && s.ci_halfwidth < 0.002);
    }

    #[test]
    fn alternating_series() {
        let xs: Vec<f64> = (0..6000).map(|i| (i % 2) as f64).collect();
        let s = batch_ci(&xs, 30).unwrap();
        assert_eq!(s.overall_mean, 0.5);
        assert!(s.ci_halfwidth < 1e-12);
    }

    #[test]
    fn too_short() {
        assert_eq!(
            batch_ci(&[1.0; 59], 30).unwrap_err(),
            Error::TooShort { len: 59, batches: 30 }
        );
    }

    #[test]
    fn streaming_matches_batch_ci() {
        let xs: Vec<f64> = (0..3000).map(|i| ((i * 37) % 101) as f64).collect();
        let mut acc = BatchAccumulator::new(3000, 30).unwrap();
        xs.iter().for_each(|&x| acc.push(x));
        let a = acc.finish();
        let b = batch_ci(&xs, 30).unwrap();
        assert_eq!(a.batch_means.len(), 30);
        assert!((a.overall_mean - b.overall_mean).abs() < 1e-12);
        assert!((a.ci_halfwidth - b.ci_halfwidth).abs() < 1e-12);
    }

    #[test]
    fn merge_is_order_independent() {
        let a = BatchStats::from_batch_means(vec![1.0, 2.0, 3.0]);
        let b = BatchStats::from_batch_means(vec![0.1, 7.0]);
        let c = BatchStats::from_batch_means(vec![4.4]);
        let left = a.merge(&b).merge(&c);
        let right = c.merge(&a.merge(&b));
        assert_eq!(left, right);
        assert_eq!(a.merge(&b), b.merge(&a));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
