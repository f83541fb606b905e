//! Stationary analysis of the controlled birth-death chain.
//!
//! State `i` counts waiting servers. The chain moves up at rate `λ_{i}` and
//! down at rate `μ_i`; only the ratios `ρ_i = λ_{i-1} / μ_i` matter for the
//! stationary law, which is `π_i = h_i / Σ_j h_j` with `h_0 = 1` and
//! `h_i = ρ_1 ⋯ ρ_i`.
//!
//! A [`RhoProfile`] is either a finite chain (states `0..=n`) or an explicit
//! prefix followed by a constant tail ratio `r < 1`, whose geometric tail is
//! summed in closed form.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Default truncation tolerance for materialized tails.
pub const DEFAULT_TOL: f64 = 1e-12;

const BOUND_SLACK: f64 = 1e-12;

/// Ratios `ρ_i` of a birth-death chain with box constraints `[low, high]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoProfile {
    rho: Vec<f64>,
    tail: Option<f64>,
    low: f64,
    high: f64,
}

impl RhoProfile {
    /// Builds a profile; `rho[0]` is `ρ_1`.
    pub fn new(rho: Vec<f64>, tail: Option<f64>, bounds: (f64, f64)) -> Result<Self> {
        let (low, high) = bounds;
        if !(low > 0.0 && low <= high && high.is_finite()) {
            return Err(invalid("bounds", format!("need 0 < low <= high, got ({low}, {high})")));
        }
        if let Some(r) = tail {
            if !(r > 0.0) {
                return Err(invalid("tail_rho", format!("must be positive, got {r}")));
            }
            if r >= 1.0 {
                return Err(Error::NonRecurrent(r));
            }
        }
        let in_box = |v: f64| v >= low * (1.0 - BOUND_SLACK) && v <= high * (1.0 + BOUND_SLACK);
        for (k, &v) in rho.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) || !in_box(v) {
                return Err(Error::BoundViolation {
                    index: k + 1,
                    value: v,
                    low,
                    high,
                });
            }
        }
        if let Some(r) = tail {
            if !in_box(r) {
                return Err(Error::BoundViolation {
                    index: rho.len() + 1,
                    value: r,
                    low,
                    high,
                });
            }
        }
        Ok(Self { rho, tail, low, high })
    }

    /// A finite chain on states `0..=rho.len()`, boxed by its own extremes.
    pub fn finite(rho: Vec<f64>) -> Result<Self> {
        let (low, high) = extremes(rho.iter().copied());
        Self::new(rho, None, (low, high))
    }

    /// An explicit prefix followed by the constant ratio `tail`.
    pub fn with_tail(rho: Vec<f64>, tail: f64) -> Result<Self> {
        let (low, high) = extremes(rho.iter().copied().chain(std::iter::once(tail)));
        Self::new(rho, Some(tail), (low, high))
    }

    /// Constant ratio `r` everywhere (an M/M/1-type chain).
    pub fn geometric(r: f64) -> Result<Self> {
        Self::with_tail(Vec::new(), r)
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn tail(&self) -> Option<f64> {
        self.tail
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.low, self.high)
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    /// `ρ_i` for `i >= 1`; `None` beyond the last state of a finite chain.
    pub fn get(&self, i: usize) -> Option<f64> {
        if i == 0 {
            return None;
        }
        self.rho.get(i - 1).copied().or(self.tail)
    }

    pub fn is_finite_chain(&self) -> bool {
        self.tail.is_none()
    }

    /// Copy with the explicit ratio `ρ_i` replaced, keeping the same box.
    pub fn with_rho_at(&self, i: usize, value: f64) -> Result<Self> {
        if i == 0 || i > self.rho.len() {
            return Err(Error::InvalidIndex(i));
        }
        let mut rho = self.rho.clone();
        rho[i - 1] = value;
        Self::new(rho, self.tail, (self.low, self.high))
    }
}

fn extremes(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        // empty finite chain: single state, any box works
        (1.0, 1.0)
    } else {
        (lo, hi)
    }
}

/// Upper bound `𝒞` on the stationary mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCap(f64);

impl MomentCap {
    pub fn new(cap: f64) -> Result<Self> {
        if cap > 0.0 && cap.is_finite() {
            Ok(Self(cap))
        } else {
            Err(invalid("cap", format!("must be positive, got {cap}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Whether some profile with ratios no smaller than `low` can meet the cap.
    pub fn is_feasible_for(self, low: f64) -> bool {
        low < 1.0 && low / (1.0 - low) <= self.0
    }
}

/// Stationary law over explicit states `0..=k`, optionally followed by a
/// geometric tail `π_{k+j} = π_k r^j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDist {
    pi: Vec<f64>,
    tail_ratio: Option<f64>,
    tail_mass_bound: f64,
    z: f64,
}

impl StationaryDist {
    /// Explicit probabilities `π_0..=π_k`.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn pi0(&self) -> f64 {
        self.pi[0]
    }

    /// Normalization constant `Σ h_j = 1 / π_0`.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn tail_ratio(&self) -> Option<f64> {
        self.tail_ratio
    }

    /// Upper bound on probability mass not represented (truncation loss).
    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    /// Index of the last explicit state.
    pub fn last_explicit(&self) -> usize {
        self.pi.len() - 1
    }

    /// `π_i` for any state, including the closed-form tail.
    pub fn prob(&self, i: usize) -> f64 {
        let k = self.last_explicit();
        if i <= k {
            return self.pi[i];
        }
        match self.tail_ratio {
            Some(r) => self.pi[k] * r.powi((i - k) as i32),
            None => 0.0,
        }
    }

    /// `Σ_{i >= j} π_i`.
    pub fn mass_from(&self, j: usize) -> f64 {
        let k = self.last_explicit();
        match self.tail_ratio {
            Some(r) if j > k => self.prob(j) / (1.0 - r),
            Some(r) => self.pi[j..].iter().sum::<f64>() + self.pi[k] * r / (1.0 - r),
            None if j > k => 0.0,
            None => self.pi[j..].iter().sum(),
        }
    }

    /// `Σ_{i >= j} i π_i`.
    pub fn moment_from(&self, j: usize) -> f64 {
        let k = self.last_explicit();
        let tail_from = |start: usize, p_start: f64, r: f64| {
            let s = start as f64;
            p_start * (s / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)))
        };
        match self.tail_ratio {
            Some(r) if j > k => tail_from(j, self.prob(j), r),
            Some(r) => {
                let explicit: f64 = (j..=k).map(|i| i as f64 * self.pi[i]).sum();
                explicit + tail_from(k + 1, self.pi[k] * r, r)
            }
            None if j > k => 0.0,
            None => (j..=k).map(|i| i as f64 * self.pi[i]).sum(),
        }
    }

    /// Mass beyond the explicit states held by the closed-form tail.
    pub fn tail_mass(&self) -> f64 {
        self.mass_from(self.last_explicit() + 1)
    }

    /// Explicit mass plus closed-form tail mass.
    pub fn total_mass(&self) -> f64 {
        self.mass_from(0)
    }

    /// `E[N] = Σ i π_i`.
    pub fn mean(&self) -> f64 {
        self.moment_from(1)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(invalid("tol", format!("must lie in (0, 1), got {tol}")))
    }
}

/// Unnormalized weights `h_0..=h_k` scaled by `exp(-shift)`.
fn scaled_weights(rho: &[f64]) -> (Vec<f64>, f64) {
    if rho.iter().all(|&r| r <= 1.0) {
        let mut h = Vec::with_capacity(rho.len() + 1);
        h.push(1.0);
        for &r in rho {
            let last = *h.last().unwrap();
            h.push(last * r);
        }
        return (h, 0.0);
    }
    let mut log_h = Vec::with_capacity(rho.len() + 1);
    log_h.push(0.0_f64);
    for &r in rho {
        let last = *log_h.last().unwrap();
        log_h.push(last + r.ln());
    }
    let shift = log_h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (log_h.iter().map(|l| (l - shift).exp()).collect(), shift)
}

/// Stationary distribution of the chain described by `profile`.
///
/// A constant tail is summed in closed form (`tail_mass_bound = 0`); a finite
/// chain is normalized exactly over its states.
pub fn stationary_truncated(profile: &RhoProfile, tol: f64) -> Result<StationaryDist> {
    check_tol(tol)?;
    if let Some(r) = profile.tail {
        if r >= 1.0 {
            return Err(Error::NonRecurrent(r));
        }
    }
    let (h, shift) = scaled_weights(&profile.rho);
    let k = h.len() - 1;
    let explicit: f64 = h.iter().sum();
    let tail = profile.tail.map_or(0.0, |r| h[k] * r / (1.0 - r));
    let z_scaled = explicit + tail;
    let log_z = shift + z_scaled.ln();
    if log_z >= f64::MAX.ln() {
        let state = h
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        return Err(Error::Overflow {
            state,
            log_weight: log_z,
        });
    }
    Ok(StationaryDist {
        pi: h.iter().map(|w| w / z_scaled).collect(),
        tail_ratio: profile.tail,
        tail_mass_bound: 0.0,
        z: log_z.exp(),
    })
}

/// Like [`stationary_truncated`] but expands a geometric tail into explicit
/// states until the remaining mass is below `tol`; that remainder is dropped
/// and reported as `tail_mass_bound`.
pub fn stationary_materialized(profile: &RhoProfile, tol: f64) -> Result<StationaryDist> {
    let closed = stationary_truncated(profile, tol)?;
    let Some(r) = closed.tail_ratio else {
        return Ok(closed);
    };
    let mut pi = closed.pi.clone();
    let mut last = *pi.last().unwrap();
    let mut remaining = last * r / (1.0 - r);
    while remaining >= tol {
        last *= r;
        pi.push(last);
        remaining = last * r / (1.0 - r);
    }
    Ok(StationaryDist {
        pi,
        tail_ratio: None,
        tail_mass_bound: remaining,
        z: closed.z,
    })
}

/// `E[N] = Σ i π_i`, with the geometric tail in closed form.
pub fn mean_occupancy(dist: &StationaryDist) -> f64 {
    dist.mean()
}

/// `f(ρ) = Σ h_j = 1/π_0` and `m(ρ) = Σ (i - 𝒞) h_i`.
///
/// `m` vanishes exactly when the stationary mean sits on the cap. For finite
/// chains the sums run over the finite state space.
pub fn f_and_m(profile: &RhoProfile, cap: MomentCap) -> Result<(f64, f64)> {
    let dist = stationary_truncated(profile, DEFAULT_TOL)?;
    let f = dist.z();
    Ok((f, f * (dist.mean() - cap.value())))
}

/// Forward-difference sensitivities of `π_0` and `E[N]` to `ρ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    pub dpi0: f64,
    pub dmean: f64,
}

/// Perturbs the explicit ratio `ρ_i` by `h` and reports the finite
/// differences. For any recurrent profile `dpi0 < 0` and `dmean > 0`.
pub fn monotonicity_probe(profile: &RhoProfile, i: usize, h: f64) -> Result<Sensitivity> {
    if i == 0 || i > profile.rho.len() {
        return Err(Error::InvalidIndex(i));
    }
    if !(h != 0.0 && h.is_finite()) {
        return Err(invalid("h", "step must be finite and non-zero"));
    }
    let moved = profile.rho[i - 1] + h;
    if moved < profile.low || moved > profile.high {
        return Err(Error::BoundViolation {
            index: i,
            value: moved,
            low: profile.low,
            high: profile.high,
        });
    }
    let base = stationary_truncated(profile, DEFAULT_TOL)?;
    let bumped = stationary_truncated(&profile.with_rho_at(i, moved)?, DEFAULT_TOL)?;
    Ok(Sensitivity {
        dpi0: (bumped.pi0() - base.pi0()) / h,
        dmean: (bumped.mean() - base.mean()) / h,
    })
}
