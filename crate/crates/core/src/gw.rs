//! Offspring distributions and size-conditioned Galton-Watson trees.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halin::Weights;
use crate::numerics::{abs_gamma, hurwitz_zeta, power_gap, zeta};
use crate::plane_tree::{enumerate_trees, PlaneTree};

/// First index of the exact power tail of [`OffspringDistribution::stable`].
pub const STABLE_HEAD: usize = 1024;
/// Head length used when a weight sequence is critical at its radius of
/// convergence and the tail is not sampled exactly.
pub const TRUNCATED_HEAD: usize = 1 << 20;

/// Offspring law: an explicit head `μ(0..K)` and optionally the exact tail
/// `μ(k) = c k^{-1-α}` for `k ≥ K`.
#[derive(Clone, Debug, Serialize)]
pub struct OffspringDistribution {
    head: Vec<f64>,
    tail: Option<PowerTail>,
    mean: f64,
    /// Tail index when `μ([j,∞))` is regularly varying with index `-α`.
    alpha: Option<f64>,
    /// `c` with `μ(k) ~ c k^{-1-α}`.
    tail_constant: Option<f64>,
    /// `μ(k) = c k^{-1-α}` for every `k ≥ 1`.
    pure_power: bool,
    period: usize,
    /// Mass beyond the head that is neither stored nor sampled.
    truncated_mass: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
struct PowerTail {
    c: f64,
    alpha: f64,
    start: usize,
    mass: f64,
}

/// Critical law `μ(k) = a b^k (k+1) w(k+4)` induced by face weights.
#[derive(Clone, Debug, Serialize)]
pub struct WeightedMu {
    pub mu: OffspringDistribution,
    pub a: f64,
    pub b: f64,
}

impl OffspringDistribution {
    /// Law with finite support given by `pmf`.
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution("negative or non-finite mass".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        Self::finish(pmf, None, None, None, false, 0.0)
    }

    fn finish(
        head: Vec<f64>,
        tail: Option<PowerTail>,
        alpha: Option<f64>,
        tail_constant: Option<f64>,
        pure_power: bool,
        truncated_mass: f64,
    ) -> Result<Self> {
        if head.get(1).copied().unwrap_or(0.0) >= 1.0 {
            return Err(Error::InvalidDistribution("μ(1) = 1".into()));
        }
        let mut mean: f64 = head.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if let Some(t) = tail {
            mean += t.c * hurwitz_zeta(t.alpha, t.start as f64);
        }
        let period = if tail.is_some() {
            1
        } else {
            head.iter()
                .enumerate()
                .skip(1)
                .filter(|(_, &p)| p > 0.0)
                .fold(0, |g, (k, _)| gcd(g, k))
        };
        Ok(OffspringDistribution {
            head,
            tail,
            mean,
            alpha,
            tail_constant,
            pure_power,
            period,
            truncated_mass,
        })
    }

    /// `μ(0) = 1 − ζ(1+α)/ζ(α)`, `μ(k) = k^{-1-α}/ζ(α)` for `k ≥ 1`.
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidDistribution(format!("α = {alpha} outside (1, 2)")));
        }
        let c = 1.0 / zeta(alpha);
        let mut head = vec![0.0; STABLE_HEAD];
        head[0] = 1.0 - c * zeta(1.0 + alpha);
        for (k, p) in head.iter_mut().enumerate().skip(1) {
            *p = c * (k as f64).powf(-1.0 - alpha);
        }
        let tail = PowerTail {
            c,
            alpha,
            start: STABLE_HEAD,
            mass: c * hurwitz_zeta(1.0 + alpha, STABLE_HEAD as f64),
        };
        Self::finish(head, Some(tail), Some(alpha), Some(c), true, 0.0)
    }

    /// Solves `Σ μ = 1`, `Σ k μ(k) = 1` for `μ(k) = a b^k (k+1) w(k+4)` by
    /// bisection on `b`; the mean is increasing in `b`.
    pub fn from_weights(w: &Weights) -> Result<WeightedMu> {
        w.validate()?;
        if w.value(4) <= 0.0 {
            return Err(Error::InvalidDistribution("w(4) = 0 gives μ(0) = 0".into()));
        }
        let series = WeightSeries { w };
        let radius = match w {
            Weights::Table(_) => f64::INFINITY,
            _ => 1.0,
        };
        if let Some(end) = w.support_end() {
            if end < 6 {
                return Err(Error::NoCriticalPoint(format!(
                    "offspring support within {{0, 1}} (largest face degree {end})"
                )));
            }
        }
        let mut lo = 0.0;
        let mut hi;
        if radius.is_infinite() {
            hi = 1.0;
            while series.mean(hi) < 1.0 {
                lo = hi;
                hi *= 2.0;
                if hi > 1e150 {
                    return Err(Error::NoCriticalPoint("mean stays below 1".into()));
                }
            }
        } else {
            let at_radius = series.mean_at_one();
            match at_radius {
                Some(m) if m < 1.0 => {
                    return Err(Error::NoCriticalPoint(format!(
                        "mean at the radius of convergence is {m:.6}"
                    )))
                }
                Some(m) if (m - 1.0).abs() < 1e-12 => {
                    return Self::critical_at_radius(w);
                }
                _ => hi = 1.0,
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if series.mean(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 * hi.max(1.0) {
                break;
            }
        }
        let b = 0.5 * (lo + hi);
        let (g, _) = series.sums(b);
        let a = 1.0 / g;
        let mut head = Vec::new();
        let mut k = 0;
        loop {
            let p = a * b.powi(k as i32) * (k as f64 + 1.0) * w.value(k + 4);
            head.push(p);
            k += 1;
            let remaining_possible = match w.support_end() {
                Some(end) => k + 4 <= end,
                None => !(p < 1e-18 && k > 8 && b.powi(k as i32) * (k as f64 + 1.0) < 1e-18),
            };
            if !remaining_possible || k >= TRUNCATED_HEAD {
                break;
            }
        }
        let total: f64 = head.iter().sum();
        let mu = Self::finish(head, None, None, None, false, (1.0 - total).max(0.0))?;
        Ok(WeightedMu { mu, a, b })
    }

    /// `b = 1` with power-law weights `w(k) = k^{-s}`: `μ(k) = a (k+1)(k+4)^{-s}`,
    /// a stable tail with `α = s − 2`. The head is stored up to
    /// [`TRUNCATED_HEAD`]; the rest is reported as truncated mass.
    fn critical_at_radius(w: &Weights) -> Result<WeightedMu> {
        let Weights::PowerLaw(s) = *w else {
            return Err(Error::NoCriticalPoint("unsupported weight family".into()));
        };
        let g = hurwitz_zeta(s - 1.0, 4.0) - 3.0 * hurwitz_zeta(s, 4.0);
        let a = 1.0 / g;
        let head: Vec<f64> = (0..TRUNCATED_HEAD)
            .map(|k| a * (k as f64 + 1.0) * (k as f64 + 4.0).powf(-s))
            .collect();
        let start = TRUNCATED_HEAD as f64 + 4.0;
        let truncated = a * (hurwitz_zeta(s - 1.0, start) - 3.0 * hurwitz_zeta(s, start));
        let alpha = s - 2.0;
        let mu = Self::finish(head, None, Some(alpha), Some(a), false, truncated)?;
        Ok(WeightedMu { mu, a, b: 1.0 })
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k < self.head.len() {
            return self.head[k];
        }
        match self.tail {
            Some(t) if k >= t.start => t.c * (k as f64).powf(-1.0 - t.alpha),
            _ => 0.0,
        }
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn total_mass(&self) -> f64 {
        self.head.iter().sum::<f64>() + self.tail.map_or(0.0, |t| t.mass) + self.truncated_mass
    }

    pub fn is_critical(&self) -> bool {
        (self.mean - 1.0).abs() < 1e-10
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn tail_constant(&self) -> Option<f64> {
        self.tail_constant
    }

    /// gcd of the positive part of the support; 0 when μ = δ₀.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period == 1
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// `b_n = (n / (c |Γ(−α)|))^{1/α}`; only for pure power laws.
    pub fn b_n(&self, n: usize) -> Result<f64> {
        match (self.pure_power, self.alpha, self.tail_constant) {
            (true, Some(alpha), Some(c)) => Ok(scaling_constant(alpha, c, n)),
            _ => Err(Error::NotPowerLaw),
        }
    }

    pub fn sampler(&self) -> Result<OffspringSampler> {
        OffspringSampler::new(self)
    }

    /// Whether `n` is a possible total progeny.
    pub fn supports_size(&self, n: usize) -> bool {
        if n == 0 || self.pmf(0) <= 0.0 {
            return false;
        }
        match self.period {
            0 => n == 1,
            d => (n - 1) % d == 0,
        }
    }
}

/// `b_n = (n / (c |Γ(−α)|))^{1/α}`.
pub fn scaling_constant(alpha: f64, c: f64, n: usize) -> f64 {
    (n as f64 / (c * abs_gamma(-alpha))).powf(1.0 / alpha)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

struct WeightSeries<'a> {
    w: &'a Weights,
}

impl WeightSeries<'_> {
    /// `(Σ b^k (k+1) w(k+4), Σ k b^k (k+1) w(k+4))`.
    fn sums(&self, b: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut g1 = 0.0;
        let mut bk = 1.0;
        let end = self.w.support_end().map(|e| e.saturating_sub(4));
        for k in 0..200_000_000usize {
            if let Some(e) = end {
                if k > e {
                    break;
                }
            }
            let t = bk * (k as f64 + 1.0) * self.w.value(k + 4);
            g += t;
            g1 += k as f64 * t;
            bk *= b;
            if end.is_none() && k > 16 && bk * (k as f64 + 1.0) * (k as f64 + 1.0) < 1e-18 * g {
                break;
            }
        }
        (g, g1)
    }

    fn mean(&self, b: f64) -> f64 {
        let (g, g1) = self.sums(b);
        g1 / g
    }

    /// Mean at `b = 1`, `None` when the series diverge there.
    fn mean_at_one(&self) -> Option<f64> {
        match *self.w {
            Weights::PowerLaw(s) if s > 3.0 => {
                let z = |x: f64| hurwitz_zeta(x, 4.0);
                let g = z(s - 1.0) - 3.0 * z(s);
                let g1 = z(s - 2.0) - 7.0 * z(s - 1.0) + 12.0 * z(s);
                Some(g1 / g)
            }
            _ => None,
        }
    }
}

/// Draws from an offspring law: alias table on the head, exact rejection
/// sampling from a discretised Pareto law on the power tail.
#[derive(Clone, Debug)]
pub struct OffspringSampler {
    alias: WeightedAliasIndex<f64>,
    head_len: usize,
    tail: Option<PowerTail>,
}

impl OffspringSampler {
    fn new(mu: &OffspringDistribution) -> Result<Self> {
        let mut weights = mu.head.clone();
        if let Some(t) = mu.tail {
            weights.push(t.mass);
        }
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::InvalidDistribution(format!("alias table: {e}")))?;
        Ok(OffspringSampler {
            alias,
            head_len: mu.head.len(),
            tail: mu.tail,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = self.alias.sample(rng);
        if i < self.head_len {
            return i;
        }
        let t = self.tail.expect("tail bucket only exists with a tail");
        sample_power_tail(t.alpha, t.start, rng)
    }
}

/// Exact draw from `P(j) ∝ j^{-1-α}`, `j ≥ K`: propose `⌊K U^{-1/α}⌋`, whose
/// law is `K^α (j^{-α} − (j+1)^{-α})`, and accept with probability
/// `α r(j) / (1 + 1/K)^{1+α}` where `r(j) = j^{-1-α} / (j^{-α} − (j+1)^{-α})`.
fn sample_power_tail<R: Rng + ?Sized>(alpha: f64, start: usize, rng: &mut R) -> usize {
    let k = start as f64;
    let bound = (1.0 + 1.0 / k).powf(1.0 + alpha) / alpha;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
        let x = k * u.powf(-1.0 / alpha);
        if !x.is_finite() || x >= 9.0e18 {
            continue;
        }
        let j = x.floor();
        let r = j.powf(-1.0 - alpha) / power_gap(j, alpha);
        if rng.random::<f64>() * bound < r {
            return j as usize;
        }
    }
}

/// How to condition the increment sequence on its sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Conditioning {
    /// Exact recursive halving using precomputed laws of partial sums.
    Split,
    /// Resample all increments until their sum is right.
    Rejection,
}

impl std::str::FromStr for Conditioning {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Conditioning::Split),
            "rejection" => Ok(Conditioning::Rejection),
            _ => Err(Error::Parse(format!("unknown conditioning method {s:?}"))),
        }
    }
}

/// Sampler of `GW_μ( · | ζ = n)`.
///
/// Increments `(k_1, …, k_n)` are i.i.d. `μ` conditioned on `Σ k_i = n − 1`;
/// the cycle lemma turns them into a Łukasiewicz word by one rotation.
///
/// With [`Conditioning::Split`], the laws `P_m` of sums of `m` increments
/// (truncated at `n − 1`) are precomputed for the sizes met when halving `n`
/// repeatedly. A block of `m` increments with sum `s` splits its sum as
/// `j, s − j` with probability `∝ P_{⌊m/2⌋}(j) P_{⌈m/2⌉}(s − j)`.
pub struct ConditionedSampler {
    n: usize,
    method: Conditioning,
    offspring: OffspringSampler,
    sums: BTreeMap<usize, Vec<f64>>,
    rejections: std::sync::atomic::AtomicU64,
}

/// Relative size below which convolved masses are treated as zero.
const CONVOLUTION_FLOOR: f64 = 1e-13;

impl ConditionedSampler {
    pub fn new(mu: &OffspringDistribution, n: usize, method: Conditioning) -> Result<Self> {
        let period = mu.period().max(1);
        if !mu.supports_size(n) {
            return Err(Error::OutOfSupport { n, period });
        }
        let offspring = mu.sampler()?;
        let mut sums: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        if method == Conditioning::Split {
            let base: Vec<f64> = (0..n).map(|k| mu.pmf(k)).collect();
            let mut needed = std::collections::BTreeSet::new();
            let mut frontier = vec![n];
            while let Some(m) = frontier.pop() {
                if m >= 1 && needed.insert(m) && m > 1 {
                    frontier.push(m / 2);
                    frontier.push(m - m / 2);
                }
            }
            let mut planner = FftPlanner::new();
            for m in needed {
                let law = if m == 1 {
                    base.clone()
                } else {
                    let a = &sums[&(m / 2)];
                    let b = &sums[&(m - m / 2)];
                    convolve(a, b, n, period, &mut planner)
                };
                sums.insert(m, law);
            }
            if sums[&n][n - 1] <= 0.0 {
                return Err(Error::OutOfSupport { n, period });
            }
        }
        Ok(ConditionedSampler {
            n,
            method,
            offspring,
            sums,
            rejections: 0.into(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Number of rejected increment vectors so far.
    pub fn rejections(&self) -> u64 {
        self.rejections.load(std::sync::atomic::Ordering::Relaxed)
    }

    /// Increments with sum `n − 1`, before rotation.
    pub fn increments<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match self.method {
            Conditioning::Split => self.split_increments(rng),
            Conditioning::Rejection => loop {
                let ks: Vec<usize> = (0..self.n).map(|_| self.offspring.sample(rng)).collect();
                if ks.iter().sum::<usize>() == self.n - 1 {
                    return ks;
                }
                self.rejections
                    .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            },
        }
    }

    fn split_increments<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = vec![0; self.n];
        let mut stack = vec![(0usize, self.n, self.n - 1)];
        let mut weights = Vec::with_capacity(self.n);
        while let Some((offset, m, s)) = stack.pop() {
            if m == 1 {
                out[offset] = s;
                continue;
            }
            let (ml, mr) = (m / 2, m - m / 2);
            let (left, right) = (&self.sums[&ml], &self.sums[&mr]);
            weights.clear();
            let mut total = 0.0;
            for j in 0..=s {
                let p = left[j] * right[s - j];
                total += p;
                weights.push(total);
            }
            let target = rng.random::<f64>() * total;
            let j = weights.partition_point(|&c| c <= target).min(s);
            stack.push((offset, ml, j));
            stack.push((offset + ml, mr, s - j));
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PlaneTree {
        let ks = self.increments(rng);
        let code = cycle_lemma_rotation(ks);
        PlaneTree::from_code(code).expect("cycle lemma yields a Łukasiewicz word")
    }
}

/// Rotates a sequence with `Σ (k_i − 1) = −1` so that it starts right after
/// the first index where the partial sums reach their minimum.
pub fn cycle_lemma_rotation(mut ks: Vec<usize>) -> Vec<usize> {
    let mut sum = 0i64;
    let mut best = (0i64, 0usize);
    for (i, &k) in ks.iter().enumerate() {
        sum += k as i64 - 1;
        if sum < best.0 {
            best = (sum, i + 1);
        }
    }
    let len = ks.len();
    ks.rotate_left(best.1 % len);
    ks
}

/// Law of `X + Y` truncated to `[0, len)`, zeroing round-off below
/// [`CONVOLUTION_FLOOR`] times the peak and off the lattice `period ℕ`.
fn convolve(a: &[f64], b: &[f64], len: usize, period: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut out = if len <= 512 {
        let mut out = vec![0.0; len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(len - i) {
                out[i + j] += x * y;
            }
        }
        out
    } else {
        let size = (2 * len).next_power_of_two();
        let fft = planner.plan_fft_forward(size);
        let ifft = planner.plan_fft_inverse(size);
        let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fa.resize(size, Complex::new(0.0, 0.0));
        let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fb.resize(size, Complex::new(0.0, 0.0));
        fft.process(&mut fa);
        fft.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        ifft.process(&mut fa);
        let scale = 1.0 / size as f64;
        fa[..len].iter().map(|z| z.re * scale).collect()
    };
    let peak = out.iter().cloned().fold(0.0, f64::max);
    for (s, x) in out.iter_mut().enumerate() {
        if *x < CONVOLUTION_FLOOR * peak || s % period != 0 {
            *x = 0.0;
        }
    }
    out
}

/// One tree from `GW_μ( · | ζ = n)` with a fresh sampler.
pub fn sample_conditioned(mu: &OffspringDistribution, n: usize, seed: u64) -> Result<PlaneTree> {
    let sampler = ConditionedSampler::new(mu, n, Conditioning::Split)?;
    Ok(sampler.sample(&mut crate::seeded_rng(seed)))
}

/// Exact `GW_μ(τ = T | ζ = n)` for every tree with `n` vertices.
pub fn conditional_masses(mu: &OffspringDistribution, n: usize) -> Result<Vec<(PlaneTree, f64)>> {
    let trees = enumerate_trees(n)?;
    let raw: Vec<f64> = trees
        .iter()
        .map(|t| t.code().iter().map(|&k| mu.pmf(k)).product())
        .collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::OutOfSupport { n, period: mu.period().max(1) });
    }
    Ok(trees.into_iter().zip(raw).map(|(t, p)| (t, p / total)).collect())
}

/// Pearson goodness-of-fit p-value of observed counts against probabilities.
pub fn chi_square_p_value(observed: &[u64], probabilities: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&o, &p) in observed.iter().zip(probabilities) {
        if p <= 0.0 {
            if o > 0 {
                return 0.0;
            }
            continue;
        }
        let e = p * total as f64;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    let dist = ChiSquared::new((cells - 1) as f64).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}
