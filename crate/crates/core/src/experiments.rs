//! Scaling experiments on size-conditioned trees, their looptrees and the
//! associated Halin maps.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bijection::phi_inverse;
use crate::error::{Error, Result};
use crate::gw::{scaling_constant, Conditioning, ConditionedSampler, OffspringDistribution};
use crate::halin::Weights;
use crate::looptree::loop_diameter;
use crate::plane_tree::{MarkedTree, PlaneTree};
use crate::seeded_rng;

/// Halin-map diameters are only computed up to this size.
pub const HALIN_DIAMETER_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Family {
    /// `μ(k) = c k^{-1-α}` for `k ≥ 1`.
    Stable(f64),
    /// The critical law induced by face weights.
    Weights(Weights),
}

impl Family {
    pub fn offspring(&self) -> Result<OffspringDistribution> {
        match self {
            Family::Stable(a) => OffspringDistribution::stable(*a),
            Family::Weights(w) => Ok(OffspringDistribution::from_weights(w)?.mu),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRunConfig {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Also build the Halin map of each sample (uniform marks) when
    /// `n ≤ HALIN_DIAMETER_LIMIT`.
    pub halin: bool,
    pub method: Conditioning,
}

impl ScalingRunConfig {
    pub fn stable(alpha: f64, sizes: Vec<usize>, samples: usize, seed: u64) -> Self {
        ScalingRunConfig {
            family: Family::Stable(alpha),
            sizes,
            samples,
            seed,
            halin: false,
            method: Conditioning::Split,
        }
    }

    pub fn validate(&self) -> Result<OffspringDistribution> {
        if self.sizes.is_empty() || self.samples == 0 {
            return Err(Error::Config("need at least one size and one sample".into()));
        }
        let mu = self.family.offspring()?;
        match mu.alpha() {
            Some(a) if a > 1.0 && a < 2.0 => {}
            _ => return Err(Error::Config("offspring law has no stable index in (1, 2)".into())),
        }
        for &n in &self.sizes {
            if !mu.supports_size(n) {
                return Err(Error::OutOfSupport {
                    n,
                    period: mu.period().max(1),
                });
            }
        }
        Ok(mu)
    }
}

/// `b_n`: exact for the pure power law, otherwise the same expression with
/// the tail constant of `μ(k) ~ c k^{-1-α}`.
pub fn scaling_sequence(mu: &OffspringDistribution, n: usize) -> Result<f64> {
    match mu.b_n(n) {
        Ok(b) => Ok(b),
        Err(Error::NotPowerLaw) => match (mu.alpha(), mu.tail_constant()) {
            (Some(a), Some(c)) => Ok(scaling_constant(a, c, n)),
            _ => Err(Error::NotPowerLaw),
        },
        Err(e) => Err(e),
    }
}

/// Seed of one `(n, sample)` cell, independent of scheduling.
pub fn cell_seed(seed: u64, n: usize, sample: usize) -> u64 {
    let mut z = seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (sample as u64).rotate_left(32);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleRow {
    pub n: usize,
    pub seed: u64,
    pub sample: usize,
    pub height: usize,
    pub diam_loop: u64,
    pub max_jump: i64,
    pub b_n: f64,
    pub diam_halin: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Quantiles {
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Quantiles {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Quantiles {
            q10: quantile_sorted(&v, 0.1),
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            q90: quantile_sorted(&v, 0.9),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

/// Linear interpolation between order statistics.
pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeSummary {
    pub n: usize,
    pub b_n: f64,
    pub height: Quantiles,
    pub diam_loop: Quantiles,
    pub max_jump: Quantiles,
    pub height_over_b_n: Quantiles,
    pub diam_loop_over_b_n: Quantiles,
    pub max_jump_over_b_n: Quantiles,
    pub diam_halin_over_b_n: Option<Quantiles>,
    /// Samples violating `|diam H − diam Loop(T)| ≤ 2 Height(T) + 3`.
    pub diameter_gap_violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// Least squares with a 95% Student-t interval for the slope.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<Regression> {
    let k = xs.len();
    if k < 2 || ys.len() != k {
        return Err(Error::Config("regression needs at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / k as f64;
    let my = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("regression needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (ci_low, ci_high) = if k > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        let se = (rss / (k - 2) as f64 / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, (k - 2) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        (slope - t * se, slope + t * se)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Regression {
        slope,
        intercept,
        ci_low,
        ci_high,
        points: k,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingResult {
    pub config: ScalingRunConfig,
    pub rows: Vec<SampleRow>,
    pub sizes: Vec<SizeSummary>,
    /// Slope of log median diam(Loop) against log n.
    pub diam_slope: Option<Regression>,
    /// Median Height/b_n at the largest size over that at the smallest.
    pub height_decay_ratio: Option<f64>,
}

impl ScalingResult {
    /// Rows as CSV, columns `n,seed,sample,height,diam_loop,max_jump,b_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,seed,sample,height,diam_loop,max_jump,b_n\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n, r.seed, r.sample, r.height, r.diam_loop, r.max_jump, r.b_n
            );
        }
        out
    }

    /// Everything but the rows.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "sizes": self.sizes,
            "diam_slope": self.diam_slope,
            "height_decay_ratio": self.height_decay_ratio,
        })
    }
}

fn check_tree(t: &PlaneTree) -> Result<()> {
    let w = t.lukasiewicz();
    if *w.values().last().unwrap() != -1 || w.values()[..w.len() - 1].iter().any(|&x| x < 0) {
        return Err(Error::Invariant(format!("bad Łukasiewicz path for a tree of size {}", t.zeta())));
    }
    Ok(())
}

fn one_sample(
    sampler: &ConditionedSampler,
    n: usize,
    sample: usize,
    seed: u64,
    b_n: f64,
    halin: bool,
) -> Result<SampleRow> {
    let cs = cell_seed(seed, n, sample);
    let mut rng = seeded_rng(cs);
    let tree = sampler.sample(&mut rng);
    check_tree(&tree)?;
    let path = tree.lukasiewicz();
    let diam_halin = if halin && n <= HALIN_DIAMETER_LIMIT {
        let marked = MarkedTree::random_marks(tree.clone(), &mut rng);
        let h = phi_inverse(&marked)?;
        h.validate(true)?;
        Some(u64::from(h.graph().diameter()?))
    } else {
        None
    };
    Ok(SampleRow {
        n,
        seed: cs,
        sample,
        height: tree.height(),
        diam_loop: loop_diameter(&tree),
        max_jump: path.max_jump(),
        b_n,
        diam_halin,
    })
}

fn summarize(n: usize, b_n: f64, rows: &[SampleRow]) -> SizeSummary {
    let col = |f: &dyn Fn(&SampleRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let halin: Vec<f64> = rows.iter().filter_map(|r| r.diam_halin.map(|d| d as f64 / b_n)).collect();
    let violations = rows
        .iter()
        .filter(|r| match r.diam_halin {
            Some(d) => (d as i64 - r.diam_loop as i64).unsigned_abs() > 2 * r.height as u64 + 3,
            None => false,
        })
        .count();
    SizeSummary {
        n,
        b_n,
        height: Quantiles::of(&col(&|r| r.height as f64)),
        diam_loop: Quantiles::of(&col(&|r| r.diam_loop as f64)),
        max_jump: Quantiles::of(&col(&|r| r.max_jump as f64)),
        height_over_b_n: Quantiles::of(&col(&|r| r.height as f64 / b_n)),
        diam_loop_over_b_n: Quantiles::of(&col(&|r| r.diam_loop as f64 / b_n)),
        max_jump_over_b_n: Quantiles::of(&col(&|r| r.max_jump as f64 / b_n)),
        diam_halin_over_b_n: (!halin.is_empty()).then(|| Quantiles::of(&halin)),
        diameter_gap_violations: violations,
    }
}

/// Samples `GW_μ( · | ζ = n)` for every configured size. Cells run in
/// parallel and are gathered by index, so output does not depend on the
/// thread count.
pub fn scaling_run(cfg: &ScalingRunConfig) -> Result<ScalingResult> {
    let mu = cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.sizes.len() * cfg.samples);
    let mut sizes = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let sampler = ConditionedSampler::new(&mu, n, cfg.method)?;
        let b_n = scaling_sequence(&mu, n)?;
        let batch: Vec<SampleRow> = (0..cfg.samples)
            .into_par_iter()
            .map(|s| one_sample(&sampler, n, s, cfg.seed, b_n, cfg.halin))
            .collect::<Result<_>>()?;
        sizes.push(summarize(n, b_n, &batch));
        rows.extend(batch);
    }
    let mut distinct: Vec<&SizeSummary> = Vec::new();
    for s in &sizes {
        if distinct.iter().all(|d| d.n != s.n) {
            distinct.push(s);
        }
    }
    let diam_slope = if distinct.len() >= 2 {
        let xs: Vec<f64> = distinct.iter().map(|s| (s.n as f64).ln()).collect();
        let ys: Vec<f64> = distinct.iter().map(|s| s.diam_loop.median.max(1.0).ln()).collect();
        Some(ols(&xs, &ys)?)
    } else {
        None
    };
    let smallest = distinct.iter().min_by_key(|s| s.n);
    let largest = distinct.iter().max_by_key(|s| s.n);
    let height_decay_ratio = match (smallest, largest) {
        (Some(a), Some(b)) if a.n != b.n => Some(b.height_over_b_n.median / a.height_over_b_n.median),
        _ => None,
    };
    Ok(ScalingResult {
        config: cfg.clone(),
        rows,
        sizes,
        diam_slope,
        height_decay_ratio,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileSize {
    pub n: usize,
    pub b_n: f64,
    pub max_w_over_b_n: Quantiles,
    pub max_jump_over_b_n: Quantiles,
    /// `W` at time `⌊0.9 ζ⌋`, rescaled.
    pub late_w_over_b_n: Quantiles,
    /// Samples with `W_ζ ≠ −1` or `sup W < 0`; always zero for valid trees.
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileResult {
    pub sizes: Vec<ProfileSize>,
    /// KS distance of `max jump / b_n` between consecutive sizes.
    pub ks_max_jump: Vec<f64>,
    pub ks_max_w: Vec<f64>,
}

/// Scale-stability of rescaled Łukasiewicz functionals across sizes.
pub fn lukasiewicz_profile(cfg: &ScalingRunConfig) -> Result<ProfileResult> {
    let mu = cfg.validate()?;
    let mut sizes = Vec::new();
    let mut jumps: Vec<Vec<f64>> = Vec::new();
    let mut maxima: Vec<Vec<f64>> = Vec::new();
    for &n in &cfg.sizes {
        let sampler = ConditionedSampler::new(&mu, n, cfg.method)?;
        let b_n = scaling_sequence(&mu, n)?;
        let stats: Vec<(f64, f64, f64, bool)> = (0..cfg.samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = seeded_rng(cell_seed(cfg.seed, n, s));
                let w = sampler.sample(&mut rng).lukasiewicz();
                let v = w.values();
                let bad = *v.last().unwrap() != -1 || w.max() < 0;
                let late = v[(9 * n) / 10] as f64;
                (w.max() as f64 / b_n, w.max_jump() as f64 / b_n, late / b_n, bad)
            })
            .collect();
        let col = |k: usize| -> Vec<f64> {
            stats
                .iter()
                .map(|s| match k {
                    0 => s.0,
                    1 => s.1,
                    _ => s.2,
                })
                .collect()
        };
        sizes.push(ProfileSize {
            n,
            b_n,
            max_w_over_b_n: Quantiles::of(&col(0)),
            max_jump_over_b_n: Quantiles::of(&col(1)),
            late_w_over_b_n: Quantiles::of(&col(2)),
            violations: stats.iter().filter(|s| s.3).count(),
        });
        maxima.push(col(0));
        jumps.push(col(1));
    }
    let ks = |v: &[Vec<f64>]| v.windows(2).map(|w| ks_distance(&w[0], &w[1])).collect();
    Ok(ProfileResult {
        sizes,
        ks_max_jump: ks(&jumps),
        ks_max_w: ks(&maxima),
    })
}

/// A uniformly marked tree `GW_μ( · | ζ = n)`, i.e. the marked tree of a
/// Boltzmann Halin map.
pub fn sample_marked<R: Rng + ?Sized>(sampler: &ConditionedSampler, rng: &mut R) -> MarkedTree {
    let tree = sampler.sample(rng);
    MarkedTree::random_marks(tree, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_recovers_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let r = ols(&xs, &ys).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12 && (r.intercept - 1.0).abs() < 1e-12);
        assert!((r.ci_high - r.ci_low).abs() < 1e-9);
        let noisy = [3.1, 4.8, 7.2, 8.9];
        let r = ols(&xs, &noisy).unwrap();
        assert!(r.ci_low < r.slope && r.slope < r.ci_high);
        // t quantile for 2 degrees of freedom
        let t = StudentsT::new(0.0, 1.0, 2.0).unwrap().inverse_cdf(0.975);
        assert!((t - 4.302_652_729_911_275).abs() < 1e-9);
    }

    #[test]
    fn quantiles_and_ks() {
        let v: Vec<f64> = (0..=10).map(f64::from).collect();
        let q = Quantiles::of(&v);
        assert_eq!((q.q25, q.median, q.q75), (2.5, 5.0, 7.5));
        assert_eq!(ks_distance(&v, &v), 0.0);
        let shifted: Vec<f64> = v.iter().map(|x| x + 100.0).collect();
        assert_eq!(ks_distance(&v, &shifted), 1.0);
    }

    #[test]
    fn runs_are_deterministic_and_valid() {
        let mut cfg = ScalingRunConfig::stable(1.5, vec![64, 256], 12, 42);
        cfg.halin = true;
        let a = scaling_run(&cfg).unwrap();
        let b = scaling_run(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 24);
        assert!(a.to_csv().starts_with("n,seed,sample,height,diam_loop,max_jump,b_n\n"));
        for s in &a.sizes {
            assert_eq!(s.diameter_gap_violations, 0);
            assert!(s.diam_halin_over_b_n.is_some());
        }
        assert!(a.diam_slope.is_some());
        let other = scaling_run(&ScalingRunConfig::stable(1.5, vec![64, 256], 12, 43)).unwrap();
        assert_ne!(a.to_csv(), other.to_csv());
    }

    #[test]
    fn config_validation() {
        assert!(scaling_run(&ScalingRunConfig::stable(2.5, vec![10], 1, 0)).is_err());
        let mut cfg = ScalingRunConfig::stable(1.5, vec![10], 1, 0);
        cfg.family = Family::Weights(Weights::Ones);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(ScalingRunConfig::stable(1.5, vec![], 1, 0).validate().is_err());
    }

    #[test]
    fn profile_checks() {
        let cfg = ScalingRunConfig::stable(1.5, vec![200, 800], 40, 7);
        let p = lukasiewicz_profile(&cfg).unwrap();
        for s in &p.sizes {
            assert_eq!(s.violations, 0);
            assert!(s.max_jump_over_b_n.iqr() > 0.0);
        }
        assert_eq!(p.ks_max_jump.len(), 1);
    }

    #[test]
    fn cell_seeds_differ() {
        let mut seen = std::collections::HashSet::new();
        for n in [1, 2, 1024] {
            for s in 0..100 {
                assert!(seen.insert(cell_seed(42, n, s)));
            }
        }
    }
}
