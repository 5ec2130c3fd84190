//! Acceptance criteria 1–8, one PASS/FAIL line each. Runs without the
//! libtest harness so the lines are always printed; exits non-zero if any
//! criterion fails.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::Instant;

use num::{BigInt, BigRational, One, Zero};

use halin_core::bijection::{phi, phi_inverse, phi_trace, pushforward_distribution};
use halin_core::experiments::{sample_marked, scaling_run, ScalingRunConfig};
use halin_core::gh_metric::{check_lemma_bound, lemma_spaces, DEFAULT_BUDGET};
use halin_core::gw::{chi_square_p_value, conditional_masses, Conditioning, ConditionedSampler, OffspringDistribution};
use halin_core::halin::{build_halin, enumerate_halin, random_hstar_tree, HalinMap, Weights};
use halin_core::planar_map::rooted_isomorphism;
use halin_core::plane_tree::{enumerate_marked, enumerate_trees, random_tree, MarkedTree, PlaneTree};
use halin_core::seeded_rng;

type Outcome = Result<String, String>;

fn binom(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn same_map(a: &HalinMap, b: &HalinMap) -> bool {
    rooted_isomorphism(a.map(), b.map()).is_some()
}

fn uniform_halin_sampler(n: usize) -> ConditionedSampler {
    let mu = OffspringDistribution::from_weights(&Weights::Ones).unwrap().mu;
    ConditionedSampler::new(&mu, n, Conditioning::Split).unwrap()
}

fn criterion_1() -> Outcome {
    let expected = [1u128, 2, 7, 30, 143];
    let mut rows = Vec::new();
    for n in 1..=5usize {
        let enumerated = enumerate_halin(n).map_err(|e| e.to_string())?.len() as u128;
        let summed: u128 = enumerate_trees(n)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|t| t.code().iter().map(|&k| k as u128 + 1).product::<u128>())
            .sum();
        let closed = binom(3 * n as u128 - 2, n as u128 - 1) / n as u128;
        if enumerated != summed || summed != closed || closed != expected[n - 1] {
            return Err(format!("n = {n}: enumeration {enumerated}, sum {summed}, closed form {closed}"));
        }
        rows.push(closed.to_string());
    }
    Ok(format!("|H_n| = {} for n = 1..5, three ways", rows.join(", ")))
}

fn criterion_2() -> Outcome {
    for n in 1..=5usize {
        let maps = enumerate_halin(n).map_err(|e| e.to_string())?;
        let mut image = HashSet::new();
        for h in &maps {
            let t = phi(h).map_err(|e| e.to_string())?;
            let back = phi_inverse(&t).map_err(|e| e.to_string())?;
            if !same_map(h, &back) {
                return Err(format!("n = {n}: φ⁻¹(φ(H)) ≠ H for φ(H) = {t}"));
            }
            if !image.insert(t.clone()) {
                return Err(format!("n = {n}: φ is not injective ({t})"));
            }
        }
        let marked: HashSet<MarkedTree> = enumerate_marked(n).map_err(|e| e.to_string())?.into_iter().collect();
        if image != marked {
            return Err(format!("n = {n}: image of φ is not the set of marked trees"));
        }
    }
    let mut failures = 0usize;
    for n in [10usize, 50, 200] {
        let mut rng = seeded_rng(0xAC2 + n as u64);
        for _ in 0..1000 {
            // φ ∘ φ⁻¹ on a random marked tree
            let t = MarkedTree::random_marks(random_tree(n, &mut rng).unwrap(), &mut rng);
            match phi_inverse(&t).and_then(|h| phi(&h)) {
                Ok(back) if back == t => {}
                _ => failures += 1,
            }
            // φ⁻¹ ∘ φ on a Halin map built directly from a random (H★) tree
            let h = build_halin(&random_hstar_tree(n, &mut rng).unwrap()).unwrap();
            match phi(&h).and_then(|t| phi_inverse(&t)) {
                Ok(back) if same_map(&h, &back) => {}
                _ => failures += 1,
            }
        }
    }
    if failures > 0 {
        return Err(format!("{failures} random round trips failed"));
    }
    Ok("bijective for n ≤ 5 (1+2+7+30+143 maps); 6000 random round trips at n ∈ {10, 50, 200}".into())
}

fn criterion_3() -> Outcome {
    let mut faces_checked = 0usize;
    for n in 1..=5usize {
        for h in enumerate_halin(n).map_err(|e| e.to_string())? {
            let trace = phi_trace(&h).map_err(|e| e.to_string())?;
            let faces = h.faces();
            let shape = trace.marked.shape();
            for v in 0..shape.zeta() {
                // the root face contains the half-edge dart
                let deg = faces.cycles[trace.face[v]].len();
                if shape.child_count(v) + 4 != deg {
                    return Err(format!(
                        "n = {n}, {}: vertex {v} has {} children, face degree {deg}",
                        trace.marked,
                        shape.child_count(v)
                    ));
                }
                faces_checked += 1;
            }
        }
    }
    Ok(format!("k_v = deg(f) − 4 on all {faces_checked} bounded faces, n ≤ 5"))
}

fn criterion_4() -> Outcome {
    let n = 4;
    let shapes = enumerate_trees(n).map_err(|e| e.to_string())?;
    // μ(k) = (4/9)(1/3)^k (k+1)
    let mu = |k: usize| -> BigRational {
        BigRational::new(BigInt::from(4), BigInt::from(9))
            * BigRational::new(BigInt::one(), BigInt::from(3).pow(k as u32))
            * BigRational::from_integer(BigInt::from(k + 1))
    };
    let weight = |t: &PlaneTree| t.code().iter().fold(BigRational::one(), |acc, &k| acc * mu(k));
    let total: BigRational = shapes.iter().map(weight).sum();
    let gw: HashMap<String, BigRational> = shapes.iter().map(|t| (t.to_string(), weight(t) / &total)).collect();

    // with w ≡ 1 the Boltzmann law is uniform on ℍ₄
    let maps = enumerate_halin(n).map_err(|e| e.to_string())?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for h in &maps {
        *counts.entry(phi(h).map_err(|e| e.to_string())?.shape().to_string()).or_default() += 1;
    }
    let uniform: HashMap<String, BigRational> = counts
        .iter()
        .map(|(s, &c)| (s.clone(), BigRational::new(BigInt::from(c), BigInt::from(maps.len()))))
        .collect();

    let report = pushforward_distribution(n, &Weights::Ones).map_err(|e| e.to_string())?;
    if !report.exact_match {
        return Err(format!("library reports a discrepancy of {}", report.max_discrepancy));
    }
    for s in &report.shapes {
        let b = BigRational::from_str(&s.boltzmann).map_err(|e| e.to_string())?;
        let g = BigRational::from_str(&s.galton_watson).map_err(|e| e.to_string())?;
        let expect = &gw[&s.shape];
        let direct = uniform.get(&s.shape).cloned().unwrap_or_else(BigRational::zero);
        if &b != expect || &g != expect || direct != *expect {
            return Err(format!(
                "shape {}: Boltzmann {b}, GW {g}, uniform count {direct}, oracle {expect}",
                s.shape
            ));
        }
    }
    let law: Vec<String> = report.shapes.iter().map(|s| format!("{}↦{}", s.shape, s.boltzmann)).collect();
    Ok(format!("exact rational identity on T_4: {}", law.join(", ")))
}

fn criterion_5() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64); // (dis(R)/2, GH(L,L̂) bound, dis(canonical) − 2 Height)
    let mut small = 0usize;
    for n in 1..=3usize {
        for h in enumerate_halin(n).map_err(|e| e.to_string())? {
            let r = check_lemma_bound(&h, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            let gh = r.gh.ok_or("exact GH over budget")?;
            if gh > r.bound + 1e-9 {
                return Err(format!("n = {n}: GH = {gh} > Height + 3/2 = {}", r.bound));
            }
            let height = r.height as f64;
            if r.dis_contraction / 2.0 > 2.0 || r.dis_shift / 2.0 > 0.5 || r.dis_canonical > 2.0 * height {
                return Err(format!(
                    "n = {n}: intermediate bounds fail (dis R = {}, dis shift = {}, dis canonical = {}, Height = {height})",
                    r.dis_contraction, r.dis_shift, r.dis_canonical
                ));
            }
            small += 1;
        }
    }

    let n = 50;
    let sampler = uniform_halin_sampler(n);
    let mut rng = seeded_rng(0xAC5);
    let mut failing_hh = 0usize;
    let mut provably_over = 0usize;
    let mut max_diam_gap = 0.0f64;
    for _ in 0..100 {
        let h = phi_inverse(&sample_marked(&sampler, &mut rng)).map_err(|e| e.to_string())?;
        let s = lemma_spaces(&h).map_err(|e| e.to_string())?;
        let dis_r = s.contraction.distortion(&s.halin, &s.hat_h).map_err(|e| e.to_string())?;
        let dis_shift = s.shift.distortion(&s.hat_l, &s.looptree).map_err(|e| e.to_string())?;
        let dis_can = s.canonical.distortion(&s.hat_h, &s.hat_l).map_err(|e| e.to_string())?;
        worst.0 = worst.0.max(dis_r / 2.0);
        worst.1 = worst.1.max(dis_shift / 2.0);
        worst.2 = worst.2.max(dis_can - 2.0 * s.height as f64);
        if dis_r / 2.0 > 2.0 {
            failing_hh += 1;
        }
        // ½|diam H − diam Ĥ| bounds GH(H, Ĥ) from below for every correspondence
        let gap = 0.5 * (s.halin.diameter() - s.hat_h.diameter()).abs();
        if gap > 2.0 {
            provably_over += 1;
        }
        max_diam_gap = max_diam_gap.max(gap);
    }
    let detail = format!(
        "n ≤ 3: {small} maps, exact GH ≤ Height + 3/2 and all intermediate bounds hold; n = 50: \
         max ½dis(H→Ĥ) = {}, max ½dis(L̂→L) = {}, max dis(canonical) − 2·Height = {}, \
         max ½|diam H − diam Ĥ| = {max_diam_gap}",
        worst.0, worst.1, worst.2
    );
    if failing_hh > 0 || worst.1 > 0.5 || worst.2 > 0.0 {
        return Err(format!(
            "{detail}; GH(H, Ĥ) ≤ 2 fails for the contraction correspondence on {failing_hh}/100 \
             instances at n = 50, and provably (½|diam H − diam Ĥ| > 2) on {provably_over}/100"
        ));
    }
    Ok(detail)
}

fn criterion_6() -> Outcome {
    let n = 4;
    let samples = 100_000;
    let laws = [
        ("stable α = 1.5", OffspringDistribution::stable(1.5).map_err(|e| e.to_string())?),
        (
            "geometric-type (4/9)(1/3)^k(k+1)",
            OffspringDistribution::from_weights(&Weights::Ones).map_err(|e| e.to_string())?.mu,
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, mu) in &laws {
        let masses = conditional_masses(mu, n).map_err(|e| e.to_string())?;
        if masses.len() != 5 {
            return Err(format!("{name}: {} shapes in T_4", masses.len()));
        }
        let index: HashMap<PlaneTree, usize> = masses.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect();
        let probs: Vec<f64> = masses.iter().map(|m| m.1).collect();
        let sampler = ConditionedSampler::new(mu, n, Conditioning::Split).map_err(|e| e.to_string())?;
        let mut passing = 0;
        let mut ps = Vec::new();
        for seed in 0..10u64 {
            let mut rng = seeded_rng(1000 + seed);
            let mut observed = vec![0u64; probs.len()];
            for _ in 0..samples {
                observed[index[&sampler.sample(&mut rng)]] += 1;
            }
            let p = chi_square_p_value(&observed, &probs);
            if p > 0.01 {
                passing += 1;
            }
            ps.push(format!("{p:.3}"));
        }
        ok &= passing >= 9;
        parts.push(format!("{name}: {passing}/10 seeds with p > 0.01 [{}]", ps.join(" ")));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let alpha = 1.5;
    let sizes: Vec<usize> = (10..=16).map(|e| 1usize << e).collect();
    let cfg = ScalingRunConfig::stable(alpha, sizes, 200, 42);
    let r = scaling_run(&cfg).map_err(|e| e.to_string())?;
    let reg = r.diam_slope.as_ref().ok_or("no regression")?;
    let decay = r.height_decay_ratio.ok_or("no decay ratio")?;
    let target = 1.0 / alpha;
    let detail = format!(
        "slope {:.4} (95% CI {:.4}..{:.4}) vs 1/α = {target:.4} ± 0.1; median Height/b_n ratio 2^16 : 2^10 = {decay:.4} (< 0.5)",
        reg.slope, reg.ci_low, reg.ci_high
    );
    if (reg.slope - target).abs() <= 0.1 && decay < 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The Łukasiewicz walk recomputed from the child counts.
fn lukasiewicz_ok(t: &PlaneTree) -> bool {
    let mut w: i64 = 0;
    let code = t.code();
    for (i, &k) in code.iter().enumerate() {
        w += k as i64 - 1;
        if i + 1 < code.len() && w < 0 {
            return false;
        }
    }
    w == -1
}

fn halin_violations(h: &HalinMap) -> Vec<String> {
    let mut out = Vec::new();
    let m = h.map();
    let (v, e, f) = (m.vertex_count() as i64, m.edge_count() as i64, m.face_count() as i64);
    if v - e + f != 2 {
        out.push(format!("V − E + F = {}", v - e + f));
    }
    let faces = h.faces();
    let outer = faces.of[h.outer_dart()];
    let mut shared: HashMap<usize, HashSet<usize>> = HashMap::new();
    for &d in &faces.cycles[outer] {
        let other = faces.of[m.twin(d)];
        shared.entry(other).or_default().insert(d.min(m.twin(d)));
    }
    for face in (0..faces.len()).filter(|&x| x != outer) {
        let k = shared.get(&face).map_or(0, |s| s.len());
        if k != 1 {
            out.push(format!("bounded face {face} shares {k} edges with the unbounded face"));
        }
    }
    let mut degree = vec![0usize; h.vertex_count()];
    for d in (0..m.dart_count()).filter(|&d| d != h.half_edge()) {
        degree[h.origin(d)] += 1;
    }
    for &leaf in h.leaf_cycle() {
        if degree[leaf] != 3 {
            out.push(format!("boundary vertex {leaf} has degree {}", degree[leaf]));
        }
    }
    if !lukasiewicz_ok(h.tree()) {
        out.push("underlying tree has an invalid Łukasiewicz path".into());
    }
    out
}

fn criterion_8() -> Outcome {
    let mut maps = 0usize;
    let mut trees = 0usize;
    let mut violations = Vec::new();
    let mut check_map = |h: &HalinMap, what: &str, violations: &mut Vec<String>| {
        maps += 1;
        violations.extend(halin_violations(h).into_iter().map(|v| format!("{what}: {v}")));
    };
    for n in 1..=5usize {
        for h in enumerate_halin(n).map_err(|e| e.to_string())? {
            check_map(&h, &format!("enumerated n = {n}"), &mut violations);
        }
    }
    let mut rng = seeded_rng(0xAC8);
    for n in [10usize, 50, 200] {
        let sampler = uniform_halin_sampler(n);
        for _ in 0..200 {
            let t = sample_marked(&sampler, &mut rng);
            let h = phi_inverse(&t).map_err(|e| e.to_string())?;
            check_map(&h, &format!("φ⁻¹ n = {n}"), &mut violations);
            let h = build_halin(&random_hstar_tree(n, &mut rng).unwrap()).map_err(|e| e.to_string())?;
            check_map(&h, &format!("built n = {n}"), &mut violations);
        }
    }
    let mut check_tree = |t: &PlaneTree, violations: &mut Vec<String>| {
        trees += 1;
        if !lukasiewicz_ok(t) {
            violations.push(format!("tree of size {}: invalid Łukasiewicz path", t.zeta()));
        }
        if t.lukasiewicz().values().last() != Some(&-1) {
            violations.push(format!("tree of size {}: W_ζ ≠ −1", t.zeta()));
        }
    };
    let stable = OffspringDistribution::stable(1.5).map_err(|e| e.to_string())?;
    let ones = OffspringDistribution::from_weights(&Weights::Ones).map_err(|e| e.to_string())?.mu;
    for mu in [&stable, &ones] {
        for n in [1usize, 2, 17, 1024, 4096] {
            for method in [Conditioning::Split, Conditioning::Rejection] {
                if method == Conditioning::Rejection && n > 1024 {
                    continue;
                }
                let sampler = ConditionedSampler::new(mu, n, method).map_err(|e| e.to_string())?;
                for _ in 0..50 {
                    let t = sampler.sample(&mut rng);
                    if t.zeta() != n {
                        violations.push(format!("sampled size {} ≠ {n}", t.zeta()));
                    }
                    check_tree(&t, &mut violations);
                }
            }
        }
    }
    for n in 1..=8usize {
        for t in enumerate_trees(n).map_err(|e| e.to_string())? {
            check_tree(&t, &mut violations);
        }
    }
    if violations.is_empty() {
        Ok(format!("{maps} Halin maps and {trees} trees, zero violations"))
    } else {
        let shown: Vec<&String> = violations.iter().take(5).collect();
        Err(format!("{} violations, e.g. {shown:?}", violations.len()))
    }
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = Vec::new();
    for (k, f) in criteria {
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {k}: PASS ({secs:.1}s) {d}"),
            Err(d) => {
                println!("criterion {k}: FAIL ({secs:.1}s) {d}");
                failed.push(k);
            }
        }
    }
    if !failed.is_empty() {
        println!("acceptance: {} failing criteria: {failed:?}", failed.len());
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}
