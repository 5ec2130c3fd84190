//! Finite metric spaces, correspondences and Gromov-Hausdorff distances.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::bijection::phi_trace;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::halin::HalinMap;
use crate::looptree::{canonical_matching, hat_h, hat_l, loop_graph};

/// Slack used when comparing real distances.
pub const EPS: f64 = 1e-9;
/// Default cap on `|Y|^|X| · |X|^|Y|` for exhaustive search.
pub const DEFAULT_BUDGET: f64 = 1e9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteMetricSpace {
    size: usize,
    dist: Vec<f64>,
}

impl FiniteMetricSpace {
    /// Row-major distance matrix; checks the metric axioms.
    pub fn new(size: usize, dist: Vec<f64>) -> Result<Self> {
        if dist.len() != size * size {
            return Err(Error::InvalidMetric(format!(
                "{} entries for {size} points",
                dist.len()
            )));
        }
        let s = FiniteMetricSpace { size, dist };
        for i in 0..size {
            if s.d(i, i) != 0.0 {
                return Err(Error::InvalidMetric(format!("d({i},{i}) ≠ 0")));
            }
            for j in 0..size {
                let x = s.d(i, j);
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {x}")));
                }
                if (x - s.d(j, i)).abs() > EPS {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) ≠ d({j},{i})")));
                }
            }
        }
        for k in 0..size {
            for i in 0..size {
                for j in 0..size {
                    if s.d(i, j) > s.d(i, k) + s.d(k, j) + EPS {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails at ({i},{k},{j})"
                        )));
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::InvalidMetric("distance matrix is not square".into()));
        }
        Self::new(size, rows.concat())
    }

    /// Shortest-path metric of a connected graph.
    pub fn from_graph(g: &Graph) -> Result<Self> {
        let rows = g.all_distances()?;
        Ok(FiniteMetricSpace {
            size: g.vertex_count(),
            dist: rows.into_iter().flatten().map(f64::from).collect(),
        })
    }

    pub fn point() -> Self {
        FiniteMetricSpace {
            size: 1,
            dist: vec![0.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.size + j]
    }

    pub fn eccentricity(&self, i: usize) -> f64 {
        (0..self.size).map(|j| self.d(i, j)).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn radius(&self) -> f64 {
        (0..self.size)
            .map(|i| self.eccentricity(i))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sub-space on the given points, in that order.
    pub fn subspace(&self, points: &[usize]) -> Self {
        let size = points.len();
        let dist = points
            .iter()
            .flat_map(|&i| points.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.d(i, j))
            .collect();
        FiniteMetricSpace { size, dist }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.size {
            for j in 0..self.size {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.d(i, j));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("{x:?}: {e}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }
}

/// A relation `R ⊆ X × Y` with both projections onto.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Correspondence {
    pairs: Vec<(usize, usize)>,
    left: usize,
    right: usize,
}

impl Correspondence {
    pub fn new(mut pairs: Vec<(usize, usize)>, left: usize, right: usize) -> Result<Self> {
        pairs.sort_unstable();
        pairs.dedup();
        let mut seen_l = vec![false; left];
        let mut seen_r = vec![false; right];
        for &(x, y) in &pairs {
            if x >= left || y >= right {
                return Err(Error::InvalidCorrespondence(format!("pair ({x},{y}) out of range")));
            }
            seen_l[x] = true;
            seen_r[y] = true;
        }
        if let Some(x) = seen_l.iter().position(|s| !s) {
            return Err(Error::InvalidCorrespondence(format!("left point {x} unmatched")));
        }
        if let Some(y) = seen_r.iter().position(|s| !s) {
            return Err(Error::InvalidCorrespondence(format!("right point {y} unmatched")));
        }
        Ok(Correspondence { pairs, left, right })
    }

    pub fn identity(n: usize) -> Self {
        Correspondence {
            pairs: (0..n).map(|i| (i, i)).collect(),
            left: n,
            right: n,
        }
    }

    /// `graph(f) ∪ graph(g)ᵀ` for `f: X → Y`, `g: Y → X`.
    pub fn from_maps(f: &[usize], g: &[usize]) -> Result<Self> {
        let mut pairs: Vec<_> = f.iter().enumerate().map(|(x, &y)| (x, y)).collect();
        pairs.extend(g.iter().enumerate().map(|(y, &x)| (x, y)));
        Self::new(pairs, f.len(), g.len())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn transpose(&self) -> Self {
        let mut pairs: Vec<_> = self.pairs.iter().map(|&(x, y)| (y, x)).collect();
        pairs.sort_unstable();
        Correspondence {
            pairs,
            left: self.right,
            right: self.left,
        }
    }

    /// `{(x, z) : (x, y) ∈ self, (y, z) ∈ other}`.
    pub fn compose(&self, other: &Correspondence) -> Result<Self> {
        if self.right != other.left {
            return Err(Error::InvalidCorrespondence("sizes do not chain".into()));
        }
        let mut by_left: Vec<Vec<usize>> = vec![Vec::new(); other.left];
        for &(y, z) in &other.pairs {
            by_left[y].push(z);
        }
        let pairs = self
            .pairs
            .iter()
            .flat_map(|&(x, y)| by_left[y].iter().map(move |&z| (x, z)))
            .collect();
        Self::new(pairs, self.left, other.right)
    }

    /// `sup |d_X(x, x') − d_Y(y, y')|` over pairs of pairs.
    pub fn distortion(&self, x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<f64> {
        if x.size() != self.left || y.size() != self.right {
            return Err(Error::InvalidCorrespondence(format!(
                "relation on {}×{} used with spaces of sizes {} and {}",
                self.left,
                self.right,
                x.size(),
                y.size()
            )));
        }
        let p = &self.pairs;
        let row = |i: usize| {
            let (a, b) = p[i];
            p[i + 1..]
                .iter()
                .map(|&(c, d)| (x.d(a, c) - y.d(b, d)).abs())
                .fold(0.0, f64::max)
        };
        Ok(if p.len() > 512 {
            (0..p.len()).into_par_iter().map(row).reduce(|| 0.0, f64::max)
        } else {
            (0..p.len()).map(row).fold(0.0, f64::max)
        })
    }
}

/// Points in order of decreasing eccentricity; far points constrain most.
fn search_order(s: &FiniteMetricSpace) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.size()).collect();
    order.sort_by(|&a, &b| s.eccentricity(b).total_cmp(&s.eccentricity(a)));
    order
}

/// Exhaustive search over relations that assign to each point of the
/// `tasks` list one partner, pruned by the running minimum in `best`.
struct Search<'a> {
    x: &'a FiniteMetricSpace,
    y: &'a FiniteMetricSpace,
    /// `(point, side)`: side 0 assigns a partner in Y to a point of X.
    tasks: Vec<(usize, u8)>,
    best: &'a AtomicU64,
}

impl Search<'_> {
    fn cost(&self, pairs: &[(usize, usize)], a: usize, b: usize) -> f64 {
        pairs
            .iter()
            .map(|&(c, d)| (self.x.d(a, c) - self.y.d(b, d)).abs())
            .fold(0.0, f64::max)
    }

    fn best(&self) -> f64 {
        f64::from_bits(self.best.load(Ordering::Relaxed))
    }

    fn offer(&self, v: f64) {
        // non-negative floats order like their bit patterns
        self.best.fetch_min(v.to_bits(), Ordering::Relaxed);
    }

    fn run(&self, pairs: &mut Vec<(usize, usize)>, depth: usize, current: f64) {
        if current >= self.best() {
            return;
        }
        if depth == self.tasks.len() {
            self.offer(current);
            return;
        }
        let (p, side) = self.tasks[depth];
        let choices = if side == 0 { self.y.size() } else { self.x.size() };
        for q in 0..choices {
            let (a, b) = if side == 0 { (p, q) } else { (q, p) };
            let c = current.max(self.cost(pairs, a, b));
            if c < self.best() {
                pairs.push((a, b));
                self.run(pairs, depth + 1, c);
                pairs.pop();
            }
        }
    }
}

fn search_size(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> f64 {
    let (a, b) = (x.size() as f64, y.size() as f64);
    (a * b.ln() + b * a.ln()).exp()
}

/// Exact GH distance with the default budget.
pub fn gh_exact(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<f64> {
    gh_exact_with_budget(x, y, DEFAULT_BUDGET)
}

/// Exact `d_GH(X, Y) = ½ min dis(R)`.
///
/// Every correspondence contains one of the form `graph(f) ∪ graph(g)ᵀ` with
/// `f: X → Y`, `g: Y → X` (pick one partner per point on each side), and
/// distortion can only drop when pairs are removed, so the minimum over these
/// `|Y|^|X| |X|^|Y|` relations is the minimum over all correspondences. The
/// trivial correspondence `X × Y` has distortion `max(diam X, diam Y)` and
/// seeds the bound.
pub fn gh_exact_with_budget(x: &FiniteMetricSpace, y: &FiniteMetricSpace, budget: f64) -> Result<f64> {
    if x.size() == 0 || y.size() == 0 {
        return Err(Error::InvalidMetric("empty space".into()));
    }
    let needed = search_size(x, y);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let trivial = x.diameter().max(y.diameter());
    let best = AtomicU64::new((trivial + EPS).to_bits());
    let mut tasks: Vec<(usize, u8)> = search_order(x).into_iter().map(|p| (p, 0)).collect();
    tasks.extend(search_order(y).into_iter().map(|q| (q, 1)));
    let search = Search {
        x,
        y,
        tasks,
        best: &best,
    };
    // split the first two levels across threads
    let first = search.tasks[0].0;
    let prefixes: Vec<Vec<(usize, usize)>> = if search.tasks.len() >= 2 && search.tasks[1].1 == 0 {
        let second = search.tasks[1].0;
        (0..y.size())
            .flat_map(|a| (0..y.size()).map(move |b| vec![(first, a), (second, b)]))
            .collect()
    } else {
        (0..y.size()).map(|a| vec![(first, a)]).collect()
    };
    prefixes.into_par_iter().for_each(|mut pairs| {
        let mut c = 0.0f64;
        for i in 0..pairs.len() {
            let (a, b) = pairs[i];
            c = c.max(search.cost(&pairs[..i], a, b));
        }
        let depth = pairs.len();
        search.run(&mut pairs, depth, c);
    });
    Ok(0.5 * search.best().min(trivial))
}

/// `½ min_{f: S → Y} dis(graph f)` for a subset `S ⊆ X`: every correspondence
/// restricts to such a map on `S`, so this never exceeds `d_GH(X, Y)`.
fn subset_certificate(x: &FiniteMetricSpace, subset: &[usize], y: &FiniteMetricSpace) -> f64 {
    let xs = x.subspace(subset);
    let best = AtomicU64::new((xs.diameter().max(y.diameter()) + EPS).to_bits());
    let search = Search {
        x: &xs,
        y,
        tasks: (0..subset.len()).map(|p| (p, 0)).collect(),
        best: &best,
    };
    search.run(&mut Vec::new(), 0, 0.0);
    0.5 * search.best().min(xs.diameter().max(y.diameter()))
}

/// A lower bound on `d_GH(X, Y)`: half the differences of diameters and of
/// radii, improved by `trials` random subset certificates on each side.
pub fn gh_lower_bound(x: &FiniteMetricSpace, y: &FiniteMetricSpace, trials: usize, seed: u64) -> f64 {
    let mut lower = 0.5 * (x.diameter() - y.diameter()).abs();
    lower = lower.max(0.5 * (x.radius() - y.radius()).abs());
    let mut rng = crate::seeded_rng(seed);
    for t in 0..trials {
        let (a, b) = if t % 2 == 0 { (x, y) } else { (y, x) };
        // keep |B|^|S| small
        let mut k = a.size().min(5);
        while k > 1 && (b.size() as f64).powi(k as i32) > 2e5 {
            k -= 1;
        }
        let subset = sample(&mut rng, a.size(), k).into_vec();
        lower = lower.max(subset_certificate(a, &subset, b));
    }
    lower
}

/// `½ dis(R)`.
pub fn gh_upper_bound_via(r: &Correspondence, x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<f64> {
    Ok(0.5 * r.distortion(x, y)?)
}

/// The spaces compared in the height bound for a Halin map, with the
/// explicit correspondences between consecutive ones.
#[derive(Clone, Debug)]
pub struct LemmaSpaces {
    pub halin: FiniteMetricSpace,
    pub hat_h: FiniteMetricSpace,
    pub hat_l: FiniteMetricSpace,
    pub looptree: FiniteMetricSpace,
    /// H → Ĥ: each leaf of H° to its parent, identity elsewhere.
    pub contraction: Correspondence,
    /// Ĥ → L̂: the vertex identification.
    pub canonical: Correspondence,
    /// L̂ → L: identity away from the root; the two roots are matched with
    /// the neighbours they gained.
    pub shift: Correspondence,
    pub height: usize,
}

pub fn lemma_spaces(h: &HalinMap) -> Result<LemmaSpaces> {
    let trace = phi_trace(h)?;
    let marked = &trace.marked;
    let shape = marked.shape();
    let hat = hat_h(h);
    let matching = canonical_matching(&trace, &hat);

    let halin = FiniteMetricSpace::from_graph(&h.graph())?;
    let hat_h_space = FiniteMetricSpace::from_graph(&hat.graph)?;
    let hat_l_space = FiniteMetricSpace::from_graph(hat_l(marked).graph())?;
    let looptree = FiniteMetricSpace::from_graph(loop_graph(shape).graph())?;

    let contraction = Correspondence::new(
        hat.image.iter().enumerate().map(|(v, &p)| (v, p)).collect(),
        halin.size(),
        hat_h_space.size(),
    )?;
    let canonical = Correspondence::new(
        matching.iter().enumerate().map(|(v, &p)| (p, v)).collect(),
        hat_h_space.size(),
        hat_l_space.size(),
    )?;

    let n = shape.zeta();
    let kids = &shape.children()[0];
    let m = marked.root_mark();
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (v, v)).collect();
    if m == 0 || m == kids.len() {
        pairs.push((0, 0));
    } else {
        let delta = kids.len();
        pairs.push((0, kids[m - 1]));
        pairs.push((0, kids[m]));
        pairs.push((kids[0], 0));
        pairs.push((kids[delta - 1], 0));
    }
    let shift = Correspondence::new(pairs, n, n)?;

    Ok(LemmaSpaces {
        halin,
        hat_h: hat_h_space,
        hat_l: hat_l_space,
        looptree,
        contraction,
        canonical,
        shift,
        height: shape.height(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Violated,
    /// Upper bound above and lower bound below the target.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub n: usize,
    pub height: usize,
    /// `Height(T) + 3/2`.
    pub bound: f64,
    /// Exact `d_GH(H, Loop(T))` when within budget.
    pub gh: Option<f64>,
    pub lower: f64,
    /// `½ dis` of the composite correspondence H → L.
    pub upper: f64,
    pub dis_contraction: f64,
    pub dis_shift: f64,
    pub dis_canonical: f64,
    /// Sum of the three halved distortions.
    pub three_term_upper: f64,
    /// `bound − gh`, or `bound − upper` without an exact value.
    pub margin: f64,
    pub verdict: Verdict,
}

/// Compares `d_GH(H, Loop(T))` with `Height(T) + 3/2`, `T` the shape of φ(H).
pub fn check_lemma_bound(h: &HalinMap, budget: f64) -> Result<LemmaReport> {
    let s = lemma_spaces(h)?;
    let dis_contraction = s.contraction.distortion(&s.halin, &s.hat_h)?;
    let dis_canonical = s.canonical.distortion(&s.hat_h, &s.hat_l)?;
    let dis_shift = s.shift.distortion(&s.hat_l, &s.looptree)?;
    let composite = s.contraction.compose(&s.canonical)?.compose(&s.shift)?;
    let upper = 0.5 * composite.distortion(&s.halin, &s.looptree)?;
    let three_term_upper = 0.5 * (dis_contraction + dis_canonical + dis_shift);
    let gh = match gh_exact_with_budget(&s.halin, &s.looptree, budget) {
        Ok(g) => Some(g),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let lower = match gh {
        Some(g) => g,
        None => gh_lower_bound(&s.halin, &s.looptree, 8, h.size() as u64),
    };
    let bound = s.height as f64 + 1.5;
    let value = gh.unwrap_or(upper);
    let verdict = if value <= bound + EPS {
        Verdict::Holds
    } else if lower > bound + EPS {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    Ok(LemmaReport {
        n: h.size(),
        height: s.height,
        bound,
        gh,
        lower,
        upper,
        dis_contraction,
        dis_shift,
        dis_canonical,
        three_term_upper,
        margin: bound - value,
        verdict,
    })
}
