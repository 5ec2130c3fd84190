//! Rooted plane trees stored as Łukasiewicz words.
//!
//! A tree with `n` vertices is the sequence of child counts of its vertices
//! listed in depth-first (lexicographic Ulam-Harris) order. Vertex `i` is the
//! `i`-th vertex of that order; vertex `0` is the root.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest size accepted by [`enumerate_trees`].
pub const MAX_TREE_ENUMERATION: usize = 12;
/// Largest size accepted by [`enumerate_marked`].
pub const MAX_MARKED_ENUMERATION: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PlaneTree {
    code: Vec<usize>,
}

/// One entry of [`PlaneTree::lex_vertices`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LexVertex {
    pub index: usize,
    pub depth: usize,
    pub children: usize,
}

impl PlaneTree {
    /// Builds a tree from its child-count sequence, checking the
    /// Łukasiewicz conditions.
    pub fn from_code(code: Vec<usize>) -> Result<Self> {
        check_code(&code)?;
        Ok(PlaneTree { code })
    }

    pub fn single_vertex() -> Self {
        PlaneTree { code: vec![0] }
    }

    /// The path with `n` vertices.
    pub fn path(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree("empty path".into()));
        }
        let mut code = vec![1; n];
        code[n - 1] = 0;
        Ok(PlaneTree { code })
    }

    /// The star whose root has `k` leaf children.
    pub fn star(k: usize) -> Self {
        let mut code = vec![0; k + 1];
        code[0] = k;
        PlaneTree { code }
    }

    pub fn code(&self) -> &[usize] {
        &self.code
    }

    pub fn into_code(self) -> Vec<usize> {
        self.code
    }

    /// Total progeny ζ(T).
    pub fn zeta(&self) -> usize {
        self.code.len()
    }

    pub fn child_count(&self, v: usize) -> usize {
        self.code[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.code[v] == 0
    }

    /// Leaves in lexicographic order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.zeta()).filter(|&v| self.code[v] == 0).collect()
    }

    /// λ(T).
    pub fn leaf_count(&self) -> usize {
        self.code.iter().filter(|&&k| k == 0).count()
    }

    pub fn max_child_count(&self) -> usize {
        self.code.iter().copied().max().unwrap_or(0)
    }

    /// Parent of every vertex (`None` for the root).
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.zeta()];
        // stack of (vertex, children still to be attached)
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (v, &k) in self.code.iter().enumerate() {
            if let Some(top) = stack.last_mut() {
                parent[v] = Some(top.0);
                top.1 -= 1;
                if top.1 == 0 {
                    stack.pop();
                }
            }
            if k > 0 {
                stack.push((v, k));
            }
        }
        parent
    }

    /// Children of every vertex, in left-to-right order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children: Vec<Vec<usize>> =
            self.code.iter().map(|&k| Vec::with_capacity(k)).collect();
        for (v, p) in self.parents().into_iter().enumerate() {
            if let Some(p) = p {
                children[p].push(v);
            }
        }
        children
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.zeta()];
        for (v, p) in self.parents().into_iter().enumerate() {
            if let Some(p) = p {
                depth[v] = depth[p] + 1;
            }
        }
        depth
    }

    /// Height(T), the maximal generation.
    pub fn height(&self) -> usize {
        let mut height = 0;
        let mut stack: Vec<usize> = Vec::new();
        for &k in &self.code {
            height = height.max(stack.len());
            if let Some(top) = stack.last_mut() {
                *top -= 1;
            }
            if k > 0 {
                stack.push(k);
            } else {
                while stack.last() == Some(&0) {
                    stack.pop();
                }
            }
        }
        height
    }

    pub fn lex_vertices(&self) -> Vec<LexVertex> {
        self.depths()
            .into_iter()
            .enumerate()
            .map(|(index, depth)| LexVertex {
                index,
                depth,
                children: self.code[index],
            })
            .collect()
    }

    /// Ulam-Harris label of vertex `v` (empty for the root).
    pub fn label(&self, v: usize) -> Vec<usize> {
        let parent = self.parents();
        let children = self.children();
        let mut label = Vec::new();
        let mut u = v;
        while let Some(p) = parent[u] {
            let pos = children[p].iter().position(|&c| c == u).unwrap();
            label.push(pos + 1);
            u = p;
        }
        label.reverse();
        label
    }

    pub fn subtree_sizes(&self) -> Vec<usize> {
        let parent = self.parents();
        let mut size = vec![1; self.zeta()];
        for v in (1..self.zeta()).rev() {
            size[parent[v].unwrap()] += size[v];
        }
        size
    }

    pub fn lukasiewicz(&self) -> LukasiewiczPath {
        let mut values = Vec::with_capacity(self.zeta() + 1);
        let mut w: i64 = 0;
        values.push(0);
        for &k in &self.code {
            w += k as i64 - 1;
            values.push(w);
        }
        LukasiewiczPath { values }
    }

    pub fn from_lukasiewicz(path: &LukasiewiczPath) -> Result<Self> {
        let code = path
            .values
            .windows(2)
            .map(|w| w[1] - w[0] + 1)
            .map(|k| usize::try_from(k).map_err(|_| Error::InvalidPath("step below -1".into())))
            .collect::<Result<Vec<_>>>()?;
        PlaneTree::from_code(code)
    }
}

fn check_code(code: &[usize]) -> Result<()> {
    if code.is_empty() {
        return Err(Error::InvalidTree("empty code".into()));
    }
    let n = code.len();
    let mut w: i64 = 0;
    for (i, &k) in code.iter().enumerate() {
        w += k as i64 - 1;
        if i + 1 < n && w < 0 {
            return Err(Error::InvalidTree(format!(
                "partial sum negative after vertex {i}"
            )));
        }
    }
    if w != -1 {
        return Err(Error::InvalidTree(format!("total sum {w}, expected -1")));
    }
    Ok(())
}

impl TryFrom<Vec<usize>> for PlaneTree {
    type Error = Error;
    fn try_from(code: Vec<usize>) -> Result<Self> {
        PlaneTree::from_code(code)
    }
}

impl From<PlaneTree> for Vec<usize> {
    fn from(t: PlaneTree) -> Vec<usize> {
        t.code
    }
}

impl fmt::Display for PlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, self.code.iter())
    }
}

impl FromStr for PlaneTree {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let code = s
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("child count {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PlaneTree::from_code(code)
    }
}

fn write_joined<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: impl Iterator<Item = T>,
) -> fmt::Result {
    for (i, x) in items.enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

/// Walk of partial sums of `k - 1` along the depth-first order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LukasiewiczPath {
    values: Vec<i64>,
}

impl LukasiewiczPath {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidPath("needs at least two values".into()));
        }
        if values[0] != 0 {
            return Err(Error::InvalidPath("must start at 0".into()));
        }
        if values[n - 1] != -1 {
            return Err(Error::InvalidPath("must end at -1".into()));
        }
        if let Some(i) = values[..n - 1].iter().position(|&w| w < 0) {
            return Err(Error::InvalidPath(format!("negative value at index {i}")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] - w[0] < -1) {
            return Err(Error::InvalidPath(format!("step below -1 at index {i}")));
        }
        Ok(LukasiewiczPath { values })
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Number of steps, equal to ζ of the encoded tree.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max(&self) -> i64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Largest increment `W_{i+1} - W_i`.
    pub fn max_jump(&self) -> i64 {
        self.values.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(-1)
    }
}

/// Plane tree together with one mark per vertex, `0 <= mark <= k_v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MarkedTree {
    shape: PlaneTree,
    marks: Vec<usize>,
}

impl MarkedTree {
    pub fn new(shape: PlaneTree, marks: Vec<usize>) -> Result<Self> {
        if marks.len() != shape.zeta() {
            return Err(Error::InvalidMarks(format!(
                "{} marks for {} vertices",
                marks.len(),
                shape.zeta()
            )));
        }
        if let Some(v) = (0..marks.len()).find(|&v| marks[v] > shape.child_count(v)) {
            return Err(Error::InvalidMarks(format!(
                "vertex {v} has mark {} but only {} children",
                marks[v],
                shape.child_count(v)
            )));
        }
        Ok(MarkedTree { shape, marks })
    }

    pub fn shape(&self) -> &PlaneTree {
        &self.shape
    }

    pub fn marks(&self) -> &[usize] {
        &self.marks
    }

    pub fn zeta(&self) -> usize {
        self.shape.zeta()
    }

    pub fn root_mark(&self) -> usize {
        self.marks[0]
    }

    /// Uniform marks on a given shape.
    pub fn random_marks<R: Rng + ?Sized>(shape: PlaneTree, rng: &mut R) -> Self {
        let marks = shape
            .code()
            .iter()
            .map(|&k| rng.random_range(0..=k))
            .collect();
        MarkedTree { shape, marks }
    }
}

impl fmt::Display for MarkedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(
            f,
            self.shape
                .code()
                .iter()
                .zip(&self.marks)
                .map(|(k, m)| format!("{k}:{m}")),
        )
    }
}

impl FromStr for MarkedTree {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut code = Vec::new();
        let mut marks = Vec::new();
        for tok in s.split_whitespace() {
            let (k, m) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected k:m, got {tok:?}")))?;
            code.push(k.parse().map_err(|e| Error::Parse(format!("{tok:?}: {e}")))?);
            marks.push(m.parse().map_err(|e| Error::Parse(format!("{tok:?}: {e}")))?);
        }
        MarkedTree::new(PlaneTree::from_code(code)?, marks)
    }
}

/// All plane trees with `n` vertices, in lexicographic order of their codes.
pub fn enumerate_trees(n: usize) -> Result<Vec<PlaneTree>> {
    if n > MAX_TREE_ENUMERATION {
        return Err(Error::SizeGuard {
            what: "tree enumeration",
            n,
            max: MAX_TREE_ENUMERATION,
        });
    }
    enumerate_trees_unguarded(n)
}

/// [`enumerate_trees`] without the size guard.
pub fn enumerate_trees_unguarded(n: usize) -> Result<Vec<PlaneTree>> {
    if n == 0 {
        return Err(Error::InvalidTree("trees have at least one vertex".into()));
    }
    let mut out = Vec::new();
    let mut code = Vec::with_capacity(n);
    extend_codes(n, 0, &mut code, &mut out);
    Ok(out)
}

fn extend_codes(n: usize, w: i64, code: &mut Vec<usize>, out: &mut Vec<PlaneTree>) {
    let i = code.len();
    if i == n {
        if w == -1 {
            out.push(PlaneTree { code: code.clone() });
        }
        return;
    }
    // after this step there are n - i - 1 steps left, each lowering W by at most 1
    let remaining = (n - i - 1) as i64;
    for k in 0..n {
        let next = w + k as i64 - 1;
        let feasible = if remaining == 0 { next == -1 } else { next >= 0 && next < remaining };
        if next >= remaining {
            break;
        }
        if feasible {
            code.push(k);
            extend_codes(n, next, code, out);
            code.pop();
        }
    }
}

/// All marked trees with `n` vertices.
pub fn enumerate_marked(n: usize) -> Result<Vec<MarkedTree>> {
    if n > MAX_MARKED_ENUMERATION {
        return Err(Error::SizeGuard {
            what: "marked tree enumeration",
            n,
            max: MAX_MARKED_ENUMERATION,
        });
    }
    let mut out = Vec::new();
    for shape in enumerate_trees_unguarded(n)? {
        let mut marks = vec![0; n];
        loop {
            out.push(MarkedTree {
                shape: shape.clone(),
                marks: marks.clone(),
            });
            // mixed-radix increment
            let mut v = 0;
            while v < n {
                if marks[v] < shape.code[v] {
                    marks[v] += 1;
                    break;
                }
                marks[v] = 0;
                v += 1;
            }
            if v == n {
                break;
            }
        }
    }
    Ok(out)
}

/// Uniform plane tree with `n` vertices: a shuffled word of `n - 1` up-steps
/// and `n` down-steps, rotated by the cycle lemma.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PlaneTree> {
    use rand::seq::SliceRandom;
    if n == 0 {
        return Err(Error::InvalidTree("trees have at least one vertex".into()));
    }
    let mut word: Vec<i8> = std::iter::repeat_n(1, n - 1)
        .chain(std::iter::repeat_n(-1, n))
        .collect();
    word.shuffle(rng);
    let mut sum = 0i64;
    let mut best = (0i64, 0usize);
    for (i, &x) in word.iter().enumerate() {
        sum += x as i64;
        if sum < best.0 {
            best = (sum, i + 1);
        }
    }
    let len = word.len();
    word.rotate_left(best.1 % len);
    let mut code = Vec::with_capacity(n);
    let mut ups = 0;
    for &x in &word {
        if x > 0 {
            ups += 1;
        } else {
            code.push(ups);
            ups = 0;
        }
    }
    PlaneTree::from_code(code)
}

/// Number of markings of a shape, ∏ (k_v + 1).
pub fn marking_count(shape: &PlaneTree) -> u128 {
    shape.code().iter().map(|&k| k as u128 + 1).product()
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Catalan number C_m.
pub fn catalan(m: u64) -> u128 {
    binomial(2 * m, m) / (m as u128 + 1)
}
