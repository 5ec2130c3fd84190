//! Halin maps: a plane tree whose leaves are joined cyclically in
//! lexicographic order, rooted at the root edge of the tree, with a half-edge
//! at the root vertex inside the root face.
//!
//! Dart layout for a tree with `N` vertices and leaves `ℓ_0 < … < ℓ_{λ-1}`:
//!
//! * `2(c-1)` goes from the parent of `c` down to `c`, `2(c-1)+1` back up;
//! * boundary edge `i` joins `ℓ_i` to `ℓ_{i+1 mod λ}`: dart `2(N-1)+2i` leaves
//!   `ℓ_i`, dart `2(N-1)+2i+1` leaves `ℓ_{i+1}`;
//! * the half-edge is the last dart, sitting at the root between its first and
//!   second child.
//!
//! The unbounded face is the orbit of the forward boundary darts. The root
//! face is the face to the left of the root edge.

use std::fmt;
use std::str::FromStr;

use num::{BigRational, One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::planar_map::{rooted_isomorphism, Orbits, PlanarMap};
use crate::plane_tree::{enumerate_trees_unguarded, random_tree, PlaneTree};

/// Largest `n` accepted by [`enumerate_halin`].
pub const MAX_HALIN_ENUMERATION: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalinMap {
    map: PlanarMap,
    tree: PlaneTree,
    leaf_cycle: Vec<usize>,
    dart_origin: Vec<usize>,
}

/// Face weights `w(k)` for faces of degree `k`.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    Ones,
    /// `w(k) = k`.
    Degree,
    /// `w(k) = table[k]`, zero past the end.
    Table(Vec<f64>),
    /// `w(k) = k^(-exponent)`.
    PowerLaw(f64),
}

impl Weights {
    pub fn value(&self, k: usize) -> f64 {
        match self {
            Weights::Ones => 1.0,
            Weights::Degree => k as f64,
            Weights::Table(t) => t.get(k).copied().unwrap_or(0.0),
            Weights::PowerLaw(s) => (k as f64).powf(-s),
        }
    }

    /// Exact value; table and power-law entries are taken as the rational
    /// number equal to their floating-point value.
    pub fn exact(&self, k: usize) -> BigRational {
        match self {
            Weights::Ones => BigRational::one(),
            Weights::Degree => BigRational::from_integer(k.into()),
            _ => BigRational::from_float(self.value(k)).unwrap_or_else(BigRational::zero),
        }
    }

    /// Largest degree with non-zero weight, when finite.
    pub fn support_end(&self) -> Option<usize> {
        match self {
            Weights::Table(t) => t.iter().rposition(|&x| x > 0.0),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Weights::Table(t) => t.iter().all(|x| x.is_finite() && *x >= 0.0),
            Weights::PowerLaw(s) => s.is_finite(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("weights {self} must be finite and non-negative")))
        }
    }
}

impl Serialize for Weights {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weights::Ones => f.write_str("ones"),
            Weights::Degree => f.write_str("degree"),
            Weights::PowerLaw(s) => write!(f, "power:{s}"),
            Weights::Table(t) => {
                f.write_str("table:")?;
                let entries: Vec<String> = t
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x != 0.0)
                    .map(|(k, x)| format!("{k}={x}"))
                    .collect();
                f.write_str(&entries.join(","))
            }
        }
    }
}

impl FromStr for Weights {
    type Err = Error;

    /// `ones`, `degree`, `power:<s>` or `table:<k>=<w>,<k>=<w>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse(format!("weights {s:?}: {msg}"));
        let w = match s.split_once(':') {
            None if s == "ones" => Weights::Ones,
            None if s == "degree" => Weights::Degree,
            Some(("power", x)) => Weights::PowerLaw(x.parse().map_err(|e| bad(format!("{e}")))?),
            Some(("table", entries)) => {
                let mut table = Vec::new();
                for entry in entries.split(',').filter(|e| !e.is_empty()) {
                    let (k, v) = entry
                        .split_once('=')
                        .ok_or_else(|| bad(format!("expected k=w, got {entry:?}")))?;
                    let k: usize = k.trim().parse().map_err(|e| bad(format!("{e}")))?;
                    let v: f64 = v.trim().parse().map_err(|e| bad(format!("{e}")))?;
                    if table.len() <= k {
                        table.resize(k + 1, 0.0);
                    }
                    table[k] = v;
                }
                Weights::Table(table)
            }
            _ => return Err(bad("unknown form".into())),
        };
        w.validate()?;
        Ok(w)
    }
}

/// Every internal vertex has exactly one child that is a leaf.
pub fn satisfies_hstar(tree: &PlaneTree) -> bool {
    let children = tree.children();
    (0..tree.zeta()).all(|v| {
        tree.is_leaf(v) || children[v].iter().filter(|&&c| tree.is_leaf(c)).count() == 1
    })
}

/// Halin map of a tree with at least one edge.
pub fn build_halin(tree: &PlaneTree) -> Result<HalinMap> {
    let n = tree.zeta();
    if n < 2 {
        return Err(Error::NotHalin("the tree has no root edge".into()));
    }
    let leaves = tree.leaves();
    let lambda = leaves.len();
    let children = tree.children();
    let base = 2 * (n - 1);
    let half = base + 2 * lambda;
    let darts = half + 1;

    let down = |c: usize| 2 * (c - 1);
    let up = |c: usize| 2 * (c - 1) + 1;
    let fwd = |i: usize| base + 2 * i;
    let bwd = |i: usize| base + 2 * i + 1;

    let mut twin: Vec<usize> = (0..darts).map(|d| d ^ 1).collect();
    twin[half] = half;

    let mut dart_origin = vec![0; darts];
    let mut leaf_index = vec![usize::MAX; n];
    for (i, &l) in leaves.iter().enumerate() {
        leaf_index[l] = i;
    }
    let rotations: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut rot = Vec::with_capacity(children[v].len() + 3);
            if v == 0 {
                rot.push(down(children[0][0]));
                rot.push(half);
                rot.extend(children[0][1..].iter().map(|&c| down(c)));
            } else {
                rot.push(up(v));
                if tree.is_leaf(v) {
                    let i = leaf_index[v];
                    rot.push(bwd((i + lambda - 1) % lambda));
                    rot.push(fwd(i));
                } else {
                    rot.extend(children[v].iter().map(|&c| down(c)));
                }
            }
            for &d in &rot {
                dart_origin[d] = v;
            }
            rot
        })
        .collect();
    let root_dart = down(children[0][0]);
    let map = PlanarMap::from_rotations(twin, &rotations, Some(root_dart), Some(half))?;
    Ok(HalinMap {
        map,
        tree: tree.clone(),
        leaf_cycle: leaves,
        dart_origin,
    })
}

impl HalinMap {
    pub fn map(&self) -> &PlanarMap {
        &self.map
    }

    /// The underlying tree H°.
    pub fn tree(&self) -> &PlaneTree {
        &self.tree
    }

    pub fn leaf_cycle(&self) -> &[usize] {
        &self.leaf_cycle
    }

    /// Tree vertex at which dart `d` starts.
    pub fn origin(&self, d: usize) -> usize {
        self.dart_origin[d]
    }

    pub fn vertex_count(&self) -> usize {
        self.tree.zeta()
    }

    /// Number of bounded faces; equals `n` for members of ℍₙ.
    pub fn size(&self) -> usize {
        self.leaf_cycle.len()
    }

    pub fn tree_dart_count(&self) -> usize {
        2 * (self.tree.zeta() - 1)
    }

    pub fn half_edge(&self) -> usize {
        self.map.dart_count() - 1
    }

    pub fn root_dart(&self) -> usize {
        self.map.root_dart().expect("Halin maps have a root edge")
    }

    /// A dart of the unbounded face.
    pub fn outer_dart(&self) -> usize {
        self.tree_dart_count()
    }

    pub fn is_tree_dart(&self, d: usize) -> bool {
        d < self.tree_dart_count()
    }

    pub fn is_boundary_dart(&self, d: usize) -> bool {
        d >= self.tree_dart_count() && d != self.half_edge()
    }

    /// Dart from the parent of `c` to `c`.
    pub fn down_dart(&self, c: usize) -> usize {
        2 * (c - 1)
    }

    /// Child endpoint of the tree edge containing dart `d`.
    pub fn tree_edge_child(&self, d: usize) -> usize {
        d / 2 + 1
    }

    pub fn faces(&self) -> Orbits {
        self.map.faces()
    }

    /// Bounded faces as (face id, degree), the half-edge counted in the root
    /// face.
    pub fn bounded_faces(&self) -> Vec<(usize, usize)> {
        let faces = self.faces();
        let outer = faces.of[self.outer_dart()];
        faces
            .cycles
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != outer)
            .map(|(f, c)| (f, c.len()))
            .collect()
    }

    /// Graph on the tree vertices (half-edge excluded).
    pub fn graph(&self) -> Graph {
        let mut edges = Vec::with_capacity(self.map.edge_count());
        for d in (0..self.half_edge()).step_by(2) {
            edges.push((self.dart_origin[d], self.dart_origin[d + 1]));
        }
        Graph::from_edges(self.vertex_count(), &edges)
    }

    /// Checks the structural properties of a Halin map; with `hstar`, also
    /// the counts forced by condition (H★).
    pub fn validate(&self, hstar: bool) -> Result<()> {
        let fail = |m: String| Err(Error::NotHalin(m));
        let m = &self.map;
        if m.euler_characteristic() != 2 {
            return fail("Euler characteristic is not 2".into());
        }
        let faces = self.faces();
        let outer = faces.of[self.outer_dart()];
        if faces.of[self.half_edge()] == outer {
            return fail("half-edge lies in the unbounded face".into());
        }
        let mut shared = vec![0usize; faces.len()];
        for &d in &faces.cycles[outer] {
            let t = m.twin(d);
            if faces.of[t] == outer {
                return fail(format!("edge of dart {d} has the unbounded face on both sides"));
            }
            shared[faces.of[t]] += 1;
        }
        if let Some(f) = (0..faces.len()).find(|&f| f != outer && shared[f] != 1) {
            return fail(format!(
                "bounded face {f} shares {} edges with the unbounded face",
                shared[f]
            ));
        }
        let vertices = m.vertices();
        for &l in &self.leaf_cycle {
            let deg = vertices.cycles[vertices.of[self.leaf_dart(l)]].len();
            if deg != 3 {
                return fail(format!("boundary vertex {l} has degree {deg}"));
            }
        }
        if faces.cycles[outer].len() != self.leaf_cycle.len() {
            return fail("boundary cycle does not visit every leaf".into());
        }
        if !self.graph().is_biconnected() {
            return fail("not two-connected".into());
        }
        if hstar {
            if !satisfies_hstar(&self.tree) {
                return Err(Error::HstarViolated(self.tree.to_string()));
            }
            let n = self.size();
            if self.vertex_count() != 2 * n
                || m.edge_count() != 3 * n - 1
                || m.face_count() != n + 1
            {
                return fail(format!(
                    "(V, E, F) = ({}, {}, {}) for n = {n}",
                    self.vertex_count(),
                    m.edge_count(),
                    m.face_count()
                ));
            }
        }
        Ok(())
    }

    fn leaf_dart(&self, leaf: usize) -> usize {
        // the up dart of a leaf sits at the leaf
        2 * (leaf - 1) + 1
    }

    /// Recovers a Halin map from a rooted planar map with a half-edge whose
    /// unbounded face contains `outer_dart`, checking that the map is
    /// exactly the Halin map of the recovered tree.
    ///
    /// Without `outer_dart`, the serialization convention of this crate is
    /// tried first (the first dart after the tree darts is a boundary dart);
    /// failing that every face is tried and the answer must be unique.
    pub fn from_map(map: &PlanarMap, outer_dart: Option<usize>) -> Result<HalinMap> {
        let h = map
            .half_edge()
            .ok_or_else(|| Error::NotHalin("no half-edge".into()))?;
        map.root_dart()
            .ok_or_else(|| Error::NotHalin("no root dart".into()))?;
        let faces = map.faces();
        if let Some(o) = outer_dart {
            if o >= map.dart_count() {
                return Err(Error::NotHalin(format!("outer dart {o} out of range")));
            }
            return halin_with_outer_face(map, &faces, faces.of[o])
                .ok_or_else(|| Error::NotHalin(format!("not a Halin map with dart {o} outside")));
        }
        let conventional = 2 * (map.vertex_count() - 1);
        if conventional < map.dart_count() {
            if let Some(found) = halin_with_outer_face(map, &faces, faces.of[conventional]) {
                return Ok(found);
            }
        }
        let found: Vec<HalinMap> = (0..faces.len())
            .filter(|&f| f != faces.of[h])
            .filter_map(|f| halin_with_outer_face(map, &faces, f))
            .collect();
        match found.len() {
            0 => Err(Error::NotHalin("no face makes the map a Halin map".into())),
            1 => Ok(found.into_iter().next().unwrap()),
            k => Err(Error::NotHalin(format!(
                "{k} faces qualify as the unbounded face; pass the outer dart"
            ))),
        }
    }

    /// W(H) = ∏ w(deg f) over bounded faces.
    pub fn weight(&self, w: &Weights) -> Result<f64> {
        let mut acc = 1.0;
        for (_, deg) in self.bounded_faces() {
            if deg < 4 {
                return Err(Error::DegreeTooSmall(deg));
            }
            acc *= w.value(deg);
        }
        Ok(acc)
    }

    pub fn weight_exact(&self, w: &Weights) -> Result<BigRational> {
        let mut acc = BigRational::one();
        for (_, deg) in self.bounded_faces() {
            if deg < 4 {
                return Err(Error::DegreeTooSmall(deg));
            }
            acc *= w.exact(deg);
        }
        Ok(acc)
    }
}

fn halin_with_outer_face(map: &PlanarMap, faces: &Orbits, outer: usize) -> Option<HalinMap> {
    let h = map.half_edge()?;
    let root = map.root_dart()?;
    if outer == faces.of[h] {
        return None;
    }
    let mut boundary = vec![false; map.dart_count()];
    for &d in &faces.cycles[outer] {
        boundary[d] = true;
        boundary[map.twin(d)] = true;
    }
    if boundary[root] {
        return None;
    }
    let tree = tree_below(map, root, h, &boundary)?;
    let candidate = build_halin(&tree).ok()?;
    let sigma = rooted_isomorphism(map, &candidate.map)?;
    let image_faces = candidate.faces();
    let outer_dart = faces.cycles[outer][0];
    (image_faces.of[sigma[outer_dart]] == image_faces.of[candidate.outer_dart()]).then_some(candidate)
}

/// Depth-first reading of the tree hanging from `root`, skipping the
/// half-edge and the darts flagged as boundary. `None` if this does not give
/// a tree spanning every vertex.
fn tree_below(map: &PlanarMap, root: usize, half: usize, boundary: &[bool]) -> Option<PlaneTree> {
    let n_vertices = map.vertex_count();
    let vertices = map.vertices();
    let mut seen = vec![false; vertices.len()];
    seen[vertices.of[root]] = true;
    let mut code = Vec::with_capacity(n_vertices);
    // each frame lists the darts leading to the children of a vertex
    let mut stack: Vec<std::vec::IntoIter<usize>> = Vec::new();
    let child_darts = |first: usize, skip_first: bool| -> Vec<usize> {
        let mut out = Vec::new();
        let mut d = first;
        loop {
            if !(skip_first && d == first) && d != half && !boundary[d] {
                out.push(d);
            }
            d = map.next(d);
            if d == first {
                break;
            }
        }
        out
    };
    let root_children = child_darts(root, false);
    code.push(root_children.len());
    stack.push(root_children.into_iter());
    while let Some(frame) = stack.last_mut() {
        match frame.next() {
            Some(d) => {
                let t = map.twin(d);
                let v = vertices.of[t];
                if seen[v] {
                    return None;
                }
                seen[v] = true;
                let kids = child_darts(t, true);
                code.push(kids.len());
                stack.push(kids.into_iter());
            }
            None => {
                stack.pop();
            }
        }
    }
    if code.len() != n_vertices {
        return None;
    }
    PlaneTree::from_code(code).ok()
}

/// Random (H★) tree with `2n` vertices: a uniform plane tree on `n`
/// vertices, each of which receives one extra leaf child at a uniform
/// position among its `k + 1` child slots. Every (H★) tree arises this way
/// in exactly one way.
pub fn random_hstar_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PlaneTree> {
    let base = random_tree(n, rng)?;
    let slots: Vec<usize> = base.code().iter().map(|&k| rng.random_range(0..=k)).collect();
    Ok(insert_leaves(&base, &slots))
}

/// Gives every vertex of `base` one new leaf child placed before its
/// `slots[v]`-th original child (after all of them when `slots[v] = k_v`).
pub fn insert_leaves(base: &PlaneTree, slots: &[usize]) -> PlaneTree {
    let children = base.children();
    let mut code = Vec::with_capacity(2 * base.zeta());
    // depth-first walk emitting the new code; `None` stands for an inserted leaf
    let mut stack: Vec<Option<usize>> = vec![Some(0)];
    while let Some(item) = stack.pop() {
        match item {
            None => code.push(0),
            Some(v) => {
                let kids = &children[v];
                code.push(kids.len() + 1);
                let mut order: Vec<Option<usize>> = kids.iter().map(|&c| Some(c)).collect();
                order.insert(slots[v], None);
                stack.extend(order.into_iter().rev());
            }
        }
    }
    PlaneTree::from_code(code).expect("leaf insertion keeps a valid code")
}

/// Inverse of [`insert_leaves`] on (H★) trees: the internal subtree and the
/// position of each leaf child.
pub fn remove_leaves(tree: &PlaneTree) -> Result<(PlaneTree, Vec<usize>)> {
    if !satisfies_hstar(tree) || tree.zeta() < 2 {
        return Err(Error::HstarViolated(tree.to_string()));
    }
    let children = tree.children();
    let mut code = Vec::new();
    let mut slots = Vec::new();
    for v in 0..tree.zeta() {
        if tree.is_leaf(v) {
            continue;
        }
        let kids = &children[v];
        code.push(kids.len() - 1);
        slots.push(kids.iter().position(|&c| tree.is_leaf(c)).unwrap());
    }
    Ok((PlaneTree::from_code(code)?, slots))
}

/// All members of ℍₙ: Halin maps of (H★) trees with `2n` vertices.
pub fn enumerate_halin(n: usize) -> Result<Vec<HalinMap>> {
    if n > MAX_HALIN_ENUMERATION {
        return Err(Error::SizeGuard {
            what: "Halin map enumeration",
            n,
            max: MAX_HALIN_ENUMERATION,
        });
    }
    enumerate_halin_unguarded(n)
}

pub fn enumerate_halin_unguarded(n: usize) -> Result<Vec<HalinMap>> {
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    enumerate_trees_unguarded(2 * n)?
        .into_par_iter()
        .filter(satisfies_hstar)
        .map(|t| build_halin(&t))
        .collect()
}

/// Number of (H★) trees with `2n` vertices, counted without building maps.
pub fn count_halin(n: usize) -> Result<usize> {
    if n > MAX_HALIN_ENUMERATION {
        return Err(Error::SizeGuard {
            what: "Halin map enumeration",
            n,
            max: MAX_HALIN_ENUMERATION,
        });
    }
    Ok(enumerate_trees_unguarded(2 * n)?
        .par_iter()
        .filter(|t| satisfies_hstar(t))
        .count())
}
