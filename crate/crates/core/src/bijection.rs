//! The bijection between ℍₙ and marked trees with `n` vertices.
//!
//! Forward direction: the weak dual of a Halin map `H` is a dissection `D` of
//! a polygon whose sides are the duals of the leaf edges of H°. Removing the
//! sides leaves a plane tree `T` on the bounded faces, rooted at the face
//! holding the half-edge. Each vertex of `D` has exactly one corner on the
//! unbounded side of the polygon; the mark of a vertex records that corner,
//! except at the root where it records the position of the half-edge.
//!
//! Around a vertex of `D` we read darts in the order of the boundary walk of
//! the corresponding face of `H` (clockwise in `D`).

use std::collections::HashMap;

use num::{BigRational, One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halin::{build_halin, enumerate_halin, satisfies_hstar, HalinMap, Weights};
use crate::planar_map::{PlanarMap, SubMap};
use crate::plane_tree::{enumerate_trees, MarkedTree, PlaneTree};

/// The weak dual of a Halin map with its polygon and the root vertex.
#[derive(Clone, Debug)]
pub struct MarkedDissection {
    /// The dissection; dart ids are local, see `dual.original`.
    pub dual: SubMap,
    /// Per dissection dart: is it a side of the polygon?
    pub polygon: Vec<bool>,
    /// Dissection vertex (index into `dual.map.vertices()`) of the half-edge.
    pub root_vertex: usize,
    /// The half-edge as a dissection dart.
    pub half_edge: usize,
}

impl MarkedDissection {
    pub fn of(h: &HalinMap) -> Result<MarkedDissection> {
        let dual = h.map().weak_dual(h.outer_dart())?;
        let tree = h.tree();
        let polygon: Vec<bool> = dual
            .original
            .iter()
            .map(|&d| h.is_tree_dart(d) && tree.is_leaf(h.tree_edge_child(d)))
            .collect();
        let half_edge = dual
            .new_id(h.half_edge())
            .ok_or_else(|| Error::Invariant("half-edge lost in the weak dual".into()))?;
        let root_vertex = dual.map.vertices().of[half_edge];
        let out = MarkedDissection {
            dual,
            polygon,
            root_vertex,
            half_edge,
        };
        out.check()?;
        Ok(out)
    }

    /// Successor of `d` in the boundary-walk order of its vertex.
    pub fn walk_next(&self, d: usize) -> usize {
        self.dual.map.prev(d)
    }

    /// Every vertex touches the polygon, and without the polygon the darts
    /// form a spanning tree (plus the half-edge).
    pub fn check(&self) -> Result<()> {
        let m = &self.dual.map;
        let vertices = m.vertices();
        let nv = vertices.len();
        for (v, cycle) in vertices.cycles.iter().enumerate() {
            let sides = cycle.iter().filter(|&&d| self.polygon[d]).count();
            if sides != 2 {
                return Err(Error::HstarViolated(format!(
                    "dissection vertex {v} meets the polygon {sides} times"
                )));
            }
        }
        // union-find over non-polygon edges: a spanning tree has nv - 1 edges, no cycle
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let z = p[y];
                p[y] = r;
                y = z;
            }
            r
        }
        let mut edges = 0;
        for d in 0..m.dart_count() {
            let t = m.twin(d);
            if d >= t || self.polygon[d] {
                continue;
            }
            let (a, b) = (find(&mut parent, vertices.of[d]), find(&mut parent, vertices.of[t]));
            if a == b {
                return Err(Error::HstarViolated("dissection minus polygon has a cycle".into()));
            }
            parent[a] = b;
            edges += 1;
        }
        if edges + 1 != nv {
            return Err(Error::HstarViolated("dissection minus polygon is disconnected".into()));
        }
        Ok(())
    }
}

/// Bookkeeping from one evaluation of the forward map.
#[derive(Clone, Debug, Serialize)]
pub struct PhiTrace {
    pub marked: MarkedTree,
    /// Face of `H` (index into `H.faces()`) for each vertex of the marked tree.
    pub face: Vec<usize>,
    /// For each vertex of the marked tree, the dart of `H` in its face that
    /// crosses to its parent; the half-edge for the root.
    pub parent_dart: Vec<usize>,
    /// Vertex of H° identified with each vertex of the marked tree: the root
    /// of H° for the root, otherwise the lower endpoint of the tree edge dual
    /// to the edge towards the parent.
    pub psi: Vec<usize>,
}

/// φ(H).
pub fn phi(h: &HalinMap) -> Result<MarkedTree> {
    Ok(phi_trace(h)?.marked)
}

pub fn phi_trace(h: &HalinMap) -> Result<PhiTrace> {
    if !satisfies_hstar(h.tree()) {
        return Err(Error::HstarViolated(h.tree().to_string()));
    }
    let dis = MarkedDissection::of(h)?;
    let m = &dis.dual.map;
    let vertices = m.vertices();
    let nv = vertices.len();

    // per dissection vertex: the darts strictly between the two polygon
    // sides, in walk order starting after the side that follows the outer corner
    let middle: Vec<Vec<usize>> = vertices
        .cycles
        .iter()
        .map(|cycle| {
            let poly_b = *cycle
                .iter()
                .find(|&&d| dis.polygon[d] && dis.polygon[dis.walk_next(d)])
                .expect("checked: two polygon sides per vertex");
            let poly_a = dis.walk_next(poly_b);
            let mut out = Vec::new();
            let mut d = dis.walk_next(poly_a);
            while d != poly_b {
                out.push(d);
                d = dis.walk_next(d);
            }
            out
        })
        .collect();

    let faces = h.faces();
    let face_of_vertex: Vec<usize> = vertices
        .cycles
        .iter()
        .map(|c| faces.of[dis.dual.original[c[0]]])
        .collect();

    // depth-first over the tree part, children in the order prescribed by marks
    let mut code = Vec::with_capacity(nv);
    let mut marks = Vec::with_capacity(nv);
    let mut face = Vec::with_capacity(nv);
    let mut parent_dart = Vec::with_capacity(nv);
    let mut psi = Vec::with_capacity(nv);

    let root_mid = &middle[dis.root_vertex];
    let h_pos = root_mid.iter().position(|&d| d == dis.half_edge).unwrap();
    let root_children: Vec<usize> = root_mid.iter().copied().filter(|&d| d != dis.half_edge).collect();
    code.push(root_children.len());
    marks.push(h_pos);
    face.push(face_of_vertex[dis.root_vertex]);
    parent_dart.push(h.half_edge());
    psi.push(0);

    let mut stack: Vec<std::vec::IntoIter<usize>> = vec![root_children.into_iter()];
    let mut visited = 1;
    while let Some(frame) = stack.last_mut() {
        let Some(d) = frame.next() else {
            stack.pop();
            continue;
        };
        let t = m.twin(d);
        let v = vertices.of[t];
        let mid = &middle[v];
        let j = mid
            .iter()
            .position(|&x| x == t)
            .ok_or_else(|| Error::Invariant("parent dart outside the middle run".into()))?;
        let mut kids: Vec<usize> = mid[j + 1..].to_vec();
        kids.extend_from_slice(&mid[..j]);
        code.push(kids.len());
        marks.push(mid.len() - 1 - j);
        face.push(face_of_vertex[v]);
        let primal = dis.dual.original[t];
        parent_dart.push(primal);
        psi.push(h.tree_edge_child(primal));
        visited += 1;
        if visited > nv {
            return Err(Error::Invariant("tree part of the dissection has a cycle".into()));
        }
        stack.push(kids.into_iter());
    }
    if visited != nv {
        return Err(Error::Invariant("tree part of the dissection is disconnected".into()));
    }
    let marked = MarkedTree::new(PlaneTree::from_code(code)?, marks)?;
    Ok(PhiTrace {
        marked,
        face,
        parent_dart,
        psi,
    })
}

/// φ⁻¹(T*): rebuilds the full dual of the Halin map (dissection plus a
/// vertex for the unbounded face) and dualizes back.
pub fn phi_inverse(marked: &MarkedTree) -> Result<HalinMap> {
    let tree = marked.shape();
    let n = tree.zeta();
    let marks = marked.marks();
    let children = tree.children();

    // dart ids
    let down = |c: usize| 2 * (c - 1); // in the parent's face, towards c
    let up = |c: usize| 2 * (c - 1) + 1; // in c's face, towards the parent
    let base = 2 * (n - 1);
    let poly_a = |v: usize| base + 4 * v;
    let poly_b = |v: usize| base + 4 * v + 1;
    let spoke = |v: usize| base + 4 * v + 2; // in v's face, crossing the boundary
    let apex = |v: usize| base + 4 * v + 3; // twin of the spoke, in the unbounded face
    let half = base + 4 * n;
    let darts = half + 1;

    // outer corners in depth-first contour order
    let mut corner_order = Vec::with_capacity(n);
    corner_order.push(0);
    {
        // frames: (vertex, next child index)
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            // each value of `i` is seen exactly once per vertex
            if v != 0 && *i == marks[v] {
                corner_order.push(v);
            }
            if *i < children[v].len() {
                let c = children[v][*i];
                *i += 1;
                stack.push((c, 0));
            } else {
                stack.pop();
            }
        }
    }
    debug_assert_eq!(corner_order.len(), n);

    let mut twin = vec![usize::MAX; darts];
    let pair = |a: usize, b: usize, twin: &mut Vec<usize>| {
        twin[a] = b;
        twin[b] = a;
    };
    for c in 1..n {
        pair(down(c), up(c), &mut twin);
    }
    for v in 0..n {
        pair(spoke(v), apex(v), &mut twin);
    }
    // walking the polygon from s_i to s_{i-1}
    for i in 0..n {
        let s = corner_order[i];
        let prev = corner_order[(i + n - 1) % n];
        pair(poly_b(s), poly_a(prev), &mut twin);
    }
    twin[half] = half;

    // face-walk successor X on every dart
    let mut walk = vec![usize::MAX; darts];
    let cyc = |list: &[usize], walk: &mut Vec<usize>| {
        for (i, &d) in list.iter().enumerate() {
            walk[d] = list[(i + 1) % list.len()];
        }
    };
    for v in 0..n {
        let kids: Vec<usize> = children[v].iter().map(|&c| down(c)).collect();
        let j = marks[v];
        let mut list = Vec::with_capacity(kids.len() + 4);
        if v == 0 {
            list.extend([spoke(0), poly_a(0)]);
            list.extend_from_slice(&kids[..j]);
            list.push(half);
            list.extend_from_slice(&kids[j..]);
            list.push(poly_b(0));
        } else {
            list.push(up(v));
            list.extend_from_slice(&kids[..j]);
            list.extend([poly_b(v), spoke(v), poly_a(v)]);
            list.extend_from_slice(&kids[j..]);
        }
        cyc(&list, &mut walk);
    }
    let apex_list: Vec<usize> = (0..n).map(|i| apex(corner_order[(n - i) % n])).collect();
    cyc(&apex_list, &mut walk);

    // dualize back: next_H(d) = X(twin(d))
    let next: Vec<usize> = (0..darts).map(|d| walk[twin[d]]).collect();
    let before_half = (0..darts).find(|&d| walk[d] == half).unwrap();
    let root = twin[before_half];
    let map = PlanarMap::new(twin, next, Some(root), Some(half))?;
    let boundary: Vec<bool> = (0..darts)
        .map(|d| d != half && d >= base && (d - base) % 4 >= 2)
        .collect();
    let u = tree_of_map(&map, root, half, &boundary)?;
    let h = build_halin(&u)?;
    debug_assert!(crate::planar_map::rooted_isomorphism(&map, h.map()).is_some());
    Ok(h)
}

fn tree_of_map(map: &PlanarMap, root: usize, half: usize, boundary: &[bool]) -> Result<PlaneTree> {
    let vertices = map.vertices();
    let skip = |d: usize| d == half || boundary[d];
    let mut code = Vec::with_capacity(vertices.len());
    let around = |first: usize, include_first: bool| -> Vec<usize> {
        let mut out = Vec::new();
        let mut d = first;
        loop {
            if (include_first || d != first) && !skip(d) {
                out.push(d);
            }
            d = map.next(d);
            if d == first {
                break;
            }
        }
        out
    };
    let kids = around(root, true);
    code.push(kids.len());
    let mut stack = vec![kids.into_iter()];
    while let Some(frame) = stack.last_mut() {
        match frame.next() {
            Some(d) => {
                let kids = around(map.twin(d), false);
                code.push(kids.len());
                if code.len() > vertices.len() {
                    return Err(Error::Invariant("rebuilt tree has a cycle".into()));
                }
                stack.push(kids.into_iter());
            }
            None => {
                stack.pop();
            }
        }
    }
    PlaneTree::from_code(code)
}

/// φ⁻¹ by table lookup over the enumeration of ℍₙ; a reference for small `n`.
pub struct InverseTable {
    table: HashMap<MarkedTree, HalinMap>,
}

impl InverseTable {
    pub fn build(n: usize) -> Result<InverseTable> {
        let maps = enumerate_halin(n)?;
        let images: Vec<(MarkedTree, HalinMap)> = maps
            .into_par_iter()
            .map(|h| phi(&h).map(|t| (t, h)))
            .collect::<Result<_>>()?;
        let count = images.len();
        let table: HashMap<_, _> = images.into_iter().collect();
        if table.len() != count {
            return Err(Error::Invariant(format!(
                "φ is not injective: {count} maps, {} images",
                table.len()
            )));
        }
        Ok(InverseTable { table })
    }

    pub fn get(&self, t: &MarkedTree) -> Option<&HalinMap> {
        self.table.get(t)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Outcome of checking φ over ℍₙ.
#[derive(Clone, Debug, Serialize)]
pub struct RoundTripReport {
    pub n: usize,
    pub total: usize,
    pub ok: usize,
    pub failures: Vec<String>,
}

impl RoundTripReport {
    pub fn passed(&self) -> bool {
        self.ok == self.total && self.failures.is_empty()
    }
}

/// Exhaustive check: φ is injective on ℍₙ with image the marked trees, and
/// both compositions with φ⁻¹ are identities.
pub fn exhaustive_round_trip(n: usize) -> Result<RoundTripReport> {
    let maps = enumerate_halin(n)?;
    let marked = crate::plane_tree::enumerate_marked(n)?;
    let mut failures = Vec::new();
    let results: Vec<std::result::Result<MarkedTree, String>> = maps
        .par_iter()
        .map(|h| {
            let t = phi(h).map_err(|e| format!("φ({}) failed: {e}", h.tree()))?;
            let back = phi_inverse(&t).map_err(|e| format!("φ⁻¹({t}) failed: {e}"))?;
            if &back != h {
                return Err(format!("φ⁻¹(φ(H)) ≠ H for H° = {}", h.tree()));
            }
            Ok(t)
        })
        .collect();
    let mut images = Vec::new();
    for r in results {
        match r {
            Ok(t) => images.push(t),
            Err(e) => failures.push(e),
        }
    }
    let ok_maps = images.len();
    images.sort();
    images.dedup();
    if images.len() != ok_maps {
        failures.push(format!("φ not injective: {} distinct images", images.len()));
    }
    let mut expected = marked.clone();
    expected.sort();
    if failures.is_empty() && images != expected {
        failures.push("image of φ is not the set of marked trees".into());
    }
    for t in &marked {
        match phi_inverse(t).and_then(|h| phi(&h)) {
            Ok(back) if &back == t => {}
            Ok(back) => failures.push(format!("φ(φ⁻¹({t})) = {back}")),
            Err(e) => failures.push(format!("φ⁻¹({t}): {e}")),
        }
    }
    Ok(RoundTripReport {
        n,
        total: maps.len(),
        ok: ok_maps,
        failures,
    })
}

/// Exact comparison of the law of the shape of φ(H) under Boltzmann
/// weights with the conditioned Galton-Watson law.
#[derive(Clone, Debug, Serialize)]
pub struct PushforwardReport {
    pub n: usize,
    pub weights: String,
    pub shapes: Vec<ShapeMass>,
    /// Largest |boltzmann − gw| over shapes, as a float.
    pub max_discrepancy: f64,
    pub exact_match: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeMass {
    pub shape: String,
    pub boltzmann: String,
    pub galton_watson: String,
}

/// For each shape `T` with `n` vertices: the Boltzmann mass
/// `Σ_{H: shape φ(H) = T} W(H) / Z_n`, and the conditioned Galton-Watson
/// mass `∏ μ(k_v) / Σ_T ∏ μ(k_v)` with `μ(k) ∝ (k+1) w(k+4) b^k`; the
/// common factors `a` and `b` cancel on trees of a fixed size, so the
/// unnormalised `∏ (k_v+1) w(k_v+4)` is used.
pub fn pushforward_distribution(n: usize, w: &Weights) -> Result<PushforwardReport> {
    let maps = enumerate_halin(n)?;
    let shapes = enumerate_trees(n)?;
    let index: HashMap<PlaneTree, usize> =
        shapes.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();

    let mut boltzmann = vec![BigRational::zero(); shapes.len()];
    for h in &maps {
        let t = phi(h)?;
        boltzmann[index[t.shape()]] += h.weight_exact(w)?;
    }
    let z: BigRational = boltzmann.iter().cloned().sum();
    if z.is_zero() {
        return Err(Error::ZeroPartition(n));
    }
    let gw_raw: Vec<BigRational> = shapes
        .iter()
        .map(|t| {
            t.code().iter().fold(BigRational::one(), |acc, &k| {
                acc * BigRational::from_integer((k + 1).into()) * w.exact(k + 4)
            })
        })
        .collect();
    let gw_total: BigRational = gw_raw.iter().cloned().sum();
    if gw_total.is_zero() {
        return Err(Error::ZeroPartition(n));
    }
    let mut out = Vec::new();
    let mut max_discrepancy = 0.0f64;
    let mut exact_match = true;
    for (i, t) in shapes.iter().enumerate() {
        let b = &boltzmann[i] / &z;
        let g = &gw_raw[i] / &gw_total;
        exact_match &= b == g;
        let diff = num::Signed::abs(&(&b - &g));
        max_discrepancy = max_discrepancy.max(ratio_to_f64(&diff));
        out.push(ShapeMass {
            shape: t.to_string(),
            boltzmann: b.to_string(),
            galton_watson: g.to_string(),
        });
    }
    Ok(PushforwardReport {
        n,
        weights: w.to_string(),
        shapes: out,
        max_discrepancy,
        exact_match,
    })
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halin::random_hstar_tree;
    use crate::plane_tree::enumerate_marked;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smallest_cases() {
        let h1 = &enumerate_halin(1).unwrap()[0];
        assert_eq!(phi(h1).unwrap().to_string(), "0:0");
        let t: MarkedTree = "0:0".parse().unwrap();
        assert_eq!(&phi_inverse(&t).unwrap(), h1);
        let mut images: Vec<String> =
            enumerate_halin(2).unwrap().iter().map(|h| phi(h).unwrap().to_string()).collect();
        images.sort();
        assert_eq!(images, vec!["1:0 0:0", "1:1 0:0"]);
    }

    #[test]
    fn bijective_for_small_n() {
        for n in 1..=5 {
            let report = exhaustive_round_trip(n).unwrap();
            assert!(report.passed(), "n = {n}: {:?}", report.failures);
        }
    }

    #[test]
    fn direct_inverse_agrees_with_table() {
        for n in 1..=5 {
            let table = InverseTable::build(n).unwrap();
            for t in enumerate_marked(n).unwrap() {
                assert_eq!(&phi_inverse(&t).unwrap(), table.get(&t).unwrap());
            }
        }
    }

    #[test]
    fn degree_law() {
        for n in 1..=5 {
            for h in enumerate_halin(n).unwrap() {
                let trace = phi_trace(&h).unwrap();
                let faces = h.faces();
                for (v, &f) in trace.face.iter().enumerate() {
                    assert_eq!(trace.marked.shape().child_count(v) + 4, faces.cycles[f].len());
                }
                assert_eq!(trace.marked.zeta() * 2, h.vertex_count());
            }
        }
    }

    #[test]
    fn non_hstar_maps_are_rejected() {
        let h = build_halin(&PlaneTree::star(3)).unwrap();
        assert!(matches!(phi(&h), Err(Error::HstarViolated(_))));
    }

    #[test]
    fn random_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[10, 50, 200] {
            for _ in 0..50 {
                let h = build_halin(&random_hstar_tree(n, &mut rng).unwrap()).unwrap();
                let t = phi(&h).unwrap();
                assert_eq!(phi_inverse(&t).unwrap(), h);
                let m = MarkedTree::random_marks(crate::plane_tree::random_tree(n, &mut rng).unwrap(), &mut rng);
                assert_eq!(phi(&phi_inverse(&m).unwrap()).unwrap(), m);
            }
        }
    }

    #[test]
    fn pushforward_small_cases() {
        let r = pushforward_distribution(2, &Weights::Ones).unwrap();
        assert_eq!(r.shapes.len(), 1);
        assert_eq!(r.shapes[0].boltzmann, "1");
        let r = pushforward_distribution(3, &Weights::Ones).unwrap();
        assert!(r.exact_match);
        let by_shape: HashMap<_, _> =
            r.shapes.iter().map(|s| (s.shape.clone(), s.boltzmann.clone())).collect();
        assert_eq!(by_shape["1 1 0"], "4/7");
        assert_eq!(by_shape["2 0 0"], "3/7");
        for w in [Weights::Ones, Weights::Degree, "table:4=1,5=2,6=3,7=1,8=5".parse().unwrap()] {
            for n in 1..=5 {
                let r = pushforward_distribution(n, &w).unwrap();
                assert!(r.exact_match, "n = {n}, w = {w}");
            }
        }
    }

    #[test]
    fn pushforward_zero_partition() {
        let w: Weights = "table:5=1".parse().unwrap();
        assert_eq!(pushforward_distribution(2, &w).unwrap_err(), Error::ZeroPartition(2));
    }
}
