//! Rooted maps on the sphere as rotation systems.
//!
//! Darts are dense integers. `twin` pairs the two darts of an edge; the single
//! optional half-edge is the unique fixed point of `twin`. `next` is the
//! counterclockwise successor around the origin vertex of a dart. Faces are the
//! orbits of `next ∘ twin`; the orbit of `d` is the face on the right of `d`,
//! so the face on the left of `d` is the orbit of `twin(d)`.
//!
//! The map with no darts is the single-vertex map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MapJson", into = "MapJson")]
pub struct PlanarMap {
    twin: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    root_dart: Option<usize>,
    half_edge: Option<usize>,
}

/// Partition of darts into cycles of a permutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orbits {
    /// `of[d]` is the index of the cycle containing `d`.
    pub of: Vec<usize>,
    /// Cycles in order of their smallest dart; each starts at that dart.
    pub cycles: Vec<Vec<usize>>,
}

impl Orbits {
    fn of_permutation(perm: &[usize]) -> Orbits {
        let mut of = vec![usize::MAX; perm.len()];
        let mut cycles = Vec::new();
        for start in 0..perm.len() {
            if of[start] != usize::MAX {
                continue;
            }
            let id = cycles.len();
            let mut cycle = Vec::new();
            let mut d = start;
            while of[d] == usize::MAX {
                of[d] = id;
                cycle.push(d);
                d = perm[d];
            }
            cycles.push(cycle);
        }
        Orbits { of, cycles }
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Result of removing darts from a map: the new map and, for each new dart,
/// the dart it came from.
#[derive(Clone, Debug)]
pub struct SubMap {
    pub map: PlanarMap,
    pub original: Vec<usize>,
}

impl SubMap {
    /// New id of an old dart, if it survived.
    pub fn new_id(&self, old: usize) -> Option<usize> {
        self.original.iter().position(|&o| o == old)
    }
}

impl PlanarMap {
    pub fn new(
        twin: Vec<usize>,
        next: Vec<usize>,
        root_dart: Option<usize>,
        half_edge: Option<usize>,
    ) -> Result<Self> {
        let n = twin.len();
        if next.len() != n {
            return Err(Error::InvalidMap(format!(
                "twin has {n} entries, next has {}",
                next.len()
            )));
        }
        for d in 0..n {
            if twin[d] >= n || next[d] >= n {
                return Err(Error::InvalidMap(format!("dart {d} points out of range")));
            }
            if twin[twin[d]] != d {
                return Err(Error::InvalidMap(format!("twin is not an involution at {d}")));
            }
            if twin[d] == d && half_edge != Some(d) {
                return Err(Error::InvalidMap(format!("dart {d} is unmatched")));
            }
        }
        if let Some(h) = half_edge {
            if h >= n || twin[h] != h {
                return Err(Error::InvalidMap("half-edge must be a fixed point of twin".into()));
            }
        }
        let mut prev = vec![usize::MAX; n];
        for d in 0..n {
            if prev[next[d]] != usize::MAX {
                return Err(Error::InvalidMap("next is not a permutation".into()));
            }
            prev[next[d]] = d;
        }
        match root_dart {
            Some(r) if r >= n => return Err(Error::InvalidMap("root dart out of range".into())),
            None if n > 0 => return Err(Error::InvalidMap("missing root dart".into())),
            _ => {}
        }
        let map = PlanarMap {
            twin,
            next,
            prev,
            root_dart,
            half_edge,
        };
        if !map.is_connected() {
            return Err(Error::InvalidMap("map is not connected".into()));
        }
        let chi = map.euler_characteristic();
        if chi != 2 {
            return Err(Error::InvalidMap(format!("V - E + F = {chi}, not a sphere")));
        }
        Ok(map)
    }

    /// Builds a map from the counterclockwise dart lists of its vertices.
    pub fn from_rotations(
        twin: Vec<usize>,
        rotations: &[Vec<usize>],
        root_dart: Option<usize>,
        half_edge: Option<usize>,
    ) -> Result<Self> {
        let n = twin.len();
        let mut next = vec![usize::MAX; n];
        for rot in rotations {
            for (i, &d) in rot.iter().enumerate() {
                if d >= n || next[d] != usize::MAX {
                    return Err(Error::InvalidMap(format!("dart {d} placed twice or out of range")));
                }
                next[d] = rot[(i + 1) % rot.len()];
            }
        }
        if next.contains(&usize::MAX) {
            return Err(Error::InvalidMap("some dart has no vertex".into()));
        }
        PlanarMap::new(twin, next, root_dart, half_edge)
    }

    pub fn single_vertex() -> Self {
        PlanarMap {
            twin: vec![],
            next: vec![],
            prev: vec![],
            root_dart: None,
            half_edge: None,
        }
    }

    pub fn dart_count(&self) -> usize {
        self.twin.len()
    }

    pub fn twin(&self, d: usize) -> usize {
        self.twin[d]
    }

    pub fn next(&self, d: usize) -> usize {
        self.next[d]
    }

    pub fn prev(&self, d: usize) -> usize {
        self.prev[d]
    }

    /// Face successor `next(twin(d))`.
    pub fn phi(&self, d: usize) -> usize {
        self.next[self.twin[d]]
    }

    pub fn twins(&self) -> &[usize] {
        &self.twin
    }

    pub fn nexts(&self) -> &[usize] {
        &self.next
    }

    pub fn root_dart(&self) -> Option<usize> {
        self.root_dart
    }

    pub fn half_edge(&self) -> Option<usize> {
        self.half_edge
    }

    pub fn is_half_edge(&self, d: usize) -> bool {
        self.half_edge == Some(d)
    }

    pub fn vertices(&self) -> Orbits {
        Orbits::of_permutation(&self.next)
    }

    pub fn faces(&self) -> Orbits {
        let phi: Vec<usize> = (0..self.dart_count()).map(|d| self.phi(d)).collect();
        Orbits::of_permutation(&phi)
    }

    /// Face degrees, the half-edge contributing one to its face.
    pub fn face_degrees(&self) -> Vec<usize> {
        if self.dart_count() == 0 {
            return vec![0];
        }
        self.faces().cycles.iter().map(Vec::len).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices().len().max(1)
    }

    /// Number of edges; the half-edge is not an edge.
    pub fn edge_count(&self) -> usize {
        (self.dart_count() - usize::from(self.half_edge.is_some())) / 2
    }

    pub fn face_count(&self) -> usize {
        self.faces().len().max(1)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    pub fn is_loop(&self, d: usize) -> bool {
        let v = self.vertices();
        v.of[d] == v.of[self.twin[d]]
    }

    pub fn is_connected(&self) -> bool {
        let n = self.dart_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(d) = stack.pop() {
            for e in [self.twin[d], self.next[d], self.prev[d]] {
                if !seen[e] {
                    seen[e] = true;
                    count += 1;
                    stack.push(e);
                }
            }
        }
        count == n
    }

    /// Dual map on the same darts: dual twin is the twin, dual rotation is
    /// `twin ∘ prev`, and the dual vertex of `d` is the face of `d`.
    pub fn dual(&self) -> PlanarMap {
        let n = self.dart_count();
        let next: Vec<usize> = (0..n).map(|d| self.twin[self.prev[d]]).collect();
        let mut prev = vec![0; n];
        for d in 0..n {
            prev[next[d]] = d;
        }
        PlanarMap {
            twin: self.twin.clone(),
            next,
            prev,
            root_dart: self.root_dart,
            half_edge: self.half_edge,
        }
    }

    /// Dual with the vertex of the face containing `outer_dart` removed,
    /// together with every dual edge incident to it.
    pub fn weak_dual(&self, outer_dart: usize) -> Result<SubMap> {
        let faces = self.faces();
        let outer = faces.of[outer_dart];
        let keep: Vec<bool> = (0..self.dart_count())
            .map(|d| faces.of[d] != outer && faces.of[self.twin[d]] != outer)
            .collect();
        if faces.cycles[outer].iter().any(|&d| faces.of[self.twin[d]] == outer) {
            return Err(Error::InvalidMap(
                "an edge has the unbounded face on both sides".into(),
            ));
        }
        self.dual().restrict(&keep)
    }

    /// Keeps exactly the darts flagged in `keep`, which must be closed under
    /// `twin`. Rotations skip removed darts. Every vertex must keep a dart
    /// unless the whole map collapses to a single vertex.
    pub fn restrict(&self, keep: &[bool]) -> Result<SubMap> {
        let n = self.dart_count();
        let mut new_id = vec![usize::MAX; n];
        let mut original = Vec::new();
        for d in 0..n {
            if keep[d] {
                if !keep[self.twin[d]] {
                    return Err(Error::InvalidMap(format!("dart {d} kept without its twin")));
                }
                new_id[d] = original.len();
                original.push(d);
            }
        }
        let m = original.len();
        if m == 0 {
            return Ok(SubMap {
                map: PlanarMap::single_vertex(),
                original,
            });
        }
        let mut twin = vec![0; m];
        let mut next = vec![0; m];
        for (i, &d) in original.iter().enumerate() {
            twin[i] = new_id[self.twin[d]];
            let mut e = self.next[d];
            while !keep[e] {
                e = self.next[e];
            }
            next[i] = new_id[e];
        }
        let root = self
            .root_dart
            .and_then(|r| keep[r].then_some(new_id[r]))
            .unwrap_or(0);
        let half = self.half_edge.and_then(|h| keep[h].then_some(new_id[h]));
        let map = PlanarMap::new(twin, next, Some(root), half)?;
        Ok(SubMap { map, original })
    }

    /// Contracts the edge of dart `d`, merging its endpoints.
    pub fn contract_edge(&self, d: usize) -> Result<SubMap> {
        self.check_edge(d)?;
        if self.is_loop(d) {
            return Err(Error::LoopContraction(d));
        }
        let t = self.twin[d];
        let mut next = self.next.clone();
        // the darts of v, starting after t, take the place of d around u
        let mut merged = self.rotation_after(t);
        merged.extend(self.rotation_after(d));
        for (i, &e) in merged.iter().enumerate() {
            next[e] = merged[(i + 1) % merged.len()];
        }
        let keep: Vec<bool> = (0..self.dart_count()).map(|e| e != d && e != t).collect();
        let root = self.root_dart.map(|r| if r == d || r == t { self.next_kept(r, &keep) } else { r });
        let spliced = PlanarMap {
            twin: self.twin.clone(),
            prev: invert(&next),
            next,
            root_dart: root,
            half_edge: self.half_edge,
        };
        spliced.restrict(&keep)
    }

    /// Deletes the edge of dart `d`; it must border two distinct faces.
    pub fn delete_edge(&self, d: usize) -> Result<SubMap> {
        self.check_edge(d)?;
        let faces = self.faces();
        if faces.of[d] == faces.of[self.twin[d]] {
            return Err(Error::Bridge(d));
        }
        let t = self.twin[d];
        let keep: Vec<bool> = (0..self.dart_count()).map(|e| e != d && e != t).collect();
        let mut map = self.clone();
        if let Some(r) = map.root_dart {
            if r == d || r == t {
                map.root_dart = Some(self.next_kept(r, &keep));
            }
        }
        map.restrict(&keep)
    }

    /// Darts around the origin of `d`, counterclockwise, starting after `d`
    /// and excluding it.
    fn rotation_after(&self, d: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut e = self.next[d];
        while e != d {
            out.push(e);
            e = self.next[e];
        }
        out
    }

    fn next_kept(&self, d: usize, keep: &[bool]) -> usize {
        let mut e = self.next[d];
        while !keep[e] && e != d {
            e = self.next[e];
        }
        if keep[e] {
            return e;
        }
        (0..keep.len()).find(|&x| keep[x]).unwrap_or(0)
    }

    fn check_edge(&self, d: usize) -> Result<()> {
        if d >= self.dart_count() {
            return Err(Error::InvalidMap(format!("dart {d} out of range")));
        }
        if self.is_half_edge(d) {
            return Err(Error::HalfEdge);
        }
        Ok(())
    }

    /// Underlying multigraph; vertex ids are the indices of [`PlanarMap::vertices`].
    pub fn graph(&self) -> Graph {
        let v = self.vertices();
        let mut edges = Vec::with_capacity(self.edge_count());
        for d in 0..self.dart_count() {
            let t = self.twin[d];
            if d < t {
                edges.push((v.of[d], v.of[t]));
            }
        }
        Graph::from_edges(self.vertex_count(), &edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Dart bijection `σ` with `σ(root_a) = root_b` commuting with `twin` and
/// `next`, if the rooted maps are isomorphic.
pub fn rooted_isomorphism(a: &PlanarMap, b: &PlanarMap) -> Option<Vec<usize>> {
    let n = a.dart_count();
    if n != b.dart_count() || a.half_edge.is_some() != b.half_edge.is_some() {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    let mut sigma = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let (ra, rb) = (a.root_dart?, b.root_dart?);
    sigma[ra] = rb;
    used[rb] = true;
    let mut stack = vec![ra];
    while let Some(d) = stack.pop() {
        let e = sigma[d];
        for (x, y) in [(a.twin[d], b.twin[e]), (a.next[d], b.next[e]), (a.prev[d], b.prev[e])] {
            if sigma[x] == usize::MAX {
                if used[y] {
                    return None;
                }
                sigma[x] = y;
                used[y] = true;
                stack.push(x);
            } else if sigma[x] != y {
                return None;
            }
        }
    }
    if a.half_edge.map(|h| sigma[h]) != b.half_edge {
        return None;
    }
    Some(sigma)
}

fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    darts: usize,
    twin: Vec<usize>,
    next: Vec<usize>,
    root_dart: Option<usize>,
    half_edge_dart: Option<usize>,
}

impl TryFrom<MapJson> for PlanarMap {
    type Error = Error;
    fn try_from(j: MapJson) -> Result<Self> {
        if j.darts != j.twin.len() {
            return Err(Error::InvalidMap(format!(
                "declared {} darts, twin has {}",
                j.darts,
                j.twin.len()
            )));
        }
        PlanarMap::new(j.twin, j.next, j.root_dart, j.half_edge_dart)
    }
}

impl From<PlanarMap> for MapJson {
    fn from(m: PlanarMap) -> MapJson {
        MapJson {
            darts: m.dart_count(),
            twin: m.twin,
            next: m.next,
            root_dart: m.root_dart,
            half_edge_dart: m.half_edge,
        }
    }
}

/// A plane tree drawn as a map: dart `2(c-1)` goes from the parent of `c` to
/// `c`, dart `2(c-1)+1` back. Children are placed counterclockwise after the
/// parent dart.
pub fn tree_map(tree: &crate::plane_tree::PlaneTree) -> PlanarMap {
    let n = tree.zeta();
    if n == 1 {
        return PlanarMap::single_vertex();
    }
    let children = tree.children();
    let mut twin = vec![0; 2 * (n - 1)];
    for c in 1..n {
        twin[2 * (c - 1)] = 2 * (c - 1) + 1;
        twin[2 * (c - 1) + 1] = 2 * (c - 1);
    }
    let rotations: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut rot = Vec::new();
            if v > 0 {
                rot.push(2 * (v - 1) + 1);
            }
            rot.extend(children[v].iter().map(|&c| 2 * (c - 1)));
            rot
        })
        .collect();
    PlanarMap::from_rotations(twin, &rotations, Some(0), None).expect("trees are plane maps")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plane_tree::{enumerate_trees, PlaneTree};
    use proptest::prelude::*;

    fn edge() -> PlanarMap {
        PlanarMap::new(vec![1, 0], vec![0, 1], Some(0), None).unwrap()
    }

    #[test]
    fn single_edge_has_one_face_of_degree_two() {
        let m = edge();
        assert_eq!(m.face_degrees(), vec![2]);
        assert_eq!((m.vertex_count(), m.edge_count(), m.face_count()), (2, 1, 1));
    }

    #[test]
    fn tree_maps_have_one_face() {
        for n in 1..=7 {
            for t in enumerate_trees(n).unwrap() {
                let m = tree_map(&t);
                assert_eq!(m.face_count(), 1);
                assert_eq!(m.face_degrees(), vec![2 * (n - 1)]);
                assert_eq!(m.vertex_count(), n);
                assert_eq!(m.euler_characteristic(), 2);
            }
        }
    }

    #[test]
    fn rejects_malformed_maps() {
        assert!(PlanarMap::new(vec![0, 1], vec![0, 1], Some(0), None).is_err());
        assert!(PlanarMap::new(vec![1, 0], vec![0, 0], Some(0), None).is_err());
        // two disjoint edges
        assert!(PlanarMap::new(vec![1, 0, 3, 2], vec![0, 1, 2, 3], Some(0), None).is_err());
        // a torus: one vertex, two loops interleaved
        assert!(PlanarMap::new(vec![2, 3, 0, 1], vec![1, 2, 3, 0], Some(0), None).is_err());
    }

    #[test]
    fn dual_of_dual_is_relabelled_original() {
        for t in enumerate_trees(6).unwrap() {
            let m = tree_map(&t);
            let dd = m.dual().dual();
            for d in 0..m.dart_count() {
                // next** = twin ∘ next ∘ twin
                assert_eq!(dd.next(d), m.twin(m.next(m.twin(d))));
            }
            assert_eq!(m.dual().vertex_count(), m.face_count());
            assert_eq!(m.dual().face_count(), m.vertex_count());
        }
    }

    #[test]
    fn contract_only_edge() {
        let m = edge().contract_edge(0).unwrap().map;
        assert_eq!(m.dart_count(), 0);
        assert_eq!(m.vertex_count(), 1);
    }

    #[test]
    fn contract_and_delete_errors() {
        // a single loop
        let m = PlanarMap::new(vec![1, 0], vec![1, 0], Some(0), None).unwrap();
        assert_eq!(m.face_count(), 2);
        assert_eq!(m.contract_edge(0).unwrap_err(), Error::LoopContraction(0));
        assert_eq!(edge().delete_edge(0).unwrap_err(), Error::Bridge(0));
        let h = PlanarMap::new(vec![1, 0, 2], vec![2, 1, 0], Some(0), Some(2)).unwrap();
        assert_eq!(h.contract_edge(2).unwrap_err(), Error::HalfEdge);
    }

    #[test]
    fn json_round_trip() {
        let m = PlanarMap::new(vec![1, 0, 2], vec![2, 1, 0], Some(0), Some(2)).unwrap();
        let s = m.to_json();
        assert_eq!(s, r#"{"darts":3,"twin":[1,0,2],"next":[2,1,0],"root_dart":0,"half_edge_dart":2}"#);
        assert_eq!(PlanarMap::from_json(&s).unwrap(), m);
        assert!(PlanarMap::from_json(r#"{"darts":2,"twin":[0,1],"next":[0,1],"root_dart":0,"half_edge_dart":null}"#).is_err());
    }

    /// Random connected plane map: a random tree plus chords added inside faces.
    fn random_map(code_seed: Vec<usize>, chords: Vec<(usize, usize)>) -> PlanarMap {
        let n = code_seed.len() + 1;
        let mut code = vec![0; n];
        // attach vertex i+1 below a parent among 0..=i (depth-first compatible)
        let mut parent_of = vec![0; n];
        for (i, &s) in code_seed.iter().enumerate() {
            parent_of[i + 1] = s % (i + 1);
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 1..n {
            children[parent_of[v]].push(v);
        }
        // re-number depth-first to get a valid code
        let mut order = Vec::new();
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in children[v].iter().rev() {
                stack.push(c);
            }
        }
        for (i, &v) in order.iter().enumerate() {
            code[i] = children[v].len();
        }
        let mut m = tree_map(&PlaneTree::from_code(code).unwrap());
        for (a, b) in chords {
            if m.dart_count() == 0 {
                break;
            }
            let faces = m.faces();
            let f = &faces.cycles[faces.of[a % m.dart_count()]];
            let (x, y) = (f[0], f[b % f.len()]);
            m = add_chord(&m, x, y);
        }
        m
    }

    /// Inserts an edge inside the face of `x` from the corner before `x` to the
    /// corner before `y` (both darts of that face).
    fn add_chord(m: &PlanarMap, x: usize, y: usize) -> PlanarMap {
        let n = m.dart_count();
        let (a, b) = (n, n + 1);
        let mut twin = m.twins().to_vec();
        twin.extend([b, a]);
        let mut next = m.nexts().to_vec();
        next.extend([0, 0]);
        // dart a sits at origin(x), just before x in ccw order: prev(x) -> a -> x
        // faces run x's face on the right of x, so the corner between twin(prev_face) and x
        let px = m.prev(x);
        let py = m.prev(y);
        if x == y {
            next[px] = a;
            next[a] = b;
            next[b] = x;
        } else {
            next[px] = a;
            next[a] = x;
            next[py] = b;
            next[b] = y;
        }
        PlanarMap::new(twin, next, m.root_dart(), None).unwrap()
    }

    proptest! {
        #[test]
        fn euler_preserved_by_contract_and_delete(
            seed in prop::collection::vec(0usize..100, 1..12),
            chords in prop::collection::vec((0usize..1000, 0usize..1000), 0..6),
            pick in 0usize..1000,
        ) {
            let m = random_map(seed, chords);
            prop_assert_eq!(m.euler_characteristic(), 2);
            let d = pick % m.dart_count();
            let (v, e, f) = (m.vertex_count(), m.edge_count(), m.face_count());
            if !m.is_loop(d) {
                let c = m.contract_edge(d).unwrap().map;
                prop_assert_eq!((c.vertex_count(), c.edge_count(), c.face_count()), (v - 1, e - 1, f));
            }
            let faces = m.faces();
            if faces.of[d] != faces.of[m.twin(d)] {
                let c = m.delete_edge(d).unwrap().map;
                prop_assert_eq!((c.vertex_count(), c.edge_count(), c.face_count()), (v, e - 1, f - 1));
            }
        }
    }
}
