//! Discrete looptrees and the two auxiliary spaces used to compare a Halin
//! map with the looptree of its marked tree.

use std::collections::VecDeque;

use serde::Serialize;

use crate::bijection::PhiTrace;
use crate::error::Result;
use crate::graph::Graph;
use crate::halin::HalinMap;
use crate::plane_tree::{MarkedTree, PlaneTree};

/// Loop(T): vertices of `T` in depth-first order; the children of each
/// vertex form a cycle through it.
#[derive(Clone, Debug, Serialize)]
pub struct LoopGraph {
    size: usize,
    /// Edge multiset, loops of length two appear as doubled edges.
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    graph: Graph,
}

impl LoopGraph {
    fn from_edges(size: usize, edges: Vec<(usize, usize)>) -> LoopGraph {
        let graph = Graph::from_edges(size, &edges);
        LoopGraph { size, edges, graph }
    }

    pub fn vertex_count(&self) -> usize {
        self.size
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn distance(&self, u: usize, v: usize) -> u32 {
        self.graph.distance(u, v).expect("looptrees are connected")
    }

    pub fn all_distances(&self) -> Vec<Vec<u32>> {
        self.graph.all_distances().expect("looptrees are connected")
    }

    /// Exact diameter by BFS (all pairs up to 2·10⁴ vertices, fringe bounds
    /// beyond).
    pub fn diameter_bfs(&self) -> u32 {
        let d = if self.size <= 20_000 {
            self.graph.diameter_all_pairs()
        } else {
            self.graph.diameter()
        };
        d.expect("looptrees are connected")
    }
}

/// Cycle through `v` followed by `ring` in order, as an edge list.
fn push_cycle(edges: &mut Vec<(usize, usize)>, ring: &[usize]) {
    for w in ring.windows(2) {
        edges.push((w[0], w[1]));
    }
    if ring.len() >= 2 {
        edges.push((ring[ring.len() - 1], ring[0]));
    }
}

/// Loop(T).
pub fn loop_graph(tree: &PlaneTree) -> LoopGraph {
    let children = tree.children();
    let mut edges = Vec::new();
    for (v, kids) in children.iter().enumerate() {
        if kids.is_empty() {
            continue;
        }
        let mut ring = Vec::with_capacity(kids.len() + 1);
        ring.push(v);
        ring.extend_from_slice(kids);
        push_cycle(&mut edges, &ring);
    }
    LoopGraph::from_edges(tree.zeta(), edges)
}

/// L̂: the looptree of the shape, except that around the root the root
/// vertex sits between its `m`-th and `(m+1)`-th child, `m` being the root
/// mark. For `m ∈ {0, k_∅}` this is Loop(T).
pub fn hat_l(marked: &MarkedTree) -> LoopGraph {
    let tree = marked.shape();
    let children = tree.children();
    let m = marked.root_mark();
    let mut edges = Vec::new();
    for (v, kids) in children.iter().enumerate() {
        if kids.is_empty() {
            continue;
        }
        let mut ring = Vec::with_capacity(kids.len() + 1);
        if v == 0 {
            ring.extend_from_slice(&kids[..m]);
            ring.push(v);
            ring.extend_from_slice(&kids[m..]);
        } else {
            ring.push(v);
            ring.extend_from_slice(kids);
        }
        push_cycle(&mut edges, &ring);
    }
    LoopGraph::from_edges(tree.zeta(), edges)
}

/// Ĥ: the Halin map with every tree edge ending at a leaf of H° contracted.
#[derive(Clone, Debug)]
pub struct HatH {
    /// Vertex of H° for each point of Ĥ (the internal vertices, in order).
    pub vertices: Vec<usize>,
    /// Point of Ĥ that each vertex of H° is merged into.
    pub image: Vec<usize>,
    pub graph: Graph,
}

pub fn hat_h(h: &HalinMap) -> HatH {
    let tree = h.tree();
    let parent = tree.parents();
    let vertices: Vec<usize> = (0..tree.zeta()).filter(|&v| !tree.is_leaf(v)).collect();
    let mut index = vec![usize::MAX; tree.zeta()];
    for (i, &v) in vertices.iter().enumerate() {
        index[v] = i;
    }
    let image: Vec<usize> = (0..tree.zeta())
        .map(|v| match (tree.is_leaf(v), parent[v]) {
            (true, Some(p)) => index[p],
            _ => index[v],
        })
        .collect();
    let mut edges = Vec::new();
    for d in (0..h.half_edge()).step_by(2) {
        let (a, b) = (h.origin(d), h.origin(d + 1));
        let leaf_edge = h.is_tree_dart(d) && (tree.is_leaf(a) || tree.is_leaf(b));
        if !leaf_edge {
            edges.push((image[a], image[b]));
        }
    }
    let graph = Graph::from_edges(vertices.len(), &edges);
    HatH {
        vertices,
        image,
        graph,
    }
}

/// Point of Ĥ matched with each vertex of the marked tree.
pub fn canonical_matching(trace: &PhiTrace, hat: &HatH) -> Vec<usize> {
    trace.psi.iter().map(|&x| hat.image[x]).collect()
}

/// Diameter of Loop(T) in linear time.
///
/// Loop(T) is a cactus: every edge lies on exactly one cycle, the cycle of
/// some vertex `v` and its children. A geodesic has a unique highest cycle,
/// and within it joins two positions `i, j` with hanging depths `a_i, a_j`,
/// so the diameter is the maximum over cycles of `a_i + a_j + cyc(i, j)`
/// where `a_0 = 0` at `v` itself. Each cycle is scanned once with a sliding
/// window maximum over the doubled cycle.
pub fn loop_diameter(tree: &PlaneTree) -> u64 {
    let code = tree.code();
    let n = code.len();
    let children = tree.children();
    // hanging depth: farthest descendant distance from v inside the looptree
    let mut hang = vec![0u64; n];
    let mut best = 0u64;
    let mut a = Vec::new();
    let mut window: VecDeque<(usize, i64)> = VecDeque::new();
    for v in (0..n).rev() {
        let kids = &children[v];
        if kids.is_empty() {
            continue;
        }
        let len = kids.len() + 1;
        a.clear();
        a.push(0u64);
        a.extend(kids.iter().map(|&c| hang[c]));
        hang[v] = (1..len)
            .map(|i| a[i] + i.min(len - i) as u64)
            .max()
            .unwrap();
        // max over i < j ≤ i + ⌊len/2⌋ (indices mod len) of a_i - i + a_j + j
        let half = len / 2;
        window.clear();
        for j in 0..2 * len {
            while let Some(&(i, _)) = window.front() {
                if j - i > half {
                    window.pop_front();
                } else {
                    break;
                }
            }
            let aj = a[j % len] as i64;
            if let Some(&(_, val)) = window.front() {
                best = best.max((val + aj + j as i64) as u64);
            }
            let key = aj - j as i64;
            while let Some(&(_, val)) = window.back() {
                if val <= key {
                    window.pop_back();
                } else {
                    break;
                }
            }
            window.push_back((j, key));
        }
    }
    best
}

/// Height, looptree diameter and Łukasiewicz extremes of a tree.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TreeStats {
    pub height: usize,
    pub diam_loop: u64,
    pub max_jump: i64,
    pub max_w: i64,
}

pub fn tree_stats(tree: &PlaneTree) -> Result<TreeStats> {
    let path = tree.lukasiewicz();
    Ok(TreeStats {
        height: tree.height(),
        diam_loop: loop_diameter(tree),
        max_jump: path.max_jump(),
        max_w: path.max(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bijection::phi_trace;
    use crate::halin::{build_halin, enumerate_halin, random_hstar_tree};
    use crate::plane_tree::{enumerate_trees, random_tree};
    use crate::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn tree(s: &str) -> PlaneTree {
        s.parse().unwrap()
    }

    fn sorted_edges(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        e.sort_unstable();
        e
    }

    #[test]
    fn small_looptrees() {
        let single = loop_graph(&PlaneTree::single_vertex());
        assert_eq!((single.vertex_count(), single.edge_count()), (1, 0));

        let star = loop_graph(&tree("3 0 0 0"));
        assert_eq!(star.edge_count(), 4);
        assert_eq!(star.distance(0, 2), 2);
        assert_eq!(star.diameter_bfs(), 2);

        let path = loop_graph(&tree("1 1 0"));
        assert_eq!(sorted_edges(path.edges()), vec![(0, 1), (0, 1), (1, 2), (1, 2)]);
        assert_eq!(path.distance(0, 2), 2);

        assert_eq!(loop_graph(&tree("5 0 0 0 0 0")).diameter_bfs(), 3);
    }

    #[test]
    fn star_loop_distances() {
        for k in 1..=20 {
            let l = loop_graph(&PlaneTree::star(k));
            for i in 1..=k {
                assert_eq!(l.distance(0, i) as usize, i.min(k + 1 - i));
            }
        }
    }

    #[test]
    fn edge_and_cycle_counts() {
        for n in 1..=7 {
            for t in enumerate_trees(n).unwrap() {
                let l = loop_graph(&t);
                let internal = t.code().iter().filter(|&&k| k > 0).count();
                let expected: usize = t.code().iter().filter(|&&k| k > 0).map(|k| k + 1).sum();
                assert_eq!(l.edge_count(), expected);
                assert_eq!(l.edge_count(), n - 1 + internal);
                assert_eq!(l.vertex_count(), n);
                assert!(l.graph().is_connected());
            }
        }
    }

    #[test]
    fn loop_metric_against_tree_metric() {
        // the looptree metric is not dominated by twice the tree metric:
        // siblings far apart in a large loop
        let star = PlaneTree::star(9);
        let l = loop_graph(&star);
        assert_eq!(l.distance(1, 5), 4);
        // but every loop edge joins vertices at tree distance at most 2,
        // so d_T ≤ 2 d_Loop
        let mut rng = seeded_rng(11);
        for _ in 0..50 {
            let t = random_tree(rng.random_range(1..64), &mut rng).unwrap();
            let parents = t.parents();
            let tree_edges: Vec<_> = (1..t.zeta()).map(|v| (parents[v].unwrap(), v)).collect();
            let tg = Graph::from_edges(t.zeta(), &tree_edges);
            let l = loop_graph(&t);
            let dl = l.all_distances();
            for u in 0..t.zeta() {
                let dt = tg.bfs(u);
                for v in 0..t.zeta() {
                    assert!(dt[v] <= 2 * dl[u][v]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn cactus_diameter_matches_bfs(seed in any::<u64>(), n in 1usize..200) {
            let mut rng = seeded_rng(seed);
            let t = random_tree(n, &mut rng).unwrap();
            prop_assert_eq!(loop_diameter(&t), loop_graph(&t).diameter_bfs() as u64);
        }

        #[test]
        fn hat_l_with_extreme_marks_is_the_looptree(seed in any::<u64>(), n in 1usize..40) {
            let mut rng = seeded_rng(seed);
            let t = random_tree(n, &mut rng).unwrap();
            let k = t.child_count(0);
            for m in [0, k] {
                let mut marks = vec![0; n];
                marks[0] = m;
                let mt = MarkedTree::new(t.clone(), marks).unwrap();
                prop_assert_eq!(sorted_edges(hat_l(&mt).edges()), sorted_edges(loop_graph(&t).edges()));
            }
        }
    }

    #[test]
    fn hat_h_small_cases() {
        let h1 = &enumerate_halin(1).unwrap()[0];
        let hat = hat_h(h1);
        assert_eq!(hat.vertices, vec![0]);
        for h in enumerate_halin(2).unwrap() {
            let hat = hat_h(&h);
            assert_eq!(hat.vertices.len(), 2);
            assert_eq!(hat.graph.distance(0, 1).unwrap(), 1);
        }
    }

    /// L̂ rebuilt from the faces of Ĥ: each bounded face gives the cycle of
    /// its vertices, with the vertex closest to the root of H° dropped except
    /// in the face carrying the half-edge.
    fn hat_l_from_faces(h: &HalinMap, hat: &HatH) -> Vec<(usize, usize)> {
        let depth = h.tree().depths();
        let faces = h.faces();
        let outer = faces.of[h.outer_dart()];
        let root_face = faces.of[h.half_edge()];
        let mut edges = Vec::new();
        for (f, cycle) in faces.cycles.iter().enumerate() {
            if f == outer {
                continue;
            }
            let mut ring: Vec<usize> = Vec::new();
            for &d in cycle {
                if d == h.half_edge() {
                    continue;
                }
                let x = h.origin(d);
                let p = hat.image[x];
                if ring.last() != Some(&p) {
                    ring.push(p);
                }
            }
            while ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            if f != root_face {
                let top = (0..ring.len())
                    .min_by_key(|&i| depth[hat.vertices[ring[i]]])
                    .unwrap();
                ring.remove(top);
            }
            push_cycle(&mut edges, &ring);
        }
        edges
    }

    fn check_face_circles(h: &HalinMap) {
        let trace = phi_trace(h).unwrap();
        let hat = hat_h(h);
        let matching = canonical_matching(&trace, &hat);
        let mut seen = matching.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..hat.vertices.len()).collect::<Vec<_>>());
        let from_tree: Vec<_> = hat_l(&trace.marked)
            .edges()
            .iter()
            .map(|&(a, b)| (matching[a], matching[b]))
            .collect();
        assert_eq!(sorted_edges(&from_tree), sorted_edges(&hat_l_from_faces(h, &hat)));
    }

    #[test]
    fn hat_l_is_the_face_circle_construction() {
        for n in 1..=5 {
            for h in enumerate_halin(n).unwrap() {
                check_face_circles(&h);
            }
        }
        let mut rng = seeded_rng(8);
        for n in [20, 60] {
            for _ in 0..20 {
                let h = build_halin(&random_hstar_tree(n, &mut rng).unwrap()).unwrap();
                check_face_circles(&h);
            }
        }
    }

    /// Ĥ by contracting the leaf edges of the map one at a time.
    fn contracted_by_map_surgery(h: &HalinMap) -> Graph {
        let tree = h.tree();
        let mut map = h.map().clone();
        // current id of each original dart, None once contracted away
        let mut current: Vec<Option<usize>> = (0..map.dart_count()).map(Some).collect();
        for d in (0..h.tree_dart_count()).step_by(2) {
            let child = h.tree_edge_child(d);
            if !tree.is_leaf(child) {
                continue;
            }
            let sub = map.contract_edge(current[d].unwrap()).unwrap();
            for c in current.iter_mut() {
                *c = c.and_then(|old| sub.new_id(old));
            }
            map = sub.map;
        }
        map.graph()
    }

    #[test]
    fn hat_h_agrees_with_edge_contraction() {
        let mut rng = seeded_rng(21);
        for n in [2, 3, 10, 40] {
            for _ in 0..5 {
                let h = build_halin(&random_hstar_tree(n, &mut rng).unwrap()).unwrap();
                let a = contracted_by_map_surgery(&h);
                let b = hat_h(&h).graph;
                assert_eq!(a.vertex_count(), b.vertex_count());
                assert_eq!(a.diameter_all_pairs().unwrap(), b.diameter_all_pairs().unwrap());
                let mut da: Vec<u32> = a.all_distances().unwrap().concat();
                let mut db: Vec<u32> = b.all_distances().unwrap().concat();
                da.sort_unstable();
                db.sort_unstable();
                assert_eq!(da, db);
            }
        }
    }

    #[test]
    fn stats_of_a_star() {
        let s = tree_stats(&PlaneTree::star(6)).unwrap();
        assert_eq!((s.height, s.diam_loop, s.max_jump, s.max_w), (1, 3, 5, 5));
    }
}
