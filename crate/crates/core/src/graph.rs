//! Undirected multigraphs in compressed adjacency form, with BFS metrics.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph on `n` vertices; loops and parallel edges are kept.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Graph {
        let mut degree = vec![0usize; n];
        for &(a, b) in edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0u32; offsets[n]];
        for &(a, b) in edges {
            targets[fill[a]] = b as u32;
            fill[a] += 1;
            targets[fill[b]] = a as u32;
            fill[b] += 1;
        }
        Graph {
            offsets,
            targets,
            edge_count: edges.len(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.targets[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|&u| u as usize)
    }

    /// Degree counting a loop twice.
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.vertex_count()];
        let mut queue = VecDeque::new();
        self.bfs_into(source, &mut dist, &mut queue);
        dist
    }

    fn bfs_into(&self, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
        dist.fill(UNREACHABLE);
        queue.clear();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v] + 1;
            for u in self.neighbors(v) {
                if dist[u] == UNREACHABLE {
                    dist[u] = dv;
                    queue.push_back(u);
                }
            }
        }
    }

    pub fn distance(&self, u: usize, v: usize) -> Result<u32> {
        match self.bfs(u)[v] {
            UNREACHABLE => Err(Error::Disconnected),
            d => Ok(d),
        }
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() == 0 || !self.bfs(0).contains(&UNREACHABLE)
    }

    /// Full distance matrix, one BFS per source in parallel.
    pub fn all_distances(&self) -> Result<Vec<Vec<u32>>> {
        let rows: Vec<Vec<u32>> = (0..self.vertex_count())
            .into_par_iter()
            .map(|s| self.bfs(s))
            .collect();
        if rows.iter().any(|r| r.contains(&UNREACHABLE)) {
            return Err(Error::Disconnected);
        }
        Ok(rows)
    }

    pub fn eccentricity(&self, v: usize) -> Result<u32> {
        let d = self.bfs(v);
        max_finite(&d)
    }

    /// Diameter by all-pairs BFS.
    pub fn diameter_all_pairs(&self) -> Result<u32> {
        let ecc: Vec<Result<u32>> = (0..self.vertex_count())
            .into_par_iter()
            .map(|s| max_finite(&self.bfs(s)))
            .collect();
        ecc.into_iter().try_fold(0, |m, e| e.map(|e| m.max(e)))
    }

    /// Exact diameter by iterative fringe upper bounds: BFS from a central
    /// vertex, then eccentricities of the deepest levels until the lower bound
    /// certifies itself.
    pub fn diameter(&self) -> Result<u32> {
        let n = self.vertex_count();
        if n <= 1 {
            return Ok(0);
        }
        let mut dist = vec![UNREACHABLE; n];
        let mut queue = VecDeque::new();
        let start = (0..n).max_by_key(|&v| self.degree(v)).unwrap();
        self.bfs_into(start, &mut dist, &mut queue);
        if dist.contains(&UNREACHABLE) {
            return Err(Error::Disconnected);
        }
        let a = argmax(&dist);
        self.bfs_into(a, &mut dist, &mut queue);
        let b = argmax(&dist);
        let mut lower = dist[b];
        // walk back from b to the middle of the a-b geodesic
        let mut mid = b;
        while dist[mid] > lower / 2 {
            mid = self.neighbors(mid).find(|&u| dist[u] + 1 == dist[mid]).unwrap();
        }
        self.bfs_into(mid, &mut dist, &mut queue);
        let levels = dist.clone();
        let depth = *levels.iter().max().unwrap();
        lower = lower.max(depth);
        let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); depth as usize + 1];
        for (v, &l) in levels.iter().enumerate() {
            by_level[l as usize].push(v);
        }
        for i in (1..=depth).rev() {
            if lower >= 2 * i {
                break;
            }
            let level_max = by_level[i as usize]
                .par_iter()
                .map(|&v| max_finite(&self.bfs(v)).unwrap())
                .max()
                .unwrap_or(0);
            lower = lower.max(level_max);
            if lower > 2 * (i - 1) {
                break;
            }
        }
        Ok(lower)
    }
}

impl Graph {
    /// True when the graph is connected and has no cut vertex.
    pub fn is_biconnected(&self) -> bool {
        let n = self.vertex_count();
        if n <= 2 {
            return self.is_connected();
        }
        // iterative low-point computation from vertex 0
        let mut disc = vec![u32::MAX; n];
        let mut low = vec![0u32; n];
        let mut edge_pos = self.offsets[..n].to_vec();
        let mut parent = vec![usize::MAX; n];
        let mut skipped_parent = vec![false; n];
        let mut time = 0u32;
        let mut root_children = 0;
        let mut stack = vec![0usize];
        disc[0] = 0;
        low[0] = 0;
        while let Some(&v) = stack.last() {
            if edge_pos[v] < self.offsets[v + 1] {
                let u = self.targets[edge_pos[v]] as usize;
                edge_pos[v] += 1;
                if u == parent[v] && !skipped_parent[v] {
                    // one copy of the tree edge is not a back edge
                    skipped_parent[v] = true;
                    continue;
                }
                if disc[u] == u32::MAX {
                    time += 1;
                    disc[u] = time;
                    low[u] = time;
                    parent[u] = v;
                    if v == 0 {
                        root_children += 1;
                    }
                    stack.push(u);
                } else {
                    low[v] = low[v].min(disc[u]);
                }
            } else {
                stack.pop();
                if let Some(&p) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if p != 0 && low[v] >= disc[p] {
                        return false;
                    }
                }
            }
        }
        disc.iter().all(|&d| d != u32::MAX) && root_children <= 1
    }
}

fn max_finite(d: &[u32]) -> Result<u32> {
    if d.contains(&UNREACHABLE) {
        return Err(Error::Disconnected);
    }
    Ok(d.iter().copied().max().unwrap_or(0))
}

fn argmax(d: &[u32]) -> usize {
    let mut best = 0;
    for (i, &x) in d.iter().enumerate() {
        if x > d[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges)
    }

    #[test]
    fn cycles() {
        assert_eq!(cycle(4).diameter().unwrap(), 2);
        assert_eq!(cycle(6).diameter().unwrap(), 3);
        assert_eq!(cycle(7).diameter().unwrap(), 3);
        assert_eq!(cycle(6).distance(0, 4).unwrap(), 2);
    }

    #[test]
    fn disconnected_is_an_error() {
        let g = Graph::from_edges(3, &[(0, 1)]);
        assert!(!g.is_connected());
        assert_eq!(g.diameter(), Err(Error::Disconnected));
        assert_eq!(g.all_distances(), Err(Error::Disconnected));
    }

    #[test]
    fn multi_edges_and_loops() {
        let g = Graph::from_edges(2, &[(0, 1), (0, 1), (1, 1)]);
        assert_eq!(g.degree(1), 4);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.diameter().unwrap(), 1);
    }

    fn brute_biconnected(g: &Graph, edges: &[(usize, usize)]) -> bool {
        let n = g.vertex_count();
        if !g.is_connected() {
            return false;
        }
        if n <= 2 {
            return true;
        }
        (0..n).all(|cut| {
            let rest: Vec<_> = edges
                .iter()
                .filter(|&&(a, b)| a != cut && b != cut)
                .map(|&(a, b)| (a - usize::from(a > cut), b - usize::from(b > cut)))
                .collect();
            Graph::from_edges(n - 1, &rest).is_connected()
        })
    }

    #[test]
    fn biconnectivity_examples() {
        assert!(cycle(5).is_biconnected());
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        assert!(!path.is_biconnected());
        let doubled = Graph::from_edges(3, &[(0, 1), (0, 1), (1, 2), (1, 2)]);
        assert!(!doubled.is_biconnected());
        let bowtie = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]);
        assert!(!bowtie.is_biconnected());
    }

    proptest! {
        #[test]
        fn biconnectivity_matches_brute_force(
            n in 1usize..12,
            edges in prop::collection::vec((0usize..12, 0usize..12), 0..24),
        ) {
            let edges: Vec<_> = edges.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let g = Graph::from_edges(n, &edges);
            prop_assert_eq!(g.is_biconnected(), brute_biconnected(&g, &edges));
        }

        #[test]
        fn fringe_diameter_matches_all_pairs(
            n in 2usize..60,
            extra in prop::collection::vec((0usize..60, 0usize..60), 0..40),
            parents in prop::collection::vec(0usize..1000, 59),
        ) {
            let mut edges: Vec<_> = (1..n).map(|v| (parents[v - 1] % v, v)).collect();
            edges.extend(extra.into_iter().map(|(a, b)| (a % n, b % n)));
            let g = Graph::from_edges(n, &edges);
            prop_assert_eq!(g.diameter().unwrap(), g.diameter_all_pairs().unwrap());
        }
    }
}
