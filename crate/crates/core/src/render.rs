//! Deterministic DOT and SVG drawings of trees, looptrees and Halin maps.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::halin::HalinMap;
use crate::looptree::loop_graph;
use crate::plane_tree::PlaneTree;

pub const RENDER_LIMIT: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Dot,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(Format::Dot),
            "svg" => Ok(Format::Svg),
            _ => Err(Error::Parse(format!("unknown drawing format {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EdgeKind {
    Tree,
    Boundary,
    Loop,
}

struct Drawing {
    name: &'static str,
    pos: Vec<(f64, f64)>,
    edges: Vec<(usize, usize, EdgeKind)>,
    /// Vertex carrying a half-edge.
    half_edge: Option<usize>,
}

/// Leaves at consecutive abscissae, parents centred over their children,
/// depth downwards.
fn tree_layout(tree: &PlaneTree) -> Vec<(f64, f64)> {
    let children = tree.children();
    let depth = tree.depths();
    let mut x = vec![0.0; tree.zeta()];
    let mut next_leaf = 0.0;
    for v in 0..tree.zeta() {
        if children[v].is_empty() {
            x[v] = next_leaf;
            next_leaf += 1.0;
        }
    }
    for v in (0..tree.zeta()).rev() {
        if let (Some(&a), Some(&b)) = (children[v].first(), children[v].last()) {
            x[v] = 0.5 * (x[a] + x[b]);
        }
    }
    x.into_iter().zip(depth).map(|(x, d)| (x, d as f64)).collect()
}

fn guard(n: usize) -> Result<()> {
    if n > RENDER_LIMIT {
        return Err(Error::SizeGuard {
            what: "render",
            n,
            max: RENDER_LIMIT,
        });
    }
    Ok(())
}

fn tree_drawing(tree: &PlaneTree) -> Result<Drawing> {
    guard(tree.zeta())?;
    let parents = tree.parents();
    Ok(Drawing {
        name: "tree",
        pos: tree_layout(tree),
        edges: (1..tree.zeta())
            .map(|v| (parents[v].unwrap(), v, EdgeKind::Tree))
            .collect(),
        half_edge: None,
    })
}

fn loop_drawing(tree: &PlaneTree) -> Result<Drawing> {
    guard(tree.zeta())?;
    let l = loop_graph(tree);
    Ok(Drawing {
        name: "looptree",
        pos: tree_layout(tree),
        edges: l.edges().iter().map(|&(a, b)| (a, b, EdgeKind::Loop)).collect(),
        half_edge: None,
    })
}

fn halin_drawing(h: &HalinMap) -> Result<Drawing> {
    guard(h.vertex_count())?;
    let mut edges = Vec::new();
    for d in (0..h.half_edge()).step_by(2) {
        let kind = if h.is_tree_dart(d) {
            EdgeKind::Tree
        } else {
            EdgeKind::Boundary
        };
        edges.push((h.origin(d), h.origin(d + 1), kind));
    }
    Ok(Drawing {
        name: "halin",
        pos: tree_layout(h.tree()),
        edges,
        half_edge: Some(h.origin(h.half_edge())),
    })
}

impl Drawing {
    fn dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {} {{", self.name);
        out.push_str("  layout=neato;\n  node [shape=circle, width=0.15, label=\"\"];\n");
        for (v, (x, y)) in self.pos.iter().enumerate() {
            let _ = writeln!(out, "  v{v} [pos=\"{:.2},{:.2}!\"];", x, -y);
        }
        for &(a, b, kind) in &self.edges {
            let style = match kind {
                EdgeKind::Tree | EdgeKind::Loop => "",
                EdgeKind::Boundary => " [color=red, penwidth=2]",
            };
            let _ = writeln!(out, "  v{a} -- v{b}{style};");
        }
        if let Some(r) = self.half_edge {
            let (x, y) = self.pos[r];
            let _ = writeln!(out, "  half [shape=point, width=0.05, pos=\"{:.2},{:.2}!\"];", x, 0.5 - y);
            let _ = writeln!(out, "  v{r} -- half [style=dashed];");
        }
        out.push_str("}\n");
        out
    }

    fn svg(&self) -> String {
        const S: f64 = 40.0;
        const M: f64 = 30.0;
        let max_x = self.pos.iter().map(|p| p.0).fold(0.0, f64::max);
        let max_y = self.pos.iter().map(|p| p.1).fold(0.0, f64::max);
        let (w, h) = (max_x * S + 2.0 * M, max_y * S + 2.0 * M);
        let at = |v: usize| (self.pos[v].0 * S + M, self.pos[v].1 * S + M);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
        );
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for &(a, b, kind) in &self.edges {
            let colour = match kind {
                EdgeKind::Boundary => "stroke=\"#c0392b\" stroke-width=\"2\"",
                _ => "stroke=\"#222\" stroke-width=\"1\"",
            };
            let key = (a.min(b), a.max(b));
            let copy = *seen.entry(key).and_modify(|c| *c += 1).or_insert(0);
            let ((x1, y1), (x2, y2)) = (at(a), at(b));
            if a == b {
                let _ = writeln!(
                    out,
                    "  <circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"10\" fill=\"none\" {colour}/>",
                    x1,
                    y1 + 10.0
                );
            } else if copy == 0 {
                let _ = writeln!(
                    out,
                    "  <line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" {colour}/>"
                );
            } else {
                // parallel copies bow outwards
                let (mx, my) = ((x1 + x2) / 2.0, (y1 + y2) / 2.0);
                let (dx, dy) = (x2 - x1, y2 - y1);
                let len = (dx * dx + dy * dy).sqrt().max(1e-9);
                let off = 12.0 * copy as f64;
                let (cx, cy) = (mx - dy / len * off, my + dx / len * off);
                let _ = writeln!(
                    out,
                    "  <path d=\"M{x1:.1},{y1:.1} Q{cx:.1},{cy:.1} {x2:.1},{y2:.1}\" fill=\"none\" {colour}/>"
                );
            }
        }
        if let Some(r) = self.half_edge {
            let (x, y) = at(r);
            let _ = writeln!(
                out,
                "  <line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#222\" stroke-dasharray=\"3,3\"/>",
                y - 20.0
            );
        }
        for v in 0..self.pos.len() {
            let (x, y) = at(v);
            let _ = writeln!(out, "  <circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"#fff\" stroke=\"#222\"/>");
        }
        out.push_str("</svg>\n");
        out
    }

    fn emit(&self, format: Format) -> String {
        match format {
            Format::Dot => self.dot(),
            Format::Svg => self.svg(),
        }
    }
}

pub fn render_tree(tree: &PlaneTree, format: Format) -> Result<String> {
    Ok(tree_drawing(tree)?.emit(format))
}

pub fn render_looptree(tree: &PlaneTree, format: Format) -> Result<String> {
    Ok(loop_drawing(tree)?.emit(format))
}

/// Boundary cycle drawn in red; the half-edge dashed.
pub fn render_halin(h: &HalinMap, format: Format) -> Result<String> {
    Ok(halin_drawing(h)?.emit(format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halin::enumerate_halin;

    fn count(s: &str, pat: &str) -> usize {
        s.matches(pat).count()
    }

    #[test]
    fn single_face_halin_map() {
        let h = &enumerate_halin(1).unwrap()[0];
        let dot = render_halin(h, Format::Dot).unwrap();
        assert_eq!(count(&dot, "!\"];"), 3); // two vertices and the half-edge tip
        assert!(dot.contains("v1 -- v1 [color=red, penwidth=2];"));
        assert!(dot.contains("v0 -- half [style=dashed];"));
    }

    #[test]
    fn star_looptree_is_a_four_cycle() {
        let t: PlaneTree = "3 0 0 0".parse().unwrap();
        let dot = render_looptree(&t, Format::Dot).unwrap();
        let edges: Vec<&str> = dot.lines().filter(|l| l.contains(" -- ")).collect();
        assert_eq!(edges, ["  v0 -- v1;", "  v1 -- v2;", "  v2 -- v3;", "  v3 -- v0;"]);
    }

    #[test]
    fn halin_maps_of_three_faces() {
        for h in enumerate_halin(3).unwrap() {
            let dot = render_halin(&h, Format::Dot).unwrap();
            assert_eq!(count(&dot, "color=red"), 3);
            assert_eq!(dot, render_halin(&h, Format::Dot).unwrap());
            let svg = render_halin(&h, Format::Svg).unwrap();
            assert_eq!(count(&svg, "#c0392b"), 3);
            assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        }
    }

    #[test]
    fn size_guard() {
        let big = PlaneTree::star(RENDER_LIMIT);
        assert!(matches!(render_tree(&big, Format::Svg), Err(Error::SizeGuard { .. })));
    }
}
