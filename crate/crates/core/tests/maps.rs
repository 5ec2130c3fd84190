use halin_core::halin::enumerate_halin;
use halin_core::planar_map::PlanarMap;

fn proper_edges(m: &PlanarMap) -> Vec<usize> {
    (0..m.dart_count())
        .filter(|&d| !m.is_half_edge(d) && d < m.twin(d))
        .collect()
}

fn endpoints(m: &PlanarMap, d: usize) -> (usize, usize) {
    let v = m.vertices();
    let (a, b) = (v.of[d], v.of[m.twin(d)]);
    (a.min(b), a.max(b))
}

#[test]
fn weak_dual_of_the_single_face_map_is_one_vertex() {
    let h = &enumerate_halin(1).unwrap()[0];
    let d = h.map().weak_dual(h.outer_dart()).unwrap().map;
    assert_eq!(d.vertex_count(), 1);
    // the tree edge has the bounded face on both sides, so its dual is a loop
    let edges = proper_edges(&d);
    assert_eq!(edges.len(), 1);
    assert!(d.is_loop(edges[0]));
}

#[test]
fn weak_dual_of_two_face_maps_is_a_triple_edge() {
    for h in enumerate_halin(2).unwrap() {
        let d = h.map().weak_dual(h.outer_dart()).unwrap().map;
        assert_eq!(d.vertex_count(), 2);
        let edges = proper_edges(&d);
        assert_eq!(edges.len(), 3);
        for &e in &edges {
            let (a, b) = endpoints(&d, e);
            assert_ne!(a, b);
        }

        // removing one of the three leaves a 2-gon
        let two_gon = d.delete_edge(edges[0]).unwrap().map;
        assert_eq!(proper_edges(&two_gon).len(), 2);
        assert_eq!(two_gon.vertex_count(), 2);
        let mut degrees: Vec<usize> = two_gon
            .faces()
            .cycles
            .iter()
            .map(|c| c.iter().filter(|&&x| !two_gon.is_half_edge(x)).count())
            .collect();
        degrees.sort();
        assert_eq!(degrees, [2, 2]);
    }
}

#[test]
fn weak_dual_degrees_are_face_degrees_minus_one() {
    for n in 1..=4 {
        for h in enumerate_halin(n).unwrap() {
            let faces = h.faces();
            let outer = faces.of[h.outer_dart()];
            let sub = h.map().weak_dual(h.outer_dart()).unwrap();
            let d = &sub.map;
            assert_eq!(d.vertex_count(), n);
            let dv = d.vertices();
            // each dual vertex is the face of H its darts start in
            for cycle in &dv.cycles {
                let real: Vec<usize> = cycle.iter().copied().filter(|&x| !d.is_half_edge(x)).collect();
                if real.is_empty() {
                    continue;
                }
                let face = faces.of[sub.original[real[0]]];
                assert_ne!(face, outer);
                assert_eq!(real.len(), faces.cycles[face].len() - 1 - usize::from(faces.of[h.half_edge()] == face));
            }
        }
    }
}
