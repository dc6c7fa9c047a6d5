use std::collections::BTreeSet;

use num::{Signed, Zero};

use super::{linalg, LatticePolytope};
use crate::rational::{rat, ratio, Rational, RationalVector};

/// A non-degenerate `n`-simplex given by its `n + 1` vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Simplex {
    pub vertices: Vec<RationalVector>,
}

impl Simplex {
    /// Signed volume `det(v_1 − v_0, …, v_n − v_0) / n!`.
    pub fn signed_volume(&self) -> Rational {
        let (v0, rest) = self.vertices.split_first().expect("simplex has vertices");
        let edges: Vec<RationalVector> = rest.iter().map(|v| v - v0).collect();
        let n = edges.len() as i64;
        let fact: i64 = (1..=n).product();
        linalg::det(&edges) / rat(fact)
    }

    pub fn volume(&self) -> Rational {
        self.signed_volume().abs()
    }

    pub fn centroid(&self) -> RationalVector {
        let n = self.vertices[0].dim();
        let sum = self
            .vertices
            .iter()
            .fold(RationalVector::zeros(n), |acc, v| &acc + v);
        sum.scale(&ratio(1, self.vertices.len() as i64))
    }

    pub fn is_degenerate(&self) -> bool {
        self.signed_volume().is_zero()
    }
}

/// Cone from `apex` over every facet not containing it, with each facet
/// triangulated the same way (recursively, from its first vertex).
pub(super) fn fan(p: &LatticePolytope, apex: usize) -> Vec<Simplex> {
    let n = p.dimension();
    let facet_sets: Vec<BTreeSet<usize>> = (0..p.facets().len())
        .map(|r| p.facet_vertices(r).into_iter().collect())
        .collect();
    let all: BTreeSet<usize> = (0..p.vertices().len()).collect();
    let mut out = Vec::new();
    for simplex in fan_face(p, &facet_sets, &all, n, apex) {
        out.push(Simplex {
            vertices: simplex.iter().map(|&i| p.vertices()[i].clone()).collect(),
        });
    }
    out
}

/// Triangulates the `d`-dimensional face with vertex set `face` as index
/// lists, coning from `apex`.
fn fan_face(
    p: &LatticePolytope,
    facet_sets: &[BTreeSet<usize>],
    face: &BTreeSet<usize>,
    d: usize,
    apex: usize,
) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![apex]];
    }
    // The (d−1)-faces of a face are its intersections with facets that
    // have the right affine dimension.
    let mut subfaces: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for fs in facet_sets {
        let sub: BTreeSet<usize> = face.intersection(fs).copied().collect();
        if sub.len() < d || sub.len() == face.len() {
            continue;
        }
        let pts: Vec<&RationalVector> = sub.iter().map(|&i| &p.vertices()[i]).collect();
        if linalg::affine_dim(&pts) == Some(d - 1) {
            subfaces.insert(sub);
        }
    }
    let mut out = Vec::new();
    for sub in subfaces.iter().filter(|s| !s.contains(&apex)) {
        let sub_apex = *sub.iter().next().expect("nonempty face");
        for mut s in fan_face(p, facet_sets, sub, d - 1, sub_apex) {
            s.insert(0, apex);
            out.push(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_is_its_own_triangulation() {
        let p = LatticePolytope::from_vertices(2, &[vec![-1, -1], vec![2, -1], vec![-1, 2]]).unwrap();
        let t = p.triangulate();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].volume(), ratio(9, 2));
    }

    #[test]
    fn quadrilateral_gives_two_triangles() {
        let p = LatticePolytope::from_vertices(2, &[vec![-1, 0], vec![0, -1], vec![2, -1], vec![-1, 2]]).unwrap();
        for apex in 0..4 {
            let t = p.triangulate_from(apex);
            assert_eq!(t.len(), 2);
            assert!(t.iter().all(|s| !s.is_degenerate()));
            assert!(t.iter().all(|s| s.vertices[0] == p.vertices()[apex]));
        }
    }

    #[test]
    fn segment_is_one_simplex() {
        let p = LatticePolytope::from_vertices(1, &[vec![-1], vec![1], vec![0]]).unwrap();
        let t = p.triangulate();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].volume(), rat(2));
    }

    #[test]
    fn octahedron_fan() {
        let rows = vec![
            vec![1, 0, 0],
            vec![-1, 0, 0],
            vec![0, 1, 0],
            vec![0, -1, 0],
            vec![0, 0, 1],
            vec![0, 0, -1],
        ];
        let p = LatticePolytope::from_vertices(3, &rows).unwrap();
        assert_eq!(p.facets().len(), 8);
        // 4 facets avoid any given apex.
        assert_eq!(p.triangulate().len(), 4);
        assert_eq!(p.volume(), ratio(4, 3));
    }
}
