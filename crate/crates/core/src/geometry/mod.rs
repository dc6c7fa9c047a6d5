//! Exact lattice polytopes in vertex and facet representation.
//!
//! Facets are always written as `⟨v, y⟩ ≥ −1`. An arbitrary supporting
//! inequality `⟨a, y⟩ ≥ b` becomes that form by dividing through by `−b`,
//! which requires `b < 0`, i.e. the origin strictly inside. So every
//! constructed [`LatticePolytope`] has the origin in its interior, and only
//! the integrality of the normals (and of the vertices) decides
//! reflexivity.

pub mod io;
pub mod linalg;
mod triangulate;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num::{BigInt, Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::rational::{rat, signum, Rational, RationalVector};

pub use triangulate::Simplex;

/// The facet `⟨normal, y⟩ ≥ −1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Facet {
    pub normal: RationalVector,
}

impl Facet {
    pub fn new(normal: RationalVector) -> Self {
        Self { normal }
    }

    /// `⟨v, y⟩ + 1`, which is zero on the facet and positive inside.
    pub fn slack(&self, y: &RationalVector) -> Rational {
        self.normal.dot(y) + Rational::one()
    }

    pub fn is_integral(&self) -> bool {
        self.normal.is_integral()
    }

    /// Integral normal with entries of gcd one.
    pub fn is_primitive(&self) -> bool {
        self.is_integral()
            && self
                .normal
                .coords()
                .iter()
                .fold(BigInt::zero(), |g, c| g.gcd(c.numer()))
                .is_one()
    }
}

/// Outcome of the reflexivity gate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflexivityReport {
    pub is_lattice: bool,
    pub origin_interior: bool,
    pub normals_integral: bool,
    pub is_reflexive: bool,
    /// Facets whose normalized normal is not an integer vector.
    pub failing_facets: Vec<usize>,
}

/// A full-dimensional polytope with the origin strictly inside, held in
/// both representations.
///
/// Vertex order is canonical: counterclockwise from the lexicographic
/// minimum when n = 2, lexicographic otherwise. Facet order is canonical
/// too: when n = 2, facet `i` is the edge from vertex `i` to vertex `i + 1`;
/// otherwise facets are sorted lexicographically by normal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePolytope {
    dimension: usize,
    vertices: Vec<RationalVector>,
    facets: Vec<Facet>,
    name: Option<String>,
}

impl LatticePolytope {
    /// Convex hull of integer points (n ≤ 3).
    pub fn from_vertices(dimension: usize, rows: &[Vec<i64>]) -> Result<Self, GeometryError> {
        let pts = rows.iter().map(|r| RationalVector::from_ints(r)).collect();
        Self::from_rational_vertices(dimension, pts)
    }

    /// Convex hull of rational points (n ≤ 3). Non-extreme points are
    /// discarded.
    pub fn from_rational_vertices(
        dimension: usize,
        points: Vec<RationalVector>,
    ) -> Result<Self, GeometryError> {
        check_dimension(dimension, &points)?;
        if dimension > 3 {
            return Err(GeometryError::UnsupportedDimension(dimension));
        }
        let points: Vec<RationalVector> = points.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let hyperplanes = supporting_hyperplanes(dimension, &points)?;
        let mut normals = BTreeSet::new();
        for (a, b) in hyperplanes {
            if signum(&b) >= 0 {
                return Err(GeometryError::OriginNotInterior {
                    normal: a.to_string(),
                    offset: b.to_string(),
                });
            }
            normals.insert(a.scale(&(Rational::one() / -b)));
        }
        let facets: Vec<Facet> = normals.into_iter().map(Facet::new).collect();
        let vertices: Vec<RationalVector> = points
            .into_iter()
            .filter(|p| is_extreme(dimension, p, &facets))
            .collect();
        Ok(canonicalize(dimension, vertices, facets, None))
    }

    /// The region `{y : ⟨v_r, y⟩ ≥ −1 ∀r}` for integer normals (n ≤ 3).
    /// Redundant normals are dropped.
    pub fn from_facets(dimension: usize, normals: &[Vec<i64>]) -> Result<Self, GeometryError> {
        let normals: Vec<RationalVector> = normals.iter().map(|r| RationalVector::from_ints(r)).collect();
        Self::from_rational_facets(dimension, normals)
    }

    pub fn from_rational_facets(
        dimension: usize,
        normals: Vec<RationalVector>,
    ) -> Result<Self, GeometryError> {
        check_dimension(dimension, &normals)?;
        if dimension > 3 {
            return Err(GeometryError::UnsupportedDimension(dimension));
        }
        if normals.iter().any(RationalVector::is_zero) {
            return Err(GeometryError::DegenerateInput("zero facet normal".into()));
        }
        // Bounded iff the normals positively span, i.e. the origin is
        // strictly inside their convex hull.
        let normals: Vec<RationalVector> = normals.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        match supporting_hyperplanes(dimension, &normals) {
            Err(GeometryError::DegenerateInput(_)) => {
                return Err(GeometryError::Unbounded(
                    "facet normals do not span the ambient space".into(),
                ))
            }
            Err(e) => return Err(e),
            Ok(hs) => {
                if let Some((a, _)) = hs.iter().find(|(_, b)| signum(b) >= 0) {
                    return Err(GeometryError::Unbounded(format!(
                        "recession direction exists (normals lie in the half-space ⟨{a}, v⟩ ≥ 0)"
                    )));
                }
            }
        }
        let vertices = enumerate_vertices(dimension, &normals);
        if vertices.len() < dimension + 1 {
            return Err(GeometryError::DegenerateInput("too few vertices".into()));
        }
        Self::from_rational_vertices(dimension, vertices)
    }

    /// Builds from both representations without converting, after checking
    /// that they describe the same polytope. Works in any dimension.
    pub fn from_representations(
        dimension: usize,
        vertices: Vec<RationalVector>,
        normals: Vec<RationalVector>,
    ) -> Result<Self, GeometryError> {
        check_dimension(dimension, &vertices)?;
        check_dimension(dimension, &normals)?;
        let vertices: Vec<RationalVector> = vertices.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let facets: Vec<Facet> = normals
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(Facet::new)
            .collect();
        verify_representations(dimension, &vertices, &facets)?;
        Ok(canonicalize(dimension, vertices, facets, None))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[RationalVector] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn facet_index(&self, normal: &RationalVector) -> Option<usize> {
        self.facets.iter().position(|f| &f.normal == normal)
    }

    /// Indices of the vertices lying on facet `r`.
    pub fn facet_vertices(&self, r: usize) -> Vec<usize> {
        let f = &self.facets[r];
        (0..self.vertices.len())
            .filter(|&i| f.slack(&self.vertices[i]).is_zero())
            .collect()
    }

    /// Indices of the facets containing vertex `i`.
    pub fn vertex_facets(&self, i: usize) -> Vec<usize> {
        let v = &self.vertices[i];
        (0..self.facets.len())
            .filter(|&r| self.facets[r].slack(v).is_zero())
            .collect()
    }

    /// `⟨v_r, y⟩ + 1` for every facet.
    pub fn slacks(&self, y: &RationalVector) -> Vec<Rational> {
        self.facets.iter().map(|f| f.slack(y)).collect()
    }

    pub fn contains(&self, y: &RationalVector) -> bool {
        self.facets.iter().all(|f| !f.slack(y).is_negative())
    }

    pub fn contains_strictly(&self, y: &RationalVector) -> bool {
        self.facets.iter().all(|f| f.slack(y).is_positive())
    }

    pub fn is_reflexive(&self) -> ReflexivityReport {
        let is_lattice = self.vertices.iter().all(RationalVector::is_integral);
        let origin_interior = self.contains_strictly(&RationalVector::zeros(self.dimension));
        let failing_facets: Vec<usize> = (0..self.facets.len())
            .filter(|&r| !self.facets[r].is_integral())
            .collect();
        let normals_integral = failing_facets.is_empty();
        ReflexivityReport {
            is_lattice,
            origin_interior,
            normals_integral,
            is_reflexive: is_lattice && origin_interior && normals_integral,
            failing_facets,
        }
    }

    /// Vertices whose incident facet normals do not form a lattice basis.
    /// Empty exactly when the associated toric variety is smooth.
    pub fn singular_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| {
                let inc = self.vertex_facets(i);
                if inc.len() != self.dimension {
                    return true;
                }
                let rows: Vec<RationalVector> = inc.iter().map(|&r| self.facets[r].normal.clone()).collect();
                !(rows.iter().all(RationalVector::is_integral) && linalg::det(&rows).abs().is_one())
            })
            .collect()
    }

    pub fn is_smooth(&self) -> bool {
        self.singular_vertices().is_empty()
    }

    /// Fan triangulation from vertex 0.
    pub fn triangulate(&self) -> Vec<Simplex> {
        self.triangulate_from(0)
    }

    /// Fan triangulation with the given apex vertex; lower-dimensional faces
    /// are fanned recursively from their first vertex.
    pub fn triangulate_from(&self, apex: usize) -> Vec<Simplex> {
        triangulate::fan(self, apex)
    }

    pub fn volume(&self) -> Rational {
        self.triangulate().iter().map(Simplex::volume).sum()
    }

    /// Volume-weighted mean of simplex centroids.
    pub fn barycenter(&self) -> RationalVector {
        barycenter_of(&self.triangulate(), self.dimension)
    }

    /// All integer points of the polytope, boundary included, in
    /// lexicographic order.
    pub fn lattice_points(&self) -> Vec<Vec<i64>> {
        let n = self.dimension;
        let lo: Vec<i64> = (0..n)
            .map(|k| self.vertices.iter().map(|v| v[k].floor().to_integer()).min().unwrap())
            .map(|b| i64::try_from(b).expect("bounding box exceeds i64"))
            .collect();
        let hi: Vec<i64> = (0..n)
            .map(|k| self.vertices.iter().map(|v| v[k].ceil().to_integer()).max().unwrap())
            .map(|b| i64::try_from(b).expect("bounding box exceeds i64"))
            .collect();
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            if self
                .facets
                .iter()
                .all(|f| !(f.normal.dot_ints(&cur) + Rational::one()).is_negative())
            {
                out.push(cur.clone());
            }
            // Odometer, last coordinate fastest, which yields lex order.
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if cur[k] < hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo[k];
            }
        }
    }

    /// Lattice points with every facet slack strictly positive.
    pub fn interior_lattice_points(&self) -> Vec<Vec<i64>> {
        self.lattice_points()
            .into_iter()
            .filter(|p| {
                self.facets
                    .iter()
                    .all(|f| (f.normal.dot_ints(p) + Rational::one()).is_positive())
            })
            .collect()
    }

    /// Image under `y ↦ M y` for an integer matrix with determinant ±1.
    /// Normals map by the inverse transpose, so facet `r` of `self` becomes
    /// the facet of the result with normal `M⁻ᵀ v_r`.
    pub fn unimodular_transform(&self, m: &[Vec<i64>]) -> Result<Self, GeometryError> {
        let n = self.dimension;
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: m.len(),
            });
        }
        let rows: Vec<RationalVector> = m.iter().map(|r| RationalVector::from_ints(r)).collect();
        let d = linalg::det(&rows);
        if !d.abs().is_one() {
            return Err(GeometryError::NotUnimodular(d.to_string()));
        }
        let inv_t = linalg::transpose(&linalg::inverse(&rows).expect("unimodular matrix is invertible"));
        let vertices = self.vertices.iter().map(|v| linalg::mat_vec(&rows, v)).collect();
        let facets = self
            .facets
            .iter()
            .map(|f| Facet::new(linalg::mat_vec(&inv_t, &f.normal)))
            .collect();
        Ok(canonicalize(n, vertices, facets, self.name.clone()))
    }

    /// `k·Δ` for an integer `k ≥ 1`.
    pub fn dilate(&self, k: i64) -> Result<Self, GeometryError> {
        if k < 1 {
            return Err(GeometryError::DegenerateInput(format!("dilation factor {k} < 1")));
        }
        let kq = rat(k);
        let inv = Rational::one() / &kq;
        let vertices = self.vertices.iter().map(|v| v.scale(&kq)).collect();
        let facets = self.facets.iter().map(|f| Facet::new(f.normal.scale(&inv))).collect();
        Ok(canonicalize(self.dimension, vertices, facets, None))
    }
}

pub(crate) fn barycenter_of(simplices: &[Simplex], dimension: usize) -> RationalVector {
    let mut total = Rational::zero();
    let mut moment = RationalVector::zeros(dimension);
    for s in simplices {
        let vol = s.volume();
        moment = &moment + &s.centroid().scale(&vol);
        total += vol;
    }
    moment.scale(&(Rational::one() / total))
}

fn check_dimension(dimension: usize, rows: &[RationalVector]) -> Result<(), GeometryError> {
    if dimension == 0 {
        return Err(GeometryError::DegenerateInput("dimension 0".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.dim() != dimension) {
        return Err(GeometryError::DimensionMismatch {
            expected: dimension,
            found: bad.dim(),
        });
    }
    Ok(())
}

/// All supporting hyperplanes `⟨a, y⟩ ≥ b` of `conv(points)` through `n`
/// affinely independent points, with `a` of arbitrary scale. Brute force
/// over `n`-subsets, which is fine for n ≤ 3 and small inputs.
fn supporting_hyperplanes(
    n: usize,
    points: &[RationalVector],
) -> Result<Vec<(RationalVector, Rational)>, GeometryError> {
    let refs: Vec<&RationalVector> = points.iter().collect();
    if points.len() < n + 1 || linalg::affine_dim(&refs) != Some(n) {
        return Err(GeometryError::DegenerateInput(format!(
            "points do not affinely span dimension {n}"
        )));
    }
    let mut out = Vec::new();
    for subset in combinations(points.len(), n) {
        let base = &points[subset[0]];
        let diffs: Vec<RationalVector> = subset[1..].iter().map(|&i| &points[i] - base).collect();
        let Some(a) = linalg::normal_of(&diffs, n) else {
            continue;
        };
        let b = a.dot(base);
        let mut sign = 0;
        let mut mixed = false;
        for p in points {
            let s = signum(&(a.dot(p) - &b));
            if s != 0 {
                if sign == 0 {
                    sign = s;
                } else if sign != s {
                    mixed = true;
                    break;
                }
            }
        }
        if mixed {
            continue;
        }
        if sign < 0 {
            out.push((-&a, -b));
        } else {
            out.push((a, b));
        }
    }
    Ok(out)
}

/// A point is extreme when the normals of the facets through it span ℝⁿ.
fn is_extreme(n: usize, p: &RationalVector, facets: &[Facet]) -> bool {
    let tight: Vec<RationalVector> = facets
        .iter()
        .filter(|f| f.slack(p).is_zero())
        .map(|f| f.normal.clone())
        .collect();
    linalg::rank(&tight) == n
}

/// Feasible intersections of `n` facet hyperplanes.
fn enumerate_vertices(n: usize, normals: &[RationalVector]) -> Vec<RationalVector> {
    let minus_one = vec![-Rational::one(); n];
    let mut out = BTreeSet::new();
    for subset in combinations(normals.len(), n) {
        let a: Vec<RationalVector> = subset.iter().map(|&i| normals[i].clone()).collect();
        if let Some(y) = linalg::solve(&a, &minus_one) {
            if normals.iter().all(|v| !(v.dot(&y) + Rational::one()).is_negative()) {
                out.insert(y);
            }
        }
    }
    out.into_iter().collect()
}

/// Checks that `conv(vertices)` equals `{⟨v_r, y⟩ ≥ −1}`: every vertex is
/// feasible and extreme, every facet is supported by an (n−1)-dimensional
/// vertex set, the region is pointed, has no unbounded edge, and has no
/// vertex missing from the list.
fn verify_representations(
    n: usize,
    vertices: &[RationalVector],
    facets: &[Facet],
) -> Result<(), GeometryError> {
    let refs: Vec<&RationalVector> = vertices.iter().collect();
    if vertices.len() < n + 1 || linalg::affine_dim(&refs) != Some(n) {
        return Err(GeometryError::DegenerateInput(format!(
            "vertices do not affinely span dimension {n}"
        )));
    }
    for (i, v) in vertices.iter().enumerate() {
        if let Some(r) = facets.iter().position(|f| f.slack(v).is_negative()) {
            return Err(GeometryError::Inconsistent(format!("vertex {i} violates facet {r}")));
        }
        if !is_extreme(n, v, facets) {
            return Err(GeometryError::Inconsistent(format!("vertex {i} is not extreme")));
        }
    }
    for (r, f) in facets.iter().enumerate() {
        let on: Vec<&RationalVector> = vertices.iter().filter(|v| f.slack(v).is_zero()).collect();
        if linalg::affine_dim(&on).map_or(true, |d| d + 1 != n) {
            return Err(GeometryError::Inconsistent(format!("facet {r} is not supporting")));
        }
    }
    let normals: Vec<RationalVector> = facets.iter().map(|f| f.normal.clone()).collect();
    if linalg::rank(&normals) != n {
        return Err(GeometryError::Unbounded("facet region contains a line".into()));
    }
    for v in vertices {
        let tight: Vec<usize> = (0..facets.len()).filter(|&r| facets[r].slack(v).is_zero()).collect();
        for sub in combinations(tight.len(), n - 1) {
            let rows: Vec<RationalVector> = sub.iter().map(|&k| normals[tight[k]].clone()).collect();
            let Some(d) = linalg::normal_of(&rows, n) else {
                continue;
            };
            for dir in [d.clone(), -&d] {
                if normals.iter().all(|a| !a.dot(&dir).is_negative()) {
                    return Err(GeometryError::Unbounded(format!("recession direction {dir}")));
                }
            }
        }
    }
    let known: BTreeSet<&RationalVector> = vertices.iter().collect();
    if let Some(y) = enumerate_vertices(n, &normals).iter().find(|y| !known.contains(y)) {
        return Err(GeometryError::Inconsistent(format!(
            "facet system has vertex {y} missing from the vertex list"
        )));
    }
    Ok(())
}

/// Sorts vertices and facets into the canonical order.
fn canonicalize(
    n: usize,
    mut vertices: Vec<RationalVector>,
    mut facets: Vec<Facet>,
    name: Option<String>,
) -> LatticePolytope {
    if n == 2 {
        vertices.sort_by(ccw_about_origin);
        let start = (0..vertices.len())
            .min_by(|&a, &b| vertices[a].cmp(&vertices[b]))
            .unwrap_or(0);
        vertices.rotate_left(start);
        let m = vertices.len();
        facets = (0..m)
            .map(|i| {
                let (a, b) = (&vertices[i], &vertices[(i + 1) % m]);
                facets
                    .iter()
                    .find(|f| f.slack(a).is_zero() && f.slack(b).is_zero())
                    .expect("consecutive vertices share an edge")
                    .clone()
            })
            .collect();
    } else {
        vertices.sort();
        facets.sort();
    }
    LatticePolytope {
        dimension: n,
        vertices,
        facets,
        name,
    }
}

/// Angular order around the origin starting from the positive x-axis,
/// using only exact sign tests.
fn ccw_about_origin(a: &RationalVector, b: &RationalVector) -> Ordering {
    let half = |p: &RationalVector| {
        if p[1].is_positive() || (p[1].is_zero() && p[0].is_positive()) {
            0
        } else {
            1
        }
    };
    half(a).cmp(&half(b)).then_with(|| {
        let cross = &a[0] * &b[1] - &a[1] * &b[0];
        match signum(&cross) {
            1 => Ordering::Less,
            -1 => Ordering::Greater,
            _ => Ordering::Equal,
        }
    })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn p2() -> LatticePolytope {
        LatticePolytope::from_vertices(2, &[vec![-1, -1], vec![2, -1], vec![-1, 2]]).unwrap()
    }

    fn blp() -> LatticePolytope {
        LatticePolytope::from_vertices(2, &[vec![-1, 0], vec![0, -1], vec![2, -1], vec![-1, 2]]).unwrap()
    }

    fn normals(p: &LatticePolytope) -> BTreeSet<Vec<i64>> {
        p.facets().iter().map(|f| f.normal.to_ints().unwrap()).collect()
    }

    #[test]
    fn combinations_are_complete() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(5, 3)[9], vec![2, 3, 4]);
    }

    #[test]
    fn p2_triangle_facets() {
        let p = p2();
        // Each edge has both endpoints on ⟨v, y⟩ = −1.
        let expect: BTreeSet<Vec<i64>> = [vec![1, 0], vec![0, 1], vec![-1, -1]].into_iter().collect();
        assert_eq!(normals(&p), expect);
        for r in 0..3 {
            assert_eq!(p.facet_vertices(r).len(), 2);
        }
    }

    #[test]
    fn quadrilateral_facets_and_order() {
        let p = blp();
        let expect: BTreeSet<Vec<i64>> =
            [vec![1, 0], vec![0, 1], vec![1, 1], vec![-1, -1]].into_iter().collect();
        assert_eq!(normals(&p), expect);
        // ccw from lexicographic minimum (−1,0).
        let vs: Vec<Vec<i64>> = p.vertices().iter().map(|v| v.to_ints().unwrap()).collect();
        assert_eq!(vs, vec![vec![-1, 0], vec![0, -1], vec![2, -1], vec![-1, 2]]);
        // facet i joins vertex i and i+1
        assert_eq!(p.facets()[0].normal, RationalVector::from_ints(&[1, 1]));
        assert_eq!(p.facets()[3].normal, RationalVector::from_ints(&[1, 0]));
    }

    #[test]
    fn interior_and_collinear_points_are_dropped() {
        let p = LatticePolytope::from_vertices(
            2,
            &[vec![-1, -1], vec![0, -1], vec![1, -1], vec![1, 1], vec![-1, 1], vec![0, 0], vec![-1, -1]],
        )
        .unwrap();
        assert_eq!(p.vertices().len(), 4);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            LatticePolytope::from_vertices(2, &[vec![1, 0], vec![0, 1]]),
            Err(GeometryError::DegenerateInput(_))
        ));
        assert!(matches!(
            LatticePolytope::from_vertices(2, &[vec![0, 0], vec![1, 0], vec![0, 1]]),
            Err(GeometryError::OriginNotInterior { .. })
        ));
        assert!(matches!(
            LatticePolytope::from_vertices(4, &[vec![0, 0, 0, 0]]),
            Err(GeometryError::UnsupportedDimension(4))
        ));
        assert!(matches!(
            LatticePolytope::from_vertices(2, &[vec![1, 0, 0]]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn from_facets_examples() {
        let t = LatticePolytope::from_facets(2, &[vec![1, 0], vec![0, 1], vec![-1, -1]]).unwrap();
        assert_eq!(t, p2());
        let q = LatticePolytope::from_facets(2, &[vec![1, 0], vec![0, 1], vec![1, 1], vec![-1, -1]]).unwrap();
        assert_eq!(q, blp());
        assert!(matches!(
            LatticePolytope::from_facets(2, &[vec![1, 0], vec![-1, 0]]),
            Err(GeometryError::Unbounded(_))
        ));
        assert!(matches!(
            LatticePolytope::from_facets(2, &[vec![1, 0], vec![0, 1], vec![-1, 1]]),
            Err(GeometryError::Unbounded(_))
        ));
    }

    #[test]
    fn redundant_normals_are_dropped() {
        // x + y ≥ −2 only touches the square at the corner (−1,−1).
        let mut ns: Vec<RationalVector> = [[1, 0], [-1, 0], [0, 1], [0, -1]]
            .iter()
            .map(|v| RationalVector::from_ints(v))
            .collect();
        ns.push(RationalVector::new(vec![ratio(1, 2), ratio(1, 2)]));
        let q = LatticePolytope::from_rational_facets(2, ns).unwrap();
        assert_eq!(q.vertices().len(), 4);
        assert_eq!(q.facets().len(), 4);
        assert!(q.facet_index(&RationalVector::new(vec![ratio(1, 2), ratio(1, 2)])).is_none());
    }

    #[test]
    fn reflexivity_reports() {
        assert!(p2().is_reflexive().is_reflexive);
        let sq = LatticePolytope::from_vertices(2, &[vec![-2, -2], vec![2, -2], vec![2, 2], vec![-2, 2]]).unwrap();
        let rep = sq.is_reflexive();
        assert!(!rep.is_reflexive);
        assert!(!rep.normals_integral);
        assert!(rep.is_lattice && rep.origin_interior);
        assert_eq!(rep.failing_facets, vec![0, 1, 2, 3]);
        assert!(sq.facets().iter().any(|f| f.normal == RationalVector::new(vec![ratio(1, 2), rat(0)])));
        let seg = LatticePolytope::from_vertices(1, &[vec![-1], vec![1]]).unwrap();
        assert!(seg.is_reflexive().is_reflexive);
    }

    #[test]
    fn smoothness() {
        assert!(p2().is_smooth());
        assert!(blp().is_smooth());
        let sing = LatticePolytope::from_vertices(2, &[vec![-1, -1], vec![1, 0], vec![0, 1]]).unwrap();
        assert!(!sing.is_smooth());
    }

    #[test]
    fn volumes() {
        assert_eq!(p2().volume(), ratio(9, 2));
        assert_eq!(blp().volume(), rat(4));
        let sq = LatticePolytope::from_vertices(2, &[vec![-1, -1], vec![1, -1], vec![1, 1], vec![-1, 1]]).unwrap();
        assert_eq!(sq.volume(), rat(4));
    }

    /// Shoelace area and first moments, independent of the fan code.
    fn shoelace(p: &LatticePolytope) -> (Rational, Rational, Rational) {
        let v = p.vertices();
        let m = v.len();
        let (mut a, mut mx, mut my) = (Rational::zero(), Rational::zero(), Rational::zero());
        for i in 0..m {
            let (p0, p1) = (&v[i], &v[(i + 1) % m]);
            let c = &p0[0] * &p1[1] - &p1[0] * &p0[1];
            mx += &c * (&p0[0] + &p1[0]);
            my += &c * (&p0[1] + &p1[1]);
            a += c;
        }
        let area = a / rat(2);
        let six_a = &area * rat(6);
        (area.clone(), mx / &six_a, my / six_a)
    }

    #[test]
    fn barycenter_matches_shoelace_moments() {
        let p = blp();
        let (area, cx, cy) = shoelace(&p);
        assert_eq!(area, p.volume());
        assert_eq!(p.barycenter(), RationalVector::new(vec![cx, cy]));
        assert_eq!(p.barycenter(), RationalVector::new(vec![ratio(1, 12), ratio(1, 12)]));
        assert!(p2().barycenter().is_zero());
    }

    #[test]
    fn lattice_point_counts() {
        assert_eq!(blp().lattice_points().len(), 9);
        assert_eq!(p2().lattice_points().len(), 10);
        let seg = LatticePolytope::from_vertices(1, &[vec![-1], vec![1]]).unwrap();
        assert_eq!(seg.lattice_points(), vec![vec![-1], vec![0], vec![1]]);
        assert_eq!(p2().interior_lattice_points(), vec![vec![0, 0]]);
    }

    #[test]
    fn unimodular_examples() {
        let p = p2();
        assert_eq!(p.unimodular_transform(&[vec![1, 0], vec![0, 1]]).unwrap(), p);
        assert_eq!(p.unimodular_transform(&[vec![0, 1], vec![1, 0]]).unwrap(), p);
        let sq = LatticePolytope::from_vertices(2, &[vec![-1, -1], vec![1, -1], vec![1, 1], vec![-1, 1]]).unwrap();
        let sh = sq.unimodular_transform(&[vec![1, 1], vec![0, 1]]).unwrap();
        assert_ne!(sh, sq);
        assert_eq!(sh.volume(), rat(4));
        assert!(matches!(
            sq.unimodular_transform(&[vec![2, 0], vec![0, 1]]),
            Err(GeometryError::NotUnimodular(_))
        ));
    }

    #[test]
    fn cube_in_three_dimensions() {
        let mut rows = Vec::new();
        for x in [-1, 1] {
            for y in [-1, 1] {
                for z in [-1, 1] {
                    rows.push(vec![x, y, z]);
                }
            }
        }
        let c = LatticePolytope::from_vertices(3, &rows).unwrap();
        assert_eq!(c.facets().len(), 6);
        assert_eq!(c.vertices().len(), 8);
        assert_eq!(c.volume(), rat(8));
        assert!(c.barycenter().is_zero());
        assert_eq!(c.lattice_points().len(), 27);
        assert!(c.is_reflexive().is_reflexive && c.is_smooth());
        for apex in 0..8 {
            assert_eq!(c.triangulate_from(apex).len(), 6);
        }
    }

    #[test]
    fn both_representations_in_four_dimensions() {
        // The 4-simplex conv{e1..e4, −Σe_i} and its facet normals.
        let mut vs: Vec<RationalVector> = (0..4)
            .map(|i| RationalVector::from_ints(&(0..4).map(|j| i64::from(i == j)).collect::<Vec<_>>()))
            .collect();
        vs.push(RationalVector::from_ints(&[-1, -1, -1, -1]));
        let mut ns: Vec<RationalVector> = (0..4)
            .map(|i| {
                let mut v = vec![-1i64; 4];
                v[i] = 4;
                RationalVector::from_ints(&v)
            })
            .collect();
        ns.push(RationalVector::from_ints(&[-1, -1, -1, -1]));
        let s = LatticePolytope::from_representations(4, vs.clone(), ns.clone()).unwrap();
        assert_eq!(s.volume(), ratio(5, 24));
        assert!(s.barycenter().is_zero());
        assert!(s.is_reflexive().is_reflexive);
        // Dropping a facet leaves an unbounded region.
        assert!(LatticePolytope::from_representations(4, vs.clone(), ns[..4].to_vec()).is_err());
        // Dropping a vertex is inconsistent with the facets.
        assert!(LatticePolytope::from_representations(4, vs[..4].to_vec(), ns).is_err());
    }
}
