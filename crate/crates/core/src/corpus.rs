//! The 16 reflexive polygons up to lattice equivalence, bundled as text
//! files under `data/reflexive-polygons`.
//!
//! Names encode the number of boundary lattice points and vertices
//! (`b6v4` has 6 boundary points and 4 vertices), except for the five smooth
//! ones: `p2`, `p1xp1`, `blp`, `blpq`, `blpqr` (the plane blown up at up to
//! three torus-fixed points).

use crate::geometry::io::parse_polytope;
use crate::geometry::LatticePolytope;

/// (file stem, file contents), in file-name order.
pub const FILES: [(&str, &str); 16] = [
    ("01-b3v3", include_str!("../data/reflexive-polygons/01-b3v3.txt")),
    ("02-b4v3", include_str!("../data/reflexive-polygons/02-b4v3.txt")),
    ("03-b4v4a", include_str!("../data/reflexive-polygons/03-b4v4a.txt")),
    ("04-b4v4b", include_str!("../data/reflexive-polygons/04-b4v4b.txt")),
    ("05-b5v4", include_str!("../data/reflexive-polygons/05-b5v4.txt")),
    ("06-b5v5", include_str!("../data/reflexive-polygons/06-b5v5.txt")),
    ("07-b6v3", include_str!("../data/reflexive-polygons/07-b6v3.txt")),
    ("08-b6v4", include_str!("../data/reflexive-polygons/08-b6v4.txt")),
    ("09-b6v5", include_str!("../data/reflexive-polygons/09-b6v5.txt")),
    ("10-blpqr", include_str!("../data/reflexive-polygons/10-blpqr.txt")),
    ("11-b7v4", include_str!("../data/reflexive-polygons/11-b7v4.txt")),
    ("12-blpq", include_str!("../data/reflexive-polygons/12-blpq.txt")),
    ("13-b8v3", include_str!("../data/reflexive-polygons/13-b8v3.txt")),
    ("14-blp", include_str!("../data/reflexive-polygons/14-blp.txt")),
    ("15-p1xp1", include_str!("../data/reflexive-polygons/15-p1xp1.txt")),
    ("16-p2", include_str!("../data/reflexive-polygons/16-p2.txt")),
];

/// Names of the smooth polygons, in the order P², P¹×P¹, then one, two and
/// three blow-ups of P².
pub const SMOOTH: [&str; 5] = ["p2", "p1xp1", "blp", "blpq", "blpqr"];

pub fn all() -> Vec<LatticePolytope> {
    FILES
        .iter()
        .map(|(stem, src)| parse_polytope(src).unwrap_or_else(|e| panic!("bundled polygon {stem}: {e}")))
        .collect()
}

/// Looks up a bundled polygon by its `name:` label.
pub fn by_name(name: &str) -> Option<LatticePolytope> {
    all().into_iter().find(|p| p.name() == Some(name))
}

pub fn smooth() -> Vec<LatticePolytope> {
    SMOOTH.iter().map(|n| by_name(n).expect("bundled smooth polygon")).collect()
}
