//! Polytope file formats.
//!
//! Text: a header line `n m`, then `m` rows of `n` integers. Lines starting
//! with `#` are comments; a comment of the form `# name: <label>` sets the
//! polytope's name.
//!
//! Structured (JSON): `{"dimension": n, "vertices": [[..], ..],
//! "facet_normals": [[..], ..], "name": ".."}` with `facet_normals` and
//! `name` optional. Coordinates are integers or `"p/q"` strings. Facet
//! normals are required when n > 3.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LatticePolytope;
use crate::error::{GeometryError, InputError, ParseError};
use crate::rational::{RationalRepr, RationalVector};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuredPolytope {
    pub dimension: usize,
    pub vertices: Vec<Vec<RationalRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet_normals: Option<Vec<Vec<RationalRepr>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn to_vector(row: &[RationalRepr]) -> RationalVector {
    RationalVector::new(row.iter().map(|r| r.0.clone()).collect())
}

fn to_repr(v: &RationalVector) -> Vec<RationalRepr> {
    v.coords().iter().cloned().map(RationalRepr).collect()
}

impl StructuredPolytope {
    pub fn from_polytope(p: &LatticePolytope) -> Self {
        Self {
            dimension: p.dimension(),
            vertices: p.vertices().iter().map(to_repr).collect(),
            facet_normals: Some(p.facets().iter().map(|f| to_repr(&f.normal)).collect()),
            name: p.name().map(str::to_owned),
        }
    }

    pub fn into_polytope(self) -> Result<LatticePolytope, GeometryError> {
        let n = self.dimension;
        let vertices: Vec<RationalVector> = self.vertices.iter().map(|r| to_vector(r)).collect();
        let normals: Option<Vec<RationalVector>> = self
            .facet_normals
            .as_ref()
            .map(|ns| ns.iter().map(|r| to_vector(r)).collect());
        let p = match normals {
            None => LatticePolytope::from_rational_vertices(n, vertices)?,
            Some(normals) if n > 3 => LatticePolytope::from_representations(n, vertices, normals)?,
            Some(normals) => {
                let p = LatticePolytope::from_rational_vertices(n, vertices)?;
                let given: BTreeSet<RationalVector> = normals.into_iter().collect();
                let derived: BTreeSet<RationalVector> = p.facets().iter().map(|f| f.normal.clone()).collect();
                if given != derived {
                    return Err(GeometryError::Inconsistent(
                        "facet_normals do not match the hull of the vertices".into(),
                    ));
                }
                p
            }
        };
        Ok(match self.name {
            Some(name) => p.with_name(name),
            None => p,
        })
    }
}

/// Parses the text format into dimension, vertex rows and optional name.
pub fn parse_text(src: &str) -> Result<(usize, Vec<Vec<i64>>, Option<String>), ParseError> {
    let mut name = None;
    let mut header: Option<(usize, usize)> = None;
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in src.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(label) = comment.trim().strip_prefix("name:") {
                name = Some(label.trim().to_owned());
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match header {
            None => {
                if tokens.len() != 2 {
                    return Err(ParseError::new(
                        lineno,
                        format!("expected header `n m`, found {} tokens", tokens.len()),
                    ));
                }
                let n = parse_count(tokens[0], lineno, "dimension")?;
                let m = parse_count(tokens[1], lineno, "vertex count")?;
                if n == 0 {
                    return Err(ParseError::new(lineno, "dimension must be positive"));
                }
                header = Some((n, m));
            }
            Some((n, m)) => {
                if rows.len() == m {
                    return Err(ParseError::new(lineno, format!("unexpected extra row (header declared {m} rows)")));
                }
                if tokens.len() != n {
                    return Err(ParseError::new(
                        lineno,
                        format!("expected {n} coordinates, found {}", tokens.len()),
                    ));
                }
                let row = tokens
                    .iter()
                    .map(|t| {
                        t.parse::<i64>()
                            .map_err(|_| ParseError::new(lineno, format!("invalid integer `{t}`")))
                    })
                    .collect::<Result<Vec<i64>, _>>()?;
                rows.push(row);
            }
        }
    }
    let Some((n, m)) = header else {
        return Err(ParseError::new(last_line.max(1), "missing header `n m`"));
    };
    if rows.len() != m {
        return Err(ParseError::new(
            last_line.max(1),
            format!("expected {m} vertex rows, found {}", rows.len()),
        ));
    }
    Ok((n, rows, name))
}

fn parse_count(tok: &str, lineno: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>()
        .map_err(|_| ParseError::new(lineno, format!("invalid {what} `{tok}`")))
}

/// Parses either format, detected by a leading `{`.
pub fn parse_polytope(src: &str) -> Result<LatticePolytope, InputError> {
    if src.trim_start().starts_with('{') {
        let s: StructuredPolytope = serde_json::from_str(src)
            .map_err(|e| ParseError::new(e.line(), e.to_string()))?;
        Ok(s.into_polytope()?)
    } else {
        let (n, rows, name) = parse_text(src)?;
        let p = LatticePolytope::from_vertices(n, &rows)?;
        Ok(match name {
            Some(name) => p.with_name(name),
            None => p,
        })
    }
}

/// Reads a polytope file; the file stem becomes the name if none is given.
pub fn read_polytope(path: &Path) -> Result<LatticePolytope, InputError> {
    let src = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let p = parse_polytope(&src)?;
    if p.name().is_some() {
        return Ok(p);
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok(match stem {
        Some(stem) => p.with_name(stem),
        None => p,
    })
}

/// Text form in canonical vertex order.
pub fn to_text(p: &LatticePolytope) -> String {
    let mut out = String::new();
    if let Some(name) = p.name() {
        let _ = writeln!(out, "# name: {name}");
    }
    let _ = writeln!(out, "{} {}", p.dimension(), p.vertices().len());
    for v in p.vertices() {
        let row: Vec<String> = v.coords().iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn to_structured(p: &LatticePolytope) -> String {
    serde_json::to_string_pretty(&StructuredPolytope::from_polytope(p)).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLP: &str = "# blow-up of the plane at a point\n# name: blp\n2 4\n-1 0\n0 -1\n2 -1\n-1 2\n";

    #[test]
    fn text_round_trip() {
        let p = parse_polytope(BLP).unwrap();
        assert_eq!(p.name(), Some("blp"));
        assert_eq!(p.vertices().len(), 4);
        let again = parse_polytope(&to_text(&p)).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn structured_round_trip() {
        let p = parse_polytope(BLP).unwrap();
        let s = to_structured(&p);
        assert!(s.contains("\"facet_normals\""));
        assert_eq!(parse_polytope(&s).unwrap(), p);
    }

    #[test]
    fn structured_without_normals() {
        let src = r#"{"dimension": 1, "vertices": [[1], [-1]]}"#;
        let p = parse_polytope(src).unwrap();
        assert_eq!(p.vertices()[0], RationalVector::from_ints(&[-1]));
        assert_eq!(p.name(), None);
    }

    #[test]
    fn structured_with_wrong_normals_is_rejected() {
        let src = r#"{"dimension": 1, "vertices": [[1], [-1]], "facet_normals": [[2], [-1]]}"#;
        assert!(matches!(
            parse_polytope(src),
            Err(InputError::Geometry(GeometryError::Inconsistent(_)))
        ));
    }

    #[test]
    fn wrong_token_count_reports_line() {
        let src = "2 3\n-1 -1\n2 -1 5\n-1 2\n";
        match parse_polytope(src) {
            Err(InputError::Parse(e)) => {
                assert_eq!(e.line, 3);
                assert!(e.message.contains("expected 2 coordinates"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        let line = |src: &str| match parse_text(src) {
            Err(e) => e.line,
            Ok(_) => 0,
        };
        assert_eq!(line("2 3\n1 1\n"), 2);
        assert_eq!(line("# only comments\n"), 1);
        assert_eq!(line("2\n"), 1);
        assert_eq!(line("2 1\n1 x\n"), 2);
        assert_eq!(line("2 1\n1 1\n2 2\n"), 3);
        assert!(matches!(parse_polytope("{\"dimension\": 2,\n \"vertices\": [[1]"), Err(InputError::Parse(_))));
    }
}
