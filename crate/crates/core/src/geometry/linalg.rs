//! Small dense exact linear algebra over ℚ (fraction-based Gaussian elimination).
//!
//! Matrix sizes here never exceed the ambient dimension, so there is no
//! need for fraction-free (Bareiss) tricks.

use num::{One, Zero};

use crate::rational::{Rational, RationalVector};

/// Row echelon reduction in-place; returns the pivot columns.
fn echelon(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::one() / &m[r][c];
        for j in c..cols {
            m[r][j] = &m[r][j] * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[RationalVector]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.iter().map(|r| r.coords().to_vec()).collect();
    echelon(&mut m).len()
}

/// Affine dimension of a point set (-1 for the empty set is reported as `None`).
pub fn affine_dim(points: &[&RationalVector]) -> Option<usize> {
    let (first, rest) = points.split_first()?;
    let diffs: Vec<RationalVector> = rest.iter().map(|p| *p - *first).collect();
    Some(rank(&diffs))
}

pub fn det(rows: &[RationalVector]) -> Rational {
    let n = rows.len();
    let mut m: Vec<Vec<Rational>> = rows.iter().map(|r| r.coords().to_vec()).collect();
    let mut d = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(c, p);
            d = -d;
        }
        d *= &m[c][c];
        for i in (c + 1)..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[c][c];
                for j in c..n {
                    let s = &f * &m[c][j];
                    m[i][j] -= s;
                }
            }
        }
    }
    d
}

/// Solves `A y = b` for square nonsingular `A`; `None` if singular.
pub fn solve(a: &[RationalVector], b: &[Rational]) -> Option<RationalVector> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.coords().to_vec();
            r.push(bi.clone());
            r
        })
        .collect();
    let piv = echelon(&mut m);
    if piv.len() < n || piv.iter().enumerate().any(|(i, &c)| i != c) {
        return None;
    }
    Some(RationalVector::new(m.into_iter().map(|r| r[n].clone()).collect()))
}

/// A nonzero vector orthogonal to the `n - 1` given rows in ℚⁿ, if they are
/// linearly independent.
pub fn normal_of(rows: &[RationalVector], n: usize) -> Option<RationalVector> {
    debug_assert_eq!(rows.len() + 1, n);
    let mut m: Vec<Vec<Rational>> = rows.iter().map(|r| r.coords().to_vec()).collect();
    let piv = echelon(&mut m);
    if piv.len() != n - 1 {
        return None;
    }
    let free = (0..n).find(|c| !piv.contains(c))?;
    let mut x = vec![Rational::zero(); n];
    x[free] = Rational::one();
    for (i, &c) in piv.iter().enumerate() {
        x[c] = -m[i][free].clone();
    }
    Some(RationalVector::new(x))
}

/// Exact inverse of a square integer matrix, if it exists.
pub fn inverse(a: &[RationalVector]) -> Option<Vec<RationalVector>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.coords().to_vec();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let piv = echelon(&mut m);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(
        m.into_iter()
            .map(|r| RationalVector::new(r[n..].to_vec()))
            .collect(),
    )
}

pub fn mat_vec(m: &[RationalVector], v: &RationalVector) -> RationalVector {
    RationalVector::new(m.iter().map(|row| row.dot(v)).collect())
}

pub fn transpose(m: &[RationalVector]) -> Vec<RationalVector> {
    let n = m.first().map_or(0, RationalVector::dim);
    (0..n)
        .map(|j| RationalVector::new(m.iter().map(|row| row[j].clone()).collect()))
        .collect()
}
