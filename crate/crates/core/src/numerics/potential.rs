//! The reference potential `ũ0(x) = log Σ_α e^{⟨p_α, x⟩} + C` over the
//! lattice points `p_α` of Δ.
//!
//! Its gradient is the softmax mean of the `p_α` and its Hessian is their
//! softmax covariance, so `Dũ0` maps ℝⁿ into the interior of Δ and
//! `D²ũ0` is positive definite. Everything is evaluated with the
//! max-shift, and facet slacks of the gradient are computed as sums of
//! nonnegative terms `Σ c_α (⟨v_r, p_α⟩ + 1)`, so strict interiority
//! survives rounding even far out where the weights concentrate.

use crate::error::{BoundError, NumericsError};
use crate::geometry::LatticePolytope;
use crate::numerics::quadrature::{tail_estimate, QuadratureSpec};
use crate::rational::{rat, to_f64};

#[derive(Clone, Debug)]
pub struct ToricPotential {
    dimension: usize,
    lattice_points: Vec<Vec<i64>>,
    points: Vec<Vec<f64>>,
    /// `⟨v_r, p_α⟩ + 1 ≥ 0`, indexed `[α][r]`, exact in f64 (small integers).
    point_slacks: Vec<Vec<f64>>,
    normalization_c: f64,
    volume: f64,
    barycenter: Vec<f64>,
    /// Relative truncation estimate `∫_{outside box} e^{−v} / I₀` at build time.
    relative_tail: f64,
    /// `|∫_{box} e^{−ũ0} − Vol| / Vol` on the build quadrature.
    normalization_residual: f64,
}

impl ToricPotential {
    /// Unnormalized potential (`C = 0`) for an explicit point set; mainly for
    /// tests and for evaluating softmax statistics of arbitrary point sets.
    pub fn from_points(dimension: usize, lattice_points: Vec<Vec<i64>>) -> Self {
        let points = lattice_points
            .iter()
            .map(|p| p.iter().map(|&c| c as f64).collect())
            .collect();
        let n_pts = lattice_points.len();
        Self {
            dimension,
            lattice_points,
            points,
            point_slacks: vec![Vec::new(); n_pts],
            normalization_c: 0.0,
            volume: f64::NAN,
            barycenter: vec![f64::NAN; dimension],
            relative_tail: f64::NAN,
            normalization_residual: f64::NAN,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lattice_points(&self) -> &[Vec<i64>] {
        &self.lattice_points
    }

    pub fn normalization_c(&self) -> f64 {
        self.normalization_c
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn barycenter(&self) -> &[f64] {
        &self.barycenter
    }

    pub fn relative_tail(&self) -> f64 {
        self.relative_tail
    }

    pub fn normalization_residual(&self) -> f64 {
        self.normalization_residual
    }

    fn exponents(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let e: Vec<f64> = self
            .points
            .iter()
            .map(|p| p.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        let m = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (e, m)
    }

    /// Softmax weights `c_α(x)`, summing to one.
    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        let (e, m) = self.exponents(x);
        let mut w: Vec<f64> = e.iter().map(|&a| (a - m).exp()).collect();
        let s: f64 = w.iter().sum();
        for c in &mut w {
            *c /= s;
        }
        w
    }

    /// Enveloping function `v(x) = max_α ⟨p_α, x⟩`.
    pub fn envelope(&self, x: &[f64]) -> f64 {
        self.exponents(x).1
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (e, m) = self.exponents(x);
        let s: f64 = e.iter().map(|&a| (a - m).exp()).sum();
        m + s.ln() + self.normalization_c
    }

    /// `e^{−ũ0(x)}`, computed without forming `ũ0` for large |x|.
    pub fn density(&self, x: &[f64]) -> f64 {
        (-self.value(x)).exp()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let w = self.weights(x);
        let g = self.mean(&w);
        debug_assert!(
            self.point_slacks[0].is_empty() || self.facet_slacks_from_weights(&w).iter().all(|&s| s > 0.0),
            "gradient left the open polytope at {x:?}"
        );
        g
    }

    fn mean(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dimension];
        for (c, p) in w.iter().zip(&self.points) {
            for k in 0..self.dimension {
                g[k] += c * p[k];
            }
        }
        g
    }

    /// Covariance `Σ c_α (p_α − μ)(p_α − μ)ᵀ` (centered for accuracy).
    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let w = self.weights(x);
        self.hessian_from_weights(&w)
    }

    fn hessian_from_weights(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dimension;
        let mu = self.mean(w);
        let mut h = vec![vec![0.0; n]; n];
        for (c, p) in w.iter().zip(&self.points) {
            for i in 0..n {
                let di = p[i] - mu[i];
                for j in 0..=i {
                    h[i][j] += c * di * (p[j] - mu[j]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                h[j][i] = h[i][j];
            }
        }
        h
    }

    /// Gradient and Hessian from one weight evaluation.
    pub fn gradient_and_hessian(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let w = self.weights(x);
        (self.mean(&w), self.hessian_from_weights(&w))
    }

    /// `λ_r(Dũ0(x)) + 1` for every facet, each a sum of nonnegative terms.
    pub fn facet_slacks(&self, x: &[f64]) -> Vec<f64> {
        self.facet_slacks_from_weights(&self.weights(x))
    }

    fn facet_slacks_from_weights(&self, w: &[f64]) -> Vec<f64> {
        let k = self.point_slacks.first().map_or(0, Vec::len);
        let mut s = vec![0.0; k];
        for (c, ps) in w.iter().zip(&self.point_slacks) {
            for r in 0..k {
                s[r] += c * ps[r];
            }
        }
        s
    }
}

/// Builds `ũ0` for a reflexive polytope, normalized so that
/// `∫ e^{−ũ0} dx = Vol(Δ)` on the given quadrature: `C = log(I₀ / Vol)` with
/// `I₀ = ∫ (Σ_α e^{⟨p_α, x⟩})^{−1} dx`.
pub fn build_potential(p: &LatticePolytope, quad: &QuadratureSpec) -> Result<ToricPotential, NumericsError> {
    let report = p.is_reflexive();
    if !report.is_reflexive {
        return Err(BoundError::NotReflexive {
            failing_facets: report.failing_facets,
        }
        .into());
    }
    quad.validate()?;
    let n = p.dimension();
    if n > 3 {
        return Err(NumericsError::UnsupportedDimension(n));
    }
    let lattice_points = p.lattice_points();
    let mut pot = ToricPotential::from_points(n, lattice_points);
    pot.point_slacks = pot
        .lattice_points
        .iter()
        .map(|q| p.facets().iter().map(|f| to_f64(&(f.normal.dot_ints(q) + rat(1)))).collect())
        .collect();
    pot.volume = to_f64(&p.volume());
    pot.barycenter = p.barycenter().to_f64();

    let i0 = quad.integrate(n, 1, |x, out| out[0] = pot.density(x))[0];
    if !i0.is_finite() || i0 <= 0.0 {
        return Err(NumericsError::QuadratureNonFinite(format!("I0 = {i0}")));
    }
    let tail = tail_estimate(p, quad.box_halfwidth);
    let relative_tail = tail / i0;
    if !(relative_tail < quad.tail_tolerance) {
        let mut suggested = quad.box_halfwidth;
        while tail_estimate(p, suggested) / i0 >= quad.tail_tolerance && suggested < 1.0e3 {
            suggested += 1.0;
        }
        return Err(NumericsError::TailBoundViolated {
            tail: relative_tail,
            tolerance: quad.tail_tolerance,
            box_halfwidth: quad.box_halfwidth,
            suggested_halfwidth: suggested,
        });
    }
    pot.normalization_c = (i0 / pot.volume).ln();
    pot.relative_tail = relative_tail;
    let check = quad.integrate(n, 1, |x, out| out[0] = pot.density(x))[0];
    if !check.is_finite() {
        return Err(NumericsError::QuadratureNonFinite("normalization check".into()));
    }
    pot.normalization_residual = (check - pot.volume).abs() / pot.volume;
    Ok(pot)
}

pub fn grad_u0(pot: &ToricPotential, x: &[f64]) -> Vec<f64> {
    pot.gradient(x)
}

pub fn hess_u0(pot: &ToricPotential, x: &[f64]) -> Vec<Vec<f64>> {
    pot.hessian(x)
}

/// Determinant of a small symmetric matrix (n ≤ 3).
pub fn det_small(h: &[Vec<f64>]) -> f64 {
    match h.len() {
        1 => h[0][0],
        2 => h[0][0] * h[1][1] - h[0][1] * h[1][0],
        3 => {
            h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
                + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0])
        }
        n => panic!("det_small supports n <= 3, got {n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn square9() -> ToricPotential {
        let mut pts = Vec::new();
        for a in -1..=1 {
            for b in -1..=1 {
                pts.push(vec![a, b]);
            }
        }
        ToricPotential::from_points(2, pts)
    }

    #[test]
    fn covariance_of_symmetric_sets() {
        let h = square9().hessian(&[0.0, 0.0]);
        assert!((h[0][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((h[1][1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(h[0][1].abs() < 1e-15);
        let seg = ToricPotential::from_points(1, vec![vec![-1], vec![0], vec![1]]);
        assert!((seg.hessian(&[0.0])[0][0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_is_the_lattice_mean_at_origin() {
        let blp = corpus::by_name("blp").unwrap();
        let pot = ToricPotential::from_points(2, blp.lattice_points());
        let g = pot.gradient(&[0.0, 0.0]);
        assert!((g[0] - 1.0 / 9.0).abs() < 1e-15 && (g[1] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_concentrates_on_the_maximizing_vertex() {
        let p2 = corpus::by_name("p2").unwrap();
        let pot = ToricPotential::from_points(2, p2.lattice_points());
        let g = pot.gradient(&[50.0, 0.0]);
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] + 1.0).abs() < 1e-8, "{g:?}");
    }

    #[test]
    fn no_overflow_far_out() {
        let pot = square9();
        let v = pot.value(&[1.0e3, -2.0e3]);
        assert!((v - 3.0e3).abs() < 1e-9);
        let h = pot.hessian(&[1.0e3, 1.0e3]);
        assert!(h.iter().flatten().all(|x| x.is_finite()));
    }

    #[test]
    fn hessian_is_jacobian_of_gradient() {
        let blp = corpus::by_name("blp").unwrap();
        let pot = ToricPotential::from_points(2, blp.lattice_points());
        let eps = 1e-5;
        for x in [[0.3, -1.2], [2.0, 0.5], [-3.0, -1.0]] {
            let h = pot.hessian(&x);
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += eps;
                xm[j] -= eps;
                let (gp, gm) = (pot.gradient(&xp), pot.gradient(&xm));
                for i in 0..2 {
                    let fd = (gp[i] - gm[i]) / (2.0 * eps);
                    assert!((fd - h[i][j]).abs() < 1e-8, "{x:?} {i}{j}");
                }
            }
        }
    }
}
