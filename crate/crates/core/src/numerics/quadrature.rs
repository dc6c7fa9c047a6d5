//! Tensor-product quadrature on the box `[−L, L]ⁿ` and the truncation
//! estimate for integrands dominated by `e^{−v}`, `v(x) = max_α⟨p_α, x⟩`.
//!
//! Slices along the first axis are summed in parallel; every reduction is
//! pairwise in a fixed order, so results do not depend on thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::NumericsError;
use crate::geometry::LatticePolytope;
use crate::numerics::potential::{det_small, ToricPotential};
use crate::rational::to_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    Midpoint,
    /// Composite Gauss–Legendre with `order` nodes per panel.
    GaussLegendre { order: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub box_halfwidth: f64,
    pub points_per_axis: usize,
    pub rule: QuadratureRule,
    /// Bound on the relative truncation error `∫_{outside} e^{−v} / I₀`.
    pub tail_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            box_halfwidth: 8.0,
            points_per_axis: 257,
            rule: QuadratureRule::Midpoint,
            tail_tolerance: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn midpoint(box_halfwidth: f64, points_per_axis: usize) -> Self {
        Self {
            box_halfwidth,
            points_per_axis,
            ..Self::default()
        }
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.box_halfwidth > 0.0 && self.box_halfwidth.is_finite()) {
            return Err(NumericsError::InvalidConfig(format!(
                "box half-width must be positive, got {}",
                self.box_halfwidth
            )));
        }
        if self.points_per_axis == 0 {
            return Err(NumericsError::InvalidConfig("points per axis must be positive".into()));
        }
        if let QuadratureRule::GaussLegendre { order } = self.rule {
            if order == 0 || self.points_per_axis % order != 0 {
                return Err(NumericsError::InvalidConfig(format!(
                    "{} points per axis is not a multiple of the Gauss–Legendre order {order}",
                    self.points_per_axis
                )));
            }
        }
        Ok(())
    }

    /// One-dimensional nodes and weights on `[−L, L]`.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let l = self.box_halfwidth;
        let k = self.points_per_axis;
        match self.rule {
            QuadratureRule::Midpoint => {
                let h = 2.0 * l / k as f64;
                ((0..k).map(|i| -l + (i as f64 + 0.5) * h).collect(), vec![h; k])
            }
            QuadratureRule::GaussLegendre { order } => {
                let (gx, gw) = gauss_legendre(order);
                let panels = k / order;
                let ph = 2.0 * l / panels as f64;
                let mut xs = Vec::with_capacity(k);
                let mut ws = Vec::with_capacity(k);
                for p in 0..panels {
                    let mid = -l + (p as f64 + 0.5) * ph;
                    for (x, w) in gx.iter().zip(&gw) {
                        xs.push(mid + 0.5 * ph * x);
                        ws.push(0.5 * ph * w);
                    }
                }
                (xs, ws)
            }
        }
    }

    /// Integrates an `m`-vector valued function over `[−L, L]ⁿ`, n ≤ 3.
    pub fn integrate<F>(&self, n: usize, m: usize, f: F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        assert!((1..=3).contains(&n), "quadrature supports 1 <= n <= 3");
        let (xs, ws) = self.nodes();
        let k = xs.len();
        let inner = k.pow(n as u32 - 1);
        let slices: Vec<Vec<f64>> = (0..k)
            .into_par_iter()
            .map(|i| {
                let mut x = vec![0.0; n];
                let mut out = vec![0.0; m];
                let mut terms = vec![Vec::with_capacity(inner); m];
                x[0] = xs[i];
                for flat in 0..inner {
                    let mut w = ws[i];
                    let mut rest = flat;
                    for d in (1..n).rev() {
                        let j = rest % k;
                        rest /= k;
                        x[d] = xs[j];
                        w *= ws[j];
                    }
                    f(&x, &mut out);
                    for c in 0..m {
                        terms[c].push(w * out[c]);
                    }
                }
                terms.iter().map(|t| pairwise_sum(t)).collect()
            })
            .collect();
        (0..m)
            .map(|c| {
                let col: Vec<f64> = slices.iter().map(|s| s[c]).collect();
                pairwise_sum(&col)
            })
            .collect()
    }
}

/// Deterministic pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on
/// the Legendre polynomial.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Estimate of `∫_{|x|∞ > L} e^{−v(x)} dx` with `v` the support function of
/// Δ (equal to `max_α⟨p_α, x⟩`, since the maximum over lattice points is
/// attained at a vertex). The integrand `e^{−ũ0 + C}` is bounded by `e^{−v}`.
///
/// - n = 1: exact, `e^{−bL}/b + e^{−aL}/a` for Δ = [−a, b].
/// - n = 2: polar form `∫ e^{−r_b h}(r_b/h + 1/h²) dθ` with `h(θ)` the
///   support value and `r_b(θ)` the distance to the box boundary.
/// - n = 3: bound through the ball of radius L, using `v(x) ≥ ρ|x|` with
///   `ρ = min_r 1/|v_r|`.
pub fn tail_estimate(p: &LatticePolytope, l: f64) -> f64 {
    let verts: Vec<Vec<f64>> = p.vertices().iter().map(|v| v.to_f64()).collect();
    let support = |d: &[f64]| -> f64 {
        verts
            .iter()
            .map(|v| v.iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    match p.dimension() {
        1 => {
            let b = support(&[1.0]);
            let a = support(&[-1.0]);
            (-b * l).exp() / b + (-a * l).exp() / a
        }
        2 => {
            let m = 4096;
            let dth = 2.0 * std::f64::consts::PI / m as f64;
            let terms: Vec<f64> = (0..m)
                .map(|i| {
                    let th = (i as f64 + 0.5) * dth;
                    let (s, c) = th.sin_cos();
                    let h = support(&[c, s]);
                    let rb = l / c.abs().max(s.abs());
                    (-rb * h).exp() * (rb / h + 1.0 / (h * h)) * dth
                })
                .collect();
            pairwise_sum(&terms)
        }
        _ => {
            let rho = p
                .facets()
                .iter()
                .map(|f| 1.0 / to_f64(&f.normal.norm_squared()).sqrt())
                .fold(f64::INFINITY, f64::min);
            4.0 * std::f64::consts::PI
                * (-rho * l).exp()
                * (l * l / rho + 2.0 * l / (rho * rho) + 2.0 / (rho * rho * rho))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentResiduals {
    /// `∫ det D²ũ0 dx`.
    pub volume_integral: f64,
    /// `∫ Dũ0 det D²ũ0 dx`.
    pub moment_integral: Vec<f64>,
    /// `|∫ det D²ũ0 − Vol(Δ)|`.
    pub vol_residual: f64,
    /// `vol_residual / Vol(Δ)`.
    pub relative_vol_residual: f64,
    /// `‖∫ Dũ0 det D²ũ0 / Vol(Δ) − P_c‖₂`.
    pub barycenter_residual: f64,
    pub relative_tail: f64,
}

/// Pushes Lebesgue measure forward through `Dũ0`: the image measure is
/// Lebesgue measure on Δ, so its mass is `Vol(Δ)` and its mean is `P_c`.
pub fn moment_pushforward_check(
    pot: &ToricPotential,
    p: &LatticePolytope,
    quad: &QuadratureSpec,
) -> Result<MomentResiduals, NumericsError> {
    quad.validate()?;
    let n = p.dimension();
    let vals = quad.integrate(n, n + 1, |x, out| {
        let (g, h) = pot.gradient_and_hessian(x);
        let d = det_small(&h);
        out[0] = d;
        for k in 0..n {
            out[k + 1] = g[k] * d;
        }
    });
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::QuadratureNonFinite(format!("moment integrals {vals:?}")));
    }
    let vol = to_f64(&p.volume());
    let pc = p.barycenter().to_f64();
    let vol_residual = (vals[0] - vol).abs();
    let barycenter_residual = (0..n)
        .map(|k| (vals[k + 1] / vol - pc[k]).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(MomentResiduals {
        volume_integral: vals[0],
        moment_integral: vals[1..].to_vec(),
        vol_residual,
        relative_vol_residual: vol_residual / vol,
        barycenter_residual,
        relative_tail: tail_estimate(p, quad.box_halfwidth) / vol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_low_degree() {
        for order in 1..=8 {
            let (x, w) = gauss_legendre(order);
            for deg in 0..(2 * order) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "order {order} degree {deg}: {q}");
            }
        }
    }

    #[test]
    fn gaussian_integral() {
        let spec = QuadratureSpec {
            box_halfwidth: 8.0,
            points_per_axis: 256,
            rule: QuadratureRule::GaussLegendre { order: 8 },
            tail_tolerance: 1e-6,
        };
        let v = spec.integrate(2, 1, |x, o| o[0] = (-(x[0] * x[0] + x[1] * x[1])).exp())[0];
        assert!((v - std::f64::consts::PI).abs() < 1e-12, "{v}");
        let v = QuadratureSpec::midpoint(8.0, 401).integrate(3, 1, |x, o| {
            o[0] = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
        })[0];
        assert!((v - std::f64::consts::PI.powf(1.5)).abs() < 1e-10, "{v}");
    }

    #[test]
    fn midpoint_converges_at_second_order() {
        let f = |x: &[f64], o: &mut [f64]| o[0] = 1.0 / (1.0 + x[0] * x[0] + 0.5 * x[1] * x[1]).powi(2);
        let exact = QuadratureSpec {
            box_halfwidth: 1.0,
            points_per_axis: 240,
            rule: QuadratureRule::GaussLegendre { order: 8 },
            tail_tolerance: 1.0,
        }
        .integrate(2, 1, f)[0];
        let e1 = (QuadratureSpec::midpoint(1.0, 40).integrate(2, 1, f)[0] - exact).abs();
        let e2 = (QuadratureSpec::midpoint(1.0, 80).integrate(2, 1, f)[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pairwise_matches_exact_sum() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
    }

    #[test]
    fn segment_tail_is_exact() {
        let seg = LatticePolytope::from_vertices(1, &[vec![-1], vec![1]]).unwrap();
        let t = tail_estimate(&seg, 5.0);
        assert!((t - 2.0 * (-5.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn square_tail_matches_direct_integration() {
        // v(x) = |x|₁ for the square [−1,1]²: outside-box integral is
        // ∫∫ e^{−|x|−|y|} − (box part) = 4 − 4(1 − e^{−L})².
        let sq = LatticePolytope::from_vertices(2, &[vec![-1, -1], vec![1, -1], vec![1, 1], vec![-1, 1]]).unwrap();
        let l = 3.0;
        let exact = 4.0 - 4.0 * (1.0 - (-l as f64).exp()).powi(2);
        let t = tail_estimate(&sq, l);
        assert!((t - exact).abs() < 1e-5 * exact, "{t} vs {exact}");
    }
}
