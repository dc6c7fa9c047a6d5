//! Finite-difference Newton solver for the real Monge–Ampère family
//!
//! ```text
//! log det D²u + (1 − t) ũ0 + t u = 0,      u = ũ0 + φ,
//! ```
//!
//! on a uniform grid over `[−L, L]ⁿ` (n = 1, 2).
//!
//! Discretization notes, each forced by the structure of the problem:
//!
//! - Only `φ` is differenced; `D²ũ0` is the exact softmax covariance. Far
//!   from the origin `D²ũ0` is exponentially small in the directions normal
//!   to the face that `Dũ0` approaches, and differencing `ũ0` itself puts an
//!   `O(h²)` stencil error exactly there, which destroys convexity.
//! - The mixed derivative uses a one-sided cross stencil aligned with the
//!   sign of `∂²ũ0/∂x∂y` (`(Δ₍₁,₁₎ − Δₓ − Δᵧ)/2h²` for negative coupling,
//!   `(Δₓ + Δᵧ − Δ₍₁,₋₁₎)/2h²` for positive), which keeps the stencil
//!   monotone-leaning where the Hessian is anisotropic. Where the coupling
//!   vanishes the symmetric four-corner stencil is used, so symmetric
//!   problems get symmetric discretizations.
//! - The truncation boundary carries homogeneous Neumann data (mirror ghost
//!   nodes). Pinning `φ = 0` there forces a boundary layer against an
//!   exponentially degenerate Hessian and Newton cannot converge; the exact
//!   solution's `φ` tends to nonzero constants on the faces at infinity.
//! - At `t = 0` the equation only sees `D²φ`, so constants are a null
//!   direction. The system is closed by an extra unknown constant `c`
//!   (`log det D²u + ũ0 + c = 0`) with `φ` pinned at the central node; `c`
//!   is reported as the discrete normalization defect.
//! - `φ` is stored as an unevaluated sum `hi + lo`. Second differences of
//!   a function of size `O(1)` lose `ε/h²` absolute accuracy, which is
//!   larger than the `u_xx ~ 1e−4` seen near the corners of the box, so a
//!   single double cannot reach a `1e−8` residual there.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::NumericsError;
use crate::numerics::potential::ToricPotential;
use crate::numerics::quadrature::pairwise_sum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub box_halfwidth: f64,
    pub grid_h: f64,
    pub newton_tolerance: f64,
    pub max_newton_iterations: usize,
    /// Smallest line-search step before declaring a stall.
    pub min_line_search_step: f64,
    /// A converged state whose key-identity residual exceeds this no longer
    /// represents a solution on ℝⁿ; the continuation treats it as a failure.
    pub key_identity_tolerance: f64,
    pub dt: f64,
    pub min_dt: f64,
    pub t_max: f64,
    pub cross_stencil: CrossStencil,
}

/// Discretization of the mixed derivative `∂²φ/∂x∂y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossStencil {
    /// One-sided diagonal aligned with the sign of `∂²ũ0/∂x∂y`.
    Adaptive,
    /// Four-corner centered difference everywhere.
    Symmetric,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            box_halfwidth: 8.0,
            grid_h: 1.0 / 16.0,
            newton_tolerance: 1e-8,
            max_newton_iterations: 50,
            min_line_search_step: 1e-4,
            key_identity_tolerance: 5e-2,
            dt: 0.05,
            min_dt: 1.0 / 640.0,
            t_max: 0.95,
            cross_stencil: CrossStencil::Adaptive,
        }
    }
}

impl SolverConfig {
    pub fn nodes_per_axis(&self) -> usize {
        (2.0 * self.box_halfwidth / self.grid_h).round() as usize + 1
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        let bad = |m: String| Err(NumericsError::InvalidConfig(m));
        if !(self.box_halfwidth > 0.0 && self.grid_h > 0.0) {
            return bad("box half-width and grid spacing must be positive".into());
        }
        let k = 2.0 * self.box_halfwidth / self.grid_h;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return bad(format!(
                "grid spacing {} does not divide the box [−{L}, {L}]",
                self.grid_h,
                L = self.box_halfwidth
            ));
        }
        if self.nodes_per_axis() < 5 {
            return bad("grid needs at least 5 nodes per axis".into());
        }
        if !(0.0 < self.dt && self.min_dt > 0.0 && self.min_dt <= self.dt) {
            return bad("need 0 < min_dt <= dt".into());
        }
        if !(0.0..1.0).contains(&self.t_max) {
            return bad(format!("t_max = {} is outside [0, 1)", self.t_max));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cross {
    /// `∂²ũ0/∂x∂y < 0`: uses the (1,1) diagonal.
    Plus,
    /// `∂²ũ0/∂x∂y > 0`: uses the (1,−1) diagonal.
    Minus,
    /// No coupling: symmetric four-corner stencil.
    Symmetric,
}

/// Neighbour offsets, in the order stencil coefficients are stored.
const OFFSETS: [(i64, i64); 9] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)];

fn active_offsets(n: usize, cross: Cross) -> &'static [usize] {
    match (n, cross) {
        (1, _) => &[0, 1, 2],
        (_, Cross::Plus) => &[0, 1, 2, 3, 4, 5, 6],
        (_, Cross::Minus) => &[0, 1, 2, 3, 4, 7, 8],
        (_, Cross::Symmetric) => &[0, 1, 2, 3, 4, 5, 6, 7, 8],
    }
}

/// A grid function `hi + lo` (see module notes).
#[derive(Clone, Debug, PartialEq)]
pub struct SplitField {
    pub hi: Vec<f64>,
    pub lo: Vec<f64>,
}

impl SplitField {
    pub fn zeros(len: usize) -> Self {
        Self {
            hi: vec![0.0; len],
            lo: vec![0.0; len],
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.hi[i] + self.lo[i]
    }

    /// `self + alpha·d`, keeping the rounding error of the update in `lo`.
    fn axpy(&self, alpha: f64, d: &[f64]) -> Self {
        let mut hi = Vec::with_capacity(d.len());
        let mut lo = Vec::with_capacity(d.len());
        for i in 0..d.len() {
            let inc = alpha * d[i] + self.lo[i];
            let s = self.hi[i] + inc;
            hi.push(s);
            lo.push(inc - (s - self.hi[i]));
        }
        Self { hi, lo }
    }
}

/// Converged solution at one value of `t` plus diagnostics.
#[derive(Clone, Debug)]
pub struct MAPathState {
    pub t: f64,
    pub dimension: usize,
    pub box_halfwidth: f64,
    pub grid_h: f64,
    pub nodes_per_axis: usize,
    /// `φ = u − ũ0` on the grid.
    pub phi: SplitField,
    /// `w_t = (1 − t)ũ0 + t u = ũ0 + tφ` on the grid.
    pub w: Vec<f64>,
    /// Grid node of the discrete minimum of `w_t`.
    pub argmin_node: usize,
    /// Minimizer of `w_t` after one Newton step on the local quadratic model.
    pub x_t: Vec<f64>,
    pub m_t: f64,
    /// `Dũ0(x_t)`.
    pub moment_image: Vec<f64>,
    pub newton_residual: f64,
    pub newton_iterations: usize,
    pub key_identity_residual: f64,
    /// `∫ e^{−w_t}` over the box (trapezoid rule).
    pub mass: f64,
    /// Free constant in the `t = 0` problem; zero for `t > 0`.
    pub normalization_shift: f64,
    /// `max |det D²_h u − e^{−w_t − c}| / max e^{−w_t − c}` over the nodes.
    pub consistency: f64,
}

impl MAPathState {
    pub fn grid_point(&self, node: usize) -> Vec<f64> {
        grid_point(self.dimension, self.nodes_per_axis, self.box_halfwidth, self.grid_h, node)
    }

    pub fn u_values(&self, pot: &ToricPotential) -> Vec<f64> {
        (0..self.w.len())
            .map(|i| pot.value(&self.grid_point(i)) + self.phi.value(i))
            .collect()
    }

    pub fn argmin_on_boundary(&self) -> bool {
        let k = self.nodes_per_axis;
        let mut rest = self.argmin_node;
        for _ in 0..self.dimension {
            let i = rest % k;
            rest /= k;
            if i == 0 || i == k - 1 {
                return true;
            }
        }
        false
    }
}

fn grid_point(n: usize, k: usize, l: f64, h: f64, node: usize) -> Vec<f64> {
    if n == 1 {
        vec![-l + node as f64 * h]
    } else {
        vec![-l + (node / k) as f64 * h, -l + (node % k) as f64 * h]
    }
}

/// Precomputed grid data and cached sparse factorization structure for one
/// potential and one grid.
pub struct ContinuitySolver<'a> {
    pot: &'a ToricPotential,
    config: SolverConfig,
    n: usize,
    k: usize,
    h: f64,
    u0: Vec<f64>,
    /// `D²ũ0` per node as `(xx, yy, xy)`; `yy`, `xy` unused when n = 1.
    h0: Vec<[f64; 3]>,
    grad0: Vec<Vec<f64>>,
    cross: Vec<Cross>,
    /// Trapezoid weights.
    weights: Vec<f64>,
    center: usize,
    pattern: [Option<Pattern>; 2],
}

struct Pattern {
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: SymbolicLu<usize>,
}

impl<'a> ContinuitySolver<'a> {
    pub fn new(pot: &'a ToricPotential, config: SolverConfig) -> Result<Self, NumericsError> {
        config.validate()?;
        let n = pot.dimension();
        if !(n == 1 || n == 2) {
            return Err(NumericsError::UnsupportedDimension(n));
        }
        let k = config.nodes_per_axis();
        let h = config.grid_h;
        let l = config.box_halfwidth;
        let len = k.pow(n as u32);
        let data: Vec<(f64, [f64; 3], Vec<f64>)> = (0..len)
            .into_par_iter()
            .map(|node| {
                let x = grid_point(n, k, l, h, node);
                let (g, hs) = pot.gradient_and_hessian(&x);
                let h3 = if n == 1 {
                    [hs[0][0], 0.0, 0.0]
                } else {
                    [hs[0][0], hs[1][1], hs[0][1]]
                };
                (pot.value(&x), h3, g)
            })
            .collect();
        let mut u0 = Vec::with_capacity(len);
        let mut h0 = Vec::with_capacity(len);
        let mut grad0 = Vec::with_capacity(len);
        for (v, hh, g) in data {
            u0.push(v);
            h0.push(hh);
            grad0.push(g);
        }
        let cross = h0
            .iter()
            .map(|hh| {
                let scale = (hh[0] * hh[1]).sqrt();
                if n == 1 || config.cross_stencil == CrossStencil::Symmetric || hh[2].abs() <= 1e-9 * scale {
                    Cross::Symmetric
                } else if hh[2] < 0.0 {
                    Cross::Plus
                } else {
                    Cross::Minus
                }
            })
            .collect();
        let w1: Vec<f64> = (0..k)
            .map(|i| if i == 0 || i == k - 1 { 0.5 * h } else { h })
            .collect();
        let weights = (0..len)
            .map(|node| if n == 1 { w1[node] } else { w1[node / k] * w1[node % k] })
            .collect();
        let center = if n == 1 { k / 2 } else { (k / 2) * k + k / 2 };
        Ok(Self {
            pot,
            config,
            n,
            k,
            h,
            u0,
            h0,
            grad0,
            cross,
            weights,
            center,
            pattern: [None, None],
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.u0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u0.is_empty()
    }

    pub fn grid_point(&self, node: usize) -> Vec<f64> {
        grid_point(self.n, self.k, self.config.box_halfwidth, self.h, node)
    }

    /// Index of the neighbour at `off`, mirrored at the box faces.
    fn neighbour(&self, node: usize, off: (i64, i64)) -> usize {
        let k = self.k as i64;
        let refl = |i: i64| {
            if i < 0 {
                -i
            } else if i >= k {
                2 * (k - 1) - i
            } else {
                i
            }
        };
        if self.n == 1 {
            refl(node as i64 + off.0) as usize
        } else {
            let (i, j) = ((node / self.k) as i64, (node % self.k) as i64);
            (refl(i + off.0) * k + refl(j + off.1)) as usize
        }
    }

    /// Discrete Hessian of `f` at `node` as `(xx, yy, xy)`.
    fn stencil_hessian(&self, f: &[f64], node: usize) -> [f64; 3] {
        let h2 = self.h * self.h;
        let c = f[node];
        let at = |o: usize| f[self.neighbour(node, OFFSETS[o])];
        let d2 = |a: f64, b: f64| ((a - c) - (c - b)) / h2;
        let fxx = d2(at(1), at(2));
        if self.n == 1 {
            return [fxx, 0.0, 0.0];
        }
        let fyy = d2(at(3), at(4));
        let fxy = match self.cross[node] {
            Cross::Plus => (d2(at(5), at(6)) - fxx - fyy) / 2.0,
            Cross::Minus => (fxx + fyy - d2(at(7), at(8))) / 2.0,
            Cross::Symmetric => ((at(5) - at(7)) - (at(8) - at(6))) / (4.0 * h2),
        };
        [fxx, fyy, fxy]
    }

    /// `D²_h u = D²ũ0 + D²_h φ` at a node.
    fn u_hessian(&self, phi: &SplitField, node: usize) -> [f64; 3] {
        let a = self.stencil_hessian(&phi.hi, node);
        let b = self.stencil_hessian(&phi.lo, node);
        let h0 = self.h0[node];
        [h0[0] + a[0] + b[0], h0[1] + a[1] + b[1], h0[2] + a[2] + b[2]]
    }

    fn det(&self, hs: &[f64; 3]) -> f64 {
        if self.n == 1 {
            hs[0]
        } else {
            hs[0] * hs[1] - hs[2] * hs[2]
        }
    }

    /// Residual `log det D²_h u + ũ0 + tφ + c`, or the first node where the
    /// discrete Hessian is not positive definite.
    fn residual(&self, phi: &SplitField, t: f64, c: f64) -> Result<Vec<f64>, usize> {
        let r: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|node| {
                let hs = self.u_hessian(phi, node);
                let d = self.det(&hs);
                if !(hs[0] > 0.0 && d > 0.0) {
                    return f64::NAN;
                }
                d.ln() + self.u0[node] + t * phi.value(node) + c
            })
            .collect();
        match r.iter().position(|v| v.is_nan()) {
            Some(node) => Err(node),
            None => Ok(r),
        }
    }

    fn node_coords(&self, node: usize) -> Vec<usize> {
        if self.n == 1 {
            vec![node]
        } else {
            vec![node / self.k, node % self.k]
        }
    }

    /// Builds (once) the sparsity pattern; `pinned` replaces the column of
    /// the central node by the column of the constant `c`.
    fn pattern(&mut self, pinned: bool) -> &Pattern {
        let slot = usize::from(pinned);
        if self.pattern[slot].is_none() {
            let mut pairs = Vec::new();
            for node in 0..self.len() {
                for &o in active_offsets(self.n, self.cross[node]) {
                    let col = self.neighbour(node, OFFSETS[o]);
                    if !(pinned && col == self.center) {
                        pairs.push(Pair { row: node, col });
                    }
                }
                if pinned {
                    pairs.push(Pair { row: node, col: self.center });
                }
            }
            let (symbolic, argsort) =
                SymbolicSparseColMat::try_new_from_indices(self.len(), self.len(), &pairs).expect("valid sparsity pattern");
            let lu = SymbolicLu::try_new(symbolic.as_ref()).expect("symbolic LU");
            self.pattern[slot] = Some(Pattern { symbolic, argsort, lu });
        }
        self.pattern[slot].as_ref().expect("pattern was just built")
    }

    /// Jacobian values in pattern order.
    fn jacobian_values(&self, phi: &SplitField, t: f64, pinned: bool) -> Vec<f64> {
        let h2 = self.h * self.h;
        let per_node: Vec<Vec<f64>> = (0..self.len())
            .into_par_iter()
            .map(|node| {
                let hs = self.u_hessian(phi, node);
                let mut coef = [0.0; 9];
                if self.n == 1 {
                    let a = 1.0 / hs[0] / h2;
                    coef[0] = -2.0 * a + t;
                    coef[1] = a;
                    coef[2] = a;
                } else {
                    let d = self.det(&hs);
                    let (a, b, cc) = (hs[1] / d, hs[0] / d, -2.0 * hs[2] / d);
                    let (ax, by, cp, cm) = match self.cross[node] {
                        Cross::Plus => ((a - 0.5 * cc) / h2, (b - 0.5 * cc) / h2, 0.5 * cc / h2, 0.0),
                        Cross::Minus => ((a + 0.5 * cc) / h2, (b + 0.5 * cc) / h2, 0.0, -0.5 * cc / h2),
                        Cross::Symmetric => (a / h2, b / h2, 0.25 * cc / h2, -0.25 * cc / h2),
                    };
                    let diag_sum = match self.cross[node] {
                        Cross::Symmetric => 0.0,
                        _ => 2.0 * cp + 2.0 * cm,
                    };
                    coef = [-2.0 * ax - 2.0 * by - diag_sum + t, ax, ax, by, by, cp, cp, cm, cm];
                }
                let mut vals = Vec::with_capacity(10);
                for &o in active_offsets(self.n, self.cross[node]) {
                    let col = self.neighbour(node, OFFSETS[o]);
                    if !(pinned && col == self.center) {
                        vals.push(coef[o]);
                    }
                }
                if pinned {
                    vals.push(1.0);
                }
                vals
            })
            .collect();
        per_node.concat()
    }

    fn newton_step(&mut self, phi: &SplitField, t: f64, r: &[f64], pinned: bool) -> Result<Vec<f64>, String> {
        let vals = self.jacobian_values(phi, t, pinned);
        let pat = self.pattern(pinned);
        let mat = SparseColMat::<usize, f64>::new_from_argsort(pat.symbolic.clone(), &pat.argsort, &vals)
            .map_err(|e| format!("matrix assembly failed: {e:?}"))?;
        let lu = Lu::try_new_with_symbolic(pat.lu.clone(), mat.as_ref()).map_err(|e| format!("LU failed: {e:?}"))?;
        let mut rhs = Mat::<f64>::from_fn(r.len(), 1, |i, _| -r[i]);
        lu.solve_in_place(rhs.as_mut());
        let du: Vec<f64> = (0..r.len()).map(|i| rhs[(i, 0)]).collect();
        if du.iter().any(|v| !v.is_finite()) {
            return Err("singular Jacobian".into());
        }
        Ok(du)
    }

    /// Damped Newton at fixed `t` from `seed` (or `φ = 0`).
    ///
    /// If Newton fails from the seed, the solve is retried along the
    /// residual homotopy `G(φ) = (1 − s)·G(φ_seed)`, `s: 0 → 1`, for which
    /// the seed is an exact solution at `s = 0`.
    pub fn solve(&mut self, t: f64, seed: Option<&MAPathState>) -> Result<MAPathState, NumericsError> {
        if !(0.0..1.0).contains(&t) {
            return Err(NumericsError::InvalidConfig(format!("t = {t} is outside [0, 1)")));
        }
        let pinned = t == 0.0;
        let mut phi = match seed {
            Some(s) if s.phi.hi.len() == self.len() => s.phi.clone(),
            Some(_) => return Err(NumericsError::InvalidConfig("seed grid does not match".into())),
            None => SplitField::zeros(self.len()),
        };
        if pinned {
            // The pinned node is not an unknown; keep it at zero.
            let v = phi.value(self.center);
            phi = SplitField {
                hi: phi.hi.iter().map(|x| x - v).collect(),
                lo: phi.lo.clone(),
            };
        }
        let tol = self.config.newton_tolerance;
        let direct = match self.newton(t, phi.clone(), 0.0, None, tol) {
            Ok(sol) => return Ok(self.finish(t, sol.phi, sol.c, sol.residual, sol.iterations)),
            Err(e) => e,
        };
        let r0 = match self.residual(&phi, t, 0.0) {
            Ok(r) => r,
            Err(_) => return Err(direct),
        };
        let mut s: f64 = 0.0;
        let mut ds: f64 = 0.25;
        let mut c = 0.0;
        let mut iterations = 0;
        while s < 1.0 {
            let next = (s + ds).min(1.0);
            let offset: Vec<f64> = r0.iter().map(|v| (1.0 - next) * v).collect();
            // intermediate stages only need to stay in the basin
            let stage_tol = if next == 1.0 { tol } else { tol.max(1e-6) };
            match self.newton(t, phi.clone(), c, Some(&offset), stage_tol) {
                Ok(sol) => {
                    iterations += sol.iterations;
                    phi = sol.phi;
                    c = sol.c;
                    s = next;
                    if s == 1.0 {
                        return Ok(self.finish(t, phi, c, sol.residual, iterations));
                    }
                    ds = (ds * 1.5).min(1.0 - s);
                }
                Err(_) => {
                    ds /= 2.0;
                    if ds < 1.0 / 256.0 {
                        return Err(direct);
                    }
                }
            }
        }
        Err(direct)
    }

    /// Damped Newton for `G(φ) = offset` (zero if `None`).
    fn newton(
        &mut self,
        t: f64,
        mut phi: SplitField,
        mut c: f64,
        offset: Option<&[f64]>,
        tol: f64,
    ) -> Result<NewtonSolution, NumericsError> {
        let pinned = t == 0.0;
        let not_pd = |node: usize| NumericsError::HessianNotPD {
            t,
            node: self.node_coords(node),
        };
        let shifted = |mut r: Vec<f64>| {
            if let Some(off) = offset {
                for (v, o) in r.iter_mut().zip(off) {
                    *v -= o;
                }
            }
            r
        };
        let mut r = shifted(self.residual(&phi, t, c).map_err(not_pd)?);
        for it in 0..=self.config.max_newton_iterations {
            let max_r = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max_r < tol {
                return Ok(NewtonSolution {
                    phi,
                    c,
                    residual: max_r,
                    iterations: it,
                });
            }
            if it == self.config.max_newton_iterations {
                break;
            }
            let mut du = self
                .newton_step(&phi, t, &r, pinned)
                .map_err(|reason| NumericsError::NewtonDiverged {
                    t,
                    iterations: it,
                    residual: max_r,
                    reason,
                })?;
            let mut dc = 0.0;
            if pinned {
                dc = du[self.center];
                du[self.center] = 0.0;
            }
            let norm = l2(&r);
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha >= self.config.min_line_search_step {
                let trial = phi.axpy(alpha, &du);
                if let Ok(rt) = self.residual(&trial, t, c + alpha * dc) {
                    let rt = shifted(rt);
                    if l2(&rt) < (1.0 - 1e-4 * alpha) * norm {
                        accepted = Some((trial, rt));
                        break;
                    }
                }
                alpha /= 2.0;
            }
            match accepted {
                Some((trial, rt)) => {
                    phi = trial;
                    r = rt;
                    c += alpha * dc;
                }
                None => {
                    return Err(NumericsError::NewtonDiverged {
                        t,
                        iterations: it,
                        residual: max_r,
                        reason: "line search stalled".into(),
                    })
                }
            }
        }
        Err(NumericsError::NewtonDiverged {
            t,
            iterations: self.config.max_newton_iterations,
            residual: r.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            reason: "iteration limit reached".into(),
        })
    }

    fn finish(&self, t: f64, phi: SplitField, c: f64, residual: f64, iterations: usize) -> MAPathState {
        let len = self.len();
        let w: Vec<f64> = (0..len).map(|i| self.u0[i] + t * phi.value(i)).collect();
        let argmin = (0..len)
            .min_by(|&a, &b| w[a].total_cmp(&w[b]))
            .expect("nonempty grid");
        let (x_t, m_t) = self.refine_minimizer(&phi, &w, t, argmin);
        let moment_image = self.pot.gradient(&x_t);

        let dens: Vec<f64> = w.iter().map(|v| (-v).exp()).collect();
        let mass = pairwise_sum(&(0..len).map(|i| self.weights[i] * dens[i]).collect::<Vec<_>>());
        let vol = self.pot.volume();
        let pc = self.pot.barycenter();
        let coef = t / (1.0 - t);
        let ki: f64 = (0..self.n)
            .map(|d| {
                let terms: Vec<f64> = (0..len).map(|i| self.weights[i] * self.grad0[i][d] * dens[i]).collect();
                let v = pairwise_sum(&terms) / vol + coef * pc[d];
                v * v
            })
            .sum::<f64>()
            .sqrt();

        let mut worst: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for i in 0..len {
            let target = (-w[i] - c).exp();
            let d = self.det(&self.u_hessian(&phi, i));
            worst = worst.max((d - target).abs());
            peak = peak.max(target);
        }
        MAPathState {
            t,
            dimension: self.n,
            box_halfwidth: self.config.box_halfwidth,
            grid_h: self.h,
            nodes_per_axis: self.k,
            phi,
            w,
            argmin_node: argmin,
            x_t,
            m_t,
            moment_image,
            newton_residual: residual,
            newton_iterations: iterations,
            key_identity_residual: ki,
            mass,
            normalization_shift: c,
            consistency: worst / peak,
        }
    }

    /// One Newton step on the local quadratic model of `w` at the grid
    /// minimum, clamped to one cell.
    fn refine_minimizer(&self, phi: &SplitField, w: &[f64], t: f64, node: usize) -> (Vec<f64>, f64) {
        let x = self.grid_point(node);
        let h = self.h;
        let g: Vec<f64> = (0..self.n)
            .map(|d| {
                let (p, m) = if d == 0 { (1, 2) } else { (3, 4) };
                (w[self.neighbour(node, OFFSETS[p])] - w[self.neighbour(node, OFFSETS[m])]) / (2.0 * h)
            })
            .collect();
        let a = self.stencil_hessian(&phi.hi, node);
        let b = self.stencil_hessian(&phi.lo, node);
        let h0 = self.h0[node];
        let hw: [f64; 3] = std::array::from_fn(|i| h0[i] + t * (a[i] + b[i]));
        let step = if self.n == 1 {
            if hw[0] > 0.0 {
                vec![-g[0] / hw[0]]
            } else {
                vec![0.0]
            }
        } else {
            let det = hw[0] * hw[1] - hw[2] * hw[2];
            if hw[0] > 0.0 && det > 0.0 {
                vec![-(hw[1] * g[0] - hw[2] * g[1]) / det, -(hw[0] * g[1] - hw[2] * g[0]) / det]
            } else {
                vec![0.0, 0.0]
            }
        };
        let step: Vec<f64> = step.into_iter().map(|s| s.clamp(-h, h)).collect();
        let mut model = w[node];
        for d in 0..self.n {
            model += g[d] * step[d];
        }
        let (sx, sy) = (step[0], step.get(1).copied().unwrap_or(0.0));
        model += 0.5 * (hw[0] * sx * sx + hw[1] * sy * sy + 2.0 * hw[2] * sx * sy);
        let x_t = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        (x_t, model)
    }
}

struct NewtonSolution {
    phi: SplitField,
    c: f64,
    residual: f64,
    iterations: usize,
}

fn l2(v: &[f64]) -> f64 {
    pairwise_sum(&v.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt()
}

/// Solves the equation at a single `t`, building a fresh solver.
pub fn solve_continuity(
    pot: &ToricPotential,
    t: f64,
    seed: Option<&MAPathState>,
    config: &SolverConfig,
) -> Result<MAPathState, NumericsError> {
    ContinuitySolver::new(pot, config.clone())?.solve(t, seed)
}

/// `‖(1/Vol) ∫ Dũ0 e^{−w_t} dx + t/(1−t) P_c‖₂` over the solver grid for an
/// externally supplied barycenter (trapezoid rule).
pub fn key_identity_residual(pot: &ToricPotential, state: &MAPathState, pc: &[f64]) -> f64 {
    let n = state.dimension;
    let k = state.nodes_per_axis;
    let h = state.grid_h;
    let w1 = |i: usize| if i == 0 || i == k - 1 { 0.5 * h } else { h };
    let mut acc = vec![Vec::with_capacity(state.w.len()); n];
    for i in 0..state.w.len() {
        let x = state.grid_point(i);
        let wt = if n == 1 { w1(i) } else { w1(i / k) * w1(i % k) };
        let g = pot.gradient(&x);
        let e = (-state.w[i]).exp();
        for d in 0..n {
            acc[d].push(wt * g[d] * e);
        }
    }
    let coef = state.t / (1.0 - state.t);
    acc.iter()
        .zip(pc)
        .map(|(col, p)| {
            let v = pairwise_sum(col) / pot.volume() + coef * p;
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

/// Fit of `w_t(x) ≥ κ|x − x_t| − C` over the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearGrowth {
    pub kappa: f64,
    pub offset: f64,
}

/// The two parameters trade off against each other, so the offset is fixed
/// at `C = 1 − m_t` (the bound then holds with unit margin at the minimum)
/// and `κ` is the largest slope compatible with it:
/// `κ = min_{x ≠ x_t} (w_t(x) + C) / |x − x_t|`.
pub fn estimate_linear_growth(state: &MAPathState) -> LinearGrowth {
    let offset = 1.0 - state.m_t;
    let kappa = growth_over(state, offset, |_| true);
    LinearGrowth { kappa, offset }
}

/// `κ` restricted to the grid rays from the grid minimum along `+x, −x, +y,
/// −y` (n = 2) or `+x, −x` (n = 1).
pub fn directional_growth(state: &MAPathState) -> Vec<f64> {
    let offset = 1.0 - state.m_t;
    let k = state.nodes_per_axis;
    let n = state.dimension;
    let (ai, aj) = if n == 1 {
        (state.argmin_node, 0)
    } else {
        (state.argmin_node / k, state.argmin_node % k)
    };
    let mut dirs: Vec<Box<dyn Fn(usize) -> bool>> = vec![
        Box::new(move |node| if n == 1 { node > ai } else { node / k > ai && node % k == aj }),
        Box::new(move |node| if n == 1 { node < ai } else { node / k < ai && node % k == aj }),
    ];
    if n == 2 {
        dirs.push(Box::new(move |node| node / k == ai && node % k > aj));
        dirs.push(Box::new(move |node| node / k == ai && node % k < aj));
    }
    dirs.iter().map(|f| growth_over(state, offset, f)).collect()
}

fn growth_over(state: &MAPathState, offset: f64, keep: impl Fn(usize) -> bool) -> f64 {
    let mut kappa = f64::INFINITY;
    for node in 0..state.w.len() {
        if !keep(node) {
            continue;
        }
        let x = state.grid_point(node);
        let dist = x
            .iter()
            .zip(&state.x_t)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist > 1e-12 {
            kappa = kappa.min((state.w[node] + offset) / dist);
        }
    }
    kappa
}
