//! Exact greatest lower bound on Ricci curvature of a toric Fano manifold.
//!
//! With barycenter `P_c ≠ O`, the ray from `P_c` through the origin leaves
//! the polytope at `Q`, and `R = |OQ| / |P_c Q|`. On the ray
//! `y(s) = (1 − s) P_c` the exit parameter is `s* = 1 + 1/m*` where
//! `m* = max_r ⟨v_r, P_c⟩`, so `R = (s* − 1)/s* = 1/(1 + m*)`, which is
//! rational. The facets attaining `m*` are the ones containing `Q`.

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::BoundError;
use crate::geometry::LatticePolytope;
use crate::rational::{Rational, RationalVector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RBoundResult {
    pub r: Rational,
    pub barycenter: RationalVector,
    /// Exit point of the ray; absent iff `P_c = O`.
    pub q: Option<RationalVector>,
    /// `max_r ⟨v_r, P_c⟩`; absent iff `P_c = O`.
    pub m_star: Option<Rational>,
    /// Facets containing `Q` (the argmax set of `m*`).
    pub equality_facets: Vec<usize>,
    pub ke_candidate: bool,
    pub volume: Rational,
    /// False for reflexive polytopes whose toric variety is singular; the
    /// formula is still evaluated but the manifold hypothesis fails.
    pub smooth: bool,
}

impl RBoundResult {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.smooth {
            w.push("toric variety is singular; value computed from the formula only".to_owned());
        }
        w
    }
}

/// Exit data of the ray `P_c + ℝ≥0·(O − P_c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RayExit {
    pub q: RationalVector,
    pub m_star: Rational,
    pub equality_facets: Vec<usize>,
}

/// The toric Futaki invariant vanishes iff the barycenter is the origin.
pub fn futaki_vanishes(p: &LatticePolytope) -> bool {
    p.barycenter().is_zero()
}

/// `R` as a function of `m*`: strictly decreasing on `m* ≥ 0`.
pub fn r_from_m_star(m_star: &Rational) -> Rational {
    Rational::one() / (Rational::one() + m_star)
}

pub fn intersect_ray_boundary(p: &LatticePolytope, pc: &RationalVector) -> Result<RayExit, BoundError> {
    if let Some((facet, slack)) = p
        .slacks(pc)
        .into_iter()
        .enumerate()
        .find(|(_, s)| !s.is_positive())
    {
        return Err(BoundError::InteriorityViolation {
            facet,
            slack: slack.to_string(),
        });
    }
    if pc.is_zero() {
        return Err(BoundError::Inconsistent("ray from the origin to itself is undefined".into()));
    }
    let dots: Vec<Rational> = p.facets().iter().map(|f| f.normal.dot(pc)).collect();
    let m_star = dots.iter().max().cloned().expect("polytope has facets");
    if !m_star.is_positive() {
        return Err(BoundError::Inconsistent(format!(
            "no facet bounds the ray (max ⟨v, P_c⟩ = {m_star})"
        )));
    }
    let equality_facets: Vec<usize> = (0..dots.len()).filter(|&r| dots[r] == m_star).collect();
    let q = pc.scale(&(-Rational::one() / &m_star));
    let slacks = p.slacks(&q);
    if let Some((facet, s)) = slacks.iter().enumerate().find(|(_, s)| s.is_negative()) {
        return Err(BoundError::Inconsistent(format!(
            "exit point violates facet {facet} (slack {s})"
        )));
    }
    Ok(RayExit {
        q,
        m_star,
        equality_facets,
    })
}

pub fn ricci_lower_bound(p: &LatticePolytope) -> Result<RBoundResult, BoundError> {
    let report = p.is_reflexive();
    if !report.is_reflexive {
        return Err(BoundError::NotReflexive {
            failing_facets: report.failing_facets,
        });
    }
    let volume = p.volume();
    let barycenter = p.barycenter();
    let smooth = p.is_smooth();
    if barycenter.is_zero() {
        return Ok(RBoundResult {
            r: Rational::one(),
            barycenter,
            q: None,
            m_star: None,
            equality_facets: Vec::new(),
            ke_candidate: true,
            volume,
            smooth,
        });
    }
    let exit = intersect_ray_boundary(p, &barycenter)?;
    let r = r_from_m_star(&exit.m_star);

    // Independent route: the geometric ratio of collinear lengths, squared
    // to stay rational, and the ray-parameter form (s* − 1)/s*.
    let s_star = Rational::one() + Rational::one() / &exit.m_star;
    let r_param = (&s_star - Rational::one()) / &s_star;
    let oq2 = exit.q.norm_squared();
    let pq2 = (&exit.q - &barycenter).norm_squared();
    if r_param != r || &r * &r != oq2 / pq2 {
        return Err(BoundError::Inconsistent(format!(
            "closed form R = {r} disagrees with the length ratio"
        )));
    }
    Ok(RBoundResult {
        r,
        q: Some(exit.q),
        m_star: Some(exit.m_star),
        equality_facets: exit.equality_facets,
        barycenter,
        ke_candidate: false,
        volume,
        smooth,
    })
}

/// Re-derives the boundary point `−(R/(1−R))·P_c` from `res.r` and checks
/// every facet slack exactly: zero precisely on `res.equality_facets`,
/// positive elsewhere. For `R = 1` the certificate is `P_c = O`.
pub fn verify_certificate(p: &LatticePolytope, res: &RBoundResult) -> bool {
    let pc = p.barycenter();
    if pc != res.barycenter {
        return false;
    }
    if res.r.is_one() {
        return pc.is_zero() && res.equality_facets.is_empty() && res.q.is_none();
    }
    if !res.r.is_positive() || res.r > Rational::one() || res.equality_facets.is_empty() {
        return false;
    }
    let c = &res.r / (Rational::one() - &res.r);
    let y = pc.scale(&-c);
    if res.q.as_ref().is_some_and(|q| q != &y) {
        return false;
    }
    p.slacks(&y).iter().enumerate().all(|(r, s)| {
        if res.equality_facets.contains(&r) {
            s.is_zero()
        } else {
            s.is_positive()
        }
    })
}

/// Flat, string-typed record for CSV and structured output. All rationals
/// come straight from the exact computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub name: String,
    pub n: Option<usize>,
    pub vertex_count: Option<usize>,
    pub volume: String,
    pub barycenter: String,
    #[serde(rename = "R")]
    pub r: String,
    pub m_star: String,
    #[serde(rename = "Q")]
    pub q: String,
    pub equality_facets: String,
    pub ke_candidate: Option<bool>,
    pub certificate: Option<bool>,
    pub smooth: Option<bool>,
    pub error: String,
}

impl BoundRecord {
    pub fn from_result(name: &str, p: &LatticePolytope, res: &RBoundResult, certificate: bool) -> Self {
        Self {
            name: name.to_owned(),
            n: Some(p.dimension()),
            vertex_count: Some(p.vertices().len()),
            volume: res.volume.to_string(),
            barycenter: res.barycenter.to_string(),
            r: res.r.to_string(),
            m_star: res.m_star.as_ref().map(ToString::to_string).unwrap_or_default(),
            q: res.q.as_ref().map(ToString::to_string).unwrap_or_default(),
            equality_facets: res
                .equality_facets
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            ke_candidate: Some(res.ke_candidate),
            certificate: Some(certificate),
            smooth: Some(res.smooth),
            error: String::new(),
        }
    }

    pub fn failure(name: &str, error: impl std::fmt::Display) -> Self {
        Self {
            name: name.to_owned(),
            n: None,
            vertex_count: None,
            volume: String::new(),
            barycenter: String::new(),
            r: String::new(),
            m_star: String::new(),
            q: String::new(),
            equality_facets: String::new(),
            ke_candidate: None,
            certificate: None,
            smooth: None,
            error: error.to_string(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_empty() && self.certificate == Some(true)
    }
}

/// Writes records as CSV with a header row and LF line endings.
pub fn records_to_csv(records: &[BoundRecord]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("in-memory csv write");
    }
    if records.is_empty() {
        // serde-driven headers only appear with a first record
        return "name,n,vertex_count,volume,barycenter,R,m_star,Q,equality_facets,ke_candidate,certificate,smooth,error\n".to_owned();
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
