//! Continuation in `t` with warm starts, step halving, and the run manifest.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bound::ricci_lower_bound;
use crate::error::NumericsError;
use crate::geometry::LatticePolytope;
use crate::numerics::potential::ToricPotential;
use crate::numerics::solver::{directional_growth, estimate_linear_growth, ContinuitySolver, MAPathState, SolverConfig};
use crate::rational::to_f64;

/// Schedule values are snapped to this lattice so repeated halvings produce
/// exactly reproducible `t` values.
const T_QUANTUM: f64 = 1.0 / 1280.0;

fn snap(t: f64) -> f64 {
    (t / T_QUANTUM).round() / T_QUANTUM.recip()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRecord {
    pub t: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    pub x_t: Vec<f64>,
    pub x_t_norm: f64,
    pub m_t: f64,
    pub moment_image: Vec<f64>,
    /// `λ_{r*}(Dũ0(x_t)) + 1` for the tracked facet `r*`.
    pub facet_slack: f64,
    pub key_identity_residual: f64,
    pub kappa: f64,
    pub offset: f64,
    /// Growth rate along each axis ray from the minimum.
    pub directional_kappa: Vec<f64>,
    pub mass: f64,
    pub normalization_shift: f64,
    pub consistency: f64,
}

impl PathRecord {
    pub fn from_state(state: &MAPathState, pot: &ToricPotential, tracked_facet: Option<usize>) -> Self {
        let growth = estimate_linear_growth(state);
        let slacks = pot.facet_slacks(&state.x_t);
        let facet_slack = match tracked_facet {
            Some(r) => slacks[r],
            None => slacks.iter().copied().fold(f64::INFINITY, f64::min),
        };
        Self {
            t: state.t,
            newton_iterations: state.newton_iterations,
            residual: state.newton_residual,
            x_t: state.x_t.clone(),
            x_t_norm: state.x_t.iter().map(|v| v * v).sum::<f64>().sqrt(),
            m_t: state.m_t,
            moment_image: state.moment_image.clone(),
            facet_slack,
            key_identity_residual: state.key_identity_residual,
            kappa: growth.kappa,
            offset: growth.offset,
            directional_kappa: directional_growth(state),
            mass: state.mass,
            normalization_shift: state.normalization_shift,
            consistency: state.consistency,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureRecord {
    pub t: f64,
    pub dt: f64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Reached `t_max`.
    Completed,
    /// Step halving went below `min_dt`.
    DivergenceProtocol,
    /// The initial `t = 0` solve failed.
    InitialSolveFailed,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuationReport {
    pub name: Option<String>,
    pub box_halfwidth: f64,
    pub grid_h: f64,
    pub dt: f64,
    pub min_dt: f64,
    pub t_max: f64,
    /// Exact bound as a decimal and as a rational string.
    pub exact_r: f64,
    pub exact_r_rational: String,
    /// Index of the tracked facet (the first facet attaining `m*`), if any.
    pub tracked_facet: Option<usize>,
    /// Every `t` attempted, in order.
    pub schedule: Vec<f64>,
    pub records: Vec<PathRecord>,
    pub failures: Vec<FailureRecord>,
    pub stop_reason: StopReason,
    #[serde(skip)]
    pub last_state: Option<MAPathState>,
}

impl ContinuationReport {
    pub fn last_converged_t(&self) -> Option<f64> {
        self.records.last().map(|r| r.t)
    }

    /// The last converged `t` is at most `R + 0.1` (and, when `R = 1`, the
    /// schedule completed).
    pub fn consistent_with_exact_r(&self) -> bool {
        match self.last_converged_t() {
            None => false,
            Some(t) if self.exact_r < 1.0 => t <= self.exact_r + 0.1,
            Some(_) => self.stop_reason == StopReason::Completed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,newton_iterations,residual,x_t_1,x_t_2,x_t_norm,m_t,moment_1,moment_2,facet_slack,key_identity_residual,kappa,offset,mass,normalization_shift,consistency\n",
        );
        for r in &self.records {
            let c = |v: &[f64], i: usize| v.get(i).map(|x| format!("{x:e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:e},{},{},{:e},{:e},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.t,
                r.newton_iterations,
                r.residual,
                c(&r.x_t, 0),
                c(&r.x_t, 1),
                r.x_t_norm,
                r.m_t,
                c(&r.moment_image, 0),
                c(&r.moment_image, 1),
                r.facet_slack,
                r.key_identity_residual,
                r.kappa,
                r.offset,
                r.mass,
                r.normalization_shift,
                r.consistency
            );
        }
        out
    }

    /// Columns `(t, |x_t|, λ_{r*}(Dũ0(x_t)) + 1)`.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("t,x_t_norm,facet_slack\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:e},{:e}", r.t, r.x_t_norm, r.facet_slack);
        }
        out
    }
}

/// Why a converged Newton state is still rejected by the continuation.
fn reject_reason(state: &MAPathState, config: &SolverConfig) -> Option<String> {
    if state.argmin_on_boundary() {
        return Some("minimizer of w_t reached the truncation boundary".into());
    }
    if !(state.key_identity_residual <= config.key_identity_tolerance) {
        return Some(format!(
            "key identity residual {:.3e} exceeds {:.1e}: the truncated solution no longer represents one on the whole space",
            state.key_identity_residual, config.key_identity_tolerance
        ));
    }
    None
}

/// Runs `t = 0, dt, 2dt, …` up to `t_max`. A failed step (Newton failure,
/// loss of convexity, or a converged state rejected because its minimizer
/// left the box or the key identity broke down) halves `dt` and retries
/// from the last good state; the run stops once `dt < min_dt`.
pub fn run_continuation(
    p: &LatticePolytope,
    pot: &ToricPotential,
    config: &SolverConfig,
    mut progress: impl FnMut(&str),
) -> Result<ContinuationReport, NumericsError> {
    let bound = ricci_lower_bound(p)?;
    let tracked_facet = bound.equality_facets.first().copied();
    let mut solver = ContinuitySolver::new(pot, config.clone())?;
    let mut report = ContinuationReport {
        name: p.name().map(str::to_owned),
        box_halfwidth: config.box_halfwidth,
        grid_h: config.grid_h,
        dt: config.dt,
        min_dt: config.min_dt,
        t_max: config.t_max,
        exact_r: to_f64(&bound.r),
        exact_r_rational: bound.r.to_string(),
        tracked_facet,
        schedule: Vec::new(),
        records: Vec::new(),
        failures: Vec::new(),
        stop_reason: StopReason::InitialSolveFailed,
        last_state: None,
    };

    let mut dt = config.dt;
    let mut t = 0.0;
    let mut last: Option<MAPathState> = None;
    loop {
        report.schedule.push(t);
        let outcome = solver.solve(t, last.as_ref()).and_then(|s| match reject_reason(&s, config) {
            None => Ok(s),
            Some(reason) => Err(NumericsError::NewtonDiverged {
                t,
                iterations: s.newton_iterations,
                residual: s.newton_residual,
                reason,
            }),
        });
        match outcome {
            Ok(state) => {
                let rec = PathRecord::from_state(&state, pot, tracked_facet);
                progress(&format!(
                    "t = {:.5}: {} iterations, |x_t| = {:.3}, slack = {:.4}, key identity = {:.2e}",
                    t, rec.newton_iterations, rec.x_t_norm, rec.facet_slack, rec.key_identity_residual
                ));
                report.records.push(rec);
                last = Some(state);
                if t >= config.t_max {
                    report.stop_reason = StopReason::Completed;
                    break;
                }
            }
            Err(e) => {
                progress(&format!("t = {t:.5}: {e}"));
                report.failures.push(FailureRecord {
                    t,
                    dt,
                    error: e.to_string(),
                });
                if last.is_none() {
                    break;
                }
                dt /= 2.0;
                if dt < config.min_dt {
                    report.stop_reason = StopReason::DivergenceProtocol;
                    break;
                }
            }
        }
        let base = last.as_ref().map(|s| s.t).unwrap_or(0.0);
        t = snap(base + dt).min(config.t_max);
        if t <= base {
            // dt below the schedule quantum.
            report.stop_reason = StopReason::DivergenceProtocol;
            break;
        }
    }
    report.last_state = last;
    Ok(report)
}
