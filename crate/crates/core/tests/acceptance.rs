//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p toric-ricci --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toric_ricci::numerics::path::{ContinuationReport, StopReason};
use toric_ricci::numerics::{
    build_potential, moment_pushforward_check, run_continuation, QuadratureSpec, SolverConfig, ToricPotential,
};
use toric_ricci::rational::{rat, ratio};
use toric_ricci::{corpus, ricci_lower_bound, verify_certificate, LatticePolytope, RationalVector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn poly(rows: &[[i64; 2]]) -> LatticePolytope {
    let rows: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
    LatticePolytope::from_vertices(2, &rows).unwrap()
}

fn zero_facets(p: &LatticePolytope, q: &RationalVector) -> usize {
    p.facets().iter().filter(|f| f.slack(q).is_zero()).count()
}

fn criterion_1() -> Outcome {
    let p = poly(&[[0, 1], [-1, 1], [-1, -1], [2, -1]]);
    let res = ricci_lower_bound(&p).unwrap();
    let pc = RationalVector::new(vec![ratio(1, 3), ratio(-2, 3)]).scale(&ratio(1, 4));
    let q = pc.scale(&rat(-6));
    let pass = res.barycenter == pc
        && res.r == ratio(6, 7)
        && res.q.as_ref() == Some(&q)
        && p.contains(&q)
        && zero_facets(&p, &q) == 1
        && verify_certificate(&p, &res);
    outcome(pass, format!("P_c = {}, R = {}, facets through -6 P_c: {}", res.barycenter, res.r, zero_facets(&p, &q)))
}

fn criterion_2() -> Outcome {
    let p = poly(&[[-1, -1], [1, -1], [1, 0], [0, 1], [-1, 1]]);
    let res = ricci_lower_bound(&p).unwrap();
    let q = res.barycenter.scale(&ratio(-21, 4));
    let pass = res.r == ratio(21, 25)
        && res.q.as_ref() == Some(&q)
        && p.contains(&q)
        && zero_facets(&p, &q) >= 1
        && verify_certificate(&p, &res);
    outcome(pass, format!("P_c = {}, R = {}, facets through -21/4 P_c: {}", res.barycenter, res.r, zero_facets(&p, &q)))
}

fn criterion_3() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for name in ["p2", "p1xp1", "blpqr"] {
        let p = corpus::by_name(name).unwrap();
        let res = ricci_lower_bound(&p).unwrap();
        pass &= res.r == rat(1) && res.ke_candidate && verify_certificate(&p, &res);
        detail.push(format!("{name}: R = {}", res.r));
    }
    outcome(pass, detail.join(", "))
}

fn random_unimodular(rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut m = vec![vec![1i64, 0], vec![0, 1]];
    for _ in 0..rng.gen_range(1..6) {
        match rng.gen_range(0..3) {
            0 => {
                let i = rng.gen_range(0..2);
                let k = [-2i64, -1, 1, 2][rng.gen_range(0..4)];
                for c in 0..2 {
                    m[i][c] += k * m[1 - i][c];
                }
            }
            1 => m.swap(0, 1),
            _ => {
                let i = rng.gen_range(0..2);
                for c in 0..2 {
                    m[i][c] = -m[i][c];
                }
            }
        }
    }
    m
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let all = corpus::all();
    let mut checked = 0;
    for p in &all {
        let res = ricci_lower_bound(p).unwrap();
        if !(verify_certificate(p, &res) && res.r > rat(0) && res.r <= rat(1)) {
            return outcome(false, format!("{:?}: certificate or range failed", p.name()));
        }
        for _ in 0..20 {
            let q = p.unimodular_transform(&random_unimodular(&mut rng)).unwrap();
            let rq = ricci_lower_bound(&q).unwrap();
            if rq.r != res.r || !verify_certificate(&q, &rq) || q.volume() != p.volume() {
                return outcome(false, format!("{:?}: not invariant", p.name()));
            }
            checked += 1;
        }
    }
    outcome(all.len() == 16, format!("{} polygons, {checked} transforms", all.len()))
}

fn moment_residuals(name: &str, l: f64, k: usize) -> (f64, f64) {
    let quad = QuadratureSpec::midpoint(l, k).with_tail_tolerance(1.0);
    let p = corpus::by_name(name).unwrap();
    let pot = build_potential(&p, &quad).unwrap();
    let r = moment_pushforward_check(&pot, &p, &quad).unwrap();
    (r.relative_vol_residual, r.barycenter_residual)
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64);
    for name in corpus::SMOOTH {
        let (v, b) = moment_residuals(name, 8.0, 257);
        pass &= v < 1e-6 && b < 1e-6;
        worst = (worst.0.max(v), worst.1.max(b));
    }
    // same identities with the box large enough for the exponential tail
    let mut big = (0.0f64, 0.0f64);
    for name in corpus::SMOOTH {
        let (v, b) = moment_residuals(name, 20.0, 641);
        big = (big.0.max(v), big.1.max(b));
    }
    outcome(
        pass,
        format!(
            "L = 8, 257²: max rel. volume {:.2e}, max barycenter {:.2e}; L = 20, 641²: {:.2e}, {:.2e}",
            worst.0, worst.1, big.0, big.1
        ),
    )
}

fn solver_potential(p: &LatticePolytope) -> ToricPotential {
    build_potential(p, &QuadratureSpec::midpoint(8.0, 257).with_tail_tolerance(1e-2)).unwrap()
}

fn continue_to(p: &LatticePolytope, pot: &ToricPotential, h: f64, t_max: f64) -> ContinuationReport {
    let cfg = SolverConfig {
        grid_h: h,
        t_max,
        ..SolverConfig::default()
    };
    run_continuation(p, pot, &cfg, |_| {}).unwrap()
}

fn criterion_6(blp: &LatticePolytope, pot: &ToricPotential) -> Outcome {
    let ki = |h: f64| {
        let rep = continue_to(blp, pot, h, 0.3);
        match (&rep.stop_reason, rep.records.last()) {
            (StopReason::Completed, Some(r)) if r.t == 0.3 => Some(r.key_identity_residual),
            _ => None,
        }
    };
    match (ki(1.0 / 16.0), ki(1.0 / 32.0)) {
        (Some(a), Some(b)) => outcome(a < 5e-2 && b < a, format!("h = 1/16: {a:.3e}, h = 1/32: {b:.3e}")),
        (a, b) => outcome(false, format!("t = 0.3 not reached (h = 1/16: {a:?}, h = 1/32: {b:?})")),
    }
}

fn criterion_7(blp_run: &ContinuationReport) -> Outcome {
    let p = corpus::by_name("p1xp1").unwrap();
    let pot = solver_potential(&p);
    let sym = continue_to(&p, &pot, 1.0 / 16.0, 0.9);
    let t_star = blp_run.last_converged_t().unwrap_or(0.0);
    let stalled = blp_run.stop_reason == StopReason::DivergenceProtocol && (t_star - 6.0 / 7.0).abs() < 0.1;
    let rows = &blp_run.records;
    let slack_down = rows.windows(2).all(|w| w[1].facet_slack < w[0].facet_slack);
    let norm_up = rows.windows(2).all(|w| w[1].x_t_norm >= w[0].x_t_norm);
    let completed = sym.stop_reason == StopReason::Completed && sym.last_converged_t() == Some(0.9);
    outcome(
        stalled && completed && slack_down && norm_up,
        format!(
            "Bl_p stalls at t* = {t_star} ({:?}), slack {:.3} -> {:.3}, |x_t| {:.3} -> {:.3}; P1xP1 reaches {:?}",
            blp_run.stop_reason,
            rows.first().map_or(f64::NAN, |r| r.facet_slack),
            rows.last().map_or(f64::NAN, |r| r.facet_slack),
            rows.first().map_or(f64::NAN, |r| r.x_t_norm),
            rows.last().map_or(f64::NAN, |r| r.x_t_norm),
            sym.last_converged_t()
        ),
    )
}

fn criterion_8(blp_run: &ContinuationReport) -> Outcome {
    let kappas: Vec<f64> = blp_run.records.iter().filter(|r| r.t <= 0.6).map(|r| r.kappa).collect();
    let covered = blp_run.records.iter().any(|r| r.t == 0.6);
    let min = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        covered && min > 0.0,
        format!("{} states on [0, 0.6], min kappa {min:.3}", kappas.len()),
    )
}

fn report(id: usize, title: &str, start: Instant, o: Outcome, failures: &mut usize) {
    if !o.pass {
        *failures += 1;
    }
    println!(
        "{} {id}. {title}: {} [{:.1}s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
}

fn main() -> ExitCode {
    let mut failures = 0;
    let exact: [(&str, fn() -> Outcome); 5] = [
        ("one-point blow-up, R = 6/7", criterion_1),
        ("two-point blow-up, R = 21/25", criterion_2),
        ("vanishing barycenter, R = 1", criterion_3),
        ("certificates and unimodular invariance", criterion_4),
        ("moment identities at L = 8", criterion_5),
    ];
    for (i, (title, run)) in exact.into_iter().enumerate() {
        let start = Instant::now();
        report(i + 1, title, start, run(), &mut failures);
    }

    let blp = corpus::by_name("blp").unwrap();
    let pot = solver_potential(&blp);
    let start = Instant::now();
    report(6, "key identity at t = 0.3", start, criterion_6(&blp, &pot), &mut failures);

    let start = Instant::now();
    let blp_run = continue_to(&blp, &pot, 1.0 / 16.0, 0.95);
    report(7, "blow-up signature", start, criterion_7(&blp_run), &mut failures);
    let start = Instant::now();
    report(8, "linear growth bound", start, criterion_8(&blp_run), &mut failures);

    println!("{} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
