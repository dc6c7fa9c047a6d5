use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toric_ricci::numerics::potential::det_small;
use toric_ricci::numerics::{build_potential, moment_pushforward_check, QuadratureSpec, ToricPotential};
use toric_ricci::{corpus, LatticePolytope, NumericsError};

fn relaxed(l: f64, k: usize) -> QuadratureSpec {
    QuadratureSpec::midpoint(l, k).with_tail_tolerance(1.0)
}

fn potential(name: &str, quad: &QuadratureSpec) -> (LatticePolytope, ToricPotential) {
    let p = corpus::by_name(name).unwrap();
    let pot = build_potential(&p, quad).unwrap();
    (p, pot)
}

#[test]
fn gradient_stays_strictly_inside() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in corpus::SMOOTH {
        let (p, pot) = potential(name, &relaxed(8.0, 65));
        for _ in 0..10_000 {
            let x = [rng.gen_range(-50.0..=50.0), rng.gen_range(-50.0..=50.0)];
            let slacks = pot.facet_slacks(&x);
            assert_eq!(slacks.len(), p.facets().len());
            assert!(slacks.iter().all(|&s| s > 0.0), "{name} at {x:?}: {slacks:?}");
        }
    }
}

#[test]
fn gradient_concentrates_on_the_maximizing_vertex() {
    let (_, pot) = potential("p2", &relaxed(8.0, 65));
    let g = pot.gradient(&[50.0, 0.0]);
    assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] + 1.0).abs() < 1e-8, "{g:?}");
}

#[test]
fn segment_variance() {
    let seg = LatticePolytope::from_vertices(1, &[vec![-1], vec![1]]).unwrap();
    let pot = build_potential(&seg, &relaxed(30.0, 6001)).unwrap();
    assert!((pot.hessian(&[0.0])[0][0] - 2.0 / 3.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn hessian_matches_difference_of_gradient(x in -6.0..6.0f64, y in -6.0..6.0f64, which in 0..5usize) {
        let p = corpus::by_name(corpus::SMOOTH[which]).unwrap();
        let pot = ToricPotential::from_points(2, p.lattice_points());
        let h = 1e-4;
        let hs = pot.hessian(&[x, y]);
        for d in 0..2 {
            let mut a = [x, y];
            let mut b = [x, y];
            a[d] += h;
            b[d] -= h;
            let (ga, gb) = (pot.gradient(&a), pot.gradient(&b));
            for e in 0..2 {
                let fd = (ga[e] - gb[e]) / (2.0 * h);
                prop_assert!((fd - hs[e][d]).abs() < 1e-6, "entry ({e},{d}): {fd} vs {}", hs[e][d]);
            }
        }
        prop_assert!((hs[0][1] - hs[1][0]).abs() < 1e-15);
        prop_assert!(hs[0][0] > 0.0 && det_small(&hs) > 0.0);
    }
}

#[test]
fn normalization_reproduces_volume() {
    let quad = relaxed(20.0, 641);
    for name in corpus::SMOOTH {
        let (p, pot) = potential(name, &quad);
        let vol = toric_ricci::rational::to_f64(&p.volume());
        let check = quad.integrate(2, 1, |x, o| o[0] = pot.density(x))[0];
        assert!((check - vol).abs() / vol < 1e-12, "{name}: {check}");
        assert!(pot.normalization_residual() < 1e-12);
        assert!(pot.relative_tail() < 1e-6);
    }
}

#[test]
fn segment_volume_by_fundamental_theorem() {
    let seg = LatticePolytope::from_vertices(1, &[vec![-1], vec![1]]).unwrap();
    let quad = relaxed(30.0, 6001);
    let pot = build_potential(&seg, &quad).unwrap();
    let res = moment_pushforward_check(&pot, &seg, &quad).unwrap();
    assert!((res.volume_integral - 2.0).abs() < 1e-8, "{}", res.volume_integral);
    assert!(res.barycenter_residual < 1e-8);
}

#[test]
fn symmetric_barycenters_vanish() {
    // The square box shares every symmetry of the square, so the truncated
    // integrand of P¹×P¹ is exactly balanced at any L.
    let quad = relaxed(8.0, 257);
    let (p, pot) = potential("p1xp1", &quad);
    let res = moment_pushforward_check(&pot, &p, &quad).unwrap();
    assert!(res.barycenter_residual < 1e-8, "{}", res.barycenter_residual);
    // P² and the hexagon have symmetries the box lacks; the residual is
    // then truncation-limited and needs a larger box.
    let quad = relaxed(20.0, 641);
    for name in ["p2", "blpqr"] {
        let (p, pot) = potential(name, &quad);
        let res = moment_pushforward_check(&pot, &p, &quad).unwrap();
        assert!(res.barycenter_residual < 1e-7, "{name}: {}", res.barycenter_residual);
    }
}

#[test]
fn moment_identities_with_an_adequate_box() {
    let quad = QuadratureSpec::midpoint(20.0, 641);
    for name in corpus::SMOOTH {
        let (p, pot) = potential(name, &quad);
        let res = moment_pushforward_check(&pot, &p, &quad).unwrap();
        assert!(res.relative_vol_residual < 1e-6, "{name}: {res:?}");
        assert!(res.barycenter_residual < 1e-6, "{name}: {res:?}");
    }
}

#[test]
fn undersized_box_reports_tail_violation() {
    let p = corpus::by_name("blp").unwrap();
    match build_potential(&p, &QuadratureSpec::midpoint(2.0, 257)) {
        Err(NumericsError::TailBoundViolated {
            suggested_halfwidth, ..
        }) => assert!(suggested_halfwidth > 8.0),
        other => panic!("expected a tail violation, got {other:?}"),
    }
}

#[test]
fn default_box_is_too_small_for_the_default_tolerance() {
    // The truncated mass at L = 8 is ~5e-3 of the total; see the
    // acceptance notes.
    let p = corpus::by_name("blp").unwrap();
    assert!(matches!(
        build_potential(&p, &QuadratureSpec::default()),
        Err(NumericsError::TailBoundViolated { .. })
    ));
}

#[test]
fn midpoint_volume_error_is_at_least_second_order() {
    // Large box so that truncation is far below the discretization error.
    // The integrand is analytic and decays at the box faces, so the
    // midpoint rule does much better than its generic h² rate here.
    for name in ["blp", "p2"] {
        let err = |k: usize| {
            let quad = relaxed(24.0, k);
            let (p, pot) = potential(name, &quad);
            moment_pushforward_check(&pot, &p, &quad).unwrap().vol_residual
        };
        let ratio = err(96) / err(192);
        assert!(ratio > 3.5, "{name}: ratio {ratio}");
    }
}

#[test]
fn non_reflexive_input_is_refused() {
    let p = LatticePolytope::from_vertices(2, &[vec![-2, -2], vec![2, -2], vec![2, 2], vec![-2, 2]]).unwrap();
    assert!(matches!(
        build_potential(&p, &QuadratureSpec::default()),
        Err(NumericsError::Bound(_))
    ));
}
