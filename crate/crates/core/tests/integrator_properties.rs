mod common;

use common::{adaptive_simpson, cubic, poisson, random_system};
use plap_core::{
    build_system, flux_consistency, integrate_radial, startup_state, GridSpec, IntegrationError,
    IntegrationOptions, Trajectory,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run(sys: &plap_core::ValidatedSystem, opts: &IntegrationOptions) -> Trajectory {
    integrate_radial(sys, 1.0, 1.0, opts).unwrap()
}

#[test]
fn poisson_startup_gradient_is_exact() {
    let sys = poisson(10.0);
    let r0 = 1e-6;
    let st = startup_state(&sys, 1.0, 1.0, r0);
    assert!((st.du / (r0 / 3.0) - 1.0).abs() < 1e-14);
    assert!((st.dv / (r0 / 3.0) - 1.0).abs() < 1e-14);
}

#[test]
fn startup_fluxes_match_quadrature_of_frozen_integrands() {
    let sys = build_system(
        2.5,
        4,
        0.4,
        10.0,
        &[[1.3, 0.7], [0.4, 1.9]],
        &[[0.8, 0.2]],
        &[[1.0, 0.9], [0.5, 0.3]],
        &[[1.0, 0.4]],
        &[[1.0, 1.2], [2.0, 0.5]],
    )
    .unwrap();
    let (a, b, r0) = (1.0, 1.7, 1e-6);
    let st = startup_state(&sys, a, b, r0);
    let (p, n1, alpha) = (sys.p(), f64::from(sys.n() - 1), sys.alpha());
    let q1 = p - 1.0 - alpha;
    let delta = n1 * q1 / (p - 1.0);
    let g = |terms: &[[f64; 2]], s: f64| terms.iter().map(|[c, e]| c * s.powf(*e)).sum::<f64>();
    let f1 = |s: f64| 1.3 * s.powf(0.7) + 0.4 * s.powf(1.9);
    let f2 = |s: f64| 0.8 * s.powf(0.2);
    let g1b = g(&[[1.0, 0.9], [0.5, 0.3]], b);
    let g2b = g(&[[1.0, 0.4]], b);

    let flux_p = |r: f64| {
        delta / n1 * g1b * adaptive_simpson(&|s: f64| s.powf(delta) * f1(s), 0.0, r, 1e-10)
    };
    let want_p = flux_p(r0);
    assert!(
        (st.flux_p / want_p - 1.0).abs() < 1e-6,
        "{} vs {want_p}",
        st.flux_p
    );

    let du = |s: f64| {
        if s == 0.0 {
            0.0
        } else {
            (flux_p(s) / s.powf(delta)).powf(1.0 / q1)
        }
    };
    let integrand = |s: f64| s.powf(n1) * f2(s) * g2b * g(&[[1.0, 1.2], [2.0, 0.5]], du(s));
    let want_s = adaptive_simpson(&integrand, 0.0, r0, 1e-9);
    assert!(
        (st.flux_s / want_s - 1.0).abs() < 1e-6,
        "{} vs {want_s}",
        st.flux_s
    );
}

#[test]
fn startup_gradient_scales_under_radius_halving() {
    let (m1, alpha, p) = (0.6, 0.5, 3.2);
    let sys = build_system(
        p,
        3,
        alpha,
        10.0,
        &[[2.0, m1]],
        &[[1.0, 0.0]],
        &[[1.0, 1.0]],
        &[[1.0, 0.5]],
        &[[1.0, 1.0]],
    )
    .unwrap();
    let q1 = p - 1.0 - alpha;
    for &r0 in &[1e-6, 1e-5, 1e-3] {
        let ratio =
            startup_state(&sys, 1.0, 1.0, 0.5 * r0).du / startup_state(&sys, 1.0, 1.0, r0).du;
        let want = 2f64.powf(-(m1 + 1.0) / q1);
        assert!((ratio / want - 1.0).abs() < 1e-12, "{ratio} vs {want}");
    }
}

#[test]
fn loose_and_tight_tolerances_agree() {
    let sys = cubic(10.0);
    let loose = run(&sys, &IntegrationOptions::with_tol(1e-6));
    let tight = run(&sys, &IntegrationOptions::with_tol(1e-9));
    let (a, b) = (
        loose.state_at(10.0).unwrap().u,
        tight.state_at(10.0).unwrap().u,
    );
    assert!((a / b - 1.0).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn values_and_gradients_strictly_increase() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut systems = vec![cubic(1e3), poisson(1e3)];
    systems.extend((0..10).map(|_| random_system(&mut rng, 1e3)));
    for sys in &systems {
        let traj = run(sys, &IntegrationOptions::default());
        for w in traj.states.windows(2) {
            let (s0, s1) = (&w[0], &w[1]);
            for (x0, x1) in [(s0.u, s1.u), (s0.v, s1.v), (s0.du, s1.du), (s0.dv, s1.dv)] {
                assert!(x1 - x0 > -1e-10 * x0.abs(), "decrease at r = {}", s1.r);
                assert!(x1 > 0.0);
            }
            assert!(
                s1.du > s0.du && s1.dv > s0.dv,
                "gradients stall at r = {}",
                s1.r
            );
        }
    }
}

#[test]
fn gradient_matches_centered_differences_to_second_order() {
    let sys = cubic(1e2);
    let worst = |ppd: usize| {
        let opts = IntegrationOptions {
            grid: GridSpec::Geometric {
                points_per_decade: ppd,
            },
            rtol: 1e-12,
            ..IntegrationOptions::default()
        };
        let traj = run(&sys, &opts);
        traj.states
            .windows(3)
            .filter(|w| w[1].r >= 1e-2)
            .map(|w| {
                let fd = (w[2].u - w[0].u) / (w[2].r - w[0].r);
                (fd / w[1].du - 1.0).abs()
            })
            .fold(0.0f64, f64::max)
    };
    let (coarse, fine) = (worst(32), worst(64));
    let order = (coarse / fine).log2();
    assert!(coarse < 1e-2, "{coarse}");
    assert!(order > 1.8 && order < 2.2, "observed order {order}");
}

#[test]
fn flux_defects_on_reference_cases() {
    let pois = poisson(1e2);
    assert!(flux_consistency(&run(&pois, &IntegrationOptions::default()), &pois) < 1e-10);
    let cub = cubic(1e2);
    assert!(flux_consistency(&run(&cub, &IntegrationOptions::default()), &cub) < 1e-6);
}

#[test]
fn corrupted_flux_is_detected() {
    let sys = cubic(1e2);
    let mut traj = run(&sys, &IntegrationOptions::default());
    let mid = traj.len() / 2 + 1;
    traj.states[mid].flux_p *= 1.01;
    assert!(flux_consistency(&traj, &sys) > 1e-3);
}

#[test]
fn overflow_reports_radius() {
    let sys = cubic(1e130);
    match integrate_radial(&sys, 1.0, 1.0, &IntegrationOptions::default()) {
        Err(IntegrationError::Overflow { r }) => assert!(r > 1e50 && r < 1e130, "{r}"),
        other => panic!("expected overflow, got {other:?}"),
    }
}

#[test]
fn output_grid_is_strictly_increasing_and_ends_at_rmax() {
    let sys = cubic(37.0);
    let traj = run(&sys, &IntegrationOptions::default());
    let grid = traj.grid();
    assert!(grid.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*grid.last().unwrap(), 37.0);
    assert!(grid[0] > 0.0 && grid[0] == traj.meta.r0);
}
