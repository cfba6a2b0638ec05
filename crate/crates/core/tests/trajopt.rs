mod support;

use choreo_core::trajopt::{
    generate_candidate, snap_hessian, solve_min_snap, BoundaryConditions, MinSnapSolver,
    PolynomialTrajectory, StateBounds,
};
use choreo_core::{Error, State, Vec3};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracle;

fn random_state(rng: &mut ChaCha8Rng, spread: f64) -> State {
    let mut s = [Vec3::zeros(); 5];
    for (p, v) in s.iter_mut().enumerate() {
        let mag = spread / (1.0 + p as f64);
        *v = Vec3::new(rng.gen_range(-mag..mag), rng.gen_range(-mag..mag), rng.gen_range(-mag..mag));
    }
    s
}

fn oracle_cost(bc: &BoundaryConditions, degree: usize, duration: f64) -> f64 {
    (0..3)
        .map(|axis| {
            let start = std::array::from_fn(|p| bc.start[p][axis]);
            let end = std::array::from_fn(|p| bc.end[p][axis]);
            oracle::min_snap_axis(degree, duration, start, end)
        })
        .sum()
}

#[test]
fn hessian_matches_quadrature_of_degree_five() {
    let coeffs = [0.3, -1.0, 0.7, 2.0, -0.4, 1.3];
    let (t_s, t_e) = (0.5, 2.0);
    let h = snap_hessian(5, t_s, t_e);
    let mut x = DVector::zeros(18);
    for (i, c) in coeffs.iter().enumerate() {
        x[i] = *c;
    }
    let quad = h.view((0, 0), (6, 6)).into_owned();
    let form = (x.rows(0, 6).transpose() * &quad * x.rows(0, 6))[0];
    let snap = |t: f64| 24.0 * coeffs[4] + 120.0 * coeffs[5] * t;
    let reference = oracle::simpson(|t| snap(t).powi(2), t_s, t_e, 200);
    assert!((form - reference).abs() <= 1e-8 * reference.abs());
}

#[test]
fn rest_to_rest_unit_matches_oracle() {
    let bc = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0));
    let sol = solve_min_snap(&bc, 14, 0.0, 1.0).unwrap();
    let reference = oracle_cost(&bc, 14, 1.0);
    assert!(((sol.cost - reference) / reference).abs() < 1e-2, "{} vs {reference}", sol.cost);
    assert!(sol.kkt_residual <= 1e-8);
}

#[test]
fn random_boundary_sets_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let solver = MinSnapSolver::new(14).unwrap();
    for _ in 0..20 {
        let bc = BoundaryConditions { start: random_state(&mut rng, 2.0), end: random_state(&mut rng, 2.0) };
        let t_s = rng.gen_range(0.0..10.0);
        let dur = rng.gen_range(1.0..8.0);
        let sol = solver.solve(&bc, t_s, t_s + dur).unwrap();
        let reference = oracle_cost(&bc, 14, dur);
        assert!(((sol.cost - reference) / reference).abs() < 1e-2);
        assert!(sol.kkt_residual <= 1e-8, "{}", sol.kkt_residual);
        assert!((sol.trajectory.snap_cost() - sol.cost).abs() <= 1e-6 * sol.cost);
        for (p, (s, e)) in bc.start.iter().zip(&bc.end).enumerate() {
            let got_s = sol.trajectory.eval(t_s, p).unwrap();
            let got_e = sol.trajectory.eval(t_s + dur, p).unwrap();
            let tol = 1e-6 * dur.powi(-(p as i32)).max(1.0);
            assert!((got_s - s).amax() <= tol && (got_e - e).amax() <= tol, "order {p}");
        }
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let coeffs = std::array::from_fn(|_| (0..15).map(|i| rng.gen_range(-1.0..1.0) / (1.0 + i as f64)).collect());
        let traj = PolynomialTrajectory::new(1.0, 3.0, coeffs).unwrap();
        let t = rng.gen_range(1.2..2.8);
        for order in 0..4 {
            let h = 1e-5;
            let fd = (traj.eval(t + h, order).unwrap() - traj.eval(t - h, order).unwrap()) / (2.0 * h);
            let exact = traj.eval(t, order + 1).unwrap();
            assert!((fd - exact).norm() <= 1e-6 * exact.norm().max(1.0));
        }
    }
}

#[test]
fn loose_bounds_reproduce_unconstrained() {
    let bc = BoundaryConditions::rest_to_rest(Vec3::new(0.0, 0.0, 1.0), Vec3::new(2.0, 1.0, 1.5));
    let free = solve_min_snap(&bc, 14, 0.0, 3.0).unwrap();
    let bounds = StateBounds {
        pos_min: Vec3::repeat(-20.0),
        pos_max: Vec3::repeat(30.0),
        vel_max: Vec3::repeat(10.0),
        acc_norm_max: 50.0,
        jerk_max: Vec3::repeat(500.0),
        steps: 10,
    };
    let cand = generate_candidate(&bc, &bounds, 14, 0.0, 3.0).unwrap();
    for t in [0.0, 0.7, 1.5, 2.9] {
        assert!((cand.eval(t, 0).unwrap() - free.trajectory.eval(t, 0).unwrap()).norm() < 1e-6);
    }
}

#[test]
fn clipped_peak_touches_bound_and_costs_more() {
    // leave and return: the unconstrained path overshoots in x
    let mut bc = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::zeros());
    bc.start[1] = Vec3::new(1.5, 0.0, 0.0);
    bc.end[1] = Vec3::new(-1.5, 0.0, 0.0);
    let free = solve_min_snap(&bc, 14, 0.0, 2.0).unwrap();
    let times: Vec<f64> = (1..10).map(|k| 0.2 * k as f64).collect();
    let peak = times.iter().map(|&t| free.trajectory.eval(t, 0).unwrap().x).fold(f64::MIN, f64::max);
    assert!(peak > 0.3);
    let bounds = StateBounds {
        pos_min: Vec3::repeat(-5.0),
        pos_max: Vec3::new(0.6 * peak, 5.0, 5.0),
        vel_max: Vec3::repeat(10.0),
        acc_norm_max: 100.0,
        jerk_max: Vec3::repeat(1e3),
        steps: 10,
    };
    let cand = generate_candidate(&bc, &bounds, 14, 0.0, 2.0).unwrap();
    let top = times.iter().map(|&t| cand.eval(t, 0).unwrap().x).fold(f64::MIN, f64::max);
    assert!(top <= bounds.pos_max.x + 1e-6);
    assert!((top - bounds.pos_max.x).abs() < 1e-4, "{top}");
    assert!(cand.snap_cost() > free.cost);
    for p in 0..5 {
        assert!((cand.eval(0.0, p).unwrap() - bc.start[p]).norm() < 1e-6);
        assert!((cand.eval(2.0, p).unwrap() - bc.end[p]).norm() < 1e-6);
    }
}

#[test]
fn speed_limit_infeasibility() {
    let bc = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0));
    let bounds = StateBounds {
        pos_min: Vec3::repeat(-200.0),
        pos_max: Vec3::repeat(200.0),
        vel_max: Vec3::repeat(0.1),
        acc_norm_max: 1e3,
        jerk_max: Vec3::repeat(1e5),
        steps: 10,
    };
    assert!(matches!(generate_candidate(&bc, &bounds, 14, 0.0, 1.0), Err(Error::Infeasible { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_invariance(seed in any::<u64>(), dx in -50.0..50.0f64, dy in -50.0..50.0f64, dz in -50.0..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bc = BoundaryConditions { start: random_state(&mut rng, 1.0), end: random_state(&mut rng, 1.0) };
        let solver = MinSnapSolver::new(14).unwrap();
        let a = solver.cost(&bc, 0.0, 3.0).unwrap();
        let b = solver.cost(&bc.translated(Vec3::new(dx, dy, dz)), 0.0, 3.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{a} {b}");
    }

    #[test]
    fn time_scaling_law(seed in any::<u64>(), dur in 0.5..5.0f64, s in 0.3..4.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let from = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.0..2.0));
        let to = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.0..2.0));
        let bc = BoundaryConditions::rest_to_rest(from, to);
        let solver = MinSnapSolver::new(14).unwrap();
        let a = solver.cost(&bc, 1.0, 1.0 + dur).unwrap();
        let b = solver.cost(&bc, 1.0, 1.0 + s * dur).unwrap();
        prop_assert!((b - a * s.powi(-7)).abs() <= 1e-9 * b.max(1e-300));
    }

    #[test]
    fn candidate_never_cheaper(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bc = BoundaryConditions::rest_to_rest(
            Vec3::new(rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5), 1.0),
            Vec3::new(rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5), 1.0),
        );
        bc.start[1] = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0);
        let bounds = StateBounds {
            pos_min: Vec3::new(0.0, 0.0, 0.0),
            pos_max: Vec3::new(2.0, 2.0, 2.0),
            vel_max: Vec3::repeat(1.2),
            acc_norm_max: 6.0,
            jerk_max: Vec3::repeat(40.0),
            steps: 10,
        };
        let free = solve_min_snap(&bc, 14, 0.0, 3.0).unwrap().cost;
        if let Ok(c) = generate_candidate(&bc, &bounds, 14, 0.0, 3.0) {
            prop_assert!(c.snap_cost() >= free * (1.0 - 1e-9));
            prop_assert!(bounds.check(&c, 1e-6).is_none());
        }
    }
}
