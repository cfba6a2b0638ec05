//! Fixed planning instances and independent checks on finished plans.
#![allow(dead_code)]

use choreo_core::assignment::{CostMode, TransitionSpec};
use choreo_core::collision::{plan_transition, CollisionEllipsoid, DeviationWeight, ResolveSettings, TransitionPlan};
use choreo_core::primitives::MotionPrimitive;
use choreo_core::trajopt::{PolynomialTrajectory, StateBounds};
use choreo_core::Vec3;

pub fn open_bounds(steps: usize) -> StateBounds {
    StateBounds {
        pos_min: Vec3::new(-5.0, -5.0, -5.0),
        pos_max: Vec3::new(5.0, 5.0, 5.0),
        vel_max: Vec3::repeat(4.0),
        acc_norm_max: 15.0,
        jerk_max: Vec3::repeat(80.0),
        steps,
    }
}

/// Two drones swapping ends of a 2 m line at equal height.
pub fn head_on() -> (MotionPrimitive, MotionPrimitive) {
    let ends = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(2.0, 0.0, 1.0)];
    (
        MotionPrimitive::hover(0.0, 2.0, &ends).unwrap(),
        MotionPrimitive::hover(6.0, 8.0, &[ends[1], ends[0]]).unwrap(),
    )
}

/// 3 x 3 hover grid whose outer rows trade places through the middle row.
pub fn crossing_grid() -> (MotionPrimitive, MotionPrimitive) {
    let sites: Vec<Vec3> = (0..9).map(|i| Vec3::new((i % 3) as f64, (i / 3) as f64, 1.0)).collect();
    (
        MotionPrimitive::hover(0.0, 2.0, &sites).unwrap(),
        MotionPrimitive::hover(8.0, 10.0, &sites).unwrap(),
    )
}

pub const CROSSING: [usize; 9] = [6, 7, 8, 3, 4, 5, 0, 1, 2];

pub fn plan_with(
    pair: &(MotionPrimitive, MotionPrimitive),
    weight: Vec3,
    external: Option<&[usize]>,
) -> (TransitionPlan, ResolveSettings) {
    let spec = TransitionSpec::between(&pair.0, &pair.1);
    let mut settings = ResolveSettings::new(open_bounds(10));
    settings.weight = DeviationWeight::new(weight).unwrap();
    let plan = plan_transition(&spec, &settings, CostMode::MinSnap, external).unwrap();
    (plan, settings)
}

/// Horner evaluation of the stored local-time coefficients.
pub fn position(traj: &PolynomialTrajectory, t: f64) -> Vec3 {
    derivative(traj, t, 0)
}

/// `order`-th derivative by differentiating the coefficient lists term by term.
pub fn derivative(traj: &PolynomialTrajectory, t: f64, order: usize) -> Vec3 {
    let s = t - traj.t_start();
    let c = traj.coeffs();
    Vec3::from_fn(|i, _| {
        let mut d = c[i].clone();
        for _ in 0..order {
            d = d.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
        }
        d.iter().rev().fold(0.0, |acc, a| acc * s + a)
    })
}

/// Squared normalized separation for a diagonal ellipsoid.
pub fn separation(a: Vec3, b: Vec3, semi_axes: Vec3) -> f64 {
    (a - b).component_div(&semi_axes).norm_squared()
}

pub fn times(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt).round() as usize;
    (0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect()
}

/// Ordered pairs `(higher, lower)` that come closer than 2 on the grid.
pub fn conflicts(trajs: &[PolynomialTrajectory], semi_axes: Vec3, grid: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..trajs.len() {
        for b in 0..a {
            if grid.iter().any(|&t| separation(position(&trajs[a], t), position(&trajs[b], t), semi_axes) < 2.0) {
                out.push((a, b));
            }
        }
    }
    out
}

/// Safety, continuity and bound checks on a plan the planner calls feasible.
pub fn audit(
    plan: &TransitionPlan,
    pair: &(MotionPrimitive, MotionPrimitive),
    settings: &ResolveSettings,
    semi_axes: Vec3,
) -> Result<(), String> {
    let trajs = &plan.trajectories;
    let (t_s, t_e) = (trajs[0].t_start(), trajs[0].t_end());
    let steps = settings.bounds.with_steps(plan.steps).constraint_times(t_s, t_e);
    let fine = times(t_s, t_e, 1e-3);
    for a in 0..trajs.len() {
        for b in 0..a {
            for &t in &steps {
                let s = separation(position(&trajs[a], t), position(&trajs[b], t), semi_axes);
                if s < 2.0 - 1e-6 {
                    return Err(format!("pair ({a}, {b}) at constraint time {t}: {s}"));
                }
            }
            for &t in &fine {
                let s = separation(position(&trajs[a], t), position(&trajs[b], t), semi_axes);
                if s < 1.0 {
                    return Err(format!("pair ({a}, {b}) overlaps at {t}: {s}"));
                }
            }
        }
    }
    let perm = &plan.assignment.as_ref().ok_or("plan has no assignment")?.perm;
    for (alpha, traj) in trajs.iter().enumerate() {
        for order in 0..=4 {
            for (mp, role, t) in [(&pair.0, alpha, t_s), (&pair.1, perm[alpha], t_e)] {
                let want = mp.sample(role, t, order).unwrap();
                let got = derivative(traj, t, order);
                let rel = (got - want).norm() / want.norm().max(1.0);
                if rel > 1e-5 {
                    return Err(format!("drone {alpha} order {order} at {t}: mismatch {rel:e}"));
                }
            }
        }
        if let Some(v) = settings.bounds.with_steps(plan.steps).check(traj, 1e-6) {
            return Err(format!("drone {alpha} breaks a bound: {v:?}"));
        }
    }
    Ok(())
}

/// Sum over a 1 ms grid of the horizontal distance from the candidate.
pub fn xy_deviation(plan: &TransitionPlan) -> f64 {
    let (t_s, t_e) = (plan.trajectories[0].t_start(), plan.trajectories[0].t_end());
    let grid = times(t_s, t_e, 1e-3);
    plan.trajectories
        .iter()
        .zip(&plan.candidates)
        .map(|(tr, c)| {
            grid.iter()
                .map(|&t| {
                    let d = position(tr, t) - position(c, t);
                    (d.x * d.x + d.y * d.y).sqrt()
                })
                .sum::<f64>()
        })
        .sum()
}

pub fn small_quad_axes() -> Vec3 {
    let e = CollisionEllipsoid::small_quad();
    Vec3::new(e.matrix()[(0, 0)], e.matrix()[(1, 1)], e.matrix()[(2, 2)])
}
