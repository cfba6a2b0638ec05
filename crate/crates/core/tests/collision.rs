mod support;

use choreo_core::collision::{build_graph, CollisionEllipsoid, LogEntry};
use choreo_core::Vec3;
use support::instances::*;

#[test]
fn crossing_graph_matches_dense_oracle() {
    let pair = crossing_grid();
    let (plan, _) = plan_with(&pair, Vec3::repeat(1.0), Some(&CROSSING));
    let graph = build_graph(&plan.candidates, &CollisionEllipsoid::small_quad(), 0.01).unwrap();
    let mut edges: Vec<_> = graph.edges().collect();
    edges.sort();
    let mut dense = conflicts(&plan.candidates, small_quad_axes(), &times(2.0, 8.0, 1e-3));
    dense.sort();
    assert!(!dense.is_empty());
    assert_eq!(edges, dense);
    assert!(edges.iter().all(|(a, b)| a > b));
}

#[test]
fn crossing_grid_is_resolved_safely() {
    let pair = crossing_grid();
    let (plan, settings) = plan_with(&pair, Vec3::repeat(1.0), Some(&CROSSING));
    assert!(plan.feasible, "{:#?}", plan.log);
    audit(&plan, &pair, &settings, small_quad_axes()).unwrap();
    assert!(conflicts(&plan.trajectories, small_quad_axes(), &times(2.0, 8.0, 1e-2)).is_empty());
}

#[test]
fn only_resolved_drones_leave_their_candidate() {
    let pair = crossing_grid();
    let (plan, _) = plan_with(&pair, Vec3::repeat(1.0), Some(&CROSSING));
    let moved: Vec<usize> = plan
        .log
        .iter()
        .filter_map(|l| match l {
            LogEntry::Resolved { drone, .. } => Some(*drone),
            _ => None,
        })
        .collect();
    assert!(!moved.is_empty());
    for n in 0..9 {
        if !moved.contains(&n) {
            assert_eq!(plan.trajectories[n], plan.candidates[n], "drone {n}");
        }
    }
    // The lowest index never yields.
    assert!(!moved.contains(&0));
}

#[test]
fn planning_is_deterministic() {
    let pair = crossing_grid();
    let (a, _) = plan_with(&pair, Vec3::repeat(1.0), Some(&CROSSING));
    let (b, _) = plan_with(&pair, Vec3::repeat(1.0), Some(&CROSSING));
    assert_eq!(a.trajectories, b.trajectories);
    assert_eq!(a.log, b.log);
}

#[test]
fn cheap_vertical_motion_reduces_horizontal_deviation() {
    let pair = head_on();
    let (uniform, s1) = plan_with(&pair, Vec3::repeat(1.0), Some(&[0, 1]));
    let (vertical, s2) = plan_with(&pair, Vec3::new(1.0, 1.0, 1e-3), Some(&[0, 1]));
    assert!(uniform.feasible && vertical.feasible);
    audit(&uniform, &pair, &s1, small_quad_axes()).unwrap();
    audit(&vertical, &pair, &s2, small_quad_axes()).unwrap();
    let (du, dv) = (xy_deviation(&uniform), xy_deviation(&vertical));
    assert!(dv < du, "weighted {dv} vs uniform {du}");
}

#[test]
fn optimal_assignment_avoids_the_swap() {
    let pair = head_on();
    let (plan, _) = plan_with(&pair, Vec3::repeat(1.0), None);
    assert_eq!(plan.assignment.unwrap().perm, vec![1, 0]);
    assert!(plan.feasible);
    assert_eq!(plan.iterations, 0);
}

#[test]
fn unresolvable_pileup_is_reported() {
    use choreo_core::assignment::{CostMode, TransitionSpec};
    use choreo_core::collision::{plan_transition, ResolveSettings};
    // Every path meets at the centre at the same instant.
    let pair = crossing_grid();
    let spec = TransitionSpec::between(&pair.0, &pair.1);
    let mut settings = ResolveSettings::new(open_bounds(10));
    settings.max_iters = 2;
    let mirror: Vec<usize> = (0..9).rev().collect();
    let plan = plan_transition(&spec, &settings, CostMode::MinSnap, Some(&mirror)).unwrap();
    assert!(!plan.feasible);
    assert!(!plan.residual_edges.is_empty());
    assert!(plan.residual_edges.iter().all(|(a, b)| a > b));
}
