//! Collision graphs over candidate transitions and sequential avoidance.
//!
//! Drones are inflated to ellipsoids `|E^-1 d| <= 1`. A pair is in conflict
//! when the normalized squared separation `|E^-1 (p_n - p_m)|^2` drops below
//! two; the conflict becomes an edge from the higher to the lower index, making
//! the higher-indexed drone responsible for avoiding.
//!
//! Avoidance re-optimizes one drone at a time by sequential convex
//! programming. The separation constraint `|E^-1 (p_n - p_m)| >= sqrt 2` is
//! replaced by the half-space `d' E^-1 (p_n - p_m) >= sqrt 2` for a unit
//! direction `d`; since `|q| >= d'q` the half-space lies inside the true
//! feasible set, so every accepted iterate is collision-free at the constraint
//! times, and the objective is non-increasing over iterations.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, Matrix3};
use rayon::prelude::*;
use serde::Serialize;

use crate::assignment::{assign_with, Assignment, CostMode, TransitionSpec};
use crate::conic::{ConicOutcome, ConicProblem, LinearRow};
use crate::error::{argument, validation, Error, Result};
use crate::trajopt::{
    derivative_row, generate_candidate_with, BoundaryConditions, MinSnapSolver, Parametrization,
    PolynomialTrajectory, StateBounds,
};
use crate::Vec3;

/// Squared normalized separation below which two drones collide.
pub const SEPARATION: f64 = 2.0;
/// Default sampling period used to detect collisions, seconds.
pub const DEFAULT_SAMPLE_DT: f64 = 0.01;
/// Largest number of constraint steps reached by doubling.
pub const MAX_STEPS: usize = 160;

// Slack on the per-step constraint so the path stays clear between steps.
const MARGIN: f64 = 1.01;

/// Ellipsoidal drone envelope, `E` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEllipsoid {
    e: Matrix3<f64>,
    e_inv: Matrix3<f64>,
}

impl CollisionEllipsoid {
    pub fn new(e: Matrix3<f64>) -> Result<Self> {
        if (0..3).any(|i| !(e[(i, i)] > 0.0)) || e.iter().any(|v| !v.is_finite()) {
            return Err(validation("ellipsoid matrix needs finite, positive diagonal entries"));
        }
        let e_inv = e.try_inverse().ok_or_else(|| validation("ellipsoid matrix is singular"))?;
        Ok(Self { e, e_inv })
    }

    pub fn diagonal(semi_axes: Vec3) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&semi_axes))
    }

    /// Simulation-scale envelope: 0.14 m in x-y and 0.35 m in z.
    pub fn small_quad() -> Self {
        Self::diagonal(Vec3::new(0.14, 0.14, 0.35)).expect("valid preset")
    }

    /// Flight-experiment envelope: 0.28 m in x-y and 0.85 m in z.
    pub fn flight_experiment() -> Self {
        Self::diagonal(Vec3::new(0.28, 0.28, 0.85)).expect("valid preset")
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.e
    }

    /// `E^-1 d`
    pub fn normalize(&self, d: &Vec3) -> Vec3 {
        self.e_inv * d
    }
}

impl Default for CollisionEllipsoid {
    fn default() -> Self {
        Self::small_quad()
    }
}

/// `|E^-1 (a(t) - b(t))|^2`
pub fn pair_separation(
    a: &PolynomialTrajectory,
    b: &PolynomialTrajectory,
    t: f64,
    ellipsoid: &CollisionEllipsoid,
) -> f64 {
    ellipsoid.normalize(&(a.sample(t, 0) - b.sample(t, 0))).norm_squared()
}

/// Directed conflicts; `(n, m)` with `n > m` means drone `n` must avoid `m`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CollisionGraph {
    vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl CollisionGraph {
    pub fn new(vertices: usize) -> Self {
        Self { vertices, edges: BTreeSet::new() }
    }

    /// Adds the conflict between `a` and `b`, oriented from the higher index.
    pub fn add_conflict(&mut self, a: usize, b: usize) {
        assert!(a != b && a < self.vertices && b < self.vertices);
        self.edges.insert((a.max(b), a.min(b)));
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.range((v, 0)..(v + 1, 0)).count()
    }

    /// Vertices with outbound edges, most outbound edges first, lower index on ties.
    pub fn resolution_order(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.vertices).filter(|&v| self.out_degree(v) > 0).collect();
        v.sort_by_key(|&v| (std::cmp::Reverse(self.out_degree(v)), v));
        v
    }
}

/// Regular grid over `[t_s, t_e]` including both ends, merged with `extra`.
fn sample_times(t_s: f64, t_e: f64, dt: f64, extra: &[f64]) -> Vec<f64> {
    let steps = ((t_e - t_s) / dt).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..steps).map(|i| t_s + i as f64 * dt).collect();
    times.push(t_e);
    times.extend_from_slice(extra);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn normalized_samples(traj: &PolynomialTrajectory, e: &CollisionEllipsoid, times: &[f64]) -> Vec<Vec3> {
    times.iter().map(|&t| e.normalize(&traj.sample(t, 0))).collect()
}

fn min_separation(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).fold(f64::INFINITY, f64::min)
}

fn check_common_window(trajs: &[PolynomialTrajectory]) -> Result<(f64, f64)> {
    let first = trajs.first().ok_or_else(|| argument("no trajectories"))?;
    let (t_s, t_e) = (first.t_start(), first.t_end());
    if trajs.iter().any(|t| t.t_start() != t_s || t.t_end() != t_e) {
        return Err(argument("trajectories do not share a common window"));
    }
    Ok((t_s, t_e))
}

/// Normalized positions of every drone on a shared time grid.
#[derive(Debug, Clone)]
struct SampleCache {
    times: Vec<f64>,
    samples: Vec<Vec<Vec3>>,
}

impl SampleCache {
    fn new(trajs: &[PolynomialTrajectory], e: &CollisionEllipsoid, times: Vec<f64>) -> Self {
        let samples = trajs.par_iter().map(|t| normalized_samples(t, e, &times)).collect();
        Self { times, samples }
    }

    fn graph(&self) -> CollisionGraph {
        let n = self.samples.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..a).map(move |b| (a, b))).collect();
        let hits: Vec<(usize, usize)> = pairs
            .into_par_iter()
            .filter(|&(a, b)| min_separation(&self.samples[a], &self.samples[b]) < SEPARATION)
            .collect();
        let mut g = CollisionGraph::new(n);
        for (a, b) in hits {
            g.add_conflict(a, b);
        }
        g
    }

    /// Drones that `n` conflicts with if it flew `samples`.
    fn conflicts_of(&self, n: usize, samples: &[Vec3]) -> Vec<usize> {
        (0..self.samples.len())
            .filter(|&m| m != n && min_separation(samples, &self.samples[m]) < SEPARATION)
            .collect()
    }
}

/// Conflict graph of trajectories sharing one window, sampled every `sample_dt`.
pub fn build_graph(
    candidates: &[PolynomialTrajectory],
    ellipsoid: &CollisionEllipsoid,
    sample_dt: f64,
) -> Result<CollisionGraph> {
    if candidates.is_empty() {
        return Ok(CollisionGraph::new(0));
    }
    if !(sample_dt > 0.0) {
        return Err(argument("sample period must be positive"));
    }
    let (t_s, t_e) = check_common_window(candidates)?;
    Ok(SampleCache::new(candidates, ellipsoid, sample_times(t_s, t_e, sample_dt, &[])).graph())
}

/// Diagonal weight on the deviation from the candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationWeight {
    diag: Vec3,
}

impl DeviationWeight {
    pub fn new(diag: Vec3) -> Result<Self> {
        if diag.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(validation("deviation weights must be finite and positive"));
        }
        Ok(Self { diag })
    }

    pub fn identity() -> Self {
        Self { diag: Vec3::repeat(1.0) }
    }

    pub fn diag(&self) -> Vec3 {
        self.diag
    }
}

impl Default for DeviationWeight {
    fn default() -> Self {
        Self::identity()
    }
}

/// Configuration shared by the avoidance stage.
#[derive(Debug, Clone, Copy)]
pub struct ResolveSettings {
    /// State bounds; `bounds.steps` is the initial step count `K0`.
    pub bounds: StateBounds,
    pub ellipsoid: CollisionEllipsoid,
    pub weight: DeviationWeight,
    pub degree: usize,
    /// Number of sweeps over the collision graph.
    pub max_iters: usize,
    pub sample_dt: f64,
    /// Sequential convex iterations per drone.
    pub scp_iters: usize,
}

impl ResolveSettings {
    pub fn new(bounds: StateBounds) -> Self {
        Self {
            bounds,
            ellipsoid: CollisionEllipsoid::default(),
            weight: DeviationWeight::identity(),
            degree: crate::trajopt::DEFAULT_DEGREE,
            max_iters: 10,
            sample_dt: DEFAULT_SAMPLE_DT,
            scp_iters: 25,
        }
    }
}

/// Result of re-optimizing a single drone.
#[derive(Debug, Clone)]
pub enum ResolveOutcome {
    Resolved { trajectory: PolynomialTrajectory, iterations: usize, restarts: usize },
    /// The drone is left unchanged in this sweep.
    Skipped { reason: String },
}

struct SepTime {
    t: f64,
    /// candidate position and its sensitivity, one row per axis
    base: Vec3,
    rows: [Vec<f64>; 3],
}

impl SepTime {
    fn position(&self, u: &[f64]) -> Vec3 {
        Vec3::from_fn(|axis, _| self.base[axis] + dot(&self.rows[axis], u))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deviation-weighted parametrization around the candidate.
fn weighted_parametrization(
    solver: &MinSnapSolver,
    candidate: &PolynomialTrajectory,
    weight: &DeviationWeight,
    times: &[f64],
) -> Result<Parametrization> {
    let z = solver.nullspace();
    let nz = z.ncols();
    let (t_s, t_e) = (candidate.t_start(), candidate.t_end());
    let base = candidate.normalized();
    let n = base[0].len();
    let mut a = DMatrix::zeros(times.len(), nz);
    for (r, &t) in times.iter().enumerate() {
        let row = derivative_row(n, 0, (t - t_s) / (t_e - t_s)).transpose() * z;
        a.row_mut(r).copy_from(&row);
    }
    let scale = a.norm_squared() / nz as f64;
    let maps = (0..3)
        .map(|axis| {
            let w = weight.diag()[axis];
            let reg = 1e-10 * w * scale.max(1e-12);
            let mut stacked = DMatrix::zeros(times.len() + nz, nz);
            stacked.view_mut((0, 0), (times.len(), nz)).copy_from(&(&a * w.sqrt()));
            stacked.view_mut((times.len(), 0), (nz, nz)).copy_from(&(DMatrix::identity(nz, nz) * reg.sqrt()));
            let r = stacked.qr().r();
            let r_inv = r
                .solve_upper_triangular(&DMatrix::identity(nz, nz))
                .ok_or_else(|| crate::error::numerical("singular deviation weight factor"))?;
            Ok(z * r_inv)
        })
        .collect::<Result<Vec<_>>>()?;
    let maps: [DMatrix<f64>; 3] = maps.try_into().expect("three axes");
    Ok(Parametrization { t_s, t_e, base, maps })
}

/// Avoidance direction candidates for one conflicting pair, cheapest first.
fn preferred_directions(
    rel: &[Vec3],
    rel_vel: &[Vec3],
    ellipsoid: &CollisionEllipsoid,
    weight: &DeviationWeight,
) -> Vec<Vec3> {
    let (idx, q) = rel
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm_squared().total_cmp(&b.1.norm_squared()))
        .map(|(i, q)| (i, *q))
        .expect("non-empty samples");
    let v = rel_vel[idx];
    let project = |d: Vec3| {
        if v.norm() > 1e-9 {
            let vh = v.normalize();
            d - vh * vh.dot(&d)
        } else {
            d
        }
    };
    let mut raw = Vec::new();
    let qp = project(q);
    if qp.norm() > 1e-9 {
        raw.push(qp.normalize());
        raw.push(-qp.normalize());
    }
    for axis in 0..3 {
        let d = project(Vec3::ith(axis, 1.0));
        if d.norm() > 1e-6 {
            raw.push(d.normalize());
            raw.push(-d.normalize());
        }
    }
    let target = SEPARATION.sqrt() * MARGIN;
    let w = weight.diag();
    let mut scored: Vec<(f64, Vec3)> = Vec::new();
    for d in raw {
        if scored.iter().any(|(_, e)| (e - d).norm() < 1e-9) {
            continue;
        }
        let s = (target - d.dot(&q)).max(0.0);
        let phys = ellipsoid.matrix() * d;
        let cost = s * s * (w.x * phys.x * phys.x + w.y * phys.y * phys.y + w.z * phys.z * phys.z);
        scored.push((cost, d));
    }
    // stable sort keeps generation order on ties
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().map(|(_, d)| d).collect()
}

/// Re-optimize drone `n` to avoid every other drone's current trajectory.
///
/// Minimizes the weighted deviation from `candidate` at the `steps` constraint
/// times subject to the state bounds and separation at those times. Boundary
/// equalities are inherited from `candidate`.
pub fn resolve_one(
    n: usize,
    candidate: &PolynomialTrajectory,
    committed: &[PolynomialTrajectory],
    settings: &ResolveSettings,
    steps: usize,
) -> Result<ResolveOutcome> {
    if n >= committed.len() {
        return Err(argument(format!("drone {n} out of range")));
    }
    let solver = MinSnapSolver::new(candidate.degree())?;
    resolve_with(&solver, n, candidate, committed, settings, steps)
}

fn resolve_with(
    solver: &MinSnapSolver,
    n: usize,
    candidate: &PolynomialTrajectory,
    committed: &[PolynomialTrajectory],
    settings: &ResolveSettings,
    steps: usize,
) -> Result<ResolveOutcome> {
    let (t_s, t_e) = (candidate.t_start(), candidate.t_end());
    let e = &settings.ellipsoid;
    let bounds = settings.bounds.with_steps(steps);
    bounds.validate()?;
    let all_times = bounds.constraint_times(t_s, t_e);
    let end = &all_times[all_times.len() - 1];
    for (m, other) in committed.iter().enumerate() {
        if m != n && pair_separation(candidate, other, *end, e) < SEPARATION * (1.0 - 1e-9) {
            return Ok(ResolveOutcome::Skipped { reason: format!("end point conflicts with drone {m}") });
        }
    }
    let times = &all_times[..all_times.len() - 1];
    let param = weighted_parametrization(solver, candidate, &settings.weight, times)?;
    let dim = param.dim();
    let sep_times: Vec<SepTime> = times
        .iter()
        .map(|&t| {
            let mut base = Vec3::zeros();
            let rows = std::array::from_fn(|axis| {
                let (c, row) = param.affine(axis, 0, t);
                base[axis] = c;
                row
            });
            SepTime { t, base, rows }
        })
        .collect();
    let others: Vec<usize> = (0..committed.len()).filter(|&m| m != n).collect();
    let other_pos: Vec<Vec<Vec3>> = sep_times
        .iter()
        .map(|st| others.iter().map(|&m| committed[m].sample(st.t, 0)).collect())
        .collect();
    let (bound_rows, norms) = param.bound_constraints(&bounds);

    // conflicting pairs on a fine grid for the first linearization
    let fine = sample_times(t_s, t_e, settings.sample_dt, times);
    let mine: Vec<Vec3> = normalized_samples(candidate, e, &fine);
    let mine_vel: Vec<Vec3> = fine.iter().map(|&t| e.normalize(&candidate.sample(t, 1))).collect();
    let mut preferred: Vec<Option<Vec<Vec3>>> = Vec::with_capacity(others.len());
    for &m in &others {
        let theirs = normalized_samples(&committed[m], e, &fine);
        let rel: Vec<Vec3> = mine.iter().zip(&theirs).map(|(a, b)| a - b).collect();
        if rel.iter().all(|q| q.norm_squared() >= SEPARATION * MARGIN * MARGIN) {
            preferred.push(None);
            continue;
        }
        let rel_vel: Vec<Vec3> = fine
            .iter()
            .zip(&mine_vel)
            .map(|(&t, v)| v - e.normalize(&committed[m].sample(t, 1)))
            .collect();
        preferred.push(Some(preferred_directions(&rel, &rel_vel, e, &settings.weight)));
    }

    let target = SEPARATION.sqrt() * MARGIN;
    let sigma = 1.5 * SEPARATION.sqrt();
    let relative = |k: usize, j: usize, u: &[f64]| e.normalize(&(sep_times[k].position(u) - other_pos[k][j]));

    let max_restarts = 1;
    let mut last_reason = String::new();
    for restart in 0..=max_restarts {
        let u0 = vec![0.0; dim];
        let mut dirs: Vec<Vec<Vec3>> = (0..sep_times.len())
            .map(|k| {
                (0..others.len())
                    .map(|j| {
                        let q = relative(k, j, &u0);
                        match &preferred[j] {
                            Some(list) => {
                                let d = list[restart.min(list.len() - 1)];
                                let b = q + d * sigma;
                                if b.norm() > 1e-12 { b.normalize() } else { d }
                            }
                            None => q.try_normalize(1e-12).unwrap_or_else(Vec3::z),
                        }
                    })
                    .collect()
            })
            .collect();
        let mut u: Option<Vec<f64>> = None;
        let mut iterations = 0;
        for iter in 0..settings.scp_iters.max(1) {
            let mut problem = ConicProblem::new(dim);
            problem.linear = bound_rows.clone();
            problem.norms = norms.clone();
            for (k, st) in sep_times.iter().enumerate() {
                for j in 0..others.len() {
                    // d' E^-1 (base + G u - p_m) >= target
                    let d = e.normalize_transpose(&dirs[k][j]);
                    let a = d.dot(&(st.base - other_pos[k][j]));
                    let row: Vec<f64> = (0..dim)
                        .map(|i| -(d.x * st.rows[0][i] + d.y * st.rows[1][i] + d.z * st.rows[2][i]))
                        .collect();
                    problem.linear.push(LinearRow { row, rhs: a - target });
                }
            }
            match problem.solve() {
                ConicOutcome::Solved(next) => {
                    iterations = iter + 1;
                    let change = match &u {
                        Some(prev) => sep_times
                            .iter()
                            .map(|st| (st.position(&next) - st.position(prev)).norm())
                            .fold(0.0, f64::max),
                        None => f64::INFINITY,
                    };
                    for (k, row) in dirs.iter_mut().enumerate() {
                        for (j, d) in row.iter_mut().enumerate() {
                            if let Some(q) = relative(k, j, &next).try_normalize(1e-9) {
                                *d = q;
                            }
                        }
                    }
                    u = Some(next);
                    if change < 1e-5 {
                        break;
                    }
                }
                ConicOutcome::Infeasible => {
                    last_reason = "separation and state bounds cannot be met".into();
                    break;
                }
                ConicOutcome::Failed(status) => {
                    last_reason = format!("avoidance solve failed ({status})");
                    break;
                }
            }
        }
        let Some(u) = u else { continue };
        let traj = param.trajectory(&u)?;
        if let Some(v) = bounds.check(&traj, 1e-6) {
            last_reason = format!("avoidance result violates bounds: {v}");
            continue;
        }
        let unsafe_pair = others.iter().find(|&&m| {
            times.iter().any(|&t| pair_separation(&traj, &committed[m], t, e) < SEPARATION - 1e-6)
        });
        if let Some(m) = unsafe_pair {
            last_reason = format!("separation from drone {m} not reached");
            continue;
        }
        return Ok(ResolveOutcome::Resolved { trajectory: traj, iterations, restarts: restart });
    }
    Ok(ResolveOutcome::Skipped { reason: last_reason })
}

impl CollisionEllipsoid {
    /// `E^-T d`, pulling a direction in normalized space back to physical space.
    fn normalize_transpose(&self, d: &Vec3) -> Vec3 {
        self.e_inv.transpose() * d
    }
}

/// One event in the resolution log.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEntry {
    Graph { sweep: usize, edges: usize, steps: usize },
    Resolved { sweep: usize, drone: usize, iterations: usize, restarts: usize, edges_after: usize },
    Skipped { sweep: usize, drone: usize, reason: String },
    /// A per-step feasible solution still collided between steps.
    Unsafe { sweep: usize, drone: usize, conflicts: Vec<usize> },
    StepsDoubled { sweep: usize, steps: usize },
    Sweep { sweep: usize, edges_before: usize, edges_after: usize, commits: usize },
}

/// Outcome of planning one transition.
#[derive(Debug, Clone)]
pub struct TransitionPlan {
    pub assignment: Option<Assignment>,
    pub candidates: Vec<PolynomialTrajectory>,
    pub trajectories: Vec<PolynomialTrajectory>,
    pub log: Vec<LogEntry>,
    /// Sweeps executed.
    pub iterations: usize,
    pub skipped: usize,
    pub doublings: usize,
    /// Final number of constraint steps.
    pub steps: usize,
    pub residual_edges: Vec<(usize, usize)>,
    pub feasible: bool,
}

/// Remove conflicts among candidate trajectories by sequential re-optimization.
pub fn resolve_all(candidates: &[PolynomialTrajectory], settings: &ResolveSettings) -> Result<TransitionPlan> {
    settings.bounds.validate()?;
    let mut plan = TransitionPlan {
        assignment: None,
        candidates: candidates.to_vec(),
        trajectories: candidates.to_vec(),
        log: Vec::new(),
        iterations: 0,
        skipped: 0,
        doublings: 0,
        steps: settings.bounds.steps,
        residual_edges: Vec::new(),
        feasible: true,
    };
    if candidates.is_empty() {
        return Ok(plan);
    }
    let (t_s, t_e) = check_common_window(candidates)?;
    let degree = candidates[0].degree();
    if candidates.iter().any(|c| c.degree() != degree) {
        return Err(argument("candidates have different degrees"));
    }
    let solver = MinSnapSolver::new(degree)?;
    let e = settings.ellipsoid;
    let grid = |steps: usize| {
        sample_times(t_s, t_e, settings.sample_dt, &settings.bounds.with_steps(steps).constraint_times(t_s, t_e))
    };
    let mut steps = settings.bounds.steps;
    let mut cache = SampleCache::new(&plan.trajectories, &e, grid(steps));
    let mut graph = cache.graph();
    plan.log.push(LogEntry::Graph { sweep: 0, edges: graph.edge_count(), steps });

    for sweep in 1..=settings.max_iters {
        if graph.is_empty() {
            break;
        }
        plan.iterations = sweep;
        let edges_before = graph.edge_count();
        let mut commits = 0;
        let mut between_steps = false;
        for n in graph.resolution_order() {
            if graph.out_degree(n) == 0 {
                continue;
            }
            match resolve_with(&solver, n, &candidates[n], &plan.trajectories, settings, steps)? {
                ResolveOutcome::Resolved { trajectory, iterations, restarts } => {
                    let samples = normalized_samples(&trajectory, &e, &cache.times);
                    let conflicts = cache.conflicts_of(n, &samples);
                    if !conflicts.is_empty() {
                        between_steps = true;
                        plan.log.push(LogEntry::Unsafe { sweep, drone: n, conflicts: conflicts.clone() });
                    }
                    // commit only when every outbound conflict is gone
                    if conflicts.iter().all(|&m| m > n) {
                        plan.trajectories[n] = trajectory;
                        cache.samples[n] = samples;
                        graph = cache.graph();
                        commits += 1;
                        plan.log.push(LogEntry::Resolved {
                            sweep,
                            drone: n,
                            iterations,
                            restarts,
                            edges_after: graph.edge_count(),
                        });
                    }
                }
                ResolveOutcome::Skipped { reason } => {
                    plan.skipped += 1;
                    plan.log.push(LogEntry::Skipped { sweep, drone: n, reason });
                }
            }
        }
        plan.log.push(LogEntry::Sweep { sweep, edges_before, edges_after: graph.edge_count(), commits });
        if between_steps && steps < MAX_STEPS {
            steps = (2 * steps).min(MAX_STEPS);
            plan.doublings += 1;
            plan.log.push(LogEntry::StepsDoubled { sweep, steps });
            cache = SampleCache::new(&plan.trajectories, &e, grid(steps));
            graph = cache.graph();
        }
    }
    plan.steps = steps;
    plan.residual_edges = graph.edges().collect();
    plan.feasible = graph.is_empty();
    Ok(plan)
}

/// Full transition: goal assignment, bounded candidates and collision resolution.
///
/// `external` replaces the optimal assignment with a given permutation.
pub fn plan_transition(
    spec: &TransitionSpec,
    settings: &ResolveSettings,
    mode: CostMode,
    external: Option<&[usize]>,
) -> Result<TransitionPlan> {
    let assignment = assign_with(spec, settings.degree, mode, external)?;
    let solver = MinSnapSolver::new(settings.degree)?;
    let candidates = (0..spec.len())
        .into_par_iter()
        .map(|alpha| {
            let bc: BoundaryConditions = spec.boundary(alpha, assignment.perm[alpha])?;
            generate_candidate_with(&solver, &bc, &settings.bounds, spec.t_s, spec.t_e).map_err(|err| match err {
                Error::Infeasible { reason } => Error::Infeasible { reason: format!("drone {alpha}: {reason}") },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut plan = resolve_all(&candidates, settings)?;
    plan.assignment = Some(assignment);
    Ok(plan)
}

/// Smallest sampled separation between any two trajectories.
pub fn min_pair_separation(
    trajs: &[PolynomialTrajectory],
    ellipsoid: &CollisionEllipsoid,
    times: &[f64],
) -> f64 {
    let samples: Vec<Vec<Vec3>> = trajs.par_iter().map(|t| normalized_samples(t, ellipsoid, times)).collect();
    (0..trajs.len())
        .flat_map(|a| (0..a).map(move |b| (a, b)))
        .map(|(a, b)| min_separation(&samples[a], &samples[b]))
        .fold(f64::INFINITY, f64::min)
}
