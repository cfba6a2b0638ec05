//! Goal assignment between two motion primitives.
//!
//! Each drone flying role `alpha` of the outgoing primitive is matched to a role
//! `beta` of the incoming one so that the summed transition cost is minimal.
//! The cost of a pair is the optimal snap of the boundary-constrained transition
//! polynomial; a Euclidean endpoint distance is available for comparison.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{validation, Result};
use crate::primitives::MotionPrimitive;
use crate::trajopt::{BoundaryConditions, MinSnapSolver};
use crate::State;

/// Transition window between two primitives.
#[derive(Debug, Clone, Copy)]
pub struct TransitionSpec<'a> {
    pub mp1: &'a MotionPrimitive,
    pub mp2: &'a MotionPrimitive,
    pub t_s: f64,
    pub t_e: f64,
    /// Allowed gap between `t_s` and the end of `mp1`, seconds.
    pub eps1: f64,
    /// Allowed gap between `t_e` and the start of `mp2`, seconds.
    pub eps2: f64,
}

impl<'a> TransitionSpec<'a> {
    /// Transition starting exactly at the end of `mp1` and ending at the start of `mp2`.
    pub fn between(mp1: &'a MotionPrimitive, mp2: &'a MotionPrimitive) -> Self {
        Self { mp1, mp2, t_s: mp1.tf(), t_e: mp2.t0(), eps1: 0.0, eps2: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_s.is_finite() && self.t_e.is_finite() && self.t_s < self.t_e) {
            return Err(validation(format!(
                "transition window [{}, {}] is empty",
                self.t_s, self.t_e
            )));
        }
        if !(self.eps1 >= 0.0 && self.eps2 >= 0.0) {
            return Err(validation("transition tolerances must be non-negative"));
        }
        if (self.t_s - self.mp1.tf()).abs() > self.eps1 {
            return Err(validation(format!(
                "t_s = {} is more than {} s from the end of the outgoing primitive ({})",
                self.t_s,
                self.eps1,
                self.mp1.tf()
            )));
        }
        if (self.t_e - self.mp2.t0()).abs() > self.eps2 {
            return Err(validation(format!(
                "t_e = {} is more than {} s from the start of the incoming primitive ({})",
                self.t_e,
                self.eps2,
                self.mp2.t0()
            )));
        }
        if self.mp1.len() != self.mp2.len() {
            return Err(validation(format!(
                "primitives have {} and {} drones",
                self.mp1.len(),
                self.mp2.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mp1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mp1.is_empty()
    }

    /// State of role `alpha` of `mp1` at `t_s`.
    pub fn start_state(&self, alpha: usize) -> Result<State> {
        self.mp1.state(alpha, self.t_s)
    }

    /// State of role `beta` of `mp2` at `t_e`.
    pub fn end_state(&self, beta: usize) -> Result<State> {
        self.mp2.state(beta, self.t_e)
    }

    pub fn boundary(&self, alpha: usize, beta: usize) -> Result<BoundaryConditions> {
        Ok(BoundaryConditions { start: self.start_state(alpha)?, end: self.end_state(beta)? })
    }
}

/// A bijection from outgoing roles to incoming roles and its summed cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `perm[alpha] = beta`
    pub perm: Vec<usize>,
    pub total_cost: f64,
}

/// How pairwise assignment costs are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostMode {
    /// Optimal snap of the boundary-constrained transition.
    #[default]
    MinSnap,
    /// Straight-line distance between the transition endpoints.
    Euclidean,
}

/// Optimal snap cost of flying role `alpha` of `mp1` into role `beta` of `mp2`.
pub fn assignment_cost(spec: &TransitionSpec, alpha: usize, beta: usize, degree: usize) -> Result<f64> {
    spec.validate()?;
    MinSnapSolver::new(degree)?.cost(&spec.boundary(alpha, beta)?, spec.t_s, spec.t_e)
}

/// Min-snap cost matrix, rows indexed by `mp1` roles and columns by `mp2` roles.
pub fn build_cost_matrix(spec: &TransitionSpec, degree: usize) -> Result<DMatrix<f64>> {
    build_cost_matrix_with(spec, degree, CostMode::MinSnap)
}

pub fn build_cost_matrix_with(spec: &TransitionSpec, degree: usize, mode: CostMode) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.len();
    let starts = (0..n).map(|a| spec.start_state(a)).collect::<Result<Vec<_>>>()?;
    let ends = (0..n).map(|b| spec.end_state(b)).collect::<Result<Vec<_>>>()?;
    let entries: Vec<f64> = match mode {
        CostMode::Euclidean => (0..n * n)
            .map(|k| (starts[k / n][0] - ends[k % n][0]).norm())
            .collect(),
        CostMode::MinSnap => {
            let solver = MinSnapSolver::new(degree)?;
            (0..n * n)
                .into_par_iter()
                .map(|k| {
                    let bc = BoundaryConditions { start: starts[k / n], end: ends[k % n] };
                    solver.cost(&bc, spec.t_s, spec.t_e).map(|c| c.max(0.0))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(DMatrix::from_row_slice(n, n, &entries))
}

/// Optimal value and row-to-column matching of a square assignment problem.
///
/// Shortest augmenting path form of the Hungarian method with row and column
/// potentials, `O(n^3)`.
fn hungarian_core(c: &DMatrix<f64>) -> Vec<usize> {
    let n = c.nrows();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    // 1-based; column 0 is a virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

fn row_order_cost(c: &DMatrix<f64>, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| c[(i, j)]).sum()
}

fn optimal_value(c: &DMatrix<f64>) -> f64 {
    row_order_cost(c, &hungarian_core(c))
}

fn submatrix(c: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| c[(rows[i], cols[j])])
}

/// Minimum-cost perfect matching of a square cost matrix.
///
/// Among optimal matchings the lexicographically smallest permutation is
/// returned: rows are fixed in order, each to the lowest column that still
/// admits an optimal completion.
pub fn hungarian(costs: &DMatrix<f64>) -> Result<Assignment> {
    let n = costs.nrows();
    if costs.ncols() != n {
        return Err(validation(format!("cost matrix is {}x{}, not square", n, costs.ncols())));
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(validation("cost matrix has non-finite entries"));
    }
    if n == 0 {
        return Ok(Assignment { perm: Vec::new(), total_cost: 0.0 });
    }
    let scale = costs.amax().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale * n as f64;

    let mut perm = Vec::with_capacity(n);
    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut target = optimal_value(costs);
    for row in 0..n {
        let rest_rows: Vec<usize> = (row + 1..n).collect();
        let mut chosen = None;
        for (k, &col) in free_cols.iter().enumerate() {
            let mut cols = free_cols.clone();
            cols.remove(k);
            let rest = if rest_rows.is_empty() {
                0.0
            } else {
                optimal_value(&submatrix(costs, &rest_rows, &cols))
            };
            if costs[(row, col)] + rest <= target + tol {
                chosen = Some((k, rest));
                break;
            }
        }
        // the optimal column always qualifies; fall back to the plain solution if rounding disagrees
        let Some((k, rest)) = chosen else {
            let perm = hungarian_core(costs);
            let total_cost = row_order_cost(costs, &perm);
            return Ok(Assignment { perm, total_cost });
        };
        perm.push(free_cols.remove(k));
        target = rest;
    }
    let total_cost = row_order_cost(costs, &perm);
    Ok(Assignment { perm, total_cost })
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(validation(format!("assignment has {} entries for {n} drones", perm.len())));
    }
    let mut seen = vec![false; n];
    for &b in perm {
        if b >= n || std::mem::replace(&mut seen[b], true) {
            return Err(validation(format!("assignment is not a bijection (entry {b})")));
        }
    }
    Ok(())
}

/// Optimal min-snap goal assignment.
pub fn assign(spec: &TransitionSpec, degree: usize) -> Result<Assignment> {
    assign_with(spec, degree, CostMode::MinSnap, None)
}

/// Assignment with a chosen cost mode, or the cost of an externally supplied
/// permutation when `external` is given.
pub fn assign_with(
    spec: &TransitionSpec,
    degree: usize,
    mode: CostMode,
    external: Option<&[usize]>,
) -> Result<Assignment> {
    spec.validate()?;
    if let Some(perm) = external {
        check_permutation(perm, spec.len())?;
    }
    let costs = build_cost_matrix_with(spec, degree, mode)?;
    match external {
        Some(perm) => Ok(Assignment { perm: perm.to_vec(), total_cost: row_order_cost(&costs, perm) }),
        None => hungarian(&costs),
    }
}
