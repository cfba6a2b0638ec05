//! Small dense second-order-cone programs solved with Clarabel.
//!
//! Problems have the form
//!
//! ```text
//! minimize   1/2 |u|^2 + q'u
//! subject to a_i'u <= b_i                      (linear rows)
//!            |G_j u + g_j| <= r_j              (second-order blocks)
//! ```
//!
//! Callers whiten their quadratic objective before building the problem, so the
//! Hessian is always the identity.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

/// `row . u <= rhs`
#[derive(Debug, Clone)]
pub(crate) struct LinearRow {
    pub row: Vec<f64>,
    pub rhs: f64,
}

/// `|rows . u + offsets| <= radius`
#[derive(Debug, Clone)]
pub(crate) struct NormBound {
    pub rows: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum ConicOutcome {
    Solved(Vec<f64>),
    Infeasible,
    Failed(String),
}

#[derive(Debug, Clone, Default)]
pub(crate) struct ConicProblem {
    pub dim: usize,
    pub q: Vec<f64>,
    pub linear: Vec<LinearRow>,
    pub norms: Vec<NormBound>,
}

impl ConicProblem {
    pub fn new(dim: usize) -> Self {
        Self { dim, q: vec![0.0; dim], ..Default::default() }
    }

    pub fn solve(&self) -> ConicOutcome {
        let n = self.dim;
        let p = CscMatrix::new(n, n, (0..=n).collect(), (0..n).collect(), vec![1.0; n]);

        // dense constraint matrix, row-major first
        let mut rows: Vec<&[f64]> = Vec::new();
        let mut b = Vec::new();
        for r in &self.linear {
            rows.push(&r.row);
            b.push(r.rhs);
        }
        let negated: Vec<Vec<Vec<f64>>> = self
            .norms
            .iter()
            .map(|nb| nb.rows.iter().map(|r| r.iter().map(|v| -v).collect()).collect())
            .collect();
        let zero_row = vec![0.0; n];
        for (nb, neg) in self.norms.iter().zip(&negated) {
            rows.push(&zero_row);
            b.push(nb.radius);
            for (r, off) in neg.iter().zip(&nb.offsets) {
                rows.push(r);
                b.push(*off);
            }
        }
        let m = rows.len();
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for j in 0..n {
            for (i, r) in rows.iter().enumerate() {
                if r[j] != 0.0 {
                    rowval.push(i);
                    nzval.push(r[j]);
                }
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(m, n, colptr, rowval, nzval);

        let mut cones = Vec::new();
        if !self.linear.is_empty() {
            cones.push(SupportedConeT::NonnegativeConeT(self.linear.len()));
        }
        for nb in &self.norms {
            cones.push(SupportedConeT::SecondOrderConeT(nb.rows.len() + 1));
        }

        let settings = DefaultSettings {
            verbose: false,
            max_iter: 300,
            tol_gap_abs: 1e-9,
            tol_gap_rel: 1e-9,
            tol_feas: 1e-9,
            ..DefaultSettings::default()
        };
        let mut solver = match DefaultSolver::new(&p, &self.q, &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(e) => return ConicOutcome::Failed(format!("solver setup: {e}")),
        };
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                ConicOutcome::Solved(solver.solution.x.clone())
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                ConicOutcome::Infeasible
            }
            other => ConicOutcome::Failed(format!("{other:?}")),
        }
    }
}
