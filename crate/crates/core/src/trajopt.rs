//! Single-polynomial transition trajectories and minimum-snap optimization.
//!
//! Every solve is carried out in normalized time `tau = (t - t_s) / T` on
//! `[0, 1]`, where the snap Gram matrix is well scaled. Boundary derivatives
//! are mapped with `d^p/dtau^p = T^p d^p/dt^p` and the optimal cost is mapped
//! back with `J_t = J_tau / T^7`. Stored coefficients are in local physical time
//! `t - t_start` (seconds).
//!
//! The equality-constrained problem is solved with the nullspace method. The
//! start conditions fix the five lowest coefficients, the end conditions are
//! satisfied by a least-norm particular solution and the remaining
//! `degree - 9` coefficients per axis are chosen by a least-squares solve on
//! snap values at Gauss-Legendre nodes. Working with sampled snap rather than
//! the monomial Gram matrix keeps the conditioning at its square root.

use nalgebra::{DMatrix, DVector};

use crate::conic::{ConicOutcome, ConicProblem, LinearRow, NormBound};
use crate::error::{argument, numerical, validation, Error, Result};
use crate::{State, Vec3};

/// Polynomial degree used when none is configured.
pub const DEFAULT_DEGREE: usize = 14;
/// Number of constraint time steps used when none is configured.
pub const DEFAULT_STEPS: usize = 10;
/// Ten boundary equalities per axis need at least ten coefficients.
pub const MIN_DEGREE: usize = 9;

/// Falling factorial `i! / (i - p)!`, zero when `p > i`.
pub(crate) fn falling(i: usize, p: usize) -> f64 {
    if p > i {
        return 0.0;
    }
    ((i - p + 1)..=i).map(|v| v as f64).product()
}

/// Row `d^order/dtau^order [1, tau, ..., tau^(n-1)]`.
pub(crate) fn derivative_row(n: usize, order: usize, tau: f64) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        if i < order {
            0.0
        } else {
            falling(i, order) * tau.powi((i - order) as i32)
        }
    })
}

/// One polynomial per axis over `[t_start, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTrajectory {
    t_start: f64,
    t_end: f64,
    coeffs: [Vec<f64>; 3],
}

impl PolynomialTrajectory {
    /// `coeffs[axis][i]` multiplies `(t - t_start)^i`.
    pub fn new(t_start: f64, t_end: f64, coeffs: [Vec<f64>; 3]) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(validation(format!("trajectory window [{t_start}, {t_end}] is empty")));
        }
        let len = coeffs[0].len();
        if coeffs.iter().any(|c| c.len() != len) {
            return Err(validation("all axes need the same number of coefficients"));
        }
        if len < MIN_DEGREE + 1 {
            return Err(validation(format!(
                "degree {} below the minimum {MIN_DEGREE}",
                len as isize - 1
            )));
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(validation("non-finite polynomial coefficient"));
        }
        Ok(Self { t_start, t_end, coeffs })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn degree(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn coeffs(&self) -> &[Vec<f64>; 3] {
        &self.coeffs
    }

    /// Checked evaluation of the `order`-th derivative.
    pub fn eval(&self, t: f64, order: usize) -> Result<Vec3> {
        if !(self.t_start..=self.t_end).contains(&t) {
            return Err(argument(format!(
                "time {t} outside trajectory window [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if order > 4 {
            return Err(argument(format!("derivative order {order} exceeds 4")));
        }
        Ok(self.sample(t, order))
    }

    /// Horner evaluation without domain checks.
    pub fn sample(&self, t: f64, order: usize) -> Vec3 {
        let s = t - self.t_start;
        let mut out = Vec3::zeros();
        for (axis, c) in self.coeffs.iter().enumerate() {
            let mut acc = 0.0;
            for i in (order..c.len()).rev() {
                acc = acc * s + c[i] * falling(i, order);
            }
            out[axis] = acc;
        }
        out
    }

    /// Position through snap at `t`.
    pub fn state(&self, t: f64) -> State {
        std::array::from_fn(|order| self.sample(t, order))
    }

    /// Integral of squared snap over the window, summed over axes.
    pub fn snap_cost(&self) -> f64 {
        // evaluated in normalized time, where the Gram matrix is well scaled
        let s = snap_samples(self.degree());
        let tau_cost: f64 = self.normalized().iter().map(|v| (&s * v).norm_squared()).sum();
        tau_cost / self.duration().powi(7)
    }

    pub(crate) fn from_normalized(t_start: f64, t_end: f64, tau: &[DVector<f64>; 3]) -> Result<Self> {
        let dur = t_end - t_start;
        let coeffs = std::array::from_fn(|axis| {
            let mut scale = 1.0;
            tau[axis]
                .iter()
                .map(|c| {
                    let v = c / scale;
                    scale *= dur;
                    v
                })
                .collect()
        });
        Self::new(t_start, t_end, coeffs)
    }

    pub(crate) fn normalized(&self) -> [DVector<f64>; 3] {
        let dur = self.duration();
        std::array::from_fn(|axis| {
            let mut scale = 1.0;
            DVector::from_iterator(
                self.coeffs[axis].len(),
                self.coeffs[axis].iter().map(|c| {
                    let v = c * scale;
                    scale *= dur;
                    v
                }),
            )
        })
    }
}

/// Free-function form of [`PolynomialTrajectory::eval`].
pub fn eval_poly(traj: &PolynomialTrajectory, t: f64, order: usize) -> Result<Vec3> {
    traj.eval(t, order)
}

/// Position through snap at both ends of a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub start: State,
    pub end: State,
}

impl BoundaryConditions {
    /// Both ends at rest.
    pub fn rest_to_rest(from: Vec3, to: Vec3) -> Self {
        let mut start = [Vec3::zeros(); 5];
        let mut end = [Vec3::zeros(); 5];
        start[0] = from;
        end[0] = to;
        Self { start, end }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start.iter().chain(&self.end).any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(validation("non-finite boundary state"));
        }
        Ok(())
    }

    /// Same conditions with both positions shifted by `offset`.
    pub fn translated(&self, offset: Vec3) -> Self {
        let mut out = *self;
        out.start[0] += offset;
        out.end[0] += offset;
        out
    }
}

/// State bounds imposed at the discrete constraint times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateBounds {
    pub pos_min: Vec3,
    pub pos_max: Vec3,
    pub vel_max: Vec3,
    pub acc_norm_max: f64,
    pub jerk_max: Vec3,
    /// Number of constraint time steps `K`.
    pub steps: usize,
}

/// A single violated bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: String,
    pub time: f64,
    pub amount: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} at t = {:.4} s exceeds its bound by {:.4e}", self.what, self.time, self.amount)
    }
}

const AXES: [char; 3] = ['x', 'y', 'z'];

impl StateBounds {
    pub fn validate(&self) -> Result<()> {
        let ok = (0..3).all(|i| {
            self.pos_min[i] < self.pos_max[i] && self.vel_max[i] > 0.0 && self.jerk_max[i] > 0.0
        }) && self.acc_norm_max > 0.0;
        if !ok {
            return Err(validation("state bounds need min < max and positive limits"));
        }
        if self.steps < 2 {
            return Err(validation("at least two constraint steps are required"));
        }
        Ok(())
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self { steps, ..*self }
    }

    /// Constraint times `t_k = t_s + k (t_e - t_s) / K`, `k = 1..=K`.
    pub fn constraint_times(&self, t_s: f64, t_e: f64) -> Vec<f64> {
        (1..=self.steps)
            .map(|k| t_s + k as f64 * (t_e - t_s) / self.steps as f64)
            .collect()
    }

    /// Largest violation of this state, if any bound is exceeded by more than `tol`.
    pub fn violation(&self, state: &State, time: f64, tol: f64) -> Option<Violation> {
        let mut worst: Option<Violation> = None;
        let mut consider = |what: String, amount: f64| {
            if amount > tol && worst.as_ref().is_none_or(|w| amount > w.amount) {
                worst = Some(Violation { what, time, amount });
            }
        };
        for i in 0..3 {
            let a = AXES[i];
            consider(format!("position {a} (max)"), state[0][i] - self.pos_max[i]);
            consider(format!("position {a} (min)"), self.pos_min[i] - state[0][i]);
            consider(format!("velocity {a}"), state[1][i].abs() - self.vel_max[i]);
            consider(format!("jerk {a}"), state[3][i].abs() - self.jerk_max[i]);
        }
        consider("acceleration norm".into(), state[2].norm() - self.acc_norm_max);
        worst
    }

    /// Most violated bound over the constraint times, if any.
    pub fn check(&self, traj: &PolynomialTrajectory, tol: f64) -> Option<Violation> {
        self.constraint_times(traj.t_start(), traj.t_end())
            .into_iter()
            .filter_map(|t| self.violation(&traj.state(t), t, tol))
            .max_by(|a, b| a.amount.total_cmp(&b.amount))
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (0.5 * (x + 1.0), 0.5 * w)
        })
        .collect()
}

/// Rows `sqrt(w_r) d^4/dtau^4 [1, tau, ..., tau^P]` at quadrature nodes on
/// `[0, 1]`, so that `|S x|^2` is the exact snap integral of `x`.
pub(crate) fn snap_samples(degree: usize) -> DMatrix<f64> {
    let n = degree + 1;
    let nodes = gauss_legendre_unit(n.saturating_sub(4).max(1));
    let mut s = DMatrix::zeros(nodes.len(), n);
    for (r, &(tau, w)) in nodes.iter().enumerate() {
        let row = derivative_row(n, 4, tau) * w.sqrt();
        s.row_mut(r).copy_from(&row.transpose());
    }
    s
}

/// Gram matrix of fourth derivatives of the monomials `t^i` on `[t_s, t_e]`.
fn gram(degree: usize, t_s: f64, t_e: f64) -> DMatrix<f64> {
    let n = degree + 1;
    DMatrix::from_fn(n, n, |i, j| {
        if i < 4 || j < 4 {
            return 0.0;
        }
        let e = (i + j - 7) as i32;
        falling(i, 4) * falling(j, 4) * (t_e.powi(e) - t_s.powi(e)) / e as f64
    })
}

/// Hessian of the integrated squared snap for the stacked coefficient vector
/// `[x; y; z]` of monomials in `t` on `[t_s, t_e]`.
///
/// The returned matrix is the Gram matrix `Q` such that the snap integral equals
/// `x' Q x`; it is block diagonal with one block per axis.
pub fn snap_hessian(degree: usize, t_s: f64, t_e: f64) -> DMatrix<f64> {
    let n = degree + 1;
    let block = gram(degree, t_s, t_e);
    let mut h = DMatrix::zeros(3 * n, 3 * n);
    for axis in 0..3 {
        h.view_mut((axis * n, axis * n), (n, n)).copy_from(&block);
    }
    h
}

/// Result of the equality-constrained minimum-snap solve.
#[derive(Debug, Clone)]
pub struct MinSnapSolution {
    pub trajectory: PolynomialTrajectory,
    /// Integral of squared snap in physical units.
    pub cost: f64,
    /// Relative KKT residual of the normalized problem.
    pub kkt_residual: f64,
}

/// Precomputed normalized-time factorization for one polynomial degree.
///
/// The factorization depends only on the degree, so a single solver can be
/// reused for every pair of boundary conditions and every duration.
#[derive(Debug, Clone)]
pub struct MinSnapSolver {
    degree: usize,
    /// derivative rows 0..=4 at tau = 1
    end_rows: DMatrix<f64>,
    row_scale: [f64; 5],
    q1: DMatrix<f64>,
    r1: DMatrix<f64>,
    /// n x (n - 10) orthonormal nullspace basis of the boundary constraints
    z: DMatrix<f64>,
    /// quadrature-weighted snap samples, `|S x|^2` = normalized cost
    snap: DMatrix<f64>,
    /// thin QR of `S Z`
    sz_q: DMatrix<f64>,
    sz_r: DMatrix<f64>,
}

impl MinSnapSolver {
    pub fn new(degree: usize) -> Result<Self> {
        if degree < MIN_DEGREE {
            return Err(argument(format!("degree {degree} below the minimum {MIN_DEGREE}")));
        }
        let n = degree + 1;
        let end_rows = DMatrix::from_fn(5, n, |p, i| falling(i, p));
        let free = n - 5;
        let mut row_scale = [0.0; 5];
        let mut scaled = DMatrix::zeros(5, free);
        for p in 0..5 {
            let row = end_rows.view((p, 5), (1, free));
            row_scale[p] = 1.0 / row.norm();
            scaled.row_mut(p).copy_from(&(row * row_scale[p]));
        }
        let qr = scaled.transpose().qr();
        let q1 = qr.q();
        let r1 = qr.r();
        if (0..5).any(|i| r1[(i, i)].abs() < 1e-12) {
            return Err(numerical("end-condition matrix is rank deficient"));
        }

        // complement of span(q1): eigenvectors of the projector with eigenvalue one
        let proj = DMatrix::identity(free, free) - &q1 * q1.transpose();
        let eig = proj.symmetric_eigen();
        let mut idx: Vec<usize> = (0..free).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        idx.sort_unstable();
        if idx.len() != n - 10 {
            return Err(numerical("could not build the constraint nullspace"));
        }
        let mut z = DMatrix::zeros(n, idx.len());
        for (col, &i) in idx.iter().enumerate() {
            z.view_mut((5, col), (free, 1)).copy_from(&eig.eigenvectors.column(i));
        }

        let snap = snap_samples(degree);
        let (sz_q, sz_r) = if z.ncols() == 0 {
            (DMatrix::zeros(snap.nrows(), 0), DMatrix::zeros(0, 0))
        } else {
            let qr = (&snap * &z).qr();
            (qr.q(), qr.r())
        };
        if (0..sz_r.nrows()).any(|i| sz_r[(i, i)].abs() < 1e-300) {
            return Err(numerical("reduced snap system is rank deficient"));
        }
        Ok(Self { degree, end_rows, row_scale, q1, r1, z, snap, sz_q, sz_r })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn n(&self) -> usize {
        self.degree + 1
    }

    pub(crate) fn nullspace(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// `R^-1` of the QR factorization of `S Z`: maps whitened nullspace
    /// coordinates `u` to `w` with `|S Z w|^2 = |u|^2`.
    pub(crate) fn whitening(&self) -> Result<DMatrix<f64>> {
        let k = self.sz_r.nrows();
        self.sz_r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .ok_or_else(|| numerical("singular whitening factor"))
    }

    /// `Q' S x`: gradient of half the normalized cost with respect to whitened
    /// nullspace coordinates at `x`.
    pub(crate) fn whitened_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.sz_q.transpose() * (&self.snap * x)
    }

    /// Particular solution meeting the boundary data, before the reduced solve.
    fn particular(&self, start: [f64; 5], end: [f64; 5]) -> DVector<f64> {
        let n = self.n();
        let mut x = DVector::zeros(n);
        for p in 0..5 {
            x[p] = start[p] / falling(p, p);
        }
        let mut rhs = DVector::zeros(5);
        for p in 0..5 {
            let fixed: f64 = (0..5).map(|i| self.end_rows[(p, i)] * x[i]).sum();
            rhs[p] = (end[p] - fixed) * self.row_scale[p];
        }
        let u = self
            .r1
            .transpose()
            .solve_lower_triangular(&rhs)
            .expect("triangular factor checked at construction");
        let y = &self.q1 * u;
        x.rows_mut(5, n - 5).copy_from(&y);
        x
    }

    /// Minimizer in normalized coordinates for one axis.
    fn solve_axis(&self, start: [f64; 5], end: [f64; 5]) -> DVector<f64> {
        let xf = self.particular(start, end);
        if self.z.ncols() == 0 {
            return xf;
        }
        let rhs = -(self.sz_q.transpose() * (&self.snap * &xf));
        let w = self
            .sz_r
            .solve_upper_triangular(&rhs)
            .expect("triangular factor checked at construction");
        xf + &self.z * w
    }

    fn normalized_data(bc: &BoundaryConditions, dur: f64) -> [([f64; 5], [f64; 5]); 3] {
        std::array::from_fn(|axis| {
            let mut s = [0.0; 5];
            let mut e = [0.0; 5];
            let mut scale = 1.0;
            for p in 0..5 {
                s[p] = bc.start[p][axis] * scale;
                e[p] = bc.end[p][axis] * scale;
                scale *= dur;
            }
            (s, e)
        })
    }

    fn check_window(t_s: f64, t_e: f64) -> Result<f64> {
        if !(t_s.is_finite() && t_e.is_finite() && t_e > t_s) {
            return Err(argument(format!("transition window [{t_s}, {t_e}] is empty")));
        }
        Ok(t_e - t_s)
    }

    /// Normalized optimal coefficients per axis.
    pub(crate) fn solve_normalized(
        &self,
        bc: &BoundaryConditions,
        t_s: f64,
        t_e: f64,
    ) -> Result<[DVector<f64>; 3]> {
        bc.validate()?;
        let dur = Self::check_window(t_s, t_e)?;
        let data = Self::normalized_data(bc, dur);
        Ok(std::array::from_fn(|axis| self.solve_axis(data[axis].0, data[axis].1)))
    }

    /// Normalized-time snap cost of coefficient vectors.
    pub(crate) fn normalized_cost(&self, x: &[DVector<f64>; 3]) -> f64 {
        x.iter().map(|v| (&self.snap * v).norm_squared()).sum()
    }

    /// Optimal snap cost only (physical units).
    pub fn cost(&self, bc: &BoundaryConditions, t_s: f64, t_e: f64) -> Result<f64> {
        let x = self.solve_normalized(bc, t_s, t_e)?;
        Ok(self.normalized_cost(&x) / (t_e - t_s).powi(7))
    }

    pub fn solve(&self, bc: &BoundaryConditions, t_s: f64, t_e: f64) -> Result<MinSnapSolution> {
        let x = self.solve_normalized(bc, t_s, t_e)?;
        let dur = t_e - t_s;
        let data = Self::normalized_data(bc, dur);
        let kkt_residual = (0..3)
            .map(|axis| self.kkt_residual(&x[axis], data[axis].0, data[axis].1))
            .fold(0.0, f64::max);
        if !kkt_residual.is_finite() {
            return Err(numerical("KKT solve produced non-finite values"));
        }
        let cost = self.normalized_cost(&x) / dur.powi(7);
        let trajectory = PolynomialTrajectory::from_normalized(t_s, t_e, &x)?;
        Ok(MinSnapSolution { trajectory, cost, kkt_residual })
    }

    /// Relative residual of `[2H A'; A 0] [x; l] = [0; b]` with the best multipliers.
    fn kkt_residual(&self, x: &DVector<f64>, start: [f64; 5], end: [f64; 5]) -> f64 {
        let n = self.n();
        let mut a = DMatrix::zeros(10, n);
        let mut b = DVector::zeros(10);
        for p in 0..5 {
            a.row_mut(p).copy_from(&derivative_row(n, p, 0.0).transpose());
            a.row_mut(5 + p).copy_from(&self.end_rows.row(p));
            b[p] = start[p];
            b[5 + p] = end[p];
        }
        let st = self.snap.transpose();
        let grad = 2.0 * (&st * (&self.snap * x));
        let at = a.transpose();
        let lambda = at
            .clone()
            .svd(true, true)
            .solve(&(-&grad), 1e-300)
            .unwrap_or_else(|_| DVector::zeros(10));
        let stat = (&grad + &at * &lambda).amax();
        let gram_norm = (st.abs() * self.snap.abs()).row_sum().max();
        let stat_scale = (2.0 * gram_norm * x.amax())
            .max((&at * &lambda).amax())
            .max(f64::MIN_POSITIVE);
        let feas = (&a * x - &b).amax();
        let feas_scale = (a.abs().row_sum().max() * x.amax() + b.amax()).max(f64::MIN_POSITIVE);
        (stat / stat_scale).max(feas / feas_scale)
    }
}

/// Equality-constrained minimum-snap transition.
pub fn solve_min_snap(
    bc: &BoundaryConditions,
    degree: usize,
    t_s: f64,
    t_e: f64,
) -> Result<MinSnapSolution> {
    MinSnapSolver::new(degree)?.solve(bc, t_s, t_e)
}

/// Affine family `x_axis(u) = base_axis + maps_axis * u_axis` of coefficient
/// vectors in normalized time, all satisfying the boundary equalities.
#[derive(Debug, Clone)]
pub(crate) struct Parametrization {
    pub t_s: f64,
    pub t_e: f64,
    pub base: [DVector<f64>; 3],
    pub maps: [DMatrix<f64>; 3],
}

impl Parametrization {
    pub fn block(&self) -> usize {
        self.maps[0].ncols()
    }

    pub fn dim(&self) -> usize {
        3 * self.block()
    }

    fn duration(&self) -> f64 {
        self.t_e - self.t_s
    }

    pub fn coefficients(&self, u: &[f64]) -> [DVector<f64>; 3] {
        let nz = self.block();
        std::array::from_fn(|axis| {
            let ua = DVector::from_column_slice(&u[axis * nz..(axis + 1) * nz]);
            &self.base[axis] + &self.maps[axis] * ua
        })
    }

    pub fn trajectory(&self, u: &[f64]) -> Result<PolynomialTrajectory> {
        PolynomialTrajectory::from_normalized(self.t_s, self.t_e, &self.coefficients(u))
    }

    /// Physical `order`-th derivative on `axis` at time `t` as `constant + row . u`,
    /// with `row` spanning the full decision vector.
    pub fn affine(&self, axis: usize, order: usize, t: f64) -> (f64, Vec<f64>) {
        let tau = (t - self.t_s) / self.duration();
        let scale = self.duration().powi(order as i32);
        let r = derivative_row(self.base[axis].len(), order, tau);
        let c = r.dot(&self.base[axis]) / scale;
        let g = self.maps[axis].transpose() * r / scale;
        let nz = self.block();
        let mut row = vec![0.0; self.dim()];
        row[axis * nz..(axis + 1) * nz].copy_from_slice(g.as_slice());
        (c, row)
    }

    /// Box, acceleration-norm and jerk constraints at the interior constraint times.
    pub fn bound_constraints(&self, bounds: &StateBounds) -> (Vec<LinearRow>, Vec<NormBound>) {
        let mut linear = Vec::new();
        let mut norms = Vec::new();
        let margin = |v: f64| 1e-8 * v.abs().max(1.0);
        let times = bounds.constraint_times(self.t_s, self.t_e);
        // the last step is the end point, fixed by the boundary equalities
        for &t in &times[..times.len() - 1] {
            for axis in 0..3 {
                let (c, row) = self.affine(axis, 0, t);
                push_interval(
                    &mut linear,
                    c,
                    &row,
                    bounds.pos_min[axis] + margin(bounds.pos_min[axis]),
                    bounds.pos_max[axis] - margin(bounds.pos_max[axis]),
                );
                let vmax = bounds.vel_max[axis] - margin(bounds.vel_max[axis]);
                let (c, row) = self.affine(axis, 1, t);
                push_interval(&mut linear, c, &row, -vmax, vmax);
                let jmax = bounds.jerk_max[axis] - margin(bounds.jerk_max[axis]);
                let (c, row) = self.affine(axis, 3, t);
                push_interval(&mut linear, c, &row, -jmax, jmax);
            }
            let (offsets, rows): (Vec<f64>, Vec<Vec<f64>>) =
                (0..3).map(|axis| self.affine(axis, 2, t)).unzip();
            norms.push(NormBound {
                rows,
                offsets,
                radius: bounds.acc_norm_max - margin(bounds.acc_norm_max),
            });
        }
        (linear, norms)
    }
}

/// `lo <= c + row . u <= hi`
fn push_interval(out: &mut Vec<LinearRow>, c: f64, row: &[f64], lo: f64, hi: f64) {
    out.push(LinearRow { row: row.to_vec(), rhs: hi - c });
    out.push(LinearRow { row: row.iter().map(|v| -v).collect(), rhs: c - lo });
}

/// Minimum-snap trajectory subject to state bounds at the `K` constraint times.
///
/// Returns the unconstrained optimum when it already satisfies every bound.
/// Otherwise the state-constrained problem is solved as a second-order cone
/// program over the nullspace of the boundary equalities.
pub fn generate_candidate(
    bc: &BoundaryConditions,
    bounds: &StateBounds,
    degree: usize,
    t_s: f64,
    t_e: f64,
) -> Result<PolynomialTrajectory> {
    generate_candidate_with(&MinSnapSolver::new(degree)?, bc, bounds, t_s, t_e)
}

/// [`generate_candidate`] with a prebuilt solver.
pub fn generate_candidate_with(
    solver: &MinSnapSolver,
    bc: &BoundaryConditions,
    bounds: &StateBounds,
    t_s: f64,
    t_e: f64,
) -> Result<PolynomialTrajectory> {
    bounds.validate()?;
    for (state, t) in [(&bc.start, t_s), (&bc.end, t_e)] {
        if let Some(v) = bounds.violation(state, t, 1e-9) {
            return Err(Error::Infeasible { reason: format!("boundary state violates bounds: {v}") });
        }
    }
    let unconstrained = solver.solve(bc, t_s, t_e)?;
    let Some(worst) = bounds.check(&unconstrained.trajectory, 0.0) else {
        return Ok(unconstrained.trajectory);
    };

    let base = solver.solve_normalized(bc, t_s, t_e)?;
    let z = solver.nullspace();
    if z.ncols() == 0 {
        return Err(Error::Infeasible {
            reason: format!("degree {} leaves no freedom; {worst}", solver.degree()),
        });
    }
    let map = z * solver.whitening()?;
    let param = Parametrization {
        t_s,
        t_e,
        maps: [map.clone(), map.clone(), map],
        base,
    };
    let mut problem = ConicProblem::new(param.dim());
    let nz = param.block();
    for axis in 0..3 {
        // residual gradient of the reduced objective at the base point
        let g = solver.whitened_gradient(&param.base[axis]);
        problem.q[axis * nz..(axis + 1) * nz].copy_from_slice(g.as_slice());
    }
    let (linear, norms) = param.bound_constraints(bounds);
    problem.linear = linear;
    problem.norms = norms;
    match problem.solve() {
        ConicOutcome::Solved(u) => {
            let traj = param.trajectory(&u)?;
            if let Some(v) = bounds.check(&traj, 1e-6) {
                return Err(numerical(format!("constrained solve missed a bound: {v}")));
            }
            Ok(traj)
        }
        ConicOutcome::Infeasible => Err(Error::Infeasible {
            reason: format!("state bounds cannot be met; most violated: {worst}"),
        }),
        ConicOutcome::Failed(status) => Err(numerical(format!(
            "candidate solve did not converge ({status}); most violated: {worst}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(coeffs: [Vec<f64>; 3]) -> PolynomialTrajectory {
        PolynomialTrajectory::new(0.0, 3.0, coeffs).unwrap()
    }

    fn padded(c: &[f64]) -> Vec<f64> {
        let mut v = c.to_vec();
        v.resize(15, 0.0);
        v
    }

    #[test]
    fn hessian_degree_four_unit_interval() {
        let h = snap_hessian(4, 0.0, 1.0);
        assert_eq!(h.nrows(), 15);
        for i in 0..15 {
            for j in 0..15 {
                let expected = if i == j && i % 5 == 4 { 576.0 } else { 0.0 };
                assert_eq!(h[(i, j)], expected, "({i},{j})");
            }
        }
    }

    #[test]
    fn hessian_symmetric_psd() {
        for degree in [4, 9, 14] {
            let h = snap_hessian(degree, 0.0, 1.0);
            assert_eq!(h, h.transpose());
            let eig = h.symmetric_eigen().eigenvalues;
            let scale = eig.amax();
            assert!(eig.iter().all(|&e| e >= -1e-9 * scale.max(1.0)), "{eig}");
        }
    }

    #[test]
    fn eval_constant_and_square() {
        let c = poly([padded(&[2.0]), padded(&[-1.0]), padded(&[0.5])]);
        assert_eq!(c.eval(1.7, 0).unwrap(), Vec3::new(2.0, -1.0, 0.5));
        for order in 1..=4 {
            assert_eq!(c.eval(1.7, order).unwrap(), Vec3::zeros());
        }
        let sq = poly([padded(&[0.0, 0.0, 1.0]), padded(&[]), padded(&[])]);
        assert_eq!(sq.eval(2.0, 1).unwrap().x, 4.0);
        assert!(matches!(sq.eval(3.5, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn rejects_low_degree() {
        assert!(PolynomialTrajectory::new(0.0, 1.0, [vec![0.0; 5], vec![0.0; 5], vec![0.0; 5]]).is_err());
        assert!(MinSnapSolver::new(8).is_err());
    }

    #[test]
    fn identical_rest_states_cost_nothing() {
        let p = Vec3::new(1.0, 2.0, 1.5);
        let sol = solve_min_snap(&BoundaryConditions::rest_to_rest(p, p), 14, 3.0, 7.0).unwrap();
        assert!(sol.cost.abs() < 1e-18);
        for t in [3.0, 4.1, 6.9] {
            assert!((sol.trajectory.eval(t, 0).unwrap() - p).norm() < 1e-12);
        }
    }

    #[test]
    fn cost_quadruples_with_doubled_displacement() {
        let one = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::new(1.0, 0.5, -0.2));
        let two = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::new(2.0, 1.0, -0.4));
        let c1 = solve_min_snap(&one, 14, 0.0, 2.0).unwrap().cost;
        let c2 = solve_min_snap(&two, 14, 0.0, 2.0).unwrap().cost;
        assert!((c2 / c1 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn degree_nine_is_unique_interpolant() {
        let bc = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::x());
        let sol = solve_min_snap(&bc, 9, 0.0, 1.0).unwrap();
        let s = sol.trajectory.state(1.0);
        assert!((s[0] - Vec3::x()).norm() < 1e-10);
        assert!(s[1..].iter().all(|v| v.norm() < 1e-8));
        assert!(sol.kkt_residual < 1e-8);
    }

    #[test]
    fn normalized_round_trip() {
        let bc = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        let traj = solve_min_snap(&bc, 14, 2.0, 5.0).unwrap().trajectory;
        let back = PolynomialTrajectory::from_normalized(2.0, 5.0, &traj.normalized()).unwrap();
        for (a, b) in traj.coeffs().iter().flatten().zip(back.coeffs().iter().flatten()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
        }
    }

    fn loose() -> StateBounds {
        StateBounds {
            pos_min: Vec3::repeat(-100.0),
            pos_max: Vec3::repeat(100.0),
            vel_max: Vec3::repeat(100.0),
            acc_norm_max: 1000.0,
            jerk_max: Vec3::repeat(1e4),
            steps: 10,
        }
    }

    #[test]
    fn far_endpoints_with_slow_velocity_are_infeasible() {
        let bc = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0));
        let mut bounds = loose();
        bounds.pos_min = Vec3::repeat(-200.0);
        bounds.pos_max = Vec3::repeat(200.0);
        bounds.vel_max = Vec3::repeat(0.1);
        match generate_candidate(&bc, &bounds, 14, 0.0, 1.0) {
            Err(Error::Infeasible { reason }) => assert!(reason.contains("velocity"), "{reason}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_outside_bounds_is_reported() {
        let bc = BoundaryConditions::rest_to_rest(Vec3::zeros(), Vec3::new(150.0, 0.0, 0.0));
        assert!(matches!(
            generate_candidate(&bc, &loose(), 14, 0.0, 1.0),
            Err(Error::Infeasible { .. })
        ));
    }
}
