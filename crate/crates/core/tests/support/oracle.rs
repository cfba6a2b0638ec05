//! Independent reference minimizer for the snap objective.
//!
//! Works in a shifted Legendre basis on [0, 1], evaluates snap at Gauss-Legendre
//! nodes (exact for the polynomial degrees involved) and solves the boundary
//! equality-constrained least-squares problem through a full-pivot LU of its
//! KKT matrix. Shares no code with the library solver. Also holds an
//! exhaustive assignment search.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Values of `d^order/dtau^order P_k(2 tau - 1)` for `k = 0..n`.
pub fn shifted_legendre(n: usize, order: usize, tau: f64) -> Vec<f64> {
    let x = 2.0 * tau - 1.0;
    // table[d][k] = d-th x-derivative of P_k
    let mut table = vec![vec![0.0; n]; order + 1];
    for d in 0..=order {
        for k in 0..n {
            table[d][k] = match k {
                0 => if d == 0 { 1.0 } else { 0.0 },
                1 => match d {
                    0 => x,
                    1 => 1.0,
                    _ => 0.0,
                },
                _ => {
                    let kk = (k - 1) as f64;
                    let lower = if d > 0 { d as f64 * table[d - 1][k - 1] } else { 0.0 };
                    ((2.0 * kk + 1.0) * (x * table[d][k - 1] + lower) - kk * table[d][k - 2]) / (kk + 1.0)
                }
            };
        }
    }
    let scale = 2f64.powi(order as i32);
    table[order].iter().map(|v| v * scale).collect()
}

/// Minimal snap integral over `[0, duration]` for one axis with `derivs[p]` the
/// p-th derivatives at the two ends (physical units), polynomial degree `degree`.
pub fn min_snap_axis(degree: usize, duration: f64, start: [f64; 5], end: [f64; 5]) -> f64 {
    let n = degree + 1;
    let (nodes, weights) = gauss_legendre(n + 4);
    let mut s = DMatrix::zeros(nodes.len(), n);
    for (r, (&x, &w)) in nodes.iter().zip(&weights).enumerate() {
        let tau = 0.5 * (x + 1.0);
        let vals = shifted_legendre(n, 4, tau);
        for k in 0..n {
            s[(r, k)] = (0.5 * w).sqrt() * vals[k];
        }
    }
    let mut b = DMatrix::zeros(10, n);
    let mut rhs = DVector::zeros(10);
    for p in 0..5 {
        let scale = duration.powi(p as i32);
        for (row, tau, v) in [(p, 0.0, start[p]), (5 + p, 1.0, end[p])] {
            let vals = shifted_legendre(n, p, tau);
            for k in 0..n {
                b[(row, k)] = vals[k];
            }
            rhs[row] = v * scale;
        }
    }
    let mut kkt = DMatrix::zeros(n + 10, n + 10);
    kkt.view_mut((0, 0), (n, n)).copy_from(&(2.0 * s.transpose() * &s));
    kkt.view_mut((0, n), (n, 10)).copy_from(&b.transpose());
    kkt.view_mut((n, 0), (10, n)).copy_from(&b);
    let mut r = DVector::zeros(n + 10);
    r.rows_mut(n, 10).copy_from(&rhs);
    let sol = kkt.full_piv_lu().solve(&r).expect("oracle KKT singular");
    let c = sol.rows(0, n);
    (&s * c).norm_squared() / duration.powi(7)
}

/// Simpson-rule integral of `f` over `[a, b]` with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Cheapest assignment by enumerating every permutation, costs summed in row order.
pub fn brute_force_assignment(costs: &DMatrix<f64>) -> (f64, Vec<usize>) {
    fn walk(costs: &DMatrix<f64>, perm: &mut Vec<usize>, used: &mut Vec<bool>, best: &mut (f64, Vec<usize>)) {
        let n = costs.nrows();
        if perm.len() == n {
            let total = perm.iter().enumerate().fold(0.0, |acc, (i, &j)| acc + costs[(i, j)]);
            if total < best.0 {
                *best = (total, perm.clone());
            }
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                walk(costs, perm, used, best);
                perm.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    walk(costs, &mut Vec::new(), &mut vec![false; costs.nrows()], &mut best);
    best
}

/// Joint least-squares fit of `c + sum_m A_m sin(w_m t) + B_m cos(w_m t)`;
/// returns `(A_m, B_m)` per frequency.
pub fn fit_modes(times: &[f64], values: &[f64], freqs: &[f64]) -> Vec<(f64, f64)> {
    let cols = 2 * freqs.len() + 1;
    let mut m = DMatrix::zeros(times.len(), cols);
    for (r, &t) in times.iter().enumerate() {
        for (j, &w) in freqs.iter().enumerate() {
            m[(r, 2 * j)] = (w * t).sin();
            m[(r, 2 * j + 1)] = (w * t).cos();
        }
        m[(r, cols - 1)] = 1.0;
    }
    let y = DVector::from_column_slice(values);
    let sol = m.svd(true, true).solve(&y, 1e-12).expect("fit solves");
    (0..freqs.len()).map(|j| (sol[2 * j], sol[2 * j + 1])).collect()
}
