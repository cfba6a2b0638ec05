//! Randomized primitive specs and the invariants every primitive must keep.
//! Shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use choreo_core::primitives::{tilt_rotation, MotionPrimitive, RotationSpec, WaveMode, WaveSpec};
use choreo_core::Vec3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn vec_in(rng: &mut ChaCha8Rng, mag: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-mag..mag), rng.gen_range(-mag..mag), rng.gen_range(-mag..mag))
}

/// Wave with interior sites plus one site on each edge of the surface.
pub fn random_wave(rng: &mut ChaCha8Rng) -> WaveSpec {
    let a = rng.gen_range(1.0..6.0);
    let b = rng.gen_range(1.0..6.0);
    let modes = (0..rng.gen_range(1..=3))
        .map(|_| WaveMode {
            mu1: rng.gen_range(1..=5),
            mu2: rng.gen_range(1..=5),
            a_amp: vec_in(rng, 0.5),
            b_amp: vec_in(rng, 0.5),
        })
        .collect();
    let mut sites: Vec<[f64; 2]> = (0..rng.gen_range(1..6))
        .map(|_| [rng.gen_range(0.01 * a..0.99 * a), rng.gen_range(0.01 * b..0.99 * b)])
        .collect();
    sites.push([0.0, rng.gen_range(0.0..b)]);
    sites.push([a, rng.gen_range(0.0..b)]);
    sites.push([rng.gen_range(0.0..a), 0.0]);
    sites.push([rng.gen_range(0.0..a), b]);
    WaveSpec {
        a,
        b,
        h: rng.gen_range(0.5..2.0),
        c_speed: rng.gen_range(0.1..1.0),
        modes,
        sites,
        origin: vec_in(rng, 3.0),
    }
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> RotationSpec {
    let body_points = (0..rng.gen_range(2..8)).map(|_| vec_in(rng, 2.0)).collect();
    let omega = rng.gen_range(0.1..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    RotationSpec {
        rho_o: vec_in(rng, 3.0),
        r_ibo: tilt_rotation(rng.gen_range(0.0..PI / 2.0), rng.gen_range(0.0..2.0 * PI)),
        omega_z: omega,
        body_points,
    }
}

pub fn window(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let t0 = rng.gen_range(-5.0..5.0);
    (t0, t0 + rng.gen_range(1.0..10.0))
}

/// Edge sites never oscillate.
pub fn wave_boundary_is_still(spec: &WaveSpec, mp: &MotionPrimitive) -> Result<(), String> {
    let scale: f64 = spec.modes.iter().map(|m| m.a_amp.norm() + m.b_amp.norm()).sum::<f64>().max(1.0);
    for (n, [s1, s2]) in spec.sites.iter().enumerate() {
        let on_edge = *s1 == 0.0 || *s1 == spec.a || *s2 == 0.0 || *s2 == spec.b;
        if !on_edge {
            continue;
        }
        let d = &mp.drones()[n];
        let amp = d.a.iter().chain(&d.b).map(|v| v.norm()).fold(0.0, f64::max);
        if amp > 1e-12 * scale {
            return Err(format!("edge site {n} oscillates with amplitude {amp:e}"));
        }
    }
    Ok(())
}

/// Pairwise distances of a rigid rotation do not change over time.
pub fn rotation_is_isometric(mp: &MotionPrimitive, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let at = |t: f64| -> Vec<Vec3> { (0..mp.len()).map(|n| mp.sample(n, t, 0).unwrap()).collect() };
    let p0 = at(mp.t0());
    for _ in 0..5 {
        let p = at(rng.gen_range(mp.t0()..mp.tf()));
        for i in 0..p.len() {
            for j in 0..i {
                let d0 = (p0[i] - p0[j]).norm();
                let d = (p[i] - p[j]).norm();
                if (d - d0).abs() > 1e-9 {
                    return Err(format!("distance {i}-{j} drifted by {:e}", (d - d0).abs()));
                }
            }
        }
    }
    Ok(())
}

/// Analytic derivatives 1..4 agree with central differences of the order below.
pub fn derivatives_match_differences(mp: &MotionPrimitive, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let w_max = mp.frequencies().iter().copied().fold(0.0, f64::max);
    let h = 1e-4 / w_max.max(1.0);
    for _ in 0..3 {
        let t = rng.gen_range(mp.t0()..mp.tf());
        for n in 0..mp.len() {
            let d = &mp.drones()[n];
            let amp: f64 = d.a.iter().chain(&d.b).map(|v| v.norm()).sum();
            for order in 1..=4 {
                let exact = mp.sample(n, t, order).unwrap();
                let fd = (mp.sample(n, t + h, order - 1).unwrap() - mp.sample(n, t - h, order - 1).unwrap()) / (2.0 * h);
                // Relative to the size this derivative can reach.
                let scale = amp * w_max.powi(order as i32);
                // Still drones only see rounding noise, so bound it absolutely.
                let (err, tol) = if amp < 1e-9 {
                    ((exact - fd).norm(), 1e-8)
                } else {
                    ((exact - fd).norm() / scale.max(exact.norm()), 1e-6)
                };
                if err > tol {
                    return Err(format!("drone {n} order {order} at t={t}: error {err:e}"));
                }
            }
        }
    }
    Ok(())
}

/// Every single-frequency component returns to itself after one period.
pub fn closes_after_period(mp: &MotionPrimitive, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for (m, &w) in mp.frequencies().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let drones = mp
            .drones()
            .iter()
            .map(|d| {
                let mut d = d.clone();
                d.a = vec![d.a[m]];
                d.b = vec![d.b[m]];
                d
            })
            .collect();
        let single = MotionPrimitive::new(mp.t0(), mp.tf(), vec![w], drones).map_err(|e| e.to_string())?;
        let period = 2.0 * PI / w;
        let t = rng.gen_range(mp.t0()..mp.tf());
        for n in 0..single.len() {
            let gap = (single.sample(n, t + period, 0).unwrap() - single.sample(n, t, 0).unwrap()).norm();
            if gap > 1e-9 {
                return Err(format!("mode {m} of drone {n} misses closure by {gap:e}"));
            }
        }
    }
    Ok(())
}

/// Runs every invariant on one wave and one rotation drawn from `rng`.
pub fn check_all(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let spec = random_wave(rng);
    let (t0, tf) = window(rng);
    let wave = MotionPrimitive::from_wave(&spec, t0, tf).map_err(|e| e.to_string())?;
    wave_boundary_is_still(&spec, &wave)?;
    derivatives_match_differences(&wave, rng)?;
    closes_after_period(&wave, rng)?;
    let spec = random_rotation(rng);
    let (t0, tf) = window(rng);
    let rot = MotionPrimitive::from_rotation(&spec, t0, tf).map_err(|e| e.to_string())?;
    rotation_is_isometric(&rot, rng)?;
    derivatives_match_differences(&rot, rng)?;
    closes_after_period(&rot, rng)?;
    Ok(())
}
