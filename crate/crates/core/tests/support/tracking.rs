//! Tracking experiments on a small wave and an independent per-mode fit.
#![allow(dead_code)]

use choreo_core::collision::CollisionEllipsoid;
use choreo_core::primitives::{MotionPrimitive, WaveMode, WaveSpec};
use choreo_core::sim::{run_choreography, DroneSchedule, Segment, SwarmRun, VehicleModel};
use choreo_core::sync::{compensate, FrequencyResponseTable};
use choreo_core::Vec3;

use super::oracle::fit_modes;

/// Four drones on a 2 x 2 m surface with modes near 1.1 and 1.8 rad/s.
pub fn two_mode_wave(t0: f64, tf: f64) -> MotionPrimitive {
    let spec = WaveSpec {
        a: 2.0,
        b: 2.0,
        h: 1.0,
        c_speed: 0.5,
        modes: vec![
            WaveMode { mu1: 1, mu2: 1, a_amp: Vec3::new(0.1, 0.05, 0.3), b_amp: Vec3::new(0.0, 0.08, 0.0) },
            WaveMode { mu1: 2, mu2: 1, a_amp: Vec3::new(0.0, 0.1, 0.1), b_amp: Vec3::new(0.12, 0.0, -0.1) },
        ],
        sites: vec![[0.6, 0.6], [1.4, 0.6], [0.7, 1.3], [1.3, 1.4]],
        origin: Vec3::new(1.0, 1.0, 0.0),
    };
    MotionPrimitive::from_wave(&spec, t0, tf).unwrap()
}

pub fn fly(mp: &MotionPrimitive, table: Option<&FrequencyResponseTable>, model: VehicleModel) -> SwarmRun {
    let cp = table.map(|t| compensate(mp, t).unwrap());
    let schedules: Vec<DroneSchedule> = (0..mp.len())
        .map(|n| {
            let seg = match &cp {
                Some(cp) => Segment::compensated(cp, n),
                None => Segment::primitive(mp, n),
            };
            DroneSchedule::new(vec![seg]).unwrap()
        })
        .collect();
    run_choreography(&schedules, &[model], &CollisionEllipsoid::small_quad()).unwrap()
}

/// Worst per-mode amplitude ratio error and phase error of the response
/// against the desired motion after `settle` seconds.
pub fn mode_errors(mp: &MotionPrimitive, run: &SwarmRun, settle: f64) -> (f64, f64) {
    let keep: Vec<usize> = (0..run.times.len()).filter(|&k| run.times[k] >= settle).collect();
    let t: Vec<f64> = keep.iter().map(|&k| run.times[k]).collect();
    let (mut amp_err, mut phase_err) = (0.0f64, 0.0f64);
    for n in 0..mp.len() {
        for axis in 0..3 {
            let want: Vec<f64> = keep.iter().map(|&k| run.desired[n][k][axis]).collect();
            let got: Vec<f64> = keep.iter().map(|&k| run.response[n][k][axis]).collect();
            let fw = fit_modes(&t, &want, mp.frequencies());
            let fg = fit_modes(&t, &got, mp.frequencies());
            for ((a, b), (c, d)) in fw.iter().zip(&fg) {
                let mag_w = a.hypot(*b);
                if mag_w < 1e-3 {
                    continue;
                }
                amp_err = amp_err.max((c.hypot(*d) / mag_w - 1.0).abs());
                // arg of (c + i d) / (a + i b)
                let dphi = (d * a - c * b).atan2(c * a + d * b);
                phase_err = phase_err.max(dphi.abs());
            }
        }
    }
    (amp_err, phase_err)
}
