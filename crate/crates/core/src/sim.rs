//! Per-axis linear vehicle model flying a choreography.
//!
//! Every axis is a unity-gain second-order system with an input delay,
//! `wn^2 / (s^2 + 2 zeta wn s + wn^2) e^(-s d)`, discretized exactly under a
//! zero-order hold. The delay is rounded to whole samples.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix2, Matrix3, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::CollisionEllipsoid;
use crate::error::{argument, validation, Error, Result};
use crate::primitives::MotionPrimitive;
use crate::sync::{estimate_response, CompensatedPrimitive, FrequencyResponseTable, ResponsePoint};
use crate::trajopt::PolynomialTrajectory;
use crate::Vec3;

/// One axis of the vehicle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisModel {
    /// rad/s; `f64::INFINITY` makes the axis a pure (delayed) pass-through.
    pub natural_frequency: f64,
    pub damping: f64,
    /// Input delay, seconds.
    pub delay: f64,
}

impl Default for AxisModel {
    fn default() -> Self {
        Self { natural_frequency: 7.0, damping: 0.7, delay: 0.1 }
    }
}

impl AxisModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.natural_frequency > 0.0 && self.damping > 0.0 && self.damping.is_finite()) {
            return Err(validation("natural frequency and damping must be positive"));
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(validation("delay must be non-negative"));
        }
        Ok(())
    }

    /// Continuous-time response `H(jw)` as (magnitude, phase).
    pub fn frequency_response(&self, omega: f64) -> (f64, f64) {
        let delay_phase = -omega * self.delay;
        if self.natural_frequency.is_infinite() {
            return (1.0, delay_phase);
        }
        let wn = self.natural_frequency;
        let re = wn * wn - omega * omega;
        let im = 2.0 * self.damping * wn * omega;
        let mag = wn * wn / re.hypot(im);
        (mag, -im.atan2(re) + delay_phase)
    }

    /// Time constant of the slowest decaying mode, seconds.
    pub fn settling_constant(&self) -> f64 {
        if self.natural_frequency.is_infinite() {
            0.0
        } else {
            1.0 / (self.damping * self.natural_frequency)
        }
    }

    /// Zero-order-hold transition matrix and input vector for period `dt`.
    fn discretize(&self, dt: f64) -> (Matrix2<f64>, Vector2<f64>) {
        let wn = self.natural_frequency;
        let m = Matrix3::new(
            0.0, 1.0, 0.0,
            -wn * wn, -2.0 * self.damping * wn, wn * wn,
            0.0, 0.0, 0.0,
        ) * dt;
        let e = m.exp();
        (
            Matrix2::new(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]),
            Vector2::new(e[(0, 2)], e[(1, 2)]),
        )
    }

    /// Response to a reference sampled every `dt`, starting at rest on the first sample.
    pub fn respond(&self, reference: &[f64], dt: f64) -> Vec<f64> {
        let Some(&first) = reference.first() else {
            return Vec::new();
        };
        let lag = (self.delay / dt).round() as usize;
        let input = |k: usize| if k >= lag { reference[k - lag] } else { first };
        if self.natural_frequency.is_infinite() {
            return (0..reference.len()).map(input).collect();
        }
        let (ad, bd) = self.discretize(dt);
        let mut x = Vector2::new(first, 0.0);
        let mut out = Vec::with_capacity(reference.len());
        for k in 0..reference.len() {
            out.push(x[0]);
            x = ad * x + bd * input(k);
        }
        out
    }
}

/// Vehicle model: one plant per axis and a sample period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleModel {
    pub axes: [AxisModel; 3],
    /// Sample period, seconds.
    pub dt: f64,
}

impl Default for VehicleModel {
    fn default() -> Self {
        Self { axes: [AxisModel::default(); 3], dt: 0.01 }
    }
}

impl VehicleModel {
    /// Perfect tracking: no dynamics and no delay.
    pub fn ideal(dt: f64) -> Self {
        let axis = AxisModel { natural_frequency: f64::INFINITY, damping: 1.0, delay: 0.0 };
        Self { axes: [axis; 3], dt }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(validation("sample period must be positive"));
        }
        self.axes.iter().try_for_each(AxisModel::validate)
    }

    /// Seconds discarded before steady-state metrics: the larger of 2 s and
    /// three time constants.
    pub fn transient(&self) -> f64 {
        let slowest = self.axes.iter().map(AxisModel::settling_constant).fold(0.0, f64::max);
        (3.0 * slowest).max(2.0)
    }
}

/// Response of `model` to a position reference sampled at `model.dt`.
pub fn step_response(model: &VehicleModel, reference: &[Vec3]) -> Result<Vec<Vec3>> {
    model.validate()?;
    let axes: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let r: Vec<f64> = reference.iter().map(|p| p[i]).collect();
            model.axes[i].respond(&r, model.dt)
        })
        .collect();
    Ok((0..reference.len()).map(|k| Vec3::new(axes[0][k], axes[1][k], axes[2][k])).collect())
}

/// Source of a segment's position.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Primitive { primitive: MotionPrimitive, role: usize },
    Transition(PolynomialTrajectory),
}

impl Source {
    fn position(&self, t: f64) -> Result<Vec3> {
        match self {
            Source::Primitive { primitive, role } => primitive.sample(*role, t, 0),
            Source::Transition(p) => Ok(p.sample(t, 0)),
        }
    }
}

/// One time slice of a drone's show: the desired path and the command sent.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub tf: f64,
    pub desired: Source,
    pub command: Source,
}

impl Segment {
    /// Uncompensated primitive segment.
    pub fn primitive(mp: &MotionPrimitive, role: usize) -> Self {
        let src = Source::Primitive { primitive: mp.clone(), role };
        Self { t0: mp.t0(), tf: mp.tf(), desired: src.clone(), command: src }
    }

    /// Primitive segment commanding the compensated reference.
    pub fn compensated(cp: &CompensatedPrimitive, role: usize) -> Self {
        let base = cp.base();
        Self {
            t0: base.t0(),
            tf: base.tf(),
            desired: Source::Primitive { primitive: base.clone(), role },
            command: Source::Primitive { primitive: cp.to_primitive().clone(), role },
        }
    }

    pub fn transition(traj: &PolynomialTrajectory) -> Self {
        let src = Source::Transition(traj.clone());
        Self { t0: traj.t_start(), tf: traj.t_end(), desired: src.clone(), command: src }
    }

    pub fn is_transition(&self) -> bool {
        matches!(self.desired, Source::Transition(_))
    }
}

/// Contiguous sequence of segments flown by one drone.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DroneSchedule {
    pub segments: Vec<Segment>,
}

const JOIN_TOL: f64 = 1e-9;

impl DroneSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let s = Self { segments };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(validation("schedule has no segments"));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.t0 < seg.tf) {
                return Err(validation(format!("segment {i} has an empty window")));
            }
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            let gap = w[1].t0 - w[0].tf;
            if gap.abs() > JOIN_TOL {
                let kind = if gap > 0.0 { "gap" } else { "overlap" };
                return Err(validation(format!(
                    "{kind} of {:.3e} s between segments {i} and {}",
                    gap.abs(),
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn t0(&self) -> f64 {
        self.segments[0].t0
    }

    pub fn tf(&self) -> f64 {
        self.segments[self.segments.len() - 1].tf
    }

    fn segment_at(&self, t: f64) -> usize {
        self.segments
            .iter()
            .position(|s| t < s.tf)
            .unwrap_or(self.segments.len() - 1)
    }
}

/// Tracking statistics of one segment, per drone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentMetrics {
    pub index: usize,
    pub transition: bool,
    pub t0: f64,
    pub tf: f64,
    /// Post-transient samples in the segment; zero leaves the errors at zero.
    pub samples: usize,
    pub rms_error: Vec<f64>,
    pub max_error: Vec<f64>,
}

/// Summary of a simulated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub dt: f64,
    pub transient_discarded: f64,
    pub rms_error: Vec<f64>,
    pub max_error: Vec<f64>,
    pub segments: Vec<SegmentMetrics>,
    /// Smallest `|E^-1 (p_n - p_m)|^2` between responses over the whole run.
    pub min_separation: f64,
    pub min_separation_time: f64,
}

/// Time series and metrics of every drone.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmRun {
    pub times: Vec<f64>,
    pub desired: Vec<Vec<Vec3>>,
    pub reference: Vec<Vec<Vec3>>,
    pub response: Vec<Vec<Vec3>>,
    pub metrics: RunMetrics,
}

impl SwarmRun {
    /// `t,drone,ref_x,ref_y,ref_z,resp_x,resp_y,resp_z` rows; `ref` is the
    /// commanded reference.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Validation(format!("writing run: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "drone", "ref_x", "ref_y", "ref_z", "resp_x", "resp_y", "resp_z"]).map_err(io)?;
        for (k, t) in self.times.iter().enumerate() {
            for n in 0..self.reference.len() {
                let r = self.reference[n][k];
                let y = self.response[n][k];
                w.write_record([
                    format!("{t:?}"),
                    n.to_string(),
                    format!("{:?}", r.x),
                    format!("{:?}", r.y),
                    format!("{:?}", r.z),
                    format!("{:?}", y.x),
                    format!("{:?}", y.y),
                    format!("{:?}", y.z),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Validation(format!("writing run: {e}")))?;
        Ok(())
    }
}

/// Simulate every drone's schedule.
///
/// `models` holds either one fleet-wide model or one per drone.
pub fn run_choreography(
    schedules: &[DroneSchedule],
    models: &[VehicleModel],
    ellipsoid: &CollisionEllipsoid,
) -> Result<SwarmRun> {
    if schedules.is_empty() {
        return Err(argument("empty fleet"));
    }
    if models.len() != 1 && models.len() != schedules.len() {
        return Err(argument("give one vehicle model or one per drone"));
    }
    let dt = models[0].dt;
    for m in models {
        m.validate()?;
        if m.dt != dt {
            return Err(validation("all vehicle models must share one sample period"));
        }
    }
    for (n, s) in schedules.iter().enumerate() {
        s.validate().map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("drone {n}: {msg}")),
            other => other,
        })?;
    }
    let first = &schedules[0];
    for (n, s) in schedules.iter().enumerate().skip(1) {
        let same = s.segments.len() == first.segments.len()
            && s.segments.iter().zip(&first.segments).all(|(a, b)| {
                (a.t0 - b.t0).abs() <= JOIN_TOL && (a.tf - b.tf).abs() <= JOIN_TOL
            });
        if !same {
            return Err(validation(format!("drone {n} does not share segment boundaries with drone 0")));
        }
    }
    let (t0, tf) = (first.t0(), first.tf());
    let count = ((tf - t0) / dt + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|k| t0 + k as f64 * dt).collect();
    let model_of = |n: usize| if models.len() == 1 { &models[0] } else { &models[n] };

    type Series = (Vec<Vec3>, Vec<Vec3>, Vec<Vec3>);
    let series: Vec<Series> = schedules
        .par_iter()
        .enumerate()
        .map(|(n, s)| -> Result<Series> {
            let mut desired = Vec::with_capacity(count);
            let mut command = Vec::with_capacity(count);
            for &t in &times {
                let seg = &s.segments[s.segment_at(t)];
                desired.push(seg.desired.position(t)?);
                command.push(seg.command.position(t)?);
            }
            let response = step_response(model_of(n), &command)?;
            Ok((desired, command, response))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut desired, mut reference, mut response) = (Vec::new(), Vec::new(), Vec::new());
    for (d, c, r) in series {
        desired.push(d);
        reference.push(c);
        response.push(r);
    }

    let transient = (0..schedules.len()).map(|n| model_of(n).transient()).fold(0.0, f64::max);
    let steady = |k: usize| times[k] - t0 >= transient - 1e-12;
    let errors: Vec<Vec<f64>> = (0..schedules.len())
        .map(|n| (0..count).map(|k| (response[n][k] - desired[n][k]).norm()).collect())
        .collect();
    let summarize = |n: usize, range: &mut dyn Iterator<Item = usize>| {
        let (mut sq, mut max, mut cnt) = (0.0, 0.0f64, 0usize);
        for k in range {
            let e = errors[n][k];
            sq += e * e;
            max = max.max(e);
            cnt += 1;
        }
        let rms = if cnt > 0 { (sq / cnt as f64).sqrt() } else { 0.0 };
        (rms, max, cnt)
    };
    let mut rms_error = Vec::new();
    let mut max_error = Vec::new();
    for n in 0..schedules.len() {
        let (rms, max, _) = summarize(n, &mut (0..count).filter(|&k| steady(k)));
        rms_error.push(rms);
        max_error.push(max);
    }
    let segments = first
        .segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let in_seg = |k: usize| {
                let t = times[k];
                steady(k) && first.segment_at(t) == i
            };
            let mut rms = Vec::new();
            let mut max = Vec::new();
            let mut samples = 0;
            for n in 0..schedules.len() {
                let (r, m, c) = summarize(n, &mut (0..count).filter(|&k| in_seg(k)));
                rms.push(r);
                max.push(m);
                samples = c;
            }
            SegmentMetrics {
                index: i,
                transition: seg.is_transition(),
                t0: seg.t0,
                tf: seg.tf,
                samples,
                rms_error: rms,
                max_error: max,
            }
        })
        .collect();

    let (mut min_separation, mut min_separation_time) = (f64::INFINITY, t0);
    for k in 0..count {
        for a in 0..schedules.len() {
            for b in 0..a {
                let s = ellipsoid.normalize(&(response[a][k] - response[b][k])).norm_squared();
                if s < min_separation {
                    min_separation = s;
                    min_separation_time = times[k];
                }
            }
        }
    }
    let metrics = RunMetrics {
        dt,
        transient_discarded: transient,
        rms_error,
        max_error,
        segments,
        min_separation,
        min_separation_time,
    };
    Ok(SwarmRun { times, desired, reference, response, metrics })
}

/// Frequency response of the simulated plant, measured with sinusoids of the
/// given amplitude at each frequency.
pub fn synthetic_bode(model: &VehicleModel, frequencies: &[f64], amplitude: f64) -> Result<FrequencyResponseTable> {
    model.validate()?;
    if frequencies.is_empty() {
        return Err(argument("no frequencies given"));
    }
    if frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) || frequencies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(argument("frequencies must be positive and strictly increasing"));
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(argument("excitation amplitude must be positive"));
    }
    let dt = model.dt;
    let axes: Vec<Vec<ResponsePoint>> = (0..3)
        .map(|axis| {
            frequencies
                .iter()
                .map(|&w| {
                    let period = 2.0 * PI / w;
                    let settle = model.axes[axis].settling_constant() * 12.0 + model.axes[axis].delay;
                    let skip = (settle / dt).ceil() as usize;
                    let measure = (8.0 * period).max(4.0);
                    let n = skip + (measure / dt).ceil() as usize;
                    let reference: Vec<f64> = (0..n).map(|k| amplitude * (w * k as f64 * dt).sin()).collect();
                    let response = model.axes[axis].respond(&reference, dt);
                    let (magnitude, phase) = estimate_response(&reference[skip..], &response[skip..], dt, w)?;
                    Ok(ResponsePoint { omega: w, magnitude, phase })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let axes: [Vec<ResponsePoint>; 3] = axes.try_into().expect("three axes");
    FrequencyResponseTable::new(axes)
}
