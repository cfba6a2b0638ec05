//! Frequency-response tables and amplitude/phase compensation of primitives.
//!
//! Each axis of the vehicle is treated as an independent linear system
//! `H_i(jw)`. A primitive whose reference is scaled by `1 / |H_i(jw_m)|` and
//! advanced by `-arg H_i(jw_m)` in every mode is tracked without attenuation or
//! lag once transients have decayed. Frequencies and the constant term are
//! never changed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{argument, validation, Error, Result};
use crate::primitives::{series_derivative, DroneRole, MotionPrimitive, MAX_ORDER};
use crate::Vec3;

pub const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// One measured point of a per-axis frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    pub omega: f64,
    pub magnitude: f64,
    pub phase: f64,
}

/// Result of a table query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub magnitude: f64,
    pub phase: f64,
    /// The query fell outside the tabulated range and was clamped.
    pub extrapolated: bool,
}

/// Per-axis tabulated response, sorted by frequency with unwrapped phase.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponseTable {
    axes: [Vec<ResponsePoint>; 3],
}

/// Remove jumps larger than pi between consecutive phases.
pub fn unwrap_phases(points: &mut [ResponsePoint]) {
    for i in 1..points.len() {
        let prev = points[i - 1].phase;
        let mut p = points[i].phase;
        while p - prev > PI {
            p -= 2.0 * PI;
        }
        while p - prev < -PI {
            p += 2.0 * PI;
        }
        points[i].phase = p;
    }
}

impl FrequencyResponseTable {
    /// Builds a table; phases are unwrapped along frequency.
    pub fn new(mut axes: [Vec<ResponsePoint>; 3]) -> Result<Self> {
        for (axis, pts) in axes.iter_mut().enumerate() {
            let name = AXIS_NAMES[axis];
            if pts.is_empty() {
                return Err(validation(format!("axis {name} has no entries")));
            }
            for w in pts.windows(2) {
                if !(w[1].omega > w[0].omega) {
                    return Err(validation(format!("axis {name}: frequencies must be strictly increasing")));
                }
            }
            for p in pts.iter() {
                if !(p.omega.is_finite() && p.omega >= 0.0) {
                    return Err(validation(format!("axis {name}: invalid frequency {}", p.omega)));
                }
                if !(p.magnitude.is_finite() && p.magnitude > 0.0) {
                    return Err(validation(format!("axis {name}: magnitude must be positive at {}", p.omega)));
                }
                if !p.phase.is_finite() {
                    return Err(validation(format!("axis {name}: non-finite phase at {}", p.omega)));
                }
            }
            unwrap_phases(pts);
        }
        Ok(Self { axes })
    }

    /// Unit magnitude and zero phase at every frequency.
    pub fn identity() -> Self {
        let pts = vec![
            ResponsePoint { omega: 0.0, magnitude: 1.0, phase: 0.0 },
            ResponsePoint { omega: 1e9, magnitude: 1.0, phase: 0.0 },
        ];
        Self { axes: [pts.clone(), pts.clone(), pts] }
    }

    pub fn axis(&self, axis: usize) -> &[ResponsePoint] {
        &self.axes[axis]
    }

    /// Linear interpolation in frequency, clamped to the end knots outside the range.
    pub fn lookup(&self, omega: f64, axis: usize) -> Result<Lookup> {
        let pts = self.axes.get(axis).ok_or_else(|| argument(format!("axis {axis} out of range")))?;
        let (first, last) = match (pts.first(), pts.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(validation("empty response table")),
        };
        let clamp = |p: &ResponsePoint| Lookup { magnitude: p.magnitude, phase: p.phase, extrapolated: true };
        if omega < first.omega {
            return Ok(clamp(first));
        }
        if omega > last.omega {
            return Ok(clamp(last));
        }
        let i = pts.partition_point(|p| p.omega <= omega).saturating_sub(1);
        let lo = &pts[i];
        let Some(hi) = pts.get(i + 1) else {
            return Ok(Lookup { magnitude: lo.magnitude, phase: lo.phase, extrapolated: false });
        };
        let s = (omega - lo.omega) / (hi.omega - lo.omega);
        Ok(Lookup {
            magnitude: lo.magnitude + s * (hi.magnitude - lo.magnitude),
            phase: lo.phase + s * (hi.phase - lo.phase),
            extrapolated: false,
        })
    }

    /// Writes `axis,omega_rad_s,magnitude,phase_rad` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Validation(format!("writing table: {e}"));
        w.write_record(["axis", "omega_rad_s", "magnitude", "phase_rad"]).map_err(io)?;
        for (axis, pts) in self.axes.iter().enumerate() {
            for p in pts {
                w.write_record([
                    AXIS_NAMES[axis].to_string(),
                    format!("{:?}", p.omega),
                    format!("{:?}", p.magnitude),
                    format!("{:?}", p.phase),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Validation(format!("writing table: {e}")))?;
        Ok(())
    }

    /// Parses a table; axes without rows are filled with the identity response
    /// and reported in the returned list.
    pub fn read_csv<R: Read>(input: R) -> Result<(Self, Vec<&'static str>)> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers().map_err(|e| validation(format!("table header: {e}")))?.clone();
        let expected = ["axis", "omega_rad_s", "magnitude", "phase_rad"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(validation(format!("table header must be {}", expected.join(","))));
        }
        let mut axes: [Vec<ResponsePoint>; 3] = Default::default();
        for (line, rec) in rdr.records().enumerate() {
            let line = line + 2;
            let rec = rec.map_err(|e| validation(format!("table line {line}: {e}")))?;
            let axis = AXIS_NAMES
                .iter()
                .position(|a| *a == &rec[0])
                .ok_or_else(|| validation(format!("table line {line}: unknown axis '{}'", &rec[0])))?;
            let num = |k: usize| -> Result<f64> {
                rec[k]
                    .parse::<f64>()
                    .map_err(|_| validation(format!("table line {line}: column {} is not a number", expected[k])))
            };
            axes[axis].push(ResponsePoint { omega: num(1)?, magnitude: num(2)?, phase: num(3)? });
        }
        let mut missing = Vec::new();
        let identity = Self::identity();
        for axis in 0..3 {
            if axes[axis].is_empty() {
                missing.push(AXIS_NAMES[axis]);
                axes[axis] = identity.axes[axis].clone();
            }
        }
        Ok((Self::new(axes)?, missing))
    }
}

/// Complex amplitude `A + iB` of `A sin(wt) + B cos(wt)` fitted by least squares
/// over the trailing whole periods, with a free offset.
fn phasor(series: &[f64], dt: f64, omega: f64, start: usize) -> Result<(f64, f64)> {
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (k, &v) in series.iter().enumerate().skip(start) {
        let t = k as f64 * dt;
        let (s, c) = (omega * t).sin_cos();
        let row = Vector3::new(s, c, 1.0);
        m += row * row.transpose();
        rhs += row * v;
    }
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Estimation("sinusoid fit is singular".into()))?;
    Ok((sol[0], sol[1]))
}

/// Amplitude ratio and phase shift of `response` relative to `reference` at `omega`.
///
/// Both series are sampled every `dt` from a common start. The fit uses the
/// largest whole number of periods at the end of the record, which must contain
/// at least three periods.
pub fn estimate_response(reference: &[f64], response: &[f64], dt: f64, omega: f64) -> Result<(f64, f64)> {
    if reference.len() != response.len() {
        return Err(argument("reference and response lengths differ"));
    }
    if !(dt > 0.0 && omega > 0.0) {
        return Err(argument("sample period and frequency must be positive"));
    }
    let period = 2.0 * PI / omega;
    let duration = reference.len() as f64 * dt;
    let periods = (duration / period).floor();
    if periods < 3.0 {
        return Err(Error::Estimation(format!(
            "record of {duration:.3} s holds fewer than three periods at {omega} rad/s"
        )));
    }
    let window = ((periods * period / dt).round() as usize).min(reference.len());
    let start = reference.len() - window;
    let (ra, rb) = phasor(reference, dt, omega, start)?;
    let (ya, yb) = phasor(response, dt, omega, start)?;
    let ref_amp = ra.hypot(rb);
    let energy = reference[start..].iter().map(|v| v * v).sum::<f64>() / window as f64;
    if !(ref_amp > 1e-9 * energy.sqrt().max(f64::MIN_POSITIVE)) || ref_amp == 0.0 {
        return Err(Error::Estimation(format!("reference has no component at {omega} rad/s")));
    }
    let magnitude = ya.hypot(yb) / ref_amp;
    // phase of (ya + i yb) / (ra + i rb)
    let phase = (yb * ra - ya * rb).atan2(ya * ra + yb * rb);
    Ok((magnitude, phase))
}

/// A primitive with per-mode, per-axis gain and phase advance applied.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatedPrimitive {
    base: MotionPrimitive,
    /// `kappa[n][m]`, per drone and mode, per axis
    kappa: Vec<Vec<Vec3>>,
    phi: Vec<Vec<Vec3>>,
    /// Mode frequencies that needed clamped table values.
    extrapolated: Vec<f64>,
    reference: MotionPrimitive,
}

impl CompensatedPrimitive {
    /// Applies explicit factors; `kappa` and `phi` are indexed `[drone][mode]`.
    pub fn with_factors(base: MotionPrimitive, kappa: Vec<Vec<Vec3>>, phi: Vec<Vec<Vec3>>) -> Result<Self> {
        let modes = base.frequencies().len();
        if kappa.len() != base.len() || phi.len() != base.len() {
            return Err(validation("one set of factors per drone is required"));
        }
        if kappa.iter().chain(&phi).any(|v| v.len() != modes) {
            return Err(validation("one factor per mode is required"));
        }
        if kappa.iter().flatten().any(|k| !k.iter().all(|v| v.is_finite() && *v > 0.0)) {
            return Err(validation("gain factors must be positive"));
        }
        if phi.iter().flatten().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(validation("phase factors must be finite"));
        }
        let drones = base
            .drones()
            .iter()
            .enumerate()
            .map(|(n, d)| {
                let mut role = DroneRole { r: d.r, c: d.c, a: Vec::with_capacity(modes), b: Vec::with_capacity(modes) };
                for m in 0..modes {
                    let (k, p) = (kappa[n][m], phi[n][m]);
                    let a = Vec3::from_fn(|i, _| k[i] * (d.a[m][i] * p[i].cos() - d.b[m][i] * p[i].sin()));
                    let b = Vec3::from_fn(|i, _| k[i] * (d.a[m][i] * p[i].sin() + d.b[m][i] * p[i].cos()));
                    role.a.push(a);
                    role.b.push(b);
                }
                role
            })
            .collect();
        let reference = MotionPrimitive::new(base.t0(), base.tf(), base.frequencies().to_vec(), drones)?;
        Ok(Self { base, kappa, phi, extrapolated: Vec::new(), reference })
    }

    pub fn base(&self) -> &MotionPrimitive {
        &self.base
    }

    pub fn kappa(&self) -> &[Vec<Vec3>] {
        &self.kappa
    }

    pub fn phi(&self) -> &[Vec<Vec3>] {
        &self.phi
    }

    pub fn extrapolated(&self) -> &[f64] {
        &self.extrapolated
    }

    /// `order`-th derivative of the compensated reference for drone `n`:
    /// `c + sum_m kappa (a sin(w t + phi) + b cos(w t + phi))`.
    pub fn evaluate(&self, n: usize, t: f64, order: usize) -> Result<Vec3> {
        let d = self
            .base
            .drones()
            .get(n)
            .ok_or_else(|| argument(format!("drone index {n} out of range")))?;
        if order > MAX_ORDER {
            return Err(argument(format!("derivative order {order} exceeds {MAX_ORDER}")));
        }
        let a: Vec<Vec3> = d.a.iter().zip(&self.kappa[n]).map(|(a, k)| a.component_mul(k)).collect();
        let b: Vec<Vec3> = d.b.iter().zip(&self.kappa[n]).map(|(b, k)| b.component_mul(k)).collect();
        Ok(series_derivative(d.c, &a, &b, self.base.frequencies(), t, order, Some(&self.phi[n])))
    }

    /// The compensated reference expressed as an ordinary primitive.
    pub fn to_primitive(&self) -> &MotionPrimitive {
        &self.reference
    }
}

/// Compensates every drone of `mp` with the same table.
pub fn compensate(mp: &MotionPrimitive, table: &FrequencyResponseTable) -> Result<CompensatedPrimitive> {
    compensate_fleet(mp, table, &BTreeMap::new())
}

/// Like [`compensate`], with per-drone tables overriding the fleet table.
pub fn compensate_fleet(
    mp: &MotionPrimitive,
    table: &FrequencyResponseTable,
    overrides: &BTreeMap<usize, FrequencyResponseTable>,
) -> Result<CompensatedPrimitive> {
    let mut extrapolated = Vec::new();
    let mut kappa = Vec::with_capacity(mp.len());
    let mut phi = Vec::with_capacity(mp.len());
    for n in 0..mp.len() {
        let t = overrides.get(&n).unwrap_or(table);
        let mut kn = Vec::new();
        let mut pn = Vec::new();
        for &w in mp.frequencies() {
            let mut k = Vec3::zeros();
            let mut p = Vec3::zeros();
            for axis in 0..3 {
                let l = t.lookup(w, axis)?;
                if !(l.magnitude > 0.0) {
                    return Err(validation(format!("zero response magnitude at {w} rad/s")));
                }
                if l.extrapolated && !extrapolated.contains(&w) {
                    extrapolated.push(w);
                }
                k[axis] = 1.0 / l.magnitude;
                p[axis] = -l.phase;
            }
            kn.push(k);
            pn.push(p);
        }
        kappa.push(kn);
        phi.push(pn);
    }
    let mut out = CompensatedPrimitive::with_factors(mp.clone(), kappa, phi)?;
    out.extrapolated = extrapolated;
    Ok(out)
}
