//! Swarm motion primitives: per-drone truncated Fourier series.
//!
//! Every primitive is stored in the same canonical form. Each drone role carries
//! a centre `c` and one sine/cosine amplitude pair per frequency, so that the
//! desired position of role `n` is
//!
//! ```text
//! x(t) = c + sum_m ( a_m sin(w_m t) + b_m cos(w_m t) )
//! ```
//!
//! The wave and rigid-rotation constructors evaluate their parameter functions at
//! each drone's characteristic vector and produce this form.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::error::{argument, validation, Result};
use crate::{State, Vec3};

/// Highest supported time derivative (snap).
pub const MAX_ORDER: usize = 4;

/// One drone's role within a primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct DroneRole {
    /// Characteristic configuration vector.
    pub r: Vec3,
    /// Centre of oscillation.
    pub c: Vec3,
    /// Sine amplitudes, one per frequency.
    pub a: Vec<Vec3>,
    /// Cosine amplitudes, one per frequency.
    pub b: Vec<Vec3>,
}

impl DroneRole {
    /// A role that holds `position` (no oscillating terms).
    pub fn hover(position: Vec3, modes: usize) -> Self {
        Self {
            r: position,
            c: position,
            a: vec![Vec3::zeros(); modes],
            b: vec![Vec3::zeros(); modes],
        }
    }
}

/// A time-bounded periodic motion pattern for the whole swarm.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPrimitive {
    t0: f64,
    tf: f64,
    frequencies: Vec<f64>,
    drones: Vec<DroneRole>,
}

impl MotionPrimitive {
    /// Raw constructor from per-drone coefficients.
    pub fn new(t0: f64, tf: f64, frequencies: Vec<f64>, drones: Vec<DroneRole>) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && t0 < tf) {
            return Err(validation(format!("primitive window [{t0}, {tf}] is empty")));
        }
        if drones.is_empty() {
            return Err(validation("primitive has no drones"));
        }
        if let Some(w) = frequencies.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(validation(format!("frequency {w} must be finite and non-negative")));
        }
        let m = frequencies.len();
        for (n, d) in drones.iter().enumerate() {
            if d.a.len() != m || d.b.len() != m {
                return Err(validation(format!(
                    "drone {n} carries {}/{} amplitude terms, expected {m}",
                    d.a.len(),
                    d.b.len()
                )));
            }
            let finite = d.r.iter().chain(d.c.iter()).all(|v| v.is_finite())
                && d.a.iter().chain(d.b.iter()).all(|v| v.iter().all(|x| x.is_finite()));
            if !finite {
                return Err(validation(format!("drone {n} has non-finite coefficients")));
            }
        }
        for i in 0..drones.len() {
            for j in 0..i {
                if drones[i].r == drones[j].r {
                    return Err(validation(format!(
                        "drones {j} and {i} share the characteristic vector {:?}",
                        drones[i].r.as_slice()
                    )));
                }
            }
        }
        Ok(Self { t0, tf, frequencies, drones })
    }

    /// Every drone hovers at its given position.
    pub fn hover(t0: f64, tf: f64, positions: &[Vec3]) -> Result<Self> {
        let drones = positions.iter().map(|p| DroneRole::hover(*p, 0)).collect();
        Self::new(t0, tf, Vec::new(), drones)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn drones(&self) -> &[DroneRole] {
        &self.drones
    }

    /// Number of drone roles.
    pub fn len(&self) -> usize {
        self.drones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drones.is_empty()
    }

    /// Same coefficients over a different time window.
    pub fn with_window(&self, t0: f64, tf: f64) -> Result<Self> {
        Self::new(t0, tf, self.frequencies.clone(), self.drones.clone())
    }

    /// `order`-th time derivative of role `n` at time `t` within `[t0, tf]`.
    pub fn evaluate(&self, n: usize, t: f64, order: usize) -> Result<Vec3> {
        if !(self.t0..=self.tf).contains(&t) {
            return Err(argument(format!(
                "time {t} outside primitive window [{}, {}]",
                self.t0, self.tf
            )));
        }
        self.sample(n, t, order)
    }

    /// Like [`evaluate`](Self::evaluate) but without the time-window check.
    ///
    /// The series is defined for all `t`; this is used where boundary times may
    /// sit within a tolerance outside the window.
    pub fn sample(&self, n: usize, t: f64, order: usize) -> Result<Vec3> {
        let drone = self
            .drones
            .get(n)
            .ok_or_else(|| argument(format!("drone index {n} out of range (N = {})", self.len())))?;
        if order > MAX_ORDER {
            return Err(argument(format!("derivative order {order} exceeds {MAX_ORDER}")));
        }
        Ok(series_derivative(drone.c, &drone.a, &drone.b, &self.frequencies, t, order, None))
    }

    /// Position and derivatives 1..=4 of role `n` at `t` (unchecked window).
    pub fn state(&self, n: usize, t: f64) -> Result<State> {
        let mut s = [Vec3::zeros(); 5];
        for (order, slot) in s.iter_mut().enumerate() {
            *slot = self.sample(n, t, order)?;
        }
        Ok(s)
    }

    /// Build a primitive from a surface-wave description.
    pub fn from_wave(spec: &WaveSpec, t0: f64, tf: f64) -> Result<Self> {
        spec.validate()?;
        let frequencies = spec
            .modes
            .iter()
            .map(|m| dispersion(spec, m.mu1, m.mu2))
            .collect::<Result<Vec<_>>>()?;
        let drones = spec
            .sites
            .iter()
            .map(|&[s1, s2]| {
                let r = Vec3::new(s1, s2, spec.h);
                let (a, b) = spec
                    .modes
                    .iter()
                    .map(|m| {
                        let shape = spec.mode_shape(m, s1, s2);
                        (m.a_amp * shape, m.b_amp * shape)
                    })
                    .unzip();
                DroneRole { r, c: spec.origin + r, a, b }
            })
            .collect();
        Self::new(t0, tf, frequencies, drones)
    }

    /// Build a primitive from a rigid-body rotation about the body z axis.
    ///
    /// A negative rate spins clockwise; it is stored as a positive frequency
    /// with negated sine amplitudes.
    pub fn from_rotation(spec: &RotationSpec, t0: f64, tf: f64) -> Result<Self> {
        spec.validate()?;
        let sign = if spec.omega_z < 0.0 { -1.0 } else { 1.0 };
        let e1: Vec3 = spec.r_ibo.column(0).into();
        let e2: Vec3 = spec.r_ibo.column(1).into();
        let e3: Vec3 = spec.r_ibo.column(2).into();
        let drones = spec
            .body_points
            .iter()
            .map(|r| DroneRole {
                r: *r,
                c: spec.rho_o + e3 * r.z,
                a: vec![(e2 * r.x - e1 * r.y) * sign],
                b: vec![e1 * r.x + e2 * r.y],
            })
            .collect();
        Self::new(t0, tf, vec![spec.omega_z.abs()], drones)
    }
}

/// Derivative of `c + sum a sin(w t + phi) + b cos(w t + phi)`.
///
/// With `shift = Some(phi)` every mode's argument is advanced by its own phase
/// vector (per axis), otherwise the phase is zero.
pub(crate) fn series_derivative(
    c: Vec3,
    a: &[Vec3],
    b: &[Vec3],
    frequencies: &[f64],
    t: f64,
    order: usize,
    shift: Option<&[Vec3]>,
) -> Vec3 {
    let mut out = if order == 0 { c } else { Vec3::zeros() };
    for (m, &w) in frequencies.iter().enumerate() {
        let scale = w.powi(order as i32);
        if scale == 0.0 {
            continue;
        }
        for i in 0..3 {
            let arg = w * t + shift.map_or(0.0, |p| p[m][i]);
            let (s, co) = arg.sin_cos();
            let (ds, dc) = match order % 4 {
                0 => (a[m][i] * s, b[m][i] * co),
                1 => (a[m][i] * co, -b[m][i] * s),
                2 => (-a[m][i] * s, -b[m][i] * co),
                _ => (-a[m][i] * co, b[m][i] * s),
            };
            out[i] += scale * (ds + dc);
        }
    }
    out
}

/// One standing-wave mode on the rectangular surface.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveMode {
    pub mu1: u32,
    pub mu2: u32,
    /// Sine amplitude vector.
    pub a_amp: Vec3,
    /// Cosine amplitude vector.
    pub b_amp: Vec3,
}

/// Wave on a bounded elastic surface `[0, a] x [0, b]` at height `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpec {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub c_speed: f64,
    pub modes: Vec<WaveMode>,
    /// Surface coordinates `(s1, s2)` of each drone.
    pub sites: Vec<[f64; 2]>,
    /// World-frame offset added to every equilibrium point.
    pub origin: Vec3,
}

impl WaveSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.c_speed > 0.0) {
            return Err(validation("wave extents and propagation speed must be positive"));
        }
        if !(self.h.is_finite() && self.origin.iter().all(|v| v.is_finite())) {
            return Err(validation("wave height and origin must be finite"));
        }
        if let Some(m) = self.modes.iter().find(|m| m.mu1 == 0 || m.mu2 == 0) {
            return Err(validation(format!("mode indices ({}, {}) must be >= 1", m.mu1, m.mu2)));
        }
        for (n, &[s1, s2]) in self.sites.iter().enumerate() {
            if !((0.0..=self.a).contains(&s1) && (0.0..=self.b).contains(&s2)) {
                return Err(validation(format!(
                    "site {n} = ({s1}, {s2}) outside [0, {}] x [0, {}]",
                    self.a, self.b
                )));
            }
        }
        Ok(())
    }

    /// Spatial factor `sin(mu1 pi s1 / a) sin(mu2 pi s2 / b)`.
    pub fn mode_shape(&self, mode: &WaveMode, s1: f64, s2: f64) -> f64 {
        (mode.mu1 as f64 * PI * s1 / self.a).sin() * (mode.mu2 as f64 * PI * s2 / self.b).sin()
    }
}

/// Temporal frequency of mode `(mu1, mu2)` from the wave dispersion relation.
pub fn dispersion(spec: &WaveSpec, mu1: u32, mu2: u32) -> Result<f64> {
    if mu1 == 0 || mu2 == 0 {
        return Err(argument("mode indices must be >= 1"));
    }
    if !(spec.a > 0.0 && spec.b > 0.0 && spec.c_speed > 0.0) {
        return Err(argument("wave extents and speed must be positive"));
    }
    let k1 = mu1 as f64 / spec.a;
    let k2 = mu2 as f64 / spec.b;
    Ok(spec.c_speed * PI * (k1 * k1 + k2 * k2).sqrt())
}

/// Rigid body rotating at constant rate about the z axis of its initial frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSpec {
    pub rho_o: Vec3,
    /// Initial body orientation `[e1 e2 e3]` in the inertial frame.
    pub r_ibo: Matrix3<f64>,
    pub omega_z: f64,
    pub body_points: Vec<Vec3>,
}

impl RotationSpec {
    pub fn validate(&self) -> Result<()> {
        let r = &self.r_ibo;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        let det = r.determinant();
        if ortho > 1e-9 || (det - 1.0).abs() > 1e-9 {
            return Err(validation(format!(
                "orientation is not a proper rotation (orthogonality error {ortho:.3e}, det {det})"
            )));
        }
        if !self.omega_z.is_finite() || !self.rho_o.iter().all(|v| v.is_finite()) {
            return Err(validation("rotation rate and origin must be finite"));
        }
        Ok(())
    }
}

/// Rotation about the inertial x axis followed by one about z; used to tilt cones.
pub fn tilt_rotation(tilt: f64, heading: f64) -> Matrix3<f64> {
    let rz = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), heading);
    let rx = nalgebra::Rotation3::from_axis_angle(&Vec3::x_axis(), tilt);
    (rz * rx).into_inner()
}

/// Right circular cone in the body frame, axis along +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    pub base_radius: f64,
    /// Apex height above the base plane.
    pub height: f64,
    /// z coordinate of the base plane.
    pub base_z: f64,
    /// Fraction of the height covered by the helix, in `(0, 1]`.
    pub coverage: f64,
}

impl Cone {
    /// Radius of the lateral surface at body height `z`.
    pub fn radius_at(&self, z: f64) -> f64 {
        self.base_radius * (1.0 - (z - self.base_z) / self.height)
    }
}

/// Points on a helix wound `turns` times around the lateral surface of `cone`,
/// starting on the base circle and evenly spaced in the helix parameter.
pub fn helix_on_cone(n_drones: usize, cone: &Cone, turns: f64) -> Result<Vec<Vec3>> {
    if n_drones == 0 {
        return Err(argument("helix needs at least one drone"));
    }
    if !(cone.height.abs() > 1e-12 && cone.height.is_finite()) {
        return Err(validation("degenerate cone: zero height"));
    }
    if !(cone.base_radius > 0.0) || !(cone.coverage > 0.0 && cone.coverage <= 1.0) {
        return Err(validation("cone needs a positive base radius and coverage in (0, 1]"));
    }
    let points = (0..n_drones)
        .map(|i| {
            let u = if n_drones == 1 { 0.0 } else { i as f64 / (n_drones - 1) as f64 };
            let z = cone.base_z + u * cone.coverage * cone.height;
            let rho = cone.radius_at(z);
            let theta = 2.0 * PI * turns * u;
            Vec3::new(rho * theta.cos(), rho * theta.sin(), z)
        })
        .collect();
    Ok(points)
}
