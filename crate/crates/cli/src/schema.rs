//! Choreography input files.
//!
//! A show is an alternating list of primitive and transition segments that
//! starts and ends with a primitive:
//!
//! ```json
//! {
//!   "schema": "choreo/show-v1",
//!   "drones": 1,
//!   "volume": { "min": [0, 0, 0], "max": [2, 2, 2] },
//!   "segments": [
//!     { "primitive": { "t0": 0, "tf": 3, "hover": { "positions": [[1, 1, 1]] } } }
//!   ]
//! }
//! ```

use std::path::{Path, PathBuf};

use choreo_core::assignment::CostMode;
use choreo_core::collision::{CollisionEllipsoid, DeviationWeight};
use choreo_core::primitives::{
    helix_on_cone, tilt_rotation, Cone, DroneRole, MotionPrimitive, RotationSpec, WaveMode, WaveSpec,
};
use choreo_core::trajopt::{StateBounds, DEFAULT_DEGREE, DEFAULT_STEPS};
use choreo_core::Vec3;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{parse_json, CliError, CliResult};

pub const SHOW_SCHEMA: &str = "choreo/show-v1";

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::from(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Volume {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default = "default_vel")]
    pub vel_max: [f64; 3],
    #[serde(default = "default_acc")]
    pub acc_norm_max: f64,
    #[serde(default = "default_jerk")]
    pub jerk_max: [f64; 3],
}

fn default_vel() -> [f64; 3] {
    [4.0; 3]
}
fn default_acc() -> f64 {
    15.0
}
fn default_jerk() -> [f64; 3] {
    [80.0; 3]
}

impl Default for Limits {
    fn default() -> Self {
        Self { vel_max: default_vel(), acc_norm_max: default_acc(), jerk_max: default_jerk() }
    }
}

fn default_ellipsoid() -> [f64; 3] {
    [0.14, 0.14, 0.35]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoreographyFile {
    pub schema: String,
    pub drones: usize,
    pub volume: Volume,
    /// Semi-axes of the collision ellipsoid, meters.
    #[serde(default = "default_ellipsoid")]
    pub ellipsoid: [f64; 3],
    #[serde(default)]
    pub limits: Limits,
    /// CSV response table, relative to the show file.
    #[serde(default)]
    pub response_table: Option<String>,
    pub segments: Vec<SegmentInput>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentInput {
    Primitive(PrimitiveInput),
    Transition(TransitionInput),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveInput {
    pub t0: f64,
    pub tf: f64,
    #[serde(default)]
    pub wave: Option<WaveInput>,
    #[serde(default)]
    pub rotation: Option<RotationInput>,
    #[serde(default)]
    pub hover: Option<HoverInput>,
    #[serde(default)]
    pub raw: Option<RawInput>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeInput {
    pub mu1: u32,
    pub mu2: u32,
    pub a_amp: [f64; 3],
    pub b_amp: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveInput {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub c_speed: f64,
    #[serde(default)]
    pub origin: [f64; 3],
    pub modes: Vec<ModeInput>,
    /// Explicit surface sites, one per drone.
    #[serde(default)]
    pub sites: Option<Vec<[f64; 2]>>,
    /// Uniform interior grid `[columns, rows]`, filled row by row.
    #[serde(default)]
    pub grid: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelixInput {
    pub base_radius: f64,
    pub height: f64,
    /// Base height in the body frame; defaults to centring the cone.
    #[serde(default)]
    pub base_z: Option<f64>,
    #[serde(default = "default_coverage")]
    pub coverage: f64,
    pub turns: f64,
}

fn default_coverage() -> f64 {
    0.8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationInput {
    pub center: [f64; 3],
    pub omega_z: f64,
    #[serde(default)]
    pub tilt: f64,
    #[serde(default)]
    pub heading: f64,
    /// Body-to-world rotation as rows; overrides `tilt` and `heading`.
    #[serde(default)]
    pub orientation: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub body_points: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub helix: Option<HelixInput>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoverInput {
    pub positions: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRole {
    pub r: [f64; 3],
    pub c: [f64; 3],
    pub a: Vec<[f64; 3]>,
    pub b: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInput {
    pub frequencies: Vec<f64>,
    pub drones: Vec<RawRole>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostInput {
    #[default]
    MinSnap,
    Euclidean,
}

impl From<CostInput> for CostMode {
    fn from(c: CostInput) -> Self {
        match c {
            CostInput::MinSnap => CostMode::MinSnap,
            CostInput::Euclidean => CostMode::Euclidean,
        }
    }
}

fn default_weight() -> [f64; 3] {
    [1.0; 3]
}
fn default_k0() -> usize {
    DEFAULT_STEPS
}
fn default_degree() -> usize {
    DEFAULT_DEGREE
}
fn default_max_iters() -> usize {
    10
}
fn default_eps() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionInput {
    pub t_s: f64,
    pub t_e: f64,
    /// Fixed goal assignment: outgoing role `i` flies to incoming role `assignment[i]`.
    #[serde(default)]
    pub assignment: Option<Vec<usize>>,
    #[serde(default = "default_weight")]
    pub weight: [f64; 3],
    #[serde(default = "default_k0")]
    pub k0: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_eps")]
    pub eps1: f64,
    #[serde(default = "default_eps")]
    pub eps2: f64,
    #[serde(default)]
    pub cost: CostInput,
}

/// Planner knobs that override every transition of a show.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub degree: Option<usize>,
    pub k0: Option<usize>,
    pub max_iters: Option<usize>,
}

/// A transition with its settings resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSettings {
    pub t_s: f64,
    pub t_e: f64,
    pub assignment: Option<Vec<usize>>,
    pub weight: DeviationWeight,
    pub k0: usize,
    pub degree: usize,
    pub max_iters: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub cost: CostInput,
}

/// A validated show.
#[derive(Debug, Clone)]
pub struct Show {
    pub drones: usize,
    pub volume: Volume,
    pub ellipsoid_axes: [f64; 3],
    pub ellipsoid: CollisionEllipsoid,
    pub limits: Limits,
    pub response_table: Option<PathBuf>,
    /// Primitives in show order, each over its full declared window.
    pub primitives: Vec<MotionPrimitive>,
    /// `transitions[i]` joins `primitives[i]` and `primitives[i + 1]`.
    pub transitions: Vec<TransitionSettings>,
}

impl Show {
    pub fn bounds(&self, steps: usize) -> StateBounds {
        StateBounds {
            pos_min: v3(self.volume.min),
            pos_max: v3(self.volume.max),
            vel_max: v3(self.limits.vel_max),
            acc_norm_max: self.limits.acc_norm_max,
            jerk_max: v3(self.limits.jerk_max),
            steps,
        }
    }

    /// Time span the `i`-th primitive is actually flown: from the end of the
    /// preceding transition to the start of the next one.
    pub fn flown_window(&self, i: usize) -> (f64, f64) {
        let mp = &self.primitives[i];
        let start = if i == 0 { mp.t0() } else { self.transitions[i - 1].t_e };
        let end = self.transitions.get(i).map_or(mp.tf(), |t| t.t_s);
        (start, end)
    }
}

/// Reads and validates a show file.
pub fn load_show(path: &Path, overrides: &Overrides) -> CliResult<Show> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let file: ChoreographyFile = parse_json(&text, &path.display().to_string())?;
    let base = path.parent().unwrap_or(Path::new("."));
    build_show(file, base, overrides)
}

fn schema_err(at: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Schema(format!("{at}: {msg}"))
}

/// Validates a parsed show; `base` resolves a relative table path.
pub fn build_show(file: ChoreographyFile, base: &Path, overrides: &Overrides) -> CliResult<Show> {
    if file.schema != SHOW_SCHEMA {
        return Err(schema_err("schema", format!("expected \"{SHOW_SCHEMA}\", found \"{}\"", file.schema)));
    }
    if file.drones == 0 {
        return Err(schema_err("drones", "fleet must have at least one drone"));
    }
    if (0..3).any(|i| !(file.volume.min[i] < file.volume.max[i])) {
        return Err(schema_err("volume", "every min must be below its max"));
    }
    let ellipsoid = CollisionEllipsoid::diagonal(v3(file.ellipsoid)).map_err(|e| schema_err("ellipsoid", e))?;
    let l = &file.limits;
    if l.vel_max.iter().chain(&l.jerk_max).chain([&l.acc_norm_max]).any(|v| !(*v > 0.0)) {
        return Err(schema_err("limits", "limits must be positive"));
    }
    if file.segments.is_empty() {
        return Err(schema_err("segments", "show has no segments"));
    }

    let mut primitives = Vec::new();
    let mut transitions = Vec::new();
    for (i, seg) in file.segments.iter().enumerate() {
        let at = format!("segments[{i}]");
        match (i % 2, seg) {
            (0, SegmentInput::Primitive(p)) => primitives.push(build_primitive(p, file.drones, &at)?),
            (1, SegmentInput::Transition(t)) => transitions.push(build_transition(t, file.drones, overrides, &at)?),
            (0, _) => return Err(schema_err(&at, "expected a primitive; segments alternate primitive, transition, primitive")),
            _ => return Err(schema_err(&at, "expected a transition; segments alternate primitive, transition, primitive")),
        }
    }
    if file.segments.len() % 2 == 0 {
        return Err(schema_err("segments", "show must end with a primitive"));
    }

    for (i, t) in transitions.iter().enumerate() {
        let at = format!("segments[{}]", 2 * i + 1);
        let (before, after) = (&primitives[i], &primitives[i + 1]);
        let gap_s = t.t_s - before.tf();
        if gap_s.abs() > t.eps1 {
            let kind = if gap_s < 0.0 { "overlaps" } else { "leaves a gap after" };
            return Err(schema_err(&at, format!(
                "t_s = {} {kind} the preceding primitive ending at {} (tolerance {})",
                t.t_s, before.tf(), t.eps1
            )));
        }
        let gap_e = after.t0() - t.t_e;
        if gap_e.abs() > t.eps2 {
            let kind = if gap_e < 0.0 { "overlaps" } else { "leaves a gap before" };
            return Err(schema_err(&at, format!(
                "t_e = {} {kind} the following primitive starting at {} (tolerance {})",
                t.t_e, after.t0(), t.eps2
            )));
        }
    }

    let response_table = file.response_table.as_ref().map(|p| base.join(p));
    let show = Show {
        drones: file.drones,
        volume: file.volume,
        ellipsoid_axes: file.ellipsoid,
        ellipsoid,
        limits: file.limits,
        response_table,
        primitives,
        transitions,
    };
    for i in 0..show.primitives.len() {
        let (a, b) = show.flown_window(i);
        if !(a < b) {
            return Err(schema_err(&format!("segments[{}]", 2 * i), "transitions leave no time to fly this primitive"));
        }
    }
    Ok(show)
}

fn build_transition(t: &TransitionInput, n: usize, o: &Overrides, at: &str) -> CliResult<TransitionSettings> {
    if !(t.t_s.is_finite() && t.t_e.is_finite() && t.t_s < t.t_e) {
        return Err(schema_err(at, format!("transition window [{}, {}] is empty", t.t_s, t.t_e)));
    }
    if !(t.eps1 >= 0.0 && t.eps2 >= 0.0) {
        return Err(schema_err(at, "eps1 and eps2 must be non-negative"));
    }
    if let Some(perm) = &t.assignment {
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&j| j >= n || std::mem::replace(&mut seen[j], true)) {
            return Err(schema_err(&format!("{at}.assignment"), format!("must be a permutation of 0..{n}")));
        }
    }
    let weight = DeviationWeight::new(v3(t.weight)).map_err(|e| schema_err(&format!("{at}.weight"), e))?;
    let k0 = o.k0.unwrap_or(t.k0);
    if k0 < 2 {
        return Err(schema_err(&format!("{at}.k0"), "need at least two constraint steps"));
    }
    Ok(TransitionSettings {
        t_s: t.t_s,
        t_e: t.t_e,
        assignment: t.assignment.clone(),
        weight,
        k0,
        degree: o.degree.unwrap_or(t.degree),
        max_iters: o.max_iters.unwrap_or(t.max_iters),
        eps1: t.eps1,
        eps2: t.eps2,
        cost: t.cost,
    })
}

fn grid_sites(spec: &WaveInput, [cols, rows]: [usize; 2], n: usize, at: &str) -> CliResult<Vec<[f64; 2]>> {
    if cols * rows < n {
        return Err(schema_err(at, format!("grid {cols} x {rows} has fewer than {n} sites")));
    }
    let dx = spec.a / (cols + 1) as f64;
    let dy = spec.b / (rows + 1) as f64;
    Ok((0..n).map(|i| [dx * (1 + i % cols) as f64, dy * (1 + i / cols) as f64]).collect())
}

fn build_primitive(p: &PrimitiveInput, n: usize, at: &str) -> CliResult<MotionPrimitive> {
    let given = [p.wave.is_some(), p.rotation.is_some(), p.hover.is_some(), p.raw.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(schema_err(at, "give exactly one of wave, rotation, hover or raw"));
    }
    let wrap = |field: &str| {
        let at = format!("{at}.{field}");
        move |e: choreo_core::Error| schema_err(&at, e)
    };
    let mp = if let Some(w) = &p.wave {
        let sites = match (&w.sites, w.grid) {
            (Some(s), None) => s.clone(),
            (None, Some(g)) => grid_sites(w, g, n, &format!("{at}.wave.grid"))?,
            _ => return Err(schema_err(&format!("{at}.wave"), "give exactly one of sites or grid")),
        };
        let spec = WaveSpec {
            a: w.a,
            b: w.b,
            h: w.h,
            c_speed: w.c_speed,
            modes: w
                .modes
                .iter()
                .map(|m| WaveMode { mu1: m.mu1, mu2: m.mu2, a_amp: v3(m.a_amp), b_amp: v3(m.b_amp) })
                .collect(),
            sites,
            origin: v3(w.origin),
        };
        MotionPrimitive::from_wave(&spec, p.t0, p.tf).map_err(wrap("wave"))?
    } else if let Some(r) = &p.rotation {
        let body_points = match (&r.body_points, &r.helix) {
            (Some(pts), None) => pts.iter().map(|q| v3(*q)).collect(),
            (None, Some(h)) => {
                let cone = Cone {
                    base_radius: h.base_radius,
                    height: h.height,
                    base_z: h.base_z.unwrap_or(-0.5 * h.height),
                    coverage: h.coverage,
                };
                helix_on_cone(n, &cone, h.turns).map_err(wrap("rotation.helix"))?
            }
            _ => return Err(schema_err(&format!("{at}.rotation"), "give exactly one of body_points or helix")),
        };
        let r_ibo = match r.orientation {
            Some(rows) => Matrix3::from_fn(|i, j| rows[i][j]),
            None => tilt_rotation(r.tilt, r.heading),
        };
        let spec = RotationSpec { rho_o: v3(r.center), r_ibo, omega_z: r.omega_z, body_points };
        MotionPrimitive::from_rotation(&spec, p.t0, p.tf).map_err(wrap("rotation"))?
    } else if let Some(h) = &p.hover {
        let pos: Vec<Vec3> = h.positions.iter().map(|q| v3(*q)).collect();
        MotionPrimitive::hover(p.t0, p.tf, &pos).map_err(wrap("hover"))?
    } else {
        let raw = p.raw.as_ref().expect("one shape given");
        let drones = raw
            .drones
            .iter()
            .map(|d| DroneRole {
                r: v3(d.r),
                c: v3(d.c),
                a: d.a.iter().map(|v| v3(*v)).collect(),
                b: d.b.iter().map(|v| v3(*v)).collect(),
            })
            .collect();
        MotionPrimitive::new(p.t0, p.tf, raw.frequencies.clone(), drones).map_err(wrap("raw"))?
    };
    if mp.len() != n {
        return Err(schema_err(at, format!("primitive has {} drone roles, fleet has {n}", mp.len())));
    }
    Ok(mp)
}
