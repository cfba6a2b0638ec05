//! Plan artifacts written to and read back from an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use choreo_core::primitives::{DroneRole, MotionPrimitive};
use choreo_core::sim::{DroneSchedule, Segment};
use choreo_core::sync::CompensatedPrimitive;
use choreo_core::trajopt::PolynomialTrajectory;
use choreo_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::error::{parse_json, CliError, CliResult};
use crate::schema::{Limits, Volume};

pub const PLAN_SCHEMA: &str = "choreo/plan-v1";
pub const TRAJECTORY_SCHEMA: &str = "choreo/trajectory-v1";
pub const REPORT_SCHEMA: &str = "choreo/report-v1";

pub const PLAN_FILE: &str = "plan.json";
pub const REPORT_FILE: &str = "report.json";
pub const LOG_FILE: &str = "resolution.log";

pub fn drone_file(n: usize) -> String {
    format!("drone_{n:02}.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlanSegment {
    Primitive {
        segment: usize,
        t0: f64,
        tf: f64,
    },
    Transition {
        segment: usize,
        t_s: f64,
        t_e: f64,
        /// Outgoing role `i` flies to incoming role `assignment[i]`.
        assignment: Vec<usize>,
        assignment_cost: f64,
        feasible: bool,
    },
}

/// Show-level summary; per-drone motion lives in the drone files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub schema: String,
    pub drones: usize,
    pub volume: Volume,
    pub ellipsoid: [f64; 3],
    pub limits: Limits,
    #[serde(default)]
    pub response_table: Option<String>,
    pub compensated: bool,
    pub feasible: bool,
    pub segments: Vec<PlanSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierPiece {
    pub segment: usize,
    pub t0: f64,
    pub tf: f64,
    /// Role within the primitive.
    pub role: usize,
    pub r: [f64; 3],
    pub c: [f64; 3],
    pub frequencies: Vec<f64>,
    pub a: Vec<[f64; 3]>,
    pub b: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialPiece {
    pub segment: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Per-axis coefficients in powers of `t - t_start`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    Fourier(FourierPiece),
    Polynomial(PolynomialPiece),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneFile {
    pub schema: String,
    pub drone: usize,
    pub pieces: Vec<Piece>,
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl FourierPiece {
    /// One role of `mp`, flown over `[t0, tf]`.
    pub fn from_role(segment: usize, mp: &MotionPrimitive, role: usize, t0: f64, tf: f64) -> Self {
        let d = &mp.drones()[role];
        Self {
            segment,
            t0,
            tf,
            role,
            r: arr(&d.r),
            c: arr(&d.c),
            frequencies: mp.frequencies().to_vec(),
            a: d.a.iter().map(arr).collect(),
            b: d.b.iter().map(arr).collect(),
            kappa: None,
            phi: None,
        }
    }

    /// Single-drone primitive holding this piece's coefficients.
    pub fn primitive(&self) -> CliResult<MotionPrimitive> {
        let role = DroneRole {
            r: Vec3::from(self.r),
            c: Vec3::from(self.c),
            a: self.a.iter().map(|v| Vec3::from(*v)).collect(),
            b: self.b.iter().map(|v| Vec3::from(*v)).collect(),
        };
        Ok(MotionPrimitive::new(self.t0, self.tf, self.frequencies.clone(), vec![role])?)
    }

    /// The compensated reference, if factors are recorded.
    pub fn compensated(&self) -> CliResult<Option<CompensatedPrimitive>> {
        match (&self.kappa, &self.phi) {
            (None, None) => Ok(None),
            (Some(k), Some(p)) => {
                let kappa = vec![k.iter().map(|v| Vec3::from(*v)).collect()];
                let phi = vec![p.iter().map(|v| Vec3::from(*v)).collect()];
                Ok(Some(CompensatedPrimitive::with_factors(self.primitive()?, kappa, phi)?))
            }
            _ => Err(CliError::Schema(format!("segment {}: kappa and phi must be given together", self.segment))),
        }
    }
}

impl PolynomialPiece {
    pub fn from_trajectory(segment: usize, traj: &PolynomialTrajectory) -> Self {
        let [x, y, z] = traj.coeffs().clone();
        Self { segment, t_start: traj.t_start(), t_end: traj.t_end(), x, y, z }
    }

    pub fn trajectory(&self) -> CliResult<PolynomialTrajectory> {
        Ok(PolynomialTrajectory::new(self.t_start, self.t_end, [self.x.clone(), self.y.clone(), self.z.clone()])?)
    }
}

impl DroneFile {
    /// Schedule for the simulator; compensated pieces command their reference.
    pub fn schedule(&self) -> CliResult<DroneSchedule> {
        let mut segments = Vec::with_capacity(self.pieces.len());
        for piece in &self.pieces {
            segments.push(match piece {
                Piece::Fourier(f) => match f.compensated()? {
                    Some(cp) => Segment::compensated(&cp, 0),
                    None => Segment::primitive(&f.primitive()?, 0),
                },
                Piece::Polynomial(p) => Segment::transition(&p.trajectory()?),
            });
        }
        Ok(DroneSchedule::new(segments)?)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path.display(), e))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))
}

/// Plan summary and every drone file of a plan directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanArtifacts {
    pub plan: PlanFile,
    pub drones: Vec<DroneFile>,
}

impl PlanArtifacts {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let plan_path = dir.join(PLAN_FILE);
        let plan: PlanFile = parse_json(&read_file(&plan_path)?, &plan_path.display().to_string())?;
        if plan.schema != PLAN_SCHEMA {
            return Err(CliError::Schema(format!(
                "{}: expected schema \"{PLAN_SCHEMA}\", found \"{}\"",
                plan_path.display(),
                plan.schema
            )));
        }
        if plan.drones == 0 {
            return Err(CliError::Schema(format!("{}: plan has no drones", plan_path.display())));
        }
        let mut drones = Vec::with_capacity(plan.drones);
        for n in 0..plan.drones {
            let path = dir.join(drone_file(n));
            let file: DroneFile = parse_json(&read_file(&path)?, &path.display().to_string())?;
            if file.schema != TRAJECTORY_SCHEMA || file.drone != n {
                return Err(CliError::Schema(format!(
                    "{}: expected schema \"{TRAJECTORY_SCHEMA}\" for drone {n}",
                    path.display()
                )));
            }
            drones.push(file);
        }
        Ok(Self { plan, drones })
    }

    /// Writes `plan.json` and the drone files; returns the paths written.
    pub fn write(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        let mut written = Vec::new();
        let path = dir.join(PLAN_FILE);
        write_file(&path, &to_json(&self.plan))?;
        written.push(path);
        for d in &self.drones {
            let path = dir.join(drone_file(d.drone));
            write_file(&path, &to_json(d))?;
            written.push(path);
        }
        Ok(written)
    }
}
