//! Seeded random primitive pairs for feasibility sweeps.
//!
//! Recipe, per trial (numbers for the default 25 drones in 5 x 5 x 2 m):
//! - Each of the two primitives is drawn from the configured kinds with equal
//!   odds, then redrawn until the swarm stays 0.15 m inside the volume and its
//!   members keep a squared normalized separation of at least 3.
//! - Waves use a 4 x 4 m surface inset by 0.5 m, a near-square grid of
//!   interior sites, height in [0.9, 1.1] m and one or two modes with `mu` in
//!   1..=4. Horizontal amplitudes stay below a fifth of the site spacing and
//!   vertical ones below 0.25 m, split across the modes.
//! - Rotations place the drones on a helix wound on a cone with base radius in
//!   [1.4, 2.0] m and height in [1.2, 1.6] m, tilted by at most 30 degrees and
//!   spinning at 0.3 to 0.8 rad/s in either direction.
//! - Hovers hold the wave sites at a random height.
//! - The outgoing primitive lasts 4 to 8 s, the transition 4 to 6 s and the
//!   incoming primitive 4 to 8 s.

use std::f64::consts::PI;

use choreo_core::collision::CollisionEllipsoid;
use choreo_core::primitives::{
    helix_on_cone, tilt_rotation, Cone, MotionPrimitive, RotationSpec, WaveMode, WaveSpec,
};
use choreo_core::trajopt::StateBounds;
use choreo_core::{Error, Result, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const EDGE_MARGIN: f64 = 0.15;
/// Required squared normalized separation inside a primitive.
const INNER_SEPARATION: f64 = 3.0;
const MAX_DRAWS: usize = 500;
const SURFACE_INSET: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Wave,
    Rotation,
    Hover,
}

impl PrimitiveKind {
    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Wave => "wave",
            PrimitiveKind::Rotation => "rotation",
            PrimitiveKind::Hover => "hover",
        }
    }
}

/// Fleet, volume and envelope a sweep draws its scenarios in.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub drones: usize,
    pub volume_min: Vec3,
    pub volume_max: Vec3,
    pub ellipsoid: CollisionEllipsoid,
    pub kinds: Vec<PrimitiveKind>,
    pub vel_max: f64,
    pub acc_norm_max: f64,
    pub jerk_max: f64,
}

impl Default for Recipe {
    fn default() -> Self {
        Self {
            drones: 25,
            volume_min: Vec3::zeros(),
            volume_max: Vec3::new(5.0, 5.0, 2.0),
            ellipsoid: CollisionEllipsoid::small_quad(),
            kinds: vec![PrimitiveKind::Wave, PrimitiveKind::Rotation],
            vel_max: 4.0,
            acc_norm_max: 15.0,
            jerk_max: 80.0,
        }
    }
}

impl Recipe {
    pub fn validate(&self) -> Result<()> {
        if self.drones == 0 {
            return Err(Error::Argument("sweep needs at least one drone".into()));
        }
        if self.kinds.is_empty() {
            return Err(Error::Argument("sweep needs at least one primitive kind".into()));
        }
        let extent = self.volume_max - self.volume_min;
        if extent.iter().any(|v| !(*v > 2.0 * SURFACE_INSET)) {
            return Err(Error::Argument(format!("volume extents must exceed {} m", 2.0 * SURFACE_INSET)));
        }
        Ok(())
    }

    /// Kinematic limits with `steps` constraint points.
    pub fn bounds(&self, steps: usize) -> StateBounds {
        StateBounds {
            pos_min: self.volume_min,
            pos_max: self.volume_max,
            vel_max: Vec3::repeat(self.vel_max),
            acc_norm_max: self.acc_norm_max,
            jerk_max: Vec3::repeat(self.jerk_max),
            steps,
        }
    }

    fn extent(&self) -> Vec3 {
        self.volume_max - self.volume_min
    }

    fn inside(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.volume_min[i] + EDGE_MARGIN && p[i] <= self.volume_max[i] - EDGE_MARGIN)
    }

    /// Checks volume containment and internal separation over one window.
    fn acceptable(&self, mp: &MotionPrimitive) -> bool {
        let samples = 80;
        let span = mp.tf() - mp.t0();
        for k in 0..=samples {
            let t = mp.t0() + span * k as f64 / samples as f64;
            let pos: Vec<Vec3> = (0..mp.len()).map(|n| mp.sample(n, t, 0).expect("valid role")).collect();
            if pos.iter().any(|p| !self.inside(p)) {
                return false;
            }
            for a in 0..pos.len() {
                for b in 0..a {
                    if self.ellipsoid.normalize(&(pos[a] - pos[b])).norm_squared() < INNER_SEPARATION {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Grid columns and rows, and the surface-coordinate sites.
    fn sites(&self) -> ([f64; 2], Vec<[f64; 2]>, f64) {
        let cols = (self.drones as f64).sqrt().ceil() as usize;
        let rows = self.drones.div_ceil(cols);
        let ext = self.extent();
        let surface = [ext.x - 2.0 * SURFACE_INSET, ext.y - 2.0 * SURFACE_INSET];
        let dx = surface[0] / (cols + 1) as f64;
        let dy = surface[1] / (rows + 1) as f64;
        let sites = (0..self.drones)
            .map(|i| [dx * (1 + i % cols) as f64, dy * (1 + i / cols) as f64])
            .collect();
        (surface, sites, dx.min(dy))
    }

    fn wave(&self, rng: &mut ChaCha8Rng, t0: f64, tf: f64) -> Result<MotionPrimitive> {
        let (surface, sites, spacing) = self.sites();
        let zext = self.extent().z;
        let count = rng.gen_range(1..=2);
        let xy = 0.2 * spacing / count as f64;
        let z = 0.125 * zext / count as f64;
        let modes = (0..count)
            .map(|_| {
                let amp = |rng: &mut ChaCha8Rng| {
                    Vec3::new(rng.gen_range(-xy..xy), rng.gen_range(-xy..xy), rng.gen_range(-z..z))
                };
                WaveMode { mu1: rng.gen_range(1..=4), mu2: rng.gen_range(1..=4), a_amp: amp(rng), b_amp: amp(rng) }
            })
            .collect();
        let spec = WaveSpec {
            a: surface[0],
            b: surface[1],
            h: rng.gen_range(0.45 * zext..0.55 * zext),
            c_speed: rng.gen_range(0.2..0.5),
            modes,
            sites,
            origin: self.volume_min + Vec3::new(SURFACE_INSET, SURFACE_INSET, 0.0),
        };
        MotionPrimitive::from_wave(&spec, t0, tf)
    }

    fn hover(&self, rng: &mut ChaCha8Rng, t0: f64, tf: f64) -> Result<MotionPrimitive> {
        let (_, sites, _) = self.sites();
        let zext = self.extent().z;
        let h = rng.gen_range(0.4 * zext..0.6 * zext);
        let origin = self.volume_min + Vec3::new(SURFACE_INSET, SURFACE_INSET, h);
        let positions: Vec<Vec3> = sites.iter().map(|s| origin + Vec3::new(s[0], s[1], 0.0)).collect();
        MotionPrimitive::hover(t0, tf, &positions)
    }

    fn rotation(&self, rng: &mut ChaCha8Rng, t0: f64, tf: f64) -> Result<Option<MotionPrimitive>> {
        let ext = self.extent();
        let span = ext.x.min(ext.y);
        let radius = rng.gen_range(0.28 * span..0.4 * span);
        let height = rng.gen_range(0.6 * ext.z..0.8 * ext.z);
        let cone = Cone { base_radius: radius, height, base_z: -0.5 * height, coverage: 0.8 };
        let turns = rng.gen_range(1.6..2.4);
        let points = helix_on_cone(self.drones, &cone, turns)?;
        let omega = rng.gen_range(0.3..0.8) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let centre = 0.5 * (self.volume_min + self.volume_max);
        for _ in 0..40 {
            let tilt = rng.gen_range(0.0..(PI / 6.0));
            let heading = rng.gen_range(0.0..(2.0 * PI));
            let spec = RotationSpec {
                rho_o: centre,
                r_ibo: tilt_rotation(tilt, heading),
                omega_z: omega,
                body_points: points.clone(),
            };
            let mp = MotionPrimitive::from_rotation(&spec, t0, tf)?;
            if self.acceptable(&mp) {
                return Ok(Some(mp));
            }
        }
        Ok(None)
    }

    fn primitive(&self, rng: &mut ChaCha8Rng, t0: f64, tf: f64) -> Result<(MotionPrimitive, PrimitiveKind)> {
        // The kind is drawn once so rejection of one kind does not bias the mix.
        let kind = self.kinds[rng.gen_range(0..self.kinds.len())];
        for _ in 0..MAX_DRAWS {
            let mp = match kind {
                PrimitiveKind::Wave => Some(self.wave(rng, t0, tf)?),
                PrimitiveKind::Hover => Some(self.hover(rng, t0, tf)?),
                PrimitiveKind::Rotation => self.rotation(rng, t0, tf)?,
            };
            if let Some(mp) = mp.filter(|mp| self.acceptable(mp)) {
                return Ok((mp, kind));
            }
        }
        Err(Error::Infeasible {
            reason: format!("no acceptable {} primitive after {MAX_DRAWS} draws", kind.name()),
        })
    }

    /// One scenario; the same RNG state always yields the same pair.
    pub fn scenario(&self, rng: &mut ChaCha8Rng) -> Result<Scenario> {
        self.validate()?;
        let first_len = rng.gen_range(4.0..8.0);
        let transition = rng.gen_range(4.0..6.0);
        let t_s = first_len;
        let t_e = t_s + transition;
        let (first, first_kind) = self.primitive(rng, 0.0, t_s)?;
        let second_len = rng.gen_range(4.0..8.0);
        let (second, second_kind) = self.primitive(rng, t_e, t_e + second_len)?;
        Ok(Scenario { first, second, first_kind, second_kind, t_s, t_e })
    }
}

/// A random primitive pair and its transition window.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub first: MotionPrimitive,
    pub second: MotionPrimitive,
    pub first_kind: PrimitiveKind,
    pub second_kind: PrimitiveKind,
    pub t_s: f64,
    pub t_e: f64,
}
