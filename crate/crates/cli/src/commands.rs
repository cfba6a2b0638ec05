//! Command implementations behind the `choreo` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use choreo_core::assignment::TransitionSpec;
use choreo_core::collision::{
    min_pair_separation, plan_transition, CollisionEllipsoid, LogEntry, ResolveSettings, TransitionPlan,
};
use choreo_core::primitives::MotionPrimitive;
use choreo_core::sim::{run_choreography, synthetic_bode, RunMetrics, VehicleModel};
use choreo_core::sync::{compensate, FrequencyResponseTable};
use choreo_core::trajopt::PolynomialTrajectory;
use choreo_core::Vec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{
    to_json, write_file, DroneFile, FourierPiece, Piece, PlanArtifacts, PlanFile, PlanSegment,
    PolynomialPiece, LOG_FILE, PLAN_SCHEMA, REPORT_FILE, REPORT_SCHEMA, TRAJECTORY_SCHEMA,
};
use crate::error::{parse_json, CliError, CliResult};
use crate::lock::OutputLock;
use crate::scenario::{PrimitiveKind, Recipe};
use crate::schema::{load_show, Overrides, Show, Volume};

/// Fine sampling period for the reported separations, seconds.
const FINE_DT: f64 = 1e-3;

fn samples(t0: f64, tf: f64, dt: f64) -> Vec<f64> {
    let n = ((tf - t0) / dt).ceil().max(1.0) as usize;
    (0..=n).map(|k| t0 + (tf - t0) * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub segment: usize,
    pub feasible: bool,
    pub initial_edges: usize,
    pub residual_edges: Vec<(usize, usize)>,
    pub sweeps: usize,
    pub skipped: usize,
    pub doublings: usize,
    pub steps: usize,
    /// Smallest squared normalized separation over the final constraint times.
    pub min_separation_at_steps: f64,
    /// Smallest squared normalized separation on a 1 ms grid.
    pub min_separation_fine: f64,
    /// Largest relative mismatch of derivatives 0..4 against the primitives at both ends.
    pub boundary_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveReport {
    pub segment: usize,
    pub t0: f64,
    pub tf: f64,
    pub min_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub schema: String,
    pub feasible: bool,
    pub primitives: Vec<PrimitiveReport>,
    pub transitions: Vec<TransitionReport>,
}

/// Result of `plan`: the artifacts, the report and the per-transition plans.
#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub artifacts: PlanArtifacts,
    pub report: PlanReport,
    pub plans: Vec<TransitionPlan>,
    pub show: Show,
}

#[derive(Serialize)]
struct LogLine<'a> {
    segment: usize,
    #[serde(flatten)]
    entry: &'a LogEntry,
}

fn max_boundary_mismatch(traj: &PolynomialTrajectory, mp1: &MotionPrimitive, a: usize, mp2: &MotionPrimitive, b: usize) -> CliResult<f64> {
    let mut worst = 0.0f64;
    for order in 0..=4 {
        for (mp, role, t) in [(mp1, a, traj.t_start()), (mp2, b, traj.t_end())] {
            let want = mp.sample(role, t, order)?;
            let got = traj.sample(t, order);
            worst = worst.max((got - want).norm() / want.norm().max(1.0));
        }
    }
    Ok(worst)
}

fn primitive_separation(mp: &MotionPrimitive, e: &CollisionEllipsoid, t0: f64, tf: f64) -> CliResult<f64> {
    let mut min = f64::INFINITY;
    for t in samples(t0, tf, 0.01) {
        let pos: Vec<Vec3> = (0..mp.len()).map(|n| mp.sample(n, t, 0)).collect::<Result<_, _>>()?;
        for a in 0..pos.len() {
            for b in 0..a {
                min = min.min(e.normalize(&(pos[a] - pos[b])).norm_squared());
            }
        }
    }
    Ok(min)
}

/// Plans every transition of a show without touching the file system.
pub fn plan_show(show: Show) -> CliResult<PlanOutput> {
    let n = show.drones;
    let mut plans = Vec::with_capacity(show.transitions.len());
    for (i, t) in show.transitions.iter().enumerate() {
        let spec = TransitionSpec {
            mp1: &show.primitives[i],
            mp2: &show.primitives[i + 1],
            t_s: t.t_s,
            t_e: t.t_e,
            eps1: t.eps1,
            eps2: t.eps2,
        };
        let mut settings = ResolveSettings::new(show.bounds(t.k0));
        settings.ellipsoid = show.ellipsoid;
        settings.weight = t.weight;
        settings.degree = t.degree;
        settings.max_iters = t.max_iters;
        let plan = plan_transition(&spec, &settings, t.cost.into(), t.assignment.as_deref()).map_err(|e| {
            let at = format!("transition segments[{}]", 2 * i + 1);
            match CliError::from(e) {
                CliError::Infeasible(m) => CliError::Infeasible(format!("{at}: {m}")),
                CliError::Numerical(m) => CliError::Numerical(format!("{at}: {m}")),
                CliError::Schema(m) => CliError::Schema(format!("{at}: {m}")),
                other => other,
            }
        })?;
        plans.push(plan);
    }

    // Drone d starts in role d and takes role perm[role] after each transition.
    let mut roles: Vec<usize> = (0..n).collect();
    let mut pieces: Vec<Vec<Piece>> = vec![Vec::new(); n];
    let mut segments = Vec::new();
    for (i, mp) in show.primitives.iter().enumerate() {
        let (t0, tf) = show.flown_window(i);
        segments.push(PlanSegment::Primitive { segment: 2 * i, t0, tf });
        for d in 0..n {
            pieces[d].push(Piece::Fourier(FourierPiece::from_role(2 * i, mp, roles[d], t0, tf)));
        }
        if let Some(plan) = plans.get(i) {
            let assignment = plan.assignment.as_ref().expect("planned transitions carry an assignment");
            let t = &show.transitions[i];
            segments.push(PlanSegment::Transition {
                segment: 2 * i + 1,
                t_s: t.t_s,
                t_e: t.t_e,
                assignment: assignment.perm.clone(),
                assignment_cost: assignment.total_cost,
                feasible: plan.feasible,
            });
            for d in 0..n {
                let traj = &plan.trajectories[roles[d]];
                pieces[d].push(Piece::Polynomial(PolynomialPiece::from_trajectory(2 * i + 1, traj)));
                roles[d] = assignment.perm[roles[d]];
            }
        }
    }

    let mut primitive_reports = Vec::new();
    for (i, mp) in show.primitives.iter().enumerate() {
        let (t0, tf) = show.flown_window(i);
        primitive_reports.push(PrimitiveReport {
            segment: 2 * i,
            t0,
            tf,
            min_separation: primitive_separation(mp, &show.ellipsoid, t0, tf)?,
        });
    }
    let mut transition_reports = Vec::new();
    for (i, plan) in plans.iter().enumerate() {
        let t = &show.transitions[i];
        let perm = &plan.assignment.as_ref().expect("assignment").perm;
        let initial_edges = plan
            .log
            .iter()
            .find_map(|l| match l {
                LogEntry::Graph { edges, .. } => Some(*edges),
                _ => None,
            })
            .unwrap_or(0);
        let step_times = show.bounds(plan.steps).constraint_times(t.t_s, t.t_e);
        let mut boundary_mismatch = 0.0f64;
        for (alpha, traj) in plan.trajectories.iter().enumerate() {
            boundary_mismatch = boundary_mismatch.max(max_boundary_mismatch(
                traj,
                &show.primitives[i],
                alpha,
                &show.primitives[i + 1],
                perm[alpha],
            )?);
        }
        transition_reports.push(TransitionReport {
            segment: 2 * i + 1,
            feasible: plan.feasible,
            initial_edges,
            residual_edges: plan.residual_edges.clone(),
            sweeps: plan.iterations,
            skipped: plan.skipped,
            doublings: plan.doublings,
            steps: plan.steps,
            min_separation_at_steps: min_pair_separation(&plan.trajectories, &show.ellipsoid, &step_times),
            min_separation_fine: min_pair_separation(
                &plan.trajectories,
                &show.ellipsoid,
                &samples(t.t_s, t.t_e, FINE_DT),
            ),
            boundary_mismatch,
        });
    }
    let feasible = plans.iter().all(|p| p.feasible);
    let plan = PlanFile {
        schema: PLAN_SCHEMA.into(),
        drones: n,
        volume: show.volume,
        ellipsoid: show.ellipsoid_axes,
        limits: show.limits,
        response_table: show.response_table.as_ref().map(|p| p.display().to_string()),
        compensated: false,
        feasible,
        segments,
    };
    let drones = pieces
        .into_iter()
        .enumerate()
        .map(|(d, pieces)| DroneFile { schema: TRAJECTORY_SCHEMA.into(), drone: d, pieces })
        .collect();
    let report = PlanReport {
        schema: REPORT_SCHEMA.into(),
        feasible,
        primitives: primitive_reports,
        transitions: transition_reports,
    };
    Ok(PlanOutput { artifacts: PlanArtifacts { plan, drones }, report, plans, show })
}

/// `plan`: writes drone files, `plan.json`, `report.json` and `resolution.log`.
///
/// Artifacts are written even when a transition stays in conflict; the
/// returned error then carries the infeasibility.
pub fn plan(input: &Path, out: &Path, overrides: &Overrides) -> CliResult<PlanOutput> {
    let show = load_show(input, overrides)?;
    let _lock = OutputLock::acquire(out)?;
    let output = plan_show(show)?;
    output.artifacts.write(out)?;
    write_file(&out.join(REPORT_FILE), &to_json(&output.report))?;
    let mut log = String::new();
    for (i, p) in output.plans.iter().enumerate() {
        for entry in &p.log {
            log.push_str(&serde_json::to_string(&LogLine { segment: 2 * i + 1, entry }).expect("log serializes"));
            log.push('\n');
        }
    }
    write_file(&out.join(LOG_FILE), &log)?;
    if !output.report.feasible {
        let bad: Vec<String> = output
            .report
            .transitions
            .iter()
            .filter(|t| !t.feasible)
            .map(|t| format!("segments[{}] keeps conflicts {:?}", t.segment, t.residual_edges))
            .collect();
        return Err(CliError::Infeasible(bad.join("; ")));
    }
    Ok(output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampedFrequencies {
    pub drone: usize,
    pub segment: usize,
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensationReport {
    pub schema: String,
    pub table: String,
    /// Axes absent from the table, compensated with the identity response.
    pub missing_axes: Vec<String>,
    /// Mode frequencies outside the table's range, looked up at the nearest end.
    pub clamped: Vec<ClampedFrequencies>,
}

pub const COMPENSATION_FILE: &str = "compensation.json";

/// `compensate`: adds amplitude and phase factors to every primitive piece.
/// Transition pieces are copied unchanged.
pub fn compensate_plan(plan_dir: &Path, table: Option<&Path>, out: &Path) -> CliResult<CompensationReport> {
    let mut artifacts = PlanArtifacts::load(plan_dir)?;
    let table_path: PathBuf = match (table, &artifacts.plan.response_table) {
        (Some(t), _) => t.to_path_buf(),
        (None, Some(t)) => PathBuf::from(t),
        (None, None) => {
            return Err(CliError::Schema("no response table: pass --table or set response_table in the show".into()))
        }
    };
    let file = fs::File::open(&table_path).map_err(|e| CliError::io(table_path.display(), e))?;
    let (table, missing) = FrequencyResponseTable::read_csv(file)
        .map_err(|e| CliError::Schema(format!("{}: {}", table_path.display(), CliError::from(e))))?;
    let _lock = OutputLock::acquire(out)?;
    let mut clamped = Vec::new();
    for d in &mut artifacts.drones {
        for piece in &mut d.pieces {
            if let Piece::Fourier(f) = piece {
                let cp = compensate(&f.primitive()?, &table)?;
                let to_arr = |v: &Vec3| [v.x, v.y, v.z];
                f.kappa = Some(cp.kappa()[0].iter().map(to_arr).collect());
                f.phi = Some(cp.phi()[0].iter().map(to_arr).collect());
                if !cp.extrapolated().is_empty() {
                    clamped.push(ClampedFrequencies {
                        drone: d.drone,
                        segment: f.segment,
                        frequencies: cp.extrapolated().to_vec(),
                    });
                }
            }
        }
    }
    artifacts.plan.compensated = true;
    artifacts.plan.response_table = Some(table_path.display().to_string());
    artifacts.write(out)?;
    for name in [REPORT_FILE, LOG_FILE] {
        let src = plan_dir.join(name);
        if src.exists() && plan_dir != out {
            fs::copy(&src, out.join(name)).map_err(|e| CliError::io(src.display(), e))?;
        }
    }
    let report = CompensationReport {
        schema: "choreo/compensation-v1".into(),
        table: table_path.display().to_string(),
        missing_axes: missing.iter().map(|s| s.to_string()).collect(),
        clamped,
    };
    write_file(&out.join(COMPENSATION_FILE), &to_json(&report))?;
    Ok(report)
}

/// Vehicle model file: one model for the whole fleet or one per drone.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Fleet(VehicleModel),
    PerDrone(Vec<VehicleModel>),
}

pub fn load_models(path: Option<&Path>) -> CliResult<Vec<VehicleModel>> {
    let Some(path) = path else { return Ok(vec![VehicleModel::default()]) };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let models = match parse_json::<ModelFile>(&text, &path.display().to_string())? {
        ModelFile::Fleet(m) => vec![m],
        ModelFile::PerDrone(ms) => ms,
    };
    for m in &models {
        m.validate().map_err(|e| CliError::Schema(format!("{}: {}", path.display(), CliError::from(e))))?;
    }
    Ok(models)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub schema: String,
    pub compensated: bool,
    pub drones: usize,
    pub metrics: RunMetrics,
}

pub const RUN_CSV: &str = "run.csv";
pub const METRICS_FILE: &str = "metrics.json";

/// `simulate`: flies the plan through the vehicle model and exports the run.
pub fn simulate(plan_dir: &Path, model: Option<&Path>, out: &Path) -> CliResult<SimulationReport> {
    let artifacts = PlanArtifacts::load(plan_dir)?;
    let models = load_models(model)?;
    let e = CollisionEllipsoid::diagonal(Vec3::from(artifacts.plan.ellipsoid))?;
    let schedules: Vec<_> = artifacts.drones.iter().map(|d| d.schedule()).collect::<CliResult<_>>()?;
    let run = run_choreography(&schedules, &models, &e)?;
    let _lock = OutputLock::acquire(out)?;
    let mut csv = Vec::new();
    run.write_csv(&mut csv)?;
    let path = out.join(RUN_CSV);
    fs::write(&path, csv).map_err(|e| CliError::io(path.display(), e))?;
    let report = SimulationReport {
        schema: "choreo/metrics-v1".into(),
        compensated: artifacts.plan.compensated,
        drones: artifacts.plan.drones,
        metrics: run.metrics,
    };
    write_file(&out.join(METRICS_FILE), &to_json(&report))?;
    Ok(report)
}

fn default_sweep_schema() -> String {
    "choreo/sweep-v1".into()
}
fn default_trials() -> usize {
    100
}
fn default_drones() -> usize {
    25
}
fn default_volume() -> Volume {
    Volume { min: [0.0; 3], max: [5.0, 5.0, 2.0] }
}
fn default_axes() -> [f64; 3] {
    [0.14, 0.14, 0.35]
}
fn default_kinds() -> Vec<PrimitiveKind> {
    vec![PrimitiveKind::Wave, PrimitiveKind::Rotation]
}

/// Sweep configuration; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_schema")]
    pub schema: String,
    #[serde(default = "default_drones")]
    pub drones: usize,
    #[serde(default = "default_volume")]
    pub volume: Volume,
    #[serde(default = "default_axes")]
    pub ellipsoid: [f64; 3],
    #[serde(default = "default_kinds")]
    pub kinds: Vec<PrimitiveKind>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub k0: Option<usize>,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        parse_json("{}", "defaults").expect("defaults parse")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub first: PrimitiveKind,
    pub second: PrimitiveKind,
    pub feasible: bool,
    pub initial_edges: usize,
    pub residual_edges: usize,
    pub sweeps: usize,
    pub skipped: usize,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub config: SweepConfig,
    pub feasible: usize,
    pub fraction: f64,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTiming {
    pub total_s: f64,
    pub p50_s: f64,
    pub p90_s: f64,
    pub max_s: f64,
    pub per_trial_s: Vec<f64>,
}

pub const SWEEP_FILE: &str = "sweep.json";
pub const TIMING_FILE: &str = "timing.json";

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank]
}

fn run_trial(config: &SweepConfig, recipe: &Recipe, trial: usize) -> CliResult<TrialResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64);
    let sc = recipe.scenario(&mut rng)?;
    let spec = TransitionSpec::between(&sc.first, &sc.second);
    let mut settings = ResolveSettings::new(recipe.bounds(config.k0.unwrap_or(choreo_core::trajopt::DEFAULT_STEPS)));
    settings.ellipsoid = recipe.ellipsoid;
    if let Some(d) = config.degree {
        settings.degree = d;
    }
    if let Some(m) = config.max_iters {
        settings.max_iters = m;
    }
    let mut result = TrialResult {
        trial,
        first: sc.first_kind,
        second: sc.second_kind,
        feasible: false,
        initial_edges: 0,
        residual_edges: 0,
        sweeps: 0,
        skipped: 0,
        steps: settings.bounds.steps,
        error: None,
    };
    match plan_transition(&spec, &settings, Default::default(), None) {
        Ok(plan) => {
            result.feasible = plan.feasible;
            result.initial_edges = plan
                .log
                .iter()
                .find_map(|l| match l {
                    LogEntry::Graph { edges, .. } => Some(*edges),
                    _ => None,
                })
                .unwrap_or(0);
            result.residual_edges = plan.residual_edges.len();
            result.sweeps = plan.iterations;
            result.skipped = plan.skipped;
            result.steps = plan.steps;
        }
        // Bound violations and solver trouble count as failed trials.
        Err(e) => result.error = Some(e.to_string()),
    }
    Ok(result)
}

/// Runs the sweep without touching the file system.
pub fn run_sweep(config: &SweepConfig) -> CliResult<(SweepReport, SweepTiming)> {
    if config.trials == 0 {
        return Err(CliError::Schema("trials must be at least 1".into()));
    }
    let recipe = Recipe {
        drones: config.drones,
        volume_min: Vec3::from(config.volume.min),
        volume_max: Vec3::from(config.volume.max),
        ellipsoid: CollisionEllipsoid::diagonal(Vec3::from(config.ellipsoid))?,
        kinds: config.kinds.clone(),
        ..Recipe::default()
    };
    recipe.validate()?;
    let start = Instant::now();
    let results: Vec<(TrialResult, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let t = Instant::now();
            run_trial(config, &recipe, trial).map(|r| (r, t.elapsed().as_secs_f64()))
        })
        .collect::<CliResult<_>>()?;
    let total_s = start.elapsed().as_secs_f64();
    let (trials, per_trial_s): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let feasible = trials.iter().filter(|t| t.feasible).count();
    let mut sorted = per_trial_s.clone();
    sorted.sort_by(f64::total_cmp);
    let timing = SweepTiming {
        total_s,
        p50_s: percentile(&sorted, 0.5),
        p90_s: percentile(&sorted, 0.9),
        max_s: sorted.last().copied().unwrap_or(0.0),
        per_trial_s,
    };
    let report = SweepReport {
        schema: "choreo/sweep-report-v1".into(),
        config: config.clone(),
        feasible,
        fraction: feasible as f64 / config.trials as f64,
        trials,
    };
    Ok((report, timing))
}

/// `sweep`: writes the deterministic `sweep.json` and a separate `timing.json`.
pub fn sweep(config: &SweepConfig, out: &Path) -> CliResult<(SweepReport, SweepTiming)> {
    let _lock = OutputLock::acquire(out)?;
    let (report, timing) = run_sweep(config)?;
    write_file(&out.join(SWEEP_FILE), &to_json(&report))?;
    write_file(&out.join(TIMING_FILE), &to_json(&timing))?;
    Ok((report, timing))
}

pub fn load_sweep_config(path: Option<&Path>) -> CliResult<SweepConfig> {
    let Some(path) = path else { return Ok(SweepConfig::default()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let config: SweepConfig = parse_json(&text, &path.display().to_string())?;
    if config.schema != default_sweep_schema() {
        return Err(CliError::Schema(format!(
            "{}: expected schema \"{}\", found \"{}\"",
            path.display(),
            default_sweep_schema(),
            config.schema
        )));
    }
    Ok(config)
}

fn default_amplitude() -> f64 {
    0.1
}

/// Excitation for `bode`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodeConfig {
    pub frequencies: Vec<f64>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

impl Default for BodeConfig {
    /// 40 log-spaced frequencies from 0.1 to 30 rad/s.
    fn default() -> Self {
        let n = 40;
        let (lo, hi) = (0.1f64.ln(), 30.0f64.ln());
        let frequencies = (0..n).map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp()).collect();
        Self { frequencies, amplitude: default_amplitude() }
    }
}

pub const BODE_CSV: &str = "bode.csv";

/// `bode`: measures the model's frequency response and writes it as a table.
pub fn bode(model: Option<&Path>, input: Option<&Path>, out: &Path) -> CliResult<FrequencyResponseTable> {
    let models = load_models(model)?;
    if models.len() != 1 {
        return Err(CliError::Schema("bode takes a single vehicle model".into()));
    }
    let config = match input {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p.display(), e))?;
            parse_json(&text, &p.display().to_string())?
        }
        None => BodeConfig::default(),
    };
    let table = synthetic_bode(&models[0], &config.frequencies, config.amplitude)?;
    let _lock = OutputLock::acquire(out)?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    let path = out.join(BODE_CSV);
    fs::write(&path, csv).map_err(|e| CliError::io(path.display(), e))?;
    Ok(table)
}
