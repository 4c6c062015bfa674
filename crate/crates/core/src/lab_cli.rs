//! Experiment plumbing behind the `centroflow` binary: configuration, body
//! sources, the run/verify/sweep commands and their on-disk artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine_frame::{ellipse_body, CenteredEllipse};
use crate::circle_field::{AngularGrid, PeriodicField};
use crate::convex_body::{radius_of_curvature, BodySummary, SupportBody};
use crate::error::{invalid, Error, Result};
use crate::flow_engine::{self, FlowFamily, FlowSpec, Termination, Trajectory};
use crate::verifier::{self, CheckReport, SuiteSummary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Overrides the configured output directory (the `--out` flag still wins).
pub const OUT_ENV: &str = "CENTROFLOW_OUT";
pub const MAX_REJECTIONS: usize = 1000;

/// Random symmetric body `1 + Σ_{k≤k_max} a_{2k} cos 2kθ + b_{2k} sin 2kθ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomBodySpec {
    pub seed: u64,
    pub k_max: usize,
    /// Bound on the mode-1 (wavenumber 2) coefficients.
    pub amplitude: f64,
    /// Mode k is drawn from `±amplitude · k^{−decay}`.
    pub decay: f64,
    /// Required lower bound on the radius of curvature.
    pub delta: f64,
}

impl Default for RandomBodySpec {
    fn default() -> Self {
        Self { seed: 0, k_max: 4, amplitude: 0.15, decay: 2.0, delta: 0.1 }
    }
}

/// Draws bodies until `min r ≥ δ`, giving up after [`MAX_REJECTIONS`] tries.
pub fn generate_random_body(spec: &RandomBodySpec, grid: &AngularGrid) -> Result<SupportBody> {
    if !(spec.amplitude >= 0.0 && spec.amplitude.is_finite() && spec.decay.is_finite()) {
        return Err(invalid("random body amplitude and decay must be finite, amplitude >= 0"));
    }
    if !(spec.delta > 0.0 && spec.delta < 1.0) {
        return Err(invalid(format!("random body delta must lie in (0, 1), got {}", spec.delta)));
    }
    if 4 * spec.k_max >= grid.n() {
        return Err(invalid(format!("k_max = {} not resolved on n = {}", spec.k_max, grid.n())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_REJECTIONS {
        let coeffs: Vec<(f64, f64)> = (1..=spec.k_max)
            .map(|k| {
                let bound = spec.amplitude * (k as f64).powf(-spec.decay);
                let (a, b): (f64, f64) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                (a * bound, b * bound)
            })
            .collect();
        let s = fourier_field(grid, 1.0, &coeffs);
        if s.min() <= 0.0 {
            continue;
        }
        match radius_of_curvature(&s) {
            Ok(r) if r.min_refined().1 >= spec.delta => return SupportBody::new(s),
            _ => continue,
        }
    }
    Err(invalid(format!(
        "no body with min r >= {} after {MAX_REJECTIONS} draws; amplitudes too large",
        spec.delta
    )))
}

/// `c0 + Σ_k a_k cos 2kθ + b_k sin 2kθ`.
fn fourier_field(grid: &AngularGrid, c0: f64, coeffs: &[(f64, f64)]) -> PeriodicField {
    PeriodicField::from_fn(grid, |t| {
        coeffs.iter().enumerate().fold(c0, |acc, (i, &(a, b))| {
            let w = 2.0 * (i + 1) as f64 * t;
            acc + a * w.cos() + b * w.sin()
        })
    })
}

/// Parses `circle[:R]`, `ellipse:a:b[:phi]` or `fourier:c0,a2,b2,a4,b4,...`.
pub fn builtin_body(name: &str, grid: &AngularGrid) -> Result<SupportBody> {
    let mut parts = name.split(':');
    let kind = parts.next().unwrap_or_default();
    let args: Vec<&str> = parts.collect();
    let nums = |xs: &[&str]| -> Result<Vec<f64>> {
        xs.iter()
            .map(|x| x.trim().parse::<f64>().map_err(|_| invalid(format!("bad number {x:?} in body {name:?}"))))
            .collect()
    };
    match (kind, args.len()) {
        ("circle", 0) => SupportBody::circle(grid, 1.0),
        ("circle", 1) => SupportBody::circle(grid, nums(&args)?[0]),
        ("ellipse", 2 | 3) => {
            let v = nums(&args)?;
            let e = CenteredEllipse::new(v[0], v[1], v.get(2).copied().unwrap_or(0.0))?;
            ellipse_body(&e, grid)
        }
        ("fourier", 1) => {
            let v = nums(&args[0].split(',').collect::<Vec<_>>())?;
            if v.len() % 2 == 0 {
                return Err(invalid(format!("fourier body needs c0 then (a, b) pairs: {name:?}")));
            }
            let pairs: Vec<(f64, f64)> = v[1..].chunks(2).map(|c| (c[0], c[1])).collect();
            SupportBody::new(fourier_field(grid, v[0], &pairs))
        }
        _ => Err(invalid(format!("unknown builtin body {name:?}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySource {
    Builtin(String),
    /// A JSON body file as written by `run`.
    File(PathBuf),
    Random(RandomBodySpec),
}

impl Default for BodySource {
    fn default() -> Self {
        BodySource::Builtin("circle".into())
    }
}

impl BodySource {
    /// `seed` replaces the seed of a random source and is ignored otherwise.
    pub fn build(&self, grid: &AngularGrid, seed: Option<u64>) -> Result<SupportBody> {
        match self {
            BodySource::Builtin(name) => builtin_body(name, grid),
            BodySource::File(path) => {
                let text = fs::read_to_string(path)?;
                Ok(serde_json::from_str(&text)?)
            }
            BodySource::Random(spec) => {
                let spec = RandomBodySpec { seed: seed.unwrap_or(spec.seed), ..spec.clone() };
                generate_random_body(&spec, grid)
            }
        }
    }

    fn label(&self, seed: Option<u64>) -> String {
        match self {
            BodySource::Builtin(name) => name.clone(),
            BodySource::File(path) => path.display().to_string(),
            BodySource::Random(spec) => format!("random:{}", seed.unwrap_or(spec.seed)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotToggles {
    pub enabled: bool,
    pub area: bool,
    pub omega_p: bool,
    pub ratio: bool,
    pub santalo: bool,
    pub hausdorff: bool,
}

impl Default for PlotToggles {
    fn default() -> Self {
        Self { enabled: true, area: true, omega_p: true, ratio: true, santalo: true, hausdorff: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Empty means the flow's own p.
    pub p_values: Vec<f64>,
    /// Random seeds for the configured random source; empty means the configured body.
    pub seeds: Vec<u64>,
    /// Replaces every check's tolerance.
    pub tolerance: Option<f64>,
    pub duality_horizon: f64,
    pub omega_l: Vec<f64>,
    pub convergence_budget: usize,
    /// Snapshot cadence used when the flow config leaves snapshots off.
    pub snapshot_every: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            p_values: Vec::new(),
            seeds: Vec::new(),
            tolerance: None,
            duality_horizon: 0.1,
            omega_l: vec![1.0, 3.0],
            convergence_budget: verifier::CONVERGENCE_BUDGET,
            snapshot_every: 250,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub p_values: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Circle radii; when set the cells are circles instead of the configured body.
    pub radii: Vec<f64>,
    /// 0 lets rayon pick.
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub flow: FlowSpec,
    pub body: BodySource,
    pub out: Option<PathBuf>,
    /// Check names, or `all`.
    pub checks: Vec<String>,
    pub plots: PlotToggles,
    pub verify: VerifyOptions,
    pub sweep: SweepOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 256,
            flow: FlowSpec::default(),
            body: BodySource::default(),
            out: None,
            checks: Vec::new(),
            plots: PlotToggles::default(),
            verify: VerifyOptions::default(),
            sweep: SweepOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        AngularGrid::new(self.n)?;
        self.flow.validate()?;
        parse_checks(&self.checks)?;
        for &p in self.verify.p_values.iter().chain(&self.sweep.p_values) {
            FlowSpec { p, ..self.flow.clone() }.validate()?;
        }
        if self.sweep.radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(invalid("sweep radii must be positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<AngularGrid> {
        AngularGrid::new(self.n)
    }

    /// `--out`, then the environment override, then the config, then `./out`.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    MonotoneRatio,
    MinSpeed,
    AreaIdentity,
    OmegaEvolution,
    SigmaEvolution,
    StrongIsoperimetric,
    Duality,
    Convergence,
    SantaloMonotone,
    DecayDiagnostics,
}

impl CheckName {
    pub const ALL: [CheckName; 10] = [
        CheckName::MonotoneRatio,
        CheckName::MinSpeed,
        CheckName::AreaIdentity,
        CheckName::OmegaEvolution,
        CheckName::SigmaEvolution,
        CheckName::StrongIsoperimetric,
        CheckName::Duality,
        CheckName::Convergence,
        CheckName::SantaloMonotone,
        CheckName::DecayDiagnostics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::MonotoneRatio => "monotone_ratio",
            CheckName::MinSpeed => "min_speed",
            CheckName::AreaIdentity => "area_identity",
            CheckName::OmegaEvolution => "omega_evolution",
            CheckName::SigmaEvolution => "sigma_evolution",
            CheckName::StrongIsoperimetric => "strong_isoperimetric",
            CheckName::Duality => "duality",
            CheckName::Convergence => "convergence",
            CheckName::SantaloMonotone => "santalo_monotone",
            CheckName::DecayDiagnostics => "decay_diagnostics",
        }
    }

    fn needs_trajectory(self) -> bool {
        !matches!(self, CheckName::Duality | CheckName::Convergence | CheckName::DecayDiagnostics)
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown check {s:?}")))
    }
}

/// Expands `all` and rejects unknown names.
pub fn parse_checks(names: &[String]) -> Result<Vec<CheckName>> {
    let mut out = Vec::new();
    for n in names {
        let batch = if n == "all" { CheckName::ALL.to_vec() } else { vec![n.parse()?] };
        for c in batch {
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Contracting spec with snapshots switched on, derived from the configured flow.
fn checking_spec(flow: &FlowSpec, opts: &VerifyOptions) -> FlowSpec {
    let snapshot_every = if flow.snapshot_every > 0 { flow.snapshot_every } else { opts.snapshot_every };
    FlowSpec { family: FlowFamily::Contracting, snapshot_every, horizon: None, ..flow.clone() }
}

/// Area floor small enough for `Ω_l` at `l = (2p+2)/(p+3)` to fall to half the
/// decay threshold, using `Ω_l ∝ A^{(2−l)/(l+2)}` along nearly round shapes.
fn decay_floor(flow: &FlowSpec, area0: f64) -> f64 {
    let l = flow.watch_l();
    let exponent = (l + 2.0) / (2.0 - l);
    flow.area_floor.min(area0 * (verifier::DECAY_FRACTION / 2.0).powf(exponent)).max(1e-300)
}

/// Runs the named checks on `body`. `base` is reused when it is a contracting
/// trajectory with snapshot bursts.
pub fn run_checks(
    names: &[CheckName],
    body: &SupportBody,
    flow: &FlowSpec,
    opts: &VerifyOptions,
    base: Option<&Trajectory>,
) -> Result<Vec<CheckReport>> {
    let reusable = base.filter(|t| t.spec.family == FlowFamily::Contracting && t.spec.snapshot_every > 0);
    let owned;
    let traj = match reusable {
        Some(t) => Some(t),
        None if names.iter().any(|c| c.needs_trajectory()) => {
            owned = flow_engine::run(body, &checking_spec(flow, opts))?;
            Some(&owned)
        }
        None => None,
    };
    let p = flow.p;
    let mut reports = Vec::new();
    for &name in names {
        match name {
            CheckName::MonotoneRatio => reports.push(verifier::check_monotone_ratio(traj.unwrap())?),
            CheckName::MinSpeed => {
                for q in traj.unwrap().spec.q_list() {
                    if q <= 2.0 * p / (p + 1.0) + 1e-12 {
                        reports.push(verifier::check_min_speed_monotone(traj.unwrap(), q)?);
                    }
                }
            }
            CheckName::AreaIdentity => reports.push(verifier::check_area_identity(traj.unwrap())?),
            CheckName::OmegaEvolution => {
                let mut ls = vec![p];
                ls.extend(opts.omega_l.iter().copied().filter(|&l| l != p));
                for l in ls {
                    reports.push(verifier::check_omega_evolution(traj.unwrap(), l)?);
                }
            }
            CheckName::SigmaEvolution => reports.push(verifier::check_sigma_evolution(traj.unwrap())?),
            CheckName::StrongIsoperimetric => reports.push(verifier::check_strong_isoperimetric(traj.unwrap())?),
            CheckName::SantaloMonotone => reports.push(verifier::check_santalo_monotone(traj.unwrap())?),
            CheckName::Duality => reports.push(verifier::check_duality(body, p, opts.duality_horizon)?),
            CheckName::Convergence => {
                if p > 1.0 {
                    reports.push(verifier::check_convergence_within(body, p, opts.convergence_budget)?);
                }
            }
            CheckName::DecayDiagnostics => {
                let spec = FlowSpec {
                    family: FlowFamily::Contracting,
                    area_floor: decay_floor(flow, body.area()),
                    record_every: flow.record_every.max(50),
                    snapshot_every: 0,
                    horizon: None,
                    ..flow.clone()
                };
                let t = flow_engine::run(body, &spec)?;
                reports.push(verifier::check_decay_diagnostics(&t)?);
            }
        }
    }
    if let Some(tol) = opts.tolerance {
        reports = reports.into_iter().map(|r| r.with_tolerance(tol)).collect();
    }
    Ok(reports)
}

/// Maps a failure to the process exit code: 2 for usage/config/I/O, 3 for numerics.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Io(_) | Error::Json(_) => 2,
        Error::ConvexityViolation { .. } | Error::OriginNotInterior { .. } | Error::Numeric(_) => 3,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub body: String,
    pub family: FlowFamily,
    pub p: f64,
    pub termination: Termination,
    pub steps: usize,
    pub t_final: f64,
    pub tau_final: f64,
    pub extinction_estimate: Option<f64>,
    pub initial: BodySummary,
    pub final_body: BodySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<SuiteSummary>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    let file = fs::File::create(dir.join("trajectory.csv"))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# centroflow {VERSION}")?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_body(dir: &Path, step: usize, body: &SupportBody) -> Result<()> {
    write_file(&dir.join(format!("body_{step}.json")), &serde_json::to_string(body)?)
}

/// Executes one flow, writing CSV, body snapshots, plots and `report.json`.
/// Returns the exit code; 1 when requested checks fail.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<i32> {
    cfg.validate()?;
    let checks = parse_checks(&cfg.checks)?;
    let grid = cfg.grid()?;
    let body = cfg.body.build(&grid, seed)?;
    fs::create_dir_all(out)?;
    let traj = flow_engine::run(&body, &cfg.flow)?;
    write_trajectory(out, &traj)?;
    write_body(out, 0, &body)?;
    for st in &traj.snapshots {
        write_body(out, st.step_count, &st.body)?;
    }
    write_body(out, traj.final_state.step_count, &traj.final_state.body)?;
    if cfg.plots.enabled {
        write_plots(out, &traj, &cfg.plots)?;
    }
    let suite = if checks.is_empty() {
        None
    } else {
        Some(SuiteSummary::new(run_checks(&checks, &body, &cfg.flow, &cfg.verify, Some(&traj))?))
    };
    let code = suite.as_ref().map_or(0, SuiteSummary::exit_code);
    let report = RunReport {
        version: VERSION.into(),
        body: cfg.body.label(seed),
        family: cfg.flow.family,
        p: cfg.flow.p,
        termination: traj.termination,
        steps: traj.final_state.step_count,
        t_final: traj.final_state.t,
        tau_final: traj.final_state.tau,
        extinction_estimate: traj.extinction_estimate,
        initial: body.summary(cfg.flow.p)?,
        final_body: traj.final_state.body.summary(cfg.flow.p)?,
        checks: suite,
    };
    write_file(&out.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    if traj.termination == Termination::ConvexityFailure {
        return Ok(3);
    }
    Ok(code)
}

/// One (p, body) combination of a verify or sweep grid.
#[derive(Clone, Debug)]
struct Cell {
    p: f64,
    source: BodySource,
    seed: Option<u64>,
}

impl Cell {
    fn label(&self) -> String {
        format!("p={},body={}", self.p, self.source.label(self.seed))
    }
}

fn grid_cells(cfg: &ExperimentConfig, p_values: &[f64], seeds: &[u64], radii: &[f64], seed: Option<u64>) -> Vec<Cell> {
    let ps = if p_values.is_empty() { vec![cfg.flow.p] } else { p_values.to_vec() };
    let bodies: Vec<(BodySource, Option<u64>)> = if !radii.is_empty() {
        radii.iter().map(|r| (BodySource::Builtin(format!("circle:{r}")), None)).collect()
    } else if !seeds.is_empty() {
        let spec = match &cfg.body {
            BodySource::Random(s) => s.clone(),
            _ => RandomBodySpec::default(),
        };
        seeds.iter().map(|&s| (BodySource::Random(spec.clone()), Some(s))).collect()
    } else {
        vec![(cfg.body.clone(), seed)]
    };
    ps.iter()
        .flat_map(|&p| bodies.iter().map(move |(b, s)| Cell { p, source: b.clone(), seed: *s }))
        .collect()
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the configured checks (all of them when none are named) over fresh trajectories.
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<i32> {
    cfg.validate()?;
    let mut checks = parse_checks(&cfg.checks)?;
    if checks.is_empty() {
        checks = CheckName::ALL.to_vec();
    }
    let grid = cfg.grid()?;
    let cells = grid_cells(cfg, &cfg.verify.p_values, &cfg.verify.seeds, &[], seed);
    let results: Vec<Result<Vec<CheckReport>>> = with_workers(cfg.sweep.workers, || {
        cells
            .par_iter()
            .map(|cell| {
                let body = cell.source.build(&grid, cell.seed)?;
                let flow = FlowSpec { p: cell.p, ..cfg.flow.clone() };
                let label = cell.label();
                let reports = run_checks(&checks, &body, &flow, &cfg.verify, None)?;
                Ok(reports
                    .into_iter()
                    .map(|mut r| {
                        r.name = format!("{}[{label}]", r.name);
                        r
                    })
                    .collect())
            })
            .collect()
    })?;
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    let suite = SuiteSummary::new(reports);
    fs::create_dir_all(out)?;
    write_file(&out.join("report.json"), &serde_json::to_string_pretty(&suite)?)?;
    Ok(suite.exit_code())
}

/// Summary of one sweep cell.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub body: String,
    pub termination: String,
    pub steps: usize,
    pub t_final: f64,
    pub tau_final: f64,
    pub extinction_estimate: f64,
    pub final_area: f64,
    pub final_p_ratio: f64,
    pub final_santalo: f64,
    pub final_hausdorff_circle: f64,
    pub worst_margin: f64,
    pub failed_checks: String,
    pub error: String,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "p,body,termination,steps,t_final,tau_final,extinction_estimate,final_area,final_p_ratio,final_santalo,final_hausdorff_circle,worst_margin,failed_checks,error";

    fn csv_row(&self) -> String {
        let clean = |s: &str| s.replace([',', '\n'], ";");
        format!(
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
            self.p,
            clean(&self.body),
            self.termination,
            self.steps,
            self.t_final,
            self.tau_final,
            self.extinction_estimate,
            self.final_area,
            self.final_p_ratio,
            self.final_santalo,
            self.final_hausdorff_circle,
            self.worst_margin,
            clean(&self.failed_checks),
            clean(&self.error)
        )
    }
}

fn sweep_cell(cfg: &ExperimentConfig, checks: &[CheckName], grid: &AngularGrid, cell: &Cell, dir: &Path) -> Result<SweepRow> {
    let body = cell.source.build(grid, cell.seed)?;
    let flow = FlowSpec { p: cell.p, ..cfg.flow.clone() };
    let traj = flow_engine::run(&body, &flow)?;
    fs::create_dir_all(dir)?;
    write_trajectory(dir, &traj)?;
    let last = traj.records.last().ok_or_else(|| Error::Numeric("empty trajectory".into()))?;
    let mut row = SweepRow {
        p: cell.p,
        body: cell.source.label(cell.seed),
        termination: format!("{:?}", traj.termination),
        steps: traj.final_state.step_count,
        t_final: traj.final_state.t,
        tau_final: traj.final_state.tau,
        extinction_estimate: traj.extinction_estimate.unwrap_or(f64::NAN),
        final_area: last.area,
        final_p_ratio: last.p_ratio,
        final_santalo: last.santalo,
        final_hausdorff_circle: last.hausdorff_circle,
        worst_margin: f64::NAN,
        ..SweepRow::default()
    };
    if !checks.is_empty() {
        let reports = run_checks(checks, &body, &flow, &cfg.verify, Some(&traj))?;
        row.worst_margin = reports.iter().map(|r| r.worst_margin + r.tolerance).fold(f64::INFINITY, f64::min);
        row.failed_checks =
            reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect::<Vec<_>>().join(";");
    }
    Ok(row)
}

/// Runs the p × body grid in parallel and writes `sweep.csv`. Exit 1 when a cell
/// errored or one of its checks failed.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<i32> {
    cfg.validate()?;
    let checks = parse_checks(&cfg.checks)?;
    let grid = cfg.grid()?;
    let cells = grid_cells(cfg, &cfg.sweep.p_values, &cfg.sweep.seeds, &cfg.sweep.radii, seed);
    fs::create_dir_all(out)?;
    let rows: Vec<SweepRow> = with_workers(cfg.sweep.workers, || {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, cell)| {
                let dir = out.join(format!("cell_{i:03}"));
                sweep_cell(cfg, &checks, &grid, cell, &dir).unwrap_or_else(|e| SweepRow {
                    p: cell.p,
                    body: cell.source.label(cell.seed),
                    termination: "error".into(),
                    error: e.to_string(),
                    worst_margin: f64::NAN,
                    ..SweepRow::default()
                })
            })
            .collect()
    })?;
    let mut csv = format!("# centroflow {VERSION}\n{}\n", SweepRow::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write_file(&out.join("sweep.csv"), &csv)?;
    let bad = rows.iter().any(|r| !r.error.is_empty() || !r.failed_checks.is_empty());
    Ok(if bad { 1 } else { 0 })
}

/// One series of a line plot.
pub struct Series<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

fn nice(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

/// A self-contained SVG polyline plot with labelled axes.
pub fn svg_line_plot(series: &Series) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 80.0;
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;
    let pts: Vec<(f64, f64)> =
        series.xs.iter().zip(&series.ys).map(|(&x, &y)| (x, y)).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 1e-12 * y0.abs().max(1e-300) {
        let pad = (y0.abs() * 1e-6).max(1e-12);
        y0 -= pad;
        y1 += pad;
    }
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);
    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>
<line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>
<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>
"#,
        W / 2.0,
        series.title,
        H - MB,
        W - MR,
        H - MB,
        H - MB
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            px(xv),
            H - MB + 16.0,
            nice(xv),
            ML - 6.0,
            py(yv) + 4.0,
            nice(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (ML + W - MR) / 2.0,
        H - 10.0,
        series.x_label,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        series.y_label
    );
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(svg, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, path.join(" "));
    svg.push_str("</svg>\n");
    svg
}

fn write_plots(dir: &Path, traj: &Trajectory, toggles: &PlotToggles) -> Result<()> {
    type Getter = fn(&flow_engine::FunctionalRecord) -> f64;
    let quantities: [(&str, &str, bool, Getter); 5] = [
        ("area", "A", toggles.area, |r| r.area),
        ("omega_p", "Ω_p", toggles.omega_p, |r| r.omega_p),
        ("ratio", "Ω_p^(2+p) / A^(2−p)", toggles.ratio, |r| r.p_ratio),
        ("santalo", "A·A°", toggles.santalo, |r| r.santalo),
        ("hausdorff", "Hausdorff distance to circle", toggles.hausdorff, |r| r.hausdorff_circle),
    ];
    let ys_of = |g: Getter| traj.records.iter().map(g).collect::<Vec<f64>>();
    let ts: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
    let taus: Vec<f64> = traj.records.iter().map(|r| r.tau).collect();
    for (name, label, on, get) in quantities {
        if !on {
            continue;
        }
        for (suffix, axis, xs) in [("t", "t", &ts), ("tau", "τ", &taus)] {
            let svg = svg_line_plot(&Series {
                title: &format!("{label} vs {axis}"),
                x_label: axis,
                y_label: label,
                xs: xs.clone(),
                ys: ys_of(get),
            });
            write_file(&dir.join(format!("plot_{name}_{suffix}.svg")), &svg)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_circle() {
        let g = AngularGrid::new(64).unwrap();
        let b = generate_random_body(&RandomBodySpec { amplitude: 0.0, ..Default::default() }, &g).unwrap();
        assert!(b.support().values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn random_body_reproducible_and_margin() {
        let g = AngularGrid::new(256).unwrap();
        let spec = RandomBodySpec { seed: 7, ..Default::default() };
        let a = generate_random_body(&spec, &g).unwrap();
        let b = generate_random_body(&spec, &g).unwrap();
        assert_eq!(a, b);
        assert!(a.radius_of_curvature().min() >= spec.delta);
        assert!(a.support().is_symmetric());
    }

    #[test]
    fn oversized_amplitudes_give_up() {
        let g = AngularGrid::new(64).unwrap();
        let spec = RandomBodySpec { amplitude: 5.0, decay: 0.0, ..Default::default() };
        assert!(matches!(generate_random_body(&spec, &g), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn builtin_names() {
        let g = AngularGrid::new(256).unwrap();
        assert!((builtin_body("circle:2", &g).unwrap().area() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((builtin_body("ellipse:2:0.5", &g).unwrap().area() - std::f64::consts::PI).abs() < 1e-10);
        let f = builtin_body("fourier:1,0.05,0,0.01,0.005", &g).unwrap();
        assert!((f.support().values()[0] - 1.06).abs() < 1e-12);
        assert!(builtin_body("square", &g).is_err());
        assert!(builtin_body("fourier:1,0.1", &g).is_err());
        assert!(builtin_body("ellipse:1:x", &g).is_err());
    }

    #[test]
    fn config_roundtrip_and_unknown_check() {
        let cfg = ExperimentConfig {
            checks: vec!["all".into()],
            body: BodySource::Random(RandomBodySpec { seed: 42, ..Default::default() }),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        let bad = r#"{"checks": ["nope"]}"#;
        assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::InvalidArgument(_))));
        assert!(ExperimentConfig::from_json(r#"{"colour": 1}"#).is_err());
    }

    #[test]
    fn plot_is_wellformed() {
        let svg = svg_line_plot(&Series {
            title: "x",
            x_label: "t",
            y_label: "y",
            xs: vec![0.0, 1.0, 2.0],
            ys: vec![1.0, f64::NAN, 3.0],
        });
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polyline"));
    }
}
