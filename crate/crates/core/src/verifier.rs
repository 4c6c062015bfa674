//! Executable checks of monotone quantities, evolution identities,
//! isoperimetric inequalities, flow duality and convergence.
//!
//! Every check reduces to a list of signed margins; a check passes when the
//! smallest margin is at least `−tolerance`. Margin conventions:
//!
//! * monotone quantities: relative increment between consecutive records;
//! * identities: minus the relative error;
//! * inequalities: `(lhs − rhs)/scale`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::affine_frame::min_length_normalize;
use crate::circle_field::PeriodicField;
use crate::convex_body::{hausdorff_distance, SupportBody, AFFINE_DENOISE};
use crate::error::{invalid, Result};
use crate::flow_engine::{self, FlowFamily, FlowSpec, FlowState, Trajectory};

/// Where the worst margin of a check occurred.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl Location {
    pub fn at_time(t: f64) -> Self {
        Self { t: Some(t), theta: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_margin: f64,
    pub location: Location,
    pub tolerance: f64,
    /// Number of margins that entered the check.
    pub samples: usize,
    /// Auxiliary measured values.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    /// Builds a report from `(margin, location)` pairs; NaN margins count as failures.
    pub fn from_margins(
        name: impl Into<String>,
        tolerance: f64,
        margins: impl IntoIterator<Item = (f64, Location)>,
    ) -> Self {
        let mut worst = f64::INFINITY;
        let mut location = Location::default();
        let mut samples = 0;
        for (m, loc) in margins {
            samples += 1;
            let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
            if m < worst {
                worst = m;
                location = loc;
            }
        }
        Self {
            name: name.into(),
            passed: worst >= -tolerance,
            worst_margin: worst,
            location,
            tolerance,
            samples,
            metrics: BTreeMap::new(),
            note: None,
        }
    }

    /// Re-evaluates `passed` against another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.worst_margin >= -tolerance;
        self
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Aggregate of several reports.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub passed: bool,
    pub failed: Vec<String>,
    pub reports: Vec<CheckReport>,
}

impl SuiteSummary {
    pub fn new(reports: Vec<CheckReport>) -> Self {
        let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
        Self { passed: failed.is_empty(), failed, reports }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

pub const MONOTONE_TOL: f64 = 1e-8;
pub const MIN_SPEED_TOL: f64 = 1e-7;
pub const AREA_IDENTITY_TOL: f64 = 1e-4;
pub const OMEGA_EVOLUTION_TOL: f64 = 1e-3;
pub const SIGMA_EVOLUTION_TOL: f64 = 1e-2;
pub const STRONG_ISOPERIMETRIC_TOL: f64 = 1e-4;
pub const DUALITY_TOL: f64 = 1e-4;
pub const CONVERGENCE_HAUSDORFF: f64 = 1e-3;
pub const CONVERGENCE_SIGMA: f64 = 1e-2;
pub const CONVERGENCE_SANTALO: f64 = 1e-4;
pub const DECAY_FRACTION: f64 = 0.05;

fn require_contracting(traj: &Trajectory, check: &str) -> Result<()> {
    if traj.spec.family == FlowFamily::Contracting {
        Ok(())
    } else {
        Err(invalid(format!("{check} needs a contracting trajectory")))
    }
}

fn increments(
    name: &str,
    tol: f64,
    traj: &Trajectory,
    value: impl Fn(&flow_engine::FunctionalRecord) -> f64,
) -> CheckReport {
    let margins = traj.records.windows(2).map(|w| {
        let (a, b) = (value(&w[0]), value(&w[1]));
        ((b - a) / a.abs().max(1e-300), Location::at_time(w[1].t))
    });
    let report = CheckReport::from_margins(name, tol, margins);
    let first = traj.records.first().map(&value).unwrap_or(f64::NAN);
    let last = traj.records.last().map(&value).unwrap_or(f64::NAN);
    let (lo, hi) = traj
        .records
        .iter()
        .map(&value)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    report
        .metric("first", first)
        .metric("last", last)
        .metric("relative_variation", (hi - lo) / first.abs().max(1e-300))
}

/// `Ω_p^{2+p}/A^{2−p}` is nondecreasing along the contracting flow.
pub fn check_monotone_ratio(traj: &Trajectory) -> Result<CheckReport> {
    require_contracting(traj, "monotone_ratio")?;
    Ok(increments("monotone_ratio", MONOTONE_TOL, traj, |r| r.p_ratio))
}

/// `min_θ s^q κ₀^{p/(p+2)}` is nondecreasing for `q = 0` or `1 ≤ q ≤ 2p/(p+1)`.
pub fn check_min_speed_monotone(traj: &Trajectory, q: f64) -> Result<CheckReport> {
    require_contracting(traj, "min_speed_monotone")?;
    let p = traj.spec.p;
    let upper = 2.0 * p / (p + 1.0);
    let admissible = q == 0.0 || (q >= 1.0 - 1e-12 && q <= upper + 1e-12);
    if !admissible {
        return Err(invalid(format!("q = {q} outside {{0}} ∪ [1, {upper}]")));
    }
    let idx = traj
        .spec
        .q_list()
        .iter()
        .position(|&w| (w - q).abs() <= 1e-12)
        .ok_or_else(|| invalid(format!("q = {q} is not among the recorded exponents")))?;
    Ok(increments(&format!("min_speed_monotone[q={q}]"), MIN_SPEED_TOL, traj, |r| r.q_minima[idx]))
}

/// Weights of the three-point derivative at the middle of `t0 < t1 < t2`.
fn central_weights(t0: f64, t1: f64, t2: f64) -> [f64; 3] {
    let (h1, h2) = (t1 - t0, t2 - t1);
    [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))]
}

/// `dA/dt = −Ω_p`, compared by central differences over the records while `A ≥ A(0)/100`.
pub fn check_area_identity(traj: &Trajectory) -> Result<CheckReport> {
    require_contracting(traj, "area_identity")?;
    let rec = &traj.records;
    if rec.len() < 3 {
        return Err(invalid("area_identity needs at least three records"));
    }
    let cutoff = rec[0].area * 1e-2;
    let margins: Vec<_> = rec
        .windows(3)
        .filter(|w| w[2].area >= cutoff)
        .map(|w| {
            let c = central_weights(w[0].t, w[1].t, w[2].t);
            let da = c[0] * w[0].area + c[1] * w[1].area + c[2] * w[2].area;
            let err = (da + w[1].omega_p).abs() / w[1].omega_p;
            (-err, Location::at_time(w[1].t))
        })
        .collect();
    if margins.is_empty() {
        return Err(invalid("area_identity: no records away from extinction"));
    }
    Ok(CheckReport::from_margins("area_identity", AREA_IDENTITY_TOL, margins))
}

/// Consecutive snapshot triples `(prev, mid, next)`.
fn triples(traj: &Trajectory) -> Result<Vec<[&FlowState; 3]>> {
    let out: Vec<[&FlowState; 3]> = traj
        .snapshot_bursts()
        .into_iter()
        .flat_map(|b| b.windows(3).map(|w| [&w[0], &w[1], &w[2]]).collect::<Vec<_>>())
        .collect();
    if out.is_empty() {
        Err(invalid("check needs bursts of at least three consecutive snapshots"))
    } else {
        Ok(out)
    }
}

fn time_derivative(tr: [&FlowState; 3], f: impl Fn(&SupportBody) -> f64) -> f64 {
    let c = central_weights(tr[0].t, tr[1].t, tr[2].t);
    c[0] * f(&tr[0].body) + c[1] * f(&tr[1].body) + c[2] * f(&tr[2].body)
}

/// σ (denoised), σ_𝔰 and the affine arclength density g of a body.
struct AffineData {
    sigma: PeriodicField,
    sigma_s: PeriodicField,
    g: PeriodicField,
}

impl AffineData {
    fn new(b: &SupportBody) -> Self {
        let sigma = b.affine_support().denoise(AFFINE_DENOISE);
        let sigma_s = b.affine_derivative(&sigma);
        Self { sigma, sigma_s, g: b.affine_arclength_density() }
    }

    /// `∫ σ^e (σ_𝔰)^{2k} d𝔰` for `k ∈ {0, 1}`.
    fn integral(&self, e: f64, with_slope: bool) -> f64 {
        let v: Vec<f64> = self
            .sigma
            .values()
            .iter()
            .zip(self.sigma_s.values())
            .zip(self.g.values())
            .map(|((&s, &ds), &g)| s.powf(e) * if with_slope { ds * ds } else { 1.0 } * g)
            .collect();
        v.iter().sum::<f64>() * self.sigma.grid().spacing()
    }
}

/// Right side of the general `Ω_l` evolution under the contracting p-flow, as two terms.
fn omega_rate_terms(b: &SupportBody, p: f64, l: f64) -> (f64, f64) {
    let data = AffineData::new(b);
    let (a, c) = (3.0 * p / (p + 2.0), 3.0 * l / (l + 2.0));
    let first = 2.0 * (l - 2.0) / (l + 2.0) * data.integral(1.0 - a - c, false);
    let second = 18.0 * p * l / ((l + 2.0).powi(2) * (p + 2.0)) * data.integral(-a - c, true);
    (first, second)
}

/// Finite-difference `dΩ_l/dt` against the closed-form right side at every snapshot triple.
pub fn check_omega_evolution(traj: &Trajectory, l: f64) -> Result<CheckReport> {
    require_contracting(traj, "omega_evolution")?;
    if !(l >= 1.0) {
        return Err(invalid(format!("omega_evolution needs l >= 1, got {l}")));
    }
    let p = traj.spec.p;
    let mut margins = Vec::new();
    for tr in triples(traj)? {
        let lhs = time_derivative(tr, |b| b.p_affine_length_unchecked(l));
        let (first, second) = omega_rate_terms(&tr[1].body, p, l);
        let rhs = first + second;
        // Natural rate scale: the first integral without its (possibly vanishing) coefficient.
        let data = AffineData::new(&tr[1].body);
        let (a, c) = (3.0 * p / (p + 2.0), 3.0 * l / (l + 2.0));
        let scale = lhs.abs().max(rhs.abs()).max(data.integral(1.0 - a - c, false));
        margins.push((-(lhs - rhs).abs() / scale, Location::at_time(tr[1].t)));
    }
    Ok(CheckReport::from_margins(format!("omega_evolution[l={l}]"), OMEGA_EVOLUTION_TOL, margins))
}

/// `∂σ/∂t` at fixed normal angle predicted from σ alone.
///
/// The affine-parametrized evolution of σ is transported to fixed θ through
/// the tangential velocity `θ_t = (σ^{α} r^{−4/3} r_θ/3 + F_θ)/r`.
pub fn sigma_rate(b: &SupportBody, p: f64) -> PeriodicField {
    let q = p / (p + 2.0);
    let alpha = 1.0 - 3.0 * q;
    let data = AffineData::new(b);
    let sigma_ss = b.affine_derivative(&data.sigma_s.denoise(AFFINE_DENOISE));
    let r = b.radius_of_curvature();
    let r_theta = r.differentiate(1).expect("order 1");
    let f = b
        .support()
        .zip_map(r, |s, r| ((1.0 - 3.0 * q) * s.ln() - q * r.ln()).exp());
    let f_theta = f.differentiate(1).expect("order 1");
    let sigma_theta = data.sigma.differentiate(1).expect("order 1");
    let n = b.grid().n();
    let values = (0..n)
        .map(|i| {
            let sg = data.sigma.values()[i];
            let ds = data.sigma_s.values()[i];
            let affine = sg.powf(alpha)
                * (-4.0 / 3.0 + (q + 1.0) * alpha * ds * ds / sg + q * sigma_ss.values()[i]);
            let ri = r.values()[i];
            let v_perp = sg.powf(alpha) * ri.powf(-4.0 / 3.0) * r_theta.values()[i] / 3.0;
            let theta_t = (v_perp + f_theta.values()[i]) / ri;
            affine - sigma_theta.values()[i] * theta_t
        })
        .collect();
    PeriodicField::new(b.grid().clone(), values).expect("grid size matches")
}

/// Nodewise finite-difference `∂σ/∂t` against [`sigma_rate`], sup-norm relative error.
pub fn check_sigma_evolution(traj: &Trajectory) -> Result<CheckReport> {
    require_contracting(traj, "sigma_evolution")?;
    let p = traj.spec.p;
    let mut margins = Vec::new();
    for tr in triples(traj)? {
        let c = central_weights(tr[0].t, tr[1].t, tr[2].t);
        let sig: Vec<PeriodicField> = tr.iter().map(|s| s.body.affine_support()).collect();
        let fd = sig[0].scale(c[0]).add(&sig[1].scale(c[1])).add(&sig[2].scale(c[2]));
        let predicted = sigma_rate(&tr[1].body, p);
        let diff = fd.sub(&predicted);
        let scale = fd.sup_norm().max(predicted.sup_norm());
        let i = diff.values().iter().map(|v| v.abs()).enumerate().fold((0, 0.0), |a, (i, v)| if v > a.1 { (i, v) } else { a }).0;
        let loc = Location { t: Some(tr[1].t), theta: Some(tr[1].body.grid().node(i)) };
        margins.push((-diff.sup_norm() / scale, loc));
    }
    Ok(CheckReport::from_margins("sigma_evolution", SIGMA_EVOLUTION_TOL, margins))
}

/// Coefficient of the slope integral in the strong isoperimetric inequality.
pub fn strong_isoperimetric_coefficient(p: f64) -> f64 {
    let c = 18.0 * p * p / (p + 2.0).powi(3);
    if p <= 2.0 {
        (p - 1.0) * c
    } else {
        c
    }
}

/// Coefficient of the slope integral in the `Ω_l` inequality along the affine normal flow.
pub fn l_lemma_coefficient(l: f64) -> f64 {
    if l <= 2.0 {
        2.0 * (l - 1.0) * (4.0 * l * l + 3.0 * l + 2.0) / (l + 2.0).powi(3)
    } else {
        6.0 * l / (l + 2.0).powi(2)
    }
}

/// Exponents l checked against the affine-normal-flow inequality when p = 1.
pub const L_LEMMA_EXPONENTS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

/// `dΩ_p/dt ≥ ((p−2)/(p+2)) Ω_p²/A + c(p) ∫σ^{−6p/(p+2)} σ_𝔰² d𝔰` at every snapshot triple;
/// for p = 1 also the `Ω_l Ω₁/A` family of inequalities.
pub fn check_strong_isoperimetric(traj: &Trajectory) -> Result<CheckReport> {
    require_contracting(traj, "strong_isoperimetric")?;
    let p = traj.spec.p;
    let c_p = strong_isoperimetric_coefficient(p);
    let mut margins = Vec::new();
    let mut worst_gap = 0.0f64;
    for tr in triples(traj)? {
        let b = &tr[1].body;
        let data = AffineData::new(b);
        let area = b.area();
        let omega = b.p_affine_length_unchecked(p);
        let lhs = time_derivative(tr, |b| b.p_affine_length_unchecked(p));
        let rhs = (p - 2.0) / (p + 2.0) * omega * omega / area
            + c_p * data.integral(-6.0 * p / (p + 2.0), true);
        let scale = omega * omega / area;
        worst_gap = worst_gap.max((lhs - rhs).abs() / scale);
        margins.push(((lhs - rhs) / scale, Location::at_time(tr[1].t)));
        if p == 1.0 {
            let omega_1 = omega;
            for l in L_LEMMA_EXPONENTS {
                let lhs = time_derivative(tr, |b| b.p_affine_length_unchecked(l));
                let omega_l = b.p_affine_length_unchecked(l);
                let rhs = (l - 2.0) / (l + 2.0) * omega_l * omega_1 / area
                    + l_lemma_coefficient(l) * data.integral(-1.0 - 3.0 * l / (l + 2.0), true);
                let scale = omega_l * omega_1 / area;
                margins.push(((lhs - rhs) / scale, Location::at_time(tr[1].t)));
            }
        }
    }
    Ok(CheckReport::from_margins("strong_isoperimetric", STRONG_ISOPERIMETRIC_TOL, margins)
        .metric("max_relative_gap", worst_gap))
}

/// Number of comparison times used by [`check_duality`].
pub const DUALITY_SAMPLES: usize = 10;

/// Polar of the contracting flow against the expanding flow of the polar body on a shared t-grid.
pub fn check_duality(initial: &SupportBody, p: f64, horizon: f64) -> Result<CheckReport> {
    if !(horizon > 0.0) {
        return Err(invalid(format!("duality horizon must be positive, got {horizon}")));
    }
    let contract = FlowSpec::new(FlowFamily::Contracting, p);
    let expand = FlowSpec::new(FlowFamily::Expanding, p);
    contract.validate()?;
    let mut inner = FlowState::initial(initial.clone());
    let mut outer = FlowState::initial(initial.polar_dual()?);
    let mut margins = Vec::new();
    let mut reached = 0.0;
    let mut note = None;
    for k in 1..=DUALITY_SAMPLES {
        let t = horizon * k as f64 / DUALITY_SAMPLES as f64;
        let step = flow_engine::advance_to(&inner, &contract, t)
            .and_then(|i| flow_engine::advance_to(&outer, &expand, t).map(|o| (i, o)));
        match step {
            Ok((i, o)) => {
                inner = i;
                outer = o;
            }
            Err(e) => {
                note = Some(format!("window shortened at t = {reached}: {e}"));
                break;
            }
        }
        if inner.body.area() < contract.area_floor || outer.body.area() > expand.area_ceiling {
            note = Some(format!("window shortened at t = {t}: flow left the area bounds"));
            break;
        }
        let dual = inner.body.polar_dual()?;
        let gap = hausdorff_distance(&dual, &outer.body)?;
        margins.push((-gap, Location::at_time(t)));
        reached = t;
    }
    let mut report = CheckReport::from_margins("duality", DUALITY_TOL, margins).metric("window", reached);
    if let Some(n) = note {
        report = report.noted(n);
    }
    Ok(report)
}

/// Metrics of the normalized flow at one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceMetrics {
    pub hausdorff: f64,
    pub sigma_deviation: f64,
    pub santalo_gap: f64,
}

impl ConvergenceMetrics {
    pub fn of(body: &SupportBody) -> Result<Self> {
        let (_, normalized) = min_length_normalize(body)?;
        let unit = SupportBody::circle(body.grid(), 1.0)?;
        let sigma = body.affine_support();
        Ok(Self {
            hausdorff: hausdorff_distance(&normalized, &unit)?,
            sigma_deviation: sigma.map(|v| v - 1.0).sup_norm(),
            santalo_gap: PI * PI - body.area() * body.polar_dual()?.area(),
        })
    }

    /// Smallest relative slack to the thresholds; nonnegative when all are met.
    pub fn margin(&self) -> f64 {
        [
            (CONVERGENCE_HAUSDORFF - self.hausdorff) / CONVERGENCE_HAUSDORFF,
            (CONVERGENCE_SIGMA - self.sigma_deviation) / CONVERGENCE_SIGMA,
            (CONVERGENCE_SANTALO - self.santalo_gap) / CONVERGENCE_SANTALO,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

pub const CONVERGENCE_BUDGET: usize = 200_000;
const CONVERGENCE_PROBE_EVERY: usize = 250;

pub fn check_convergence(initial: &SupportBody, p: f64) -> Result<CheckReport> {
    check_convergence_within(initial, p, CONVERGENCE_BUDGET)
}

/// Runs the normalized flow until the Hausdorff, σ̃ and Santaló thresholds hold or the step budget is spent.
pub fn check_convergence_within(initial: &SupportBody, p: f64, max_steps: usize) -> Result<CheckReport> {
    if !(p > 1.0) {
        return Err(invalid(format!("convergence check needs p > 1, got {p}")));
    }
    let spec = FlowSpec::new(FlowFamily::Normalized, p);
    let mut state = FlowState::initial(flow_engine::normalize_body(initial)?);
    let mut metrics = ConvergenceMetrics::of(&state.body)?;
    let mut note = None;
    while metrics.margin() < 0.0 && state.step_count < max_steps {
        for _ in 0..CONVERGENCE_PROBE_EVERY {
            match flow_engine::step(&state, &spec) {
                Ok(next) => state = next,
                Err(e) => {
                    note = Some(format!("flow stopped: {e}"));
                    break;
                }
            }
        }
        metrics = ConvergenceMetrics::of(&state.body)?;
        if note.is_some() {
            break;
        }
    }
    let mut report = CheckReport::from_margins("convergence", 0.0, [(metrics.margin(), Location::at_time(state.tau))])
        .metric("hausdorff", metrics.hausdorff)
        .metric("sigma_deviation", metrics.sigma_deviation)
        .metric("santalo_gap", metrics.santalo_gap)
        .metric("tau", state.tau)
        .metric("steps", state.step_count as f64);
    if let Some(n) = note {
        report = report.noted(n);
    } else if !report.passed {
        report = report.noted(format!("step budget of {max_steps} exhausted"));
    }
    Ok(report)
}

/// `A·A°` nondecreasing and never above π².
pub fn check_santalo_monotone(traj: &Trajectory) -> Result<CheckReport> {
    let inc = increments("santalo_monotone", MONOTONE_TOL, traj, |r| r.santalo);
    let bound = traj
        .records
        .iter()
        .map(|r| (PI * PI - r.santalo, Location::at_time(r.t)))
        .fold((f64::INFINITY, Location::default()), |a, x| if x.0 < a.0 { x } else { a });
    let mut report = inc;
    if bound.0 < report.worst_margin {
        report.worst_margin = bound.0;
        report.location = bound.1;
    }
    report.samples += traj.records.len();
    report.passed = report.worst_margin >= -report.tolerance;
    Ok(report.metric("bound_margin", bound.0))
}

/// Length and `Ω_l` (l = (2p+2)/(p+3)) fall below 5% of their initial values, and
/// `max κ ≤ (4/ρ)(1 + 1e-2)` while `min s ≥ ρ = min s(0)/2`.
pub fn check_decay_diagnostics(traj: &Trajectory) -> Result<CheckReport> {
    require_contracting(traj, "decay_diagnostics")?;
    let rec = &traj.records;
    let (first, last) = match (rec.first(), rec.last()) {
        (Some(f), Some(l)) if rec.len() >= 2 => (f, l),
        _ => return Err(invalid("decay_diagnostics needs at least two records")),
    };
    let length_ratio = last.length / first.length;
    let omega_ratio = last.omega_l / first.omega_l;
    let rho = first.s_min / 2.0;
    let bound = 4.0 / rho * (1.0 + 1e-2);
    let mut margins = vec![
        ((DECAY_FRACTION - length_ratio) / DECAY_FRACTION, Location::at_time(last.t)),
        ((DECAY_FRACTION - omega_ratio) / DECAY_FRACTION, Location::at_time(last.t)),
    ];
    let mut kappa_peak = 0.0f64;
    for r in rec.iter().take_while(|r| r.s_min >= rho) {
        kappa_peak = kappa_peak.max(r.kappa_max);
        margins.push(((bound - r.kappa_max) / bound, Location::at_time(r.t)));
    }
    Ok(CheckReport::from_margins("decay_diagnostics", 0.0, margins)
        .metric("length_ratio", length_ratio)
        .metric("omega_l_ratio", omega_ratio)
        .metric("kappa_peak", kappa_peak)
        .metric("kappa_bound", bound))
}
