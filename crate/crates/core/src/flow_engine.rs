//! Time integration of the contracting, expanding and area-normalized
//! p-centro-affine flows written as scalar parabolic equations for the
//! support function:
//!
//! * contracting: `∂s/∂t = −s^{1−3p/(p+2)} r^{−p/(p+2)}`
//! * expanding:   `∂s/∂t =  s^{1+3p/(p+2)} r^{p/(p+2)}`
//! * normalized:  `∂s/∂τ = −s κ₀^{p/(p+2)} + s Ω_p/(2π)` on bodies of area π
//!
//! Steps are classical four-stage Runge–Kutta with a step size bounded by the
//! linearized diffusion coefficient of the speed in `r`.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circle_field::PeriodicField;
use crate::convex_body::SupportBody;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowFamily {
    Contracting,
    Expanding,
    Normalized,
}

/// Flow family, exponent, step control and stop conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSpec {
    pub family: FlowFamily,
    pub p: f64,
    pub dt_safety: f64,
    pub area_floor: f64,
    pub area_ceiling: f64,
    pub max_steps: usize,
    pub record_every: usize,
    /// Capture a burst of consecutive states every this many steps (0 disables).
    pub snapshot_every: usize,
    /// Number of consecutive states per snapshot burst; 3 allows central differences.
    pub snapshot_burst: usize,
    /// Accepted steps must keep `min r` at or above this value.
    pub convexity_floor: f64,
    /// Exponents q for the recorded `min_θ s^q κ₀^{p/(p+2)}`; empty selects `{0, 1, 2p/(p+1)}`.
    pub watch_q: Vec<f64>,
    /// Stop once `t` (or `τ` for the normalized family) reaches this value.
    pub horizon: Option<f64>,
}

impl Default for FlowSpec {
    fn default() -> Self {
        Self {
            family: FlowFamily::Contracting,
            p: 1.0,
            dt_safety: 0.4,
            area_floor: 1e-4 * PI,
            area_ceiling: 1e4 * PI,
            max_steps: 2_000_000,
            record_every: 10,
            snapshot_every: 0,
            snapshot_burst: 3,
            convexity_floor: 1e-10,
            watch_q: Vec::new(),
            horizon: None,
        }
    }
}

impl FlowSpec {
    pub fn new(family: FlowFamily, p: f64) -> Self {
        Self { family, p, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(invalid(format!("flow exponent must satisfy p >= 1, got {}", self.p)));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(invalid(format!("dt_safety must lie in (0, 1], got {}", self.dt_safety)));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be at least 1"));
        }
        if !(self.area_floor >= 0.0 && self.area_ceiling > self.area_floor) {
            return Err(invalid("need 0 <= area_floor < area_ceiling"));
        }
        if self.snapshot_every > 0 && self.snapshot_burst == 0 {
            return Err(invalid("snapshot_burst must be at least 1"));
        }
        Ok(())
    }

    /// `p/(p+2)`, the exponent of κ₀ in the speed.
    #[inline]
    pub fn speed_exponent(&self) -> f64 {
        self.p / (self.p + 2.0)
    }

    /// Exponents q tracked in every record.
    pub fn q_list(&self) -> Vec<f64> {
        let mut qs = if self.watch_q.is_empty() {
            vec![0.0, 1.0, 2.0 * self.p / (self.p + 1.0)]
        } else {
            self.watch_q.clone()
        };
        qs.dedup();
        qs
    }

    /// The exponent `l = (2p+2)/(p+3)` whose affine length is tracked as a decay diagnostic.
    pub fn watch_l(&self) -> f64 {
        (2.0 * self.p + 2.0) / (self.p + 3.0)
    }
}

fn check_p(p: f64) -> Result<f64> {
    if p >= 1.0 && p.is_finite() {
        Ok(p / (p + 2.0))
    } else {
        Err(invalid(format!("flow exponent must satisfy p >= 1, got {p}")))
    }
}

/// Magnitude of the inward normal speed `s^{1−3q} r^{−q}`, `q = p/(p+2)`.
pub fn speed_contracting(b: &SupportBody, p: f64) -> Result<PeriodicField> {
    let q = check_p(p)?;
    let (es, er) = (1.0 - 3.0 * q, -q);
    Ok(b.support()
        .zip_map(b.radius_of_curvature(), |s, r| (es * s.ln() + er * r.ln()).exp()))
}

/// Outward normal speed `s^{1+3q} r^{q}` of the expanding flow.
pub fn speed_expanding(b: &SupportBody, p: f64) -> Result<PeriodicField> {
    let q = check_p(p)?;
    let (es, er) = (1.0 + 3.0 * q, q);
    Ok(b.support()
        .zip_map(b.radius_of_curvature(), |s, r| (es * s.ln() + er * r.ln()).exp()))
}

/// Signed speed `−s κ₀^{q} + s Ω_p/(2π)` of the area-normalized flow.
pub fn speed_normalized(b: &SupportBody, p: f64) -> Result<PeriodicField> {
    check_p(p)?;
    let area = b.area();
    if ((area - PI) / PI).abs() > 1e-8 {
        return Err(invalid(format!("normalized speed needs area π, got {area}")));
    }
    let f = speed_contracting(b, p)?;
    let omega = f.mul(b.radius_of_curvature()).integrate();
    Ok(f.zip_map(b.support(), |f, s| -f + s * omega / TAU))
}

/// Explicit step bound `dt_safety · 2 / (D_max k_max²)` with `k_max = n/2`.
pub fn stable_dt(b: &SupportBody, spec: &FlowSpec) -> f64 {
    let q = spec.speed_exponent();
    let (es, er) = match spec.family {
        FlowFamily::Contracting | FlowFamily::Normalized => (1.0 - 3.0 * q, -q - 1.0),
        FlowFamily::Expanding => (1.0 + 3.0 * q, q - 1.0),
    };
    let d_max = b
        .support()
        .values()
        .iter()
        .zip(b.radius_of_curvature().values())
        .map(|(&s, &r)| q * (es * s.ln() + er * r.ln()).exp())
        .fold(0.0, f64::max);
    let k_max = (b.grid().n() / 2) as f64;
    spec.dt_safety * 2.0 / (d_max * k_max * k_max)
}

/// Rescales a body to area π.
pub fn normalize_body(b: &SupportBody) -> Result<SupportBody> {
    b.scaled((PI / b.area()).sqrt())
}

/// One point of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub body: SupportBody,
    /// Flow time of the unnormalized evolution.
    pub t: f64,
    /// Normalized time `τ = ∫ (π/A)^{2p/(p+2)} dt`.
    pub tau: f64,
    pub step_count: usize,
    /// Area of the unnormalized body; differs from `body.area()` only for the normalized family.
    pub physical_area: f64,
}

impl FlowState {
    pub fn initial(body: SupportBody) -> Self {
        let physical_area = body.area();
        Self { body, t: 0.0, tau: 0.0, step_count: 0, physical_area }
    }

    /// Time coordinate the family integrates in.
    pub fn clock(&self, family: FlowFamily) -> f64 {
        match family {
            FlowFamily::Normalized => self.tau,
            _ => self.t,
        }
    }
}

/// Evaluates `ds/dt` (or `ds/dτ`) on raw support values; fails when `r ≤ 0`.
fn velocity(s: &PeriodicField, family: FlowFamily, q: f64) -> Result<PeriodicField> {
    let r = s.radius_operator();
    let min_r = r.min();
    if !(min_r > 0.0) || s.min() <= 0.0 {
        let nodes = r.values().iter().enumerate().filter(|(_, &v)| v <= 0.0).map(|(i, _)| i).collect();
        return Err(Error::ConvexityViolation { nodes, min_radius: min_r });
    }
    let sv = s.values();
    let rv = r.values();
    let out: Vec<f64> = match family {
        FlowFamily::Contracting => sv
            .iter()
            .zip(rv)
            .map(|(&s, &r)| -((1.0 - 3.0 * q) * s.ln() - q * r.ln()).exp())
            .collect(),
        FlowFamily::Expanding => sv
            .iter()
            .zip(rv)
            .map(|(&s, &r)| ((1.0 + 3.0 * q) * s.ln() + q * r.ln()).exp())
            .collect(),
        FlowFamily::Normalized => {
            let f: Vec<f64> = sv
                .iter()
                .zip(rv)
                .map(|(&s, &r)| ((1.0 - 3.0 * q) * s.ln() - q * r.ln()).exp())
                .collect();
            let h = s.grid().spacing();
            let omega: f64 = h * f.iter().zip(rv).map(|(f, r)| f * r).sum::<f64>();
            f.iter().zip(sv).map(|(&f, &s)| -f + s * omega / TAU).collect()
        }
    };
    Ok(s.with_values(out))
}

fn axpy(s: &PeriodicField, a: f64, k: &PeriodicField) -> PeriodicField {
    s.zip_map(k, |x, y| x + a * y)
}

fn rk4(s: &PeriodicField, dt: f64, family: FlowFamily, q: f64) -> Result<PeriodicField> {
    let k1 = velocity(s, family, q)?;
    let k2 = velocity(&axpy(s, 0.5 * dt, &k1), family, q)?;
    let k3 = velocity(&axpy(s, 0.5 * dt, &k2), family, q)?;
    let k4 = velocity(&axpy(s, dt, &k3), family, q)?;
    let vals = s
        .values()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            x + dt / 6.0
                * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i])
        })
        .collect();
    Ok(s.with_values(vals))
}

/// Number of step halvings before a convexity failure is declared.
const MAX_HALVINGS: u32 = 10;

/// One explicit Runge–Kutta step of size `min(stable_dt, budget)`.
pub fn step(state: &FlowState, spec: &FlowSpec) -> Result<FlowState> {
    step_capped(state, spec, f64::INFINITY)
}

/// One step whose size is additionally capped by `max_dt`.
pub fn step_capped(state: &FlowState, spec: &FlowSpec, max_dt: f64) -> Result<FlowState> {
    let q = check_p(spec.p)?;
    let dt_stable = stable_dt(&state.body, spec);
    let mut dt = dt_stable.min(max_dt);
    if !(dt > 0.0) {
        return Err(invalid(format!("non-positive step size {dt}")));
    }
    let dt_min = dt_stable * 0.5f64.powi(MAX_HALVINGS as i32);
    loop {
        let last_err;
        match rk4(state.body.support(), dt, spec.family, q).and_then(|s| SupportBody::new(s.symmetrize())) {
            Ok(body) if body.radius_of_curvature().min() >= spec.convexity_floor => {
                return Ok(finish_step(state, body, dt, spec));
            }
            Ok(body) => {
                last_err = Some(Error::ConvexityViolation {
                    nodes: Vec::new(),
                    min_radius: body.radius_of_curvature().min(),
                })
            }
            Err(e) => last_err = Some(e),
        }
        dt *= 0.5;
        if dt < dt_min {
            let detail = last_err.map(|e| e.to_string()).unwrap_or_default();
            return Err(Error::Numeric(format!(
                "convexity failure at step {} (t = {}): {detail}",
                state.step_count, state.t
            )));
        }
    }
}

fn finish_step(state: &FlowState, body: SupportBody, dt: f64, spec: &FlowSpec) -> FlowState {
    let gamma = 2.0 * spec.p / (spec.p + 2.0);
    match spec.family {
        FlowFamily::Normalized => {
            let body = normalize_body(&body).expect("positive area");
            // d ln A / dτ = −Ω̃_p/π and dt = (A/π)^{2p/(p+2)} dτ for the unnormalized body.
            let q = spec.p;
            let om0 = state.body.p_affine_length_unchecked(q);
            let om1 = body.p_affine_length_unchecked(q);
            let a0 = state.physical_area;
            let a1 = a0 * (-(om0 + om1) * dt / TAU).exp();
            let dt_phys = 0.5 * dt * ((a0 / PI).powf(gamma) + (a1 / PI).powf(gamma));
            FlowState {
                body,
                t: state.t + dt_phys,
                tau: state.tau + dt,
                step_count: state.step_count + 1,
                physical_area: a1,
            }
        }
        _ => {
            let a0 = state.body.area();
            let a1 = body.area();
            let dtau = 0.5 * dt * ((PI / a0).powf(gamma) + (PI / a1).powf(gamma));
            FlowState {
                body,
                t: state.t + dt,
                tau: state.tau + dtau,
                step_count: state.step_count + 1,
                physical_area: a1,
            }
        }
    }
}

/// Advances until the family's clock reaches `target`, landing on it exactly.
pub fn advance_to(state: &FlowState, spec: &FlowSpec, target: f64) -> Result<FlowState> {
    let mut cur = state.clone();
    while cur.clock(spec.family) < target {
        let remaining = target - cur.clock(spec.family);
        let mut next = step_capped(&cur, spec, remaining)?;
        if target - next.clock(spec.family) < 1e-14 * target.abs().max(1.0) {
            match spec.family {
                FlowFamily::Normalized => next.tau = target,
                _ => next.t = target,
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Scalar functionals recorded along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRecord {
    pub step: usize,
    pub t: f64,
    pub tau: f64,
    pub dt: f64,
    pub area: f64,
    pub dual_area: f64,
    pub length: f64,
    pub omega_p: f64,
    pub omega_1: f64,
    pub k0_min: f64,
    pub k0_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub santalo: f64,
    pub p_ratio: f64,
    /// `min_θ s^q κ₀^{p/(p+2)}` for each q of [`FlowSpec::q_list`].
    pub q_minima: Vec<f64>,
    /// `Ω_l` at `l = (2p+2)/(p+3)`.
    pub omega_l: f64,
    pub kappa_max: f64,
    pub s_min: f64,
    /// Sup-norm distance of the area-π rescaling to the unit circle.
    pub hausdorff_circle: f64,
    pub physical_area: f64,
}

impl FunctionalRecord {
    pub fn from_state(state: &FlowState, spec: &FlowSpec, dt: f64) -> Self {
        let b = &state.body;
        let p = spec.p;
        let e = spec.speed_exponent();
        let area = b.area();
        let dual_area = b.dual_area();
        let omega_p = b.p_affine_length_unchecked(p);
        let k0 = b.centro_affine_curvature();
        let sigma = b.affine_support();
        let q_minima = spec
            .q_list()
            .iter()
            .map(|&q| {
                b.support()
                    .zip_map(&k0, |s, k| (q * s.ln() + e * k.ln()).exp())
                    .min_refined()
                    .1
            })
            .collect();
        Self {
            step: state.step_count,
            t: state.t,
            tau: state.tau,
            dt,
            area,
            dual_area,
            length: b.euclid_length(),
            omega_p,
            omega_1: b.p_affine_length_unchecked(1.0),
            k0_min: k0.min_refined().1,
            k0_max: k0.max_refined().1,
            sigma_min: sigma.min_refined().1,
            sigma_max: sigma.max_refined().1,
            santalo: area * dual_area,
            p_ratio: omega_p.powf(2.0 + p) / area.powf(2.0 - p),
            q_minima,
            omega_l: b.p_affine_length_unchecked(spec.watch_l()),
            kappa_max: b.curvature().max_refined().1,
            s_min: b.support().min_refined().1,
            hausdorff_circle: {
                let c = (PI / area).sqrt();
                b.support().values().iter().fold(0.0, |m: f64, &v| m.max((c * v - 1.0).abs()))
            },
            physical_area: state.physical_area,
        }
    }

    pub fn csv_header(spec: &FlowSpec) -> String {
        let mut h = String::from(
            "t,tau,dt,A,A_dual,L,omega_p,omega_1,k0_min,k0_max,sigma_min,sigma_max,santalo,p_ratio",
        );
        for q in spec.q_list() {
            h.push_str(&format!(",qmin_{q}"));
        }
        h.push_str(",omega_l,kappa_max,s_min,hausdorff_circle,A_physical,step");
        h
    }

    pub fn csv_row(&self) -> String {
        let mut fields = vec![
            self.t,
            self.tau,
            self.dt,
            self.area,
            self.dual_area,
            self.length,
            self.omega_p,
            self.omega_1,
            self.k0_min,
            self.k0_max,
            self.sigma_min,
            self.sigma_max,
            self.santalo,
            self.p_ratio,
        ];
        fields.extend(&self.q_minima);
        fields.extend([self.omega_l, self.kappa_max, self.s_min, self.hausdorff_circle, self.physical_area]);
        let mut row: Vec<String> = fields.iter().map(|v| format!("{v:e}")).collect();
        row.push(self.step.to_string());
        row.join(",")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Extinction,
    Blowup,
    MaxSteps,
    ConvexityFailure,
    /// The configured horizon was reached.
    Horizon,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub spec: FlowSpec,
    pub records: Vec<FunctionalRecord>,
    pub snapshots: Vec<FlowState>,
    pub termination: Termination,
    /// Extrapolated extinction time (contracting runs that reached the area floor).
    pub extinction_estimate: Option<f64>,
    pub final_state: FlowState,
}

impl Trajectory {
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{}", FunctionalRecord::csv_header(&self.spec))?;
        for r in &self.records {
            writeln!(out, "{}", r.csv_row())?;
        }
        Ok(())
    }

    /// Groups of consecutive snapshots (by step index) of length at least 3.
    pub fn snapshot_bursts(&self) -> Vec<&[FlowState]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.snapshots.len() {
            let breaks = i == self.snapshots.len()
                || self.snapshots[i].step_count != self.snapshots[i - 1].step_count + 1;
            if breaks {
                if i - start >= 3 {
                    out.push(&self.snapshots[start..i]);
                }
                start = i;
            }
        }
        out
    }
}

/// Window of recent `(t, A)` samples kept for extinction extrapolation.
const TAIL_SAMPLES: usize = 64;

/// Extinction time from the tail of a contracting run. `A^{2p/(p+2)}` is
/// linear in t for homothetic solutions; lines fitted over the full window and
/// its second half are combined by first-order Richardson extrapolation in
/// the window length.
pub fn extrapolate_extinction(samples: &[(f64, f64)], p: f64) -> Option<f64> {
    if samples.len() < 4 {
        return None;
    }
    let gamma = 2.0 * p / (p + 2.0);
    let fit = |pts: &[(f64, f64)]| -> Option<f64> {
        let m = pts.len() as f64;
        let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
        let t0 = pts[pts.len() - 1].0;
        for &(t, a) in pts {
            let (x, y) = (t - t0, a.powf(gamma));
            st += x;
            sy += y;
            stt += x * x;
            sty += x * y;
        }
        let denom = m * stt - st * st;
        if denom.abs() < 1e-300 {
            return None;
        }
        let slope = (m * sty - st * sy) / denom;
        let icept = (sy - slope * st) / m;
        (slope < 0.0).then(|| t0 - icept / slope)
    };
    let end = samples[samples.len() - 1].0;
    let half = &samples[samples.len() / 2..];
    let t_half = fit(half)?;
    let t_full = fit(samples)?;
    let h_half = end - half[0].0;
    let h_full = end - samples[0].0;
    if (h_full - h_half).abs() < 1e-300 {
        return Some(t_half);
    }
    Some((h_full * t_half - h_half * t_full) / (h_full - h_half))
}

/// Drives a flow from an initial body until a stop condition.
pub fn run(initial: &SupportBody, spec: &FlowSpec) -> Result<Trajectory> {
    spec.validate()?;
    let mut state = match spec.family {
        // The normalized family evolves the area-π rescaling; the physical area is carried alongside.
        FlowFamily::Normalized => FlowState { physical_area: initial.area(), ..FlowState::initial(normalize_body(initial)?) },
        _ => FlowState::initial(initial.clone()),
    };
    let mut records = vec![FunctionalRecord::from_state(&state, spec, 0.0)];
    let mut snapshots = Vec::new();
    let snapshot_due = |step: usize| {
        spec.snapshot_every > 0 && step % spec.snapshot_every < spec.snapshot_burst
    };
    if snapshot_due(0) {
        snapshots.push(state.clone());
    }
    let mut tail: VecDeque<(f64, f64)> = VecDeque::with_capacity(TAIL_SAMPLES);
    tail.push_back((state.t, state.body.area()));
    let mut last_dt = 0.0;

    let termination = loop {
        let area = state.body.area();
        match spec.family {
            FlowFamily::Contracting if area < spec.area_floor => break Termination::Extinction,
            FlowFamily::Expanding if area > spec.area_ceiling => break Termination::Blowup,
            _ => {}
        }
        let clock = state.clock(spec.family);
        if let Some(h) = spec.horizon {
            if clock >= h {
                break Termination::Horizon;
            }
        }
        if state.step_count >= spec.max_steps {
            break Termination::MaxSteps;
        }
        let cap = spec.horizon.map_or(f64::INFINITY, |h| h - clock);
        let next = match step_capped(&state, spec, cap) {
            Ok(next) => next,
            Err(Error::Numeric(_)) => break Termination::ConvexityFailure,
            Err(e) => return Err(e),
        };
        last_dt = next.clock(spec.family) - clock;
        state = next;
        if tail.len() == TAIL_SAMPLES {
            tail.pop_front();
        }
        tail.push_back((state.t, state.body.area()));
        if state.step_count % spec.record_every == 0 {
            records.push(FunctionalRecord::from_state(&state, spec, last_dt));
        }
        if snapshot_due(state.step_count) {
            snapshots.push(state.clone());
        }
    };
    if records.last().map(|r| r.step) != Some(state.step_count) {
        records.push(FunctionalRecord::from_state(&state, spec, last_dt));
    }
    if spec.snapshot_every > 0 && snapshots.last().map(|s| s.step_count) != Some(state.step_count) {
        snapshots.push(state.clone());
    }
    let extinction_estimate = match termination {
        Termination::Extinction => {
            let samples: Vec<_> = tail.into_iter().collect();
            extrapolate_extinction(&samples, spec.p)
        }
        _ => None,
    };
    Ok(Trajectory {
        spec: spec.clone(),
        records,
        snapshots,
        termination,
        extinction_estimate,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_field::AngularGrid;

    fn grid(n: usize) -> AngularGrid {
        AngularGrid::new(n).unwrap()
    }

    fn ellipse(g: &AngularGrid, a: f64, b: f64) -> SupportBody {
        SupportBody::from_fn(g, |t| (a * a * t.cos().powi(2) + b * b * t.sin().powi(2)).sqrt()).unwrap()
    }

    fn wobbly(g: &AngularGrid) -> SupportBody {
        SupportBody::from_fn(g, |t| 1.0 + 0.1 * (2.0 * t).cos() + 0.03 * (4.0 * t).sin()).unwrap()
    }

    #[test]
    fn contracting_speed_examples() {
        let g = grid(256);
        let unit = SupportBody::circle(&g, 1.0).unwrap();
        for p in [1.0, 2.0, 5.0] {
            assert!(speed_contracting(&unit, p).unwrap().values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
        let eight = SupportBody::circle(&g, 8.0).unwrap();
        assert!(speed_contracting(&eight, 1.0).unwrap().values().iter().all(|v| (v - 0.5).abs() < 1e-13));
        let e = ellipse(&g, 2.0, 0.5);
        assert!((speed_contracting(&e, 3.0).unwrap().values()[0] - 2.0).abs() < 1e-9);
        assert!(speed_contracting(&unit, 0.5).is_err());
    }

    #[test]
    fn expanding_speed_examples() {
        let g = grid(256);
        let unit = SupportBody::circle(&g, 1.0).unwrap();
        assert!(speed_expanding(&unit, 2.0).unwrap().values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let two = SupportBody::circle(&g, 2.0).unwrap();
        let expected = 2f64.powf(7.0 / 3.0);
        assert!(speed_expanding(&two, 1.0).unwrap().values().iter().all(|v| (v - expected).abs() < 1e-12));
        let e = ellipse(&g, 2.0, 0.5);
        for p in [1.0, 4.0] {
            assert!((speed_expanding(&e, p).unwrap().values()[0] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn normalized_speed_examples() {
        let g = grid(256);
        let unit = SupportBody::circle(&g, 1.0).unwrap();
        assert!(speed_normalized(&unit, 2.0).unwrap().sup_norm() < 1e-14);
        let e = ellipse(&g, 2.0, 0.5);
        assert!(speed_normalized(&e, 1.5).unwrap().sup_norm() < 1e-10);
        let w = normalize_body(&wobbly(&g)).unwrap();
        let v = speed_normalized(&w, 2.0).unwrap();
        assert!(v.min() < 0.0 && v.max() > 0.0);
        // dA/dτ = ∫ r ∂s/∂τ dθ vanishes.
        assert!(v.mul(w.radius_of_curvature()).integrate().abs() < 1e-8);
        assert!(speed_normalized(&wobbly(&g), 2.0).is_err());
    }

    #[test]
    fn stable_dt_examples() {
        let g = grid(256);
        let unit = SupportBody::circle(&g, 1.0).unwrap();
        let spec = FlowSpec::new(FlowFamily::Contracting, 1.0);
        let dt = stable_dt(&unit, &spec);
        assert!((dt - 0.4 * 2.0 / ((1.0 / 3.0) * 128.0 * 128.0)).abs() < 1e-15);
        assert!((dt - 1.4648e-4).abs() < 1e-8);
        let spec5 = FlowSpec::new(FlowFamily::Contracting, 5.0);
        let ratio = stable_dt(&unit, &spec5) / dt;
        assert!((ratio - (1.0 / 3.0) / (5.0 / 7.0)).abs() < 1e-12);
        // Doubling D_max: for p = 2, D ∝ R^{-2}; radius 1/√2 doubles it.
        let spec2 = FlowSpec::new(FlowFamily::Contracting, 2.0);
        let small = SupportBody::circle(&g, 0.5f64.sqrt()).unwrap();
        assert!((stable_dt(&small, &spec2) / stable_dt(&unit, &spec2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn circle_step_matches_ode() {
        let g = grid(256);
        let unit = SupportBody::circle(&g, 1.0).unwrap();
        let spec = FlowSpec::new(FlowFamily::Contracting, 1.0);
        let next = step(&FlowState::initial(unit), &spec).unwrap();
        let dt = next.t;
        let s = next.body.support();
        assert!(s.max() - s.min() < 1e-13);
        // dR/dt = −R^{−1/3} ⇒ R(dt) = (1 − 4dt/3)^{3/4}.
        let exact = (1.0 - 4.0 * dt / 3.0).powf(0.75);
        assert!((s.values()[0] - exact).abs() < 1e-12);
        // The linearization 1 − dt is off by dt²/6 ≈ 3.6e-9 at this step size.
        assert!((s.values()[0] - (1.0 - dt)).abs() < dt * dt / 6.0 + 1e-12);
    }

    #[test]
    fn ellipse_is_fixed_point_of_normalized_flow() {
        let g = grid(256);
        let e = ellipse(&g, 2.0, 0.5);
        let spec = FlowSpec::new(FlowFamily::Normalized, 2.0);
        let next = step(&FlowState::initial(e.clone()), &spec).unwrap();
        assert!(next.body.support().sub(e.support()).sup_norm() <= 1e-10);
        assert!(next.t > 0.0 && next.tau > 0.0);
    }

    #[test]
    fn nested_circles_stay_nested() {
        let g = grid(64);
        let spec = FlowSpec::new(FlowFamily::Contracting, 1.0);
        let mut inner = FlowState::initial(SupportBody::circle(&g, 1.0).unwrap());
        let mut outer = FlowState::initial(SupportBody::circle(&g, 2.0).unwrap());
        for k in 1..=50 {
            let target = 0.01 * k as f64;
            inner = advance_to(&inner, &spec, target).unwrap();
            outer = advance_to(&outer, &spec, target).unwrap();
            let gap = outer.body.support().sub(inner.body.support());
            assert!(gap.min() >= -1e-9);
        }
    }

    #[test]
    fn normalize_examples() {
        let g = grid(256);
        let two = SupportBody::circle(&g, 2.0).unwrap();
        assert!(normalize_body(&two).unwrap().support().values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let e = ellipse(&g, 2.0, 0.5);
        assert!(normalize_body(&e).unwrap().support().sub(e.support()).sup_norm() < 1e-10);
        let w = wobbly(&g).scaled(1.7).unwrap();
        let nw = normalize_body(&w).unwrap();
        assert!(((nw.area() - PI) / PI).abs() < 1e-10);
        let factor = (w.area() / PI).powi(2);
        let expected = w.centro_affine_curvature().scale(factor);
        assert!(nw.centro_affine_curvature().sub(&expected).sup_norm() < 1e-9);
    }

    #[test]
    fn spec_validation() {
        assert!(FlowSpec::new(FlowFamily::Contracting, 0.9).validate().is_err());
        let spec = FlowSpec { dt_safety: 0.0, ..FlowSpec::default() };
        assert!(spec.validate().is_err());
        let spec = FlowSpec { record_every: 0, ..FlowSpec::default() };
        assert!(spec.validate().is_err());
        assert!(FlowSpec::default().validate().is_ok());
    }

    #[test]
    fn circle_extinction_at_n64() {
        let g = grid(64);
        let unit = SupportBody::circle(&g, 1.0).unwrap();
        let spec = FlowSpec { record_every: 100, ..FlowSpec::new(FlowFamily::Contracting, 1.0) };
        let traj = run(&unit, &spec).unwrap();
        assert_eq!(traj.termination, Termination::Extinction);
        let est = traj.extinction_estimate.unwrap();
        assert!((est - 0.75).abs() < 0.0075, "estimate {est}");
        assert!(traj.final_state.body.area() < spec.area_floor);
    }

    #[test]
    fn extrapolation_is_exact_for_linear_data() {
        let p = 2.0;
        let gamma = 2.0 * p / (p + 2.0);
        let samples: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = 0.3 + 0.01 * i as f64;
                (t, (2.0 * (0.6 - t)).powf(1.0 / gamma))
            })
            .collect();
        let est = extrapolate_extinction(&samples, p).unwrap();
        assert!((est - 0.6).abs() < 1e-10);
    }

    #[test]
    fn records_and_bursts() {
        let g = grid(64);
        let spec = FlowSpec {
            record_every: 5,
            snapshot_every: 20,
            snapshot_burst: 3,
            max_steps: 60,
            ..FlowSpec::new(FlowFamily::Contracting, 2.0)
        };
        let traj = run(&wobbly(&g), &spec).unwrap();
        assert_eq!(traj.termination, Termination::MaxSteps);
        assert_eq!(traj.records.len(), 13);
        assert!(traj.records.windows(2).all(|w| w[0].t < w[1].t));
        let bursts = traj.snapshot_bursts();
        assert_eq!(bursts.len(), 3);
        let mut csv = Vec::new();
        traj.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t,tau,dt,A,A_dual,L,omega_p,omega_1,k0_min,k0_max,sigma_min,sigma_max,santalo,p_ratio,"));
        assert_eq!(text.lines().count(), 14);
    }
}
