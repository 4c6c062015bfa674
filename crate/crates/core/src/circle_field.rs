//! Spectral calculus for 2π-periodic scalar fields sampled on a uniform grid.
//!
//! Fields store node values only. Fourier coefficients are computed on demand
//! with an FFT whenever a derivative, an interpolant or a spectral diagnostic is
//! requested. A field may carry the `symmetric` flag, meaning it is π-periodic
//! (`values[i] == values[i + n/2]` bitwise); every operation preserves it.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Spectral-tail energy above which a field is considered under-resolved.
pub const SPECTRAL_TAIL_WARN: f64 = 1e-8;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform angular grid `θ_i = 2πi/n` with cached FFT plans.
#[derive(Clone)]
pub struct AngularGrid {
    n: usize,
    plans: Arc<Plans>,
}

impl AngularGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(invalid(format!("grid size must be even and >= 16, got {n}")));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Self { n, plans: Arc::new(plans) })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        TAU * i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Signed wavenumber of FFT bin `i` (the Nyquist bin reports `n/2`).
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plans.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    fn inverse_real(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.plans.inverse.process(&mut coeffs);
        coeffs.into_iter().map(|c| c.re).collect()
    }
}

impl PartialEq for AngularGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl fmt::Debug for AngularGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AngularGrid").field("n", &self.n).finish()
    }
}

/// Sampled 2π-periodic scalar field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldRecord", into = "FieldRecord")]
pub struct PeriodicField {
    grid: AngularGrid,
    values: Vec<f64>,
    symmetric: bool,
}

#[derive(Serialize, Deserialize)]
struct FieldRecord {
    n: usize,
    symmetric: bool,
    values: Vec<f64>,
}

impl TryFrom<FieldRecord> for PeriodicField {
    type Error = Error;

    fn try_from(rec: FieldRecord) -> Result<Self> {
        let grid = AngularGrid::new(rec.n)?;
        let field = PeriodicField::new(grid, rec.values)?;
        if rec.symmetric {
            if !field.is_antipodally_equal() {
                return Err(invalid("field flagged symmetric but values[i] != values[i + n/2]"));
            }
            Ok(field.symmetrize())
        } else {
            Ok(field)
        }
    }
}

impl From<PeriodicField> for FieldRecord {
    fn from(f: PeriodicField) -> Self {
        FieldRecord { n: f.grid.n, symmetric: f.symmetric, values: f.values }
    }
}

impl PeriodicField {
    pub fn new(grid: AngularGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(invalid(format!(
                "expected {} node values, got {}",
                grid.n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("field contains non-finite values"));
        }
        Ok(Self { grid, values, symmetric: false })
    }

    pub fn from_fn(grid: &AngularGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid: grid.clone(), values, symmetric: false }
    }

    pub fn constant(grid: &AngularGrid, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.n], symmetric: true }
    }

    #[inline]
    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.grid.n
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn is_antipodally_equal(&self) -> bool {
        let half = self.grid.n / 2;
        let scale = self.sup_norm().max(1.0);
        (0..half).all(|i| (self.values[i] - self.values[i + half]).abs() <= 1e-9 * scale)
    }

    /// Builds a field that inherits this field's grid and symmetry flag.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.n);
        Self { grid: self.grid.clone(), values, symmetric: self.symmetric }
    }

    /// Pointwise map; symmetry is preserved since equal inputs give equal outputs.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise binary operation. The result is symmetric only if both inputs are.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self {
            grid: self.grid.clone(),
            values,
            symmetric: self.symmetric && other.symmetric,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmin(&self) -> usize {
        argext(&self.values, |a, b| a < b)
    }

    pub fn argmax(&self) -> usize {
        argext(&self.values, |a, b| a > b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Normalised Fourier coefficients `c_k = (1/n) Σ f_j e^{-ikθ_j}` in FFT order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    /// Spectral derivative of the given order.
    pub fn differentiate(&self, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(invalid("derivative order must be positive"));
        }
        let n = self.grid.n;
        let mut c = self.coefficients();
        for (i, ci) in c.iter_mut().enumerate() {
            let k = self.grid.wavenumber(i);
            if i == n / 2 && order % 2 == 1 {
                *ci = Complex64::new(0.0, 0.0);
                continue;
            }
            *ci *= Complex64::new(0.0, k as f64).powu(order);
        }
        let out = self.with_values(self.grid.inverse_real(c));
        Ok(if self.symmetric { out.symmetrize() } else { out })
    }

    /// `f_θθ + f`, the operator that maps a support function to its radius of curvature.
    pub fn radius_operator(&self) -> Self {
        let mut c = self.coefficients();
        for (i, ci) in c.iter_mut().enumerate() {
            let k = self.grid.wavenumber(i) as f64;
            *ci *= 1.0 - k * k;
        }
        let out = self.with_values(self.grid.inverse_real(c));
        if self.symmetric {
            out.symmetrize()
        } else {
            out
        }
    }

    /// `∮ f dθ` by the uniform-node rule.
    pub fn integrate(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// Mean value over the circle.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.n as f64
    }

    pub fn interpolant(&self) -> Interpolant {
        Interpolant::new(self)
    }

    /// Trigonometric interpolation at an arbitrary angle.
    pub fn interpolate(&self, angle: f64) -> f64 {
        self.interpolant().value(angle)
    }

    /// Antipodal average `(f(θ) + f(θ+π))/2`; a projection onto even wavenumbers.
    pub fn symmetrize(&self) -> Self {
        let half = self.grid.n / 2;
        let mut values = self.values.clone();
        for i in 0..half {
            let avg = 0.5 * (self.values[i] + self.values[i + half]);
            values[i] = avg;
            values[i + half] = avg;
        }
        Self { grid: self.grid.clone(), values, symmetric: true }
    }

    /// Zeroes every Fourier mode whose magnitude is at most `rel` times the largest one.
    /// Used before repeated differentiation so that round-off does not get amplified by k².
    pub fn denoise(&self, rel: f64) -> Self {
        let mut c = self.coefficients();
        let cut = rel * c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in c.iter_mut() {
            if z.norm() <= cut {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.with_values(self.grid.inverse_real(c))
    }

    /// Fraction of spectral energy carried by wavenumbers above `2n/6` (the top third).
    pub fn spectral_tail(&self) -> f64 {
        let c = self.coefficients();
        let cutoff = self.grid.n as i64 / 3;
        let mut total = 0.0;
        let mut tail = 0.0;
        for (i, ci) in c.iter().enumerate() {
            let e = ci.norm_sqr();
            total += e;
            if self.grid.wavenumber(i).abs() > cutoff {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    pub fn is_under_resolved(&self) -> bool {
        self.spectral_tail() > SPECTRAL_TAIL_WARN
    }

    /// Minimum of the trigonometric interpolant. The lowest few discrete local
    /// minima are polished by Newton (golden-section as fallback), since the
    /// smallest node can sit in the wrong basin when two minima nearly tie.
    /// Returns `(angle, value)`.
    pub fn min_refined(&self) -> (f64, f64) {
        const CANDIDATES: usize = 6;
        let n = self.values.len();
        let i0 = self.argmin();
        let (lo, hi) = (self.values[i0], self.values[self.argmax()]);
        let cutoff = lo + 0.01 * (hi - lo);
        let mut cands: Vec<usize> = (0..n)
            .filter(|&i| {
                let v = self.values[i];
                v <= cutoff && v <= self.values[(i + n - 1) % n] && v <= self.values[(i + 1) % n]
            })
            .collect();
        cands.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        cands.truncate(CANDIDATES);
        if !cands.contains(&i0) {
            cands.push(i0);
        }
        let interp = self.interpolant();
        let h = self.grid.spacing();
        let mut best = (self.grid.node(i0), lo);
        for i in cands {
            let c = self.grid.node(i);
            let (x, v) = newton_min(&interp, c, h).unwrap_or_else(|| golden_min(|x| interp.value(x), c - h, c + h, 1e-11));
            if v < best.1 {
                best = (x.rem_euclid(TAU), v);
            }
        }
        best
    }

    /// Maximum of the trigonometric interpolant. Returns `(angle, value)`.
    pub fn max_refined(&self) -> (f64, f64) {
        let (x, v) = self.scale(-1.0).min_refined();
        (x, -v)
    }
}

fn argext(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[best]) {
            best = i;
        }
    }
    best
}

/// Newton iteration on the derivative of the interpolant, started at node `c`.
/// Gives up (for the golden-section fallback) when curvature is not positive
/// or the iterate leaves `[c − h, c + h]`.
fn newton_min(interp: &Interpolant, c: f64, h: f64) -> Option<(f64, f64)> {
    let mut x = c;
    for _ in 0..12 {
        let (_, d1, d2) = interp.derivatives(x);
        if !(d2 > 0.0) {
            return None;
        }
        let step = d1 / d2;
        x -= step;
        if (x - c).abs() > h {
            return None;
        }
        if step.abs() < 1e-13 {
            return Some((x, interp.value(x)));
        }
    }
    None
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Real trigonometric interpolant
/// `f(θ) = a₀ + Σ (a_k cos kθ + b_k sin kθ) + a_N cos(Nθ)` with `N = n/2`.
#[derive(Clone, Debug)]
pub struct Interpolant {
    mean: f64,
    /// `(k, a_k, b_k)` for `0 < k < n/2` with non-negligible energy.
    terms: Vec<(f64, f64, f64)>,
    nyquist: f64,
    half: f64,
    /// Wavenumber stride: 2 for symmetric fields (odd modes vanish), 1 otherwise.
    stride: usize,
}

impl Interpolant {
    fn new(field: &PeriodicField) -> Self {
        let n = field.n();
        let c = field.coefficients();
        let stride = if field.is_symmetric() { 2 } else { 1 };
        let terms = (stride..n / 2)
            .step_by(stride)
            .map(|k| (k as f64, 2.0 * c[k].re, -2.0 * c[k].im))
            .collect();
        Self {
            mean: c[0].re,
            terms,
            nyquist: c[n / 2].re,
            half: (n / 2) as f64,
            stride,
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        let step = Complex64::from_polar(1.0, self.stride as f64 * theta);
        let mut z = step;
        let mut acc = self.mean;
        for &(_, a, b) in &self.terms {
            acc += a * z.re + b * z.im;
            z *= step;
        }
        acc + self.nyquist * (self.half * theta).cos()
    }

    /// Value with first and second derivatives of the non-Nyquist part.
    fn derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let step = Complex64::from_polar(1.0, self.stride as f64 * theta);
        let mut z = step;
        let (mut v, mut d1, mut d2) = (self.mean, 0.0, 0.0);
        for &(k, a, b) in &self.terms {
            let (c, s) = (a * z.re + b * z.im, b * z.re - a * z.im);
            v += c;
            d1 += k * s;
            d2 -= k * k * c;
            z *= step;
        }
        let (sn, cs) = (self.half * theta).sin_cos();
        let n = self.nyquist;
        (v + n * cs, d1 - n * self.half * sn, d2 - n * self.half * self.half * cs)
    }

    /// Value and first derivative.
    pub fn value_and_derivative(&self, theta: f64) -> (f64, f64) {
        let step = Complex64::from_polar(1.0, self.stride as f64 * theta);
        let mut z = step;
        let mut v = self.mean;
        let mut d = 0.0;
        for &(k, a, b) in &self.terms {
            v += a * z.re + b * z.im;
            d += k * (b * z.re - a * z.im);
            z *= step;
        }
        // The Nyquist term contributes to the value only, matching the spectral
        // first derivative which zeroes that bin.
        (v + self.nyquist * (self.half * theta).cos(), d)
    }
}

/// Angle of a vector folded into `[0, 2π)`.
#[inline]
pub fn angle_of(x: f64, y: f64) -> f64 {
    let a = y.atan2(x);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}
