//! Origin-symmetric, strictly convex planar bodies represented by their
//! support function, together with the curvature quantities and integral
//! functionals derived from it.
//!
//! All quantities are functions of the outward normal angle θ. With `s` the
//! support function and `r = s_θθ + s` the radius of curvature:
//!
//! * centro-affine curvature `κ₀ = 1/(r s³)`,
//! * affine support function `σ = κ₀^{-1/3} = r^{1/3} s`,
//! * affine arclength density `g = r^{2/3}`,
//! * p-affine length `Ω_p = ∫ s r κ₀^{p/(p+2)} dθ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circle_field::{golden_min, AngularGrid, PeriodicField};
use crate::error::{invalid, Error, Result};

/// Relative size of the odd (non-π-periodic) part tolerated on construction.
const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Relative Fourier threshold applied before the repeated affine derivatives.
pub(crate) const AFFINE_DENOISE: f64 = 1e-12;

/// A body in the symmetric class, stored as its support function together
/// with its (validated, strictly positive) radius of curvature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PeriodicField", into = "PeriodicField")]
pub struct SupportBody {
    s: PeriodicField,
    r: PeriodicField,
}

impl TryFrom<PeriodicField> for SupportBody {
    type Error = Error;

    fn try_from(f: PeriodicField) -> Result<Self> {
        SupportBody::new(f)
    }
}

impl From<SupportBody> for PeriodicField {
    fn from(b: SupportBody) -> Self {
        b.s
    }
}

/// Radius of curvature `r = s_θθ + s` of a support field, failing with the
/// offending node set when the field is not strictly convex.
pub fn radius_of_curvature(s: &PeriodicField) -> Result<PeriodicField> {
    let r = s.radius_operator();
    let bad: Vec<usize> = r
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= 0.0)
        .map(|(i, _)| i)
        .collect();
    if bad.is_empty() {
        Ok(r)
    } else {
        Err(Error::ConvexityViolation { nodes: bad, min_radius: r.min() })
    }
}

/// Mixed volume `V[s, h] = ∫ s (h_θθ + h) dθ`; `h` may be any smooth periodic field.
pub fn mixed_volume(s: &PeriodicField, h: &PeriodicField) -> f64 {
    s.mul(&h.radius_operator()).integrate()
}

impl SupportBody {
    /// Validates and wraps a support field. The field must be π-periodic up to
    /// roundoff; it is symmetrized exactly before the checks `s > 0` and `r > 0`.
    pub fn new(s: PeriodicField) -> Result<Self> {
        let s = if s.is_symmetric() {
            s
        } else {
            let sym = s.symmetrize();
            let odd = s.sub(&sym).sup_norm();
            if odd > SYMMETRY_TOLERANCE * s.sup_norm().max(1e-300) {
                return Err(invalid(format!(
                    "support field is not antipodally symmetric (odd part {odd:e})"
                )));
            }
            sym
        };
        let bad: Vec<usize> = s
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= 0.0)
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(Error::OriginNotInterior { nodes: bad, min_support: s.min() });
        }
        let r = radius_of_curvature(&s)?;
        Ok(Self { s, r })
    }

    pub fn from_fn(grid: &AngularGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(PeriodicField::from_fn(grid, f))
    }

    pub fn circle(grid: &AngularGrid, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid(format!("circle radius must be positive, got {radius}")));
        }
        Self::new(PeriodicField::constant(grid, radius))
    }

    #[inline]
    pub fn support(&self) -> &PeriodicField {
        &self.s
    }

    #[inline]
    pub fn grid(&self) -> &AngularGrid {
        self.s.grid()
    }

    /// Radius of curvature `r = s_θθ + s`, positive at every node.
    #[inline]
    pub fn radius_of_curvature(&self) -> &PeriodicField {
        &self.r
    }

    /// Euclidean curvature `κ = 1/r`.
    pub fn curvature(&self) -> PeriodicField {
        self.r.map(|r| 1.0 / r)
    }

    /// Homothetic copy `c·K`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid(format!("scale factor must be positive, got {c}")));
        }
        Ok(Self { s: self.s.scale(c), r: self.r.scale(c) })
    }

    /// `κ₀ = κ/s³ = 1/(r s³)`.
    pub fn centro_affine_curvature(&self) -> PeriodicField {
        self.r.zip_map(&self.s, |r, s| 1.0 / (r * s * s * s))
    }

    /// `A = ½ ∫ s r dθ`.
    pub fn area(&self) -> f64 {
        0.5 * self.s.mul(&self.r).integrate()
    }

    /// Area of the polar body, `½ ∫ s⁻² dθ`.
    pub fn dual_area(&self) -> f64 {
        0.5 * self.s.map(|s| 1.0 / (s * s)).integrate()
    }

    /// Perimeter `L = ∫ r dθ`.
    pub fn euclid_length(&self) -> f64 {
        self.r.integrate()
    }

    /// `Ω_p = ∫ s r κ₀^{p/(p+2)} dθ = ∫ s^{1-3p/(p+2)} r^{1-p/(p+2)} dθ`, defined for `p ≥ 1`.
    pub fn p_affine_length(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(invalid(format!("p-affine length needs p >= 1, got {p}")));
        }
        Ok(self.p_affine_length_unchecked(p))
    }

    pub(crate) fn p_affine_length_unchecked(&self, p: f64) -> f64 {
        let q = p / (p + 2.0);
        let (es, er) = (1.0 - 3.0 * q, 1.0 - q);
        self.s
            .zip_map(&self.r, |s, r| (es * s.ln() + er * r.ln()).exp())
            .integrate()
    }

    /// Santaló product `A(K)·A(K°)`.
    pub fn santalo_product(&self) -> f64 {
        self.area() * self.dual_area()
    }

    /// Affine support function `σ = κ₀^{-1/3} = r^{1/3} s`.
    pub fn affine_support(&self) -> PeriodicField {
        self.r.zip_map(&self.s, |r, s| r.cbrt() * s)
    }

    /// Affine arclength density `g = r^{2/3}` with respect to θ.
    pub fn affine_arclength_density(&self) -> PeriodicField {
        self.r.map(|r| r.cbrt().powi(2))
    }

    /// Derivative with respect to affine arclength, `f_𝔰 = f_θ / g`.
    pub fn affine_derivative(&self, f: &PeriodicField) -> PeriodicField {
        let d = f.differentiate(1).expect("order 1 is valid");
        d.zip_map(&self.affine_arclength_density(), |d, g| d / g)
    }

    /// Affine curvature `μ = (1 − σ_𝔰𝔰)/σ`.
    ///
    /// σ and σ_𝔰 are stripped of Fourier modes below `1e-12` of the leading one
    /// before each differentiation; otherwise round-off in r is amplified by k⁴.
    pub fn affine_curvature(&self) -> PeriodicField {
        let sigma = self.affine_support().denoise(AFFINE_DENOISE);
        let sigma_s = self.affine_derivative(&sigma).denoise(AFFINE_DENOISE);
        let sigma_ss = self.affine_derivative(&sigma_s);
        sigma_ss.zip_map(&sigma, |dd, sg| (1.0 - dd) / sg)
    }

    /// Point of the boundary with outward normal angle θ:
    /// `γ(θ) = s·(cos θ, sin θ) + s_θ·(−sin θ, cos θ)`.
    pub fn boundary_point(&self, theta: f64) -> [f64; 2] {
        let (s, ds) = self.s.interpolant().value_and_derivative(theta);
        let (sn, cs) = theta.sin_cos();
        [s * cs - ds * sn, s * sn + ds * cs]
    }

    /// Support function of the polar body `K° = {y : |⟨y,x⟩| ≤ 1 ∀x ∈ K}`:
    /// `s°(θ) = max_φ cos(φ − θ)/s(φ)`, maximised over nodes and polished by
    /// golden-section search on the interpolated objective.
    pub fn polar_dual(&self) -> Result<SupportBody> {
        let grid = self.grid();
        let n = grid.n();
        let h = grid.spacing();
        let interp = self.s.interpolant();
        let vals = self.s.values();
        let mut out = vec![0.0; n];
        // Only half the nodes are needed; the other half follows by symmetry.
        for j in 0..n / 2 {
            let theta = grid.node(j);
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (i, &si) in vals.iter().enumerate() {
                let v = (grid.node(i) - theta).cos() / si;
                if v > best_val {
                    best_val = v;
                    best = i;
                }
            }
            let c = grid.node(best);
            let (_, neg) = golden_min(
                |phi| -(phi - theta).cos() / interp.value(phi),
                c - h,
                c + h,
                1e-10,
            );
            out[j] = best_val.max(-neg);
            out[j + n / 2] = out[j];
        }
        SupportBody::new(PeriodicField::new(grid.clone(), out)?.symmetrize())
    }

    /// Scalar summary used by reports and CSV output.
    pub fn summary(&self, p: f64) -> Result<BodySummary> {
        let k0 = self.centro_affine_curvature();
        let sigma = self.affine_support();
        Ok(BodySummary {
            area: self.area(),
            dual_area: self.dual_area(),
            length: self.euclid_length(),
            omega_p: self.p_affine_length(p)?,
            k0_min: k0.min_refined().1,
            k0_max: k0.max_refined().1,
            sigma_min: sigma.min_refined().1,
            sigma_max: sigma.max_refined().1,
        })
    }
}

/// Hausdorff distance of two convex bodies: the sup-norm of their support difference.
pub fn hausdorff_distance(a: &SupportBody, b: &SupportBody) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(invalid(format!(
            "grid mismatch: {} vs {} nodes",
            a.grid().n(),
            b.grid().n()
        )));
    }
    Ok(a.support().sub(b.support()).sup_norm())
}

/// Sharp p-affine isoperimetric bound `2^{2+p} π^{2p} A^{2−p}` on `Ω_p^{2+p}`.
pub fn isoperimetric_bound(area: f64, p: f64) -> f64 {
    2f64.powf(2.0 + p) * PI.powf(2.0 * p) * area.powf(2.0 - p)
}

/// Flat scalar summary of a body.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySummary {
    pub area: f64,
    pub dual_area: f64,
    pub length: f64,
    pub omega_p: f64,
    pub k0_min: f64,
    pub k0_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl BodySummary {
    pub const CSV_HEADER: &'static str =
        "area,dual_area,length,omega_p,k0_min,k0_max,sigma_min,sigma_max";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.area,
            self.dual_area,
            self.length,
            self.omega_p,
            self.k0_min,
            self.k0_max,
            self.sigma_min,
            self.sigma_max
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn grid(n: usize) -> AngularGrid {
        AngularGrid::new(n).unwrap()
    }

    fn ellipse(g: &AngularGrid, a: f64, b: f64) -> SupportBody {
        SupportBody::from_fn(g, |t| (a * a * t.cos().powi(2) + b * b * t.sin().powi(2)).sqrt()).unwrap()
    }

    /// Random smooth symmetric body `1 + Σ small even modes`.
    fn wobbly(g: &AngularGrid, coeffs: &[(f64, f64)]) -> SupportBody {
        SupportBody::from_fn(g, |t| {
            1.0 + coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let w = 2.0 * (k + 1) as f64;
                    a * (w * t).cos() + b * (w * t).sin()
                })
                .sum::<f64>()
        })
        .unwrap()
    }

    // Mode k (frequency 2k) is damped by 1/(4k² − 1) so that r stays above 0.25.
    fn small_coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..4).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let w = 2.0 * (k + 1) as f64;
                    let damp = 0.12 / (w * w - 1.0);
                    (a * damp, b * damp)
                })
                .collect()
        })
    }

    #[test]
    fn radius_of_curvature_examples() {
        let g = grid(256);
        let c = SupportBody::circle(&g, 1.0).unwrap();
        assert!(c.radius_of_curvature().sub(&PeriodicField::constant(&g, 1.0)).sup_norm() < 1e-14);
        let e = ellipse(&g, 2.0, 0.5);
        assert!((e.radius_of_curvature().values()[0] - 0.125).abs() < 1e-10);
        let bad = SupportBody::from_fn(&g, |t| 1.0 + 0.6 * (2.0 * t).cos());
        match bad {
            Err(Error::ConvexityViolation { nodes, min_radius }) => {
                assert!(nodes.contains(&0));
                assert!((min_radius + 0.8).abs() < 1e-10);
            }
            other => panic!("expected convexity violation, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_symmetric_and_origin_outside() {
        let g = grid(64);
        assert!(SupportBody::from_fn(&g, |t| 1.0 + 0.1 * t.cos()).is_err());
        assert!(matches!(
            SupportBody::new(PeriodicField::constant(&g, -1.0)),
            Err(Error::OriginNotInterior { .. })
        ));
    }

    #[test]
    fn centro_affine_curvature_examples() {
        let g = grid(256);
        let one = SupportBody::circle(&g, 1.0).unwrap().centro_affine_curvature();
        assert!(one.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let two = SupportBody::circle(&g, 2.0).unwrap().centro_affine_curvature();
        assert!(two.values().iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-14));
        let e = ellipse(&g, 2.0, 0.5).centro_affine_curvature();
        assert!(e.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn areas() {
        let g = grid(256);
        assert!((SupportBody::circle(&g, 1.0).unwrap().area() - PI).abs() < 1e-13);
        assert!((SupportBody::circle(&g, 3.0).unwrap().area() - 9.0 * PI).abs() < 1e-12);
        let e = ellipse(&g, 2.0, 0.5);
        assert!((e.area() - PI).abs() < 1e-10);
        assert!((e.dual_area() - PI).abs() < 1e-10);
        assert!((SupportBody::circle(&g, 1.0).unwrap().dual_area() - PI).abs() < 1e-13);
        assert!((SupportBody::circle(&g, 2.0).unwrap().dual_area() - PI / 4.0).abs() < 1e-13);
    }

    #[test]
    fn lengths() {
        let g = grid(256);
        assert!((SupportBody::circle(&g, 1.0).unwrap().euclid_length() - TAU).abs() < 1e-13);
        assert!((SupportBody::circle(&g, 2.0).unwrap().euclid_length() - 2.0 * TAU).abs() < 1e-12);
        let e = ellipse(&g, 2.0, 0.5);
        let oracle = adaptive_simpson(&|t: f64| (4.0 * t.sin().powi(2) + 0.25 * t.cos().powi(2)).sqrt(), 0.0, TAU, 1e-13);
        assert!((oracle - 8.578421775).abs() < 1e-8, "oracle {oracle}");
        assert!((e.euclid_length() - oracle).abs() < 1e-6, "length {}", e.euclid_length());
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (l, r) = (simpson(f, a, m), simpson(f, m, b));
            if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
                l + r + (l + r - whole) / 15.0
            } else {
                rec(f, a, m, l, 0.5 * tol, depth - 1) + rec(f, m, b, r, 0.5 * tol, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, 40)
    }

    #[test]
    fn p_affine_lengths() {
        let g = grid(256);
        let c = SupportBody::circle(&g, 1.0).unwrap();
        for p in [1.0, 1.5, 2.0, 5.0] {
            assert!((c.p_affine_length(p).unwrap() - TAU).abs() < 1e-12);
        }
        let c2 = SupportBody::circle(&g, 2.0).unwrap();
        assert!((c2.p_affine_length(2.0).unwrap() - TAU).abs() < 1e-12);
        let p = 1.0;
        let expected = TAU * 2f64.powf((4.0 - 2.0 * p) / (p + 2.0));
        assert!((c2.p_affine_length(p).unwrap() - expected).abs() < 1e-12);
        let e = ellipse(&g, 2.0, 0.5);
        for p in [1.0, 2.0, 3.0, 7.0] {
            assert!((e.p_affine_length(p).unwrap() - TAU).abs() < 1e-8);
        }
        assert!(c.p_affine_length(0.5).is_err());
    }

    #[test]
    fn mixed_volume_examples() {
        let g = grid(256);
        let one = PeriodicField::constant(&g, 1.0);
        let two = PeriodicField::constant(&g, 2.0);
        assert!((mixed_volume(&one, &one) - TAU).abs() < 1e-13);
        assert!((mixed_volume(&one, &two) - 2.0 * TAU).abs() < 1e-13);
        let e = ellipse(&g, 2.0, 0.5);
        let s = e.support();
        let lhs = mixed_volume(s, &one).powi(2);
        let rhs = mixed_volume(&one, &one) * mixed_volume(s, s);
        assert!(lhs - rhs >= -1e-9);
        assert!((mixed_volume(s, &one) - mixed_volume(&one, s)).abs() < 1e-10);
    }

    #[test]
    fn affine_support_and_curvature() {
        let g = grid(256);
        let c = SupportBody::circle(&g, 1.0).unwrap();
        assert!(c.affine_support().values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(c.affine_curvature().values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let c8 = SupportBody::circle(&g, 8.0).unwrap();
        assert!(c8.affine_support().values().iter().all(|v| (v - 16.0).abs() < 1e-12));
        let e = ellipse(&g, 2.0, 0.5);
        assert!(e.affine_support().values().iter().all(|v| (v - 1.0).abs() < 1e-10));
        let one = PeriodicField::constant(&g, 1.0);
        assert!(e.affine_curvature().sub(&one).sup_norm() < 1e-8);
        let mild = ellipse(&g, 1.25, 0.8);
        assert!(mild.affine_curvature().sub(&one).sup_norm() < 1e-8);
        let c2 = SupportBody::circle(&g, 2.0).unwrap();
        let mu = 2f64.powf(-4.0 / 3.0);
        assert!(c2.affine_curvature().values().iter().all(|v| (v - mu).abs() < 1e-10));
    }

    #[test]
    fn polar_dual_examples() {
        let g = grid(256);
        let c = SupportBody::circle(&g, 2.0).unwrap().polar_dual().unwrap();
        assert!(c.support().values().iter().all(|v| (v - 0.5).abs() < 1e-12));
        let e = ellipse(&g, 2.0, 0.5).polar_dual().unwrap();
        let expected = ellipse(&g, 0.5, 2.0);
        assert!(hausdorff_distance(&e, &expected).unwrap() < 1e-6);
    }

    #[test]
    fn boundary_points() {
        let g = grid(256);
        let [x, y] = SupportBody::circle(&g, 1.0).unwrap().boundary_point(0.0);
        assert!((x - 1.0).abs() < 1e-13 && y.abs() < 1e-13);
        let [x, y] = ellipse(&g, 2.0, 0.5).boundary_point(0.0);
        assert!((x - 2.0).abs() < 1e-10 && y.abs() < 1e-10);
        let [x, y] = SupportBody::circle(&g, 3.0).unwrap().boundary_point(PI / 2.0);
        assert!(x.abs() < 1e-12 && (y - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_examples() {
        let g = grid(256);
        let c1 = SupportBody::circle(&g, 1.0).unwrap();
        let c2 = SupportBody::circle(&g, 2.0).unwrap();
        assert_eq!(hausdorff_distance(&c1, &c1).unwrap(), 0.0);
        assert!((hausdorff_distance(&c1, &c2).unwrap() - 1.0).abs() < 1e-14);
        let e = ellipse(&g, 2.0, 0.5);
        assert!((hausdorff_distance(&e, &c1).unwrap() - 1.0).abs() < 1e-12);
        let other = SupportBody::circle(&grid(64), 1.0).unwrap();
        assert!(hausdorff_distance(&c1, &other).is_err());
    }

    #[test]
    fn omega_duality_for_smooth_body() {
        let g = grid(256);
        let b = wobbly(&g, &[(0.08, 0.03), (0.01, -0.01)]);
        let d = b.polar_dual().unwrap();
        assert!(((b.dual_area() - d.area()) / d.area()).abs() < 1e-6);
        for q in [1.0, 2.0, 4.0] {
            let lhs = b.p_affine_length(q).unwrap();
            let rhs = d.p_affine_length(4.0 / q).unwrap();
            assert!(((lhs - rhs) / lhs).abs() < 1e-5, "q = {q}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn isoperimetric_equality_for_ellipses() {
        let g = grid(256);
        let e = ellipse(&g, 1.7, 0.6);
        for p in [1.0, 1.5, 2.0, 5.0] {
            let lhs = e.p_affine_length(p).unwrap().powf(2.0 + p);
            let rhs = isoperimetric_bound(e.area(), p);
            assert!(((lhs - rhs) / rhs).abs() < 1e-8);
        }
    }

    #[test]
    fn json_round_trip_validates() {
        let g = grid(32);
        let b = wobbly(&g, &[(0.05, 0.0)]);
        let text = serde_json::to_string(&b).unwrap();
        let back: SupportBody = serde_json::from_str(&text).unwrap();
        assert_eq!(back, b);
        let mut bad: serde_json::Value = serde_json::from_str(&text).unwrap();
        bad["values"] = serde_json::json!(vec![-1.0; 32]);
        assert!(serde_json::from_value::<SupportBody>(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scaling_laws(coeffs in small_coeffs(), c in prop::sample::select(vec![0.5, 2.0])) {
            let g = grid(128);
            let b = wobbly(&g, &coeffs);
            let cb = b.scaled(c).unwrap();
            prop_assert!((cb.area() / (c * c * b.area()) - 1.0).abs() < 1e-9);
            for p in [1.0, 1.5, 2.0, 5.0] {
                let expected = c.powf((4.0 - 2.0 * p) / (p + 2.0)) * b.p_affine_length(p).unwrap();
                prop_assert!((cb.p_affine_length(p).unwrap() / expected - 1.0).abs() < 1e-9);
            }
            let k = b.centro_affine_curvature().scale(c.powi(-4));
            let ck = cb.centro_affine_curvature();
            prop_assert!(ck.sub(&k).sup_norm() <= 1e-9 * k.sup_norm());
            prop_assert!((cb.p_affine_length(2.0).unwrap() / b.p_affine_length(2.0).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn isoperimetric_and_santalo(coeffs in small_coeffs()) {
            let g = grid(128);
            let b = wobbly(&g, &coeffs);
            for p in [1.0, 1.5, 2.0, 5.0] {
                let lhs = b.p_affine_length(p).unwrap().powf(2.0 + p);
                prop_assert!(lhs <= isoperimetric_bound(b.area(), p) * (1.0 + 1e-8));
            }
            let d = b.polar_dual().unwrap();
            prop_assert!(b.area() * d.area() <= PI * PI + 1e-8);
        }

        #[test]
        fn minkowski(c1 in small_coeffs(), c2 in prop::collection::vec((-0.3f64..0.3, -0.3f64..0.3), 1..5)) {
            let g = grid(128);
            let s = wobbly(&g, &c1);
            let h = PeriodicField::from_fn(&g, |t| {
                0.3 + c2.iter().enumerate().map(|(k, (a, b))| {
                    let w = (k + 1) as f64;
                    a * (w * t).cos() + b * (w * t).sin()
                }).sum::<f64>()
            });
            let s = s.support();
            let lhs = mixed_volume(&h, s).powi(2);
            let rhs = mixed_volume(s, s) * mixed_volume(&h, &h);
            prop_assert!(lhs - rhs >= -1e-9 * lhs.abs().max(1.0));
        }
    }
}
