//! Linear maps acting on support bodies, centered ellipses, Löwner–John
//! fitting and the length-minimizing SL(2) normalization.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::circle_field::{angle_of, golden_min, AngularGrid, PeriodicField};
use crate::convex_body::SupportBody;
use crate::error::{invalid, Error, Result};

/// Row-major 2×2 matrix.
pub type Mat2 = [[f64; 2]; 2];

fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn rotation(phi: f64) -> Mat2 {
    let (s, c) = phi.sin_cos();
    [[c, -s], [s, c]]
}

/// Eigen-decomposition of a symmetric positive 2×2 matrix: `(λ_max, λ_min, angle of the λ_max axis in [0, π))`.
fn sym_eigen(m: &Mat2) -> (f64, f64, f64) {
    let (p, q, r) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    let phi = (0.5 * (2.0 * q).atan2(p - r)).rem_euclid(PI);
    (mean + rad, mean - rad, phi)
}

/// Origin-centered ellipse with semi-axes `a ≥ b` and major axis at angle `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteredEllipse {
    pub a: f64,
    pub b: f64,
    pub phi: f64,
}

impl CenteredEllipse {
    /// Normalizes the axis order and the angle into `[0, π)`.
    pub fn new(a: f64, b: f64, phi: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() || !phi.is_finite() {
            return Err(invalid(format!("ellipse semi-axes must be positive, got ({a}, {b})")));
        }
        let (a, b, phi) = if a >= b { (a, b, phi) } else { (b, a, phi + FRAC_PI_2) };
        Ok(Self { a, b, phi: phi.rem_euclid(PI) })
    }

    pub fn circle(radius: f64) -> Result<Self> {
        Self::new(radius, radius, 0.0)
    }

    /// Shape matrix `Q` with `E = {x : xᵀQ⁻¹x ≤ 1}` and `s_E(u)² = uᵀQu`.
    pub fn shape_matrix(&self) -> Mat2 {
        let rot = rotation(self.phi);
        let d = [[self.a * self.a, 0.0], [0.0, self.b * self.b]];
        let rt = [[rot[0][0], rot[1][0]], [rot[0][1], rot[1][1]]];
        mat_mul(&mat_mul(&rot, &d), &rt)
    }

    fn from_shape_matrix(q: &Mat2) -> Result<Self> {
        let (l1, l2, phi) = sym_eigen(q);
        if !(l2 > 0.0) {
            return Err(Error::Numeric(format!("degenerate ellipse shape matrix {q:?}")));
        }
        Self::new(l1.sqrt(), l2.sqrt(), phi)
    }

    pub fn support(&self, theta: f64) -> f64 {
        let (s, c) = (theta - self.phi).sin_cos();
        (self.a * self.a * c * c + self.b * self.b * s * s).sqrt()
    }

    pub fn area(&self) -> f64 {
        PI * self.a * self.b
    }

    /// Constant centro-affine curvature `1/(ab)²`.
    pub fn centro_affine_curvature(&self) -> f64 {
        (self.a * self.b).powi(-2)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { a: c * self.a, b: c * self.b, phi: self.phi }
    }

    /// Polar body, again a centered ellipse.
    pub fn polar(&self) -> Self {
        Self::new(1.0 / self.b, 1.0 / self.a, self.phi + FRAC_PI_2).expect("positive axes")
    }
}

/// Element of SL(2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat2", into = "Mat2")]
pub struct UnimodularMap {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

const DET_TOLERANCE: f64 = 1e-10;

impl TryFrom<Mat2> for UnimodularMap {
    type Error = Error;

    fn try_from(m: Mat2) -> Result<Self> {
        let d = det(&m);
        if (d - 1.0).abs() > DET_TOLERANCE {
            return Err(invalid(format!("map is not unimodular: det = {d}")));
        }
        Ok(Self { m11: m[0][0], m12: m[0][1], m21: m[1][0], m22: m[1][1] })
    }
}

impl From<UnimodularMap> for Mat2 {
    fn from(m: UnimodularMap) -> Mat2 {
        m.matrix()
    }
}

impl UnimodularMap {
    pub fn identity() -> Self {
        Self { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 }
    }

    pub fn rotation(phi: f64) -> Self {
        Self::try_from(rotation(phi)).expect("rotations are unimodular")
    }

    /// Symmetric stretch `R(φ)·diag(e^λ, e^{−λ})·R(−φ)`.
    pub fn stretch(lambda: f64, phi: f64) -> Self {
        let d = [[lambda.exp(), 0.0], [0.0, (-lambda).exp()]];
        let m = mat_mul(&mat_mul(&rotation(phi), &d), &rotation(-phi));
        Self { m11: m[0][0], m12: m[0][1], m21: m[1][0], m22: m[1][1] }
    }

    pub fn matrix(&self) -> Mat2 {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    pub fn det(&self) -> f64 {
        det(&self.matrix())
    }

    pub fn compose(&self, other: &Self) -> Self {
        let m = mat_mul(&self.matrix(), &other.matrix());
        Self { m11: m[0][0], m12: m[0][1], m21: m[1][0], m22: m[1][1] }
    }

    pub fn inverse(&self) -> Self {
        Self { m11: self.m22, m12: -self.m12, m21: -self.m21, m22: self.m11 }
    }

    /// Stretch parameters `(λ ≥ 0, φ ∈ [0, π))` of a symmetric map; `φ = 0` when `λ ≈ 0`.
    pub fn stretch_parameters(&self) -> (f64, f64) {
        let (l1, _, phi) = sym_eigen(&self.matrix());
        let lambda = l1.ln().max(0.0);
        if lambda < 1e-12 {
            (0.0, 0.0)
        } else {
            (lambda, phi)
        }
    }
}

/// Support function of `M·K`: `s_{MK}(u) = s_K(Mᵀu)`, extended 1-homogeneously.
pub fn apply_map(b: &SupportBody, m: &Mat2) -> Result<SupportBody> {
    let d = det(m);
    if !(d.abs() > 1e-14) || !d.is_finite() {
        return Err(invalid(format!("cannot apply a singular map (det = {d})")));
    }
    let interp = b.support().interpolant();
    let grid = b.grid();
    let values = grid
        .nodes()
        .map(|theta| {
            let (sn, cs) = theta.sin_cos();
            let x = m[0][0] * cs + m[1][0] * sn;
            let y = m[0][1] * cs + m[1][1] * sn;
            x.hypot(y) * interp.value(angle_of(x, y))
        })
        .collect();
    SupportBody::new(PeriodicField::new(grid.clone(), values)?.symmetrize())
}

pub fn ellipse_body(e: &CenteredEllipse, grid: &AngularGrid) -> Result<SupportBody> {
    SupportBody::from_fn(grid, |t| e.support(t))
}

// The design iteration only supplies a starting shape; flat contacts make its
// tail sublinear, so the final digits come from a direct minimax polish.
const KHACHIYAN_TOL: f64 = 1e-4;
const KHACHIYAN_MAX_ITER: usize = 100_000;

/// Minimum-area centered ellipse containing the points `±x_i` (D-optimal
/// design with Todd–Yıldırım away steps). Returns the shape matrix.
fn mvee_centered(points: &[[f64; 2]]) -> Result<Mat2> {
    let m_pts = points.len();
    let d = 2.0;
    let mut u = vec![1.0 / m_pts as f64; m_pts];
    let mut mm = [[0.0; 2]; 2];
    for (x, &w) in points.iter().zip(&u) {
        mm[0][0] += w * x[0] * x[0];
        mm[0][1] += w * x[0] * x[1];
        mm[1][1] += w * x[1] * x[1];
    }
    mm[1][0] = mm[0][1];
    let kappa = |mm: &Mat2, x: &[f64; 2]| {
        let dt = det(mm);
        (mm[1][1] * x[0] * x[0] - 2.0 * mm[0][1] * x[0] * x[1] + mm[0][0] * x[1] * x[1]) / dt
    };
    for _ in 0..KHACHIYAN_MAX_ITER {
        let mut jp = 0;
        let mut kp = f64::NEG_INFINITY;
        let mut jm = 0;
        let mut km = f64::INFINITY;
        for (i, x) in points.iter().enumerate() {
            let k = kappa(&mm, x);
            if k > kp {
                kp = k;
                jp = i;
            }
            if u[i] > 0.0 && k < km {
                km = k;
                jm = i;
            }
        }
        let eps_plus = kp / d - 1.0;
        let eps_minus = 1.0 - km / d;
        if eps_plus <= KHACHIYAN_TOL {
            return Ok([[d * mm[0][0], d * mm[0][1]], [d * mm[1][0], d * mm[1][1]]]);
        }
        let (j, beta) = if eps_plus > eps_minus {
            (jp, (kp - d) / (d * (kp - 1.0)))
        } else {
            let full = (d - km) / (d * (km - 1.0));
            let cap = u[jm] / (1.0 - u[jm]);
            (jm, -full.min(cap))
        };
        for w in u.iter_mut() {
            *w *= 1.0 - beta;
        }
        u[j] = (u[j] + beta).max(0.0);
        let x = points[j];
        for (a, row) in mm.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (1.0 - beta) * *v + beta * x[a] * x[c];
            }
        }
    }
    Err(Error::Numeric(format!(
        "minimum-volume ellipse iteration did not converge in {KHACHIYAN_MAX_ITER} steps"
    )))
}

/// Largest value of `s_b/s_E` over the circle, refined between sample angles.
fn max_support_ratio(b: &SupportBody, e: &CenteredEllipse) -> f64 {
    let interp = b.support().interpolant();
    let ratio = |t: f64| interp.value(t) / e.support(t);
    let m = 4 * b.grid().n();
    let h = PI / m as f64;
    let (best_i, best) = (0..m)
        .map(|i| (i, ratio(i as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let c = best_i as f64 * h;
    let (_, neg) = golden_min(|t| -ratio(t), c - h, c + h, 1e-12);
    best.max(-neg)
}

/// Minimal-area centered ellipse containing `b`.
pub fn lowner_ellipse(b: &SupportBody) -> Result<CenteredEllipse> {
    let n = b.grid().n();
    let m = 2 * n;
    let interp = b.support().interpolant();
    let points: Vec<[f64; 2]> = (0..m)
        .map(|i| {
            let theta = PI * i as f64 / m as f64;
            let (s, ds) = interp.value_and_derivative(theta);
            let (sn, cs) = theta.sin_cos();
            [s * cs - ds * sn, s * sn + ds * cs]
        })
        .collect();
    let start = CenteredEllipse::from_shape_matrix(&mvee_centered(&points)?)?;
    // Area of the smallest dilate of the unimodular shape exp(2X) holding every
    // point is π·max_i x_iᵀ exp(−2X) x_i; X = [[x, y], [y, −x]].
    let dilation = |c: [f64; 2]| {
        let (lambda, phi) = (c[0].hypot(c[1]), 0.5 * c[1].atan2(c[0]));
        let inv = UnimodularMap::stretch(-2.0 * lambda, phi).matrix();
        points
            .iter()
            .map(|x| inv[0][0] * x[0] * x[0] + 2.0 * inv[0][1] * x[0] * x[1] + inv[1][1] * x[1] * x[1])
            .fold(0.0, f64::max)
    };
    let lambda0 = 0.5 * (start.a / start.b).ln();
    let x0 = [lambda0 * (2.0 * start.phi).cos(), lambda0 * (2.0 * start.phi).sin()];
    let (best, _) = nelder_mead(dilation, x0, 1e-3, 1e-14, 1e-10, 20_000)?;
    let (lambda, phi) = (best[0].hypot(best[1]), 0.5 * best[1].atan2(best[0]));
    let e = CenteredEllipse::new(lambda.exp(), (-lambda).exp(), phi)?;
    // Containment on the whole circle, not only at the samples.
    Ok(e.scaled(max_support_ratio(b, &e)))
}

/// Maximal-area centered ellipse inside `b`, the polar of the Löwner ellipse of the polar body.
pub fn john_ellipse(b: &SupportBody) -> Result<CenteredEllipse> {
    let e = lowner_ellipse(&b.polar_dual()?)?.polar();
    // Guard against residual polar-dual error: shrink until inscribed.
    let interp = b.support().interpolant();
    let m = 4 * b.grid().n();
    let worst = (0..m)
        .map(|i| {
            let t = PI * i as f64 / m as f64;
            e.support(t) / interp.value(t)
        })
        .fold(0.0, f64::max);
    Ok(if worst > 1.0 { e.scaled(1.0 / worst) } else { e })
}

const INCLUSION_TOL: f64 = 1e-7;

/// Inner and outer ellipses with `κ₀(E_in) = max κ₀(b)` and `κ₀(E_out) = min κ₀(b)`.
pub fn ellipse_sandwich(b: &SupportBody) -> Result<(CenteredEllipse, CenteredEllipse)> {
    let k0 = b.centro_affine_curvature();
    let big = k0.max_refined().1;
    let small = k0.min_refined().1;
    let john = john_ellipse(b)?;
    let lowner = lowner_ellipse(b)?;
    let inner = john.scaled((john.centro_affine_curvature() / big).powf(0.25));
    let outer = lowner.scaled((lowner.centro_affine_curvature() / small).powf(0.25));
    for (i, (theta, &s)) in b.grid().nodes().zip(b.support().values()).enumerate() {
        if inner.support(theta) > s + INCLUSION_TOL || s > outer.support(theta) + INCLUSION_TOL {
            return Err(Error::Numeric(format!(
                "ellipse sandwich inclusion fails at node {i}: {} <= {s} <= {} violated",
                inner.support(theta),
                outer.support(theta)
            )));
        }
    }
    Ok((inner, outer))
}

/// Checks `E ⊆ b ⊆ √2·E` nodewise within `1e-7`.
pub fn john_chain_holds(b: &SupportBody, e: &CenteredEllipse) -> bool {
    b.grid().nodes().zip(b.support().values()).all(|(t, &s)| {
        let se = e.support(t);
        se <= s + INCLUSION_TOL && s <= SQRT_2 * se + INCLUSION_TOL
    })
}

/// Length of `S·∂K` for `S = exp([[x, y], [y, −x]])`, integrated as `∫ |S t(θ)| r(θ) dθ`.
fn stretched_length(b: &SupportBody, x: f64, y: f64) -> f64 {
    let m = stretch_from_coords(x, y).matrix();
    let grid = b.grid();
    let h = grid.spacing();
    h * grid
        .nodes()
        .zip(b.radius_of_curvature().values())
        .map(|(t, &r)| {
            let (sn, cs) = t.sin_cos();
            let (tx, ty) = (-sn, cs);
            (m[0][0] * tx + m[0][1] * ty).hypot(m[1][0] * tx + m[1][1] * ty) * r
        })
        .sum::<f64>()
}

fn stretch_from_coords(x: f64, y: f64) -> UnimodularMap {
    let lambda = x.hypot(y);
    let phi = 0.5 * y.atan2(x);
    UnimodularMap::stretch(lambda, phi)
}

const MAX_STRETCH: f64 = 3.0;

/// Nelder–Mead in two variables.
fn nelder_mead(
    f: impl Fn([f64; 2]) -> f64,
    start: [f64; 2],
    step: f64,
    rel_tol: f64,
    size_tol: f64,
    max_evals: usize,
) -> Result<([f64; 2], f64)> {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut vals = simplex.map(&f);
    let mut evals = 3;
    loop {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        let spread = (vals[2] - vals[0]).abs() / vals[0].abs().max(1e-300);
        let size = (0..2)
            .map(|k| (simplex[1][k] - simplex[0][k]).abs().max((simplex[2][k] - simplex[0][k]).abs()))
            .fold(0.0, f64::max);
        if spread < rel_tol && size < size_tol {
            return Ok((simplex[0], vals[0]));
        }
        if evals > max_evals {
            return Err(Error::Numeric(format!(
                "length minimization did not converge; best so far {:?} with length {}",
                simplex[0], vals[0]
            )));
        }
        let centroid = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let along = |t: f64| {
            [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])]
        };
        let xr = along(-1.0);
        let fr = f(xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            evals += 1;
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let xc = along(-0.5);
                (xc, f(xc))
            } else {
                let xc = along(0.5);
                (xc, f(xc))
            };
            evals += 1;
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    for k in 0..2 {
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    }
                    vals[i] = f(simplex[i]);
                }
                evals += 2;
            }
        }
    }
}

/// Symmetric unimodular map minimizing the Euclidean length of the image, and the image.
///
/// The search starts from the identity, so among equally good minimizers the
/// one nearest the identity (smallest stretch) is returned.
pub fn min_length_normalize(b: &SupportBody) -> Result<(UnimodularMap, SupportBody)> {
    let objective = |c: [f64; 2]| {
        if c[0].hypot(c[1]) > MAX_STRETCH {
            f64::INFINITY
        } else {
            stretched_length(b, c[0], c[1])
        }
    };
    let (best, best_len) = nelder_mead(objective, [0.0, 0.0], 0.1, 1e-10, 1e-7, 4000)?;
    let base = stretched_length(b, 0.0, 0.0);
    let map = if best_len < base {
        stretch_from_coords(best[0], best[1])
    } else {
        UnimodularMap::identity()
    };
    let (lambda, phi) = map.stretch_parameters();
    let map = UnimodularMap::stretch(lambda, phi);
    let image = apply_map(b, &map.matrix())?;
    Ok((map, image))
}
