//! Independent oracles shared by the integration suites. Nothing here calls
//! into the crate's numerics beyond building bodies from closed forms.
#![allow(dead_code)]

use centroflow::lab_cli::{generate_random_body, RandomBodySpec};
use centroflow::{AngularGrid, SupportBody};

pub fn grid(n: usize) -> AngularGrid {
    AngularGrid::new(n).unwrap()
}

/// Radius of a circle under the contracting flow: `dR/dt = −R^{(2−3p)/(p+2)}`,
/// integrated with fixed-step scalar RK4.
pub fn circle_radius_contracting(r0: f64, p: f64, t: f64) -> f64 {
    scalar_rk4(r0, t, 20_000, |r| -r.powf((2.0 - 3.0 * p) / (p + 2.0)))
}

/// Expanding circle: `dR/dt = R^{(2+5p)/(p+2)}`.
pub fn circle_radius_expanding(r0: f64, p: f64, t: f64) -> f64 {
    scalar_rk4(r0, t, 20_000, |r| r.powf((2.0 + 5.0 * p) / (p + 2.0)))
}

fn scalar_rk4(y0: f64, t: f64, steps: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = t / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// `T = R₀^{4p/(p+2)} (p+2)/(4p)`.
pub fn circle_extinction_time(r0: f64, p: f64) -> f64 {
    r0.powf(4.0 * p / (p + 2.0)) * (p + 2.0) / (4.0 * p)
}

/// Closed-form expanding radius `(1 − (4p/(p+2)) t)^{−(p+2)/(4p)}` from the unit circle.
pub fn expanding_radius_closed(p: f64, t: f64) -> f64 {
    (1.0 - 4.0 * p / (p + 2.0) * t).powf(-(p + 2.0) / (4.0 * p))
}

/// Support function of the axis-aligned ellipse with semi-axes a, b.
pub fn ellipse_support(a: f64, b: f64, theta: f64) -> f64 {
    (a * a * theta.cos().powi(2) + b * b * theta.sin().powi(2)).sqrt()
}

pub fn ellipse(g: &AngularGrid, a: f64, b: f64) -> SupportBody {
    SupportBody::from_fn(g, |t| ellipse_support(a, b, t)).unwrap()
}

/// `κ₀ = 1/(ab)²` on a centered ellipse.
pub fn ellipse_centro_affine_curvature(a: f64, b: f64) -> f64 {
    1.0 / (a * b).powi(2)
}

pub fn random_body(g: &AngularGrid, seed: u64) -> SupportBody {
    generate_random_body(&RandomBodySpec { seed, ..Default::default() }, g).unwrap()
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
