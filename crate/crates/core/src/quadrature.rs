//! Deterministic quadrature over duration laws.
//!
//! Dirac laws collapse to one node. Uniform laws use Gauss–Legendre (or the
//! midpoint rule). Exponential laws use Gauss–Laguerre in `rate·x`.

use serde::{Deserialize, Serialize};

use crate::profiles::{DurationLaw, Family, InfectivityLaw, ProfileDraw, TiltBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Midpoint,
    #[default]
    Gauss,
}

/// Node counts for the exposed duration, the infectious duration and the
/// residual-age fraction `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub m_tau: usize,
    pub m_eta: usize,
    pub m_u: usize,
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            m_tau: 8,
            m_eta: 16,
            m_u: 16,
            rule: QuadratureRule::Gauss,
        }
    }
}

impl QuadratureSpec {
    pub fn new(m_tau: usize, m_eta: usize, m_u: usize, rule: QuadratureRule) -> Self {
        QuadratureSpec {
            m_tau: m_tau.max(1),
            m_eta: m_eta.max(1),
            m_u: m_u.max(1),
            rule,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(m, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_m(z), P_m'(z))`.
fn legendre(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Laguerre nodes and weights for `∫_0^∞ e^{-x} f(x) dx`.
pub fn gauss_laguerre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let n = m as f64;
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * n),
            1 => z + 15.0 / (1.0 + 2.5 * n),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2])
            }
        };
        for _ in 0..200 {
            let (p, pp, _) = laguerre(m, z);
            let dz = p / pp;
            z -= dz;
            if dz.abs() <= 1e-14 * z.max(1.0) {
                break;
            }
        }
        let (_, pp, prev) = laguerre(m, z);
        x[i] = z;
        w[i] = -1.0 / (pp * n * prev);
    }
    (x, w)
}

/// `(L_m(z), L_m'(z), L_{m-1}(z))`.
fn laguerre(m: usize, z: f64) -> (f64, f64, f64) {
    let (mut p1, mut p2) = (1.0, 0.0);
    for j in 1..=m {
        let p3 = p2;
        p2 = p1;
        p1 = ((2 * j - 1) as f64 - z) * p2 / j as f64 - (j - 1) as f64 * p3 / j as f64;
    }
    let pp = (m as f64 * p1 - m as f64 * p2) / z;
    (p1, pp, p2)
}

/// Weighted nodes `(x, w)` with `Σw ≈ 1` approximating expectations under `law`.
pub fn duration_nodes(law: &DurationLaw, m: usize, rule: QuadratureRule) -> Vec<(f64, f64)> {
    let m = m.max(1);
    match (*law, rule) {
        (DurationLaw::Dirac { a }, _) => vec![(a, 1.0)],
        (DurationLaw::Uniform { lo, hi }, QuadratureRule::Gauss) => {
            let (x, w) = gauss_legendre(m);
            x.iter()
                .zip(&w)
                .map(|(&xi, &wi)| (0.5 * (lo + hi) + 0.5 * (hi - lo) * xi, 0.5 * wi))
                .collect()
        }
        (DurationLaw::Exponential { rate }, QuadratureRule::Gauss) => {
            let (x, w) = gauss_laguerre(m);
            x.iter()
                .zip(&w)
                .map(|(&xi, &wi)| (xi / rate, wi))
                .collect()
        }
        (law, QuadratureRule::Midpoint) => (0..m)
            .map(|j| (law.quantile((j as f64 + 0.5) / m as f64), 1.0 / m as f64))
            .collect(),
    }
}

/// Nodes for the uniform residual-age fraction on `[0, 1]`.
pub fn unit_nodes(m: usize, rule: QuadratureRule) -> Vec<(f64, f64)> {
    duration_nodes(&DurationLaw::Uniform { lo: 0.0, hi: 1.0 }, m, rule)
}

/// A deterministic trajectory standing for part of the law's mass.
#[derive(Clone, Debug)]
pub struct WeightedDraw {
    pub draw: ProfileDraw,
    pub weight: f64,
}

/// Product-rule nodes over the exposed and infectious durations of `law`.
pub fn law_nodes(law: &InfectivityLaw, quad: &QuadratureSpec) -> Vec<WeightedDraw> {
    let taus = match law.family() {
        Family::ConstantRate { .. } => vec![(0.0, 1.0)],
        _ => duration_nodes(&law.exposed_law(), quad.m_tau, quad.rule),
    };
    let etas = duration_nodes(&law.infectious_law(), quad.m_eta, quad.rule);
    let mut out = Vec::with_capacity(taus.len() * etas.len());
    for &(tau, wt) in &taus {
        for &(eta, we) in &etas {
            out.push(WeightedDraw {
                draw: law.profile(tau, eta),
                weight: wt * we,
            });
        }
    }
    out
}

/// Law nodes further split over the residual-age fraction `u ~ U(0, 1)`.
pub fn tilted_nodes(law: &InfectivityLaw, quad: &QuadratureSpec, basis: TiltBasis) -> Vec<WeightedDraw> {
    let us = unit_nodes(quad.m_u, quad.rule);
    law_nodes(law, quad)
        .into_iter()
        .flat_map(|node| {
            us.iter()
                .map(|&(u, wu)| WeightedDraw {
                    draw: node.draw.residual(u, basis),
                    weight: node.weight * wu,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `E[f(X)]` for `X ~ law`, using `m`-point Gauss panels split at the given
/// breakpoints so that kinks of `f` do not spoil convergence.
pub fn expect_piecewise(law: &DurationLaw, m: usize, breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let (gx, gw) = gauss_legendre(m.max(1));
    let panel = |a: f64, b: f64, density: &dyn Fn(f64) -> f64| -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        gx.iter().zip(&gw).map(|(&x, &w)| {
            let t = c + h * x;
            w * h * density(t) * f(t)
        }).sum()
    };
    match *law {
        DurationLaw::Dirac { a } => f(a),
        DurationLaw::Uniform { lo, hi } => {
            let pts = panel_points(lo, hi, breaks);
            let dens = |_: f64| 1.0 / (hi - lo);
            pts.windows(2).map(|p| panel(p[0], p[1], &dens)).sum()
        }
        DurationLaw::Exponential { rate } => {
            let last = breaks.iter().copied().filter(|&b| b > 0.0).fold(0.0, f64::max);
            let pts = panel_points(0.0, last, breaks);
            let dens = |t: f64| rate * (-rate * t).exp();
            let body: f64 = pts.windows(2).map(|p| panel(p[0], p[1], &dens)).sum();
            // tail [last, ∞) by Gauss–Laguerre
            let (lx, lw) = gauss_laguerre(m.max(1));
            let tail: f64 = lx.iter().zip(&lw).map(|(&y, &w)| w * f(last + y / rate)).sum();
            body + (-rate * last).exp() * tail
        }
    }
}

fn panel_points(lo: f64, hi: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}
