//! Extinction-time distribution on a uniform grid.
//!
//! `F_n(k/n)` is computed by the forward recursion
//!
//! ```text
//! F_n(k/n) = E[ 1{ζ ≤ k/n} exp( Σ_{ℓ=1..k} (F_n((k-ℓ)/n) - 1) ξ_ℓ ) ],
//! ξ_ℓ = ∫_{(ℓ-1)/n}^{ℓ/n} λ̂(u) du,
//! ```
//!
//! which only looks at earlier grid values. Each `ξ_ℓ` is the exact segment
//! integral of a piecewise-linear draw.
//!
//! Two ways of taking the outer expectation are provided:
//!
//! * [`Kernel::Nodes`]: product-rule quadrature nodes over the duration laws,
//!   each treated as one deterministic draw.
//! * [`Kernel::ExactDuration`]: for the constant-rate families the exponent
//!   is piecewise linear in the infectious duration `η` with kinks on the
//!   grid, so the expectation over `η` is integrated in closed form cell by
//!   cell. Only the exposed duration is still sampled by nodes.
//!
//! [`Kernel::Auto`] uses the exact route whenever it applies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::profiles::{DurationLaw, InfectivityLaw, TiltBasis};
use crate::quadrature::{duration_nodes, law_nodes, tilted_nodes, QuadratureSpec, WeightedDraw};

pub const DEFAULT_N: usize = 32;
pub const DEFAULT_HORIZON: f64 = 400.0;
pub const DEFAULT_CUTOFF: f64 = 300.0;

/// Largest number of grid points accepted.
const MAX_GRID: f64 = 1e8;
/// Exponential durations beyond this tail mass are ignored by the exact kernel.
const EXACT_TAIL: f64 = 1e-15;
/// Below this many nodes the per-step node sum stays on the calling thread.
const PARALLEL_NODES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    #[default]
    Step,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    Auto,
    Nodes,
    ExactDuration,
}

/// Extinction-time CDF sampled at `k/n`, `k = 0..=⌊nT⌋`.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfGrid {
    pub n: usize,
    pub horizon: f64,
    pub values: Vec<f64>,
    pub lambda_hat_star: f64,
    pub interp: Interp,
}

/// Result of integrating `1 - F` up to a cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean_days: f64,
    /// `1 - F(Λ)`.
    pub tail_mass: f64,
    /// `(1 - F(Λ)) / |ρ|` when a decay rate is supplied.
    pub truncation_bound: Option<f64>,
    /// Set when more than 1% of the mass lies past the cutoff.
    pub truncation_dominates: bool,
}

impl CdfGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }

    pub fn with_interp(mut self, interp: Interp) -> Self {
        self.interp = interp;
        self
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        let x = t * self.n as f64;
        let k = (x.floor() as usize).min(self.values.len() - 1);
        let frac = x - k as f64;
        Ok(match self.interp {
            Interp::Step => self.values[k],
            Interp::Linear if frac > 0.0 && k + 1 < self.values.len() => {
                self.values[k] + frac * (self.values[k + 1] - self.values[k])
            }
            Interp::Linear => self.values[k],
        })
    }

    /// Pointwise `M`-th power: extinction of `M` independent families.
    pub fn power(&self, m: u32) -> Result<CdfGrid> {
        if m == 0 {
            return Err(domain("power needs at least one ancestor"));
        }
        Ok(CdfGrid {
            values: self.values.iter().map(|v| v.powi(m as i32)).collect(),
            ..self.clone()
        })
    }

    /// `(1/n) Σ_{k=1}^{⌊nΛ⌋} (1 - F(k/n))`.
    pub fn mean(&self, cutoff: f64, rho: Option<f64>) -> Result<MeanEstimate> {
        if !(cutoff >= 0.0 && cutoff <= self.horizon) {
            return Err(domain(format!("cutoff {cutoff} outside [0, {}]", self.horizon)));
        }
        let last = ((cutoff * self.n as f64).floor() as usize).min(self.values.len() - 1);
        let sum: f64 = self.values[1..=last].iter().map(|v| 1.0 - v).sum();
        let tail_mass = 1.0 - self.values[last];
        Ok(MeanEstimate {
            mean_days: sum / self.n as f64,
            tail_mass,
            truncation_bound: rho.filter(|r| *r < 0.0).map(|r| tail_mass / -r),
            truncation_dominates: tail_mass > 0.01,
        })
    }

    /// Lower bound on each increment, `-(λ̂*/n)(e^{λ̂* T} + 1)`.
    pub fn decrement_bound(&self) -> f64 {
        let r = self.lambda_hat_star;
        -(r / self.n as f64) * ((r * self.horizon).exp() + 1.0)
    }
}

pub fn eval_cdf(grid: &CdfGrid, t: f64) -> Result<f64> {
    grid.eval(t)
}

pub fn power_cdf(grid: &CdfGrid, m: u32) -> Result<CdfGrid> {
    grid.power(m)
}

pub fn mean_from_cdf(grid: &CdfGrid, cutoff: f64, rho: Option<f64>) -> Result<MeanEstimate> {
    grid.mean(cutoff, rho)
}

pub fn solve_cdf(law: &InfectivityLaw, n: usize, horizon: f64, quad: &QuadratureSpec) -> Result<CdfGrid> {
    solve_cdf_with(law, n, horizon, quad, Kernel::Auto)
}

pub fn solve_cdf_with(
    law: &InfectivityLaw,
    n: usize,
    horizon: f64,
    quad: &QuadratureSpec,
    kernel: Kernel,
) -> Result<CdfGrid> {
    let steps = grid_steps(n, horizon)?;
    let values = untilted_values(law, n, steps, quad, kernel)?;
    finish(values, n, horizon, law.rate_bound())
}

fn untilted_values(law: &InfectivityLaw, n: usize, steps: usize, quad: &QuadratureSpec, kernel: Kernel) -> Result<Vec<f64>> {
    let exact = law.constant_height().is_some();
    Ok(match kernel {
        Kernel::ExactDuration if !exact => {
            return Err(domain("exact-duration kernel needs a constant-rate family"));
        }
        Kernel::Auto | Kernel::ExactDuration if exact => exact_duration_recursion(law, n, steps, quad),
        _ => node_recursion(&law_nodes(law, quad), n, steps, None),
    })
}

/// CDF for an ancestor infected at `-u·span` before time 0, `u ~ U(0, 1)`.
/// Its offspring are fresh infections and follow the untilted CDF.
pub fn solve_tilted_cdf(
    law: &InfectivityLaw,
    n: usize,
    horizon: f64,
    quad: &QuadratureSpec,
    basis: TiltBasis,
) -> Result<CdfGrid> {
    let steps = grid_steps(n, horizon)?;
    let children = untilted_values(law, n, steps, quad, Kernel::Auto)?;
    let values = node_recursion(&tilted_nodes(law, quad, basis), n, steps, Some(&children));
    finish(values, n, horizon, law.rate_bound())
}

fn grid_steps(n: usize, horizon: f64) -> Result<usize> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(domain(format!("horizon {horizon} must be positive")));
    }
    let steps = (n as f64 * horizon).floor();
    if steps > MAX_GRID {
        return Err(Error::GridOverflow(steps));
    }
    Ok(steps as usize)
}

fn finish(values: Vec<f64>, n: usize, horizon: f64, lambda_hat_star: f64) -> Result<CdfGrid> {
    let grid = CdfGrid {
        n,
        horizon,
        values,
        lambda_hat_star,
        interp: Interp::Step,
    };
    let bound = grid.decrement_bound();
    if let Some(k) = grid.values.windows(2).position(|w| w[1] - w[0] < bound) {
        return Err(Error::Invariant(format!("increment at k = {k} below {bound}")));
    }
    Ok(grid)
}

/// Per-node exponent data: `ξ_ℓ` for `ℓ = first..=last`, stored in reverse
/// so the exponent is a forward dot product with the grid history.
struct NodeKernel {
    weight: f64,
    lifetime: f64,
    first: usize,
    last: usize,
    xi_rev: Vec<f64>,
}

impl NodeKernel {
    fn new(node: &WeightedDraw, n: usize) -> Self {
        let nf = n as f64;
        let lifetime = node.draw.lifetime();
        let last = (lifetime * nf).ceil() as usize;
        let xi: Vec<f64> = (1..=last)
            .map(|l| node.draw.integral((l - 1) as f64 / nf, l as f64 / nf))
            .collect();
        let first = xi.iter().position(|&x| x != 0.0).map_or(last + 1, |p| p + 1);
        let xi_rev = if first <= last {
            xi[first - 1..].iter().rev().copied().collect()
        } else {
            Vec::new()
        };
        NodeKernel {
            weight: node.weight,
            lifetime,
            first,
            last,
            xi_rev,
        }
    }

    /// `w_q exp(Σ ξ_ℓ (F[k-ℓ] - 1))`, or 0 while the node is alive at `k/n`.
    /// `shifted[j] = F[j] - 1`.
    fn contribution(&self, k: usize, t: f64, shifted: &[f64]) -> f64 {
        if self.lifetime > t {
            return 0.0;
        }
        if self.xi_rev.is_empty() {
            return self.weight;
        }
        // lifetime ≤ k/n gives last ≤ k up to rounding of lifetime·n
        let last = self.last.min(k);
        let skip = self.last - last;
        if self.first > last {
            return self.weight;
        }
        let history = &shifted[k - last..=k - self.first];
        let e: f64 = self.xi_rev[skip..].iter().zip(history).map(|(x, w)| x * w).sum();
        self.weight * e.exp()
    }
}

/// Runs the node recursion. With `children` given, offspring follow that
/// CDF instead of the one being computed (used for tilted ancestors, whose
/// children are freshly infected).
fn node_recursion(nodes: &[WeightedDraw], n: usize, steps: usize, children: Option<&[f64]>) -> Vec<f64> {
    let kernels: Vec<NodeKernel> = nodes
        .iter()
        .filter(|q| q.weight > 0.0)
        .map(|q| NodeKernel::new(q, n))
        .collect();
    let mut values = vec![0.0; steps + 1];
    let mut shifted = match children {
        Some(f) => f.iter().map(|v| v - 1.0).collect(),
        None => vec![-1.0; steps + 1],
    };
    let mut buf = vec![0.0; kernels.len()];
    let nf = n as f64;
    values[0] = kernels
        .iter()
        .filter(|q| q.lifetime <= 0.0)
        .map(|q| q.weight)
        .sum::<f64>()
        .min(1.0);
    if children.is_none() {
        shifted[0] = values[0] - 1.0;
    }
    for k in 1..=steps {
        let t = k as f64 / nf;
        let hist = &shifted[..];
        if kernels.len() >= PARALLEL_NODES {
            buf.par_iter_mut()
                .zip(kernels.par_iter())
                .for_each(|(b, q)| *b = q.contribution(k, t, hist));
        } else {
            for (b, q) in buf.iter_mut().zip(&kernels) {
                *b = q.contribution(k, t, hist);
            }
        }
        let v = buf.iter().sum::<f64>().clamp(0.0, 1.0);
        values[k] = v;
        if children.is_none() {
            shifted[k] = v - 1.0;
        }
    }
    values
}

/// Exact expectation over `η` for `λ̂ = c·1{τ ≤ t < τ+η}`.
///
/// With `D_ℓ = 1 - F[k-ℓ]` and `G(x) = ∫_0^x D_{⌈nu⌉} du`, the exponent is
/// `-c (G(τ+η) - G(τ))`, linear in `η` inside each grid cell, so
/// `∫ exp(exponent) P_η(dη)` is a sum of closed-form cell integrals.
fn exact_duration_recursion(law: &InfectivityLaw, n: usize, steps: usize, quad: &QuadratureSpec) -> Vec<f64> {
    let c = law.constant_height().expect("constant-rate family");
    let eta = law.infectious_law();
    let taus: Vec<(f64, f64)> = match law.exposed_law() {
        DurationLaw::Dirac { a } => vec![(a, 1.0)],
        xi => duration_nodes(&xi, quad.m_tau, quad.rule),
    };
    let eta_cap = match eta {
        DurationLaw::Exponential { .. } => eta.quantile(1.0 - EXACT_TAIL),
        _ => eta.upper_bound(),
    };
    let tau_max = taus.iter().map(|t| t.0).fold(0.0, f64::max);
    let nf = n as f64;
    let h = 1.0 / nf;
    // cells beyond this index are never reached by τ + η
    let reach = ((tau_max + eta_cap) * nf).ceil() as usize + 1;

    let mut values = vec![0.0; steps + 1];
    // prefix[j] = G(j/n)
    let mut prefix = vec![0.0; steps.min(reach) + 2];
    let mut d = vec![0.0; steps.min(reach) + 2];
    for k in 1..=steps {
        let t = k as f64 * h;
        let jmax = k.min(reach);
        prefix[0] = 0.0;
        for j in 1..=jmax {
            d[j] = 1.0 - values[k - j];
            prefix[j] = prefix[j - 1] + d[j] * h;
        }
        let g_at = |x: f64| -> f64 {
            let j = ((x * nf).floor() as usize).min(jmax.saturating_sub(1));
            prefix[j] + d[j + 1] * (x - j as f64 * h)
        };
        let mut total = 0.0;
        for &(tau, wt) in &taus {
            if tau > t {
                continue;
            }
            let g0 = g_at(tau);
            let contrib = match eta {
                DurationLaw::Dirac { a } => {
                    if tau + a <= t {
                        (-c * (g_at(tau + a) - g0)).exp()
                    } else {
                        0.0
                    }
                }
                DurationLaw::Uniform { lo, hi } => {
                    let dens = 1.0 / (hi - lo);
                    cell_sweep(tau + lo, (tau + hi).min(t), nf, &prefix, &d, g0, c, |_xa, a_exp, slope, len| {
                        dens * a_exp * len * phi1(-slope * len)
                    })
                }
                DurationLaw::Exponential { rate } => {
                    cell_sweep(tau, (tau + eta_cap).min(t), nf, &prefix, &d, g0, c, |xa, a_exp, slope, len| {
                        let s = slope + rate;
                        rate * (-rate * (xa - tau)).exp() * a_exp * len * phi1(-s * len)
                    })
                }
            };
            total += wt * contrib;
        }
        values[k] = total.clamp(0.0, 1.0);
    }
    values
}

/// Sums `piece(x_a, e^{-c(G(x_a) - g0)}, c·D_j, x_b - x_a)` over the grid
/// cells covering `[from, to]`.
#[allow(clippy::too_many_arguments)]
fn cell_sweep(
    from: f64,
    to: f64,
    nf: f64,
    prefix: &[f64],
    d: &[f64],
    g0: f64,
    c: f64,
    piece: impl Fn(f64, f64, f64, f64) -> f64,
) -> f64 {
    if to <= from {
        return 0.0;
    }
    let h = 1.0 / nf;
    let mut acc = 0.0;
    let mut j = (from * nf).floor() as usize + 1; // cell ((j-1)/n, j/n]
    let mut xa = from;
    loop {
        let cell_end = j as f64 * h;
        let xb = cell_end.min(to);
        if xb > xa {
            let g_a = prefix[j - 1] + d[j] * (xa - (j - 1) as f64 * h);
            let a_exp = (-c * (g_a - g0)).exp();
            acc += piece(xa, a_exp, c * d[j], xb - xa);
        }
        if cell_end >= to {
            break;
        }
        xa = cell_end;
        j += 1;
    }
    acc
}

/// `(e^z - 1)/z`.
fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}
