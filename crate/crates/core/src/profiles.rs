//! Infectivity laws and their realised piecewise-linear trajectories.
//!
//! A law describes the random infectivity curve `λ̂(·)` of one infected
//! individual: a family (constant rate, exposed then constant rate, or a
//! triangular ramp) together with the laws of the exposed and infectious
//! durations. Every realisation is piecewise linear, so integrals and
//! Laplace transforms of a single draw are computed in closed form.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default length of the rising part of the triangular profile, in days.
pub const DEFAULT_RAMP: f64 = 1.5;

/// Law of a nonnegative duration (days).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DurationLaw {
    Dirac { a: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl DurationLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DurationLaw::Dirac { a } if a.is_finite() && a >= 0.0 => Ok(()),
            DurationLaw::Exponential { rate } if rate.is_finite() && rate > 0.0 => Ok(()),
            DurationLaw::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi => {
                Ok(())
            }
            other => Err(Error::InvalidLaw(format!("bad duration law {other:?}"))),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DurationLaw::Dirac { a } => a,
            DurationLaw::Exponential { rate } => 1.0 / rate,
            DurationLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DurationLaw::Dirac { a } => {
                if x >= a {
                    1.0
                } else {
                    0.0
                }
            }
            DurationLaw::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            DurationLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Quantile function for `p` in `[0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            DurationLaw::Dirac { a } => a,
            DurationLaw::Exponential { rate } => -(-p).ln_1p() / rate,
            DurationLaw::Uniform { lo, hi } => lo + p * (hi - lo),
        }
    }

    /// Essential infimum of the law.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            DurationLaw::Dirac { a } => a,
            DurationLaw::Exponential { .. } => 0.0,
            DurationLaw::Uniform { lo, .. } => lo,
        }
    }

    /// Essential supremum (infinite for the exponential law).
    pub fn upper_bound(&self) -> f64 {
        match *self {
            DurationLaw::Dirac { a } => a,
            DurationLaw::Exponential { .. } => f64::INFINITY,
            DurationLaw::Uniform { hi, .. } => hi,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DurationLaw::Dirac { a } => a,
            DurationLaw::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            DurationLaw::Uniform { lo, hi } => rng.random_range(lo..hi),
        }
    }

    fn exponential_rate(&self) -> Option<f64> {
        match *self {
            DurationLaw::Exponential { rate } => Some(rate),
            _ => None,
        }
    }
}

/// Parametric family of infectivity curves (unscaled rates).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `λ` on `[0, η)`.
    ConstantRate { lambda: f64, eta: DurationLaw },
    /// Zero on `[0, ξ)`, then `λ` on `[ξ, ξ + η)`.
    ExposedConstantRate {
        lambda: f64,
        xi: DurationLaw,
        eta: DurationLaw,
    },
    /// Zero on `[0, τ)`, linear up to `peak` over `ramp` days, then linear
    /// down to zero at `τ + η`.
    TriangularRamp {
        peak: f64,
        ramp: f64,
        tau: DurationLaw,
        eta: DurationLaw,
    },
}

/// A validated infectivity law together with the susceptible fraction that
/// scales every drawn rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfectivityLaw {
    family: Family,
    susceptible_fraction: f64,
}

impl InfectivityLaw {
    pub fn new(family: Family, susceptible_fraction: f64) -> Result<Self> {
        let law = InfectivityLaw {
            family,
            susceptible_fraction,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn constant_rate(lambda: f64, eta: DurationLaw) -> Result<Self> {
        Self::new(Family::ConstantRate { lambda, eta }, 1.0)
    }

    pub fn exposed_constant_rate(lambda: f64, xi: DurationLaw, eta: DurationLaw) -> Result<Self> {
        Self::new(Family::ExposedConstantRate { lambda, xi, eta }, 1.0)
    }

    pub fn triangular_ramp(peak: f64, tau: DurationLaw, eta: DurationLaw) -> Result<Self> {
        Self::new(
            Family::TriangularRamp {
                peak,
                ramp: DEFAULT_RAMP,
                tau,
                eta,
            },
            1.0,
        )
    }

    /// Triangular ramp with `τ ~ U(1.5, 2.5)`, `η ~ U(7, 13)` and a 1.5-day ramp.
    pub fn triangular_reference(peak: f64) -> Result<Self> {
        Self::triangular_ramp(
            peak,
            DurationLaw::Uniform { lo: 1.5, hi: 2.5 },
            DurationLaw::Uniform { lo: 7.0, hi: 13.0 },
        )
    }

    fn validate(&self) -> Result<()> {
        let s = self.susceptible_fraction;
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidLaw(format!("susceptible fraction {s} not in (0, 1]")));
        }
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidLaw(format!("{name} = {v} must be finite and >= 0")))
            }
        };
        match self.family {
            Family::ConstantRate { lambda, eta } => {
                nonneg("lambda", lambda)?;
                eta.validate()
            }
            Family::ExposedConstantRate { lambda, xi, eta } => {
                nonneg("lambda", lambda)?;
                xi.validate()?;
                eta.validate()
            }
            Family::TriangularRamp { peak, ramp, tau, eta } => {
                nonneg("peak", peak)?;
                if !(ramp.is_finite() && ramp > 0.0) {
                    return Err(Error::InvalidLaw(format!("ramp = {ramp} must be > 0")));
                }
                tau.validate()?;
                eta.validate()?;
                let ok = match eta {
                    DurationLaw::Dirac { a } => a > ramp,
                    DurationLaw::Uniform { lo, .. } => lo > ramp,
                    DurationLaw::Exponential { .. } => false,
                };
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidLaw(format!(
                        "triangular ramp needs P(eta > {ramp}) = 1, got {eta:?}"
                    )))
                }
            }
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn susceptible_fraction(&self) -> f64 {
        self.susceptible_fraction
    }

    /// Same law with the susceptible fraction replaced by `s_bar`.
    pub fn scaled(&self, s_bar: f64) -> Result<Self> {
        if !(s_bar > 0.0 && s_bar <= 1.0) {
            return Err(domain(format!("susceptible fraction {s_bar} not in (0, 1]")));
        }
        Self::new(self.family, s_bar)
    }

    /// Same family with the triangular ramp length replaced.
    pub fn with_ramp(&self, ramp: f64) -> Result<Self> {
        match self.family {
            Family::TriangularRamp { peak, tau, eta, .. } => Self::new(
                Family::TriangularRamp { peak, ramp, tau, eta },
                self.susceptible_fraction,
            ),
            _ => Err(domain("ramp only applies to the triangular family")),
        }
    }

    /// Uniform bound `λ̂*` on every drawn rate.
    pub fn rate_bound(&self) -> f64 {
        let raw = match self.family {
            Family::ConstantRate { lambda, .. } | Family::ExposedConstantRate { lambda, .. } => lambda,
            Family::TriangularRamp { peak, .. } => peak,
        };
        self.susceptible_fraction * raw
    }

    /// Law of the period before infectivity starts (Dirac(0) when there is none).
    pub fn exposed_law(&self) -> DurationLaw {
        match self.family {
            Family::ConstantRate { .. } => DurationLaw::Dirac { a: 0.0 },
            Family::ExposedConstantRate { xi, .. } => xi,
            Family::TriangularRamp { tau, .. } => tau,
        }
    }

    pub fn infectious_law(&self) -> DurationLaw {
        match self.family {
            Family::ConstantRate { eta, .. }
            | Family::ExposedConstantRate { eta, .. }
            | Family::TriangularRamp { eta, .. } => eta,
        }
    }

    /// Scaled height of the constant-rate families, `None` for the ramp.
    pub fn constant_height(&self) -> Option<f64> {
        match self.family {
            Family::ConstantRate { lambda, .. } | Family::ExposedConstantRate { lambda, .. } => {
                Some(self.susceptible_fraction * lambda)
            }
            Family::TriangularRamp { .. } => None,
        }
    }

    /// Largest `ρ` at which `E∫e^{-ρt}λ̂(t)dt` is infinite, when an
    /// exponential duration makes it diverge.
    pub fn laplace_divergence_boundary(&self) -> Option<f64> {
        [self.exposed_law(), self.infectious_law()]
            .iter()
            .filter_map(|d| d.exponential_rate())
            .map(|rate| -rate)
            .reduce(f64::max)
    }

    /// Deterministic trajectory for given exposed and infectious durations.
    pub fn profile(&self, tau: f64, eta: f64) -> ProfileDraw {
        let s = self.susceptible_fraction;
        let mut segments = Vec::with_capacity(3);
        let mut push = |start: f64, end: f64, v0: f64, v1: f64| {
            if end > start {
                segments.push(Segment {
                    start,
                    end,
                    v_start: v0,
                    v_end: v1,
                });
            }
        };
        match self.family {
            Family::ConstantRate { lambda, .. } => {
                push(0.0, eta, s * lambda, s * lambda);
                return ProfileDraw {
                    tau: 0.0,
                    eta,
                    segments,
                };
            }
            Family::ExposedConstantRate { lambda, .. } => {
                push(0.0, tau, 0.0, 0.0);
                push(tau, tau + eta, s * lambda, s * lambda);
            }
            Family::TriangularRamp { peak, ramp, .. } => {
                let top = s * peak;
                push(0.0, tau, 0.0, 0.0);
                push(tau, tau + ramp, 0.0, top);
                push(tau + ramp, tau + eta, top, 0.0);
            }
        }
        ProfileDraw { tau, eta, segments }
    }

    pub fn sample_profile<R: Rng + ?Sized>(&self, rng: &mut R) -> ProfileDraw {
        let tau = match self.family {
            Family::ConstantRate { .. } => 0.0,
            _ => self.exposed_law().sample(rng),
        };
        let eta = self.infectious_law().sample(rng);
        self.profile(tau, eta)
    }
}

/// Free-function form of [`InfectivityLaw::scaled`].
pub fn scale_law(law: &InfectivityLaw, s_bar: f64) -> Result<InfectivityLaw> {
    law.scaled(s_bar)
}

/// Which duration the residual-age tilt of an ancestor is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltBasis {
    /// Infected at `-u ζ` with `ζ = τ + η` the full lifetime.
    #[default]
    Lifetime,
    /// Infected at `-u η`, `η` the infectious duration only.
    InfectiousPeriod,
}

/// One linear piece on `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub v_start: f64,
    pub v_end: f64,
}

impl Segment {
    fn slope(&self) -> f64 {
        (self.v_end - self.v_start) / (self.end - self.start)
    }

    fn value(&self, t: f64) -> f64 {
        self.v_start + self.slope() * (t - self.start)
    }

    fn area(&self) -> f64 {
        0.5 * (self.end - self.start) * (self.v_start + self.v_end)
    }

    /// `∫ e^{-ρt} λ(t) dt` over the segment.
    fn laplace(&self, rho: f64) -> f64 {
        let h = self.end - self.start;
        let z = -rho * h;
        (-rho * self.start).exp() * (self.v_start * h * phi1(z) + self.slope() * h * h * phi2(z))
    }
}

/// `(e^z - 1) / z`.
fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `((z - 1) e^z + 1) / z^2 = Σ z^j (j+1)/(j+2)!`.
fn phi2(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut term = 0.5; // z^j / (j+2)! at j = 0
        let mut sum = 0.0;
        for j in 0..24 {
            sum += term * (j + 1) as f64;
            term *= z / (j + 3) as f64;
        }
        sum
    } else {
        ((z - 1.0) * z.exp() + 1.0) / (z * z)
    }
}

/// A realised piecewise-linear infectivity trajectory supported on `[0, ζ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileDraw {
    pub tau: f64,
    pub eta: f64,
    pub segments: Vec<Segment>,
}

impl ProfileDraw {
    /// `ζ = τ + η`.
    pub fn lifetime(&self) -> f64 {
        self.tau + self.eta
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.segments
            .iter()
            .find(|s| s.start <= t && t < s.end)
            .map_or(0.0, |s| s.value(t))
    }

    pub fn total_infectivity(&self) -> f64 {
        self.segments.iter().map(Segment::area).sum()
    }

    /// Exact `∫_a^b λ̂(t) dt`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        for s in &self.segments {
            let x0 = a.max(s.start);
            let x1 = b.min(s.end);
            if x1 > x0 {
                acc += (x1 - x0) * (s.v_start + s.slope() * (0.5 * (x0 + x1) - s.start));
            }
        }
        acc
    }

    /// Exact `∫_0^∞ e^{-ρt} λ̂(t) dt`; any sign of `ρ` is allowed.
    pub fn laplace(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            return self.total_infectivity();
        }
        self.segments.iter().map(|s| s.laplace(rho)).sum()
    }

    /// The trajectory seen from age `offset` on: `t ↦ λ̂(t + offset)` on
    /// `[0, ζ - offset)`.
    pub fn shifted(&self, offset: f64) -> ProfileDraw {
        let lifetime = (self.lifetime() - offset).max(0.0);
        let segments = self
            .segments
            .iter()
            .filter(|s| s.end > offset)
            .map(|s| {
                let start = s.start.max(offset);
                Segment {
                    start: start - offset,
                    end: s.end - offset,
                    v_start: s.value(start),
                    v_end: s.v_end,
                }
            })
            .filter(|s| s.end > s.start)
            .collect();
        let tau = (self.tau - offset).clamp(0.0, lifetime);
        ProfileDraw {
            tau,
            eta: lifetime - tau,
            segments,
        }
    }

    /// Residual trajectory of an individual infected at `-u·ζ` (or `-u·η`).
    pub fn residual(&self, u: f64, basis: TiltBasis) -> ProfileDraw {
        let span = match basis {
            TiltBasis::Lifetime => self.lifetime(),
            TiltBasis::InfectiousPeriod => self.eta,
        };
        self.shifted(u * span)
    }
}

/// Free-function forms of the per-draw operations.
pub fn rate_at(draw: &ProfileDraw, t: f64) -> f64 {
    draw.rate_at(t)
}

pub fn total_infectivity(draw: &ProfileDraw) -> f64 {
    draw.total_infectivity()
}

pub fn laplace_of_draw(draw: &ProfileDraw, rho: f64) -> f64 {
    draw.laplace(rho)
}
