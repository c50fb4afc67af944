//! Deterministic large-population limit: the Kermack–McKendrick integral
//! system and its SIR/SEIR ODE special cases.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::profiles::{DurationLaw, Family, InfectivityLaw, ProfileDraw, TiltBasis};
use crate::quadrature::{expect_piecewise, QuadratureSpec};

pub const DEFAULT_STEP: f64 = 0.01;

/// Largest tolerated `|S + I + R - 1|` (plus `E` for SEIR).
const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroState {
    pub t: f64,
    pub s_bar: f64,
    pub i_bar: f64,
    pub r_bar: f64,
    /// Total force of infection.
    pub force: f64,
    /// Exposed fraction, SEIR only.
    pub e_bar: f64,
}

impl MacroState {
    pub fn start(s_bar: f64, i_bar: f64) -> Self {
        MacroState {
            t: 0.0,
            s_bar,
            i_bar,
            r_bar: 1.0 - s_bar - i_bar,
            force: 0.0,
            e_bar: 0.0,
        }
    }

    pub fn mass(&self) -> f64 {
        self.s_bar + self.e_bar + self.i_bar + self.r_bar
    }

    fn check(&self) -> Result<()> {
        let parts = [self.s_bar, self.e_bar, self.i_bar, self.r_bar];
        if parts.iter().any(|v| !(*v >= 0.0)) {
            return Err(domain("compartments must be non-negative"));
        }
        if (self.mass() - 1.0).abs() > 1e-9 {
            return Err(domain(format!("compartments sum to {}, not 1", self.mass())));
        }
        Ok(())
    }
}

/// Law of the individuals already infected at time 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCurves {
    /// Uniform residual age over the given basis.
    #[default]
    Tilted,
    /// Freshly infected at time 0.
    SameAsNew,
}

/// `λ̄`, `F` and their initially-infected analogues `λ̄⁰`, `F₀` on the grid `jh`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanCurves {
    pub step: f64,
    pub lambda_bar: Vec<f64>,
    pub lifetime_cdf: Vec<f64>,
    pub lambda0: Vec<f64>,
    pub lifetime_cdf0: Vec<f64>,
}

fn expect_draw(law: &InfectivityLaw, quad: &QuadratureSpec, t: f64, f: impl Fn(&ProfileDraw) -> f64) -> f64 {
    let eta_law = law.infectious_law();
    let ramp = match law.family() {
        Family::TriangularRamp { ramp, .. } => *ramp,
        _ => 0.0,
    };
    let mut tau_breaks = vec![t, t - ramp];
    if let DurationLaw::Uniform { lo, hi } = eta_law {
        tau_breaks.extend([t - lo, t - hi]);
    }
    expect_piecewise(&law.exposed_law(), quad.m_tau, &tau_breaks, |tau| {
        expect_piecewise(&eta_law, quad.m_eta, &[t - tau], |eta| f(&law.profile(tau, eta)))
    })
}

impl MeanCurves {
    /// Curves of the unscaled law (susceptible fraction 1) at `0, h, …, T`.
    pub fn new(
        law: &InfectivityLaw,
        quad: &QuadratureSpec,
        step: f64,
        horizon: f64,
        initial: InitialCurves,
        basis: TiltBasis,
    ) -> Result<Self> {
        if !(step > 0.0) || !(horizon > 0.0) {
            return Err(domain("step and horizon must be positive"));
        }
        let law = law.scaled(1.0)?;
        let steps = (horizon / step).round() as usize;
        let times: Vec<f64> = (0..=steps).map(|j| j as f64 * step).collect();
        let lambda_bar: Vec<f64> = times.iter().map(|&t| expect_draw(&law, quad, t, |d| d.rate_at(t))).collect();
        let lifetime_cdf: Vec<f64> = times
            .iter()
            .map(|&t| expect_draw(&law, quad, t, |d| f64::from(d.lifetime() <= t)))
            .collect();
        let (lambda0, lifetime_cdf0) = match initial {
            InitialCurves::SameAsNew => (lambda_bar.clone(), lifetime_cdf.clone()),
            InitialCurves::Tilted => {
                let span = |d: &ProfileDraw| match basis {
                    TiltBasis::Lifetime => d.lifetime(),
                    TiltBasis::InfectiousPeriod => d.eta,
                };
                let l0 = times
                    .iter()
                    .map(|&t| {
                        expect_draw(&law, quad, t, |d| {
                            let s = span(d);
                            if s > 0.0 { d.integral(t, t + s) / s } else { 0.0 }
                        })
                    })
                    .collect();
                // residual lifetime ζ - u·span ≤ t
                let f0 = times
                    .iter()
                    .map(|&t| {
                        expect_draw(&law, quad, t, |d| {
                            let s = span(d);
                            if s > 0.0 { ((t - d.lifetime() + s) / s).clamp(0.0, 1.0) } else { f64::from(d.lifetime() <= t) }
                        })
                    })
                    .collect();
                (l0, f0)
            }
        };
        Ok(MeanCurves {
            step,
            lambda_bar,
            lifetime_cdf,
            lambda0,
            lifetime_cdf0,
        })
    }

    pub fn len(&self) -> usize {
        self.lambda_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_bar.is_empty()
    }
}

/// Left-endpoint discretisation of the convolution system. Every new
/// infection enters `I` or `R` with total weight one, so the compartment sum
/// is conserved up to rounding.
pub fn integrate_kermack(curves: &MeanCurves, init: &MacroState) -> Result<Vec<MacroState>> {
    init.check()?;
    let h = curves.step;
    let n = curves.len();
    let (s0, i0, r0) = (init.s_bar, init.i_bar, init.r_bar);
    let mut incidence: Vec<f64> = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    let mut s = s0;
    for j in 0..n {
        let (mut force, mut infected, mut removed) = (0.0, 0.0, 0.0);
        for (i, &inc) in incidence.iter().enumerate() {
            let lag = j - i;
            force += curves.lambda_bar[lag] * inc;
            removed += curves.lifetime_cdf[lag] * inc;
            infected += (1.0 - curves.lifetime_cdf[lag]) * inc;
        }
        let state = MacroState {
            t: j as f64 * h,
            s_bar: s,
            i_bar: i0 * (1.0 - curves.lifetime_cdf0[j]) + h * infected,
            r_bar: r0 + i0 * curves.lifetime_cdf0[j] + h * removed,
            force: i0 * curves.lambda0[j] + h * force,
            e_bar: 0.0,
        };
        let drift = (state.mass() - 1.0).abs();
        if drift > MASS_TOLERANCE {
            return Err(Error::MassDrift { drift });
        }
        if state.s_bar < 0.0 {
            return Err(Error::Invariant(format!("S < 0 at t = {}; reduce the step size", state.t)));
        }
        let inc = state.s_bar * state.force;
        incidence.push(inc);
        s -= h * inc;
        out.push(state);
    }
    Ok(out)
}

/// Convenience wrapper building the mean curves first.
pub fn integrate_law(
    law: &InfectivityLaw,
    quad: &QuadratureSpec,
    init: &MacroState,
    step: f64,
    horizon: f64,
    initial: InitialCurves,
    basis: TiltBasis,
) -> Result<Vec<MacroState>> {
    let curves = MeanCurves::new(law, quad, step, horizon, initial, basis)?;
    integrate_kermack(&curves, init)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompartmentalModel {
    Sir { lambda: f64, mu: f64 },
    Seir { lambda: f64, gamma: f64, mu: f64 },
}

impl CompartmentalModel {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CompartmentalModel::Sir { lambda, mu } => lambda > 0.0 && mu > 0.0,
            CompartmentalModel::Seir { lambda, gamma, mu } => lambda > 0.0 && gamma > 0.0 && mu > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(domain("compartmental rates must be positive"))
        }
    }

    fn lambda(&self) -> f64 {
        match *self {
            CompartmentalModel::Sir { lambda, .. } | CompartmentalModel::Seir { lambda, .. } => lambda,
        }
    }

    /// `d/dt (S, E, I, R)`; with `frozen` the susceptible fraction in the
    /// force term is held at that value and `S` itself does not move.
    fn rhs(&self, y: [f64; 4], frozen: Option<f64>) -> [f64; 4] {
        let [s, e, i, _] = y;
        let lam = self.lambda();
        let s_eff = frozen.unwrap_or(s);
        let inc = lam * s_eff * i;
        let ds = if frozen.is_some() { 0.0 } else { -inc };
        match *self {
            CompartmentalModel::Sir { mu, .. } => [ds, 0.0, inc - mu * i, mu * i],
            CompartmentalModel::Seir { gamma, mu, .. } => [ds, inc - gamma * e, gamma * e - mu * i, mu * i],
        }
    }
}

/// Classical RK4 on `[0, T]`.
pub fn integrate_compartmental(
    model: &CompartmentalModel,
    init: &MacroState,
    step: f64,
    horizon: f64,
    freeze_susceptibles: bool,
) -> Result<Vec<MacroState>> {
    model.validate()?;
    init.check()?;
    if !(step > 0.0) || !(horizon > 0.0) {
        return Err(domain("step and horizon must be positive"));
    }
    let frozen = freeze_susceptibles.then_some(init.s_bar);
    let steps = (horizon / step).round() as usize;
    let lam = model.lambda();
    let state = |t: f64, y: [f64; 4]| MacroState {
        t,
        s_bar: y[0],
        e_bar: y[1],
        i_bar: y[2],
        r_bar: y[3],
        force: lam * y[2],
    };
    let axpy = |y: [f64; 4], a: f64, k: [f64; 4]| std::array::from_fn(|c| y[c] + a * k[c]);
    let mut y = [init.s_bar, init.e_bar, init.i_bar, init.r_bar];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state(0.0, y));
    for j in 1..=steps {
        let k1 = model.rhs(y, frozen);
        let k2 = model.rhs(axpy(y, 0.5 * step, k1), frozen);
        let k3 = model.rhs(axpy(y, 0.5 * step, k2), frozen);
        let k4 = model.rhs(axpy(y, step, k3), frozen);
        y = std::array::from_fn(|c| y[c] + step / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]));
        out.push(state(j as f64 * step, y));
    }
    Ok(out)
}

/// `S̄(t₀)` read off a trajectory by linear interpolation.
pub fn susceptibles_at(traj: &[MacroState], t0: f64) -> Result<f64> {
    let last = traj.last().ok_or_else(|| domain("empty trajectory"))?;
    if !(t0 >= 0.0 && t0 <= last.t) {
        return Err(domain(format!("t0 = {t0} outside [0, {}]", last.t)));
    }
    let k = traj.partition_point(|s| s.t <= t0).max(1) - 1;
    if k + 1 == traj.len() {
        return Ok(traj[k].s_bar);
    }
    let (a, b) = (&traj[k], &traj[k + 1]);
    let w = (t0 - a.t) / (b.t - a.t);
    Ok(a.s_bar + w * (b.s_bar - a.s_bar))
}
