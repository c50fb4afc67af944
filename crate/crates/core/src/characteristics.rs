//! Effective reproduction number and exponential decay rate of a law, and
//! the Markov SIR rates that share them.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::profiles::{DurationLaw, Family, InfectivityLaw};
use crate::quadrature::{law_nodes, QuadratureSpec};

/// Default bisection tolerance on ρ (per day).
pub const DEFAULT_RHO_TOL: f64 = 1e-8;

const MAX_BRACKET_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpidemicCharacteristics {
    pub r_eff: f64,
    pub rho: f64,
    pub s_bar: f64,
    pub lambda_hat_star: f64,
}

impl EpidemicCharacteristics {
    pub fn of(law: &InfectivityLaw, quad: &QuadratureSpec, tol: f64) -> Result<Self> {
        Ok(EpidemicCharacteristics {
            r_eff: effective_reproduction_number(law, quad),
            rho: decay_rate(law, quad, tol)?,
            s_bar: law.susceptible_fraction(),
            lambda_hat_star: law.rate_bound(),
        })
    }
}

/// `E ∫ λ̂(t) dt`.
pub fn effective_reproduction_number(law: &InfectivityLaw, quad: &QuadratureSpec) -> f64 {
    law_nodes(law, quad)
        .iter()
        .map(|n| n.weight * n.draw.total_infectivity())
        .sum()
}

/// `E ∫ e^{-ρt} λ̂(t) dt`; infinite at or beyond the divergence boundary.
pub fn mean_laplace(law: &InfectivityLaw, rho: f64, quad: &QuadratureSpec) -> f64 {
    if let Some(b) = law.laplace_divergence_boundary() {
        if rho <= b {
            return f64::INFINITY;
        }
    }
    law_nodes(law, quad)
        .iter()
        .map(|n| n.weight * n.draw.laplace(rho))
        .sum()
}

/// Unique root of `mean_laplace(law, ρ) = 1`, by bracketed bisection.
pub fn decay_rate(law: &InfectivityLaw, quad: &QuadratureSpec, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance {tol} must be positive")));
    }
    let nodes = law_nodes(law, quad);
    let boundary = law.laplace_divergence_boundary();
    let g = |rho: f64| -> f64 {
        if boundary.is_some_and(|b| rho <= b) {
            return f64::INFINITY;
        }
        nodes.iter().map(|n| n.weight * n.draw.laplace(rho)).sum::<f64>() - 1.0
    };
    let at_zero = g(0.0);
    if at_zero == 0.0 {
        return Ok(0.0);
    }
    let no_root = || Error::NoFiniteRoot {
        boundary: boundary.unwrap_or(f64::NEG_INFINITY),
    };
    let (mut lo, mut hi);
    if at_zero < 0.0 {
        // subcritical: root is negative, g decreases in ρ
        hi = 0.0;
        lo = -0.1;
        let mut steps = 0;
        loop {
            if let Some(b) = boundary {
                if lo <= b {
                    lo = 0.5 * (hi + b);
                }
            }
            let v = g(lo);
            if v >= 0.0 {
                break;
            }
            if !v.is_finite() {
                return Err(no_root());
            }
            hi = lo;
            lo *= 2.0;
            steps += 1;
            if steps > MAX_BRACKET_STEPS {
                return Err(no_root());
            }
        }
    } else {
        lo = 0.0;
        hi = 0.1;
        let mut steps = 0;
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > MAX_BRACKET_STEPS {
                return Err(no_root());
            }
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Rates of the Markov SIR branching process (constant rate `λ̂`,
/// exponential lifetime with rate `μ`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarkovRates {
    pub lambda_hat: f64,
    pub mu: f64,
}

impl MarkovRates {
    pub fn law(&self) -> Result<InfectivityLaw> {
        InfectivityLaw::constant_rate(self.lambda_hat, DurationLaw::Exponential { rate: self.mu })
    }
}

/// Markov rates with the given `R_eff = λ̂/μ` and `ρ = λ̂ - μ`.
pub fn match_markov(r_eff: f64, rho: f64) -> Result<MarkovRates> {
    if !(r_eff > 0.0) || !r_eff.is_finite() {
        return Err(domain(format!("r_eff = {r_eff} must be positive")));
    }
    if r_eff == 1.0 {
        return Err(domain("r_eff = 1 has no matching Markov rates"));
    }
    if rho == 0.0 || (rho < 0.0) != (r_eff < 1.0) {
        return Err(domain(format!("sign of rho = {rho} inconsistent with r_eff = {r_eff}")));
    }
    let mu = rho / (r_eff - 1.0);
    Ok(MarkovRates {
        lambda_hat: r_eff * mu,
        mu,
    })
}

/// Peak `a` of a triangular law giving the target `R_eff`.
pub fn calibrate_peak(target_r_eff: f64, template: &InfectivityLaw) -> Result<f64> {
    if !(target_r_eff >= 0.0) {
        return Err(domain(format!("target r_eff = {target_r_eff} must be >= 0")));
    }
    match template.family() {
        Family::TriangularRamp { eta, .. } => {
            Ok(2.0 * target_r_eff / (template.susceptible_fraction() * eta.mean()))
        }
        _ => Err(domain("calibrate_peak needs a triangular ramp template")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn reference_r_eff() {
        let law = InfectivityLaw::triangular_reference(0.132).unwrap();
        assert_relative_eq!(effective_reproduction_number(&law, &q()), 0.66, epsilon = 1e-12);
        let law = InfectivityLaw::triangular_reference(0.16).unwrap();
        assert_relative_eq!(effective_reproduction_number(&law, &q()), 0.8, epsilon = 1e-12);
        let half = InfectivityLaw::triangular_reference(0.264).unwrap().scaled(0.5).unwrap();
        assert_relative_eq!(effective_reproduction_number(&half, &q()), 0.66, epsilon = 1e-12);
    }

    #[test]
    fn markov_matching() {
        let m = match_markov(0.66, -0.0683).unwrap();
        assert_relative_eq!(m.mu, 0.200_882_352_941_176_47, epsilon = 1e-15);
        assert_relative_eq!(m.lambda_hat, 0.132_582_352_941_176_47, epsilon = 1e-15);
        assert_relative_eq!(m.lambda_hat / m.mu, 0.66, epsilon = 1e-14);
        assert_relative_eq!(m.lambda_hat - m.mu, -0.0683, epsilon = 1e-15);
        let m = match_markov(0.8, -0.03816).unwrap();
        assert_relative_eq!(m.mu, 0.1908, epsilon = 1e-14);
        assert_relative_eq!(m.lambda_hat, 0.15264, epsilon = 1e-14);
        assert!(match_markov(1.0, -0.1).is_err());
        assert!(match_markov(0.5, 0.1).is_err());
        assert!(match_markov(1.5, -0.1).is_err());
        assert!(match_markov(0.0, -0.1).is_err());
    }

    #[test]
    fn constant_rate_closed_forms() {
        let law = MarkovRates { lambda_hat: 0.132_582_4, mu: 0.200_882_4 }.law().unwrap();
        assert_relative_eq!(effective_reproduction_number(&law, &q()), 0.66, epsilon = 1e-6);
        assert_relative_eq!(mean_laplace(&law, -0.0683, &q()), 1.0, epsilon = 1e-6);
        // λ̂/(ρ+μ) at several ρ
        // Laguerre error grows as ρ approaches -μ
        for (rho, tol) in [(-0.15, 1e-5), (-0.05, 1e-8), (0.0, 1e-12), (0.3, 1e-8)] {
            assert_relative_eq!(mean_laplace(&law, rho, &q()), 0.132_582_4 / (rho + 0.200_882_4), max_relative = tol);
        }
        let rho = decay_rate(&law, &q(), 1e-10).unwrap();
        assert!((rho - (0.132_582_4 - 0.200_882_4)).abs() < 1e-9);
        assert_eq!(mean_laplace(&law, -0.3, &q()), f64::INFINITY);
    }

    #[test]
    fn seir_closed_form() {
        let law = InfectivityLaw::exposed_constant_rate(
            0.1,
            DurationLaw::Exponential { rate: 0.5 },
            DurationLaw::Exponential { rate: 0.2 },
        )
        .unwrap();
        let (g, m, l): (f64, f64, f64) = (0.5, 0.2, 0.1);
        let expected = 0.5 * (((g - m).powi(2) + 4.0 * g * l).sqrt() - (m + g));
        assert_relative_eq!(expected, -0.080_741_759_643_274_77, epsilon = 1e-15);
        let rho = decay_rate(&law, &q(), 1e-10).unwrap();
        assert!((rho - expected).abs() < 1e-8, "{rho} vs {expected}");
    }

    #[test]
    fn residual_at_root() {
        for a in [0.05, 0.132, 0.16, 0.3] {
            let law = InfectivityLaw::triangular_reference(a).unwrap();
            let rho = decay_rate(&law, &q(), DEFAULT_RHO_TOL).unwrap();
            assert!((mean_laplace(&law, rho, &q()) - 1.0).abs() < 1e-6);
            assert_eq!(rho < 0.0, a < 0.2);
        }
    }

    #[test]
    fn supercritical_root_is_positive() {
        let law = InfectivityLaw::constant_rate(0.5, DurationLaw::Exponential { rate: 0.25 }).unwrap();
        let rho = decay_rate(&law, &q(), 1e-10).unwrap();
        assert!((rho - 0.25).abs() < 1e-9);
    }

    #[test]
    fn critical_law_returns_zero() {
        let law = InfectivityLaw::constant_rate(0.2, DurationLaw::Dirac { a: 5.0 }).unwrap();
        assert_eq!(decay_rate(&law, &q(), 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn zero_infectivity_has_no_root() {
        let law = InfectivityLaw::constant_rate(0.0, DurationLaw::Dirac { a: 5.0 }).unwrap();
        assert!(matches!(decay_rate(&law, &q(), 1e-8), Err(Error::NoFiniteRoot { .. })));
    }

    #[test]
    fn calibration() {
        let law = InfectivityLaw::triangular_reference(0.1).unwrap();
        assert_relative_eq!(calibrate_peak(0.66, &law).unwrap(), 0.132, epsilon = 1e-15);
        assert_relative_eq!(calibrate_peak(0.8, &law).unwrap(), 0.16, epsilon = 1e-15);
        assert_eq!(calibrate_peak(0.0, &law).unwrap(), 0.0);
    }

    #[test]
    fn round_trip_through_markov() {
        for (r, rho) in [(0.66, -0.0683), (0.8, -0.03816), (0.3, -0.2)] {
            let law = match_markov(r, rho).unwrap().law().unwrap();
            assert_relative_eq!(effective_reproduction_number(&law, &q()), r, epsilon = 1e-10);
            assert!((decay_rate(&law, &q(), 1e-10).unwrap() - rho).abs() < 1e-9);
        }
    }
}
