//! Closed forms for the linear birth–death (Markov SIR) branching process.

use crate::error::{domain, Result};

fn check_subcritical(r_eff: f64, rho: f64) -> Result<()> {
    if !(r_eff > 0.0 && r_eff < 1.0) {
        return Err(domain(format!("r_eff = {r_eff} must lie in (0, 1)")));
    }
    if !(rho < 0.0) {
        return Err(domain(format!("rho = {rho} must be negative")));
    }
    Ok(())
}

/// `P(T_ext ≤ t) = (1 - e^{ρt}) / (1 - R e^{ρt})` for one ancestor.
pub fn sir_cdf(r_eff: f64, rho: f64, t: f64) -> Result<f64> {
    check_subcritical(r_eff, rho)?;
    if !(t >= 0.0) {
        return Err(domain(format!("t = {t} must be >= 0")));
    }
    let e = (rho * t).exp();
    Ok(-(rho * t).exp_m1() / (1.0 - r_eff * e))
}

/// Generating function `E[s^{X(t)}]` of the population size.
pub fn sir_pgf(lambda_hat: f64, mu: f64, s: f64, t: f64) -> Result<f64> {
    if !(mu > lambda_hat) || !(lambda_hat > 0.0) {
        return Err(domain(format!("need 0 < lambda_hat ({lambda_hat}) < mu ({mu})")));
    }
    if !(-1.0..=1.0).contains(&s) {
        return Err(domain(format!("|s| = {} must be <= 1", s.abs())));
    }
    let rho = lambda_hat - mu;
    let e = (-rho * t).exp();
    let num = mu * (s - 1.0) - e * (lambda_hat * s - mu);
    let den = lambda_hat * (s - 1.0) - e * (lambda_hat * s - mu);
    Ok(num / den)
}

/// `E[T_ext] = (1 - R) ln(1 - R) / (ρ R)`.
pub fn sir_mean(r_eff: f64, rho: f64) -> Result<f64> {
    check_subcritical(r_eff, rho)?;
    Ok((1.0 - r_eff) * (-r_eff).ln_1p() / (rho * r_eff))
}
