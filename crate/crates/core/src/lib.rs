//! Extinction time of a subcritical epidemic with age-dependent infectivity.

pub mod characteristics;
pub mod cli;
pub mod config;
pub mod error;
pub mod lln;
pub mod markov;
pub mod profiles;
pub mod quadrature;
pub mod simulation;
pub mod solver;

pub use characteristics::{decay_rate, effective_reproduction_number, match_markov, EpidemicCharacteristics, MarkovRates};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use lln::{integrate_compartmental, integrate_kermack, CompartmentalModel, InitialCurves, MacroState, MeanCurves};
pub use markov::{sir_cdf, sir_mean, sir_pgf};
pub use profiles::{DurationLaw, Family, InfectivityLaw, ProfileDraw, TiltBasis};
pub use quadrature::{QuadratureRule, QuadratureSpec};
pub use simulation::{empirical_cdf, simulate_extinction, EmpiricalCdf, Outcome, ReplicateSet, SimConfig};
pub use solver::{solve_cdf, solve_tilted_cdf, CdfGrid, Interp, Kernel, MeanEstimate};
