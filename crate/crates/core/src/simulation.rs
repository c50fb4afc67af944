//! Monte Carlo simulation of the branching process by thinning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::profiles::{InfectivityLaw, ProfileDraw, TiltBasis};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Individuals per replicate (ancestors included) before giving up.
    pub max_population: u64,
    /// Births later than this abort the replicate.
    pub max_time: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            max_population: 1_000_000,
            max_time: 10_000.0,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_population == 0 || !(self.max_time > 0.0) {
            return Err(domain("simulation caps must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Extinct(f64),
    CapExceeded,
}

impl Outcome {
    pub fn time(self) -> Option<f64> {
        match self {
            Outcome::Extinct(t) => Some(t),
            Outcome::CapExceeded => None,
        }
    }
}

/// splitmix64 finaliser applied to `seed + (i + 1)·γ`, with the golden-ratio
/// increment `γ = 0x9E3779B97F4A7C15` and the multipliers
/// `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`.
pub fn mix_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Birth ages on `[0, ζ)`: a rate-`bound` Poisson stream, each point kept
/// with probability `rate_at(s) / bound`.
pub fn thinned_births<R: Rng + ?Sized>(draw: &ProfileDraw, bound: f64, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    if !(bound > 0.0) {
        return;
    }
    let gap = Exp::new(bound).expect("positive rate");
    let end = draw.lifetime();
    let mut s = gap.sample(rng);
    while s < end {
        if rng.random::<f64>() * bound < draw.rate_at(s) {
            out.push(s);
        }
        s += gap.sample(rng);
    }
}

/// Extinction time of the forest grown from `m` ancestors at time 0.
pub fn simulate_extinction(law: &InfectivityLaw, m: u32, tilt: Option<TiltBasis>, cfg: &SimConfig) -> Result<Outcome> {
    if m == 0 {
        return Err(domain("need at least one ancestor"));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(run_forest(law, m, tilt, cfg, &mut rng))
}

fn run_forest(law: &InfectivityLaw, m: u32, tilt: Option<TiltBasis>, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Outcome {
    let bound = law.rate_bound();
    let mut stack: Vec<(f64, ProfileDraw)> = Vec::new();
    for _ in 0..m {
        let draw = law.sample_profile(rng);
        let draw = match tilt {
            Some(basis) => draw.residual(rng.random::<f64>(), basis),
            None => draw,
        };
        stack.push((0.0, draw));
    }
    let mut population = m as u64;
    let mut extinction = 0.0_f64;
    let mut births = Vec::new();
    while let Some((born, draw)) = stack.pop() {
        extinction = extinction.max(born + draw.lifetime());
        thinned_births(&draw, bound, rng, &mut births);
        for &age in &births {
            let t = born + age;
            population += 1;
            if population > cfg.max_population || t > cfg.max_time {
                return Outcome::CapExceeded;
            }
            stack.push((t, law.sample_profile(rng)));
        }
    }
    Outcome::Extinct(extinction)
}

/// Outcomes of independent replicates, in replicate order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateSet {
    pub outcomes: Vec<Outcome>,
}

impl ReplicateSet {
    /// Replicate `i` uses the stream seeded by `mix_seed(cfg.seed, i)`.
    pub fn run(law: &InfectivityLaw, m: u32, tilt: Option<TiltBasis>, replicates: usize, cfg: &SimConfig) -> Result<Self> {
        if m == 0 {
            return Err(domain("need at least one ancestor"));
        }
        if replicates == 0 {
            return Err(domain("need at least one replicate"));
        }
        cfg.validate()?;
        let outcomes = (0..replicates as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, i));
                run_forest(law, m, tilt, cfg, &mut rng)
            })
            .collect();
        Ok(ReplicateSet { outcomes })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn capped(&self) -> usize {
        self.outcomes.iter().filter(|o| o.time().is_none()).count()
    }

    pub fn times(&self) -> Vec<f64> {
        self.outcomes.iter().filter_map(|o| o.time()).collect()
    }

    /// Fraction of replicates extinct by each grid time; capped replicates
    /// count as later than every grid point.
    pub fn empirical_cdf(&self, t_grid: &[f64]) -> EmpiricalCdf {
        let mut times = self.times();
        times.sort_by(f64::total_cmp);
        let r = self.len() as f64;
        let probs: Vec<f64> = t_grid
            .iter()
            .map(|&t| times.partition_point(|&x| x <= t) as f64 / r)
            .collect();
        let halfwidth_95 = probs.iter().map(|p| 1.96 * (p * (1.0 - p) / r).sqrt()).collect();
        EmpiricalCdf {
            t_grid: t_grid.to_vec(),
            probs,
            replicates: self.len(),
            capped: self.capped(),
            halfwidth_95,
        }
    }

    /// Sample mean and standard error of the uncapped extinction times.
    pub fn mean_se(&self) -> (f64, f64) {
        let times = self.times();
        let n = times.len() as f64;
        let mean = times.iter().sum::<f64>() / n;
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    /// `sup_t |F̂(t) - F(t)|` against a continuous CDF; capped replicates
    /// count as `+∞`.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut times = self.times();
        times.sort_by(f64::total_cmp);
        let r = self.len() as f64;
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let f = cdf(t);
                (f - i as f64 / r).abs().max(((i + 1) as f64 / r - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    pub t_grid: Vec<f64>,
    pub probs: Vec<f64>,
    pub replicates: usize,
    pub capped: usize,
    pub halfwidth_95: Vec<f64>,
}

pub fn empirical_cdf(
    law: &InfectivityLaw,
    m: u32,
    tilt: Option<TiltBasis>,
    replicates: usize,
    t_grid: &[f64],
    cfg: &SimConfig,
) -> Result<EmpiricalCdf> {
    Ok(ReplicateSet::run(law, m, tilt, replicates, cfg)?.empirical_cdf(t_grid))
}

/// Asymptotic `P(D_n > d)` under the null, with Stephens' small-sample
/// correction.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let x = (sn + 0.12 + 0.11 / sn) * d;
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
