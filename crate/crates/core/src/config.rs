//! JSON run configuration shared by the command-line tool and the C API.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{domain, Result};
use crate::lln::{InitialCurves, DEFAULT_STEP};
use crate::profiles::{DurationLaw, Family, InfectivityLaw, TiltBasis, DEFAULT_RAMP};
use crate::quadrature::QuadratureSpec;
use crate::simulation::SimConfig;
use crate::solver::{Interp, DEFAULT_CUTOFF, DEFAULT_HORIZON, DEFAULT_N};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    ConstantRate,
    ExposedConstantRate,
    #[default]
    TriangularRamp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub family: FamilyKind,
    pub lambda: Option<f64>,
    pub peak_a: Option<f64>,
    pub ramp: f64,
    pub s_bar: f64,
    pub tau: DurationLaw,
    pub eta: DurationLaw,
    pub xi: Option<DurationLaw>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            family: FamilyKind::TriangularRamp,
            lambda: None,
            peak_a: None,
            ramp: DEFAULT_RAMP,
            s_bar: 1.0,
            tau: DurationLaw::Uniform { lo: 1.5, hi: 2.5 },
            eta: DurationLaw::Uniform { lo: 7.0, hi: 13.0 },
            xi: None,
        }
    }
}

impl ModelConfig {
    pub fn law(&self) -> Result<InfectivityLaw> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| domain(format!("model.{name} is required for this family")));
        let family = match self.family {
            FamilyKind::ConstantRate => Family::ConstantRate {
                lambda: need(self.lambda, "lambda")?,
                eta: self.eta,
            },
            FamilyKind::ExposedConstantRate => Family::ExposedConstantRate {
                lambda: need(self.lambda, "lambda")?,
                xi: self.xi.ok_or_else(|| domain("model.xi is required for this family"))?,
                eta: self.eta,
            },
            FamilyKind::TriangularRamp => Family::TriangularRamp {
                peak: need(self.peak_a, "peak_a")?,
                ramp: self.ramp,
                tau: self.tau,
                eta: self.eta,
            },
        };
        InfectivityLaw::new(family, self.s_bar)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n: usize,
    pub horizon: f64,
    pub lambda_cutoff: f64,
    pub quad: QuadratureSpec,
    pub interp: Interp,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: DEFAULT_N,
            horizon: DEFAULT_HORIZON,
            lambda_cutoff: DEFAULT_CUTOFF,
            quad: QuadratureSpec::default(),
            interp: Interp::Step,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncestorConfig {
    #[serde(rename = "M")]
    pub m: u32,
    pub tilted: bool,
    pub basis: TiltBasis,
}

impl Default for AncestorConfig {
    fn default() -> Self {
        AncestorConfig {
            m: 1,
            tilted: false,
            basis: TiltBasis::Lifetime,
        }
    }
}

impl AncestorConfig {
    pub fn tilt(&self) -> Option<TiltBasis> {
        self.tilted.then_some(self.basis)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub replicates: usize,
    pub seed: u64,
    pub max_population: u64,
    pub max_time: f64,
    /// Spacing of the reported empirical CDF grid.
    pub t_step: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let base = SimConfig::default();
        SimSection {
            replicates: 100_000,
            seed: base.seed,
            max_population: base.max_population,
            max_time: base.max_time,
            t_step: 0.5,
        }
    }
}

impl SimSection {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            max_population: self.max_population,
            max_time: self.max_time,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlnSection {
    pub s0: f64,
    pub i0: f64,
    pub step: f64,
    pub horizon: f64,
    pub initial_curves: InitialCurves,
}

impl Default for LlnSection {
    fn default() -> Self {
        LlnSection {
            s0: 0.999,
            i0: 0.001,
            step: DEFAULT_STEP,
            horizon: 200.0,
            initial_curves: InitialCurves::Tilted,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub ancestors: AncestorConfig,
    pub sim: SimSection,
    pub lln: LlnSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Parses `text`, applies `key.path=value` overrides, then deserialises.
    /// Values are read as JSON when possible and as strings otherwise.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> std::result::Result<Self, String> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        for item in overrides {
            let (path, raw) = item.split_once('=').ok_or_else(|| format!("override `{item}` is not key=value"))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut doc, path, value)?;
        }
        // round-trip through text so errors carry line numbers
        let pretty = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
        serde_json::from_str(&pretty).map_err(|e| e.to_string())
    }

    pub fn law(&self) -> Result<InfectivityLaw> {
        self.model.law()
    }
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> std::result::Result<(), String> {
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(format!("empty key in `{path}`"));
        }
        let obj = cur.as_object_mut().ok_or_else(|| format!("`{path}`: not an object at `{key}`"))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
