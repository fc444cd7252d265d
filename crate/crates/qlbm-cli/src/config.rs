//! JSON run configuration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qlbm::carleman::Variant;
use qlbm::instances::{self, DxRule, PhysicalInstance};
use qlbm::lattice::GeometryOracle;
use qlbm::lbm_sim::Scaling;
use qlbm::qre::{ConstantCalls, CostModelConfig, LinearKappaLog, QlsaCallModel};
use qlbm::{Error, Result};

/// Initial-vector norm used when none is given.
pub const DEFAULT_PHI0_INF: f64 = 0.2958;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub id: Option<String>,
    pub instance: Option<PhysicalInstance>,
    pub tau: Option<f64>,
    pub dx_rule: Option<DxRule>,
    pub epsilon_rho: Option<f64>,
    pub simulation: Option<SimulationSection>,
    pub matrices: Option<MatricesSection>,
    pub analyze: Option<AnalyzeSection>,
    pub estimate: Option<EstimateSection>,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub grid: Option<[usize; 3]>,
    pub geometry: Option<GeometryOracle>,
    pub initial_velocity: Option<[f64; 3]>,
    pub steps: Option<u64>,
    pub snapshot_every: Option<u64>,
    pub no_snapshots: Option<bool>,
    pub max_nodes: Option<f64>,
    pub scaling: Option<Scaling>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatricesSection {
    pub grid: Option<[usize; 3]>,
    pub geometry: Option<GeometryOracle>,
    pub variant: Option<Variant>,
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub phi0_inf: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub model: Option<ModelSpec>,
    pub cost: Option<CostModelConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub ids: Option<Vec<String>>,
    pub model: Option<ModelSpec>,
    pub cost: Option<CostModelConfig>,
}

impl RunConfig {
    /// Parses the file and returns it with the sha256 of its bytes.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if config.id.is_some() && config.instance.is_some() {
            return Err(Error::Config("give at most one of 'id' and 'instance'".into()));
        }
        Ok((config, hex::encode(Sha256::digest(&bytes))))
    }

    pub fn physical(&self) -> Result<Option<PhysicalInstance>> {
        let mut p = match (&self.id, &self.instance) {
            (Some(id), _) => instances::find(id)?,
            (None, Some(p)) => p.clone(),
            (None, None) => return Ok(None),
        };
        if let Some(rule) = self.dx_rule {
            p.dx_rule = rule;
        }
        Ok(Some(p))
    }
}

/// Linear-solver call-count model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Linear { c0: f64 },
    Constant { calls: f64 },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Linear { c0: LinearKappaLog::default().c0 }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Box<dyn QlsaCallModel> {
        match *self {
            ModelSpec::Linear { c0 } => Box::new(LinearKappaLog { c0 }),
            ModelSpec::Constant { calls } => Box::new(ConstantCalls(calls)),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Linear { c0 } => write!(f, "linear:{c0}"),
            ModelSpec::Constant { calls } => write!(f, "constant:{calls}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = |a: &str| {
            a.parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .ok_or_else(|| Error::Config(format!("model parameter '{a}' must be a positive number")))
        };
        match (kind, arg) {
            ("linear", None) => Ok(ModelSpec::default()),
            ("linear", Some(a)) => Ok(ModelSpec::Linear { c0: num(a)? }),
            ("constant", Some(a)) => Ok(ModelSpec::Constant { calls: num(a)? }),
            _ => Err(Error::Config(format!("unknown model '{s}' (linear[:c0] | constant:<calls>)"))),
        }
    }
}
