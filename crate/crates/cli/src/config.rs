//! TOML run configuration.
//!
//! ```toml
//! seed = 42
//!
//! [model]
//! f = { family = "uniform", lo = 0.0, hi = 1.0 }
//! g = { family = "uniform", lo = -0.5, hi = 0.5 }
//! # or: catalog = "uniform-shifted"
//!
//! [lln]
//! class = { kind = "indicator", phi0 = "constant(1)" }
//! n_grid = [200, 2000]
//! replications = 200
//!
//! [clt]
//! phis = ["indicator(0.25)", "indicator(0.75)"]
//! n = 1000
//! replications = 1000
//! ```
//!
//! Unknown keys are rejected. Sections are only required by the commands that
//! read them.

use lbtrunc::catalog;
use lbtrunc::classes::FunctionClass;
use lbtrunc::experiments::EpsilonRule;
use lbtrunc::{Distribution, Model};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::phi::PhiSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Distribution>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model, CliError> {
        match (&self.catalog, &self.f, &self.g) {
            (Some(name), None, None) => catalog::model(name).ok_or_else(|| {
                let names: Vec<&str> = catalog::models().iter().map(|(n, _)| *n).collect();
                CliError::config(format!("unknown catalog model {name:?}; known: {}", names.join(", ")))
            }),
            (None, Some(f), Some(g)) => Ok(Model::new(f.clone().validated()?, g.clone().validated()?)?),
            _ => Err(CliError::config("[model] needs either `catalog` or both `f` and `g`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    /// `{ φ₀ 1(-∞, t] : t ∈ R }`.
    Indicator {
        #[serde(default = "unit")]
        phi0: PhiSpec,
    },
    Lipschitz { lo: f64, hi: f64, bound: f64, lipschitz: f64 },
    Finite { members: Vec<PhiSpec> },
}

fn unit() -> PhiSpec {
    PhiSpec::Constant(1.0)
}

impl ClassSpec {
    pub fn build(&self) -> Result<FunctionClass<f64>, CliError> {
        Ok(match self {
            ClassSpec::Indicator { phi0 } => FunctionClass::indicator(phi0.build()),
            ClassSpec::Lipschitz { lo, hi, bound, lipschitz } => FunctionClass::lipschitz(*lo, *hi, *bound, *lipschitz)?,
            ClassSpec::Finite { members } => FunctionClass::finite(members.iter().map(PhiSpec::build).collect())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlnSection {
    pub class: ClassSpec,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_rule: Option<EpsilonRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltSection {
    pub phis: Vec<PhiSpec>,
    pub n: usize,
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remainder_replications: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sigma2Section {
    pub phi: PhiSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketsSection {
    pub class: ClassSpec,
    pub epsilon: f64,
    /// Norm order, 1 or 2.
    #[serde(default = "two")]
    pub p: u32,
    /// Upper limit of the entropy integral.
    #[serde(default = "one")]
    pub delta: f64,
}

fn two() -> u32 {
    2
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Absolute quadrature tolerance for variances and covariances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lln: Option<LlnSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt: Option<CltSection>,
    /// Read by `continuity`; falls back to `[clt]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuity: Option<CltSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<Sigma2Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brackets: Option<BracketsSection>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn model(&self) -> Result<Model, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::config("missing [model] section"))?.build()
    }
}

pub(crate) fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::config(format!("missing [{name}] section")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 7
tolerance = 1e-9

[model]
f = { family = "uniform", lo = 0.0, hi = 1.0 }
g = { family = "uniform", lo = -0.5, hi = 0.5 }

[simulate]
n = 50

[lln]
class = { kind = "indicator", phi0 = "constant(1)" }
n_grid = [200, 2000]
replications = 200
epsilon_rule = { rule = "power", scale = 1.0, exponent = 0.25 }

[clt]
phis = ["indicator(0.25)", "lipschitz(2, 0.5)"]
n = 1000
replications = 1000

[sigma2]
phi = "indicator(0.5)"

[brackets]
class = { kind = "lipschitz", lo = 0.0, hi = 1.0, bound = 1.0, lipschitz = 1.0 }
epsilon = 0.5
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = Config::parse(FULL).unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.clt.as_ref().unwrap().phis[1], PhiSpec::Lipschitz { slope: 2.0, shift: 0.5 });
        assert_eq!(c.brackets.as_ref().unwrap().p, 2);
        let again = Config::parse(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml(), c.to_toml());
        let m = c.model().unwrap();
        assert!((m.alpha().unwrap() - 0.875).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(Config::parse("sead = 1").is_err());
        assert!(Config::parse("[lln]\nclass = { kind = \"indicator\" }\nn_grid = [1]\nreplications = 1\nextra = 2").is_err());
        assert!(Config::parse("[model]\nf = { family = \"uniform\", lo = 0.0, hi = 1.0, mode = 2 }").is_err());
    }

    #[test]
    fn model_forms() {
        let c = Config::parse("[model]\ncatalog = \"uniform-uniform\"").unwrap();
        assert!((c.model().unwrap().alpha().unwrap() - 0.5).abs() < 1e-12);
        assert!(Config::parse("[model]\ncatalog = \"nope\"").unwrap().model().is_err());
        let bad = Config::parse("[model]\nf = { family = \"uniform\", lo = 1.0, hi = 0.0 }\ng = { family = \"uniform\", lo = 0.0, hi = 1.0 }").unwrap();
        assert!(matches!(bad.model(), Err(CliError::Config(_))));
        assert!(Config::default().model().is_err());
    }
}
