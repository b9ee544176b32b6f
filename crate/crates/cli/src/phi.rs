//! Named test functions: `indicator(s)`, `identity`, `lipschitz(slope, shift)`
//! and `constant(c)`.

use std::fmt;
use std::str::FromStr;

use lbtrunc::Function;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PhiSpec {
    /// `1(x <= s)`.
    Indicator(f64),
    Identity,
    /// `clamp(slope (x - shift), -1, 1)`.
    Lipschitz { slope: f64, shift: f64 },
    Constant(f64),
}

impl PhiSpec {
    pub fn build(&self) -> Function {
        match *self {
            PhiSpec::Indicator(s) => Function::indicator(s),
            PhiSpec::Identity => Function::identity(),
            PhiSpec::Lipschitz { slope, shift } => Function::ramp(slope, shift),
            PhiSpec::Constant(c) => Function::constant(c),
        }
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiSpec::Indicator(s) => write!(f, "indicator({s})"),
            PhiSpec::Identity => write!(f, "identity"),
            PhiSpec::Lipschitz { slope, shift } => write!(f, "lipschitz({slope}, {shift})"),
            PhiSpec::Constant(c) => write!(f, "constant({c})"),
        }
    }
}

fn args(inner: &str, expected: usize, form: &str) -> Result<Vec<f64>, String> {
    let vals: Vec<f64> = inner
        .split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|e| format!("{form}: bad number {:?}: {e}", a.trim())))
        .collect::<Result<_, _>>()?;
    if vals.len() != expected {
        return Err(format!("{form} takes {expected} argument(s), got {}", vals.len()));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(format!("{form}: arguments must be finite"));
    }
    Ok(vals)
}

impl FromStr for PhiSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "identity" {
            return Ok(PhiSpec::Identity);
        }
        let (name, rest) = s.split_once('(').ok_or_else(|| format!("unknown function form {s:?}"))?;
        let inner = rest.strip_suffix(')').ok_or_else(|| format!("missing ')' in {s:?}"))?;
        match name.trim() {
            "indicator" => Ok(PhiSpec::Indicator(args(inner, 1, "indicator")?[0])),
            "constant" => Ok(PhiSpec::Constant(args(inner, 1, "constant")?[0])),
            "lipschitz" => {
                let v = args(inner, 2, "lipschitz")?;
                Ok(PhiSpec::Lipschitz { slope: v[0], shift: v[1] })
            }
            other => Err(format!(
                "unknown function form {other:?} (expected indicator(s), identity, lipschitz(slope, shift) or constant(c))"
            )),
        }
    }
}

impl TryFrom<String> for PhiSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PhiSpec> for String {
    fn from(p: PhiSpec) -> String {
        p.to_string()
    }
}
