//! Experiment configuration: parsing and validation with JSON-pointer errors.

use std::collections::BTreeMap;
use std::fmt;

use flatcone::convex::{Normalization, PLFunction, PlSpec, RationalPL};
use flatcone::model_p1::{FiltrationRule, TorusMetric};
use num::ToPrimitive;
use serde::Deserialize;

use crate::Subcommand;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    fn at(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { pointer: pointer.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pointer = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "config error at {pointer}: {}", self.message)
    }
}

/// An exponent: a number `>= 1`, or the string `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Exponent {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<Format>,
}

fn default_filtration() -> FiltrationRule {
    FiltrationRule::VanishingOrder
}

fn default_normalization() -> Normalization {
    Normalization::Probability
}

fn default_p_list() -> Vec<Exponent> {
    vec![Exponent::Number(2.0)]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: TorusMetric,
    #[serde(default)]
    compare_model: Option<TorusMetric>,
    #[serde(default = "default_filtration")]
    filtration: FiltrationRule,
    #[serde(default)]
    functions: BTreeMap<String, PlSpec>,
    #[serde(default)]
    pairs: Option<Vec<(String, String)>>,
    #[serde(default = "default_p_list")]
    p_list: Vec<Exponent>,
    k_list: Vec<usize>,
    #[serde(default = "default_normalization")]
    normalization: Normalization,
    #[serde(default)]
    multiplicative: bool,
    #[serde(default)]
    ray_function: Option<String>,
    #[serde(default)]
    ray_parameters: Option<Vec<f64>>,
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    trials: Option<usize>,
    #[serde(default)]
    output: Option<OutputSpec>,
}

/// A validated convex function, with its exact form when written with rational literals.
#[derive(Debug, Clone)]
pub struct Function {
    pub name: String,
    pub float: PLFunction,
    pub exact: Option<RationalPL>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: TorusMetric,
    pub compare_model: Option<TorusMetric>,
    pub filtration: FiltrationRule,
    /// Interval `[lo, hi]` holding every normalized jumping number `a_{i,k} / k`.
    pub domain: (f64, f64),
    pub functions: Vec<Function>,
    pub pairs: Vec<(usize, usize)>,
    pub p_list: Vec<f64>,
    pub k_list: Vec<usize>,
    pub normalization: Normalization,
    pub multiplicative: bool,
    pub ray_function: Option<usize>,
    pub ray_parameters: Vec<f64>,
    pub samples: usize,
    pub trials: usize,
    pub output: Option<OutputSpec>,
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    path.iter()
        .filter_map(|s| match s {
            Segment::Seq { index } => Some(format!("/{index}")),
            Segment::Map { key } => Some(format!("/{}", escape(key))),
            Segment::Enum { .. } | Segment::Unknown => None,
        })
        .collect()
}

fn function_pointer(name: &str) -> String {
    format!("/functions/{}", escape(name))
}

pub fn parse(bytes: &[u8], subcommand: Subcommand) -> Result<Experiment, ConfigError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let raw: RawConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| ConfigError::at(pointer_of(e.path()), e.inner().to_string()))?;
    validate(raw, subcommand)
}

fn filtration_domain(rule: &FiltrationRule) -> Result<(f64, f64), ConfigError> {
    let values = rule.exact_values(1).map_err(|e| ConfigError::at("/filtration", e.to_string()))?;
    let c = values[1].to_f64().filter(|c| c.is_finite()).ok_or_else(|| ConfigError::at("/filtration", "scale is not finite"))?;
    Ok((c.min(0.0), c.max(0.0)))
}

fn validate(raw: RawConfig, subcommand: Subcommand) -> Result<Experiment, ConfigError> {
    if raw.k_list.is_empty() {
        return Err(ConfigError::at("/k_list", "k_list is empty"));
    }
    if raw.k_list[0] == 0 {
        return Err(ConfigError::at("/k_list/0", "degrees must be positive"));
    }
    for i in 1..raw.k_list.len() {
        if raw.k_list[i] <= raw.k_list[i - 1] {
            return Err(ConfigError::at(format!("/k_list/{i}"), "k_list must be strictly increasing"));
        }
    }
    if subcommand == Subcommand::Submult && raw.k_list[0] < 2 {
        return Err(ConfigError::at("/k_list/0", "submultiplicativity needs total degree at least 2"));
    }

    if raw.p_list.is_empty() {
        return Err(ConfigError::at("/p_list", "p_list is empty"));
    }
    let mut p_list = Vec::with_capacity(raw.p_list.len());
    for (i, p) in raw.p_list.iter().enumerate() {
        let value = match p {
            Exponent::Number(x) => *x,
            Exponent::Text(s) if s.trim().eq_ignore_ascii_case("inf") => f64::INFINITY,
            Exponent::Text(s) => return Err(ConfigError::at(format!("/p_list/{i}"), format!("expected a number or \"inf\", got {s:?}"))),
        };
        if value.is_nan() || value < 1.0 {
            return Err(ConfigError::at(format!("/p_list/{i}"), format!("exponent {value} is below 1")));
        }
        p_list.push(value);
    }

    let domain = filtration_domain(&raw.filtration)?;
    let require_decreasing = !raw.multiplicative;
    let mut functions = Vec::with_capacity(raw.functions.len());
    for (name, spec) in &raw.functions {
        let ptr = function_pointer(name);
        let float = spec.to_f64(require_decreasing).map_err(|e| ConfigError::at(&ptr, e.to_string()))?;
        let exact = if spec.is_exact() {
            Some(spec.to_rational(require_decreasing).map_err(|e| ConfigError::at(&ptr, e.to_string()))?)
        } else {
            None
        };
        let (lo, hi) = float.domain();
        if lo > domain.0 || hi < domain.1 {
            return Err(ConfigError::at(
                format!("{ptr}/breakpoints"),
                format!("domain [{lo}, {hi}] does not contain the jumping-number range [{}, {}]", domain.0, domain.1),
            ));
        }
        functions.push(Function { name: name.clone(), float, exact });
    }
    let index_of = |name: &str, ptr: String| {
        functions.iter().position(|f| f.name == name).ok_or_else(|| ConfigError::at(ptr, format!("unknown function {name:?}")))
    };

    let pairs = match &raw.pairs {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, (a, b))| Ok((index_of(a, format!("/pairs/{i}/0"))?, index_of(b, format!("/pairs/{i}/1"))?)))
            .collect::<Result<Vec<_>, ConfigError>>()?,
        None => {
            let n = functions.len();
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
        }
    };
    let ray_function = raw.ray_function.as_deref().map(|name| index_of(name, "/ray_function".into())).transpose()?;
    let ray_parameters = raw.ray_parameters.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]);
    for (i, t) in ray_parameters.iter().enumerate() {
        if !(t.is_finite() && *t >= 0.0) {
            return Err(ConfigError::at(format!("/ray_parameters/{i}"), "ray parameters must be finite and nonnegative"));
        }
    }

    match subcommand {
        Subcommand::Isometry if pairs.is_empty() => {
            return Err(ConfigError::at("/functions", "isometry needs at least two functions or explicit pairs"));
        }
        Subcommand::Submult if functions.is_empty() => {
            return Err(ConfigError::at("/functions", "submult needs at least one function"));
        }
        _ => {}
    }
    if matches!(subcommand, Subcommand::Isometry | Subcommand::Ray) && raw.normalization == Normalization::Raw {
        return Err(ConfigError::at("/normalization", "the per-degree isometry is stated against the probability measure"));
    }
    let trials = raw.trials.unwrap_or(100);
    if trials == 0 {
        return Err(ConfigError::at("/trials", "trials must be positive"));
    }

    Ok(Experiment {
        model: raw.model,
        compare_model: raw.compare_model,
        filtration: raw.filtration,
        domain,
        functions,
        pairs,
        p_list,
        k_list: raw.k_list,
        normalization: raw.normalization,
        multiplicative: raw.multiplicative,
        ray_function,
        ray_parameters,
        samples: raw.samples.unwrap_or(10),
        trials,
        output: raw.output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str, sub: Subcommand) -> Result<Experiment, ConfigError> {
        parse(s.as_bytes(), sub)
    }

    const BASE: &str = r#"{
        "model": {"kind": "fubini_study"},
        "functions": {"f": {"breakpoints": [0, 1], "values": [0, -1]}, "g": {"breakpoints": [0, 1], "values": [0, 0]}},
        "p_list": [1, 2, "inf"],
        "k_list": [5, 20]
    }"#;

    #[test]
    fn parses_a_minimal_config() {
        let e = parse_str(BASE, Subcommand::Isometry).unwrap();
        assert_eq!(e.pairs, vec![(0, 1)]);
        assert_eq!(e.p_list, vec![1.0, 2.0, f64::INFINITY]);
        assert_eq!(e.domain, (0.0, 1.0));
        // integer literals are exact
        assert!(e.functions[0].exact.is_some());
    }

    #[test]
    fn empty_k_list_is_rejected() {
        let s = BASE.replace("[5, 20]", "[]");
        assert_eq!(parse_str(&s, Subcommand::Dh).unwrap_err().pointer, "/k_list");
    }

    #[test]
    fn unsorted_k_list_points_at_the_entry() {
        let s = BASE.replace("[5, 20]", "[5, 20, 20]");
        assert_eq!(parse_str(&s, Subcommand::Dh).unwrap_err().pointer, "/k_list/2");
    }

    #[test]
    fn type_errors_carry_a_pointer() {
        let s = BASE.replace("\"values\": [0, -1]", "\"values\": [0, true]");
        assert_eq!(parse_str(&s, Subcommand::Dh).unwrap_err().pointer, "/functions/f/values/1");
    }

    #[test]
    fn increasing_functions_need_the_multiplicative_flag() {
        let s = BASE.replace("[0, -1]", "[0, 1]");
        assert_eq!(parse_str(&s, Subcommand::Isometry).unwrap_err().pointer, "/functions/f");
        let s = s.replace("\"k_list\"", "\"multiplicative\": true, \"k_list\"");
        assert!(parse_str(&s, Subcommand::Isometry).is_ok());
    }

    #[test]
    fn function_domain_must_cover_the_jumping_numbers() {
        let s = BASE.replace("\"breakpoints\": [0, 1], \"values\": [0, -1]", "\"breakpoints\": [0, 0.5], \"values\": [0, -1]");
        assert_eq!(parse_str(&s, Subcommand::Isometry).unwrap_err().pointer, "/functions/f/breakpoints");
    }

    #[test]
    fn bad_exponent_is_rejected() {
        let s = BASE.replace("[1, 2, \"inf\"]", "[1, 0.5]");
        assert_eq!(parse_str(&s, Subcommand::Dh).unwrap_err().pointer, "/p_list/1");
    }

    #[test]
    fn raw_normalization_is_rejected_for_isometry() {
        let s = BASE.replace("\"k_list\"", "\"normalization\": \"raw\", \"k_list\"");
        assert_eq!(parse_str(&s, Subcommand::Isometry).unwrap_err().pointer, "/normalization");
        assert!(parse_str(&s, Subcommand::Dh).is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let s = BASE.replace("\"k_list\"", "\"k_lst\": [1], \"k_list\"");
        assert!(parse_str(&s, Subcommand::Dh).is_err());
    }

    #[test]
    fn rational_literals_give_exact_functions() {
        let s = BASE.replace("[0, -1]", "[\"0\", \"-1/3\"]");
        let e = parse_str(&s, Subcommand::Submult).unwrap();
        assert!(e.functions[0].exact.is_some());
    }
}
