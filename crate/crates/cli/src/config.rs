//! Experiment configuration: JSON shape, pointer-pathed validation, and
//! conversion into library types.
//!
//! Validation walks the raw JSON value before typed deserialization so that
//! every complaint carries the JSON-pointer path of the offending field.

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::Value;

use bosechain::model::{ChainSpec, DressingSpec};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Transfer,
    Repulsion,
    Dressed,
    Interference,
    OracleCheck,
    Sweep,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Transfer => "transfer",
            ExperimentKind::Repulsion => "repulsion",
            ExperimentKind::Dressed => "dressed",
            ExperimentKind::Interference => "interference",
            ExperimentKind::OracleCheck => "oracle-check",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

/// Complex number accepted as either a plain number or an `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexLit {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexLit> for Complex64 {
    fn from(c: ComplexLit) -> Complex64 {
        match c {
            ComplexLit::Real(re) => Complex64::new(re, 0.0),
            ComplexLit::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Chain description: engineered couplings from scalars, or explicit
/// hopping/onsite profiles.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    #[serde(default)]
    pub sites: Option<usize>,
    #[serde(default)]
    pub coupling: Option<f64>,
    #[serde(default)]
    pub gradient: Option<f64>,
    #[serde(default)]
    pub interaction: Option<f64>,
    #[serde(default)]
    pub hopping: Option<Vec<f64>>,
    #[serde(default)]
    pub onsite: Option<Vec<f64>>,
}

impl ChainConfig {
    pub fn build(&self) -> Result<ChainSpec, CliError> {
        let u = self.interaction.unwrap_or(0.0);
        if let Some(hopping) = &self.hopping {
            let onsite = self
                .onsite
                .clone()
                .unwrap_or_else(|| vec![0.0; hopping.len() + 1]);
            ChainSpec::custom(hopping.clone(), onsite, u)
                .map_err(|e| CliError::Config(format!("chain: {e}")))
        } else {
            let n = self.sites.unwrap_or(0);
            let j = self.coupling.unwrap_or(1.0);
            let eps = self.gradient.unwrap_or(0.0);
            ChainSpec::engineered(n, j, eps, u)
                .map_err(|e| CliError::Config(format!("chain: {e}")))
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DressingConfig {
    pub kind: String,
    #[serde(default)]
    pub beta: Option<ComplexLit>,
    #[serde(default)]
    pub xi: Option<f64>,
}

impl DressingConfig {
    pub fn build(&self) -> Result<DressingSpec, CliError> {
        match self.kind.as_str() {
            "displacement" => Ok(DressingSpec::Displacement(
                self.beta
                    .ok_or_else(|| CliError::Config("dressing: displacement needs beta".into()))?
                    .into(),
            )),
            "squeezing" => Ok(DressingSpec::Squeezing(self.xi.ok_or_else(|| {
                CliError::Config("dressing: squeezing needs xi".into())
            })?)),
            other => Err(CliError::Config(format!(
                "dressing: unsupported kind '{other}' (displacement, squeezing)"
            ))),
        }
    }
}

/// Background medium for the transfer experiment, 1-based sites.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub sites: Vec<usize>,
    pub bosons: u32,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepConfig {
    /// Inclusive linspace in sweep order.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        (0..self.steps)
            .map(|i| self.from + (self.to - self.from) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<String>,
}

/// Tolerance overrides; anything unset falls back to the defaults below.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub min_fidelity: Option<f64>,
    #[serde(default)]
    pub max_phase_error: Option<f64>,
    #[serde(default)]
    pub max_truncation_loss: Option<f64>,
    #[serde(default)]
    pub max_deviation: Option<f64>,
}

impl Tolerances {
    pub fn min_fidelity(&self) -> f64 {
        self.min_fidelity.unwrap_or(1.0 - 1e-6)
    }
    pub fn max_phase_error(&self) -> f64 {
        self.max_phase_error.unwrap_or(1e-6)
    }
    pub fn max_truncation_loss(&self) -> f64 {
        self.max_truncation_loss.unwrap_or(1e-6)
    }
    pub fn max_deviation(&self) -> f64 {
        self.max_deviation.unwrap_or(1e-9)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    #[serde(default)]
    pub dressing: Option<DressingConfig>,
    #[serde(default)]
    pub function: Option<String>,
    #[serde(default)]
    pub medium: Option<MediumConfig>,
    #[serde(default)]
    pub n_max: Option<u32>,
    #[serde(default)]
    pub paths: Option<Vec<usize>>,
    #[serde(default)]
    pub amplitudes: Option<Vec<ComplexLit>>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub time: Option<f64>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub draws: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

impl ExperimentConfig {
    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }
}

/// Parse and validate a config document. Every validation failure names the
/// offending field by JSON pointer.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let raw: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
    validate(&raw)?;
    serde_json::from_value(raw).map_err(|e| CliError::Config(format!("config: {e}")))
}

const EXPERIMENTS: &[&str] = &[
    "transfer",
    "repulsion",
    "dressed",
    "interference",
    "oracle-check",
    "sweep",
];

const SWEEP_PARAMETERS: &[&str] = &["U", "J", "epsilon", "beta", "xi"];

fn fail(pointer: &str, msg: &str) -> Result<(), CliError> {
    Err(CliError::Config(format!("config error at {pointer}: {msg}")))
}

fn require<'v>(obj: &'v Value, pointer: &str) -> Result<&'v Value, CliError> {
    match obj.pointer(pointer) {
        Some(v) => Ok(v),
        None => Err(CliError::Config(format!(
            "config error at {pointer}: required field is missing"
        ))),
    }
}

fn check_uint(v: &Value, pointer: &str, min: u64) -> Result<u64, CliError> {
    match v.as_u64() {
        Some(n) if n >= min => Ok(n),
        _ => Err(CliError::Config(format!(
            "config error at {pointer}: expected an integer >= {min}, found {v}"
        ))),
    }
}

fn check_finite(v: &Value, pointer: &str) -> Result<f64, CliError> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(CliError::Config(format!(
            "config error at {pointer}: expected a finite number, found {v}"
        ))),
    }
}

fn validate_chain(root: &Value) -> Result<(), CliError> {
    let chain = require(root, "/chain")?;
    if !chain.is_object() {
        return fail("/chain", "expected an object");
    }
    if chain.get("hopping").is_some() {
        let hops = chain.pointer("/hopping").unwrap();
        let arr = hops
            .as_array()
            .ok_or_else(|| CliError::Config("config error at /chain/hopping: expected an array of numbers".into()))?;
        if arr.is_empty() {
            return fail("/chain/hopping", "expected at least one coupling");
        }
        for (i, v) in arr.iter().enumerate() {
            check_finite(v, &format!("/chain/hopping/{i}"))?;
        }
        if let Some(onsite) = chain.get("onsite") {
            let os = onsite
                .as_array()
                .ok_or_else(|| CliError::Config("config error at /chain/onsite: expected an array of numbers".into()))?;
            if os.len() != arr.len() + 1 {
                return fail(
                    "/chain/onsite",
                    &format!("expected {} entries for {} couplings", arr.len() + 1, arr.len()),
                );
            }
        }
    } else {
        let sites = require(root, "/chain/sites")?;
        check_uint(sites, "/chain/sites", 2)?;
        if let Some(j) = chain.get("coupling") {
            let jv = check_finite(j, "/chain/coupling")?;
            if jv <= 0.0 {
                return fail("/chain/coupling", "expected a positive coupling");
            }
        }
    }
    if let Some(u) = chain.get("interaction") {
        check_finite(u, "/chain/interaction")?;
    }
    Ok(())
}

fn validate_dressing(root: &Value) -> Result<(), CliError> {
    let kind = require(root, "/dressing/kind")?;
    match kind.as_str() {
        Some("displacement") => {
            require(root, "/dressing/beta")?;
        }
        Some("squeezing") => {
            let xi = require(root, "/dressing/xi")?;
            check_finite(xi, "/dressing/xi")?;
        }
        _ => {
            return fail(
                "/dressing/kind",
                "expected \"displacement\" or \"squeezing\"",
            )
        }
    }
    Ok(())
}

/// Structural validation with JSON-pointer diagnostics.
pub fn validate(root: &Value) -> Result<(), CliError> {
    if !root.is_object() {
        return fail("", "config must be a JSON object");
    }
    let experiment = require(root, "/experiment")?;
    let kind = match experiment.as_str() {
        Some(s) if EXPERIMENTS.contains(&s) => s,
        _ => {
            return fail(
                "/experiment",
                &format!("expected one of {}", EXPERIMENTS.join(", ")),
            )
        }
    };

    match kind {
        "transfer" => {
            validate_chain(root)?;
            require(root, "/function")?;
            if let Some(medium) = root.pointer("/medium") {
                let sites = require(medium, "/sites")
                    .map_err(|_| CliError::Config("config error at /medium/sites: required field is missing".into()))?;
                match sites.as_array() {
                    Some(a) if !a.is_empty() => {
                        for (i, v) in a.iter().enumerate() {
                            check_uint(v, &format!("/medium/sites/{i}"), 1)?;
                        }
                    }
                    _ => return fail("/medium/sites", "expected a non-empty array of 1-based sites"),
                }
                let bosons = require(root, "/medium/bosons")?;
                check_uint(bosons, "/medium/bosons", 1)?;
            }
        }
        "repulsion" => {
            validate_chain(root)?;
            if let Some(d) = root.pointer("/draws") {
                check_uint(d, "/draws", 1)?;
            }
        }
        "dressed" => {
            validate_chain(root)?;
            require(root, "/function")?;
            validate_dressing(root)?;
            let n_max = require(root, "/n_max")?;
            check_uint(n_max, "/n_max", 1)?;
        }
        "interference" => {
            let paths = require(root, "/paths")?;
            let arr = match paths.as_array() {
                Some(a) if a.len() >= 2 => a,
                _ => return fail("/paths", "expected an array of at least two path lengths"),
            };
            for (i, v) in arr.iter().enumerate() {
                check_uint(v, &format!("/paths/{i}"), 2)?;
            }
            if let Some(amps) = root.pointer("/amplitudes") {
                match amps.as_array() {
                    Some(a) if a.len() == arr.len() => {}
                    _ => {
                        return fail(
                            "/amplitudes",
                            &format!("expected one amplitude per path ({} paths)", arr.len()),
                        )
                    }
                }
            }
        }
        "oracle-check" => {
            validate_chain(root)?;
            if let Some(s) = root.pointer("/samples") {
                check_uint(s, "/samples", 1)?;
            }
            if let Some(times) = root.pointer("/times") {
                match times.as_array() {
                    Some(a) if !a.is_empty() => {
                        for (i, v) in a.iter().enumerate() {
                            check_finite(v, &format!("/times/{i}"))?;
                        }
                    }
                    _ => return fail("/times", "expected a non-empty array of times"),
                }
            }
        }
        "sweep" => {
            let sweep = require(root, "/sweep")?;
            if !sweep.is_object() {
                return fail("/sweep", "expected an object");
            }
            let parameter = require(root, "/sweep/parameter")?;
            let parameter = match parameter.as_str() {
                Some(p) if SWEEP_PARAMETERS.contains(&p) => p,
                _ => {
                    return fail(
                        "/sweep/parameter",
                        &format!("expected one of {}", SWEEP_PARAMETERS.join(", ")),
                    )
                }
            };
            check_finite(require(root, "/sweep/from")?, "/sweep/from")?;
            check_finite(require(root, "/sweep/to")?, "/sweep/to")?;
            check_uint(require(root, "/sweep/steps")?, "/sweep/steps", 1)?;
            validate_chain(root)?;
            require(root, "/function")?;
            if matches!(parameter, "beta" | "xi") {
                let n_max = require(root, "/n_max")?;
                check_uint(n_max, "/n_max", 1)?;
            }
        }
        _ => unreachable!(),
    }

    if let Some(format) = root.pointer("/output/format") {
        match format.as_str() {
            Some("json") | Some("csv") => {}
            _ => return fail("/output/format", "expected \"json\" or \"csv\""),
        }
    }
    if let Some(t) = root.pointer("/time") {
        check_finite(t, "/time")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err(text: &str) -> String {
        match parse_config(text) {
            Err(CliError::Config(msg)) => msg,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_transfer_config_parses() {
        let cfg = parse_config(
            r#"{"experiment": "transfer", "chain": {"sites": 5}, "function": "x1"}"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Transfer);
        assert_eq!(cfg.chain.unwrap().sites, Some(5));
    }

    #[test]
    fn missing_fields_name_their_pointer() {
        let msg = parse_err(r#"{"experiment": "transfer", "chain": {"sites": 5}}"#);
        assert!(msg.contains("/function"), "{msg}");
        let msg = parse_err(r#"{"experiment": "transfer", "function": "x1"}"#);
        assert!(msg.contains("/chain"), "{msg}");
        let msg = parse_err(r#"{"experiment": "dressed", "chain": {"sites": 3}, "function": "x1", "dressing": {"kind": "squeezing", "xi": 0.1}}"#);
        assert!(msg.contains("/n_max"), "{msg}");
    }

    #[test]
    fn bad_values_name_their_pointer() {
        let msg = parse_err(r#"{"experiment": "transfer", "chain": {"sites": 1}, "function": "x1"}"#);
        assert!(msg.contains("/chain/sites"), "{msg}");
        let msg = parse_err(
            r#"{"experiment": "sweep", "sweep": {"parameter": "U", "from": 0, "to": 1, "steps": 0}, "chain": {"sites": 3}, "function": "x1"}"#,
        );
        assert!(msg.contains("/sweep/steps"), "{msg}");
        let msg = parse_err(r#"{"experiment": "interference", "paths": [5]}"#);
        assert!(msg.contains("/paths"), "{msg}");
        let msg = parse_err(r#"{"experiment": "flight"}"#);
        assert!(msg.contains("/experiment"), "{msg}");
    }

    #[test]
    fn sweep_values_are_inclusive_and_ordered() {
        let sweep = SweepConfig {
            parameter: "U".into(),
            from: 0.0,
            to: 2.0,
            steps: 21,
        };
        let values = sweep.values();
        assert_eq!(values.len(), 21);
        assert_eq!(values[0], 0.0);
        assert_eq!(values[20], 2.0);
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        let single = SweepConfig {
            parameter: "U".into(),
            from: 0.7,
            to: 2.0,
            steps: 1,
        };
        assert_eq!(single.values(), vec![0.7]);
    }

    #[test]
    fn dressing_kinds_are_restricted() {
        let msg = parse_err(
            r#"{"experiment": "dressed", "chain": {"sites": 3}, "function": "x1", "n_max": 4,
                "dressing": {"kind": "down-conversion"}}"#,
        );
        assert!(msg.contains("/dressing/kind"), "{msg}");
        let cfg = parse_config(
            r#"{"experiment": "dressed", "chain": {"sites": 3}, "function": "x1", "n_max": 4,
                "dressing": {"kind": "displacement", "beta": [0.2, 0.1]}}"#,
        )
        .unwrap();
        let d = cfg.dressing.unwrap().build().unwrap();
        assert!(matches!(d, bosechain::model::DressingSpec::Displacement(_)));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let msg = parse_err(
            r#"{"experiment": "transfer", "chain": {"sites": 5}, "function": "x1", "extra": 1}"#,
        );
        assert!(msg.contains("extra"), "{msg}");
    }
}
