//! Run configuration: TOML file, `--set` overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sshqst::{
    DisorderKind, DisorderSpec, EnsembleOptions, Exponential, LzParams, Model, Pairing, ProtocolSchedule,
    QstError, RabiParams, ScalingRule, StepControl, SweepAxis, SweepParam,
};

/// A configuration problem, reported before any computation starts.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field_error(section: &str, err: QstError) -> ConfigError {
    match err {
        QstError::InvalidParameter { name, reason } => {
            ConfigError(format!("field `{section}.{name}`: {reason}"))
        }
        other => ConfigError(format!("section `{section}`: {other}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub n_dimers: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { n_dimers: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderConfig {
    pub kind: DisorderKind,
    pub strength: f64,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for DisorderConfig {
    fn default() -> Self {
        Self {
            kind: DisorderKind::OnDiagonal,
            strength: 0.2,
            realizations: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub step_budget: f64,
    pub samples: usize,
    pub record_sites: bool,
    pub bins: usize,
    pub exponential: Exponential,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let control = StepControl::default();
        Self {
            step_budget: control.budget,
            samples: control.samples,
            record_sites: control.record_sites,
            bins: 100,
            exponential: control.exponential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Both,
        }
    }
}

/// One sweep axis: either explicit `values` or `start`/`stop`/`count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub param: SweepParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl AxisConfig {
    fn range(param: SweepParam, start: f64, stop: f64, count: usize) -> Self {
        Self {
            param,
            values: None,
            start: Some(start),
            stop: Some(stop),
            count: Some(count),
        }
    }

    pub fn to_axis(&self) -> Result<SweepAxis, QstError> {
        match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => SweepAxis::new(self.param, v.clone()),
            (None, Some(a), Some(b), Some(n)) => SweepAxis::linspace(self.param, a, b, n),
            _ => Err(QstError::InvalidParameter {
                name: "values",
                reason: "give either `values` or all of `start`, `stop`, `count`".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub axis1: AxisConfig,
    pub axis2: AxisConfig,
    pub model: Model,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis1: AxisConfig::range(SweepParam::Duration, 160.0, 320.0, 17),
            axis2: AxisConfig::range(SweepParam::Delta0, 0.05, 0.4, 15),
            model: Model::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub rho: f64,
    pub sizes: Vec<usize>,
    pub rule: ScalingRule,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            rho: 1.3,
            sizes: vec![10, 20, 30, 40],
            rule: ScalingRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub rabi: RabiParams,
    pub lz: LzParams,
    pub pairing: Pairing,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            rabi: RabiParams {
                epsilon: 0.1,
                duration: 86.0,
            },
            lz: reference_lz(),
            pairing: Pairing::Paired,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AreaTimeConfig {
    pub epsilon: f64,
}

impl Default for AreaTimeConfig {
    fn default() -> Self {
        Self { epsilon: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub t1: f64,
    pub t2: f64,
    pub delta: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            t1: 1.0,
            t2: 0.5,
            delta: 0.0,
        }
    }
}

fn reference_lz() -> LzParams {
    LzParams {
        epsilon: 0.1,
        delta0: 0.2,
        tau: 60.0,
        tau_z: 120.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Command used by `sshqst run`; other subcommands override it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Command>,
    pub chain: ChainConfig,
    pub protocol: ProtocolSchedule,
    pub disorder: DisorderConfig,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
    pub scaling: ScalingConfig,
    pub compare: CompareConfig,
    pub area_time: AreaTimeConfig,
    pub spectrum: SpectrumConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            chain: ChainConfig::default(),
            protocol: ProtocolSchedule::Lz(reference_lz()),
            disorder: DisorderConfig::default(),
            numerics: NumericsConfig::default(),
            output: OutputConfig::default(),
            sweep: SweepConfig::default(),
            scaling: ScalingConfig::default(),
            compare: CompareConfig::default(),
            area_time: AreaTimeConfig::default(),
            spectrum: SpectrumConfig::default(),
        }
    }
}

/// Which sections a command reads, and therefore validates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    TwoLevel,
    Sweep2d,
    Ensemble,
    Compare,
    Scaling,
    AreaTime,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::TwoLevel => "two-level",
            Command::Sweep2d => "sweep2d",
            Command::Ensemble => "ensemble",
            Command::Compare => "compare",
            Command::Scaling => "scaling",
            Command::AreaTime => "area-time",
            Command::Spectrum => "spectrum",
        }
    }
}

impl RunConfig {
    pub fn control(&self) -> StepControl {
        StepControl {
            budget: self.numerics.step_budget,
            samples: self.numerics.samples,
            record_sites: self.numerics.record_sites,
            exponential: self.numerics.exponential,
        }
    }

    pub fn disorder_spec(&self) -> DisorderSpec {
        DisorderSpec {
            kind: self.disorder.kind,
            strength: self.disorder.strength,
        }
    }

    pub fn ensemble_options(&self) -> EnsembleOptions {
        EnsembleOptions {
            realizations: self.disorder.realizations,
            seed: self.disorder.seed,
            bins: self.numerics.bins,
            control: self.control(),
        }
    }

    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        let check = |section: &str, r: Result<(), QstError>| r.map_err(|e| field_error(section, e));
        if self.chain.n_dimers == 0 && command != Command::Scaling {
            return Err(ConfigError("field `chain.n_dimers`: must be at least 1".into()));
        }
        check("numerics", self.control().validate())?;
        if self.numerics.bins == 0 {
            return Err(ConfigError("field `numerics.bins`: must be at least 1".into()));
        }
        match command {
            Command::Simulate | Command::TwoLevel => check("protocol", self.protocol.validate())?,
            Command::Sweep2d => {
                check("protocol", self.protocol.validate())?;
                check("sweep.axis1", self.sweep.axis1.to_axis().map(drop))?;
                check("sweep.axis2", self.sweep.axis2.to_axis().map(drop))?;
            }
            Command::Ensemble => {
                check("protocol", self.protocol.validate())?;
                self.validate_disorder()?;
            }
            Command::Compare => {
                check("compare.rabi", self.compare.rabi.validate())?;
                check("compare.lz", self.compare.lz.validate())?;
                self.validate_disorder()?;
            }
            Command::Scaling => {
                if self.scaling.sizes.is_empty() {
                    return Err(ConfigError(
                        "field `scaling.sizes`: at least one chain length is required".into(),
                    ));
                }
                for &n in &self.scaling.sizes {
                    check("scaling", self.scaling.rule.params(self.scaling.rho, n).map(drop))?;
                }
            }
            Command::AreaTime => {
                check(
                    "area_time",
                    ProtocolSchedule::rabi(self.area_time.epsilon, 1.0).map(drop),
                )?;
            }
            Command::Spectrum => {
                let s = &self.spectrum;
                check(
                    "spectrum",
                    sshqst::ChainSpec::new(self.chain.n_dimers, s.t1, s.t2, s.delta).map(drop),
                )?;
            }
        }
        Ok(())
    }

    fn validate_disorder(&self) -> Result<(), ConfigError> {
        self.disorder_spec()
            .validate()
            .map_err(|e| field_error("disorder", e))?;
        if self.disorder.realizations == 0 {
            return Err(ConfigError(
                "field `disorder.realizations`: must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Parses `key.path=value`; the value is read as a TOML literal and falls
/// back to a bare string.
pub fn parse_override(spec: &str) -> Result<(Vec<String>, toml::Value), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override `{spec}`: expected key.path=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(ConfigError(format!("override `{spec}`: empty key segment")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), ConfigError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cursor = table;
    for (depth, key) in parents.iter().enumerate() {
        let entry = cursor
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry.as_table_mut().ok_or_else(|| {
            ConfigError(format!(
                "override `{}`: `{key}` is not a section",
                path[..=depth].join(".")
            ))
        })?;
    }
    cursor.insert(last.clone(), value);
    Ok(())
}

/// Keys that name the same field; only one of each group may be present.
const ALIASES: [[&str; 2]; 1] = [["duration", "T"]];
const AXIS_RANGE: [&str; 3] = ["start", "stop", "count"];

/// Completes `table` with default values. A section whose `kind` differs
/// from the default's is left alone, as is the range form of an axis given
/// explicit `values`.
fn fill_missing(table: &mut toml::Table, defaults: &toml::Table) {
    if let (Some(k), Some(dk)) = (table.get("kind"), defaults.get("kind")) {
        if k != dk {
            return;
        }
    }
    for (key, default) in defaults {
        if table.contains_key("values") && AXIS_RANGE.contains(&key.as_str()) {
            continue;
        }
        let aliased = ALIASES
            .iter()
            .any(|group| group.contains(&key.as_str()) && group.iter().any(|a| table.contains_key(*a)));
        match (table.get_mut(key), default) {
            (Some(toml::Value::Table(inner)), toml::Value::Table(d)) => fill_missing(inner, d),
            (Some(_), _) => {}
            (None, _) if aliased => {}
            (None, _) => {
                table.insert(key.clone(), default.clone());
            }
        }
    }
}

/// Defaults, then the file, then `--set` overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for spec in overrides {
        let (path, value) = parse_override(spec)?;
        apply_override(&mut table, &path, value)?;
    }
    let defaults = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
    fill_missing(&mut table, &defaults);
    toml::Value::Table(table)
        .try_into::<RunConfig>()
        .map_err(|e| ConfigError(format!("invalid configuration: {}", e.to_string().trim_end())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference_point() {
        let c = load(None, &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.protocol.duration(), 240.0);
        for cmd in [
            Command::Simulate,
            Command::TwoLevel,
            Command::Sweep2d,
            Command::Ensemble,
            Command::Compare,
            Command::Scaling,
            Command::AreaTime,
            Command::Spectrum,
        ] {
            c.validate(cmd).unwrap();
        }
    }

    #[test]
    fn overrides_parse_values() {
        let (p, v) = parse_override("protocol.tau_z=150").unwrap();
        assert_eq!(p, ["protocol", "tau_z"]);
        assert_eq!(v, toml::Value::Integer(150));
        let (_, v) = parse_override("disorder.kind=off-diagonal").unwrap();
        assert_eq!(v, toml::Value::String("off-diagonal".into()));
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let c = load(
            None,
            &[
                "protocol.kind=rabi".into(),
                "protocol.epsilon=0.2".into(),
                "protocol.T=196".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.protocol, ProtocolSchedule::rabi(0.2, 196.0).unwrap());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = load(None, &["protocol.tau_z=150".into(), "compare.rabi.T=90".into()]).unwrap();
        assert_eq!(c.protocol, ProtocolSchedule::lz(0.1, 0.2, 60.0, 150.0).unwrap());
        assert_eq!(c.compare.rabi.duration, 90.0);
        let c = load(None, &["sweep.axis1.values=[200.0, 240.0]".into()]).unwrap();
        assert_eq!(c.sweep.axis1.to_axis().unwrap().values, vec![200.0, 240.0]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = load(None, &["chain.length=4".into()]).unwrap_err();
        assert!(err.0.contains("length"), "{err}");
        assert!(load(None, &["bogus.x=1".into()]).is_err());
    }

    #[test]
    fn field_diagnostics_name_the_field() {
        let c = load(None, &["protocol.epsilon=1.5".into()]).unwrap();
        let err = c.validate(Command::Simulate).unwrap_err();
        assert!(err.0.contains("protocol.epsilon"), "{err}");
        let c = load(None, &["numerics.step_budget=2.0".into()]).unwrap();
        assert!(c
            .validate(Command::Simulate)
            .unwrap_err()
            .0
            .contains("numerics.step_budget"));
    }

    #[test]
    fn axis_needs_one_form() {
        let mut a = AxisConfig::range(SweepParam::Tau, 10.0, 20.0, 3);
        assert_eq!(a.to_axis().unwrap().values, vec![10.0, 15.0, 20.0]);
        a.values = Some(vec![1.0]);
        assert!(a.to_axis().is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
