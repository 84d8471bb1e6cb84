//! Run configuration: JSON file merged over defaults, then `--set` overrides.

use std::path::{Path, PathBuf};

use jcas_core::array::ArrayConfig;
use jcas_core::channel::ChannelConfig;
use jcas_core::oracle::OracleBudget;
use jcas_core::pareto::SweepSpec;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "JCAS_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Array and channel draw used by `channels gen`.
    pub channels: ChannelsSection,
    pub sweep: SweepSpec,
    pub verify: OracleBudget,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelsSection {
    pub array: ArrayConfig,
    pub channel: ChannelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Falls back to the environment variable, then `jcas-out`.
    pub dir: Option<PathBuf>,
    pub prefix: String,
    pub svg: bool,
    /// Non-converged or failed points make `pareto` exit with code 2.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sweep = SweepSpec::default();
        let cell = &sweep.base;
        RunConfig {
            channels: ChannelsSection {
                array: ArrayConfig::new(cell.n_tx, cell.n_rx(), sweep.spacing_over_wavelength)
                    .expect("default array is valid"),
                channel: sweep.channel.config(cell.k, cell.seed),
            },
            verify: OracleBudget::default(),
            output: OutputConfig {
                dir: None,
                prefix: "pareto".to_string(),
                svg: false,
                strict: false,
            },
            sweep,
        }
    }
}

impl RunConfig {
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("jcas-out"))
    }

    /// Range checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        let wrap = |section: &str, e: jcas_core::JcasError| match e {
            jcas_core::JcasError::InvalidConfig { field, reason } => {
                CliError::config(format!("{section}.{field}"), reason)
            }
            other => CliError::Core(other),
        };
        self.channels
            .array
            .validate()
            .map_err(|e| wrap("channels.array", e))?;
        self.channels
            .channel
            .validate()
            .map_err(|e| wrap("channels.channel", e))?;
        self.sweep.validate().map_err(|e| wrap("sweep", e))?;
        self.verify.validate().map_err(|e| wrap("verify", e))?;
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            return Err(CliError::config(
                "output.prefix",
                "must be a plain non-empty file name",
            ));
        }
        Ok(())
    }
}

/// Recursively overlays `top` onto `base`; objects merge key by key.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses `a.b.c=value`; the value is read as JSON, or as a string otherwise.
pub fn parse_override(text: &str) -> Result<(Vec<String>, Value)> {
    let (path, raw) = text
        .split_once('=')
        .ok_or_else(|| CliError::config(text, "override must look like dotted.path=value"))?;
    let keys: Vec<String> = path.split('.').map(str::to_string).collect();
    if keys.iter().any(String::is_empty) {
        return Err(CliError::config(path, "empty path segment"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((keys, value))
}

pub fn apply_override(root: &mut Value, keys: &[String], value: Value) -> Result<()> {
    let mut node = root;
    for (depth, key) in keys.iter().enumerate() {
        let here = keys[..=depth].join(".");
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::config(&here, "parent is not an object"))?;
        if depth + 1 == keys.len() {
            obj.insert(key.clone(), value);
            return Ok(());
        }
        node = obj
            .entry(key.clone())
            .or_insert_with(|| Value::Object(Map::new()));
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
    }
    Ok(())
}

/// `base`, then the optional file, then overrides in order.
pub fn load(base: &RunConfig, file: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut root = serde_json::to_value(base).expect("config serializes");
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let user: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config(path.display().to_string(), e.to_string()))?;
        if !user.is_object() {
            return Err(CliError::config(
                path.display().to_string(),
                "top level must be an object",
            ));
        }
        merge(&mut root, user);
    }
    for o in overrides {
        let (keys, value) = parse_override(o)?;
        apply_override(&mut root, &keys, value)?;
    }
    from_value(root)
}

pub fn from_value(root: Value) -> Result<RunConfig> {
    let cfg: RunConfig = serde_path_to_error::deserialize(root).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Comma-separated weights, e.g. `0,0.5,1`.
pub fn parse_alphas(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::config("--alphas", format!("`{s}`: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let v = serde_json::to_value(RunConfig::default()).unwrap();
        assert_eq!(from_value(v).unwrap(), RunConfig::default());
    }

    #[test]
    fn override_sets_nested_values() {
        let cfg = load(
            &RunConfig::default(),
            None,
            &["sweep.base.K=2".into(), "output.prefix=run".into()],
        )
        .unwrap();
        assert_eq!(cfg.sweep.base.k, 2);
        assert_eq!(cfg.output.prefix, "run");
    }

    #[test]
    fn override_fills_null_options() {
        let cfg = load(
            &RunConfig::default(),
            None,
            &["sweep.base.eirp_dbm=28".into()],
        )
        .unwrap();
        assert_eq!(cfg.sweep.base.eirp_dbm, Some(28.0));
    }

    #[test]
    fn type_error_names_the_field() {
        let err = load(
            &RunConfig::default(),
            None,
            &["channels.channel.pathloss_exponent=fast".into()],
        )
        .unwrap_err();
        assert!(
            err.to_string()
                .contains("channels.channel.pathloss_exponent"),
            "{err}"
        );
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let err = load(&RunConfig::default(), None, &["sweep.bse.K=2".into()]).unwrap_err();
        assert!(err.to_string().contains("bse"), "{err}");
    }

    #[test]
    fn range_error_carries_section() {
        let err = load(
            &RunConfig::default(),
            None,
            &["sweep.alphas=[0.5, 2.0]".into()],
        )
        .unwrap_err();
        assert!(err.to_string().contains("sweep.alphas"), "{err}");
    }

    #[test]
    fn alphas_parse() {
        assert_eq!(parse_alphas("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_alphas("0,x").is_err());
    }
}
