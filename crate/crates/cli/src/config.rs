//! Run configuration: defaults, an optional `key=value` file, and CLI flag
//! overrides, merged in that order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Effective run configuration. Every numeric default is documented in the
/// README schema table.
#[derive(Debug, Clone)]
pub struct Config {
    pub gamma: f64,
    pub rho_c: f64,
    pub nodes: usize,
    pub tol_ode: f64,
    pub tol_eig: f64,
    pub tol_match: f64,
    pub dt_factor: f64,
    pub periods: f64,
    pub t_end: Option<f64>,
    pub cache_dir: PathBuf,
    pub out_dir: PathBuf,
    pub verify_lambda_sign: bool,
    pub verify_eps: bool,
    pub verify_vacuum: bool,
    pub verify_ritter: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            gamma: 1.5,
            rho_c: 1.0,
            nodes: 72,
            tol_ode: 1e-11,
            tol_eig: 1e-6,
            tol_match: 1e-6,
            dt_factor: 0.4,
            periods: 5.0,
            t_end: None,
            cache_dir: PathBuf::from(".starpulse-cache"),
            out_dir: PathBuf::from("."),
            verify_lambda_sign: true,
            verify_eps: true,
            verify_vacuum: true,
            verify_ritter: true,
        }
    }
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::Config(format!(
            "config key {key}: expected a boolean, got {raw:?}"
        ))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse().map_err(|_| {
        CliError::Config(format!("config key {key}: cannot parse {raw:?}"))
    })
}

impl Config {
    /// Loads a `key=value` file (comments start with `#`) over the defaults.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut pairs = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        for (key, value) in pairs {
            match key.as_str() {
                "gamma" => cfg.gamma = parse_gamma(&value)?,
                "rho_c" => cfg.rho_c = parse_num(&key, &value)?,
                "nodes" => cfg.nodes = parse_num(&key, &value)?,
                "tol_ode" => cfg.tol_ode = parse_num(&key, &value)?,
                "tol_eig" => cfg.tol_eig = parse_num(&key, &value)?,
                "tol_match" => cfg.tol_match = parse_num(&key, &value)?,
                "dt_factor" => cfg.dt_factor = parse_num(&key, &value)?,
                "periods" => cfg.periods = parse_num(&key, &value)?,
                "t_end" => cfg.t_end = Some(parse_num(&key, &value)?),
                "cache_dir" => cfg.cache_dir = PathBuf::from(&value),
                "out_dir" => cfg.out_dir = PathBuf::from(&value),
                "verify_lambda_sign" => cfg.verify_lambda_sign = parse_bool(&key, &value)?,
                "verify_eps" => cfg.verify_eps = parse_bool(&key, &value)?,
                "verify_vacuum" => cfg.verify_vacuum = parse_bool(&key, &value)?,
                "verify_ritter" => cfg.verify_ritter = parse_bool(&key, &value)?,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown config key {other:?} in {}",
                        path.display()
                    )))
                }
            }
        }
        Ok(cfg)
    }
}

/// Parses an adiabatic exponent given as a decimal (`1.5`) or a fraction
/// (`4/3`), validating against the admissible set.
pub fn parse_gamma(raw: &str) -> Result<f64, CliError> {
    let value = if let Some((num, den)) = raw.split_once('/') {
        let n: f64 = parse_num("gamma", num.trim())?;
        let d: f64 = parse_num("gamma", den.trim())?;
        n / d
    } else {
        parse_num("gamma", raw)?
    };
    // construct once to run the admissibility check
    starpulse_core::lane_emden::GasParams::new(value)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_overrides_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\ngamma = 4/3\nnodes=96\nverify_eps = off").unwrap();
        let cfg = Config::load(f.path()).unwrap();
        assert!((cfg.gamma - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(cfg.nodes, 96);
        assert!(!cfg.verify_eps);
        assert_eq!(cfg.rho_c, 1.0);
    }

    #[test]
    fn bad_gamma_is_config_error() {
        assert!(parse_gamma("1.7").is_err());
        let msg = parse_gamma("1.7").unwrap_err().to_string();
        assert!(msg.contains("2, 1.5, 1.333..., 1.25"));
        assert!(parse_gamma("3/2").is_ok());
    }

    #[test]
    fn unknown_key_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "bogus=1").unwrap();
        assert!(Config::load(f.path()).is_err());
    }
}
