//! key=value configuration files and flag resolution.
//!
//! A value given on the command line wins over the config file, which wins
//! over the built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use firmscale::PanelSchema;

use crate::error::CliError;

const PARAM_KEYS: &[&str] = &[
    "input",
    "synth",
    "measure",
    "prefix",
    "years",
    "bins",
    "min_count",
    "max_growth_pct",
    "window_len",
    "se_threshold",
    "persistence",
    "seed",
    "out",
    "format",
    "name",
    "firms",
    "n_years",
    "first_year",
    "size_min",
    "size_max",
    "beta",
    "amplitude",
    "sigma_eps",
    "unit_sigma",
    "schedule",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    schema: PanelSchema,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config line {}: expected key=value, got `{line}`",
                    n + 1
                ))
            })?;
            let key = normalize(k);
            if PARAM_KEYS.contains(&key.as_str()) {
                cfg.values.insert(key, v.trim().to_string());
            } else if !cfg.schema.set(&key, v) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{}`",
                    n + 1,
                    k.trim()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                Config::parse(&text)
            }
        }
    }

    /// Column mapping from the file, overridden by `--col KEY=NAME` flags.
    pub fn schema(&self, cols: &[String]) -> Result<PanelSchema, CliError> {
        let mut schema = self.schema.clone();
        for c in cols {
            let ok = c
                .split_once('=')
                .is_some_and(|(k, v)| schema.set(&normalize(k), v));
            if !ok {
                return Err(CliError::Usage(format!(
                    "bad --col `{c}`: expected KEY=NAME with KEY one of {}",
                    PanelSchema::KEYS.join(", ")
                )));
            }
        }
        Ok(schema)
    }

    pub fn get<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| {
                v.parse().map_err(|e| {
                    CliError::Usage(format!("config key `{key}`: invalid value `{v}`: {e}"))
                })
            })
            .transpose()
    }

    pub fn or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }
}
