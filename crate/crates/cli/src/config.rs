//! Flat `key = value` configuration files.
//!
//! Keys are the long flag names, with `-` and `_` interchangeable. Blank
//! lines and `#` comments are ignored. A key that no subcommand understands
//! is an error, so typos never pass silently.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "threads",
    // gen
    "n",
    "nc",
    "gamma",
    "rho",
    "seed",
    "out",
    // solve
    "input",
    "mode",
    "lambda",
    "mu0",
    "mu_growth",
    "tol",
    "tol_dual",
    "max_iters",
    "eta",
    // certify
    "k0",
    "golf_seed",
    "c0",
    "with_matrices",
    // grid
    "kind",
    "n_max",
    "trials",
    "base_seed",
    "out_dir",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", idx + 1))
            })?;
            let key = normalize(key);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    idx + 1
                )));
            }
            let value = value.trim().trim_matches('"').to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::Usage(format!(
                    "config line {}: duplicate key `{key}`",
                    idx + 1
                )));
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Fs {
            path: path.to_path_buf(),
            source,
        })?;
        Config::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}` = `{v}`: {e}"))),
        }
    }

    /// Flag value if given, otherwise the config value.
    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// Like [`Config::or`] but the value must come from somewhere.
    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.or(flag, key)?.ok_or_else(|| {
            CliError::Usage(format!(
                "missing required value `--{}`",
                key.replace('_', "-")
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let cfg = Config::parse("# sweep\nn = 50\nmax-iters = 300 # cap\n\nmode = \"plain\"\n").unwrap();
        assert_eq!(cfg.get::<usize>("n").unwrap(), Some(50));
        assert_eq!(cfg.get::<usize>("max_iters").unwrap(), Some(300));
        assert_eq!(cfg.get::<String>("mode").unwrap().as_deref(), Some("plain"));
        assert_eq!(cfg.get::<f64>("rho").unwrap(), None);
    }

    #[test]
    fn flags_win_over_config() {
        let cfg = Config::parse("n = 50").unwrap();
        assert_eq!(cfg.or(Some(20usize), "n").unwrap(), Some(20));
        assert_eq!(cfg.or(None::<usize>, "n").unwrap(), Some(50));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(Config::parse("nn = 3"), Err(CliError::Usage(_))));
        assert!(matches!(Config::parse("n 3"), Err(CliError::Usage(_))));
        assert!(matches!(Config::parse("n = 3\nn = 4"), Err(CliError::Usage(_))));
        let cfg = Config::parse("n = many").unwrap();
        assert!(cfg.get::<usize>("n").is_err());
    }

    #[test]
    fn missing_required_names_the_flag() {
        let err = Config::default().require(None::<f64>, "tol_dual").unwrap_err();
        assert!(err.to_string().contains("--tol-dual"), "{err}");
    }
}
