//! `--config FILE`: a JSON object mirroring the command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{CliError, Direction, Method, OutFormat, Suite, TargetKind};

/// Every key is optional; flags given on the command line win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub direction: Option<Direction>,
    pub to: Option<TargetKind>,
    pub q0: Option<f64>,
    pub k: Option<u32>,
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub method: Option<Method>,
    pub p_index: Option<u32>,
    pub out: Option<OutFormat>,
    pub f: Option<u32>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub restricted: Option<bool>,
    pub suite: Option<Suite>,
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub json: Option<bool>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("invalid config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", p.display())))?;
                Config::parse(&text)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c = Config::parse(r#"{"suite":"jacobi","n":4,"trials":50,"seed":7,"method":"rk4-lax"}"#).unwrap();
        assert_eq!(c.suite, Some(Suite::Jacobi));
        assert_eq!(c.n, Some(4));
        assert_eq!(c.method, Some(Method::Rk4Lax));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(Config::parse(r#"{"sweet":"jacobi"}"#).is_err());
        assert!(Config::parse(r#"{"n":-1}"#).is_err());
        assert!(Config::parse("[]").is_err());
    }
}
