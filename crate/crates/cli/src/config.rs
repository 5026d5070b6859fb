use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use phylocoal::io::Meta;

use crate::error::CliError;

pub const SEED_ENV: &str = "PHYLOCOAL_SEED";

/// Resolves settings in the order: command-line flag, config file, default.
/// The seed additionally falls back to `PHYLOCOAL_SEED` before its default.
#[derive(Debug, Default)]
pub struct Settings {
    file: Meta,
}

impl Settings {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let file = Meta::read(BufReader::new(File::open(path)?))?;
        for (k, _) in file.entries() {
            if !allowed.contains(&k.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown key '{k}' in config file {}",
                    path.display()
                )));
            }
        }
        Ok(Self { file })
    }

    fn from_file<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key '{key}' has bad value '{v}'"))),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        Ok(self.get_opt(key, flag)?.unwrap_or(default))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.from_file(key),
        }
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = self.get_opt("seed", flag)? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))),
            Err(_) => Ok(0),
        }
    }
}
