//! Flag values, JSON config defaults and the merge between them.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dmera_core::Model;
use serde::Deserialize;

use crate::CliError;

/// Integer list written as `6`, `2,4,6` or an inclusive range `1..6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<usize>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = |part: &str| format!("`{part}` is not a non-negative integer");
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let a: usize = a.trim().parse().map_err(|_| bad(a))?;
                let b: usize = b.trim().parse().map_err(|_| bad(b))?;
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            } else {
                out.push(part.parse().map_err(|_| bad(part))?);
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(Grid(out))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// A grid in the config file: a number, an array or the flag syntax.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridValue {
    One(usize),
    Many(Vec<usize>),
    Text(String),
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match GridValue::deserialize(d)? {
            GridValue::One(v) => Ok(Grid(vec![v])),
            GridValue::Many(v) if !v.is_empty() => Ok(Grid(v)),
            GridValue::Many(_) => Err(serde::de::Error::custom("empty list")),
            GridValue::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Defaults read from `--config`. Every field is optional; flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<Model>,
    pub depth: Option<Grid>,
    pub sites: Option<Grid>,
    pub rounds: Option<Grid>,
    pub layers: Option<usize>,
    pub max_distance: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub restarts: Option<usize>,
    pub stride: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Ring size from `--sites` or `--layers`; one of them must resolve.
pub fn resolve_sites(sites: Option<Grid>, layers: Option<usize>, fallback: usize) -> Result<Vec<usize>, CliError> {
    match (sites, layers) {
        (Some(g), _) => Ok(g.0),
        (None, Some(l)) if (1..=14).contains(&l) => Ok(vec![1 << l]),
        (None, Some(l)) => Err(CliError::Usage(format!("--layers must be in 1..=14, got {l}"))),
        (None, None) => Ok(vec![fallback]),
    }
}

/// Number of scaling layers producing `l` sites.
pub fn layers_for(l: usize) -> Result<usize, CliError> {
    if l < 2 || !l.is_power_of_two() || l > 1 << 14 {
        return Err(CliError::Usage(format!(
            "DMERA states need a power-of-two site count in 2..=16384, got {l}"
        )));
    }
    Ok(l.trailing_zeros() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        assert_eq!("6".parse::<Grid>().unwrap().0, vec![6]);
        assert_eq!("1..4".parse::<Grid>().unwrap().0, vec![1, 2, 3, 4]);
        assert_eq!("2, 4,6".parse::<Grid>().unwrap().0, vec![2, 4, 6]);
        assert_eq!("1..2,8".parse::<Grid>().unwrap().0, vec![1, 2, 8]);
        assert!("".parse::<Grid>().is_err());
        assert!("4..2".parse::<Grid>().is_err());
        assert!("x".parse::<Grid>().is_err());
    }

    #[test]
    fn config_forms() {
        let c: RunConfig =
            serde_json::from_str(r#"{"model":"modified_ising","depth":"1..3","sites":[16,64],"rounds":4}"#).unwrap();
        assert_eq!(c.model, Some(Model::ModifiedIsing));
        assert_eq!(c.depth.unwrap().0, vec![1, 2, 3]);
        assert_eq!(c.sites.unwrap().0, vec![16, 64]);
        assert_eq!(c.rounds.unwrap().0, vec![4]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"colour":1}"#).is_err());
    }

    #[test]
    fn site_resolution() {
        assert_eq!(resolve_sites(None, Some(3), 256).unwrap(), vec![8]);
        assert_eq!(resolve_sites(Some(Grid(vec![4])), Some(3), 256).unwrap(), vec![4]);
        assert_eq!(resolve_sites(None, None, 256).unwrap(), vec![256]);
        assert!(resolve_sites(None, Some(0), 256).is_err());
        assert_eq!(layers_for(256).unwrap(), 8);
        assert!(layers_for(24).is_err());
    }
}
