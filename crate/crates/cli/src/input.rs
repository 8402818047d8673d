//! Input file schemas, one per subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use infosum::anova::ProductSpace;
use infosum::{Distribution, StandardKind, SubsetCollection};
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// Reads and parses `path`; schema errors carry the JSON path of the offending field.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    match serde_path_to_error::deserialize(de) {
        Ok(v) => Ok(v),
        Err(e) => {
            let path = e.path().to_string();
            bail!("schema error at `{}`: {}", path, e.into_inner())
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemInput {
    #[serde(default)]
    pub summands: Option<Vec<Distribution<f64>>>,
    #[serde(default)]
    pub iid: Option<Distribution<f64>>,
    #[serde(default)]
    pub n: Option<usize>,
}

impl SystemInput {
    pub fn dists(&self) -> Result<Vec<Distribution<f64>>> {
        match (&self.summands, &self.iid, self.n) {
            (Some(s), None, None) if !s.is_empty() => Ok(s.clone()),
            (Some(_), None, None) => bail!("system.summands: at least one summand is required"),
            (None, Some(dist), Some(n)) if n >= 1 => Ok(vec![dist.clone(); n]),
            (None, Some(_), _) => bail!("system.n: a positive summand count is required with `iid`"),
            _ => bail!("system: give either `summands` or both `iid` and `n`"),
        }
    }
}

/// Builds a collection from exactly one of a standard kind or explicit sets.
pub fn build_collection(
    standard: &Option<StandardKind>,
    sets: &Option<Vec<Vec<usize>>>,
    n: usize,
    at: &str,
) -> Result<SubsetCollection> {
    let c = match (standard, sets) {
        (Some(kind), None) => SubsetCollection::standard(*kind, n),
        (None, Some(sets)) => SubsetCollection::new(n, sets.clone()),
        _ => bail!("{at}: give exactly one of `standard` or `sets`"),
    };
    c.with_context(|| at.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedCollection {
    pub name: String,
    #[serde(default)]
    pub standard: Option<StandardKind>,
    #[serde(default)]
    pub sets: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyInput {
    pub system: SystemInput,
    pub collections: Vec<NamedCollection>,
    /// Keyed by collection name.
    #[serde(default)]
    pub weights: BTreeMap<String, Vec<f64>>,
    /// Keyed by collection name.
    #[serde(default)]
    pub packings: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub monotone_on_average: bool,
    #[serde(default)]
    pub projection_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepInput {
    pub distribution: Distribution<f64>,
    #[serde(default)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CAdditiveInput {
    #[serde(default)]
    pub standard: Option<StandardKind>,
    #[serde(default)]
    pub sets: Option<Vec<Vec<usize>>>,
    pub components: Vec<Vec<f64>>,
    #[serde(default)]
    pub center: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnovaInput {
    pub space: ProductSpace<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub c_additive: Option<CAdditiveInput>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackInput {
    pub n: usize,
    #[serde(default)]
    pub standard: Option<StandardKind>,
    #[serde(default)]
    pub sets: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub objective: Option<Vec<f64>>,
    #[serde(default)]
    pub exact: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorePair {
    pub name: String,
    pub first: Distribution<f64>,
    pub second: Distribution<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreInput {
    pub pairs: Vec<ScorePair>,
}
