//! Run configuration: one TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use weylmean::catalog::{self, CatalogEntry, CatalogItem, SyntheticOracle};
use weylmean::classify::ClassifierConfig;
use weylmean::group::AmenableGroup;
use weylmean::pseudometric::EstimatorConfig;
use weylmean::rds::{BaseSpace, Fiber, RandomDynamicalSystem};
use weylmean::torus::{FiberMap, IntMatrix};

use crate::CliError;

/// Everything a run depends on. `output` and `workers` are excluded from the hash:
/// they change where results go and how fast, never what they are.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemRef>,
    pub seed: u64,
    pub estimator: EstimatorConfig,
    pub classifier: ClassifierParams,
    pub estimate: EstimateParams,
    pub density: DensityParams,
    #[serde(skip_serializing)]
    pub output: OutputParams,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

/// A catalog name or an inline system.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemRef {
    Name(String),
    Inline(InlineSystem),
}

/// Field-for-field mirror of [`RandomDynamicalSystem::new`] and [`BaseSpace::new`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSystem {
    pub group: String,
    pub dim: usize,
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
    /// One permutation of the base points per generator.
    pub permutations: Vec<Vec<usize>>,
    /// One per base point; all `Full` when omitted.
    #[serde(default)]
    pub fibers: Option<Vec<Fiber>>,
    /// `maps[generator][base point]`.
    pub maps: Vec<Vec<MapSpec>>,
    /// Stored `F_{e,w}`; identities when omitted.
    #[serde(default)]
    pub identity_maps: Option<Vec<MapSpec>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub matrix: Vec<Vec<i64>>,
    /// Zero when omitted.
    #[serde(default)]
    pub shift: Vec<f64>,
}

impl MapSpec {
    fn build(&self) -> weylmean::Result<FiberMap> {
        let matrix = IntMatrix::from_rows(&self.matrix)?;
        let shift = if self.shift.is_empty() { vec![0.0; matrix.dim()] } else { self.shift.clone() };
        FiberMap::new(matrix, shift)
    }
}

impl InlineSystem {
    /// Builds without validating; callers decide how to treat a failed validation.
    pub fn build(&self) -> weylmean::Result<RandomDynamicalSystem> {
        let group: AmenableGroup = self.group.parse()?;
        let base = BaseSpace::new(self.labels.clone(), self.weights.clone(), self.permutations.clone())?;
        let fibers = self.fibers.clone().unwrap_or_else(|| vec![Fiber::Full; base.len()]);
        let maps = self
            .maps
            .iter()
            .map(|row| row.iter().map(MapSpec::build).collect())
            .collect::<weylmean::Result<Vec<Vec<_>>>>()?;
        let system = RandomDynamicalSystem::new(group, base, self.dim, fibers, maps)?;
        match &self.identity_maps {
            Some(ids) => system.with_identity_maps(ids.iter().map(MapSpec::build).collect::<weylmean::Result<_>>()?),
            None => Ok(system),
        }
    }
}

/// Classifier budgets; estimator truncation and seed come from the top level.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    pub eps_list: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub pairs_per_cell: usize,
    pub delta0: f64,
    pub eps_sequence: Vec<f64>,
    pub sample_points: usize,
    pub tries: usize,
    pub region_pairs: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        let d = ClassifierConfig::default();
        Self {
            eps_list: d.eps_list,
            delta_grid: d.delta_grid,
            pairs_per_cell: d.pairs_per_cell,
            delta0: d.delta0,
            eps_sequence: d.eps_sequence,
            sample_points: d.sample_points,
            tries: d.tries,
            region_pairs: d.region_pairs,
        }
    }
}

impl ClassifierParams {
    pub fn to_config(&self, estimator: &EstimatorConfig, seed: u64) -> ClassifierConfig {
        ClassifierConfig {
            estimator: estimator.clone(),
            eps_list: self.eps_list.clone(),
            delta_grid: self.delta_grid.clone(),
            pairs_per_cell: self.pairs_per_cell,
            delta0: self.delta0,
            eps_sequence: self.eps_sequence.clone(),
            sample_points: self.sample_points,
            tries: self.tries,
            region_pairs: self.region_pairs,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Besicovitch,
    Banach,
    Weyl,
    /// Max over admissible fibers of the fiberwise Weyl estimate.
    FiberWeyl,
    Integral,
}

impl Kind {
    pub const FOR_SYSTEMS: [Kind; 5] = [Kind::Besicovitch, Kind::Banach, Kind::Weyl, Kind::FiberWeyl, Kind::Integral];
    pub const FOR_ORACLES: [Kind; 3] = [Kind::Besicovitch, Kind::Banach, Kind::Weyl];
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateParams {
    /// Each pair is `x` followed by `y`: `2 * dim` coordinates.
    pub pairs: Vec<Vec<f64>>,
    /// Empty selects every kind that applies to the target.
    pub kinds: Vec<Kind>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityParams {
    pub indicators: Vec<String>,
    /// Group for named indicators; `separation:` indicators use the system's group.
    pub group: String,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self { indicators: Vec::new(), group: "Z".into() }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputParams {
    pub dir: Option<PathBuf>,
    pub csv: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn system_label(&self) -> String {
        match &self.system {
            Some(SystemRef::Name(n)) => n.clone(),
            Some(SystemRef::Inline(s)) => format!("inline ({}, T^{})", s.group, s.dim),
            None => "-".into(),
        }
    }

    pub fn resolve(&self) -> Result<Target, CliError> {
        match &self.system {
            None => Err(CliError::Usage("no system given (use --system or `system` in the config)".into())),
            Some(SystemRef::Name(name)) => match catalog::by_name(name)? {
                CatalogItem::System(entry, rds) => Ok(Target::System { entry: Some(entry), rds }),
                CatalogItem::Synthetic(o) => Ok(Target::Synthetic(o)),
            },
            Some(SystemRef::Inline(s)) => Ok(Target::System { entry: None, rds: s.build()? }),
        }
    }
}

/// A resolved system reference. Inline systems are not yet validated.
pub enum Target {
    System { entry: Option<CatalogEntry>, rds: RandomDynamicalSystem },
    Synthetic(SyntheticOracle),
}

#[cfg(test)]
mod tests {
    use super::*;

    const INLINE: &str = r#"
seed = 3

[system]
group = "Z"
dim = 2
labels = ["w0", "w1"]
weights = [0.5, 0.5]
permutations = [[1, 0]]
maps = [[{ matrix = [[2, 1], [1, 1]] }, { matrix = [[1, 1], [1, 2]] }]]

[estimator]
n_max = 64
"#;

    #[test]
    fn inline_system_mirrors_catalog() {
        let cfg: RunConfig = toml::from_str(INLINE).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.estimator.n_max, 64);
        assert_eq!(cfg.estimator.m_max, 1024);
        let Target::System { rds, .. } = cfg.resolve().ok().unwrap() else { panic!() };
        assert!(rds.validate().passed());
        assert_eq!(rds, catalog::system("cat2").unwrap());
    }

    #[test]
    fn named_system_and_defaults() {
        let cfg: RunConfig = toml::from_str("system = \"rot2\"").unwrap();
        assert_eq!(cfg.system_label(), "rot2");
        assert_eq!(cfg.classifier.pairs_per_cell, 200);
        assert!(matches!(cfg.resolve(), Ok(Target::System { entry: Some(_), .. })));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 3").is_err());
        assert!(toml::from_str::<RunConfig>("[classifier]\neps = [0.1]").is_err());
    }

    #[test]
    fn hash_ignores_output_and_workers() {
        let a: RunConfig = toml::from_str("system = \"cat2\"").unwrap();
        let mut b = a.clone();
        b.workers = Some(3);
        b.output.csv = true;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
