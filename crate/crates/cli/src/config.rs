//! Run configuration: one TOML file with `[chains]`, `[experiment]` and
//! `[numerics]` sections.

use std::collections::HashSet;
use std::path::Path;

use gef_core::covariance::CovOptions;
use gef_core::field::DEFAULT_TAIL_TOL;
use gef_core::geometry::{parse_chain_file, ChainSpec, NamedChain};
use gef_core::harness::ExperimentConfig;
use gef_core::winding::IncrementOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub chains: ChainsSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub numerics: NumericsSection,
}

/// Chains from a JSON chain file (path relative to the config file), inline
/// `[[chains.chain]]` tables, or both.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainsSection {
    pub file: Option<String>,
    #[serde(default)]
    pub chain: Vec<ChainSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub seed: u64,
    #[serde(rename = "R_grid")]
    pub r_grid: Vec<f64>,
    pub replicates: usize,
    /// Chain id pairs for `signed-length` and `cov-quad`.
    pub pairs: Option<Vec<[String; 2]>>,
    pub theta_grid: Vec<f64>,
    pub draws: usize,
    pub truncation_orders: Vec<u32>,
    pub zero_radius: f64,
    pub points: Vec<[f64; 2]>,
    pub alphas: Vec<Vec<u32>>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: 0,
            r_grid: Vec::new(),
            replicates: 100,
            pairs: None,
            theta_grid: vec![0.0, 0.3, 0.8],
            draws: 1_000_000,
            truncation_orders: vec![1, 4, 16],
            zero_radius: 1.0,
            points: Vec::new(),
            alphas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    pub tail_tol: f64,
    pub increment: IncrementOptions,
    pub cov: CovOptions,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            tail_tol: DEFAULT_TAIL_TOL,
            increment: IncrementOptions::default(),
            cov: CovOptions::default(),
        }
    }
}

/// A parsed config with its chains resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: ConfigFile,
    pub chains: Vec<NamedChain>,
}

impl RunConfig {
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation("--config", format!("cannot read {}: {e}", path.display())))?;
        let mut file: ConfigFile = toml::from_str(&text).map_err(|e| {
            let field = match e.span() {
                Some(span) => format!("config line {}", text[..span.start].lines().count().max(1)),
                None => "config".to_string(),
            };
            CliError::validation(field, e.message().to_string())
        })?;
        if let Some(seed) = seed {
            file.experiment.seed = seed;
        }
        let mut chains = Vec::new();
        if let Some(rel) = &file.chains.file {
            let chain_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            let text = std::fs::read_to_string(&chain_path).map_err(|e| {
                CliError::validation("chains.file", format!("cannot read {}: {e}", chain_path.display()))
            })?;
            chains.extend(parse_chain_file(&text)?);
        }
        for spec in &file.chains.chain {
            chains.push(spec.build(|_| None)?);
        }
        let mut seen = HashSet::new();
        for c in &chains {
            if !seen.insert(c.id.as_str()) {
                return Err(CliError::validation("chains", format!("duplicate id '{}'", c.id)));
            }
        }
        Ok(Self { file, chains })
    }

    pub fn seed(&self) -> u64 {
        self.file.experiment.seed
    }

    pub fn exp(&self) -> &ExperimentSection {
        &self.file.experiment
    }

    pub fn num(&self) -> &NumericsSection {
        &self.file.numerics
    }

    pub fn require_chains(&self) -> Result<(), CliError> {
        if self.chains.is_empty() {
            return Err(CliError::validation("chains", "this subcommand needs at least one chain"));
        }
        Ok(())
    }

    pub fn r_grid(&self) -> Result<&[f64], CliError> {
        let grid = &self.exp().r_grid;
        if grid.is_empty() {
            return Err(CliError::validation("experiment.R_grid", "must list at least one radius"));
        }
        if let Some(r) = grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(CliError::validation("experiment.R_grid", format!("radii must be positive, got {r}")));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::validation("experiment.R_grid", "must be strictly increasing"));
        }
        Ok(grid)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        self.require_chains()?;
        let cfg = ExperimentConfig {
            chains: self.chains.clone(),
            r_grid: self.r_grid()?.to_vec(),
            replicates: self.exp().replicates,
            seed: self.seed(),
            increment_opts: self.num().increment,
            tail_tol: self.num().tail_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn chain(&self, id: &str) -> Result<&NamedChain, CliError> {
        self.chains
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| CliError::validation("experiment.pairs", format!("unknown chain id '{id}'")))
    }

    /// Configured pairs, or every unordered pair (`with_self` adds the
    /// diagonal). A single chain is paired with itself.
    pub fn pairs(&self, with_self: bool) -> Result<Vec<(&NamedChain, &NamedChain)>, CliError> {
        self.require_chains()?;
        if let Some(pairs) = &self.exp().pairs {
            return pairs.iter().map(|[a, b]| Ok((self.chain(a)?, self.chain(b)?))).collect();
        }
        let n = self.chains.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                if i != j || with_self || n == 1 {
                    out.push((&self.chains[i], &self.chains[j]));
                }
            }
        }
        Ok(out)
    }
}
