//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 20240601                 # mandatory unless --seed is given
//! strict_hypotheses = false
//! rho = [0.0, 0.25, 0.5, 0.75, 1.0]
//! alpha = 0.25
//! n_grid = [1, 2, 3, 4, 5, 6]     # exact-engine grid (exact-tv, entropy)
//! samples = 10000                 # default Monte Carlo sample count
//!
//! [group]
//! kind = "free"                   # or "presentation"
//! rank = 2
//!
//! [measure]
//! uniform_generators = true       # or atoms = [{ word = "a", p = 0.25 }, ...]
//!
//! [homomorphism]
//! weights = [1.0, 0.0]
//! ```
//!
//! Subcommand tables (`[speed]`, `[exact_tv]`, `[limit_laws]`,
//! `[separation]`, `[entropy]`) are optional; see the field defaults below.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use noisewalk::{Hom, MarkedGroup, Measure};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Marks failures that map to the config-parse exit code.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub seed: Option<u64>,
    #[serde(default)]
    pub strict_hypotheses: bool,
    pub group: GroupConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    pub homomorphism: Option<HomConfig>,
    #[serde(default = "default_rho")]
    pub rho: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub speed: SpeedConfig,
    #[serde(default)]
    pub exact_tv: ExactTvConfig,
    #[serde(default)]
    pub limit_laws: LimitLawsConfig,
    #[serde(default)]
    pub separation: SeparationConfig,
    #[serde(default)]
    pub entropy: EntropyConfig,
}

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}
fn default_rho() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
fn default_alpha() -> f64 {
    0.25
}
fn default_n_grid() -> Vec<usize> {
    (1..=6).collect()
}
fn default_samples() -> usize {
    10_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupConfig {
    Free {
        rank: Option<usize>,
        generators: Option<Vec<String>>,
    },
    Presentation {
        generators: Vec<String>,
        relators: Vec<String>,
        radius: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default)]
    pub uniform_generators: bool,
    pub atoms: Option<Vec<AtomConfig>>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            uniform_generators: true,
            atoms: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub word: String,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomConfig {
    pub weights: Vec<f64>,
}

/// Escape-rate run that supplies `λ̂` to every command.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedConfig {
    pub n: usize,
    pub trajectories: usize,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            trajectories: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactTvConfig {
    /// Overrides the top-level `n_grid`.
    pub n_grid: Option<Vec<usize>>,
    /// Overrides the top-level `rho`.
    pub rho: Option<Vec<f64>>,
    pub s_grid: Vec<f64>,
    /// `𝒰^s` cells are left empty for `n` above this.
    pub u_max_n: usize,
    pub table_cap: u64,
    pub edge_cap: u64,
}

impl Default for ExactTvConfig {
    fn default() -> Self {
        Self {
            n_grid: None,
            rho: None,
            s_grid: vec![0.0, 1.0, 2.0],
            u_max_n: 4,
            table_cap: 50_000_000,
            edge_cap: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitLawsConfig {
    /// Ray guard `ε`: only times up to `(1−ε)λ̂N` are read off `w_N`.
    pub guard: f64,
    pub clt_n: Vec<usize>,
    pub clt_trajectories: usize,
    pub lil_window: [usize; 2],
    pub lil_trajectories: usize,
    pub marginal_n: Vec<usize>,
    pub marginal_trajectories: usize,
    pub ellipse_t: usize,
    pub ellipse_pairs: usize,
    pub ellipse_rho: Vec<f64>,
    pub svg: bool,
    /// Largest walk length any section may request.
    pub max_horizon: usize,
}

impl Default for LimitLawsConfig {
    fn default() -> Self {
        Self {
            guard: noisewalk::stats::DEFAULT_GUARD,
            clt_n: vec![1024, 4096],
            clt_trajectories: 10_000,
            lil_window: [64, 65_536],
            lil_trajectories: 200,
            marginal_n: vec![256, 1024, 4096, 16_384],
            marginal_trajectories: 500,
            ellipse_t: 2048,
            ellipse_pairs: 10_000,
            ellipse_rho: vec![0.0, 0.5, 1.0],
            svg: true,
            max_horizon: 1 << 20,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeparationConfig {
    /// `(ρ, ρ′)` pairs.
    pub rho_pairs: Vec<[f64; 2]>,
    /// Overrides the top-level `alpha`.
    pub alpha: Option<f64>,
    pub n_grid: Vec<usize>,
    pub scales: usize,
    /// Overrides the top-level `samples`.
    pub samples: Option<usize>,
    pub delta: f64,
    /// Step counts for the cross-check against exact `𝒰^{αn}`.
    pub exact_n: Vec<usize>,
    pub exact_samples: usize,
    pub table_cap: u64,
    pub edge_cap: u64,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self {
            rho_pairs: vec![[0.0, 1.0]],
            alpha: None,
            n_grid: vec![1024, 4096, 16_384],
            scales: 8,
            samples: None,
            delta: 0.05,
            exact_n: vec![1, 2, 3, 4],
            exact_samples: 2000,
            table_cap: 50_000_000,
            edge_cap: 20_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropyConfig {
    pub method: EntropyMode,
    /// Overrides the top-level `n_grid`.
    pub n_grid: Option<Vec<usize>>,
    /// Overrides the top-level `rho`.
    pub rho: Option<Vec<f64>>,
    /// Overrides the top-level `samples` (sampled method).
    pub samples: Option<usize>,
    pub table_cap: u64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            method: EntropyMode::Exact,
            n_grid: None,
            rho: None,
            samples: None,
            table_cap: 50_000_000,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(|e| config_err(format!("{e:#}")))?;
        Self::parse(&text, seed_override)
    }

    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if seed_override.is_some() {
            cfg.seed = seed_override;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The master seed; presence is checked by [`ExperimentConfig::parse`].
    pub fn master_seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.seed.is_none() {
            return Err(config_err("`seed` is mandatory (set it in the config or pass --seed)"));
        }
        check_rhos("rho", &self.rho)?;
        check_rhos("exact_tv.rho", self.exact_tv.rho.as_deref().unwrap_or(&[]))?;
        check_rhos("entropy.rho", self.entropy.rho.as_deref().unwrap_or(&[]))?;
        check_rhos("limit_laws.ellipse_rho", &self.limit_laws.ellipse_rho)?;
        for (i, pair) in self.separation.rho_pairs.iter().enumerate() {
            check_rhos(&format!("separation.rho_pairs[{i}]"), pair)?;
        }
        check_grid("n_grid", &self.n_grid)?;
        if let Some(g) = &self.exact_tv.n_grid {
            check_grid("exact_tv.n_grid", g)?;
        }
        if let Some(g) = &self.entropy.n_grid {
            check_grid("entropy.n_grid", g)?;
        }
        check_grid("limit_laws.clt_n", &self.limit_laws.clt_n)?;
        check_grid("limit_laws.marginal_n", &self.limit_laws.marginal_n)?;
        check_grid("separation.n_grid", &self.separation.n_grid)?;
        check_grid("separation.exact_n", &self.separation.exact_n)?;
        for (name, a) in [("alpha", Some(self.alpha)), ("separation.alpha", self.separation.alpha)] {
            if let Some(a) = a {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(config_err(format!("{name} = {a} must be finite and ≥ 0")));
                }
            }
        }
        if !(0.0..1.0).contains(&self.limit_laws.guard) {
            return Err(config_err("limit_laws.guard must lie in [0, 1)"));
        }
        if !(self.separation.delta > 0.0 && self.separation.delta < 1.0) {
            return Err(config_err("separation.delta must lie in (0, 1)"));
        }
        if self.exact_tv.s_grid.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(config_err("exact_tv.s_grid entries must be finite and ≥ 0"));
        }
        let [n0, n1] = self.limit_laws.lil_window;
        if n0 < 3 || n0 > n1 {
            return Err(config_err(format!(
                "limit_laws.lil_window [{n0}, {n1}] needs 3 ≤ n0 ≤ n1"
            )));
        }
        if self.speed.n < 100 || self.speed.trajectories < 10 {
            return Err(config_err("speed needs n ≥ 100 and trajectories ≥ 10"));
        }
        if self.samples == 0 {
            return Err(config_err("samples must be positive"));
        }
        let m = &self.measure;
        if m.uniform_generators == m.atoms.is_some() {
            return Err(config_err(
                "[measure] needs exactly one of `uniform_generators = true` or `atoms`",
            ));
        }
        Ok(())
    }

    pub fn build_group(&self) -> Result<MarkedGroup> {
        let group = match &self.group {
            GroupConfig::Free { rank, generators } => match (rank, generators) {
                (_, Some(names)) => {
                    if rank.is_some_and(|r| r != names.len()) {
                        return Err(config_err("group.rank disagrees with group.generators"));
                    }
                    MarkedGroup::free_with_names(names.clone())
                }
                (Some(r), None) => MarkedGroup::free(*r),
                (None, None) => return Err(config_err("free group needs `rank` or `generators`")),
            },
            GroupConfig::Presentation {
                generators,
                relators,
                radius,
            } => {
                let rels: Vec<&str> = relators.iter().map(String::as_str).collect();
                MarkedGroup::presentation(generators.clone(), &rels, *radius)
            }
        };
        group.map_err(|e| config_err(e.to_string()))
    }

    pub fn build_measure(&self, group: &MarkedGroup) -> Result<Measure> {
        let mu = match &self.measure.atoms {
            None => Measure::uniform_generators(group),
            Some(atoms) => {
                let parsed = atoms
                    .iter()
                    .map(|a| Ok((group.parse_word(&a.word)?, a.p)))
                    .collect::<noisewalk::Result<Vec<_>>>()
                    .map_err(|e| config_err(e.to_string()))?;
                Measure::new(parsed).map_err(|e| config_err(e.to_string()))?
            }
        };
        mu.check_in(group).map_err(|e| config_err(e.to_string()))?;
        Ok(mu)
    }

    /// Configured weights, or the exponent sum of the first generator.
    pub fn build_hom(&self, group: &MarkedGroup) -> Result<Hom> {
        let hom = match &self.homomorphism {
            Some(h) => Hom::new(group, h.weights.clone()),
            None => Hom::exponent_sum(group, 0),
        };
        hom.map_err(|e| config_err(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form of the effective config.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn check_rhos(name: &str, rhos: &[f64]) -> Result<()> {
    match rhos.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        Some(r) => Err(config_err(format!("{name}: ρ = {r} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn check_grid(name: &str, grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(config_err(format!("{name} is empty")));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(config_err(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "seed = 7\n[group]\nkind = \"free\"\nrank = 2\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL, None).unwrap();
        assert_eq!(cfg.master_seed(), 7);
        assert_eq!(cfg.n_grid, vec![1, 2, 3, 4, 5, 6]);
        assert!(cfg.measure.uniform_generators);
        let g = cfg.build_group().unwrap();
        assert_eq!(cfg.build_measure(&g).unwrap().support_len(), 4);
        assert_eq!(cfg.build_hom(&g).unwrap().weights(), &[1.0, 0.0]);
    }

    #[test]
    fn seed_is_mandatory_and_overridable() {
        let text = "[group]\nkind = \"free\"\nrank = 2\n";
        let err = ExperimentConfig::parse(text, None).unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
        assert_eq!(ExperimentConfig::parse(text, Some(3)).unwrap().master_seed(), 3);
        assert_eq!(ExperimentConfig::parse(MINIMAL, Some(3)).unwrap().master_seed(), 3);
    }

    #[test]
    fn rejects_bad_values() {
        for extra in [
            "rho = [0.5, 1.5]\n",
            "n_grid = [1, 3, 2]\n",
            "n_grid = [2, 2]\n",
            "alpha = -1.0\n",
            "unknown_key = 1\n",
            "schema_version = 9\n",
        ] {
            let text = format!("{extra}{MINIMAL}");
            let err = ExperimentConfig::parse(&text, None).unwrap_err();
            assert!(err.downcast_ref::<ConfigError>().is_some(), "{extra}: {err}");
        }
    }

    #[test]
    fn atoms_and_presentations() {
        let text = "seed = 1\n[group]\nkind = \"free\"\ngenerators = [\"x\", \"y\"]\n\
                    [measure]\natoms = [{ word = \"x\", p = 0.5 }, { word = \"x'\", p = 0.5 }]\n";
        let cfg = ExperimentConfig::parse(text, None).unwrap();
        let g = cfg.build_group().unwrap();
        assert_eq!(cfg.build_measure(&g).unwrap().support_len(), 2);

        let bad = text.replace("p = 0.5 }]", "p = 0.4 }]");
        let cfg = ExperimentConfig::parse(&bad, None).unwrap();
        assert!(cfg
            .build_measure(&g)
            .unwrap_err()
            .downcast_ref::<ConfigError>()
            .is_some());

        let surface = "seed = 1\n[group]\nkind = \"presentation\"\ngenerators = [\"a\", \"b\", \"c\", \"d\"]\n\
                       relators = [\"a b a' b' c d c' d'\"]\nradius = 3\n";
        let cfg = ExperimentConfig::parse(surface, None).unwrap();
        assert!(!cfg.build_group().unwrap().is_free());
    }

    #[test]
    fn hash_tracks_effective_config() {
        let a = ExperimentConfig::parse(MINIMAL, None).unwrap();
        let b = ExperimentConfig::parse(MINIMAL, Some(8)).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), ExperimentConfig::parse(MINIMAL, None).unwrap().hash());
        assert_eq!(a.hash().len(), 64);
    }
}
