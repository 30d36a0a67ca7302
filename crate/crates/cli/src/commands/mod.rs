//! Subcommands. Each writes its files into an [`OutputDir`] and returns the
//! command-specific part of `summary.json`.

pub mod entropy;
pub mod exact_tv;
pub mod limit_laws;
pub mod separation;

use std::fmt;

use anyhow::Result;
use noisewalk::measures::{derive_master_seed, validate_measure, MeasureReport};
use noisewalk::stats::{estimate_speed, CenteredHom, SpeedEstimate};
use noisewalk::{Hom, MarkedGroup, Measure};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{Snapshot, SCHEMA_VERSION};

/// Seed families: section `f` draws from `derive_master_seed(seed, f)`.
pub const SPEED_FAMILY: u64 = 1;
pub const CLT_FAMILY: u64 = 2;
pub const LIL_FAMILY: u64 = 3;
pub const MARGINAL_FAMILY: u64 = 4;
pub const ELLIPSE_FAMILY: u64 = 5;
pub const SEPARATION_FAMILY: u64 = 6;
pub const SEPARATION_EXACT_FAMILY: u64 = 7;
pub const ENTROPY_FAMILY: u64 = 8;

pub fn family_seed(master: u64, family: u64, sub: u64) -> u64 {
    derive_master_seed(derive_master_seed(master, family), sub)
}

/// Marks failures that map to the resource-cap exit code.
#[derive(Debug)]
pub struct CapError(pub String);

impl fmt::Display for CapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "resource cap: {}", self.0)
    }
}

impl std::error::Error for CapError {}

/// Parsed config plus everything every command needs.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub group: MarkedGroup,
    pub mu: Measure,
    pub phi: Hom,
    /// The centering check; the error is kept as the skip reason.
    pub centered: std::result::Result<CenteredHom, String>,
    pub report: MeasureReport,
    pub speed: SpeedEstimate,
    pub strict: bool,
    pub warnings: Vec<String>,
    pub snapshot: Snapshot,
}

impl Experiment {
    pub fn setup(config: ExperimentConfig, strict_flag: bool) -> Result<Self> {
        let group = config.build_group()?;
        let mu = config.build_measure(&group)?;
        let phi = config.build_hom(&group)?;
        let strict = strict_flag || config.strict_hypotheses;

        let report = validate_measure(&group, &mu);
        let mut warnings = Vec::new();
        if !report.satisfies_hypotheses() {
            let msg = format!("measure fails the standing hypotheses: {}", report.warnings.join("; "));
            if strict {
                return Err(noisewalk::Error::HypothesisViolation(msg).into());
            }
            warnings.push(msg);
        } else {
            warnings.extend(report.warnings.iter().cloned());
        }

        let (mean_phi, var_phi) = mu.pushforward_moments(&phi);
        let centered = CenteredHom::new(&mu, phi.clone()).map_err(|e| e.to_string());
        if let Err(reason) = &centered {
            warnings.push(format!("{reason}; φ-dependent limit-law sections are skipped"));
        }

        let seed = config.master_seed();
        let speed = estimate_speed(
            &group,
            &mu,
            config.speed.n,
            config.speed.trajectories,
            derive_master_seed(seed, SPEED_FAMILY),
        )?;
        let snapshot = Snapshot {
            lambda_hat: speed.lambda,
            lambda_half_width: speed.half_width,
            lambda_sd: speed.sd,
            mean_phi,
            var_phi,
        };
        Ok(Self {
            config,
            group,
            mu,
            phi,
            centered,
            report,
            speed,
            strict,
            warnings,
            snapshot,
        })
    }

    pub fn seed(&self) -> u64 {
        self.config.master_seed()
    }

    pub fn lambda_hat(&self) -> f64 {
        self.speed.lambda
    }

    /// Full `summary.json` body around a command's results.
    pub fn summary<R: Serialize>(&self, command: &str, results: R) -> Summary<'_, R> {
        Summary {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            master_seed: self.seed(),
            config: &self.config,
            snapshot: &self.snapshot,
            speed: &self.speed,
            hypotheses: &self.report,
            warnings: &self.warnings,
            results,
        }
    }
}

#[derive(Serialize)]
pub struct Summary<'a, R> {
    pub schema_version: u32,
    pub command: String,
    pub master_seed: u64,
    pub config: &'a ExperimentConfig,
    pub snapshot: &'a Snapshot,
    pub speed: &'a SpeedEstimate,
    pub hypotheses: &'a MeasureReport,
    pub warnings: &'a [String],
    pub results: R,
}
