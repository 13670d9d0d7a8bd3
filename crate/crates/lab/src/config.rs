//! Experiment configuration: one TOML file, dotted-path overrides, and a
//! content hash carried by every artifact.

use std::path::Path;
use std::sync::Arc;

use gamehomog_core::env::{Bounds, EnvSpec, Kernel};
use gamehomog_core::game::{localize, GameHamiltonian, MomentumProfile, SeparableHamiltonian};
use gamehomog_core::homog::Discretization;
use gamehomog_core::pde::{InitialDatum, Scheme, SolveConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentBlock,
    pub hamiltonian: HamiltonianBlock,
    pub solver: SolverBlock,
    pub campaign: CampaignBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// The environment family. Channels follow the Hamiltonian; campaign solves
/// size their own boxes, `bounds` is used by `sample-env` and `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentBlock {
    pub dim: usize,
    pub range: f64,
    pub radius: f64,
    pub amplitude: [f64; 2],
    #[serde(default = "bump")]
    pub kernel: Kernel,
    #[serde(default)]
    pub seed: u64,
    pub bounds: Bounds,
}

fn bump() -> Kernel {
    Kernel::Bump
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianBlock {
    Transport {
        velocity: Vec<f64>,
    },
    Constant {
        velocity: Vec<f64>,
        cost: f64,
    },
    TwoSpeedControl {
        direction: Vec<f64>,
        speeds: [f64; 2],
        offsets: [f64; 2],
    },
    SaddleGame {
        drift: Vec<f64>,
        spread_a: Vec<f64>,
        spread_b: Vec<f64>,
        coupling: f64,
    },
    /// `G(x, p) = G0(p) + potential V(x)` localized on `|p| <= radius`.
    Localized {
        profile: MomentumProfile,
        potential: f64,
        beta: f64,
        radius: f64,
        v: Vec<f64>,
        pi: [[f64; 2]; 2],
        n_a: usize,
        n_b: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub scheme: Scheme,
    /// Unit-scale steps; campaign solves at scale `eps` use `dt eps`, `dx eps`.
    pub dt: f64,
    pub dx: f64,
    /// Horizon and reporting box of the single `solve` run.
    pub horizon: f64,
    pub report: Bounds,
    #[serde(default = "unit")]
    pub eps: f64,
    #[serde(default = "zero_datum")]
    pub datum: InitialDatum,
    #[serde(default)]
    pub substeps: Option<usize>,
}

fn unit() -> f64 {
    1.0
}

fn zero_datum() -> InitialDatum {
    InitialDatum::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignBlock {
    pub theta: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub samples: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Worker threads; never changes a result.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "unit")]
    pub rate_radius: f64,
    #[serde(default = "unit")]
    pub rate_horizon: f64,
    /// Samples per seed bank in the rate campaign; defaults to `samples`.
    #[serde(default)]
    pub rate_samples: Option<usize>,
    /// Effective Hamiltonian at `theta[0]` for the rate campaign; extracted when absent.
    #[serde(default)]
    pub h_bar: Option<f64>,
    #[serde(default = "default_m_grid")]
    pub m_grid: Vec<f64>,
}

fn default_eps() -> Vec<f64> {
    vec![0.25, 0.125, 0.0625, 0.03125]
}

fn default_m_grid() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> String {
    "out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

fn invalid(path: &str, reason: impl Into<String>) -> LabError {
    LabError::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Set `path` (dotted) in a TOML document to `raw`, read as a TOML value when
/// it parses as one and as a string otherwise.
pub fn apply_override(doc: &mut toml::Table, path: &str, raw: &str) -> Result<(), LabError> {
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.into()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(invalid(path, "empty path segment"));
    }
    let mut table = doc;
    for (i, key) in keys.iter().enumerate() {
        if i + 1 == keys.len() {
            table.insert((*key).into(), value);
            return Ok(());
        }
        let next = table
            .entry(*key)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match next {
            toml::Value::Table(t) => t,
            _ => return Err(invalid(path, format!("`{}` is not a table", keys[..=i].join(".")))),
        };
    }
    unreachable!()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[(String, String)]) -> Result<Self, LabError> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| invalid("<file>", e.message()))?;
        for (path, raw) in overrides {
            apply_override(&mut doc, path, raw)?;
        }
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self, LabError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON of everything that affects results,
    /// i.e. the config without the worker count and output block.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.campaign.workers = None;
        c.output = OutputBlock::default();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let d = self.environment.dim;
        self.family().validate().map_err(core_path)?;
        let gh = self.game()?;
        if gh.dim() != d {
            return Err(invalid(
                "hamiltonian",
                format!("dimension {} differs from environment.dim {d}", gh.dim()),
            ));
        }
        let s = &self.solver;
        if !(s.dt > 0.0) {
            return Err(invalid("solver.dt", "must be positive"));
        }
        if !(s.dx > 0.0) {
            return Err(invalid("solver.dx", "must be positive"));
        }
        self.solve_config().validate().map_err(core_path)?;
        let c = &self.campaign;
        if c.theta.is_empty() || c.theta.iter().any(|t| t.len() != d) {
            return Err(invalid(
                "campaign.theta",
                format!("need at least one momentum of dimension {d}"),
            ));
        }
        if c.times.is_empty() || c.times[0] <= 0.0 || c.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("campaign.times", "times must be positive and increasing"));
        }
        if c.samples == 0 {
            return Err(invalid("campaign.samples", "must be at least 1"));
        }
        if c.workers == Some(0) {
            return Err(invalid("campaign.workers", "must be at least 1"));
        }
        if c.eps.iter().any(|&e| !(e > 0.0 && e <= 0.5)) {
            return Err(invalid("campaign.eps", "values must lie in (0, 1/2]"));
        }
        if !(c.rate_radius >= 0.0) || !(c.rate_horizon > 0.0) {
            return Err(invalid(
                "campaign.rate_radius",
                "need rate_radius >= 0 and rate_horizon > 0",
            ));
        }
        if c.rate_samples == Some(0) {
            return Err(invalid("campaign.rate_samples", "must be at least 1"));
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "at least one format"));
        }
        Ok(())
    }

    pub fn game(&self) -> Result<GameHamiltonian, LabError> {
        let gh = match &self.hamiltonian {
            HamiltonianBlock::Transport { velocity } => GameHamiltonian::transport(velocity),
            HamiltonianBlock::Constant { velocity, cost } => GameHamiltonian::constant_cost(velocity, *cost),
            HamiltonianBlock::TwoSpeedControl {
                direction,
                speeds,
                offsets,
            } => GameHamiltonian::two_speed_control(direction, *speeds, *offsets),
            HamiltonianBlock::SaddleGame {
                drift,
                spread_a,
                spread_b,
                coupling,
            } => GameHamiltonian::saddle_game(drift, spread_a, spread_b, *coupling),
            HamiltonianBlock::Localized {
                profile,
                potential,
                beta,
                radius,
                v,
                pi,
                n_a,
                n_b,
            } => {
                let g = Arc::new(SeparableHamiltonian {
                    dim: self.environment.dim,
                    profile: profile.clone(),
                    potential: *potential,
                });
                localize(g, *beta, *radius, v, pi, *n_a, *n_b)
            }
        };
        gh.map_err(core_path)
    }

    /// The environment family with the channel layout the game needs.
    pub fn family(&self) -> EnvSpec {
        let e = &self.environment;
        let channels = match self.game() {
            Ok(gh) => gh.channel_layout(),
            Err(_) => gamehomog_core::env::ChannelLayout::Shared,
        };
        EnvSpec {
            dim: e.dim,
            range: e.range,
            radius: e.radius,
            amplitude: e.amplitude,
            channels,
            bounds: e.bounds.clone(),
            seed: e.seed,
            kernel: e.kernel,
        }
    }

    pub fn solve_config(&self) -> SolveConfig {
        let s = &self.solver;
        let mut cfg = SolveConfig::new(s.scheme, s.dt, s.dx, s.horizon, s.report.clone())
            .with_eps(s.eps)
            .with_datum(s.datum.clone());
        cfg.substeps = s.substeps;
        cfg
    }

    pub fn discretization(&self) -> Discretization {
        Discretization {
            scheme: self.solver.scheme,
            dt: self.solver.dt,
            dx: self.solver.dx,
        }
    }
}

/// Map a core parameter error onto a config path.
fn core_path(e: gamehomog_core::Error) -> LabError {
    match e {
        gamehomog_core::Error::InvalidParameter { field, reason } => invalid(field, reason),
        other => invalid("hamiltonian", other.to_string()),
    }
}
