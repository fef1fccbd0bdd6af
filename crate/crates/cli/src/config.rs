//! Run configuration: TOML in, validated [`RunConfig`] out.
//!
//! Every field has a default, so an empty file (or no `--config` at all)
//! is a valid desk-scale run. Unknown fields are rejected, and the TOML
//! parser reports them with line/column positions. Command-line flags
//! override individual fields after the file is loaded.

use std::fmt;
use std::path::{Path, PathBuf};

use quench_core::disorder::GH_GRID_CAP_DEFAULT;
use quench_core::engine::ENUMERATION_CAP_DEFAULT;
use quench_core::interp::{AveragingChoice, EngineChoice, McTemplate, Methods};
use quench_core::lattice::LatticeSpec;
use quench_core::surface::BoundaryCondition;
use serde::{Deserialize, Serialize};

/// A configuration problem, tagged with the field path it concerns so the
/// operator can jump straight to the offending line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted field path (`averaging.nodes`) or `<file>` for parse errors.
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// `beta = 0.5` and `beta = [0.1, 0.2]` are both accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl BetaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            BetaSpec::One(b) => vec![*b],
            BetaSpec::Many(list) => list.clone(),
        }
    }
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec::One(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    /// Side lengths of the base block Λ; the list length is the dimension.
    /// Default: [3] (the largest study that exact quadrature finishes in
    /// seconds; larger lattices usually want `averaging.kind = "mc"`).
    pub sides: Vec<usize>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { sides: vec![3] }
    }
}

/// Spin-engine selector. `auto` uses ring closed forms in 1D, full
/// enumeration within the site cap, and tempered Monte Carlo beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineConfig {
    Auto,
    Enumerate,
    Chain,
    Mc,
}

impl From<EngineConfig> for EngineChoice {
    fn from(value: EngineConfig) -> Self {
        match value {
            EngineConfig::Auto => EngineChoice::Auto,
            EngineConfig::Enumerate => EngineChoice::Enumerate,
            EngineConfig::Chain => EngineChoice::Chain,
            EngineConfig::Mc => EngineChoice::Mc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingKind {
    GaussHermite,
    Mc,
}

/// How the disorder average is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AveragingConfig {
    /// `gauss_hermite` (exact tensor quadrature, small bond counts only)
    /// or `mc` (seeded sampling). Default: gauss_hermite.
    pub kind: AveragingKind,
    /// Gauss-Hermite nodes per bond. Default: 6.
    pub nodes: usize,
    /// Disorder samples for `mc`. Default: 200.
    pub samples: usize,
    /// Disorder stream seed for `mc`. Default: 42.
    pub seed: u64,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            kind: AveragingKind::GaussHermite,
            nodes: 6,
            samples: 200,
            seed: 42,
        }
    }
}

/// Parallel-tempering knobs (used when the spin engine is sampled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    /// Measured sweeps per chain. Default: 3000.
    pub sweeps: usize,
    /// Discarded equilibration sweeps. Default: 800.
    pub burn_in: usize,
    /// Keep one measurement every `thin` sweeps. Default: 2.
    pub thin: usize,
    /// Rungs of the geometric β ladder. Default: 12.
    pub rungs: usize,
    /// Ratio between the target β and the hottest rung. Default: 8.0.
    pub span: f64,
    /// Sweeps between replica-exchange attempts. Default: 5.
    pub swap_interval: usize,
    /// Base seed for the tempered chains. Default: 0x51ab90be6cdd1a42.
    pub chain_seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        let t = McTemplate::default();
        Self {
            sweeps: t.sweeps,
            burn_in: t.burn_in,
            thin: t.thin,
            rungs: t.rungs,
            span: t.span,
            swap_interval: t.swap_interval,
            chain_seed: t.chain_seed,
        }
    }
}

/// Resource caps; runs that would exceed them refuse cleanly instead of
/// degrading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsConfig {
    /// Gauss-Hermite nodes on designated (corridor/cut) bonds; interior
    /// bonds keep `averaging.nodes`. Default: 64.
    pub gh_boost: usize,
    /// Maximum tensor-grid points. Default: 10_000_000.
    pub gh_cap: u64,
    /// Maximum sites for full spin enumeration. Default: 22.
    pub enum_cap: usize,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        Self {
            gh_boost: 64,
            gh_cap: u64::try_from(GH_GRID_CAP_DEFAULT).unwrap_or(u64::MAX),
            enum_cap: ENUMERATION_CAP_DEFAULT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory for JSON/CSV reports. Default: "out".
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// The full run configuration. Defaults give the 1D three-site study at
/// β = 1, k = 2, with exact Gauss-Hermite averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    /// Magnification factor for the corridor construction. Default: 2.
    pub k: usize,
    /// One β or a list (scan order). Default: 1.0.
    pub beta: BetaSpec,
    /// Boundary condition for the `pressure` command. Default: periodic.
    pub bc: BoundaryCondition,
    /// Spin-engine selector. Default: auto.
    pub engine: EngineConfig,
    /// Gauss-Legendre order for t-integration. Default: 16.
    pub gl_order: usize,
    pub averaging: AveragingConfig,
    pub mc: McConfig,
    pub limits: LimitsConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::default(),
            k: 2,
            beta: BetaSpec::default(),
            bc: BoundaryCondition::Periodic,
            engine: EngineConfig::Auto,
            gl_order: 16,
            averaging: AveragingConfig::default(),
            mc: McConfig::default(),
            limits: LimitsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Command-line overrides applied on top of the loaded file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub gh_nodes: Option<usize>,
    pub gl_order: Option<usize>,
    pub k: Option<usize>,
    pub beta: Option<Vec<f64>>,
    pub bc: Option<BoundaryCondition>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new("<config>", e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("<config>", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text).map_err(|mut e| {
            e.message = format!("{}: {}", path.display(), e.message);
            e
        })
    }

    /// Apply flag overrides. `--samples` switches averaging to `mc`,
    /// `--gh-nodes` to `gauss_hermite`; supplying both is contradictory.
    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), ConfigError> {
        if overrides.samples.is_some() && overrides.gh_nodes.is_some() {
            return Err(ConfigError::new(
                "averaging.kind",
                "--samples selects mc averaging and --gh-nodes selects gauss_hermite; pass one",
            ));
        }
        if let Some(samples) = overrides.samples {
            self.averaging.kind = AveragingKind::Mc;
            self.averaging.samples = samples;
        }
        if let Some(nodes) = overrides.gh_nodes {
            self.averaging.kind = AveragingKind::GaussHermite;
            self.averaging.nodes = nodes;
        }
        if let Some(seed) = overrides.seed {
            self.averaging.seed = seed;
        }
        if let Some(gl) = overrides.gl_order {
            self.gl_order = gl;
        }
        if let Some(k) = overrides.k {
            self.k = k;
        }
        if let Some(betas) = &overrides.beta {
            self.beta = BetaSpec::Many(betas.clone());
        }
        if let Some(bc) = overrides.bc {
            self.bc = bc;
        }
        if let Some(out) = &overrides.out {
            self.output.dir = out.clone();
        }
        Ok(())
    }

    /// Cross-field consistency; field paths in every message.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.lattice.sides.is_empty() {
            return Err(ConfigError::new("lattice.sides", "needs at least one side"));
        }
        for (i, &side) in self.lattice.sides.iter().enumerate() {
            if side < 2 {
                return Err(ConfigError::new(
                    "lattice.sides",
                    format!("side {i} is {side}; every side must be at least 2"),
                ));
            }
        }
        if self.k == 0 {
            return Err(ConfigError::new("k", "magnification must be at least 1"));
        }
        if self.gl_order < 2 {
            return Err(ConfigError::new(
                "gl_order",
                "t-integration needs at least 2 Gauss-Legendre nodes",
            ));
        }
        let betas = self.beta.values();
        if betas.is_empty() {
            return Err(ConfigError::new("beta", "needs at least one value"));
        }
        for &b in &betas {
            if !(b.is_finite() && b >= 0.0) {
                return Err(ConfigError::new(
                    "beta",
                    format!("{b} is not a finite nonnegative inverse temperature"),
                ));
            }
        }
        if self.averaging.nodes < 2 {
            return Err(ConfigError::new(
                "averaging.nodes",
                "Gauss-Hermite needs at least 2 nodes per bond",
            ));
        }
        if self.averaging.samples == 0 {
            return Err(ConfigError::new(
                "averaging.samples",
                "disorder sampling needs at least 1 sample",
            ));
        }
        if self.engine == EngineConfig::Chain && self.lattice.sides.len() != 1 {
            return Err(ConfigError::new(
                "engine",
                "`chain` uses the 1D ring closed form; this lattice is not one-dimensional",
            ));
        }
        if self.limits.gh_boost < 2 {
            return Err(ConfigError::new(
                "limits.gh_boost",
                "designated-bond boost needs at least 2 nodes",
            ));
        }
        if self.mc.sweeps == 0 || self.mc.thin == 0 || self.mc.rungs == 0 {
            return Err(ConfigError::new(
                "mc",
                "sweeps, thin and rungs must all be positive",
            ));
        }
        if !(self.mc.span.is_finite() && self.mc.span >= 1.0) {
            return Err(ConfigError::new(
                "mc.span",
                "ladder span must be a finite ratio ≥ 1",
            ));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<LatticeSpec, ConfigError> {
        LatticeSpec::new(self.lattice.sides.clone())
            .map_err(|e| ConfigError::new("lattice.sides", e.to_string()))
    }

    pub fn betas(&self) -> Vec<f64> {
        self.beta.values()
    }

    fn mc_template(&self) -> McTemplate {
        McTemplate {
            sweeps: self.mc.sweeps,
            burn_in: self.mc.burn_in,
            thin: self.mc.thin,
            rungs: self.mc.rungs,
            span: self.mc.span,
            swap_interval: self.mc.swap_interval,
            chain_seed: self.mc.chain_seed,
        }
    }

    /// Assemble the backend selection handed to the core functionals.
    pub fn methods(&self) -> Methods {
        let avg = match self.averaging.kind {
            AveragingKind::GaussHermite => AveragingChoice::GaussHermite {
                nodes: self.averaging.nodes,
            },
            AveragingKind::Mc => AveragingChoice::Mc {
                samples: self.averaging.samples,
                seed: self.averaging.seed,
            },
        };
        Methods {
            avg,
            engine: self.engine.into(),
            gl_order: self.gl_order,
            gh_boost: self.limits.gh_boost,
            gh_cap: u128::from(self.limits.gh_cap),
            enum_cap: self.limits.enum_cap,
            mc: self.mc_template(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_documented_default() {
        let parsed = RunConfig::from_toml("").unwrap();
        assert_eq!(parsed, RunConfig::default());
        parsed.validate().unwrap();
        assert_eq!(parsed.lattice.sides, vec![3]);
        assert_eq!(parsed.k, 2);
        assert_eq!(parsed.betas(), vec![1.0]);
        assert_eq!(parsed.gl_order, 16);
        assert_eq!(parsed.averaging.nodes, 6);
    }

    #[test]
    fn beta_accepts_scalar_and_list() {
        let one = RunConfig::from_toml("beta = 0.25").unwrap();
        assert_eq!(one.betas(), vec![0.25]);
        let many = RunConfig::from_toml("beta = [0.1, 0.2, 0.4]").unwrap();
        assert_eq!(many.betas(), vec![0.1, 0.2, 0.4]);
    }

    #[test]
    fn unknown_fields_are_reported_with_position() {
        let err = RunConfig::from_toml("[lattice]\nsides = [3]\nshape = \"cube\"\n").unwrap_err();
        assert!(err.message.contains("shape"), "{err}");
        assert!(err.message.contains("line 3"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_and_column() {
        let err = RunConfig::from_toml("k = \"two\"").unwrap_err();
        assert!(err.message.contains("line 1"), "{err}");
    }

    #[test]
    fn semantic_validation_names_the_field() {
        let mut config = RunConfig::default();
        config.gl_order = 1;
        let err = config.validate().unwrap_err();
        assert_eq!(err.field, "gl_order");

        let mut config = RunConfig::default();
        config.lattice.sides = vec![3, 1];
        assert_eq!(config.validate().unwrap_err().field, "lattice.sides");

        let mut config = RunConfig::default();
        config.engine = EngineConfig::Chain;
        config.lattice.sides = vec![3, 3];
        assert_eq!(config.validate().unwrap_err().field, "engine");
        config.lattice.sides = vec![5];
        config.validate().unwrap();
    }

    #[test]
    fn overrides_apply_and_conflict() {
        let mut config = RunConfig::default();
        config
            .apply(&Overrides {
                samples: Some(500),
                seed: Some(7),
                k: Some(3),
                beta: Some(vec![0.1, 0.2]),
                bc: Some(BoundaryCondition::Free),
                out: Some(PathBuf::from("elsewhere")),
                ..Overrides::default()
            })
            .unwrap();
        assert_eq!(config.averaging.kind, AveragingKind::Mc);
        assert_eq!(config.averaging.samples, 500);
        assert_eq!(config.averaging.seed, 7);
        assert_eq!(config.k, 3);
        assert_eq!(config.betas(), vec![0.1, 0.2]);
        assert_eq!(config.bc, BoundaryCondition::Free);
        assert_eq!(config.output.dir, PathBuf::from("elsewhere"));

        let err = config
            .apply(&Overrides {
                samples: Some(10),
                gh_nodes: Some(8),
                ..Overrides::default()
            })
            .unwrap_err();
        assert_eq!(err.field, "averaging.kind");
    }

    #[test]
    fn methods_reflect_the_selected_backend() {
        let mut config = RunConfig::default();
        config.averaging.kind = AveragingKind::Mc;
        config.averaging.samples = 64;
        config.averaging.seed = 9;
        config.gl_order = 8;
        let methods = config.methods();
        assert_eq!(
            methods.avg,
            AveragingChoice::Mc {
                samples: 64,
                seed: 9
            }
        );
        assert_eq!(methods.gl_order, 8);
        assert_eq!(methods.gh_boost, 64);
        assert_eq!(methods.mc.chain_seed, McTemplate::default().chain_seed);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut config = RunConfig::default();
        config.lattice.sides = vec![4];
        config.beta = BetaSpec::Many(vec![0.1, 0.4]);
        let text = toml::to_string(&config).unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, config);
    }
}
