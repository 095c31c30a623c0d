//! Experiment configuration: a versioned JSON document with a `mode`
//! selecting the solver and mode-specific required fields. Unknown keys are
//! rejected so a config either reproduces a run exactly or fails loudly.

use serde::Deserialize;
use starreg_core::measures::CostKind;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema version {got} (this build reads {expected})")]
    Schema { got: u32, expected: u32 },
    #[error("only planar problems are supported (dimension = 2), got {0}")]
    Dimension(usize),
    #[error("grid must have at least 3 sectors, got {0}")]
    GridTooSmall(usize),
    #[error("mode {mode} requires the field `{field}`")]
    MissingField { mode: &'static str, field: &'static str },
    #[error("{field} must be a finite nonnegative number, got {value}")]
    BadBudget { field: &'static str, value: f64 },
    #[error("a distribution needs either `atoms` or `density`, not both or neither")]
    AmbiguousDistribution,
    #[error("atom {index} needs either `point` or `angle`, not both or neither")]
    AmbiguousAtom { index: usize },
    #[error("atom {index} has nonpositive radius {radius}")]
    BadAtomRadius { index: usize, radius: f64 },
    #[error("eps_list must be sorted ascending and nonnegative")]
    BadSweepList,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Star0,
    Dro,
    Convex,
    Critic,
    DroCritic,
    Sweep,
    ShiftBench,
    Convergence,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Star0 => "star0",
            Mode::Dro => "dro",
            Mode::Convex => "convex",
            Mode::Critic => "critic",
            Mode::DroCritic => "dro-critic",
            Mode::Sweep => "sweep",
            Mode::ShiftBench => "shift-bench",
            Mode::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostSpec {
    Arc,
    Euclid,
    SqEuclid,
}

impl From<CostSpec> for CostKind {
    fn from(c: CostSpec) -> CostKind {
        match c {
            CostSpec::Arc => CostKind::Arc,
            CostSpec::Euclid => CostKind::Euclid,
            CostSpec::SqEuclid => CostKind::SqEuclid,
        }
    }
}

/// One atom, either Cartesian (`point`) or polar (`angle` in radians with
/// an optional `radius`, default 1).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    #[serde(default)]
    pub point: Option<[f64; 2]>,
    #[serde(default)]
    pub angle: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    pub mass: f64,
}

impl AtomSpec {
    pub fn cartesian(&self, index: usize) -> Result<[f64; 2], ConfigError> {
        match (self.point, self.angle) {
            (Some(p), None) => {
                if self.radius.is_some() {
                    return Err(ConfigError::AmbiguousAtom { index });
                }
                Ok(p)
            }
            (None, Some(a)) => {
                let r = self.radius.unwrap_or(1.0);
                if !r.is_finite() || r <= 0.0 {
                    return Err(ConfigError::BadAtomRadius { index, radius: r });
                }
                Ok([r * a.cos(), r * a.sin()])
            }
            _ => Err(ConfigError::AmbiguousAtom { index }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityName {
    LaplaceL1,
    Gaussian,
    UniformDisk,
    UniformCircle,
}

/// Either a list of atoms or a named planar density.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    #[serde(default)]
    pub atoms: Option<Vec<AtomSpec>>,
    #[serde(default)]
    pub density: Option<DensityName>,
    /// Gaussian scale (default 1).
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Gaussian mean (default origin).
    #[serde(default)]
    pub mean: Option<[f64; 2]>,
    /// Disk / circle radius (default 1).
    #[serde(default)]
    pub radius: Option<f64>,
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.atoms, &self.density) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(ConfigError::AmbiguousDistribution),
        }
    }
}

/// Rotate one atom of the base distribution by `k * step` radians,
/// k = 0..=steps, and compare each shifted problem against the base.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    #[serde(default)]
    pub atom: usize,
    pub step: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub gap_tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iters: 200_000, gap_tol: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub mode: Mode,
    pub grid_n: usize,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub distribution: Option<DistributionSpec>,
    /// Contrast distribution for the critic modes.
    #[serde(default)]
    pub contrast: Option<DistributionSpec>,
    #[serde(default)]
    pub cost: Option<CostSpec>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_p: Option<f64>,
    #[serde(default)]
    pub eps_q: Option<f64>,
    #[serde(default)]
    pub eps_ball: Option<f64>,
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default)]
    pub shift: Option<ShiftSpec>,
    /// Grid sizes for the convergence study.
    #[serde(default)]
    pub grid_sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Output file stem; defaults to the config file's stem.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_dimension() -> usize {
    2
}

fn budget(field: &'static str, value: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match value {
        Some(v) if !v.is_finite() || v < 0.0 => Err(ConfigError::BadBudget { field, value: v }),
        other => Ok(other),
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let raw = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_slice(&raw)?;
        cfg.validate()?;
        Ok((cfg, raw))
    }

    fn require<'a, T>(
        &self,
        field: &'static str,
        value: &'a Option<T>,
    ) -> Result<&'a T, ConfigError> {
        value
            .as_ref()
            .ok_or(ConfigError::MissingField { mode: self.mode.as_str(), field })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema { got: self.schema, expected: SCHEMA_VERSION });
        }
        if self.dimension != 2 {
            return Err(ConfigError::Dimension(self.dimension));
        }
        if self.grid_n < 3 {
            return Err(ConfigError::GridTooSmall(self.grid_n));
        }
        budget("eps", self.eps)?;
        budget("eps_p", self.eps_p)?;
        budget("eps_q", self.eps_q)?;
        budget("eps_ball", self.eps_ball)?;
        if let Some(d) = &self.distribution {
            d.validate()?;
        }
        if let Some(d) = &self.contrast {
            d.validate()?;
        }

        match self.mode {
            Mode::Star0 => {
                self.require("distribution", &self.distribution)?;
            }
            Mode::Dro => {
                let d = self.require("distribution", &self.distribution)?;
                self.require("cost", &self.cost)?;
                self.require("eps", &self.eps)?;
                if d.atoms.is_none() {
                    return Err(ConfigError::Invalid(
                        "the ambiguity set is built around atomic data; use a density only in star0, critic, or convergence mode".into(),
                    ));
                }
            }
            Mode::Convex => {
                let d = self.require("distribution", &self.distribution)?;
                if d.atoms.is_none() {
                    return Err(ConfigError::Invalid(
                        "convex mode works on atomic data (the objective weights come from the atoms)".into(),
                    ));
                }
            }
            Mode::Critic => {
                self.require("distribution", &self.distribution)?;
                self.require("contrast", &self.contrast)?;
                self.require("eps_ball", &self.eps_ball)?;
            }
            Mode::DroCritic => {
                let d = self.require("distribution", &self.distribution)?;
                self.require("cost", &self.cost)?;
                self.require("eps_p", &self.eps_p)?;
                self.require("eps_ball", &self.eps_ball)?;
                if d.atoms.is_none() || self.contrast.as_ref().is_some_and(|c| c.atoms.is_none()) {
                    return Err(ConfigError::Invalid(
                        "dro-critic transports atomic data; both distributions must list atoms".into(),
                    ));
                }
            }
            Mode::Sweep => {
                let d = self.require("distribution", &self.distribution)?;
                self.require("cost", &self.cost)?;
                if d.atoms.is_none() {
                    return Err(ConfigError::Invalid(
                        "the ambiguity set is built around atomic data; use a density only in star0, critic, or convergence mode".into(),
                    ));
                }
                let list = self.require("eps_list", &self.eps_list)?;
                let sorted = list.windows(2).all(|w| w[0] <= w[1]);
                if list.is_empty() || !sorted || list.iter().any(|&e| !e.is_finite() || e < 0.0) {
                    return Err(ConfigError::BadSweepList);
                }
            }
            Mode::ShiftBench => {
                let d = self.require("distribution", &self.distribution)?;
                let shift = self.require("shift", &self.shift)?;
                let atoms = d.atoms.as_ref().ok_or(ConfigError::Invalid(
                    "shift-bench rotates atoms, so the distribution must be atomic".into(),
                ))?;
                if shift.atom >= atoms.len() {
                    return Err(ConfigError::Invalid(format!(
                        "shift.atom = {} is out of range for {} atoms",
                        shift.atom,
                        atoms.len()
                    )));
                }
                if !shift.step.is_finite() {
                    return Err(ConfigError::Invalid("shift.step must be finite".into()));
                }
            }
            Mode::Convergence => {
                let d = self.require("distribution", &self.distribution)?;
                if d.density.is_none() {
                    return Err(ConfigError::Invalid(
                        "convergence mode needs a named density; atomic data has no continuum limit".into(),
                    ));
                }
                let sizes = self.require("grid_sizes", &self.grid_sizes)?;
                if sizes.len() < 2 || sizes.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(ConfigError::Invalid(
                        "grid_sizes must list at least two strictly increasing sizes".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<ExperimentConfig, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_star0_config_parses() {
        let cfg = parse(
            r#"{
                "schema": 1,
                "mode": "star0",
                "grid_n": 8,
                "distribution": {"atoms": [{"point": [1.0, 0.0], "mass": 1.0}]}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Star0);
        assert_eq!(cfg.dimension, 2, "dimension defaults to the plane");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(
            r#"{
                "schema": 1,
                "mode": "star0",
                "grid_n": 8,
                "distribution": {"atoms": [{"point": [1.0, 0.0], "mass": 1.0}]},
                "extra_knob": true
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "got {err:?}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let err = parse(
            r#"{
                "schema": 2,
                "mode": "star0",
                "grid_n": 8,
                "distribution": {"atoms": [{"point": [1.0, 0.0], "mass": 1.0}]}
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Schema { got: 2, .. }), "got {err:?}");
    }

    #[test]
    fn dro_mode_requires_a_budget() {
        let err = parse(
            r#"{
                "schema": 1,
                "mode": "dro",
                "grid_n": 8,
                "cost": "euclid",
                "distribution": {"atoms": [{"point": [1.0, 0.0], "mass": 1.0}]}
            }"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, ConfigError::MissingField { field: "eps", .. }),
            "got {err:?}"
        );
    }

    #[test]
    fn negative_budgets_are_rejected() {
        let err = parse(
            r#"{
                "schema": 1,
                "mode": "dro",
                "grid_n": 8,
                "cost": "arc",
                "eps": -0.5,
                "distribution": {"atoms": [{"point": [1.0, 0.0], "mass": 1.0}]}
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::BadBudget { field: "eps", .. }), "got {err:?}");
    }

    #[test]
    fn atom_polar_and_cartesian_forms() {
        let polar = AtomSpec { point: None, angle: Some(0.0), radius: Some(2.0), mass: 1.0 };
        assert_eq!(polar.cartesian(0).unwrap(), [2.0, 0.0]);
        let cart = AtomSpec { point: Some([0.0, 1.0]), angle: None, radius: None, mass: 1.0 };
        assert_eq!(cart.cartesian(0).unwrap(), [0.0, 1.0]);
        let both = AtomSpec { point: Some([1.0, 0.0]), angle: Some(0.0), radius: None, mass: 1.0 };
        assert!(matches!(both.cartesian(3), Err(ConfigError::AmbiguousAtom { index: 3 })));
    }

    #[test]
    fn sweep_list_must_be_sorted() {
        let err = parse(
            r#"{
                "schema": 1,
                "mode": "sweep",
                "grid_n": 8,
                "cost": "arc",
                "eps_list": [0.3, 0.1],
                "distribution": {"atoms": [{"point": [1.0, 0.0], "mass": 1.0}]}
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::BadSweepList), "got {err:?}");
    }
}
