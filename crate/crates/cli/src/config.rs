//! Run configuration: JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use overdet::bdg::LemahcOptions;
use overdet::geometry::SurfaceKind;
use overdet::profiles::{GridSpec, NonlinearityKind};
use overdet::residual::ResidualOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub kind: NonlinearityKind,
    /// c[k] multiplies s^k (custom kind only)
    pub coefficients: Option<Vec<f64>>,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        NonlinearityConfig { kind: NonlinearityKind::AllenCahn, coefficients: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        GridConfig { t_max: g.t_max, nodes: g.nodes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub nu: f64,
    /// defaults to 0.9 sqrt(-f'(1))
    pub gamma: Option<f64>,
    pub sigma: f64,
    pub pairs: usize,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig { nu: 4.5, gamma: None, sigma: 0.5, pairs: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualGridConfig {
    pub half_width: f64,
    pub ds: f64,
    pub t_stride: usize,
    pub delta: f64,
    pub n_sigma_periodic: usize,
    pub cauchy_points: usize,
    pub fixed_window: f64,
}

impl Default for ResidualGridConfig {
    fn default() -> Self {
        let o = ResidualOptions::default();
        ResidualGridConfig {
            half_width: o.half_width,
            ds: o.ds,
            t_stride: o.t_stride,
            delta: o.delta,
            n_sigma_periodic: o.n_sigma_periodic,
            cauchy_points: o.cauchy_points,
            fixed_window: o.fixed_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtnConfig {
    pub xi: Vec<f64>,
    pub coercivity_n: usize,
}

impl Default for DtnConfig {
    fn default() -> Self {
        DtnConfig { xi: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0], coercivity_n: 2048 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PartChoice {
    A,
    B,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemahcConfig {
    pub part: PartChoice,
    pub nodes: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub axis_margin: f64,
}

impl Default for LemahcConfig {
    fn default() -> Self {
        let o = LemahcOptions::default();
        LemahcConfig {
            part: PartChoice::Both,
            nodes: o.nodes,
            r_min: o.r_min,
            r_max: o.r_max,
            n_r: o.n_r,
            axis_margin: o.axis_margin,
        }
    }
}

impl LemahcConfig {
    pub fn options(&self) -> LemahcOptions {
        LemahcOptions {
            nodes: self.nodes,
            r_min: self.r_min,
            r_max: self.r_max,
            n_r: self.n_r,
            axis_margin: self.axis_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nonlinearity: NonlinearityConfig,
    pub surface: SurfaceKind,
    pub grid: GridConfig,
    pub epsilons: Vec<f64>,
    pub stage: u8,
    pub norm: NormConfig,
    pub residual: ResidualGridConfig,
    pub dtn: DtnConfig,
    pub lemahc: LemahcConfig,
    /// arc-length samples per period for the Delaunay export
    pub delaunay_samples: usize,
    pub seed: Option<u64>,
    /// not part of the config hash
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nonlinearity: NonlinearityConfig::default(),
            surface: SurfaceKind::Catenoid,
            grid: GridConfig::default(),
            epsilons: vec![0.1, 0.05, 0.025],
            stage: 1,
            norm: NormConfig::default(),
            residual: ResidualGridConfig::default(),
            dtn: DtnConfig::default(),
            lemahc: LemahcConfig::default(),
            delaunay_samples: 400,
            seed: None,
            out: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid.t_max < 20.0 || self.grid.nodes < 512 {
            return Err(invalid("grid needs t_max >= 20 and nodes >= 512"));
        }
        if self.nonlinearity.kind == NonlinearityKind::Custom && self.nonlinearity.coefficients.is_none() {
            return Err(invalid("custom nonlinearity needs coefficients"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 0.5)) {
            return Err(invalid("epsilons must lie in (0, 0.5)"));
        }
        if self.stage > 1 {
            return Err(invalid("stage is 0 or 1"));
        }
        let n = &self.norm;
        if n.nu < 0.0 || !(n.sigma > 0.0 && n.sigma < 1.0) || n.gamma.is_some_and(|g| g < 0.0) {
            return Err(invalid("norm needs nu >= 0, 0 < sigma < 1, gamma >= 0"));
        }
        match self.surface {
            SurfaceKind::Delaunay { tau } if !(tau > 0.0 && tau <= 0.25) => {
                return Err(invalid("delaunay tau must lie in (0, 1/4]"))
            }
            SurfaceKind::Sphere { radius } | SurfaceKind::Cylinder { radius } if !(radius > 0.0) => {
                return Err(invalid("radius must be positive"))
            }
            _ => {}
        }
        let r = &self.residual;
        if !(r.ds > 0.0 && r.half_width > 0.0 && r.delta > 0.0) || r.t_stride == 0 || r.n_sigma_periodic < 16 || r.cauchy_points < 8 {
            return Err(invalid("residual grid parameters out of range"));
        }
        let l = &self.lemahc;
        if !(l.r_min > 0.0 && l.r_max > l.r_min) || l.n_r < 3 || l.nodes < 101 {
            return Err(invalid("lemahc grid parameters out of range"));
        }
        if self.dtn.xi.iter().any(|x| *x < 0.0) || self.dtn.coercivity_n < 16 {
            return Err(invalid("dtn frequencies must be >= 0"));
        }
        Ok(())
    }

    /// Seed for sampled computations; mandatory for those.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| invalid("a seed is required (--seed or config \"seed\")"))
    }

    pub fn residual_options(&self) -> ResidualOptions {
        let r = &self.residual;
        ResidualOptions {
            epsilons: self.epsilons.clone(),
            half_width: r.half_width,
            ds: r.ds,
            t_stride: r.t_stride,
            delta: r.delta,
            n_sigma_periodic: r.n_sigma_periodic,
            cauchy_points: r.cauchy_points,
            fixed_window: r.fixed_window,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn out_is_accepted_but_not_hashed() {
        let a: RunConfig = serde_json::from_str(r#"{"out": "x"}"#).unwrap();
        assert_eq!(a.out.as_deref(), Some(Path::new("x")));
        assert_eq!(crate::output::config_hash(&a), crate::output::config_hash(&RunConfig::default()));
    }

    #[test]
    fn rejects_out_of_range() {
        let bad = [
            r#"{"epsilons": [0.6]}"#,
            r#"{"surface": {"kind": "delaunay", "tau": 0.3}}"#,
            r#"{"norm": {"sigma": 1.5}}"#,
            r#"{"nonlinearity": {"kind": "custom"}}"#,
            r#"{"stage": 2}"#,
        ];
        for b in bad {
            let c: RunConfig = serde_json::from_str(b).unwrap();
            assert!(matches!(c.validate(), Err(CliError::Config(_))), "{b}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"grid": {"t_max": 20, "typo": 1}}"#).is_err());
    }

    #[test]
    fn seed_is_mandatory_when_sampling() {
        assert!(RunConfig::default().require_seed().is_err());
        assert_eq!(RunConfig { seed: Some(3), ..Default::default() }.require_seed().unwrap(), 3);
    }
}
