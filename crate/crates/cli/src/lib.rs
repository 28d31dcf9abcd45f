//! Command-line front end for `overdet`: configuration, artifact writers and
//! the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use overdet::bdg::BdgError;
use overdet::correctors::CorrectorError;
use overdet::geometry::GeometryError;
use overdet::halfspace_dtn::DtnError;
use overdet::profiles::{NonlinearityKind, ProfileError};
use overdet::residual::ResidualError;

pub use config::RunConfig;
pub use output::{Artifacts, Stamp};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{failed} acceptance criteria failed")]
    Acceptance { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Acceptance { .. } => 4,
        }
    }
}

macro_rules! numerical {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical!(ProfileError, CorrectorError, DtnError, GeometryError, BdgError);

impl From<ResidualError> for CliError {
    fn from(e: ResidualError) -> Self {
        match e {
            ResidualError::UnsupportedSurface(_) | ResidualError::InvalidSpec(_) => CliError::Config(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    AllenCahn,
    FisherKpp,
    Custom,
}

impl From<KindArg> for NonlinearityKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::AllenCahn => NonlinearityKind::AllenCahn,
            KindArg::FisherKpp => NonlinearityKind::FisherKpp,
            KindArg::Custom => NonlinearityKind::Custom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurfaceArg {
    Catenoid,
    Plane,
    Delaunay,
    Cylinder,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GStartArg {
    /// series start at the axis θ = π/2 (Neumann imposed, Dirichlet emergent)
    Axis,
    /// series start at the diagonal θ = π/4 with the axis condition checked
    Diagonal,
}

#[derive(Debug, Parser)]
#[command(name = "overdet", version, about = "Numerical toolkit for overdetermined semilinear problems on tubular neighbourhoods")]
pub struct Cli {
    /// JSON run configuration (see docs/config.md)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory for artifacts
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed for sampled computations
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// worker threads
    #[arg(long, global = true, env = "OVERDET_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Heteroclinic profile w and its derivatives
    Profile {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
    /// Projection constants c0..c4 and the corrector family
    Constants {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
    /// Half-space Dirichlet-to-Neumann symbol and coercivity constant
    Dtn {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// comma-separated frequencies
        #[arg(long, value_delimiter = ',')]
        xi: Option<Vec<f64>>,
    },
    /// Delaunay surface data for one neck-to-neck period
    Delaunay {
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Angular profile g of the Bombieri-De Giorgi-Giusti cone construction
    BdgG {
        #[arg(long, value_enum, default_value = "axis")]
        start: GStartArg,
        /// tolerance on |g'(π/2)| for the diagonal start
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Decay fits for the approximate Jacobi solution near the BDG cone
    BdgLemahc {
        #[arg(long, value_enum)]
        part: Option<config::PartChoice>,
    },
    /// Residual of the approximate solution and its order in ε
    Residual {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, value_enum)]
        surface: Option<SurfaceArg>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        stage: Option<u8>,
        /// comma-separated ε values
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// also write the residual grid for the first ε
        #[arg(long)]
        dump: bool,
    },
    /// Run the full acceptance criteria list
    Acceptance,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile { .. } => "profile",
            Command::Constants { .. } => "constants",
            Command::Dtn { .. } => "dtn",
            Command::Delaunay { .. } => "delaunay",
            Command::BdgG { .. } => "bdg-g",
            Command::BdgLemahc { .. } => "bdg-lemahc",
            Command::Residual { .. } => "residual",
            Command::Acceptance => "acceptance",
        }
    }
}

/// Result of one command: artifacts plus lines for stdout.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub summary: Vec<String>,
    pub out_dir: PathBuf,
    /// set when the command ran to completion but its verdict is negative
    pub failure: Option<CliError>,
}

/// Effective configuration: file (or defaults), then flag overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    let set_kind = |cfg: &mut RunConfig, k: &Option<KindArg>| {
        if let Some(k) = k {
            cfg.nonlinearity.kind = (*k).into();
        }
    };
    match &cli.command {
        Command::Profile { kind } | Command::Constants { kind } => set_kind(&mut cfg, kind),
        Command::Dtn { kind, xi } => {
            set_kind(&mut cfg, kind);
            if let Some(xi) = xi {
                cfg.dtn.xi = xi.clone();
            }
        }
        Command::Delaunay { tau } => {
            let tau = tau.or(match cfg.surface {
                overdet::geometry::SurfaceKind::Delaunay { tau } => Some(tau),
                _ => None,
            });
            cfg.surface = overdet::geometry::SurfaceKind::Delaunay { tau: tau.unwrap_or(0.2) };
        }
        Command::BdgLemahc { part } => {
            if let Some(p) = part {
                cfg.lemahc.part = *p;
            }
        }
        Command::Residual { kind, surface, tau, radius, stage, eps, .. } => {
            use overdet::geometry::SurfaceKind as K;
            set_kind(&mut cfg, kind);
            if let Some(s) = surface {
                cfg.surface = match s {
                    SurfaceArg::Catenoid => K::Catenoid,
                    SurfaceArg::Plane => K::Plane,
                    SurfaceArg::Delaunay => K::Delaunay { tau: tau.unwrap_or(0.2) },
                    SurfaceArg::Cylinder => K::Cylinder { radius: radius.unwrap_or(1.0) },
                    SurfaceArg::Sphere => K::Sphere { radius: radius.unwrap_or(1.0) },
                };
            }
            if let Some(s) = stage {
                cfg.stage = *s;
            }
            if let Some(e) = eps {
                cfg.epsilons = e.clone();
            }
        }
        Command::BdgG { .. } | Command::Acceptance => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Installs the global rayon pool; later calls are no-ops.
pub fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs a command and writes its artifacts. Returns the outcome even when
/// the verdict is negative, so callers can print the summary first.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    init_threads(cli.threads)?;
    let cfg = effective_config(cli)?;
    let mut outcome = commands::dispatch(&cli.command, &cfg)?;
    outcome.out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("overdet-out"));
    outcome.artifacts.write(&outcome.out_dir)?;
    Ok(outcome)
}
