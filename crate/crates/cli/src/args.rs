use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polyperturb::isotropy::MomentKind;
use polyperturb::perturbation::DEFAULT_T_GRID;
use polyperturb::stability::{DEFAULT_REFINEMENT, DEFAULT_RESTARTS, STABILITY_TOL};
use serde::Serialize;

/// First-order perturbation analysis of convex polytopes.
///
/// Polytopes are read from JSON (`{"dim", "vertices"}` or `{"dim", "halfspaces"}`) or from
/// `.off` files. Every run prints one JSON report, or a CSV table with `--format csv`.
#[derive(Debug, Parser, Serialize)]
#[command(name = "polyperturb", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Geometric tolerance for hull and incidence tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub eps_geo: f64,

    /// Threshold on normalized pairings that counts as instability.
    #[arg(long, global = true, default_value_t = STABILITY_TOL)]
    pub stability_tol: f64,

    /// Offset into the deterministic direction sequence used by perturbed families.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Volume, centroid and covariance.
    Moments {
        #[arg(long)]
        polytope: PathBuf,
    },
    /// Maps the polytope to isotropic position.
    Isotropize {
        #[arg(long)]
        polytope: PathBuf,
    },
    /// Isotropic constant L.
    Lk {
        #[arg(long)]
        polytope: PathBuf,
    },
    /// Facet perturbations and their realizing families.
    Perturb {
        #[command(subcommand)]
        action: PerturbCommand,
    },
    /// Wasserstein distance between two nonnegative measures.
    Wass {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// Allow unequal masses, creating and destroying mass at unit price.
        #[arg(long)]
        generalized: bool,
    },
    /// Wasserstein norm of a signed measure.
    Wassnorm {
        #[arg(long)]
        measure: PathBuf,
    },
    /// Total variation norm of a signed measure.
    Tv {
        #[arg(long)]
        measure: PathBuf,
    },
    /// Perturbation stability of a moment functional at an isotropic polytope.
    Stability {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long, value_enum, default_value_t = Functional::Lk)]
        functional: Functional,
        /// Levels of facet mesh refinement.
        #[arg(long, default_value_t = DEFAULT_REFINEMENT)]
        refine: usize,
        /// Extra starting points per face in the lower-face search.
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Move the polytope to isotropic position first.
        #[arg(long)]
        isotropize: bool,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum PerturbCommand {
    /// Builds the perturbation and the family `P_t` realizing it.
    Build {
        #[arg(long)]
        polytope: PathBuf,
        #[command(flatten)]
        #[serde(flatten)]
        source: PerturbationSource,
        /// Parameters at which to report `P_t`.
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
    },
    /// Compares `(∫_{P_t} p - ∫_P p) / t` with the pairing `∫ p dμ`.
    Check {
        #[arg(long)]
        polytope: PathBuf,
        #[command(flatten)]
        #[serde(flatten)]
        source: PerturbationSource,
        /// Test polynomial `{"dim", "terms"}`; the constant 1 when omitted.
        #[arg(long)]
        poly: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_T_GRID.to_vec())]
        tgrid: Vec<f64>,
        /// Also report the Wasserstein gap to the discretized perturbation at this grid resolution.
        #[arg(long)]
        weak_resolution: Option<usize>,
    },
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = true)]
pub struct PerturbationSource {
    /// Built-in facet density.
    #[arg(long, value_enum, requires = "facet", conflicts_with = "perturbation")]
    pub kind: Option<Kind>,
    /// Facet index for `--kind`.
    #[arg(long, requires = "kind")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facet: Option<usize>,
    /// Ridge index, among all faces of dimension n - 2, for `--kind hinge`.
    #[arg(long, requires = "kind")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<usize>,
    /// JSON list of facet densities `[{"facet", "pieces": [{"a", "b"}]}]`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Shift,
    Hinge,
    Pyramid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// `L^{2n}`.
    Lk,
    Volume,
    MomentOfInertia,
}

impl From<Functional> for MomentKind {
    fn from(f: Functional) -> Self {
        match f {
            Functional::Lk => MomentKind::IsotropicConstant2n,
            Functional::Volume => MomentKind::Volume,
            Functional::MomentOfInertia => MomentKind::MomentOfInertia,
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Moments { .. } => "moments",
            Self::Isotropize { .. } => "isotropize",
            Self::Lk { .. } => "lk",
            Self::Perturb {
                action: PerturbCommand::Build { .. },
            } => "perturb build",
            Self::Perturb {
                action: PerturbCommand::Check { .. },
            } => "perturb check",
            Self::Wass { .. } => "wass",
            Self::Wassnorm { .. } => "wassnorm",
            Self::Tv { .. } => "tv",
            Self::Stability { .. } => "stability",
        }
    }
}
