use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mixgeo::losses::{builtin_n, Loss};
use mixgeo::simplex::{default_resolution, DEFAULT_MARGIN};
use mixgeo::Grid;
use serde_json::{json, Value};

use crate::format::num;
use crate::spec;

#[derive(Debug, Parser)]
#[command(name = "mixgeo", version, about = "Geometric analysis of proper losses: properness, mixability, links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Properness, fairness, mixability constant, fundamentality and sliding in one report.
    Analyze(Common),
    /// Tabulate a pointwise quantity over the grid.
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        quantity: Quantity,
    },
    /// Run the cross-check suite; exit 1 if any check fails.
    Verify(Common),
    /// Solve the canonical link of a binary loss.
    CanonicalLink(Common),
    /// Split the log loss as eta* h plus a residual loss.
    Decompose(Common),
    /// Decide whether spr(eta h) slides freely inside spr(base).
    SlideCheck(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Profile { .. } => "profile",
            Command::Verify(_) => "verify",
            Command::CanonicalLink(_) => "canonical-link",
            Command::Decompose(_) => "decompose",
            Command::SlideCheck(_) => "slide-check",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Analyze(c)
            | Command::Verify(c)
            | Command::CanonicalLink(c)
            | Command::Decompose(c)
            | Command::SlideCheck(c) => c,
            Command::Profile { common, .. } => common,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Curvature,
    Weight,
    Quotient,
    #[value(name = "pencil_min_eig", alias = "pencil-min-eig")]
    PencilMinEig,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Curvature => "curvature",
            Quantity::Weight => "weight",
            Quantity::Quotient => "quotient",
            Quantity::PencilMinEig => "pencil_min_eig",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Text => "text",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Builtin loss: log, brier or spherical.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub loss: Option<String>,
    /// Loss specification file (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Reference loss for quotients, fundamentality and sliding.
    #[arg(long, default_value = "log")]
    pub base: String,
    /// Number of outcomes for builtin losses.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Lattice resolution per axis; defaults depend on n.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    /// Defaults to csv for profile and text otherwise.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write here (atomically, with a .meta.json sidecar) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Errors in the invocation itself; all map to the usage exit code.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("grid resolution must be at least 11, got {0}")]
    Resolution(usize),
    #[error("margin must lie in (0, 0.1), got {0}")]
    Margin(f64),
    #[error("eta must be positive and finite, got {0}")]
    Eta(f64),
    #[error("--n {flag} contradicts the spec file (n = {spec})")]
    NMismatch { flag: usize, spec: usize },
    #[error(transparent)]
    Spec(#[from] spec::SpecError),
    #[error("base loss: {0}")]
    Base(mixgeo::Error),
    #[error("grid: {0}")]
    Grid(mixgeo::Error),
}

/// Everything a command needs, resolved and validated. Echoed into every
/// report so verdicts can be audited.
pub struct RunConfig {
    pub loss: Loss,
    pub source: String,
    pub base: Loss,
    pub grid: Grid,
    pub eta: Option<f64>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(common: &Common, default_format: OutputFormat) -> Result<Self, ConfigError> {
        let (loss, source) = match (&common.loss, &common.spec) {
            (Some(name), _) => (
                builtin_n(name, common.n.unwrap_or(2)).map_err(spec::SpecError::from)?,
                format!("builtin:{name}"),
            ),
            (None, Some(path)) => {
                let l = spec::load(path)?;
                if let Some(n) = common.n {
                    if n != l.n() {
                        return Err(ConfigError::NMismatch { flag: n, spec: l.n() });
                    }
                }
                (l, format!("spec:{}", path.display()))
            }
            (None, None) => unreachable!("clap requires --loss or --spec"),
        };
        let n = loss.n();
        let resolution = common.grid.unwrap_or_else(|| default_resolution(n));
        if resolution < 11 {
            return Err(ConfigError::Resolution(resolution));
        }
        if !(common.margin > 0.0 && common.margin < 0.1) {
            return Err(ConfigError::Margin(common.margin));
        }
        if let Some(e) = common.eta {
            if !(e > 0.0 && e.is_finite()) {
                return Err(ConfigError::Eta(e));
            }
        }
        let base = builtin_n(&common.base, n).map_err(ConfigError::Base)?;
        let grid = Grid::new(n, resolution, common.margin).map_err(ConfigError::Grid)?;
        Ok(Self {
            loss,
            source,
            base,
            grid,
            eta: common.eta,
            format: common.format.unwrap_or(default_format),
            out: common.out.clone(),
        })
    }

    /// Config block embedded in reports.
    pub fn echo(&self) -> Value {
        use mixgeo::{convex, geom2, geomn, losses};
        json!({
            "loss": {"name": self.loss.name(), "n": self.loss.n(), "source": self.source},
            "base": self.base.name(),
            "grid": {
                "n": self.grid.n,
                "resolution": self.grid.resolution,
                "margin": num(self.grid.margin),
                "points": self.grid.len(),
            },
            "eta": self.eta.map(num),
            "tolerances": {
                "align": num(losses::TOL_ALIGN),
                "pd_rel": num(losses::TOL_PD_REL),
                "fair": num(losses::TOL_FAIR),
                "weight": num(geom2::WEIGHT_TOL),
                "route": num(geom2::ROUTE_TOL),
                "link": num(geom2::LINK_TOL),
                "roundtrip": num(geom2::ROUNDTRIP_TOL),
                "spectrum": num(geomn::SPECTRUM_TOL),
                "gradient": num(geomn::GRADIENT_TOL),
                "psd": num(convex::PSD_TOL),
                "membership": num(convex::MEMBERSHIP_TOL),
            },
        })
    }
}
