//! Command-line surface. Every subcommand's arguments are serializable so a
//! run manifest can record them and `rerun` can replay them.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::grid::Grid;

#[derive(Debug, Parser)]
#[command(name = "heattrace", version, about = "Eigenvalue counting functions and heat traces")]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,

    /// Where to write the run manifest (default: `<out>.manifest.json`).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    #[command(flatten)]
    Run(Command),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Command {
    /// Write a closed-form spectrum to a JSON file.
    Generate(GenerateArgs),
    /// Check one of the heat-trace / counting-function relations row by row.
    Verify(VerifyArgs),
    /// Heat trace K(t) with its truncation tail bound.
    Heat(HeatArgs),
    /// Fermi-Dirac smoothed counting function.
    Smooth(SmoothArgs),
    /// Recover N(lambda) from the heat trace by contour inversion.
    Invert(InvertArgs),
    /// Compare K(t) with N(1/t).
    Weyl(WeylArgs),
    /// Power-law fit of K(t) and the implied leading term of N.
    Tauber(TauberArgs),
    /// Binned eigenvalue density.
    Density(DensityArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Verify(_) => "verify",
            Command::Heat(_) => "heat",
            Command::Smooth(_) => "smooth",
            Command::Invert(_) => "invert",
            Command::Weyl(_) => "weyl",
            Command::Tauber(_) => "tauber",
            Command::Density(_) => "density",
        }
    }

    /// The primary output file.
    pub fn out(&self) -> &PathBuf {
        match self {
            Command::Generate(a) => &a.out,
            Command::Verify(a) => &a.out,
            Command::Heat(a) => &a.out,
            Command::Smooth(a) => &a.out,
            Command::Invert(a) => &a.out,
            Command::Weyl(a) => &a.out,
            Command::Tauber(a) => &a.out,
            Command::Density(a) => &a.out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// Dirichlet interval: (n pi / L)^2, needs --length and --count.
    Interval,
    /// Dirichlet rectangle: (m pi / a)^2 + (n pi / b)^2, needs --a, --b, --lambda-max.
    Rectangle,
    /// Flat torus R^2 / (2 pi Z)^2: m^2 + n^2, needs --lambda-max.
    Torus,
    /// Equally spaced n / C, needs --density and --count.
    ConstantDensity,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub shape: Shape,
    #[arg(long, allow_negative_numbers = true)]
    pub length: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub count: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub density: Option<f64>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    /// 1: Laplace identity over --t; 2: inversion over --lambda;
    /// 3: beta sweep at a single --lambda over --beta; 4: K(t) vs N(1/t) over --t.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub theorem: u8,
    #[arg(long)]
    pub t: Option<Grid>,
    #[arg(long)]
    pub lambda: Option<Grid>,
    #[arg(long)]
    pub beta: Option<Grid>,
    /// Row tolerance. Defaults: 1e-12 relative (1), 0.1 absolute (2),
    /// none beyond the error bound (3), 0.01 on |ratio - 1| at the smallest t (4).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative tolerance of the quadrature mode (theorem 1).
    #[arg(long, default_value_t = 1e-8)]
    pub quad_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HeatArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    #[arg(long)]
    pub t: Grid,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SmoothArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Grid,
    /// Inverse temperature (default: 50 / nearest gap, per point).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Exponent beyond which Fermi terms saturate to 0 or 1.
    #[arg(long, default_value_t = 700.0)]
    pub exponent_cap: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InvertArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    #[arg(long)]
    pub lambda: Grid,
    /// Contour abscissa; with --height and --step replaces the automatic contour.
    #[arg(long, requires_all = ["height", "step"])]
    pub c: Option<f64>,
    #[arg(long, requires_all = ["c", "step"])]
    pub height: Option<f64>,
    #[arg(long, requires_all = ["c", "height"])]
    pub step: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct WeylArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    #[arg(long)]
    pub t: Grid,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TauberArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    #[arg(long)]
    pub t_lo: f64,
    #[arg(long)]
    pub t_hi: f64,
    #[arg(long)]
    pub probe: f64,
    /// Number of log-spaced fit points.
    #[arg(long, default_value_t = 16)]
    pub points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    #[arg(long)]
    pub bin_width: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub hi: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub from: PathBuf,
}
