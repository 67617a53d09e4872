use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gbs-tn", version, about = "Gaussian boson sampling probabilities with tensor networks")]
pub struct Cli {
    /// Worker threads for batch evaluation.
    #[arg(long, global = true, env = "GBS_TN_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded brickwork circuit as JSON.
    Gen(GenArgs),
    /// Compute outcome probabilities.
    Prob(ProbArgs),
    /// Recommend a local photon cutoff from the loss model.
    Cutoff(CutoffArgs),
    /// Tabulate the Heisenberg/Schrödinger bond-dimension estimates as CSV.
    Scaling(ScalingArgs),
    /// Cross-check all engines on a named instance.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub modes: usize,
    /// Number of layers; defaults to the number of modes.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Loss probability attached to every gate.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Destination file, or `-` for standard output.
    #[arg(long, short, default_value = "-")]
    pub output: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PictureArg {
    Heisenberg,
    Schrodinger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Tn,
    Dense,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct ProbArgs {
    /// Circuit JSON file.
    #[arg(long)]
    pub circuit: PathBuf,
    /// Outcome such as `1,0,2,0`; repeat for several outcomes.
    #[arg(long = "outcome")]
    pub outcomes: Vec<String>,
    /// Also evaluate every outcome with this many photons in total.
    #[arg(long)]
    pub all_with_total: Vec<usize>,
    /// One squeezing value for all modes, or a comma-separated list per mode.
    #[arg(long, default_value = "0.0")]
    pub squeezing: String,
    #[arg(long, value_enum, default_value_t = PictureArg::Heisenberg)]
    pub picture: PictureArg,
    #[arg(long, value_enum, default_value_t = Backend::Tn)]
    pub backend: Backend,
    /// Local photon cutoff; chosen automatically when omitted.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Threshold of the automatic cutoff rule.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Number of photon sources in the cutoff rule; defaults to the lossy gate count.
    #[arg(long)]
    pub num_sources: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    pub svd_threshold: f64,
    #[arg(long)]
    pub max_bond: Option<usize>,
    /// Omit wall-clock timings so repeated runs give identical files.
    #[arg(long)]
    pub no_timing: bool,
    /// Destination for JSON lines, or `-` for standard output.
    #[arg(long, short, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct CutoffArgs {
    /// Take the mode count, loss and source count from this circuit.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    #[arg(long, required_unless_present = "circuit")]
    pub modes: Option<usize>,
    #[arg(long, required_unless_present = "circuit")]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub num_sources: Option<usize>,
    #[arg(long)]
    pub squeezing: f64,
    #[arg(long)]
    pub n_tilde: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, short, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// Mode counts as `start:end:step` or a comma-separated list.
    #[arg(long, default_value = "6:30:2")]
    pub modes: String,
    /// Squeezing values as `start:end:step` or a comma-separated list.
    #[arg(long, default_value = "0.3:0.7:0.1")]
    pub squeezing: String,
    #[arg(long, short, default_value = "-")]
    pub output: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instance {
    /// M = 4, r = 0.4, n_c = 8, all outcomes with 0, 2 or 4 photons.
    LosslessM4,
    /// M = 3, γ = 0.05, r = 0.4, n_c = 4, all outcomes with at most 3 photons.
    LossyM3,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Instance::LosslessM4)]
    pub instance: Instance,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, short, default_value = "-")]
    pub output: String,
}
