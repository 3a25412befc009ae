// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use blockseg::eval::Lemma1Mode;
use blockseg::{GroundTruth, SegConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "blockseg",
    version,
    about = "Least-squares recovery of diagonal blocks in symmetric matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment an observed matrix and select the number of blocks.
    Segment(SegmentArgs),
    /// Draw a matrix from the block-diagonal model.
    Simulate(SimulateArgs),
    /// Run a replicate sweep described by a TOML or JSON file.
    Experiment(ExperimentArgs),
    /// Check the deterministic lower bounds and the criterion decomposition.
    TheoryCheck(TheoryCheckArgs),
}

#[derive(Debug, Args)]
pub struct SegFlags {
    /// Maximal block-size fraction, in [0.5, 1).
    #[arg(long, default_value_t = 0.75)]
    pub c: f64,
    /// Minimal block length.
    #[arg(long = "min-len", default_value_t = 2)]
    pub min_len: usize,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Matrix file; `.csv` is comma separated, anything else tab separated.
    #[arg(long)]
    pub input: PathBuf,
    /// Largest number of blocks tried.
    #[arg(long)]
    pub kmax: usize,
    #[command(flatten)]
    pub seg: SegFlags,
    /// Average the matrix with its transpose instead of rejecting asymmetry.
    #[arg(long)]
    pub symmetrize: bool,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl SegmentArgs {
    pub fn config(&self) -> SegConfig {
        SegConfig {
            c: self.seg.c,
            min_len: self.seg.min_len,
            k_max: self.kmax,
            symmetrize: self.symmetrize,
        }
    }
}

#[derive(Debug, Args)]
pub struct TruthFlags {
    /// Break fractions, comma separated, from 0 to 1.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub tau: Vec<f64>,
    /// Block means, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub mu: Vec<f64>,
    /// Baseline mean off the blocks.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu0: f64,
}

impl TruthFlags {
    pub fn truth(&self, sigma: f64, omega: f64) -> GroundTruth {
        GroundTruth {
            tau: self.tau.clone(),
            mu: self.mu.clone(),
            mu0: self.mu0,
            sigma,
            omega,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Matrix side length.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub truth: TruthFlags,
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: f64,
    /// Mean shift of the top-right corner.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub seg: SegFlags,
    /// Matrix output path; the truth goes to `<output>.truth.json`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment description (`.toml` or `.json`).
    #[arg(long)]
    pub config: PathBuf,
    /// Replicate CSV; the summary goes next to it as `<stem>.aggregate.csv`.
    #[arg(long)]
    pub output: PathBuf,
    /// Keep rows already present in the output and compute only the rest.
    #[arg(long)]
    pub resume: bool,
    /// Worker threads (overrides the file; BLOCKSEG_JOBS overrides both).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Fill the runtime_ms column (makes the CSV time dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Under,
    Over,
    #[value(name = "equal_far", alias = "equal-far")]
    EqualFar,
}

impl From<ModeArg> for Lemma1Mode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Under => Lemma1Mode::Under,
            ModeArg::Over => Lemma1Mode::Over,
            ModeArg::EqualFar => Lemma1Mode::EqualFar,
        }
    }
}

fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !(v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
        return Err(format!("expected a positive integer, got {s:?}"));
    }
    Ok(v as u64)
}

#[derive(Debug, Args)]
pub struct TheoryCheckArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Distance threshold for equal_far (default: a quarter of the smallest true gap).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Largest class that is enumerated exhaustively; bigger classes are
    /// sampled with this many draws. Accepts forms like `1e6`.
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    pub budget: u64,
    #[command(flatten)]
    pub truth: TruthFlags,
    /// Noise level for the decomposition check.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest K for the over mode (default: K* + 1).
    #[arg(long)]
    pub kmax: Option<usize>,
    #[command(flatten)]
    pub seg: SegFlags,
    /// Number of (matrix, candidate) pairs for the decomposition check.
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
}
