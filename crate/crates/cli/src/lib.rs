//! Command-line front end for `latmrf`.
//!
//! [`run`] parses arguments, dispatches to a subcommand and maps the outcome to
//! an exit code: 0 on success, 1 on a usage error, 2 on a runtime error.

mod commands;
mod demo;
mod manifest;
mod parse;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use manifest::{manifest_path, Manifest};

#[derive(Parser, Debug)]
#[command(name = "latmrf", version, about = "Markov random fields on 2-D lattices")]
pub struct Cli {
    /// Worker threads for parallel loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Accepted for compatibility; parallel reductions are always summed in a
    /// fixed order.
    #[arg(long, global = true)]
    pub reproducible: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a field by Gibbs sampling.
    Sample(SampleArgs),
    /// Maximum pseudo-likelihood fit.
    FitPl(FitPlArgs),
    /// Stochastic approximation fit.
    FitSa(FitSaArgs),
    /// Hidden MRF Gaussian mixture fit.
    FitGhm(FitGhmArgs),
    /// Pick interacting positions by thresholding a stochastic approximation fit.
    Select(SelectArgs),
    /// Co-occurrence counts of a field as CSV.
    Cohist(CohistArgs),
    /// Build or inspect an interaction structure.
    Mrfi(MrfiArgs),
    /// Render a field to PNG.
    Render(RenderArgs),
    /// Exact computations by enumeration on small lattices.
    #[command(hide = true)]
    Oracle(OracleArgs),
    /// End-to-end synthetic workflows.
    Demo(DemoArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct StructureArgs {
    /// `norm:<L1|L2|Linf>:<radius>` or a file of `r1 r2` lines.
    #[arg(long)]
    pub mrfi: Option<String>,
    /// Extra position `r1,r2`; repeatable.
    #[arg(long = "pos", allow_hyphen_values = true)]
    pub pos: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Lattice size `H,W` of a random start.
    #[arg(long, conflicts_with = "init")]
    pub dims: Option<String>,
    /// Starting field file.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Model file.
    #[arg(long)]
    pub theta: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[arg(long, default_value_t = 60)]
    pub cycles: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Region file of pixels kept at their initial value.
    #[arg(long)]
    pub fixed: Option<PathBuf>,
    /// Region file restricting the lattice support (random starts only).
    #[arg(long)]
    pub sub: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// PNG path; defaults to the output path with a `.png` extension.
    #[arg(long)]
    pub png: Option<PathBuf>,
    #[arg(long)]
    pub no_png: bool,
    #[arg(long, default_value_t = 1)]
    pub scale: usize,
}

#[derive(Args, Debug)]
pub struct FitPlArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[arg(long, default_value = "oneeach")]
    pub family: String,
    /// Starting model file.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-5)]
    pub gtol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Output model file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SaArgs {
    /// Number of iterations B.
    #[arg(long, default_value_t = 300)]
    pub iterations: usize,
    /// First step size M; steps decrease linearly to 0.
    #[arg(long, default_value_t = 1.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 2)]
    pub cycles: usize,
    /// Restart the chain every this many iterations.
    #[arg(long)]
    pub refresh_each: Option<usize>,
    #[arg(long, default_value_t = 60)]
    pub refresh_cycles: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Starting model file.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitSaArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[arg(long, default_value = "oneeach")]
    pub family: String,
    #[command(flatten)]
    pub sa: SaArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of `iteration,distance`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[arg(long, default_value = "oneeach")]
    pub family: String,
    #[command(flatten)]
    pub sa: SaArgs,
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    /// Output structure file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitGhmArgs {
    /// CSV field of observations.
    #[arg(long)]
    pub y: PathBuf,
    /// Model file of the latent field.
    #[arg(long)]
    pub theta: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    /// `poly:d1,d2`, `fourier:k1,k2` or `none`.
    #[arg(long, default_value = "none")]
    pub basis: String,
    #[arg(long)]
    pub equal_vars: bool,
    #[arg(long, default_value_t = 100)]
    pub maxiter: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub max_dist: f64,
    #[arg(long, default_value_t = 6)]
    pub icm_cycles: usize,
    /// Starting means, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Starting standard deviations, comma separated.
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CohistArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MrfiArgs {
    /// `norm:<L1|L2|Linf>:<radius>`; omitted means only `--pos` positions.
    pub spec: Option<String>,
    /// Extra position `r1,r2`; repeatable.
    #[arg(long = "pos", allow_hyphen_values = true)]
    pub pos: Vec<String>,
    /// Print only the number of positions.
    #[arg(long)]
    pub count: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Discrete field file.
    #[arg(long, conflicts_with = "real")]
    pub field: Option<PathBuf>,
    /// Real-valued CSV field.
    #[arg(long)]
    pub real: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub scale: usize,
    /// `categorical` or `gray` for discrete fields, `gray` or `viridis` for real ones.
    #[arg(long)]
    pub colors: Option<String>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub dims: String,
    #[arg(long)]
    pub theta: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    /// Also compute the exact MLE for this field.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long, default_value = "oneeach")]
    pub family: String,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[command(subcommand)]
    pub which: DemoKind,
}

#[derive(Subcommand, Debug)]
pub enum DemoKind {
    /// Simulate a texture, select interactions, refit and resample.
    Texture {
        #[arg(long, default_value_t = 150)]
        size: usize,
        /// Max-norm radius of the candidate positions.
        #[arg(long, default_value_t = 6)]
        radius: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Simulate noisy observations of a Potts field and segment them.
    Segment {
        #[arg(long, default_value_t = 120)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Runs the tool on `argv` (without the program name).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = std::iter::once(OsString::from("latmrf"))
        .chain(argv.into_iter().map(Into::into))
        .collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let recorded: Vec<String> = args[1..].iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::dispatch(cli, recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
