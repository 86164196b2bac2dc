//! `agnr`: command-line front end for the nanoribbon library.

mod commands;
mod config;
mod error;
mod range;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Version of the JSON/CSV artifact layouts written by this tool.
pub const ARTIFACT_SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "agnr",
    about = "Spectra, scattering and trapped modes of armchair nanoribbons"
)]
struct Cli {
    /// Cap on worker threads used inside library calls.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Geometry {
    /// Ribbon width L (2L must not be an integer).
    #[arg(long = "L")]
    pub width: f64,
    /// Half-width of the potential support box.
    #[arg(long = "R0", default_value_t = 3.0)]
    pub r0: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy thresholds as CSV `k,omega,kappa,j`.
    Thresholds {
        #[command(flatten)]
        geom: Geometry,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dispersion branches as CSV `j,kappa_sign,lambda,omega`.
    Dispersion {
        #[command(flatten)]
        geom: Geometry,
        /// `min:max:step`.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        branches: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A free wave sampled on a grid, CSV `x,y,Re_u,Im_u,...,Im_vp`.
    Wave {
        #[command(flatten)]
        geom: Geometry,
        /// Fixed energy; alternatively give `--N` and `--eps` for `ω_N − ε`.
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// oscillatory, oscillatory_normalized, threshold0, threshold1, near_exp_raw,
        /// near_exp_analytic_plus, near_exp_analytic_minus, near_exp_normalized.
        #[arg(long)]
        family: String,
        #[arg(long)]
        j: usize,
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
        /// `<nx>x<ny>` sample points.
        #[arg(long, default_value = "41x21")]
        grid: String,
        /// x-range `min:max`.
        #[arg(long, default_value = "-2:2", allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Biorthogonality table with deviations, as JSON.
    Qcheck {
        #[command(flatten)]
        geom: Geometry,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long = "n-quad", default_value_t = 128)]
        n_quad: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First-order scattering matrix s¹ (S ≈ I + iδs¹) as JSON.
    Born {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full augmented scattering matrix as JSON.
    Smatrix {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trapped-mode criterion over an ε grid, CSV `eps,delta,sigma_min,detect`.
    Trapscan {
        #[arg(long)]
        config: PathBuf,
        /// `min:max:steps`; negative ε means ω = ω_N + |ε|.
        #[arg(long, allow_hyphen_values = true)]
        eps: String,
        /// Logarithmic spacing (both ends of the same sign).
        #[arg(long)]
        log: bool,
        /// Potential JSON, overriding the config's `potential_path`.
        #[arg(long)]
        potential: Option<PathBuf>,
        /// `fixed` (the potential's δ) or `sin_sigma`.
        #[arg(long = "delta-rule", default_value = "fixed")]
        delta_rule: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design a potential with a trapped mode at ω_N − ε.
    Synthesize {
        #[command(flatten)]
        geom: Geometry,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        bumps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Norm identity, flux directions, wave residuals and q-tables as a pass/fail report.
    VerifyIdentities {
        #[command(flatten)]
        geom: Geometry,
        #[arg(long = "N", default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long = "n-quad", default_value_t = 128)]
        n_quad: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn version_line() -> String {
    format!(
        "{} (agnr-core {}, artifact schema {ARTIFACT_SCHEMA})",
        env!("CARGO_PKG_VERSION"),
        agnr::VERSION
    )
}

fn main() -> ExitCode {
    let matches = Cli::command().version(version_line()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("agnr: invalid input: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("agnr: cannot configure threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("agnr: {e}");
            e.exit_code()
        }
    }
}
