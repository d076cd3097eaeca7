//! Command-line front end: curvature reports, margin checks, deformation
//! scans, verification suites and the comparison functionals, over metrics
//! given as definition files or catalog selectors.

mod commands;
mod error;
mod output;
mod selector;
mod specfile;

use clap::{Parser, Subcommand, ValueEnum};

use commands::OutputFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> OutputFormat {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ricscan",
    version,
    about = "Curvature and scalar-curvature comparison toolkit",
    long_about = "Computes curvature of Riemannian metrics given as coordinate charts, \
left-invariant frames, or canonical variations; checks the pointwise comparison \
inequalities of the traceless-Ricci deformation; scans deformation parameters; \
and runs randomized verification suites."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in example metrics and their parameter schemas.
    Catalog {
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Pointwise curvature report of a metric.
    Curvature {
        /// Metric selector, e.g. berger:p=1,q=3.5 or file:metric.txt
        #[arg(long)]
        metric: String,
        /// Chart point as comma-separated floats (default: domain center).
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        /// Also compute the Laplacian of the scalar curvature (order-4 jets).
        #[arg(long)]
        laplacian: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// First-order margins of a comparison inequality at sample points.
    Check {
        /// Theorem index 1..=4.
        #[arg(long)]
        theorem: u8,
        #[arg(long)]
        metric: String,
        /// origin | grid:lo:hi:k,... | halton:N
        #[arg(long, default_value = "origin")]
        points: String,
    },
    /// Scan deformation parameters and bracket the admissible interval.
    Scan {
        #[arg(long)]
        theorem: u8,
        #[arg(long)]
        metric: String,
        /// pos | neg
        #[arg(long, default_value = "pos")]
        direction: String,
        #[arg(long = "s-max")]
        s_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "origin")]
        points: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run a randomized verification suite.
    Verify {
        /// appendix | expansion | conformal | norms
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Comparison functionals between a reference metric and a candidate.
    Functional {
        #[arg(long)]
        g0: String,
        #[arg(long)]
        g: String,
        #[arg(long, default_value = "origin")]
        points: String,
    },
}

fn run(cli: Cli) -> Result<String, error::CliError> {
    match cli.command {
        Command::Catalog { format } => commands::catalog_command(format.into()),
        Command::Curvature {
            metric,
            point,
            laplacian,
            format,
        } => commands::curvature_command(&metric, point.as_deref(), laplacian, format.into()),
        Command::Check {
            theorem,
            metric,
            points,
        } => commands::check_command(theorem, &metric, &points),
        Command::Scan {
            theorem,
            metric,
            direction,
            s_max,
            steps,
            points,
            format,
        } => commands::scan_command(
            theorem,
            &metric,
            &direction,
            s_max,
            steps,
            &points,
            format.into(),
        ),
        Command::Verify { suite, seed } => commands::verify_command(&suite, seed),
        Command::Functional { g0, g, points } => commands::functional_command(&g0, &g, &points),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => print!("{text}"),
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    }
}
