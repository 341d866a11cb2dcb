use clap::{Parser, Subcommand, ValueEnum};
use hecke_sphere::pipeline::{
    cmd_cap_mass, cmd_discrepancy, cmd_eigenfunctions, cmd_gaunt_check, cmd_que_suite,
    cmd_shc_table, cmd_theta, cmd_triple_products, cmd_variance, cmd_verify,
    cmd_wasserstein, OutputFormat, RunConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Computational laboratory for arithmetic quantum unique ergodicity on the
/// sphere: Hecke eigenfunctions from Hurwitz quaternions, equidistribution
/// statistics, and the theta lift to level-2 modular forms.
#[derive(Parser)]
#[command(name = "hecke-sphere", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// single degree to operate on
    #[arg(long, global = true, env = "HECKE_SPHERE_ELL")]
    ell: Option<usize>,

    /// maximum degree for ranged commands
    #[arg(long, global = true, default_value_t = 36, env = "HECKE_SPHERE_ELL_MAX")]
    ell_max: usize,

    /// comma-separated odd Hecke primes used to resolve eigenfunctions
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        default_values_t = [3u64, 5, 7],
        env = "HECKE_SPHERE_PRIMES"
    )]
    primes: Vec<u64>,

    /// cap radius
    #[arg(long, global = true, env = "HECKE_SPHERE_RADIUS")]
    radius: Option<f64>,

    /// shrinking-cap exponent: R = ell^(-delta), 0 < delta < 1/3
    #[arg(long, global = true, default_value_t = 0.25, env = "HECKE_SPHERE_DELTA")]
    delta: f64,

    /// number of sampled cap centers
    #[arg(long, global = true, default_value_t = 500, env = "HECKE_SPHERE_CENTERS")]
    centers: usize,

    /// override the quadrature grid exactness degree
    #[arg(long, global = true, env = "HECKE_SPHERE_GRID_DEGREE")]
    grid_degree: Option<usize>,

    /// RNG seed; fixed seed gives byte-identical outputs
    #[arg(long, global = true, default_value_t = 1, env = "HECKE_SPHERE_SEED")]
    seed: u64,

    /// output directory
    #[arg(long, global = true, default_value = "out", env = "HECKE_SPHERE_OUT")]
    out: PathBuf,

    /// output format for tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv, env = "HECKE_SPHERE_FORMAT")]
    format: Format,

    /// recompute and overwrite existing outputs
    #[arg(long, global = true, env = "HECKE_SPHERE_FORCE")]
    force: bool,

    /// size of the global worker thread pool
    #[arg(long, global = true, env = "HECKE_SPHERE_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and persist Hecke eigenfunction documents per degree
    Eigenfunctions,
    /// Spectral coefficients of |psi|^2 with L-value proxies
    TripleProducts,
    /// Gaunt/Catalan closed form vs quadrature table
    GauntCheck,
    /// Selberg-Harish-Chandra transform table h_R(ell)
    ShcTable,
    /// Cap masses over sampled centers
    CapMass,
    /// Variance: spectral identity vs direct quadrature
    Variance,
    /// Spherical-cap discrepancy estimate
    Discrepancy,
    /// Berry-Esseen Wasserstein bound scan
    Wasserstein,
    /// Theta-lift Fourier coefficients with newform checks
    Theta,
    /// Full decay suite: cap mass, variance, discrepancy, Wasserstein
    QueSuite,
    /// Identity-test battery with machine-readable verdict
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("failed to size thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let config = RunConfig {
        ell: cli.ell,
        ell_max: cli.ell_max,
        primes: cli.primes,
        radius: cli.radius,
        delta: cli.delta,
        centers: cli.centers,
        grid_degree: cli.grid_degree,
        seed: cli.seed,
        out: cli.out,
        format: match cli.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        },
        force: cli.force,
    };
    let result = match cli.command {
        Command::Eigenfunctions => cmd_eigenfunctions(&config).map(|written| {
            for p in &written {
                println!("{}", p.display());
            }
            if written.is_empty() {
                println!("up to date");
            }
        }),
        Command::TripleProducts => announce(cmd_triple_products(&config)),
        Command::GauntCheck => announce(cmd_gaunt_check(&config)),
        Command::ShcTable => announce(cmd_shc_table(&config)),
        Command::CapMass => announce(cmd_cap_mass(&config)),
        Command::Variance => announce(cmd_variance(&config)),
        Command::Discrepancy => announce(cmd_discrepancy(&config)),
        Command::Wasserstein => announce(cmd_wasserstein(&config)),
        Command::Theta => announce(cmd_theta(&config)),
        Command::QueSuite => announce(cmd_que_suite(&config)),
        Command::Verify => match cmd_verify(&config) {
            Ok(verdict) => {
                match serde_json::to_string_pretty(&verdict) {
                    Ok(json) => println!("{json}"),
                    Err(e) => {
                        eprintln!("serialization error: {e}");
                        return ExitCode::FAILURE;
                    }
                }
                return if verdict.pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                };
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn announce(result: hecke_sphere::Result<PathBuf>) -> hecke_sphere::Result<()> {
    let path = result?;
    println!("{}", path.display());
    Ok(())
}
