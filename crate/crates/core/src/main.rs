use clap::{Parser, Subcommand};
use corner_probe::cli::{run, RunConfig};
use std::path::PathBuf;

/// Boundary-data simulation and amplitude recovery for piecewise-constant
/// wave sources on convex polyhedral cells.
#[derive(Parser)]
#[command(name = "corner-probe", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate boundary data for a scene and write the data container.
    Simulate(CommonArgs),
    /// Run consistency checks on a scene/data pair.
    Verify(CommonArgs),
    /// Scan corner moments M(r) of the designated vertex cones.
    ConeScan(CommonArgs),
    /// Recover the cell amplitudes from boundary data.
    Reconstruct(CommonArgs),
    /// Noise-stability sweep: reconstruction error against data perturbation.
    Sweep(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Scene description (TOML).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Boundary-data container (written by `simulate`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Band limit override for the measurement grid.
    #[arg(long)]
    band_limit: Option<usize>,
    /// Noise levels (relative to rms of the trace), comma separated.
    #[arg(long, value_delimiter = ',')]
    noise: Vec<f64>,
    /// Base RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probe radii, comma separated (defaults to r0/8, r0/16, r0/32).
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Reference scene providing true amplitudes for error columns.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Worker threads (falls back to CORNER_PROBE_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let args = Args::parse();
    let (name, common) = match &args.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Verify(c) => ("verify", c),
        Command::ConeScan(c) => ("cone-scan", c),
        Command::Reconstruct(c) => ("reconstruct", c),
        Command::Sweep(c) => ("sweep", c),
    };
    let threads = common.threads.or_else(|| {
        std::env::var("CORNER_PROBE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let cfg = RunConfig {
        scene: common.scene.clone(),
        data: common.data.clone(),
        out: common.out.clone(),
        tol: common.tol,
        band_limit: common.band_limit,
        noise: common.noise.clone(),
        seed: common.seed,
        radii: common.radii.clone(),
        reference: common.reference.clone(),
    };
    let code = match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool");
            pool.install(|| run(name, &cfg))
        }
        _ => run(name, &cfg),
    };
    std::process::exit(code);
}
