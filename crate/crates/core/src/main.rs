use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aco_alloc::experiment::{emit_csv, run_sweep, write_csv, ExperimentConfig};
use aco_alloc::waveform::monte_carlo;

#[derive(Parser)]
#[command(
    name = "aco-alloc",
    version,
    about = "ACO-OFDM power allocation sweeps"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the sweep described by a config file and write CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output path; overrides `[output] path`. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the clipping identities on random frames.
    ValidateWaveform {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> aco_alloc::Result<bool> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    let records = run_sweep(&cfg)?;
    match out.or_else(|| cfg.output.path.clone().map(PathBuf::from)) {
        Some(path) => emit_csv(&records, &path)?,
        None => write_csv(&records, std::io::stdout().lock())?,
    }
    let failed: Vec<_> = records.iter().filter(|r| !r.is_ok()).collect();
    for r in &failed {
        eprintln!(
            "{} {}={}: {}",
            r.model.label(),
            r.sweep_var,
            r.sweep_value,
            r.status
        );
    }
    Ok(failed.is_empty())
}

fn validate_waveform(config: PathBuf) -> aco_alloc::Result<bool> {
    let cfg = ExperimentConfig::load(&config)?;
    let r = monte_carlo(&cfg.waveform_setup()?)?;
    let halving = (r.power_clipped - 0.5 * r.power_unclipped).abs() / (0.5 * r.power_unclipped);
    let checks = [
        ("imaginary residual", r.imag_max, 1e-12),
        ("antisymmetry", r.antisymmetry_max, 1e-9),
        ("odd-bin half amplitude", r.half_amplitude_max, 1e-9),
        ("clipped power halving", halving, 1e-2),
    ];
    println!("frames                 {}", r.frames);
    let mut ok = true;
    for (name, v, tol) in checks {
        let pass = v <= tol || (name == "clipped power halving" && r.power_unclipped == 0.0);
        ok &= pass;
        println!(
            "{name:<22} {v:.3e} (tol {tol:.0e}) {}",
            if pass { "ok" } else { "FAIL" }
        );
    }
    println!("optical mean           {:.6e}", r.optical_mean);
    println!(
        "sqrt(sum p/(pi N))     {:.6e}  ratio {:.4}",
        r.optical_reference,
        r.optical_mean / r.optical_reference
    );
    println!(
        "sqrt(sum p/(2 pi N))   {:.6e}  ratio {:.4}",
        r.optical_gaussian,
        r.optical_mean / r.optical_gaussian
    );
    println!("alphabet bound         {:.6e}", r.optical_bound);
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { config, out, seed } => run(config, out, seed),
        Cmd::ValidateWaveform { config } => validate_waveform(config),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
