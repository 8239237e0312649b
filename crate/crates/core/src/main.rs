//! Command-line front end: Monte Carlo sweeps, per-channel waveform
//! profiles, and a numeric self-test of the DC proxy.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wptsim::channel::PowerDelayProfile;
use wptsim::designers::design_smf;
use wptsim::error::{Error, Result};
use wptsim::harness::{
    centered_grid, channel_from_json, channel_to_json, default_profile_strategies, run_sweep,
    waveform_profile, ExperimentConfig, Strategy,
};
use wptsim::metrics::{z_dc, z_dc_smf_closed_form, z_dc_time_domain_oracle, DiodeParams};
use wptsim::signal::{FrequencyGrid, PowerBudget, Waveform};

#[derive(Parser)]
#[command(
    name = "wptsim",
    version,
    about = "Multisine waveform design and Monte Carlo evaluation for wireless power transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep tone counts and strategies over random channels, write CSV.
    Sweep {
        /// Experiment config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON mirror of the sweep table.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Worker threads for realizations (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Tabulate per-tone channel gains and strategy amplitudes for one channel.
    Profile {
        /// Experiment config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Draw the channel from this seed (default: the config seed).
        #[arg(long)]
        channel_seed: Option<u64>,
        /// Replay a dumped channel instead of drawing one.
        #[arg(long, conflicts_with = "channel_seed")]
        channel_file: Option<PathBuf>,
        /// Tone count of the profile grid.
        #[arg(long, default_value_t = 16)]
        n_tones: usize,
        /// Comma-separated strategies (default: smf:1,smf:3,opt).
        #[arg(long)]
        strategies: Option<String>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Dump the channel that was used, for later replay.
        #[arg(long)]
        dump_channel: Option<PathBuf>,
    },
    /// Run the oracle-equivalence self-test of the DC proxy.
    Validate {
        /// Random instances per check.
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            json,
            workers,
        } => cmd_sweep(config, out, json, workers),
        Command::Profile {
            config,
            channel_seed,
            channel_file,
            n_tones,
            strategies,
            out,
            dump_channel,
        } => cmd_profile(
            config,
            channel_seed,
            channel_file,
            n_tones,
            strategies,
            out,
            dump_channel,
        ),
        Command::Validate { instances, seed } => cmd_validate(instances, seed),
    }
}

fn load_config(path: Option<PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(path) => ExperimentConfig::load(&path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn cmd_sweep(
    config: Option<PathBuf>,
    out: PathBuf,
    json: Option<PathBuf>,
    workers: usize,
) -> Result<()> {
    let cfg = load_config(config)?;
    let result = if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| run_sweep(&cfg))?
    } else {
        run_sweep(&cfg)?
    };
    fs::write(&out, result.to_csv())?;
    println!("wrote {} rows to {}", result.rows.len(), out.display());
    if let Some(path) = json {
        fs::write(&path, result.to_json())?;
        println!("wrote JSON mirror to {}", path.display());
    }
    Ok(())
}

fn cmd_profile(
    config: Option<PathBuf>,
    channel_seed: Option<u64>,
    channel_file: Option<PathBuf>,
    n_tones: usize,
    strategies: Option<String>,
    out: PathBuf,
    dump_channel: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let grid = centered_grid(cfg.center_frequency_hz, cfg.bandwidth_hz, n_tones)?;
    let seed = channel_seed.unwrap_or(cfg.seed);
    let channel = match channel_file {
        Some(path) => channel_from_json(&fs::read_to_string(path)?)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            cfg.power_delay_profile()?.sample_channel(&mut rng)
        }
    };
    let resp = channel.frequency_response(&grid);
    let strategies: Vec<Strategy> = match strategies {
        Some(text) => text
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_>>()?,
        None => default_profile_strategies(),
    };
    // Separate stream from the channel draw, still keyed by the seed.
    let mut opt_rng = ChaCha8Rng::seed_from_u64(seed);
    opt_rng.set_stream(1);
    let table = waveform_profile(
        &grid,
        &resp,
        &strategies,
        PowerBudget::new(1.0)?,
        &cfg.diode_params()?,
        &cfg.beta_search,
        &cfg.opt_search,
        &mut opt_rng,
    )?;
    fs::write(&out, table.to_csv())?;
    println!(
        "wrote {}-tone profile ({} strategies) to {}",
        n_tones,
        strategies.len(),
        out.display()
    );
    if let Some(path) = dump_channel {
        fs::write(&path, channel_to_json(&channel))?;
        println!("dumped channel to {}", path.display());
    }
    Ok(())
}

fn cmd_validate(instances: usize, seed: u64) -> Result<()> {
    let diode = DiodeParams::default();
    let budget = PowerBudget::new(1.0)?;
    let pdp = PowerDelayProfile::default_exponential(1e-5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();

    // Time-domain moments vs the quadruple closed form.
    let mut max_oracle_err = 0.0f64;
    for i in 0..instances {
        let n = [1usize, 2, 4, 8][i % 4];
        let k = 2 * n;
        let grid = FrequencyGrid::new(k as f64, 1.0, n)?;
        let phys_grid = centered_grid(5.18e9, 10e6, n)?;
        let resp = pdp.sample_channel(&mut rng).frequency_response(&phys_grid);
        let amps: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
            .collect();
        let phases: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
        let w = Waveform::new(amps, phases)?.scaled_to_power(budget)?;
        let closed = z_dc(&w, &resp, &diode)?;
        let sampled = z_dc_time_domain_oracle(&w, &resp, &grid, &diode, 16 * (k + n))?;
        max_oracle_err = max_oracle_err.max((sampled - closed).abs() / closed);
    }
    report(
        "time-domain oracle vs closed form",
        max_oracle_err,
        1e-6,
        instances,
        &mut failures,
    );

    // SMF closed form vs the generic evaluation of the SMF design.
    let mut max_smf_err = 0.0f64;
    for i in 0..instances {
        let n = [2usize, 4, 8, 16][i % 4];
        let grid = centered_grid(5.18e9, 10e6, n)?;
        let resp = pdp.sample_channel(&mut rng).frequency_response(&grid);
        for beta in [1.0, 2.0, 3.0, 5.0] {
            let direct = z_dc_smf_closed_form(beta, &resp, budget, &diode)?;
            let generic = z_dc(&design_smf(&resp, budget, beta)?, &resp, &diode)?;
            max_smf_err = max_smf_err.max((direct - generic).abs() / generic);
        }
    }
    report(
        "SMF closed form vs generic evaluation",
        max_smf_err,
        1e-10,
        instances,
        &mut failures,
    );

    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::SelfTest(failures.join("; ")))
    }
}

fn report(name: &str, max_err: f64, tolerance: f64, instances: usize, failures: &mut Vec<String>) {
    if max_err <= tolerance {
        println!("PASS {name}: max relative error {max_err:.3e} over {instances} instances (tolerance {tolerance:.0e})");
    } else {
        println!("FAIL {name}: max relative error {max_err:.3e} exceeds {tolerance:.0e}");
        failures.push(format!("{name}: {max_err:.3e} > {tolerance:.0e}"));
    }
}
