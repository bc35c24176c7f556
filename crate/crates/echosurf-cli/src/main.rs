//! Command-line front end: `simulate`, `train`, `sound`, `sweep`, `report`.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use echosurf::beamform::{train_joint, LinkModel};
use echosurf::config::HarnessConfig;
use echosurf::metrics::MethodTag;
use echosurf::seed;
use echosurf::sweep::{
    run_sounding_eval, run_sweep, run_trial, write_sounding, write_sweep, SweepPoint,
};

#[derive(Parser)]
#[command(name = "echosurf", version, about = "Reflecting-surface link simulator and trainer")]
struct Cli {
    /// Harness config file (documented defaults when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 = library default).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one link with one method and print its metrics.
    Simulate {
        /// rc | model_based
        #[arg(long, default_value = "rc")]
        method: String,
    },
    /// Train the learned design on one link and dump the loss trace.
    Train,
    /// Run the channel-sounding evaluation grid.
    Sound,
    /// Run the full Monte-Carlo grid and write results.csv / summary.csv.
    Sweep,
    /// Summarize a results.csv into a gnuplot-ready table.
    Report {
        /// Path to a results.csv produced by `sweep`.
        #[arg(long)]
        input: PathBuf,
    },
}

fn load(cli: &Cli) -> Result<HarnessConfig> {
    let mut cfg = match &cli.config {
        Some(path) => echosurf::config::load_config(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => HarnessConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    Ok(cfg)
}

/// The single point `simulate` and `train` operate on, synthesized from the
/// [scenario] and [surface] sections.
fn single_point(cfg: &HarnessConfig) -> SweepPoint {
    let impairment = match cfg.surface.mode {
        echosurf::surface::SurfaceMode::Ideal => 0.0,
        echosurf::surface::SurfaceMode::Impaired => cfg.surface.memory_coeff.unwrap_or(0.3),
    };
    SweepPoint {
        n_atoms: cfg.scenario.atoms,
        snr_db: -10.0 * cfg.scenario.noise_power.max(1e-300).log10(),
        impairment,
        csi_error: cfg.sweep.csi_error.first().copied().unwrap_or(0.0),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load(&cli)?;
    let threads = cfg.run.threads;

    match &cli.command {
        Command::Simulate { method } => {
            let tag = MethodTag::from_name(method)
                .with_context(|| format!("unknown method `{method}` (rc | model_based)"))?;
            let point = single_point(&cfg);
            let mut run_cfg = cfg.clone();
            run_cfg.sweep.methods = vec![tag];
            let rows = run_trial(&run_cfg, &point, 0, 0)?;
            let row = &rows[0];
            println!("method            {}", row.method.name());
            println!("atoms             {}", row.n_atoms);
            println!("snr_db            {}", row.snr_db);
            println!("impairment        {}", row.impairment);
            println!("csi_error         {}", row.csi_error);
            println!("ber               {}", row.ber);
            println!("sinr_db           {}", row.sinr_db);
            println!("se_bps_hz         {}", row.se_bps_hz);
            println!("ee_bits_per_joule {}", row.ee_bits_per_joule);
        }
        Command::Train => {
            let point = single_point(&cfg);
            let trial_seed = seed::derive_path(cfg.run.seed, &[0x71, 0, 0]);
            let scenario = cfg.scenario_for(point.n_atoms);
            let channels = echosurf::channel::make_channel_set(&scenario, seed::derive(trial_seed, 1))?;
            let frame_cfg = cfg.frame_config(seed::derive(trial_seed, 2))?;
            let frame = echosurf::frames::build_frame(&frame_cfg, &vec![0; frame_cfg.data_bit_len()])?;
            let blocks = echosurf::frames::split_frame(&frame);
            let surface = cfg.surface_for(point.n_atoms, point.impairment)?;
            let link = LinkModel::new(channels, surface, cfg.scenario.noise_power)?;
            let opts = cfg.train_options(seed::derive(trial_seed, 4));
            let out = train_joint(&link, &blocks.dmrs, &blocks.dmrs, &opts)?;

            std::fs::create_dir_all(&cli.out)?;
            let mut trace = String::from("iteration,best_loss\n");
            for (i, loss) in out.loss_trace.iter().enumerate() {
                trace.push_str(&format!("{i},{loss}\n"));
            }
            let path = cli.out.join("loss_trace.csv");
            std::fs::write(&path, trace)?;
            println!("continuous loss   {}", out.continuous_loss);
            println!("quantized loss    {}", out.quantized_loss);
            println!("converged         {}", out.converged);
            if let Some(d) = &out.diagnostic {
                println!("diagnostic        {d}");
            }
            println!("trace written to  {}", path.display());
        }
        Command::Sound => {
            let output = run_sounding_eval(&cfg, threads)?;
            write_sounding(&output, &cli.out)?;
            println!("wrote {}", cli.out.join("sounding.csv").display());
            println!("wrote {}", cli.out.join("sounding_summary.csv").display());
        }
        Command::Sweep => {
            let output = run_sweep(&cfg, threads)?;
            write_sweep(&output, &cli.out)?;
            println!("wrote {} ({} rows)", cli.out.join("results.csv").display(), output.rows.len());
            println!("wrote {}", cli.out.join("summary.csv").display());
        }
        Command::Report { input } => {
            let text = std::fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))?;
            let rows = echosurf::report::parse_results_csv(&text)?;
            if rows.is_empty() {
                bail!("no result rows in {}", input.display());
            }
            let summary = echosurf::report::summarize(&rows);
            let table = echosurf::report::gnuplot_layout(&summary);
            std::fs::create_dir_all(&cli.out)?;
            let path = cli.out.join("summary.txt");
            std::fs::write(&path, &table)?;
            print!("{table}");
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}
