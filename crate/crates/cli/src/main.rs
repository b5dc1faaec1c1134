use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lsm_core::config::presets;
use lsm_core::config::EnvKind;
use lsm_core::diagnostics::{
    fading_memory_probe, membrane_trace, random_stimulus, stability_report_with, EigenOptions,
};
use lsm_core::experiment::{derive_seed, evaluate_model, run_seed, topology_for, Stream};
use lsm_core::metrics::{metrics_csv, summarize, summary_csv, trace_csv};
use lsm_core::{ExperimentConfig, Model};

/// Liquid state machine agents: train, evaluate and diagnose.
#[derive(Parser)]
#[command(name = "lsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent per seed and write metrics, a summary and models.
    Train(TrainArgs),
    /// Roll out a saved model and write a per-step Q-value trace.
    Eval(EvalArgs),
    /// Spectrum, stability and membrane traces of a configured liquid.
    Diagnose(DiagnoseArgs),
    /// List bundled presets, or print one as TOML.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct ConfigSource {
    /// Experiment configuration (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration name (see `lsm presets`).
    #[arg(long)]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::from_file(path)
                .with_context(|| format!("loading {}", path.display())),
            (None, Some(name)) => Ok(ExperimentConfig::preset(name)?),
            (None, None) => bail!("either --config or --preset is required"),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds, trained in parallel.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Override the number of training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Model container written by `lsm train`.
    model: PathBuf,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Exploration rate; defaults to the model's evaluation epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace CSV destination.
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Seed of the liquid to inspect (same liquid as `train --seed`).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "diagnostics")]
    out: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn train(args: TrainArgs) -> Result<()> {
    let mut config = args.source.load()?;
    if let Some(epochs) = args.epochs {
        config.agent.epochs = epochs;
    }
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| -> Result<_> {
            let quiet = args.quiet;
            let out = run_seed(&config, seed, |m| {
                if !quiet {
                    eprintln!(
                        "seed {seed} epoch {:>4}  eval {:>8.2}  train {:>8.2}  eps {:.3}  loss {:.4}",
                        m.epoch, m.eval_reward, m.train_reward, m.epsilon, m.loss
                    );
                }
            })
            .with_context(|| format!("training seed {seed}"))?;
            let dir = args.out.join(format!("seed-{seed}"));
            fs::create_dir_all(&dir)?;
            write(&dir.join("metrics.csv"), &metrics_csv(&out.metrics))?;
            out.model.save(dir.join("model.json"))?;
            Ok(out.metrics)
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&runs);
    write(&args.out.join("summary.csv"), &summary_csv(&summary))?;
    if let Some(last) = summary.last() {
        println!(
            "{}: {} seed(s), final epoch median eval reward {:.2} (p25 {:.2}, p75 {:.2})",
            config.name, last.seeds, last.median, last.p25, last.p75
        );
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let model =
        Model::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let epsilon = args.epsilon.unwrap_or(model.config.agent.eval_epsilon);
    if !(0.0..=1.0).contains(&epsilon) {
        bail!("--epsilon must lie in [0, 1]");
    }
    let (stats, trace) = evaluate_model(&model, args.steps, epsilon, args.seed)?;
    write(&args.out, &trace_csv(&trace, model.readout.actions()))?;
    println!(
        "{} steps, {} finished gameplays, mean reward {:.2}, median {:.2}",
        stats.steps,
        stats.gameplay_rewards.len(),
        stats.mean_reward(),
        stats.median_reward()
    );
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let config = args.source.load()?;
    let d = &config.diagnostics;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let topology = topology_for(&config, args.seed)?;
    let options = EigenOptions {
        max_order: d.max_order,
        ..EigenOptions::default()
    };
    let report = stability_report_with(&topology, options)?;
    write(
        &args.out.join("eigenvalues.json"),
        &serde_json::to_string_pretty(&report.eigenvalues)?,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, Stream::EvalLiquid));
    let phi_max = match config.env.kind {
        EnvKind::Cartpole => config.env.cartpole.phi_max,
        EnvKind::Pacman => config.env.pacman.phi_max,
    };
    let stimulus = random_stimulus(topology.n_input(), phi_max, d.stimulus_density, &mut rng);
    let probe = fading_memory_probe(
        &topology,
        &config.liquid,
        &stimulus,
        d.stimulus_ms,
        d.silence_ms,
        &mut rng,
    )?;

    let neurons: Vec<usize> = rand::seq::index::sample(
        &mut rng,
        topology.n_exc(),
        d.trace_neurons.min(topology.n_exc()),
    )
    .into_vec();
    let traces = membrane_trace(
        &topology,
        &config.liquid,
        &stimulus,
        &neurons,
        d.trace_ms,
        &mut rng,
    )?;
    write(
        &args.out.join("traces.csv"),
        &traces_csv(&neurons, &traces, config.liquid.dt),
    )?;

    let verdict = if report.stable && probe.stable {
        "stable"
    } else {
        "unstable"
    };
    let stability = serde_json::json!({
        "schema": "lsm-stability v1",
        "seed": args.seed,
        "verdict": verdict,
        "spectral_radius": report.spectral_radius,
        "inside_unit_circle_fraction": report.inside_unit_circle_fraction,
        "eigenvalues_outside_unit_circle": report.outside_unit_circle(),
        "spectrum_stable": report.stable,
        "activity_stable": probe.stable,
        "memoryless": !probe.fading_memory,
        "response_tail_ms": probe.response_tail_ms,
        "spikes_during_stimulus": probe.total_spikes_during_stimulus,
        "spikes_during_silence": probe.total_spikes_during_silence,
    });
    write(
        &args.out.join("stability.json"),
        &serde_json::to_string_pretty(&stability)?,
    )?;
    println!(
        "{verdict}: spectral radius {:.4}, {:.1}% of eigenvalues inside the unit circle, activity tail {} ms{}",
        report.spectral_radius,
        100.0 * report.inside_unit_circle_fraction,
        probe.response_tail_ms,
        if probe.fading_memory { "" } else { " (memoryless)" }
    );
    Ok(())
}

fn traces_csv(neurons: &[usize], traces: &[Vec<f64>], dt: f64) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("# schema: lsm-membrane v1\n");
    let cols: Vec<String> = neurons.iter().map(|n| format!("v{n}")).collect();
    writeln!(out, "t_ms,{}", cols.join(",")).unwrap();
    let steps = traces.first().map_or(0, Vec::len);
    for k in 0..steps {
        let row: Vec<String> = traces.iter().map(|t| t[k].to_string()).collect();
        writeln!(out, "{},{}", (k + 1) as f64 * dt, row.join(",")).unwrap();
    }
    out
}

fn show_presets(name: Option<String>) -> Result<()> {
    match name {
        None => presets::NAMES.iter().for_each(|n| println!("{n}")),
        Some(n) => match presets::get(&n) {
            Some(text) => print!("{text}"),
            None => bail!("unknown preset `{n}`"),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Presets { name } => show_presets(name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
