use std::collections::BTreeMap;
use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use intent_core::config::Config;
use intent_core::goal::{self, Observation};
use intent_core::movement::{cross_validate, DecisionTree, LabeledDataset, Movement, TrainParams};
use intent_core::session::{serve, Session};
use intent_core::sim::{generate_traces, Goal, SimParams};
use intent_core::supervisor::{event_log, simulate, Models, TrialMetrics, TrialSpec};
use intent_core::world::Scenario;

#[derive(Parser)]
#[command(
    name = "intent",
    version,
    about = "Intention reading in a simulated kitchen"
)]
struct Cli {
    /// TOML file with thresholds, weights, ensemble parameters and seeds.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the movement tree on a directory of labeled `.trace` files.
    TrainTree {
        trace_dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Folds for the grouped cross-validation report.
        #[arg(long, default_value_t = 10)]
        folds: usize,
    },
    /// Write labeled traces of random routines.
    GenTraces {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Run one scripted goal through the pipeline.
    Simulate(SimulateArgs),
    /// Explain a comma-separated observation sequence with the plan library.
    Explain {
        #[arg(long)]
        obs: String,
    },
    /// Print plan-recognition and end-to-end result tables.
    Bench {
        #[arg(long, default_value_t = 5)]
        trials: u64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
    },
    /// Serve interactive steering sessions.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    goal: Goal,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_verify: bool,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Keep running after the commitment until the script ends.
    #[arg(long)]
    full: bool,
    /// Write the event log here instead of discarding it.
    #[arg(long)]
    log: Option<PathBuf>,
}

/// Trials of the plan-recognition table, in its row order.
const EXPLAIN_ROWS: &[&[&str]] = &[
    &["PickAndPlace"],
    &["PickAndPlace", "Eat"],
    &["PickAndPlace", "Sip"],
    &["PickAndPlace", "Cook"],
    &["PickAndPlace", "PickAndPlace"],
    &["PickAndPlace", "PickAndPlace", "Eat"],
    &["PickAndPlace", "PickAndPlace", "PickAndPlace"],
    &["PickAndPlace", "PickAndPlace", "Wash"],
    &["Sip"],
    &["Eat"],
    &["Wash"],
    &["Wash", "Cook"],
];

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::TrainTree {
            trace_dir,
            output,
            folds,
        } => train_tree(&config, &trace_dir, &output, folds),
        Command::GenTraces {
            output,
            trials,
            seed,
            noise,
        } => gen_traces(&config, &output, trials, seed, noise),
        Command::Simulate(args) => run_simulate(&config, &args),
        Command::Explain { obs } => {
            let symbols: Vec<&str> = obs
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect();
            print_explain_header();
            explain_row(&config, &symbols)
        }
        Command::Bench { trials, noise } => bench(&config, trials, noise),
        Command::Serve { port, host } => run_serve(&config, &host, port),
    }
}

fn train_tree(config: &Config, dir: &Path, output: &Path, folds: usize) -> Result<()> {
    let p = &config.pipeline;
    let data = LabeledDataset::from_trace_dir(dir, &p.qsr, &p.focus)
        .with_context(|| format!("reading traces from {}", dir.display()))?;
    let counts = data.class_counts();
    println!(
        "{} rows from {} trials",
        data.rows.len(),
        data.trials().len()
    );
    for m in Movement::ALL {
        println!("  {:<10} {}", m.as_str(), counts[m.index()]);
    }
    let params = TrainParams::default();
    if data.trials().len() >= folds {
        let cv = cross_validate(&data, folds, &params)?;
        println!("grouped {}-fold accuracy: {:.4}", cv.folds, cv.accuracy);
    }
    let tree = DecisionTree::train(&data, &params)?;
    fs::write(output, tree.to_document())
        .with_context(|| format!("writing {}", output.display()))?;
    println!(
        "tree with {} leaves written to {}",
        tree.leaf_count(),
        output.display()
    );
    Ok(())
}

fn gen_traces(
    config: &Config,
    out: &Path,
    trials: u32,
    seed: Option<u64>,
    noise: Option<f64>,
) -> Result<()> {
    let scenario = config.scenario()?;
    let params = SimParams {
        seed: seed.unwrap_or(config.sim.seed),
        noise_sigma: noise.unwrap_or(config.sim.noise_sigma),
        ..config.sim
    };
    fs::create_dir_all(out)?;
    for (i, trace) in generate_traces(&scenario, trials, &params)?
        .iter()
        .enumerate()
    {
        let path = out.join(format!("trial_{i:03}.trace"));
        fs::write(&path, trace.to_log())?;
    }
    println!("{trials} traces written to {}", out.display());
    Ok(())
}

fn load_models(config: &Config, scenario: &Scenario) -> Result<Arc<Models>> {
    Ok(Arc::new(config.models(scenario)?))
}

fn run_simulate(config: &Config, args: &SimulateArgs) -> Result<()> {
    let scenario = config.scenario()?;
    let models = load_models(config, &scenario)?;
    let spec = TrialSpec {
        goal: args.goal,
        seed: args.seed,
        verify: !args.no_verify,
        noise_sigma: args.noise,
    };
    let (metrics, events) = simulate(models, &config.pipeline, &scenario, &spec, !args.full)?;
    if let Some(path) = &args.log {
        fs::write(path, event_log(&events))?;
    }
    print_trial_header();
    print_trial(&metrics);
    Ok(())
}

fn print_trial_header() {
    println!(
        "{:<10} {:>4} {:<8} {:<10} {:>8} {:>6} {:>7} {:>7} {:>9} {:>9}",
        "goal",
        "seed",
        "verified",
        "predicted",
        "observed",
        "missed",
        "waiting",
        "planned",
        "commit_t",
        "time_s"
    );
}

fn print_trial(m: &TrialMetrics) {
    println!(
        "{:<10} {:>4} {:<8} {:<10} {:>8} {:>6} {:>7} {:>7} {:>9} {:>9.4}",
        m.goal.as_str(),
        m.seed,
        if m.verified { "yes" } else { "no" },
        m.predicted.as_deref().unwrap_or("-"),
        m.observed,
        m.missed,
        m.waiting,
        m.planned,
        m.commit_tick.map_or("-".to_string(), |t| t.to_string()),
        m.inference_time_s,
    );
}

fn print_explain_header() {
    println!(
        "{:<42} {:>12} {:>10} {:<10} {:<10} {:>10}",
        "observations", "explanations", "confidence", "top", "commit", "time_us"
    );
}

fn explain_row(config: &Config, symbols: &[&str]) -> Result<()> {
    let plans = config.plans()?;
    for s in symbols {
        if !plans.terminals.iter().any(|t| t == s) {
            bail!("`{s}` is not an action of the plan library");
        }
    }
    let observations: Vec<Observation> = symbols.iter().map(|s| Observation::symbol(*s)).collect();
    let start = Instant::now();
    let ranked = goal::explain(&plans, &observations);
    let committed = goal::best(&ranked, &config.pipeline.commit);
    let micros = start.elapsed().as_secs_f64() * 1e6;
    let top = ranked.first();
    println!(
        "{:<42} {:>12} {:>10} {:<10} {:<10} {:>10.1}",
        format!("[{}]", symbols.join(", ")),
        ranked.len(),
        top.map_or("-".to_string(), |e| format!("{:.4}", e.confidence)),
        top.map_or("-", |e| e.goal.as_str()),
        committed.map_or("-", |i| ranked[i].goal.as_str()),
        micros,
    );
    Ok(())
}

fn bench(config: &Config, trials: u64, noise: f64) -> Result<()> {
    println!("plan recognition");
    print_explain_header();
    for row in EXPLAIN_ROWS {
        explain_row(config, row)?;
    }

    let scenario = config.scenario()?;
    let models = load_models(config, &scenario)?;
    for verify in [true, false] {
        println!();
        println!(
            "end to end, {} trials per goal, noise {noise}, {}",
            trials,
            if verify { "verified" } else { "not verified" }
        );
        println!(
            "{:<10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>10} {:>8}",
            "goal", "observed", "missed", "waiting", "planned", "accuracy", "commit_t", "time_s"
        );
        for goal in Goal::ALL {
            let mut runs = Vec::new();
            for seed in 0..trials {
                let spec = TrialSpec {
                    goal,
                    seed,
                    verify,
                    noise_sigma: noise,
                };
                runs.push(simulate(models.clone(), &config.pipeline, &scenario, &spec, true)?.0);
            }
            let n = runs.len().max(1) as f64;
            let mean = |f: &dyn Fn(&TrialMetrics) -> f64| runs.iter().map(f).sum::<f64>() / n;
            println!(
                "{:<10} {:>8.1} {:>8.1} {:>8.1} {:>8.1} {:>7.0}% {:>10.1} {:>8.4}",
                goal.as_str(),
                mean(&|m| m.observed as f64),
                mean(&|m| m.missed as f64),
                mean(&|m| m.waiting as f64),
                mean(&|m| m.planned as f64),
                100.0 * mean(&|m| m.correct as u8 as f64),
                mean(&|m| m.commit_tick.unwrap_or(m.ticks) as f64),
                mean(&|m| m.inference_time_s),
            );
        }
    }
    Ok(())
}

fn run_serve(config: &Config, host: &str, port: u16) -> Result<()> {
    let scenario = config.scenario()?;
    let models = load_models(config, &scenario)?;
    let name = scenario.id.clone();
    let mut scenarios = BTreeMap::new();
    scenarios.insert(name.clone(), scenario);
    let scenarios = Arc::new(scenarios);
    let listener =
        TcpListener::bind((host, port)).with_context(|| format!("binding {host}:{port}"))?;
    println!("serving `{name}` on {}", listener.local_addr()?);
    let pipeline = config.pipeline.clone();
    let sim = config.sim;
    serve(listener, move || {
        Session::new(
            models.clone(),
            pipeline.clone(),
            sim,
            scenarios.clone(),
            &name,
        )
    })?;
    Ok(())
}
