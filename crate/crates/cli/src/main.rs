use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rtdrl::harness::{emit_report, run_experiment, sweep, write_sweep, Axis, Policy, RunConfig, RunError};
use rtdrl::tinynet::{gradient_check, Algorithm, Mlp, QLearnerConfig, TrainingBatch};

#[derive(Parser)]
#[command(name = "rtdrl", version, about = "Deadline- and memory-governed deep Q-learning runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        policy: Option<Policy>,
        /// End-to-end deadline in seconds.
        #[arg(long)]
        deadline: Option<f64>,
        /// Data budget in environment steps.
        #[arg(long)]
        budget: Option<u64>,
        /// Total memory budget in bytes.
        #[arg(long)]
        memory_budget: Option<u64>,
        #[arg(long, value_parser = parse_algo)]
        algo: Option<Algorithm>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run one experiment per value with the swept quantity pinned.
    Sweep {
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Seeds per value; rows report medians.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
    },
    /// Compare backpropagation with finite differences on random networks.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        networks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    match s {
        "dqn" => Ok(Algorithm::Dqn),
        "ddqn" => Ok(Algorithm::Ddqn),
        _ => Err(format!("unknown algorithm '{s}' (expected dqn or ddqn)")),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<RunError>().map_or(1, RunError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, seed, policy, deadline, budget, memory_budget, algo, out_dir } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.policy = policy.unwrap_or(cfg.policy);
            cfg.deadline_s = deadline.unwrap_or(cfg.deadline_s);
            cfg.data_budget = budget.unwrap_or(cfg.data_budget);
            cfg.memory_budget = memory_budget.unwrap_or(cfg.memory_budget);
            cfg.algo = algo.unwrap_or(cfg.algo);
            let report = run_experiment(&cfg)?;
            emit_report(&report, &out_dir)?;
            let s = &report.summary;
            println!(
                "{} seed={} episodes={} latency={:.2}s miss_rate={:.3} avg_reward={:.1} final_reward={:.1} oom_events={} stop={:?}",
                s.policy.name(),
                s.seed,
                s.episodes,
                s.total_latency_s,
                s.miss_rate,
                s.avg_reward,
                s.final_reward,
                s.oom_events,
                s.stop_reason
            );
            println!("report written to {}", out_dir.display());
        }
        Command::Sweep { axis, values, config, out_dir, seeds } => {
            let cfg = RunConfig::load(&config)?;
            let rows = sweep(&cfg, axis, &values, seeds)?;
            write_sweep(&rows, &out_dir)?;
            println!("value,latency_s,peak_bytes,avg_reward,final_reward,per_step_ms");
            for r in &rows {
                println!(
                    "{},{:.3},{},{:.2},{:.2},{:.4}",
                    r.value, r.latency_s, r.peak_bytes, r.avg_reward, r.final_reward, r.per_step_ms
                );
            }
        }
        Command::Gradcheck { networks, seed } => {
            let worst = gradcheck(networks, seed)?;
            println!("max relative error over {networks} networks: {worst:.3e}");
            if worst > 1e-4 {
                anyhow::bail!("gradient check failed: {worst:.3e} > 1e-4");
            }
        }
    }
    Ok(())
}

fn gradcheck(networks: usize, seed: u64) -> anyhow::Result<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..networks {
        let input = rng.gen_range(2..8);
        let hidden: Vec<usize> = (0..rng.gen_range(1..3)).map(|_| rng.gen_range(3..12)).collect();
        let n_actions = rng.gen_range(2..5);
        let mut net = Mlp::new(input, &hidden, n_actions, &mut rng);
        for layer in net.layers_mut() {
            layer.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        }
        let len = rng.gen_range(1..9);
        let batch = TrainingBatch {
            len,
            states: (0..len * input).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            actions: (0..len).map(|_| rng.gen_range(0..n_actions)).collect(),
            rewards: (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            next_states: (0..len * input).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            dones: (0..len).map(|_| rng.gen_bool(0.3)).collect(),
        };
        let cfg = QLearnerConfig { algorithm: if k % 2 == 0 { Algorithm::Ddqn } else { Algorithm::Dqn }, ..Default::default() };
        let report = gradient_check(&net, &batch, &cfg).context("gradient check")?;
        worst = worst.max(report.max_rel_error);
    }
    Ok(worst)
}
