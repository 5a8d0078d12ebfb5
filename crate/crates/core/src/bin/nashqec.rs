use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nashqec::circuits::{emit_circuit_text, parse_circuit_text, preparation_circuit, syndrome_pass};
use nashqec::code::{Backend, VERIFY_BUDGET};
use nashqec::error::{Error, Result};
use nashqec::objectives::Registry;
use nashqec::runner::{
    analyze, check_matrix_from, discover, distance_report, load_graph, load_trajectory, noise_csv, pareto_csv,
    pareto_from_summaries, simulate, write_analysis, write_discover, RunConfig,
};

#[derive(Parser)]
#[command(name = "nashqec", version, about = "Game-theoretic search for graph-state quantum codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides the config)
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory or file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run parallel discovery trials
    Discover {
        #[command(flatten)]
        common: Common,
        /// Number of trials (overrides the config)
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Phases, equilibrium and replay check of a trajectory log
    Analyze {
        trajectory: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo logical error rate under depolarizing noise
    Simulate {
        /// Edge-list graph file (input-output code)
        #[arg(long, conflicts_with = "fixture")]
        graph: Option<PathBuf>,
        /// Built-in fixture: pentagon or surface3
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long, default_value = "input_output")]
        backend: String,
        /// Physical error rates, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.003, 0.01, 0.03])]
        p_grid: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a preparation or syndrome circuit, or validate a circuit file
    Circuit {
        /// Edge-list graph file, or a .qct file with --check
        input: PathBuf,
        /// Emit one syndrome pass over these vertices instead of preparation
        #[arg(long, value_delimiter = ',')]
        syndrome: Option<Vec<usize>>,
        /// Parse the input as a circuit file and report its metrics
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Pareto front over (rate, distance) from run summaries
    Pareto {
        summaries: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Distance of a graph code at the strongest affordable certainty
    Distance {
        graph: PathBuf,
        #[arg(long, default_value = "input_output")]
        backend: String,
        #[arg(long, default_value_t = VERIFY_BUDGET)]
        budget: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_backend(name: &str) -> Result<Backend> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| Error::Config(format!("unknown backend `{name}`")))
}

fn unused(common: &Common, what: &str) -> Result<()> {
    if common.config.is_some() || common.workers.is_some() {
        return Err(Error::Config(format!("{what} takes no --config or --workers")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let registry = Registry::default();
    match cli.command {
        Command::Discover { common, trials } => {
            let path = common
                .config
                .ok_or_else(|| Error::Config("discover needs --config".into()))?;
            let mut cfg = RunConfig::load(&path)?;
            if let Some(s) = common.seed {
                cfg.master_seed = s;
            }
            if let Some(w) = common.workers {
                cfg.workers = w;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if common.out.is_some() {
                cfg.out = common.out;
            }
            let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("runs/latest"));
            let out = discover(&cfg, &registry)?;
            write_discover(&out_dir, &cfg, &out)?;
            let b = &out.summary.best;
            println!(
                "best trial {}: [[{},{},{}]] ({}) reward {:.4} max degree {}; {} of {} trials at verified equilibrium; wrote {}",
                out.summary.best_trial,
                b.n,
                b.k,
                b.d,
                nashqec::runner::certainty_label(b.d_certainty),
                b.reward,
                b.max_degree,
                out.summary.equilibrium.verified,
                out.summary.equilibrium.trials,
                out_dir.display()
            );
        }
        Command::Analyze { trajectory, common } => {
            unused(&common, "analyze")?;
            let a = analyze(&load_trajectory(&trajectory)?, &registry)?;
            match &common.out {
                Some(dir) => write_analysis(dir, &a)?,
                None => print_json(&a),
            }
            if a.replay_consistent == Some(false) {
                return Err(Error::Trajectory("logged rewards do not match replay".into()));
            }
        }
        Command::Simulate {
            graph,
            fixture,
            backend,
            p_grid,
            trials,
            common,
        } => {
            unused(&common, "simulate")?;
            let g = graph.as_deref().map(load_graph).transpose()?;
            let cm = check_matrix_from(g.as_ref(), parse_backend(&backend)?, fixture.as_deref())?;
            let sweep = simulate(&cm, &p_grid, trials, common.seed.unwrap_or(0))?;
            let csv = noise_csv(&sweep.results);
            match &common.out {
                Some(path) => write_file(path, &csv)?,
                None => print!("{csv}"),
            }
            match sweep.slope {
                Some(s) => eprintln!("[[{},{}]] slope {s:.3}", sweep.n, sweep.k),
                None => eprintln!("[[{},{}]] slope unavailable", sweep.n, sweep.k),
            }
        }
        Command::Circuit {
            input,
            syndrome,
            check,
            common,
        } => {
            unused(&common, "circuit")?;
            let circuit = if check {
                let text = fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
                parse_circuit_text(&text)?
            } else {
                let g = load_graph(&input)?;
                match syndrome {
                    Some(vs) => syndrome_pass(&g, &vs)?,
                    None => preparation_circuit(&g),
                }
            };
            eprintln!(
                "qubits {} gates {} depth {} cz {} cz_depth {}",
                circuit.n_qubits(),
                circuit.len(),
                circuit.depth(),
                circuit.cz_count(),
                circuit.cz_depth()
            );
            let text = emit_circuit_text(&circuit);
            match &common.out {
                Some(path) => write_file(path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Pareto { summaries, common } => {
            unused(&common, "pareto")?;
            let front = pareto_from_summaries(&summaries)?;
            let csv = pareto_csv(&front);
            match &common.out {
                Some(path) => write_file(path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Distance {
            graph,
            backend,
            budget,
            common,
        } => {
            unused(&common, "distance")?;
            let report = distance_report(&load_graph(&graph)?, parse_backend(&backend)?, budget)?;
            print_json(&report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
