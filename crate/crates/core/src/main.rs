use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use alice_core::evaluator::{self, collect_coverage};
use alice_core::evidence::archive::{self, Archived};
use alice_core::evidence::Transition;
use alice_core::explorer::{Encoder, Featurizer};
use alice_core::orchestrator::{self, RunConfig};
use alice_core::runtime::{self, ProcessJudge, Program, RuntimeDescriptor};
use anyhow::{bail, Context, Result};
use baba_sim::{Action, LabelMode, Simulator};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alice", version, about = "Online executable world-model learning on rule-mutable grid puzzles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Step a level through a list of actions and print each state.
    Simulate {
        #[arg(long)]
        level: String,
        /// Comma-separated actions, e.g. right,right,up.
        #[arg(long, default_value = "")]
        actions: String,
        #[arg(long, default_value = "default", value_parser = parse_labels)]
        labels: LabelMode,
    },
    /// Write a BFS coverage archive over one or more levels.
    CollectCoverage {
        /// Level name or file; repeatable. Defaults to every bundled level.
        #[arg(long = "level")]
        levels: Vec<String>,
        #[arg(long, default_value_t = 5000)]
        cap: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "default", value_parser = parse_labels)]
        labels: LabelMode,
    },
    /// Run the closed loop from a config file.
    RunOnline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Learn from a training archive in order and evaluate on another.
    RunOffline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        eval: PathBuf,
    },
    /// Evaluate a program on an archive.
    Eval {
        /// Program source file. Optional when the command needs no source.
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        /// Command that runs the program; `{source}` is replaced by its path.
        #[arg(long, default_value = "python3 {source}")]
        command: String,
        /// Also report accuracy on the class-reduced subset.
        #[arg(long)]
        balanced: bool,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        call_timeout_ms: u64,
    },
    /// Embed the transitions of a run's training archive with its encoder.
    ExportEmbeddings {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the built-in simulator over the prediction protocol on stdin/stdout.
    ServeOracle {
        #[arg(long, default_value = "default", value_parser = parse_labels)]
        labels: LabelMode,
    },
}

fn parse_labels(s: &str) -> Result<LabelMode, String> {
    LabelMode::parse(s).ok_or_else(|| format!("unknown label mode {s:?} (default, wonderland)"))
}

fn load_level(name: &str, labels: LabelMode) -> Result<(String, baba_sim::WorldState)> {
    let level = match baba_sim::levels::bundled(name) {
        Some(l) => l,
        None => baba_sim::load_level(name)?,
    };
    Ok((level.name, labels.label_map().apply(&level.state)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { level, actions, labels } => {
            let (_, mut state) = load_level(&level, labels)?;
            let sim = Simulator::new(labels.label_map());
            let out = io::stdout();
            let mut out = BufWriter::new(out.lock());
            writeln!(out, "{}", baba_sim::encode_json(&state))?;
            for a in actions.split(',').map(str::trim).filter(|a| !a.is_empty()) {
                let action = Action::parse(a).with_context(|| format!("unknown action {a:?}"))?;
                state = sim.step(&state, action);
                writeln!(out, "{}", baba_sim::encode_json(&state))?;
            }
        }
        Command::CollectCoverage { levels, cap, out, labels } => {
            let names: Vec<String> =
                if levels.is_empty() { baba_sim::levels::names().map(str::to_string).collect() } else { levels };
            let loaded = names.iter().map(|n| load_level(n, labels)).collect::<Result<Vec<_>>>()?;
            let archived = collect_coverage(&loaded, &Simulator::new(labels.label_map()), cap);
            archive::write_records(&out, archived.iter().map(Archived::record))?;
            eprintln!("wrote {} transitions to {}", archived.len(), out.display());
        }
        Command::RunOnline { config } => {
            let outcome = orchestrator::run_online(&RunConfig::load(&config)?)?;
            println!("{}", serde_json::to_string_pretty(&outcome.report)?);
        }
        Command::RunOffline { config, train, eval } => {
            let outcome = orchestrator::run_offline(&RunConfig::load(&config)?, &train, &eval)?;
            println!("{}", serde_json::to_string_pretty(&outcome.report)?);
        }
        Command::Eval { program, dataset, command, balanced, report, seed, call_timeout_ms } => {
            let source = match &program {
                Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                None if command.contains("{source}") => bail!("--program is required when the command uses {{source}}"),
                None => String::new(),
            };
            let mut rt = RuntimeDescriptor::default().with_command_line(&command);
            rt.call_timeout_ms = call_timeout_ms;
            let judge = ProcessJudge::new(rt);
            let data: Vec<Transition> = archive::read_archive(&dataset)?.iter().map(Archived::transition).collect();
            if data.is_empty() {
                bail!("dataset {} is empty", dataset.display());
            }
            let r = evaluator::evaluate(&judge, &Program::new(source), &data, seed);
            if let Some(path) = report {
                std::fs::write(&path, serde_json::to_string_pretty(&r)?)?;
            }
            if balanced {
                print!("{}", r.table());
            } else {
                println!("all          {:.4}  ({}/{})", r.all_acc, r.matches, r.total);
            }
        }
        Command::ExportEmbeddings { run, out } => {
            let config = RunConfig::load(&run.join("config.toml"))?;
            let encoder = Encoder::load(&run.join("explorer/encoder.bin"))?;
            let featurizer = Featurizer::new(encoder.shape().input, config.label_mode.label_map());
            let data = archive::read_archive(&run.join("archives/train.jsonl"))?;
            let feats: Vec<_> = data.iter().map(|t| featurizer.featurize(&t.state, t.action)).collect();
            let emb = encoder.embed_many(&feats);
            let mut w = BufWriter::new(std::fs::File::create(out.with_extension("f64"))?);
            for v in emb.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
            w.flush()?;
            let rows: Vec<_> = data
                .iter()
                .map(|t| serde_json::json!({ "transition": t.id, "level": t.level, "action": t.action.as_str() }))
                .collect();
            let meta = serde_json::json!({ "dim": encoder.shape().output, "count": data.len(), "dtype": "f64le", "rows": rows });
            std::fs::write(out.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
            eprintln!("wrote {} embeddings to {}", data.len(), out.with_extension("f64").display());
        }
        Command::ServeOracle { labels } => {
            let stdin = io::stdin();
            runtime::oracle::serve(labels.label_map(), stdin.lock(), io::stdout().lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
