use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aibt::btree::export_dot;
use aibt::episode::{run_episode, RunOptions};
use aibt::scenario::Scenario;
use aibt::Error;

const USAGE_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "aibt", version, about = "Behavior trees with active inference prior nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode. Exit code 0 on Goal, 1 on Failure, 2 on Timeout.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        /// Every started action succeeds when its preconditions hold.
        #[arg(long, conflicts_with = "stochastic")]
        deterministic: bool,
        /// Sample action outcomes even if the scenario is deterministic.
        #[arg(long)]
        stochastic: bool,
        /// Write one JSON record per tick.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
        /// Print nothing; only the exit code reports the result.
        #[arg(long)]
        quiet: bool,
    },
    /// Export the behavior tree in Graphviz format.
    Graph {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check scenario files without running them.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
    /// Report tree size, optionally against a second scenario.
    CountNodes {
        scenario: PathBuf,
        #[arg(long)]
        compare: Option<PathBuf>,
    },
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { scenario, seed, budget, deterministic, stochastic, trace_out, json, quiet } => {
            let scenario = Scenario::from_path(&scenario)?;
            let options = RunOptions {
                seed,
                budget,
                deterministic: if deterministic {
                    Some(true)
                } else if stochastic {
                    Some(false)
                } else {
                    None
                },
            };
            let episode = run_episode(&scenario, options)?;
            if let Some(path) = trace_out {
                let mut out = BufWriter::new(File::create(path)?);
                episode.write_trace(&mut out)?;
                out.flush()?;
            }
            if !quiet {
                let summary = episode.summary();
                let text = if json {
                    let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
                    s.push('\n');
                    s
                } else {
                    summary.to_text()
                };
                write_output(None, &text)?;
            }
            Ok(episode.result.exit_code() as u8)
        }
        Command::Graph { scenario, out } => {
            let scenario = Scenario::from_path(&scenario)?;
            write_output(out.as_deref(), &export_dot(&scenario.tree, &scenario.domain))?;
            Ok(0)
        }
        Command::Validate { scenarios } => {
            for path in scenarios {
                let s = Scenario::from_path(&path)?;
                println!(
                    "{}: ok ({} states, {} actions, {} nodes)",
                    path.display(),
                    s.domain.registry.len(),
                    s.domain.actions.len(),
                    s.tree.len()
                );
            }
            Ok(0)
        }
        Command::CountNodes { scenario, compare } => {
            let s = Scenario::from_path(&scenario)?;
            let c = s.tree.counts();
            println!(
                "{}: {} nodes (control {}, condition {}, action {}, prior {})",
                s.name, c.total, c.control, c.condition, c.action, c.prior
            );
            if let Some(other) = compare {
                let o = Scenario::from_path(&other)?;
                let (ours, theirs) = (c.total, o.tree.len());
                println!("{}: {} nodes", o.name, theirs);
                let ratio = ours as f64 / theirs as f64;
                println!("ratio {ours}/{theirs} = {ratio:.4}");
                println!("reduction 1 - {ours}/{theirs} = ({theirs} - {ours})/{theirs} = {:.4}", 1.0 - ratio);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
