use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rulejoin::datalog::Examples;
use rulejoin::io;
use rulejoin::learner::{accuracy, learn_with, Event, LearnOptions};
use rulejoin::logic::Program;
use rulejoin::tasks::{gen_task, write_task, Family};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "rulejoin", version, about = "Learn Datalog programs with big rules from examples")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a program; prints it on stdout, progress on stderr.
    Learn {
        #[arg(long)]
        bk: PathBuf,
        #[arg(long)]
        exs: PathBuf,
        #[arg(long)]
        bias: PathBuf,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long)]
        disable_join: bool,
        #[arg(long)]
        allow_splittable: bool,
        #[arg(long)]
        disable_pruning: bool,
        /// Write run statistics as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        dump_cnf: Option<PathBuf>,
        #[arg(long, hide = true)]
        dump_conjunctions: bool,
    },
    /// Generate a synthetic task into a directory.
    Gen {
        family: Family,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 40)]
        train: usize,
        #[arg(long, default_value_t = 40)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy of a program on an examples file.
    Eval {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        bk: PathBuf,
        #[arg(long)]
        exs: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn progress(ev: &Event, conjunctions: bool) {
    match ev {
        Event::Size { k, candidates } => eprintln!("size {k}: {candidates} candidates"),
        Event::Tested { k, tested, combinable, joinable } => {
            eprintln!("size {k}: tested {tested} total, {combinable} combinable, {joinable} joinable")
        }
        Event::Conjunction { complete, members, cost, covered } => {
            let phase = if *complete { "complete" } else { "incomplete" };
            eprintln!("conjunction ({phase}): {} programs, cost {cost}, covers {covered}", members.len());
            if conjunctions {
                for m in *members {
                    for line in m.to_string().lines() {
                        eprintln!("    {line}");
                    }
                    eprintln!("    --");
                }
            }
        }
        Event::Bound { cost, .. } => eprintln!("solution of cost {cost}; bound now {}", cost - 1),
        Event::Finished { optimal } => eprintln!("done (optimal: {optimal})"),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Learn { bk, exs, bias, timeout, max_size, disable_join, allow_splittable, disable_pruning, stats, seed, dump_cnf, dump_conjunctions } => {
            let task = io::load_task(&bk, &exs, &bias)?;
            if let Some(dir) = &dump_cnf {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let opts = LearnOptions {
                timeout: timeout.map(Duration::from_secs_f64),
                max_size,
                disable_join,
                allow_splittable,
                disable_pruning,
                seed,
                dump_cnf,
                ..LearnOptions::default()
            };
            let result = learn_with(&task, &opts, &mut |ev| progress(ev, dump_conjunctions))?;
            if let Some(path) = stats {
                std::fs::write(&path, result.stats.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            match result.solution {
                Some(sol) => {
                    println!("{}", sol.program);
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    eprintln!("no solution found");
                    Ok(ExitCode::from(2))
                }
            }
        }
        Cmd::Gen { family, k, train, test, seed, out } => {
            let g = gen_task(family, k, train, test, seed)?;
            write_task(&out, &g).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} (planted cost {})", out.display(), g.planted_cost);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval { program, bk, exs } => {
            let rules = io::load_program(&program)?;
            let bk_text = std::fs::read_to_string(&bk).with_context(|| format!("reading {}", bk.display()))?;
            let exs_text = std::fs::read_to_string(&exs).with_context(|| format!("reading {}", exs.display()))?;
            let (mut facts, bk_rules) = io::parse_bk(&bk_text).map_err(|e| anyhow::anyhow!("{}: {e}", bk.display()))?;
            let (examples, lists): (Examples, _) = io::parse_examples(&exs_text).map_err(|e| anyhow::anyhow!("{}: {e}", exs.display()))?;
            for a in lists.atoms() {
                facts.insert(&a)?;
            }
            let prog = match (rules.is_empty(), examples.target()) {
                (true, _) => None,
                (false, Some(t)) => Some(Program::with_target(rules, t)),
                (false, None) => Some(Program::new(rules)),
            };
            let acc = accuracy(prog.as_ref(), &facts, &bk_rules, &examples)?;
            println!("{acc:.4}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
