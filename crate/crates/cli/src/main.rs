//! `axsel`: premise selection experiments from the command line.

use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use axsel_core::cnf::CnfConfig;
use axsel_core::fol::Corpus;
use axsel_core::harness::{
    self, generate_corpus, records_from_jsonl, verification_limits, write_experiment, Experiment,
    Family, HarnessError, RESULTS_FILE,
};
use axsel_core::metaloop::{LoopConfig, LoopError};
use axsel_core::prover::Limits;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "axsel",
    version,
    about = "Learning-based premise selection over a first-order corpus"
)]
struct Cli {
    /// Root under which each subcommand writes `<root>/<subcommand>`.
    #[arg(long, global = true, env = "AXSEL_OUT", default_value = "axsel-out")]
    out_root: PathBuf,

    /// Worker threads for problem-level parallelism (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prove every item from exactly its reference premises.
    Reprove {
        /// Corpus directory or manifest.
        corpus: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        prover: ProverArgs,
    },
    /// Run the select-prove-learn loop with learned and recency selection.
    Library {
        corpus: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        looping: LoopArgs,
    },
    /// Global axioms only, one shared inference budget, learning on and off.
    Challenge {
        corpus: PathBuf,
        /// Shared inference budget for the whole batch.
        #[arg(long, default_value_t = 200_000)]
        budget: u64,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        looping: LoopArgs,
    },
    /// Train on the corpus train split and evaluate the test split.
    Traintest {
        corpus: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        looping: LoopArgs,
        #[command(flatten)]
        prover: ProverArgs,
    },
    /// Write a synthetic corpus with known reference proofs.
    Generate {
        /// chain, group, mixed or neardup.
        #[arg(long, default_value = "mixed")]
        family: Family,
        #[arg(long, default_value_t = 30)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Target directory; defaults to `<root>/generate`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-check every proof and countermodel under a results directory.
    Verify {
        /// Defaults to the output root.
        dir: Option<PathBuf>,
    },
    /// Print the results table for a results directory or file.
    Report {
        /// Defaults to the output root.
        path: Option<PathBuf>,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct OutArgs {
    /// Output directory; defaults to `<root>/<subcommand>`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ProverArgs {
    /// Inference limit per item when proving from reference premises.
    #[arg(long, default_value_t = verification_limits().inferences)]
    inferences: u64,
    /// Maximum tableau depth when proving from reference premises.
    #[arg(long, default_value_t = verification_limits().max_depth)]
    depth: usize,
    /// Largest countermodel domain tried after a failed proof (0 disables).
    #[arg(long, default_value_t = 2)]
    domain: u32,
}

impl ProverArgs {
    fn limits(&self) -> Limits {
        Limits {
            inferences: self.inferences,
            max_depth: self.depth,
            model_domain: self.domain,
            ..Limits::default()
        }
    }
}

#[derive(Args)]
struct LoopArgs {
    /// Premise counts per rung, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    axiom_ladder: Option<Vec<usize>>,
    /// Inference limits per rung; the last entry repeats.
    #[arg(long, value_delimiter = ',')]
    inference_ladder: Option<Vec<u64>>,
    /// Inference budget over all attempts of one configuration.
    #[arg(long)]
    total_inferences: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Largest countermodel domain (0 disables model search).
    #[arg(long)]
    model_domain: Option<u32>,
    /// Drop features evaluated in the model store.
    #[arg(long)]
    no_semantic: bool,
    /// Drop structural term-walk features.
    #[arg(long)]
    no_structural: bool,
    /// Consult a learned advisor inside the prover.
    #[arg(long)]
    guidance: bool,
}

impl LoopArgs {
    fn config(&self, workers: usize) -> LoopConfig {
        let d = LoopConfig::default();
        LoopConfig {
            axiom_ladder: self.axiom_ladder.clone().unwrap_or(d.axiom_ladder),
            inference_ladder: self.inference_ladder.clone().unwrap_or(d.inference_ladder),
            total_inferences: self.total_inferences,
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            model_domain: self.model_domain.unwrap_or(d.model_domain),
            semantic: !self.no_semantic,
            structural: !self.no_structural,
            guidance: self.guidance,
            workers,
            ..d
        }
    }
}

/// Writes to stdout; a closed pipe (`axsel report | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn load(path: &Path) -> Result<Corpus> {
    Corpus::load(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn finish(dir: &Path, exp: &Experiment) -> Result<()> {
    write_experiment(dir, exp)?;
    emit(&exp.report().render())?;
    log::info!("results in {}", dir.display());
    Ok(())
}

fn results_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(RESULTS_FILE)
    } else {
        p.to_path_buf()
    }
}

fn run(cli: Cli) -> Result<()> {
    let dir =
        |o: &Option<PathBuf>, name: &str| o.clone().unwrap_or_else(|| cli.out_root.join(name));
    match &cli.command {
        Command::Reprove {
            corpus,
            out,
            prover,
        } => {
            let c = load(corpus)?;
            let exp =
                harness::run_reprove(&c, &prover.limits(), &CnfConfig::default(), cli.workers)?;
            finish(&dir(&out.output, "reprove"), &exp)
        }
        Command::Library {
            corpus,
            out,
            looping,
        } => {
            let exp = harness::run_library(&load(corpus)?, &looping.config(cli.workers))?;
            finish(&dir(&out.output, "library"), &exp)
        }
        Command::Challenge {
            corpus,
            budget,
            out,
            looping,
        } => {
            let exp =
                harness::run_challenge(&load(corpus)?, &looping.config(cli.workers), *budget)?;
            finish(&dir(&out.output, "challenge"), &exp)
        }
        Command::Traintest {
            corpus,
            out,
            looping,
            prover,
        } => {
            let exp = harness::run_traintest(
                &load(corpus)?,
                &looping.config(cli.workers),
                &prover.limits(),
            )?;
            finish(&dir(&out.output, "traintest"), &exp)
        }
        Command::Generate {
            family,
            size,
            seed,
            output,
        } => {
            let target = dir(output, "generate");
            let c = generate_corpus(*family, *size, *seed);
            c.write(&target)?;
            emit(&format!(
                "{} items, {} axioms written to {}\n",
                c.items.len(),
                c.axioms.len(),
                target.display()
            ))
        }
        Command::Verify { dir: d } => {
            let d = d.clone().unwrap_or_else(|| cli.out_root.clone());
            let v = harness::verify(&d)?;
            for f in &v.failures {
                eprintln!("FAILED {f}");
            }
            emit(&format!(
                "{} proofs and {} models checked, {} failures\n",
                v.proofs,
                v.models,
                v.failures.len()
            ))?;
            if !v.ok() {
                return Err(HarnessError::Invariant(format!(
                    "{} artifacts failed verification",
                    v.failures.len()
                ))
                .into());
            }
            Ok(())
        }
        Command::Report { path, json } => {
            let p = results_path(path.as_deref().unwrap_or(&cli.out_root));
            let text =
                std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            let records =
                records_from_jsonl(&text).with_context(|| format!("parsing {}", p.display()))?;
            let rep = harness::report(&records);
            if *json {
                emit(&(serde_json::to_string_pretty(&rep)? + "\n"))?;
            } else {
                emit(&rep.render())?;
            }
            Ok(())
        }
    }
}

/// Invariant violations exit with 2; unsolved problems are not errors.
fn exit_code(e: &anyhow::Error) -> u8 {
    let invariant = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<HarnessError>(),
            Some(HarnessError::Invariant(_))
        ) || matches!(
            c.downcast_ref::<LoopError>(),
            Some(LoopError::UnsoundProof { .. }) | Some(LoopError::Ineligible { .. })
        )
    });
    if invariant {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
