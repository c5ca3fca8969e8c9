use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use cas_core::actionseq::{ActionSequence, AliasTable};
use cas_core::domain::ProblemDefinition;
use cas_core::harness::{self, load_dataset, BackendMode, Config, Evaluator};
use cas_core::metrics;
use cas_core::pipeline::ModelRef;
use cas_core::simulator::{self, Mode};

const DEFAULT_MODELS: &str = "data/models.toml";

#[derive(Parser)]
#[command(name = "cas", version, about = "Natural-language commands to robot action sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the three-stage pipeline on one command and print every stage.
    Translate {
        /// A `.problem` file, or a problem name from the config's directory.
        #[arg(long)]
        problem: String,
        #[arg(long)]
        command: String,
        /// replay, record or live.
        #[arg(long, default_value = "replay")]
        backend: BackendMode,
        /// Append the action catalog even if the model is configured without it.
        #[arg(long)]
        catalog: bool,
        #[arg(long, default_value = DEFAULT_MODELS)]
        models: PathBuf,
        /// Translation model id; the first configured model by default.
        #[arg(long)]
        model: Option<String>,
    },
    /// Execute a sequence file and print the trace and final state.
    Simulate {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        seq: PathBuf,
        /// assisted or strict_skip.
        #[arg(long, default_value = "assisted")]
        mode: Mode,
        #[arg(long, default_value = DEFAULT_MODELS)]
        models: PathBuf,
    },
    /// Score a candidate sequence file against a reference file.
    Compare {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long = "cand")]
        candidate: PathBuf,
        #[arg(long)]
        problem: String,
        #[arg(long, default_value = "assisted")]
        mode: Mode,
        #[arg(long, default_value = DEFAULT_MODELS)]
        models: PathBuf,
    },
    /// Evaluate every configured model over a dataset and write the report.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = DEFAULT_MODELS)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Abort on the first missing fixture instead of failing the cell.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value = "replay")]
        backend: BackendMode,
    },
    /// Fill fixture directories from the live endpoints.
    Record {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = DEFAULT_MODELS)]
        models: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Translate {
            problem,
            command,
            backend,
            catalog,
            models,
            model,
        } => {
            let config = load_config(&models)?;
            let problem = load_problem(&problem, Some(&config))?;
            let pipeline = config.pipeline()?;
            let mut translator = match &model {
                Some(id) => config
                    .model(id)
                    .with_context(|| format!("no model `{id}` in {}", models.display()))?
                    .clone(),
                None => config
                    .models
                    .first()
                    .with_context(|| format!("{} lists no models", models.display()))?
                    .clone(),
            };
            translator.spec.include_catalog |= catalog;
            let entity_backend = config.backend(&config.entity_model, backend)?;
            let translate_backend = config.backend(&translator, backend)?;
            let result = pipeline.run(
                ModelRef::new(entity_backend.as_ref(), &config.entity_model.spec),
                ModelRef::new(translate_backend.as_ref(), &translator.spec),
                &problem,
                &command,
            )?;
            print!("{result}");
        }
        Command::Simulate {
            problem,
            seq,
            mode,
            models,
        } => {
            let config = optional_config(&models)?;
            let problem = load_problem(&problem, config.as_ref())?;
            let aliases = aliases(config.as_ref())?;
            let seq = read_sequence(&seq, &aliases)?;
            let run = simulator::execute(&problem, &seq, mode);
            print!("{}", run.trace_log());
            println!("final state:");
            for fluent in run.final_state.iter() {
                println!("  {fluent}");
            }
        }
        Command::Compare {
            reference,
            candidate,
            problem,
            mode,
            models,
        } => {
            let config = optional_config(&models)?;
            let problem = load_problem(&problem, config.as_ref())?;
            let aliases = aliases(config.as_ref())?;
            let reference = read_sequence(&reference, &aliases)?;
            let candidate = read_sequence(&candidate, &aliases)?;
            let ref_run = simulator::execute(&problem, &reference, mode);
            let cand_run = simulator::execute(&problem, &candidate, mode);
            let values: cas_core::MetricValues = metrics::compare(
                reference.actions(),
                candidate.actions(),
                problem.initial(),
                &ref_run.final_state,
                &cand_run.final_state,
            );
            println!("plan_difference: {}", values.plan_difference);
            println!("levenshtein: {}", values.levenshtein);
            println!("final_state_similarity: {:.6}", values.final_state_similarity);
            println!("length_discrepancy: {}", values.length_discrepancy);
        }
        Command::Eval {
            dataset,
            models,
            out,
            strict,
            backend,
        } => {
            let config = load_config(&models)?;
            let records = load_dataset(&dataset, &config.pipeline()?.aliases)?;
            let report = harness::evaluate(&records, &config, backend, strict)?;
            report.write(&out)?;
            print!("{}", report.summary_text());
        }
        Command::Record { dataset, models } => {
            let config = load_config(&models)?;
            let pipeline = config.pipeline()?;
            let records = load_dataset(&dataset, &pipeline.aliases)?;
            if let Some(summary) = &config.summary_model {
                let backend = config.backend(summary, BackendMode::Record)?;
                for r in &records {
                    if r.described_steps().is_empty() {
                        continue;
                    }
                    let text = harness::summarize_steps(
                        backend.as_ref(),
                        &summary.spec,
                        &pipeline.prompts,
                        &r.task,
                        &r.step_nl,
                    )
                    .with_context(|| format!("summarizing `{}`", r.id))?;
                    log::info!("{}: {text}", r.id);
                }
            }
            let report = Evaluator::from_config(&config, BackendMode::Record, &records)?
                .evaluate(&records)?;
            let failed = report.failed_cells();
            println!("{} cells, {failed} failed", report.cells.len());
            for cell in &report.cells {
                if let Err(f) = &cell.outcome {
                    eprintln!("{} {} #{}: {}", cell.record, cell.model, cell.summary, f.message);
                }
            }
            if failed > 0 {
                bail!("{failed} cells could not be recorded");
            }
        }
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<Config> {
    Config::load(path).with_context(|| format!("loading {}", path.display()))
}

/// The config is only needed by `simulate` and `compare` to resolve problem
/// names and aliases, so a missing default file is not an error.
fn optional_config(path: &Path) -> Result<Option<Config>> {
    if !path.exists() && path == Path::new(DEFAULT_MODELS) {
        return Ok(None);
    }
    load_config(path).map(Some)
}

fn aliases(config: Option<&Config>) -> Result<AliasTable> {
    Ok(match config {
        Some(c) => c.pipeline()?.aliases,
        None => AliasTable::bundled(),
    })
}

fn load_problem(arg: &str, config: Option<&Config>) -> Result<ProblemDefinition> {
    let direct = Path::new(arg);
    let path = if direct.is_file() {
        direct.to_path_buf()
    } else if let Some(c) = config {
        c.problem_path(arg)
    } else {
        bail!("problem file `{arg}` not found");
    };
    ProblemDefinition::load(&path).with_context(|| format!("loading problem {}", path.display()))
}

fn read_sequence(path: &Path, aliases: &AliasTable) -> Result<ActionSequence> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let seq = ActionSequence::parse_file_text(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(ActionSequence::new(
        seq.iter().map(|a| aliases.canonicalize(a).0).collect(),
    ))
}
