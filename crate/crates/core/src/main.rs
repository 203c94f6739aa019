use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use veritas_core::config::{ConfigError, PipelineConfig};
use veritas_core::eval::{self, golden, EvalError, EvaluationReport};
use veritas_core::synthgen::{self, Dataset, DatasetError, SynthError, Taxonomy, TaxonomyError};

const REPORT_JSON: &str = "report.json";
const REPORT_TXT: &str = "report.txt";
const DECISIONS_FILE: &str = "decisions.jsonl";

#[derive(Parser)]
#[command(name = "veritas", version, about = "Synthetic alert generation and suppression-pipeline evaluation")]
struct Cli {
    /// Pipeline config (JSON). Missing keys take the reference defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, env = "VERITAS_SEED")]
    seed: Option<u64>,
    /// Worker threads for generation and evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Default)]
struct EvalFlags {
    /// Exit 4 unless the metrics match the reference run and the dataset
    /// matches its manifest hashes.
    #[arg(long)]
    golden_check: bool,
    /// Skip report.txt.
    #[arg(long)]
    json_only: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write epochs.jsonl, contexts.json and manifest.json.
    Generate {
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the pipeline over a generated dataset and write the report.
    Evaluate {
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: EvalFlags,
    },
    /// Print the text tables for an existing report.json.
    Report {
        /// Report directory or report.json path.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// generate then evaluate.
    Run {
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: EvalFlags,
    },
}

enum Failure {
    Validation(String),
    Io(String),
    Golden(Vec<String>),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Io(_) => 3,
            Failure::Golden(_) => 4,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<TaxonomyError> for Failure {
    // a missing or unreadable taxonomy is an input-validation failure
    fn from(e: TaxonomyError) -> Self {
        Failure::Validation(format!("taxonomy error: {e}"))
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => Failure::Io(format!("dataset error: {e}")),
            _ => Failure::Validation(format!("dataset error: {e}")),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::reference(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn generate(cfg: &PipelineConfig, taxonomy: &Path, out: &Path) -> Result<Dataset, Failure> {
    let t = Taxonomy::load(taxonomy)?;
    let d = synthgen::generate_dataset(&t, cfg.seed)?;
    d.write_dir(out)?;
    println!("{} cases, {} epochs", d.manifest.cases, d.manifest.epochs);
    Ok(d)
}

fn evaluate(cfg: &PipelineConfig, taxonomy: &Path, dataset: &Path, out: &Path, flags: &EvalFlags) -> Result<(), Failure> {
    let t = Taxonomy::load(taxonomy)?;
    t.validate()?;
    let d = Dataset::read_dir(dataset)?;
    let started = Instant::now();
    let ev = eval::evaluate(&d, &t, cfg)?;
    let elapsed = started.elapsed();

    fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    write(&out.join(REPORT_JSON), &ev.report.to_json())?;
    let mut log = Vec::new();
    for entry in &ev.decision_log {
        serde_json::to_writer(&mut log, entry).expect("log entry serializes");
        log.push(b'\n');
    }
    write(&out.join(DECISIONS_FILE), &log)?;
    if !flags.json_only {
        write(&out.join(REPORT_TXT), ev.report.render_text().as_bytes())?;
    }
    println!("{}", ev.report.summary_line());
    eprintln!("evaluated {} epochs in {:.2?}", d.epochs.len(), elapsed);

    if flags.golden_check {
        let mut problems = golden::golden_check(&ev.report);
        problems.extend(d.tampered_cases().into_iter().map(|c| format!("case {c} does not match its manifest hash")));
        if !problems.is_empty() {
            return Err(Failure::Golden(problems));
        }
        println!("golden check passed");
    }
    Ok(())
}

fn report(input: &Path) -> Result<(), Failure> {
    let path = if input.is_dir() { input.join(REPORT_JSON) } else { input.to_path_buf() };
    let text = fs::read_to_string(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let r: EvaluationReport =
        serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    print!("{}", r.render_text());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Validation(format!("thread pool: {e}")))?;
    }
    let or = |p: Option<PathBuf>, d: &PathBuf| p.unwrap_or_else(|| d.clone());
    let paths = &cfg.paths;
    match cli.command {
        Command::Generate { taxonomy, out } => {
            generate(&cfg, &or(taxonomy, &paths.taxonomy), &or(out, &paths.dataset_dir))?;
        }
        Command::Evaluate {
            taxonomy,
            dataset,
            out,
            flags,
        } => {
            evaluate(
                &cfg,
                &or(taxonomy, &paths.taxonomy),
                &or(dataset, &paths.dataset_dir),
                &or(out, &paths.report_dir),
                &flags,
            )?;
        }
        Command::Report { input } => report(&or(input, &paths.report_dir))?,
        Command::Run {
            taxonomy,
            dataset,
            out,
            flags,
        } => {
            let taxonomy = or(taxonomy, &paths.taxonomy);
            let dataset = or(dataset, &paths.dataset_dir);
            generate(&cfg, &taxonomy, &dataset)?;
            evaluate(&cfg, &taxonomy, &dataset, &or(out, &paths.report_dir), &flags)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) => eprintln!("error: {m}"),
                Failure::Io(m) => eprintln!("i/o error: {m}"),
                Failure::Golden(ps) => {
                    eprintln!("golden check failed:");
                    for p in ps {
                        eprintln!("  {p}");
                    }
                }
            }
            ExitCode::from(f.code())
        }
    }
}
