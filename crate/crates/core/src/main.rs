//! Command-line front end: corpus generation, pipeline evaluation,
//! ablation and adaptive-scenario runs, and report re-rendering.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.

use clap::{Args, Parser, Subcommand};
use palisade::corpus::{self, CorpusConfig};
use palisade::guard::PolicySet;
use palisade::harness::{
    self, emit_report, parse_layer_list, timing_summary, EvalReport, LatencyModel, PipelineConfig,
    ReportFormat,
};
use palisade::planner::{PlannerBackend, ReferenceBackend, RemoteBackend};
use palisade::sentinel::SentinelConfig;
use palisade::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "palisade",
    version,
    about = "Layered defense against indirect prompt injection: edge scan, planning screen, origin guard"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct EvalArgs {
    /// Corpus file (JSONL with a metadata header) to evaluate.
    #[arg(long)]
    corpus: PathBuf,
    /// Origin policy file; defaults to $PALISADE_CONFIG_DIR/policy.json,
    /// then the built-in policy.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Edge-scan configuration; defaults to $PALISADE_CONFIG_DIR/sentinel.json,
    /// then built-in thresholds.
    #[arg(long)]
    sentinel_config: Option<PathBuf>,
    /// Seed for the simulated latency model.
    #[arg(long)]
    latency_seed: Option<u64>,
    /// Planner service endpoint; omitted = in-process reference backend.
    #[arg(long)]
    planner_url: Option<String>,
    /// Where to write the report.
    #[arg(long)]
    out: PathBuf,
    /// Report format: json, csv (one file per table), or markdown.
    #[arg(long, default_value = "json")]
    format: String,
    /// Optional sidecar for measured wall-clock timing statistics.
    #[arg(long)]
    timing_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled corpus (JSONL).
    Gen {
        /// Corpus configuration; defaults to $PALISADE_CONFIG_DIR/corpus.json,
        /// then built-in counts.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output corpus path.
        #[arg(long)]
        out: PathBuf,
        /// Generate the adaptive-scenario corpus instead of the base corpus.
        #[arg(long)]
        adaptive: bool,
    },
    /// Evaluate a corpus through the configured pipeline.
    Run {
        #[command(flatten)]
        eval: EvalArgs,
        /// Enabled layers, comma separated (e.g. "L1,L2,L3"; empty = none).
        #[arg(long, default_value = "L1,L2,L3", allow_hyphen_values = false)]
        layers: String,
    },
    /// Evaluate under the four standard layer configurations and tabulate them.
    Ablate {
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Evaluate an adaptive-scenario corpus and tabulate per-scenario results.
    Adaptive {
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Re-render a stored JSON report in another format.
    Report {
        /// A JSON report produced by run/ablate/adaptive.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Policy(_) => 1,
        _ => 2,
    }
}

fn config_dir() -> Option<PathBuf> {
    std::env::var_os("PALISADE_CONFIG_DIR").map(PathBuf::from)
}

/// Resolve a configuration source: explicit flag, then the conventional
/// file in $PALISADE_CONFIG_DIR, then the built-in default.
fn resolve_config<T>(
    flag: Option<&Path>,
    conventional: &str,
    from_file: impl Fn(&Path) -> Result<T>,
    default: impl FnOnce() -> Result<T>,
) -> Result<T> {
    if let Some(path) = flag {
        return from_file(path);
    }
    if let Some(dir) = config_dir() {
        let candidate = dir.join(conventional);
        if candidate.is_file() {
            log::info!("using {}", candidate.display());
            return from_file(&candidate);
        }
    }
    default()
}

fn build_pipeline(eval: &EvalArgs, layers: &str) -> Result<PipelineConfig> {
    let sentinel = resolve_config(
        eval.sentinel_config.as_deref(),
        "sentinel.json",
        SentinelConfig::from_file,
        || Ok(SentinelConfig::default()),
    )?;
    let policy = resolve_config(
        eval.policy.as_deref(),
        "policy.json",
        PolicySet::from_file,
        || Ok(PolicySet::default()),
    )?;
    let mut latency = LatencyModel::default();
    if let Some(seed) = eval.latency_seed {
        latency.seed = seed;
    }
    let cfg = PipelineConfig {
        layers: parse_layer_list(layers)?,
        sentinel,
        policy,
        latency,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn build_backend(eval: &EvalArgs) -> Box<dyn PlannerBackend> {
    match &eval.planner_url {
        Some(url) => Box::new(RemoteBackend::new(url.clone(), 5_000)),
        None => Box::new(ReferenceBackend::with_defaults()),
    }
}

fn emit(eval: &EvalArgs, report: &EvalReport) -> Result<()> {
    let format: ReportFormat = eval.format.parse()?;
    let written = emit_report(report, format, &eval.out)?;
    if let Some(timing_path) = &eval.timing_out {
        harness::report::emit_timing_sidecar(&timing_summary(&report.outcomes), timing_path)?;
    }
    let asr = report
        .funnel
        .attack_success_rate_pct
        .map(|v| format!("{v:.3}%"))
        .unwrap_or_else(|| "n/a".to_string());
    println!(
        "evaluated {} samples ({} attacks): L1={} L2={} L3={} succeeded={} ASR={}",
        report.totals.samples,
        report.totals.attacks,
        report.funnel.l1_interceptions.count,
        report.funnel.l2_rejections.count,
        report.funnel.l3_blocks.count,
        report.funnel.attacks_succeeded,
        asr
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn load_samples(path: &Path) -> Result<Vec<corpus::Sample>> {
    let (meta, samples) = corpus::read_corpus(path)?;
    log::info!(
        "loaded {} samples (corpus format v{}, seed {})",
        samples.len(),
        meta.version,
        meta.seed
    );
    Ok(samples)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen {
            config,
            seed,
            out,
            adaptive,
        } => {
            let mut cfg = resolve_config(
                config.as_deref(),
                "corpus.json",
                CorpusConfig::from_file,
                || Ok(CorpusConfig::default()),
            )?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            let samples = if adaptive {
                corpus::generate_adaptive_corpus(&cfg)?
            } else {
                corpus::generate_corpus(&cfg)?
            };
            corpus::write_corpus(&out, &cfg, &samples)?;
            println!("wrote {} samples to {}", samples.len(), out.display());
            Ok(())
        }
        Command::Run { eval, layers } => {
            let samples = load_samples(&eval.corpus)?;
            let cfg = build_pipeline(&eval, &layers)?;
            let backend = build_backend(&eval);
            let report = harness::run_eval(&samples, &cfg, backend.as_ref())?;
            emit(&eval, &report)
        }
        Command::Ablate { eval } => {
            let samples = load_samples(&eval.corpus)?;
            let cfg = build_pipeline(&eval, "L1,L2,L3")?;
            let backend = build_backend(&eval);
            let report = harness::run_ablation(&samples, &cfg, backend.as_ref())?;
            emit(&eval, &report)
        }
        Command::Adaptive { eval } => {
            let samples = load_samples(&eval.corpus)?;
            let cfg = build_pipeline(&eval, "L1,L2,L3")?;
            let backend = build_backend(&eval);
            let report = harness::run_adaptive(&samples, &cfg, backend.as_ref())?;
            emit(&eval, &report)
        }
        Command::Report { input, format, out } => {
            let body = std::fs::read_to_string(&input)
                .map_err(|e| Error::Report(format!("reading {}: {e}", input.display())))?;
            let report: EvalReport = serde_json::from_str(&body)
                .map_err(|e| Error::Report(format!("parsing {}: {e}", input.display())))?;
            if report.schema_version != harness::REPORT_SCHEMA_VERSION {
                return Err(Error::Report(format!(
                    "unsupported report schema version {} (expected {})",
                    report.schema_version,
                    harness::REPORT_SCHEMA_VERSION
                )));
            }
            let format: ReportFormat = format.parse()?;
            for path in emit_report(&report, format, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
