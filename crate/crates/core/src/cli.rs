//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::AppConfig;
use crate::error::Error;
use crate::eval::{baselines, emit_report, tiered_eval, BaselineSource, Baselines, ReportFormat};
use crate::ingest::{ingest, IngestMode, IngestStats};
use crate::predictor::{load_bundle, save_bundle, train, ModelBundle, PredictionResult};
use crate::record::QueryRecord;
use crate::sql::analyze;
use crate::synth::generate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_WARN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(name = "slotcast", version, about = "Pre-execution slot-time prediction for warehouse SQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the operator complexity report of a SQL file.
    Analyze {
        #[arg(long)]
        query_file: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Write a synthetic JSONL workload.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a routed model bundle.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_bundle: PathBuf,
        /// Training summary path (default: <bundle>.summary.json).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Predict slot-minutes for every record of a JSONL file.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Predict one query and warn when it reaches the threshold.
    Advise(AdviseArgs),
    /// Tiered evaluation against constant baselines.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        report_dir: PathBuf,
        #[arg(long, value_enum)]
        baseline_source: Option<BaselineArg>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Print the default configuration file.
    Defaults,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineArg {
    TrainDerived,
    TestDerived,
}

#[derive(Debug, Args)]
struct AdviseArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    query_file: PathBuf,
    /// Slot-minutes at or above which the exit status is 2.
    #[arg(long)]
    warn_threshold: f64,
    #[arg(long)]
    bytes_processed: Option<u64>,
    #[arg(long)]
    bytes_billed: Option<u64>,
    #[arg(long)]
    account_count: Option<u64>,
    #[arg(long)]
    resource_count: Option<u64>,
    #[arg(long)]
    accounts_aws: Option<u64>,
    #[arg(long)]
    accounts_gcp: Option<u64>,
    #[arg(long)]
    accounts_azure: Option<u64>,
    #[arg(long, default_value = "")]
    region: String,
    #[arg(long, default_value = "")]
    asset_type: String,
    #[arg(long, default_value = "")]
    project_id: String,
    #[arg(long, default_value = "")]
    dataset_id: String,
    #[arg(long)]
    cache_hit: bool,
}

/// Exit status of `advise`.
pub fn advise_status(predicted_slot_min: f64, warn_threshold: f64) -> i32 {
    if predicted_slot_min >= warn_threshold {
        EXIT_WARN
    } else {
        EXIT_OK
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_DATA,
    }
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(exit_code(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(EXIT_IO, e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

fn with_path<T>(path: &Path, r: crate::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| {
        let code = exit_code(&e);
        Failure(code, format!("{}: {e}", path.display()))
    })
}

fn load_config(arg: &ConfigArg) -> std::result::Result<AppConfig, Failure> {
    match &arg.config {
        Some(p) => with_path(p, AppConfig::load(p)),
        None => Ok(AppConfig::default()),
    }
}

fn report_ingest(err: &mut dyn Write, path: &Path, stats: &IngestStats, warnings: &[Error]) -> std::io::Result<()> {
    for w in warnings {
        writeln!(err, "warning: {}: {w}", path.display())?;
    }
    writeln!(
        err,
        "ingested {}: read {} kept {} (dropped: malformed {}, empty {}, ddl {}, timeout {}, anomalous {})",
        path.display(),
        stats.read,
        stats.kept,
        stats.malformed,
        stats.empty,
        stats.ddl,
        stats.timeout,
        stats.anomalous
    )
}

/// One structured prediction line.
pub fn prediction_line(id: &str, p: &PredictionResult) -> String {
    format!(
        "{{\"id\":{},\"slot_min\":{:.6},\"route\":\"{}\",\"score\":{}}}",
        serde_json::to_string(id).expect("strings always serialize"),
        p.slot_min,
        p.route,
        p.complexity_score
    )
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    bundle: String,
    ingest: IngestStats,
    n_records: usize,
    n_simple: usize,
    n_complex: usize,
    simple_model: &'a str,
    complex_model: &'a str,
    n_columns: usize,
    svd_components: usize,
    vocab_size: usize,
    train_slot_mean: f64,
    train_slot_median: f64,
    created: &'a str,
}

fn cmd_train(
    out: &mut dyn Write,
    err: &mut dyn Write,
    input: &Path,
    bundle_path: &Path,
    summary: Option<PathBuf>,
    config: &ConfigArg,
) -> CmdResult {
    let cfg = load_config(config)?;
    let data = with_path(input, ingest(input, IngestMode::Training))?;
    report_ingest(err, input, &data.stats, &data.warnings)?;
    let bundle = train(&data.records, &cfg.train)?;
    with_path(bundle_path, save_bundle(&bundle, bundle_path))?;
    let m = &bundle.metadata;
    let s = TrainSummary {
        bundle: bundle_path.display().to_string(),
        ingest: data.stats,
        n_records: m.n_records,
        n_simple: m.n_simple,
        n_complex: m.n_complex,
        simple_model: m.simple_model.as_str(),
        complex_model: m.complex_model.as_str(),
        n_columns: bundle.featurizer.n_columns(),
        svd_components: bundle.featurizer.svd.n_components(),
        vocab_size: bundle.featurizer.text.vocab_size(),
        train_slot_mean: m.train_slot_mean,
        train_slot_median: m.train_slot_median,
        created: &m.created,
    };
    let json = serde_json::to_string_pretty(&s).map_err(|e| Failure(EXIT_DATA, e.to_string()))?;
    let summary_path = summary.unwrap_or_else(|| {
        let mut p = bundle_path.as_os_str().to_owned();
        p.push(".summary.json");
        PathBuf::from(p)
    });
    fs::write(&summary_path, format!("{json}\n")).map_err(|e| Failure(EXIT_IO, format!("{}: {e}", summary_path.display())))?;
    writeln!(
        out,
        "trained on {} records (simple {} -> {}, complex {} -> {}); bundle written to {}",
        m.n_records,
        m.n_simple,
        m.simple_model,
        m.n_complex,
        m.complex_model,
        bundle_path.display()
    )?;
    Ok(EXIT_OK)
}

fn load(path: &Path) -> std::result::Result<ModelBundle, Failure> {
    with_path(path, load_bundle(path))
}

fn write_file(path: &Path, bytes: &[u8]) -> std::result::Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure(EXIT_IO, format!("{}: {e}", path.display())))
}

fn cmd_predict(err: &mut dyn Write, bundle: &Path, input: &Path, output: &Path) -> CmdResult {
    let bundle = load(bundle)?;
    let data = with_path(input, ingest(input, IngestMode::Inference))?;
    report_ingest(err, input, &data.stats, &data.warnings)?;
    let file = fs::File::create(output).map_err(|e| Failure(EXIT_IO, format!("{}: {e}", output.display())))?;
    let mut w = BufWriter::new(file);
    for (id, r) in data.ids.iter().zip(&data.records) {
        let p = bundle.predict(r)?;
        writeln!(w, "{}", prediction_line(id, &p))?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_advise(out: &mut dyn Write, a: &AdviseArgs) -> CmdResult {
    let bundle = load(&a.bundle)?;
    let sql = fs::read_to_string(&a.query_file).map_err(|e| Failure(EXIT_IO, format!("{}: {e}", a.query_file.display())))?;
    let record = QueryRecord {
        total_bytes_processed: a.bytes_processed,
        total_bytes_billed: a.bytes_billed,
        account_count: a.account_count,
        resource_count: a.resource_count,
        accounts_aws: a.accounts_aws,
        accounts_gcp: a.accounts_gcp,
        accounts_azure: a.accounts_azure,
        region: a.region.clone(),
        asset_type: a.asset_type.clone(),
        project_id: a.project_id.clone(),
        dataset_id: a.dataset_id.clone(),
        cache_hit: a.cache_hit,
        ..QueryRecord::from_sql(sql)
    };
    let p = bundle.predict(&record)?;
    writeln!(
        out,
        "predicted slot-minutes: {:.6} (route {}, model {}, complexity score {})",
        p.slot_min, p.route, p.model, p.complexity_score
    )?;
    let status = advise_status(p.slot_min, a.warn_threshold);
    if status == EXIT_WARN {
        writeln!(
            out,
            "WARNING: predicted slot-time {:.6} min is at or above the threshold of {} min",
            p.slot_min, a.warn_threshold
        )?;
    }
    Ok(status)
}

fn cmd_evaluate(
    out: &mut dyn Write,
    err: &mut dyn Write,
    bundle_path: &Path,
    input: &Path,
    report_dir: &Path,
    source: Option<BaselineArg>,
    config: &ConfigArg,
) -> CmdResult {
    let cfg = load_config(config)?;
    let bundle = load(bundle_path)?;
    let data = with_path(input, ingest(input, IngestMode::Training))?;
    report_ingest(err, input, &data.stats, &data.warnings)?;
    let actual: Vec<f64> = data.records.iter().map(|r| r.slot_min().unwrap_or(0.0)).collect();
    let predicted: Vec<f64> = bundle
        .predict_batch(&data.records)?
        .iter()
        .map(|p| p.slot_min)
        .collect();
    let source = match source {
        Some(BaselineArg::TrainDerived) => BaselineSource::TrainDerived,
        Some(BaselineArg::TestDerived) => BaselineSource::TestDerived,
        None => cfg.eval.baseline_source,
    };
    let base = match source {
        BaselineSource::TrainDerived => Baselines {
            source,
            mean_value: bundle.metadata.train_slot_mean,
            median_value: bundle.metadata.train_slot_median,
        },
        BaselineSource::TestDerived => baselines(&[], &actual, source)?,
    };
    let report = tiered_eval(&actual, &predicted, &cfg.eval.tiers(), base)?;
    fs::create_dir_all(report_dir).map_err(|e| Failure(EXIT_IO, format!("{}: {e}", report_dir.display())))?;
    let text = emit_report(&report, ReportFormat::Text);
    write_file(&report_dir.join("report.txt"), &text)?;
    write_file(&report_dir.join("report.json"), &emit_report(&report, ReportFormat::Structured))?;
    write_file(&report_dir.join("plot.csv"), &emit_report(&report, ReportFormat::PlotData))?;
    out.write_all(&text)?;
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cli.command {
        Command::Analyze { query_file, config } => {
            let cfg = load_config(&config)?;
            let sql = fs::read_to_string(&query_file).map_err(|e| Failure(EXIT_IO, format!("{}: {e}", query_file.display())))?;
            writeln!(out, "{}", analyze(&sql, &cfg.train.weights))?;
            Ok(EXIT_OK)
        }
        Command::Synth { config, output } => {
            let cfg = with_path(&config, AppConfig::load(&config))?;
            let records = generate(&cfg.synth)?;
            let file = fs::File::create(&output).map_err(|e| Failure(EXIT_IO, format!("{}: {e}", output.display())))?;
            let mut w = BufWriter::new(file);
            for r in &records {
                serde_json::to_writer(&mut w, r).map_err(|e| Failure(EXIT_IO, e.to_string()))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            writeln!(out, "wrote {} records to {}", records.len(), output.display())?;
            Ok(EXIT_OK)
        }
        Command::Train {
            input,
            output_bundle,
            summary,
            config,
        } => cmd_train(out, err, &input, &output_bundle, summary, &config),
        Command::Predict { bundle, input, output } => cmd_predict(err, &bundle, &input, &output),
        Command::Advise(a) => cmd_advise(out, &a),
        Command::Evaluate {
            bundle,
            input,
            report_dir,
            baseline_source,
            config,
        } => cmd_evaluate(out, err, &bundle, &input, &report_dir, baseline_source, &config),
        Command::Defaults => {
            write!(out, "{}", AppConfig::default().render())?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn advise_threshold_contract() {
        assert_eq!(advise_status(5.0, 2.0), EXIT_WARN);
        assert_eq!(advise_status(2.0, 2.0), EXIT_WARN);
        assert_eq!(advise_status(1.999, 2.0), EXIT_OK);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_capture(&["slotcast"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["slotcast", "train", "--input", "x.jsonl"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["slotcast", "frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["slotcast", "--help"]).0, EXIT_OK);
    }

    #[test]
    fn missing_files_are_io_errors() {
        let (code, _, err) = run_capture(&["slotcast", "analyze", "--query-file", "/nonexistent/q.sql"]);
        assert_eq!(code, EXIT_IO);
        assert!(err.contains("/nonexistent/q.sql"));
    }

    #[test]
    fn defaults_parse_back() {
        let (code, out, _) = run_capture(&["slotcast", "defaults"]);
        assert_eq!(code, 0);
        assert_eq!(AppConfig::parse_str(&out).unwrap(), AppConfig::default());
    }

    #[test]
    fn prediction_line_format() {
        let p = PredictionResult {
            slot_min: 1.0 / 3.0,
            log_space_value: 0.0,
            route: crate::predictor::Route::Complex,
            model: crate::predictor::ModelKind::Complex,
            complexity_score: 31,
        };
        assert_eq!(
            prediction_line("q\"1", &p),
            r#"{"id":"q\"1","slot_min":0.333333,"route":"complex","score":31}"#
        );
    }
}
