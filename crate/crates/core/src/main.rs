//! `nirisk` command line: learn, predict, evaluate, simulate, serve.
//!
//! Data goes to standard output or the files named by flags (JSON is
//! pretty-printed and newline-terminated); diagnostics go to standard error.

use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use nirisk::clinical::{default_ground_truth, default_schema, default_structure, ingest, to_dataset, ClinicalSchema, PatientRecord};
use nirisk::dbn::{fit_dbn, predict_trajectory, DbnSpec, DbnStructure, EvidenceTimeline, PredictionTrace};
use nirisk::eval::{evaluate_model, histogram_csv, metrics, render_table, ConfusionMatrix, Horizon, DEFAULT_THRESHOLD};
use nirisk::pgm::DEFAULT_ALPHA;
use nirisk::service::{serve, ServiceConfig};
use nirisk::synth::{generate_cohort, write_cohort, CohortConfig, StayLength, DAILY_FILE, FIXED_FILE};

#[derive(Parser)]
#[command(name = "nirisk", version, about = "Daily nosocomial-infection risk from dynamic Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit CPTs for a structure from patient CSV files.
    Learn(LearnArgs),
    /// Per-day risk trajectories for each patient.
    Predict(PredictArgs),
    /// Confusion matrix and predictive values on a test set.
    Evaluate(EvaluateArgs),
    /// Sample a synthetic cohort from a ground-truth model.
    Simulate(SimulateArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
    /// Write the built-in schema, structure and ground-truth model.
    Defaults(DefaultsArgs),
}

#[derive(Args)]
struct SchemaArg {
    /// Clinical schema JSON (default: built-in ICU schema).
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct LearnArgs {
    /// Structure JSON (default: built-in structure).
    #[arg(long)]
    structure: Option<PathBuf>,
    #[arg(long)]
    fixed: PathBuf,
    #[arg(long)]
    daily: PathBuf,
    /// Laplace pseudo-count added to every CPT cell.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Where to write the fitted model.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    schema: SchemaArg,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Fixed-attribute CSV (with --daily).
    #[arg(long, requires = "daily", conflicts_with = "records")]
    fixed: Option<PathBuf>,
    #[arg(long, requires = "fixed")]
    daily: Option<PathBuf>,
    /// JSON array of {"patient_id", "static", "days"} evidence timelines
    /// over model variable names.
    #[arg(long, required_unless_present = "fixed")]
    records: Option<PathBuf>,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    schema: SchemaArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, required_unless_present = "matrix")]
    model: Option<PathBuf>,
    /// Directory holding fixed.csv and daily.csv.
    #[arg(long, conflicts_with_all = ["fixed", "daily"])]
    test: Option<PathBuf>,
    #[arg(long, requires = "daily")]
    fixed: Option<PathBuf>,
    #[arg(long, requires = "fixed")]
    daily: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "per-stay")]
    horizon: HorizonArg,
    /// Score a given matrix "tn,fp,fn,tp" instead of a model.
    #[arg(long, conflicts_with_all = ["model", "test", "fixed", "daily"])]
    matrix: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write the full evaluation JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write observed-vs-predicted class counts as CSV here.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[command(flatten)]
    schema: SchemaArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum HorizonArg {
    PerStay,
    PerDay,
}

impl From<HorizonArg> for Horizon {
    fn from(h: HorizonArg) -> Self {
        match h {
            HorizonArg::PerStay => Horizon::PerStay,
            HorizonArg::PerDay => Horizon::PerDay,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Ground-truth model JSON (default: built-in model).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    patients: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for fixed.csv, daily.csv and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Shortest stay in days (uniform stay-length distribution).
    #[arg(long, default_value_t = 3)]
    min_stay: usize,
    #[arg(long, default_value_t = 10)]
    max_stay: usize,
    #[command(flatten)]
    schema: SchemaArg,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Alarm threshold reported to clients.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Keep session snapshots here so they survive restarts.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Static files (the web UI) served under /.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    #[command(flatten)]
    schema: SchemaArg,
}

#[derive(Args)]
struct DefaultsArgs {
    /// Output directory for schema.json, structure.json and model.json.
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_schema(arg: &SchemaArg) -> Result<ClinicalSchema> {
    match &arg.schema {
        Some(p) => ClinicalSchema::from_json(&read(p)?).with_context(|| format!("invalid schema {}", p.display())),
        None => Ok(default_schema()),
    }
}

fn load_model(path: &Path) -> Result<DbnSpec> {
    DbnSpec::from_json(&read(path)?).with_context(|| format!("invalid model {}", path.display()))
}

fn require_file(path: &Path) -> Result<()> {
    ensure!(path.is_file(), "no such file: {}", path.display());
    Ok(())
}

fn load_records(fixed: &Path, daily: &Path, schema: &ClinicalSchema) -> Result<Vec<PatientRecord>> {
    require_file(fixed)?;
    require_file(daily)?;
    let (records, report) = ingest(fixed, daily, schema)?;
    eprintln!(
        "read {} patients ({} rows kept, {} dropped)",
        records.len(),
        report.rows_kept,
        report.rows_dropped
    );
    for c in &report.corrections {
        eprintln!("  {}:{} patient {} {}: {}", c.file, c.line, c.patient_id, c.field, c.reason);
    }
    Ok(records)
}

#[derive(Serialize)]
struct LearnOutput<'a> {
    model: String,
    patients: usize,
    cleaning: &'a nirisk::clinical::CleaningReport,
    fit: &'a nirisk::dbn::DbnFitReport,
}

fn cmd_learn(args: LearnArgs) -> Result<()> {
    ensure!(args.alpha.is_finite() && args.alpha >= 0.0, "--alpha must be a non-negative number");
    let schema = load_schema(&args.schema)?;
    let structure = match &args.structure {
        Some(p) => DbnStructure::from_json(&read(p)?).with_context(|| format!("invalid structure {}", p.display()))?,
        None => default_structure(),
    };
    require_file(&args.fixed)?;
    require_file(&args.daily)?;
    let (records, cleaning) = ingest(&args.fixed, &args.daily, &schema)?;
    ensure!(!records.is_empty(), "no usable patients in {}", args.fixed.display());
    let data = to_dataset(&records, &schema)?;
    let (spec, fit) = fit_dbn(&structure, &data.sequences, args.alpha)?;
    schema.check_model(&spec)?;
    write(&args.out, &spec.to_json())?;
    eprintln!(
        "learned from {} patients ({} patient-days), {} uniform fallback rows; model written to {}",
        records.len(),
        fit.days_seen,
        fit.static_slice.uniform_rows.len() + fit.uniform_rows.len(),
        args.out.display()
    );
    print!(
        "{}",
        pretty(&LearnOutput {
            model: args.out.display().to_string(),
            patients: records.len(),
            cleaning: &cleaning,
            fit: &fit,
        })
    );
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PatientTimeline {
    patient_id: String,
    #[serde(flatten)]
    timeline: EvidenceTimeline,
}

#[derive(Serialize)]
struct PatientTrace {
    patient_id: String,
    #[serde(flatten)]
    trace: PredictionTrace,
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let timelines: Vec<(String, EvidenceTimeline)> = match (&args.records, &args.fixed, &args.daily) {
        (Some(p), _, _) => {
            let list: Vec<PatientTimeline> =
                serde_json::from_str(&read(p)?).with_context(|| format!("invalid records file {}", p.display()))?;
            list.into_iter().map(|r| (r.patient_id, r.timeline)).collect()
        }
        (None, Some(fixed), Some(daily)) => {
            let schema = load_schema(&args.schema)?;
            schema.check_model(&model)?;
            to_dataset(&load_records(fixed, daily, &schema)?, &schema)?.timelines
        }
        _ => bail!("give --records, or --fixed with --daily"),
    };
    let mut out = Vec::with_capacity(timelines.len());
    for (patient_id, timeline) in timelines {
        let trace = predict_trajectory(&model, &timeline).with_context(|| format!("patient {patient_id}"))?;
        out.push(PatientTrace { patient_id, trace });
    }
    emit(args.out.as_deref(), &pretty(&out))
}

fn parse_matrix(text: &str) -> Result<ConfusionMatrix> {
    let cells: Vec<u64> = text
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .context("--matrix takes four counts: tn,fp,fn,tp")?;
    ensure!(cells.len() == 4, "--matrix takes four counts: tn,fp,fn,tp");
    Ok(ConfusionMatrix::new(cells[0], cells[1], cells[2], cells[3]))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let (matrix, report, full) = match &args.matrix {
        Some(text) => {
            let m = parse_matrix(text)?;
            let r = metrics(&m)?;
            let full = pretty(&serde_json::json!({ "matrix": m, "metrics": r }));
            (m, r, full)
        }
        None => {
            let model_path = args.model.as_deref().context("--model is required")?;
            let model = load_model(model_path)?;
            let schema = load_schema(&args.schema)?;
            let (fixed, daily) = match (&args.test, &args.fixed, &args.daily) {
                (Some(dir), _, _) => (dir.join(FIXED_FILE), dir.join(DAILY_FILE)),
                (None, Some(f), Some(d)) => (f.clone(), d.clone()),
                _ => bail!("give --test DIR, or --fixed with --daily"),
            };
            let records = load_records(&fixed, &daily, &schema)?;
            ensure!(!records.is_empty(), "empty test set: no usable patients in {}", fixed.display());
            let evaluation = evaluate_model(&model, &records, &schema, args.threshold, args.horizon.into())?;
            if !evaluation.skipped.is_empty() {
                eprintln!("{} patients without a known outcome were skipped", evaluation.skipped.len());
            }
            (evaluation.matrix, evaluation.metrics.clone(), pretty(&evaluation))
        }
    };
    if let Some(p) = &args.out {
        write(p, &full)?;
    }
    if let Some(p) = &args.histogram {
        write(p, &histogram_csv(&matrix))?;
    }
    match args.format {
        Format::Table => print!("{}", render_table(&matrix, &report)),
        Format::Json => print!("{}", pretty(&serde_json::json!({ "matrix": matrix, "metrics": report }))),
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let (model, source) = match &args.model {
        Some(p) => (load_model(p)?, p.display().to_string()),
        None => (default_ground_truth(), "built-in".to_string()),
    };
    ensure!(args.patients > 0, "--patients must be at least 1");
    ensure!(
        1 <= args.min_stay && args.min_stay <= args.max_stay,
        "stay bounds must satisfy 1 <= --min-stay <= --max-stay"
    );
    let mut cfg = CohortConfig::new(args.patients, args.seed);
    cfg.stay_length = StayLength::Uniform {
        min: args.min_stay,
        max: args.max_stay,
    };
    let records = generate_cohort(&model, &schema, &cfg)?;
    let manifest = write_cohort(&args.out, &records, &schema, &cfg, &source)?;
    eprintln!(
        "wrote {} patients ({} patient-days) to {}",
        manifest.patients,
        manifest.patient_days,
        args.out.display()
    );
    print!("{}", pretty(&manifest));
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let schema = match &args.schema.schema {
        Some(_) => Some(load_schema(&args.schema)?),
        None => {
            let schema = default_schema();
            schema.check_model(&model).is_ok().then_some(schema)
        }
    };
    if let Some(dir) = &args.ui_dir {
        ensure!(dir.is_dir(), "no such directory: {}", dir.display());
    }
    let config = ServiceConfig {
        model,
        schema,
        threshold: args.threshold,
        data_dir: args.data_dir,
        ui_dir: args.ui_dir,
    };
    let runtime = tokio::runtime::Runtime::new().context("cannot start the async runtime")?;
    runtime
        .block_on(serve(config, SocketAddr::new(args.host, args.port)))
        .context("service failed")
}

fn cmd_defaults(args: DefaultsArgs) -> Result<()> {
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write(&args.out.join("schema.json"), &default_schema().to_json())?;
    write(&args.out.join("structure.json"), &default_structure().to_json())?;
    write(&args.out.join("model.json"), &default_ground_truth().to_json())?;
    eprintln!("wrote schema.json, structure.json and model.json to {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Learn(a) => cmd_learn(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Defaults(a) => cmd_defaults(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
