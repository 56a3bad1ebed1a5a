use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use careloop_core::domain::CaseId;
use careloop_core::draft::{prepare_draft, Backend, GeneratorConfig};
use careloop_core::generation::{ChatBackend, ChatEstimator, HttpChatClient};
use careloop_core::ingestion::{parse_case_bundle, serialize_case, CaseStore};
use careloop_core::metrics::{
    aggregate, one_sample_t, overall_mean, read_responses_csv, render_table, DIMENSIONS,
};
use careloop_core::simulator::{generate_cohort, label_histogram, CohortSpec, Mix};
use careloop_core::triage::{assess_case, TriageConfig, UrgencyEstimator};
use careloop_server::AppState;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "careloop", version, about = "Adherence triage, drafting and physician review")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "ADHERENCE_STORE_DIR", default_value = "careloop-store")]
    store_dir: PathBuf,

    /// TOML file with optional [triage] and [generator] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load case bundles (files or directories of *.json) into the store.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Classify urgency for one case or all of them.
    Triage {
        #[command(flatten)]
        target: Target,
        /// Also ask the external model for an estimate.
        #[arg(long, value_enum, default_value_t = Estimator::None)]
        estimator: Estimator,
    },
    /// Generate draft reports.
    Draft {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum)]
        gen_backend: Option<GenBackend>,
    },
    /// Run the review service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, value_enum)]
        gen_backend: Option<GenBackend>,
    },
    /// Write the approved note of a case as HTML.
    Export {
        case_id: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic cohort of case bundles.
    Simulate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// urgent,attention,stable
        #[arg(long, default_value = "14,8,2")]
        mix: Mix,
        #[arg(long, default_value_t = 7)]
        days: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Questionnaire statistics.
    Stats(StatsArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    case_id: Option<String>,
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct StatsArgs {
    /// CSV of questionnaire responses.
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Twelve comma-separated dimension means.
    #[arg(long, value_delimiter = ',')]
    dimension_means: Option<Vec<f64>>,
    /// One-sample t-test from summary statistics: mean,sd,n[,mu0].
    #[arg(long, value_delimiter = ',')]
    t_test: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenBackend {
    Template,
    External,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Estimator {
    None,
    External,
}

/// An error printed as `error: <code>: <message>`.
struct Failure {
    code: String,
    message: String,
}

impl From<careloop_core::Error> for Failure {
    fn from(e: careloop_core::Error) -> Self {
        Failure {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

fn fail(code: &str, message: impl Into<String>) -> Failure {
    Failure {
        code: code.to_string(),
        message: message.into(),
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    fail("IoError", format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

/// Print a line, ignoring a closed stdout.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    triage: Option<TriageConfig>,
    generator: Option<GeneratorConfig>,
}

struct Settings {
    triage: TriageConfig,
    generator: GeneratorConfig,
}

fn load_settings(path: Option<&Path>, backend: Option<GenBackend>) -> Result<Settings, Failure> {
    let file = match path {
        None => FileConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| fail("ConfigError", format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| fail("ConfigError", format!("{}: {e}", p.display())))?
        }
    };
    let triage = file.triage.unwrap_or_default();
    triage.validate()?;
    let mut generator = file.generator.unwrap_or_default().with_env();
    match backend {
        Some(GenBackend::Template) => generator.backend = Backend::Template,
        Some(GenBackend::External) => generator.backend = Backend::External,
        None => {}
    }
    generator.validate()?;
    Ok(Settings { triage, generator })
}

fn chat_backend(config: &GeneratorConfig) -> Option<Arc<dyn ChatBackend>> {
    if config.backend == Backend::External && !config.endpoint_url.is_empty() {
        Some(Arc::new(HttpChatClient::from_config(config)))
    } else {
        None
    }
}

/// Open an existing store; only `ingest` may create one.
fn open_store(dir: &Path, create: bool) -> Result<CaseStore, Failure> {
    if !create && !dir.join("audit.log").exists() {
        return Err(fail("StoreNotFound", format!("no store at {}", dir.display())));
    }
    Ok(CaseStore::open(dir)?)
}

fn targets(store: &CaseStore, target: &Target) -> Result<Vec<CaseId>, Failure> {
    match &target.case_id {
        Some(id) => {
            let id = CaseId::new(id.as_str());
            store.get_case(&id)?;
            Ok(vec![id])
        }
        None => Ok(store.case_ids()),
    }
}

fn bundle_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| io_fail(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn ingest(cli: &Cli, paths: &[PathBuf]) -> Outcome {
    let files = bundle_files(paths)?;
    if files.is_empty() {
        return Err(fail("NoBundles", "no bundle files found"));
    }
    let mut cases = Vec::new();
    for f in &files {
        let raw = std::fs::read(f).map_err(|e| io_fail(f, e))?;
        let case = parse_case_bundle(&raw).map_err(|e| {
            let e = careloop_core::Error::from(e);
            fail(e.code(), format!("{}: {e}", f.display()))
        })?;
        cases.push(case);
    }
    let store = open_store(&cli.store_dir, true)?;
    let acks = store.put_cases(cases)?;
    for a in &acks {
        out!("{}\tingested\t{}", a.case_id, a.digest);
    }
    Ok(())
}

fn triage(cli: &Cli, target: &Target, estimator: Estimator) -> Outcome {
    let settings = load_settings(cli.config.as_deref(), None)?;
    let store = open_store(&cli.store_dir, false)?;
    let estimator: Option<Arc<dyn UrgencyEstimator>> = match estimator {
        Estimator::None => None,
        Estimator::External => {
            let config = GeneratorConfig {
                backend: Backend::External,
                ..settings.generator.clone()
            };
            if config.endpoint_url.is_empty() {
                return Err(fail("ServiceUnreachable", "ADHERENCE_GEN_URL is not set"));
            }
            Some(Arc::new(ChatEstimator::new(HttpChatClient::from_config(&config), config)))
        }
    };
    // Everything is computed before anything is saved.
    let ids = targets(&store, target)?;
    let mut results = Vec::with_capacity(ids.len());
    for id in &ids {
        results.push(assess_case(&store, id, &settings.triage, estimator.clone())?);
    }
    for (id, r) in ids.iter().zip(results) {
        let label = r.label;
        let failsafe = r.failsafe_triggered;
        store.save_triage(id, r)?;
        out!("{id}\t{label}{}", if failsafe { "\tfailsafe" } else { "" });
    }
    if target.all {
        let labels = ids.iter().filter_map(|id| store.triage(id).map(|t| t.label));
        let h = label_histogram(labels);
        let summary: Vec<String> = h.iter().map(|(l, n)| format!("{l}={n}")).collect();
        out!("total\t{}", summary.join(" "));
    }
    Ok(())
}

fn draft(cli: &Cli, target: &Target, backend: Option<GenBackend>) -> Outcome {
    let settings = load_settings(cli.config.as_deref(), backend)?;
    let store = open_store(&cli.store_dir, false)?;
    let chat = chat_backend(&settings.generator);
    let ids = targets(&store, target)?;
    for id in &ids {
        if store.session(id).is_some() {
            return Err(careloop_core::Error::SessionExists(id.clone()).into());
        }
    }
    let mut prepared = Vec::with_capacity(ids.len());
    for id in &ids {
        prepared.push(prepare_draft(&store, id, &settings.generator, chat.as_deref())?);
    }
    for (id, (report, charts)) in ids.iter().zip(prepared) {
        let sections = report.sections.len();
        let external = report
            .sections
            .iter()
            .filter(|s| s.origin == careloop_core::draft::Origin::ExternalModel)
            .count();
        store.save_draft(id, report, charts)?;
        out!("{id}\tdrafted\t{sections} sections\t{external} external");
    }
    Ok(())
}

fn serve(cli: &Cli, host: std::net::IpAddr, port: u16, backend: Option<GenBackend>) -> Outcome {
    let settings = load_settings(cli.config.as_deref(), backend)?;
    let store = open_store(&cli.store_dir, true)?;
    let state = AppState {
        store: Arc::new(store),
        triage_config: Arc::new(settings.triage),
        backend: chat_backend(&settings.generator),
        generator: Arc::new(settings.generator),
        estimator: None,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| fail("IoError", e.to_string()))?;
    runtime
        .block_on(careloop_server::serve(state, SocketAddr::new(host, port)))
        .map_err(|e| fail("IoError", e.to_string()))
}

fn export(cli: &Cli, case_id: &str, out: Option<&Path>) -> Outcome {
    let store = open_store(&cli.store_dir, false)?;
    let id = CaseId::new(case_id);
    store.get_case(&id)?;
    let html = store
        .export_html(&id)
        .ok_or_else(|| fail("NotExported", format!("case `{id}` has no approved note yet")))?;
    match out {
        Some(path) => {
            std::fs::write(path, html).map_err(|e| io_fail(path, e))?;
            out!("{id}\texported\t{}", path.display());
        }
        None => {
            use std::io::Write;
            let _ = std::io::stdout().lock().write_all(html.as_bytes());
        }
    }
    Ok(())
}

fn simulate(seed: u64, mix: Mix, days: u32, out: &Path) -> Outcome {
    if days == 0 {
        return Err(fail("ConfigError", "--days must be at least 1"));
    }
    let mut spec = CohortSpec::new(seed, mix);
    spec.period_days = days;
    let cohort = generate_cohort(&spec);
    std::fs::create_dir_all(out).map_err(|e| io_fail(out, e))?;
    for case in &cohort {
        let path = out.join(format!("{}.json", case.case_id));
        std::fs::write(&path, serialize_case(case)).map_err(|e| io_fail(&path, e))?;
    }
    out!("wrote {} bundles to {}", cohort.len(), out.display());
    Ok(())
}

fn stats(args: &StatsArgs) -> Outcome {
    if let Some(path) = &args.responses {
        let file = std::fs::File::open(path).map_err(|e| io_fail(path, e))?;
        let responses = read_responses_csv(file)?;
        let table = render_table(&aggregate(&responses)?);
        out!("{}", table.trim_end());
    } else if let Some(means) = &args.dimension_means {
        if means.len() != DIMENSIONS {
            return Err(fail(
                "InvalidResponses",
                format!("expected {DIMENSIONS} dimension means, got {}", means.len()),
            ));
        }
        out!("overall_mean\t{:.2}", overall_mean(means));
    } else if let Some(v) = &args.t_test {
        if !(3..=4).contains(&v.len()) {
            return Err(fail("ConfigError", "--t-test takes mean,sd,n[,mu0]"));
        }
        let n = v[2];
        if n.fract() != 0.0 || n < 0.0 || n > f64::from(u32::MAX) {
            return Err(fail("DegenerateInput", format!("n must be a whole number, got {n}")));
        }
        let r = one_sample_t(v[0], v[1], n as u32, v.get(3).copied().unwrap_or(5.0))?;
        out!("t({})\t{:.2}\tp\t{:.3}", r.df, r.t, r.p_two_sided);
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Ingest { paths } => ingest(cli, paths),
        Command::Triage { target, estimator } => triage(cli, target, *estimator),
        Command::Draft { target, gen_backend } => draft(cli, target, *gen_backend),
        Command::Serve { port, host, gen_backend } => serve(cli, *host, *port, *gen_backend),
        Command::Export { case_id, out } => export(cli, case_id, out.as_deref()),
        Command::Simulate { seed, mix, days, out } => simulate(*seed, *mix, *days, out),
        Command::Stats(args) => stats(args),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.code, f.message);
            ExitCode::from(1)
        }
    }
}
