//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on a domain error (bad input file, failed
//! validation), 2 on a usage error.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bpmn::{bind_requirements, parse_bpmn};
use crate::config::{AppConfig, ConfigPatch, QosPatch, CONFIG_ENV};
use crate::lexicon::{keyword_set, SynonymLexicon};
use crate::registry::{import_wsdl, QosSnapshot, ServiceRegistry};
use crate::report::{explain, SelectionReport};
use crate::serve::{serve, ServerState};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "procsel", version, about = "Rank web service operations for BPMN service tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank candidate operations for every service task of a process.
    Select(SelectArgs),
    /// Parse a BPMN file and bind its tasks to annotations.
    Validate {
        #[arg(long)]
        bpmn: PathBuf,
    },
    /// Modify a registry file.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Break down one ranked candidate of a saved report.
    Explain {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        rank: usize,
    },
    /// Serve selection over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config file; falls back to $PROCSEL_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub functional_weight: Option<f64>,
    #[arg(long)]
    pub stability_weight: Option<f64>,
    #[arg(long)]
    pub n_gaps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub bpmn: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
}

#[derive(Debug, Subcommand)]
pub enum RegistryCommand {
    /// Add the service described by a WSDL 1.1 file.
    ImportWsdl {
        wsdl: PathBuf,
        #[arg(long)]
        into: PathBuf,
        /// Target category; defaults to the service name.
        #[arg(long)]
        category: Option<String>,
        /// Category keywords used when the category is created.
        #[arg(long, value_delimiter = ',')]
        keywords: Vec<String>,
    },
    /// Append a QoS snapshot to an operation's history.
    Snapshot {
        /// Registry file; falls back to the config's `registry`.
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        service: String,
        #[arg(long)]
        op: String,
        #[arg(long)]
        availability: f64,
        #[arg(long)]
        exec_ms: f64,
        #[arg(long)]
        calls: u64,
        /// ISO-8601; defaults to now.
        #[arg(long)]
        timestamp: Option<DateTime<Utc>>,
    },
}

/// Failure of a subcommand, split by exit code.
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(args: &ConfigArgs) -> Result<AppConfig, Error> {
    let file = args
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let base = match file {
        Some(path) => ConfigPatch::load(&path)?.apply(&AppConfig::default())?,
        None => AppConfig::default(),
    };
    let qos = (args.stability_weight.is_some() || args.n_gaps.is_some()).then(|| QosPatch {
        stability_weight: args.stability_weight,
        n_gaps: args.n_gaps,
        ..QosPatch::default()
    });
    let flags = ConfigPatch {
        qos,
        functional_weight: args.functional_weight,
        score_table: None,
        lexicon: args.lexicon.clone(),
        registry: args.registry.clone(),
    };
    Ok(flags.apply(&base)?)
}

fn load_lexicon(config: &AppConfig) -> Result<SynonymLexicon, Error> {
    Ok(match &config.lexicon {
        Some(path) => SynonymLexicon::load(path)?,
        None => SynonymLexicon::empty(),
    })
}

fn registry_path(config: &AppConfig) -> Result<PathBuf, Failure> {
    config
        .registry
        .clone()
        .ok_or_else(|| Failure::Usage("a registry is required (--registry or `registry` in the config file)".into()))
}

fn run_select(args: &SelectArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = resolve_config(&args.config)?;
    let registry = ServiceRegistry::load(&registry_path(&config)?).map_err(Error::from)?;
    let lexicon = load_lexicon(&config)?;
    let xml = read(&args.bpmn)?;
    let report = crate::select(&xml, &registry, &lexicon, &config.selection)?;
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    };
    match &args.out {
        Some(path) => write(path, &text)?,
        None => out.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })?,
    }
    Ok(())
}

fn run_validate(bpmn: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let xml = read(bpmn)?;
    let process = parse_bpmn(&xml).map_err(Error::from)?;
    let reqs = bind_requirements(&process).map_err(Error::from)?;
    let _ = writeln!(
        out,
        "{}: process `{}` is valid ({} service tasks, {} annotations, {} associations, {} flows)",
        bpmn.display(),
        process.id,
        process.tasks.len(),
        process.annotations.len(),
        process.associations.len(),
        process.flows.len()
    );
    for r in reqs {
        let _ = writeln!(
            out,
            "  {}: {} inputs, {} outputs, context [{}]",
            r.task_id,
            r.inputs.len(),
            r.outputs.len(),
            r.context_keywords.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(", ")
        );
    }
    Ok(())
}

fn run_registry(cmd: &RegistryCommand, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        RegistryCommand::ImportWsdl {
            wsdl,
            into,
            category,
            keywords,
        } => {
            let mut registry = if into.exists() {
                ServiceRegistry::load(into).map_err(Error::from)?
            } else {
                ServiceRegistry::default()
            };
            let service = import_wsdl(&read(wsdl)?, Utc::now()).map_err(Error::from)?;
            let category = category.clone().unwrap_or_else(|| service.name.clone());
            let mut kw = keyword_set(keywords.iter().map(String::as_str));
            if kw.is_empty() {
                kw = keyword_set([category.as_str()]);
            }
            let (name, key, ops) = (service.name.clone(), service.service_key.clone(), service.operations.len());
            registry.add_service(&category, kw, service).map_err(Error::from)?;
            registry.save(into).map_err(Error::from)?;
            let _ = writeln!(out, "imported `{name}` as {key} ({ops} operations) into category `{category}`");
            Ok(())
        }
        RegistryCommand::Snapshot {
            registry,
            config,
            service,
            op,
            availability,
            exec_ms,
            calls,
            timestamp,
        } => {
            let config = resolve_config(&ConfigArgs {
                config: config.clone(),
                registry: registry.clone(),
                lexicon: None,
                functional_weight: None,
                stability_weight: None,
                n_gaps: None,
            })?;
            let path = registry_path(&config)?;
            let mut reg = ServiceRegistry::load(&path).map_err(Error::from)?;
            let ts = timestamp.unwrap_or_else(Utc::now);
            reg.append_snapshot(service, op, QosSnapshot::new(ts, *availability, *exec_ms, *calls))
                .map_err(Error::from)?;
            reg.save(&path).map_err(Error::from)?;
            let _ = writeln!(out, "recorded snapshot {} for {service}/{op}", ts.to_rfc3339());
            Ok(())
        }
    }
}

fn run_explain(report: &Path, task: &str, rank: usize, out: &mut dyn Write) -> Result<(), Failure> {
    let report = SelectionReport::from_json(&read(report)?).map_err(Error::from)?;
    let text = explain(&report, task, rank).map_err(Error::from)?;
    let _ = out.write_all(text.as_bytes());
    Ok(())
}

fn run_serve(args: &ServeArgs) -> Result<(), Failure> {
    let config = resolve_config(&args.config)?;
    let registry = ServiceRegistry::load(&registry_path(&config)?).map_err(Error::from)?;
    let lexicon = load_lexicon(&config)?;
    let state = Arc::new(ServerState {
        registry,
        lexicon,
        config,
    });
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|source| Error::Io {
        path: "tokio runtime".into(),
        source,
    })?;
    runtime
        .block_on(serve(state, addr))
        .map_err(|source| Error::Io {
            path: addr.to_string(),
            source,
        })?;
    Ok(())
}

/// Entry point shared by the binary and tests. Returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Select(args) => run_select(args, out),
        Command::Validate { bpmn } => run_validate(bpmn, out),
        Command::Registry(cmd) => run_registry(cmd, out),
        Command::Explain { report, task, rank } => run_explain(report, task, *rank, out),
        Command::Serve(args) => run_serve(args),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            let mut shown = e.to_string();
            let _ = writeln!(err, "error: {shown}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                // most variants already fold their source into the message
                let text = s.to_string();
                if !shown.contains(&text) {
                    let _ = writeln!(err, "  caused by: {text}");
                }
                shown = text;
                source = s.source();
            }
            1
        }
    }
}
