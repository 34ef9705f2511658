//! `schemaforge`: convert, infer, validate, truncate, chat about schemas,
//! generate and apply mappings, or run the HTTP service.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 usage or input error,
//! 3 gateway error. Data goes to stdout, everything else to stderr.

mod chat;
mod config;
mod error;
mod io;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schemaforge_core::document::DocPath;
use schemaforge_core::gateway::{
    ChatRequest, GatewayConfig, GatewayError, LiveTransport, RecordingTransport, ReplayTransport,
    Transport,
};
use schemaforge_core::infer::{infer_schema, InferenceOptions};
use schemaforge_core::mapping::{evaluate_mapping, parse_mapping, validate_syntax};
use schemaforge_core::schema::{validate_instance, validate_schema};
use schemaforge_core::session::{
    build_prompt_with, PromptInputs, PromptKind, PromptSettings, SessionState,
};
use schemaforge_core::truncate::{truncate_document, TruncationConfig};

use crate::config::FileConfig;
use crate::error::{CliError, EXIT_GATEWAY, EXIT_INVALID};
use crate::io::{Format, Out};

#[derive(Parser)]
#[command(name = "schemaforge", version, about = "JSON Schema toolkit with LLM assistance")]
struct Cli {
    /// Base URL of an OpenAI-compatible API.
    #[arg(long, global = true, value_name = "URL")]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// Answer model requests from recorded fixtures in this directory.
    #[arg(long, global = true, value_name = "DIR")]
    replay: Option<PathBuf>,
    /// Call the live endpoint and save every answer into the --replay directory.
    #[arg(long, global = true, requires = "replay")]
    record: bool,
    /// Settings file (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Indent JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    /// More log output on stderr (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert JSON, YAML, XML or CSV to JSON or YAML.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: OutFormat,
        /// Input format when the extension does not tell.
        #[arg(long, value_enum)]
        from: Option<Format>,
    },
    /// Infer a JSON Schema from a document.
    Infer {
        doc: PathBuf,
        #[arg(long, value_enum)]
        from: Option<Format>,
        /// Require every property seen in any sibling object.
        #[arg(long)]
        require_all: bool,
        /// Type whole numbers as "number" rather than "integer".
        #[arg(long)]
        no_integer: bool,
    },
    /// Validate a document against a schema.
    Validate {
        doc: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, value_enum)]
        from: Option<Format>,
    },
    /// Shrink a document by trimming arrays and objects.
    Truncate {
        doc: PathBuf,
        #[arg(long, value_enum)]
        from: Option<Format>,
        #[command(flatten)]
        trunc: TruncateFlags,
    },
    /// Schema assistance.
    Schema {
        #[command(subcommand)]
        command: SchemaCommand,
    },
    /// Mapping generation and execution.
    Map {
        #[command(subcommand)]
        command: MapCommand,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = schemaforge_server::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "schemaforge-data")]
        data_dir: PathBuf,
        #[command(flatten)]
        trunc: TruncateFlags,
    },
}

#[derive(Subcommand)]
enum SchemaCommand {
    /// Chat about a schema; reads requests and commands from stdin and
    /// prints the resulting schema on stdout.
    Chat {
        #[arg(long)]
        schema: PathBuf,
        /// JSON pointer of the sub-schema that requests refer to.
        #[arg(long, value_name = "POINTER")]
        select: Option<String>,
    },
}

#[derive(Subcommand)]
enum MapCommand {
    /// Ask the model for a mapping from a document to a target schema.
    Generate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target_schema: PathBuf,
        #[arg(long)]
        remarks: Option<String>,
        #[arg(long, value_enum)]
        from: Option<Format>,
        /// Print `{"mapping", "report"}` instead of the bare mapping.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        trunc: TruncateFlags,
    },
    /// Run a mapping over a document.
    Apply {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long, value_enum)]
        from: Option<Format>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Yaml,
}

#[derive(Args, Clone, Default)]
struct TruncateFlags {
    #[arg(long, value_name = "BYTES")]
    truncate_target_bytes: Option<usize>,
    #[arg(long, value_name = "N")]
    truncate_n_start: Option<usize>,
    #[arg(long, value_name = "N")]
    truncate_n_min: Option<usize>,
    #[arg(long, value_name = "FACTOR")]
    truncate_prop_factor: Option<usize>,
}

impl TruncateFlags {
    fn resolve(&self, file: &FileConfig) -> Result<TruncationConfig, CliError> {
        let base = file.truncation();
        let cfg = TruncationConfig {
            target_bytes: self.truncate_target_bytes.unwrap_or(base.target_bytes),
            n_start: self.truncate_n_start.unwrap_or(base.n_start),
            n_min: self.truncate_n_min.unwrap_or(base.n_min),
            property_factor: self.truncate_prop_factor.unwrap_or(base.property_factor),
        };
        cfg.check().map_err(|e| CliError::Usage(format!("truncation settings: {e}")))?;
        Ok(cfg)
    }
}

/// Stands in for the live transport when no key is configured, so the
/// commands that never call the model still work.
struct NoKey;

impl Transport for NoKey {
    fn send(&self, _: &ChatRequest) -> Result<String, GatewayError> {
        Err(GatewayError::MissingApiKey)
    }
}

struct Ctx {
    file: FileConfig,
    gateway: GatewayConfig,
    replay: Option<PathBuf>,
    record: bool,
    out: Out,
}

impl Ctx {
    fn transport(&self) -> Result<Arc<dyn Transport>, CliError> {
        match (&self.replay, self.record) {
            (Some(dir), false) => Ok(Arc::new(ReplayTransport::from_dir(dir))),
            (Some(dir), true) => {
                let live: Arc<dyn Transport> = Arc::new(LiveTransport::new(&self.gateway)?);
                Ok(Arc::new(RecordingTransport::new(live, dir)))
            }
            (None, _) => match LiveTransport::new(&self.gateway) {
                Ok(t) => Ok(Arc::new(t)),
                Err(GatewayError::MissingApiKey) => Ok(Arc::new(NoKey)),
                Err(e) => Err(e.into()),
            },
        }
    }

    fn settings(&self, flags: &TruncateFlags) -> Result<PromptSettings, CliError> {
        Ok(PromptSettings {
            truncation: flags.resolve(&self.file)?,
            inference: InferenceOptions::default(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("schemaforge: {msg}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let gateway = file.gateway(cli.endpoint.as_deref(), cli.model.as_deref());
    let ctx = Ctx {
        file,
        gateway,
        replay: cli.replay,
        record: cli.record,
        out: Out { pretty: cli.pretty },
    };
    match cli.command {
        Command::Convert { input, to, from } => {
            let doc = io::read_document(&input, from)?;
            match to {
                OutFormat::Json => ctx.out.json(&doc),
                OutFormat::Yaml => ctx.out.yaml(&doc),
            }
        }
        Command::Infer {
            doc,
            from,
            require_all,
            no_integer,
        } => {
            let doc = io::read_document(&doc, from)?;
            let opts = InferenceOptions {
                detect_integer: !no_integer,
                required_mode: if require_all {
                    schemaforge_core::infer::RequiredMode::AllPresent
                } else {
                    schemaforge_core::infer::RequiredMode::Intersection
                },
                ..InferenceOptions::default()
            };
            ctx.out.json(infer_schema(&doc, &opts).as_node())
        }
        Command::Validate { doc, schema, from } => validate(&ctx, &doc, &schema, from),
        Command::Truncate { doc, from, trunc } => {
            let cfg = trunc.resolve(&ctx.file)?;
            let doc = io::read_document(&doc, from)?;
            let out = truncate_document(&doc, &cfg);
            eprintln!(
                "{} -> {} bytes; n = {} after {} iteration(s); budget {}",
                schemaforge_core::document::compact_len(&doc),
                out.bytes,
                out.final_n,
                out.iterations,
                if out.budget_met { "met" } else { "missed" }
            );
            ctx.out.json(&out.doc)
        }
        Command::Schema {
            command: SchemaCommand::Chat { schema, select },
        } => schema_chat(&ctx, &schema, select.as_deref()),
        Command::Map { command } => match command {
            MapCommand::Generate {
                input,
                target_schema,
                remarks,
                from,
                json,
                trunc,
            } => map_generate(&ctx, &input, &target_schema, remarks, from, json, &trunc),
            MapCommand::Apply {
                input,
                mapping,
                from,
            } => map_apply(&ctx, &input, &mapping, from),
        },
        Command::Serve {
            port,
            data_dir,
            trunc,
        } => serve(&ctx, port, data_dir, &trunc),
    }
}

fn validate(ctx: &Ctx, doc: &Path, schema: &Path, from: Option<Format>) -> Result<(), CliError> {
    let schema = io::read_schema(schema)?;
    let meta = validate_schema(schema.as_node());
    if !meta.valid {
        ctx.out.value(&meta)?;
        return Err(CliError::Invalid("the schema itself is not valid".into()));
    }
    let doc = io::read_document(doc, from)?;
    let report = validate_instance(&doc, &schema).map_err(|e| CliError::Invalid(e.to_string()))?;
    ctx.out.value(&report)?;
    if report.valid {
        Ok(())
    } else {
        for v in &report.violations {
            eprintln!("{v}");
        }
        Err(CliError::Exit(EXIT_INVALID))
    }
}

fn schema_chat(ctx: &Ctx, schema_path: &Path, select: Option<&str>) -> Result<(), CliError> {
    let schema = io::read_schema(schema_path)?;
    let selection = match select {
        Some(p) => DocPath::from_pointer(p).map_err(|e| CliError::Usage(e.to_string()))?,
        None => DocPath::root(),
    };
    let transport = ctx.transport()?;
    let settings = ctx.settings(&TruncateFlags::default())?;
    let mut chat = chat::Chat::new(&ctx.gateway, transport.as_ref(), &settings, schema, selection);
    let mut stderr = std::io::stderr().lock();
    chat.run(std::io::stdin().lock(), &mut stderr)?;
    stderr.flush()?;
    ctx.out.json(chat.schema.as_node())?;
    if chat.gateway_failed {
        return Err(CliError::Exit(EXIT_GATEWAY));
    }
    Ok(())
}

fn map_generate(
    ctx: &Ctx,
    input: &Path,
    target: &Path,
    remarks: Option<String>,
    from: Option<Format>,
    json: bool,
    trunc: &TruncateFlags,
) -> Result<(), CliError> {
    let settings = ctx.settings(trunc)?;
    let document = io::read_document(input, from)?;
    let target_schema = io::read_schema(target)?;
    let inputs = PromptInputs {
        document: Some(document),
        target_schema: Some(target_schema),
        remarks,
        ..PromptInputs::default()
    };
    let bundle = build_prompt_with(PromptKind::MappingGenerate, &inputs, &settings)?;
    if let Some(t) = &bundle.truncation {
        if t.iterations > 0 {
            eprintln!(
                "document sent truncated: {} -> {} bytes (n = {})",
                t.original_bytes, t.bytes, t.final_n
            );
        }
    }
    let transport = ctx.transport()?;
    let mut session = SessionState::new(PromptKind::MappingGenerate);
    session.submit(&bundle, &ctx.gateway, transport.as_ref())?;
    let mapping = session.proposal.clone().unwrap_or_default();
    let report = validate_syntax(&mapping);
    if json {
        ctx.out.value(&serde_json::json!({"mapping": mapping, "report": report}))?;
    } else {
        ctx.out.text(&mapping)?;
    }
    if report.valid {
        eprintln!("syntax: valid");
        Ok(())
    } else {
        for d in &report.diagnostics {
            eprintln!("syntax: {}:{}: {}", d.line, d.column, d.message);
        }
        Err(CliError::Invalid("the generated mapping is not valid".into()))
    }
}

fn map_apply(ctx: &Ctx, input: &Path, mapping: &Path, from: Option<Format>) -> Result<(), CliError> {
    let source = io::read_text(mapping)?;
    let ast = parse_mapping(&source).map_err(|e| CliError::Invalid(e.render(&source)))?;
    let report = validate_syntax(&source);
    if !report.valid {
        for d in &report.diagnostics {
            eprintln!("{}:{}:{}: {}", mapping.display(), d.line, d.column, d.message);
        }
        return Err(CliError::Invalid("the mapping is not valid".into()));
    }
    let doc = io::read_document(input, from)?;
    match evaluate_mapping(&ast, &doc).map_err(|e| CliError::Invalid(e.render(&source)))? {
        Some(v) => ctx.out.json(&v),
        None => Err(CliError::Invalid("the mapping produced no value".into())),
    }
}

fn serve(ctx: &Ctx, port: u16, data_dir: PathBuf, trunc: &TruncateFlags) -> Result<(), CliError> {
    let state = schemaforge_server::AppState {
        store: schemaforge_server::store::ProjectStore::open(&data_dir)
            .map_err(|e| CliError::input(&data_dir, e))?,
        gateway: ctx.gateway.clone(),
        transport: ctx.transport()?,
        settings: ctx.settings(trunc)?,
        clock: schemaforge_server::system_clock(),
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        schemaforge_server::serve(listener, Arc::new(state)).await
    })?;
    Ok(())
}
