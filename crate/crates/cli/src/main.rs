//! `miniric` — operator command line for a directory-backed deployment.
//!
//! Every invocation is one discrete command against a state directory chosen
//! by `--home`, then `$MINIRIC_ENDPOINT`, then `./.miniric`. Commands that
//! need a live platform replay the directory's records into a fresh
//! in-process deployment (simulated time restarts at zero), apply the verb,
//! and persist whatever changed. Storage-only commands (`onboard`, `health`,
//! `get_charts_list`, `download_values`, `sdl`, `node list`) act on the files
//! directly and never start the platform, so they cannot disturb what the
//! installed apps have journaled.
//!
//! Lifecycle verbs accept both positional arguments and the long-flag
//! spelling (`install kpm_monitor 1.0.0 ricxapp` and
//! `install --xapp_chart_name=kpm_monitor --version=1.0.0 --namespace=ricxapp`
//! are equivalent). `--json` switches any command to machine-readable output.

mod state;

use anyhow::{anyhow, bail, Context, Error, Result};
use clap::{Args, Parser, Subcommand};
use miniric_core::appmgr::APPMGR_HTTP;
use miniric_core::e2::{NodeConfig, TraceSource};
use miniric_core::logging::LogEntry;
use miniric_core::rest::RestRequest;
use miniric_core::ric::Ric;
use miniric_core::submgr::SUBMGR_HTTP;
use miniric_core::xapp::http_service_name;
use serde_json::{json, Value};
use state::{Home, InstanceRecord, NodeRecord};
use std::fs;
use std::path::PathBuf;

// ---------------------------------------------------------------------------
// Command grammar
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "miniric",
    version,
    about = "Operator client for a miniric deployment"
)]
struct Cli {
    /// State directory (default: $MINIRIC_ENDPOINT, then ./.miniric).
    #[arg(long, global = true, value_name = "DIR")]
    home: Option<PathBuf>,

    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an xApp descriptor (and optional config schema) and store it
    /// as a chart.
    Onboard(OnboardArgs),
    /// Deploy an onboarded chart.
    Install(InstallArgs),
    /// Remove a deployed xApp.
    Uninstall(UninstallArgs),
    /// Replace a deployed xApp with a newer chart version.
    Upgrade(UpgradeArgs),
    /// Replace a deployed xApp with an older chart version.
    Rollback(UpgradeArgs),
    /// Check the backend stores.
    Health,
    /// List every onboarded chart version (always JSON).
    #[command(name = "get_charts_list")]
    GetChartsList,
    /// Probe one deployed xApp; fails unless it is running and ready.
    #[command(name = "health_check")]
    HealthCheck(HealthCheckArgs),
    /// Write a chart's overridable controls to a values file.
    #[command(name = "download_values")]
    DownloadValues(DownloadValuesArgs),
    /// Read or replace a deployed xApp's configuration.
    Config {
        #[command(subcommand)]
        action: ConfigCmd,
    },
    /// List deployed xApps.
    Instances,
    /// Print an xApp's log, or the platform log with --platform.
    Logs(LogsArgs),
    /// Show the routing state, or apply an update with `routes apply`.
    Routes(RoutesArgs),
    /// Shared data layer commands.
    Sdl {
        #[command(subcommand)]
        action: SdlCmd,
    },
    /// E2 subscription commands.
    Subs {
        #[command(subcommand)]
        action: SubsCmd,
    },
    /// Simulated E2 node commands.
    Node {
        #[command(subcommand)]
        action: NodeCmd,
    },
    /// Run the deployment forward by a number of simulated milliseconds.
    Advance {
        /// Simulated time to cover.
        #[arg(value_name = "MILLISECONDS")]
        ms: u64,
    },
}

#[derive(Args, Debug)]
struct OnboardArgs {
    /// Descriptor JSON path.
    #[arg(value_name = "CONFIG_FILE")]
    config: Option<PathBuf>,
    /// Config schema JSON path.
    #[arg(value_name = "SCHEMA_FILE")]
    schema: Option<PathBuf>,
    #[arg(long = "config_file_path", value_name = "PATH")]
    config_file_path: Option<PathBuf>,
    #[arg(long = "schema_file_path", value_name = "PATH")]
    schema_file_path: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InstallArgs {
    #[arg(value_name = "NAME")]
    name: Option<String>,
    #[arg(value_name = "VERSION")]
    version_pos: Option<String>,
    #[arg(value_name = "NAMESPACE")]
    namespace_pos: Option<String>,
    #[arg(long = "xapp_chart_name", value_name = "NAME")]
    xapp_chart_name: Option<String>,
    /// Chart version; defaults to the highest onboarded one.
    #[arg(long = "version", value_name = "VERSION")]
    version: Option<String>,
    #[arg(long = "namespace", value_name = "NS")]
    namespace: Option<String>,
    /// JSON file whose controls replace the chart defaults after install.
    #[arg(long, value_name = "PATH")]
    overridefile: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UninstallArgs {
    #[arg(value_name = "NAME")]
    name: Option<String>,
    #[arg(value_name = "NAMESPACE")]
    namespace_pos: Option<String>,
    #[arg(long = "xapp_chart_name", value_name = "NAME")]
    xapp_chart_name: Option<String>,
    #[arg(long = "namespace", value_name = "NS")]
    namespace: Option<String>,
    /// Also purge every SDL namespace the app created.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct UpgradeArgs {
    #[arg(value_name = "NAME")]
    name: Option<String>,
    #[arg(value_name = "OLD_VERSION")]
    old_pos: Option<String>,
    #[arg(value_name = "NEW_VERSION")]
    new_pos: Option<String>,
    #[arg(value_name = "NAMESPACE")]
    namespace_pos: Option<String>,
    #[arg(long = "xapp_chart_name", value_name = "NAME")]
    xapp_chart_name: Option<String>,
    /// Version expected to be running now; checked before anything changes.
    #[arg(long = "old_version", value_name = "VERSION")]
    old_version: Option<String>,
    /// Version to deploy.
    #[arg(long = "new_version", value_name = "VERSION")]
    new_version: Option<String>,
    #[arg(long = "namespace", value_name = "NS")]
    namespace: Option<String>,
}

#[derive(Args, Debug)]
struct HealthCheckArgs {
    #[arg(value_name = "NAME")]
    name: Option<String>,
    #[arg(value_name = "NAMESPACE")]
    namespace_pos: Option<String>,
    #[arg(long = "xapp_chart_name", value_name = "NAME")]
    xapp_chart_name: Option<String>,
    #[arg(long = "namespace", value_name = "NS")]
    namespace: Option<String>,
}

#[derive(Args, Debug)]
struct DownloadValuesArgs {
    #[arg(value_name = "NAME")]
    name: Option<String>,
    #[arg(value_name = "VERSION")]
    version_pos: Option<String>,
    #[arg(long = "xapp_chart_name", value_name = "NAME")]
    xapp_chart_name: Option<String>,
    #[arg(long = "version", value_name = "VERSION")]
    version: Option<String>,
    /// Target file, or directory to receive <name>-<version>-values.json.
    #[arg(long = "output_path", value_name = "PATH", default_value = ".")]
    output_path: PathBuf,
}

#[derive(Subcommand, Debug)]
enum ConfigCmd {
    /// Replace the controls section; validated against the chart schema.
    Set {
        name: String,
        /// Controls as a JSON literal, or @file to read from a file.
        controls: String,
    },
    /// Print the active configuration.
    Get { name: String },
}

#[derive(Args, Debug)]
struct LogsArgs {
    /// App name; omit together with --platform for the platform log.
    name: Option<String>,
    /// Show the platform components' log instead.
    #[arg(long)]
    platform: bool,
}

#[derive(Args, Debug)]
struct RoutesArgs {
    #[command(subcommand)]
    action: Option<RoutesAction>,
}

#[derive(Subcommand, Debug)]
enum RoutesAction {
    /// Apply a routing-table update file and persist it for future
    /// invocations.
    Apply {
        #[arg(value_name = "FILE")]
        file: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum SdlCmd {
    /// Verify the store opens and report its size.
    Healthcheck,
    /// List keys in a namespace, optionally under a prefix.
    Keys {
        ns: String,
        prefix: Option<String>,
    },
    /// Print the value stored under a key.
    Get { ns: String, key: String },
    /// Store a value under a key.
    Set {
        ns: String,
        key: String,
        value: String,
    },
}

#[derive(Subcommand, Debug)]
enum SubsCmd {
    /// List active subscriptions.
    List,
    /// Delete one subscription by its REST id.
    Delete {
        #[arg(value_name = "ID")]
        id: String,
    },
}

#[derive(Subcommand, Debug)]
enum NodeCmd {
    /// Attach a simulated gNodeB.
    Attach {
        /// PLMN identity, six hex digits.
        #[arg(long, value_name = "PLMN")]
        plmn: String,
        /// gNodeB identity bit string.
        #[arg(long, value_name = "NBID")]
        nbid: String,
        /// Measurement name the node's KPM function serves (repeatable).
        #[arg(long = "meas", value_name = "NAME")]
        meas: Vec<String>,
        /// Seed for the node's synthetic measurement source.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// RAN function id of the node's KPM model.
        #[arg(long = "ran_function_id", default_value_t = 200)]
        ran_function_id: u32,
    },
    /// Detach a node.
    Detach { name: String },
    /// List attached nodes.
    List,
    /// Mark a node E2-connected.
    Connect { name: String },
    /// Mark a node E2-disconnected (it stops emitting and answering).
    Disconnect { name: String },
}

// ---------------------------------------------------------------------------
// Entry point and shared helpers
// ---------------------------------------------------------------------------

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let msg = format!("{err:#}");
        eprintln!("error: {}: {}", classify(&msg), msg);
        std::process::exit(1);
    }
}

/// Map an error message onto a stable category name for scripts.
fn classify(msg: &str) -> &'static str {
    const RULES: &[(&str, &str)] = &[
        ("no onboarded chart", "ChartNotFound"),
        ("no runnable image", "ImageNotFound"),
        ("already being uninstalled", "AlreadyStopping"),
        ("already installed", "AlreadyInstalled"),
        ("no installed xapp", "AppNotFound"),
        ("descriptor", "ValidationError"),
        ("controls rejected", "ValidationError"),
        ("schema invalid", "ValidationError"),
        ("is not of the form", "ValidationError"),
        ("not valid json", "ValidationError"),
        ("already attached", "NodeExists"),
        ("no attached node", "NodeNotFound"),
        ("unsupported namespace", "UnknownNamespace"),
        ("version mismatch", "VersionMismatch"),
        ("unknown subscription", "SubscriptionNotFound"),
        ("failing health check", "NotRunning"),
        ("no value for", "KeyNotFound"),
        ("probe undeliverable", "ProbeFailed"),
    ];
    for (needle, class) in RULES {
        if msg.contains(needle) {
            return class;
        }
    }
    "Error"
}

#[derive(Debug, Clone, Copy)]
struct Out {
    json: bool,
}

impl Out {
    fn emit(&self, payload: Value, human: impl AsRef<str>) {
        if self.json {
            self.json_value(payload);
        } else {
            let text = human.as_ref();
            if !text.is_empty() {
                print_line(text);
            }
        }
    }

    /// Pretty JSON regardless of --json (for inherently structured output).
    fn json_value(&self, payload: Value) {
        print_line(&serde_json::to_string_pretty(&payload).expect("payload serializes"));
    }
}

/// Print one line; when the reader has gone away (`miniric … | head`), stop
/// quietly instead of panicking on the broken pipe.
fn print_line(text: &str) {
    use std::io::Write;
    if writeln!(std::io::stdout(), "{text}").is_err() {
        std::process::exit(0);
    }
}

/// `flag` wins over `positional`; one of them must be present.
fn pick(flag: Option<String>, positional: Option<String>, what: &str) -> Result<String> {
    flag.or(positional)
        .ok_or_else(|| anyhow!("missing {what} (pass it positionally or by flag)"))
}

/// The simulated cluster has exactly one app namespace.
fn check_namespace(flag: Option<String>, positional: Option<String>) -> Result<()> {
    match flag.or(positional) {
        None => Ok(()),
        Some(ns) if ns == "ricxapp" => Ok(()),
        Some(other) => bail!("unsupported namespace {other}; apps deploy into ricxapp"),
    }
}

/// A JSON literal, or `@path` to read one from a file.
fn read_json_arg(arg: &str) -> Result<Value> {
    let text = match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => arg.to_string(),
    };
    serde_json::from_str(&text).context("argument is not valid json")
}

fn instance_value(ric: &Ric, name: &str) -> Option<Value> {
    ric.xapps_json()
        .as_array()?
        .iter()
        .find(|item| item["name"] == name)
        .cloned()
}

fn render_log(entries: &[LogEntry]) -> String {
    entries
        .iter()
        .map(|e| format!("[{:>8}] {:<7} {}: {}", e.ts, e.crit.as_str(), e.id, e.msg))
        .collect::<Vec<_>>()
        .join("\n")
}

fn run(cli: Cli) -> Result<()> {
    let home = Home::resolve(cli.home);
    let out = Out { json: cli.json };
    match cli.command {
        Command::Onboard(args) => cmd_onboard(&home, out, args),
        Command::Install(args) => cmd_install(&home, out, args),
        Command::Uninstall(args) => cmd_uninstall(&home, out, args),
        Command::Upgrade(args) => cmd_replace(&home, out, args, Verb::Upgrade),
        Command::Rollback(args) => cmd_replace(&home, out, args, Verb::Rollback),
        Command::Health => cmd_health(&home, out),
        Command::GetChartsList => cmd_get_charts_list(&home, out),
        Command::HealthCheck(args) => cmd_health_check(&home, out, args),
        Command::DownloadValues(args) => cmd_download_values(&home, out, args),
        Command::Config { action } => cmd_config(&home, out, action),
        Command::Instances => cmd_instances(&home, out),
        Command::Logs(args) => cmd_logs(&home, out, args),
        Command::Routes(args) => cmd_routes(&home, out, args),
        Command::Sdl { action } => cmd_sdl(&home, out, action),
        Command::Subs { action } => cmd_subs(&home, out, action),
        Command::Node { action } => cmd_node(&home, out, action),
        Command::Advance { ms } => cmd_advance(&home, out, ms),
    }
}

// ---------------------------------------------------------------------------
// Chart and storage commands (no runtime)
// ---------------------------------------------------------------------------

fn cmd_onboard(home: &Home, out: Out, args: OnboardArgs) -> Result<()> {
    let config_path = args
        .config_file_path
        .or(args.config)
        .ok_or_else(|| anyhow!("missing descriptor path (positional or --config_file_path)"))?;
    let descriptor = fs::read_to_string(&config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let schema = match args.schema_file_path.or(args.schema) {
        Some(path) => {
            Some(fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?)
        }
        None => None,
    };
    let mut charts = home.open_charts()?;
    let rec = charts
        .onboard(&descriptor, schema.as_deref())
        .map_err(Error::msg)?;
    out.emit(
        json!({
            "name": rec.name,
            "version": rec.version,
            "content_hash": rec.content_hash,
            "has_schema": rec.schema_text.is_some(),
        }),
        format!("onboarded {}:{} ({})", rec.name, rec.version, rec.content_hash),
    );
    Ok(())
}

fn cmd_health(home: &Home, out: Out) -> Result<()> {
    let charts = home.open_charts()?;
    let chart_count = charts.list().len();
    let sdl = home.open_sdl()?;
    let ns_count = sdl.namespaces().len();
    out.emit(
        json!({
            "status": "OK",
            "charts": chart_count,
            "sdl_namespaces": ns_count,
        }),
        format!(
            "chart repository OK ({chart_count} chart versions)\nsdl OK ({ns_count} namespaces)"
        ),
    );
    Ok(())
}

fn cmd_get_charts_list(home: &Home, out: Out) -> Result<()> {
    let charts = home.open_charts()?;
    let mut by_name: serde_json::Map<String, Value> = serde_json::Map::new();
    for rec in charts.list() {
        let entry = json!({
            "name": rec.name,
            "version": rec.version,
            "content_hash": rec.content_hash,
            "has_schema": rec.schema_text.is_some(),
        });
        by_name
            .entry(rec.name.clone())
            .or_insert_with(|| Value::Array(Vec::new()))
            .as_array_mut()
            .expect("chart list entry is an array")
            .push(entry);
    }
    out.json_value(Value::Object(by_name));
    Ok(())
}

fn cmd_download_values(home: &Home, out: Out, args: DownloadValuesArgs) -> Result<()> {
    let name = pick(args.xapp_chart_name, args.name, "chart name")?;
    let version = args.version.or(args.version_pos);
    let charts = home.open_charts()?;
    let rec = match &version {
        Some(v) => charts
            .get(&name, v)
            .ok_or_else(|| anyhow!("no onboarded chart {name}:{v}"))?,
        None => charts
            .latest(&name)
            .ok_or_else(|| anyhow!("no onboarded chart named {name}"))?,
    };
    let descriptor: Value =
        serde_json::from_str(&rec.descriptor_text).context("stored descriptor unreadable")?;
    let controls = descriptor.get("controls").cloned().unwrap_or(json!({}));
    let target = if args.output_path.is_dir() {
        args.output_path
            .join(format!("{}-{}-values.json", rec.name, rec.version))
    } else {
        args.output_path.clone()
    };
    let body = json!({ "controls": controls });
    fs::write(
        &target,
        serde_json::to_string_pretty(&body).expect("values serialize") + "\n",
    )
    .with_context(|| format!("writing {}", target.display()))?;
    out.emit(
        json!({
            "name": rec.name,
            "version": rec.version,
            "path": target.display().to_string(),
        }),
        format!("wrote {}", target.display()),
    );
    Ok(())
}

fn cmd_sdl(home: &Home, out: Out, action: SdlCmd) -> Result<()> {
    let sdl = home.open_sdl()?;
    match action {
        SdlCmd::Healthcheck => {
            let ns_count = sdl.namespaces().len();
            out.emit(
                json!({"status": "OK", "namespaces": ns_count}),
                format!("sdl OK ({ns_count} namespaces)"),
            );
        }
        SdlCmd::Keys { ns, prefix } => {
            let keys = sdl.find_keys(&ns, prefix.as_deref().unwrap_or(""));
            out.emit(
                json!({"ns": ns, "keys": keys}),
                keys.join("\n"),
            );
        }
        SdlCmd::Get { ns, key } => {
            let bytes = sdl
                .get(&ns, &key)
                .ok_or_else(|| anyhow!("no value for {ns}:{key}"))?;
            match String::from_utf8(bytes.clone()) {
                Ok(text) => {
                    let value: Value = serde_json::from_str(&text)
                        .unwrap_or_else(|_| Value::String(text.clone()));
                    out.emit(json!({"ns": ns, "key": key, "value": value}), text);
                }
                Err(_) => {
                    let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
                    out.emit(json!({"ns": ns, "key": key, "hex": hex}), hex.clone());
                }
            }
        }
        SdlCmd::Set { ns, key, value } => {
            let size = value.len();
            sdl.set(&ns, &key, value.into_bytes()).map_err(Error::msg)?;
            out.emit(
                json!({"ns": ns, "key": key, "bytes": size}),
                format!("stored {ns}:{key} ({size} bytes)"),
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Lifecycle commands (replayed runtime)
// ---------------------------------------------------------------------------

fn cmd_install(home: &Home, out: Out, args: InstallArgs) -> Result<()> {
    let name = pick(args.xapp_chart_name, args.name, "chart name")?;
    check_namespace(args.namespace, args.namespace_pos)?;
    let version = args.version.or(args.version_pos);
    let controls_override = match &args.overridefile {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let parsed: Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Some(parsed.get("controls").cloned().unwrap_or(parsed))
        }
        None => None,
    };
    let ric = home.build_runtime()?;
    ric.install_with(&name, version.as_deref(), controls_override.as_ref())
        .map_err(Error::msg)?;
    let item = instance_value(&ric, &name)
        .ok_or_else(|| anyhow!("installed app missing from the inventory"))?;
    let resolved = item["chart_version"].as_str().unwrap_or_default().to_string();
    let status = item["status"].as_str().unwrap_or("?").to_string();
    let mut instances = home.load_instances()?;
    instances.retain(|r| r.name != name);
    instances.push(InstanceRecord {
        name: name.clone(),
        version: resolved.clone(),
        controls_override,
    });
    home.save_instances(&instances)?;
    out.emit(
        json!({
            "name": name,
            "version": resolved,
            "namespace": "ricxapp",
            "status": status,
        }),
        format!("installed {name}:{resolved} in ricxapp ({status})"),
    );
    Ok(())
}

fn cmd_uninstall(home: &Home, out: Out, args: UninstallArgs) -> Result<()> {
    let name = pick(args.xapp_chart_name, args.name, "xapp name")?;
    check_namespace(args.namespace, args.namespace_pos)?;
    let ric = home.build_runtime()?;
    let endpoint = ric
        .appmgr
        .borrow()
        .endpoint_of(&name)
        .map(str::to_string)
        .ok_or_else(|| anyhow!("no installed xapp named {name}"))?;
    ric.uninstall(&name, args.strict).map_err(Error::msg)?;
    // The in-process grace period has no meaning across invocations; finish
    // the teardown now so the next replay starts from a clean inventory.
    ric.appmgr
        .borrow_mut()
        .complete_uninstall(&ric.services, &endpoint, args.strict);
    ric.settle();
    let mut instances = home.load_instances()?;
    instances.retain(|r| r.name != name);
    home.save_instances(&instances)?;
    let detail = if args.strict {
        " (owned sdl namespaces purged)"
    } else {
        ""
    };
    out.emit(
        json!({"name": name, "namespace": "ricxapp", "strict": args.strict}),
        format!("uninstalled {name} from ricxapp{detail}"),
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verb {
    Upgrade,
    Rollback,
}

fn cmd_replace(home: &Home, out: Out, args: UpgradeArgs, verb: Verb) -> Result<()> {
    let name = pick(args.xapp_chart_name, args.name, "xapp name")?;
    check_namespace(args.namespace, args.namespace_pos)?;
    let new_version = args
        .new_version
        .or(args.new_pos)
        .ok_or_else(|| anyhow!("missing new version (positional or --new_version)"))?;
    let old_version = args.old_version.or(args.old_pos);
    let ric = home.build_runtime()?;
    let mut instances = home.load_instances()?;
    let record = instances
        .iter_mut()
        .find(|r| r.name == name)
        .ok_or_else(|| anyhow!("no installed xapp named {name}"))?;
    if let Some(old) = &old_version {
        if *old != record.version {
            bail!(
                "version mismatch: {name} runs {}, not {old}",
                record.version
            );
        }
    }
    let previous = record.version.clone();
    match verb {
        Verb::Upgrade => ric.upgrade(&name, &new_version).map_err(Error::msg)?,
        Verb::Rollback => ric.rollback(&name, &new_version).map_err(Error::msg)?,
    };
    record.version = new_version.clone();
    // The replacement instance starts from the new chart's defaults.
    record.controls_override = None;
    home.save_instances(&instances)?;
    let verb_text = match verb {
        Verb::Upgrade => "upgraded",
        Verb::Rollback => "rolled back",
    };
    out.emit(
        json!({
            "name": name,
            "from": previous,
            "to": new_version,
            "namespace": "ricxapp",
        }),
        format!("{verb_text} {name}: {previous} -> {new_version}"),
    );
    Ok(())
}

fn cmd_health_check(home: &Home, out: Out, args: HealthCheckArgs) -> Result<()> {
    let name = pick(args.xapp_chart_name, args.name, "xapp name")?;
    check_namespace(args.namespace, args.namespace_pos)?;
    let ric = home.build_runtime()?;
    let item = instance_value(&ric, &name)
        .ok_or_else(|| anyhow!("no installed xapp named {name}"))?;
    let state = item["status"].as_str().unwrap_or("?").to_string();
    let ready = ric
        .http(
            &http_service_name(&name),
            &RestRequest::get("/ric/v1/health/ready"),
        )
        .status;
    let alive = ric
        .http(
            &http_service_name(&name),
            &RestRequest::get("/ric/v1/health/alive"),
        )
        .status;
    if state != "running" || ready != 200 {
        bail!("xapp {name} failing health check (state {state}, ready probe {ready})");
    }
    out.emit(
        json!({
            "name": name,
            "state": state,
            "ready_status": ready,
            "alive_status": alive,
            "healthy": true,
        }),
        format!("{name} is running (ready {ready}, alive {alive})"),
    );
    Ok(())
}

fn cmd_config(home: &Home, out: Out, action: ConfigCmd) -> Result<()> {
    match action {
        ConfigCmd::Set { name, controls } => {
            let parsed = read_json_arg(&controls)?;
            let ric = home.build_runtime()?;
            ric.config_set(&name, parsed.clone()).map_err(Error::msg)?;
            let mut instances = home.load_instances()?;
            let record = instances
                .iter_mut()
                .find(|r| r.name == name)
                .ok_or_else(|| anyhow!("no installed xapp named {name}"))?;
            record.controls_override = Some(parsed);
            home.save_instances(&instances)?;
            out.emit(
                json!({"name": name, "updated": "controls"}),
                format!("updated controls of {name}"),
            );
        }
        ConfigCmd::Get { name } => {
            let ric = home.build_runtime()?;
            let resp = ric.http(APPMGR_HTTP, &RestRequest::get(format!("/ric/v1/config/{name}")));
            if resp.status == 404 {
                bail!("no installed xapp named {name}");
            }
            let body: Value = resp.json_body().context("config response unreadable")?;
            out.json_value(body);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Inspection commands (replayed runtime)
// ---------------------------------------------------------------------------

fn cmd_instances(home: &Home, out: Out) -> Result<()> {
    let ric = home.build_runtime()?;
    let items = ric.xapps_json();
    let empty = Vec::new();
    let rows = items.as_array().unwrap_or(&empty);
    let mut lines = vec![format!(
        "{:<16} {:<10} {:<9} {:<6} {:<6} {}",
        "NAME", "VERSION", "STATE", "READY", "ALIVE", "ENDPOINT"
    )];
    for item in rows {
        lines.push(format!(
            "{:<16} {:<10} {:<9} {:<6} {:<6} {}",
            item["name"].as_str().unwrap_or("?"),
            item["chart_version"].as_str().unwrap_or("?"),
            item["status"].as_str().unwrap_or("?"),
            item["ready"].as_bool().unwrap_or(false),
            item["alive"].as_bool().unwrap_or(false),
            item["endpoint"].as_str().unwrap_or("?"),
        ));
    }
    let human = if rows.is_empty() {
        "no installed xapps".to_string()
    } else {
        lines.join("\n")
    };
    out.emit(items, human);
    Ok(())
}

fn cmd_logs(home: &Home, out: Out, args: LogsArgs) -> Result<()> {
    if args.platform && args.name.is_some() {
        bail!("pass an app name or --platform, not both");
    }
    let ric = home.build_runtime()?;
    let entries = if args.platform {
        ric.platform_log()
    } else {
        let name = args
            .name
            .ok_or_else(|| anyhow!("missing app name (or --platform)"))?;
        ric.app_log(&name)
            .ok_or_else(|| anyhow!("no installed xapp named {name}"))?
    };
    out.emit(
        serde_json::to_value(&entries).expect("log entries serialize"),
        render_log(&entries),
    );
    Ok(())
}

fn cmd_routes(home: &Home, out: Out, args: RoutesArgs) -> Result<()> {
    match args.action {
        Some(RoutesAction::Apply { file }) => {
            let text =
                fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let ric = home.build_runtime()?;
            let warnings = ric.apply_route_update(&text).map_err(Error::msg)?;
            let mut routes = home.load_routes()?;
            routes.push(text);
            home.save_routes(&routes)?;
            let mut human = String::new();
            for warning in &warnings {
                human.push_str(&format!("warning: {warning}\n"));
            }
            human.push_str("applied route update");
            out.emit(json!({"applied": true, "warnings": warnings}), human);
        }
        None => {
            let ric = home.build_runtime()?;
            let dump = ric.route_dump();
            let mut lines: Vec<String> = dump["master"]
                .as_array()
                .map(|rows| {
                    rows.iter()
                        .filter_map(|v| v.as_str())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            if let Some(owners) = dump["ownership"].as_object() {
                if !owners.is_empty() {
                    lines.push("# meid ownership:".to_string());
                    for (meid, owner) in owners {
                        lines.push(format!("meid {meid} -> {}", owner.as_str().unwrap_or("?")));
                    }
                }
            }
            if let Some(stash) = dump["stash"].as_array() {
                if !stash.is_empty() {
                    lines.push("# staged updates:".to_string());
                    for item in stash {
                        for line in item.as_str().unwrap_or("").lines() {
                            lines.push(format!("  {line}"));
                        }
                    }
                }
            }
            out.emit(dump, lines.join("\n"));
        }
    }
    Ok(())
}

fn cmd_subs(home: &Home, out: Out, action: SubsCmd) -> Result<()> {
    let ric = home.build_runtime()?;
    match action {
        SubsCmd::List => {
            let items = ric.subscriptions_json();
            let empty = Vec::new();
            let rows = items.as_array().unwrap_or(&empty);
            let mut lines = vec![format!(
                "{:<18} {:<44} {:<32} {:<4} {:<4} {}",
                "ID", "CLIENT", "MEID", "RF", "E2", "STATE"
            )];
            for item in rows {
                lines.push(format!(
                    "{:<18} {:<44} {:<32} {:<4} {:<4} {}",
                    item["SubscriptionId"].as_str().unwrap_or("?"),
                    item["ClientEndpoint"].as_str().unwrap_or("?"),
                    item["Meid"].as_str().unwrap_or("?"),
                    item["RANFunctionID"].as_i64().unwrap_or(-1),
                    item["E2InstanceId"].as_i64().unwrap_or(-1),
                    item["State"].as_str().unwrap_or("?"),
                ));
            }
            let human = if rows.is_empty() {
                "no subscriptions".to_string()
            } else {
                lines.join("\n")
            };
            out.emit(items, human);
        }
        SubsCmd::Delete { id } => {
            let resp = ric.http(
                SUBMGR_HTTP,
                &RestRequest::delete(format!("/ric/v1/subscriptions/{id}")),
            );
            match resp.status {
                204 => out.emit(
                    json!({"deleted": id}),
                    format!("deleted subscription {id}"),
                ),
                404 => bail!("unknown subscription {id}"),
                status => bail!("unexpected status {status} deleting subscription {id}"),
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Topology and time
// ---------------------------------------------------------------------------

fn cmd_node(home: &Home, out: Out, action: NodeCmd) -> Result<()> {
    match action {
        NodeCmd::Attach {
            plmn,
            nbid,
            meas,
            seed,
            ran_function_id,
        } => {
            let mut config = NodeConfig::new(plmn, nbid);
            if !meas.is_empty() {
                config.meas_names = meas;
            }
            config.trace = TraceSource::Synthetic { seed };
            config.ran_function_id = ran_function_id;
            let ric = home.build_runtime()?;
            let name = ric.attach_node(config.clone()).map_err(Error::msg)?;
            let mut nodes = home.load_nodes()?;
            nodes.push(NodeRecord {
                inventory_name: name.clone(),
                config,
                connected: true,
                responsive: true,
            });
            home.save_nodes(&nodes)?;
            out.emit(
                json!({"inventory_name": name}),
                format!("attached {name}"),
            );
        }
        NodeCmd::Detach { name } => {
            let ric = home.build_runtime()?;
            if !ric.detach_node(&name) {
                bail!("no attached node named {name}");
            }
            let mut nodes = home.load_nodes()?;
            nodes.retain(|n| n.inventory_name != name);
            home.save_nodes(&nodes)?;
            out.emit(json!({"detached": name}), format!("detached {name}"));
        }
        NodeCmd::List => {
            let nodes = home.load_nodes()?;
            let mut lines = vec![format!(
                "{:<28} {:<8} {:<12} {:<10} {}",
                "NAME", "PLMN", "NBID", "CONNECTED", "RESPONSIVE"
            )];
            for node in &nodes {
                lines.push(format!(
                    "{:<28} {:<8} {:<12} {:<10} {}",
                    node.inventory_name,
                    node.config.plmn_id,
                    node.config.nb_id,
                    node.connected,
                    node.responsive,
                ));
            }
            let human = if nodes.is_empty() {
                "no attached nodes".to_string()
            } else {
                lines.join("\n")
            };
            out.emit(
                serde_json::to_value(&nodes).expect("node records serialize"),
                human,
            );
        }
        NodeCmd::Connect { name } => cmd_node_link(home, out, &name, true)?,
        NodeCmd::Disconnect { name } => cmd_node_link(home, out, &name, false)?,
    }
    Ok(())
}

fn cmd_node_link(home: &Home, out: Out, name: &str, connected: bool) -> Result<()> {
    let ric = home.build_runtime()?;
    if !ric.set_node_connected(name, connected) {
        bail!("no attached node named {name}");
    }
    let mut nodes = home.load_nodes()?;
    let record = nodes
        .iter_mut()
        .find(|n| n.inventory_name == name)
        .ok_or_else(|| anyhow!("no attached node named {name}"))?;
    record.connected = connected;
    home.save_nodes(&nodes)?;
    out.emit(
        json!({"inventory_name": name, "connected": connected}),
        format!("node {name} connected={connected}"),
    );
    Ok(())
}

fn cmd_advance(home: &Home, out: Out, ms: u64) -> Result<()> {
    let ric = home.build_runtime()?;
    ric.advance(ms);
    let now = ric.now_ms();
    out.emit(
        json!({"advanced_ms": ms, "now_ms": now}),
        format!("advanced {ms} ms (clock now {now} ms)"),
    );
    Ok(())
}
