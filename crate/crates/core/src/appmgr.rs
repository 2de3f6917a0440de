//! Application lifecycle management: onboarding, deployment, registration,
//! health, configuration, and removal of xApps.
//!
//! Deployment is chart-based: onboarding validates a descriptor (and its
//! controls schema, when the descriptor has operator-tunable controls) and
//! stores it as a versioned chart. Installing a chart looks up runnable
//! behavior for its container image in the [`Catalog`], wires the instance
//! onto the message bus, and schedules its bootstrap. Registration happens
//! at bootstrap: an app whose config is readable becomes `running`, joins
//! the policy distribution for its declared types, and starts its periodic
//! step when it is a general app. An app with an unreadable config stays
//! `deployed` and the failure is recorded in both the platform and the
//! instance log.
//!
//! Uninstalling stops the app immediately but keeps its endpoint on the bus
//! for a grace period so in-flight traffic drains instead of bouncing;
//! upgrade and rollback swap versions without the grace period. A strict
//! uninstall also purges every shared-storage namespace the app wrote.

use crate::bus::EndpointOptions;
use crate::descriptor::{
    parse_descriptor, parse_schema, parse_version, validate, validate_value, XAppDescriptor,
};
use crate::logging::{Level, LogEntry};
use crate::messaging::{mtypes, Message};
use crate::rest::{match_path, Method, RestRequest, RestResponse};
use crate::ric::{Event, RicServices, APPMGR_ENDPOINT};
use crate::submgr::SubscriptionNotification;
use crate::xapp::{AppMode, AppRunState, XAppBlueprint, XAppInstance};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// HTTP service name of the app manager.
pub const APPMGR_HTTP: &str = "service-ricplt-appmgr-http.ricplt";

/// SDL namespace for the manager's own records (namespace-ownership marks).
pub const APPMGR_NAMESPACE: &str = "appmgr";

/// Namespaces that belong to the platform; a strict undeploy never purges
/// these even when an app wrote into them.
pub const PLATFORM_NAMESPACES: &[&str] = &["appmgr", "rnib", "submgr", "a1"];

/// How long an uninstalled app's endpoint lingers on the bus.
pub const UNDEPLOY_GRACE_MS: u64 = 30_000;

/// Answer deadline for an RMR-level health probe.
pub const PROBE_TIMEOUT_MS: u64 = 2_000;

/// Platform-log line when registration fails on an unreadable config.
pub const ERR_CONFIG_REGISTRATION: &str = "Cannot Read config file for xapp Registration";

/// Instance-log line for the same failure, as the app framework reports it.
pub const ERR_CONFIG_LOAD: &str = "Could not load config file";

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

/// One onboarded, validated app package.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartRecord {
    pub name: String,
    pub version: String,
    pub descriptor_text: String,
    pub schema_text: Option<String>,
    /// Hex digest over descriptor and schema; identifies the exact content.
    pub content_hash: String,
}

/// Versioned chart store, optionally persisted to a directory (one JSON file
/// per chart).
#[derive(Debug, Default)]
pub struct ChartRepo {
    dir: Option<PathBuf>,
    charts: BTreeMap<(String, String), ChartRecord>,
}

impl ChartRepo {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open (or create) a directory-backed repository and load every chart
    /// in it.
    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut charts = BTreeMap::new();
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        entries.sort();
        for path in entries {
            let text = std::fs::read_to_string(&path)?;
            let Ok(v) = serde_json::from_str::<Value>(&text) else {
                continue;
            };
            let (Some(name), Some(version), Some(descriptor_text)) = (
                v["name"].as_str(),
                v["version"].as_str(),
                v["descriptor"].as_str(),
            ) else {
                continue;
            };
            let rec = ChartRecord {
                name: name.to_string(),
                version: version.to_string(),
                descriptor_text: descriptor_text.to_string(),
                schema_text: v["schema"].as_str().map(str::to_string),
                content_hash: v["content_hash"].as_str().unwrap_or_default().to_string(),
            };
            charts.insert((rec.name.clone(), rec.version.clone()), rec);
        }
        Ok(ChartRepo {
            dir: Some(dir),
            charts,
        })
    }

    /// Validate and store a chart. The descriptor must parse and pass every
    /// structural check; a descriptor with a non-empty `controls` section
    /// must come with a schema.
    pub fn onboard(
        &mut self,
        descriptor_text: &str,
        schema_text: Option<&str>,
    ) -> Result<ChartRecord, String> {
        let desc = parse_descriptor(descriptor_text).map_err(|e| e.to_string())?;
        let schema = match schema_text {
            None => None,
            Some(text) => Some(parse_schema(text).map_err(|e| e.to_string())?),
        };
        let violations = validate(&desc, schema.as_ref());
        if !violations.is_empty() {
            let detail: Vec<String> = violations
                .iter()
                .map(|v| format!("{}: {}", v.path, v.reason))
                .collect();
            return Err(format!("descriptor rejected: {}", detail.join("; ")));
        }
        let mut hasher = Sha256::new();
        hasher.update(descriptor_text.as_bytes());
        if let Some(s) = schema_text {
            hasher.update(s.as_bytes());
        }
        let rec = ChartRecord {
            name: desc.name.clone(),
            version: desc.version.clone(),
            descriptor_text: descriptor_text.to_string(),
            schema_text: schema_text.map(str::to_string),
            content_hash: hex::encode(&hasher.finalize()[..16]),
        };
        if let Some(dir) = &self.dir {
            let file = dir.join(format!("{}-{}.json", rec.name, rec.version));
            let body = json!({
                "name": rec.name,
                "version": rec.version,
                "descriptor": rec.descriptor_text,
                "schema": rec.schema_text,
                "content_hash": rec.content_hash,
            });
            std::fs::write(&file, serde_json::to_vec_pretty(&body).expect("chart serializes"))
                .map_err(|e| format!("chart not persisted: {e}"))?;
        }
        self.charts
            .insert((rec.name.clone(), rec.version.clone()), rec.clone());
        Ok(rec)
    }

    pub fn get(&self, name: &str, version: &str) -> Option<&ChartRecord> {
        self.charts.get(&(name.to_string(), version.to_string()))
    }

    /// Highest onboarded version of `name` by semantic-version order.
    pub fn latest(&self, name: &str) -> Option<&ChartRecord> {
        self.charts
            .values()
            .filter(|c| c.name == name)
            .max_by_key(|c| parse_version(&c.version).unwrap_or((0, 0, 0)))
    }

    pub fn versions(&self, name: &str) -> Vec<String> {
        let mut v: Vec<(u64, u64, u64, String)> = self
            .charts
            .values()
            .filter(|c| c.name == name)
            .map(|c| {
                let (a, b, p) = parse_version(&c.version).unwrap_or((0, 0, 0));
                (a, b, p, c.version.clone())
            })
            .collect();
        v.sort();
        v.into_iter().map(|(_, _, _, s)| s).collect()
    }

    /// Every chart, ascending by (name, version).
    pub fn list(&self) -> Vec<&ChartRecord> {
        self.charts.values().collect()
    }
}

// ---------------------------------------------------------------------------
// Runnable images
// ---------------------------------------------------------------------------

pub type BlueprintFactory = Box<dyn Fn() -> XAppBlueprint>;

/// Registry of runnable behavior, keyed by container image name. Installing
/// a chart resolves its first container's image here — the in-process
/// equivalent of pulling the image a descriptor references.
#[derive(Default)]
pub struct Catalog {
    factories: BTreeMap<String, BlueprintFactory>,
}

impl std::fmt::Debug for Catalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Catalog")
            .field("images", &self.factories.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        image_name: impl Into<String>,
        factory: impl Fn() -> XAppBlueprint + 'static,
    ) {
        self.factories.insert(image_name.into(), Box::new(factory));
    }

    pub fn lookup(&self, image_name: &str) -> Option<&BlueprintFactory> {
        self.factories.get(image_name)
    }

    pub fn images(&self) -> Vec<&str> {
        self.factories.keys().map(|s| s.as_str()).collect()
    }
}

// ---------------------------------------------------------------------------
// The manager
// ---------------------------------------------------------------------------

/// Reject a controls value its schema does not allow. Apps without a schema
/// accept anything.
fn check_controls(
    schema: Option<&crate::descriptor::ControlsSchema>,
    controls: &Value,
) -> Result<(), String> {
    let Some(schema) = schema else {
        return Ok(());
    };
    let violations = validate_value(schema, controls);
    if violations.is_empty() {
        return Ok(());
    }
    let detail: Vec<String> = violations
        .iter()
        .map(|v| format!("{}: {}", v.path, v.reason))
        .collect();
    Err(format!("controls rejected by schema: {}", detail.join("; ")))
}

/// Outcome of an RMR-level health probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    Answered { rtt_ms: u64, payload: String },
    TimedOut,
}

#[derive(Debug)]
struct AppRec {
    instance: XAppInstance,
    chart_version: String,
}

#[derive(Debug, Clone)]
struct PendingProbe {
    app: String,
    sent_at: u64,
}

#[derive(Debug)]
pub struct AppManager {
    pub charts: ChartRepo,
    catalog: Catalog,
    /// Keyed by RMR endpoint name.
    instances: BTreeMap<String, AppRec>,
    by_name: BTreeMap<String, String>,
    pending_probes: BTreeMap<u64, PendingProbe>,
    probe_results: BTreeMap<String, ProbeOutcome>,
}

impl AppManager {
    pub fn new(catalog: Catalog, charts: ChartRepo) -> Self {
        AppManager {
            charts,
            catalog,
            instances: BTreeMap::new(),
            by_name: BTreeMap::new(),
            pending_probes: BTreeMap::new(),
            probe_results: BTreeMap::new(),
        }
    }

    pub fn catalog_mut(&mut self) -> &mut Catalog {
        &mut self.catalog
    }

    // -- onboarding ----------------------------------------------------------

    pub fn onboard(
        &mut self,
        services: &RicServices,
        descriptor_text: &str,
        schema_text: Option<&str>,
    ) -> Result<ChartRecord, String> {
        let rec = self.charts.onboard(descriptor_text, schema_text)?;
        services.log_info(format!(
            "chart {}:{} onboarded ({})",
            rec.name, rec.version, rec.content_hash
        ));
        Ok(rec)
    }

    // -- install / bootstrap -------------------------------------------------

    /// Deploy an onboarded chart. `version` picks an exact chart; `None`
    /// takes the highest version. Returns the new instance's RMR endpoint.
    pub fn install(
        &mut self,
        services: &RicServices,
        name: &str,
        version: Option<&str>,
    ) -> Result<String, String> {
        self.install_with(services, name, version, None)
    }

    /// [`install`](Self::install), with the chart's default controls replaced
    /// by `controls` before the app boots — the override-values path. The
    /// replacement is schema-checked like any other config.
    pub fn install_with(
        &mut self,
        services: &RicServices,
        name: &str,
        version: Option<&str>,
        controls: Option<&Value>,
    ) -> Result<String, String> {
        if let Some(endpoint) = self.by_name.get(name) {
            let state = self
                .instances
                .get(endpoint)
                .map(|r| r.instance.core.state.as_str())
                .unwrap_or("unknown");
            return Err(format!("xapp {name} is already installed ({state})"));
        }
        let chart = match version {
            Some(v) => self.charts.get(name, v),
            None => self.charts.latest(name),
        }
        .ok_or_else(|| match version {
            Some(v) => format!("no onboarded chart {name}:{v}"),
            None => format!("no onboarded chart named {name}"),
        })?
        .clone();

        let desc: XAppDescriptor =
            parse_descriptor(&chart.descriptor_text).map_err(|e| e.to_string())?;
        let schema = match chart.schema_text.as_deref() {
            None => None,
            Some(text) => Some(parse_schema(text).map_err(|e| e.to_string())?),
        };
        let image = desc
            .containers
            .first()
            .map(|c| c.image.name.clone())
            .ok_or("descriptor has no containers")?;
        let factory = self
            .catalog
            .lookup(&image)
            .ok_or_else(|| format!("no runnable image {image:?} in the catalog"))?;
        let mut blueprint = factory();
        blueprint.descriptor = desc;
        blueprint.schema = schema;
        let mut instance = blueprint.instantiate();
        if let Some(new_controls) = controls {
            check_controls(instance.core.schema.as_ref(), new_controls)?;
            instance.core.config["controls"] = new_controls.clone();
        }
        let endpoint = instance.core.endpoint.clone();

        let effective = instance.core.descriptor.effective_rmr();
        {
            let mut bus = services.bus.borrow_mut();
            bus.register(
                &endpoint,
                EndpointOptions {
                    auto_dispatch: matches!(instance.core.mode, AppMode::Reactive),
                    max_payload: effective.max_size as usize,
                    ..EndpointOptions::default()
                },
            );
            bus.distribute();
        }
        self.by_name.insert(name.to_string(), endpoint.clone());
        self.instances.insert(
            endpoint.clone(),
            AppRec {
                instance,
                chart_version: chart.version.clone(),
            },
        );
        services.clock.borrow_mut().schedule_in(
            0,
            Event::AppBootstrap {
                endpoint: endpoint.clone(),
            },
        );
        services.log_info(format!(
            "xapp {name}:{} deployed at {endpoint}",
            chart.version
        ));
        Ok(endpoint)
    }

    /// Complete (or fail) platform registration for a freshly deployed app.
    pub fn bootstrap(&mut self, services: &RicServices, endpoint: &str) {
        let now = services.now_ms();
        let Some(rec) = self.instances.get_mut(endpoint) else {
            return;
        };
        if rec.instance.core.state != AppRunState::Deployed {
            return;
        }
        if rec.instance.core.config_missing {
            services.log_at(Level::Error, ERR_CONFIG_REGISTRATION.to_string());
            rec.instance
                .core
                .log
                .log(now, Level::Error, ERR_CONFIG_LOAD.to_string());
            return;
        }
        rec.instance.core.registered = true;
        rec.instance.core.state = AppRunState::Running;
        rec.instance.core.ready = true;
        rec.instance.core.alive = true;
        let name = rec.instance.core.name.clone();
        let policies = rec.instance.core.descriptor.effective_rmr().policies;
        if !policies.is_empty() {
            services
                .a1
                .borrow_mut()
                .register_consumer(services, &name, endpoint, &policies);
        }
        services.log_info(format!("xapp {name} registered and running"));
        let Some(rec) = self.instances.get_mut(endpoint) else {
            return;
        };
        rec.instance.run_post_init(services);
        if let AppMode::General { step_period_ms } = rec.instance.core.mode {
            let id = services.clock.borrow_mut().schedule_in(
                step_period_ms,
                Event::AppStep {
                    endpoint: endpoint.to_string(),
                },
            );
            rec.instance.core.step_timer = Some(id);
        }
    }

    // -- teardown ------------------------------------------------------------

    /// Stop the app and run its teardown hooks; the bus endpoint stays
    /// registered until [`complete_uninstall`](Self::complete_uninstall).
    fn begin_teardown(&mut self, services: &RicServices, endpoint: &str) {
        let Some(rec) = self.instances.get_mut(endpoint) else {
            return;
        };
        rec.instance.core.state = AppRunState::Stopping;
        rec.instance.core.ready = false;
        rec.instance.run_on_stop(services);

        let rec = self.instances.get_mut(endpoint).expect("still present");
        {
            let mut clock = services.clock.borrow_mut();
            for (_, id) in std::mem::take(&mut rec.instance.core.timers) {
                clock.cancel(id);
            }
            if let Some(id) = rec.instance.core.step_timer.take() {
                clock.cancel(id);
            }
        }
        let rest_ids: Vec<String> = rec.instance.core.subscriptions.keys().cloned().collect();
        for rest_id in rest_ids {
            let req = RestRequest::delete(format!("/ric/v1/subscriptions/{rest_id}"));
            let resp = services.submgr.borrow_mut().handle_rest(&req, services);
            if resp.status != 204 {
                services.log_at(
                    Level::Warning,
                    format!("teardown could not delete subscription {rest_id}: {}", resp.status),
                );
            }
        }
        if let Some(rec) = self.instances.get_mut(endpoint) {
            rec.instance.core.subscriptions.clear();
        }
        services.a1.borrow_mut().deregister_consumer(services, endpoint);
    }

    /// Stop an app. Its endpoint drains for [`UNDEPLOY_GRACE_MS`] before the
    /// final removal; `strict` additionally purges the shared-storage
    /// namespaces the app wrote.
    pub fn uninstall(
        &mut self,
        services: &RicServices,
        name: &str,
        strict: bool,
    ) -> Result<(), String> {
        let endpoint = self
            .by_name
            .get(name)
            .cloned()
            .ok_or_else(|| format!("no installed xapp named {name}"))?;
        if self
            .instances
            .get(&endpoint)
            .is_some_and(|r| r.instance.core.state == AppRunState::Stopping)
        {
            return Err(format!("xapp {name} is already being uninstalled"));
        }
        self.begin_teardown(services, &endpoint);
        services.clock.borrow_mut().schedule_in(
            UNDEPLOY_GRACE_MS,
            Event::UninstallComplete {
                endpoint: endpoint.clone(),
                strict,
            },
        );
        services.log_info(format!(
            "xapp {name} stopping; endpoint drains for {UNDEPLOY_GRACE_MS} ms"
        ));
        Ok(())
    }

    /// Final removal after the grace period: deregister from the bus (which
    /// also purges its routes), optionally purge owned storage namespaces.
    pub fn complete_uninstall(&mut self, services: &RicServices, endpoint: &str, strict: bool) {
        let Some(rec) = self.instances.remove(endpoint) else {
            return;
        };
        let name = rec.instance.core.name.clone();
        self.by_name.remove(&name);
        {
            let mut bus = services.bus.borrow_mut();
            bus.deregister(endpoint);
            bus.distribute();
        }
        if strict {
            // Owned namespaces: what the instance touched this run, plus the
            // persisted claims from earlier runs over the same storage.
            let mut owned = rec.instance.core.owned_namespaces.clone();
            let marker_prefix = format!("owns:{name}:");
            for marker in services.sdl.find_keys(APPMGR_NAMESPACE, &marker_prefix) {
                owned.insert(marker[marker_prefix.len()..].to_string());
            }
            for ns in &owned {
                if PLATFORM_NAMESPACES.contains(&ns.as_str()) {
                    continue;
                }
                for key in services.sdl.find_keys(ns, "") {
                    let _ = services.sdl.delete(ns, &key);
                }
                let _ = services
                    .sdl
                    .delete(APPMGR_NAMESPACE, &format!("owns:{name}:{ns}"));
            }
        }
        services.log_info(format!("xapp {name} removed (strict purge: {strict})"));
    }

    /// Replace the running instance with another chart version, with no
    /// drain grace: teardown and reinstall happen back to back.
    pub fn upgrade(
        &mut self,
        services: &RicServices,
        name: &str,
        version: &str,
    ) -> Result<String, String> {
        self.replace(services, name, version, "upgraded")
    }

    /// [`upgrade`](Self::upgrade) in the other direction; takes the version
    /// to return to.
    pub fn rollback(
        &mut self,
        services: &RicServices,
        name: &str,
        version: &str,
    ) -> Result<String, String> {
        self.replace(services, name, version, "rolled back")
    }

    fn replace(
        &mut self,
        services: &RicServices,
        name: &str,
        version: &str,
        verb: &str,
    ) -> Result<String, String> {
        if self.charts.get(name, version).is_none() {
            return Err(format!("no onboarded chart {name}:{version}"));
        }
        let endpoint = self
            .by_name
            .get(name)
            .cloned()
            .ok_or_else(|| format!("no installed xapp named {name}"))?;
        self.begin_teardown(services, &endpoint);
        self.complete_uninstall(services, &endpoint, false);
        let new_endpoint = self.install(services, name, Some(version))?;
        services.log_info(format!("xapp {name} {verb} to {version}"));
        Ok(new_endpoint)
    }

    // -- message plumbing ----------------------------------------------------

    /// Deliver a bus message to the app that owns `endpoint`.
    pub fn dispatch_message(&mut self, services: &RicServices, endpoint: &str, msg: &Message) {
        if let Some(rec) = self.instances.get_mut(endpoint) {
            rec.instance.dispatch(services, msg);
        }
    }

    /// Run one periodic step of a general app and re-arm its step timer.
    pub fn step_app(&mut self, services: &RicServices, endpoint: &str) {
        let Some(rec) = self.instances.get_mut(endpoint) else {
            return;
        };
        if rec.instance.core.state != AppRunState::Running {
            return;
        }
        rec.instance.run_step(services);
        let Some(rec) = self.instances.get_mut(endpoint) else {
            return;
        };
        if rec.instance.core.state != AppRunState::Running {
            return;
        }
        if let AppMode::General { step_period_ms } = rec.instance.core.mode {
            let id = services.clock.borrow_mut().schedule_in(
                step_period_ms,
                Event::AppStep {
                    endpoint: endpoint.to_string(),
                },
            );
            rec.instance.core.step_timer = Some(id);
        }
    }

    /// Fire a named app timer.
    pub fn fire_app_timer(&mut self, services: &RicServices, endpoint: &str, key: &str) {
        if let Some(rec) = self.instances.get_mut(endpoint) {
            if rec.instance.core.state == AppRunState::Running {
                rec.instance.fire_timer(services, key);
            }
        }
    }

    /// Traffic addressed to the app manager's own endpoint (probe replies).
    pub fn handle_platform_message(&mut self, services: &RicServices, msg: &Message) {
        if msg.mtype == mtypes::RIC_HEALTH_CHECK_RESP {
            if let Some(probe) = self.pending_probes.remove(&msg.transaction_id) {
                let rtt_ms = services.now_ms().saturating_sub(probe.sent_at);
                services.log_info(format!(
                    "health probe answered by {} in {rtt_ms} ms",
                    probe.app
                ));
                self.probe_results.insert(
                    probe.app,
                    ProbeOutcome::Answered {
                        rtt_ms,
                        payload: msg.payload_str().into_owned(),
                    },
                );
            }
            return;
        }
        services.log_at(
            Level::Debug,
            format!("app manager ignoring message type {}", msg.mtype),
        );
    }

    /// Deliver an asynchronous subscription notification to the app serving
    /// `client_http`.
    pub fn deliver_notification(
        &mut self,
        services: &RicServices,
        client_http: &str,
        notification: &SubscriptionNotification,
    ) {
        let Some(endpoint) = self
            .instances
            .values()
            .find(|r| r.instance.core.http_service == client_http)
            .map(|r| r.instance.core.endpoint.clone())
        else {
            services.log_at(
                Level::Warning,
                format!("subscription notification for unknown service {client_http}"),
            );
            return;
        };
        let req = RestRequest::post_json("/ric/v1/subscriptions/response", &notification.to_json());
        let rec = self.instances.get_mut(&endpoint).expect("looked up above");
        let resp = rec.instance.handle_rest(services, &req);
        if !resp.is_success() {
            services.log_at(
                Level::Warning,
                format!(
                    "notification for subscription {} rejected with {}",
                    notification.subscription_id, resp.status
                ),
            );
        }
    }

    /// Route an HTTP request to the app serving `http_service`.
    pub fn app_rest(
        &mut self,
        services: &RicServices,
        http_service: &str,
        req: &RestRequest,
    ) -> Option<RestResponse> {
        let rec = self
            .instances
            .values_mut()
            .find(|r| r.instance.core.http_service == http_service)?;
        Some(rec.instance.handle_rest(services, req))
    }

    // -- health probes -------------------------------------------------------

    /// Send an RMR health probe to an app. The outcome lands in
    /// [`probe_result`](Self::probe_result) once the reply (or the timeout)
    /// arrives. Returns the probe's transaction id.
    pub fn probe_app(&mut self, services: &RicServices, name: &str) -> Result<u64, String> {
        let endpoint = self
            .by_name
            .get(name)
            .cloned()
            .ok_or_else(|| format!("no installed xapp named {name}"))?;
        let now = services.now_ms();
        let mut msg = Message::new(mtypes::RIC_HEALTH_CHECK_REQ, b"ping".to_vec());
        msg.direct_dest = Some(endpoint);
        let receipt = services.bus.borrow_mut().send(now, APPMGR_ENDPOINT, msg);
        if !receipt.ok() {
            return Err(format!(
                "probe undeliverable: {}",
                receipt.error.as_deref().unwrap_or("unknown")
            ));
        }
        let txid = receipt.transaction_id;
        self.probe_results.remove(name);
        self.pending_probes.insert(
            txid,
            PendingProbe {
                app: name.to_string(),
                sent_at: now,
            },
        );
        services
            .clock
            .borrow_mut()
            .schedule_in(PROBE_TIMEOUT_MS, Event::ProbeTimeout { txid });
        Ok(txid)
    }

    pub fn on_probe_timeout(&mut self, services: &RicServices, txid: u64) {
        if let Some(probe) = self.pending_probes.remove(&txid) {
            services.log_at(
                Level::Warning,
                format!("health probe to {} timed out", probe.app),
            );
            self.probe_results.insert(probe.app, ProbeOutcome::TimedOut);
        }
    }

    pub fn probe_result(&self, name: &str) -> Option<&ProbeOutcome> {
        self.probe_results.get(name)
    }

    // -- configuration -------------------------------------------------------

    /// Replace an app's `controls` section. The new document must satisfy
    /// the app's schema; the app's config-change hook runs on success.
    pub fn config_update(
        &mut self,
        services: &RicServices,
        name: &str,
        new_controls: Value,
    ) -> Result<(), String> {
        let endpoint = self
            .by_name
            .get(name)
            .cloned()
            .ok_or_else(|| format!("no installed xapp named {name}"))?;
        let rec = self.instances.get_mut(&endpoint).expect("index consistent");
        check_controls(rec.instance.core.schema.as_ref(), &new_controls)?;
        rec.instance.core.config["controls"] = new_controls;
        rec.instance.run_config_change(services);
        services.log_info(format!("xapp {name}: controls replaced"));
        Ok(())
    }

    // -- introspection -------------------------------------------------------

    pub fn installed_names(&self) -> Vec<String> {
        self.by_name.keys().cloned().collect()
    }

    pub fn endpoint_of(&self, name: &str) -> Option<&str> {
        self.by_name.get(name).map(|s| s.as_str())
    }

    pub fn instance(&self, name: &str) -> Option<&XAppInstance> {
        let endpoint = self.by_name.get(name)?;
        self.instances.get(endpoint).map(|r| &r.instance)
    }

    pub fn instance_mut(&mut self, name: &str) -> Option<&mut XAppInstance> {
        let endpoint = self.by_name.get(name)?.clone();
        self.instances.get_mut(&endpoint).map(|r| &mut r.instance)
    }

    pub fn instance_by_endpoint(&self, endpoint: &str) -> Option<&XAppInstance> {
        self.instances.get(endpoint).map(|r| &r.instance)
    }

    /// Status list of every installed app, ascending by name.
    pub fn xapps_json(&self) -> Value {
        let items: Vec<Value> = self
            .by_name
            .values()
            .filter_map(|endpoint| self.instances.get(endpoint))
            .map(|r| {
                let mut status = r.instance.status_json();
                status["chart_version"] = json!(r.chart_version);
                status
            })
            .collect();
        json!(items)
    }

    pub fn app_log(&self, name: &str) -> Option<Vec<LogEntry>> {
        self.instance(name)
            .map(|i| i.core.log.entries().to_vec())
    }

    // -- platform REST surface ----------------------------------------------

    pub fn handle_rest(&mut self, req: &RestRequest, services: &RicServices) -> RestResponse {
        if req.method == Method::Get {
            if match_path("/ric/v1/health/ready", &req.path).is_some()
                || match_path("/ric/v1/health/alive", &req.path).is_some()
            {
                return RestResponse::json(200, &json!({"status": "OK"}));
            }
            if match_path("/ric/v1/xapps", &req.path).is_some() {
                return RestResponse::json(200, &self.xapps_json());
            }
            if match_path("/ric/v1/charts", &req.path).is_some() {
                let charts: Vec<Value> = self
                    .charts
                    .list()
                    .iter()
                    .map(|c| {
                        json!({
                            "name": c.name,
                            "version": c.version,
                            "content_hash": c.content_hash,
                        })
                    })
                    .collect();
                return RestResponse::json(200, &json!(charts));
            }
            if let Some(p) = match_path("/ric/v1/config/<name>", &req.path) {
                return match self.instance(&p[0]) {
                    Some(i) => RestResponse::json(200, &i.core.config),
                    None => RestResponse::json(404, &json!({"error": format!("no installed xapp named {}", p[0])})),
                };
            }
        }
        if req.method == Method::Post {
            if match_path("/ric/v1/register", &req.path).is_some() {
                let Ok(body) = req.json() else {
                    return RestResponse::json(400, &json!({"error": "malformed JSON"}));
                };
                let Some(name) = body["appName"].as_str() else {
                    return RestResponse::json(400, &json!({"error": "missing appName"}));
                };
                return match self.instance_mut(name) {
                    Some(i) => {
                        i.core.registered = true;
                        RestResponse::json(201, &json!({"status": "registered"}))
                    }
                    None => RestResponse::json(
                        404,
                        &json!({"error": format!("no installed xapp named {name}")}),
                    ),
                };
            }
            if match_path("/ric/v1/deregister", &req.path).is_some() {
                let Ok(body) = req.json() else {
                    return RestResponse::json(400, &json!({"error": "malformed JSON"}));
                };
                let Some(name) = body["appName"].as_str() else {
                    return RestResponse::json(400, &json!({"error": "missing appName"}));
                };
                return match self.instance_mut(name) {
                    Some(i) => {
                        i.core.registered = false;
                        RestResponse::empty(204)
                    }
                    None => RestResponse::json(
                        404,
                        &json!({"error": format!("no installed xapp named {name}")}),
                    ),
                };
            }
            if match_path("/ric/v1/onboard", &req.path).is_some() {
                let Ok(body) = req.json() else {
                    return RestResponse::json(400, &json!({"error": "malformed JSON"}));
                };
                let Some(descriptor_text) = body["descriptor"].as_str() else {
                    return RestResponse::json(400, &json!({"error": "missing descriptor"}));
                };
                let schema_text = body["schema"].as_str();
                return match self.onboard(services, descriptor_text, schema_text) {
                    Ok(rec) => RestResponse::json(
                        201,
                        &json!({"name": rec.name, "version": rec.version, "content_hash": rec.content_hash}),
                    ),
                    Err(e) => RestResponse::json(400, &json!({"error": e})),
                };
            }
        }
        RestResponse::json(404, &json!({"error": "no such route"}))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::samples;

    #[test]
    fn onboard_accepts_valid_descriptor_with_schema() {
        let mut repo = ChartRepo::in_memory();
        let rec = repo
            .onboard(samples::DESCRIPTOR, Some(samples::SCHEMA))
            .unwrap();
        assert_eq!(rec.name, "example_xapp");
        assert_eq!(rec.version, "1.0.0");
        assert_eq!(rec.content_hash.len(), 32);
        assert_eq!(repo.get("example_xapp", "1.0.0").unwrap(), &rec);
    }

    #[test]
    fn onboard_rejects_controls_without_schema() {
        let mut repo = ChartRepo::in_memory();
        let err = repo.onboard(samples::DESCRIPTOR, None).unwrap_err();
        assert!(
            err.contains("controls") && err.contains("schema"),
            "explains the controls/schema coupling: {err}"
        );
    }

    #[test]
    fn onboard_rejects_unparseable_documents() {
        let mut repo = ChartRepo::in_memory();
        assert!(repo.onboard("not json", None).is_err());
        assert!(repo
            .onboard(samples::DESCRIPTOR, Some("also not json"))
            .is_err());
    }

    #[test]
    fn latest_follows_semantic_version_order() {
        let mut repo = ChartRepo::in_memory();
        for (from, to) in [("1.0.0", "1.2.0"), ("1.0.0", "1.10.0"), ("1.0.0", "2.0.0")] {
            let bumped = samples::DESCRIPTOR.replace(
                &format!("\"version\": \"{from}\""),
                &format!("\"version\": \"{to}\""),
            );
            repo.onboard(&bumped, Some(samples::SCHEMA)).unwrap();
        }
        repo.onboard(samples::DESCRIPTOR, Some(samples::SCHEMA)).unwrap();
        // 1.10.0 > 1.2.0 numerically even though it sorts lower textually.
        assert_eq!(repo.latest("example_xapp").unwrap().version, "2.0.0");
        assert_eq!(
            repo.versions("example_xapp"),
            vec!["1.0.0", "1.2.0", "1.10.0", "2.0.0"]
        );
    }

    #[test]
    fn chart_repo_round_trips_through_directory() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut repo = ChartRepo::open(dir.path()).unwrap();
            repo.onboard(samples::DESCRIPTOR, Some(samples::SCHEMA)).unwrap();
        }
        let repo = ChartRepo::open(dir.path()).unwrap();
        let rec = repo.get("example_xapp", "1.0.0").unwrap();
        assert_eq!(rec.descriptor_text, samples::DESCRIPTOR);
        assert_eq!(rec.schema_text.as_deref(), Some(samples::SCHEMA));
        assert!(!rec.content_hash.is_empty());
    }

    #[test]
    fn catalog_lookup_by_image_name() {
        let mut catalog = Catalog::new();
        assert!(catalog.lookup("example_image_1").is_none());
        catalog.register("example_image_1", || {
            crate::xapp::XAppBuilder::new(
                parse_descriptor(samples::DESCRIPTOR).unwrap(),
            )
            .build()
            .unwrap()
        });
        assert!(catalog.lookup("example_image_1").is_some());
        assert_eq!(catalog.images(), vec!["example_image_1"]);
        let blueprint = catalog.lookup("example_image_1").unwrap()();
        assert_eq!(blueprint.descriptor.name, "example_xapp");
    }
}
