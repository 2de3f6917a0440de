//! The xApp framework: how application code plugs into the simulator.
//!
//! An app is described by an [`XAppBlueprint`] — its descriptor plus the
//! closures to run — built with [`XAppBuilder`]. Installing a blueprint
//! produces an [`XAppInstance`] whose handlers receive an [`AppCtx`], the
//! framework-provided view of the platform: messaging, shared storage,
//! subscriptions, configuration, logging, and timers.
//!
//! Two application shapes are supported, mirroring the two framework
//! flavors: *reactive* apps register per-message-type handlers and are
//! driven by the dispatch loop; *general* apps own their loop — a periodic
//! step callback that polls [`AppCtx::rmr_get_messages`] explicitly.
//!
//! The framework itself answers liveness probes (`RIC_HEALTH_CHECK_REQ`
//! gets an automatic `OK` reply unless the app registered its own handler),
//! serves `/ric/v1/health/ready`, `/ric/v1/health/alive` and
//! `/ric/v1/config`, and terminates subscription notifications posted to
//! `/ric/v1/subscriptions/response`.

use crate::bus::DeliveryReceipt;
use crate::clock::TimerId;
use crate::descriptor::{ControlsSchema, XAppDescriptor};
use crate::e2::{SubAction, EventTrigger};
use crate::logging::{Level, LogBuffer};
use crate::messaging::{make_reply, mtypes, Message, RegistryError};
use crate::rest::{match_path, Method, RestRequest, RestResponse};
use crate::ric::{Event, RicServices};
use crate::rnib::GnbIdentity;
use crate::submgr::SubscriptionNotification;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// HTTP port every app's service listens on.
pub const APP_HTTP_PORT: u16 = 8080;

/// RMR data port apps bind by default.
pub const APP_RMR_PORT: u16 = 4560;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum XAppError {
    #[error("a handler for message type {0} is already registered")]
    DuplicateHandler(u32),
    #[error("message type {0} is not registered")]
    UnknownMtype(u32),
    #[error("app is not registered with the app manager yet")]
    NotRegistered,
    #[error("subscription request rejected with status {status}: {body}")]
    SubscriptionRejected { status: u16, body: String },
    #[error("{0}")]
    Registry(#[from] RegistryError),
}

/// How the instance is driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppMode {
    /// Handlers invoked by the dispatch loop as messages arrive.
    Reactive,
    /// A step callback fires every `step_period_ms`; the app polls its own
    /// mailbox.
    General { step_period_ms: u64 },
}

/// Lifecycle state of an installed instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppRunState {
    /// Installed, registration not completed.
    Deployed,
    /// Registered and serving.
    Running,
    /// Tear-down begun; the undeploy grace period is running.
    Stopping,
}

impl AppRunState {
    pub fn as_str(self) -> &'static str {
        match self {
            AppRunState::Deployed => "deployed",
            AppRunState::Running => "running",
            AppRunState::Stopping => "stopping",
        }
    }
}

pub type Handler = Box<dyn FnMut(&mut AppCtx<'_>, &Message)>;
pub type HookFn = Box<dyn FnMut(&mut AppCtx<'_>)>;
pub type TimerFn = Box<dyn FnMut(&mut AppCtx<'_>, &str)>;
pub type NotificationFn = Box<dyn FnMut(&mut AppCtx<'_>, &SubscriptionNotification)>;
pub type RestFn = Box<dyn FnMut(&mut AppCtx<'_>, &RestRequest, &[String]) -> RestResponse>;

/// The closures an app contributes.
pub struct Hooks {
    pub(crate) handlers: BTreeMap<u32, Handler>,
    pub(crate) default_handler: Option<Handler>,
    pub(crate) post_init: Option<HookFn>,
    pub(crate) on_stop: Option<HookFn>,
    pub(crate) on_config_change: Option<HookFn>,
    pub(crate) on_notification: Option<NotificationFn>,
    pub(crate) on_timer: Option<TimerFn>,
    pub(crate) step: Option<HookFn>,
    pub(crate) rest_handlers: Vec<(Method, String, RestFn)>,
}

impl std::fmt::Debug for Hooks {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hooks")
            .field("handlers", &self.handlers.keys().collect::<Vec<_>>())
            .field("default_handler", &self.default_handler.is_some())
            .field("rest_handlers", &self.rest_handlers.len())
            .finish()
    }
}

/// An installable application: descriptor, packaged schema, and behavior.
#[derive(Debug)]
pub struct XAppBlueprint {
    pub descriptor: XAppDescriptor,
    pub schema: Option<ControlsSchema>,
    pub mode: AppMode,
    /// Simulates a missing config file: registration will fail.
    pub config_missing: bool,
    pub(crate) hooks: Hooks,
}

/// Fluent constructor for [`XAppBlueprint`].
pub struct XAppBuilder {
    descriptor: XAppDescriptor,
    schema: Option<ControlsSchema>,
    mode: AppMode,
    config_missing: bool,
    hooks: Hooks,
    errors: Vec<XAppError>,
}

impl std::fmt::Debug for XAppBuilder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("XAppBuilder")
            .field("name", &self.descriptor.name)
            .field("mode", &self.mode)
            .finish()
    }
}

impl XAppBuilder {
    pub fn new(descriptor: XAppDescriptor) -> Self {
        XAppBuilder {
            descriptor,
            schema: None,
            mode: AppMode::Reactive,
            config_missing: false,
            hooks: Hooks {
                handlers: BTreeMap::new(),
                default_handler: None,
                post_init: None,
                on_stop: None,
                on_config_change: None,
                on_notification: None,
                on_timer: None,
                step: None,
                rest_handlers: Vec::new(),
            },
            errors: Vec::new(),
        }
    }

    pub fn schema(mut self, schema: ControlsSchema) -> Self {
        self.schema = Some(schema);
        self
    }

    /// Register a handler for one message type. Registering the same type
    /// twice is an error reported by [`build`](Self::build).
    pub fn handler(
        mut self,
        mtype: u32,
        f: impl FnMut(&mut AppCtx<'_>, &Message) + 'static,
    ) -> Self {
        if self.hooks.handlers.contains_key(&mtype) {
            self.errors.push(XAppError::DuplicateHandler(mtype));
        } else {
            self.hooks.handlers.insert(mtype, Box::new(f));
        }
        self
    }

    /// Handler for message types with no dedicated handler.
    pub fn default_handler(mut self, f: impl FnMut(&mut AppCtx<'_>, &Message) + 'static) -> Self {
        self.hooks.default_handler = Some(Box::new(f));
        self
    }

    /// Runs once, right after registration succeeds.
    pub fn post_init(mut self, f: impl FnMut(&mut AppCtx<'_>) + 'static) -> Self {
        self.hooks.post_init = Some(Box::new(f));
        self
    }

    /// Runs when the instance is stopped, before its resources go away.
    pub fn on_stop(mut self, f: impl FnMut(&mut AppCtx<'_>) + 'static) -> Self {
        self.hooks.on_stop = Some(Box::new(f));
        self
    }

    /// Runs after the operator replaces the controls configuration.
    pub fn on_config_change(mut self, f: impl FnMut(&mut AppCtx<'_>) + 'static) -> Self {
        self.hooks.on_config_change = Some(Box::new(f));
        self
    }

    /// Receives subscription outcome notifications.
    pub fn on_notification(
        mut self,
        f: impl FnMut(&mut AppCtx<'_>, &SubscriptionNotification) + 'static,
    ) -> Self {
        self.hooks.on_notification = Some(Box::new(f));
        self
    }

    /// Receives timer expiries scheduled through [`AppCtx::schedule`].
    pub fn on_timer(mut self, f: impl FnMut(&mut AppCtx<'_>, &str) + 'static) -> Self {
        self.hooks.on_timer = Some(Box::new(f));
        self
    }

    /// Add a REST route served by this app (captured `<segments>` are passed
    /// as parameters).
    pub fn rest(
        mut self,
        method: Method,
        pattern: &str,
        f: impl FnMut(&mut AppCtx<'_>, &RestRequest, &[String]) -> RestResponse + 'static,
    ) -> Self {
        self.hooks
            .rest_handlers
            .push((method, pattern.to_string(), Box::new(f)));
        self
    }

    /// Make this a general app: `step` runs every `step_period_ms`.
    pub fn general(mut self, step_period_ms: u64, step: impl FnMut(&mut AppCtx<'_>) + 'static) -> Self {
        self.mode = AppMode::General { step_period_ms };
        self.hooks.step = Some(Box::new(step));
        self
    }

    /// Simulate a deployment whose config file is unreadable.
    pub fn without_config(mut self) -> Self {
        self.config_missing = true;
        self
    }

    pub fn build(self) -> Result<XAppBlueprint, XAppError> {
        if let Some(err) = self.errors.into_iter().next() {
            return Err(err);
        }
        Ok(XAppBlueprint {
            descriptor: self.descriptor,
            schema: self.schema,
            mode: self.mode,
            config_missing: self.config_missing,
            hooks: self.hooks,
        })
    }
}

/// Everything about a running instance that is plain data.
#[derive(Debug)]
pub struct AppCore {
    pub name: String,
    pub version: String,
    /// RMR endpoint name on the bus.
    pub endpoint: String,
    /// HTTP service name.
    pub http_service: String,
    pub state: AppRunState,
    pub mode: AppMode,
    pub registered: bool,
    pub ready: bool,
    pub alive: bool,
    pub config_missing: bool,
    /// Full configuration document (descriptor shape); `controls` holds the
    /// operator-tunable section.
    pub config: Value,
    pub schema: Option<ControlsSchema>,
    pub descriptor: XAppDescriptor,
    /// REST subscription id → E2 instance id, once the notification lands.
    pub subscriptions: BTreeMap<String, Option<i32>>,
    /// Shared-storage namespaces this app has written.
    pub owned_namespaces: BTreeSet<String>,
    pub rx_count: u64,
    pub tx_count: u64,
    pub log: LogBuffer,
    pub(crate) timers: BTreeMap<String, TimerId>,
    pub(crate) step_timer: Option<TimerId>,
}

/// One installed application.
#[derive(Debug)]
pub struct XAppInstance {
    pub core: AppCore,
    pub(crate) hooks: Hooks,
}

/// Conventional RMR endpoint name for an app.
pub fn rmr_endpoint_name(app: &str) -> String {
    format!("service-ricxapp-{app}-rmr.ricxapp")
}

/// Conventional HTTP service name for an app.
pub fn http_service_name(app: &str) -> String {
    format!("service-ricxapp-{app}-http.ricxapp")
}

impl XAppBlueprint {
    /// Turn the blueprint into a live (not yet registered) instance.
    pub fn instantiate(self) -> XAppInstance {
        let name = self.descriptor.name.clone();
        let config = self.descriptor.to_json();
        XAppInstance {
            core: AppCore {
                endpoint: rmr_endpoint_name(&name),
                http_service: http_service_name(&name),
                version: self.descriptor.version.clone(),
                state: AppRunState::Deployed,
                mode: self.mode,
                registered: false,
                ready: false,
                alive: false,
                config_missing: self.config_missing,
                config,
                schema: self.schema,
                descriptor: self.descriptor,
                subscriptions: BTreeMap::new(),
                owned_namespaces: BTreeSet::new(),
                rx_count: 0,
                tx_count: 0,
                log: LogBuffer::new(name.clone()),
                timers: BTreeMap::new(),
                step_timer: None,
                name,
            },
            hooks: self.hooks,
        }
    }
}

impl XAppInstance {
    /// One-line status record (the app-manager listing shape).
    pub fn status_json(&self) -> Value {
        json!({
            "name": self.core.name,
            "version": self.core.version,
            "status": self.core.state.as_str(),
            "endpoint": self.core.endpoint,
            "http": self.core.http_service,
            "ready": self.core.ready,
            "alive": self.core.alive,
            "rx": self.core.rx_count,
            "tx": self.core.tx_count,
            "subscriptions": self.core.subscriptions.keys().collect::<Vec<_>>(),
        })
    }

    /// Dispatch one message through the framework. The automatic health
    /// responder answers `RIC_HEALTH_CHECK_REQ` unless the app registered
    /// its own handler for it.
    pub fn dispatch(&mut self, services: &RicServices, msg: &Message) {
        if self.core.state != AppRunState::Running {
            let now = services.now_ms();
            self.core.log.log(
                now,
                Level::Debug,
                format!("dropping mtype {} while {}", msg.mtype, self.core.state.as_str()),
            );
            return;
        }
        self.core.rx_count += 1;
        let Self { core, hooks } = self;
        let mut ctx = AppCtx { core, services };
        if msg.mtype == mtypes::RIC_HEALTH_CHECK_REQ && !hooks.handlers.contains_key(&msg.mtype) {
            ctx.health_auto_reply(msg);
            return;
        }
        match hooks.handlers.get_mut(&msg.mtype) {
            Some(h) => h(&mut ctx, msg),
            None => match hooks.default_handler.as_mut() {
                Some(h) => h(&mut ctx, msg),
                None => ctx.log(
                    Level::Warning,
                    format!("no handler for message type {}", msg.mtype),
                ),
            },
        }
    }

    /// Run the periodic body of a general app.
    pub fn run_step(&mut self, services: &RicServices) {
        let Self { core, hooks } = self;
        let mut ctx = AppCtx { core, services };
        if let Some(step) = hooks.step.as_mut() {
            step(&mut ctx);
        }
    }

    /// Run a lifecycle hook by name.
    pub(crate) fn run_post_init(&mut self, services: &RicServices) {
        let Self { core, hooks } = self;
        let mut ctx = AppCtx { core, services };
        if let Some(f) = hooks.post_init.as_mut() {
            f(&mut ctx);
        }
    }

    pub(crate) fn run_on_stop(&mut self, services: &RicServices) {
        let Self { core, hooks } = self;
        let mut ctx = AppCtx { core, services };
        if let Some(f) = hooks.on_stop.as_mut() {
            f(&mut ctx);
        }
    }

    pub(crate) fn run_config_change(&mut self, services: &RicServices) {
        let Self { core, hooks } = self;
        let mut ctx = AppCtx { core, services };
        if let Some(f) = hooks.on_config_change.as_mut() {
            f(&mut ctx);
        }
    }

    pub(crate) fn fire_timer(&mut self, services: &RicServices, key: &str) {
        self.core.timers.remove(key);
        let Self { core, hooks } = self;
        let mut ctx = AppCtx { core, services };
        if let Some(f) = hooks.on_timer.as_mut() {
            f(&mut ctx, key);
        }
    }

    /// Serve one HTTP request: framework routes first, then app routes.
    pub fn handle_rest(&mut self, services: &RicServices, req: &RestRequest) -> RestResponse {
        if req.method == Method::Get && match_path("/ric/v1/health/ready", &req.path).is_some() {
            return if self.core.ready {
                RestResponse::json(200, &json!({"status": "ready"}))
            } else {
                RestResponse::json(503, &json!({"status": "not ready"}))
            };
        }
        if req.method == Method::Get && match_path("/ric/v1/health/alive", &req.path).is_some() {
            return if self.core.alive {
                RestResponse::json(200, &json!({"status": "alive"}))
            } else {
                RestResponse::json(503, &json!({"status": "not alive"}))
            };
        }
        if req.method == Method::Get && match_path("/ric/v1/config", &req.path).is_some() {
            return RestResponse::json(200, &self.core.config);
        }
        if req.method == Method::Post
            && match_path("/ric/v1/subscriptions/response", &req.path).is_some()
        {
            return self.accept_notification(services, req);
        }

        let Self { core, hooks } = self;
        for (method, pattern, handler) in hooks.rest_handlers.iter_mut() {
            if *method != req.method {
                continue;
            }
            if let Some(params) = match_path(pattern, &req.path) {
                let mut ctx = AppCtx { core, services };
                return handler(&mut ctx, req, &params);
            }
        }
        RestResponse::json(404, &json!({"error": "no such route"}))
    }

    fn accept_notification(&mut self, services: &RicServices, req: &RestRequest) -> RestResponse {
        let Ok(body) = req.json() else {
            return RestResponse::json(400, &json!({"error": "malformed notification"}));
        };
        let Some(notification) = SubscriptionNotification::from_json(&body) else {
            return RestResponse::json(400, &json!({"error": "unrecognized notification shape"}));
        };
        let now = services.now_ms();
        if let Some(slot) = self.core.subscriptions.get_mut(&notification.subscription_id) {
            if let Some(inst) = notification.instances.first() {
                if inst.error_cause.is_none() {
                    *slot = Some(inst.e2_event_instance_id);
                } else {
                    self.core.log.log(
                        now,
                        Level::Error,
                        format!(
                            "subscription {} failed: {}{}",
                            notification.subscription_id,
                            inst.error_cause.as_deref().unwrap_or(""),
                            inst.timeout_type
                                .as_deref()
                                .map(|t| format!(" ({t})"))
                                .unwrap_or_default(),
                        ),
                    );
                }
            }
        }
        let Self { core, hooks } = self;
        if let Some(f) = hooks.on_notification.as_mut() {
            let mut ctx = AppCtx { core, services };
            f(&mut ctx, &notification);
        }
        RestResponse::json(200, &json!({}))
    }
}

/// Parameters for a programmatic subscription; rendered to the REST body the
/// subscription manager expects.
#[derive(Debug, Clone)]
pub struct SubscriptionSpec {
    pub meid: String,
    pub ran_function_id: u32,
    pub event_trigger: EventTrigger,
    pub actions: Vec<SubAction>,
    pub xapp_event_instance_id: i64,
}

impl SubscriptionSpec {
    /// Periodic-report subscription with one REPORT action.
    pub fn report(
        meid: impl Into<String>,
        ran_function_id: u32,
        reporting_period_ms: u64,
        action: SubAction,
    ) -> Self {
        SubscriptionSpec {
            meid: meid.into(),
            ran_function_id,
            event_trigger: EventTrigger::periodic(reporting_period_ms),
            actions: vec![action],
            xapp_event_instance_id: 1,
        }
    }

    /// The canonical subscription request body.
    pub fn rest_body(&self, client_http_host: &str) -> Value {
        let actions: Vec<Value> = self
            .actions
            .iter()
            .map(|a| {
                let mut entry = json!({
                    "ActionID": a.action_id,
                    "ActionType": a.action_type.as_str(),
                    "ActionDefinition": {
                        "measInfoList": a.definition.meas_info_list.iter().map(|mi| json!({
                            "measName": mi.meas_name,
                            "labels": mi.labels,
                        })).collect::<Vec<_>>(),
                        "granulPeriod": a.definition.granul_period_ms,
                        "ricStyleType": a.definition.ric_style_type,
                    },
                });
                if let Some(s) = &a.subsequent {
                    entry["SubsequentAction"] = json!({
                        "SubsequentActionType": s.subsequent_action_type,
                        "TimeToWait": s.time_to_wait,
                    });
                }
                entry
            })
            .collect();
        json!({
            "SubscriptionId": "",
            "ClientEndpoint": {
                "Host": client_http_host,
                "HTTPPort": APP_HTTP_PORT,
                "RMRPort": APP_RMR_PORT,
            },
            "Meid": self.meid,
            "RANFunctionID": self.ran_function_id,
            "SubscriptionDetails": [
                {
                    "XappEventInstanceId": self.xapp_event_instance_id,
                    "EventTriggers": {
                        "reportingPeriod": self.event_trigger.reporting_period_ms,
                    },
                    "ActionToBeSetupList": actions,
                }
            ],
        })
    }
}

/// The framework surface handed to every app callback.
pub struct AppCtx<'a> {
    pub core: &'a mut AppCore,
    pub services: &'a RicServices,
}

impl std::fmt::Debug for AppCtx<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AppCtx").field("app", &self.core.name).finish()
    }
}

impl AppCtx<'_> {
    /// Current simulated time.
    pub fn now_ms(&self) -> u64 {
        self.services.now_ms()
    }

    /// App configuration document.
    pub fn config(&self) -> &Value {
        &self.core.config
    }

    /// The `controls` section of the configuration.
    pub fn controls(&self) -> &Value {
        &self.core.config["controls"]
    }

    pub fn log(&mut self, level: Level, msg: impl Into<String>) {
        let now = self.services.now_ms();
        self.core.log.log(now, level, msg);
    }

    pub fn set_ready(&mut self, ready: bool) {
        self.core.ready = ready;
    }

    pub fn set_alive(&mut self, alive: bool) {
        self.core.alive = alive;
    }

    // -- messaging ----------------------------------------------------------

    fn send_gate(&self, mtype: u32) -> Result<(), XAppError> {
        if !self.core.registered {
            return Err(XAppError::NotRegistered);
        }
        if !self.services.registry.borrow().contains_code(mtype) {
            return Err(XAppError::UnknownMtype(mtype));
        }
        Ok(())
    }

    /// Send a message; routing follows this endpoint's table snapshot.
    pub fn rmr_send(&mut self, mtype: u32, payload: impl Into<Vec<u8>>) -> Result<DeliveryReceipt, XAppError> {
        self.rmr_send_msg(Message::new(mtype, payload.into()))
    }

    /// Send a fully prepared message (for subid/meid control).
    pub fn rmr_send_msg(&mut self, msg: Message) -> Result<DeliveryReceipt, XAppError> {
        self.send_gate(msg.mtype)?;
        let now = self.services.now_ms();
        let receipt = self
            .services
            .bus
            .borrow_mut()
            .send(now, &self.core.endpoint, msg);
        if receipt.ok() {
            self.core.tx_count += 1;
        }
        Ok(receipt)
    }

    /// Reply to `original`, straight back to its sender.
    pub fn rmr_reply(
        &mut self,
        original: &Message,
        new_mtype: u32,
        payload: impl Into<Vec<u8>>,
    ) -> Result<DeliveryReceipt, XAppError> {
        if !self.core.registered {
            return Err(XAppError::NotRegistered);
        }
        let reply = make_reply(
            &self.services.registry.borrow(),
            original,
            payload,
            Some(new_mtype),
        )?;
        let now = self.services.now_ms();
        let receipt = self
            .services
            .bus
            .borrow_mut()
            .send(now, &self.core.endpoint, reply);
        if receipt.ok() {
            self.core.tx_count += 1;
        }
        Ok(receipt)
    }

    fn health_auto_reply(&mut self, probe: &Message) {
        if let Ok(reply) = make_reply(
            &self.services.registry.borrow(),
            probe,
            b"OK\n".to_vec(),
            Some(mtypes::RIC_HEALTH_CHECK_RESP),
        ) {
            let now = self.services.now_ms();
            self.services
                .bus
                .borrow_mut()
                .send(now, &self.core.endpoint, reply);
        }
    }

    /// Poll this app's mailbox (the general-app receive path). Health probes
    /// are answered by the framework and not returned.
    pub fn rmr_get_messages(&mut self) -> Vec<Message> {
        let drained = self.services.bus.borrow_mut().drain(&self.core.endpoint);
        let mut out = Vec::with_capacity(drained.len());
        for msg in drained {
            self.core.rx_count += 1;
            if msg.mtype == mtypes::RIC_HEALTH_CHECK_REQ {
                self.health_auto_reply(&msg);
            } else {
                out.push(msg);
            }
        }
        out
    }

    /// Register a new message type name/code pair for everyone.
    pub fn register_mtype(&mut self, name: &str, code: u32) -> Result<(), XAppError> {
        self.services
            .registry
            .borrow_mut()
            .register(name, code)
            .map_err(XAppError::from)
    }

    /// Look up a message type code by name.
    pub fn mtype_code(&self, name: &str) -> Result<u32, XAppError> {
        self.services
            .registry
            .borrow()
            .code_of(name)
            .map_err(XAppError::from)
    }

    // -- shared storage ------------------------------------------------------

    /// Record that this app writes to `ns`. The claim is also persisted so a
    /// strict undeploy can purge the app's namespaces even from a fresh
    /// process over the same storage.
    fn claim_namespace(&mut self, ns: &str) {
        if self.core.owned_namespaces.insert(ns.to_string()) {
            let marker = format!("owns:{}:{}", self.core.name, ns);
            let _ = self
                .services
                .sdl
                .set(crate::appmgr::APPMGR_NAMESPACE, &marker, b"1".to_vec());
        }
    }

    pub fn sdl_set(&mut self, ns: &str, key: &str, val: impl Into<Vec<u8>>) {
        self.claim_namespace(ns);
        if let Err(e) = self.services.sdl.set(ns, key, val) {
            self.log(Level::Error, format!("sdl set failed: {e}"));
        }
    }

    pub fn sdl_set_json<T: serde::Serialize>(&mut self, ns: &str, key: &str, val: &T) {
        self.claim_namespace(ns);
        if let Err(e) = self.services.sdl.set_json(ns, key, val) {
            self.log(Level::Error, format!("sdl set failed: {e}"));
        }
    }

    pub fn sdl_get(&self, ns: &str, key: &str) -> Option<Vec<u8>> {
        self.services.sdl.get(ns, key)
    }

    pub fn sdl_delete(&mut self, ns: &str, key: &str) {
        self.claim_namespace(ns);
        if let Err(e) = self.services.sdl.delete(ns, key) {
            self.log(Level::Error, format!("sdl delete failed: {e}"));
        }
    }

    pub fn sdl_find_keys(&self, ns: &str, prefix: &str) -> Vec<String> {
        self.services.sdl.find_keys(ns, prefix)
    }

    // -- topology ------------------------------------------------------------

    /// Connected-or-known nodes from the R-NIB.
    pub fn nodes(&self) -> Vec<GnbIdentity> {
        self.services.rnib.get_list_gnb_ids()
    }

    /// RAN function definitions exposed by a node under `oid`.
    pub fn ran_function_definitions(&self, inventory_name: &str, oid: &str) -> Vec<Value> {
        self.services
            .rnib
            .get_ran_function_definition(inventory_name, oid)
    }

    // -- subscriptions -------------------------------------------------------

    /// Subscribe via the subscription manager's REST interface. Returns the
    /// REST subscription id; the E2 instance id arrives later through the
    /// notification callback.
    pub fn subscribe(&mut self, spec: &SubscriptionSpec) -> Result<String, XAppError> {
        let body = spec.rest_body(&self.core.http_service);
        let req = RestRequest::post_json("/ric/v1/subscriptions", &body);
        let resp = self
            .services
            .submgr
            .borrow_mut()
            .handle_rest(&req, self.services);
        if resp.status != 201 {
            return Err(XAppError::SubscriptionRejected {
                status: resp.status,
                body: String::from_utf8_lossy(&resp.body).into_owned(),
            });
        }
        let rest_id = resp
            .json_body()
            .ok()
            .and_then(|v| v["SubscriptionId"].as_str().map(str::to_string))
            .unwrap_or_default();
        self.core.subscriptions.insert(rest_id.clone(), None);
        self.log(Level::Info, format!("subscription requested: {rest_id}"));
        Ok(rest_id)
    }

    /// Delete a subscription created by this app.
    pub fn unsubscribe(&mut self, rest_id: &str) -> Result<(), XAppError> {
        let req = RestRequest::delete(format!("/ric/v1/subscriptions/{rest_id}"));
        let resp = self
            .services
            .submgr
            .borrow_mut()
            .handle_rest(&req, self.services);
        if resp.status != 204 {
            return Err(XAppError::SubscriptionRejected {
                status: resp.status,
                body: String::from_utf8_lossy(&resp.body).into_owned(),
            });
        }
        self.core.subscriptions.remove(rest_id);
        Ok(())
    }

    /// E2 instance id of a subscription, once established.
    pub fn subscription_instance(&self, rest_id: &str) -> Option<i32> {
        self.core.subscriptions.get(rest_id).copied().flatten()
    }

    // -- timers --------------------------------------------------------------

    /// Arm (or re-arm) a named timer; the `on_timer` hook receives `key`.
    pub fn schedule(&mut self, delay_ms: u64, key: &str) {
        let event = Event::AppTimer {
            endpoint: self.core.endpoint.clone(),
            key: key.to_string(),
        };
        let id = self.services.clock.borrow_mut().schedule_in(delay_ms, event);
        if let Some(old) = self.core.timers.insert(key.to_string(), id) {
            self.services.clock.borrow_mut().cancel(old);
        }
    }

    /// Disarm a named timer.
    pub fn cancel_timer(&mut self, key: &str) -> bool {
        match self.core.timers.remove(key) {
            Some(id) => self.services.clock.borrow_mut().cancel(id),
            None => false,
        }
    }
}
