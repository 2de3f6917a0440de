//! The simulator's composition root.
//!
//! A [`Ric`] wires every platform component together over one deterministic
//! event loop: the shared clock, the message bus, the subscription manager,
//! the policy mediator, the app manager, and the E2 layer that terminates
//! node-bound traffic against simulated gNodeBs. Everything runs
//! single-threaded; sends only enqueue, and [`Ric::advance`] pumps timers
//! and mailboxes until the system is quiescent, so identical inputs always
//! produce identical runs.
//!
//! Components reach each other through [`RicServices`], a cloneable bundle
//! of shared handles. Calls only flow "down" (managers borrow the bus, the
//! clock, storage — never each other), which keeps the interior-mutability
//! web free of borrow cycles; anything that must run app code as a
//! consequence of manager activity (subscription notifications) is queued
//! and delivered between dispatches.

use crate::a1::A1Mediator;
use crate::appmgr::{AppManager, Catalog, ChartRepo};
use crate::bus::{EndpointOptions, MessageBus};
use crate::clock::Scheduler;
use crate::e2::{NodeConfig, SimNode, E2TERM_ENDPOINT};
use crate::e2::{ControlRequest, SubDelete, SubDeleteResult, SubSetup};
use crate::logging::{Level, LogBuffer, LogEntry};
use crate::messaging::{make_reply, mtypes, Message, MtypeRegistry};
use crate::rest::{RestRequest, RestResponse};
use crate::rnib::Rnib;
use crate::sdl::SdlStore;
use crate::submgr::{SubscriptionManager, SUBMGR_HTTP};
use serde_json::{json, Value};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;
use std::sync::Arc;

/// RMR endpoint of the subscription manager.
pub const SUBMGR_ENDPOINT: &str = "service-ricplt-submgr-rmr.ricplt";

/// RMR endpoint of the A1 mediator.
pub const A1_MEDIATOR_ENDPOINT: &str = "service-ricplt-a1mediator-rmr.ricplt";

/// RMR endpoint of the app manager.
pub const APPMGR_ENDPOINT: &str = "service-ricplt-appmgr-rmr.ricplt";

/// Upper bound on messages dispatched per drain, against send loops.
const DISPATCH_GUARD: usize = 1_000_000;

/// Everything the event loop can schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// A node's periodic report for one subscription is due.
    ReportTick { inventory_name: String, subid: i32 },
    /// A subscription setup went unanswered.
    SubscriptionTimeout { subid: i32 },
    /// A subscription teardown went unanswered.
    DeleteTimeout { subid: i32 },
    /// Run platform registration for a freshly deployed app.
    AppBootstrap { endpoint: String },
    /// Periodic step of a general app.
    AppStep { endpoint: String },
    /// A named app timer expired.
    AppTimer { endpoint: String, key: String },
    /// The undeploy grace period of a stopping app ended.
    UninstallComplete { endpoint: String, strict: bool },
    /// An RMR health probe went unanswered.
    ProbeTimeout { txid: u64 },
}

/// Shared handles handed to every component and app callback.
#[derive(Clone)]
pub struct RicServices {
    pub clock: Rc<RefCell<Scheduler<Event>>>,
    pub registry: Rc<RefCell<MtypeRegistry>>,
    pub bus: Rc<RefCell<MessageBus>>,
    pub sdl: Arc<SdlStore>,
    pub rnib: Rnib,
    /// The platform component log.
    pub log: Rc<RefCell<LogBuffer>>,
    pub submgr: Rc<RefCell<SubscriptionManager>>,
    pub a1: Rc<RefCell<A1Mediator>>,
}

impl std::fmt::Debug for RicServices {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RicServices")
            .field("now_ms", &self.now_ms())
            .finish()
    }
}

impl RicServices {
    pub fn now_ms(&self) -> u64 {
        self.clock.borrow().now_ms()
    }

    pub fn log_info(&self, msg: impl Into<String>) {
        self.log_at(Level::Info, msg);
    }

    pub fn log_at(&self, level: Level, msg: impl Into<String>) {
        let now = self.now_ms();
        self.log.borrow_mut().log(now, level, msg);
    }
}

// ---------------------------------------------------------------------------
// E2 layer
// ---------------------------------------------------------------------------

/// Terminates node-bound messaging against the simulated gNodeBs: applies
/// subscription setups, teardowns, and control requests to node state, and
/// emits the periodic indications armed subscriptions call for.
#[derive(Debug, Default)]
pub struct E2Layer {
    nodes: BTreeMap<String, SimNode>,
}

impl E2Layer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Attach a node: it appears in the R-NIB and the bus learns that this
    /// managed entity is reachable through the E2 terminator.
    pub fn attach(&mut self, services: &RicServices, config: NodeConfig) -> Result<String, String> {
        let node = SimNode::new(config);
        let name = node.inventory_name.clone();
        if self.nodes.contains_key(&name) {
            return Err(format!("node {name} is already attached"));
        }
        services
            .rnib
            .put_nodeb(&node.nodeb_info())
            .map_err(|e| e.to_string())?;
        services
            .bus
            .borrow_mut()
            .set_meid_owner(&name, E2TERM_ENDPOINT);
        self.nodes.insert(name.clone(), node);
        services.log_info(format!("node {name} attached"));
        Ok(name)
    }

    /// Remove a node and everything that pointed at it.
    pub fn detach(&mut self, services: &RicServices, inventory_name: &str) -> bool {
        let Some(node) = self.nodes.remove(inventory_name) else {
            return false;
        };
        {
            let mut clock = services.clock.borrow_mut();
            for armed in node.armed.values() {
                if let Some(id) = armed.timer {
                    clock.cancel(id);
                }
            }
        }
        let _ = services.rnib.remove_nodeb(inventory_name);
        services.bus.borrow_mut().clear_meid_owner(inventory_name);
        services.log_info(format!("node {inventory_name} detached"));
        true
    }

    pub fn set_connected(
        &mut self,
        services: &RicServices,
        inventory_name: &str,
        connected: bool,
    ) -> bool {
        let Some(node) = self.nodes.get_mut(inventory_name) else {
            return false;
        };
        node.connected = connected;
        let _ = services.rnib.set_connection_status(
            inventory_name,
            if connected { "CONNECTED" } else { "DISCONNECTED" },
        );
        true
    }

    /// Fault-injection knob: an unresponsive node swallows requests without
    /// answering, which is how timeout/retry behavior is exercised.
    pub fn set_responsive(&mut self, inventory_name: &str, responsive: bool) -> bool {
        match self.nodes.get_mut(inventory_name) {
            Some(node) => {
                node.responsive = responsive;
                true
            }
            None => false,
        }
    }

    pub fn node(&self, inventory_name: &str) -> Option<&SimNode> {
        self.nodes.get(inventory_name)
    }

    pub fn node_mut(&mut self, inventory_name: &str) -> Option<&mut SimNode> {
        self.nodes.get_mut(inventory_name)
    }

    pub fn names(&self) -> Vec<String> {
        self.nodes.keys().cloned().collect()
    }

    fn reply_from_node(&self, services: &RicServices, original: &Message, payload: Vec<u8>, mtype: u32) {
        let reply = {
            let registry = services.registry.borrow();
            make_reply(&registry, original, payload, Some(mtype))
        };
        match reply {
            Ok(msg) => {
                let now = services.now_ms();
                let _ = services.bus.borrow_mut().send(now, E2TERM_ENDPOINT, msg);
            }
            Err(e) => services.log_at(Level::Error, format!("node reply not sent: {e}")),
        }
    }

    /// Handle one message addressed to the E2 terminator.
    pub fn handle_message(&mut self, services: &RicServices, msg: &Message) {
        let Some(meid) = msg.meid.clone() else {
            services.log_at(
                Level::Error,
                format!("node-bound message type {} without a managed entity id", msg.mtype),
            );
            return;
        };
        let Some(node) = self.nodes.get_mut(&meid) else {
            services.log_at(Level::Error, format!("no attached node {meid}"));
            return;
        };
        if !node.responsive || !node.connected {
            services.log_at(
                Level::Debug,
                format!("node {meid} swallowed message type {} (unreachable)", msg.mtype),
            );
            return;
        }
        match msg.mtype {
            mtypes::RIC_SUB_REQ => {
                let setup = match SubSetup::decode(&msg.payload) {
                    Ok(s) => s,
                    Err(e) => {
                        services.log_at(Level::Error, format!("undecodable setup: {e}"));
                        return;
                    }
                };
                let result = node.apply_setup(&setup);
                if !result.accepted.is_empty() {
                    let period = node
                        .armed
                        .get(&setup.subid)
                        .map(|a| a.trigger.reporting_period_ms.max(1))
                        .unwrap_or(1000);
                    let id = services.clock.borrow_mut().schedule_in(
                        period,
                        Event::ReportTick {
                            inventory_name: meid.clone(),
                            subid: setup.subid,
                        },
                    );
                    if let Some(armed) = node.armed.get_mut(&setup.subid) {
                        armed.timer = Some(id);
                    }
                }
                let payload = result.encode();
                self.reply_from_node(services, msg, payload, mtypes::RIC_SUB_RESP);
            }
            mtypes::RIC_SUB_DEL_REQ => {
                let del = match SubDelete::decode(&msg.payload) {
                    Ok(d) => d,
                    Err(e) => {
                        services.log_at(Level::Error, format!("undecodable teardown: {e}"));
                        return;
                    }
                };
                let (removed, timer) = node.apply_delete(del.subid);
                if let Some(id) = timer {
                    services.clock.borrow_mut().cancel(id);
                }
                let payload = SubDeleteResult {
                    subid: del.subid,
                    removed,
                }
                .encode();
                self.reply_from_node(services, msg, payload, mtypes::RIC_SUB_DEL_RESP);
            }
            mtypes::RIC_CONTROL_REQ => {
                let req = match ControlRequest::decode(&msg.payload) {
                    Ok(r) => r,
                    Err(e) => {
                        services.log_at(Level::Error, format!("undecodable control: {e}"));
                        return;
                    }
                };
                let ack_requested = req.ack_requested;
                let outcome = node.apply_control(&req);
                if outcome.success && !ack_requested {
                    return;
                }
                let mtype = if outcome.success {
                    mtypes::RIC_CONTROL_ACK
                } else {
                    mtypes::RIC_CONTROL_FAILURE
                };
                let payload = outcome.encode();
                self.reply_from_node(services, msg, payload, mtype);
            }
            other => {
                services.log_at(
                    Level::Warning,
                    format!("node {meid} ignoring message type {other}"),
                );
            }
        }
    }

    /// Emit the periodic report for one armed subscription and re-arm the
    /// tick. A disconnected node skips the emission but keeps the schedule,
    /// so reports resume on reconnect.
    pub fn on_report_tick(&mut self, services: &RicServices, inventory_name: &str, subid: i32) {
        let Some(node) = self.nodes.get_mut(inventory_name) else {
            return;
        };
        if !node.armed.contains_key(&subid) {
            return;
        }
        let now = services.now_ms();
        if node.connected {
            if let Some(indication) = node.build_indication(subid, now) {
                let payload = indication.encode();
                let msg = Message::new(mtypes::RIC_INDICATION, payload)
                    .with_subid(subid)
                    .with_meid(inventory_name);
                let receipt = services.bus.borrow_mut().send(now, E2TERM_ENDPOINT, msg);
                if receipt.ok() {
                    node.emitted += 1;
                } else {
                    services.log_at(
                        Level::Warning,
                        format!(
                            "indication for subscription {subid} undeliverable: {}",
                            receipt.error.as_deref().unwrap_or("unknown")
                        ),
                    );
                }
            }
        }
        let period = node
            .armed
            .get(&subid)
            .map(|a| a.trigger.reporting_period_ms.max(1))
            .unwrap_or(1000);
        let id = services.clock.borrow_mut().schedule_in(
            period,
            Event::ReportTick {
                inventory_name: inventory_name.to_string(),
                subid,
            },
        );
        if let Some(armed) = node.armed.get_mut(&subid) {
            armed.timer = Some(id);
        }
    }

    /// Arm a node directly (no messaging) — used when reviving persisted
    /// subscriptions.
    pub fn restore_arm(
        &mut self,
        services: &RicServices,
        inventory_name: &str,
        setup: &SubSetup,
    ) -> bool {
        let Some(node) = self.nodes.get_mut(inventory_name) else {
            return false;
        };
        let result = node.apply_setup(setup);
        if result.accepted.is_empty() {
            return false;
        }
        let period = node
            .armed
            .get(&setup.subid)
            .map(|a| a.trigger.reporting_period_ms.max(1))
            .unwrap_or(1000);
        let id = services.clock.borrow_mut().schedule_in(
            period,
            Event::ReportTick {
                inventory_name: inventory_name.to_string(),
                subid: setup.subid,
            },
        );
        if let Some(armed) = node.armed.get_mut(&setup.subid) {
            armed.timer = Some(id);
        }
        true
    }

    /// Per-node counters for the operator surface.
    pub fn nodes_json(&self) -> Value {
        let items: Vec<Value> = self
            .nodes
            .values()
            .map(|n| {
                json!({
                    "inventory_name": n.inventory_name,
                    "connected": n.connected,
                    "responsive": n.responsive,
                    "armed_subscriptions": n.armed.len(),
                    "active_actions": n.active_actions(),
                    "emitted": n.emitted,
                })
            })
            .collect();
        json!(items)
    }
}

// ---------------------------------------------------------------------------
// The simulator
// ---------------------------------------------------------------------------

/// One self-contained simulated RIC deployment.
pub struct Ric {
    pub services: RicServices,
    pub appmgr: Rc<RefCell<AppManager>>,
    pub e2: Rc<RefCell<E2Layer>>,
}

impl std::fmt::Debug for Ric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ric")
            .field("now_ms", &self.services.now_ms())
            .finish()
    }
}

impl Ric {
    /// Fresh in-memory deployment with the given runnable-image catalog.
    pub fn new(catalog: Catalog) -> Self {
        Self::with_parts(catalog, ChartRepo::in_memory(), Arc::new(SdlStore::new()))
    }

    /// Deployment over explicit chart and storage backends (the operator
    /// CLI passes directory-backed ones).
    pub fn with_parts(catalog: Catalog, charts: ChartRepo, sdl: Arc<SdlStore>) -> Self {
        let mut bus = MessageBus::new();
        let platform_options = EndpointOptions {
            auto_dispatch: true,
            max_payload: 65536,
            ..EndpointOptions::default()
        };
        for endpoint in [
            E2TERM_ENDPOINT,
            SUBMGR_ENDPOINT,
            A1_MEDIATOR_ENDPOINT,
            APPMGR_ENDPOINT,
        ] {
            bus.register(endpoint, platform_options.clone());
        }
        {
            let table = bus.master_table_mut();
            // Control requests route by managed-entity ownership; policy
            // queries and acknowledgements converge on the mediator.
            table.add_meid_entry(mtypes::RIC_CONTROL_REQ, -1);
            table.add_subscription_entries(
                &[mtypes::A1_POLICY_QUERY, mtypes::A1_POLICY_RESP],
                -1,
                A1_MEDIATOR_ENDPOINT,
            );
        }
        bus.distribute();

        let services = RicServices {
            clock: Rc::new(RefCell::new(Scheduler::new())),
            registry: Rc::new(RefCell::new(MtypeRegistry::seeded())),
            bus: Rc::new(RefCell::new(bus)),
            sdl: sdl.clone(),
            rnib: Rnib::new(sdl),
            log: Rc::new(RefCell::new(LogBuffer::new("ricplt"))),
            submgr: Rc::new(RefCell::new(SubscriptionManager::new())),
            a1: Rc::new(RefCell::new(A1Mediator::new())),
        };
        Ric {
            services,
            appmgr: Rc::new(RefCell::new(AppManager::new(catalog, charts))),
            e2: Rc::new(RefCell::new(E2Layer::new())),
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.services.now_ms()
    }

    // -- the event loop ------------------------------------------------------

    /// Dispatch queued messages (and queued notifications) until nothing is
    /// deliverable.
    pub fn drain_dispatch(&self) {
        let mut hops = 0usize;
        loop {
            let pending = self
                .services
                .submgr
                .borrow_mut()
                .take_pending_notifications();
            if !pending.is_empty() {
                let mut appmgr = self.appmgr.borrow_mut();
                for (client_http, notification) in pending {
                    appmgr.deliver_notification(&self.services, &client_http, &notification);
                }
                continue;
            }
            let next = self.services.bus.borrow_mut().next_dispatchable();
            let Some((endpoint, msg)) = next else {
                break;
            };
            hops += 1;
            if hops > DISPATCH_GUARD {
                self.services.log_at(
                    Level::Error,
                    "dispatch guard tripped: possible message loop".to_string(),
                );
                break;
            }
            match endpoint.as_str() {
                E2TERM_ENDPOINT => self.e2.borrow_mut().handle_message(&self.services, &msg),
                SUBMGR_ENDPOINT => self
                    .services
                    .submgr
                    .borrow_mut()
                    .handle_message(&msg, &self.services),
                A1_MEDIATOR_ENDPOINT => self
                    .services
                    .a1
                    .borrow_mut()
                    .handle_message(&msg, &self.services),
                APPMGR_ENDPOINT => self
                    .appmgr
                    .borrow_mut()
                    .handle_platform_message(&self.services, &msg),
                app_endpoint => self.appmgr.borrow_mut().dispatch_message(
                    &self.services,
                    app_endpoint,
                    &msg,
                ),
            }
        }
    }

    fn handle_event(&self, event: Event) {
        match event {
            Event::ReportTick {
                inventory_name,
                subid,
            } => self
                .e2
                .borrow_mut()
                .on_report_tick(&self.services, &inventory_name, subid),
            Event::SubscriptionTimeout { subid } => self
                .services
                .submgr
                .borrow_mut()
                .on_setup_timeout(subid, &self.services),
            Event::DeleteTimeout { subid } => self
                .services
                .submgr
                .borrow_mut()
                .on_delete_timeout(subid, &self.services),
            Event::AppBootstrap { endpoint } => {
                self.appmgr.borrow_mut().bootstrap(&self.services, &endpoint)
            }
            Event::AppStep { endpoint } => {
                self.appmgr.borrow_mut().step_app(&self.services, &endpoint)
            }
            Event::AppTimer { endpoint, key } => {
                self.appmgr
                    .borrow_mut()
                    .fire_app_timer(&self.services, &endpoint, &key)
            }
            Event::UninstallComplete { endpoint, strict } => self
                .appmgr
                .borrow_mut()
                .complete_uninstall(&self.services, &endpoint, strict),
            Event::ProbeTimeout { txid } => self
                .appmgr
                .borrow_mut()
                .on_probe_timeout(&self.services, txid),
        }
    }

    /// Run the deployment up to (and including) the absolute instant
    /// `target_ms`: timers fire in deadline order, and every firing's message
    /// fallout is fully dispatched before the next timer.
    pub fn run_until(&self, target_ms: u64) {
        self.drain_dispatch();
        loop {
            let due = self.services.clock.borrow_mut().pop_due(target_ms);
            match due {
                Some((_, event)) => {
                    self.handle_event(event);
                    self.drain_dispatch();
                }
                None => break,
            }
        }
        self.services.clock.borrow_mut().advance_to(target_ms);
        self.drain_dispatch();
    }

    /// Advance simulated time by `ms`.
    pub fn advance(&self, ms: u64) {
        let target = self.services.now_ms().saturating_add(ms);
        self.run_until(target);
    }

    /// Process everything already due without moving the clock.
    pub fn settle(&self) {
        self.run_until(self.services.now_ms());
    }

    // -- HTTP front door -----------------------------------------------------

    /// Deliver an HTTP request to a platform service or an app, by service
    /// name, then settle the fallout.
    pub fn http(&self, service: &str, req: &RestRequest) -> RestResponse {
        let resp = match service {
            SUBMGR_HTTP => self
                .services
                .submgr
                .borrow_mut()
                .handle_rest(req, &self.services),
            crate::a1::A1_HTTP => self
                .services
                .a1
                .borrow_mut()
                .handle_rest(req, &self.services),
            crate::appmgr::APPMGR_HTTP => self
                .appmgr
                .borrow_mut()
                .handle_rest(req, &self.services),
            other => match self
                .appmgr
                .borrow_mut()
                .app_rest(&self.services, other, req)
            {
                Some(r) => r,
                None => RestResponse::json(
                    404,
                    &json!({"error": format!("unknown service {other}")}),
                ),
            },
        };
        self.settle();
        resp
    }

    // -- lifecycle verbs -----------------------------------------------------

    pub fn onboard(
        &self,
        descriptor_text: &str,
        schema_text: Option<&str>,
    ) -> Result<crate::appmgr::ChartRecord, String> {
        self.appmgr
            .borrow_mut()
            .onboard(&self.services, descriptor_text, schema_text)
    }

    pub fn install(&self, name: &str, version: Option<&str>) -> Result<String, String> {
        self.install_with(name, version, None)
    }

    /// Install with the chart's default controls replaced before boot.
    pub fn install_with(
        &self,
        name: &str,
        version: Option<&str>,
        controls: Option<&Value>,
    ) -> Result<String, String> {
        let result = self
            .appmgr
            .borrow_mut()
            .install_with(&self.services, name, version, controls);
        self.settle();
        result
    }

    pub fn uninstall(&self, name: &str, strict: bool) -> Result<(), String> {
        let result = self
            .appmgr
            .borrow_mut()
            .uninstall(&self.services, name, strict);
        self.settle();
        result
    }

    pub fn upgrade(&self, name: &str, version: &str) -> Result<String, String> {
        let result = self
            .appmgr
            .borrow_mut()
            .upgrade(&self.services, name, version);
        self.settle();
        result
    }

    pub fn rollback(&self, name: &str, version: &str) -> Result<String, String> {
        let result = self
            .appmgr
            .borrow_mut()
            .rollback(&self.services, name, version);
        self.settle();
        result
    }

    pub fn config_set(&self, name: &str, controls: Value) -> Result<(), String> {
        let result = self
            .appmgr
            .borrow_mut()
            .config_update(&self.services, name, controls);
        self.settle();
        result
    }

    /// Send an RMR health probe; the reply (or timeout) is processed by the
    /// event loop.
    pub fn probe(&self, name: &str) -> Result<u64, String> {
        let result = self.appmgr.borrow_mut().probe_app(&self.services, name);
        self.settle();
        result
    }

    pub fn probe_result(&self, name: &str) -> Option<crate::appmgr::ProbeOutcome> {
        self.appmgr.borrow().probe_result(name).cloned()
    }

    // -- topology verbs ------------------------------------------------------

    pub fn attach_node(&self, config: NodeConfig) -> Result<String, String> {
        let result = self.e2.borrow_mut().attach(&self.services, config);
        self.settle();
        result
    }

    pub fn detach_node(&self, inventory_name: &str) -> bool {
        let result = self.e2.borrow_mut().detach(&self.services, inventory_name);
        self.settle();
        result
    }

    pub fn set_node_connected(&self, inventory_name: &str, connected: bool) -> bool {
        let r = self
            .e2
            .borrow_mut()
            .set_connected(&self.services, inventory_name, connected);
        self.settle();
        r
    }

    pub fn set_node_responsive(&self, inventory_name: &str, responsive: bool) -> bool {
        self.e2.borrow_mut().set_responsive(inventory_name, responsive)
    }

    // -- introspection -------------------------------------------------------

    pub fn xapps_json(&self) -> Value {
        self.appmgr.borrow().xapps_json()
    }

    pub fn nodes_json(&self) -> Value {
        self.e2.borrow().nodes_json()
    }

    pub fn subscriptions_json(&self) -> Value {
        self.services.submgr.borrow().records_json()
    }

    pub fn route_dump(&self) -> Value {
        self.services.bus.borrow().route_debug_dump()
    }

    pub fn platform_log(&self) -> Vec<LogEntry> {
        self.services.log.borrow().entries().to_vec()
    }

    pub fn app_log(&self, name: &str) -> Option<Vec<LogEntry>> {
        self.appmgr.borrow().app_log(name)
    }

    /// Apply a dynamic routing-table update (the live route-refresh path)
    /// and redistribute.
    pub fn apply_route_update(&self, text: &str) -> Result<Vec<String>, String> {
        let (update, report) =
            crate::route_table::RoutingTable::parse(text).map_err(|e| e.to_string())?;
        {
            let mut bus = self.services.bus.borrow_mut();
            bus.apply_dynamic_update(&update);
        }
        self.settle();
        Ok(report.warnings)
    }
}
