//! Subscription management: the REST front door apps use to subscribe to E2
//! node telemetry, and the E2-side state machine behind it.
//!
//! A REST subscription request is validated strictly (the canonical
//! camelCase key set; lookalike keys are called out by name), checked
//! against the R-NIB, and then *merged*: requests with the same managed
//! entity, RAN function, and canonical subscription details share one E2
//! subscription instance. Each subscriber keeps its own REST subscription
//! id and its own delivery route; the node sees a single armed action set.
//!
//! Setup and teardown toward the node run with a timeout/retry budget
//! (defaults: 2 s, 2 retries). Outcomes are reported asynchronously to each
//! subscriber's `/ric/v1/subscriptions/response` endpoint.

use crate::clock::TimerId;
use crate::e2::{self, EventTrigger, SubAction, SubDelete, SubSetup};
use crate::logging::Level;
use crate::messaging::{mtypes, Message};
use crate::rest::{match_path, Method, RestRequest, RestResponse};
use crate::ric::{Event, RicServices, SUBMGR_ENDPOINT};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// HTTP service name of the subscription manager.
pub const SUBMGR_HTTP: &str = "service-ricplt-submgr-http.ricplt";

/// Default per-attempt answer deadline for node-bound requests, ms.
pub const DEFAULT_E2_TIMEOUT_MS: u64 = 2000;

/// Default number of retries after the first attempt.
pub const DEFAULT_E2_RETRY_COUNT: u32 = 2;

/// Timeout marker carried in failure notifications.
pub const E2_TIMEOUT_TYPE: &str = "E2-Timeout";

/// Storage namespace for subscription records.
pub const SUBMGR_NAMESPACE: &str = "submgr";

/// Asynchronous subscription outcome, delivered to the subscribing app.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubscriptionNotification {
    pub subscription_id: String,
    pub instances: Vec<NotificationInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotificationInstance {
    pub xapp_event_instance_id: i64,
    pub e2_event_instance_id: i32,
    pub error_cause: Option<String>,
    pub error_source: Option<String>,
    pub timeout_type: Option<String>,
}

impl SubscriptionNotification {
    pub fn to_json(&self) -> Value {
        let instances: Vec<Value> = self
            .instances
            .iter()
            .map(|i| {
                let mut o = json!({
                    "XappEventInstanceId": i.xapp_event_instance_id,
                    "E2EventInstanceId": i.e2_event_instance_id,
                });
                if let Some(c) = &i.error_cause {
                    o["ErrorCause"] = json!(c);
                }
                if let Some(s) = &i.error_source {
                    o["ErrorSource"] = json!(s);
                }
                if let Some(t) = &i.timeout_type {
                    o["TimeoutType"] = json!(t);
                }
                o
            })
            .collect();
        json!({
            "SubscriptionId": self.subscription_id,
            "SubscriptionInstances": instances,
        })
    }

    pub fn from_json(v: &Value) -> Option<Self> {
        let subscription_id = v.get("SubscriptionId")?.as_str()?.to_string();
        let mut instances = Vec::new();
        for item in v.get("SubscriptionInstances")?.as_array()? {
            instances.push(NotificationInstance {
                xapp_event_instance_id: item.get("XappEventInstanceId")?.as_i64()?,
                e2_event_instance_id: item.get("E2EventInstanceId")?.as_i64()? as i32,
                error_cause: item
                    .get("ErrorCause")
                    .and_then(Value::as_str)
                    .map(str::to_string),
                error_source: item
                    .get("ErrorSource")
                    .and_then(Value::as_str)
                    .map(str::to_string),
                timeout_type: item
                    .get("TimeoutType")
                    .and_then(Value::as_str)
                    .map(str::to_string),
            });
        }
        Some(SubscriptionNotification {
            subscription_id,
            instances,
        })
    }
}

// ---------------------------------------------------------------------------
// Request parsing
// ---------------------------------------------------------------------------

/// One subscriber of an E2 subscription.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientRef {
    pub http: String,
    pub rmr: String,
}

#[derive(Debug, Clone)]
pub struct ParsedSubscription {
    pub client: ClientRef,
    pub meid: String,
    pub ran_function_id: u32,
    pub timeout_ms: u64,
    pub retry_limit: u32,
    pub xapp_event_instance_id: i64,
    pub trigger: EventTrigger,
    pub actions: Vec<SubAction>,
    /// The raw `SubscriptionDetails` value, kept for canonical hashing.
    pub details_raw: Value,
}

fn lookalike(expected: &str, found: &str) -> bool {
    let norm = |s: &str| s.replace('_', "").to_ascii_lowercase();
    found != expected && norm(found) == norm(expected)
}

fn require<'v>(obj: &'v Map<String, Value>, key: &str) -> Result<&'v Value, String> {
    if let Some(v) = obj.get(key) {
        return Ok(v);
    }
    for k in obj.keys() {
        if lookalike(key, k) {
            return Err(format!(
                "unknown key {k:?}: the canonical key is {key:?} (keys are case-sensitive)"
            ));
        }
    }
    Err(format!("missing required key {key:?}"))
}

fn as_object<'v>(v: &'v Value, what: &str) -> Result<&'v Map<String, Value>, String> {
    v.as_object().ok_or_else(|| format!("{what} must be an object"))
}

fn as_u64(v: &Value, what: &str) -> Result<u64, String> {
    v.as_u64().ok_or_else(|| format!("{what} must be a non-negative integer"))
}

fn as_i64(v: &Value, what: &str) -> Result<i64, String> {
    v.as_i64().ok_or_else(|| format!("{what} must be an integer"))
}

fn as_str<'v>(v: &'v Value, what: &str) -> Result<&'v str, String> {
    v.as_str().ok_or_else(|| format!("{what} must be a string"))
}

/// Derive the RMR endpoint of a client from its HTTP service name.
pub fn client_rmr_endpoint(http_host: &str) -> String {
    if http_host.contains("-http.") {
        http_host.replace("-http.", "-rmr.")
    } else {
        http_host.to_string()
    }
}

/// Strictly parse a subscription request body.
pub fn parse_subscription_body(body: &Value) -> Result<ParsedSubscription, String> {
    let root = as_object(body, "request body")?;

    let client_v = as_object(require(root, "ClientEndpoint")?, "ClientEndpoint")?;
    let host = as_str(require(client_v, "Host")?, "ClientEndpoint.Host")?.to_string();
    as_u64(require(client_v, "HTTPPort")?, "ClientEndpoint.HTTPPort")?;
    as_u64(require(client_v, "RMRPort")?, "ClientEndpoint.RMRPort")?;

    let meid = as_str(require(root, "Meid")?, "Meid")?.to_string();
    let ran_function_id = as_u64(require(root, "RANFunctionID")?, "RANFunctionID")? as u32;

    let (mut timeout_ms, mut retry_limit) = (DEFAULT_E2_TIMEOUT_MS, DEFAULT_E2_RETRY_COUNT);
    if let Some(directives) = root.get("E2SubscriptionDirectives") {
        let d = as_object(directives, "E2SubscriptionDirectives")?;
        if let Some(t) = d.get("E2TimeoutTimerValue") {
            timeout_ms = as_u64(t, "E2TimeoutTimerValue")?.saturating_mul(1000);
        }
        if let Some(r) = d.get("E2RetryCount") {
            retry_limit = as_u64(r, "E2RetryCount")? as u32;
        }
    }

    let details_raw = require(root, "SubscriptionDetails")?.clone();
    let details = details_raw
        .as_array()
        .ok_or("SubscriptionDetails must be an array")?;
    if details.is_empty() {
        return Err("SubscriptionDetails must not be empty".to_string());
    }
    if details.len() > 1 {
        return Err("multiple SubscriptionDetails items are not supported".to_string());
    }
    let item = as_object(&details[0], "SubscriptionDetails[0]")?;

    let xapp_event_instance_id = as_i64(
        require(item, "XappEventInstanceId")?,
        "XappEventInstanceId",
    )?;

    let triggers = as_object(require(item, "EventTriggers")?, "EventTriggers")?;
    let reporting_period = as_u64(require(triggers, "reportingPeriod")?, "reportingPeriod")?;
    let trigger = EventTrigger::periodic(reporting_period);

    let action_list = require(item, "ActionToBeSetupList")?
        .as_array()
        .ok_or("ActionToBeSetupList must be an array")?;
    if action_list.is_empty() {
        return Err("ActionToBeSetupList must not be empty".to_string());
    }
    let mut actions = Vec::with_capacity(action_list.len());
    for (i, av) in action_list.iter().enumerate() {
        let a = as_object(av, "ActionToBeSetupList entry")?;
        let action_id = as_i64(require(a, "ActionID")?, "ActionID")?;
        let type_str = as_str(require(a, "ActionType")?, "ActionType")?;
        let action_type = e2::ActionType::from_str_loose(type_str)
            .ok_or_else(|| format!("unknown ActionType {type_str:?}"))?;
        let def = as_object(require(a, "ActionDefinition")?, "ActionDefinition")?;
        let granul_period_ms = as_u64(require(def, "granulPeriod")?, "granulPeriod")?;
        let ric_style_type = as_i64(require(def, "ricStyleType")?, "ricStyleType")?;
        let mi_list = require(def, "measInfoList")?
            .as_array()
            .ok_or("measInfoList must be an array")?;
        let mut meas_info_list = Vec::with_capacity(mi_list.len());
        for mi in mi_list {
            let m = as_object(mi, "measInfoList entry")?;
            let meas_name = as_str(require(m, "measName")?, "measName")?.to_string();
            let labels = m
                .get("labels")
                .and_then(Value::as_array)
                .map(|ls| {
                    ls.iter()
                        .filter_map(Value::as_str)
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            meas_info_list.push(e2::MeasInfo { meas_name, labels });
        }
        let subsequent = match a.get("SubsequentAction") {
            None => None,
            Some(sv) => {
                let s = as_object(sv, "SubsequentAction")?;
                Some(e2::SubsequentAction {
                    subsequent_action_type: as_str(
                        require(s, "SubsequentActionType")?,
                        "SubsequentActionType",
                    )?
                    .to_string(),
                    time_to_wait: as_str(require(s, "TimeToWait")?, "TimeToWait")?.to_string(),
                })
            }
        };
        if actions.iter().any(|x: &SubAction| x.action_id == action_id) {
            return Err(format!("duplicate ActionID {action_id} at index {i}"));
        }
        actions.push(SubAction {
            action_id,
            action_type,
            definition: e2::ActionDefinition {
                format: 1,
                meas_info_list,
                granul_period_ms,
                ric_style_type,
            },
            subsequent,
        });
    }

    Ok(ParsedSubscription {
        client: ClientRef {
            rmr: client_rmr_endpoint(&host),
            http: host,
        },
        meid,
        ran_function_id,
        timeout_ms,
        retry_limit,
        xapp_event_instance_id,
        trigger,
        actions,
        details_raw,
    })
}

/// Canonical content hash of a subscription: managed entity, RAN function,
/// and the details document with keys in canonical order.
pub fn details_hash(meid: &str, ran_function_id: u32, details_raw: &Value) -> String {
    let canonical = serde_json::to_string(details_raw).unwrap_or_default();
    let digest = Sha256::digest(format!("{meid}|{ran_function_id}|{canonical}").as_bytes());
    hex::encode(&digest[..16])
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubState {
    PendingSetup { attempts: u32, timer: TimerId },
    Active,
    Deleting { attempts: u32, timer: TimerId },
}

impl SubState {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubState::PendingSetup { .. } => "pending",
            SubState::Active => "active",
            SubState::Deleting { .. } => "deleting",
        }
    }
}

/// One E2 subscription instance (possibly shared by several subscribers).
#[derive(Debug, Clone)]
pub struct E2Sub {
    pub subid: i32,
    pub meid: String,
    pub ran_function_id: u32,
    pub details_hash: String,
    pub details_raw: Value,
    pub trigger: EventTrigger,
    pub actions: Vec<SubAction>,
    pub xapp_event_instance_id: i64,
    pub timeout_ms: u64,
    pub retry_limit: u32,
    pub state: SubState,
    pub clients: Vec<ClientRef>,
}

/// One REST-level subscription held by one subscriber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestSub {
    pub rest_id: String,
    pub subid: i32,
    pub client: ClientRef,
}

/// The subscription manager.
#[derive(Debug, Default)]
pub struct SubscriptionManager {
    next_subid: i32,
    next_rest_seq: u64,
    pub e2subs: BTreeMap<i32, E2Sub>,
    pub restsubs: BTreeMap<String, RestSub>,
    pending_notifications: Vec<(String, SubscriptionNotification)>,
}

impl SubscriptionManager {
    pub fn new() -> Self {
        SubscriptionManager {
            next_subid: 1,
            next_rest_seq: 1,
            e2subs: BTreeMap::new(),
            restsubs: BTreeMap::new(),
            pending_notifications: Vec::new(),
        }
    }

    fn fresh_rest_id(&mut self) -> String {
        let id = format!("{:016x}", self.next_rest_seq);
        self.next_rest_seq += 1;
        id
    }

    /// Notifications queued for delivery; the composition root drains these
    /// after every borrow of the manager ends.
    pub fn take_pending_notifications(&mut self) -> Vec<(String, SubscriptionNotification)> {
        std::mem::take(&mut self.pending_notifications)
    }

    // -- persistence --------------------------------------------------------

    fn persist_e2(&self, services: &RicServices, sub: &E2Sub) {
        let record = json!({
            "subid": sub.subid,
            "meid": sub.meid,
            "ran_function_id": sub.ran_function_id,
            "details_hash": sub.details_hash,
            "details_raw": sub.details_raw,
            "xapp_event_instance_id": sub.xapp_event_instance_id,
            "timeout_ms": sub.timeout_ms,
            "retry_limit": sub.retry_limit,
            "state": sub.state.as_str(),
            "clients": sub.clients.iter().map(|c| json!({"http": c.http, "rmr": c.rmr})).collect::<Vec<_>>(),
        });
        let _ = services.sdl.set_json(
            SUBMGR_NAMESPACE,
            &format!("e2:{:010}", sub.subid),
            &record,
        );
    }

    fn persist_rest(&self, services: &RicServices, sub: &RestSub) {
        let record = json!({
            "rest_id": sub.rest_id,
            "subid": sub.subid,
            "client_http": sub.client.http,
            "client_rmr": sub.client.rmr,
        });
        let _ = services.sdl.set_json(
            SUBMGR_NAMESPACE,
            &format!("rest:{}", sub.rest_id),
            &record,
        );
    }

    fn unpersist(&self, services: &RicServices, key: &str) {
        let _ = services.sdl.delete(SUBMGR_NAMESPACE, key);
    }

    /// Rebuild records from storage. Only subscriptions that were active
    /// survive a restart; in-flight setups and deletions are dropped.
    /// Returns the restored E2 subscriptions so the composition root can
    /// re-create routes and node state.
    pub fn restore_from_storage(&mut self, services: &RicServices) -> Vec<E2Sub> {
        let mut restored = Vec::new();
        for (key, bytes) in services.sdl.find_and_get(SUBMGR_NAMESPACE, "e2:") {
            let Ok(v) = serde_json::from_slice::<Value>(&bytes) else {
                continue;
            };
            if v["state"].as_str() != Some("active") {
                let _ = services.sdl.delete(SUBMGR_NAMESPACE, &key);
                continue;
            }
            let details_raw = v["details_raw"].clone();
            let Ok(body) = serde_json::from_value::<Value>(json!({
                "SubscriptionId": "",
                "ClientEndpoint": {"Host": "restore", "HTTPPort": 8080, "RMRPort": 4560},
                "Meid": v["meid"],
                "RANFunctionID": v["ran_function_id"],
                "SubscriptionDetails": details_raw,
            })) else {
                continue;
            };
            let Ok(parsed) = parse_subscription_body(&body) else {
                continue;
            };
            let subid = v["subid"].as_i64().unwrap_or(0) as i32;
            let clients: Vec<ClientRef> = v["clients"]
                .as_array()
                .map(|cs| {
                    cs.iter()
                        .filter_map(|c| {
                            Some(ClientRef {
                                http: c["http"].as_str()?.to_string(),
                                rmr: c["rmr"].as_str()?.to_string(),
                            })
                        })
                        .collect()
                })
                .unwrap_or_default();
            let sub = E2Sub {
                subid,
                meid: v["meid"].as_str().unwrap_or_default().to_string(),
                ran_function_id: v["ran_function_id"].as_u64().unwrap_or(0) as u32,
                details_hash: v["details_hash"].as_str().unwrap_or_default().to_string(),
                details_raw: v["details_raw"].clone(),
                trigger: parsed.trigger,
                actions: parsed.actions,
                xapp_event_instance_id: v["xapp_event_instance_id"].as_i64().unwrap_or(1),
                timeout_ms: v["timeout_ms"].as_u64().unwrap_or(DEFAULT_E2_TIMEOUT_MS),
                retry_limit: v["retry_limit"].as_u64().unwrap_or(2) as u32,
                state: SubState::Active,
                clients,
            };
            self.next_subid = self.next_subid.max(subid + 1);
            self.e2subs.insert(subid, sub.clone());
            restored.push(sub);
        }
        for (_, bytes) in services.sdl.find_and_get(SUBMGR_NAMESPACE, "rest:") {
            let Ok(v) = serde_json::from_slice::<Value>(&bytes) else {
                continue;
            };
            let subid = v["subid"].as_i64().unwrap_or(0) as i32;
            if !self.e2subs.contains_key(&subid) {
                continue;
            }
            let rest_id = v["rest_id"].as_str().unwrap_or_default().to_string();
            if let Ok(seq) = u64::from_str_radix(&rest_id, 16) {
                self.next_rest_seq = self.next_rest_seq.max(seq + 1);
            }
            self.restsubs.insert(
                rest_id.clone(),
                RestSub {
                    rest_id,
                    subid,
                    client: ClientRef {
                        http: v["client_http"].as_str().unwrap_or_default().to_string(),
                        rmr: v["client_rmr"].as_str().unwrap_or_default().to_string(),
                    },
                },
            );
        }
        restored
    }

    // -- REST interface ------------------------------------------------------

    pub fn handle_rest(&mut self, req: &RestRequest, services: &RicServices) -> RestResponse {
        if req.method == Method::Post && match_path("/ric/v1/subscriptions", &req.path).is_some() {
            return self.rest_create(req, services);
        }
        if req.method == Method::Delete {
            if let Some(params) = match_path("/ric/v1/subscriptions/<id>", &req.path) {
                return self.rest_delete(&params[0], services);
            }
        }
        if req.method == Method::Get && match_path("/ric/v1/subscriptions", &req.path).is_some() {
            return RestResponse::json(200, &self.list_json(None));
        }
        if req.method == Method::Get {
            if let Some(params) =
                match_path("/ric/v1/get_xapp_rest_restsubscriptions/<xapp>", &req.path)
            {
                return RestResponse::json(200, &self.list_json(Some(&params[0])));
            }
        }
        RestResponse::json(404, &json!({"error": "no such route"}))
    }

    fn list_json(&self, client_http: Option<&str>) -> Value {
        let items: Vec<Value> = self
            .restsubs
            .values()
            .filter(|r| client_http.map_or(true, |c| r.client.http == c))
            .map(|r| {
                let e2 = self.e2subs.get(&r.subid);
                json!({
                    "SubscriptionId": r.rest_id,
                    "ClientEndpoint": r.client.http,
                    "Meid": e2.map(|s| s.meid.clone()).unwrap_or_default(),
                    "RANFunctionID": e2.map(|s| s.ran_function_id).unwrap_or_default(),
                    "E2InstanceId": r.subid,
                    "State": e2.map(|s| s.state.as_str()).unwrap_or("gone"),
                })
            })
            .collect();
        json!(items)
    }

    fn rest_create(&mut self, req: &RestRequest, services: &RicServices) -> RestResponse {
        let body = match req.json() {
            Ok(b) => b,
            Err(e) => {
                return RestResponse::json(400, &json!({"error": format!("malformed JSON: {e}")}))
            }
        };
        let parsed = match parse_subscription_body(&body) {
            Ok(p) => p,
            Err(e) => return RestResponse::json(400, &json!({"error": e})),
        };

        // The subscription must target a known node and function.
        let Some(node) = services.rnib.get_nodeb(&parsed.meid) else {
            return RestResponse::json(
                404,
                &json!({"error": format!("unknown Meid {:?}", parsed.meid)}),
            );
        };
        if !node
            .ran_functions
            .iter()
            .any(|f| f.ran_function_id == parsed.ran_function_id)
        {
            return RestResponse::json(
                404,
                &json!({"error": format!(
                    "node {:?} exposes no RANFunctionID {}",
                    parsed.meid, parsed.ran_function_id
                )}),
            );
        }

        let hash = details_hash(&parsed.meid, parsed.ran_function_id, &parsed.details_raw);
        let existing = self
            .e2subs
            .values()
            .find(|s| s.details_hash == hash && !matches!(s.state, SubState::Deleting { .. }))
            .map(|s| s.subid);

        let rest_id = self.fresh_rest_id();
        match existing {
            Some(subid) => {
                // Merge: join the existing E2 subscription.
                let sub = self.e2subs.get_mut(&subid).expect("looked up above");
                if !sub.clients.iter().any(|c| c.rmr == parsed.client.rmr) {
                    sub.clients.push(parsed.client.clone());
                    let mut bus = services.bus.borrow_mut();
                    bus.master_table_mut().add_subscription_entries(
                        &[mtypes::RIC_INDICATION],
                        subid,
                        &parsed.client.rmr,
                    );
                    bus.distribute();
                }
                let active = matches!(sub.state, SubState::Active);
                let xid = sub.xapp_event_instance_id;
                let sub_snapshot = sub.clone();
                let rest = RestSub {
                    rest_id: rest_id.clone(),
                    subid,
                    client: parsed.client.clone(),
                };
                self.restsubs.insert(rest_id.clone(), rest.clone());
                self.persist_rest(services, &rest);
                self.persist_e2(services, &sub_snapshot);
                services.log_info(format!(
                    "subscription request merged into E2 instance {subid} (id {rest_id})"
                ));
                if active {
                    self.pending_notifications.push((
                        parsed.client.http.clone(),
                        SubscriptionNotification {
                            subscription_id: rest_id.clone(),
                            instances: vec![NotificationInstance {
                                xapp_event_instance_id: xid,
                                e2_event_instance_id: subid,
                                error_cause: None,
                                error_source: None,
                                timeout_type: None,
                            }],
                        },
                    ));
                }
            }
            None => {
                let subid = self.next_subid;
                self.next_subid += 1;

                // Routes go in before any message leaves: node-bound traffic
                // by ownership, indications to the subscriber.
                {
                    let mut bus = services.bus.borrow_mut();
                    let table = bus.master_table_mut();
                    table.add_meid_entry(mtypes::RIC_SUB_REQ, subid);
                    table.add_meid_entry(mtypes::RIC_SUB_DEL_REQ, subid);
                    table.add_subscription_entries(
                        &[mtypes::RIC_INDICATION],
                        subid,
                        &parsed.client.rmr,
                    );
                    bus.distribute();
                }

                let mut sub = E2Sub {
                    subid,
                    meid: parsed.meid.clone(),
                    ran_function_id: parsed.ran_function_id,
                    details_hash: hash,
                    details_raw: parsed.details_raw.clone(),
                    trigger: parsed.trigger.clone(),
                    actions: parsed.actions.clone(),
                    xapp_event_instance_id: parsed.xapp_event_instance_id,
                    timeout_ms: parsed.timeout_ms,
                    retry_limit: parsed.retry_limit,
                    state: SubState::Active, // overwritten below
                    clients: vec![parsed.client.clone()],
                };
                let timer = self.send_setup(&sub, services);
                sub.state = SubState::PendingSetup { attempts: 1, timer };
                let rest = RestSub {
                    rest_id: rest_id.clone(),
                    subid,
                    client: parsed.client.clone(),
                };
                self.persist_e2(services, &sub);
                self.persist_rest(services, &rest);
                self.e2subs.insert(subid, sub);
                self.restsubs.insert(rest_id.clone(), rest);
                services.log_info(format!(
                    "subscription {rest_id} created: E2 instance {subid} toward {}",
                    parsed.meid
                ));
            }
        }

        RestResponse::json(201, &json!({"SubscriptionId": rest_id}))
    }

    fn rest_delete(&mut self, rest_id: &str, services: &RicServices) -> RestResponse {
        let Some(rest) = self.restsubs.remove(rest_id) else {
            return RestResponse::json(404, &json!({"error": format!("unknown subscription id {rest_id:?}")}));
        };
        self.unpersist(services, &format!("rest:{rest_id}"));

        let subid = rest.subid;
        let client_still_used = self
            .restsubs
            .values()
            .any(|r| r.subid == subid && r.client.rmr == rest.client.rmr);
        let remaining = self.restsubs.values().any(|r| r.subid == subid);

        if let Some(sub) = self.e2subs.get_mut(&subid) {
            if !client_still_used {
                sub.clients.retain(|c| c.rmr != rest.client.rmr);
                let mut bus = services.bus.borrow_mut();
                bus.master_table_mut()
                    .remove_subid(subid, Some(&rest.client.rmr));
                bus.distribute();
            }
            if !remaining {
                // Last subscriber gone: tear the E2 subscription down.
                if let SubState::PendingSetup { timer, .. } = sub.state {
                    services.clock.borrow_mut().cancel(timer);
                }
                let sub_clone = sub.clone();
                let timer = self.send_delete(&sub_clone, services);
                let sub = self.e2subs.get_mut(&subid).expect("still present");
                sub.state = SubState::Deleting { attempts: 1, timer };
                let snapshot = sub.clone();
                self.persist_e2(services, &snapshot);
            } else {
                let snapshot = sub.clone();
                self.persist_e2(services, &snapshot);
            }
        }
        services.log_info(format!("subscription {rest_id} deleted"));
        RestResponse::empty(204)
    }

    // -- node-bound messaging ------------------------------------------------

    fn send_setup(&self, sub: &E2Sub, services: &RicServices) -> TimerId {
        let setup = SubSetup {
            subid: sub.subid,
            ran_function_id: sub.ran_function_id,
            trigger: sub.trigger.clone(),
            actions: sub.actions.clone(),
        };
        let msg = Message::new(mtypes::RIC_SUB_REQ, setup.encode())
            .with_subid(sub.subid)
            .with_meid(&sub.meid);
        let now = services.now_ms();
        let receipt = services.bus.borrow_mut().send(now, SUBMGR_ENDPOINT, msg);
        if !receipt.ok() {
            services.log_at(
                Level::Error,
                format!(
                    "subscription setup for E2 instance {} undeliverable: {}",
                    sub.subid,
                    receipt.error.as_deref().unwrap_or("unknown")
                ),
            );
        }
        services.clock.borrow_mut().schedule_in(
            sub.timeout_ms,
            Event::SubscriptionTimeout { subid: sub.subid },
        )
    }

    fn send_delete(&self, sub: &E2Sub, services: &RicServices) -> TimerId {
        let msg = Message::new(
            mtypes::RIC_SUB_DEL_REQ,
            SubDelete { subid: sub.subid }.encode(),
        )
        .with_subid(sub.subid)
        .with_meid(&sub.meid);
        let now = services.now_ms();
        let _ = services.bus.borrow_mut().send(now, SUBMGR_ENDPOINT, msg);
        services
            .clock
            .borrow_mut()
            .schedule_in(sub.timeout_ms, Event::DeleteTimeout { subid: sub.subid })
    }

    fn notify_all(&mut self, subid: i32, build: impl Fn(&RestSub, &E2Sub) -> NotificationInstance) {
        let Some(sub) = self.e2subs.get(&subid) else {
            return;
        };
        let targets: Vec<(String, SubscriptionNotification)> = self
            .restsubs
            .values()
            .filter(|r| r.subid == subid)
            .map(|r| {
                (
                    r.client.http.clone(),
                    SubscriptionNotification {
                        subscription_id: r.rest_id.clone(),
                        instances: vec![build(r, sub)],
                    },
                )
            })
            .collect();
        self.pending_notifications.extend(targets);
    }

    /// Purge every trace of an E2 subscription: routes, records, storage.
    fn purge(&mut self, subid: i32, services: &RicServices) {
        {
            let mut bus = services.bus.borrow_mut();
            bus.master_table_mut().remove_subid(subid, None);
            bus.distribute();
        }
        self.e2subs.remove(&subid);
        let gone: Vec<String> = self
            .restsubs
            .values()
            .filter(|r| r.subid == subid)
            .map(|r| r.rest_id.clone())
            .collect();
        for id in gone {
            self.restsubs.remove(&id);
            self.unpersist(services, &format!("rest:{id}"));
        }
        self.unpersist(services, &format!("e2:{subid:010}"));
    }

    /// RMR traffic addressed to the subscription manager.
    pub fn handle_message(&mut self, msg: &Message, services: &RicServices) {
        match msg.mtype {
            mtypes::RIC_SUB_RESP => {
                let Ok(result) = e2::SubSetupResult::decode(&msg.payload) else {
                    services.log_at(Level::Error, "undecodable subscription response".to_string());
                    return;
                };
                let Some(sub) = self.e2subs.get_mut(&result.subid) else {
                    return;
                };
                let SubState::PendingSetup { timer, .. } = sub.state else {
                    return;
                };
                services.clock.borrow_mut().cancel(timer);
                if result.accepted.is_empty() {
                    services.log_at(
                        Level::Error,
                        format!("node rejected every action of E2 instance {}", result.subid),
                    );
                    self.notify_all(result.subid, |_, s| NotificationInstance {
                        xapp_event_instance_id: s.xapp_event_instance_id,
                        e2_event_instance_id: s.subid,
                        error_cause: Some("node rejected all requested actions".to_string()),
                        error_source: Some("E2Node".to_string()),
                        timeout_type: None,
                    });
                    self.purge(result.subid, services);
                    return;
                }
                sub.state = SubState::Active;
                let snapshot = sub.clone();
                self.persist_e2(services, &snapshot);
                services.log_info(format!("E2 instance {} active", result.subid));
                self.notify_all(result.subid, |_, s| NotificationInstance {
                    xapp_event_instance_id: s.xapp_event_instance_id,
                    e2_event_instance_id: s.subid,
                    error_cause: None,
                    error_source: None,
                    timeout_type: None,
                });
            }
            mtypes::RIC_SUB_DEL_RESP => {
                let Ok(result) = e2::SubDeleteResult::decode(&msg.payload) else {
                    return;
                };
                let Some(sub) = self.e2subs.get(&result.subid) else {
                    return;
                };
                if let SubState::Deleting { timer, .. } = sub.state {
                    services.clock.borrow_mut().cancel(timer);
                    self.purge(result.subid, services);
                    services.log_info(format!("E2 instance {} torn down", result.subid));
                }
            }
            other => {
                services.log_at(
                    Level::Warning,
                    format!("subscription manager ignoring message type {other}"),
                );
            }
        }
    }

    // -- timeouts ------------------------------------------------------------

    pub fn on_setup_timeout(&mut self, subid: i32, services: &RicServices) {
        let Some(sub) = self.e2subs.get_mut(&subid) else {
            return;
        };
        let SubState::PendingSetup { attempts, .. } = sub.state else {
            return;
        };
        if attempts <= sub.retry_limit {
            let sub_clone = sub.clone();
            services.log_at(
                Level::Warning,
                format!(
                    "E2 instance {subid}: no answer, retry {} of {}",
                    attempts, sub_clone.retry_limit
                ),
            );
            let timer = self.send_setup(&sub_clone, services);
            let sub = self.e2subs.get_mut(&subid).expect("still present");
            sub.state = SubState::PendingSetup {
                attempts: attempts + 1,
                timer,
            };
            return;
        }
        services.log_at(
            Level::Error,
            format!("E2 instance {subid}: setup timed out after {attempts} attempts"),
        );
        self.notify_all(subid, |_, s| NotificationInstance {
            xapp_event_instance_id: s.xapp_event_instance_id,
            e2_event_instance_id: s.subid,
            error_cause: Some("subscription setup timed out".to_string()),
            error_source: Some("E2Term".to_string()),
            timeout_type: Some(E2_TIMEOUT_TYPE.to_string()),
        });
        self.purge(subid, services);
    }

    pub fn on_delete_timeout(&mut self, subid: i32, services: &RicServices) {
        let Some(sub) = self.e2subs.get_mut(&subid) else {
            return;
        };
        let SubState::Deleting { attempts, .. } = sub.state else {
            return;
        };
        if attempts <= sub.retry_limit {
            let sub_clone = sub.clone();
            let timer = self.send_delete(&sub_clone, services);
            let sub = self.e2subs.get_mut(&subid).expect("still present");
            sub.state = SubState::Deleting {
                attempts: attempts + 1,
                timer,
            };
            return;
        }
        services.log_at(
            Level::Error,
            format!("E2 instance {subid}: teardown unanswered, purging locally"),
        );
        self.purge(subid, services);
    }

    // -- introspection -------------------------------------------------------

    pub fn subid_of(&self, rest_id: &str) -> Option<i32> {
        self.restsubs.get(rest_id).map(|r| r.subid)
    }

    pub fn records_json(&self) -> Value {
        self.list_json(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e2::DEFAULT_MEAS_NAME;

    fn good_body() -> Value {
        json!({
            "SubscriptionId": "",
            "ClientEndpoint": {"Host": "service-ricxapp-kpm-http.ricxapp", "HTTPPort": 8080, "RMRPort": 4560},
            "Meid": "gnb_734_733_aabbccdd",
            "RANFunctionID": 200,
            "SubscriptionDetails": [
                {
                    "XappEventInstanceId": 12345,
                    "EventTriggers": {"reportingPeriod": 1000},
                    "ActionToBeSetupList": [
                        {
                            "ActionID": 1,
                            "ActionType": "report",
                            "ActionDefinition": {
                                "measInfoList": [{"measName": DEFAULT_MEAS_NAME, "labels": ["noLabel"]}],
                                "granulPeriod": 1000,
                                "ricStyleType": 1
                            },
                            "SubsequentAction": {"SubsequentActionType": "continue", "TimeToWait": "w10ms"}
                        }
                    ]
                }
            ]
        })
    }

    #[test]
    fn canonical_body_parses() {
        let p = parse_subscription_body(&good_body()).unwrap();
        assert_eq!(p.meid, "gnb_734_733_aabbccdd");
        assert_eq!(p.ran_function_id, 200);
        assert_eq!(p.client.http, "service-ricxapp-kpm-http.ricxapp");
        assert_eq!(p.client.rmr, "service-ricxapp-kpm-rmr.ricxapp");
        assert_eq!(p.trigger.reporting_period_ms, 1000);
        assert_eq!(p.timeout_ms, DEFAULT_E2_TIMEOUT_MS);
        assert_eq!(p.retry_limit, DEFAULT_E2_RETRY_COUNT);
        assert_eq!(p.actions.len(), 1);
        assert_eq!(p.actions[0].definition.meas_info_list[0].meas_name, DEFAULT_MEAS_NAME);
        assert_eq!(p.xapp_event_instance_id, 12345);
    }

    #[test]
    fn snake_case_keys_are_rejected_by_name() {
        let mut body = good_body();
        let meid = body["Meid"].clone();
        body.as_object_mut().unwrap().remove("Meid");
        body["meid"] = meid;
        let err = parse_subscription_body(&body).unwrap_err();
        assert!(err.contains("\"meid\""), "message names the offender: {err}");
        assert!(err.contains("\"Meid\""), "and the canonical key: {err}");

        let mut body = good_body();
        let rf = body["RANFunctionID"].clone();
        body.as_object_mut().unwrap().remove("RANFunctionID");
        body["ran_function_id"] = rf;
        let err = parse_subscription_body(&body).unwrap_err();
        assert!(err.contains("\"ran_function_id\""));
        assert!(err.contains("case-sensitive"));
    }

    #[test]
    fn missing_keys_are_reported() {
        let mut body = good_body();
        body.as_object_mut().unwrap().remove("ClientEndpoint");
        let err = parse_subscription_body(&body).unwrap_err();
        assert!(err.contains("missing required key \"ClientEndpoint\""));

        let mut body = good_body();
        body["SubscriptionDetails"][0]
            .as_object_mut()
            .unwrap()
            .remove("EventTriggers");
        let err = parse_subscription_body(&body).unwrap_err();
        assert!(err.contains("EventTriggers"));
    }

    #[test]
    fn directives_override_defaults() {
        let mut body = good_body();
        body["E2SubscriptionDirectives"] =
            json!({"E2TimeoutTimerValue": 5, "E2RetryCount": 1, "RMRRoutingNeeded": true});
        let p = parse_subscription_body(&body).unwrap();
        assert_eq!(p.timeout_ms, 5000);
        assert_eq!(p.retry_limit, 1);
    }

    #[test]
    fn duplicate_action_ids_are_rejected() {
        let mut body = good_body();
        let action = body["SubscriptionDetails"][0]["ActionToBeSetupList"][0].clone();
        body["SubscriptionDetails"][0]["ActionToBeSetupList"]
            .as_array_mut()
            .unwrap()
            .push(action);
        let err = parse_subscription_body(&body).unwrap_err();
        assert!(err.contains("duplicate ActionID"));
    }

    #[test]
    fn multiple_details_items_are_rejected() {
        let mut body = good_body();
        let item = body["SubscriptionDetails"][0].clone();
        body["SubscriptionDetails"].as_array_mut().unwrap().push(item);
        let err = parse_subscription_body(&body).unwrap_err();
        assert!(err.contains("multiple SubscriptionDetails"));
    }

    #[test]
    fn details_hash_ignores_key_order_but_not_content() {
        let a = good_body();
        // Same content, different textual order: serde maps are canonical,
        // so the parsed values hash identically.
        let reordered: Value = serde_json::from_str(
            &serde_json::to_string(&a["SubscriptionDetails"]).unwrap(),
        )
        .unwrap();
        let h1 = details_hash("m", 200, &a["SubscriptionDetails"]);
        let h2 = details_hash("m", 200, &reordered);
        assert_eq!(h1, h2);

        let mut b = good_body();
        b["SubscriptionDetails"][0]["EventTriggers"]["reportingPeriod"] = json!(2000);
        assert_ne!(
            details_hash("m", 200, &a["SubscriptionDetails"]),
            details_hash("m", 200, &b["SubscriptionDetails"])
        );
        assert_ne!(
            details_hash("m1", 200, &a["SubscriptionDetails"]),
            details_hash("m2", 200, &a["SubscriptionDetails"])
        );
    }

    #[test]
    fn notification_json_round_trips() {
        let n = SubscriptionNotification {
            subscription_id: "0000000000000001".to_string(),
            instances: vec![NotificationInstance {
                xapp_event_instance_id: 12345,
                e2_event_instance_id: 1,
                error_cause: None,
                error_source: None,
                timeout_type: None,
            }],
        };
        let v = n.to_json();
        assert_eq!(v["SubscriptionId"], "0000000000000001");
        assert_eq!(v["SubscriptionInstances"][0]["E2EventInstanceId"], 1);
        assert!(v["SubscriptionInstances"][0].get("ErrorCause").is_none());
        assert_eq!(SubscriptionNotification::from_json(&v).unwrap(), n);

        let failed = SubscriptionNotification {
            subscription_id: "x".to_string(),
            instances: vec![NotificationInstance {
                xapp_event_instance_id: 1,
                e2_event_instance_id: 7,
                error_cause: Some("subscription setup timed out".to_string()),
                error_source: Some("E2Term".to_string()),
                timeout_type: Some(E2_TIMEOUT_TYPE.to_string()),
            }],
        };
        let v = failed.to_json();
        assert_eq!(v["SubscriptionInstances"][0]["TimeoutType"], "E2-Timeout");
        assert_eq!(SubscriptionNotification::from_json(&v).unwrap(), failed);
    }
}
