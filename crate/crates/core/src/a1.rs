//! A1 policy mediation.
//!
//! Northbound, operators manage declarative policy over REST: policy *types*
//! (an id plus a JSON schema for instances) and policy *instances* (a JSON
//! document conforming to that schema). Southbound, the mediator distributes
//! instance operations to every app that declared the policy type at
//! registration time, as `A1_POLICY_REQ` messages whose subscription-id field
//! carries the policy type id. Each consumer sits in its own fanout group, so
//! one distribution send delivers exactly one copy per consumer.
//!
//! Consumers acknowledge with `A1_POLICY_RESP`; the mediator keeps a
//! per-instance ledger of acknowledgement status keyed by the consumer's
//! handler id. Updating an instance resets the ledger — an instance is in
//! effect only while every registered consumer has acknowledged its latest
//! revision. `A1_POLICY_QUERY` lets a late-starting consumer ask for the
//! current instances of a type; the mediator answers with one CREATE per
//! live instance, addressed straight back to the asker.

use crate::descriptor::{parse_schema, validate_value, ControlsSchema};
use crate::logging::Level;
use crate::messaging::{make_reply, mtypes, Message};
use crate::rest::{match_path, Method, RestRequest, RestResponse};
use crate::ric::{RicServices, A1_MEDIATOR_ENDPOINT};
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// HTTP service name of the A1 mediator.
pub const A1_HTTP: &str = "service-ricplt-a1mediator-http.ricplt";

/// Storage namespace for policy records.
pub const A1_NAMESPACE: &str = "a1";

/// Acknowledgement state of one consumer for one policy instance revision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckStatus {
    Pending,
    Ok,
    Error,
}

impl AckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AckStatus::Pending => "PENDING",
            AckStatus::Ok => "OK",
            AckStatus::Error => "ERROR",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        match s {
            "PENDING" => Some(AckStatus::Pending),
            "OK" => Some(AckStatus::Ok),
            "ERROR" => Some(AckStatus::Error),
            _ => None,
        }
    }
}

/// A registered policy type.
#[derive(Debug, Clone)]
pub struct PolicyType {
    pub policy_type_id: i64,
    pub name: String,
    pub description: String,
    pub create_schema: ControlsSchema,
    /// The schema exactly as submitted, for faithful GET responses.
    pub schema_raw: Value,
}

/// A live policy instance plus its acknowledgement ledger.
#[derive(Debug, Clone)]
pub struct PolicyInstance {
    pub policy_type_id: i64,
    pub policy_instance_id: String,
    pub payload: Value,
    /// handler id -> acknowledgement status for the latest revision.
    pub acks: BTreeMap<String, AckStatus>,
}

/// One app registered as a consumer of some policy types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Consumer {
    pub handler_id: String,
    pub endpoint: String,
    pub policy_types: Vec<i64>,
}

/// Render the southbound distribution payload for one instance operation.
pub fn instance_message_json(
    operation: &str,
    policy_type_id: i64,
    policy_instance_id: &str,
    payload: &Value,
) -> Value {
    json!({
        "operation": operation,
        "policy_type_id": policy_type_id,
        "policy_instance_id": policy_instance_id,
        "payload": payload,
    })
}

#[derive(Debug, Default)]
pub struct A1Mediator {
    types: BTreeMap<i64, PolicyType>,
    instances: BTreeMap<(i64, String), PolicyInstance>,
    /// Keyed by RMR endpoint name.
    consumers: BTreeMap<String, Consumer>,
}

impl A1Mediator {
    pub fn new() -> Self {
        Self::default()
    }

    // -- consumer registration ----------------------------------------------

    /// Register `endpoint` as a consumer of `policy_types`. Adds a dedicated
    /// fanout group per type for the policy distribution route, and replays
    /// every live instance of those types straight to the new consumer so it
    /// starts from the current policy state.
    pub fn register_consumer(
        &mut self,
        services: &RicServices,
        handler_id: &str,
        endpoint: &str,
        policy_types: &[i64],
    ) {
        if policy_types.is_empty() {
            return;
        }
        self.consumers.insert(
            endpoint.to_string(),
            Consumer {
                handler_id: handler_id.to_string(),
                endpoint: endpoint.to_string(),
                policy_types: policy_types.to_vec(),
            },
        );
        {
            let mut bus = services.bus.borrow_mut();
            for tid in policy_types {
                bus.master_table_mut().add_subscription_entries(
                    &[mtypes::A1_POLICY_REQ],
                    *tid as i32,
                    endpoint,
                );
            }
            bus.distribute();
        }
        let now = services.now_ms();
        let mut replayed = 0usize;
        for ((tid, iid), inst) in self.instances.iter_mut() {
            if !policy_types.contains(tid) {
                continue;
            }
            inst.acks
                .entry(handler_id.to_string())
                .or_insert(AckStatus::Pending);
            let mut msg = Message::new(
                mtypes::A1_POLICY_REQ,
                serde_json::to_vec(&instance_message_json("CREATE", *tid, iid, &inst.payload))
                    .expect("payload serializes"),
            )
            .with_subid(*tid as i32);
            msg.direct_dest = Some(endpoint.to_string());
            let _ = services.bus.borrow_mut().send(now, A1_MEDIATOR_ENDPOINT, msg);
            replayed += 1;
        }
        let snapshot: Vec<PolicyInstance> = self
            .instances
            .values()
            .filter(|i| policy_types.contains(&i.policy_type_id))
            .cloned()
            .collect();
        for inst in &snapshot {
            self.persist_instance(services, inst);
        }
        services.log_info(format!(
            "policy consumer {handler_id} registered for types {policy_types:?} ({replayed} instances replayed)"
        ));
    }

    /// Forget a consumer. Its ledger entries disappear with it; delivery
    /// routes are purged separately when the endpoint deregisters from the
    /// bus.
    pub fn deregister_consumer(&mut self, services: &RicServices, endpoint: &str) {
        let Some(consumer) = self.consumers.remove(endpoint) else {
            return;
        };
        let mut touched = Vec::new();
        for inst in self.instances.values_mut() {
            if inst.acks.remove(&consumer.handler_id).is_some() {
                touched.push(inst.clone());
            }
        }
        for inst in &touched {
            self.persist_instance(services, inst);
        }
        services.log_info(format!("policy consumer {} deregistered", consumer.handler_id));
    }

    pub fn consumers(&self) -> Vec<&Consumer> {
        self.consumers.values().collect()
    }

    // -- type management -----------------------------------------------------

    pub fn create_type(
        &mut self,
        services: &RicServices,
        policy_type_id: i64,
        body: &Value,
    ) -> Result<(), String> {
        if let Some(in_body) = body.get("policy_type_id").and_then(Value::as_i64) {
            if in_body != policy_type_id {
                return Err(format!(
                    "policy_type_id in body ({in_body}) disagrees with path ({policy_type_id})"
                ));
            }
        }
        if self
            .instances
            .keys()
            .any(|(tid, _)| *tid == policy_type_id)
        {
            return Err(format!(
                "policy type {policy_type_id} has live instances and cannot be replaced"
            ));
        }
        let name = body
            .get("name")
            .and_then(Value::as_str)
            .ok_or("missing required key \"name\"")?
            .to_string();
        let description = body
            .get("description")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let schema_raw = body
            .get("create_schema")
            .cloned()
            .ok_or("missing required key \"create_schema\"")?;
        let schema_text = serde_json::to_string(&schema_raw).map_err(|e| e.to_string())?;
        let create_schema =
            parse_schema(&schema_text).map_err(|e| format!("create_schema invalid: {e}"))?;
        let rec = PolicyType {
            policy_type_id,
            name,
            description,
            create_schema,
            schema_raw,
        };
        self.persist_type(services, &rec);
        self.types.insert(policy_type_id, rec);
        services.log_info(format!("policy type {policy_type_id} registered"));
        Ok(())
    }

    pub fn delete_type(&mut self, services: &RicServices, policy_type_id: i64) -> Result<(), String> {
        if !self.types.contains_key(&policy_type_id) {
            return Err(format!("unknown policy type {policy_type_id}"));
        }
        if self
            .instances
            .keys()
            .any(|(tid, _)| *tid == policy_type_id)
        {
            return Err(format!(
                "policy type {policy_type_id} has live instances and cannot be deleted"
            ));
        }
        self.types.remove(&policy_type_id);
        let _ = services
            .sdl
            .delete(A1_NAMESPACE, &format!("type:{policy_type_id:010}"));
        Ok(())
    }

    pub fn type_ids(&self) -> Vec<i64> {
        self.types.keys().copied().collect()
    }

    pub fn get_type(&self, policy_type_id: i64) -> Option<&PolicyType> {
        self.types.get(&policy_type_id)
    }

    // -- instance management -------------------------------------------------

    /// Create or update an instance. Returns true when this was a creation.
    /// Every consumer of the type goes back to `PENDING` in the ledger and a
    /// CREATE or UPDATE operation is distributed over the policy route.
    pub fn put_instance(
        &mut self,
        services: &RicServices,
        policy_type_id: i64,
        policy_instance_id: &str,
        payload: Value,
    ) -> Result<bool, String> {
        let ptype = self
            .types
            .get(&policy_type_id)
            .ok_or_else(|| format!("unknown policy type {policy_type_id}"))?;
        let violations = validate_value(&ptype.create_schema, &payload);
        if !violations.is_empty() {
            let detail: Vec<String> = violations
                .iter()
                .map(|v| format!("{}: {}", v.path, v.reason))
                .collect();
            return Err(format!("payload rejected by schema: {}", detail.join("; ")));
        }

        let key = (policy_type_id, policy_instance_id.to_string());
        let created = !self.instances.contains_key(&key);
        let operation = if created { "CREATE" } else { "UPDATE" };
        let acks: BTreeMap<String, AckStatus> = self
            .consumers
            .values()
            .filter(|c| c.policy_types.contains(&policy_type_id))
            .map(|c| (c.handler_id.clone(), AckStatus::Pending))
            .collect();
        let inst = PolicyInstance {
            policy_type_id,
            policy_instance_id: policy_instance_id.to_string(),
            payload: payload.clone(),
            acks,
        };
        self.persist_instance(services, &inst);
        self.instances.insert(key, inst);

        self.distribute_operation(services, operation, policy_type_id, policy_instance_id, &payload);
        services.log_info(format!(
            "policy instance {policy_instance_id:?} of type {policy_type_id}: {operation} distributed"
        ));
        Ok(created)
    }

    pub fn delete_instance(
        &mut self,
        services: &RicServices,
        policy_type_id: i64,
        policy_instance_id: &str,
    ) -> Result<(), String> {
        let key = (policy_type_id, policy_instance_id.to_string());
        let Some(inst) = self.instances.remove(&key) else {
            return Err(format!(
                "unknown policy instance {policy_instance_id:?} of type {policy_type_id}"
            ));
        };
        let _ = services.sdl.delete(
            A1_NAMESPACE,
            &format!("instance:{policy_type_id:010}:{policy_instance_id}"),
        );
        self.distribute_operation(
            services,
            "DELETE",
            policy_type_id,
            policy_instance_id,
            &inst.payload,
        );
        services.log_info(format!(
            "policy instance {policy_instance_id:?} of type {policy_type_id}: DELETE distributed"
        ));
        Ok(())
    }

    fn distribute_operation(
        &self,
        services: &RicServices,
        operation: &str,
        policy_type_id: i64,
        policy_instance_id: &str,
        payload: &Value,
    ) {
        let body = instance_message_json(operation, policy_type_id, policy_instance_id, payload);
        let msg = Message::new(
            mtypes::A1_POLICY_REQ,
            serde_json::to_vec(&body).expect("payload serializes"),
        )
        .with_subid(policy_type_id as i32);
        let now = services.now_ms();
        let receipt = services.bus.borrow_mut().send(now, A1_MEDIATOR_ENDPOINT, msg);
        if !receipt.ok() {
            services.log_at(
                Level::Warning,
                format!(
                    "policy type {policy_type_id} has no reachable consumers: {}",
                    receipt.error.as_deref().unwrap_or("delivery failed")
                ),
            );
        }
    }

    pub fn instance_ids(&self, policy_type_id: i64) -> Vec<String> {
        self.instances
            .keys()
            .filter(|(tid, _)| *tid == policy_type_id)
            .map(|(_, iid)| iid.clone())
            .collect()
    }

    pub fn get_instance(
        &self,
        policy_type_id: i64,
        policy_instance_id: &str,
    ) -> Option<&PolicyInstance> {
        self.instances
            .get(&(policy_type_id, policy_instance_id.to_string()))
    }

    /// Status document for one instance: the acknowledgement ledger, and
    /// whether the instance is in effect (every consumer acknowledged the
    /// latest revision with OK).
    pub fn instance_status(
        &self,
        policy_type_id: i64,
        policy_instance_id: &str,
    ) -> Option<Value> {
        let inst = self.get_instance(policy_type_id, policy_instance_id)?;
        let all_ok = !inst.acks.is_empty()
            && inst.acks.values().all(|s| *s == AckStatus::Ok);
        let acks: BTreeMap<&str, &str> = inst
            .acks
            .iter()
            .map(|(h, s)| (h.as_str(), s.as_str()))
            .collect();
        Some(json!({
            "instance_status": if all_ok { "IN EFFECT" } else { "NOT IN EFFECT" },
            "has_been_deleted": false,
            "acks": acks,
        }))
    }

    // -- southbound traffic --------------------------------------------------

    pub fn handle_message(&mut self, msg: &Message, services: &RicServices) {
        match msg.mtype {
            mtypes::A1_POLICY_RESP => self.handle_ack(msg, services),
            mtypes::A1_POLICY_QUERY => self.handle_query(msg, services),
            other => services.log_at(
                Level::Warning,
                format!("policy mediator ignoring message type {other}"),
            ),
        }
    }

    fn handle_ack(&mut self, msg: &Message, services: &RicServices) {
        let Ok(body) = serde_json::from_slice::<Value>(&msg.payload) else {
            services.log_at(Level::Error, "undecodable policy acknowledgement".to_string());
            return;
        };
        let tid = body.get("policy_type_id").and_then(Value::as_i64);
        let iid = body.get("policy_instance_id").and_then(Value::as_str);
        let handler = body.get("handler_id").and_then(Value::as_str);
        let status = body
            .get("status")
            .and_then(Value::as_str)
            .and_then(AckStatus::from_str);
        let (Some(tid), Some(iid), Some(handler), Some(status)) = (tid, iid, handler, status)
        else {
            services.log_at(
                Level::Error,
                format!("malformed policy acknowledgement from {}", msg.source),
            );
            return;
        };
        let Some(inst) = self.instances.get_mut(&(tid, iid.to_string())) else {
            services.log_at(
                Level::Warning,
                format!("acknowledgement for unknown policy instance {iid:?} of type {tid}"),
            );
            return;
        };
        inst.acks.insert(handler.to_string(), status);
        let snapshot = inst.clone();
        self.persist_instance(services, &snapshot);
        services.log_info(format!(
            "policy instance {iid:?} of type {tid}: {} from {handler}",
            status.as_str()
        ));
    }

    fn handle_query(&mut self, msg: &Message, services: &RicServices) {
        let tid = serde_json::from_slice::<Value>(&msg.payload)
            .ok()
            .and_then(|b| b.get("policy_type_id").and_then(Value::as_i64));
        let Some(tid) = tid else {
            services.log_at(
                Level::Error,
                format!("malformed policy query from {}", msg.source),
            );
            return;
        };
        let replies: Vec<Message> = {
            let registry = services.registry.borrow();
            self.instances
                .iter()
                .filter(|((t, _), _)| *t == tid)
                .filter_map(|((_, iid), inst)| {
                    make_reply(
                        &registry,
                        msg,
                        serde_json::to_vec(&instance_message_json(
                            "CREATE",
                            tid,
                            iid,
                            &inst.payload,
                        ))
                        .expect("payload serializes"),
                        Some(mtypes::A1_POLICY_REQ),
                    )
                    .ok()
                })
                .collect()
        };
        let count = replies.len();
        let now = services.now_ms();
        for mut reply in replies {
            reply.subid = tid as i32;
            let _ = services.bus.borrow_mut().send(now, A1_MEDIATOR_ENDPOINT, reply);
        }
        services.log_info(format!(
            "policy query for type {tid} from {}: {count} instances replayed",
            msg.source
        ));
    }

    // -- REST interface ------------------------------------------------------

    pub fn handle_rest(&mut self, req: &RestRequest, services: &RicServices) -> RestResponse {
        if req.method == Method::Get && match_path("/a1-p/healthcheck", &req.path).is_some() {
            return RestResponse::json(200, &json!({"status": "healthy"}));
        }
        if match_path("/a1-p/policytypes", &req.path).is_some() && req.method == Method::Get {
            return RestResponse::json(200, &json!(self.type_ids()));
        }
        if let Some(p) = match_path("/a1-p/policytypes/<id>", &req.path) {
            let Ok(tid) = p[0].parse::<i64>() else {
                return RestResponse::json(400, &json!({"error": "policy type id must be an integer"}));
            };
            return match req.method {
                Method::Get => match self.types.get(&tid) {
                    Some(t) => RestResponse::json(
                        200,
                        &json!({
                            "policy_type_id": t.policy_type_id,
                            "name": t.name,
                            "description": t.description,
                            "create_schema": t.schema_raw,
                        }),
                    ),
                    None => RestResponse::json(404, &json!({"error": format!("unknown policy type {tid}")})),
                },
                Method::Put => {
                    let body = match req.json() {
                        Ok(b) => b,
                        Err(e) => {
                            return RestResponse::json(
                                400,
                                &json!({"error": format!("malformed JSON: {e}")}),
                            )
                        }
                    };
                    match self.create_type(services, tid, &body) {
                        Ok(()) => RestResponse::empty(201),
                        Err(e) => RestResponse::json(400, &json!({"error": e})),
                    }
                }
                Method::Delete => match self.delete_type(services, tid) {
                    Ok(()) => RestResponse::empty(204),
                    Err(e) => RestResponse::json(400, &json!({"error": e})),
                },
                Method::Post => RestResponse::json(405, &json!({"error": "method not allowed"})),
            };
        }
        if let Some(p) = match_path("/a1-p/policytypes/<id>/policies", &req.path) {
            let Ok(tid) = p[0].parse::<i64>() else {
                return RestResponse::json(400, &json!({"error": "policy type id must be an integer"}));
            };
            if req.method == Method::Get {
                if !self.types.contains_key(&tid) {
                    return RestResponse::json(404, &json!({"error": format!("unknown policy type {tid}")}));
                }
                return RestResponse::json(200, &json!(self.instance_ids(tid)));
            }
        }
        if let Some(p) = match_path("/a1-p/policytypes/<id>/policies/<iid>", &req.path) {
            let Ok(tid) = p[0].parse::<i64>() else {
                return RestResponse::json(400, &json!({"error": "policy type id must be an integer"}));
            };
            let iid = &p[1];
            return match req.method {
                Method::Get => match self.get_instance(tid, iid) {
                    Some(inst) => RestResponse::json(200, &inst.payload),
                    None => RestResponse::json(
                        404,
                        &json!({"error": format!("unknown policy instance {iid:?} of type {tid}")}),
                    ),
                },
                Method::Put => {
                    let body = match req.json() {
                        Ok(b) => b,
                        Err(e) => {
                            return RestResponse::json(
                                400,
                                &json!({"error": format!("malformed JSON: {e}")}),
                            )
                        }
                    };
                    let known_type = self.types.contains_key(&tid);
                    match self.put_instance(services, tid, iid, body) {
                        Ok(_) => RestResponse::empty(202),
                        Err(e) if !known_type => RestResponse::json(404, &json!({"error": e})),
                        Err(e) => RestResponse::json(400, &json!({"error": e})),
                    }
                }
                Method::Delete => match self.delete_instance(services, tid, iid) {
                    Ok(()) => RestResponse::empty(202),
                    Err(e) => RestResponse::json(404, &json!({"error": e})),
                },
                Method::Post => RestResponse::json(405, &json!({"error": "method not allowed"})),
            };
        }
        if let Some(p) = match_path("/a1-p/policytypes/<id>/policies/<iid>/status", &req.path) {
            if req.method == Method::Get {
                let Ok(tid) = p[0].parse::<i64>() else {
                    return RestResponse::json(400, &json!({"error": "policy type id must be an integer"}));
                };
                return match self.instance_status(tid, &p[1]) {
                    Some(status) => RestResponse::json(200, &status),
                    None => RestResponse::json(
                        404,
                        &json!({"error": format!("unknown policy instance {:?} of type {tid}", p[1])}),
                    ),
                };
            }
        }
        RestResponse::json(404, &json!({"error": "no such route"}))
    }

    // -- persistence ---------------------------------------------------------

    fn persist_type(&self, services: &RicServices, t: &PolicyType) {
        let _ = services.sdl.set_json(
            A1_NAMESPACE,
            &format!("type:{:010}", t.policy_type_id),
            &json!({
                "policy_type_id": t.policy_type_id,
                "name": t.name,
                "description": t.description,
                "create_schema": t.schema_raw,
            }),
        );
    }

    fn persist_instance(&self, services: &RicServices, inst: &PolicyInstance) {
        let acks: BTreeMap<&str, &str> = inst
            .acks
            .iter()
            .map(|(h, s)| (h.as_str(), s.as_str()))
            .collect();
        let _ = services.sdl.set_json(
            A1_NAMESPACE,
            &format!("instance:{:010}:{}", inst.policy_type_id, inst.policy_instance_id),
            &json!({
                "policy_type_id": inst.policy_type_id,
                "policy_instance_id": inst.policy_instance_id,
                "payload": inst.payload,
                "acks": acks,
            }),
        );
    }

    /// Rebuild types and instances from storage. Consumers re-register when
    /// their apps come back up.
    pub fn restore_from_storage(&mut self, services: &RicServices) {
        for (_, bytes) in services.sdl.find_and_get(A1_NAMESPACE, "type:") {
            let Ok(v) = serde_json::from_slice::<Value>(&bytes) else {
                continue;
            };
            let Some(tid) = v.get("policy_type_id").and_then(Value::as_i64) else {
                continue;
            };
            let Some(schema_raw) = v.get("create_schema").cloned() else {
                continue;
            };
            let Ok(schema_text) = serde_json::to_string(&schema_raw) else {
                continue;
            };
            let Ok(create_schema) = parse_schema(&schema_text) else {
                continue;
            };
            self.types.insert(
                tid,
                PolicyType {
                    policy_type_id: tid,
                    name: v["name"].as_str().unwrap_or_default().to_string(),
                    description: v["description"].as_str().unwrap_or_default().to_string(),
                    create_schema,
                    schema_raw,
                },
            );
        }
        for (_, bytes) in services.sdl.find_and_get(A1_NAMESPACE, "instance:") {
            let Ok(v) = serde_json::from_slice::<Value>(&bytes) else {
                continue;
            };
            let (Some(tid), Some(iid)) = (
                v.get("policy_type_id").and_then(Value::as_i64),
                v.get("policy_instance_id").and_then(Value::as_str),
            ) else {
                continue;
            };
            let acks = v
                .get("acks")
                .and_then(Value::as_object)
                .map(|m| {
                    m.iter()
                        .filter_map(|(h, s)| {
                            Some((h.clone(), AckStatus::from_str(s.as_str()?)?))
                        })
                        .collect()
                })
                .unwrap_or_default();
            self.instances.insert(
                (tid, iid.to_string()),
                PolicyInstance {
                    policy_type_id: tid,
                    policy_instance_id: iid.to_string(),
                    payload: v["payload"].clone(),
                    acks,
                },
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ack_status_strings_round_trip() {
        for s in [AckStatus::Pending, AckStatus::Ok, AckStatus::Error] {
            assert_eq!(AckStatus::from_str(s.as_str()), Some(s));
        }
        assert_eq!(AckStatus::Ok.as_str(), "OK");
        assert_eq!(AckStatus::Error.as_str(), "ERROR");
        assert_eq!(AckStatus::from_str("ok"), None);
    }

    #[test]
    fn instance_message_shape_is_stable() {
        let v = instance_message_json("CREATE", 1, "threshold_1", &json!({"threshold": 5}));
        assert_eq!(v["operation"], "CREATE");
        assert_eq!(v["policy_type_id"], 1);
        assert_eq!(v["policy_instance_id"], "threshold_1");
        assert_eq!(v["payload"]["threshold"], 5);
    }
}
