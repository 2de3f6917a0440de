//! xApp descriptors and config schemas.
//!
//! An xApp ships as two JSON files. The *descriptor* declares what to deploy:
//! name and version, container images, per-container ports, the RMR message
//! types the app produces and consumes, the A1 policy ids it consumes, and an
//! optional free-form `controls` section of app-specific parameters. The
//! *schema* is a JSON-Schema (draft-07 subset: `required` plus `type`
//! checking, recursively for objects) that validates the `controls` section.
//!
//! The platform validates most descriptor sections with built-in rules;
//! `controls` is the exception — a non-empty `controls` section with no
//! schema to check it against fails onboarding.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("descriptor is not valid json: {0}")]
    MalformedJson(#[from] serde_json::Error),
    #[error("descriptor missing required field: {0}")]
    MissingField(String),
    #[error("descriptor field {path}: {reason}")]
    BadField { path: String, reason: String },
    #[error("version {0:?} is not of the form <major>.<minor>.<patch>")]
    BadVersion(String),
    #[error("schema invalid: {0}")]
    BadSchema(String),
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub registry: String,
    pub name: String,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerSpec {
    pub name: String,
    pub image: ImageRef,
    /// Optional resource requests/limits, preserved verbatim.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resources: Option<Value>,
}

/// One entry of `messaging.ports`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpec {
    pub name: String,
    pub container: String,
    pub port: u16,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_messages: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_messages: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// The `rmr` descriptor section (the older, section-style configuration;
/// newer descriptors attach the same data to the `rmrdata` port entry).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RmrSection {
    pub tx_messages: Vec<String>,
    pub rx_messages: Vec<String>,
    pub prot_port: String,
    pub max_size: u64,
    pub num_workers: u32,
    pub policies: Vec<i64>,
}

impl Default for RmrSection {
    fn default() -> Self {
        RmrSection {
            tx_messages: Vec::new(),
            rx_messages: Vec::new(),
            prot_port: "tcp:4560".to_string(),
            max_size: 2072,
            num_workers: 1,
            policies: Vec::new(),
        }
    }
}

/// Messaging configuration after reconciling the `rmr` section, the
/// `messaging.ports` entries, and the platform defaults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveRmr {
    pub http_port: u16,
    pub route_port: u16,
    pub data_port: u16,
    pub max_size: u64,
    pub num_workers: u32,
    pub tx_messages: Vec<String>,
    pub rx_messages: Vec<String>,
    pub policies: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XAppDescriptor {
    pub name: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vendor: Option<String>,
    pub containers: Vec<ContainerSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmr: Option<RmrSection>,
    pub ports: Vec<PortSpec>,
    /// The free-form `controls` section (empty map when absent).
    pub controls: Map<String, Value>,
    /// Unknown top-level sections, preserved for round-tripping.
    pub extras: Map<String, Value>,
}

/// Loose semantic version: exactly three dot-separated unsigned integers.
pub fn parse_version(v: &str) -> Result<(u64, u64, u64), DescriptorError> {
    let parts: Vec<&str> = v.split('.').collect();
    if parts.len() != 3 {
        return Err(DescriptorError::BadVersion(v.to_string()));
    }
    let mut nums = [0u64; 3];
    for (i, p) in parts.iter().enumerate() {
        if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
            return Err(DescriptorError::BadVersion(v.to_string()));
        }
        nums[i] = p
            .parse()
            .map_err(|_| DescriptorError::BadVersion(v.to_string()))?;
    }
    Ok((nums[0], nums[1], nums[2]))
}

fn get_str(obj: &Map<String, Value>, path: &str, key: &str) -> Result<String, DescriptorError> {
    match obj.get(key) {
        None => Err(DescriptorError::MissingField(join(path, key))),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(DescriptorError::BadField {
            path: join(path, key),
            reason: "expected a string".to_string(),
        }),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, DescriptorError> {
    v.as_object().ok_or_else(|| DescriptorError::BadField {
        path: path.to_string(),
        reason: "expected an object".to_string(),
    })
}

fn str_list(v: &Value, path: &str) -> Result<Vec<String>, DescriptorError> {
    let arr = v.as_array().ok_or_else(|| DescriptorError::BadField {
        path: path.to_string(),
        reason: "expected an array of strings".to_string(),
    })?;
    arr.iter()
        .map(|e| {
            e.as_str()
                .map(str::to_string)
                .ok_or_else(|| DescriptorError::BadField {
                    path: path.to_string(),
                    reason: "expected an array of strings".to_string(),
                })
        })
        .collect()
}

fn int_list(v: &Value, path: &str) -> Result<Vec<i64>, DescriptorError> {
    let arr = v.as_array().ok_or_else(|| DescriptorError::BadField {
        path: path.to_string(),
        reason: "expected an array of integers".to_string(),
    })?;
    arr.iter()
        .map(|e| {
            e.as_i64().ok_or_else(|| DescriptorError::BadField {
                path: path.to_string(),
                reason: "expected an array of integers".to_string(),
            })
        })
        .collect()
}

/// Parse a descriptor JSON document.
pub fn parse_descriptor(text: &str) -> Result<XAppDescriptor, DescriptorError> {
    let root: Value = serde_json::from_str(text)?;
    let obj = as_obj(&root, "<root>")?;

    let name = get_str(obj, "", "name")?;
    let version = get_str(obj, "", "version")?;
    parse_version(&version)?;
    let vendor = match obj.get("vendor") {
        None => None,
        Some(_) => Some(get_str(obj, "", "vendor")?),
    };

    let containers_val = obj
        .get("containers")
        .ok_or_else(|| DescriptorError::MissingField("containers".to_string()))?;
    let containers_arr = containers_val
        .as_array()
        .ok_or_else(|| DescriptorError::BadField {
            path: "containers".to_string(),
            reason: "expected an array".to_string(),
        })?;
    let mut containers = Vec::new();
    for (i, c) in containers_arr.iter().enumerate() {
        let path = format!("containers[{i}]");
        let cobj = as_obj(c, &path)?;
        let cname = get_str(cobj, &path, "name")?;
        let image_val = cobj
            .get("image")
            .ok_or_else(|| DescriptorError::MissingField(join(&path, "image")))?;
        let iobj = as_obj(image_val, &join(&path, "image"))?;
        let image = ImageRef {
            registry: get_str(iobj, &join(&path, "image"), "registry")?,
            name: get_str(iobj, &join(&path, "image"), "name")?,
            tag: get_str(iobj, &join(&path, "image"), "tag")?,
        };
        containers.push(ContainerSpec {
            name: cname,
            image,
            resources: cobj.get("resources").cloned(),
        });
    }

    let rmr = match obj.get("rmr") {
        None => None,
        Some(v) => {
            let robj = as_obj(v, "rmr")?;
            let mut section = RmrSection::default();
            if let Some(tx) = robj.get("txMessages") {
                section.tx_messages = str_list(tx, "rmr.txMessages")?;
            }
            if let Some(rx) = robj.get("rxMessages") {
                section.rx_messages = str_list(rx, "rmr.rxMessages")?;
            }
            if let Some(p) = robj.get("protPort") {
                section.prot_port = p
                    .as_str()
                    .ok_or_else(|| DescriptorError::BadField {
                        path: "rmr.protPort".to_string(),
                        reason: "expected a string like \"tcp:4560\"".to_string(),
                    })?
                    .to_string();
            }
            if let Some(m) = robj.get("maxSize") {
                section.max_size = m.as_u64().ok_or_else(|| DescriptorError::BadField {
                    path: "rmr.maxSize".to_string(),
                    reason: "expected an unsigned integer".to_string(),
                })?;
            }
            if let Some(w) = robj.get("numWorkers") {
                section.num_workers =
                    w.as_u64()
                        .and_then(|n| u32::try_from(n).ok())
                        .ok_or_else(|| DescriptorError::BadField {
                            path: "rmr.numWorkers".to_string(),
                            reason: "expected an unsigned integer".to_string(),
                        })?;
            }
            if let Some(p) = robj.get("policies") {
                section.policies = int_list(p, "rmr.policies")?;
            }
            Some(section)
        }
    };

    let mut ports = Vec::new();
    if let Some(messaging) = obj.get("messaging") {
        let mobj = as_obj(messaging, "messaging")?;
        if let Some(ports_val) = mobj.get("ports") {
            let parr = ports_val
                .as_array()
                .ok_or_else(|| DescriptorError::BadField {
                    path: "messaging.ports".to_string(),
                    reason: "expected an array".to_string(),
                })?;
            for (i, p) in parr.iter().enumerate() {
                let path = format!("messaging.ports[{i}]");
                let pobj = as_obj(p, &path)?;
                let port_num = pobj
                    .get("port")
                    .ok_or_else(|| DescriptorError::MissingField(join(&path, "port")))?
                    .as_u64()
                    .and_then(|n| u16::try_from(n).ok())
                    .ok_or_else(|| DescriptorError::BadField {
                        path: join(&path, "port"),
                        reason: "expected a port number".to_string(),
                    })?;
                ports.push(PortSpec {
                    name: get_str(pobj, &path, "name")?,
                    container: get_str(pobj, &path, "container")?,
                    port: port_num,
                    tx_messages: pobj
                        .get("txMessages")
                        .map(|v| str_list(v, &join(&path, "txMessages")))
                        .transpose()?,
                    rx_messages: pobj
                        .get("rxMessages")
                        .map(|v| str_list(v, &join(&path, "rxMessages")))
                        .transpose()?,
                    policies: pobj
                        .get("policies")
                        .map(|v| int_list(v, &join(&path, "policies")))
                        .transpose()?,
                    description: pobj
                        .get("description")
                        .and_then(Value::as_str)
                        .map(str::to_string),
                });
            }
        }
    }

    let controls = match obj.get("controls") {
        None => Map::new(),
        Some(v) => as_obj(v, "controls")?.clone(),
    };

    let mut extras = Map::new();
    for (k, v) in obj {
        if !matches!(
            k.as_str(),
            "name" | "version" | "vendor" | "containers" | "rmr" | "messaging" | "controls"
        ) {
            extras.insert(k.clone(), v.clone());
        }
    }

    Ok(XAppDescriptor {
        name,
        version,
        vendor,
        containers,
        rmr,
        ports,
        controls,
        extras,
    })
}

impl XAppDescriptor {
    /// Canonical JSON rendering; `parse_descriptor(emit(d))` reproduces `d`,
    /// including unknown top-level sections.
    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("descriptor serializes")
    }

    /// Same content as [`XAppDescriptor::emit`] but as a JSON value.
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("name".into(), Value::String(self.name.clone()));
        root.insert("version".into(), Value::String(self.version.clone()));
        if let Some(v) = &self.vendor {
            root.insert("vendor".into(), Value::String(v.clone()));
        }
        let containers: Vec<Value> = self
            .containers
            .iter()
            .map(|c| {
                let mut co = Map::new();
                co.insert("name".into(), Value::String(c.name.clone()));
                co.insert(
                    "image".into(),
                    serde_json::json!({
                        "registry": c.image.registry,
                        "name": c.image.name,
                        "tag": c.image.tag,
                    }),
                );
                if let Some(r) = &c.resources {
                    co.insert("resources".into(), r.clone());
                }
                Value::Object(co)
            })
            .collect();
        root.insert("containers".into(), Value::Array(containers));
        if let Some(r) = &self.rmr {
            root.insert(
                "rmr".into(),
                serde_json::json!({
                    "txMessages": r.tx_messages,
                    "rxMessages": r.rx_messages,
                    "protPort": r.prot_port,
                    "maxSize": r.max_size,
                    "numWorkers": r.num_workers,
                    "policies": r.policies,
                }),
            );
        }
        if !self.ports.is_empty() {
            let ports: Vec<Value> = self
                .ports
                .iter()
                .map(|p| {
                    let mut po = Map::new();
                    po.insert("name".into(), Value::String(p.name.clone()));
                    po.insert("container".into(), Value::String(p.container.clone()));
                    po.insert("port".into(), Value::from(p.port));
                    if let Some(tx) = &p.tx_messages {
                        po.insert("txMessages".into(), serde_json::json!(tx));
                    }
                    if let Some(rx) = &p.rx_messages {
                        po.insert("rxMessages".into(), serde_json::json!(rx));
                    }
                    if let Some(pol) = &p.policies {
                        po.insert("policies".into(), serde_json::json!(pol));
                    }
                    if let Some(d) = &p.description {
                        po.insert("description".into(), Value::String(d.clone()));
                    }
                    Value::Object(po)
                })
                .collect();
            root.insert(
                "messaging".into(),
                serde_json::json!({ "ports": ports }),
            );
        }
        if !self.controls.is_empty() {
            root.insert("controls".into(), Value::Object(self.controls.clone()));
        }
        for (k, v) in &self.extras {
            root.insert(k.clone(), v.clone());
        }
        Value::Object(root)
    }

    /// Reconcile messaging configuration. Port entries name the ports;
    /// tx/rx/policy lists are the union of the `rmr` section and the
    /// `rmrdata` port entry (order preserved, duplicates dropped); buffer
    /// size and worker count come from the `rmr` section or the defaults.
    pub fn effective_rmr(&self) -> EffectiveRmr {
        let port_by_name = |n: &str| self.ports.iter().find(|p| p.name == n);
        let http_port = port_by_name("http").map(|p| p.port).unwrap_or(8080);
        let route_port = port_by_name("rmrroute").map(|p| p.port).unwrap_or(4561);
        let data_port = port_by_name("rmrdata")
            .map(|p| p.port)
            .or_else(|| {
                self.rmr
                    .as_ref()
                    .and_then(|r| r.prot_port.strip_prefix("tcp:"))
                    .and_then(|p| p.parse().ok())
            })
            .unwrap_or(4560);

        let mut tx: Vec<String> = Vec::new();
        let mut rx: Vec<String> = Vec::new();
        let mut policies: Vec<i64> = Vec::new();
        let extend_unique = |dst: &mut Vec<String>, src: &[String]| {
            for s in src {
                if !dst.contains(s) {
                    dst.push(s.clone());
                }
            }
        };
        if let Some(r) = &self.rmr {
            extend_unique(&mut tx, &r.tx_messages);
            extend_unique(&mut rx, &r.rx_messages);
            for p in &r.policies {
                if !policies.contains(p) {
                    policies.push(*p);
                }
            }
        }
        if let Some(data) = port_by_name("rmrdata") {
            if let Some(t) = &data.tx_messages {
                extend_unique(&mut tx, t);
            }
            if let Some(rl) = &data.rx_messages {
                extend_unique(&mut rx, rl);
            }
            if let Some(pol) = &data.policies {
                for p in pol {
                    if !policies.contains(p) {
                        policies.push(*p);
                    }
                }
            }
        }

        EffectiveRmr {
            http_port,
            route_port,
            data_port,
            max_size: self.rmr.as_ref().map(|r| r.max_size).unwrap_or(2072),
            num_workers: self.rmr.as_ref().map(|r| r.num_workers).unwrap_or(1),
            tx_messages: tx,
            rx_messages: rx,
            policies,
        }
    }
}

/// Allowed `type` values in the schema subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaType {
    String,
    Integer,
    Number,
    Boolean,
    Array,
    Object,
}

impl SchemaType {
    fn matches(self, v: &Value) -> bool {
        match self {
            SchemaType::String => v.is_string(),
            SchemaType::Integer => v.is_i64() || v.is_u64(),
            SchemaType::Number => v.is_number(),
            SchemaType::Boolean => v.is_boolean(),
            SchemaType::Array => v.is_array(),
            SchemaType::Object => v.is_object(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SchemaType::String => "string",
            SchemaType::Integer => "integer",
            SchemaType::Number => "number",
            SchemaType::Boolean => "boolean",
            SchemaType::Array => "array",
            SchemaType::Object => "object",
        }
    }
}

/// One property definition: type plus annotation metadata, recursive for
/// object-typed properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaProperty {
    #[serde(rename = "$id", skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(rename = "type")]
    pub prop_type: SchemaType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub examples: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub properties: BTreeMap<String, SchemaProperty>,
}

/// Parsed schema for the `controls` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlsSchema {
    #[serde(rename = "$schema", skip_serializing_if = "Option::is_none")]
    pub schema_uri: Option<String>,
    #[serde(rename = "$id", skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub required: Vec<String>,
    #[serde(default)]
    pub properties: BTreeMap<String, SchemaProperty>,
}

/// Parse and sanity-check a schema document: its root must be an object
/// schema, and every `required` key (at every nesting level) must have a
/// property definition.
pub fn parse_schema(text: &str) -> Result<ControlsSchema, DescriptorError> {
    let root: Value = serde_json::from_str(text)?;
    let obj = as_obj(&root, "<root>")?;
    if let Some(t) = obj.get("type") {
        if t.as_str() != Some("object") {
            return Err(DescriptorError::BadSchema(
                "root schema type must be \"object\"".to_string(),
            ));
        }
    }
    let schema: ControlsSchema =
        serde_json::from_value(root).map_err(|e| DescriptorError::BadSchema(e.to_string()))?;
    check_required_covered(&schema.required, &schema.properties, "controls")?;
    Ok(schema)
}

fn check_required_covered(
    required: &[String],
    properties: &BTreeMap<String, SchemaProperty>,
    path: &str,
) -> Result<(), DescriptorError> {
    for key in required {
        if !properties.contains_key(key) {
            return Err(DescriptorError::BadSchema(format!(
                "{path}: required key {key:?} has no property definition"
            )));
        }
    }
    for (name, prop) in properties {
        check_required_covered(&prop.required, &prop.properties, &join(path, name))?;
    }
    Ok(())
}

fn check_value(
    prop: &SchemaProperty,
    value: &Value,
    path: &str,
    out: &mut Vec<Violation>,
) {
    if !prop.prop_type.matches(value) {
        out.push(Violation {
            path: path.to_string(),
            reason: format!("expected type {}", prop.prop_type.name()),
        });
        return;
    }
    if prop.prop_type == SchemaType::Object {
        let obj = value.as_object().expect("type matched object");
        for req in &prop.required {
            if !obj.contains_key(req) {
                out.push(Violation {
                    path: join(path, req),
                    reason: "required parameter missing".to_string(),
                });
            }
        }
        for (k, v) in obj {
            if let Some(sub) = prop.properties.get(k) {
                check_value(sub, v, &join(path, k), out);
            }
        }
    }
}

/// Validate a free-standing JSON object against a schema (the same subset
/// used for `controls`). Returns all violations; empty means valid.
pub fn validate_value(schema: &ControlsSchema, value: &Value) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(obj) = value.as_object() else {
        out.push(Violation {
            path: "<root>".to_string(),
            reason: "expected type object".to_string(),
        });
        return out;
    };
    for req in &schema.required {
        if !obj.contains_key(req) {
            out.push(Violation {
                path: req.clone(),
                reason: "required parameter missing".to_string(),
            });
        }
    }
    for (k, v) in obj {
        if let Some(prop) = schema.properties.get(k) {
            check_value(prop, v, k, &mut out);
        }
    }
    out
}

/// Run every built-in structural check plus, when a schema is supplied, the
/// `controls` validation. Returns all violations found (empty = valid).
pub fn validate(desc: &XAppDescriptor, schema: Option<&ControlsSchema>) -> Vec<Violation> {
    let mut out = Vec::new();

    if desc.containers.is_empty() {
        out.push(Violation {
            path: "containers".to_string(),
            reason: "at least one container is required".to_string(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for c in &desc.containers {
        if !seen.insert(c.name.as_str()) {
            out.push(Violation {
                path: format!("containers.{}", c.name),
                reason: "duplicate container name".to_string(),
            });
        }
        for (field, val) in [
            ("registry", &c.image.registry),
            ("name", &c.image.name),
            ("tag", &c.image.tag),
        ] {
            if val.is_empty() {
                out.push(Violation {
                    path: format!("containers.{}.image.{}", c.name, field),
                    reason: "must not be empty".to_string(),
                });
            }
        }
    }

    let mut port_names = std::collections::HashSet::new();
    let mut port_numbers = std::collections::HashSet::new();
    for p in &desc.ports {
        if !desc.containers.iter().any(|c| c.name == p.container) {
            out.push(Violation {
                path: format!("messaging.ports.{}", p.name),
                reason: format!("references unknown container {:?}", p.container),
            });
        }
        if !port_names.insert((p.container.clone(), p.name.clone())) {
            out.push(Violation {
                path: format!("messaging.ports.{}", p.name),
                reason: format!("duplicate port name for container {:?}", p.container),
            });
        }
        if !port_numbers.insert((p.container.clone(), p.port)) {
            out.push(Violation {
                path: format!("messaging.ports.{}", p.name),
                reason: format!("port {} bound twice on container {:?}", p.port, p.container),
            });
        }
    }

    if let Some(r) = &desc.rmr {
        if r.max_size == 0 {
            out.push(Violation {
                path: "rmr.maxSize".to_string(),
                reason: "must be at least 1".to_string(),
            });
        }
        if r.num_workers == 0 {
            out.push(Violation {
                path: "rmr.numWorkers".to_string(),
                reason: "must be at least 1".to_string(),
            });
        }
        let port_ok = r
            .prot_port
            .strip_prefix("tcp:")
            .and_then(|p| p.parse::<u16>().ok())
            .is_some_and(|p| p > 0);
        if !port_ok {
            out.push(Violation {
                path: "rmr.protPort".to_string(),
                reason: "expected \"tcp:<port>\"".to_string(),
            });
        }
    }

    match schema {
        None => {
            if !desc.controls.is_empty() {
                out.push(Violation {
                    path: "controls".to_string(),
                    reason: "non-empty controls section requires a schema".to_string(),
                });
            }
        }
        Some(schema) => {
            for req in &schema.required {
                if !desc.controls.contains_key(req) {
                    out.push(Violation {
                        path: join("controls", req),
                        reason: "required parameter missing".to_string(),
                    });
                }
            }
            for (k, v) in &desc.controls {
                if let Some(prop) = schema.properties.get(k) {
                    check_value(prop, v, &join("controls", k), &mut out);
                }
            }
        }
    }

    out
}

/// Representative descriptor and schema documents used across tests, the
/// operator CLI golden files, and the bundled demos.
pub mod samples {
    /// Two-container app: an HTTP/REST container and an RMR container that
    /// produces policy responses/queries and consumes indications, policies,
    /// and health checks.
    pub const DESCRIPTOR: &str = r#"{
  "name": "example_xapp",
  "version": "1.0.0",
  "vendor": "example_vendor",
  "containers": [
    {
      "name": "example_container_1",
      "image": {
        "registry": "example.registry.com",
        "name": "example_image_1",
        "tag": "1.0.0"
      }
    },
    {
      "name": "example_container_2",
      "image": {
        "registry": "example.registry.com",
        "name": "example_image_2",
        "tag": "1.0.0"
      },
      "resources": {
        "requests": { "cpu": "1", "memory": "64Mi" },
        "limits": { "cpu": "2", "memory": "128Mi" }
      }
    }
  ],
  "rmr": {
    "txMessages": ["A1_POLICY_RESP", "A1_POLICY_QUERY", "RIC_HEALTH_CHECK_RESP"],
    "rxMessages": ["RIC_INDICATION", "A1_POLICY_REQ", "RIC_HEALTH_CHECK_REQ"],
    "protPort": "tcp:4560",
    "maxSize": 2072,
    "numWorkers": 1,
    "policies": [1]
  },
  "messaging": {
    "ports": [
      {
        "name": "http",
        "container": "example_container_1",
        "port": 8080,
        "description": "HTTP service port"
      },
      {
        "name": "rmrroute",
        "container": "example_container_2",
        "port": 4561,
        "description": "RMR route port"
      },
      {
        "name": "rmrdata",
        "container": "example_container_2",
        "port": 4560,
        "rxMessages": ["RIC_INDICATION", "A1_POLICY_REQ"],
        "txMessages": ["A1_POLICY_RESP", "A1_POLICY_QUERY"],
        "policies": [1],
        "description": "RMR data port"
      }
    ]
  },
  "controls": {
    "rmr_routing_needed": false,
    "meid": "gnb123456",
    "ran_function_id": 1231,
    "action_definition": [11, 12, 13, 14, 15],
    "action_id": 1,
    "action_type": "policy",
    "subsequent_action": {
      "subsequent_action_type": "continue",
      "time_to_wait": "w10ms"
    }
  }
}"#;

    /// Schema for the descriptor above: `meid` and `ran_function_id` are
    /// mandatory, the nested `subsequent_action` object is typed.
    pub const SCHEMA: &str = r##"{
  "$schema": "http://json-schema.org/draft-07/schema#",
  "$id": "#/controls",
  "type": "object",
  "title": "Controls Section Schema",
  "required": ["meid", "ran_function_id"],
  "properties": {
    "meid": {
      "$id": "#/properties/controls/items/properties/meid",
      "type": "string",
      "default": "gnb123456",
      "title": "E2 Node Managed Entity ID",
      "examples": ["gnbABCDEF", "enbMNOPQR"]
    },
    "ran_function_id": {
      "$id": "#/properties/controls/items/properties/ran_function_id",
      "type": "integer",
      "title": "E2 Node RAN Function ID",
      "default": 1231
    },
    "action_type": {
      "type": "string",
      "title": "Subscription action type"
    },
    "subsequent_action": {
      "type": "object",
      "title": "Subsequent action directive",
      "required": ["subsequent_action_type"],
      "properties": {
        "subsequent_action_type": { "type": "string" },
        "time_to_wait": { "type": "string" }
      }
    }
  }
}"##;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> XAppDescriptor {
        parse_descriptor(samples::DESCRIPTOR).unwrap()
    }

    fn sample_schema() -> ControlsSchema {
        parse_schema(samples::SCHEMA).unwrap()
    }

    #[test]
    fn parses_sample_descriptor_fields() {
        let d = sample();
        assert_eq!(d.name, "example_xapp");
        assert_eq!(d.version, "1.0.0");
        assert_eq!(d.vendor.as_deref(), Some("example_vendor"));
        assert_eq!(d.containers.len(), 2);
        assert_eq!(d.containers[0].image.registry, "example.registry.com");
        assert!(d.containers[0].resources.is_none());
        assert!(d.containers[1].resources.is_some());
        let r = d.rmr.as_ref().unwrap();
        assert_eq!(r.prot_port, "tcp:4560");
        assert_eq!(r.max_size, 2072);
        assert_eq!(r.num_workers, 1);
        assert_eq!(r.policies, vec![1]);
        assert_eq!(
            r.tx_messages,
            vec!["A1_POLICY_RESP", "A1_POLICY_QUERY", "RIC_HEALTH_CHECK_RESP"]
        );
        assert_eq!(d.ports.len(), 3);
        assert_eq!(d.ports[0].name, "http");
        assert_eq!(d.ports[0].port, 8080);
        assert_eq!(d.ports[2].policies, Some(vec![1]));
        assert_eq!(d.controls.len(), 7);
        assert!(d.extras.is_empty());
    }

    #[test]
    fn effective_rmr_reconciles_ports_and_section() {
        let d = sample();
        let eff = d.effective_rmr();
        assert_eq!(eff.http_port, 8080);
        assert_eq!(eff.route_port, 4561);
        assert_eq!(eff.data_port, 4560);
        assert_eq!(eff.max_size, 2072);
        assert_eq!(eff.num_workers, 1);
        assert_eq!(eff.policies, vec![1]);
        // Union of section + rmrdata port lists, first occurrence wins.
        assert_eq!(
            eff.tx_messages,
            vec!["A1_POLICY_RESP", "A1_POLICY_QUERY", "RIC_HEALTH_CHECK_RESP"]
        );
        assert_eq!(
            eff.rx_messages,
            vec!["RIC_INDICATION", "A1_POLICY_REQ", "RIC_HEALTH_CHECK_REQ"]
        );
    }

    #[test]
    fn effective_rmr_defaults_when_sections_absent() {
        let d = parse_descriptor(
            r#"{"name":"a","version":"0.1.0","containers":[{"name":"c","image":{"registry":"r","name":"n","tag":"t"}}]}"#,
        )
        .unwrap();
        let eff = d.effective_rmr();
        assert_eq!(
            (eff.http_port, eff.route_port, eff.data_port),
            (8080, 4561, 4560)
        );
        assert_eq!(eff.max_size, 2072);
        assert_eq!(eff.num_workers, 1);
        assert!(eff.tx_messages.is_empty());
    }

    #[test]
    fn missing_and_malformed_fields_are_distinguished() {
        assert!(matches!(
            parse_descriptor(r#"{"version":"1.0.0","containers":[]}"#),
            Err(DescriptorError::MissingField(f)) if f == "name"
        ));
        assert!(matches!(
            parse_descriptor(r#"{"name":7,"version":"1.0.0","containers":[]}"#),
            Err(DescriptorError::BadField { path, .. }) if path == "name"
        ));
        assert!(matches!(
            parse_descriptor("not json"),
            Err(DescriptorError::MalformedJson(_))
        ));
        assert!(matches!(
            parse_descriptor(r#"{"name":"a","version":"1.0.0"}"#),
            Err(DescriptorError::MissingField(f)) if f == "containers"
        ));
        assert!(matches!(
            parse_descriptor(
                r#"{"name":"a","version":"1.0.0","containers":[{"name":"c"}]}"#
            ),
            Err(DescriptorError::MissingField(f)) if f == "containers[0].image"
        ));
    }

    #[test]
    fn version_must_be_three_dotted_integers() {
        assert_eq!(parse_version("1.0.0").unwrap(), (1, 0, 0));
        assert_eq!(parse_version("01.2.30").unwrap(), (1, 2, 30));
        for bad in ["1.0", "1.0.0.0", "1.0.x", "", "1..0", "v1.0.0"] {
            assert!(parse_version(bad).is_err(), "{bad:?} should fail");
        }
        assert!(matches!(
            parse_descriptor(r#"{"name":"a","version":"1.0","containers":[]}"#),
            Err(DescriptorError::BadVersion(_))
        ));
    }

    #[test]
    fn unknown_top_level_sections_survive_round_trip() {
        let text = r#"{
            "name": "a", "version": "1.0.0",
            "containers": [{"name":"c","image":{"registry":"r","name":"n","tag":"t"}}],
            "custom_section": {"k": [1, 2]},
            "another": true
        }"#;
        let d = parse_descriptor(text).unwrap();
        assert_eq!(d.extras.len(), 2);
        assert_eq!(d.extras["custom_section"], serde_json::json!({"k": [1, 2]}));
        let d2 = parse_descriptor(&d.emit()).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn emit_parse_is_identity_on_the_sample() {
        let d = sample();
        let d2 = parse_descriptor(&d.emit()).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn sample_schema_parses() {
        let s = sample_schema();
        assert_eq!(s.required, vec!["meid", "ran_function_id"]);
        assert_eq!(s.title.as_deref(), Some("Controls Section Schema"));
        let meid = &s.properties["meid"];
        assert_eq!(meid.prop_type, SchemaType::String);
        assert_eq!(meid.default, Some(serde_json::json!("gnb123456")));
        assert_eq!(meid.examples.as_ref().unwrap().len(), 2);
        assert_eq!(
            s.properties["subsequent_action"].required,
            vec!["subsequent_action_type"]
        );
    }

    #[test]
    fn schema_required_without_property_is_rejected() {
        let err = parse_schema(r#"{"type":"object","required":["ghost"],"properties":{}}"#)
            .unwrap_err();
        assert!(matches!(err, DescriptorError::BadSchema(msg) if msg.contains("ghost")));
        // Also enforced on nested objects.
        let err = parse_schema(
            r#"{"type":"object","required":[],"properties":{
                "sub": {"type":"object","required":["inner"],"properties":{}}}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, DescriptorError::BadSchema(msg) if msg.contains("inner")));
    }

    #[test]
    fn non_object_root_schema_is_rejected() {
        assert!(parse_schema(r#"{"type":"array"}"#).is_err());
    }

    #[test]
    fn valid_sample_passes_validation() {
        let violations = validate(&sample(), Some(&sample_schema()));
        assert!(violations.is_empty(), "unexpected: {violations:?}");
    }

    #[test]
    fn missing_required_control_is_flagged() {
        let mut d = sample();
        d.controls.remove("meid");
        let v = validate(&d, Some(&sample_schema()));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "controls.meid");
        assert!(v[0].reason.contains("required"));
    }

    #[test]
    fn wrong_control_type_is_flagged() {
        let mut d = sample();
        d.controls
            .insert("ran_function_id".into(), serde_json::json!("1231"));
        let v = validate(&d, Some(&sample_schema()));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "controls.ran_function_id");
        assert!(v[0].reason.contains("integer"));
    }

    #[test]
    fn nested_object_requirements_are_enforced() {
        let mut d = sample();
        d.controls.insert(
            "subsequent_action".into(),
            serde_json::json!({"time_to_wait": "w10ms"}),
        );
        let v = validate(&d, Some(&sample_schema()));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "controls.subsequent_action.subsequent_action_type");
    }

    #[test]
    fn controls_without_schema_is_a_violation() {
        let d = sample();
        let v = validate(&d, None);
        assert!(v.iter().any(|x| x.path == "controls"
            && x.reason.contains("requires a schema")));
    }

    #[test]
    fn empty_controls_without_schema_is_fine() {
        let mut d = sample();
        d.controls.clear();
        assert!(validate(&d, None).is_empty());
    }

    #[test]
    fn structural_violations_are_reported() {
        let mut d = sample();
        d.containers[1].name = "example_container_1".to_string(); // duplicate
        d.containers[0].image.tag = String::new();
        d.ports[1].container = "no_such_container".to_string();
        let mut r = d.rmr.take().unwrap();
        r.num_workers = 0;
        r.prot_port = "udp:0".to_string();
        d.rmr = Some(r);
        let v = validate(&d, Some(&sample_schema()));
        let paths: Vec<&str> = v.iter().map(|x| x.path.as_str()).collect();
        assert!(paths.contains(&"containers.example_container_1"));
        assert!(paths.contains(&"containers.example_container_1.image.tag"));
        assert!(paths.contains(&"messaging.ports.rmrroute"));
        assert!(paths.contains(&"rmr.numWorkers"));
        assert!(paths.contains(&"rmr.protPort"));
    }

    #[test]
    fn empty_containers_is_a_violation() {
        let mut d = sample();
        d.containers.clear();
        d.ports.clear();
        let v = validate(&d, Some(&sample_schema()));
        assert!(v.iter().any(|x| x.path == "containers"));
    }
}
