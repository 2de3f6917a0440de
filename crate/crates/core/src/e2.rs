//! The E2 side of the simulator: payload codec, simulated RAN nodes, and the
//! platform component that terminates node traffic.
//!
//! # Payload codec
//!
//! Real deployments carry ASN.1-encoded service-model payloads; miniric
//! replaces that machinery with a canonical, versioned binary codec. Every
//! encoded buffer starts with a format-version byte and a type tag, fields
//! are fixed-order and length-prefixed, and `decode(encode(x)) == x` holds
//! for every payload type. Decode failures report the byte position.
//!
//! # Simulated nodes
//!
//! A [`NodeConfig`] describes a gNodeB: identity, exposed RAN functions, and
//! a measurement source (a trace file analog or a seeded synthetic
//! generator). Once attached through the composition root, the node records
//! itself in the R-NIB and answers subscription setup, deletion, and control
//! requests. REPORT-type actions emit one indication per granularity period
//! on the simulated clock.

use crate::clock::TimerId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Object identifier of the KPM monitoring service model.
pub const KPM_OID: &str = "1.3.6.1.4.1.53148.1.2.2.2";

/// RAN function id that simulated nodes expose the KPM model under.
pub const DEFAULT_RAN_FUNCTION_ID: u32 = 200;

/// Measurement every simulated node supports out of the box.
pub const DEFAULT_MEAS_NAME: &str = "DRB.PerDataVolumeDLDist.Bin";

/// RMR endpoint name of the platform's E2 termination component.
pub const E2TERM_ENDPOINT: &str = "service-ricplt-e2term-rmr.ricplt";

// ---------------------------------------------------------------------------
// Codec
// ---------------------------------------------------------------------------

/// First byte of every encoded payload.
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("decode error at byte {position}: {reason}")]
pub struct DecodeError {
    pub position: usize,
    pub reason: String,
}

mod tags {
    pub const EVENT_TRIGGER: u8 = 0x01;
    pub const ACTION_DEFINITION: u8 = 0x02;
    pub const INDICATION: u8 = 0x03;
    pub const SUB_SETUP: u8 = 0x04;
    pub const SUB_RESULT: u8 = 0x05;
    pub const SUB_DELETE: u8 = 0x06;
    pub const SUB_DELETE_RESULT: u8 = 0x07;
    pub const CONTROL_REQUEST: u8 = 0x08;
    pub const CONTROL_OUTCOME: u8 = 0x09;
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(tag: u8) -> Self {
        Writer {
            buf: vec![FORMAT_VERSION, tag],
        }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.buf.extend_from_slice(b);
    }

    fn finish(self) -> Vec<u8> {
        self.buf
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], expect_tag: u8) -> Result<Self, DecodeError> {
        let mut r = Reader { buf, pos: 0 };
        let version = r.u8()?;
        if version != FORMAT_VERSION {
            return Err(DecodeError {
                position: 0,
                reason: format!("unsupported format version {version}"),
            });
        }
        let tag = r.u8()?;
        if tag != expect_tag {
            return Err(DecodeError {
                position: 1,
                reason: format!("expected payload tag {expect_tag:#04x}, found {tag:#04x}"),
            });
        }
        Ok(r)
    }

    fn err(&self, reason: impl Into<String>) -> DecodeError {
        DecodeError {
            position: self.pos,
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.pos + n > self.buf.len() {
            return Err(self.err(format!(
                "truncated: need {n} bytes, {} remain",
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64, DecodeError> {
        Ok(i64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32, DecodeError> {
        Ok(i32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, DecodeError> {
        Ok(f64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, DecodeError> {
        let len = self.u32()? as usize;
        let start = self.pos;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| DecodeError {
            position: start,
            reason: format!("invalid utf-8 in string: {e}"),
        })
    }

    fn bytes(&mut self) -> Result<Vec<u8>, DecodeError> {
        let len = self.u32()? as usize;
        Ok(self.take(len)?.to_vec())
    }

    fn finish(self) -> Result<(), DecodeError> {
        if self.pos != self.buf.len() {
            return Err(self.err("trailing bytes after payload"));
        }
        Ok(())
    }
}

/// Subscription event trigger: report every `reporting_period_ms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTrigger {
    /// Trigger format discriminator; format 1 is periodic reporting.
    pub format: u8,
    pub reporting_period_ms: u64,
}

impl EventTrigger {
    /// Format-1 periodic trigger.
    pub fn periodic(reporting_period_ms: u64) -> Self {
        EventTrigger {
            format: 1,
            reporting_period_ms,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::EVENT_TRIGGER);
        w.u8(self.format);
        w.u64(self.reporting_period_ms);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::EVENT_TRIGGER)?;
        let out = EventTrigger {
            format: r.u8()?,
            reporting_period_ms: r.u64()?,
        };
        r.finish()?;
        Ok(out)
    }
}

/// One measurement requested by an action definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasInfo {
    pub meas_name: String,
    pub labels: Vec<String>,
}

/// What a subscription action should collect: a measurement list sampled at
/// `granul_period_ms`, under a numbered report style.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDefinition {
    /// Definition format discriminator; format 1 is the measurement list.
    pub format: u8,
    pub meas_info_list: Vec<MeasInfo>,
    pub granul_period_ms: u64,
    pub ric_style_type: i64,
}

impl ActionDefinition {
    /// Format-1 definition for a list of measurement names with no labels,
    /// style 1.
    pub fn format1(meas_names: &[&str], granul_period_ms: u64) -> Self {
        ActionDefinition {
            format: 1,
            meas_info_list: meas_names
                .iter()
                .map(|n| MeasInfo {
                    meas_name: (*n).to_string(),
                    labels: vec!["noLabel".to_string()],
                })
                .collect(),
            granul_period_ms,
            ric_style_type: 1,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::ACTION_DEFINITION);
        w.u8(self.format);
        w.u32(self.meas_info_list.len() as u32);
        for mi in &self.meas_info_list {
            w.str(&mi.meas_name);
            w.u32(mi.labels.len() as u32);
            for l in &mi.labels {
                w.str(l);
            }
        }
        w.u64(self.granul_period_ms);
        w.i64(self.ric_style_type);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::ACTION_DEFINITION)?;
        let format = r.u8()?;
        let n = r.u32()? as usize;
        let mut meas_info_list = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let meas_name = r.str()?;
            let ln = r.u32()? as usize;
            let mut labels = Vec::with_capacity(ln.min(1024));
            for _ in 0..ln {
                labels.push(r.str()?);
            }
            meas_info_list.push(MeasInfo { meas_name, labels });
        }
        let out = ActionDefinition {
            format,
            meas_info_list,
            granul_period_ms: r.u64()?,
            ric_style_type: r.i64()?,
        };
        r.finish()?;
        Ok(out)
    }
}

/// How a node must treat a subscription action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionType {
    Report,
    Insert,
    Policy,
}

impl ActionType {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionType::Report => "report",
            ActionType::Insert => "insert",
            ActionType::Policy => "policy",
        }
    }

    pub fn from_str_loose(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "report" => Some(ActionType::Report),
            "insert" => Some(ActionType::Insert),
            "policy" => Some(ActionType::Policy),
            _ => None,
        }
    }

    fn code(self) -> u8 {
        match self {
            ActionType::Report => 0,
            ActionType::Insert => 1,
            ActionType::Policy => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ActionType::Report),
            1 => Some(ActionType::Insert),
            2 => Some(ActionType::Policy),
            _ => None,
        }
    }
}

/// Directive for handling subsequent messages of an action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsequentAction {
    pub subsequent_action_type: String,
    pub time_to_wait: String,
}

impl SubsequentAction {
    /// The common "keep going, wait 10 ms" directive.
    pub fn continue_w10ms() -> Self {
        SubsequentAction {
            subsequent_action_type: "continue".to_string(),
            time_to_wait: "w10ms".to_string(),
        }
    }
}

/// One action inside a subscription setup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubAction {
    pub action_id: i64,
    pub action_type: ActionType,
    pub definition: ActionDefinition,
    pub subsequent: Option<SubsequentAction>,
}

/// Subscription setup carried to a node (payload of `RIC_SUB_REQ`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSetup {
    pub subid: i32,
    pub ran_function_id: u32,
    pub trigger: EventTrigger,
    pub actions: Vec<SubAction>,
}

impl SubSetup {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::SUB_SETUP);
        w.i32(self.subid);
        w.u32(self.ran_function_id);
        w.bytes(&self.trigger.encode());
        w.u32(self.actions.len() as u32);
        for a in &self.actions {
            w.i64(a.action_id);
            w.u8(a.action_type.code());
            w.bytes(&a.definition.encode());
            match &a.subsequent {
                None => w.u8(0),
                Some(s) => {
                    w.u8(1);
                    w.str(&s.subsequent_action_type);
                    w.str(&s.time_to_wait);
                }
            }
        }
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::SUB_SETUP)?;
        let subid = r.i32()?;
        let ran_function_id = r.u32()?;
        let trigger_bytes = r.bytes()?;
        let trigger = EventTrigger::decode(&trigger_bytes)?;
        let n = r.u32()? as usize;
        let mut actions = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let action_id = r.i64()?;
            let type_pos = r.pos;
            let code = r.u8()?;
            let action_type = ActionType::from_code(code).ok_or(DecodeError {
                position: type_pos,
                reason: format!("unknown action type code {code}"),
            })?;
            let def_bytes = r.bytes()?;
            let definition = ActionDefinition::decode(&def_bytes)?;
            let subsequent = match r.u8()? {
                0 => None,
                1 => Some(SubsequentAction {
                    subsequent_action_type: r.str()?,
                    time_to_wait: r.str()?,
                }),
                other => {
                    return Err(DecodeError {
                        position: r.pos - 1,
                        reason: format!("bad option marker {other}"),
                    })
                }
            };
            actions.push(SubAction {
                action_id,
                action_type,
                definition,
                subsequent,
            });
        }
        let out = SubSetup {
            subid,
            ran_function_id,
            trigger,
            actions,
        };
        r.finish()?;
        Ok(out)
    }
}

/// Node's answer to a setup (payload of `RIC_SUB_RESP`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSetupResult {
    pub subid: i32,
    pub accepted: Vec<i64>,
    pub failed: Vec<i64>,
}

impl SubSetupResult {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::SUB_RESULT);
        w.i32(self.subid);
        w.u32(self.accepted.len() as u32);
        for a in &self.accepted {
            w.i64(*a);
        }
        w.u32(self.failed.len() as u32);
        for f in &self.failed {
            w.i64(*f);
        }
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::SUB_RESULT)?;
        let subid = r.i32()?;
        let na = r.u32()? as usize;
        let mut accepted = Vec::with_capacity(na.min(1024));
        for _ in 0..na {
            accepted.push(r.i64()?);
        }
        let nf = r.u32()? as usize;
        let mut failed = Vec::with_capacity(nf.min(1024));
        for _ in 0..nf {
            failed.push(r.i64()?);
        }
        let out = SubSetupResult {
            subid,
            accepted,
            failed,
        };
        r.finish()?;
        Ok(out)
    }
}

/// Subscription teardown toward a node (payload of `RIC_SUB_DEL_REQ`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubDelete {
    pub subid: i32,
}

impl SubDelete {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::SUB_DELETE);
        w.i32(self.subid);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::SUB_DELETE)?;
        let out = SubDelete { subid: r.i32()? };
        r.finish()?;
        Ok(out)
    }
}

/// Node's answer to a teardown (payload of `RIC_SUB_DEL_RESP`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubDeleteResult {
    pub subid: i32,
    pub removed: bool,
}

impl SubDeleteResult {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::SUB_DELETE_RESULT);
        w.i32(self.subid);
        w.u8(self.removed as u8);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::SUB_DELETE_RESULT)?;
        let out = SubDeleteResult {
            subid: r.i32()?,
            removed: r.u8()? != 0,
        };
        r.finish()?;
        Ok(out)
    }
}

/// Header of an emitted indication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicationHeader {
    /// Start of the collection window, simulated milliseconds.
    pub collection_start_ms: u64,
    /// Inventory name of the emitting node.
    pub meid: String,
}

/// One measurement series inside an indication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasSeries {
    pub meas_name: String,
    /// Samples collected in the window; empty when the source had none.
    pub values: Vec<f64>,
}

/// Telemetry report (payload of `RIC_INDICATION`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicIndication {
    pub header: IndicationHeader,
    pub granul_period_ms: u64,
    pub series: Vec<MeasSeries>,
}

impl RicIndication {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::INDICATION);
        w.u64(self.header.collection_start_ms);
        w.str(&self.header.meid);
        w.u64(self.granul_period_ms);
        w.u32(self.series.len() as u32);
        for s in &self.series {
            w.str(&s.meas_name);
            w.u32(s.values.len() as u32);
            for v in &s.values {
                w.f64(*v);
            }
        }
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::INDICATION)?;
        let header = IndicationHeader {
            collection_start_ms: r.u64()?,
            meid: r.str()?,
        };
        let granul_period_ms = r.u64()?;
        let n = r.u32()? as usize;
        let mut series = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let meas_name = r.str()?;
            let vn = r.u32()? as usize;
            let mut values = Vec::with_capacity(vn.min(4096));
            for _ in 0..vn {
                values.push(r.f64()?);
            }
            series.push(MeasSeries { meas_name, values });
        }
        let out = RicIndication {
            header,
            granul_period_ms,
            series,
        };
        r.finish()?;
        Ok(out)
    }
}

/// Control command toward a node (payload of `RIC_CONTROL_REQ`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlRequest {
    pub ran_function_id: u32,
    pub header: Vec<u8>,
    pub message: Vec<u8>,
    pub ack_requested: bool,
}

impl ControlRequest {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::CONTROL_REQUEST);
        w.u32(self.ran_function_id);
        w.bytes(&self.header);
        w.bytes(&self.message);
        w.u8(self.ack_requested as u8);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::CONTROL_REQUEST)?;
        let out = ControlRequest {
            ran_function_id: r.u32()?,
            header: r.bytes()?,
            message: r.bytes()?,
            ack_requested: r.u8()? != 0,
        };
        r.finish()?;
        Ok(out)
    }
}

/// Node's answer to a control command (`RIC_CONTROL_ACK` / `_FAILURE`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlOutcome {
    pub success: bool,
    pub cause: String,
}

impl ControlOutcome {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new(tags::CONTROL_OUTCOME);
        w.u8(self.success as u8);
        w.str(&self.cause);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf, tags::CONTROL_OUTCOME)?;
        let out = ControlOutcome {
            success: r.u8()? != 0,
            cause: r.str()?,
        };
        r.finish()?;
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Measurement sources
// ---------------------------------------------------------------------------

/// One timestamped sample set in a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Simulated instant of the sample, milliseconds.
    pub t: u64,
    pub measurements: BTreeMap<String, f64>,
}

/// Where a node's measurement values come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceSource {
    /// No data: every window yields explicitly empty series.
    Silent,
    /// Deterministic pseudo-random values, one sample per second boundary.
    Synthetic { seed: u64 },
    /// Replay of recorded samples (the trace-file analog).
    File { records: Vec<TraceRecord> },
}

impl TraceSource {
    /// Parse the JSON trace-file format: a list of
    /// `{"t": <ms>, "measurements": {"<name>": <value>}}` records.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let records: Vec<TraceRecord> = serde_json::from_str(text)?;
        Ok(TraceSource::File { records })
    }

    /// Samples of `meas_name` in the window `[start_ms, end_ms)`.
    pub fn sample(&self, meas_name: &str, start_ms: u64, end_ms: u64) -> Vec<f64> {
        match self {
            TraceSource::Silent => Vec::new(),
            TraceSource::File { records } => records
                .iter()
                .filter(|r| r.t >= start_ms && r.t < end_ms)
                .filter_map(|r| r.measurements.get(meas_name).copied())
                .collect(),
            TraceSource::Synthetic { seed } => {
                use rand::{Rng, SeedableRng};
                use sha2::{Digest, Sha256};
                let mut out = Vec::new();
                // One sample per whole simulated second inside the window.
                let mut t = start_ms.div_ceil(1000) * 1000;
                while t < end_ms.max(start_ms + 1) {
                    let digest = Sha256::digest(
                        format!("{seed}|{meas_name}|{t}").as_bytes(),
                    );
                    let sample_seed = u64::from_be_bytes(digest[..8].try_into().unwrap());
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sample_seed);
                    out.push((rng.gen_range(0..100_000) as f64) / 100.0);
                    t += 1000;
                    if t == 0 {
                        break;
                    }
                }
                out
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Simulated node state
// ---------------------------------------------------------------------------

/// Static description of a simulated gNodeB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub plmn_id: String,
    pub nb_id: String,
    /// Measurements the node's KPM function supports.
    #[serde(default = "default_meas_names")]
    pub meas_names: Vec<String>,
    #[serde(default = "default_trace")]
    pub trace: TraceSource,
    /// RAN function id of the KPM model on this node.
    #[serde(default = "default_ran_function_id")]
    pub ran_function_id: u32,
}

fn default_meas_names() -> Vec<String> {
    vec![DEFAULT_MEAS_NAME.to_string()]
}

fn default_trace() -> TraceSource {
    TraceSource::Synthetic { seed: 1 }
}

fn default_ran_function_id() -> u32 {
    DEFAULT_RAN_FUNCTION_ID
}

impl NodeConfig {
    pub fn new(plmn_id: impl Into<String>, nb_id: impl Into<String>) -> Self {
        NodeConfig {
            plmn_id: plmn_id.into(),
            nb_id: nb_id.into(),
            meas_names: default_meas_names(),
            trace: default_trace(),
            ran_function_id: DEFAULT_RAN_FUNCTION_ID,
        }
    }
}

/// One armed subscription on a node.
#[derive(Debug)]
pub struct ArmedSubscription {
    pub trigger: EventTrigger,
    pub actions: Vec<SubAction>,
    /// Pending report timer, when any action is REPORT-typed.
    pub timer: Option<TimerId>,
}

/// Runtime state of one simulated node.
#[derive(Debug)]
pub struct SimNode {
    pub config: NodeConfig,
    pub inventory_name: String,
    pub connected: bool,
    /// When false the node swallows requests without answering — the fault
    /// injection knob behind retry/timeout tests.
    pub responsive: bool,
    pub armed: BTreeMap<i32, ArmedSubscription>,
    /// Total indications this node has emitted.
    pub emitted: u64,
}

impl SimNode {
    pub fn new(config: NodeConfig) -> Self {
        let inventory_name = crate::rnib::inventory_name(&config.plmn_id, &config.nb_id);
        SimNode {
            config,
            inventory_name,
            connected: true,
            responsive: true,
            armed: BTreeMap::new(),
            emitted: 0,
        }
    }

    /// R-NIB record for this node.
    pub fn nodeb_info(&self) -> crate::rnib::NodebInfo {
        crate::rnib::NodebInfo {
            inventory_name: self.inventory_name.clone(),
            global_nb_id: crate::rnib::GlobalNbId {
                plmn_id: self.config.plmn_id.clone(),
                nb_id: self.config.nb_id.clone(),
            },
            node_type: "GNB".to_string(),
            connection_status: if self.connected {
                "CONNECTED".to_string()
            } else {
                "DISCONNECTED".to_string()
            },
            ran_functions: vec![crate::rnib::RanFunction {
                ran_function_id: self.config.ran_function_id,
                oid: KPM_OID.to_string(),
                definition: serde_json::json!({
                    "reportStyles": [{
                        "ric_style_type": 1,
                        "meas_names": self.config.meas_names,
                    }]
                }),
                revision: 1,
            }],
        }
    }

    /// Count of armed actions across all subscriptions (the node-side
    /// footprint a clean teardown must drive to zero).
    pub fn active_actions(&self) -> usize {
        self.armed.values().map(|a| a.actions.len()).sum()
    }

    /// Apply a setup: arm the subscription and report which actions were
    /// accepted. Unsupported measurement names fail their action.
    pub fn apply_setup(&mut self, setup: &SubSetup) -> SubSetupResult {
        let mut accepted = Vec::new();
        let mut failed = Vec::new();
        let mut armed_actions = Vec::new();
        for a in &setup.actions {
            let supported = a
                .definition
                .meas_info_list
                .iter()
                .all(|mi| self.config.meas_names.iter().any(|m| m == &mi.meas_name));
            if supported && setup.ran_function_id == self.config.ran_function_id {
                accepted.push(a.action_id);
                armed_actions.push(a.clone());
            } else {
                failed.push(a.action_id);
            }
        }
        if !armed_actions.is_empty() {
            self.armed.insert(
                setup.subid,
                ArmedSubscription {
                    trigger: setup.trigger.clone(),
                    actions: armed_actions,
                    timer: None,
                },
            );
        }
        SubSetupResult {
            subid: setup.subid,
            accepted,
            failed,
        }
    }

    /// Disarm a subscription; returns whether it existed (its report timer,
    /// if any, is handed back for cancellation).
    pub fn apply_delete(&mut self, subid: i32) -> (bool, Option<TimerId>) {
        match self.armed.remove(&subid) {
            Some(armed) => (true, armed.timer),
            None => (false, None),
        }
    }

    /// Build the indication for the window ending at `now_ms`.
    pub fn build_indication(&self, subid: i32, now_ms: u64) -> Option<RicIndication> {
        let armed = self.armed.get(&subid)?;
        let granul = armed
            .actions
            .iter()
            .map(|a| a.definition.granul_period_ms)
            .max()
            .unwrap_or(armed.trigger.reporting_period_ms)
            .max(1);
        let start = now_ms.saturating_sub(granul);
        let mut series = Vec::new();
        for action in &armed.actions {
            if action.action_type != ActionType::Report {
                continue;
            }
            for mi in &action.definition.meas_info_list {
                series.push(MeasSeries {
                    meas_name: mi.meas_name.clone(),
                    values: self.config.trace.sample(&mi.meas_name, start, now_ms),
                });
            }
        }
        Some(RicIndication {
            header: IndicationHeader {
                collection_start_ms: start,
                meid: self.inventory_name.clone(),
            },
            granul_period_ms: granul,
            series,
        })
    }

    /// Apply a control command. Succeeds when the node is connected and the
    /// RAN function matches.
    pub fn apply_control(&mut self, req: &ControlRequest) -> ControlOutcome {
        if !self.connected {
            return ControlOutcome {
                success: false,
                cause: "node disconnected".to_string(),
            };
        }
        if req.ran_function_id != self.config.ran_function_id {
            return ControlOutcome {
                success: false,
                cause: format!("unknown RAN function {}", req.ran_function_id),
            };
        }
        ControlOutcome {
            success: true,
            cause: String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_setup() -> SubSetup {
        SubSetup {
            subid: 7,
            ran_function_id: DEFAULT_RAN_FUNCTION_ID,
            trigger: EventTrigger::periodic(1000),
            actions: vec![SubAction {
                action_id: 1,
                action_type: ActionType::Report,
                definition: ActionDefinition::format1(&[DEFAULT_MEAS_NAME], 1000),
                subsequent: Some(SubsequentAction::continue_w10ms()),
            }],
        }
    }

    #[test]
    fn periodic_trigger_defaults() {
        let t = EventTrigger::periodic(1000);
        assert_eq!(t.format, 1);
        assert_eq!(t.reporting_period_ms, 1000);
    }

    #[test]
    fn format1_action_definition_shape() {
        let d = ActionDefinition::format1(&[DEFAULT_MEAS_NAME], 1000);
        assert_eq!(d.format, 1);
        assert_eq!(d.granul_period_ms, 1000);
        assert_eq!(d.ric_style_type, 1);
        assert_eq!(d.meas_info_list.len(), 1);
        assert_eq!(d.meas_info_list[0].meas_name, DEFAULT_MEAS_NAME);
        assert_eq!(d.meas_info_list[0].labels, vec!["noLabel"]);
    }

    #[test]
    fn wrong_version_and_tag_are_rejected_with_position() {
        let mut buf = EventTrigger::periodic(5).encode();
        buf[0] = 9;
        let err = EventTrigger::decode(&buf).unwrap_err();
        assert_eq!(err.position, 0);
        assert!(err.reason.contains("version"));

        let buf = EventTrigger::periodic(5).encode();
        let err = ActionDefinition::decode(&buf).unwrap_err();
        assert_eq!(err.position, 1);
        assert!(err.reason.contains("tag"));
    }

    #[test]
    fn truncated_payload_reports_position() {
        let buf = sample_setup().encode();
        let err = SubSetup::decode(&buf[..buf.len() - 3]).unwrap_err();
        assert!(err.reason.contains("truncated") || err.reason.contains("need"));
        assert!(err.position > 0);
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut buf = SubDelete { subid: 3 }.encode();
        buf.push(0xff);
        let err = SubDelete::decode(&buf).unwrap_err();
        assert!(err.reason.contains("trailing"));
    }

    #[test]
    fn file_trace_samples_window() {
        let src = TraceSource::from_json(
            r#"[
                {"t": 500,  "measurements": {"a": 1.0, "b": 9.0}},
                {"t": 1500, "measurements": {"a": 2.0}},
                {"t": 2500, "measurements": {"a": 3.0}}
            ]"#,
        )
        .unwrap();
        assert_eq!(src.sample("a", 0, 2000), vec![1.0, 2.0]);
        assert_eq!(src.sample("a", 2000, 4000), vec![3.0]);
        assert_eq!(src.sample("b", 1000, 4000), Vec::<f64>::new());
        assert_eq!(src.sample("missing", 0, 9000), Vec::<f64>::new());
    }

    #[test]
    fn synthetic_trace_is_deterministic_and_seed_sensitive() {
        let a = TraceSource::Synthetic { seed: 1 };
        let b = TraceSource::Synthetic { seed: 2 };
        let s1 = a.sample("x", 0, 5000);
        assert_eq!(s1.len(), 5, "one sample per second boundary in (0, 5000)");
        assert_eq!(s1, a.sample("x", 0, 5000));
        assert_ne!(s1, b.sample("x", 0, 5000));
        assert_ne!(s1, a.sample("y", 0, 5000));
    }

    #[test]
    fn silent_trace_yields_empty_series() {
        let node = SimNode::new(NodeConfig {
            trace: TraceSource::Silent,
            ..NodeConfig::new("734", "733")
        });
        let mut node = node;
        node.apply_setup(&sample_setup());
        let ind = node.build_indication(7, 1000).unwrap();
        assert_eq!(ind.series.len(), 1);
        assert_eq!(ind.series[0].meas_name, DEFAULT_MEAS_NAME);
        assert!(ind.series[0].values.is_empty(), "explicitly empty, not omitted");
    }

    #[test]
    fn node_setup_arms_and_rejects_unsupported() {
        let mut node = SimNode::new(NodeConfig::new("734", "733"));
        let res = node.apply_setup(&sample_setup());
        assert_eq!(res.accepted, vec![1]);
        assert!(res.failed.is_empty());
        assert_eq!(node.active_actions(), 1);

        let mut bad = sample_setup();
        bad.subid = 8;
        bad.actions[0].definition = ActionDefinition::format1(&["No.Such.Meas"], 1000);
        let res = node.apply_setup(&bad);
        assert_eq!(res.failed, vec![1]);
        assert!(res.accepted.is_empty());
        assert_eq!(node.active_actions(), 1, "failed action did not arm");

        let (removed, _) = node.apply_delete(7);
        assert!(removed);
        assert_eq!(node.active_actions(), 0);
        let (removed_again, _) = node.apply_delete(7);
        assert!(!removed_again);
    }

    #[test]
    fn wrong_ran_function_fails_setup() {
        let mut node = SimNode::new(NodeConfig::new("734", "733"));
        let mut setup = sample_setup();
        setup.ran_function_id = 77;
        let res = node.apply_setup(&setup);
        assert_eq!(res.failed, vec![1]);
    }

    #[test]
    fn indication_covers_the_closing_window() {
        let mut node = SimNode::new(NodeConfig {
            trace: TraceSource::File {
                records: vec![
                    TraceRecord {
                        t: 200,
                        measurements: [(DEFAULT_MEAS_NAME.to_string(), 4.5)].into(),
                    },
                    TraceRecord {
                        t: 1200,
                        measurements: [(DEFAULT_MEAS_NAME.to_string(), 6.5)].into(),
                    },
                ],
            },
            ..NodeConfig::new("734", "733")
        });
        node.apply_setup(&sample_setup());
        let ind = node.build_indication(7, 1000).unwrap();
        assert_eq!(ind.header.collection_start_ms, 0);
        assert_eq!(ind.header.meid, node.inventory_name);
        assert_eq!(ind.series[0].values, vec![4.5]);
        let ind = node.build_indication(7, 2000).unwrap();
        assert_eq!(ind.series[0].values, vec![6.5]);
    }

    #[test]
    fn control_outcomes() {
        let mut node = SimNode::new(NodeConfig::new("734", "733"));
        let ok = node.apply_control(&ControlRequest {
            ran_function_id: DEFAULT_RAN_FUNCTION_ID,
            header: vec![1],
            message: vec![2],
            ack_requested: true,
        });
        assert!(ok.success);
        let bad = node.apply_control(&ControlRequest {
            ran_function_id: 9,
            header: vec![],
            message: vec![],
            ack_requested: true,
        });
        assert!(!bad.success);
        assert!(bad.cause.contains("RAN function"));
        node.connected = false;
        let down = node.apply_control(&ControlRequest {
            ran_function_id: DEFAULT_RAN_FUNCTION_ID,
            header: vec![],
            message: vec![],
            ack_requested: true,
        });
        assert!(!down.success);
    }

    #[test]
    fn nodeb_info_lists_the_kpm_function() {
        let node = SimNode::new(NodeConfig::new("734", "733"));
        let info = node.nodeb_info();
        assert!(info.inventory_name.starts_with("gnb_734_733_"));
        assert_eq!(info.ran_functions.len(), 1);
        assert_eq!(info.ran_functions[0].ran_function_id, 200);
        assert_eq!(info.ran_functions[0].oid, KPM_OID);
        assert_eq!(info.connection_status, "CONNECTED");
    }

    mod codec_properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_trigger() -> impl Strategy<Value = EventTrigger> {
            (1u8..3, 0u64..10_000_000).prop_map(|(format, p)| EventTrigger {
                format,
                reporting_period_ms: p,
            })
        }

        fn arb_definition() -> impl Strategy<Value = ActionDefinition> {
            (
                1u8..3,
                proptest::collection::vec(
                    ("[A-Za-z0-9._-]{1,24}", proptest::collection::vec("[a-zA-Z]{1,8}", 0..3))
                        .prop_map(|(meas_name, labels)| MeasInfo { meas_name, labels }),
                    0..4,
                ),
                1u64..1_000_000,
                -5i64..50,
            )
                .prop_map(|(format, meas_info_list, granul, style)| ActionDefinition {
                    format,
                    meas_info_list,
                    granul_period_ms: granul,
                    ric_style_type: style,
                })
        }

        fn arb_setup() -> impl Strategy<Value = SubSetup> {
            (
                -1i32..1000,
                0u32..500,
                arb_trigger(),
                proptest::collection::vec(
                    (
                        0i64..50,
                        prop_oneof![
                            Just(ActionType::Report),
                            Just(ActionType::Insert),
                            Just(ActionType::Policy)
                        ],
                        arb_definition(),
                        proptest::option::of(("[a-z]{1,8}", "[a-z0-9]{1,6}").prop_map(
                            |(a, t)| SubsequentAction {
                                subsequent_action_type: a,
                                time_to_wait: t,
                            }
                        )),
                    )
                        .prop_map(|(action_id, action_type, definition, subsequent)| SubAction {
                            action_id,
                            action_type,
                            definition,
                            subsequent,
                        }),
                    0..4,
                ),
            )
                .prop_map(|(subid, rf, trigger, actions)| SubSetup {
                    subid,
                    ran_function_id: rf,
                    trigger,
                    actions,
                })
        }

        fn arb_indication() -> impl Strategy<Value = RicIndication> {
            (
                0u64..10_000_000,
                "[a-z0-9_]{1,20}",
                1u64..100_000,
                proptest::collection::vec(
                    (
                        "[A-Za-z0-9._-]{1,24}",
                        proptest::collection::vec(-1.0e12f64..1.0e12, 0..6),
                    )
                        .prop_map(|(meas_name, values)| MeasSeries { meas_name, values }),
                    0..4,
                ),
            )
                .prop_map(|(start, meid, granul, series)| RicIndication {
                    header: IndicationHeader {
                        collection_start_ms: start,
                        meid,
                    },
                    granul_period_ms: granul,
                    series,
                })
        }

        proptest! {
            #[test]
            fn trigger_round_trips(t in arb_trigger()) {
                prop_assert_eq!(EventTrigger::decode(&t.encode()).unwrap(), t);
            }

            #[test]
            fn definition_round_trips(d in arb_definition()) {
                prop_assert_eq!(ActionDefinition::decode(&d.encode()).unwrap(), d);
            }

            #[test]
            fn setup_round_trips(s in arb_setup()) {
                prop_assert_eq!(SubSetup::decode(&s.encode()).unwrap(), s);
            }

            #[test]
            fn indication_round_trips(i in arb_indication()) {
                prop_assert_eq!(RicIndication::decode(&i.encode()).unwrap(), i);
            }

            #[test]
            fn setup_result_round_trips(
                subid in -1i32..1000,
                accepted in proptest::collection::vec(0i64..100, 0..5),
                failed in proptest::collection::vec(0i64..100, 0..5),
            ) {
                let r = SubSetupResult { subid, accepted, failed };
                prop_assert_eq!(SubSetupResult::decode(&r.encode()).unwrap(), r.clone());
            }

            #[test]
            fn control_round_trips(
                rf in 0u32..1000,
                header in proptest::collection::vec(any::<u8>(), 0..32),
                message in proptest::collection::vec(any::<u8>(), 0..32),
                ack in any::<bool>(),
            ) {
                let c = ControlRequest { ran_function_id: rf, header, message, ack_requested: ack };
                prop_assert_eq!(ControlRequest::decode(&c.encode()).unwrap(), c.clone());
            }
        }
    }
}
