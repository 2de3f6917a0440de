//! Message envelopes and the message-type registry.
//!
//! Every payload that crosses the bus carries a numeric message type. The
//! [`MtypeRegistry`] is the authoritative bijection between symbolic names
//! and codes; both directions must stay unique. Platform components and
//! applications share one registry per simulator instance, and applications
//! may register additional custom types at runtime.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seeded message-type codes.
///
/// The 12xxx subscription/indication/control family and the 2001x A1 family
/// use the code points of the public O-RAN RMR message-type table, as does
/// the administrative health-check pair (100/101). Application-defined codes
/// live at 30000 and above so they can never collide with platform traffic;
/// 30001/30002 are seeded for the bundled ping/pong demo pair.
pub mod mtypes {
    pub const RIC_HEALTH_CHECK_REQ: u32 = 100;
    pub const RIC_HEALTH_CHECK_RESP: u32 = 101;
    /// Subscription setup toward a RAN node.
    pub const RIC_SUB_REQ: u32 = 12040;
    pub const RIC_SUB_RESP: u32 = 12041;
    pub const RIC_SUB_DEL_REQ: u32 = 12042;
    pub const RIC_SUB_DEL_RESP: u32 = 12043;
    /// Telemetry report emitted by a RAN node.
    pub const RIC_INDICATION: u32 = 12050;
    pub const RIC_CONTROL_REQ: u32 = 12060;
    pub const RIC_CONTROL_ACK: u32 = 12061;
    pub const RIC_CONTROL_FAILURE: u32 = 12062;
    /// Policy instance pushed from the A1 mediator to consuming apps.
    pub const A1_POLICY_REQ: u32 = 20010;
    /// Policy query from an app to the A1 mediator.
    pub const A1_POLICY_QUERY: u32 = 20011;
    /// Policy acknowledgement from an app back to the A1 mediator.
    pub const A1_POLICY_RESP: u32 = 20012;
    pub const PING_MSG: u32 = 30001;
    pub const PONG_MSG: u32 = 30002;

    /// Name/code pairs seeded into every fresh registry.
    pub const SEED: &[(&str, u32)] = &[
        ("RIC_HEALTH_CHECK_REQ", RIC_HEALTH_CHECK_REQ),
        ("RIC_HEALTH_CHECK_RESP", RIC_HEALTH_CHECK_RESP),
        ("RIC_SUB_REQ", RIC_SUB_REQ),
        ("RIC_SUB_RESP", RIC_SUB_RESP),
        ("RIC_SUB_DEL_REQ", RIC_SUB_DEL_REQ),
        ("RIC_SUB_DEL_RESP", RIC_SUB_DEL_RESP),
        ("RIC_INDICATION", RIC_INDICATION),
        ("RIC_CONTROL_REQ", RIC_CONTROL_REQ),
        ("RIC_CONTROL_ACK", RIC_CONTROL_ACK),
        ("RIC_CONTROL_FAILURE", RIC_CONTROL_FAILURE),
        ("A1_POLICY_REQ", A1_POLICY_REQ),
        ("A1_POLICY_QUERY", A1_POLICY_QUERY),
        ("A1_POLICY_RESP", A1_POLICY_RESP),
        ("PING_MSG", PING_MSG),
        ("PONG_MSG", PONG_MSG),
    ];
}

/// Delivery error numbers recorded in receipts and message envelopes.
pub mod errno {
    pub const OK: i32 = 0;
    /// No routing-table entry matched the message key.
    pub const NO_ROUTE: i32 = 1;
    /// A route matched but named an endpoint that is not registered.
    pub const NO_ENDPOINT: i32 = 2;
    /// The destination mailbox was full; the message was dropped.
    pub const QUEUE_FULL: i32 = 3;
    /// Payload exceeded the sender's configured maximum size.
    pub const TOO_LARGE: i32 = 4;
    /// The sending application has not completed platform registration.
    pub const NOT_REGISTERED: i32 = 5;
}

/// Exact diagnostic for an endpoint name with no registered mailbox.
pub const ERR_NAME_DOES_NOT_RESOLVE: &str = "Name does not resolve";

/// Exact diagnostic for a message key with no routing-table entry.
pub fn err_no_route(mtype: u32) -> String {
    format!("No route table entry for mtype={mtype}")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("message type name already registered: {0}")]
    DuplicateName(String),
    #[error("message type code already registered: {0}")]
    DuplicateCode(u32),
    #[error("unknown message type: {0}")]
    UnknownMtype(String),
}

/// One symbolic message type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageType {
    pub name: String,
    pub code: u32,
}

/// Bijective name/code table for message types.
#[derive(Debug, Clone, Default)]
pub struct MtypeRegistry {
    by_name: std::collections::HashMap<String, u32>,
    by_code: std::collections::HashMap<u32, String>,
}

impl MtypeRegistry {
    /// Empty registry with no entries at all.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry pre-populated with the platform seed table.
    pub fn seeded() -> Self {
        let mut r = Self::empty();
        for (name, code) in mtypes::SEED {
            r.register(name, *code)
                .expect("seed table has no duplicates");
        }
        r
    }

    /// Add a name/code pair. Both the name and the code must be new.
    pub fn register(&mut self, name: &str, code: u32) -> Result<(), RegistryError> {
        if self.by_name.contains_key(name) {
            return Err(RegistryError::DuplicateName(name.to_string()));
        }
        if self.by_code.contains_key(&code) {
            return Err(RegistryError::DuplicateCode(code));
        }
        self.by_name.insert(name.to_string(), code);
        self.by_code.insert(code, name.to_string());
        Ok(())
    }

    pub fn code_of(&self, name: &str) -> Result<u32, RegistryError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| RegistryError::UnknownMtype(name.to_string()))
    }

    pub fn name_of(&self, code: u32) -> Result<&str, RegistryError> {
        self.by_code
            .get(&code)
            .map(|s| s.as_str())
            .ok_or_else(|| RegistryError::UnknownMtype(code.to_string()))
    }

    pub fn contains_code(&self, code: u32) -> bool {
        self.by_code.contains_key(&code)
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    /// All entries, sorted by code for stable display.
    pub fn entries(&self) -> Vec<MessageType> {
        let mut v: Vec<MessageType> = self
            .by_code
            .iter()
            .map(|(code, name)| MessageType {
                name: name.clone(),
                code: *code,
            })
            .collect();
        v.sort_by_key(|t| t.code);
        v
    }
}

/// Delivery state stamped on an envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageStatus {
    Ok,
    Error,
}

/// The unit of transport on the bus.
///
/// A message addresses destinations indirectly through its `(mtype, subid)`
/// key — the routing table decides where it lands — except for replies,
/// which carry an explicit `direct_dest` and bypass the table (the
/// return-to-sender path).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    /// Message-type code; the primary routing key component.
    pub mtype: u32,
    /// Subscription id qualifier; -1 means "no specific subscription".
    pub subid: i32,
    /// Opaque payload bytes.
    pub payload: Vec<u8>,
    /// Managed-entity (RAN node) id, used by `%meid` ownership routes.
    pub meid: Option<String>,
    /// Bus-assigned monotone transaction id; 0 until first sent.
    pub transaction_id: u64,
    pub status: MessageStatus,
    /// One of the [`errno`] constants.
    pub errno: i32,
    /// Endpoint name of the sender; filled in by the bus at send time.
    pub source: String,
    /// Simulated send instant in milliseconds; filled in by the bus.
    pub sent_at: u64,
    /// When set, deliver straight to this endpoint instead of routing.
    pub direct_dest: Option<String>,
}

impl Message {
    pub fn new(mtype: u32, payload: impl Into<Vec<u8>>) -> Self {
        Message {
            mtype,
            subid: -1,
            payload: payload.into(),
            meid: None,
            transaction_id: 0,
            status: MessageStatus::Ok,
            errno: errno::OK,
            source: String::new(),
            sent_at: 0,
            direct_dest: None,
        }
    }

    pub fn with_subid(mut self, subid: i32) -> Self {
        self.subid = subid;
        self
    }

    pub fn with_meid(mut self, meid: impl Into<String>) -> Self {
        self.meid = Some(meid.into());
        self
    }

    pub fn payload_len(&self) -> usize {
        self.payload.len()
    }

    /// Payload interpreted as UTF-8 (lossy).
    pub fn payload_str(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.payload)
    }

    /// Compact JSON view of the envelope for handlers and logs.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "mtype": self.mtype,
            "subid": self.subid,
            "payload_len": self.payload_len(),
            "payload": self.payload_str(),
            "meid": self.meid,
            "transaction_id": self.transaction_id,
            "source": self.source,
            "sent_at": self.sent_at,
        })
    }
}

/// Build a reply to `original`: the reply is addressed directly back to the
/// original sender, keeps the transaction id, subscription id, and meid, and
/// carries the new payload. `new_mtype`, when given, must exist in the
/// registry; `None` keeps the original message type.
pub fn make_reply(
    registry: &MtypeRegistry,
    original: &Message,
    new_payload: impl Into<Vec<u8>>,
    new_mtype: Option<u32>,
) -> Result<Message, RegistryError> {
    let mtype = match new_mtype {
        Some(code) => {
            if !registry.contains_code(code) {
                return Err(RegistryError::UnknownMtype(code.to_string()));
            }
            code
        }
        None => original.mtype,
    };
    Ok(Message {
        mtype,
        subid: original.subid,
        payload: new_payload.into(),
        meid: original.meid.clone(),
        transaction_id: original.transaction_id,
        status: MessageStatus::Ok,
        errno: errno::OK,
        source: String::new(),
        sent_at: 0,
        direct_dest: Some(original.source.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seed_has_expected_platform_codes() {
        let r = MtypeRegistry::seeded();
        assert_eq!(r.code_of("RIC_SUB_REQ").unwrap(), 12040);
        assert_eq!(r.code_of("RIC_INDICATION").unwrap(), 12050);
        assert_eq!(r.code_of("A1_POLICY_QUERY").unwrap(), 20011);
        assert_eq!(r.code_of("A1_POLICY_RESP").unwrap(), 20012);
        assert_eq!(r.name_of(20010).unwrap(), "A1_POLICY_REQ");
        assert_eq!(r.name_of(100).unwrap(), "RIC_HEALTH_CHECK_REQ");
        assert_eq!(r.name_of(101).unwrap(), "RIC_HEALTH_CHECK_RESP");
        assert_eq!(r.name_of(30001).unwrap(), "PING_MSG");
        assert_eq!(r.name_of(30002).unwrap(), "PONG_MSG");
        assert_eq!(r.len(), mtypes::SEED.len());
    }

    #[test]
    fn custom_registration_on_fresh_registry() {
        let mut r = MtypeRegistry::seeded();
        r.register("MY_MTYPE", 30010).unwrap();
        assert_eq!(r.code_of("MY_MTYPE").unwrap(), 30010);
        assert_eq!(r.name_of(30010).unwrap(), "MY_MTYPE");
    }

    #[test]
    fn duplicate_name_and_code_are_rejected() {
        let mut r = MtypeRegistry::seeded();
        assert_eq!(
            r.register("PING_MSG", 31000),
            Err(RegistryError::DuplicateName("PING_MSG".into()))
        );
        assert_eq!(
            r.register("OTHER", 30001),
            Err(RegistryError::DuplicateCode(30001))
        );
        // Failed registrations leave the registry untouched.
        assert_eq!(r.code_of("PING_MSG").unwrap(), 30001);
        assert!(r.code_of("OTHER").is_err());
    }

    #[test]
    fn unknown_lookups_error() {
        let r = MtypeRegistry::seeded();
        assert!(matches!(r.code_of("NOPE"), Err(RegistryError::UnknownMtype(_))));
        assert!(matches!(r.name_of(99999), Err(RegistryError::UnknownMtype(_))));
    }

    #[test]
    fn reply_swaps_direction_and_keeps_identity() {
        let r = MtypeRegistry::seeded();
        let mut m = Message::new(mtypes::PING_MSG, "ping").with_subid(7).with_meid("gnb_1");
        m.transaction_id = 42;
        m.source = "service-ricxapp-ping-rmr.ricxapp".to_string();
        let reply = make_reply(&r, &m, "pong", Some(mtypes::PONG_MSG)).unwrap();
        assert_eq!(reply.direct_dest.as_deref(), Some("service-ricxapp-ping-rmr.ricxapp"));
        assert_eq!(reply.transaction_id, 42);
        assert_eq!(reply.subid, 7);
        assert_eq!(reply.meid.as_deref(), Some("gnb_1"));
        assert_eq!(reply.mtype, mtypes::PONG_MSG);
        assert_eq!(reply.payload, b"pong");
        assert!(reply.source.is_empty(), "source is assigned at send time");
    }

    #[test]
    fn reply_with_unknown_mtype_fails() {
        let r = MtypeRegistry::seeded();
        let m = Message::new(mtypes::PING_MSG, "ping");
        assert_eq!(
            make_reply(&r, &m, "x", Some(77777)).unwrap_err(),
            RegistryError::UnknownMtype("77777".into())
        );
    }

    #[test]
    fn error_strings_are_exact() {
        assert_eq!(ERR_NAME_DOES_NOT_RESOLVE, "Name does not resolve");
        assert_eq!(err_no_route(12050), "No route table entry for mtype=12050");
    }

    proptest! {
        /// Registering any set of unique (name, code) pairs keeps the map a
        /// bijection: name -> code -> name is the identity for every entry.
        #[test]
        fn registry_stays_bijective(pairs in proptest::collection::hash_map("[a-z]{1,12}", 31000u32..60000, 0..40)) {
            let mut seen_codes = std::collections::HashSet::new();
            let mut r = MtypeRegistry::seeded();
            for (name, code) in &pairs {
                if seen_codes.insert(*code) {
                    prop_assert!(r.register(name, *code).is_ok());
                }
            }
            for t in r.entries() {
                prop_assert_eq!(r.code_of(&t.name).unwrap(), t.code);
                prop_assert_eq!(r.name_of(t.code).unwrap(), t.name.as_str());
            }
        }

        /// Any UTF-8 payload survives a store/readback round trip untouched.
        #[test]
        fn payload_utf8_round_trip(s in ".*") {
            let m = Message::new(mtypes::PING_MSG, s.as_bytes().to_vec());
            prop_assert_eq!(m.payload_len(), s.len());
            let restored = m.payload_str().into_owned();
            prop_assert_eq!(restored, s);
        }
    }
}
