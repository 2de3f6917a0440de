//! The in-process message fabric that stands in for the RMR transport.
//!
//! Every participant — xApp instance or platform component — registers an
//! endpoint with a bounded mailbox. Sends resolve against the *sender's*
//! snapshot of the routing table (snapshots are pushed by [`MessageBus::
//! distribute`], mirroring how the route manager distributes tables to each
//! RMR instance), then deliver one copy per endpoint group, rotating within
//! a group.
//!
//! Sending never dispatches handlers; it only enqueues. The composition root
//! drains mailboxes in deterministic order, which keeps every simulation run
//! reproducible and re-entrancy impossible.

use crate::messaging::{errno, Message, ERR_NAME_DOES_NOT_RESOLVE};
use crate::route_table::{Resolution, RoutingTable};
use std::collections::{BTreeMap, VecDeque};

/// Default mailbox capacity; the oldest traffic wins, new overflow is shed.
pub const DEFAULT_MAILBOX_CAPACITY: usize = 1024;

/// Default largest payload an endpoint may send, in bytes.
pub const DEFAULT_MAX_PAYLOAD: usize = 2072;

/// Knobs fixed at registration time.
#[derive(Debug, Clone)]
pub struct EndpointOptions {
    pub capacity: usize,
    /// Drained by the composition root's dispatch loop when true; polled
    /// explicitly (`rmr_get_messages`-style) when false.
    pub auto_dispatch: bool,
    pub max_payload: usize,
}

impl Default for EndpointOptions {
    fn default() -> Self {
        EndpointOptions {
            capacity: DEFAULT_MAILBOX_CAPACITY,
            auto_dispatch: true,
            max_payload: DEFAULT_MAX_PAYLOAD,
        }
    }
}

#[derive(Debug)]
struct EndpointRec {
    mailbox: VecDeque<Message>,
    options: EndpointOptions,
    /// This endpoint's copy of the routing table. `None` until the first
    /// distribution after registration.
    table: Option<RoutingTable>,
    /// Messages shed because the mailbox was full.
    dropped: u64,
}

/// Outcome of one send: which endpoints got a copy, which did not and why.
#[derive(Debug, Clone)]
pub struct DeliveryReceipt {
    /// Transaction id stamped on the message (assigned here if it was 0).
    pub transaction_id: u64,
    /// Overall outcome; [`errno::OK`] when at least one copy was delivered.
    pub errno: i32,
    pub delivered: Vec<String>,
    /// Per-endpoint failures as `(endpoint, errno)`.
    pub failed: Vec<(String, i32)>,
    /// Human-readable diagnostic for the overall failure, if any.
    pub error: Option<String>,
}

impl DeliveryReceipt {
    pub fn ok(&self) -> bool {
        self.errno == errno::OK
    }

    fn failure(transaction_id: u64, code: i32, error: impl Into<String>) -> Self {
        DeliveryReceipt {
            transaction_id,
            errno: code,
            delivered: Vec::new(),
            failed: Vec::new(),
            error: Some(error.into()),
        }
    }
}

/// The fabric itself: endpoints, their mailboxes, the master routing table,
/// and the `meid → owning endpoint` map behind `%meid` routing.
#[derive(Debug)]
pub struct MessageBus {
    endpoints: BTreeMap<String, EndpointRec>,
    master: RoutingTable,
    ownership: BTreeMap<String, String>,
    next_txid: u64,
    /// Runtime route additions from the latest dynamic update, kept the way
    /// the route manager stashes them next to a file-backed table.
    pub stash: Vec<String>,
}

impl Default for MessageBus {
    fn default() -> Self {
        Self::new()
    }
}

impl MessageBus {
    pub fn new() -> Self {
        MessageBus {
            endpoints: BTreeMap::new(),
            master: RoutingTable::empty(),
            ownership: BTreeMap::new(),
            next_txid: 1,
            stash: Vec::new(),
        }
    }

    // -- endpoint lifecycle -------------------------------------------------

    /// Add an endpoint. Its table snapshot starts empty until the next
    /// [`distribute`](Self::distribute). Re-registering resets the mailbox.
    pub fn register(&mut self, name: &str, options: EndpointOptions) {
        self.endpoints.insert(
            name.to_string(),
            EndpointRec {
                mailbox: VecDeque::new(),
                options,
                table: None,
                dropped: 0,
            },
        );
    }

    /// Remove an endpoint, purge every master-table route that references it
    /// and every meid it owned. Snapshots refresh on the next distribution.
    pub fn deregister(&mut self, name: &str) -> bool {
        let existed = self.endpoints.remove(name).is_some();
        if existed {
            self.master.remove_endpoint(name);
            self.ownership.retain(|_, owner| owner != name);
        }
        existed
    }

    pub fn is_registered(&self, name: &str) -> bool {
        self.endpoints.contains_key(name)
    }

    pub fn endpoint_names(&self) -> Vec<String> {
        self.endpoints.keys().cloned().collect()
    }

    // -- routing table management ------------------------------------------

    pub fn master_table(&self) -> &RoutingTable {
        &self.master
    }

    pub fn master_table_mut(&mut self) -> &mut RoutingTable {
        &mut self.master
    }

    /// Replace the master table wholesale (static table load).
    pub fn install_master(&mut self, table: RoutingTable) {
        self.master = table;
    }

    /// Merge a dynamic update into the master table, stash the runtime
    /// additions, then push fresh snapshots everywhere.
    pub fn apply_dynamic_update(&mut self, update: &RoutingTable) {
        let (merged, stash) = self.master.merge_dynamic_update(update);
        self.master = merged;
        self.stash = stash;
        self.distribute();
    }

    /// Push a snapshot of the master table to every endpoint.
    pub fn distribute(&mut self) {
        let snapshot = self.master.clone();
        for rec in self.endpoints.values_mut() {
            rec.table = Some(snapshot.clone());
        }
    }

    // -- meid ownership -----------------------------------------------------

    pub fn set_meid_owner(&mut self, meid: &str, endpoint: &str) {
        self.ownership.insert(meid.to_string(), endpoint.to_string());
    }

    pub fn clear_meid_owner(&mut self, meid: &str) -> bool {
        self.ownership.remove(meid).is_some()
    }

    pub fn meid_owner(&self, meid: &str) -> Option<&str> {
        self.ownership.get(meid).map(String::as_str)
    }

    // -- sending ------------------------------------------------------------

    fn fresh_txid(&mut self) -> u64 {
        let id = self.next_txid;
        self.next_txid += 1;
        id
    }

    /// Send `msg` on behalf of endpoint `from`.
    ///
    /// A zero transaction id is replaced with a fresh one; `source` and
    /// `sent_at` are stamped here. Messages with `direct_dest` set bypass
    /// table resolution entirely (the return-to-sender path). Everything
    /// else resolves against the sender's table snapshot, falling back to
    /// the master when no snapshot has been distributed yet.
    pub fn send(&mut self, now_ms: u64, from: &str, mut msg: Message) -> DeliveryReceipt {
        if msg.transaction_id == 0 {
            msg.transaction_id = self.fresh_txid();
        }
        let txid = msg.transaction_id;

        let Some(sender) = self.endpoints.get(from) else {
            return DeliveryReceipt::failure(
                txid,
                errno::NOT_REGISTERED,
                format!("sender endpoint {from:?} is not registered"),
            );
        };
        if msg.payload.len() > sender.options.max_payload {
            return DeliveryReceipt::failure(
                txid,
                errno::TOO_LARGE,
                format!(
                    "payload of {} bytes exceeds the sender limit of {}",
                    msg.payload.len(),
                    sender.options.max_payload
                ),
            );
        }

        msg.source = from.to_string();
        msg.sent_at = now_ms;

        // Owned list of target endpoints, so no table borrow outlives this
        // block.
        let targets: Result<Vec<String>, DeliveryReceipt> = {
            if let Some(dest) = msg.direct_dest.clone() {
                Ok(vec![dest])
            } else {
                let table = sender.table.as_ref().unwrap_or(&self.master);
                match table.resolve(msg.mtype, msg.subid, from) {
                    Err(no_route) => Err(DeliveryReceipt::failure(
                        txid,
                        errno::NO_ROUTE,
                        no_route.to_string(),
                    )),
                    Ok(Resolution::MeidOwner) => match msg
                        .meid
                        .as_deref()
                        .and_then(|meid| self.ownership.get(meid))
                    {
                        Some(owner) => Ok(vec![owner.clone()]),
                        None => Err(DeliveryReceipt::failure(
                            txid,
                            errno::NO_ENDPOINT,
                            ERR_NAME_DOES_NOT_RESOLVE,
                        )),
                    },
                    Ok(Resolution::Endpoints(names)) => Ok(names),
                }
            }
        };
        let targets = match targets {
            Ok(t) => t,
            Err(receipt) => return receipt,
        };

        let mut delivered = Vec::new();
        let mut failed = Vec::new();
        for target in targets {
            match self.endpoints.get_mut(&target) {
                None => failed.push((target, errno::NO_ENDPOINT)),
                Some(rec) => {
                    if rec.mailbox.len() >= rec.options.capacity {
                        rec.dropped += 1;
                        failed.push((target, errno::QUEUE_FULL));
                    } else {
                        rec.mailbox.push_back(msg.clone());
                        delivered.push(target);
                    }
                }
            }
        }

        let (code, error) = if delivered.is_empty() {
            match failed.first() {
                Some((_, e)) => {
                    let text = if *e == errno::NO_ENDPOINT {
                        ERR_NAME_DOES_NOT_RESOLVE.to_string()
                    } else {
                        "mailbox full, message shed".to_string()
                    };
                    (*e, Some(text))
                }
                None => (
                    errno::NO_ENDPOINT,
                    Some(ERR_NAME_DOES_NOT_RESOLVE.to_string()),
                ),
            }
        } else if failed.iter().any(|(_, e)| *e == errno::NO_ENDPOINT) {
            (errno::OK, Some(ERR_NAME_DOES_NOT_RESOLVE.to_string()))
        } else {
            (errno::OK, None)
        };

        DeliveryReceipt {
            transaction_id: txid,
            errno: code,
            delivered,
            failed,
            error,
        }
    }

    // -- receiving ----------------------------------------------------------

    pub fn queue_len(&self, endpoint: &str) -> usize {
        self.endpoints
            .get(endpoint)
            .map(|r| r.mailbox.len())
            .unwrap_or(0)
    }

    pub fn dropped_count(&self, endpoint: &str) -> u64 {
        self.endpoints.get(endpoint).map(|r| r.dropped).unwrap_or(0)
    }

    /// Pop the oldest message queued for `endpoint`.
    pub fn pop(&mut self, endpoint: &str) -> Option<Message> {
        self.endpoints.get_mut(endpoint)?.mailbox.pop_front()
    }

    /// Take every queued message for `endpoint` (the polling receive path).
    pub fn drain(&mut self, endpoint: &str) -> Vec<Message> {
        match self.endpoints.get_mut(endpoint) {
            Some(rec) => rec.mailbox.drain(..).collect(),
            None => Vec::new(),
        }
    }

    /// Pop the next message for the dispatch loop: endpoints are visited in
    /// name order, only those marked `auto_dispatch`, oldest message first.
    pub fn next_dispatchable(&mut self) -> Option<(String, Message)> {
        let name = self
            .endpoints
            .iter()
            .find(|(_, rec)| rec.options.auto_dispatch && !rec.mailbox.is_empty())
            .map(|(name, _)| name.clone())?;
        let msg = self.endpoints.get_mut(&name)?.mailbox.pop_front()?;
        Some((name, msg))
    }

    /// True if any auto-dispatched endpoint has queued traffic.
    pub fn has_dispatchable(&self) -> bool {
        self.endpoints
            .values()
            .any(|rec| rec.options.auto_dispatch && !rec.mailbox.is_empty())
    }

    // -- introspection ------------------------------------------------------

    /// Full routing picture as JSON: the master table plus, per endpoint,
    /// its snapshot, queue depth, and shed count.
    pub fn route_debug_dump(&self) -> serde_json::Value {
        let mut endpoints = serde_json::Map::new();
        for (name, rec) in &self.endpoints {
            let table_lines: Vec<String> = match &rec.table {
                Some(t) => t.serialize().lines().map(str::to_string).collect(),
                None => Vec::new(),
            };
            endpoints.insert(
                name.clone(),
                serde_json::json!({
                    "table": table_lines,
                    "queued": rec.mailbox.len(),
                    "dropped": rec.dropped,
                    "auto_dispatch": rec.options.auto_dispatch,
                }),
            );
        }
        serde_json::json!({
            "master": self.master.serialize().lines().collect::<Vec<_>>(),
            "ownership": self.ownership,
            "stash": self.stash,
            "endpoints": endpoints,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messaging::mtypes;

    fn bus_with(table: &str, endpoints: &[&str]) -> MessageBus {
        let mut bus = MessageBus::new();
        let (parsed, _) = RoutingTable::parse(table).unwrap();
        bus.install_master(parsed);
        for ep in endpoints {
            bus.register(ep, EndpointOptions::default());
        }
        bus.distribute();
        bus
    }

    #[test]
    fn fanout_and_round_robin_counts_over_four_sends() {
        let mut bus = bus_with(
            "newrt|start\nmse|30001|-1|A;B1,B2;C\nnewrt|end|1\n",
            &["A", "B1", "B2", "C", "tx"],
        );
        for _ in 0..4 {
            let r = bus.send(0, "tx", Message::new(30001, b"x".to_vec()));
            assert!(r.ok());
            assert_eq!(r.delivered.len(), 3, "one copy per group");
        }
        assert_eq!(bus.queue_len("A"), 4);
        assert_eq!(bus.queue_len("B1"), 2);
        assert_eq!(bus.queue_len("B2"), 2);
        assert_eq!(bus.queue_len("C"), 4);
        assert_eq!(bus.queue_len("tx"), 0);
    }

    #[test]
    fn missing_route_fails_with_exact_diagnostic() {
        let mut bus = bus_with("newrt|start\nnewrt|end|0\n", &["tx"]);
        let r = bus.send(0, "tx", Message::new(777, vec![]));
        assert_eq!(r.errno, errno::NO_ROUTE);
        assert_eq!(
            r.error.as_deref(),
            Some("No route table entry for mtype=777")
        );
        assert!(r.delivered.is_empty());
    }

    #[test]
    fn unknown_endpoint_in_group_reports_name_resolution() {
        let mut bus = bus_with(
            "newrt|start\nmse|30001|-1|A;ghost\nnewrt|end|1\n",
            &["A", "tx"],
        );
        let r = bus.send(0, "tx", Message::new(30001, vec![]));
        assert_eq!(r.errno, errno::OK, "partial delivery still succeeds");
        assert_eq!(r.delivered, vec!["A".to_string()]);
        assert_eq!(r.failed, vec![("ghost".to_string(), errno::NO_ENDPOINT)]);
        assert_eq!(r.error.as_deref(), Some(ERR_NAME_DOES_NOT_RESOLVE));

        let mut bus = bus_with("newrt|start\nmse|30001|-1|ghost\nnewrt|end|1\n", &["tx"]);
        let r = bus.send(0, "tx", Message::new(30001, vec![]));
        assert_eq!(r.errno, errno::NO_ENDPOINT);
        assert_eq!(r.error.as_deref(), Some(ERR_NAME_DOES_NOT_RESOLVE));
    }

    #[test]
    fn full_mailbox_sheds_newest_and_counts_drops() {
        let mut bus = MessageBus::new();
        let (table, _) =
            RoutingTable::parse("newrt|start\nmse|30001|-1|rx\nnewrt|end|1\n").unwrap();
        bus.install_master(table);
        bus.register("tx", EndpointOptions::default());
        bus.register(
            "rx",
            EndpointOptions {
                capacity: 2,
                ..EndpointOptions::default()
            },
        );
        bus.distribute();

        for i in 0..2 {
            let r = bus.send(0, "tx", Message::new(30001, vec![i]));
            assert!(r.ok());
        }
        let r = bus.send(0, "tx", Message::new(30001, vec![9]));
        assert_eq!(r.errno, errno::QUEUE_FULL);
        assert_eq!(bus.queue_len("rx"), 2);
        assert_eq!(bus.dropped_count("rx"), 1);
        // The two oldest survived; the newest was shed.
        assert_eq!(bus.pop("rx").unwrap().payload, vec![0]);
        assert_eq!(bus.pop("rx").unwrap().payload, vec![1]);
    }

    #[test]
    fn oversized_payload_is_rejected_before_routing() {
        let mut bus = MessageBus::new();
        bus.register(
            "tx",
            EndpointOptions {
                max_payload: 8,
                ..EndpointOptions::default()
            },
        );
        let r = bus.send(0, "tx", Message::new(30001, vec![0u8; 9]));
        assert_eq!(r.errno, errno::TOO_LARGE);
        assert!(r.error.unwrap().contains("exceeds"));
    }

    #[test]
    fn unregistered_sender_is_rejected() {
        let mut bus = MessageBus::new();
        let r = bus.send(0, "nobody", Message::new(30001, vec![]));
        assert_eq!(r.errno, errno::NOT_REGISTERED);
    }

    #[test]
    fn direct_destination_bypasses_the_table() {
        let mut bus = bus_with("newrt|start\nnewrt|end|0\n", &["a", "b"]);
        let mut msg = Message::new(30002, b"reply".to_vec());
        msg.direct_dest = Some("b".to_string());
        let r = bus.send(5, "a", msg);
        assert!(r.ok());
        let got = bus.pop("b").unwrap();
        assert_eq!(got.source, "a");
        assert_eq!(got.sent_at, 5);
    }

    #[test]
    fn meid_routing_follows_ownership() {
        let mut bus = bus_with(
            "newrt|start\nmse|12040|200|%meid\nnewrt|end|1\n",
            &["e2term", "tx"],
        );
        bus.set_meid_owner("gnb_1", "e2term");

        let msg = Message::new(mtypes::RIC_SUB_REQ, vec![])
            .with_subid(200)
            .with_meid("gnb_1");
        let r = bus.send(0, "tx", msg);
        assert!(r.ok());
        assert_eq!(r.delivered, vec!["e2term".to_string()]);

        let unowned = Message::new(mtypes::RIC_SUB_REQ, vec![])
            .with_subid(200)
            .with_meid("gnb_other");
        let r = bus.send(0, "tx", unowned);
        assert_eq!(r.errno, errno::NO_ENDPOINT);
        assert_eq!(r.error.as_deref(), Some(ERR_NAME_DOES_NOT_RESOLVE));

        let no_meid = Message::new(mtypes::RIC_SUB_REQ, vec![]).with_subid(200);
        let r = bus.send(0, "tx", no_meid);
        assert_eq!(r.errno, errno::NO_ENDPOINT);
    }

    #[test]
    fn transaction_ids_are_assigned_monotonically_and_preserved() {
        let mut bus = bus_with("newrt|start\nmse|30001|-1|rx\nnewrt|end|1\n", &["rx", "tx"]);
        let a = bus.send(0, "tx", Message::new(30001, vec![]));
        let b = bus.send(0, "tx", Message::new(30001, vec![]));
        assert!(b.transaction_id > a.transaction_id);

        let mut preset = Message::new(30001, vec![]);
        preset.transaction_id = 999_999;
        let c = bus.send(0, "tx", preset);
        assert_eq!(c.transaction_id, 999_999);
        bus.pop("rx");
        bus.pop("rx");
        assert_eq!(bus.pop("rx").unwrap().transaction_id, 999_999);
    }

    #[test]
    fn snapshots_lag_master_until_distributed() {
        let mut bus = bus_with("newrt|start\nnewrt|end|0\n", &["rx", "tx"]);
        bus.master_table_mut()
            .add_subscription_entries(&[30001], -1, "rx");
        // Snapshot still has the old (empty) table.
        let r = bus.send(0, "tx", Message::new(30001, vec![]));
        assert_eq!(r.errno, errno::NO_ROUTE);
        bus.distribute();
        let r = bus.send(0, "tx", Message::new(30001, vec![]));
        assert!(r.ok());
        assert_eq!(bus.queue_len("rx"), 1);
    }

    #[test]
    fn deregister_purges_routes_and_ownership() {
        let mut bus = bus_with(
            "newrt|start\nmse|30001|-1|rx\nmse|30002|-1|rx;other\nnewrt|end|2\n",
            &["rx", "other", "tx"],
        );
        bus.set_meid_owner("gnb_1", "rx");
        assert!(bus.deregister("rx"));
        assert!(!bus.is_registered("rx"));
        assert_eq!(bus.meid_owner("gnb_1"), None);
        assert!(!bus.master_table().references_endpoint("rx"));
        bus.distribute();
        let r = bus.send(0, "tx", Message::new(30001, vec![]));
        assert_eq!(r.errno, errno::NO_ROUTE, "sole-target route was purged");
        let r = bus.send(0, "tx", Message::new(30002, vec![]));
        assert!(r.ok(), "shared route lost only the dead member");
        assert_eq!(r.delivered, vec!["other".to_string()]);
    }

    #[test]
    fn dispatch_order_is_deterministic_and_skips_polled_endpoints() {
        let mut bus = MessageBus::new();
        let (table, _) =
            RoutingTable::parse("newrt|start\nmse|30001|-1|zeta;alpha;manual\nnewrt|end|1\n")
                .unwrap();
        bus.install_master(table);
        bus.register("zeta", EndpointOptions::default());
        bus.register("alpha", EndpointOptions::default());
        bus.register(
            "manual",
            EndpointOptions {
                auto_dispatch: false,
                ..EndpointOptions::default()
            },
        );
        bus.register("tx", EndpointOptions::default());
        bus.distribute();

        bus.send(0, "tx", Message::new(30001, vec![]));
        let (first, _) = bus.next_dispatchable().unwrap();
        assert_eq!(first, "alpha", "name order, not registration order");
        let (second, _) = bus.next_dispatchable().unwrap();
        assert_eq!(second, "zeta");
        assert!(
            bus.next_dispatchable().is_none(),
            "polled endpoint is not auto-dispatched"
        );
        assert_eq!(bus.drain("manual").len(), 1);
    }

    #[test]
    fn dynamic_update_distributes_and_stashes() {
        let mut bus = bus_with(
            "newrt|start\nmse|30001|-1|old\nnewrt|end|1\n",
            &["old", "new", "tx"],
        );
        let (update, _) =
            RoutingTable::parse("newrt|start\nmse|30001|-1|new\nnewrt|end|1\n").unwrap();
        bus.apply_dynamic_update(&update);
        assert_eq!(bus.stash, vec!["mse|30001|-1|new".to_string()]);
        let r = bus.send(0, "tx", Message::new(30001, vec![]));
        assert_eq!(r.delivered, vec!["new".to_string()]);
    }

    #[test]
    fn debug_dump_shows_tables_and_queues() {
        let mut bus = bus_with("newrt|start\nmse|30001|-1|rx\nnewrt|end|1\n", &["rx", "tx"]);
        bus.send(0, "tx", Message::new(30001, vec![]));
        let dump = bus.route_debug_dump();
        assert_eq!(dump["endpoints"]["rx"]["queued"], 1);
        let master = dump["master"].as_array().unwrap();
        assert!(master
            .iter()
            .any(|l| l.as_str().unwrap().contains("mse|30001|-1|rx")));
        let snap = dump["endpoints"]["tx"]["table"].as_array().unwrap();
        assert!(snap.iter().any(|l| l.as_str().unwrap().contains("30001")));
    }
}
