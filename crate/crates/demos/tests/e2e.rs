//! End-to-end runs of the bundled demo apps on a fresh in-memory deployment.

use miniric_core::a1::A1_HTTP;
use miniric_core::e2::{NodeConfig, RicIndication};
use miniric_core::messaging::{mtypes, Message};
use miniric_core::rest::{Method, RestRequest};
use miniric_core::ric::{Ric, A1_MEDIATOR_ENDPOINT};
use miniric_core::xapp::http_service_name;
use miniric_demos::{a1_consumer, catalog, kpm_monitor, pingpong};
use serde_json::{json, Value};

fn deployment() -> Ric {
    Ric::new(catalog())
}

fn onboard_and_install(ric: &Ric, descriptor: &str, schema: Option<&str>, name: &str) {
    ric.onboard(descriptor, schema).unwrap();
    ric.install(name, None).unwrap();
}

#[test]
fn kpm_monitor_journals_ten_reports_in_ten_seconds() {
    let ric = deployment();
    let node = ric.attach_node(NodeConfig::new("734", "733")).unwrap();
    onboard_and_install(
        &ric,
        kpm_monitor::DESCRIPTOR,
        Some(kpm_monitor::SCHEMA),
        "kpm_monitor",
    );

    ric.advance(10_000);

    let keys = ric.services.sdl.find_keys(kpm_monitor::NAMESPACE, "meas_");
    assert_eq!(keys.len(), 10, "one journal entry per reporting period: {keys:?}");
    for key in &keys {
        let raw = ric
            .services
            .sdl
            .get(kpm_monitor::NAMESPACE, key)
            .expect("journaled record present");
        let record: RicIndication = serde_json::from_slice(&raw).unwrap();
        assert_eq!(record.header.meid, node);
        assert_eq!(record.series.len(), 1);
        assert_eq!(record.series[0].meas_name, "DRB.PerDataVolumeDLDist.Bin");
        assert!(!record.series[0].values.is_empty());
    }

    // The monitor's readiness probe reflects the healthy subscription.
    let ready = ric.http(
        &http_service_name("kpm_monitor"),
        &RestRequest::get("/ric/v1/health/ready"),
    );
    assert_eq!(ready.status, 200);
}

#[test]
fn kpm_monitor_without_a_node_stays_not_ready() {
    let ric = deployment();
    onboard_and_install(
        &ric,
        kpm_monitor::DESCRIPTOR,
        Some(kpm_monitor::SCHEMA),
        "kpm_monitor",
    );
    ric.advance(3000);

    let ready = ric.http(
        &http_service_name("kpm_monitor"),
        &RestRequest::get("/ric/v1/health/ready"),
    );
    assert_eq!(ready.status, 503);
    let log = ric.app_log("kpm_monitor").unwrap();
    assert!(
        log.iter()
            .any(|e| e.msg.contains("no node exposes the KPM service model")),
        "{log:?}"
    );
    assert!(
        ric.services.sdl.find_keys(kpm_monitor::NAMESPACE, "").is_empty(),
        "nothing journaled without a subscription"
    );
}

fn put_type_one(ric: &Ric) {
    let req = RestRequest {
        method: Method::Put,
        path: "/a1-p/policytypes/1".to_string(),
        body: serde_json::to_vec(&json!({
            "name": "threshold",
            "description": "steers the consumer's operating threshold",
            "policy_type_id": 1,
            "create_schema": {
                "type": "object",
                "required": ["threshold"],
                "properties": {"threshold": {"type": "integer"}}
            }
        }))
        .unwrap(),
    };
    assert_eq!(ric.http(A1_HTTP, &req).status, 201);
}

fn put_instance(ric: &Ric, iid: &str, threshold: i64) -> u16 {
    let req = RestRequest {
        method: Method::Put,
        path: format!("/a1-p/policytypes/1/policies/{iid}"),
        body: serde_json::to_vec(&json!({"threshold": threshold})).unwrap(),
    };
    ric.http(A1_HTTP, &req).status
}

#[test]
fn a1_consumer_applies_and_acknowledges_policies() {
    let ric = deployment();
    onboard_and_install(
        &ric,
        a1_consumer::DESCRIPTOR,
        Some(a1_consumer::SCHEMA),
        "a1_consumer",
    );
    put_type_one(&ric);
    assert_eq!(put_instance(&ric, "steer_1", 42), 202);

    // The mediator's ledger shows the consumer's own name with status OK.
    let status = ric.http(
        A1_HTTP,
        &RestRequest::get("/a1-p/policytypes/1/policies/steer_1/status"),
    );
    let body: Value = status.json_body().unwrap();
    assert_eq!(body["instance_status"], "IN EFFECT");
    assert_eq!(body["acks"]["a1_consumer"], "OK");

    // The payload landed in the consumer's live config.
    let config = ric.http(
        &http_service_name("a1_consumer"),
        &RestRequest::get("/ric/v1/config"),
    );
    let config: Value = config.json_body().unwrap();
    assert_eq!(config["controls"]["threshold"], 42);

    // An update flows through the same path.
    assert_eq!(put_instance(&ric, "steer_1", 7), 202);
    let config: Value = ric
        .http(
            &http_service_name("a1_consumer"),
            &RestRequest::get("/ric/v1/config"),
        )
        .json_body()
        .unwrap();
    assert_eq!(config["controls"]["threshold"], 7);

    // Deletion is accepted and acknowledged without incident.
    let del = RestRequest::delete("/a1-p/policytypes/1/policies/steer_1");
    assert_eq!(ric.http(A1_HTTP, &del).status, 202);
    let log = ric.app_log("a1_consumer").unwrap();
    assert!(log.iter().any(|e| e.msg.contains("DELETE instance steer_1")), "{log:?}");
}

#[test]
fn a1_consumer_rejects_malformed_policies_without_replying() {
    let ric = deployment();
    onboard_and_install(
        &ric,
        a1_consumer::DESCRIPTOR,
        Some(a1_consumer::SCHEMA),
        "a1_consumer",
    );

    // Raw garbage straight onto the policy route: the consumer must log and
    // stay silent rather than crash or acknowledge.
    let now = ric.now_ms();
    ric.services.bus.borrow_mut().send(
        now,
        A1_MEDIATOR_ENDPOINT,
        Message::new(mtypes::A1_POLICY_REQ, b"{not json".to_vec()).with_subid(1),
    );
    ric.settle();
    let log = ric.app_log("a1_consumer").unwrap();
    assert!(log.iter().any(|e| e.msg == "Invalid JSON"), "{log:?}");

    // Valid JSON but missing the mandatory policy keys.
    let now = ric.now_ms();
    ric.services.bus.borrow_mut().send(
        now,
        A1_MEDIATOR_ENDPOINT,
        Message::new(
            mtypes::A1_POLICY_REQ,
            serde_json::to_vec(&json!({"operation": "CREATE"})).unwrap(),
        )
        .with_subid(1),
    );
    ric.settle();
    let log = ric.app_log("a1_consumer").unwrap();
    assert!(log.iter().any(|e| e.msg == "Invalid policy"), "{log:?}");
}

#[test]
fn pingpong_counts_five_matching_acks_over_five_seconds() {
    let ric = deployment();
    onboard_and_install(&ric, pingpong::PONG_DESCRIPTOR, None, "pong");
    ric.apply_route_update(&pingpong::route_update()).unwrap();
    onboard_and_install(&ric, pingpong::PING_DESCRIPTOR, None, "ping");

    ric.advance(5000);

    let counter = |key: &str| -> u64 {
        let raw = ric.services.sdl.get(pingpong::NAMESPACE, key).unwrap();
        serde_json::from_slice(&raw).unwrap()
    };
    assert_eq!(counter("acks"), 5, "one acknowledgement per elapsed second");
    assert_eq!(counter("matched"), 5, "every ack matches a sent transaction id");
    assert_eq!(counter("pings"), 6, "initial ping plus one per second");
}

#[test]
fn ping_survives_a_missing_partner() {
    let ric = deployment();
    // No pong and no route: every send fails, the app keeps going.
    onboard_and_install(&ric, pingpong::PING_DESCRIPTOR, None, "ping");
    ric.advance(3000);

    let log = ric.app_log("ping").unwrap();
    let failures = log
        .iter()
        .filter(|e| e.msg.contains("No route table entry for mtype=30001"))
        .count();
    assert_eq!(failures, 4, "{log:?}");

    // Wire up the partner mid-run: pings start landing.
    onboard_and_install(&ric, pingpong::PONG_DESCRIPTOR, None, "pong");
    ric.apply_route_update(&pingpong::route_update()).unwrap();
    ric.advance(2000);
    let raw = ric.services.sdl.get(pingpong::NAMESPACE, "acks").unwrap();
    let acks: u64 = serde_json::from_slice(&raw).unwrap();
    assert_eq!(acks, 1, "first post-repair ack counted one step later");

    // Tear the partner down again. Undeployment scrubs its route entries,
    // so sends first fail for lack of a route...
    ric.uninstall("pong", false).unwrap();
    ric.advance(35_000);
    let log = ric.app_log("ping").unwrap();
    assert!(
        log.iter()
            .any(|e| e.msg.contains("No route table entry for mtype=30001")),
        "{log:?}"
    );

    // ...and a stale route staged at a vanished endpoint fails by name.
    ric.apply_route_update(&pingpong::route_update()).unwrap();
    ric.advance(1000);
    let log = ric.app_log("ping").unwrap();
    assert!(
        log.iter().any(|e| e.msg.contains("Name does not resolve")),
        "{log:?}"
    );
    let alive = ric.http(
        &http_service_name("ping"),
        &RestRequest::get("/ric/v1/health/alive"),
    );
    assert_eq!(alive.status, 200, "still alive after losing its partner");
}
