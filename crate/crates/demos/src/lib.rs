//! Reference xApps for the miniric simulator.
//!
//! Three small apps double as living documentation and as end-to-end
//! exercises of the platform:
//!
//! * [`kpm_monitor`] — finds KPM-capable nodes in the R-NIB, subscribes to
//!   periodic measurement reports, and journals every decoded indication
//!   into its own SDL namespace.
//! * [`a1_consumer`] — consumes type-1 A1 policies, applies their payload to
//!   its config, and acknowledges each operation back to the mediator.
//! * [`pingpong`] — a chained pair: a general-mode `ping` that emits a
//!   custom message every second and counts the acknowledgements a reactive
//!   `pong` returns to sender.
//!
//! Each app ships its descriptor and config schema as JSON files under
//! `examples/`, the same two documents an operator would onboard. The
//! [`catalog`] function maps the container images those descriptors name to
//! the blueprint constructors here.

use miniric_core::appmgr::Catalog;

/// Runnable-image catalog covering all bundled demo apps.
pub fn catalog() -> Catalog {
    let mut catalog = Catalog::new();
    catalog.register(kpm_monitor::IMAGE, kpm_monitor::blueprint);
    catalog.register(a1_consumer::IMAGE, a1_consumer::blueprint);
    catalog.register(pingpong::PING_IMAGE, pingpong::ping_blueprint);
    catalog.register(pingpong::PONG_IMAGE, pingpong::pong_blueprint);
    catalog
}

pub mod kpm_monitor {
    //! Periodic-report monitor: subscribe to every node that speaks the KPM
    //! service model and persist each indication.

    use miniric_core::descriptor::{parse_descriptor, parse_schema};
    use miniric_core::e2::{
        ActionDefinition, ActionType, RicIndication, SubAction, SubsequentAction, KPM_OID,
    };
    use miniric_core::logging::Level;
    use miniric_core::messaging::mtypes;
    use miniric_core::xapp::{SubscriptionSpec, XAppBlueprint, XAppBuilder};

    pub const DESCRIPTOR: &str = include_str!("../examples/kpm_monitor/config-file.json");
    pub const SCHEMA: &str = include_str!("../examples/kpm_monitor/schema-file.json");
    /// Container image the descriptor references.
    pub const IMAGE: &str = "kpm_monitor";
    /// SDL namespace the monitor journals into.
    pub const NAMESPACE: &str = "kpm_monitor_ns";

    pub fn blueprint() -> XAppBlueprint {
        let descriptor = parse_descriptor(DESCRIPTOR).expect("bundled descriptor parses");
        let schema = parse_schema(SCHEMA).expect("bundled schema parses");
        XAppBuilder::new(descriptor)
            .schema(schema)
            .post_init(|ctx| {
                let period = ctx
                    .controls()
                    .get("reporting_period_ms")
                    .and_then(|v| v.as_u64())
                    .unwrap_or(1000);
                let meas_name = ctx
                    .controls()
                    .get("meas_name")
                    .and_then(|v| v.as_str())
                    .unwrap_or("DRB.PerDataVolumeDLDist.Bin")
                    .to_string();

                let mut event_instance = 0i64;
                for gnb in ctx.nodes() {
                    let Some(info) = ctx.services.rnib.get_nodeb(&gnb.inventory_name) else {
                        continue;
                    };
                    // Only nodes exposing the KPM service model qualify.
                    let Some(function) = info.ran_functions.iter().find(|f| f.oid == KPM_OID)
                    else {
                        continue;
                    };
                    event_instance += 1;
                    let action = SubAction {
                        action_id: 1,
                        action_type: ActionType::Report,
                        definition: ActionDefinition::format1(&[&meas_name], period),
                        subsequent: Some(SubsequentAction::continue_w10ms()),
                    };
                    let mut spec = SubscriptionSpec::report(
                        gnb.inventory_name.clone(),
                        function.ran_function_id,
                        period,
                        action,
                    );
                    spec.xapp_event_instance_id = event_instance;
                    match ctx.subscribe(&spec) {
                        Ok(rest_id) => ctx.log(
                            Level::Info,
                            format!(
                                "subscribed to {} (request {rest_id})",
                                gnb.inventory_name
                            ),
                        ),
                        Err(e) => {
                            ctx.log(
                                Level::Error,
                                format!("subscription to {} failed: {e}", gnb.inventory_name),
                            );
                            ctx.set_ready(false);
                        }
                    }
                }
                if event_instance == 0 {
                    ctx.log(Level::Error, "no node exposes the KPM service model");
                    ctx.set_ready(false);
                }
            })
            .handler(mtypes::RIC_INDICATION, |ctx, msg| {
                match RicIndication::decode(&msg.payload) {
                    Ok(indication) => {
                        let key = format!("meas_{}", ctx.now_ms());
                        ctx.sdl_set_json(NAMESPACE, &key, &indication);
                    }
                    Err(e) => ctx.log(Level::Error, format!("undecodable indication: {e}")),
                }
            })
            .build()
            .expect("blueprint is well formed")
    }
}

pub mod a1_consumer {
    //! Type-1 policy consumer: validate, apply, acknowledge.

    use miniric_core::descriptor::{parse_descriptor, parse_schema};
    use miniric_core::logging::Level;
    use miniric_core::messaging::{mtypes, Message};
    use miniric_core::xapp::{XAppBlueprint, XAppBuilder};
    use serde_json::Value;

    pub const DESCRIPTOR: &str = include_str!("../examples/a1_consumer/config-file.json");
    pub const SCHEMA: &str = include_str!("../examples/a1_consumer/schema-file.json");
    pub const IMAGE: &str = "a1_consumer";

    pub fn blueprint() -> XAppBlueprint {
        let descriptor = parse_descriptor(DESCRIPTOR).expect("bundled descriptor parses");
        let schema = parse_schema(SCHEMA).expect("bundled schema parses");
        XAppBuilder::new(descriptor)
            .schema(schema)
            .handler(mtypes::A1_POLICY_REQ, |ctx, msg| {
                let Ok(Value::Object(request)) = serde_json::from_slice::<Value>(&msg.payload)
                else {
                    ctx.log(Level::Error, "Invalid JSON");
                    return;
                };
                let mandatory = ["policy_type_id", "operation", "policy_instance_id"];
                if mandatory.iter().any(|k| !request.contains_key(*k)) {
                    ctx.log(Level::Error, "Invalid policy");
                    return;
                }

                let operation = request["operation"].as_str().unwrap_or_default().to_string();
                let instance = request["policy_instance_id"]
                    .as_str()
                    .unwrap_or_default()
                    .to_string();
                match operation.as_str() {
                    "CREATE" | "UPDATE" => {
                        // The policy payload steers this app: each field lands
                        // in the controls section of the live config.
                        if let Some(payload) = request.get("payload").and_then(|p| p.as_object())
                        {
                            let applied: Vec<String> = payload.keys().cloned().collect();
                            if let Some(controls) = ctx
                                .core
                                .config
                                .get_mut("controls")
                                .and_then(|c| c.as_object_mut())
                            {
                                for (k, v) in payload {
                                    controls.insert(k.clone(), v.clone());
                                }
                            }
                            ctx.log(
                                Level::Info,
                                format!("{operation} instance {instance}: applied {applied:?}"),
                            );
                        }
                    }
                    "DELETE" => {
                        ctx.log(Level::Info, format!("DELETE instance {instance}"));
                    }
                    other => {
                        ctx.log(Level::Error, format!("unsupported operation {other:?}"));
                        return;
                    }
                }

                // Acknowledge: echo the request minus the operation, stamped
                // with this app's identity and the outcome.
                let mut ack = request.clone();
                ack.remove("operation");
                ack.insert("handler_id".to_string(), Value::String(ctx.core.name.clone()));
                ack.insert("status".to_string(), Value::String("OK".to_string()));
                let reply = Message::new(
                    mtypes::A1_POLICY_RESP,
                    serde_json::to_vec(&ack).expect("ack serializes"),
                )
                .with_subid(msg.subid);
                match ctx.rmr_send_msg(reply) {
                    Ok(receipt) if !receipt.ok() => ctx.log(
                        Level::Error,
                        format!(
                            "acknowledgement undeliverable: {}",
                            receipt.error.unwrap_or_default()
                        ),
                    ),
                    Ok(_) => {}
                    Err(e) => ctx.log(Level::Error, format!("acknowledgement failed: {e}")),
                }
            })
            .build()
            .expect("blueprint is well formed")
    }
}

pub mod pingpong {
    //! Chained pair exercising app-to-app messaging with custom types.
    //!
    //! `ping` runs in general mode: every step it polls its mailbox for
    //! acknowledgements, matches them against the transaction ids it sent,
    //! publishes its counters to SDL, and emits the next ping. `pong` is
    //! reactive and returns every ping to its sender. Delivery of the custom
    //! ping type needs one route entry; [`route_update`] renders it.

    use miniric_core::descriptor::parse_descriptor;
    use miniric_core::logging::Level;
    use miniric_core::messaging::mtypes;
    use miniric_core::xapp::{rmr_endpoint_name, AppCtx, XAppBlueprint, XAppBuilder};
    use std::cell::RefCell;
    use std::collections::BTreeSet;
    use std::rc::Rc;

    pub const PING_DESCRIPTOR: &str = include_str!("../examples/pingpong/ping-config-file.json");
    pub const PONG_DESCRIPTOR: &str = include_str!("../examples/pingpong/pong-config-file.json");
    pub const PING_IMAGE: &str = "ping";
    pub const PONG_IMAGE: &str = "pong";
    /// SDL namespace where `ping` publishes its counters.
    pub const NAMESPACE: &str = "pingpong_ns";

    /// Route update wiring the custom message types between the pair, the
    /// analog of the static route table an operator would stage for them.
    pub fn route_update() -> String {
        format!(
            "newrt|start\nmse|{}|-1|{}\nmse|{}|-1|{}\nnewrt|end|2\n",
            mtypes::PING_MSG,
            rmr_endpoint_name("pong"),
            mtypes::PONG_MSG,
            rmr_endpoint_name("ping"),
        )
    }

    #[derive(Default)]
    struct PingState {
        sent: u64,
        acks: u64,
        matched: u64,
        outstanding: BTreeSet<u64>,
    }

    fn publish(ctx: &mut AppCtx<'_>, state: &PingState) {
        ctx.sdl_set_json(NAMESPACE, "pings", &state.sent);
        ctx.sdl_set_json(NAMESPACE, "acks", &state.acks);
        ctx.sdl_set_json(NAMESPACE, "matched", &state.matched);
    }

    fn send_ping(ctx: &mut AppCtx<'_>, state: &mut PingState) {
        let seq = state.sent + 1;
        let payload = format!("ping {seq}");
        match ctx.rmr_send(mtypes::PING_MSG, payload.into_bytes()) {
            Ok(receipt) if receipt.ok() => {
                state.sent = seq;
                state.outstanding.insert(receipt.transaction_id);
            }
            Ok(receipt) => ctx.log(
                Level::Error,
                format!(
                    "ping {seq} undeliverable: {}",
                    receipt.error.unwrap_or_default()
                ),
            ),
            Err(e) => ctx.log(Level::Error, format!("ping {seq} not sent: {e}")),
        }
        publish(ctx, state);
    }

    pub fn ping_blueprint() -> XAppBlueprint {
        let descriptor = parse_descriptor(PING_DESCRIPTOR).expect("bundled descriptor parses");
        let state = Rc::new(RefCell::new(PingState::default()));
        let step_state = state.clone();
        XAppBuilder::new(descriptor)
            .post_init(move |ctx| {
                // First ping goes out at start so the cadence is one ping per
                // second from the moment the app runs.
                send_ping(ctx, &mut state.borrow_mut());
            })
            .general(1000, move |ctx| {
                let mut state = step_state.borrow_mut();
                for msg in ctx.rmr_get_messages() {
                    if msg.mtype != mtypes::PONG_MSG {
                        continue;
                    }
                    state.acks += 1;
                    if state.outstanding.remove(&msg.transaction_id) {
                        state.matched += 1;
                    } else {
                        ctx.log(
                            Level::Warning,
                            format!("ack with unknown transaction id {}", msg.transaction_id),
                        );
                    }
                }
                send_ping(ctx, &mut state);
            })
            .build()
            .expect("blueprint is well formed")
    }

    pub fn pong_blueprint() -> XAppBlueprint {
        let descriptor = parse_descriptor(PONG_DESCRIPTOR).expect("bundled descriptor parses");
        XAppBuilder::new(descriptor)
            .handler(mtypes::PING_MSG, |ctx, msg| {
                let payload = format!("pong for {}", msg.payload_str());
                if let Err(e) = ctx.rmr_reply(msg, mtypes::PONG_MSG, payload.into_bytes()) {
                    ctx.log(Level::Error, format!("pong not sent: {e}"));
                }
            })
            .build()
            .expect("blueprint is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_covers_every_bundled_image() {
        let catalog = catalog();
        let images = catalog.images();
        for image in ["a1_consumer", "kpm_monitor", "ping", "pong"] {
            assert!(images.contains(&image), "missing {image}");
        }
    }

    #[test]
    fn bundled_descriptors_and_schemas_parse() {
        use miniric_core::descriptor::{parse_descriptor, parse_schema, validate};

        for (desc, schema) in [
            (kpm_monitor::DESCRIPTOR, Some(kpm_monitor::SCHEMA)),
            (a1_consumer::DESCRIPTOR, Some(a1_consumer::SCHEMA)),
            (pingpong::PING_DESCRIPTOR, None),
            (pingpong::PONG_DESCRIPTOR, None),
        ] {
            let d = parse_descriptor(desc).unwrap();
            let s = schema.map(|s| parse_schema(s).unwrap());
            let violations = validate(&d, s.as_ref());
            assert!(violations.is_empty(), "{}: {violations:?}", d.name);
        }
    }

    #[test]
    fn consumer_descriptor_lists_policy_type_one() {
        let d = miniric_core::descriptor::parse_descriptor(a1_consumer::DESCRIPTOR).unwrap();
        assert_eq!(d.effective_rmr().policies, vec![1]);
    }

    #[test]
    fn pingpong_route_update_targets_the_pair() {
        let update = pingpong::route_update();
        assert!(update.contains("mse|30001|-1|service-ricxapp-pong-rmr.ricxapp"));
        assert!(update.contains("mse|30002|-1|service-ricxapp-ping-rmr.ricxapp"));
        miniric_core::route_table::RoutingTable::parse(&update).unwrap();
    }
}
