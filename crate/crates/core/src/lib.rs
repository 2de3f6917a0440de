//! miniric — a self-contained, in-process simulator of a near-real-time RAN
//! Intelligent Controller (RIC) and its xApp execution environment.
//!
//! The crate models the moving parts of a desk-scale RIC deployment without
//! containers, sockets, or wall-clock time:
//!
//! * [`messaging`] — message envelopes and the name/code registry for message
//!   types shared by every component.
//! * [`route_table`] — the text routing-table format (`newrt`/`mse` records),
//!   endpoint groups with fanout and round-robin, and `%meid` ownership routes.
//! * [`bus`] — the in-process message fabric: endpoints, bounded mailboxes,
//!   delivery receipts, health probes, and the routing debug surface.
//! * [`descriptor`] — xApp descriptor and config-schema parsing/validation.
//! * [`appmgr`] — chart onboarding and the instance lifecycle
//!   (install/uninstall/upgrade/rollback) with registration gating.
//! * [`sdl`] — the shared data layer: namespaced key/value store with
//!   conditional operations, prefix search, and optional file persistence.
//! * [`rnib`] — typed radio-network information (gNodeB records) on top of SDL.
//! * [`a1`] — A1 policy mediation: policy types, instances, and the
//!   per-consumer acknowledgement ledger.
//! * [`submgr`] — E2 subscription management: REST endpoints, request merging,
//!   retries against unresponsive nodes, and notification callbacks.
//! * [`e2`] — simulated E2 nodes, the versioned binary payload codec, service
//!   actions (REPORT emission on a simulated period), and control handling.
//! * [`xapp`] — the framework applications are written against: reactive
//!   handler registration, general-purpose periodic apps, REST surfaces,
//!   subscriptions, SDL access, and structured logging.
//! * [`ric`] — the composition root: one deterministic event loop that owns
//!   the simulated clock and wires every component together.
//!
//! Everything runs on a simulated millisecond clock driven by
//! [`ric::Ric::advance`]; a test that "waits" ten seconds completes in
//! microseconds and is exactly reproducible.

#![deny(unsafe_code)]
#![warn(missing_debug_implementations)]

pub mod a1;
pub mod appmgr;
pub mod bus;
pub mod clock;
pub mod descriptor;
pub mod e2;
pub mod logging;
pub mod messaging;
pub mod rest;
pub mod ric;
pub mod rnib;
pub mod route_table;
pub mod sdl;
pub mod submgr;
pub mod xapp;
