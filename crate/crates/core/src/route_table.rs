//! Routing tables in the `newrt` text format.
//!
//! A table is a block of records:
//!
//! ```text
//! newrt|start[|table_name]
//! mse|<mtype>[,<sender>]|<subid>|<endpoint_group>[;<endpoint_group>…]
//! rte|<mtype>|<endpoint_group>            (deprecated; normalized to mse)
//! newrt|end[|record_count]
//! ```
//!
//! Destinations are *groups* separated by `;`. Every matching group receives
//! a copy of the message (fanout); within a group, members separated by `,`
//! take turns round robin. The special target `%meid` routes by ownership:
//! the bus looks up which endpoint currently owns the message's managed
//! entity id and delivers there.
//!
//! Resolution matches the exact `(mtype, subid)` key first and falls back to
//! `(mtype, -1)`. An entry written with a sender qualifier
//! (`mse|<mtype>,<sender>|…`) matches only messages from that sender.

use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RouteError {
    #[error("route table syntax error on line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("route table record count mismatch: trailer declares {declared}, table has {actual}")]
    CountMismatch { declared: usize, actual: usize },
    #[error("route table missing newrt|end terminator")]
    UnterminatedTable,
}

/// Resolution failure: no entry matched the message key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoRouteError {
    pub mtype: u32,
    pub subid: i32,
}

impl std::fmt::Display for NoRouteError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&crate::messaging::err_no_route(self.mtype))
    }
}

impl std::error::Error for NoRouteError {}

/// Ordered members taking turns round robin. The cursor starts at the first
/// member and advances by one on every pick, persisting for the lifetime of
/// the table instance (snapshots copy the cursor position).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointGroup {
    pub members: Vec<String>,
    cursor: Cell<usize>,
}

impl EndpointGroup {
    pub fn new(members: Vec<String>) -> Self {
        EndpointGroup {
            members,
            cursor: Cell::new(0),
        }
    }

    /// Pick the next member in rotation.
    pub fn pick(&self) -> Option<&str> {
        if self.members.is_empty() {
            return None;
        }
        let i = self.cursor.get();
        self.cursor.set(i.wrapping_add(1));
        Some(self.members[i % self.members.len()].as_str())
    }
}

/// Where a route entry points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteTarget {
    /// Ordinary destination groups: one copy per group, round robin inside.
    Groups(Vec<EndpointGroup>),
    /// Deliver to whichever endpoint owns the message's meid.
    MeidOwner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteEntry {
    pub mtype: u32,
    /// When set, the entry applies only to messages from this endpoint.
    pub sender: Option<String>,
    pub subid: i32,
    pub target: RouteTarget,
}

impl RouteEntry {
    /// Canonical single-line `mse` rendering.
    pub fn render(&self) -> String {
        let mut line = String::from("mse|");
        line.push_str(&self.mtype.to_string());
        if let Some(s) = &self.sender {
            let _ = write!(line, ",{s}");
        }
        let _ = write!(line, "|{}|", self.subid);
        match &self.target {
            RouteTarget::MeidOwner => line.push_str("%meid"),
            RouteTarget::Groups(groups) => {
                let rendered: Vec<String> =
                    groups.iter().map(|g| g.members.join(",")).collect();
                line.push_str(&rendered.join(";"));
            }
        }
        line
    }

    fn references_endpoint(&self, endpoint: &str) -> bool {
        match &self.target {
            RouteTarget::MeidOwner => false,
            RouteTarget::Groups(gs) => gs
                .iter()
                .any(|g| g.members.iter().any(|m| m == endpoint)),
        }
    }
}

/// Non-fatal observations collected while parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub warnings: Vec<String>,
}

/// What a route entry resolved to for one concrete message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// One destination per fanout group, in group order.
    Endpoints(Vec<String>),
    /// Destination is the owner of the message's meid.
    MeidOwner,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoutingTable {
    pub name: Option<String>,
    pub entries: Vec<RouteEntry>,
}

impl RoutingTable {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse one table from `text`. Blank lines and `#` comments are
    /// ignored; whitespace around `|` separators is tolerated. Deprecated
    /// `rte` records are accepted with a warning and normalized to `mse`
    /// records with subid -1.
    pub fn parse(text: &str) -> Result<(Self, ParseReport), RouteError> {
        let mut report = ParseReport::default();
        let mut table: Option<RoutingTable> = None;
        let mut ended = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if ended {
                return Err(RouteError::Syntax {
                    line: line_no,
                    reason: "content after table end".to_string(),
                });
            }
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            let tag = fields[0];
            match (tag, table.as_mut()) {
                ("newrt", None) => {
                    if fields.get(1).copied() != Some("start") {
                        return Err(RouteError::Syntax {
                            line: line_no,
                            reason: "expected newrt|start before records".to_string(),
                        });
                    }
                    let name = fields.get(2).filter(|s| !s.is_empty()).map(|s| s.to_string());
                    table = Some(RoutingTable {
                        name,
                        entries: Vec::new(),
                    });
                }
                ("newrt", Some(t)) => match fields.get(1).copied() {
                    Some("end") => {
                        if let Some(count_str) = fields.get(2).filter(|s| !s.is_empty()) {
                            let declared: usize =
                                count_str.parse().map_err(|_| RouteError::Syntax {
                                    line: line_no,
                                    reason: format!("bad record count {count_str:?}"),
                                })?;
                            if declared != t.entries.len() {
                                return Err(RouteError::CountMismatch {
                                    declared,
                                    actual: t.entries.len(),
                                });
                            }
                        }
                        ended = true;
                    }
                    Some("start") => {
                        return Err(RouteError::Syntax {
                            line: line_no,
                            reason: "nested newrt|start".to_string(),
                        })
                    }
                    other => {
                        return Err(RouteError::Syntax {
                            line: line_no,
                            reason: format!("unknown newrt directive {other:?}"),
                        })
                    }
                },
                ("mse", Some(_)) | ("rte", Some(_)) => {
                    let entry = Self::parse_record(tag, &fields, line_no, &mut report)?;
                    table.as_mut().unwrap().entries.push(entry);
                }
                ("mse", None) | ("rte", None) => {
                    return Err(RouteError::Syntax {
                        line: line_no,
                        reason: "record before newrt|start".to_string(),
                    })
                }
                (other, _) => {
                    return Err(RouteError::Syntax {
                        line: line_no,
                        reason: format!("unknown record type {other:?}"),
                    })
                }
            }
        }

        match (table, ended) {
            (Some(t), true) => Ok((t, report)),
            (Some(_), false) => Err(RouteError::UnterminatedTable),
            (None, _) => Err(RouteError::Syntax {
                line: 0,
                reason: "no newrt|start found".to_string(),
            }),
        }
    }

    fn parse_record(
        tag: &str,
        fields: &[&str],
        line_no: usize,
        report: &mut ParseReport,
    ) -> Result<RouteEntry, RouteError> {
        let syntax = |reason: String| RouteError::Syntax {
            line: line_no,
            reason,
        };
        let (mtype_field, subid_field, target_field) = match tag {
            "mse" => {
                if fields.len() != 4 {
                    return Err(syntax(format!(
                        "mse record needs 3 fields, got {}",
                        fields.len() - 1
                    )));
                }
                (fields[1], fields[2], fields[3])
            }
            "rte" => {
                if fields.len() != 3 {
                    return Err(syntax(format!(
                        "rte record needs 2 fields, got {}",
                        fields.len() - 1
                    )));
                }
                report.warnings.push(format!(
                    "line {line_no}: rte records are deprecated; normalized to mse with subid -1"
                ));
                (fields[1], "-1", fields[2])
            }
            _ => unreachable!("caller matched the tag"),
        };

        let (mtype_str, sender) = match mtype_field.split_once(',') {
            Some((m, s)) => (m.trim(), Some(s.trim().to_string())),
            None => (mtype_field, None),
        };
        if let Some(s) = &sender {
            if s.is_empty() {
                return Err(syntax("empty sender qualifier".to_string()));
            }
        }
        let mtype: u32 = mtype_str
            .parse()
            .map_err(|_| syntax(format!("bad message type {mtype_str:?}")))?;
        let subid: i32 = subid_field
            .parse()
            .map_err(|_| syntax(format!("bad subscription id {subid_field:?}")))?;

        let target = if target_field == "%meid" {
            RouteTarget::MeidOwner
        } else {
            let mut groups = Vec::new();
            if target_field.is_empty() {
                report
                    .warnings
                    .push(format!("line {line_no}: empty endpoint group"));
            } else {
                for group_str in target_field.split(';') {
                    let members: Vec<String> = group_str
                        .split(',')
                        .map(str::trim)
                        .filter(|m| {
                            if m.is_empty() {
                                report.warnings.push(format!(
                                    "line {line_no}: empty endpoint group member"
                                ));
                                false
                            } else {
                                true
                            }
                        })
                        .map(|m| m.to_string())
                        .collect();
                    if members.is_empty() {
                        report
                            .warnings
                            .push(format!("line {line_no}: empty endpoint group"));
                    } else {
                        groups.push(EndpointGroup::new(members));
                    }
                }
            }
            RouteTarget::Groups(groups)
        };

        Ok(RouteEntry {
            mtype,
            sender,
            subid,
            target,
        })
    }

    /// Canonical text rendering: `newrt|start[|name]`, one `mse` line per
    /// entry in table order, `newrt|end|<count>`.
    pub fn serialize(&self) -> String {
        let mut out = String::from("newrt|start");
        if let Some(name) = &self.name {
            let _ = write!(out, "|{name}");
        }
        out.push('\n');
        for e in &self.entries {
            out.push_str(&e.render());
            out.push('\n');
        }
        let _ = writeln!(out, "newrt|end|{}", self.entries.len());
        out
    }

    /// Resolve a message key to destinations. The first matching entry wins;
    /// the exact `(mtype, subid)` pass runs before the `(mtype, -1)`
    /// fallback, and sender-qualified entries match only that sender.
    pub fn resolve(
        &self,
        mtype: u32,
        subid: i32,
        sender: &str,
    ) -> Result<Resolution, NoRouteError> {
        let passes: &[i32] = if subid == -1 { &[-1] } else { &[subid, -1] };
        for pass_subid in passes {
            for e in &self.entries {
                if e.mtype != mtype || e.subid != *pass_subid {
                    continue;
                }
                if let Some(s) = &e.sender {
                    if s != sender {
                        continue;
                    }
                }
                return Ok(match &e.target {
                    RouteTarget::MeidOwner => Resolution::MeidOwner,
                    RouteTarget::Groups(groups) => Resolution::Endpoints(
                        groups
                            .iter()
                            .filter_map(|g| g.pick().map(str::to_string))
                            .collect(),
                    ),
                });
            }
        }
        Err(NoRouteError { mtype, subid })
    }

    /// Overlay `update` onto `self`: entries whose `(mtype, sender, subid)`
    /// key already exists replace the original target, new keys append.
    /// Returns the merged table plus the canonical `mse` lines of the
    /// runtime additions — the stash artifact written next to a file-backed
    /// table as `<table>.stash`.
    pub fn merge_dynamic_update(&self, update: &RoutingTable) -> (RoutingTable, Vec<String>) {
        let mut merged = self.clone();
        let mut stash = Vec::new();
        for u in &update.entries {
            stash.push(u.render());
            match merged
                .entries
                .iter_mut()
                .find(|e| e.mtype == u.mtype && e.sender == u.sender && e.subid == u.subid)
            {
                Some(existing) => existing.target = u.target.clone(),
                None => merged.entries.push(u.clone()),
            }
        }
        (merged, stash)
    }

    /// Add one subscription route per message type: `(mtype, subid)` pointing
    /// at `endpoint` as its own fanout group. When the entry already exists
    /// the endpoint joins as an additional group (merged subscriptions), so
    /// every subscriber receives every message.
    pub fn add_subscription_entries(&mut self, mtypes: &[u32], subid: i32, endpoint: &str) {
        for &mtype in mtypes {
            let existing = self
                .entries
                .iter_mut()
                .find(|e| e.mtype == mtype && e.sender.is_none() && e.subid == subid);
            match existing {
                Some(RouteEntry {
                    target: RouteTarget::Groups(groups),
                    ..
                }) => {
                    if !groups.iter().any(|g| g.members.iter().any(|m| m == endpoint)) {
                        groups.push(EndpointGroup::new(vec![endpoint.to_string()]));
                    }
                }
                Some(_) => {} // ownership route already covers this key
                None => self.entries.push(RouteEntry {
                    mtype,
                    sender: None,
                    subid,
                    target: RouteTarget::Groups(vec![EndpointGroup::new(vec![
                        endpoint.to_string()
                    ])]),
                }),
            }
        }
    }

    /// Add an ownership route `(mtype, subid) -> %meid` if not present.
    pub fn add_meid_entry(&mut self, mtype: u32, subid: i32) {
        let exists = self
            .entries
            .iter()
            .any(|e| e.mtype == mtype && e.sender.is_none() && e.subid == subid);
        if !exists {
            self.entries.push(RouteEntry {
                mtype,
                sender: None,
                subid,
                target: RouteTarget::MeidOwner,
            });
        }
    }

    /// Remove subscription routes for `subid`.
    ///
    /// With `endpoint: Some(ep)` only that subscriber leaves: its group is
    /// dropped from each matching entry and the entry survives for the
    /// remaining subscribers. With `None` every entry carrying the subid is
    /// removed outright (including ownership routes). Returns the number of
    /// entries removed or edited.
    pub fn remove_subid(&mut self, subid: i32, endpoint: Option<&str>) -> usize {
        let mut touched = 0;
        match endpoint {
            None => {
                let before = self.entries.len();
                self.entries.retain(|e| e.subid != subid);
                touched = before - self.entries.len();
            }
            Some(ep) => {
                self.entries.retain_mut(|e| {
                    if e.subid != subid {
                        return true;
                    }
                    if let RouteTarget::Groups(groups) = &mut e.target {
                        let before = groups.len();
                        groups.retain(|g| !g.members.iter().any(|m| m == ep));
                        if groups.len() != before {
                            touched += 1;
                        }
                        if groups.is_empty() {
                            return false;
                        }
                    }
                    true
                });
            }
        }
        touched
    }

    /// Purge `endpoint` from every group in every entry; entries left with
    /// no groups are removed. Returns the number of entries edited.
    pub fn remove_endpoint(&mut self, endpoint: &str) -> usize {
        let mut touched = 0;
        self.entries.retain_mut(|e| {
            if let RouteTarget::Groups(groups) = &mut e.target {
                let mut hit = false;
                for g in groups.iter_mut() {
                    let before = g.members.len();
                    g.members.retain(|m| m != endpoint);
                    hit |= g.members.len() != before;
                }
                groups.retain(|g| !g.members.is_empty());
                if hit {
                    touched += 1;
                }
                if groups.is_empty() {
                    return false;
                }
            }
            true
        });
        touched
    }

    /// Does any entry's group mention `endpoint`?
    pub fn references_endpoint(&self, endpoint: &str) -> bool {
        self.entries.iter().any(|e| e.references_endpoint(endpoint))
    }
}

/// Representative platform routing table used by tests and documentation:
/// the A1 mediator's policy routes, two custom application routes, and one
/// subscription pair — control toward the owning node (`%meid`), indications
/// toward the subscriber.
pub const EXAMPLE_DEPLOYMENT_TABLE: &str = "\
newrt|start
mse|20011|-1|service-ricplt-a1mediator-rmr.ricplt
mse|20012|-1|service-ricplt-a1mediator-rmr.ricplt
mse|30001|-1|service-ricxapp-A-rmr.ricxapp
mse|30002|-1|service-ricxapp-B-rmr.ricxapp
mse|12040|200|%meid
mse|12050|200|service-ricxapp-A-rmr.ricxapp
newrt|end
";

#[cfg(test)]
mod tests {
    use super::*;

    fn groups(e: &RouteEntry) -> Vec<Vec<&str>> {
        match &e.target {
            RouteTarget::Groups(gs) => gs
                .iter()
                .map(|g| g.members.iter().map(String::as_str).collect())
                .collect(),
            RouteTarget::MeidOwner => panic!("expected groups"),
        }
    }

    #[test]
    fn example_deployment_table_parses_to_six_entries() {
        let (t, report) = RoutingTable::parse(EXAMPLE_DEPLOYMENT_TABLE).unwrap();
        assert!(report.warnings.is_empty());
        assert_eq!(t.len(), 6);
        assert_eq!(t.entries[0].mtype, 20011);
        assert_eq!(t.entries[0].subid, -1);
        assert_eq!(
            groups(&t.entries[0]),
            vec![vec!["service-ricplt-a1mediator-rmr.ricplt"]]
        );
        assert_eq!(t.entries[2].mtype, 30001);
        assert_eq!(groups(&t.entries[2]), vec![vec!["service-ricxapp-A-rmr.ricxapp"]]);
        // The subscription pair: control routed by ownership, indications to
        // the subscriber, both qualified by subscription id 200.
        let control = &t.entries[4];
        assert_eq!((control.mtype, control.subid), (12040, 200));
        assert_eq!(control.target, RouteTarget::MeidOwner);
        let indication = &t.entries[5];
        assert_eq!((indication.mtype, indication.subid), (12050, 200));
        assert_eq!(groups(indication), vec![vec!["service-ricxapp-A-rmr.ricxapp"]]);
    }

    #[test]
    fn example_table_round_trips_canonically() {
        let (t, _) = RoutingTable::parse(EXAMPLE_DEPLOYMENT_TABLE).unwrap();
        let text = t.serialize();
        let (t2, _) = RoutingTable::parse(&text).unwrap();
        assert_eq!(t, t2);
        assert_eq!(text, t2.serialize());
    }

    #[test]
    fn truncated_variant_with_empty_target_parses_with_warning() {
        // The same table as circulated in some deployment docs, where the
        // ownership tail of the subscription-control line was lost and left a
        // trailing space: the entry survives with zero destination groups.
        let text = "\
newrt|start
mse|20011|-1|service-ricplt-a1mediator-rmr.ricplt
mse|20012|-1|service-ricplt-a1mediator-rmr.ricplt
mse|30001|-1|service-ricxapp-A-rmr.ricxapp
mse|30002|-1|service-ricxapp-B-rmr.ricxapp
mse|12040|200|
newrt|end
";
        let (t, report) = RoutingTable::parse(text).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("empty endpoint group"));
        assert_eq!(t.entries[4].target, RouteTarget::Groups(vec![]));
    }

    #[test]
    fn trailer_count_mismatch_is_rejected() {
        let text = EXAMPLE_DEPLOYMENT_TABLE.replace("newrt|end", "newrt|end|7");
        assert_eq!(
            RoutingTable::parse(&text).unwrap_err(),
            RouteError::CountMismatch {
                declared: 7,
                actual: 6
            }
        );
    }

    #[test]
    fn matching_trailer_count_is_accepted() {
        let text = EXAMPLE_DEPLOYMENT_TABLE.replace("newrt|end", "newrt|end|6");
        let (t, _) = RoutingTable::parse(&text).unwrap();
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn unterminated_table_is_rejected() {
        let text = "newrt|start\nmse|100|-1|a\n";
        assert_eq!(
            RoutingTable::parse(text).unwrap_err(),
            RouteError::UnterminatedTable
        );
    }

    #[test]
    fn record_before_start_is_rejected() {
        let err = RoutingTable::parse("mse|100|-1|a\n").unwrap_err();
        assert!(matches!(err, RouteError::Syntax { line: 1, .. }));
    }

    #[test]
    fn rte_records_normalize_with_warning() {
        let text = "newrt|start\nrte|20001|endpoint-a\nnewrt|end\n";
        let (t, report) = RoutingTable::parse(text).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.entries[0].subid, -1);
        assert_eq!(groups(&t.entries[0]), vec![vec!["endpoint-a"]]);
        assert!(report.warnings[0].contains("deprecated"));
        // Normalized form serializes as mse.
        assert!(t.serialize().contains("mse|20001|-1|endpoint-a"));
    }

    #[test]
    fn whitespace_and_comments_are_tolerated() {
        let text = "
# platform seed
newrt | start | boot

mse | 100 | -1 | a , b ; c
newrt | end | 1
";
        let (t, _) = RoutingTable::parse(text).unwrap();
        assert_eq!(t.name.as_deref(), Some("boot"));
        assert_eq!(groups(&t.entries[0]), vec![vec!["a", "b"], vec!["c"]]);
    }

    #[test]
    fn sender_qualified_entries_match_only_that_sender() {
        let text = "newrt|start\nmse|100,app-a|-1|dest-a\nmse|100|-1|dest-any\nnewrt|end\n";
        let (t, _) = RoutingTable::parse(text).unwrap();
        assert_eq!(
            t.resolve(100, -1, "app-a").unwrap(),
            Resolution::Endpoints(vec!["dest-a".into()])
        );
        assert_eq!(
            t.resolve(100, -1, "app-b").unwrap(),
            Resolution::Endpoints(vec!["dest-any".into()])
        );
    }

    #[test]
    fn exact_subid_wins_over_wildcard_fallback() {
        let text = "newrt|start\nmse|12050|-1|dflt\nmse|12050|7|specific\nnewrt|end\n";
        let (t, _) = RoutingTable::parse(text).unwrap();
        assert_eq!(
            t.resolve(12050, 7, "x").unwrap(),
            Resolution::Endpoints(vec!["specific".into()])
        );
        assert_eq!(
            t.resolve(12050, 9, "x").unwrap(),
            Resolution::Endpoints(vec!["dflt".into()]),
            "unknown subid falls back to the -1 entry"
        );
        assert_eq!(
            t.resolve(12050, -1, "x").unwrap(),
            Resolution::Endpoints(vec!["dflt".into()])
        );
    }

    #[test]
    fn missing_key_yields_exact_no_route_diagnostic() {
        let (t, _) = RoutingTable::parse(EXAMPLE_DEPLOYMENT_TABLE).unwrap();
        let err = t.resolve(31337, -1, "x").unwrap_err();
        assert_eq!(err.to_string(), "No route table entry for mtype=31337");
    }

    #[test]
    fn meid_target_resolves_to_ownership_marker() {
        let (t, _) = RoutingTable::parse(EXAMPLE_DEPLOYMENT_TABLE).unwrap();
        assert_eq!(t.resolve(12040, 200, "x").unwrap(), Resolution::MeidOwner);
    }

    /// Frozen expectation for the fanout/round-robin target `X;Y1,Y2;Z`:
    /// every resolve returns X and Z, while Y1/Y2 alternate starting at Y1.
    #[test]
    fn fanout_copies_and_round_robin_rotation() {
        let text = "newrt|start\nmse|300|-1|X;Y1,Y2;Z\nnewrt|end\n";
        let (t, _) = RoutingTable::parse(text).unwrap();
        let picks: Vec<Resolution> =
            (0..4).map(|_| t.resolve(300, -1, "s").unwrap()).collect();
        let ep = |v: &[&str]| {
            Resolution::Endpoints(v.iter().map(|s| s.to_string()).collect())
        };
        assert_eq!(
            picks,
            vec![
                ep(&["X", "Y1", "Z"]),
                ep(&["X", "Y2", "Z"]),
                ep(&["X", "Y1", "Z"]),
                ep(&["X", "Y2", "Z"]),
            ]
        );
    }

    #[test]
    fn merge_replaces_matching_keys_and_appends_new_ones() {
        let (base, _) = RoutingTable::parse(EXAMPLE_DEPLOYMENT_TABLE).unwrap();
        let update_text = "\
newrt|start
mse|30001|-1|service-ricxapp-C-rmr.ricxapp
mse|30999|-1|service-ricxapp-D-rmr.ricxapp
newrt|end
";
        let (update, _) = RoutingTable::parse(update_text).unwrap();
        let (merged, stash) = base.merge_dynamic_update(&update);
        assert_eq!(merged.len(), 7, "one replaced, one appended");
        let e30001 = merged
            .entries
            .iter()
            .find(|e| e.mtype == 30001)
            .unwrap();
        assert_eq!(groups(e30001), vec![vec!["service-ricxapp-C-rmr.ricxapp"]]);
        assert!(merged.entries.iter().any(|e| e.mtype == 30999));
        assert_eq!(
            stash,
            vec![
                "mse|30001|-1|service-ricxapp-C-rmr.ricxapp".to_string(),
                "mse|30999|-1|service-ricxapp-D-rmr.ricxapp".to_string(),
            ]
        );
    }

    #[test]
    fn subscription_entries_merge_and_remove_per_subscriber() {
        let mut t = RoutingTable::empty();
        t.add_subscription_entries(&[12050], 5, "xapp-a");
        t.add_subscription_entries(&[12050], 5, "xapp-b");
        assert_eq!(t.len(), 1);
        assert_eq!(groups(&t.entries[0]), vec![vec!["xapp-a"], vec!["xapp-b"]]);
        // Re-adding an existing subscriber is a no-op.
        t.add_subscription_entries(&[12050], 5, "xapp-a");
        assert_eq!(groups(&t.entries[0]).len(), 2);

        // Both subscribers receive every message (fanout groups).
        assert_eq!(
            t.resolve(12050, 5, "e2").unwrap(),
            Resolution::Endpoints(vec!["xapp-a".into(), "xapp-b".into()])
        );

        // One subscriber leaves; the other keeps receiving.
        t.remove_subid(5, Some("xapp-a"));
        assert_eq!(t.len(), 1);
        assert_eq!(
            t.resolve(12050, 5, "e2").unwrap(),
            Resolution::Endpoints(vec!["xapp-b".into()])
        );

        // The last subscriber leaves; the entry disappears.
        t.remove_subid(5, Some("xapp-b"));
        assert!(t.is_empty());
    }

    #[test]
    fn remove_subid_purges_ownership_routes_in_full_mode() {
        let mut t = RoutingTable::empty();
        t.add_meid_entry(12040, 9);
        t.add_subscription_entries(&[12050], 9, "xapp-a");
        assert_eq!(t.remove_subid(9, None), 2);
        assert!(t.is_empty());
    }

    #[test]
    fn remove_endpoint_purges_every_reference() {
        let text = "newrt|start\nmse|1|-1|a;b\nmse|2|-1|a,b\nmse|3|-1|a\nnewrt|end\n";
        let (mut t, _) = RoutingTable::parse(text).unwrap();
        assert!(t.references_endpoint("a"));
        t.remove_endpoint("a");
        assert!(!t.references_endpoint("a"));
        assert_eq!(t.len(), 2, "entry with only 'a' disappears");
        assert_eq!(groups(&t.entries[0]), vec![vec!["b"]]);
        assert_eq!(groups(&t.entries[1]), vec![vec!["b"]]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_endpoint() -> impl Strategy<Value = String> {
            "[a-z][a-z0-9_.-]{0,14}"
        }

        fn arb_target() -> impl Strategy<Value = RouteTarget> {
            prop_oneof![
                1 => Just(RouteTarget::MeidOwner),
                9 => proptest::collection::vec(
                    proptest::collection::vec(arb_endpoint(), 1..4)
                        .prop_map(EndpointGroup::new),
                    1..4
                )
                .prop_map(RouteTarget::Groups),
            ]
        }

        fn arb_entry() -> impl Strategy<Value = RouteEntry> {
            (
                0u32..40000,
                proptest::option::of("[a-z][a-z0-9_.-]{0,10}"),
                -1i32..400,
                arb_target(),
            )
                .prop_map(|(mtype, sender, subid, target)| RouteEntry {
                    mtype,
                    sender,
                    subid,
                    target,
                })
        }

        fn arb_table() -> impl Strategy<Value = RoutingTable> {
            (
                proptest::option::of("[a-z][a-z0-9_]{0,10}"),
                proptest::collection::vec(arb_entry(), 0..12),
            )
                .prop_map(|(name, entries)| RoutingTable { name, entries })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(160))]

            /// serialize -> parse is the identity on canonical tables.
            #[test]
            fn parse_serialize_round_trip(t in arb_table()) {
                let text = t.serialize();
                let (parsed, report) = RoutingTable::parse(&text).unwrap();
                prop_assert_eq!(&parsed, &t);
                prop_assert!(report.warnings.is_empty());
                prop_assert_eq!(parsed.serialize(), text);
            }

            /// Round robin is fair: over k*m picks of a k-member group, every
            /// member is chosen exactly m times, cycling from the first.
            #[test]
            fn round_robin_fairness(members in proptest::collection::vec(arb_endpoint(), 1..6), m in 1usize..5) {
                let g = EndpointGroup::new(members.clone());
                let mut counts = std::collections::HashMap::new();
                for _ in 0..members.len() * m {
                    *counts.entry(g.pick().unwrap().to_string()).or_insert(0usize) += 1;
                }
                // Duplicate member names accumulate their share.
                let mut expected = std::collections::HashMap::new();
                for node in &members {
                    *expected.entry(node.clone()).or_insert(0usize) += m;
                }
                prop_assert_eq!(counts, expected);
            }

            /// Resolution never invents endpoints: every resolved destination
            /// appears verbatim in some group of the matched table.
            #[test]
            fn resolve_returns_known_endpoints(t in arb_table(), mtype in 0u32..40000, subid in -1i32..400) {
                if let Ok(Resolution::Endpoints(eps)) = t.resolve(mtype, subid, "s") {
                    for ep in eps {
                        prop_assert!(t.references_endpoint(&ep));
                    }
                }
            }
        }
    }
}
