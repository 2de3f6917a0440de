//! Shared data layer (SDL): a namespaced key/value store.
//!
//! Platform components and applications share one store but read and write
//! in isolated namespaces — the same key in two namespaces names two
//! different values. On top of plain get/set the store offers the
//! conditional primitives (`set_if`, `set_if_not_exists`, `delete_if`) that
//! applications use for optimistic concurrency, and prefix search
//! (`find_keys`, `find_and_get`) with results in ascending key order.
//!
//! Every operation takes effect atomically under one lock, so the store is
//! linearizable by construction; [`SdlStore::enable_recording`] captures the
//! execution order so tests can replay a concurrent history against a
//! sequential model and compare outcomes.
//!
//! With [`SdlStore::open`] the store appends each mutation to a JSON-lines
//! file and replays it on the next open, which is how state survives between
//! operator CLI invocations.

use parking_lot::Mutex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdlError {
    #[error("sdl persistence i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("sdl persistence corrupt at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("sdl value is not valid json: {0}")]
    BadJson(#[from] serde_json::Error),
}

/// One mutation or read, as recorded for replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdlOp {
    Set { ns: String, key: String, val: Vec<u8> },
    SetIfNotExists { ns: String, key: String, val: Vec<u8> },
    SetIf { ns: String, key: String, expected: Vec<u8>, val: Vec<u8> },
    Delete { ns: String, key: String },
    DeleteIf { ns: String, key: String, expected: Vec<u8> },
    Get { ns: String, key: String },
}

/// What an [`SdlOp`] returned when it executed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdlOutcome {
    /// Unconditional write or delete completed.
    Done,
    /// Conditional op: did the write/delete happen?
    Applied(bool),
    /// Read result.
    Value(Option<Vec<u8>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedOp {
    pub op: SdlOp,
    pub outcome: SdlOutcome,
}

/// Replay `history` against an in-memory sequential model, returning the
/// outcome each op *should* have had. A concurrent run of the real store is
/// linearizable iff its recorded outcomes equal this replay.
pub fn sequential_replay(history: &[RecordedOp]) -> Vec<SdlOutcome> {
    let mut model: HashMap<(String, String), Vec<u8>> = HashMap::new();
    history
        .iter()
        .map(|rec| match &rec.op {
            SdlOp::Set { ns, key, val } => {
                model.insert((ns.clone(), key.clone()), val.clone());
                SdlOutcome::Done
            }
            SdlOp::SetIfNotExists { ns, key, val } => {
                let k = (ns.clone(), key.clone());
                if model.contains_key(&k) {
                    SdlOutcome::Applied(false)
                } else {
                    model.insert(k, val.clone());
                    SdlOutcome::Applied(true)
                }
            }
            SdlOp::SetIf { ns, key, expected, val } => {
                let k = (ns.clone(), key.clone());
                if model.get(&k) == Some(expected) {
                    model.insert(k, val.clone());
                    SdlOutcome::Applied(true)
                } else {
                    SdlOutcome::Applied(false)
                }
            }
            SdlOp::Delete { ns, key } => {
                model.remove(&(ns.clone(), key.clone()));
                SdlOutcome::Done
            }
            SdlOp::DeleteIf { ns, key, expected } => {
                let k = (ns.clone(), key.clone());
                if model.get(&k) == Some(expected) {
                    model.remove(&k);
                    SdlOutcome::Applied(true)
                } else {
                    SdlOutcome::Applied(false)
                }
            }
            SdlOp::Get { ns, key } => {
                SdlOutcome::Value(model.get(&(ns.clone(), key.clone())).cloned())
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct PersistRecord<'a> {
    op: &'a str,
    ns: std::borrow::Cow<'a, str>,
    key: std::borrow::Cow<'a, str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    val: Option<String>,
}

struct Inner {
    namespaces: HashMap<String, BTreeMap<String, Vec<u8>>>,
    writer: Option<std::fs::File>,
    path: Option<PathBuf>,
    recorder: Option<Vec<RecordedOp>>,
}

impl std::fmt::Debug for Inner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Inner")
            .field("namespaces", &self.namespaces.len())
            .field("persistent", &self.path)
            .finish()
    }
}

/// The store itself. Cheap to share via `Arc`; all methods take `&self`.
#[derive(Debug)]
pub struct SdlStore {
    inner: Mutex<Inner>,
}

impl Default for SdlStore {
    fn default() -> Self {
        Self::new()
    }
}

impl SdlStore {
    /// Volatile in-memory store.
    pub fn new() -> Self {
        SdlStore {
            inner: Mutex::new(Inner {
                namespaces: HashMap::new(),
                writer: None,
                path: None,
                recorder: None,
            }),
        }
    }

    /// Store backed by an append-only JSON-lines file. Existing content is
    /// replayed; subsequent mutations append.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, SdlError> {
        let path = path.as_ref().to_path_buf();
        let store = Self::new();
        if path.exists() {
            let file = std::fs::File::open(&path)?;
            let reader = std::io::BufReader::new(file);
            let mut inner = store.inner.lock();
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: PersistRecord =
                    serde_json::from_str(&line).map_err(|e| SdlError::Corrupt {
                        line: idx + 1,
                        reason: e.to_string(),
                    })?;
                let ns = inner.namespaces.entry(rec.ns.into_owned()).or_default();
                match rec.op {
                    "set" => {
                        let hexval = rec.val.as_deref().unwrap_or("");
                        let bytes = hex::decode(hexval).map_err(|e| SdlError::Corrupt {
                            line: idx + 1,
                            reason: e.to_string(),
                        })?;
                        ns.insert(rec.key.into_owned(), bytes);
                    }
                    "del" => {
                        ns.remove(rec.key.as_ref());
                    }
                    other => {
                        return Err(SdlError::Corrupt {
                            line: idx + 1,
                            reason: format!("unknown op {other:?}"),
                        })
                    }
                }
            }
        }
        let writer = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)?;
        {
            let mut inner = store.inner.lock();
            inner.writer = Some(writer);
            inner.path = Some(path);
        }
        Ok(store)
    }

    /// Begin capturing every operation and its outcome in execution order.
    pub fn enable_recording(&self) {
        self.inner.lock().recorder = Some(Vec::new());
    }

    /// Stop capturing and hand back the recorded history.
    pub fn take_recording(&self) -> Vec<RecordedOp> {
        self.inner.lock().recorder.take().unwrap_or_default()
    }

    /// Liveness of the store: true when in-memory, or when the backing file
    /// is still writable.
    pub fn healthcheck(&self) -> bool {
        let mut inner = self.inner.lock();
        match inner.writer.as_mut() {
            None => true,
            Some(w) => w.flush().is_ok(),
        }
    }

    /// Human-oriented status line for the operator surface.
    pub fn status(&self) -> String {
        let inner = self.inner.lock();
        let keys: usize = inner.namespaces.values().map(|m| m.len()).sum();
        match &inner.path {
            Some(p) => format!(
                "sdl: ok ({} namespaces, {} keys, persisted at {})",
                inner.namespaces.len(),
                keys,
                p.display()
            ),
            None => format!(
                "sdl: ok ({} namespaces, {} keys, in-memory)",
                inner.namespaces.len(),
                keys
            ),
        }
    }

    pub fn set(&self, ns: &str, key: &str, val: impl Into<Vec<u8>>) -> Result<(), SdlError> {
        let val = val.into();
        let mut inner = self.inner.lock();
        inner
            .namespaces
            .entry(ns.to_string())
            .or_default()
            .insert(key.to_string(), val.clone());
        Self::persist(&mut inner, "set", ns, key, Some(&val))?;
        Self::record(&mut inner, SdlOp::Set { ns: ns.into(), key: key.into(), val }, SdlOutcome::Done);
        Ok(())
    }

    pub fn get(&self, ns: &str, key: &str) -> Option<Vec<u8>> {
        let mut inner = self.inner.lock();
        let got = inner
            .namespaces
            .get(ns)
            .and_then(|m| m.get(key))
            .cloned();
        Self::record(
            &mut inner,
            SdlOp::Get { ns: ns.into(), key: key.into() },
            SdlOutcome::Value(got.clone()),
        );
        got
    }

    pub fn delete(&self, ns: &str, key: &str) -> Result<(), SdlError> {
        let mut inner = self.inner.lock();
        if let Some(m) = inner.namespaces.get_mut(ns) {
            m.remove(key);
        }
        Self::persist(&mut inner, "del", ns, key, None)?;
        Self::record(&mut inner, SdlOp::Delete { ns: ns.into(), key: key.into() }, SdlOutcome::Done);
        Ok(())
    }

    /// Write only if the key is absent. Returns whether the write happened.
    pub fn set_if_not_exists(
        &self,
        ns: &str,
        key: &str,
        val: impl Into<Vec<u8>>,
    ) -> Result<bool, SdlError> {
        let val = val.into();
        let mut inner = self.inner.lock();
        let exists = inner.namespaces.get(ns).is_some_and(|m| m.contains_key(key));
        let applied = !exists;
        if applied {
            inner
                .namespaces
                .entry(ns.to_string())
                .or_default()
                .insert(key.to_string(), val.clone());
            Self::persist(&mut inner, "set", ns, key, Some(&val))?;
        }
        Self::record(
            &mut inner,
            SdlOp::SetIfNotExists { ns: ns.into(), key: key.into(), val },
            SdlOutcome::Applied(applied),
        );
        Ok(applied)
    }

    /// Compare-and-swap: write `val` only if the current value equals
    /// `expected`. Returns whether the write happened.
    pub fn set_if(
        &self,
        ns: &str,
        key: &str,
        expected: &[u8],
        val: impl Into<Vec<u8>>,
    ) -> Result<bool, SdlError> {
        let val = val.into();
        let mut inner = self.inner.lock();
        let matches = inner
            .namespaces
            .get(ns)
            .and_then(|m| m.get(key))
            .is_some_and(|cur| cur.as_slice() == expected);
        if matches {
            inner
                .namespaces
                .get_mut(ns)
                .expect("namespace exists when value matched")
                .insert(key.to_string(), val.clone());
            Self::persist(&mut inner, "set", ns, key, Some(&val))?;
        }
        Self::record(
            &mut inner,
            SdlOp::SetIf {
                ns: ns.into(),
                key: key.into(),
                expected: expected.to_vec(),
                val,
            },
            SdlOutcome::Applied(matches),
        );
        Ok(matches)
    }

    /// Compare-and-delete: remove the key only if the current value equals
    /// `expected`. Returns whether the delete happened.
    pub fn delete_if(&self, ns: &str, key: &str, expected: &[u8]) -> Result<bool, SdlError> {
        let mut inner = self.inner.lock();
        let matches = inner
            .namespaces
            .get(ns)
            .and_then(|m| m.get(key))
            .is_some_and(|cur| cur.as_slice() == expected);
        if matches {
            inner
                .namespaces
                .get_mut(ns)
                .expect("namespace exists when value matched")
                .remove(key);
            Self::persist(&mut inner, "del", ns, key, None)?;
        }
        Self::record(
            &mut inner,
            SdlOp::DeleteIf {
                ns: ns.into(),
                key: key.into(),
                expected: expected.to_vec(),
            },
            SdlOutcome::Applied(matches),
        );
        Ok(matches)
    }

    /// Keys in `ns` starting with `prefix`, ascending. An empty prefix
    /// returns every key in the namespace.
    pub fn find_keys(&self, ns: &str, prefix: &str) -> Vec<String> {
        let inner = self.inner.lock();
        inner
            .namespaces
            .get(ns)
            .map(|m| {
                m.keys()
                    .filter(|k| k.starts_with(prefix))
                    .cloned()
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Key/value pairs in `ns` whose keys start with `prefix`, in ascending
    /// key order.
    pub fn find_and_get(&self, ns: &str, prefix: &str) -> BTreeMap<String, Vec<u8>> {
        let inner = self.inner.lock();
        inner
            .namespaces
            .get(ns)
            .map(|m| {
                m.iter()
                    .filter(|(k, _)| k.starts_with(prefix))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// All namespace names that currently hold at least one key, sorted.
    pub fn namespaces(&self) -> Vec<String> {
        let inner = self.inner.lock();
        let mut names: Vec<String> = inner
            .namespaces
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(n, _)| n.clone())
            .collect();
        names.sort();
        names
    }

    /// Serialize a value as JSON and store it.
    pub fn set_json<T: Serialize>(&self, ns: &str, key: &str, val: &T) -> Result<(), SdlError> {
        self.set(ns, key, serde_json::to_vec(val)?)
    }

    /// Read a key and deserialize it from JSON.
    pub fn get_json<T: DeserializeOwned>(&self, ns: &str, key: &str) -> Result<Option<T>, SdlError> {
        match self.get(ns, key) {
            None => Ok(None),
            Some(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
        }
    }

    fn persist(
        inner: &mut Inner,
        op: &str,
        ns: &str,
        key: &str,
        val: Option<&[u8]>,
    ) -> Result<(), SdlError> {
        if let Some(w) = inner.writer.as_mut() {
            let rec = PersistRecord {
                op,
                ns: ns.into(),
                key: key.into(),
                val: val.map(hex::encode),
            };
            let mut line = serde_json::to_vec(&rec).expect("record serializes");
            line.push(b'\n');
            w.write_all(&line)?;
            w.flush()?;
        }
        Ok(())
    }

    fn record(inner: &mut Inner, op: SdlOp, outcome: SdlOutcome) {
        if let Some(rec) = inner.recorder.as_mut() {
            rec.push(RecordedOp { op, outcome });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn namespaces_are_isolated() {
        let s = SdlStore::new();
        s.set("ns_a", "k", "va").unwrap();
        s.set("ns_b", "k", "vb").unwrap();
        assert_eq!(s.get("ns_a", "k"), Some(b"va".to_vec()));
        assert_eq!(s.get("ns_b", "k"), Some(b"vb".to_vec()));
        s.delete("ns_a", "k").unwrap();
        assert_eq!(s.get("ns_a", "k"), None);
        assert_eq!(s.get("ns_b", "k"), Some(b"vb".to_vec()));
    }

    #[test]
    fn conditional_ops_apply_only_on_match() {
        let s = SdlStore::new();
        assert!(s.set_if_not_exists("ns", "k", "v1").unwrap());
        assert!(!s.set_if_not_exists("ns", "k", "v2").unwrap());
        assert_eq!(s.get("ns", "k"), Some(b"v1".to_vec()));

        assert!(s.set_if("ns", "k", b"v1", "v2").unwrap());
        assert!(!s.set_if("ns", "k", b"v1", "v3").unwrap());
        assert_eq!(s.get("ns", "k"), Some(b"v2".to_vec()));

        assert!(!s.delete_if("ns", "k", b"nope").unwrap());
        assert!(s.delete_if("ns", "k", b"v2").unwrap());
        assert_eq!(s.get("ns", "k"), None);
        // Conditions on absent keys never match.
        assert!(!s.set_if("ns", "k", b"v2", "v4").unwrap());
        assert!(!s.delete_if("ns", "k", b"v2").unwrap());
    }

    #[test]
    fn prefix_search_is_sorted_and_empty_prefix_matches_all() {
        let s = SdlStore::new();
        for k in ["meas_3", "meas_1", "meas_2", "other"] {
            s.set("ns", k, k.as_bytes().to_vec()).unwrap();
        }
        assert_eq!(s.find_keys("ns", "meas_"), vec!["meas_1", "meas_2", "meas_3"]);
        assert_eq!(
            s.find_keys("ns", ""),
            vec!["meas_1", "meas_2", "meas_3", "other"]
        );
        let got = s.find_and_get("ns", "meas_");
        assert_eq!(got.len(), 3);
        assert_eq!(got["meas_2"], b"meas_2".to_vec());
        assert!(s.find_keys("missing_ns", "").is_empty());
    }

    #[test]
    fn find_and_get_agrees_with_find_keys() {
        let s = SdlStore::new();
        for i in 0..20 {
            s.set("ns", &format!("k{i:02}"), vec![i as u8]).unwrap();
        }
        let keys = s.find_keys("ns", "k1");
        let pairs = s.find_and_get("ns", "k1");
        assert_eq!(keys, pairs.keys().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn recording_matches_sequential_replay_for_single_thread() {
        let s = SdlStore::new();
        s.enable_recording();
        s.set("n", "a", "1").unwrap();
        s.set_if_not_exists("n", "a", "2").unwrap();
        s.set_if("n", "a", b"1", "3").unwrap();
        s.get("n", "a");
        s.delete_if("n", "a", b"3").unwrap();
        s.get("n", "a");
        let hist = s.take_recording();
        let expected = sequential_replay(&hist);
        let actual: Vec<SdlOutcome> = hist.iter().map(|r| r.outcome.clone()).collect();
        assert_eq!(actual, expected);
        assert_eq!(actual[3], SdlOutcome::Value(Some(b"3".to_vec())));
        assert_eq!(actual[5], SdlOutcome::Value(None));
    }

    #[test]
    fn persistence_round_trips_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sdl.jsonl");
        {
            let s = SdlStore::open(&path).unwrap();
            s.set("ns", "keep", "v1").unwrap();
            s.set("ns", "gone", "v2").unwrap();
            s.delete("ns", "gone").unwrap();
            s.set_if("ns", "keep", b"v1", "v3").unwrap();
        }
        let s = SdlStore::open(&path).unwrap();
        assert_eq!(s.get("ns", "keep"), Some(b"v3".to_vec()));
        assert_eq!(s.get("ns", "gone"), None);
        assert!(s.healthcheck());
        assert!(s.status().contains("persisted"));
    }

    #[test]
    fn corrupt_persistence_is_reported_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sdl.jsonl");
        std::fs::write(&path, "{\"op\":\"set\",\"ns\":\"a\",\"key\":\"k\",\"val\":\"ff\"}\nnot json\n").unwrap();
        match SdlStore::open(&path) {
            Err(SdlError::Corrupt { line: 2, .. }) => {}
            other => panic!("expected corrupt-line error, got {other:?}"),
        }
    }

    #[test]
    fn json_helpers_round_trip() {
        let s = SdlStore::new();
        s.set_json("ns", "obj", &serde_json::json!({"a": 1})).unwrap();
        let v: Option<serde_json::Value> = s.get_json("ns", "obj").unwrap();
        assert_eq!(v, Some(serde_json::json!({"a": 1})));
        let missing: Option<serde_json::Value> = s.get_json("ns", "nope").unwrap();
        assert!(missing.is_none());
    }
}
