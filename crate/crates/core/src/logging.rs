//! Structured logging with simulated timestamps.
//!
//! Every platform component and xApp instance writes to a [`LogBuffer`]:
//! an in-memory ring of structured entries whose timestamps come from the
//! simulated clock, so log output is reproducible run to run. Entries render
//! to the single-line JSON shape used by RIC platform loggers
//! (`{"ts":…,"crit":"INFO","id":"…","msg":"…"}`).

use serde::{Deserialize, Serialize};
use std::fmt;

/// Severity, ordered `Debug < Info < Warning < Error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "DEBUG")]
    Debug,
    #[serde(rename = "INFO")]
    Info,
    #[serde(rename = "WARNING")]
    Warning,
    #[serde(rename = "ERROR")]
    Error,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Debug => "DEBUG",
            Level::Info => "INFO",
            Level::Warning => "WARNING",
            Level::Error => "ERROR",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One structured log record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Simulated timestamp in milliseconds.
    pub ts: u64,
    /// Severity.
    pub crit: Level,
    /// Identity of the writing process (instance or component name).
    pub id: String,
    /// Human-readable message.
    pub msg: String,
}

impl LogEntry {
    /// Single-line JSON rendering.
    pub fn render(&self) -> String {
        serde_json::to_string(self).expect("log entry serializes")
    }
}

/// Bounded in-memory log sink with a per-buffer severity threshold.
#[derive(Debug)]
pub struct LogBuffer {
    id: String,
    min_level: Level,
    cap: usize,
    entries: Vec<LogEntry>,
}

impl LogBuffer {
    pub fn new(id: impl Into<String>) -> Self {
        LogBuffer {
            id: id.into(),
            min_level: Level::Debug,
            cap: 4096,
            entries: Vec::new(),
        }
    }

    /// Drop entries below `level` at write time.
    pub fn set_min_level(&mut self, level: Level) {
        self.min_level = level;
    }

    pub fn min_level(&self) -> Level {
        self.min_level
    }

    /// Append an entry stamped `now_ms`. Oldest entries are evicted once the
    /// buffer holds `cap` records.
    pub fn log(&mut self, now_ms: u64, level: Level, msg: impl Into<String>) {
        if level < self.min_level {
            return;
        }
        if self.entries.len() == self.cap {
            self.entries.remove(0);
        }
        self.entries.push(LogEntry {
            ts: now_ms,
            crit: level,
            id: self.id.clone(),
            msg: msg.into(),
        });
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    /// Entries at or above `level`.
    pub fn at_least(&self, level: Level) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter().filter(move |e| e.crit >= level)
    }

    /// True if any entry's message contains `needle`.
    pub fn contains(&self, needle: &str) -> bool {
        self.entries.iter().any(|e| e.msg.contains(needle))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn severity_is_totally_ordered() {
        assert!(Level::Debug < Level::Info);
        assert!(Level::Info < Level::Warning);
        assert!(Level::Warning < Level::Error);
    }

    #[test]
    fn threshold_filters_at_write_time() {
        let mut buf = LogBuffer::new("app");
        buf.set_min_level(Level::Warning);
        buf.log(1, Level::Info, "quiet");
        buf.log(2, Level::Error, "loud");
        assert_eq!(buf.entries().len(), 1);
        assert_eq!(buf.entries()[0].msg, "loud");
    }

    #[test]
    fn renders_single_line_json() {
        let e = LogEntry {
            ts: 1234,
            crit: Level::Info,
            id: "kpm_monitor".into(),
            msg: "subscription active".into(),
        };
        assert_eq!(
            e.render(),
            r#"{"ts":1234,"crit":"INFO","id":"kpm_monitor","msg":"subscription active"}"#
        );
        let back: LogEntry = serde_json::from_str(&e.render()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut buf = LogBuffer::new("x");
        buf.cap = 3;
        for i in 0..5u64 {
            buf.log(i, Level::Info, format!("m{i}"));
        }
        let msgs: Vec<_> = buf.entries().iter().map(|e| e.msg.as_str()).collect();
        assert_eq!(msgs, vec!["m2", "m3", "m4"]);
    }
}
