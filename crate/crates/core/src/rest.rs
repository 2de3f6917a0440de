//! In-process REST plumbing.
//!
//! miniric components talk REST to each other exactly as their full-scale
//! counterparts do — same methods, paths, bodies, and status codes — but the
//! requests are dispatched in-process instead of over sockets. This module
//! provides the request/response types and path-pattern matching shared by
//! the platform surfaces and per-app routers.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
    Put,
    Delete,
}

#[derive(Debug, Clone)]
pub struct RestRequest {
    pub method: Method,
    pub path: String,
    pub body: Vec<u8>,
}

impl RestRequest {
    pub fn get(path: impl Into<String>) -> Self {
        RestRequest {
            method: Method::Get,
            path: path.into(),
            body: Vec::new(),
        }
    }

    pub fn delete(path: impl Into<String>) -> Self {
        RestRequest {
            method: Method::Delete,
            path: path.into(),
            body: Vec::new(),
        }
    }

    pub fn post_json(path: impl Into<String>, body: &impl Serialize) -> Self {
        RestRequest {
            method: Method::Post,
            path: path.into(),
            body: serde_json::to_vec(body).expect("body serializes"),
        }
    }

    pub fn post_raw(path: impl Into<String>, body: Vec<u8>) -> Self {
        RestRequest {
            method: Method::Post,
            path: path.into(),
            body,
        }
    }

    /// Parse the body as JSON.
    pub fn json(&self) -> Result<serde_json::Value, serde_json::Error> {
        serde_json::from_slice(&self.body)
    }
}

#[derive(Debug, Clone)]
pub struct RestResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

impl RestResponse {
    pub fn empty(status: u16) -> Self {
        RestResponse {
            status,
            body: Vec::new(),
        }
    }

    pub fn json(status: u16, body: &impl Serialize) -> Self {
        RestResponse {
            status,
            body: serde_json::to_vec(body).expect("body serializes"),
        }
    }

    pub fn text(status: u16, body: impl Into<String>) -> Self {
        RestResponse {
            status,
            body: body.into().into_bytes(),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn json_body(&self) -> Result<serde_json::Value, serde_json::Error> {
        serde_json::from_slice(&self.body)
    }
}

/// Match `path` against `pattern`, where pattern segments of the form
/// `<name>` capture one path segment. Returns the captures in pattern order,
/// or `None` when the path does not match.
///
/// `match_path("/ric/v1/subscriptions/<id>", "/ric/v1/subscriptions/7")`
/// yields `Some(vec!["7"])`.
pub fn match_path(pattern: &str, path: &str) -> Option<Vec<String>> {
    let pat: Vec<&str> = pattern.trim_end_matches('/').split('/').collect();
    let got: Vec<&str> = path.trim_end_matches('/').split('/').collect();
    if pat.len() != got.len() {
        return None;
    }
    let mut caps = Vec::new();
    for (p, g) in pat.iter().zip(got.iter()) {
        if p.starts_with('<') && p.ends_with('>') {
            if g.is_empty() {
                return None;
            }
            caps.push((*g).to_string());
        } else if p != g {
            return None;
        }
    }
    Some(caps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_paths_match_without_captures() {
        assert_eq!(match_path("/ric/v1/health/ready", "/ric/v1/health/ready"), Some(vec![]));
        assert_eq!(match_path("/ric/v1/health/ready", "/ric/v1/health/alive"), None);
    }

    #[test]
    fn parameter_segments_capture() {
        assert_eq!(
            match_path("/ric/v1/subscriptions/<id>", "/ric/v1/subscriptions/42"),
            Some(vec!["42".to_string()])
        );
        assert_eq!(match_path("/ric/v1/subscriptions/<id>", "/ric/v1/subscriptions"), None);
    }

    #[test]
    fn captures_accept_service_names() {
        let caps = match_path(
            "/ric/v1/get_xapp_rest_restsubscriptions/<xapp_url>",
            "/ric/v1/get_xapp_rest_restsubscriptions/service-ricxapp-kpm_monitor-http.ricxapp:8080",
        )
        .unwrap();
        assert_eq!(caps, vec!["service-ricxapp-kpm_monitor-http.ricxapp:8080"]);
    }

    #[test]
    fn trailing_slash_is_tolerated() {
        assert_eq!(match_path("/ric/v1/config", "/ric/v1/config/"), Some(vec![]));
    }
}
