//! Access/error log emission, parsing, filtering, and labeling.
//!
//! The proxy tier writes one combined-format access line per outcome, with
//! the X-Forwarded-For IP as the final field, plus an error line for 499/503
//! outcomes. A configurable fraction of access lines is corrupted by
//! truncation to exercise the malformed-line filter. Parsed records are
//! labeled 1 when the status is 403/404 or the record came from the error
//! log, 0 otherwise, then merged and sorted by time.

use std::net::Ipv4Addr;

use crate::cluster::Outcome;
use crate::rng::{hash2, unit_f64};

/// Address the first-layer proxy sees as its immediate client.
pub const PROXY_HOST_IP: &str = "10.0.0.1";
/// Fixed user agent; only classifier-relevant fields vary.
pub const USER_AGENT: &str = "Mozilla/5.0 (compatible; SimLoad/1.0)";

fn body_bytes(status: u16) -> u32 {
    match status {
        200 => 615,
        404 => 153,
        503 => 190,
        _ => 0,
    }
}

/// Formats simulated seconds as a combined-log timestamp. Runs start at
/// 01/Jan/2024:00:00:00 +0000 simulated time.
fn format_clf_time(t: f64) -> String {
    let s = t.floor().max(0.0) as u64;
    let day = 1 + s / 86_400;
    let rem = s % 86_400;
    format!(
        "{:02}/Jan/2024:{:02}:{:02}:{:02} +0000",
        day,
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}

fn parse_clf_time(text: &str) -> Option<f64> {
    // DD/Jan/2024:HH:MM:SS +0000
    let (day, rest) = text.split_once("/Jan/2024:")?;
    let (clock, zone) = rest.split_once(' ')?;
    if zone != "+0000" {
        return None;
    }
    let day: u64 = day.parse().ok()?;
    if !(1..=31).contains(&day) || day.to_string().len() > 2 {
        return None;
    }
    let mut parts = clock.split(':');
    let h: u64 = parts.next()?.parse().ok()?;
    let m: u64 = parts.next()?.parse().ok()?;
    let s: u64 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || h > 23 || m > 59 || s > 59 {
        return None;
    }
    Some(((day - 1) * 86_400 + h * 3600 + m * 60 + s) as f64)
}

fn format_error_time(t: f64) -> String {
    let s = t.floor().max(0.0) as u64;
    let day = 1 + s / 86_400;
    let rem = s % 86_400;
    format!(
        "2024/01/{:02} {:02}:{:02}:{:02}",
        day,
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}

fn parse_error_time(date: &str, clock: &str) -> Option<f64> {
    let day: u64 = date.strip_prefix("2024/01/")?.parse().ok()?;
    if !(1..=31).contains(&day) {
        return None;
    }
    let mut parts = clock.split(':');
    let h: u64 = parts.next()?.parse().ok()?;
    let m: u64 = parts.next()?.parse().ok()?;
    let s: u64 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || h > 23 || m > 59 || s > 59 {
        return None;
    }
    Some(((day - 1) * 86_400 + h * 3600 + m * 60 + s) as f64)
}

/// Reason carried by an error-log line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorReason {
    Timeout,
    ConnectionRefused,
}

impl ErrorReason {
    fn as_str(&self) -> &'static str {
        match self {
            ErrorReason::Timeout => "upstream timeout",
            ErrorReason::ConnectionRefused => "connection refused",
        }
    }
}

/// Renders the canonical access line for an outcome.
pub fn access_line(t: f64, path: &str, status: u16, xff_ip: Ipv4Addr) -> String {
    format!(
        "{PROXY_HOST_IP} - - [{}] \"GET {path} HTTP/1.1\" {status} {} \"-\" \"{USER_AGENT}\" \"{xff_ip}\"",
        format_clf_time(t),
        body_bytes(status)
    )
}

/// Renders the error line for a failed outcome; 499 reads as a timeout,
/// 503 as a refused connection.
pub fn error_line(t: f64, status: u16, xff_ip: Ipv4Addr) -> Option<String> {
    let reason = match status {
        499 => ErrorReason::Timeout,
        503 => ErrorReason::ConnectionRefused,
        _ => return None,
    };
    Some(format!(
        "{} [error] {}, client: {xff_ip}",
        format_error_time(t),
        reason.as_str()
    ))
}

/// Log lines produced for one outcome.
#[derive(Debug, Clone)]
pub struct LogEmission {
    pub access_line: String,
    pub error_line: Option<String>,
    pub corrupted: bool,
}

/// Emits the log lines for an outcome: always one access line, plus an error
/// line for 499/503. With probability `malformed_log_rate` (drawn from the
/// corruption stream keyed by `line_index`) the access line is truncated at a
/// random offset.
pub fn emit(
    outcome: &Outcome,
    malformed_log_rate: f64,
    corruption_seed: u64,
    line_index: u64,
) -> LogEmission {
    let mut line = access_line(
        outcome.t_complete,
        &outcome.request.path,
        outcome.status,
        outcome.request.source_ip,
    );
    let corrupted = unit_f64(hash2(corruption_seed, line_index, 0)) < malformed_log_rate;
    if corrupted {
        let len = line.len() as u64;
        let cut = 1 + hash2(corruption_seed, line_index, 1) % (len - 1);
        line.truncate(cut as usize);
    }
    LogEmission {
        error_line: error_line(
            outcome.t_complete,
            outcome.status,
            outcome.request.source_ip,
        ),
        access_line: line,
        corrupted,
    }
}

/// Structured fields of a well-formed access line.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessRecord {
    pub t: f64,
    pub xff_ip: Ipv4Addr,
    pub path: String,
    pub status: u16,
}

/// Structured fields of a well-formed error line.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub t: f64,
    pub xff_ip: Ipv4Addr,
    pub reason: ErrorReason,
}

/// Parses an access line. Malformed input yields `None`, never a panic.
pub fn parse_access(line: &str) -> Option<AccessRecord> {
    let (proxy, rest) = line.split_once(' ')?;
    proxy.parse::<Ipv4Addr>().ok()?;
    let rest = rest.strip_prefix("- - [")?;
    let (time_str, rest) = rest.split_once("] \"")?;
    let t = parse_clf_time(time_str)?;
    let (request, rest) = rest.split_once("\" ")?;
    let mut req = request.split(' ');
    let method = req.next()?;
    let path = req.next()?;
    let proto = req.next()?;
    if req.next().is_some() || method.is_empty() || !proto.starts_with("HTTP/") {
        return None;
    }
    let (status_str, rest) = rest.split_once(' ')?;
    let status: u16 = status_str.parse().ok()?;
    let (bytes_str, rest) = rest.split_once(' ')?;
    bytes_str.parse::<u64>().ok()?;
    let rest = rest.strip_prefix('"')?;
    let (_referer, rest) = rest.split_once("\" \"")?;
    let (_agent, rest) = rest.split_once("\" \"")?;
    let xff = rest.strip_suffix('"')?;
    if xff.contains('"') {
        return None;
    }
    let xff_ip = xff.parse::<Ipv4Addr>().ok()?;
    Some(AccessRecord {
        t,
        xff_ip,
        path: path.to_string(),
        status,
    })
}

/// Parses an error line. Malformed input yields `None`.
pub fn parse_error(line: &str) -> Option<ErrorRecord> {
    let (date, rest) = line.split_once(' ')?;
    let (clock, rest) = rest.split_once(' ')?;
    let t = parse_error_time(date, clock)?;
    let rest = rest.strip_prefix("[error] ")?;
    let (reason_str, client) = rest.split_once(", client: ")?;
    let reason = match reason_str {
        "upstream timeout" => ErrorReason::Timeout,
        "connection refused" => ErrorReason::ConnectionRefused,
        _ => return None,
    };
    let xff_ip = client.parse::<Ipv4Addr>().ok()?;
    Some(ErrorRecord { t, xff_ip, reason })
}

/// One labeled row of the training table. Error-origin records carry
/// status 0 and an empty path.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub xff_ip: Ipv4Addr,
    pub path: String,
    pub status: u16,
    pub t: f64,
    pub label: u8,
}

impl LabeledRecord {
    pub fn from_error_log(&self) -> bool {
        self.status == 0
    }

    pub fn is_scan_label(&self) -> bool {
        matches!(self.status, 403 | 404)
    }
}

/// Result of parsing, filtering, and labeling the two log files.
#[derive(Debug, Clone, Default)]
pub struct Preprocessed {
    pub records: Vec<LabeledRecord>,
    pub dropped_malformed: usize,
}

/// Builds the labeled table: malformed lines dropped, access records labeled
/// by the 403/404 rule, error records labeled 1, merged and sorted by time.
pub fn preprocess<'a>(
    access_lines: impl Iterator<Item = &'a str>,
    error_lines: impl Iterator<Item = &'a str>,
) -> Preprocessed {
    let mut out = Preprocessed::default();
    for line in access_lines {
        match parse_access(line) {
            Some(rec) => out.records.push(LabeledRecord {
                label: u8::from(matches!(rec.status, 403 | 404)),
                xff_ip: rec.xff_ip,
                path: rec.path,
                status: rec.status,
                t: rec.t,
            }),
            None => out.dropped_malformed += 1,
        }
    }
    for line in error_lines {
        match parse_error(line) {
            Some(rec) => out.records.push(LabeledRecord {
                xff_ip: rec.xff_ip,
                path: String::new(),
                status: 0,
                t: rec.t,
                label: 1,
            }),
            None => out.dropped_malformed += 1,
        }
    }
    out.records
        .sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite timestamps"));
    out
}
