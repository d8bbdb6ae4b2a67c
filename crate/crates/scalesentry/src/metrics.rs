//! Status-code counter store with windowed-increase queries.
//!
//! This is the custom-metric source for the autoscaler: an append-only event
//! log over (time, tier, status code) supporting exact counts of matching
//! events inside a trailing window. Counts are exact rather than
//! rate-extrapolated so runs are reproducible.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::Tier;
use crate::error::{Error, Result};

/// Coarse status grouping used as a metric label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatusClass {
    TwoXx,
    FourXx,
    /// Client closed the request before a response was produced.
    ClientClosed,
    FiveXx,
}

impl StatusClass {
    pub fn of(code: u16) -> StatusClass {
        match code {
            499 => StatusClass::ClientClosed,
            200..=299 => StatusClass::TwoXx,
            400..=498 => StatusClass::FourXx,
            _ => StatusClass::FiveXx,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StatusClass::TwoXx => "2xx",
            StatusClass::FourXx => "4xx",
            StatusClass::ClientClosed => "499",
            StatusClass::FiveXx => "5xx",
        }
    }
}

/// One recorded status-code observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEvent {
    pub t: f64,
    pub tier: Tier,
    pub status_code: u16,
}

impl MetricEvent {
    pub fn status_class(&self) -> StatusClass {
        StatusClass::of(self.status_code)
    }
}

/// Label predicate for queries. `None` fields match anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct Selector {
    pub tier: Option<Tier>,
    pub status_class: Option<StatusClass>,
    pub status_code: Option<u16>,
}

impl Selector {
    pub fn five_xx(tier: Tier) -> Selector {
        Selector {
            tier: Some(tier),
            status_class: Some(StatusClass::FiveXx),
            status_code: None,
        }
    }

    pub fn matches(&self, event: &MetricEvent) -> bool {
        self.tier.is_none_or(|t| t == event.tier)
            && self.status_class.is_none_or(|c| c == event.status_class())
            && self.status_code.is_none_or(|c| c == event.status_code)
    }
}

/// Trailing query window anchored at query time.
#[derive(Debug, Clone, Copy)]
pub struct QueryWindow {
    duration_s: f64,
}

impl QueryWindow {
    pub fn new(duration_s: f64) -> Result<QueryWindow> {
        if duration_s > 0.0 {
            Ok(QueryWindow { duration_s })
        } else {
            Err(Error::Contract(format!(
                "query window duration {duration_s} must be positive"
            )))
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }
}

/// Append-only counter store. Timestamps must be nondecreasing.
#[derive(Debug, Default, Clone)]
pub struct CounterStore {
    events: Vec<MetricEvent>,
}

impl CounterStore {
    pub fn new() -> CounterStore {
        CounterStore::default()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn record(&mut self, t: f64, tier: Tier, status_code: u16) -> Result<()> {
        if let Some(last) = self.events.last() {
            if t < last.t {
                return Err(Error::Contract(format!(
                    "metric time regression: {t} after {}",
                    last.t
                )));
            }
        }
        self.events.push(MetricEvent {
            t,
            tier,
            status_code,
        });
        Ok(())
    }

    /// Exact count of matching events with `t` in `(now - duration, now]`.
    pub fn increase(&self, selector: &Selector, window: QueryWindow, now: f64) -> u64 {
        let lo = now - window.duration_s();
        // Timestamps are nondecreasing, so find the first index with t > lo.
        let start = self.events.partition_point(|e| e.t <= lo);
        self.events[start..]
            .iter()
            .take_while(|e| e.t <= now)
            .filter(|e| selector.matches(e))
            .count() as u64
    }

    /// Snapshot export: cumulative counts per (second, tier, class, code),
    /// one row per combination per second in which it grew.
    pub fn export_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "t,tier,status_class,status_code,count_cumulative")?;
        let mut cumulative: std::collections::BTreeMap<(Tier, StatusClass, u16), u64> =
            std::collections::BTreeMap::new();
        let mut idx = 0;
        while idx < self.events.len() {
            let second = self.events[idx].t.floor() as u64;
            let mut touched = std::collections::BTreeSet::new();
            while idx < self.events.len() && (self.events[idx].t.floor() as u64) == second {
                let e = &self.events[idx];
                let key = (e.tier, e.status_class(), e.status_code);
                *cumulative.entry(key).or_insert(0) += 1;
                touched.insert(key);
                idx += 1;
            }
            for key in touched {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    second,
                    key.0.as_str(),
                    key.1.as_str(),
                    key.2,
                    cumulative[&key]
                )?;
            }
        }
        Ok(())
    }
}
