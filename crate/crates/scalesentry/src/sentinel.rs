//! The scheduled detection-and-response script: trains the forest on the
//! service tier's exported logs, ranks and redirects attacker IPs, and
//! toggles the autoscaler's max-replica bound by comparing the windowed
//! attack rate against the condition threshold.
//!
//! The attack rate is classifier-independent: 403/404-labeled access records
//! over all access records in the trailing window. Error-log records feed
//! classifier training but not the rate, so overload victims cannot keep the
//! bound pinned low by themselves. Honeypot-tier logs never reach this
//! module, so redirected traffic leaves post-redirect windows clean.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::autoscaler::{self, HpaSpec, HpaStatus};
use crate::cluster::{RoutingTable, ROUTE_PROPAGATION_DELAY_S};
use crate::error::{Error, Result};
use crate::forest::{self, ForestModel, ForestParams};
use crate::logpipe::{self, LabeledRecord};

/// When and how the script acts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentinelPolicy {
    /// Script execution instants, seconds from run start, ascending.
    pub run_times_s: Vec<f64>,
    /// Trailing window for the attack-rate decision.
    pub window_s: f64,
    /// Attack-rate threshold; strictly above means attack.
    pub threshold: f64,
    /// Minimum calibrated score for an IP to be redirected.
    pub redirect_proba_cutoff: f64,
    pub top_k: usize,
    pub max_on_attack: u32,
    pub max_on_clear: u32,
}

impl Default for SentinelPolicy {
    fn default() -> Self {
        SentinelPolicy {
            run_times_s: vec![180.0, 300.0],
            window_s: 300.0,
            threshold: 0.10,
            redirect_proba_cutoff: 0.5,
            top_k: 10,
            max_on_attack: 1,
            max_on_clear: 5,
        }
    }
}

impl SentinelPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold {} must lie in (0, 1)",
                self.threshold
            )));
        }
        if self.window_s <= 0.0 {
            return Err(Error::Config("window_s must be positive".into()));
        }
        if self.run_times_s.windows(2).any(|pair| pair[0] >= pair[1]) {
            return Err(Error::Config(
                "run_times_s must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Audit record of one script execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentinelDecision {
    pub t: f64,
    pub attack_rate: f64,
    pub f1: f64,
    pub redirected_ips: BTreeSet<Ipv4Addr>,
    pub max_replicas_set: u32,
}

/// The service tier's exported log files, as read at a script run.
#[derive(Debug, Clone, Copy)]
pub struct ExportedLogs<'a> {
    pub access: &'a str,
    pub error: &'a str,
}

/// Full output of one script execution.
#[derive(Debug, Clone)]
pub struct ScriptReport {
    pub decision: SentinelDecision,
    /// Ranked candidate IPs with calibrated scores, best first.
    pub ranking: Vec<(Ipv4Addr, f64)>,
    pub model: Option<ForestModel>,
    /// Malformed lines dropped while reading the exported logs.
    pub dropped_malformed: usize,
}

/// Fraction of access records in `(now - window, now]` carrying a 403/404
/// status; 0 when the window holds no access records.
pub fn window_attack_rate(records: &[LabeledRecord], window_s: f64, now: f64) -> f64 {
    let lo = now - window_s;
    let mut total = 0u64;
    let mut scans = 0u64;
    for r in records {
        if r.t > lo && r.t <= now && !r.from_error_log() {
            total += 1;
            scans += u64::from(r.is_scan_label());
        }
    }
    if total == 0 {
        0.0
    } else {
        scans as f64 / total as f64
    }
}

/// Executes one scheduled script run against the exported service-tier logs.
///
/// Steps: preprocess everything logged so far, train the forest and record
/// its held-out F1, rank the last window's IPs, redirect every ranked IP at
/// or above the score cutoff, then compare the window attack rate to the
/// threshold and set max replicas to the attack or clear bound.
///
/// Empty logs skip training and redirection and set the clear bound.
pub fn run_script(
    now: f64,
    policy: &SentinelPolicy,
    logs: ExportedLogs<'_>,
    forest_params: &ForestParams,
    routing: &mut RoutingTable,
    hpa_spec: &mut HpaSpec,
    hpa_status: &mut HpaStatus,
) -> Result<ScriptReport> {
    if !policy.run_times_s.iter().any(|&t| (t - now).abs() < 1e-9) {
        return Err(Error::Contract(format!(
            "script executed at {now}, not one of the scheduled times {:?}",
            policy.run_times_s
        )));
    }
    let prep = logpipe::preprocess(logs.access.lines(), logs.error.lines());

    let (f1, ranking, redirected_ips, model) = if prep.records.is_empty() {
        (0.0, Vec::new(), BTreeSet::new(), None)
    } else {
        let trained = forest::train(&prep.records, forest_params)?;
        let lo = now - policy.window_s;
        let window_records: Vec<LabeledRecord> = prep
            .records
            .iter()
            .filter(|r| r.t > lo && r.t <= now)
            .cloned()
            .collect();
        let ranking = forest::top_k_attackers(&trained.model, &window_records, policy.top_k);
        let redirected: BTreeSet<Ipv4Addr> = ranking
            .iter()
            .filter(|(_, score)| *score >= policy.redirect_proba_cutoff)
            .map(|(ip, _)| *ip)
            .collect();
        if !redirected.is_empty() {
            routing.add_honeypot_ips(redirected.iter().copied(), now, ROUTE_PROPAGATION_DELAY_S);
        }
        (
            trained.held_out_f1,
            ranking,
            redirected,
            Some(trained.model),
        )
    };

    let attack_rate = window_attack_rate(&prep.records, policy.window_s, now);
    let max_replicas_set = if attack_rate > policy.threshold {
        policy.max_on_attack
    } else {
        policy.max_on_clear
    };
    autoscaler::set_max_replicas(hpa_spec, hpa_status, max_replicas_set, now)?;

    Ok(ScriptReport {
        decision: SentinelDecision {
            t: now,
            attack_rate,
            f1,
            redirected_ips,
            max_replicas_set,
        },
        ranking,
        model,
        dropped_malformed: prep.dropped_malformed,
    })
}
