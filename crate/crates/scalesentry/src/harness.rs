//! Experiment orchestration: runs conditions with repetitions, wires the
//! traffic generator, cluster, metric store, autoscaler, log pipeline, and
//! sentinel into a tick loop, and writes per-run artifacts plus aggregated
//! reports.
//!
//! Per-run outputs under the output directory:
//!   `logs/<run_id>/{access.log,error.log,honeypot.log}`
//!   `runs/<run_id>/{sentinel.jsonl,timeline.csv,hpa.csv,metrics.csv,result.json}`
//!   `model/<run_id>-<script_n>.json`
//!   `conditions/condition-<N>.toml`
//! Report outputs: `results.csv` (all reps plus per-condition averages) and
//! `summary.csv` (averages only).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autoscaler::{self, HpaSpec, HpaStatus};
use crate::cluster::{ClusterSim, InjectedRequest, PodTierConfig, Tier, ROUTE_PROPAGATION_DELAY_S};
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::logpipe;
use crate::metrics::{CounterStore, QueryWindow, Selector, StatusClass};
use crate::rng;
use crate::sentinel::{self, ScriptReport, SentinelPolicy};
use crate::workload::{self, IpPool, TrafficSpec};

/// One experiment invocation: a condition, repetitions, and overrides.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub condition_id: u8,
    pub repetitions: u32,
    pub master_seed: u64,
    pub tick_s: f64,
    pub output_dir: PathBuf,
    /// `key=value` overrides applied to the traffic spec, pod config,
    /// autoscaler spec, or sentinel policy.
    pub overrides: Vec<(String, String)>,
}

impl ExperimentConfig {
    pub fn new(condition_id: u8, output_dir: impl Into<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            condition_id,
            repetitions: 3,
            master_seed: 42,
            tick_s: 1.0,
            output_dir: output_dir.into(),
            overrides: Vec::new(),
        }
    }
}

/// The columns of one result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub condition_id: u8,
    pub rep: u32,
    /// Scan-path requests that reached the service tier.
    pub nginx_attacks_received: u64,
    pub five_xx_count: u64,
    /// Scan-path requests that reached the honeypot tier.
    pub honeypot_attacks_received: u64,
    /// Completion time of the final outcome, seconds from run start.
    pub total_request_time_s: f64,
    /// Held-out F1 of the first script run.
    pub first_f1: f64,
    /// Calibrated score of the first-ranked IP at the first script run.
    pub first_ip_future_rate: f64,
}

/// Per-run facts beyond the result columns, kept for verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAudit {
    pub run_id: String,
    pub total_requests: u64,
    pub service_outcomes: u64,
    pub honeypot_outcomes: u64,
    /// maxReplicas trajectory: initial bound, then each script's setting.
    pub max_replicas_trajectory: Vec<u32>,
    /// Attacker-IP requests arriving after the first redirect became
    /// effective, and how many of those the honeypot served.
    pub attacker_arrivals_after_cutoff: u64,
    pub attacker_honeypot_after_cutoff: u64,
    /// Scan-path requests served by the service tier in the run's final minute.
    pub service_scans_final_minute: u64,
    /// First-script top-k ranking, best first.
    pub first_ranking: Vec<Ipv4Addr>,
    /// Ground-truth attacker pool of this run.
    pub attacker_ips: Vec<Ipv4Addr>,
    pub corrupted_access_lines: u64,
    /// Corrupted-so-far and dropped-at-parse counts per script run; equal
    /// pairwise when the malformed filter drops exactly the injected
    /// corruption.
    pub corrupted_at_scripts: Vec<u64>,
    pub dropped_at_scripts: Vec<u64>,
    pub count_499: u64,
}

/// result.json layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub result: RunResult,
    pub audit: RunAudit,
}

/// conditions/condition-N.toml layout: the traffic spec at the top level
/// plus the sentinel policy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionFile {
    #[serde(flatten)]
    pub traffic: TrafficSpec,
    pub sentinel: SentinelPolicy,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Derives the per-repetition seed from the master seed.
pub fn rep_seed(master_seed: u64, condition_id: u8, rep: u32) -> u64 {
    rng::derive(master_seed, ((condition_id as u64) << 32) | rep as u64)
}

fn parse_override<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for override {key}")))
}

fn apply_override(
    key: &str,
    value: &str,
    traffic: &mut TrafficSpec,
    policy: &mut SentinelPolicy,
    pod: &mut PodTierConfig,
    hpa: &mut HpaSpec,
) -> Result<()> {
    match key {
        "total_requests" => traffic.total_requests = parse_override(key, value)?,
        "concurrency" => traffic.concurrency = parse_override(key, value)?,
        "arrival_rate_min" => traffic.arrival_rate_rps.0 = parse_override(key, value)?,
        "arrival_rate_max" => traffic.arrival_rate_rps.1 = parse_override(key, value)?,
        "normal_ip_count" => traffic.normal_ip_count = parse_override(key, value)?,
        "attacker_ip_count" => traffic.attacker_ip_count = parse_override(key, value)?,
        "attacker_traffic_share" => traffic.attacker_traffic_share = parse_override(key, value)?,
        "scan_share_within_attacker_traffic" => {
            traffic.scan_share_within_attacker_traffic = parse_override(key, value)?
        }
        "malformed_log_rate" => traffic.malformed_log_rate = parse_override(key, value)?,
        "per_pod_capacity_rps" => pod.per_pod_capacity_rps = parse_override(key, value)?,
        "pod_startup_delay_s" => pod.pod_startup_delay_s = parse_override(key, value)?,
        "queue_cap" => pod.queue_cap = parse_override(key, value)?,
        "client_timeout_s" => pod.client_timeout_s = parse_override(key, value)?,
        "proxy_timeout_s" => pod.proxy_timeout_s = parse_override(key, value)?,
        "min_replicas" => hpa.min_replicas = parse_override(key, value)?,
        "max_replicas" => hpa.max_replicas = parse_override(key, value)?,
        "trigger_threshold" => hpa.trigger_threshold = parse_override(key, value)?,
        "trigger_window_s" => hpa.trigger_window_s = parse_override(key, value)?,
        "stabilization_s" => hpa.stabilization_s = parse_override(key, value)?,
        "reconcile_period_s" => hpa.reconcile_period_s = parse_override(key, value)?,
        "threshold" => policy.threshold = parse_override(key, value)?,
        "window_s" => policy.window_s = parse_override(key, value)?,
        "redirect_proba_cutoff" => policy.redirect_proba_cutoff = parse_override(key, value)?,
        "top_k" => policy.top_k = parse_override(key, value)?,
        "max_on_attack" => policy.max_on_attack = parse_override(key, value)?,
        "max_on_clear" => policy.max_on_clear = parse_override(key, value)?,
        "run_times_s" => {
            let times: Result<Vec<f64>> = value
                .split(',')
                .map(|v| parse_override::<f64>(key, v.trim()))
                .collect();
            policy.run_times_s = times?;
        }
        other => {
            return Err(Error::Config(format!("unknown override key {other:?}")));
        }
    }
    traffic.refresh_attack_probability();
    Ok(())
}

/// Runs all repetitions of one condition, writing per-run artifacts.
pub fn run(config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    if config.repetitions < 1 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    if config.tick_s != 1.0 {
        return Err(Error::Config("only tick_s = 1 is supported".into()));
    }
    for sub in ["runs", "logs", "model", "conditions"] {
        let dir = config.output_dir.join(sub);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }

    let mut results = Vec::new();
    for rep in 1..=config.repetitions {
        let seed = rep_seed(config.master_seed, config.condition_id, rep);
        let (mut traffic, mut policy) = workload::build_condition(config.condition_id, seed)?;
        let mut pod = PodTierConfig::default();
        let mut hpa = HpaSpec::default();
        for (key, value) in &config.overrides {
            apply_override(key, value, &mut traffic, &mut policy, &mut pod, &mut hpa)?;
        }
        traffic.validate()?;
        policy.validate()?;

        if rep == 1 {
            let path = config
                .output_dir
                .join("conditions")
                .join(format!("condition-{}.toml", config.condition_id));
            let file = ConditionFile {
                traffic: traffic.clone(),
                sentinel: policy.clone(),
            };
            let text = toml::to_string(&file).map_err(|e| Error::Serialize(e.to_string()))?;
            fs::write(&path, text).map_err(io_err(&path))?;
        }

        let record = run_single(&traffic, &policy, pod, hpa, &config.output_dir, rep)?;
        results.push(record.result);
    }
    Ok(results)
}

struct LogSinks {
    access: BufWriter<File>,
    error: BufWriter<File>,
    honeypot: BufWriter<File>,
    access_path: PathBuf,
    error_path: PathBuf,
    honeypot_path: PathBuf,
    access_lines: u64,
    honeypot_lines: u64,
    corrupted_access: u64,
}

impl LogSinks {
    fn open(dir: &Path) -> Result<LogSinks> {
        let open = |name: &str| -> Result<(BufWriter<File>, PathBuf)> {
            let path = dir.join(name);
            Ok((
                BufWriter::new(File::create(&path).map_err(io_err(&path))?),
                path,
            ))
        };
        let (access, access_path) = open("access.log")?;
        let (error, error_path) = open("error.log")?;
        let (honeypot, honeypot_path) = open("honeypot.log")?;
        Ok(LogSinks {
            access,
            error,
            honeypot,
            access_path,
            error_path,
            honeypot_path,
            access_lines: 0,
            honeypot_lines: 0,
            corrupted_access: 0,
        })
    }
}

#[derive(Default, Clone, Copy)]
struct TimelineRow {
    service_2xx: u64,
    service_4xx: u64,
    service_499: u64,
    service_5xx: u64,
    honeypot_2xx: u64,
    honeypot_4xx: u64,
    service_scans: u64,
    replicas_ready: u32,
    replicas_desired: u32,
    max_replicas: u32,
    queue_depth: u64,
}

fn run_single(
    traffic: &TrafficSpec,
    policy: &SentinelPolicy,
    pod: PodTierConfig,
    mut hpa: HpaSpec,
    out_dir: &Path,
    rep: u32,
) -> Result<RunRecord> {
    let run_id = format!("cond{}-rep{}", traffic.condition_id, rep);
    let log_dir = out_dir.join("logs").join(&run_id);
    let run_dir = out_dir.join("runs").join(&run_id);
    let model_dir = out_dir.join("model");
    for dir in [&log_dir, &run_dir, &model_dir] {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }

    let script_times: Vec<u64> = policy
        .run_times_s
        .iter()
        .map(|&t| {
            if t.fract() == 0.0 && t >= 0.0 {
                Ok(t as u64)
            } else {
                Err(Error::Config(format!(
                    "script time {t} must be a nonnegative whole second"
                )))
            }
        })
        .collect::<Result<_>>()?;
    if hpa.reconcile_period_s.fract() != 0.0 || hpa.reconcile_period_s < 1.0 {
        return Err(Error::Config(format!(
            "reconcile period {} must be a whole positive second count",
            hpa.reconcile_period_s
        )));
    }
    let reconcile_period = hpa.reconcile_period_s as u64;
    let trigger_window = QueryWindow::new(hpa.trigger_window_s)?;

    let pool = IpPool::generate(traffic);
    let events = workload::generate_stream(traffic, &pool);
    let attacker_ips: BTreeSet<Ipv4Addr> = pool.attacker_ips.iter().copied().collect();
    let initial_max = hpa.max_replicas;

    let mut cluster = ClusterSim::new(
        pod,
        hpa.min_replicas,
        Some(traffic.concurrency as usize),
        rng::derive(traffic.rng_seed, rng::STREAM_PATIENCE),
        traffic.scan_paths.clone(),
    );
    let corruption_seed = rng::derive(traffic.rng_seed, rng::STREAM_CORRUPTION);
    let mut hpa_status = HpaStatus::new(&hpa);
    let mut store = CounterStore::new();
    let mut sinks = LogSinks::open(&log_dir)?;
    let forest_params = ForestParams::default();

    let mut backlog: VecDeque<InjectedRequest> = VecDeque::new();
    let mut cursor = 0usize;
    let mut outcomes = Vec::new();
    let mut timeline: Vec<TimelineRow> = Vec::new();
    let mut script_reports: Vec<ScriptReport> = Vec::new();
    let mut corrupted_at_scripts: Vec<u64> = Vec::new();

    let mut service_outcomes = 0u64;
    let mut honeypot_outcomes = 0u64;
    let mut five_xx_count = 0u64;
    let mut c499_count = 0u64;
    let mut nginx_attacks = 0u64;
    let mut honeypot_attacks = 0u64;
    let mut attacker_after_cutoff = 0u64;
    let mut attacker_honeypot_after_cutoff = 0u64;
    let mut max_t_complete = 0.0f64;
    let redirect_cutoff_t = script_times
        .first()
        .map(|&t| t as f64 + ROUTE_PROPAGATION_DELAY_S);

    let last_script = script_times.iter().copied().max().unwrap_or(0);
    let mut now = 0u64;
    loop {
        if now.is_multiple_of(reconcile_period) {
            let metric = store.increase(
                &Selector::five_xx(Tier::Service),
                trigger_window,
                now as f64,
            );
            autoscaler::reconcile(&hpa, &mut hpa_status, metric, now as f64);
            cluster
                .service
                .apply_scale(hpa_status.desired, now as f64)?;
        }

        if script_times.contains(&now) {
            corrupted_at_scripts.push(sinks.corrupted_access);
            sinks.access.flush().map_err(io_err(&sinks.access_path))?;
            sinks.error.flush().map_err(io_err(&sinks.error_path))?;
            let access_text =
                fs::read_to_string(&sinks.access_path).map_err(io_err(&sinks.access_path))?;
            let error_text =
                fs::read_to_string(&sinks.error_path).map_err(io_err(&sinks.error_path))?;
            let report = sentinel::run_script(
                now as f64,
                policy,
                sentinel::ExportedLogs {
                    access: &access_text,
                    error: &error_text,
                },
                &forest_params,
                &mut cluster.routing,
                &mut hpa,
                &mut hpa_status,
            )?;
            cluster
                .service
                .apply_scale(hpa_status.desired, now as f64)?;
            if let Some(model) = &report.model {
                let path = model_dir.join(format!("{run_id}-{}.json", script_reports.len() + 1));
                fs::write(&path, model.to_json()?).map_err(io_err(&path))?;
            }
            script_reports.push(report);
        }

        while cursor < events.len() && events[cursor].t_arrival < (now + 1) as f64 {
            backlog.push_back(InjectedRequest {
                index: cursor as u64,
                event: events[cursor].clone(),
            });
            cursor += 1;
        }

        outcomes.clear();
        cluster.tick(now, &mut backlog, &mut outcomes);
        outcomes.sort_by(|a, b| {
            a.t_complete
                .partial_cmp(&b.t_complete)
                .expect("finite completion times")
        });

        let mut row = TimelineRow {
            replicas_ready: cluster.service.replicas_ready(),
            replicas_desired: cluster.service.replicas_desired(),
            max_replicas: hpa.max_replicas,
            queue_depth: cluster.service.queue_depth() as u64,
            ..TimelineRow::default()
        };
        for o in &outcomes {
            let tier = o.routed_tier();
            store.record(o.t_complete, tier, o.status)?;
            max_t_complete = max_t_complete.max(o.t_complete);
            let scan = o.request.is_scan(traffic);
            match tier {
                Tier::Service => {
                    service_outcomes += 1;
                    nginx_attacks += u64::from(scan);
                    row.service_scans += u64::from(scan);
                    let emission = logpipe::emit(
                        o,
                        traffic.malformed_log_rate,
                        corruption_seed,
                        sinks.access_lines,
                    );
                    sinks.access_lines += 1;
                    sinks.corrupted_access += u64::from(emission.corrupted);
                    writeln!(sinks.access, "{}", emission.access_line)
                        .map_err(io_err(&sinks.access_path))?;
                    if let Some(err_line) = emission.error_line {
                        writeln!(sinks.error, "{err_line}").map_err(io_err(&sinks.error_path))?;
                    }
                    match StatusClass::of(o.status) {
                        StatusClass::TwoXx => row.service_2xx += 1,
                        StatusClass::FourXx => row.service_4xx += 1,
                        StatusClass::ClientClosed => {
                            row.service_499 += 1;
                            c499_count += 1;
                        }
                        StatusClass::FiveXx => {
                            row.service_5xx += 1;
                            five_xx_count += 1;
                        }
                    }
                }
                Tier::Honeypot => {
                    honeypot_outcomes += 1;
                    honeypot_attacks += u64::from(scan);
                    // Honeypot traffic is logged to its own file and never
                    // feeds training or the attack rate.
                    let emission = logpipe::emit(
                        o,
                        traffic.malformed_log_rate,
                        corruption_seed,
                        sinks.honeypot_lines,
                    );
                    sinks.honeypot_lines += 1;
                    writeln!(sinks.honeypot, "{}", emission.access_line)
                        .map_err(io_err(&sinks.honeypot_path))?;
                    if scan {
                        row.honeypot_4xx += 1;
                    } else {
                        row.honeypot_2xx += 1;
                    }
                }
            }
            if let Some(cutoff) = redirect_cutoff_t {
                if attacker_ips.contains(&o.request.source_ip) && o.request.t_arrival > cutoff {
                    attacker_after_cutoff += 1;
                    attacker_honeypot_after_cutoff += u64::from(tier == Tier::Honeypot);
                }
            }
        }
        timeline.push(row);

        now += 1;
        let drained = cursor == events.len() && backlog.is_empty() && cluster.in_flight() == 0;
        if drained && now > last_script {
            break;
        }
        if now > 1_000_000 {
            return Err(Error::Contract(
                "simulation failed to drain within 1,000,000 ticks".into(),
            ));
        }
    }

    sinks.access.flush().map_err(io_err(&sinks.access_path))?;
    sinks.error.flush().map_err(io_err(&sinks.error_path))?;
    sinks
        .honeypot
        .flush()
        .map_err(io_err(&sinks.honeypot_path))?;

    // Final-minute service scans, measured against the last completion.
    let final_cut = max_t_complete - 60.0;
    let service_scans_final_minute: u64 = timeline
        .iter()
        .enumerate()
        .filter(|(t, _)| (*t as f64 + 1.0) > final_cut)
        .map(|(_, row)| row.service_scans)
        .sum();

    let sentinel_path = run_dir.join("sentinel.jsonl");
    let mut sentinel_text = String::new();
    for report in &script_reports {
        sentinel_text.push_str(
            &serde_json::to_string(&report.decision)
                .map_err(|e| Error::Serialize(e.to_string()))?,
        );
        sentinel_text.push('\n');
    }
    fs::write(&sentinel_path, sentinel_text).map_err(io_err(&sentinel_path))?;

    let timeline_path = run_dir.join("timeline.csv");
    let mut timeline_text = String::from(
        "t,service_2xx,service_4xx,service_499,service_5xx,honeypot_2xx,honeypot_4xx,replicas_ready,replicas_desired,max_replicas,queue_depth\n",
    );
    for (t, row) in timeline.iter().enumerate() {
        timeline_text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            t,
            row.service_2xx,
            row.service_4xx,
            row.service_499,
            row.service_5xx,
            row.honeypot_2xx,
            row.honeypot_4xx,
            row.replicas_ready,
            row.replicas_desired,
            row.max_replicas,
            row.queue_depth,
        ));
    }
    fs::write(&timeline_path, timeline_text).map_err(io_err(&timeline_path))?;

    let hpa_path = run_dir.join("hpa.csv");
    fs::write(&hpa_path, autoscaler::history_csv(&hpa_status)).map_err(io_err(&hpa_path))?;

    let metrics_path = run_dir.join("metrics.csv");
    let mut metrics_out =
        BufWriter::new(File::create(&metrics_path).map_err(io_err(&metrics_path))?);
    store
        .export_csv(&mut metrics_out)
        .map_err(io_err(&metrics_path))?;
    metrics_out.flush().map_err(io_err(&metrics_path))?;

    let dropped_at_scripts: Vec<u64> = script_reports
        .iter()
        .map(|r| r.dropped_malformed as u64)
        .collect();
    let mut trajectory = vec![initial_max];
    trajectory.extend(script_reports.iter().map(|r| r.decision.max_replicas_set));

    let first = script_reports.first();
    let record = RunRecord {
        result: RunResult {
            condition_id: traffic.condition_id,
            rep,
            nginx_attacks_received: nginx_attacks,
            five_xx_count,
            honeypot_attacks_received: honeypot_attacks,
            total_request_time_s: max_t_complete,
            first_f1: first.map(|r| r.decision.f1).unwrap_or(0.0),
            first_ip_future_rate: first
                .and_then(|r| r.ranking.first())
                .map(|(_, score)| *score)
                .unwrap_or(0.0),
        },
        audit: RunAudit {
            run_id: run_id.clone(),
            total_requests: events.len() as u64,
            service_outcomes,
            honeypot_outcomes,
            max_replicas_trajectory: trajectory,
            attacker_arrivals_after_cutoff: attacker_after_cutoff,
            attacker_honeypot_after_cutoff,
            service_scans_final_minute,
            first_ranking: first
                .map(|r| r.ranking.iter().map(|(ip, _)| *ip).collect())
                .unwrap_or_default(),
            attacker_ips: pool.attacker_ips.clone(),
            corrupted_access_lines: sinks.corrupted_access,
            corrupted_at_scripts,
            dropped_at_scripts,
            count_499: c499_count,
        },
    };
    let result_path = run_dir.join("result.json");
    let text =
        serde_json::to_string_pretty(&record).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(&result_path, text).map_err(io_err(&result_path))?;
    Ok(record)
}

/// Paths written by `report`.
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub results_csv: PathBuf,
    pub summary_csv: PathBuf,
}

/// Loads every completed run under `out_dir/runs`, sorted by condition and
/// repetition.
pub fn load_run_records(out_dir: &Path) -> Result<Vec<RunRecord>> {
    let runs_dir = out_dir.join("runs");
    let mut paths: Vec<PathBuf> = match fs::read_dir(&runs_dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .map(|e| e.path().join("result.json"))
            .filter(|p| p.is_file())
            .collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();
    let mut records = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let record: RunRecord =
            serde_json::from_str(&text).map_err(|e| Error::Serialize(e.to_string()))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyReport(out_dir.to_path_buf()));
    }
    records.sort_by_key(|r| (r.result.condition_id, r.result.rep));
    Ok(records)
}

fn result_row(r: &RunResult) -> String {
    format!(
        "{},{},{},{},{},{:.3},{:.4},{:.4}\n",
        r.condition_id,
        r.rep,
        r.nginx_attacks_received,
        r.five_xx_count,
        r.honeypot_attacks_received,
        r.total_request_time_s,
        r.first_f1,
        r.first_ip_future_rate
    )
}

/// Per-condition arithmetic means of the result columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionAverage {
    pub condition_id: u8,
    pub nginx_attacks_received: f64,
    pub five_xx_count: f64,
    pub honeypot_attacks_received: f64,
    pub total_request_time_s: f64,
    pub first_f1: f64,
    pub first_ip_future_rate: f64,
}

pub fn condition_averages(records: &[RunRecord]) -> Vec<ConditionAverage> {
    let mut grouped: BTreeMap<u8, Vec<&RunResult>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(r.result.condition_id)
            .or_default()
            .push(&r.result);
    }
    grouped
        .into_iter()
        .map(|(condition_id, rows)| {
            let n = rows.len() as f64;
            ConditionAverage {
                condition_id,
                nginx_attacks_received: rows
                    .iter()
                    .map(|r| r.nginx_attacks_received as f64)
                    .sum::<f64>()
                    / n,
                five_xx_count: rows.iter().map(|r| r.five_xx_count as f64).sum::<f64>() / n,
                honeypot_attacks_received: rows
                    .iter()
                    .map(|r| r.honeypot_attacks_received as f64)
                    .sum::<f64>()
                    / n,
                total_request_time_s: rows.iter().map(|r| r.total_request_time_s).sum::<f64>() / n,
                first_f1: rows.iter().map(|r| r.first_f1).sum::<f64>() / n,
                first_ip_future_rate: rows.iter().map(|r| r.first_ip_future_rate).sum::<f64>() / n,
            }
        })
        .collect()
}

fn average_row(label: &str, a: &ConditionAverage) -> String {
    format!(
        "{},{},{:.2},{:.2},{:.2},{:.3},{:.4},{:.4}\n",
        a.condition_id,
        label,
        a.nginx_attacks_received,
        a.five_xx_count,
        a.honeypot_attacks_received,
        a.total_request_time_s,
        a.first_f1,
        a.first_ip_future_rate
    )
}

const RESULTS_HEADER: &str = "condition,rep,nginx_attacks_received,five_xx_count,honeypot_attacks_received,total_request_time_s,first_f1,first_ip_future_rate\n";

/// Writes `results.csv` (all repetition rows plus per-condition average
/// rows) and `summary.csv` (average rows only).
pub fn report(out_dir: &Path) -> Result<ReportPaths> {
    let records = load_run_records(out_dir)?;
    let averages = condition_averages(&records);

    let mut results_text = String::from(RESULTS_HEADER);
    for avg in &averages {
        for record in records
            .iter()
            .filter(|r| r.result.condition_id == avg.condition_id)
        {
            results_text.push_str(&result_row(&record.result));
        }
        results_text.push_str(&average_row("avg", avg));
    }
    let results_csv = out_dir.join("results.csv");
    fs::write(&results_csv, &results_text).map_err(io_err(&results_csv))?;

    let mut summary_text = String::from(
        "condition,nginx_attacks_received,five_xx_count,honeypot_attacks_received,total_request_time_s,first_f1,first_ip_future_rate\n",
    );
    for a in &averages {
        summary_text.push_str(&format!(
            "{},{:.2},{:.2},{:.2},{:.3},{:.4},{:.4}\n",
            a.condition_id,
            a.nginx_attacks_received,
            a.five_xx_count,
            a.honeypot_attacks_received,
            a.total_request_time_s,
            a.first_f1,
            a.first_ip_future_rate
        ));
    }
    let summary_csv = out_dir.join("summary.csv");
    fs::write(&summary_csv, &summary_text).map_err(io_err(&summary_csv))?;

    Ok(ReportPaths {
        results_csv,
        summary_csv,
    })
}
