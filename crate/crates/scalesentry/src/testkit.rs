//! Test support: independently written reference oracles and corpus
//! builders shared by unit and acceptance tests. Nothing here is part of
//! the simulator's public contract, and the oracles deliberately avoid the
//! production code paths they are used to check.
#![doc(hidden)]

use std::collections::VecDeque;
use std::net::Ipv4Addr;

use crate::cluster::{ClusterSim, InjectedRequest, PodTierConfig, TierServed};
use crate::forest::{DecisionTree, TreeNode, WeightedRow};
use crate::logpipe::LabeledRecord;
use crate::metrics::Selector;
use crate::rng::{hash2, unit_f64, SplitMix64};
use crate::workload::RequestEvent;

/// Builds a labeled record without going through the log pipeline.
pub fn labeled(ip: [u8; 4], path: &str, status: u16, t: f64, label: u8) -> LabeledRecord {
    LabeledRecord {
        xff_ip: Ipv4Addr::from(ip),
        path: path.to_string(),
        status,
        t,
        label,
    }
}

// ---------------------------------------------------------------------------
// Windowed-count oracle
// ---------------------------------------------------------------------------

/// Brute-force filter-and-count over raw (t, tier, status) triples with its
/// own label matching, for comparison against `CounterStore::increase`.
pub fn naive_increase(
    events: impl Iterator<Item = (f64, crate::cluster::Tier, u16)>,
    selector: &Selector,
    duration_s: f64,
    now: f64,
) -> u64 {
    let mut n = 0;
    for (t, tier, code) in events {
        if t <= now - duration_s || t > now {
            continue;
        }
        if let Some(want) = selector.tier {
            if want != tier {
                continue;
            }
        }
        if let Some(want) = selector.status_class {
            let class = if code == 499 {
                crate::metrics::StatusClass::ClientClosed
            } else if (200..300).contains(&code) {
                crate::metrics::StatusClass::TwoXx
            } else if (400..499).contains(&code) {
                crate::metrics::StatusClass::FourXx
            } else {
                crate::metrics::StatusClass::FiveXx
            };
            if want != class {
                continue;
            }
        }
        if let Some(want) = selector.status_code {
            if want != code {
                continue;
            }
        }
        n += 1;
    }
    n
}

// ---------------------------------------------------------------------------
// Queue-model oracle
// ---------------------------------------------------------------------------

/// A self-contained cluster scenario both the simulator driver and the
/// reference oracle can execute.
#[derive(Debug, Clone)]
pub struct OracleScenario {
    pub config: PodTierConfig,
    pub initial_replicas: u32,
    /// `(tick, desired)` scale calls applied at the start of that tick.
    pub scale_calls: Vec<(u64, u32)>,
    pub concurrency_cap: Option<usize>,
    pub patience_seed: u64,
    pub scan_paths: Vec<String>,
    pub events: Vec<RequestEvent>,
    pub ticks: u64,
}

/// Flat outcome form used for exact comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleOutcome {
    pub event_index: u64,
    pub status: u16,
    /// 0 = service, 1 = honeypot, 2 = not served.
    pub tier: u8,
    pub t_complete: f64,
}

fn tier_code(t: TierServed) -> u8 {
    match t {
        TierServed::Service => 0,
        TierServed::Honeypot => 1,
        TierServed::None => 2,
    }
}

/// Runs the production `ClusterSim` over a scenario.
pub fn drive_cluster(scenario: &OracleScenario) -> Vec<SimpleOutcome> {
    let mut sim = ClusterSim::new(
        scenario.config.clone(),
        scenario.initial_replicas,
        scenario.concurrency_cap,
        scenario.patience_seed,
        scenario.scan_paths.clone(),
    );
    let mut backlog: VecDeque<InjectedRequest> = scenario
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| InjectedRequest {
            index: i as u64,
            event: e.clone(),
        })
        .collect();
    let mut outcomes = Vec::new();
    for now in 0..scenario.ticks {
        for &(t, desired) in &scenario.scale_calls {
            if t == now {
                sim.service
                    .apply_scale(desired, now as f64)
                    .expect("scenario desired >= 1");
            }
        }
        sim.tick(now, &mut backlog, &mut outcomes);
    }
    let mut flat: Vec<SimpleOutcome> = outcomes
        .into_iter()
        .map(|o| SimpleOutcome {
            event_index: o.event_index,
            status: o.status,
            tier: tier_code(o.tier_served),
            t_complete: o.t_complete,
        })
        .collect();
    flat.sort_by_key(|o| o.event_index);
    flat
}

/// Independent reference simulation of the tick rules, using per-event state
/// arrays instead of the production queue structures.
pub fn reference_cluster_run(scenario: &OracleScenario) -> Vec<SimpleOutcome> {
    #[derive(Clone, Copy)]
    struct QueuedAt {
        tick: u64,
        give_up: f64,
        code: u16,
    }

    let cfg = &scenario.config;
    let n = scenario.events.len();
    let mut done: Vec<Option<SimpleOutcome>> = vec![None; n];
    let mut queue: Vec<(usize, QueuedAt)> = Vec::new();
    let mut next_event = 0usize;

    let mut ready = scenario.initial_replicas;
    let mut desired = scenario.initial_replicas;
    let mut pending: Option<(u32, f64)> = None;

    let is_scan = |path: &str| -> bool { scenario.scan_paths.iter().any(|p| p == path) };
    let give_up_for = |index: u64| -> QueuedAt {
        let j = |u: f64| 0.75 + 0.5 * u;
        let client = cfg.client_timeout_s * j(unit_f64(hash2(scenario.patience_seed, index, 1)));
        let proxy = cfg.proxy_timeout_s * j(unit_f64(hash2(scenario.patience_seed, index, 2)));
        if client <= proxy {
            QueuedAt {
                tick: 0,
                give_up: client,
                code: 499,
            }
        } else {
            QueuedAt {
                tick: 0,
                give_up: proxy,
                code: 503,
            }
        }
    };

    for now in 0..scenario.ticks {
        for &(t, want) in &scenario.scale_calls {
            if t == now && want != desired {
                desired = want;
                if want <= ready {
                    ready = want;
                    pending = None;
                } else {
                    pending = Some((want, now as f64 + cfg.pod_startup_delay_s));
                }
            }
        }
        if let Some((target, at)) = pending {
            if now as f64 >= at {
                ready = target;
                pending = None;
            }
        }
        let capacity = ready as u64 * cfg.per_pod_capacity_rps as u64;
        let mut served = 0u64;

        // Expiries first.
        let mut still_waiting = Vec::with_capacity(queue.len());
        for (idx, q) in queue {
            if (now - q.tick) as f64 > q.give_up {
                done[idx] = Some(SimpleOutcome {
                    event_index: idx as u64,
                    status: q.code,
                    tier: 2,
                    t_complete: now as f64,
                });
            } else {
                still_waiting.push((idx, q));
            }
        }
        queue = still_waiting;

        // Serve the queue head.
        let take = (capacity.min(queue.len() as u64)) as usize;
        for (idx, _) in queue.drain(..take) {
            let e = &scenario.events[idx];
            done[idx] = Some(SimpleOutcome {
                event_index: idx as u64,
                status: if is_scan(&e.path) { 404 } else { 200 },
                tier: 0,
                t_complete: now as f64 + (served + 1) as f64 / (capacity as f64 + 1.0),
            });
            served += 1;
        }

        // Inject arrivals. The scenario has no redirects, so everything is
        // service-bound.
        while next_event < n {
            let e = &scenario.events[next_event];
            if e.t_arrival >= (now + 1) as f64 {
                break;
            }
            if served < capacity {
                done[next_event] = Some(SimpleOutcome {
                    event_index: next_event as u64,
                    status: if is_scan(&e.path) { 404 } else { 200 },
                    tier: 0,
                    t_complete: now as f64 + (served + 1) as f64 / (capacity as f64 + 1.0),
                });
                served += 1;
            } else if scenario
                .concurrency_cap
                .is_some_and(|cap| queue.len() >= cap)
            {
                break;
            } else if queue.len() >= cfg.queue_cap {
                done[next_event] = Some(SimpleOutcome {
                    event_index: next_event as u64,
                    status: 503,
                    tier: 2,
                    t_complete: e.t_arrival.max(now as f64),
                });
            } else {
                let mut q = give_up_for(next_event as u64);
                q.tick = now;
                queue.push((next_event, q));
            }
            next_event += 1;
        }
    }

    done.into_iter().flatten().collect()
}

/// Draws a random small scenario: capacity, queue bounds, timeouts, initial
/// replicas, optional concurrency cap, a handful of scale calls, and a
/// bursty arrival schedule mixing homepage and scan paths.
pub fn random_scenario(rng: &mut SplitMix64, max_events: u64) -> OracleScenario {
    let config = PodTierConfig {
        per_pod_capacity_rps: 20 + rng.next_below(100) as u32,
        pod_startup_delay_s: (5 + rng.next_below(15)) as f64,
        queue_cap: 20 + rng.next_below(230) as usize,
        client_timeout_s: 1.0 + rng.next_f64() * 2.0,
        proxy_timeout_s: 1.0 + rng.next_f64() * 2.0,
    };
    let n = 100 + rng.next_below(max_events.saturating_sub(100).max(1));
    let rate = 50 + rng.next_below(750);
    let ips: Vec<Ipv4Addr> = (0..20)
        .map(|_| Ipv4Addr::from(rng.next_u64() as u32 | 0x0100_0000))
        .collect();
    let mut events = Vec::with_capacity(n as usize);
    let mut second = 0u64;
    while (events.len() as u64) < n {
        let burst = rate.min(n - events.len() as u64);
        let mut offsets: Vec<f64> = (0..burst).map(|_| rng.next_f64()).collect();
        offsets.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
        for off in offsets {
            let scan = rng.chance(0.2);
            events.push(RequestEvent {
                t_arrival: second as f64 + off,
                source_ip: ips[rng.next_below(ips.len() as u64) as usize],
                path: if scan { "/admin".into() } else { "/".into() },
                ground_truth_attack: scan,
            });
        }
        second += 1;
    }
    let span = second + 1;
    let mut scale_calls = Vec::new();
    for _ in 0..rng.next_below(4) {
        scale_calls.push((rng.next_below(span + 5), 1 + rng.next_below(6) as u32));
    }
    scale_calls.sort_unstable();
    OracleScenario {
        initial_replicas: 1 + rng.next_below(5) as u32,
        concurrency_cap: if rng.chance(0.5) {
            Some(50 + rng.next_below(250) as usize)
        } else {
            None
        },
        patience_seed: rng.next_u64(),
        scan_paths: vec!["/admin".into(), "/data".into(), "/login".into()],
        ticks: span + n / 20 + 40,
        config,
        scale_calls,
        events,
    }
}

// ---------------------------------------------------------------------------
// Gini stump oracle
// ---------------------------------------------------------------------------

fn node_gini(rows: &[WeightedRow]) -> f64 {
    let total: u64 = rows.iter().map(|r| r.weight).sum();
    let pos: u64 = rows.iter().filter(|r| r.label == 1).map(|r| r.weight).sum();
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Exhaustive best weighted Gini impurity over every (feature, threshold)
/// pair, falling back to the unsplit node impurity when no cut separates
/// the rows.
pub fn brute_force_best_impurity(rows: &[WeightedRow]) -> f64 {
    let total: u64 = rows.iter().map(|r| r.weight).sum();
    let mut best = node_gini(rows);
    for feature in 0..4usize {
        for cut in 0..255u16 {
            let (mut lw, mut lp, mut rw, mut rp) = (0u64, 0u64, 0u64, 0u64);
            for r in rows {
                if (r.fv.0[feature] as u16) <= cut {
                    lw += r.weight;
                    lp += u64::from(r.label == 1) * r.weight;
                } else {
                    rw += r.weight;
                    rp += u64::from(r.label == 1) * r.weight;
                }
            }
            if lw == 0 || rw == 0 {
                continue;
            }
            let gini = |p: u64, w: u64| {
                let f = p as f64 / w as f64;
                1.0 - f * f - (1.0 - f) * (1.0 - f)
            };
            let weighted = (lw as f64 * gini(lp, lw) + rw as f64 * gini(rp, rw)) / total as f64;
            if weighted < best {
                best = weighted;
            }
        }
    }
    best
}

/// Weighted impurity actually achieved by a grown stump on `rows`.
pub fn achieved_impurity(tree: &DecisionTree, rows: &[WeightedRow]) -> f64 {
    match &tree.nodes[0] {
        TreeNode::Leaf { .. } => node_gini(rows),
        TreeNode::Split {
            feature, threshold, ..
        } => {
            let total: u64 = rows.iter().map(|r| r.weight).sum();
            let (left, right): (Vec<_>, Vec<_>) = rows
                .iter()
                .copied()
                .partition(|r| r.fv.0[*feature as usize] <= *threshold);
            let lw: u64 = left.iter().map(|r| r.weight).sum();
            let rw: u64 = right.iter().map(|r| r.weight).sum();
            (lw as f64 * node_gini(&left) + rw as f64 * node_gini(&right)) / total as f64
        }
    }
}

/// Random corpus for stump checks: a few distinct feature vectors, each
/// with its own positive rate, unit weights.
pub fn random_stump_corpus(rng: &mut SplitMix64, max_rows: u64) -> Vec<WeightedRow> {
    let n_fvs = 2 + rng.next_below(28) as usize;
    let fvs: Vec<[u8; 4]> = (0..n_fvs)
        .map(|_| (rng.next_u64() as u32).to_be_bytes())
        .collect();
    let rates: Vec<f64> = (0..n_fvs).map(|_| rng.next_f64()).collect();
    let n = 20 + rng.next_below(max_rows.saturating_sub(20).max(1));
    (0..n)
        .map(|_| {
            let pick = rng.next_below(n_fvs as u64) as usize;
            WeightedRow {
                fv: crate::forest::FeatureVector(fvs[pick]),
                label: u8::from(rng.chance(rates[pick])),
                weight: 1,
            }
        })
        .collect()
}
