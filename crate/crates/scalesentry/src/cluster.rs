//! Three-tier pod topology: a routing proxy with a versioned IP redirect
//! table, an autoscaled service tier with a capacity/queue model, and a
//! fixed honeypot tier with effectively unbounded capacity.
//!
//! The simulation advances in 1-second ticks. Arrivals are injected from a
//! client-side backlog; the client keeps at most `concurrency_cap` requests
//! in flight (queued) and defers the rest, which is what stretches total run
//! time under overload. Queued requests carry per-request give-up deadlines
//! jittered around the client and proxy timeouts: whichever side gives up
//! first determines whether the request completes as 499 (client closed) or
//! 503 (server refused). A queue-full arrival is refused outright as 503.

use std::collections::{BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use crate::error::{Error, Result};
use crate::rng::{hash2, unit_f64};
use crate::workload::RequestEvent;

/// Relative half-width of the give-up jitter around each timeout mean.
const PATIENCE_JITTER: f64 = 0.25;

/// Simulated configmap reload lag between a routing update and its effect.
pub const ROUTE_PROPAGATION_DELAY_S: f64 = 5.0;

/// Pod tier identity, also used as a metric label.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub enum Tier {
    Service,
    Honeypot,
}

impl Tier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::Service => "service",
            Tier::Honeypot => "honeypot",
        }
    }
}

/// The tier that actually served a request; `None` for requests that
/// expired or were refused while queued at the service tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TierServed {
    Service,
    Honeypot,
    None,
}

/// IP-to-honeypot redirect map with delayed-effect versioning. Lookups
/// before a version's effective time resolve against the previous version.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    versions: Vec<RouteVersion>,
}

#[derive(Debug, Clone)]
struct RouteVersion {
    effective_from: f64,
    version: u64,
    honeypot_ips: BTreeSet<Ipv4Addr>,
}

impl Default for RoutingTable {
    fn default() -> Self {
        Self::new()
    }
}

impl RoutingTable {
    pub fn new() -> RoutingTable {
        RoutingTable {
            versions: vec![RouteVersion {
                effective_from: f64::NEG_INFINITY,
                version: 0,
                honeypot_ips: BTreeSet::new(),
            }],
        }
    }

    /// Unions `ips` into the redirect set, effective after the propagation
    /// delay. Adding an already-covered set is a no-op, so repeated script
    /// runs are idempotent. The set only grows within a run.
    pub fn add_honeypot_ips(
        &mut self,
        ips: impl IntoIterator<Item = Ipv4Addr>,
        now: f64,
        propagation_delay_s: f64,
    ) -> bool {
        let latest = self.versions.last().expect("table always has a version");
        let mut merged = latest.honeypot_ips.clone();
        merged.extend(ips);
        if merged == latest.honeypot_ips {
            return false;
        }
        let version = latest.version + 1;
        self.versions.push(RouteVersion {
            effective_from: now + propagation_delay_s,
            version,
            honeypot_ips: merged,
        });
        true
    }

    fn effective(&self, now: f64) -> &RouteVersion {
        self.versions
            .iter()
            .rev()
            .find(|v| v.effective_from <= now)
            .expect("base version is effective from -inf")
    }

    /// Routes an event: honeypot iff its source IP is redirected in the
    /// version effective at `now`, else service.
    pub fn route(&self, event: &RequestEvent, now: f64) -> Tier {
        if self.effective(now).honeypot_ips.contains(&event.source_ip) {
            Tier::Honeypot
        } else {
            Tier::Service
        }
    }

    pub fn effective_ips(&self, now: f64) -> &BTreeSet<Ipv4Addr> {
        &self.effective(now).honeypot_ips
    }

    pub fn current_version(&self) -> u64 {
        self.versions.last().expect("nonempty").version
    }
}

/// Capacity/queue parameters of a pod tier.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PodTierConfig {
    pub per_pod_capacity_rps: u32,
    pub pod_startup_delay_s: f64,
    pub queue_cap: usize,
    /// Mean client give-up time for a queued request.
    pub client_timeout_s: f64,
    /// Mean proxy-side give-up time for a queued request.
    pub proxy_timeout_s: f64,
}

impl Default for PodTierConfig {
    fn default() -> Self {
        PodTierConfig {
            per_pod_capacity_rps: 100,
            pod_startup_delay_s: 15.0,
            queue_cap: 200,
            client_timeout_s: 2.0,
            proxy_timeout_s: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
struct QueuedRequest {
    index: u64,
    event: RequestEvent,
    enqueue_tick: u64,
    give_up_after_s: f64,
    expiry_status: u16,
}

/// Replica and queue state of one tier.
#[derive(Debug, Clone)]
pub struct PodTier {
    pub tier: Tier,
    pub config: PodTierConfig,
    replicas_ready: u32,
    replicas_desired: u32,
    pending_scale: Option<(u32, f64)>,
    queue: VecDeque<QueuedRequest>,
}

impl PodTier {
    pub fn new(tier: Tier, config: PodTierConfig, initial_replicas: u32) -> PodTier {
        PodTier {
            tier,
            config,
            replicas_ready: initial_replicas,
            replicas_desired: initial_replicas,
            pending_scale: None,
            queue: VecDeque::new(),
        }
    }

    pub fn replicas_ready(&self) -> u32 {
        self.replicas_ready
    }

    pub fn replicas_desired(&self) -> u32 {
        self.replicas_desired
    }

    pub fn queue_depth(&self) -> usize {
        self.queue.len()
    }

    /// Sets the desired replica count. Scale-down takes effect immediately;
    /// scale-up becomes ready after the pod startup delay. Re-requesting the
    /// current desired count is a no-op and does not restart the startup
    /// clock.
    pub fn apply_scale(&mut self, desired: u32, now: f64) -> Result<()> {
        if desired < 1 {
            return Err(Error::Contract(format!(
                "desired replicas {desired} must be at least 1"
            )));
        }
        if desired == self.replicas_desired {
            return Ok(());
        }
        self.replicas_desired = desired;
        if desired <= self.replicas_ready {
            self.replicas_ready = desired;
            self.pending_scale = None;
        } else {
            self.pending_scale = Some((desired, now + self.config.pod_startup_delay_s));
        }
        Ok(())
    }

    fn update_readiness(&mut self, now: f64) {
        if let Some((target, ready_at)) = self.pending_scale {
            if now >= ready_at {
                self.replicas_ready = target;
                self.pending_scale = None;
            }
        }
    }
}

/// One final disposition of a request.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Position of the request in the generated stream.
    pub event_index: u64,
    pub request: RequestEvent,
    pub status: u16,
    pub tier_served: TierServed,
    pub t_complete: f64,
}

impl Outcome {
    /// The tier this request was routed to. Queue failures only happen at
    /// the service tier, so `TierServed::None` maps to service.
    pub fn routed_tier(&self) -> Tier {
        match self.tier_served {
            TierServed::Honeypot => Tier::Honeypot,
            TierServed::Service | TierServed::None => Tier::Service,
        }
    }
}

/// A request waiting for injection, keyed by stream position.
#[derive(Debug, Clone)]
pub struct InjectedRequest {
    pub index: u64,
    pub event: RequestEvent,
}

/// The whole tiered cluster plus routing state for one run.
#[derive(Debug, Clone)]
pub struct ClusterSim {
    pub service: PodTier,
    pub honeypot: PodTier,
    pub routing: RoutingTable,
    /// Client-side in-flight cap; `None` disables deferral (open loop).
    pub concurrency_cap: Option<usize>,
    patience_seed: u64,
    scan_paths: Vec<String>,
}

impl ClusterSim {
    pub fn new(
        service_config: PodTierConfig,
        initial_replicas: u32,
        concurrency_cap: Option<usize>,
        patience_seed: u64,
        scan_paths: Vec<String>,
    ) -> ClusterSim {
        ClusterSim {
            service: PodTier::new(Tier::Service, service_config.clone(), initial_replicas),
            honeypot: PodTier::new(Tier::Honeypot, service_config, 1),
            routing: RoutingTable::new(),
            concurrency_cap,
            patience_seed,
            scan_paths,
        }
    }

    pub fn in_flight(&self) -> usize {
        self.service.queue.len() + self.honeypot.queue.len()
    }

    fn status_for(&self, path: &str) -> u16 {
        if self.scan_paths.iter().any(|p| p == path) {
            404
        } else {
            200
        }
    }

    fn give_up_draw(&self, index: u64) -> (f64, u16) {
        let jitter = |u: f64| 1.0 - PATIENCE_JITTER + 2.0 * PATIENCE_JITTER * u;
        let client = self.service.config.client_timeout_s
            * jitter(unit_f64(hash2(self.patience_seed, index, 1)));
        let proxy = self.service.config.proxy_timeout_s
            * jitter(unit_f64(hash2(self.patience_seed, index, 2)));
        if client <= proxy {
            (client, 499)
        } else {
            (proxy, 503)
        }
    }

    /// Advances one 1-second tick: expires queued requests past their
    /// give-up deadlines, serves the queue FIFO up to ready capacity, then
    /// injects arrivals from the backlog (serving, enqueueing, refusing, or
    /// deferring them). Deferred requests stay at the backlog front.
    ///
    /// Every injected request eventually yields exactly one outcome.
    pub fn tick(
        &mut self,
        now: u64,
        backlog: &mut VecDeque<InjectedRequest>,
        outcomes: &mut Vec<Outcome>,
    ) {
        self.service.update_readiness(now as f64);
        let capacity =
            self.service.replicas_ready as u64 * self.service.config.per_pod_capacity_rps as u64;
        let served_at = |served: u64| now as f64 + (served + 1) as f64 / (capacity as f64 + 1.0);
        let mut served: u64 = 0;
        let tick_end = (now + 1) as f64;

        // Expire queued requests whose give-up deadline has passed. Deadlines
        // vary per request, so this is a full scan, not a prefix pop.
        let waiting = std::mem::take(&mut self.service.queue);
        for entry in waiting {
            if (now - entry.enqueue_tick) as f64 > entry.give_up_after_s {
                outcomes.push(Outcome {
                    event_index: entry.index,
                    request: entry.event,
                    status: entry.expiry_status,
                    tier_served: TierServed::None,
                    t_complete: now as f64,
                });
            } else {
                self.service.queue.push_back(entry);
            }
        }

        // Serve the queue first, FIFO.
        while served < capacity {
            let Some(entry) = self.service.queue.pop_front() else {
                break;
            };
            outcomes.push(Outcome {
                event_index: entry.index,
                status: self.status_for(&entry.event.path),
                tier_served: TierServed::Service,
                t_complete: served_at(served),
                request: entry.event,
            });
            served += 1;
        }

        // Inject arrivals in order. The honeypot serves instantly and never
        // holds an in-flight slot.
        while let Some(front) = backlog.front() {
            if front.event.t_arrival >= tick_end {
                break;
            }
            let tier = self.routing.route(&front.event, now as f64);
            match tier {
                Tier::Honeypot => {
                    let req = backlog.pop_front().expect("front exists");
                    outcomes.push(Outcome {
                        event_index: req.index,
                        status: self.status_for(&req.event.path),
                        tier_served: TierServed::Honeypot,
                        t_complete: req.event.t_arrival.max(now as f64),
                        request: req.event,
                    });
                }
                Tier::Service => {
                    if served < capacity {
                        let req = backlog.pop_front().expect("front exists");
                        outcomes.push(Outcome {
                            event_index: req.index,
                            status: self.status_for(&req.event.path),
                            tier_served: TierServed::Service,
                            t_complete: served_at(served),
                            request: req.event,
                        });
                        served += 1;
                    } else if self
                        .concurrency_cap
                        .is_some_and(|cap| self.in_flight() >= cap)
                    {
                        break;
                    } else if self.service.queue.len() >= self.service.config.queue_cap {
                        let req = backlog.pop_front().expect("front exists");
                        outcomes.push(Outcome {
                            event_index: req.index,
                            status: 503,
                            tier_served: TierServed::None,
                            t_complete: req.event.t_arrival.max(now as f64),
                            request: req.event,
                        });
                    } else {
                        let req = backlog.pop_front().expect("front exists");
                        let (give_up_after_s, expiry_status) = self.give_up_draw(req.index);
                        self.service.queue.push_back(QueuedRequest {
                            index: req.index,
                            event: req.event,
                            enqueue_tick: now,
                            give_up_after_s,
                            expiry_status,
                        });
                    }
                }
            }
        }
        debug_assert!(self.service.queue.len() <= self.service.config.queue_cap);
        debug_assert!(self
            .concurrency_cap
            .is_none_or(|cap| self.in_flight() <= cap));
    }
}
