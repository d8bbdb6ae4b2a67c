//! Experimental conditions and the seeded request stream.
//!
//! Six conditions share the same traffic shape (200 IPs, 200k requests,
//! 400-600 rps) and differ in effective attack probability and in the
//! detection threshold/window handed to the sentinel. The generator emits a
//! fixed arrival schedule; admission control against the concurrency cap
//! happens downstream in the cluster model.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SplitMix64};
use crate::sentinel::SentinelPolicy;

/// Paths probed by directory-scanning traffic.
pub const DEFAULT_SCAN_PATHS: [&str; 3] = ["/admin", "/data", "/login"];

/// One experimental condition: traffic shape plus generation seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub condition_id: u8,
    pub total_requests: u64,
    pub concurrency: u32,
    /// Arrival-rate band in requests per second, `[min, max]`.
    pub arrival_rate_rps: (u32, u32),
    pub normal_ip_count: u32,
    pub attacker_ip_count: u32,
    /// Fraction of all traffic originating from attacker IPs.
    pub attacker_traffic_share: f64,
    /// Fraction of attacker-IP traffic that targets scan paths.
    pub scan_share_within_attacker_traffic: f64,
    /// Product of the two shares above.
    pub effective_attack_probability: f64,
    pub scan_paths: Vec<String>,
    pub malformed_log_rate: f64,
    pub rng_seed: u64,
}

impl TrafficSpec {
    /// Validates field ranges and the share-product invariant.
    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.condition_id) {
            return Err(Error::Config(format!(
                "condition_id {} out of range 1..6",
                self.condition_id
            )));
        }
        if self.arrival_rate_rps.0 == 0 || self.arrival_rate_rps.0 > self.arrival_rate_rps.1 {
            return Err(Error::Config(format!(
                "arrival_rate_rps band [{}, {}] is invalid",
                self.arrival_rate_rps.0, self.arrival_rate_rps.1
            )));
        }
        let product = self.attacker_traffic_share * self.scan_share_within_attacker_traffic;
        if (product - self.effective_attack_probability).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "effective_attack_probability {} != attacker_traffic_share * scan_share = {}",
                self.effective_attack_probability, product
            )));
        }
        for bounded in [
            self.attacker_traffic_share,
            self.scan_share_within_attacker_traffic,
            self.malformed_log_rate,
        ] {
            if !(0.0..=1.0).contains(&bounded) {
                return Err(Error::Config(format!("fraction {bounded} outside [0, 1]")));
            }
        }
        if self.scan_paths.is_empty() {
            return Err(Error::Config("scan_paths must not be empty".into()));
        }
        Ok(())
    }

    /// Recomputes the derived attack probability after share overrides.
    pub fn refresh_attack_probability(&mut self) {
        self.effective_attack_probability =
            self.attacker_traffic_share * self.scan_share_within_attacker_traffic;
    }
}

/// Disjoint seeded pools of normal and attacker source IPs.
#[derive(Debug, Clone, PartialEq)]
pub struct IpPool {
    pub normal_ips: Vec<Ipv4Addr>,
    pub attacker_ips: Vec<Ipv4Addr>,
}

impl IpPool {
    /// Draws `normal + attacker` distinct public-looking IPv4 addresses from
    /// the traffic spec's seed. Stable for a given seed.
    pub fn generate(spec: &TrafficSpec) -> IpPool {
        let mut rng = SplitMix64::new(rng::derive(spec.rng_seed, rng::STREAM_IP_POOL));
        let total = (spec.normal_ip_count + spec.attacker_ip_count) as usize;
        let mut seen = std::collections::BTreeSet::new();
        let mut ips = Vec::with_capacity(total);
        while ips.len() < total {
            let raw = rng.next_u64() as u32;
            let ip = Ipv4Addr::from(raw);
            let first = ip.octets()[0];
            // Stay clear of loopback, private 10/8, and multicast/reserved space.
            if first == 0 || first == 10 || first == 127 || first >= 224 {
                continue;
            }
            if seen.insert(ip) {
                ips.push(ip);
            }
        }
        let attacker_ips = ips.split_off(spec.normal_ip_count as usize);
        IpPool {
            normal_ips: ips,
            attacker_ips,
        }
    }

    pub fn is_attacker(&self, ip: Ipv4Addr) -> bool {
        self.attacker_ips.contains(&ip)
    }
}

/// One generated request arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestEvent {
    /// Seconds since run start.
    pub t_arrival: f64,
    /// Carried as the X-Forwarded-For value through the proxy tiers.
    pub source_ip: Ipv4Addr,
    pub path: String,
    pub ground_truth_attack: bool,
}

impl RequestEvent {
    pub fn is_scan(&self, spec: &TrafficSpec) -> bool {
        spec.scan_paths.iter().any(|p| p == &self.path)
    }
}

/// Builds the condition's traffic spec plus the sentinel policy it implies.
///
/// Rows: conditions 1-2 run at 12% attack probability, 3-6 at 3%; the
/// detection threshold/window pairs are (10%, 300s), (20%, 300s), (1%, 300s),
/// (5%, 300s), (1%, 60s), (5%, 60s).
pub fn build_condition(condition_id: u8, rng_seed: u64) -> Result<(TrafficSpec, SentinelPolicy)> {
    let (scan_share, threshold, window_s) = match condition_id {
        1 => (0.60, 0.10, 300.0),
        2 => (0.60, 0.20, 300.0),
        3 => (0.15, 0.01, 300.0),
        4 => (0.15, 0.05, 300.0),
        5 => (0.15, 0.01, 60.0),
        6 => (0.15, 0.05, 60.0),
        other => {
            return Err(Error::Config(format!(
                "unknown condition id {other}; expected 1..6"
            )))
        }
    };
    let attacker_traffic_share = 0.20;
    let spec = TrafficSpec {
        condition_id,
        total_requests: 200_000,
        concurrency: 200,
        arrival_rate_rps: (400, 600),
        normal_ip_count: 190,
        attacker_ip_count: 10,
        attacker_traffic_share,
        scan_share_within_attacker_traffic: scan_share,
        effective_attack_probability: attacker_traffic_share * scan_share,
        scan_paths: DEFAULT_SCAN_PATHS.iter().map(|s| s.to_string()).collect(),
        malformed_log_rate: 0.01,
        rng_seed,
    };
    spec.validate()?;
    let policy = SentinelPolicy {
        run_times_s: vec![180.0, 300.0],
        window_s,
        threshold,
        ..SentinelPolicy::default()
    };
    Ok((spec, policy))
}

/// Generates the full arrival schedule: per-second counts drawn uniformly
/// from the rate band, offsets spread uniformly within each second, each
/// event independently assigned a source class and path.
///
/// Every event is exactly one of normal-IP homepage, attacker-IP homepage,
/// or attacker-IP scan; `ground_truth_attack` marks the last class.
pub fn generate_stream(spec: &TrafficSpec, pool: &IpPool) -> Vec<RequestEvent> {
    let mut rng = SplitMix64::new(rng::derive(spec.rng_seed, rng::STREAM_TRAFFIC));
    let mut events = Vec::with_capacity(spec.total_requests as usize);
    let mut remaining = spec.total_requests;
    let mut second = 0u64;
    while remaining > 0 {
        let per_second = rng.range_inclusive(
            spec.arrival_rate_rps.0 as u64,
            spec.arrival_rate_rps.1 as u64,
        );
        let n = per_second.min(remaining);
        let mut offsets: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        offsets.sort_unstable_by(|a, b| a.partial_cmp(b).expect("offsets are finite"));
        for offset in offsets {
            let from_attacker =
                !pool.attacker_ips.is_empty() && rng.chance(spec.attacker_traffic_share);
            let (source_ip, path, attack) = if from_attacker {
                let ip = pool.attacker_ips[rng.next_below(pool.attacker_ips.len() as u64) as usize];
                if rng.chance(spec.scan_share_within_attacker_traffic) {
                    let path = spec.scan_paths
                        [rng.next_below(spec.scan_paths.len() as u64) as usize]
                        .clone();
                    (ip, path, true)
                } else {
                    (ip, "/".to_string(), false)
                }
            } else {
                let ip = pool.normal_ips[rng.next_below(pool.normal_ips.len() as u64) as usize];
                (ip, "/".to_string(), false)
            };
            events.push(RequestEvent {
                t_arrival: second as f64 + offset,
                source_ip,
                path,
                ground_truth_attack: attack,
            });
        }
        remaining -= n;
        second += 1;
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(condition: u8, seed: u64) -> (TrafficSpec, SentinelPolicy) {
        build_condition(condition, seed).unwrap()
    }

    #[test]
    fn condition_table_matches_design() {
        let cases = [
            (1u8, 0.12, 0.10, 300.0),
            (2, 0.12, 0.20, 300.0),
            (3, 0.03, 0.01, 300.0),
            (4, 0.03, 0.05, 300.0),
            (5, 0.03, 0.01, 60.0),
            (6, 0.03, 0.05, 60.0),
        ];
        for (id, attack_prob, theta, window) in cases {
            let (s, p) = spec(id, 1);
            assert!((s.effective_attack_probability - attack_prob).abs() < 1e-12);
            assert_eq!(p.threshold, theta, "condition {id} threshold");
            assert_eq!(p.window_s, window, "condition {id} window");
            assert_eq!(s.total_requests, 200_000);
            assert_eq!(s.concurrency, 200);
            assert_eq!(s.normal_ip_count + s.attacker_ip_count, 200);
            assert_eq!(p.run_times_s, vec![180.0, 300.0]);
        }
    }

    #[test]
    fn unknown_condition_is_a_config_error() {
        assert!(matches!(build_condition(7, 1), Err(Error::Config(_))));
        assert!(matches!(build_condition(0, 1), Err(Error::Config(_))));
    }

    #[test]
    fn ip_pool_is_disjoint_and_stable() {
        let (s, _) = spec(1, 99);
        let a = IpPool::generate(&s);
        let b = IpPool::generate(&s);
        assert_eq!(a, b);
        assert_eq!(a.normal_ips.len(), 190);
        assert_eq!(a.attacker_ips.len(), 10);
        let normals: std::collections::BTreeSet<_> = a.normal_ips.iter().collect();
        assert_eq!(normals.len(), 190, "no duplicate normal ips");
        for ip in &a.attacker_ips {
            assert!(!normals.contains(ip), "pools must be disjoint");
        }
    }

    #[test]
    fn different_seeds_draw_different_pools() {
        let (s1, _) = spec(1, 1);
        let (s2, _) = spec(1, 2);
        assert_ne!(IpPool::generate(&s1), IpPool::generate(&s2));
    }

    #[test]
    fn stream_is_deterministic_for_a_seed() {
        let (mut s, _) = spec(1, 7);
        s.total_requests = 20_000;
        let pool = IpPool::generate(&s);
        assert_eq!(generate_stream(&s, &pool), generate_stream(&s, &pool));
    }

    #[test]
    fn stream_has_exact_count_and_monotone_arrivals() {
        let (mut s, _) = spec(2, 11);
        s.total_requests = 30_000;
        let pool = IpPool::generate(&s);
        let events = generate_stream(&s, &pool);
        assert_eq!(events.len(), 30_000);
        for pair in events.windows(2) {
            assert!(pair[0].t_arrival <= pair[1].t_arrival);
        }
    }

    #[test]
    fn full_seconds_stay_within_rate_band() {
        let (mut s, _) = spec(1, 13);
        s.total_requests = 50_000;
        let pool = IpPool::generate(&s);
        let events = generate_stream(&s, &pool);
        let last_second = events.last().unwrap().t_arrival.floor() as u64;
        let mut per_second = vec![0u64; last_second as usize + 1];
        for e in &events {
            per_second[e.t_arrival.floor() as usize] += 1;
        }
        // The final second may hold only the remainder of the request budget.
        for (sec, count) in per_second.iter().enumerate().take(last_second as usize) {
            assert!(
                (400..=600).contains(count),
                "second {sec} carried {count} arrivals"
            );
        }
    }

    #[test]
    fn zero_attacker_share_yields_no_attacks() {
        let (mut s, _) = spec(1, 5);
        s.total_requests = 10_000;
        s.attacker_traffic_share = 0.0;
        s.refresh_attack_probability();
        let pool = IpPool::generate(&s);
        let events = generate_stream(&s, &pool);
        assert!(events.iter().all(|e| !e.ground_truth_attack));
        assert!(events.iter().all(|e| e.path == "/"));
    }

    // Counting oracle: the empirical attack fraction over the full stream.
    fn attack_fraction(events: &[RequestEvent]) -> f64 {
        events.iter().filter(|e| e.ground_truth_attack).count() as f64 / events.len() as f64
    }

    #[test]
    fn condition_1_attack_fraction_near_twelve_percent() {
        let (s, _) = spec(1, 42);
        let pool = IpPool::generate(&s);
        let events = generate_stream(&s, &pool);
        assert!((attack_fraction(&events) - 0.12).abs() <= 0.005);
    }

    #[test]
    fn condition_4_attack_fraction_near_three_percent() {
        let (s, _) = spec(4, 42);
        let pool = IpPool::generate(&s);
        let events = generate_stream(&s, &pool);
        assert!((attack_fraction(&events) - 0.03).abs() <= 0.003);
    }

    #[test]
    fn event_partition_holds() {
        let (mut s, _) = spec(3, 21);
        s.total_requests = 40_000;
        let pool = IpPool::generate(&s);
        for e in generate_stream(&s, &pool) {
            let attacker_ip = pool.is_attacker(e.source_ip);
            let scan = e.is_scan(&s);
            if scan {
                assert!(attacker_ip, "scan paths are never emitted by normal IPs");
                assert!(e.ground_truth_attack);
            } else {
                assert_eq!(e.path, "/");
                assert!(!e.ground_truth_attack);
            }
        }
    }

    #[test]
    fn empirical_attacker_share_converges() {
        for seed in [1u64, 2, 3] {
            let (mut s, _) = spec(1, seed);
            s.total_requests = 60_000;
            let pool = IpPool::generate(&s);
            let events = generate_stream(&s, &pool);
            let n = events.len() as f64;
            let share = events
                .iter()
                .filter(|e| pool.is_attacker(e.source_ip))
                .count() as f64
                / n;
            let bound = 3.0 * (0.2 * 0.8 / n).sqrt();
            assert!(
                (share - 0.20).abs() <= bound,
                "seed {seed}: share {share} outside 3-sigma bound {bound}"
            );
        }
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let (s, _) = spec(1, 42);
        let text = toml::to_string(&s).unwrap();
        assert!(text.contains("arrival_rate_rps = [400, 600]"));
        let back: TrafficSpec = toml::from_str(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn invariant_violations_fail_validation() {
        let (mut s, _) = spec(1, 1);
        s.effective_attack_probability = 0.5;
        assert!(s.validate().is_err());
    }
}
