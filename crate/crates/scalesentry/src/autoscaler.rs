//! Custom-metric autoscaler: bang-bang reconciliation of the service tier's
//! desired replicas from the windowed 5xx count, clamped by mutable
//! min/max bounds. The trigger is strict (`metric > threshold`); on trigger
//! the desired count jumps to max, and it decays to min after an
//! untriggered stabilization window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Autoscaler configuration. `max_replicas` is mutable at runtime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpaSpec {
    pub min_replicas: u32,
    pub max_replicas: u32,
    pub trigger_threshold: u64,
    pub trigger_window_s: f64,
    pub stabilization_s: f64,
    pub reconcile_period_s: f64,
}

impl Default for HpaSpec {
    fn default() -> Self {
        HpaSpec {
            min_replicas: 1,
            max_replicas: 5,
            trigger_threshold: 50,
            trigger_window_s: 300.0,
            stabilization_s: 60.0,
            reconcile_period_s: 15.0,
        }
    }
}

/// One point of the replica trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpaHistoryEntry {
    pub t: f64,
    pub desired: u32,
    pub max_replicas: u32,
}

/// Live autoscaler state.
#[derive(Debug, Clone, PartialEq)]
pub struct HpaStatus {
    pub desired: u32,
    pub last_trigger_t: Option<f64>,
    pub history: Vec<HpaHistoryEntry>,
}

impl HpaStatus {
    pub fn new(spec: &HpaSpec) -> HpaStatus {
        HpaStatus {
            desired: spec.min_replicas,
            last_trigger_t: None,
            history: Vec::new(),
        }
    }
}

/// One reconcile step. `metric_value` is the service-tier 5xx increase over
/// the trigger window ending at `now`.
pub fn reconcile(spec: &HpaSpec, status: &mut HpaStatus, metric_value: u64, now: f64) {
    if metric_value > spec.trigger_threshold {
        status.desired = spec.max_replicas;
        status.last_trigger_t = Some(now);
    } else {
        let cooled = match status.last_trigger_t {
            None => true,
            Some(t) => now - t >= spec.stabilization_s,
        };
        if cooled {
            status.desired = spec.min_replicas;
        }
    }
    status.desired = status.desired.clamp(spec.min_replicas, spec.max_replicas);
    status.history.push(HpaHistoryEntry {
        t: now,
        desired: status.desired,
        max_replicas: spec.max_replicas,
    });
}

/// Updates `max_replicas`. If the current desired count exceeds the new
/// bound it is re-clamped immediately rather than waiting for the next
/// reconcile. Lowering max below min drags min down with it (the degenerate
/// equality case for a bound of 1). Setting the current max is a no-op.
pub fn set_max_replicas(
    spec: &mut HpaSpec,
    status: &mut HpaStatus,
    m: u32,
    now: f64,
) -> Result<()> {
    if m < 1 {
        return Err(Error::Contract(format!(
            "max_replicas {m} must be at least 1"
        )));
    }
    if m == spec.max_replicas && status.desired <= m {
        return Ok(());
    }
    if m < spec.min_replicas {
        spec.min_replicas = m;
    }
    spec.max_replicas = m;
    if status.desired > m {
        status.desired = m;
    }
    status.history.push(HpaHistoryEntry {
        t: now,
        desired: status.desired,
        max_replicas: spec.max_replicas,
    });
    Ok(())
}

/// Renders the trajectory as `t,desired,max_replicas` CSV.
pub fn history_csv(status: &HpaStatus) -> String {
    let mut out = String::from("t,desired,max_replicas\n");
    for e in &status.history {
        out.push_str(&format!("{},{},{}\n", e.t, e.desired, e.max_replicas));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn metric_above_threshold_scales_to_max() {
        let spec = HpaSpec::default();
        let mut status = HpaStatus::new(&spec);
        reconcile(&spec, &mut status, 51, 15.0);
        assert_eq!(status.desired, 5);
        assert_eq!(status.last_trigger_t, Some(15.0));
    }

    #[test]
    fn boundary_metric_of_fifty_does_not_trigger() {
        let spec = HpaSpec::default();
        let mut status = HpaStatus::new(&spec);
        reconcile(&spec, &mut status, 50, 15.0);
        assert_eq!(status.desired, 1, "strict > means 50 is not a trigger");
        assert_eq!(status.last_trigger_t, None);
        reconcile(&spec, &mut status, 51, 30.0);
        assert_eq!(status.desired, 5);
    }

    #[test]
    fn trigger_under_max_one_is_clamped() {
        let mut spec = HpaSpec::default();
        let mut status = HpaStatus::new(&spec);
        set_max_replicas(&mut spec, &mut status, 1, 0.0).unwrap();
        reconcile(&spec, &mut status, 51, 15.0);
        assert_eq!(status.desired, 1, "clamp dominates the trigger");
    }

    #[test]
    fn desired_decays_to_min_after_stabilization() {
        let spec = HpaSpec::default();
        let mut status = HpaStatus::new(&spec);
        reconcile(&spec, &mut status, 100, 0.0);
        assert_eq!(status.desired, 5);
        reconcile(&spec, &mut status, 0, 30.0);
        assert_eq!(status.desired, 5, "still inside stabilization");
        reconcile(&spec, &mut status, 0, 60.0);
        assert_eq!(status.desired, 1, "stabilization elapsed");
    }

    #[test]
    fn set_max_reclamps_immediately() {
        let mut spec = HpaSpec::default();
        let mut status = HpaStatus::new(&spec);
        reconcile(&spec, &mut status, 100, 15.0);
        assert_eq!(status.desired, 5);
        set_max_replicas(&mut spec, &mut status, 1, 180.0).unwrap();
        assert_eq!(status.desired, 1);
        assert_eq!(spec.max_replicas, 1);
        assert_eq!(spec.min_replicas, 1);

        // Restoring max does not raise desired by itself.
        set_max_replicas(&mut spec, &mut status, 5, 300.0).unwrap();
        assert_eq!(status.desired, 1);
        reconcile(&spec, &mut status, 100, 315.0);
        assert_eq!(status.desired, 5, "next trigger returns to the new max");
    }

    #[test]
    fn set_max_noop_and_contract() {
        let mut spec = HpaSpec::default();
        let mut status = HpaStatus::new(&spec);
        let history_len = status.history.len();
        set_max_replicas(&mut spec, &mut status, 5, 10.0).unwrap();
        assert_eq!(status.history.len(), history_len, "no-op records nothing");
        assert!(matches!(
            set_max_replicas(&mut spec, &mut status, 0, 10.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn desired_always_within_bounds_under_random_interleavings() {
        let mut rng = SplitMix64::new(8);
        for _ in 0..200 {
            let mut spec = HpaSpec::default();
            let mut status = HpaStatus::new(&spec);
            let mut now = 0.0;
            for _ in 0..50 {
                now += rng.next_f64() * 20.0;
                if rng.chance(0.5) {
                    reconcile(&spec, &mut status, rng.next_below(120), now);
                } else {
                    let m = 1 + rng.next_below(6) as u32;
                    set_max_replicas(&mut spec, &mut status, m, now).unwrap();
                }
                assert!(status.desired >= spec.min_replicas);
                assert!(status.desired <= spec.max_replicas);
            }
        }
    }

    #[test]
    fn trigger_is_monotone_in_the_metric() {
        let spec = HpaSpec::default();
        for m2 in [51u64, 60, 500] {
            let mut s2 = HpaStatus::new(&spec);
            reconcile(&spec, &mut s2, m2, 0.0);
            assert!(s2.last_trigger_t.is_some());
            for m1 in [m2, m2 + 1, m2 * 2] {
                let mut s1 = HpaStatus::new(&spec);
                reconcile(&spec, &mut s1, m1, 0.0);
                assert!(
                    s1.last_trigger_t.is_some(),
                    "m1 {m1} >= m2 {m2} must trigger"
                );
            }
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let timeline: Vec<(f64, u64, Option<u32>)> = vec![
            (0.0, 0, None),
            (15.0, 80, None),
            (180.0, 200, Some(1)),
            (300.0, 10, Some(5)),
            (315.0, 90, None),
        ];
        let run = || {
            let mut spec = HpaSpec::default();
            let mut status = HpaStatus::new(&spec);
            for &(t, metric, set_max) in &timeline {
                reconcile(&spec, &mut status, metric, t);
                if let Some(m) = set_max {
                    set_max_replicas(&mut spec, &mut status, m, t).unwrap();
                }
            }
            status.history
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn history_csv_shape() {
        let spec = HpaSpec::default();
        let mut status = HpaStatus::new(&spec);
        reconcile(&spec, &mut status, 51, 15.0);
        let csv = history_csv(&status);
        assert!(csv.starts_with("t,desired,max_replicas\n"));
        assert!(csv.contains("15,5,5"));
    }
}
