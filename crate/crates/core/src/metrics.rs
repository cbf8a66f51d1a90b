//! Run metrics: the latency decomposition around a link failure, packet
//! loss, routing load and end-to-end delay, plus the closed-form latency
//! intervals implied by the protocol timers.

use crate::mobility::NodeId;
use crate::olsr::ProtocolConfig;
use crate::time::SimTime;
use crate::traffic::DropReason;
use std::collections::BTreeMap;

/// Closed interval in seconds.
pub type Interval = (f64, f64);

/// Latency intervals for a remote source learning of a link loss.
///
/// `via_tc` covers the case where the detector's next topology-control
/// message carries the change: its selector entry for the lost neighbor
/// must first age out (hold time minus up to one HELLO period), and the
/// corrective message then arrives within one TC period plus jitter.
/// `via_expiry` covers the silent case where the stale topology tuple at the
/// source simply ages out: between two and three TC periods after its last
/// refresh.
pub fn analytic_bounds(cfg: &ProtocolConfig) -> (Interval, Interval) {
    let hello = cfg.hello_interval.as_secs_f64();
    let tc = cfg.tc_interval.as_secs_f64();
    let hold = cfg.neighb_hold_time.as_secs_f64();
    let jitter = cfg.max_jitter.as_secs_f64();
    let via_tc = (hold - hello, hold + tc + jitter);
    let via_expiry = (2.0 * tc, 3.0 * tc);
    (via_tc, via_expiry)
}

/// One injected failure being watched for its recovery timeline.
#[derive(Clone, Debug)]
pub struct FailureWatch {
    pub link: (NodeId, NodeId),
    pub t_f: SimTime,
    /// First data drop attributable to this failure.
    pub t_d: Option<SimTime>,
    /// Per affected source: when its computed route stopped using the link.
    pub t_r: BTreeMap<NodeId, SimTime>,
}

impl FailureWatch {
    pub fn matches_link(&self, a: NodeId, b: NodeId) -> bool {
        (self.link.0 == a && self.link.1 == b) || (self.link.0 == b && self.link.1 == a)
    }

    /// Latency per affected source with both stamps present.
    pub fn latencies(&self) -> Vec<(NodeId, f64)> {
        let Some(t_d) = self.t_d else { return Vec::new() };
        self.t_r
            .iter()
            .map(|(&src, &t_r)| (src, t_r.abs_diff(t_d).as_secs_f64()))
            .collect()
    }
}

#[derive(Debug, Default)]
pub struct Metrics {
    /// Control transmissions: every emitted and forwarded HELLO, TC,
    /// fast TC and route-error hop. Data-plane re-emissions never count.
    pub control_tx: u64,
    pub data_generated: u64,
    pub data_delivered: u64,
    pub drops: BTreeMap<DropReason, u64>,
    /// Where and when each drop happened.
    pub drop_log: Vec<(SimTime, NodeId, DropReason)>,
    pub delay_sum: f64,
    pub watches: Vec<FailureWatch>,
}

impl Metrics {
    pub fn data_dropped(&self) -> u64 {
        self.drops.values().sum()
    }

    pub fn record_delivery(&mut self, emit_time: SimTime, now: SimTime) {
        self.data_delivered += 1;
        self.delay_sum += (now - emit_time).as_secs_f64();
    }

    pub fn record_drop(&mut self, at: NodeId, reason: DropReason, now: SimTime) {
        *self.drops.entry(reason).or_insert(0) += 1;
        self.drop_log.push((now, at, reason));
    }

    /// Stamp the first failure-attributable drop: the failed transmission
    /// targeted the watched link.
    pub fn note_drop_on_link(&mut self, from: NodeId, to: NodeId, now: SimTime) {
        for w in &mut self.watches {
            if w.t_d.is_none() && now >= w.t_f && w.matches_link(from, to) {
                w.t_d = Some(now);
            }
        }
    }

    /// Percentage of generated packets that were dropped. Zero traffic
    /// reports 0 with the `defined` flag cleared.
    pub fn packet_loss_rate(&self) -> (f64, bool) {
        if self.data_generated == 0 {
            return (0.0, false);
        }
        (100.0 * self.data_dropped() as f64 / self.data_generated as f64, true)
    }

    /// Control transmissions as a percentage of control plus delivered data.
    pub fn routing_load(&self) -> f64 {
        let n = self.control_tx as f64;
        let denom = n + self.data_delivered as f64;
        if denom == 0.0 {
            return 0.0;
        }
        100.0 * n / denom
    }

    pub fn avg_delay(&self) -> (f64, bool) {
        if self.data_delivered == 0 {
            return (0.0, false);
        }
        (self.delay_sum / self.data_delivered as f64, true)
    }

    pub fn all_latencies(&self) -> Vec<f64> {
        self.watches.iter().flat_map(|w| w.latencies().into_iter().map(|(_, d)| d)).collect()
    }
}
