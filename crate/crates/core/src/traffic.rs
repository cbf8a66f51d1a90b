//! Constant-bit-rate traffic sources and per-packet accounting.

use crate::mobility::NodeId;
use crate::mpolsr::SourceRoute;
use crate::time::SimTime;
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug)]
pub struct CbrFlow {
    pub src: NodeId,
    pub dst: NodeId,
    pub packet_size: u32,
    /// Constant spacing between emissions.
    pub interval: SimTime,
    pub start: SimTime,
    pub stop: SimTime,
}

impl CbrFlow {
    /// Flow defined by a bit rate: interval = size * 8 / rate.
    pub fn from_bit_rate(src: NodeId, dst: NodeId, packet_size: u32, bits_per_sec: f64, start: SimTime, stop: SimTime) -> Self {
        let interval = SimTime::from_secs_f64(packet_size as f64 * 8.0 / bits_per_sec);
        CbrFlow { src, dst, packet_size, interval, start, stop }
    }

    /// Flow defined by a packet rate: interval = 1 / rate.
    pub fn from_packet_rate(src: NodeId, dst: NodeId, packet_size: u32, packets_per_sec: f64, start: SimTime, stop: SimTime) -> Self {
        let interval = SimTime::from_secs_f64(1.0 / packets_per_sec);
        CbrFlow { src, dst, packet_size, interval, start, stop }
    }
}

#[derive(Clone, Debug)]
pub struct DataPacket {
    pub id: u64,
    pub flow: usize,
    pub emit_time: SimTime,
    pub src: NodeId,
    pub dst: NodeId,
    /// Present under source routing; absent for hop-by-hop forwarding.
    pub route: Option<SourceRoute>,
    /// Nodes visited so far, source first.
    pub traversed: Vec<NodeId>,
    /// Hop budget for hop-by-hop forwarding; transient routing loops kill
    /// packets here the way an IP TTL would.
    pub ttl: u8,
}

pub const DATA_TTL: u8 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    NoRoute,
    TxFailure,
    RecoveryFailed,
    TtlExpired,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NoRoute => "no-route",
            DropReason::TxFailure => "tx-failure",
            DropReason::RecoveryFailed => "recovery-failed",
            DropReason::TtlExpired => "ttl-expired",
        }
    }
}

/// Tracks every packet id from emission to its unique final fate.
#[derive(Debug, Default)]
pub struct TrafficState {
    pub flows: Vec<CbrFlow>,
    next_id: u64,
    in_flight: BTreeSet<u64>,
}

impl TrafficState {
    pub fn new(flows: Vec<CbrFlow>) -> Self {
        TrafficState { flows, next_id: 0, in_flight: BTreeSet::new() }
    }

    pub fn emit(&mut self, flow: usize, now: SimTime) -> DataPacket {
        let f = self.flows[flow];
        let id = self.next_id;
        self.next_id += 1;
        self.in_flight.insert(id);
        DataPacket {
            id,
            flow,
            emit_time: now,
            src: f.src,
            dst: f.dst,
            route: None,
            traversed: vec![f.src],
            ttl: DATA_TTL,
        }
    }

    /// Settle a packet exactly once; double accounting is a consistency bug.
    pub fn settle(&mut self, id: u64) {
        assert!(self.in_flight.remove(&id), "packet {id} accounted twice");
    }

    pub fn in_flight_count(&self) -> usize {
        self.in_flight.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_rate_interval_matches_arithmetic() {
        // 512-byte packets at 100 kb/s: 4096 / 100000 s between packets.
        let f = CbrFlow::from_bit_rate(0, 4, 512, 100_000.0, SimTime::from_secs(10), SimTime::from_secs(50));
        assert_eq!(f.interval, SimTime::from_micros(40_960));
    }

    #[test]
    fn packet_rate_interval() {
        let f = CbrFlow::from_packet_rate(0, 4, 512, 10.0, SimTime::ZERO, SimTime::from_secs(200));
        assert_eq!(f.interval, SimTime::from_micros(100_000));
    }

    #[test]
    fn packets_get_unique_ids_and_settle_once() {
        let f = CbrFlow::from_packet_rate(0, 1, 512, 10.0, SimTime::ZERO, SimTime::from_secs(1));
        let mut t = TrafficState::new(vec![f]);
        let a = t.emit(0, SimTime::ZERO);
        let b = t.emit(0, SimTime::from_millis(100));
        assert_ne!(a.id, b.id);
        assert_eq!(t.in_flight_count(), 2);
        t.settle(a.id);
        assert_eq!(t.in_flight_count(), 1);
    }

    #[test]
    #[should_panic(expected = "accounted twice")]
    fn double_settle_is_fatal() {
        let f = CbrFlow::from_packet_rate(0, 1, 512, 10.0, SimTime::ZERO, SimTime::from_secs(1));
        let mut t = TrafficState::new(vec![f]);
        let a = t.emit(0, SimTime::ZERO);
        t.settle(a.id);
        t.settle(a.id);
    }
}
