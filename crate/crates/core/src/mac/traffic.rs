use super::tdd::Direction;

pub const PACKET_BITS: u64 = 3072;
pub const INTER_ARRIVAL_SLOTS: u64 = 4;

/// Constant-bit-rate backlog per UE and direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficQueue {
    pub packet_bits: u64,
    pub inter_arrival_slots: u64,
    backlog: Vec<[u64; 2]>,
    arrived: Vec<[u64; 2]>,
}

impl TrafficQueue {
    pub fn new(ue_count: usize, packet_bits: u64, inter_arrival_slots: u64) -> Self {
        assert!(inter_arrival_slots > 0);
        Self {
            packet_bits,
            inter_arrival_slots,
            backlog: vec![[0; 2]; ue_count],
            arrived: vec![[0; 2]; ue_count],
        }
    }

    pub fn cbr(ue_count: usize) -> Self {
        Self::new(ue_count, PACKET_BITS, INTER_ARRIVAL_SLOTS)
    }

    pub fn is_arrival_slot(&self, slot: u64) -> bool {
        slot % self.inter_arrival_slots == 0
    }

    /// Adds one packet per UE per direction on arrival slots.
    pub fn step_traffic(&mut self, slot: u64) {
        if !self.is_arrival_slot(slot) {
            return;
        }
        for (b, a) in self.backlog.iter_mut().zip(self.arrived.iter_mut()) {
            for d in 0..2 {
                b[d] += self.packet_bits;
                a[d] += self.packet_bits;
            }
        }
    }

    pub fn backlog(&self, ue: usize, dir: Direction) -> u64 {
        self.backlog[ue][dir.index()]
    }

    pub fn arrived(&self, ue: usize, dir: Direction) -> u64 {
        self.arrived[ue][dir.index()]
    }

    /// Removes up to `capacity_bits`; returns what was actually delivered.
    pub fn deliver(&mut self, ue: usize, dir: Direction, capacity_bits: u64) -> u64 {
        let b = &mut self.backlog[ue][dir.index()];
        let d = capacity_bits.min(*b);
        *b -= d;
        d
    }
}
