use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Contiguous RB chunk given to one UE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbAllocation {
    pub ue: usize,
    pub rbs: Range<usize>,
}

/// Splits `rb_count` RBs into `n` contiguous chunks whose sizes differ by at
/// most one; the first chunks take the remainder.
pub fn split_rbs(rb_count: usize, n: usize) -> Vec<Range<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let n = n.min(rb_count);
    let base = rb_count / n;
    let extra = rb_count % n;
    let mut start = 0;
    (0..n)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Round-robin state for one gNB and direction: serves the UEs that waited
/// longest. UEs served in the same slot keep their order within that slot, so
/// a constant backlogged set rotates like a FIFO; never-served UEs go first,
/// by id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoundRobin {
    last_served: Vec<Option<(u64, usize)>>,
}

impl RoundRobin {
    pub fn new(ue_count: usize) -> Self {
        Self {
            last_served: vec![None; ue_count],
        }
    }

    pub fn last_served(&self, ue: usize) -> Option<u64> {
        self.last_served[ue].map(|(slot, _)| slot)
    }

    /// `eligible` sorted by service priority, longest waiting first.
    pub fn priority_order(&self, eligible: &[usize]) -> Vec<usize> {
        let mut order: Vec<usize> = eligible.to_vec();
        // `None` (never served) sorts first.
        order.sort_by_key(|&u| (self.last_served[u], u));
        order
    }

    /// Picks up to `max_ues` of `eligible` and splits the RBs among them.
    pub fn schedule(&mut self, eligible: &[usize], rb_count: usize, max_ues: usize, slot: u64) -> Vec<RbAllocation> {
        let mut order = self.priority_order(eligible);
        order.truncate(max_ues.min(rb_count));
        let chunks = split_rbs(rb_count, order.len());
        order
            .into_iter()
            .zip(chunks)
            .enumerate()
            .map(|(pos, (ue, rbs))| {
                self.last_served[ue] = Some((slot, pos));
                RbAllocation { ue, rbs }
            })
            .collect()
    }
}

/// True when no RB is assigned twice.
pub fn is_orthogonal(allocs: &[RbAllocation], rb_count: usize) -> bool {
    let mut used = vec![false; rb_count];
    for a in allocs {
        for k in a.rbs.clone() {
            if k >= rb_count || used[k] {
                return false;
            }
            used[k] = true;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_split() {
        let s = split_rbs(66, 3);
        assert_eq!(s, vec![0..22, 22..44, 44..66]);
        let s = split_rbs(66, 8);
        let lens: Vec<usize> = s.iter().map(|r| r.len()).collect();
        assert_eq!(lens, vec![9, 9, 8, 8, 8, 8, 8, 8]);
        assert_eq!(s.last().unwrap().end, 66);
        assert!(split_rbs(66, 0).is_empty());
    }

    #[test]
    fn empty_when_nobody_backlogged() {
        let mut rr = RoundRobin::new(5);
        assert!(rr.schedule(&[], 66, 8, 0).is_empty());
    }

    #[test]
    fn ten_ues_rotate() {
        let mut rr = RoundRobin::new(10);
        let all: Vec<usize> = (0..10).collect();
        let first = rr.schedule(&all, 66, 8, 0);
        assert_eq!(first.len(), 8);
        assert!(is_orthogonal(&first, 66));
        let second = rr.schedule(&all, 66, 8, 1);
        assert_eq!(second[0].ue, 8);
        assert_eq!(second[1].ue, 9);
    }

    #[test]
    fn fairness_gap_at_most_one() {
        let n = 18;
        let mut rr = RoundRobin::new(n);
        let all: Vec<usize> = (0..n).collect();
        let mut count = vec![0usize; n];
        for s in 0..(8 * n as u64) {
            for a in rr.schedule(&all, 66, 8, s) {
                count[a.ue] += 1;
            }
            let max = *count.iter().max().unwrap();
            let min = *count.iter().min().unwrap();
            assert!(max - min <= 1);
        }
    }
}
