use crate::Scalar;

/// Spectral efficiencies (bits per resource element) of MCS 0..=15. Entries
/// 1..=15 follow the 4-bit CQI table; entry 0 is a QPSK rate-30/1024 floor.
pub const SPECTRAL_EFFICIENCY: [f64; 16] = [
    0.0586, 0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234,
    5.1152, 5.5547,
];

/// SNR gap to Shannon capacity.
pub const IMPLEMENTATION_GAP_DB: f64 = 3.0;

pub const SUBCARRIERS_PER_RB: u64 = 12;
pub const SYMBOLS_PER_SLOT: u64 = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable<T> {
    pub min_sinr_db: Vec<T>,
    pub spectral_efficiency: Vec<T>,
}

impl<T: Scalar> Default for McsTable<T> {
    fn default() -> Self {
        let gap = T::lit(10.0).powf(T::lit(IMPLEMENTATION_GAP_DB) / T::lit(10.0));
        let se: Vec<T> = SPECTRAL_EFFICIENCY.iter().map(|&s| T::lit(s)).collect();
        let thr = se
            .iter()
            .map(|&s| T::lit(10.0) * (gap * (T::lit(2.0).powf(s) - T::one())).log10())
            .collect();
        Self {
            min_sinr_db: thr,
            spectral_efficiency: se,
        }
    }
}

impl<T: Scalar> McsTable<T> {
    pub fn len(&self) -> usize {
        self.min_sinr_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min_sinr_db.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        let inc = |v: &[T]| v.windows(2).all(|w| w[1] > w[0]);
        self.len() == self.spectral_efficiency.len() && !self.is_empty() && inc(&self.min_sinr_db) && inc(&self.spectral_efficiency)
    }

    pub fn max_index(&self) -> usize {
        self.len() - 1
    }
}

/// Highest MCS whose threshold does not exceed `sinr_db`; `None` is outage.
pub fn select_mcs<T: Scalar>(table: &McsTable<T>, sinr_db: T) -> Option<usize> {
    // Thresholds are sorted, so count how many are ≤ sinr.
    let n = table.min_sinr_db.partition_point(|&t| t <= sinr_db);
    n.checked_sub(1)
}

/// Transport block size for one slot, floored to whole bits.
pub fn tb_bits<T: Scalar>(table: &McsTable<T>, mcs: usize, n_rb: usize) -> u64 {
    let re = T::lit((n_rb as u64 * SUBCARRIERS_PER_RB * SYMBOLS_PER_SLOT) as f64);
    (table.spectral_efficiency[mcs] * re).floor().to_f64_lossy() as u64
}
