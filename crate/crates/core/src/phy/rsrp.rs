use crate::ncr::power_stage;
use crate::units::{db_to_lin, lin_to_db};
use crate::Scalar;

/// Transmit power per resource element for a total power spread evenly over
/// `res` resource elements.
pub fn per_re_power_dbm<T: Scalar>(total_dbm: T, res: usize) -> T {
    total_dbm - T::lit(10.0) * T::lit(res as f64).log10()
}

pub fn rsrp_direct_dbm<T: Scalar>(tx_per_re_dbm: T, gain_db: T) -> T {
    tx_per_re_dbm + gain_db
}

/// Two-hop RSRP through an NCR with fixed effective gain.
pub fn rsrp_forwarded_dbm<T: Scalar>(gnb_per_re_dbm: T, backhaul_gain_db: T, ncr_gain_db: T, access_gain_db: T) -> T {
    gnb_per_re_dbm + backhaul_gain_db + ncr_gain_db + access_gain_db
}

/// NCR effective gain when the gNB transmits its full power towards it:
/// the cap is evaluated on signal plus the NCR's own receiver noise.
pub fn full_load_ncr_gain_db<T: Scalar>(
    gnb_total_dbm: T,
    backhaul_gain_db: T,
    noise_total_dbm: T,
    amp_gain_db: T,
    max_output_dbm: T,
) -> T {
    let input = lin_to_db(db_to_lin(gnb_total_dbm + backhaul_gain_db) + db_to_lin(noise_total_dbm));
    power_stage(amp_gain_db, max_output_dbm, input).0
}
