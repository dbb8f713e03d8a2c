//! Path loss, correlated shadowing and a geometric multipath channel.

pub mod link;
pub mod pathloss;
pub mod shadowing;

pub use link::{ChannelParams, Endpoint, Geometry, LinkState, Path, PATHS};
pub use pathloss::{assign_profile, free_space_db, pathloss_db, NodeKind, Profile};
pub use shadowing::{sample_shadowing, ShadowingField};

/// Header of the per-link trace written when link tracing is enabled.
pub const LINK_TRACE_HEADER: &str = "slot,link,tx_kind,tx,rx_kind,rx,pathloss_db,shadowing_db,los,best_beam_gain_db";

/// One trace row for `link` at `slot`; the beam gain is the best wideband
/// beamformed gain over end `a`'s codebook (end `b` at beam 0 unless `b` has
/// its own codebook, in which case both ends are swept).
pub fn trace_row(slot: u64, index: usize, link: &LinkState, time_s: f64) -> String {
    let c = link.coefficients(time_s);
    let g = if link.beams_b() > 1 {
        link.best_beam_pair(&c).2
    } else {
        link.best_beam_a(&c, 0).1
    };
    format!(
        "{slot},{index},{},{},{},{},{:.4},{:.4},{},{:.4}",
        link.a.kind.as_str(),
        link.a.id,
        link.b.kind.as_str(),
        link.b.id,
        link.pathloss_db,
        link.shadowing_db,
        u8::from(link.los),
        crate::units::lin_to_db(g)
    )
}
