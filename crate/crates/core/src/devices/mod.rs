//! Physical-layer models: weak coherent source, fibre channel, gated
//! single-photon detector and the time-multiplexed single-detector readout.

mod channel;
mod multiplex;
mod source;
mod spd;

pub use channel::{transmittance, ChannelConfig};
pub use multiplex::{
    demultiplex, time_multiplex, Assignment, FrameTiming, GateSchedule, MultiplexConfig,
};
pub use source::{
    leakage_mean, multi_photon_fraction, photon_count, PhotonSource, SourceConfig, SourceKind,
};
pub use spd::{spd_detect, Arrival, ClickKind, SpdConfig, TimestampRecord};

/// Convert a loss in dB to a power transmittance.
pub fn db_to_transmittance(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Convert a power transmittance in (0, 1] to a loss in dB.
pub fn transmittance_to_db(t: f64) -> f64 {
    -10.0 * t.log10()
}
