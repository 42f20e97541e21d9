//! Time-multiplexed readout: both DLI ports share one detector, with port 1
//! delayed by `port_delay`. Within a pulse frame, output bin `k` of port `p`
//! is centred at `k·bin_width + p·port_delay`.

use serde::{Deserialize, Serialize};

use super::{SourceConfig, SpdConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplexConfig {
    pub port_delay: f64,
    pub coupler_loss_db: f64,
}

impl Default for MultiplexConfig {
    fn default() -> Self {
        Self {
            port_delay: 10e-9,
            coupler_loss_db: 3.01,
        }
    }
}

impl MultiplexConfig {
    pub fn coupler_transmittance(&self) -> f64 {
        super::db_to_transmittance(self.coupler_loss_db)
    }

    pub fn validate(&self, source: &SourceConfig) -> Result<()> {
        let image = (source.n_bins as f64 + 1.0) * source.bin_width;
        if !(self.port_delay > image) {
            return Err(Error::config(
                "multiplex.port_delay",
                format!(
                    "must exceed (N+1)·bin_width = {image:.4e} s so port images do not overlap"
                ),
            ));
        }
        if !(self.coupler_loss_db >= 0.0) {
            return Err(Error::config("multiplex.coupler_loss", "must be >= 0 dB"));
        }
        Ok(())
    }
}

/// Frame geometry shared by multiplexing, demultiplexing and filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTiming {
    pub period: f64,
    pub bin_width: f64,
    pub n_bins: usize,
    pub port_delay: f64,
}

/// Result of mapping a timestamp back onto the frame grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Assignment {
    Slot {
        pulse: u64,
        /// Output bin, 1..=N+1.
        bin: usize,
        port: u8,
        /// Observed time minus the bin centre.
        offset: f64,
    },
    Unassigned,
}

impl FrameTiming {
    pub fn new(source: &SourceConfig, multiplex: &MultiplexConfig) -> Self {
        Self {
            period: source.period(),
            bin_width: source.bin_width,
            n_bins: source.n_bins,
            port_delay: multiplex.port_delay,
        }
    }

    pub fn frame_start(&self, pulse: u64) -> f64 {
        pulse as f64 * self.period
    }

    /// Frame-relative centre of output `bin` on `port`.
    pub fn bin_center(&self, bin: usize, port: u8) -> f64 {
        bin as f64 * self.bin_width + port as f64 * self.port_delay
    }

    /// Frame-relative origins `(T0, T1)` of the key windows on each port:
    /// the leading edge of output bin 2.
    pub fn key_window_origins(&self) -> (f64, f64) {
        let t0 = 1.5 * self.bin_width;
        (t0, t0 + self.port_delay)
    }

    /// Pulse frame containing `t`. Frames start half a bin before bin 1's
    /// window so that every window of a pulse shares its index.
    pub fn pulse_of(&self, t: f64) -> Option<u64> {
        let x = ((t - 0.5 * self.bin_width) / self.period).floor();
        (x >= 0.0).then_some(x as u64)
    }

    /// Nearest-centre assignment. A timestamp exactly midway between two
    /// bins goes to the earlier one.
    pub fn assign(&self, t: f64) -> Assignment {
        let Some(pulse) = self.pulse_of(t) else {
            return Assignment::Unassigned;
        };
        let rel = t - self.frame_start(pulse);
        let last = self.n_bins + 1;
        for port in [0u8, 1u8] {
            let x = (rel - port as f64 * self.port_delay) / self.bin_width;
            let bin = (x - 0.5).ceil();
            if bin >= 1.0 && bin <= last as f64 {
                let bin = bin as usize;
                return Assignment::Slot {
                    pulse,
                    bin,
                    port,
                    offset: rel - self.bin_center(bin, port),
                };
            }
        }
        Assignment::Unassigned
    }
}

/// True (jitter-free) arrival time of a click in output `bin` on `port`
/// for pulse `pulse_index`.
pub fn time_multiplex(
    bin: usize,
    port: u8,
    pulse_index: u64,
    cfg: &MultiplexConfig,
    source: &SourceConfig,
) -> f64 {
    let timing = FrameTiming::new(source, cfg);
    timing.frame_start(pulse_index) + timing.bin_center(bin, port)
}

/// Inverse of [`time_multiplex`]: `(pulse, bin, port)` or `None` when the
/// timestamp falls outside every window.
pub fn demultiplex(
    t: f64,
    cfg: &MultiplexConfig,
    source: &SourceConfig,
) -> Option<(u64, usize, u8)> {
    match FrameTiming::new(source, cfg).assign(t) {
        Assignment::Slot {
            pulse, bin, port, ..
        } => Some((pulse, bin, port)),
        Assignment::Unassigned => None,
    }
}

/// Detector gates: one per pulse period, opening `delay` after the frame
/// start and lasting `width` (clipped to the period).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSchedule {
    pub period: f64,
    pub delay: f64,
    pub width: f64,
}

impl GateSchedule {
    pub fn new(period: f64, spd: &SpdConfig) -> Self {
        Self {
            period,
            delay: spd.gate_delay,
            width: spd.gate_width.min(period),
        }
    }

    /// A gate that never closes.
    pub fn continuous(period: f64) -> Self {
        Self {
            period,
            delay: 0.0,
            width: period,
        }
    }

    pub fn gate_start(&self, index: u64) -> f64 {
        index as f64 * self.period + self.delay
    }

    pub fn duty_cycle(&self) -> f64 {
        self.width / self.period
    }

    pub fn contains(&self, t: f64) -> bool {
        let rel = t - self.delay;
        if rel < 0.0 {
            return false;
        }
        let j = (rel / self.period).floor();
        rel - j * self.period < self.width
    }

    /// The gate that is open at `t`, or else the next one to open.
    /// Returns the gate index and whether `t` is inside it.
    pub fn gate_at_or_after(&self, t: f64) -> (u64, bool) {
        let rel = t - self.delay;
        if rel < 0.0 {
            return (0, false);
        }
        let j = (rel / self.period).floor();
        if rel - j * self.period < self.width {
            (j as u64, true)
        } else {
            (j as u64 + 1, false)
        }
    }
}
