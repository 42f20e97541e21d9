use serde::{Deserialize, Serialize};

use crate::devices::{Assignment, FrameTiming, TimestampRecord};
use crate::error::{Error, Result};

/// Guard band of total width `guard_time` centred on every bin boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GuardBandPolicy {
    pub guard_time: f64,
}

impl GuardBandPolicy {
    pub fn new(guard_time: f64) -> Self {
        Self { guard_time }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self, bin_width: f64) -> Result<()> {
        if !(self.guard_time >= 0.0 && self.guard_time < bin_width / 2.0) {
            return Err(Error::config(
                "filter.guard",
                format!(
                    "must lie in [0, bin_width/2) = [0, {:e}) s",
                    bin_width / 2.0
                ),
            ));
        }
        Ok(())
    }

    /// Whether an event at `offset` from its bin centre falls in a guard zone.
    pub fn rejects(&self, offset: f64, bin_width: f64) -> bool {
        self.guard_time > 0.0 && offset.abs() > 0.5 * (bin_width - self.guard_time)
    }
}

/// Drop timestamps that land within `g/2` of a bin boundary.
///
/// Unassigned timestamps pass through untouched; sifting discards them
/// separately. Returns the survivors and the discarded fraction of the input.
pub fn temporal_filter(
    timestamps: &[TimestampRecord],
    policy: &GuardBandPolicy,
    timing: &FrameTiming,
) -> (Vec<TimestampRecord>, f64) {
    if policy.guard_time == 0.0 || timestamps.is_empty() {
        return (timestamps.to_vec(), 0.0);
    }
    let kept: Vec<TimestampRecord> = timestamps
        .iter()
        .filter(|ts| match timing.assign(ts.time) {
            Assignment::Slot { offset, .. } => !policy.rejects(offset, timing.bin_width),
            Assignment::Unassigned => true,
        })
        .copied()
        .collect();
    let dropped = timestamps.len() - kept.len();
    (kept, dropped as f64 / timestamps.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::ClickKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn timing() -> FrameTiming {
        FrameTiming {
            period: 16e-9,
            bin_width: 1e-9,
            n_bins: 3,
            port_delay: 10e-9,
        }
    }

    fn stamp(t: f64) -> TimestampRecord {
        TimestampRecord {
            time: t,
            pulse: 0,
            kind: ClickKind::Photon,
            true_time: t,
        }
    }

    #[test]
    fn zero_guard_is_identity() {
        let ts: Vec<_> = [1.2e-9, 2.49e-9, 12.7e-9]
            .iter()
            .map(|&t| stamp(t))
            .collect();
        let (out, frac) = temporal_filter(&ts, &GuardBandPolicy::none(), &timing());
        assert_eq!(out, ts);
        assert_eq!(frac, 0.0);
    }

    #[test]
    fn uniform_stamps_lose_guard_over_bin_width() {
        let tm = timing();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ts: Vec<_> = (0..200_000u64)
            .map(|i| {
                let bin = 1 + (i % 4) as usize;
                let u: f64 = rng.random::<f64>() - 0.5;
                stamp(tm.frame_start(i) + tm.bin_center(bin, (i % 2) as u8) + u * tm.bin_width)
            })
            .collect();
        for g in [0.1e-9, 0.2e-9, 0.25e-9, 0.45e-9] {
            let (_, frac) = temporal_filter(&ts, &GuardBandPolicy::new(g), &tm);
            assert!((frac - g / tm.bin_width).abs() < 0.005, "g={g} frac={frac}");
        }
    }

    #[test]
    fn guard_rejects_only_near_boundaries() {
        let p = GuardBandPolicy::new(0.2e-9);
        assert!(!p.rejects(0.0, 1e-9));
        assert!(!p.rejects(0.39e-9, 1e-9));
        assert!(p.rejects(0.41e-9, 1e-9));
        assert!(p.rejects(-0.41e-9, 1e-9));
    }

    #[test]
    fn guard_range_is_checked() {
        assert!(GuardBandPolicy::new(0.0).validate(1e-9).is_ok());
        assert!(GuardBandPolicy::new(0.49e-9).validate(1e-9).is_ok());
        assert!(GuardBandPolicy::new(0.5e-9).validate(1e-9).is_err());
        assert!(GuardBandPolicy::new(-1e-12).validate(1e-9).is_err());
    }
}
