use std::collections::HashMap;
use std::ops::AddAssign;

use super::filter::{temporal_filter, GuardBandPolicy};
use super::session::SessionRecord;
use crate::devices::FrameTiming;
use crate::error::{Error, Result};
use crate::states::{differential_bits, PhasePattern};

/// Counts `c[p][q]`: clicks on port `p` inside a window where Alice sent bit `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountMatrix {
    pub c00: u64,
    pub c01: u64,
    pub c10: u64,
    pub c11: u64,
}

impl CountMatrix {
    pub fn total(&self) -> u64 {
        self.c00 + self.c01 + self.c10 + self.c11
    }

    pub fn qber(&self) -> Result<f64> {
        qber(self.c00, self.c01, self.c10, self.c11)
    }

    fn bump(&mut self, port: u8, bit: u8) {
        match (port, bit) {
            (0, 0) => self.c00 += 1,
            (0, _) => self.c01 += 1,
            (_, 0) => self.c10 += 1,
            _ => self.c11 += 1,
        }
    }
}

impl AddAssign for CountMatrix {
    fn add_assign(&mut self, o: Self) {
        self.c00 += o.c00;
        self.c01 += o.c01;
        self.c10 += o.c10;
        self.c11 += o.c11;
    }
}

/// `(C01 + C10) / total`.
pub fn qber(c00: u64, c01: u64, c10: u64, c11: u64) -> Result<f64> {
    let total = c00 + c01 + c10 + c11;
    if total == 0 {
        return Err(Error::UndefinedStatistic("QBER with zero counts".into()));
    }
    Ok((c01 + c10) as f64 / total as f64)
}

/// Key-window origins on each port and the window width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyWindows {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl KeyWindows {
    pub fn from_timing(timing: &FrameTiming) -> Self {
        let (t0, t1) = timing.key_window_origins();
        Self {
            t0,
            t1,
            dt: timing.bin_width,
        }
    }
}

/// Bucket frame-relative click times for one differential pattern.
///
/// Window `i` on port `p` is `[T_p + i·ΔT, T_p + (i+1)·ΔT)` and carries bit
/// `diff_bits[i]`. Clicks outside every window are ignored.
pub fn classify_counts(times: &[f64], diff_bits: &[u8], w: &KeyWindows) -> Result<CountMatrix> {
    let n = diff_bits.len();
    let span = n as f64 * w.dt;
    if !(w.dt > 0.0) {
        return Err(Error::config("windows.dt", "must be > 0"));
    }
    if w.t1 < w.t0 + span && w.t0 < w.t1 + span {
        return Err(Error::config(
            "multiplex.port_delay",
            "port-0 and port-1 key windows overlap",
        ));
    }
    let mut c = CountMatrix::default();
    for &t in times {
        for (port, origin) in [(0u8, w.t0), (1u8, w.t1)] {
            let x = ((t - origin) / w.dt).floor();
            if x >= 0.0 && (x as usize) < n {
                c.bump(port, diff_bits[x as usize]);
                break;
            }
        }
    }
    Ok(c)
}

/// Count matrix of a whole session: fold each click onto its pulse frame,
/// group by Alice's pattern and bucket with [`classify_counts`].
pub fn count_matrix(record: &SessionRecord, guard: &GuardBandPolicy) -> Result<CountMatrix> {
    let timing = record.timing();
    let (kept, _) = temporal_filter(&record.timestamps, guard, &timing);
    let mut groups: HashMap<u64, Vec<f64>> = HashMap::new();
    for ts in &kept {
        let Some(pulse) = timing.pulse_of(ts.time) else {
            continue;
        };
        if pulse >= record.n_pulses() {
            continue;
        }
        groups
            .entry(record.alice_mask(pulse))
            .or_default()
            .push(ts.time - timing.frame_start(pulse));
    }
    let windows = KeyWindows::from_timing(&timing);
    let mut total = CountMatrix::default();
    for (mask, times) in groups {
        let pattern = PhasePattern::from_differential_mask(timing.n_bins, mask)?;
        total += classify_counts(&times, &differential_bits(&pattern), &windows)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: KeyWindows = KeyWindows {
        t0: 1.5,
        t1: 11.5,
        dt: 1.0,
    };

    #[test]
    fn qber_examples() {
        assert_eq!(qber(100, 0, 0, 100).unwrap(), 0.0);
        assert_eq!(qber(0, 50, 50, 0).unwrap(), 1.0);
        assert!((qber(440, 30, 30, 500).unwrap() - 0.06).abs() < 1e-15);
        assert!(matches!(
            qber(0, 0, 0, 0),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn empty_stream() {
        assert_eq!(
            classify_counts(&[], &[0, 1], &W).unwrap(),
            CountMatrix::default()
        );
    }

    #[test]
    fn zero_zero_pattern_on_port_zero() {
        let c = classify_counts(&[1.6, 2.0, 2.9, 3.4], &[0, 0], &W).unwrap();
        assert_eq!(
            c,
            CountMatrix {
                c00: 4,
                ..Default::default()
            }
        );
    }

    #[test]
    fn window_edges_are_half_open() {
        let c = classify_counts(&[1.5, 2.5, 3.5, 11.5], &[0, 1], &W).unwrap();
        assert_eq!((c.c00, c.c01, c.c10, c.c11), (1, 1, 1, 0));
    }

    #[test]
    fn outside_windows_ignored() {
        let c = classify_counts(&[0.2, 1.4, 3.6, 9.0, 13.6], &[1, 1], &W).unwrap();
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn overlapping_windows_rejected() {
        let w = KeyWindows {
            t0: 1.5,
            t1: 2.5,
            dt: 1.0,
        };
        assert!(classify_counts(&[], &[0, 0], &w).is_err());
    }
}
