use std::collections::HashSet;

use super::filter::GuardBandPolicy;
use super::session::SessionRecord;
use crate::devices::{Assignment, FrameTiming, TimestampRecord};
use crate::error::{Error, Result};

/// Where a single click ends up after demultiplexing and filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventClass {
    Sifted {
        pulse: u64,
        /// Difference index, 1..=N−1.
        index: usize,
        bin: usize,
        port: u8,
    },
    Edge {
        pulse: u64,
        bin: usize,
        port: u8,
    },
    Guard {
        pulse: u64,
        bin: usize,
        port: u8,
    },
    Unassigned,
}

/// Classify one click. The guard band is applied before the edge-bin rule,
/// so an edge click inside a guard zone counts as a guard discard.
pub fn classify_event(
    ts: &TimestampRecord,
    timing: &FrameTiming,
    guard: &GuardBandPolicy,
    n_pulses: u64,
) -> EventClass {
    match timing.assign(ts.time) {
        Assignment::Slot {
            pulse,
            bin,
            port,
            offset,
        } if pulse < n_pulses => {
            if guard.rejects(offset, timing.bin_width) {
                EventClass::Guard { pulse, bin, port }
            } else if bin == 1 || bin == timing.n_bins + 1 {
                EventClass::Edge { pulse, bin, port }
            } else {
                EventClass::Sifted {
                    pulse,
                    index: bin - 1,
                    bin,
                    port,
                }
            }
        }
        _ => EventClass::Unassigned,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DiscardLog {
    pub clicks: u64,
    pub sifted: u64,
    pub edge: u64,
    pub guard: u64,
    /// Guard discards in interference bins, i.e. lost key bits.
    pub guard_key: u64,
    pub unassigned: u64,
    /// Sifted bits from a pulse that already yielded one.
    pub repeated_pulse_bits: u64,
}

impl DiscardLog {
    /// Fraction of otherwise sifted clicks removed by the guard band.
    pub fn guard_fraction(&self) -> f64 {
        let denom = self.sifted + self.guard_key;
        if denom == 0 {
            0.0
        } else {
            self.guard_key as f64 / denom as f64
        }
    }
}

/// One sifted key bit. Bob announces `(pulse, index)`; the bits stay private.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedBit {
    pub pulse: u64,
    pub index: usize,
    pub bob_bit: u8,
    pub alice_bit: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SiftedKey {
    pub pairs: Vec<SiftedBit>,
    pub log: DiscardLog,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn errors(&self) -> usize {
        self.pairs
            .iter()
            .filter(|b| b.bob_bit != b.alice_bit)
            .count()
    }

    /// Bitwise mismatch fraction.
    pub fn qber(&self) -> Result<f64> {
        if self.pairs.is_empty() {
            return Err(Error::UndefinedStatistic("QBER of an empty key".into()));
        }
        Ok(self.errors() as f64 / self.pairs.len() as f64)
    }
}

pub(crate) fn tally(
    record: &SessionRecord,
    guard: &GuardBandPolicy,
) -> (Vec<SiftedBit>, DiscardLog) {
    let timing = record.timing();
    let n_pulses = record.n_pulses();
    let mut log = DiscardLog::default();
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for ts in &record.timestamps {
        log.clicks += 1;
        match classify_event(ts, &timing, guard, n_pulses) {
            EventClass::Sifted {
                pulse, index, port, ..
            } => {
                log.sifted += 1;
                if !seen.insert(pulse) {
                    log.repeated_pulse_bits += 1;
                }
                pairs.push(SiftedBit {
                    pulse,
                    index,
                    bob_bit: port,
                    alice_bit: record.alice_bit(pulse, index),
                });
            }
            EventClass::Edge { .. } => log.edge += 1,
            EventClass::Guard { bin, .. } => {
                log.guard += 1;
                if bin != 1 && bin != timing.n_bins + 1 {
                    log.guard_key += 1;
                }
            }
            EventClass::Unassigned => log.unassigned += 1,
        }
    }
    (pairs, log)
}

/// Sift with the guard band stored in the record's configuration.
pub fn sift(record: &SessionRecord) -> SiftedKey {
    sift_with(record, &record.config.guard)
}

pub fn sift_with(record: &SessionRecord, guard: &GuardBandPolicy) -> SiftedKey {
    let (pairs, log) = tally(record, guard);
    SiftedKey { pairs, log }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::ClickKind;
    use crate::protocol::SessionConfig;
    use crate::states::PhasePattern;

    fn record(pattern: &[u8], clicks: &[(usize, u8)]) -> SessionRecord {
        let cfg = SessionConfig {
            n_pulses: 1,
            ..SessionConfig::ideal(pattern.len() + 1, 1e-9)
        };
        let timing = cfg.timing();
        let ts = clicks
            .iter()
            .map(|&(bin, port)| {
                let t = timing.bin_center(bin, port);
                TimestampRecord {
                    time: t,
                    pulse: 0,
                    kind: ClickKind::Photon,
                    true_time: t,
                }
            })
            .collect();
        let p = PhasePattern::from_differential(pattern).unwrap();
        SessionRecord::from_parts(cfg, &[p], ts).unwrap()
    }

    #[test]
    fn first_interference_bin_gives_first_difference() {
        let key = sift(&record(&[0, 0], &[(2, 0)]));
        assert_eq!(
            key.pairs,
            vec![SiftedBit {
                pulse: 0,
                index: 1,
                bob_bit: 0,
                alice_bit: 0
            }]
        );
    }

    #[test]
    fn edge_click_is_logged_not_sifted() {
        let key = sift(&record(&[0, 0], &[(1, 0)]));
        assert!(key.is_empty());
        assert_eq!(key.log.edge, 1);
        let key = sift(&record(&[0, 0], &[(4, 1)]));
        assert_eq!(key.log.edge, 1);
    }

    #[test]
    fn later_difference_maps_to_its_index() {
        let key = sift(&record(&[0, 1, 0], &[(3, 1)]));
        assert_eq!(key.pairs[0].index, 2);
        assert_eq!(key.pairs[0].bob_bit, 1);
        assert_eq!(key.pairs[0].alice_bit, 1);
    }

    #[test]
    fn repeated_pulse_is_counted() {
        let key = sift(&record(&[0, 1], &[(2, 0), (3, 1), (1, 0)]));
        assert_eq!(key.len(), 2);
        assert_eq!(key.log.repeated_pulse_bits, 1);
        assert_eq!(key.log.clicks, 3);
        assert_eq!(key.qber().unwrap(), 0.0);
    }

    #[test]
    fn empty_key_has_no_qber() {
        assert!(SiftedKey::default().qber().is_err());
    }
}
