//! Gated single-photon detector.
//!
//! Processing order for one detector:
//! 1. photons outside a gate are lost, the rest survive with probability η;
//! 2. dark counts are a Poisson process on gate-open time;
//! 3. a single time-ordered pass applies the hold-off (non-paralysable: a
//!    discarded click does not extend the dead interval) and lets each
//!    recorded click spawn at most one afterpulse;
//! 4. recorded clicks get Gaussian timing jitter and are sorted.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use super::GateSchedule;
use crate::error::{Error, Result};

/// Gates an afterpulse can land in after the hold-off ends.
const AFTERPULSE_MAX_GATES: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdConfig {
    pub efficiency: f64,
    /// Counts per second of gate-open time.
    pub dark_count_rate: f64,
    pub afterpulse_prob: f64,
    pub hold_off: f64,
    pub jitter_sigma: f64,
    pub gate_width: f64,
    pub gate_delay: f64,
}

impl Default for SpdConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.1,
            dark_count_rate: 0.0,
            afterpulse_prob: 0.0,
            hold_off: 10e-6,
            jitter_sigma: 0.0,
            gate_width: 15e-9,
            gate_delay: 0.0,
        }
    }
}

impl SpdConfig {
    /// A noiseless, jitter-free, unit-efficiency detector with no dead time.
    pub fn ideal(gate_width: f64) -> Self {
        Self {
            efficiency: 1.0,
            dark_count_rate: 0.0,
            afterpulse_prob: 0.0,
            hold_off: 0.0,
            jitter_sigma: 0.0,
            gate_width,
            gate_delay: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::config("detector.efficiency", "must lie in [0, 1]"));
        }
        if !(self.dark_count_rate >= 0.0) {
            return Err(Error::config("detector.dark_count_rate", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.afterpulse_prob) {
            return Err(Error::config(
                "detector.afterpulse_prob",
                "must lie in [0, 1)",
            ));
        }
        for (field, v) in [
            ("detector.hold_off", self.hold_off),
            ("detector.jitter", self.jitter_sigma),
            ("detector.gate_delay", self.gate_delay),
        ] {
            if !(v >= 0.0) {
                return Err(Error::config(field, "must be >= 0"));
            }
        }
        if !(self.gate_width > 0.0) {
            return Err(Error::config("detector.gate_width", "must be > 0"));
        }
        Ok(())
    }
}

/// A photon reaching the detector at its true (jitter-free) time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub pulse: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClickKind {
    Photon,
    Dark,
    Afterpulse,
}

/// One recorded detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimestampRecord {
    /// Recorded time in seconds, jitter included.
    pub time: f64,
    /// Source pulse for photon clicks; gate index for dark and afterpulse clicks.
    pub pulse: u64,
    pub kind: ClickKind,
    /// True avalanche time before jitter.
    pub true_time: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    pulse: u64,
    kind: ClickKind,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.time.total_cmp(&other.time) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap, we want the earliest first
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time)
    }
}

/// Run the arrivals of one detector over `[0, duration)`.
///
/// `arrivals` must be sorted by time.
pub fn spd_detect<R: Rng + ?Sized>(
    arrivals: &[Arrival],
    spd: &SpdConfig,
    gates: &GateSchedule,
    duration: f64,
    rng: &mut R,
) -> Result<Vec<TimestampRecord>> {
    if arrivals.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::domain("arrivals must be sorted by time"));
    }

    let photons: Vec<Pending> = arrivals
        .iter()
        .filter(|a| a.time >= 0.0 && a.time < duration && gates.contains(a.time))
        .filter(|_| rng.random::<f64>() < spd.efficiency)
        .map(|a| Pending {
            time: a.time,
            pulse: a.pulse,
            kind: ClickKind::Photon,
        })
        .collect();
    let darks = dark_counts(spd.dark_count_rate, gates, duration, rng);

    let mut out = Vec::with_capacity(photons.len() + darks.len());
    let mut afterpulses: BinaryHeap<Pending> = BinaryHeap::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut last: Option<f64> = None;
    loop {
        // earliest of the three sources
        let mut next: Option<Pending> = None;
        let mut pick = 0u8;
        if let Some(p) = photons.get(i) {
            next = Some(*p);
            pick = 1;
        }
        if let Some(d) = darks.get(j) {
            if next.is_none_or(|n| d.time < n.time) {
                next = Some(*d);
                pick = 2;
            }
        }
        if let Some(a) = afterpulses.peek() {
            if next.is_none_or(|n| a.time < n.time) {
                next = Some(*a);
                pick = 3;
            }
        }
        let Some(click) = next else { break };
        match pick {
            1 => i += 1,
            2 => j += 1,
            _ => {
                afterpulses.pop();
            }
        }

        if last.is_some_and(|l| click.time - l < spd.hold_off) {
            continue;
        }
        last = Some(click.time);
        out.push(TimestampRecord {
            time: click.time,
            pulse: click.pulse,
            kind: click.kind,
            true_time: click.time,
        });

        if click.kind != ClickKind::Afterpulse
            && spd.afterpulse_prob > 0.0
            && rng.random::<f64>() < spd.afterpulse_prob
        {
            let ap = afterpulse(click.time + spd.hold_off, gates, rng);
            if ap.time < duration {
                afterpulses.push(ap);
            }
        }
    }

    if spd.jitter_sigma > 0.0 {
        let normal = Normal::new(0.0, spd.jitter_sigma)
            .map_err(|e| Error::config("detector.jitter", e.to_string()))?;
        for rec in &mut out {
            rec.time = rec.true_time + normal.sample(rng);
        }
        out.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    Ok(out)
}

fn dark_counts<R: Rng + ?Sized>(
    rate: f64,
    gates: &GateSchedule,
    duration: f64,
    rng: &mut R,
) -> Vec<Pending> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    // Poisson process on concatenated gate-open time.
    let mut open_time = 0.0;
    loop {
        let gap: f64 = Exp1.sample(rng);
        open_time += gap / rate;
        let gate = (open_time / gates.width).floor();
        let t = gates.gate_start(gate as u64) + (open_time - gate * gates.width);
        if t >= duration {
            break;
        }
        out.push(Pending {
            time: t,
            pulse: gate as u64,
            kind: ClickKind::Dark,
        });
    }
    out
}

fn afterpulse<R: Rng + ?Sized>(earliest: f64, gates: &GateSchedule, rng: &mut R) -> Pending {
    // first gate that opens once the hold-off is over
    let (mut first, _) = gates.gate_at_or_after(earliest);
    if gates.gate_start(first) < earliest {
        first += 1;
    }
    let delay: f64 = Exp1.sample(rng);
    let k = (delay.floor() as u64).min(AFTERPULSE_MAX_GATES - 1);
    let gate = first + k;
    let time = gates.gate_start(gate) + rng.random::<f64>() * gates.width;
    Pending {
        time,
        pulse: gate,
        kind: ClickKind::Afterpulse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const NS: f64 = 1e-9;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn ideal_detector_is_identity() {
        let arrivals: Vec<Arrival> = (0..100)
            .map(|i| Arrival {
                time: i as f64 * 16.0 * NS + 2.0 * NS,
                pulse: i,
            })
            .collect();
        let spd = SpdConfig::ideal(16.0 * NS);
        let gates = GateSchedule::continuous(16.0 * NS);
        let out = spd_detect(&arrivals, &spd, &gates, 1.0, &mut rng(1)).unwrap();
        let times: Vec<f64> = out.iter().map(|r| r.time).collect();
        let expected: Vec<f64> = arrivals.iter().map(|a| a.time).collect();
        assert_eq!(times, expected);
    }

    #[test]
    fn unsorted_input_rejected() {
        let arrivals = [
            Arrival {
                time: 2.0,
                pulse: 0,
            },
            Arrival {
                time: 1.0,
                pulse: 1,
            },
        ];
        let spd = SpdConfig::ideal(1.0);
        let err = spd_detect(
            &arrivals,
            &spd,
            &GateSchedule::continuous(1.0),
            10.0,
            &mut rng(1),
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn dark_counts_restricted_to_gates() {
        let period = 100.0 * NS;
        let spd = SpdConfig {
            efficiency: 0.0,
            dark_count_rate: 1000.0,
            hold_off: 0.0,
            gate_width: 10.0 * NS,
            ..SpdConfig::ideal(10.0 * NS)
        };
        let gates = GateSchedule::new(period, &spd);
        let mut total = 0usize;
        let runs = 20;
        for seed in 0..runs {
            let out = spd_detect(&[], &spd, &gates, 1.0, &mut rng(seed)).unwrap();
            assert!(out.iter().all(|r| gates.contains(r.time)));
            total += out.len();
        }
        // Poisson thinning oracle: 1000/s · 0.1 duty · 1 s = 100 per run
        let mean = total as f64 / runs as f64;
        let sigma = (100.0 / runs as f64).sqrt();
        assert!((mean - 100.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn hold_off_suppresses_second_click() {
        let arrivals = [
            Arrival {
                time: 1e-6,
                pulse: 0,
            },
            Arrival {
                time: 2e-6,
                pulse: 1,
            },
        ];
        let spd = SpdConfig {
            hold_off: 10e-6,
            ..SpdConfig::ideal(1.0)
        };
        let out = spd_detect(
            &arrivals,
            &spd,
            &GateSchedule::continuous(1.0),
            1.0,
            &mut rng(1),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].time, 1e-6);
    }

    #[test]
    fn dead_time_throughput_matches_nonparalysable_model() {
        let tau = 10e-6;
        for &r_tau in &[0.1f64, 1.0, 3.0] {
            let rate = r_tau / tau;
            let duration = 20_000.0 / rate;
            let mut g = rng(r_tau.to_bits());
            let mut t = 0.0;
            let mut arrivals = Vec::new();
            loop {
                let gap: f64 = Exp1.sample(&mut g);
                t += gap / rate;
                if t >= duration {
                    break;
                }
                arrivals.push(Arrival { time: t, pulse: 0 });
            }
            let spd = SpdConfig {
                hold_off: tau,
                ..SpdConfig::ideal(1.0)
            };
            let out = spd_detect(
                &arrivals,
                &spd,
                &GateSchedule::continuous(1.0),
                duration,
                &mut g,
            )
            .unwrap();
            let measured = out.len() as f64 / duration;
            let model = rate / (1.0 + rate * tau);
            assert!(
                (measured / model - 1.0).abs() < 0.02,
                "Rτ={r_tau}: {measured} vs {model}"
            );
        }
    }

    #[test]
    fn afterpulses_follow_hold_off_within_five_gates() {
        let period = 16.0 * NS;
        let spd = SpdConfig {
            afterpulse_prob: 0.5,
            hold_off: 100.0 * NS,
            gate_width: 4.0 * NS,
            ..SpdConfig::ideal(4.0 * NS)
        };
        let gates = GateSchedule::new(period, &spd);
        let arrivals: Vec<Arrival> = (0..2000)
            .map(|i| Arrival {
                time: i as f64 * 10_000.0 * NS + 1.0 * NS,
                pulse: i,
            })
            .collect();
        let out = spd_detect(&arrivals, &spd, &gates, 1.0, &mut rng(3)).unwrap();
        let mut parent = None;
        let mut n_ap = 0;
        for r in &out {
            match r.kind {
                ClickKind::Photon => parent = Some(r.time),
                ClickKind::Afterpulse => {
                    n_ap += 1;
                    let p = parent.unwrap();
                    assert!(r.time >= p + spd.hold_off);
                    assert!(r.time < p + spd.hold_off + 6.0 * period);
                    assert!(gates.contains(r.time));
                }
                ClickKind::Dark => unreachable!(),
            }
        }
        let frac = n_ap as f64 / 2000.0;
        assert!((frac - 0.5).abs() < 0.05, "{frac}");
    }

    #[test]
    fn jitter_spreads_timestamps() {
        let arrivals: Vec<Arrival> = (0..20_000)
            .map(|i| Arrival {
                time: i as f64 * 1e-6,
                pulse: i,
            })
            .collect();
        let spd = SpdConfig {
            jitter_sigma: 50e-12,
            ..SpdConfig::ideal(1.0)
        };
        let out = spd_detect(
            &arrivals,
            &spd,
            &GateSchedule::continuous(1.0),
            1.0,
            &mut rng(4),
        )
        .unwrap();
        let var: f64 = out
            .iter()
            .map(|r| (r.time - r.true_time).powi(2))
            .sum::<f64>()
            / out.len() as f64;
        assert!((var.sqrt() / 50e-12 - 1.0).abs() < 0.03);
        assert!(out.windows(2).all(|w| w[0].time <= w[1].time));
    }
}
