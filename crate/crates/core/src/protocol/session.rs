use rand::Rng;
use serde::{Deserialize, Serialize};

use super::filter::GuardBandPolicy;
use super::sift::{tally, DiscardLog};
use crate::attacks::{bs_attack_apply, resend_pattern, AttackConfig, ResendPhotons};
use crate::devices::{
    leakage_mean, spd_detect, transmittance, Arrival, ChannelConfig, FrameTiming, GateSchedule,
    MultiplexConfig, PhotonSource, SourceConfig, SpdConfig, TimestampRecord,
};
use crate::error::{Error, Result};
use crate::rng::{RngStreams, Stream};
use crate::states::{
    differential_bits, dli_transform, make_superposition, DetectionDistribution, PhasePattern,
};

/// Largest N for which per-pattern detection distributions are precomputed.
const CACHE_MAX_BINS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub source: SourceConfig,
    pub channel: ChannelConfig,
    pub dli_visibility: f64,
    pub spd: SpdConfig,
    pub multiplex: MultiplexConfig,
    pub n_pulses: u64,
    pub seed: u64,
    pub attack: Option<AttackConfig>,
    /// Guard band used for the discard log stored in the record.
    pub guard: GuardBandPolicy,
}

/// A 4-state test bed at 30 km. Device imperfections are set so that each
/// one alone gives roughly its measured share of the error budget for 1 ns
/// bins; the lumped insertion loss brings the sifted rate to about 21 kbit/s.
impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig {
                extinction_ratio_db: Some(15.0),
                pm_rise_time: 42e-12,
                ..SourceConfig::default()
            },
            channel: ChannelConfig {
                insertion_loss_db: 5.0,
                ..ChannelConfig::default()
            },
            dli_visibility: 0.92,
            spd: SpdConfig {
                dark_count_rate: 720.0,
                afterpulse_prob: 0.065,
                jitter_sigma: 162e-12,
                ..SpdConfig::default()
            },
            multiplex: MultiplexConfig::default(),
            n_pulses: 1_000_000,
            seed: 0,
            attack: None,
            guard: GuardBandPolicy::none(),
        }
    }
}

impl SessionConfig {
    /// Lossless link, perfect interferometer, unit-efficiency noiseless
    /// detector with no dead time.
    ///
    /// The port delay and pulse period are stretched when `n_bins` needs
    /// more room than the default 10 ns / 62.5 MHz frame.
    pub fn ideal(n_bins: usize, bin_width: f64) -> Self {
        let defaults = SourceConfig::default();
        let port_delay = MultiplexConfig::default()
            .port_delay
            .max((n_bins as f64 + 2.0) * bin_width);
        let frame = port_delay + (n_bins as f64 + 3.0) * bin_width;
        let source = SourceConfig {
            n_bins,
            bin_width,
            rep_rate: defaults.rep_rate.min(1.0 / frame),
            ..defaults
        };
        let multiplex = MultiplexConfig {
            port_delay,
            coupler_loss_db: 0.0,
        };
        Self {
            source,
            channel: ChannelConfig::lossless(),
            dli_visibility: 1.0,
            spd: SpdConfig::ideal(source.period()),
            multiplex,
            n_pulses: 1_000_000,
            seed: 0,
            attack: None,
            guard: GuardBandPolicy::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate(&self.multiplex)?;
        self.multiplex.validate(&self.source)?;
        self.channel.validate()?;
        self.spd.validate()?;
        if !(0.0..=1.0).contains(&self.dli_visibility) {
            return Err(Error::config("dli.visibility", "must lie in [0, 1]"));
        }
        if self.n_pulses == 0 {
            return Err(Error::config("pulses", "must be >= 1"));
        }
        self.guard.validate(self.source.bin_width)?;
        if let Some(a) = &self.attack {
            a.validate()?;
        }
        Ok(())
    }

    pub fn timing(&self) -> FrameTiming {
        FrameTiming::new(&self.source, &self.multiplex)
    }

    pub fn gates(&self) -> GateSchedule {
        GateSchedule::new(self.source.period(), &self.spd)
    }

    /// Simulated wall-clock span in seconds.
    pub fn duration(&self) -> f64 {
        self.n_pulses as f64 * self.source.period()
    }

    /// Probability that one emitted photon reaches the detector input,
    /// including any beam-splitter tap.
    pub fn photon_transmittance(&self) -> Result<f64> {
        let channel = match &self.attack {
            Some(AttackConfig::BeamSplitter(bs)) => {
                bs_attack_apply(&self.channel, bs, &self.source)?.0
            }
            _ => self.channel,
        };
        Ok(transmittance(&channel)
            * self.multiplex.coupler_transmittance()
            * self.source.splitting_transmittance())
    }
}

/// Everything one session produced.
#[derive(Debug, Clone)]
pub struct SessionRecord {
    pub config: SessionConfig,
    /// Alice's differential pattern per pulse, as a bit mask
    /// (bit `i` = difference `i+1`).
    alice_masks: Vec<u64>,
    /// Sorted by recorded time.
    pub timestamps: Vec<TimestampRecord>,
    pub discard_log: DiscardLog,
}

impl SessionRecord {
    /// Assemble a record from parts, e.g. for synthetic streams in tests.
    pub fn from_parts(
        config: SessionConfig,
        alice_patterns: &[PhasePattern],
        mut timestamps: Vec<TimestampRecord>,
    ) -> Result<Self> {
        let n = config.source.n_bins;
        if alice_patterns.len() as u64 != config.n_pulses {
            return Err(Error::config("pulses", "one pattern per pulse required"));
        }
        if alice_patterns.iter().any(|p| p.n_bins() != n) {
            return Err(Error::config("source.n_bins", "pattern length mismatch"));
        }
        timestamps.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut rec = Self {
            alice_masks: alice_patterns
                .iter()
                .map(|p| p.differential_mask())
                .collect(),
            timestamps,
            discard_log: DiscardLog::default(),
            config,
        };
        rec.discard_log = tally(&rec, &rec.config.guard).1;
        Ok(rec)
    }

    pub fn n_pulses(&self) -> u64 {
        self.alice_masks.len() as u64
    }

    pub fn timing(&self) -> FrameTiming {
        self.config.timing()
    }

    pub fn alice_pattern(&self, pulse: u64) -> PhasePattern {
        PhasePattern::from_differential_mask(
            self.config.source.n_bins,
            self.alice_masks[pulse as usize],
        )
        .expect("n_bins validated")
    }

    pub fn alice_patterns(&self) -> impl Iterator<Item = PhasePattern> + '_ {
        (0..self.n_pulses()).map(|p| self.alice_pattern(p))
    }

    pub(crate) fn alice_mask(&self, pulse: u64) -> u64 {
        self.alice_masks[pulse as usize]
    }

    /// Alice's N−1 differential bits for `pulse`.
    pub fn alice_bits(&self, pulse: u64) -> Vec<u8> {
        differential_bits(&self.alice_pattern(pulse))
    }

    /// Alice's bit for difference `index` (1-based) of `pulse`.
    pub fn alice_bit(&self, pulse: u64, index: usize) -> u8 {
        ((self.alice_masks[pulse as usize] >> (index - 1)) & 1) as u8
    }
}

struct DistributionTable {
    n_bins: usize,
    bin_width: f64,
    visibility: f64,
    cached: Vec<DetectionDistribution>,
}

impl DistributionTable {
    fn new(n_bins: usize, bin_width: f64, visibility: f64) -> Result<Self> {
        let mut cached = Vec::new();
        if n_bins <= CACHE_MAX_BINS {
            for mask in 0..(1u64 << (n_bins - 1)) {
                cached.push(Self::compute(n_bins, bin_width, visibility, mask)?);
            }
        }
        Ok(Self {
            n_bins,
            bin_width,
            visibility,
            cached,
        })
    }

    fn compute(n: usize, bw: f64, v: f64, mask: u64) -> Result<DetectionDistribution> {
        let pattern = PhasePattern::from_differential_mask(n, mask)?;
        dli_transform(&make_superposition(n, &pattern, bw)?, v)
    }

    fn sample<R: Rng + ?Sized>(&self, mask: u64, rng: &mut R) -> (usize, u8) {
        if self.cached.is_empty() {
            Self::compute(self.n_bins, self.bin_width, self.visibility, mask)
                .expect("valid pattern")
                .sample(rng)
        } else {
            self.cached[mask as usize].sample(rng)
        }
    }
}

/// Simulate `cfg.n_pulses` pulses end to end.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionRecord> {
    cfg.validate()?;
    let n = cfg.source.n_bins;
    let bw = cfg.source.bin_width;
    let period = cfg.source.period();
    let timing = cfg.timing();
    let diff_mask_all = (1u64 << (n - 1)) - 1;

    let streams = RngStreams::new(cfg.seed);
    let mut src_rng = streams.stream(Stream::Source);
    let mut chan_rng = streams.stream(Stream::Channel);
    let mut dli_rng = streams.stream(Stream::Interferometer);
    let mut det_rng = streams.stream(Stream::Detector);
    let mut eve_rng = streams.stream(Stream::Attack);
    let mut leak_rng = streams.stream(Stream::Leakage);

    let bob = DistributionTable::new(n, bw, cfg.dli_visibility)?;
    let ir = match &cfg.attack {
        Some(AttackConfig::InterceptResend(ir)) => Some((*ir, DistributionTable::new(n, bw, 1.0)?)),
        _ => None,
    };
    let source = PhotonSource::new(cfg.source.mean_photon_number);
    let t_photon = cfg.photon_transmittance()?;
    let arriving = PhotonSource::new(cfg.source.mean_photon_number * t_photon);
    let leak_mu = leakage_mean(&cfg.source);
    let leak_source = (leak_mu > 0.0).then(|| PhotonSource::new(leak_mu * t_photon));
    let off_span = period - n as f64 * bw;
    let rise_half = 0.5 * cfg.source.pm_rise_time;

    let mut alice_masks = Vec::with_capacity(cfg.n_pulses as usize);
    let mut arrivals = Vec::new();

    for pulse in 0..cfg.n_pulses {
        let mask = src_rng.random::<u64>() & diff_mask_all;
        alice_masks.push(mask);
        let frame = timing.frame_start(pulse);

        // Photons reaching the detector. Without an intercept-resend attack
        // Poisson thinning lets us draw them in one go.
        let mut sent_mask = mask;
        let photons = match &ir {
            None => arriving.sample(&mut chan_rng),
            Some((ir, eve_table)) => {
                let emitted = source.sample(&mut src_rng);
                let mut onward = emitted;
                if emitted > 0 && eve_rng.random::<f64>() < ir.intercept_fraction {
                    let (bin, port) = eve_table.sample(mask, &mut eve_rng);
                    sent_mask = resend_pattern(n, bin, port, &mut eve_rng)
                        .0
                        .differential_mask();
                    onward = match ir.resend {
                        ResendPhotons::Single => 1,
                        ResendPhotons::Poisson(mu) => PhotonSource::new(mu).sample(&mut eve_rng),
                    };
                }
                (0..onward)
                    .filter(|_| chan_rng.random::<f64>() < t_photon)
                    .count() as u64
            }
        };

        for _ in 0..photons {
            let (bin, mut port) = bob.sample(sent_mask, &mut dli_rng);
            // uniform position within the bin, in (-bw/2, bw/2]
            let u = bw * (0.5 - dli_rng.random::<f64>());
            if rise_half > 0.0 && (2..=n).contains(&bin) && u.abs() > 0.5 * bw - rise_half {
                port = dli_rng.random::<bool>() as u8;
            }
            arrivals.push(Arrival {
                time: frame + timing.bin_center(bin, port) + u,
                pulse,
            });
        }

        if let Some(leak) = &leak_source {
            for _ in 0..leak.sample(&mut leak_rng) {
                let mut t = (n as f64 + 0.5) * bw + leak_rng.random::<f64>() * off_span;
                if leak_rng.random::<bool>() {
                    t += bw;
                }
                if leak_rng.random::<bool>() {
                    t += timing.port_delay;
                }
                arrivals.push(Arrival {
                    time: frame + t,
                    pulse,
                });
            }
        }
    }

    arrivals.sort_by(|a, b| a.time.total_cmp(&b.time));
    let timestamps = spd_detect(
        &arrivals,
        &cfg.spd,
        &cfg.gates(),
        cfg.duration(),
        &mut det_rng,
    )?;
    let mut rec = SessionRecord {
        config: cfg.clone(),
        alice_masks,
        timestamps,
        discard_log: DiscardLog::default(),
    };
    rec.discard_log = tally(&rec, &cfg.guard).1;
    Ok(rec)
}
