use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::MultiplexConfig;
use crate::error::{Error, Result};

/// How Alice forms the superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// Phase modulation at N-1 instants within one long pulse.
    #[default]
    TimeBin,
    /// A 1xN / Nx1 splitter-combiner; same amplitudes with an extra 1/N loss.
    SpatialPath,
}

/// Weak coherent source parameters. Times are in seconds, rates in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub mean_photon_number: f64,
    pub rep_rate: f64,
    pub n_bins: usize,
    pub bin_width: f64,
    /// Intensity-modulator extinction ratio in dB; `None` means no leakage.
    pub extinction_ratio_db: Option<f64>,
    /// Phase-modulator rise/fall time at each bin boundary.
    pub pm_rise_time: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            kind: SourceKind::TimeBin,
            mean_photon_number: 0.17,
            rep_rate: 62.5e6,
            n_bins: 3,
            bin_width: 1e-9,
            extinction_ratio_db: None,
            pm_rise_time: 0.0,
        }
    }
}

impl SourceConfig {
    pub fn period(&self) -> f64 {
        1.0 / self.rep_rate
    }

    /// Extra transmittance of the spatial splitter (1/N), 1 for time-bins.
    pub fn splitting_transmittance(&self) -> f64 {
        match self.kind {
            SourceKind::TimeBin => 1.0,
            SourceKind::SpatialPath => 1.0 / self.n_bins as f64,
        }
    }

    pub fn validate(&self, multiplex: &MultiplexConfig) -> Result<()> {
        if !(self.mean_photon_number > 0.0) {
            return Err(Error::config("source.mean_photon_number", "must be > 0"));
        }
        if !(self.rep_rate > 0.0) {
            return Err(Error::config("source.rep_rate", "must be > 0"));
        }
        if !(2..=crate::states::MAX_BINS).contains(&self.n_bins) {
            return Err(Error::config(
                "source.n_bins",
                format!("must be in 2..={}", crate::states::MAX_BINS),
            ));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::config("source.bin_width", "must be > 0"));
        }
        if let Some(er) = self.extinction_ratio_db {
            if !(er > 0.0) {
                return Err(Error::config("source.extinction_ratio", "must be > 0 dB"));
            }
        }
        if !(self.pm_rise_time >= 0.0 && self.pm_rise_time <= self.bin_width) {
            return Err(Error::config(
                "source.pm_rise_time",
                "must lie in [0, bin_width]",
            ));
        }
        let span = (self.n_bins as f64 + 1.0) * self.bin_width + multiplex.port_delay;
        if !(self.period() > span) {
            return Err(Error::config(
                "source.rep_rate",
                format!(
                    "pulse period {:.4e} s must exceed (N+1)·bin_width + port_delay = {span:.4e} s",
                    self.period()
                ),
            ));
        }
        Ok(())
    }
}

/// Poisson photon number with mean `mu`.
pub fn photon_count<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    match Poisson::new(mu) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => 0,
    }
}

/// Reusable photon-number sampler for a fixed mean.
#[derive(Debug, Clone)]
pub struct PhotonSource {
    dist: Option<Poisson<f64>>,
}

impl PhotonSource {
    pub fn new(mu: f64) -> Self {
        Self {
            dist: if mu > 0.0 {
                Poisson::new(mu).ok()
            } else {
                None
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.dist.as_ref().map_or(0, |d| d.sample(rng) as u64)
    }
}

/// `P(k >= 2) / P(k >= 1)` for a Poisson source.
pub fn multi_photon_fraction(mu: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    let p_nonempty = -(-mu).exp_m1();
    let p_one = mu * (-mu).exp();
    (p_nonempty - p_one) / p_nonempty
}

/// Mean number of leakage photons emitted per period while the intensity
/// modulator is nominally off, before any channel loss.
pub fn leakage_mean(source: &SourceConfig) -> f64 {
    match source.extinction_ratio_db {
        None => 0.0,
        Some(er) => {
            let on = source.n_bins as f64 * source.bin_width;
            let off = (source.period() - on).max(0.0);
            source.mean_photon_number * super::db_to_transmittance(er) * off / on
        }
    }
}
