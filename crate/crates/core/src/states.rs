//! Single-photon amplitude model of N-bin superposition states and the
//! one-bin delay-line interferometer (DLI) that decodes them.
//!
//! Port 0 is the constructive port for a zero phase difference between
//! neighbouring bins, so an interference click on port 0 reads as bit 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported number of time-bins (patterns are stored as a bitmask).
pub const MAX_BINS: usize = 64;

const NORM_TOLERANCE: f64 = 1e-9;

/// Absolute per-bin phases, each exactly 0 or π.
///
/// Stored as a bitmask: bit `i` set means bin `i` carries phase π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhasePattern {
    n_bins: u8,
    pi_mask: u64,
}

impl PhasePattern {
    pub fn from_phases(phases: &[f64]) -> Result<Self> {
        check_bins(phases.len())?;
        let mut pi_mask = 0u64;
        for (i, &p) in phases.iter().enumerate() {
            if p == PI {
                pi_mask |= 1 << i;
            } else if p != 0.0 {
                return Err(Error::domain(format!(
                    "phase {p} at bin {i} is neither 0 nor π"
                )));
            }
        }
        Ok(Self {
            n_bins: phases.len() as u8,
            pi_mask,
        })
    }

    /// Build the pattern whose first bin has phase 0 and whose consecutive
    /// differences are `bits` (bit 1 = π difference).
    pub fn from_differential(bits: &[u8]) -> Result<Self> {
        check_bins(bits.len() + 1)?;
        let mut mask = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::domain(format!("bit {b} is not 0 or 1")));
            }
            let prev = (mask >> i) & 1;
            mask |= (prev ^ b as u64) << (i + 1);
        }
        Ok(Self {
            n_bins: (bits.len() + 1) as u8,
            pi_mask: mask,
        })
    }

    /// Pattern for `n_bins` bins from a packed differential mask
    /// (bit `i` = difference between bins `i` and `i + 1`).
    pub fn from_differential_mask(n_bins: usize, diff_mask: u64) -> Result<Self> {
        check_bins(n_bins)?;
        let mut mask = 0u64;
        for i in 0..n_bins - 1 {
            let prev = (mask >> i) & 1;
            mask |= (prev ^ ((diff_mask >> i) & 1)) << (i + 1);
        }
        Ok(Self {
            n_bins: n_bins as u8,
            pi_mask: mask,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins as usize
    }

    pub fn is_pi(&self, bin: usize) -> bool {
        (self.pi_mask >> bin) & 1 == 1
    }

    pub fn phases(&self) -> Vec<f64> {
        (0..self.n_bins())
            .map(|i| if self.is_pi(i) { PI } else { 0.0 })
            .collect()
    }

    /// Packed key bits: bit `i` is the difference between bins `i` and `i + 1`.
    pub fn differential_mask(&self) -> u64 {
        (self.pi_mask ^ (self.pi_mask >> 1)) & low_bits(self.n_bins() - 1)
    }
}

fn low_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_bins(n: usize) -> Result<()> {
    if !(2..=MAX_BINS).contains(&n) {
        return Err(Error::domain(format!(
            "a pattern needs between 2 and {MAX_BINS} bins, got {n}"
        )));
    }
    Ok(())
}

/// Key bits carried by a pattern: 0 where consecutive phases agree, 1 otherwise.
pub fn differential_bits(pattern: &PhasePattern) -> Vec<u8> {
    let mask = pattern.differential_mask();
    (0..pattern.n_bins() - 1)
        .map(|i| ((mask >> i) & 1) as u8)
        .collect()
}

/// A single photon spread over N time-bins.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBinState {
    amplitudes: Vec<Complex64>,
    bin_width: f64,
}

impl TimeBinState {
    /// Wrap raw amplitudes. No normalisation check is made here;
    /// [`dli_transform`] rejects unnormalised states.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, bin_width: f64) -> Self {
        Self {
            amplitudes,
            bin_width,
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_bins(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Uniform superposition `(1/√N) Σ exp(i·φ_k) |k⟩` for the given pattern.
pub fn make_superposition(
    n_bins: usize,
    pattern: &PhasePattern,
    bin_width: f64,
) -> Result<TimeBinState> {
    if pattern.n_bins() != n_bins {
        return Err(Error::config(
            "pattern",
            format!(
                "pattern has {} phases but the state has {n_bins} bins",
                pattern.n_bins()
            ),
        ));
    }
    if !(bin_width > 0.0) {
        return Err(Error::config("bin_width", "must be positive"));
    }
    let amp = 1.0 / (n_bins as f64).sqrt();
    let amplitudes = (0..n_bins)
        .map(|i| {
            let sign = if pattern.is_pi(i) { -amp } else { amp };
            Complex64::new(sign, 0.0)
        })
        .collect();
    Ok(TimeBinState {
        amplitudes,
        bin_width,
    })
}

/// Click probabilities over output bins `1..=N+1` and the two DLI ports.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionDistribution {
    probs: Vec<[f64; 2]>,
    bin_width: f64,
}

impl DetectionDistribution {
    /// A distribution from explicit per-bin `[port 0, port 1]` probabilities.
    /// Entry `i` is output bin `i + 1`.
    pub fn from_probabilities(probs: Vec<[f64; 2]>, bin_width: f64) -> Result<Self> {
        if probs.iter().flatten().any(|&p| !(p >= 0.0)) {
            return Err(Error::domain("probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().flatten().sum();
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs, bin_width })
    }

    /// Number of output bins (N + 1).
    pub fn n_output_bins(&self) -> usize {
        self.probs.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Probability of a click in output `bin` (1-based) on `port`.
    pub fn prob(&self, bin: usize, port: u8) -> f64 {
        self.probs[bin - 1][port as usize]
    }

    pub fn bin_mass(&self, bin: usize) -> f64 {
        let [a, b] = self.probs[bin - 1];
        a + b
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    /// `(bin, port, probability)` triples in bin-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u8, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .flat_map(|(i, p)| [(i + 1, 0u8, p[0]), (i + 1, 1u8, p[1])])
    }

    /// Draw one `(bin, port)` outcome.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, u8) {
        let u: f64 = rng.random::<f64>() * self.total();
        let mut acc = 0.0;
        let mut last = (1, 0);
        for (bin, port, p) in self.iter() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = (bin, port);
            if u < acc {
                return (bin, port);
            }
        }
        last
    }
}

/// Pass a state through a DLI whose delay equals one bin width.
///
/// Output bin `k` interferes input bins `k` and `k - 1` (with `a_0 = a_{N+1} = 0`):
/// `p(k, ±) = (|a_k|² + |a_{k-1}|² ± 2V·Re(a_k·conj(a_{k-1}))) / 4`.
pub fn dli_transform(state: &TimeBinState, visibility: f64) -> Result<DetectionDistribution> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::domain(format!(
            "visibility {visibility} is outside [0, 1]"
        )));
    }
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::domain(format!("state norm² is {norm}, not 1")));
    }
    let a = state.amplitudes();
    let n = a.len();
    let zero = Complex64::new(0.0, 0.0);
    let probs = (1..=n + 1)
        .map(|k| {
            let cur = if k <= n { a[k - 1] } else { zero };
            let prev = if k >= 2 { a[k - 2] } else { zero };
            let base = cur.norm_sqr() + prev.norm_sqr();
            let cross = 2.0 * visibility * (cur * prev.conj()).re;
            [
                ((base + cross) / 4.0).max(0.0),
                ((base - cross) / 4.0).max(0.0),
            ]
        })
        .collect();
    Ok(DetectionDistribution {
        probs,
        bin_width: state.bin_width(),
    })
}

/// Draw one `(bin, port)` pair from `dist`.
pub fn sample_detection<R: Rng + ?Sized>(dist: &DetectionDistribution, rng: &mut R) -> (usize, u8) {
    dist.sample(rng)
}
