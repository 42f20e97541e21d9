//! QBER budget: one contribution per noise mechanism, summed as
//! independent errors.
//!
//! [`BudgetModel`] predicts each contribution from a session configuration
//! with that mechanism acting alone; [`BudgetCalibration`] goes the other
//! way and sets device parameters so that each mechanism alone produces a
//! requested error rate.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use crate::devices::leakage_mean;
use crate::error::{Error, Result};
use crate::protocol::{GuardBandPolicy, SessionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorSource {
    DarkCounts,
    Afterpulse,
    ExtinctionRatio,
    TimingJitter,
    DliVisibility,
    RiseFall,
}

impl ErrorSource {
    pub const ALL: [ErrorSource; 6] = [
        ErrorSource::DarkCounts,
        ErrorSource::Afterpulse,
        ErrorSource::ExtinctionRatio,
        ErrorSource::TimingJitter,
        ErrorSource::DliVisibility,
        ErrorSource::RiseFall,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ErrorSource::DarkCounts => "dark counts",
            ErrorSource::Afterpulse => "afterpulse",
            ErrorSource::ExtinctionRatio => "extinction ratio",
            ErrorSource::TimingJitter => "timing jitter",
            ErrorSource::DliVisibility => "DLI visibility",
            ErrorSource::RiseFall => "modulator rise/fall",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorBudget {
    entries: Vec<(ErrorSource, f64)>,
}

impl ErrorBudget {
    pub fn new(entries: Vec<(ErrorSource, f64)>) -> Result<Self> {
        for (src, e) in &entries {
            if !(0.0..=0.5).contains(e) {
                return Err(Error::domain(format!(
                    "{} contribution {e} outside [0, 0.5]",
                    src.label()
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(ErrorSource, f64)] {
        &self.entries
    }

    pub fn get(&self, source: ErrorSource) -> Option<f64> {
        self.entries
            .iter()
            .find(|(s, _)| *s == source)
            .map(|(_, e)| *e)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, e)| e).sum()
    }

    /// QBER when each mechanism independently randomizes a click with
    /// probability `2e`: `(1 − Π(1 − 2e))/2`. Never above [`Self::total`].
    pub fn combined(&self) -> f64 {
        0.5 * (1.0
            - self
                .entries
                .iter()
                .map(|(_, e)| 1.0 - 2.0 * e)
                .product::<f64>())
    }

    pub fn largest(&self) -> f64 {
        self.entries.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }
}

pub fn error_budget_total(b: &ErrorBudget) -> f64 {
    b.total()
}

/// Measured test-bed budget for 1 ns or 0.4 ns bins.
pub fn bench_budget(bin_width: f64) -> Result<ErrorBudget> {
    use ErrorSource::*;
    let (jitter, vis, rise) = if (bin_width - 1e-9).abs() < 1e-15 {
        (0.050, 0.040, 0.021)
    } else if (bin_width - 0.4e-9).abs() < 1e-15 {
        (0.125, 0.020, 0.0525)
    } else {
        return Err(Error::domain(format!(
            "no measured budget for bin width {bin_width:e} s (have 1 ns and 0.4 ns)"
        )));
    };
    ErrorBudget::new(vec![
        (DarkCounts, 0.0033),
        (Afterpulse, 0.015),
        (ExtinctionRatio, 0.016),
        (TimingJitter, jitter),
        (DliVisibility, vis),
        (RiseFall, rise),
    ])
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Antiderivative of Φ: `zΦ(z) + φ(z)`.
fn norm_cdf_integral(z: f64) -> f64 {
    z * norm_cdf(z) + (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Per-mechanism QBER predictions for one configuration.
#[derive(Debug, Clone)]
pub struct BudgetModel {
    cfg: SessionConfig,
    guard: f64,
}

impl BudgetModel {
    pub fn new(cfg: &SessionConfig) -> Result<Self> {
        Self::with_guard(cfg, &cfg.guard)
    }

    pub fn with_guard(cfg: &SessionConfig, guard: &GuardBandPolicy) -> Result<Self> {
        cfg.validate()?;
        guard.validate(cfg.source.bin_width)?;
        Ok(Self {
            cfg: cfg.clone(),
            guard: guard.guard_time,
        })
    }

    fn n(&self) -> usize {
        self.cfg.source.n_bins
    }

    fn bw(&self) -> f64 {
        self.cfg.source.bin_width
    }

    /// Probability that a click spread uniformly over its bin is shifted by
    /// `d` bins by jitter and still survives the guard band.
    fn shift_prob(&self, d: i64, sigma: f64) -> f64 {
        let bw = self.bw();
        let h = 0.5 * (bw - self.guard);
        if sigma == 0.0 {
            return if d == 0 { 2.0 * h / bw } else { 0.0 };
        }
        let g = |c: f64| {
            norm_cdf_integral((c + 0.5 * bw) / sigma) - norm_cdf_integral((c - 0.5 * bw) / sigma)
        };
        let c = d as f64 * bw;
        (sigma / bw * (g(c + h) - g(c - h))).max(0.0)
    }

    /// Sifted click mass per detected signal photon, split into clicks in
    /// the right bin and clicks jittered into another interference bin.
    fn jitter_masses(&self, sigma: f64) -> (f64, f64) {
        let n = self.n() as i64;
        let mut correct = 0.0;
        let mut moved = 0.0;
        for k in 1..=n + 1 {
            let w = if k == 1 || k == n + 1 {
                0.5 / n as f64
            } else {
                1.0 / n as f64
            };
            for d in -n..=n {
                let dest = k + d;
                if !(2..=n).contains(&dest) {
                    continue;
                }
                let q = w * self.shift_prob(d, sigma);
                if d == 0 {
                    correct += q;
                } else {
                    moved += q;
                }
            }
        }
        (correct, moved)
    }

    /// Detected signal photons per pulse, ignoring dead time.
    fn detected_per_pulse(&self) -> f64 {
        self.cfg.source.mean_photon_number
            * self.cfg.photon_transmittance().unwrap_or(0.0)
            * self.cfg.spd.efficiency
    }

    /// Sifted signal clicks per pulse, ignoring dead time.
    pub fn signal_sifted_per_pulse(&self) -> f64 {
        let (c, m) = self.jitter_masses(self.cfg.spd.jitter_sigma);
        self.detected_per_pulse() * (c + m)
    }

    /// Fraction of sifted signal clicks that survive the guard band.
    pub fn guard_keep_fraction(&self) -> f64 {
        let sigma = self.cfg.spd.jitter_sigma;
        let (c, m) = self.jitter_masses(sigma);
        let open = Self {
            cfg: self.cfg.clone(),
            guard: 0.0,
        };
        let (c0, m0) = open.jitter_masses(sigma);
        (c + m) / (c0 + m0)
    }

    fn gates(&self) -> Vec<(f64, f64)> {
        let g = self.cfg.gates();
        (-1..=2)
            .map(|j| {
                let s = g.delay + j as f64 * g.period;
                (s, s + g.width)
            })
            .collect()
    }

    /// Sifting windows of frames 0 and 1, frame-relative.
    fn sifted_windows(&self) -> Vec<(f64, f64)> {
        let timing = self.cfg.timing();
        let bw = self.bw();
        let mut out = Vec::new();
        for frame in 0..2 {
            for port in [0u8, 1] {
                for k in 2..=self.n() {
                    let c = timing.bin_center(k, port) + frame as f64 * timing.period;
                    out.push((
                        c - 0.5 * bw + 0.5 * self.guard,
                        c + 0.5 * bw - 0.5 * self.guard,
                    ));
                }
            }
        }
        out
    }

    /// Gate-open time per period that sifting keeps.
    pub fn sifted_window_measure(&self) -> f64 {
        let period = self.cfg.source.period();
        let gates = self.gates();
        self.sifted_windows()
            .into_iter()
            .filter(|w| w.0 < period)
            .map(|w| gates.iter().map(|g| overlap(w, *g)).sum::<f64>())
            .sum()
    }

    fn leak_intervals(&self) -> Vec<(f64, f64)> {
        let bw = self.bw();
        let period = self.cfg.source.period();
        let start = (self.n() as f64 + 0.5) * bw;
        let mut out = Vec::new();
        for arm in [0.0, bw] {
            for port in [0.0, self.cfg.multiplex.port_delay] {
                out.push((start + arm + port, period + 0.5 * bw + arm + port));
            }
        }
        out
    }

    /// Leakage clicks per pulse: (in any gate, in a sifting window).
    fn leak_per_pulse(&self) -> (f64, f64) {
        let mu = leakage_mean(&self.cfg.source);
        if mu == 0.0 {
            return (0.0, 0.0);
        }
        let rate = mu * self.cfg.photon_transmittance().unwrap_or(0.0) * self.cfg.spd.efficiency;
        let span = self.cfg.source.period() - self.n() as f64 * self.bw();
        let gates = self.gates();
        let windows = self.sifted_windows();
        let mut in_gate = 0.0;
        let mut in_window = 0.0;
        for l in self.leak_intervals() {
            for g in &gates {
                in_gate += overlap(l, *g);
                let lg = (l.0.max(g.0), l.1.min(g.1));
                if lg.1 > lg.0 {
                    in_window += windows.iter().map(|w| overlap(lg, *w)).sum::<f64>();
                }
            }
        }
        let per_len = 0.25 * rate / span;
        (in_gate * per_len, in_window * per_len)
    }

    pub fn visibility_term(&self) -> f64 {
        0.5 * (1.0 - self.cfg.dli_visibility)
    }

    pub fn jitter_term(&self) -> f64 {
        let (c, m) = self.jitter_masses(self.cfg.spd.jitter_sigma);
        if c + m == 0.0 {
            0.0
        } else {
            0.5 * m / (c + m)
        }
    }

    /// Share of a bin's clicks with true offset in `[a, b]` that stay in
    /// their own bin and survive the guard.
    fn kept_in_place(&self, a: f64, b: f64, sigma: f64) -> f64 {
        let bw = self.bw();
        let h = 0.5 * (bw - self.guard);
        if sigma == 0.0 {
            return overlap((a, b), (-h, h)) / bw;
        }
        let int = |c: f64| {
            sigma * (norm_cdf_integral((c - a) / sigma) - norm_cdf_integral((c - b) / sigma))
        };
        ((int(h) - int(-h)) / bw).max(0.0)
    }

    /// Clicks whose true position is within `rise/2` of an interference-bin
    /// boundary carry a random port; those still counted in their own bin
    /// after jitter and guard are the rise/fall errors.
    pub fn rise_fall_term(&self) -> f64 {
        let r = self.cfg.source.pm_rise_time;
        if r == 0.0 {
            return 0.0;
        }
        let sigma = self.cfg.spd.jitter_sigma;
        let half = 0.5 * self.bw();
        let zone = 2.0 * self.kept_in_place(half - 0.5 * r, half, sigma);
        let n = self.n() as f64;
        let (c, m) = self.jitter_masses(sigma);
        0.5 * (n - 1.0) / n * zone / (c + m)
    }

    fn noise_term(&self, noise: f64) -> f64 {
        let s = self.signal_sifted_per_pulse();
        if noise + s == 0.0 {
            0.0
        } else {
            0.5 * noise / (s + noise)
        }
    }

    fn dark_sifted(&self) -> f64 {
        self.cfg.spd.dark_count_rate * self.sifted_window_measure()
    }

    pub fn dark_term(&self) -> f64 {
        self.noise_term(self.dark_sifted())
    }

    pub fn extinction_term(&self) -> f64 {
        self.noise_term(self.leak_per_pulse().1)
    }

    /// Clicks per pulse that can trigger an afterpulse.
    fn clicks_per_pulse(&self) -> f64 {
        self.detected_per_pulse()
            + self.cfg.spd.dark_count_rate * self.cfg.gates().width
            + self.leak_per_pulse().0
    }

    fn afterpulse_window_fraction(&self) -> f64 {
        self.sifted_window_measure() / self.cfg.gates().width
    }

    pub fn afterpulse_term(&self) -> f64 {
        let a = self.cfg.spd.afterpulse_prob
            * self.clicks_per_pulse()
            * self.afterpulse_window_fraction();
        self.noise_term(a)
    }

    pub fn budget(&self) -> ErrorBudget {
        use ErrorSource::*;
        let e = |x: f64| x.clamp(0.0, 0.5);
        ErrorBudget {
            entries: vec![
                (DarkCounts, e(self.dark_term())),
                (Afterpulse, e(self.afterpulse_term())),
                (ExtinctionRatio, e(self.extinction_term())),
                (TimingJitter, e(self.jitter_term())),
                (DliVisibility, e(self.visibility_term())),
                (RiseFall, e(self.rise_fall_term())),
            ],
        }
    }
}

/// Predicted per-mechanism budget for `cfg`, using its guard band.
pub fn predict_budget(cfg: &SessionConfig) -> Result<ErrorBudget> {
    Ok(BudgetModel::new(cfg)?.budget())
}

/// Set device parameters so each listed mechanism alone yields its target
/// error rate. Calibration is done without a guard band.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetCalibration {
    pub targets: ErrorBudget,
}

impl BudgetCalibration {
    pub fn new(targets: ErrorBudget) -> Self {
        Self { targets }
    }

    /// Noise clicks per pulse in the sifting windows that give error `e`
    /// against the signal.
    fn noise_for(model: &BudgetModel, e: f64) -> f64 {
        2.0 * e * model.signal_sifted_per_pulse() / (1.0 - 2.0 * e)
    }

    pub fn apply(&self, cfg: &SessionConfig) -> Result<SessionConfig> {
        let mut out = cfg.clone();
        let open = GuardBandPolicy::none();
        let check = |src: ErrorSource, e: f64| {
            if e >= 0.5 {
                Err(Error::domain(format!(
                    "{} target {e} must be < 0.5",
                    src.label()
                )))
            } else {
                Ok(e)
            }
        };
        if let Some(e) = self.targets.get(ErrorSource::DliVisibility) {
            out.dli_visibility = 1.0 - 2.0 * check(ErrorSource::DliVisibility, e)?;
        }
        if let Some(e) = self.targets.get(ErrorSource::RiseFall) {
            out.source.pm_rise_time = 2.0 * check(ErrorSource::RiseFall, e)? * out.source.bin_width;
        }
        if let Some(e) = self.targets.get(ErrorSource::TimingJitter) {
            out.spd.jitter_sigma = jitter_for(&out, check(ErrorSource::TimingJitter, e)?)?;
        }
        if let Some(e) = self.targets.get(ErrorSource::DarkCounts) {
            let m = BudgetModel::with_guard(&out, &open)?;
            let d = Self::noise_for(&m, check(ErrorSource::DarkCounts, e)?);
            out.spd.dark_count_rate = d / m.sifted_window_measure();
        }
        if let Some(e) = self.targets.get(ErrorSource::ExtinctionRatio) {
            let e = check(ErrorSource::ExtinctionRatio, e)?;
            out.source.extinction_ratio_db = None;
            if e > 0.0 {
                let want = Self::noise_for(&BudgetModel::with_guard(&out, &open)?, e);
                // leakage scales linearly with 10^(−ER/10); probe at 30 dB
                let mut probe = out.clone();
                probe.source.extinction_ratio_db = Some(30.0);
                let at_probe = BudgetModel::with_guard(&probe, &open)?.leak_per_pulse().1;
                if at_probe == 0.0 {
                    return Err(Error::domain("leakage never reaches a sifting window"));
                }
                out.source.extinction_ratio_db = Some(30.0 + 10.0 * (at_probe / want).log10());
            }
        }
        if let Some(e) = self.targets.get(ErrorSource::Afterpulse) {
            let m = BudgetModel::with_guard(&out, &open)?;
            let a = Self::noise_for(&m, check(ErrorSource::Afterpulse, e)?);
            let p = a / (m.clicks_per_pulse() * m.afterpulse_window_fraction());
            if !(p < 1.0) {
                return Err(Error::domain(format!(
                    "afterpulse target {e} needs probability {p} >= 1"
                )));
            }
            out.spd.afterpulse_prob = p;
        }
        out.validate()?;
        Ok(out)
    }
}

/// Jitter σ for which jitter alone gives error `e` without a guard band.
fn jitter_for(cfg: &SessionConfig, e: f64) -> Result<f64> {
    let open = GuardBandPolicy::none();
    let term = |sigma: f64| -> Result<f64> {
        let mut c = cfg.clone();
        c.spd.jitter_sigma = sigma;
        Ok(BudgetModel::with_guard(&c, &open)?.jitter_term())
    };
    if e == 0.0 {
        return Ok(0.0);
    }
    let bw = cfg.source.bin_width;
    let (mut lo, mut hi) = (0.0, 0.05 * bw);
    while term(hi)? < e {
        hi *= 2.0;
        if hi > 100.0 * bw {
            return Err(Error::domain(format!("jitter cannot reach error {e}")));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if term(mid)? < e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
