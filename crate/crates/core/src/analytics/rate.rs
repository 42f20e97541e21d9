use serde::{Deserialize, Serialize};

use crate::devices::{db_to_transmittance, transmittance_to_db, SourceKind};
use crate::error::{Error, Result};
use crate::protocol::SessionConfig;

/// Inputs of the sifted-rate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModelParams {
    pub rep_rate: f64,
    pub mean_photon_number: f64,
    pub efficiency: f64,
    pub attenuation_db_per_km: f64,
    pub length_km: f64,
    /// Everything other than fibre attenuation, in dB.
    pub insertion_loss_db: f64,
    pub hold_off: f64,
}

impl RateModelParams {
    /// Parameters matching a session: the coupler, the spatial splitter,
    /// any beam-splitter tap and the sift fraction are folded into the
    /// insertion loss, so the model counts sifted bits.
    pub fn from_session(cfg: &SessionConfig) -> Result<Self> {
        let fibre = db_to_transmittance(cfg.channel.attenuation_db_per_km * cfg.channel.length_km);
        let t = cfg.photon_transmittance()? * m_state_sift_fraction(cfg.source.n_bins);
        Ok(Self {
            rep_rate: cfg.source.rep_rate,
            mean_photon_number: cfg.source.mean_photon_number,
            efficiency: cfg.spd.efficiency,
            attenuation_db_per_km: cfg.channel.attenuation_db_per_km,
            length_km: cfg.channel.length_km,
            insertion_loss_db: transmittance_to_db(t / fibre),
            hold_off: cfg.spd.hold_off,
        })
    }

    /// `T_L = 10^(-(αL + I_L)/10)`.
    pub fn transmittance(&self) -> f64 {
        db_to_transmittance(self.attenuation_db_per_km * self.length_km + self.insertion_loss_db)
    }

    /// Detection rate before dead time, `r_p μ η T_L`.
    pub fn linear_rate(&self) -> f64 {
        self.rep_rate * self.mean_photon_number * self.efficiency * self.transmittance()
    }

    pub fn validate(&self) -> Result<()> {
        for (f, v) in [
            ("rep_rate", self.rep_rate),
            ("mean_photon_number", self.mean_photon_number),
            ("efficiency", self.efficiency),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(f, "must be > 0"));
            }
        }
        for (f, v) in [
            ("attenuation", self.attenuation_db_per_km),
            ("length", self.length_km),
            ("hold_off", self.hold_off),
        ] {
            if !(v >= 0.0) {
                return Err(Error::config(f, "must be >= 0"));
            }
        }
        Ok(())
    }
}

/// `R = x·exp(−x·τ_H)` with `x = r_p μ η T_L`.
pub fn sifted_rate(p: &RateModelParams) -> f64 {
    let x = p.linear_rate();
    x * (-x * p.hold_off).exp()
}

/// Non-paralysable dead-time form `x/(1 + x·τ_H)`, which is what the
/// Monte-Carlo detector produces.
pub fn sifted_rate_nonparalysable(p: &RateModelParams) -> f64 {
    let x = p.linear_rate();
    x / (1.0 + x * p.hold_off)
}

/// Insertion loss that makes [`sifted_rate`] equal `target`, taking the
/// low-rate branch (`x·τ_H ≤ 1`).
pub fn fit_insertion_loss(p: &RateModelParams, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::domain("target rate must be > 0"));
    }
    let x = if p.hold_off == 0.0 {
        target
    } else {
        let peak = 1.0 / (p.hold_off * std::f64::consts::E);
        if target > peak {
            return Err(Error::domain(format!(
                "target {target} exceeds the dead-time ceiling {peak}"
            )));
        }
        let (mut lo, mut hi) = (0.0, 1.0 / p.hold_off);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (-mid * p.hold_off).exp() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let t_l = x / (p.rep_rate * p.mean_photon_number * p.efficiency);
    Ok(transmittance_to_db(t_l) - p.attenuation_db_per_km * p.length_km)
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::domain(format!(
            "entropy argument {e} outside [0, 1]"
        )));
    }
    if e == 0.0 || e == 1.0 {
        return Ok(0.0);
    }
    Ok(-e * e.log2() - (1.0 - e) * (1.0 - e).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecureRateParams {
    pub shrinking_factor: f64,
    pub ec_inefficiency: f64,
}

impl Default for SecureRateParams {
    fn default() -> Self {
        Self {
            shrinking_factor: 1.0,
            ec_inefficiency: 1.16,
        }
    }
}

impl SecureRateParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.shrinking_factor) {
            return Err(Error::config(
                "analytics.shrinking_factor",
                "must lie in [0, 1]",
            ));
        }
        if !(self.ec_inefficiency >= 1.0) {
            return Err(Error::config("analytics.ec_inefficiency", "must be >= 1"));
        }
        Ok(())
    }
}

/// `R·max(0, τ − f·h(e))`. Error rates above one half are treated as one
/// half, so the result never grows with `e`.
pub fn secure_rate(r_sifted: f64, e: f64, sp: &SecureRateParams) -> f64 {
    if e.is_nan() {
        return 0.0;
    }
    let h = binary_entropy(e.clamp(0.0, 0.5)).expect("clamped");
    r_sifted * (sp.shrinking_factor - sp.ec_inefficiency * h).max(0.0)
}

/// Share of detections that land in interference bins, `(N−1)/N`.
pub fn m_state_sift_fraction(n_bins: usize) -> f64 {
    let n = n_bins as f64;
    (n - 1.0) / n
}

/// Sifted bits per photon reaching the encoder, including the `1/N` loss
/// of the spatial-path splitter.
pub fn sift_fraction(kind: SourceKind, n_bins: usize) -> f64 {
    let f = m_state_sift_fraction(n_bins);
    match kind {
        SourceKind::TimeBin => f,
        SourceKind::SpatialPath => f / n_bins as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> RateModelParams {
        RateModelParams {
            rep_rate: 62.5e6,
            mean_photon_number: 0.17,
            efficiency: 0.1,
            attenuation_db_per_km: 0.2,
            length_km: 30.0,
            insertion_loss_db: 0.0,
            hold_off: 10e-6,
        }
    }

    #[test]
    fn fit_inverts_rate() {
        let p = bench();
        let il = fit_insertion_loss(&p, 21_000.0).unwrap();
        let q = RateModelParams {
            insertion_loss_db: il,
            ..p
        };
        assert!((sifted_rate(&q) / 21_000.0 - 1.0).abs() < 1e-9);
        // direct inversion with the dead-time factor solved separately
        let x = q.linear_rate();
        assert!(x * p.hold_off <= 1.0);
        let t_l = x / (62.5e6 * 0.17 * 0.1);
        assert!((-10.0 * t_l.log10() - 6.0 - il).abs() < 1e-9);
    }

    #[test]
    fn zero_hold_off_is_linear() {
        let p = RateModelParams {
            hold_off: 0.0,
            ..bench()
        };
        let expect = 62.5e6 * 0.17 * 0.1 * 10f64.powf(-0.6);
        assert!((sifted_rate(&p) - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn low_rate_agrees_with_linear() {
        let p = RateModelParams {
            insertion_loss_db: 25.0,
            ..bench()
        };
        assert!(p.linear_rate() * p.hold_off < 0.01);
        assert!((sifted_rate(&p) / p.linear_rate() - 1.0).abs() < 0.01);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let h = binary_entropy(0.11).unwrap();
        let oracle = -(0.11f64.ln() * 0.11 + 0.89f64.ln() * 0.89) / 2f64.ln();
        assert!((h - oracle).abs() < 1e-15);
        assert!((h - 0.4999).abs() < 1e-4);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn secure_rate_examples() {
        let one = SecureRateParams {
            shrinking_factor: 1.0,
            ec_inefficiency: 1.0,
        };
        assert_eq!(secure_rate(1000.0, 0.0, &one), 1000.0);
        let half = SecureRateParams {
            shrinking_factor: 0.5,
            ec_inefficiency: 1.16,
        };
        assert_eq!(secure_rate(1000.0, 0.11, &half), 0.0);
        for tau in [0.0, 0.3, 1.0] {
            let sp = SecureRateParams {
                shrinking_factor: tau,
                ec_inefficiency: 1.0,
            };
            assert_eq!(secure_rate(1000.0, 0.5, &sp), 0.0);
        }
    }

    #[test]
    fn secure_rate_non_increasing_in_e() {
        let sp = SecureRateParams::default();
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let r = secure_rate(1.0, i as f64 / 1000.0, &sp);
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn sift_fractions() {
        assert_eq!(m_state_sift_fraction(2), 0.5);
        assert!((m_state_sift_fraction(3) - 2.0 / 3.0).abs() < 1e-15);
        assert!(m_state_sift_fraction(1000) > 0.998);
        assert!((sift_fraction(SourceKind::SpatialPath, 4) - 0.1875).abs() < 1e-15);
    }
}
