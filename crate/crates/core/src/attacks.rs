//! Eavesdropper models.
//!
//! Intercept-resend: Eve measures each intercepted photon with her own
//! perfect DLI. An interference click in output bin `k` tells her difference
//! `k-1`; she resends a fresh N-bin state with that difference set and every
//! other difference drawn at random. An edge click tells her nothing and she
//! resends a fully random pattern. Bob's sifted error rate is then
//! `(N-1)/(2N)`.
//!
//! Beam-splitter tap: Eve removes a fraction of the channel flux; only the
//! multi-photon part of what she removes can leak key information.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::devices::{multi_photon_fraction, transmittance_to_db, ChannelConfig, SourceConfig};
use crate::error::{Error, Result};
use crate::states::{dli_transform, make_superposition, PhasePattern, TimeBinState};

/// How many photons Eve sends on per intercepted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResendPhotons {
    #[default]
    Single,
    /// Poisson-distributed photon number with the given mean.
    Poisson(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrAttackConfig {
    pub intercept_fraction: f64,
    pub resend: ResendPhotons,
}

impl IrAttackConfig {
    pub fn full() -> Self {
        Self {
            intercept_fraction: 1.0,
            resend: ResendPhotons::Single,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.intercept_fraction) {
            return Err(Error::config("attack.fraction", "must lie in [0, 1]"));
        }
        if let ResendPhotons::Poisson(mu) = self.resend {
            if !(mu > 0.0) {
                return Err(Error::config("attack.resend_mean_photon", "must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsAttackConfig {
    pub tap_ratio: f64,
}

impl BsAttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.tap_ratio) {
            return Err(Error::config("attack.tap_ratio", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttackConfig {
    InterceptResend(IrAttackConfig),
    BeamSplitter(BsAttackConfig),
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            AttackConfig::InterceptResend(c) => c.validate(),
            AttackConfig::BeamSplitter(c) => c.validate(),
        }
    }
}

/// What Eve learned from one measurement: `Some(bit)` for each difference
/// she knows, `None` elsewhere.
pub type EveKnowledge = Vec<Option<u8>>;

#[derive(Debug, Clone, PartialEq)]
pub struct IrOutcome {
    pub resent: TimeBinState,
    pub resent_pattern: PhasePattern,
    pub knowledge: EveKnowledge,
}

/// Build Eve's resend pattern from her click in output `bin` on `port`.
pub(crate) fn resend_pattern<R: Rng + ?Sized>(
    n_bins: usize,
    bin: usize,
    port: u8,
    rng: &mut R,
) -> (PhasePattern, EveKnowledge) {
    let n_diff = n_bins - 1;
    let mut knowledge = vec![None; n_diff];
    if (2..=n_bins).contains(&bin) {
        knowledge[bin - 2] = Some(port);
    }
    let mut mask = 0u64;
    for (i, k) in knowledge.iter().enumerate() {
        let bit = match k {
            Some(b) => *b as u64,
            None => rng.random::<bool>() as u64,
        };
        mask |= bit << i;
    }
    let pattern =
        PhasePattern::from_differential_mask(n_bins, mask).expect("n_bins validated by caller");
    (pattern, knowledge)
}

/// Intercept one photon in `state`, measure it, and prepare the resend.
pub fn ir_intercept<R: Rng + ?Sized>(state: &TimeBinState, rng: &mut R) -> Result<IrOutcome> {
    let dist = dli_transform(state, 1.0)?;
    let (bin, port) = dist.sample(rng);
    let n = state.n_bins();
    let (resent_pattern, knowledge) = resend_pattern(n, bin, port, rng);
    let resent = make_superposition(n, &resent_pattern, state.bin_width())?;
    Ok(IrOutcome {
        resent,
        resent_pattern,
        knowledge,
    })
}

/// Sifted error rate induced by a full intercept-resend attack on an
/// otherwise ideal link: `(N-1)/(2N)`.
pub fn ir_qber_exact(n_bins: usize) -> Result<f64> {
    if n_bins < 2 {
        return Err(Error::domain(format!("N must be >= 2, got {n_bins}")));
    }
    let n = n_bins as f64;
    Ok((n - 1.0) / (2.0 * n))
}

/// Apply a beam-splitter tap at Alice's output.
///
/// Returns the channel as Bob sees it and an upper bound on Eve's
/// information rate in bits/s: the tapped photon flux times the multi-photon
/// fraction.
pub fn bs_attack_apply(
    channel: &ChannelConfig,
    cfg: &BsAttackConfig,
    source: &SourceConfig,
) -> Result<(ChannelConfig, f64)> {
    cfg.validate()?;
    if cfg.tap_ratio == 0.0 {
        return Ok((*channel, 0.0));
    }
    let mut tapped = *channel;
    tapped.insertion_loss_db += transmittance_to_db(1.0 - cfg.tap_ratio);
    let flux = source.rep_rate * source.mean_photon_number * cfg.tap_ratio;
    let eve_rate = multi_photon_fraction(source.mean_photon_number) * flux;
    Ok((tapped, eve_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::transmittance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_values() {
        assert_eq!(ir_qber_exact(2).unwrap(), 0.25);
        assert!((ir_qber_exact(3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((ir_qber_exact(101).unwrap() - 100.0 / 202.0).abs() < 1e-15);
        assert!(0.5 - ir_qber_exact(10_000).unwrap() < 1e-4);
        assert!(ir_qber_exact(1).is_err());
    }

    #[test]
    fn closed_form_is_increasing_and_bounded() {
        let mut prev = 0.0;
        for n in 2..500 {
            let q = ir_qber_exact(n).unwrap();
            assert!(q > prev && q < 0.5);
            prev = q;
        }
    }

    #[test]
    fn informed_click_fixes_one_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [0usize; 2];
        for _ in 0..2000 {
            let (p, k) = resend_pattern(3, 2, 0, &mut rng);
            assert_eq!(k, vec![Some(0), None]);
            let bits = crate::states::differential_bits(&p);
            assert_eq!(bits[0], 0);
            seen[bits[1] as usize] += 1;
        }
        assert!(seen[0] > 900 && seen[1] > 900);
    }

    #[test]
    fn edge_click_leaves_eve_ignorant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, k) = resend_pattern(4, 1, 1, &mut rng);
        assert_eq!(k, vec![None; 3]);
        let (_, k) = resend_pattern(4, 5, 0, &mut rng);
        assert_eq!(k, vec![None; 3]);
    }

    #[test]
    fn resent_states_are_normalised_legal_patterns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=6 {
            for mask in 0..(1u64 << (n - 1)) {
                let p = PhasePattern::from_differential_mask(n, mask).unwrap();
                let s = make_superposition(n, &p, 1e-9).unwrap();
                let out = ir_intercept(&s, &mut rng).unwrap();
                assert!((out.resent.norm_sqr() - 1.0).abs() < 1e-12);
                assert!(!out.resent_pattern.is_pi(0));
                assert_eq!(out.resent_pattern.n_bins(), n);
                // any learned bit matches Alice's
                let alice = crate::states::differential_bits(&p);
                for (i, k) in out.knowledge.iter().enumerate() {
                    if let Some(b) = k {
                        assert_eq!(*b, alice[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn beam_splitter_examples() {
        let src = SourceConfig::default();
        let ch = ChannelConfig::default();
        let (same, rate) = bs_attack_apply(&ch, &BsAttackConfig { tap_ratio: 0.0 }, &src).unwrap();
        assert_eq!(same, ch);
        assert_eq!(rate, 0.0);

        let (half, _) = bs_attack_apply(&ch, &BsAttackConfig { tap_ratio: 0.5 }, &src).unwrap();
        let extra = ch.total_loss_db() - half.total_loss_db();
        assert!((extra + 3.0103).abs() < 1e-3);
        assert!((transmittance(&half) / transmittance(&ch) - 0.5).abs() < 1e-12);

        let (_, rate) = bs_attack_apply(&ch, &BsAttackConfig { tap_ratio: 0.1 }, &src).unwrap();
        let flux = src.rep_rate * 0.17 * 0.1;
        assert!((rate / flux - 0.0826).abs() < 5e-4);
        assert!(BsAttackConfig { tap_ratio: 1.0 }.validate().is_err());
    }
}
