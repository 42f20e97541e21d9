//! TOML run configuration.
//!
//! Every physical quantity is a string with an explicit unit, e.g.
//! `bin_width = "1 ns"`. Missing keys keep the [`SessionConfig`] defaults;
//! unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::SecureRateParams;
use crate::attacks::{AttackConfig, BsAttackConfig, IrAttackConfig, ResendPhotons};
use crate::devices::SourceKind;
use crate::error::{Error, Result};
use crate::protocol::{GuardBandPolicy, SessionConfig};
use crate::units::{format_quantity, parse_quantity, Dimension};

#[derive(Debug, Clone, PartialEq)]
pub struct AttackReportConfig {
    pub n_bins: Vec<usize>,
    pub min_sifted_bits: u64,
}

impl Default for AttackReportConfig {
    fn default() -> Self {
        Self {
            n_bins: vec![2, 3, 4],
            min_sifted_bits: 100_000,
        }
    }
}

/// Everything a subcommand needs from the config file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub session: SessionConfig,
    pub secure: SecureRateParams,
    pub attack_report: AttackReportConfig,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pulses: Option<u64>,
    #[serde(default)]
    source: RawSource,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    dli: RawDli,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    multiplex: RawMultiplex,
    #[serde(default)]
    filter: RawFilter,
    #[serde(skip_serializing_if = "Option::is_none")]
    attack: Option<RawAttack>,
    #[serde(default)]
    analytics: RawAnalytics,
    #[serde(default)]
    attack_report: RawAttackReport,
    /// Written into manifests; ignored when loading.
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<toml::Table>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    kind: Option<SourceKind>,
    mean_photon_number: Option<f64>,
    rep_rate: Option<String>,
    n_bins: Option<usize>,
    bin_width: Option<String>,
    extinction_ratio: Option<String>,
    pm_rise_time: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    length: Option<String>,
    attenuation: Option<String>,
    insertion_loss: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDli {
    visibility: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    efficiency: Option<f64>,
    dark_count_rate: Option<String>,
    afterpulse_prob: Option<f64>,
    hold_off: Option<String>,
    jitter: Option<String>,
    gate_width: Option<String>,
    gate_delay: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawMultiplex {
    port_delay: Option<String>,
    coupler_loss: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    guard: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    kind: String,
    fraction: Option<f64>,
    resend_mean_photon: Option<f64>,
    tap_ratio: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawAnalytics {
    shrinking_factor: Option<f64>,
    ec_inefficiency: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawAttackReport {
    n_bins: Option<Vec<usize>>,
    min_sifted_bits: Option<u64>,
}

fn set_q(target: &mut f64, field: &str, text: &Option<String>, dim: Dimension) -> Result<()> {
    if let Some(t) = text {
        *target = parse_quantity(field, t, dim)?;
    }
    Ok(())
}

fn set<T: Copy>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig> {
        use Dimension::*;
        let mut out = RunConfig::default();
        let s = &mut out.session;
        set(&mut s.seed, self.seed);
        set(&mut s.n_pulses, self.pulses);

        let src = &self.source;
        set(&mut s.source.kind, src.kind);
        set(&mut s.source.mean_photon_number, src.mean_photon_number);
        set_q(
            &mut s.source.rep_rate,
            "source.rep_rate",
            &src.rep_rate,
            Frequency,
        )?;
        set(&mut s.source.n_bins, src.n_bins);
        set_q(
            &mut s.source.bin_width,
            "source.bin_width",
            &src.bin_width,
            Time,
        )?;
        if let Some(t) = &src.extinction_ratio {
            s.source.extinction_ratio_db = match t.trim() {
                "none" | "off" => None,
                t => Some(parse_quantity("source.extinction_ratio", t, Decibel)?),
            };
        }
        set_q(
            &mut s.source.pm_rise_time,
            "source.pm_rise_time",
            &src.pm_rise_time,
            Time,
        )?;

        let ch = &self.channel;
        set_q(
            &mut s.channel.length_km,
            "channel.length",
            &ch.length,
            Length,
        )?;
        set_q(
            &mut s.channel.attenuation_db_per_km,
            "channel.attenuation",
            &ch.attenuation,
            Attenuation,
        )?;
        set_q(
            &mut s.channel.insertion_loss_db,
            "channel.insertion_loss",
            &ch.insertion_loss,
            Decibel,
        )?;

        set(&mut s.dli_visibility, self.dli.visibility);

        let d = &self.detector;
        set(&mut s.spd.efficiency, d.efficiency);
        set_q(
            &mut s.spd.dark_count_rate,
            "detector.dark_count_rate",
            &d.dark_count_rate,
            Frequency,
        )?;
        set(&mut s.spd.afterpulse_prob, d.afterpulse_prob);
        set_q(&mut s.spd.hold_off, "detector.hold_off", &d.hold_off, Time)?;
        set_q(&mut s.spd.jitter_sigma, "detector.jitter", &d.jitter, Time)?;
        set_q(
            &mut s.spd.gate_width,
            "detector.gate_width",
            &d.gate_width,
            Time,
        )?;
        set_q(
            &mut s.spd.gate_delay,
            "detector.gate_delay",
            &d.gate_delay,
            Time,
        )?;

        let m = &self.multiplex;
        set_q(
            &mut s.multiplex.port_delay,
            "multiplex.port_delay",
            &m.port_delay,
            Time,
        )?;
        set_q(
            &mut s.multiplex.coupler_loss_db,
            "multiplex.coupler_loss",
            &m.coupler_loss,
            Decibel,
        )?;

        let mut guard = 0.0;
        set_q(&mut guard, "filter.guard", &self.filter.guard, Time)?;
        s.guard = GuardBandPolicy::new(guard);

        s.attack = match &self.attack {
            None => None,
            Some(a) => Some(match a.kind.as_str() {
                "none" => None,
                "intercept-resend" => {
                    if a.tap_ratio.is_some() {
                        return Err(Error::config("attack.tap_ratio", "only for beam-splitter"));
                    }
                    Some(AttackConfig::InterceptResend(IrAttackConfig {
                        intercept_fraction: a.fraction.unwrap_or(1.0),
                        resend: match a.resend_mean_photon {
                            None => ResendPhotons::Single,
                            Some(mu) => ResendPhotons::Poisson(mu),
                        },
                    }))
                }
                "beam-splitter" => {
                    if a.fraction.is_some() || a.resend_mean_photon.is_some() {
                        return Err(Error::config(
                            "attack",
                            "beam-splitter takes only tap_ratio",
                        ));
                    }
                    let tap_ratio = a
                        .tap_ratio
                        .ok_or_else(|| Error::config("attack.tap_ratio", "required"))?;
                    Some(AttackConfig::BeamSplitter(BsAttackConfig { tap_ratio }))
                }
                other => {
                    return Err(Error::config(
                        "attack.kind",
                        format!("{other:?}: expected intercept-resend, beam-splitter or none"),
                    ))
                }
            }),
        }
        .flatten();

        set(
            &mut out.secure.shrinking_factor,
            self.analytics.shrinking_factor,
        );
        set(
            &mut out.secure.ec_inefficiency,
            self.analytics.ec_inefficiency,
        );
        if let Some(ns) = self.attack_report.n_bins {
            out.attack_report.n_bins = ns;
        }
        set(
            &mut out.attack_report.min_sifted_bits,
            self.attack_report.min_sifted_bits,
        );

        out.session.validate()?;
        out.secure.validate()?;
        Ok(out)
    }

    fn from_resolved(cfg: &RunConfig) -> Self {
        use Dimension::*;
        let s = &cfg.session;
        let q = |v: f64, d: Dimension| Some(format_quantity(v, d));
        RawConfig {
            seed: Some(s.seed),
            pulses: Some(s.n_pulses),
            source: RawSource {
                kind: Some(s.source.kind),
                mean_photon_number: Some(s.source.mean_photon_number),
                rep_rate: q(s.source.rep_rate, Frequency),
                n_bins: Some(s.source.n_bins),
                bin_width: q(s.source.bin_width, Time),
                extinction_ratio: Some(match s.source.extinction_ratio_db {
                    None => "none".into(),
                    Some(v) => format_quantity(v, Decibel),
                }),
                pm_rise_time: q(s.source.pm_rise_time, Time),
            },
            channel: RawChannel {
                length: q(s.channel.length_km, Length),
                attenuation: q(s.channel.attenuation_db_per_km, Attenuation),
                insertion_loss: q(s.channel.insertion_loss_db, Decibel),
            },
            dli: RawDli {
                visibility: Some(s.dli_visibility),
            },
            detector: RawDetector {
                efficiency: Some(s.spd.efficiency),
                dark_count_rate: q(s.spd.dark_count_rate, Frequency),
                afterpulse_prob: Some(s.spd.afterpulse_prob),
                hold_off: q(s.spd.hold_off, Time),
                jitter: q(s.spd.jitter_sigma, Time),
                gate_width: q(s.spd.gate_width, Time),
                gate_delay: q(s.spd.gate_delay, Time),
            },
            multiplex: RawMultiplex {
                port_delay: q(s.multiplex.port_delay, Time),
                coupler_loss: q(s.multiplex.coupler_loss_db, Decibel),
            },
            filter: RawFilter {
                guard: q(s.guard.guard_time, Time),
            },
            attack: s.attack.map(|a| match a {
                AttackConfig::InterceptResend(ir) => RawAttack {
                    kind: "intercept-resend".into(),
                    fraction: Some(ir.intercept_fraction),
                    resend_mean_photon: match ir.resend {
                        ResendPhotons::Single => None,
                        ResendPhotons::Poisson(mu) => Some(mu),
                    },
                    tap_ratio: None,
                },
                AttackConfig::BeamSplitter(bs) => RawAttack {
                    kind: "beam-splitter".into(),
                    tap_ratio: Some(bs.tap_ratio),
                    ..RawAttack::default()
                },
            }),
            analytics: RawAnalytics {
                shrinking_factor: Some(cfg.secure.shrinking_factor),
                ec_inefficiency: Some(cfg.secure.ec_inefficiency),
            },
            attack_report: RawAttackReport {
                n_bins: Some(cfg.attack_report.n_bins.clone()),
                min_sifted_bits: Some(cfg.attack_report.min_sifted_bits),
            },
            run: None,
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let field = e
            .span()
            .map(|r| {
                let before = &text[..r.start];
                let line = before.lines().count().max(1);
                format!("line {line}")
            })
            .unwrap_or_else(|| "config".into());
        Error::config(field, msg)
    })?;
    raw.resolve()
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Serialize `cfg` so that [`parse_config`] reads back the same values,
/// optionally with a `[run]` table describing how it was produced.
pub fn config_to_toml(cfg: &RunConfig, run: Option<toml::Table>) -> String {
    let mut raw = RawConfig::from_resolved(cfg);
    raw.run = run;
    toml::to_string(&raw).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.session, SessionConfig::default());
        assert_eq!(cfg.attack_report.n_bins, vec![2, 3, 4]);
    }

    #[test]
    fn units_are_parsed() {
        let cfg = parse_config(
            r#"
            seed = 7
            [source]
            rep_rate = "62.5 MHz"
            bin_width = "400 ps"
            n_bins = 4
            [channel]
            length = "105 km"
            [detector]
            hold_off = "10 us"
            [filter]
            guard = "100 ps"
            [attack]
            kind = "intercept-resend"
            fraction = 0.5
            "#,
        )
        .unwrap();
        let s = &cfg.session;
        assert_eq!(s.seed, 7);
        assert_eq!(s.source.bin_width, 400e-12);
        assert_eq!(s.channel.length_km, 105.0);
        assert_eq!(s.spd.hold_off, 10e-6);
        assert_eq!(s.guard.guard_time, 100e-12);
        assert!(matches!(
            s.attack,
            Some(AttackConfig::InterceptResend(IrAttackConfig {
                intercept_fraction: 0.5,
                ..
            }))
        ));
    }

    #[test]
    fn missing_or_wrong_unit_names_the_field() {
        for (text, field) in [
            ("[source]\nbin_width = \"1\"", "source.bin_width"),
            ("[channel]\nlength = \"30 ns\"", "channel.length"),
            ("[detector]\njitter = \"5 km\"", "detector.jitter"),
        ] {
            match parse_config(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_and_bare_numbers_rejected() {
        assert!(parse_config("[source]\ncolour = 3").is_err());
        assert!(parse_config("[source]\nbin_width = 1.0").is_err());
        assert!(parse_config("[attack]\nkind = \"photon-splitting\"").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(matches!(
            parse_config("[dli]\nvisibility = 1.5"),
            Err(Error::Config { .. })
        ));
        assert!(parse_config("[filter]\nguard = \"600 ps\"").is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.session.seed = 99;
        cfg.session.spd.jitter_sigma = 161.717_953_232_950_75e-12;
        cfg.session.attack = Some(AttackConfig::BeamSplitter(BsAttackConfig {
            tap_ratio: 0.25,
        }));
        let mut run = toml::Table::new();
        run.insert("subcommand".into(), "simulate".into());
        let text = config_to_toml(&cfg, Some(run));
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
