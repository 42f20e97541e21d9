//! One-dimensional parameter sweeps.
//!
//! CSV columns, in order: `x,sift_fraction,sifted_rate_bps,qber,secure_rate_bps`,
//! followed by `mc_sifted_rate_bps,mc_qber,mc_secure_rate_bps,discard_fraction,mc_sifted_bits`
//! when Monte-Carlo runs were requested. `x` is in km, s, bins or photons per
//! pulse depending on the axis.

use std::io::Write;
use std::str::FromStr;

use super::budget::BudgetModel;
use super::rate::{secure_rate, sift_fraction, sifted_rate, RateModelParams, SecureRateParams};
use crate::error::{Error, Result};
use crate::protocol::{run_session, sift_with, GuardBandPolicy, SessionConfig};
use crate::rng::RngStreams;
use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Distance,
    GuardTime,
    NBins,
    MeanPhotonNumber,
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(Self::Distance),
            "guard" | "guard_time" => Ok(Self::GuardTime),
            "n_bins" => Ok(Self::NBins),
            "mu" | "mean_photon_number" => Ok(Self::MeanPhotonNumber),
            _ => Err(Error::config(
                "axis",
                format!("unknown axis {s:?} (distance, guard, n_bins, mu)"),
            )),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Distance => "distance",
            Self::GuardTime => "guard_time",
            Self::NBins => "n_bins",
            Self::MeanPhotonNumber => "mu",
        }
    }

    fn parse_value(self, text: &str) -> Result<f64> {
        let text = text.trim();
        let bare = text.parse::<f64>().ok();
        match self {
            Self::Distance => match bare {
                Some(v) => Ok(v),
                None => parse_quantity("range", text, Dimension::Length),
            },
            Self::GuardTime => match bare {
                Some(v) => Ok(v * 1e-12),
                None => parse_quantity("range", text, Dimension::Time),
            },
            Self::NBins | Self::MeanPhotonNumber => {
                bare.ok_or_else(|| Error::config("range", format!("{text:?} is not a number")))
            }
        }
    }

    fn apply(self, cfg: &mut SessionConfig, x: f64) {
        match self {
            Self::Distance => cfg.channel.length_km = x,
            Self::GuardTime => cfg.guard = GuardBandPolicy::new(x),
            Self::NBins => cfg.source.n_bins = x.round() as usize,
            Self::MeanPhotonNumber => cfg.source.mean_photon_number = x,
        }
    }
}

/// Parse `start:stop[:step]`, inclusive of `stop`. Bare distances are km and
/// bare guard times are ps; `n_bins` steps by one when no step is given.
pub fn parse_range(axis: SweepAxis, text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let (start, stop, step) = match parts.as_slice() {
        [a, b] => {
            let step = match axis {
                SweepAxis::NBins => 1.0,
                _ => {
                    return Err(Error::config(
                        "range",
                        format!("{} ranges need a step: start:stop:step", axis.name()),
                    ))
                }
            };
            (axis.parse_value(a)?, axis.parse_value(b)?, step)
        }
        [a, b, c] => (
            axis.parse_value(a)?,
            axis.parse_value(b)?,
            axis.parse_value(c)?,
        ),
        _ => {
            return Err(Error::config(
                "range",
                format!("expected start:stop[:step], got {text:?}"),
            ))
        }
    };
    if !(step > 0.0) {
        return Err(Error::config("range", "step must be > 0"));
    }
    if stop < start {
        return Err(Error::config("range", "empty range: stop < start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as u64 + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    /// Run a Monte-Carlo session of this many pulses per point.
    pub mc_pulses: Option<u64>,
    pub secure: SecureRateParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McColumns {
    pub sifted_rate_bps: f64,
    /// NaN when no bits were sifted.
    pub qber: f64,
    pub secure_rate_bps: f64,
    pub discard_fraction: f64,
    pub sifted_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub sift_fraction: f64,
    pub sifted_rate_bps: f64,
    pub qber: f64,
    pub secure_rate_bps: f64,
    pub mc: Option<McColumns>,
}

fn analytic_row(cfg: &SessionConfig, x: f64, sp: &SecureRateParams) -> Result<SweepRow> {
    let model = BudgetModel::new(cfg)?;
    let rate = sifted_rate(&RateModelParams::from_session(cfg)?) * model.guard_keep_fraction();
    let qber = model.budget().combined();
    Ok(SweepRow {
        x,
        sift_fraction: sift_fraction(cfg.source.kind, cfg.source.n_bins),
        sifted_rate_bps: rate,
        qber,
        secure_rate_bps: secure_rate(rate, qber, sp),
        mc: None,
    })
}

fn mc_columns(
    record: &crate::protocol::SessionRecord,
    guard: &GuardBandPolicy,
    sp: &SecureRateParams,
) -> McColumns {
    let key = sift_with(record, guard);
    let rate = key.len() as f64 / record.config.duration();
    let qber = key.qber().unwrap_or(f64::NAN);
    McColumns {
        sifted_rate_bps: rate,
        qber,
        secure_rate_bps: secure_rate(rate, qber, sp),
        discard_fraction: key.log.guard_fraction(),
        sifted_bits: key.len() as u64,
    }
}

/// Evaluate `values` along `axis` starting from `base`.
///
/// Monte-Carlo points use independent seeds derived from `base.seed`,
/// except on the guard axis where one session is re-sifted at every guard.
pub fn sweep(
    axis: SweepAxis,
    values: &[f64],
    base: &SessionConfig,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("range", "empty range"));
    }
    opts.secure.validate()?;
    let seeds = RngStreams::new(base.seed);
    let shared = match (axis, opts.mc_pulses) {
        (SweepAxis::GuardTime, Some(n)) => {
            let mut cfg = base.clone();
            cfg.n_pulses = n;
            cfg.guard = GuardBandPolicy::none();
            cfg.seed = seeds.indexed(0).seed();
            Some(run_session(&cfg)?)
        }
        _ => None,
    };
    let mut rows = Vec::with_capacity(values.len());
    for (i, &x) in values.iter().enumerate() {
        let mut cfg = base.clone();
        axis.apply(&mut cfg, x);
        cfg.validate()?;
        let mut row = analytic_row(&cfg, x, &opts.secure)?;
        if let Some(n) = opts.mc_pulses {
            row.mc = Some(match &shared {
                Some(rec) => mc_columns(rec, &cfg.guard, &opts.secure),
                None => {
                    cfg.n_pulses = n;
                    cfg.seed = seeds.indexed(i as u64).seed();
                    let rec = run_session(&cfg)?;
                    mc_columns(&rec, &cfg.guard, &opts.secure)
                }
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    let with_mc = rows.iter().any(|r| r.mc.is_some());
    write!(out, "x,sift_fraction,sifted_rate_bps,qber,secure_rate_bps")?;
    if with_mc {
        write!(
            out,
            ",mc_sifted_rate_bps,mc_qber,mc_secure_rate_bps,discard_fraction,mc_sifted_bits"
        )?;
    }
    writeln!(out)?;
    for r in rows {
        write!(
            out,
            "{},{},{},{},{}",
            r.x, r.sift_fraction, r.sifted_rate_bps, r.qber, r.secure_rate_bps
        )?;
        if let Some(m) = &r.mc {
            write!(
                out,
                ",{},{},{},{},{}",
                m.sifted_rate_bps, m.qber, m.secure_rate_bps, m.discard_fraction, m.sifted_bits
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid() {
        assert_eq!(
            parse_range(SweepAxis::Distance, "0:105:5").unwrap().len(),
            22
        );
        let g = parse_range(SweepAxis::GuardTime, "0:400ps:50ps").unwrap();
        assert_eq!(g.len(), 9);
        assert!((g[4] - 200e-12).abs() < 1e-24);
        assert_eq!(
            parse_range(SweepAxis::GuardTime, "0:400:100").unwrap()[1],
            100e-12
        );
        assert_eq!(
            parse_range(SweepAxis::NBins, "2:8").unwrap(),
            vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
        );
        assert_eq!(
            parse_range(SweepAxis::Distance, "10km:10km:1km").unwrap(),
            vec![10.0]
        );
        assert!(parse_range(SweepAxis::Distance, "10:0:1").is_err());
        assert!(parse_range(SweepAxis::Distance, "0:10").is_err());
        assert!(parse_range(SweepAxis::Distance, "0:10:0").is_err());
        assert!(parse_range(SweepAxis::Distance, "0:10ns:1").is_err());
    }

    #[test]
    fn distance_sweep_decreases() {
        let xs = parse_range(SweepAxis::Distance, "0:105:5").unwrap();
        // keep 0 km below the dead-time peak of the rate formula
        let mut base = SessionConfig::default();
        base.channel.insertion_loss_db = 6.0;
        let rows = sweep(SweepAxis::Distance, &xs, &base, &SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 22);
        for w in rows.windows(2) {
            assert!(w[1].sifted_rate_bps < w[0].sifted_rate_bps);
        }
    }

    #[test]
    fn n_bins_sweep_sift_fraction() {
        let xs = parse_range(SweepAxis::NBins, "2:8").unwrap();
        let mut base = SessionConfig::default();
        base.source.rep_rate = 40e6;
        let rows = sweep(SweepAxis::NBins, &xs, &base, &SweepOptions::default()).unwrap();
        for r in rows {
            let n = r.x;
            assert!((r.sift_fraction - (n - 1.0) / n).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_header() {
        let rows = vec![SweepRow {
            x: 1.0,
            sift_fraction: 0.5,
            sifted_rate_bps: 2.0,
            qber: 0.1,
            secure_rate_bps: 0.3,
            mc: None,
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "x,sift_fraction,sifted_rate_bps,qber,secure_rate_bps\n1,0.5,2,0.1,0.3\n"
        );
    }
}
