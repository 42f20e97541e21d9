//! Line-oriented click export:
//! `pulse_index,time_ns,bin,port,alice_bit,bob_bit,flags`.
//!
//! Absent fields are written as `-`. `flags` is two letters: the sifting
//! outcome (`S`ifted, `E`dge, `G`uard, `U`nassigned) and the click origin
//! (`p`hoton, `d`ark, `a`fterpulse).

use std::fmt::Display;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::filter::GuardBandPolicy;
use super::session::SessionRecord;
use super::sift::{classify_event, EventClass};
use crate::devices::ClickKind;
use crate::error::{Error, Result};

pub const HEADER: &str = "pulse_index,time_ns,bin,port,alice_bit,bob_bit,flags";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Sifted,
    Edge,
    Guard,
    Unassigned,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExportRow {
    pub pulse_index: Option<u64>,
    pub time_ns: f64,
    pub bin: Option<usize>,
    pub port: Option<u8>,
    pub alice_bit: Option<u8>,
    pub bob_bit: Option<u8>,
    pub outcome: Outcome,
    pub origin: ClickKind,
}

impl ExportRow {
    fn flags(&self) -> String {
        let a = match self.outcome {
            Outcome::Sifted => 'S',
            Outcome::Edge => 'E',
            Outcome::Guard => 'G',
            Outcome::Unassigned => 'U',
        };
        let b = match self.origin {
            ClickKind::Photon => 'p',
            ClickKind::Dark => 'd',
            ClickKind::Afterpulse => 'a',
        };
        format!("{a}{b}")
    }
}

/// One row per click of `record`, classified with `guard`.
pub fn export_rows(record: &SessionRecord, guard: &GuardBandPolicy) -> Vec<ExportRow> {
    let timing = record.timing();
    record
        .timestamps
        .iter()
        .map(|ts| {
            let mut row = ExportRow {
                pulse_index: None,
                time_ns: ts.time * 1e9,
                bin: None,
                port: None,
                alice_bit: None,
                bob_bit: None,
                outcome: Outcome::Unassigned,
                origin: ts.kind,
            };
            match classify_event(ts, &timing, guard, record.n_pulses()) {
                EventClass::Sifted {
                    pulse,
                    index,
                    bin,
                    port,
                } => {
                    row.pulse_index = Some(pulse);
                    row.bin = Some(bin);
                    row.port = Some(port);
                    row.alice_bit = Some(record.alice_bit(pulse, index));
                    row.bob_bit = Some(port);
                    row.outcome = Outcome::Sifted;
                }
                EventClass::Edge { pulse, bin, port } => {
                    row.pulse_index = Some(pulse);
                    row.bin = Some(bin);
                    row.port = Some(port);
                    row.outcome = Outcome::Edge;
                }
                EventClass::Guard { pulse, bin, port } => {
                    row.pulse_index = Some(pulse);
                    row.bin = Some(bin);
                    row.port = Some(port);
                    row.outcome = Outcome::Guard;
                }
                EventClass::Unassigned => {}
            }
            row
        })
        .collect()
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

pub fn write_records<W: Write>(rows: &[ExportRow], mut out: W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            opt(r.pulse_index),
            r.time_ns,
            opt(r.bin),
            opt(r.port),
            opt(r.alice_bit),
            opt(r.bob_bit),
            r.flags()
        )?;
    }
    Ok(())
}

fn field<T: FromStr>(line: usize, name: &str, s: &str) -> Result<Option<T>> {
    if s == "-" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse {
        line,
        message: format!("bad {name}: {s:?}"),
    })
}

pub fn parse_records<R: BufRead>(input: R) -> Result<Vec<ExportRow>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h == HEADER => {}
        Some(Err(e)) => return Err(e.into()),
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {HEADER:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let no = i + 2;
        let bad = |message: String| Error::Parse { line: no, message };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(bad(format!("expected 7 fields, got {}", cols.len())));
        }
        let time_ns = field::<f64>(no, "time_ns", cols[1])?
            .ok_or_else(|| bad("time_ns is required".into()))?;
        let flags: Vec<char> = cols[6].chars().collect();
        let (outcome, origin) = match flags.as_slice() {
            [a, b] => {
                let outcome = match a {
                    'S' => Outcome::Sifted,
                    'E' => Outcome::Edge,
                    'G' => Outcome::Guard,
                    'U' => Outcome::Unassigned,
                    _ => return Err(bad(format!("bad flags {:?}", cols[6]))),
                };
                let origin = match b {
                    'p' => ClickKind::Photon,
                    'd' => ClickKind::Dark,
                    'a' => ClickKind::Afterpulse,
                    _ => return Err(bad(format!("bad flags {:?}", cols[6]))),
                };
                (outcome, origin)
            }
            _ => return Err(bad(format!("bad flags {:?}", cols[6]))),
        };
        rows.push(ExportRow {
            pulse_index: field(no, "pulse_index", cols[0])?,
            time_ns,
            bin: field(no, "bin", cols[2])?,
            port: field(no, "port", cols[3])?,
            alice_bit: field(no, "alice_bit", cols[4])?,
            bob_bit: field(no, "bob_bit", cols[5])?,
            outcome,
            origin,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row_strategy() -> impl Strategy<Value = ExportRow> {
        (
            proptest::option::of(any::<u64>()),
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
            proptest::option::of(1usize..65),
            proptest::option::of(0u8..2),
            proptest::option::of(0u8..2),
            proptest::option::of(0u8..2),
            0usize..4,
            0usize..3,
        )
            .prop_map(|(p, t, b, port, a, bb, o, k)| ExportRow {
                pulse_index: p,
                time_ns: t,
                bin: b,
                port,
                alice_bit: a,
                bob_bit: bb,
                outcome: [
                    Outcome::Sifted,
                    Outcome::Edge,
                    Outcome::Guard,
                    Outcome::Unassigned,
                ][o],
                origin: [ClickKind::Photon, ClickKind::Dark, ClickKind::Afterpulse][k],
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(rows in proptest::collection::vec(row_strategy(), 0..50)) {
            let mut buf = Vec::new();
            write_records(&rows, &mut buf).unwrap();
            let back = parse_records(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in rows.iter().zip(&back) {
                prop_assert_eq!(a.time_ns.to_bits(), b.time_ns.to_bits());
                prop_assert_eq!(a, b);
            }
            let mut again = Vec::new();
            write_records(&back, &mut again).unwrap();
            prop_assert_eq!(buf, again);
        }
    }

    #[test]
    fn malformed_lines_report_position() {
        let text = format!("{HEADER}\n1,2.5,2,0,0,0,Sp\n1,2.5,2,0,0,Sp\n");
        match parse_records(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_records("nope\n".as_bytes()).is_err());
        let text = format!("{HEADER}\n1,2.5,2,0,0,0,Xp\n");
        assert!(parse_records(text.as_bytes()).is_err());
    }
}
