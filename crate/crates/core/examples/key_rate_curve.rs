//! Sifted and secure key rate against distance, analytic with a few
//! Monte-Carlo points.

use dpsqkd::analytics::{parse_range, sweep, write_sweep_csv, SweepAxis, SweepOptions};
use dpsqkd::protocol::SessionConfig;

fn main() -> dpsqkd::Result<()> {
    let base = SessionConfig::default();
    let opts = SweepOptions::default();
    let rows = sweep(
        SweepAxis::Distance,
        &parse_range(SweepAxis::Distance, "0:105:15")?,
        &base,
        &opts,
    )?;
    write_sweep_csv(&rows, std::io::stdout())?;

    let mc = SweepOptions {
        mc_pulses: Some(5_000_000),
        ..opts
    };
    println!();
    let rows = sweep(SweepAxis::Distance, &[10.0, 30.0, 50.0], &base, &mc)?;
    write_sweep_csv(&rows, std::io::stdout())?;
    Ok(())
}
