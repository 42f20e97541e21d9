//! Throughput of a gated detector with hold-off, against the
//! non-paralysable formula.

use dpsqkd::analytics::{sifted_rate, sifted_rate_nonparalysable, RateModelParams};
use dpsqkd::protocol::{run_session, SessionConfig};

fn main() -> dpsqkd::Result<()> {
    println!("hold_off_us  mc_clicks_per_s  x/(1+x·τ)  x·exp(-x·τ)");
    for hold_off in [0.0, 1e-6, 5e-6, 10e-6] {
        let mut cfg = SessionConfig::ideal(3, 1e-9);
        cfg.source.mean_photon_number = 0.17;
        cfg.spd.efficiency = 0.1;
        cfg.spd.hold_off = hold_off;
        cfg.n_pulses = 2_000_000;
        let rec = run_session(&cfg)?;
        let mc = rec.timestamps.len() as f64 / cfg.duration();
        // every click, not only sifted ones
        let p = RateModelParams {
            rep_rate: cfg.source.rep_rate,
            mean_photon_number: 0.17,
            efficiency: 0.1,
            attenuation_db_per_km: 0.0,
            length_km: 0.0,
            insertion_loss_db: 0.0,
            hold_off,
        };
        println!(
            "{:>11}  {mc:>15.0}  {:>9.0}  {:>11.0}",
            hold_off * 1e6,
            sifted_rate_nonparalysable(&p),
            sifted_rate(&p)
        );
    }
    Ok(())
}
