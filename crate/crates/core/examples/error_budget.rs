//! Measured error budgets, the model's prediction for a calibrated
//! set-up, and a session with all mechanisms switched on.

use dpsqkd::analytics::{bench_budget, predict_budget, BudgetCalibration, ErrorSource};
use dpsqkd::protocol::{run_session, sift, SessionConfig};

fn main() -> dpsqkd::Result<()> {
    for bw in [1e-9, 0.4e-9] {
        let measured = bench_budget(bw)?;
        let mut cfg = SessionConfig::default();
        cfg.source.bin_width = bw;
        cfg.channel.length_km = 10.0;
        cfg.spd.efficiency = 0.5;
        cfg.spd.hold_off = 50e-9;
        cfg.n_pulses = 5_000_000;
        let cfg = BudgetCalibration::new(measured.clone()).apply(&cfg)?;
        let predicted = predict_budget(&cfg)?;

        println!("bin width {:.1} ns", bw * 1e9);
        for src in ErrorSource::ALL {
            println!(
                "  {:<22} {:.4}  {:.4}",
                src.label(),
                measured.get(src).unwrap_or(0.0),
                predicted.get(src).unwrap_or(0.0)
            );
        }
        println!(
            "  sum {:.4}, combined {:.4}",
            measured.total(),
            predicted.combined()
        );
        println!("  monte-carlo {:.4}", sift(&run_session(&cfg)?).qber()?);
    }
    Ok(())
}
