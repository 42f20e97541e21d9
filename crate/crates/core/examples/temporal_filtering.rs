//! Guard-band trade-off: QBER and discarded key share against guard time,
//! Monte-Carlo beside the analytic model.

use dpsqkd::analytics::{bench_budget, BudgetCalibration, BudgetModel};
use dpsqkd::protocol::{run_session, sift_with, GuardBandPolicy, SessionConfig};

fn main() -> dpsqkd::Result<()> {
    let mut cfg = SessionConfig::default();
    cfg.channel.length_km = 10.0;
    cfg.spd.efficiency = 0.5;
    cfg.spd.hold_off = 50e-9;
    cfg.n_pulses = 10_000_000;
    let cfg = BudgetCalibration::new(bench_budget(1e-9)?).apply(&cfg)?;
    println!("jitter sigma {:.1} ps", cfg.spd.jitter_sigma * 1e12);

    let rec = run_session(&cfg)?;
    println!("guard_ps  mc_qber  model_qber  discarded");
    for g in (0..=400).step_by(50) {
        let guard = GuardBandPolicy::new(g as f64 * 1e-12);
        let key = sift_with(&rec, &guard);
        let model = BudgetModel::with_guard(&cfg, &guard)?.budget().combined();
        println!(
            "{g:>8}  {:.4}   {model:.4}      {:.1}%",
            key.qber()?,
            100.0 * key.log.guard_fraction()
        );
    }
    Ok(())
}
