//! One session on the default 30 km test-bed: rate, QBER both ways,
//! and where the clicks went.

use dpsqkd::analytics::predict_budget;
use dpsqkd::protocol::{count_matrix, run_session, sift, SessionConfig};

fn main() -> dpsqkd::Result<()> {
    let cfg = SessionConfig {
        n_pulses: 20_000_000,
        seed: 3,
        ..SessionConfig::default()
    };
    let rec = run_session(&cfg)?;
    let key = sift(&rec);
    let counts = count_matrix(&rec, &cfg.guard)?;
    println!(
        "sifted rate     {:.0} bit/s",
        key.len() as f64 / cfg.duration()
    );
    println!("QBER (bitwise)  {:.4}", key.qber()?);
    println!("QBER (counts)   {:.4}  {counts:?}", counts.qber()?);
    println!("predicted       {:.4}", predict_budget(&cfg)?.combined());
    println!("{:?}", key.log);
    Ok(())
}
