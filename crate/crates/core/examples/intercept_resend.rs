//! Intercept-resend error rate for growing N, plus a partial attack.

use dpsqkd::attacks::{ir_qber_exact, AttackConfig, IrAttackConfig, ResendPhotons};
use dpsqkd::protocol::{run_session, sift, SessionConfig};

fn main() -> dpsqkd::Result<()> {
    println!("N  exact   mc");
    for n in [2, 3, 4, 6, 8] {
        let mut cfg = SessionConfig::ideal(n, 1e-9);
        cfg.source.mean_photon_number = 0.5;
        cfg.n_pulses = 300_000;
        cfg.attack = Some(AttackConfig::InterceptResend(IrAttackConfig::full()));
        let key = sift(&run_session(&cfg)?);
        println!("{n}  {:.4}  {:.4}", ir_qber_exact(n)?, key.qber()?);
    }

    let mut cfg = SessionConfig::ideal(3, 1e-9);
    cfg.n_pulses = 300_000;
    cfg.attack = Some(AttackConfig::InterceptResend(IrAttackConfig {
        intercept_fraction: 0.3,
        resend: ResendPhotons::Single,
    }));
    println!(
        "N=3, 30% intercepted: {:.4}",
        sift(&run_session(&cfg)?).qber()?
    );
    Ok(())
}
