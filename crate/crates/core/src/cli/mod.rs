//! Command-line front end. The `dpsqkd` binary only calls [`run`].

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{config_to_toml, load_config, parse_config, AttackReportConfig, RunConfig};

use crate::analytics::{
    bench_budget, parse_range, predict_budget, secure_rate, sweep, write_sweep_csv, ErrorSource,
    SweepAxis, SweepOptions,
};
use crate::attacks::{ir_qber_exact, AttackConfig, IrAttackConfig};
use crate::error::{Error, Result};
use crate::protocol::{count_matrix, export_rows, run_session, sift, write_records, SessionConfig};
use crate::rng::RngStreams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dpsqkd", version, about = "M-state DPS-QKD simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files and the run manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the number of pulses per Monte-Carlo run.
    #[arg(long)]
    pulses: Option<u64>,
    /// Add Monte-Carlo results.
    #[arg(long, conflicts_with = "analytic")]
    mc: bool,
    /// Closed-form results only (the default for sweep and budget).
    #[arg(long)]
    analytic: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one session and write the click record, summary and manifest.
    Simulate(Common),
    /// Sweep one parameter and print a CSV table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// distance, guard, n_bins or mu
        #[arg(long)]
        axis: String,
        /// start:stop[:step], e.g. 0:105:5 or 0:400ps:50ps
        #[arg(long)]
        range: String,
    },
    /// Intercept-resend error rate per number of bins, exact and simulated.
    AttackReport {
        #[command(flatten)]
        common: Common,
        /// Comma-separated list; overrides the configuration.
        #[arg(long, value_delimiter = ',')]
        n_bins: Vec<usize>,
    },
    /// Print the error budget.
    Budget(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sweep { .. } => "sweep",
            Command::AttackReport { .. } => "attack-report",
            Command::Budget(_) => "budget",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c) | Command::Budget(c) => c,
            Command::Sweep { common, .. } | Command::AttackReport { common, .. } => common,
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Parse { .. } => EXIT_CONFIG,
        Error::EmptyResult(_) | Error::UndefinedStatistic(_) => EXIT_EMPTY,
        _ => EXIT_FAILURE,
    }
}

/// Parse `args` (including the program name), run the subcommand and
/// return the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_CONFIG
                }
            };
        }
    };
    match dispatch(&cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.session.seed = seed;
    }
    if let Some(n) = common.pulses {
        if n == 0 {
            return Err(Error::config("--pulses", "must be >= 1"));
        }
        cfg.session.n_pulses = n;
    }
    Ok(cfg)
}

fn write_manifest(dir: &Path, cmd: &Command, cfg: &RunConfig) -> Result<()> {
    let common = cmd.common();
    let mut run = toml::Table::new();
    run.insert("subcommand".into(), cmd.name().into());
    if let Some(p) = &common.config {
        run.insert("config".into(), p.display().to_string().into());
    }
    run.insert("seed".into(), (cfg.session.seed as i64).into());
    run.insert("out".into(), dir.display().to_string().into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    match cmd {
        Command::Sweep { axis, range, .. } => {
            run.insert("axis".into(), axis.clone().into());
            run.insert("range".into(), range.clone().into());
            run.insert("mc".into(), common.mc.into());
        }
        Command::Budget(_) => {
            run.insert("mc".into(), common.mc.into());
        }
        _ => {}
    }
    fs::write(dir.join("manifest.toml"), config_to_toml(cfg, Some(run)))?;
    Ok(())
}

fn dispatch(cmd: &Command, stdout: &mut dyn Write) -> Result<()> {
    let common = cmd.common();
    let cfg = resolve(common)?;
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir)?;
    }
    let text = match cmd {
        Command::Simulate(_) => simulate(&cfg, common.out.as_deref())?,
        Command::Sweep { axis, range, .. } => {
            let axis: SweepAxis = axis.parse()?;
            let values = parse_range(axis, range)?;
            let opts = SweepOptions {
                mc_pulses: common.mc.then_some(cfg.session.n_pulses),
                secure: cfg.secure,
            };
            let rows = sweep(axis, &values, &cfg.session, &opts)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            let text = String::from_utf8(buf).expect("ascii");
            if let Some(dir) = &common.out {
                fs::write(dir.join("sweep.csv"), &text)?;
            }
            text
        }
        Command::AttackReport { n_bins, .. } => {
            let mut cfg = cfg.clone();
            if !n_bins.is_empty() {
                cfg.attack_report.n_bins = n_bins.clone();
            }
            let text = attack_report(&cfg)?;
            if let Some(dir) = &common.out {
                fs::write(dir.join("attack_report.csv"), &text)?;
            }
            text
        }
        Command::Budget(_) => {
            let text = budget(&cfg, common.mc)?;
            if let Some(dir) = &common.out {
                fs::write(dir.join("budget.csv"), &text)?;
            }
            text
        }
    };
    stdout.write_all(text.as_bytes())?;
    if let Some(dir) = &common.out {
        write_manifest(dir, cmd, &cfg)?;
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<String> {
    let rec = run_session(&cfg.session)?;
    let key = sift(&rec);
    if let Some(dir) = out {
        let rows = export_rows(&rec, &cfg.session.guard);
        let file = fs::File::create(dir.join("record.csv"))?;
        write_records(&rows, std::io::BufWriter::new(file))?;
    }
    if key.is_empty() {
        return Err(Error::EmptyResult(format!(
            "no sifted bits from {} pulses ({} clicks); increase pulses or reduce loss",
            cfg.session.n_pulses, key.log.clicks
        )));
    }
    let duration = cfg.session.duration();
    let qber = key.qber()?;
    let eq4 = count_matrix(&rec, &cfg.session.guard)?;
    let rate = key.len() as f64 / duration;
    let predicted = predict_budget(&cfg.session)?;
    let log = key.log;
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    line("pulses", cfg.session.n_pulses.to_string());
    line("duration_s", duration.to_string());
    line("clicks", log.clicks.to_string());
    line("sifted_bits", key.len().to_string());
    line("errors", key.errors().to_string());
    line("sifted_rate_bps", rate.to_string());
    line("qber", qber.to_string());
    line("qber_counts", eq4.qber()?.to_string());
    line("predicted_qber", predicted.combined().to_string());
    line(
        "secure_rate_bps",
        secure_rate(rate, qber, &cfg.secure).to_string(),
    );
    line("edge_discards", log.edge.to_string());
    line("guard_discards", log.guard.to_string());
    line("unassigned", log.unassigned.to_string());
    line("repeated_pulse_bits", log.repeated_pulse_bits.to_string());
    line("discard_fraction", log.guard_fraction().to_string());
    if let Some(dir) = out {
        fs::write(dir.join("summary.txt"), &s)?;
    }
    Ok(s)
}

/// Ideal link (lossless, perfect devices, no dead time) with a full or
/// configured intercept-resend attack.
pub fn attack_session(base: &SessionConfig, n_bins: usize) -> SessionConfig {
    let ir = match base.attack {
        Some(AttackConfig::InterceptResend(ir)) => ir,
        _ => IrAttackConfig::full(),
    };
    let mut cfg = SessionConfig::ideal(n_bins, base.source.bin_width);
    cfg.source.mean_photon_number = base.source.mean_photon_number;
    cfg.seed = base.seed;
    cfg.attack = Some(AttackConfig::InterceptResend(ir));
    cfg
}

/// Rows of `(N, exact, mc, standard error, sifted bits)`.
pub fn attack_report_rows(cfg: &RunConfig) -> Result<Vec<(usize, f64, f64, f64, u64)>> {
    let rep = &cfg.attack_report;
    if rep.n_bins.is_empty() {
        return Err(Error::config(
            "attack_report.n_bins",
            "empty list of bin counts",
        ));
    }
    let seeds = RngStreams::new(cfg.session.seed);
    let mut rows = Vec::new();
    for (i, &n) in rep.n_bins.iter().enumerate() {
        let exact =
            ir_qber_exact(n).map_err(|e| Error::config("attack_report.n_bins", e.to_string()))?;
        let mut session = attack_session(&cfg.session, n);
        let per_pulse =
            -(-session.source.mean_photon_number).exp_m1() * (n as f64 - 1.0) / n as f64;
        let want = rep.min_sifted_bits.max(1);
        session.n_pulses = ((want as f64 / per_pulse) * 1.05).ceil() as u64 + 100;
        let stream = seeds.indexed(i as u64);
        let (mut bits, mut errors) = (0u64, 0u64);
        let mut chunk = 0u64;
        while bits < want {
            session.seed = stream.indexed(chunk).seed();
            let key = sift(&run_session(&session)?);
            bits += key.len() as u64;
            errors += key.errors() as u64;
            chunk += 1;
        }
        let q = errors as f64 / bits as f64;
        let se = (q * (1.0 - q) / bits as f64).sqrt();
        rows.push((n, exact, q, se, bits));
    }
    Ok(rows)
}

fn attack_report(cfg: &RunConfig) -> Result<String> {
    let mut s = String::from("n_bins,exact_qber,mc_qber,mc_std_error,sifted_bits\n");
    for (n, exact, q, se, bits) in attack_report_rows(cfg)? {
        s.push_str(&format!("{n},{exact},{q},{se},{bits}\n"));
    }
    Ok(s)
}

fn budget(cfg: &RunConfig, mc: bool) -> Result<String> {
    let one = bench_budget(1e-9)?;
    let fast = bench_budget(0.4e-9)?;
    let predicted = predict_budget(&cfg.session)?;
    let mut s = String::from("source,measured_1ns,measured_0.4ns,predicted\n");
    for src in ErrorSource::ALL {
        s.push_str(&format!(
            "{},{},{},{}\n",
            src.label(),
            one.get(src).unwrap_or(0.0),
            fast.get(src).unwrap_or(0.0),
            predicted.get(src).unwrap_or(0.0)
        ));
    }
    s.push_str(&format!(
        "total,{},{},{}\n",
        round(one.total()),
        round(fast.total()),
        predicted.total()
    ));
    s.push_str(&format!(
        "combined,{},{},{}\n",
        one.combined(),
        fast.combined(),
        predicted.combined()
    ));
    if mc {
        let key = sift(&run_session(&cfg.session)?);
        s.push_str(&format!("monte_carlo,,,{}\n", key.qber()?));
    }
    Ok(s)
}

/// Drop floating-point noise from sums of short decimals.
fn round(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}
