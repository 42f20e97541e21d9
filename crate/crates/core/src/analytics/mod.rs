//! Closed-form rate models, error budgets and parameter sweeps.

mod budget;
mod rate;
mod sweep;

pub use budget::{
    bench_budget, error_budget_total, predict_budget, BudgetCalibration, BudgetModel, ErrorBudget,
    ErrorSource,
};
pub use rate::{
    binary_entropy, fit_insertion_loss, m_state_sift_fraction, secure_rate, sift_fraction,
    sifted_rate, sifted_rate_nonparalysable, RateModelParams, SecureRateParams,
};
pub use sweep::{
    parse_range, sweep, write_sweep_csv, McColumns, SweepAxis, SweepOptions, SweepRow,
};
