//! Session orchestration, sifting, QBER and guard-band filtering.

mod counts;
mod export;
mod filter;
mod session;
mod sift;

pub use counts::{classify_counts, count_matrix, qber, CountMatrix, KeyWindows};
pub use export::{
    export_rows, parse_records, write_records, ExportRow, Outcome, HEADER as EXPORT_HEADER,
};
pub use filter::{temporal_filter, GuardBandPolicy};
pub use session::{run_session, SessionConfig, SessionRecord};
pub use sift::{classify_event, sift, sift_with, DiscardLog, EventClass, SiftedBit, SiftedKey};
