//! Configuration ingestion, cross-type ratio sweeps and result files.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::RunConfig;
pub use output::{emit_results, emit_trace, read_json_lines, write_records, Format};
pub use sweep::{
    check_record, default_grid, run_sweep, swap_communities, symmetric_configuration, SweepRecord, SweepSpec,
    Variant,
};
