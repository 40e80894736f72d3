//! Experiment orchestration: strategies, replications, sweeps and reports.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{ExperimentConfig, KMode, Strategy};
pub use experiment::{
    build_proposal, emit_spectrum_plot_data, run_dimension_sweep, run_experiment, Cell, CellResult,
    DimensionSummary, Estimate, ExperimentReport, Provenance, SpectrumData, SweepPoint, Truth,
};
pub use report::{parse_csv, render_csv, render_markdown, render_report, CsvRow, Format, CSV_HEADER};
