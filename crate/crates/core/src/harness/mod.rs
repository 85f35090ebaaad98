//! Experiment engine: configured sweeps, CSV tables, statistics and plots.

mod config;
mod plot;
mod stats;
mod sweep;
mod table;

pub use config::{log_grid, Level, Setting, SweepConfig};
pub use plot::{plot_spec, render_svg, PlotSpec, Series};
pub use stats::{
    best_lambda, iter_summaries, lambda_summaries, log_stats, quantile_sorted, summarize, summary_csv, BestBy,
    IterSummary, LambdaSummary, LogStats, StatSummary,
};
pub use sweep::{derive_seed, iteration_lambdas, sweep_iterations, sweep_lambda, trial_instance, THREADS_ENV};
pub use table::{read_rows, rows_to_csv, write_rows, IterRow, LambdaRow, Table, ITER_HEADER, LAMBDA_HEADER};
