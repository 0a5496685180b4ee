//! Configuration, data ingestion, result serialization and plots.

mod config;
mod output;
mod plot;
mod series;
mod task;

pub use series::{read_timeseries, read_timeseries_csv, InputColumn, InputSeries};
pub use task::SwitchingTask;
pub use config::{ModelConfig, NetworkSpec, DEFAULT_HDI_MASS};
pub use output::{
    format_f64, read_trajectory, read_trajectory_csv, write_comparison_json, write_inputs_csv, write_json,
    write_recovery_csv, write_samples_csv, write_trajectory_csv, TRAJECTORY_COLUMNS,
};
pub use plot::{plot_trajectory_svg, render_trajectory_svg};
