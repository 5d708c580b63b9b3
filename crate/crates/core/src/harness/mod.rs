//! Experiment orchestration: TOML configs in, self-describing CSV tables out.

mod config;
mod plot;
mod run;
mod table;

pub use config::{
    AdaptiveSection, ExperimentConfig, ExperimentKind, ExperimentSection, ModelSection, PRule,
    SignalRule, SignalSection,
};
pub use plot::{emit_plot_script, PlotKind};
pub use run::{mx_table, run_experiment, ExperimentOutcome, RISK_COLUMNS};
pub use table::ResultTable;
