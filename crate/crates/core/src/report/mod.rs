//! Orchestration behind the `atlas` command line: run configuration, the
//! fetch plan, and the commands that turn a snapshot into CSV/JSON/SVG files.

mod commands;
mod config;
mod fetch;
pub mod svg;

pub use commands::{
    cmd_distance, cmd_geometry, cmd_kfr, cmd_simulate, observed_pair_series, open_snapshot, scenario_set, Outputs,
};
pub use config::{Aggregate, ClientConfig, DistanceConfig, GeometryConfig, KfrConfig, RunConfig, ScenarioConfig};
pub use fetch::{client_for, cmd_fetch, collect, plan, CountRequest, FetchPlan};
