//! Configuration, file formats and the experiment commands behind the `nsv`
//! binary.

mod commands;
pub mod config;
pub mod csv;
pub mod ini;
pub mod report;

pub use commands::{
    build_forcing, build_initial, checkpoint_name, cmd_chain, cmd_gevrey, cmd_scales, cmd_simulate,
    cmd_steady, list_checkpoints, read_run_info, resolve_constants, ChainSummary, GevreySummary,
    LazyTrajectory, RunInfo, SimulateSummary, CHECKPOINT_DIR, LEVEL2_DIR, OUTSIDE_HYPOTHESES,
};
pub use config::{
    load_config, parse_config, write_config, ConstantsSpec, ExperimentConfig, ForcingSpec,
    GevreySpec, InitialSpec, SteadySpec,
};
