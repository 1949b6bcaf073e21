//! Scenario orchestration: configuration, presets, single runs, seed
//! ensembles, sweeps, the ablation suite, calibration and output.

pub mod calibrate;
pub mod config;
pub mod emit;
pub mod presets;
pub mod run;
pub mod study;

pub use calibrate::{calibrate_detectors, tune_noise, Calibration, TuningRow};
pub use config::{OutputConfig, ScenarioConfig, TrajectorySpec, SCHEMA_VERSION};
pub use emit::{emit, Format};
pub use presets::scenario;
pub use run::{run_ensemble, run_scenario, run_scenario_with, Detections, EpochRow, RunOptions, RunResult};
pub use study::{ablation_suite, sweep_parameters, AblationRow, SweepGrid, SweepRow};
