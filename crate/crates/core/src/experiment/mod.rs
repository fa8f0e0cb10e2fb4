//! Declarative experiments: TOML configs, figure presets and the sweep runner.

mod config;
mod presets;
mod runner;

pub use config::{
    ExperimentConfig, ObservableSelection, QfiOptions, SweepAxis, SweepParameter, SweepPoint,
    DEFAULT_OUTPUT_ROOT, OUTPUT_ROOT_ENV,
};
pub use presets::{
    describe, preset, preset_names, DELTA_SWEEP, PRESET_SITES, PRESET_TILT, U_SWEEP,
};
pub use runner::{
    parameter_header, point_dir, run, sha256_hex, Diagnostics, FileRecord, PointRecord, QfiSummary,
    RunManifest, DENSITY_SUM_TOLERANCE, GAMMA_SUM_TOLERANCE, GAMMA_SYMMETRY_TOLERANCE,
    MANIFEST_FILE, QFI_FLOOR, SINGLE_DENSITY_FLOOR, UNITARITY_TOLERANCE,
};
