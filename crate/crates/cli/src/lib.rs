//! Experiment runner for `growthlab`: parses command lines into
//! [`ExperimentSpec`]s, runs them on a fixed-size worker pool and renders
//! CSV or JSON artifacts that embed the tool version and canonical spec.

mod error;
mod run;
mod spec;

pub use error::{CliError, EXIT_BUDGET, EXIT_FAILURE, EXIT_PARSE, EXIT_VIOLATION};
pub use run::{
    exact_growth, parse_growth_csv, parse_metric_csv, read_metric_csv, run, run_here,
    write_artifacts, Artifact, RunOutput, VERSION,
};
pub use spec::{
    parse_args, parse_spec, AcylArgs, AmbiguityArgs, Command, DeltaArgs, DeltaModeArg,
    DistortionArgs, ExperimentSpec, Format, GrowthArgs, Method, RateArgs, RelgrowthArgs, RunArgs,
};
