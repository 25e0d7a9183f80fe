//! Run configuration, seeding, the training loop and learning-curve files.

mod config;
mod curve;
mod gradcheck;
mod rng;
mod train;

pub use config::{load_config, parse_config, EnvChoice, RunConfig};
pub use curve::{
    aggregate_csv, aggregate_curves, curve_csv, curve_from_rewards, emit_curve, emit_plot_data, moving_mean_100,
    parse_curve, plot_data, read_curve, AggregatePoint, CurvePoint, CURVE_HEADER,
};
pub use gradcheck::{gradcheck_csv, gradcheck_suite, GradCheckRow};
pub use rng::*;
pub use train::{
    evaluate, make_env, run_training, train, RunArtifacts, StepInfo, TrainOutcome, TrainingObserver, CHECKPOINT_FILE,
    CURVE_FILE, METADATA_FILE,
};
