//! Experiment orchestration: JSON configs with dotted overrides, the
//! prediction and ranking runs, parameter sweeps and their reports.

mod config;
mod report;
mod run;
mod sweep;

pub use config::{
    set_path, DataConfig, ExperimentConfig, RankStageConfig, DATA_DIR_ENV, SEED_BALANCE, SEED_NEGATIVES,
    SEED_RANK_SPLIT, SEED_SPLIT, SEED_STAGES,
};
pub use report::{
    ArmResult, BaselineRow, DataSummary, GroupSummary, PredictReport, RankReport, RunReport, RunStatus, Significance,
    StageHistogram, TaskResult, VectorizerSummary,
};
pub use run::{
    evaluate_predictor_file, load_aligned_embeddings, predicted_engagement, prepare_click_data, run_predict_experiment,
    run_rank_experiment, run_rank_experiment_from_config, EvaluationSummary, PreparedData, PREDICT_ALPHA, RANK_ALPHA,
};
pub use sweep::{grid_cells, sweep, Grid, SweepRow, SweepSummary};
