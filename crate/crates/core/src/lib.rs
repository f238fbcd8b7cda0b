//! Predicting user engagement with search clarification panes and ranking
//! panes with a RankNet that can use the predicted engagement as a feature.
//!
//! The pipeline has two stages:
//!
//! 1. [`predictor`]: an MLP regressor or classifier maps a lexical
//!    representation of (query, question, answers) to an engagement level.
//! 2. [`ranker`]: a factorized RankNet orders the candidate panes of each
//!    query from four length features, optionally plus the predicted
//!    engagement.
//!
//! [`experiment`] wires both stages to TSV inputs, config files and reports.

pub mod error;
pub mod experiment;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod model_file;
pub mod nn;
pub mod optim;
pub mod predictor;
pub mod preprocess;
pub mod ranker;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod vectorize;

pub use error::{Error, Result};
