//! Early target base-station prediction.
//!
//! Pipeline: sliding-window RSRP/RSRQ features per (source, candidate) pair,
//! zero-order extrapolation for under-sampled candidates, a stacked-LSTM
//! binary classifier trained with BPTT, a learned likelihood threshold, and
//! top-x conflict resolution over candidate probabilities.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod gradcheck;
pub mod infer;
pub mod lstm;
pub mod model_io;
pub mod threshold;
pub mod train;

pub use dataset::{extract_dataset, WindowSpec};
pub use error::PredictorError;
pub use eval::{availability_upper_bound, evaluate, PredictionMetrics};
pub use features::{build_features, extrapolate, CellHistory, FeatureVector, FEATURES_PER_STEP};
pub use gradcheck::{gradient_check, numeric_gradient, relative_error};
pub use infer::{predict, rank_candidates, HandoverPrediction};
pub use lstm::{LstmConfig, LstmGradients, LstmModel};
pub use model_io::{decode_model, encode_model, load_model, save_model};
pub use threshold::{f1_at_threshold, learn_threshold, learn_threshold_from_scores};
pub use train::{class_weights, lstm_train, TrainConfig, TrainReport};
