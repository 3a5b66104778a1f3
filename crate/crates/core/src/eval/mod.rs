//! Downstream evaluation: heads, cross-sensor transfer, height
//! reconstruction, embedding export, ablations and a from-scratch baseline.

mod experiment;
mod features;
mod heads;
mod reconstruct;
mod scratch;
mod tasks;
mod transfer;

pub use experiment::{
    ablation_csv, ablation_sweep, all_features, evaluate_transfer, load_eval_dataset, run_experiment, AblationAxis,
    AblationRegistry, AblationRow, CalibAxis, ExperimentConfig, ExperimentResult, LossAxis, TauAxis, TrainingMeta,
};
pub use features::{embedding_separation, export_embeddings, extract_features, SensorFeatures};
pub use heads::{cross_entropy, mse, ClassifierHead, HeadParams, HeadTrainConfig, PoseHead};
pub use reconstruct::reconstruct_height;
pub use scratch::{classifier_accuracies, train_scratch_classifier, ScratchConfig};
pub use tasks::{
    pose_pairs, pose_rmse, transfer_matrix, Classification, DownstreamTask, Pose, TaskRegistry, TrainedHead,
};
pub use transfer::{transfer_performance, MetricKind, TransferMatrix, TransferSummary};
