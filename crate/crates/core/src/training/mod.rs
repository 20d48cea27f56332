//! Dataset handling, steady-data augmentation, the training loop and the
//! data-efficiency ablation.

mod ablation;
mod data;
mod norm;
mod trainer;

pub use ablation::{ablation_csv, ablation_models, ablation_run, AblationConfig, AblationRow};
pub use data::{
    encode_all, encode_case, load_case, load_dataset, sample_batch, split_dataset, split_kinds, BatchItem, CaseRecord,
    Dataset, Sampler, Split,
};
pub use norm::{ColumnNorm, Normalizer};
pub use trainer::{
    default_pooling, holdout, select_pool, train, EpochLog, Predictor, TrainConfig, TrainData, TrainOutcome,
    POOLING_RATIO,
};
