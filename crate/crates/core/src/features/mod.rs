//! Feature extraction: text, numeric, volumetric and categorical blocks.

mod pipeline;
mod svd;
mod tabular;
mod text;

pub use pipeline::{
    fit_transform_features, transform_features, FeatureMatrix, Featurizer, FeaturizerConfig, FeaturizerState,
    NumericField,
};
pub use svd::{fit_svd, SvdBasis, SvdConfig};
pub use tabular::{median, CategoryMap, NumericScaler};
pub use text::{terms, SparseVec, TextConfig, TextVectorizerState};
