//! Target transform, routed training, inference and model bundles.

mod bundle;
mod model;
mod router;
mod target;

pub use bundle::{decode_bundle, encode_bundle, load_bundle, payload_bytes, save_bundle, FORMAT_VERSION};
pub use model::{train, ModelBundle, ModelKind, PredictionResult, TrainConfig, TrainingMetadata};
pub use router::{Route, Router};
pub use target::{forward_target, inverse_target};
