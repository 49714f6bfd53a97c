//! Schema, ingestion, encoding, splitting and synthetic generation.

pub mod dataset;
pub mod encode;
pub mod matrix;
pub mod schema;
pub mod split;
pub mod synth;

pub use dataset::{load_csv, Dataset, LoadReport, Value};
pub use encode::{encode, ColumnSource, EncodedColumn, Encoder};
pub use matrix::DesignMatrix;
pub use schema::{Binning, Distribution, FeatureKind, FeatureSchema, FeatureSpec, TargetSpec};
pub use split::{stratified_split, RowSubset, SplitPair};
pub use synth::{synth_generate, published_effects, EffectTable};
