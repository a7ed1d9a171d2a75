//! Models and their symbolic encodings.
//!
//! Each encoder turns an ML artifact into the WMI vocabulary: a support
//! formula χ_S that defines fresh variables functionally from the inputs,
//! a weight term w_S, and output symbols — a real score f(x) and, for
//! classifiers, a boolean decision c(x) ⟺ f(x) ≥ 0.

mod data;
mod det;
mod encoding;
mod ensemble;
mod forest;
mod nn;
mod spn;

pub use data::{Column, ColumnType, Dataset, Value};
pub use det::{encode_det_weight, train_det, DensityTree, DetNode};
pub use encoding::{Gate, SystemEncoding, TreeTerm};
pub use ensemble::{encode_ensemble, Aggregation};
pub use forest::{encode_rf_classifier, DetForestClassifier};
pub use nn::{encode_relu_nn, Activation, Layer, NeuralNet};
pub use spn::{encode_spn, Spn, SpnLeaf};
