//! Minimal reverse-mode automatic differentiation over dense arrays,
//! with exactly the operations the forecasting models need, plus Adam.

mod adam;
mod params;
mod tape;
mod tensor;

pub use adam::AdamState;
pub use params::{Param, ParamId, ParamSet};
pub use tape::{BnStats, Gradients, Padding, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} cannot hold {len} elements")]
    ShapeDataMismatch { shape: Vec<usize>, len: usize },
    #[error("{op}: shape mismatch: {msg}")]
    ShapeMismatch { op: &'static str, msg: String },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("{op}: train mode needs more than one element per channel")]
    DegenerateBatch { op: &'static str },
}
