//! Dense n-dimensional arrays with an optional gradient accumulator.

use super::TensorError;
use crate::scalar::Scalar;
use rand::Rng;

/// Row-major dense array. `grad` is kept in lockstep with `data` when
/// `requires_grad` is set and is otherwise empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
    pub requires_grad: bool,
    pub grad: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self, TensorError> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(TensorError::ShapeDataMismatch {
                shape,
                len: data.len(),
            });
        }
        Ok(Self {
            shape,
            data,
            requires_grad: false,
            grad: Vec::new(),
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel: usize = shape.iter().product();
        Self {
            shape,
            data: vec![T::zero(); numel],
            requires_grad: false,
            grad: Vec::new(),
        }
    }

    pub fn scalar(v: T) -> Self {
        Self {
            shape: vec![1],
            data: vec![v],
            requires_grad: false,
            grad: Vec::new(),
        }
    }

    /// Uniform draws in `[-limit, limit)`.
    pub fn uniform(shape: Vec<usize>, limit: f64, rng: &mut impl Rng) -> Self {
        let numel: usize = shape.iter().product();
        let data = (0..numel)
            .map(|_| T::c(rng.gen_range(-limit..limit)))
            .collect();
        Self {
            shape,
            data,
            requires_grad: false,
            grad: Vec::new(),
        }
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self.grad = vec![T::zero(); self.data.len()];
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Reinterpret under a new shape with the same element count.
    pub fn reshaped(mut self, shape: Vec<usize>) -> Result<Self, TensorError> {
        let numel: usize = shape.iter().product();
        if numel != self.data.len() {
            return Err(TensorError::ShapeDataMismatch {
                shape,
                len: self.data.len(),
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn zero_grad(&mut self) {
        for g in self.grad.iter_mut() {
            *g = T::zero();
        }
    }

    pub fn accumulate_grad(&mut self, delta: &[T]) {
        debug_assert_eq!(delta.len(), self.data.len());
        if self.grad.is_empty() {
            self.grad = vec![T::zero(); self.data.len()];
        }
        for (g, &d) in self.grad.iter_mut().zip(delta.iter()) {
            *g += d;
        }
    }
}
