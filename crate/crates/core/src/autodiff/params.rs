//! Named parameter store shared between a model, the tape, and Adam.

use super::tape::{Gradients, Tape, Var};
use super::tensor::Tensor;
use super::TensorError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    /// Position in the registration order; indexes the `Vec<Var>`
    /// returned by [`ParamSet::bind`].
    pub fn index(&self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct Param<T> {
    pub name: String,
    pub tensor: Tensor<T>,
}

/// Ordered collection of trainable tensors.
#[derive(Debug, Clone, Default)]
pub struct ParamSet<T> {
    entries: Vec<Param<T>>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn register(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> ParamId {
        self.entries.push(Param {
            name: name.into(),
            tensor: tensor.with_grad(),
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].tensor
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.entries[id.0].tensor
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.entries.iter_mut()
    }

    /// Put every parameter on a tape, in registration order.
    pub fn bind(&self, tape: &Tape<T>) -> Vec<Var> {
        self.entries
            .iter()
            .map(|p| tape.leaf(p.tensor.clone()))
            .collect()
    }

    /// Pull the tape gradients of the bound leaves back into each
    /// parameter's accumulator.
    pub fn accumulate_from(&mut self, vars: &[Var], grads: &Gradients<T>) {
        debug_assert_eq!(vars.len(), self.entries.len());
        for (entry, var) in self.entries.iter_mut().zip(vars.iter()) {
            if let Some(g) = grads.get(*var) {
                entry.tensor.accumulate_grad(g);
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for e in self.entries.iter_mut() {
            e.tensor.zero_grad();
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    /// All parameter values, flattened in registration order (as f64
    /// for the checkpoint container).
    pub fn flatten(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| e.tensor.data().iter().map(|v| v.as_f64()))
            .collect()
    }

    pub fn load_flat(&mut self, data: &[f64]) -> Result<(), TensorError> {
        if data.len() != self.num_scalars() {
            return Err(TensorError::ShapeMismatch {
                op: "load_flat",
                msg: format!(
                    "checkpoint holds {} scalars, model needs {}",
                    data.len(),
                    self.num_scalars()
                ),
            });
        }
        let mut at = 0;
        for e in self.entries.iter_mut() {
            let n = e.tensor.len();
            for (slot, &v) in e.tensor.data_mut().iter_mut().zip(&data[at..at + n]) {
                *slot = T::c(v);
            }
            at += n;
        }
        Ok(())
    }

    /// Layer names and shapes for the checkpoint manifest.
    pub fn manifest(&self) -> Vec<(String, Vec<usize>)> {
        self.entries
            .iter()
            .map(|e| (e.name.clone(), e.tensor.shape().to_vec()))
            .collect()
    }
}
