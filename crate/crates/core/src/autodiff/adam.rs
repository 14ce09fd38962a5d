//! Adam with bias correction.

use super::params::ParamSet;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub step_count: u64,
    first_moment: Vec<Vec<T>>,
    second_moment: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(lr: T) -> Self {
        Self {
            lr,
            beta1: T::c(0.9),
            beta2: T::c(0.999),
            eps: T::c(1e-8),
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    /// One update over every parameter's accumulated gradient.
    pub fn step(&mut self, params: &mut ParamSet<T>) {
        self.step_count += 1;
        if self.first_moment.len() != params.len() {
            self.first_moment = params.iter().map(|p| vec![T::zero(); p.tensor.len()]).collect();
            self.second_moment = params.iter().map(|p| vec![T::zero(); p.tensor.len()]).collect();
        }
        let t = self.step_count as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        for (i, p) in params.iter_mut().enumerate() {
            let grads = p.tensor.grad.clone();
            if grads.is_empty() {
                continue;
            }
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            for ((w, &g), (mi, vi)) in p
                .tensor
                .data_mut()
                .iter_mut()
                .zip(grads.iter())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = self.beta1 * *mi + (T::one() - self.beta1) * g;
                *vi = self.beta2 * *vi + (T::one() - self.beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn zero_gradient_leaves_params_untouched() {
        let mut ps = ParamSet::<f64>::new();
        ps.register("w", Tensor::new(vec![2], vec![1.0, -2.0]).unwrap());
        let mut adam = AdamState::new(0.01);
        adam.step(&mut ps);
        assert_eq!(adam.step_count, 1);
        assert_eq!(ps.iter().next().unwrap().tensor.data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_matches_hand_recurrence() {
        // Scalar parameter, gradient g: the first update is
        // -lr * g / (|g| + eps) after bias correction.
        let g = 3.7f64;
        let lr = 0.002;
        let mut ps = ParamSet::<f64>::new();
        let id = ps.register("w", Tensor::new(vec![1], vec![0.5]).unwrap());
        ps.get_mut(id).accumulate_grad(&[g]);
        let mut adam = AdamState::new(lr);
        adam.step(&mut ps);

        let m = 0.1 * g;
        let v = 0.001 * g * g;
        let m_hat = m / 0.1;
        let v_hat = v / 0.001;
        let expected = 0.5 - lr * m_hat / (v_hat.sqrt() + 1e-8);
        let got = ps.get(id).data()[0];
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    }

    #[test]
    fn trajectory_matches_scripted_oracle() {
        // Independent recurrence for f(w) = w^2.
        let lr = 0.01;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let mut ow = 1.0f64;
        let mut om = 0.0;
        let mut ov = 0.0;

        let mut ps = ParamSet::<f64>::new();
        let id = ps.register("w", Tensor::new(vec![1], vec![1.0]).unwrap());
        let mut adam = AdamState::new(lr);

        for t in 1..=200 {
            let g = 2.0 * ow;
            om = b1 * om + (1.0 - b1) * g;
            ov = b2 * ov + (1.0 - b2) * g * g;
            let mh = om / (1.0 - b1.powi(t));
            let vh = ov / (1.0 - b2.powi(t));
            ow -= lr * mh / (vh.sqrt() + eps);

            let w = ps.get(id).data()[0];
            ps.zero_grads();
            ps.get_mut(id).accumulate_grad(&[2.0 * w]);
            adam.step(&mut ps);
            let got = ps.get(id).data()[0];
            assert!((got - ow).abs() < 1e-12, "step {t}: {got} vs {ow}");
        }
        assert!(ps.get(id).data()[0].abs() < 0.05);
    }
}
