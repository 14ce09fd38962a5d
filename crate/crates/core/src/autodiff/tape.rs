//! Define-by-run reverse-mode differentiation over dense tensors.
//!
//! A [`Tape`] records every executed operation in topological order;
//! [`Tape::backward`] walks the record in reverse and accumulates
//! gradients into every node that (transitively) requires them.

use super::tensor::Tensor;
use super::TensorError;
use crate::scalar::Scalar;
use std::cell::RefCell;

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Padding policy for convolution and pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    None,
    Same,
}

#[derive(Debug, Clone)]
struct BnSaved<T> {
    x_hat: Vec<T>,
    inv_std: Vec<T>,
    training: bool,
}

/// Per-channel running statistics for batch normalization.
#[derive(Debug, Clone)]
pub struct BnStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Scalar> BnStats<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
        }
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Add,
    Sub,
    Mul,
    Scale(T),
    Relu,
    Sigmoid,
    Conv1d {
        stride: usize,
        pad_left: usize,
    },
    Dense,
    AvgPool1d {
        kernel: usize,
        stride: usize,
        pad_left: usize,
    },
    MaxPool1d {
        argmax: Vec<usize>,
    },
    BatchNorm1d {
        saved: BnSaved<T>,
    },
    MseLoss,
    ConcatAxis1 {
        sizes: Vec<usize>,
    },
    SliceAxis1 {
        start: usize,
        parent_axis1: usize,
    },
    MeanLastAxis,
    PadLastAxis {
        left: usize,
    },
    Reshape,
}

struct Node<T> {
    value: Tensor<T>,
    parents: Vec<Var>,
    op: Op<T>,
    requires_grad: bool,
}

/// Gradients per tape node, produced by [`Tape::backward`].
pub struct Gradients<T> {
    by_node: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.by_node.get(v.0).and_then(|g| g.as_deref())
    }
}

pub struct Tape<T> {
    nodes: RefCell<Vec<Node<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn mismatch(op: &'static str, msg: String) -> TensorError {
    TensorError::ShapeMismatch { op, msg }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Record an input or parameter tensor.
    pub fn leaf(&self, value: Tensor<T>) -> Var {
        let requires_grad = value.requires_grad;
        self.push(value, Vec::new(), Op::Leaf, requires_grad)
    }

    pub fn shape_of(&self, v: Var) -> Vec<usize> {
        self.nodes.borrow()[v.0].value.shape().to_vec()
    }

    pub fn value(&self, v: Var) -> Tensor<T> {
        self.nodes.borrow()[v.0].value.clone()
    }

    fn push(&self, value: Tensor<T>, parents: Vec<Var>, op: Op<T>, extra_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        let requires_grad = extra_grad
            || parents
                .iter()
                .any(|p| nodes[p.0].requires_grad);
        nodes.push(Node {
            value,
            parents,
            op,
            requires_grad,
        });
        Var(nodes.len() - 1)
    }

    fn binary_elementwise(
        &self,
        name: &'static str,
        a: Var,
        b: Var,
        op: Op<T>,
        f: impl Fn(T, T) -> T,
    ) -> Result<Var, TensorError> {
        let value = {
            let nodes = self.nodes.borrow();
            let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
            if ta.shape() != tb.shape() {
                return Err(mismatch(
                    name,
                    format!("{:?} vs {:?}", ta.shape(), tb.shape()),
                ));
            }
            let data = ta
                .data()
                .iter()
                .zip(tb.data().iter())
                .map(|(&x, &y)| f(x, y))
                .collect();
            Tensor::new(ta.shape().to_vec(), data)?
        };
        Ok(self.push(value, vec![a, b], op, false))
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary_elementwise("add", a, b, Op::Add, |x, y| x + y)
    }

    pub fn sub(&self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary_elementwise("sub", a, b, Op::Sub, |x, y| x - y)
    }

    pub fn mul(&self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary_elementwise("mul", a, b, Op::Mul, |x, y| x * y)
    }

    pub fn scale(&self, a: Var, c: T) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let ta = &nodes[a.0].value;
            Tensor::new(
                ta.shape().to_vec(),
                ta.data().iter().map(|&x| x * c).collect(),
            )
            .expect("same shape")
        };
        self.push(value, vec![a], Op::Scale(c), false)
    }

    pub fn relu(&self, a: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let ta = &nodes[a.0].value;
            Tensor::new(
                ta.shape().to_vec(),
                ta.data()
                    .iter()
                    .map(|&x| if x > T::zero() { x } else { T::zero() })
                    .collect(),
            )
            .expect("same shape")
        };
        self.push(value, vec![a], Op::Relu, false)
    }

    pub fn sigmoid(&self, a: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let ta = &nodes[a.0].value;
            Tensor::new(
                ta.shape().to_vec(),
                ta.data()
                    .iter()
                    .map(|&x| T::one() / (T::one() + (-x).exp()))
                    .collect(),
            )
            .expect("same shape")
        };
        self.push(value, vec![a], Op::Sigmoid, false)
    }

    /// Cross-correlation of `[B,C,L]` with kernels `[F,C,W]` plus bias
    /// `[F]`, producing `[B,F,L']`.
    pub fn conv1d(
        &self,
        input: Var,
        kernel: Var,
        bias: Var,
        stride: usize,
        padding: Padding,
    ) -> Result<Var, TensorError> {
        if stride == 0 {
            return Err(mismatch("conv1d", "stride must be >= 1".into()));
        }
        let (value, pad_left) = {
            let nodes = self.nodes.borrow();
            let (ti, tk, tb) = (
                &nodes[input.0].value,
                &nodes[kernel.0].value,
                &nodes[bias.0].value,
            );
            let (batch, chans, len) = rank3("conv1d", ti)?;
            let (filters, kc, width) = rank3("conv1d", tk)?;
            if kc != chans {
                return Err(mismatch(
                    "conv1d",
                    format!("kernel channels {kc} vs input channels {chans}"),
                ));
            }
            if tb.shape() != [filters] {
                return Err(mismatch(
                    "conv1d",
                    format!("bias shape {:?} vs filters {filters}", tb.shape()),
                ));
            }
            let (pad_left, pad_right) = pad_amounts("conv1d", padding, len, width, stride)?;
            if width > len + pad_left + pad_right {
                return Err(mismatch(
                    "conv1d",
                    format!("kernel width {width} exceeds padded length"),
                ));
            }
            let out_len = (len + pad_left + pad_right - width) / stride + 1;
            let (xi, xk, xb) = (ti.data(), tk.data(), tb.data());
            let mut out = vec![T::zero(); batch * filters * out_len];
            for b in 0..batch {
                for f in 0..filters {
                    let dst = &mut out[(b * filters + f) * out_len..(b * filters + f + 1) * out_len];
                    for v in dst.iter_mut() {
                        *v = xb[f];
                    }
                    for c in 0..chans {
                        let src = &xi[(b * chans + c) * len..(b * chans + c + 1) * len];
                        let ker = &xk[(f * chans + c) * width..(f * chans + c + 1) * width];
                        for (o, v) in dst.iter_mut().enumerate() {
                            let base = o * stride;
                            let mut acc = T::zero();
                            for (w, &kv) in ker.iter().enumerate() {
                                let i = (base + w) as isize - pad_left as isize;
                                if i >= 0 && (i as usize) < len {
                                    acc += src[i as usize] * kv;
                                }
                            }
                            *v += acc;
                        }
                    }
                }
            }
            (Tensor::new(vec![batch, filters, out_len], out)?, pad_left)
        };
        Ok(self.push(
            value,
            vec![input, kernel, bias],
            Op::Conv1d { stride, pad_left },
            false,
        ))
    }

    /// Affine map of `[B,Fin]` by weight `[Fout,Fin]` and bias `[Fout]`.
    pub fn dense(&self, input: Var, weight: Var, bias: Var) -> Result<Var, TensorError> {
        let value = {
            let nodes = self.nodes.borrow();
            let (ti, tw, tb) = (
                &nodes[input.0].value,
                &nodes[weight.0].value,
                &nodes[bias.0].value,
            );
            let (batch, fin) = rank2("dense", ti)?;
            let (fout, wfin) = rank2("dense", tw)?;
            if wfin != fin {
                return Err(mismatch(
                    "dense",
                    format!("weight in-features {wfin} vs input features {fin}"),
                ));
            }
            if tb.shape() != [fout] {
                return Err(mismatch(
                    "dense",
                    format!("bias shape {:?} vs out-features {fout}", tb.shape()),
                ));
            }
            let (xi, xw, xb) = (ti.data(), tw.data(), tb.data());
            let mut out = vec![T::zero(); batch * fout];
            for b in 0..batch {
                let row = &xi[b * fin..(b + 1) * fin];
                for fo in 0..fout {
                    let wrow = &xw[fo * fin..(fo + 1) * fin];
                    let mut acc = xb[fo];
                    for (x, w) in row.iter().zip(wrow.iter()) {
                        acc += *x * *w;
                    }
                    out[b * fout + fo] = acc;
                }
            }
            Tensor::new(vec![batch, fout], out)?
        };
        Ok(self.push(value, vec![input, weight, bias], Op::Dense, false))
    }

    /// Window mean over the last axis of `[B,C,L]`. Padded positions are
    /// excluded from the mean.
    pub fn avg_pool1d(
        &self,
        input: Var,
        kernel: usize,
        stride: usize,
        padding: Padding,
    ) -> Result<Var, TensorError> {
        let (value, pad_left) = {
            let nodes = self.nodes.borrow();
            let ti = &nodes[input.0].value;
            let (batch, chans, len) = rank3("avg_pool1d", ti)?;
            let (pad_left, out_len) = pool_geometry("avg_pool1d", len, kernel, stride, padding)?;
            let xi = ti.data();
            let mut out = vec![T::zero(); batch * chans * out_len];
            for bc in 0..batch * chans {
                let src = &xi[bc * len..(bc + 1) * len];
                let dst = &mut out[bc * out_len..(bc + 1) * out_len];
                for (o, v) in dst.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    let mut count = 0usize;
                    for w in 0..kernel {
                        let i = (o * stride + w) as isize - pad_left as isize;
                        if i >= 0 && (i as usize) < len {
                            acc += src[i as usize];
                            count += 1;
                        }
                    }
                    *v = acc / T::from_usize_(count);
                }
            }
            (Tensor::new(vec![batch, chans, out_len], out)?, pad_left)
        };
        Ok(self.push(
            value,
            vec![input],
            Op::AvgPool1d {
                kernel,
                stride,
                pad_left,
            },
            false,
        ))
    }

    /// Window max over the last axis of `[B,C,L]`; gradient routes to
    /// the (first) maximizing element.
    pub fn max_pool1d(
        &self,
        input: Var,
        kernel: usize,
        stride: usize,
        padding: Padding,
    ) -> Result<Var, TensorError> {
        let (value, argmax) = {
            let nodes = self.nodes.borrow();
            let ti = &nodes[input.0].value;
            let (batch, chans, len) = rank3("max_pool1d", ti)?;
            let (pad_left, out_len) = pool_geometry("max_pool1d", len, kernel, stride, padding)?;
            let xi = ti.data();
            let mut out = vec![T::zero(); batch * chans * out_len];
            let mut argmax = vec![0usize; batch * chans * out_len];
            for bc in 0..batch * chans {
                let src = &xi[bc * len..(bc + 1) * len];
                for o in 0..out_len {
                    let mut best = T::neg_infinity();
                    let mut best_i = usize::MAX;
                    for w in 0..kernel {
                        let i = (o * stride + w) as isize - pad_left as isize;
                        if i >= 0 && (i as usize) < len && src[i as usize] > best {
                            best = src[i as usize];
                            best_i = bc * len + i as usize;
                        }
                    }
                    out[bc * out_len + o] = best;
                    argmax[bc * out_len + o] = best_i;
                }
            }
            (Tensor::new(vec![batch, chans, out_len], out)?, argmax)
        };
        Ok(self.push(value, vec![input], Op::MaxPool1d { argmax }, false))
    }

    /// Per-channel normalization of `[B,C,L]` over batch and length.
    ///
    /// Train mode normalizes with batch statistics and folds them into
    /// `stats` with the given momentum (unbiased variance, torch-style);
    /// eval mode normalizes with `stats` as constants.
    pub fn batch_norm1d(
        &self,
        input: Var,
        gamma: Var,
        beta: Var,
        stats: &mut BnStats<T>,
        momentum: T,
        training: bool,
    ) -> Result<Var, TensorError> {
        let eps = T::c(1e-5);
        let (value, saved) = {
            let nodes = self.nodes.borrow();
            let (ti, tg, tb) = (
                &nodes[input.0].value,
                &nodes[gamma.0].value,
                &nodes[beta.0].value,
            );
            let (batch, chans, len) = rank3("batch_norm1d", ti)?;
            if tg.shape() != [chans] || tb.shape() != [chans] {
                return Err(mismatch(
                    "batch_norm1d",
                    format!(
                        "gamma {:?} / beta {:?} vs channels {chans}",
                        tg.shape(),
                        tb.shape()
                    ),
                ));
            }
            let m = batch * len;
            if training && m < 2 {
                return Err(TensorError::DegenerateBatch { op: "batch_norm1d" });
            }
            let xi = ti.data();
            let (xg, xbta) = (tg.data(), tb.data());
            let mut x_hat = vec![T::zero(); xi.len()];
            let mut inv_std = vec![T::zero(); chans];
            let mut out = vec![T::zero(); xi.len()];
            for c in 0..chans {
                let (mean, var) = if training {
                    let mut sum = T::zero();
                    for b in 0..batch {
                        let src = &xi[(b * chans + c) * len..(b * chans + c + 1) * len];
                        for &v in src {
                            sum += v;
                        }
                    }
                    let mean = sum / T::from_usize_(m);
                    let mut ss = T::zero();
                    for b in 0..batch {
                        let src = &xi[(b * chans + c) * len..(b * chans + c + 1) * len];
                        for &v in src {
                            let d = v - mean;
                            ss += d * d;
                        }
                    }
                    let var = ss / T::from_usize_(m);
                    let unbiased = ss / T::from_usize_(m - 1);
                    stats.mean[c] = (T::one() - momentum) * stats.mean[c] + momentum * mean;
                    stats.var[c] = (T::one() - momentum) * stats.var[c] + momentum * unbiased;
                    (mean, var)
                } else {
                    (stats.mean[c], stats.var[c])
                };
                let istd = T::one() / (var + eps).sqrt();
                inv_std[c] = istd;
                for b in 0..batch {
                    let base = (b * chans + c) * len;
                    for l in 0..len {
                        let xh = (xi[base + l] - mean) * istd;
                        x_hat[base + l] = xh;
                        out[base + l] = xg[c] * xh + xbta[c];
                    }
                }
            }
            (
                Tensor::new(vec![batch, chans, len], out)?,
                BnSaved {
                    x_hat,
                    inv_std,
                    training,
                },
            )
        };
        Ok(self.push(
            value,
            vec![input, gamma, beta],
            Op::BatchNorm1d { saved },
            false,
        ))
    }

    /// Mean of squared differences over all elements, as a `[1]` tensor.
    pub fn mse_loss(&self, pred: Var, target: Var) -> Result<Var, TensorError> {
        let value = {
            let nodes = self.nodes.borrow();
            let (tp, tt) = (&nodes[pred.0].value, &nodes[target.0].value);
            if tp.shape() != tt.shape() {
                return Err(mismatch(
                    "mse_loss",
                    format!("{:?} vs {:?}", tp.shape(), tt.shape()),
                ));
            }
            let n = T::from_usize_(tp.len());
            let mut acc = T::zero();
            for (&p, &t) in tp.data().iter().zip(tt.data().iter()) {
                let d = p - t;
                acc += d * d;
            }
            Tensor::scalar(acc / n)
        };
        Ok(self.push(value, vec![pred, target], Op::MseLoss, false))
    }

    /// Concatenate along axis 1; all other axes must match.
    pub fn concat_axis1(&self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(mismatch("concat_axis1", "no inputs".into()));
        }
        let (value, sizes) = {
            let nodes = self.nodes.borrow();
            let first = nodes[parts[0].0].value.shape().to_vec();
            if first.len() < 2 {
                return Err(mismatch("concat_axis1", "rank must be >= 2".into()));
            }
            let mut sizes = Vec::with_capacity(parts.len());
            let mut total = 0usize;
            for p in parts {
                let s = nodes[p.0].value.shape();
                if s.len() != first.len()
                    || s[0] != first[0]
                    || s[2..] != first[2..]
                {
                    return Err(mismatch(
                        "concat_axis1",
                        format!("{s:?} incompatible with {first:?}"),
                    ));
                }
                sizes.push(s[1]);
                total += s[1];
            }
            let inner: usize = first[2..].iter().product();
            let batch = first[0];
            let mut shape = first.clone();
            shape[1] = total;
            let mut out = vec![T::zero(); batch * total * inner];
            for b in 0..batch {
                let mut at = 0usize;
                for (p, &sz) in parts.iter().zip(sizes.iter()) {
                    let tv = &nodes[p.0].value;
                    let src = &tv.data()[b * sz * inner..(b + 1) * sz * inner];
                    out[(b * total + at) * inner..(b * total + at + sz) * inner]
                        .copy_from_slice(src);
                    at += sz;
                }
            }
            (Tensor::new(shape, out)?, sizes)
        };
        Ok(self.push(value, parts.to_vec(), Op::ConcatAxis1 { sizes }, false))
    }

    /// Take `len` slots of axis 1 starting at `start`.
    pub fn slice_axis1(&self, input: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let (value, parent_axis1) = {
            let nodes = self.nodes.borrow();
            let ti = &nodes[input.0].value;
            let shape = ti.shape();
            if shape.len() < 2 {
                return Err(mismatch("slice_axis1", "rank must be >= 2".into()));
            }
            let (batch, ax1) = (shape[0], shape[1]);
            if start + len > ax1 {
                return Err(mismatch(
                    "slice_axis1",
                    format!("{start}..{} out of axis size {ax1}", start + len),
                ));
            }
            let inner: usize = shape[2..].iter().product();
            let mut out_shape = shape.to_vec();
            out_shape[1] = len;
            let mut out = vec![T::zero(); batch * len * inner];
            for b in 0..batch {
                let src = &ti.data()[(b * ax1 + start) * inner..(b * ax1 + start + len) * inner];
                out[b * len * inner..(b + 1) * len * inner].copy_from_slice(src);
            }
            (Tensor::new(out_shape, out)?, ax1)
        };
        Ok(self.push(
            value,
            vec![input],
            Op::SliceAxis1 {
                start,
                parent_axis1,
            },
            false,
        ))
    }

    /// Mean over the last axis (global average pooling when applied to
    /// `[B,C,L]`).
    pub fn mean_last_axis(&self, input: Var) -> Result<Var, TensorError> {
        let value = {
            let nodes = self.nodes.borrow();
            let ti = &nodes[input.0].value;
            let shape = ti.shape();
            if shape.len() < 2 {
                return Err(mismatch("mean_last_axis", "rank must be >= 2".into()));
            }
            let l = *shape.last().unwrap();
            if l == 0 {
                return Err(mismatch("mean_last_axis", "empty last axis".into()));
            }
            let rows = ti.len() / l;
            let mut out = vec![T::zero(); rows];
            for (r, v) in out.iter_mut().enumerate() {
                let src = &ti.data()[r * l..(r + 1) * l];
                let mut acc = T::zero();
                for &x in src {
                    acc += x;
                }
                *v = acc / T::from_usize_(l);
            }
            Tensor::new(shape[..shape.len() - 1].to_vec(), out)?
        };
        Ok(self.push(value, vec![input], Op::MeanLastAxis, false))
    }

    /// Zero-pad the last axis.
    pub fn pad_last_axis(&self, input: Var, left: usize, right: usize) -> Result<Var, TensorError> {
        let value = {
            let nodes = self.nodes.borrow();
            let ti = &nodes[input.0].value;
            let shape = ti.shape();
            let l = *shape.last().ok_or_else(|| {
                mismatch("pad_last_axis", "rank must be >= 1".into())
            })?;
            let rows = ti.len() / l.max(1);
            let nl = l + left + right;
            let mut out_shape = shape.to_vec();
            *out_shape.last_mut().unwrap() = nl;
            let mut out = vec![T::zero(); rows * nl];
            for r in 0..rows {
                out[r * nl + left..r * nl + left + l]
                    .copy_from_slice(&ti.data()[r * l..(r + 1) * l]);
            }
            Tensor::new(out_shape, out)?
        };
        Ok(self.push(value, vec![input], Op::PadLastAxis { left }, false))
    }

    pub fn reshape(&self, input: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[input.0].value.clone().reshaped(shape)?
        };
        Ok(self.push(value, vec![input], Op::Reshape, false))
    }

    /// Reverse pass from a scalar loss. Gradients accumulate across all
    /// uses of a node; tensors that do not require gradients are skipped.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>, TensorError> {
        let nodes = self.nodes.borrow();
        if nodes[loss.0].value.len() != 1 {
            return Err(TensorError::NonScalarLoss(
                nodes[loss.0].value.shape().to_vec(),
            ));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);

        for id in (0..=loss.0).rev() {
            if grads[id].is_none() || !nodes[id].requires_grad {
                continue;
            }
            let gout = grads[id].clone().unwrap();
            let node = &nodes[id];
            let parent_grads = backward_one(node, &nodes, &gout);
            for (p, pg) in node.parents.iter().zip(parent_grads.into_iter()) {
                let Some(pg) = pg else { continue };
                if !nodes[p.0].requires_grad {
                    continue;
                }
                match &mut grads[p.0] {
                    Some(acc) => {
                        for (a, d) in acc.iter_mut().zip(pg.iter()) {
                            *a += *d;
                        }
                    }
                    slot @ None => *slot = Some(pg),
                }
            }
        }
        Ok(Gradients { by_node: grads })
    }
}

fn rank3<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<(usize, usize, usize), TensorError> {
    match t.shape() {
        [a, b, c] => Ok((*a, *b, *c)),
        s => Err(mismatch(op, format!("expected rank 3, got {s:?}"))),
    }
}

fn rank2<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<(usize, usize), TensorError> {
    match t.shape() {
        [a, b] => Ok((*a, *b)),
        s => Err(mismatch(op, format!("expected rank 2, got {s:?}"))),
    }
}

fn pad_amounts(
    op: &'static str,
    padding: Padding,
    len: usize,
    width: usize,
    stride: usize,
) -> Result<(usize, usize), TensorError> {
    match padding {
        Padding::None => {
            if width > len {
                return Err(mismatch(
                    op,
                    format!("kernel {width} larger than unpadded length {len}"),
                ));
            }
            Ok((0, 0))
        }
        Padding::Same => {
            let out = len.div_ceil(stride);
            let total = ((out - 1) * stride + width).saturating_sub(len);
            let left = total / 2;
            Ok((left, total - left))
        }
    }
}

fn pool_geometry(
    op: &'static str,
    len: usize,
    kernel: usize,
    stride: usize,
    padding: Padding,
) -> Result<(usize, usize), TensorError> {
    if kernel == 0 || stride == 0 {
        return Err(mismatch(op, "kernel and stride must be >= 1".into()));
    }
    let (pad_left, pad_right) = pad_amounts(op, padding, len, kernel, stride)?;
    if pad_left >= kernel || pad_right >= kernel {
        return Err(mismatch(op, "padding must stay below kernel size".into()));
    }
    let out_len = (len + pad_left + pad_right - kernel) / stride + 1;
    Ok((pad_left, out_len))
}

/// Gradients of one node's inputs given the gradient of its output.
fn backward_one<T: Scalar>(
    node: &Node<T>,
    nodes: &[Node<T>],
    gout: &[T],
) -> Vec<Option<Vec<T>>> {
    let pval = |i: usize| nodes[node.parents[i].0].value.data();
    let pshape = |i: usize| nodes[node.parents[i].0].value.shape();
    match &node.op {
        Op::Leaf => Vec::new(),
        Op::Add => vec![Some(gout.to_vec()), Some(gout.to_vec())],
        Op::Sub => vec![
            Some(gout.to_vec()),
            Some(gout.iter().map(|&g| -g).collect()),
        ],
        Op::Mul => {
            let (a, b) = (pval(0), pval(1));
            vec![
                Some(gout.iter().zip(b).map(|(&g, &y)| g * y).collect()),
                Some(gout.iter().zip(a).map(|(&g, &x)| g * x).collect()),
            ]
        }
        Op::Scale(c) => vec![Some(gout.iter().map(|&g| g * *c).collect())],
        Op::Relu => {
            let x = pval(0);
            vec![Some(
                gout.iter()
                    .zip(x)
                    .map(|(&g, &v)| if v > T::zero() { g } else { T::zero() })
                    .collect(),
            )]
        }
        Op::Sigmoid => {
            let y = node.value.data();
            vec![Some(
                gout.iter()
                    .zip(y)
                    .map(|(&g, &s)| g * s * (T::one() - s))
                    .collect(),
            )]
        }
        Op::Conv1d { stride, pad_left } => {
            let (xi, xk) = (pval(0), pval(1));
            let in_shape = pshape(0);
            let k_shape = pshape(1);
            let (batch, chans, len) = (in_shape[0], in_shape[1], in_shape[2]);
            let (filters, _, width) = (k_shape[0], k_shape[1], k_shape[2]);
            let out_len = node.value.shape()[2];
            let mut din = vec![T::zero(); xi.len()];
            let mut dker = vec![T::zero(); xk.len()];
            let mut dbias = vec![T::zero(); filters];
            for b in 0..batch {
                for f in 0..filters {
                    let gslice = &gout[(b * filters + f) * out_len..(b * filters + f + 1) * out_len];
                    for &g in gslice {
                        dbias[f] += g;
                    }
                    for c in 0..chans {
                        let src = &xi[(b * chans + c) * len..(b * chans + c + 1) * len];
                        let ker = &xk[(f * chans + c) * width..(f * chans + c + 1) * width];
                        let dsrc = &mut din[(b * chans + c) * len..(b * chans + c + 1) * len];
                        for (o, &g) in gslice.iter().enumerate() {
                            let base = o * stride;
                            for w in 0..width {
                                let i = (base + w) as isize - *pad_left as isize;
                                if i >= 0 && (i as usize) < len {
                                    dsrc[i as usize] += g * ker[w];
                                }
                            }
                        }
                        let dk = &mut dker[(f * chans + c) * width..(f * chans + c + 1) * width];
                        for (o, &g) in gslice.iter().enumerate() {
                            let base = o * stride;
                            for (w, dkw) in dk.iter_mut().enumerate() {
                                let i = (base + w) as isize - *pad_left as isize;
                                if i >= 0 && (i as usize) < len {
                                    *dkw += g * src[i as usize];
                                }
                            }
                        }
                    }
                }
            }
            vec![Some(din), Some(dker), Some(dbias)]
        }
        Op::Dense => {
            let (xi, xw) = (pval(0), pval(1));
            let (batch, fin) = (pshape(0)[0], pshape(0)[1]);
            let fout = pshape(1)[0];
            let mut din = vec![T::zero(); xi.len()];
            let mut dw = vec![T::zero(); xw.len()];
            let mut db = vec![T::zero(); fout];
            for b in 0..batch {
                for fo in 0..fout {
                    let g = gout[b * fout + fo];
                    db[fo] += g;
                    let wrow = &xw[fo * fin..(fo + 1) * fin];
                    let row = &xi[b * fin..(b + 1) * fin];
                    let drow = &mut din[b * fin..(b + 1) * fin];
                    for fi in 0..fin {
                        drow[fi] += g * wrow[fi];
                    }
                    let dwrow = &mut dw[fo * fin..(fo + 1) * fin];
                    for fi in 0..fin {
                        dwrow[fi] += g * row[fi];
                    }
                }
            }
            vec![Some(din), Some(dw), Some(db)]
        }
        Op::AvgPool1d {
            kernel,
            stride,
            pad_left,
        } => {
            let in_shape = pshape(0);
            let len = in_shape[2];
            let out_len = node.value.shape()[2];
            let rows = in_shape[0] * in_shape[1];
            let mut din = vec![T::zero(); rows * len];
            for bc in 0..rows {
                let dsrc = &mut din[bc * len..(bc + 1) * len];
                for o in 0..out_len {
                    let g = gout[bc * out_len + o];
                    let mut count = 0usize;
                    for w in 0..*kernel {
                        let i = (o * stride + w) as isize - *pad_left as isize;
                        if i >= 0 && (i as usize) < len {
                            count += 1;
                        }
                    }
                    let share = g / T::from_usize_(count);
                    for w in 0..*kernel {
                        let i = (o * stride + w) as isize - *pad_left as isize;
                        if i >= 0 && (i as usize) < len {
                            dsrc[i as usize] += share;
                        }
                    }
                }
            }
            vec![Some(din)]
        }
        Op::MaxPool1d { argmax } => {
            let mut din = vec![T::zero(); pval(0).len()];
            for (&g, &i) in gout.iter().zip(argmax.iter()) {
                din[i] += g;
            }
            vec![Some(din)]
        }
        Op::BatchNorm1d { saved } => {
            let in_shape = pshape(0);
            let (batch, chans, len) = (in_shape[0], in_shape[1], in_shape[2]);
            let gamma = pval(1);
            let m = batch * len;
            let mut din = vec![T::zero(); batch * chans * len];
            let mut dgamma = vec![T::zero(); chans];
            let mut dbeta = vec![T::zero(); chans];
            for c in 0..chans {
                let mut sum_g = T::zero();
                let mut sum_gx = T::zero();
                for b in 0..batch {
                    let base = (b * chans + c) * len;
                    for l in 0..len {
                        let g = gout[base + l];
                        sum_g += g;
                        sum_gx += g * saved.x_hat[base + l];
                    }
                }
                dbeta[c] = sum_g;
                dgamma[c] = sum_gx;
                let istd = saved.inv_std[c];
                if saved.training {
                    let mf = T::from_usize_(m);
                    for b in 0..batch {
                        let base = (b * chans + c) * len;
                        for l in 0..len {
                            let g = gout[base + l] * gamma[c];
                            let xh = saved.x_hat[base + l];
                            din[base + l] = istd / mf
                                * (mf * g - sum_g * gamma[c] - xh * sum_gx * gamma[c]);
                        }
                    }
                } else {
                    for b in 0..batch {
                        let base = (b * chans + c) * len;
                        for l in 0..len {
                            din[base + l] = gout[base + l] * gamma[c] * istd;
                        }
                    }
                }
            }
            vec![Some(din), Some(dgamma), Some(dbeta)]
        }
        Op::MseLoss => {
            let (p, t) = (pval(0), pval(1));
            let n = T::from_usize_(p.len());
            let g = gout[0];
            let two = T::c(2.0);
            let dp: Vec<T> = p
                .iter()
                .zip(t.iter())
                .map(|(&pv, &tv)| g * two * (pv - tv) / n)
                .collect();
            let dt: Vec<T> = dp.iter().map(|&v| -v).collect();
            vec![Some(dp), Some(dt)]
        }
        Op::ConcatAxis1 { sizes } => {
            let out_shape = node.value.shape();
            let batch = out_shape[0];
            let total = out_shape[1];
            let inner: usize = out_shape[2..].iter().product();
            let mut outs: Vec<Option<Vec<T>>> = sizes
                .iter()
                .map(|&s| Some(vec![T::zero(); batch * s * inner]))
                .collect();
            for b in 0..batch {
                let mut at = 0usize;
                for (slot, &sz) in outs.iter_mut().zip(sizes.iter()) {
                    let dst = slot.as_mut().unwrap();
                    dst[b * sz * inner..(b + 1) * sz * inner].copy_from_slice(
                        &gout[(b * total + at) * inner..(b * total + at + sz) * inner],
                    );
                    at += sz;
                }
            }
            outs
        }
        Op::SliceAxis1 {
            start,
            parent_axis1,
        } => {
            let out_shape = node.value.shape();
            let batch = out_shape[0];
            let len = out_shape[1];
            let inner: usize = out_shape[2..].iter().product();
            let mut din = vec![T::zero(); batch * parent_axis1 * inner];
            for b in 0..batch {
                din[(b * parent_axis1 + start) * inner..(b * parent_axis1 + start + len) * inner]
                    .copy_from_slice(&gout[b * len * inner..(b + 1) * len * inner]);
            }
            vec![Some(din)]
        }
        Op::MeanLastAxis => {
            let in_shape = pshape(0);
            let l = *in_shape.last().unwrap();
            let share = T::one() / T::from_usize_(l);
            let mut din = vec![T::zero(); pval(0).len()];
            for (r, &g) in gout.iter().enumerate() {
                let gl = g * share;
                for v in din[r * l..(r + 1) * l].iter_mut() {
                    *v = gl;
                }
            }
            vec![Some(din)]
        }
        Op::PadLastAxis { left } => {
            let in_shape = pshape(0);
            let l = *in_shape.last().unwrap();
            let nl = *node.value.shape().last().unwrap();
            let rows = pval(0).len() / l.max(1);
            let mut din = vec![T::zero(); pval(0).len()];
            for r in 0..rows {
                din[r * l..(r + 1) * l].copy_from_slice(&gout[r * nl + left..r * nl + left + l]);
            }
            vec![Some(din)]
        }
        Op::Reshape => vec![Some(gout.to_vec())],
    }
}
