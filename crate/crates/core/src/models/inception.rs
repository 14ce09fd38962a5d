//! InceptionTime feature extractor: stacked inception modules with
//! bottleneck, three parallel convolution branches, a max-pool branch,
//! batch normalization, and residual shortcuts every few modules,
//! finished by global average pooling.

use super::ModelError;
use crate::autodiff::{BnStats, Padding, ParamId, ParamSet, Tape, Tensor, Var};
use crate::scalar::Scalar;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InceptionConfig {
    /// Inception modules stacked in series.
    pub modules: usize,
    /// Filters per branch; the module emits 4x this many channels.
    pub filters: usize,
    /// Kernel sizes of the three convolution branches (odd).
    pub kernel_sizes: [usize; 3],
    /// 1x1 bottleneck width applied when the input is wider than it.
    pub bottleneck: usize,
    pub bn_momentum: f64,
    /// A shortcut joins every this many modules.
    pub residual_every: usize,
}

impl InceptionConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.modules < 1 {
            return Err(ModelError::InvalidConfig("modules must be >= 1".into()));
        }
        if self.filters < 1 {
            return Err(ModelError::InvalidConfig("filters must be >= 1".into()));
        }
        if self.kernel_sizes.iter().any(|k| k % 2 == 0) {
            return Err(ModelError::InvalidConfig(
                "kernel sizes must be odd for symmetric same-padding".into(),
            ));
        }
        Ok(())
    }

    pub fn out_features(&self) -> usize {
        4 * self.filters
    }
}

struct InceptionModule<T> {
    bottleneck: Option<(ParamId, ParamId)>,
    branches: [(ParamId, ParamId); 3],
    pool_conv: (ParamId, ParamId),
    bn: (ParamId, ParamId),
    bn_stats: RefCell<BnStats<T>>,
}

struct Shortcut<T> {
    conv: (ParamId, ParamId),
    bn: (ParamId, ParamId),
    bn_stats: RefCell<BnStats<T>>,
    after_module: usize,
}

/// The module stack; produces a `[B, 4*filters]` embedding.
pub struct InceptionTime<T> {
    cfg: InceptionConfig,
    modules: Vec<InceptionModule<T>>,
    shortcuts: Vec<Shortcut<T>>,
}

fn conv_init<T: Scalar>(
    params: &mut ParamSet<T>,
    name: String,
    filters: usize,
    in_ch: usize,
    width: usize,
    rng: &mut impl Rng,
) -> (ParamId, ParamId) {
    let limit = 1.0 / ((in_ch * width) as f64).sqrt();
    let k = Tensor::uniform(vec![filters, in_ch, width], limit, rng);
    let b = Tensor::uniform(vec![filters], limit, rng);
    (
        params.register(format!("{name}.weight"), k),
        params.register(format!("{name}.bias"), b),
    )
}

fn bn_init<T: Scalar>(
    params: &mut ParamSet<T>,
    name: String,
    channels: usize,
) -> (ParamId, ParamId) {
    let gamma = Tensor::new(vec![channels], vec![T::one(); channels]).unwrap();
    let beta = Tensor::zeros(vec![channels]);
    (
        params.register(format!("{name}.gamma"), gamma),
        params.register(format!("{name}.beta"), beta),
    )
}

impl<T: Scalar> InceptionTime<T> {
    pub fn init(
        cfg: &InceptionConfig,
        in_channels: usize,
        params: &mut ParamSet<T>,
        prefix: &str,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        cfg.validate()?;
        let out_ch = cfg.out_features();
        let mut modules = Vec::with_capacity(cfg.modules);
        let mut shortcuts = Vec::new();
        for m in 0..cfg.modules {
            let m_in = if m == 0 { in_channels } else { out_ch };
            let bottleneck = (cfg.bottleneck > 0 && m_in > cfg.bottleneck).then(|| {
                conv_init(
                    params,
                    format!("{prefix}.mod{m}.bottleneck"),
                    cfg.bottleneck,
                    m_in,
                    1,
                    rng,
                )
            });
            let conv_in = bottleneck.map_or(m_in, |_| cfg.bottleneck);
            let branches = [0, 1, 2].map(|i| {
                conv_init(
                    params,
                    format!("{prefix}.mod{m}.branch{i}"),
                    cfg.filters,
                    conv_in,
                    cfg.kernel_sizes[i],
                    rng,
                )
            });
            let pool_conv = conv_init(
                params,
                format!("{prefix}.mod{m}.pool_conv"),
                cfg.filters,
                m_in,
                1,
                rng,
            );
            let bn = bn_init(params, format!("{prefix}.mod{m}.bn"), out_ch);
            modules.push(InceptionModule {
                bottleneck,
                branches,
                pool_conv,
                bn,
                bn_stats: RefCell::new(BnStats::new(out_ch)),
            });

            if cfg.residual_every > 0 && (m + 1) % cfg.residual_every == 0 {
                let res_in = if m + 1 == cfg.residual_every {
                    in_channels
                } else {
                    out_ch
                };
                let conv = conv_init(
                    params,
                    format!("{prefix}.short{m}.conv"),
                    out_ch,
                    res_in,
                    1,
                    rng,
                );
                let bn = bn_init(params, format!("{prefix}.short{m}.bn"), out_ch);
                shortcuts.push(Shortcut {
                    conv,
                    bn,
                    bn_stats: RefCell::new(BnStats::new(out_ch)),
                    after_module: m,
                });
            }
        }
        Ok(Self {
            cfg: cfg.clone(),
            modules,
            shortcuts,
        })
    }

    /// Embed `[B, C, L]` into `[B, 4*filters]`.
    pub fn embed(
        &self,
        tape: &Tape<T>,
        vars: &[Var],
        input: Var,
        training: bool,
    ) -> Result<Var, ModelError> {
        let momentum = T::c(self.cfg.bn_momentum);
        let mut out = input;
        let mut residual = input;
        let mut short_iter = self.shortcuts.iter().peekable();
        for (m, module) in self.modules.iter().enumerate() {
            let x = out;
            let b_in = match module.bottleneck {
                Some((k, b)) => tape.conv1d(x, vars[k.index()], vars[b.index()], 1, Padding::Same)?,
                None => x,
            };
            let mut parts = Vec::with_capacity(4);
            for (k, b) in module.branches.iter() {
                parts.push(tape.conv1d(
                    b_in,
                    vars[k.index()],
                    vars[b.index()],
                    1,
                    Padding::Same,
                )?);
            }
            let pooled = tape.max_pool1d(x, 3, 1, Padding::Same)?;
            let (pk, pb) = module.pool_conv;
            parts.push(tape.conv1d(pooled, vars[pk.index()], vars[pb.index()], 1, Padding::Same)?);
            let cat = tape.concat_axis1(&parts)?;
            let (g, bta) = module.bn;
            let mut stats = module.bn_stats.borrow_mut();
            let bn = tape.batch_norm1d(
                cat,
                vars[g.index()],
                vars[bta.index()],
                &mut stats,
                momentum,
                training,
            )?;
            drop(stats);
            out = tape.relu(bn);

            if let Some(sc) = short_iter.peek() {
                if sc.after_module == m {
                    let sc = short_iter.next().unwrap();
                    let (ck, cb) = sc.conv;
                    let proj =
                        tape.conv1d(residual, vars[ck.index()], vars[cb.index()], 1, Padding::Same)?;
                    let (g, bta) = sc.bn;
                    let mut stats = sc.bn_stats.borrow_mut();
                    let proj = tape.batch_norm1d(
                        proj,
                        vars[g.index()],
                        vars[bta.index()],
                        &mut stats,
                        momentum,
                        training,
                    )?;
                    drop(stats);
                    let sum = tape.add(out, proj)?;
                    out = tape.relu(sum);
                    residual = out;
                }
            }
        }
        Ok(tape.mean_last_axis(out)?)
    }

    /// Batch-norm running statistics, flattened for checkpointing
    /// (mean then var per normalization site, module order).
    pub fn buffers(&self) -> Vec<T> {
        let mut out = Vec::new();
        for m in &self.modules {
            let s = m.bn_stats.borrow();
            out.extend_from_slice(&s.mean);
            out.extend_from_slice(&s.var);
        }
        for sc in &self.shortcuts {
            let s = sc.bn_stats.borrow();
            out.extend_from_slice(&s.mean);
            out.extend_from_slice(&s.var);
        }
        out
    }

    pub fn load_buffers(&self, data: &[T]) -> Result<usize, ModelError> {
        let mut at = 0usize;
        let mut take = |stats: &RefCell<BnStats<T>>| -> Result<(), ModelError> {
            let mut s = stats.borrow_mut();
            let c = s.mean.len();
            if at + 2 * c > data.len() {
                return Err(ModelError::InvalidConfig(
                    "checkpoint buffer section too short".into(),
                ));
            }
            s.mean.copy_from_slice(&data[at..at + c]);
            s.var.copy_from_slice(&data[at + c..at + 2 * c]);
            at += 2 * c;
            Ok(())
        };
        for m in &self.modules {
            take(&m.bn_stats)?;
        }
        for sc in &self.shortcuts {
            take(&sc.bn_stats)?;
        }
        Ok(at)
    }
}
