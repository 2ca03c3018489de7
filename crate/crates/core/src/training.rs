//! Softmax cross-entropy, Adam, and the full-batch training loop with
//! best-validation checkpointing.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{backward, forward, init_params, ForwardContext, ModelKind, ModelParams};
use crate::splits::SplitSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Hidden width; only read by `Mlp2`.
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-2,
            weight_decay: 0.0,
            epochs: 1000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            hidden: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lr must be > 0, got {}",
                self.lr
            )));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_mask(mask: &[usize], n: usize, labels: &[usize]) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument("empty node mask".into()));
    }
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} logit rows",
            labels.len()
        )));
    }
    if let Some(&i) = mask.iter().find(|&&i| i >= n) {
        return Err(Error::OutOfRange(format!("mask index {i} with n = {n}")));
    }
    Ok(())
}

/// Mean negative log-likelihood over the masked rows and its gradient with
/// respect to the logits (zero outside the mask).
pub fn cross_entropy(
    logits: &DMatrix<f64>,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, DMatrix<f64>)> {
    check_mask(mask, logits.nrows(), labels)?;
    let c = logits.ncols();
    let scale = 1.0 / mask.len() as f64;
    let mut grad = DMatrix::zeros(logits.nrows(), c);
    let mut loss = 0.0;
    for &i in mask {
        let y = labels[i];
        if y >= c {
            return Err(Error::OutOfRange(format!(
                "label {y} with {c} logit columns"
            )));
        }
        let row = logits.row(i);
        let top = (0..c).fold(0, |b, k| if row[k] > row[b] { k } else { b });
        let max = row[top];
        // log-sum-exp as max + ln(1 + rest), keeping tiny losses representable
        let rest: f64 = (0..c)
            .filter(|&k| k != top)
            .map(|k| (row[k] - max).exp())
            .sum();
        let log_z = max + rest.ln_1p();
        loss += (max - row[y]) + rest.ln_1p();
        for k in 0..c {
            grad[(i, k)] = (row[k] - log_z).exp() * scale;
        }
        grad[(i, y)] -= scale;
    }
    Ok((loss * scale, grad))
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn predict(logits: &DMatrix<f64>) -> Vec<usize> {
    logits
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub fn accuracy(logits: &DMatrix<f64>, labels: &[usize], mask: &[usize]) -> Result<f64> {
    check_mask(mask, logits.nrows(), labels)?;
    let pred = predict(logits);
    let hits = mask.iter().filter(|&&i| pred[i] == labels[i]).count();
    Ok(hits as f64 / mask.len() as f64)
}

/// Adam moment accumulators for one set of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(
        &mut self,
        params: &mut ModelParams,
        grads: &ModelParams,
        cfg: &TrainConfig,
    ) -> Result<()> {
        let grads = grads.slices();
        let mut params = params.slices_mut();
        if grads.len() != params.len()
            || grads.len() != self.m.len()
            || params.iter().zip(&grads).any(|(p, g)| p.len() != g.len())
        {
            return Err(Error::Dimension(
                "gradient shapes do not match parameters".into(),
            ));
        }
        self.t += 1;
        for (k, (theta, g)) in params.iter_mut().zip(&grads).enumerate() {
            adam_update(theta, g, &mut self.m[k], &mut self.v[k], self.t, cfg);
        }
        Ok(())
    }
}

/// One bias-corrected Adam update of `theta` in place; `t` is the 1-based
/// step count. Weight decay is added to the gradient before the moments.
pub fn adam_update(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &TrainConfig,
) {
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    for i in 0..theta.len() {
        let g = grad[i] + cfg.weight_decay * theta[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub test_accuracy: f64,
    /// `None` when the split has no validation nodes; the final epoch is
    /// then the checkpoint.
    pub val_accuracy: Option<f64>,
    /// 1-based epoch of the selected checkpoint.
    pub best_epoch: usize,
    pub loss_trace: Vec<f64>,
    pub val_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub result: RunResult,
    /// Parameters at the selected checkpoint.
    pub params: ModelParams,
}

/// Full-batch training. Epoch `e` applies one Adam step on the train mask
/// and then evaluates the updated parameters; the reported test accuracy is
/// the one at the first epoch attaining the maximum validation accuracy.
pub fn train(
    kind: ModelKind,
    ctx: &ForwardContext,
    labels: &[usize],
    num_classes: usize,
    split: &SplitSet,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    let n = ctx.num_nodes();
    for mask in [&split.train, &split.test] {
        check_mask(mask, n, labels)?;
    }
    if !split.val.is_empty() {
        check_mask(&split.val, n, labels)?;
    }

    let mut params = init_params(kind, ctx, num_classes, cfg.hidden, cfg.seed)?;
    let mut adam = AdamState::new(&params);
    let mut logits = forward(kind, &params, ctx)?;

    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut val_trace = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, f64, ModelParams)> = None;

    for epoch in 1..=cfg.epochs {
        let (loss, g) = cross_entropy(&logits, labels, &split.train)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        loss_trace.push(loss);
        let grads = backward(kind, &params, ctx, &g)?;
        adam.step(&mut params, &grads, cfg)?;
        if !params.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        logits = forward(kind, &params, ctx)?;

        if split.val.is_empty() {
            continue;
        }
        let val = accuracy(&logits, labels, &split.val)?;
        val_trace.push(val);
        if best.as_ref().is_none_or(|b| val > b.1) {
            let test = accuracy(&logits, labels, &split.test)?;
            best = Some((epoch, val, test, params.clone()));
        }
    }

    let (best_epoch, val_accuracy, test_accuracy, params) = match best {
        Some((e, v, t, p)) => (e, Some(v), t, p),
        None => (
            cfg.epochs,
            None,
            accuracy(&logits, labels, &split.test)?,
            params,
        ),
    };
    Ok(TrainedModel {
        result: RunResult {
            test_accuracy,
            val_accuracy,
            best_epoch,
            loss_trace,
            val_trace,
        },
        params,
    })
}

pub fn train_run(
    kind: ModelKind,
    ctx: &ForwardContext,
    labels: &[usize],
    num_classes: usize,
    split: &SplitSet,
    cfg: &TrainConfig,
) -> Result<RunResult> {
    train(kind, ctx, labels, num_classes, split, cfg).map(|t| t.result)
}
