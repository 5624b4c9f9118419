use serde::{Deserialize, Serialize};

use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::model::ParamStore;

fn d_beta1() -> f64 {
    0.9
}
fn d_beta2() -> f64 {
    0.999
}
fn d_eps() -> f64 {
    1e-6
}
fn d_peak() -> f64 {
    1e-4
}
fn d_warmup() -> u64 {
    10_000
}
fn d_total() -> u64 {
    100_000
}
fn d_decay() -> f64 {
    0.01
}
fn d_batch() -> usize {
    16
}

/// Adam with a linear warmup/decay schedule and decoupled weight decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(default = "d_peak")]
    pub peak_lr: f64,
    #[serde(default = "d_warmup")]
    pub warmup_steps: u64,
    #[serde(default = "d_total")]
    pub total_steps: u64,
    #[serde(default = "d_decay")]
    pub weight_decay: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_eps")]
    pub eps: f64,
}

impl Default for OptimizerConfig {
    /// Full-size adapter pretraining: lr 1e-4, 10k warmup steps, 100k
    /// steps, decay 0.01, batch 16.
    fn default() -> Self {
        OptimizerConfig {
            peak_lr: d_peak(),
            warmup_steps: d_warmup(),
            total_steps: d_total(),
            weight_decay: d_decay(),
            batch_size: d_batch(),
            beta1: d_beta1(),
            beta2: d_beta2(),
            eps: d_eps(),
        }
    }
}

impl OptimizerConfig {
    /// Same schedule shape with both step counts replaced.
    pub fn with_steps(mut self, warmup: u64, total: u64) -> Self {
        self.warmup_steps = warmup;
        self.total_steps = total;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.warmup_steps > self.total_steps {
            return bad("warmup_steps exceeds total_steps");
        }
        if self.total_steps == 0 || self.batch_size == 0 {
            return bad("total_steps and batch_size must be positive");
        }
        if !(self.peak_lr > 0.0 && self.peak_lr.is_finite()) || self.weight_decay < 0.0 {
            return bad("learning rate must be positive and weight decay non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.eps <= 0.0 {
            return bad("adam betas must lie in [0, 1) and eps must be positive");
        }
        Ok(())
    }

    /// Linear 0 → peak over the warmup, then linear peak → 0 at
    /// `total_steps`.
    pub fn lr_at(&self, step: u64) -> f64 {
        let (w, t) = (self.warmup_steps, self.total_steps);
        if step >= t {
            0.0
        } else if step < w {
            self.peak_lr * (step as f64 / w as f64)
        } else {
            self.peak_lr * ((t - step) as f64 / (t - w) as f64)
        }
    }
}

/// First and second moments, one pair per parameter in store order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<S> {
    pub step: u64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(store: &ParamStore<S>) -> Self {
        let zeros = || store.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        AdamState {
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }
}

/// One Adam update with bias correction on trainable parameters only.
///
/// `grads[i]` belongs to the `i`-th stored parameter; a missing gradient
/// counts as zero. Decay `lr·λ·θ` is added to the update of weight matrices
/// and embeddings. If any trainable gradient is non-finite nothing changes.
pub fn adam_step<S: Scalar>(
    store: &mut ParamStore<S>,
    grads: &[Option<Tensor<S>>],
    state: &mut AdamState<S>,
    lr: f64,
    cfg: &OptimizerConfig,
) -> Result<()> {
    if grads.len() != store.len() || state.m.len() != store.len() {
        return Err(Error::Data(format!(
            "{} gradients and {} optimizer slots for {} parameters",
            grads.len(),
            state.m.len(),
            store.len()
        )));
    }
    for (p, g) in store.iter().zip(grads) {
        if let (true, Some(g)) = (p.trainable, g) {
            if g.shape() != p.value.shape() {
                return Err(Error::shape("adam_step", p.value.shape(), g.shape()));
            }
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient(p.spec.name.clone()));
            }
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (S::lit(cfg.beta1), S::lit(cfg.beta2));
    let c1 = S::one() - b1.powi(t);
    let c2 = S::one() - b2.powi(t);
    let (lr_s, eps) = (S::lit(lr), S::lit(cfg.eps));
    let wd = S::lit(cfg.weight_decay);
    for (i, p) in store.iter_mut().enumerate() {
        if !p.trainable {
            continue;
        }
        let decay = p.spec.kind.decays() && cfg.weight_decay > 0.0;
        let g = grads[i].as_ref();
        let (m, v) = (state.m[i].data_mut(), state.v[i].data_mut());
        for (j, w) in p.value.data_mut().iter_mut().enumerate() {
            let gj = g.map_or(S::zero(), |g| g.data()[j]);
            m[j] = b1 * m[j] + (S::one() - b1) * gj;
            v[j] = b2 * v[j] + (S::one() - b2) * gj * gj;
            let mhat = m[j] / c1;
            let vhat = v[j] / c2;
            let mut update = mhat / (vhat.sqrt() + eps);
            if decay {
                update += wd * *w;
            }
            *w -= lr_s * update;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ParamKind, ParamSpec, Section};

    fn one(kind: ParamKind, value: f64, trainable: bool) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        let spec = ParamSpec {
            name: "w".into(),
            shape: vec![1],
            section: Section::Base,
            kind,
        };
        s.push(spec, Tensor::from_f64(&[1], &[value]).unwrap(), trainable);
        s
    }

    #[test]
    fn schedule_closed_form() {
        let c = OptimizerConfig::default().with_steps(10, 110);
        assert_eq!(c.lr_at(0), 0.0);
        assert_eq!(c.lr_at(10), c.peak_lr);
        assert!((c.lr_at(60) - c.peak_lr / 2.0).abs() < 1e-18);
        assert_eq!(c.lr_at(110), 0.0);
    }

    #[test]
    fn quadratic_converges() {
        let mut s = one(ParamKind::Weight, 0.0, true);
        let mut st = AdamState::new(&s);
        let cfg = OptimizerConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        for _ in 0..500 {
            let w = s.get("w").unwrap().value.data()[0];
            let g = Tensor::from_f64(&[1], &[2.0 * (w - 3.0)]).unwrap();
            adam_step(&mut s, &[Some(g)], &mut st, 0.1, &cfg).unwrap();
        }
        let w = s.get("w").unwrap().value.data()[0];
        assert!((w - 3.0).abs() < 1e-3, "{w}");
    }

    #[test]
    fn decay_only_when_configured() {
        let zero = || Some(Tensor::from_f64(&[1], &[0.0]).unwrap());
        for (wd, shrinks) in [(0.0, false), (0.1, true)] {
            let mut s = one(ParamKind::Weight, 1.0, true);
            let mut st = AdamState::new(&s);
            let cfg = OptimizerConfig {
                weight_decay: wd,
                ..Default::default()
            };
            adam_step(&mut s, &[zero()], &mut st, 0.1, &cfg).unwrap();
            assert_eq!(s.get("w").unwrap().value.data()[0] < 1.0, shrinks);
        }
    }

    #[test]
    fn frozen_and_nonfinite() {
        let mut s = one(ParamKind::Weight, 1.0, false);
        let mut st = AdamState::new(&s);
        let g = Some(Tensor::from_f64(&[1], &[5.0]).unwrap());
        adam_step(&mut s, &[g], &mut st, 0.1, &OptimizerConfig::default()).unwrap();
        assert_eq!(s.get("w").unwrap().value.data()[0].to_bits(), 1f64.to_bits());

        let mut s = one(ParamKind::Bias, 1.0, true);
        let mut st = AdamState::new(&s);
        let g = Some(Tensor::from_f64(&[1], &[f64::NAN]).unwrap());
        let before = s.clone();
        assert!(adam_step(&mut s, &[g], &mut st, 0.1, &OptimizerConfig::default()).is_err());
        assert_eq!(s, before);
        assert_eq!(st.step, 0);
    }
}
