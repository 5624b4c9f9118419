use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_eps() -> f64 {
    1e-12
}

fn default_init_std() -> f64 {
    0.02
}

/// Encoder shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub ffn: usize,
    pub vocab_size: usize,
    pub max_positions: usize,
    pub dropout: f64,
    /// Reuse the token embedding table as the MLM output projection.
    #[serde(default)]
    pub tie_mlm_weights: bool,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
}

impl ModelConfig {
    /// Two layers of width 64, small enough to train inside a test.
    pub fn desk(vocab_size: usize) -> Self {
        ModelConfig {
            layers: 2,
            hidden: 64,
            heads: 2,
            ffn: 256,
            vocab_size,
            max_positions: 128,
            dropout: 0.1,
            tie_mlm_weights: false,
            layer_norm_eps: default_eps(),
            init_std: default_init_std(),
        }
    }

    /// BERT Base dimensions: 12 layers, 12 heads, H = 768.
    pub fn paper() -> Self {
        ModelConfig {
            layers: 12,
            hidden: 768,
            heads: 12,
            ffn: 3072,
            vocab_size: 30522,
            max_positions: 512,
            dropout: 0.1,
            tie_mlm_weights: false,
            layer_norm_eps: default_eps(),
            init_std: default_init_std(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.layers == 0 || self.hidden == 0 || self.heads == 0 || self.ffn == 0 {
            return fail("layer count, hidden size, heads and ffn size must be positive".into());
        }
        if self.hidden % self.heads != 0 {
            return fail(format!(
                "hidden size {} not divisible by {} heads",
                self.hidden, self.heads
            ));
        }
        if self.vocab_size <= crate::tokenizer::NUM_SPECIAL as usize {
            return fail(format!("vocabulary size {} too small", self.vocab_size));
        }
        if self.max_positions == 0 {
            return fail("max_positions must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

/// Bottleneck size of every adapter; the activation is always GELU.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub size: usize,
}

impl AdapterConfig {
    pub fn desk() -> Self {
        AdapterConfig { size: 8 }
    }

    pub fn paper() -> Self {
        AdapterConfig { size: 64 }
    }

    pub fn validate(&self, hidden: usize) -> Result<()> {
        if self.size == 0 || self.size >= hidden {
            return Err(Error::Config(format!(
                "adapter size {} must satisfy 0 < m < H = {hidden}",
                self.size
            )));
        }
        Ok(())
    }

    /// `2·H·m + m + H`: down and up projections with their biases.
    pub fn params_per_adapter(&self, hidden: usize) -> usize {
        2 * hidden * self.size + self.size + hidden
    }
}

/// Output head on the `[CLS]` vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskHead {
    Classification { num_labels: usize },
    Regression,
}

impl TaskHead {
    pub fn outputs(&self) -> usize {
        match self {
            TaskHead::Classification { num_labels } => *num_labels,
            TaskHead::Regression => 1,
        }
    }
}
