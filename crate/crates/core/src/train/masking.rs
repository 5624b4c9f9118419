use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::IGNORE_INDEX;
use crate::error::{Error, Result};
use crate::model::Batch;
use crate::rng::{stream_rng, Stream, DEFAULT_SEED};
use crate::tokenizer::{TokenSequence, MASK_ID, NUM_SPECIAL};

fn d_mask_prob() -> f64 {
    0.15
}
fn d_replace_mask() -> f64 {
    0.8
}
fn d_replace_random() -> f64 {
    0.1
}
fn d_keep() -> f64 {
    0.1
}
fn d_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskingConfig {
    #[serde(default = "d_mask_prob")]
    pub mask_prob: f64,
    #[serde(default = "d_replace_mask")]
    pub replace_mask: f64,
    #[serde(default = "d_replace_random")]
    pub replace_random: f64,
    #[serde(default = "d_keep")]
    pub keep: f64,
    #[serde(default = "d_seed")]
    pub seed: u64,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        MaskingConfig {
            mask_prob: d_mask_prob(),
            replace_mask: d_replace_mask(),
            replace_random: d_replace_random(),
            keep: d_keep(),
            seed: d_seed(),
        }
    }
}

impl MaskingConfig {
    /// `mask_prob = 0` is accepted as a way to switch masking off.
    pub fn validate(&self) -> Result<()> {
        let fr = [self.replace_mask, self.replace_random, self.keep];
        if !(0.0..1.0).contains(&self.mask_prob) || fr.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config("masking probabilities out of range".into()));
        }
        if (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("mask/random/keep fractions must sum to 1".into()));
        }
        Ok(())
    }
}

/// Masks one position vector in place and returns per-position labels.
///
/// Only real, non-special positions are eligible. Every eligible position
/// consumes the same number of draws whether or not it is selected, so the
/// stream stays aligned across configurations.
pub fn mask_ids<R: Rng + ?Sized>(
    ids: &mut [usize],
    attention_mask: &[u8],
    vocab_size: usize,
    cfg: &MaskingConfig,
    rng: &mut R,
) -> Vec<i64> {
    let mut labels = vec![IGNORE_INDEX; ids.len()];
    let first = NUM_SPECIAL as usize;
    for i in 0..ids.len() {
        if attention_mask[i] == 0 || ids[i] < first {
            continue;
        }
        let select = rng.random::<f64>();
        let how = rng.random::<f64>();
        let replacement = rng.random_range(first..vocab_size.max(first + 1));
        if select >= cfg.mask_prob {
            continue;
        }
        labels[i] = ids[i] as i64;
        if how < cfg.replace_mask {
            ids[i] = MASK_ID as usize;
        } else if how < cfg.replace_mask + cfg.replace_random {
            ids[i] = replacement;
        }
    }
    labels
}

/// Builds a batch from encoded sequences and masks it with the stream for
/// `batch_index`. Returns the masked batch and one label per position.
pub fn mask_batch(
    seqs: &[TokenSequence],
    cfg: &MaskingConfig,
    vocab_size: usize,
    batch_index: u64,
) -> Result<(Batch, Vec<i64>)> {
    let mut batch = Batch::from_sequences(seqs)?;
    let mut rng = stream_rng(cfg.seed, Stream::Masking, batch_index);
    let labels = mask_ids(&mut batch.ids, &batch.attention_mask, vocab_size, cfg, &mut rng);
    Ok((batch, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(ids: &[u32], pad: usize) -> TokenSequence {
        let mut ids = ids.to_vec();
        let mut mask = vec![1u8; ids.len()];
        ids.extend(std::iter::repeat_n(0, pad));
        mask.extend(std::iter::repeat_n(0, pad));
        TokenSequence {
            segment_ids: vec![0; ids.len()],
            ids,
            attention_mask: mask,
        }
    }

    #[test]
    fn zero_probability_leaves_inputs() {
        let s = seq(&[2, 5, 6, 7, 3], 2);
        let cfg = MaskingConfig {
            mask_prob: 0.0,
            ..Default::default()
        };
        let (b, labels) = mask_batch(&[s.clone()], &cfg, 10, 0).unwrap();
        assert!(labels.iter().all(|&l| l == IGNORE_INDEX));
        assert_eq!(b.ids, vec![2, 5, 6, 7, 3]);
    }

    #[test]
    fn specials_never_selected() {
        let s = seq(&[2, 5, 6, 3, 7, 8, 3], 3);
        let cfg = MaskingConfig {
            mask_prob: 0.9,
            ..Default::default()
        };
        for k in 0..1000 {
            let (b, labels) = mask_batch(&[s.clone()], &cfg, 12, k).unwrap();
            for (i, &l) in labels.iter().enumerate() {
                if s.ids[i] < NUM_SPECIAL {
                    assert_eq!(l, IGNORE_INDEX);
                    assert_eq!(b.ids[i], s.ids[i] as usize);
                }
            }
        }
    }

    #[test]
    fn fractions_validated() {
        let bad = MaskingConfig {
            keep: 0.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(MaskingConfig::default().validate().is_ok());
    }
}
