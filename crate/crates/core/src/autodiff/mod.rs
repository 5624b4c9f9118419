//! Dense tensors and a reverse-mode tape.
//!
//! Every operation the encoder needs records itself on a [`Tape`] together
//! with whatever activations its backward rule uses. [`Tape::backward`] then
//! walks the records once in reverse.
//!
//! Precision is a type parameter: `Tape<f32>` for training, `Tape<f64>` for
//! finite-difference checks.

mod scalar;
mod tape;
mod tensor;

pub use scalar::Scalar;
pub use tape::{gelu, Gradients, Tape, Var, IGNORE_INDEX, MASKED_LOGIT};
pub use tensor::Tensor;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gelu_at_zero_and_one() {
        assert_eq!(gelu(0.0f64), 0.0);
        // Φ(1) from the erf form
        assert!((gelu(1.0f64) - 0.841_344_746_068_542_9).abs() < 1e-15);
    }

    #[test]
    fn softmax_of_constant_is_uniform() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::full(&[2, 5], 3.7));
        let y = tape.softmax(x);
        for &v in tape.value(y).data() {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::randn(&[6, 9], 4.0, &mut rng));
        let y = tape.softmax(x);
        for row in tape.value(y).data().chunks(9) {
            assert!(row.iter().all(|&v| v >= 0.0));
            let s: f32 = row.iter().sum();
            assert!((s - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::randn(&[4, 16], 3.0, &mut rng));
        let g = tape.constant(Tensor::full(&[16], 1.0));
        let b = tape.constant(Tensor::zeros(&[16]));
        let y = tape.layer_norm(x, g, b, 1e-12).unwrap();
        for row in tape.value(y).data().chunks(16) {
            let mean = row.iter().sum::<f64>() / 16.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 16.0;
            assert!(mean.abs() <= 1e-6);
            assert!((var - 1.0).abs() <= 1e-4);
        }
    }

    #[test]
    fn cross_entropy_confident_target_is_near_zero() {
        let mut tape = Tape::<f64>::new();
        let mut logits = Tensor::zeros(&[1, 4]);
        logits.data_mut()[2] = 1e6;
        let l = tape.constant(logits);
        let loss = tape.cross_entropy(l, &[2]).unwrap();
        assert!(tape.value(loss).item().abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_ignored_rows_get_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tape = Tape::<f64>::new();
        let l = tape.leaf(Tensor::randn(&[3, 5], 1.0, &mut rng), true);
        let loss = tape.cross_entropy(l, &[1, IGNORE_INDEX, 4]).unwrap();
        let grads = tape.backward(loss).unwrap();
        let g = grads.get(l).unwrap();
        assert!(g.data()[5..10].iter().all(|&v| v == 0.0));
        assert!(g.data()[0..5].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let mut tape = Tape::<f32>::new();
        let a = tape.constant(Tensor::zeros(&[2, 3]));
        let b = tape.constant(Tensor::zeros(&[4, 5]));
        let err = tape.matmul(a, b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[4, 5]"), "{err}");
    }

    #[test]
    fn split_then_merge_heads_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::randn(&[2 * 3, 8], 1.0, &mut rng));
        let s = tape.split_heads(x, 2, 3, 4).unwrap();
        assert_eq!(tape.value(s).shape(), &[8, 3, 2]);
        let m = tape.merge_heads(s, 2, 3, 4).unwrap();
        assert_eq!(tape.value(m), tape.value(x));
    }

    #[test]
    fn dropout_zero_rate_is_passthrough() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::full(&[3, 3], 2.0));
        assert_eq!(tape.dropout(x, 0.0, &mut rng), x);
        let y = tape.dropout(x, 0.5, &mut rng);
        assert!(tape.value(y).data().iter().all(|&v| v == 0.0 || v == 4.0));
    }
}
