use kgadapt::autodiff::Tensor;
use kgadapt::model::{mlm_gradient_check, AdapterConfig, Model, ModelConfig};
use kgadapt::tokenizer::{build_vocab, encode};
use kgadapt::train::{mask_batch, MaskingConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn desk_model() -> (Model<f64>, kgadapt::model::Batch, Vec<i64>) {
    let corpus = ["stockholm is part of sweden .", "alcoholism causes stigma ."];
    let vocab = build_vocab(corpus, 200, 1).unwrap();
    let mut cfg = ModelConfig::desk(vocab.len());
    cfg.max_positions = 16;
    let mut model = Model::<f64>::new(cfg, Some(AdapterConfig::desk()), true, None, 13).unwrap();
    // Non-zero up-projections so gradients reach the down-projections.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in model.store_mut().iter_mut() {
        if p.spec.name.contains(".up.") {
            p.value = Tensor::randn(p.value.shape(), 0.3, &mut rng);
        }
    }
    model.unfreeze_all();
    let seqs: Vec<_> = corpus.iter().map(|s| encode(s, &vocab, 12, None).unwrap()).collect();
    let masking = MaskingConfig {
        mask_prob: 0.5,
        ..MaskingConfig::default()
    };
    let (batch, labels) = mask_batch(&seqs, &masking, vocab.len(), 0).unwrap();
    assert!(labels.iter().any(|&l| l >= 0));
    (model, batch, labels)
}

#[test]
fn every_parameter_matches_finite_differences() {
    let (model, batch, labels) = desk_model();
    let rows = mlm_gradient_check(&model, &batch, &labels, 24, 1e-4, 13).unwrap();
    assert_eq!(rows.len(), model.store().len());
    for r in &rows {
        assert!(r.max_rel_err <= 1e-4, "{}: {}", r.name, r.max_rel_err);
    }
}

#[test]
fn frozen_base_checks_only_trainable() {
    let (mut model, batch, labels) = desk_model();
    model.freeze_base();
    let rows = mlm_gradient_check(&model, &batch, &labels, 8, 1e-4, 13).unwrap();
    assert_eq!(rows.len(), model.store().params().iter().filter(|p| p.trainable).count());
    assert!(rows.iter().all(|r| !r.name.starts_with("layer.") && !r.name.starts_with("embeddings.")));
    assert!(rows.iter().all(|r| r.max_rel_err <= 1e-4));
}
