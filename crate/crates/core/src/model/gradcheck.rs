use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::encoder::{Batch, Mode, Model};
use crate::autodiff::Tape;
use crate::error::Result;
use crate::rng::{stream_rng, Stream};

/// Worst agreement seen on one parameter tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckRow {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Denominator floor used by [`mlm_gradient_check`]. Below it the
/// comparison is effectively absolute, which keeps round-off on vanishing
/// gradients from counting as disagreement.
pub const REL_ERR_FLOOR: f64 = 1e-6;

fn mlm_loss_value(model: &Model<f64>, batch: &Batch, labels: &[i64], seed: u64) -> Result<f64> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape, false);
    let mut rng = stream_rng(seed, Stream::Dropout, 0);
    let h = model.encode(&mut tape, &bound, batch, &mut Mode::Train(&mut rng))?;
    let loss = model.mlm_loss(&mut tape, &bound, h, labels)?;
    Ok(tape.value(loss).item())
}

/// Compares the MLM loss gradient of every trainable tensor with central
/// differences at up to `per_tensor` sampled coordinates. Dropout runs with
/// the same mask for every evaluation.
pub fn mlm_gradient_check(
    model: &Model<f64>,
    batch: &Batch,
    labels: &[i64],
    per_tensor: usize,
    h: f64,
    seed: u64,
) -> Result<Vec<GradCheckRow>> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape, false);
    let mut rng = stream_rng(seed, Stream::Dropout, 0);
    let hidden = model.encode(&mut tape, &bound, batch, &mut Mode::Train(&mut rng))?;
    let loss = model.mlm_loss(&mut tape, &bound, hidden, labels)?;
    let mut grads = tape.backward(loss)?;

    let mut probe = model.clone();
    let mut rows = Vec::new();
    for (i, p) in model.store().iter().enumerate() {
        if !p.trainable {
            continue;
        }
        let analytic = grads.take(bound.vars()[i]);
        let n = p.value.len();
        let mut pick_rng = stream_rng(seed, Stream::Init, i as u64);
        let coords = sample(&mut pick_rng, n, per_tensor.min(n)).into_vec();
        let mut worst = 0.0f64;
        for &j in &coords {
            let original = p.value.data()[j];
            let mut at = |x: f64| -> Result<f64> {
                probe.store_mut().iter_mut().nth(i).expect("same layout").value.data_mut()[j] = x;
                mlm_loss_value(&probe, batch, labels, seed)
            };
            let numeric = (at(original + h)? - at(original - h)?) / (2.0 * h);
            at(original)?;
            let a = analytic.as_ref().map_or(0.0, |g| g.data()[j]);
            worst = worst.max(relative_error(a, numeric, REL_ERR_FLOOR));
        }
        rows.push(GradCheckRow {
            name: p.spec.name.clone(),
            checked: coords.len(),
            max_rel_err: worst,
        });
    }
    Ok(rows)
}
