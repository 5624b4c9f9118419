use crate::error::{Error, Result};

fn check_lengths(op: &str, a: usize, b: usize, min: usize) -> Result<()> {
    if a != b {
        return Err(Error::Data(format!("{op}: {a} predictions for {b} labels")));
    }
    if a < min {
        return Err(Error::Data(format!("{op}: need at least {min} items, got {a}")));
    }
    Ok(())
}

/// `k × k` counts indexed `[gold][pred]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_labels(preds: &[usize], golds: &[usize], k: usize) -> Result<Self> {
        check_lengths("confusion matrix", preds.len(), golds.len(), 0)?;
        let mut m = Self::new(k);
        for (&p, &g) in preds.iter().zip(golds) {
            if p >= k || g >= k {
                return Err(Error::Data(format!("label {} outside {k} classes", p.max(g))));
            }
            m.counts[g * k + p] += 1;
        }
        Ok(m)
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.k + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.k, other.k);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Generalized Matthews correlation; equals the binary formula for
    /// `k = 2`. Zero when the denominator vanishes.
    pub fn mcc(&self) -> f64 {
        let k = self.k;
        let s = self.total() as f64;
        let c: f64 = (0..k).map(|i| self.get(i, i) as f64).sum();
        let pred: Vec<f64> = (0..k).map(|j| (0..k).map(|i| self.get(i, j) as f64).sum()).collect();
        let gold: Vec<f64> = (0..k).map(|i| (0..k).map(|j| self.get(i, j) as f64).sum()).collect();
        let pg: f64 = pred.iter().zip(&gold).map(|(p, g)| p * g).sum();
        let pp: f64 = pred.iter().map(|p| p * p).sum();
        let gg: f64 = gold.iter().map(|g| g * g).sum();
        let den = ((s * s - pp) * (s * s - gg)).sqrt();
        if den == 0.0 {
            0.0
        } else {
            (c * s - pg) / den
        }
    }

    pub fn accuracy(&self) -> f64 {
        let s = self.total();
        if s == 0 {
            return 0.0;
        }
        (0..self.k).map(|i| self.get(i, i)).sum::<u64>() as f64 / s as f64
    }

    /// F1 of class 1 against the rest. Zero when precision + recall is zero.
    pub fn f1_positive(&self) -> f64 {
        let tp = self.get(1, 1) as f64;
        let fp: f64 = (0..self.k).filter(|&g| g != 1).map(|g| self.get(g, 1) as f64).sum();
        let fn_: f64 = (0..self.k).filter(|&p| p != 1).map(|p| self.get(1, p) as f64).sum();
        if tp == 0.0 {
            return 0.0;
        }
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

/// Binary Matthews correlation coefficient.
pub fn matthews_corr(preds: &[usize], golds: &[usize]) -> Result<f64> {
    check_lengths("mcc", preds.len(), golds.len(), 1)?;
    Ok(ConfusionMatrix::from_labels(preds, golds, 2)?.mcc())
}

/// Multi-class Matthews correlation over `k` classes.
pub fn matthews_corr_multiclass(preds: &[usize], golds: &[usize], k: usize) -> Result<f64> {
    check_lengths("mcc", preds.len(), golds.len(), 1)?;
    Ok(ConfusionMatrix::from_labels(preds, golds, k)?.mcc())
}

pub fn f1_binary(preds: &[usize], golds: &[usize]) -> Result<f64> {
    check_lengths("f1", preds.len(), golds.len(), 1)?;
    Ok(ConfusionMatrix::from_labels(preds, golds, 2)?.f1_positive())
}

pub fn accuracy(preds: &[usize], golds: &[usize]) -> Result<f64> {
    check_lengths("accuracy", preds.len(), golds.len(), 1)?;
    let hits = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    /// Set when either input has constant ranks; `rho` is then 0.
    pub zero_variance: bool,
}

/// 1-based fractional ranks; ties share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        None
    } else {
        Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
    }
}

pub fn spearman_corr(x: &[f64], y: &[f64]) -> Result<Spearman> {
    check_lengths("spearman", x.len(), y.len(), 2)?;
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("spearman: non-finite value".into()));
    }
    Ok(match pearson(&average_ranks(x), &average_ranks(y)) {
        Some(rho) => Spearman {
            rho,
            zero_variance: false,
        },
        None => Spearman {
            rho: 0.0,
            zero_variance: true,
        },
    })
}
