use rand::Rng;

use super::scalar::{gemm, MatRef};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Label value excluded from [`Tape::cross_entropy`].
pub const IGNORE_INDEX: i64 = -1;

/// Additive bias applied to attention logits of padded keys.
pub const MASKED_LOGIT: f64 = -1e9;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<S> {
    Leaf,
    MatMul {
        a: Var,
        b: Var,
        trans_b: bool,
    },
    BatchMatMul {
        a: Var,
        b: Var,
        trans_b: bool,
    },
    Add {
        a: Var,
        b: Var,
    },
    AddBias {
        x: Var,
        bias: Var,
    },
    Scale {
        x: Var,
        factor: S,
    },
    Gelu {
        x: Var,
    },
    Softmax {
        x: Var,
    },
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normalized: Vec<S>,
        inv_std: Vec<S>,
    },
    Embedding {
        table: Var,
        ids: Vec<usize>,
    },
    Dropout {
        x: Var,
        mask: Vec<S>,
    },
    SplitHeads {
        x: Var,
        batch: usize,
        seq: usize,
        heads: usize,
    },
    MergeHeads {
        x: Var,
        batch: usize,
        seq: usize,
        heads: usize,
    },
    MaskKeys {
        x: Var,
    },
    GatherRows {
        x: Var,
        rows: Vec<usize>,
    },
    CrossEntropy {
        logits: Var,
        targets: Vec<i64>,
        probs: Vec<S>,
        count: usize,
    },
    Mse {
        pred: Var,
        target: Vec<S>,
    },
}

struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
    needs_grad: bool,
}

/// Records forward computations so gradients can be propagated in reverse.
///
/// Nodes are appended in evaluation order, which is already a topological
/// order, so the backward pass is a single reverse sweep.
pub struct Tape<S: Scalar> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients of a scalar with respect to every recorded value that needs one.
pub struct Gradients<S> {
    grads: Vec<Option<Tensor<S>>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, v: Var) -> Option<&Tensor<S>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<S>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn expect_rank(op: &'static str, t: &Tensor<impl Scalar>, rank: usize) -> Result<()> {
    if t.shape().len() != rank {
        return Err(Error::shape(op, t.shape(), &vec![0; rank]));
    }
    Ok(())
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>, needs_grad: bool) -> Var {
        debug_assert!(
            matches!(op, Op::Leaf) || value.is_finite(),
            "non-finite forward value"
        );
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records an input. Gradients are only accumulated for leaves with
    /// `needs_grad` and anything computed from them.
    pub fn leaf(&mut self, value: Tensor<S>, needs_grad: bool) -> Var {
        self.push(value, Op::Leaf, needs_grad)
    }

    pub fn constant(&mut self, value: Tensor<S>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// `[m×k] · [k×n]`, or `[m×k] · [n×k]ᵀ` when `trans_b`.
    pub fn matmul_ex(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        expect_rank("matmul", av, 2)?;
        expect_rank("matmul", bv, 2)?;
        let (m, k) = (av.shape()[0], av.shape()[1]);
        let (br, bc) = (bv.shape()[0], bv.shape()[1]);
        let (kb, n) = if trans_b { (bc, br) } else { (br, bc) };
        if k != kb {
            return Err(Error::shape("matmul", av.shape(), bv.shape()));
        }
        let mut out = vec![S::zero(); m * n];
        let mut bref = MatRef::new(bv.data(), br, bc);
        if trans_b {
            bref = bref.t();
        }
        gemm(MatRef::new(av.data(), m, k), bref, &mut out, false);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(
            Tensor::new(vec![m, n], out)?,
            Op::MatMul { a, b, trans_b },
            needs,
        ))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_ex(a, b, false)
    }

    /// Batched `[B×m×k] · [B×k×n]` (or `[B×n×k]ᵀ` when `trans_b`).
    pub fn batch_matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        expect_rank("batch_matmul", av, 3)?;
        expect_rank("batch_matmul", bv, 3)?;
        let (bs, m, k) = (av.shape()[0], av.shape()[1], av.shape()[2]);
        let (bb, br, bc) = (bv.shape()[0], bv.shape()[1], bv.shape()[2]);
        let (kb, n) = if trans_b { (bc, br) } else { (br, bc) };
        if bs != bb || k != kb {
            return Err(Error::shape("batch_matmul", av.shape(), bv.shape()));
        }
        let mut out = vec![S::zero(); bs * m * n];
        for i in 0..bs {
            let a_i = &av.data()[i * m * k..(i + 1) * m * k];
            let b_i = &bv.data()[i * br * bc..(i + 1) * br * bc];
            let mut bref = MatRef::new(b_i, br, bc);
            if trans_b {
                bref = bref.t();
            }
            gemm(
                MatRef::new(a_i, m, k),
                bref,
                &mut out[i * m * n..(i + 1) * m * n],
                false,
            );
        }
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(
            Tensor::new(vec![bs, m, n], out)?,
            Op::BatchMatMul { a, b, trans_b },
            needs,
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(Error::shape("add", av.shape(), bv.shape()));
        }
        let data = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let value = Tensor::new(av.shape().to_vec(), data)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Add { a, b }, needs))
    }

    /// Adds a vector along the last axis of `x`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        let c = xv.cols();
        if bv.shape() != [c] {
            return Err(Error::shape("add_bias", xv.shape(), bv.shape()));
        }
        let mut data = xv.data().to_vec();
        for row in data.chunks_mut(c.max(1)) {
            for (v, &b) in row.iter_mut().zip(bv.data()) {
                *v += b;
            }
        }
        let value = Tensor::new(xv.shape().to_vec(), data)?;
        let needs = self.needs(x) || self.needs(bias);
        Ok(self.push(value, Op::AddBias { x, bias }, needs))
    }

    /// `x · W + b` for a 2-D `x`.
    pub fn linear(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var> {
        let y = self.matmul(x, weight)?;
        self.add_bias(y, bias)
    }

    pub fn scale(&mut self, x: Var, factor: S) -> Var {
        let value = self.value(x).map(|v| v * factor);
        let needs = self.needs(x);
        self.push(value, Op::Scale { x, factor }, needs)
    }

    /// Exact GELU, `x · Φ(x)`.
    pub fn gelu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(gelu);
        let needs = self.needs(x);
        self.push(value, Op::Gelu { x }, needs)
    }

    /// Softmax over the last axis (max-subtracted).
    pub fn softmax(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let c = xv.cols();
        let mut data = xv.data().to_vec();
        for row in data.chunks_mut(c.max(1)) {
            softmax_in_place(row);
        }
        let value = Tensor::new(xv.shape().to_vec(), data).expect("same shape");
        let needs = self.needs(x);
        self.push(value, Op::Softmax { x }, needs)
    }

    /// Normalizes each row of the last axis, then applies `gain` and `bias`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let (xv, gv, bv) = (self.value(x), self.value(gain), self.value(bias));
        let c = xv.cols();
        if gv.shape() != [c] || bv.shape() != [c] {
            return Err(Error::shape("layer_norm", xv.shape(), gv.shape()));
        }
        let rows = xv.rows();
        let eps = S::lit(eps);
        let n = S::from_usize(c).unwrap();
        let mut normalized = vec![S::zero(); rows * c];
        let mut inv_std = vec![S::zero(); rows];
        let mut out = vec![S::zero(); rows * c];
        for r in 0..rows {
            let row = &xv.data()[r * c..(r + 1) * c];
            let mean = row.iter().copied().sum::<S>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() / n;
            let is = S::one() / (var + eps).sqrt();
            inv_std[r] = is;
            for j in 0..c {
                let h = (row[j] - mean) * is;
                normalized[r * c + j] = h;
                out[r * c + j] = h * gv.data()[j] + bv.data()[j];
            }
        }
        let value = Tensor::new(xv.shape().to_vec(), out)?;
        let needs = self.needs(x) || self.needs(gain) || self.needs(bias);
        Ok(self.push(
            value,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            },
            needs,
        ))
    }

    /// Gathers rows of a `[V×H]` table, producing `[ids.len()×H]`.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let tv = self.value(table);
        expect_rank("embedding", tv, 2)?;
        let (v, h) = (tv.shape()[0], tv.shape()[1]);
        let mut out = Vec::with_capacity(ids.len() * h);
        for &id in ids {
            if id >= v {
                return Err(Error::shape("embedding", tv.shape(), &[id]));
            }
            out.extend_from_slice(&tv.data()[id * h..(id + 1) * h]);
        }
        let value = Tensor::new(vec![ids.len(), h], out)?;
        let needs = self.needs(table);
        Ok(self.push(
            value,
            Op::Embedding {
                table,
                ids: ids.to_vec(),
            },
            needs,
        ))
    }

    /// Inverted dropout. `p == 0` returns `x` unchanged.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, rng: &mut R) -> Var {
        if p <= 0.0 {
            return x;
        }
        let keep = S::lit(1.0 / (1.0 - p));
        let xv = self.value(x);
        let mask: Vec<S> = (0..xv.len())
            .map(|_| {
                if rng.random::<f64>() < p {
                    S::zero()
                } else {
                    keep
                }
            })
            .collect();
        let data = xv.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        let value = Tensor::new(xv.shape().to_vec(), data).expect("same shape");
        let needs = self.needs(x);
        self.push(value, Op::Dropout { x, mask }, needs)
    }

    /// `[B·T × A·D]` → `[B·A × T × D]`.
    pub fn split_heads(&mut self, x: Var, batch: usize, seq: usize, heads: usize) -> Result<Var> {
        let xv = self.value(x);
        expect_rank("split_heads", xv, 2)?;
        let width = xv.shape()[1];
        if xv.shape()[0] != batch * seq || heads == 0 || width % heads != 0 {
            return Err(Error::shape("split_heads", xv.shape(), &[batch, seq, heads]));
        }
        let d = width / heads;
        let mut out = vec![S::zero(); xv.len()];
        for b in 0..batch {
            for t in 0..seq {
                for h in 0..heads {
                    let src = (b * seq + t) * width + h * d;
                    let dst = ((b * heads + h) * seq + t) * d;
                    out[dst..dst + d].copy_from_slice(&xv.data()[src..src + d]);
                }
            }
        }
        let value = Tensor::new(vec![batch * heads, seq, d], out)?;
        let needs = self.needs(x);
        Ok(self.push(
            value,
            Op::SplitHeads {
                x,
                batch,
                seq,
                heads,
            },
            needs,
        ))
    }

    /// Inverse of [`split_heads`](Self::split_heads).
    pub fn merge_heads(&mut self, x: Var, batch: usize, seq: usize, heads: usize) -> Result<Var> {
        let xv = self.value(x);
        expect_rank("merge_heads", xv, 3)?;
        if xv.shape()[0] != batch * heads || xv.shape()[1] != seq {
            return Err(Error::shape("merge_heads", xv.shape(), &[batch, seq, heads]));
        }
        let d = xv.shape()[2];
        let width = heads * d;
        let mut out = vec![S::zero(); xv.len()];
        for b in 0..batch {
            for t in 0..seq {
                for h in 0..heads {
                    let src = ((b * heads + h) * seq + t) * d;
                    let dst = (b * seq + t) * width + h * d;
                    out[dst..dst + d].copy_from_slice(&xv.data()[src..src + d]);
                }
            }
        }
        let value = Tensor::new(vec![batch * seq, width], out)?;
        let needs = self.needs(x);
        Ok(self.push(
            value,
            Op::MergeHeads {
                x,
                batch,
                seq,
                heads,
            },
            needs,
        ))
    }

    /// Adds [`MASKED_LOGIT`] to attention scores `[B·A × T × T]` wherever the
    /// key position is padding (`key_mask[b·T + t] == 0`).
    pub fn mask_keys(&mut self, x: Var, key_mask: &[u8], heads: usize) -> Result<Var> {
        let xv = self.value(x);
        expect_rank("mask_keys", xv, 3)?;
        let (bh, tq, tk) = (xv.shape()[0], xv.shape()[1], xv.shape()[2]);
        if heads == 0 || bh % heads != 0 || key_mask.len() != (bh / heads) * tk {
            return Err(Error::shape("mask_keys", xv.shape(), &[key_mask.len()]));
        }
        let neg = S::lit(MASKED_LOGIT);
        let mut data = xv.data().to_vec();
        for i in 0..bh {
            let b = i / heads;
            for q in 0..tq {
                let row = &mut data[(i * tq + q) * tk..(i * tq + q + 1) * tk];
                for (k, v) in row.iter_mut().enumerate() {
                    if key_mask[b * tk + k] == 0 {
                        *v += neg;
                    }
                }
            }
        }
        let value = Tensor::new(xv.shape().to_vec(), data)?;
        let needs = self.needs(x);
        Ok(self.push(value, Op::MaskKeys { x }, needs))
    }

    /// Selects rows of a 2-D tensor.
    pub fn gather_rows(&mut self, x: Var, rows: &[usize]) -> Result<Var> {
        let xv = self.value(x);
        expect_rank("gather_rows", xv, 2)?;
        let (r, c) = (xv.shape()[0], xv.shape()[1]);
        let mut out = Vec::with_capacity(rows.len() * c);
        for &i in rows {
            if i >= r {
                return Err(Error::shape("gather_rows", xv.shape(), &[i]));
            }
            out.extend_from_slice(&xv.data()[i * c..(i + 1) * c]);
        }
        let value = Tensor::new(vec![rows.len(), c], out)?;
        let needs = self.needs(x);
        Ok(self.push(
            value,
            Op::GatherRows {
                x,
                rows: rows.to_vec(),
            },
            needs,
        ))
    }

    /// Mean negative log-likelihood over rows whose target is not
    /// [`IGNORE_INDEX`]. Returns 0 when every row is ignored.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[i64]) -> Result<Var> {
        let lv = self.value(logits);
        expect_rank("cross_entropy", lv, 2)?;
        let (rows, classes) = (lv.shape()[0], lv.shape()[1]);
        if targets.len() != rows {
            return Err(Error::shape("cross_entropy", lv.shape(), &[targets.len()]));
        }
        let mut probs = lv.data().to_vec();
        let mut total = S::zero();
        let mut count = 0usize;
        for (r, &t) in targets.iter().enumerate() {
            if t == IGNORE_INDEX {
                continue;
            }
            if t < 0 || t as usize >= classes {
                return Err(Error::shape("cross_entropy", lv.shape(), &[t.max(0) as usize]));
            }
            let row = &mut probs[r * classes..(r + 1) * classes];
            let max = row.iter().copied().fold(S::neg_infinity(), S::max);
            let lse = row.iter().map(|&v| (v - max).exp()).sum::<S>().ln() + max;
            total += lse - row[t as usize];
            softmax_in_place(row);
            count += 1;
        }
        let loss = if count == 0 {
            S::zero()
        } else {
            total / S::from_usize(count).unwrap()
        };
        let needs = self.needs(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
                count,
            },
            needs,
        ))
    }

    /// Mean squared error against a constant target.
    pub fn mse(&mut self, pred: Var, target: &[S]) -> Result<Var> {
        let pv = self.value(pred);
        if pv.len() != target.len() || target.is_empty() {
            return Err(Error::shape("mse", pv.shape(), &[target.len()]));
        }
        let n = S::from_usize(target.len()).unwrap();
        let loss = pv
            .data()
            .iter()
            .zip(target)
            .map(|(&p, &t)| (p - t) * (p - t))
            .sum::<S>()
            / n;
        let needs = self.needs(pred);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Mse {
                pred,
                target: target.to_vec(),
            },
            needs,
        ))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<S>> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::shape("backward", lv.shape(), &[]));
        }
        let mut grads: Vec<Option<Tensor<S>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(lv.shape(), S::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads);
            // Intermediate gradients are not exposed; keep only leaves.
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<S>>], v: Var, g: Tensor<S>) {
        if !self.needs(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, node: &Node<S>, g: &Tensor<S>, grads: &mut [Option<Tensor<S>>]) {
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b, trans_b } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k) = (av.shape()[0], av.shape()[1]);
                let (br, bc) = (bv.shape()[0], bv.shape()[1]);
                let n = g.shape()[1];
                let gref = MatRef::new(g.data(), m, n);
                if self.needs(*a) {
                    // dA = dC · Bᵀ   (or dC · B when B was read transposed)
                    let mut da = vec![S::zero(); m * k];
                    let bref = MatRef::new(bv.data(), br, bc);
                    let bref = if *trans_b { bref } else { bref.t() };
                    gemm(gref, bref, &mut da, false);
                    self.accumulate(grads, *a, Tensor::new(vec![m, k], da).unwrap());
                }
                if self.needs(*b) {
                    let mut db = vec![S::zero(); br * bc];
                    let aref = MatRef::new(av.data(), m, k);
                    if *trans_b {
                        // B is [n×k]: dB = dCᵀ · A
                        gemm(gref.t(), aref, &mut db, false);
                    } else {
                        // dB = Aᵀ · dC
                        gemm(aref.t(), gref, &mut db, false);
                    }
                    self.accumulate(grads, *b, Tensor::new(vec![br, bc], db).unwrap());
                }
            }
            Op::BatchMatMul { a, b, trans_b } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (bs, m, k) = (av.shape()[0], av.shape()[1], av.shape()[2]);
                let (br, bc) = (bv.shape()[1], bv.shape()[2]);
                let n = g.shape()[2];
                let mut da = self.needs(*a).then(|| vec![S::zero(); bs * m * k]);
                let mut db = self.needs(*b).then(|| vec![S::zero(); bs * br * bc]);
                for i in 0..bs {
                    let g_i = MatRef::new(&g.data()[i * m * n..(i + 1) * m * n], m, n);
                    let a_i = MatRef::new(&av.data()[i * m * k..(i + 1) * m * k], m, k);
                    let b_i = MatRef::new(&bv.data()[i * br * bc..(i + 1) * br * bc], br, bc);
                    if let Some(da) = da.as_mut() {
                        let bref = if *trans_b { b_i } else { b_i.t() };
                        gemm(g_i, bref, &mut da[i * m * k..(i + 1) * m * k], false);
                    }
                    if let Some(db) = db.as_mut() {
                        let out = &mut db[i * br * bc..(i + 1) * br * bc];
                        if *trans_b {
                            gemm(g_i.t(), a_i, out, false);
                        } else {
                            gemm(a_i.t(), g_i, out, false);
                        }
                    }
                }
                if let Some(da) = da {
                    self.accumulate(grads, *a, Tensor::new(av.shape().to_vec(), da).unwrap());
                }
                if let Some(db) = db {
                    self.accumulate(grads, *b, Tensor::new(bv.shape().to_vec(), db).unwrap());
                }
            }
            Op::Add { a, b } => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::AddBias { x, bias } => {
                if self.needs(*bias) {
                    let c = g.cols();
                    let mut db = vec![S::zero(); c];
                    for row in g.data().chunks(c.max(1)) {
                        for (d, &v) in db.iter_mut().zip(row) {
                            *d += v;
                        }
                    }
                    self.accumulate(grads, *bias, Tensor::new(vec![c], db).unwrap());
                }
                self.accumulate(grads, *x, g.clone());
            }
            Op::Scale { x, factor } => {
                let f = *factor;
                self.accumulate(grads, *x, g.map(|v| v * f));
            }
            Op::Gelu { x } => {
                let xv = self.value(*x);
                let data = xv
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&xi, &gi)| gi * gelu_grad(xi))
                    .collect();
                self.accumulate(grads, *x, Tensor::new(xv.shape().to_vec(), data).unwrap());
            }
            Op::Softmax { x } => {
                let y = &node.value;
                let c = y.cols();
                let mut dx = vec![S::zero(); y.len()];
                for ((yr, gr), dr) in y
                    .data()
                    .chunks(c.max(1))
                    .zip(g.data().chunks(c.max(1)))
                    .zip(dx.chunks_mut(c.max(1)))
                {
                    let dot: S = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    for j in 0..yr.len() {
                        dr[j] = yr[j] * (gr[j] - dot);
                    }
                }
                self.accumulate(grads, *x, Tensor::new(y.shape().to_vec(), dx).unwrap());
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            } => {
                let gv = self.value(*gain);
                let c = gv.len();
                let rows = inv_std.len();
                if self.needs(*gain) || self.needs(*bias) {
                    let mut dg = vec![S::zero(); c];
                    let mut db = vec![S::zero(); c];
                    for r in 0..rows {
                        for j in 0..c {
                            let gi = g.data()[r * c + j];
                            dg[j] += gi * normalized[r * c + j];
                            db[j] += gi;
                        }
                    }
                    self.accumulate(grads, *gain, Tensor::new(vec![c], dg).unwrap());
                    self.accumulate(grads, *bias, Tensor::new(vec![c], db).unwrap());
                }
                if self.needs(*x) {
                    let n = S::from_usize(c).unwrap();
                    let mut dx = vec![S::zero(); rows * c];
                    for r in 0..rows {
                        let xh = &normalized[r * c..(r + 1) * c];
                        let dxh: Vec<S> = (0..c).map(|j| g.data()[r * c + j] * gv.data()[j]).collect();
                        let sum: S = dxh.iter().copied().sum();
                        let dot: S = dxh.iter().zip(xh).map(|(&a, &b)| a * b).sum();
                        for j in 0..c {
                            dx[r * c + j] = inv_std[r] / n * (n * dxh[j] - sum - xh[j] * dot);
                        }
                    }
                    let shape = self.value(*x).shape().to_vec();
                    self.accumulate(grads, *x, Tensor::new(shape, dx).unwrap());
                }
            }
            Op::Embedding { table, ids } => {
                let tv = self.value(*table);
                let h = tv.shape()[1];
                let mut dt = Tensor::zeros(tv.shape());
                for (row, &id) in ids.iter().enumerate() {
                    let dst = &mut dt.data_mut()[id * h..(id + 1) * h];
                    for (d, &v) in dst.iter_mut().zip(&g.data()[row * h..(row + 1) * h]) {
                        *d += v;
                    }
                }
                self.accumulate(grads, *table, dt);
            }
            Op::Dropout { x, mask } => {
                let data = g.data().iter().zip(mask).map(|(&a, &m)| a * m).collect();
                self.accumulate(grads, *x, Tensor::new(g.shape().to_vec(), data).unwrap());
            }
            Op::SplitHeads {
                x,
                batch,
                seq,
                heads,
            } => {
                let width = self.value(*x).shape()[1];
                let d = width / heads;
                let mut dx = vec![S::zero(); g.len()];
                for b in 0..*batch {
                    for t in 0..*seq {
                        for h in 0..*heads {
                            let dst = (b * seq + t) * width + h * d;
                            let src = ((b * heads + h) * seq + t) * d;
                            dx[dst..dst + d].copy_from_slice(&g.data()[src..src + d]);
                        }
                    }
                }
                let shape = self.value(*x).shape().to_vec();
                self.accumulate(grads, *x, Tensor::new(shape, dx).unwrap());
            }
            Op::MergeHeads {
                x,
                batch,
                seq,
                heads,
            } => {
                let d = self.value(*x).shape()[2];
                let width = heads * d;
                let mut dx = vec![S::zero(); g.len()];
                for b in 0..*batch {
                    for t in 0..*seq {
                        for h in 0..*heads {
                            let dst = ((b * heads + h) * seq + t) * d;
                            let src = (b * seq + t) * width + h * d;
                            dx[dst..dst + d].copy_from_slice(&g.data()[src..src + d]);
                        }
                    }
                }
                let shape = self.value(*x).shape().to_vec();
                self.accumulate(grads, *x, Tensor::new(shape, dx).unwrap());
            }
            Op::MaskKeys { x } => {
                self.accumulate(grads, *x, g.clone());
            }
            Op::GatherRows { x, rows } => {
                let xv = self.value(*x);
                let c = xv.shape()[1];
                let mut dx = Tensor::zeros(xv.shape());
                for (k, &r) in rows.iter().enumerate() {
                    let dst = &mut dx.data_mut()[r * c..(r + 1) * c];
                    for (d, &v) in dst.iter_mut().zip(&g.data()[k * c..(k + 1) * c]) {
                        *d += v;
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::CrossEntropy {
                logits,
                targets,
                probs,
                count,
            } => {
                let lv = self.value(*logits);
                let classes = lv.shape()[1];
                let mut dl = vec![S::zero(); lv.len()];
                if *count > 0 {
                    let scale = g.item() / S::from_usize(*count).unwrap();
                    for (r, &t) in targets.iter().enumerate() {
                        if t == IGNORE_INDEX {
                            continue;
                        }
                        for j in 0..classes {
                            let p = probs[r * classes + j];
                            let y = if j == t as usize { S::one() } else { S::zero() };
                            dl[r * classes + j] = (p - y) * scale;
                        }
                    }
                }
                self.accumulate(grads, *logits, Tensor::new(lv.shape().to_vec(), dl).unwrap());
            }
            Op::Mse { pred, target } => {
                let pv = self.value(*pred);
                let scale = g.item() * S::lit(2.0) / S::from_usize(target.len()).unwrap();
                let data = pv
                    .data()
                    .iter()
                    .zip(target)
                    .map(|(&p, &t)| (p - t) * scale)
                    .collect();
                self.accumulate(grads, *pred, Tensor::new(pv.shape().to_vec(), data).unwrap());
            }
        }
    }
}

#[inline]
pub fn gelu<S: Scalar>(x: S) -> S {
    let half = S::lit(0.5);
    half * x * (S::one() + (x * S::lit(std::f64::consts::FRAC_1_SQRT_2)).erf())
}

#[inline]
fn gelu_grad<S: Scalar>(x: S) -> S {
    let cdf = S::lit(0.5) * (S::one() + (x * S::lit(std::f64::consts::FRAC_1_SQRT_2)).erf());
    let pdf = (-(x * x) * S::lit(0.5)).exp() * S::lit(1.0 / (2.0 * std::f64::consts::PI).sqrt());
    cdf + x * pdf
}

pub(crate) fn softmax_in_place<S: Scalar>(row: &mut [S]) {
    let max = row.iter().copied().fold(S::neg_infinity(), S::max);
    let mut sum = S::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}
