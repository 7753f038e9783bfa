//! Tape-based reverse-mode differentiation over [`Tensor`] primitives.
//!
//! A [`Tape`] is an append-only arena of nodes. Forward calls record the
//! operation and its operand ids; [`Tape::grad`] walks the arena backwards
//! from a scalar loss node and accumulates exact reverse-mode gradients.
//! Node ids are topologically ordered by construction, so one reverse sweep
//! suffices. All accumulation loops run in a fixed index order, which makes
//! gradients bit-reproducible on a given platform.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul { a: NodeId, b: NodeId },
    Transpose { a: NodeId },
    Add { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Scale { a: NodeId, c: f64 },
    Tanh { a: NodeId },
    Relu { a: NodeId },
    Ln { a: NodeId },
    SoftmaxRows { a: NodeId },
    Conv1d { input: NodeId, kernel: NodeId, stride: usize },
    GatherRows { a: NodeId, idx: Vec<usize> },
    Reshape { a: NodeId },
    Sum { a: NodeId },
    Mean { a: NodeId },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients of one scalar loss with respect to every tape node.
pub struct Gradients {
    by_node: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient tensor for `id`; zeros if the node does not influence the loss.
    pub fn get(&self, id: NodeId, shape_of: &Tensor) -> Tensor {
        match &self.by_node[id.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape_of.shape().to_vec()),
        }
    }

    pub fn get_opt(&self, id: NodeId) -> Option<&Tensor> {
        self.by_node[id.0].as_ref()
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Record an input tensor (parameter or constant) on the tape.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// `a (p×q) · b (q×r) -> (p×r)`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape().len() != 2 || tb.shape().len() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(Error::Shape(format!(
                "matmul {:?} x {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
        let (p, q, r) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let mut out = vec![0.0; p * r];
        let (da, db) = (ta.data(), tb.data());
        for i in 0..p {
            for k in 0..q {
                let aik = da[i * q + k];
                if aik == 0.0 {
                    continue;
                }
                let brow = &db[k * r..(k + 1) * r];
                let orow = &mut out[i * r..(i + 1) * r];
                for j in 0..r {
                    orow[j] += aik * brow[j];
                }
            }
        }
        Ok(self.push(Tensor::new(vec![p, r], out)?, Op::Matmul { a, b }))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let ta = self.value(a);
        if ta.shape().len() != 2 {
            return Err(Error::Shape(format!("transpose on {:?}", ta.shape())));
        }
        let (r, c) = (ta.shape()[0], ta.shape()[1]);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = ta.data()[i * c + j];
            }
        }
        Ok(self.push(Tensor::new(vec![c, r], out)?, Op::Transpose { a }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::Shape(format!(
                "add {:?} + {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x + y)
            .collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(t, Op::Add { a, b }))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::Shape(format!(
                "mul {:?} * {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x * y)
            .collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(t, Op::Mul { a, b }))
    }

    /// Multiply by a compile-time constant.
    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| c * x).collect();
        let t = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        self.push(t, Op::Scale { a, c })
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x.tanh()).collect();
        let t = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        self.push(t, Op::Tanh { a })
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x.max(0.0)).collect();
        let t = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        self.push(t, Op::Relu { a })
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x.ln()).collect();
        let t = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        self.push(t, Op::Ln { a })
    }

    /// Row-wise softmax of a 1-D or 2-D tensor with an optional feasibility
    /// mask (`true` = allowed). Forbidden entries get probability exactly 0;
    /// each row's allowed entries are shifted by the row max before
    /// exponentiation, so no intermediate overflows.
    pub fn softmax_rows(&mut self, a: NodeId, mask: Option<&[bool]>) -> Result<NodeId> {
        let ta = self.value(a);
        if ta.shape().len() > 2 {
            return Err(Error::Shape(format!("softmax on {:?}", ta.shape())));
        }
        if let Some(m) = mask {
            if m.len() != ta.numel() {
                return Err(Error::Shape(format!(
                    "mask length {} vs tensor {}",
                    m.len(),
                    ta.numel()
                )));
            }
        }
        let (r, c) = (ta.rows(), ta.cols());
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &ta.data()[i * c..(i + 1) * c];
            let allowed = |j: usize| mask.map_or(true, |m| m[i * c + j]);
            let mut max = f64::NEG_INFINITY;
            for j in 0..c {
                if allowed(j) && row[j] > max {
                    max = row[j];
                }
            }
            if max == f64::NEG_INFINITY {
                return Err(Error::DegenerateMask(format!(
                    "softmax row {i} has no allowed entries"
                )));
            }
            let mut sum = 0.0;
            for j in 0..c {
                if allowed(j) {
                    let e = (row[j] - max).exp();
                    out[i * c + j] = e;
                    sum += e;
                }
            }
            for j in 0..c {
                out[i * c + j] /= sum;
            }
        }
        let t = Tensor::new(ta.shape().to_vec(), out)?;
        Ok(self.push(t, Op::SoftmaxRows { a }))
    }

    /// Valid-padding 1-D convolution. `input` is `(L, F_in)`, `kernel` is
    /// `(C_out, ks, F_in)`; output is `((L-ks)/stride + 1, C_out)`.
    pub fn conv1d(&mut self, input: NodeId, kernel: NodeId, stride: usize) -> Result<NodeId> {
        let (ti, tk) = (self.value(input), self.value(kernel));
        if ti.shape().len() != 2 || tk.shape().len() != 3 {
            return Err(Error::Shape(format!(
                "conv1d input {:?}, kernel {:?}",
                ti.shape(),
                tk.shape()
            )));
        }
        let (len, fin) = (ti.shape()[0], ti.shape()[1]);
        let (cout, ks, kf) = (tk.shape()[0], tk.shape()[1], tk.shape()[2]);
        if kf != fin {
            return Err(Error::Shape(format!(
                "conv1d feature dims: input {fin}, kernel {kf}"
            )));
        }
        if stride == 0 {
            return Err(Error::Parameter("conv1d stride must be >= 1".into()));
        }
        if len < ks {
            return Err(Error::Shape(format!(
                "conv1d signal length {len} shorter than kernel {ks}"
            )));
        }
        let out_len = (len - ks) / stride + 1;
        let mut out = vec![0.0; out_len * cout];
        for p in 0..out_len {
            for c in 0..cout {
                let mut acc = 0.0;
                for t in 0..ks {
                    let irow = &ti.data()[(p * stride + t) * fin..(p * stride + t + 1) * fin];
                    let krow = &tk.data()[(c * ks + t) * fin..(c * ks + t + 1) * fin];
                    for f in 0..fin {
                        acc += irow[f] * krow[f];
                    }
                }
                out[p * cout + c] = acc;
            }
        }
        let t = Tensor::new(vec![out_len, cout], out)?;
        Ok(self.push(
            t,
            Op::Conv1d {
                input,
                kernel,
                stride,
            },
        ))
    }

    /// Stack rows `idx` of a 2-D tensor; indices may repeat.
    pub fn gather_rows(&mut self, a: NodeId, idx: &[usize]) -> Result<NodeId> {
        let ta = self.value(a);
        if ta.shape().len() != 2 {
            return Err(Error::Shape(format!("gather_rows on {:?}", ta.shape())));
        }
        let (r, c) = (ta.shape()[0], ta.shape()[1]);
        if let Some(&bad) = idx.iter().find(|&&i| i >= r) {
            return Err(Error::Parameter(format!(
                "gather index {bad} out of range 0..{r}"
            )));
        }
        let mut out = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            out.extend_from_slice(&ta.data()[i * c..(i + 1) * c]);
        }
        let t = Tensor::new(vec![idx.len(), c], out)?;
        Ok(self.push(
            t,
            Op::GatherRows {
                a,
                idx: idx.to_vec(),
            },
        ))
    }

    /// Reinterpret the flat buffer under a new shape (row-major, free).
    pub fn reshape(&mut self, a: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        let ta = self.value(a);
        let numel: usize = shape.iter().product();
        if numel != ta.numel() {
            return Err(Error::Shape(format!(
                "reshape {:?} -> {:?}",
                ta.shape(),
                shape
            )));
        }
        let t = Tensor::new(shape, ta.data().to_vec())?;
        Ok(self.push(t, Op::Reshape { a }))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum { a })
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let ta = self.value(a);
        let s: f64 = ta.data().iter().sum();
        let n = ta.numel() as f64;
        self.push(Tensor::scalar(s / n), Op::Mean { a })
    }

    /// Reverse-mode gradients of the scalar node `loss` with respect to every
    /// node on the tape.
    pub fn grad(&self, loss: NodeId) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Contract(format!(
                "grad requires a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.backward_step(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { by_node: grads })
    }

    fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        match &mut grads[id.0] {
            Some(existing) => {
                for (e, d) in existing.data_mut().iter_mut().zip(delta.data()) {
                    *e += d;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    fn backward_step(&self, id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::Matmul { a, b } => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (p, q, r) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                // dA = G · B^T
                let mut da = vec![0.0; p * q];
                for i in 0..p {
                    for k in 0..q {
                        let mut acc = 0.0;
                        for j in 0..r {
                            acc += g.data()[i * r + j] * tb.data()[k * r + j];
                        }
                        da[i * q + k] = acc;
                    }
                }
                // dB = A^T · G
                let mut db = vec![0.0; q * r];
                for i in 0..p {
                    for k in 0..q {
                        let aik = ta.data()[i * q + k];
                        if aik == 0.0 {
                            continue;
                        }
                        for j in 0..r {
                            db[k * r + j] += aik * g.data()[i * r + j];
                        }
                    }
                }
                Self::accumulate(grads, *a, Tensor::new(vec![p, q], da).unwrap());
                Self::accumulate(grads, *b, Tensor::new(vec![q, r], db).unwrap());
            }
            Op::Transpose { a } => {
                let ta = self.value(*a);
                let (r, c) = (ta.shape()[0], ta.shape()[1]);
                let mut da = vec![0.0; r * c];
                for i in 0..c {
                    for j in 0..r {
                        da[j * c + i] = g.data()[i * r + j];
                    }
                }
                Self::accumulate(grads, *a, Tensor::new(vec![r, c], da).unwrap());
            }
            Op::Add { a, b } => {
                Self::accumulate(grads, *a, g.clone());
                Self::accumulate(grads, *b, g.clone());
            }
            Op::Mul { a, b } => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let da: Vec<f64> = g.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
                let db: Vec<f64> = g.data().iter().zip(ta.data()).map(|(x, y)| x * y).collect();
                Self::accumulate(grads, *a, Tensor::new(ta.shape().to_vec(), da).unwrap());
                Self::accumulate(grads, *b, Tensor::new(tb.shape().to_vec(), db).unwrap());
            }
            Op::Scale { a, c } => {
                let da: Vec<f64> = g.data().iter().map(|x| c * x).collect();
                let shape = self.value(*a).shape().to_vec();
                Self::accumulate(grads, *a, Tensor::new(shape, da).unwrap());
            }
            Op::Tanh { a } => {
                let y = &self.nodes[id].value;
                let da: Vec<f64> = g
                    .data()
                    .iter()
                    .zip(y.data())
                    .map(|(gi, yi)| gi * (1.0 - yi * yi))
                    .collect();
                let shape = self.value(*a).shape().to_vec();
                Self::accumulate(grads, *a, Tensor::new(shape, da).unwrap());
            }
            Op::Relu { a } => {
                let ta = self.value(*a);
                let da: Vec<f64> = g
                    .data()
                    .iter()
                    .zip(ta.data())
                    .map(|(gi, xi)| if *xi > 0.0 { *gi } else { 0.0 })
                    .collect();
                Self::accumulate(grads, *a, Tensor::new(ta.shape().to_vec(), da).unwrap());
            }
            Op::Ln { a } => {
                let ta = self.value(*a);
                let da: Vec<f64> = g
                    .data()
                    .iter()
                    .zip(ta.data())
                    .map(|(gi, xi)| gi / xi)
                    .collect();
                Self::accumulate(grads, *a, Tensor::new(ta.shape().to_vec(), da).unwrap());
            }
            Op::SoftmaxRows { a } => {
                // dx_j = y_j * (g_j - sum_k g_k y_k); masked entries have y=0.
                let y = &self.nodes[id].value;
                let (r, c) = (y.rows(), y.cols());
                let mut da = vec![0.0; r * c];
                for i in 0..r {
                    let yrow = &y.data()[i * c..(i + 1) * c];
                    let grow = &g.data()[i * c..(i + 1) * c];
                    let dot: f64 = yrow.iter().zip(grow).map(|(yj, gj)| yj * gj).sum();
                    for j in 0..c {
                        da[i * c + j] = yrow[j] * (grow[j] - dot);
                    }
                }
                let shape = self.value(*a).shape().to_vec();
                Self::accumulate(grads, *a, Tensor::new(shape, da).unwrap());
            }
            Op::Conv1d {
                input,
                kernel,
                stride,
            } => {
                let (ti, tk) = (self.value(*input), self.value(*kernel));
                let (len, fin) = (ti.shape()[0], ti.shape()[1]);
                let (cout, ks) = (tk.shape()[0], tk.shape()[1]);
                let out_len = (len - ks) / stride + 1;
                let mut di = vec![0.0; len * fin];
                let mut dk = vec![0.0; cout * ks * fin];
                for p in 0..out_len {
                    for c in 0..cout {
                        let go = g.data()[p * cout + c];
                        if go == 0.0 {
                            continue;
                        }
                        for t in 0..ks {
                            let ibase = (p * stride + t) * fin;
                            let kbase = (c * ks + t) * fin;
                            for f in 0..fin {
                                di[ibase + f] += go * tk.data()[kbase + f];
                                dk[kbase + f] += go * ti.data()[ibase + f];
                            }
                        }
                    }
                }
                Self::accumulate(grads, *input, Tensor::new(vec![len, fin], di).unwrap());
                Self::accumulate(grads, *kernel, Tensor::new(vec![cout, ks, fin], dk).unwrap());
            }
            Op::GatherRows { a, idx } => {
                let ta = self.value(*a);
                let (r, c) = (ta.shape()[0], ta.shape()[1]);
                let mut da = vec![0.0; r * c];
                for (out_row, &src) in idx.iter().enumerate() {
                    for j in 0..c {
                        da[src * c + j] += g.data()[out_row * c + j];
                    }
                }
                Self::accumulate(grads, *a, Tensor::new(vec![r, c], da).unwrap());
            }
            Op::Reshape { a } => {
                let shape = self.value(*a).shape().to_vec();
                Self::accumulate(grads, *a, Tensor::new(shape, g.data().to_vec()).unwrap());
            }
            Op::Sum { a } => {
                let ta = self.value(*a);
                let da = vec![g.item(); ta.numel()];
                Self::accumulate(grads, *a, Tensor::new(ta.shape().to_vec(), da).unwrap());
            }
            Op::Mean { a } => {
                let ta = self.value(*a);
                let da = vec![g.item() / ta.numel() as f64; ta.numel()];
                Self::accumulate(grads, *a, Tensor::new(ta.shape().to_vec(), da).unwrap());
            }
        }
    }
}
