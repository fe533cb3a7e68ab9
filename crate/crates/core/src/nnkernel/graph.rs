use std::collections::HashMap;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// Named trainable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        assert!(
            !self.names.contains(&name),
            "duplicate parameter name {name}"
        );
        self.names.push(name);
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// Gradient buffers shaped like a [`Params`] set.
#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    tensors: Vec<Tensor>,
}

impl Grads {
    pub fn zeros_like(params: &Params) -> Self {
        Grads {
            tensors: params
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.shape().to_vec()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.data_mut().fill(0.0);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for t in &mut self.tensors {
            for x in t.data_mut() {
                *x *= c;
            }
        }
    }

    pub fn add(&mut self, other: &Grads) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b);
        }
    }
}

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    Row(Var, usize),
    Reshape(Var),
    Conv1d { x: Var, w: Var, b: Var, width: usize },
    /// Source index in the input for every output element.
    MaxSelect(Var, Vec<usize>),
    Softmax(Var),
    CrossEntropy { logits: Var, target: usize, probs: Vec<f64> },
    Dropout(Var, Vec<f64>),
    Sum(Var),
}

struct Node {
    value: Tensor,
    op: Op,
}

/// A dynamically built computation graph. Nodes are appended in evaluation
/// order, so reverse insertion order is a valid reverse topological order.
pub struct Graph {
    nodes: Vec<Node>,
    param_vars: HashMap<ParamId, Var>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `c[m,n] += a[m,k] * b[k,n]`
fn matmul_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for (p, &aik) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cj, bj) in crow.iter_mut().zip(brow) {
                *cj += aik * bj;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            param_vars: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// A constant leaf. Gradients flow into it but go nowhere else.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    /// The graph node of a parameter, created on first use.
    pub fn param(&mut self, params: &Params, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let v = self.push(params.get(id).clone(), Op::Param(id));
        self.param_vars.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape().len() != 2 || tb.shape().len() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(Error::shape(
                "matmul",
                format!("{:?} x {:?}", ta.shape(), tb.shape()),
            ));
        }
        let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let mut out = vec![0.0; m * n];
        matmul_acc(ta.data(), tb.data(), &mut out, m, k, n);
        Ok(self.push(Tensor::from_vec(vec![m, n], out), Op::MatMul(a, b)))
    }

    fn zip_with(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape(name, ta, tb)?;
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let t = Tensor::from_vec(ta.shape().to_vec(), data);
        Ok(self.push(t, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Adds a `[1, n]` bias row to every row of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        let n = tx.cols();
        if tb.shape() != [1, n] {
            return Err(Error::shape(
                "add_bias",
                format!("bias {:?} for input {:?}", tb.shape(), tx.shape()),
            ));
        }
        let mut data = tx.data().to_vec();
        for row in data.chunks_exact_mut(n) {
            for (r, bj) in row.iter_mut().zip(tb.data()) {
                *r += bj;
            }
        }
        let t = Tensor::from_vec(tx.shape().to_vec(), data);
        Ok(self.push(t, Op::AddBias(x, b)))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let tx = self.value(x);
        let t = Tensor::from_vec(tx.shape().to_vec(), tx.data().iter().map(|&v| f(v)).collect());
        self.push(t, op)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.map(x, |v| v * c, Op::Scale(x, c))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.map(x, f64::tanh, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    /// Concatenates along the column axis; all inputs need the same rows.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("concat", "no inputs"))?;
        let rows = self.value(*first).rows();
        if let Some(bad) = parts.iter().find(|&&p| self.value(p).rows() != rows) {
            return Err(Error::shape(
                "concat",
                format!("{} rows vs {:?}", rows, self.value(*bad).shape()),
            ));
        }
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        Ok(self.push(
            Tensor::from_vec(vec![rows, total], data),
            Op::ConcatCols(parts.to_vec()),
        ))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let tx = self.value(x);
        let cols = tx.cols();
        if len == 0 || start + len > cols {
            return Err(Error::shape(
                "slice_cols",
                format!("columns {start}..{} of {cols}", start + len),
            ));
        }
        let mut data = Vec::with_capacity(tx.rows() * len);
        for r in 0..tx.rows() {
            data.extend_from_slice(&tx.row(r)[start..start + len]);
        }
        let t = Tensor::from_vec(vec![tx.rows(), len], data);
        Ok(self.push(t, Op::SliceCols(x, start)))
    }

    /// Row `i` of `x` as a `[1, cols]` tensor.
    pub fn row(&mut self, x: Var, i: usize) -> Result<Var> {
        let tx = self.value(x);
        if i >= tx.rows() {
            return Err(Error::shape(
                "row",
                format!("row {i} of {:?}", tx.shape()),
            ));
        }
        let t = Tensor::row_vector(tx.row(i).to_vec());
        Ok(self.push(t, Op::Row(x, i)))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let tx = self.value(x);
        if shape.iter().product::<usize>() != tx.len() {
            return Err(Error::shape(
                "reshape",
                format!("{:?} to {shape:?}", tx.shape()),
            ));
        }
        let t = tx.clone().reshaped(shape);
        Ok(self.push(t, Op::Reshape(x)))
    }

    /// Valid 1-D convolution over the row (token) axis.
    ///
    /// `x` is `[n, d]`, `w` is `[filters, width * d]` (each filter is a
    /// flattened `width x d` window) and `b` is `[1, filters]`. The result is
    /// `[n - width + 1, filters]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var, width: usize) -> Result<Var> {
        let (tx, tw, tb) = (self.value(x), self.value(w), self.value(b));
        let (n, d) = (tx.rows(), tx.cols());
        let f = tw.rows();
        if width == 0 || n < width {
            return Err(Error::shape(
                "conv1d",
                format!("width {width} over {n} positions"),
            ));
        }
        if tw.cols() != width * d || tb.shape() != [1, f] {
            return Err(Error::shape(
                "conv1d",
                format!(
                    "input {:?}, filters {:?}, bias {:?}, width {width}",
                    tx.shape(),
                    tw.shape(),
                    tb.shape()
                ),
            ));
        }
        let positions = n - width + 1;
        let mut out = Vec::with_capacity(positions * f);
        let xd = tx.data();
        for p in 0..positions {
            let window = &xd[p * d..(p + width) * d];
            for k in 0..f {
                out.push(tb.data()[k] + dot(window, tw.row(k)));
            }
        }
        let t = Tensor::from_vec(vec![positions, f], out);
        Ok(self.push(t, Op::Conv1d { x, w, b, width }))
    }

    /// Max over non-overlapping row windows of `window`; a shorter tail
    /// window is kept.
    pub fn maxpool1d(&mut self, x: Var, window: usize) -> Result<Var> {
        if window == 0 {
            return Err(Error::shape("maxpool1d", "window 0"));
        }
        let tx = self.value(x);
        let (n, c) = (tx.rows(), tx.cols());
        let out_rows = n.div_ceil(window);
        let mut out = Vec::with_capacity(out_rows * c);
        let mut src = Vec::with_capacity(out_rows * c);
        for o in 0..out_rows {
            let lo = o * window;
            let hi = (lo + window).min(n);
            for j in 0..c {
                let mut best = lo * c + j;
                for r in lo + 1..hi {
                    if tx.data()[r * c + j] > tx.data()[best] {
                        best = r * c + j;
                    }
                }
                out.push(tx.data()[best]);
                src.push(best);
            }
        }
        let t = Tensor::from_vec(vec![out_rows, c], out);
        Ok(self.push(t, Op::MaxSelect(x, src)))
    }

    /// Column-wise maximum over all rows, `[n, c] -> [1, c]`.
    pub fn max_over_time(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let (n, c) = (tx.rows(), tx.cols());
        let mut out = Vec::with_capacity(c);
        let mut src = Vec::with_capacity(c);
        for j in 0..c {
            let mut best = j;
            for r in 1..n {
                if tx.data()[r * c + j] > tx.data()[best] {
                    best = r * c + j;
                }
            }
            out.push(tx.data()[best]);
            src.push(best);
        }
        self.push(Tensor::row_vector(out), Op::MaxSelect(x, src))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let c = tx.cols();
        let mut data = Vec::with_capacity(tx.len());
        for r in 0..tx.rows() {
            data.extend(softmax_row(tx.row(r)));
        }
        debug_assert_eq!(data.len(), tx.rows() * c);
        let t = Tensor::from_vec(tx.shape().to_vec(), data);
        self.push(t, Op::Softmax(x))
    }

    /// Negative log-likelihood of `target` under the softmax of a `[1, c]`
    /// logit row; the softmax is folded in for numerical stability.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let tl = self.value(logits);
        if tl.rows() != 1 || target >= tl.cols() {
            return Err(Error::shape(
                "cross_entropy",
                format!("target {target} for logits {:?}", tl.shape()),
            ));
        }
        let row = tl.row(0);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
        let loss = lse - row[target];
        let probs = softmax_row(row);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                target,
                probs,
            },
        ))
    }

    /// Inverted dropout. With `rng` present (training) each entry is zeroed
    /// with probability `p` and survivors are scaled by `1 / (1 - p)`;
    /// without it the input is returned unchanged.
    pub fn dropout(&mut self, x: Var, p: f64, rng: Option<&mut Rng>) -> Var {
        let Some(rng) = rng else { return x };
        if p <= 0.0 {
            return x;
        }
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..self.value(x).len())
            .map(|_| if rng::unit(rng) < keep { 1.0 / keep } else { 0.0 })
            .collect();
        self.dropout_with_mask(x, mask)
    }

    pub fn dropout_with_mask(&mut self, x: Var, mask: Vec<f64>) -> Var {
        let tx = self.value(x);
        assert_eq!(mask.len(), tx.len());
        let data = tx.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let t = Tensor::from_vec(tx.shape().to_vec(), data);
        self.push(t, Op::Dropout(x, mask))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.value(x).len() as f64;
        let s = self.sum(x);
        self.scale(s, 1.0 / n)
    }

    /// Gradients of the scalar `loss` with respect to every node, indexed by
    /// node. Nodes that do not influence the loss get `None`.
    pub fn gradients(&self, loss: Var) -> Result<Vec<Option<Tensor>>> {
        let tl = self.value(loss);
        if tl.len() != 1 {
            return Err(Error::shape(
                "backward",
                format!("loss must be scalar, got {:?}", tl.shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_vec(tl.shape().to_vec(), vec![1.0]));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(grads)
    }

    /// Gradient of `loss` with respect to `v`, zeros if unrelated.
    pub fn grad_of(grads: &[Option<Tensor>], graph: &Graph, v: Var) -> Tensor {
        grads[v.0]
            .clone()
            .unwrap_or_else(|| Tensor::zeros(graph.value(v).shape().to_vec()))
    }

    /// Backpropagates `loss` and adds the parameter gradients into `out`.
    pub fn backward(&self, loss: Var, out: &mut Grads) -> Result<()> {
        let grads = self.gradients(loss)?;
        for (node, g) in self.nodes.iter().zip(&grads) {
            if let (Op::Param(id), Some(g)) = (&node.op, g) {
                out.tensors[id.0].add_assign(g);
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[i];
        let gd = g.data();
        match &node.op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                {
                    let ga = self.slot(grads, *a);
                    for r in 0..m {
                        let grow = &gd[r * n..(r + 1) * n];
                        for p in 0..k {
                            ga[r * k + p] += dot(grow, &tb.data()[p * n..(p + 1) * n]);
                        }
                    }
                }
                let gb = self.slot(grads, *b);
                // gb[k, n] += a^T g
                for r in 0..m {
                    let grow = &gd[r * n..(r + 1) * n];
                    for p in 0..k {
                        let aik = ta.data()[r * k + p];
                        if aik == 0.0 {
                            continue;
                        }
                        for (dst, gv) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                            *dst += aik * gv;
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                axpy(self.slot(grads, *a), gd, 1.0);
                axpy(self.slot(grads, *b), gd, 1.0);
            }
            Op::Sub(a, b) => {
                axpy(self.slot(grads, *a), gd, 1.0);
                axpy(self.slot(grads, *b), gd, -1.0);
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                for ((dst, gv), y) in self.slot(grads, *a).iter_mut().zip(gd).zip(tb.data()) {
                    *dst += gv * y;
                }
                for ((dst, gv), x) in self.slot(grads, *b).iter_mut().zip(gd).zip(ta.data()) {
                    *dst += gv * x;
                }
            }
            Op::AddBias(x, b) => {
                axpy(self.slot(grads, *x), gd, 1.0);
                let n = self.value(*b).len();
                let gb = self.slot(grads, *b);
                for row in gd.chunks_exact(n) {
                    for (dst, gv) in gb.iter_mut().zip(row) {
                        *dst += gv;
                    }
                }
            }
            Op::Scale(x, c) => axpy(self.slot(grads, *x), gd, *c),
            Op::Tanh(x) => {
                let y = node.value.data();
                for ((dst, gv), yv) in self.slot(grads, *x).iter_mut().zip(gd).zip(y) {
                    *dst += gv * (1.0 - yv * yv);
                }
            }
            Op::Sigmoid(x) => {
                let y = node.value.data();
                for ((dst, gv), yv) in self.slot(grads, *x).iter_mut().zip(gd).zip(y) {
                    *dst += gv * yv * (1.0 - yv);
                }
            }
            Op::Relu(x) => {
                let xin = self.value(*x).data();
                for ((dst, gv), xv) in self.slot(grads, *x).iter_mut().zip(gd).zip(xin) {
                    if *xv > 0.0 {
                        *dst += gv;
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let rows = node.value.rows();
                let total = node.value.cols();
                let mut offset = 0;
                for p in parts {
                    let c = self.value(*p).cols();
                    let gp = self.slot(grads, *p);
                    for r in 0..rows {
                        let src = &gd[r * total + offset..r * total + offset + c];
                        axpy(&mut gp[r * c..(r + 1) * c], src, 1.0);
                    }
                    offset += c;
                }
            }
            Op::SliceCols(x, start) => {
                let len = node.value.cols();
                let cols = self.value(*x).cols();
                let gx = self.slot(grads, *x);
                for (r, grow) in gd.chunks_exact(len).enumerate() {
                    axpy(&mut gx[r * cols + start..r * cols + start + len], grow, 1.0);
                }
            }
            Op::Row(x, r) => {
                let cols = self.value(*x).cols();
                axpy(&mut self.slot(grads, *x)[r * cols..(r + 1) * cols], gd, 1.0);
            }
            Op::Reshape(x) => axpy(self.slot(grads, *x), gd, 1.0),
            Op::Conv1d { x, w, b, width } => {
                let (tx, tw) = (self.value(*x), self.value(*w));
                let d = tx.cols();
                let f = tw.rows();
                let ww = width * d;
                let positions = node.value.rows();
                {
                    let gb = self.slot(grads, *b);
                    for row in gd.chunks_exact(f) {
                        axpy(gb, row, 1.0);
                    }
                }
                {
                    let gw = self.slot(grads, *w);
                    for p in 0..positions {
                        let window = &tx.data()[p * d..p * d + ww];
                        for k in 0..f {
                            let gv = gd[p * f + k];
                            if gv != 0.0 {
                                axpy(&mut gw[k * ww..(k + 1) * ww], window, gv);
                            }
                        }
                    }
                }
                let gx = self.slot(grads, *x);
                for p in 0..positions {
                    let gwin = &mut gx[p * d..p * d + ww];
                    for k in 0..f {
                        let gv = gd[p * f + k];
                        if gv != 0.0 {
                            axpy(gwin, tw.row(k), gv);
                        }
                    }
                }
            }
            Op::MaxSelect(x, src) => {
                let gx = self.slot(grads, *x);
                for (gv, &s) in gd.iter().zip(src) {
                    gx[s] += gv;
                }
            }
            Op::Softmax(x) => {
                let y = &node.value;
                let c = y.cols();
                let gx = self.slot(grads, *x);
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let gr = &gd[r * c..(r + 1) * c];
                    let s = dot(gr, yr);
                    for j in 0..c {
                        gx[r * c + j] += yr[j] * (gr[j] - s);
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                target,
                probs,
            } => {
                let gv = gd[0];
                let gl = self.slot(grads, *logits);
                for (j, (dst, p)) in gl.iter_mut().zip(probs).enumerate() {
                    let onehot = if j == *target { 1.0 } else { 0.0 };
                    *dst += gv * (p - onehot);
                }
            }
            Op::Dropout(x, mask) => {
                for ((dst, gv), m) in self.slot(grads, *x).iter_mut().zip(gd).zip(mask) {
                    *dst += gv * m;
                }
            }
            Op::Sum(x) => {
                let gv = gd[0];
                for dst in self.slot(grads, *x) {
                    *dst += gv;
                }
            }
        }
    }

    fn slot<'a>(&self, grads: &'a mut [Option<Tensor>], v: Var) -> &'a mut [f64] {
        grads[v.0]
            .get_or_insert_with(|| Tensor::zeros(self.nodes[v.0].value.shape().to_vec()))
            .data_mut()
    }
}

fn axpy(dst: &mut [f64], src: &[f64], a: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

pub(crate) fn softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
