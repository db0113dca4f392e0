use std::sync::Arc;

use rand::Rng;

use super::{
    column_moments, log_softmax_rows, matmul_into, matmul_nt_into, matmul_tn_into, softmax_rows, ParamId, Params,
    SparseMatrix, Tensor, TensorError, TensorResult,
};

/// Handle of a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Targets of [`Tape::cross_entropy`].
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// One class index per row.
    Hard(Vec<usize>),
    /// One distribution per row; each row must sum to 1.
    Soft(Tensor),
}

impl Targets {
    fn to_dense(&self, rows: usize, classes: usize) -> TensorResult<Tensor> {
        match self {
            Targets::Hard(labels) => {
                if labels.len() != rows {
                    return Err(TensorError::InvalidTarget(format!(
                        "{} labels for {rows} rows",
                        labels.len()
                    )));
                }
                let mut t = Tensor::zeros(rows, classes);
                for (r, &y) in labels.iter().enumerate() {
                    if y >= classes {
                        return Err(TensorError::InvalidTarget(format!("label {y} outside [0, {classes})")));
                    }
                    t.set(r, y, 1.0);
                }
                Ok(t)
            }
            Targets::Soft(t) => {
                if t.shape() != [rows, classes] {
                    return Err(TensorError::ShapeMismatch {
                        op: "cross_entropy",
                        left: [rows, classes],
                        right: t.shape(),
                    });
                }
                for r in 0..rows {
                    let row = t.row(r);
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&x| x < 0.0) {
                        return Err(TensorError::InvalidTarget(format!(
                            "soft target row {r} is not a distribution (sum {sum})"
                        )));
                    }
                }
                Ok(t.clone())
            }
        }
    }
}

enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    SparseMatMul(Arc<SparseMatrix>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    MulRow(Var, Var),
    /// Per-column `1 / sqrt(var + eps)` of the input.
    Standardize(Var, Vec<f64>),
    Relu(Var),
    RowSoftmax(Var),
    Log(Var),
    Dropout(Var, Vec<f64>),
    SegmentSum(Var, Vec<usize>),
    Concat(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    Sum(Var),
    Mean(Var),
    /// Stores `softmax(logits) - targets`.
    CrossEntropy(Var, Tensor),
}

struct Node {
    op: Op,
    /// `None` for parameters, whose values live in the borrowed store.
    value: Option<Tensor>,
    needs_grad: bool,
}

/// Records the forward computation in execution order; [`Tape::backward`]
/// replays it in exact reverse.
pub struct Tape<'p> {
    params: &'p Params,
    nodes: Vec<Node>,
}

/// Gradient of a scalar loss with respect to every parameter of a store.
/// Parameters the loss does not reach get zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.grads.iter()
    }

    pub fn global_norm(&self) -> f64 {
        self.grads
            .iter()
            .flat_map(|g| g.data())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p Params) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p Params {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.op, &node.value) {
            (Op::Param(id), _) => self.params.get(*id),
            (_, Some(t)) => t,
            (_, None) => unreachable!("non-parameter node without a value"),
        }
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.value(v).shape()
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, name: &'static str, op: Op, value: Tensor, needs_grad: bool) -> TensorResult<Var> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: name });
        }
        self.nodes.push(Node {
            op,
            value: Some(value),
            needs_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn mismatch(op: &'static str, a: [usize; 2], b: [usize; 2]) -> TensorError {
        TensorError::ShapeMismatch { op, left: a, right: b }
    }

    pub fn constant(&mut self, value: Tensor) -> TensorResult<Var> {
        self.push("constant", Op::Constant, value, false)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> TensorResult<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.rows() {
            return Err(Self::mismatch("matmul", x.shape(), y.shape()));
        }
        let mut out = Tensor::zeros(x.rows(), y.cols());
        matmul_into(x, y, &mut out);
        let ng = self.needs(a) || self.needs(b);
        self.push("matmul", Op::MatMul(a, b), out, ng)
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> TensorResult<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.cols() {
            return Err(Self::mismatch("matmul_t", x.shape(), y.shape()));
        }
        let mut out = Tensor::zeros(x.rows(), y.rows());
        matmul_nt_into(x, y, &mut out);
        let ng = self.needs(a) || self.needs(b);
        self.push("matmul_t", Op::MatMulNT(a, b), out, ng)
    }

    /// `sparse · b` where the sparse operand is a constant.
    pub fn sparse_matmul(&mut self, sparse: Arc<SparseMatrix>, b: Var) -> TensorResult<Var> {
        let out = sparse.matmul(self.value(b))?;
        let ng = self.needs(b);
        self.push("sparse_matmul", Op::SparseMatMul(sparse, b), out, ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> TensorResult<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(Self::mismatch("add", x.shape(), y.shape()));
        }
        let mut out = x.clone();
        out.add_assign(y);
        let ng = self.needs(a) || self.needs(b);
        self.push("add", Op::Add(a, b), out, ng)
    }

    /// Add a `1 × cols` row vector to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> TensorResult<Var> {
        let (x, b) = (self.value(a), self.value(row));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(Self::mismatch("add_row", x.shape(), b.shape()));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, &v) in out.row_mut(r).iter_mut().zip(b.data()) {
                *o += v;
            }
        }
        let ng = self.needs(a) || self.needs(row);
        self.push("add_row", Op::AddRow(a, row), out, ng)
    }

    /// Multiply every row of `a` elementwise by a `1 × cols` row vector.
    pub fn mul_row(&mut self, a: Var, row: Var) -> TensorResult<Var> {
        let (x, b) = (self.value(a), self.value(row));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(Self::mismatch("mul_row", x.shape(), b.shape()));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, &v) in out.row_mut(r).iter_mut().zip(b.data()) {
                *o *= v;
            }
        }
        let ng = self.needs(a) || self.needs(row);
        self.push("mul_row", Op::MulRow(a, row), out, ng)
    }

    /// Shift and scale each column of `a` to zero mean and unit variance
    /// using the statistics of its own rows (biased variance).
    pub fn standardize_columns(&mut self, a: Var, eps: f64) -> TensorResult<Var> {
        let x = self.value(a);
        let (mean, var) = column_moments(x);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((o, m), s) in out.row_mut(r).iter_mut().zip(&mean).zip(&inv_std) {
                *o = (*o - m) * s;
            }
        }
        let ng = self.needs(a);
        self.push("standardize_columns", Op::Standardize(a, inv_std), out, ng)
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> TensorResult<Var> {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|x| *x *= factor);
        let ng = self.needs(a);
        self.push("scale", Op::Scale(a, factor), out, ng)
    }

    pub fn relu(&mut self, a: Var) -> TensorResult<Var> {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|x| *x = x.max(0.0));
        let ng = self.needs(a);
        self.push("relu", Op::Relu(a), out, ng)
    }

    pub fn row_softmax(&mut self, a: Var) -> TensorResult<Var> {
        let out = softmax_rows(self.value(a));
        let ng = self.needs(a);
        self.push("row_softmax", Op::RowSoftmax(a), out, ng)
    }

    pub fn log(&mut self, a: Var) -> TensorResult<Var> {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|x| *x = x.ln());
        let ng = self.needs(a);
        self.push("log", Op::Log(a), out, ng)
    }

    /// Inverted dropout: at train time each entry is zeroed with probability
    /// `rate` and survivors are scaled by `1 / (1 - rate)`. Identity otherwise.
    pub fn dropout<R: Rng>(&mut self, a: Var, rate: f64, train: bool, rng: &mut R) -> TensorResult<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::InvalidRate(rate));
        }
        if !train || rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - rate);
        let x = self.value(a);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let mut out = x.clone();
        for (o, m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        let ng = self.needs(a);
        self.push("dropout", Op::Dropout(a, mask), out, ng)
    }

    /// Sum rows of `a` that share a segment id into `segments` output rows.
    pub fn segment_sum(&mut self, a: Var, segment_ids: &[usize], segments: usize) -> TensorResult<Var> {
        let x = self.value(a);
        if segment_ids.len() != x.rows() {
            return Err(Self::mismatch("segment_sum", x.shape(), [segment_ids.len(), 1]));
        }
        let mut out = Tensor::zeros(segments, x.cols());
        for (r, &s) in segment_ids.iter().enumerate() {
            if s >= segments {
                return Err(TensorError::InvalidSegment { id: s, segments });
            }
            for (o, &v) in out.row_mut(s).iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        let ng = self.needs(a);
        self.push("segment_sum", Op::SegmentSum(a, segment_ids.to_vec()), out, ng)
    }

    /// Column-wise concatenation of tensors with equal row counts.
    pub fn concat(&mut self, parts: &[Var]) -> TensorResult<Var> {
        let Some(&first) = parts.first() else {
            return Err(Self::mismatch("concat", [0, 0], [0, 0]));
        };
        let rows = self.value(first).rows();
        let mut cols = 0;
        for &p in parts {
            let s = self.shape(p);
            if s[0] != rows {
                return Err(Self::mismatch("concat", self.shape(first), s));
            }
            cols += s[1];
        }
        let mut out = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let x = self.value(p);
            for r in 0..rows {
                out.row_mut(r)[offset..offset + x.cols()].copy_from_slice(x.row(r));
            }
            offset += x.cols();
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        self.push("concat", Op::Concat(parts.to_vec()), out, ng)
    }

    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> TensorResult<Var> {
        let x = self.value(a);
        let mut out = Tensor::zeros(rows.len(), x.cols());
        for (i, &r) in rows.iter().enumerate() {
            if r >= x.rows() {
                return Err(TensorError::InvalidRow { row: r, rows: x.rows() });
            }
            out.row_mut(i).copy_from_slice(x.row(r));
        }
        let ng = self.needs(a);
        self.push("gather_rows", Op::GatherRows(a, rows.to_vec()), out, ng)
    }

    pub fn sum(&mut self, a: Var) -> TensorResult<Var> {
        let s = self.value(a).data().iter().sum();
        let ng = self.needs(a);
        self.push("sum", Op::Sum(a), Tensor::scalar(s), ng)
    }

    pub fn mean(&mut self, a: Var) -> TensorResult<Var> {
        let x = self.value(a);
        let s = x.data().iter().sum::<f64>() / x.len().max(1) as f64;
        let ng = self.needs(a);
        self.push("mean", Op::Mean(a), Tensor::scalar(s), ng)
    }

    /// Mean over rows of `-Σ_c target_c · log softmax(logits)_c`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &Targets) -> TensorResult<Var> {
        let z = self.value(logits);
        let (n, c) = (z.rows(), z.cols());
        if n == 0 {
            return Err(TensorError::InvalidTarget("empty batch".into()));
        }
        let t = targets.to_dense(n, c)?;
        let logp = log_softmax_rows(z);
        let loss = -logp
            .data()
            .iter()
            .zip(t.data())
            .filter(|(_, &w)| w != 0.0)
            .map(|(l, w)| l * w)
            .sum::<f64>()
            / n as f64;
        let mut residual = softmax_rows(z);
        for (p, y) in residual.data_mut().iter_mut().zip(t.data()) {
            *p -= y;
        }
        let ng = self.needs(logits);
        self.push(
            "cross_entropy",
            Op::CrossEntropy(logits, residual),
            Tensor::scalar(loss),
            ng,
        )
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> TensorResult<Gradients> {
        let shape = self.shape(loss);
        if shape != [1, 1] {
            return Err(TensorError::NonScalarLoss(shape));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut param_grads: Vec<Option<Tensor>> = vec![None; self.params.len()];

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => accumulate(&mut param_grads[id.0], g),
                Op::MatMul(a, b) => {
                    let (x, y) = (self.value(*a), self.value(*b));
                    if self.needs(*a) {
                        let mut da = Tensor::zeros(x.rows(), x.cols());
                        matmul_nt_into(&g, y, &mut da);
                        accumulate(&mut grads[a.0], da);
                    }
                    if self.needs(*b) {
                        let mut db = Tensor::zeros(y.rows(), y.cols());
                        matmul_tn_into(x, &g, &mut db);
                        accumulate(&mut grads[b.0], db);
                    }
                }
                Op::MatMulNT(a, b) => {
                    let (x, y) = (self.value(*a), self.value(*b));
                    if self.needs(*a) {
                        let mut da = Tensor::zeros(x.rows(), x.cols());
                        matmul_into(&g, y, &mut da);
                        accumulate(&mut grads[a.0], da);
                    }
                    if self.needs(*b) {
                        let mut db = Tensor::zeros(y.rows(), y.cols());
                        matmul_tn_into(&g, x, &mut db);
                        accumulate(&mut grads[b.0], db);
                    }
                }
                Op::SparseMatMul(s, b) => {
                    let y = self.value(*b);
                    let mut db = Tensor::zeros(y.rows(), y.cols());
                    s.transpose_matmul_into(&g, &mut db);
                    accumulate(&mut grads[b.0], db);
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads[a.0], g.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads[b.0], g);
                    }
                }
                Op::AddRow(a, b) => {
                    if self.needs(*b) {
                        let mut db = Tensor::zeros(1, g.cols());
                        for r in 0..g.rows() {
                            for (o, &v) in db.data_mut().iter_mut().zip(g.row(r)) {
                                *o += v;
                            }
                        }
                        accumulate(&mut grads[b.0], db);
                    }
                    if self.needs(*a) {
                        accumulate(&mut grads[a.0], g);
                    }
                }
                Op::Scale(a, f) => {
                    let mut da = g;
                    da.data_mut().iter_mut().for_each(|x| *x *= f);
                    accumulate(&mut grads[a.0], da);
                }
                Op::MulRow(a, b) => {
                    let (x, w) = (self.value(*a), self.value(*b));
                    if self.needs(*b) {
                        let mut db = Tensor::zeros(1, g.cols());
                        for r in 0..g.rows() {
                            for ((o, &gv), &xv) in db.data_mut().iter_mut().zip(g.row(r)).zip(x.row(r)) {
                                *o += gv * xv;
                            }
                        }
                        accumulate(&mut grads[b.0], db);
                    }
                    if self.needs(*a) {
                        let mut da = g;
                        for r in 0..da.rows() {
                            for (d, &wv) in da.row_mut(r).iter_mut().zip(w.data()) {
                                *d *= wv;
                            }
                        }
                        accumulate(&mut grads[a.0], da);
                    }
                }
                Op::Standardize(a, inv_std) => {
                    // dx = s (g - mean(g) - y mean(g y)) per column
                    let y = node.value.as_ref().expect("value");
                    let n = y.rows().max(1) as f64;
                    let mut g_mean = vec![0.0; y.cols()];
                    let mut gy_mean = vec![0.0; y.cols()];
                    for r in 0..y.rows() {
                        for (c, (&gv, &yv)) in g.row(r).iter().zip(y.row(r)).enumerate() {
                            g_mean[c] += gv / n;
                            gy_mean[c] += gv * yv / n;
                        }
                    }
                    let mut da = g;
                    for r in 0..da.rows() {
                        for (c, (d, &yv)) in da.row_mut(r).iter_mut().zip(y.row(r)).enumerate() {
                            *d = inv_std[c] * (*d - g_mean[c] - yv * gy_mean[c]);
                        }
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::Relu(a) => {
                    let out = node.value.as_ref().expect("value");
                    let mut da = g;
                    for (d, &y) in da.data_mut().iter_mut().zip(out.data()) {
                        if y <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::RowSoftmax(a) => {
                    let y = node.value.as_ref().expect("value");
                    let mut da = Tensor::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let (yr, gr) = (y.row(r), g.row(r));
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((d, &yv), &gv) in da.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *d = yv * (gv - dot);
                        }
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::Log(a) => {
                    let x = self.value(*a);
                    let mut da = g;
                    for (d, &xv) in da.data_mut().iter_mut().zip(x.data()) {
                        *d /= xv;
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::Dropout(a, mask) => {
                    let mut da = g;
                    for (d, m) in da.data_mut().iter_mut().zip(mask) {
                        *d *= m;
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::SegmentSum(a, ids) => {
                    let mut da = Tensor::zeros(ids.len(), g.cols());
                    for (r, &s) in ids.iter().enumerate() {
                        da.row_mut(r).copy_from_slice(g.row(s));
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let cols = self.shape(*p)[1];
                        if self.needs(*p) {
                            let mut dp = Tensor::zeros(g.rows(), cols);
                            for r in 0..g.rows() {
                                dp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + cols]);
                            }
                            accumulate(&mut grads[p.0], dp);
                        }
                        offset += cols;
                    }
                }
                Op::GatherRows(a, rows) => {
                    let s = self.shape(*a);
                    let mut da = Tensor::zeros(s[0], s[1]);
                    for (i, &r) in rows.iter().enumerate() {
                        for (d, &v) in da.row_mut(r).iter_mut().zip(g.row(i)) {
                            *d += v;
                        }
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::Sum(a) => {
                    let s = self.shape(*a);
                    accumulate(&mut grads[a.0], Tensor::filled(s[0], s[1], g.item()));
                }
                Op::Mean(a) => {
                    let s = self.shape(*a);
                    let n = (s[0] * s[1]).max(1) as f64;
                    accumulate(&mut grads[a.0], Tensor::filled(s[0], s[1], g.item() / n));
                }
                Op::CrossEntropy(a, residual) => {
                    let scale = g.item() / residual.rows() as f64;
                    let mut da = residual.clone();
                    da.data_mut().iter_mut().for_each(|x| *x *= scale);
                    accumulate(&mut grads[a.0], da);
                }
            }
        }

        let grads = param_grads
            .into_iter()
            .zip(self.params.ids())
            .map(|(g, id)| {
                g.unwrap_or_else(|| {
                    let s = self.params.get(id).shape();
                    Tensor::zeros(s[0], s[1])
                })
            })
            .collect();
        Ok(Gradients { grads })
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}
