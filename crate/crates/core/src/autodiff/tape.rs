use std::sync::Arc;

use super::{AutodiffError, CsrMatrix, Tensor};

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Ragged index lists, one bag per output row. Used for mean-pooled lookups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bags {
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl Bags {
    pub fn from_lists<L: AsRef<[usize]>>(lists: &[L]) -> Result<Self, AutodiffError> {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for (row, l) in lists.iter().enumerate() {
            let l = l.as_ref();
            if l.is_empty() {
                return Err(AutodiffError::EmptyBag { row });
            }
            indices.extend_from_slice(l);
            offsets.push(indices.len());
        }
        Ok(Self { offsets, indices })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bag(&self, row: usize) -> &[usize] {
        &self.indices[self.offsets[row]..self.offsets[row + 1]]
    }

    fn max_index(&self) -> Option<usize> {
        self.indices.iter().copied().max()
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Log(Var),
    Exp(Var),
    SoftmaxRows(Var),
    LogSumExpRows(Var),
    Sum(Var),
    Mean(Var),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    Gather(Var, Arc<[usize]>),
    BagMean(Var, Arc<Bags>),
    RowDot(Var, Var),
    MulCol(Var, Var),
    SelectCol(Var, usize),
    Reshape(Var),
    SpMM(Arc<CsrMatrix>, Var),
    Bce(Var, Arc<[f64]>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    grad: Option<Tensor>,
    op: Op,
}

/// Lower clamp applied to predicted probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so index order is a topological order.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient, `None` when backward never reached the node.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    /// Gradient or zeros of the node's shape.
    pub fn grad_or_zeros(&self, v: Var) -> Tensor {
        match self.grad(v) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.value(v).shape();
                Tensor::zeros(r, c)
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op) -> Result<Var, AutodiffError> {
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite { op: name });
        }
        self.nodes.push(Node {
            value,
            grad: None,
            op,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), AutodiffError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(AutodiffError::ShapeMismatch {
                op,
                lhs: sa,
                rhs: sb,
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let v = self.value(a).matmul(self.value(b))?;
        self.push("matmul", v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push("add", v, Op::Add(a, b))
    }

    /// Adds a `1 x d` row vector to every row of an `n x d` matrix.
    pub fn add_row(&mut self, m: Var, row: Var) -> Result<Var, AutodiffError> {
        let (mv, rv) = (self.value(m), self.value(row));
        if rv.rows() != 1 || rv.cols() != mv.cols() {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row",
                lhs: mv.shape(),
                rhs: rv.shape(),
            });
        }
        let mut v = mv.clone();
        for r in 0..v.rows() {
            for (o, b) in v.row_mut(r).iter_mut().zip(rv.data()) {
                *o += b;
            }
        }
        self.push("add_row", v, Op::AddRow(m, row))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push("sub", v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push("mul", v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var, AutodiffError> {
        let v = self.value(a).map(|x| x * s);
        self.push("scale", v, Op::Scale(a, s))
    }

    pub fn neg(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.scale(a, -1.0)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push("relu", v, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let v = self.value(a).map(sigmoid);
        self.push("sigmoid", v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let v = self.value(a).map(f64::tanh);
        self.push("tanh", v, Op::Tanh(a))
    }

    pub fn log(&mut self, a: Var) -> Result<Var, AutodiffError> {
        if let Some(bad) = self.value(a).data().iter().find(|&&x| x <= 0.0) {
            return Err(AutodiffError::Domain {
                op: "log",
                detail: format!("non-positive input {bad}"),
            });
        }
        let v = self.value(a).map(f64::ln);
        self.push("log", v, Op::Log(a))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let v = self.value(a).map(f64::exp);
        self.push("exp", v, Op::Exp(a))
    }

    /// Row-wise softmax with per-row max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        let mut v = x.clone();
        for r in 0..v.rows() {
            let row = v.row_mut(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for e in row.iter_mut() {
                *e = (*e - max).exp();
                total += *e;
            }
            for e in row.iter_mut() {
                *e /= total;
            }
        }
        self.push("softmax_rows", v, Op::SoftmaxRows(a))
    }

    /// Stable `log(sum(exp(row)))` per row, producing an `n x 1` column.
    pub fn logsumexp_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        let data = (0..x.rows()).map(|r| logsumexp(x.row(r))).collect();
        let v = Tensor::column_vector(data);
        self.push("logsumexp_rows", v, Op::LogSumExpRows(a))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let v = Tensor::scalar(self.value(a).sum());
        self.push("sum", v, Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        if x.is_empty() {
            return Err(AutodiffError::Domain {
                op: "mean",
                detail: "empty tensor".into(),
            });
        }
        let v = Tensor::scalar(x.sum() / x.len() as f64);
        self.push("mean", v, Op::Mean(a))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let first = parts.first().ok_or(AutodiffError::Domain {
            op: "concat_rows",
            detail: "no inputs".into(),
        })?;
        let cols = self.value(*first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_rows",
                    lhs: self.value(*first).shape(),
                    rhs: t.shape(),
                });
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let v = Tensor::from_vec(rows, cols, data)?;
        self.push("concat_rows", v, Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let first = parts.first().ok_or(AutodiffError::Domain {
            op: "concat_cols",
            detail: "no inputs".into(),
        })?;
        let rows = self.value(*first).rows();
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows() != rows {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: self.value(*first).shape(),
                    rhs: t.shape(),
                });
            }
            cols += t.cols();
        }
        let mut v = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let t = self.value(p);
            for r in 0..rows {
                v.row_mut(r)[offset..offset + t.cols()].copy_from_slice(t.row(r));
            }
            offset += t.cols();
        }
        self.push("concat_cols", v, Op::ConcatCols(parts.to_vec()))
    }

    /// Gathers rows of `src` in the given order (rows may repeat).
    pub fn gather_rows(&mut self, src: Var, indices: &[usize]) -> Result<Var, AutodiffError> {
        let s = self.value(src);
        let mut v = Tensor::zeros(indices.len(), s.cols());
        for (o, &i) in indices.iter().enumerate() {
            if i >= s.rows() {
                return Err(AutodiffError::IndexOutOfRange {
                    op: "gather_rows",
                    index: i,
                    len: s.rows(),
                });
            }
            v.row_mut(o).copy_from_slice(s.row(i));
        }
        self.push("gather_rows", v, Op::Gather(src, indices.into()))
    }

    /// Embedding lookup: same as [`Tape::gather_rows`] on a parameter table.
    pub fn embedding_rows(&mut self, table: Var, indices: &[usize]) -> Result<Var, AutodiffError> {
        self.gather_rows(table, indices)
    }

    /// Mean of the table rows named by each bag.
    pub fn embedding_bag_mean(
        &mut self,
        table: Var,
        bags: Arc<Bags>,
    ) -> Result<Var, AutodiffError> {
        let t = self.value(table);
        if let Some(max) = bags.max_index() {
            if max >= t.rows() {
                return Err(AutodiffError::IndexOutOfRange {
                    op: "embedding_bag_mean",
                    index: max,
                    len: t.rows(),
                });
            }
        }
        let mut v = Tensor::zeros(bags.len(), t.cols());
        for b in 0..bags.len() {
            let bag = bags.bag(b);
            let out = v.row_mut(b);
            if let [single] = bag {
                out.copy_from_slice(t.row(*single));
                continue;
            }
            for &i in bag {
                for (o, x) in out.iter_mut().zip(t.row(i)) {
                    *o += x;
                }
            }
            let inv = bag.len() as f64;
            for o in out.iter_mut() {
                *o /= inv;
            }
        }
        self.push("embedding_bag_mean", v, Op::BagMean(table, bags))
    }

    /// Per-row inner product, `n x 1`.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("row_dot", a, b)?;
        let (x, y) = (self.value(a), self.value(b));
        let data = (0..x.rows())
            .map(|r| x.row(r).iter().zip(y.row(r)).map(|(p, q)| p * q).sum())
            .collect();
        self.push("row_dot", Tensor::column_vector(data), Op::RowDot(a, b))
    }

    /// Scales row `i` of an `n x d` matrix by entry `i` of an `n x 1` column.
    pub fn mul_col(&mut self, m: Var, col: Var) -> Result<Var, AutodiffError> {
        let (mv, cv) = (self.value(m), self.value(col));
        if cv.cols() != 1 || cv.rows() != mv.rows() {
            return Err(AutodiffError::ShapeMismatch {
                op: "mul_col",
                lhs: mv.shape(),
                rhs: cv.shape(),
            });
        }
        let mut v = mv.clone();
        for r in 0..v.rows() {
            let s = cv.data()[r];
            for o in v.row_mut(r) {
                *o *= s;
            }
        }
        self.push("mul_col", v, Op::MulCol(m, col))
    }

    pub fn select_col(&mut self, a: Var, col: usize) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        if col >= x.cols() {
            return Err(AutodiffError::IndexOutOfRange {
                op: "select_col",
                index: col,
                len: x.cols(),
            });
        }
        let data = (0..x.rows()).map(|r| x.get(r, col)).collect();
        self.push("select_col", Tensor::column_vector(data), Op::SelectCol(a, col))
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, AutodiffError> {
        let x = self.value(a);
        if rows * cols != x.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "reshape",
                lhs: x.shape(),
                rhs: (rows, cols),
            });
        }
        let v = Tensor::from_vec(rows, cols, x.data().to_vec())?;
        self.push("reshape", v, Op::Reshape(a))
    }

    /// Constant sparse matrix times a node.
    pub fn spmm(&mut self, m: Arc<CsrMatrix>, h: Var) -> Result<Var, AutodiffError> {
        let v = m.matmul(self.value(h))?;
        self.push("spmm", v, Op::SpMM(m, h))
    }

    /// Mean binary cross-entropy over a column of probabilities. Predictions
    /// are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the logs.
    pub fn bce(&mut self, preds: Var, labels: &[f64]) -> Result<Var, AutodiffError> {
        let p = self.value(preds);
        if p.len() != labels.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "bce",
                lhs: p.shape(),
                rhs: (labels.len(), 1),
            });
        }
        if p.is_empty() {
            return Err(AutodiffError::Domain {
                op: "bce",
                detail: "empty batch".into(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
            return Err(AutodiffError::Domain {
                op: "bce",
                detail: format!("label {bad} outside {{0,1}}"),
            });
        }
        let total: f64 = p
            .data()
            .iter()
            .zip(labels)
            .map(|(&q, &y)| {
                let q = q.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                y * q.ln() + (1.0 - y) * (1.0 - q).ln()
            })
            .sum();
        let v = Tensor::scalar(-total / labels.len() as f64);
        self.push("bce", v, Op::Bce(preds, labels.into()))
    }

    /// Reverse pass from a scalar. Gradients accumulate into every reachable
    /// node, so a second call without [`Tape::zero_grads`] doubles them.
    pub fn backward(&mut self, loss: Var) -> Result<(), AutodiffError> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(AutodiffError::NotScalar { shape });
        }
        let mut adj: Vec<Option<Tensor>> = Vec::new();
        adj.resize_with(loss.0 + 1, || None);
        adj[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            self.propagate(i, &g, &mut adj)?;
            match &mut self.nodes[i].grad {
                Some(acc) => acc.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn propagate(
        &self,
        i: usize,
        g: &Tensor,
        adj: &mut [Option<Tensor>],
    ) -> Result<(), AutodiffError> {
        let node = &self.nodes[i];
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let ga = g.matmul_t(self.value(*b))?;
                let gb = self.value(*a).t_matmul(g)?;
                accumulate(adj, *a, ga);
                accumulate(adj, *b, gb);
            }
            Op::Add(a, b) => {
                accumulate(adj, *a, g.clone());
                accumulate(adj, *b, g.clone());
            }
            Op::AddRow(m, r) => {
                let mut gr = Tensor::zeros(1, g.cols());
                for row in 0..g.rows() {
                    for (o, x) in gr.data_mut().iter_mut().zip(g.row(row)) {
                        *o += x;
                    }
                }
                accumulate(adj, *m, g.clone());
                accumulate(adj, *r, gr);
            }
            Op::Sub(a, b) => {
                accumulate(adj, *a, g.clone());
                accumulate(adj, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                accumulate(adj, *a, g.zip_map(self.value(*b), |x, y| x * y));
                accumulate(adj, *b, g.zip_map(self.value(*a), |x, y| x * y));
            }
            Op::Scale(a, s) => accumulate(adj, *a, g.map(|x| x * s)),
            Op::Relu(a) => {
                let ga = g.zip_map(self.value(*a), |gx, x| if x > 0.0 { gx } else { 0.0 });
                accumulate(adj, *a, ga);
            }
            Op::Sigmoid(a) => accumulate(adj, *a, g.zip_map(y, |gx, s| gx * s * (1.0 - s))),
            Op::Tanh(a) => accumulate(adj, *a, g.zip_map(y, |gx, t| gx * (1.0 - t * t))),
            Op::Log(a) => accumulate(adj, *a, g.zip_map(self.value(*a), |gx, x| gx / x)),
            Op::Exp(a) => accumulate(adj, *a, g.zip_map(y, |gx, e| gx * e)),
            Op::SoftmaxRows(a) => {
                let mut ga = Tensor::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let dot: f64 = yr.iter().zip(gr).map(|(p, q)| p * q).sum();
                    for ((o, p), q) in ga.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o = p * (q - dot);
                    }
                }
                accumulate(adj, *a, ga);
            }
            Op::LogSumExpRows(a) => {
                let x = self.value(*a);
                let mut ga = Tensor::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    let lse = y.data()[r];
                    let gr = g.data()[r];
                    for (o, v) in ga.row_mut(r).iter_mut().zip(x.row(r)) {
                        *o = gr * (v - lse).exp();
                    }
                }
                accumulate(adj, *a, ga);
            }
            Op::Sum(a) => {
                let (r, c) = self.value(*a).shape();
                accumulate(adj, *a, Tensor::filled(r, c, g.data()[0]));
            }
            Op::Mean(a) => {
                let x = self.value(*a);
                let v = g.data()[0] / x.len() as f64;
                accumulate(adj, *a, Tensor::filled(x.rows(), x.cols(), v));
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                for &p in parts {
                    let (r, c) = self.value(p).shape();
                    let slice = g.data()[start * c..(start + r) * c].to_vec();
                    accumulate(adj, p, Tensor::from_vec(r, c, slice)?);
                    start += r;
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (r, c) = self.value(p).shape();
                    let gp = Tensor::from_fn(r, c, |i, j| g.get(i, offset + j));
                    accumulate(adj, p, gp);
                    offset += c;
                }
            }
            Op::Gather(src, indices) => {
                let (r, c) = self.value(*src).shape();
                let mut gs = Tensor::zeros(r, c);
                for (o, &idx) in indices.iter().enumerate() {
                    for (d, x) in gs.row_mut(idx).iter_mut().zip(g.row(o)) {
                        *d += x;
                    }
                }
                accumulate(adj, *src, gs);
            }
            Op::BagMean(table, bags) => {
                let (r, c) = self.value(*table).shape();
                let mut gt = Tensor::zeros(r, c);
                for b in 0..bags.len() {
                    let bag = bags.bag(b);
                    let w = 1.0 / bag.len() as f64;
                    for &idx in bag {
                        for (d, x) in gt.row_mut(idx).iter_mut().zip(g.row(b)) {
                            *d += w * x;
                        }
                    }
                }
                accumulate(adj, *table, gt);
            }
            Op::RowDot(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let ga = Tensor::from_fn(va.rows(), va.cols(), |r, c| g.data()[r] * vb.get(r, c));
                let gb = Tensor::from_fn(va.rows(), va.cols(), |r, c| g.data()[r] * va.get(r, c));
                accumulate(adj, *a, ga);
                accumulate(adj, *b, gb);
            }
            Op::MulCol(m, col) => {
                let (mv, cv) = (self.value(*m), self.value(*col));
                let gm = Tensor::from_fn(mv.rows(), mv.cols(), |r, c| g.get(r, c) * cv.data()[r]);
                let gc = (0..mv.rows())
                    .map(|r| g.row(r).iter().zip(mv.row(r)).map(|(p, q)| p * q).sum())
                    .collect();
                accumulate(adj, *m, gm);
                accumulate(adj, *col, Tensor::column_vector(gc));
            }
            Op::SelectCol(a, col) => {
                let (r, c) = self.value(*a).shape();
                let mut ga = Tensor::zeros(r, c);
                for row in 0..r {
                    ga.set(row, *col, g.data()[row]);
                }
                accumulate(adj, *a, ga);
            }
            Op::Reshape(a) => {
                let (r, c) = self.value(*a).shape();
                accumulate(adj, *a, Tensor::from_vec(r, c, g.data().to_vec())?);
            }
            Op::SpMM(m, h) => accumulate(adj, *h, m.t_matmul(g)?),
            Op::Bce(p, labels) => {
                let pv = self.value(*p);
                let scale = -g.data()[0] / labels.len() as f64;
                let data = pv
                    .data()
                    .iter()
                    .zip(labels.iter())
                    .map(|(&q, &y)| {
                        if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&q) {
                            return 0.0;
                        }
                        scale * (y / q - (1.0 - y) / (1.0 - q))
                    })
                    .collect();
                accumulate(adj, *p, Tensor::from_vec(pv.rows(), pv.cols(), data)?);
            }
        }
        Ok(())
    }
}

fn accumulate(adj: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut adj[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
