use std::sync::Arc;

use coldrec::autodiff::{AutodiffError, Bags, CsrMatrix, Tape, Tensor, Var};

use super::{random_tensor, reduce, rng};

pub type OpFn = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>>;

pub struct OpCase {
    pub name: &'static str,
    pub inputs: Vec<Tensor>,
    pub f: OpFn,
}

fn away_from_zero(t: Tensor) -> Tensor {
    t.map(|x| if x.abs() < 0.1 { x.signum() * 0.1 + x } else { x })
}

/// One scalar-valued probe per tape op, with inputs drawn from `seed`.
pub fn cases(seed: u64) -> Vec<OpCase> {
    let mut r = rng(seed);
    let mut t = |rows, cols| random_tensor(rows, cols, -1.5, 1.5, &mut r);
    let a23 = t(2, 3);
    let b23 = t(2, 3);
    let b34 = t(3, 4);
    let row3 = t(1, 3);
    let col2 = t(2, 1);
    let c23 = t(2, 3);
    let d33 = t(3, 3);
    let e43 = t(4, 3);
    let table = t(5, 3);
    let h = t(4, 2);
    let pos = t(3, 3).map(|x| x.abs() + 0.2);
    let probs = t(4, 1).map(|x| 0.15 + 0.7 * (x + 1.5) / 3.0);
    let relu_in = away_from_zero(t(3, 3));
    let adjacency = Arc::new(CsrMatrix::from_triplets(
        4,
        4,
        &[(0, 0, 0.5), (0, 2, 0.3), (1, 1, 1.0), (2, 0, 0.3), (2, 3, 0.7), (3, 2, 0.7)],
    )
    .unwrap());
    let bags = Arc::new(Bags::from_lists(&[vec![0, 2], vec![4], vec![1, 1, 3]]).unwrap());

    let case = |name, inputs: Vec<Tensor>, f: OpFn| OpCase { name, inputs, f };
    vec![
        case("matmul", vec![a23.clone(), b34], Box::new(|t, v| {
            let o = t.matmul(v[0], v[1])?;
            reduce(t, o)
        })),
        case("add", vec![a23.clone(), b23.clone()], Box::new(|t, v| {
            let o = t.add(v[0], v[1])?;
            reduce(t, o)
        })),
        case("add_row", vec![a23.clone(), row3], Box::new(|t, v| {
            let o = t.add_row(v[0], v[1])?;
            reduce(t, o)
        })),
        case("sub", vec![a23.clone(), b23.clone()], Box::new(|t, v| {
            let o = t.sub(v[0], v[1])?;
            reduce(t, o)
        })),
        case("mul", vec![a23.clone(), b23.clone()], Box::new(|t, v| {
            let o = t.mul(v[0], v[1])?;
            reduce(t, o)
        })),
        case("scale", vec![a23.clone()], Box::new(|t, v| {
            let o = t.scale(v[0], -2.5)?;
            reduce(t, o)
        })),
        case("neg", vec![a23.clone()], Box::new(|t, v| {
            let o = t.neg(v[0])?;
            reduce(t, o)
        })),
        case("relu", vec![relu_in], Box::new(|t, v| {
            let o = t.relu(v[0])?;
            reduce(t, o)
        })),
        case("sigmoid", vec![a23.clone()], Box::new(|t, v| {
            let o = t.sigmoid(v[0])?;
            reduce(t, o)
        })),
        case("tanh", vec![a23.clone()], Box::new(|t, v| {
            let o = t.tanh(v[0])?;
            reduce(t, o)
        })),
        case("log", vec![pos], Box::new(|t, v| {
            let o = t.log(v[0])?;
            reduce(t, o)
        })),
        case("exp", vec![a23.clone()], Box::new(|t, v| {
            let o = t.exp(v[0])?;
            reduce(t, o)
        })),
        case("softmax_rows", vec![d33.clone()], Box::new(|t, v| {
            let o = t.softmax_rows(v[0])?;
            reduce(t, o)
        })),
        case("logsumexp_rows", vec![d33.clone()], Box::new(|t, v| {
            let o = t.logsumexp_rows(v[0])?;
            reduce(t, o)
        })),
        case("sum", vec![a23.clone()], Box::new(|t, v| {
            let sq = t.mul(v[0], v[0])?;
            t.sum(sq)
        })),
        case("mean", vec![a23.clone()], Box::new(|t, v| {
            let sq = t.mul(v[0], v[0])?;
            t.mean(sq)
        })),
        case("concat_rows", vec![a23.clone(), d33.clone()], Box::new(|t, v| {
            let o = t.concat_rows(&[v[0], v[1], v[0]])?;
            reduce(t, o)
        })),
        case("concat_cols", vec![a23.clone(), col2.clone()], Box::new(|t, v| {
            let o = t.concat_cols(&[v[1], v[0]])?;
            reduce(t, o)
        })),
        case("gather_rows", vec![e43.clone()], Box::new(|t, v| {
            let o = t.gather_rows(v[0], &[3, 0, 3, 1])?;
            reduce(t, o)
        })),
        case("embedding_bag_mean", vec![table], Box::new(move |t, v| {
            let o = t.embedding_bag_mean(v[0], bags.clone())?;
            reduce(t, o)
        })),
        case("row_dot", vec![a23.clone(), c23], Box::new(|t, v| {
            let o = t.row_dot(v[0], v[1])?;
            reduce(t, o)
        })),
        case("mul_col", vec![a23.clone(), col2], Box::new(|t, v| {
            let o = t.mul_col(v[0], v[1])?;
            reduce(t, o)
        })),
        case("select_col", vec![d33], Box::new(|t, v| {
            let o = t.select_col(v[0], 1)?;
            reduce(t, o)
        })),
        case("reshape", vec![a23], Box::new(|t, v| {
            let o = t.reshape(v[0], 3, 2)?;
            reduce(t, o)
        })),
        case("spmm", vec![h], Box::new(move |t, v| {
            let o = t.spmm(adjacency.clone(), v[0])?;
            reduce(t, o)
        })),
        case("bce", vec![probs], Box::new(|t, v| t.bce(v[0], &[1.0, 0.0, 0.0, 1.0]))),
    ]
}

