use crate::autodiff::{BoundParams, Tape, Var};
use crate::dataset::BipartiteGraph;

use super::{gcn_weight_name, ModelConfig, ModelError};

/// `H_{l+1} = ReLU(Â H_l W_l)` for all but the last layer, which stays linear.
/// With the gcn ablation off, returns `h0` unchanged.
pub fn gcn_forward(
    tape: &mut Tape,
    graph: &BipartiteGraph,
    h0: Var,
    bound: &BoundParams,
    config: &ModelConfig,
) -> Result<Var, ModelError> {
    if !config.ablation.gcn || config.gcn_layers == 0 {
        return Ok(h0);
    }
    let (rows, cols) = tape.value(h0).shape();
    if rows != graph.n_nodes() {
        return Err(ModelError::Autodiff(
            crate::autodiff::AutodiffError::ShapeMismatch {
                op: "gcn_forward",
                lhs: (graph.n_nodes(), graph.n_nodes()),
                rhs: (rows, cols),
            },
        ));
    }
    let adjacency = graph.adjacency().clone();
    let mut h = h0;
    for layer in 0..config.gcn_layers {
        let w = bound.var(&gcn_weight_name(layer))?;
        let mixed = tape.spmm(adjacency.clone(), h)?;
        let lin = tape.matmul(mixed, w)?;
        h = if layer + 1 < config.gcn_layers {
            tape.relu(lin)?
        } else {
            lin
        };
    }
    Ok(h)
}
