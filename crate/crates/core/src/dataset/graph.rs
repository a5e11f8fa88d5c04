use std::sync::Arc;

use crate::autodiff::CsrMatrix;

use super::InteractionSet;

/// User-item graph over `n_users + n_items` nodes (users first) with the
/// symmetric normalized adjacency `D^-1/2 (A + I) D^-1/2`.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    n_users: usize,
    n_items: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Arc<CsrMatrix>,
}

impl BipartiteGraph {
    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_nodes(&self) -> usize {
        self.n_users + self.n_items
    }

    /// `(user, item)` pairs over dense ids.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &Arc<CsrMatrix> {
        &self.adjacency
    }

    pub fn item_node(&self, item: usize) -> usize {
        self.n_users + item
    }
}

pub fn build_graph(train: &InteractionSet) -> BipartiteGraph {
    let (n_users, n_items) = (train.n_users(), train.n_items());
    let n = n_users + n_items;
    let edges: Vec<(usize, usize)> = train.positives().iter().map(|p| (p.user, p.item)).collect();

    let mut degree = vec![1.0f64; n];
    for &(u, i) in &edges {
        degree[u] += 1.0;
        degree[n_users + i] += 1.0;
    }
    let mut triplets = Vec::with_capacity(n + 2 * edges.len());
    for (v, &d) in degree.iter().enumerate() {
        triplets.push((v, v, 1.0 / d));
    }
    for &(u, i) in &edges {
        let j = n_users + i;
        let w = 1.0 / (degree[u] * degree[j]).sqrt();
        triplets.push((u, j, w));
        triplets.push((j, u, w));
    }
    let adjacency = CsrMatrix::from_triplets(n, n, &triplets).expect("node ids in range");
    BipartiteGraph {
        n_users,
        n_items,
        edges,
        adjacency: Arc::new(adjacency),
    }
}
