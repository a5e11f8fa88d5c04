#![allow(dead_code)]

pub mod ops;
pub mod reference;

use coldrec::autodiff::{Tensor, Var};
use coldrec::dataset::{
    build_graph, prepare, synthetic_dataset, vectorize_items, vectorize_users, AgeGroup,
    BipartiteGraph, FeatureSchema, Gender, Genre, Interaction, InteractionSet, ItemProfile,
    PrepareOptions, PreparedDataset, UserProfile, DEFAULT_TOPICS,
};
use coldrec::model::{Batch, ModelConfig, ModelInputs, ModelParams};
use coldrec::training::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE_SEED: u64 = 7;
pub const FIXTURE_USERS: usize = 200;
pub const FIXTURE_ITEMS: usize = 200;
/// Training seed pinned for the synthetic learning checks.
pub const PINNED_TRAIN_SEED: u64 = 2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Fixed probe weights so a tensor output reduces to a scalar with
/// non-uniform sensitivities.
pub fn probe_weights(rows: usize, cols: usize) -> Tensor {
    Tensor::from_fn(rows, cols, |r, c| ((r * 7 + c * 3) as f64 * 0.37).sin() + 0.2)
}

/// `sum(out * probe)`.
pub fn reduce(tape: &mut coldrec::autodiff::Tape, out: Var) -> Result<Var, coldrec::autodiff::AutodiffError> {
    let (r, c) = tape.value(out).shape();
    let w = tape.leaf(probe_weights(r, c));
    let m = tape.mul(out, w)?;
    tape.sum(m)
}

pub fn fixture_data() -> PreparedDataset {
    let syn = synthetic_dataset(FIXTURE_SEED, FIXTURE_USERS, FIXTURE_ITEMS, DEFAULT_TOPICS);
    prepare(&syn.to_raw(), &PrepareOptions::default()).unwrap().0
}

pub fn fixture_config() -> TrainConfig {
    TrainConfig {
        batch_size: 128,
        seed: PINNED_TRAIN_SEED,
        ..TrainConfig::default()
    }
}

/// Four users, four items, a handful of edges and one batch.
pub struct TinyModel {
    pub schema: FeatureSchema,
    pub inputs: ModelInputs,
    pub graph: BipartiteGraph,
    pub params: ModelParams,
    pub batch: Batch,
    pub config: ModelConfig,
}

pub fn tiny_model(seed: u64) -> TinyModel {
    let ids: Vec<u32> = (1..=4).collect();
    let schema = FeatureSchema::new(ids.clone(), ids.clone());
    let users: Vec<UserProfile> = (0..4)
        .map(|u| UserProfile {
            user_id: u as u32 + 1,
            gender: Gender::ALL[u % 2],
            age: AgeGroup::from_index(u % 7).unwrap(),
            occupation: (u * 3) as u8,
        })
        .collect();
    let items: Vec<ItemProfile> = (0..4)
        .map(|i| ItemProfile {
            item_id: i as u32 + 1,
            title: format!("Item {i} (199{i})"),
            year: 1990 + i as i32 * 3,
            genres: vec![Genre::ALL[i], Genre::ALL[(i + 5) % 18]],
        })
        .collect();
    let edges = [(0, 0), (0, 1), (1, 1), (2, 2), (3, 0), (3, 3)];
    let positives = edges
        .iter()
        .map(|&(user, item)| Interaction {
            user,
            item,
            timestamp: 0,
        })
        .collect();
    let inter = InteractionSet::new(ids.clone(), ids, positives).unwrap();
    let graph = build_graph(&inter);
    let user_features = vectorize_users(&users, &schema).unwrap();
    let item_features = vectorize_items(&items, &schema).unwrap();
    let inputs = ModelInputs::new(&schema, &user_features, &item_features).unwrap();
    let config = ModelConfig {
        embed_dim: 4,
        gcn_layers: 2,
        temperature: 0.5,
        lambda: 0.5,
        ..ModelConfig::default()
    };
    let params = ModelParams::init(&schema, &config, &mut rng(seed)).unwrap();
    let batch = Batch {
        users: vec![0, 1, 2, 3],
        pos_items: vec![1, 1, 2, 3],
        bce_negatives: vec![2, 3, 0, 2, 0, 3, 1, 2],
        bce_per_positive: 2,
        cl_negatives: vec![3, 2, 3, 0, 1, 0, 2, 1],
        cl_per_positive: 2,
    };
    TinyModel {
        schema,
        inputs,
        graph,
        params,
        batch,
        config,
    }
}

/// Bipartite interactions with each pair present with probability 0.2.
pub fn random_graph(seed: u64, n_users: usize, n_items: usize) -> InteractionSet {
    let mut r = rng(seed);
    let mut positives = Vec::new();
    for u in 0..n_users {
        for i in 0..n_items {
            if r.random_bool(0.2) {
                positives.push(Interaction { user: u, item: i, timestamp: 0 });
            }
        }
    }
    let users = (1..=n_users as u32).collect();
    let items = (1..=n_items as u32).collect();
    InteractionSet::new(users, items, positives).unwrap()
}

/// `D^-1/2 (A + I) D^-1/2` built densely from the interaction list.
pub fn dense_normalized_adjacency(inter: &InteractionSet) -> Tensor {
    let nu = inter.n_users();
    let n = nu + inter.n_items();
    let mut a = Tensor::identity(n);
    for p in inter.positives() {
        a.set(p.user, nu + p.item, 1.0);
        a.set(nu + p.item, p.user, 1.0);
    }
    let mut d_inv_sqrt = Tensor::zeros(n, n);
    for r in 0..n {
        let deg: f64 = a.row(r).iter().sum();
        d_inv_sqrt.set(r, r, 1.0 / deg.sqrt());
    }
    d_inv_sqrt.matmul(&a).unwrap().matmul(&d_inv_sqrt).unwrap()
}
