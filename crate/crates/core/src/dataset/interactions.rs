use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, RawRating};

/// Positive rating threshold used for binarization.
pub const DEFAULT_THRESHOLD: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
    pub timestamp: i64,
}

/// Positive user-item pairs over dense 0-based ids.
///
/// The id universe covers every raw id seen in the ratings, including
/// users or items left without positives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSet {
    user_ids: Vec<u32>,
    item_ids: Vec<u32>,
    positives: Vec<Interaction>,
}

impl InteractionSet {
    /// `user_ids` and `item_ids` must be sorted and unique; positives are
    /// sorted and deduplicated by `(user, item)`, keeping the latest timestamp.
    pub fn new(
        user_ids: Vec<u32>,
        item_ids: Vec<u32>,
        mut positives: Vec<Interaction>,
    ) -> Result<Self, DatasetError> {
        for ids in [&user_ids, &item_ids] {
            if ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DatasetError::Invalid(
                    "id universe must be sorted and unique".into(),
                ));
            }
        }
        for p in &positives {
            if p.user >= user_ids.len() || p.item >= item_ids.len() {
                return Err(DatasetError::Invalid(format!(
                    "pair ({}, {}) outside the id universe",
                    p.user, p.item
                )));
            }
        }
        positives.sort_by(|a, b| {
            (a.user, a.item)
                .cmp(&(b.user, b.item))
                .then(b.timestamp.cmp(&a.timestamp))
        });
        positives.dedup_by_key(|p| (p.user, p.item));
        Ok(Self {
            user_ids,
            item_ids,
            positives,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn user_ids(&self) -> &[u32] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[u32] {
        &self.item_ids
    }

    pub fn positives(&self) -> &[Interaction] {
        &self.positives
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn user_index(&self, raw: u32) -> Option<usize> {
        self.user_ids.binary_search(&raw).ok()
    }

    pub fn item_index(&self, raw: u32) -> Option<usize> {
        self.item_ids.binary_search(&raw).ok()
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.positives
            .binary_search_by(|p| (p.user, p.item).cmp(&(user, item)))
            .is_ok()
    }

    /// Same universe, different positives.
    pub fn with_positives(&self, positives: Vec<Interaction>) -> Self {
        Self::new(self.user_ids.clone(), self.item_ids.clone(), positives)
            .expect("positives drawn from this universe")
    }

    /// Sorted item lists per dense user.
    pub fn items_by_user(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_users()];
        for p in &self.positives {
            out[p.user].push(p.item);
        }
        out
    }

    /// Sorted user lists per dense item.
    pub fn users_by_item(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_items()];
        for p in &self.positives {
            out[p.item].push(p.user);
        }
        out
    }
}

/// Keeps pairs with `rating >= threshold`; the id universe spans all ratings.
pub fn binarize(ratings: &[RawRating], threshold: u8) -> Result<InteractionSet, DatasetError> {
    if !(1..=5).contains(&threshold) {
        return Err(DatasetError::Invalid(format!(
            "threshold {threshold} outside 1..5"
        )));
    }
    let mut user_ids: Vec<u32> = ratings.iter().map(|r| r.user_id).collect();
    let mut item_ids: Vec<u32> = ratings.iter().map(|r| r.item_id).collect();
    user_ids.sort_unstable();
    user_ids.dedup();
    item_ids.sort_unstable();
    item_ids.dedup();
    let positives = ratings
        .iter()
        .filter(|r| r.rating >= threshold)
        .map(|r| Interaction {
            user: user_ids.binary_search(&r.user_id).expect("collected above"),
            item: item_ids.binary_search(&r.item_id).expect("collected above"),
            timestamp: r.timestamp,
        })
        .collect();
    InteractionSet::new(user_ids, item_ids, positives)
}

/// Train set plus held-out positives for cold users and cold items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColdStartSplit {
    pub train: InteractionSet,
    pub cold_users: Vec<usize>,
    pub cold_items: Vec<usize>,
    /// Cold user -> held-out items (includes pairs with cold items).
    pub test_cold_users: BTreeMap<usize, Vec<usize>>,
    /// Cold item -> held-out warm users.
    pub test_cold_items: BTreeMap<usize, Vec<usize>>,
}

impl ColdStartSplit {
    pub fn n_test_user_pairs(&self) -> usize {
        self.test_cold_users.values().map(Vec::len).sum()
    }

    pub fn n_test_item_pairs(&self) -> usize {
        self.test_cold_items.values().map(Vec::len).sum()
    }

    pub fn is_cold_user(&self, user: usize) -> bool {
        self.cold_users.binary_search(&user).is_ok()
    }

    pub fn is_cold_item(&self, item: usize) -> bool {
        self.cold_items.binary_search(&item).is_ok()
    }

    /// Items with at least one train positive.
    pub fn warm_items(&self) -> Vec<usize> {
        let mut seen = vec![false; self.train.n_items()];
        for p in self.train.positives() {
            seen[p.item] = true;
        }
        (0..seen.len()).filter(|&i| seen[i]).collect()
    }

    /// Every positive of each user across train and test, sorted.
    pub fn all_items_by_user(&self) -> Vec<Vec<usize>> {
        let mut out = self.train.items_by_user();
        for (&u, items) in &self.test_cold_users {
            out[u].extend_from_slice(items);
        }
        for (&i, users) in &self.test_cold_items {
            for &u in users {
                out[u].push(i);
            }
        }
        for v in &mut out {
            v.sort_unstable();
            v.dedup();
        }
        out
    }

    /// Every positive user of each item across train and test, sorted.
    pub fn all_users_by_item(&self) -> Vec<Vec<usize>> {
        let mut out = self.train.users_by_item();
        for (&u, items) in &self.test_cold_users {
            for &i in items {
                out[i].push(u);
            }
        }
        for (&i, users) in &self.test_cold_items {
            out[i].extend_from_slice(users);
        }
        for v in &mut out {
            v.sort_unstable();
            v.dedup();
        }
        out
    }
}

/// Moves all pairs of a seeded uniform draw of users and items to test.
///
/// Draws `floor(user_frac * n_users)` users, then `floor(item_frac * n_items)`
/// items, from one ChaCha8 stream. Pairs joining a cold user to a cold item
/// belong to the cold-user side. Cold entities left without positives are
/// absent from the test maps.
pub fn cold_start_split(
    inter: &InteractionSet,
    user_frac: f64,
    item_frac: f64,
    seed: u64,
) -> Result<ColdStartSplit, DatasetError> {
    for (name, f) in [("user_frac", user_frac), ("item_frac", item_frac)] {
        if !(0.0..1.0).contains(&f) {
            return Err(DatasetError::Invalid(format!("{name} {f} outside [0, 1)")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_cold_users = (user_frac * inter.n_users() as f64).floor() as usize;
    let n_cold_items = (item_frac * inter.n_items() as f64).floor() as usize;
    let mut cold_users = index::sample(&mut rng, inter.n_users(), n_cold_users).into_vec();
    let mut cold_items = index::sample(&mut rng, inter.n_items(), n_cold_items).into_vec();
    cold_users.sort_unstable();
    cold_items.sort_unstable();

    let mut is_cold_user = vec![false; inter.n_users()];
    let mut is_cold_item = vec![false; inter.n_items()];
    for &u in &cold_users {
        is_cold_user[u] = true;
    }
    for &i in &cold_items {
        is_cold_item[i] = true;
    }

    let mut train = Vec::new();
    let mut test_cold_users: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut test_cold_items: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for p in inter.positives() {
        if is_cold_user[p.user] {
            test_cold_users.entry(p.user).or_default().push(p.item);
        } else if is_cold_item[p.item] {
            test_cold_items.entry(p.item).or_default().push(p.user);
        } else {
            train.push(*p);
        }
    }
    let dropped_users = cold_users.len() - test_cold_users.len();
    let dropped_items = cold_items.len() - test_cold_items.len();
    if dropped_users > 0 || dropped_items > 0 {
        log::info!(
            "cold split: {dropped_users} cold users and {dropped_items} cold items have no positives and are not evaluated"
        );
    }
    for v in test_cold_items.values_mut() {
        v.sort_unstable();
    }

    Ok(ColdStartSplit {
        train: inter.with_positives(train),
        cold_users,
        cold_items,
        test_cold_users,
        test_cold_items,
    })
}
