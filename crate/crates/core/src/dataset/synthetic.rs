//! Attribute-driven synthetic data for tests and smoke runs.
//!
//! Every user and item carries a latent topic. Occupation and age of a user
//! and the primary genre of an item are drawn from their topic, and ratings
//! are high mostly for topic-matching pairs, so attributes alone predict
//! preference for entities never seen in training.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::movielens::{AgeGroup, Gender, Genre, ItemProfile, RawRating, UserProfile, N_OCCUPATIONS};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub users: Vec<UserProfile>,
    pub items: Vec<ItemProfile>,
    pub ratings: Vec<RawRating>,
    /// Latent topic per user, indexed like `users`.
    pub user_topics: Vec<usize>,
    /// Latent topic per item, indexed like `items`.
    pub item_topics: Vec<usize>,
}

/// Topic count used by the fixtures and the `synth` command.
pub const DEFAULT_TOPICS: usize = 6;

const BASE_TIMESTAMP: i64 = 978_300_000;

/// Probability that a user rates an item of its own topic / another topic.
const RATE_MATCH: f64 = 0.2;
const RATE_MISMATCH: f64 = 0.03;
/// Probability that such a rating is 4 or 5.
const LIKE_MATCH: f64 = 0.85;
const LIKE_MISMATCH: f64 = 0.1;

pub fn synthetic_dataset(seed: u64, n_users: usize, n_items: usize, n_topics: usize) -> SyntheticData {
    let n_topics = n_topics.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut users = Vec::with_capacity(n_users);
    let mut user_topics = Vec::with_capacity(n_users);
    for u in 0..n_users {
        let topic = rng.random_range(0..n_topics);
        let occupation = if rng.random_bool(0.8) {
            topic % N_OCCUPATIONS
        } else {
            rng.random_range(0..N_OCCUPATIONS)
        };
        let age = if rng.random_bool(0.5) {
            topic % 7
        } else {
            rng.random_range(0..7)
        };
        users.push(UserProfile {
            user_id: u as u32 + 1,
            gender: Gender::ALL[rng.random_range(0..2)],
            age: AgeGroup::from_index(age).expect("index < 7"),
            occupation: occupation as u8,
        });
        user_topics.push(topic);
    }

    let mut items = Vec::with_capacity(n_items);
    let mut item_topics = Vec::with_capacity(n_items);
    for i in 0..n_items {
        let topic = rng.random_range(0..n_topics);
        let mut genres = Vec::new();
        if rng.random_bool(0.9) {
            genres.push(Genre::ALL[topic % Genre::ALL.len()]);
        }
        let extras = rng.random_range(if genres.is_empty() { 1 } else { 0 }..=2);
        for _ in 0..extras {
            let g = Genre::ALL[rng.random_range(0..Genre::ALL.len())];
            if !genres.contains(&g) {
                genres.push(g);
            }
        }
        let year = rng.random_range(1919..=2000);
        items.push(ItemProfile {
            item_id: i as u32 + 1,
            title: format!("Synthetic Movie {} ({year})", i + 1),
            year,
            genres,
        });
        item_topics.push(topic);
    }

    let mut ratings = Vec::new();
    for u in 0..n_users {
        let mut count = 0;
        for i in 0..n_items {
            let matched = user_topics[u] == item_topics[i];
            let p_rate = if matched { RATE_MATCH } else { RATE_MISMATCH };
            if !rng.random_bool(p_rate) {
                continue;
            }
            let p_like = if matched { LIKE_MATCH } else { LIKE_MISMATCH };
            let rating = if rng.random_bool(p_like) {
                rng.random_range(4..=5)
            } else {
                rng.random_range(1..=3)
            };
            ratings.push(rating_at(u, i, rating, count));
            count += 1;
        }
        if count == 0 && n_items > 0 {
            let i = rng.random_range(0..n_items);
            ratings.push(rating_at(u, i, rng.random_range(1..=5), 0));
        }
    }

    SyntheticData {
        users,
        items,
        ratings,
        user_topics,
        item_topics,
    }
}

fn rating_at(u: usize, i: usize, rating: u8, k: usize) -> RawRating {
    RawRating {
        user_id: u as u32 + 1,
        item_id: i as u32 + 1,
        rating,
        timestamp: BASE_TIMESTAMP + (u as i64) * 10_000 + k as i64,
    }
}

impl SyntheticData {
    pub fn to_raw(&self) -> super::RawDataset {
        super::RawDataset {
            ratings: self.ratings.clone(),
            users: self.users.clone(),
            items: self.items.clone(),
        }
    }

    /// Writes `ratings.dat`, `users.dat` and `movies.dat` into `dir`.
    pub fn write_dat(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let join = |lines: Vec<String>| {
            let mut s = lines.join("\n");
            s.push('\n');
            s
        };
        fs::write(
            dir.join("ratings.dat"),
            join(self.ratings.iter().map(RawRating::to_dat_line).collect()),
        )?;
        fs::write(
            dir.join("users.dat"),
            join(self.users.iter().map(UserProfile::to_dat_line).collect()),
        )?;
        fs::write(
            dir.join("movies.dat"),
            join(self.items.iter().map(ItemProfile::to_dat_line).collect()),
        )?;
        Ok(())
    }
}
