//! Uniform random walks over the relation-stripped, undirected graph.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::data::TripletStore;
use crate::error::{KgError, Result};
use crate::trainer::rng_stream;

/// DeepWalk hyperparameters: walk generation plus skip-gram training.
#[derive(Debug, Clone)]
pub struct WalkConfig {
    pub num_walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub neg_samples: usize,
    pub dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            num_walks_per_node: 10,
            walk_length: 40,
            window: 5,
            neg_samples: 5,
            dim: 64,
            epochs: 3,
            lr: 0.025,
            seed: 42,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_walks_per_node == 0
            || self.walk_length == 0
            || self.window == 0
            || self.neg_samples == 0
            || self.dim == 0
            || self.epochs == 0
        {
            return Err(KgError::Config("walk counts must all be >= 1".into()));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(KgError::Config(format!(
                "walk lr must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

/// Generates `num_walks_per_node` uniform walks of `walk_length` nodes from
/// every node, treating edges as undirected and ignoring relations.
///
/// Walks stop early only at isolated nodes. Each start node draws from its
/// own RNG substream, so the output is identical whether nodes run
/// sequentially or in parallel.
pub fn generate_walks(store: &TripletStore, config: &WalkConfig) -> Result<Vec<Vec<usize>>> {
    config.validate()?;
    let n = store.vocab.entity_count;
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in &store.triples {
        adjacency[t.head].push(t.tail);
        adjacency[t.tail].push(t.head);
    }
    let walks: Vec<Vec<Vec<usize>>> = (0..n)
        .into_par_iter()
        .map(|node| {
            let mut rng = rng_stream(config.seed, node as u64 + 1);
            let mut node_walks = Vec::with_capacity(config.num_walks_per_node);
            for _ in 0..config.num_walks_per_node {
                let mut walk = Vec::with_capacity(config.walk_length);
                walk.push(node);
                let mut current = node;
                while walk.len() < config.walk_length {
                    let neighbors = &adjacency[current];
                    if neighbors.is_empty() {
                        break;
                    }
                    current = neighbors[rng.gen_range(0..neighbors.len())];
                    walk.push(current);
                }
                node_walks.push(walk);
            }
            node_walks
        })
        .collect();
    Ok(walks.into_iter().flatten().collect())
}

/// One path per line, space-separated entity ids.
pub fn save_walks(walks: &[Vec<usize>], path: &Path) -> Result<()> {
    let mut out = String::new();
    for walk in walks {
        let mut first = true;
        for id in walk {
            if !first {
                out.push(' ');
            }
            write!(out, "{id}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| KgError::io(path, e))
}

pub fn load_walks(path: &Path) -> Result<Vec<Vec<usize>>> {
    let text = fs::read_to_string(path).map_err(|e| KgError::io(path, e))?;
    let mut walks = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut walk = Vec::new();
        for tok in line.split_whitespace() {
            let id: usize = tok.parse().map_err(|_| {
                KgError::parse(path, lineno + 1, format!("not an entity id: {tok:?}"))
            })?;
            walk.push(id);
        }
        walks.push(walk);
    }
    Ok(walks)
}
