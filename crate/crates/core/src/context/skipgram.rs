//! Skip-gram with negative sampling over walk corpora, and the cosine
//! scorer used to rank candidates with the resulting node embeddings.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{KgError, Result};
use crate::models::EmbeddingTable;
use crate::trainer::loss::sigmoid;
use crate::trainer::rng_stream;

use super::WalkConfig;

/// (center, context) pairs within `window` of each other, in both orders.
pub fn window_pairs(walk: &[usize], window: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..walk.len() {
        for off in 1..=window {
            if i + off >= walk.len() {
                break;
            }
            pairs.push((walk[i], walk[i + off]));
            pairs.push((walk[i + off], walk[i]));
        }
    }
    pairs
}

/// Trains skip-gram node embeddings over the walk corpus.
///
/// Plain SGD with uniform negative sampling; single-threaded and
/// reproducible for a fixed seed. Returns a row-major
/// `entity_count x dim` matrix.
pub fn skipgram_train(
    walks: &[Vec<usize>],
    entity_count: usize,
    config: &WalkConfig,
) -> Result<Vec<f32>> {
    config.validate()?;
    if walks.is_empty() {
        return Err(KgError::Config("skip-gram needs a non-empty walk corpus".into()));
    }
    for walk in walks {
        for &id in walk {
            if id >= entity_count {
                return Err(KgError::IdBounds(format!(
                    "walk node {id} >= entity_count {entity_count}"
                )));
            }
        }
    }

    let dim = config.dim;
    let mut init_rng = rng_stream(config.seed, 0);
    // word2vec convention: random input vectors, zero context vectors.
    let mut input: Vec<f64> = (0..entity_count * dim)
        .map(|_| init_rng.gen_range(-0.5..0.5) / dim as f64)
        .collect();
    let mut context = vec![0.0f64; entity_count * dim];

    let mut pairs: Vec<(usize, usize)> = walks
        .iter()
        .flat_map(|w| window_pairs(w, config.window))
        .collect();
    if pairs.is_empty() {
        // All walks were single-node paths; nothing to learn from.
        return Ok(input.iter().map(|&v| v as f32).collect());
    }

    let mut shuffle_rng = rng_stream(config.seed, 1);
    let mut neg_rng = rng_stream(config.seed, 2);
    let mut grad_center = vec![0.0f64; dim];
    for _ in 0..config.epochs {
        pairs.shuffle(&mut shuffle_rng);
        for &(center, ctx) in &pairs {
            grad_center.iter_mut().for_each(|g| *g = 0.0);
            let c_off = center * dim;
            {
                // Positive update.
                let w = &input[c_off..c_off + dim];
                let o = &mut context[ctx * dim..(ctx + 1) * dim];
                let z: f64 = w.iter().zip(o.iter()).map(|(a, b)| a * b).sum();
                let g = sigmoid(z) - 1.0;
                for k in 0..dim {
                    grad_center[k] += g * o[k];
                    o[k] -= config.lr * g * w[k];
                }
            }
            for _ in 0..config.neg_samples {
                let neg = neg_rng.gen_range(0..entity_count);
                let w = &input[c_off..c_off + dim];
                let o = &mut context[neg * dim..(neg + 1) * dim];
                let z: f64 = w.iter().zip(o.iter()).map(|(a, b)| a * b).sum();
                let g = sigmoid(z);
                for k in 0..dim {
                    grad_center[k] += g * o[k];
                    o[k] -= config.lr * g * w[k];
                }
            }
            for k in 0..dim {
                input[c_off + k] -= config.lr * grad_center[k];
            }
        }
    }
    Ok(input.iter().map(|&v| v as f32).collect())
}

/// Cosine similarity of two node embedding rows; zero-norm rows score 0.
pub fn deepwalk_score_rows(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb).sqrt()
}

/// Cosine similarity between two entities of a node-embedding table.
pub fn deepwalk_score(table: &EmbeddingTable, h: usize, t: usize) -> Result<f64> {
    table.check_ids(h, 0, t)?;
    Ok(deepwalk_score_rows(table.entity_row(h), table.entity_row(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_one_extracts_adjacent_pairs_both_ways() {
        let pairs = window_pairs(&[10, 11, 12], 1);
        assert_eq!(pairs, vec![(10, 11), (11, 10), (11, 12), (12, 11)]);
    }

    #[test]
    fn saturated_window_yields_all_ordered_position_pairs() {
        let walk = [3, 1, 4];
        let pairs = window_pairs(&walk, 10);
        // Every ordered pair of distinct positions appears exactly once.
        assert_eq!(pairs.len(), 6);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(
                        pairs.iter().any(|&p| p == (walk[i], walk[j])),
                        "missing ({}, {})",
                        walk[i],
                        walk[j]
                    );
                }
            }
        }
    }

    #[test]
    fn pair_extraction_is_symmetric() {
        let walk = [5, 2, 9, 2, 7, 0];
        let pairs = window_pairs(&walk, 3);
        for &(a, b) in &pairs {
            let fwd = pairs.iter().filter(|&&p| p == (a, b)).count();
            let bwd = pairs.iter().filter(|&&p| p == (b, a)).count();
            assert_eq!(fwd, bwd, "asymmetric pair ({a}, {b})");
        }
    }

    #[test]
    fn rejects_node_ids_beyond_entity_count() {
        let walks = vec![vec![0, 5]];
        let err = skipgram_train(&walks, 3, &WalkConfig::default()).unwrap_err();
        assert!(matches!(err, KgError::IdBounds(_)));
    }

    #[test]
    fn disconnected_cliques_separate_in_embedding_space() {
        // Two 5-cliques with no edges between them.
        let mut walks = Vec::new();
        let clique = |base: usize| -> Vec<Vec<usize>> {
            let mut out = Vec::new();
            for start in 0..5 {
                let mut walk = Vec::new();
                for s in 0..20 {
                    walk.push(base + (start + s) % 5);
                }
                out.push(walk);
            }
            out
        };
        walks.extend(clique(0));
        walks.extend(clique(5));
        let config = WalkConfig {
            dim: 16,
            epochs: 8,
            window: 3,
            neg_samples: 4,
            lr: 0.05,
            seed: 3,
            ..WalkConfig::default()
        };
        let emb = skipgram_train(&walks, 10, &config).unwrap();
        let row = |i: usize| &emb[i * 16..(i + 1) * 16];
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for a in 0..10 {
            for b in (a + 1)..10 {
                let cos = deepwalk_score_rows(row(a), row(b));
                if (a < 5) == (b < 5) {
                    intra.push(cos);
                } else {
                    inter.push(cos);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&intra) > mean(&inter),
            "intra {} vs inter {}",
            mean(&intra),
            mean(&inter)
        );
    }

    #[test]
    fn cosine_edges() {
        assert_eq!(deepwalk_score_rows(&[1.0, 2.0], &[1.0, 2.0]), 1.0);
        assert_eq!(deepwalk_score_rows(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(deepwalk_score_rows(&[1.0, 2.0], &[-1.0, -2.0]), -1.0);
        assert_eq!(deepwalk_score_rows(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn training_is_reproducible() {
        let walks = vec![vec![0, 1, 2, 1, 0], vec![2, 0, 1]];
        let config = WalkConfig {
            dim: 8,
            epochs: 2,
            ..WalkConfig::default()
        };
        let a = skipgram_train(&walks, 3, &config).unwrap();
        let b = skipgram_train(&walks, 3, &config).unwrap();
        assert_eq!(a, b);
    }
}
