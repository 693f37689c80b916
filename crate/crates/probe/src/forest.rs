//! Random-forest regression: bootstrapped variance-reduction trees.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split as a fraction of all features.
    pub max_features: f64,
    pub min_samples_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: 1.0,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Best split of `idx` on `feature`, maximizing `Σl²/nl + Σr²/nr`, which
/// is equivalent to minimizing the summed squared error of both sides.
fn best_split_on(cols: &[Vec<f64>], y: &[f64], idx: &[usize], feature: usize, min_leaf: usize) -> Option<Split> {
    let col = &cols[feature];
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]));
    let total: f64 = order.iter().map(|&i| y[i]).sum();
    let n = order.len();
    let mut left = 0.0;
    let mut best: Option<Split> = None;
    for k in 1..n {
        left += y[order[k - 1]];
        let (a, b) = (col[order[k - 1]], col[order[k]]);
        if a == b || k < min_leaf || n - k < min_leaf {
            continue;
        }
        let right = total - left;
        let score = left * left / k as f64 + right * right / (n - k) as f64;
        if best.as_ref().is_none_or(|s| score > s.score) {
            let mid = a + (b - a) / 2.0;
            best = Some(Split {
                feature,
                threshold: if mid < b { mid } else { a },
                score,
            });
        }
    }
    best
}

fn grow(cols: &[Vec<f64>], y: &[f64], idx: Vec<usize>, cfg: &ForestConfig, rng: &mut ChaCha8Rng) -> RegressionTree {
    let d = cols.len();
    let mtry = ((cfg.max_features * d as f64).round() as usize).clamp(1, d);
    let mut nodes = Vec::new();
    // Pending nodes: (slot, sample indices).
    let mut stack = vec![(0usize, idx)];
    nodes.push(Node::Leaf(0.0));
    while let Some((slot, idx)) = stack.pop() {
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        let constant = idx.iter().all(|&i| y[i] == y[idx[0]]);
        if idx.len() < 2 * cfg.min_samples_leaf || constant {
            nodes[slot] = Node::Leaf(mean);
            continue;
        }
        let tried: Vec<usize> = sample(rng, d, mtry).into_vec();
        let mut best: Option<Split> = None;
        let consider = |best: &mut Option<Split>, f: usize| {
            if let Some(s) = best_split_on(cols, y, &idx, f, cfg.min_samples_leaf) {
                if best.as_ref().is_none_or(|b| s.score > b.score) {
                    *best = Some(s);
                }
            }
        };
        for &f in &tried {
            consider(&mut best, f);
        }
        if best.is_none() {
            // Every sampled feature was constant here; fall back to the rest.
            for f in (0..d).filter(|f| !tried.contains(f)) {
                consider(&mut best, f);
            }
        }
        let Some(split) = best else {
            nodes[slot] = Node::Leaf(mean);
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| cols[split.feature][i] <= split.threshold);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf(0.0));
        nodes.push(Node::Leaf(0.0));
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: li,
            right: ri,
        };
        stack.push((ri, r));
        stack.push((li, l));
    }
    RegressionTree { nodes }
}

impl RandomForest {
    /// Fits `n_trees` trees on bootstrap resamples. Tree `t` draws from
    /// its own stream of `seed`, so the result does not depend on thread
    /// scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[f64], cfg: &ForestConfig, seed: u64) -> Self {
        assert_eq!(x.len(), y.len(), "one target per row");
        assert!(!x.is_empty(), "empty training set");
        let d = x[0].len();
        let cols: Vec<Vec<f64>> = (0..d).map(|f| x.iter().map(|r| r[f]).collect()).collect();
        let n = x.len();
        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                grow(&cols, y, idx, cfg, &mut rng)
            })
            .collect();
        Self { trees }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }
}
