//! CART regression tree. Splits minimize the children's summed squared
//! error; thresholds are midpoints between consecutive distinct sorted
//! values. Ties break toward the lowest feature index, then the lowest
//! threshold, so fitting is fully deterministic.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        n: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub(crate) root: Node,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Longest root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        fn walk(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    pub fn leaf_count(&self) -> usize {
        fn walk(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }
}

pub(crate) struct TreeFit<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
    pub d: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub max_features: usize,
}

struct BestSplit {
    decrease: f64,
    feature: usize,
    threshold: f64,
}

impl TreeFit<'_> {
    /// Fit on the (multiset of) sample indices, accumulating each split's
    /// squared-error decrease into `importance[feature]`.
    pub fn fit(
        &self,
        indices: Vec<usize>,
        rng: &mut ChaCha8Rng,
        importance: &mut [f64],
    ) -> Node {
        self.build(indices, 0, rng, importance)
    }

    fn build(
        &self,
        indices: Vec<usize>,
        depth: usize,
        rng: &mut ChaCha8Rng,
        importance: &mut [f64],
    ) -> Node {
        let n = indices.len();
        debug_assert!(n > 0);
        let first = self.y[indices[0]];
        // purity shortcut keeps constant targets bit-exact
        if indices.iter().all(|&i| self.y[i] == first) {
            return Node::Leaf { value: first, n };
        }
        if depth >= self.max_depth || n < 2 * self.min_leaf {
            return self.leaf(&indices);
        }

        let features = self.sample_features(rng);
        let best = self.best_split(&indices, &features);
        let Some(best) = best else {
            return self.leaf(&indices);
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x[i][best.feature] <= best.threshold);
        // midpoint rounding can in principle strand one side; refuse then
        if left_idx.is_empty() || right_idx.is_empty() {
            return self.leaf(&indices);
        }
        importance[best.feature] += best.decrease;
        let left = self.build(left_idx, depth + 1, rng, importance);
        let right = self.build(right_idx, depth + 1, rng, importance);
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn leaf(&self, indices: &[usize]) -> Node {
        let sum: f64 = indices.iter().map(|&i| self.y[i]).sum();
        Node::Leaf {
            value: sum / indices.len() as f64,
            n: indices.len(),
        }
    }

    fn sample_features(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        if self.max_features >= self.d {
            return (0..self.d).collect();
        }
        let mut picked = sample(rng, self.d, self.max_features).into_vec();
        // ascending evaluation order makes the tie rule "lowest index wins"
        picked.sort_unstable();
        picked
    }

    fn best_split(&self, indices: &[usize], features: &[usize]) -> Option<BestSplit> {
        let n = indices.len();
        let total_s1: f64 = indices.iter().map(|&i| self.y[i]).sum();
        let total_s2: f64 = indices.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let sse_total = (total_s2 - total_s1 * total_s1 / n as f64).max(0.0);

        let mut best: Option<BestSplit> = None;
        let mut sorted = indices.to_vec();
        for &f in features {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut s1 = 0.0f64;
            let mut s2 = 0.0f64;
            for k in 1..n {
                let yi = self.y[sorted[k - 1]];
                s1 += yi;
                s2 += yi * yi;
                if k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let a = self.x[sorted[k - 1]][f];
                let b = self.x[sorted[k]][f];
                if a == b {
                    continue;
                }
                let left = (s2 - s1 * s1 / k as f64).max(0.0);
                let r1 = total_s1 - s1;
                let r2 = total_s2 - s2;
                let right = (r2 - r1 * r1 / (n - k) as f64).max(0.0);
                let decrease = sse_total - left - right;
                if decrease > 0.0 && best.as_ref().is_none_or(|bst| decrease > bst.decrease) {
                    best = Some(BestSplit {
                        decrease,
                        feature: f,
                        threshold: (a + b) / 2.0,
                    });
                }
            }
        }
        best
    }
}
