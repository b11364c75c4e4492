//! CART regression trees grown by weighted variance reduction.
//!
//! Every feature is sorted once per training matrix ([`Columns`]); each
//! node carries its rows in per-feature sorted order and hands a stable
//! partition of those lists to its children, so split search costs
//! `O(features × rows)` per node. Ensembles reuse one `Columns` across all
//! of their trees and express bootstrap samples as integer row weights.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

/// Column-major copy of a training matrix with per-feature sort orders.
#[derive(Debug, Clone)]
pub(crate) struct Columns {
    values: Vec<Vec<f64>>,
    sorted: Vec<Vec<usize>>,
    n_rows: usize,
}

impl Columns {
    pub(crate) fn new(x: &Matrix) -> Self {
        let values: Vec<Vec<f64>> = (0..x.cols()).map(|c| x.column(c).collect()).collect();
        let sorted = values
            .iter()
            .map(|col| {
                let mut idx: Vec<usize> = (0..x.rows()).collect();
                idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self {
            values,
            sorted,
            n_rows: x.rows(),
        }
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.n_rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

/// Growth state. `rows`/`vals` hold one segment of length `n` per feature,
/// each listing the active rows in that feature's sorted order; a node owns
/// the same `[lo, hi)` range in every segment.
struct Builder<'a> {
    y: &'a [f64],
    w: Vec<f64>,
    params: TreeParams,
    n: usize,
    rows: Vec<u32>,
    vals: Vec<f64>,
    go_left: Vec<bool>,
    scratch_rows: Vec<u32>,
    scratch_vals: Vec<f64>,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn build(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let (mut sw, mut swy) = (0.0, 0.0);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in &self.rows[lo..hi] {
            let (w, y) = (self.w[r as usize], self.y[r as usize]);
            sw += w;
            swy += w * y;
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: swy / sw });

        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if hi - lo < self.params.min_samples_split.max(2) || depth_reached || ymin == ymax {
            return id;
        }
        let Some(best) = self.find_split(lo, hi, sw, swy) else {
            return id;
        };

        let seg = best.feature * self.n;
        for i in seg + lo..seg + hi {
            self.go_left[self.rows[i] as usize] = self.vals[i] <= best.threshold;
        }
        let n_left = self.partition(lo, hi);
        let left = self.build(lo, lo + n_left, depth + 1);
        let right = self.build(lo + n_left, hi, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Stable partition of `[lo, hi)` in every segment by `go_left`.
    fn partition(&mut self, lo: usize, hi: usize) -> usize {
        let mut n_left = 0;
        for f in 0..self.rows.len() / self.n {
            let (a, b) = (f * self.n + lo, f * self.n + hi);
            self.scratch_rows.clear();
            self.scratch_vals.clear();
            let mut write = a;
            for i in a..b {
                let r = self.rows[i];
                if self.go_left[r as usize] {
                    self.rows[write] = r;
                    self.vals[write] = self.vals[i];
                    write += 1;
                } else {
                    self.scratch_rows.push(r);
                    self.scratch_vals.push(self.vals[i]);
                }
            }
            self.rows[write..b].copy_from_slice(&self.scratch_rows);
            self.vals[write..b].copy_from_slice(&self.scratch_vals);
            n_left = write - a;
        }
        n_left
    }

    /// Maximizes `S_L²/W_L + S_R²/W_R`, which is equivalent to minimizing
    /// the children's weighted squared error. First best wins on ties.
    fn find_split(&self, lo: usize, hi: usize, sw: f64, swy: f64) -> Option<BestSplit> {
        let min_leaf = self.params.min_samples_leaf.max(1);
        let n = hi - lo;
        let mut best: Option<BestSplit> = None;
        for feature in 0..self.rows.len() / self.n {
            let seg = feature * self.n;
            let rows = &self.rows[seg + lo..seg + hi];
            let vals = &self.vals[seg + lo..seg + hi];
            if vals[0] == vals[n - 1] {
                continue;
            }
            let (mut lw, mut lwy) = (0.0, 0.0);
            for i in 0..n - 1 {
                let r = rows[i] as usize;
                let w = self.w[r];
                lw += w;
                lwy += w * self.y[r];
                let (xv, xn) = (vals[i], vals[i + 1]);
                let left_count = i + 1;
                if xv >= xn || left_count < min_leaf || n - left_count < min_leaf {
                    continue;
                }
                let rw = sw - lw;
                if rw <= 0.0 {
                    continue;
                }
                let rwy = swy - lwy;
                let score = lwy * lwy / lw + rwy * rwy / rw;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = xv + (xn - xv) / 2.0;
                    let threshold = if mid < xn { mid } else { xv };
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

impl RegressionTree {
    pub fn fit(x: &Matrix, y: &[f64], params: TreeParams) -> Self {
        Self::fit_weighted(&Columns::new(x), y, None, params)
    }

    /// Rows with zero weight are left out entirely.
    pub(crate) fn fit_weighted(
        cols: &Columns,
        y: &[f64],
        weights: Option<&[f64]>,
        params: TreeParams,
    ) -> Self {
        let n_features = cols.values.len();
        let w: Vec<f64> = match weights {
            Some(w) => w.to_vec(),
            None => alloc::vec![1.0; cols.n_rows],
        };
        let n = w.iter().filter(|&&v| v > 0.0).count();
        if n == 0 || n_features == 0 {
            let mean = if y.is_empty() {
                0.0
            } else {
                y.iter().sum::<f64>() / y.len() as f64
            };
            return Self {
                nodes: alloc::vec![Node::Leaf { value: mean }],
                n_features,
            };
        }
        let mut rows = Vec::with_capacity(n * n_features);
        let mut vals = Vec::with_capacity(n * n_features);
        for (sorted, values) in cols.sorted.iter().zip(&cols.values) {
            for &r in sorted.iter().filter(|&&r| w[r] > 0.0) {
                rows.push(r as u32);
                vals.push(values[r]);
            }
        }
        let mut builder = Builder {
            y,
            w,
            params,
            n,
            rows,
            vals,
            go_left: alloc::vec![false; cols.n_rows],
            scratch_rows: Vec::with_capacity(n),
            scratch_vals: Vec::with_capacity(n),
            nodes: Vec::new(),
        };
        builder.build(0, n, 0);
        Self {
            nodes: builder.nodes,
            n_features,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| self.predict_row(x.row(r))).collect()
    }
}
