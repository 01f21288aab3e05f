//! Bagged CART ensemble used as the default predictor.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tidytable::{CellValue, TidyTable};

use super::{PredictorAdapter, Task};

/// Stand-in for missing or non-numeric cells; sorts below every real value.
const MISSING: f64 = -1e300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub task: Task,
    pub max_depth: usize,
    pub n_trees: usize,
    pub seed: u64,
    /// Features considered per split; all when `None`.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
}

impl TreeConfig {
    pub fn new(task: Task, seed: u64) -> Self {
        Self {
            task,
            max_depth: 8,
            n_trees: 10,
            seed,
            max_features: None,
            min_samples_split: 2,
        }
    }
}

pub fn builtin_tree(task: Task, max_depth: usize, n_trees: usize, seed: u64) -> BaggedTrees {
    BaggedTrees {
        config: TreeConfig {
            max_depth,
            n_trees,
            ..TreeConfig::new(task, seed)
        },
    }
}

#[derive(Debug, Clone)]
pub struct BaggedTrees {
    pub config: TreeConfig,
}

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
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict_row(&self, x: &[Vec<f64>], row: usize) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature][row] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Fitted ensemble. Classification leaves hold class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    task: Task,
    classes: Vec<CellValue>,
}

fn matrix(features: &TidyTable) -> Vec<Vec<f64>> {
    features
        .columns()
        .iter()
        .map(|c| c.iter().map(|v| v.as_number().unwrap_or(MISSING)).collect())
        .collect()
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    n_classes: usize,
    cfg: &'a TreeConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf_value(&self, idx: &[usize]) -> f64 {
        match self.cfg.task {
            Task::Regression => idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64,
            Task::Classification => {
                let counts = self.class_counts(idx);
                // highest count, smallest class on ties
                let best = counts
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(&a.0)))
                    .map_or(0, |(k, _)| k);
                best as f64
            }
        }
    }

    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in idx {
            counts[self.y[i] as usize] += 1;
        }
        counts
    }

    fn impurity(&self, idx: &[usize]) -> f64 {
        match self.cfg.task {
            Task::Classification => gini(&self.class_counts(idx), idx.len()),
            Task::Regression => {
                let n = idx.len() as f64;
                let s: f64 = idx.iter().map(|&i| self.y[i]).sum();
                let s2: f64 = idx.iter().map(|&i| self.y[i] * self.y[i]).sum();
                (s2 / n - (s / n) * (s / n)).max(0.0)
            }
        }
    }

    /// Best (feature, threshold, weighted child impurity) over the candidate features.
    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n_features = self.x.len();
        let features: Vec<usize> = match self.cfg.max_features {
            Some(k) if k < n_features => {
                let mut f = sample(&mut self.rng, n_features, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..n_features).collect(),
        };
        let n = idx.len() as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in features {
            let col = &self.x[f];
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            if col[order[0]] == col[order[order.len() - 1]] {
                continue;
            }
            match self.cfg.task {
                Task::Classification => {
                    let total = self.class_counts(&order);
                    let mut left = vec![0usize; self.n_classes];
                    for pos in 0..order.len() - 1 {
                        left[self.y[order[pos]] as usize] += 1;
                        let (a, b) = (col[order[pos]], col[order[pos + 1]]);
                        if a == b {
                            continue;
                        }
                        let nl = pos + 1;
                        let nr = order.len() - nl;
                        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                        let score = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n;
                        if best.is_none_or(|(_, _, s)| score < s) {
                            best = Some((f, midpoint(a, b), score));
                        }
                    }
                }
                Task::Regression => {
                    let (ts, ts2) = order
                        .iter()
                        .fold((0.0, 0.0), |(s, s2), &i| (s + self.y[i], s2 + self.y[i] * self.y[i]));
                    let (mut ls, mut ls2) = (0.0, 0.0);
                    for pos in 0..order.len() - 1 {
                        let y = self.y[order[pos]];
                        ls += y;
                        ls2 += y * y;
                        let (a, b) = (col[order[pos]], col[order[pos + 1]]);
                        if a == b {
                            continue;
                        }
                        let nl = (pos + 1) as f64;
                        let nr = n - nl;
                        let (rs, rs2) = (ts - ls, ts2 - ls2);
                        let sse = (ls2 - ls * ls / nl) + (rs2 - rs * rs / nr);
                        let score = sse.max(0.0) / n;
                        if best.is_none_or(|(_, _, s)| score < s) {
                            best = Some((f, midpoint(a, b), score));
                        }
                    }
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.leaf_value(&idx)));
        let impurity = self.impurity(&idx);
        if depth >= self.cfg.max_depth || idx.len() < self.cfg.min_samples_split.max(2) || impurity <= 1e-12 {
            return id;
        }
        let Some((feature, threshold, score)) = self.best_split(&idx) else {
            return id;
        };
        if impurity - score <= 1e-12 {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[feature][i] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

impl PredictorAdapter for BaggedTrees {
    type Handle = Forest;

    fn task(&self) -> Task {
        self.config.task
    }

    fn train(&self, features: &TidyTable, labels: &[CellValue]) -> Result<Forest> {
        let n = labels.len();
        if n == 0 || features.row_count() != n {
            return Err(Error::Importance("empty training set".into()));
        }
        let cfg = &self.config;
        let x = matrix(features);
        let (y, classes) = match cfg.task {
            Task::Classification => {
                let mut classes: BTreeMap<String, CellValue> = BTreeMap::new();
                for l in labels {
                    let key = l.as_text().map_or_else(String::new, |t| t.into_owned());
                    classes.entry(key).or_insert_with(|| l.clone());
                }
                let index: BTreeMap<&String, usize> = classes.keys().enumerate().map(|(i, k)| (k, i)).collect();
                let y = labels
                    .iter()
                    .map(|l| index[&l.as_text().map_or_else(String::new, |t| t.into_owned())] as f64)
                    .collect();
                (y, classes.into_values().collect::<Vec<_>>())
            }
            Task::Regression => {
                let y: Vec<f64> = labels
                    .iter()
                    .map(|l| {
                        l.as_number()
                            .ok_or_else(|| Error::Importance(format!("non-numeric regression label {l}")))
                    })
                    .collect::<Result<_>>()?;
                (y, Vec::new())
            }
        };
        let n_classes = classes.len();
        let trees = (0..cfg.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(t as u64);
                let boot: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut b = Builder {
                    x: &x,
                    y: &y,
                    n_classes,
                    cfg,
                    rng,
                    nodes: Vec::new(),
                };
                b.grow(boot, 0);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(Forest {
            trees,
            task: cfg.task,
            classes,
        })
    }

    fn predict(&self, forest: &Forest, features: &TidyTable) -> Vec<CellValue> {
        let x = matrix(features);
        (0..features.row_count())
            .map(|r| match forest.task {
                Task::Regression => {
                    let s: f64 = forest.trees.iter().map(|t| t.predict_row(&x, r)).sum();
                    CellValue::Number(s / forest.trees.len() as f64)
                }
                Task::Classification => {
                    let mut votes = vec![0usize; forest.classes.len()];
                    for t in &forest.trees {
                        votes[t.predict_row(&x, r) as usize] += 1;
                    }
                    let k = votes
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(&a.0)))
                        .map_or(0, |(k, _)| k);
                    forest.classes[k].clone()
                }
            })
            .collect()
    }
}
