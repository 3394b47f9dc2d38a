//! Binary decision trees on numeric features, split by gain ratio.
//!
//! Capacity is controlled only by the minimum number of training instances
//! per leaf; there is no post-pruning.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::spectra::Label;

/// Splits whose information gain does not exceed this are ignored.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub asd: usize,
    pub nt: usize,
}

impl ClassCounts {
    fn from_labels<'a>(labels: impl IntoIterator<Item = &'a Label>) -> Self {
        let mut c = Self::default();
        for l in labels {
            c.add(*l);
        }
        c
    }

    fn add(&mut self, label: Label) {
        match label {
            Label::Asd => self.asd += 1,
            Label::Nt => self.nt += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.asd + self.nt
    }

    /// Majority label; ties go to NT.
    pub fn majority(&self) -> Label {
        if self.asd > self.nt {
            Label::Asd
        } else {
            Label::Nt
        }
    }

    pub fn is_pure(&self) -> bool {
        self.asd == 0 || self.nt == 0
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        let n = self.total() as f64;
        [self.asd, self.nt]
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: Label,
        counts: ClassCounts,
    },
    /// Instances with `value <= threshold` go left.
    Split {
        feature: usize,
        feature_name: String,
        threshold: f64,
        counts: ClassCounts,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(label: Label, counts: ClassCounts) -> Self {
        TreeNode::Leaf { label, counts }
    }

    pub fn split(
        feature: usize,
        feature_name: impl Into<String>,
        threshold: f64,
        left: TreeNode,
        right: TreeNode,
    ) -> Self {
        let (l, r) = (left.counts(), right.counts());
        TreeNode::Split {
            feature,
            feature_name: feature_name.into(),
            threshold,
            counts: ClassCounts {
                asd: l.asd + r.asd,
                nt: l.nt + r.nt,
            },
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn counts(&self) -> ClassCounts {
        match self {
            TreeNode::Leaf { counts, .. } | TreeNode::Split { counts, .. } => *counts,
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a TreeNode>) {
        match self {
            TreeNode::Leaf { .. } => out.push(self),
            TreeNode::Split { left, right, .. } => {
                left.leaves(out);
                right.leaves(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub schema: Vec<String>,
    pub min_leaf: usize,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn predict(&self, features: &FeatureVector) -> Result<Label> {
        if features.schema != self.schema {
            return Err(Error::invalid(format!(
                "feature schema {:?} does not match the tree's {:?}",
                features.schema, self.schema
            )));
        }
        Ok(self.predict_values(&features.values))
    }

    fn predict_values(&self, values: &[f64]) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if values[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_counts(&self) -> Vec<ClassCounts> {
        let mut out = Vec::new();
        self.root.leaves(&mut out);
        out.iter().map(|n| n.counts()).collect()
    }

    /// Indented text rendering, one branch per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        match &self.root {
            TreeNode::Leaf { label, counts } => {
                let _ = writeln!(out, ": {label} ({})", leaf_stats(*counts));
            }
            node => render_node(node, 0, &mut out),
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn leaf_stats(c: ClassCounts) -> String {
    let errors = c.total() - c.asd.max(c.nt);
    if errors == 0 {
        format!("{}", c.total())
    } else {
        format!("{}/{}", c.total(), errors)
    }
}

fn render_node(node: &TreeNode, depth: usize, out: &mut String) {
    let TreeNode::Split {
        feature_name,
        threshold,
        left,
        right,
        ..
    } = node
    else {
        return;
    };
    let indent = "|   ".repeat(depth);
    for (op, child) in [("<=", left), (">", right)] {
        match child.as_ref() {
            TreeNode::Leaf { label, counts } => {
                let _ = writeln!(
                    out,
                    "{indent}{feature_name} {op} {threshold}: {label} ({})",
                    leaf_stats(*counts)
                );
            }
            split => {
                let _ = writeln!(out, "{indent}{feature_name} {op} {threshold}");
                render_node(split, depth + 1, out);
            }
        }
    }
}

/// The best split of one node, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub gain_ratio: f64,
}

struct Dataset<'a> {
    rows: Vec<&'a [f64]>,
    labels: &'a [Label],
}

/// The split a tree of leaf size `min_leaf` would place at its root.
pub fn best_split(features: &[FeatureVector], labels: &[Label], min_leaf: usize) -> Result<Option<SplitChoice>> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::dims(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    let data = Dataset {
        rows: features.iter().map(|f| f.values.as_slice()).collect(),
        labels,
    };
    let idx: Vec<usize> = (0..labels.len()).collect();
    Ok(best_split_in(&data, &idx, min_leaf.max(1)))
}

/// Grows a tree by greedy gain-ratio splitting.
pub fn fit_tree(features: &[FeatureVector], labels: &[Label], min_leaf: usize) -> Result<DecisionTree> {
    if min_leaf < 1 {
        return Err(Error::invalid("minimum leaf size must be at least 1"));
    }
    if features.len() != labels.len() {
        return Err(Error::dims(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features.len() < 2 {
        return Err(Error::invalid("a tree needs at least 2 training instances"));
    }
    let schema = features[0].schema.clone();
    if schema.is_empty() {
        return Err(Error::invalid("empty feature schema"));
    }
    if features.iter().any(|f| f.schema != schema) {
        return Err(Error::invalid("feature schemas differ between instances"));
    }
    let data = Dataset {
        rows: features.iter().map(|f| f.values.as_slice()).collect(),
        labels,
    };
    let idx: Vec<usize> = (0..labels.len()).collect();
    let root = grow(&data, &schema, idx, min_leaf);
    Ok(DecisionTree { schema, min_leaf, root })
}

fn grow(data: &Dataset<'_>, schema: &[String], idx: Vec<usize>, min_leaf: usize) -> TreeNode {
    let counts = ClassCounts::from_labels(idx.iter().map(|&i| &data.labels[i]));
    let leaf = TreeNode::Leaf {
        label: counts.majority(),
        counts,
    };
    if counts.is_pure() || idx.len() < 2 * min_leaf {
        return leaf;
    }
    let Some(choice) = best_split_in(data, &idx, min_leaf) else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| data.rows[i][choice.feature] <= choice.threshold);
    TreeNode::Split {
        feature: choice.feature,
        feature_name: schema[choice.feature].clone(),
        threshold: choice.threshold,
        counts,
        left: Box::new(grow(data, schema, left, min_leaf)),
        right: Box::new(grow(data, schema, right, min_leaf)),
    }
}

/// Highest gain ratio over all features and all midpoints between
/// consecutive distinct values, keeping both sides at `min_leaf` or more.
/// Ties keep the first candidate (lowest feature, then lowest threshold).
fn best_split_in(data: &Dataset<'_>, idx: &[usize], min_leaf: usize) -> Option<SplitChoice> {
    let n = idx.len();
    let parent = ClassCounts::from_labels(idx.iter().map(|&i| &data.labels[i]));
    let parent_entropy = parent.entropy();
    let n_features = data.rows[idx[0]].len();
    let mut best: Option<SplitChoice> = None;
    let mut order = idx.to_vec();
    for f in 0..n_features {
        order.sort_by(|&a, &b| data.rows[a][f].total_cmp(&data.rows[b][f]).then(a.cmp(&b)));
        let mut left = ClassCounts::default();
        for cut in 1..n {
            left.add(data.labels[order[cut - 1]]);
            let (lo, hi) = (data.rows[order[cut - 1]][f], data.rows[order[cut]][f]);
            if lo == hi || cut < min_leaf || n - cut < min_leaf {
                continue;
            }
            let right = ClassCounts {
                asd: parent.asd - left.asd,
                nt: parent.nt - left.nt,
            };
            let (wl, wr) = (cut as f64 / n as f64, (n - cut) as f64 / n as f64);
            let gain = parent_entropy - wl * left.entropy() - wr * right.entropy();
            if gain <= MIN_GAIN {
                continue;
            }
            let split_info = -wl * wl.log2() - wr * wr.log2();
            let ratio = gain / split_info;
            if best.is_none_or(|b| ratio > b.gain_ratio) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    gain,
                    gain_ratio: ratio,
                });
            }
        }
    }
    best
}

// Strictly below `hi`, so `hi` always lands on the right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Fold index (0-based) of each instance, dealing every class round-robin
/// after a seeded shuffle.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [Label::Asd, Label::Nt] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Picks the minimum leaf size with the best mean stratified-CV accuracy.
/// Ties go to the smaller value.
pub fn tune_min_leaf(
    features: &[FeatureVector],
    labels: &[Label],
    grid: &[usize],
    folds: usize,
    seed: u64,
) -> Result<usize> {
    if grid.is_empty() {
        return Err(Error::invalid("empty tuning grid"));
    }
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    if let Some(&bad) = grid.iter().find(|&&g| g == 0) {
        return Err(Error::invalid(format!("invalid leaf size {bad} in tuning grid")));
    }
    if ClassCounts::from_labels(labels).is_pure() {
        return Err(Error::invalid("both classes required for tuning"));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let assignment = stratified_folds(labels, folds, seed);
    let mut best = (grid[0], f64::NEG_INFINITY);
    for &min_leaf in &grid {
        let acc = cv_accuracy(features, labels, &assignment, folds, min_leaf)?;
        if acc > best.1 {
            best = (min_leaf, acc);
        }
    }
    Ok(best.0)
}

fn cv_accuracy(
    features: &[FeatureVector],
    labels: &[Label],
    assignment: &[usize],
    folds: usize,
    min_leaf: usize,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut used = 0;
    for fold in 0..folds {
        let (val, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| assignment[i] == fold);
        if val.is_empty() || train.len() < 2 {
            continue;
        }
        let train_x: Vec<FeatureVector> = train.iter().map(|&i| features[i].clone()).collect();
        let train_y: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
        let tree = fit_tree(&train_x, &train_y, min_leaf)?;
        let hits = val
            .iter()
            .filter(|&&i| tree.predict_values(&features[i].values) == labels[i])
            .count();
        sum += hits as f64 / val.len() as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::invalid("no usable cross-validation fold"));
    }
    Ok(sum / used as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f64]) -> FeatureVector {
        let schema = (0..values.len()).map(|i| format!("f{i}")).collect();
        FeatureVector::new(values.to_vec(), schema).unwrap()
    }

    fn one_d(xs: &[f64]) -> Vec<FeatureVector> {
        xs.iter().map(|&x| fv(&[x])).collect()
    }

    use Label::{Asd as A, Nt as N};

    #[test]
    fn separable_one_d() {
        let tree = fit_tree(&one_d(&[0.0, 1.0, 10.0, 11.0]), &[A, A, N, N], 2).unwrap();
        assert_eq!(tree.depth(), 1);
        let TreeNode::Split { threshold, .. } = tree.root else {
            panic!()
        };
        assert!(threshold > 1.0 && threshold < 10.0);
        assert_eq!(tree.predict(&fv(&[0.5])).unwrap(), A);
        assert_eq!(tree.predict(&fv(&[10.5])).unwrap(), N);
    }

    #[test]
    fn single_class_gives_single_leaf() {
        let tree = fit_tree(&one_d(&[0.0, 1.0, 2.0]), &[A, A, A], 1).unwrap();
        assert_eq!(tree.root, TreeNode::leaf(A, ClassCounts { asd: 3, nt: 0 }));
        assert_eq!(tree.predict(&fv(&[100.0])).unwrap(), A);
    }

    #[test]
    fn leaf_tie_goes_to_nt() {
        let tree = fit_tree(&one_d(&[1.0, 1.0]), &[A, N], 1).unwrap();
        assert_eq!(tree.predict(&fv(&[1.0])).unwrap(), N);
    }

    #[test]
    fn min_leaf_is_respected() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<Label> = (0..20).map(|i| if i % 3 == 0 { A } else { N }).collect();
        for min_leaf in 1..6 {
            let tree = fit_tree(&one_d(&xs), &ys, min_leaf).unwrap();
            assert!(tree.leaf_counts().iter().all(|c| c.total() >= min_leaf));
        }
        assert!(fit_tree(&one_d(&xs), &ys, 0).is_err());
    }

    #[test]
    fn schema_mismatch_on_predict() {
        let tree = fit_tree(&one_d(&[0.0, 1.0]), &[A, N], 1).unwrap();
        assert!(tree.predict(&fv(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn render_looks_like_weka() {
        let tree = fit_tree(&one_d(&[0.0, 1.0, 10.0, 11.0]), &[A, A, N, N], 1).unwrap();
        assert_eq!(tree.render(), "f0 <= 5.5: ASD (2)\nf0 > 5.5: NT (2)\n");
    }

    #[test]
    fn tuning_edge_cases() {
        let x = one_d(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        let y = [A, A, A, N, N, N];
        assert_eq!(tune_min_leaf(&x, &y, &[2], 3, 0).unwrap(), 2);
        assert_eq!(tune_min_leaf(&x, &y, &[3, 1, 2], 3, 0).unwrap(), 1);
        assert!(tune_min_leaf(&x, &[A; 6], &[1, 2], 3, 0).is_err());
        assert!(tune_min_leaf(&x, &y, &[], 3, 0).is_err());
        assert!(tune_min_leaf(&x, &y, &[1, 2], 1, 0).is_err());
    }

    #[test]
    fn folds_are_stratified_and_deterministic() {
        let y: Vec<Label> = (0..23).map(|i| if i < 9 { A } else { N }).collect();
        let f1 = stratified_folds(&y, 5, 42);
        assert_eq!(f1, stratified_folds(&y, 5, 42));
        for fold in 0..5 {
            let asd = (0..23).filter(|&i| f1[i] == fold && y[i] == A).count();
            assert!((1..=2).contains(&asd));
        }
    }
}
