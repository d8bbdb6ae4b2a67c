//! From-scratch random forest over labeled log records.
//!
//! Features are the four IPv4 octets of the record's source IP, so every
//! record of one IP shares a feature vector and a fully grown leaf's
//! positive fraction converges to that IP's abnormal-row share. Trees are
//! CART with Gini impurity, grown on bootstrap resamples drawn from per-tree
//! streams derived from the master seed, so tree `i` is reproducible in
//! isolation and parallel training would be bitwise identical to sequential.
//!
//! Two scores are exposed: `predict_proba` (mean leaf positive fraction,
//! the raw ensemble probability) and `attack_score` (share of trees whose
//! leaf fraction exceeds the training corpus's positive-rate prior). The
//! calibrated score is what ranking and redirection consume: an IP whose
//! abnormal share merely tracks the corpus base rate scores near 0, while
//! one with systematic scan evidence scores near 1 regardless of whether
//! scans are 60% or 15% of its traffic.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logpipe::LabeledRecord;
use crate::rng::{self, SplitMix64};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub rng_seed: u64,
    pub max_depth: usize,
    pub min_samples_leaf: u64,
    pub features_per_split: usize,
    pub train_fraction: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            rng_seed: 42,
            max_depth: 12,
            min_samples_leaf: 1,
            // ceil(sqrt(4)) with four octet features.
            features_per_split: 2,
            train_fraction: 0.8,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        if !(1..=4).contains(&self.features_per_split) {
            return Err(Error::Config(format!(
                "features_per_split {} must lie in 1..=4",
                self.features_per_split
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// The four IPv4 octets, each in 0..=255.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureVector(pub [u8; 4]);

impl From<Ipv4Addr> for FeatureVector {
    fn from(ip: Ipv4Addr) -> Self {
        FeatureVector(ip.octets())
    }
}

/// A labeled, weighted distinct row used during tree growth.
#[derive(Debug, Clone, Copy)]
pub struct WeightedRow {
    pub fv: FeatureVector,
    pub label: u8,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: u8,
        threshold: u8,
        left: u32,
        right: u32,
    },
    Leaf {
        positive_fraction: f64,
        sample_count: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Root at index 0.
    pub nodes: Vec<TreeNode>,
}

fn gini(pos: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

impl DecisionTree {
    /// Grows a CART tree on weighted rows with Gini impurity, sampling
    /// `features_per_split` candidate octets per node. Splits test
    /// `octet <= threshold`.
    pub fn grow(rows: &[WeightedRow], params: &ForestParams, rng: &mut SplitMix64) -> DecisionTree {
        let mut nodes = Vec::new();
        Self::build(&mut nodes, rows.to_vec(), 0, params, rng);
        DecisionTree { nodes }
    }

    fn build(
        nodes: &mut Vec<TreeNode>,
        rows: Vec<WeightedRow>,
        depth: usize,
        params: &ForestParams,
        rng: &mut SplitMix64,
    ) -> u32 {
        let total: u64 = rows.iter().map(|r| r.weight).sum();
        let pos: u64 = rows.iter().filter(|r| r.label == 1).map(|r| r.weight).sum();
        let leaf = |nodes: &mut Vec<TreeNode>| {
            nodes.push(TreeNode::Leaf {
                positive_fraction: if total == 0 {
                    0.0
                } else {
                    pos as f64 / total as f64
                },
                sample_count: total,
            });
            (nodes.len() - 1) as u32
        };
        if depth >= params.max_depth || pos == 0 || pos == total {
            return leaf(nodes);
        }

        // Sample candidate features without replacement.
        let mut feats = [0u8, 1, 2, 3];
        for i in 0..params.features_per_split {
            let j = i + rng.next_below((4 - i) as u64) as usize;
            feats.swap(i, j);
        }

        let mut best: Option<(f64, u8, u8)> = None;
        for &f in &feats[..params.features_per_split] {
            let mut w = [0u64; 256];
            let mut wp = [0u64; 256];
            for r in &rows {
                let v = r.fv.0[f as usize] as usize;
                w[v] += r.weight;
                if r.label == 1 {
                    wp[v] += r.weight;
                }
            }
            let mut left_w = 0u64;
            let mut left_p = 0u64;
            for cut in 0..255usize {
                left_w += w[cut];
                left_p += wp[cut];
                if left_w == 0 {
                    continue;
                }
                let right_w = total - left_w;
                if right_w == 0 {
                    break;
                }
                if left_w < params.min_samples_leaf || right_w < params.min_samples_leaf {
                    continue;
                }
                let right_p = pos - left_p;
                let weighted = (left_w as f64 * gini(left_p, left_w)
                    + right_w as f64 * gini(right_p, right_w))
                    / total as f64;
                if best.is_none_or(|(b, _, _)| weighted < b) {
                    best = Some((weighted, f, cut as u8));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return leaf(nodes);
        };
        let (left_rows, right_rows): (Vec<_>, Vec<_>) = rows
            .into_iter()
            .partition(|r| r.fv.0[feature as usize] <= threshold);
        let slot = nodes.len();
        nodes.push(TreeNode::Leaf {
            positive_fraction: 0.0,
            sample_count: 0,
        });
        let left = Self::build(nodes, left_rows, depth + 1, params, rng);
        let right = Self::build(nodes, right_rows, depth + 1, params, rng);
        nodes[slot] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot as u32
    }

    /// Positive fraction of the leaf reached by `fv`.
    pub fn leaf_fraction(&self, fv: &FeatureVector) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf {
                    positive_fraction, ..
                } => return *positive_fraction,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if fv.0[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Longest root-to-leaf split count.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// A trained forest plus the context needed to score it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub params: ForestParams,
    /// Held-out F1 measured at training time.
    pub training_f1: f64,
    /// Positive-label share of the training split; the calibration baseline.
    pub positive_prior: f64,
    /// True when the training corpus contained a single label class.
    pub degenerate: bool,
}

/// Versioned on-disk form of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model: ForestModel,
}

impl ForestModel {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&ModelFile {
            format_version: 1,
            model: self.clone(),
        })
        .map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<ForestModel> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Serialize(e.to_string()))?;
        if file.format_version != 1 {
            return Err(Error::Serialize(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        Ok(file.model)
    }
}

/// Training output: the model and its held-out F1.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub model: ForestModel,
    pub held_out_f1: f64,
}

/// Trains the forest: seeded 80/20 shuffle split, per-tree bootstrap of the
/// training rows, CART growth, then held-out evaluation.
///
/// Evaluation is at IP granularity: an IP's prediction is its calibrated
/// attack score thresholded at 0.5, and its ground truth is whether the test
/// split holds any 403/404 row for it. Records of one IP are feature-wise
/// indistinguishable, so row-level scoring cannot separate an IP's mixed
/// rows and per-IP scoring is the meaningful quality measure.
pub fn train(records: &[LabeledRecord], params: &ForestParams) -> Result<TrainResult> {
    params.validate()?;
    if records.is_empty() {
        return Err(Error::ModelUnavailable);
    }

    let mut order: Vec<u32> = (0..records.len() as u32).collect();
    let mut shuffle_rng = SplitMix64::new(rng::derive(params.rng_seed, rng::STREAM_SHUFFLE));
    shuffle_rng.shuffle(&mut order);
    let n_train = ((records.len() as f64) * params.train_fraction).floor() as usize;
    let n_train = n_train.max(1);
    let (train_idx, test_idx) = order.split_at(n_train.min(order.len()));

    // Collapse training rows to weighted distinct (features, label) rows;
    // bootstrap draws then only update a small weight table.
    let distinct: std::collections::BTreeSet<([u8; 4], u8)> = train_idx
        .iter()
        .map(|&i| {
            let r = &records[i as usize];
            (FeatureVector::from(r.xff_ip).0, r.label)
        })
        .collect();
    let mut base_rows: Vec<WeightedRow> = distinct
        .iter()
        .map(|&(fv, label)| WeightedRow {
            fv: FeatureVector(fv),
            label,
            weight: 0,
        })
        .collect();
    let id_of: BTreeMap<([u8; 4], u8), usize> = distinct
        .iter()
        .enumerate()
        .map(|(pos, &key)| (key, pos))
        .collect();
    let sample_ids: Vec<u32> = train_idx
        .iter()
        .map(|&i| {
            let r = &records[i as usize];
            id_of[&(FeatureVector::from(r.xff_ip).0, r.label)] as u32
        })
        .collect();

    let train_pos = sample_ids
        .iter()
        .filter(|&&id| base_rows[id as usize].label == 1)
        .count() as u64;
    let train_total = sample_ids.len() as u64;
    let positive_prior = train_pos as f64 / train_total as f64;
    let degenerate = train_pos == 0 || train_pos == train_total;

    let mut trees = Vec::with_capacity(params.n_trees);
    let mut weights = vec![0u64; base_rows.len()];
    for tree_i in 0..params.n_trees {
        let mut tree_rng = SplitMix64::new(rng::derive(
            params.rng_seed,
            rng::STREAM_TREE_BASE + tree_i as u64,
        ));
        weights.fill(0);
        for _ in 0..sample_ids.len() {
            let pick = tree_rng.next_below(sample_ids.len() as u64) as usize;
            weights[sample_ids[pick] as usize] += 1;
        }
        let rows: Vec<WeightedRow> = base_rows
            .iter_mut()
            .zip(weights.iter())
            .filter(|(_, &w)| w > 0)
            .map(|(row, &w)| {
                row.weight = w;
                *row
            })
            .collect();
        trees.push(DecisionTree::grow(&rows, params, &mut tree_rng));
    }

    let mut model = ForestModel {
        trees,
        params: params.clone(),
        training_f1: 0.0,
        positive_prior,
        degenerate,
    };
    let held_out_f1 = evaluate_per_ip(&model, records, test_idx)?;
    model.training_f1 = held_out_f1;
    Ok(TrainResult { model, held_out_f1 })
}

/// Per-IP held-out F1 of the positive class on the test split.
fn evaluate_per_ip(
    model: &ForestModel,
    records: &[LabeledRecord],
    test_idx: &[u32],
) -> Result<f64> {
    let mut per_ip: BTreeMap<Ipv4Addr, bool> = BTreeMap::new();
    for &i in test_idx {
        let r = &records[i as usize];
        let has_scan = per_ip.entry(r.xff_ip).or_insert(false);
        *has_scan |= r.is_scan_label();
    }
    if per_ip.is_empty() {
        return Ok(0.0);
    }
    let mut predictions = Vec::with_capacity(per_ip.len());
    let mut truth = Vec::with_capacity(per_ip.len());
    for (&ip, &scan) in &per_ip {
        let score = attack_score(model, &FeatureVector::from(ip));
        predictions.push(u8::from(score >= 0.5));
        truth.push(u8::from(scan));
    }
    f1(&predictions, &truth)
}

/// Mean over trees of the reached leaf's positive fraction.
pub fn predict_proba(model: &ForestModel, fv: &FeatureVector) -> f64 {
    let sum: f64 = model.trees.iter().map(|t| t.leaf_fraction(fv)).sum();
    sum / model.trees.len() as f64
}

/// Margin applied to the prior before a tree votes an IP abnormal, so IPs
/// whose abnormal share merely matches the corpus base rate stay below the
/// bar even under sampling noise.
const VOTE_CALIBRATION: f64 = 1.25;

/// Calibrated ensemble vote: the share of trees whose leaf fraction for
/// `fv` exceeds the training positive-rate prior with margin.
pub fn attack_score(model: &ForestModel, fv: &FeatureVector) -> f64 {
    let bar = (model.positive_prior * VOTE_CALIBRATION).min(0.999);
    let votes = model
        .trees
        .iter()
        .filter(|t| t.leaf_fraction(fv) > bar)
        .count();
    votes as f64 / model.trees.len() as f64
}

/// F1 of the positive class; 0 when precision and recall are both empty.
pub fn f1(predictions: &[u8], truth: &[u8]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::Contract(format!(
            "f1 length mismatch: {} predictions vs {} truths",
            predictions.len(),
            truth.len()
        )));
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Ranks the distinct IPs of a record window by calibrated attack score,
/// ties broken by window label-1 count then ascending IP, truncated to `k`.
/// Returns fewer entries when the window holds fewer distinct IPs.
pub fn top_k_attackers(
    model: &ForestModel,
    window_records: &[LabeledRecord],
    k: usize,
) -> Vec<(Ipv4Addr, f64)> {
    let mut label_counts: BTreeMap<Ipv4Addr, u64> = BTreeMap::new();
    for r in window_records {
        *label_counts.entry(r.xff_ip).or_insert(0) += u64::from(r.label == 1);
    }
    let mut ranked: Vec<(Ipv4Addr, f64, u64)> = label_counts
        .iter()
        .map(|(&ip, &l1)| (ip, attack_score(model, &FeatureVector::from(ip)), l1))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are finite")
            .then(b.2.cmp(&a.2))
            .then(a.0.cmp(&b.0))
    });
    ranked.truncate(k);
    ranked
        .into_iter()
        .map(|(ip, score, _)| (ip, score))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{self, labeled};

    fn small_params() -> ForestParams {
        ForestParams {
            n_trees: 25,
            ..ForestParams::default()
        }
    }

    // A corpus where attacker IPs share the 200.* first octet and emit only
    // 404 rows while normal 100.* IPs emit only 200 rows.
    fn separable_corpus() -> Vec<LabeledRecord> {
        let mut records = Vec::new();
        for i in 0..10u8 {
            for n in 0..40 {
                records.push(labeled([200, 0, 0, i], "/admin", 404, n as f64, 1));
            }
        }
        for i in 0..40u8 {
            for n in 0..40 {
                records.push(labeled([100, 0, i, 1], "/", 200, n as f64, 0));
            }
        }
        records
    }

    // Mixed corpus shaped like a 60%-scan attacker mix with light error noise.
    fn mixed_corpus() -> Vec<LabeledRecord> {
        let mut records = Vec::new();
        for i in 0..10u8 {
            for n in 0..100 {
                if n % 5 < 3 {
                    records.push(labeled([200, 0, 0, i], "/admin", 404, n as f64, 1));
                } else {
                    records.push(labeled([200, 0, 0, i], "/", 200, n as f64, 0));
                }
            }
        }
        for i in 0..40u8 {
            for n in 0..100 {
                if n % 50 == 0 {
                    // Overload victim: error-log record.
                    records.push(labeled([100, 0, i, 1], "", 0, n as f64, 1));
                } else {
                    records.push(labeled([100, 0, i, 1], "/", 200, n as f64, 0));
                }
            }
        }
        records
    }

    #[test]
    fn empty_corpus_is_model_unavailable() {
        assert!(matches!(
            train(&[], &small_params()),
            Err(Error::ModelUnavailable)
        ));
    }

    #[test]
    fn single_label_corpus_is_degenerate_with_zero_f1() {
        let records: Vec<LabeledRecord> = (0..200)
            .map(|n| labeled([100, 0, (n % 20) as u8, 1], "/", 200, n as f64, 0))
            .collect();
        let out = train(&records, &small_params()).unwrap();
        assert!(out.model.degenerate);
        assert_eq!(out.held_out_f1, 0.0);
        for tree in &out.model.trees {
            for node in &tree.nodes {
                if let TreeNode::Leaf {
                    positive_fraction, ..
                } = node
                {
                    assert_eq!(*positive_fraction, 0.0);
                }
            }
        }
        assert_eq!(predict_proba(&out.model, &FeatureVector([1, 2, 3, 4])), 0.0);
    }

    #[test]
    fn separable_corpus_reaches_perfect_f1() {
        let out = train(&separable_corpus(), &small_params()).unwrap();
        assert_eq!(out.held_out_f1, 1.0);
        assert!(!out.model.degenerate);
    }

    #[test]
    fn mixed_corpus_still_separates_attackers() {
        let out = train(&mixed_corpus(), &small_params()).unwrap();
        assert!(out.held_out_f1 >= 0.93, "f1 {}", out.held_out_f1);
        let attacker = attack_score(&out.model, &FeatureVector([200, 0, 0, 3]));
        let normal = attack_score(&out.model, &FeatureVector([100, 0, 7, 1]));
        assert!(attacker >= 0.9, "attacker score {attacker}");
        assert!(normal < 0.5, "normal score {normal}");
    }

    #[test]
    fn pure_attacker_region_predicts_one() {
        let out = train(&separable_corpus(), &small_params()).unwrap();
        let proba = predict_proba(&out.model, &FeatureVector([200, 0, 0, 5]));
        assert_eq!(proba, 1.0);
    }

    #[test]
    fn proba_is_bounded_by_tree_extremes() {
        let out = train(&mixed_corpus(), &small_params()).unwrap();
        for fv in [
            FeatureVector([200, 0, 0, 1]),
            FeatureVector([100, 0, 3, 1]),
            FeatureVector([9, 9, 9, 9]),
        ] {
            let fractions: Vec<f64> = out
                .model
                .trees
                .iter()
                .map(|t| t.leaf_fraction(&fv))
                .collect();
            let lo = fractions.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = fractions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let p = predict_proba(&out.model, &fv);
            assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
        }
    }

    #[test]
    fn single_tree_forest_equals_its_leaf_fraction() {
        let params = ForestParams {
            n_trees: 1,
            ..ForestParams::default()
        };
        let out = train(&mixed_corpus(), &params).unwrap();
        let fv = FeatureVector([200, 0, 0, 2]);
        assert_eq!(
            predict_proba(&out.model, &fv),
            out.model.trees[0].leaf_fraction(&fv)
        );
    }

    #[test]
    fn training_is_deterministic() {
        let a = train(&mixed_corpus(), &ForestParams::default()).unwrap();
        let b = train(&mixed_corpus(), &ForestParams::default()).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.model.to_json().unwrap(), b.model.to_json().unwrap());
    }

    #[test]
    fn depth_respects_max_depth() {
        let params = ForestParams {
            n_trees: 10,
            max_depth: 3,
            ..ForestParams::default()
        };
        let out = train(&mixed_corpus(), &params).unwrap();
        for tree in &out.model.trees {
            assert!(tree.depth() <= 3);
        }
    }

    #[test]
    fn f1_hand_cases() {
        assert_eq!(f1(&[1, 1, 0, 0], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(f1(&[0, 0, 0], &[1, 1, 0]).unwrap(), 0.0);
        // TP=8 FP=2 FN=2: precision = recall = 0.8.
        let mut preds = vec![1u8; 10];
        preds.extend_from_slice(&[0, 0]);
        let mut truth = vec![1u8; 8];
        truth.extend_from_slice(&[0, 0, 1, 1]);
        assert!((f1(&preds, &truth).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn f1_length_mismatch_is_a_contract_error() {
        assert!(matches!(f1(&[1], &[1, 0]), Err(Error::Contract(_))));
    }

    #[test]
    fn f1_stays_in_unit_interval() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..200 {
            let n = 1 + rng.next_below(30) as usize;
            let preds: Vec<u8> = (0..n).map(|_| rng.next_below(2) as u8).collect();
            let truth: Vec<u8> = (0..n).map(|_| rng.next_below(2) as u8).collect();
            let v = f1(&preds, &truth).unwrap();
            assert!((0.0..=1.0).contains(&v));
            if v == 1.0 {
                for (p, t) in preds.iter().zip(&truth) {
                    assert_eq!(p, t, "perfect f1 requires agreement on positives");
                }
            }
        }
    }

    #[test]
    fn top_k_ranks_attackers_first_and_handles_small_windows() {
        let corpus = mixed_corpus();
        let out = train(&corpus, &small_params()).unwrap();
        let ranked = top_k_attackers(&out.model, &corpus, 10);
        assert_eq!(ranked.len(), 10);
        for (ip, score) in &ranked {
            assert_eq!(ip.octets()[0], 200, "attacker expected, got {ip}");
            assert!(*score >= 0.9);
        }
        // Window with fewer distinct IPs than k returns them all.
        let tiny: Vec<LabeledRecord> = corpus
            .iter()
            .filter(|r| r.xff_ip.octets()[3] <= 1 && r.xff_ip.octets()[0] == 200)
            .cloned()
            .collect();
        let short = top_k_attackers(&out.model, &tiny, 10);
        assert_eq!(short.len(), 2);
    }

    #[test]
    fn normal_only_window_still_returns_a_ranking() {
        let corpus = mixed_corpus();
        let out = train(&corpus, &small_params()).unwrap();
        let normals: Vec<LabeledRecord> = corpus
            .iter()
            .filter(|r| r.xff_ip.octets()[0] == 100)
            .cloned()
            .collect();
        let ranked = top_k_attackers(&out.model, &normals, 10);
        assert_eq!(ranked.len(), 10);
        for (_, score) in &ranked {
            assert!(*score < 0.5);
        }
    }

    #[test]
    fn depth_one_stump_matches_brute_force_gini() {
        let mut rng = SplitMix64::new(31);
        for round in 0..50 {
            let rows = testkit::random_stump_corpus(&mut rng, 200);
            let params = ForestParams {
                n_trees: 1,
                max_depth: 1,
                features_per_split: 4,
                ..ForestParams::default()
            };
            let mut grow_rng = SplitMix64::new(round);
            let tree = DecisionTree::grow(&rows, &params, &mut grow_rng);
            let achieved = testkit::achieved_impurity(&tree, &rows);
            let best = testkit::brute_force_best_impurity(&rows);
            assert!(
                (achieved - best).abs() < 1e-9,
                "round {round}: achieved {achieved} vs brute-force {best}"
            );
        }
    }

    #[test]
    fn model_json_round_trips() {
        let out = train(&separable_corpus(), &small_params()).unwrap();
        let text = out.model.to_json().unwrap();
        let back = ForestModel::from_json(&text).unwrap();
        assert_eq!(back, out.model);
    }

    use crate::rng::SplitMix64;
}
