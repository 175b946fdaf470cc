//! Newton-boosted regression trees on the logistic loss.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use super::registry::mismatch;
use super::tree::{grow, GrowSpec, SplitCriterion, Tree};
use super::{
    sigmoid, softplus, target, validate_training, ClassifierError, ClassifierKind, Detector, Hyperparameters,
    TrainedModel, Trainer,
};
use crate::corpus::Label;
use crate::text::{FeatureMatrix, SparseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostingParams {
    /// Shrinkage η applied to each tree's leaf weights.
    pub learning_rate: f64,
    /// L2 penalty λ on leaf weights.
    pub lambda: f64,
    pub n_rounds: usize,
    pub max_depth: usize,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            learning_rate: 0.3,
            lambda: 1.0,
            n_rounds: 100,
            max_depth: 6,
            min_child_weight: 1.0,
        }
    }
}

impl BoostingParams {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: String| Err(ClassifierError::InvalidHyperparameter(m));
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.lambda > 0.0) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if self.n_rounds == 0 {
            return bad("n_rounds must be >= 1".into());
        }
        if !(self.min_child_weight >= 0.0) {
            return bad(format!("min_child_weight must be >= 0, got {}", self.min_child_weight));
        }
        Ok(())
    }
}

/// Gradient and hessian sums over a node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GradStats {
    pub g: f64,
    pub h: f64,
}

impl Add for GradStats {
    type Output = GradStats;
    fn add(self, o: Self) -> Self {
        GradStats {
            g: self.g + o.g,
            h: self.h + o.h,
        }
    }
}

impl Sub for GradStats {
    type Output = GradStats;
    fn sub(self, o: Self) -> Self {
        GradStats {
            g: self.g - o.g,
            h: self.h - o.h,
        }
    }
}

/// Optimal leaf weight `-G / (H + λ)`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

/// `½ [G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)]`.
pub fn split_gain(left: GradStats, right: GradStats, lambda: f64) -> f64 {
    let score = |s: GradStats| s.g * s.g / (s.h + lambda);
    0.5 * (score(left) + score(right) - score(left + right))
}

struct NewtonGain {
    lambda: f64,
    min_child_weight: f64,
}

impl SplitCriterion for NewtonGain {
    type Stats = GradStats;

    fn gain(&self, _parent: GradStats, l: GradStats, r: GradStats) -> f64 {
        split_gain(l, r, self.lambda)
    }

    fn admissible(&self, l: GradStats, r: GradStats) -> bool {
        l.h >= self.min_child_weight && r.h >= self.min_child_weight
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTreesModel {
    /// Leaves hold unshrunk weights `-G/(H+λ)`.
    pub trees: Vec<Tree<f64>>,
    pub learning_rate: f64,
    pub base_logit: f64,
    pub lambda: f64,
    pub n_features: usize,
    /// Mean training logloss after each round.
    pub round_losses: Vec<f64>,
}

impl BoostedTreesModel {
    pub fn logit(&self, row: &SparseVector) -> f64 {
        self.base_logit + self.learning_rate * self.trees.iter().map(|t| *t.leaf(row)).sum::<f64>()
    }
}

impl Detector for BoostedTreesModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::GradientBoostedTrees
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_ai(&self, row: &SparseVector) -> f64 {
        sigmoid(self.logit(row))
    }
}

pub fn fit_gradient_boosted_trees(
    x: &FeatureMatrix,
    y: &[Label],
    params: &BoostingParams,
) -> Result<BoostedTreesModel, ClassifierError> {
    params.validate()?;
    validate_training(x, y)?;
    let n = y.len();
    let targets: Vec<f64> = y.iter().map(|&l| target(l)).collect();
    let base_logit = 0.0;
    let mut logits = vec![base_logit; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut round_losses = Vec::with_capacity(params.n_rounds);
    let criterion = NewtonGain {
        lambda: params.lambda,
        min_child_weight: params.min_child_weight,
    };
    let lambda = params.lambda;
    let leaf = |s: GradStats| leaf_weight(s.g, s.h, lambda);

    for round in 0..params.n_rounds {
        let mut stats = Vec::with_capacity(n);
        for (i, (&z, &t)) in logits.iter().zip(&targets).enumerate() {
            let p = sigmoid(z);
            let s = GradStats {
                g: p - t,
                h: p * (1.0 - p),
            };
            if !s.g.is_finite() || !s.h.is_finite() {
                return Err(ClassifierError::NonFinite {
                    what: "gradient",
                    at: format!("round {round}, row {i}"),
                });
            }
            stats.push(s);
        }
        let mut all = || None;
        let tree = grow(
            GrowSpec {
                criterion: &criterion,
                max_depth: Some(params.max_depth),
                sample_features: &mut all,
                make_leaf: &leaf,
            },
            x,
            (0..n).collect(),
            &stats,
        );
        let mut loss = 0.0;
        for i in 0..n {
            logits[i] += params.learning_rate * tree.leaf(x.row(i));
            loss += softplus(logits[i]) - targets[i] * logits[i];
        }
        round_losses.push(loss / n as f64);
        trees.push(tree);
    }

    Ok(BoostedTreesModel {
        trees,
        learning_rate: params.learning_rate,
        base_logit,
        lambda: params.lambda,
        n_features: x.n_cols(),
        round_losses,
    })
}

pub struct GradientBoostingTrainer;

impl Trainer for GradientBoostingTrainer {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::GradientBoostedTrees
    }

    fn fit(
        &self,
        hp: &Hyperparameters,
        x: &FeatureMatrix,
        y: &[Label],
        _seed: u64,
    ) -> Result<TrainedModel, ClassifierError> {
        match hp {
            Hyperparameters::GradientBoostedTrees(p) => {
                Ok(TrainedModel::GradientBoostedTrees(fit_gradient_boosted_trees(x, y, p)?))
            }
            other => Err(mismatch(self.kind(), other)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tree::best_split;
    use Label::{Ai, Human};

    fn stump_params() -> BoostingParams {
        BoostingParams {
            n_rounds: 1,
            max_depth: 0,
            ..Default::default()
        }
    }

    #[test]
    fn balanced_single_leaf_stays_at_half() {
        let x = FeatureMatrix::from_dense(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let m = fit_gradient_boosted_trees(&x, &[Human, Ai, Human, Ai], &stump_params()).unwrap();
        assert_eq!(*m.trees[0].leaf(x.row(0)), 0.0);
        assert_eq!(m.predict_ai(x.row(0)), 0.5);
    }

    #[test]
    fn single_leaf_hand_arithmetic() {
        // G = 4·0.5 − 3 = −1, H = 4·0.25 = 1, λ = 1 → w = 0.5, logit = 0.3·0.5
        let x = FeatureMatrix::from_dense(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let m = fit_gradient_boosted_trees(&x, &[Ai, Ai, Ai, Human], &stump_params()).unwrap();
        assert_eq!(*m.trees[0].leaf(x.row(0)), 0.5);
        assert!((m.logit(x.row(2)) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn separating_split_beats_every_other_split() {
        // 8 points on a line, first 3 human; gradients at p = 0.5
        let xs = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        let y = [Human, Human, Human, Ai, Ai, Ai, Ai, Ai];
        let stats: Vec<GradStats> = y
            .iter()
            .map(|&l| GradStats {
                g: 0.5 - target(l),
                h: 0.25,
            })
            .collect();
        let gain_at = |k: usize| {
            let l = stats[..k].iter().fold(GradStats::default(), |a, &s| a + s);
            let r = stats[k..].iter().fold(GradStats::default(), |a, &s| a + s);
            split_gain(l, r, 1.0)
        };
        let separating = gain_at(3);
        for k in 1..8 {
            if k != 3 {
                assert!(separating > gain_at(k), "k={k}");
            }
        }
        let x = FeatureMatrix::from_dense(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>());
        let crit = NewtonGain {
            lambda: 1.0,
            min_child_weight: 0.0,
        };
        let s = best_split(&crit, &x, &(0..8).collect::<Vec<_>>(), &stats, None).unwrap();
        assert!((s.threshold - 0.35).abs() < 1e-12);
        assert!((s.gain - separating).abs() < 1e-12);
    }

    #[test]
    fn training_loss_does_not_increase() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 / 40.0;
                vec![t, (1.0 - t) * 0.5, ((i * 7) % 11) as f64 / 11.0]
            })
            .collect();
        let y: Vec<Label> = (0..40).map(|i| if i >= 20 { Ai } else { Human }).collect();
        let x = FeatureMatrix::from_dense(&rows);
        let params = BoostingParams {
            n_rounds: 30,
            ..Default::default()
        };
        let m = fit_gradient_boosted_trees(&x, &y, &params).unwrap();
        let mut prev = 2f64.ln();
        for (r, &l) in m.round_losses.iter().enumerate() {
            assert!(l <= prev + 1e-12, "round {r}: {l} > {prev}");
            prev = l;
        }
        let acc = (0..40)
            .filter(|&i| super::super::label_for(m.predict_ai(x.row(i))) == y[i])
            .count();
        assert_eq!(acc, 40);
    }
}
