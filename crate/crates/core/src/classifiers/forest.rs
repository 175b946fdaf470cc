//! Random forest of Gini-split classification trees.

use std::ops::{Add, Sub};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::registry::mismatch;
use super::tree::{grow, GrowSpec, SplitCriterion, Tree};
use super::{validate_training, ClassifierError, ClassifierKind, Detector, Hyperparameters, TrainedModel, Trainer};
use crate::corpus::Label;
use crate::text::{FeatureMatrix, SparseVector};

/// How many candidate features each node considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "MaxFeaturesRepr", into = "MaxFeaturesRepr")]
pub enum MaxFeatures {
    #[default]
    Sqrt,
    Log2,
    All,
    Count(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaxFeaturesRepr {
    Count(usize),
    Name(String),
}

impl TryFrom<MaxFeaturesRepr> for MaxFeatures {
    type Error = String;

    fn try_from(r: MaxFeaturesRepr) -> Result<Self, String> {
        match r {
            MaxFeaturesRepr::Count(n) => Ok(MaxFeatures::Count(n)),
            MaxFeaturesRepr::Name(s) => match s.as_str() {
                "sqrt" => Ok(MaxFeatures::Sqrt),
                "log2" => Ok(MaxFeatures::Log2),
                "all" => Ok(MaxFeatures::All),
                other => Err(format!(
                    "unknown max_features rule {other:?}; expected sqrt, log2, all or a count"
                )),
            },
        }
    }
}

impl From<MaxFeatures> for MaxFeaturesRepr {
    fn from(m: MaxFeatures) -> Self {
        match m {
            MaxFeatures::Sqrt => MaxFeaturesRepr::Name("sqrt".into()),
            MaxFeatures::Log2 => MaxFeaturesRepr::Name("log2".into()),
            MaxFeatures::All => MaxFeaturesRepr::Name("all".into()),
            MaxFeatures::Count(n) => MaxFeaturesRepr::Count(n),
        }
    }
}

impl MaxFeatures {
    /// Number of candidates out of `d` features, at least 1 and at most `d`.
    pub fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt() as usize,
            MaxFeatures::Log2 => (d as f64).log2() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => n,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    /// Minimum (bootstrap-weighted) samples per leaf.
    pub min_leaf: usize,
    /// Disable for the deterministic single-tree test mode.
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_leaf: 1,
            bootstrap: true,
            max_depth: None,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.n_trees == 0 {
            return Err(ClassifierError::InvalidHyperparameter("n_trees must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(ClassifierError::InvalidHyperparameter("min_leaf must be >= 1".into()));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(ClassifierError::InvalidHyperparameter(
                "max_features must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Weighted class totals `[human, ai]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassWeights(pub [f64; 2]);

impl Add for ClassWeights {
    type Output = ClassWeights;
    fn add(self, o: Self) -> Self {
        ClassWeights([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for ClassWeights {
    type Output = ClassWeights;
    fn sub(self, o: Self) -> Self {
        ClassWeights([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl ClassWeights {
    pub fn total(self) -> f64 {
        self.0[0] + self.0[1]
    }

    /// `1 - sum_c p_c^2`; zero for an empty node.
    pub fn gini(self) -> f64 {
        let n = self.total();
        if n <= 0.0 {
            return 0.0;
        }
        let (a, b) = (self.0[0] / n, self.0[1] / n);
        1.0 - a * a - b * b
    }

    pub fn frequencies(self) -> [f64; 2] {
        let n = self.total();
        [self.0[0] / n, self.0[1] / n]
    }
}

pub struct Gini {
    pub min_leaf: f64,
}

impl SplitCriterion for Gini {
    type Stats = ClassWeights;

    /// Decrease in size-weighted impurity, `n_p G_p - n_l G_l - n_r G_r`.
    fn gain(&self, p: ClassWeights, l: ClassWeights, r: ClassWeights) -> f64 {
        p.total() * p.gini() - l.total() * l.gini() - r.total() * r.gini()
    }

    fn admissible(&self, l: ClassWeights, r: ClassWeights) -> bool {
        l.total() >= self.min_leaf && r.total() >= self.min_leaf
    }

    fn min_gain(&self) -> f64 {
        1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    /// Leaves hold `[p_human, p_ai]` class frequencies.
    pub trees: Vec<Tree<[f64; 2]>>,
    pub n_features: usize,
}

impl Detector for ForestModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::RandomForest
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_ai(&self, row: &SparseVector) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf(row)[1]).sum();
        sum / self.trees.len() as f64
    }
}

/// Grows one classification tree on rows weighted by `weights` (multiplicities).
pub fn fit_tree(
    x: &FeatureMatrix,
    y: &[Label],
    weights: &[f64],
    params: &ForestParams,
    rng: &mut impl Rng,
) -> Tree<[f64; 2]> {
    let d = x.n_cols();
    let stats: Vec<ClassWeights> = y
        .iter()
        .zip(weights)
        .map(|(&l, &w)| {
            let mut c = [0.0; 2];
            c[l.as_u8() as usize] = w;
            ClassWeights(c)
        })
        .collect();
    let rows: Vec<usize> = (0..y.len()).filter(|&i| weights[i] > 0.0).collect();
    let k = params.max_features.resolve(d);
    let mut sample = || {
        if k >= d {
            return None;
        }
        let mut mask = vec![false; d];
        for j in index::sample(rng, d, k) {
            mask[j] = true;
        }
        Some(mask)
    };
    let criterion = Gini {
        min_leaf: params.min_leaf as f64,
    };
    let leaf = |c: ClassWeights| c.frequencies();
    grow(
        GrowSpec {
            criterion: &criterion,
            max_depth: params.max_depth,
            sample_features: &mut sample,
            make_leaf: &leaf,
        },
        x,
        rows,
        &stats,
    )
}

/// Random stream for tree `t`; independent of thread scheduling.
fn tree_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

pub fn fit_random_forest(
    x: &FeatureMatrix,
    y: &[Label],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel, ClassifierError> {
    params.validate()?;
    validate_training(x, y)?;
    let n = y.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let mut weights = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[rng.gen_range(0..n)] += 1.0;
                }
            } else {
                weights.iter_mut().for_each(|w| *w = 1.0);
            }
            fit_tree(x, y, &weights, params, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_features: x.n_cols(),
    })
}

pub struct RandomForestTrainer;

impl Trainer for RandomForestTrainer {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::RandomForest
    }

    fn fit(
        &self,
        hp: &Hyperparameters,
        x: &FeatureMatrix,
        y: &[Label],
        seed: u64,
    ) -> Result<TrainedModel, ClassifierError> {
        match hp {
            Hyperparameters::RandomForest(p) => Ok(TrainedModel::RandomForest(fit_random_forest(x, y, p, seed)?)),
            other => Err(mismatch(self.kind(), other)),
        }
    }
}
