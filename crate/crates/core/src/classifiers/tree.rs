//! Binary decision trees grown by exact greedy split search over sparse rows.
//!
//! Features absent from a row have value 0 and sort with the present values.
//! A row goes left when `value <= threshold`.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::text::{FeatureMatrix, SparseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(L),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    pub fn leaf(&self, row: &SparseVector) -> &L {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(l) => return l,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row.get(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<L>(t: &Tree<L>, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

/// Additive per-row statistics that a split criterion scores.
pub trait NodeStats: Copy + Default + Add<Output = Self> + Sub<Output = Self> {}

impl<T: Copy + Default + Add<Output = T> + Sub<Output = T>> NodeStats for T {}

pub trait SplitCriterion {
    type Stats: NodeStats;

    /// Improvement of splitting `parent` into `left` and `right`.
    fn gain(&self, parent: Self::Stats, left: Self::Stats, right: Self::Stats) -> f64;

    /// Whether both children satisfy the minimum-size constraint.
    fn admissible(&self, left: Self::Stats, right: Self::Stats) -> bool;

    /// Splits need a gain strictly above this.
    fn min_gain(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Best split of `rows` over the allowed features, or `None` when no
/// admissible split has gain above the criterion's floor.
pub fn best_split<C: SplitCriterion>(
    criterion: &C,
    x: &FeatureMatrix,
    rows: &[usize],
    stats: &[C::Stats],
    allowed: Option<&[bool]>,
) -> Option<Split> {
    let parent = rows.iter().fold(C::Stats::default(), |acc, &r| acc + stats[r]);

    let mut entries: Vec<(usize, f64, usize)> = Vec::new();
    for &r in rows {
        for &(j, v) in x.row(r).entries() {
            if allowed.is_none_or(|a| a[j]) {
                entries.push((j, v, r));
            }
        }
    }
    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut best: Option<Split> = None;
    let mut blocks: Vec<(f64, C::Stats)> = Vec::new();
    let mut start = 0;
    while start < entries.len() {
        let feature = entries[start].0;
        let end = start + entries[start..].iter().take_while(|e| e.0 == feature).count();
        let group = &entries[start..end];
        start = end;

        // distinct values with their summed stats, zero block spliced in
        blocks.clear();
        let mut present = C::Stats::default();
        for &(_, v, r) in group {
            present = present + stats[r];
            match blocks.last_mut() {
                Some((last, acc)) if *last == v => *acc = *acc + stats[r],
                _ => blocks.push((v, stats[r])),
            }
        }
        if group.len() < rows.len() {
            let zero = parent - present;
            let pos = blocks.partition_point(|&(v, _)| v < 0.0);
            blocks.insert(pos, (0.0, zero));
        }
        if blocks.len() < 2 {
            continue;
        }

        let mut left = C::Stats::default();
        for k in 0..blocks.len() - 1 {
            left = left + blocks[k].1;
            let right = parent - left;
            if !criterion.admissible(left, right) {
                continue;
            }
            let gain = criterion.gain(parent, left, right);
            if gain > criterion.min_gain() && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    feature,
                    threshold: midpoint(blocks[k].0, blocks[k + 1].0),
                    gain,
                });
            }
        }
    }
    best
}

/// Growth limits and hooks for [`grow`].
pub struct GrowSpec<'a, C: SplitCriterion, L> {
    pub criterion: &'a C,
    pub max_depth: Option<usize>,
    /// Called once per candidate node, in depth-first order; returns the
    /// feature mask for that node's split search (`None` = all features).
    pub sample_features: &'a mut dyn FnMut() -> Option<Vec<bool>>,
    pub make_leaf: &'a dyn Fn(C::Stats) -> L,
}

/// Grows a tree depth first (left child before right).
pub fn grow<C: SplitCriterion, L>(
    spec: GrowSpec<'_, C, L>,
    x: &FeatureMatrix,
    rows: Vec<usize>,
    stats: &[C::Stats],
) -> Tree<L> {
    enum Slot<L> {
        Pending,
        Done(Node<L>),
    }
    let mut slots: Vec<Slot<L>> = vec![Slot::Pending];
    let mut stack = vec![(0usize, rows, 0usize)];
    while let Some((at, rows, depth)) = stack.pop() {
        let total = rows.iter().fold(C::Stats::default(), |acc, &r| acc + stats[r]);
        let can_split = rows.len() >= 2 && spec.max_depth.is_none_or(|m| depth < m);
        let split = if can_split {
            let mask = (spec.sample_features)();
            best_split(spec.criterion, x, &rows, stats, mask.as_deref())
        } else {
            None
        };
        match split {
            None => slots[at] = Slot::Done(Node::Leaf((spec.make_leaf)(total))),
            Some(s) => {
                let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&r| x.row(r).get(s.feature) <= s.threshold);
                let left = slots.len();
                slots.push(Slot::Pending);
                let right = slots.len();
                slots.push(Slot::Pending);
                slots[at] = Slot::Done(Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                });
                stack.push((right, r_rows, depth + 1));
                stack.push((left, l_rows, depth + 1));
            }
        }
    }
    let nodes = slots
        .into_iter()
        .map(|s| match s {
            Slot::Done(n) => n,
            Slot::Pending => unreachable!("every slot is resolved"),
        })
        .collect();
    Tree { nodes }
}
