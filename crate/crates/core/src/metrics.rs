//! Confusion-matrix metrics, ROC/AUC and DET curves. AI (label 1) is the
//! positive class throughout.

use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::classifiers::label_for;
use crate::corpus::Label;

/// Deviates are clipped to `[DET_EPSILON, 1 - DET_EPSILON]` before the probit.
pub const DET_EPSILON: f64 = 1e-6;

pub const POSITIVE_CLASS: &str = "AI (label 1)";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{left} predictions but {right} truth labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("truth contains only class {0}; curves need both classes")]
    SingleClass(Label),
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
    #[error("probit is defined on (0, 1), got {0}")]
    ProbitDomain(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A rate that may have a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricValue {
    Defined(f64),
    Undefined,
}

impl MetricValue {
    pub fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            MetricValue::Undefined
        } else {
            MetricValue::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(v),
            MetricValue::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, MetricValue::Defined(_))
    }
}

impl std::fmt::Display for MetricValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricValue::Defined(v) => write!(f, "{v:.4}"),
            MetricValue::Undefined => f.write_str("undefined"),
        }
    }
}

/// Serializes as a number or the string `"undefined"`.
impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MetricValue::Defined(v) => s.serialize_f64(*v),
            MetricValue::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(MetricValue::Defined(v)),
            Repr::Str(s) if s == "undefined" => Ok(MetricValue::Undefined),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"undefined\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }
}

pub fn confusion(pred: &[Label], truth: &[Label]) -> Result<ConfusionMatrix, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p.is_ai(), t.is_ai()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMetrics {
    pub accuracy: MetricValue,
    pub precision: MetricValue,
    /// Recall, also the true-positive rate.
    pub recall: MetricValue,
    pub f1: MetricValue,
    pub fpr: MetricValue,
    pub fnr: MetricValue,
    pub tnr: MetricValue,
}

impl ScalarMetrics {
    pub fn tpr(&self) -> MetricValue {
        self.recall
    }
}

pub fn scalar_metrics(cm: &ConfusionMatrix) -> ScalarMetrics {
    let precision = MetricValue::ratio(cm.tp, cm.tp + cm.fp);
    let recall = MetricValue::ratio(cm.tp, cm.positives());
    let f1 = match (precision, recall) {
        (MetricValue::Defined(p), MetricValue::Defined(r)) if p + r > 0.0 => {
            MetricValue::Defined(2.0 * p * r / (p + r))
        }
        _ => MetricValue::Undefined,
    };
    ScalarMetrics {
        accuracy: MetricValue::ratio(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        f1,
        fpr: MetricValue::ratio(cm.fp, cm.negatives()),
        fnr: MetricValue::ratio(cm.fn_, cm.positives()),
        tnr: MetricValue::ratio(cm.tn, cm.negatives()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// `(threshold, tp, fp)` after admitting every score `>= threshold`.
type SweepStep = (f64, u64, u64);

/// Cumulative counts starting at a sentinel one above the maximum score,
/// plus the positive and negative totals.
fn sweep(scores: &[f64], truth: &[Label]) -> Result<(Vec<SweepStep>, u64, u64), MetricsError> {
    if scores.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    let first = *truth.first().ok_or(MetricsError::Empty)?;
    if truth.iter().all(|&l| l == first) {
        return Err(MetricsError::SingleClass(first));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(i));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let positives = truth.iter().filter(|l| l.is_ai()).count() as u64;
    let negatives = truth.len() as u64 - positives;

    let mut steps = vec![(scores[order[0]] + 1.0, 0, 0)];
    let (mut tp, mut fp) = (0, 0);
    for (k, &i) in order.iter().enumerate() {
        if truth[i].is_ai() {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_tie = order.get(k + 1).is_none_or(|&j| scores[j] != scores[i]);
        if last_of_tie {
            steps.push((scores[i], tp, fp));
        }
    }
    Ok((steps, positives, negatives))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `x` = FPR, `y` = TPR, from (0, 0) to (1, 1).
    pub points: Vec<CurvePoint>,
    pub auc: f64,
}

pub fn roc_curve(scores: &[f64], truth: &[Label]) -> Result<RocCurve, MetricsError> {
    let (steps, pos, neg) = sweep(scores, truth)?;
    let points: Vec<CurvePoint> = steps
        .iter()
        .map(|&(threshold, tp, fp)| CurvePoint {
            threshold,
            x: fp as f64 / neg as f64,
            y: tp as f64 / pos as f64,
        })
        .collect();
    let auc = points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[1].y + w[0].y) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// `x` = probit(FPR), `y` = probit(FNR), rates clipped to `[ε, 1 − ε]`.
pub fn det_curve(scores: &[f64], truth: &[Label]) -> Result<Vec<CurvePoint>, MetricsError> {
    let (steps, pos, neg) = sweep(scores, truth)?;
    let clip = |r: f64| r.clamp(DET_EPSILON, 1.0 - DET_EPSILON);
    steps
        .iter()
        .map(|&(threshold, tp, fp)| {
            let fpr = fp as f64 / neg as f64;
            let fnr = (pos - tp) as f64 / pos as f64;
            Ok(CurvePoint {
                threshold,
                x: probit(clip(fpr))?,
                y: probit(clip(fnr))?,
            })
        })
        .collect()
}

#[allow(clippy::excessive_precision)]
const PROBIT_A: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_45,
    1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125,
    45_921.953_931_549_871_457,
    67_265.770_927_008_700_853,
    33_430.575_583_588_128_105,
    2_509.080_928_730_122_672_7,
];
#[allow(clippy::excessive_precision)]
const PROBIT_B: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_252,
    687.187_007_492_057_908_3,
    5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_674,
    5_226.495_278_852_854_561,
];
#[allow(clippy::excessive_precision)]
const PROBIT_C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3,
    7.745_450_142_783_414_076_4e-4,
];
#[allow(clippy::excessive_precision)]
const PROBIT_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59,
    0.015_198_666_563_616_457_196_6,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const PROBIT_E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23,
    0.026_532_189_526_576_123_093,
    0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const PROBIT_F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_69,
    0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Inverse standard normal CDF (Wichura's AS241 rational approximation).
pub fn probit(p: f64) -> Result<f64, MetricsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MetricsError::ProbitDomain(p));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * poly(&PROBIT_A, r) / poly(&PROBIT_B, r));
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let v = if r <= 5.0 {
        let r = r - 1.6;
        poly(&PROBIT_C, r) / poly(&PROBIT_D, r)
    } else {
        let r = r - 5.0;
        poly(&PROBIT_E, r) / poly(&PROBIT_F, r)
    };
    Ok(if q < 0.0 { -v } else { v })
}

/// Scalars named after the published results table, plus AUC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadlineMetrics {
    pub accuracy: MetricValue,
    pub f1_score: MetricValue,
    pub fpr: MetricValue,
    pub fnr: MetricValue,
    pub tnr: MetricValue,
    pub tpr: MetricValue,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub positive_class: String,
    /// Decision threshold on `p_ai` used for the confusion matrix.
    pub threshold: f64,
    pub n_samples: usize,
    pub confusion: ConfusionMatrix,
    pub scalars: ScalarMetrics,
    pub roc: RocCurve,
    pub det: Vec<CurvePoint>,
}

impl EvalReport {
    pub fn auc(&self) -> f64 {
        self.roc.auc
    }

    pub fn headline(&self) -> HeadlineMetrics {
        let s = &self.scalars;
        HeadlineMetrics {
            accuracy: s.accuracy,
            f1_score: s.f1,
            fpr: s.fpr,
            fnr: s.fnr,
            tnr: s.tnr,
            tpr: s.recall,
            auc: self.roc.auc,
        }
    }
}

/// Full report for AI-class scores against truth, thresholding at 0.5.
pub fn evaluate(scores: &[f64], truth: &[Label]) -> Result<EvalReport, MetricsError> {
    let roc = roc_curve(scores, truth)?;
    let det = det_curve(scores, truth)?;
    let pred: Vec<Label> = scores.iter().map(|&s| label_for(s)).collect();
    let confusion = confusion(&pred, truth)?;
    Ok(EvalReport {
        positive_class: POSITIVE_CLASS.to_string(),
        threshold: 0.5,
        n_samples: scores.len(),
        confusion,
        scalars: scalar_metrics(&confusion),
        roc,
        det,
    })
}

/// CSV with header `threshold,x,y`.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
