//! Validation protocols and the metric suite.
//!
//! Two split schemes are supported: stratified k-fold over the labeled
//! characters and leave-one-group-out by figure, author or time bin. During
//! cross-validation every data-dependent step (vocabulary, scaler, model) is
//! fitted on the training part of each fold only. Headline metrics come from
//! the confusion matrix pooled over all folds; per-fold metrics are kept
//! alongside.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diachronic::{bin_start, TrendPoint, TrendSeries};
use crate::error::{Error, Result};
use crate::featurize::{FittedFeaturizer, Featurizer};
use crate::linear::{self, LinearModel, ModelKind, TrainConfig};
use crate::model::{CharacterRecord, Dataset, Label};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Grouping {
    /// Normalized `figure_id` (falls back to `character_id`).
    Character,
    Author,
    /// Half-open bins `[start, start + width)` with epoch year 0.
    TimeBin(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    StratifiedKFold(usize),
    Logo(Grouping),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::StratifiedKFold(k) => write!(f, "stratified:{k}"),
            Scheme::Logo(Grouping::Character) => f.write_str("logo:character"),
            Scheme::Logo(Grouping::Author) => f.write_str("logo:author"),
            Scheme::Logo(Grouping::TimeBin(w)) => write!(f, "logo:timebin:{w}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = String;

    /// `stratified:K`, `logo:character`, `logo:author` or `logo:timebin:W`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let positive = |v: &str| v.parse::<u32>().ok().filter(|&n| n > 0);
        match parts.as_slice() {
            ["stratified", k] => match positive(k) {
                Some(k) if k >= 2 => Ok(Scheme::StratifiedKFold(k as usize)),
                _ => Err(format!("invalid fold count `{k}` (need an integer ≥ 2)")),
            },
            ["logo", "character"] => Ok(Scheme::Logo(Grouping::Character)),
            ["logo", "author"] => Ok(Scheme::Logo(Grouping::Author)),
            ["logo", "timebin", w] => positive(w)
                .map(|w| Scheme::Logo(Grouping::TimeBin(w)))
                .ok_or_else(|| format!("invalid bin width `{w}`")),
            _ => Err(format!(
                "invalid scheme `{s}` (expected stratified:K, logo:character, logo:author or logo:timebin:W)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    Name(String),
    Bin(i32),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Name(s) => f.write_str(s),
            GroupKey::Bin(b) => write!(f, "{b}"),
        }
    }
}

pub fn group_key(character: &CharacterRecord, grouping: Grouping) -> GroupKey {
    match grouping {
        Grouping::Character => GroupKey::Name(character.figure()),
        Grouping::Author => GroupKey::Name(character.author.trim().to_lowercase()),
        Grouping::TimeBin(width) => GroupKey::Bin(bin_start(character.year, width)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Held-out group for LOGO folds.
    pub group: Option<GroupKey>,
}

/// Train/test index sets over `Dataset::characters`. Only labeled characters
/// are assigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub scheme: Scheme,
    pub folds: Vec<Fold>,
}

pub fn make_splits(dataset: &Dataset, scheme: Scheme, seed: u64) -> Result<SplitPlan> {
    let labeled = dataset.labeled_indices();
    let folds = match scheme {
        Scheme::StratifiedKFold(k) => stratified_folds(dataset, &labeled, k, seed)?,
        Scheme::Logo(grouping) => logo_folds(dataset, &labeled, grouping)?,
    };

    let absent: Vec<(Label, usize)> = folds
        .iter()
        .enumerate()
        .flat_map(|(f, fold)| {
            [Label::Detective, Label::NonDetective]
                .into_iter()
                .filter(move |&l| !fold.train.iter().any(|&i| dataset.characters[i].label == Some(l)))
                .map(move |l| (l, f))
        })
        .collect();
    if let Some(&(label, _)) = absent.first() {
        let folds = absent.iter().filter(|(l, _)| *l == label).map(|&(_, f)| f).collect();
        return Err(Error::ClassAbsentFromTraining { label: label.to_string(), folds });
    }
    Ok(SplitPlan { scheme, folds })
}

fn complement(labeled: &[usize], test: &[usize]) -> Vec<usize> {
    let held: HashSet<usize> = test.iter().copied().collect();
    labeled.iter().copied().filter(|i| !held.contains(i)).collect()
}

fn stratified_folds(dataset: &Dataset, labeled: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::invalid("stratified k-fold needs k ≥ 2"));
    }
    if labeled.len() < k {
        return Err(Error::invalid(format!("{} labeled characters for {k} folds", labeled.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut offset = 0;
    for label in [Label::Detective, Label::NonDetective] {
        let mut members: Vec<usize> =
            labeled.iter().copied().filter(|&i| dataset.characters[i].label == Some(label)).collect();
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            tests[(offset + j) % k].push(i);
        }
        offset = (offset + members.len()) % k;
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            Fold { train: complement(labeled, &test), test, group: None }
        })
        .collect())
}

fn logo_folds(dataset: &Dataset, labeled: &[usize], grouping: Grouping) -> Result<Vec<Fold>> {
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for &i in labeled {
        groups.entry(group_key(&dataset.characters[i], grouping)).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::invalid(format!("leave-one-group-out needs ≥ 2 groups, found {}", groups.len())));
    }
    Ok(groups
        .into_iter()
        .map(|(key, test)| Fold { train: complement(labeled, &test), test, group: Some(key) })
        .collect())
}

/// Binary confusion counts with `Detective` as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl Confusion {
    pub fn from_pairs<I: IntoIterator<Item = (Label, Label)>>(pairs: I) -> Self {
        let mut c = Confusion::default();
        for (gold, predicted) in pairs {
            c.record(gold, predicted);
        }
        c
    }

    pub fn record(&mut self, gold: Label, predicted: Label) {
        match (gold, predicted) {
            (Label::Detective, Label::Detective) => self.tp += 1,
            (Label::Detective, Label::NonDetective) => self.fn_ += 1,
            (Label::NonDetective, Label::NonDetective) => self.tn += 1,
            (Label::NonDetective, Label::Detective) => self.fp += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        self.fp += other.fp;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn metrics(&self) -> Metrics {
        let detective = ClassMetrics::from_counts(self.tp, self.fp, self.fn_);
        let non_detective = ClassMetrics::from_counts(self.tn, self.fn_, self.fp);
        Metrics { balanced_accuracy: balanced_accuracy(self), detective, non_detective, confusion: *self }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mean recall over the classes present in the gold labels.
pub fn balanced_accuracy(c: &Confusion) -> f64 {
    let recalls: Vec<f64> = [(c.tp, c.tp + c.fn_), (c.tn, c.tn + c.fp)]
        .into_iter()
        .filter(|&(_, support)| support > 0)
        .map(|(hit, support)| ratio(hit, support))
        .collect();
    if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl ClassMetrics {
    /// Precision and recall are 0 when undefined; F1 is 0 when both are 0.
    pub fn from_counts(hit: u64, false_alarm: u64, miss: u64) -> Self {
        let precision = ratio(hit, hit + false_alarm);
        let recall = ratio(hit, hit + miss);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        ClassMetrics { precision, recall, f1, support: hit + miss }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub balanced_accuracy: f64,
    pub detective: ClassMetrics,
    pub non_detective: ClassMetrics,
    pub confusion: Confusion,
}

impl Metrics {
    pub fn per_class(&self) -> [(Label, ClassMetrics); 2] {
        [(Label::Detective, self.detective), (Label::NonDetective, self.non_detective)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldMetrics {
    pub fold: usize,
    pub group: Option<GroupKey>,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub scheme: Scheme,
    /// Metrics of the confusion matrix pooled over all folds.
    pub pooled: Metrics,
    pub per_fold: Vec<FoldMetrics>,
}

impl EvalReport {
    pub fn balanced_accuracy(&self) -> f64 {
        self.pooled.balanced_accuracy
    }

    /// Key-value text report, one `key=value` per line.
    pub fn write_report<W: Write>(&self, mut w: W) -> Result<()> {
        let m = &self.pooled;
        writeln!(w, "scheme={}", self.scheme)?;
        writeln!(w, "folds={}", self.per_fold.len())?;
        writeln!(w, "aggregation=pooled")?;
        writeln!(w, "balanced_accuracy={}", m.balanced_accuracy)?;
        for (label, c) in m.per_class() {
            writeln!(w, "{label}.precision={}", c.precision)?;
            writeln!(w, "{label}.recall={}", c.recall)?;
            writeln!(w, "{label}.f1={}", c.f1)?;
            writeln!(w, "{label}.support={}", c.support)?;
        }
        let c = &m.confusion;
        writeln!(w, "confusion.tp={}\nconfusion.fn={}\nconfusion.tn={}\nconfusion.fp={}", c.tp, c.fn_, c.tn, c.fp)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_fold_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "fold",
            "group",
            "n_test",
            "balanced_accuracy",
            "detective_precision",
            "detective_recall",
            "detective_f1",
            "non_detective_precision",
            "non_detective_recall",
            "non_detective_f1",
            "tp",
            "fn",
            "tn",
            "fp",
        ])?;
        for f in &self.per_fold {
            let m = &f.metrics;
            let c = &m.confusion;
            w.write_record([
                f.fold.to_string(),
                f.group.as_ref().map(ToString::to_string).unwrap_or_default(),
                c.total().to_string(),
                m.balanced_accuracy.to_string(),
                m.detective.precision.to_string(),
                m.detective.recall.to_string(),
                m.detective.f1.to_string(),
                m.non_detective.precision.to_string(),
                m.non_detective.recall.to_string(),
                m.non_detective.f1.to_string(),
                c.tp.to_string(),
                c.fn_.to_string(),
                c.tn.to_string(),
                c.fp.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OofPrediction {
    pub character_id: String,
    pub year: i32,
    pub gold: Label,
    pub predicted: Label,
    pub score: f64,
    pub fold: usize,
}

pub fn write_predictions_csv<W: Write>(predictions: &[OofPrediction], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["character_id", "year", "gold", "predicted", "score"])?;
    for p in predictions {
        w.write_record([
            p.character_id.clone(),
            p.year.to_string(),
            p.gold.to_string(),
            p.predicted.to_string(),
            p.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub config: TrainConfig,
}

/// Per-fold fitted state, exposed for leakage audits.
#[derive(Clone, Debug)]
pub struct FoldArtifact {
    pub featurizer: FittedFeaturizer,
    pub model: LinearModel,
}

#[derive(Clone, Debug)]
pub struct CvOutcome {
    pub report: EvalReport,
    /// Out-of-fold predictions in dataset order.
    pub predictions: Vec<OofPrediction>,
    pub folds: Vec<FoldArtifact>,
}

fn gold(c: &CharacterRecord) -> Result<Label> {
    c.label.ok_or_else(|| Error::invalid(format!("character `{}` has no gold label", c.character_id)))
}

fn run_fold(
    dataset: &Dataset,
    featurizer: &Featurizer,
    spec: &ModelSpec,
    fold_index: usize,
    fold: &Fold,
) -> Result<(FoldArtifact, Vec<(usize, OofPrediction)>)> {
    let fitted = featurizer.fit(dataset, &fold.train)?;
    let x_train = fitted.transform(dataset, &fold.train)?;
    let y_train = fold.train.iter().map(|&i| gold(&dataset.characters[i])).collect::<Result<Vec<_>>>()?;
    let config = TrainConfig { seed: spec.config.seed.wrapping_add(fold_index as u64), ..spec.config.clone() };
    let model = linear::train(&x_train, &y_train, spec.kind, &config)?;

    let x_test = fitted.transform(dataset, &fold.test)?;
    let mut predictions = Vec::with_capacity(fold.test.len());
    for (&i, x) in fold.test.iter().zip(&x_test) {
        let c = &dataset.characters[i];
        let score = model.decision_score(x)?;
        predictions.push((
            i,
            OofPrediction {
                character_id: c.character_id.clone(),
                year: c.year,
                gold: gold(c)?,
                predicted: linear::label_for_score(score),
                score,
                fold: fold_index,
            },
        ));
    }
    Ok((FoldArtifact { featurizer: fitted, model }, predictions))
}

/// Fits and evaluates one model per fold. Folds run concurrently; results
/// are aggregated in fold order.
pub fn cross_validate(dataset: &Dataset, featurizer: &Featurizer, spec: &ModelSpec, plan: &SplitPlan) -> Result<CvOutcome> {
    let indexed: Vec<(usize, &Fold)> = plan.folds.iter().enumerate().collect();
    let results = par::map(&indexed, |&(f, fold)| run_fold(dataset, featurizer, spec, f, fold));

    let mut pooled = Confusion::default();
    let mut per_fold = Vec::with_capacity(results.len());
    let mut folds = Vec::with_capacity(results.len());
    let mut predictions = Vec::new();
    for (f, result) in results.into_iter().enumerate() {
        let (artifact, preds) = result?;
        let confusion = Confusion::from_pairs(preds.iter().map(|(_, p)| (p.gold, p.predicted)));
        pooled.merge(&confusion);
        per_fold.push(FoldMetrics { fold: f, group: plan.folds[f].group.clone(), metrics: confusion.metrics() });
        folds.push(artifact);
        predictions.extend(preds);
    }
    predictions.sort_by_key(|(i, _)| *i);
    Ok(CvOutcome {
        report: EvalReport { scheme: plan.scheme, pooled: pooled.metrics(), per_fold },
        predictions: predictions.into_iter().map(|(_, p)| p).collect(),
        folds,
    })
}

/// Misclassification rate per time bin; empty bins are omitted.
pub fn error_over_time(predictions: &[OofPrediction], bin_width_years: u32) -> TrendSeries {
    let mut bins: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    for p in predictions {
        let e = bins.entry(bin_start(p.year, bin_width_years)).or_insert((0, 0));
        e.0 += usize::from(p.gold != p.predicted);
        e.1 += 1;
    }
    TrendSeries {
        points: bins
            .into_iter()
            .map(|(start, (errors, n))| TrendPoint { bin_start: start, value: errors as f64 / n as f64, support: n })
            .collect(),
        fit: None,
    }
}
