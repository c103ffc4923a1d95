//! Linear classifiers trained from scratch: L2-regularized logistic
//! regression and a linear soft-margin SVM.
//!
//! Logistic regression is fitted with full-batch gradient descent and a
//! backtracking (Armijo) line search, so its objective trace is monotone.
//! The SVM uses epoch-ordered stochastic subgradient steps with iterate
//! averaging; the returned model is the epoch-end averaged iterate with the
//! lowest full objective, and the trace records that incumbent's objective.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::featurize::FeatureKind;
use crate::io::bytes::Cursor;
use crate::model::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LogReg,
    LinearSvm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LogReg => "logreg",
            ModelKind::LinearSvm => "svm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassWeighting {
    None,
    /// Each class weighted by `n / (2 · n_class)`.
    InverseFrequency,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub max_epochs: usize,
    /// Stop once an epoch decreases the objective by less than this.
    pub tolerance: f64,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 1e-2,
            max_epochs: 500,
            tolerance: 1e-6,
            seed: 42,
            class_weighting: ClassWeighting::InverseFrequency,
            standardize: false,
        }
    }
}

impl TrainConfig {
    /// Defaults with standardization on for dense embeddings, off for BoW.
    pub fn for_features(kind: FeatureKind) -> Self {
        TrainConfig { standardize: kind == FeatureKind::Embedding, ..Default::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.l2_lambda > 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::invalid("l2_lambda must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be positive"));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Per-feature standardization. Zero-variance features keep std 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub kind: ModelKind,
    pub scaler: Option<Scaler>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `w · scale(x) + b`.
    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let dot = match &self.scaler {
            Some(s) => x
                .iter()
                .zip(&s.mean)
                .zip(&s.std)
                .zip(&self.weights)
                .map(|(((x, m), sd), w)| w * (x - m) / sd)
                .sum::<f64>(),
            None => dot(&self.weights, x),
        };
        Ok(dot + self.bias)
    }

    /// Detective iff the score is strictly positive.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(label_for_score(self.decision_score(x)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(File::open(path)?)
    }

    /// Binary layout: magic `CLMD`, version u32 = 1, kind u8, dim u32,
    /// dim × f64 weights, f64 bias, has_scaler u8, then dim × f64 means and
    /// dim × f64 stds when present. Little-endian throughout.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = u32::try_from(self.dim()).map_err(|_| Error::invalid("model dimension exceeds u32"))?;
        let mut buf = Vec::with_capacity(32 + 24 * self.dim());
        buf.extend_from_slice(MODEL_MAGIC);
        buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        buf.push(match self.kind {
            ModelKind::LogReg => 0,
            ModelKind::LinearSvm => 1,
        });
        buf.extend_from_slice(&dim.to_le_bytes());
        for v in &self.weights {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&self.bias.to_le_bytes());
        match &self.scaler {
            Some(s) => {
                buf.push(1);
                for v in s.mean.iter().chain(&s.std) {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            None => buf.push(0),
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        if data.len() < 4 || &data[..4] != MODEL_MAGIC {
            return Err(Error::Format("bad magic, expected \"CLMD\"".into()));
        }
        let mut cur = Cursor::new(&data, 4);
        let version = cur.u32("header")?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let kind = match cur.u8("header")? {
            0 => ModelKind::LogReg,
            1 => ModelKind::LinearSvm,
            k => return Err(Error::Format(format!("unknown model kind {k}"))),
        };
        let dim = cur.u32("header")? as usize;
        let read_vec = |cur: &mut Cursor, what: &str| -> Result<Vec<f64>> { (0..dim).map(|_| cur.f64(what)).collect() };
        let weights = read_vec(&mut cur, "weights")?;
        let bias = cur.f64("bias")?;
        let scaler = match cur.u8("scaler flag")? {
            0 => None,
            1 => Some(Scaler { mean: read_vec(&mut cur, "scaler")?, std: read_vec(&mut cur, "scaler")? }),
            f => return Err(Error::Format(format!("bad scaler flag {f}"))),
        };
        if cur.remaining() != 0 {
            return Err(Error::Corruption { offset: cur.pos() as u64, message: "trailing bytes".into() });
        }
        Ok(LinearModel { weights, bias, kind, scaler })
    }
}

const MODEL_MAGIC: &[u8; 4] = b"CLMD";
const MODEL_VERSION: u32 = 1;

pub fn label_for_score(score: f64) -> Label {
    if score > 0.0 {
        Label::Detective
    } else {
        Label::NonDetective
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable `ln(1 + e^t)`.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn sample_weights(labels: &[Label], weighting: ClassWeighting) -> Vec<f64> {
    match weighting {
        ClassWeighting::None => vec![1.0; labels.len()],
        ClassWeighting::InverseFrequency => {
            let n = labels.len() as f64;
            let pos = labels.iter().filter(|l| l.is_detective()).count() as f64;
            let neg = n - pos;
            labels
                .iter()
                .map(|l| if l.is_detective() { n / (2.0 * pos) } else { n / (2.0 * neg) })
                .collect()
        }
    }
}

/// Weighted, L2-regularized logistic loss over parameters `[w..., b]`:
///
/// `(1/Σs) Σ s_i ln(1 + exp(-y_i (w·x_i + b))) + (λ/2) ‖w‖²`
///
/// The bias is not regularized.
pub struct LogisticObjective<'a> {
    rows: &'a [Vec<f64>],
    targets: Vec<f64>,
    weights: Vec<f64>,
    weight_sum: f64,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(rows: &'a [Vec<f64>], labels: &[Label], lambda: f64, weighting: ClassWeighting) -> Self {
        let weights = sample_weights(labels, weighting);
        let weight_sum = weights.iter().sum();
        LogisticObjective { rows, targets: labels.iter().map(|l| l.sign()).collect(), weights, weight_sum, lambda }
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let (w, b) = params.split_at(self.dim());
        let b = b[0];
        let loss: f64 = self
            .rows
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((x, y), s)| s * softplus(-y * (dot(w, x) + b)))
            .sum();
        loss / self.weight_sum + 0.5 * self.lambda * dot(w, w)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let (w, b) = params.split_at(d);
        let b = b[0];
        let mut grad = vec![0.0; d + 1];
        for ((x, y), s) in self.rows.iter().zip(&self.targets).zip(&self.weights) {
            let coef = -s * y * sigmoid(-y * (dot(w, x) + b)) / self.weight_sum;
            for (g, xi) in grad[..d].iter_mut().zip(x) {
                *g += coef * xi;
            }
            grad[d] += coef;
        }
        for (g, wi) in grad[..d].iter_mut().zip(w) {
            *g += self.lambda * wi;
        }
        grad
    }
}

/// Weighted, L2-regularized hinge loss over parameters `[w..., b]`.
pub struct HingeObjective<'a> {
    rows: &'a [Vec<f64>],
    targets: Vec<f64>,
    weights: Vec<f64>,
    weight_sum: f64,
    lambda: f64,
}

impl<'a> HingeObjective<'a> {
    pub fn new(rows: &'a [Vec<f64>], labels: &[Label], lambda: f64, weighting: ClassWeighting) -> Self {
        let weights = sample_weights(labels, weighting);
        let weight_sum = weights.iter().sum();
        HingeObjective { rows, targets: labels.iter().map(|l| l.sign()).collect(), weights, weight_sum, lambda }
    }

    pub fn value(&self, w: &[f64], b: f64) -> f64 {
        let loss: f64 = self
            .rows
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((x, y), s)| s * (1.0 - y * (dot(w, x) + b)).max(0.0))
            .sum();
        loss / self.weight_sum + 0.5 * self.lambda * dot(w, w)
    }
}

/// A trained model together with its recorded objective values, one per
/// epoch (the first entry is the objective at initialization).
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: LinearModel,
    pub trace: Vec<f64>,
}

pub fn train(features: &[Vec<f64>], labels: &[Label], kind: ModelKind, config: &TrainConfig) -> Result<LinearModel> {
    Ok(train_with_trace(features, labels, kind, config)?.model)
}

pub fn train_with_trace(
    features: &[Vec<f64>],
    labels: &[Label],
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.check()?;
    if features.len() != labels.len() {
        return Err(Error::invalid(format!("{} feature rows but {} labels", features.len(), labels.len())));
    }
    let dim = features.first().ok_or_else(|| Error::invalid("no training examples"))?.len();
    for row in features {
        if row.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features".into()));
        }
    }
    let positives = labels.iter().filter(|l| l.is_detective()).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }

    let scaler = config.standardize.then(|| Scaler::fit(features));
    let scaled: Vec<Vec<f64>>;
    let rows: &[Vec<f64>] = match &scaler {
        Some(s) => {
            scaled = features.iter().map(|r| s.apply(r)).collect();
            &scaled
        }
        None => features,
    };

    let (weights, bias, trace) = match kind {
        ModelKind::LogReg => fit_logistic(rows, labels, config),
        ModelKind::LinearSvm => fit_svm(rows, labels, config),
    };
    Ok(TrainOutcome { model: LinearModel { weights, bias, kind, scaler }, trace })
}

fn fit_logistic(rows: &[Vec<f64>], labels: &[Label], config: &TrainConfig) -> (Vec<f64>, f64, Vec<f64>) {
    const ARMIJO: f64 = 1e-4;
    let objective = LogisticObjective::new(rows, labels, config.l2_lambda, config.class_weighting);
    let d = objective.dim();
    let mut params = vec![0.0; d + 1];
    let mut value = objective.value(&params);
    let mut trace = vec![value];
    let mut step = 1.0;
    for _ in 0..config.max_epochs {
        let grad = objective.gradient(&params);
        let gnorm2 = dot(&grad, &grad);
        if gnorm2 < 1e-30 {
            break;
        }
        let mut t = step;
        let accepted = loop {
            let candidate: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - t * g).collect();
            let cand_value = objective.value(&candidate);
            if cand_value <= value - ARMIJO * t * gnorm2 {
                break Some((candidate, cand_value));
            }
            t *= 0.5;
            if t < 1e-20 {
                break None;
            }
        };
        let Some((candidate, cand_value)) = accepted else { break };
        let decrease = value - cand_value;
        params = candidate;
        value = cand_value;
        trace.push(value);
        step = t * 2.0;
        if decrease < config.tolerance {
            break;
        }
    }
    let bias = params.pop().unwrap_or(0.0);
    (params, bias, trace)
}

fn fit_svm(rows: &[Vec<f64>], labels: &[Label], config: &TrainConfig) -> (Vec<f64>, f64, Vec<f64>) {
    const PATIENCE: usize = 10;
    let objective = HingeObjective::new(rows, labels, config.l2_lambda, config.class_weighting);
    let n = rows.len();
    let d = rows[0].len();
    let lambda = config.l2_lambda;
    // Per-example multiplier so a uniform draw is an unbiased estimate of the
    // weighted average loss.
    let scale: Vec<f64> = objective.weights.iter().map(|s| s * n as f64 / objective.weight_sum).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; d];
    let mut avg_b = 0.0;
    let mut averaged = 0usize;
    let mut t = 0usize;

    let mut best_w = w.clone();
    let mut best_b = b;
    let mut best = objective.value(&w, b);
    let mut trace = vec![best];
    let mut stall = 0;

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (1.0 + lambda * t as f64);
            let y = objective.targets[i];
            let margin = y * (dot(&w, &rows[i]) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            if margin < 1.0 {
                let g = eta * scale[i] * y;
                for (wj, xj) in w.iter_mut().zip(&rows[i]) {
                    *wj += g * xj;
                }
                b += g;
            }
            if epoch > 0 {
                averaged += 1;
                let k = averaged as f64;
                for (a, wj) in avg_w.iter_mut().zip(&w) {
                    *a += (wj - *a) / k;
                }
                avg_b += (b - avg_b) / k;
            }
        }
        let (cand_w, cand_b) = if epoch == 0 { (&w, b) } else { (&avg_w, avg_b) };
        let value = objective.value(cand_w, cand_b);
        if value < best {
            if best - value > config.tolerance {
                stall = 0;
            } else {
                stall += 1;
            }
            best = value;
            best_w.clone_from(cand_w);
            best_b = cand_b;
        } else {
            stall += 1;
        }
        trace.push(best);
        if stall >= PATIENCE {
            break;
        }
    }
    (best_w, best_b, trace)
}
