//! Multinomial softmax regression over downsampled grayscale features.
//!
//! Deliberately small: zero-initialized parameters, mini-batch gradient
//! descent on a convex objective, and a gradient that can be checked
//! against central finite differences.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{ClassifierError, LabeledDataset, Predictor};
use crate::rng::{CounterRng, Seed};
use crate::snr::ImageF;

/// Linear multi-class model: probabilities = softmax(W x + b).
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxModel {
    /// K x D weight matrix, row per class.
    pub weights: Vec<Vec<f64>>,
    /// K biases.
    pub bias: Vec<f64>,
    /// Features are a d x d grid; D = d * d.
    pub feature_side: usize,
    pub class_names: Vec<String>,
}

impl SoftmaxModel {
    pub fn zeros(class_names: Vec<String>, feature_side: usize) -> Result<Self, ClassifierError> {
        if feature_side == 0 {
            return Err(ClassifierError::ZeroFeatureSide);
        }
        let k = class_names.len();
        let d = feature_side * feature_side;
        Ok(SoftmaxModel {
            weights: vec![vec![0.0; d]; k],
            bias: vec![0.0; k],
            feature_side,
            class_names,
        })
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn features(&self) -> usize {
        self.feature_side * self.feature_side
    }

    fn logits(&self, features: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    /// Softmax with max-subtraction; probabilities sum to 1 within 1e-12.
    pub fn probabilities(&self, features: &[f64]) -> Vec<f64> {
        let logits = self.logits(features);
        softmax(&logits)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn argmax_lowest_tie(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Training hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: Seed,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 60,
            batch_size: 32,
            l2: 1e-4,
            seed: Seed(0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.learning_rate > 0.0) || self.l2 < 0.0 || self.batch_size == 0 {
            return Err(ClassifierError::BadTrainConfig);
        }
        Ok(())
    }
}

/// Downsamples an image to a d*d feature vector in roughly [0, 1].
///
/// Grayscale is the per-pixel channel mean; cell (i, j) of the d x d grid
/// averages the pixel block rows floor(i*H/d)..floor((i+1)*H/d) (likewise
/// for columns), and everything is divided by 255. Out-of-range float
/// pixels pass through the arithmetic unclamped.
pub fn preprocess(image: &ImageF, feature_side: usize) -> Vec<f64> {
    let d = feature_side;
    assert!(d >= 1, "feature side must be >= 1");
    let (width, height, channels) = image.shape();
    let mut features = Vec::with_capacity(d * d);
    for i in 0..d {
        let y0 = (i * height / d).min(height - 1);
        let y1 = ((i + 1) * height / d).clamp(y0 + 1, height);
        for j in 0..d {
            let x0 = (j * width / d).min(width - 1);
            let x1 = ((j + 1) * width / d).clamp(x0 + 1, width);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    let mut gray = 0.0;
                    for c in 0..channels {
                        gray += image.at(x, y, c);
                    }
                    sum += gray / channels as f64;
                }
            }
            features.push(sum / ((y1 - y0) * (x1 - x0)) as f64 / 255.0);
        }
    }
    features
}

/// Predicted class index and the full probability vector.
pub fn predict(model: &SoftmaxModel, image: &ImageF) -> (usize, Vec<f64>) {
    let features = preprocess(image, model.feature_side);
    let probs = model.probabilities(&features);
    (argmax_lowest_tie(&probs), probs)
}

/// Gradients of the regularized mean cross-entropy over a batch.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy over (features, label) pairs plus (l2/2)*||W||^2.
pub fn batch_loss(model: &SoftmaxModel, batch: &[(Vec<f64>, usize)], l2: f64) -> f64 {
    let ce: f64 = batch
        .iter()
        .map(|(x, y)| {
            let p = model.probabilities(x);
            -(p[*y].max(f64::MIN_POSITIVE)).ln()
        })
        .sum::<f64>()
        / batch.len() as f64;
    let reg: f64 = model
        .weights
        .iter()
        .flat_map(|row| row.iter().map(|w| w * w))
        .sum::<f64>();
    ce + 0.5 * l2 * reg
}

/// Analytic gradient of [`batch_loss`] in the model parameters.
pub fn batch_gradient(model: &SoftmaxModel, batch: &[(Vec<f64>, usize)], l2: f64) -> Gradients {
    let k = model.classes();
    let d = model.features();
    let mut gw = vec![vec![0.0; d]; k];
    let mut gb = vec![0.0; k];
    let inv = 1.0 / batch.len() as f64;
    for (x, y) in batch {
        let mut residual = model.probabilities(x);
        residual[*y] -= 1.0;
        for (class, r) in residual.iter().enumerate() {
            gb[class] += r * inv;
            let row = &mut gw[class];
            for (g, xi) in row.iter_mut().zip(x) {
                *g += r * xi * inv;
            }
        }
    }
    for (grad_row, w_row) in gw.iter_mut().zip(&model.weights) {
        for (g, w) in grad_row.iter_mut().zip(w_row) {
            *g += l2 * w;
        }
    }
    Gradients { weights: gw, bias: gb }
}

/// Mean regularized cross-entropy of the model over a dataset.
pub fn mean_loss(model: &SoftmaxModel, dataset: &LabeledDataset, l2: f64) -> f64 {
    let batch: Vec<(Vec<f64>, usize)> = dataset
        .items
        .iter()
        .map(|(img, y)| (preprocess(img, model.feature_side), *y))
        .collect();
    batch_loss(model, &batch, l2)
}

/// Trains by mini-batch gradient descent from zero initialization.
///
/// Batches are formed by a seeded shuffle per epoch (epoch e shuffles
/// with `cfg.seed.derive(e)`), so training is bitwise reproducible.
/// Returns the model and the mean training loss of each epoch, measured
/// on the batches before their update step.
pub fn train(
    train_set: &LabeledDataset,
    cfg: &TrainConfig,
    feature_side: usize,
) -> Result<(SoftmaxModel, Vec<f64>), ClassifierError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let mut model = SoftmaxModel::zeros(train_set.class_names.clone(), feature_side)?;
    let examples: Vec<(Vec<f64>, usize)> = train_set
        .items
        .iter()
        .map(|(img, y)| (preprocess(img, feature_side), *y))
        .collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = CounterRng::new(cfg.seed.derive(epoch as u64));
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(Vec<f64>, usize)> =
                chunk.iter().map(|&i| examples[i].clone()).collect();
            loss_sum += batch_loss(&model, &batch, cfg.l2);
            batches += 1;
            let grads = batch_gradient(&model, &batch, cfg.l2);
            for (w_row, g_row) in model.weights.iter_mut().zip(&grads.weights) {
                for (w, g) in w_row.iter_mut().zip(g_row) {
                    *w -= cfg.learning_rate * g;
                }
            }
            for (b, g) in model.bias.iter_mut().zip(&grads.bias) {
                *b -= cfg.learning_rate * g;
            }
        }
        let epoch_loss = loss_sum / batches as f64;
        if !epoch_loss.is_finite() {
            return Err(ClassifierError::Diverged(epoch));
        }
        epoch_losses.push(epoch_loss);
    }
    Ok((model, epoch_losses))
}

/// Fraction of items whose predicted class matches the label.
pub fn accuracy(model: &SoftmaxModel, dataset: &LabeledDataset) -> Result<f64, ClassifierError> {
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let correct = dataset
        .items
        .iter()
        .filter(|(img, y)| predict(model, img).0 == *y)
        .count();
    Ok(correct as f64 / dataset.len() as f64)
}

impl Predictor for SoftmaxModel {
    fn predict_batch(&self, images: &[ImageF]) -> Result<Vec<usize>, ClassifierError> {
        Ok(images.par_iter().map(|img| predict(self, img).0).collect())
    }

    fn class_count(&self) -> usize {
        self.classes()
    }
}

/// Versioned text format: header `SOFTMAX1 K D d`, the K class names one
/// per line, then the bias row and the K weight rows with 17 significant
/// digits (enough to reproduce each f64 exactly).
pub fn save_model(model: &SoftmaxModel, path: &Path) -> Result<(), ClassifierError> {
    let mut out = String::new();
    out.push_str(&format!(
        "SOFTMAX1 {} {} {}\n",
        model.classes(),
        model.features(),
        model.feature_side
    ));
    for name in &model.class_names {
        out.push_str(name);
        out.push('\n');
    }
    let row_text =
        |row: &[f64]| row.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ");
    out.push_str(&row_text(&model.bias));
    out.push('\n');
    for row in &model.weights {
        out.push_str(&row_text(row));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| ClassifierError::Io { path: path.display().to_string(), source: e })
}

pub fn load_model(path: &Path) -> Result<SoftmaxModel, ClassifierError> {
    let bad = |detail: &str| ClassifierError::ModelFormat {
        path: path.display().to_string(),
        detail: detail.to_string(),
    };
    let text = fs::read_to_string(path)
        .map_err(|e| ClassifierError::Io { path: path.display().to_string(), source: e })?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "SOFTMAX1" {
        return Err(bad("header must be `SOFTMAX1 K D d`"));
    }
    let parse_usize =
        |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad {what}")));
    let k = parse_usize(fields[1], "class count")?;
    let d_features = parse_usize(fields[2], "feature count")?;
    let d_side = parse_usize(fields[3], "feature side")?;
    if d_side == 0 || d_features != d_side * d_side || k == 0 {
        return Err(ClassifierError::ModelShape {
            classes: k,
            features: d_features,
            feature_side: d_side,
        });
    }
    let mut class_names = Vec::with_capacity(k);
    for _ in 0..k {
        class_names.push(lines.next().ok_or_else(|| bad("missing class name"))?.to_string());
    }
    let parse_row = |line: &str, expect: usize| -> Result<Vec<f64>, ClassifierError> {
        let row: Result<Vec<f64>, _> =
            line.split_whitespace().map(|t| t.parse::<f64>()).collect();
        let row = row.map_err(|_| bad("malformed number"))?;
        if row.len() != expect {
            return Err(bad(&format!("row has {} values, expected {expect}", row.len())));
        }
        Ok(row)
    };
    let bias = parse_row(lines.next().ok_or_else(|| bad("missing bias row"))?, k)?;
    let mut weights = Vec::with_capacity(k);
    for _ in 0..k {
        weights.push(parse_row(lines.next().ok_or_else(|| bad("missing weight row"))?, d_features)?);
    }
    Ok(SoftmaxModel { weights, bias, feature_side: d_side, class_names })
}
