//! Multinomial logistic regression over hashed features, trained by
//! full-batch gradient descent from zero weights.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureConfig, SparseVector};
use super::{Prediction, Verifier, VerifierInput, VerifyError};
use crate::corpus::Label;
use crate::segmenter::Lexicon;

const FORMAT_VERSION: u32 = 1;
const MAX_HASH_BITS: u32 = 26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Recorded with the model. Training itself has no random component.
    pub seed: u64,
    /// Scale feature vectors to unit L2 norm, in training and prediction.
    pub normalize: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 1.0,
            epochs: 200,
            l2: 1e-4,
            seed: 0,
            normalize: true,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), VerifyError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(VerifyError::Hyperparams(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(VerifyError::Hyperparams("epochs must be >= 1".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(VerifyError::Hyperparams(format!("l2 must be >= 0, got {}", self.l2)));
        }
        Ok(())
    }
}

/// An encoded training instance: feature vector and class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: SparseVector,
    pub class: usize,
}

/// Gradient with the same shape as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LinearVerifierModel {
    /// Sorted in canonical label order; also the argmax tie-break order.
    pub classes: Vec<Label>,
    pub features: FeatureConfig,
    pub hyperparams: Hyperparams,
    /// One dense vector of length `2^hash_bits` per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub final_loss: f64,
    lexicon: Lexicon,
    lexicon_fingerprint: String,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearVerifierModel,
    /// Objective before each epoch's update.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    classes: Vec<Label>,
    features: FeatureConfig,
    hyperparams: Hyperparams,
    lexicon_fingerprint: String,
    final_loss: f64,
    bias: Vec<f64>,
    /// Non-zero entries only, as (index, value).
    weights: Vec<Vec<(u32, f64)>>,
}

fn check_features(features: &FeatureConfig) -> Result<(), VerifyError> {
    if features.hash_bits == 0 || features.hash_bits > MAX_HASH_BITS {
        return Err(VerifyError::Hyperparams(format!(
            "hash bits must be in 1..={MAX_HASH_BITS}, got {}",
            features.hash_bits
        )));
    }
    Ok(())
}

impl LinearVerifierModel {
    pub fn zeros(classes: Vec<Label>, features: FeatureConfig, hyperparams: Hyperparams, lexicon: Lexicon) -> Self {
        let dim = features.dim();
        let k = classes.len();
        LinearVerifierModel {
            classes,
            features,
            hyperparams,
            weights: vec![vec![0.0; dim]; k],
            bias: vec![0.0; k],
            final_loss: f64::NAN,
            lexicon_fingerprint: lexicon.fingerprint(),
            lexicon,
        }
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn lexicon_fingerprint(&self) -> &str {
        &self.lexicon_fingerprint
    }

    pub fn class_index(&self, label: Label) -> Option<usize> {
        self.classes.iter().position(|&c| c == label)
    }

    pub fn encode(&self, input: &VerifierInput) -> SparseVector {
        let x = featurize(input, &self.features, &self.lexicon);
        if self.hyperparams.normalize {
            x.normalized()
        } else {
            x
        }
    }

    pub fn example(&self, input: &VerifierInput, label: Label) -> Result<Example, VerifyError> {
        input.validate()?;
        let class = self.class_index(label).ok_or(VerifyError::UnknownClass(label))?;
        Ok(Example {
            x: self.encode(input),
            class,
        })
    }

    fn logits(&self, x: &SparseVector) -> Vec<f64> {
        logits(&self.weights, &self.bias, x)
    }

    /// Softmax probabilities in class order.
    pub fn probabilities(&self, x: &SparseVector) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn predict(&self, input: &VerifierInput) -> Prediction {
        let p = self.probabilities(&self.encode(input));
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        Prediction {
            label: self.classes[best],
            probs: Some(self.classes.iter().copied().zip(p).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            classes: self.classes.clone(),
            features: self.features,
            hyperparams: self.hyperparams,
            lexicon_fingerprint: self.lexicon_fingerprint.clone(),
            final_loss: self.final_loss,
            bias: self.bias.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| {
                    w.iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(i, v)| (i as u32, *v))
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    /// Parses a model file. `lexicon` must be the one used in training.
    pub fn from_json(text: &str, lexicon: Lexicon) -> Result<Self, VerifyError> {
        let bad = |m: String| VerifyError::ModelFormat(m);
        let file: ModelFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {}", file.format_version)));
        }
        check_features(&file.features)?;
        file.hyperparams.validate()?;
        let k = file.classes.len();
        let distinct: BTreeSet<Label> = file.classes.iter().copied().collect();
        if k < 2 || distinct.len() != k || !file.classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(bad(format!("classes must be >= 2 distinct labels in order, got {:?}", file.classes)));
        }
        if file.bias.len() != k || file.weights.len() != k {
            return Err(bad("bias and weights must have one entry per class".into()));
        }
        let fp = lexicon.fingerprint();
        if fp != file.lexicon_fingerprint {
            return Err(VerifyError::LexiconMismatch {
                expected: file.lexicon_fingerprint,
                got: fp,
            });
        }
        let dim = file.features.dim();
        let mut weights = vec![vec![0.0; dim]; k];
        for (dense, sparse) in weights.iter_mut().zip(&file.weights) {
            for &(i, v) in sparse {
                if i as usize >= dim {
                    return Err(bad(format!("weight index {i} out of range for dimension {dim}")));
                }
                dense[i as usize] = v;
            }
        }
        let all_finite = file.bias.iter().all(|v| v.is_finite())
            && file.weights.iter().flatten().all(|(_, v)| v.is_finite());
        if !all_finite {
            return Err(bad("non-finite parameter".into()));
        }
        Ok(LinearVerifierModel {
            classes: file.classes,
            features: file.features,
            hyperparams: file.hyperparams,
            weights,
            bias: file.bias,
            final_loss: file.final_loss,
            lexicon,
            lexicon_fingerprint: file.lexicon_fingerprint,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), VerifyError> {
        crate::io::write_atomic(path, self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path, lexicon: Lexicon) -> Result<Self, VerifyError> {
        Self::from_json(&std::fs::read_to_string(path)?, lexicon)
    }
}

impl Verifier for LinearVerifierModel {
    fn verify(&self, input: &VerifierInput) -> Result<Prediction, VerifyError> {
        input.validate()?;
        Ok(self.predict(input))
    }
}

fn logits(weights: &[Vec<f64>], bias: &[f64], x: &SparseVector) -> Vec<f64> {
    weights.iter().zip(bias).map(|(w, b)| x.dot(w) + b).collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(z);
    z.iter().map(|v| (v - lse).exp()).collect()
}

/// Mean cross-entropy of `batch`; adds its gradient into `gw`/`gb`.
fn cross_entropy_pass(
    weights: &[Vec<f64>],
    bias: &[f64],
    batch: &[Example],
    gw: &mut [Vec<f64>],
    gb: &mut [f64],
) -> f64 {
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for ex in batch {
        let z = logits(weights, bias, &ex.x);
        let lse = log_sum_exp(&z);
        loss += lse - z[ex.class];
        for (c, zc) in z.iter().enumerate() {
            let residual = ((zc - lse).exp() - if c == ex.class { 1.0 } else { 0.0 }) / n;
            gb[c] += residual;
            for &(i, v) in ex.x.entries() {
                gw[c][i as usize] += residual * v;
            }
        }
    }
    loss / n
}

fn squared_norm(weights: &[Vec<f64>]) -> f64 {
    weights.iter().flatten().map(|v| v * v).sum()
}

/// Mean cross-entropy plus `(l2/2)·‖W‖²` (bias unregularized) and its
/// analytic gradient.
pub fn loss_and_grad(model: &LinearVerifierModel, batch: &[Example]) -> Result<(f64, Gradient), VerifyError> {
    if batch.is_empty() {
        return Err(VerifyError::EmptyBatch);
    }
    let mut gw = vec![vec![0.0; model.dim()]; model.classes.len()];
    let mut gb = vec![0.0; model.classes.len()];
    let ce = cross_entropy_pass(&model.weights, &model.bias, batch, &mut gw, &mut gb);
    let l2 = model.hyperparams.l2;
    for (g, w) in gw.iter_mut().zip(&model.weights) {
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi += l2 * wi;
        }
    }
    let loss = ce + 0.5 * l2 * squared_norm(&model.weights);
    Ok((loss, Gradient { weights: gw, bias: gb }))
}

fn class_set(data: &[(VerifierInput, Label)]) -> Vec<Label> {
    data.iter().map(|(_, l)| *l).collect::<BTreeSet<_>>().into_iter().collect()
}

pub fn train(
    data: &[(VerifierInput, Label)],
    lexicon: Lexicon,
    features: FeatureConfig,
    hyperparams: Hyperparams,
) -> Result<TrainOutcome, VerifyError> {
    hyperparams.validate()?;
    check_features(&features)?;
    if data.is_empty() {
        return Err(VerifyError::EmptyDataset);
    }
    let classes = class_set(data);
    if classes.len() < 2 {
        return Err(VerifyError::SingleClass(classes[0]));
    }
    let model = LinearVerifierModel::zeros(classes, features, hyperparams, lexicon);
    descend(model, data)
}

/// Continues from `init` instead of zero weights. Labels must be classes of `init`.
pub fn train_warm(
    init: &LinearVerifierModel,
    data: &[(VerifierInput, Label)],
    hyperparams: Hyperparams,
) -> Result<TrainOutcome, VerifyError> {
    hyperparams.validate()?;
    if data.is_empty() {
        return Err(VerifyError::EmptyDataset);
    }
    let mut model = init.clone();
    model.hyperparams = hyperparams;
    descend(model, data)
}

/// Gradient steps on the cross-entropy with the L2 term applied as a
/// proximal shrink, `W ← (W − η∇CE)/(1 + ηλ)`, which is stable for any λ
/// and has the same fixed point as plain gradient descent.
fn descend(mut model: LinearVerifierModel, data: &[(VerifierInput, Label)]) -> Result<TrainOutcome, VerifyError> {
    let examples = data
        .iter()
        .map(|(input, label)| model.example(input, *label))
        .collect::<Result<Vec<_>, _>>()?;
    let hp = model.hyperparams;
    let k = model.classes.len();
    let dim = model.dim();
    let mut gw = vec![vec![0.0; dim]; k];
    let mut gb = vec![0.0; k];
    let shrink = 1.0 / (1.0 + hp.learning_rate * hp.l2);
    let mut loss_history = Vec::with_capacity(hp.epochs);
    for _ in 0..hp.epochs {
        gw.iter_mut().for_each(|g| g.fill(0.0));
        gb.fill(0.0);
        let ce = cross_entropy_pass(&model.weights, &model.bias, &examples, &mut gw, &mut gb);
        loss_history.push(ce + 0.5 * hp.l2 * squared_norm(&model.weights));
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi = (*wi - hp.learning_rate * gi) * shrink;
            }
        }
        for (b, g) in model.bias.iter_mut().zip(&gb) {
            *b -= hp.learning_rate * g;
        }
    }
    gw.iter_mut().for_each(|g| g.fill(0.0));
    gb.fill(0.0);
    let ce = cross_entropy_pass(&model.weights, &model.bias, &examples, &mut gw, &mut gb);
    let final_loss = ce + 0.5 * hp.l2 * squared_norm(&model.weights);
    if !final_loss.is_finite() {
        return Err(VerifyError::Hyperparams(format!(
            "training diverged (loss {final_loss}); lower the learning rate"
        )));
    }
    model.final_loss = final_loss;
    log::debug!("trained {} examples, final loss {final_loss}", examples.len());
    Ok(TrainOutcome {
        model,
        loss_history,
        final_loss,
    })
}
