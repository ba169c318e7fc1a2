//! One-hidden-layer perceptron over a flat parameter vector.
//!
//! Layout of [`ModelVector::values`], in order:
//! `W1` (`hidden x inputs`, row-major), `b1` (`hidden`),
//! `W2` (`classes x hidden`, row-major), `b2` (`classes`).

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataio::Dataset;
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arch {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Arch {
    pub fn new(inputs: usize, hidden: usize, classes: usize) -> Result<Self> {
        if inputs == 0 || hidden == 0 || classes < 2 {
            return Err(Error::Config(format!(
                "invalid architecture {inputs}->{hidden}->{classes}"
            )));
        }
        Ok(Self {
            inputs,
            hidden,
            classes,
        })
    }

    pub fn n_params(&self) -> usize {
        self.hidden * self.inputs + self.hidden + self.classes * self.hidden + self.classes
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        (b1, w2, b2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelVector {
    pub values: Vec<f64>,
    pub arch: Arch,
}

impl ModelVector {
    pub fn zeros(arch: Arch) -> Self {
        Self {
            values: vec![0.0; arch.n_params()],
            arch,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Class scores (logits) for one input.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut hidden = vec![0.0; self.arch.hidden];
        self.forward(x, &mut hidden)
    }

    fn forward(&self, x: &[f64], hidden: &mut [f64]) -> Vec<f64> {
        let a = self.arch;
        let (b1, w2, b2) = a.offsets();
        let v = &self.values;
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &v[j * a.inputs..(j + 1) * a.inputs];
            let z = v[b1 + j] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            *h = z.max(0.0);
        }
        (0..a.classes)
            .map(|c| {
                let row = &v[w2 + c * a.hidden..w2 + (c + 1) * a.hidden];
                v[b2 + c] + row.iter().zip(hidden.iter()).map(|(w, h)| w * h).sum::<f64>()
            })
            .collect()
    }

    /// Index of the largest class score, ties going to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let scores = self.logits(x);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        best
    }

    /// Mean softmax cross-entropy over `batch` and its gradient.
    pub fn loss_and_grad(&self, data: &Dataset, batch: &[usize]) -> (f64, Vec<f64>) {
        let a = self.arch;
        let (b1, w2, b2) = a.offsets();
        let v = &self.values;
        let mut grad = vec![0.0; v.len()];
        let mut hidden = vec![0.0; a.hidden];
        let mut back = vec![0.0; a.hidden];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len().max(1) as f64;

        for &i in batch {
            let x = data.sample(i);
            let label = data.labels[i];
            let logits = self.forward(x, &mut hidden);
            let peak = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exp: Vec<f64> = logits.iter().map(|z| (z - peak).exp()).collect();
            let sum: f64 = exp.iter().sum();
            loss += (sum.ln() + peak - logits[label]) * scale;

            back.fill(0.0);
            for c in 0..a.classes {
                let d = (exp[c] / sum - if c == label { 1.0 } else { 0.0 }) * scale;
                grad[b2 + c] += d;
                let row = w2 + c * a.hidden;
                for j in 0..a.hidden {
                    grad[row + j] += d * hidden[j];
                    back[j] += d * v[row + j];
                }
            }
            for j in 0..a.hidden {
                if hidden[j] <= 0.0 {
                    continue;
                }
                let d = back[j];
                grad[b1 + j] += d;
                let row = &mut grad[j * a.inputs..(j + 1) * a.inputs];
                for (g, xk) in row.iter_mut().zip(x) {
                    *g += d * xk;
                }
            }
        }
        (loss, grad)
    }
}

/// Weights uniform in `+-1/sqrt(fan_in)`, biases zero.
pub fn init_model(arch: Arch, seed: u64) -> Result<ModelVector> {
    let arch = Arch::new(arch.inputs, arch.hidden, arch.classes)?;
    let mut rng = stream(seed, Purpose::Init, 0, 0);
    let mut model = ModelVector::zeros(arch);
    let (b1, w2, b2) = arch.offsets();
    let r1 = 1.0 / (arch.inputs as f64).sqrt();
    let r2 = 1.0 / (arch.hidden as f64).sqrt();
    for w in &mut model.values[..b1] {
        *w = rng.random_range(-r1..r1);
    }
    for w in &mut model.values[w2..b2] {
        *w = rng.random_range(-r2..r2);
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSchedule {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

/// Mini-batch SGD over `shard`, reshuffled every epoch with `rng`.
///
/// `device` and `round` only label a divergence error.
pub fn local_train<R: Rng + ?Sized>(
    model: &ModelVector,
    data: &Dataset,
    shard: &[usize],
    schedule: &LocalSchedule,
    rng: &mut R,
    device: usize,
    round: usize,
) -> Result<ModelVector> {
    if shard.is_empty() {
        return Err(Error::InputDomain(format!("device {device} has an empty shard")));
    }
    if schedule.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut out = model.clone();
    let mut order = shard.to_vec();
    for _ in 0..schedule.epochs {
        order.shuffle(rng);
        for batch in order.chunks(schedule.batch_size) {
            let (loss, grad) = out.loss_and_grad(data, batch);
            if !loss.is_finite() {
                return Err(Error::Divergence { device, round });
            }
            for (w, g) in out.values.iter_mut().zip(&grad) {
                *w -= schedule.learning_rate * g;
            }
        }
    }
    if !out.is_finite() {
        return Err(Error::Divergence { device, round });
    }
    Ok(out)
}

/// Fraction of test samples whose argmax prediction is correct.
pub fn evaluate(model: &ModelVector, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InputDomain("empty test set".into()));
    }
    let hits = (0..test.len())
        .filter(|&i| model.predict(test.sample(i)) == test.labels[i])
        .count();
    Ok(hits as f64 / test.len() as f64)
}
