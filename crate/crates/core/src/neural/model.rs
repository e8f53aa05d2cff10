use ndarray::{concatenate, Array1, Array2, ArrayView1, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::corpus::Task;
use crate::hashing::derive_seed;

/// Shapes and regularization of a dual-view fusion classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    /// Width `d` of each view vector.
    pub view_dim: usize,
    pub hidden_dim: usize,
    pub task: Task,
    pub dropout: f64,
}

impl ModelConfig {
    /// Small widths that train in seconds on a CPU.
    pub fn desk(input_dim: usize, task: Task) -> ModelConfig {
        ModelConfig { input_dim, view_dim: 64, hidden_dim: 32, task, dropout: 0.15 }
    }

    /// Widths of the transformer-scale original (1024-d views, 1024 hidden units).
    pub fn paper(input_dim: usize, task: Task) -> ModelConfig {
        ModelConfig { input_dim, view_dim: 1024, hidden_dim: 1024, task, dropout: 0.15 }
    }

    pub fn n_classes(&self) -> usize {
        self.task.n_classes()
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.input_dim == 0 || self.view_dim == 0 || self.hidden_dim == 0 {
            return Err(NeuralError::InvalidConfig("all widths must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NeuralError::InvalidConfig(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// One view tower: `tanh(W x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewEncoder {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Gate producing the per-dimension mixing weights from both views.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionGate {
    /// `d x 2d`, applied to `[f_subj, f_obj]`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Linear, ReLU, dropout, linear.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierHead {
    pub hidden_weight: Array2<f64>,
    pub hidden_bias: Array1<f64>,
    pub out_weight: Array2<f64>,
    pub out_bias: Array1<f64>,
}

/// Every trainable tensor. Gradients and optimizer moments use the same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    pub subj: ViewEncoder,
    pub obj: ViewEncoder,
    pub gate: FusionGate,
    pub head: ClassifierHead,
}

pub const TENSOR_NAMES: [&str; 10] = [
    "subj.weight",
    "subj.bias",
    "obj.weight",
    "obj.bias",
    "gate.weight",
    "gate.bias",
    "head.hidden_weight",
    "head.hidden_bias",
    "head.out_weight",
    "head.out_bias",
];

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

impl Parameters {
    pub fn zeros(cfg: &ModelConfig) -> Parameters {
        let (n, d, h, c) = (cfg.input_dim, cfg.view_dim, cfg.hidden_dim, cfg.n_classes());
        let view = || ViewEncoder { weight: Array2::zeros((d, n)), bias: Array1::zeros(d) };
        Parameters {
            subj: view(),
            obj: view(),
            gate: FusionGate { weight: Array2::zeros((d, 2 * d)), bias: Array1::zeros(d) },
            head: ClassifierHead {
                hidden_weight: Array2::zeros((h, d)),
                hidden_bias: Array1::zeros(h),
                out_weight: Array2::zeros((c, h)),
                out_bias: Array1::zeros(c),
            },
        }
    }

    /// Glorot-uniform weights and zero biases; each tensor draws from its own stream.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Parameters {
        let (n, d, h, c) = (cfg.input_dim, cfg.view_dim, cfg.hidden_dim, cfg.n_classes());
        let rng = |stream: u64| ChaCha8Rng::seed_from_u64(derive_seed(seed, stream));
        let mut p = Parameters::zeros(cfg);
        p.subj.weight = glorot(&mut rng(0), d, n);
        p.obj.weight = glorot(&mut rng(1), d, n);
        p.gate.weight = glorot(&mut rng(2), d, 2 * d);
        p.head.hidden_weight = glorot(&mut rng(3), h, d);
        p.head.out_weight = glorot(&mut rng(4), c, h);
        p
    }

    pub fn zeros_like(&self) -> Parameters {
        let mut p = self.clone();
        p.tensors_mut().into_iter().for_each(|(_, t)| t.fill(0.0));
        p
    }

    /// Flat views of every tensor in `TENSOR_NAMES` order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let slices: [&[f64]; 10] = [
            self.subj.weight.as_slice().expect("standard layout"),
            self.subj.bias.as_slice().expect("standard layout"),
            self.obj.weight.as_slice().expect("standard layout"),
            self.obj.bias.as_slice().expect("standard layout"),
            self.gate.weight.as_slice().expect("standard layout"),
            self.gate.bias.as_slice().expect("standard layout"),
            self.head.hidden_weight.as_slice().expect("standard layout"),
            self.head.hidden_bias.as_slice().expect("standard layout"),
            self.head.out_weight.as_slice().expect("standard layout"),
            self.head.out_bias.as_slice().expect("standard layout"),
        ];
        TENSOR_NAMES.into_iter().zip(slices).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let slices: [&mut [f64]; 10] = [
            self.subj.weight.as_slice_mut().expect("standard layout"),
            self.subj.bias.as_slice_mut().expect("standard layout"),
            self.obj.weight.as_slice_mut().expect("standard layout"),
            self.obj.bias.as_slice_mut().expect("standard layout"),
            self.gate.weight.as_slice_mut().expect("standard layout"),
            self.gate.bias.as_slice_mut().expect("standard layout"),
            self.head.hidden_weight.as_slice_mut().expect("standard layout"),
            self.head.hidden_bias.as_slice_mut().expect("standard layout"),
            self.head.out_weight.as_slice_mut().expect("standard layout"),
            self.head.out_bias.as_slice_mut().expect("standard layout"),
        ];
        TENSOR_NAMES.into_iter().zip(slices).collect()
    }

    pub fn shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let shapes = [
            self.subj.weight.shape().to_vec(),
            self.subj.bias.shape().to_vec(),
            self.obj.weight.shape().to_vec(),
            self.obj.bias.shape().to_vec(),
            self.gate.weight.shape().to_vec(),
            self.gate.bias.shape().to_vec(),
            self.head.hidden_weight.shape().to_vec(),
            self.head.hidden_bias.shape().to_vec(),
            self.head.out_weight.shape().to_vec(),
            self.head.out_bias.shape().to_vec(),
        ];
        TENSOR_NAMES.into_iter().zip(shapes).collect()
    }

    pub fn scale(&mut self, k: f64) {
        for (_, t) in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), NeuralError> {
    if expected == found {
        Ok(())
    } else {
        Err(NeuralError::Shape { what, expected, found })
    }
}

// Saturated sigmoids round to exactly 0 or 1 in f64; keep the gate open.
const ALPHA_MIN: f64 = f64::MIN_POSITIVE;
const ALPHA_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// `alpha = sigmoid(W [f_subj, f_obj] + b)`, strictly inside (0, 1).
pub fn fusion_gate(
    f_subj: ArrayView1<f64>,
    f_obj: ArrayView1<f64>,
    gate: &FusionGate,
) -> Result<Array1<f64>, NeuralError> {
    let d = gate.bias.len();
    check_len("f_subj", d, f_subj.len())?;
    check_len("f_obj", d, f_obj.len())?;
    check_len("gate weight columns", 2 * d, gate.weight.ncols())?;
    check_len("gate weight rows", d, gate.weight.nrows())?;
    let joined = concatenate(Axis(0), &[f_subj, f_obj]).expect("1-d concat");
    Ok((gate.weight.dot(&joined) + &gate.bias).mapv(|z| sigmoid(z).clamp(ALPHA_MIN, ALPHA_MAX)))
}

/// `f_dual = alpha * f_subj + (1 - alpha) * f_obj`, elementwise.
///
/// Clamped to the interval spanned by the two views, so rounding can never
/// push a component outside it and equal views come back unchanged.
pub fn fusion_combine(
    f_subj: ArrayView1<f64>,
    f_obj: ArrayView1<f64>,
    alpha: ArrayView1<f64>,
) -> Result<Array1<f64>, NeuralError> {
    check_len("f_obj", f_subj.len(), f_obj.len())?;
    check_len("alpha", f_subj.len(), alpha.len())?;
    Ok(ndarray::Zip::from(&f_subj)
        .and(&f_obj)
        .and(&alpha)
        .map_collect(|&s, &o, &a| {
            let v = a * s + (1.0 - a) * o;
            // comparisons are false for NaN, which passes through untouched
            let (lo, hi) = if s <= o { (s, o) } else { (o, s) };
            if v < lo {
                lo
            } else if v > hi {
                hi
            } else {
                v
            }
        }))
}

/// How the dropout layer behaves in a forward pass.
pub enum Dropout<'a> {
    /// Evaluation: identity.
    Off,
    /// Training: draw a fresh inverted-dropout mask.
    Sample(&'a mut ChaCha8Rng),
    /// Replay a recorded mask of per-unit scale factors.
    Replay(&'a [f64]),
}

/// Intermediate values of one forward pass, enough to backpropagate exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub f_subj: Array1<f64>,
    pub f_obj: Array1<f64>,
    pub alpha: Array1<f64>,
    pub f_dual: Array1<f64>,
    /// Pre-activation of the hidden layer.
    pub hidden_pre: Array1<f64>,
    /// Hidden activations after ReLU and dropout.
    pub hidden: Array1<f64>,
    /// Per-unit dropout scale (0 or 1/(1-p)); `None` when dropout was off.
    pub mask: Option<Vec<f64>>,
    pub logits: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionModel {
    pub config: ModelConfig,
    pub params: Parameters,
}

impl FusionModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<FusionModel, NeuralError> {
        config.validate()?;
        let params = Parameters::init(&config, seed);
        Ok(FusionModel { config, params })
    }

    pub fn zeros(config: ModelConfig) -> Result<FusionModel, NeuralError> {
        config.validate()?;
        let params = Parameters::zeros(&config);
        Ok(FusionModel { config, params })
    }

    pub fn forward(&self, input: ArrayView1<f64>, dropout: Dropout<'_>) -> Result<Trace, NeuralError> {
        check_len("input", self.config.input_dim, input.len())?;
        let p = &self.params;
        let f_subj = (p.subj.weight.dot(&input) + &p.subj.bias).mapv(f64::tanh);
        let f_obj = (p.obj.weight.dot(&input) + &p.obj.bias).mapv(f64::tanh);
        let alpha = fusion_gate(f_subj.view(), f_obj.view(), &p.gate)?;
        let f_dual = fusion_combine(f_subj.view(), f_obj.view(), alpha.view())?;
        let hidden_pre = p.head.hidden_weight.dot(&f_dual) + &p.head.hidden_bias;
        let mut hidden = hidden_pre.mapv(|z| if z < 0.0 { 0.0 } else { z });
        let mask = match dropout {
            Dropout::Off => None,
            Dropout::Sample(rng) => {
                let keep = 1.0 - self.config.dropout;
                let m: Vec<f64> = (0..hidden.len())
                    .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                Some(m)
            }
            Dropout::Replay(m) => {
                check_len("dropout mask", hidden.len(), m.len())?;
                Some(m.to_vec())
            }
        };
        if let Some(m) = &mask {
            hidden.iter_mut().zip(m).for_each(|(h, s)| *h *= s);
        }
        let logits = p.head.out_weight.dot(&hidden) + &p.head.out_bias;
        Ok(Trace { f_subj, f_obj, alpha, f_dual, hidden_pre, hidden, mask, logits })
    }

    /// Eval-mode class probabilities.
    pub fn predict_proba(&self, input: ArrayView1<f64>) -> Result<Array1<f64>, NeuralError> {
        let trace = self.forward(input, Dropout::Off)?;
        Ok(super::loss::softmax(trace.logits.view()))
    }

    /// Eval-mode argmax; ties go to the lowest class index.
    pub fn predict(&self, input: ArrayView1<f64>) -> Result<usize, NeuralError> {
        let trace = self.forward(input, Dropout::Off)?;
        Ok(argmax(trace.logits.view()))
    }
}

pub(crate) fn argmax(v: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
