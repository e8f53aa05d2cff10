use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::NeuralError;

pub fn log_sum_exp(logits: ArrayView1<f64>) -> f64 {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    if !max.is_finite() {
        return max;
    }
    // the max term contributes exactly 1; keep it out of the sum so tiny tails survive
    let mut seen_max = false;
    let mut tail = 0.0;
    for &x in logits.iter() {
        if x == max && !seen_max {
            seen_max = true;
        } else {
            tail += (x - max).exp();
        }
    }
    max + tail.ln_1p()
}

pub fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let lse = log_sum_exp(logits);
    logits.mapv(|x| (x - lse).exp())
}

/// `-log softmax(logits)[gold]`.
pub fn loss_ce(logits: ArrayView1<f64>, gold: usize) -> f64 {
    log_sum_exp(logits) - logits[gold]
}

/// Gradient of `loss_ce` with respect to the logits.
pub fn loss_ce_grad(logits: ArrayView1<f64>, gold: usize) -> Array1<f64> {
    let mut g = softmax(logits);
    g[gold] -= 1.0;
    g
}

/// `ce_weight * ce + contrastive_weight * supcon`.
pub fn loss_weighted(ce: f64, supcon: f64, weights: (f64, f64)) -> f64 {
    weights.0 * ce + weights.1 * supcon
}

/// Supervised contrastive loss and its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct SupConOutput {
    pub loss: f64,
    /// Gradient with respect to each (unnormalized) input row.
    pub grad: Array2<f64>,
    /// Anchors that had at least one positive.
    pub anchors: usize,
}

const NORM_FLOOR: f64 = 1e-12;

/// Supervised contrastive loss over the rows of `features`.
///
/// Rows are L2-normalized; for anchor `i` with positives `P(i)` (same label,
/// `j != i`) and candidates `A(i)` (every `j != i`):
///
/// `L_i = -1/|P(i)| * sum_{p in P(i)} log( exp(z_i.z_p / tau) / sum_{a in A(i)} exp(z_i.z_a / tau) )`
///
/// and the loss is the mean of `L_i` over anchors with a positive. Anchors
/// without positives are skipped; a batch where every anchor is skipped is
/// degenerate.
pub fn supcon(features: &Array2<f64>, labels: &[usize], temperature: f64) -> Result<SupConOutput, NeuralError> {
    let b = features.nrows();
    if labels.len() != b {
        return Err(NeuralError::Shape { what: "contrastive labels", expected: b, found: labels.len() });
    }
    let dim = features.ncols();
    let norms: Vec<f64> = features.outer_iter().map(|r| r.dot(&r).sqrt()).collect();
    let mut z = features.clone();
    for (mut row, &n) in z.outer_iter_mut().zip(&norms) {
        if n > NORM_FLOOR {
            row /= n;
        } else {
            row.fill(0.0);
        }
    }
    let sim = z.dot(&z.t()) / temperature;

    let mut anchors = 0;
    let mut total = 0.0;
    // gradient with respect to the normalized rows, before averaging over anchors
    let mut gz = Array2::<f64>::zeros((b, dim));
    for i in 0..b {
        let positives: Vec<usize> = (0..b).filter(|&j| j != i && labels[j] == labels[i]).collect();
        if positives.is_empty() {
            continue;
        }
        anchors += 1;
        let others: Vec<usize> = (0..b).filter(|&j| j != i).collect();
        let row: Array1<f64> = others.iter().map(|&j| sim[[i, j]]).collect();
        let lse = log_sum_exp(row.view());
        let np = positives.len() as f64;
        total += positives.iter().map(|&p| lse - sim[[i, p]]).sum::<f64>() / np;

        // dL_i/dsim_ij = q_ij - [j in P(i)] / |P(i)|
        for (k, &j) in others.iter().enumerate() {
            let mut coef = (row[k] - lse).exp();
            if labels[j] == labels[i] {
                coef -= 1.0 / np;
            }
            let coef = coef / temperature;
            // sim_ij = z_i . z_j / tau touches both rows
            let zj = z.row(j).to_owned();
            let zi = z.row(i).to_owned();
            gz.row_mut(i).scaled_add(coef, &zj);
            gz.row_mut(j).scaled_add(coef, &zi);
        }
    }
    if anchors == 0 {
        return Err(NeuralError::DegenerateContrastiveBatch);
    }
    let scale = 1.0 / anchors as f64;
    gz *= scale;

    // back through the normalization: dL/df = (g - z (z.g)) / |f|
    let mut grad = Array2::<f64>::zeros((b, dim));
    for (i, &norm) in norms.iter().enumerate() {
        if norm <= NORM_FLOOR {
            continue;
        }
        let zi = z.row(i);
        let g = gz.row(i);
        let proj = zi.dot(&g);
        let mut out = grad.row_mut(i);
        out.assign(&g);
        out.scaled_add(-proj, &zi);
        out /= norm;
    }
    Ok(SupConOutput { loss: total * scale, grad, anchors })
}

pub fn loss_supcon(features: &Array2<f64>, labels: &[usize], temperature: f64) -> Result<f64, NeuralError> {
    supcon(features, labels, temperature).map(|o| o.loss)
}

/// Linear mix of cross-entropy and supervised contrastive loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub ce_weight: f64,
    pub contrastive_weight: f64,
    pub temperature: f64,
}

impl Objective {
    pub const DEFAULT_TEMPERATURE: f64 = 0.1;

    pub fn cross_entropy() -> Objective {
        Objective { ce_weight: 1.0, contrastive_weight: 0.0, temperature: Self::DEFAULT_TEMPERATURE }
    }

    pub fn contrastive(temperature: f64) -> Objective {
        Objective { ce_weight: 0.0, contrastive_weight: 1.0, temperature }
    }

    pub fn weighted(ce_weight: f64, contrastive_weight: f64, temperature: f64) -> Objective {
        Objective { ce_weight, contrastive_weight, temperature }
    }

    pub fn uses_contrastive(&self) -> bool {
        self.contrastive_weight != 0.0
    }
}
