use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::loss::{loss_ce, loss_ce_grad, supcon, Objective};
use super::model::{FusionModel, Parameters, Trace};
use super::NeuralError;

/// Loss components of one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchLoss {
    pub total: f64,
    /// Mean cross-entropy over the batch (always computed, even at weight 0).
    pub ce: f64,
    /// `None` when the contrastive term is off or the batch had no positive pairs.
    pub supcon: Option<f64>,
}

/// Value of `objective` on a batch of recorded forward passes.
pub fn batch_loss(traces: &[Trace], labels: &[usize], objective: &Objective) -> Result<BatchLoss, NeuralError> {
    Ok(loss_and_dual_grads(traces, labels, objective)?.0)
}

fn stack_duals(traces: &[Trace]) -> Array2<f64> {
    let views: Vec<ArrayView1<f64>> = traces.iter().map(|t| t.f_dual.view()).collect();
    ndarray::stack(Axis(0), &views).expect("equal f_dual widths")
}

fn loss_and_dual_grads(
    traces: &[Trace],
    labels: &[usize],
    objective: &Objective,
) -> Result<(BatchLoss, Option<Array2<f64>>), NeuralError> {
    if traces.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    if traces.len() != labels.len() {
        return Err(NeuralError::Shape { what: "batch labels", expected: traces.len(), found: labels.len() });
    }
    let b = traces.len() as f64;
    let ce = traces
        .iter()
        .zip(labels)
        .map(|(t, &y)| loss_ce(t.logits.view(), y))
        .sum::<f64>()
        / b;
    let mut total = objective.ce_weight * ce;
    let mut supcon_value = None;
    let mut dual_grads = None;
    if objective.uses_contrastive() {
        match supcon(&stack_duals(traces), labels, objective.temperature) {
            Ok(out) => {
                total += objective.contrastive_weight * out.loss;
                supcon_value = Some(out.loss);
                dual_grads = Some(out.grad * objective.contrastive_weight);
            }
            // no positive pairs in this batch: the contrastive term contributes nothing
            Err(NeuralError::DegenerateContrastiveBatch) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((BatchLoss { total, ce, supcon: supcon_value }, dual_grads))
}

fn outer_add(acc: &mut Array2<f64>, left: &Array1<f64>, right: ArrayView1<f64>) {
    let l = left.view().insert_axis(Axis(1));
    let r = right.insert_axis(Axis(0));
    ndarray::Zip::from(acc)
        .and_broadcast(&l)
        .and_broadcast(&r)
        .for_each(|a, &x, &y| *a += x * y);
}

/// Analytic gradients of `objective` for a batch, given the forward traces
/// (and therefore the dropout masks) of each input row.
pub fn backward(
    model: &FusionModel,
    inputs: ArrayView2<f64>,
    labels: &[usize],
    objective: &Objective,
    traces: &[Trace],
) -> Result<(BatchLoss, Parameters), NeuralError> {
    if inputs.nrows() != traces.len() {
        return Err(NeuralError::Shape { what: "batch inputs", expected: traces.len(), found: inputs.nrows() });
    }
    let (loss, dual_grads) = loss_and_dual_grads(traces, labels, objective)?;
    let p = &model.params;
    let mut g = p.zeros_like();
    let b = traces.len() as f64;

    for (i, (trace, &y)) in traces.iter().zip(labels).enumerate() {
        let x = inputs.row(i);

        // classifier head
        let g_logits = loss_ce_grad(trace.logits.view(), y) * (objective.ce_weight / b);
        outer_add(&mut g.head.out_weight, &g_logits, trace.hidden.view());
        g.head.out_bias += &g_logits;
        let mut g_hidden = p.head.out_weight.t().dot(&g_logits);
        for (k, gh) in g_hidden.iter_mut().enumerate() {
            let scale = trace.mask.as_ref().map_or(1.0, |m| m[k]);
            if trace.hidden_pre[k] <= 0.0 {
                *gh = 0.0;
            } else {
                *gh *= scale;
            }
        }
        outer_add(&mut g.head.hidden_weight, &g_hidden, trace.f_dual.view());
        g.head.hidden_bias += &g_hidden;
        let mut g_dual = p.head.hidden_weight.t().dot(&g_hidden);
        if let Some(dg) = &dual_grads {
            g_dual += &dg.row(i);
        }

        // f_dual = a * s + (1 - a) * o
        let a = &trace.alpha;
        let g_alpha = &g_dual * &(&trace.f_subj - &trace.f_obj);
        let mut g_subj = &g_dual * a;
        let mut g_obj = &g_dual * &a.mapv(|v| 1.0 - v);

        // a = sigmoid(W [s, o] + b)
        let g_gate_pre = g_alpha * &a.mapv(|v| v * (1.0 - v));
        let joined = ndarray::concatenate(Axis(0), &[trace.f_subj.view(), trace.f_obj.view()])
            .expect("1-d concat");
        outer_add(&mut g.gate.weight, &g_gate_pre, joined.view());
        g.gate.bias += &g_gate_pre;
        let g_joined = p.gate.weight.t().dot(&g_gate_pre);
        let d = trace.f_subj.len();
        g_subj += &g_joined.slice(ndarray::s![..d]);
        g_obj += &g_joined.slice(ndarray::s![d..]);

        // views: f = tanh(W x + b)
        let g_subj_pre = g_subj * &trace.f_subj.mapv(|s| 1.0 - s * s);
        outer_add(&mut g.subj.weight, &g_subj_pre, x);
        g.subj.bias += &g_subj_pre;
        let g_obj_pre = g_obj * &trace.f_obj.mapv(|o| 1.0 - o * o);
        outer_add(&mut g.obj.weight, &g_obj_pre, x);
        g.obj.bias += &g_obj_pre;
    }
    Ok((loss, g))
}
