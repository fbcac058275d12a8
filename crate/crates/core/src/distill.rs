//! Knowledge-distillation loss between the simplified attention logits and
//! the vanilla (teacher) logits, its analytic gradient, and a small gradient
//! descent fitter.
//!
//! The default loss is the literal negated inner product of the two
//! temperature-softened softmax vectors. A conventional soft cross-entropy
//! (with a log on the student distribution) is available for comparison.

use crate::attention::SimplifiedAttnParams;
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// One teacher observation: the slot time differences, the teacher's
/// attention logits for the same slots, and the padding mask.
#[derive(Debug, Clone)]
pub struct DistillSample {
    pub dt_vec: Vec<f64>,
    pub teacher_logits: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Which functional form the loss takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KdLossKind {
    /// `-Σ softmax(student/T) · softmax(teacher/T)`, as printed.
    #[default]
    DotProduct,
    /// `-Σ softmax(teacher/T) · log softmax(student/T)`.
    LogSoftCe,
}

/// Result of a gradient-descent fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: SimplifiedAttnParams,
    /// Loss before each step plus the final loss; length `steps + 1`.
    pub loss_trace: Vec<f64>,
}

fn softmax_over(indices: &[usize], logits: &[f64]) -> Vec<f64> {
    let max = indices.iter().map(|&i| logits[i]).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = indices.iter().map(|&i| (logits[i] - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn unmasked_indices(mask: &[bool]) -> Vec<usize> {
    (0..mask.len()).filter(|&i| !mask[i]).collect()
}

fn student_logits(sample: &DistillSample, params: &SimplifiedAttnParams) -> Vec<f64> {
    let n = params.slots();
    let mut out = params.a.clone();
    for i in 0..n {
        for j in 0..n {
            out[i] += params.w_t.get(i, j) * sample.dt_vec[j];
        }
    }
    out
}

fn check_inputs(samples: &[DistillSample], params: &SimplifiedAttnParams, temperature: f64) -> Result<()> {
    if temperature <= 0.0 {
        return Err(Error::Config("temperature must be positive".into()));
    }
    if samples.is_empty() {
        return Err(Error::Config("distillation requires at least one sample".into()));
    }
    let n = params.slots();
    for s in samples {
        if s.dt_vec.len() != n || s.teacher_logits.len() != n || s.mask.len() != n {
            return Err(Error::DimMismatch {
                what: "distillation sample slots",
                expected: n,
                actual: s.dt_vec.len(),
            });
        }
        if s.mask.iter().all(|&m| m) {
            return Err(Error::EmptyAttentionSet);
        }
    }
    Ok(())
}

fn per_sample_loss(
    sample: &DistillSample,
    params: &SimplifiedAttnParams,
    temperature: f64,
    kind: KdLossKind,
) -> f64 {
    let idx = unmasked_indices(&sample.mask);
    let student = student_logits(sample, params);
    let scaled_s: Vec<f64> = student.iter().map(|l| l / temperature).collect();
    let scaled_t: Vec<f64> = sample.teacher_logits.iter().map(|l| l / temperature).collect();
    let p = softmax_over(&idx, &scaled_s);
    let q = softmax_over(&idx, &scaled_t);
    match kind {
        KdLossKind::DotProduct => -p.iter().zip(q.iter()).map(|(a, b)| a * b).sum::<f64>(),
        KdLossKind::LogSoftCe => -q.iter().zip(p.iter()).map(|(qi, pi)| qi * pi.ln()).sum::<f64>(),
    }
}

/// Total loss over the sample set. Per-sample terms are independent; they
/// are always reduced in sample order so the result does not depend on any
/// caller-side parallelism.
pub fn kd_loss(
    samples: &[DistillSample],
    params: &SimplifiedAttnParams,
    temperature: f64,
    kind: KdLossKind,
) -> Result<f64> {
    check_inputs(samples, params, temperature)?;
    Ok(samples
        .iter()
        .map(|s| per_sample_loss(s, params, temperature, kind))
        .sum())
}

/// Analytic gradients of [`kd_loss`] with respect to `a` and `W_t`; the
/// teacher softmax is a constant.
pub fn kd_loss_grad(
    samples: &[DistillSample],
    params: &SimplifiedAttnParams,
    temperature: f64,
    kind: KdLossKind,
) -> Result<(Vec<f64>, Mat<f64>)> {
    check_inputs(samples, params, temperature)?;
    let n = params.slots();
    let mut grad_a = vec![0.0; n];
    let mut grad_wt = Mat::zeros(n, n);
    for sample in samples {
        let idx = unmasked_indices(&sample.mask);
        let student = student_logits(sample, params);
        let scaled_s: Vec<f64> = student.iter().map(|l| l / temperature).collect();
        let scaled_t: Vec<f64> = sample.teacher_logits.iter().map(|l| l / temperature).collect();
        let p = softmax_over(&idx, &scaled_s);
        let q = softmax_over(&idx, &scaled_t);
        // d(-p·q)/dz_i = -p_i (q_i - p·q) / T for the dot form;
        // d(-q·ln p)/dz_i = (p_i - q_i) / T for the log form.
        let pq: f64 = p.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
        for (pos, &i) in idx.iter().enumerate() {
            let g = match kind {
                KdLossKind::DotProduct => -p[pos] * (q[pos] - pq) / temperature,
                KdLossKind::LogSoftCe => (p[pos] - q[pos]) / temperature,
            };
            grad_a[i] += g;
            for j in 0..n {
                grad_wt.set(i, j, grad_wt.get(i, j) + g * sample.dt_vec[j]);
            }
        }
    }
    Ok((grad_a, grad_wt))
}

/// Plain gradient descent on `a` and `W_t`. All other model parameters stay
/// fixed. Divergence (non-finite loss) aborts with an error naming the step.
pub fn fit_attention_params(
    samples: &[DistillSample],
    init: &SimplifiedAttnParams,
    learning_rate: f64,
    steps: usize,
    temperature: f64,
    kind: KdLossKind,
) -> Result<FitResult> {
    if learning_rate < 0.0 {
        return Err(Error::Config("learning rate must be non-negative".into()));
    }
    let n = init.slots();
    let mut params = init.clone();
    let mut trace = Vec::with_capacity(steps + 1);
    let mut loss = kd_loss(samples, &params, temperature, kind)?;
    if !loss.is_finite() {
        return Err(Error::FitDiverged { step: 0 });
    }
    trace.push(loss);
    for step in 0..steps {
        let (ga, gw) = kd_loss_grad(samples, &params, temperature, kind)?;
        for i in 0..n {
            params.a[i] -= learning_rate * ga[i];
            for j in 0..n {
                params.w_t.set(i, j, params.w_t.get(i, j) - learning_rate * gw.get(i, j));
            }
        }
        loss = kd_loss(samples, &params, temperature, kind)?;
        if !loss.is_finite() {
            return Err(Error::FitDiverged { step: step + 1 });
        }
        trace.push(loss);
    }
    Ok(FitResult {
        params,
        loss_trace: trace,
    })
}
