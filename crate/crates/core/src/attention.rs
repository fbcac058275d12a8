//! Embedding Unit datapath: vanilla temporal attention (the teacher),
//! simplified time-difference attention, top-k neighbor pruning, masked
//! softmax, and the aggregation + output transform.
//!
//! Simplified logits depend on neighbor timestamps and parameters only,
//! never on fetched features — that is what lets the hardware rank and
//! prune neighbors before their memory is loaded.

use crate::error::{Error, Result};
use crate::linalg::{add_assign, axpy, dot, Mat, MacCount, Scalar};
use crate::memory_update::TimePath;
use crate::time_encoding::{consumers, encode_time, lut_lookup};

/// Fetched state of a temporal neighbor: memory, static features, and the
/// connecting edge's features.
#[derive(Debug, Clone)]
pub struct SlotPayload<F = f64> {
    pub memory: Vec<F>,
    pub feat: Vec<F>,
    pub edge_feat: Vec<F>,
}

/// One attention slot. The timestamp is always available (it comes with the
/// neighbor record); the payload is fetched lazily, so under pruning only
/// kept slots carry one. Padding slots have `valid == false`.
#[derive(Debug, Clone)]
pub struct NeighborSlot<F = f64> {
    pub timestamp: F,
    pub valid: bool,
    pub payload: Option<SlotPayload<F>>,
}

impl<F: Scalar> NeighborSlot<F> {
    pub fn padding() -> Self {
        NeighborSlot {
            timestamp: F::zero(),
            valid: false,
            payload: None,
        }
    }

    pub fn fetched(timestamp: F, payload: SlotPayload<F>) -> Self {
        NeighborSlot {
            timestamp,
            valid: true,
            payload: Some(payload),
        }
    }

    /// Timestamp-only slot awaiting a payload fetch.
    pub fn pending(timestamp: F) -> Self {
        NeighborSlot {
            timestamp,
            valid: true,
            payload: None,
        }
    }
}

/// Weights of the vanilla temporal attention aggregator.
///
/// `w_s`/`b_s` merge static features into the memory (shared with the
/// simplified model), `w_q`/`w_k` score neighbors, and `w_v`/`b_v` produce
/// values (also shared with the simplified model).
#[derive(Debug, Clone, PartialEq)]
pub struct VanillaAttnParams<F = f64> {
    pub w_s: Mat<F>,
    pub b_s: Vec<F>,
    pub w_q: Mat<F>,
    pub b_q: Vec<F>,
    pub w_k: Mat<F>,
    pub b_k: Vec<F>,
    pub w_v: Mat<F>,
    pub b_v: Vec<F>,
}

impl<F: Scalar> VanillaAttnParams<F> {
    pub fn map<G: Scalar>(&self, f: impl Fn(F) -> G + Copy) -> VanillaAttnParams<G> {
        VanillaAttnParams {
            w_s: self.w_s.map(f),
            b_s: self.b_s.iter().map(|&v| f(v)).collect(),
            w_q: self.w_q.map(f),
            b_q: self.b_q.iter().map(|&v| f(v)).collect(),
            w_k: self.w_k.map(f),
            b_k: self.b_k.iter().map(|&v| f(v)).collect(),
            w_v: self.w_v.map(f),
            b_v: self.b_v.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Shared constant logits and the time-difference map of the simplified
/// attention: `α' = softmax(a + W_t Δt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedAttnParams<F = f64> {
    pub a: Vec<F>,
    pub w_t: Mat<F>,
}

impl<F: Scalar> SimplifiedAttnParams<F> {
    pub fn slots(&self) -> usize {
        self.a.len()
    }

    pub fn map<G: Scalar>(&self, f: impl Fn(F) -> G + Copy) -> SimplifiedAttnParams<G> {
        SimplifiedAttnParams {
            a: self.a.iter().map(|&v| f(v)).collect(),
            w_t: self.w_t.map(f),
        }
    }
}

/// Affine output transform applied to `[aggregate || f'_self]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTransform<F = f64> {
    pub w: Mat<F>,
    pub b: Vec<F>,
}

impl<F: Scalar> OutputTransform<F> {
    pub fn map<G: Scalar>(&self, f: impl Fn(F) -> G + Copy) -> OutputTransform<G> {
        OutputTransform {
            w: self.w.map(f),
            b: self.b.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VanillaOutput<F = f64> {
    pub embedding: Vec<F>,
    /// Scaled attention logits, one per slot, padding at -inf.
    pub logits: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct SimplifiedOutput<F = f64> {
    pub embedding: Vec<F>,
    /// `a + W_t Δt` with masked slots at -inf.
    pub neighbor_logits: Vec<F>,
    /// Kept neighbor slot indices, ascending.
    pub kept: Vec<usize>,
    /// Number of value vectors actually computed (kept neighbors + self).
    pub values_computed: usize,
}

/// `f' = s + W_s f + b_s`.
pub fn feature_merge<F: Scalar>(
    s: &[F],
    feat: &[F],
    w_s: &Mat<F>,
    b_s: &[F],
    macs: &mut MacCount,
) -> Vec<F> {
    let mut out = w_s.matvec(feat, macs);
    add_assign(&mut out, s);
    add_assign(&mut out, b_s);
    out
}

/// Value vector `W_v [head || Φ] + b_v` with the time contribution supplied
/// by either route. `head` is `f'_j || e_j`.
fn value_with_time<F: Scalar>(
    w_v: &Mat<F>,
    b_v: &[F],
    head: &[F],
    dt: F,
    time_path: &TimePath<F>,
    macs: &mut MacCount,
) -> Vec<F> {
    let head_len = head.len();
    let mut v = w_v.matvec_cols(0, head_len, head, macs);
    add_assign(&mut v, b_v);
    match time_path {
        TimePath::Cosine(enc) => {
            let phi = encode_time(dt, enc);
            let time_part = w_v.matvec_cols(head_len, w_v.cols(), &phi, macs);
            add_assign(&mut v, &time_part);
        }
        TimePath::Lut(lut) => {
            let k = lut_lookup(lut, dt);
            add_assign(&mut v, lut.fused_entry(consumers::ATTN_VALUE, k));
        }
    }
    v
}

/// Vanilla temporal attention over `n` neighbor slots.
///
/// Logits are `q·K_j / sqrt(n_valid)` over unmasked slots; the output is
/// `softmax(logits)·V`. With every slot masked the self node's value
/// (Δt = 0, zero edge features) is returned with weight 1.
pub fn vanilla_attention<F: Scalar>(
    self_mem: &[F],
    self_feat: &[F],
    now: F,
    slots: &[NeighborSlot<F>],
    params: &VanillaAttnParams<F>,
    encoder: &crate::time_encoding::CosineEncoderParams<F>,
    macs: &mut MacCount,
) -> Result<VanillaOutput<F>> {
    let d_emb = params.w_v.rows();
    let f_self = feature_merge(self_mem, self_feat, &params.w_s, &params.b_s, macs);

    // q = W_q [f'_self || Φ(0)] + b_q
    let mut q = params.w_q.matvec_cols(0, f_self.len(), &f_self, macs);
    add_assign(&mut q, &params.b_q);
    let phi0 = encode_time(F::zero(), encoder);
    let q_time = params
        .w_q
        .matvec_cols(f_self.len(), params.w_q.cols(), &phi0, macs);
    add_assign(&mut q, &q_time);

    let n_valid = slots.iter().filter(|s| s.valid).count();
    let mut logits = vec![F::neg_infinity(); slots.len()];
    let mut values: Vec<Option<Vec<F>>> = vec![None; slots.len()];

    if n_valid == 0 {
        // Self-inclusion fallback: α = 1 on the self node's value, with
        // Δt = 0 and zero edge features. Column counts give the edge width:
        // w_v consumes f'||e||Φ while w_q consumes f'||Φ.
        let d_edge = params.w_v.cols() - params.w_q.cols();
        let mut head = f_self.clone();
        head.extend(std::iter::repeat(F::zero()).take(d_edge));
        let v_self = value_with_time(
            &params.w_v,
            &params.b_v,
            &head,
            F::zero(),
            &TimePath::Cosine(encoder),
            macs,
        );
        return Ok(VanillaOutput {
            embedding: v_self,
            logits,
        });
    }

    let scale = F::one() / F::from_f64((n_valid as f64).sqrt());
    for (j, slot) in slots.iter().enumerate() {
        if !slot.valid {
            continue;
        }
        let payload = slot
            .payload
            .as_ref()
            .expect("vanilla attention requires payloads for all valid slots");
        let f_j = feature_merge(&payload.memory, &payload.feat, &params.w_s, &params.b_s, macs);
        let dt = now - slot.timestamp;
        let phi = encode_time(dt, encoder);
        let mut head = f_j;
        head.extend_from_slice(&payload.edge_feat);

        let mut key = params.w_k.matvec_cols(0, head.len(), &head, macs);
        add_assign(&mut key, &params.b_k);
        let key_time = params
            .w_k
            .matvec_cols(head.len(), params.w_k.cols(), &phi, macs);
        add_assign(&mut key, &key_time);

        let mut val = params.w_v.matvec_cols(0, head.len(), &head, macs);
        add_assign(&mut val, &params.b_v);
        let val_time = params
            .w_v
            .matvec_cols(head.len(), params.w_v.cols(), &phi, macs);
        add_assign(&mut val, &val_time);

        macs.add(1); // logit scaling
        logits[j] = dot(&q, &key, macs) * scale;
        values[j] = Some(val);
    }

    let alpha = masked_softmax(&logits)?;
    let mut out = vec![F::zero(); d_emb];
    for (j, v) in values.iter().enumerate() {
        if let Some(v) = v {
            axpy(alpha[j], v, &mut out, macs);
        }
    }
    Ok(VanillaOutput {
        embedding: out,
        logits,
    })
}

/// Time differences and padding mask of a slot list. Padding slots carry
/// Δt = 0 and a set mask bit.
pub fn slot_dt_vec<F: Scalar>(now: F, slots: &[NeighborSlot<F>]) -> (Vec<F>, Vec<bool>) {
    let dt = slots
        .iter()
        .map(|s| if s.valid { now - s.timestamp } else { F::zero() })
        .collect();
    let mask = slots.iter().map(|s| !s.valid).collect();
    (dt, mask)
}

/// `a + W_t Δt` with masked entries forced to -inf.
pub fn simplified_logits<F: Scalar>(
    dt_vec: &[F],
    mask: &[bool],
    params: &SimplifiedAttnParams<F>,
    macs: &mut MacCount,
) -> Vec<F> {
    debug_assert_eq!(dt_vec.len(), params.slots());
    debug_assert_eq!(mask.len(), params.slots());
    let mut logits = params.w_t.matvec(dt_vec, macs);
    add_assign(&mut logits, &params.a);
    for (l, m) in logits.iter_mut().zip(mask.iter()) {
        if *m {
            *l = F::neg_infinity();
        }
    }
    logits
}

/// Simplified logits straight from a slot list: reads timestamps only.
pub fn slot_logits<F: Scalar>(
    now: F,
    slots: &[NeighborSlot<F>],
    params: &SimplifiedAttnParams<F>,
    macs: &mut MacCount,
) -> Vec<F> {
    let (dt, mask) = slot_dt_vec(now, slots);
    simplified_logits(&dt, &mask, params, macs)
}

/// Indices of the `budget` largest finite logits, ties broken toward the
/// smaller slot index. Masked (-inf) slots are never kept. Returned
/// ascending; size is `min(budget, n_valid)`.
pub fn prune_topk<F: Scalar>(logits: &[F], budget: usize) -> Vec<usize> {
    debug_assert!(budget >= 1);
    let mut order: Vec<usize> = (0..logits.len()).filter(|&i| logits[i].is_finite()).collect();
    order.sort_by(|&i, &j| {
        logits[j]
            .partial_cmp(&logits[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    order.truncate(budget);
    order.sort_unstable();
    order
}

/// Exp-normalization with max subtraction over the finite entries.
/// Masked (-inf) entries map to probability 0; all-masked input is an error.
pub fn masked_softmax<F: Scalar>(logits: &[F]) -> Result<Vec<F>> {
    let mut max = F::neg_infinity();
    for &l in logits {
        if l.is_finite() && l > max {
            max = l;
        }
    }
    if !max.is_finite() {
        return Err(Error::EmptyAttentionSet);
    }
    let mut out = Vec::with_capacity(logits.len());
    let mut sum = F::zero();
    for &l in logits {
        if l.is_finite() {
            let e = (l - max).exp();
            sum = sum + e;
            out.push(e);
        } else {
            out.push(F::zero());
        }
    }
    for v in out.iter_mut() {
        *v = *v / sum;
    }
    Ok(out)
}

/// Simplified-attention embedding with pruning.
///
/// Logits come from timestamps alone; the top-`budget` neighbor slots are
/// kept and only their values are computed. The self node is an always-kept
/// extra slot with Δt = 0 and logit 0 inside the softmax; the budget applies
/// to neighbor slots only. The aggregate and `f'_self` then pass through the
/// affine output transform.
#[allow(clippy::too_many_arguments)]
pub fn simplified_embedding<F: Scalar>(
    self_mem: &[F],
    self_feat: &[F],
    now: F,
    slots: &[NeighborSlot<F>],
    budget: usize,
    sat: &SimplifiedAttnParams<F>,
    shared: &VanillaAttnParams<F>,
    output: &OutputTransform<F>,
    time_path: &TimePath<F>,
    macs: &mut MacCount,
) -> Result<SimplifiedOutput<F>> {
    let d_emb = shared.w_v.rows();
    // w_v consumes f'||e||Φ while w_q consumes f'||Φ, so the column
    // difference is the edge feature width.
    let d_edge = shared.w_v.cols() - shared.w_q.cols();

    let neighbor_logits = slot_logits(now, slots, sat, macs);
    let kept = prune_topk(&neighbor_logits, budget);

    // Softmax over kept neighbors plus the self slot (logit 0).
    let mut softmax_in: Vec<F> = kept.iter().map(|&j| neighbor_logits[j]).collect();
    softmax_in.push(F::zero());
    let alpha = masked_softmax(&softmax_in)?;

    let f_self = feature_merge(self_mem, self_feat, &shared.w_s, &shared.b_s, macs);
    let mut values_computed = 0usize;
    let mut agg = vec![F::zero(); d_emb];
    for (pos, &j) in kept.iter().enumerate() {
        let slot = &slots[j];
        debug_assert!(slot.valid, "pruning must never keep a padding slot");
        let payload = slot
            .payload
            .as_ref()
            .expect("kept slot requires a fetched payload");
        let f_j = feature_merge(&payload.memory, &payload.feat, &shared.w_s, &shared.b_s, macs);
        let mut head = f_j;
        head.extend_from_slice(&payload.edge_feat);
        let v = value_with_time(
            &shared.w_v,
            &shared.b_v,
            &head,
            now - slot.timestamp,
            time_path,
            macs,
        );
        values_computed += 1;
        axpy(alpha[pos], &v, &mut agg, macs);
    }

    let mut self_head = f_self.clone();
    self_head.extend(std::iter::repeat(F::zero()).take(d_edge));
    let v_self = value_with_time(
        &shared.w_v,
        &shared.b_v,
        &self_head,
        F::zero(),
        time_path,
        macs,
    );
    values_computed += 1;
    axpy(alpha[kept.len()], &v_self, &mut agg, macs);

    let mut ftm_in = agg;
    ftm_in.extend_from_slice(&f_self);
    let mut embedding = output.w.matvec(&ftm_in, macs);
    add_assign(&mut embedding, &output.b);

    Ok(SimplifiedOutput {
        embedding,
        neighbor_logits,
        kept,
        values_computed,
    })
}
