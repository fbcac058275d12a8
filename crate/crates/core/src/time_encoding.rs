//! Trigonometric time encoder and its lookup-table replacement.
//!
//! The LUT divides the observed Δt range into K equal-frequency intervals
//! and stores one encoding vector per interval. Products of each entry with
//! downstream weight blocks are precomputed (`fuse_weights`) so consumers
//! read the weighted time contribution by index with no multiplications.

use crate::error::{Error, Result};
use crate::linalg::{Mat, MacCount, Scalar};
use std::collections::BTreeMap;

/// Learnable frequencies and phases of the cosine encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineEncoderParams<F = f64> {
    pub omega: Vec<F>,
    pub phi: Vec<F>,
}

impl<F: Scalar> CosineEncoderParams<F> {
    pub fn d_time(&self) -> usize {
        debug_assert_eq!(self.omega.len(), self.phi.len());
        self.omega.len()
    }

    pub fn map<G: Scalar>(&self, f: impl Fn(F) -> G) -> CosineEncoderParams<G> {
        CosineEncoderParams {
            omega: self.omega.iter().map(|&v| f(v)).collect(),
            phi: self.phi.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// `Φ(Δt)[i] = cos(ω_i·Δt + φ_i)`.
///
/// The evaluation itself is charged zero MACs by the operation model; only
/// the weight products consuming Φ are counted.
pub fn encode_time<F: Scalar>(dt: F, params: &CosineEncoderParams<F>) -> Vec<F> {
    debug_assert!(dt >= F::zero());
    params
        .omega
        .iter()
        .zip(params.phi.iter())
        .map(|(&w, &p)| (w * dt + p).cos())
        .collect()
}

/// Consumer names for fused products. One entry per weight block that
/// multiplies the time encoding.
pub mod consumers {
    pub const GRU_RESET: &str = "gru.r";
    pub const GRU_UPDATE: &str = "gru.z";
    pub const GRU_NEW: &str = "gru.n";
    pub const ATTN_VALUE: &str = "attn.v";
}

/// Equal-frequency lookup table with optional fused weight products.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeLut<F = f64> {
    /// Interval upper edges, strictly increasing, length K-1.
    pub boundaries: Vec<F>,
    /// One encoding vector per interval, length K.
    pub entries: Vec<Vec<F>>,
    /// consumer name -> K precomputed `weight_block · entry` vectors.
    pub fused: BTreeMap<String, Vec<Vec<F>>>,
}

impl<F: Scalar> TimeLut<F> {
    pub fn intervals(&self) -> usize {
        self.entries.len()
    }

    /// Fused product for `consumer` at interval `k`. Panics if the consumer
    /// was never fused; engine configuration guarantees fusion upfront.
    pub fn fused_entry(&self, consumer: &str, k: usize) -> &[F] {
        &self.fused
            .get(consumer)
            .unwrap_or_else(|| panic!("no fused products for consumer '{consumer}'"))[k]
    }

    pub fn map<G: Scalar>(&self, f: impl Fn(F) -> G + Copy) -> TimeLut<G> {
        TimeLut {
            boundaries: self.boundaries.iter().map(|&v| f(v)).collect(),
            entries: self
                .entries
                .iter()
                .map(|e| e.iter().map(|&v| f(v)).collect())
                .collect(),
            fused: self
                .fused
                .iter()
                .map(|(k, vs)| {
                    (
                        k.clone(),
                        vs.iter().map(|e| e.iter().map(|&v| f(v)).collect()).collect(),
                    )
                })
                .collect(),
        }
    }
}

/// Smallest interval index `k` with `dt <= boundaries[k]`, clamping to the
/// last interval when `dt` exceeds every boundary.
pub fn lut_lookup<F: Scalar>(lut: &TimeLut<F>, dt: F) -> usize {
    lut.boundaries.partition_point(|b| *b < dt)
}

/// Builds a K-interval equal-frequency LUT from observed Δt samples.
///
/// Boundaries are the i/K-quantiles of the sample taken by index on the
/// sorted data; duplicate boundary values are merged, so heavy ties can
/// yield fewer than K intervals. Entry k encodes the mean of the samples
/// falling in interval k.
pub fn build_lut<F: Scalar>(
    dt_samples: &[F],
    k: usize,
    params: &CosineEncoderParams<F>,
) -> Result<TimeLut<F>> {
    if k == 0 {
        return Err(Error::Config("LUT interval count must be positive".into()));
    }
    if dt_samples.is_empty() {
        return Err(Error::Config(
            "LUT construction requires a non-empty Δt sample".into(),
        ));
    }
    let mut sorted: Vec<F> = dt_samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("Δt samples must not be NaN"));
    let m = sorted.len();

    let mut boundaries: Vec<F> = Vec::with_capacity(k.saturating_sub(1));
    for i in 1..k {
        // ceil(i*m/k) as a 1-based rank into the sorted sample.
        let rank = (i * m).div_ceil(k);
        let b = sorted[rank - 1];
        if boundaries.last().map_or(true, |last| *last < b) {
            boundaries.push(b);
        }
    }

    let lut_shape = TimeLut {
        boundaries,
        entries: Vec::new(),
        fused: BTreeMap::new(),
    };
    let intervals = lut_shape.boundaries.len() + 1;

    let mut sums = vec![F::zero(); intervals];
    let mut counts = vec![0usize; intervals];
    for &s in &sorted {
        let idx = lut_lookup(&lut_shape, s);
        sums[idx] = sums[idx] + s;
        counts[idx] += 1;
    }

    let mut entries = Vec::with_capacity(intervals);
    for i in 0..intervals {
        let representative = if counts[i] > 0 {
            sums[i] / F::from_f64(counts[i] as f64)
        } else if i == intervals - 1 {
            // Only the unbounded last interval can be empty (every bounded
            // interval contains its own upper-boundary sample); fall back
            // to its lower edge.
            lut_shape.boundaries[i - 1]
        } else if i == 0 {
            lut_shape.boundaries[0] / F::from_f64(2.0)
        } else {
            (lut_shape.boundaries[i - 1] + lut_shape.boundaries[i]) / F::from_f64(2.0)
        };
        entries.push(encode_time(representative, params));
    }

    Ok(TimeLut {
        boundaries: lut_shape.boundaries,
        entries,
        fused: BTreeMap::new(),
    })
}

/// Precomputes `weight_block · entry` for every LUT entry under `consumer`.
///
/// `weight_block` must have `d_time` columns. Uses the same accumulation
/// order as the block matvec on the cosine path, so a fused read is
/// bit-identical to multiplying the entry at consumption time.
pub fn fuse_weights<F: Scalar>(
    lut: &mut TimeLut<F>,
    consumer: &str,
    weight_block: &Mat<F>,
) -> Result<()> {
    let d_time = lut.entries.first().map_or(0, |e| e.len());
    if weight_block.cols() != d_time {
        return Err(Error::DimMismatch {
            what: "fused weight block columns",
            expected: d_time,
            actual: weight_block.cols(),
        });
    }
    let mut scratch = MacCount::default();
    let products: Vec<Vec<F>> = lut
        .entries
        .iter()
        .map(|entry| weight_block.matvec(entry, &mut scratch))
        .collect();
    lut.fused.insert(consumer.to_string(), products);
    Ok(())
}
