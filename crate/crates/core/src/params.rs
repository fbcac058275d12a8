//! All learnable tensors in one bundle, plus validation against a
//! configuration and LUT construction/fusion.

use crate::attention::{OutputTransform, SimplifiedAttnParams, VanillaAttnParams};
use crate::config::Dims;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::memory_update::{GruParams, TimePath};
use crate::time_encoding::{build_lut, consumers, fuse_weights, CosineEncoderParams, TimeLut};
use rand::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gru: GruParams,
    pub attn: VanillaAttnParams,
    pub sat: SimplifiedAttnParams,
    pub output: OutputTransform,
    pub encoder: CosineEncoderParams,
    pub lut: Option<TimeLut>,
}

fn rand_mat(rng: &mut StdRng, rows: usize, cols: usize) -> Mat<f64> {
    let scale = 1.0 / (cols.max(1) as f64).sqrt();
    Mat::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect(),
    )
}

fn rand_vec(rng: &mut StdRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-0.1..0.1)).collect()
}

impl ModelParams {
    /// Seeded random parameters with consistent shapes, no LUT.
    pub fn random(dims: &Dims, n: usize, seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let full = dims.full_msg_len();
        let gru = GruParams {
            w_ir: rand_mat(&mut rng, dims.d_mem, full),
            w_hr: rand_mat(&mut rng, dims.d_mem, dims.d_mem),
            b_ir: rand_vec(&mut rng, dims.d_mem),
            b_hr: rand_vec(&mut rng, dims.d_mem),
            w_iz: rand_mat(&mut rng, dims.d_mem, full),
            w_hz: rand_mat(&mut rng, dims.d_mem, dims.d_mem),
            b_iz: rand_vec(&mut rng, dims.d_mem),
            b_hz: rand_vec(&mut rng, dims.d_mem),
            w_in: rand_mat(&mut rng, dims.d_mem, full),
            w_hn: rand_mat(&mut rng, dims.d_mem, dims.d_mem),
            b_in: rand_vec(&mut rng, dims.d_mem),
            b_hn: rand_vec(&mut rng, dims.d_mem),
        };
        let attn = VanillaAttnParams {
            w_s: rand_mat(&mut rng, dims.d_mem, dims.d_feat),
            b_s: rand_vec(&mut rng, dims.d_mem),
            w_q: rand_mat(&mut rng, dims.d_k, dims.q_input_len()),
            b_q: rand_vec(&mut rng, dims.d_k),
            w_k: rand_mat(&mut rng, dims.d_k, dims.kv_input_len()),
            b_k: rand_vec(&mut rng, dims.d_k),
            w_v: rand_mat(&mut rng, dims.d_emb, dims.kv_input_len()),
            b_v: rand_vec(&mut rng, dims.d_emb),
        };
        let sat = SimplifiedAttnParams {
            a: rand_vec(&mut rng, n),
            w_t: rand_mat(&mut rng, n, n),
        };
        let output = OutputTransform {
            w: rand_mat(&mut rng, dims.d_emb, dims.ftm_input_len()),
            b: rand_vec(&mut rng, dims.d_emb),
        };
        let encoder = CosineEncoderParams {
            omega: (0..dims.d_time)
                .map(|i| 1.0 / 10f64.powf(i as f64 * 4.0 / dims.d_time.max(1) as f64))
                .collect(),
            phi: rand_vec(&mut rng, dims.d_time),
        };
        ModelParams {
            gru,
            attn,
            sat,
            output,
            encoder,
            lut: None,
        }
    }

    pub fn validate(&self, dims: &Dims, n: usize) -> Result<()> {
        let checks: [(&str, usize, usize); 12] = [
            ("gru.w_ir cols", self.gru.w_ir.cols(), dims.full_msg_len()),
            ("gru.w_ir rows", self.gru.w_ir.rows(), dims.d_mem),
            ("gru.w_hr cols", self.gru.w_hr.cols(), dims.d_mem),
            ("attn.w_s rows", self.attn.w_s.rows(), dims.d_mem),
            ("attn.w_s cols", self.attn.w_s.cols(), dims.d_feat),
            ("attn.w_q cols", self.attn.w_q.cols(), dims.q_input_len()),
            ("attn.w_k cols", self.attn.w_k.cols(), dims.kv_input_len()),
            ("attn.w_v rows", self.attn.w_v.rows(), dims.d_emb),
            ("attn.w_v cols", self.attn.w_v.cols(), dims.kv_input_len()),
            ("sat.a len", self.sat.a.len(), n),
            ("output.w cols", self.output.w.cols(), dims.ftm_input_len()),
            ("encoder omega len", self.encoder.omega.len(), dims.d_time),
        ];
        for (what, actual, expected) in checks {
            if actual != expected {
                return Err(Error::WeightsSchema(format!(
                    "{what}: expected {expected}, got {actual}"
                )));
            }
        }
        if self.sat.w_t.rows() != n || self.sat.w_t.cols() != n {
            return Err(Error::WeightsSchema(format!(
                "sat.w_t: expected {n}x{n}, got {}x{}",
                self.sat.w_t.rows(),
                self.sat.w_t.cols()
            )));
        }
        if let Some(lut) = &self.lut {
            for e in &lut.entries {
                if e.len() != dims.d_time {
                    return Err(Error::WeightsSchema(format!(
                        "lut entry width: expected {}, got {}",
                        dims.d_time,
                        e.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Builds the equal-frequency LUT from Δt samples and fuses it with
    /// every time-consuming weight block (three GRU gates, attention value).
    pub fn build_lut(&mut self, dt_samples: &[f64], k: usize, dims: &Dims) -> Result<()> {
        let mut lut = build_lut(dt_samples, k, &self.encoder)?;
        let raw = dims.raw_msg_len();
        let full = dims.full_msg_len();
        fuse_weights(&mut lut, consumers::GRU_RESET, &self.gru.w_ir.col_block(raw, full))?;
        fuse_weights(&mut lut, consumers::GRU_UPDATE, &self.gru.w_iz.col_block(raw, full))?;
        fuse_weights(&mut lut, consumers::GRU_NEW, &self.gru.w_in.col_block(raw, full))?;
        let head = dims.kv_head_len();
        let kv = dims.kv_input_len();
        fuse_weights(&mut lut, consumers::ATTN_VALUE, &self.attn.w_v.col_block(head, kv))?;
        self.lut = Some(lut);
        Ok(())
    }

    /// Time route for the configured variant. Errors if the variant needs a
    /// LUT that has not been built or fused.
    pub fn time_path(&self, use_lut: bool) -> Result<TimePath<'_, f64>> {
        if use_lut {
            let lut = self.lut.as_ref().ok_or_else(|| {
                Error::Config("variant requires a LUT but the weights carry none".into())
            })?;
            for c in [
                consumers::GRU_RESET,
                consumers::GRU_UPDATE,
                consumers::GRU_NEW,
                consumers::ATTN_VALUE,
            ] {
                if !lut.fused.contains_key(c) {
                    return Err(Error::Config(format!(
                        "LUT lacks fused products for consumer '{c}'"
                    )));
                }
            }
            Ok(TimePath::Lut(lut))
        } else {
            Ok(TimePath::Cosine(&self.encoder))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> Dims {
        Dims {
            d_mem: 3,
            d_edge: 2,
            d_feat: 1,
            d_time: 4,
            d_k: 3,
            d_emb: 3,
        }
    }

    #[test]
    fn random_params_validate() {
        let p = ModelParams::random(&dims(), 5, 42);
        p.validate(&dims(), 5).unwrap();
    }

    #[test]
    fn random_params_are_deterministic_per_seed() {
        let a = ModelParams::random(&dims(), 5, 7);
        let b = ModelParams::random(&dims(), 5, 7);
        assert_eq!(a, b);
        let c = ModelParams::random(&dims(), 5, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn lut_requirement_is_enforced() {
        let mut p = ModelParams::random(&dims(), 5, 1);
        assert!(p.time_path(true).is_err());
        p.build_lut(&[0.5, 1.5, 4.0], 3, &dims()).unwrap();
        assert!(p.time_path(true).is_ok());
        p.validate(&dims(), 5).unwrap();
    }

    #[test]
    fn validate_catches_wrong_shapes() {
        let mut p = ModelParams::random(&dims(), 5, 1);
        p.sat.a.push(0.0);
        assert!(p.validate(&dims(), 5).is_err());
    }
}
