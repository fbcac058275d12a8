//! Analytical accelerator performance model: stage-time bounds, transfer
//! time under burst-dependent effective bandwidth, pipeline period, maximum
//! throughput, and batch latency.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Effective-bandwidth factor α(l) for a burst of `l` elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Alpha {
    /// `min(1, l·Z_d / 64)`: full efficiency from 64-byte bursts up.
    BurstLinear,
    /// Constant factor in (0, 1].
    Constant(f64),
    /// User-measured step table of `(min_burst_elems, alpha)` rows; the row
    /// with the largest threshold <= l applies.
    Table(Vec<(usize, f64)>),
}

impl Alpha {
    pub fn eval(&self, burst_elems: usize, zd_bytes: f64) -> f64 {
        match self {
            Alpha::BurstLinear => (burst_elems as f64 * zd_bytes / 64.0).min(1.0).max(f64::MIN_POSITIVE),
            Alpha::Constant(a) => *a,
            Alpha::Table(rows) => {
                let mut alpha = rows.first().map(|r| r.1).unwrap_or(1.0);
                for (thresh, a) in rows {
                    if *thresh <= burst_elems {
                        alpha = *a;
                    }
                }
                alpha
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |a: f64| a > 0.0 && a <= 1.0;
        match self {
            Alpha::BurstLinear => Ok(()),
            Alpha::Constant(a) if ok(*a) => Ok(()),
            Alpha::Table(rows) if !rows.is_empty() && rows.iter().all(|r| ok(r.1)) => Ok(()),
            _ => Err(Error::Config("alpha factors must lie in (0, 1]".into())),
        }
    }
}

/// Hardware and model shape parameters of the performance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfConfig {
    /// Vector lengths: node feature, cached message, memory, embedding.
    pub f_feat: usize,
    pub f_mail: usize,
    pub f_mem: usize,
    pub f_emb: usize,
    /// Neighbor list length.
    pub mr: usize,
    /// Bytes per element.
    pub zd_bytes: f64,
    /// Compute units.
    pub n_cu: usize,
    /// Gate multiply-accumulate array side (the array is s_g × s_g).
    pub s_g: usize,
    /// Aggregation-module parallelism.
    pub s_fam: usize,
    /// Transformation-module parallelism.
    pub s_ftm: usize,
    /// Edges per processing batch (one pipeline stage's worth).
    pub n_b: usize,
    /// Clock frequency in Hz.
    pub f_freq_hz: f64,
    /// Peak external bandwidth, bytes per second.
    pub bw_bytes_per_s: f64,
    /// Effective-bandwidth model.
    pub alpha: Alpha,
    /// Pipeline stage count.
    pub beta: usize,
    /// Divide the compute terms by the CU count. Off by default: the
    /// dominant-term expressions do not carry the CU count.
    pub cu_corrected: bool,
}

impl PerfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_g == 0 || self.s_fam == 0 || self.s_ftm == 0 {
            return Err(Error::Config("parallelism parameters must be positive".into()));
        }
        if self.n_b == 0 || self.n_cu == 0 || self.beta == 0 {
            return Err(Error::Config("n_b, n_cu, and beta must be positive".into()));
        }
        if !(self.f_freq_hz > 0.0) || !(self.bw_bytes_per_s > 0.0) || !(self.zd_bytes > 0.0) {
            return Err(Error::Config(
                "frequency, bandwidth, and element size must be positive".into(),
            ));
        }
        self.alpha.validate()
    }
}

/// Pipeline period, maximum throughput, and batch latency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfEstimate {
    pub t_comp_max: f64,
    pub t_ls: f64,
    pub t_p: f64,
    pub max_throughput_eps: f64,
    pub latency_s: f64,
}

/// Longest compute stage, dominant terms only: the three gate arrays, the
/// aggregation tree, and the transformation array.
pub fn t_comp_max(cfg: &PerfConfig) -> f64 {
    let nb = cfg.n_b as f64;
    let div = if cfg.cu_corrected { cfg.n_cu as f64 } else { 1.0 };
    let gates = 3.0 * nb * cfg.f_mail as f64 * cfg.f_mem as f64 / (cfg.s_g * cfg.s_g) as f64;
    let fam = 3.0 * nb * cfg.mr as f64 * (cfg.f_mem + cfg.f_feat) as f64 / cfg.s_fam as f64;
    let ftm = 3.0 * nb * (cfg.f_mem + cfg.f_feat) as f64 * cfg.f_emb as f64 / cfg.s_ftm as f64;
    gates.max(fam).max(ftm) / cfg.f_freq_hz / div
}

/// Load/store time over the four transfer classes, each at the effective
/// bandwidth of its burst length. Zero-length vectors transfer nothing.
pub fn t_ls(cfg: &PerfConfig) -> f64 {
    let nb = cfg.n_b as f64;
    let zd = cfg.zd_bytes;
    let bw = cfg.bw_bytes_per_s;
    let term = |count: f64, len: usize| -> f64 {
        if len == 0 {
            return 0.0;
        }
        count * len as f64 * zd / (cfg.alpha.eval(len, zd) * bw)
    };
    term(6.0 * nb, cfg.f_mail)
        + term(3.0 * nb * (2.0 + cfg.mr as f64), cfg.f_mem)
        + term(3.0 * nb * cfg.mr as f64, cfg.f_feat)
        + term(3.0 * nb, cfg.f_emb)
}

/// Pipeline period and derived throughput/latency for a batch of
/// `total_batch_n` edges.
pub fn estimate(cfg: &PerfConfig, total_batch_n: usize) -> Result<PerfEstimate> {
    cfg.validate()?;
    if total_batch_n == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let comp = t_comp_max(cfg);
    let ls = t_ls(cfg);
    let t_p = comp.max(ls);
    let fills = total_batch_n.div_ceil(cfg.n_b) as f64;
    Ok(PerfEstimate {
        t_comp_max: comp,
        t_ls: ls,
        t_p,
        max_throughput_eps: cfg.n_b as f64 / t_p,
        latency_s: (cfg.beta as f64 - 1.0 + fills) * t_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The worked compute-bound fixture: all three stage terms equal six
    /// cycles at 1 MHz.
    pub(crate) fn comp_fixture() -> PerfConfig {
        PerfConfig {
            f_feat: 0,
            f_mail: 4,
            f_mem: 2,
            f_emb: 2,
            mr: 2,
            zd_bytes: 4.0,
            n_cu: 1,
            s_g: 2,
            s_fam: 2,
            s_ftm: 2,
            n_b: 1,
            f_freq_hz: 1e6,
            bw_bytes_per_s: 1e12,
            alpha: Alpha::Constant(1.0),
            beta: 9,
            cu_corrected: false,
        }
    }

    #[test]
    fn worked_compute_example() {
        let cfg = comp_fixture();
        assert!((t_comp_max(&cfg) - 6e-6).abs() < 1e-18);
    }

    #[test]
    fn compute_time_is_linear_in_batch() {
        let mut cfg = comp_fixture();
        let one = t_comp_max(&cfg);
        cfg.n_b = 2;
        assert!((t_comp_max(&cfg) - 2.0 * one).abs() < 1e-18);
    }

    #[test]
    fn infinite_parallelism_drives_compute_to_zero() {
        let mut cfg = comp_fixture();
        cfg.s_g = 1 << 16;
        cfg.s_fam = 1 << 20;
        cfg.s_ftm = 1 << 20;
        assert!(t_comp_max(&cfg) < 1e-12);
    }

    #[test]
    fn worked_transfer_example() {
        let cfg = PerfConfig {
            f_feat: 0,
            f_mail: 2,
            f_mem: 1,
            f_emb: 1,
            mr: 2,
            zd_bytes: 4.0,
            n_cu: 1,
            s_g: 1,
            s_fam: 1,
            s_ftm: 1,
            n_b: 1,
            f_freq_hz: 1e9,
            bw_bytes_per_s: 1e6,
            alpha: Alpha::Constant(1.0),
            beta: 9,
            cu_corrected: false,
        };
        // 6*2*4 + 3*4*1*4 + 0 + 3*1*4 = 108 bytes at 1e6 B/s.
        assert!((t_ls(&cfg) - 108e-6).abs() < 1e-15);
    }

    #[test]
    fn infinite_bandwidth_drives_transfer_to_zero() {
        let mut cfg = comp_fixture();
        cfg.bw_bytes_per_s = f64::INFINITY;
        assert_eq!(t_ls(&cfg), 0.0);
    }

    #[test]
    fn halving_alpha_doubles_transfer_time() {
        let mut cfg = comp_fixture();
        cfg.alpha = Alpha::Constant(1.0);
        let full = t_ls(&cfg);
        cfg.alpha = Alpha::Constant(0.5);
        assert!((t_ls(&cfg) - 2.0 * full).abs() < 1e-15);
    }

    #[test]
    fn worked_estimate_example() {
        let cfg = comp_fixture();
        let est = estimate(&cfg, 10).unwrap();
        assert!((est.t_p - 6e-6).abs() < 1e-18);
        assert!((est.max_throughput_eps - 1.0 / 6e-6).abs() < 1.0);
        assert!((est.latency_s - 18.0 * 6e-6).abs() < 1e-15);
    }

    #[test]
    fn single_fill_latency_is_beta_periods() {
        let mut cfg = comp_fixture();
        cfg.n_b = 4;
        let est = estimate(&cfg, 4).unwrap();
        assert!((est.latency_s - cfg.beta as f64 * est.t_p).abs() < 1e-15);
    }

    #[test]
    fn throughput_times_period_is_the_processing_batch() {
        let cfg = comp_fixture();
        let est = estimate(&cfg, 100).unwrap();
        assert!((est.max_throughput_eps * est.t_p - cfg.n_b as f64).abs() < 1e-12);
    }

    #[test]
    fn burst_linear_alpha_saturates_at_64_bytes() {
        let a = Alpha::BurstLinear;
        assert!((a.eval(4, 4.0) - 0.25).abs() < 1e-15);
        assert_eq!(a.eval(16, 4.0), 1.0);
        assert_eq!(a.eval(64, 4.0), 1.0);
    }

    #[test]
    fn alpha_table_steps() {
        let a = Alpha::Table(vec![(0, 0.2), (8, 0.5), (32, 1.0)]);
        assert_eq!(a.eval(4, 4.0), 0.2);
        assert_eq!(a.eval(8, 4.0), 0.5);
        assert_eq!(a.eval(100, 4.0), 1.0);
    }

    #[test]
    fn invalid_alpha_is_rejected() {
        let mut cfg = comp_fixture();
        cfg.alpha = Alpha::Constant(0.0);
        assert!(estimate(&cfg, 1).is_err());
        cfg.alpha = Alpha::Constant(1.5);
        assert!(estimate(&cfg, 1).is_err());
    }

    #[test]
    fn cu_corrected_divides_compute_terms() {
        let mut cfg = comp_fixture();
        cfg.n_cu = 2;
        let printed = t_comp_max(&cfg);
        cfg.cu_corrected = true;
        assert!((t_comp_max(&cfg) - printed / 2.0).abs() < 1e-18);
    }
}
