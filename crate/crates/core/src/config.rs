//! Engine configuration: model dimensions, variant selection, batching policy.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Model dimensions. All vector widths derive from these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Vertex memory width.
    pub d_mem: usize,
    /// Edge feature width (0 for datasets without edge features).
    pub d_edge: usize,
    /// Static node feature width (0 for datasets without node features).
    pub d_feat: usize,
    /// Time encoding width.
    pub d_time: usize,
    /// Attention key/query width.
    pub d_k: usize,
    /// Embedding / attention value width.
    pub d_emb: usize,
}

impl Dims {
    /// Cached message payload: `s_self || s_other || f_e`.
    pub fn raw_msg_len(&self) -> usize {
        2 * self.d_mem + self.d_edge
    }

    /// GRU input: raw message plus the appended time encoding.
    pub fn full_msg_len(&self) -> usize {
        self.raw_msg_len() + self.d_time
    }

    /// Key/value input with the time encoding: `f' || e || Φ`.
    pub fn kv_input_len(&self) -> usize {
        self.d_mem + self.d_edge + self.d_time
    }

    /// Key/value input without the time block (the LUT supplies it fused).
    pub fn kv_head_len(&self) -> usize {
        self.d_mem + self.d_edge
    }

    /// Query input: `f' || Φ(0)`.
    pub fn q_input_len(&self) -> usize {
        self.d_mem + self.d_time
    }

    /// Output transform input: `aggregate || f'_self`.
    pub fn ftm_input_len(&self) -> usize {
        self.d_emb + self.d_mem
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_mem == 0 || self.d_time == 0 || self.d_emb == 0 || self.d_k == 0 {
            return Err(Error::Config(
                "d_mem, d_time, d_k, and d_emb must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Accumulated model simplifications, in the order the optimizations stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelVariant {
    /// Vanilla temporal attention, cosine time encoder.
    Baseline,
    /// Simplified (time-difference) attention, cosine time encoder.
    Sat,
    /// Simplified attention with the fused LUT time encoder.
    SatLut,
    /// Simplified attention, LUT encoder, and top-k neighbor pruning.
    SatLutNp,
}

impl ModelVariant {
    pub fn is_simplified(self) -> bool {
        !matches!(self, ModelVariant::Baseline)
    }

    pub fn uses_lut(self) -> bool {
        matches!(self, ModelVariant::SatLut | ModelVariant::SatLutNp)
    }

    pub fn prunes(self) -> bool {
        matches!(self, ModelVariant::SatLutNp)
    }

    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::Baseline,
        ModelVariant::Sat,
        ModelVariant::SatLut,
        ModelVariant::SatLutNp,
    ];
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelVariant::Baseline => "baseline",
            ModelVariant::Sat => "sat",
            ModelVariant::SatLut => "sat+lut",
            ModelVariant::SatLutNp => "sat+lut+np",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ModelVariant::Baseline),
            "sat" => Ok(ModelVariant::Sat),
            "sat+lut" => Ok(ModelVariant::SatLut),
            "sat+lut+np" => Ok(ModelVariant::SatLutNp),
            other => Err(Error::Config(format!(
                "unknown variant '{other}' (expected baseline|sat|sat+lut|sat+lut+np)"
            ))),
        }
    }
}

impl TryFrom<String> for ModelVariant {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelVariant> for String {
    fn from(v: ModelVariant) -> String {
        v.to_string()
    }
}

/// How the incoming edge stream is cut into batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BatchPolicy {
    /// Fixed number of edges per batch.
    FixedCount(usize),
    /// Fixed time windows of the given width in seconds, anchored at t = 0.
    FixedWindow(f64),
}

/// Full engine configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub dims: Dims,
    /// Neighbor ring capacity per vertex.
    pub mr: usize,
    /// Neighbor slots consumed by the attention aggregator.
    pub n: usize,
    /// Pruning budget (neighbor slots kept); only used by `sat+lut+np`.
    pub budget: usize,
    pub variant: ModelVariant,
    pub batch_policy: BatchPolicy,
    /// Compute units feeding the updater round-robin.
    pub n_cu: usize,
    /// Route state writes through the updater simulator.
    pub updater_enabled: bool,
    /// Updater ring capacity in cache lines.
    pub updater_lines: usize,
    /// Cache lines the commit pointer scans per cycle.
    pub scan_width: usize,
    /// Evaluate per-vertex work within a batch in parallel. Only effective
    /// when the crate is built with the `parallel` feature.
    pub parallel: bool,
    /// Record every Δt consumed by the time encoder (for LUT construction).
    pub record_time_samples: bool,
}

impl EngineConfig {
    /// A small, fast configuration used by tests and examples.
    pub fn small(variant: ModelVariant) -> Self {
        EngineConfig {
            dims: Dims {
                d_mem: 4,
                d_edge: 3,
                d_feat: 0,
                d_time: 4,
                d_k: 4,
                d_emb: 4,
            },
            mr: 10,
            n: 5,
            budget: 3,
            variant,
            batch_policy: BatchPolicy::FixedCount(4),
            n_cu: 2,
            updater_enabled: true,
            updater_lines: 64,
            scan_width: 3,
            parallel: true,
            record_time_samples: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if !(self.budget <= self.n && self.n <= self.mr) {
            return Err(Error::Config(format!(
                "budget ({}) <= n ({}) <= mr ({}) must hold",
                self.budget, self.n, self.mr
            )));
        }
        if self.n_cu == 0 {
            return Err(Error::Config("n_cu must be at least 1".into()));
        }
        if self.updater_enabled {
            if self.scan_width == 0 {
                return Err(Error::Config("scan_width must be at least 1".into()));
            }
            if self.updater_lines < self.n_cu {
                return Err(Error::Config(
                    "updater_lines must be at least n_cu".into(),
                ));
            }
        }
        match self.batch_policy {
            BatchPolicy::FixedCount(n) if n == 0 => {
                Err(Error::Config("batch size must be positive".into()))
            }
            BatchPolicy::FixedWindow(w) if !(w > 0.0) => {
                Err(Error::Config("window seconds must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_round_trips_through_strings() {
        for v in ModelVariant::ALL {
            assert_eq!(v.to_string().parse::<ModelVariant>().unwrap(), v);
        }
        assert!("spa".parse::<ModelVariant>().is_err());
    }

    #[test]
    fn validate_rejects_budget_above_n() {
        let mut cfg = EngineConfig::small(ModelVariant::SatLutNp);
        cfg.budget = cfg.n + 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validate_rejects_n_above_mr() {
        let mut cfg = EngineConfig::small(ModelVariant::Baseline);
        cfg.n = cfg.mr + 1;
        assert!(cfg.validate().is_err());
    }
}
