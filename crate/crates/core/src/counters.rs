//! Per-stage MAC/MEM tallies and their closed forms.
//!
//! Counting conventions (shared by the instrumented kernels and the closed
//! forms here, which must agree exactly):
//!   MAC - matrix-vector (p x q) costs p*q; dot products, elementwise
//!         multiplies, and logit scaling cost one per element; additions,
//!         activations, exponentials, the cosine evaluation itself, and
//!         softmax divisions are free.
//!   MEM - element-granularity accesses to externally resident graph state
//!         (mailbox rows, memory rows, neighbor records at 3 elements each,
//!         node/edge feature fetches), learnable weights excluded. Mailbox
//!         and memory rows are read for every batch vertex; GNN fetches
//!         cover valid (under pruning, kept) slots only; the update stage
//!         counts the final per-vertex writes.

use crate::config::{EngineConfig, ModelVariant};
use serde::{Deserialize, Serialize};

/// Elements of one NeighborRecord: neighbor id, edge id, timestamp.
pub const NEIGHBOR_RECORD_ELEMS: u64 = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub mac: u64,
    pub mem: u64,
}

impl StageCounts {
    fn add(&mut self, other: StageCounts) {
        self.mac += other.mac;
        self.mem += other.mem;
    }
}

/// MAC and MEM tallies for the four pipeline stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterReport {
    pub sample: StageCounts,
    pub memory: StageCounts,
    pub gnn: StageCounts,
    pub update: StageCounts,
}

impl CounterReport {
    pub fn total(&self) -> StageCounts {
        let mut t = StageCounts::default();
        t.add(self.sample);
        t.add(self.memory);
        t.add(self.gnn);
        t.add(self.update);
        t
    }

    pub fn add_assign(&mut self, other: &CounterReport) {
        self.sample.add(other.sample);
        self.memory.add(other.memory);
        self.gnn.add(other.gnn);
        self.update.add(other.update);
    }

    pub fn scaled(&self, by: u64) -> CounterReport {
        let s = |c: StageCounts| StageCounts {
            mac: c.mac * by,
            mem: c.mem * by,
        };
        CounterReport {
            sample: s(self.sample),
            memory: s(self.memory),
            gnn: s(self.gnn),
            update: s(self.update),
        }
    }

    pub fn stages(&self) -> [(&'static str, StageCounts); 4] {
        [
            ("sample", self.sample),
            ("memory", self.memory),
            ("GNN", self.gnn),
            ("update", self.update),
        ]
    }
}

/// Closed-form per-embedding counts in the steady state: mailbox present,
/// all `n` neighbor slots valid, and the vertex touched by one batch edge.
pub fn count_ops(cfg: &EngineConfig) -> CounterReport {
    let d = &cfg.dims;
    let n = cfg.n as u64;
    let keep = effective_keep(cfg) as u64;
    let d_mem = d.d_mem as u64;
    let d_feat = d.d_feat as u64;
    let d_edge = d.d_edge as u64;
    let d_time = d.d_time as u64;
    let d_k = d.d_k as u64;
    let d_emb = d.d_emb as u64;
    let raw = 2 * d_mem + d_edge;
    let kv_time = d_mem + d_edge + d_time;
    let kv_head = d_mem + d_edge;

    let sample = StageCounts {
        mac: 0,
        mem: n * NEIGHBOR_RECORD_ELEMS,
    };

    let gru_input_width = if cfg.variant.uses_lut() { raw } else { raw + d_time };
    let memory = StageCounts {
        mac: 3 * d_mem * gru_input_width + 3 * d_mem * d_mem + 3 * d_mem,
        mem: raw + d_mem,
    };

    let gnn = match cfg.variant {
        ModelVariant::Baseline => StageCounts {
            mac: (n + 1) * d_mem * d_feat
                + d_k * (d_mem + d_time)
                + n * d_k * kv_time
                + n * d_emb * kv_time
                + n * (d_k + 1)
                + n * d_emb,
            mem: d_feat + n * (d_mem + d_feat + d_edge),
        },
        _ => {
            let v_width = if cfg.variant.uses_lut() { kv_head } else { kv_time };
            StageCounts {
                mac: (keep + 1) * d_mem * d_feat
                    + n * n
                    + (keep + 1) * d_emb * v_width
                    + (keep + 1) * d_emb
                    + d_emb * (d_emb + d_mem),
                mem: d_feat + keep * (d_mem + d_feat + d_edge),
            }
        }
    };

    let update = StageCounts {
        mac: 0,
        mem: d_mem + raw + if cfg.mr > 0 { NEIGHBOR_RECORD_ELEMS } else { 0 },
    };

    CounterReport {
        sample,
        memory,
        gnn,
        update,
    }
}

/// Neighbor slots whose values are computed: the budget under pruning,
/// all `n` otherwise.
pub fn effective_keep(cfg: &EngineConfig) -> usize {
    if cfg.variant.prunes() {
        cfg.budget.min(cfg.n)
    } else {
        cfg.n
    }
}

/// Affine model `y(k) = fixed + k * per_neighbor` in the pruning budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub fixed: f64,
    pub per_neighbor: f64,
}

impl Affine {
    pub fn eval(&self, k: f64) -> f64 {
        self.fixed + k * self.per_neighbor
    }

    /// Fits from the smallest- and largest-k points.
    ///
    /// For exactly affine data every point pair gives the same line; the
    /// residual over all points measures deviation from affinity.
    pub fn fit(points: &[(f64, f64)]) -> Option<Affine> {
        if points.len() < 2 {
            return None;
        }
        let lo = points
            .iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())?;
        let hi = points
            .iter()
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())?;
        if lo.0 == hi.0 {
            return None;
        }
        let per_neighbor = (hi.1 - lo.1) / (hi.0 - lo.0);
        Some(Affine {
            fixed: lo.1 - lo.0 * per_neighbor,
            per_neighbor,
        })
    }

    pub fn max_residual(&self, points: &[(f64, f64)]) -> f64 {
        points
            .iter()
            .map(|(k, y)| (self.eval(*k) - y).abs())
            .fold(0.0, f64::max)
    }
}

/// GNN-stage MAC as an affine function of the pruning budget, with `n` and
/// all dimensions fixed by the configuration.
pub fn gnn_mac_affine(cfg: &EngineConfig) -> Affine {
    let d = &cfg.dims;
    let v_width = if cfg.variant.uses_lut() {
        d.kv_head_len()
    } else {
        d.kv_input_len()
    } as f64;
    let per_neighbor =
        (d.d_mem * d.d_feat) as f64 + d.d_emb as f64 * v_width + d.d_emb as f64;
    let fixed = (cfg.n * cfg.n) as f64
        + (d.d_mem * d.d_feat) as f64
        + d.d_emb as f64 * v_width
        + d.d_emb as f64
        + (d.d_emb * (d.d_emb + d.d_mem)) as f64;
    Affine {
        fixed,
        per_neighbor,
    }
}

/// Total MEM per embedding as an affine function of the pruning budget.
pub fn total_mem_affine(cfg: &EngineConfig) -> Affine {
    let d = &cfg.dims;
    let raw = d.raw_msg_len() as u64;
    let fixed = cfg.n as u64 * NEIGHBOR_RECORD_ELEMS
        + raw
        + d.d_mem as u64
        + d.d_feat as u64
        + d.d_mem as u64
        + raw
        + if cfg.mr > 0 { NEIGHBOR_RECORD_ELEMS } else { 0 };
    Affine {
        fixed: fixed as f64,
        per_neighbor: (d.d_mem + d.d_feat + d.d_edge) as f64,
    }
}
