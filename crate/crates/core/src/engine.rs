//! Batched inference over chronological edge streams.
//!
//! Each batch runs in phases: (1) read the pre-batch state of every unique
//! batch vertex, (2) update memories from cached messages and compute
//! embeddings (per-vertex, parallelizable), (3) generate and reduce new
//! messages, (4) grow neighbor rings, (5) route the per-vertex state writes
//! through the updater and apply the committed stream. Embeddings read the
//! batch vertex's own post-update memory but pre-batch neighbor memories,
//! matching the prefetch schedule.

use crate::attention::{
    prune_topk, simplified_embedding, slot_logits, vanilla_attention, NeighborSlot, SlotPayload,
};
use crate::config::{BatchPolicy, EngineConfig, ModelVariant};
use crate::counters::{effective_keep, CounterReport, NEIGHBOR_RECORD_ELEMS};
use crate::distill::DistillSample;
use crate::error::{Error, Result};
use crate::graph_store::{
    GraphStore, MailboxEntry, MemoryEntry, NeighborRecord, TemporalEdge, VertexId,
};
use crate::linalg::MacCount;
use crate::memory_update::{aggregate_most_recent, generate_messages, gru_update, TimePath};
use crate::params::ModelParams;
use crate::updater_sim::{TraceEvent, UpdaterSim, UpdaterStats};
use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

/// One emitted embedding: the vertex's batch timestamp and the vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub timestamp: f64,
    pub embedding: Vec<f64>,
}

/// Embeddings of one processed batch, one per unique batch vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub batch_index: usize,
    pub embeddings: BTreeMap<VertexId, EmbeddingRecord>,
}

/// Wall-clock run measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub edges_processed: u64,
    pub execution_seconds: f64,
    pub throughput_eps: f64,
    pub per_batch_latency: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StreamOutput {
    pub batches: Vec<BatchOutput>,
    pub metrics: RunMetrics,
    pub counters: CounterReport,
}

/// Full per-vertex row set handed to the updater. The neighbor payload is
/// the whole new ring row, so applying records in commit order is
/// idempotent under supersession.
#[derive(Debug, Clone)]
pub struct VertexUpdate {
    pub memory: Option<(Vec<f64>, f64)>,
    pub mailbox: MailboxEntry,
    pub ring: Vec<NeighborRecord>,
}

struct VertexCtx {
    vid: VertexId,
    earliest: f64,
    latest: f64,
    slots_raw: Vec<Option<NeighborRecord>>,
    mem: MemoryEntry,
    mail: Option<MailboxEntry>,
    self_feat: Vec<f64>,
}

struct VertexResult {
    new_mem: Vec<f64>,
    gru_ran: bool,
    embedding: Vec<f64>,
    memory_macs: u64,
    gnn_macs: u64,
    gnn_mem: u64,
    distill: Option<DistillSample>,
    time_samples: Vec<f64>,
}

fn map_in_order<T: Sync, U: Send>(
    parallel: bool,
    items: &[T],
    f: impl Fn(&T) -> U + Sync,
) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return items.par_iter().map(&f).collect();
        }
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

pub struct Engine {
    cfg: EngineConfig,
    params: ModelParams,
    store: GraphStore,
    updater: Option<UpdaterSim<VertexUpdate>>,
    counters: CounterReport,
    last_timestamp: f64,
    batches_done: usize,
    /// Every Δt consumed by the time encoder, when recording is enabled.
    time_samples: Vec<f64>,
    /// Committed memory writes in apply order, for chronology checks.
    commit_log: Vec<(VertexId, f64)>,
}

impl Engine {
    pub fn new(cfg: EngineConfig, params: ModelParams) -> Result<Self> {
        cfg.validate()?;
        params.validate(&cfg.dims, cfg.n)?;
        // Fail fast if the variant needs a LUT the weights do not carry.
        params.time_path(cfg.variant.uses_lut())?;
        let updater = if cfg.updater_enabled {
            Some(UpdaterSim::new(cfg.updater_lines, cfg.n_cu, cfg.scan_width))
        } else {
            None
        };
        let store = GraphStore::new(cfg.dims.d_mem, cfg.dims.d_edge, cfg.dims.d_feat, cfg.mr);
        Ok(Engine {
            cfg,
            params,
            store,
            updater,
            counters: CounterReport::default(),
            last_timestamp: 0.0,
            batches_done: 0,
            time_samples: Vec::new(),
            commit_log: Vec::new(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn store(&self) -> &GraphStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut GraphStore {
        &mut self.store
    }

    pub fn counters(&self) -> &CounterReport {
        &self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = CounterReport::default();
    }

    pub fn time_samples(&self) -> &[f64] {
        &self.time_samples
    }

    pub fn commit_log(&self) -> &[(VertexId, f64)] {
        &self.commit_log
    }

    pub fn updater_stats(&self) -> Option<UpdaterStats> {
        self.updater.as_ref().map(|u| u.stats())
    }

    pub fn enable_updater_trace(&mut self) {
        if let Some(u) = self.updater.as_mut() {
            u.enable_trace();
        }
    }

    pub fn take_updater_trace(&mut self) -> Vec<TraceEvent> {
        self.updater
            .as_mut()
            .map(|u| u.take_trace())
            .unwrap_or_default()
    }

    pub fn process_batch(&mut self, edges: &[TemporalEdge]) -> Result<BatchOutput> {
        self.process_batch_collecting(edges, None)
    }

    /// Processes one batch, optionally collecting teacher logits for
    /// distillation (baseline variant only).
    pub fn process_batch_collecting(
        &mut self,
        edges: &[TemporalEdge],
        mut distill_sink: Option<&mut Vec<DistillSample>>,
    ) -> Result<BatchOutput> {
        if edges.is_empty() {
            return Err(Error::Config("batch must contain at least one edge".into()));
        }
        let dims = self.cfg.dims;
        let mut prev = self.last_timestamp;
        for e in edges {
            if e.timestamp < prev {
                return Err(Error::StreamOrder {
                    row: e.edge_id as usize,
                    prev,
                    curr: e.timestamp,
                });
            }
            prev = e.timestamp;
            if e.features.len() != dims.d_edge {
                return Err(Error::DimMismatch {
                    what: "edge features",
                    expected: dims.d_edge,
                    actual: e.features.len(),
                });
            }
        }

        // Edge features become fetchable graph state (input-side ingest,
        // not counted as a graph-state access).
        for e in edges {
            self.store.set_edge_feat(e.edge_id, e.features.clone())?;
        }

        // Unique batch vertices in first-appearance order, with their
        // earliest (memory-update) and latest (embedding) batch timestamps.
        let mut order: Vec<VertexId> = Vec::new();
        let mut earliest: HashMap<VertexId, f64> = HashMap::new();
        let mut latest: HashMap<VertexId, f64> = HashMap::new();
        for e in edges {
            for v in [e.src, e.dst] {
                earliest.entry(v).or_insert_with(|| {
                    order.push(v);
                    e.timestamp
                });
                latest.insert(v, e.timestamp);
            }
        }

        let ctxs: Vec<VertexCtx> = order
            .iter()
            .map(|&v| VertexCtx {
                vid: v,
                earliest: earliest[&v],
                latest: latest[&v],
                slots_raw: self.store.recent_neighbors(v, self.cfg.n),
                mem: self.store.memory(v),
                mail: self.store.mailbox(v).cloned(),
                self_feat: self.store.node_feat(v),
            })
            .collect();

        // Pure per-vertex compute against the immutable pre-batch store.
        let cfg = &self.cfg;
        let params = &self.params;
        let store = &self.store;
        let time_path = params.time_path(cfg.variant.uses_lut())?;
        let collect_distill = distill_sink.is_some();
        let results: Vec<Result<VertexResult>> = map_in_order(cfg.parallel, &ctxs, |ctx| {
            compute_vertex(ctx, cfg, params, &time_path, store, collect_distill)
        });

        let mut vertex_results = Vec::with_capacity(results.len());
        for r in results {
            vertex_results.push(r?);
        }

        // Stage counters: sample and memory-stage reads are per vertex.
        let n_vertices = order.len() as u64;
        self.counters.sample.mem += n_vertices * self.cfg.n as u64 * NEIGHBOR_RECORD_ELEMS;
        self.counters.memory.mem +=
            n_vertices * (dims.raw_msg_len() as u64 + dims.d_mem as u64);
        for vr in &vertex_results {
            self.counters.memory.mac += vr.memory_macs;
            self.counters.gnn.mac += vr.gnn_macs;
            self.counters.gnn.mem += vr.gnn_mem;
            if self.cfg.record_time_samples {
                self.time_samples.extend_from_slice(&vr.time_samples);
            }
        }
        if let Some(sink) = distill_sink.as_deref_mut() {
            for vr in &vertex_results {
                if let Some(s) = &vr.distill {
                    sink.push(s.clone());
                }
            }
        }

        let index_of: HashMap<VertexId, usize> =
            order.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        // New raw messages per edge from the updated memories, reduced to
        // the most recent message per vertex.
        let mut messages: HashMap<VertexId, Vec<(Vec<f64>, f64, u64)>> = HashMap::new();
        let mut edge_msgs: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(edges.len());
        for (idx, e) in edges.iter().enumerate() {
            let s_src = &vertex_results[index_of[&e.src]].new_mem;
            let s_dst = &vertex_results[index_of[&e.dst]].new_mem;
            let (m_src, m_dst) = generate_messages(e, s_src, s_dst);
            messages.entry(e.src).or_default().push((m_src.clone(), e.timestamp, idx as u64));
            messages.entry(e.dst).or_default().push((m_dst.clone(), e.timestamp, idx as u64));
            edge_msgs.push((m_src, m_dst));
        }
        let mut final_mailbox: HashMap<VertexId, MailboxEntry> = HashMap::new();
        for &v in &order {
            let (raw_message, msg_timestamp) =
                aggregate_most_recent(messages.remove(&v).expect("batch vertex has messages"));
            final_mailbox.insert(v, MailboxEntry { raw_message, msg_timestamp });
        }

        // Ring growth per edge, plus the logical update-stage write counts.
        let mut rings: HashMap<VertexId, Vec<NeighborRecord>> = order
            .iter()
            .map(|&v| (v, self.store.neighbor_ring(v)))
            .collect();
        let mut appends: HashMap<VertexId, u64> = HashMap::new();
        let mut submissions: Vec<(VertexId, VertexUpdate)> = Vec::new();
        for (idx, e) in edges.iter().enumerate() {
            let pairs = [
                (e.src, e.dst, &edge_msgs[idx].0),
                (e.dst, e.src, &edge_msgs[idx].1),
            ];
            for (endpoint, other, msg) in pairs {
                let ring = rings.get_mut(&endpoint).expect("ring snapshot exists");
                push_ring(
                    ring,
                    NeighborRecord {
                        nbr: other,
                        edge_id: e.edge_id,
                        timestamp: e.timestamp,
                    },
                    self.cfg.mr,
                );
                *appends.entry(endpoint).or_default() += 1;
                if self.cfg.updater_enabled {
                    let vr = &vertex_results[index_of[&endpoint]];
                    submissions.push((
                        endpoint,
                        VertexUpdate {
                            memory: vr
                                .gru_ran
                                .then(|| (vr.new_mem.clone(), earliest[&endpoint])),
                            mailbox: MailboxEntry {
                                raw_message: msg.clone(),
                                msg_timestamp: e.timestamp,
                            },
                            ring: ring.clone(),
                        },
                    ));
                }
            }
        }

        // Logical external write traffic per vertex; independent of how the
        // updater elides superseded intermediate rows.
        for &v in &order {
            let vr = &vertex_results[index_of[&v]];
            if vr.gru_ran {
                self.counters.update.mem += dims.d_mem as u64;
            }
            self.counters.update.mem += dims.raw_msg_len() as u64;
            self.counters.update.mem += appends[&v] * NEIGHBOR_RECORD_ELEMS;
        }

        if let Some(updater) = self.updater.as_mut() {
            let outcome = updater.run_round_robin(submissions);
            for (vid, upd) in outcome.committed {
                if let Some((mem, ts)) = upd.memory {
                    self.store.set_memory(vid, mem, ts)?;
                    self.commit_log.push((vid, ts));
                }
                self.store.set_mailbox(vid, upd.mailbox)?;
                self.store.set_neighbor_ring(vid, upd.ring);
            }
        } else {
            for &v in &order {
                let vr = &vertex_results[index_of[&v]];
                if vr.gru_ran {
                    self.store.set_memory(v, vr.new_mem.clone(), earliest[&v])?;
                    self.commit_log.push((v, earliest[&v]));
                }
                self.store
                    .set_mailbox(v, final_mailbox.remove(&v).expect("mailbox built"))?;
                self.store
                    .set_neighbor_ring(v, rings.remove(&v).expect("ring built"));
            }
        }

        let mut embeddings = BTreeMap::new();
        for (i, &v) in order.iter().enumerate() {
            embeddings.insert(
                v,
                EmbeddingRecord {
                    timestamp: latest[&v],
                    embedding: vertex_results[i].embedding.clone(),
                },
            );
        }
        self.last_timestamp = edges.last().unwrap().timestamp;
        let batch_index = self.batches_done;
        self.batches_done += 1;
        Ok(BatchOutput {
            batch_index,
            embeddings,
        })
    }

    /// Partitions the stream per the batch policy, runs every batch, and
    /// reports wall-clock metrics plus the counters accumulated by the run.
    pub fn run_stream(&mut self, edges: &[TemporalEdge]) -> Result<StreamOutput> {
        self.run_stream_collecting(edges, None)
    }

    pub fn run_stream_collecting(
        &mut self,
        edges: &[TemporalEdge],
        mut distill_sink: Option<&mut Vec<DistillSample>>,
    ) -> Result<StreamOutput> {
        let before = self.counters;
        let batches = partition_batches(edges, &self.cfg.batch_policy);
        let mut outputs = Vec::with_capacity(batches.len());
        let mut per_batch_latency = Vec::with_capacity(batches.len());
        let start = Instant::now();
        for batch in batches {
            let t = Instant::now();
            outputs.push(self.process_batch_collecting(batch, distill_sink.as_deref_mut())?);
            per_batch_latency.push(t.elapsed().as_secs_f64());
        }
        let execution_seconds = start.elapsed().as_secs_f64();
        let edges_processed = edges.len() as u64;
        let throughput_eps = if execution_seconds > 0.0 && edges_processed > 0 {
            edges_processed as f64 / execution_seconds
        } else {
            0.0
        };
        let mut counters = self.counters;
        counters_sub(&mut counters, &before);
        Ok(StreamOutput {
            batches: outputs,
            metrics: RunMetrics {
                edges_processed,
                execution_seconds,
                throughput_eps,
                per_batch_latency,
            },
            counters,
        })
    }
}

fn counters_sub(c: &mut CounterReport, before: &CounterReport) {
    let sub = |a: &mut crate::counters::StageCounts, b: crate::counters::StageCounts| {
        a.mac -= b.mac;
        a.mem -= b.mem;
    };
    sub(&mut c.sample, before.sample);
    sub(&mut c.memory, before.memory);
    sub(&mut c.gnn, before.gnn);
    sub(&mut c.update, before.update);
}

fn push_ring(ring: &mut Vec<NeighborRecord>, rec: NeighborRecord, mr: usize) {
    if ring.len() == mr {
        ring.remove(0);
    }
    ring.push(rec);
}

/// Cuts a chronological stream into batches: fixed edge counts, or fixed
/// time windows anchored at t = 0 (empty windows are skipped).
pub fn partition_batches<'a>(
    edges: &'a [TemporalEdge],
    policy: &BatchPolicy,
) -> Vec<&'a [TemporalEdge]> {
    match policy {
        BatchPolicy::FixedCount(n) => edges.chunks(*n).collect(),
        BatchPolicy::FixedWindow(w) => {
            let mut out = Vec::new();
            let mut start = 0usize;
            while start < edges.len() {
                let window = (edges[start].timestamp / w).floor();
                let mut end = start + 1;
                while end < edges.len() && (edges[end].timestamp / w).floor() == window {
                    end += 1;
                }
                out.push(&edges[start..end]);
                start = end;
            }
            out
        }
    }
}

fn compute_vertex(
    ctx: &VertexCtx,
    cfg: &EngineConfig,
    params: &ModelParams,
    time_path: &TimePath<'_, f64>,
    store: &GraphStore,
    collect_distill: bool,
) -> Result<VertexResult> {
    let dims = cfg.dims;
    let mut memory_macs = MacCount::default();
    let (new_mem, gru_ran) = match &ctx.mail {
        Some(m) => {
            let out = gru_update(
                &m.raw_message,
                m.msg_timestamp,
                ctx.earliest,
                &ctx.mem.memory,
                &params.gru,
                time_path,
                &mut memory_macs,
            )?;
            (out, true)
        }
        None => (ctx.mem.memory.clone(), false),
    };

    let now = ctx.latest;
    let mut slots: Vec<NeighborSlot> = ctx
        .slots_raw
        .iter()
        .map(|r| match r {
            Some(rec) => NeighborSlot::pending(rec.timestamp),
            None => NeighborSlot::padding(),
        })
        .collect();

    // Which payloads to fetch. Under pruning the kept set is ranked from
    // timestamps alone, before any payload is read; this duplicates the
    // logit computation the kernel performs (counted once, in the kernel).
    let fetch: Vec<usize> = if cfg.variant.prunes() {
        let mut scratch = MacCount::default();
        let logits = slot_logits(now, &slots, &params.sat, &mut scratch);
        prune_topk(&logits, cfg.budget)
    } else {
        (0..slots.len()).filter(|&i| slots[i].valid).collect()
    };

    let mut gnn_mem = dims.d_feat as u64;
    for &i in &fetch {
        let rec = ctx.slots_raw[i].as_ref().expect("fetch targets a valid slot");
        slots[i].payload = Some(SlotPayload {
            memory: store.memory(rec.nbr).memory,
            feat: store.node_feat(rec.nbr),
            edge_feat: store.edge_feat(rec.edge_id),
        });
        gnn_mem += (dims.d_mem + dims.d_feat + dims.d_edge) as u64;
    }

    let mut gnn_macs = MacCount::default();
    let (embedding, distill) = match cfg.variant {
        ModelVariant::Baseline => {
            let out = vanilla_attention(
                &new_mem,
                &ctx.self_feat,
                now,
                &slots,
                &params.attn,
                &params.encoder,
                &mut gnn_macs,
            )?;
            let sample = collect_distill.then(|| DistillSample {
                dt_vec: slots
                    .iter()
                    .map(|s| if s.valid { now - s.timestamp } else { 0.0 })
                    .collect(),
                teacher_logits: out.logits.clone(),
                mask: slots.iter().map(|s| !s.valid).collect(),
            });
            (out.embedding, sample)
        }
        _ => {
            let budget = effective_keep(cfg);
            let out = simplified_embedding(
                &new_mem,
                &ctx.self_feat,
                now,
                &slots,
                budget,
                &params.sat,
                &params.attn,
                &params.output,
                time_path,
                &mut gnn_macs,
            )?;
            debug_assert_eq!(out.values_computed, out.kept.len() + 1);
            debug_assert_eq!(out.kept, fetch);
            (out.embedding, None)
        }
    };

    let mut time_samples = Vec::new();
    if cfg.record_time_samples {
        if let Some(m) = &ctx.mail {
            time_samples.push(ctx.earliest - m.msg_timestamp);
        }
        for &i in &fetch {
            time_samples.push(now - slots[i].timestamp);
        }
        time_samples.push(0.0); // self slot / query encoding
    }

    Ok(VertexResult {
        new_mem,
        gru_ran,
        embedding,
        memory_macs: memory_macs.0,
        gnn_macs: gnn_macs.0,
        gnn_mem,
        distill,
        time_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Dims;

    fn edge(id: u64, src: u64, dst: u64, t: f64, d_edge: usize) -> TemporalEdge {
        TemporalEdge {
            edge_id: id,
            src,
            dst,
            timestamp: t,
            features: vec![0.25; d_edge],
        }
    }

    fn small_cfg(variant: ModelVariant) -> EngineConfig {
        let mut cfg = EngineConfig::small(variant);
        cfg.parallel = false;
        cfg
    }

    fn engine(variant: ModelVariant) -> Engine {
        let cfg = small_cfg(variant);
        let mut params = ModelParams::random(&cfg.dims, cfg.n, 9);
        if variant.uses_lut() {
            params.build_lut(&[0.1, 0.5, 1.0, 2.0, 5.0], 4, &cfg.dims).unwrap();
        }
        Engine::new(cfg, params).unwrap()
    }

    #[test]
    fn cold_start_single_edge_trace() {
        let mut eng = engine(ModelVariant::Baseline);
        let out = eng.process_batch(&[edge(0, 1, 2, 1.0, 3)]).unwrap();
        assert_eq!(out.embeddings.len(), 2);
        // No mailbox existed, so no GRU ran and memories stay zero.
        assert_eq!(eng.counters().memory.mac, 0);
        assert_eq!(eng.store().memory(1).memory, vec![0.0; 4]);
        // Afterwards both mailboxes are present and each ring holds one record.
        assert!(eng.store().mailbox(1).is_some());
        assert!(eng.store().mailbox(2).is_some());
        assert_eq!(eng.store().neighbor_ring(1).len(), 1);
        assert_eq!(eng.store().neighbor_ring(2).len(), 1);
        assert_eq!(eng.store().neighbor_ring(1)[0].nbr, 2);
    }

    #[test]
    fn second_batch_consumes_the_mailbox() {
        let mut eng = engine(ModelVariant::Baseline);
        eng.process_batch(&[edge(0, 1, 2, 1.0, 3)]).unwrap();
        eng.process_batch(&[edge(1, 1, 3, 2.0, 3)]).unwrap();
        // Vertex 1 had a cached message, so its memory moved off zero.
        assert_ne!(eng.store().memory(1).memory, vec![0.0; 4]);
        assert_eq!(eng.store().memory(1).last_update, 2.0);
        // Vertex 3 was cold.
        assert_eq!(eng.store().memory(3).memory, vec![0.0; 4]);
    }

    #[test]
    fn non_chronological_batch_is_rejected() {
        let mut eng = engine(ModelVariant::Baseline);
        eng.process_batch(&[edge(0, 1, 2, 5.0, 3)]).unwrap();
        let err = eng.process_batch(&[edge(1, 1, 2, 4.0, 3)]);
        assert!(matches!(err, Err(Error::StreamOrder { .. })));
    }

    #[test]
    fn updater_and_direct_paths_agree() {
        let mut with = engine(ModelVariant::Sat);
        let mut cfg2 = small_cfg(ModelVariant::Sat);
        cfg2.updater_enabled = false;
        let params = ModelParams::random(&cfg2.dims, cfg2.n, 9);
        let mut without = Engine::new(cfg2, params).unwrap();

        let stream: Vec<TemporalEdge> = (0..40)
            .map(|i| edge(i, i % 5, (i + 2) % 5, i as f64 * 0.5, 3))
            .collect();
        let a = with.run_stream(&stream).unwrap();
        let b = without.run_stream(&stream).unwrap();
        assert_eq!(a.batches, b.batches);
        for v in 0..5u64 {
            assert_eq!(with.store().memory(v), without.store().memory(v));
            assert_eq!(with.store().neighbor_ring(v), without.store().neighbor_ring(v));
            assert_eq!(with.store().mailbox(v), without.store().mailbox(v));
        }
    }

    #[test]
    fn fixed_window_partition() {
        let edges = vec![
            edge(0, 0, 1, 0.0, 3),
            edge(1, 1, 2, 100.0, 3),
            edge(2, 2, 3, 1000.0, 3),
        ];
        let parts = partition_batches(&edges, &BatchPolicy::FixedWindow(900.0));
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].len(), 2);
        assert_eq!(parts[1].len(), 1);
    }

    #[test]
    fn empty_stream_yields_zero_metrics() {
        let mut eng = engine(ModelVariant::Baseline);
        let out = eng.run_stream(&[]).unwrap();
        assert_eq!(out.metrics.edges_processed, 0);
        assert_eq!(out.metrics.throughput_eps, 0.0);
        assert!(out.batches.is_empty());
    }

    #[test]
    fn throughput_is_edges_over_seconds() {
        let m = RunMetrics {
            edges_processed: 200,
            execution_seconds: 0.1,
            throughput_eps: 200.0 / 0.1,
            per_batch_latency: vec![],
        };
        assert!((m.throughput_eps - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn variant_mismatch_without_lut_fails_fast() {
        let cfg = small_cfg(ModelVariant::SatLut);
        let params = ModelParams::random(&cfg.dims, cfg.n, 1);
        assert!(Engine::new(cfg, params).is_err());
    }

    #[test]
    fn window_grouping_uses_absolute_grid() {
        let dims = Dims { d_mem: 2, d_edge: 0, d_feat: 0, d_time: 2, d_k: 2, d_emb: 2 };
        let _ = dims;
        let edges = vec![
            edge(0, 0, 1, 850.0, 3),
            edge(1, 1, 2, 899.0, 3),
            edge(2, 2, 3, 901.0, 3),
        ];
        let parts = partition_batches(&edges, &BatchPolicy::FixedWindow(900.0));
        assert_eq!(parts.len(), 2);
    }
}
