//! Mutable dynamic-graph state: vertex mailbox, memory table, neighbor
//! rings with FIFO most-recent semantics, and static feature stores.
//!
//! The neighbor ring replaces a temporal sampler: because the stream is
//! chronological, the `mr` most recently inserted records are exactly the
//! `mr` most recent temporal neighbors, already sorted by timestamp.

use crate::error::{Error, Result};
use std::collections::{HashMap, VecDeque};

pub type VertexId = u64;
pub type EdgeId = u64;

/// One timestamped interaction; the unit of the input stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEdge {
    pub edge_id: EdgeId,
    pub src: VertexId,
    pub dst: VertexId,
    /// Seconds since stream start; non-decreasing along the stream.
    pub timestamp: f64,
    pub features: Vec<f64>,
}

/// Cached raw message (`s_self || s_other || f_e`) awaiting consumption.
///
/// The time encoding is *not* cached; Δt is computed when the message is
/// consumed, as `consumer timestamp - msg_timestamp`.
#[derive(Debug, Clone, PartialEq)]
pub struct MailboxEntry {
    pub raw_message: Vec<f64>,
    pub msg_timestamp: f64,
}

/// Per-vertex memory vector and the time of its last write.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub memory: Vec<f64>,
    pub last_update: f64,
}

/// One slot of a vertex's most-recent-neighbor ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborRecord {
    pub nbr: VertexId,
    pub edge_id: EdgeId,
    pub timestamp: f64,
}

/// FIFO ring of the `mr` most recent neighbor records, insertion order.
#[derive(Debug, Clone, Default)]
pub struct NeighborRing {
    records: VecDeque<NeighborRecord>,
    capacity: usize,
}

impl NeighborRing {
    pub fn new(capacity: usize) -> Self {
        NeighborRing {
            records: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    /// Appends a record, evicting the oldest when full.
    pub fn push(&mut self, rec: NeighborRecord) {
        debug_assert!(
            self.records
                .back()
                .map_or(true, |last| rec.timestamp >= last.timestamp),
            "neighbor insertions must be chronological"
        );
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The `n` most recently inserted records, oldest first, left-padded
    /// with `None` when fewer than `n` exist.
    pub fn recent(&self, n: usize) -> Vec<Option<NeighborRecord>> {
        debug_assert!(n <= self.capacity, "requested more slots than capacity");
        let have = self.records.len().min(n);
        let mut out = vec![None; n - have];
        out.extend(
            self.records
                .iter()
                .skip(self.records.len() - have)
                .copied()
                .map(Some),
        );
        out
    }

    pub fn records(&self) -> impl Iterator<Item = &NeighborRecord> {
        self.records.iter()
    }

    pub fn to_vec(&self) -> Vec<NeighborRecord> {
        self.records.iter().copied().collect()
    }

    /// Replaces the ring contents with the given (chronological) records.
    pub fn replace(&mut self, records: Vec<NeighborRecord>) {
        debug_assert!(records.len() <= self.capacity);
        self.records = records.into();
    }
}

/// All mutable dynamic-graph state plus the static feature stores.
#[derive(Debug, Clone)]
pub struct GraphStore {
    d_mem: usize,
    d_edge: usize,
    d_feat: usize,
    mr: usize,
    memory: HashMap<VertexId, MemoryEntry>,
    mailbox: HashMap<VertexId, MailboxEntry>,
    neighbors: HashMap<VertexId, NeighborRing>,
    node_feats: HashMap<VertexId, Vec<f64>>,
    edge_feats: HashMap<EdgeId, Vec<f64>>,
}

impl GraphStore {
    pub fn new(d_mem: usize, d_edge: usize, d_feat: usize, mr: usize) -> Self {
        GraphStore {
            d_mem,
            d_edge,
            d_feat,
            mr,
            memory: HashMap::new(),
            mailbox: HashMap::new(),
            neighbors: HashMap::new(),
            node_feats: HashMap::new(),
            edge_feats: HashMap::new(),
        }
    }

    pub fn mr(&self) -> usize {
        self.mr
    }

    /// Memory entry for `v`; unseen vertices read as zero with last_update 0.
    pub fn memory(&self, v: VertexId) -> MemoryEntry {
        self.memory.get(&v).cloned().unwrap_or(MemoryEntry {
            memory: vec![0.0; self.d_mem],
            last_update: 0.0,
        })
    }

    pub fn set_memory(&mut self, v: VertexId, memory: Vec<f64>, timestamp: f64) -> Result<()> {
        if memory.len() != self.d_mem {
            return Err(Error::DimMismatch {
                what: "memory vector",
                expected: self.d_mem,
                actual: memory.len(),
            });
        }
        let entry = self.memory.entry(v).or_insert(MemoryEntry {
            memory: vec![0.0; self.d_mem],
            last_update: 0.0,
        });
        debug_assert!(timestamp >= entry.last_update, "last_update must not decrease");
        entry.memory = memory;
        entry.last_update = timestamp;
        Ok(())
    }

    pub fn mailbox(&self, v: VertexId) -> Option<&MailboxEntry> {
        self.mailbox.get(&v)
    }

    pub fn set_mailbox(&mut self, v: VertexId, entry: MailboxEntry) -> Result<()> {
        let expected = 2 * self.d_mem + self.d_edge;
        if entry.raw_message.len() != expected {
            return Err(Error::DimMismatch {
                what: "raw message",
                expected,
                actual: entry.raw_message.len(),
            });
        }
        self.mailbox.insert(v, entry);
        Ok(())
    }

    /// The `n` most recent neighbor records of `v`, oldest first, padded
    /// with `None`. Unknown vertices yield an all-padding list.
    pub fn recent_neighbors(&self, v: VertexId, n: usize) -> Vec<Option<NeighborRecord>> {
        match self.neighbors.get(&v) {
            Some(ring) => ring.recent(n),
            None => vec![None; n],
        }
    }

    pub fn update_neighbor(&mut self, v: VertexId, rec: NeighborRecord) {
        self.neighbors
            .entry(v)
            .or_insert_with(|| NeighborRing::new(self.mr))
            .push(rec);
    }

    pub fn neighbor_ring(&self, v: VertexId) -> Vec<NeighborRecord> {
        self.neighbors.get(&v).map(|r| r.to_vec()).unwrap_or_default()
    }

    /// Replaces `v`'s neighbor table row (the updater writes whole rows).
    pub fn set_neighbor_ring(&mut self, v: VertexId, records: Vec<NeighborRecord>) {
        self.neighbors
            .entry(v)
            .or_insert_with(|| NeighborRing::new(self.mr))
            .replace(records);
    }

    pub fn node_feat(&self, v: VertexId) -> Vec<f64> {
        self.node_feats
            .get(&v)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.d_feat])
    }

    pub fn set_node_feat(&mut self, v: VertexId, feat: Vec<f64>) -> Result<()> {
        if feat.len() != self.d_feat {
            return Err(Error::DimMismatch {
                what: "node feature vector",
                expected: self.d_feat,
                actual: feat.len(),
            });
        }
        self.node_feats.insert(v, feat);
        Ok(())
    }

    pub fn edge_feat(&self, e: EdgeId) -> Vec<f64> {
        self.edge_feats
            .get(&e)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.d_edge])
    }

    pub fn set_edge_feat(&mut self, e: EdgeId, feat: Vec<f64>) -> Result<()> {
        if feat.len() != self.d_edge {
            return Err(Error::DimMismatch {
                what: "edge feature vector",
                expected: self.d_edge,
                actual: feat.len(),
            });
        }
        self.edge_feats.insert(e, feat);
        Ok(())
    }
}
