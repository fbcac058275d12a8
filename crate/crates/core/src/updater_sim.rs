//! Discrete simulator of the Updater: a fully-associative ring cache with
//! per-CU rotating write pointers and a commit pointer that scans a fixed
//! window of consecutive lines per cycle.
//!
//! Submissions arrive in round-robin rounds across CUs, so ring position
//! encodes arrival order and the commit scan preserves chronology. A new
//! submission invalidates any still-uncommitted line holding the same
//! vertex, eliding superseded writes.

use crate::graph_store::VertexId;
use std::fmt;

/// One occupied cache line. Freed lines are `None` in the ring.
#[derive(Debug, Clone)]
pub struct CacheLine<P> {
    pub vid: VertexId,
    pub payload: P,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdaterStats {
    pub submissions: u64,
    pub commits: u64,
    pub invalidations: u64,
    pub stall_cycles: u64,
    pub commit_cycles: u64,
}

/// Per-cycle event record, line-delimited via `Display`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Submit { cycle: u64, cu: usize, vid: VertexId, line: usize },
    Invalidate { cycle: u64, vid: VertexId, line: usize },
    Commit { cycle: u64, vid: VertexId, line: usize },
    SkipInvalid { cycle: u64, vid: VertexId, line: usize },
    Stall { cycle: u64, cu: usize, line: usize },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Submit { cycle, cu, vid, line } => {
                write!(f, "cycle={cycle} event=submit cu={cu} vid={vid} line={line}")
            }
            TraceEvent::Invalidate { cycle, vid, line } => {
                write!(f, "cycle={cycle} event=invalidate vid={vid} line={line}")
            }
            TraceEvent::Commit { cycle, vid, line } => {
                write!(f, "cycle={cycle} event=commit vid={vid} line={line}")
            }
            TraceEvent::SkipInvalid { cycle, vid, line } => {
                write!(f, "cycle={cycle} event=skip-invalid vid={vid} line={line}")
            }
            TraceEvent::Stall { cycle, cu, line } => {
                write!(f, "cycle={cycle} event=stall cu={cu} line={line}")
            }
        }
    }
}

/// Outcome of a scheduled run: the commit stream and cycles consumed.
#[derive(Debug, Clone)]
pub struct RunOutcome<P> {
    pub committed: Vec<(VertexId, P)>,
    pub cycles: u64,
}

#[derive(Debug, Clone)]
pub struct UpdaterSim<P> {
    lines: Vec<Option<CacheLine<P>>>,
    write_ptrs: Vec<usize>,
    commit_ptr: usize,
    scan_width: usize,
    n_cu: usize,
    next_cu: usize,
    cycle: u64,
    stats: UpdaterStats,
    trace: Option<Vec<TraceEvent>>,
}

impl<P: Clone> UpdaterSim<P> {
    pub fn new(lines: usize, n_cu: usize, scan_width: usize) -> Self {
        assert!(lines >= n_cu && n_cu >= 1 && scan_width >= 1);
        UpdaterSim {
            lines: (0..lines).map(|_| None).collect(),
            write_ptrs: (0..n_cu).collect(),
            commit_ptr: 0,
            scan_width,
            n_cu,
            next_cu: 0,
            cycle: 0,
            stats: UpdaterStats::default(),
            trace: None,
        }
    }

    pub fn enable_trace(&mut self) {
        if self.trace.is_none() {
            self.trace = Some(Vec::new());
        }
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn stats(&self) -> UpdaterStats {
        self.stats
    }

    pub fn is_empty(&self) -> bool {
        self.lines.iter().all(|l| l.is_none())
    }

    fn emit(&mut self, ev: TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(ev);
        }
    }

    /// Writes `payload` to `cu`'s current line, invalidating any
    /// still-uncommitted valid line with the same vertex id. If the target
    /// line is occupied the submission stalls, running commit cycles until
    /// it frees; records committed during the stall are returned.
    pub fn submit(&mut self, cu: usize, vid: VertexId, payload: P) -> Vec<(VertexId, P)> {
        assert!(cu < self.n_cu, "cu_id out of range");
        let target = self.write_ptrs[cu];
        let mut flushed = Vec::new();
        while self.lines[target].is_some() {
            self.stats.stall_cycles += 1;
            self.emit(TraceEvent::Stall { cycle: self.cycle, cu, line: target });
            let occupied_before = self.lines.iter().filter(|l| l.is_some()).count();
            flushed.extend(self.commit_cycle());
            let occupied_after = self.lines.iter().filter(|l| l.is_some()).count();
            assert!(
                occupied_after < occupied_before,
                "updater stalled without progress; submissions must follow round-robin order"
            );
        }

        for (idx, slot) in self.lines.iter_mut().enumerate() {
            if let Some(line) = slot {
                if line.valid && line.vid == vid {
                    line.valid = false;
                    self.stats.invalidations += 1;
                    if let Some(t) = self.trace.as_mut() {
                        t.push(TraceEvent::Invalidate { cycle: self.cycle, vid, line: idx });
                    }
                }
            }
        }

        self.lines[target] = Some(CacheLine { vid, payload, valid: true });
        self.stats.submissions += 1;
        self.emit(TraceEvent::Submit { cycle: self.cycle, cu, vid, line: target });
        self.write_ptrs[cu] = (target + self.n_cu) % self.lines.len();
        flushed
    }

    /// Scans up to `scan_width` consecutive lines from the commit pointer.
    /// Valid lines are committed in ring order, invalid lines are freed
    /// silently, and the scan stops at the first unoccupied line.
    pub fn commit_cycle(&mut self) -> Vec<(VertexId, P)> {
        self.cycle += 1;
        self.stats.commit_cycles += 1;
        let len = self.lines.len();
        let mut out = Vec::new();
        for _ in 0..self.scan_width {
            let idx = self.commit_ptr;
            match self.lines[idx].take() {
                None => break,
                Some(line) => {
                    if line.valid {
                        self.stats.commits += 1;
                        self.emit(TraceEvent::Commit { cycle: self.cycle, vid: line.vid, line: idx });
                        out.push((line.vid, line.payload));
                    } else {
                        self.emit(TraceEvent::SkipInvalid { cycle: self.cycle, vid: line.vid, line: idx });
                    }
                    self.commit_ptr = (idx + 1) % len;
                }
            }
        }
        out
    }

    /// Runs commit cycles until the cache is empty. Returns the
    /// concatenated commit stream and the cycles consumed.
    pub fn drain(&mut self) -> RunOutcome<P> {
        let mut committed = Vec::new();
        let mut cycles = 0;
        while !self.is_empty() {
            committed.extend(self.commit_cycle());
            cycles += 1;
        }
        RunOutcome { committed, cycles }
    }

    /// Engine-facing schedule: assigns submissions to CUs round-robin
    /// (continuing from the previous call), runs one commit cycle after
    /// each full round, and drains at the end.
    pub fn run_round_robin(
        &mut self,
        submissions: impl IntoIterator<Item = (VertexId, P)>,
    ) -> RunOutcome<P> {
        let mut committed = Vec::new();
        let mut cycles = 0u64;
        let mut in_round = 0usize;
        for (vid, payload) in submissions {
            let cu = self.next_cu;
            self.next_cu = (self.next_cu + 1) % self.n_cu;
            committed.extend(self.submit(cu, vid, payload));
            in_round += 1;
            if in_round == self.n_cu {
                in_round = 0;
                committed.extend(self.commit_cycle());
                cycles += 1;
            }
        }
        let tail = self.drain();
        committed.extend(tail.committed);
        RunOutcome {
            committed,
            cycles: cycles + tail.cycles,
        }
    }
}
