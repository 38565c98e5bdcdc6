//! Per-core data-cache front end: the bank selector, which splits a
//! wavefront's lane requests across banks and coalesces same-line lanes
//! through virtual ports, and the bank merger, which reassembles the lane
//! responses of each request before handing them back.

use std::collections::{BTreeMap, VecDeque};

use super::bank::{BankOp, Payload};
use super::cache::{bank_index, Cache};
use super::{Completion, LaneAccess, RequestTag};

/// One fused bank access produced by the selector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub bank: u32,
    pub line: u32,
    /// Indices into the lane request slice, at most one per virtual port.
    pub lanes: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Selection {
    pub groups: Vec<Group>,
    pub deferred: Vec<usize>,
}

/// Picks at most one access per bank. The lowest remaining lane of each
/// bank fixes the line; other lanes of the same line join through virtual
/// port `lane mod ports` when that port is still free. Everything else is
/// deferred to a later cycle.
pub fn select_and_coalesce(reqs: &[LaneAccess], line_size: u32, banks: u32, ports: u32) -> Selection {
    let mut sel = Selection::default();
    let mut by_bank: Vec<Option<(usize, u32)>> = vec![None; banks as usize];
    for (i, r) in reqs.iter().enumerate() {
        let b = bank_index(r.addr, line_size, banks) as usize;
        let line = r.addr & !(line_size - 1);
        let port = r.lane as u32 % ports;
        match by_bank[b] {
            None => {
                by_bank[b] = Some((sel.groups.len(), 1 << port));
                sel.groups.push(Group { bank: b as u32, line, lanes: vec![i] });
            }
            Some((g, used)) => {
                if sel.groups[g].line == line && used & (1 << port) == 0 {
                    by_bank[b] = Some((g, used | 1 << port));
                    sel.groups[g].lanes.push(i);
                } else {
                    sel.deferred.push(i);
                }
            }
        }
    }
    sel
}

#[derive(Debug)]
struct Batch {
    tag: RequestTag,
    remaining: Vec<(LaneAccess, bool)>,
}

#[derive(Debug)]
struct Collect {
    tag: RequestTag,
    expected: usize,
    got: Vec<(u16, u32)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PortStats {
    pub requests: u64,
    pub clean: u64,
    pub deferrals: u64,
    pub batches: u64,
}

#[derive(Debug)]
pub struct CorePort {
    cap: usize,
    queue: VecDeque<Batch>,
    merger: BTreeMap<u64, Collect>,
    ready: Vec<Completion>,
    pub stats: PortStats,
}

impl CorePort {
    pub fn new(cap: u32) -> Self {
        CorePort {
            cap: cap as usize,
            queue: VecDeque::new(),
            merger: BTreeMap::new(),
            ready: Vec::new(),
            stats: PortStats::default(),
        }
    }

    pub fn can_submit(&self) -> bool {
        self.queue.len() < self.cap
    }

    pub fn submit(&mut self, tag: RequestTag, lanes: Vec<LaneAccess>) {
        debug_assert!(self.can_submit());
        debug_assert!(!self.merger.contains_key(&tag.token), "duplicate token");
        self.stats.batches += 1;
        self.stats.requests += lanes.len() as u64;
        if lanes.is_empty() {
            self.ready.push(Completion { tag, data: vec![] });
            return;
        }
        self.merger.insert(tag.token, Collect { tag, expected: lanes.len(), got: Vec::with_capacity(lanes.len()) });
        self.queue.push_back(Batch { tag, remaining: lanes.into_iter().map(|l| (l, false)).collect() });
    }

    /// Runs the selector for one cycle on the head batch.
    pub fn issue(&mut self, cache: &mut Cache) {
        let Some(head) = self.queue.front_mut() else { return };
        let reqs: Vec<LaneAccess> = head.remaining.iter().map(|(l, _)| *l).collect();
        let sel = select_and_coalesce(&reqs, cache.cfg.line_size, cache.cfg.banks, cache.cfg.ports);
        let mut issued = vec![false; reqs.len()];
        for g in &sel.groups {
            let bank = &mut cache.banks[g.bank as usize];
            if !bank.can_accept() {
                continue;
            }
            let lanes = g.lanes.iter().map(|&i| reqs[i]).collect();
            bank.push(BankOp { line: g.line, payload: Payload::Core { tag: head.tag, lanes } });
            for &i in &g.lanes {
                issued[i] = true;
                if !head.remaining[i].1 {
                    self.stats.clean += 1;
                }
            }
        }
        for &i in &sel.deferred {
            head.remaining[i].1 = true;
            self.stats.deferrals += 1;
        }
        let mut k = 0;
        head.remaining.retain(|_| {
            k += 1;
            !issued[k - 1]
        });
        if head.remaining.is_empty() {
            self.queue.pop_front();
        }
    }

    /// Bank merger: collects one bank's lane responses.
    pub fn respond(&mut self, tag: RequestTag, data: Vec<(u16, u32)>) {
        let c = self.merger.get_mut(&tag.token).expect("response for unknown request");
        debug_assert_eq!(c.tag, tag, "tag corrupted in flight");
        c.got.extend(data);
        if c.got.len() == c.expected {
            let mut c = self.merger.remove(&tag.token).unwrap();
            c.got.sort_by_key(|&(lane, _)| lane);
            self.ready.push(Completion { tag: c.tag, data: c.got });
        }
    }

    pub fn take_ready(&mut self) -> Vec<Completion> {
        std::mem::take(&mut self.ready)
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty() && self.merger.is_empty() && self.ready.is_empty()
    }
}
