use crate::error::FaultKind;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    expected: u32,
    remaining: u32,
    /// Stalled wavefronts, one mask per core.
    waiting: Vec<u32>,
}

/// Outcome of one arrival.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arrival {
    /// The arriving wavefront stalls.
    Wait,
    /// The barrier completed; the masks (one per core) name the wavefronts
    /// to release.
    Release(Vec<u32>),
}

/// A barrier table. The local table of a core has one core slot; the
/// global table has one per core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarrierTable {
    entries: Vec<Option<Entry>>,
    cores: usize,
    /// Largest count that can ever arrive.
    capacity: u32,
}

impl BarrierTable {
    pub fn new(size: u32, cores: usize, capacity: u32) -> Self {
        BarrierTable { entries: vec![None; size as usize], cores, capacity }
    }

    pub fn arrive(&mut self, id: u32, index: u32, expected: u32, core: usize, wid: u32) -> Result<Arrival, FaultKind> {
        let slot = self.entries.get_mut(index as usize).ok_or(FaultKind::BadBarrier { id })?;
        if expected == 0 || expected > self.capacity {
            return Err(FaultKind::BadBarrierCount { id, count: expected });
        }
        let e = slot.get_or_insert_with(|| Entry { expected, remaining: expected, waiting: vec![0; self.cores] });
        if e.expected != expected {
            return Err(FaultKind::BarrierMismatch { id, armed: e.expected, got: expected });
        }
        e.remaining -= 1;
        if e.remaining == 0 {
            let e = slot.take().unwrap();
            Ok(Arrival::Release(e.waiting))
        } else {
            e.waiting[core] |= 1 << wid;
            Ok(Arrival::Wait)
        }
    }

    /// Whether no barrier is armed.
    pub fn is_clear(&self) -> bool {
        self.entries.iter().all(Option::is_none)
    }
}
