//! Per-core scratchpad: word-interleaved banks, one per thread lane.

use super::LaneAccess;

#[derive(Debug, Clone)]
pub struct SharedMem {
    data: Vec<u8>,
    banks: u32,
    pub accesses: u64,
    pub conflict_cycles: u64,
}

impl SharedMem {
    pub fn new(size: u32, banks: u32) -> Self {
        SharedMem { data: vec![0; size as usize], banks: banks.max(1), accesses: 0, conflict_cycles: 0 }
    }

    pub fn size(&self) -> u32 {
        self.data.len() as u32
    }

    /// Cycles needed to serve `offsets` (byte offsets into the window): the
    /// largest number of lanes that fall into one bank.
    pub fn cycles_for(&self, offsets: impl IntoIterator<Item = u32>) -> u32 {
        let mut per_bank = vec![0u32; self.banks as usize];
        for off in offsets {
            per_bank[((off / 4) % self.banks) as usize] += 1;
        }
        per_bank.into_iter().max().unwrap_or(0).max(1)
    }

    /// Applies one lane access (offset-relative address) and returns the
    /// word previously held.
    pub fn access(&mut self, a: &LaneAccess) -> u32 {
        let off = (a.addr & !3) as usize;
        let word = &mut self.data[off..off + 4];
        let old = u32::from_le_bytes(word.try_into().unwrap());
        if a.wmask != 0 {
            let bytes = a.data.to_le_bytes();
            for (b, w) in word.iter_mut().enumerate() {
                if a.wmask & (1 << b) != 0 {
                    *w = bytes[b];
                }
            }
        }
        self.accesses += 1;
        old
    }

    pub fn read_u32(&self, offset: u32) -> u32 {
        let o = offset as usize;
        u32::from_le_bytes(self.data[o..o + 4].try_into().unwrap())
    }
}
