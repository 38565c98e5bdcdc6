//! Backing store for the RAM region. Pages are allocated on first write so
//! that many simulator instances can coexist in one process.

const PAGE_BITS: u32 = 12;
const PAGE: usize = 1 << PAGE_BITS;

#[derive(Clone)]
pub struct Ram {
    base: u32,
    size: u32,
    pages: Vec<Option<Box<[u8; PAGE]>>>,
}

impl std::fmt::Debug for Ram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let resident = self.pages.iter().filter(|p| p.is_some()).count();
        f.debug_struct("Ram")
            .field("base", &format_args!("{:#x}", self.base))
            .field("size", &self.size)
            .field("resident_pages", &resident)
            .finish()
    }
}

impl Ram {
    pub fn new(base: u32, size: u32) -> Self {
        let n = (size as usize).div_ceil(PAGE);
        Ram { base, size, pages: vec![None; n] }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn contains(&self, addr: u32, len: u32) -> bool {
        addr >= self.base && (addr - self.base) as u64 + len as u64 <= self.size as u64
    }

    pub fn clear(&mut self) {
        self.pages.iter_mut().for_each(|p| *p = None);
    }

    fn locate(&self, addr: u32) -> (usize, usize) {
        debug_assert!(self.contains(addr, 1), "address {addr:#x} outside RAM");
        let off = (addr - self.base) as usize;
        (off >> PAGE_BITS, off & (PAGE - 1))
    }

    /// Copies `out.len()` bytes starting at `addr`. Untouched memory reads as zero.
    pub fn read(&self, addr: u32, out: &mut [u8]) {
        let mut done = 0;
        while done < out.len() {
            let (page, off) = self.locate(addr + done as u32);
            let n = (PAGE - off).min(out.len() - done);
            match &self.pages[page] {
                Some(p) => out[done..done + n].copy_from_slice(&p[off..off + n]),
                None => out[done..done + n].fill(0),
            }
            done += n;
        }
    }

    pub fn write(&mut self, addr: u32, data: &[u8]) {
        let mut done = 0;
        while done < data.len() {
            let (page, off) = self.locate(addr + done as u32);
            let n = (PAGE - off).min(data.len() - done);
            let p = self.pages[page].get_or_insert_with(|| Box::new([0; PAGE]));
            p[off..off + n].copy_from_slice(&data[done..done + n]);
            done += n;
        }
    }

    /// Writes the bytes of `data` whose bit is set in `mask`.
    pub fn write_masked(&mut self, addr: u32, data: &[u8], mask: u128) {
        if data.len() <= 128 && mask == (u128::MAX >> (128 - data.len())) {
            return self.write(addr, data);
        }
        for (i, &b) in data.iter().enumerate() {
            if mask >> i & 1 != 0 {
                self.write(addr + i as u32, &[b]);
            }
        }
    }

    pub fn read_u32(&self, addr: u32) -> u32 {
        let mut b = [0; 4];
        self.read(addr, &mut b);
        u32::from_le_bytes(b)
    }

    pub fn write_u32(&mut self, addr: u32, value: u32) {
        self.write(addr, &value.to_le_bytes());
    }
}
