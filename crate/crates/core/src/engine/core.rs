use std::collections::HashMap;

use super::alu::{branch_taken, fp_op, int_op};
use super::barrier::{Arrival, BarrierTable};
use super::ipdom::{self, IpdomEntry};
use super::sched::SchedulerMasks;
use super::trace::TraceRecord;
use crate::config::ProcessorConfig;
use crate::error::{FaultKind, SimFault};
use crate::isa::{decode, ExtOp, InstrKind, Instruction, Op, RegFile};
use crate::mem::shared::SharedMem;
use crate::mem::{Completion, LaneAccess, MemSystem, ReqKind, RequestTag};
use crate::runtime::{self, classify, Region, BARRIER_GLOBAL_BIT};
use crate::texture::{TexRequest, TexResult, TextureCsrs, TextureUnit};

/// Ready time of a register whose producer has not written back yet.
const NOT_READY: u64 = u64::MAX;

/// Architectural and timing state of one wavefront.
#[derive(Debug, Clone)]
pub struct Wavefront {
    pub pc: u32,
    pub tmask: u32,
    pub ipdom: Vec<IpdomEntry>,
    pub iregs: Vec<[u32; 32]>,
    pub fregs: Vec<[u32; 32]>,
    /// Cycle from which each register (x0..x31, f0..f31) may be read.
    ready_at: [u64; 64],
    /// The line holding `pc` has been delivered by the I-cache.
    fetched: bool,
    /// Bumped on every spawn so stale load responses are dropped.
    epoch: u32,
}

impl Wavefront {
    fn new(threads: usize) -> Self {
        Wavefront {
            pc: 0,
            tmask: 0,
            ipdom: Vec::new(),
            iregs: vec![[0; 32]; threads],
            fregs: vec![[0; 32]; threads],
            ready_at: [0; 64],
            fetched: false,
            epoch: 0,
        }
    }

    /// Whether a long-latency result is still outstanding.
    pub fn scoreboard_busy(&self) -> bool {
        self.ready_at.contains(&NOT_READY)
    }
}

fn reg_slot(file: RegFile, r: u8) -> usize {
    r as usize + if file == RegFile::Float { 32 } else { 0 }
}

struct PendingLoad {
    wid: u32,
    epoch: u32,
    rd: u8,
    file: RegFile,
    op: Op,
    /// Lanes served by the data cache and their byte addresses.
    ram: Vec<(u16, u32)>,
    /// Lanes already resolved from shared memory or the console.
    values: Vec<(u16, u32)>,
}

/// What a core needs from the processor during one cycle.
pub(crate) struct StepCtx<'a> {
    pub now: u64,
    pub mem: &'a mut MemSystem,
    pub globals: &'a mut BarrierTable,
    pub releases: &'a mut Vec<Vec<u32>>,
    pub console: &'a mut Vec<u8>,
    pub trace: Option<&'a mut Vec<TraceRecord>>,
}

enum Issue {
    Done,
    Stall,
}

/// One SIMT core.
pub struct Core {
    pub id: u32,
    cfg: ProcessorConfig,
    pub wavefronts: Vec<Wavefront>,
    pub masks: SchedulerMasks,
    barriers: BarrierTable,
    pub shared: SharedMem,
    pub tex: TextureUnit,
    pub tex_csrs: TextureCsrs,
    loads: HashMap<u64, PendingLoad>,
    token: u64,
    /// Wavefronts waiting in a `fence`.
    fence_waiters: u32,
    flushing: bool,
    pub instructions: u64,
    pub lane_instructions: u64,
}

impl Core {
    /// A core in its reset state: wavefront 0 runs thread 0 from `entry`.
    pub fn new(id: u32, cfg: &ProcessorConfig, entry: u32) -> Self {
        let nt = cfg.threads as usize;
        let mut wavefronts: Vec<Wavefront> = (0..cfg.wavefronts).map(|_| Wavefront::new(nt)).collect();
        for (w, wf) in wavefronts.iter_mut().enumerate() {
            for (t, regs) in wf.iregs.iter_mut().enumerate() {
                regs[2] = runtime::initial_sp(cfg, id, w as u32, t as u32);
            }
        }
        wavefronts[0].pc = entry;
        wavefronts[0].tmask = 1;
        Core {
            id,
            cfg: cfg.clone(),
            wavefronts,
            masks: SchedulerMasks { active: 1, ..Default::default() },
            barriers: BarrierTable::new(cfg.local_barriers, 1, cfg.wavefronts),
            shared: SharedMem::new(cfg.shm_size, cfg.threads),
            tex: TextureUnit::new(cfg),
            tex_csrs: TextureCsrs::new(cfg.tex_stages),
            loads: HashMap::new(),
            token: 0,
            fence_waiters: 0,
            flushing: false,
            instructions: 0,
            lane_instructions: 0,
        }
    }

    /// No wavefront is active and nothing issued by this core is pending.
    pub fn is_done(&self) -> bool {
        self.masks.active == 0 && self.loads.is_empty() && self.tex.is_idle() && self.fence_waiters == 0
    }

    pub fn barriers_clear(&self) -> bool {
        self.barriers.is_clear()
    }

    pub(crate) fn step(&mut self, ctx: &mut StepCtx) -> Result<(), SimFault> {
        let core = self.id as usize;
        for c in ctx.mem.take_completions(core) {
            self.complete(ctx.now, c);
        }
        for r in self.tex.step(ctx.now, core, ctx.mem, &mut self.token) {
            self.tex_writeback(ctx.now, r);
        }
        self.progress_fence(ctx);
        let Some(wid) = self.masks.schedule_next() else { return Ok(()) };
        let pc = self.wavefronts[wid as usize].pc;
        self.issue(ctx, wid).map_err(|kind| SimFault { core: self.id, wid, pc, kind })
    }

    fn complete(&mut self, now: u64, c: Completion) {
        match c.tag.kind {
            ReqKind::Ifetch => {
                let wid = c.tag.wid;
                self.wavefronts[wid as usize].fetched = true;
                self.masks.set_stalled(wid, false);
            }
            ReqKind::Load => {
                let p = self.loads.remove(&c.tag.token).expect("load response without a pending load");
                let wf = &mut self.wavefronts[p.wid as usize];
                if wf.epoch != p.epoch {
                    return;
                }
                let mut values = p.values;
                for ((lane, addr), (dl, word)) in p.ram.iter().zip(&c.data) {
                    debug_assert_eq!(lane, dl);
                    values.push((*lane, extract(p.op, *word, *addr)));
                }
                write_lanes(wf, p.file, p.rd, &values);
                wf.ready_at[reg_slot(p.file, p.rd)] = now;
            }
            ReqKind::Store => {}
            ReqKind::Texel => self.tex.complete(now, c),
        }
    }

    fn tex_writeback(&mut self, now: u64, r: TexResult) {
        let wf = &mut self.wavefronts[r.wid as usize];
        if wf.ready_at[reg_slot(RegFile::Int, r.rd)] != NOT_READY {
            return;
        }
        write_lanes(wf, RegFile::Int, r.rd, &r.values);
        wf.ready_at[reg_slot(RegFile::Int, r.rd)] = now;
    }

    /// Fence protocol: wait until this core has no data traffic in flight,
    /// flush the L1 data cache, then release every waiting wavefront.
    fn progress_fence(&mut self, ctx: &mut StepCtx) {
        if self.fence_waiters == 0 {
            return;
        }
        let core = self.id as usize;
        if !self.flushing {
            if self.loads.is_empty() && self.tex.is_idle() && ctx.mem.core_quiescent(core) {
                ctx.mem.start_flush(core);
                self.flushing = true;
            }
        } else if ctx.mem.flush_done(core) {
            self.flushing = false;
            for w in 0..self.cfg.wavefronts {
                if self.fence_waiters & (1 << w) != 0 {
                    self.masks.set_stalled(w, false);
                }
            }
            self.fence_waiters = 0;
        }
    }

    fn issue(&mut self, ctx: &mut StepCtx, wid: u32) -> Result<(), FaultKind> {
        let w = wid as usize;
        let core = self.id as usize;
        let pc = self.wavefronts[w].pc;
        if !pc.is_multiple_of(4) {
            return Err(FaultKind::Misaligned { addr: pc, size: 4 });
        }
        if classify(&self.cfg, pc) != Some(Region::Ram) {
            return Err(FaultKind::OutOfRange { addr: pc });
        }
        if !self.wavefronts[w].fetched && !ctx.mem.icache_probe(core, pc) {
            self.token += 1;
            let tag = RequestTag { pc, wid, core: self.id, kind: ReqKind::Ifetch, token: self.token };
            if ctx.mem.icache_fetch(core, tag, pc) {
                self.masks.set_stalled(wid, true);
            }
            return Ok(());
        }
        self.wavefronts[w].fetched = true;
        let ins = decode(ctx.mem.ram.read_u32(pc))?;
        let wf = &self.wavefronts[w];
        let pending = |(file, r): (RegFile, u8)| {
            !(file == RegFile::Int && r == 0) && wf.ready_at[reg_slot(file, r)] > ctx.now
        };
        if ins.sources().any(pending) || ins.dest().is_some_and(pending) {
            return Ok(());
        }
        let tmask = wf.tmask;
        if let Issue::Stall = self.execute(ctx, wid, ins)? {
            return Ok(());
        }
        self.wavefronts[w].fetched = false;
        self.instructions += 1;
        self.lane_instructions += tmask.count_ones() as u64;
        if let Some(t) = ctx.trace.as_deref_mut() {
            t.push(TraceRecord { cycle: ctx.now, core: self.id, wid, pc, tmask, instr: ins });
        }
        Ok(())
    }

    fn lanes(&self, tmask: u32) -> impl Iterator<Item = usize> + use<> {
        (0..self.cfg.threads as usize).filter(move |t| tmask & (1 << t) != 0)
    }

    fn execute(&mut self, ctx: &mut StepCtx, wid: u32, ins: Instruction) -> Result<Issue, FaultKind> {
        use Op::*;
        let w = wid as usize;
        let now = ctx.now;
        let lat = self.cfg.latency;
        let (pc, tmask) = (self.wavefronts[w].pc, self.wavefronts[w].tmask);
        let lead = tmask.trailing_zeros() as usize;
        let lanes: Vec<usize> = self.lanes(tmask).collect();
        let mut next_pc = pc.wrapping_add(4);
        let imm = ins.imm as u32;
        match ins.op.kind() {
            InstrKind::BaseAlu | InstrKind::MulDiv => {
                let wf = &mut self.wavefronts[w];
                for &t in &lanes {
                    let a = wf.iregs[t][ins.rs1 as usize];
                    let v = match ins.op {
                        Lui => imm,
                        Auipc => pc.wrapping_add(imm),
                        Addi | Slti | Sltiu | Xori | Ori | Andi | Slli | Srli | Srai => int_op(ins.op, a, imm),
                        op => int_op(op, a, wf.iregs[t][ins.rs2 as usize]),
                    };
                    set_reg(wf, RegFile::Int, ins.rd, t, v);
                }
                let l = match ins.op {
                    Mul | Mulh | Mulhsu | Mulhu => lat.mul,
                    Div | Divu | Rem | Remu => lat.div,
                    _ => lat.alu,
                };
                mark(wf, RegFile::Int, ins.rd, now + l as u64);
            }
            InstrKind::Fp => {
                let [f1, f2, f3] = ins.op.source_files();
                let wf = &mut self.wavefronts[w];
                let read = |wf: &Wavefront, file: Option<RegFile>, r: u8, t: usize| match file {
                    Some(RegFile::Int) => wf.iregs[t][r as usize],
                    Some(RegFile::Float) => wf.fregs[t][r as usize],
                    None => 0,
                };
                let dest = ins.op.dest_file().expect("FP operations write a register");
                for &t in &lanes {
                    let v = fp_op(ins.op, read(wf, f1, ins.rs1, t), read(wf, f2, ins.rs2, t), read(wf, f3, ins.rs3, t));
                    set_reg(wf, dest, ins.rd, t, v);
                }
                let l = match ins.op {
                    FdivS | FsqrtS => lat.fsqrt,
                    FmvXW | FmvWX | FsgnjS | FsgnjnS | FsgnjxS => lat.alu,
                    _ => lat.fp,
                };
                mark(wf, dest, ins.rd, now + l as u64);
            }
            InstrKind::Branch => {
                let wf = &self.wavefronts[w];
                let (a, b) = (wf.iregs[lead][ins.rs1 as usize], wf.iregs[lead][ins.rs2 as usize]);
                if branch_taken(ins.op, a, b) {
                    next_pc = pc.wrapping_add(imm);
                }
            }
            InstrKind::Jump => {
                let wf = &mut self.wavefronts[w];
                next_pc = match ins.op {
                    Jal => pc.wrapping_add(imm),
                    _ => wf.iregs[lead][ins.rs1 as usize].wrapping_add(imm) & !1,
                };
                for &t in &lanes {
                    set_reg(wf, RegFile::Int, ins.rd, t, pc.wrapping_add(4));
                }
                mark(wf, RegFile::Int, ins.rd, now + lat.alu as u64);
            }
            InstrKind::Load | InstrKind::Store => {
                if let Issue::Stall = self.exec_mem(ctx, wid, ins, &lanes)? {
                    return Ok(Issue::Stall);
                }
            }
            InstrKind::Csr => self.exec_csr(now, wid, ins, &lanes)?,
            InstrKind::Fence => {
                self.fence_waiters |= 1 << wid;
                self.masks.set_stalled(wid, true);
            }
            InstrKind::Ext => match ins.op {
                Ext(ExtOp::Tmc) => {
                    let n = self.wavefronts[w].iregs[lead][ins.rs1 as usize];
                    let full = thread_mask(self.cfg.threads);
                    let mask = if n >= 32 { u32::MAX } else { (1u32 << n) - 1 } & full;
                    self.wavefronts[w].tmask = mask;
                    if mask == 0 {
                        self.masks.set_active(wid, false);
                    }
                }
                Ext(ExtOp::Wspawn) => {
                    let regs = &self.wavefronts[w].iregs[lead];
                    let (count, target) = (regs[ins.rs1 as usize], regs[ins.rs2 as usize]);
                    self.wspawn(count, target)?;
                }
                Ext(ExtOp::Split) => {
                    let wf = &mut self.wavefronts[w];
                    let pred = lanes.iter().filter(|&&t| wf.iregs[t][ins.rs1 as usize] != 0).fold(0, |m, &t| m | 1 << t);
                    let limit = self.cfg.ipdom_limit();
                    wf.tmask = ipdom::split(&mut wf.ipdom, limit, tmask, pred, pc)?;
                }
                Ext(ExtOp::Join) => {
                    let wf = &mut self.wavefronts[w];
                    let (mask, target) = ipdom::join(&mut wf.ipdom)?;
                    wf.tmask = mask;
                    if let Some(t) = target {
                        next_pc = t;
                    }
                }
                Ext(ExtOp::Bar) => {
                    let regs = &self.wavefronts[w].iregs[lead];
                    let (id, expected) = (regs[ins.rs1 as usize], regs[ins.rs2 as usize]);
                    self.barrier(ctx, wid, id, expected)?;
                }
                Ext(ExtOp::Tex) => {
                    let stage = ins.imm as u32;
                    if stage >= self.cfg.tex_stages {
                        return Err(FaultKind::BadTexStage(stage));
                    }
                    if !self.tex.can_accept() || self.fence_waiters != 0 {
                        return Ok(Issue::Stall);
                    }
                    let wf = &self.wavefronts[w];
                    let coords = lanes
                        .iter()
                        .map(|&t| {
                            let r = &wf.iregs[t];
                            (t as u16, r[ins.rs1 as usize] as i32, r[ins.rs2 as usize] as i32, r[ins.rs3 as usize] as i32)
                        })
                        .collect();
                    let req = TexRequest { wid, rd: ins.rd, pc, stage: self.tex_csrs.stages[stage as usize], lanes: coords };
                    self.tex.accept(now, req)?;
                    mark(&mut self.wavefronts[w], RegFile::Int, ins.rd, NOT_READY);
                }
                _ => unreachable!(),
            },
        }
        if next_pc % 4 != 0 {
            return Err(FaultKind::Misaligned { addr: next_pc, size: 4 });
        }
        self.wavefronts[w].pc = next_pc;
        Ok(Issue::Done)
    }

    fn wspawn(&mut self, count: u32, target: u32) -> Result<(), FaultKind> {
        let mut left = count.saturating_sub(1);
        if left > 0 && !target.is_multiple_of(4) {
            return Err(FaultKind::Misaligned { addr: target, size: 4 });
        }
        for w in 0..self.cfg.wavefronts {
            if left == 0 {
                break;
            }
            if self.masks.active & (1 << w) != 0 {
                continue;
            }
            let wf = &mut self.wavefronts[w as usize];
            wf.pc = target;
            wf.tmask = 1;
            wf.ipdom.clear();
            wf.ready_at = [0; 64];
            wf.fetched = false;
            wf.epoch = wf.epoch.wrapping_add(1);
            self.masks.set_stalled(w, false);
            self.masks.set_barrier(w, false);
            self.masks.set_active(w, true);
            left -= 1;
        }
        Ok(())
    }

    fn barrier(&mut self, ctx: &mut StepCtx, wid: u32, id: u32, expected: u32) -> Result<(), FaultKind> {
        if id & BARRIER_GLOBAL_BIT != 0 {
            match ctx.globals.arrive(id, id & !BARRIER_GLOBAL_BIT, expected, self.id as usize, wid)? {
                Arrival::Wait => self.masks.set_barrier(wid, true),
                Arrival::Release(masks) => ctx.releases.push(masks),
            }
        } else {
            match self.barriers.arrive(id, id, expected, 0, wid)? {
                Arrival::Wait => self.masks.set_barrier(wid, true),
                Arrival::Release(masks) => self.masks.release(masks[0]),
            }
        }
        Ok(())
    }

    fn read_csr(&self, csr: u16, wid: u32, thread: usize, now: u64) -> Result<u32, FaultKind> {
        use runtime::*;
        let ids = ThreadIds { core: self.id, wavefront: wid, thread: thread as u32, tmask: self.wavefronts[wid as usize].tmask };
        Ok(match csr {
            _ if is_id_csr(csr) => read_id_csr(&self.cfg, ids, csr)?,
            CSR_CYCLE => now as u32,
            CSR_CYCLEH => (now >> 32) as u32,
            CSR_INSTRET => self.instructions as u32,
            CSR_INSTRETH => (self.instructions >> 32) as u32,
            _ => self.tex_csrs.read(csr)?,
        })
    }

    fn exec_csr(&mut self, now: u64, wid: u32, ins: Instruction, lanes: &[usize]) -> Result<(), FaultKind> {
        use Op::*;
        use runtime::*;
        let w = wid as usize;
        let csr = ins.csr;
        let writes = match ins.op {
            Csrrw | Csrrwi => true,
            Csrrs | Csrrc => ins.rs1 != 0,
            _ => ins.imm != 0,
        };
        let old: Vec<u32> = lanes.iter().map(|&t| self.read_csr(csr, wid, t, now)).collect::<Result<_, _>>()?;
        if writes {
            if is_id_csr(csr) || matches!(csr, CSR_CYCLE | CSR_CYCLEH | CSR_INSTRET | CSR_INSTRETH) {
                return Err(CsrError::ReadOnly(csr).into());
            }
            let lead = lanes[0];
            let src = match ins.op {
                Csrrw | Csrrs | Csrrc => self.wavefronts[w].iregs[lead][ins.rs1 as usize],
                _ => ins.imm as u32,
            };
            let new = match ins.op {
                Csrrw | Csrrwi => src,
                Csrrs | Csrrsi => old[0] | src,
                _ => old[0] & !src,
            };
            self.tex_csrs.write(csr, new)?;
        }
        let wf = &mut self.wavefronts[w];
        for (&t, &v) in lanes.iter().zip(&old) {
            set_reg(wf, RegFile::Int, ins.rd, t, v);
        }
        mark(wf, RegFile::Int, ins.rd, now + self.cfg.latency.alu as u64);
        Ok(())
    }

    fn exec_mem(&mut self, ctx: &mut StepCtx, wid: u32, ins: Instruction, lanes: &[usize]) -> Result<Issue, FaultKind> {
        use Op::*;
        let w = wid as usize;
        let core = self.id as usize;
        let size: u32 = match ins.op {
            Lb | Lbu | Sb => 1,
            Lh | Lhu | Sh => 2,
            _ => 4,
        };
        let is_load = ins.op.kind() == InstrKind::Load;
        let wf = &self.wavefronts[w];
        let mut accesses = Vec::with_capacity(lanes.len());
        for &t in lanes {
            let addr = wf.iregs[t][ins.rs1 as usize].wrapping_add(ins.imm as u32);
            if !addr.is_multiple_of(size) {
                return Err(FaultKind::Misaligned { addr, size });
            }
            let region = classify(&self.cfg, addr).ok_or(FaultKind::OutOfRange { addr })?;
            accesses.push((t as u16, addr, region));
        }
        let uses_ram = accesses.iter().any(|a| a.2 == Region::Ram);
        if uses_ram && (self.fence_waiters != 0 || !ctx.mem.can_submit(core)) {
            return Ok(Issue::Stall);
        }
        let mut ram = Vec::new();
        if is_load {
            let file = if ins.op == Flw { RegFile::Float } else { RegFile::Int };
            let mut values = Vec::new();
            let mut offsets = Vec::new();
            for &(lane, addr, region) in &accesses {
                match region {
                    Region::Console => values.push((lane, 0)),
                    Region::Shared { offset } => {
                        let word = self.shared.access(&LaneAccess { lane, addr: offset, wmask: 0, data: 0 });
                        values.push((lane, extract(ins.op, word, addr)));
                        offsets.push(offset);
                    }
                    Region::Ram => ram.push(LaneAccess { lane, addr, wmask: 0, data: 0 }),
                }
            }
            let wf = &mut self.wavefronts[w];
            if ram.is_empty() {
                write_lanes(wf, file, ins.rd, &values);
                let cycles = self.shared.cycles_for(offsets) as u64;
                mark(wf, file, ins.rd, ctx.now + cycles);
            } else {
                self.token += 1;
                let tag = RequestTag { pc: wf.pc, wid, core: self.id, kind: ReqKind::Load, token: self.token };
                let pending = PendingLoad {
                    wid,
                    epoch: wf.epoch,
                    rd: ins.rd,
                    file,
                    op: ins.op,
                    ram: ram.iter().map(|l| (l.lane, l.addr)).collect(),
                    values,
                };
                mark(wf, file, ins.rd, NOT_READY);
                self.loads.insert(self.token, pending);
                ctx.mem.submit(core, tag, ram);
            }
        } else {
            let wf = &self.wavefronts[w];
            for &(lane, addr, region) in &accesses {
                let v = if ins.op == Fsw { wf.fregs[lane as usize][ins.rs2 as usize] } else { wf.iregs[lane as usize][ins.rs2 as usize] };
                let shift = addr & 3;
                let wmask = (((1u32 << size) - 1) << shift) as u8;
                let data = v << (8 * shift);
                match region {
                    Region::Console => ctx.console.push(v as u8),
                    Region::Shared { offset } => {
                        self.shared.access(&LaneAccess { lane, addr: offset, wmask, data });
                    }
                    Region::Ram => ram.push(LaneAccess { lane, addr, wmask, data }),
                }
            }
            if !ram.is_empty() {
                self.token += 1;
                let tag = RequestTag { pc: wf.pc, wid, core: self.id, kind: ReqKind::Store, token: self.token };
                ctx.mem.submit(core, tag, ram);
            }
        }
        Ok(Issue::Done)
    }
}

pub(crate) fn thread_mask(threads: u32) -> u32 {
    if threads >= 32 {
        u32::MAX
    } else {
        (1 << threads) - 1
    }
}

/// Selects the loaded value from the aligned word holding `addr`.
fn extract(op: Op, word: u32, addr: u32) -> u32 {
    let s = word >> (8 * (addr & 3));
    match op {
        Op::Lb => s as u8 as i8 as i32 as u32,
        Op::Lbu => s & 0xFF,
        Op::Lh => s as u16 as i16 as i32 as u32,
        Op::Lhu => s & 0xFFFF,
        _ => word,
    }
}

fn set_reg(wf: &mut Wavefront, file: RegFile, r: u8, lane: usize, v: u32) {
    match file {
        RegFile::Int if r != 0 => wf.iregs[lane][r as usize] = v,
        RegFile::Int => {}
        RegFile::Float => wf.fregs[lane][r as usize] = v,
    }
}

fn write_lanes(wf: &mut Wavefront, file: RegFile, r: u8, values: &[(u16, u32)]) {
    for &(lane, v) in values {
        set_reg(wf, file, r, lane as usize, v);
    }
}

fn mark(wf: &mut Wavefront, file: RegFile, r: u8, ready: u64) {
    if !(file == RegFile::Int && r == 0) {
        wf.ready_at[reg_slot(file, r)] = ready;
    }
}
