//! Whole-program checks shared by the engine tests and the acceptance
//! suite. Each returns `Err` with a description instead of panicking so
//! callers can count failures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rvsimt::asm::{reg::*, Asm};
use rvsimt::config::ProcessorConfig;
use rvsimt::kernels::DATA_BASE;
use rvsimt::runtime::*;
use rvsimt::{KernelImage, Processor, Termination};

use super::oracle::Oracle;
use super::rvgen;

pub const WINDOW: i32 = 2048;

fn id_csrs(o: &mut Oracle, cfg: &ProcessorConfig, thread: u32, tmask: u32) {
    let ids = [
        (CSR_THREAD_ID, thread),
        (CSR_WAVEFRONT_ID, 0),
        (CSR_CORE_ID, 0),
        (CSR_NUM_THREADS, cfg.threads),
        (CSR_NUM_WAVEFRONTS, cfg.wavefronts),
        (CSR_NUM_CORES, cfg.cores),
        (CSR_THREAD_MASK, tmask),
    ];
    for (c, v) in ids {
        o.csrs.insert(c, v);
    }
}

pub fn scalar_config() -> ProcessorConfig {
    let mut cfg = ProcessorConfig::default();
    cfg.cores = 1;
    cfg.wavefronts = 1;
    cfg.threads = 1;
    cfg.validate().unwrap();
    cfg
}

/// Runs one random program on the simulator and on the oracle and compares
/// registers, the data window and the instruction count.
pub fn scalar_equivalence(seed: u64) -> Result<(), String> {
    scalar_equivalence_with(seed, false)
}

/// [`scalar_equivalence`] with single-precision instructions mixed in.
pub fn scalar_fp_equivalence(seed: u64) -> Result<(), String> {
    scalar_equivalence_with(seed, true)
}

fn scalar_equivalence_with(seed: u64, fp: bool) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = scalar_config();
    let words = if fp {
        rvgen::random_fp_program(&mut rng, 200, DATA_BASE, WINDOW)
    } else {
        rvgen::random_program(&mut rng, 200, DATA_BASE, WINDOW)
    };
    let data: Vec<u8> = (0..WINDOW).map(|_| rng.gen()).collect();
    let image = KernelImage::from_words(cfg.ram_base, &words);

    let mut p = Processor::new(cfg.clone()).map_err(|e| e.to_string())?;
    p.load_image(&image).map_err(|e| e.to_string())?;
    p.write_bytes(DATA_BASE, &data).map_err(|e| e.to_string())?;
    let stats = p.run(1_000_000);
    if stats.terminated != Termination::Completed {
        return Err(format!("seed {seed}: {:?} {:?}", stats.terminated, stats.fault));
    }

    let mut o = Oracle::new(cfg.ram_base);
    o.load(cfg.ram_base, &image.bytes);
    o.load(DATA_BASE, &data);
    o.x[SP as usize] = initial_sp(&cfg, 0, 0, 0);
    id_csrs(&mut o, &cfg, 0, 1);
    o.run(10_000)?;

    let regs = p.cores()[0].wavefronts[0].iregs[0];
    if regs != o.x {
        let r = (0..32).find(|&r| regs[r] != o.x[r]).unwrap();
        return Err(format!("seed {seed}: x{r} sim {:#x} oracle {:#x}", regs[r], o.x[r]));
    }
    let fregs = p.cores()[0].wavefronts[0].fregs[0];
    if fregs != o.f {
        let r = (0..32).find(|&r| fregs[r] != o.f[r]).unwrap();
        return Err(format!("seed {seed}: f{r} sim {:#x} oracle {:#x}", fregs[r], o.f[r]));
    }
    let mem = p.read_bytes(DATA_BASE, WINDOW as usize);
    if let Some(i) = (0..WINDOW as u32).find(|&i| mem[i as usize] != o.byte(DATA_BASE + i)) {
        return Err(format!("seed {seed}: byte {:#x} differs", DATA_BASE + i));
    }
    if stats.instructions != o.steps {
        return Err(format!("seed {seed}: {} instructions, oracle {}", stats.instructions, o.steps));
    }
    Ok(())
}

/// Emits a full binary tree of `split`/branch/`join` regions `depth` deep.
/// Each node tests a random bit of `S0` and mixes `A0` differently on its
/// two paths.
fn nested_if(a: &mut Asm, rng: &mut ChaCha8Rng, depth: u32, next: &mut u32) {
    let mix = |a: &mut Asm, rng: &mut ChaCha8Rng| match rng.gen_range(0..4) {
        0 => {
            a.addi(A0, A0, rng.gen_range(-2048..2048));
        }
        1 => {
            a.xori(A0, A0, rng.gen_range(-2048..2048));
        }
        2 => {
            a.li(T2, rng.gen()).mul(A0, A0, T2);
        }
        _ => {
            a.slli(T2, A0, rng.gen_range(1..8)).add(A0, A0, T2);
        }
    };
    if depth == 0 {
        mix(a, rng);
        return;
    }
    let n = *next;
    *next += 1;
    let (els, end) = (format!("else{n}"), format!("join{n}"));
    a.srli(T1, S0, rng.gen_range(0..32)).andi(T1, T1, 1);
    a.split(T1);
    a.beqz(T1, &els);
    mix(a, rng);
    nested_if(a, rng, depth - 1, next);
    a.j(&end);
    a.label(&els);
    mix(a, rng);
    nested_if(a, rng, depth - 1, next);
    a.label(&end);
    a.join();
}

pub const DIV_IN: u32 = DATA_BASE;
pub const DIV_OUT: u32 = DATA_BASE + 0x100;

pub fn divergence_kernel(rng: &mut ChaCha8Rng, base: u32, depth: u32) -> KernelImage {
    let mut a = Asm::new(base);
    a.csrr(T0, CSR_NUM_THREADS).tmc(T0);
    a.csrr(S1, CSR_THREAD_ID);
    a.slli(T0, S1, 2);
    a.li(T1, DIV_IN as i32).add(T1, T1, T0).lw(S0, 0, T1);
    a.mv(A0, S0);
    nested_if(&mut a, rng, depth, &mut 0);
    a.slli(T0, S1, 2);
    a.li(T1, DIV_OUT as i32).add(T1, T1, T0).sw(A0, 0, T1);
    a.tmc(ZERO);
    a.assemble().unwrap()
}

/// Runs a random 3-deep divergent kernel over NT=4 and compares each
/// thread's output with a scalar run parameterized by its thread id.
pub fn divergence_check(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ProcessorConfig::default();
    let image = divergence_kernel(&mut rng, cfg.ram_base, 3);
    let inputs: Vec<u32> = (0..cfg.threads).map(|_| rng.gen()).collect();
    let input_bytes: Vec<u8> = inputs.iter().flat_map(|v| v.to_le_bytes()).collect();

    let mut p = Processor::new(cfg.clone()).map_err(|e| e.to_string())?;
    p.load_image(&image).map_err(|e| e.to_string())?;
    p.write_bytes(DIV_IN, &input_bytes).map_err(|e| e.to_string())?;
    let stats = p.run(1_000_000);
    if stats.terminated != Termination::Completed {
        return Err(format!("seed {seed}: {:?} {:?}", stats.terminated, stats.fault));
    }
    for (w, wf) in p.cores()[0].wavefronts.iter().enumerate() {
        if !wf.ipdom.is_empty() {
            return Err(format!("seed {seed}: wavefront {w} ends with {} IPDOM entries", wf.ipdom.len()));
        }
    }
    for t in 0..cfg.threads {
        let mut o = Oracle::new(cfg.ram_base);
        o.load(cfg.ram_base, &image.bytes);
        o.load(DIV_IN, &input_bytes);
        id_csrs(&mut o, &cfg, t, (1 << cfg.threads) - 1);
        o.run(100_000)?;
        let want = o.read_word(DIV_OUT + 4 * t);
        let got = p.read_u32(DIV_OUT + 4 * t);
        if want != got {
            return Err(format!("seed {seed}: thread {t} stored {got:#x}, oracle {want:#x}"));
        }
    }
    Ok(())
}

const DELAYS: u32 = DATA_BASE;
const MARKS: u32 = DATA_BASE + 0x1000;
const OUT: u32 = DATA_BASE + 0x2000;
const COPIES: u32 = DATA_BASE + 0x3000;
/// Slot stride, larger than any line size used, so no two wavefronts share
/// a cache line.
const SLOT: u32 = 64;

/// Program counters of interest in the barrier kernel.
pub struct BarrierKernel {
    pub image: KernelImage,
    /// (bar, first store after it) for the core-local and the wide barrier.
    pub local: (u32, u32),
    pub wide: (u32, u32),
}

fn delay_loop(a: &mut Asm, which: u32, label: &str) {
    // T2 := delays[gw][which]
    a.slli(T0, S0, 4).li(T1, (DELAYS + 4 * which) as i32).add(T1, T1, T0).lw(T2, 0, T1);
    a.beqz(T2, &format!("{label}_end"));
    a.label(label);
    a.addi(T2, T2, -1);
    a.bnez(T2, label);
    a.label(&format!("{label}_end"));
}

/// Every wavefront of every core: random delay, publish a marker, flush,
/// core-local barrier, store, random delay, machine-wide barrier (local
/// when there is one core), then copy a neighbour's marker.
pub fn barrier_kernel(base: u32, cores: u32) -> BarrierKernel {
    let mut a = Asm::new(base);
    rvsimt::kernels::spawn_all(&mut a);
    a.csrr(S0, CSR_CORE_ID).csrr(T0, CSR_NUM_WAVEFRONTS).mul(S0, S0, T0);
    a.csrr(T0, CSR_WAVEFRONT_ID).add(S0, S0, T0);
    a.csrr(S1, CSR_THREAD_ID).slli(S1, S1, 2);
    // S2 := slot offset of this lane
    a.li(T0, SLOT as i32).mul(S2, S0, T0).add(S2, S2, S1);
    delay_loop(&mut a, 0, "d0");
    a.li(T1, MARKS as i32).add(T1, T1, S2).addi(A0, S0, 1000).sw(A0, 0, T1);
    delay_loop(&mut a, 1, "d1");
    a.fence();
    a.li(A0, 1).csrr(A1, CSR_NUM_WAVEFRONTS);
    let local_bar = a.pc();
    a.bar(A0, A1);
    a.li(T1, OUT as i32).add(T1, T1, S2);
    let local_store = a.pc();
    a.sw(S0, 0, T1);
    delay_loop(&mut a, 2, "d2");
    if cores > 1 {
        a.li(A0, (BARRIER_GLOBAL_BIT | 2) as i32);
        a.csrr(A1, CSR_NUM_CORES).csrr(T0, CSR_NUM_WAVEFRONTS).mul(A1, A1, T0);
    } else {
        a.li(A0, 2).csrr(A1, CSR_NUM_WAVEFRONTS);
    }
    // A2 := slot offset of the next wavefront, wrapping
    a.csrr(T0, CSR_NUM_CORES).csrr(T1, CSR_NUM_WAVEFRONTS).mul(T0, T0, T1);
    a.addi(A2, S0, 1).remu(A2, A2, T0).li(T0, SLOT as i32).mul(A2, A2, T0).add(A2, A2, S1);
    a.li(T1, MARKS as i32).add(A2, A2, T1);
    let wide_bar = a.pc();
    a.bar(A0, A1);
    a.lw(A3, 0, A2);
    a.li(T1, COPIES as i32).add(T1, T1, S2);
    let wide_store = a.pc();
    a.sw(A3, 0, T1);
    a.tmc(ZERO);
    BarrierKernel { image: a.assemble().unwrap(), local: (local_bar, local_store), wide: (wide_bar, wide_store) }
}

/// One randomized interleaving of the barrier kernel. Checks liveness, the
/// ordering of post-barrier accesses against the last arrival in the
/// barrier's scope, and the values copied across the wide barrier.
pub fn barrier_check(cores: u32, wavefronts: u32, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = ProcessorConfig::default();
    cfg.cores = cores;
    cfg.wavefronts = wavefronts;
    cfg.validate().map_err(|e| e.to_string())?;
    let k = barrier_kernel(cfg.ram_base, cores);
    let total = cores * wavefronts;
    let delays: Vec<u8> = (0..total)
        .flat_map(|_| {
            let d: [u32; 4] = std::array::from_fn(|_| if rng.gen_bool(0.2) { 0 } else { rng.gen_range(0..300) });
            d.into_iter().flat_map(u32::to_le_bytes).collect::<Vec<_>>()
        })
        .collect();

    let mut p = Processor::new(cfg.clone()).map_err(|e| e.to_string())?;
    p.load_image(&k.image).map_err(|e| e.to_string())?;
    p.write_bytes(DELAYS, &delays).map_err(|e| e.to_string())?;
    p.set_trace_window(0, u64::MAX);
    let stats = p.run(2_000_000);
    if stats.terminated != Termination::Completed {
        return Err(format!("({cores},{wavefronts}) seed {seed}: {:?} {:?}", stats.terminated, stats.fault));
    }
    let trace = p.trace();
    let cycles_at = |pc: u32, core: Option<u32>| -> Vec<u64> {
        trace.iter().filter(|r| r.pc == pc && core.is_none_or(|c| r.core == c)).map(|r| r.cycle).collect()
    };
    let check = |(bar, after): (u32, u32), core: Option<u32>, n: u32| -> Result<(), String> {
        let arrivals = cycles_at(bar, core);
        let posts = cycles_at(after, core);
        if arrivals.len() != n as usize || posts.len() != n as usize {
            return Err(format!("seed {seed}: {} arrivals, {} post accesses, want {n}", arrivals.len(), posts.len()));
        }
        let last = *arrivals.iter().max().unwrap();
        match posts.iter().min() {
            Some(&first) if first < last => {
                Err(format!("({cores},{wavefronts}) seed {seed}: access at {first} before last arrival {last}"))
            }
            _ => Ok(()),
        }
    };
    for c in 0..cores {
        check(k.local, Some(c), wavefronts)?;
    }
    if cores > 1 {
        check(k.wide, None, total)?;
    } else {
        check(k.wide, Some(0), wavefronts)?;
    }
    for gw in 0..total {
        for t in 0..cfg.threads {
            let off = gw * SLOT + 4 * t;
            let got = p.read_u32(COPIES + off);
            let want = 1000 + (gw + 1) % total;
            if got != want {
                return Err(format!("({cores},{wavefronts}) seed {seed}: wavefront {gw} lane {t} read {got}, want {want}"));
            }
        }
    }
    Ok(())
}
