//! Synthetic kernels used by the tests, the CLI and the sweep harness.
//!
//! Every kernel starts the way the runtime contract prescribes: wavefront 0
//! of each core spawns the remaining wavefronts, every wavefront enables all
//! of its threads, the threads partition the work by global id and finally
//! run `tmc 0`.

use crate::asm::{reg::*, Asm};
use crate::runtime::*;
use crate::texture::{tex_csr, Filter, TexFormat, FIELD_ADDR, FIELD_FILTER, FIELD_FORMAT, FIELD_HEIGHT, FIELD_WIDTH, FIELD_WRAP};

/// Conventional start of kernel input and output buffers.
pub const DATA_BASE: u32 = 0x8100_0000;
/// Where kernels that produce a single answer store it.
pub const RESULT_ADDR: u32 = 0x80F0_0000;

/// Spawns every wavefront at `main` and enables every thread.
pub fn spawn_all(a: &mut Asm) {
    a.csrr(T0, CSR_NUM_WAVEFRONTS);
    a.la(T1, "main");
    a.wspawn(T0, T1);
    a.label("main");
    a.csrr(T0, CSR_NUM_THREADS);
    a.tmc(T0);
}

/// `gid` := global thread id, `total` := threads in the whole machine.
pub fn global_ids(a: &mut Asm, gid: u8, total: u8) {
    a.csrr(gid, CSR_CORE_ID);
    a.csrr(total, CSR_NUM_WAVEFRONTS);
    a.mul(gid, gid, total);
    a.csrr(total, CSR_WAVEFRONT_ID);
    a.add(gid, gid, total);
    a.csrr(total, CSR_NUM_THREADS);
    a.mul(gid, gid, total);
    a.csrr(total, CSR_THREAD_ID);
    a.add(gid, gid, total);
    a.csrr(total, CSR_NUM_CORES);
    a.csrr(T0, CSR_NUM_WAVEFRONTS);
    a.mul(total, total, T0);
    a.csrr(T0, CSR_NUM_THREADS);
    a.mul(total, total, T0);
}

fn exit(a: &mut Asm) {
    a.tmc(ZERO);
}

/// Prints `OK` on the console from one thread and exits.
pub fn console_ok(load_base: u32) -> KernelImage {
    let mut a = Asm::new(load_base);
    a.li(T0, CONSOLE_ADDR as i32);
    a.li(T1, b'O' as i32).sb(T1, 0, T0);
    a.li(T1, b'K' as i32).sb(T1, 0, T0);
    exit(&mut a);
    a.assemble().expect("console kernel assembles")
}

/// The smallest kernel: `tmc 0`.
pub fn empty(load_base: u32) -> KernelImage {
    let mut a = Asm::new(load_base);
    exit(&mut a);
    a.assemble().expect("empty kernel assembles")
}

/// Compute-bound kernel: every thread runs `iterations` rounds of eight
/// independent fused multiply-add chains. No data memory traffic.
pub fn fma(load_base: u32, iterations: u32) -> KernelImage {
    let mut a = Asm::new(load_base);
    spawn_all(&mut a);
    a.li(T0, 3).fcvt_s_w(8, T0);
    a.li(T0, 1).fcvt_s_w(9, T0);
    for f in 0..8 {
        a.li(T0, f as i32).fcvt_s_w(f, T0);
    }
    a.li(T2, iterations as i32);
    a.label("loop");
    for f in 0..8 {
        a.fmadd_s(f, f, 8, 9);
    }
    a.addi(T2, T2, -1);
    a.bnez(T2, "loop");
    exit(&mut a);
    a.assemble().expect("fma kernel assembles")
}

/// Memory-bound kernel: each thread sums `per_thread` words of a buffer at
/// [`DATA_BASE`] with a machine-wide stride, so consecutive lanes touch
/// consecutive words and no line is reused. The sum goes to
/// `DATA_BASE + out_offset + 4*gid`.
pub fn stream(load_base: u32, per_thread: u32, out_offset: u32) -> KernelImage {
    let mut a = Asm::new(load_base);
    spawn_all(&mut a);
    global_ids(&mut a, S0, S1);
    a.li(T1, DATA_BASE as i32);
    a.slli(T0, S0, 2).add(A0, T1, T0);
    a.slli(A1, S1, 2);
    a.li(T2, per_thread as i32);
    a.li(A2, 0);
    a.label("loop");
    a.lw(T3, 0, A0);
    a.add(A2, A2, T3);
    a.add(A0, A0, A1);
    a.addi(T2, T2, -1);
    a.bnez(T2, "loop");
    a.li(T1, (DATA_BASE + out_offset) as i32);
    a.slli(T0, S0, 2).add(T1, T1, T0);
    a.sw(A2, 0, T1);
    exit(&mut a);
    a.assemble().expect("stream kernel assembles")
}

/// One wavefront whose threads all load distinct words of one cache line,
/// `iterations` times. Exercises the virtual-port selector only.
pub fn same_line(load_base: u32, iterations: u32) -> KernelImage {
    let mut a = Asm::new(load_base);
    a.csrr(T0, CSR_NUM_THREADS).tmc(T0);
    a.csrr(T0, CSR_THREAD_ID);
    a.slli(T0, T0, 2);
    a.li(A0, DATA_BASE as i32).add(A0, A0, T0);
    a.li(T2, iterations as i32);
    a.label("loop");
    a.lw(T3, 0, A0);
    a.addi(T2, T2, -1);
    a.bnez(T2, "loop");
    exit(&mut a);
    a.assemble().expect("same-line kernel assembles")
}

/// Layout of the vector-add buffers for `n` elements.
pub fn vecadd_layout(n: u32) -> (u32, u32, u32) {
    (DATA_BASE, DATA_BASE + 4 * n, DATA_BASE + 8 * n)
}

/// The documented spawn pattern: all wavefronts of all cores compute
/// `c[i] = a[i] + b[i]` over a grid-stride loop, flush, meet at a global
/// barrier, then wavefront 0 of core 0 stores `sum(c)` at [`RESULT_ADDR`]
/// and prints `OK`.
pub fn vecadd(load_base: u32, n: u32) -> KernelImage {
    let (va, vb, vc) = vecadd_layout(n);
    let mut a = Asm::new(load_base);
    spawn_all(&mut a);
    global_ids(&mut a, S0, S1);
    a.li(S2, n as i32);
    a.mv(T2, S0);
    a.bge(T2, S2, "done");
    a.label("loop");
    a.slli(T0, T2, 2);
    a.li(T1, va as i32).add(T1, T1, T0).lw(A0, 0, T1);
    a.li(T1, vb as i32).add(T1, T1, T0).lw(A1, 0, T1);
    a.add(A0, A0, A1);
    a.li(T1, vc as i32).add(T1, T1, T0).sw(A0, 0, T1);
    a.add(T2, T2, S1);
    a.blt(T2, S2, "loop");
    a.label("done");
    a.fence();
    a.li(A0, BARRIER_GLOBAL_BIT as i32);
    a.csrr(A1, CSR_NUM_CORES).csrr(T0, CSR_NUM_WAVEFRONTS).mul(A1, A1, T0);
    a.bar(A0, A1);
    a.csrr(T0, CSR_CORE_ID).csrr(T1, CSR_WAVEFRONT_ID).or(T0, T0, T1);
    a.bnez(T0, "exit");
    a.li(T0, 1).tmc(T0);
    a.li(T1, vc as i32).li(T2, 0).li(A0, 0);
    a.label("sum");
    a.lw(A1, 0, T1).add(A0, A0, A1);
    a.addi(T1, T1, 4).addi(T2, T2, 1);
    a.blt(T2, S2, "sum");
    a.li(T1, RESULT_ADDR as i32).sw(A0, 0, T1);
    a.li(T0, CONSOLE_ADDR as i32);
    a.li(T1, b'O' as i32).sb(T1, 0, T0);
    a.li(T1, b'K' as i32).sb(T1, 0, T0);
    a.label("exit");
    exit(&mut a);
    a.assemble().expect("vecadd kernel assembles")
}

/// Sampling parameters of [`texture_grid`].
#[derive(Debug, Clone, Copy)]
pub struct TexGrid {
    pub tex_addr: u32,
    pub width: u32,
    pub height: u32,
    pub format: TexFormat,
    pub filter: Filter,
    pub out_addr: u32,
    pub out_width: u32,
    pub out_height: u32,
    /// 16.16 level of detail for every sample.
    pub lod: i32,
}

/// Resamples a texture onto an `out_width × out_height` RGBA8 grid, one
/// output pixel per thread iteration, sampling at pixel centres.
pub fn texture_grid(load_base: u32, g: TexGrid) -> KernelImage {
    let mut a = Asm::new(load_base);
    let set = |a: &mut Asm, field, value: u32| {
        a.li(T0, value as i32).csrw(tex_csr(0, field), T0);
    };
    set(&mut a, FIELD_ADDR, g.tex_addr);
    set(&mut a, FIELD_WIDTH, g.width);
    set(&mut a, FIELD_HEIGHT, g.height);
    set(&mut a, FIELD_FORMAT, g.format as u32);
    set(&mut a, FIELD_FILTER, g.filter as u32);
    set(&mut a, FIELD_WRAP, 0);
    let mut level = 0;
    let mut offset = 0;
    let (mut w, mut h) = (g.width, g.height);
    loop {
        set(&mut a, crate::texture::FIELD_MIPOFF0 + level, offset);
        if (w == 1 && h == 1) || level == 15 {
            break;
        }
        offset += w * h * g.format.stride();
        w = (w / 2).max(1);
        h = (h / 2).max(1);
        level += 1;
    }
    spawn_all(&mut a);
    global_ids(&mut a, S0, S1);
    a.li(S2, (g.out_width * g.out_height) as i32);
    a.li(S3, g.out_width as i32);
    a.li(S4, g.out_height as i32);
    a.li(S5, g.lod);
    a.mv(T2, S0);
    a.bge(T2, S2, "done");
    a.label("loop");
    a.remu(A0, T2, S3);
    a.divu(A1, T2, S3);
    // u = (2x + 1) * 0x8000 / out_width
    a.slli(A0, A0, 1).addi(A0, A0, 1).slli(A0, A0, 15).divu(A0, A0, S3);
    a.slli(A1, A1, 1).addi(A1, A1, 1).slli(A1, A1, 15).divu(A1, A1, S4);
    a.tex(A2, A0, A1, S5, 0);
    a.slli(T0, T2, 2);
    a.li(T1, g.out_addr as i32).add(T1, T1, T0);
    a.sw(A2, 0, T1);
    a.add(T2, T2, S1);
    a.blt(T2, S2, "loop");
    a.label("done");
    exit(&mut a);
    a.assemble().expect("texture kernel assembles")
}

/// Total bytes of a full mip chain for `width × height` texels.
pub fn mip_chain_bytes(width: u32, height: u32, format: TexFormat) -> u32 {
    let (mut w, mut h, mut total) = (width, height, 0);
    loop {
        total += w * h * format.stride();
        if w == 1 && h == 1 {
            return total;
        }
        w = (w / 2).max(1);
        h = (h / 2).max(1);
    }
}
