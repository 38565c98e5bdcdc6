//! Browser demo bindings. Every export returns a JSON string so the same
//! functions can be exercised natively in tests; failures come back as
//! `{"error": "..."}`.

use rvsimt::kernels::{self, TexGrid, DATA_BASE};
use rvsimt::sweep::{sweep, SweepOutcome, Workload};
use rvsimt::texture::{Filter, TexFormat};
use rvsimt::ProcessorConfig;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const TEX_ADDR: u32 = 0x8200_0000;
const TEX_SIZE: u32 = 64;
const MAX_CYCLES: u64 = 50_000_000;

fn error(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn pattern_texel(pattern: &str, x: u32, y: u32) -> Option<[u8; 4]> {
    let n = TEX_SIZE;
    Some(match pattern {
        "checker" => {
            if (x / 8 + y / 8).is_multiple_of(2) {
                [240, 240, 240, 255]
            } else {
                [30, 60, 160, 255]
            }
        }
        "gradient" => [(x * 255 / (n - 1)) as u8, (y * 255 / (n - 1)) as u8, 128, 255],
        "rings" => {
            let (dx, dy) = (x as i32 - 32, y as i32 - 32);
            let r = ((dx * dx + dy * dy) as f64).sqrt();
            let t = ((r / 3.0).sin() * 0.5 + 0.5) * 255.0;
            [t as u8, (255.0 - t) as u8, 200, 255]
        }
        _ => return None,
    })
}

fn encode(c: [u8; 4], format: TexFormat) -> Vec<u8> {
    match format {
        TexFormat::Rgba8 => c.to_vec(),
        TexFormat::Rgb565 => {
            let v = (c[0] as u16 >> 3) << 11 | (c[1] as u16 >> 2) << 5 | c[2] as u16 >> 3;
            v.to_le_bytes().to_vec()
        }
        TexFormat::R8 => vec![c[0]],
    }
}

/// The pattern and its box-filtered mip chain, encoded in `format`.
pub fn mip_chain(pattern: &str, format: TexFormat) -> Option<Vec<u8>> {
    let mut level: Vec<[u8; 4]> = (0..TEX_SIZE * TEX_SIZE)
        .map(|i| pattern_texel(pattern, i % TEX_SIZE, i / TEX_SIZE))
        .collect::<Option<_>>()?;
    let mut size = TEX_SIZE;
    let mut bytes = Vec::new();
    loop {
        bytes.extend(level.iter().flat_map(|&c| encode(c, format)));
        if size == 1 {
            return Some(bytes);
        }
        let half = size / 2;
        level = (0..half * half)
            .map(|i| {
                let (x, y) = (2 * (i % half), 2 * (i / half));
                let at = |dx: u32, dy: u32| level[((y + dy) * size + x + dx) as usize];
                let px = [at(0, 0), at(1, 0), at(0, 1), at(1, 1)];
                std::array::from_fn(|c| ((px.iter().map(|p| p[c] as u32).sum::<u32>() + 2) / 4) as u8)
            })
            .collect();
        size = half;
    }
}

/// Resamples a procedural 64x64 texture onto an `out_size` square through
/// the simulated texture units. Returns `{pixels: [r,g,b,a,...], stats}`.
#[wasm_bindgen]
pub fn render_texture(pattern: &str, format: u32, bilinear: bool, lod: f64, out_size: u32, cores: u32) -> String {
    let Some(format) = TexFormat::from_u32(format) else {
        return error(format!("unknown texture format {format}"));
    };
    let Some(texture) = mip_chain(pattern, format) else {
        return error(format!("unknown pattern '{pattern}'"));
    };
    if !(1..=128).contains(&out_size) {
        return error("output size must be 1..=128");
    }
    let mut cfg = ProcessorConfig::default();
    cfg.cores = cores.clamp(1, 8);
    let grid = TexGrid {
        tex_addr: TEX_ADDR,
        width: TEX_SIZE,
        height: TEX_SIZE,
        format,
        filter: if bilinear { Filter::Bilinear } else { Filter::Point },
        out_addr: DATA_BASE,
        out_width: out_size,
        out_height: out_size,
        lod: (lod.clamp(-4.0, 16.0) * 65536.0) as i32,
    };
    let w = Workload::new(kernels::texture_grid(cfg.ram_base, grid)).with_data(TEX_ADDR, texture);
    match w.run(&cfg, MAX_CYCLES) {
        Ok((p, stats)) => {
            let pixels = p.read_bytes(DATA_BASE, (out_size * out_size * 4) as usize);
            let stats: Value = serde_json::from_str(&stats.to_json()).expect("stats are JSON");
            json!({ "pixels": pixels, "stats": stats }).to_string()
        }
        Err(e) => error(e),
    }
}

fn parse_list(list: &str) -> Result<Vec<u64>, String> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse().map_err(|_| format!("bad value '{s}'"))).collect()
}

fn rows(points: &[rvsimt::sweep::SweepPoint], f: impl Fn(&rvsimt::RunStats) -> Value) -> Value {
    points
        .iter()
        .map(|p| match &p.outcome {
            SweepOutcome::Stats(s) => json!({ "value": p.value, "result": f(s) }),
            SweepOutcome::Error(e) => json!({ "value": p.value, "error": e }),
        })
        .collect()
}

/// Runs the all-lanes-same-line load kernel for each virtual port count.
/// Returns `[{value, result: {utilization, ipc, cycles}}]`.
#[wasm_bindgen]
pub fn port_sweep(threads: u32, ports: &str) -> String {
    let values = match parse_list(ports) {
        Ok(v) => v,
        Err(e) => return error(e),
    };
    let mut base = ProcessorConfig::default();
    base.threads = threads;
    if let Err(e) = base.validate() {
        return error(e);
    }
    let points = sweep(&base, "dcache_ports", &values, MAX_CYCLES, |cfg| Workload::new(kernels::same_line(cfg.ram_base, 64)));
    rows(&points, |s| json!({ "utilization": s.dcache_utilization(), "ipc": s.ipc_total, "cycles": s.cycles })).to_string()
}

/// Sweeps one of a few machine-size and memory axes over `values` for the
/// compute-bound FMA kernel and the memory-bound streaming kernel.
#[wasm_bindgen]
pub fn scaling_sweep(axis: &str, values: &str) -> String {
    if !matches!(axis, "cores" | "mem_latency" | "mem_bandwidth" | "dcache_banks") {
        return error(format!("unsupported axis '{axis}'"));
    }
    let values = match parse_list(values) {
        Ok(v) => v,
        Err(e) => return error(e),
    };
    let base = ProcessorConfig::default();
    let ipc = |s: &rvsimt::RunStats| json!({ "ipc": s.ipc_total, "cycles": s.cycles, "terminated": s.terminated });
    let fma = sweep(&base, axis, &values, MAX_CYCLES, |cfg| Workload::new(kernels::fma(cfg.ram_base, 200)));
    let stream = sweep(&base, axis, &values, MAX_CYCLES, |cfg| Workload::new(kernels::stream(cfg.ram_base, 64, 0x10_0000)));
    json!({ "axis": axis, "fma": rows(&fma, ipc), "stream": rows(&stream, ipc) }).to_string()
}
