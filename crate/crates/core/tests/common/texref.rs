//! Test textures and a double-precision bilinear reference sampler.

use rand::Rng;
use rvsimt::texture::{TexFormat, TextureStage, Wrap, MIP_LEVELS};

pub const TEX_BASE: u32 = 0x8200_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Gradient,
    Noise,
}

/// A texture with its full mip chain as stored in memory, plus the decoded
/// 8-bit RGBA value of every texel of every level.
pub struct TestTexture {
    pub stage: TextureStage,
    pub bytes: Vec<u8>,
    pub levels: Vec<(u32, u32, Vec<[f64; 4]>)>,
}

impl TestTexture {
    pub fn read_byte(&self) -> impl FnMut(u32) -> u8 + '_ {
        move |a| self.bytes[(a - self.stage.addr) as usize]
    }
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

/// Decodes a stored texel; 5- and 6-bit channels widen by bit replication.
fn decode(raw: &[u8], format: TexFormat) -> [f64; 4] {
    match format {
        TexFormat::Rgba8 => [raw[0] as f64, raw[1] as f64, raw[2] as f64, raw[3] as f64],
        TexFormat::Rgb565 => {
            let v = u16::from_le_bytes([raw[0], raw[1]]) as u32;
            let (r, g, b) = (v >> 11, v >> 5 & 63, v & 31);
            [(r * 8 + r / 4) as f64, (g * 4 + g / 16) as f64, (b * 8 + b / 4) as f64, 255.0]
        }
        TexFormat::R8 => [raw[0] as f64, 0.0, 0.0, 255.0],
    }
}

pub fn build(rng: &mut impl Rng, size: u32, format: TexFormat, pattern: Pattern) -> TestTexture {
    let mut stage = TextureStage { addr: TEX_BASE, width: size, height: size, format, ..Default::default() };
    let mut bytes = Vec::new();
    let mut levels = Vec::new();
    let (mut w, mut h) = (size, size);
    for l in 0..MIP_LEVELS {
        stage.mip_offsets[l] = bytes.len() as u32;
        let mut decoded = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let c = match pattern {
                    Pattern::Gradient => {
                        let s = |n: u32, d: u32| (n * 255 / d.saturating_sub(1).max(1)) as u8;
                        [s(x, w), s(y, h), s((x + y) / 2, (w + h) / 2), 255 - s(x, w) / 2]
                    }
                    Pattern::Noise => rng.gen(),
                };
                let raw = encode(c, format);
                decoded.push(decode(&raw, format));
                bytes.extend(raw);
            }
        }
        levels.push((w, h, decoded));
        if w == 1 && h == 1 {
            break;
        }
        w = (w / 2).max(1);
        h = (h / 2).max(1);
    }
    TestTexture { stage, bytes, levels }
}

fn wrap(i: i64, n: u32, mode: Wrap) -> usize {
    let n = n as i64;
    match mode {
        Wrap::Clamp => i.clamp(0, n - 1) as usize,
        Wrap::Repeat => i.rem_euclid(n) as usize,
    }
}

/// Exact bilinear filtering of the selected level in double precision.
pub fn reference_bilinear(t: &TestTexture, u: i32, v: i32, lod: i32) -> [f64; 4] {
    let top = (t.levels.len() - 1) as i64;
    let level = (lod as i64).div_euclid(65536).clamp(0, top) as usize;
    let (w, h, texels) = &t.levels[level];
    let x = u as f64 / 65536.0 * *w as f64 - 0.5;
    let y = v as f64 / 65536.0 * *h as f64 - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let at = |dx: i64, dy: i64| {
        let xi = wrap(x0 as i64 + dx, *w, t.stage.wrap_u);
        let yi = wrap(y0 as i64 + dy, *h, t.stage.wrap_v);
        texels[yi * *w as usize + xi]
    };
    let (c00, c10, c01, c11) = (at(0, 0), at(1, 0), at(0, 1), at(1, 1));
    std::array::from_fn(|i| {
        let top = c00[i] * (1.0 - fx) + c10[i] * fx;
        let bottom = c01[i] * (1.0 - fx) + c11[i] * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Largest per-channel difference in 8-bit units.
pub fn max_error(got: u32, want: [f64; 4]) -> f64 {
    let g = got.to_le_bytes();
    (0..4).map(|i| (g[i] as f64 - want[i]).abs()).fold(0.0, f64::max)
}

pub fn random_wrap(rng: &mut impl Rng) -> Wrap {
    if rng.gen() {
        Wrap::Clamp
    } else {
        Wrap::Repeat
    }
}

/// Random 16.16 coordinates reaching a quarter texture past each edge and
/// levels of detail from below zero to past the last level.
pub fn random_query(rng: &mut impl Rng, levels: usize) -> (i32, i32, i32) {
    let c = |rng: &mut dyn rand::RngCore| rng.gen_range(-0x4000..0x14000);
    (c(rng), c(rng), rng.gen_range(-0x10000..(levels as i32 + 1) << 16))
}
