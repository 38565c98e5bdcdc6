#![allow(dead_code)]

pub mod memharness;
pub mod oracle;
pub mod programs;
pub mod rvgen;
pub mod texref;

/// Seed for randomized tests, overridable with `SIM_SEED` (decimal or `0x` hex).
pub fn seed() -> u64 {
    let parse = |s: &str| match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    };
    std::env::var("SIM_SEED").ok().and_then(|s| parse(s.trim())).unwrap_or(0x5EED)
}
