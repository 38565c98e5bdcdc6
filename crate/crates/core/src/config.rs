//! Processor and cache configuration, plus the flat `key = value` format
//! used by configuration files and command-line overrides.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Geometry and queueing parameters of one banked cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CacheConfig {
    pub size: u32,
    pub line_size: u32,
    pub banks: u32,
    pub ways: u32,
    pub ports: u32,
    pub mshr_entries: u32,
    pub input_queue: u32,
    pub mem_queue: u32,
}

impl CacheConfig {
    pub fn lines(&self) -> u32 {
        self.size / self.line_size
    }

    pub fn sets_per_bank(&self) -> u32 {
        self.lines() / self.banks / self.ways
    }

    pub fn validate(&self, name: &str) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(format!("{name}: {msg}")));
        if self.line_size < 4 || self.line_size > 128 || !self.line_size.is_power_of_two() {
            return bad(format!("line size {} must be a power of two in 4..=128", self.line_size));
        }
        if self.banks == 0 || !self.banks.is_power_of_two() {
            return bad(format!("bank count {} must be a power of two", self.banks));
        }
        if self.ways == 0 {
            return bad("associativity must be >= 1".into());
        }
        if !matches!(self.ports, 1 | 2 | 4) {
            return bad(format!("virtual ports {} not in {{1, 2, 4}}", self.ports));
        }
        if !self.size.is_multiple_of(self.line_size * self.banks * self.ways)
            || self.banks * self.line_size * self.ways > self.size
        {
            return bad(format!(
                "size {} is not a multiple of banks x ways x line ({})",
                self.size,
                self.banks * self.line_size * self.ways
            ));
        }
        if self.mshr_entries == 0 || self.input_queue == 0 {
            return bad("MSHR and input queue depths must be >= 1".into());
        }
        if self.mem_queue < 2 {
            return bad("memory request queue needs >= 2 slots (one is held in reserve)".into());
        }
        Ok(())
    }
}

/// Per-class execution latencies in cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Latencies {
    pub alu: u32,
    pub mul: u32,
    pub div: u32,
    pub fp: u32,
    pub fsqrt: u32,
    pub tex: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessorConfig {
    pub cores: u32,
    pub wavefronts: u32,
    pub threads: u32,
    pub latency: Latencies,
    pub icache: CacheConfig,
    pub dcache: CacheConfig,
    pub l2_enable: bool,
    pub l2: CacheConfig,
    pub l3_enable: bool,
    pub l3: CacheConfig,
    pub mem_latency: u32,
    pub mem_bandwidth: u32,
    pub ram_base: u32,
    pub ram_size: u32,
    pub stack_size: u32,
    pub shm_size: u32,
    /// IPDOM stack limit per wavefront; 0 selects twice the thread count.
    pub ipdom_depth: u32,
    pub local_barriers: u32,
    pub global_barriers: u32,
    pub tex_stages: u32,
    pub tex_dedup: bool,
    /// Depth of the per-core queue of memory batches waiting for the bank selector.
    pub lsu_queue: u32,
}

impl Default for ProcessorConfig {
    fn default() -> Self {
        let l1 = CacheConfig {
            size: 16 * 1024,
            line_size: 16,
            banks: 4,
            ways: 1,
            ports: 1,
            mshr_entries: 8,
            input_queue: 4,
            mem_queue: 4,
        };
        ProcessorConfig {
            cores: 1,
            wavefronts: 4,
            threads: 4,
            latency: Latencies { alu: 1, mul: 2, div: 16, fp: 4, fsqrt: 16, tex: 2 },
            icache: CacheConfig { size: 8 * 1024, banks: 1, ..l1 },
            dcache: l1,
            l2_enable: false,
            l2: CacheConfig { size: 128 * 1024, ..l1 },
            l3_enable: false,
            l3: CacheConfig { size: 256 * 1024, ..l1 },
            mem_latency: 16,
            mem_bandwidth: 1,
            ram_base: 0x8000_0000,
            ram_size: 64 << 20,
            stack_size: 4096,
            shm_size: 16 * 1024,
            ipdom_depth: 0,
            local_barriers: 8,
            global_barriers: 8,
            tex_stages: 2,
            tex_dedup: true,
            lsu_queue: 2,
        }
    }
}

/// A configuration value as it appears in files and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ConfigValue {
    Int(u64),
    Bool(bool),
}

impl fmt::Display for ConfigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Int(v) => write!(f, "{v}"),
            ConfigValue::Bool(v) => write!(f, "{v}"),
        }
    }
}

trait Knob {
    fn parse_knob(s: &str) -> Option<Self>
    where
        Self: Sized;
    fn value(&self) -> ConfigValue;
}

impl Knob for u32 {
    fn parse_knob(s: &str) -> Option<Self> {
        let s = s.replace('_', "");
        if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            return u32::from_str_radix(hex, 16).ok();
        }
        if let Some(k) = s.strip_suffix(['k', 'K']) {
            return k.parse::<u32>().ok()?.checked_mul(1024);
        }
        if let Some(m) = s.strip_suffix(['m', 'M']) {
            return m.parse::<u32>().ok()?.checked_mul(1 << 20);
        }
        s.parse().ok()
    }

    fn value(&self) -> ConfigValue {
        ConfigValue::Int(*self as u64)
    }
}

impl Knob for bool {
    fn parse_knob(s: &str) -> Option<Self> {
        match s {
            "1" | "true" | "on" | "yes" => Some(true),
            "0" | "false" | "off" | "no" => Some(false),
            _ => None,
        }
    }

    fn value(&self) -> ConfigValue {
        ConfigValue::Bool(*self)
    }
}

macro_rules! knobs {
    ($( $key:literal => $($field:ident).+ ),* $(,)?) => {
        /// Every recognised configuration key, in report order.
        pub const CONFIG_KEYS: &[&str] = &[$($key),*];

        impl ProcessorConfig {
            /// Sets one knob from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
                let value = value.trim();
                match key {
                    $($key => {
                        self.$($field).+ = Knob::parse_knob(value).ok_or_else(|| ConfigError::BadValue {
                            key: key.to_string(),
                            value: value.to_string(),
                        })?;
                    })*
                    _ => return Err(ConfigError::UnknownKey(key.to_string())),
                }
                Ok(())
            }

            pub fn get(&self, key: &str) -> Option<ConfigValue> {
                match key {
                    $($key => Some(Knob::value(&self.$($field).+)),)*
                    _ => None,
                }
            }
        }
    };
}

knobs! {
    "cores" => cores,
    "wavefronts" => wavefronts,
    "threads" => threads,
    "alu_latency" => latency.alu,
    "mul_latency" => latency.mul,
    "div_latency" => latency.div,
    "fp_latency" => latency.fp,
    "fsqrt_latency" => latency.fsqrt,
    "tex_latency" => latency.tex,
    "icache_size" => icache.size,
    "icache_line" => icache.line_size,
    "icache_ways" => icache.ways,
    "icache_mshr" => icache.mshr_entries,
    "icache_queue" => icache.input_queue,
    "icache_mem_queue" => icache.mem_queue,
    "dcache_size" => dcache.size,
    "dcache_line" => dcache.line_size,
    "dcache_banks" => dcache.banks,
    "dcache_ways" => dcache.ways,
    "dcache_ports" => dcache.ports,
    "dcache_mshr" => dcache.mshr_entries,
    "dcache_queue" => dcache.input_queue,
    "dcache_mem_queue" => dcache.mem_queue,
    "l2_enable" => l2_enable,
    "l2_size" => l2.size,
    "l2_line" => l2.line_size,
    "l2_banks" => l2.banks,
    "l2_ways" => l2.ways,
    "l2_mshr" => l2.mshr_entries,
    "l2_queue" => l2.input_queue,
    "l2_mem_queue" => l2.mem_queue,
    "l3_enable" => l3_enable,
    "l3_size" => l3.size,
    "l3_line" => l3.line_size,
    "l3_banks" => l3.banks,
    "l3_ways" => l3.ways,
    "l3_mshr" => l3.mshr_entries,
    "l3_queue" => l3.input_queue,
    "l3_mem_queue" => l3.mem_queue,
    "mem_latency" => mem_latency,
    "mem_bandwidth" => mem_bandwidth,
    "ram_base" => ram_base,
    "ram_size" => ram_size,
    "stack_size" => stack_size,
    "shm_size" => shm_size,
    "ipdom_depth" => ipdom_depth,
    "local_barriers" => local_barriers,
    "global_barriers" => global_barriers,
    "tex_stages" => tex_stages,
    "tex_dedup" => tex_dedup,
    "lsu_queue" => lsu_queue,
}

impl ProcessorConfig {
    /// Parses a `key = value` file on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ProcessorConfig::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    pub fn apply_kv_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// All knobs as an ordered map, for reports.
    pub fn entries(&self) -> BTreeMap<&'static str, ConfigValue> {
        CONFIG_KEYS.iter().map(|&k| (k, self.get(k).expect("listed key"))).collect()
    }

    pub fn to_kv_string(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|&k| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    pub fn ipdom_limit(&self) -> usize {
        if self.ipdom_depth == 0 {
            2 * self.threads as usize
        } else {
            self.ipdom_depth as usize
        }
    }

    pub fn total_threads(&self) -> u64 {
        self.cores as u64 * self.wavefronts as u64 * self.threads as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.cores == 0 || self.wavefronts == 0 || self.threads == 0 {
            return bad("cores, wavefronts and threads must be >= 1");
        }
        if self.wavefronts > 32 || self.threads > 32 {
            return bad("wavefronts and threads are limited to 32 (mask width)");
        }
        if self.cores > 1024 {
            return bad("at most 1024 cores");
        }
        let l = &self.latency;
        if [l.alu, l.mul, l.div, l.fp, l.fsqrt].contains(&0) {
            return bad("functional-unit latencies must be >= 1");
        }
        if self.mem_latency == 0 {
            return bad("mem_latency must be >= 1");
        }
        if self.mem_bandwidth == 0 {
            return bad("mem_bandwidth must be >= 1");
        }
        self.icache.validate("icache")?;
        self.dcache.validate("dcache")?;
        if self.icache.ports != 1 {
            return bad("the instruction cache has a single port");
        }
        if self.dcache.ports > self.threads {
            return bad("dcache_ports cannot exceed the thread count");
        }
        let mut lines = vec![self.icache.line_size, self.dcache.line_size];
        if self.l2_enable {
            self.l2.validate("l2")?;
            if self.l2.ports != 1 {
                return bad("shared caches use a single port");
            }
            lines.push(self.l2.line_size);
        }
        if self.l3_enable {
            if !self.l2_enable {
                return bad("l3 requires l2");
            }
            self.l3.validate("l3")?;
            if self.l3.ports != 1 {
                return bad("shared caches use a single port");
            }
            lines.push(self.l3.line_size);
        }
        if lines.iter().any(|&x| x != lines[0]) {
            return bad("all cache levels must use the same line size");
        }
        if !self.ram_base.is_multiple_of(4096) || self.ram_size < 4096 {
            return bad("ram_base must be page aligned and ram_size >= 4 KiB");
        }
        if (self.ram_base as u64) + (self.ram_size as u64) > crate::runtime::CONSOLE_ADDR as u64 {
            return bad("RAM overlaps the console MMIO address");
        }
        let shm_end = crate::runtime::SHM_BASE as u64 + self.shm_size as u64;
        if shm_end > self.ram_base as u64 && (crate::runtime::SHM_BASE as u64) < self.ram_base as u64 + self.ram_size as u64 {
            return bad("shared memory window overlaps RAM");
        }
        if !self.shm_size.is_multiple_of(4) {
            return bad("shm_size must be a multiple of 4");
        }
        if !self.stack_size.is_multiple_of(16) {
            return bad("stack_size must be a multiple of 16");
        }
        let stacks = self.total_threads() * self.stack_size as u64;
        if stacks > self.ram_size as u64 / 2 {
            return bad("per-thread stacks would take more than half of RAM");
        }
        if self.local_barriers == 0 || self.global_barriers == 0 {
            return bad("barrier tables need at least one entry");
        }
        if self.tex_stages == 0 || self.tex_stages > crate::isa::TEX_STAGE_FIELD_LIMIT {
            return bad("tex_stages must be in 1..=4");
        }
        if self.lsu_queue == 0 {
            return bad("lsu_queue must be >= 1");
        }
        if self.ipdom_depth > 1024 {
            return bad("ipdom_depth is limited to 1024");
        }
        Ok(())
    }
}
