//! `sim`: runs a flat RV32 kernel image on the simulated GPU and prints
//! statistics as JSON.
//!
//! Exit status: 0 completed, 1 usage or configuration error, 2 timeout,
//! 3 fault.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use rvsimt::config::CONFIG_KEYS;
use rvsimt::kernels::{self, TexGrid};
use rvsimt::sweep::{self, SweepOutcome, Workload};
use rvsimt::texture::{Filter, TexFormat};
use rvsimt::{KernelImage, Processor, ProcessorConfig, Termination};

const EXIT_USAGE: u8 = 1;
const EXIT_TIMEOUT: u8 = 2;
const EXIT_FAULT: u8 = 3;

/// Alternative names accepted for config keys.
const ALIASES: &[(&str, &str)] = &[("num_virtual_ports", "dcache_ports"), ("virtual_ports", "dcache_ports")];

const BUILTINS: &[&str] = &["ok", "empty", "fma", "stream", "same-line", "vecadd", "texture-grid"];

struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn flag_name(key: &str) -> &'static str {
    Box::leak(key.replace('_', "-").into_boxed_str())
}

fn cli() -> Command {
    let mut run = Command::new("sim")
        .about("Cycle-level RISC-V SIMT GPU simulator")
        .version(env!("CARGO_PKG_VERSION"))
        .args_conflicts_with_subcommands(true)
        .arg(Arg::new("kernel").long("kernel").value_name("PATH").help("Flat little-endian RV32 image").required(true))
        .arg(Arg::new("base").long("base").value_name("ADDR").help("Load address [default: RAM base]"))
        .arg(Arg::new("entry").long("entry").value_name("ADDR").help("Entry point [default: load address]"))
        .arg(Arg::new("config").long("config").value_name("PATH").help("key = value configuration file"))
        .arg(Arg::new("out").long("out").value_name("PATH").help("Write the JSON report here instead of stdout"))
        .arg(
            Arg::new("max-cycles")
                .long("max-cycles")
                .value_name("N")
                .default_value("100000000")
                .value_parser(clap::value_parser!(u64)),
        )
        .arg(Arg::new("trace").long("trace").value_name("PATH").help("Write issued instructions as CSV lines"))
        .arg(Arg::new("trace-start").long("trace-start").value_name("CYCLE").value_parser(clap::value_parser!(u64)))
        .arg(Arg::new("trace-end").long("trace-end").value_name("CYCLE").value_parser(clap::value_parser!(u64)))
        .arg(
            Arg::new("texture")
                .long("texture")
                .value_name("PATH:ADDR")
                .action(ArgAction::Append)
                .help("Preload a raw file into RAM at ADDR"),
        )
        .arg(Arg::new("sweep").long("sweep").value_name("KEY=V1,V2,...").help("Run once per value of a config key"))
        .arg(Arg::new("csv").long("csv").value_name("PATH").help("With --sweep, also write a CSV table"))
        .subcommand(
            Command::new("gen-kernel")
                .about("Write one of the built-in kernels as a flat image")
                .arg(Arg::new("name").required(true).value_parser(BUILTINS.to_vec()))
                .arg(Arg::new("out").long("out").value_name("PATH").required(true))
                .arg(Arg::new("base").long("base").value_name("ADDR"))
                .arg(
                    Arg::new("param")
                        .long("param")
                        .value_name("N")
                        .value_parser(clap::value_parser!(u32))
                        .help("Iterations, elements or texture size, depending on the kernel"),
                ),
        );
    for key in CONFIG_KEYS {
        run = run.arg(
            Arg::new(*key)
                .long(flag_name(key))
                .value_name("VALUE")
                .help(format!("Override config key {key}"))
                .help_heading("Configuration"),
        );
    }
    run
}

fn parse_addr(s: &str) -> Result<u32, UsageError> {
    let t = s.trim().replace('_', "");
    let v = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => t.parse(),
    };
    v.map_err(|_| UsageError(format!("bad address '{s}'")))
}

fn config_from(m: &ArgMatches) -> Result<ProcessorConfig, UsageError> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| UsageError(format!("reading {path}: {e}")))?;
            ProcessorConfig::from_kv_str(&text)?
        }
        None => ProcessorConfig::default(),
    };
    for key in CONFIG_KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn workload_from(m: &ArgMatches, cfg: &ProcessorConfig) -> Result<Workload, UsageError> {
    let path = m.get_one::<String>("kernel").expect("required");
    let base = m.get_one::<String>("base").map(|s| parse_addr(s)).transpose()?.unwrap_or(cfg.ram_base);
    let mut image = KernelImage::from_file(Path::new(path), base)?;
    if let Some(e) = m.get_one::<String>("entry") {
        image = image.with_entry(parse_addr(e)?);
    }
    image.validate(cfg)?;
    let mut w = Workload::new(image);
    for arg in m.get_many::<String>("texture").into_iter().flatten() {
        let (file, addr) = arg.rsplit_once(':').ok_or_else(|| UsageError(format!("--texture wants PATH:ADDR, got '{arg}'")))?;
        let bytes = fs::read(file).map_err(|e| UsageError(format!("reading {file}: {e}")))?;
        w = w.with_data(parse_addr(addr)?, bytes);
    }
    Ok(w)
}

fn emit(out: Option<&String>, text: &str) -> Result<(), UsageError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| UsageError(format!("writing {path}: {e}"))),
        None => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn exit_for(t: Termination) -> u8 {
    match t {
        Termination::Completed => 0,
        Termination::Timeout => EXIT_TIMEOUT,
        Termination::Fault => EXIT_FAULT,
    }
}

fn run_once(m: &ArgMatches, cfg: ProcessorConfig, w: &Workload) -> Result<u8, UsageError> {
    let start = m.get_one::<u64>("trace-start").copied().unwrap_or(0);
    let end = m.get_one::<u64>("trace-end").copied().unwrap_or(u64::MAX);
    if start > end {
        return Err(UsageError(format!("--trace-start {start} is after --trace-end {end}")));
    }
    let mut p = Processor::new(cfg)?;
    p.load_image(&w.image)?;
    for (addr, bytes) in &w.preload {
        p.write_bytes(*addr, bytes)?;
    }
    let trace_path = m.get_one::<String>("trace");
    if trace_path.is_some() {
        p.set_trace_window(start, end);
    }
    let stats = p.run(*m.get_one::<u64>("max-cycles").expect("defaulted"));
    if let Some(path) = trace_path {
        let text: String = p.trace().iter().map(|r| format!("{r}\n")).collect();
        fs::write(path, text).map_err(|e| UsageError(format!("writing {path}: {e}")))?;
    }
    if let Some(f) = &stats.fault {
        eprintln!("fault: {f}");
    }
    emit(m.get_one("out"), &stats.to_json())?;
    Ok(exit_for(stats.terminated))
}

fn run_sweep(m: &ArgMatches, cfg: ProcessorConfig, w: Workload, arg: &str) -> Result<u8, UsageError> {
    let (key, list) = arg.split_once('=').ok_or_else(|| UsageError(format!("--sweep wants KEY=V1,V2,..., got '{arg}'")))?;
    let key = key.trim().replace('-', "_");
    let key = ALIASES.iter().find(|(a, _)| *a == key).map_or(key.as_str(), |(_, k)| k).to_string();
    if cfg.get(&key).is_none() {
        return Err(UsageError(format!("unknown config key '{key}'")));
    }
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<u64>().map_err(|_| UsageError(format!("bad sweep value '{v}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    if m.get_one::<String>("trace").is_some() {
        return Err(UsageError("--trace cannot be combined with --sweep".into()));
    }
    let max = *m.get_one::<u64>("max-cycles").expect("defaulted");
    let points = sweep::sweep(&cfg, &key, &values, max, |_| w.clone());
    if let Some(path) = m.get_one::<String>("csv") {
        fs::write(path, sweep::to_csv(&key, &points)).map_err(|e| UsageError(format!("writing {path}: {e}")))?;
    }
    let doc = serde_json::json!({ "axis": key, "points": points });
    emit(m.get_one("out"), &serde_json::to_string_pretty(&doc)?)?;
    let code = points
        .iter()
        .map(|p| match &p.outcome {
            SweepOutcome::Stats(s) => exit_for(s.terminated),
            SweepOutcome::Error(e) => {
                eprintln!("{key}={}: {e}", p.value);
                EXIT_FAULT
            }
        })
        .max()
        .unwrap_or(0);
    Ok(code)
}

fn gen_kernel(m: &ArgMatches) -> Result<u8, UsageError> {
    let base = m.get_one::<String>("base").map(|s| parse_addr(s)).transpose()?.unwrap_or(ProcessorConfig::default().ram_base);
    let param = m.get_one::<u32>("param").copied();
    let image = match m.get_one::<String>("name").expect("required").as_str() {
        "ok" => kernels::console_ok(base),
        "empty" => kernels::empty(base),
        "fma" => kernels::fma(base, param.unwrap_or(500)),
        "stream" => kernels::stream(base, param.unwrap_or(256), 0x10_0000),
        "same-line" => kernels::same_line(base, param.unwrap_or(64)),
        "vecadd" => kernels::vecadd(base, param.unwrap_or(64)),
        _ => {
            let size = param.unwrap_or(64);
            kernels::texture_grid(
                base,
                TexGrid {
                    tex_addr: 0x8200_0000,
                    width: size,
                    height: size,
                    format: TexFormat::Rgba8,
                    filter: Filter::Bilinear,
                    out_addr: kernels::DATA_BASE,
                    out_width: size,
                    out_height: size,
                    lod: 0,
                },
            )
        }
    };
    let out = PathBuf::from(m.get_one::<String>("out").expect("required"));
    fs::write(&out, &image.bytes).map_err(|e| UsageError(format!("writing {}: {e}", out.display())))?;
    Ok(0)
}

fn main() -> ExitCode {
    let m = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match m.subcommand() {
        Some(("gen-kernel", sub)) => gen_kernel(sub),
        _ => config_from(&m).and_then(|cfg| {
            let w = workload_from(&m, &cfg)?;
            match m.get_one::<String>("sweep") {
                Some(arg) => run_sweep(&m, cfg, w, arg),
                None => run_once(&m, cfg, &w),
            }
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
