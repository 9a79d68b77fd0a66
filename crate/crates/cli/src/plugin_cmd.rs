//! Plugin object tooling: source to object, object to listing, bundle
//! loading and load-time measurement.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Subcommand;
use fan_plugin_manager::{AttachMode, HookConfig, PluginDescriptor, PluginManager};
use fan_vm::{assemble_named, decode_program, disassemble, encode_program, Program};

#[derive(Subcommand)]
pub enum PluginCmd {
    /// Assemble plugin source into an object file
    Assemble {
        /// Source file, one instruction per line
        input: PathBuf,
        /// Output path; defaults to the input with extension `.o`
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decode, validate and disassemble an object file
    Inspect { object: PathBuf },
    /// Load a descriptor and its objects into a fresh manager
    Load {
        descriptor: PathBuf,
        /// Directory object names resolve in; defaults to the
        /// descriptor's directory
        #[arg(long)]
        objects: Option<PathBuf>,
    },
    /// Write the built-in defense bundle (descriptor, sources, objects)
    /// into a directory
    Emit {
        #[arg(default_value = "dropmark-defense")]
        dir: PathBuf,
    },
    /// Measure how long the built-in defense bundle takes to load,
    /// cold and out of the content cache
    Bench {
        #[arg(long, default_value_t = 200)]
        iterations: usize,
    },
}

pub fn run(cmd: PluginCmd) -> anyhow::Result<()> {
    match cmd {
        PluginCmd::Assemble { input, output } => assemble_file(&input, output),
        PluginCmd::Inspect { object } => inspect(&object),
        PluginCmd::Load { descriptor, objects } => load(&descriptor, objects),
        PluginCmd::Emit { dir } => emit(&dir),
        PluginCmd::Bench { iterations } => bench(iterations),
    }
}

fn assemble_file(input: &Path, output: Option<PathBuf>) -> anyhow::Result<()> {
    let source =
        fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let symbol = input.file_stem().and_then(|s| s.to_str()).unwrap_or("plugin");
    let program = assemble_named(&source, symbol)?;
    let object = encode_program(&program.insns);
    let out = output.unwrap_or_else(|| input.with_extension("o"));
    fs::write(&out, &object).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "{}: {} instructions, {} bytes",
        out.display(),
        program.insns.len(),
        object.len()
    );
    Ok(())
}

fn inspect(path: &Path) -> anyhow::Result<()> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let insns = decode_program(&bytes)?;
    let symbol = path.file_stem().and_then(|s| s.to_str()).unwrap_or("object");
    let program = Program::new(insns, symbol)?;
    println!("{}: {} instructions, validates", path.display(), program.insns.len());
    for line in disassemble(&program).lines() {
        println!("  {line}");
    }
    Ok(())
}

fn load(descriptor_path: &Path, objects: Option<PathBuf>) -> anyhow::Result<()> {
    let text = fs::read_to_string(descriptor_path)
        .with_context(|| format!("reading {}", descriptor_path.display()))?;
    let descriptor = PluginDescriptor::parse(&text)?;
    let dir = objects.unwrap_or_else(|| {
        descriptor_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf()
    });

    let mut mgr = PluginManager::new();
    let hooks: BTreeSet<&str> = descriptor.entries.iter().map(|e| e.hook.as_str()).collect();
    for hook in hooks {
        mgr.register_hook(hook, HookConfig::default());
    }
    let mut resolve = |name: &str| fs::read(dir.join(name)).ok();
    let ids = mgr.load_descriptor("cli", &descriptor, &mut resolve)?;
    let (hits, misses) = mgr.cache_stats();
    println!(
        "loaded {} entry points into a {} byte sandbox ({} objects decoded, {} cache hits)",
        ids.len(),
        descriptor.memory,
        misses,
        hits
    );
    for info in mgr.attachments() {
        let mode = match info.mode {
            AttachMode::Add => "add",
            AttachMode::Replace => "replace",
        };
        let param = info
            .param
            .map(|p| format!(" param {p}"))
            .unwrap_or_default();
        println!("  {} <- {} ({}{})", info.hook, info.protocol, mode, param);
    }
    Ok(())
}

fn emit(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, bytes: &[u8]| -> anyhow::Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        println!("  {}", path.display());
        Ok(())
    };
    write("dropmark_defense.plugin", fan_sim::defense::DESCRIPTOR.as_bytes())?;
    for (name, source) in fan_sim::defense::sources() {
        write(&name, source.as_bytes())?;
    }
    for (name, object) in fan_sim::defense::objects() {
        write(&name, &object)?;
    }
    Ok(())
}

fn bench(iterations: usize) -> anyhow::Result<()> {
    if iterations == 0 {
        bail!("iterations must be positive");
    }
    let objects = fan_sim::defense::objects();
    let mut cold = Vec::with_capacity(iterations);
    let mut cached = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut mgr = PluginManager::new();
        let start = Instant::now();
        for (name, object) in &objects {
            mgr.load_program(object, name)?;
        }
        cold.push(start.elapsed());
        let start = Instant::now();
        for (name, object) in &objects {
            mgr.load_program(object, name)?;
        }
        cached.push(start.elapsed());
    }
    cold.sort();
    cached.sort();
    println!(
        "defense bundle, {} objects, {} iterations:",
        objects.len(),
        iterations
    );
    println!(
        "  cold load (decode + validate) median {:>8.1} us",
        cold[iterations / 2].as_secs_f64() * 1e6
    );
    println!(
        "  cached load (content hash hit) median {:>8.1} us",
        cached[iterations / 2].as_secs_f64() * 1e6
    );
    Ok(())
}
