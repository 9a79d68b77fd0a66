//! Plugin descriptor files: one `memory <bytes>` line, then one line per
//! entry point naming the hook, the protocol that owns the hook's field
//! keys, an optional parameter, the attach mode and the bytecode object.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct DescriptorError {
    pub line: usize,
    pub kind: DescriptorErrorKind,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DescriptorErrorKind {
    #[error("descriptor must start with `memory <bytes>`")]
    MissingMemory,
    #[error("memory size is not a number")]
    BadMemory,
    #[error("entry must be `<hook> <protocol> [param <value>] <add|replace> <object>`")]
    MalformedEntry,
    #[error("unknown attach mode `{0}`")]
    UnknownMode(String),
    #[error("param value is not a number")]
    BadParam,
}

fn err(line: usize, kind: DescriptorErrorKind) -> DescriptorError {
    DescriptorError { line, kind }
}

/// Whether an attachment replaces the hook's native behavior or runs in
/// addition to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttachMode {
    Add,
    Replace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryPoint {
    pub hook: String,
    pub protocol: String,
    pub param: Option<u64>,
    pub mode: AttachMode,
    /// Bytecode object name, resolved by the loader.
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluginDescriptor {
    /// Sandbox heap size in bytes, shared by all entry points.
    pub memory: u64,
    pub entries: Vec<EntryPoint>,
}

impl PluginDescriptor {
    pub fn parse(text: &str) -> Result<PluginDescriptor, DescriptorError> {
        let mut memory: Option<u64> = None;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if memory.is_none() {
                if tokens.len() != 2 || tokens[0] != "memory" {
                    return Err(err(line_no, DescriptorErrorKind::MissingMemory));
                }
                let bytes = tokens[1]
                    .parse()
                    .map_err(|_| err(line_no, DescriptorErrorKind::BadMemory))?;
                memory = Some(bytes);
                continue;
            }
            let (param, mode_at) = match tokens.len() {
                4 => (None, 2),
                6 if tokens[2] == "param" => {
                    let value = tokens[3]
                        .parse()
                        .map_err(|_| err(line_no, DescriptorErrorKind::BadParam))?;
                    (Some(value), 4)
                }
                _ => return Err(err(line_no, DescriptorErrorKind::MalformedEntry)),
            };
            let mode = match tokens[mode_at] {
                "add" => AttachMode::Add,
                "replace" => AttachMode::Replace,
                other => {
                    return Err(err(line_no, DescriptorErrorKind::UnknownMode(other.to_string())))
                }
            };
            entries.push(EntryPoint {
                hook: tokens[0].to_string(),
                protocol: tokens[1].to_string(),
                param,
                mode,
                object: tokens[mode_at + 1].to_string(),
            });
        }
        let memory = memory.ok_or_else(|| err(1, DescriptorErrorKind::MissingMemory))?;
        Ok(PluginDescriptor { memory, entries })
    }
}
