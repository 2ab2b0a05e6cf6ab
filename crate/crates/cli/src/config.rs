use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::exit::usage;

pub const DATA_DIR_ENV: &str = "TBRANK_DATA_DIR";

/// Splits `--config FILE` out of the raw arguments and splices the file's
/// settings in right after the subcommand, so that flags given on the
/// command line come later and win.
///
/// The file holds `key = value` lines, where `key` is a long flag name
/// without dashes. `true`/`false` switch boolean flags on or off. Blank lines
/// and `#` comments are ignored.
pub fn expand_config(args: Vec<OsString>) -> Result<(Vec<OsString>, Option<PathBuf>)> {
    let mut out = Vec::with_capacity(args.len());
    let mut config = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            let path = iter.next().ok_or_else(|| usage("--config needs a file path"))?;
            config = Some(PathBuf::from(path));
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            out.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok((out, None));
    };
    let injected = read_config(&path)?;
    // Settings go after the subcommand: the first argument after the binary
    // name that is not an option.
    let at = out
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 2);
    match at {
        Some(at) => {
            out.splice(at..at, injected);
        }
        None => out.extend(injected),
    }
    Ok((out, Some(path)))
}

fn read_config(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut args = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key = value", path.display(), k + 1)))?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim().trim_matches('"');
        if key.is_empty() {
            return Err(usage(format!("{}:{}: empty key", path.display(), k + 1)));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            v => {
                args.push(format!("--{key}").into());
                args.push(v.into());
            }
        }
    }
    Ok(args)
}

/// Resolves a relative input path against the data directory named by
/// [`DATA_DIR_ENV`], when it is set.
pub fn input_path(p: &Path) -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if p.is_relative() && !dir.is_empty() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}
