//! Argument assembly: `--config` files and `BLINDID_SEED`.
//!
//! Values from the config file are turned into flags placed before the
//! environment seed, which in turn precedes the user's own flags. Every
//! subcommand parses with `args_override_self`, so the last occurrence wins:
//! command line, then `BLINDID_SEED`, then the file, then built-in defaults.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

pub const SEED_ENV: &str = "BLINDID_SEED";

#[derive(Debug)]
pub enum ConfigError {
    /// Bad key or value: exit 2.
    Invalid(String),
    /// Unreadable file: exit 3.
    Io(String),
}

/// Parses flat `key = value` text. Blank lines and lines starting with `#` are
/// skipped; keys may use `_` or `-`.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Invalid(format!("config line {}: expected key=value", i + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError::Invalid(format!("config line {}: empty key", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Splits `--config PATH` / `--config=PATH` out of the arguments following the subcommand.
fn take_config(rest: &[OsString]) -> Result<(Option<OsString>, Vec<OsString>), ConfigError> {
    let mut path = None;
    let mut kept = Vec::new();
    let mut it = rest.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            kept.push(a.clone());
            kept.extend(it.cloned());
            break;
        }
        if s == "--config" {
            let p = it.next().ok_or_else(|| ConfigError::Invalid("--config needs a path".into()))?;
            path = Some(p.clone());
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            kept.push(a.clone());
        }
    }
    Ok((path, kept))
}

/// Builds the argument vector clap sees.
pub fn assemble_args(cmd: &Command, argv: Vec<OsString>, env_seed: Option<String>) -> Result<Vec<OsString>, ConfigError> {
    if argv.len() < 2 {
        return Ok(argv);
    }
    let sub_name = argv[1].to_string_lossy().into_owned();
    let Some(sub) = cmd.find_subcommand(&sub_name) else {
        // let clap report help, versions and unknown subcommands
        return Ok(argv);
    };
    let (config, rest) = take_config(&argv[2..])?;
    let known: Vec<&str> = sub.get_arguments().filter_map(|a| a.get_long()).filter(|l| *l != "config").collect();

    let mut out = vec![argv[0].clone(), argv[1].clone()];
    if let Some(path) = config {
        let text = std::fs::read_to_string(Path::new(&path))
            .map_err(|e| ConfigError::Io(format!("cannot read config {}: {e}", Path::new(&path).display())))?;
        for (key, value) in parse_config_text(&text)? {
            if !known.contains(&key.as_str()) {
                return Err(ConfigError::Invalid(format!("unknown config key `{key}` for `{sub_name}`")));
            }
            out.push(format!("--{key}").into());
            out.push(value.into());
        }
    }
    if let Some(seed) = env_seed {
        if known.contains(&"seed") {
            out.push("--seed".into());
            out.push(seed.into());
        }
    }
    out.extend(rest);
    Ok(out)
}
