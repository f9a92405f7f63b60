//! `key=value` config files. Keys are long flag names; values given on the
//! command line win because clap keeps the last occurrence.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Command;

/// Parses config text into ordered `(key, value)` pairs.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, found {line:?}", i + 1);
        };
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<(usize, usize, OsString)> {
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return args.get(i + 1).map(|p| (i, 2, p.clone()));
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some((i, 1, OsString::from(p)));
        }
    }
    None
}

/// Inserts the config file's flags right after the subcommand name so that
/// explicit flags, which follow, override them. Keys that belong to another
/// subcommand are ignored; keys no subcommand knows are an error.
pub fn expand_args(args: Vec<OsString>, cli: &Command) -> Result<Vec<OsString>> {
    let Some((at, width, path)) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .with_context(|| format!("cannot read config file {}", Path::new(&path).display()))?;
    let pairs = parse_config(&text)?;
    let mut rest: Vec<OsString> = args[..at].to_vec();
    rest.extend_from_slice(&args[at + width..]);

    let Some(sub_pos) = rest
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| !a.to_string_lossy().starts_with('-'))
        .map(|(i, _)| i)
    else {
        return Ok(rest);
    };
    let sub_name = rest[sub_pos].to_string_lossy().to_string();
    let Some(sub) = cli.find_subcommand(&sub_name) else {
        return Ok(rest);
    };

    let mut injected = Vec::new();
    for (key, value) in pairs {
        let known_anywhere = cli
            .get_subcommands()
            .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
        if !known_anywhere {
            bail!("config key {key:?} is not a known flag");
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            continue;
        };
        if arg.get_action().takes_values() {
            injected.push(OsString::from(format!("--{key}")));
            injected.push(OsString::from(value));
        } else {
            match value.as_str() {
                "true" | "1" | "yes" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "0" | "no" => {}
                other => bail!("config key {key:?} expects true or false, found {other:?}"),
            }
        }
    }
    let mut out = rest[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&rest[sub_pos + 1..]);
    Ok(out)
}
