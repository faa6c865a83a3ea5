//! Defaults from a `key=value` file, merged beneath the command line.

use std::ffi::OsString;
use std::fs;

use clap::{Command, CommandFactory};

use crate::{Cli, CliError};

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {}: expected key=value, got '{line}'",
                i + 1
            ))
        })?;
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut iter = argv.iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(path) = s.strip_prefix("--config=") {
            return Some(path.into());
        }
    }
    None
}

fn given_on_command_line(argv: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_value)
    })
}

fn find_arg<'a>(cmd: &'a Command, key: &str) -> Option<&'a clap::Arg> {
    cmd.get_arguments().find(|a| a.get_long() == Some(key))
}

/// Appends config entries that the command line does not already set.
/// Keys belonging only to other subcommands are ignored; keys unknown to
/// every subcommand are a usage error.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::Usage(format!(
            "cannot read config {}: {e}",
            path.to_string_lossy()
        ))
    })?;
    let entries = parse_config(&text)?;

    let root = Cli::command();
    let sub = argv
        .iter()
        .skip(1)
        .find_map(|a| root.find_subcommand(a.to_string_lossy().as_ref()).cloned());

    let mut merged = argv.clone();
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::Usage(
                "config files cannot include other config files".into(),
            ));
        }
        let arg = find_arg(&root, &key).or_else(|| sub.as_ref().and_then(|s| find_arg(s, &key)));
        let Some(arg) = arg else {
            if root.get_subcommands().any(|s| find_arg(s, &key).is_some()) {
                continue;
            }
            return Err(CliError::Usage(format!("unknown config key '{key}'")));
        };
        if given_on_command_line(&argv, &key) {
            continue;
        }
        if arg.get_action().takes_values() {
            merged.push(format!("--{key}={value}").into());
        } else {
            match value.as_str() {
                "true" => merged.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "config key '{key}' expects true or false, got '{other}'"
                    )))
                }
            }
        }
    }
    Ok(merged)
}
