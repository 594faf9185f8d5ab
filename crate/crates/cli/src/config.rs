//! Flat `key = value` config files, merged into argv so that flags win.

use std::fs;
use std::path::Path;

use clap::CommandFactory;

use crate::Cli;

/// Two-word spellings accepted alongside the hyphenated subcommands.
const SPLIT_COMMANDS: [(&str, &str, &str); 3] =
    [("birkhoff", "verify", "birkhoff-verify"), ("nonres", "scan", "nonres-scan"), ("nonres", "measure", "nonres-measure")];

pub fn normalize(args: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut i = 0;
    while i < args.len() {
        let joined = SPLIT_COMMANDS
            .iter()
            .find(|(a, b, _)| args[i] == *a && args.get(i + 1).is_some_and(|n| n == b))
            .map(|(_, _, j)| j.to_string());
        match joined {
            Some(j) => {
                out.push(j);
                i += 2;
            }
            None => {
                out.push(args[i].clone());
                i += 1;
            }
        }
    }
    out
}

fn config_path(args: &[String]) -> Option<String> {
    args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        let key = k.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(format!("line {}: empty key", n + 1));
        }
        pairs.push((key.to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Inserts the config entries as flags right after the subcommand, ahead of
/// anything given on the command line.
pub fn merge(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let pairs = parse_file(&text)?;
    let cmd = Cli::command();
    let Some(pos) = args.iter().position(|a| cmd.find_subcommand(a).is_some()) else { return Ok(args) };
    let sub = cmd.find_subcommand(&args[pos]).expect("found above");
    let mut injected = Vec::new();
    for (key, value) in pairs {
        let arg = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else { return Err(format!("config key `{key}` is not a flag of `{}`", args[pos])) };
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}"));
            injected.push(value);
        } else {
            match value.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                _ => return Err(format!("config key `{key}` is a switch; use true or false")),
            }
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let p = parse_file("# sweep\nnu = 0.1\n\nrho1=1.5 # inline\n").unwrap();
        assert_eq!(p, vec![("nu".into(), "0.1".into()), ("rho1".into(), "1.5".into())]);
        assert!(parse_file("nu 0.1").is_err());
    }

    #[test]
    fn two_word_commands() {
        let v: Vec<String> = ["cnls", "nonres", "scan", "--nu", "0.1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(normalize(v)[1], "nonres-scan");
    }
}
