//! Key-value config files: `key = value` per line, `#` comments. Keys are
//! long flag names (`-` or `_` separated); `mode` selects the subcommand.
//! File values are spliced in ahead of command-line flags, so flags win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::CliError;

pub const SUBCOMMANDS: [&str; 5] = ["keyrate", "sweep", "montecarlo", "attack", "figure"];

/// Parsed `(key, value)` pairs in file order, keys normalised to kebab case.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected 'key = value'", n + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn take_config_path(args: &mut Vec<OsString>) -> Result<Option<OsString>, CliError> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy().into_owned();
        if a == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Usage("config: missing path".into()));
            }
            let path = args.remove(i + 1);
            args.remove(i);
            return Ok(Some(path));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            args.remove(i);
            return Ok(Some(p.into()));
        }
        i += 1;
    }
    Ok(None)
}

/// Splices the `--config` file (if any) into `args`.
pub fn expand_args(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = take_config_path(&mut args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("config: cannot read {}: {e}", Path::new(&path).display())))?;
    let pairs = parse_config(&text)?;

    let cli_sub = args.get(1).map(|a| a.to_string_lossy().into_owned()).filter(|a| !a.starts_with('-'));
    let mut file_mode = None;
    let mut flags: Vec<OsString> = Vec::new();
    for (k, v) in pairs {
        match (k.as_str(), v.as_str()) {
            ("mode", _) => file_mode = Some(v),
            (_, "true") => flags.push(format!("--{k}").into()),
            (_, "false") => {}
            _ => flags.push(format!("--{k}={v}").into()),
        }
    }

    let mut out = vec![args.first().cloned().unwrap_or_else(|| "cvqkd".into())];
    let rest_start = match (cli_sub, file_mode) {
        (Some(sub), _) => {
            out.push(sub.into());
            2
        }
        (None, Some(mode)) => {
            if !SUBCOMMANDS.contains(&mode.as_str()) {
                return Err(CliError::Usage(format!("mode: unknown mode '{mode}'")));
            }
            out.push(mode.into());
            1
        }
        (None, None) => return Err(CliError::Usage("mode: no subcommand given".into())),
    };
    out.extend(flags);
    out.extend(args.into_iter().skip(rest_start));
    Ok(out)
}

/// Effective settings of the parsed subcommand as a config file that
/// reproduces the run.
pub fn dump_config(cmd: &clap::Command, m: &clap::ArgMatches) -> String {
    let mut out = format!("mode = {}\n", cmd.get_name());
    for arg in cmd.get_arguments() {
        let id = arg.get_id().as_str();
        if id == "config" || id == "dump_config" {
            continue;
        }
        let Some(vals) = m.get_raw(id) else { continue };
        for v in vals {
            out.push_str(&format!("{} = {}\n", id.replace('_', "-"), v.to_string_lossy()));
        }
    }
    out
}
