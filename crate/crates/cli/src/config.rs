//! `--config file.json` support.
//!
//! The document is a flat JSON object whose keys are long flag names
//! (`train_fraction` or `train-fraction`). Each entry becomes a flag placed
//! right after the subcommand name, unless the same flag is already on the
//! command line, so explicit flags win. Unknown keys therefore surface as
//! ordinary usage errors.

use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;

use crate::error::{CliError, CliResult};

const FLAG: &str = "--config";

/// Expands `--config` into explicit flags. Arguments are returned unchanged
/// when no config is given.
pub fn expand(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == FLAG || starts_with(a, "--config=")) else {
        return Ok(args);
    };
    // The subcommand is the first argument after the binary name.
    if pos < 2 {
        return Err(CliError::usage("--config must follow a subcommand"));
    }
    let mut args = args;
    let path: OsString = if args[pos] == FLAG {
        if pos + 1 >= args.len() {
            return Err(CliError::usage("--config requires a path"));
        }
        let path = args.remove(pos + 1);
        args.remove(pos);
        path
    } else {
        let flag = args.remove(pos);
        let s = flag.to_string_lossy();
        OsString::from(&s["--config=".len()..])
    };
    if args.iter().any(|a| a == FLAG || starts_with(a, "--config=")) {
        return Err(CliError::usage("--config given more than once"));
    }

    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spliced =
        flags_from_json(&text, &args[2..]).map_err(|m| CliError::usage(format!("config {}: {m}", path.display())))?;
    let tail = args.split_off(2);
    args.extend(spliced);
    args.extend(tail);
    Ok(args)
}

fn starts_with(arg: &OsString, prefix: &str) -> bool {
    arg.to_str().is_some_and(|s| s.starts_with(prefix))
}

fn present(existing: &[OsString], flag: &str) -> bool {
    let with_value = format!("{flag}=");
    existing
        .iter()
        .filter_map(|a| a.to_str())
        .any(|a| a == flag || a.starts_with(&with_value))
}

fn flags_from_json(text: &str, existing: &[OsString]) -> Result<Vec<OsString>, String> {
    let root: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let Value::Object(map) = root else {
        return Err("expected a JSON object".into());
    };
    let mut out = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == FLAG {
            return Err("nested config is not supported".into());
        }
        if present(existing, &flag) {
            continue;
        }
        let rendered = match value {
            Value::Null => continue,
            Value::Bool(b) => b.to_string(),
            Value::Number(n) => n.to_string(),
            Value::String(s) => s,
            Value::Array(items) => items
                .iter()
                .map(scalar)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("{key}: {e}"))?
                .join(","),
            Value::Object(_) => return Err(format!("{key}: nested objects are not supported")),
        };
        out.push(OsString::from(flag));
        out.push(OsString::from(rendered));
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err("array items must be scalars".into()),
    }
}
