//! JSON config files: every key `k` becomes `--k value` right after the
//! subcommand, unless the command line already sets it. For subcommands whose
//! mode is positional, `mode` is the fallback used when no mode is given.

use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;

use crate::CliError;

const POSITIONAL_MODE: [&str; 2] = ["sternfeld", "nusg"];

/// Removes `--config FILE` from `argv` and splices the file's flags in.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| CliError::Usage("--config needs a file".into()))?,
            );
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    if rest.len() < 2 {
        return Ok(rest);
    }
    let positional_mode = POSITIONAL_MODE.contains(&rest[1].to_string_lossy().as_ref());
    let injected = config_flags(Path::new(&path), &rest[2..], positional_mode)?;
    rest.splice(2..2, injected);
    Ok(rest)
}

fn config_flags(
    path: &Path,
    user: &[OsString],
    positional_mode: bool,
) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!("config {} is not valid JSON: {e}", path.display()))
    })?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage("config must be a JSON object".into()));
    };
    let given = |flag: &str| {
        user.iter().any(|a| {
            let a = a.to_string_lossy();
            a == flag || a.starts_with(&format!("{flag}="))
        })
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let name = key.replace('_', "-");
        let flag = if name == "mode" && positional_mode {
            "--config-mode".to_string()
        } else {
            format!("--{name}")
        };
        if given(&flag) {
            continue;
        }
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Array(items) if items.is_empty() => {}
            Value::Bool(true) => out.push(flag.into()),
            Value::Number(n) => out.extend([flag.into(), n.to_string().into()]),
            Value::String(s) => out.extend([flag.into(), s.into()]),
            Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        _ => Err(CliError::Usage(format!(
                            "config key {key}: lists hold numbers or strings"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .join(",");
                out.extend([flag.into(), joined.into()]);
            }
            Value::Object(_) => {
                return Err(CliError::Usage(format!(
                    "config key {key}: nested objects are not flags"
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn command_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"shots": 10, "number_qubits": 3, "thetas": [0.1, 0.2], "mode": "gap", "toroidal": true}"#)
            .unwrap();
        let argv = os(&[
            "recurlab",
            "nusg",
            "--shots",
            "99",
            "--config",
            p.to_str().unwrap(),
        ]);
        let merged: Vec<String> = merge_config(argv)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(
            merged,
            [
                "recurlab",
                "nusg",
                "--config-mode",
                "gap",
                "--number-qubits",
                "3",
                "--thetas",
                "0.1,0.2",
                "--toroidal",
                "--shots",
                "99"
            ]
        );
    }

    #[test]
    fn mode_is_a_flag_elsewhere() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"mode": "greedy"}"#).unwrap();
        let argv = os(&["recurlab", "tensor-factor", "--config", p.to_str().unwrap()]);
        let merged: Vec<String> = merge_config(argv)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(merged, ["recurlab", "tensor-factor", "--mode", "greedy"]);
    }

    #[test]
    fn no_config_is_identity() {
        let argv = os(&["recurlab", "paper-numbers"]);
        assert_eq!(merge_config(argv.clone()).unwrap(), argv);
    }
}
