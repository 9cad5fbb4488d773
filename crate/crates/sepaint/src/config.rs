//! `key = value` config files that pre-fill subcommand flags.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses `key = value` lines; `#` starts a comment. Keys may use `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::format(offset, format!("expected key = value, found {body:?}")));
            };
            let key = key.trim().replace('_', "-");
            if key.is_empty() || key.starts_with('-') {
                return Err(Error::format(offset, format!("bad key {key:?}")));
            }
            out.push((key, value.trim().to_string()));
        }
        offset += line.len();
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text).map_err(|e| e.at(path))
}

/// Value of `--config` in `argv`, if any.
pub fn find_config_flag(argv: &[OsString]) -> Option<OsString> {
    let mut iter = argv.iter().skip(1);
    while let Some(arg) = iter.next() {
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            return iter.next().cloned();
        }
        if let Some(v) = arg.to_str().and_then(|s| s.strip_prefix("--config=")) {
            return Some(v.into());
        }
    }
    None
}

/// Inserts `--key=value` for every entry right after the subcommand name,
/// so flags given on the command line still win.
pub fn splice(argv: &[OsString], globals_with_values: &[&str], entries: &[(String, String)]) -> Vec<OsString> {
    let mut pos = 1;
    while pos < argv.len() {
        let arg = argv[pos].to_string_lossy();
        if globals_with_values.iter().any(|g| arg == *g) {
            pos += 2;
        } else if arg.starts_with('-') {
            pos += 1;
        } else {
            break;
        }
    }
    let mut out: Vec<OsString> = argv[..(pos + 1).min(argv.len())].to_vec();
    if pos < argv.len() {
        out.extend(entries.iter().map(|(k, v)| OsString::from(format!("--{k}={v}"))));
        out.extend_from_slice(&argv[pos + 1..]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let got = parse("# header\nseed = 7\nlook_backs=2 # inline\n\n").unwrap();
        assert_eq!(got, vec![("seed".into(), "7".into()), ("look-backs".into(), "2".into())]);
        assert!(matches!(parse("seed 7\n"), Err(Error::Format { offset: 0, .. })));
        assert!(matches!(parse("a=1\n= 3\n"), Err(Error::Format { offset: 4, .. })));
    }

    #[test]
    fn splices_after_subcommand() {
        let argv: Vec<OsString> = ["sepaint", "--out-dir", "o", "inpaint", "--seed", "3"].map(OsString::from).to_vec();
        let out = splice(&argv, &["--out-dir", "--config"], &[("seed".into(), "1".into())]);
        let out: Vec<_> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(out, ["sepaint", "--out-dir", "o", "inpaint", "--seed=1", "--seed", "3"]);
        assert_eq!(find_config_flag(&["x".into(), "--config=a.cfg".into()]), Some("a.cfg".into()));
    }
}
