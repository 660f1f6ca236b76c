use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    args: Vec<String>,
    output: String,
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `body` to `out` (with its sidecar) or to stdout.
pub fn emit(out: Option<&Path>, command: &str, body: &str) -> Result<(), CliError> {
    match out {
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
        Some(path) => {
            fs::write(path, body)?;
            let meta = Sidecar {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                args: std::env::args().skip(1).collect(),
                output: path.display().to_string(),
            };
            let text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
            fs::write(sidecar_path(path), text + "\n")?;
            Ok(())
        }
    }
}

/// JSON with a trailing newline.
pub fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}
