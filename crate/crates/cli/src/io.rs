use crate::error::{usage, CliResult};
use qtomo::oscore::DensityMatrix;
use qtomo::sampler::{read_csv, MeasurementRecord};
use serde_json::Value;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    serde_json::from_str(&read_text(path)?).map_err(|e| usage(format!("{}: invalid JSON: {e}", path.display())))
}

pub fn read_state(path: &Path) -> CliResult<DensityMatrix> {
    let text = read_text(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_records(path: &Path) -> CliResult<Vec<MeasurementRecord>> {
    let file = File::open(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(read_csv(BufReader::new(file))?)
}

/// Writes `artifact` to `out`, or to stdout when no path is given. The summary
/// goes to stdout after a file write and to stderr otherwise, so stdout always
/// carries exactly one document.
pub fn emit(out: Option<&PathBuf>, artifact: &[u8], summary: &Value) -> CliResult<()> {
    match out {
        Some(path) => {
            std::fs::write(path, artifact).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(artifact).map_err(qtomo::Error::Io)?;
            stdout.flush().map_err(qtomo::Error::Io)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

/// JSON documents end with a newline on disk and on stdout.
pub fn json_bytes(v: &impl serde::Serialize) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}
