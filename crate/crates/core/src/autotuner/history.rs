//! JSON-lines tuning history, one measurement per line.

use super::Measurement;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("cannot access history {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: invalid measurement: {source}")]
    Parse { path: String, line: usize, source: serde_json::Error },
}

pub fn read_history(path: &Path) -> Result<Vec<Measurement>, HistoryError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| HistoryError::Io { path: p.clone(), source })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| HistoryError::Parse { path: p.clone(), line: i + 1, source }))
        .collect()
}

pub fn write_history(path: &Path, history: &[Measurement]) -> Result<(), HistoryError> {
    let io = |source| HistoryError::Io { path: path.display().to_string(), source };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for m in history {
        writeln!(f, "{}", serde_json::to_string(m).expect("measurement serializes")).map_err(io)?;
    }
    f.flush().map_err(io)
}
