//! Timing emitted variants with a user-supplied command.

use crate::emit::{EmitError, EmittedVariant, WrittenFiles};
use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};
use thiserror::Error;

pub const PLACEHOLDERS: [&str; 3] = ["{cl}", "{host}", "{manifest}"];

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("measurement command exited with {code:?}: {stderr}")]
    Exit { code: Option<i32>, stderr: String },
    #[error("measurement command timed out after {0:.1} s")]
    Timeout(f64),
    #[error("cannot parse milliseconds from measurement output line `{0}`")]
    Parse(String),
    #[error("measurement command template has none of {{cl}}, {{host}}, {{manifest}}")]
    Template,
    #[error("measurement I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Emit(#[from] EmitError),
}

fn quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

pub fn expand_template(command: &str, files: &WrittenFiles) -> String {
    command
        .replace("{cl}", &quote(&files.kernel))
        .replace("{host}", &quote(&files.host))
        .replace("{manifest}", &quote(&files.manifest))
}

/// The last non-empty line of `stdout` as a float, in milliseconds.
pub fn parse_millis(stdout: &str) -> Result<f64, MeasureError> {
    let line = stdout.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    let token = line.strip_suffix("ms").unwrap_or(line).trim();
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(MeasureError::Parse(line.to_string())),
    }
}

/// Run `sh -c command` and return its stdout, killing it after `timeout`.
pub fn run_with_timeout(command: &str, timeout: Duration) -> Result<String, MeasureError> {
    let mut child =
        Command::new("sh").arg("-c").arg(command).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn()?;
    let mut out_pipe = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");
    let out_thread = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_thread = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break s;
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(MeasureError::Timeout(timeout.as_secs_f64()));
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let stdout = out_thread.join().unwrap_or_default();
    let stderr = err_thread.join().unwrap_or_default();
    if !status.success() {
        return Err(MeasureError::Exit { code: status.code(), stderr: stderr.trim().to_string() });
    }
    Ok(stdout)
}

/// Write the variant's files to `dir`, run the command on them and parse
/// the reported time.
pub fn external_measure(
    variant: &EmittedVariant,
    command: &str,
    timeout_seconds: f64,
    dir: &Path,
) -> Result<f64, MeasureError> {
    if !PLACEHOLDERS.iter().any(|p| command.contains(p)) {
        return Err(MeasureError::Template);
    }
    let files = variant.write_files(dir)?;
    let out = run_with_timeout(&expand_template(command, &files), Duration::from_secs_f64(timeout_seconds))?;
    parse_millis(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::corpus;
    use crate::emit::emit_variant;
    use crate::execsim::DeviceProfile;
    use crate::frontend::compile_source;
    use crate::space::TuningSpace;
    use crate::transform::{apply_configuration, TransformOptions};

    fn blur() -> EmittedVariant {
        let ast = compile_source(corpus::BLUR).unwrap();
        let r = analyze(&ast).unwrap();
        let cfg = TuningSpace::build(&ast, &r, &DeviceProfile::gpu_like()).default_config();
        emit_variant(&apply_configuration(&ast, &r, &cfg, &TransformOptions::new(16, 16)).unwrap()).unwrap()
    }

    #[test]
    fn echo_reports_time() {
        let dir = tempfile::tempdir().unwrap();
        let v = blur();
        assert_eq!(external_measure(&v, "test -f {cl} && echo compiling && echo 12.5", 10.0, dir.path()).unwrap(), 12.5);
    }

    #[test]
    fn failures() {
        let dir = tempfile::tempdir().unwrap();
        let v = blur();
        assert!(matches!(external_measure(&v, "cat {manifest} >/dev/null; exit 1", 10.0, dir.path()), Err(MeasureError::Exit { code: Some(1), .. })));
        assert!(matches!(external_measure(&v, "echo fast {host}", 10.0, dir.path()), Err(MeasureError::Parse(_))));
        assert!(matches!(external_measure(&v, "sleep 5 # {cl}", 0.2, dir.path()), Err(MeasureError::Timeout(_))));
        assert!(matches!(external_measure(&v, "echo 1", 1.0, dir.path()), Err(MeasureError::Template)));
    }

    #[test]
    fn parses_last_line() {
        assert_eq!(parse_millis("warmup 3.0\n  7.25 ms \n\n").unwrap(), 7.25);
        assert!(parse_millis("").is_err());
        assert!(parse_millis("-1").is_err());
    }
}
