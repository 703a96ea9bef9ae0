//! Command-line interface: `analyze`, `generate`, `run`, `tune`, `enumerate`.

use crate::autotuner::{read_history, tune_with, write_history, Budget, TuneError, TuneOptions, TuneResult};
use crate::execsim::io::{read_image, write_image};
use crate::execsim::{execute, BufferSet, DeviceProfile, InterpretOptions, Value};
use crate::frontend::ast::ParamKind;
use crate::pipeline::{ExternalTiming, PipelineError, Prepared, SimulatedCost};
use crate::space::Configuration;
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "imagecl", version, about = "Generate, check and tune OpenCL variants of image kernels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the analysis report and tuning space as JSON.
    Analyze {
        source: PathBuf,
        #[arg(long, default_value = "gpu-like")]
        profile: String,
    },
    /// Write the kernel, host stub and manifest for one configuration.
    Generate {
        source: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "gpu-like")]
        profile: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Interpret one configuration on input files.
    Run {
        source: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "gpu-like")]
        profile: String,
        /// `name=path` for each image or array parameter.
        #[arg(long = "input", value_name = "NAME=PATH")]
        inputs: Vec<String>,
        /// `name=value` for each scalar parameter.
        #[arg(long = "scalar", value_name = "NAME=VALUE")]
        scalars: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the execution trace as trace.json.
        #[arg(long)]
        trace: bool,
    },
    /// Search for the best configuration.
    Tune {
        source: PathBuf,
        #[arg(long, default_value = "gpu-like")]
        profile: String,
        /// Time variants with this shell command instead of the cost model;
        /// `{cl}`, `{host}` and `{manifest}` expand to the emitted files.
        #[arg(long)]
        external_cmd: Option<String>,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        n1: usize,
        #[arg(long, default_value_t = 50)]
        top_k: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Reuse measurements from the output directory's history.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        grid: TuneGridArgs,
    },
    /// Print the tuning space, its size and the first valid configurations.
    Enumerate {
        source: PathBuf,
        #[arg(long, default_value = "gpu-like")]
        profile: String,
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1024)]
    pub width: u32,
    #[arg(long, default_value_t = 1024)]
    pub height: u32,
}

#[derive(Debug, Args)]
pub struct TuneGridArgs {
    /// Width of the random image the cost model runs on.
    #[arg(long, default_value_t = 64)]
    pub width: u32,
    #[arg(long, default_value_t = 64)]
    pub height: u32,
}

/// Failure with its exit status: 1 for problems with the kernel or
/// configuration, 2 for I/O and usage problems.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(m: impl Into<String>) -> Failure {
    Failure { code: 2, message: m.into() }
}

fn domain(m: impl Into<String>) -> Failure {
    Failure { code: 1, message: m.into() }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_profile(spec: &str) -> Result<DeviceProfile, Failure> {
    match DeviceProfile::builtin(spec) {
        Ok(p) => Ok(p),
        Err(_) => DeviceProfile::load(Path::new(spec)).map_err(|e| usage(e.to_string())),
    }
}

fn prepare(source: &Path, profile: &str) -> Result<Prepared, Failure> {
    let text = read_text(source)?;
    let profile = load_profile(profile)?;
    Prepared::new(&text, &profile).map_err(|e| match e {
        PipelineError::Frontend(f) => domain(f.diagnostic(&source.display().to_string())),
        other => domain(format!("{}: {other}", source.display())),
    })
}

fn load_config(p: &Prepared, path: Option<&Path>) -> Result<Configuration, Failure> {
    let cfg = match path {
        None => p.space.default_config(),
        Some(path) => Configuration::from_json(&read_text(path)?)
            .map_err(|e| usage(format!("{}: invalid configuration file: {e}", path.display())))?,
    };
    let v = p.space.validate(&cfg);
    if !v.is_empty() {
        let list: Vec<String> = v.iter().map(|v| v.to_string()).collect();
        return Err(domain(format!("configuration violates: {}", list.join(", "))));
    }
    Ok(cfg)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn analyze(source: &Path, profile: &str) -> Result<String, Failure> {
    let p = prepare(source, profile)?;
    Ok(pretty(&serde_json::json!({ "analysis": p.report.to_json(), "space": p.space.to_json() })))
}

fn generate(source: &Path, config: Option<&Path>, profile: &str, out: &Path, grid: &GridArgs) -> Result<String, Failure> {
    let p = prepare(source, profile)?;
    let cfg = load_config(&p, config)?;
    let v = p.emit(&cfg, p.grid(grid.width, grid.height)).map_err(|e| domain(e.to_string()))?;
    create_dir(out)?;
    v.write_files(out).map_err(|e| usage(e.to_string()))?;
    Ok(format!("{}\n", v.variant_id))
}

fn split_pair<'a>(s: &'a str, flag: &str) -> Result<(&'a str, &'a str), Failure> {
    s.split_once('=').ok_or_else(|| usage(format!("--{flag} expects NAME=VALUE, got `{s}`")))
}

#[allow(clippy::too_many_arguments)]
fn run(
    source: &Path,
    config: Option<&Path>,
    profile: &str,
    inputs: &[String],
    scalars: &[String],
    out: &Path,
    trace: bool,
) -> Result<String, Failure> {
    let p = prepare(source, profile)?;
    let cfg = load_config(&p, config)?;
    let mut set = BufferSet::new();
    for spec in inputs {
        let (name, path) = split_pair(spec, "input")?;
        let param = p.ast.params.iter().find(|q| q.name == name).ok_or_else(|| usage(format!("no parameter `{name}`")))?;
        let buf = read_image(Path::new(path)).map_err(|e| usage(e.to_string()))?;
        if buf.ty != param.kind.elem() {
            return Err(usage(format!("{path}: holds {} data but `{name}` is {}", buf.ty, param.kind.elem())));
        }
        set.buffers.insert(name.to_string(), buf);
    }
    for spec in scalars {
        let (name, value) = split_pair(spec, "scalar")?;
        let param = p.ast.params.iter().find(|q| q.name == name).ok_or_else(|| usage(format!("no parameter `{name}`")))?;
        let v: f64 = value.parse().map_err(|_| usage(format!("--scalar {name}: `{value}` is not a number")))?;
        set.scalars.insert(name.to_string(), Value::from_f64(v, param.kind.elem()));
    }
    // Images absent from the inputs are outputs: allocate them zeroed at the
    // size of the first input image.
    let size = p
        .ast
        .params
        .iter()
        .filter(|q| matches!(q.kind, ParamKind::Image(_)))
        .find_map(|q| set.buffers.get(&q.name).map(|b| (b.width, b.height)));
    let (w, h) = match (size, &p.report.grid) {
        (_, crate::analysis::GridSpec::Literal { width, height }) => (*width as usize, *height as usize),
        (Some(s), _) => s,
        (None, _) => return Err(usage("no input image given to size the grid")),
    };
    for q in &p.ast.params {
        if let ParamKind::Image(t) = q.kind {
            set.buffers.entry(q.name.clone()).or_insert_with(|| crate::execsim::Buffer::filled(t, w, h, 0.0));
        }
    }
    let tk = p.variant(&cfg, [w as u32, h as u32]).map_err(|e| domain(e.to_string()))?;
    let e = execute(&tk, &set, InterpretOptions { trace, classify_accesses: false }).map_err(|e| match e {
        crate::execsim::ExecError::Input(m) => usage(m),
        other => domain(other.to_string()),
    })?;
    create_dir(out)?;
    let mut report = String::new();
    for (name, buf) in &e.outputs.buffers {
        let path = out.join(format!("{name}.imcl"));
        write_image(&path, buf).map_err(|e| usage(e.to_string()))?;
        writeln!(report, "{}", path.display()).unwrap();
    }
    if let Some(t) = &e.trace {
        let path = out.join("trace.json");
        write_text(&path, &pretty(&serde_json::to_value(t).expect("trace serializes")))?;
        writeln!(report, "{}", path.display()).unwrap();
    }
    Ok(report)
}

pub fn tune_report(r: &TuneResult, kernel: &str, signal: &str) -> String {
    let mut s = String::new();
    writeln!(s, "kernel: {kernel}").unwrap();
    writeln!(s, "signal: {signal}").unwrap();
    writeln!(s, "best cost: {}", r.best.value.unwrap_or(f64::NAN)).unwrap();
    writeln!(s, "best configuration:").unwrap();
    for (k, v) in &r.best.cfg.0 {
        writeln!(s, "  {k} = {v}").unwrap();
    }
    let failed = r.history.iter().filter(|m| !m.is_ok()).count();
    writeln!(s, "phase 1 measurements: {}", r.phase1_count).unwrap();
    writeln!(s, "phase 2 measurements: {}", r.phase2_count).unwrap();
    writeln!(s, "failed measurements: {failed}").unwrap();
    writeln!(s, "new evaluations: {}", r.evaluations).unwrap();
    if let Some(m) = &r.surrogate {
        writeln!(s, "surrogate final loss: {:.6}", m.final_loss).unwrap();
    }
    writeln!(s, "wall clock: {:.3} s", r.wall_clock).unwrap();
    s
}

#[allow(clippy::too_many_arguments)]
fn tune(
    source: &Path,
    profile: &str,
    external_cmd: Option<&str>,
    timeout: f64,
    out: &Path,
    budget: Budget,
    jobs: usize,
    resume: bool,
    grid: &TuneGridArgs,
) -> Result<String, Failure> {
    let p = prepare(source, profile)?;
    create_dir(out)?;
    let history_path = out.join("history.jsonl");
    let prior = if resume && history_path.exists() {
        read_history(&history_path).map_err(|e| usage(e.to_string()))?
    } else {
        Vec::new()
    };
    let grid = p.grid(grid.width, grid.height);
    let opts = TuneOptions { prior, jobs };
    let (result, signal) = match external_cmd {
        Some(cmd) => {
            if !(timeout > 0.0) {
                return Err(usage("--timeout must be positive"));
            }
            let eval = ExternalTiming {
                prepared: &p,
                grid,
                command: cmd.to_string(),
                timeout_seconds: timeout,
                work_dir: out.join("variants"),
                parallel: false,
            };
            (tune_with(&p.space, &eval, budget, &opts), "external command (ms)".to_string())
        }
        None => {
            let eval = SimulatedCost::new(&p, grid, budget.seed);
            (tune_with(&p.space, &eval, budget, &opts), format!("simulated cost on {} ({}x{})", p.profile.name, grid[0], grid[1]))
        }
    };
    match result {
        Ok(r) => {
            write_history(&history_path, &r.history).map_err(|e| usage(e.to_string()))?;
            write_text(&out.join("best.json"), &format!("{}\n", r.best.cfg.to_json()))?;
            let report = tune_report(&r, &p.ast.name, &signal);
            write_text(&out.join("report.txt"), &report)?;
            Ok(report)
        }
        Err(TuneError::NoValidMeasurement { history }) => {
            write_history(&history_path, &history).map_err(|e| usage(e.to_string()))?;
            Err(domain(format!("every one of {} measurements failed; history kept in {}", history.len(), history_path.display())))
        }
        Err(e @ (TuneError::BudgetTooSmall { .. } | TuneError::ZeroTopK)) => Err(usage(e.to_string())),
        Err(e) => Err(domain(e.to_string())),
    }
}

fn enumerate(source: &Path, profile: &str, limit: usize) -> Result<String, Failure> {
    let p = prepare(source, profile)?;
    let (cfgs, count) = p.space.enumerate(limit);
    Ok(pretty(&serde_json::json!({
        "space": p.space.to_json(),
        "count": count,
        "configurations": cfgs,
    })))
}

pub fn dispatch(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Analyze { source, profile } => analyze(&source, &profile),
        Command::Generate { source, config, profile, out, grid } => {
            generate(&source, config.as_deref(), &profile, &out, &grid)
        }
        Command::Run { source, config, profile, inputs, scalars, out, trace } => {
            run(&source, config.as_deref(), &profile, &inputs, &scalars, &out, trace)
        }
        Command::Tune { source, profile, external_cmd, timeout, out, n1, top_k, seed, jobs, resume, grid } => tune(
            &source,
            &profile,
            external_cmd.as_deref(),
            timeout,
            &out,
            Budget { phase1: n1, top_k, seed },
            jobs,
            resume,
            &grid,
        ),
        Command::Enumerate { source, profile, limit } => enumerate(&source, &profile, limit),
    }
}

/// Parse arguments, run, print, and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
