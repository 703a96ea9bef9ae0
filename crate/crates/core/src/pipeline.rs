//! Source-to-variant plumbing shared by the command line and the examples.

use crate::analysis::{analyze_with, AnalysisError, AnalysisOptions, AnalysisReport, GridSpec};
use crate::autotuner::{Evaluator, Measurement};
use crate::emit::{emit_variant, EmitError, EmittedVariant};
use crate::execsim::measure::{external_measure, MeasureError};
use crate::execsim::{estimate_cost, execute, BufferSet, CostReport, DeviceProfile, EventCounts, ExecError, InterpretOptions};
use crate::frontend::ast::KernelAst;
use crate::frontend::{compile_source, FrontendError};
use crate::space::{Configuration, TuningSpace, Violation};
use crate::transform::{apply_configuration, TransformError, TransformOptions, TransformedKernel};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// A parsed and analyzed kernel with its tuning space for one device.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ast: KernelAst,
    pub report: AnalysisReport,
    pub space: TuningSpace,
    pub profile: DeviceProfile,
}

impl Prepared {
    pub fn new(source: &str, profile: &DeviceProfile) -> Result<Prepared, PipelineError> {
        let ast = compile_source(source)?;
        let opts = AnalysisOptions { const_threshold_bytes: profile.const_threshold_bytes, ..Default::default() };
        let report = analyze_with(&ast, opts)?;
        let space = TuningSpace::build(&ast, &report, profile);
        Ok(Prepared { ast, report, space, profile: profile.clone() })
    }

    /// The kernel's fixed grid if it has one, else `width`×`height`.
    pub fn grid(&self, width: u32, height: u32) -> [u32; 2] {
        match self.report.grid {
            GridSpec::Literal { width, height } => [width, height],
            GridSpec::Image { .. } => [width, height],
        }
    }

    pub fn options(&self, grid: [u32; 2]) -> TransformOptions {
        TransformOptions::new(grid[0], grid[1]).with_local_mem(self.profile.local_mem_bytes)
    }

    pub fn variant(&self, cfg: &Configuration, grid: [u32; 2]) -> Result<TransformedKernel, PipelineError> {
        let v = self.space.validate(cfg);
        if !v.is_empty() {
            return Err(PipelineError::Invalid(v));
        }
        Ok(apply_configuration(&self.ast, &self.report, cfg, &self.options(grid))?)
    }

    pub fn emit(&self, cfg: &Configuration, grid: [u32; 2]) -> Result<EmittedVariant, PipelineError> {
        Ok(emit_variant(&self.variant(cfg, grid)?)?)
    }

    pub fn random_inputs(&self, grid: [u32; 2], seed: u64) -> BufferSet {
        BufferSet::random(&self.ast, grid[0] as usize, grid[1] as usize, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaunchCounts {
    pub counts: EventCounts,
    pub local_bytes: u64,
    pub wg_size: u64,
}

impl LaunchCounts {
    pub fn price(&self, profile: &DeviceProfile) -> f64 {
        CostReport::new(self.counts, profile, self.local_bytes, self.wg_size).total_cost
    }
}

/// Simulated cost of a configuration on fixed inputs.
pub struct SimulatedCost<'a> {
    pub prepared: &'a Prepared,
    pub inputs: BufferSet,
    pub grid: [u32; 2],
}

impl<'a> SimulatedCost<'a> {
    pub fn new(prepared: &'a Prepared, grid: [u32; 2], seed: u64) -> Self {
        SimulatedCost { prepared, inputs: prepared.random_inputs(grid, seed), grid }
    }

    /// Event counts of one configuration, priced later under any profile.
    pub fn counts(&self, cfg: &Configuration) -> Result<LaunchCounts, PipelineError> {
        let tk = self.prepared.variant(cfg, self.grid)?;
        let e = execute(&tk, &self.inputs, InterpretOptions { trace: false, classify_accesses: true })?;
        Ok(LaunchCounts {
            counts: e.counts,
            local_bytes: tk.local_bytes(),
            wg_size: tk.launch.local_size[0] * tk.launch.local_size[1],
        })
    }

    pub fn cost(&self, cfg: &Configuration) -> Result<f64, PipelineError> {
        let tk = self.prepared.variant(cfg, self.grid)?;
        Ok(estimate_cost(&tk, &self.inputs, &self.prepared.profile)?.total_cost)
    }
}

impl Evaluator for SimulatedCost<'_> {
    fn evaluate(&self, cfg: &Configuration) -> Measurement {
        match self.cost(cfg) {
            Ok(v) => Measurement::ok(cfg.clone(), v),
            Err(e) => Measurement::failed(cfg.clone(), e.to_string()),
        }
    }

    fn concurrency_safe(&self) -> bool {
        true
    }
}

/// Wall-clock milliseconds reported by an external command.
pub struct ExternalTiming<'a> {
    pub prepared: &'a Prepared,
    pub grid: [u32; 2],
    pub command: String,
    pub timeout_seconds: f64,
    pub work_dir: PathBuf,
    pub parallel: bool,
}

impl ExternalTiming<'_> {
    fn measure(&self, cfg: &Configuration) -> Result<f64, String> {
        let v = self.prepared.emit(cfg, self.grid).map_err(|e| e.to_string())?;
        let dir = self.work_dir.join(&v.variant_id);
        external_measure(&v, &self.command, self.timeout_seconds, &dir).map_err(|e: MeasureError| e.to_string())
    }
}

impl Evaluator for ExternalTiming<'_> {
    fn evaluate(&self, cfg: &Configuration) -> Measurement {
        match self.measure(cfg) {
            Ok(v) => Measurement::ok(cfg.clone(), v),
            Err(e) => Measurement::failed(cfg.clone(), e),
        }
    }

    fn concurrency_safe(&self) -> bool {
        self.parallel
    }
}
