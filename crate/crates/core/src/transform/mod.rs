//! Application of a tuning configuration to a kernel.
//!
//! Passes run in a fixed order: memory-space placement, coarsening and
//! thread mapping, edge guards, loop unrolling, and finally flattening of
//! global images with boundary handling. Local-memory placement runs first
//! so it still sees the `img[idx + c1][idy + c2]` subscripts it rewrites.

pub mod dump;
pub mod lower;
pub mod mapping;
mod memory;
pub mod unroll;

use crate::analysis::AnalysisReport;
use crate::frontend::ast::*;
use crate::space::{Configuration, TuningKind, COARSEN_X, COARSEN_Y, INTERLEAVED, WG_X, WG_Y};
use mapping::{AxisMap, MappingMode};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub use dump::dump;

pub const PASS_MEMORY: &str = "memory-placement";
pub const PASS_MAPPING: &str = "coarsen-and-map";
pub const PASS_GUARDS: &str = "guards";
pub const PASS_UNROLL: &str = "unroll";
pub const PASS_LOWER: &str = "lower-images-and-boundaries";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("configuration has no value for `{0}`")]
    MissingParameter(String),
    #[error("local tiles need {bytes} bytes but the device has {limit}")]
    TileTooLarge { bytes: u64, limit: u64 },
    #[error("unroll factor {factor} does not divide trip count {trip} of loop {id}")]
    BadUnrollFactor { id: LoopId, factor: u64, trip: u64 },
    #[error("grid {requested:?} does not match the kernel's fixed grid {fixed:?}")]
    GridMismatch { requested: [u32; 2], fixed: [u32; 2] },
    #[error("internal invariant violated after {pass}: {message}")]
    InternalInvariant { pass: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemorySpace {
    Global,
    Constant,
    ImageReadOnly,
    ImageWriteOnly,
    Scalar,
}

impl MemorySpace {
    pub fn is_image(self) -> bool {
        matches!(self, MemorySpace::ImageReadOnly | MemorySpace::ImageWriteOnly)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub name: String,
    pub space: MemorySpace,
    #[serde(rename = "type")]
    pub ty: ScalarType,
    /// Element count, in terms of the host stub's arguments.
    pub length: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LaunchDescriptor {
    pub global_size: [u64; 2],
    pub local_size: [u64; 2],
    pub logical_grid: [u64; 2],
    pub pixels_per_thread: [u64; 2],
    pub bindings: Vec<Binding>,
}

impl LaunchDescriptor {
    pub fn groups(&self) -> [u64; 2] {
        [self.global_size[0] / self.local_size[0], self.global_size[1] / self.local_size[1]]
    }
}

/// Work-items per axis: the least multiple of the work-group size that
/// covers `ceil(extent / coarsen)`.
pub fn global_size(extent: u64, wg: u64, coarsen: u64) -> u64 {
    extent.div_ceil(coarsen).div_ceil(wg) * wg
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TileInfo {
    pub image: String,
    pub tile: String,
    pub width: u32,
    pub height: u32,
    pub elem: ScalarType,
    /// Stencil offset of the tile's first cell.
    pub lo: [i64; 2],
}

impl TileInfo {
    pub fn bytes(&self) -> u64 {
        self.width as u64 * self.height as u64 * self.elem.size_bytes()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedKernel {
    pub name: String,
    pub params: Vec<Param>,
    pub spaces: BTreeMap<String, MemorySpace>,
    pub boundaries: BTreeMap<String, BoundaryMode>,
    pub body: Block,
    pub tiles: Vec<TileInfo>,
    pub mapping: MappingMode,
    pub launch: LaunchDescriptor,
    pub config: Configuration,
    pub provenance: Vec<String>,
    pub lowered: bool,
}

impl TransformedKernel {
    pub fn space(&self, name: &str) -> MemorySpace {
        self.spaces[name]
    }

    pub(crate) fn set_space(&mut self, name: &str, space: MemorySpace) {
        self.spaces.insert(name.to_string(), space);
    }

    pub fn elem(&self, name: &str) -> ScalarType {
        self.params.iter().find(|p| p.name == name).map(|p| p.kind.elem()).expect("known parameter")
    }

    pub fn barrier_count(&self) -> usize {
        let mut n = 0;
        self.body.walk(&mut |s| n += matches!(s.kind, StmtKind::Barrier) as usize);
        n
    }

    /// Buffer parameters the kernel stores to.
    pub fn written_buffers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.body.walk(&mut |s| match &s.kind {
            StmtKind::Assign { target: LValue::Index { array: n, .. } | LValue::Index2 { image: n, .. }, .. }
            | StmtKind::WriteImage { image: n, .. } => {
                out.insert(n.clone());
            }
            _ => {}
        });
        out
    }

    pub fn local_bytes(&self) -> u64 {
        self.tiles.iter().map(TileInfo::bytes).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformOptions {
    /// Logical grid (W, H).
    pub grid: [u32; 2],
    pub local_mem_bytes: u64,
    /// Flatten global images. Disabled only to trace raw 2D read coordinates.
    pub lower: bool,
}

impl TransformOptions {
    pub fn new(width: u32, height: u32) -> Self {
        TransformOptions { grid: [width, height], local_mem_bytes: u64::MAX, lower: true }
    }

    pub fn with_local_mem(mut self, bytes: u64) -> Self {
        self.local_mem_bytes = bytes;
        self
    }

    pub fn unlowered(mut self) -> Self {
        self.lower = false;
        self
    }
}

fn required(cfg: &Configuration, id: &str) -> Result<i64, TransformError> {
    cfg.get(id).ok_or_else(|| TransformError::MissingParameter(id.to_string()))
}

fn bindings(ast: &KernelAst, spaces: &BTreeMap<String, MemorySpace>) -> Vec<Binding> {
    let mut out: Vec<Binding> = ast
        .params
        .iter()
        .map(|p| {
            let length = match p.kind {
                ParamKind::Image(_) => "W * H".to_string(),
                ParamKind::Scalar(_) => "1".to_string(),
                ParamKind::Array(t) => match ast.max_size(&p.name) {
                    Some(bytes) => (bytes / t.size_bytes()).to_string(),
                    None => format!("{}_len", p.name),
                },
            };
            Binding { name: p.name.clone(), space: spaces[&p.name], ty: p.kind.elem(), length }
        })
        .collect();
    for dim in ["W", "H"] {
        out.push(Binding { name: dim.into(), space: MemorySpace::Scalar, ty: ScalarType::Int, length: "1".into() });
    }
    out
}

pub fn apply_configuration(
    ast: &KernelAst,
    report: &AnalysisReport,
    cfg: &Configuration,
    opts: &TransformOptions,
) -> Result<TransformedKernel, TransformError> {
    if let Some(GridTarget::Literal { width, height }) = ast.grid_target() {
        if [*width, *height] != opts.grid {
            return Err(TransformError::GridMismatch { requested: opts.grid, fixed: [*width, *height] });
        }
    }
    let wg = [required(cfg, WG_X)?, required(cfg, WG_Y)?];
    let c = [required(cfg, COARSEN_X)?, required(cfg, COARSEN_Y)?];
    let spaces = ast
        .params
        .iter()
        .map(|p| (p.name.clone(), if p.kind.is_buffer() { MemorySpace::Global } else { MemorySpace::Scalar }))
        .collect();
    let boundaries = ast.params.iter().filter(|p| p.kind.is_image()).map(|p| (p.name.clone(), ast.boundary(&p.name))).collect();
    let mut tk = TransformedKernel {
        name: ast.name.clone(),
        params: ast.params.clone(),
        spaces,
        boundaries,
        body: ast.body.clone(),
        tiles: Vec::new(),
        mapping: MappingMode::Blocked,
        launch: LaunchDescriptor {
            global_size: [0; 2],
            local_size: [wg[0] as u64, wg[1] as u64],
            logical_grid: [opts.grid[0] as u64, opts.grid[1] as u64],
            pixels_per_thread: [c[0] as u64, c[1] as u64],
            bindings: Vec::new(),
        },
        config: cfg.clone(),
        provenance: Vec::new(),
        lowered: opts.lower,
    };
    for i in 0..2 {
        tk.launch.global_size[i] = global_size(tk.launch.logical_grid[i], wg[i] as u64, c[i] as u64);
    }

    // Memory placement.
    let mut prologue = Vec::new();
    for p in ast.params.iter().filter(|p| p.kind.is_buffer()) {
        let flag = |kind: TuningKind| cfg.flag(&kind.id());
        if flag(TuningKind::ConstantMem(p.name.clone())) {
            memory::place_constant(&mut tk, &p.name);
        } else if flag(TuningKind::ImageMem(p.name.clone())) {
            memory::place_image(&mut tk, &p.name, ast.boundary(&p.name));
        } else if flag(TuningKind::LocalMem(p.name.clone())) {
            let ext = report.extent(&p.name).ok_or_else(|| TransformError::InternalInvariant {
                pass: PASS_MEMORY.into(),
                message: format!("{} has no stencil extent", p.name),
            })?;
            prologue.extend(memory::place_local(&mut tk, &p.name, ext, wg, c));
        }
    }
    if tk.local_bytes() > opts.local_mem_bytes {
        return Err(TransformError::TileTooLarge { bytes: tk.local_bytes(), limit: opts.local_mem_bytes });
    }
    if !tk.tiles.is_empty() {
        prologue.push(Stmt::synth(StmtKind::Barrier));
    }
    tk.provenance.push(PASS_MEMORY.into());

    // Coarsening, mapping and guards.
    tk.mapping = match (cfg.flag(INTERLEAVED), tk.tiles.is_empty()) {
        (false, _) => MappingMode::Blocked,
        (true, true) => MappingMode::Interleaved,
        (true, false) => MappingMode::InterleavedInGroup,
    };
    let covered = |i: usize| tk.launch.global_size[i] * c[i] as u64 == tk.launch.logical_grid[i];
    let guarded = !(covered(0) && covered(1));
    let body = std::mem::take(&mut tk.body);
    let nest = mapping::coarsen_and_map(
        body,
        tk.mapping,
        AxisMap { wg: wg[0], coarsen: c[0] },
        AxisMap { wg: wg[1], coarsen: c[1] },
        guarded,
    );
    prologue.push(nest);
    tk.body = Block::new(prologue);
    tk.provenance.push(PASS_MAPPING.into());
    tk.provenance.push(PASS_GUARDS.into());

    // Unrolling.
    let factor_of = |id: LoopId| -> Option<(u64, Vec<i64>)> {
        let f = cfg.get(&TuningKind::Unroll(id).id()).filter(|f| *f > 1)?;
        let iterations = report.loop_info(id)?.iterations.clone()?;
        Some((f as u64, iterations))
    };
    unroll::unroll_all(&mut tk.body, &factor_of)?;
    tk.provenance.push(PASS_UNROLL.into());

    if opts.lower {
        let images = ast
            .params
            .iter()
            .filter(|p| p.kind.is_image() && tk.space(&p.name) == MemorySpace::Global)
            .map(|p| (p.name.clone(), (ast.boundary(&p.name), p.kind.elem())))
            .collect();
        lower::lower_images(&mut tk.body, &images);
        tk.provenance.push(PASS_LOWER.into());
    }

    tk.launch.bindings = bindings(ast, &tk.spaces);
    check_invariants(&tk)?;
    Ok(tk)
}

fn check_invariants(tk: &TransformedKernel) -> Result<(), TransformError> {
    let fail = |message: String| {
        Err(TransformError::InternalInvariant { pass: tk.provenance.last().cloned().unwrap_or_default(), message })
    };
    let mut bad = None;
    tk.body.walk_exprs(&mut |e| match &e.kind {
        ExprKind::ThreadIdx(_) => bad = Some("logical thread index survived mapping".to_string()),
        ExprKind::TileOffset(_) => bad = Some("unresolved tile offset".to_string()),
        ExprKind::Index2 { image, .. } if tk.lowered => {
            bad = Some(format!("2D access to {image} survived lowering"))
        }
        _ => {}
    });
    if let Some(m) = bad {
        return fail(m);
    }
    let top_level_barriers = tk.body.stmts.iter().filter(|s| matches!(s.kind, StmtKind::Barrier)).count();
    if tk.barrier_count() > 1 || tk.barrier_count() != top_level_barriers {
        return fail("barrier outside the load prologue".into());
    }
    if tk.barrier_count() != (!tk.tiles.is_empty()) as usize {
        return fail("barrier count does not match local tiles".into());
    }
    Ok(())
}
