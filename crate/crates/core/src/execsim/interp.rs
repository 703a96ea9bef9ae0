//! ND-range interpreter for transformed kernels.
//!
//! Work-groups run one after another. Inside a group every work-item runs up
//! to the barrier, then every work-item runs the rest; the transformed
//! dialect only places a barrier at the top level after the tile loads.

use super::buffer::{Buffer, BufferSet};
use super::compile::{compile, CAxis, CExpr, CNest, CStmt, Program, Target};
use super::cost::{classify_group, EventCounts};
use super::value::{self, ArithError, Value};
use crate::frontend::ast::{BinOp, BoundaryMode, ScalarType, WorkItemFn};
use crate::transform::{MemorySpace, TransformedKernel};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Arithmetic charged for the edge guard of a coarsening iteration skipped
/// without being interpreted.
const GUARD_OPS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("trap in work-item {global_id:?} (group {group:?}): {message}")]
    Trap { global_id: [i64; 2], group: [i64; 2], message: String },
    #[error("divergent barrier in group {group:?}: arrivals per work-item differ ({min} vs {max})")]
    DivergentBarrier { group: [i64; 2], min: u32, max: u32 },
    #[error("input mismatch: {0}")]
    Input(String),
    #[error("cannot interpret kernel: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Fault {
    OutOfBounds { buf: usize, index: i64, len: usize },
    TileOutOfBounds { tile: usize, x: i64, y: i64 },
    ImageWriteOutOfBounds { buf: usize, x: i64, y: i64 },
    DivisionByZero,
}

impl From<ArithError> for Fault {
    fn from(_: ArithError) -> Self {
        Fault::DivisionByZero
    }
}

/// Observations made while interpreting with tracing enabled.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceLog {
    /// Per image, offsets `(x - logical x, y - logical y)` of raw 2D reads.
    pub offsets: BTreeMap<String, BTreeSet<(i64, i64)>>,
    pub grid: [usize; 2],
    /// Guard-passing executions of the kernel body per pixel, row-major.
    pub coverage: Vec<u32>,
    /// Guard-passing executions outside the grid.
    pub outside: u64,
    /// Barrier arrivals per work-group, in group order.
    pub barrier_arrivals: Vec<u64>,
}

impl TraceLog {
    /// Every pixel executed exactly once and nothing outside the grid.
    pub fn covers_exactly_once(&self) -> bool {
        self.outside == 0 && self.coverage.iter().all(|c| *c == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InterpretOptions {
    pub trace: bool,
    /// Record global access addresses for coalescing classification.
    pub classify_accesses: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    /// Buffers the kernel writes, after execution.
    pub outputs: BufferSet,
    pub counts: EventCounts,
    pub trace: Option<TraceLog>,
}

#[derive(Default, Clone, Copy)]
struct WorkItem {
    gid: [i64; 2],
    lid: [i64; 2],
    grp: [i64; 2],
    gsize: [i64; 2],
}

struct Machine<'p> {
    prog: &'p Program,
    mem: Vec<Vec<Value>>,
    widths: Vec<i64>,
    tiles: Vec<Vec<Value>>,
    grid: [i64; 2],
    counts: EventCounts,
    record: bool,
    accesses: Vec<(u32, i64)>,
    trace: Option<TraceLog>,
    wi: WorkItem,
    slots: Vec<Value>,
    nested_barriers: u32,
}

fn boundary_value(mode: BoundaryMode, ty: ScalarType) -> Value {
    match mode {
        BoundaryMode::Constant(c) => Value::from_f64(c, ty),
        BoundaryMode::Clamped => Value::zero(ty),
    }
}

impl Machine<'_> {
    #[inline]
    fn global_access(&mut self, buf: usize, addr: i64) {
        match self.prog.buffers[buf].space {
            MemorySpace::Constant => self.counts.constant_access += 1,
            _ => {
                if self.record {
                    // Site identity is the buffer; each work-item's k-th
                    // access is compared across the warp.
                    self.accesses.push((buf as u32, addr));
                } else {
                    self.counts.global_uncoalesced += 1;
                }
            }
        }
    }

    fn load(&mut self, buf: usize, index: i64) -> Result<Value, Fault> {
        let data = &self.mem[buf];
        if index < 0 || index as usize >= data.len() {
            return Err(Fault::OutOfBounds { buf, index, len: data.len() });
        }
        let v = data[index as usize];
        self.global_access(buf, index);
        Ok(v)
    }

    fn eval(&mut self, e: &CExpr) -> Result<Value, Fault> {
        Ok(match e {
            CExpr::Const(v) => *v,
            CExpr::Slot(s) => self.slots[*s as usize],
            CExpr::WorkItem(f, a) => {
                self.counts.arithmetic_op += 1;
                Value::I32(match f {
                    WorkItemFn::GlobalId => self.wi.gid[*a],
                    WorkItemFn::LocalId => self.wi.lid[*a],
                    WorkItemFn::GroupId => self.wi.grp[*a],
                    WorkItemFn::GlobalSize => self.wi.gsize[*a],
                } as i32)
            }
            CExpr::GridDim(a) => Value::I32(self.grid[*a] as i32),
            CExpr::Unary(op, a) => {
                let v = self.eval(a)?;
                self.counts.arithmetic_op += 1;
                value::unary(*op, v)
            }
            CExpr::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                self.counts.arithmetic_op += 1;
                value::binary(*op, a, b)?
            }
            CExpr::And(l, r) => {
                self.counts.arithmetic_op += 1;
                Value::I32((self.eval(l)?.truthy() && self.eval(r)?.truthy()) as i32)
            }
            CExpr::Or(l, r) => {
                self.counts.arithmetic_op += 1;
                Value::I32((self.eval(l)?.truthy() || self.eval(r)?.truthy()) as i32)
            }
            CExpr::Load { buf, index } => {
                let i = self.eval(index)?.as_i64();
                self.load(*buf, i)?
            }
            CExpr::Load2 { buf, x, y } => {
                let x = self.eval(x)?.as_i64();
                let y = self.eval(y)?.as_i64();
                if let (Some(t), Some((lx, ly))) = (self.trace.as_mut(), self.prog.logical) {
                    let (cx, cy) = (self.slots[lx as usize].as_i64(), self.slots[ly as usize].as_i64());
                    let name = &self.prog.buffers[*buf].name;
                    t.offsets.entry(name.clone()).or_default().insert((x - cx, y - cy));
                }
                let info = &self.prog.buffers[*buf];
                let [w, h] = self.grid;
                let inside = (0..w).contains(&x) && (0..h).contains(&y);
                match info.boundary {
                    BoundaryMode::Clamped => self.load(*buf, x.clamp(0, w - 1) + y.clamp(0, h - 1) * w)?,
                    BoundaryMode::Constant(_) if inside => self.load(*buf, x + y * w)?,
                    mode => boundary_value(mode, info.ty),
                }
            }
            CExpr::ReadImage { buf, x, y } => {
                let x = self.eval(x)?.as_i64();
                let y = self.eval(y)?.as_i64();
                let [w, h] = self.grid;
                self.counts.image_access += 1;
                self.mem[*buf][(x.clamp(0, w - 1) + y.clamp(0, h - 1) * w) as usize]
            }
            CExpr::LocalRead { tile, x, y } => {
                let x = self.eval(x)?.as_i64();
                let y = self.eval(y)?.as_i64();
                let shape = &self.prog.tiles[*tile];
                if !(0..shape.width as i64).contains(&x) || !(0..shape.height as i64).contains(&y) {
                    return Err(Fault::TileOutOfBounds { tile: *tile, x, y });
                }
                self.counts.local_access += 1;
                self.tiles[*tile][x as usize + y as usize * shape.width]
            }
            CExpr::Call(f, args) => {
                let mut vals = [Value::default(); 3];
                for (i, a) in args.iter().enumerate() {
                    vals[i] = self.eval(a)?;
                }
                self.counts.arithmetic_op += 1;
                value::call(*f, &vals[..args.len()])
            }
            CExpr::Cast(t, a) => {
                let v = self.eval(a)?;
                self.counts.arithmetic_op += 1;
                v.convert(*t)
            }
            CExpr::Select(c, a, b) => {
                self.counts.arithmetic_op += 1;
                if self.eval(c)?.truthy() {
                    self.eval(a)?
                } else {
                    self.eval(b)?
                }
            }
        })
    }

    fn combine(&mut self, op: Option<BinOp>, old: impl FnOnce(&mut Self) -> Result<Value, Fault>, v: Value) -> Result<Value, Fault> {
        match op {
            None => Ok(v),
            Some(op) => {
                let o = old(self)?;
                self.counts.arithmetic_op += 1;
                Ok(value::binary(op, o, v)?)
            }
        }
    }

    fn exec_block(&mut self, stmts: &[CStmt]) -> Result<(), Fault> {
        for s in stmts {
            self.exec(s)?;
        }
        Ok(())
    }

    fn exec(&mut self, s: &CStmt) -> Result<(), Fault> {
        match s {
            CStmt::Assign { target, op, value } => {
                let v = self.eval(value)?;
                match target {
                    Target::Slot(slot, ty) => {
                        let s = *slot as usize;
                        let v = self.combine(*op, |m| Ok(m.slots[s]), v)?;
                        self.slots[s] = v.convert(*ty);
                    }
                    Target::Global { buf, index } => {
                        let i = self.eval(index)?.as_i64();
                        let v = self.combine(*op, |m| m.load(*buf, i), v)?;
                        self.store(*buf, i, v)?;
                    }
                    Target::Global2 { buf, x, y } => {
                        let x = self.eval(x)?.as_i64();
                        let y = self.eval(y)?.as_i64();
                        let [w, h] = self.grid;
                        if !(0..w).contains(&x) || !(0..h).contains(&y) {
                            return Err(Fault::ImageWriteOutOfBounds { buf: *buf, x, y });
                        }
                        let v = self.combine(*op, |m| m.load(*buf, x + y * w), v)?;
                        self.store(*buf, x + y * w, v)?;
                    }
                    Target::Local { tile, x, y } => {
                        let x = self.eval(x)?.as_i64();
                        let y = self.eval(y)?.as_i64();
                        let shape = &self.prog.tiles[*tile];
                        if !(0..shape.width as i64).contains(&x) || !(0..shape.height as i64).contains(&y) {
                            return Err(Fault::TileOutOfBounds { tile: *tile, x, y });
                        }
                        let i = x as usize + y as usize * shape.width;
                        let ty = shape.ty;
                        let v = self.combine(*op, |m| Ok(m.tiles[*tile][i]), v)?;
                        self.counts.local_access += 1;
                        self.tiles[*tile][i] = v.convert(ty);
                    }
                }
            }
            CStmt::For { slot, ty, init, cmp, bound, step, body } => {
                let s = *slot as usize;
                self.slots[s] = self.eval(init)?.convert(*ty);
                loop {
                    let b = self.eval(bound)?;
                    if !value::binary(*cmp, self.slots[s], b)?.truthy() {
                        break;
                    }
                    self.counts.loop_overhead += 1;
                    self.exec_block(body)?;
                    self.slots[s] = value::binary(BinOp::Add, self.slots[s], Value::I32(*step as i32))?.convert(*ty);
                }
            }
            CStmt::If { cond, then, otherwise } => {
                if self.eval(cond)?.truthy() {
                    self.exec_block(then)?;
                } else {
                    self.exec_block(otherwise)?;
                }
            }
            CStmt::Eval(e) => {
                self.eval(e)?;
            }
            CStmt::Block(b) => self.exec_block(b)?,
            CStmt::Barrier => self.nested_barriers += 1,
            CStmt::WriteImage { buf, x, y, value } => {
                let x = self.eval(x)?.as_i64();
                let y = self.eval(y)?.as_i64();
                let v = self.eval(value)?;
                let [w, h] = self.grid;
                if !(0..w).contains(&x) || !(0..h).contains(&y) {
                    return Err(Fault::ImageWriteOutOfBounds { buf: *buf, x, y });
                }
                self.counts.image_access += 1;
                let ty = self.prog.buffers[*buf].ty;
                self.mem[*buf][(x + y * w) as usize] = v.convert(ty);
            }
            CStmt::Coarsen(n) => self.exec_nest(n)?,
        }
        Ok(())
    }

    fn store(&mut self, buf: usize, index: i64, v: Value) -> Result<(), Fault> {
        let len = self.mem[buf].len();
        if index < 0 || index as usize >= len {
            return Err(Fault::OutOfBounds { buf, index, len });
        }
        let ty = self.prog.buffers[buf].ty;
        self.mem[buf][index as usize] = v.convert(ty);
        self.global_access(buf, index);
        Ok(())
    }

    /// Logical index of a coarsening axis for counter value `k`.
    fn logical(&mut self, a: &CAxis, k: u32) -> Result<i64, Fault> {
        let base = self.eval(&a.base)?.as_i64();
        if a.count == 1 {
            return Ok(base);
        }
        let stride = self.eval(&a.stride)?.as_i64();
        self.counts.arithmetic_op += 2;
        Ok(base + k as i64 * stride)
    }

    fn exec_nest(&mut self, n: &CNest) -> Result<(), Fault> {
        let (cx, cy) = (n.x.count as u64, n.y.count as u64);
        let x_loop = (cx > 1) as u64;
        let y_loop = (cy > 1) as u64;
        let [w, h] = self.grid;
        for ky in 0..n.y.count {
            self.slots[n.y.counter as usize] = Value::I32(ky as i32);
            let y = self.logical(&n.y, ky)?;
            self.slots[n.y.logical as usize] = Value::I32(y as i32);
            if n.guarded && y >= h {
                // Strides are positive: no later row is inside the grid.
                let rows = cy - ky as u64;
                self.counts.loop_overhead += rows * y_loop + rows * cx * x_loop;
                self.counts.arithmetic_op += rows * cx * GUARD_OPS;
                break;
            }
            self.counts.loop_overhead += y_loop;
            for kx in 0..n.x.count {
                self.slots[n.x.counter as usize] = Value::I32(kx as i32);
                let x = self.logical(&n.x, kx)?;
                self.slots[n.x.logical as usize] = Value::I32(x as i32);
                self.counts.loop_overhead += x_loop;
                if n.guarded {
                    self.counts.arithmetic_op += GUARD_OPS;
                    if x >= w {
                        let rest = cx - kx as u64 - 1;
                        self.counts.loop_overhead += rest * x_loop;
                        self.counts.arithmetic_op += rest * GUARD_OPS;
                        break;
                    }
                }
                if let Some(t) = self.trace.as_mut() {
                    if (0..w).contains(&x) && (0..h).contains(&y) {
                        t.coverage[(x + y * w) as usize] += 1;
                    } else {
                        t.outside += 1;
                    }
                }
                self.exec_block(&n.body)?;
            }
        }
        Ok(())
    }
}

fn check_inputs(tk: &TransformedKernel, prog: &Program, inputs: &BufferSet) -> Result<(), ExecError> {
    let [w, h] = tk.launch.logical_grid;
    for b in &prog.buffers {
        let buf = inputs.buffers.get(&b.name).ok_or_else(|| ExecError::Input(format!("missing buffer `{}`", b.name)))?;
        if buf.ty != b.ty {
            return Err(ExecError::Input(format!("buffer `{}` has type {}, expected {}", b.name, buf.ty, b.ty)));
        }
        if b.is_image && (buf.width as u64, buf.height as u64) != (w, h) {
            return Err(ExecError::Input(format!(
                "image `{}` is {}x{}, expected {w}x{h}",
                b.name, buf.width, buf.height
            )));
        }
    }
    for (_, name, _) in &prog.scalar_slots {
        if !inputs.scalars.contains_key(name) {
            return Err(ExecError::Input(format!("missing scalar `{name}`")));
        }
    }
    Ok(())
}

pub fn execute(tk: &TransformedKernel, inputs: &BufferSet, opts: InterpretOptions) -> Result<Execution, ExecError> {
    let prog = compile(tk).map_err(ExecError::Unsupported)?;
    check_inputs(tk, &prog, inputs)?;
    let grid = [tk.launch.logical_grid[0] as i64, tk.launch.logical_grid[1] as i64];
    let gsize = [tk.launch.global_size[0] as i64, tk.launch.global_size[1] as i64];
    let lsize = [tk.launch.local_size[0] as i64, tk.launch.local_size[1] as i64];
    let groups = tk.launch.groups();
    let mut m = Machine {
        prog: &prog,
        mem: prog.buffers.iter().map(|b| inputs.buffers[&b.name].data.clone()).collect(),
        widths: prog.buffers.iter().map(|b| inputs.buffers[&b.name].width as i64).collect(),
        tiles: prog.tiles.iter().map(|t| vec![Value::zero(t.ty); t.width * t.height]).collect(),
        grid,
        counts: EventCounts::default(),
        record: opts.classify_accesses,
        accesses: Vec::new(),
        trace: opts.trace.then(|| TraceLog {
            offsets: BTreeMap::new(),
            grid: [grid[0] as usize, grid[1] as usize],
            coverage: vec![0; (grid[0] * grid[1]) as usize],
            outside: 0,
            barrier_arrivals: Vec::new(),
        }),
        wi: WorkItem { gsize, ..Default::default() },
        slots: vec![Value::default(); prog.slots],
        nested_barriers: 0,
    };
    let mut init_slots = vec![Value::default(); prog.slots];
    for (slot, name, ty) in &prog.scalar_slots {
        init_slots[*slot as usize] = inputs.scalars[name].convert(*ty);
    }
    let group_size = (lsize[0] * lsize[1]) as usize;
    let mut saved: Vec<Vec<Value>> = if prog.has_barrier { vec![Vec::new(); group_size] } else { Vec::new() };
    let mut per_item: Vec<Vec<(u32, i64)>> = vec![Vec::new(); if m.record { group_size } else { 0 }];
    let mut arrivals = vec![0u32; group_size];

    for gy in 0..groups[1] as i64 {
        for gx in 0..groups[0] as i64 {
            let grp = [gx, gy];
            let phases: &[&[CStmt]] = if prog.has_barrier { &[&prog.pre, &prog.post] } else { &[&prog.pre] };
            for (phase, stmts) in phases.iter().enumerate() {
                for item in 0..group_size {
                    let lid = [item as i64 % lsize[0], item as i64 / lsize[0]];
                    m.wi.lid = lid;
                    m.wi.grp = grp;
                    m.wi.gid = [gx * lsize[0] + lid[0], gy * lsize[1] + lid[1]];
                    if phase == 0 {
                        m.slots.copy_from_slice(&init_slots);
                        m.nested_barriers = 0;
                    } else {
                        std::mem::swap(&mut m.slots, &mut saved[item]);
                        m.nested_barriers = arrivals[item];
                    }
                    if m.record {
                        std::mem::swap(&mut m.accesses, &mut per_item[item]);
                        if phase == 0 {
                            m.accesses.clear();
                        }
                    }
                    let result = m.exec_block(stmts);
                    if m.record {
                        std::mem::swap(&mut m.accesses, &mut per_item[item]);
                    }
                    if let Err(f) = result {
                        return Err(trap(&prog, m.wi, f));
                    }
                    if prog.has_barrier && phase == 0 {
                        saved[item].clone_from(&m.slots);
                        arrivals[item] = m.nested_barriers + 1;
                    } else {
                        arrivals[item] = m.nested_barriers;
                    }
                }
            }
            let (min, max) = (*arrivals.iter().min().unwrap(), *arrivals.iter().max().unwrap());
            if min != max {
                return Err(ExecError::DivergentBarrier { group: grp, min, max });
            }
            m.counts.barrier += (max > 0) as u64;
            if let Some(t) = m.trace.as_mut() {
                t.barrier_arrivals.push(arrivals.iter().map(|a| *a as u64).sum());
            }
            if m.record {
                classify_group(&per_item, &mut m.counts);
            }
        }
    }

    let mut outputs = BufferSet::new();
    for (i, b) in prog.buffers.iter().enumerate() {
        if b.written {
            let src = &inputs.buffers[&b.name];
            let data = std::mem::take(&mut m.mem[i]);
            outputs.buffers.insert(b.name.clone(), Buffer { ty: b.ty, width: m.widths[i] as usize, height: src.height, data });
        }
    }
    Ok(Execution { outputs, counts: m.counts, trace: m.trace })
}

fn trap(prog: &Program, wi: WorkItem, f: Fault) -> ExecError {
    let message = match f {
        Fault::OutOfBounds { buf, index, len } => {
            format!("index {index} out of bounds for `{}` of length {len}", prog.buffers[buf].name)
        }
        Fault::TileOutOfBounds { tile, x, y } => {
            let t = &prog.tiles[tile];
            format!("local tile read ({x}, {y}) outside {}x{} tile", t.width, t.height)
        }
        Fault::ImageWriteOutOfBounds { buf, x, y } => {
            format!("write to `{}` at ({x}, {y}) outside the image", prog.buffers[buf].name)
        }
        Fault::DivisionByZero => "integer division by zero".into(),
    };
    ExecError::Trap { global_id: wi.gid, group: wi.grp, message }
}

/// Run a kernel; outputs and, when requested, the trace.
pub fn interpret(
    tk: &TransformedKernel,
    inputs: &BufferSet,
    trace: bool,
) -> Result<(BufferSet, Option<TraceLog>), ExecError> {
    let e = execute(tk, inputs, InterpretOptions { trace, classify_accesses: false })?;
    Ok((e.outputs, e.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::corpus;
    use crate::frontend::compile_source;
    use crate::execsim::profile::DeviceProfile;
    use crate::space::{Configuration, TuningSpace};
    use crate::transform::{apply_configuration, TransformOptions};

    fn variant(src: &str, cfg: impl Fn(Configuration) -> Configuration, w: u32, h: u32) -> TransformedKernel {
        let k = compile_source(src).unwrap();
        let r = analyze(&k).unwrap();
        let s = TuningSpace::build(&k, &r, &DeviceProfile::gpu_like());
        let c = cfg(s.default_config());
        assert_eq!(s.validate(&c), []);
        apply_configuration(&k, &r, &c, &TransformOptions::new(w, h)).unwrap()
    }

    #[test]
    fn blur_constant_image() {
        let tk = variant(corpus::BLUR, |c| c, 8, 8);
        let inputs = BufferSet::new()
            .with_buffer("in", Buffer::filled(ScalarType::Float, 8, 8, 5.0))
            .with_buffer("out", Buffer::filled(ScalarType::Float, 8, 8, 0.0));
        let (out, _) = interpret(&tk, &inputs, false).unwrap();
        let o = &out.buffers["out"];
        assert_eq!(o.get(3, 4), Value::F32(45.0 / 9.0));
        assert_eq!(o.get(0, 0), Value::F32(20.0 / 9.0));
        assert_eq!(o.get(7, 3), Value::F32(30.0 / 9.0));
    }

    #[test]
    fn zero_input_zero_output() {
        let tk = variant(corpus::BLUR, |c| c.with("cX", 4).with("interleaved", 1).with("localMem.in", 1), 20, 12);
        let inputs = BufferSet::new()
            .with_buffer("in", Buffer::filled(ScalarType::Float, 20, 12, 0.0))
            .with_buffer("out", Buffer::filled(ScalarType::Float, 20, 12, 7.0));
        let (out, _) = interpret(&tk, &inputs, false).unwrap();
        assert!(out.buffers["out"].data.iter().all(|v| *v == Value::F32(0.0)));
    }

    #[test]
    fn coverage_and_barriers() {
        let tk = variant(corpus::BLUR, |c| c.with("cX", 2).with("cY", 4).with("wgX", 8).with("localMem.in", 1), 30, 22);
        let inputs = BufferSet::random(&compile_source(corpus::BLUR).unwrap(), 30, 22, 1);
        let (_, trace) = interpret(&tk, &inputs, true).unwrap();
        let t = trace.unwrap();
        assert!(t.covers_exactly_once());
        assert_eq!(t.barrier_arrivals.len() as u64, tk.launch.groups()[0] * tk.launch.groups()[1]);
        assert!(t.barrier_arrivals.iter().all(|a| *a == 8 * 16));
    }

    #[test]
    fn missing_input_is_reported() {
        let tk = variant(corpus::BLUR, |c| c, 8, 8);
        let inputs = BufferSet::new().with_buffer("in", Buffer::filled(ScalarType::Float, 8, 8, 1.0));
        assert!(matches!(interpret(&tk, &inputs, false), Err(ExecError::Input(_))));
        let inputs = inputs.with_buffer("out", Buffer::filled(ScalarType::Float, 4, 8, 1.0));
        assert!(matches!(interpret(&tk, &inputs, false), Err(ExecError::Input(_))));
    }

    #[test]
    fn raw_array_overrun_traps() {
        let src = "#pragma imcl grid(4, 4)\n#pragma imcl maxsize(a, 16)\n\
                   void k(float *a, Image<float> o) { o[idx][idy] = a[idx + 1]; }";
        let tk = variant(src, |c| c.with("wgX", 4).with("wgY", 4), 4, 4);
        let k = compile_source(src).unwrap();
        let inputs = BufferSet::random(&k, 4, 4, 0);
        match interpret(&tk, &inputs, false) {
            Err(ExecError::Trap { global_id, message, .. }) => {
                assert_eq!(global_id, [3, 0]);
                assert!(message.contains("out of bounds"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }
}
