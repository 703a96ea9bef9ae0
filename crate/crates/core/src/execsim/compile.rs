//! Lowering of a transformed kernel to a slot-resolved tree for the
//! interpreter.

use super::value::Value;
use crate::frontend::ast::*;
use crate::transform::{MemorySpace, TransformedKernel};
use std::collections::HashMap;

pub(crate) type Slot = u32;

#[derive(Debug)]
pub(crate) enum CExpr {
    Const(Value),
    Slot(Slot),
    WorkItem(WorkItemFn, usize),
    GridDim(usize),
    Unary(UnOp, Box<CExpr>),
    Binary(BinOp, Box<CExpr>, Box<CExpr>),
    And(Box<CExpr>, Box<CExpr>),
    Or(Box<CExpr>, Box<CExpr>),
    Load { buf: usize, index: Box<CExpr> },
    /// Unlowered 2D image read with the image's boundary condition.
    Load2 { buf: usize, x: Box<CExpr>, y: Box<CExpr> },
    ReadImage { buf: usize, x: Box<CExpr>, y: Box<CExpr> },
    LocalRead { tile: usize, x: Box<CExpr>, y: Box<CExpr> },
    Call(Builtin, Vec<CExpr>),
    Cast(ScalarType, Box<CExpr>),
    Select(Box<CExpr>, Box<CExpr>, Box<CExpr>),
}

#[derive(Debug)]
pub(crate) enum Target {
    Slot(Slot, ScalarType),
    Global { buf: usize, index: CExpr },
    Global2 { buf: usize, x: CExpr, y: CExpr },
    Local { tile: usize, x: CExpr, y: CExpr },
}

#[derive(Debug)]
pub(crate) struct CAxis {
    pub counter: Slot,
    pub logical: Slot,
    pub count: u32,
    pub base: CExpr,
    pub stride: CExpr,
}

#[derive(Debug)]
pub(crate) struct CNest {
    pub x: CAxis,
    pub y: CAxis,
    pub guarded: bool,
    pub body: Vec<CStmt>,
}

#[derive(Debug)]
pub(crate) enum CStmt {
    Assign { target: Target, op: Option<BinOp>, value: CExpr },
    For { slot: Slot, ty: ScalarType, init: CExpr, cmp: BinOp, bound: CExpr, step: i64, body: Vec<CStmt> },
    If { cond: CExpr, then: Vec<CStmt>, otherwise: Vec<CStmt> },
    Eval(CExpr),
    Block(Vec<CStmt>),
    Barrier,
    WriteImage { buf: usize, x: CExpr, y: CExpr, value: CExpr },
    Coarsen(Box<CNest>),
}

#[derive(Debug, Clone)]
pub(crate) struct BufInfo {
    pub name: String,
    pub ty: ScalarType,
    pub space: MemorySpace,
    pub is_image: bool,
    pub boundary: BoundaryMode,
    pub written: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct TileShape {
    pub width: usize,
    pub height: usize,
    pub ty: ScalarType,
}

#[derive(Debug)]
pub(crate) struct Program {
    /// Statements before and after the top-level barrier; `post` is empty
    /// when there is no barrier.
    pub pre: Vec<CStmt>,
    pub post: Vec<CStmt>,
    pub has_barrier: bool,
    pub slots: usize,
    pub scalar_slots: Vec<(Slot, String, ScalarType)>,
    pub buffers: Vec<BufInfo>,
    pub tiles: Vec<TileShape>,
    /// Slots of the logical pixel coordinates in the coarsening nest.
    pub logical: Option<(Slot, Slot)>,
}

struct Compiler<'a> {
    tk: &'a TransformedKernel,
    scopes: Vec<HashMap<String, (Slot, ScalarType)>>,
    next_slot: Slot,
    buffers: Vec<BufInfo>,
    tiles: HashMap<String, usize>,
    tile_shapes: Vec<TileShape>,
    logical: Option<(Slot, Slot)>,
}

impl Compiler<'_> {
    fn declare(&mut self, name: &str, ty: ScalarType) -> Slot {
        let s = self.next_slot;
        self.next_slot += 1;
        self.scopes.last_mut().unwrap().insert(name.to_string(), (s, ty));
        s
    }

    fn lookup(&self, name: &str) -> Result<(Slot, ScalarType), String> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied()).ok_or_else(|| format!("unbound variable `{name}`"))
    }

    fn buf(&self, name: &str) -> Result<usize, String> {
        self.buffers.iter().position(|b| b.name == name).ok_or_else(|| format!("unknown buffer `{name}`"))
    }

    fn tile(&self, name: &str) -> Result<usize, String> {
        self.tiles.get(name).copied().ok_or_else(|| format!("undeclared tile `{name}`"))
    }

    fn expr(&mut self, e: &Expr) -> Result<CExpr, String> {
        let b = |c: CExpr| Box::new(c);
        Ok(match &e.kind {
            ExprKind::Int(v) => CExpr::Const(match i32::try_from(*v) {
                Ok(i) => Value::I32(i),
                Err(_) => match u32::try_from(*v) {
                    Ok(u) => Value::U32(u),
                    Err(_) => Value::I32(*v as i32),
                },
            }),
            ExprKind::Float(v) => CExpr::Const(Value::F32(*v)),
            ExprKind::Var(n) => CExpr::Slot(self.lookup(n)?.0),
            ExprKind::ThreadIdx(_) | ExprKind::TileOffset(_) => {
                return Err("logical thread index in a transformed kernel".into())
            }
            ExprKind::Unary(op, a) => CExpr::Unary(*op, b(self.expr(a)?)),
            ExprKind::Binary(BinOp::And, l, r) => CExpr::And(b(self.expr(l)?), b(self.expr(r)?)),
            ExprKind::Binary(BinOp::Or, l, r) => CExpr::Or(b(self.expr(l)?), b(self.expr(r)?)),
            ExprKind::Binary(op, l, r) => CExpr::Binary(*op, b(self.expr(l)?), b(self.expr(r)?)),
            ExprKind::Index { array, index } => CExpr::Load { buf: self.buf(array)?, index: b(self.expr(index)?) },
            ExprKind::Index2 { image, x, y } => {
                CExpr::Load2 { buf: self.buf(image)?, x: b(self.expr(x)?), y: b(self.expr(y)?) }
            }
            ExprKind::Call(f, args) => CExpr::Call(*f, args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?),
            ExprKind::Cast(t, a) => CExpr::Cast(*t, b(self.expr(a)?)),
            ExprKind::Select { cond, then, otherwise } => {
                CExpr::Select(b(self.expr(cond)?), b(self.expr(then)?), b(self.expr(otherwise)?))
            }
            ExprKind::WorkItem(f, a) => CExpr::WorkItem(*f, a.index() as usize),
            ExprKind::GridDim(a) => CExpr::GridDim(a.index() as usize),
            ExprKind::ReadImage { image, x, y } => {
                CExpr::ReadImage { buf: self.buf(image)?, x: b(self.expr(x)?), y: b(self.expr(y)?) }
            }
            ExprKind::LocalRead { tile, x, y } => {
                CExpr::LocalRead { tile: self.tile(tile)?, x: b(self.expr(x)?), y: b(self.expr(y)?) }
            }
        })
    }

    fn scoped(&mut self, b: &Block) -> Result<Vec<CStmt>, String> {
        self.scopes.push(HashMap::new());
        let out = b.stmts.iter().map(|s| self.stmt(s)).collect();
        self.scopes.pop();
        out
    }

    fn mark_written(&mut self, buf: usize) {
        self.buffers[buf].written = true;
    }

    fn stmt(&mut self, s: &Stmt) -> Result<CStmt, String> {
        Ok(match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                let value = match init {
                    Some(e) => self.expr(e)?,
                    None => CExpr::Const(Value::zero(*ty)),
                };
                // Declare after compiling the initializer.
                let slot = self.declare(name, *ty);
                CStmt::Assign { target: Target::Slot(slot, *ty), op: None, value }
            }
            StmtKind::Assign { target, op, value } => {
                let value = self.expr(value)?;
                let target = match target {
                    LValue::Var(n) => {
                        let (slot, ty) = self.lookup(n)?;
                        Target::Slot(slot, ty)
                    }
                    LValue::Index { array, index } => {
                        let buf = self.buf(array)?;
                        self.mark_written(buf);
                        Target::Global { buf, index: self.expr(index)? }
                    }
                    LValue::Index2 { image, x, y } => {
                        let buf = self.buf(image)?;
                        self.mark_written(buf);
                        Target::Global2 { buf, x: self.expr(x)?, y: self.expr(y)? }
                    }
                    LValue::Local { tile, x, y } => {
                        Target::Local { tile: self.tile(tile)?, x: self.expr(x)?, y: self.expr(y)? }
                    }
                };
                CStmt::Assign { target, op: op.binop(), value }
            }
            StmtKind::For(l) => {
                let init = self.expr(&l.init)?;
                self.scopes.push(HashMap::new());
                let slot = self.declare(&l.var, l.var_ty);
                let bound = self.expr(&l.bound)?;
                let body = self.scoped(&l.body);
                self.scopes.pop();
                CStmt::For { slot, ty: l.var_ty, init, cmp: l.cmp, bound, step: l.step, body: body? }
            }
            StmtKind::If { cond, then, otherwise } => CStmt::If {
                cond: self.expr(cond)?,
                then: self.scoped(then)?,
                otherwise: match otherwise {
                    Some(b) => self.scoped(b)?,
                    None => Vec::new(),
                },
            },
            StmtKind::Expr(e) => CStmt::Eval(self.expr(e)?),
            StmtKind::Block(b) => CStmt::Block(self.scoped(b)?),
            StmtKind::LocalDecl { tile, ty, width, height } => {
                self.tiles.insert(tile.clone(), self.tile_shapes.len());
                self.tile_shapes.push(TileShape { width: *width as usize, height: *height as usize, ty: *ty });
                CStmt::Block(Vec::new())
            }
            StmtKind::Barrier => CStmt::Barrier,
            StmtKind::WriteImage { image, x, y, value } => {
                let buf = self.buf(image)?;
                self.mark_written(buf);
                CStmt::WriteImage { buf, x: self.expr(x)?, y: self.expr(y)?, value: self.expr(value)? }
            }
            StmtKind::Coarsen(n) => {
                self.scopes.push(HashMap::new());
                let axis = |c: &mut Self, a: &CoarsenAxis| -> Result<CAxis, String> {
                    let base = c.expr(&a.base)?;
                    let stride = c.expr(&a.stride)?;
                    Ok(CAxis {
                        counter: c.declare(&a.counter, ScalarType::Int),
                        logical: c.declare(&a.logical, ScalarType::Int),
                        count: a.count,
                        base,
                        stride,
                    })
                };
                let y = axis(self, &n.y)?;
                let x = axis(self, &n.x)?;
                self.logical = Some((x.logical, y.logical));
                let body = self.scoped(&n.body);
                self.scopes.pop();
                CStmt::Coarsen(Box::new(CNest { x, y, guarded: n.guarded, body: body? }))
            }
        })
    }
}

pub(crate) fn compile(tk: &TransformedKernel) -> Result<Program, String> {
    let buffers = tk
        .params
        .iter()
        .filter(|p| p.kind.is_buffer())
        .map(|p| BufInfo {
            name: p.name.clone(),
            ty: p.kind.elem(),
            space: tk.space(&p.name),
            is_image: p.kind.is_image(),
            boundary: tk.boundaries.get(&p.name).copied().unwrap_or_default(),
            written: false,
        })
        .collect();
    let mut c = Compiler {
        tk,
        scopes: vec![HashMap::new()],
        next_slot: 0,
        buffers,
        tiles: HashMap::new(),
        tile_shapes: Vec::new(),
        logical: None,
    };
    let mut scalar_slots = Vec::new();
    for p in &c.tk.params {
        if let ParamKind::Scalar(t) = p.kind {
            let s = c.declare(&p.name, t);
            scalar_slots.push((s, p.name.clone(), t));
        }
    }
    let mut pre = Vec::new();
    let mut post = Vec::new();
    let mut has_barrier = false;
    for s in &tk.body.stmts {
        let compiled = c.stmt(s)?;
        if matches!(compiled, CStmt::Barrier) && !has_barrier {
            has_barrier = true;
            continue;
        }
        if has_barrier {
            post.push(compiled);
        } else {
            pre.push(compiled);
        }
    }
    Ok(Program {
        pre,
        post,
        has_barrier,
        slots: c.next_slot as usize,
        scalar_slots,
        buffers: c.buffers,
        tiles: c.tile_shapes,
        logical: c.logical,
    })
}
