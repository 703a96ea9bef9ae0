//! Abstract syntax tree for kernels.
//!
//! The same tree is used for source kernels and for transformed kernels. A
//! handful of node kinds (work-item intrinsics, local tiles, barriers, image
//! intrinsics, the coarsening nest) form the extended dialect produced by the
//! transform passes; the parser never creates them.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Start position of a node in the source text (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub const fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    Float,
    Int,
    Uint,
    Uchar,
}

impl ScalarType {
    pub fn size_bytes(self) -> u64 {
        match self {
            ScalarType::Float | ScalarType::Int | ScalarType::Uint => 4,
            ScalarType::Uchar => 1,
        }
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, ScalarType::Float)
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::Float => "float",
            ScalarType::Int => "int",
            ScalarType::Uint => "uint",
            ScalarType::Uchar => "uchar",
        }
    }

    /// Type of a binary arithmetic expression after the usual promotions
    /// (uchar promotes to int, int to uint, anything mixed with float is float).
    pub fn arithmetic(self, other: ScalarType) -> ScalarType {
        use ScalarType::*;
        match (self, other) {
            (Float, _) | (_, Float) => Float,
            (Uint, _) | (_, Uint) => Uint,
            _ => Int,
        }
    }

    /// Type of a unary arithmetic expression.
    pub fn promoted(self) -> ScalarType {
        match self {
            ScalarType::Uchar => ScalarType::Int,
            t => t,
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> u32 {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "type")]
pub enum ParamKind {
    Image(ScalarType),
    Array(ScalarType),
    Scalar(ScalarType),
}

impl ParamKind {
    pub fn elem(self) -> ScalarType {
        match self {
            ParamKind::Image(t) | ParamKind::Array(t) | ParamKind::Scalar(t) => t,
        }
    }

    pub fn is_image(self) -> bool {
        matches!(self, ParamKind::Image(_))
    }

    /// Images and arrays live in memory; scalars are passed by value.
    pub fn is_buffer(self) -> bool {
        !matches!(self, ParamKind::Scalar(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum BoundaryMode {
    Clamped,
    Constant(f64),
}

impl Default for BoundaryMode {
    fn default() -> Self {
        BoundaryMode::Constant(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridTarget {
    Image(String),
    Literal { width: u32, height: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PragmaKind {
    Grid(GridTarget),
    Boundary { image: String, mode: BoundaryMode },
    MaxSize { array: String, bytes: u64 },
    Force { param: String, on: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pragma {
    pub kind: PragmaKind,
    pub span: Span,
}

/// Identifier of a `for` loop, numbered 1.. in source order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LoopId(pub u32);

impl fmt::Display for LoopId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&&",
            Or => "||",
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            Shl => "<<",
            Shr => ">>",
        }
    }

    /// C binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        use BinOp::*;
        match self {
            Or => 1,
            And => 2,
            BitOr => 3,
            BitXor => 4,
            BitAnd => 5,
            Eq | Ne => 6,
            Lt | Le | Gt | Ge => 7,
            Shl | Shr => 8,
            Add | Sub => 9,
            Mul | Div | Rem => 10,
        }
    }

    pub fn is_comparison(self) -> bool {
        use BinOp::*;
        matches!(self, Lt | Le | Gt | Ge | Eq | Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn is_integer_only(self) -> bool {
        use BinOp::*;
        matches!(self, Rem | BitAnd | BitOr | BitXor | Shl | Shr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
            UnOp::BitNot => "~",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Sqrt,
    Fabs,
    Exp,
    Min,
    Max,
    Fmin,
    Fmax,
    /// `clamp(v, lo, hi)`; produced by boundary lowering only.
    Clamp,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "sqrt" => Builtin::Sqrt,
            "fabs" => Builtin::Fabs,
            "exp" => Builtin::Exp,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "fmin" => Builtin::Fmin,
            "fmax" => Builtin::Fmax,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sqrt => "sqrt",
            Builtin::Fabs => "fabs",
            Builtin::Exp => "exp",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Fmin => "fmin",
            Builtin::Fmax => "fmax",
            Builtin::Clamp => "clamp",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Sqrt | Builtin::Fabs | Builtin::Exp => 1,
            Builtin::Min | Builtin::Max | Builtin::Fmin | Builtin::Fmax => 2,
            Builtin::Clamp => 3,
        }
    }
}

/// OpenCL work-item query functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorkItemFn {
    GlobalId,
    LocalId,
    GroupId,
    GlobalSize,
}

impl WorkItemFn {
    pub fn name(self) -> &'static str {
        match self {
            WorkItemFn::GlobalId => "get_global_id",
            WorkItemFn::LocalId => "get_local_id",
            WorkItemFn::GroupId => "get_group_id",
            WorkItemFn::GlobalSize => "get_global_size",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    /// Filled in by the type checker.
    pub ty: Option<ScalarType>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f32),
    Var(String),
    /// The builtin logical thread index `idx` / `idy`.
    ThreadIdx(Axis),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// 1D array access `a[i]`.
    Index { array: String, index: Box<Expr> },
    /// 2D image access `img[x][y]`.
    Index2 { image: String, x: Box<Expr>, y: Box<Expr> },
    Call(Builtin, Vec<Expr>),
    Cast(ScalarType, Box<Expr>),

    // Extended dialect.
    Select { cond: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
    WorkItem(WorkItemFn, Axis),
    /// Logical grid width (`X`) or height (`Y`), passed as a kernel argument.
    GridDim(Axis),
    /// Read through an image object using the image's sampler.
    ReadImage { image: String, x: Box<Expr>, y: Box<Expr> },
    /// Read from a work-group local tile.
    LocalRead { tile: String, x: Box<Expr>, y: Box<Expr> },
    /// Offset of the current logical thread inside its work-group's pixel
    /// block. Placeholder introduced by local-memory placement and resolved
    /// by the thread-mapping pass.
    TileOffset(Axis),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, ty: None, span }
    }

    /// Untyped, span-less node; used by the transform passes.
    pub fn synth(kind: ExprKind) -> Self {
        Expr { kind, ty: None, span: Span::default() }
    }

    pub fn int(v: i64) -> Self {
        Expr::synth(ExprKind::Int(v))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::synth(ExprKind::Var(name.into()))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::synth(ExprKind::Binary(op, Box::new(l), Box::new(r)))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self.kind {
            ExprKind::Int(v) => Some(v),
            _ => None,
        }
    }

    /// Visit this expression and all sub-expressions, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        self.for_each_child(|c| c.walk(f));
    }

    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        match &self.kind {
            ExprKind::Int(_)
            | ExprKind::Float(_)
            | ExprKind::Var(_)
            | ExprKind::ThreadIdx(_)
            | ExprKind::WorkItem(..)
            | ExprKind::GridDim(_)
            | ExprKind::TileOffset(_) => {}
            ExprKind::Unary(_, e) | ExprKind::Cast(_, e) => f(e),
            ExprKind::Binary(_, l, r) => {
                f(l);
                f(r);
            }
            ExprKind::Index { index, .. } => f(index),
            ExprKind::Index2 { x, y, .. }
            | ExprKind::ReadImage { x, y, .. }
            | ExprKind::LocalRead { x, y, .. } => {
                f(x);
                f(y);
            }
            ExprKind::Call(_, args) => args.iter().for_each(f),
            ExprKind::Select { cond, then, otherwise } => {
                f(cond);
                f(then);
                f(otherwise);
            }
        }
    }

    pub fn for_each_child_mut(&mut self, mut f: impl FnMut(&mut Expr)) {
        match &mut self.kind {
            ExprKind::Int(_)
            | ExprKind::Float(_)
            | ExprKind::Var(_)
            | ExprKind::ThreadIdx(_)
            | ExprKind::WorkItem(..)
            | ExprKind::GridDim(_)
            | ExprKind::TileOffset(_) => {}
            ExprKind::Unary(_, e) | ExprKind::Cast(_, e) => f(e),
            ExprKind::Binary(_, l, r) => {
                f(l);
                f(r);
            }
            ExprKind::Index { index, .. } => f(index),
            ExprKind::Index2 { x, y, .. }
            | ExprKind::ReadImage { x, y, .. }
            | ExprKind::LocalRead { x, y, .. } => {
                f(x);
                f(y);
            }
            ExprKind::Call(_, args) => args.iter_mut().for_each(f),
            ExprKind::Select { cond, then, otherwise } => {
                f(cond);
                f(then);
                f(otherwise);
            }
        }
    }

    /// Bottom-up rewrite: children are rewritten before `f` sees the parent.
    pub fn rewrite(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        self.for_each_child_mut(|c| c.rewrite(f));
        f(self);
    }

    pub fn mentions_thread_idx(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e.kind, ExprKind::ThreadIdx(_)) {
                found = true;
            }
        });
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn binop(self) -> Option<BinOp> {
        match self {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    Var(String),
    Index { array: String, index: Expr },
    Index2 { image: String, x: Expr, y: Expr },
    Local { tile: String, x: Expr, y: Expr },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block { stmts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForLoop {
    pub id: LoopId,
    pub var: String,
    pub var_ty: ScalarType,
    pub init: Expr,
    /// Loop condition is `var <cmp> bound`.
    pub cmp: BinOp,
    pub bound: Expr,
    pub step: i64,
    pub body: Block,
}

/// One axis of the thread-coarsening loop nest: the counter runs over
/// `0..count` and the logical index is `base + counter * stride`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenAxis {
    pub counter: String,
    pub logical: String,
    pub count: u32,
    pub base: Expr,
    pub stride: Expr,
}

/// The loop nest that replaces the logical thread with a block of logical
/// threads per work-item. `stride` is positive, so the logical index grows
/// strictly with the counter.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenNest {
    pub x: CoarsenAxis,
    pub y: CoarsenAxis,
    /// Whether `logical_x < W && logical_y < H` guards the body.
    pub guarded: bool,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl { ty: ScalarType, name: String, init: Option<Expr> },
    Assign { target: LValue, op: AssignOp, value: Expr },
    For(ForLoop),
    If { cond: Expr, then: Block, otherwise: Option<Block> },
    Expr(Expr),
    Block(Block),

    // Extended dialect.
    LocalDecl { tile: String, ty: ScalarType, width: u32, height: u32 },
    Barrier,
    WriteImage { image: String, x: Expr, y: Expr, value: Expr },
    Coarsen(Box<CoarsenNest>),
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    pub fn synth(kind: StmtKind) -> Self {
        Stmt { kind, span: Span::default() }
    }

    /// Every expression directly owned by this statement (not nested blocks).
    pub fn for_each_expr<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        match &self.kind {
            StmtKind::Decl { init, .. } => {
                if let Some(e) = init {
                    f(e)
                }
            }
            StmtKind::Assign { target, value, .. } => {
                lvalue_exprs(target, &mut f);
                f(value);
            }
            StmtKind::For(l) => {
                f(&l.init);
                f(&l.bound);
            }
            StmtKind::If { cond, .. } => f(cond),
            StmtKind::Expr(e) => f(e),
            StmtKind::WriteImage { x, y, value, .. } => {
                f(x);
                f(y);
                f(value);
            }
            StmtKind::Coarsen(n) => {
                f(&n.x.base);
                f(&n.x.stride);
                f(&n.y.base);
                f(&n.y.stride);
            }
            StmtKind::Block(_) | StmtKind::LocalDecl { .. } | StmtKind::Barrier => {}
        }
    }

    pub fn for_each_expr_mut(&mut self, mut f: impl FnMut(&mut Expr)) {
        match &mut self.kind {
            StmtKind::Decl { init, .. } => {
                if let Some(e) = init {
                    f(e)
                }
            }
            StmtKind::Assign { target, value, .. } => {
                match target {
                    LValue::Var(_) => {}
                    LValue::Index { index, .. } => f(index),
                    LValue::Index2 { x, y, .. } | LValue::Local { x, y, .. } => {
                        f(x);
                        f(y);
                    }
                }
                f(value);
            }
            StmtKind::For(l) => {
                f(&mut l.init);
                f(&mut l.bound);
            }
            StmtKind::If { cond, .. } => f(cond),
            StmtKind::Expr(e) => f(e),
            StmtKind::WriteImage { x, y, value, .. } => {
                f(x);
                f(y);
                f(value);
            }
            StmtKind::Coarsen(n) => {
                f(&mut n.x.base);
                f(&mut n.x.stride);
                f(&mut n.y.base);
                f(&mut n.y.stride);
            }
            StmtKind::Block(_) | StmtKind::LocalDecl { .. } | StmtKind::Barrier => {}
        }
    }

    pub fn for_each_block<'a>(&'a self, mut f: impl FnMut(&'a Block)) {
        match &self.kind {
            StmtKind::For(l) => f(&l.body),
            StmtKind::If { then, otherwise, .. } => {
                f(then);
                if let Some(b) = otherwise {
                    f(b);
                }
            }
            StmtKind::Block(b) => f(b),
            StmtKind::Coarsen(n) => f(&n.body),
            _ => {}
        }
    }

    pub fn for_each_block_mut(&mut self, mut f: impl FnMut(&mut Block)) {
        match &mut self.kind {
            StmtKind::For(l) => f(&mut l.body),
            StmtKind::If { then, otherwise, .. } => {
                f(then);
                if let Some(b) = otherwise {
                    f(b);
                }
            }
            StmtKind::Block(b) => f(b),
            StmtKind::Coarsen(n) => f(&mut n.body),
            _ => {}
        }
    }
}

fn lvalue_exprs<'a>(target: &'a LValue, f: &mut impl FnMut(&'a Expr)) {
    match target {
        LValue::Var(_) => {}
        LValue::Index { index, .. } => f(index),
        LValue::Index2 { x, y, .. } | LValue::Local { x, y, .. } => {
            f(x);
            f(y);
        }
    }
}

impl Block {
    /// Visit every statement in this block and nested blocks, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        for s in &self.stmts {
            f(s);
            s.for_each_block(|b| b.walk(f));
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Stmt)) {
        for s in &mut self.stmts {
            f(s);
            s.for_each_block_mut(|b| b.walk_mut(f));
        }
    }

    /// Visit every expression in the block tree, including sub-expressions.
    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        self.walk(&mut |s| s.for_each_expr(|e| e.walk(f)));
    }

    /// Bottom-up rewrite of every expression in the block tree.
    pub fn rewrite_exprs(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        self.walk_mut(&mut |s| s.for_each_expr_mut(|e| e.rewrite(f)));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelAst {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub pragmas: Vec<Pragma>,
    pub span: Span,
}

impl KernelAst {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn grid_target(&self) -> Option<&GridTarget> {
        self.pragmas.iter().find_map(|p| match &p.kind {
            PragmaKind::Grid(t) => Some(t),
            _ => None,
        })
    }

    /// Boundary condition of an image; constant 0 unless a pragma says otherwise.
    pub fn boundary(&self, image: &str) -> BoundaryMode {
        self.pragmas
            .iter()
            .find_map(|p| match &p.kind {
                PragmaKind::Boundary { image: i, mode } if i == image => Some(*mode),
                _ => None,
            })
            .unwrap_or_default()
    }

    pub fn max_size(&self, array: &str) -> Option<u64> {
        self.pragmas.iter().find_map(|p| match &p.kind {
            PragmaKind::MaxSize { array: a, bytes } if a == array => Some(*bytes),
            _ => None,
        })
    }

    /// All loops in source order.
    pub fn loops(&self) -> Vec<&ForLoop> {
        let mut out = Vec::new();
        self.body.walk(&mut |s| {
            if let StmtKind::For(l) = &s.kind {
                out.push(l);
            }
        });
        out
    }

    /// Copy with every span reset and type annotations cleared, for
    /// structural comparison.
    pub fn without_spans(&self) -> KernelAst {
        let mut k = self.clone();
        k.span = Span::default();
        for p in &mut k.params {
            p.span = Span::default();
        }
        for p in &mut k.pragmas {
            p.span = Span::default();
        }
        k.body.walk_mut(&mut |s| {
            s.span = Span::default();
            s.for_each_expr_mut(|e| {
                e.rewrite(&mut |e| {
                    e.span = Span::default();
                    e.ty = None;
                })
            });
        });
        k
    }
}
