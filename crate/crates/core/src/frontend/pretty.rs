//! Source printing for kernels and transformed kernel bodies.

use super::ast::*;
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    /// Kernel source language: `idx`/`idy`, `Image` indexing, plain float literals.
    ImageCl,
    /// OpenCL C: `f`-suffixed float literals.
    OpenCl,
}

const INDENT: &str = "    ";
const PREC_UNARY: u8 = 11;
const PREC_PRIMARY: u8 = 12;

pub struct Printer<'a> {
    pub dialect: Dialect,
    pub params: &'a [Param],
}

pub fn float_literal(v: f32, dialect: Dialect) -> String {
    let mut s = if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "NAN".to_string()
    } else if v > 0.0 {
        "INFINITY".to_string()
    } else {
        "-INFINITY".to_string()
    };
    if dialect == Dialect::OpenCl && v.is_finite() {
        s.push('f');
    }
    s
}

fn expr_prec(e: &Expr, dialect: Dialect) -> u8 {
    match &e.kind {
        ExprKind::WorkItem(..) if dialect == Dialect::OpenCl => PREC_UNARY,
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Unary(..) | ExprKind::Cast(..) => PREC_UNARY,
        ExprKind::Int(v) if *v < 0 => PREC_UNARY,
        ExprKind::Float(v) if v.is_sign_negative() => PREC_UNARY,
        _ => PREC_PRIMARY,
    }
}

impl Printer<'_> {
    fn elem_type(&self, image: &str) -> ScalarType {
        self.params.iter().find(|p| p.name == image).map(|p| p.kind.elem()).unwrap_or(ScalarType::Float)
    }

    pub fn expr(&self, e: &Expr) -> String {
        let mut s = String::new();
        self.write_expr(&mut s, e);
        s
    }

    fn write_wrapped(&self, out: &mut String, e: &Expr, wrap: bool) {
        if wrap {
            out.push('(');
            self.write_expr(out, e);
            out.push(')');
        } else {
            self.write_expr(out, e);
        }
    }

    fn write_expr(&self, out: &mut String, e: &Expr) {
        match &e.kind {
            ExprKind::Int(v) => write!(out, "{v}").unwrap(),
            ExprKind::Float(v) => out.push_str(&float_literal(*v, self.dialect)),
            ExprKind::Var(n) => out.push_str(n),
            ExprKind::ThreadIdx(Axis::X) => out.push_str("idx"),
            ExprKind::ThreadIdx(Axis::Y) => out.push_str("idy"),
            ExprKind::Unary(op, inner) => {
                out.push_str(op.symbol());
                // Avoid `--x`, which would lex as a decrement.
                let wrap = expr_prec(inner, self.dialect) < PREC_UNARY
                    || matches!(inner.kind, ExprKind::Unary(..) | ExprKind::Int(_) | ExprKind::Float(_))
                        && self.expr(inner).starts_with(['-', '!', '~']);
                self.write_wrapped(out, inner, wrap);
            }
            ExprKind::Binary(op, l, r) => {
                let p = op.precedence();
                self.write_wrapped(out, l, expr_prec(l, self.dialect) < p);
                write!(out, " {} ", op.symbol()).unwrap();
                self.write_wrapped(out, r, expr_prec(r, self.dialect) <= p);
            }
            ExprKind::Index { array, index } => {
                write!(out, "{array}[").unwrap();
                self.write_expr(out, index);
                out.push(']');
            }
            ExprKind::Index2 { image, x, y } => {
                write!(out, "{image}[").unwrap();
                self.write_expr(out, x);
                out.push_str("][");
                self.write_expr(out, y);
                out.push(']');
            }
            ExprKind::Call(b, args) => {
                out.push_str(b.name());
                out.push('(');
                let float_only = matches!(b, Builtin::Sqrt | Builtin::Fabs | Builtin::Exp | Builtin::Fmin | Builtin::Fmax);
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    if self.dialect == Dialect::OpenCl && float_only && a.ty.is_some_and(|t| t.is_integer()) {
                        out.push_str("(float) ");
                        self.write_wrapped(out, a, expr_prec(a, self.dialect) < PREC_UNARY);
                    } else {
                        self.write_expr(out, a);
                    }
                }
                out.push(')');
            }
            ExprKind::Cast(t, inner) => {
                write!(out, "({t}) ").unwrap();
                self.write_wrapped(out, inner, expr_prec(inner, self.dialect) < PREC_UNARY);
            }
            ExprKind::Select { cond, then, otherwise } => {
                out.push('(');
                self.write_expr(out, cond);
                out.push_str(" ? ");
                self.write_expr(out, then);
                out.push_str(" : ");
                self.write_expr(out, otherwise);
                out.push(')');
            }
            ExprKind::WorkItem(f, axis) => {
                // The work-item functions return size_t; kernels compute in int.
                if self.dialect == Dialect::OpenCl {
                    out.push_str("(int) ");
                }
                write!(out, "{}({})", f.name(), axis.index()).unwrap()
            }
            ExprKind::GridDim(Axis::X) => out.push_str("W"),
            ExprKind::GridDim(Axis::Y) => out.push_str("H"),
            ExprKind::ReadImage { image, x, y } => {
                let t = self.elem_type(image);
                let (func, cast) = match t {
                    ScalarType::Float => ("read_imagef", ""),
                    ScalarType::Int => ("read_imagei", ""),
                    ScalarType::Uint => ("read_imageui", ""),
                    ScalarType::Uchar => ("read_imageui", "(uchar) "),
                };
                write!(out, "{cast}{func}({image}, imcl_sampler_{image}, (int2)(").unwrap();
                self.write_expr(out, x);
                out.push_str(", ");
                self.write_expr(out, y);
                out.push_str(")).x");
            }
            ExprKind::LocalRead { tile, x, y } => {
                write!(out, "{tile}[").unwrap();
                self.write_expr(out, y);
                out.push_str("][");
                self.write_expr(out, x);
                out.push(']');
            }
            ExprKind::TileOffset(Axis::X) => out.push_str("imcl_tile_offset_x"),
            ExprKind::TileOffset(Axis::Y) => out.push_str("imcl_tile_offset_y"),
        }
    }

    fn lvalue(&self, out: &mut String, lv: &LValue) {
        match lv {
            LValue::Var(n) => out.push_str(n),
            LValue::Index { array, index } => {
                write!(out, "{array}[").unwrap();
                self.write_expr(out, index);
                out.push(']');
            }
            LValue::Index2 { image, x, y } => {
                write!(out, "{image}[").unwrap();
                self.write_expr(out, x);
                out.push_str("][");
                self.write_expr(out, y);
                out.push(']');
            }
            LValue::Local { tile, x, y } => {
                write!(out, "{tile}[").unwrap();
                self.write_expr(out, y);
                out.push_str("][");
                self.write_expr(out, x);
                out.push(']');
            }
        }
    }

    pub fn block(&self, out: &mut String, b: &Block, depth: usize) {
        for s in &b.stmts {
            self.stmt(out, s, depth);
        }
    }

    fn line(out: &mut String, depth: usize, text: &str) {
        for _ in 0..depth {
            out.push_str(INDENT);
        }
        out.push_str(text);
        out.push('\n');
    }

    pub fn stmt(&self, out: &mut String, s: &Stmt, depth: usize) {
        match &s.kind {
            StmtKind::Decl { ty, name, init } => match init {
                Some(e) => Self::line(out, depth, &format!("{ty} {name} = {};", self.expr(e))),
                None => Self::line(out, depth, &format!("{ty} {name};")),
            },
            StmtKind::Assign { target, op, value } => {
                let mut t = String::new();
                self.lvalue(&mut t, target);
                Self::line(out, depth, &format!("{t} {} {};", op.symbol(), self.expr(value)));
            }
            StmtKind::For(l) => {
                let step = match l.step {
                    1 => format!("{}++", l.var),
                    -1 => format!("{}--", l.var),
                    s if s > 0 => format!("{} += {s}", l.var),
                    s => format!("{} -= {}", l.var, -s),
                };
                Self::line(
                    out,
                    depth,
                    &format!(
                        "for ({} {} = {}; {} {} {}; {step}) {{",
                        l.var_ty,
                        l.var,
                        self.expr(&l.init),
                        l.var,
                        l.cmp.symbol(),
                        self.expr(&l.bound)
                    ),
                );
                self.block(out, &l.body, depth + 1);
                Self::line(out, depth, "}");
            }
            StmtKind::If { cond, then, otherwise } => {
                Self::line(out, depth, &format!("if ({}) {{", self.expr(cond)));
                self.block(out, then, depth + 1);
                if let Some(b) = otherwise {
                    Self::line(out, depth, "} else {");
                    self.block(out, b, depth + 1);
                }
                Self::line(out, depth, "}");
            }
            StmtKind::Expr(e) => Self::line(out, depth, &format!("{};", self.expr(e))),
            StmtKind::Block(b) => {
                Self::line(out, depth, "{");
                self.block(out, b, depth + 1);
                Self::line(out, depth, "}");
            }
            StmtKind::LocalDecl { tile, ty, width, height } => {
                Self::line(out, depth, &format!("__local {ty} {tile}[{height}][{width}];"));
            }
            StmtKind::Barrier => Self::line(out, depth, "barrier(CLK_LOCAL_MEM_FENCE);"),
            StmtKind::WriteImage { image, x, y, value } => {
                let (func, vec) = match self.elem_type(image) {
                    ScalarType::Float => ("write_imagef", "float4"),
                    ScalarType::Int => ("write_imagei", "int4"),
                    ScalarType::Uint | ScalarType::Uchar => ("write_imageui", "uint4"),
                };
                Self::line(
                    out,
                    depth,
                    &format!(
                        "{func}({image}, (int2)({}, {}), ({vec})({}));",
                        self.expr(x),
                        self.expr(y),
                        self.expr(value)
                    ),
                );
            }
            StmtKind::Coarsen(n) => self.coarsen(out, n, depth),
        }
    }

    fn coarsen(&self, out: &mut String, n: &CoarsenNest, depth: usize) {
        let mut d = depth;
        let mut opened = 0;
        for axis in [&n.y, &n.x] {
            if axis.count > 1 {
                Self::line(
                    out,
                    d,
                    &format!("for (int {c} = 0; {c} < {}; {c}++) {{", axis.count, c = axis.counter),
                );
                d += 1;
                opened += 1;
                let idx = Expr::binary(
                    BinOp::Add,
                    axis.base.clone(),
                    Expr::binary(BinOp::Mul, Expr::var(axis.counter.clone()), axis.stride.clone()),
                );
                Self::line(out, d, &format!("int {} = {};", axis.logical, self.expr(&idx)));
            } else {
                Self::line(out, d, &format!("int {} = {};", axis.logical, self.expr(&axis.base)));
            }
        }
        if n.guarded {
            Self::line(out, d, &format!("if ({} < W && {} < H) {{", n.x.logical, n.y.logical));
            self.block(out, &n.body, d + 1);
            Self::line(out, d, "}");
        } else {
            self.block(out, &n.body, d);
        }
        for _ in 0..opened {
            d -= 1;
            Self::line(out, d, "}");
        }
    }
}

fn param_decl(p: &Param) -> String {
    match p.kind {
        ParamKind::Image(t) => format!("Image<{t}> {}", p.name),
        ParamKind::Array(t) => format!("{t} *{}", p.name),
        ParamKind::Scalar(t) => format!("{t} {}", p.name),
    }
}

pub fn pragma_text(p: &Pragma) -> String {
    let body = match &p.kind {
        PragmaKind::Grid(GridTarget::Image(n)) => format!("grid({n})"),
        PragmaKind::Grid(GridTarget::Literal { width, height }) => format!("grid({width}, {height})"),
        PragmaKind::Boundary { image, mode: BoundaryMode::Clamped } => format!("boundary({image}, clamped)"),
        PragmaKind::Boundary { image, mode: BoundaryMode::Constant(c) } => {
            format!("boundary({image}, constant({c}))")
        }
        PragmaKind::MaxSize { array, bytes } => format!("maxsize({array}, {bytes})"),
        PragmaKind::Force { param, on } => format!("force({param}, {})", if *on { "on" } else { "off" }),
    };
    format!("#pragma imcl {body}")
}

/// Print a kernel back to source form. Re-parsing the output yields the
/// same tree up to spans.
pub fn print_kernel(k: &KernelAst) -> String {
    let mut out = String::new();
    for p in &k.pragmas {
        out.push_str(&pragma_text(p));
        out.push('\n');
    }
    let params: Vec<String> = k.params.iter().map(param_decl).collect();
    writeln!(out, "void {}({}) {{", k.name, params.join(", ")).unwrap();
    Printer { dialect: Dialect::ImageCl, params: &k.params }.block(&mut out, &k.body, 1);
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::frontend::compile_source;
    use crate::frontend::lexer::tokenize;
    use crate::frontend::parser::parse;
    use proptest::prelude::*;

    fn roundtrip(src: &str) {
        let a = parse(tokenize(src).unwrap()).unwrap();
        let printed = print_kernel(&a);
        let b = parse(tokenize(&printed).unwrap()).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(a.without_spans(), b.without_spans(), "{printed}");
    }

    #[test]
    fn corpus_roundtrips() {
        for (_, src) in corpus::SOURCES {
            roundtrip(src);
        }
    }

    #[test]
    fn parenthesization_follows_structure() {
        roundtrip("void k(int a, int b, int c) { int r = a - (b - c); r = (a + b) * c; r = -(-a); r = !(a < b) || a & b == c; }");
    }

    #[test]
    fn blur_prints_readably() {
        let k = compile_source(corpus::BLUR).unwrap();
        let text = print_kernel(&k);
        assert!(text.contains("sum += in[idx + i][idy + j];"), "{text}");
        assert!(text.contains("out[idx][idy] = sum / 9.0;"), "{text}");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0i64..1000).prop_map(Expr::int),
            (0.0f32..100.0).prop_map(|v| Expr::synth(ExprKind::Float(v))),
            prop_oneof![Just("a"), Just("b")].prop_map(Expr::var),
            prop_oneof![Just(Axis::X), Just(Axis::Y)].prop_map(|a| Expr::synth(ExprKind::ThreadIdx(a))),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            let ops = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Lt),
                Just(BinOp::Eq),
                Just(BinOp::And),
                Just(BinOp::Or),
            ];
            prop_oneof![
                (ops, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
                inner.clone().prop_map(|e| Expr::synth(ExprKind::Unary(UnOp::Neg, Box::new(e)))),
                inner.clone().prop_map(|e| Expr::synth(ExprKind::Cast(ScalarType::Float, Box::new(e)))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Expr::synth(ExprKind::Index2 {
                    image: "img".into(),
                    x: Box::new(x),
                    y: Box::new(y)
                })),
                (inner.clone(), inner).prop_map(|(x, y)| Expr::synth(ExprKind::Call(Builtin::Fmax, vec![x, y]))),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_expressions_reparse_identically(e in arb_expr()) {
            let printer = Printer { dialect: Dialect::ImageCl, params: &[] };
            let src = format!(
                "void k(Image<float> img, float a, float b) {{ float r = {}; }}",
                printer.expr(&e)
            );
            let k = parse(tokenize(&src).unwrap()).unwrap();
            let StmtKind::Decl { init: Some(got), .. } = &k.without_spans().body.stmts[0].kind else {
                panic!("declaration expected");
            };
            let mut want = e.clone();
            want.rewrite(&mut |x| { x.span = Span::default(); x.ty = None; });
            prop_assert_eq!(got, &want);
        }
    }
}
