use super::ast::*;
use super::FrontendError;

struct Checker<'a> {
    kernel: &'a KernelAst,
    scopes: Vec<Vec<(String, ScalarType)>>,
}

type TResult<T> = Result<T, FrontendError>;

fn type_err(span: Span, message: impl Into<String>) -> FrontendError {
    FrontendError::Type { span, message: message.into() }
}

impl Checker<'_> {
    fn lookup_var(&self, name: &str, span: Span) -> TResult<ScalarType> {
        for scope in self.scopes.iter().rev() {
            if let Some((_, t)) = scope.iter().rev().find(|(n, _)| n == name) {
                return Ok(*t);
            }
        }
        match self.kernel.param(name) {
            Some(Param { kind: ParamKind::Scalar(t), .. }) => Ok(*t),
            Some(p) if p.kind.is_image() => {
                Err(type_err(span, format!("image `{name}` used as a value; index it as `{name}[x][y]`")))
            }
            Some(_) => Err(type_err(span, format!("array `{name}` used as a value; index it as `{name}[i]`"))),
            None => Err(type_err(span, format!("unknown variable `{name}`"))),
        }
    }

    fn array_elem(&self, name: &str, span: Span) -> TResult<ScalarType> {
        match self.kernel.param(name).map(|p| p.kind) {
            Some(ParamKind::Array(t)) => Ok(t),
            Some(ParamKind::Image(_)) => {
                Err(type_err(span, format!("image `{name}` must be indexed with two subscripts `[x][y]`")))
            }
            _ => Err(type_err(span, format!("cannot index scalar `{name}`"))),
        }
    }

    fn image_elem(&self, name: &str, span: Span) -> TResult<ScalarType> {
        match self.kernel.param(name).map(|p| p.kind) {
            Some(ParamKind::Image(t)) => Ok(t),
            Some(ParamKind::Array(_)) => {
                Err(type_err(span, format!("array `{name}` must be indexed with a single subscript")))
            }
            _ => Err(type_err(span, format!("cannot index scalar `{name}`"))),
        }
    }

    fn integer_index(&mut self, e: &mut Expr) -> TResult<()> {
        let t = self.expr(e)?;
        if !t.is_integer() {
            return Err(type_err(e.span, format!("subscript has type {t}, expected an integer")));
        }
        Ok(())
    }

    fn expr(&mut self, e: &mut Expr) -> TResult<ScalarType> {
        let span = e.span;
        let ty = match &mut e.kind {
            ExprKind::Int(v) => {
                if *v > u32::MAX as i64 {
                    return Err(type_err(span, "integer literal out of range"));
                }
                ScalarType::Int
            }
            ExprKind::Float(_) => ScalarType::Float,
            ExprKind::Var(name) => self.lookup_var(name, span)?,
            ExprKind::ThreadIdx(_) => ScalarType::Int,
            ExprKind::Unary(op, inner) => {
                let t = self.expr(inner)?;
                match op {
                    UnOp::Neg => t.promoted(),
                    UnOp::Not => ScalarType::Int,
                    UnOp::BitNot => {
                        if !t.is_integer() {
                            return Err(type_err(span, "`~` requires an integer operand"));
                        }
                        t.promoted()
                    }
                }
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.expr(l)?;
                let rt = self.expr(r)?;
                if op.is_integer_only() && !(lt.is_integer() && rt.is_integer()) {
                    return Err(type_err(span, format!("`{}` requires integer operands", op.symbol())));
                }
                if op.is_comparison() || op.is_logical() {
                    ScalarType::Int
                } else if matches!(op, BinOp::Shl | BinOp::Shr) {
                    lt.promoted()
                } else {
                    lt.arithmetic(rt)
                }
            }
            ExprKind::Index { array, index } => {
                let t = self.array_elem(array, span)?;
                self.integer_index(index)?;
                t
            }
            ExprKind::Index2 { image, x, y } => {
                let t = self.image_elem(image, span)?;
                self.integer_index(x)?;
                self.integer_index(y)?;
                t
            }
            ExprKind::Call(b, args) => {
                let mut tys = Vec::new();
                for a in args.iter_mut() {
                    tys.push(self.expr(a)?);
                }
                match b {
                    Builtin::Sqrt | Builtin::Fabs | Builtin::Exp | Builtin::Fmin | Builtin::Fmax => ScalarType::Float,
                    Builtin::Min | Builtin::Max | Builtin::Clamp => {
                        tys.iter().fold(tys[0], |acc, t| acc.arithmetic(*t))
                    }
                }
            }
            ExprKind::Cast(t, inner) => {
                self.expr(inner)?;
                *t
            }
            ExprKind::Select { .. }
            | ExprKind::WorkItem(..)
            | ExprKind::GridDim(_)
            | ExprKind::ReadImage { .. }
            | ExprKind::LocalRead { .. }
            | ExprKind::TileOffset(_) => {
                return Err(type_err(span, "internal node in source kernel"));
            }
        };
        e.ty = Some(ty);
        Ok(ty)
    }

    fn block(&mut self, b: &mut Block) -> TResult<()> {
        self.scopes.push(Vec::new());
        for s in &mut b.stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &mut Stmt) -> TResult<()> {
        let span = s.span;
        match &mut s.kind {
            StmtKind::Decl { ty, name, init } => {
                if let Some(e) = init {
                    self.expr(e)?;
                }
                self.scopes.last_mut().expect("scope").push((name.clone(), *ty));
            }
            // The value converts implicitly to the target's type.
            StmtKind::Assign { target, value, .. } => {
                match target {
                    LValue::Var(name) => {
                        self.lookup_var(name, span)?;
                    }
                    LValue::Index { array, index } => {
                        self.array_elem(array, span)?;
                        self.integer_index(index)?;
                    }
                    LValue::Index2 { image, x, y } => {
                        self.image_elem(image, span)?;
                        self.integer_index(x)?;
                        self.integer_index(y)?;
                    }
                    LValue::Local { .. } => return Err(type_err(span, "internal node in source kernel")),
                }
                self.expr(value)?;
            }
            StmtKind::For(l) => {
                if !l.var_ty.is_integer() {
                    return Err(type_err(span, format!("loop variable `{}` must have an integer type", l.var)));
                }
                let it = self.expr(&mut l.init)?;
                if !it.is_integer() {
                    return Err(type_err(l.init.span, "loop start must be an integer"));
                }
                self.scopes.push(vec![(l.var.clone(), l.var_ty)]);
                let bt = self.expr(&mut l.bound)?;
                if !bt.is_integer() {
                    return Err(type_err(l.bound.span, "loop bound must be an integer"));
                }
                self.block(&mut l.body)?;
                self.scopes.pop();
            }
            StmtKind::If { cond, then, otherwise } => {
                self.expr(cond)?;
                self.block(then)?;
                if let Some(b) = otherwise {
                    self.block(b)?;
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::Block(b) => self.block(b)?,
            StmtKind::LocalDecl { .. } | StmtKind::Barrier | StmtKind::WriteImage { .. } | StmtKind::Coarsen(_) => {
                return Err(type_err(span, "internal node in source kernel"));
            }
        }
        Ok(())
    }
}

/// Annotate every expression with its scalar type.
pub fn typecheck(mut ast: KernelAst) -> Result<KernelAst, FrontendError> {
    let mut body = std::mem::take(&mut ast.body);
    let mut c = Checker { kernel: &ast, scopes: Vec::new() };
    c.block(&mut body)?;
    ast.body = body;
    Ok(ast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile_source;

    fn expr_types(src: &str) -> Vec<(String, ScalarType)> {
        let k = compile_source(src).unwrap();
        let mut out = Vec::new();
        k.body.walk(&mut |s| {
            if let StmtKind::Assign { target: LValue::Var(v), value, .. } = &s.kind {
                out.push((v.clone(), value.ty.unwrap()));
            }
        });
        out
    }

    #[test]
    fn image_read_sum_is_float() {
        let t = expr_types(
            "void k(Image<float> in) { float sum = 0.0; for (int i = 0; i < 2; i++) { sum += in[idx + i][idy]; } }",
        );
        assert_eq!(t, vec![("sum".to_string(), ScalarType::Float)]);
    }

    #[test]
    fn uchar_plus_int_promotes_to_int() {
        let t = expr_types("void k(Image<uchar> in) { int s = 0; s = in[idx][idy] + 1; }");
        assert_eq!(t[0].1, ScalarType::Int);
    }

    #[test]
    fn promotion_ladder() {
        let t = expr_types(
            "void k(uint u, float f) { int a = 0; uint b = 0; float c = 0.0; a = a * 2; b = a + u; c = u + f; }",
        );
        assert_eq!(t.iter().map(|p| p.1).collect::<Vec<_>>(), [ScalarType::Int, ScalarType::Uint, ScalarType::Float]);
    }

    #[test]
    fn indexing_thread_index_is_a_type_error() {
        let err = compile_source("void k(Image<float> o) { o[idx][idy] = idx[3]; }").unwrap_err();
        assert!(matches!(err, FrontendError::Type { .. }), "{err:?}");
    }

    #[test]
    fn indexing_scalar_is_a_type_error() {
        let err = compile_source("void k(float s, Image<float> o) { o[idx][idy] = s[1]; }").unwrap_err();
        assert!(matches!(err, FrontendError::Type { .. }));
        let err = compile_source("void k(float *a, Image<float> o) { o[idx][idy] = a[1][2]; }").unwrap_err();
        assert!(matches!(err, FrontendError::Type { .. }));
        let err = compile_source("void k(Image<float> o) { o[idx] = 1.0; }").unwrap_err();
        assert!(matches!(err, FrontendError::Type { .. }));
    }

    #[test]
    fn non_integer_loop_bound() {
        let err = compile_source("void k() { for (int i = 0; i < 2.5; i++) { } }").unwrap_err();
        assert!(matches!(err, FrontendError::Type { .. }));
    }

    #[test]
    fn modulo_needs_integers() {
        assert!(compile_source("void k(float f) { float g = f % 2; }").is_err());
        assert!(compile_source("void k(int f) { int g = f % 2; }").is_ok());
    }
}
