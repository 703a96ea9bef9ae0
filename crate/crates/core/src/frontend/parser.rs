use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::FrontendError;

/// Names the generated code reserves for itself.
const RESERVED_PREFIX: &str = "imcl_";
const RESERVED_NAMES: &[&str] = &["idx", "idy", "W", "H"];

fn is_type_name(name: &str) -> bool {
    matches!(
        name,
        "float" | "int" | "uint" | "uchar" | "unsigned" | "double" | "char" | "short" | "long" | "half" | "bool"
    )
}

fn is_keyword(name: &str) -> bool {
    is_type_name(name)
        || matches!(
            name,
            "void" | "for" | "if" | "else" | "while" | "do" | "goto" | "switch" | "case" | "return" | "break"
                | "continue" | "Image" | "const" | "struct" | "typedef"
        )
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    scopes: Vec<Vec<String>>,
    params: Vec<Param>,
    /// Induction variables of the enclosing loops.
    loop_vars: Vec<String>,
    next_loop: u32,
    eof_span: Span,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, k: usize) -> Option<&TokenKind> {
        self.toks.get(self.pos + k).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.eof_span)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> FrontendError {
        let found = self.peek().map(|k| k.describe()).unwrap_or_else(|| "end of input".to_string());
        FrontendError::Parse {
            span: self.span(),
            message: format!("expected {}, found {found}", expected.join(" or ")),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn parse_err(&self, span: Span, message: impl Into<String>) -> FrontendError {
        FrontendError::Parse { span, message: message.into(), expected: Vec::new() }
    }

    fn restriction(&self, span: Span, message: impl Into<String>) -> FrontendError {
        FrontendError::Restriction { span, message: message.into() }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Span> {
        if self.peek() == Some(&kind) {
            let span = self.span();
            self.pos += 1;
            Ok(span)
        } else {
            Err(self.unexpected(&[what]))
        }
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => Some(s.as_str()),
            _ => None,
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        self.peek_ident() == Some(name)
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek() {
            Some(TokenKind::Ident(s)) if !is_keyword(s) => {
                let s = s.clone();
                let span = self.span();
                self.pos += 1;
                Ok((s, span))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    // ---------------------------------------------------------------
    // Names and scopes
    // ---------------------------------------------------------------

    fn check_new_name(&self, name: &str, span: Span) -> PResult<()> {
        if RESERVED_NAMES.contains(&name) || name.starts_with(RESERVED_PREFIX) || Builtin::from_name(name).is_some()
        {
            return Err(self.restriction(span, format!("`{name}` is a reserved name")));
        }
        Ok(())
    }

    fn declare(&mut self, name: &str, span: Span) -> PResult<()> {
        self.check_new_name(name, span)?;
        if self.params.iter().any(|p| p.name == name) || self.scopes.iter().any(|s| s.iter().any(|n| n == name)) {
            return Err(self.restriction(span, format!("redeclaration of `{name}` shadows an outer name")));
        }
        self.scopes.last_mut().expect("scope").push(name.to_string());
        Ok(())
    }

    fn resolve(&self, name: &str, span: Span) -> PResult<()> {
        if self.params.iter().any(|p| p.name == name) || self.scopes.iter().any(|s| s.iter().any(|n| n == name)) {
            Ok(())
        } else {
            Err(self.parse_err(span, format!("use of undeclared identifier `{name}`")))
        }
    }

    fn check_assignable(&self, name: &str, span: Span) -> PResult<()> {
        if self.loop_vars.iter().any(|v| v == name) {
            return Err(self.restriction(span, format!("loop variable `{name}` may not be modified in the loop body")));
        }
        Ok(())
    }

    // ---------------------------------------------------------------
    // Types
    // ---------------------------------------------------------------

    fn at_type(&self) -> bool {
        self.peek_ident().is_some_and(is_type_name)
    }

    fn parse_type(&mut self) -> PResult<ScalarType> {
        let span = self.span();
        let Some(name) = self.peek_ident().map(str::to_string) else {
            return Err(self.unexpected(&["type"]));
        };
        self.pos += 1;
        match name.as_str() {
            "float" => Ok(ScalarType::Float),
            "int" => Ok(ScalarType::Int),
            "uint" => Ok(ScalarType::Uint),
            "uchar" => Ok(ScalarType::Uchar),
            "unsigned" => {
                if self.is_ident("char") {
                    self.pos += 1;
                    Ok(ScalarType::Uchar)
                } else {
                    if self.is_ident("int") {
                        self.pos += 1;
                    }
                    Ok(ScalarType::Uint)
                }
            }
            other => Err(self.restriction(span, format!("type `{other}` is not supported"))),
        }
    }

    // ---------------------------------------------------------------
    // Top level
    // ---------------------------------------------------------------

    fn parse_kernel(&mut self) -> PResult<KernelAst> {
        let mut raw_pragmas = Vec::new();
        while let Some(TokenKind::Pragma(_) | TokenKind::Directive(_)) = self.peek() {
            raw_pragmas.push(self.bump().expect("token"));
        }
        if self.peek().is_none() {
            return Err(self.unexpected(&["kernel function"]));
        }
        let span = self.span();
        if !self.is_ident("void") {
            if self.at_type() {
                return Err(self.restriction(self.span(), "the kernel function must return void"));
            }
            return Err(self.unexpected(&["`void`"]));
        }
        self.pos += 1;
        let (name, _) = self.expect_ident("kernel name")?;
        self.expect(TokenKind::LParen, "`(`")?;
        self.parse_params()?;
        self.expect(TokenKind::RParen, "`)`")?;
        let body = self.parse_block()?;

        while let Some(t) = self.peek() {
            match t {
                TokenKind::Pragma(_) | TokenKind::Directive(_) => raw_pragmas.push(self.bump().expect("token")),
                TokenKind::Ident(s) if s == "void" || is_type_name(s) => {
                    return Err(self.restriction(self.span(), "the kernel must be written as a single function"));
                }
                _ => return Err(self.unexpected(&["end of input"])),
            }
        }

        let mut pragmas = Vec::new();
        for t in raw_pragmas {
            pragmas.push(self.parse_pragma(&t)?);
        }
        let kernel = KernelAst { name, params: self.params.clone(), body, pragmas, span };
        validate_pragmas(&kernel)?;
        Ok(kernel)
    }

    fn parse_params(&mut self) -> PResult<()> {
        if self.peek() == Some(&TokenKind::RParen) {
            return Ok(());
        }
        if self.is_ident("void") && self.peek_at(1) == Some(&TokenKind::RParen) {
            self.pos += 1;
            return Ok(());
        }
        loop {
            let span = self.span();
            if self.is_ident("const") {
                self.pos += 1;
            }
            let kind = if self.is_ident("Image") {
                self.pos += 1;
                self.expect(TokenKind::Lt, "`<`")?;
                let t = self.parse_type()?;
                self.expect(TokenKind::Gt, "`>`")?;
                ParamKind::Image(t)
            } else {
                let t = self.parse_type()?;
                if self.eat(&TokenKind::Star) {
                    if self.peek() == Some(&TokenKind::Star) {
                        return Err(self.restriction(self.span(), "pointers to pointers are not supported"));
                    }
                    ParamKind::Array(t)
                } else {
                    ParamKind::Scalar(t)
                }
            };
            let (name, name_span) = self.expect_ident("parameter name")?;
            let kind = if self.peek() == Some(&TokenKind::LBracket) {
                self.pos += 1;
                self.expect(TokenKind::RBracket, "`]`")?;
                match kind {
                    ParamKind::Scalar(t) => ParamKind::Array(t),
                    _ => return Err(self.parse_err(name_span, "unexpected `[]` on a pointer or image parameter")),
                }
            } else {
                kind
            };
            self.check_new_name(&name, name_span)?;
            if self.params.iter().any(|p| p.name == name) {
                return Err(self.parse_err(name_span, format!("duplicate parameter `{name}`")));
            }
            self.params.push(Param { name, kind, span });
            if !self.eat(&TokenKind::Comma) {
                return Ok(());
            }
        }
    }

    // ---------------------------------------------------------------
    // Statements
    // ---------------------------------------------------------------

    fn parse_block(&mut self) -> PResult<Block> {
        self.expect(TokenKind::LBrace, "`{`")?;
        self.scopes.push(Vec::new());
        let mut stmts = Vec::new();
        while self.peek() != Some(&TokenKind::RBrace) {
            if self.peek().is_none() {
                return Err(self.unexpected(&["`}`"]));
            }
            self.parse_stmt_into(&mut stmts)?;
        }
        self.pos += 1;
        self.scopes.pop();
        Ok(Block { stmts })
    }

    /// Body of `if`/`for`: a braced block or a single statement in its own scope.
    fn parse_body(&mut self) -> PResult<Block> {
        if self.peek() == Some(&TokenKind::LBrace) {
            return self.parse_block();
        }
        self.scopes.push(Vec::new());
        let mut stmts = Vec::new();
        self.parse_stmt_into(&mut stmts)?;
        self.scopes.pop();
        Ok(Block { stmts })
    }

    fn parse_stmt_into(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Semicolon) => {
                self.pos += 1;
                Ok(())
            }
            Some(TokenKind::LBrace) => {
                let b = self.parse_block()?;
                out.push(Stmt::new(StmtKind::Block(b), span));
                Ok(())
            }
            Some(TokenKind::Pragma(_)) | Some(TokenKind::Directive(_)) => {
                Err(self.restriction(span, "directives must appear outside the kernel body"))
            }
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                match s.as_str() {
                    "for" => {
                        let l = self.parse_for()?;
                        out.push(Stmt::new(StmtKind::For(l), span));
                        Ok(())
                    }
                    "if" => {
                        let st = self.parse_if()?;
                        out.push(st);
                        Ok(())
                    }
                    "while" | "do" | "goto" | "switch" | "return" | "break" | "continue" => {
                        Err(self.restriction(span, format!("`{s}` statements are not supported")))
                    }
                    "else" => Err(self.unexpected(&["statement"])),
                    "void" | "struct" | "typedef" => {
                        Err(self.restriction(span, "the kernel must be written as a single function"))
                    }
                    "const" => {
                        self.pos += 1;
                        self.parse_decl(out)
                    }
                    _ if is_type_name(&s) => self.parse_decl(out),
                    _ => {
                        let st = self.parse_simple_stmt()?;
                        self.expect(TokenKind::Semicolon, "`;`")?;
                        out.push(st);
                        Ok(())
                    }
                }
            }
            _ => {
                let st = self.parse_simple_stmt()?;
                self.expect(TokenKind::Semicolon, "`;`")?;
                out.push(st);
                Ok(())
            }
        }
    }

    fn parse_decl(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let ty = self.parse_type()?;
        loop {
            let span = self.span();
            let (name, name_span) = self.expect_ident("variable name")?;
            if self.peek() == Some(&TokenKind::LBracket) {
                return Err(self.restriction(self.span(), "local arrays are not supported"));
            }
            let init = if self.eat(&TokenKind::Assign) { Some(self.parse_expr()?) } else { None };
            // The name is in scope only after its initializer.
            self.declare(&name, name_span)?;
            out.push(Stmt::new(StmtKind::Decl { ty, name, init }, span));
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::Semicolon, "`;`")?;
        Ok(())
    }

    fn parse_if(&mut self) -> PResult<Stmt> {
        let span = self.span();
        self.pos += 1;
        self.expect(TokenKind::LParen, "`(`")?;
        let cond = self.parse_expr()?;
        self.expect(TokenKind::RParen, "`)`")?;
        let then = self.parse_body()?;
        let otherwise = if self.is_ident("else") {
            self.pos += 1;
            Some(self.parse_body()?)
        } else {
            None
        };
        Ok(Stmt::new(StmtKind::If { cond, then, otherwise }, span))
    }

    fn parse_for(&mut self) -> PResult<ForLoop> {
        self.pos += 1;
        let id = LoopId(self.next_loop);
        self.next_loop += 1;
        self.expect(TokenKind::LParen, "`(`")?;
        self.scopes.push(Vec::new());

        let decl_span = self.span();
        let var_ty = if self.at_type() {
            self.parse_type()?
        } else {
            return Err(self.restriction(decl_span, "for loops must declare an integer induction variable"));
        };
        let (var, var_span) = self.expect_ident("induction variable")?;
        self.expect(TokenKind::Assign, "`=`")?;
        let init = self.parse_expr()?;
        self.declare(&var, var_span)?;
        self.expect(TokenKind::Semicolon, "`;`")?;

        // Condition: var <cmp> bound
        let cond_span = self.span();
        match self.peek_ident() {
            Some(v) if v == var => self.pos += 1,
            _ => return Err(self.restriction(cond_span, format!("loop condition must compare `{var}` to a bound"))),
        }
        let cmp = match self.peek() {
            Some(TokenKind::Lt) => BinOp::Lt,
            Some(TokenKind::Le) => BinOp::Le,
            Some(TokenKind::Gt) => BinOp::Gt,
            Some(TokenKind::Ge) => BinOp::Ge,
            Some(TokenKind::NotEq) => BinOp::Ne,
            _ => return Err(self.unexpected(&["`<`", "`<=`", "`>`", "`>=`", "`!=`"])),
        };
        self.pos += 1;
        let bound = self.parse_expr()?;
        self.expect(TokenKind::Semicolon, "`;`")?;

        let step_span = self.span();
        let step = self.parse_step(&var)?;
        if step == 0 {
            return Err(self.restriction(step_span, "loop step must be non-zero"));
        }
        self.expect(TokenKind::RParen, "`)`")?;

        self.loop_vars.push(var.clone());
        let body = self.parse_body()?;
        self.loop_vars.pop();
        self.scopes.pop();
        Ok(ForLoop { id, var, var_ty, init, cmp, bound, step, body })
    }

    fn parse_step(&mut self, var: &str) -> PResult<i64> {
        let span = self.span();
        let bad = |p: &Self| p.restriction(span, format!("loop increment must step `{var}` by a constant"));
        match self.peek() {
            Some(TokenKind::PlusPlus) | Some(TokenKind::MinusMinus) => {
                let up = self.peek() == Some(&TokenKind::PlusPlus);
                self.pos += 1;
                match self.peek_ident() {
                    Some(v) if v == var => self.pos += 1,
                    _ => return Err(bad(self)),
                }
                Ok(if up { 1 } else { -1 })
            }
            Some(TokenKind::Ident(v)) if v == var => {
                self.pos += 1;
                match self.peek() {
                    Some(TokenKind::PlusPlus) => {
                        self.pos += 1;
                        Ok(1)
                    }
                    Some(TokenKind::MinusMinus) => {
                        self.pos += 1;
                        Ok(-1)
                    }
                    Some(TokenKind::PlusAssign) | Some(TokenKind::MinusAssign) => {
                        let sign = if self.peek() == Some(&TokenKind::PlusAssign) { 1 } else { -1 };
                        self.pos += 1;
                        let neg = self.eat(&TokenKind::Minus);
                        match self.peek() {
                            Some(TokenKind::Int { value, .. }) => {
                                let v = *value;
                                self.pos += 1;
                                Ok(sign * if neg { -v } else { v })
                            }
                            _ => Err(bad(self)),
                        }
                    }
                    _ => Err(bad(self)),
                }
            }
            _ => Err(bad(self)),
        }
    }

    /// Assignment, increment, or expression statement (without the `;`).
    fn parse_simple_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        if matches!(self.peek(), Some(TokenKind::PlusPlus) | Some(TokenKind::MinusMinus)) {
            let op = if self.peek() == Some(&TokenKind::PlusPlus) { AssignOp::Add } else { AssignOp::Sub };
            self.pos += 1;
            let target_span = self.span();
            let e = self.parse_unary()?;
            let target = self.to_lvalue(e, target_span)?;
            return Ok(Stmt::new(StmtKind::Assign { target, op, value: Expr::new(ExprKind::Int(1), span) }, span));
        }
        let e = self.parse_expr()?;
        let op = match self.peek() {
            Some(TokenKind::Assign) => Some(AssignOp::Set),
            Some(TokenKind::PlusAssign) => Some(AssignOp::Add),
            Some(TokenKind::MinusAssign) => Some(AssignOp::Sub),
            Some(TokenKind::StarAssign) => Some(AssignOp::Mul),
            Some(TokenKind::SlashAssign) => Some(AssignOp::Div),
            Some(TokenKind::PlusPlus) => {
                self.pos += 1;
                let target = self.to_lvalue(e, span)?;
                return Ok(Stmt::new(
                    StmtKind::Assign { target, op: AssignOp::Add, value: Expr::new(ExprKind::Int(1), span) },
                    span,
                ));
            }
            Some(TokenKind::MinusMinus) => {
                self.pos += 1;
                let target = self.to_lvalue(e, span)?;
                return Ok(Stmt::new(
                    StmtKind::Assign { target, op: AssignOp::Sub, value: Expr::new(ExprKind::Int(1), span) },
                    span,
                ));
            }
            _ => None,
        };
        match op {
            Some(op) => {
                self.pos += 1;
                let target = self.to_lvalue(e, span)?;
                let value = self.parse_expr()?;
                Ok(Stmt::new(StmtKind::Assign { target, op, value }, span))
            }
            None => Ok(Stmt::new(StmtKind::Expr(e), span)),
        }
    }

    fn to_lvalue(&self, e: Expr, span: Span) -> PResult<LValue> {
        match e.kind {
            ExprKind::Var(name) => {
                self.check_assignable(&name, span)?;
                Ok(LValue::Var(name))
            }
            ExprKind::Index { array, index } => Ok(LValue::Index { array, index: *index }),
            ExprKind::Index2 { image, x, y } => Ok(LValue::Index2 { image, x: *x, y: *y }),
            ExprKind::ThreadIdx(_) => Err(self.restriction(span, "`idx`/`idy` are read-only")),
            _ => Err(self.parse_err(span, "expression is not assignable")),
        }
    }

    // ---------------------------------------------------------------
    // Expressions
    // ---------------------------------------------------------------

    fn parse_expr(&mut self) -> PResult<Expr> {
        let e = self.parse_binary(1)?;
        if self.peek() == Some(&TokenKind::Question) {
            return Err(self.restriction(self.span(), "the conditional operator is not supported"));
        }
        Ok(e)
    }

    fn binop_at(&self) -> Option<BinOp> {
        Some(match self.peek()? {
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            TokenKind::Percent => BinOp::Rem,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::NotEq => BinOp::Ne,
            TokenKind::AndAnd => BinOp::And,
            TokenKind::OrOr => BinOp::Or,
            TokenKind::Amp => BinOp::BitAnd,
            TokenKind::Pipe => BinOp::BitOr,
            TokenKind::Caret => BinOp::BitXor,
            TokenKind::Shl => BinOp::Shl,
            TokenKind::Shr => BinOp::Shr,
            _ => return None,
        })
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.binop_at() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.span();
            self.pos += 1;
            let rhs = self.parse_binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Some(TokenKind::Minus) => Some(UnOp::Neg),
            Some(TokenKind::Not) => Some(UnOp::Not),
            Some(TokenKind::Tilde) => Some(UnOp::BitNot),
            Some(TokenKind::Plus) => {
                self.pos += 1;
                return self.parse_unary();
            }
            Some(TokenKind::Amp) => return Err(self.restriction(span, "taking addresses is not supported")),
            Some(TokenKind::Star) => return Err(self.restriction(span, "pointer dereference is not supported")),
            Some(TokenKind::PlusPlus) | Some(TokenKind::MinusMinus) => {
                return Err(self.restriction(span, "increments are only allowed as statements"))
            }
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(inner)), span));
        }
        // Cast: `(` type `)` unary
        if self.peek() == Some(&TokenKind::LParen) {
            if let Some(TokenKind::Ident(s)) = self.peek_at(1) {
                if is_type_name(s) {
                    self.pos += 1;
                    let ty = self.parse_type()?;
                    self.expect(TokenKind::RParen, "`)`")?;
                    let inner = self.parse_unary()?;
                    return Ok(Expr::new(ExprKind::Cast(ty, Box::new(inner)), span));
                }
            }
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let span = self.span();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected(&["expression"]));
        };
        let e = match tok {
            TokenKind::Int { value, unsigned } => {
                self.pos += 1;
                let lit = Expr::new(ExprKind::Int(value), span);
                if unsigned || value > i32::MAX as i64 {
                    Expr::new(ExprKind::Cast(ScalarType::Uint, Box::new(lit)), span)
                } else {
                    lit
                }
            }
            TokenKind::Float(v) => {
                self.pos += 1;
                Expr::new(ExprKind::Float(v), span)
            }
            TokenKind::LParen => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                e
            }
            TokenKind::Ident(name) => {
                if is_keyword(&name) {
                    return Err(self.unexpected(&["expression"]));
                }
                self.pos += 1;
                if self.peek() == Some(&TokenKind::LParen) {
                    return self.parse_call(name, span);
                }
                match name.as_str() {
                    "idx" => Expr::new(ExprKind::ThreadIdx(Axis::X), span),
                    "idy" => Expr::new(ExprKind::ThreadIdx(Axis::Y), span),
                    _ => {
                        self.resolve(&name, span)?;
                        Expr::new(ExprKind::Var(name), span)
                    }
                }
            }
            _ => return Err(self.unexpected(&["expression"])),
        };

        if self.peek() != Some(&TokenKind::LBracket) {
            if self.peek() == Some(&TokenKind::Dot) {
                return Err(self.restriction(self.span(), "member access is not supported"));
            }
            return Ok(e);
        }
        let base = match &e.kind {
            ExprKind::Var(n) => n.clone(),
            ExprKind::ThreadIdx(Axis::X) => "idx".to_string(),
            ExprKind::ThreadIdx(Axis::Y) => "idy".to_string(),
            _ => return Err(self.restriction(span, "only named arrays and images can be indexed")),
        };
        let mut indices = Vec::new();
        while self.eat(&TokenKind::LBracket) {
            indices.push(self.parse_expr()?);
            self.expect(TokenKind::RBracket, "`]`")?;
        }
        let mut it = indices.into_iter();
        match (it.next(), it.next(), it.next()) {
            (Some(i), None, None) => Ok(Expr::new(ExprKind::Index { array: base, index: Box::new(i) }, span)),
            (Some(x), Some(y), None) => {
                Ok(Expr::new(ExprKind::Index2 { image: base, x: Box::new(x), y: Box::new(y) }, span))
            }
            _ => Err(self.restriction(span, "only 1D arrays and 2D images are supported")),
        }
    }

    fn parse_call(&mut self, name: String, span: Span) -> PResult<Expr> {
        let Some(builtin) = Builtin::from_name(&name) else {
            return Err(self.restriction(span, format!("call to `{name}`: only builtin functions may be called")));
        };
        self.expect(TokenKind::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek() != Some(&TokenKind::RParen) {
            loop {
                args.push(self.parse_expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "`)`")?;
        if args.len() != builtin.arity() {
            return Err(self.parse_err(
                span,
                format!("`{name}` takes {} argument(s), {} given", builtin.arity(), args.len()),
            ));
        }
        Ok(Expr::new(ExprKind::Call(builtin, args), span))
    }

    // ---------------------------------------------------------------
    // Pragmas
    // ---------------------------------------------------------------

    fn parse_pragma(&self, tok: &Token) -> PResult<Pragma> {
        let span = tok.span;
        let text = match &tok.kind {
            TokenKind::Pragma(t) => t,
            TokenKind::Directive(d) => {
                return Err(self.restriction(span, format!("preprocessor directive `#{d}` is not supported")))
            }
            _ => unreachable!("only directive tokens are collected as pragmas"),
        };
        let toks = tokenize(text).map_err(|e| e.relocate(span))?;
        let mut p = Parser {
            toks: toks.into_iter().map(|t| Token { kind: t.kind, span }).collect(),
            pos: 0,
            scopes: Vec::new(),
            params: Vec::new(),
            loop_vars: Vec::new(),
            next_loop: 1,
            eof_span: span,
        };
        if !p.is_ident("imcl") {
            return Err(self.parse_err(span, format!("unknown pragma `{text}`")));
        }
        p.pos += 1;
        let kind_name = match p.peek_ident() {
            Some(k) => k.to_string(),
            None => return Err(p.unexpected(&["pragma kind"])),
        };
        p.pos += 1;
        p.expect(TokenKind::LParen, "`(`")?;
        let kind = match kind_name.as_str() {
            "grid" => match p.peek() {
                Some(TokenKind::Int { .. }) => {
                    let width = p.positive_int()?;
                    p.expect(TokenKind::Comma, "`,`")?;
                    let height = p.positive_int()?;
                    PragmaKind::Grid(GridTarget::Literal { width, height })
                }
                _ => {
                    let (name, _) = p.expect_ident("image name or grid size")?;
                    PragmaKind::Grid(GridTarget::Image(name))
                }
            },
            "boundary" => {
                let (image, _) = p.expect_ident("image name")?;
                p.expect(TokenKind::Comma, "`,`")?;
                let mode = match p.peek_ident() {
                    Some("clamped") => {
                        p.pos += 1;
                        BoundaryMode::Clamped
                    }
                    Some("constant") => {
                        p.pos += 1;
                        p.expect(TokenKind::LParen, "`(`")?;
                        let neg = p.eat(&TokenKind::Minus);
                        let v = match p.bump().map(|t| t.kind) {
                            Some(TokenKind::Int { value, .. }) => value as f64,
                            Some(TokenKind::Float(v)) => v as f64,
                            _ => return Err(self.parse_err(span, "expected a numeric boundary constant")),
                        };
                        p.expect(TokenKind::RParen, "`)`")?;
                        BoundaryMode::Constant(if neg { -v } else { v })
                    }
                    _ => return Err(p.unexpected(&["`clamped`", "`constant(<value>)`"])),
                };
                PragmaKind::Boundary { image, mode }
            }
            "maxsize" => {
                let (array, _) = p.expect_ident("array name")?;
                p.expect(TokenKind::Comma, "`,`")?;
                let bytes = p.positive_int()? as u64;
                PragmaKind::MaxSize { array, bytes }
            }
            "force" => {
                let (mut param, _) = p.expect_ident("tuning parameter")?;
                if p.eat(&TokenKind::Dot) {
                    let (rest, _) = p.expect_ident("tuning parameter")?;
                    param = format!("{param}.{rest}");
                }
                p.expect(TokenKind::Comma, "`,`")?;
                let on = match p.peek_ident() {
                    Some("on") => true,
                    Some("off") => false,
                    _ => return Err(p.unexpected(&["`on`", "`off`"])),
                };
                p.pos += 1;
                PragmaKind::Force { param, on }
            }
            other => return Err(self.parse_err(span, format!("unknown pragma kind `{other}`"))),
        };
        p.expect(TokenKind::RParen, "`)`")?;
        if p.peek().is_some() {
            return Err(p.unexpected(&["end of pragma"]));
        }
        Ok(Pragma { kind, span })
    }

    fn positive_int(&mut self) -> PResult<u32> {
        match self.peek() {
            Some(TokenKind::Int { value, .. }) if *value > 0 && *value <= u32::MAX as i64 => {
                let v = *value as u32;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.unexpected(&["positive integer"])),
        }
    }
}

fn validate_pragmas(k: &KernelAst) -> PResult<()> {
    let err = |span: Span, message: String| FrontendError::Parse { span, message, expected: Vec::new() };
    let mut grid_seen = false;
    let mut boundary_seen: Vec<&str> = Vec::new();
    let loop_count = k.loops().len() as u32;
    for p in &k.pragmas {
        match &p.kind {
            PragmaKind::Grid(target) => {
                if grid_seen {
                    return Err(err(p.span, "more than one grid pragma".into()));
                }
                grid_seen = true;
                if let GridTarget::Image(name) = target {
                    match k.param(name) {
                        None => return Err(err(p.span, format!("grid pragma names unknown parameter `{name}`"))),
                        Some(par) if !par.kind.is_image() => {
                            return Err(err(p.span, format!("grid pragma target `{name}` is not an image")))
                        }
                        _ => {}
                    }
                }
            }
            PragmaKind::Boundary { image, .. } => {
                match k.param(image) {
                    None => return Err(err(p.span, format!("boundary pragma names unknown parameter `{image}`"))),
                    Some(par) if !par.kind.is_image() => {
                        return Err(err(p.span, format!("boundary pragma target `{image}` is not an image")))
                    }
                    _ => {}
                }
                if boundary_seen.contains(&image.as_str()) {
                    return Err(err(p.span, format!("duplicate boundary pragma for `{image}`")));
                }
                boundary_seen.push(image);
            }
            PragmaKind::MaxSize { array, .. } => match k.param(array) {
                None => return Err(err(p.span, format!("maxsize pragma names unknown parameter `{array}`"))),
                Some(par) if !par.kind.is_buffer() => {
                    return Err(err(p.span, format!("maxsize pragma target `{array}` is not an array")))
                }
                _ => {}
            },
            PragmaKind::Force { param, .. } => {
                let ok = match param.split_once('.') {
                    None => param == "interleaved",
                    Some(("imageMem" | "localMem", name)) => k.param(name).is_some_and(|p| p.kind.is_image()),
                    Some(("constantMem", name)) => k.param(name).is_some_and(|p| p.kind.is_buffer()),
                    Some(("unroll", l)) => l
                        .strip_prefix('L')
                        .and_then(|n| n.parse::<u32>().ok())
                        .is_some_and(|n| n >= 1 && n <= loop_count),
                    _ => false,
                };
                if !ok {
                    return Err(err(p.span, format!("force pragma names unknown tuning parameter `{param}`")));
                }
            }
        }
    }
    Ok(())
}

/// Parse a token stream into a kernel.
pub fn parse(tokens: Vec<Token>) -> Result<KernelAst, FrontendError> {
    let eof_span = tokens.last().map(|t| t.span).unwrap_or(Span::new(1, 1));
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        scopes: Vec::new(),
        params: Vec::new(),
        loop_vars: Vec::new(),
        next_loop: 1,
        eof_span,
    };
    p.parse_kernel()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn parse_src(src: &str) -> Result<KernelAst, FrontendError> {
        parse(tokenize(src)?)
    }

    #[test]
    fn listing_blur() {
        let k = parse_src(corpus::BLUR).unwrap();
        assert_eq!(k.name, "blur");
        assert_eq!(k.params.len(), 2);
        assert_eq!(k.params[0].name, "in");
        assert_eq!(k.params[0].kind, ParamKind::Image(ScalarType::Float));
        assert_eq!(k.params[1].kind, ParamKind::Image(ScalarType::Float));
        assert_eq!(k.grid_target(), Some(&GridTarget::Image("in".into())));
        let loops = k.loops();
        assert_eq!(loops.len(), 2);
        assert_eq!(loops[0].id, LoopId(1));
        assert_eq!(loops[1].var, "j");
    }

    #[test]
    fn two_functions_is_a_restriction() {
        let src = "void a(Image<float> x) { x[idx][idy] = 1.0; }\nvoid b(Image<float> y) { }";
        assert!(matches!(parse_src(src), Err(FrontendError::Restriction { .. })));
    }

    #[test]
    fn grid_must_name_a_parameter() {
        let src = "#pragma imcl grid(bogus)\nvoid k(Image<float> in) { }";
        match parse_src(src) {
            Err(FrontendError::Parse { message, .. }) => assert!(message.contains("bogus")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn while_loops_rejected() {
        let src = "void k(Image<float> in) { int i = 0; while (i < 3) { i++; } }";
        assert!(matches!(parse_src(src), Err(FrontendError::Restriction { .. })));
    }

    #[test]
    fn unknown_pragma_kind_is_an_error() {
        let src = "#pragma imcl vectorize(in)\nvoid k(Image<float> in) { }";
        assert!(matches!(parse_src(src), Err(FrontendError::Parse { .. })));
        let src = "#pragma unroll\nvoid k(Image<float> in) { }";
        assert!(matches!(parse_src(src), Err(FrontendError::Parse { .. })));
    }

    #[test]
    fn pragma_forms() {
        let src = "#pragma imcl grid(512, 256)\n#pragma imcl boundary(a, constant(-1.5))\n\
                   #pragma imcl boundary(b, clamped)\n#pragma imcl maxsize(f, 100)\n\
                   #pragma imcl force(localMem.a, off)\n\
                   void k(Image<float> a, Image<uchar> b, float *f) { }";
        let k = parse_src(src).unwrap();
        assert_eq!(k.grid_target(), Some(&GridTarget::Literal { width: 512, height: 256 }));
        assert_eq!(k.boundary("a"), BoundaryMode::Constant(-1.5));
        assert_eq!(k.boundary("b"), BoundaryMode::Clamped);
        assert_eq!(k.max_size("f"), Some(100));
        assert!(k.pragmas.iter().any(|p| p.kind == PragmaKind::Force { param: "localMem.a".into(), on: false }));
    }

    #[test]
    fn grid_literal_must_be_positive() {
        assert!(parse_src("#pragma imcl grid(0, 4)\nvoid k() { }").is_err());
    }

    #[test]
    fn undeclared_identifier() {
        let err = parse_src("void k(Image<float> o) { o[idx][idy] = q; }").unwrap_err();
        assert!(err.to_string().contains("`q`"), "{err}");
    }

    #[test]
    fn shadowing_and_reserved_names() {
        assert!(parse_src("void k(float a) { int a = 1; }").is_err());
        assert!(parse_src("void k() { int W = 1; }").is_err());
        assert!(parse_src("void k() { int imcl_x = 1; }").is_err());
        // Sibling scopes may reuse a name.
        assert!(parse_src("void k() { for (int i = 0; i < 2; i++) { } for (int i = 0; i < 2; i++) { } }").is_ok());
    }

    #[test]
    fn loop_variable_is_immutable_in_body() {
        let src = "void k() { for (int i = 0; i < 4; i++) { i = 2; } }";
        assert!(matches!(parse_src(src), Err(FrontendError::Restriction { .. })));
    }

    #[test]
    fn loop_steps() {
        let k = parse_src("void k() { for (int i = 8; i > 0; i -= 2) { } for (int j = 0; j < 9; j += 3) { } }").unwrap();
        let loops = k.loops();
        assert_eq!(loops[0].step, -2);
        assert_eq!(loops[0].cmp, BinOp::Gt);
        assert_eq!(loops[1].step, 3);
    }

    #[test]
    fn pointer_and_call_restrictions() {
        assert!(matches!(parse_src("void k(float *a) { float b = *a; }"), Err(FrontendError::Restriction { .. })));
        assert!(matches!(
            parse_src("void k(float *a) { a[0] = helper(1.0); }"),
            Err(FrontendError::Restriction { .. })
        ));
        assert!(matches!(
            parse_src("void k(Image<float> a) { a[idx][idy][0] = 1.0; }"),
            Err(FrontendError::Restriction { .. })
        ));
    }

    #[test]
    fn increments_desugar_to_compound_assignment() {
        let k = parse_src("void k() { int c = 0; c++; --c; }").unwrap();
        assert!(matches!(k.body.stmts[1].kind, StmtKind::Assign { op: AssignOp::Add, .. }));
        assert!(matches!(k.body.stmts[2].kind, StmtKind::Assign { op: AssignOp::Sub, .. }));
    }
}
