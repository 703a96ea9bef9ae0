//! Syntactic checker for the OpenCL C subset produced by kernel emission.
//!
//! Not a compiler: it tokenizes, parses declarations, statements and
//! expressions with C precedence, and rejects identifiers that are neither
//! declared in scope nor known OpenCL builtins.

use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

const PUNCTS: [&str; 48] = [
    "<<=", ">>=", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<=", ">=", "==", "!=", "&&", "||",
    "<<", ">>", "->", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^", "?", ":", ";", ",", ".",
    "(", ")", "[", "]", "{", "}", "#", "'", "\"",
];

const TYPES: &[&str] = &[
    "void", "float", "int", "uint", "uchar", "char", "short", "ushort", "long", "ulong", "bool", "size_t",
    "sampler_t", "image2d_t", "float2", "float4", "int2", "int4", "uint2", "uint4",
];

const QUALIFIERS: &[&str] = &[
    "__global", "__constant", "__local", "__private", "global", "constant", "local", "private", "read_only",
    "write_only", "__read_only", "__write_only", "const", "unsigned", "restrict",
];

const BUILTINS: &[&str] = &[
    "get_global_id", "get_local_id", "get_group_id", "get_global_size", "get_local_size", "get_num_groups",
    "barrier", "CLK_LOCAL_MEM_FENCE", "CLK_GLOBAL_MEM_FENCE", "CLK_NORMALIZED_COORDS_FALSE",
    "CLK_ADDRESS_CLAMP_TO_EDGE", "CLK_ADDRESS_CLAMP", "CLK_FILTER_NEAREST", "read_imagef", "read_imagei",
    "read_imageui", "write_imagef", "write_imagei", "write_imageui", "sqrt", "fabs", "exp", "min", "max", "fmin",
    "fmax", "clamp", "abs", "NAN", "INFINITY",
];

fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut out = Vec::new();
    let err = |line, col, m: String| SyntaxError { line, col, message: m };
    let mut at_line_start = true;
    while i < chars.len() {
        let c = chars[i];
        let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };
        if c == '\n' {
            at_line_start = true;
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' && at_line_start {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        at_line_start = false;
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return Err(err(l0, c0, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: l0, col: c0 });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_alphanumeric() || d == '.' || exp_sign {
                    advance(&mut i, &mut line, &mut col, 1);
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            if !valid_number(&text) {
                return Err(err(l0, c0, format!("malformed number `{text}`")));
            }
            out.push(Token { tok: Tok::Number(text), line: l0, col: c0 });
            continue;
        }
        let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) if !matches!(*p, "#" | "'" | "\"") => {
                advance(&mut i, &mut line, &mut col, p.len());
                out.push(Token { tok: Tok::Punct(p), line: l0, col: c0 });
            }
            _ => return Err(err(l0, c0, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn valid_number(t: &str) -> bool {
    let body = t.trim_end_matches(['f', 'F', 'u', 'U', 'l', 'L']);
    if body.is_empty() {
        return false;
    }
    if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        return !hex.is_empty() && hex.chars().all(|c| c.is_ascii_hexdigit());
    }
    let is_float = body.contains(['.', 'e', 'E']);
    if t.ends_with(['f', 'F']) && !is_float {
        return false;
    }
    if is_float {
        body.parse::<f64>().is_ok()
    } else {
        body.chars().all(|c| c.is_ascii_digit())
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    scopes: Vec<HashSet<String>>,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn error<T>(&self, m: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(SyntaxError { line: t.line, col: t.col, message: m.into() })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", self.describe()))
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) | Tok::Number(s) => format!("`{s}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !TYPES.contains(&s.as_str()) && !QUALIFIERS.contains(&s.as_str()) && !is_keyword(&s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.error(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn starts_type(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if TYPES.contains(&s.as_str()) || QUALIFIERS.contains(&s.as_str()))
    }

    /// Qualifiers, a base type and pointer stars.
    fn type_spec(&mut self) -> PResult<()> {
        let mut base = false;
        loop {
            match self.peek().clone() {
                Tok::Ident(s) if QUALIFIERS.contains(&s.as_str()) => self.pos += 1,
                Tok::Ident(s) if TYPES.contains(&s.as_str()) && !base => {
                    self.pos += 1;
                    base = true;
                }
                _ => break,
            }
        }
        if !base {
            return self.error(format!("expected a type, found {}", self.describe()));
        }
        while self.eat("*") {
            while matches!(self.peek(), Tok::Ident(s) if QUALIFIERS.contains(&s.as_str())) {
                self.pos += 1;
            }
        }
        Ok(())
    }

    fn declare(&mut self, name: String) -> PResult<()> {
        if !self.scopes.last_mut().expect("scope").insert(name.clone()) {
            return self.error(format!("redeclaration of `{name}`"));
        }
        Ok(())
    }

    fn is_declared(&self, name: &str) -> bool {
        BUILTINS.contains(&name) || self.scopes.iter().any(|s| s.contains(name))
    }

    fn translation_unit(&mut self) -> PResult<usize> {
        let mut kernels = 0;
        while *self.peek() != Tok::Eof {
            if self.is_kw("__kernel") || self.is_kw("kernel") {
                self.pos += 1;
                self.kernel()?;
                kernels += 1;
            } else {
                self.declaration()?;
            }
        }
        Ok(kernels)
    }

    fn kernel(&mut self) -> PResult<()> {
        if !self.is_kw("void") {
            return self.error("kernel must return void");
        }
        self.pos += 1;
        let name = self.ident()?;
        self.declare(name)?;
        self.expect("(")?;
        self.scopes.push(HashSet::new());
        if !self.is_punct(")") {
            loop {
                self.type_spec()?;
                let p = self.ident()?;
                self.declare(p)?;
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.expect("{")?;
        self.block_rest()?;
        self.scopes.pop();
        Ok(())
    }

    /// Statements up to and including the closing brace, in a new scope.
    fn block_rest(&mut self) -> PResult<()> {
        self.scopes.push(HashSet::new());
        while !self.eat("}") {
            if *self.peek() == Tok::Eof {
                return self.error("unclosed `{`");
            }
            self.statement()?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn declaration(&mut self) -> PResult<()> {
        self.type_spec()?;
        loop {
            let name = self.ident()?;
            while self.eat("[") {
                self.expr()?;
                self.expect("]")?;
            }
            if self.eat("=") {
                self.assignment()?;
            }
            self.declare(name)?;
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")
    }

    fn statement(&mut self) -> PResult<()> {
        if self.eat("{") {
            return self.block_rest();
        }
        if self.eat(";") {
            return Ok(());
        }
        if self.is_kw("if") {
            self.pos += 1;
            self.expect("(")?;
            self.expr()?;
            self.expect(")")?;
            self.statement()?;
            if self.is_kw("else") {
                self.pos += 1;
                self.statement()?;
            }
            return Ok(());
        }
        if self.is_kw("for") {
            self.pos += 1;
            self.expect("(")?;
            self.scopes.push(HashSet::new());
            if self.starts_type() {
                self.declaration()?;
            } else {
                if !self.is_punct(";") {
                    self.expr()?;
                }
                self.expect(";")?;
            }
            if !self.is_punct(";") {
                self.expr()?;
            }
            self.expect(";")?;
            if !self.is_punct(")") {
                self.expr()?;
            }
            self.expect(")")?;
            self.statement()?;
            self.scopes.pop();
            return Ok(());
        }
        if self.is_kw("while") {
            self.pos += 1;
            self.expect("(")?;
            self.expr()?;
            self.expect(")")?;
            return self.statement();
        }
        if self.is_kw("return") {
            self.pos += 1;
            if !self.is_punct(";") {
                self.expr()?;
            }
            return self.expect(";");
        }
        if self.is_kw("break") || self.is_kw("continue") {
            self.pos += 1;
            return self.expect(";");
        }
        if self.starts_type() {
            return self.declaration();
        }
        self.expr()?;
        self.expect(";")
    }

    fn expr(&mut self) -> PResult<()> {
        self.assignment()?;
        while self.eat(",") {
            self.assignment()?;
        }
        Ok(())
    }

    fn assignment(&mut self) -> PResult<()> {
        self.conditional()?;
        const OPS: [&str; 11] = ["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];
        if OPS.iter().any(|o| self.is_punct(o)) {
            self.pos += 1;
            self.assignment()?;
        }
        Ok(())
    }

    fn conditional(&mut self) -> PResult<()> {
        self.binary(0)?;
        if self.eat("?") {
            self.expr()?;
            self.expect(":")?;
            self.conditional()?;
        }
        Ok(())
    }

    fn binary(&mut self, level: usize) -> PResult<()> {
        const LEVELS: [&[&str]; 10] = [
            &["||"],
            &["&&"],
            &["|"],
            &["^"],
            &["&"],
            &["==", "!="],
            &["<", ">", "<=", ">="],
            &["<<", ">>"],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        self.binary(level + 1)?;
        while LEVELS[level].iter().any(|o| self.is_punct(o)) {
            self.pos += 1;
            self.binary(level + 1)?;
        }
        Ok(())
    }

    fn paren_type_follows(&self) -> bool {
        matches!(self.peek_at(1), Tok::Ident(s) if TYPES.contains(&s.as_str()) || QUALIFIERS.contains(&s.as_str()))
    }

    fn unary(&mut self) -> PResult<()> {
        if ["-", "+", "!", "~", "++", "--", "*", "&"].iter().any(|o| self.is_punct(o)) {
            self.pos += 1;
            return self.unary();
        }
        if self.is_punct("(") && self.paren_type_follows() {
            self.pos += 1;
            self.type_spec()?;
            self.expect(")")?;
            // Vector literal `(int2)(a, b)` or a cast.
            if self.eat("(") {
                self.expr()?;
                self.expect(")")?;
                return self.postfix_ops();
            }
            return self.unary();
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<()> {
        match self.peek().clone() {
            Tok::Number(_) => self.pos += 1,
            Tok::Ident(s) => {
                let name = self.ident()?;
                if !self.is_declared(&name) {
                    self.pos -= 1;
                    return self.error(format!("use of undeclared identifier `{s}`"));
                }
            }
            Tok::Punct("(") => {
                self.pos += 1;
                self.expr()?;
                self.expect(")")?;
            }
            _ => return self.error(format!("expected expression, found {}", self.describe())),
        }
        self.postfix_ops()
    }

    fn postfix_ops(&mut self) -> PResult<()> {
        loop {
            if self.eat("[") {
                self.expr()?;
                self.expect("]")?;
            } else if self.eat("(") {
                if !self.eat(")") {
                    loop {
                        self.assignment()?;
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect(")")?;
                }
            } else if self.eat(".") || self.eat("->") {
                match self.peek() {
                    Tok::Ident(_) => self.pos += 1,
                    _ => return self.error("expected member name"),
                }
            } else if self.eat("++") || self.eat("--") {
            } else {
                return Ok(());
            }
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "if" | "else" | "for" | "while" | "do" | "return" | "break" | "continue" | "__kernel" | "kernel" | "switch"
            | "case" | "default" | "goto" | "struct" | "typedef" | "sizeof"
    )
}

/// Check that `src` is a syntactically well-formed OpenCL C translation unit
/// containing at least one kernel and only declared identifiers.
pub fn validate_opencl(src: &str) -> Result<(), SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, scopes: vec![HashSet::new()] };
    let kernels = p.translation_unit()?;
    if kernels == 0 {
        return Err(SyntaxError { line: 1, col: 1, message: "no __kernel function".into() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const OK: &str = "__constant sampler_t s = CLK_NORMALIZED_COORDS_FALSE | CLK_FILTER_NEAREST;\n\
        __kernel void k(__global float * a, read_only image2d_t img, int W, int H) {\n\
        __local float t[3][4];\n\
        int x = (int) get_global_id(0);\n\
        for (int i = 0; i < 3; i++) { t[i][0] = a[x + i * W] + 1.0f; }\n\
        barrier(CLK_LOCAL_MEM_FENCE);\n\
        float v = x < W ? read_imagef(img, s, (int2)(x, 0)).x : -1.5e-3f;\n\
        if (x < W && 0 < H) { a[x] = v; } else { a[0] += t[0][0]; }\n\
        }\n";

    #[test]
    fn accepts_well_formed_kernel() {
        validate_opencl(OK).unwrap();
    }

    #[test]
    fn rejects_broken_input() {
        let cases = [
            OK.replace("a[x] = v;", "a[x] = v"),
            OK.replace("int x = ", "int = "),
            OK.replace("a[x + i * W]", "a[x + i * Q]"),
            OK.replacen('}', "", 1),
            OK.replace("1.0f", "1f"),
            OK.replace("(int2)(x, 0)", "(int2)(x, 0"),
            OK.replace("__kernel", ""),
            OK.replace("float v", "float x"),
            OK.replace("x < W ?", "x < W @"),
        ];
        for c in &cases {
            assert!(validate_opencl(c).is_err(), "accepted:\n{c}");
        }
    }

    #[test]
    fn loop_variable_leaves_scope() {
        let src = "__kernel void k(__global int * a) { for (int i = 0; i < 2; i++) { a[i] = i; } a[0] = i; }";
        let e = validate_opencl(src).unwrap_err();
        assert!(e.message.contains("`i`"), "{e}");
    }
}
