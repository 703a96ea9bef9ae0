use super::ast::Span;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int { value: i64, unsigned: bool },
    Float(f32),
    /// `#pragma <rest of line>`; the payload is everything after `#pragma`.
    Pragma(String),
    /// Any other preprocessor line.
    Directive(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semicolon,
    Comma,
    Question,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    PlusPlus,
    MinusMinus,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,
    Not,
    Amp,
    Pipe,
    Caret,
    Tilde,
    Shl,
    Shr,
    Dot,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int { value, .. } => format!("integer `{value}`"),
            TokenKind::Float(v) => format!("float `{v}`"),
            TokenKind::Pragma(_) => "pragma".to_string(),
            TokenKind::Directive(_) => "preprocessor directive".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        use TokenKind::*;
        match self {
            LParen => "(",
            RParen => ")",
            LBracket => "[",
            RBracket => "]",
            LBrace => "{",
            RBrace => "}",
            Semicolon => ";",
            Comma => ",",
            Question => "?",
            Colon => ":",
            Plus => "+",
            Minus => "-",
            Star => "*",
            Slash => "/",
            Percent => "%",
            PlusPlus => "++",
            MinusMinus => "--",
            Assign => "=",
            PlusAssign => "+=",
            MinusAssign => "-=",
            StarAssign => "*=",
            SlashAssign => "/=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            EqEq => "==",
            NotEq => "!=",
            AndAnd => "&&",
            OrOr => "||",
            Not => "!",
            Amp => "&",
            Pipe => "|",
            Caret => "^",
            Tilde => "~",
            Shl => "<<",
            Shr => ">>",
            Dot => ".",
            Ident(_) | Int { .. } | Float(_) | Pragma(_) | Directive(_) => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    /// True until a non-blank character is seen on the current line.
    line_start: bool,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
            self.line_start = true;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn err(&self, span: Span, message: impl Into<String>) -> FrontendError {
        FrontendError::Lex { span, message: message.into() }
    }

    fn rest_of_line(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn skip_trivia(&mut self) -> Result<(), FrontendError> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    self.rest_of_line();
                }
                (Some('/'), Some('*')) => {
                    let start = self.span();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek_at(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.err(start, "unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self, span: Span) -> Result<TokenKind, FrontendError> {
        let start = self.pos;
        if self.peek() == Some('0') && matches!(self.peek_at(1), Some('x') | Some('X')) {
            self.bump();
            self.bump();
            let digits_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                self.bump();
            }
            let digits: String = self.chars[digits_start..self.pos].iter().collect();
            let value = i64::from_str_radix(&digits, 16)
                .map_err(|_| self.err(span, format!("malformed hex literal `0x{digits}`")))?;
            let unsigned = self.int_suffix();
            return Ok(TokenKind::Int { value, unsigned });
        }
        let mut is_float = false;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') {
            is_float = true;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let save = (self.pos, self.line, self.col);
            self.bump();
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.bump();
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                (self.pos, self.line, self.col) = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if is_float || matches!(self.peek(), Some('f') | Some('F')) {
            if matches!(self.peek(), Some('f') | Some('F')) {
                self.bump();
            }
            let value: f32 = text
                .parse()
                .map_err(|_| self.err(span, format!("malformed float literal `{text}`")))?;
            return Ok(TokenKind::Float(value));
        }
        let value: i64 = text
            .parse()
            .map_err(|_| self.err(span, format!("integer literal `{text}` out of range")))?;
        let unsigned = self.int_suffix();
        if value > u32::MAX as i64 {
            return Err(self.err(span, format!("integer literal `{text}` out of range")));
        }
        Ok(TokenKind::Int { value, unsigned })
    }

    fn int_suffix(&mut self) -> bool {
        if matches!(self.peek(), Some('u') | Some('U')) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, FrontendError> {
        self.skip_trivia()?;
        let span = self.span();
        let at_line_start = self.line_start;
        let Some(c) = self.peek() else { return Ok(None) };
        self.line_start = false;

        if c == '#' {
            if !at_line_start {
                return Err(self.err(span, "`#` must start a line"));
            }
            self.bump();
            let line = self.rest_of_line();
            let trimmed = line.trim_start();
            let kind = match trimmed.strip_prefix("pragma") {
                Some(rest) if rest.is_empty() || rest.starts_with(char::is_whitespace) => {
                    TokenKind::Pragma(rest.trim().to_string())
                }
                _ => TokenKind::Directive(trimmed.to_string()),
            };
            return Ok(Some(Token { kind, span }));
        }

        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            return Ok(Some(Token { kind: TokenKind::Ident(s), span }));
        }

        if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            let kind = self.number(span)?;
            if self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(self.err(self.span(), "invalid suffix on numeric literal"));
            }
            return Ok(Some(Token { kind, span }));
        }

        if c == '"' || c == '\'' {
            self.bump();
            while let Some(d) = self.bump() {
                if d == c {
                    return Err(self.err(span, "string and character literals are not supported"));
                }
                if d == '\n' {
                    break;
                }
            }
            return Err(self.err(span, "unterminated literal"));
        }

        let two = (c, self.peek_at(1));
        use TokenKind::*;
        let (kind, len) = match two {
            ('+', Some('+')) => (PlusPlus, 2),
            ('-', Some('-')) => (MinusMinus, 2),
            ('+', Some('=')) => (PlusAssign, 2),
            ('-', Some('=')) => (MinusAssign, 2),
            ('*', Some('=')) => (StarAssign, 2),
            ('/', Some('=')) => (SlashAssign, 2),
            ('<', Some('=')) => (Le, 2),
            ('>', Some('=')) => (Ge, 2),
            ('=', Some('=')) => (EqEq, 2),
            ('!', Some('=')) => (NotEq, 2),
            ('&', Some('&')) => (AndAnd, 2),
            ('|', Some('|')) => (OrOr, 2),
            ('<', Some('<')) => (Shl, 2),
            ('>', Some('>')) => (Shr, 2),
            ('(', _) => (LParen, 1),
            (')', _) => (RParen, 1),
            ('[', _) => (LBracket, 1),
            (']', _) => (RBracket, 1),
            ('{', _) => (LBrace, 1),
            ('}', _) => (RBrace, 1),
            (';', _) => (Semicolon, 1),
            (',', _) => (Comma, 1),
            ('?', _) => (Question, 1),
            (':', _) => (Colon, 1),
            ('+', _) => (Plus, 1),
            ('-', _) => (Minus, 1),
            ('*', _) => (Star, 1),
            ('/', _) => (Slash, 1),
            ('%', _) => (Percent, 1),
            ('=', _) => (Assign, 1),
            ('<', _) => (Lt, 1),
            ('>', _) => (Gt, 1),
            ('!', _) => (Not, 1),
            ('&', _) => (Amp, 1),
            ('|', _) => (Pipe, 1),
            ('^', _) => (Caret, 1),
            ('~', _) => (Tilde, 1),
            ('.', _) => (Dot, 1),
            _ => return Err(self.err(span, format!("illegal character `{c}`"))),
        };
        for _ in 0..len {
            self.bump();
        }
        Ok(Some(Token { kind, span }))
    }
}

/// Split source text into tokens. Pragma lines become single
/// [`TokenKind::Pragma`] tokens.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        line_start: true,
        _src: source,
    };
    let mut out = Vec::new();
    while let Some(t) = lx.next_token()? {
        out.push(t);
    }
    Ok(out)
}
