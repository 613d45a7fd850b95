//! Hand-rolled lexer for the `.rcml` surface syntax.

use crate::parser::{ParseDiagnostic, Severity};
use crate::span::SourceSpan;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    KwEnum,
    KwComponent,
    KwPort,
    KwIn,
    KwOut,
    KwVar,
    KwInstance,
    KwConnect,
    KwAutomaton,
    KwMonitor,
    KwState,
    KwInitial,
    KwBool,
    KwInt,
    KwTrue,
    KwFalse,
    KwNone,
    Underscore,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    DotDot,
    Arrow,
    Assign,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Plus,
    Minus,
    Slash,
    Eof,
}

impl TokenKind {
    /// Short human-readable name for diagnostics.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(v) => format!("integer `{v}`"),
            TokenKind::Eof => "end of file".to_string(),
            TokenKind::KwEnum => "`enum`".to_string(),
            TokenKind::KwComponent => "`component`".to_string(),
            TokenKind::KwPort => "`port`".to_string(),
            TokenKind::KwIn => "`in`".to_string(),
            TokenKind::KwOut => "`out`".to_string(),
            TokenKind::KwVar => "`var`".to_string(),
            TokenKind::KwInstance => "`instance`".to_string(),
            TokenKind::KwConnect => "`connect`".to_string(),
            TokenKind::KwAutomaton => "`automaton`".to_string(),
            TokenKind::KwMonitor => "`monitor`".to_string(),
            TokenKind::KwState => "`state`".to_string(),
            TokenKind::KwInitial => "`initial`".to_string(),
            TokenKind::KwBool => "`bool`".to_string(),
            TokenKind::KwInt => "`int`".to_string(),
            TokenKind::KwTrue => "`true`".to_string(),
            TokenKind::KwFalse => "`false`".to_string(),
            TokenKind::KwNone => "`none`".to_string(),
            TokenKind::Underscore => "`_`".to_string(),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::LBracket => "`[`".to_string(),
            TokenKind::RBracket => "`]`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Semi => "`;`".to_string(),
            TokenKind::Colon => "`:`".to_string(),
            TokenKind::Dot => "`.`".to_string(),
            TokenKind::DotDot => "`..`".to_string(),
            TokenKind::Arrow => "`->`".to_string(),
            TokenKind::Assign => "`=`".to_string(),
            TokenKind::EqEq => "`==`".to_string(),
            TokenKind::Ne => "`!=`".to_string(),
            TokenKind::Lt => "`<`".to_string(),
            TokenKind::Le => "`<=`".to_string(),
            TokenKind::Gt => "`>`".to_string(),
            TokenKind::Ge => "`>=`".to_string(),
            TokenKind::AndAnd => "`&&`".to_string(),
            TokenKind::OrOr => "`||`".to_string(),
            TokenKind::Bang => "`!`".to_string(),
            TokenKind::Plus => "`+`".to_string(),
            TokenKind::Minus => "`-`".to_string(),
            TokenKind::Slash => "`/`".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: &'a str,
}

/// Tokenizes `text`. Lexical errors are appended to `diags`; the offending
/// characters are skipped so parsing can continue.
pub fn tokenize(text: &str, file: &str, diags: &mut Vec<ParseDiagnostic>) -> Vec<Token> {
    let mut lx = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file,
    };
    let mut tokens = Vec::new();
    loop {
        lx.skip_trivia(diags);
        let (line, col) = (lx.line, lx.col);
        let Some(c) = lx.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                span: SourceSpan::new(file, line, col, line, col),
            });
            break;
        };
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            let word = lx.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
            keyword_or_ident(word)
        } else if c.is_ascii_digit() {
            let digits = lx.take_while(|c| c.is_ascii_digit());
            match digits.parse::<i64>() {
                Ok(v) => TokenKind::Int(v),
                Err(_) => {
                    diags.push(ParseDiagnostic {
                        severity: Severity::Error,
                        message: format!("integer literal `{digits}` out of range"),
                        span: lx.span_from(line, col),
                    });
                    TokenKind::Int(0)
                }
            }
        } else {
            match lx.punct() {
                Some(kind) => kind,
                None => {
                    lx.bump();
                    diags.push(ParseDiagnostic {
                        severity: Severity::Error,
                        message: format!("unexpected character `{c}`"),
                        span: lx.span_from(line, col),
                    });
                    continue;
                }
            }
        };
        tokens.push(Token {
            kind,
            span: lx.span_from(line, col),
        });
    }
    tokens
}

fn keyword_or_ident(word: String) -> TokenKind {
    match word.as_str() {
        "enum" => TokenKind::KwEnum,
        "component" => TokenKind::KwComponent,
        "port" => TokenKind::KwPort,
        "in" => TokenKind::KwIn,
        "out" => TokenKind::KwOut,
        "var" => TokenKind::KwVar,
        "instance" => TokenKind::KwInstance,
        "connect" => TokenKind::KwConnect,
        "automaton" => TokenKind::KwAutomaton,
        "monitor" => TokenKind::KwMonitor,
        "state" => TokenKind::KwState,
        "initial" => TokenKind::KwInitial,
        "bool" => TokenKind::KwBool,
        "int" => TokenKind::KwInt,
        "true" => TokenKind::KwTrue,
        "false" => TokenKind::KwFalse,
        "none" => TokenKind::KwNone,
        "_" => TokenKind::Underscore,
        _ => TokenKind::Ident(word),
    }
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, line: u32, col: u32) -> SourceSpan {
        // End column points one past the last character, clamped to >= start.
        let end_col = if self.line == line && self.col > col {
            self.col - 1
        } else {
            self.col.max(1)
        };
        SourceSpan::new(self.file, line, col, self.line, end_col)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn skip_trivia(&mut self, diags: &mut Vec<ParseDiagnostic>) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek2() == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('/') if self.peek2() == Some('*') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    let mut closed = false;
                    while let Some(c) = self.bump() {
                        if c == '*' && self.peek() == Some('/') {
                            self.bump();
                            closed = true;
                            break;
                        }
                    }
                    if !closed {
                        diags.push(ParseDiagnostic {
                            severity: Severity::Error,
                            message: "unterminated block comment".to_string(),
                            span: self.span_from(line, col),
                        });
                    }
                }
                _ => break,
            }
        }
    }

    fn punct(&mut self) -> Option<TokenKind> {
        let c = self.peek()?;
        let two = |lx: &mut Self, kind| {
            lx.bump();
            lx.bump();
            Some(kind)
        };
        match (c, self.peek2()) {
            ('-', Some('>')) => two(self, TokenKind::Arrow),
            ('=', Some('=')) => two(self, TokenKind::EqEq),
            ('!', Some('=')) => two(self, TokenKind::Ne),
            ('<', Some('=')) => two(self, TokenKind::Le),
            ('>', Some('=')) => two(self, TokenKind::Ge),
            ('&', Some('&')) => two(self, TokenKind::AndAnd),
            ('|', Some('|')) => two(self, TokenKind::OrOr),
            ('.', Some('.')) => two(self, TokenKind::DotDot),
            _ => {
                let kind = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ',' => TokenKind::Comma,
                    ';' => TokenKind::Semi,
                    ':' => TokenKind::Colon,
                    '.' => TokenKind::Dot,
                    '=' => TokenKind::Assign,
                    '<' => TokenKind::Lt,
                    '>' => TokenKind::Gt,
                    '!' => TokenKind::Bang,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '/' => TokenKind::Slash,
                    _ => return None,
                };
                self.bump();
                Some(kind)
            }
        }
    }
}
