//! Recursive-descent parser for condition expressions, script bodies, and
//! binding sources.

use std::fmt;

use thiserror::Error;

use crate::ir::value::parse_u256;
use crate::ir::{Address, BinaryOp, BindingSource, Expr, Statement, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at offset {offset} (expected {})", .expected.join(", "))]
pub struct ConditionParseError {
    /// Byte offset into the parsed text.
    pub offset: usize,
    pub expected: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(String),
    Ident(String),
    Str(String),
    Op(&'static str),
    LParen,
    RParen,
    Semi,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(s) => write!(f, "integer `{s}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Str(_) => f.write_str("string literal"),
            Tok::Op(o) => write!(f, "`{o}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
    newline_before: bool,
}

const OPERATORS: [&str; 17] =
    ["==", "!=", "<=", ">=", "&&", "||", ":=", "<", ">", "+", "-", "*", "/", "!", "=", "&", "|"];

fn lex(src: &str) -> Result<Vec<Token>, ConditionParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut newline = false;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            newline = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            Tok::Int(src[start..i].to_string())
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return Err(ConditionParseError {
                        offset: start,
                        expected: vec!["`\"`".into()],
                        message: "unterminated string literal".into(),
                    });
                };
                i += ch.len_utf8();
                match ch {
                    '"' => break,
                    '\\' => {
                        let esc = src[i..].chars().next();
                        i += esc.map_or(0, char::len_utf8);
                        match esc {
                            Some('n') => s.push('\n'),
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            _ => {
                                return Err(ConditionParseError {
                                    offset: i - 1,
                                    expected: vec!["`\\n`".into(), "`\\\"`".into(), "`\\\\`".into()],
                                    message: "invalid escape".into(),
                                })
                            }
                        }
                    }
                    ch => s.push(ch),
                }
            }
            Tok::Str(s)
        } else if c == b'(' {
            i += 1;
            Tok::LParen
        } else if c == b')' {
            i += 1;
            Tok::RParen
        } else if c == b';' {
            i += 1;
            Tok::Semi
        } else if let Some(op) = OPERATORS.iter().find(|op| src[i..].starts_with(**op)) {
            if *op == "&" || *op == "|" {
                return Err(ConditionParseError {
                    offset: i,
                    expected: vec![format!("`{op}{op}`")],
                    message: format!("unsupported operator `{op}`"),
                });
            }
            i += op.len();
            Tok::Op(*op)
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ConditionParseError {
                offset: i,
                expected: vec!["expression".into()],
                message: format!("unexpected character `{ch}`"),
            });
        };
        out.push(Token { tok, offset: start, newline_before: newline });
        newline = false;
    }
    out.push(Token { tok: Tok::Eof, offset: src.len(), newline_before: newline });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ConditionParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ConditionParseError> {
        let t = self.peek();
        Err(ConditionParseError {
            offset: t.offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            message: format!("unexpected {}", t.tok),
        })
    }

    fn binary_op(&self, level: u8) -> Option<BinaryOp> {
        let op = match &self.peek().tok {
            Tok::Op(o) => match *o {
                "||" => BinaryOp::Or,
                "&&" => BinaryOp::And,
                "==" => BinaryOp::Eq,
                "!=" => BinaryOp::Ne,
                "<" => BinaryOp::Lt,
                "<=" => BinaryOp::Le,
                ">" => BinaryOp::Gt,
                ">=" => BinaryOp::Ge,
                "+" => BinaryOp::Add,
                "-" => BinaryOp::Sub,
                "*" => BinaryOp::Mul,
                "/" => BinaryOp::Div,
                _ => return None,
            },
            Tok::Ident(w) if w == "and" => BinaryOp::And,
            Tok::Ident(w) if w == "or" => BinaryOp::Or,
            _ => return None,
        };
        (op.precedence() == level).then_some(op)
    }

    fn expr(&mut self) -> Result<Expr, ConditionParseError> {
        self.level(1)
    }

    fn level(&mut self, level: u8) -> Result<Expr, ConditionParseError> {
        if level > 6 {
            return self.unary();
        }
        let mut lhs = self.level(level + 1)?;
        while let Some(op) = self.binary_op(level) {
            self.bump();
            let rhs = self.level(level + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ConditionParseError> {
        match &self.peek().tok {
            Tok::Op("-") => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Op("!") => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?)))
            }
            Tok::Ident(w) if w == "not" => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ConditionParseError> {
        const EXPECTED: [&str; 6] = ["integer", "identifier", "`true`", "`false`", "string", "`(`"];
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(text) => {
                self.bump();
                literal(&text, t.offset)
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.bump();
                Ok(Expr::Bool(w == "true"))
            }
            Tok::Ident(w) if !matches!(w.as_str(), "and" | "or" | "not") => {
                self.bump();
                Ok(Expr::Var(w))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if self.peek().tok != Tok::RParen {
                    return self.fail(&["`)`", "operator"]);
                }
                self.bump();
                Ok(e)
            }
            _ => self.fail(&EXPECTED),
        }
    }

    fn expect_end(&self) -> Result<(), ConditionParseError> {
        if self.peek().tok == Tok::Eof {
            Ok(())
        } else {
            self.fail(&["operator", "end of input"])
        }
    }
}

fn literal(text: &str, offset: usize) -> Result<Expr, ConditionParseError> {
    let bad = |msg: &str| ConditionParseError {
        offset,
        expected: vec!["integer".into(), "address".into()],
        message: format!("{msg} `{text}`"),
    };
    if let Some(hex) = text.strip_prefix("0x") {
        if hex.len() == 40 {
            return text.parse::<Address>().map(Expr::Addr).map_err(|_| bad("malformed address"));
        }
    }
    parse_u256(text).map(Expr::Int).ok_or_else(|| bad("malformed integer literal"))
}

/// Parses a condition expression.
pub fn parse_condition(text: &str) -> Result<Expr, ConditionParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

/// Parses a script body: `target = expr` statements separated by `;` or
/// line breaks.
pub fn parse_script(text: &str) -> Result<Vec<Statement>, ConditionParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    loop {
        while p.peek().tok == Tok::Semi {
            p.bump();
        }
        let target = match &p.peek().tok {
            Tok::Eof => return Ok(out),
            Tok::Ident(name) => name.clone(),
            _ => return p.fail(&["identifier"]),
        };
        p.bump();
        if !matches!(p.peek().tok, Tok::Op("=") | Tok::Op(":=")) {
            return p.fail(&["`=`"]);
        }
        p.bump();
        let value = p.expr()?;
        out.push(Statement { target, value });
        let next = p.peek();
        if !(next.tok == Tok::Semi || next.tok == Tok::Eof || next.newline_before) {
            return p.fail(&["operator", "`;`", "line break"]);
        }
    }
}

/// Parses the `source` of an input binding: `processAddress`, a variable
/// name, or a literal constant.
pub fn parse_binding_source(text: &str) -> Result<BindingSource, ConditionParseError> {
    let t = text.trim();
    if t == "processAddress" {
        return Ok(BindingSource::ProcessAddress);
    }
    match parse_condition(t)? {
        Expr::Var(name) => Ok(BindingSource::Variable(name)),
        e if is_constant(&e) => Ok(BindingSource::Constant(e)),
        _ => Err(ConditionParseError {
            offset: 0,
            expected: vec!["variable".into(), "`processAddress`".into(), "literal".into()],
            message: format!("binding source `{t}` is not a name or literal"),
        }),
    }
}

fn is_constant(e: &Expr) -> bool {
    match e {
        Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Addr(_) => true,
        Expr::Unary(UnaryOp::Neg, inner) => matches!(**inner, Expr::Int(_)),
        _ => false,
    }
}

/// Textual form of a binding source, inverse of [`parse_binding_source`].
pub fn render_binding_source(src: &BindingSource) -> String {
    match src {
        BindingSource::ProcessAddress => "processAddress".into(),
        BindingSource::Variable(v) => v.clone(),
        BindingSource::Constant(Expr::Unary(UnaryOp::Neg, inner)) => format!("-{inner}"),
        BindingSource::Constant(e) => e.to_string(),
    }
}
