use std::fmt;

use thiserror::Error;

use super::{BinOp, Func, GENERIC_VAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    /// `x` lexes as index 0, `x<k>` as index `k`.
    Var(usize),
    Const,
    Int(u64),
    Op(BinOp),
    Func(Func),
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Var(GENERIC_VAR) => f.write_str("x"),
            Token::Var(i) => write!(f, "x{i}"),
            Token::Const => f.write_str("C"),
            Token::Int(v) => write!(f, "{v}"),
            Token::Op(op) => f.write_str(op.symbol()),
            Token::Func(func) => f.write_str(func.name()),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at byte {offset}: {message}")]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

impl Token {
    /// Lexes a single lexeme such as `sin`, `x2`, `c` or `+`.
    pub fn from_lexeme(word: &str) -> Option<Token> {
        match word {
            "+" => return Some(Token::Op(BinOp::Add)),
            "-" => return Some(Token::Op(BinOp::Sub)),
            "*" => return Some(Token::Op(BinOp::Mul)),
            "/" => return Some(Token::Op(BinOp::Div)),
            "^" => return Some(Token::Op(BinOp::Pow)),
            "(" => return Some(Token::LParen),
            ")" => return Some(Token::RParen),
            "c" | "C" => return Some(Token::Const),
            "x" => return Some(Token::Var(GENERIC_VAR)),
            _ => {}
        }
        if let Some(func) = Func::from_name(word) {
            return Some(Token::Func(func));
        }
        if let Some(index) = word.strip_prefix('x') {
            if index.bytes().all(|b| b.is_ascii_digit()) && !index.starts_with('0') {
                return index.parse::<usize>().ok().map(Token::Var);
            }
            return None;
        }
        if !word.is_empty() && word.bytes().all(|b| b.is_ascii_digit()) {
            return word.parse::<u64>().ok().map(Token::Int);
        }
        None
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let b = bytes[pos];
        if b.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        if b.is_ascii_alphanumeric() {
            while pos < bytes.len() && bytes[pos].is_ascii_alphanumeric() {
                pos += 1;
            }
        } else if b.is_ascii() {
            pos += 1;
        } else {
            let ch = text[start..].chars().next().unwrap_or('?');
            return Err(LexError {
                offset: start,
                message: format!("unrecognized character {ch:?}"),
            });
        }
        let word = &text[start..pos];
        match Token::from_lexeme(word) {
            Some(t) => tokens.push(t),
            None => {
                return Err(LexError {
                    offset: start,
                    message: format!("unrecognized input {word:?}"),
                });
            }
        }
    }
    Ok(tokens)
}
