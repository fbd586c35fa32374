//! Recursive-descent parser.
//!
//! Precedence, loosest first: `+ -` (left), `* /` (left), unary minus,
//! `^` (right). The exponent of `^` may itself carry a unary minus.

use thiserror::Error;

use super::lexer::{LexError, Token};
use super::{BinOp, Expr, DEFAULT_MAX_DEPTH};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("empty expression")]
    Empty,
    #[error("unexpected token `{found}` at position {pos}")]
    Unexpected { pos: usize, found: String },
    #[error("unexpected end of input at position {pos}")]
    UnexpectedEnd { pos: usize },
    #[error("unclosed parenthesis opened at position {pos}")]
    UnclosedParen { pos: usize },
    #[error("expression deeper than {max} levels")]
    TooDeep { max: usize },
}

pub fn parse(tokens: &[Token]) -> Result<Expr, ParseError> {
    parse_with_depth(tokens, DEFAULT_MAX_DEPTH)
}

pub fn parse_with_depth(tokens: &[Token], max_depth: usize) -> Result<Expr, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        nesting: 0,
        // parentheses nest without adding tree depth, so the recursion guard
        // is looser than the tree limit
        max_nesting: 4 * max_depth + 16,
        max_depth,
    };
    let expr = parser.sum()?;
    if let Some(t) = parser.peek() {
        return Err(ParseError::Unexpected {
            pos: parser.pos,
            found: t.to_string(),
        });
    }
    if expr.depth() > max_depth {
        return Err(ParseError::TooDeep { max: max_depth });
    }
    Ok(expr.renumber_constants())
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    nesting: usize,
    max_nesting: usize,
    max_depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.nesting += 1;
        if self.nesting > self.max_nesting {
            return Err(ParseError::TooDeep {
                max: self.max_depth,
            });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.nesting -= 1;
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.product()?;
        while let Some(Token::Op(op @ (BinOp::Add | BinOp::Sub))) = self.peek() {
            self.pos += 1;
            let right = self.product()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        while let Some(Token::Op(op @ (BinOp::Mul | BinOp::Div))) = self.peek() {
            self.pos += 1;
            let right = self.unary()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Token::Op(BinOp::Sub)) = self.peek() {
            self.pos += 1;
            self.enter()?;
            let arg = self.unary();
            self.leave();
            return Ok(Expr::neg(arg?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Token::Op(BinOp::Pow)) = self.peek() {
            self.pos += 1;
            self.enter()?;
            // right-associative; the exponent takes the unary level
            let exponent = self.unary();
            self.leave();
            return Ok(Expr::binary(BinOp::Pow, base, exponent?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos;
        match self.bump() {
            None => Err(ParseError::UnexpectedEnd { pos }),
            Some(Token::Var(i)) => Ok(Expr::Var(i)),
            Some(Token::Const) => Ok(Expr::Const(0)),
            Some(Token::Int(v)) => Ok(Expr::Int(v)),
            Some(Token::LParen) => {
                let inner = self.group(pos)?;
                Ok(inner)
            }
            Some(Token::Func(func)) => {
                let open = self.pos;
                match self.bump() {
                    Some(Token::LParen) => Ok(Expr::unary(func, self.group(open)?)),
                    Some(t) => Err(ParseError::Unexpected {
                        pos: open,
                        found: t.to_string(),
                    }),
                    None => Err(ParseError::UnexpectedEnd { pos: open }),
                }
            }
            Some(t) => Err(ParseError::Unexpected {
                pos,
                found: t.to_string(),
            }),
        }
    }

    /// Parses the inside of a parenthesis whose `(` sits at `open`.
    fn group(&mut self, open: usize) -> Result<Expr, ParseError> {
        self.enter()?;
        let inner = self.sum();
        self.leave();
        let inner = match inner {
            Err(ParseError::UnexpectedEnd { .. }) => {
                return Err(ParseError::UnclosedParen { pos: open })
            }
            other => other?,
        };
        match self.bump() {
            Some(Token::RParen) => Ok(inner),
            None => Err(ParseError::UnclosedParen { pos: open }),
            Some(t) => Err(ParseError::Unexpected {
                pos: self.pos - 1,
                found: t.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{tokenize, Func, GENERIC_VAR};
    use super::*;

    fn p(s: &str) -> Result<Expr, ParseError> {
        parse(&tokenize(s)?)
    }

    fn x() -> Expr {
        Expr::Var(GENERIC_VAR)
    }

    #[test]
    fn taylor_term_precedence() {
        let expected = Expr::binary(
            BinOp::Sub,
            x(),
            Expr::binary(
                BinOp::Div,
                Expr::binary(BinOp::Pow, x(), Expr::Int(3)),
                Expr::Int(6),
            ),
        );
        assert_eq!(p("x - x^3/6").unwrap(), expected);
    }

    #[test]
    fn constant_slots_left_to_right() {
        let e = p("c + c*x").unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinOp::Add,
                Expr::Const(0),
                Expr::binary(BinOp::Mul, Expr::Const(1), x())
            )
        );
    }

    #[test]
    fn unclosed_parenthesis() {
        assert_eq!(p("(x").unwrap_err(), ParseError::UnclosedParen { pos: 0 });
        assert_eq!(p("sin(x+1").unwrap_err(), ParseError::UnclosedParen { pos: 1 });
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(p("").unwrap_err(), ParseError::Empty);
        assert!(matches!(p("x +").unwrap_err(), ParseError::UnexpectedEnd { pos: 2 }));
        assert!(matches!(p("x x").unwrap_err(), ParseError::Unexpected { pos: 1, .. }));
        assert!(matches!(p("sin x").unwrap_err(), ParseError::Unexpected { pos: 1, .. }));
        assert!(matches!(p(")").unwrap_err(), ParseError::Unexpected { pos: 0, .. }));
        assert!(matches!(p("x $").unwrap_err(), ParseError::Lex(_)));
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        assert_eq!(
            p("-x^2").unwrap(),
            Expr::neg(Expr::binary(BinOp::Pow, x(), Expr::Int(2)))
        );
        assert_eq!(
            p("2^3^x").unwrap(),
            Expr::binary(
                BinOp::Pow,
                Expr::Int(2),
                Expr::binary(BinOp::Pow, Expr::Int(3), x())
            )
        );
        assert_eq!(
            p("x^-x").unwrap(),
            Expr::binary(BinOp::Pow, x(), Expr::neg(x()))
        );
    }

    #[test]
    fn left_associativity() {
        assert_eq!(
            p("x-x-x").unwrap(),
            Expr::binary(BinOp::Sub, Expr::binary(BinOp::Sub, x(), x()), x())
        );
        assert_eq!(
            p("x/x*x").unwrap(),
            Expr::binary(BinOp::Mul, Expr::binary(BinOp::Div, x(), x()), x())
        );
        assert_eq!(p("log((x))").unwrap(), Expr::unary(Func::Log, x()));
    }

    #[test]
    fn depth_limit() {
        let deep = format!("{}x{}", "sin(".repeat(70), ")".repeat(70));
        assert_eq!(p(&deep).unwrap_err(), ParseError::TooDeep { max: 64 });
        let ok = format!("{}x{}", "sin(".repeat(63), ")".repeat(63));
        assert_eq!(p(&ok).unwrap().depth(), 64);
        let parens = format!("{}x{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(matches!(p(&parens).unwrap_err(), ParseError::TooDeep { .. }));
    }
}
