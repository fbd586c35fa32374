//! Expression trees over variables, constant placeholders and the grammar's
//! operator vocabulary.
//!
//! Text form: `C` (or `c`) for a constant placeholder, `x` for the generic
//! variable, `x1`, `x2`, ... for concrete variables, integer literals,
//! `+ - * / ^`, and the functions `sin cos sqrt exp log`.

mod eval;
mod lexer;
mod parser;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub use eval::{EvalFailure, EvalLimits, DEFAULT_MAGNITUDE_CAP};
pub use lexer::{tokenize, LexError, Token};
pub use parser::{parse, parse_with_depth, ParseError};

/// Maximum tree depth accepted by the parser and the evaluator.
pub const DEFAULT_MAX_DEPTH: usize = 64;

/// Index of the generic variable `x`. Concrete variables `x<k>` use `k >= 1`.
pub const GENERIC_VAR: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
    Exp,
    Log,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Sqrt, Func::Exp, Func::Log];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// An immutable expression tree.
///
/// `Const` carries its slot index; slots are numbered `0..k` in left-to-right
/// leaf order (see [`Expr::renumber_constants`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(usize),
    Const(usize),
    Int(u64),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(Func, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn binary(op: BinOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary(op, Box::new(left), Box::new(right))
    }

    pub fn unary(func: Func, arg: Expr) -> Expr {
        Expr::Unary(func, Box::new(arg))
    }

    pub fn neg(arg: Expr) -> Expr {
        Expr::Neg(Box::new(arg))
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Var(_) | Expr::Const(_) | Expr::Int(_) => Vec::new(),
            Expr::Binary(_, l, r) => vec![l, r],
            Expr::Unary(_, a) | Expr::Neg(a) => vec![a],
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(Expr::node_count).sum::<usize>()
    }

    /// Depth of the tree; a single leaf has depth 1.
    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Expr::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn constant_count(&self) -> usize {
        match self {
            Expr::Const(_) => 1,
            _ => self
                .children()
                .into_iter()
                .map(Expr::constant_count)
                .sum(),
        }
    }

    /// Distinct variable indices; the generic `x` is reported as [`GENERIC_VAR`].
    pub fn free_variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        if let Expr::Var(i) = self {
            out.insert(*i);
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    /// Number of input dimensions needed to evaluate the expression. The
    /// generic `x` reads dimension one, `x<k>` reads dimension `k`.
    pub fn required_dimensions(&self) -> usize {
        self.free_variables()
            .into_iter()
            .map(|i| i.max(1))
            .max()
            .unwrap_or(0)
    }

    /// Reassigns constant slots `0..k` in left-to-right leaf order.
    pub fn renumber_constants(self) -> Expr {
        fn go(e: Expr, next: &mut usize) -> Expr {
            match e {
                Expr::Const(_) => {
                    let slot = *next;
                    *next += 1;
                    Expr::Const(slot)
                }
                Expr::Var(_) | Expr::Int(_) => e,
                Expr::Binary(op, l, r) => {
                    let l = go(*l, next);
                    let r = go(*r, next);
                    Expr::binary(op, l, r)
                }
                Expr::Unary(f, a) => Expr::unary(f, go(*a, next)),
                Expr::Neg(a) => Expr::neg(go(*a, next)),
            }
        }
        let mut next = 0;
        go(self, &mut next)
    }

    /// Rewrites every variable index through `f`.
    pub fn map_vars(self, f: &mut impl FnMut(usize) -> usize) -> Expr {
        match self {
            Expr::Var(i) => Expr::Var(f(i)),
            Expr::Const(_) | Expr::Int(_) => self,
            Expr::Binary(op, l, r) => {
                let l = l.map_vars(f);
                let r = r.map_vars(f);
                Expr::binary(op, l, r)
            }
            Expr::Unary(func, a) => Expr::unary(func, a.map_vars(f)),
            Expr::Neg(a) => Expr::neg(a.map_vars(f)),
        }
    }

    /// Canonical infix rendering with minimal parentheses.
    pub fn to_canonical_string(&self) -> String {
        self.to_string()
    }

    /// Evaluates with the default limits. `vars[k - 1]` is the value of `x<k>`;
    /// the generic `x` reads `vars[0]`.
    pub fn evaluate(&self, vars: &[f64], consts: &[f64]) -> Result<f64, EvalFailure> {
        self.evaluate_with(vars, consts, &EvalLimits::default())
    }

    pub fn evaluate_with(
        &self,
        vars: &[f64],
        consts: &[f64],
        limits: &EvalLimits,
    ) -> Result<f64, EvalFailure> {
        eval::evaluate(self, vars, consts, limits)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(self, f)
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Expr, ParseError> {
        parse(&tokenize(s)?)
    }
}

/// Reads the expression text format: one expression per line, blank lines and
/// lines starting with `#` skipped. Errors carry the 1-based line number.
pub fn parse_expression_lines(text: &str) -> Result<Vec<Expr>, (usize, ParseError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(n, l)| l.parse::<Expr>().map_err(|e| (n + 1, e)))
        .collect()
}
