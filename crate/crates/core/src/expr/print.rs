use std::fmt;

use super::{BinOp, Expr, GENERIC_VAR};

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_SUM,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_PRODUCT,
        Expr::Binary(BinOp::Pow, ..) => PREC_POW,
        Expr::Neg(_) => PREC_NEG,
        Expr::Var(_) | Expr::Const(_) | Expr::Int(_) | Expr::Unary(..) => PREC_ATOM,
    }
}

fn write_child(e: &Expr, parens: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_expr(e, f)?;
        f.write_str(")")
    } else {
        write_expr(e, f)
    }
}

pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Var(GENERIC_VAR) => f.write_str("x"),
        Expr::Var(i) => write!(f, "x{i}"),
        Expr::Const(_) => f.write_str("C"),
        Expr::Int(v) => write!(f, "{v}"),
        Expr::Unary(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(arg, f)?;
            f.write_str(")")
        }
        Expr::Neg(arg) => {
            f.write_str("-")?;
            write_child(arg, precedence(arg) < PREC_NEG, f)
        }
        Expr::Binary(BinOp::Pow, base, exponent) => {
            write_child(base, precedence(base) <= PREC_POW, f)?;
            f.write_str("^")?;
            write_child(exponent, precedence(exponent) < PREC_NEG, f)
        }
        Expr::Binary(op, left, right) => {
            let p = precedence(e);
            write_child(left, precedence(left) < p, f)?;
            f.write_str(op.symbol())?;
            write_child(right, precedence(right) <= p, f)
        }
    }
}
