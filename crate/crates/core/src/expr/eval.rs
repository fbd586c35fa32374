use thiserror::Error;

use super::{BinOp, Expr, Func, DEFAULT_MAX_DEPTH};

/// Any intermediate value beyond this magnitude counts as overflow.
pub const DEFAULT_MAGNITUDE_CAP: f64 = 1e30;

/// Integer exponents up to this size are expanded into repeated products.
const MAX_UNROLLED_POWER: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum EvalFailure {
    #[error("domain error")]
    Domain,
    #[error("non-finite value")]
    NonFinite,
    #[error("depth exceeded")]
    DepthExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalLimits {
    pub magnitude_cap: f64,
    pub max_depth: usize,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits {
            magnitude_cap: DEFAULT_MAGNITUDE_CAP,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// Panics if `vars` or `consts` do not cover the expression; those are
/// caller contracts, not evaluation failures.
pub(super) fn evaluate(
    e: &Expr,
    vars: &[f64],
    consts: &[f64],
    limits: &EvalLimits,
) -> Result<f64, EvalFailure> {
    Evaluator {
        vars,
        consts,
        limits,
    }
    .eval(e, 1)
}

struct Evaluator<'a> {
    vars: &'a [f64],
    consts: &'a [f64],
    limits: &'a EvalLimits,
}

impl Evaluator<'_> {
    fn check(&self, v: f64) -> Result<f64, EvalFailure> {
        if v.is_finite() && v.abs() <= self.limits.magnitude_cap {
            Ok(v)
        } else {
            Err(EvalFailure::NonFinite)
        }
    }

    fn eval(&self, e: &Expr, depth: usize) -> Result<f64, EvalFailure> {
        if depth > self.limits.max_depth {
            return Err(EvalFailure::DepthExceeded);
        }
        let v = match e {
            Expr::Var(i) => {
                let slot = i.saturating_sub(1);
                *self
                    .vars
                    .get(slot)
                    .unwrap_or_else(|| panic!("no value supplied for variable index {i}"))
            }
            Expr::Const(slot) => *self
                .consts
                .get(*slot)
                .unwrap_or_else(|| panic!("no value supplied for constant slot {slot}")),
            Expr::Int(v) => *v as f64,
            Expr::Neg(a) => -self.eval(a, depth + 1)?,
            Expr::Unary(func, a) => {
                let a = self.eval(a, depth + 1)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sqrt if a < 0.0 => return Err(EvalFailure::Domain),
                    Func::Sqrt => a.sqrt(),
                    Func::Log if a <= 0.0 => return Err(EvalFailure::Domain),
                    Func::Log => a.ln(),
                }
            }
            Expr::Binary(op, l, r) => {
                let l = self.eval(l, depth + 1)?;
                let r = self.eval(r, depth + 1)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div if r == 0.0 => return Err(EvalFailure::Domain),
                    BinOp::Div => l / r,
                    BinOp::Pow => self.power(l, r)?,
                }
            }
        };
        self.check(v)
    }

    fn power(&self, base: f64, exponent: f64) -> Result<f64, EvalFailure> {
        if exponent.fract() == 0.0 {
            if base == 0.0 && exponent < 0.0 {
                return Err(EvalFailure::Domain);
            }
            let n = exponent.abs();
            let magnitude = if n <= MAX_UNROLLED_POWER {
                let mut acc = 1.0;
                for _ in 0..n as u32 {
                    acc = self.check(acc * base)?;
                }
                acc
            } else {
                let odd = (n % 2.0) == 1.0;
                let m = base.abs().powf(n);
                if base < 0.0 && odd {
                    -m
                } else {
                    m
                }
            };
            return Ok(if exponent < 0.0 {
                1.0 / magnitude
            } else {
                magnitude
            });
        }
        if base < 0.0 || (base == 0.0 && exponent < 0.0) {
            return Err(EvalFailure::Domain);
        }
        Ok(base.powf(exponent))
    }
}
