//! Symbolic expression engine: parsing, exact differentiation,
//! canonicalization, zero-testing, and pointwise numeric evaluation.
//!
//! Expressions are immutable trees over chart coordinates and base
//! parameters, with constants kept as exact rationals. Doubles appear
//! only at the evaluation boundary, so identities decided by
//! [`Expr::normalize`] are exact.

mod calculus;
mod eval;
mod normalize;
mod parse;

pub use eval::{is_zero, is_zero_with, Verdict, ZeroTest};
pub use parse::parse;

pub(crate) use normalize::{antiderivative_in_s, integrate_unit_interval_s};

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::chart::Symbol;

/// Function kernels; treated as opaque atoms by normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => None?,
        })
    }
}

/// Immutable symbolic expression tree.
///
/// Exponents of `^` are integers by construction; roots go through
/// `sqrt`. Shared subtrees make clones cheap; all operations build new
/// trees.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    /// Exact rational constant.
    Const(BigRational),
    /// Chart coordinate or base parameter.
    Sym(Symbol),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    /// Integer power of the base expression.
    Pow(Arc<Expr>, i32),
    Func(Func, Arc<Expr>),
}

// Constructor helpers; operand-owning, so the std operator traits do
// not fit.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(BigRational::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(BigRational::one())
    }

    pub fn int(v: i64) -> Expr {
        Expr::Const(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        assert!(den != 0);
        Expr::Const(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn sym(s: Symbol) -> Expr {
        Expr::Sym(s)
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Arc::new(e))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Arc::new(a), Arc::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Arc::new(a), Arc::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Arc::new(a), Arc::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Arc::new(a), Arc::new(b))
    }

    pub fn pow(base: Expr, exp: i32) -> Expr {
        Expr::Pow(Arc::new(base), exp)
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Arc::new(arg))
    }

    /// True iff this is the literal rational zero.
    pub fn is_zero_const(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    /// The constant value, if this node is a constant.
    pub fn as_const(&self) -> Option<&BigRational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Every symbol occurring in the tree, in order, deduplicated.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.visit_symbols(&mut |s| {
            if !out.contains(&s) {
                out.push(s);
            }
        });
        out.sort();
        out
    }

    fn visit_symbols(&self, f: &mut impl FnMut(Symbol)) {
        match self {
            Expr::Const(_) => {}
            Expr::Sym(s) => f(*s),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.visit_symbols(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit_symbols(f);
                b.visit_symbols(f);
            }
        }
    }

    /// True iff the tree contains the given symbol.
    pub fn depends_on(&self, sym: Symbol) -> bool {
        let mut found = false;
        self.visit_symbols(&mut |s| found |= s == sym);
        found
    }
}

// Precedence levels for the printer; mirrors the parser.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(c) => {
                if c.is_negative() {
                    PREC_NEG
                } else if !c.denom().is_one() {
                    PREC_MUL
                } else {
                    PREC_ATOM
                }
            }
            Expr::Sym(_) | Expr::Func(..) => PREC_ATOM,
            Expr::Neg(_) => PREC_NEG,
            Expr::Add(..) | Expr::Sub(..) => PREC_ADD,
            Expr::Mul(..) | Expr::Div(..) => PREC_MUL,
            Expr::Pow(..) => PREC_POW,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let paren = prec < min_prec;
        if paren {
            write!(f, "(")?;
        }
        match self {
            Expr::Const(c) => {
                if c.denom().is_one() {
                    write!(f, "{}", c.numer())?;
                } else {
                    write!(f, "{}/{}", c.numer(), c.denom())?;
                }
            }
            Expr::Sym(s) => write!(f, "{s}")?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, PREC_NEG)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, PREC_ADD)?;
                write!(f, " + ")?;
                b.fmt_prec(f, PREC_ADD + 1)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, PREC_ADD)?;
                write!(f, " - ")?;
                b.fmt_prec(f, PREC_ADD + 1)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, PREC_MUL)?;
                write!(f, "*")?;
                b.fmt_prec(f, PREC_MUL + 1)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, PREC_MUL)?;
                write!(f, "/")?;
                b.fmt_prec(f, PREC_MUL + 1)?;
            }
            Expr::Pow(base, exp) => {
                base.fmt_prec(f, PREC_ATOM)?;
                if *exp < 0 {
                    write!(f, "^({exp})")?;
                } else {
                    write!(f, "^{exp}")?;
                }
            }
            Expr::Func(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

// Expressions are immutable values shared across threads.
const _: () = {
    const fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<Expr>();
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_respects_precedence() {
        let q = Expr::sym(Symbol::Q(1));
        let p = Expr::sym(Symbol::P(1, 1));
        let e = Expr::mul(Expr::add(q.clone(), p.clone()), q.clone());
        assert_eq!(e.to_string(), "(q_1 + p_1_1)*q_1");
        let e = Expr::pow(Expr::add(q.clone(), p.clone()), 2);
        assert_eq!(e.to_string(), "(q_1 + p_1_1)^2");
        let e = Expr::sub(q.clone(), Expr::sub(p.clone(), q.clone()));
        assert_eq!(e.to_string(), "q_1 - (p_1_1 - q_1)");
        let e = Expr::neg(Expr::pow(q.clone(), 2));
        assert_eq!(e.to_string(), "-q_1^2");
        // Left-associativity makes the reparse exact: 1/2*q = (1/2)*q.
        let e = Expr::mul(Expr::rational(1, 2), q.clone());
        assert_eq!(e.to_string(), "1/2*q_1");
        let e = Expr::mul(q, Expr::rational(1, 2));
        assert_eq!(e.to_string(), "q_1*(1/2)");
    }

    #[test]
    fn symbols_are_collected_sorted() {
        let e = Expr::add(
            Expr::sym(Symbol::P(2, 1)),
            Expr::mul(Expr::sym(Symbol::Q(1)), Expr::sym(Symbol::P(2, 1))),
        );
        assert_eq!(e.symbols(), vec![Symbol::Q(1), Symbol::P(2, 1)]);
    }
}
