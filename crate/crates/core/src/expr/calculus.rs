//! Exact partial differentiation and symbolic substitution.

use std::collections::BTreeMap;

use super::{Expr, Func};
use crate::chart::Symbol;

impl Expr {
    /// Exact partial derivative with respect to `v`, normalized.
    pub fn differentiate(&self, v: Symbol) -> Expr {
        self.diff_raw(v).normalize()
    }

    fn diff_raw(&self, v: Symbol) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Sym(s) => {
                if *s == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::neg(a.diff_raw(v)),
            Expr::Add(a, b) => Expr::add(a.diff_raw(v), b.diff_raw(v)),
            Expr::Sub(a, b) => Expr::sub(a.diff_raw(v), b.diff_raw(v)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff_raw(v), (**b).clone()),
                Expr::mul((**a).clone(), b.diff_raw(v)),
            ),
            Expr::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.diff_raw(v), (**b).clone()),
                    Expr::mul((**a).clone(), b.diff_raw(v)),
                ),
                Expr::pow((**b).clone(), 2),
            ),
            Expr::Pow(base, n) => {
                if *n == 0 {
                    return Expr::zero();
                }
                Expr::mul(
                    Expr::mul(Expr::int(*n as i64), Expr::pow((**base).clone(), n - 1)),
                    base.diff_raw(v),
                )
            }
            Expr::Func(f, arg) => {
                let du = arg.diff_raw(v);
                let u = (**arg).clone();
                let outer = match f {
                    Func::Sin => Expr::func(Func::Cos, u),
                    Func::Cos => Expr::neg(Expr::func(Func::Sin, u)),
                    Func::Exp => Expr::func(Func::Exp, u),
                    Func::Log => return Expr::div(du, u),
                    Func::Sqrt => {
                        return Expr::div(du, Expr::mul(Expr::int(2), Expr::func(Func::Sqrt, u)))
                    }
                };
                Expr::mul(outer, du)
            }
        }
    }

    /// Replace symbols by expressions throughout the tree; the result is
    /// normalized. Symbols absent from the map are left in place.
    pub fn substitute(&self, map: &BTreeMap<Symbol, Expr>) -> Expr {
        self.subst_raw(map).normalize()
    }

    fn subst_raw(&self, map: &BTreeMap<Symbol, Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Sym(s) => map.get(s).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::neg(a.subst_raw(map)),
            Expr::Add(a, b) => Expr::add(a.subst_raw(map), b.subst_raw(map)),
            Expr::Sub(a, b) => Expr::sub(a.subst_raw(map), b.subst_raw(map)),
            Expr::Mul(a, b) => Expr::mul(a.subst_raw(map), b.subst_raw(map)),
            Expr::Div(a, b) => Expr::div(a.subst_raw(map), b.subst_raw(map)),
            Expr::Pow(a, n) => Expr::pow(a.subst_raw(map), *n),
            Expr::Func(f, a) => Expr::func(*f, a.subst_raw(map)),
        }
    }
}
