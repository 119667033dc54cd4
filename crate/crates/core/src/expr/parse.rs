//! Recursive-descent parser for the expression grammar.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr     := term  (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | power
//! power    := primary ("^" exponent)*           -- left-associative
//! exponent := "-" exponent | primary             -- must fold to an integer
//! primary  := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Identifiers are `q_<i>`, `p_<A>_<i>`, `t_<A>` (1-based) and the
//! function names sin, cos, exp, log, sqrt. Numeric literals are integer
//! or decimal and are stored as exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{Expr, Func};
use crate::chart::{Chart, Symbol};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while lx.pos < lx.src.len() {
            let c = lx.src[lx.pos];
            let start = lx.pos;
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    lx.pos += 1;
                    continue;
                }
                b'+' => out.push((Tok::Plus, start)),
                b'-' => out.push((Tok::Minus, start)),
                b'*' => out.push((Tok::Star, start)),
                b'/' => out.push((Tok::Slash, start)),
                b'^' => out.push((Tok::Caret, start)),
                b'(' => out.push((Tok::LParen, start)),
                b')' => out.push((Tok::RParen, start)),
                b'0'..=b'9' => {
                    out.push((lx.number()?, start));
                    continue;
                }
                c if c.is_ascii_alphabetic() => {
                    out.push((lx.ident(), start));
                    continue;
                }
                other => {
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!("unexpected character `{}`", other as char),
                    })
                }
            }
            lx.pos += 1;
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<Tok> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = &self.src[start..self.pos];
        let mut value = BigRational::from_integer(
            std::str::from_utf8(int_part)
                .unwrap()
                .parse::<BigInt>()
                .unwrap(),
        );
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let frac_start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == frac_start {
                return Err(Error::Syntax {
                    offset: frac_start,
                    message: "expected digits after decimal point".into(),
                });
            }
            let digits = std::str::from_utf8(&self.src[frac_start..self.pos]).unwrap();
            let numer: BigInt = digits.parse().unwrap();
            let denom = BigInt::from(10u32).pow(digits.len() as u32);
            value += BigRational::new(numer, denom);
        }
        Ok(Tok::Num(value))
    }

    fn ident(&mut self) -> Tok {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Tok::Ident(
            std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .to_string(),
        )
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    chart: &'a Chart,
    end: usize,
}

/// Parse `text` against the chart's coordinates and base parameters.
pub fn parse(text: &str, chart: &Chart) -> Result<Expr> {
    let toks = Lexer::tokenize(text)?;
    let mut p = Parser {
        toks,
        idx: 0,
        chart,
        end: text.len(),
    };
    let e = p.expr()?;
    if let Some((_, off)) = p.peek() {
        return Err(Error::Syntax {
            offset: off,
            message: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<(&Tok, usize)> {
        self.toks.get(self.idx).map(|(t, o)| (t, *o))
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn offset(&self) -> usize {
        self.peek().map(|(_, o)| o).unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Tok::Plus => Expr::add as fn(Expr, Expr) -> Expr,
                Tok::Minus => Expr::sub,
                _ => break,
            };
            self.next();
            let rhs = self.term()?;
            lhs = op(lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Tok::Star => Expr::mul as fn(Expr, Expr) -> Expr,
                Tok::Slash => Expr::div,
                _ => break,
            };
            self.next();
            let rhs = self.unary()?;
            lhs = op(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.next();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.primary()?;
        while let Some((Tok::Caret, _)) = self.peek() {
            self.next();
            let exp_offset = self.offset();
            let exp = self.exponent()?;
            let folded = fold_const(&exp)
                .filter(|c| c.denom().is_one())
                .and_then(|c| c.numer().to_i32())
                .ok_or(Error::NonIntegerExponent { offset: exp_offset })?;
            base = Expr::pow(base, folded);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.next();
            return Ok(Expr::neg(self.exponent()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some((Tok::Num(v), _)) => Ok(Expr::Const(v)),
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                match self.next() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    other => Err(Error::Syntax {
                        offset: other.map(|(_, o)| o).unwrap_or(self.end),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Some((Tok::Ident(name), off)) => self.resolve_ident(name, off),
            Some((tok, off)) => Err(Error::Syntax {
                offset: off,
                message: format!("unexpected token `{tok:?}`"),
            }),
            None => Err(Error::Syntax {
                offset: self.end,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn resolve_ident(&mut self, name: String, off: usize) -> Result<Expr> {
        if let Some(func) = Func::from_name(&name) {
            return match self.next() {
                Some((Tok::LParen, _)) => {
                    let arg = self.expr()?;
                    match self.next() {
                        Some((Tok::RParen, _)) => Ok(Expr::func(func, arg)),
                        other => Err(Error::Syntax {
                            offset: other.map(|(_, o)| o).unwrap_or(self.end),
                            message: "expected `)` after function argument".into(),
                        }),
                    }
                }
                _ => Err(Error::Syntax {
                    offset: off,
                    message: format!("function `{name}` requires an argument list"),
                }),
            };
        }
        match symbol_from_name(&name) {
            Some(sym) if self.chart.declares(sym) => Ok(Expr::sym(sym)),
            _ => Err(Error::UnknownIdentifier { name, offset: off }),
        }
    }
}

fn symbol_from_name(name: &str) -> Option<Symbol> {
    let mut parts = name.split('_');
    let head = parts.next()?;
    let rest: Vec<&str> = parts.collect();
    let idx = |s: &str| -> Option<u32> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse().ok().filter(|v| *v >= 1)
    };
    match (head, rest.as_slice()) {
        ("q", [i]) => Some(Symbol::Q(idx(i)?)),
        ("p", [a, i]) => Some(Symbol::P(idx(a)?, idx(i)?)),
        ("t", [a]) => Some(Symbol::T(idx(a)?)),
        _ => None,
    }
}

/// Fold a constant-only subtree into a rational value, if possible.
pub(crate) fn fold_const(e: &Expr) -> Option<BigRational> {
    match e {
        Expr::Const(c) => Some(c.clone()),
        Expr::Sym(_) | Expr::Func(..) => None,
        Expr::Neg(a) => Some(-fold_const(a)?),
        Expr::Add(a, b) => Some(fold_const(a)? + fold_const(b)?),
        Expr::Sub(a, b) => Some(fold_const(a)? - fold_const(b)?),
        Expr::Mul(a, b) => Some(fold_const(a)? * fold_const(b)?),
        Expr::Div(a, b) => {
            let d = fold_const(b)?;
            if d.is_zero() {
                None
            } else {
                Some(fold_const(a)? / d)
            }
        }
        Expr::Pow(a, n) => {
            let base = fold_const(a)?;
            if *n < 0 && base.is_zero() {
                return None;
            }
            Some(rational_pow(&base, *n))
        }
    }
}

pub(crate) fn rational_pow(base: &BigRational, exp: i32) -> BigRational {
    if exp == 0 {
        return BigRational::one();
    }
    let mag = base.pow(exp.unsigned_abs().min(i32::MAX as u32) as i32);
    if exp < 0 {
        mag.recip()
    } else {
        mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart12() -> Chart {
        Chart::new(1, 2)
    }

    #[test]
    fn parses_hamiltonian_with_precedence() {
        let chart = chart12();
        let e = parse("(p_1_1^2 + p_2_1^2)/2", &chart).unwrap();
        let expected = Expr::div(
            Expr::add(
                Expr::pow(Expr::sym(Symbol::P(1, 1)), 2),
                Expr::pow(Expr::sym(Symbol::P(2, 1)), 2),
            ),
            Expr::int(2),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn parses_product_of_symbols() {
        let chart = Chart::new(1, 1);
        let e = parse("q_1*p_1_1", &chart).unwrap();
        assert_eq!(
            e,
            Expr::mul(Expr::sym(Symbol::Q(1)), Expr::sym(Symbol::P(1, 1)))
        );
    }

    #[test]
    fn unknown_identifier_is_reported_by_name() {
        let chart = Chart::new(1, 1);
        match parse("sin(q_2)", &chart) {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "q_2");
                assert_eq!(offset, 4);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_byte_offset() {
        let chart = Chart::new(1, 1);
        match parse("q_1 + ", &chart) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse("q_1 $ 2", &chart) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn exponent_must_be_integer() {
        let chart = Chart::new(1, 1);
        assert!(matches!(
            parse("q_1^p_1_1", &chart),
            Err(Error::NonIntegerExponent { offset: 4 })
        ));
        assert!(matches!(
            parse("q_1^(1/2)", &chart),
            Err(Error::NonIntegerExponent { .. })
        ));
        let e = parse("q_1^-2", &chart).unwrap();
        assert_eq!(e, Expr::pow(Expr::sym(Symbol::Q(1)), -2));
        let e = parse("q_1^(2)", &chart).unwrap();
        assert_eq!(e, Expr::pow(Expr::sym(Symbol::Q(1)), 2));
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        let chart = Chart::new(1, 1);
        let e = parse("-q_1^2", &chart).unwrap();
        assert_eq!(e, Expr::neg(Expr::pow(Expr::sym(Symbol::Q(1)), 2)));
    }

    #[test]
    fn decimal_literals_are_exact_rationals() {
        let chart = Chart::new(1, 1);
        let e = parse("0.25", &chart).unwrap();
        assert_eq!(e, Expr::rational(1, 4));
    }

    #[test]
    fn base_parameters_resolve() {
        let chart = chart12();
        assert!(parse("t_1*t_2", &chart).is_ok());
        assert!(matches!(
            parse("t_3", &chart),
            Err(Error::UnknownIdentifier { .. })
        ));
    }
}
