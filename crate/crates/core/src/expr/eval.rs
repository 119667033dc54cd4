//! Pointwise evaluation and the randomized zero test.
//!
//! The zero test first normalizes; an exactly-cancelled expression is
//! `Zero`. Anything else is sampled at `samples` pseudo-random points
//! drawn (with a fixed seed, so verdicts are reproducible) from the
//! chart's safe box, skipping points that hit singular denominators.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Expr, Func};
use crate::chart::{Chart, Point, Symbol};
use crate::error::{Error, Result};

/// Outcome of the three-valued zero test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Normalization cancelled the expression exactly.
    Zero,
    /// All sampled values within tolerance; kernels kept the identity
    /// out of reach of exact cancellation.
    ProbablyZero,
    NonZero,
}

impl Verdict {
    /// Zero or ProbablyZero.
    pub fn is_zeroish(self) -> bool {
        !matches!(self, Verdict::NonZero)
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Zero => "zero",
            Verdict::ProbablyZero => "probably-zero",
            Verdict::NonZero => "nonzero",
        }
    }
}

/// Configuration of the randomized zero test.
#[derive(Debug, Clone)]
pub struct ZeroTest {
    /// Verdict threshold on |value| at sample points.
    pub eps: f64,
    /// Number of singularity-free sample points required.
    pub samples: usize,
    /// RNG seed; fixed so reports are reproducible.
    pub seed: u64,
    /// Cap on sampling attempts before giving up.
    pub max_attempts: usize,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest {
            eps: 1e-9,
            samples: 16,
            seed: 0xC0FFEE,
            max_attempts: 16 * 64,
        }
    }
}

impl ZeroTest {
    pub fn with_seed(seed: u64) -> Self {
        ZeroTest {
            seed,
            ..ZeroTest::default()
        }
    }

    /// Three-valued zero verdict for `e` over the chart's safe box.
    pub fn verdict(&self, e: &Expr, chart: &Chart) -> Result<Verdict> {
        let normal = e.normalize();
        if normal.is_zero_const() {
            return Ok(Verdict::Zero);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut good = 0usize;
        let mut attempts = 0usize;
        while good < self.samples {
            if attempts >= self.max_attempts {
                return Err(Error::NoSafeSample { attempts });
            }
            attempts += 1;
            let pt = sample_point(chart, &mut rng);
            match normal.evaluate(chart, &pt) {
                Ok(v) if v.is_finite() => {
                    good += 1;
                    if v.abs() > self.eps {
                        return Ok(Verdict::NonZero);
                    }
                }
                _ => continue,
            }
        }
        Ok(Verdict::ProbablyZero)
    }

    /// Verdict for every expression in a slice; first error wins.
    pub fn verdicts(&self, exprs: &[Expr], chart: &Chart) -> Result<Vec<Verdict>> {
        exprs.iter().map(|e| self.verdict(e, chart)).collect()
    }

    /// True iff every expression is Zero or ProbablyZero.
    pub fn all_zeroish(&self, exprs: &[Expr], chart: &Chart) -> Result<bool> {
        for e in exprs {
            if !self.verdict(e, chart)?.is_zeroish() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Draw one full assignment (all coordinates, then all parameters) from
/// the chart's safe boxes.
fn sample_point(chart: &Chart, rng: &mut ChaCha8Rng) -> Point {
    let coords = (0..chart.dim())
        .map(|i| {
            let (lo, hi) = chart.coord_box(i);
            lo + rng.gen::<f64>() * (hi - lo)
        })
        .collect();
    let params = (1..=chart.k())
        .map(|a| {
            let (lo, hi) = chart.param_box(a);
            lo + rng.gen::<f64>() * (hi - lo)
        })
        .collect();
    Point::with_params(coords, params)
}

/// Zero test with default configuration (eps 1e-9, 16 samples, fixed seed).
pub fn is_zero(e: &Expr, chart: &Chart) -> Result<Verdict> {
    ZeroTest::default().verdict(e, chart)
}

/// Zero test with explicit configuration.
pub fn is_zero_with(e: &Expr, chart: &Chart, cfg: &ZeroTest) -> Result<Verdict> {
    cfg.verdict(e, chart)
}

impl Expr {
    /// Double-precision evaluation at a point.
    pub fn evaluate(&self, chart: &Chart, pt: &Point) -> Result<f64> {
        self.evaluate_with(&|s| pt.get(chart, s))
    }

    /// Evaluation with an arbitrary symbol lookup (used by quadrature,
    /// which assigns the homotopy parameter on the fly).
    pub fn evaluate_with(&self, lookup: &dyn Fn(Symbol) -> Option<f64>) -> Result<f64> {
        let singular = |reason: &str| Error::SingularEvaluation {
            subexpr: self.to_string(),
            reason: reason.to_string(),
        };
        Ok(match self {
            Expr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
            Expr::Sym(s) => lookup(*s)
                .ok_or_else(|| Error::Precondition(format!("no value for symbol `{s}`")))?,
            Expr::Neg(a) => -a.evaluate_with(lookup)?,
            Expr::Add(a, b) => a.evaluate_with(lookup)? + b.evaluate_with(lookup)?,
            Expr::Sub(a, b) => a.evaluate_with(lookup)? - b.evaluate_with(lookup)?,
            Expr::Mul(a, b) => a.evaluate_with(lookup)? * b.evaluate_with(lookup)?,
            Expr::Div(a, b) => {
                let den = b.evaluate_with(lookup)?;
                if den == 0.0 {
                    return Err(singular("division by zero"));
                }
                a.evaluate_with(lookup)? / den
            }
            Expr::Pow(base, n) => {
                let b = base.evaluate_with(lookup)?;
                if b == 0.0 && *n < 0 {
                    return Err(singular("zero base with negative exponent"));
                }
                b.powi(*n)
            }
            Expr::Func(f, arg) => {
                let x = arg.evaluate_with(lookup)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(singular("log of non-positive value"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(singular("sqrt of negative value"));
                        }
                        x.sqrt()
                    }
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn evaluates_basic_arithmetic() {
        let chart = Chart::new(1, 1);
        let pt = Point::new(vec![3.0, 1.0]);
        let e = parse("q_1^2", &chart).unwrap();
        assert_eq!(e.evaluate(&chart, &pt).unwrap(), 9.0);

        let pt = Point::new(vec![2.0, 1.0]);
        let e = parse("p_1_1/q_1", &chart).unwrap();
        assert_eq!(e.evaluate(&chart, &pt).unwrap(), 0.5);
    }

    #[test]
    fn division_by_zero_reports_subexpression() {
        let chart = Chart::new(1, 1);
        let pt = Point::new(vec![0.0, 1.0]);
        let e = parse("1/q_1", &chart).unwrap();
        match e.evaluate(&chart, &pt) {
            Err(Error::SingularEvaluation { subexpr, .. }) => {
                assert_eq!(subexpr, "1/q_1");
            }
            other => panic!("expected singular evaluation, got {other:?}"),
        }
    }

    #[test]
    fn zero_test_distinguishes_exact_probable_and_nonzero() {
        let chart = Chart::new(1, 1);
        let exact = parse("(q_1 + p_1_1)^2 - q_1^2 - 2*q_1*p_1_1 - p_1_1^2", &chart).unwrap();
        assert_eq!(is_zero(&exact, &chart).unwrap(), Verdict::Zero);

        let pythagoras = parse("sin(q_1)^2 + cos(q_1)^2 - 1", &chart).unwrap();
        assert_eq!(is_zero(&pythagoras, &chart).unwrap(), Verdict::ProbablyZero);

        let nonzero = parse("q_1", &chart).unwrap();
        assert_eq!(is_zero(&nonzero, &chart).unwrap(), Verdict::NonZero);
    }

    #[test]
    fn zero_test_is_deterministic() {
        let chart = Chart::new(2, 2);
        let e = parse("sqrt(q_1*q_2)^2 - q_1*q_2", &chart).unwrap();
        let a = is_zero(&e, &chart).unwrap();
        let b = is_zero(&e, &chart).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, Verdict::ProbablyZero);
    }

    #[test]
    fn function_domain_errors_are_singular() {
        let chart = Chart::new(1, 1);
        let pt = Point::new(vec![-2.0, 1.0]);
        let e = parse("sqrt(q_1)", &chart).unwrap();
        assert!(matches!(
            e.evaluate(&chart, &pt),
            Err(Error::SingularEvaluation { .. })
        ));
        let e = parse("log(q_1)", &chart).unwrap();
        assert!(matches!(
            e.evaluate(&chart, &pt),
            Err(Error::SingularEvaluation { .. })
        ));
        let e = parse("q_1^-1", &chart).unwrap();
        let origin = Point::new(vec![0.0, 1.0]);
        assert!(matches!(
            e.evaluate(&chart, &origin),
            Err(Error::SingularEvaluation { .. })
        ));
    }

    #[test]
    fn unsatisfiable_sampling_reports_no_safe_sample() {
        let chart = Chart::new(1, 1);
        let e = parse("1/(q_1 - q_1)", &chart).unwrap();
        assert!(matches!(
            is_zero(&e, &chart),
            Err(Error::NoSafeSample { .. })
        ));
    }
}
