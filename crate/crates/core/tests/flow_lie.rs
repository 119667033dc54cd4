//! Flow-based oracle for the Lie derivative: the algebraic Cartan
//! formula must agree with the definition through flow pullbacks,
//! L(Y)a = d/dt|₀ Φ_t^* a, approximated by central differences along an
//! RK4-integrated flow of Y with the Jacobian carried by the variational
//! equation J' = DY(Φ_t)·J.

mod common;

use common::*;
use ksym_core::chart::{Chart, Point};
use ksym_core::expr::Expr;
use ksym_core::forms::{DiffForm, VectorField};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const H: f64 = 1e-3;
const TOL: f64 = 1e-5;

struct NumericField {
    chart: Chart,
    comps: Vec<Expr>,
    jac: Vec<Vec<Expr>>,
}

impl NumericField {
    fn new(y: &VectorField) -> Self {
        let chart = y.chart().clone();
        let comps: Vec<Expr> = y.components().to_vec();
        let jac = comps
            .iter()
            .map(|c| {
                (0..chart.dim())
                    .map(|j| c.differentiate(chart.coordinate_at(j)))
                    .collect()
            })
            .collect();
        NumericField { chart, comps, jac }
    }

    fn velocity(&self, x: &[f64]) -> Vec<f64> {
        let pt = Point::new(x.to_vec());
        self.comps
            .iter()
            .map(|c| c.evaluate(&self.chart, &pt).unwrap())
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let pt = Point::new(x.to_vec());
        self.jac
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.evaluate(&self.chart, &pt).unwrap())
                    .collect()
            })
            .collect()
    }
}

/// One RK4 step of the augmented system (x, J): x' = Y(x), J' = DY(x)·J.
fn flow_with_jacobian(field: &NumericField, x0: &[f64], t: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = x0.len();
    let ident: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let deriv = |x: &[f64], j: &[Vec<f64>]| -> (Vec<f64>, Vec<Vec<f64>>) {
        let v = field.velocity(x);
        let dy = field.jacobian(x);
        let jd = (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| (0..d).map(|m| dy[r][m] * j[m][c]).sum())
                    .collect()
            })
            .collect();
        (v, jd)
    };
    let comb = |x: &[f64], kx: &[f64], j: &[Vec<f64>], kj: &[Vec<f64>], c: f64| {
        let xn: Vec<f64> = x.iter().zip(kx).map(|(a, b)| a + c * b).collect();
        let jn: Vec<Vec<f64>> = j
            .iter()
            .zip(kj)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a + c * b).collect())
            .collect();
        (xn, jn)
    };
    let (k1x, k1j) = deriv(x0, &ident);
    let (x2, j2) = comb(x0, &k1x, &ident, &k1j, 0.5 * t);
    let (k2x, k2j) = deriv(&x2, &j2);
    let (x3, j3) = comb(x0, &k2x, &ident, &k2j, 0.5 * t);
    let (k3x, k3j) = deriv(&x3, &j3);
    let (x4, j4) = comb(x0, &k3x, &ident, &k3j, t);
    let (k4x, k4j) = deriv(&x4, &j4);
    let xf = (0..d)
        .map(|i| x0[i] + t / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]))
        .collect();
    let jf = (0..d)
        .map(|r| {
            (0..d)
                .map(|c| {
                    ident[r][c]
                        + t / 6.0 * (k1j[r][c] + 2.0 * k2j[r][c] + 2.0 * k3j[r][c] + k4j[r][c])
                })
                .collect()
        })
        .collect();
    (xf, jf)
}

/// Coefficients of the pullback Φ_t^* a at x: Σ_i a_i(Φ_t x) (J_t)^i_j.
fn pullback_coeffs(a: &DiffForm, field: &NumericField, x: &[f64], t: f64) -> Vec<f64> {
    let (phi, jac) = flow_with_jacobian(field, x, t);
    let pt = Point::new(phi);
    let chart = a.chart();
    let d = x.len();
    let mut a_vals = vec![0.0; d];
    for (key, coeff) in a.terms() {
        a_vals[key[0]] = coeff.evaluate(chart, &pt).unwrap();
    }
    (0..d)
        .map(|j| (0..d).map(|i| a_vals[i] * jac[i][j]).sum())
        .collect()
}

#[test]
fn cartan_formula_matches_flow_definition() {
    let mut rng = StdRng::seed_from_u64(0x5EED_F10E);
    for count in 0..100 {
        let n = 1 + (count % 3);
        let k = 1 + ((count / 3) % 3);
        let chart = Chart::new(n, k);
        let y = random_vector_field(&mut rng, &chart, 2);
        let a = random_one_form(&mut rng, &chart, 2);
        let algebraic = a.lie_derivative(&y).unwrap();
        let field = NumericField::new(&y);

        for _ in 0..10 {
            let x: Vec<f64> = (0..chart.dim()).map(|_| 0.5 + rng.gen::<f64>()).collect();
            let pt = Point::new(x.clone());
            // Fourth-order central stencil at step H keeps the
            // differencing error far below the comparison tolerance.
            let p1 = pullback_coeffs(&a, &field, &x, H);
            let m1 = pullback_coeffs(&a, &field, &x, -H);
            let p2 = pullback_coeffs(&a, &field, &x, 2.0 * H);
            let m2 = pullback_coeffs(&a, &field, &x, -2.0 * H);
            for j in 0..chart.dim() {
                let fd = (-p2[j] + 8.0 * p1[j] - 8.0 * m1[j] + m2[j]) / (12.0 * H);
                let exact = algebraic.coefficient(&[j]).evaluate(&chart, &pt).unwrap();
                let tol = TOL * (1.0 + exact.abs());
                assert!(
                    (fd - exact).abs() <= tol,
                    "instance {count}: coefficient {j}: flow {fd} vs Cartan {exact}"
                );
            }
        }
    }
}
