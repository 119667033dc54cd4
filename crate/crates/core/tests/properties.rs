//! Randomized algebraic invariants of the expression engine and the
//! exterior calculus layer.

mod common;

use common::*;
use ksym_core::chart::{Chart, Point, Symbol};
use ksym_core::error::Error;
use ksym_core::expr::{is_zero, parse, Expr, Func, Verdict, ZeroTest};
use ksym_core::forms::{canonical_omega, canonical_theta, QVectorField};
use ksym_core::hdw::{field_equation_residual, particular_kvector, HamiltonianSystem};
use ksym_core::noether::noether_charge;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn test_chart() -> Chart {
    Chart::new(1, 1)
}

/// Random expression trees up to depth 8 over q_1, p_1_1.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        3 => (-4i64..=4).prop_map(Expr::int),
        1 => (1i64..=3, 2i64..=4).prop_map(|(n, d)| Expr::rational(n, d)),
        3 => Just(Expr::sym(Symbol::Q(1))),
        3 => Just(Expr::sym(Symbol::P(1, 1))),
    ];
    leaf.prop_recursive(8, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            inner.clone().prop_map(Expr::neg),
            (inner.clone(), 0i32..=2).prop_map(|(a, n)| Expr::pow(a, n)),
            inner.clone().prop_map(|a| Expr::func(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::func(Func::Cos, a)),
            inner.prop_map(|a| Expr::func(Func::Exp, a)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalize_is_idempotent(e in arb_expr()) {
        let once = e.normalize();
        let twice = once.normalize();
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn differentiation_satisfies_product_rule(e1 in arb_expr(), e2 in arb_expr()) {
        let chart = test_chart();
        let v = Symbol::Q(1);
        let product = Expr::mul(e1.clone(), e2.clone());
        let lhs = product.differentiate(v);
        let rhs = Expr::add(
            Expr::mul(e1.differentiate(v), e2.clone()),
            Expr::mul(e1, e2.differentiate(v)),
        );
        let diff = Expr::sub(lhs, rhs);
        match is_zero(&diff, &chart) {
            Ok(v) => prop_assert!(v.is_zeroish(), "product rule violated: {diff}"),
            // Singular sampling (nested exp overflow etc.): no verdict.
            Err(Error::NoSafeSample { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        }
    }

    #[test]
    fn differentiation_is_linear(e1 in arb_expr(), e2 in arb_expr()) {
        let v = Symbol::P(1, 1);
        let lhs = Expr::add(e1.clone(), e2.clone()).differentiate(v);
        let rhs = Expr::add(e1.differentiate(v), e2.differentiate(v)).normalize();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn display_parses_back_to_the_same_normal_form(e in arb_expr()) {
        let chart = test_chart();
        let normal = e.normalize();
        let reparsed = parse(&normal.to_string(), &chart)
            .map_err(|e| TestCaseError::fail(format!("{e}")))?;
        prop_assert_eq!(reparsed.normalize(), normal);
    }

    #[test]
    fn evaluate_agrees_with_horner(
        coeffs in proptest::collection::vec((-9i64..=9, 1i64..=4), 1..6),
        x in 0.5f64..1.5,
    ) {
        let chart = test_chart();
        let text = coeffs
            .iter()
            .enumerate()
            .map(|(d, (n, den))| match d {
                0 => format!("({n}/{den})"),
                1 => format!("({n}/{den})*q_1"),
                _ => format!("({n}/{den})*q_1^{d}"),
            })
            .collect::<Vec<_>>()
            .join(" + ");
        let e = parse(&text, &chart).map_err(|e| TestCaseError::fail(format!("{e}")))?;
        let pt = Point::new(vec![x, 0.0]);
        let got = e.evaluate(&chart, &pt).unwrap();
        let horner = coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, (n, den)| acc * x + (*n as f64) / (*den as f64));
        let tol = 1e-12 * horner.abs().max(1.0);
        prop_assert!((got - horner).abs() <= tol, "{got} vs {horner}");
    }

    #[test]
    fn zero_verdict_is_sound(e in arb_expr()) {
        let chart = test_chart();
        if let Ok(Verdict::Zero) = is_zero(&e, &chart) {
            // The original tree must evaluate to ~0 wherever it evaluates.
            let mut rng = StdRng::seed_from_u64(7);
            for _ in 0..8 {
                let pt = Point::new(vec![
                    0.5 + rand::Rng::gen::<f64>(&mut rng),
                    0.5 + rand::Rng::gen::<f64>(&mut rng),
                ]);
                if let Ok(v) = e.evaluate(&chart, &pt) {
                    if v.is_finite() {
                        prop_assert!(v.abs() <= 1e-9, "Zero verdict but |{v}| > eps");
                    }
                }
            }
        }
    }
}

#[test]
fn d_squared_vanishes_on_random_forms() {
    let mut rng = StdRng::seed_from_u64(0x5EED_0001);
    let mut count = 0;
    while count < 100 {
        let n = 1 + (count % 3);
        let k = 1 + ((count / 3) % 3);
        let chart = Chart::new(n, k);
        let f = ksym_core::forms::DiffForm::function(
            chart.clone(),
            random_poly(&mut rng, &chart, 3, 3),
        );
        assert!(
            f.exterior_derivative()
                .exterior_derivative()
                .is_structurally_zero(),
            "d²f != 0 at n={n} k={k}"
        );
        let a = random_one_form(&mut rng, &chart, 3);
        assert!(
            a.exterior_derivative()
                .exterior_derivative()
                .is_structurally_zero(),
            "d²a != 0 at n={n} k={k}"
        );
        count += 1;
    }
}

#[test]
fn interior_product_is_an_antiderivation() {
    let mut rng = StdRng::seed_from_u64(0x5EED_0002);
    let shapes = [(2, 2), (1, 3), (3, 1), (1, 2)];
    for count in 0..100 {
        let (n, k) = shapes[count % shapes.len()];
        let chart = Chart::new(n, k);
        let y = random_vector_field(&mut rng, &chart, 1);
        let (a, deg_a) = if count % 2 == 0 {
            (random_one_form(&mut rng, &chart, 1), 1usize)
        } else {
            (
                random_one_form(&mut rng, &chart, 1)
                    .wedge(&random_one_form(&mut rng, &chart, 1))
                    .unwrap(),
                2,
            )
        };
        let b = if count % 3 == 0 {
            random_one_form(&mut rng, &chart, 1)
                .wedge(&random_one_form(&mut rng, &chart, 1))
                .unwrap()
        } else {
            random_one_form(&mut rng, &chart, 1)
        };
        let lhs = a.wedge(&b).unwrap().interior_product(&y).unwrap();
        let mut rhs = a.interior_product(&y).unwrap().wedge(&b).unwrap();
        let sign = if deg_a % 2 == 0 { 1 } else { -1 };
        let second = a
            .wedge(&b.interior_product(&y).unwrap())
            .unwrap()
            .scale(&Expr::int(sign));
        rhs = rhs.add(&second).unwrap();
        assert!(
            lhs.sub(&rhs).unwrap().is_structurally_zero(),
            "antiderivation law failed (deg a = {deg_a})"
        );
    }
}

#[test]
fn canonical_lift_preserves_theta() {
    let mut rng = StdRng::seed_from_u64(0x5EED_0003);
    for count in 0..50 {
        let n = 1 + (count % 2);
        let k = 1 + ((count / 2) % 2);
        let chart = Chart::new(n, k);
        let comps = (0..n)
            .map(|_| random_q_poly(&mut rng, &chart, 3, 3))
            .collect();
        let lift = QVectorField::new(chart.clone(), comps)
            .unwrap()
            .canonical_lift();
        for a in 1..=k {
            let theta = canonical_theta(&chart, a).unwrap();
            let l = theta.lie_derivative(&lift).unwrap();
            assert!(
                l.is_structurally_zero(),
                "L(Z-lift)theta != 0 at n={n} k={k} A={a}"
            );
            // Hence every lift satisfies the order-1 condition on ω.
            let omega = canonical_omega(&chart, a).unwrap();
            assert!(omega.lie_derivative(&lift).unwrap().is_structurally_zero());
        }
    }
}

#[test]
fn kernel_membership_matches_local_characterization() {
    let zero = ZeroTest::default();
    let mut rng = StdRng::seed_from_u64(0x5EED_0004);
    for count in 0..100 {
        let n = 1 + (count % 3);
        let k = 1 + ((count / 3) % 3);
        let chart = Chart::new(n, k);
        let x = if count % 2 == 0 {
            random_kvector(&mut rng, &chart, 2)
        } else {
            random_kernel_element(&mut rng, &chart, 2)
        };
        let via_sharp = x.in_kernel(&zero).unwrap();

        // Explicit local conditions: (X_A)^i = 0 and Σ_A (X_A)^A_i = 0.
        let mut explicit = true;
        for a in 1..=k {
            for i in 0..n {
                let v = zero.verdict(x.field(a).component(i), &chart).unwrap();
                explicit &= v.is_zeroish();
            }
        }
        for i in 1..=n as u32 {
            let mut trace = Expr::zero();
            for a in 1..=k as u32 {
                let idx = chart.coordinate_index(Symbol::P(a, i)).unwrap();
                trace = Expr::add(trace, x.field(a as usize).component(idx).clone());
            }
            explicit &= zero.verdict(&trace, &chart).unwrap().is_zeroish();
        }
        assert_eq!(via_sharp, explicit, "kernel mismatch at n={n} k={k}");
    }
}

#[test]
fn particular_kvector_solves_field_equation_with_kernel_freedom() {
    let mut rng = StdRng::seed_from_u64(0x5EED_0005);
    for count in 0..50 {
        let n = 1 + (count % 3);
        let k = 1 + ((count / 3) % 3);
        let chart = Chart::new(n, k);
        let h = random_poly(&mut rng, &chart, 4, 3);
        let sys = HamiltonianSystem::new(chart.clone(), h).unwrap();
        let x = particular_kvector(&sys);
        assert!(
            field_equation_residual(&sys, &x)
                .unwrap()
                .is_structurally_zero(),
            "particular residual nonzero at n={n} k={k}"
        );

        let shifted = x.add(&random_kernel_element(&mut rng, &chart, 2)).unwrap();
        assert!(
            field_equation_residual(&sys, &shifted)
                .unwrap()
                .is_structurally_zero(),
            "kernel shift broke the residual at n={n} k={k}"
        );
    }
}

#[test]
fn natural_lift_charges_specialize_to_momentum_pairings() {
    // For Y = Z^{C*}: ξᴬ = 0 and gᴬ = i(Y)θᴬ = p^A_i Zⁱ (base all-zero).
    let zero = ZeroTest::default();
    let mut rng = StdRng::seed_from_u64(0x5EED_0006);
    for count in 0..25 {
        let n = 1 + (count % 2);
        let k = 1 + ((count / 2) % 2);
        let chart = Chart::new(n, k);
        let z: Vec<Expr> = (0..n)
            .map(|_| random_q_poly(&mut rng, &chart, 2, 3))
            .collect();
        let y = QVectorField::new(chart.clone(), z.clone())
            .unwrap()
            .canonical_lift();
        let h = Expr::zero();
        let sys = HamiltonianSystem::new(chart.clone(), h).unwrap();
        let base = Point::new(vec![0.0; chart.dim()]);
        let cq = noether_charge(&sys, &y, 1, &base, &zero).unwrap();
        for a in 1..=k as u32 {
            assert!(cq.xi[a as usize - 1].closed_form().unwrap().is_zero_const());
            let mut want = Expr::zero();
            for i in 1..=n as u32 {
                want = Expr::add(
                    want,
                    Expr::mul(Expr::sym(Symbol::P(a, i)), z[i as usize - 1].clone()),
                );
            }
            assert_eq!(
                cq.g[a as usize - 1].closed_form().unwrap(),
                &want.normalize(),
                "charge mismatch at n={n} k={k} A={a}"
            );
        }
    }
}
