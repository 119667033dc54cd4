//! `ksym selftest`: deterministic invariant suites over seeded random
//! instances, mirroring the library's mathematical contracts.

use ksym_core::chart::{Chart, Point, Symbol};
use ksym_core::expr::{parse, Expr, Verdict, ZeroTest};
use ksym_core::forms::{
    canonical_omega, canonical_theta, DiffForm, KVectorField, QVectorField, VectorField,
};
use ksym_core::hdw::{
    field_equation_residual, hdw_residual_grid, integrate_section, particular_kvector,
    AnalyticSection, GridAxis, HamiltonianSystem, DEFAULT_TOL_PATH,
};
use ksym_core::noether::{
    classify_cartan_order, conservation_check_numeric, conservation_check_symbolic, noether_charge,
    ChargeExpr,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::report::{CheckLine, SelftestReport};

pub fn run_selftest(seed: u64) -> SelftestReport {
    let zero = ZeroTest::with_seed(seed);
    let checks: Vec<CheckLine> = [
        check("exterior_d_squared", d_squared(&zero)),
        check("antiderivation_law", antiderivation()),
        check("cartan_vs_flow", cartan_vs_flow()),
        check("canonical_structures", canonical_structures()),
        check("kernel_characterization", kernel_characterization(&zero)),
        check("lift_naturality", lift_naturality(&zero)),
        check("particular_residual", particular_residual()),
        check("oscillator_accuracy", oscillator_accuracy(&zero)),
        check("laplace_noether_end_to_end", laplace_end_to_end(&zero)),
        check("order2_noether_end_to_end", order2_end_to_end(&zero)),
        check("refinement_order", refinement_order(&zero)),
        check("negative_controls", negative_controls(&zero)),
    ]
    .into_iter()
    .collect();
    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    SelftestReport {
        checks,
        passed,
        failed,
    }
}

fn check(name: &str, outcome: Result<String, String>) -> CheckLine {
    match outcome {
        Ok(detail) => CheckLine {
            name: name.to_string(),
            pass: true,
            detail,
        },
        Err(detail) => CheckLine {
            name: name.to_string(),
            pass: false,
            detail,
        },
    }
}

fn random_poly(rng: &mut StdRng, chart: &Chart, max_terms: usize, max_deg: u32) -> Expr {
    let coords: Vec<Symbol> = chart.coordinates().collect();
    let terms = rng.gen_range(0..=max_terms);
    let mut acc = Expr::int(rng.gen_range(-2..=2));
    for _ in 0..terms {
        let mut term = Expr::int(rng.gen_range(-2..=2i64));
        for _ in 0..rng.gen_range(1..=max_deg) {
            term = Expr::mul(term, Expr::sym(coords[rng.gen_range(0..coords.len())]));
        }
        acc = Expr::add(acc, term);
    }
    acc.normalize()
}

fn random_one_form(rng: &mut StdRng, chart: &Chart, max_deg: u32) -> DiffForm {
    let coeffs = (0..chart.dim())
        .map(|_| random_poly(rng, chart, 2, max_deg))
        .collect();
    DiffForm::one_form(chart.clone(), coeffs).unwrap()
}

fn random_vector_field(rng: &mut StdRng, chart: &Chart, max_deg: u32) -> VectorField {
    let comps = (0..chart.dim())
        .map(|_| random_poly(rng, chart, 2, max_deg))
        .collect();
    VectorField::new(chart.clone(), comps).unwrap()
}

fn d_squared(_zero: &ZeroTest) -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5E1F_0001);
    for count in 0..100 {
        let chart = Chart::new(1 + count % 3, 1 + (count / 3) % 3);
        let f = DiffForm::function(chart.clone(), random_poly(&mut rng, &chart, 3, 3));
        if !f
            .exterior_derivative()
            .exterior_derivative()
            .is_structurally_zero()
        {
            return Err(format!("d^2 f != 0 on instance {count}"));
        }
        let a = random_one_form(&mut rng, &chart, 3);
        if !a
            .exterior_derivative()
            .exterior_derivative()
            .is_structurally_zero()
        {
            return Err(format!("d^2 a != 0 on instance {count}"));
        }
    }
    Ok("d∘d = 0 on 100 random 0- and 1-forms, n,k <= 3".to_string())
}

fn antiderivation() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5E1F_0002);
    let shapes = [(2, 2), (1, 3), (3, 1), (1, 2)];
    for count in 0..100 {
        let (n, k) = shapes[count % shapes.len()];
        let chart = Chart::new(n, k);
        let y = random_vector_field(&mut rng, &chart, 1);
        let (a, deg_a) = if count % 2 == 0 {
            (random_one_form(&mut rng, &chart, 1), 1i32)
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
        let sign = if deg_a % 2 == 0 { 1 } else { -1 };
        let rhs = a
            .interior_product(&y)
            .unwrap()
            .wedge(&b)
            .unwrap()
            .add(
                &a.wedge(&b.interior_product(&y).unwrap())
                    .unwrap()
                    .scale(&Expr::int(sign)),
            )
            .unwrap();
        if !lhs.sub(&rhs).unwrap().is_structurally_zero() {
            return Err(format!("antiderivation law failed on instance {count}"));
        }
    }
    Ok("i(Y)(a∧b) antiderivation law on 100 random instances".to_string())
}

fn cartan_vs_flow() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5E1F_0003);
    let h = 1e-3;
    let mut worst = 0.0f64;
    for count in 0..100 {
        let chart = Chart::new(1 + count % 3, 1 + (count / 3) % 3);
        let y = random_vector_field(&mut rng, &chart, 2);
        let a = random_one_form(&mut rng, &chart, 2);
        let algebraic = a.lie_derivative(&y).map_err(|e| e.to_string())?;
        let oracle = FlowOracle::new(&y);
        for _ in 0..10 {
            let x: Vec<f64> = (0..chart.dim()).map(|_| 0.5 + rng.gen::<f64>()).collect();
            let pt = Point::new(x.clone());
            let p1 = oracle.pullback(&a, &x, h);
            let m1 = oracle.pullback(&a, &x, -h);
            let p2 = oracle.pullback(&a, &x, 2.0 * h);
            let m2 = oracle.pullback(&a, &x, -2.0 * h);
            for j in 0..chart.dim() {
                let fd = (-p2[j] + 8.0 * p1[j] - 8.0 * m1[j] + m2[j]) / (12.0 * h);
                let exact = algebraic
                    .coefficient(&[j])
                    .evaluate(&chart, &pt)
                    .map_err(|e| e.to_string())?;
                let err = (fd - exact).abs() / (1.0 + exact.abs());
                worst = worst.max(err);
                if err > 1e-5 {
                    return Err(format!(
                        "flow disagreement {err:.3e} on instance {count} coefficient {j}"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "Cartan formula vs flow pullback on 100 instances, worst relative error {worst:.3e} (tol 1e-5, h=1e-3)"
    ))
}

struct FlowOracle {
    chart: Chart,
    comps: Vec<Expr>,
    jac: Vec<Vec<Expr>>,
}

impl FlowOracle {
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
        FlowOracle { chart, comps, jac }
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

    /// One RK4 step of (x, J) with J' = DY(x)·J, then the pullback
    /// coefficients Σ_i a_i(Φ_t x) J^i_j.
    fn pullback(&self, a: &DiffForm, x0: &[f64], t: f64) -> Vec<f64> {
        let d = x0.len();
        let ident: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| f64::from(i == j)).collect())
            .collect();
        let deriv = |x: &[f64], j: &[Vec<f64>]| {
            let v = self.velocity(x);
            let dy = self.jacobian(x);
            let jd: Vec<Vec<f64>> = (0..d)
                .map(|r| {
                    (0..d)
                        .map(|c| (0..d).map(|m| dy[r][m] * j[m][c]).sum())
                        .collect()
                })
                .collect();
            (v, jd)
        };
        let comb = |kx: &[f64], kj: &[Vec<f64>], c: f64| {
            let xn: Vec<f64> = x0.iter().zip(kx).map(|(a, b)| a + c * b).collect();
            let jn: Vec<Vec<f64>> = ident
                .iter()
                .zip(kj)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a + c * b).collect())
                .collect();
            (xn, jn)
        };
        let (k1x, k1j) = deriv(x0, &ident);
        let (x2, j2) = comb(&k1x, &k1j, 0.5 * t);
        let (k2x, k2j) = deriv(&x2, &j2);
        let (x3, j3) = comb(&k2x, &k2j, 0.5 * t);
        let (k3x, k3j) = deriv(&x3, &j3);
        let (x4, j4) = comb(&k3x, &k3j, t);
        let (k4x, k4j) = deriv(&x4, &j4);
        let phi: Vec<f64> = (0..d)
            .map(|i| x0[i] + t / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]))
            .collect();
        let jac: Vec<Vec<f64>> = (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| {
                        ident[r][c]
                            + t / 6.0 * (k1j[r][c] + 2.0 * k2j[r][c] + 2.0 * k3j[r][c] + k4j[r][c])
                    })
                    .collect()
            })
            .collect();
        let pt = Point::new(phi);
        let mut vals = vec![0.0; d];
        for (key, coeff) in a.terms() {
            vals[key[0]] = coeff.evaluate(&self.chart, &pt).unwrap();
        }
        (0..d)
            .map(|j| (0..d).map(|i| vals[i] * jac[i][j]).sum())
            .collect()
    }
}

fn canonical_structures() -> Result<String, String> {
    for n in 1..=3 {
        for k in 1..=3 {
            let chart = Chart::new(n, k);
            for a in 1..=k {
                let omega = canonical_omega(&chart, a).unwrap();
                let d_theta = canonical_theta(&chart, a).unwrap().exterior_derivative();
                if !omega.add(&d_theta).unwrap().is_structurally_zero() {
                    return Err(format!("omega != -d theta at n={n} k={k} A={a}"));
                }
                for i in 1..=n as u32 {
                    let dir = VectorField::coordinate_basis(chart.clone(), Symbol::Q(i)).unwrap();
                    let got = omega.interior_product(&dir).unwrap();
                    let want =
                        DiffForm::basis_one_form(chart.clone(), Symbol::P(a as u32, i)).unwrap();
                    if !got.sub(&want).unwrap().is_structurally_zero() {
                        return Err(format!("i(d/dq_{i}) omega^{a} != dp at n={n} k={k}"));
                    }
                }
            }
        }
    }
    Ok("omega^A = -d theta^A and i(∂/∂q_i)omega^A = dp^A_i exactly, n,k <= 3".to_string())
}

fn kernel_characterization(zero: &ZeroTest) -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5E1F_0004);
    for count in 0..100 {
        let n = 1 + count % 3;
        let k = 1 + (count / 3) % 3;
        let chart = Chart::new(n, k);
        let x = if count % 2 == 0 {
            let fields = (0..k)
                .map(|_| random_vector_field(&mut rng, &chart, 2))
                .collect::<Vec<_>>();
            KVectorField::new(fields).unwrap()
        } else {
            random_kernel_element(&mut rng, &chart)
        };
        let via_sharp = x.in_kernel(zero).map_err(|e| e.to_string())?;
        let mut explicit = true;
        for a in 1..=k {
            for i in 0..n {
                explicit &= zero
                    .verdict(x.field(a).component(i), &chart)
                    .map_err(|e| e.to_string())?
                    .is_zeroish();
            }
        }
        for i in 1..=n as u32 {
            let mut trace = Expr::zero();
            for a in 1..=k as u32 {
                let idx = chart.coordinate_index(Symbol::P(a, i)).unwrap();
                trace = Expr::add(trace, x.field(a as usize).component(idx).clone());
            }
            explicit &= zero
                .verdict(&trace, &chart)
                .map_err(|e| e.to_string())?
                .is_zeroish();
        }
        if via_sharp != explicit {
            return Err(format!(
                "kernel characterization mismatch on instance {count}"
            ));
        }
    }
    Ok("in_kernel ⟺ explicit local conditions on 100 random k-vector fields".to_string())
}

fn random_kernel_element(rng: &mut StdRng, chart: &Chart) -> KVectorField {
    let n = chart.n();
    let k = chart.k();
    let mut comps: Vec<Vec<Expr>> = vec![vec![Expr::zero(); chart.dim()]; k];
    for (a, field) in comps.iter_mut().enumerate() {
        for b in 1..=k as u32 {
            for i in 1..=n as u32 {
                if !(a == k - 1 && b as usize == k) {
                    let idx = chart.coordinate_index(Symbol::P(b, i)).unwrap();
                    field[idx] = random_poly(rng, chart, 2, 2);
                }
            }
        }
    }
    for i in 1..=n as u32 {
        let mut acc = Expr::zero();
        for a in 1..k as u32 {
            let idx = chart.coordinate_index(Symbol::P(a, i)).unwrap();
            acc = Expr::add(acc, comps[a as usize - 1][idx].clone());
        }
        let idx = chart.coordinate_index(Symbol::P(k as u32, i)).unwrap();
        comps[k - 1][idx] = Expr::neg(acc).normalize();
    }
    KVectorField::new(
        comps
            .into_iter()
            .map(|c| VectorField::new(chart.clone(), c).unwrap())
            .collect(),
    )
    .unwrap()
}

fn lift_naturality(zero: &ZeroTest) -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5E1F_0005);
    for count in 0..50 {
        let n = 1 + count % 2;
        let k = 1 + (count / 2) % 2;
        let chart = Chart::new(n, k);
        let comps: Vec<Expr> = (0..n)
            .map(|_| {
                // q-only polynomial of degree <= 3
                let mut acc = Expr::int(rng.gen_range(-2..=2));
                for _ in 0..rng.gen_range(1..=3usize) {
                    let mut term = Expr::int(rng.gen_range(-2..=2i64));
                    for _ in 0..rng.gen_range(1..=3u32) {
                        term = Expr::mul(term, Expr::sym(Symbol::Q(rng.gen_range(1..=n as u32))));
                    }
                    acc = Expr::add(acc, term);
                }
                acc.normalize()
            })
            .collect();
        let lift = QVectorField::new(chart.clone(), comps)
            .unwrap()
            .canonical_lift();
        for a in 1..=k {
            let theta = canonical_theta(&chart, a).unwrap();
            if !theta.lie_derivative(&lift).unwrap().is_structurally_zero() {
                return Err(format!("L(Z-lift)theta != 0 on instance {count}"));
            }
        }
        // Consequence: every lift classifies at order 1.
        let h = random_poly(&mut rng, &chart, 3, 2);
        let sys = HamiltonianSystem::new(chart.clone(), h).unwrap();
        let report = classify_cartan_order(&sys, &lift, 3, zero).map_err(|e| e.to_string())?;
        if report.order != Some(1) {
            return Err(format!(
                "lift did not classify at order 1 on instance {count}"
            ));
        }
    }
    Ok(
        "L(Z^{C*})theta^A = 0 exactly for 50 random polynomial Z; all lifts classify at order 1"
            .to_string(),
    )
}

fn particular_residual() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5E1F_0006);
    for count in 0..50 {
        let chart = Chart::new(1 + count % 3, 1 + (count / 3) % 3);
        let h = random_poly(&mut rng, &chart, 4, 3);
        let sys = HamiltonianSystem::new(chart.clone(), h).unwrap();
        let x = particular_kvector(&sys);
        if !field_equation_residual(&sys, &x)
            .unwrap()
            .is_structurally_zero()
        {
            return Err(format!("particular residual nonzero on instance {count}"));
        }
    }
    Ok("omega#(X_H) = dH exactly for 50 random polynomial Hamiltonians".to_string())
}

fn oscillator() -> HamiltonianSystem {
    let chart = Chart::new(1, 1);
    let h = parse("(q_1^2 + p_1_1^2)/2", &chart).unwrap();
    HamiltonianSystem::new(chart, h).unwrap()
}

fn oscillator_accuracy(zero: &ZeroTest) -> Result<String, String> {
    let sys = oscillator();
    let x = particular_kvector(&sys);
    let start = Point::new(vec![0.0, 1.0]);
    let axes = [GridAxis {
        origin: 0.0,
        spacing: 1e-3,
        count: 1001,
    }];
    let grid =
        integrate_section(&x, &start, &axes, DEFAULT_TOL_PATH, zero).map_err(|e| e.to_string())?;
    let mut max_err = 0.0f64;
    for j in 0..1001 {
        let t = j as f64 * 1e-3;
        let pt = grid.point_at(&[j]);
        max_err = max_err
            .max((pt.coords()[0] - t.sin()).abs())
            .max((pt.coords()[1] - t.cos()).abs());
    }
    if max_err > 1e-9 {
        return Err(format!("trajectory error {max_err:.3e} > 1e-9"));
    }
    // Energy drift over 10^4 steps.
    let axes = [GridAxis {
        origin: 0.0,
        spacing: 1e-3,
        count: 10_001,
    }];
    let grid =
        integrate_section(&x, &start, &axes, DEFAULT_TOL_PATH, zero).map_err(|e| e.to_string())?;
    let chart = sys.chart();
    let energy = |j: usize| {
        sys.hamiltonian()
            .evaluate(chart, &grid.point_at(&[j]))
            .unwrap()
    };
    let e0 = energy(0);
    let mut drift = 0.0f64;
    for j in 0..10_001 {
        drift = drift.max((energy(j) - e0).abs());
    }
    if drift > 1e-8 {
        return Err(format!("energy drift {drift:.3e} > 1e-8"));
    }
    Ok(format!(
        "harmonic oscillator matches (sin t, cos t) to {max_err:.3e}; energy drift {drift:.3e} over 10^4 steps"
    ))
}

fn laplace_system() -> HamiltonianSystem {
    let chart = Chart::new(1, 2);
    let h = parse("(p_1_1^2 + p_2_1^2)/2", &chart).unwrap();
    HamiltonianSystem::new(chart, h).unwrap()
}

fn laplace_exact_section(sys: &HamiltonianSystem) -> AnalyticSection {
    let chart = sys.chart();
    AnalyticSection::new(
        chart.clone(),
        vec![
            parse("t_1*t_2", chart).unwrap(),
            parse("t_2", chart).unwrap(),
            parse("t_1", chart).unwrap(),
        ],
    )
    .unwrap()
}

fn laplace_end_to_end(zero: &ZeroTest) -> Result<String, String> {
    let sys = laplace_system();
    let chart = sys.chart();
    let y = QVectorField::new(chart.clone(), vec![Expr::one()])
        .unwrap()
        .canonical_lift();
    let report = classify_cartan_order(&sys, &y, 5, zero).map_err(|e| e.to_string())?;
    if report.order != Some(1) || !report.lie_h_zero() {
        return Err("translation lift did not classify as order 1 preserving H".to_string());
    }
    let base = Point::new(vec![0.0, 0.0, 0.0]);
    let cq = noether_charge(&sys, &y, 1, &base, zero).map_err(|e| e.to_string())?;
    let want = [Expr::sym(Symbol::P(1, 1)), Expr::sym(Symbol::P(2, 1))];
    for (a, expected) in want.iter().enumerate() {
        if cq.g[a].closed_form() != Some(expected) {
            return Err(format!("charge g^{} is not p^{}_1", a + 1, a + 1));
        }
    }
    let exprs: Vec<Expr> = want.to_vec();
    let sym = conservation_check_symbolic(&sys, &exprs, &particular_kvector(&sys), zero)
        .map_err(|e| e.to_string())?;
    if sym != Verdict::Zero {
        return Err(format!("symbolic conservation verdict {sym:?}"));
    }
    let axes = [
        GridAxis {
            origin: 0.0,
            spacing: 0.01,
            count: 101,
        },
        GridAxis {
            origin: 0.0,
            spacing: 0.01,
            count: 101,
        },
    ];
    let grid = laplace_exact_section(&sys)
        .sample_grid(&axes)
        .map_err(|e| e.to_string())?;
    let hdw = hdw_residual_grid(&sys, &grid).map_err(|e| e.to_string())?;
    if hdw > 1e-10 {
        return Err(format!("exact grid HDW residual {hdw:.3e} > 1e-10"));
    }
    let sup = conservation_check_numeric(&cq.g, &grid).map_err(|e| e.to_string())?;
    if sup > 1e-12 {
        return Err(format!("numeric divergence {sup:.3e} > 1e-12"));
    }
    Ok(format!(
        "g = (p_1_1, p_2_1); symbolic zero; numeric divergence {sup:.3e}; grid HDW residual {hdw:.3e}"
    ))
}

fn inverse_q_system() -> HamiltonianSystem {
    let chart = Chart::new(1, 1);
    let h = parse("p_1_1/q_1", &chart).unwrap();
    HamiltonianSystem::new(chart, h).unwrap()
}

fn order2_end_to_end(zero: &ZeroTest) -> Result<String, String> {
    let sys = inverse_q_system();
    let chart = sys.chart();
    let y = VectorField::new(
        chart.clone(),
        vec![Expr::one(), parse("p_1_1/q_1", chart).unwrap()],
    )
    .unwrap();
    let report = classify_cartan_order(&sys, &y, 5, zero).map_err(|e| e.to_string())?;
    if report.order != Some(2) || report.residuals[0][0] != Verdict::NonZero || !report.lie_h_zero()
    {
        return Err(format!("classification wrong: order {:?}", report.order));
    }
    let base = Point::new(vec![1.0, 0.0]);
    let cq = noether_charge(&sys, &y, 2, &base, zero).map_err(|e| e.to_string())?;
    let want = parse("p_1_1/q_1", chart).unwrap().normalize();
    let Some(g) = cq.g[0].closed_form() else {
        return Err("charge is not in closed form".to_string());
    };
    if g != &want {
        return Err(format!("charge {g} != p/q"));
    }
    if !cq.route_agreement[0].is_zeroish() {
        return Err("theta-route disagrees with homotopy route".to_string());
    }
    let x = particular_kvector(&sys);
    let start = Point::new(vec![1.0, 1.0]);
    let axes = [GridAxis {
        origin: 0.0,
        spacing: 1e-3,
        count: 1001,
    }];
    let grid =
        integrate_section(&x, &start, &axes, DEFAULT_TOL_PATH, zero).map_err(|e| e.to_string())?;
    let sup = conservation_check_numeric(&cq.g, &grid).map_err(|e| e.to_string())?;
    if sup > 1e-8 {
        return Err(format!("numeric divergence {sup:.3e} > 1e-8"));
    }
    Ok(format!(
        "order 2 exact (order-1 residual nonzero); g = p_1_1/q_1 closed form; routes agree; flow divergence {sup:.3e}"
    ))
}

fn quartic_harmonic_section(sys: &HamiltonianSystem) -> AnalyticSection {
    let chart = sys.chart();
    AnalyticSection::new(
        chart.clone(),
        vec![
            parse("t_1^4 - 6*t_1^2*t_2^2 + t_2^4", chart).unwrap(),
            parse("4*t_1^3 - 12*t_1*t_2^2", chart).unwrap(),
            parse("4*t_2^3 - 12*t_1^2*t_2", chart).unwrap(),
        ],
    )
    .unwrap()
}

fn refinement_order(zero: &ZeroTest) -> Result<String, String> {
    // Quartic harmonic solution of the Laplace system: residuals are
    // genuinely O(h^2), so halving h must shrink them by >= 3.5.
    let sys = laplace_system();
    let psi = quartic_harmonic_section(&sys);
    let momenta = vec![
        ChargeExpr::Closed(Expr::sym(Symbol::P(1, 1))),
        ChargeExpr::Closed(Expr::sym(Symbol::P(2, 1))),
    ];
    let grids: Vec<_> = [(0.02, 21usize), (0.01, 41)]
        .iter()
        .map(|(h, c)| {
            let axes = [
                GridAxis {
                    origin: 0.0,
                    spacing: *h,
                    count: *c,
                },
                GridAxis {
                    origin: 0.0,
                    spacing: *h,
                    count: *c,
                },
            ];
            psi.sample_grid(&axes).unwrap()
        })
        .collect();
    let div: Vec<f64> = grids
        .iter()
        .map(|g| conservation_check_numeric(&momenta, g).unwrap())
        .collect();
    let hdw: Vec<f64> = grids
        .iter()
        .map(|g| hdw_residual_grid(&sys, g).unwrap())
        .collect();
    let div_ratio = div[0] / div[1];
    let hdw_ratio = hdw[0] / hdw[1];

    // RK4 flow grid of the order-2 system.
    let sys2 = inverse_q_system();
    let x = particular_kvector(&sys2);
    let start = Point::new(vec![1.0, 1.0]);
    let flow_res: Vec<f64> = [(1e-3, 1001usize), (5e-4, 2001)]
        .iter()
        .map(|(h, c)| {
            let axes = [GridAxis {
                origin: 0.0,
                spacing: *h,
                count: *c,
            }];
            let grid = integrate_section(&x, &start, &axes, DEFAULT_TOL_PATH, zero).unwrap();
            hdw_residual_grid(&sys2, &grid).unwrap()
        })
        .collect();
    let flow_ratio = flow_res[0] / flow_res[1];

    for (name, ratio) in [
        ("divergence", div_ratio),
        ("hdw", hdw_ratio),
        ("flow-hdw", flow_ratio),
    ] {
        if ratio < 3.5 {
            return Err(format!("{name} residual ratio {ratio:.2} < 3.5"));
        }
    }
    Ok(format!(
        "h -> h/2 residual ratios: divergence {div_ratio:.2}, HDW {hdw_ratio:.2}, RK4-flow HDW {flow_ratio:.2} (all >= 3.5)"
    ))
}

fn negative_controls(zero: &ZeroTest) -> Result<String, String> {
    // (a) F = (q, 0) fails numeric verification visibly.
    let sys = laplace_system();
    let axes = [
        GridAxis {
            origin: 0.0,
            spacing: 0.01,
            count: 101,
        },
        GridAxis {
            origin: 0.0,
            spacing: 0.01,
            count: 101,
        },
    ];
    let grid = laplace_exact_section(&sys)
        .sample_grid(&axes)
        .map_err(|e| e.to_string())?;
    let wrong = vec![
        ChargeExpr::Closed(Expr::sym(Symbol::Q(1))),
        ChargeExpr::Closed(Expr::zero()),
    ];
    let sup = conservation_check_numeric(&wrong, &grid).map_err(|e| e.to_string())?;
    if sup <= 1e-6 {
        return Err(format!("wrong quantity passed with sup {sup:.3e}"));
    }

    // (b) Y = q∂/∂q has no order <= 5.
    let sys2 = inverse_q_system();
    let chart = sys2.chart();
    let y = VectorField::new(chart.clone(), vec![Expr::sym(Symbol::Q(1)), Expr::zero()]).unwrap();
    let report = classify_cartan_order(&sys2, &y, 5, zero).map_err(|e| e.to_string())?;
    if report.order.is_some() {
        return Err("dilation unexpectedly classified".to_string());
    }

    // (c) Non-commuting k-vector field triggers the non-integrable error.
    let chart = Chart::new(1, 2);
    let x = KVectorField::new(vec![
        VectorField::new(
            chart.clone(),
            vec![Expr::sym(Symbol::Q(1)), Expr::zero(), Expr::zero()],
        )
        .unwrap(),
        VectorField::new(
            chart.clone(),
            vec![Expr::sym(Symbol::P(1, 1)), Expr::zero(), Expr::zero()],
        )
        .unwrap(),
    ])
    .unwrap();
    let axes = [
        GridAxis {
            origin: 0.0,
            spacing: 1e-3,
            count: 101,
        },
        GridAxis {
            origin: 0.0,
            spacing: 1e-3,
            count: 101,
        },
    ];
    match integrate_section(&x, &Point::new(vec![1.0, 1.0, 1.0]), &axes, 1e-6, zero) {
        Err(ksym_core::Error::NonIntegrable { residual, .. }) => Ok(format!(
            "wrong quantity fails (sup {sup:.3e}); dilation unclassified; non-integrable error at residual {residual:.3e}"
        )),
        other => Err(format!("expected non-integrable error, got {other:?}")),
    }
}
