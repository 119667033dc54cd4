//! Order-n Cartan symmetry classification, conserved quantities via the
//! Poincaré-lemma homotopy operator, and conservation verification.
//!
//! A candidate Y has order n when Lⁿ(Y)ωᴬ vanishes for every A but no
//! smaller iterate does. The charge components come from integrating the
//! closed 1-forms L^{n−1}(Y)i(Y)ωᴬ; a second route through θᴬ uses
//! gᴬ = L^{n−1}(Y)i(Y)θᴬ − ξᴬ with Lⁿ(Y)θᴬ = dξᴬ, and the two routes
//! must agree up to additive constants. Flow-based symmetry itself is
//! not decidable symbolically, so reports carry the bracket condition
//! [Y, X] ∈ ker ω♯ as necessary-condition evidence only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{Chart, Point, Symbol};
use crate::error::{Error, Result};
use crate::expr::{Expr, Verdict, ZeroTest};
use crate::forms::{canonical_omega, canonical_theta, DiffForm, KVectorField, VectorField};
use crate::hdw::{field_equation_residual, particular_kvector, HamiltonianSystem, SolutionGrid};

/// Default Gauss–Legendre order of the quadrature-backed evaluator.
pub const DEFAULT_GL_ORDER: usize = 32;

/// Classification result for one symmetry candidate.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    /// The candidate this report describes.
    pub candidate: VectorField,
    /// Smallest n ≤ n_max with Lⁿ(Y)ωᴬ = 0 for all A, if any.
    pub order: Option<usize>,
    /// Verdict on L(Y)H.
    pub lie_h: Verdict,
    /// Per-iterate, per-A residual verdicts: `residuals[m-1][a-1]`.
    pub residuals: Vec<Vec<Verdict>>,
    /// Necessary-condition evidence only: [Y, X] ∈ ker ω♯ for the
    /// particular solution X. A false value does not refute condition 1
    /// of the order-n definition being checked elsewhere; conservation
    /// is verified independently of it.
    pub bracket_in_kernel: bool,
}

impl SymmetryReport {
    pub fn lie_h_zero(&self) -> bool {
        self.lie_h.is_zeroish()
    }
}

/// Classify the Cartan order of Y against a Hamiltonian system.
pub fn classify_cartan_order(
    sys: &HamiltonianSystem,
    y: &VectorField,
    n_max: usize,
    zero: &ZeroTest,
) -> Result<SymmetryReport> {
    assert!(n_max >= 1, "n_max must be positive");
    if sys.chart() != y.chart() {
        return Err(Error::ChartMismatch);
    }
    let chart = sys.chart();
    let k = chart.k();
    let mut current: Vec<DiffForm> = (1..=k)
        .map(|a| canonical_omega(chart, a).expect("A in range"))
        .collect();
    let mut residuals: Vec<Vec<Verdict>> = Vec::new();
    let mut order = None;
    for m in 1..=n_max {
        let mut round = Vec::with_capacity(k);
        for form in current.iter_mut() {
            *form = form.lie_derivative(y)?;
            round.push(form_verdict(form, chart, zero)?);
        }
        let all_zero = round.iter().all(|v| v.is_zeroish());
        residuals.push(round);
        if all_zero {
            order = Some(m);
            break;
        }
    }
    let lie_h = zero.verdict(&y.apply(sys.hamiltonian()), chart)?;
    let bracket_in_kernel = bracket_kernel_check(y, &particular_kvector(sys), zero)?;
    Ok(SymmetryReport {
        candidate: y.clone(),
        order,
        lie_h,
        residuals,
        bracket_in_kernel,
    })
}

/// Worst-case verdict over all coefficients of a form.
fn form_verdict(form: &DiffForm, chart: &Chart, zero: &ZeroTest) -> Result<Verdict> {
    let mut out = Verdict::Zero;
    for coeff in form.coefficients() {
        match zero.verdict(&coeff, chart)? {
            Verdict::NonZero => return Ok(Verdict::NonZero),
            Verdict::ProbablyZero => out = Verdict::ProbablyZero,
            Verdict::Zero => {}
        }
    }
    Ok(out)
}

/// The 1-forms L^{n−1}(Y) i(Y) ωᴬ, one per A.
fn charge_one_forms(chart: &Chart, y: &VectorField, n: usize) -> Result<Vec<DiffForm>> {
    (1..=chart.k())
        .map(|a| {
            let omega = canonical_omega(chart, a).expect("A in range");
            let contracted = omega.interior_product(y)?;
            if n == 1 {
                Ok(contracted)
            } else {
                contracted.lie_derivative_iterated(y, n - 1)
            }
        })
        .collect()
}

/// Consistency assertion behind the generalized Noether theorem: once a
/// candidate has order n, every d(L^{n−1}(Y)i(Y)ωᴬ) must vanish. A
/// NonZero verdict here signals an engine bug, not a user error.
pub fn closedness_check(
    chart: &Chart,
    y: &VectorField,
    n: usize,
    zero: &ZeroTest,
) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    for (a, form) in charge_one_forms(chart, y, n)?.into_iter().enumerate() {
        let verdict = form_verdict(&form.exterior_derivative(), chart, zero)?;
        if verdict == Verdict::NonZero {
            return Err(Error::InternalInconsistency(format!(
                "d(L^{}(Y) i(Y) omega^{}) is nonzero for an order-{} candidate",
                n - 1,
                a + 1,
                n
            )));
        }
        out.push(verdict);
    }
    Ok(out)
}

/// A charge component: closed-form expression, or a quadrature-backed
/// evaluator with the same evaluation interface.
#[derive(Debug, Clone)]
pub enum ChargeExpr {
    Closed(Expr),
    Quadrature(HomotopyQuadrature),
}

impl ChargeExpr {
    pub fn closed_form(&self) -> Option<&Expr> {
        match self {
            ChargeExpr::Closed(e) => Some(e),
            ChargeExpr::Quadrature(_) => None,
        }
    }

    pub fn evaluate(&self, chart: &Chart, pt: &Point) -> Result<f64> {
        match self {
            ChargeExpr::Closed(e) => e.evaluate(chart, pt),
            ChargeExpr::Quadrature(q) => q.evaluate(pt),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ChargeExpr::Closed(e) => e.to_string(),
            ChargeExpr::Quadrature(q) => format!(
                "quadrature(order={}, base=({}))",
                q.order,
                q.base
                    .coords()
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }
}

/// Gauss–Legendre evaluator for ξ(x) = ∫₀¹ β_j(x₀+s(x−x₀))·(x−x₀)ʲ ds.
#[derive(Debug, Clone)]
pub struct HomotopyQuadrature {
    beta: DiffForm,
    base: Point,
    order: usize,
    nodes: Vec<(f64, f64)>,
}

impl HomotopyQuadrature {
    fn new(beta: DiffForm, base: Point, order: usize) -> Self {
        let nodes = gauss_legendre_unit(order);
        HomotopyQuadrature {
            beta,
            base,
            order,
            nodes,
        }
    }

    pub fn evaluate(&self, pt: &Point) -> Result<f64> {
        let chart = self.beta.chart();
        let x0 = self.base.coords();
        let x = pt.coords();
        let mut total = 0.0;
        for (s, w) in &self.nodes {
            let gamma: Vec<f64> = x0.iter().zip(x).map(|(a, b)| a + s * (b - a)).collect();
            let gpt = Point::new(gamma);
            let mut val = 0.0;
            for (key, coeff) in self.beta.terms() {
                let j = key[0];
                let c = coeff
                    .evaluate(chart, &gpt)
                    .map_err(|e| Error::SingularityOnSegment(e.to_string()))?;
                val += c * (x[j] - x0[j]);
            }
            total += w * val;
        }
        Ok(total)
    }
}

/// Nodes and weights of Gauss–Legendre quadrature on [0, 1], by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre_unit(order: usize) -> Vec<(f64, f64)> {
    assert!(order >= 1);
    let n = order;
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Primitive of a closed 1-form vanishing at `base`.
///
/// Closed-form attempts, in order: the radial homotopy integrand when it
/// is polynomial in the path parameter; an axis-parallel path whose
/// per-segment integrands have monomial denominators in the integration
/// variable (this admits log terms and covers rational forms like
/// d(p/q)). Each closed-form candidate is verified by d(result) − β
/// before being returned; otherwise a Gauss–Legendre evaluator of the
/// radial formula is returned and verified pointwise by finite
/// differences to 1e-8.
pub fn homotopy_antiderivative(
    beta: &DiffForm,
    base: &Point,
    zero: &ZeroTest,
) -> Result<ChargeExpr> {
    homotopy_antiderivative_with(beta, base, zero, DEFAULT_GL_ORDER)
}

pub fn homotopy_antiderivative_with(
    beta: &DiffForm,
    base: &Point,
    zero: &ZeroTest,
    gl_order: usize,
) -> Result<ChargeExpr> {
    assert_eq!(beta.degree(), 1, "homotopy operator acts on 1-forms");
    let chart = beta.chart().clone();
    if base.coords().len() != chart.dim() {
        return Err(Error::ComponentCount {
            expected: chart.dim(),
            actual: base.coords().len(),
        });
    }
    if form_verdict(&beta.exterior_derivative(), &chart, zero)? == Verdict::NonZero {
        return Err(Error::NotClosed);
    }

    if let Some(xi) = radial_closed_form(beta, base, &chart) {
        if verified_primitive(&xi, beta, base, &chart, zero) {
            return Ok(ChargeExpr::Closed(xi));
        }
    }
    if let Some(xi) = axis_path_closed_form(beta, base, &chart) {
        if verified_primitive(&xi, beta, base, &chart, zero) {
            return Ok(ChargeExpr::Closed(xi));
        }
    }

    let quad = HomotopyQuadrature::new(beta.clone(), base.clone(), gl_order);
    verify_quadrature(&quad, beta, &chart, zero)?;
    Ok(ChargeExpr::Quadrature(quad))
}

fn rational_of(v: f64) -> Expr {
    Expr::Const(
        num_rational::BigRational::from_float(v).expect("grid and base coordinates are finite"),
    )
}

/// Radial route: substitute x → x₀ + s(x − x₀) and integrate exactly
/// when the integrand is polynomial in s.
fn radial_closed_form(beta: &DiffForm, base: &Point, chart: &Chart) -> Option<Expr> {
    let mut subst = std::collections::BTreeMap::new();
    for (idx, sym) in chart.coordinates().enumerate() {
        let x0 = rational_of(base.coords()[idx]);
        let offset = Expr::sub(Expr::sym(sym), x0.clone());
        subst.insert(sym, Expr::add(x0, Expr::mul(Expr::sym(Symbol::S), offset)));
    }
    let mut integrand = Expr::zero();
    for (key, coeff) in beta.terms() {
        let sym = chart.coordinate_at(key[0]);
        let x0 = rational_of(base.coords()[key[0]]);
        let moved = coeff.substitute(&subst);
        integrand = Expr::add(integrand, Expr::mul(moved, Expr::sub(Expr::sym(sym), x0)));
    }
    crate::expr::integrate_unit_interval_s(&integrand.normalize())
}

/// Axis-parallel route: integrate β_j along the j-th coordinate segment
/// with earlier coordinates final and later ones at base.
fn axis_path_closed_form(beta: &DiffForm, base: &Point, chart: &Chart) -> Option<Expr> {
    let coords: Vec<Symbol> = chart.coordinates().collect();
    let mut total = Expr::zero();
    for (j, sym_j) in coords.iter().enumerate() {
        let coeff = beta.coefficient(&[j]);
        if coeff.is_zero_const() {
            continue;
        }
        let mut subst = std::collections::BTreeMap::new();
        subst.insert(*sym_j, Expr::sym(Symbol::S));
        for (m, sym_m) in coords.iter().enumerate().skip(j + 1) {
            subst.insert(*sym_m, rational_of(base.coords()[m]));
        }
        let integrand = coeff.substitute(&subst);
        let primitive = crate::expr::antiderivative_in_s(&integrand)?;
        let upper = {
            let mut m = std::collections::BTreeMap::new();
            m.insert(Symbol::S, Expr::sym(*sym_j));
            primitive.substitute(&m)
        };
        let lower = {
            let mut m = std::collections::BTreeMap::new();
            m.insert(Symbol::S, rational_of(base.coords()[j]));
            primitive.substitute(&m)
        };
        total = Expr::add(total, Expr::sub(upper, lower));
    }
    let total = total.normalize();
    if total.depends_on(Symbol::S) {
        return None;
    }
    Some(total)
}

/// A closed-form candidate must verify d(ξ) = β and vanish at the base
/// point. The base check also rejects expressions that smuggle in
/// undefined constants (e.g. a log evaluated across a singularity): the
/// d-check alone cannot see them.
fn verified_primitive(
    xi: &Expr,
    beta: &DiffForm,
    base: &Point,
    chart: &Chart,
    zero: &ZeroTest,
) -> bool {
    let d_xi = DiffForm::function(chart.clone(), xi.clone()).exterior_derivative();
    let Ok(diff) = d_xi.sub(beta) else {
        return false;
    };
    if !matches!(form_verdict(&diff, chart, zero), Ok(v) if v.is_zeroish()) {
        return false;
    }
    matches!(xi.evaluate(chart, base), Ok(v) if v.abs() <= 1e-9)
}

/// Pointwise validation of the quadrature evaluator: Gauss–Legendre at
/// doubled order must reproduce the value (exponential convergence holds
/// only on singularity-free segments), and finite differences must
/// recover β to 1e-8.
fn verify_quadrature(
    quad: &HomotopyQuadrature,
    beta: &DiffForm,
    chart: &Chart,
    zero: &ZeroTest,
) -> Result<()> {
    let refined = HomotopyQuadrature::new(beta.clone(), quad.base.clone(), 2 * quad.order);
    let mut rng = ChaCha8Rng::seed_from_u64(zero.seed ^ 0x9E3779B9);
    let delta = 1e-5;
    for _ in 0..3 {
        let coords: Vec<f64> = (0..chart.dim())
            .map(|i| {
                let (lo, hi) = chart.coord_box(i);
                // Keep the finite-difference stencil inside the box.
                lo + delta + rng.gen::<f64>() * (hi - lo - 2.0 * delta)
            })
            .collect();
        let pt = Point::new(coords.clone());
        let coarse = quad.evaluate(&pt)?;
        let fine = refined.evaluate(&pt)?;
        if !coarse.is_finite() || (coarse - fine).abs() > 1e-6 * (1.0 + coarse.abs()) {
            return Err(Error::SingularityOnSegment(format!(
                "quadrature does not converge on the segment (order {} vs {}: {coarse} vs {fine})",
                quad.order, refined.order
            )));
        }
        for m in 0..chart.dim() {
            let mut plus = coords.clone();
            plus[m] += delta;
            let mut minus = coords.clone();
            minus[m] -= delta;
            let fd = (quad.evaluate(&Point::new(plus))? - quad.evaluate(&Point::new(minus))?)
                / (2.0 * delta);
            let want = beta
                .coefficient(&[m])
                .evaluate(chart, &Point::new(coords.clone()))
                .map_err(|e| Error::SingularityOnSegment(e.to_string()))?;
            if (fd - want).abs() > 1e-8 * (1.0 + want.abs()) {
                return Err(Error::InternalInconsistency(format!(
                    "quadrature primitive mismatch: d/dx_{m} = {fd}, beta = {want}"
                )));
            }
        }
    }
    Ok(())
}

/// Provenance of a conserved quantity's components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    HomotopyRoute,
    ThetaRoute,
    UserSupplied,
}

/// A k-tuple of charge components with the data needed to audit them.
#[derive(Debug, Clone)]
pub struct ConservedQuantity {
    pub g: Vec<ChargeExpr>,
    pub xi: Vec<ChargeExpr>,
    pub base: Point,
    pub provenance: Provenance,
    /// Per-A verdict that the homotopy and θ routes agree (up to the
    /// additive constant fixed by the base point).
    pub route_agreement: Vec<Verdict>,
}

/// Construct the conserved quantity of an order-n candidate.
///
/// Primary route: gᴬ from the homotopy primitive of L^{n−1}(Y)i(Y)ωᴬ.
/// Cross-check route: ξᴬ from Lⁿ(Y)θᴬ and g̃ᴬ = L^{n−1}(Y)i(Y)θᴬ − ξᴬ
/// (for n = 1 this is the classical gᴬ = i(Y)θᴬ − ξᴬ). The two routes
/// must agree up to additive constants; disagreement is an error, never
/// silently patched.
pub fn noether_charge(
    sys: &HamiltonianSystem,
    y: &VectorField,
    n: usize,
    base: &Point,
    zero: &ZeroTest,
) -> Result<ConservedQuantity> {
    assert!(n >= 1);
    if sys.chart() != y.chart() {
        return Err(Error::ChartMismatch);
    }
    let chart = sys.chart().clone();
    let k = chart.k();
    let betas = charge_one_forms(&chart, y, n)?;
    let mut g = Vec::with_capacity(k);
    let mut xi = Vec::with_capacity(k);
    let mut route_agreement = Vec::with_capacity(k);
    for a in 1..=k {
        let beta = &betas[a - 1];
        let g_a = homotopy_antiderivative(beta, base, zero)?;

        let theta = canonical_theta(&chart, a).expect("A in range");
        let ln_theta = theta.lie_derivative_iterated(y, n)?;
        let xi_a = homotopy_antiderivative(&ln_theta, base, zero)?;

        // L^{n-1}(Y) i(Y) θᴬ is a function.
        let i_theta = theta.interior_product(y)?;
        let lead = if n == 1 {
            i_theta.clone()
        } else {
            i_theta.lie_derivative_iterated(y, n - 1)?
        };
        let lead_expr = lead.coefficient(&[]);

        let verdict = match (g_a.closed_form(), xi_a.closed_form()) {
            (Some(g_expr), Some(xi_expr)) => {
                let g_tilde = Expr::sub(lead_expr.clone(), xi_expr.clone());
                let diff = Expr::sub(g_expr.clone(), g_tilde);
                let d_diff = DiffForm::function(chart.clone(), diff).exterior_derivative();
                form_verdict(&d_diff, &chart, zero)?
            }
            _ => {
                // 1-form level identity: β = d(L^{n−1}(Y)i(Y)θᴬ) − Lⁿ(Y)θᴬ.
                let d_lead =
                    DiffForm::function(chart.clone(), lead_expr.clone()).exterior_derivative();
                let residual = beta.sub(&d_lead)?.add(&ln_theta)?;
                form_verdict(&residual, &chart, zero)?
            }
        };
        if verdict == Verdict::NonZero {
            return Err(Error::RouteMismatch { component: a });
        }
        g.push(g_a);
        xi.push(xi_a);
        route_agreement.push(verdict);
    }
    Ok(ConservedQuantity {
        g,
        xi,
        base: base.clone(),
        provenance: Provenance::HomotopyRoute,
        route_agreement,
    })
}

/// Symbolic conservation criterion Σ_A L(X_A) F_A = 0 along a solution
/// field X of the geometric equation.
pub fn conservation_check_symbolic(
    sys: &HamiltonianSystem,
    f: &[Expr],
    x: &KVectorField,
    zero: &ZeroTest,
) -> Result<Verdict> {
    if f.len() != sys.chart().k() {
        return Err(Error::ComponentCount {
            expected: sys.chart().k(),
            actual: f.len(),
        });
    }
    let residual = field_equation_residual(sys, x)?;
    if form_verdict(&residual, sys.chart(), zero)? == Verdict::NonZero {
        return Err(Error::Precondition(
            "X does not solve the field equation".into(),
        ));
    }
    let mut acc = Expr::zero();
    for (a, f_a) in f.iter().enumerate() {
        acc = Expr::add(acc, x.field(a + 1).apply(f_a));
    }
    zero.verdict(&acc.normalize(), sys.chart())
}

/// Discrete divergence check: sup-norm over interior grid nodes of
/// Σ_A central-difference ∂(F_A∘ψ)/∂t_A.
pub fn conservation_check_numeric(f: &[ChargeExpr], grid: &SolutionGrid) -> Result<f64> {
    let chart = grid.chart();
    let k = chart.k();
    if f.len() != k {
        return Err(Error::ComponentCount {
            expected: k,
            actual: f.len(),
        });
    }
    for (axis, ax) in grid.axes().iter().enumerate() {
        if ax.count < 3 {
            return Err(Error::GridTooSmall {
                axis: axis + 1,
                required: 3,
                actual: ax.count,
            });
        }
    }
    let interior = grid.interior_nodes();
    let mut sup = 0.0f64;
    for multi in interior {
        let mut div = 0.0;
        for a in 0..k {
            let mut plus = multi.clone();
            plus[a] += 1;
            let mut minus = multi.clone();
            minus[a] -= 1;
            let fp = f[a].evaluate(chart, &grid.point_at(&plus))?;
            let fm = f[a].evaluate(chart, &grid.point_at(&minus))?;
            div += (fp - fm) / (2.0 * grid.axes()[a].spacing);
        }
        sup = sup.max(div.abs());
    }
    Ok(sup)
}

/// Necessary condition on infinitesimal symmetries: [Y, X] ∈ ker ω♯.
pub fn bracket_kernel_check(y: &VectorField, x: &KVectorField, zero: &ZeroTest) -> Result<bool> {
    let fields = x
        .fields()
        .iter()
        .map(|xa| y.lie_bracket(xa))
        .collect::<Result<Vec<_>>>()?;
    KVectorField::new(fields)?.in_kernel(zero)
}

/// Kernel stability under a symmetry candidate: [Y, Z] ∈ ker ω♯ for
/// Z ∈ ker ω♯.
pub fn kernel_stability_check(y: &VectorField, z: &KVectorField, zero: &ZeroTest) -> Result<bool> {
    if !z.in_kernel(zero)? {
        return Err(Error::Precondition("Z is not in ker omega-sharp".into()));
    }
    bracket_kernel_check(y, z, zero)
}
