//! Hamiltonian systems, Hamilton–de Donder–Weyl field equations,
//! particular solution k-vector fields, integrability, and numerical
//! integral sections on rectangular parameter grids.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::chart::{Chart, Point, Symbol};
use crate::error::{Error, Result};
use crate::expr::{Expr, ZeroTest};
use crate::forms::{DiffForm, KVectorField, VectorField};

/// Default path-dependence tolerance for the sweep integrator.
pub const DEFAULT_TOL_PATH: f64 = 1e-6;

/// A k-symplectic Hamiltonian system: chart plus Hamiltonian function.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSystem {
    chart: Chart,
    h: Expr,
}

impl HamiltonianSystem {
    /// The Hamiltonian may reference only chart coordinates.
    pub fn new(chart: Chart, h: Expr) -> Result<Self> {
        for sym in h.symbols() {
            if chart.coordinate_index(sym).is_none() {
                return Err(Error::ForbiddenSymbol {
                    symbol: sym.to_string(),
                });
            }
        }
        Ok(HamiltonianSystem {
            chart,
            h: h.normalize(),
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.h
    }

    /// dH as a 1-form.
    pub fn dh(&self) -> DiffForm {
        DiffForm::function(self.chart.clone(), self.h.clone()).exterior_derivative()
    }
}

/// A map ψ: ℝᵏ → chart given by one expression in t_1..t_k per
/// coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSection {
    chart: Chart,
    components: Vec<Expr>,
}

impl AnalyticSection {
    /// Components may reference only base parameters.
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<Self> {
        if components.len() != chart.dim() {
            return Err(Error::ComponentCount {
                expected: chart.dim(),
                actual: components.len(),
            });
        }
        for c in &components {
            for sym in c.symbols() {
                if !matches!(sym, Symbol::T(_)) || !chart.declares(sym) {
                    return Err(Error::ForbiddenSymbol {
                        symbol: sym.to_string(),
                    });
                }
            }
        }
        let components = components.iter().map(Expr::normalize).collect();
        Ok(AnalyticSection { chart, components })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Substitution map coordinate → component, for composing H with ψ.
    fn substitution(&self) -> BTreeMap<Symbol, Expr> {
        self.chart
            .coordinates()
            .zip(self.components.iter().cloned())
            .collect()
    }

    /// Sample ψ on a rectangular grid.
    pub fn sample_grid(&self, axes: &[GridAxis]) -> Result<SolutionGrid> {
        let layout = GridLayout::new(&self.chart, axes)?;
        let dim = self.chart.dim();
        let mut values = vec![0.0; layout.total * dim];
        for lin in 0..layout.total {
            let t = layout.t_values(lin);
            let lookup = |s: Symbol| match s {
                Symbol::T(a) => t.get(a as usize - 1).copied(),
                _ => None,
            };
            for (c, comp) in self.components.iter().enumerate() {
                values[lin * dim + c] = comp.evaluate_with(&lookup)?;
            }
        }
        Ok(SolutionGrid {
            chart: self.chart.clone(),
            axes: axes.to_vec(),
            values,
            path_residual: 0.0,
            bracket_warning: false,
        })
    }
}

/// The first prolongation ψ^(1): the k tangent-component tuples
/// ∂ψ/∂t_A, each a full coordinate vector of expressions in t.
pub fn first_prolongation(psi: &AnalyticSection) -> Vec<Vec<Expr>> {
    (1..=psi.chart.k() as u32)
        .map(|a| {
            psi.components
                .iter()
                .map(|c| c.differentiate(Symbol::T(a)))
                .collect()
        })
        .collect()
}

/// HDW residuals of an analytic section, as expressions in t:
/// first the n residuals ∂H/∂qⁱ∘ψ + Σ_A ∂ψ^A_i/∂t_A, then the n·k
/// residuals ∂H/∂p^A_i∘ψ − ∂ψⁱ/∂t_A in declared momentum order.
pub fn hdw_residual_analytic(sys: &HamiltonianSystem, psi: &AnalyticSection) -> Vec<Expr> {
    let chart = sys.chart();
    let subst = psi.substitution();
    let n = chart.n();
    let k = chart.k();
    let mut out = Vec::with_capacity(n + n * k);
    for i in 1..=n as u32 {
        let dh = sys.h.differentiate(Symbol::Q(i)).substitute(&subst);
        let mut div = Expr::zero();
        for a in 1..=k as u32 {
            let idx = chart.coordinate_index(Symbol::P(a, i)).unwrap();
            div = Expr::add(div, psi.components[idx].differentiate(Symbol::T(a)));
        }
        out.push(Expr::add(dh, div).normalize());
    }
    for a in 1..=k as u32 {
        for i in 1..=n as u32 {
            let dh = sys.h.differentiate(Symbol::P(a, i)).substitute(&subst);
            let dq = psi.components[i as usize - 1].differentiate(Symbol::T(a));
            out.push(Expr::sub(dh, dq).normalize());
        }
    }
    out
}

/// Particular solution of Σ i(X_A)ωᴬ = dH with the democratic gauge:
/// (X_A)ⁱ = ∂H/∂p^A_i and (X_A)^B_i = −(1/k)·δ_A^B·∂H/∂qⁱ.
pub fn particular_kvector(sys: &HamiltonianSystem) -> KVectorField {
    let chart = sys.chart();
    let n = chart.n();
    let k = chart.k();
    let minus_inv_k = Expr::rational(-1, k as i64);
    let fields = (1..=k as u32)
        .map(|a| {
            let mut comps = vec![Expr::zero(); chart.dim()];
            for i in 1..=n as u32 {
                comps[i as usize - 1] = sys.h.differentiate(Symbol::P(a, i));
                let idx = chart.coordinate_index(Symbol::P(a, i)).unwrap();
                comps[idx] =
                    Expr::mul(minus_inv_k.clone(), sys.h.differentiate(Symbol::Q(i))).normalize();
            }
            VectorField::new(chart.clone(), comps).expect("component count")
        })
        .collect();
    KVectorField::new(fields).expect("k fields on one chart")
}

/// ω♯(X) − dH; the zero form exactly when X solves the field equation.
pub fn field_equation_residual(sys: &HamiltonianSystem, x: &KVectorField) -> Result<DiffForm> {
    if sys.chart() != x.chart() {
        return Err(Error::ChartMismatch);
    }
    x.omega_sharp().sub(&sys.dh())
}

/// All pairwise Lie brackets [X_A, X_B], A < B; vanishing brackets are
/// the implemented sufficient criterion for integrability.
pub fn integrability_residual(x: &KVectorField) -> Vec<VectorField> {
    let k = x.chart().k();
    let mut out = Vec::new();
    for a in 1..=k {
        for b in (a + 1)..=k {
            out.push(
                x.field(a)
                    .lie_bracket(x.field(b))
                    .expect("fields share a chart"),
            );
        }
    }
    out
}

/// One rectangular grid axis in parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub origin: f64,
    pub spacing: f64,
    pub count: usize,
}

/// Row-major layout over the grid axes, last axis fastest.
struct GridLayout {
    axes: Vec<GridAxis>,
    strides: Vec<usize>,
    total: usize,
}

impl GridLayout {
    fn new(chart: &Chart, axes: &[GridAxis]) -> Result<Self> {
        if axes.len() != chart.k() {
            return Err(Error::ComponentCount {
                expected: chart.k(),
                actual: axes.len(),
            });
        }
        for ax in axes {
            if !ax.spacing.is_finite() || ax.spacing <= 0.0 || ax.count == 0 {
                return Err(Error::Precondition(
                    "grid spacings must be positive and counts nonzero".into(),
                ));
            }
        }
        let mut strides = vec![1usize; axes.len()];
        for a in (0..axes.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * axes[a + 1].count;
        }
        let total = axes.iter().map(|a| a.count).product();
        Ok(GridLayout {
            axes: axes.to_vec(),
            strides,
            total,
        })
    }

    fn linear(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(j, s)| j * s).sum()
    }

    fn multi(&self, lin: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.axes)
            .map(|(s, ax)| (lin / s) % ax.count)
            .collect()
    }

    fn t_values(&self, lin: usize) -> Vec<f64> {
        self.multi(lin)
            .iter()
            .zip(&self.axes)
            .map(|(j, ax)| ax.origin + *j as f64 * ax.spacing)
            .collect()
    }
}

/// Sampled solution ψ on a rectangular grid, with spacing metadata.
#[derive(Debug, Clone)]
pub struct SolutionGrid {
    chart: Chart,
    axes: Vec<GridAxis>,
    /// Node-major values, chart coordinates contiguous per node.
    values: Vec<f64>,
    path_residual: f64,
    bracket_warning: bool,
}

impl SolutionGrid {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Max observed path-dependence residual from the sweep audit.
    pub fn path_residual(&self) -> f64 {
        self.path_residual
    }

    /// Set when the symbolic bracket check did not certify commutation.
    pub fn bracket_warning(&self) -> bool {
        self.bracket_warning
    }

    fn layout(&self) -> GridLayout {
        GridLayout::new(&self.chart, &self.axes).expect("stored axes are valid")
    }

    fn coords_at(&self, lin: usize) -> &[f64] {
        let dim = self.chart.dim();
        &self.values[lin * dim..(lin + 1) * dim]
    }

    /// Point at a node, with parameters set to the node's t-values.
    pub fn point_at(&self, multi: &[usize]) -> Point {
        let layout = self.layout();
        let lin = layout.linear(multi);
        Point::with_params(self.coords_at(lin).to_vec(), layout.t_values(lin))
    }

    /// Interior multi-indices (all axis positions strictly inside).
    pub fn interior_nodes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let counts: Vec<usize> = self.axes.iter().map(|a| a.count).collect();
        if counts.iter().any(|&c| c < 3) {
            return out;
        }
        let mut multi: Vec<usize> = vec![1; counts.len()];
        loop {
            out.push(multi.clone());
            let mut axis = counts.len();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                multi[axis] += 1;
                if multi[axis] < counts[axis] - 1 {
                    break;
                }
                multi[axis] = 1;
            }
        }
    }

    /// Central difference of a coordinate along one axis at an interior
    /// node.
    pub fn central_difference(&self, multi: &[usize], axis: usize, coord: usize) -> f64 {
        let layout = self.layout();
        let mut plus = multi.to_vec();
        plus[axis] += 1;
        let mut minus = multi.to_vec();
        minus[axis] -= 1;
        let dim = self.chart.dim();
        let vp = self.values[layout.linear(&plus) * dim + coord];
        let vm = self.values[layout.linear(&minus) * dim + coord];
        (vp - vm) / (2.0 * self.axes[axis].spacing)
    }

    /// Export as CSV: header `t_1..t_k,q_1,..`, one row per node in
    /// row-major order (last axis fastest).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.chart.k()).map(|a| format!("t_{a}")).collect();
        header.extend(self.chart.coordinates().map(|c| c.to_string()));
        wtr.write_record(&header).map_err(csv_err)?;
        let layout = self.layout();
        for lin in 0..layout.total {
            let mut row: Vec<String> = layout.t_values(lin).iter().map(|v| v.to_string()).collect();
            row.extend(self.coords_at(lin).iter().map(|v| v.to_string()));
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)
    }

    /// Import a grid previously exported with [`SolutionGrid::write_csv`].
    /// Axes are inferred from the distinct t-values; every axis needs at
    /// least two of them and uniform spacing.
    pub fn read_csv<R: Read>(r: R, chart: &Chart) -> Result<SolutionGrid> {
        let mut rdr = csv::Reader::from_reader(r);
        let k = chart.k();
        let dim = chart.dim();
        let mut expected: Vec<String> = (1..=k).map(|a| format!("t_{a}")).collect();
        expected.extend(chart.coordinates().map(|c| c.to_string()));
        let header = rdr.headers().map_err(csv_err)?;
        let got: Vec<String> = header.iter().map(str::to_string).collect();
        if got != expected {
            return Err(Error::GridImport(format!(
                "header mismatch: expected {expected:?}, got {got:?}"
            )));
        }
        let mut rows: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != k + dim {
                return Err(Error::GridImport(format!(
                    "row has {} fields, expected {}",
                    rec.len(),
                    k + dim
                )));
            }
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::GridImport(format!("bad number `{s}`")))
                })
                .collect::<Result<_>>()?;
            rows.push((nums[..k].to_vec(), nums[k..].to_vec()));
        }
        // Infer each axis from its sorted distinct t-values.
        let mut axes = Vec::with_capacity(k);
        for a in 0..k {
            let mut vals: Vec<f64> = rows.iter().map(|(t, _)| t[a]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            if vals.len() < 2 {
                return Err(Error::GridImport(format!(
                    "axis t_{} has fewer than two distinct values",
                    a + 1
                )));
            }
            let spacing = vals[1] - vals[0];
            let scale = spacing.abs().max(1e-300);
            for w in vals.windows(2) {
                if ((w[1] - w[0]) - spacing).abs() > 1e-9 * scale.max(1.0) {
                    return Err(Error::GridImport(format!(
                        "axis t_{} is not uniformly spaced",
                        a + 1
                    )));
                }
            }
            axes.push(GridAxis {
                origin: vals[0],
                spacing,
                count: vals.len(),
            });
        }
        let layout = GridLayout::new(chart, &axes)?;
        if rows.len() != layout.total {
            return Err(Error::GridImport(format!(
                "{} rows do not fill a {} node grid",
                rows.len(),
                layout.total
            )));
        }
        let mut values = vec![f64::NAN; layout.total * dim];
        let mut seen = vec![false; layout.total];
        for (t, coords) in rows {
            let multi: Vec<usize> = (0..k)
                .map(|a| {
                    let j = (t[a] - axes[a].origin) / axes[a].spacing;
                    let jr = j.round();
                    if (j - jr).abs() > 1e-6 {
                        return Err(Error::GridImport(format!(
                            "t value {} off-grid on axis t_{}",
                            t[a],
                            a + 1
                        )));
                    }
                    Ok(jr as usize)
                })
                .collect::<Result<_>>()?;
            let lin = layout.linear(&multi);
            if seen[lin] {
                return Err(Error::GridImport("duplicate grid node".into()));
            }
            seen[lin] = true;
            values[lin * dim..(lin + 1) * dim].copy_from_slice(&coords);
        }
        Ok(SolutionGrid {
            chart: chart.clone(),
            axes,
            values,
            path_residual: 0.0,
            bracket_warning: false,
        })
    }

    pub fn read_csv_path(path: &Path, chart: &Chart) -> Result<SolutionGrid> {
        let file = std::fs::File::open(path)?;
        SolutionGrid::read_csv(file, chart)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::GridImport(e.to_string())
}

/// One classical RK4 step of y' = f(y).
pub fn rk4_step(f: &dyn Fn(&[f64]) -> Result<Vec<f64>>, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let add_scaled = |y: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + c * b).collect()
    };
    let k1 = f(y)?;
    let k2 = f(&add_scaled(y, &k1, 0.5 * h))?;
    let k3 = f(&add_scaled(y, &k2, 0.5 * h))?;
    let k4 = f(&add_scaled(y, &k3, h))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Fill a grid by sequential coordinate sweeps: RK4 along t_1 from the
/// start point, then along t_2 from every t_1-line node, and so on.
///
/// A symbolic bracket check runs first; when it cannot certify
/// commutation the grid carries a warning flag. Independently, the
/// sweep is audited numerically: on ~5% of nodes the integration is
/// redone with the axis order reversed and the worst coordinate
/// discrepancy recorded; exceeding `tol_path` is a hard error.
pub fn integrate_section(
    x: &KVectorField,
    start: &Point,
    axes: &[GridAxis],
    tol_path: f64,
    zero: &ZeroTest,
) -> Result<SolutionGrid> {
    let chart = x.chart().clone();
    let layout = GridLayout::new(&chart, axes)?;
    let dim = chart.dim();
    if start.coords().len() != dim {
        return Err(Error::ComponentCount {
            expected: dim,
            actual: start.coords().len(),
        });
    }

    let mut bracket_warning = false;
    for bracket in integrability_residual(x) {
        for comp in bracket.components() {
            if !zero.verdict(comp, &chart)?.is_zeroish() {
                bracket_warning = true;
            }
        }
    }

    let field_fn = |a: usize| {
        let field = x.field(a).clone();
        let chart = chart.clone();
        move |y: &[f64]| -> Result<Vec<f64>> {
            let pt = Point::new(y.to_vec());
            field
                .components()
                .iter()
                .map(|c| c.evaluate(&chart, &pt))
                .collect()
        }
    };

    let k = chart.k();
    let mut values = vec![f64::NAN; layout.total * dim];
    values[..dim].copy_from_slice(start.coords());
    for axis in 0..k {
        let f = field_fn(axis + 1);
        let h = axes[axis].spacing;
        // Bases: nodes with zero index on this axis and on all later axes.
        let mut base = vec![0usize; k];
        loop {
            let mut prev = layout.linear(&base);
            let mut multi = base.clone();
            for j in 1..axes[axis].count {
                multi[axis] = j;
                let lin = layout.linear(&multi);
                let next = rk4_step(&f, &values[prev * dim..prev * dim + dim], h)?;
                values[lin * dim..lin * dim + dim].copy_from_slice(&next);
                prev = lin;
            }
            // Advance over the earlier axes only.
            let mut carry = axis;
            loop {
                if carry == 0 {
                    break;
                }
                carry -= 1;
                base[carry] += 1;
                if base[carry] < axes[carry].count {
                    break;
                }
                base[carry] = 0;
                if carry == 0 {
                    break;
                }
            }
            if base[..axis].iter().all(|&j| j == 0) {
                break;
            }
        }
    }

    // Path-dependence audit: re-integrate a sample of nodes with the
    // axis order reversed (last axis first) and compare.
    let mut path_residual = 0.0f64;
    if k > 1 && layout.total > 1 {
        let samples = (layout.total as f64 * 0.05).ceil() as usize;
        for s in 1..=samples {
            let lin = s * (layout.total - 1) / samples;
            let target = layout.multi(lin);
            let mut state = start.coords().to_vec();
            for axis in (0..k).rev() {
                let f = field_fn(axis + 1);
                for _ in 0..target[axis] {
                    state = rk4_step(&f, &state, axes[axis].spacing)?;
                }
            }
            let swept = &values[lin * dim..lin * dim + dim];
            let diff = state
                .iter()
                .zip(swept)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            path_residual = path_residual.max(diff);
        }
        if path_residual > tol_path {
            return Err(Error::NonIntegrable {
                residual: path_residual,
                tol: tol_path,
            });
        }
    }

    Ok(SolutionGrid {
        chart,
        axes: axes.to_vec(),
        values,
        path_residual,
        bracket_warning,
    })
}

/// Sup-norm over interior nodes of the HDW residuals with central
/// finite differences replacing the t-derivatives.
#[allow(clippy::needless_range_loop)]
pub fn hdw_residual_grid(sys: &HamiltonianSystem, grid: &SolutionGrid) -> Result<f64> {
    if sys.chart() != grid.chart() {
        return Err(Error::ChartMismatch);
    }
    let chart = sys.chart();
    for (axis, ax) in grid.axes().iter().enumerate() {
        if ax.count < 3 {
            return Err(Error::GridTooSmall {
                axis: axis + 1,
                required: 3,
                actual: ax.count,
            });
        }
    }
    let n = chart.n();
    let k = chart.k();
    let dq: Vec<Expr> = (1..=n as u32)
        .map(|i| sys.h.differentiate(Symbol::Q(i)))
        .collect();
    let dp: Vec<Vec<Expr>> = (1..=k as u32)
        .map(|a| {
            (1..=n as u32)
                .map(|i| sys.h.differentiate(Symbol::P(a, i)))
                .collect()
        })
        .collect();
    let mut sup = 0.0f64;
    for multi in grid.interior_nodes() {
        let pt = grid.point_at(&multi);
        for i in 0..n {
            let mut div = 0.0;
            for a in 0..k {
                let p_idx = chart
                    .coordinate_index(Symbol::P(a as u32 + 1, i as u32 + 1))
                    .unwrap();
                div += grid.central_difference(&multi, a, p_idx);
            }
            let r = dq[i].evaluate(chart, &pt)? + div;
            sup = sup.max(r.abs());
        }
        for a in 0..k {
            for i in 0..n {
                let dq_dt = grid.central_difference(&multi, a, i);
                let r = dp[a][i].evaluate(chart, &pt)? - dq_dt;
                sup = sup.max(r.abs());
            }
        }
    }
    Ok(sup)
}

/// Check ω♯ling of the particular field against dH coefficientwise;
/// used by tests and the self test.
pub fn particular_residual_is_exact_zero(sys: &HamiltonianSystem) -> bool {
    field_equation_residual(sys, &particular_kvector(sys))
        .map(|f| f.is_structurally_zero())
        .unwrap_or(false)
}
