//! Exterior calculus on the canonical chart of (T¹ₖ)*Q.
//!
//! Differential forms are stored sparsely: a map from strictly
//! increasing coordinate-index tuples to coefficients, absent tuple
//! meaning zero. Sign conventions, fixed once here and relied on
//! everywhere else:
//!
//! * ωᴬ is stored as Σᵢ dqⁱ ∧ dp^A_i, so i(∂/∂qⁱ)ωᴬ = dp^A_i;
//! * the interior product contracts the first slot;
//! * Lie derivatives of forms always go through Cartan's magic formula
//!   L(Y)a = i(Y)da + d(i(Y)a); flows appear only in tests.
//!
//! The k-symplectic structure proper is the pair (ωᴬ, V) with V the
//! vertical distribution of the bundle projection. V plays no role in
//! any computation performed here (the equations only touch the ωᴬ), so
//! it is not reified as a type.

use std::collections::BTreeMap;

use crate::chart::{Chart, Symbol};
use crate::error::{Error, Result};
use crate::expr::{Expr, ZeroTest};

/// Vector field on the full chart: one component per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Chart,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<Self> {
        if components.len() != chart.dim() {
            return Err(Error::ComponentCount {
                expected: chart.dim(),
                actual: components.len(),
            });
        }
        let components = components.iter().map(Expr::normalize).collect();
        Ok(VectorField { chart, components })
    }

    pub fn zero(chart: Chart) -> Self {
        let dim = chart.dim();
        VectorField {
            chart,
            components: vec![Expr::zero(); dim],
        }
    }

    /// Unit coordinate field ∂/∂x for a chart coordinate x.
    pub fn coordinate_basis(chart: Chart, sym: Symbol) -> Result<Self> {
        let idx = chart
            .coordinate_index(sym)
            .ok_or_else(|| Error::ForbiddenSymbol {
                symbol: sym.to_string(),
            })?;
        let mut f = VectorField::zero(chart);
        f.components[idx] = Expr::one();
        Ok(f)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, idx: usize) -> &Expr {
        &self.components[idx]
    }

    pub fn is_zero_field(&self) -> bool {
        self.components.iter().all(Expr::is_zero_const)
    }

    /// Directional derivative Y(f) = Σⱼ Yʲ ∂f/∂xⱼ.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (idx, comp) in self.components.iter().enumerate() {
            if comp.is_zero_const() {
                continue;
            }
            let sym = self.chart.coordinate_at(idx);
            acc = Expr::add(acc, Expr::mul(comp.clone(), f.differentiate(sym)));
        }
        acc.normalize()
    }

    /// Lie bracket [self, other] = self(otherʲ) − other(selfʲ).
    pub fn lie_bracket(&self, other: &VectorField) -> Result<VectorField> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        let components = (0..self.chart.dim())
            .map(|j| {
                Expr::sub(
                    self.apply(&other.components[j]),
                    other.apply(&self.components[j]),
                )
                .normalize()
            })
            .collect();
        VectorField::new(self.chart.clone(), components)
    }

    pub fn scale(&self, factor: &Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .map(|c| Expr::mul(factor.clone(), c.clone()).normalize())
                .collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| Expr::add(a.clone(), b.clone()).normalize())
            .collect();
        VectorField::new(self.chart.clone(), components)
    }
}

/// Vector field on the base Q only: n components in the q-coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QVectorField {
    chart: Chart,
    components: Vec<Expr>,
}

impl QVectorField {
    /// Components may reference only q-coordinates.
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<Self> {
        if components.len() != chart.n() {
            return Err(Error::ComponentCount {
                expected: chart.n(),
                actual: components.len(),
            });
        }
        for c in &components {
            for sym in c.symbols() {
                if !matches!(sym, Symbol::Q(_)) {
                    return Err(Error::ForbiddenSymbol {
                        symbol: sym.to_string(),
                    });
                }
            }
        }
        let components = components.iter().map(Expr::normalize).collect();
        Ok(QVectorField { chart, components })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Canonical lift Z^{C*} = Zⁱ ∂/∂qⁱ − p^A_j (∂Zʲ/∂qᵢ) ∂/∂p_A_i.
    pub fn canonical_lift(&self) -> VectorField {
        let chart = &self.chart;
        let n = chart.n();
        let mut components = vec![Expr::zero(); chart.dim()];
        components[..n].clone_from_slice(&self.components);
        for a in 1..=chart.k() as u32 {
            for i in 1..=n as u32 {
                let mut acc = Expr::zero();
                for j in 1..=n as u32 {
                    let dz = self.components[j as usize - 1].differentiate(Symbol::Q(i));
                    acc = Expr::add(acc, Expr::mul(Expr::sym(Symbol::P(a, j)), dz));
                }
                let idx = chart.coordinate_index(Symbol::P(a, i)).unwrap();
                components[idx] = Expr::neg(acc).normalize();
            }
        }
        VectorField {
            chart: chart.clone(),
            components,
        }
    }
}

/// Ordered family (X_1, ..., X_k) of vector fields on one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct KVectorField {
    fields: Vec<VectorField>,
}

impl KVectorField {
    pub fn new(fields: Vec<VectorField>) -> Result<Self> {
        let Some(first) = fields.first() else {
            return Err(Error::ComponentCount {
                expected: 1,
                actual: 0,
            });
        };
        if fields.len() != first.chart.k() {
            return Err(Error::ComponentCount {
                expected: first.chart.k(),
                actual: fields.len(),
            });
        }
        if fields.iter().any(|f| f.chart != first.chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(KVectorField { fields })
    }

    pub fn zero(chart: Chart) -> Self {
        let k = chart.k();
        KVectorField {
            fields: vec![VectorField::zero(chart); k],
        }
    }

    pub fn chart(&self) -> &Chart {
        self.fields[0].chart()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    /// X_A by its 1-based copy index, matching the p_A_i naming.
    pub fn field(&self, a: usize) -> &VectorField {
        &self.fields[a - 1]
    }

    /// ω♯(X) = Σ_A i(X_A) ωᴬ, a 1-form.
    pub fn omega_sharp(&self) -> DiffForm {
        let chart = self.chart().clone();
        let mut acc = DiffForm::zero(chart.clone(), 1);
        for a in 1..=chart.k() {
            let omega = canonical_omega(&chart, a).expect("A in range");
            let term = omega
                .interior_product(&self.fields[a - 1])
                .expect("degree 2");
            acc = acc.add(&term).expect("same chart");
        }
        acc
    }

    /// Membership in ker ω♯; equivalently (X_A)ⁱ ≡ 0 and Σ_A (X_A)^A_i ≡ 0.
    pub fn in_kernel(&self, zero: &ZeroTest) -> Result<bool> {
        let chart = self.chart();
        zero.all_zeroish(&self.omega_sharp().coefficients(), chart)
    }

    pub fn add(&self, other: &KVectorField) -> Result<KVectorField> {
        if self.chart() != other.chart() {
            return Err(Error::ChartMismatch);
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        KVectorField::new(fields)
    }
}

/// Sparse differential form in canonical antisymmetric storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffForm {
    chart: Chart,
    degree: usize,
    /// Strictly increasing coordinate-index tuples → nonzero coefficient.
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl DiffForm {
    pub fn zero(chart: Chart, degree: usize) -> Self {
        DiffForm {
            chart,
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// Degree-0 form (a function).
    pub fn function(chart: Chart, value: Expr) -> Self {
        let mut f = DiffForm::zero(chart, 0);
        f.insert(vec![], value);
        f
    }

    /// 1-form from one coefficient per coordinate, in declared order.
    pub fn one_form(chart: Chart, coeffs: Vec<Expr>) -> Result<Self> {
        if coeffs.len() != chart.dim() {
            return Err(Error::ComponentCount {
                expected: chart.dim(),
                actual: coeffs.len(),
            });
        }
        let mut f = DiffForm::zero(chart, 1);
        for (idx, c) in coeffs.into_iter().enumerate() {
            f.insert(vec![idx], c);
        }
        Ok(f)
    }

    /// The basis 1-form dx for a chart coordinate x.
    pub fn basis_one_form(chart: Chart, sym: Symbol) -> Result<Self> {
        let idx = chart
            .coordinate_index(sym)
            .ok_or_else(|| Error::ForbiddenSymbol {
                symbol: sym.to_string(),
            })?;
        let mut f = DiffForm::zero(chart, 1);
        f.insert(vec![idx], Expr::one());
        Ok(f)
    }

    fn insert(&mut self, key: Vec<usize>, coeff: Expr) {
        debug_assert_eq!(key.len(), self.degree);
        debug_assert!(key.windows(2).all(|w| w[0] < w[1]));
        let coeff = coeff.normalize();
        if coeff.is_zero_const() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = Expr::add(e.get().clone(), coeff).normalize();
                if sum.is_zero_const() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// Collect raw contributions per key and normalize each sum once.
    fn from_contributions(
        chart: Chart,
        degree: usize,
        contributions: BTreeMap<Vec<usize>, Vec<Expr>>,
    ) -> DiffForm {
        let mut form = DiffForm::zero(chart, degree);
        for (key, parts) in contributions {
            let sum = parts
                .into_iter()
                .reduce(Expr::add)
                .expect("nonempty bucket");
            form.insert(key, sum);
        }
        form
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    /// Coefficient at an index tuple; zero when absent.
    pub fn coefficient(&self, key: &[usize]) -> Expr {
        self.terms.get(key).cloned().unwrap_or_else(Expr::zero)
    }

    /// All stored (nonzero) coefficients.
    pub fn coefficients(&self) -> Vec<Expr> {
        self.terms.values().cloned().collect()
    }

    /// True iff every coefficient cancelled exactly.
    pub fn is_structurally_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &DiffForm) -> Result<DiffForm> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        debug_assert_eq!(self.degree, other.degree);
        let mut buckets: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for (key, coeff) in self.terms.iter().chain(other.terms.iter()) {
            buckets.entry(key.clone()).or_default().push(coeff.clone());
        }
        Ok(DiffForm::from_contributions(
            self.chart.clone(),
            self.degree,
            buckets,
        ))
    }

    pub fn sub(&self, other: &DiffForm) -> Result<DiffForm> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, factor: &Expr) -> DiffForm {
        let mut out = DiffForm::zero(self.chart.clone(), self.degree);
        for (key, coeff) in &self.terms {
            out.insert(key.clone(), Expr::mul(factor.clone(), coeff.clone()));
        }
        out
    }

    /// Graded-anticommutative wedge product. Degrees beyond the chart
    /// dimension collapse to the zero form.
    pub fn wedge(&self, other: &DiffForm) -> Result<DiffForm> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        let degree = self.degree + other.degree;
        if degree > self.chart.dim() {
            return Ok(DiffForm::zero(self.chart.clone(), degree));
        }
        let mut buckets: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                if let Some((key, sign)) = merge_indices(ka, kb) {
                    let coeff = Expr::mul(ca.clone(), cb.clone());
                    let signed = if sign < 0 { Expr::neg(coeff) } else { coeff };
                    buckets.entry(key).or_default().push(signed);
                }
            }
        }
        Ok(DiffForm::from_contributions(
            self.chart.clone(),
            degree,
            buckets,
        ))
    }

    /// Exterior derivative; d∘d = 0.
    pub fn exterior_derivative(&self) -> DiffForm {
        let mut buckets: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for (key, coeff) in &self.terms {
            for m in 0..self.chart.dim() {
                if key.binary_search(&m).is_ok() {
                    continue;
                }
                let dc = coeff.differentiate(self.chart.coordinate_at(m));
                if dc.is_zero_const() {
                    continue;
                }
                let pos = key.partition_point(|&i| i < m);
                let mut new_key = key.clone();
                new_key.insert(pos, m);
                let signed = if pos % 2 == 1 { Expr::neg(dc) } else { dc };
                buckets.entry(new_key).or_default().push(signed);
            }
        }
        DiffForm::from_contributions(self.chart.clone(), self.degree + 1, buckets)
    }

    /// Interior product (contraction in the first slot):
    /// i(X)(dx_{i₀}∧…∧dx_{i_{d−1}}) = Σ_r (−1)^r X^{i_r} dx_{I∖i_r}.
    pub fn interior_product(&self, x: &VectorField) -> Result<DiffForm> {
        if self.chart != *x.chart() {
            return Err(Error::ChartMismatch);
        }
        if self.degree == 0 {
            return Err(Error::DegreeTooLow);
        }
        let mut buckets: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for (key, coeff) in &self.terms {
            for (r, idx) in key.iter().enumerate() {
                let comp = x.component(*idx);
                if comp.is_zero_const() {
                    continue;
                }
                let mut new_key = key.clone();
                new_key.remove(r);
                let term = Expr::mul(comp.clone(), coeff.clone());
                let signed = if r % 2 == 1 { Expr::neg(term) } else { term };
                buckets.entry(new_key).or_default().push(signed);
            }
        }
        Ok(DiffForm::from_contributions(
            self.chart.clone(),
            self.degree - 1,
            buckets,
        ))
    }

    /// Lie derivative along Y by the Cartan formula; for degree 0 this
    /// is the directional derivative Y(f).
    pub fn lie_derivative(&self, y: &VectorField) -> Result<DiffForm> {
        if self.chart != *y.chart() {
            return Err(Error::ChartMismatch);
        }
        if self.degree == 0 {
            let f = self.coefficient(&[]);
            return Ok(DiffForm::function(self.chart.clone(), y.apply(&f)));
        }
        let d_then_i = self.exterior_derivative().interior_product(y)?;
        let i_then_d = self.interior_product(y)?.exterior_derivative();
        d_then_i.add(&i_then_d)
    }

    /// m-fold Lie derivative, normalized after each step.
    pub fn lie_derivative_iterated(&self, y: &VectorField, m: usize) -> Result<DiffForm> {
        assert!(m >= 1, "iterated Lie derivative needs m >= 1");
        let mut out = self.lie_derivative(y)?;
        for _ in 1..m {
            out = out.lie_derivative(y)?;
        }
        Ok(out)
    }
}

/// Merge two strictly increasing index tuples; None when they collide.
/// The sign is the parity of the block interleaving: the number of
/// pairs (i from `a`, j from `b`) with j < i.
fn merge_indices(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut inv = 0usize;
    for ia in a {
        if b.binary_search(ia).is_ok() {
            return None;
        }
        inv += b.partition_point(|&jb| jb < *ia);
    }
    let mut merged: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    merged.sort_unstable();
    let sign = if inv % 2 == 1 { -1 } else { 1 };
    Some((merged, sign))
}

/// Canonical 1-form θᴬ = p^A_i dqⁱ.
pub fn canonical_theta(chart: &Chart, a: usize) -> Result<DiffForm> {
    if a < 1 || a > chart.k() {
        return Err(Error::IndexOutOfRange {
            index: a,
            bound: chart.k(),
        });
    }
    let mut f = DiffForm::zero(chart.clone(), 1);
    for i in 1..=chart.n() as u32 {
        let q_idx = chart.coordinate_index(Symbol::Q(i)).unwrap();
        f.insert(vec![q_idx], Expr::sym(Symbol::P(a as u32, i)));
    }
    Ok(f)
}

/// Canonical 2-form ωᴬ = Σᵢ dqⁱ ∧ dp^A_i = −dθᴬ.
pub fn canonical_omega(chart: &Chart, a: usize) -> Result<DiffForm> {
    if a < 1 || a > chart.k() {
        return Err(Error::IndexOutOfRange {
            index: a,
            bound: chart.k(),
        });
    }
    let mut f = DiffForm::zero(chart.clone(), 2);
    for i in 1..=chart.n() as u32 {
        let q_idx = chart.coordinate_index(Symbol::Q(i)).unwrap();
        let p_idx = chart.coordinate_index(Symbol::P(a as u32, i)).unwrap();
        f.insert(vec![q_idx, p_idx], Expr::one());
    }
    Ok(f)
}
