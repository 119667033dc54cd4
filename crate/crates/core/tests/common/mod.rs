#![allow(dead_code)]

//! Shared generators for the randomized suites: seeded, so every run
//! exercises the same instances.

use ksym_core::chart::{Chart, Symbol};
use ksym_core::expr::Expr;
use ksym_core::forms::{DiffForm, KVectorField, VectorField};
use rand::rngs::StdRng;
use rand::Rng;

/// Sparse random polynomial over the chart coordinates.
pub fn random_poly(rng: &mut StdRng, chart: &Chart, max_terms: usize, max_deg: u32) -> Expr {
    let coords: Vec<Symbol> = chart.coordinates().collect();
    let terms = rng.gen_range(0..=max_terms);
    let mut acc = Expr::int(rng.gen_range(-2..=2));
    for _ in 0..terms {
        let mut term = Expr::int(rng.gen_range(-2..=2i64));
        let factors = rng.gen_range(1..=max_deg);
        for _ in 0..factors {
            let sym = coords[rng.gen_range(0..coords.len())];
            term = Expr::mul(term, Expr::sym(sym));
        }
        acc = Expr::add(acc, term);
    }
    acc.normalize()
}

/// Random polynomial in the q-coordinates only (a base vector field
/// component).
pub fn random_q_poly(rng: &mut StdRng, chart: &Chart, max_terms: usize, max_deg: u32) -> Expr {
    let terms = rng.gen_range(0..=max_terms);
    let mut acc = Expr::int(rng.gen_range(-2..=2));
    for _ in 0..terms {
        let mut term = Expr::int(rng.gen_range(-2..=2i64));
        for _ in 0..rng.gen_range(1..=max_deg) {
            let i = rng.gen_range(1..=chart.n() as u32);
            term = Expr::mul(term, Expr::sym(Symbol::Q(i)));
        }
        acc = Expr::add(acc, term);
    }
    acc.normalize()
}

pub fn random_vector_field(rng: &mut StdRng, chart: &Chart, max_deg: u32) -> VectorField {
    let comps = (0..chart.dim())
        .map(|_| random_poly(rng, chart, 2, max_deg))
        .collect();
    VectorField::new(chart.clone(), comps).unwrap()
}

pub fn random_one_form(rng: &mut StdRng, chart: &Chart, max_deg: u32) -> DiffForm {
    let coeffs = (0..chart.dim())
        .map(|_| random_poly(rng, chart, 2, max_deg))
        .collect();
    DiffForm::one_form(chart.clone(), coeffs).unwrap()
}

pub fn random_kvector(rng: &mut StdRng, chart: &Chart, max_deg: u32) -> KVectorField {
    let fields = (0..chart.k())
        .map(|_| random_vector_field(rng, chart, max_deg))
        .collect();
    KVectorField::new(fields).unwrap()
}

/// A k-vector field constructed to lie in ker ω♯: no ∂/∂q components,
/// arbitrary off-diagonal momentum block, and the diagonal trace
/// cancelled against the last copy.
pub fn random_kernel_element(rng: &mut StdRng, chart: &Chart, max_deg: u32) -> KVectorField {
    let n = chart.n();
    let k = chart.k();
    let mut comps: Vec<Vec<Expr>> = vec![vec![Expr::zero(); chart.dim()]; k];
    for (a, field) in comps.iter_mut().enumerate() {
        for b in 1..=k as u32 {
            for i in 1..=n as u32 {
                let idx = chart.coordinate_index(Symbol::P(b, i)).unwrap();
                let diagonal_of_last = a == k - 1 && b as usize == k;
                if !diagonal_of_last {
                    field[idx] = random_poly(rng, chart, 2, max_deg);
                }
            }
        }
    }
    // Close the trace: (X_k)^k_i = −Σ_{A<k} (X_A)^A_i.
    for i in 1..=n as u32 {
        let mut acc = Expr::zero();
        for a in 1..k as u32 {
            let idx = chart.coordinate_index(Symbol::P(a, i)).unwrap();
            acc = Expr::add(acc, comps[a as usize - 1][idx].clone());
        }
        let idx = chart.coordinate_index(Symbol::P(k as u32, i)).unwrap();
        comps[k - 1][idx] = Expr::neg(acc).normalize();
    }
    let fields = comps
        .into_iter()
        .map(|c| VectorField::new(chart.clone(), c).unwrap())
        .collect();
    KVectorField::new(fields).unwrap()
}
