//! Canonical coordinate charts on the bundle of k¹ covelocities.
//!
//! A chart fixes the dimensions `n` (base manifold) and `k` (number of
//! cotangent copies) and with them the coordinate list
//! `q_1 .. q_n, p_1_1 .. p_k_n`, plus the base parameters `t_1 .. t_k`
//! used by analytic sections. It also carries the sampling boxes used by
//! the randomized zero test.

use std::fmt;

/// Default sampling interval for every coordinate and parameter.
pub const DEFAULT_SAFE_BOX: (f64, f64) = (0.5, 1.5);

/// A named scalar symbol: chart coordinate, base parameter, or the
/// homotopy parameter `s` used internally by the Poincaré-lemma operator.
///
/// All indices are 1-based, matching the `q_i` / `p_A_i` / `t_A` naming
/// scheme. The derived ordering (q's, then p's A-major, then t's) is the
/// declared coordinate order of every chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Configuration coordinate `q_i`, 1 ≤ i ≤ n.
    Q(u32),
    /// Momentum coordinate `p_A_i`, 1 ≤ A ≤ k, 1 ≤ i ≤ n.
    P(u32, u32),
    /// Base parameter `t_A`, 1 ≤ A ≤ k.
    T(u32),
    /// Homotopy parameter; never produced by the parser.
    S,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Q(i) => write!(f, "q_{i}"),
            Symbol::P(a, i) => write!(f, "p_{a}_{i}"),
            Symbol::T(a) => write!(f, "t_{a}"),
            Symbol::S => write!(f, "s"),
        }
    }
}

/// Coordinate model of (T¹ₖ)*Q: dimensions plus sampling boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    n: usize,
    k: usize,
    /// Sampling interval per coordinate, in declared order (length n + n·k).
    coord_box: Vec<(f64, f64)>,
    /// Sampling interval per base parameter (length k).
    param_box: Vec<(f64, f64)>,
}

impl Chart {
    /// Chart with the default safe box on every coordinate and parameter.
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n >= 1 && k >= 1, "chart dimensions must be positive");
        Chart {
            n,
            k,
            coord_box: vec![DEFAULT_SAFE_BOX; n + n * k],
            param_box: vec![DEFAULT_SAFE_BOX; k],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of chart coordinates, n + n·k.
    pub fn dim(&self) -> usize {
        self.n + self.n * self.k
    }

    /// Override the sampling interval of one coordinate.
    pub fn set_coord_box(&mut self, sym: Symbol, lo: f64, hi: f64) {
        assert!(lo < hi, "safe box must be a nonempty interval");
        let idx = self
            .coordinate_index(sym)
            .expect("safe box target must be a chart coordinate");
        self.coord_box[idx] = (lo, hi);
    }

    /// Override the sampling interval of one base parameter.
    pub fn set_param_box(&mut self, a: u32, lo: f64, hi: f64) {
        assert!(lo < hi, "safe box must be a nonempty interval");
        assert!(a >= 1 && (a as usize) <= self.k);
        self.param_box[a as usize - 1] = (lo, hi);
    }

    pub fn coord_box(&self, idx: usize) -> (f64, f64) {
        self.coord_box[idx]
    }

    pub fn param_box(&self, a: usize) -> (f64, f64) {
        self.param_box[a - 1]
    }

    /// Chart coordinates in declared order: q_1..q_n, p_1_1..p_k_n.
    pub fn coordinates(&self) -> impl Iterator<Item = Symbol> + '_ {
        let qs = (1..=self.n as u32).map(Symbol::Q);
        let ps = (1..=self.k as u32)
            .flat_map(move |a| (1..=self.n as u32).map(move |i| Symbol::P(a, i)));
        qs.chain(ps)
    }

    /// Base parameters t_1..t_k.
    pub fn parameters(&self) -> impl Iterator<Item = Symbol> + '_ {
        (1..=self.k as u32).map(Symbol::T)
    }

    /// Position of a coordinate in the declared order, if it is one.
    pub fn coordinate_index(&self, sym: Symbol) -> Option<usize> {
        match sym {
            Symbol::Q(i) if i >= 1 && (i as usize) <= self.n => Some(i as usize - 1),
            Symbol::P(a, i)
                if a >= 1 && (a as usize) <= self.k && i >= 1 && (i as usize) <= self.n =>
            {
                Some(self.n + (a as usize - 1) * self.n + (i as usize - 1))
            }
            _ => None,
        }
    }

    /// Coordinate at a given position in the declared order.
    pub fn coordinate_at(&self, idx: usize) -> Symbol {
        assert!(idx < self.dim());
        if idx < self.n {
            Symbol::Q(idx as u32 + 1)
        } else {
            let off = idx - self.n;
            Symbol::P((off / self.n) as u32 + 1, (off % self.n) as u32 + 1)
        }
    }

    /// True iff the symbol is a coordinate or base parameter of this chart.
    pub fn declares(&self, sym: Symbol) -> bool {
        match sym {
            Symbol::T(a) => a >= 1 && (a as usize) <= self.k,
            Symbol::S => false,
            _ => self.coordinate_index(sym).is_some(),
        }
    }

    /// Point with every coordinate at the center of its safe box,
    /// the default base point for homotopy integration.
    pub fn box_center(&self) -> Point {
        Point::new(
            self.coord_box
                .iter()
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        )
    }
}

/// Numeric assignment to every chart coordinate, optionally with base
/// parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    params: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point {
            coords,
            params: Vec::new(),
        }
    }

    pub fn with_params(coords: Vec<f64>, params: Vec<f64>) -> Self {
        Point { coords, params }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Value of a symbol at this point, if assigned.
    pub fn get(&self, chart: &Chart, sym: Symbol) -> Option<f64> {
        match sym {
            Symbol::T(a) => self.params.get(a as usize - 1).copied(),
            Symbol::S => None,
            _ => chart
                .coordinate_index(sym)
                .and_then(|i| self.coords.get(i))
                .copied(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_order_is_q_then_p_a_major() {
        let chart = Chart::new(2, 2);
        let coords: Vec<Symbol> = chart.coordinates().collect();
        assert_eq!(
            coords,
            vec![
                Symbol::Q(1),
                Symbol::Q(2),
                Symbol::P(1, 1),
                Symbol::P(1, 2),
                Symbol::P(2, 1),
                Symbol::P(2, 2),
            ]
        );
        for (idx, sym) in coords.iter().enumerate() {
            assert_eq!(chart.coordinate_index(*sym), Some(idx));
            assert_eq!(chart.coordinate_at(idx), *sym);
        }
    }

    #[test]
    fn out_of_range_symbols_are_undeclared() {
        let chart = Chart::new(1, 2);
        assert!(!chart.declares(Symbol::Q(2)));
        assert!(!chart.declares(Symbol::P(3, 1)));
        assert!(!chart.declares(Symbol::T(3)));
        assert!(chart.declares(Symbol::P(2, 1)));
        assert!(chart.declares(Symbol::T(2)));
        assert!(!chart.declares(Symbol::S));
    }

    #[test]
    fn box_center_defaults_to_unit_center() {
        let chart = Chart::new(1, 1);
        assert_eq!(chart.box_center().coords(), &[1.0, 1.0]);
    }
}
