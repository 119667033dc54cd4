//! JSON system-definition files and their validation into resolved
//! in-memory objects.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use ksym_core::chart::{Chart, Point, Symbol};
use ksym_core::expr::parse;
use ksym_core::forms::{QVectorField, VectorField};
use ksym_core::hdw::{AnalyticSection, GridAxis, HamiltonianSystem, DEFAULT_TOL_PATH};

use crate::{CliError, CliResult};

/// Raw file schema. Expression values are strings in the expression
/// grammar; all identifiers must resolve against the declared chart.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub k: usize,
    pub hamiltonian: String,
    #[serde(default)]
    pub safe_box: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub candidates: BTreeMap<String, CandidateSpec>,
    #[serde(default)]
    pub sections: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub grids: BTreeMap<String, GridSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub base_point: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    /// "full": one component per chart coordinate. "lift": n q-only
    /// components, lifted canonically to the phase space.
    pub kind: String,
    pub components: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
    #[serde(default)]
    pub start: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub section: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub tol_path: Option<f64>,
    pub zero_eps: Option<f64>,
    pub verify: Option<f64>,
}

/// Where a grid's node values come from.
#[derive(Debug, Clone)]
pub enum GridSource {
    /// Integrate the particular k-vector field from this start point.
    Start(Point),
    /// Sample the named analytic section.
    Section(String),
}

#[derive(Debug, Clone)]
pub struct GridDef {
    pub axes: Vec<GridAxis>,
    pub source: GridSource,
}

/// Fully validated system specification.
#[derive(Debug)]
pub struct SystemSpec {
    pub system: HamiltonianSystem,
    pub hamiltonian_text: String,
    pub candidates: BTreeMap<String, (String, VectorField)>,
    pub sections: BTreeMap<String, AnalyticSection>,
    pub grids: BTreeMap<String, GridDef>,
    pub tol_path: f64,
    pub zero_eps: Option<f64>,
    pub verify_tol: f64,
    pub n_max: usize,
    pub base: Point,
}

impl SystemSpec {
    pub fn chart(&self) -> &Chart {
        self.system.chart()
    }
}

fn input<T>(msg: String) -> CliResult<T> {
    Err(CliError::Input(msg))
}

fn symbol_for(chart: &Chart, name: &str) -> CliResult<Symbol> {
    for sym in chart.coordinates().chain(chart.parameters()) {
        if sym.to_string() == name {
            return Ok(sym);
        }
    }
    input(format!(
        "`{name}` is not a coordinate or parameter of this chart"
    ))
}

fn point_from_map(
    chart: &Chart,
    map: &BTreeMap<String, f64>,
    what: &str,
    defaults: Option<&Point>,
) -> CliResult<Point> {
    let mut coords: Vec<f64> = match defaults {
        Some(p) => p.coords().to_vec(),
        None => vec![f64::NAN; chart.dim()],
    };
    for (name, value) in map {
        let sym = symbol_for(chart, name)?;
        match chart.coordinate_index(sym) {
            Some(idx) => coords[idx] = *value,
            None => return input(format!("{what}: `{name}` is not a chart coordinate")),
        }
    }
    if let Some(idx) = coords.iter().position(|v| v.is_nan()) {
        return input(format!(
            "{what}: no value for coordinate `{}`",
            chart.coordinate_at(idx)
        ));
    }
    Ok(Point::new(coords))
}

pub fn load_system_file(path: &Path) -> CliResult<SystemSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let file: SystemFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    resolve(file)
}

pub fn resolve(file: SystemFile) -> CliResult<SystemSpec> {
    if file.n == 0 || file.k == 0 {
        return input("n and k must be positive".into());
    }
    let mut chart = Chart::new(file.n, file.k);
    for (name, range) in &file.safe_box {
        if !range[0].is_finite() || !range[1].is_finite() || range[0] >= range[1] {
            return input(format!("safe_box.{name}: empty interval"));
        }
        match symbol_for(&chart, name)? {
            Symbol::T(a) => chart.set_param_box(a, range[0], range[1]),
            sym => chart.set_coord_box(sym, range[0], range[1]),
        }
    }

    let parse_field = |text: &str, field: &str| -> CliResult<ksym_core::Expr> {
        parse(text, &chart).map_err(|e| CliError::Input(format!("{field}: {e}")))
    };

    let h = parse_field(&file.hamiltonian, "hamiltonian")?;
    let system = HamiltonianSystem::new(chart.clone(), h)
        .map_err(|e| CliError::Input(format!("hamiltonian: {e}")))?;

    let mut candidates = BTreeMap::new();
    for (name, spec) in &file.candidates {
        let field = |i: usize| format!("candidates.{name}.components[{i}]");
        let comps: Vec<ksym_core::Expr> = spec
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| parse_field(c, &field(i)))
            .collect::<CliResult<_>>()?;
        let vf = match spec.kind.as_str() {
            "lift" => QVectorField::new(chart.clone(), comps)
                .map_err(|e| CliError::Input(format!("candidates.{name}: {e}")))?
                .canonical_lift(),
            "full" => VectorField::new(chart.clone(), comps)
                .map_err(|e| CliError::Input(format!("candidates.{name}: {e}")))?,
            other => {
                return input(format!(
                    "candidates.{name}: kind must be \"lift\" or \"full\", got \"{other}\""
                ))
            }
        };
        candidates.insert(name.clone(), (spec.kind.clone(), vf));
    }

    let mut sections = BTreeMap::new();
    for (name, comps) in &file.sections {
        let exprs: Vec<ksym_core::Expr> = comps
            .iter()
            .enumerate()
            .map(|(i, c)| parse_field(c, &format!("sections.{name}[{i}]")))
            .collect::<CliResult<_>>()?;
        let section = AnalyticSection::new(chart.clone(), exprs)
            .map_err(|e| CliError::Input(format!("sections.{name}: {e}")))?;
        sections.insert(name.clone(), section);
    }

    let mut grids = BTreeMap::new();
    for (name, spec) in &file.grids {
        if spec.origin.len() != file.k
            || spec.spacing.len() != file.k
            || spec.counts.len() != file.k
        {
            return input(format!(
                "grids.{name}: origin/spacing/counts must have length k"
            ));
        }
        if spec.spacing.iter().any(|h| !h.is_finite() || *h <= 0.0) {
            return input(format!("grids.{name}: spacings must be positive"));
        }
        if spec.counts.contains(&0) {
            return input(format!("grids.{name}: counts must be positive"));
        }
        let axes: Vec<GridAxis> = (0..file.k)
            .map(|a| GridAxis {
                origin: spec.origin[a],
                spacing: spec.spacing[a],
                count: spec.counts[a],
            })
            .collect();
        let source = match (&spec.start, &spec.section) {
            (Some(_), Some(_)) => {
                return input(format!(
                    "grids.{name}: give either start or section, not both"
                ))
            }
            (Some(map), None) => GridSource::Start(point_from_map(
                &chart,
                map,
                &format!("grids.{name}.start"),
                None,
            )?),
            (None, Some(section)) => {
                if !sections.contains_key(section) {
                    return input(format!("grids.{name}: unknown section `{section}`"));
                }
                GridSource::Section(section.clone())
            }
            (None, None) => {
                return input(format!("grids.{name}: needs a start point or a section"))
            }
        };
        grids.insert(name.clone(), GridDef { axes, source });
    }

    let n_max = file.n_max.unwrap_or(5);
    if n_max < 1 {
        return input("n_max must be >= 1".into());
    }
    let base = if file.base_point.is_empty() {
        chart.box_center()
    } else {
        point_from_map(
            &chart,
            &file.base_point,
            "base_point",
            Some(&chart.box_center()),
        )?
    };

    Ok(SystemSpec {
        system,
        hamiltonian_text: file.hamiltonian.clone(),
        candidates,
        sections,
        grids,
        tol_path: file.tolerances.tol_path.unwrap_or(DEFAULT_TOL_PATH),
        zero_eps: file.tolerances.zero_eps,
        verify_tol: file.tolerances.verify.unwrap_or(1e-8),
        n_max,
        base,
    })
}

/// Apply `--base q_1=1,p_1_1=0` style overrides on top of a base point.
pub fn apply_base_overrides(chart: &Chart, base: &Point, overrides: &str) -> CliResult<Point> {
    let mut map = BTreeMap::new();
    for pair in overrides.split(',').filter(|s| !s.is_empty()) {
        let Some((name, value)) = pair.split_once('=') else {
            return input(format!("--base: expected name=value, got `{pair}`"));
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("--base: bad number in `{pair}`")))?;
        map.insert(name.trim().to_string(), value);
    }
    point_from_map(chart, &map, "--base", Some(base))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> CliResult<SystemSpec> {
        let file: SystemFile =
            serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        resolve(file)
    }

    #[test]
    fn minimal_file_resolves_with_defaults() {
        let spec = load(r#"{"n": 1, "k": 1, "hamiltonian": "p_1_1/q_1"}"#).unwrap();
        assert_eq!(spec.n_max, 5);
        assert_eq!(spec.verify_tol, 1e-8);
        // Default base is the safe-box center.
        assert_eq!(spec.base.coords(), &[1.0, 1.0]);
    }

    #[test]
    fn safe_box_applies_to_coordinates_and_parameters() {
        let spec = load(
            r#"{"n": 1, "k": 1, "hamiltonian": "q_1",
                "safe_box": {"q_1": [2.0, 3.0], "t_1": [0.1, 0.2]}}"#,
        )
        .unwrap();
        assert_eq!(spec.chart().coord_box(0), (2.0, 3.0));
        assert_eq!(spec.chart().param_box(1), (0.1, 0.2));
        assert_eq!(spec.base.coords()[0], 2.5);
    }

    #[test]
    fn bad_candidate_kind_is_an_input_error() {
        let err = load(
            r#"{"n": 1, "k": 1, "hamiltonian": "q_1",
                "candidates": {"y": {"kind": "vertical", "components": ["1", "0"]}}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Input(_)));
    }

    #[test]
    fn grid_needs_exactly_one_source() {
        let both = r#"{"n": 1, "k": 1, "hamiltonian": "q_1",
            "sections": {"s": ["t_1", "0"]},
            "grids": {"g": {"origin": [0], "spacing": [0.1], "counts": [3],
                            "start": {"q_1": 0, "p_1_1": 0}, "section": "s"}}}"#;
        assert!(matches!(load(both), Err(CliError::Input(_))));
        let neither = r#"{"n": 1, "k": 1, "hamiltonian": "q_1",
            "grids": {"g": {"origin": [0], "spacing": [0.1], "counts": [3]}}}"#;
        assert!(matches!(load(neither), Err(CliError::Input(_))));
    }

    #[test]
    fn incomplete_start_point_is_rejected() {
        let err = load(
            r#"{"n": 1, "k": 1, "hamiltonian": "q_1",
                "grids": {"g": {"origin": [0], "spacing": [0.1], "counts": [3],
                                "start": {"q_1": 0}}}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("p_1_1"), "{err}");
    }

    #[test]
    fn base_overrides_parse_and_validate() {
        let spec = load(r#"{"n": 1, "k": 1, "hamiltonian": "q_1"}"#).unwrap();
        let pt = apply_base_overrides(spec.chart(), &spec.base, "q_1=2.5, p_1_1=-1").unwrap();
        assert_eq!(pt.coords(), &[2.5, -1.0]);
        assert!(apply_base_overrides(spec.chart(), &spec.base, "q_9=1").is_err());
        assert!(apply_base_overrides(spec.chart(), &spec.base, "q_1").is_err());
    }

    #[test]
    fn route_mismatch_maps_to_exit_three() {
        let e = CliError::from(ksym_core::Error::RouteMismatch { component: 1 });
        assert_eq!(e.exit_code(), 3);
        let e = CliError::from(ksym_core::Error::NonIntegrable {
            residual: 1.0,
            tol: 1e-6,
        });
        assert_eq!(e.exit_code(), 2);
        let e = CliError::from(ksym_core::Error::Syntax {
            offset: 0,
            message: String::new(),
        });
        assert_eq!(e.exit_code(), 1);
    }
}
