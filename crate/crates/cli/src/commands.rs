//! The classify / charge / simulate / verify workflows.

use std::path::{Path, PathBuf};

use ksym_core::chart::Point;
use ksym_core::expr::{Expr, ZeroTest};
use ksym_core::hdw::{hdw_residual_grid, integrate_section, particular_kvector, SolutionGrid};
use ksym_core::noether::{
    classify_cartan_order, closedness_check, conservation_check_numeric,
    conservation_check_symbolic, noether_charge, ChargeExpr, ConservedQuantity,
};

use crate::report::*;
use crate::schema::{GridSource, SystemSpec};
use crate::{CliError, CliResult};

pub fn zero_test_for(spec: &SystemSpec, seed: u64) -> ZeroTest {
    let mut zt = ZeroTest::with_seed(seed);
    if let Some(eps) = spec.zero_eps {
        zt.eps = eps;
    }
    zt
}

pub fn system_summary(spec: &SystemSpec) -> SystemSummary {
    SystemSummary {
        n: spec.chart().n(),
        k: spec.chart().k(),
        hamiltonian: spec.hamiltonian_text.clone(),
    }
}

/// Classify every candidate. Exit code 2 when any candidate trips the
/// internal consistency assertion.
pub fn cmd_classify(
    spec: &SystemSpec,
    n_max_override: Option<usize>,
    seed: u64,
) -> CliResult<(RunReport, i32)> {
    let zero = zero_test_for(spec, seed);
    let n_max = n_max_override.unwrap_or(spec.n_max);
    if n_max < 1 {
        return Err(CliError::Input("--nmax must be >= 1".into()));
    }
    let mut out = Vec::new();
    let mut worst_code = 0;
    for (name, (kind, y)) in &spec.candidates {
        let sr = classify_cartan_order(&spec.system, y, n_max, &zero)?;
        let (closedness, inconsistency) = match sr.order {
            Some(n) => match closedness_check(spec.chart(), y, n, &zero) {
                Ok(verdicts) => (
                    Some(verdicts.iter().map(|v| v.label().to_string()).collect()),
                    None,
                ),
                Err(ksym_core::Error::InternalInconsistency(msg)) => {
                    worst_code = 2;
                    (None, Some(msg))
                }
                Err(e) => return Err(e.into()),
            },
            None => (None, None),
        };
        out.push(CandidateReport {
            name: name.clone(),
            kind: kind.clone(),
            n_max,
            order: sr.order,
            lie_h: sr.lie_h.label().to_string(),
            lie_h_zero: sr.lie_h_zero(),
            residuals: sr
                .residuals
                .iter()
                .map(|row| row.iter().map(|v| v.label().to_string()).collect())
                .collect(),
            bracket_in_kernel: sr.bracket_in_kernel,
            bracket_evidence: "necessary-condition evidence only".to_string(),
            closedness,
            inconsistency,
        });
    }
    let mut report = RunReport::new("classify", seed, system_summary(spec));
    report.classify = Some(out);
    Ok((report, worst_code))
}

/// Derive the conserved quantity of one classified candidate.
pub fn derive_charge(
    spec: &SystemSpec,
    candidate: &str,
    base: &Point,
    seed: u64,
) -> CliResult<(usize, ConservedQuantity)> {
    let zero = zero_test_for(spec, seed);
    let Some((_, y)) = spec.candidates.get(candidate) else {
        return Err(CliError::Input(format!("unknown candidate `{candidate}`")));
    };
    let sr = classify_cartan_order(&spec.system, y, spec.n_max, &zero)?;
    let Some(order) = sr.order else {
        return Err(CliError::Input(format!(
            "candidate `{candidate}` has no Cartan order <= {}; no charge",
            spec.n_max
        )));
    };
    if !sr.lie_h_zero() {
        return Err(CliError::Input(format!(
            "candidate `{candidate}` does not preserve H (L(Y)H != 0); no charge"
        )));
    }
    let cq = noether_charge(&spec.system, y, order, base, &zero)?;
    Ok((order, cq))
}

pub fn cmd_charge(
    spec: &SystemSpec,
    candidate: &str,
    base_overrides: Option<&str>,
    seed: u64,
) -> CliResult<(RunReport, i32)> {
    let base = match base_overrides {
        Some(s) => crate::schema::apply_base_overrides(spec.chart(), &spec.base, s)?,
        None => spec.base.clone(),
    };
    let (order, cq) = derive_charge(spec, candidate, &base, seed)?;
    let mut report = RunReport::new("charge", seed, system_summary(spec));
    report.charge = Some(ChargeReport {
        candidate: candidate.to_string(),
        order,
        base: base.coords().to_vec(),
        g: cq.g.iter().map(ChargeExpr::describe).collect(),
        g_closed_form: cq.g.iter().map(|g| g.closed_form().is_some()).collect(),
        xi: cq.xi.iter().map(ChargeExpr::describe).collect(),
        route_agreement: cq
            .route_agreement
            .iter()
            .map(|v| v.label().to_string())
            .collect(),
    });
    Ok((report, 0))
}

/// Materialize a named grid: sample its section or integrate the
/// particular k-vector field from its start point.
pub fn realize_grid(
    spec: &SystemSpec,
    grid_name: &str,
    seed: u64,
) -> CliResult<(SolutionGrid, String)> {
    let zero = zero_test_for(spec, seed);
    let Some(def) = spec.grids.get(grid_name) else {
        return Err(CliError::Input(format!("unknown grid `{grid_name}`")));
    };
    match &def.source {
        GridSource::Section(name) => {
            let section = &spec.sections[name];
            let grid = section.sample_grid(&def.axes)?;
            Ok((grid, format!("analytic section `{name}`")))
        }
        GridSource::Start(start) => {
            let x = particular_kvector(&spec.system);
            let grid = integrate_section(&x, start, &def.axes, spec.tol_path, &zero)?;
            Ok((grid, "particular k-vector field sweep".to_string()))
        }
    }
}

pub fn cmd_simulate(
    spec: &SystemSpec,
    grid_name: &str,
    out_path: Option<&Path>,
    seed: u64,
) -> CliResult<(RunReport, i32)> {
    let (grid, source) = realize_grid(spec, grid_name, seed)?;
    let default_path = PathBuf::from(format!("{grid_name}.csv"));
    let path = out_path.unwrap_or(&default_path);
    grid.write_csv_path(path).map_err(CliError::from)?;
    let hdw_residual = hdw_residual_grid(&spec.system, &grid)?;
    let mut report = RunReport::new("simulate", seed, system_summary(spec));
    report.simulate = Some(SimulateReport {
        grid: grid_name.to_string(),
        source,
        axes: axis_summaries(&grid),
        csv_path: path.display().to_string(),
        hdw_residual,
        path_residual: grid.path_residual(),
        tol_path: spec.tol_path,
        bracket_warning: grid.bracket_warning(),
        integrability_note: integrability_note(&grid),
    });
    Ok((report, 0))
}

fn axis_summaries(grid: &SolutionGrid) -> Vec<AxisSummary> {
    grid.axes()
        .iter()
        .map(|a| AxisSummary {
            origin: a.origin,
            spacing: a.spacing,
            count: a.count,
        })
        .collect()
}

fn integrability_note(grid: &SolutionGrid) -> String {
    if grid.bracket_warning() {
        "bracket check could not certify commutation (sufficient condition); \
         path audit passed"
            .to_string()
    } else {
        "brackets vanish (sufficient condition for integrability)".to_string()
    }
}

pub enum GridInput<'a> {
    Named(&'a str),
    Csv(&'a Path),
}

pub fn cmd_verify(
    spec: &SystemSpec,
    candidate: &str,
    grid: GridInput<'_>,
    tol_override: Option<f64>,
    seed: u64,
) -> CliResult<(RunReport, i32)> {
    let zero = zero_test_for(spec, seed);
    let (_order, cq) = derive_charge(spec, candidate, &spec.base, seed)?;
    let (solution, source) = match grid {
        GridInput::Named(name) => realize_grid(spec, name, seed)?,
        GridInput::Csv(path) => {
            let grid = SolutionGrid::read_csv_path(path, spec.chart())?;
            (grid, format!("imported CSV {}", path.display()))
        }
    };
    let tolerance = tol_override.unwrap_or(spec.verify_tol);

    let closed: Option<Vec<Expr>> = cq.g.iter().map(|g| g.closed_form().cloned()).collect();
    let symbolic = match closed {
        Some(exprs) => Some(
            conservation_check_symbolic(
                &spec.system,
                &exprs,
                &particular_kvector(&spec.system),
                &zero,
            )?
            .label()
            .to_string(),
        ),
        None => None,
    };
    let numeric_sup = conservation_check_numeric(&cq.g, &solution)?;
    let pass =
        numeric_sup <= tolerance && symbolic.as_deref().map(|s| s != "nonzero").unwrap_or(true);

    let mut report = RunReport::new("verify", seed, system_summary(spec));
    report.verify = Some(VerifyReport {
        candidate: candidate.to_string(),
        grid_source: source,
        axes: axis_summaries(&solution),
        symbolic,
        numeric_sup,
        tolerance,
        pass,
    });
    Ok((report, if pass { 0 } else { 2 }))
}
