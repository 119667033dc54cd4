//! Machine-readable run reports and their human-readable rendering.
//!
//! The JSON document is deterministic for fixed inputs: structs with
//! fixed field order, BTree-ordered collections, and no wall-clock
//! content (timings are printed to the console only).

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub command: String,
    pub seed: u64,
    pub system: SystemSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classify: Option<Vec<CandidateReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charge: Option<ChargeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selftest: Option<SelftestReport>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, system: SystemSummary) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            system,
            classify: None,
            charge: None,
            simulate: None,
            verify: None,
            selftest: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

#[derive(Debug, Serialize)]
pub struct SystemSummary {
    pub n: usize,
    pub k: usize,
    pub hamiltonian: String,
}

impl SystemSummary {
    pub fn none() -> Self {
        SystemSummary {
            n: 0,
            k: 0,
            hamiltonian: String::new(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CandidateReport {
    pub name: String,
    pub kind: String,
    pub n_max: usize,
    /// Smallest order with all L^n(Y)omega^A zero, if one exists.
    pub order: Option<usize>,
    pub lie_h: String,
    pub lie_h_zero: bool,
    /// `residuals[m-1][A-1]`: verdict for L^m(Y)omega^A.
    pub residuals: Vec<Vec<String>>,
    /// Necessary-condition evidence only (bracket with the particular
    /// solution); false does not refute the candidate.
    pub bracket_in_kernel: bool,
    pub bracket_evidence: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closedness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconsistency: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ChargeReport {
    pub candidate: String,
    pub order: usize,
    pub base: Vec<f64>,
    /// Closed-form expression or quadrature descriptor, per A.
    pub g: Vec<String>,
    pub g_closed_form: Vec<bool>,
    pub xi: Vec<String>,
    pub route_agreement: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub grid: String,
    pub source: String,
    pub axes: Vec<AxisSummary>,
    pub csv_path: String,
    pub hdw_residual: f64,
    pub path_residual: f64,
    pub tol_path: f64,
    pub bracket_warning: bool,
    pub integrability_note: String,
}

#[derive(Debug, Serialize)]
pub struct AxisSummary {
    pub origin: f64,
    pub spacing: f64,
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub candidate: String,
    pub grid_source: String,
    pub axes: Vec<AxisSummary>,
    /// Absent when some component is quadrature-backed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbolic: Option<String>,
    pub numeric_sup: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckLine>,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Plain-text summary for standard output.
pub fn render_human(report: &RunReport) -> String {
    let mut out = String::new();
    let push = |out: &mut String, line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    push(
        &mut out,
        format!(
            "ksym {} (engine {}, seed {})",
            report.command, report.engine_version, report.seed
        ),
    );
    if report.system.n > 0 {
        push(
            &mut out,
            format!(
                "system: n={} k={} H = {}",
                report.system.n, report.system.k, report.system.hamiltonian
            ),
        );
    }
    if let Some(classify) = &report.classify {
        for c in classify {
            let order = match c.order {
                Some(n) => format!("order {n}"),
                None => format!("no order <= {}", c.n_max),
            };
            push(
                &mut out,
                format!("candidate `{}` ({}): {}", c.name, c.kind, order),
            );
            push(
                &mut out,
                format!("  L(Y)H: {} (lie_h_zero = {})", c.lie_h, c.lie_h_zero),
            );
            for (m, row) in c.residuals.iter().enumerate() {
                push(
                    &mut out,
                    format!("  L^{}(Y)omega: [{}]", m + 1, row.join(", ")),
                );
            }
            push(
                &mut out,
                format!(
                    "  bracket [Y,X] in ker omega#: {} ({})",
                    c.bracket_in_kernel, c.bracket_evidence
                ),
            );
            if let Some(closed) = &c.closedness {
                push(
                    &mut out,
                    format!("  closedness of charge forms: [{}]", closed.join(", ")),
                );
            }
            if let Some(bad) = &c.inconsistency {
                push(&mut out, format!("  INTERNAL INCONSISTENCY: {bad}"));
            }
        }
    }
    if let Some(ch) = &report.charge {
        push(
            &mut out,
            format!("charge for `{}` at order {}:", ch.candidate, ch.order),
        );
        for (a, g) in ch.g.iter().enumerate() {
            push(&mut out, format!("  g^{} = {}", a + 1, g));
            push(&mut out, format!("  xi^{} = {}", a + 1, ch.xi[a]));
        }
        push(
            &mut out,
            format!("  route agreement: [{}]", ch.route_agreement.join(", ")),
        );
        push(
            &mut out,
            format!(
                "  base point: ({})",
                ch.base
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        );
    }
    if let Some(sim) = &report.simulate {
        push(
            &mut out,
            format!("simulated grid `{}` from {}", sim.grid, sim.source),
        );
        for (a, ax) in sim.axes.iter().enumerate() {
            push(
                &mut out,
                format!(
                    "  t_{}: origin {} spacing {} count {}",
                    a + 1,
                    ax.origin,
                    ax.spacing,
                    ax.count
                ),
            );
        }
        push(&mut out, format!("  CSV: {}", sim.csv_path));
        push(
            &mut out,
            format!(
                "  HDW residual (sup, central differences): {:.6e}",
                sim.hdw_residual
            ),
        );
        push(
            &mut out,
            format!(
                "  path-dependence residual: {:.6e} (tol {:.1e})",
                sim.path_residual, sim.tol_path
            ),
        );
        push(
            &mut out,
            format!("  integrability: {}", sim.integrability_note),
        );
    }
    if let Some(v) = &report.verify {
        push(
            &mut out,
            format!("verify `{}` on {}", v.candidate, v.grid_source),
        );
        if let Some(s) = &v.symbolic {
            push(&mut out, format!("  symbolic divergence: {s}"));
        } else {
            push(
                &mut out,
                "  symbolic check skipped (quadrature-backed charge)".into(),
            );
        }
        push(
            &mut out,
            format!(
                "  numeric divergence sup-norm: {:.6e} (tolerance {:.1e}, spacing [{}])",
                v.numeric_sup,
                v.tolerance,
                v.axes
                    .iter()
                    .map(|a| a.spacing.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        );
        push(
            &mut out,
            format!("  verdict: {}", if v.pass { "PASS" } else { "FAIL" }),
        );
    }
    if let Some(st) = &report.selftest {
        for check in &st.checks {
            push(
                &mut out,
                format!(
                    "[{}] {} - {}",
                    if check.pass { "pass" } else { "FAIL" },
                    check.name,
                    check.detail
                ),
            );
        }
        push(
            &mut out,
            format!("selftest: {} passed, {} failed", st.passed, st.failed),
        );
    }
    out
}
