//! Implementations of the six subcommands. Each returns the rendered report
//! text; `main` handles printing and exit codes.

use serde_json::{json, Map, Value};

use ricscan_core::catalog;
use ricscan_core::chart::CurvatureReport;
use ricscan_core::deform::{self, assumption_margin, Direction, PointState, ScanResult, Theorem};
use ricscan_core::frame;
use ricscan_core::submersion::CanonicalVariationModel;
use ricscan_core::verify::{self, Suite};

use crate::error::CliError;
use crate::output::{cube, envelope, matrix, num, opt_num, to_json_string, vec_f64};
use crate::selector::{backend_for, parse_selector, ParsedSelector, Selection};
use crate::specfile::FileDeform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

pub fn catalog_command(format: OutputFormat) -> Result<String, CliError> {
    let entries = catalog::catalog_entries();
    match format {
        OutputFormat::Json => {
            let results: Vec<Value> = entries
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name,
                        "backend": e.backend.as_str(),
                        "params": e.params,
                        "has_reference": e.reference.is_some(),
                    })
                })
                .collect();
            to_json_string(&envelope(
                "catalog",
                Value::Null,
                Value::Array(results),
                Value::Null,
            ))
        }
        OutputFormat::Csv => {
            let mut out = String::from("name,backend,params,has_reference\n");
            for e in entries {
                out.push_str(&format!(
                    "{},{},\"{}\",{}\n",
                    e.name,
                    e.backend.as_str(),
                    e.params,
                    e.reference.is_some()
                ));
            }
            Ok(out)
        }
    }
}

fn report_json(report: &CurvatureReport) -> Value {
    let dim = report.dim();
    json!({
        "point": vec_f64(&report.point),
        "metric": matrix(&report.metric),
        "inverse_metric": matrix(&report.inverse_metric),
        "christoffel": cube(&report.christoffel, dim),
        "ricci": matrix(&report.ricci),
        "scalar": num(report.scalar),
        "traceless_ricci": matrix(&report.traceless_ricci),
        "ricci_eigs": vec_f64(&report.ricci_eigs),
        "traceless_norm_sq": num(report.traceless_norm_sq),
        "laplacian_scalar": opt_num(report.laplacian_scalar),
    })
}

fn report_csv(report: &CurvatureReport) -> String {
    let mut out = String::from("field,i,j,value\n");
    let dim = report.dim();
    for (axis, x) in report.point.iter().enumerate() {
        out.push_str(&format!("point,{},,{x:.17e}\n", axis + 1));
    }
    let mut push_matrix = |name: &str, m: &nalgebra::DMatrix<f64>| {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push_str(&format!("{name},{},{},{:.17e}\n", i + 1, j + 1, m[(i, j)]));
            }
        }
    };
    push_matrix("metric", &report.metric);
    push_matrix("inverse_metric", &report.inverse_metric);
    push_matrix("ricci", &report.ricci);
    push_matrix("traceless_ricci", &report.traceless_ricci);
    for k in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                out.push_str(&format!(
                    "christoffel_{},{},{},{:.17e}\n",
                    k + 1,
                    i + 1,
                    j + 1,
                    report.christoffel[(k * dim + i) * dim + j]
                ));
            }
        }
    }
    out.push_str(&format!("scalar,,,{:.17e}\n", report.scalar));
    for (i, l) in report.ricci_eigs.iter().enumerate() {
        out.push_str(&format!("ricci_eig,{},,{l:.17e}\n", i + 1));
    }
    out.push_str(&format!(
        "traceless_norm_sq,,,{:.17e}\n",
        report.traceless_norm_sq
    ));
    if let Some(lap) = report.laplacian_scalar {
        out.push_str(&format!("laplacian_scalar,,,{lap:.17e}\n"));
    }
    out
}

fn parse_point_csv(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Parse(format!("invalid coordinate '{p}'")))
        })
        .collect()
}

pub fn curvature_command(
    selector: &str,
    point: Option<&str>,
    laplacian: bool,
    format: OutputFormat,
) -> Result<String, CliError> {
    let parsed = parse_selector(selector)?;
    let report = match &parsed.selection {
        Selection::Chart { metric, deform } => {
            let point = match point {
                Some(text) => parse_point_csv(text)?,
                None => metric.center(),
            };
            match deform {
                Some(FileDeform::Traceless { s }) => {
                    if laplacian {
                        return Err(CliError::Parse(
                            "the Laplacian is unavailable for traceless-deformed metrics".into(),
                        ));
                    }
                    metric.deformed_curvature_report(&point, *s)?
                }
                Some(FileDeform::Conformal { .. }) => unreachable!("applied at load"),
                None => metric.curvature_report(&point, laplacian)?,
            }
        }
        Selection::Frame(metric) => frame::frame_curvature(metric)?,
        Selection::Variation(model) => variation_report(model)?,
    };

    match format {
        OutputFormat::Json => {
            let inputs = json!({
                "metric": parsed.label,
                "laplacian": laplacian,
            });
            to_json_string(&envelope(
                "curvature",
                inputs,
                report_json(&report),
                Value::Null,
            ))
        }
        OutputFormat::Csv => Ok(report_csv(&report)),
    }
}

/// Canonical variations as a full curvature report in the orthonormal block
/// basis.
fn variation_report(model: &CanonicalVariationModel) -> Result<CurvatureReport, CliError> {
    let c = model.curvature();
    let dim = model.total_dim();
    let metric = model.metric_matrix();
    let ricci = model.ricci_matrix();
    let mut ricci_eigs = vec![c.lambda_v; model.dim_f];
    ricci_eigs.extend(vec![c.lambda_h; model.dim_b]);
    ricci_eigs.sort_by(f64::total_cmp);
    let traceless_ricci = &ricci - metric.scale(c.scalar / dim as f64);
    Ok(CurvatureReport {
        point: Vec::new(),
        metric: metric.clone(),
        inverse_metric: metric,
        christoffel: vec![0.0; dim * dim * dim],
        ricci,
        scalar: c.scalar,
        traceless_ricci,
        ricci_eigs,
        traceless_norm_sq: c.traceless_norm_sq,
        laplacian_scalar: Some(0.0),
    })
}

pub fn check_command(theorem: u8, selector: &str, points: &str) -> Result<String, CliError> {
    let theorem = Theorem::from_number(theorem)
        .ok_or_else(|| CliError::Parse(format!("theorem must be 1..=4, got {theorem}")))?;
    let parsed = parse_selector(selector)?;
    let backend = backend_for(&parsed, points)?;

    let mut results = Vec::new();
    for index in 0..backend.point_count() {
        let state = backend.state(index)?;
        let margins = assumption_margin(&state, theorem);
        results.push(json!({
            "point_id": backend.point_id(index),
            "margin": num(margins.pos_s),
            "margin_neg_branch": num(margins.neg_s),
            "scalar": num(state.scalar),
            "traceless_norm_sq": num(state.traceless_norm_sq),
            "laplacian_scalar": num(state.lap_scalar),
            "ricci_eigs": vec_f64(&state.ricci_eigs),
            "einstein": state.is_einstein(),
        }));
    }
    let inputs = json!({
        "metric": parsed.label,
        "theorem": theorem.number(),
        "points": points,
    });
    to_json_string(&envelope(
        "check",
        inputs,
        Value::Array(results),
        Value::Null,
    ))
}

fn scan_json(scan: &ScanResult) -> (Value, Value) {
    let samples: Vec<Value> = scan
        .samples
        .iter()
        .map(|s| {
            json!({
                "s": num(s.s),
                "point_id": s.point_id,
                "margin": opt_num(s.margin),
                "spd_ok": s.spd_ok,
            })
        })
        .collect();
    let results = json!({
        "theorem": scan.theorem.number(),
        "direction": scan.direction.as_str(),
        "s_grid": vec_f64(&scan.s_grid),
        "spd_limit": opt_num(scan.spd_limit),
        "degenerate": scan.degenerate,
        "admissible": scan.admissible
            .map(|(lo, hi)| json!([num(lo), num(hi)]))
            .unwrap_or(Value::Null),
        "samples": samples,
    });
    let residuals: Vec<Value> = scan
        .slope_checks
        .iter()
        .map(|c| {
            json!({
                "point_id": c.point_id,
                "slope_at_zero": num(c.slope),
                "assumption_margin": num(c.assumption_margin),
                "rel_deviation": num(c.rel_deviation),
            })
        })
        .collect();
    (results, Value::Array(residuals))
}

#[allow(clippy::too_many_arguments)]
pub fn scan_command(
    theorem: u8,
    selector: &str,
    direction: &str,
    s_max: f64,
    steps: usize,
    points: &str,
    format: OutputFormat,
) -> Result<String, CliError> {
    let theorem = Theorem::from_number(theorem)
        .ok_or_else(|| CliError::Parse(format!("theorem must be 1..=4, got {theorem}")))?;
    let direction = match direction {
        "pos" => Direction::Positive,
        "neg" => Direction::Negative,
        other => {
            return Err(CliError::Parse(format!(
                "direction must be pos or neg, got '{other}'"
            )))
        }
    };
    let parsed = parse_selector(selector)?;
    let backend = backend_for(&parsed, points)?;
    let scan = deform::scan_s(backend.as_ref(), theorem, direction, s_max, steps)?;

    match format {
        OutputFormat::Json => {
            let (results, residuals) = scan_json(&scan);
            let inputs = json!({
                "metric": parsed.label,
                "theorem": scan.theorem.number(),
                "direction": scan.direction.as_str(),
                "s_max": num(s_max),
                "steps": steps,
                "points": points,
            });
            to_json_string(&envelope("scan", inputs, results, residuals))
        }
        OutputFormat::Csv => Ok(scan.to_csv()),
    }
}

pub fn verify_command(suite: &str, seed: u64) -> Result<String, CliError> {
    let suite = Suite::from_name(suite)?;
    let report = verify::run_suite(suite, seed)?;
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "observed": num(c.observed),
                "bound": num(c.bound),
                "kind": if c.upper_bound { "max" } else { "min" },
                "passed": c.passed,
            })
        })
        .collect();
    let inputs = json!({ "suite": report.suite, "seed": report.seed });
    let results = json!({ "passed": report.passed });
    let text = to_json_string(&envelope("verify", inputs, results, Value::Array(checks)))?;
    if !report.passed {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        // print the report before signalling failure
        print!("{text}");
        return Err(CliError::SuiteFailed(failing.join(", ")));
    }
    Ok(text)
}

fn states_for(parsed: &ParsedSelector, points_spec: &str) -> Result<Vec<PointState>, CliError> {
    let backend = backend_for(parsed, points_spec)?;
    (0..backend.point_count())
        .map(|i| backend.state(i).map_err(CliError::from))
        .collect()
}

pub fn functional_command(g0: &str, g: &str, points: &str) -> Result<String, CliError> {
    let parsed0 = parse_selector(g0)?;
    let parsed1 = parse_selector(g)?;
    // matched sampling: chart pairs must share the domain so the same point
    // list applies to both
    if let (Selection::Chart { metric: m0, .. }, Selection::Chart { metric: m1, .. }) =
        (&parsed0.selection, &parsed1.selection)
    {
        if m0.domain() != m1.domain() {
            return Err(CliError::Parse(
                "functional needs chart metrics over the same domain".into(),
            ));
        }
    }
    let states0 = states_for(&parsed0, points)?;
    let states1 = states_for(&parsed1, points)?;
    let f = deform::remark_functionals(&states0, &states1)?;

    let mut results = Map::new();
    results.insert("f1".into(), num(f.f1));
    results.insert("f2".into(), num(f.f2));
    results.insert("r_min".into(), num(f.r_min));
    results.insert("samples".into(), Value::from(states0.len()));
    let inputs = json!({ "g0": parsed0.label, "g": parsed1.label, "points": points });
    to_json_string(&envelope(
        "functional",
        inputs,
        Value::Object(results),
        Value::Null,
    ))
}
