//! Metric selectors: `file:<path>`, `berger:p=..,q=..`, `hopf:n=..,t=..`,
//! `cp:n=..,t=..`, `product:n=..,m=..,lambda=..`, `sphere:n=..`,
//! `hyperbolic:m=..,lambda=..`, `torus`, `heisenberg`, `sl2r`, `e11`
//! (the frame entries take an optional diagonal inner product `d1,d2,d3`).

use std::collections::HashMap;
use std::path::PathBuf;

use ricscan_core::catalog;
use ricscan_core::chart::ChartMetric;
use ricscan_core::deform::{ChartBackend, CurvatureBackend, FrameBackend, VariationBackend};
use ricscan_core::frame::{berger_metric, FrameMetric};
use ricscan_core::submersion::CanonicalVariationModel;

use crate::error::CliError;
use crate::specfile::{load_metric_file, FileDeform};

#[derive(Debug)]
pub enum Selection {
    Chart {
        metric: ChartMetric,
        deform: Option<FileDeform>,
    },
    Frame(FrameMetric),
    Variation(CanonicalVariationModel),
}

#[derive(Debug)]
pub struct ParsedSelector {
    pub label: String,
    pub selection: Selection,
}

fn params(text: Option<&str>) -> Result<HashMap<String, f64>, CliError> {
    let mut out = HashMap::new();
    let Some(text) = text else {
        return Ok(out);
    };
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("expected key=value, got '{pair}'")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("invalid number '{v}' for '{k}'")))?;
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

fn get(map: &HashMap<String, f64>, key: &str, default: f64) -> f64 {
    map.get(key).copied().unwrap_or(default)
}

fn get_usize(map: &HashMap<String, f64>, key: &str, default: usize) -> Result<usize, CliError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) if *v >= 0.0 && v.fract() == 0.0 => Ok(*v as usize),
        Some(v) => Err(CliError::Parse(format!(
            "parameter {key} must be a non-negative integer, got {v}"
        ))),
    }
}

pub fn parse_selector(text: &str) -> Result<ParsedSelector, CliError> {
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (text, None),
    };
    let label = text.to_string();
    let selection = match name {
        "file" => {
            let path = rest.ok_or_else(|| CliError::Parse("file: needs a path".into()))?;
            let file = load_metric_file(&PathBuf::from(path))?;
            let (metric, deform) = match file.deform {
                Some(FileDeform::Conformal { s, u }) => (file.metric.conformal(&u, s)?, None),
                other => (file.metric, other),
            };
            Selection::Chart { metric, deform }
        }
        "berger" => {
            let kv = params(rest)?;
            let p = get(&kv, "p", 1.0);
            let q = get(&kv, "q", 3.5);
            Selection::Frame(berger_metric(p, q)?)
        }
        "heisenberg" | "sl2r" | "e11" => {
            let kv = params(rest)?;
            let diag = [
                get(&kv, "d1", 1.0),
                get(&kv, "d2", 1.0),
                get(&kv, "d3", 1.0),
            ];
            Selection::Frame(catalog::frame_entry(name, diag)?)
        }
        "hopf" => {
            let kv = params(rest)?;
            let n = get_usize(&kv, "n", 1)?;
            let t = get(&kv, "t", 1.0);
            Selection::Variation(CanonicalVariationModel::hopf_family(n, t)?)
        }
        "cp" => {
            let kv = params(rest)?;
            let n = get_usize(&kv, "n", 1)?;
            let t = get(&kv, "t", 1.0);
            Selection::Variation(CanonicalVariationModel::cp_family(n, t)?)
        }
        "product" => {
            let kv = params(rest)?;
            let n = get_usize(&kv, "n", 2)?;
            let m = get_usize(&kv, "m", 2)?;
            let lambda = get(&kv, "lambda", 1.0);
            let (metric, _) = catalog::product_space_form(n, m, lambda)?;
            Selection::Chart {
                metric,
                deform: None,
            }
        }
        "sphere" => {
            let kv = params(rest)?;
            let n = get_usize(&kv, "n", 3)?;
            if !(2..=8).contains(&n) {
                return Err(CliError::Parse(format!(
                    "sphere dimension must be 2..=8, got {n}"
                )));
            }
            Selection::Chart {
                metric: catalog::sphere_chart(n),
                deform: None,
            }
        }
        "hyperbolic" => {
            let kv = params(rest)?;
            let m = get_usize(&kv, "m", 2)?;
            let lambda = get(&kv, "lambda", 1.0);
            if !(2..=8).contains(&m) {
                return Err(CliError::Parse(format!(
                    "hyperbolic dimension must be 2..=8, got {m}"
                )));
            }
            // the negated form also rejects NaN
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(lambda >= 1.0) {
                return Err(CliError::Parse(format!(
                    "hyperbolic scale must be >= 1, got {lambda}"
                )));
            }
            Selection::Chart {
                metric: catalog::hyperbolic_chart(m, lambda),
                deform: None,
            }
        }
        "torus" => Selection::Chart {
            metric: catalog::flat_torus_chart(),
            deform: None,
        },
        other => {
            return Err(CliError::Parse(format!(
                "unknown metric selector '{other}'"
            )))
        }
    };
    Ok(ParsedSelector { label, selection })
}

/// Point-set selectors: `origin`, `grid:lo:hi:k[,lo:hi:k...]`, `halton:N`.
pub fn parse_points(text: &str, metric: &ChartMetric) -> Result<Vec<Vec<f64>>, CliError> {
    if text == "origin" {
        return Ok(vec![metric.center()]);
    }
    if let Some(spec) = text.strip_prefix("halton:") {
        let count: usize = spec
            .parse()
            .map_err(|_| CliError::Parse(format!("invalid halton count '{spec}'")))?;
        if count == 0 {
            return Err(CliError::Parse("halton count must be positive".into()));
        }
        return Ok(catalog::halton_points(metric.domain(), count, 0.8));
    }
    if let Some(spec) = text.strip_prefix("grid:") {
        let axes: Vec<&str> = spec.split(',').collect();
        if axes.len() != metric.dim() {
            return Err(CliError::Parse(format!(
                "grid has {} axes but the chart has dimension {}",
                axes.len(),
                metric.dim()
            )));
        }
        let mut axis_points: Vec<Vec<f64>> = Vec::with_capacity(axes.len());
        for axis in axes {
            let parts: Vec<&str> = axis.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::Parse(format!(
                    "grid axis '{axis}' is not lo:hi:k"
                )));
            }
            let lo: f64 = parts[0]
                .parse()
                .map_err(|_| CliError::Parse(format!("bad grid bound '{}'", parts[0])))?;
            let hi: f64 = parts[1]
                .parse()
                .map_err(|_| CliError::Parse(format!("bad grid bound '{}'", parts[1])))?;
            let k: usize = parts[2]
                .parse()
                .map_err(|_| CliError::Parse(format!("bad grid count '{}'", parts[2])))?;
            if k == 0 {
                return Err(CliError::Parse("grid counts must be positive".into()));
            }
            let points = if k == 1 {
                vec![lo]
            } else {
                (0..k)
                    .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
                    .collect()
            };
            axis_points.push(points);
        }
        // Cartesian product, first axis slowest
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axis_points {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for stem in &out {
                for &value in axis {
                    let mut point = stem.clone();
                    point.push(value);
                    next.push(point);
                }
            }
            out = next;
        }
        return Ok(out);
    }
    Err(CliError::Parse(format!(
        "unknown point set '{text}' (expected origin, grid:..., or halton:N)"
    )))
}

/// A selection turned into a margin/scan backend. Chart selections carry the
/// requested point sample; homogeneous backends use their single point.
pub fn backend_for(
    parsed: &ParsedSelector,
    points_spec: &str,
) -> Result<Box<dyn CurvatureBackend>, CliError> {
    match &parsed.selection {
        Selection::Chart { metric, deform } => {
            if deform.is_some() {
                return Err(CliError::Parse(
                    "a traceless deform block in a metric file is only supported by the \
                     curvature command"
                        .into(),
                ));
            }
            let points = parse_points(points_spec, metric)?;
            Ok(Box::new(ChartBackend::new(
                metric.clone(),
                points,
                parsed.label.clone(),
            )))
        }
        Selection::Frame(metric) => Ok(Box::new(FrameBackend::new(
            metric.clone(),
            parsed.label.clone(),
        ))),
        Selection::Variation(model) => Ok(Box::new(VariationBackend::new(
            model.clone(),
            parsed.label.clone(),
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors_parse_with_defaults() {
        for text in [
            "berger:p=1,q=3.5",
            "berger",
            "heisenberg",
            "sl2r:d1=1,d2=2,d3=1",
            "hopf:n=2,t=0.5",
            "cp:n=3",
            "product:n=2,m=2,lambda=2",
            "sphere:n=2",
            "hyperbolic:m=3,lambda=2",
            "torus",
        ] {
            parse_selector(text).unwrap_or_else(|e| panic!("{text}: {e}"));
        }
    }

    #[test]
    fn bad_selectors_are_parse_errors() {
        assert_eq!(parse_selector("unknown").unwrap_err().exit_code(), 2);
        assert_eq!(
            parse_selector("berger:p=2,q=0.5").unwrap_err().exit_code(),
            2
        );
        assert_eq!(parse_selector("hopf:n=1.5").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn grid_points_cartesian() {
        let metric = catalog::flat_torus_chart();
        let pts = parse_points("grid:0:1:3,2:3:2", &metric).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, 2.0]);
        assert_eq!(pts[5], vec![1.0, 3.0]);
    }

    #[test]
    fn origin_and_halton() {
        let metric = catalog::sphere_chart(2);
        assert_eq!(parse_points("origin", &metric).unwrap().len(), 1);
        let pts = parse_points("halton:5", &metric).unwrap();
        assert_eq!(pts.len(), 5);
        for p in pts {
            assert!(metric.contains(&p));
        }
    }
}
