//! The metric definition file: a line-oriented, self-describing format.
//!
//! ```text
//! # comments start with '#'
//! dimension = 2
//! domain_1 = -0.9 0.9
//! domain_2 = -0.9 0.9
//! g_1_1 = 4/(1+x1^2+x2^2)^2
//! g_2_2 = 4/(1+x1^2+x2^2)^2
//! deform = conformal s=0.01 u=cos(x1)     # optional
//! deform = traceless s=0.05               # optional, curvature command only
//! ```
//!
//! Diagonal components are mandatory, off-diagonal components default to
//! zero, and each `g_i_j` may be given once (the lower triangle is
//! authoritative, either orientation of the indices is accepted).

use std::collections::HashMap;
use std::path::Path;

use ricscan_core::chart::{ChartMetric, SymTensorField};
use ricscan_core::expr::{parse_expression, Expr};

use crate::error::CliError;

/// Deformation block of a metric file.
#[derive(Debug, Clone)]
pub enum FileDeform {
    Traceless { s: f64 },
    Conformal { s: f64, u: Expr },
}

#[derive(Debug)]
pub struct MetricSpecFile {
    pub metric: ChartMetric,
    pub deform: Option<FileDeform>,
}

fn parse_kv(text: &str) -> HashMap<String, String> {
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .filter_map(|pair| {
            pair.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

pub fn load_metric_file(path: &Path) -> Result<MetricSpecFile, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_metric_file(&text).map_err(|m| CliError::Parse(format!("{}: {m}", path.display())))
}

pub fn parse_metric_file(text: &str) -> Result<MetricSpecFile, String> {
    let mut dimension: Option<usize> = None;
    let mut domains: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut components: HashMap<(usize, usize), String> = HashMap::new();
    let mut deform: Option<FileDeform> = None;
    let mut deform_line: Option<String> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |m: &str| format!("line {}: {m}", lineno + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at("expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();

        if key == "dimension" {
            let d: usize = value.parse().map_err(|_| at("invalid dimension"))?;
            dimension = Some(d);
        } else if let Some(idx) = key.strip_prefix("domain_") {
            let axis: usize = idx.parse().map_err(|_| at("invalid domain index"))?;
            let mut parts = value.split_whitespace();
            let lo: f64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| at("domain needs two bounds"))?;
            let hi: f64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| at("domain needs two bounds"))?;
            if domains.insert(axis, (lo, hi)).is_some() {
                return Err(at(&format!("duplicate domain_{axis}")));
            }
        } else if let Some(idx) = key.strip_prefix("g_") {
            let (i_str, j_str) = idx
                .split_once('_')
                .ok_or_else(|| at("component keys look like g_1_2"))?;
            let i: usize = i_str.parse().map_err(|_| at("invalid component index"))?;
            let j: usize = j_str.parse().map_err(|_| at("invalid component index"))?;
            if i == 0 || j == 0 {
                return Err(at("component indices are 1-based"));
            }
            let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
            if components.insert((hi, lo), value.to_string()).is_some() {
                return Err(at(&format!("duplicate component g_{i}_{j}")));
            }
        } else if key == "deform" {
            if deform_line.is_some() {
                return Err(at("only one deform block is allowed"));
            }
            deform_line = Some(value.to_string());
        } else {
            return Err(at(&format!("unknown key '{key}'")));
        }
    }

    let dim = dimension.ok_or("missing 'dimension'")?;
    if !(2..=8).contains(&dim) {
        return Err(format!("dimension must be 2..=8, got {dim}"));
    }
    let mut domain = Vec::with_capacity(dim);
    for axis in 1..=dim {
        let bounds = domains
            .get(&axis)
            .copied()
            .ok_or(format!("missing domain_{axis}"))?;
        domain.push(bounds);
    }
    for axis in domains.keys() {
        if *axis == 0 || *axis > dim {
            return Err(format!("domain_{axis} is outside dimension {dim}"));
        }
    }
    for (i, j) in components.keys() {
        if *i > dim || *j > dim {
            return Err(format!("component g_{i}_{j} is outside dimension {dim}"));
        }
    }
    for d in 1..=dim {
        if !components.contains_key(&(d, d)) {
            return Err(format!("missing diagonal component g_{d}_{d}"));
        }
    }

    let mut parsed: HashMap<(usize, usize), Expr> = HashMap::new();
    for ((i, j), src) in &components {
        let expr = parse_expression(src, dim).map_err(|e| format!("component g_{i}_{j}: {e}"))?;
        parsed.insert((*i, *j), expr);
    }
    let field = SymTensorField::from_fn(dim, |i, j| {
        let key = if i >= j {
            (i + 1, j + 1)
        } else {
            (j + 1, i + 1)
        };
        parsed.get(&key).cloned().unwrap_or(Expr::Number(0.0))
    });
    let metric = ChartMetric::new(dim, domain, field).map_err(|e| e.to_string())?;

    if let Some(block) = deform_line {
        let mut parts = block.split_whitespace();
        let kind = parts.next().ok_or("empty deform block")?;
        let rest: Vec<&str> = parts.collect();
        let kv = parse_kv(&rest.join(","));
        let s: f64 = kv
            .get("s")
            .and_then(|v| v.parse().ok())
            .ok_or("deform block needs s=<float>")?;
        deform = Some(match kind {
            "traceless" => FileDeform::Traceless { s },
            "conformal" => {
                let u_src = kv.get("u").ok_or("conformal deform needs u=<expr>")?;
                let u = parse_expression(u_src, dim).map_err(|e| e.to_string())?;
                FileDeform::Conformal { s, u }
            }
            other => return Err(format!("unknown deform kind '{other}'")),
        });
    }

    Ok(MetricSpecFile { metric, deform })
}
