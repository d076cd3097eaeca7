//! Closed-form reference metrics: constructors and golden values used as
//! test data by every other module.
//!
//! Chart constructors keep their domains inside `|x| <= 0.9` of the
//! stereographic / ball coordinates so evaluation stays well conditioned.
//! Interior sample points come from a Halton sequence, which is deterministic
//! without any seed plumbing.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chart::{self, ChartMetric, GeomError, SymTensorField};
use crate::expr::Expr;
use crate::frame::{self, FrameError, FrameMetric, LieAlgebraData};
use crate::submersion::{CanonicalVariationModel, VariationError};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("product factors need n, m >= 2 and n + m <= 8, got n={n}, m={m}")]
    ProductDims { n: usize, m: usize },
    #[error("hyperbolic scale must satisfy lambda >= 1, got {0}")]
    BadLambda(f64),
    #[error("hemisphere charts cover dimensions 2..=4, got {0}")]
    HemisphereDim(usize),
    #[error("unknown catalog entry '{0}'")]
    UnknownEntry(String),
    #[error("catalog entry '{0}' carries no reference values")]
    NoReference(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Variation(#[from] VariationError),
}

fn diag_metric(dim: usize, domain: Vec<(f64, f64)>, diag: Vec<Expr>) -> ChartMetric {
    ChartMetric::new(
        dim,
        domain,
        SymTensorField::from_fn(dim, |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                Expr::Number(0.0)
            }
        }),
    )
    .expect("catalog chart construction")
}

fn sum_of_squares(vars: &[usize]) -> Expr {
    let mut acc = Expr::Number(1.0);
    for &v in vars {
        acc = Expr::add(acc, Expr::pow(Expr::Var(v), 2));
    }
    acc
}

fn diff_of_squares(vars: &[usize]) -> Expr {
    let mut acc = Expr::Number(1.0);
    for &v in vars {
        acc = Expr::sub(acc, Expr::pow(Expr::Var(v), 2));
    }
    acc
}

/// Stereographic chart of the round unit n-sphere: `4 δ / (1+|x|²)²`,
/// per-coordinate bounds `±0.9/√n`.
pub fn sphere_chart(n: usize) -> ChartMetric {
    let vars: Vec<usize> = (0..n).collect();
    let comp = Expr::div(Expr::Number(4.0), Expr::pow(sum_of_squares(&vars), 2));
    let bound = 0.9 / (n as f64).sqrt();
    diag_metric(n, vec![(-bound, bound); n], vec![comp; n])
}

/// Ball chart of hyperbolic m-space scaled by `lambda`:
/// `lambda · 4 δ / (1−|y|²)²` (sectional curvature `−1/lambda`).
pub fn hyperbolic_chart(m: usize, lambda: f64) -> ChartMetric {
    let vars: Vec<usize> = (0..m).collect();
    let comp = Expr::mul(
        Expr::Number(lambda),
        Expr::div(Expr::Number(4.0), Expr::pow(diff_of_squares(&vars), 2)),
    );
    let bound = 0.9 / (m as f64).sqrt();
    diag_metric(m, vec![(-bound, bound); m], vec![comp; m])
}

/// Flat 2-torus fundamental chart: the identity metric on `[0, 2π]²`.
pub fn flat_torus_chart() -> ChartMetric {
    diag_metric(
        2,
        vec![(0.0, std::f64::consts::TAU); 2],
        vec![Expr::Number(1.0), Expr::Number(1.0)],
    )
}

/// Closed-form reference data of a catalog entry.
#[derive(Debug, Clone)]
pub struct ReferenceValues {
    /// Expected scalar curvature.
    pub scalar: f64,
    /// Expected Ricci eigenvalues w.r.t. the metric, ascending.
    pub ricci_eigs: Vec<f64>,
    /// Expected squared norm of the traceless Ricci tensor.
    pub traceless_norm_sq: f64,
    /// Scalar curvature is constant, so its Laplacian must vanish.
    pub lap_scalar: f64,
}

impl ReferenceValues {
    fn from_eigs(eigs: Vec<f64>) -> ReferenceValues {
        let scalar: f64 = eigs.iter().sum();
        let mean = scalar / eigs.len() as f64;
        let traceless_norm_sq = eigs.iter().map(|l| (l - mean).powi(2)).sum();
        ReferenceValues {
            scalar,
            ricci_eigs: eigs,
            traceless_norm_sq,
            lap_scalar: 0.0,
        }
    }
}

/// Product of a round n-sphere and a scaled hyperbolic m-space as one block
/// chart, with its closed-form curvature.
pub fn product_space_form(
    n: usize,
    m: usize,
    lambda: f64,
) -> Result<(ChartMetric, ReferenceValues), CatalogError> {
    if n < 2 || m < 2 || n + m > 8 {
        return Err(CatalogError::ProductDims { n, m });
    }
    if !(lambda >= 1.0) {
        return Err(CatalogError::BadLambda(lambda));
    }
    let dim = n + m;
    let sphere_vars: Vec<usize> = (0..n).collect();
    let hyper_vars: Vec<usize> = (n..dim).collect();
    let sphere_comp = Expr::div(
        Expr::Number(4.0),
        Expr::pow(sum_of_squares(&sphere_vars), 2),
    );
    let hyper_comp = Expr::mul(
        Expr::Number(lambda),
        Expr::div(
            Expr::Number(4.0),
            Expr::pow(diff_of_squares(&hyper_vars), 2),
        ),
    );
    let sphere_bound = 0.9 / (n as f64).sqrt();
    let hyper_bound = 0.9 / (m as f64).sqrt();
    let mut domain = vec![(-sphere_bound, sphere_bound); n];
    domain.extend(vec![(-hyper_bound, hyper_bound); m]);
    let mut diag = vec![sphere_comp; n];
    diag.extend(vec![hyper_comp; m]);
    let metric = diag_metric(dim, domain, diag);

    let mut eigs = vec![-(m as f64 - 1.0) / lambda; m];
    eigs.extend(vec![n as f64 - 1.0; n]);
    eigs.sort_by(f64::total_cmp);
    Ok((metric, ReferenceValues::from_eigs(eigs)))
}

/// Height coordinate of the unit n-sphere in the stereographic chart:
/// `(1 − |y|²)/(1 + |y|²)`, positive exactly on the upper hemisphere.
pub fn hemisphere_height_expr(n: usize) -> Expr {
    let vars: Vec<usize> = (0..n).collect();
    Expr::div(diff_of_squares(&vars), sum_of_squares(&vars))
}

/// `|Δ_{S^n} u + n u|` for the height function `u` at a chart point: the
/// eigenfunction residual of the hemisphere's distinguished eigenvalue.
pub fn hemisphere_eigenfunction_residual(n: usize, point: &[f64]) -> Result<f64, CatalogError> {
    if !(2..=4).contains(&n) {
        return Err(CatalogError::HemisphereDim(n));
    }
    let metric = sphere_chart(n);
    metric.check_point(point)?;
    let u = hemisphere_height_expr(n);
    let lap = chart::scalar_field_laplacian(&metric, &u, point)?;
    let value = u.eval(point).map_err(GeomError::from)?;
    Ok((lap + n as f64 * value).abs())
}

/// Halton sequence points scaled into a sub-box of the domain (fraction of
/// each side around the center), skipping the first few entries.
pub fn halton_points(domain: &[(f64, f64)], count: usize, shrink: f64) -> Vec<Vec<f64>> {
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    fn halton(index: usize, base: usize) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        let mut i = index;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    (0..count)
        .map(|k| {
            domain
                .iter()
                .enumerate()
                .map(|(axis, (lo, hi))| {
                    let u = halton(k + 7, PRIMES[axis]);
                    let center = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo) * shrink;
                    center + (2.0 * u - 1.0) * half
                })
                .collect()
        })
        .collect()
}

/// Which geometry backend realizes a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Chart,
    Frame,
    Submersion,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Chart => "chart",
            BackendKind::Frame => "frame",
            BackendKind::Submersion => "submersion",
        }
    }
}

/// One named entry of the example catalog.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub backend: BackendKind,
    /// Human-readable parameter schema for the CLI listing.
    pub params: &'static str,
    /// Reference values for the default parameters, when closed-form.
    pub reference: Option<ReferenceValues>,
}

/// All catalog entries with their default-parameter references.
pub fn catalog_entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "berger",
            backend: BackendKind::Frame,
            params: "p=1,q=3.5 (1 <= p <= q)",
            reference: Some(ReferenceValues::from_eigs(vec![-3.0, -3.0, 7.0])),
        },
        CatalogEntry {
            name: "heisenberg",
            backend: BackendKind::Frame,
            params: "d1=1,d2=1,d3=1 (diagonal inner product)",
            reference: Some(ReferenceValues::from_eigs(vec![-0.5, -0.5, 0.5])),
        },
        CatalogEntry {
            name: "sl2r",
            backend: BackendKind::Frame,
            params: "d1=1,d2=1,d3=1 (diagonal inner product)",
            reference: None,
        },
        CatalogEntry {
            name: "e11",
            backend: BackendKind::Frame,
            params: "d1=1,d2=1,d3=1 (diagonal inner product)",
            reference: None,
        },
        CatalogEntry {
            name: "product",
            backend: BackendKind::Chart,
            params: "n=2,m=2,lambda=1 (n,m >= 2, n+m <= 8, lambda >= 1)",
            reference: Some(ReferenceValues::from_eigs(vec![-1.0, -1.0, 1.0, 1.0])),
        },
        CatalogEntry {
            name: "sphere",
            backend: BackendKind::Chart,
            params: "n=3 (2 <= n <= 8)",
            reference: Some(ReferenceValues::from_eigs(vec![2.0; 3])),
        },
        CatalogEntry {
            name: "hyperbolic",
            backend: BackendKind::Chart,
            params: "m=2,lambda=1 (2 <= m <= 8, lambda >= 1)",
            reference: Some(ReferenceValues::from_eigs(vec![-1.0; 2])),
        },
        CatalogEntry {
            name: "torus",
            backend: BackendKind::Chart,
            params: "(none; flat 2-torus chart)",
            reference: Some(ReferenceValues::from_eigs(vec![0.0; 2])),
        },
        CatalogEntry {
            name: "hopf",
            backend: BackendKind::Submersion,
            params: "n=1,t=1 (n >= 1, t > 0)",
            reference: Some(ReferenceValues::from_eigs(vec![6.0; 7])),
        },
        CatalogEntry {
            name: "cp",
            backend: BackendKind::Submersion,
            params: "n=1,t=1 (n >= 1, t > 0)",
            reference: Some(ReferenceValues::from_eigs(vec![8.0; 6])),
        },
    ]
}

/// Default-parameter Gram inner product on a named 3d algebra.
pub fn frame_entry(name: &str, diag: [f64; 3]) -> Result<FrameMetric, CatalogError> {
    let algebra = match name {
        "heisenberg" => LieAlgebraData::heisenberg(),
        "sl2r" => LieAlgebraData::sl2r(),
        "e11" => LieAlgebraData::e11(),
        other => return Err(CatalogError::UnknownEntry(other.to_string())),
    };
    let gram = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.to_vec()));
    Ok(FrameMetric::new(algebra, gram)?)
}

/// Maximum deviation between computed curvature and the entry's closed-form
/// reference: scalar, Ricci eigenvalues, traceless norm, and (for charts)
/// the scalar-curvature Laplacian, over the given number of sample points.
pub fn catalog_reference_check(name: &str, sample_count: usize) -> Result<f64, CatalogError> {
    let entry = catalog_entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownEntry(name.to_string()))?;
    let reference = entry
        .reference
        .clone()
        .ok_or_else(|| CatalogError::NoReference(name.to_string()))?;

    let compare = |scalar: f64, eigs: &[f64], norm_sq: f64, lap: f64| -> f64 {
        let mut dev = (scalar - reference.scalar).abs();
        for (have, want) in eigs.iter().zip(&reference.ricci_eigs) {
            dev = dev.max((have - want).abs());
        }
        dev = dev.max((norm_sq - reference.traceless_norm_sq).abs());
        dev.max((lap - reference.lap_scalar).abs())
    };

    match entry.backend {
        BackendKind::Frame => {
            let metric = match name {
                "berger" => frame::berger_metric(1.0, 3.5)?,
                other => frame_entry(other, [1.0, 1.0, 1.0])?,
            };
            let report = frame::frame_curvature(&metric)?;
            Ok(compare(
                report.scalar,
                &report.ricci_eigs,
                report.traceless_norm_sq,
                report.laplacian_scalar.unwrap_or(0.0),
            ))
        }
        BackendKind::Submersion => {
            let model = match name {
                "hopf" => CanonicalVariationModel::hopf_family(1, 1.0)?,
                "cp" => CanonicalVariationModel::cp_family(1, 1.0)?,
                other => return Err(CatalogError::UnknownEntry(other.to_string())),
            };
            let c = model.curvature();
            let mut eigs = vec![c.lambda_v; model.dim_f];
            eigs.extend(vec![c.lambda_h; model.dim_b]);
            eigs.sort_by(f64::total_cmp);
            Ok(compare(c.scalar, &eigs, c.traceless_norm_sq, 0.0))
        }
        BackendKind::Chart => {
            let metric = match name {
                "product" => product_space_form(2, 2, 1.0)?.0,
                "sphere" => sphere_chart(3),
                "hyperbolic" => hyperbolic_chart(2, 1.0),
                "torus" => flat_torus_chart(),
                other => return Err(CatalogError::UnknownEntry(other.to_string())),
            };
            let points = halton_points(metric.domain(), sample_count, 0.8);
            let mut dev = 0.0f64;
            for point in &points {
                let report = metric.curvature_report(point, true)?;
                dev = dev.max(compare(
                    report.scalar,
                    &report.ricci_eigs,
                    report.traceless_norm_sq,
                    report.laplacian_scalar.unwrap_or(0.0),
                ));
            }
            Ok(dev)
        }
    }
}
