//! Curvature of metrics given by component expressions on a coordinate chart.
//!
//! The curvature pipeline is generic over [`Scalar`], so the same code path
//! produces plain numbers (metric evaluated at order-2 jets, derivatives read
//! off) and derivative fields (metric evaluated at order-4 jets, curvature
//! computed on order-2 jet entries). The second form is what powers the
//! scalar-curvature Laplacian and the curvature of derived metric fields such
//! as `g - s * ric0(g)` without any finite differencing.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::jet::{Jet, JetError, Scalar};
use crate::linalg::{self, LinalgError};

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("metric is not positive definite at {point:?} (min pivot {min_pivot:e})")]
    NotSpd { point: Vec<f64>, min_pivot: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("chart dimension must be 2..=8, got {0}")]
    BadDim(usize),
    #[error("domain bound {index}: lower {lower} must be below upper {upper}")]
    BadDomain {
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("component g_{i}_{j} references x{var}, beyond dimension {dim}")]
    VarBeyondDim {
        i: usize,
        j: usize,
        var: usize,
        dim: usize,
    },
    #[error("singular matrix in elimination")]
    Singular,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

// ---------------------------------------------------------------------------
// Generic dense containers
// ---------------------------------------------------------------------------

/// Dense square matrix over any scalar backend.
#[derive(Debug, Clone)]
pub struct SmallMat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> SmallMat<S> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SmallMat { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.at(i, j).value())
    }

    /// Gauss-Jordan inverse with partial pivoting on coefficient values.
    pub fn inverse(&self) -> Result<SmallMat<S>, GeomError> {
        let n = self.n;
        let proto = self.data[0].clone();
        let mut a = self.data.clone();
        let mut inv: Vec<S> = (0..n * n)
            .map(|k| proto.constant_like(if k % n == k / n { 1.0 } else { 0.0 }))
            .collect();
        for col in 0..n {
            let mut pivot_row = col;
            let mut best = a[col * n + col].value().abs();
            for r in (col + 1)..n {
                let cand = a[r * n + col].value().abs();
                if cand > best {
                    best = cand;
                    pivot_row = r;
                }
            }
            if best < 1e-300 {
                return Err(GeomError::Singular);
            }
            if pivot_row != col {
                for c in 0..n {
                    a.swap(col * n + c, pivot_row * n + c);
                    inv.swap(col * n + c, pivot_row * n + c);
                }
            }
            let pivot = a[col * n + col].clone();
            for c in 0..n {
                a[col * n + c] = a[col * n + c].try_div(&pivot)?;
                inv[col * n + c] = inv[col * n + c].try_div(&pivot)?;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                // jet entries can have zero value but nonzero derivatives, so
                // elimination always runs
                let factor = a[r * n + col].clone();
                for c in 0..n {
                    a[r * n + c] = a[r * n + c].clone() - factor.clone() * a[col * n + c].clone();
                    inv[r * n + c] =
                        inv[r * n + c].clone() - factor.clone() * inv[col * n + c].clone();
                }
            }
        }
        Ok(SmallMat { n, data: inv })
    }
}

/// Dense rank-3 container indexed `[k][i][j]`.
#[derive(Debug, Clone)]
pub struct Cube<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Cube<S> {
    pub fn filled(n: usize, proto: &S) -> Self {
        Cube {
            n,
            data: vec![proto.constant_like(0.0); n * n * n],
        }
    }

    pub fn at(&self, k: usize, i: usize, j: usize) -> &S {
        &self.data[(k * self.n + i) * self.n + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, v: S) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    pub fn values(&self) -> Vec<f64> {
        self.data.iter().map(|s| s.value()).collect()
    }
}

// ---------------------------------------------------------------------------
// Curvature from metric 2-jet data
// ---------------------------------------------------------------------------

/// Metric 2-jet data at a point: components, first and second partials.
pub struct CurvatureInput<S> {
    pub dim: usize,
    pub g: SmallMat<S>,
    /// `dg[k]` holds `∂_k g_ij`.
    pub dg: Vec<SmallMat<S>>,
    /// `d2g[l*dim + k]` holds `∂_l ∂_k g_ij`.
    pub d2g: Vec<SmallMat<S>>,
}

/// Christoffel symbols `Γ^k_ij = ½ g^{kl} (∂_i g_lj + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffels<S: Scalar>(g_inv: &SmallMat<S>, dg: &[SmallMat<S>]) -> Cube<S> {
    let n = g_inv.n();
    let proto = g_inv.at(0, 0).clone();
    let mut gamma = Cube::filled(n, &proto);
    for k in 0..n {
        for i in 0..n {
            for j in 0..=i {
                let mut acc = proto.constant_like(0.0);
                for l in 0..n {
                    let bracket =
                        dg[i].at(l, j).clone() + dg[j].at(i, l).clone() - dg[l].at(i, j).clone();
                    acc = acc + g_inv.at(k, l).clone() * bracket;
                }
                let half = acc.scale(0.5);
                gamma.set(k, i, j, half.clone());
                if i != j {
                    gamma.set(k, j, i, half);
                }
            }
        }
    }
    gamma
}

/// Connection, Ricci tensor and scalar curvature from metric 2-jet data.
pub struct CurvatureCore<S> {
    pub dim: usize,
    pub g: SmallMat<S>,
    pub g_inv: SmallMat<S>,
    pub gamma: Cube<S>,
    pub ricci: SmallMat<S>,
    pub scalar: S,
}

/// Ricci by the standard coordinate formula
/// `R_ij = ∂_k Γ^k_ij − ∂_i Γ^k_kj + Γ^k_kp Γ^p_ij − Γ^k_ip Γ^p_kj`.
pub fn curvature_core<S: Scalar>(input: &CurvatureInput<S>) -> Result<CurvatureCore<S>, GeomError> {
    let n = input.dim;
    let proto = input.g.at(0, 0).clone();
    let zero = proto.constant_like(0.0);
    let g_inv = input.g.inverse()?;
    let gamma = christoffels(&g_inv, &input.dg);

    // ∂_p g^{kl} = −g^{ka} (∂_p g_ab) g^{bl}
    let mut dginv: Vec<SmallMat<S>> = Vec::with_capacity(n);
    for p in 0..n {
        let mut m = SmallMat::from_fn(n, |_, _| zero.clone());
        for k in 0..n {
            for l in 0..n {
                let mut acc = zero.clone();
                for a in 0..n {
                    for b in 0..n {
                        acc = acc
                            + g_inv.at(k, a).clone()
                                * input.dg[p].at(a, b).clone()
                                * g_inv.at(b, l).clone();
                    }
                }
                m.set(k, l, -acc);
            }
        }
        dginv.push(m);
    }

    // ∂_p Γ^k_ij
    let mut dgamma: Vec<Cube<S>> = Vec::with_capacity(n);
    for p in 0..n {
        let mut cube = Cube::filled(n, &proto);
        for k in 0..n {
            for i in 0..n {
                for j in 0..=i {
                    let mut acc = zero.clone();
                    for l in 0..n {
                        let bracket = input.dg[i].at(l, j).clone() + input.dg[j].at(i, l).clone()
                            - input.dg[l].at(i, j).clone();
                        let dbracket = input.d2g[p * n + i].at(l, j).clone()
                            + input.d2g[p * n + j].at(i, l).clone()
                            - input.d2g[p * n + l].at(i, j).clone();
                        acc = acc
                            + dginv[p].at(k, l).clone() * bracket
                            + g_inv.at(k, l).clone() * dbracket;
                    }
                    let half = acc.scale(0.5);
                    cube.set(k, i, j, half.clone());
                    if i != j {
                        cube.set(k, j, i, half);
                    }
                }
            }
        }
        dgamma.push(cube);
    }

    let mut ricci = SmallMat::from_fn(n, |_, _| zero.clone());
    for i in 0..n {
        for j in 0..=i {
            let mut acc = zero.clone();
            for k in 0..n {
                acc = acc + dgamma[k].at(k, i, j).clone() - dgamma[i].at(k, k, j).clone();
                for p in 0..n {
                    acc = acc + gamma.at(k, k, p).clone() * gamma.at(p, i, j).clone()
                        - gamma.at(k, i, p).clone() * gamma.at(p, k, j).clone();
                }
            }
            ricci.set(i, j, acc.clone());
            if i != j {
                ricci.set(j, i, acc);
            }
        }
    }

    let mut scalar = zero.clone();
    for i in 0..n {
        for j in 0..n {
            scalar = scalar + g_inv.at(i, j).clone() * ricci.at(i, j).clone();
        }
    }

    Ok(CurvatureCore {
        dim: n,
        g: input.g.clone(),
        g_inv,
        gamma,
        ricci,
        scalar,
    })
}

// ---------------------------------------------------------------------------
// Symmetric expression fields and chart metrics
// ---------------------------------------------------------------------------

fn tri_index(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Symmetric matrix of expressions; the lower triangle is authoritative.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    dim: usize,
    comps: Vec<Expr>,
}

impl SymTensorField {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Expr) -> SymTensorField {
        let mut comps = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                comps.push(f(i, j));
            }
        }
        SymTensorField { dim, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self, i: usize, j: usize) -> &Expr {
        &self.comps[tri_index(i, j)]
    }

    pub fn max_var(&self) -> Option<usize> {
        self.comps.iter().filter_map(|e| e.max_var()).max()
    }

    /// Pointwise combination `self + factor * other`.
    pub fn plus_scaled(&self, other: &SymTensorField, factor: f64) -> SymTensorField {
        SymTensorField::from_fn(self.dim, |i, j| {
            Expr::add(
                self.expr(i, j).clone(),
                Expr::mul(Expr::Number(factor), other.expr(i, j).clone()),
            )
        })
    }

    /// Evaluates all components at jet variables seeded at `point`.
    pub fn jets_at(&self, point: &[f64], order: usize) -> Result<TensorJets, GeomError> {
        if point.len() != self.dim {
            return Err(GeomError::DimMismatch(point.len(), self.dim));
        }
        let vars = Jet::variables(point, order)?;
        let mut entries = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                entries.push(self.expr(i, j).eval(&vars)?);
            }
        }
        Ok(TensorJets {
            dim: self.dim,
            order,
            entries,
        })
    }
}

/// A symmetric tensor field evaluated at jet variables.
pub struct TensorJets {
    dim: usize,
    order: usize,
    entries: Vec<Jet>,
}

impl TensorJets {
    pub fn from_entries(dim: usize, order: usize, entries: Vec<Jet>) -> TensorJets {
        assert_eq!(entries.len(), dim * dim);
        TensorJets {
            dim,
            order,
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &Jet {
        &self.entries[i * self.dim + j]
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).value())
    }

    fn unit(&self, axis: usize) -> Vec<usize> {
        let mut e = vec![0usize; self.dim];
        e[axis] = 1;
        e
    }

    /// Point-level input: components and partials as plain numbers.
    /// Requires order >= 2.
    pub fn value_input(&self) -> CurvatureInput<f64> {
        assert!(self.order >= 2, "value input needs jets of order >= 2");
        let n = self.dim;
        let g = SmallMat::from_fn(n, |i, j| self.entry(i, j).value());
        let dg = (0..n)
            .map(|k| {
                let e_k = self.unit(k);
                SmallMat::from_fn(n, |i, j| self.entry(i, j).partial(&e_k).unwrap())
            })
            .collect();
        let mut d2g = Vec::with_capacity(n * n);
        for l in 0..n {
            for k in 0..n {
                let mut alpha = vec![0usize; n];
                alpha[l] += 1;
                alpha[k] += 1;
                d2g.push(SmallMat::from_fn(n, |i, j| {
                    self.entry(i, j).partial(&alpha).unwrap()
                }));
            }
        }
        CurvatureInput { dim: n, g, dg, d2g }
    }

    /// Jet-level input of the given order: components and partials as jets,
    /// so downstream results carry derivatives. Requires
    /// `self.order >= out_order + 2`.
    pub fn jet_input(&self, out_order: usize) -> CurvatureInput<Jet> {
        assert!(
            self.order >= out_order + 2,
            "jet input of order {out_order} needs source jets of order >= {}",
            out_order + 2
        );
        let n = self.dim;
        let g = SmallMat::from_fn(n, |i, j| self.entry(i, j).truncated(out_order));
        let dg: Vec<SmallMat<Jet>> = (0..n)
            .map(|k| {
                SmallMat::from_fn(n, |i, j| {
                    self.entry(i, j).derivative(k).truncated(out_order)
                })
            })
            .collect();
        let mut d2g = Vec::with_capacity(n * n);
        for l in 0..n {
            for k in 0..n {
                d2g.push(SmallMat::from_fn(n, |i, j| {
                    self.entry(i, j)
                        .derivative(l)
                        .derivative(k)
                        .truncated(out_order)
                }));
            }
        }
        CurvatureInput { dim: n, g, dg, d2g }
    }
}

/// A metric given by component expressions on an axis-aligned box.
#[derive(Debug, Clone)]
pub struct ChartMetric {
    field: SymTensorField,
    domain: Vec<(f64, f64)>,
}

impl ChartMetric {
    pub fn new(
        dim: usize,
        domain: Vec<(f64, f64)>,
        field: SymTensorField,
    ) -> Result<ChartMetric, GeomError> {
        if !(2..=8).contains(&dim) {
            return Err(GeomError::BadDim(dim));
        }
        if domain.len() != dim {
            return Err(GeomError::DimMismatch(domain.len(), dim));
        }
        if field.dim() != dim {
            return Err(GeomError::DimMismatch(field.dim(), dim));
        }
        for (index, &(lower, upper)) in domain.iter().enumerate() {
            if !(lower < upper) {
                return Err(GeomError::BadDomain {
                    index,
                    lower,
                    upper,
                });
            }
        }
        if let Some(var) = field.max_var() {
            if var >= dim {
                // locate the offending component for the error message
                for i in 0..dim {
                    for j in 0..=i {
                        if field.expr(i, j).max_var() == Some(var) {
                            return Err(GeomError::VarBeyondDim {
                                i: i + 1,
                                j: j + 1,
                                var: var + 1,
                                dim,
                            });
                        }
                    }
                }
            }
        }
        Ok(ChartMetric { field, domain })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn field(&self) -> &SymTensorField {
        &self.field
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        self.field.expr(i, j)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(&self.domain)
                .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    pub fn check_point(&self, point: &[f64]) -> Result<(), GeomError> {
        if !self.contains(point) {
            return Err(GeomError::OutsideDomain {
                point: point.to_vec(),
            });
        }
        Ok(())
    }

    /// Center of the domain box.
    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// Metric values at a point, SPD-checked.
    pub fn metric_at(&self, point: &[f64]) -> Result<DMatrix<f64>, GeomError> {
        self.check_point(point)?;
        let n = self.dim();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.field.expr(i, j).eval(point)?;
            }
        }
        self.ensure_spd(&m, point)?;
        Ok(m)
    }

    fn ensure_spd(&self, m: &DMatrix<f64>, point: &[f64]) -> Result<(), GeomError> {
        let min_pivot = linalg::ldlt_min_pivot(m);
        if min_pivot < linalg::SPD_PIVOT_TOL {
            return Err(GeomError::NotSpd {
                point: point.to_vec(),
                min_pivot,
            });
        }
        Ok(())
    }

    pub fn jets_at(&self, point: &[f64], order: usize) -> Result<TensorJets, GeomError> {
        self.check_point(point)?;
        let jets = self.field.jets_at(point, order)?;
        self.ensure_spd(&jets.values(), point)?;
        Ok(jets)
    }

    /// `g + t h` on the same chart.
    pub fn perturbed(&self, h: &SymTensorField, t: f64) -> Result<ChartMetric, GeomError> {
        if h.dim() != self.dim() {
            return Err(GeomError::DimMismatch(h.dim(), self.dim()));
        }
        ChartMetric::new(
            self.dim(),
            self.domain.clone(),
            self.field.plus_scaled(h, t),
        )
    }

    /// Conformal deformation `(1 + s u) g`.
    pub fn conformal(&self, u: &Expr, s: f64) -> Result<ChartMetric, GeomError> {
        let factor = Expr::add(Expr::Number(1.0), Expr::mul(Expr::Number(s), u.clone()));
        let field = SymTensorField::from_fn(self.dim(), |i, j| {
            Expr::mul(factor.clone(), self.field.expr(i, j).clone())
        });
        ChartMetric::new(self.dim(), self.domain.clone(), field)
    }

    /// Christoffel symbols at a point, flattened `[k][i][j]`.
    pub fn christoffel(&self, point: &[f64]) -> Result<Vec<f64>, GeomError> {
        let jets = self.jets_at(point, 2)?;
        let input = jets.value_input();
        let g_inv = input.g.inverse()?;
        Ok(christoffels(&g_inv, &input.dg).values())
    }

    /// Full pointwise curvature bundle.
    pub fn curvature_report(
        &self,
        point: &[f64],
        with_laplacian: bool,
    ) -> Result<CurvatureReport, GeomError> {
        let order = if with_laplacian { 4 } else { 2 };
        let jets = self.jets_at(point, order)?;
        let core = curvature_core(&jets.value_input())?;
        let laplacian_scalar = if with_laplacian {
            let jet_core = curvature_core(&jets.jet_input(2))?;
            Some(jet_laplacian(&jet_core.scalar, &core)?)
        } else {
            None
        };
        CurvatureReport::from_core(point.to_vec(), &core, laplacian_scalar)
    }

    /// Curvature of the derived metric field `g_s(x) = g(x) − s ric0(g)(x)`,
    /// with the deformation differentiated through jets (no finite
    /// differences). Reports the curvature bundle of `g_s` at the point.
    pub fn deformed_curvature_report(
        &self,
        point: &[f64],
        s: f64,
    ) -> Result<CurvatureReport, GeomError> {
        let jets = self.jets_at(point, 4)?;
        let gs = deformed_metric_jets(&jets, s)?;
        let values = gs.values();
        self.ensure_spd(&values, point)?;
        let core = curvature_core(&gs.value_input())?;
        CurvatureReport::from_core(point.to_vec(), &core, None)
    }
}

/// Order-2 jets of `g_s = g − s ric0(g)` from order-4 jets of `g`.
pub fn deformed_metric_jets(g_jets: &TensorJets, s: f64) -> Result<TensorJets, GeomError> {
    let n = g_jets.dim();
    let jet_core = curvature_core(&g_jets.jet_input(2))?;
    let scalar_over_n = jet_core.scalar.scaled(1.0 / n as f64);
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let traceless = jet_core.ricci.at(i, j).clone()
                - jet_core.g.at(i, j).clone() * scalar_over_n.clone();
            entries.push(jet_core.g.at(i, j).clone() - traceless.scaled(s));
        }
    }
    Ok(TensorJets::from_entries(n, 2, entries))
}

/// Laplacian of a scalar field carried as an order-2 jet:
/// `Δf = g^{ij} (∂_i∂_j f − Γ^k_ij ∂_k f)`.
fn jet_laplacian(field: &Jet, core: &CurvatureCore<f64>) -> Result<f64, GeomError> {
    let n = core.dim;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut alpha = vec![0usize; n];
            alpha[i] += 1;
            alpha[j] += 1;
            let mut hess = field.partial(&alpha)?;
            for k in 0..n {
                let mut e_k = vec![0usize; n];
                e_k[k] = 1;
                hess -= core.gamma.at(k, i, j) * field.partial(&e_k)?;
            }
            acc += core.g_inv.at(i, j) * hess;
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Pointwise curvature report
// ---------------------------------------------------------------------------

/// Pointwise curvature bundle of a metric.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub inverse_metric: DMatrix<f64>,
    /// Christoffel symbols, flattened `[k][i][j]` with stride `dim`.
    pub christoffel: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub traceless_ricci: DMatrix<f64>,
    /// Eigenvalues of Ricci with respect to the metric, ascending.
    pub ricci_eigs: Vec<f64>,
    pub traceless_norm_sq: f64,
    pub laplacian_scalar: Option<f64>,
}

impl CurvatureReport {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub(crate) fn from_core(
        point: Vec<f64>,
        core: &CurvatureCore<f64>,
        laplacian_scalar: Option<f64>,
    ) -> Result<CurvatureReport, GeomError> {
        let n = core.dim;
        let metric = core.g.values();
        let inverse_metric = core.g_inv.values();
        let ricci = core.ricci.values();
        let scalar = core.scalar;
        let traceless_ricci = &ricci - metric.scale(scalar / n as f64);
        let ricci_eigs = linalg::pencil_eigenvalues(&ricci, &metric)?;
        let traceless_norm_sq = tensor_norm_sq(&inverse_metric, &traceless_ricci);
        Ok(CurvatureReport {
            point,
            metric,
            inverse_metric,
            christoffel: core.gamma.values(),
            ricci,
            scalar,
            traceless_ricci,
            ricci_eigs,
            traceless_norm_sq,
            laplacian_scalar,
        })
    }

    /// Consistency relations between the report fields; returns the largest
    /// violation.
    pub fn consistency_residual(&self) -> f64 {
        let n = self.dim() as f64;
        let trace_traceless = (&self.inverse_metric * &self.traceless_ricci).trace();
        let trace_ricci = (&self.inverse_metric * &self.ricci).trace();
        let eig_sum: f64 = self.ricci_eigs.iter().sum();
        let eig_norm: f64 = self
            .ricci_eigs
            .iter()
            .map(|l| (l - self.scalar / n).powi(2))
            .sum();
        [
            trace_traceless.abs(),
            (trace_ricci - self.scalar).abs(),
            (eig_sum - self.scalar).abs(),
            (eig_norm - self.traceless_norm_sq).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `‖A‖²_g = g^{ik} g^{jl} A_ij A_kl = tr(g⁻¹ A g⁻¹ A)`.
pub fn tensor_norm_sq(g_inv: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let m = g_inv * a;
    (&m * &m).trace()
}

// ---------------------------------------------------------------------------
// Background-comparison operations
// ---------------------------------------------------------------------------

/// Difference tensor `W = Γ(g) − Γ(ḡ)`, returned through both routes:
/// connection difference and the covariant formula
/// `W^k_ij = ½ g^{kl} (∇̄_i g_lj + ∇̄_j g_il − ∇̄_l g_ij)`.
#[derive(Debug, Clone)]
pub struct DifferenceTensor {
    pub dim: usize,
    pub from_connections: Vec<f64>,
    pub covariant: Vec<f64>,
    pub max_difference: f64,
}

pub fn difference_tensor(
    g: &ChartMetric,
    g_bar: &ChartMetric,
    point: &[f64],
) -> Result<DifferenceTensor, GeomError> {
    if g.dim() != g_bar.dim() {
        return Err(GeomError::DimMismatch(g.dim(), g_bar.dim()));
    }
    let n = g.dim();
    let gj = g.jets_at(point, 2)?.value_input();
    let bj = g_bar.jets_at(point, 2)?.value_input();
    let g_inv = gj.g.inverse()?;
    let b_inv = bj.g.inverse()?;
    let gamma = christoffels(&g_inv, &gj.dg);
    let gamma_bar = christoffels(&b_inv, &bj.dg);

    let mut from_connections = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                from_connections[(k * n + i) * n + j] = gamma.at(k, i, j) - gamma_bar.at(k, i, j);
            }
        }
    }

    // ∇̄_i g_lj = ∂_i g_lj − Γ̄^p_il g_pj − Γ̄^p_ij g_lp
    let cov_dg = |i: usize, l: usize, j: usize| -> f64 {
        let mut v = *gj.dg[i].at(l, j);
        for p in 0..n {
            v -= gamma_bar.at(p, i, l) * gj.g.at(p, j) + gamma_bar.at(p, i, j) * gj.g.at(l, p);
        }
        v
    };
    let mut covariant = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += g_inv.at(k, l) * (cov_dg(i, l, j) + cov_dg(j, i, l) - cov_dg(l, i, j));
                }
                covariant[(k * n + i) * n + j] = 0.5 * acc;
            }
        }
    }

    let max_difference = from_connections
        .iter()
        .zip(&covariant)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DifferenceTensor {
        dim: n,
        from_connections,
        covariant,
        max_difference,
    })
}

/// Ricci of `g` assembled against a background metric:
/// `R_ij = R̄_ij + ∇̄_k W^k_ij − ∇̄_i W^k_kj + W^p_ij W^k_kp − W^p_kj W^k_ip`.
pub fn ricci_via_background(
    g: &ChartMetric,
    g_bar: &ChartMetric,
    point: &[f64],
) -> Result<DMatrix<f64>, GeomError> {
    if g.dim() != g_bar.dim() {
        return Err(GeomError::DimMismatch(g.dim(), g_bar.dim()));
    }
    let n = g.dim();
    let g_jets = g.jets_at(point, 3)?;
    let b_jets = g_bar.jets_at(point, 3)?;

    // background curvature at point level
    let b_core = curvature_core(&b_jets.value_input())?;
    let ricci_bar = b_core.ricci.values();

    // W as order-1 jets
    let g1 = g_jets.jet_input(1);
    let b1 = b_jets.jet_input(1);
    let g1_inv = g1.g.inverse()?;
    let b1_inv = b1.g.inverse()?;
    let gamma_bar1 = christoffels(&b1_inv, &b1.dg);

    let proto = g1.g.at(0, 0).clone();
    let zero = proto.constant_like(0.0);
    let cov_dg = |i: usize, l: usize, j: usize| -> Jet {
        let mut v = g1.dg[i].at(l, j).clone();
        for p in 0..n {
            v = v
                - gamma_bar1.at(p, i, l).clone() * g1.g.at(p, j).clone()
                - gamma_bar1.at(p, i, j).clone() * g1.g.at(l, p).clone();
        }
        v
    };
    let mut w = Cube::filled(n, &proto);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = zero.clone();
                for l in 0..n {
                    acc = acc
                        + g1_inv.at(k, l).clone()
                            * (cov_dg(i, l, j) + cov_dg(j, i, l) - cov_dg(l, i, j));
                }
                w.set(k, i, j, acc.scale(0.5));
            }
        }
    }

    let w0 = |k: usize, i: usize, j: usize| w.at(k, i, j).value();
    let dw = |p: usize, k: usize, i: usize, j: usize| {
        let mut e_p = vec![0usize; n];
        e_p[p] = 1;
        w.at(k, i, j).partial(&e_p).unwrap()
    };
    let gb = |k: usize, i: usize, j: usize| gamma_bar1.at(k, i, j).value();

    let mut ricci = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut div1 = 0.0; // ∇̄_k W^k_ij
            let mut div2 = 0.0; // ∇̄_i W^k_kj
            let mut quad = 0.0;
            for k in 0..n {
                div1 += dw(k, k, i, j);
                div2 += dw(i, k, k, j);
                for p in 0..n {
                    div1 += gb(k, k, p) * w0(p, i, j)
                        - gb(p, k, i) * w0(k, p, j)
                        - gb(p, k, j) * w0(k, i, p);
                    div2 += gb(k, i, p) * w0(p, k, j)
                        - gb(p, i, k) * w0(k, p, j)
                        - gb(p, i, j) * w0(k, k, p);
                    quad += w0(p, i, j) * w0(k, k, p) - w0(p, k, j) * w0(k, i, p);
                }
            }
            ricci[(i, j)] = ricci_bar[(i, j)] + div1 - div2 + quad;
        }
    }
    Ok(ricci)
}

// ---------------------------------------------------------------------------
// Scalar-curvature linearization
// ---------------------------------------------------------------------------

/// `DR|_g(h) = −Δ_g(tr_g h) + div_g(div_g h) − ⟨Ric_g, h⟩_g` from jet data.
/// Needs `g` jets of order >= 3 and `h` jets of order >= 2.
pub fn linearized_scalar_from_jets(
    g_jets: &TensorJets,
    h_jets: &TensorJets,
) -> Result<f64, GeomError> {
    assert!(g_jets.order >= 3, "g jets must have order >= 3");
    assert!(h_jets.order >= 2, "h jets must have order >= 2");
    if g_jets.dim() != h_jets.dim() {
        return Err(GeomError::DimMismatch(g_jets.dim(), h_jets.dim()));
    }
    let n = g_jets.dim();
    let core = curvature_core(&g_jets.value_input())?;

    // ⟨Ric, h⟩ = g^{ia} g^{jb} R_ab h_ij
    let h_val = SmallMat::from_fn(n, |i, j| h_jets.entry(i, j).value());
    let mut ric_dot_h = 0.0;
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    ric_dot_h += core.g_inv.at(i, a)
                        * core.g_inv.at(j, b)
                        * core.ricci.at(a, b)
                        * h_val.at(i, j);
                }
            }
        }
    }

    // tr_g h as an order-2 jet (only the entries of g are needed here, so an
    // order-3 source suffices)
    let g2_mat = SmallMat::from_fn(n, |i, j| g_jets.entry(i, j).truncated(2));
    let g2_inv = g2_mat.inverse()?;
    let proto2 = g2_mat.at(0, 0).clone();
    let mut tr_h = proto2.constant_like(0.0);
    for i in 0..n {
        for j in 0..n {
            tr_h = tr_h + g2_inv.at(i, j).clone() * h_jets.entry(i, j).truncated(2);
        }
    }
    let lap_tr_h = jet_laplacian(&tr_h, &core)?;

    // div h as order-1 jets: (div h)_l = g^{ik} (∂_i h_kl − Γ^p_ik h_pl − Γ^p_il h_kp)
    let g1 = g_jets.jet_input(1);
    let g1_inv = g1.g.inverse()?;
    let gamma1 = christoffels(&g1_inv, &g1.dg);
    let proto1 = g1.g.at(0, 0).clone();
    let h1 = SmallMat::from_fn(n, |i, j| h_jets.entry(i, j).truncated(1));
    let dh =
        |i: usize, k: usize, l: usize| -> Jet { h_jets.entry(k, l).derivative(i).truncated(1) };
    let mut div_h: Vec<Jet> = Vec::with_capacity(n);
    for l in 0..n {
        let mut acc = proto1.constant_like(0.0);
        for i in 0..n {
            for k in 0..n {
                let mut term = dh(i, k, l);
                for p in 0..n {
                    term = term
                        - gamma1.at(p, i, k).clone() * h1.at(p, l).clone()
                        - gamma1.at(p, i, l).clone() * h1.at(k, p).clone();
                }
                acc = acc + g1_inv.at(i, k).clone() * term;
            }
        }
        div_h.push(acc);
    }

    // div div h = g^{jl} (∂_j (div h)_l − Γ^p_jl (div h)_p)
    let mut div_div_h = 0.0;
    for j in 0..n {
        for l in 0..n {
            let mut e_j = vec![0usize; n];
            e_j[j] = 1;
            let mut term = div_h[l].partial(&e_j)?;
            for p in 0..n {
                term -= core.gamma.at(p, j, l) * div_h[p].value();
            }
            div_div_h += core.g_inv.at(j, l) * term;
        }
    }

    Ok(-lap_tr_h + div_div_h - ric_dot_h)
}

/// Linearization of scalar curvature at `g` in the direction of the
/// expression field `h`.
pub fn linearized_scalar(
    metric: &ChartMetric,
    h: &SymTensorField,
    point: &[f64],
) -> Result<f64, GeomError> {
    let g_jets = metric.jets_at(point, 3)?;
    let h_jets = h.jets_at(point, 2)?;
    linearized_scalar_from_jets(&g_jets, &h_jets)
}

/// Linearization in the direction `h = −Ric_g`, with the Ricci field obtained
/// by differentiating the curvature pipeline through jets.
pub fn linearized_scalar_neg_ricci(metric: &ChartMetric, point: &[f64]) -> Result<f64, GeomError> {
    let g_jets = metric.jets_at(point, 4)?;
    let jet_core = curvature_core(&g_jets.jet_input(2))?;
    let n = metric.dim();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(-jet_core.ricci.at(i, j).clone());
        }
    }
    let h_jets = TensorJets::from_entries(n, 2, entries);
    linearized_scalar_from_jets(&g_jets, &h_jets)
}

/// Max-norm residual of the contracted second Bianchi identity
/// `g^{ik} ∇_i Ric_kj − ½ ∂_j R = 0` at a point.
pub fn bianchi_residual(metric: &ChartMetric, point: &[f64]) -> Result<f64, GeomError> {
    let n = metric.dim();
    let jets = metric.jets_at(point, 3)?;
    let core = curvature_core(&jets.value_input())?;
    let jet_core = curvature_core(&jets.jet_input(1))?;

    let mut worst = 0.0f64;
    for j in 0..n {
        let mut div_ric = 0.0;
        for i in 0..n {
            for k in 0..n {
                let mut e_i = vec![0usize; n];
                e_i[i] = 1;
                let mut term = jet_core.ricci.at(k, j).partial(&e_i)?;
                for p in 0..n {
                    term -= core.gamma.at(p, i, k) * core.ricci.at(p, j)
                        + core.gamma.at(p, i, j) * core.ricci.at(k, p);
                }
                div_ric += core.g_inv.at(i, k) * term;
            }
        }
        let mut e_j = vec![0usize; n];
        e_j[j] = 1;
        let grad_r = jet_core.scalar.partial(&e_j)?;
        worst = worst.max((div_ric - 0.5 * grad_r).abs());
    }
    Ok(worst)
}

/// Laplacian `Δ_g u` of an expression field at a point.
pub fn scalar_field_laplacian(
    metric: &ChartMetric,
    u: &Expr,
    point: &[f64],
) -> Result<f64, GeomError> {
    let jets = metric.jets_at(point, 2)?;
    let core = curvature_core(&jets.value_input())?;
    let vars = Jet::variables(point, 2)?;
    let u_jet = u.eval(&vars)?;
    jet_laplacian(&u_jet, &core)
}

/// `|∇u|²_g = g^{ij} ∂_i u ∂_j u` at a point.
pub fn scalar_field_grad_norm_sq(
    metric: &ChartMetric,
    u: &Expr,
    point: &[f64],
) -> Result<f64, GeomError> {
    let jets = metric.jets_at(point, 2)?;
    let input = jets.value_input();
    let g_inv = input.g.inverse()?;
    let vars = Jet::variables(point, 1)?;
    let u_jet = u.eval(&vars)?;
    let n = metric.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut e_i = vec![0usize; n];
            e_i[i] = 1;
            let mut e_j = vec![0usize; n];
            e_j[j] = 1;
            acc += g_inv.at(i, j) * u_jet.partial(&e_i)? * u_jet.partial(&e_j)?;
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Expansion residual
// ---------------------------------------------------------------------------

/// Convergence data for `R_{g+th} = R_g + t DR(h) + O(t²)` plus the exact
/// inverse-expansion identity check.
#[derive(Debug, Clone)]
pub struct ExpansionReport {
    pub t_values: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log |r|` against `log t`; `None` when the
    /// residuals vanish identically (exact linearity).
    pub slope: Option<f64>,
    pub linearized: f64,
    pub base_scalar: f64,
    pub inverse_identity_max_residual: f64,
}

/// Least-squares slope of `ln y` against `ln x`, ignoring vanishing values.
pub fn log_log_slope(xs: &[f64], ys: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.abs() > floor)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    Some((m * sxy - sx * sy) / (m * sxx - sx * sx))
}

pub fn expansion_residual(
    metric: &ChartMetric,
    h: &SymTensorField,
    point: &[f64],
    t_grid: &[f64],
) -> Result<ExpansionReport, GeomError> {
    let base = metric.curvature_report(point, false)?;
    let linearized = linearized_scalar(metric, h, point)?;

    let n = metric.dim();
    let vars: Vec<f64> = point.to_vec();
    let h_val = DMatrix::from_fn(n, n, |i, j| h.expr(i, j).eval(&vars).unwrap_or(f64::NAN));
    let g_val = base.metric.clone();
    let g_inv = base.inverse_metric.clone();

    let mut residuals = Vec::with_capacity(t_grid.len());
    let mut inverse_residual = 0.0f64;
    for &t in t_grid {
        let perturbed = metric.perturbed(h, t)?;
        let r = perturbed.curvature_report(point, false)?.scalar;
        residuals.push(r - base.scalar - t * linearized);

        // (g+th)^{-1} = g^{-1} − t g^{-1}hg^{-1} + t² (g+th)^{-1}hg^{-1}hg^{-1}
        let gt = &g_val + h_val.scale(t);
        let gt_inv = gt.clone().try_inverse().ok_or(GeomError::Singular)?;
        let correction = &gt_inv * &h_val * &g_inv * &h_val * &g_inv;
        let rhs = &g_inv - (&g_inv * &h_val * &g_inv).scale(t) + correction.scale(t * t);
        let dev = (&gt_inv - rhs).abs().max();
        inverse_residual = inverse_residual.max(dev);
    }

    let slope = log_log_slope(t_grid, &residuals, 1e-13 * (1.0 + base.scalar.abs()));
    Ok(ExpansionReport {
        t_values: t_grid.to_vec(),
        residuals,
        slope,
        linearized,
        base_scalar: base.scalar,
        inverse_identity_max_residual: inverse_residual,
    })
}
