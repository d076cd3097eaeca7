//! Curvature of left-invariant metrics from Lie algebra structure constants.
//!
//! A [`FrameMetric`] pairs a Lie algebra (structure constants in a fixed
//! basis) with an inner product on it. Curvature is computed in an
//! orthonormal frame obtained by the symmetric inverse square root of the
//! Gram matrix: with `c_abc = <[f_a, f_b], f_c>` the connection is
//! `<∇_{f_a} f_b, f_c> = ½ (c_abc − c_bca + c_cab)` and the Ricci tensor
//! follows from the constant-frame curvature formula. Everything is exact up
//! to rounding; scalar curvature is constant, so its Laplacian is zero.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chart::CurvatureReport;
use crate::linalg::{self, LinalgError};

const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("structure constants must be antisymmetric: c^{k}_({i},{j}) != -c^{k}_({j},{i})")]
    NotAntisymmetric { k: usize, i: usize, j: usize },
    #[error("Jacobi identity violated (residual {residual:e})")]
    JacobiViolated { residual: f64 },
    #[error("inner product is not positive definite (min pivot {min_pivot:e})")]
    GramNotSpd { min_pivot: f64 },
    #[error("Berger parameters need 1 <= p <= q, got p={p}, q={q}")]
    BergerOrder { p: f64, q: f64 },
    #[error("dimension mismatch: algebra is {0}-dimensional, gram is {1}x{1}")]
    DimMismatch(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A Lie algebra presented by structure constants `[e_i, e_j] = c^k_ij e_k`.
#[derive(Debug, Clone)]
pub struct LieAlgebraData {
    dim: usize,
    /// Flattened `c[k][i][j]` with stride `dim`.
    structure: Vec<f64>,
}

impl LieAlgebraData {
    pub fn new(dim: usize, structure: Vec<f64>) -> Result<LieAlgebraData, FrameError> {
        assert_eq!(structure.len(), dim * dim * dim);
        let alg = LieAlgebraData { dim, structure };
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    if alg.c(k, i, j) != -alg.c(k, j, i) {
                        return Err(FrameError::NotAntisymmetric { k, i, j });
                    }
                }
            }
        }
        let residual = alg.jacobi_residual();
        if residual > JACOBI_TOL {
            return Err(FrameError::JacobiViolated { residual });
        }
        Ok(alg)
    }

    /// Builds from the nonzero brackets `[e_i, e_j] = Σ coeff · e_k`,
    /// filling in antisymmetry.
    pub fn from_brackets(
        dim: usize,
        brackets: &[(usize, usize, usize, f64)],
    ) -> Result<LieAlgebraData, FrameError> {
        let mut structure = vec![0.0; dim * dim * dim];
        for &(i, j, k, coeff) in brackets {
            structure[(k * dim + i) * dim + j] += coeff;
            structure[(k * dim + j) * dim + i] -= coeff;
        }
        LieAlgebraData::new(dim, structure)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Structure constant `c^k_ij`.
    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        self.structure[(k * self.dim + i) * self.dim + j]
    }

    /// Max-norm residual of `[[e_i, e_j], e_k] + cyclic = 0`.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut acc = 0.0;
                        for l in 0..n {
                            acc += self.c(l, j, k) * self.c(m, i, l)
                                + self.c(l, k, i) * self.c(m, j, l)
                                + self.c(l, i, j) * self.c(m, k, l);
                        }
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        worst
    }

    /// su(2) in the basis with `[X1,X2] = 2X3, [X2,X3] = 2X1, [X3,X1] = 2X2`.
    pub fn su2() -> LieAlgebraData {
        LieAlgebraData::from_brackets(3, &[(0, 1, 2, 2.0), (1, 2, 0, 2.0), (2, 0, 1, 2.0)])
            .expect("su(2) constants")
    }

    /// Heisenberg algebra: `[e2, e3] = e1`.
    pub fn heisenberg() -> LieAlgebraData {
        LieAlgebraData::from_brackets(3, &[(1, 2, 0, 1.0)]).expect("heisenberg constants")
    }

    /// sl(2,R) in the basis `(H, E+F, E−F)`:
    /// `[e1,e2] = 2e3, [e2,e3] = −2e1, [e3,e1] = −2e2`.
    pub fn sl2r() -> LieAlgebraData {
        LieAlgebraData::from_brackets(3, &[(0, 1, 2, 2.0), (1, 2, 0, -2.0), (2, 0, 1, -2.0)])
            .expect("sl(2,R) constants")
    }

    /// e(1,1), the 2d Euclidean-signature solvable algebra:
    /// `[e2,e3] = e1, [e3,e1] = −e2`.
    pub fn e11() -> LieAlgebraData {
        LieAlgebraData::from_brackets(3, &[(1, 2, 0, 1.0), (2, 0, 1, -1.0)])
            .expect("e(1,1) constants")
    }
}

/// A left-invariant metric: Lie algebra plus inner product (Gram matrix) on it.
#[derive(Debug, Clone)]
pub struct FrameMetric {
    algebra: LieAlgebraData,
    gram: DMatrix<f64>,
}

impl FrameMetric {
    pub fn new(algebra: LieAlgebraData, gram: DMatrix<f64>) -> Result<FrameMetric, FrameError> {
        if gram.nrows() != algebra.dim() {
            return Err(FrameError::DimMismatch(algebra.dim(), gram.nrows()));
        }
        let min_pivot = linalg::ldlt_min_pivot(&gram);
        if min_pivot < linalg::SPD_PIVOT_TOL {
            return Err(FrameError::GramNotSpd { min_pivot });
        }
        Ok(FrameMetric { algebra, gram })
    }

    pub fn algebra(&self) -> &LieAlgebraData {
        &self.algebra
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }
}

/// Berger-sphere metric on su(2): `diag(1, p, q)` in the standard basis.
/// Parameters are ordered `1 <= p <= q`.
pub fn berger_metric(p: f64, q: f64) -> Result<FrameMetric, FrameError> {
    if !(1.0 <= p && p <= q) {
        return Err(FrameError::BergerOrder { p, q });
    }
    let gram = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, p, q]));
    FrameMetric::new(LieAlgebraData::su2(), gram)
}

/// Symmetric square root and inverse square root of an SPD matrix from one
/// eigendecomposition.
fn sqrt_and_inv_sqrt(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (vals, vecs) = linalg::sym_eigen(m);
    let n = m.nrows();
    let mut sqrt = DMatrix::<f64>::zeros(n, n);
    let mut inv_sqrt = DMatrix::<f64>::zeros(n, n);
    for (i, v) in vals.iter().enumerate() {
        sqrt[(i, i)] = v.sqrt();
        inv_sqrt[(i, i)] = 1.0 / v.sqrt();
    }
    (
        &vecs * sqrt * vecs.transpose(),
        &vecs * inv_sqrt * vecs.transpose(),
    )
}

/// Curvature of a left-invariant metric, reported in the algebra basis.
///
/// The report's `point` is empty (the metric is homogeneous) and the
/// Christoffel slot holds the orthonormal-frame connection coefficients
/// `<∇_{f_a} f_b, f_c>`.
pub fn frame_curvature(metric: &FrameMetric) -> Result<CurvatureReport, FrameError> {
    let n = metric.dim();
    let alg = &metric.algebra;

    // orthonormal frame f = e B with B = G^{-1/2}; then c~^c_ab are the
    // structure constants in that frame and coincide with <[f_a,f_b], f_c>
    let (b_inv, b) = sqrt_and_inv_sqrt(&metric.gram);
    let mut ct = vec![0.0; n * n * n];
    for a in 0..n {
        for bx in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            acc += b[(i, a)] * b[(j, bx)] * alg.c(k, i, j) * b_inv[(c, k)];
                        }
                    }
                }
                ct[(c * n + a) * n + bx] = acc;
            }
        }
    }
    let cc = |a: usize, b: usize, c: usize| ct[(c * n + a) * n + b];

    // <∇_{f_a} f_b, f_c> = ½ (c_abc − c_bca + c_cab)
    let mut conn = vec![0.0; n * n * n];
    for a in 0..n {
        for bx in 0..n {
            for c in 0..n {
                conn[(c * n + a) * n + bx] = 0.5 * (cc(a, bx, c) - cc(bx, c, a) + cc(c, a, bx));
            }
        }
    }
    let gamma = |c: usize, a: usize, b: usize| conn[(c * n + a) * n + b];

    // Ric(f_b, f_c) = Σ_a <R(f_a, f_b) f_c, f_a> with
    // R(X,Y)Z = ∇_X ∇_Y Z − ∇_Y ∇_X Z − ∇_[X,Y] Z and constant coefficients
    let mut ricci_frame = DMatrix::<f64>::zeros(n, n);
    for bx in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                for d in 0..n {
                    acc += gamma(d, bx, c) * gamma(a, a, d)
                        - gamma(d, a, c) * gamma(a, bx, d)
                        - cc(a, bx, d) * gamma(a, d, c);
                }
            }
            ricci_frame[(bx, c)] = acc;
        }
    }
    ricci_frame = (&ricci_frame + ricci_frame.transpose()).scale(0.5);
    let scalar = ricci_frame.trace();

    // back to the algebra basis: Ric_alg = B^{-T} Ric_frame B^{-1}
    let ricci = b_inv.transpose() * &ricci_frame * &b_inv;
    let metric_matrix = metric.gram.clone();
    let inverse_metric = &b * b.transpose();
    let traceless = &ricci - metric_matrix.scale(scalar / n as f64);
    let ricci_eigs = linalg::pencil_eigenvalues(&ricci, &metric_matrix)?;
    let traceless_norm_sq: f64 = ricci_eigs
        .iter()
        .map(|l| (l - scalar / n as f64).powi(2))
        .sum();

    Ok(CurvatureReport {
        point: Vec::new(),
        metric: metric_matrix,
        inverse_metric,
        christoffel: conn,
        ricci,
        scalar,
        traceless_ricci: traceless,
        ricci_eigs,
        traceless_norm_sq,
        // left-invariant metrics have constant scalar curvature
        laplacian_scalar: Some(0.0),
    })
}

/// Outcome of the traceless-Ricci deformation inside the left-invariant class.
#[derive(Debug, Error)]
pub enum FrameDeformError {
    #[error("s = {s} leaves the positive cone; admissible range is ({lower}, {upper})")]
    SpdExit { s: f64, lower: f64, upper: f64 },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Admissible open interval of deformation parameters around zero, from the
/// eigen-shift factors `1 − s (λ_i − R/n)`.
pub fn frame_deform_bounds(report: &CurvatureReport) -> (f64, f64) {
    let n = report.ricci_eigs.len() as f64;
    let mean = report.scalar / n;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for l in &report.ricci_eigs {
        let shifted = l - mean;
        if shifted > 0.0 {
            upper = upper.min(1.0 / shifted);
        } else if shifted < 0.0 {
            lower = lower.max(1.0 / shifted);
        }
    }
    (lower, upper)
}

/// `g_s = g − s ric0(g)` within the left-invariant class: the Gram matrix
/// moves, the algebra stays. Errors when `s` exits the positive cone and
/// reports the critical bounds.
pub fn deform_frame_metric(metric: &FrameMetric, s: f64) -> Result<FrameMetric, FrameDeformError> {
    let report = frame_curvature(metric)?;
    let (lower, upper) = frame_deform_bounds(&report);
    if s <= lower || s >= upper {
        return Err(FrameDeformError::SpdExit { s, lower, upper });
    }
    let gram = &report.metric - report.traceless_ricci.scale(s);
    Ok(FrameMetric::new(metric.algebra.clone(), gram)?)
}

/// Signature `(positive, zero, negative)` of the Ricci quadratic form.
pub fn ricci_signature(
    metric: &FrameMetric,
    tol: f64,
) -> Result<(usize, usize, usize), FrameError> {
    let report = frame_curvature(metric)?;
    let scale = report
        .ricci_eigs
        .iter()
        .fold(1.0f64, |acc, l| acc.max(l.abs()));
    let mut pos = 0;
    let mut zero = 0;
    let mut neg = 0;
    for l in &report.ricci_eigs {
        if *l > tol * scale {
            pos += 1;
        } else if *l < -tol * scale {
            neg += 1;
        } else {
            zero += 1;
        }
    }
    Ok((pos, zero, neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    /// Principal Ricci values of a diagonal metric on a 3d unimodular algebra
    /// with brackets `[e2,e3] = λ1 e1` (cyclic), from the standard frame
    /// computation: rescale to an orthonormal basis and use
    /// `r_i = 2 μ_j μ_k`, `μ_i = ½(λ_j + λ_k − λ_i)`.
    fn milnor_ricci(lambda: [f64; 3], d: [f64; 3]) -> [f64; 3] {
        let lt = [
            lambda[0] * d[0].sqrt() / (d[1] * d[2]).sqrt(),
            lambda[1] * d[1].sqrt() / (d[0] * d[2]).sqrt(),
            lambda[2] * d[2].sqrt() / (d[0] * d[1]).sqrt(),
        ];
        let mu = [
            0.5 * (lt[1] + lt[2] - lt[0]),
            0.5 * (lt[0] + lt[2] - lt[1]),
            0.5 * (lt[0] + lt[1] - lt[2]),
        ];
        [
            2.0 * mu[1] * mu[2],
            2.0 * mu[0] * mu[2],
            2.0 * mu[0] * mu[1],
        ]
    }

    #[test]
    fn round_sphere_from_bi_invariant_metric() {
        let m = berger_metric(1.0, 1.0).unwrap();
        let report = frame_curvature(&m).unwrap();
        assert_abs_diff_eq!(report.scalar, 6.0, epsilon = 1e-12);
        for l in &report.ricci_eigs {
            assert_abs_diff_eq!(*l, 2.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(report.traceless_norm_sq, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn squashed_sphere_reference_values() {
        let m = berger_metric(1.0, 3.5).unwrap();
        let report = frame_curvature(&m).unwrap();
        assert_abs_diff_eq!(report.ricci_eigs[0], -3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(report.ricci_eigs[1], -3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(report.ricci_eigs[2], 7.0, epsilon = 1e-11);
        assert_abs_diff_eq!(report.scalar, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn berger_family_against_closed_forms() {
        // Ricci in the orthonormal frame:
        // r1 = −(−2 + 2q² + 2p² − 4pq)/(pq), r2 = −(2 + 2q² − 2p² − 4q)/(pq),
        // r3 = −(2 − 2q² + 2p² − 4p)/(pq); R = 2(2(p+q+pq) − (1+p²+q²))/(pq)
        for (p, q) in [(1.0, 2.0), (1.5, 3.0), (2.0, 2.0), (1.0, 5.0)] {
            let report = frame_curvature(&berger_metric(p, q).unwrap()).unwrap();
            let r1 = -(-2.0 + 2.0 * q * q + 2.0 * p * p - 4.0 * p * q) / (p * q);
            let r2 = -(2.0 + 2.0 * q * q - 2.0 * p * p - 4.0 * q) / (p * q);
            let r3 = -(2.0 - 2.0 * q * q + 2.0 * p * p - 4.0 * p) / (p * q);
            let mut expect = [r1, r2, r3];
            expect.sort_by(f64::total_cmp);
            for (have, want) in report.ricci_eigs.iter().zip(&expect) {
                assert_abs_diff_eq!(have, want, epsilon = 1e-11 * (1.0 + want.abs()));
            }
            let r = 2.0 / (p * q) * (2.0 * (p + q + p * q) - (1.0 + p * p + q * q));
            assert_abs_diff_eq!(report.scalar, r, epsilon = 1e-11 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn berger_parameter_order_enforced() {
        assert!(matches!(
            berger_metric(2.0, 0.5),
            Err(FrameError::BergerOrder { .. })
        ));
        assert!(berger_metric(0.5, 2.0).is_err());
    }

    #[test]
    fn heisenberg_signature_and_values() {
        let m = FrameMetric::new(LieAlgebraData::heisenberg(), DMatrix::identity(3, 3)).unwrap();
        let report = frame_curvature(&m).unwrap();
        let mut eigs = report.ricci_eigs.clone();
        eigs.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(eigs[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[1], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[2], 0.5, epsilon = 1e-12);
        assert_eq!(ricci_signature(&m, 1e-9).unwrap(), (1, 0, 2));
    }

    #[test]
    fn unimodular_catalog_matches_milnor_formulas() {
        // (algebra, lambda) pairs in the cyclic bracket convention
        let cases: [(LieAlgebraData, [f64; 3]); 3] = [
            (LieAlgebraData::su2(), [2.0, 2.0, 2.0]),
            (LieAlgebraData::heisenberg(), [1.0, 0.0, 0.0]),
            (LieAlgebraData::e11(), [1.0, -1.0, 0.0]),
        ];
        let grams = [[1.0, 1.0, 1.0], [1.0, 2.0, 0.5], [2.0, 1.0, 3.0]];
        for (alg, lambda) in cases {
            for d in grams {
                let gram = DMatrix::from_diagonal(&DVector::from_vec(d.to_vec()));
                let m = FrameMetric::new(alg.clone(), gram).unwrap();
                let report = frame_curvature(&m).unwrap();
                let mut expect = milnor_ricci(lambda, d);
                expect.sort_by(f64::total_cmp);
                for (have, want) in report.ricci_eigs.iter().zip(&expect) {
                    assert_abs_diff_eq!(have, want, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn sl2r_admits_both_reported_signatures() {
        let id = FrameMetric::new(LieAlgebraData::sl2r(), DMatrix::identity(3, 3)).unwrap();
        assert_eq!(ricci_signature(&id, 1e-9).unwrap(), (1, 0, 2));
        // d2 = d1 + d3 degenerates two principal values
        let gram = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 1.0]));
        let m = FrameMetric::new(LieAlgebraData::sl2r(), gram).unwrap();
        assert_eq!(ricci_signature(&m, 1e-9).unwrap(), (0, 2, 1));
    }

    #[test]
    fn scaling_divides_eigenvalues() {
        let base = berger_metric(1.0, 2.5).unwrap();
        let c = 3.0;
        let scaled = FrameMetric::new(LieAlgebraData::su2(), base.gram().scale(c)).unwrap();
        let r0 = frame_curvature(&base).unwrap();
        let r1 = frame_curvature(&scaled).unwrap();
        assert_abs_diff_eq!(r1.scalar, r0.scalar / c, epsilon = 1e-12);
        for (a, b) in r1.ricci_eigs.iter().zip(&r0.ricci_eigs) {
            assert_abs_diff_eq!(*a, b / c, epsilon = 1e-12);
        }
    }

    #[test]
    fn deformation_identity_at_zero_and_eigen_shifts() {
        let m = berger_metric(1.0, 3.5).unwrap();
        let unchanged = deform_frame_metric(&m, 0.0).unwrap();
        assert_abs_diff_eq!(
            (unchanged.gram() - m.gram()).abs().max(),
            0.0,
            epsilon = 1e-14
        );

        // traceless eigenvalues (−10/3, −10/3, 20/3): shifts at s = 0.1 are
        // (4/3, 4/3, 1/3)
        let deformed = deform_frame_metric(&m, 0.1).unwrap();
        let shifts = linalg::pencil_eigenvalues(deformed.gram(), m.gram()).unwrap();
        assert_abs_diff_eq!(shifts[0], 1.0 / 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(shifts[1], 4.0 / 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(shifts[2], 4.0 / 3.0, epsilon = 1e-11);
    }

    #[test]
    fn deformation_cone_exit_reports_bounds() {
        let m = berger_metric(1.0, 3.5).unwrap();
        match deform_frame_metric(&m, 0.2) {
            Err(FrameDeformError::SpdExit { upper, .. }) => {
                assert_abs_diff_eq!(upper, 0.15, epsilon = 1e-11);
            }
            other => panic!("expected cone exit, got {other:?}"),
        }
    }

    #[test]
    fn bad_structure_constants_rejected() {
        // violating antisymmetry: set c^0_(1,2) without its mirror
        let idx = |k: usize, i: usize, j: usize| (k * 3 + i) * 3 + j;
        let mut c = vec![0.0; 27];
        c[idx(0, 1, 2)] = 1.0;
        assert!(matches!(
            LieAlgebraData::new(3, c),
            Err(FrameError::NotAntisymmetric { .. })
        ));
        // violating Jacobi: [e1,e2]=e3, [e1,e3]=e1 fails
        assert!(matches!(
            LieAlgebraData::from_brackets(3, &[(0, 1, 2, 1.0), (0, 2, 0, 1.0)]),
            Err(FrameError::JacobiViolated { .. })
        ));
    }
}
