//! The traceless-Ricci deformation `g_s = g − s ric0(g)` and the pointwise
//! scalar-curvature comparison machinery built on it.
//!
//! Four comparison forms are tracked, indexed by [`Theorem`]:
//!
//! * T1 compares `R_{g_s}` against `R_g · n1(g, g_s)²`, where `n1` is the
//!   square root of the largest tangent-pencil ratio;
//! * T2 uses the 2-vector norm `n2` (unsquared, as the inequality is stated);
//! * T3 compares the tensors `R_{g_s} g_s` and `R_g g` on tangent vectors;
//! * T4 compares `R²_{g_s} g_s` and `R²_g g` on 2-vectors.
//!
//! Each theorem carries a first-order "assumption" margin computed from one
//! point state, and a "conclusion" margin computed from the actual curvature
//! of `g_s`; a scan samples the conclusion margins over a geometric grid of
//! deformation parameters and brackets the admissible interval. A margin
//! counts as strictly positive only above `1e-10 · (1 + |R_g|)`, which
//! separates genuine inequalities from roundoff at `s = 0`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::chart::{self, ChartMetric, CurvatureReport, GeomError};
use crate::expr::Expr;
use crate::frame::{self, FrameDeformError, FrameError, FrameMetric};
use crate::linalg::{self, LinalgError};
use crate::submersion::{CanonicalVariationModel, VariationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    T1,
    T2,
    T3,
    T4,
}

impl Theorem {
    pub fn from_number(k: u8) -> Option<Theorem> {
        match k {
            1 => Some(Theorem::T1),
            2 => Some(Theorem::T2),
            3 => Some(Theorem::T3),
            4 => Some(Theorem::T4),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Theorem::T1 => 1,
            Theorem::T2 => 2,
            Theorem::T3 => 3,
            Theorem::T4 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Positive => "pos",
            Direction::Negative => "neg",
        }
    }
}

#[derive(Debug, Error)]
pub enum DeformError {
    #[error("s = {s} leaves the positive cone; admissible range is ({lower}, {upper})")]
    SpdExit { s: f64, lower: f64, upper: f64 },
    #[error("point sets have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty point set")]
    EmptyPoints,
    #[error("scan needs steps >= 2 and s_max > 0 (got steps {steps}, s_max {s_max})")]
    BadScanParams { steps: usize, s_max: f64 },
    #[error("conformal factor 1 + s*u is not positive at {point:?} (value {value})")]
    ConformalFactor { point: Vec<f64>, value: f64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    FrameDeform(#[from] FrameDeformError),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Strictness threshold: margins below this are treated as zero.
pub fn strictness_tol(scale: f64) -> f64 {
    1e-10 * (1.0 + scale.abs())
}

// ---------------------------------------------------------------------------
// Point states
// ---------------------------------------------------------------------------

/// Curvature data of one metric at one point, the carrier for all margin
/// computations. Produced by any geometry backend.
#[derive(Debug, Clone)]
pub struct PointState {
    pub dim: usize,
    pub metric: DMatrix<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub lap_scalar: f64,
    /// Eigenvalues of Ricci w.r.t. the metric, ascending.
    pub ricci_eigs: Vec<f64>,
    pub traceless_norm_sq: f64,
}

impl PointState {
    pub fn new(
        metric: DMatrix<f64>,
        ricci: DMatrix<f64>,
        scalar: f64,
        lap_scalar: f64,
    ) -> Result<PointState, DeformError> {
        let dim = metric.nrows();
        let ricci_eigs = linalg::pencil_eigenvalues(&ricci, &metric)?;
        let mean = scalar / dim as f64;
        let traceless_norm_sq = ricci_eigs.iter().map(|l| (l - mean).powi(2)).sum();
        Ok(PointState {
            dim,
            metric,
            ricci,
            scalar,
            lap_scalar,
            ricci_eigs,
            traceless_norm_sq,
        })
    }

    pub fn from_report(report: &CurvatureReport) -> Result<PointState, DeformError> {
        let lap = report
            .laplacian_scalar
            .expect("margin computations need the scalar-curvature Laplacian");
        PointState::new(
            report.metric.clone(),
            report.ricci.clone(),
            report.scalar,
            lap,
        )
    }

    pub fn traceless(&self) -> DMatrix<f64> {
        &self.ricci - self.metric.scale(self.scalar / self.dim as f64)
    }

    /// Traceless-Ricci eigenvalues w.r.t. the metric, ascending.
    pub fn traceless_eigs(&self) -> Vec<f64> {
        let mean = self.scalar / self.dim as f64;
        self.ricci_eigs.iter().map(|l| l - mean).collect()
    }

    pub fn is_einstein(&self) -> bool {
        self.traceless_norm_sq.sqrt() <= 1e-9 * (1.0 + self.scalar.abs())
    }

    /// Largest violation of the internal consistency relations.
    pub fn consistency_residual(&self) -> f64 {
        let n = self.dim as f64;
        let g_inv = self
            .metric
            .clone()
            .try_inverse()
            .expect("state metric is SPD");
        let trace_ricci = (&g_inv * &self.ricci).trace();
        let trace_traceless = (&g_inv * self.traceless()).trace();
        let eig_sum: f64 = self.ricci_eigs.iter().sum();
        let eig_norm: f64 = self
            .ricci_eigs
            .iter()
            .map(|l| (l - self.scalar / n).powi(2))
            .sum();
        [
            (trace_ricci - self.scalar).abs(),
            trace_traceless.abs(),
            (eig_sum - self.scalar).abs(),
            (eig_norm - self.traceless_norm_sq).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// The deformation itself
// ---------------------------------------------------------------------------

/// Open interval of `s` keeping `g − s ric0` inside the positive cone,
/// from the eigen-shift factors `1 − s (λ_i − R/n)`.
pub fn deform_bounds(state: &PointState) -> (f64, f64) {
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for shifted in state.traceless_eigs() {
        if shifted > 0.0 {
            upper = upper.min(1.0 / shifted);
        } else if shifted < 0.0 {
            lower = lower.max(1.0 / shifted);
        }
    }
    (lower, upper)
}

#[derive(Debug, Clone)]
pub struct DeformOutcome {
    /// The deformed metric `g_s`.
    pub metric: DMatrix<f64>,
    /// Shift factors `1 − s (λ_i − R/n)` in ascending eigenvalue order.
    pub eigen_shifts: Vec<f64>,
}

/// `g_s = g − s ric0(g)` at one point; errors outside the positive cone with
/// the critical bounds in both directions.
pub fn deform(state: &PointState, s: f64) -> Result<DeformOutcome, DeformError> {
    let (lower, upper) = deform_bounds(state);
    if s <= lower || s >= upper {
        return Err(DeformError::SpdExit { s, lower, upper });
    }
    let metric = &state.metric - state.traceless().scale(s);
    let eigen_shifts = state.traceless_eigs().iter().map(|l| 1.0 - s * l).collect();
    Ok(DeformOutcome {
        metric,
        eigen_shifts,
    })
}

// ---------------------------------------------------------------------------
// Comparison norms
// ---------------------------------------------------------------------------

/// `sqrt(max_v a(v,v)/b(v,v))`: square root of the largest pencil eigenvalue.
pub fn norm1(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, DeformError> {
    linalg::check_spd(a)?;
    let eigs = linalg::pencil_eigenvalues(a, b)?;
    Ok(eigs.last().copied().expect("nonempty spectrum").sqrt())
}

/// The 2-vector analogue: `sqrt(max over 2-vectors of a/b)`. Computed as
/// `sqrt(ν_n ν_{n−1})` from the two largest tangent-pencil eigenvalues.
pub fn norm2(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, DeformError> {
    if a.nrows() < 2 {
        return Err(LinalgError::DimTooSmall {
            needed: 2,
            got: a.nrows(),
        }
        .into());
    }
    linalg::check_spd(a)?;
    let eigs = linalg::pencil_eigenvalues(a, b)?;
    let n = eigs.len();
    Ok((eigs[n - 1] * eigs[n - 2]).sqrt())
}

/// Oracle route for [`norm2`]: assemble the full 2-vector Gram matrices.
pub fn norm2_bruteforce(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, DeformError> {
    linalg::check_spd(a)?;
    let eigs = linalg::lambda2_pencil_eigenvalues_bruteforce(a, b)?;
    Ok(eigs.last().copied().expect("nonempty spectrum").sqrt())
}

// ---------------------------------------------------------------------------
// Assumption margins
// ---------------------------------------------------------------------------

/// First-order margins for the two deformation directions. For T3/T4 a single
/// display covers both directions, so the two fields coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchMargins {
    pub pos_s: f64,
    pub neg_s: f64,
}

impl BranchMargins {
    pub fn best(&self) -> f64 {
        self.pos_s.max(self.neg_s)
    }

    pub fn branch(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Positive => self.pos_s,
            Direction::Negative => self.neg_s,
        }
    }
}

/// Pointwise first-order margin of the given comparison form.
///
/// With `base = (3n−2)/(2n) ΔR + ‖ric0‖² + R²/n` and Ricci eigenvalues
/// `λ_1 ≤ … ≤ λ_n`:
///
/// * T1: `base − R λ_n` for `s > 0`, `base − R λ_1` for `s < 0`;
/// * T2: the pairing flips with the sign of `R`;
/// * T3: `min_i (base − R λ_i)`;
/// * T4: `min_{i<j} ((3n−2)/n R ΔR + 2R‖ric0‖² + R³/n − R²(λ_i + λ_j − R/n))`.
pub fn assumption_margin(state: &PointState, theorem: Theorem) -> BranchMargins {
    let n = state.dim as f64;
    let r = state.scalar;
    let lap_term = (3.0 * n - 2.0) / (2.0 * n) * state.lap_scalar;
    let base = lap_term + state.traceless_norm_sq + r * r / n;
    let lambda_min = state.ricci_eigs[0];
    let lambda_max = *state.ricci_eigs.last().expect("nonempty spectrum");
    match theorem {
        Theorem::T1 => BranchMargins {
            pos_s: base - r * lambda_max,
            neg_s: base - r * lambda_min,
        },
        Theorem::T2 => {
            let with_min = base - r * lambda_min;
            let with_max = base - r * lambda_max;
            if r >= 0.0 {
                BranchMargins {
                    pos_s: with_max,
                    neg_s: with_min,
                }
            } else {
                BranchMargins {
                    pos_s: with_min,
                    neg_s: with_max,
                }
            }
        }
        Theorem::T3 => {
            let m = state
                .ricci_eigs
                .iter()
                .map(|l| base - r * l)
                .fold(f64::INFINITY, f64::min);
            BranchMargins { pos_s: m, neg_s: m }
        }
        Theorem::T4 => {
            let base4 = 2.0 * r * lap_term + 2.0 * r * state.traceless_norm_sq + r.powi(3) / n;
            let mut m = f64::INFINITY;
            for (i, li) in state.ricci_eigs.iter().enumerate() {
                for lj in state.ricci_eigs.iter().skip(i + 1) {
                    m = m.min(base4 - r * r * (li + lj - r / n));
                }
            }
            BranchMargins { pos_s: m, neg_s: m }
        }
    }
}

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

/// Curvature of the deformed metric at one point, in the same basis as the
/// base state.
#[derive(Debug, Clone)]
pub struct DeformedState {
    pub metric: DMatrix<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

/// A geometry backend able to produce curvature of `g` and of `g_s` at its
/// sample points.
pub trait CurvatureBackend {
    fn label(&self) -> String;
    fn point_count(&self) -> usize;
    fn point_id(&self, index: usize) -> String;
    fn state(&self, index: usize) -> Result<PointState, DeformError>;
    fn deformed(&self, index: usize, s: f64) -> Result<DeformedState, DeformError>;
}

/// Expression-chart backend over a fixed point sample.
pub struct ChartBackend {
    pub metric: ChartMetric,
    pub points: Vec<Vec<f64>>,
    pub label: String,
}

impl ChartBackend {
    pub fn new(metric: ChartMetric, points: Vec<Vec<f64>>, label: impl Into<String>) -> Self {
        ChartBackend {
            metric,
            points,
            label: label.into(),
        }
    }
}

impl CurvatureBackend for ChartBackend {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn point_count(&self) -> usize {
        self.points.len()
    }

    fn point_id(&self, index: usize) -> String {
        format!("p{index}")
    }

    fn state(&self, index: usize) -> Result<PointState, DeformError> {
        let report = self.metric.curvature_report(&self.points[index], true)?;
        PointState::from_report(&report)
    }

    fn deformed(&self, index: usize, s: f64) -> Result<DeformedState, DeformError> {
        let report = self
            .metric
            .deformed_curvature_report(&self.points[index], s)?;
        Ok(DeformedState {
            metric: report.metric,
            ricci: report.ricci,
            scalar: report.scalar,
        })
    }
}

/// Left-invariant backend: one homogeneous point, exact recomputation.
pub struct FrameBackend {
    pub metric: FrameMetric,
    pub label: String,
}

impl FrameBackend {
    pub fn new(metric: FrameMetric, label: impl Into<String>) -> Self {
        FrameBackend {
            metric,
            label: label.into(),
        }
    }
}

impl CurvatureBackend for FrameBackend {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn point_count(&self) -> usize {
        1
    }

    fn point_id(&self, _index: usize) -> String {
        "origin".to_string()
    }

    fn state(&self, _index: usize) -> Result<PointState, DeformError> {
        PointState::from_report(&frame::frame_curvature(&self.metric)?)
    }

    fn deformed(&self, _index: usize, s: f64) -> Result<DeformedState, DeformError> {
        let moved = frame::deform_frame_metric(&self.metric, s)?;
        let report = frame::frame_curvature(&moved)?;
        Ok(DeformedState {
            metric: report.metric,
            ricci: report.ricci,
            scalar: report.scalar,
        })
    }
}

/// Canonical-variation backend: one homogeneous point, closed-form.
pub struct VariationBackend {
    pub model: CanonicalVariationModel,
    pub label: String,
}

impl VariationBackend {
    pub fn new(model: CanonicalVariationModel, label: impl Into<String>) -> Self {
        VariationBackend {
            model,
            label: label.into(),
        }
    }
}

impl CurvatureBackend for VariationBackend {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn point_count(&self) -> usize {
        1
    }

    fn point_id(&self, _index: usize) -> String {
        "origin".to_string()
    }

    fn state(&self, _index: usize) -> Result<PointState, DeformError> {
        let c = self.model.curvature();
        PointState::new(
            self.model.metric_matrix(),
            self.model.ricci_matrix(),
            c.scalar,
            0.0,
        )
    }

    fn deformed(&self, _index: usize, s: f64) -> Result<DeformedState, DeformError> {
        let (metric, ricci, scalar) = self.model.deformed_state(s)?;
        Ok(DeformedState {
            metric,
            ricci,
            scalar,
        })
    }
}

/// First-order margins of all four comparison forms for a canonical
/// variation model (its scalar curvature is constant, so the Laplacian term
/// drops out).
pub fn variation_assumption_margins(
    model: &CanonicalVariationModel,
) -> Result<[BranchMargins; 4], DeformError> {
    let backend = VariationBackend::new(model.clone(), "variation");
    let state = backend.state(0)?;
    Ok([Theorem::T1, Theorem::T2, Theorem::T3, Theorem::T4]
        .map(|theorem| assumption_margin(&state, theorem)))
}

// ---------------------------------------------------------------------------
// Conclusion margins
// ---------------------------------------------------------------------------

/// Margin of the deformed comparison inequality at one point.
///
/// * T1: `R_{g_s} − R_g · n1(g, g_s)²`
/// * T2: `R_{g_s} − R_g · n2(g, g_s)`
/// * T3: smallest pencil eigenvalue of `R_{g_s} g_s − R_g g` against `g`
/// * T4: smallest 2-vector margin `R²_{g_s} κ_i κ_j − R²_g`, where `κ` are the
///   eigenvalues of the pencil `(g_s, g)`
pub fn conclusion_margin(
    backend: &dyn CurvatureBackend,
    index: usize,
    s: f64,
    theorem: Theorem,
) -> Result<f64, DeformError> {
    if s == 0.0 {
        // identical metrics: every comparison margin vanishes identically
        return Ok(0.0);
    }
    let state = backend.state(index)?;
    let moved = backend.deformed(index, s)?;
    conclusion_margin_from_states(&state, &moved, theorem)
}

pub fn conclusion_margin_from_states(
    state: &PointState,
    moved: &DeformedState,
    theorem: Theorem,
) -> Result<f64, DeformError> {
    match theorem {
        Theorem::T1 => {
            let n1 = norm1(&state.metric, &moved.metric)?;
            Ok(moved.scalar - state.scalar * n1 * n1)
        }
        Theorem::T2 => {
            let n2 = norm2(&state.metric, &moved.metric)?;
            Ok(moved.scalar - state.scalar * n2)
        }
        Theorem::T3 => {
            let diff = moved.metric.scale(moved.scalar) - state.metric.scale(state.scalar);
            let eigs = linalg::pencil_eigenvalues(&diff, &state.metric)?;
            Ok(eigs[0])
        }
        Theorem::T4 => {
            let kappa = linalg::pencil_eigenvalues(&moved.metric, &state.metric)?;
            let rs2 = moved.scalar * moved.scalar;
            let r2 = state.scalar * state.scalar;
            let mut m = f64::INFINITY;
            for (i, ki) in kappa.iter().enumerate() {
                for kj in kappa.iter().skip(i + 1) {
                    m = m.min(rs2 * ki * kj - r2);
                }
            }
            Ok(m)
        }
    }
}

fn quad(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * a * v)[(0, 0)]
}

fn gram2(a: &DMatrix<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    quad(a, v) * quad(a, w) - (v.transpose() * a * w)[(0, 0)].powi(2)
}

/// Conclusion margin with the comparison direction frozen to the
/// eigendirection binding on the given branch. The frozen margin is a smooth
/// function of `s` (the raw margin has a kink at `s = 0` where the
/// maximizing direction switches), so it is the right object to
/// differentiate.
fn frozen_margin(
    state: &PointState,
    moved: &DeformedState,
    theorem: Theorem,
    frozen: &FrozenDirections,
) -> Result<f64, DeformError> {
    match theorem {
        Theorem::T1 => {
            let v = &frozen.primary;
            let ratio = quad(&state.metric, v) / quad(&moved.metric, v);
            Ok(moved.scalar - state.scalar * ratio)
        }
        Theorem::T2 => {
            let v = &frozen.primary;
            let w = frozen.secondary.as_ref().expect("pair direction");
            let ratio = gram2(&state.metric, v, w) / gram2(&moved.metric, v, w);
            Ok(moved.scalar - state.scalar * ratio.sqrt())
        }
        Theorem::T3 => {
            let v = &frozen.primary;
            let diff = moved.metric.scale(moved.scalar) - state.metric.scale(state.scalar);
            Ok(quad(&diff, v) / quad(&state.metric, v))
        }
        Theorem::T4 => {
            let v = &frozen.primary;
            let w = frozen.secondary.as_ref().expect("pair direction");
            let base = gram2(&state.metric, v, w);
            let shifted = gram2(&moved.metric, v, w);
            Ok((moved.scalar * moved.scalar * shifted - state.scalar * state.scalar * base) / base)
        }
    }
}

struct FrozenDirections {
    primary: DVector<f64>,
    secondary: Option<DVector<f64>>,
}

/// Picks the binding eigendirections at a small reference parameter on the
/// requested branch.
fn freeze_directions(
    state: &PointState,
    moved_ref: &DeformedState,
    theorem: Theorem,
) -> Result<FrozenDirections, DeformError> {
    match theorem {
        Theorem::T1 => {
            let (_, vecs) = linalg::pencil_eigen(&state.metric, &moved_ref.metric)?;
            let n = vecs.ncols();
            Ok(FrozenDirections {
                primary: vecs.column(n - 1).clone_owned(),
                secondary: None,
            })
        }
        Theorem::T2 => {
            let (_, vecs) = linalg::pencil_eigen(&state.metric, &moved_ref.metric)?;
            let n = vecs.ncols();
            Ok(FrozenDirections {
                primary: vecs.column(n - 1).clone_owned(),
                secondary: Some(vecs.column(n - 2).clone_owned()),
            })
        }
        Theorem::T3 => {
            let diff = moved_ref.metric.scale(moved_ref.scalar) - state.metric.scale(state.scalar);
            let (_, vecs) = linalg::pencil_eigen(&diff, &state.metric)?;
            Ok(FrozenDirections {
                primary: vecs.column(0).clone_owned(),
                secondary: None,
            })
        }
        Theorem::T4 => {
            let (kappa, vecs) = linalg::pencil_eigen(&moved_ref.metric, &state.metric)?;
            let rs2 = moved_ref.scalar * moved_ref.scalar;
            let mut best = (0usize, 1usize);
            let mut best_val = f64::INFINITY;
            for (i, ki) in kappa.iter().enumerate() {
                for (j, kj) in kappa.iter().enumerate().skip(i + 1) {
                    let val = rs2 * ki * kj;
                    if val < best_val {
                        best_val = val;
                        best = (i, j);
                    }
                }
            }
            Ok(FrozenDirections {
                primary: vecs.column(best.0).clone_owned(),
                secondary: Some(vecs.column(best.1).clone_owned()),
            })
        }
    }
}

/// Derivative of the conclusion margin at `s = 0` along the given branch,
/// by Richardson-extrapolated central differences of the frozen margin.
///
/// On states with vanishing `ΔR` this equals the corresponding
/// [`assumption_margin`] branch exactly for T1 (both branches) and for the
/// positive branches of T3/T4. For T2 and the negative branches of T3/T4 the
/// assumption margin bounds the slope rather than equalling it: those
/// inequalities are proved through a one-directional estimate of the norm
/// term, so the margin is the derivative of a minorant.
pub fn conclusion_margin_slope(
    backend: &dyn CurvatureBackend,
    index: usize,
    theorem: Theorem,
    direction: Direction,
) -> Result<f64, DeformError> {
    let state = backend.state(index)?;
    let s_ref = direction.sign() * 1e-4;
    let moved_ref = backend.deformed(index, s_ref)?;
    let frozen = freeze_directions(&state, &moved_ref, theorem)?;
    let central = |h: f64| -> Result<f64, DeformError> {
        let up = frozen_margin(&state, &backend.deformed(index, h)?, theorem, &frozen)?;
        let dn = frozen_margin(&state, &backend.deformed(index, -h)?, theorem, &frozen)?;
        Ok((up - dn) / (2.0 * h))
    };
    let d4 = central(1e-4)?;
    let d5 = central(1e-5)?;
    // central differences have O(h²) error: Richardson with ratio 10
    Ok((100.0 * d5 - d4) / 99.0)
}

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ScanSample {
    pub s: f64,
    pub point_id: String,
    /// `None` when the deformed metric left the positive cone.
    pub margin: Option<f64>,
    pub spd_ok: bool,
}

#[derive(Debug, Clone)]
pub struct SlopeCheck {
    pub point_id: String,
    pub slope: f64,
    pub assumption_margin: f64,
    pub rel_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub theorem: Theorem,
    pub direction: Direction,
    pub s_grid: Vec<f64>,
    pub samples: Vec<ScanSample>,
    /// Largest grid prefix on which the strict inequality holds at every
    /// point: `(0, s*)` or `(s*, 0)`.
    pub admissible: Option<(f64, f64)>,
    /// Magnitude of the deformation parameter at which some point leaves the
    /// positive cone; `None` when unbounded.
    pub spd_limit: Option<f64>,
    /// All sampled states are Einstein: the deformation direction vanishes.
    pub degenerate: bool,
    pub slope_checks: Vec<SlopeCheck>,
}

impl ScanResult {
    /// CSV with columns `s,point_id,margin,spd_ok`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,point_id,margin,spd_ok\n");
        for sample in &self.samples {
            let margin = sample
                .margin
                .map(|m| format!("{m:.17e}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{:.17e},{},{},{}\n",
                sample.s, sample.point_id, margin, sample.spd_ok
            ));
        }
        out
    }
}

/// Samples conclusion margins over a geometric grid
/// `s = cap · 2^{-k}` and brackets the admissible interval.
pub fn scan_s(
    backend: &dyn CurvatureBackend,
    theorem: Theorem,
    direction: Direction,
    s_max: f64,
    steps: usize,
) -> Result<ScanResult, DeformError> {
    if steps < 2 || !(s_max > 0.0) {
        return Err(DeformError::BadScanParams { steps, s_max });
    }
    if backend.point_count() == 0 {
        return Err(DeformError::EmptyPoints);
    }

    let states: Vec<PointState> = (0..backend.point_count())
        .map(|i| backend.state(i))
        .collect::<Result<_, _>>()?;
    let degenerate = states.iter().all(PointState::is_einstein);

    // positive-cone limit in the scan direction, over all points
    let mut limit = f64::INFINITY;
    for state in &states {
        let (lower, upper) = deform_bounds(state);
        let bound = match direction {
            Direction::Positive => upper,
            Direction::Negative => -lower,
        };
        limit = limit.min(bound);
    }
    let spd_limit = limit.is_finite().then_some(limit);

    let cap = if limit.is_finite() {
        s_max.min(limit * (1.0 - 1e-6))
    } else {
        s_max
    };
    let s_grid: Vec<f64> = (0..steps)
        .map(|k| direction.sign() * cap * 2f64.powi(-((steps - 1 - k) as i32)))
        .collect();

    let mut samples = Vec::with_capacity(steps * states.len());
    let mut prefix_ok = vec![true; steps];
    for (k, &s) in s_grid.iter().enumerate() {
        for (i, state) in states.iter().enumerate() {
            let point_id = backend.point_id(i);
            let margin_at = |s: f64| -> Result<f64, DeformError> {
                let moved = backend.deformed(i, s)?;
                conclusion_margin_from_states(state, &moved, theorem)
            };
            match margin_at(s) {
                Ok(margin) => {
                    let tol = strictness_tol(state.scalar);
                    let strict = match direction {
                        Direction::Positive => margin > tol,
                        Direction::Negative => margin < -tol,
                    };
                    if !strict {
                        prefix_ok[k] = false;
                    }
                    samples.push(ScanSample {
                        s,
                        point_id,
                        margin: Some(margin),
                        spd_ok: true,
                    });
                }
                Err(
                    DeformError::SpdExit { .. }
                    | DeformError::Geom(GeomError::NotSpd { .. })
                    | DeformError::FrameDeform(FrameDeformError::SpdExit { .. })
                    | DeformError::Variation(VariationError::BadParameter(_)),
                ) => {
                    prefix_ok[k] = false;
                    samples.push(ScanSample {
                        s,
                        point_id,
                        margin: None,
                        spd_ok: false,
                    });
                }
                Err(other) => return Err(other),
            }
        }
    }

    let admissible = if degenerate {
        None
    } else {
        let mut last_good: Option<f64> = None;
        for (k, &s) in s_grid.iter().enumerate() {
            if prefix_ok[k] {
                last_good = Some(s);
            } else {
                break;
            }
        }
        last_good.map(|s| match direction {
            Direction::Positive => (0.0, s),
            Direction::Negative => (s, 0.0),
        })
    };

    let mut slope_checks = Vec::with_capacity(states.len());
    if !degenerate {
        for (i, state) in states.iter().enumerate() {
            let slope = conclusion_margin_slope(backend, i, theorem, direction)?;
            let expected = assumption_margin(state, theorem).branch(direction);
            let rel_deviation = (slope - expected).abs() / expected.abs().max(1e-12);
            slope_checks.push(SlopeCheck {
                point_id: backend.point_id(i),
                slope,
                assumption_margin: expected,
                rel_deviation,
            });
        }
    }

    Ok(ScanResult {
        theorem,
        direction,
        s_grid,
        samples,
        admissible,
        spd_limit,
        degenerate,
        slope_checks,
    })
}

// ---------------------------------------------------------------------------
// Rigidity hypotheses and the extremal functionals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisKind {
    D1,
    D2,
    D3,
    D4,
}

impl HypothesisKind {
    pub fn from_number(k: u8) -> Option<HypothesisKind> {
        match k {
            1 => Some(HypothesisKind::D1),
            2 => Some(HypothesisKind::D2),
            3 => Some(HypothesisKind::D3),
            4 => Some(HypothesisKind::D4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisSample {
    pub index: usize,
    pub margin: f64,
    pub holds: bool,
}

/// Pointwise comparison hypotheses between a reference metric `g0` and a
/// candidate `g` over matched point samples:
///
/// * D1: `R_g >= R_{g0} · n1(g0, g)²`
/// * D2: `R_g >= R_{g0} · n2(g0, g)`
/// * D3: `R_g g − R_{g0} g0 >= 0` on tangent vectors
/// * D4: `R²_g g − R²_{g0} g0 >= 0` on 2-vectors
pub fn rigidity_hypothesis(
    g0_states: &[PointState],
    g_states: &[PointState],
    kind: HypothesisKind,
) -> Result<Vec<HypothesisSample>, DeformError> {
    if g0_states.len() != g_states.len() {
        return Err(DeformError::LengthMismatch(g0_states.len(), g_states.len()));
    }
    if g0_states.is_empty() {
        return Err(DeformError::EmptyPoints);
    }
    let mut out = Vec::with_capacity(g0_states.len());
    for (index, (s0, s1)) in g0_states.iter().zip(g_states).enumerate() {
        let margin = match kind {
            HypothesisKind::D1 => {
                let n1 = norm1(&s0.metric, &s1.metric)?;
                s1.scalar - s0.scalar * n1 * n1
            }
            HypothesisKind::D2 => {
                let n2 = norm2(&s0.metric, &s1.metric)?;
                s1.scalar - s0.scalar * n2
            }
            HypothesisKind::D3 => {
                let diff = s1.metric.scale(s1.scalar) - s0.metric.scale(s0.scalar);
                linalg::pencil_eigenvalues(&diff, &s0.metric)?[0]
            }
            HypothesisKind::D4 => {
                let nu = linalg::pencil_eigenvalues(&s0.metric, &s1.metric)?;
                let r0_sq = s0.scalar * s0.scalar;
                let r1_sq = s1.scalar * s1.scalar;
                let mut m = f64::INFINITY;
                for (i, ni) in nu.iter().enumerate() {
                    for nj in nu.iter().skip(i + 1) {
                        m = m.min(r1_sq - r0_sq * ni * nj);
                    }
                }
                m
            }
        };
        let tol = strictness_tol(s0.scalar.abs() + s1.scalar.abs());
        out.push(HypothesisSample {
            index,
            margin,
            holds: margin >= -tol,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemarkFunctionals {
    /// `max over samples of R_{g0} · n1(g0, g)²`.
    pub f1: f64,
    /// `max over samples of R_{g0} · n2(g0, g)`.
    pub f2: f64,
    /// `min over samples of R_g`.
    pub r_min: f64,
}

/// Sampled evaluations of the two comparison functionals and the scalar
/// minimum; approximations from below/above that refine with the sample.
pub fn remark_functionals(
    g0_states: &[PointState],
    g_states: &[PointState],
) -> Result<RemarkFunctionals, DeformError> {
    if g0_states.len() != g_states.len() {
        return Err(DeformError::LengthMismatch(g0_states.len(), g_states.len()));
    }
    if g0_states.is_empty() {
        return Err(DeformError::EmptyPoints);
    }
    let mut f1 = f64::NEG_INFINITY;
    let mut f2 = f64::NEG_INFINITY;
    let mut r_min = f64::INFINITY;
    for (s0, s1) in g0_states.iter().zip(g_states) {
        let n1 = norm1(&s0.metric, &s1.metric)?;
        let n2 = norm2(&s0.metric, &s1.metric)?;
        f1 = f1.max(s0.scalar * n1 * n1);
        f2 = f2.max(s0.scalar * n2);
        r_min = r_min.min(s1.scalar);
    }
    Ok(RemarkFunctionals { f1, f2, r_min })
}

// ---------------------------------------------------------------------------
// Conformal deformation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConformalPointReport {
    pub point: Vec<f64>,
    pub s_values: Vec<f64>,
    /// `R_{(1+su)g}(1+su) − R_g + s(n−1)Δu` per sampled `s`.
    pub residuals: Vec<f64>,
    pub slope: Option<f64>,
    /// `−(n−1) Δ_g u`: the expected first-order coefficient.
    pub first_order_coefficient: f64,
    /// Richardson estimate of the second-order coefficient.
    pub second_order_empirical: f64,
    /// `u² R_g + (n−1)/2 |∇u|²`: closed second-order reference, reported
    /// alongside without being asserted.
    pub second_order_reference: f64,
}

#[derive(Debug)]
pub struct ConformalOutcome {
    pub deformed: ChartMetric,
    pub s: f64,
    pub points: Vec<ConformalPointReport>,
}

/// Builds `(1+su) g` and verifies at the sample points that
/// `R_{(1+su)g}(1+su)g − R_g g = −s(n−1)(Δ_g u) g + O(s²)` by a slope test
/// over halved parameters.
pub fn conformal_deform(
    metric: &ChartMetric,
    u: &Expr,
    s: f64,
    points: &[Vec<f64>],
) -> Result<ConformalOutcome, DeformError> {
    if points.is_empty() {
        return Err(DeformError::EmptyPoints);
    }
    let n = metric.dim() as f64;
    for point in points {
        let value = u.eval(point).map_err(GeomError::from)?;
        if 1.0 + s * value <= 0.0 {
            return Err(DeformError::ConformalFactor {
                point: point.clone(),
                value: 1.0 + s * value,
            });
        }
    }
    let deformed = metric.conformal(u, s)?;

    let halvings = 6;
    let mut reports = Vec::with_capacity(points.len());
    for point in points {
        let base = metric.curvature_report(point, false)?;
        let u_val = u.eval(point).map_err(GeomError::from)?;
        let lap_u = chart::scalar_field_laplacian(metric, u, point)?;
        let grad_sq = chart::scalar_field_grad_norm_sq(metric, u, point)?;
        let first_order_coefficient = -(n - 1.0) * lap_u;

        let mut s_values = Vec::with_capacity(halvings);
        let mut residuals = Vec::with_capacity(halvings);
        for k in 0..halvings {
            let sk = s * 2f64.powi(-(k as i32));
            let conf = metric.conformal(u, sk)?;
            let scal = conf.curvature_report(point, false)?.scalar;
            let residual = scal * (1.0 + sk * u_val) - base.scalar + sk * (n - 1.0) * lap_u;
            s_values.push(sk);
            residuals.push(residual);
        }
        let slope = chart::log_log_slope(&s_values, &residuals, 1e-12 * (1.0 + base.scalar.abs()));

        let c = |idx: usize| residuals[idx] / (s_values[idx] * s_values[idx]);
        let second_order_empirical = 2.0 * c(halvings - 1) - c(halvings - 2);
        let second_order_reference = u_val * u_val * base.scalar + 0.5 * (n - 1.0) * grad_sq;

        reports.push(ConformalPointReport {
            point: point.clone(),
            s_values,
            residuals,
            slope,
            first_order_coefficient,
            second_order_empirical,
            second_order_reference,
        });
    }

    Ok(ConformalOutcome {
        deformed,
        s,
        points: reports,
    })
}
