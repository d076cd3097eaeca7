//! Symmetric-definite matrix pencils and related helpers.
//!
//! All tensor inequalities in this crate reduce to generalized symmetric
//! eigenproblems `A v = λ B v` with `B` positive definite. The pencil is
//! solved by factoring `B = L Lᵀ` and running a standard symmetric
//! eigensolve on `L⁻¹ A L⁻ᵀ`; eigenvalues come back ascending with a
//! deterministic tie-break so repeated runs produce identical output.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Smallest acceptable factorization pivot for a matrix to count as SPD.
pub const SPD_PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric positive definite (min pivot {min_pivot:e})")]
    NotSpd { min_pivot: f64 },
    #[error("matrix dimensions disagree: {0}x{0} vs {1}x{1}")]
    DimMismatch(usize, usize),
    #[error("operation needs dimension >= {needed}, got {got}")]
    DimTooSmall { needed: usize, got: usize },
}

/// Smallest pivot of the LDLᵀ factorization (no pivoting; symmetric input).
pub fn ldlt_min_pivot(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0f64; n];
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let mut dj = m[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        d[j] = dj;
        min_pivot = min_pivot.min(dj);
        if dj <= 0.0 {
            // factorization has already failed; remaining pivots are moot
            return min_pivot;
        }
        for i in (j + 1)..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    min_pivot
}

/// Checks positive definiteness with the pivot tolerance.
pub fn check_spd(m: &DMatrix<f64>) -> Result<(), LinalgError> {
    let min_pivot = ldlt_min_pivot(m);
    if min_pivot < SPD_PIVOT_TOL {
        return Err(LinalgError::NotSpd { min_pivot });
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()).scale(0.5)
}

fn fix_sign(v: &mut DVector<f64>) {
    for x in v.iter() {
        if x.abs() > 1e-12 {
            if *x < 0.0 {
                *v = -v.clone();
            }
            return;
        }
    }
}

fn lex_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > 1e-12 {
            return x < y;
        }
    }
    false
}

/// Eigenvalues and eigenvectors of a symmetric matrix, ascending, with
/// sign-fixed and lexicographically tie-broken eigenvectors.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut cols: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|i| {
            let mut v = eig.eigenvectors.column(i).clone_owned();
            fix_sign(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect();
    let scale = cols.iter().fold(1.0f64, |acc, (l, _)| acc.max(l.abs()));
    cols.sort_by(|(la, va), (lb, vb)| {
        if (la - lb).abs() > 1e-12 * scale {
            la.partial_cmp(lb).unwrap()
        } else if lex_less(va, vb) {
            std::cmp::Ordering::Less
        } else if lex_less(vb, va) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    let values = cols.iter().map(|(l, _)| *l).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (i, (_, v)) in cols.iter().enumerate() {
        vectors.set_column(i, v);
    }
    (values, vectors)
}

/// Generalized eigenvalues of the pencil `(a, b)` with `b` SPD, ascending.
pub fn pencil_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>, LinalgError> {
    Ok(pencil_eigen(a, b)?.0)
}

/// Generalized eigenpairs of `(a, b)`: `a v = λ b v`, eigenvectors
/// B-orthonormal, eigenvalues ascending.
pub fn pencil_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>), LinalgError> {
    if a.nrows() != b.nrows() {
        return Err(LinalgError::DimMismatch(a.nrows(), b.nrows()));
    }
    check_spd(b)?;
    let chol = nalgebra::Cholesky::new(symmetrize(b)).ok_or(LinalgError::NotSpd {
        min_pivot: ldlt_min_pivot(b),
    })?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ via two triangular solves
    let x = l
        .solve_lower_triangular(&symmetrize(a))
        .expect("cholesky factor is invertible");
    let c = l
        .solve_lower_triangular(&x.transpose())
        .expect("cholesky factor is invertible");
    let (values, w) = sym_eigen(&c);
    // back-transform: v = L⁻ᵀ w
    let vectors = l
        .transpose()
        .solve_upper_triangular(&w)
        .expect("cholesky factor is invertible");
    Ok((values, vectors))
}

/// Index pairs (i, j), i < j, in lexicographic order: the 2-vector basis.
pub fn pair_basis(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

/// Gram extension of a symmetric bilinear form to 2-vectors:
/// `Λ²a(ei∧ej, ek∧el) = a_ik a_jl − a_il a_jk`.
pub fn lambda2_gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let pairs = pair_basis(a.nrows());
    let m = pairs.len();
    DMatrix::from_fn(m, m, |r, c| {
        let (i, j) = pairs[r];
        let (k, l) = pairs[c];
        a[(i, k)] * a[(j, l)] - a[(i, l)] * a[(j, k)]
    })
}

/// Generalized eigenvalues of the induced pencil on 2-vectors, computed by
/// assembling the full Λ² Gram matrices. Slow path; serves as the oracle for
/// the two-largest-eigenvalue shortcut used elsewhere.
pub fn lambda2_pencil_eigenvalues_bruteforce(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<Vec<f64>, LinalgError> {
    if a.nrows() < 2 {
        return Err(LinalgError::DimTooSmall {
            needed: 2,
            got: a.nrows(),
        });
    }
    pencil_eigenvalues(&lambda2_gram(a), &lambda2_gram(b))
}
