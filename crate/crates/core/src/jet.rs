//! Truncated multivariate Taylor ("jet") arithmetic.
//!
//! A [`Jet`] carries the raw partial derivatives `∂^α f` of a scalar function
//! at a point, one coefficient per multi-index `α` of total degree up to the
//! jet order. Coefficients are raw partials, not Taylor coefficients: they are
//! not divided by `α!`. Arithmetic obeys the truncated Leibniz rule and
//! univariate composition, so code written against the [`Scalar`] trait runs
//! unchanged on plain `f64` values and on jets.
//!
//! Limits: 1 to 8 variables, order 0 to 4. Coefficients are stored densely,
//! indexed by a per-shape multi-index table shared through a process-wide
//! cache (at most 495 coefficients per jet).

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use thiserror::Error;

/// Maximum number of independent variables.
pub const MAX_VARS: usize = 8;
/// Maximum truncation order.
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jet supports 1..=8 variables, got {0}")]
    BadNumVars(usize),
    #[error("jet supports orders 0..=4, got {0}")]
    BadOrder(usize),
    #[error("division by a value of zero")]
    DivisionByZero,
    #[error("{func} is undefined at value {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("multi-index degree {degree} exceeds jet order {order}")]
    DegreeTooHigh { degree: usize, order: usize },
    #[error("multi-index has {given} entries, jet has {expected} variables")]
    IndexLength { given: usize, expected: usize },
}

type MultiIndex = [u8; MAX_VARS];

/// One fused term of the truncated Leibniz product:
/// `out += binom * a_coeff * b_coeff`.
struct ProductTerm {
    out: u32,
    a: u32,
    b: u32,
    binom: f64,
}

struct IndexTable {
    /// Multi-indices in graded order (degree first, then a fixed
    /// lexicographic order), so truncation to a lower order is a prefix.
    indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    products: Vec<ProductTerm>,
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k.min(n));
    let mut out = 1.0f64;
    for i in 0..k {
        out = out * f64::from(n - i) / f64::from(i + 1);
    }
    out.round()
}

fn degree(alpha: &MultiIndex) -> usize {
    alpha.iter().map(|&a| a as usize).sum()
}

fn gen_indices(num_vars: usize, order: usize) -> Vec<MultiIndex> {
    fn compositions(
        deg: usize,
        vars: usize,
        prefix: &mut MultiIndex,
        at: usize,
        out: &mut Vec<MultiIndex>,
    ) {
        if at + 1 == vars {
            prefix[at] = deg as u8;
            out.push(*prefix);
            prefix[at] = 0;
            return;
        }
        for first in (0..=deg).rev() {
            prefix[at] = first as u8;
            compositions(deg - first, vars, prefix, at + 1, out);
        }
        prefix[at] = 0;
    }
    let mut out = Vec::new();
    let mut prefix = [0u8; MAX_VARS];
    for deg in 0..=order {
        compositions(deg, num_vars, &mut prefix, 0, &mut out);
    }
    out
}

impl IndexTable {
    fn build(num_vars: usize, order: usize) -> Self {
        let indices = gen_indices(num_vars, order);
        let position: HashMap<MultiIndex, usize> =
            indices.iter().enumerate().map(|(i, ix)| (*ix, i)).collect();
        let mut products = Vec::new();
        for (ia, a) in indices.iter().enumerate() {
            let da = degree(a);
            for (ib, b) in indices.iter().enumerate() {
                if da + degree(b) > order {
                    continue;
                }
                let mut sum = [0u8; MAX_VARS];
                let mut binom = 1.0;
                for v in 0..num_vars {
                    sum[v] = a[v] + b[v];
                    binom *= binomial(u32::from(sum[v]), u32::from(a[v]));
                }
                products.push(ProductTerm {
                    out: position[&sum] as u32,
                    a: ia as u32,
                    b: ib as u32,
                    binom,
                });
            }
        }
        IndexTable {
            indices,
            position,
            products,
        }
    }
}

fn table(num_vars: usize, order: usize) -> &'static IndexTable {
    static CELLS: [[OnceLock<IndexTable>; MAX_ORDER + 1]; MAX_VARS] =
        [const { [const { OnceLock::new() }; MAX_ORDER + 1] }; MAX_VARS];
    CELLS[num_vars - 1][order].get_or_init(|| IndexTable::build(num_vars, order))
}

/// Truncated Taylor expansion of a scalar function at a point.
///
/// Coefficients are the raw partial derivatives `∂^α f`, covering every
/// multi-index of total degree at most the jet order.
#[derive(Clone, PartialEq)]
pub struct Jet {
    num_vars: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Jet({} vars, order {}, value {}, coeffs {:?})",
            self.num_vars,
            self.order,
            self.value(),
            self.coeffs
        )
    }
}

fn check_shape(num_vars: usize, order: usize) -> Result<(), JetError> {
    if num_vars == 0 || num_vars > MAX_VARS {
        return Err(JetError::BadNumVars(num_vars));
    }
    if order > MAX_ORDER {
        return Err(JetError::BadOrder(order));
    }
    Ok(())
}

impl Jet {
    /// Constant jet: value with all derivatives zero.
    pub fn constant(num_vars: usize, order: usize, value: f64) -> Result<Jet, JetError> {
        check_shape(num_vars, order)?;
        let len = table(num_vars, order).indices.len();
        let mut coeffs = vec![0.0; len];
        coeffs[0] = value;
        Ok(Jet {
            num_vars,
            order,
            coeffs,
        })
    }

    /// Seeds one jet per coordinate: jet `i` has value `point[i]`, first
    /// partial `∂_i = 1`, and every other coefficient zero.
    pub fn variables(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        check_shape(point.len(), order)?;
        let n = point.len();
        let mut out = Vec::with_capacity(n);
        for (i, &value) in point.iter().enumerate() {
            let mut jet = Jet::constant(n, order, value)?;
            if order >= 1 {
                let mut e_i = [0u8; MAX_VARS];
                e_i[i] = 1;
                let pos = table(n, order).position[&e_i];
                jet.coeffs[pos] = 1.0;
            }
            out.push(jet);
        }
        Ok(out)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Function value (coefficient of the zero multi-index).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw partial derivative `∂^α f` for the given multi-index.
    pub fn partial(&self, alpha: &[usize]) -> Result<f64, JetError> {
        if alpha.len() != self.num_vars {
            return Err(JetError::IndexLength {
                given: alpha.len(),
                expected: self.num_vars,
            });
        }
        let deg: usize = alpha.iter().sum();
        if deg > self.order {
            return Err(JetError::DegreeTooHigh {
                degree: deg,
                order: self.order,
            });
        }
        let mut ix = [0u8; MAX_VARS];
        for (v, &a) in alpha.iter().enumerate() {
            ix[v] = a as u8;
        }
        Ok(self.coeffs[table(self.num_vars, self.order).position[&ix]])
    }

    /// First partial `∂_axis f` as a jet of one order lower.
    ///
    /// Panics if the jet has order 0 or the axis is out of range.
    pub fn derivative(&self, axis: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        assert!(axis < self.num_vars, "axis {axis} out of range");
        let lower = table(self.num_vars, self.order - 1);
        let own = table(self.num_vars, self.order);
        let coeffs = lower
            .indices
            .iter()
            .map(|ix| {
                let mut shifted = *ix;
                shifted[axis] += 1;
                self.coeffs[own.position[&shifted]]
            })
            .collect();
        Jet {
            num_vars: self.num_vars,
            order: self.order - 1,
            coeffs,
        }
    }

    /// Drops coefficients above `new_order`. Graded index order makes this a
    /// prefix copy.
    pub fn truncated(&self, new_order: usize) -> Jet {
        assert!(new_order <= self.order, "cannot truncate upward");
        let len = table(self.num_vars, new_order).indices.len();
        Jet {
            num_vars: self.num_vars,
            order: new_order,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    fn assert_same_shape(&self, rhs: &Jet) {
        assert!(
            self.num_vars == rhs.num_vars && self.order == rhs.order,
            "jet shape mismatch: ({} vars, order {}) vs ({} vars, order {})",
            self.num_vars,
            self.order,
            rhs.num_vars,
            rhs.order
        );
    }

    fn mul_impl(&self, rhs: &Jet) -> Jet {
        self.assert_same_shape(rhs);
        let tab = table(self.num_vars, self.order);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for term in &tab.products {
            coeffs[term.out as usize] +=
                term.binom * self.coeffs[term.a as usize] * rhs.coeffs[term.b as usize];
        }
        Jet {
            num_vars: self.num_vars,
            order: self.order,
            coeffs,
        }
    }

    /// Multiply every coefficient by a plain scalar.
    pub fn scaled(&self, factor: f64) -> Jet {
        Jet {
            num_vars: self.num_vars,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Composes a univariate analytic function onto this jet. `derivs[k]`
    /// must hold `f^(k)` evaluated at `self.value()`, for `k = 0..=order`.
    ///
    /// Uses the truncated Taylor form of `f` around the value: with
    /// `w = self - value` (nilpotent to the truncation order),
    /// `f(self) = Σ_k f^(k)(v)/k! · w^k`, evaluated by Horner.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        assert!(derivs.len() > self.order);
        let mut w = self.clone();
        w.coeffs[0] = 0.0;
        let mut factorial = 1.0;
        let mut taylor = Vec::with_capacity(self.order + 1);
        for (k, d) in derivs.iter().take(self.order + 1).enumerate() {
            if k > 0 {
                factorial *= k as f64;
            }
            taylor.push(d / factorial);
        }
        let mut acc = Jet::constant(self.num_vars, self.order, taylor[self.order]).unwrap();
        for k in (0..self.order).rev() {
            acc = acc.mul_impl(&w);
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    /// Reciprocal; the value must be nonzero.
    pub fn try_recip(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        // f^(k)(v) = (-1)^k k! / v^(k+1)
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut pow = 1.0 / v;
        let mut fact = 1.0;
        let mut sign = 1.0;
        for (k, d) in derivs.iter_mut().enumerate().take(self.order + 1) {
            if k > 0 {
                fact *= k as f64;
                sign = -sign;
                pow /= v;
            }
            *d = sign * fact * pow;
        }
        Ok(self.compose(&derivs))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.assert_same_shape(&rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Jet {
            num_vars: self.num_vars,
            order: self.order,
            coeffs,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.assert_same_shape(&rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Jet {
            num_vars: self.num_vars,
            order: self.order,
            coeffs,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_impl(&rhs)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let recip = rhs.try_recip().expect("jet division by zero value");
        self.mul_impl(&recip)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scaled(-1.0)
    }
}

/// Scalar abstraction shared by `f64` and [`Jet`].
///
/// Curvature code is written once against this trait; instantiating it with
/// jets turns a pointwise computation into one that also carries derivatives
/// of its result.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// A constant with the same shape as `self`.
    fn constant_like(&self, value: f64) -> Self;
    fn value(&self) -> f64;
    fn scale(&self, factor: f64) -> Self;
    fn try_div(&self, rhs: &Self) -> Result<Self, JetError>;
    fn try_sqrt(&self) -> Result<Self, JetError>;
    fn try_ln(&self) -> Result<Self, JetError>;
    fn try_powi(&self, exponent: i32) -> Result<Self, JetError>;
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn tanh(&self) -> Self;
}

impl Scalar for f64 {
    fn constant_like(&self, value: f64) -> f64 {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(&self, factor: f64) -> f64 {
        self * factor
    }
    fn try_div(&self, rhs: &f64) -> Result<f64, JetError> {
        if *rhs == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(self / rhs)
    }
    fn try_sqrt(&self) -> Result<f64, JetError> {
        if *self <= 0.0 {
            return Err(JetError::Domain {
                func: "sqrt",
                value: *self,
            });
        }
        Ok(f64::sqrt(*self))
    }
    fn try_ln(&self) -> Result<f64, JetError> {
        if *self <= 0.0 {
            return Err(JetError::Domain {
                func: "log",
                value: *self,
            });
        }
        Ok(f64::ln(*self))
    }
    fn try_powi(&self, exponent: i32) -> Result<f64, JetError> {
        if *self == 0.0 && exponent < 0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(f64::powi(*self, exponent))
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn sin(&self) -> f64 {
        f64::sin(*self)
    }
    fn cos(&self) -> f64 {
        f64::cos(*self)
    }
    fn sinh(&self) -> f64 {
        f64::sinh(*self)
    }
    fn cosh(&self) -> f64 {
        f64::cosh(*self)
    }
    fn tanh(&self) -> f64 {
        f64::tanh(*self)
    }
}

impl Scalar for Jet {
    fn constant_like(&self, value: f64) -> Jet {
        Jet::constant(self.num_vars, self.order, value).unwrap()
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn scale(&self, factor: f64) -> Jet {
        self.scaled(factor)
    }
    fn try_div(&self, rhs: &Jet) -> Result<Jet, JetError> {
        Ok(self.mul_impl(&rhs.try_recip()?))
    }
    fn try_sqrt(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetError::Domain {
                func: "sqrt",
                value: v,
            });
        }
        // f^(k)(v) = (1/2)(1/2-1)...(1/2-k+1) v^{1/2-k}
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        let mut pow = v.sqrt();
        for (k, d) in derivs.iter_mut().enumerate().take(self.order + 1) {
            if k > 0 {
                coef *= 0.5 - (k as f64 - 1.0);
                pow /= v;
            }
            *d = coef * pow;
        }
        Ok(self.compose(&derivs))
    }
    fn try_ln(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetError::Domain {
                func: "log",
                value: v,
            });
        }
        // f^(k)(v) = (-1)^{k-1} (k-1)! / v^k for k >= 1
        let mut derivs = [0.0; MAX_ORDER + 1];
        derivs[0] = v.ln();
        let mut pow = 1.0;
        let mut fact = 1.0;
        let mut sign = -1.0;
        for (k, d) in derivs.iter_mut().enumerate().take(self.order + 1).skip(1) {
            sign = -sign;
            if k > 1 {
                fact *= (k - 1) as f64;
            }
            pow /= v;
            *d = sign * fact * pow;
        }
        Ok(self.compose(&derivs))
    }
    fn try_powi(&self, exponent: i32) -> Result<Jet, JetError> {
        if exponent == 0 {
            return Ok(self.constant_like(1.0));
        }
        let base = if exponent < 0 {
            self.try_recip()?
        } else {
            self.clone()
        };
        let mut remaining = exponent.unsigned_abs();
        let mut square = base;
        let mut acc: Option<Jet> = None;
        while remaining > 0 {
            if remaining & 1 == 1 {
                acc = Some(match acc {
                    Some(a) => a.mul_impl(&square),
                    None => square.clone(),
                });
            }
            remaining >>= 1;
            if remaining > 0 {
                square = square.mul_impl(&square);
            }
        }
        Ok(acc.unwrap())
    }
    fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }
    fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c, s])
    }
    fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s, c])
    }
    fn sinh(&self) -> Jet {
        let s = self.value().sinh();
        let c = self.value().cosh();
        self.compose(&[s, c, s, c, s])
    }
    fn cosh(&self) -> Jet {
        let s = self.value().sinh();
        let c = self.value().cosh();
        self.compose(&[c, s, c, s, c])
    }
    fn tanh(&self) -> Jet {
        // Derivatives of tanh as polynomials in t = tanh(v).
        let t = self.value().tanh();
        let u = 1.0 - t * t;
        self.compose(&[
            t,
            u,
            -2.0 * t * u,
            u * (6.0 * t * t - 2.0),
            u * t * (16.0 - 24.0 * t * t),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn jet1(x: f64, order: usize) -> Jet {
        Jet::variables(&[x], order).unwrap()[0].clone()
    }

    #[test]
    fn variable_seeding() {
        let j = jet1(2.0, 2);
        assert_eq!(j.partial(&[0]).unwrap(), 2.0);
        assert_eq!(j.partial(&[1]).unwrap(), 1.0);
        assert_eq!(j.partial(&[2]).unwrap(), 0.0);

        let js = Jet::variables(&[0.5, -1.0], 1).unwrap();
        assert_eq!(js[1].partial(&[0, 1]).unwrap(), 1.0);
        assert_eq!(js[1].partial(&[1, 0]).unwrap(), 0.0);

        let c = jet1(1.0, 0);
        assert_eq!(c.value(), 1.0);
        assert!(c.partial(&[1]).is_err());
    }

    #[test]
    fn variable_range_checks() {
        assert!(Jet::variables(&[], 2).is_err());
        assert!(Jet::variables(&[0.0; 9], 2).is_err());
        assert!(Jet::variables(&[0.0], 5).is_err());
    }

    #[test]
    fn square_of_variable() {
        let x = jet1(3.0, 2);
        let sq = x.clone() * x;
        assert_eq!(sq.partial(&[0]).unwrap(), 9.0);
        assert_eq!(sq.partial(&[1]).unwrap(), 6.0);
        assert_eq!(sq.partial(&[2]).unwrap(), 2.0);
    }

    #[test]
    fn self_division_is_one() {
        let a = jet1(4.0, 3).try_powi(2).unwrap();
        let one = a.clone() / a;
        assert_abs_diff_eq!(one.partial(&[0]).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(one.partial(&[1]).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(one.partial(&[2]).unwrap(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(one.partial(&[3]).unwrap(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn division_round_trips_through_multiplication() {
        let v = Jet::variables(&[0.8, -0.4], 4).unwrap();
        let a = v[0].clone().sin() + v[1].clone() * v[0].clone();
        let b = v[1].clone().exp() + v[0].constant_like(0.5);
        let round_trip = a.clone().try_div(&b).unwrap() * b;
        for (have, want) in round_trip.coeffs.iter().zip(&a.coeffs) {
            assert_abs_diff_eq!(have, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn difference_of_squares() {
        let x = jet1(0.0, 2);
        let p = (x.clone() + x.constant_like(1.0)) * (x.clone() - x.constant_like(1.0));
        assert_eq!(p.partial(&[0]).unwrap(), -1.0);
        assert_eq!(p.partial(&[1]).unwrap(), 0.0);
        assert_eq!(p.partial(&[2]).unwrap(), 2.0);
    }

    #[test]
    fn sqrt_first_derivative() {
        let s = jet1(4.0, 1).try_sqrt().unwrap();
        assert_abs_diff_eq!(s.partial(&[0]).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.partial(&[1]).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn sin_third_raw_partial() {
        let s = jet1(0.0, 3).sin();
        assert_abs_diff_eq!(s.partial(&[3]).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_times_exp_negated() {
        let x = jet1(0.7, 4);
        let prod = x.exp() * (-x).exp();
        assert_abs_diff_eq!(prod.partial(&[0]).unwrap(), 1.0, epsilon = 1e-14);
        for d in 1..=4 {
            assert_abs_diff_eq!(prod.partial(&[d]).unwrap(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn extract_partials() {
        let v = Jet::variables(&[1.0, 1.0], 3).unwrap();
        let f = v[0].clone() * v[0].clone() * v[1].clone(); // x1^2 x2
        assert_abs_diff_eq!(f.partial(&[2, 0]).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.partial(&[0, 0]).unwrap(), 1.0, epsilon = 1e-14);

        let g = v[0].clone() * v[1].clone();
        assert_abs_diff_eq!(g.partial(&[1, 1]).unwrap(), 1.0, epsilon = 1e-14);
        assert!(g.partial(&[2, 2]).is_err());
    }

    #[test]
    fn division_by_zero_value() {
        let x = jet1(0.0, 2);
        assert_eq!(
            x.constant_like(1.0).try_div(&x),
            Err(JetError::DivisionByZero)
        );
    }

    #[test]
    fn domain_errors() {
        assert!(jet1(-1.0, 2).try_sqrt().is_err());
        assert!(jet1(0.0, 2).try_ln().is_err());
        assert!(jet1(0.0, 2).try_powi(-1).is_err());
    }

    #[test]
    fn tanh_matches_exp_route() {
        // tanh = 1 - 2/(e^{2x}+1), computed entirely in jet arithmetic.
        let x = jet1(0.37, 4);
        let direct = x.tanh();
        let two_x = x.scaled(2.0);
        let denom = two_x.exp() + x.constant_like(1.0);
        let via_exp = x.constant_like(1.0) - x.constant_like(2.0).try_div(&denom).unwrap();
        for alpha in [[0], [1], [2], [3], [4]] {
            assert_abs_diff_eq!(
                direct.partial(&alpha).unwrap(),
                via_exp.partial(&alpha).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn truncation_is_prefix_consistent() {
        let v = Jet::variables(&[0.4, -0.2, 1.1], 4).unwrap();
        let f4 = (v[0].clone() * v[1].clone() + v[2].clone().sin()).exp();
        let v2 = Jet::variables(&[0.4, -0.2, 1.1], 2).unwrap();
        let f2 = (v2[0].clone() * v2[1].clone() + v2[2].clone().sin()).exp();
        let truncated = f4.truncated(2);
        for (a, b) in truncated.coeffs.iter().zip(&f2.coeffs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn chain_rule_against_finite_differences() {
        // f(g(x)) for analytic f and polynomial g, derivative checked by
        // central differences of the composite.
        let g = |x: f64| 0.3 * x * x * x - x + 2.0;
        type Analytic = fn(f64) -> f64;
        let cases: [(&str, Analytic); 3] =
            [("sin", f64::sin), ("exp", f64::exp), ("sqrt", f64::sqrt)];
        let x0 = 0.8;
        for (name, f) in cases {
            let x = jet1(x0, 2);
            let gx =
                x.clone() * x.clone() * x.clone().scaled(0.3) - x.clone() + x.constant_like(2.0);
            let fg = match name {
                "sin" => gx.sin(),
                "exp" => gx.exp(),
                _ => gx.try_sqrt().unwrap(),
            };
            let h = 1e-5;
            let fd1 = (f(g(x0 + h)) - f(g(x0 - h))) / (2.0 * h);
            let fd2 = (f(g(x0 + h)) - 2.0 * f(g(x0)) + f(g(x0 - h))) / (h * h);
            assert_abs_diff_eq!(fg.partial(&[1]).unwrap(), fd1, epsilon = 1e-8);
            assert_abs_diff_eq!(fg.partial(&[2]).unwrap(), fd2, epsilon = 1e-4);
        }
    }
}
