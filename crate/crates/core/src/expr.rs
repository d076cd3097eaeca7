//! Expression trees for metric components and the recursive-descent parser
//! for them.
//!
//! Grammar (left associative, `^` binds tighter than unary minus):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' int)?
//! base   := number | var | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x1..x8`; the allowed set of calls is `sin cos exp log sqrt
//! sinh cosh tanh`. Exponents must be (possibly negative) integers.

use std::fmt;

use thiserror::Error;

use crate::jet::{JetError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }
}

/// Expression tree over variables `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at offset {offset}: {message}")]
pub struct ParseError {
    /// 1-based byte offset into the source.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("expression references x{0} but only {1} variables are bound")]
    VarOutOfRange(usize, usize),
    #[error(transparent)]
    Arithmetic(#[from] JetError),
}

// constructor names mirror the node names; they are not operator impls
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }
    pub fn pow(a: Expr, k: i32) -> Expr {
        Expr::Pow(Box::new(a), k)
    }
    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Largest variable index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Number(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Evaluates over any [`Scalar`] backend; `vars` must be nonempty.
    pub fn eval<S: Scalar>(&self, vars: &[S]) -> Result<S, EvalError> {
        assert!(!vars.is_empty(), "eval needs at least one bound variable");
        let proto = &vars[0];
        match self {
            Expr::Number(v) => Ok(proto.constant_like(*v)),
            Expr::Var(i) => vars
                .get(*i)
                .cloned()
                .ok_or(EvalError::VarOutOfRange(*i + 1, vars.len())),
            Expr::Neg(a) => Ok(-a.eval(vars)?),
            Expr::Add(a, b) => Ok(a.eval(vars)? + b.eval(vars)?),
            Expr::Sub(a, b) => Ok(a.eval(vars)? - b.eval(vars)?),
            Expr::Mul(a, b) => Ok(a.eval(vars)? * b.eval(vars)?),
            Expr::Div(a, b) => Ok(a.eval(vars)?.try_div(&b.eval(vars)?)?),
            Expr::Pow(a, k) => Ok(a.eval(vars)?.try_powi(*k)?),
            Expr::Call(f, a) => {
                let x = a.eval(vars)?;
                Ok(match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => x.try_ln()?,
                    Func::Sqrt => x.try_sqrt()?,
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                })
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Parses an expression; variables are restricted to `x1..x{num_vars}`.
pub fn parse_expression(src: &str, num_vars: usize) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: src.as_bytes(),
        pos: 0,
        num_vars,
    };
    parser.skip_ws();
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    num_vars: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                acc = Expr::add(acc, self.term()?);
            } else if self.eat(b'-') {
                acc = Expr::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                acc = Expr::mul(acc, self.factor()?);
            } else if self.eat(b'/') {
                acc = Expr::div(acc, self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            // '^' binds tighter than unary minus, so the recursion carries
            // the exponent with the base: -x^2 parses as -(x^2).
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        self.skip_ws();
        if self.eat(b'^') {
            let exponent = self.integer_exponent()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.error("unbalanced parenthesis"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        // optional exponent part, e.g. 1e-3
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Number)
            .map_err(|_| self.error(format!("invalid number '{text}'")))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(idx) = rest.parse::<usize>() {
                if idx == 0 || idx > self.num_vars {
                    self.pos = start;
                    return Err(self.error(format!(
                        "variable {name} out of range (1..={})",
                        self.num_vars
                    )));
                }
                return Ok(Expr::Var(idx - 1));
            }
        }
        if let Some(func) = Func::from_name(name) {
            self.skip_ws();
            if !self.eat(b'(') {
                return Err(self.error(format!("expected '(' after {name}")));
            }
            let arg = self.expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.error("unbalanced parenthesis"));
            }
            return Ok(Expr::call(func, arg));
        }
        self.pos = start;
        Err(self.error(format!("unknown identifier '{name}'")))
    }

    fn integer_exponent(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'-')) {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'.')) {
            return Err(self.error("non-integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<i32>()
            .map_err(|_| self.error("expected integer exponent"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use approx::assert_abs_diff_eq;

    fn depth(e: &Expr) -> usize {
        match e {
            Expr::Number(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + depth(a),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + depth(a).max(depth(b))
            }
        }
    }

    #[test]
    fn stereographic_component_parses() {
        let e = parse_expression("4/(1+x1^2+x2^2)^2", 2).unwrap();
        assert!(depth(&e) >= 5);
        let v = e.eval(&[0.0f64, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 4.0);
        let v = e.eval(&[1.0f64, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 1.0);
    }

    #[test]
    fn unbalanced_paren_offset() {
        let err = parse_expression("sin(x1", 2).unwrap_err();
        assert_eq!(err.offset, 7);
        assert!(err.message.contains("paren"));
    }

    #[test]
    fn variable_out_of_range() {
        let err = parse_expression("x9", 3).unwrap_err();
        assert!(err.message.contains("out of range"));
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        let e = parse_expression("-x1^2", 1).unwrap();
        assert_abs_diff_eq!(e.eval(&[3.0f64]).unwrap(), -9.0);
    }

    #[test]
    fn left_associativity() {
        let e = parse_expression("8/4/2", 1).unwrap();
        assert_abs_diff_eq!(e.eval(&[0.0f64]).unwrap(), 1.0);
        let e = parse_expression("8-4-2", 1).unwrap();
        assert_abs_diff_eq!(e.eval(&[0.0f64]).unwrap(), 2.0);
    }

    #[test]
    fn non_integer_exponent_rejected() {
        assert!(parse_expression("x1^2.5", 1).is_err());
        assert!(parse_expression("x1^x1", 1).is_err());
    }

    #[test]
    fn negative_exponent() {
        let e = parse_expression("x1^-2", 1).unwrap();
        assert_abs_diff_eq!(e.eval(&[2.0f64]).unwrap(), 0.25);
    }

    #[test]
    fn eval_on_jets_matches_f64() {
        let e = parse_expression("exp(x1)*sin(x2) + sqrt(1+x1^2)", 2).unwrap();
        let point = [0.3, -0.7];
        let jets = Jet::variables(&point, 2).unwrap();
        let jet_val = e.eval(&jets).unwrap();
        let plain = e.eval(&point).unwrap();
        assert_abs_diff_eq!(jet_val.value(), plain, epsilon = 1e-14);
        // first partials against central differences
        let h = 1e-6;
        for axis in 0..2 {
            let mut up = point;
            up[axis] += h;
            let mut dn = point;
            dn[axis] -= h;
            let fd = (e.eval(&up).unwrap() - e.eval(&dn).unwrap()) / (2.0 * h);
            let alpha = if axis == 0 { [1, 0] } else { [0, 1] };
            assert_abs_diff_eq!(jet_val.partial(&alpha).unwrap(), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn domain_violation_surfaces() {
        let e = parse_expression("log(x1)", 1).unwrap();
        assert!(e.eval(&[-1.0f64]).is_err());
        let e = parse_expression("1/x1", 1).unwrap();
        assert!(e.eval(&[0.0f64]).is_err());
    }
}
