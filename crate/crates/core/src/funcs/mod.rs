//! Entire functions as expression trees, evaluated through truncated Taylor jets.

mod antideriv;
mod jet;
mod parse;

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub use antideriv::antiderivative;
pub use jet::Jet;
pub use parse::parse_expr;

/// Expression tree for an entire function of one complex variable `z`.
///
/// There is no division node and powers are non-negative integers, so every
/// tree denotes an entire function.
#[derive(Debug, Clone, PartialEq)]
pub enum FuncExpr {
    Constant(Complex64),
    Variable,
    Add(Box<FuncExpr>, Box<FuncExpr>),
    Mul(Box<FuncExpr>, Box<FuncExpr>),
    Negate(Box<FuncExpr>),
    Exp(Box<FuncExpr>),
    IntPower(Box<FuncExpr>, u32),
    Scale(Complex64, Box<FuncExpr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuncError {
    #[error("evaluation overflow at node `{node}`")]
    Overflow { node: String },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("expression is not entire at byte {offset}: {message}")]
    EntiretyViolation { offset: usize, message: String },
    #[error("antiderivative unsupported for node `{node}`")]
    UnsupportedClass { node: String },
}

pub type Result<T> = std::result::Result<T, FuncError>;

impl FuncExpr {
    pub fn constant(c: impl Into<Complex64>) -> Self {
        FuncExpr::Constant(c.into())
    }

    pub fn z() -> Self {
        FuncExpr::Variable
    }

    pub fn add(l: FuncExpr, r: FuncExpr) -> Self {
        FuncExpr::Add(Box::new(l), Box::new(r))
    }

    pub fn mul(l: FuncExpr, r: FuncExpr) -> Self {
        FuncExpr::Mul(Box::new(l), Box::new(r))
    }

    pub fn neg(e: FuncExpr) -> Self {
        FuncExpr::Negate(Box::new(e))
    }

    pub fn exp(e: FuncExpr) -> Self {
        FuncExpr::Exp(Box::new(e))
    }

    pub fn pow(e: FuncExpr, k: u32) -> Self {
        FuncExpr::IntPower(Box::new(e), k)
    }

    pub fn scale(c: impl Into<Complex64>, e: FuncExpr) -> Self {
        FuncExpr::Scale(c.into(), Box::new(e))
    }

    /// True when the tree does not mention `z`.
    pub fn is_constant(&self) -> bool {
        match self {
            FuncExpr::Constant(_) => true,
            FuncExpr::Variable => false,
            FuncExpr::Add(l, r) | FuncExpr::Mul(l, r) => l.is_constant() && r.is_constant(),
            FuncExpr::Negate(e) | FuncExpr::Exp(e) | FuncExpr::IntPower(e, _) => e.is_constant(),
            FuncExpr::Scale(_, e) => e.is_constant(),
        }
    }

    /// Value at `z`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let v = match self {
            FuncExpr::Constant(c) => *c,
            FuncExpr::Variable => z,
            FuncExpr::Add(l, r) => l.eval(z)? + r.eval(z)?,
            FuncExpr::Mul(l, r) => l.eval(z)? * r.eval(z)?,
            FuncExpr::Negate(e) => -e.eval(z)?,
            FuncExpr::Exp(e) => e.eval(z)?.exp(),
            FuncExpr::IntPower(e, k) => e.eval(z)?.powu(*k),
            FuncExpr::Scale(c, e) => c * e.eval(z)?,
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(FuncError::Overflow { node: self.to_string() })
        }
    }

    /// Value and first derivative at `z`.
    pub fn eval_d1(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let j = self.eval_jet(z, 1)?;
        Ok((j.coeffs[0], j.coeffs[1]))
    }

    /// Taylor jet of order `order` at `z`.
    pub fn eval_jet(&self, z: Complex64, order: usize) -> Result<Jet> {
        let j = match self {
            FuncExpr::Constant(c) => Jet::constant(z, *c, order),
            FuncExpr::Variable => Jet::variable(z, order),
            FuncExpr::Add(l, r) => l.eval_jet(z, order)?.add(&r.eval_jet(z, order)?),
            FuncExpr::Mul(l, r) => l.eval_jet(z, order)?.mul(&r.eval_jet(z, order)?),
            FuncExpr::Negate(e) => e.eval_jet(z, order)?.scale(Complex64::new(-1.0, 0.0)),
            FuncExpr::Exp(e) => e.eval_jet(z, order)?.exp(),
            FuncExpr::IntPower(e, k) => e.eval_jet(z, order)?.powu(*k),
            FuncExpr::Scale(c, e) => e.eval_jet(z, order)?.scale(*c),
        };
        if j.is_finite() {
            Ok(j)
        } else {
            Err(FuncError::Overflow { node: self.to_string() })
        }
    }

    /// Coefficients `a_0..a_n` (ascending) when the tree is a polynomial in `z`.
    ///
    /// Trailing zero coefficients are trimmed; the zero polynomial yields `[0]`.
    pub fn polynomial_coeffs(&self) -> Option<Vec<Complex64>> {
        let mut p = poly_of(self)?;
        trim(&mut p);
        Some(p)
    }

    /// Constant folding used by the parser: constant subtrees collapse to
    /// `Constant`, and `Mul` with a constant factor becomes `Scale`.
    pub fn normalize(&self) -> FuncExpr {
        use FuncExpr::*;
        match self {
            Constant(c) => Constant(*c),
            Variable => Variable,
            Add(l, r) => match (l.normalize(), r.normalize()) {
                (Constant(a), Constant(b)) => Constant(a + b),
                (a, b) => FuncExpr::add(a, b),
            },
            Mul(l, r) => match (l.normalize(), r.normalize()) {
                (Constant(a), Constant(b)) => Constant(a * b),
                (Constant(a), e) | (e, Constant(a)) => FuncExpr::scale(a, e),
                (a, b) => FuncExpr::mul(a, b),
            },
            Negate(e) => match e.normalize() {
                Constant(a) => Constant(-a),
                e => FuncExpr::neg(e),
            },
            Exp(e) => FuncExpr::exp(e.normalize()),
            IntPower(e, k) => match e.normalize() {
                Constant(a) => Constant(a.powu(*k)),
                e => FuncExpr::pow(e, *k),
            },
            Scale(c, e) => match e.normalize() {
                Constant(a) => Constant(c * a),
                e => FuncExpr::scale(*c, e),
            },
        }
    }
}

fn trim(p: &mut Vec<Complex64>) {
    while p.len() > 1 && p.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
        p.pop();
    }
}

fn poly_of(e: &FuncExpr) -> Option<Vec<Complex64>> {
    use FuncExpr::*;
    let zero = Complex64::new(0.0, 0.0);
    Some(match e {
        Constant(c) => vec![*c],
        Variable => vec![zero, Complex64::new(1.0, 0.0)],
        Add(l, r) => {
            let (a, b) = (poly_of(l)?, poly_of(r)?);
            let mut out = vec![zero; a.len().max(b.len())];
            for (i, c) in a.iter().enumerate() {
                out[i] += c;
            }
            for (i, c) in b.iter().enumerate() {
                out[i] += c;
            }
            out
        }
        Mul(l, r) => poly_mul(&poly_of(l)?, &poly_of(r)?),
        Negate(e) => poly_of(e)?.into_iter().map(|c| -c).collect(),
        Scale(s, e) => poly_of(e)?.into_iter().map(|c| s * c).collect(),
        IntPower(e, k) => {
            let base = poly_of(e)?;
            let mut acc = vec![Complex64::new(1.0, 0.0)];
            for _ in 0..*k {
                acc = poly_mul(&acc, &base);
            }
            acc
        }
        Exp(inner) => {
            if inner.is_constant() {
                vec![inner.eval(zero).ok()?.exp()]
            } else {
                return None;
            }
        }
    })
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Complex literal in the expression grammar, e.g. `(1.5+-2i)`.
pub(crate) fn fmt_complex(c: Complex64) -> String {
    format!("({:?}+{:?}i)", c.re, c.im)
}

impl fmt::Display for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncExpr::Constant(c) => write!(f, "{}", fmt_complex(*c)),
            FuncExpr::Variable => write!(f, "z"),
            FuncExpr::Add(l, r) => write!(f, "({l} + {r})"),
            FuncExpr::Mul(l, r) => write!(f, "({l} * {r})"),
            FuncExpr::Negate(e) => write!(f, "-({e})"),
            FuncExpr::Exp(e) => write!(f, "exp({e})"),
            FuncExpr::IntPower(e, k) => write!(f, "({e})^{k}"),
            FuncExpr::Scale(c, e) => write!(f, "({} * {e})", fmt_complex(*c)),
        }
    }
}

/// Serialized as its printed form, which parses back to the same tree.
impl serde::Serialize for FuncExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for FuncExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_expr(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn jet_of_exp_at_origin() {
        let j = FuncExpr::exp(FuncExpr::z()).eval_jet(c(0.0, 0.0), 2).unwrap();
        assert_eq!(j.coeffs, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)]);
    }

    #[test]
    fn jet_of_square_at_three() {
        let j = FuncExpr::pow(FuncExpr::z(), 2).eval_jet(c(3.0, 0.0), 2).unwrap();
        assert_eq!(j.coeffs, vec![c(9.0, 0.0), c(6.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn jet_of_minus_exp_minus_z() {
        let e = FuncExpr::neg(FuncExpr::exp(FuncExpr::neg(FuncExpr::z())));
        let j = e.eval_jet(c(0.0, 0.0), 1).unwrap();
        assert_eq!(j.coeffs, vec![c(-1.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn overflow_names_node() {
        let e = FuncExpr::exp(FuncExpr::z());
        match e.eval_jet(c(800.0, 0.0), 1) {
            Err(FuncError::Overflow { node }) => assert_eq!(node, "exp(z)"),
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(e.eval(c(800.0, 0.0)).is_err());
    }

    #[test]
    fn polynomial_coefficients() {
        let e = parse_expr("(z+1)*(z-1)").unwrap();
        assert_eq!(e.polynomial_coeffs().unwrap(), vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(parse_expr("exp(z)").unwrap().polynomial_coeffs().is_none());
        assert_eq!(parse_expr("z - z").unwrap().polynomial_coeffs().unwrap(), vec![c(0.0, 0.0)]);
    }

    #[test]
    fn truncation_matches_lower_order() {
        let e = parse_expr("exp(z^2) * (z + 2i) - 3*z^4").unwrap();
        let z = c(0.3, -0.7);
        let hi = e.eval_jet(z, 7).unwrap();
        for m in 0..7 {
            assert_eq!(hi.truncate(m), e.eval_jet(z, m).unwrap());
        }
    }
}
