use num_complex::Complex64;

use super::{poly_of, FuncError, FuncExpr, Result};

/// One summand of an integrable expression.
enum Term {
    /// Polynomial, ascending coefficients.
    Poly(Vec<Complex64>),
    /// `coef * exp(arg)` with `arg = slope * z + b`, slope nonzero.
    Exp { coef: Complex64, arg: FuncExpr, slope: Complex64 },
}

impl Term {
    fn scaled(self, s: Complex64) -> Term {
        match self {
            Term::Poly(p) => Term::Poly(p.into_iter().map(|c| s * c).collect()),
            Term::Exp { coef, arg, slope } => Term::Exp { coef: s * coef, arg, slope },
        }
    }
}

fn unsupported(node: &FuncExpr) -> FuncError {
    FuncError::UnsupportedClass { node: node.to_string() }
}

fn terms(e: &FuncExpr) -> Result<Vec<Term>> {
    if let Some(p) = poly_of(e) {
        return Ok(vec![Term::Poly(p)]);
    }
    let one = Complex64::new(1.0, 0.0);
    match e {
        FuncExpr::Add(l, r) => {
            let mut t = terms(l)?;
            t.extend(terms(r)?);
            Ok(t)
        }
        FuncExpr::Negate(inner) => Ok(terms(inner)?.into_iter().map(|t| t.scaled(-one)).collect()),
        FuncExpr::Scale(s, inner) => Ok(terms(inner)?.into_iter().map(|t| t.scaled(*s)).collect()),
        FuncExpr::Mul(l, r) => {
            let (k, other) = if l.is_constant() {
                (l.eval(Complex64::new(0.0, 0.0))?, r)
            } else if r.is_constant() {
                (r.eval(Complex64::new(0.0, 0.0))?, l)
            } else {
                return Err(unsupported(e));
            };
            Ok(terms(other)?.into_iter().map(|t| t.scaled(k)).collect())
        }
        FuncExpr::IntPower(inner, 1) => terms(inner),
        FuncExpr::Exp(arg) => match poly_of(arg) {
            Some(p) if p.len() <= 2 => {
                let slope = p.get(1).copied().unwrap_or_default();
                if slope == Complex64::new(0.0, 0.0) {
                    Ok(vec![Term::Poly(vec![p[0].exp()])])
                } else {
                    Ok(vec![Term::Exp { coef: one, arg: (**arg).clone(), slope }])
                }
            }
            _ => Err(unsupported(e)),
        },
        _ => Err(unsupported(e)),
    }
}

fn with_coefficient(c: Complex64, e: FuncExpr) -> FuncExpr {
    if c == Complex64::new(1.0, 0.0) {
        e
    } else if c == Complex64::new(-1.0, 0.0) {
        FuncExpr::neg(e)
    } else {
        FuncExpr::scale(c, e)
    }
}

fn integrate_term(t: Term) -> Vec<FuncExpr> {
    match t {
        Term::Poly(p) => p
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .map(|(k, c)| {
                let mono = match k {
                    0 => FuncExpr::Variable,
                    _ => FuncExpr::pow(FuncExpr::Variable, k as u32 + 1),
                };
                with_coefficient(c / (k as f64 + 1.0), mono)
            })
            .collect(),
        Term::Exp { coef, arg, slope } => vec![with_coefficient(coef / slope, FuncExpr::exp(arg))],
    }
}

/// Antiderivative `G` with `G' = expr` and `G(0)`'s integration constant set to zero.
///
/// Admits linear combinations of polynomials and `exp(a z + b)` terms; any
/// other product or composition is rejected with the offending node.
pub fn antiderivative(expr: &FuncExpr) -> Result<FuncExpr> {
    let pieces: Vec<FuncExpr> = terms(expr)?.into_iter().flat_map(integrate_term).collect();
    Ok(pieces
        .into_iter()
        .reduce(FuncExpr::add)
        .unwrap_or(FuncExpr::Constant(Complex64::new(0.0, 0.0))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse_expr;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_integrates_to_cube_third() {
        let g = antiderivative(&FuncExpr::pow(FuncExpr::z(), 2)).unwrap();
        assert_eq!(g, FuncExpr::scale(c(1.0 / 3.0, 0.0), FuncExpr::pow(FuncExpr::z(), 3)));
    }

    #[test]
    fn exp_minus_z_plus_one() {
        let g_expr = FuncExpr::add(
            FuncExpr::exp(FuncExpr::neg(FuncExpr::z())),
            FuncExpr::constant(c(1.0, 0.0)),
        );
        let expected = FuncExpr::add(
            FuncExpr::neg(FuncExpr::exp(FuncExpr::neg(FuncExpr::z()))),
            FuncExpr::z(),
        );
        assert_eq!(antiderivative(&g_expr).unwrap(), expected);
    }

    #[test]
    fn exp_is_its_own_antiderivative() {
        let e = FuncExpr::exp(FuncExpr::z());
        assert_eq!(antiderivative(&e).unwrap(), e);
    }

    #[test]
    fn rejects_products_and_compositions() {
        for (text, node) in [
            ("z*exp(z)", "(z * exp(z))"),
            ("exp(z^2)", "exp((z)^2)"),
            ("1 + exp(exp(z))", "exp(exp(z))"),
            ("exp(z)^2", "(exp(z))^2"),
        ] {
            match antiderivative(&parse_expr(text).unwrap()) {
                Err(FuncError::UnsupportedClass { node: n }) => assert_eq!(n, node, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn zero_integrand_gives_zero() {
        assert_eq!(
            antiderivative(&parse_expr("z - z").unwrap()).unwrap(),
            FuncExpr::Constant(c(0.0, 0.0))
        );
    }

    #[test]
    fn derivative_of_antiderivative_recovers_integrand() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for text in [
            "z^2",
            "exp(-z) + 1",
            "3*z^4 - (2+1i)*z + 5",
            "(z+1)*(z-2i)",
            "2*exp(3i*z - 1) - exp(z/2) + z^7",
            "exp(2)",
        ] {
            let g = parse_expr(text).unwrap();
            let big_g = antiderivative(&g).unwrap();
            for _ in 0..20 {
                let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let lhs = big_g.eval_jet(z, 1).unwrap().coeffs[1];
                let rhs = g.eval(z).unwrap();
                assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "{text} at {z}");
            }
        }
    }
}
