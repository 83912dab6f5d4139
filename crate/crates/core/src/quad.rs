//! Quadrature rules shared by the path integrals.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 8-point rule.
    pub fn eight() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(8))
    }

    /// `∫ f(z) dz` along the segment `a → b`.
    pub fn segment<E>(
        &self,
        a: Complex64,
        b: Complex64,
        mut f: impl FnMut(Complex64) -> Result<Complex64, E>,
    ) -> Result<Complex64, E> {
        let mid = (a + b) * 0.5;
        let half = (b - a) * 0.5;
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * *x)? * *w;
        }
        Ok(acc * half)
    }

    /// `∫_a^b f(x) dx` for a real integrand.
    pub fn interval<E>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x)? * w;
        }
        Ok(acc * half)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of [`adaptive_simpson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpsonResult {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error: f64,
    /// False when the recursion depth limit was hit somewhere.
    pub converged: bool,
}

/// Adaptive Simpson quadrature with the usual `|S2 - S1| <= 15 tol` acceptance.
pub fn adaptive_simpson<E>(
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
    f: &mut impl FnMut(f64) -> Result<f64, E>,
) -> Result<SimpsonResult, E> {
    if a == b {
        return Ok(SimpsonResult { value: 0.0, error: 0.0, converged: true });
    }
    let (fa, fb) = (f(a)?, f(b)?);
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut out = SimpsonResult { value: 0.0, error: 0.0, converged: true };
    simpson_rec(f, [a, m, b], [fa, fm, fb], whole, tol, max_depth, &mut out)?;
    Ok(out)
}

fn simpson_rec<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    [a, m, b]: [f64; 3],
    [fa, fm, fb]: [f64; 3],
    whole: f64,
    tol: f64,
    depth: u32,
    out: &mut SimpsonResult,
) -> Result<(), E> {
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 && delta.abs() > 15.0 * tol {
            out.converged = false;
        }
        out.value += left + right + delta / 15.0;
        out.error += delta.abs() / 15.0;
        return Ok(());
    }
    simpson_rec(f, [a, lm, m], [fa, flm, fm], left, 0.5 * tol, depth - 1, out)?;
    simpson_rec(f, [m, rm, b], [fm, frm, fb], right, 0.5 * tol, depth - 1, out)
}
