//! Dormand–Prince 5(4) stepper for autonomous complex ODEs `ż = F(z)`.
//!
//! The state is the real 2-vector `(Re z, Im z)`; complex arithmetic is only a
//! convenient encoding of it, and error control uses the Euclidean norm.

use num_complex::Complex64;

use crate::funcs::FuncError;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One accepted step with the data for cubic Hermite interpolation.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub t0: f64,
    pub z0: Complex64,
    pub f0: Complex64,
    pub t1: f64,
    pub z1: Complex64,
    pub f1: Complex64,
    /// Magnitude of the embedded error estimate.
    pub error: f64,
}

impl Segment {
    /// Cubic Hermite interpolant at `t ∈ [t0, t1]`.
    pub fn at(&self, t: f64) -> Complex64 {
        let h = self.t1 - self.t0;
        if h == 0.0 {
            return self.z1;
        }
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.z0 * h00 + self.f0 * (h10 * h) + self.z1 * h01 + self.f1 * (h11 * h)
    }

    /// First `t` in the segment where `g` turns non-negative, given
    /// `g(z0) < 0 <= g(z1)`. Bisection on the interpolant.
    pub fn locate(&self, g: impl Fn(Complex64) -> f64) -> f64 {
        let (mut lo, mut hi) = (self.t0, self.t1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(self.at(mid)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub h_max: f64,
}

#[derive(Debug)]
pub enum Advance {
    Accepted(Segment),
    /// The step size fell below the resolvable limit without meeting tolerance.
    Underflow,
}

/// Adaptive solver state. `rhs` must be autonomous.
pub struct Solver<F> {
    rhs: F,
    tol: Tolerances,
    pub t: f64,
    pub z: Complex64,
    pub fz: Complex64,
    h: f64,
}

impl<F> Solver<F>
where
    F: Fn(Complex64) -> Result<Complex64, FuncError>,
{
    pub fn new(rhs: F, t0: f64, z0: Complex64, tol: Tolerances) -> Result<Self, FuncError> {
        let fz = rhs(z0)?;
        let mut s = Solver { rhs, tol, t: t0, z: z0, fz, h: 0.0 };
        s.h = s.initial_step();
        Ok(s)
    }

    fn scale(&self, z: Complex64) -> f64 {
        self.tol.abs + self.tol.rel * z.norm()
    }

    /// Starting step from the usual two-derivative heuristic.
    fn initial_step(&self) -> f64 {
        let sc = self.scale(self.z);
        let d0 = self.z.norm() / sc;
        let d1 = self.fz.norm() / sc;
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.tol.h_max);
        let d2 = match (self.rhs)(self.z + self.fz * h0) {
            Ok(f1) => (f1 - self.fz).norm() / sc / h0,
            Err(_) => return h0 * 1e-3,
        };
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        h1.min(100.0 * h0).min(self.tol.h_max)
    }

    fn too_small(&self, h: f64) -> bool {
        !(h >= 1e3 * f64::EPSILON * self.t.abs()) || self.t + h == self.t
    }

    /// Attempts steps until one is accepted, never stepping past `t_limit`.
    pub fn advance(&mut self, t_limit: f64) -> Result<Advance, FuncError> {
        loop {
            let remaining = t_limit - self.t;
            let mut h = self.h.min(self.tol.h_max);
            let clamped = h >= remaining;
            if clamped {
                h = remaining;
            }
            if self.too_small(h) && !clamped {
                return Ok(Advance::Underflow);
            }
            match self.trial(h) {
                Some((z1, f1, err_vec)) => {
                    let err = err_vec.norm();
                    let ratio = err / (self.tol.abs + self.tol.rel * self.z.norm().max(z1.norm()));
                    if ratio <= 1.0 {
                        let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                        let seg = Segment { t0: self.t, z0: self.z, f0: self.fz, t1: self.t + h, z1, f1, error: err };
                        self.t = if clamped { t_limit } else { self.t + h };
                        self.z = z1;
                        self.fz = f1;
                        if !clamped || fac < 1.0 {
                            self.h = h * fac;
                        }
                        return Ok(Advance::Accepted(Segment { t1: self.t, ..seg }));
                    }
                    self.h = h * (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
                }
                None => self.h = h * 0.25,
            }
            if self.too_small(self.h) {
                return Ok(Advance::Underflow);
            }
        }
    }

    /// One Dormand–Prince trial step; `None` if any stage is not finite.
    fn trial(&self, h: f64) -> Option<(Complex64, Complex64, Complex64)> {
        let mut k = [Complex64::new(0.0, 0.0); 7];
        k[0] = self.fz;
        let mut z1 = self.z;
        for s in 1..7 {
            let mut acc = self.z;
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    acc += kj * (h * A[s][j]);
                }
            }
            k[s] = (self.rhs)(acc).ok().filter(|f| finite(*f))?;
            // the last stage sits at the fifth-order solution
            z1 = acc;
        }
        let err = k.iter().zip(E).fold(Complex64::new(0.0, 0.0), |e, (kj, ej)| e + kj * (h * ej));
        (finite(z1) && finite(err)).then_some((z1, k[6], err))
    }
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
