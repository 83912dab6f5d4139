use num_complex::Complex64;

/// Truncated Taylor expansion `sum coeffs[k] (w - center)^k`.
///
/// `coeffs[k]` is `f^(k)(center) / k!`, not the raw derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub center: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn constant(center: Complex64, value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Jet { center, coeffs }
    }

    pub fn variable(center: Complex64, order: usize) -> Self {
        let mut j = Self::constant(center, center, order);
        if order >= 1 {
            j.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// `k`-th derivative, i.e. `k! * coeffs[k]`.
    pub fn derivative(&self, k: usize) -> Complex64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeffs[k] * fact
    }

    pub fn truncate(&self, order: usize) -> Jet {
        Jet {
            center: self.center,
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn add(&self, other: &Jet) -> Jet {
        Jet {
            center: self.center,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        Jet {
            center: self.center,
            coeffs: self.coeffs.iter().map(|a| c * a).collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.coeffs.len();
        let coeffs = (0..n)
            .map(|k| {
                (0..=k).fold(Complex64::new(0.0, 0.0), |acc, j| {
                    acc + self.coeffs[j] * other.coeffs[k - j]
                })
            })
            .collect();
        Jet { center: self.center, coeffs }
    }

    /// `exp` of a jet via `e' = e u'`: `k e_k = sum_{j=1..k} j u_j e_{k-j}`.
    pub fn exp(&self) -> Jet {
        let n = self.coeffs.len();
        let mut e = Vec::with_capacity(n);
        e.push(self.coeffs[0].exp());
        for k in 1..n {
            let s = (1..=k).fold(Complex64::new(0.0, 0.0), |acc, j| {
                acc + self.coeffs[j] * e[k - j] * j as f64
            });
            e.push(s / k as f64);
        }
        Jet { center: self.center, coeffs: e }
    }

    pub fn powu(&self, k: u32) -> Jet {
        let mut acc = Jet::constant(self.center, Complex64::new(1.0, 0.0), self.order());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }
}
