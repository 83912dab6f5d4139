//! Serde helpers: complex numbers as `{"re": .., "im": ..}` objects.

pub mod complex {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Parts {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Parts { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let p = Parts::deserialize(d)?;
        Ok(Complex64::new(p.re, p.im))
    }
}

/// `(t, z)` pairs as `{"t": .., "z": {"re": .., "im": ..}}` objects.
pub mod path {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Point {
        t: f64,
        #[serde(with = "super::complex")]
        z: Complex64,
    }

    pub fn serialize<S: Serializer>(v: &[(f64, Complex64)], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&(t, z)| Point { t, z }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, Complex64)>, D::Error> {
        Ok(Vec::<Point>::deserialize(d)?.into_iter().map(|p| (p.t, p.z)).collect())
    }
}

/// `(X, z)` level-curve samples as `{"X": .., "z": {..}}` objects.
pub mod level_path {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Point {
        #[serde(rename = "X")]
        x: f64,
        #[serde(with = "super::complex")]
        z: Complex64,
    }

    pub fn serialize<S: Serializer>(v: &[(f64, Complex64)], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&(x, z)| Point { x, z }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, Complex64)>, D::Error> {
        Ok(Vec::<Point>::deserialize(d)?.into_iter().map(|p| (p.x, p.z)).collect())
    }
}
