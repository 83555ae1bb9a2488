//! Finite-type Lie algebra data for the untwisted affinization.

use crate::error::{Error, Result};
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Exact rational, serialized as the string `"p/q"` (or `"p"` when integral).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub Ratio<i64>);

impl Rational {
    pub fn new(p: i64, q: i64) -> Self {
        Rational(Ratio::new(p, q))
    }
    pub fn int(p: i64) -> Self {
        Rational(Ratio::from_integer(p))
    }
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rational {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let r: Ratio<i64> = s.trim().parse().map_err(|e| format!("bad rational {s:?}: {e}"))?;
        Ok(Rational(r))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algebra {
    A1,
    A2,
}

impl FromStr for Algebra {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A1" => Ok(Algebra::A1),
            "A2" => Ok(Algebra::A2),
            other => Err(Error::UnsupportedAlgebra(other.to_string())),
        }
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algebra::A1 => write!(f, "A1"),
            Algebra::A2 => write!(f, "A2"),
        }
    }
}

/// Cartan data of `g` together with its affine extension. Indices `0..=l`
/// refer to the extended Dynkin diagram; `cartan` and `inverse_cartan` use
/// indices `1..=l` shifted down by one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartanData {
    pub algebra: Algebra,
    pub rank: usize,
    pub cartan: Vec<Vec<i64>>,
    pub extended_cartan: Vec<Vec<i64>>,
    pub kac_labels: Vec<i64>,
    pub dual_kac_labels: Vec<i64>,
    pub symmetrizers: Vec<i64>,
    pub inverse_cartan: Vec<Vec<Rational>>,
    pub theta_norm: Rational,
    pub coxeter: i64,
    pub dual_coxeter: i64,
    pub grading: Vec<i64>,
    pub s: i64,
}

/// Extended Cartan matrix of type `A_l^{(1)}`.
fn affine_a(l: usize) -> Vec<Vec<i64>> {
    let n = l + 1;
    let mut a = vec![vec![0; n]; n];
    if l == 1 {
        return vec![vec![2, -2], vec![-2, 2]];
    }
    for i in 0..n {
        a[i][i] = 2;
        a[i][(i + 1) % n] = -1;
        a[i][(i + n - 1) % n] = -1;
    }
    a
}

fn invert_exact(a: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Ratio<i64>>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<Ratio<i64>> = row.iter().map(|&x| Ratio::from_integer(x)).collect();
            r.extend((0..n).map(|j| if i == j { Ratio::one() } else { Ratio::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero()).expect("Cartan matrix is invertible");
        m.swap(col, piv);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n..].iter().map(|&x| Rational(x)).collect()).collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Standard data for a supported algebra, homogeneous grading.
pub fn build_cartan(algebra: Algebra) -> CartanData {
    let l = match algebra {
        Algebra::A1 => 1,
        Algebra::A2 => 2,
    };
    let extended = affine_a(l);
    let cartan: Vec<Vec<i64>> = (1..=l).map(|i| extended[i][1..].to_vec()).collect();
    let kac = vec![1; l + 1];
    let dual_kac = vec![1; l + 1];
    let d = vec![1; l + 1];
    let inverse = invert_exact(&cartan);
    // (θ|θ) with θ = Σ a_i α_i and (α_i|α_j) = d_i a_ij
    let mut theta = Ratio::zero();
    for i in 1..=l {
        for j in 1..=l {
            theta += Ratio::from_integer(kac[i] * kac[j] * d[i] * extended[i][j]);
        }
    }
    let grading = vec![1; l + 1];
    let s = kac.iter().zip(&grading).map(|(a, s)| a * s).sum();
    CartanData {
        algebra,
        rank: l,
        coxeter: kac.iter().sum(),
        dual_coxeter: dual_kac.iter().sum(),
        cartan,
        extended_cartan: extended,
        kac_labels: kac,
        dual_kac_labels: dual_kac,
        symmetrizers: d,
        inverse_cartan: inverse,
        theta_norm: Rational(theta),
        grading,
        s,
    }
}

impl CartanData {
    /// Replace the grading exponents `s_0..s_l`.
    pub fn with_grading(mut self, grading: &[i64]) -> Result<Self> {
        if grading.len() != self.rank + 1 {
            return Err(Error::GradingLength { expected: self.rank + 1, got: grading.len() });
        }
        self.grading = grading.to_vec();
        self.s = self.kac_labels.iter().zip(grading).map(|(a, s)| a * s).sum();
        Ok(self)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.grading.iter().all(|&g| g == 1)
    }

    /// Checks the structural invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.rank + 1;
        let a = &self.extended_cartan;
        for i in 0..n {
            for j in 0..n {
                if self.symmetrizers[i] * a[i][j] != self.symmetrizers[j] * a[j][i] {
                    return Err(format!("D·A not symmetric at ({i},{j})"));
                }
            }
        }
        if self.kac_labels[0] != 1 || self.dual_kac_labels[0] != 1 {
            return Err("a_0 and dual a_0 must be 1".into());
        }
        if self.coxeter != self.kac_labels.iter().sum::<i64>()
            || self.dual_coxeter != self.dual_kac_labels.iter().sum::<i64>()
        {
            return Err("Coxeter numbers inconsistent with labels".into());
        }
        if self.symmetrizers.iter().fold(0, |g, &d| gcd(g, d)) != 1 {
            return Err("symmetrizers not coprime".into());
        }
        let l = self.rank;
        for i in 0..l {
            for j in 0..l {
                let mut acc = Ratio::zero();
                for k in 0..l {
                    acc += Ratio::from_integer(self.cartan[i][k]) * self.inverse_cartan[k][j].0;
                }
                let want = if i == j { Ratio::one() } else { Ratio::zero() };
                if acc != want {
                    return Err(format!("A·B ≠ 1 at ({i},{j})"));
                }
            }
        }
        // null vector of the extended matrix: Σ_j a_ij a_j = 0
        for i in 0..n {
            let s: i64 = (0..n).map(|j| a[i][j] * self.kac_labels[j]).sum();
            if s != 0 {
                return Err(format!("Kac labels do not annihilate row {i}"));
            }
        }
        Ok(())
    }

    /// Coefficients `c_j` of `x = Σ_j c_j h_j` (j = 1..l), where
    /// `x = −Σ_{i,j} (2 d_i − (θ|θ) ȟ s_i / s) b_ij h_j`.
    pub fn x_coefficients(&self) -> Result<Vec<Rational>> {
        if self.s == 0 {
            return Err(Error::DegenerateGrading);
        }
        let l = self.rank;
        let th = self.theta_norm.0 * Ratio::from_integer(self.dual_coxeter);
        let s = Ratio::from_integer(self.s);
        let out = (0..l)
            .map(|j| {
                let mut acc = Ratio::zero();
                for i in 1..=l {
                    let w = Ratio::from_integer(2 * self.symmetrizers[i])
                        - th * Ratio::from_integer(self.grading[i]) / s;
                    acc -= w * self.inverse_cartan[i - 1][j].0;
                }
                Rational(acc)
            })
            .collect();
        Ok(out)
    }

    /// `λ = (θ|θ) ȟ / s`; the multiplicative crossing shift is `q^λ`.
    pub fn crossing_shift(&self) -> Result<Rational> {
        if self.s == 0 {
            return Err(Error::DegenerateGrading);
        }
        Ok(Rational(self.theta_norm.0 * Ratio::from_integer(self.dual_coxeter) / Ratio::from_integer(self.s)))
    }
}
