//! Evaluation representations of the quantum loop algebra with spectral
//! parameter, antipode duals, group-like twists and `X_V`.

use crate::cartan::CartanData;
use crate::error::{Error, Result};
use crate::linalg::{c, diag, eye, unit, CMat, C64, ZERO};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    V,
    VStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepId {
    Fund,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualVariant {
    /// `φ*(a) = φ(S(a))^t`
    S,
    /// `φ*(a) = φ(S^{-1}(a))^t`
    SInv,
}

/// A generator of the quantum loop algebra. `QPow(ν)` stands for
/// `q^{Σ_i ν_i h_i}` with `i = 0..=l`.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    E(usize),
    F(usize),
    QPow(Vec<C64>),
}

#[derive(Debug, Clone)]
pub struct Representation {
    pub cartan: CartanData,
    pub dim: usize,
    pub gen_e: Vec<CMat>,
    pub gen_f: Vec<CMat>,
    /// Diagonal weights of `h_0..h_l`; `h_0 = K − θ̌` with `K ↦ 0`.
    pub weights: Vec<Vec<f64>>,
    pub q: C64,
    pub tag: Tag,
}

/// `q^w` on the principal branch of `log q`.
pub fn qpow(q: C64, w: C64) -> C64 {
    (w * q.ln()).exp()
}

fn check_q(q: C64) -> Result<()> {
    if !q.is_finite() || q.norm() == 0.0 {
        return Err(Error::BadDeformation(format!("{q}")));
    }
    if (q.norm() - 1.0).abs() < 1e-12 {
        // On the unit circle: reject rational angles that give q^{2k} = 1 for small k.
        let turns = q.arg() / std::f64::consts::TAU;
        for k in 1..=64 {
            let x = turns * k as f64 * 2.0;
            if (x - x.round()).abs() < 1e-12 {
                return Err(Error::BadDeformation(format!("{q} is a root of unity")));
            }
        }
    }
    Ok(())
}

/// First fundamental evaluation module; basis vector 0 is the highest weight.
pub fn evaluation_rep(cartan: &CartanData, rep_id: RepId, q: C64) -> Result<Representation> {
    check_q(q)?;
    let RepId::Fund = rep_id;
    let l = cartan.rank;
    let d = l + 1;
    // Simple root i (1..=l) lowers basis i-1 to i; e_i raises i to i-1.
    // The affine node raises the lowest vector to the highest: e_0 = E_{l,0}.
    let mut gen_e = vec![unit(d, l, 0)];
    let mut gen_f = vec![unit(d, 0, l)];
    for i in 1..=l {
        gen_e.push(unit(d, i - 1, i));
        gen_f.push(unit(d, i, i - 1));
    }
    let mut weights = vec![vec![0.0; d]];
    for i in 1..=l {
        let mut w = vec![0.0; d];
        w[i - 1] = 1.0;
        w[i] = -1.0;
        weights.push(w);
    }
    // h_0 = −θ̌ = −Σ_{i≥1} ǎ_i h_i
    for k in 0..d {
        weights[0][k] = -(1..=l).map(|i| cartan.dual_kac_labels[i] as f64 * weights[i][k]).sum::<f64>();
    }
    Ok(Representation { cartan: cartan.clone(), dim: d, gen_e, gen_f, weights, q, tag: Tag::V })
}

/// One-dimensional trivial module.
pub fn trivial_rep(cartan: &CartanData, q: C64) -> Result<Representation> {
    check_q(q)?;
    let n = cartan.rank + 1;
    Ok(Representation {
        cartan: cartan.clone(),
        dim: 1,
        gen_e: vec![CMat::zeros(1, 1); n],
        gen_f: vec![CMat::zeros(1, 1); n],
        weights: vec![vec![0.0]; n],
        q,
        tag: Tag::V,
    })
}

impl Representation {
    pub fn n_nodes(&self) -> usize {
        self.cartan.rank + 1
    }

    /// `q_i = q^{d_i}`
    pub fn q_i(&self, i: usize) -> C64 {
        qpow(self.q, c(self.cartan.symmetrizers[i] as f64))
    }

    /// `φ(q^{Σ_i ν_i h_i})`, `i = 0..=l`.
    pub fn q_power(&self, nu: &[C64]) -> CMat {
        let entries: Vec<C64> = (0..self.dim)
            .map(|k| {
                let w: C64 = nu.iter().zip(&self.weights).map(|(n, wt)| n * wt[k]).sum();
                qpow(self.q, w)
            })
            .collect();
        diag(&entries)
    }

    /// `q_i^{h_i}` and its inverse.
    pub fn k_i(&self, i: usize) -> (CMat, CMat) {
        let mut nu = vec![ZERO; self.n_nodes()];
        nu[i] = c(self.cartan.symmetrizers[i] as f64);
        let k = self.q_power(&nu);
        nu[i] = -nu[i];
        (k, self.q_power(&nu))
    }

    /// `φ_ζ(g) = φ(Γ_ζ(g))`.
    pub fn gen_image(&self, g: &Generator, zeta: C64) -> CMat {
        match g {
            Generator::E(i) => &self.gen_e[*i] * zeta.powi(self.cartan.grading[*i] as i32),
            Generator::F(i) => &self.gen_f[*i] * zeta.powi(-(self.cartan.grading[*i] as i32)),
            Generator::QPow(nu) => self.q_power(nu),
        }
    }

    /// Antipode dual. Both variants carry tag `VStar`.
    pub fn dual_rep(&self, variant: DualVariant) -> Representation {
        let n = self.n_nodes();
        let mut gen_e = Vec::with_capacity(n);
        let mut gen_f = Vec::with_capacity(n);
        for i in 0..n {
            let (k, ki) = self.k_i(i);
            let (e, f) = (&self.gen_e[i], &self.gen_f[i]);
            match variant {
                // S(e) = −q_i^{−h_i} e,  S(f) = −f q_i^{h_i}
                DualVariant::S => {
                    gen_e.push(-(&ki * e).transpose());
                    gen_f.push(-(f * &k).transpose());
                }
                // S^{-1}(e) = −e q_i^{−h_i},  S^{-1}(f) = −q_i^{h_i} f
                DualVariant::SInv => {
                    gen_e.push(-(e * &ki).transpose());
                    gen_f.push(-(&k * f).transpose());
                }
            }
        }
        let weights = self.weights.iter().map(|w| w.iter().map(|x| -x).collect()).collect();
        Representation {
            cartan: self.cartan.clone(),
            dim: self.dim,
            gen_e,
            gen_f,
            weights,
            q: self.q,
            tag: Tag::VStar,
        }
    }

    /// `A(ν) = φ(q^{Σ_{i=1}^{l} ν_i h_i})`.
    pub fn group_like_twist(&self, nu: &[C64]) -> CMat {
        assert_eq!(nu.len(), self.cartan.rank, "twist needs one entry per finite node");
        let mut full = vec![ZERO];
        full.extend_from_slice(nu);
        self.q_power(&full)
    }

    /// `X_V = φ(q^x)`.
    pub fn x_operator(&self) -> Result<CMat> {
        let coeffs: Vec<C64> = self.cartan.x_coefficients()?.iter().map(|r| c(r.to_f64())).collect();
        Ok(self.group_like_twist(&coeffs))
    }

    /// Weight of basis vector `k` under `h_1..h_l`.
    pub fn finite_weight(&self, k: usize) -> Vec<f64> {
        (1..self.n_nodes()).map(|i| self.weights[i][k]).collect()
    }

    pub fn check_defining_relations(&self) -> RelationReport {
        check_relations(self)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let m = |x: &CMat| -> Vec<Vec<[f64; 2]>> {
            (0..x.nrows()).map(|i| (0..x.ncols()).map(|j| [x[(i, j)].re, x[(i, j)].im]).collect()).collect()
        };
        serde_json::json!({
            "algebra": self.cartan.algebra,
            "dim": self.dim,
            "tag": self.tag,
            "q": [self.q.re, self.q.im],
            "grading": self.cartan.grading,
            "e": self.gen_e.iter().map(m).collect::<Vec<_>>(),
            "f": self.gen_f.iter().map(m).collect::<Vec<_>>(),
            "weights": self.weights,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    /// Relation family ("djra" … "djrd") -> worst relative residual.
    pub residuals: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl RelationReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }
}

/// Relative residual of `Σ terms` against zero, scaled by the term sizes.
fn rel_zero(terms: &[CMat]) -> f64 {
    let sum = terms.iter().skip(1).fold(terms[0].clone(), |acc, t| acc + t);
    let num = sum.norm();
    if num == 0.0 {
        return 0.0;
    }
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    num / scale
}

fn q_number(q: C64, n: i64) -> C64 {
    (q.powi(n as i32) - q.powi(-(n as i32))) / (q - q.inv())
}

fn q_binomial(q: C64, n: i64, k: i64) -> C64 {
    let fact = |m: i64| (1..=m).fold(c(1.0), |acc, j| acc * q_number(q, j));
    fact(n) / (fact(k) * fact(n - k))
}

fn check_relations(r: &Representation) -> RelationReport {
    const TOL: f64 = 1e-10;
    let n = r.n_nodes();
    let a = &r.cartan.extended_cartan;
    let id = eye(r.dim);
    let mut res = BTreeMap::new();

    // q^{νK} = 1, K = Σ ǎ_i h_i
    let mut worst: f64 = 0.0;
    for nu in [0.3, 1.0, 2.7] {
        let coeffs: Vec<C64> = r.cartan.dual_kac_labels.iter().map(|&k| c(nu * k as f64)).collect();
        worst = worst.max(crate::linalg::rel_diff(&r.q_power(&coeffs), &id));
    }
    res.insert("djra".to_string(), worst);

    // q^{h_j} e_i q^{−h_j} = q^{a_ji} e_i and the same with −a_ji for f_i
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut nu = vec![ZERO; n];
        nu[j] = c(1.0);
        let k = r.q_power(&nu);
        nu[j] = c(-1.0);
        let ki = r.q_power(&nu);
        for i in 0..n {
            let s = qpow(r.q, c(a[j][i] as f64));
            let le = &k * &r.gen_e[i] * &ki;
            let lf = &k * &r.gen_f[i] * &ki;
            worst = worst.max(rel_zero(&[le, -&r.gen_e[i] * s]));
            worst = worst.max(rel_zero(&[lf, -&r.gen_f[i] / s]));
        }
    }
    res.insert("djrb".to_string(), worst);

    // [e_i, f_j] = δ_ij (q_i^{h_i} − q_i^{−h_i}) / (q_i − q_i^{−1})
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let comm = &r.gen_e[i] * &r.gen_f[j] - &r.gen_f[j] * &r.gen_e[i];
            let rhs = if i == j {
                let (k, ki) = r.k_i(i);
                let qi = r.q_i(i);
                (k - ki) / (qi - qi.inv())
            } else {
                CMat::zeros(r.dim, r.dim)
            };
            worst = worst.max(rel_zero(&[comm, -rhs]));
        }
    }
    res.insert("djrc".to_string(), worst);

    // Σ_k (−1)^k [1−a_ij choose k]_{q_i} x_i^{1−a_ij−k} x_j x_i^k = 0, x ∈ {e, f}, i ≠ j
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let deg = 1 - a[i][j];
            let qi = r.q_i(i);
            for gens in [&r.gen_e, &r.gen_f] {
                let pow = |m: i64| (0..m).fold(eye(r.dim), |acc, _| acc * &gens[i]);
                let terms: Vec<CMat> = (0..=deg)
                    .map(|k| {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        pow(deg - k) * &gens[j] * pow(k) * (q_binomial(qi, deg, k) * sign)
                    })
                    .collect();
                worst = worst.max(rel_zero(&terms));
            }
        }
    }
    res.insert("djrd".to_string(), worst);

    let pass = res.values().all(|&v| v <= TOL);
    RelationReport { residuals: res, tolerance: TOL, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{build_cartan, Algebra};

    fn fund(a: Algebra) -> Representation {
        evaluation_rep(&build_cartan(a), RepId::Fund, c(1.3)).unwrap()
    }

    #[test]
    fn fundamental_reps_satisfy_relations() {
        for a in [Algebra::A1, Algebra::A2] {
            let r = fund(a);
            let rep = r.check_defining_relations();
            assert!(rep.pass, "{a}: {:?}", rep.residuals);
            assert!(rep.max_residual() < 1e-12);
        }
    }

    #[test]
    fn a1_commutator_matches_q_number() {
        let r = fund(Algebra::A1);
        let comm = &r.gen_e[1] * &r.gen_f[1] - &r.gen_f[1] * &r.gen_e[1];
        assert!(crate::linalg::rel_diff(&comm, &diag(&[c(1.0), c(-1.0)])) < 1e-15);
    }

    #[test]
    fn perturbation_breaks_djrc() {
        let mut r = fund(Algebra::A1);
        r.gen_e[1] *= c(1.0 + 1e-3);
        let rep = r.check_defining_relations();
        assert!(!rep.pass);
        let v = rep.residuals["djrc"];
        assert!(v > 2e-4 && v < 2e-3, "{v}");
    }

    #[test]
    fn trivial_rep_passes() {
        let t = trivial_rep(&build_cartan(Algebra::A2), c(1.3)).unwrap();
        assert!(t.check_defining_relations().pass);
        let d = t.dual_rep(DualVariant::S);
        assert!(d.gen_e.iter().all(|m| m[(0, 0)] == ZERO));
    }

    #[test]
    fn duals_satisfy_relations() {
        for a in [Algebra::A1, Algebra::A2] {
            let r = fund(a);
            for v in [DualVariant::S, DualVariant::SInv] {
                let rep = r.dual_rep(v).check_defining_relations();
                assert!(rep.pass, "{a} {v:?}: {:?}", rep.residuals);
            }
        }
    }

    #[test]
    fn dual_e_follows_antipode() {
        let r = fund(Algebra::A1);
        let (_, ki) = r.k_i(1);
        let want = -(ki * &r.gen_e[1]).transpose();
        assert_eq!(r.dual_rep(DualVariant::S).gen_e[1], want);
    }

    #[test]
    fn grading_of_images() {
        let r = fund(Algebra::A2);
        let z = C64::new(0.7, 0.2);
        assert_eq!(r.gen_image(&Generator::E(1), c(1.0)), r.gen_e[1]);
        assert_eq!(r.gen_image(&Generator::E(1), z), &r.gen_e[1] * z);
        assert_eq!(r.gen_image(&Generator::F(2), z), &r.gen_f[2] / z);
        let nu = vec![c(0.1), c(0.4), c(-0.3)];
        assert_eq!(r.gen_image(&Generator::QPow(nu.clone()), z), r.gen_image(&Generator::QPow(nu), c(1.0)));
    }

    #[test]
    fn twist_is_additive() {
        let r = fund(Algebra::A1);
        let a = r.group_like_twist(&[c(0.2)]);
        let q = 1.3f64;
        assert!(crate::linalg::rel_diff(&a, &diag(&[c(q.powf(0.2)), c(q.powf(-0.2))])) < 1e-15);
        let b = r.group_like_twist(&[C64::new(-0.7, 0.3)]);
        let ab = r.group_like_twist(&[C64::new(-0.5, 0.3)]);
        assert!(crate::linalg::rel_diff(&(a * b), &ab) < 1e-12);
        assert_eq!(r.group_like_twist(&[ZERO]), eye(2));
    }

    #[test]
    fn x_operator_homogeneous_is_identity() {
        for a in [Algebra::A1, Algebra::A2] {
            let r = fund(a);
            assert!(crate::linalg::rel_diff(&r.x_operator().unwrap(), &eye(r.dim)) < 1e-15);
        }
    }

    #[test]
    fn x_operator_graded() {
        let cart = build_cartan(Algebra::A2).with_grading(&[1, 0, 0]).unwrap();
        let r = evaluation_rep(&cart, RepId::Fund, c(1.3)).unwrap();
        // x = −2 h_1 − 2 h_2 has weights (−2, 0, 2)
        let want = diag(&[c(1.3f64.powi(-2)), c(1.0), c(1.3f64.powi(2))]);
        assert!(crate::linalg::rel_diff(&r.x_operator().unwrap(), &want) < 1e-14);
    }

    #[test]
    fn root_of_unity_rejected() {
        let cart = build_cartan(Algebra::A1);
        let q = C64::from_polar(1.0, std::f64::consts::PI / 3.0);
        assert!(matches!(evaluation_rep(&cart, RepId::Fund, q), Err(Error::BadDeformation(_))));
    }
}
