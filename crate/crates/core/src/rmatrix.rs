//! R-operators as intertwiners of tensor products of evaluation modules.
//!
//! `R_{V|W}(ζ|η)` acts on `V ⊗ W` (first factor carries `ζ`) and satisfies
//! `R Δ(a) = Δ'(a) R`. The normalized family fixes the hw⊗hw entry to 1, which
//! gives `R(ζ|ζ) = P` and `Ř(ζ|η) Ř(η|ζ) = 1` with rational entries.

use crate::error::{Error, Result};
use crate::linalg::{self, c, eye, inverse, kron, null_space, ptranspose, rel_diff, scalar_part, swap, CMat, C64};
use crate::rep::{qpow, DualVariant, Representation, Tag};
use crate::tensor::Tensor;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct ROperator {
    pub tag1: Tag,
    pub tag2: Tag,
    pub zeta: C64,
    pub eta: C64,
    pub dims: (usize, usize),
    pub matrix: CMat,
    pub normalized: bool,
}

impl ROperator {
    /// `Ř = P R : V ⊗ W → W ⊗ V`.
    pub fn check(&self) -> CMat {
        swap(self.dims.0, self.dims.1) * &self.matrix
    }

    pub fn to_tensor(&self, l1: &str, l2: &str) -> Result<Tensor> {
        Tensor::operator(&[(l1, self.dims.0), (l2, self.dims.1)], &self.matrix)
    }
}

/// Coproduct images `(Δ(a), Δ'(a))` for every generator `e_i, f_i, q_i^{h_i}`.
fn coproduct_pairs(r1: &Representation, r2: &Representation, zeta: C64, eta: C64) -> Vec<(CMat, CMat)> {
    use crate::rep::Generator::{E, F};
    let (i1, i2) = (eye(r1.dim), eye(r2.dim));
    let mut out = Vec::new();
    for i in 0..r1.n_nodes() {
        let (k1, k1i) = r1.k_i(i);
        let (k2, k2i) = r2.k_i(i);
        let (e1, e2) = (r1.gen_image(&E(i), zeta), r2.gen_image(&E(i), eta));
        let (f1, f2) = (r1.gen_image(&F(i), zeta), r2.gen_image(&F(i), eta));
        // Δ(e) = e ⊗ 1 + q^{h} ⊗ e,  Δ(f) = f ⊗ q^{-h} + 1 ⊗ f
        out.push((kron(&e1, &i2) + kron(&k1, &e2), kron(&i1, &e2) + kron(&e1, &k2)));
        out.push((kron(&f1, &k2i) + kron(&i1, &f2), kron(&k1i, &f2) + kron(&f1, &i2)));
        let kk = kron(&k1, &k2);
        out.push((kk.clone(), kk));
    }
    out
}

/// Solves `R Δ(a) = Δ'(a) R` for all generators; the one-dimensional solution
/// is scaled so that its largest entry is 1.
pub fn solve_intertwiner(r1: &Representation, r2: &Representation, zeta: C64, eta: C64) -> Result<ROperator> {
    let n = r1.dim * r2.dim;
    let pairs = coproduct_pairs(r1, r2, zeta, eta);
    let mut system = CMat::zeros(pairs.len() * n * n, n * n);
    let idn = eye(n);
    for (k, (a, b)) in pairs.iter().enumerate() {
        // row-major vec: vec(R A) = (1 ⊗ Aᵗ) vec R,  vec(B R) = (B ⊗ 1) vec R
        let block = kron(&idn, &a.transpose()) - kron(b, &idn);
        system.view_mut((k * n * n, 0), (n * n, n * n)).copy_from(&block);
    }
    let (basis, _) = null_space(&system, 1e-9);
    match basis.len() {
        0 => return Err(Error::NoIntertwiner),
        1 => {}
        k => return Err(Error::NonSimpleTensorProduct(k)),
    }
    let v = &basis[0];
    let big = v.iter().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).copied().unwrap();
    let matrix = CMat::from_row_slice(n, n, (v / big).as_slice());
    Ok(ROperator { tag1: r1.tag, tag2: r2.tag, zeta, eta, dims: (r1.dim, r2.dim), matrix, normalized: false })
}

fn normalize(raw: &ROperator) -> Result<ROperator> {
    let h = raw.matrix[(0, 0)];
    if h.norm() < 1e-13 * raw.matrix.norm() {
        return Err(Error::SingularR);
    }
    Ok(ROperator { matrix: &raw.matrix / h, normalized: true, ..raw.clone() })
}

/// Normalizes `R(ζ|η)` and `R(η|ζ)` so that `Ř(ζ|η) Ř(η|ζ) = 1` and `R(ζ|ζ) = P`.
///
/// The hw⊗hw vector spans a one-dimensional weight space on which every
/// intertwiner acts by a scalar; fixing that scalar to 1 on both operators
/// makes the unitarity scalar exactly 1 and selects `c_V = +1`.
pub fn normalize_pair(raw: &ROperator, raw_swapped: &ROperator) -> Result<(ROperator, ROperator)> {
    let a = normalize(raw)?;
    let b = normalize(raw_swapped)?;
    let (dev, s) = scalar_part(&(a.check() * b.check()));
    if dev > 1e-8 {
        return Err(Error::BrokenUnitarity(dev));
    }
    if (s - c(1.0)).norm() > 1e-8 {
        return Err(Error::BrokenUnitarity((s - c(1.0)).norm()));
    }
    Ok((a, b))
}

/// All four R-operators built on one module `V` and its dual.
#[derive(Debug, Clone)]
pub struct RFamily {
    pub v: Representation,
    pub vstar: Representation,
    pub x: CMat,
    pub lambda: f64,
    /// `q^λ`
    pub shift: C64,
}

/// Entrywise ratio `lhs / rhs` fitted to one scalar; returns `(scalar, max relative deviation)`.
pub fn scalar_ratio(lhs: &CMat, rhs: &CMat) -> (C64, f64) {
    let top = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sel: Vec<(C64, C64)> = lhs.iter().zip(rhs.iter()).filter(|(_, r)| r.norm() > 1e-10 * top).map(|(l, r)| (*l, *r)).collect();
    let mean = sel.iter().map(|(l, r)| l / r).sum::<C64>() / c(sel.len() as f64);
    let mut dev: f64 = sel.iter().map(|(l, r)| (l / r - mean).norm() / mean.norm()).fold(0.0, f64::max);
    // entries the proportionality forces to vanish
    let ltop = lhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (l, r) in lhs.iter().zip(rhs.iter()) {
        if r.norm() <= 1e-10 * top {
            dev = dev.max(l.norm() / ltop);
        }
    }
    (mean, dev)
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingCheck {
    pub d: C64,
    /// `D` as recovered from the second relation (inverse of its fitted scalar).
    pub d_second: C64,
    pub dev_first: f64,
    pub dev_second: f64,
    /// `|D_first / D_second − 1|`
    pub d_mismatch: f64,
}

impl CrossingCheck {
    pub fn residual(&self) -> f64 {
        self.dev_first.max(self.dev_second).max(self.d_mismatch)
    }
}

impl RFamily {
    pub fn new(v: Representation) -> Result<RFamily> {
        if v.tag != Tag::V {
            return Err(Error::TagError("family must be built on a V-tagged module".into()));
        }
        let vstar = v.dual_rep(DualVariant::S);
        let x = v.x_operator()?;
        let lambda = v.cartan.crossing_shift()?.to_f64();
        let shift = qpow(v.q, c(lambda));
        Ok(RFamily { v, vstar, x, lambda, shift })
    }

    pub fn dim(&self) -> usize {
        self.v.dim
    }

    pub fn raw(&self, zeta: C64, eta: C64) -> Result<ROperator> {
        match solve_intertwiner(&self.v, &self.v, zeta, eta) {
            Err(Error::NonSimpleTensorProduct(k)) => {
                let z = zeta * c(1.0 + 1e-6);
                log::warn!("special locus at ζ/η = {} (null space {k}); perturbing ζ by 1e-6", zeta / eta);
                solve_intertwiner(&self.v, &self.v, z, eta)
            }
            other => other,
        }
    }

    /// Normalized `R_{V|V}(ζ|η)`.
    pub fn r_vv(&self, zeta: C64, eta: C64) -> Result<CMat> {
        Ok(normalize(&self.raw(zeta, eta)?)?.matrix)
    }

    pub fn r_vv_op(&self, zeta: C64, eta: C64) -> Result<ROperator> {
        normalize(&self.raw(zeta, eta)?)
    }

    /// `Ř_{V|V}(ζ|η) = P R_{V|V}(ζ|η)`.
    pub fn rcheck_vv(&self, zeta: C64, eta: C64) -> Result<CMat> {
        let d = self.dim();
        Ok(swap(d, d) * self.r_vv(zeta, eta)?)
    }

    /// `R_{V*|V}(ζ|η) = (R_{V|V}(ζ|η)^{-1})^{t_1}`
    pub fn r_sv(&self, zeta: C64, eta: C64) -> Result<CMat> {
        let d = self.dim();
        let inv = inverse(&self.r_vv(zeta, eta)?).map_err(|_| Error::SingularR)?;
        Ok(ptranspose(&inv, &[d, d], &[0]))
    }

    /// `R_{V|V*}(ζ|η) = (R_{V|V}(ζ|η)^{t_2})^{-1}`
    pub fn r_vs(&self, zeta: C64, eta: C64) -> Result<CMat> {
        let d = self.dim();
        inverse(&ptranspose(&self.r_vv(zeta, eta)?, &[d, d], &[1])).map_err(|_| Error::SingularR)
    }

    /// `R_{V*|V*}(ζ|η) = R_{V|V}(ζ|η)^t`
    pub fn r_ss(&self, zeta: C64, eta: C64) -> Result<CMat> {
        Ok(self.r_vv(zeta, eta)?.transpose())
    }

    /// R-operator for arbitrary tags of the two factors.
    pub fn r(&self, t1: Tag, t2: Tag, zeta: C64, eta: C64) -> Result<CMat> {
        match (t1, t2) {
            (Tag::V, Tag::V) => self.r_vv(zeta, eta),
            (Tag::VStar, Tag::V) => self.r_sv(zeta, eta),
            (Tag::V, Tag::VStar) => self.r_vs(zeta, eta),
            (Tag::VStar, Tag::VStar) => self.r_ss(zeta, eta),
        }
    }

    pub fn dual_r_operators(&self, zeta: C64, eta: C64) -> Result<DualOperators> {
        Ok(DualOperators { sv: self.r_sv(zeta, eta)?, vs: self.r_vs(zeta, eta)?, ss: self.r_ss(zeta, eta)? })
    }

    /// Whether `R_{V|V*}(ζ|η)` has a pole, i.e. `R_{V|V}(ζ|η)^{t_2}` is singular.
    pub fn r_vs_is_singular(&self, zeta: C64, eta: C64) -> Result<bool> {
        let d = self.dim();
        let s = linalg::singular_values(&ptranspose(&self.r_vv(zeta, eta)?, &[d, d], &[1]));
        Ok(s[s.len() - 1] / s[0] < 1e-9)
    }

    /// `Res_{η = η0} R_{V|V*}(ζ|η)` at a simple pole: with `M(η) = R(ζ|η)^{t_2}`,
    /// `M(η0) v = 0`, `u^H M(η0) = 0`, the residue is `v u^H / (u^H M'(η0) v)`.
    pub fn residue_vs(&self, zeta: C64, eta0: C64) -> Result<CMat> {
        let d = self.dim();
        let m = |eta: C64| -> Result<CMat> { Ok(ptranspose(&self.r_vv(zeta, eta)?, &[d, d], &[1])) };
        let m0 = m(eta0)?;
        let (right, _) = null_space(&m0, 1e-9);
        let (left, _) = null_space(&m0.adjoint(), 1e-9);
        if right.len() != 1 || left.len() != 1 {
            return Err(Error::Singular);
        }
        let dm = first_derivative(&m, eta0)?;
        let (v, u) = (&right[0], &left[0]);
        let den = (u.adjoint() * &dm * v)[(0, 0)];
        Ok(v * u.adjoint() / den)
    }

    /// Checks both normalized crossing relations at `(ζ|η)` and extracts `D(ζ|η)`.
    pub fn check_crossing_c(&self, zeta: C64, eta: C64) -> Result<CrossingCheck> {
        let d = self.dim();
        let dims = [d, d];
        let xk = kron(&self.x, &eye(d));
        let xki = inverse(&xk)?;
        let shifted = zeta / self.shift;
        let lhs1 = &xk * self.r_vv(shifted, eta)? * &xki;
        let rhs1 = ptranspose(&inverse(&self.r_sv(zeta, eta)?)?, &dims, &[0]);
        let (d1, dev1) = scalar_ratio(&lhs1, &rhs1);
        let lhs2 = &xk * self.r_vs(shifted, eta)? * &xki;
        let rhs2 = ptranspose(&inverse(&self.r_ss(zeta, eta)?)?, &dims, &[0]);
        let (dinv, dev2) = scalar_ratio(&lhs2, &rhs2);
        let d2 = dinv.inv();
        let check = CrossingCheck { d: d1, d_second: d2, dev_first: dev1, dev_second: dev2, d_mismatch: (d1 / d2 - c(1.0)).norm() };
        if check.residual() > 1e-6 {
            return Err(Error::CrossingFailure(check.residual()));
        }
        Ok(check)
    }

    /// `D(ζ|η)` from the first crossing relation alone.
    pub fn d_scalar(&self, zeta: C64, eta: C64) -> Result<C64> {
        let d = self.dim();
        let xk = kron(&self.x, &eye(d));
        let lhs = &xk * self.r_vv(zeta / self.shift, eta)? * inverse(&xk)?;
        let rhs = ptranspose(&inverse(&self.r_sv(zeta, eta)?)?, &[d, d], &[0]);
        let (s, dev) = scalar_ratio(&lhs, &rhs);
        if dev > 1e-6 {
            return Err(Error::CrossingFailure(dev));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct DualOperators {
    pub sv: CMat,
    pub vs: CMat,
    pub ss: CMat,
}

/// Relative residual of `R12 R13 R23 = R23 R13 R12` on `V1 ⊗ V2 ⊗ V3`.
pub fn check_ybe(r12: &ROperator, r13: &ROperator, r23: &ROperator) -> Result<f64> {
    let (d1, d2) = r12.dims;
    if r13.dims.0 != d1 || r23.dims.0 != d2 || r13.dims.1 != r23.dims.1 {
        return Err(Error::LegMismatch("R-operators do not share spaces".into()));
    }
    let dims = [d1, d2, r13.dims.1];
    let a = linalg::embed(&r12.matrix, &[0, 1], &dims);
    let b = linalg::embed(&r13.matrix, &[0, 2], &dims);
    let cc = linalg::embed(&r23.matrix, &[1, 2], &dims);
    Ok(rel_diff(&(&a * &b * &cc), &(&cc * &b * &a)))
}

/// Central-difference derivative at `x0` with steps `1e-4·|x0|` and `1e-5·|x0|`,
/// combined by Richardson extrapolation.
pub fn first_derivative<F>(f: &F, x0: C64) -> Result<CMat>
where
    F: Fn(C64) -> Result<CMat>,
{
    let scale = x0.norm().max(1e-300);
    let cd = |h: f64| -> Result<CMat> {
        let h = c(h * scale);
        Ok((f(x0 + h)? - f(x0 - h)?) / (h * c(2.0)))
    };
    let d1 = cd(1e-4)?;
    let d2 = cd(1e-5)?;
    let dis = rel_diff(&d1, &d2);
    if dis > 1e-6 {
        return Err(Error::DerivativeUnstable(dis));
    }
    Ok((d2 * c(100.0) - d1) / c(99.0))
}

/// Central second difference with steps `h, h/2, h/4` (`h = 2e-3·|x0|`) and two
/// Richardson levels. Smaller steps lose too many digits to cancellation.
pub fn second_derivative<F>(f: &F, x0: C64) -> Result<CMat>
where
    F: Fn(C64) -> Result<CMat>,
{
    let scale = x0.norm().max(1e-300);
    let f0 = f(x0)?;
    let cd = |h: f64| -> Result<CMat> {
        let h = c(h * scale);
        Ok((f(x0 + h)? + f(x0 - h)? - &f0 * c(2.0)) / (h * h))
    };
    let (a, b, d) = (cd(2e-3)?, cd(1e-3)?, cd(5e-4)?);
    let r1 = (&b * c(4.0) - a) / c(3.0);
    let r2 = (&d * c(4.0) - b) / c(3.0);
    let dis = rel_diff(&r1, &r2);
    if dis > 1e-6 {
        return Err(Error::DerivativeUnstable(dis));
    }
    Ok((r2 * c(16.0) - r1) / c(15.0))
}
