//! Horizontal and vertical monodromy/transfer operators, local charges, the
//! Trotter density operator and dominant-eigenvector reduced densities.
//!
//! Vertical space layout: `𝒱 = (V ⊗ V*)^{⊗N}` with `V` at site `2k` carrying
//! `ζ_k` and `V*` at site `2k+1` carrying `ξ_k`; the open vertical line is the
//! last space. Each column factor is an R-operator whose first factor is the
//! horizontal site and whose second factor is the vertical line.

use crate::error::{Error, Result};
use crate::linalg::{self, apply_left, c, check_budget, eig, embed, eye, inverse, ptrace, CMat, C64, ONE, ZERO};
use crate::rep::Tag;
use crate::rmatrix::{first_derivative, second_derivative, RFamily};
use serde::{Deserialize, Serialize};

fn one() -> C64 {
    ONE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Trotter half-number `N`.
    #[serde(rename = "N")]
    pub trotter_n: usize,
    pub zeta: Vec<C64>,
    pub xi: Vec<C64>,
    /// Open vertical lines `η_1..η_n` with their tags.
    pub eta: Vec<C64>,
    pub tags: Vec<Tag>,
    pub kappa: Vec<C64>,
    pub alpha: Vec<C64>,
    /// Wing width; `None` selects the dominant-eigenvector form.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub beta: f64,
    /// Parameter of the wing transfer operators whose eigenvectors are used.
    #[serde(default = "one")]
    pub eta_ref: C64,
}

impl LatticeConfig {
    pub fn validate(&self, rank: usize) -> Result<()> {
        let n = self.trotter_n;
        if n == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.zeta.len() != n || self.xi.len() != n {
            return Err(Error::Config(format!("need {n} values each for zeta and xi")));
        }
        if self.eta.is_empty() || self.eta.len() != self.tags.len() {
            return Err(Error::Config("eta and tags must be nonempty and of equal length".into()));
        }
        if self.kappa.len() != rank || self.alpha.len() != rank {
            return Err(Error::Config(format!("kappa and alpha need {rank} entries")));
        }
        let all = self.zeta.iter().chain(&self.xi).chain(&self.eta).chain(std::iter::once(&self.eta_ref));
        if all.into_iter().any(|z| z.norm() == 0.0 || !z.is_finite()) {
            return Err(Error::Config("spectral parameters must be finite and nonzero".into()));
        }
        Ok(())
    }

    pub fn n_open(&self) -> usize {
        self.eta.len()
    }

    pub fn kappa_alpha(&self) -> Vec<C64> {
        self.kappa.iter().zip(&self.alpha).map(|(a, b)| a + b).collect()
    }
}

// ---------------------------------------------------------------- horizontal

/// `T_{aux|sites}(ζ)` monodromy `R^{(0,L)}(ζ|η_L) … R^{(0,1)}(ζ|η_1)` on
/// `aux ⊗ site_1 ⊗ … ⊗ site_L` (auxiliary space first).
pub fn horizontal_monodromy(fam: &RFamily, aux: Tag, zeta: C64, sites: &[(Tag, C64)]) -> Result<CMat> {
    let d = fam.dim();
    let dims = vec![d; sites.len() + 1];
    check_budget(d.pow(dims.len() as u32))?;
    let mut m = eye(d.pow(dims.len() as u32));
    for (j, (tag, eta)) in sites.iter().enumerate() {
        m = apply_left(&fam.r(aux, *tag, zeta, *eta)?, &[0, j + 1], &dims, &m);
    }
    Ok(m)
}

pub fn horizontal_transfer(fam: &RFamily, aux: Tag, zeta: C64, sites: &[(Tag, C64)]) -> Result<CMat> {
    let dims = vec![fam.dim(); sites.len() + 1];
    Ok(ptrace(&horizontal_monodromy(fam, aux, zeta, sites)?, &dims, 0))
}

/// Homogeneous `T_L(ζ)` (aux `V`) or `T*_L(ζ)` (aux `V*`) over `L` sites at `η = 1`.
pub fn chain_transfer(fam: &RFamily, aux: Tag, zeta: C64, l: usize) -> Result<CMat> {
    horizontal_transfer(fam, aux, zeta, &vec![(Tag::V, ONE); l])
}

/// `H_L = Σ_i dŘ^{(i,i+1)}(ζ|1)/dζ` at `ζ = 1`, periodic.
pub fn hamiltonian(fam: &RFamily, l: usize) -> Result<CMat> {
    let d = fam.dim();
    let h2 = first_derivative(&|z| fam.rcheck_vv(z, ONE), ONE)?;
    let dims = vec![d; l];
    let mut h = CMat::zeros(d.pow(l as u32), d.pow(l as u32));
    for i in 0..l {
        h += embed(&h2, &[i, (i + 1) % l], &dims);
    }
    Ok(h)
}

/// Charges `I_m = (ζ d/dζ)^m log T(ζ)` at `ζ = 1` for `m = 1, 2`.
pub fn charges(fam: &RFamily, aux: Tag, l: usize) -> Result<(CMat, CMat)> {
    let t = |z: C64| chain_transfer(fam, aux, z, l);
    let t0 = t(ONE)?;
    let t0i = inverse(&t0)?;
    let d1 = first_derivative(&t, ONE)?;
    let d2 = second_derivative(&t, ONE)?;
    let i1 = &t0i * &d1;
    // (ζ∂)² T = ζT' + ζ²T''; at ζ = 1 this is T' + T''
    let i2 = &t0i * (&d1 + &d2) - &i1 * &i1;
    Ok((i1, i2))
}

/// `(T*_L(e^{β/2N}) T_L(e^{−β/2N}))^N / Z`.
///
/// The spectral parameter is `e^{β/2N}`, the multiplicative image of the
/// additive shift `β/(2ħN)` with `q = e^ħ`; this makes the limit `e^{−βH_L}/Z`.
pub fn trotter_density(fam: &RFamily, l: usize, n: usize, beta: f64) -> Result<CMat> {
    let d = fam.dim();
    check_budget(d.pow(l as u32 + 1))?;
    let x = beta / (2.0 * n as f64);
    let step = chain_transfer(fam, Tag::VStar, c(x.exp()), l)? * chain_transfer(fam, Tag::V, c((-x).exp()), l)?;
    let mut acc = eye(step.nrows());
    for _ in 0..n {
        acc = &acc * &step;
    }
    let z = acc.trace();
    Ok(acc / z)
}

/// `e^{−βH}/Z` from the local Hamiltonian.
pub fn gibbs_density(fam: &RFamily, l: usize, beta: f64) -> Result<CMat> {
    let h = hamiltonian(fam, l)?;
    let e = linalg::expm(&(h * c(-beta)));
    let z = e.trace();
    Ok(e / z)
}

/// `(N, ‖D_{L,N} − e^{−βH}/Z‖_F)` for each `N`.
pub fn trotter_series(fam: &RFamily, l: usize, beta: f64, ns: &[usize]) -> Result<Vec<(usize, f64)>> {
    let exact = gibbs_density(fam, l, beta)?;
    ns.iter().map(|&n| Ok((n, (trotter_density(fam, l, n, beta)? - &exact).norm()))).collect()
}

// ---------------------------------------------------------------- vertical

/// Column operator on `𝒱 ⊗ V_vertical`; `residue` marks a starred column
/// evaluated at a pole, where the singular factor is replaced by its residue.
#[derive(Debug, Clone)]
pub struct Column {
    pub m: CMat,
    pub residue: bool,
}

#[derive(Debug, Clone)]
pub struct Vertical<'a> {
    pub fam: &'a RFamily,
    pub zeta: Vec<C64>,
    pub xi: Vec<C64>,
}

impl<'a> Vertical<'a> {
    pub fn new(fam: &'a RFamily, zeta: &[C64], xi: &[C64]) -> Result<Self> {
        if zeta.len() != xi.len() || zeta.is_empty() {
            return Err(Error::Config("zeta and xi must be nonempty and of equal length".into()));
        }
        check_budget(fam.dim().pow(2 * zeta.len() as u32 + 1))?;
        Ok(Vertical { fam, zeta: zeta.to_vec(), xi: xi.to_vec() })
    }

    pub fn from_config(fam: &'a RFamily, cfg: &LatticeConfig) -> Result<Self> {
        Vertical::new(fam, &cfg.zeta, &cfg.xi)
    }

    pub fn n(&self) -> usize {
        self.zeta.len()
    }

    /// `dim 𝒱`
    pub fn space_dim(&self) -> usize {
        self.fam.dim().pow(2 * self.n() as u32)
    }

    fn dims(&self) -> Vec<usize> {
        vec![self.fam.dim(); 2 * self.n() + 1]
    }

    /// `𝓜^ν(η) = R_{2N−1,v} … R_{1,v} R_{0,v} A_v(ν)` for a `V` line, and the
    /// starred column built from `R_{V|V*}`, `R_{V*|V*}` and `A_{V*}(ν)` for `V*`.
    pub fn column(&self, eta: C64, tag: Tag, nu: &[C64]) -> Result<Column> {
        let fam = self.fam;
        let dims = self.dims();
        let v = 2 * self.n();
        let twist = match tag {
            Tag::V => fam.v.group_like_twist(nu),
            Tag::VStar => fam.vstar.group_like_twist(nu),
        };
        let mut m = embed(&twist, &[v], &dims);
        let mut residue = false;
        for k in 0..self.n() {
            let (ra, rb) = match tag {
                Tag::V => (fam.r_vv(self.zeta[k], eta)?, fam.r_sv(self.xi[k], eta)?),
                Tag::VStar => {
                    let ra = if fam.r_vs_is_singular(self.zeta[k], eta)? {
                        if residue {
                            return Err(Error::Config("starred column meets two poles".into()));
                        }
                        residue = true;
                        fam.residue_vs(self.zeta[k], eta)?
                    } else {
                        fam.r_vs(self.zeta[k], eta)?
                    };
                    (ra, fam.r_ss(self.xi[k], eta)?)
                }
            };
            m = apply_left(&ra, &[2 * k, v], &dims, &m);
            m = apply_left(&rb, &[2 * k + 1, v], &dims, &m);
        }
        Ok(Column { m, residue })
    }

    /// `𝓣^ν(η) = tr_v 𝓜^ν(η)` (or its residue at a pole of a starred column).
    pub fn transfer(&self, eta: C64, tag: Tag, nu: &[C64]) -> Result<Column> {
        let col = self.column(eta, tag, nu)?;
        Ok(Column { m: ptrace(&col.m, &self.dims(), 2 * self.n()), residue: col.residue })
    }

    /// Residual of `𝓣*^ν(q^λ ζ_1) 𝓣^ν(ζ_1) = ∏_i D^{-1}(q^λζ_1|ζ_i) D(q^λζ_1|ξ_i)`.
    ///
    /// Both sides have a simple pole at `η = q^λ ζ_1`: `R_{V|V*}(ζ_1|η)` blows up
    /// and `D(η|ζ_1)` vanishes there. The identity is compared residue to residue.
    pub fn check_tst(&self, nu: &[C64]) -> Result<TstCheck> {
        let fam = self.fam;
        let z1 = self.zeta[0];
        let eta0 = fam.shift * z1;
        let star = self.transfer(eta0, Tag::VStar, nu)?;
        if !star.residue {
            return Err(Error::Config("expected a pole of the starred transfer operator".into()));
        }
        let lhs = &star.m * self.transfer(z1, Tag::V, nu)?.m;
        let dprime = first_derivative(&|e: C64| Ok(CMat::from_element(1, 1, fam.d_scalar(e, z1)?)), eta0)?[(0, 0)];
        let mut factor = dprime.inv();
        for k in 1..self.n() {
            factor /= fam.d_scalar(eta0, self.zeta[k])?;
        }
        for k in 0..self.n() {
            factor *= fam.d_scalar(eta0, self.xi[k])?;
        }
        let rhs = eye(self.space_dim()) * factor;
        Ok(TstCheck { residual: linalg::rel_diff(&lhs, &rhs), factor })
    }

    /// Residual of `𝓣^ν(ξ_1) 𝓣*^ν(ξ_1) = 1`.
    pub fn check_inversion(&self, nu: &[C64]) -> Result<f64> {
        let x1 = self.xi[0];
        let p = self.transfer(x1, Tag::V, nu)?.m * self.transfer(x1, Tag::VStar, nu)?.m;
        Ok(linalg::rel_diff(&p, &eye(self.space_dim())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TstCheck {
    pub residual: f64,
    /// Residue of the scalar product of `D` factors.
    pub factor: C64,
}

pub fn commutator_residual(a: &CMat, b: &CMat) -> f64 {
    let ab = a * b;
    let ba = b * a;
    (&ab - &ba).norm() / ab.norm().max(ba.norm()).max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- spectra

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    pub dominant: usize,
    /// `1 − |λ_1| / |λ_0|`
    pub gap: f64,
    /// Right eigenvectors as columns.
    pub right: CMat,
    /// Dual basis as rows: `left.row(a) · right.column(b) = δ_ab`.
    pub left: CMat,
    pub biorthonormality: f64,
}

impl SpectralData {
    pub fn v0(&self) -> nalgebra::DVector<C64> {
        self.right.column(self.dominant).into_owned()
    }

    /// Dominant left vector as a row.
    pub fn psi0(&self) -> nalgebra::RowDVector<C64> {
        self.left.row(self.dominant).into_owned()
    }

    pub fn lambda0(&self) -> C64 {
        self.eigenvalues[self.dominant]
    }

    /// `|λ_1 / λ_0|`
    pub fn subdominant_ratio(&self) -> f64 {
        1.0 - self.gap
    }
}

const DENSE_LIMIT: usize = 4096;

pub fn dominant_eigs(t: &CMat) -> Result<SpectralData> {
    if t.nrows() > DENSE_LIMIT {
        return dominant_power(t);
    }
    let (lam, right) = eig(t)?;
    let mut order: Vec<usize> = (0..lam.len()).collect();
    order.sort_by(|&a, &b| lam[b].norm().partial_cmp(&lam[a].norm()).unwrap());
    let dom = order[0];
    let gap = if lam.len() > 1 { 1.0 - lam[order[1]].norm() / lam[dom].norm() } else { 1.0 };
    if gap < 1e-6 {
        return Err(Error::DegenerateDominant(gap));
    }
    let mut left = inverse(&right).map_err(|_| Error::Eigen("eigenvectors are not a basis".into()))?;
    // dominant left vector from the conjugate-transpose problem
    let (mu, w) = eig(&t.adjoint())?;
    let target = lam[dom].conj();
    let (j, dist) = mu
        .iter()
        .enumerate()
        .map(|(j, m)| (j, (m - target).norm()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    if dist > 1e-8 * lam[dom].norm() {
        return Err(Error::Eigen(format!("no matching left eigenvalue (distance {dist:e})")));
    }
    let psi = w.column(j).map(|z| z.conj()).transpose();
    let overlap = (&psi * right.column(dom))[(0, 0)];
    if overlap.norm() < 1e-12 {
        return Err(Error::ZeroOverlap);
    }
    left.set_row(dom, &(psi / overlap));
    let biorth = (&left * &right - eye(lam.len())).norm();
    Ok(SpectralData { eigenvalues: lam, dominant: dom, gap, right, left, biorthonormality: biorth })
}

/// Power iteration for the two leading eigenpairs of a large operator.
fn dominant_power(t: &CMat) -> Result<SpectralData> {
    let n = t.nrows();
    let iterate = |m: &dyn Fn(&nalgebra::DVector<C64>) -> nalgebra::DVector<C64>| -> (C64, nalgebra::DVector<C64>) {
        let mut x = nalgebra::DVector::from_fn(n, |i, _| C64::new(1.0 + (i as f64 * 0.37).sin(), 0.1));
        x /= c(x.norm());
        let mut lam = ZERO;
        for _ in 0..20_000 {
            let y = m(&x);
            let new = x.dotc(&y);
            let ny = y.norm();
            x = y / c(ny);
            if (new - lam).norm() < 1e-14 * new.norm() {
                lam = new;
                break;
            }
            lam = new;
        }
        (lam, x)
    };
    let (l0, v0) = iterate(&|x| t * x);
    let (_, w0) = iterate(&|x| t.adjoint() * x);
    let psi = w0.map(|z| z.conj()).transpose();
    let overlap = (&psi * &v0)[(0, 0)];
    if overlap.norm() < 1e-12 {
        return Err(Error::ZeroOverlap);
    }
    let psi = psi / overlap;
    let proj = &v0 * &psi;
    let (l1, _) = iterate(&|x| t * x - &proj * (t * x));
    let gap = 1.0 - l1.norm() / l0.norm();
    if gap < 1e-6 {
        return Err(Error::DegenerateDominant(gap));
    }
    let mut right = CMat::zeros(n, 1);
    right.set_column(0, &v0);
    let mut left = CMat::zeros(1, n);
    left.set_row(0, &psi);
    Ok(SpectralData { eigenvalues: vec![l0, l1], dominant: 0, gap, right, left, biorthonormality: 0.0 })
}

// ---------------------------------------------------------------- densities

/// `n`-site reduced density operator; site `k` is space `k` of the matrix.
#[derive(Debug, Clone, Serialize)]
pub struct DensityState {
    pub sites: Vec<(Tag, C64)>,
    #[serde(skip)]
    pub matrix: CMat,
    pub provenance: String,
}

impl DensityState {
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn to_tensor(&self, d: usize) -> Result<crate::tensor::Tensor> {
        let labels: Vec<String> = (0..self.n()).map(|k| format!("s{k}")).collect();
        let spaces: Vec<(&str, usize)> = labels.iter().map(|l| (l.as_str(), d)).collect();
        crate::tensor::Tensor::operator(&spaces, &self.matrix)
    }
}

/// Dominant data of the two wing transfer operators `𝓣^κ` and `𝓣^{κ+α}`.
#[derive(Debug, Clone)]
pub struct Wings {
    pub kappa: SpectralData,
    pub kappa_alpha: SpectralData,
    pub overlap: C64,
}

impl<'a> Vertical<'a> {
    pub fn wings(&self, kappa: &[C64], alpha: &[C64], eta_ref: C64) -> Result<Wings> {
        let ka: Vec<C64> = kappa.iter().zip(alpha).map(|(a, b)| a + b).collect();
        let k = dominant_eigs(&self.transfer(eta_ref, Tag::V, kappa)?.m)?;
        let kap = dominant_eigs(&self.transfer(eta_ref, Tag::V, &ka)?.m)?;
        let overlap = (k.psi0() * kap.v0())[(0, 0)];
        if overlap.norm() < 1e-12 {
            return Err(Error::ZeroOverlap);
        }
        Ok(Wings { kappa: k, kappa_alpha: kap, overlap })
    }

    /// `λ_0^ν(η)` (or `λ_0^{*ν}(η)`) on the dominant pair of `data`.
    pub fn eigenvalue(&self, data: &SpectralData, eta: C64, tag: Tag, nu: &[C64]) -> Result<C64> {
        let t = self.transfer(eta, tag, nu)?.m;
        Ok((data.psi0() * t * data.v0())[(0, 0)])
    }

    /// `𝓜(η_n) … 𝓜(η_1)` applied to `x` on `𝒱 ⊗ V^{⊗n}` (vertical site `k` is space `2N + k`).
    fn apply_columns(&self, sites: &[(Tag, C64)], nu: &[C64], x: &CMat) -> Result<CMat> {
        let n_v = 2 * self.n();
        let mut dims = vec![self.fam.dim(); n_v];
        dims.extend(std::iter::repeat(self.fam.dim()).take(sites.len()));
        check_budget(dims.iter().product())?;
        let mut x = x.clone();
        for (k, (tag, eta)) in sites.iter().enumerate() {
            let col = self.column(*eta, *tag, nu)?;
            let mut idx: Vec<usize> = (0..n_v).collect();
            idx.push(n_v + k);
            x = apply_left(&col.m, &idx, &dims, &x);
        }
        Ok(x)
    }

    /// Dominant-eigenvector form of `D_{n,N}`.
    pub fn reduced_density(&self, sites: &[(Tag, C64)], kappa: &[C64], wings: &Wings) -> Result<DensityState> {
        let d = self.fam.dim();
        let dv = self.space_dim();
        let dn = d.pow(sites.len() as u32);
        let v = wings.kappa_alpha.v0();
        let psi = wings.kappa.psi0();
        let mut x = CMat::zeros(dv * dn, dn);
        for a in 0..dv {
            for j in 0..dn {
                x[(a * dn + j, j)] = v[a];
            }
        }
        let y = self.apply_columns(sites, kappa, &x)?;
        let mut out = CMat::zeros(dn, dn);
        for a in 0..dv {
            if psi[a] == ZERO {
                continue;
            }
            out += y.rows(a * dn, dn) * psi[a];
        }
        let mut norm = wings.overlap;
        for (tag, eta) in sites {
            norm *= self.eigenvalue(&wings.kappa, *eta, *tag, kappa)?;
        }
        if norm.norm() == 0.0 {
            return Err(Error::ZeroOverlap);
        }
        Ok(DensityState { sites: sites.to_vec(), matrix: out / norm, provenance: String::new() })
    }

    /// Finite-`m` trace form
    /// `tr((𝓣^κ)^m 𝓜(η_n)…𝓜(η_1) (𝓣^{κ+α})^m) / tr((𝓣^κ)^m 𝓣(η_n)…𝓣(η_1) (𝓣^{κ+α})^m)`.
    pub fn reduced_density_finite(
        &self,
        sites: &[(Tag, C64)],
        kappa: &[C64],
        alpha: &[C64],
        m: usize,
        eta_ref: C64,
    ) -> Result<DensityState> {
        let d = self.fam.dim();
        let dv = self.space_dim();
        let dn = d.pow(sites.len() as u32);
        let ka: Vec<C64> = kappa.iter().zip(alpha).map(|(a, b)| a + b).collect();
        let power = |t: CMat| -> CMat {
            // scale by the spectral radius estimate to keep powers finite
            let s = t.norm();
            let t = t / c(s);
            (0..m).fold(eye(dv), |acc, _| acc * &t)
        };
        let lk = power(self.transfer(eta_ref, Tag::V, kappa)?.m);
        let rka = power(self.transfer(eta_ref, Tag::V, &ka)?.m);
        // tr_𝒱(L O_{ij} R) = Σ_{ab} O[(a,i),(b,j)] (R L)[b,a]
        let w = &rka * &lk;
        let mut x = CMat::zeros(dv * dn, dv * dn);
        for a in 0..dv {
            for b in 0..dv {
                if w[(a, b)] != ZERO {
                    for j in 0..dn {
                        x[(a * dn + j, b * dn + j)] = w[(a, b)];
                    }
                }
            }
        }
        let y = self.apply_columns(sites, kappa, &x)?;
        let mut out = CMat::zeros(dn, dn);
        for a in 0..dv {
            out += y.view((a * dn, a * dn), (dn, dn));
        }
        let mut tr = w.clone();
        for (tag, eta) in sites {
            tr = self.transfer(*eta, *tag, kappa)?.m * tr;
        }
        Ok(DensityState { sites: sites.to_vec(), matrix: out / tr.trace(), provenance: String::new() })
    }
}
