//! Dense complex linear algebra on space-ordered matrices.
//!
//! An operator on `V_0 ⊗ V_1 ⊗ … ⊗ V_{k-1}` is stored as a square matrix whose
//! row (column) index is the row-major multi-index of the output (input) legs,
//! space 0 most significant. This is the matrix view of a [`crate::tensor::Tensor`]
//! with legs `(out_0 … out_{k-1}, in_0 … in_{k-1})`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn diag(entries: &[C64]) -> CMat {
    let n = entries.len();
    let mut m = CMat::zeros(n, n);
    for (i, e) in entries.iter().enumerate() {
        m[(i, i)] = *e;
    }
    m
}

/// Matrix unit `E_{ij}` of size `n`.
pub fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn fro(a: &CMat) -> f64 {
    a.norm()
}

/// `‖a − b‖ / ‖b‖`, with the convention 0 when `a == b`.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let num = (a - b).norm();
    if num == 0.0 {
        0.0
    } else {
        num / b.norm()
    }
}

/// Deviation of `a` from the nearest multiple of the identity, relative to `‖a‖`.
/// Returns the deviation and the fitted scalar.
pub fn scalar_part(a: &CMat) -> (f64, C64) {
    let n = a.nrows();
    let s = a.trace() / c(n as f64);
    let dev = (a - eye(n) * s).norm() / a.norm().max(f64::MIN_POSITIVE);
    (dev, s)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Inverse with a relative condition guard of `1e-13`.
pub fn inverse(a: &CMat) -> Result<CMat> {
    let s = singular_values(a);
    let (hi, lo) = (s[0], *s.last().unwrap());
    if hi == 0.0 || lo / hi < 1e-13 {
        return Err(Error::Singular);
    }
    a.clone().try_inverse().ok_or(Error::Singular)
}

/// Right null space of `a`: vectors spanning `{x : a x = 0}` up to the relative
/// threshold `tol · σ_max`. Also returns the full descending singular spectrum.
pub fn null_space(a: &CMat, tol: f64) -> (Vec<nalgebra::DVector<C64>>, Vec<f64>) {
    let ncols = a.ncols();
    // nalgebra's thin SVD drops null directions of wide matrices, so pad to square.
    // Tall systems are first reduced to their square R factor, which has the
    // same singular values and right singular vectors.
    let svd = if a.nrows() > ncols {
        a.clone().qr().r().svd(false, true)
    } else if a.nrows() == ncols {
        a.clone().svd(false, true)
    } else {
        let mut padded = CMat::zeros(ncols, ncols);
        padded.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
        padded.svd(false, true)
    };
    let v_t = svd.v_t.expect("requested V^H");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv[0];
    let basis = idx
        .iter()
        .filter(|&&i| svd.singular_values[i] <= tol * smax)
        .map(|&i| v_t.row(i).adjoint().into_owned())
        .collect();
    (basis, sv)
}

/// Row-major strides for the given space dimensions.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Index bookkeeping for acting on a subset of spaces.
struct Split {
    /// full index -> (local index, rest index)
    parts: Vec<(usize, usize)>,
    /// (local, rest) -> full index, stored as local * n_rest + rest
    join: Vec<usize>,
    n_local: usize,
    n_rest: usize,
}

fn split(dims: &[usize], sites: &[usize]) -> Split {
    let total: usize = dims.iter().product();
    let st = strides(dims);
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !sites.contains(k)).collect();
    let n_local: usize = sites.iter().map(|&k| dims[k]).product();
    let n_rest: usize = rest.iter().map(|&k| dims[k]).product();
    let mut parts = vec![(0, 0); total];
    let mut join = vec![0; total];
    for (full, part) in parts.iter_mut().enumerate() {
        let digit = |k: usize| (full / st[k]) % dims[k];
        let mut l = 0;
        for &k in sites {
            l = l * dims[k] + digit(k);
        }
        let mut r = 0;
        for &k in &rest {
            r = r * dims[k] + digit(k);
        }
        *part = (l, r);
        join[l * n_rest + r] = full;
    }
    Split { parts, join, n_local, n_rest }
}

fn check_sites(op: &CMat, dims: &[usize], sites: &[usize]) -> usize {
    let n_local: usize = sites.iter().map(|&k| dims[k]).product();
    assert_eq!(op.nrows(), n_local, "local operator does not match site dimensions");
    assert_eq!(op.ncols(), n_local, "local operator must be square");
    for (i, a) in sites.iter().enumerate() {
        assert!(*a < dims.len(), "site out of range");
        assert!(!sites[i + 1..].contains(a), "repeated site");
    }
    n_local
}

/// `(op ⊗ 1) · m`, where `op` acts on `sites` (in the order given).
pub fn apply_left(op: &CMat, sites: &[usize], dims: &[usize], m: &CMat) -> CMat {
    check_sites(op, dims, sites);
    let sp = split(dims, sites);
    let total = sp.parts.len();
    assert_eq!(m.nrows(), total);
    let mut out = CMat::zeros(total, m.ncols());
    for j in 0..m.ncols() {
        let col = m.column(j);
        let mut dst = out.column_mut(j);
        for i in 0..total {
            let (l, r) = sp.parts[i];
            let mut acc = ZERO;
            for lp in 0..sp.n_local {
                let o = op[(l, lp)];
                if o != ZERO {
                    acc += o * col[sp.join[lp * sp.n_rest + r]];
                }
            }
            dst[i] = acc;
        }
    }
    out
}

/// `m · (op ⊗ 1)`, where `op` acts on `sites`.
pub fn apply_right(m: &CMat, op: &CMat, sites: &[usize], dims: &[usize]) -> CMat {
    check_sites(op, dims, sites);
    let sp = split(dims, sites);
    let total = sp.parts.len();
    assert_eq!(m.ncols(), total);
    let mut out = CMat::zeros(m.nrows(), total);
    for j in 0..total {
        let (l, r) = sp.parts[j];
        for lp in 0..sp.n_local {
            let o = op[(lp, l)];
            if o == ZERO {
                continue;
            }
            let src = sp.join[lp * sp.n_rest + r];
            let col = m.column(src) * o;
            let mut dst = out.column_mut(j);
            dst += col;
        }
    }
    out
}

/// `op` acting on `sites` of the product space `dims`, identity elsewhere.
pub fn embed(op: &CMat, sites: &[usize], dims: &[usize]) -> CMat {
    let total: usize = dims.iter().product();
    apply_left(op, sites, dims, &eye(total))
}

/// Partial trace over one space.
pub fn ptrace(m: &CMat, dims: &[usize], site: usize) -> CMat {
    let sp = split(dims, &[site]);
    let n = sp.n_rest;
    let mut out = CMat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = ZERO;
            for l in 0..sp.n_local {
                acc += m[(sp.join[l * n + a], sp.join[l * n + b])];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Partial transpose over the given spaces (all spaces must be square pairs).
pub fn ptranspose(m: &CMat, dims: &[usize], sites: &[usize]) -> CMat {
    let total: usize = dims.iter().product();
    let st = strides(dims);
    let mut out = CMat::zeros(total, total);
    for i in 0..total {
        for j in 0..total {
            let (mut ii, mut jj) = (i, j);
            for &k in sites {
                let di = (i / st[k]) % dims[k];
                let dj = (j / st[k]) % dims[k];
                ii = ii - di * st[k] + dj * st[k];
                jj = jj - dj * st[k] + di * st[k];
            }
            out[(ii, jj)] = m[(i, j)];
        }
    }
    out
}

/// Swap `P: V ⊗ W → W ⊗ V` with `dim V = d1`, `dim W = d2`.
pub fn swap(d1: usize, d2: usize) -> CMat {
    let mut m = CMat::zeros(d1 * d2, d1 * d2);
    for i in 0..d1 {
        for j in 0..d2 {
            m[(j * d1 + i, i * d2 + j)] = ONE;
        }
    }
    m
}

/// Eigen-decomposition of a diagonalizable matrix: eigenvalues and right
/// eigenvectors (columns, unit norm) from the complex Schur form.
pub fn eig(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = m.nrows();
    let (q, t) = match nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 100_000) {
        Some(s) => s.unpack(),
        None => {
            // exact block structure can stall the shifts; retry in a rotated basis
            let u = fixed_unitary(n);
            let s = nalgebra::linalg::Schur::try_new(u.adjoint() * m * &u, 1e-15, 100_000)
                .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
            let (q, t) = s.unpack();
            (u * q, t)
        }
    };
    let lam: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let mut vecs = CMat::zeros(n, n);
    for k in 0..n {
        let mut y = vec![ZERO; n];
        y[k] = ONE;
        for j in (0..k).rev() {
            let mut s = ZERO;
            for i in j + 1..=k {
                s += t[(j, i)] * y[i];
            }
            let mut den = t[(j, j)] - lam[k];
            if den.norm() < 1e-14 * scale {
                den = c(1e-14 * scale);
            }
            y[j] = -s / den;
        }
        let yv = nalgebra::DVector::from_vec(y);
        let x = &q * yv;
        let nx = x.norm();
        vecs.set_column(k, &(x / c(nx)));
    }
    Ok((lam, vecs))
}

/// Deterministic dense unitary: the Q factor of a fixed pseudo-random matrix.
fn fixed_unitary(n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |i, j| {
        let t = (i * n + j) as f64;
        C64::new((0.7 * t + 0.3).sin(), (1.3 * t + 0.1).cos())
    });
    a.qr().q()
}

/// Matrix exponential.
pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Bytes needed for one dense complex matrix of dimension `dim`.
pub fn dense_bytes(dim: usize) -> usize {
    dim.saturating_mul(dim).saturating_mul(16)
}

/// Memory budget in MiB from `QLOOP_MEMORY_MIB` (default 2048).
pub fn memory_budget_mib() -> usize {
    std::env::var("QLOOP_MEMORY_MIB")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(2048)
}

/// Fails with `TooLarge` if a handful of dense `dim × dim` matrices would exceed the budget.
pub fn check_budget(dim: usize) -> Result<()> {
    let needed_mib = dense_bytes(dim).saturating_mul(4) / (1 << 20);
    let budget_mib = memory_budget_mib();
    if needed_mib > budget_mib {
        Err(Error::TooLarge { dim, needed_mib, budget_mib })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            C64::new(a, b)
        })
    }

    #[test]
    fn embed_matches_kron() {
        let a = sample(2, 1);
        let b = sample(3, 2);
        let dims = [2, 3];
        let full = apply_left(&a, &[0], &dims, &embed(&b, &[1], &dims));
        assert!(rel_diff(&full, &kron(&a, &b)) < 1e-14);
    }

    #[test]
    fn embed_reordered_sites() {
        let a = sample(6, 3);
        let dims = [2, 3];
        let p = swap(2, 3);
        let direct = embed(&a, &[0, 1], &dims);
        assert!(rel_diff(&direct, &a) < 1e-15);
        // op on (1,0) equals P^{-1} op P with P: V0⊗V1 → V1⊗V0
        let flipped = embed(&a, &[1, 0], &dims);
        let pinv = swap(3, 2);
        assert!(rel_diff(&flipped, &(&pinv * &a * &p)) < 1e-14);
    }

    #[test]
    fn apply_right_matches_product() {
        let a = sample(4, 5);
        let m = sample(8, 6);
        let dims = [2, 2, 2];
        let lhs = apply_right(&m, &a, &[2, 0], &dims);
        let rhs = &m * embed(&a, &[2, 0], &dims);
        assert!(rel_diff(&lhs, &rhs) < 1e-14);
    }

    #[test]
    fn ptrace_of_product_state() {
        let a = sample(2, 7);
        let b = sample(3, 8);
        let t = ptrace(&kron(&a, &b), &[2, 3], 1);
        assert!(rel_diff(&t, &(a * b.trace())) < 1e-14);
    }

    #[test]
    fn ptranspose_involution() {
        let a = sample(6, 9);
        let t = ptranspose(&a, &[2, 3], &[0]);
        assert!(rel_diff(&ptranspose(&t, &[2, 3], &[0]), &a) < 1e-16);
        assert!(rel_diff(&ptranspose(&a, &[2, 3], &[0, 1]), &a.transpose()) < 1e-16);
    }

    #[test]
    fn eig_reconstructs() {
        let a = sample(7, 10);
        let (lam, v) = eig(&a).unwrap();
        for k in 0..7 {
            let r = &a * v.column(k) - v.column(k) * lam[k];
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn null_space_of_rank_deficient() {
        let mut a = sample(4, 11);
        let row = a.row(0) + a.row(1);
        a.set_row(3, &row);
        let (ns, _) = null_space(&a.transpose(), 1e-10);
        assert_eq!(ns.len(), 1);
        assert!((a.transpose() * &ns[0]).norm() < 1e-12);
    }
}
