//! Dense complex tensors with labeled, directed legs.
//!
//! Leg convention: an operator on `V ⊗ W` carries legs
//! `(out V, out W, in V, in W)`; the matrix element `R^{ij}_{kl}` sits at row
//! `(i, j)`, column `(k, l)`. Contracting an out-leg of `b` with the
//! same-labeled in-leg of `a` is the operator product `a · b`.

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ZERO};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub label: String,
    pub dim: usize,
    pub dir: Dir,
}

impl Leg {
    pub fn new(label: &str, dim: usize, dir: Dir) -> Leg {
        Leg { label: label.to_string(), dim, dir }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    legs: Vec<Leg>,
    #[serde(with = "pairs")]
    data: Vec<C64>,
}

mod pairs {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let flat: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        flat.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let flat = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(flat.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

impl Tensor {
    pub fn new(legs: Vec<Leg>, data: Vec<C64>) -> Result<Tensor> {
        let size: usize = legs.iter().map(|l| l.dim).product();
        if size != data.len() {
            return Err(Error::LegMismatch(format!("data length {} but legs need {size}", data.len())));
        }
        let t = Tensor { legs, data };
        t.check_labels()?;
        Ok(t)
    }

    pub fn scalar(z: C64) -> Tensor {
        Tensor { legs: vec![], data: vec![z] }
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    fn check_labels(&self) -> Result<()> {
        for (i, a) in self.legs.iter().enumerate() {
            if self.legs[i + 1..].iter().any(|b| b.label == a.label && b.dir == a.dir) {
                return Err(Error::LabelClash(format!("{} ({:?})", a.label, a.dir)));
            }
        }
        Ok(())
    }

    fn find(&self, label: &str, dir: Dir) -> Result<usize> {
        self.legs
            .iter()
            .position(|l| l.label == label && l.dir == dir)
            .ok_or_else(|| Error::LegMismatch(format!("no {dir:?} leg labeled {label}")))
    }

    /// Operator on the labeled spaces, from its matrix in the same space order.
    pub fn operator(spaces: &[(&str, usize)], m: &CMat) -> Result<Tensor> {
        let n: usize = spaces.iter().map(|s| s.1).product();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::LegMismatch(format!("matrix {}x{} for spaces of total dim {n}", m.nrows(), m.ncols())));
        }
        let mut legs: Vec<Leg> = spaces.iter().map(|(l, d)| Leg::new(l, *d, Dir::Out)).collect();
        legs.extend(spaces.iter().map(|(l, d)| Leg::new(l, *d, Dir::In)));
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(m[(i, j)]);
            }
        }
        Tensor::new(legs, data)
    }

    pub fn identity(label: &str, dim: usize) -> Tensor {
        Tensor::operator(&[(label, dim)], &CMat::identity(dim, dim)).expect("identity shape")
    }

    /// Matrix view with rows/columns ordered by `spaces` (out legs / in legs).
    pub fn to_matrix(&self, spaces: &[&str]) -> Result<CMat> {
        let mut order = Vec::new();
        for s in spaces {
            order.push(self.find(s, Dir::Out)?);
        }
        for s in spaces {
            order.push(self.find(s, Dir::In)?);
        }
        if order.len() != self.legs.len() {
            return Err(Error::LegMismatch("tensor has legs outside the requested spaces".into()));
        }
        let t = self.permuted(&order);
        let rows: usize = t.legs[..spaces.len()].iter().map(|l| l.dim).product();
        let cols: usize = t.legs[spaces.len()..].iter().map(|l| l.dim).product();
        Ok(CMat::from_row_slice(rows, cols, &t.data))
    }

    /// New tensor whose k-th leg is the old leg `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Tensor {
        assert_eq!(order.len(), self.legs.len());
        let old_dims: Vec<usize> = self.legs.iter().map(|l| l.dim).collect();
        let old_st = strides(&old_dims);
        let legs: Vec<Leg> = order.iter().map(|&k| self.legs[k].clone()).collect();
        let new_dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
        let src_st: Vec<usize> = order.iter().map(|&k| old_st[k]).collect();
        let total = self.data.len();
        let mut data = Vec::with_capacity(total);
        let mut idx = vec![0usize; new_dims.len()];
        let mut src = 0usize;
        for _ in 0..total {
            data.push(self.data[src]);
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                src += src_st[k];
                if idx[k] < new_dims[k] {
                    break;
                }
                src -= src_st[k] * new_dims[k];
                idx[k] = 0;
            }
        }
        Tensor { legs, data }
    }

    /// Reorders legs to all out-legs followed by all in-legs, keeping relative order.
    pub fn canonical(&self) -> Tensor {
        let mut order: Vec<usize> = (0..self.legs.len()).filter(|&k| self.legs[k].dir == Dir::Out).collect();
        order.extend((0..self.legs.len()).filter(|&k| self.legs[k].dir == Dir::In));
        self.permuted(&order)
    }

    /// Contracts each `(out-leg of b, in-leg of a)` pair given by label.
    /// Result legs: unpaired legs of `a` then unpaired legs of `b`.
    pub fn compose(a: &Tensor, b: &Tensor, pairing: &[(&str, &str)]) -> Result<Tensor> {
        let mut ia = Vec::new();
        let mut ib = Vec::new();
        for (lb, la) in pairing {
            let kb = b.find(lb, Dir::Out)?;
            let ka = a.find(la, Dir::In)?;
            if a.legs[ka].dim != b.legs[kb].dim {
                return Err(Error::LegMismatch(format!(
                    "{lb} has dim {} but {la} has dim {}",
                    b.legs[kb].dim, a.legs[ka].dim
                )));
            }
            ia.push(ka);
            ib.push(kb);
        }
        let free_a: Vec<usize> = (0..a.legs.len()).filter(|k| !ia.contains(k)).collect();
        let free_b: Vec<usize> = (0..b.legs.len()).filter(|k| !ib.contains(k)).collect();
        let pa = a.permuted(&[free_a.clone(), ia.clone()].concat());
        let pb = b.permuted(&[ib.clone(), free_b.clone()].concat());
        let m: usize = free_a.iter().map(|&k| a.legs[k].dim).product();
        let kdim: usize = ia.iter().map(|&k| a.legs[k].dim).product();
        let n: usize = free_b.iter().map(|&k| b.legs[k].dim).product();
        let ma = CMat::from_row_slice(m, kdim, &pa.data);
        let mb = CMat::from_row_slice(kdim, n, &pb.data);
        let prod = ma * mb;
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                data.push(prod[(i, j)]);
            }
        }
        let mut legs: Vec<Leg> = free_a.iter().map(|&k| a.legs[k].clone()).collect();
        legs.extend(free_b.iter().map(|&k| b.legs[k].clone()));
        Tensor::new(legs, data)
    }

    /// Operator product `a · b`: every out-leg of `b` whose label is an in-leg
    /// of `a` is contracted; spaces touched by only one factor pass through.
    pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let pairs: Vec<(&str, &str)> = b
            .legs
            .iter()
            .filter(|l| l.dir == Dir::Out && a.legs.iter().any(|m| m.dir == Dir::In && m.label == l.label))
            .map(|l| (l.label.as_str(), l.label.as_str()))
            .collect();
        Ok(Tensor::compose(a, b, &pairs)?.canonical())
    }

    /// Traces the out/in pair carrying `label`.
    pub fn partial_trace(&self, label: &str) -> Result<Tensor> {
        let ko = self.find(label, Dir::Out)?;
        let ki = self.find(label, Dir::In)?;
        let d = self.legs[ko].dim;
        if self.legs[ki].dim != d {
            return Err(Error::LegMismatch(format!("trace pair {label} has dims {d} and {}", self.legs[ki].dim)));
        }
        let rest: Vec<usize> = (0..self.legs.len()).filter(|&k| k != ko && k != ki).collect();
        let p = self.permuted(&[rest.clone(), vec![ko, ki]].concat());
        let n: usize = rest.iter().map(|&k| self.legs[k].dim).product();
        let mut data = vec![ZERO; n];
        for (r, slot) in data.iter_mut().enumerate() {
            let base = r * d * d;
            for i in 0..d {
                *slot += p.data[base + i * d + i];
            }
        }
        let legs = rest.iter().map(|&k| self.legs[k].clone()).collect();
        Tensor::new(legs, data)
    }

    /// Swaps in/out for the selected spaces, then restores canonical leg order.
    pub fn partial_transpose(&self, labels: &[&str]) -> Result<Tensor> {
        let mut legs = self.legs.clone();
        for label in labels {
            let ko = self.find(label, Dir::Out)?;
            let ki = self.find(label, Dir::In)?;
            if self.legs[ko].dim != self.legs[ki].dim {
                return Err(Error::LegMismatch(format!("transpose pair {label} has unequal dims")));
            }
            legs[ko].dir = Dir::In;
            legs[ki].dir = Dir::Out;
        }
        // Swap positions of each flipped pair so the leg list keeps its shape.
        let mut order: Vec<usize> = (0..legs.len()).collect();
        for label in labels {
            let ko = self.find(label, Dir::Out)?;
            let ki = self.find(label, Dir::In)?;
            order.swap(ko, ki);
        }
        let flipped = Tensor { legs, data: self.data.clone() };
        let t = flipped.permuted(&order);
        debug_assert!(t.legs.iter().zip(&self.legs).all(|(x, y)| x.label == y.label && x.dir == y.dir));
        Ok(t)
    }

    /// Whether out-leg and in-leg dimension multisets agree.
    pub fn is_operator_shaped(&self) -> bool {
        let mut o: Vec<usize> = self.legs.iter().filter(|l| l.dir == Dir::Out).map(|l| l.dim).collect();
        let mut i: Vec<usize> = self.legs.iter().filter(|l| l.dir == Dir::In).map(|l| l.dim).collect();
        o.sort_unstable();
        i.sort_unstable();
        o == i
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Relative Frobenius distance to `other`, after aligning leg order.
    pub fn rel_diff(&self, other: &Tensor) -> Result<f64> {
        let order: Result<Vec<usize>> = other.legs.iter().map(|l| self.find(&l.label, l.dir)).collect();
        let a = self.permuted(&order?);
        if a.legs != other.legs {
            return Err(Error::LegMismatch("tensors have different legs".into()));
        }
        let num: f64 = a.data.iter().zip(&other.data).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        Ok(if num == 0.0 { 0.0 } else { num / other.norm() })
    }

    pub fn scale(&self, z: C64) -> Tensor {
        Tensor { legs: self.legs.clone(), data: self.data.iter().map(|x| x * z).collect() }
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Tensor> {
        let mut t = self.clone();
        for l in t.legs.iter_mut() {
            if l.label == from {
                l.label = to.to_string();
            }
        }
        t.check_labels()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serializes")
    }

    pub fn from_json(s: &str) -> Result<Tensor> {
        let t: Tensor = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Tensor::new(t.legs, t.data)
    }
}

/// `P: V ⊗ W → W ⊗ V` on spaces `(l1, l2)` with `dim V = d1`, `dim W = d2`.
/// Entries `P^{kl}_{ij} = δ_{il} δ_{jk}`.
pub fn permutation_operator(d1: usize, d2: usize, l1: &str, l2: &str) -> Tensor {
    let m = crate::linalg::swap(d1, d2);
    let legs = vec![
        Leg::new(l1, d2, Dir::Out),
        Leg::new(l2, d1, Dir::Out),
        Leg::new(l1, d1, Dir::In),
        Leg::new(l2, d2, Dir::In),
    ];
    let n = d1 * d2;
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(m[(i, j)]);
        }
    }
    Tensor::new(legs, data).expect("swap shape")
}
