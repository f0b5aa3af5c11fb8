//! Covariant tensors on the half-plane as arrays of jets.
//!
//! A rank-m tensor stores all `2^m` coordinate components; bit `k` of the flat
//! index is the value of slot `k`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{scalar_jet, stencil_jets, DiffMode, Scalar};
use crate::jet::{CJet, Jet, MAX_ORDER};

#[derive(Clone, Debug, PartialEq)]
pub struct TensorJet {
    rank: usize,
    comps: Vec<Jet>,
}

/// Flat index of a multi-index.
pub fn flat(ix: &[usize]) -> usize {
    ix.iter().enumerate().map(|(k, &i)| i << k).sum()
}

/// Multi-index of a flat index.
pub fn unflat(f: usize, rank: usize) -> Vec<usize> {
    (0..rank).map(|k| (f >> k) & 1).collect()
}

impl TensorJet {
    pub fn zeros(rank: usize, order: usize) -> Self {
        TensorJet {
            rank,
            comps: vec![Jet::zero(order); 1 << rank],
        }
    }

    pub fn from_comps(rank: usize, comps: Vec<Jet>) -> Self {
        assert_eq!(comps.len(), 1 << rank);
        let order = comps.iter().map(|c| c.order()).min().unwrap_or(0);
        TensorJet {
            rank,
            comps: comps.into_iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn scalar(j: Jet) -> Self {
        TensorJet {
            rank: 0,
            comps: vec![j],
        }
    }

    /// Symmetric 2-tensor from its three independent components.
    pub fn sym2(s11: Jet, s12: Jet, s22: Jet) -> Self {
        Self::from_comps(2, vec![s11, s12, s12, s22])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.comps[0].order()
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub fn comp(&self, f: usize) -> &Jet {
        &self.comps[f]
    }

    pub fn get(&self, ix: &[usize]) -> &Jet {
        &self.comps[flat(ix)]
    }

    pub fn set(&mut self, ix: &[usize], j: Jet) {
        let f = flat(ix);
        self.comps[f] = j;
    }

    pub fn comp_mut(&mut self, f: usize) -> &mut Jet {
        &mut self.comps[f]
    }

    /// Point values of the components.
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.value()).collect()
    }

    /// 2x2 matrix of values of a rank-2 tensor.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        assert_eq!(self.rank, 2);
        let v = self.values();
        [[v[0], v[2]], [v[1], v[3]]]
    }

    pub fn truncate(&self, order: usize) -> Self {
        TensorJet {
            rank: self.rank,
            comps: self.comps.iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        TensorJet {
            rank: self.rank,
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
        }
    }

    pub fn mul_jet(&self, f: &Jet) -> Self {
        TensorJet {
            rank: self.rank,
            comps: self.comps.iter().map(|c| *c * *f).collect(),
        }
    }

    pub fn add(&self, o: &TensorJet) -> Self {
        assert_eq!(self.rank, o.rank, "rank mismatch in tensor sum");
        TensorJet {
            rank: self.rank,
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, o: &TensorJet) -> Self {
        self.add(&o.scale(-1.0))
    }

    /// Partial derivative of every component along coordinate `i`.
    pub fn d(&self, i: usize) -> Self {
        TensorJet {
            rank: self.rank,
            comps: self.comps.iter().map(|c| c.d(i)).collect(),
        }
    }

    /// `(a ⊗ b)`, slots of `a` first.
    pub fn tensor(&self, o: &TensorJet) -> Self {
        let rank = self.rank + o.rank;
        let mut comps = Vec::with_capacity(1 << rank);
        for f in 0..(1usize << rank) {
            let fa = f & ((1 << self.rank) - 1);
            let fb = f >> self.rank;
            comps.push(self.comps[fa] * o.comps[fb]);
        }
        TensorJet { rank, comps }
    }

    /// Average over all permutations of the slots.
    pub fn symmetrize(&self) -> Self {
        let m = self.rank;
        if m < 2 {
            return self.clone();
        }
        let perms = permutations(m);
        let inv = 1.0 / perms.len() as f64;
        let mut out = TensorJet::zeros(m, self.order());
        for f in 0..(1usize << m) {
            let ix = unflat(f, m);
            let mut acc = Jet::zero(self.order());
            for p in &perms {
                let px: Vec<usize> = p.iter().map(|&k| ix[k]).collect();
                acc += *self.get(&px);
            }
            out.comps[f] = acc.scale(inv);
        }
        out
    }

    /// Contraction of slots `s` and `t` with an inverse metric.
    pub fn contract(&self, s: usize, t: usize, ginv: &[[Jet; 2]; 2]) -> Self {
        assert!(s < t && t < self.rank);
        let rank = self.rank - 2;
        let order = self.order().min(ginv[0][0].order());
        let mut out = TensorJet::zeros(rank, order);
        for f in 0..(1usize << rank) {
            let rest = unflat(f, rank);
            let mut acc = Jet::zero(order);
            for a in 0..2 {
                for b in 0..2 {
                    let mut ix = Vec::with_capacity(self.rank);
                    let mut it = rest.iter();
                    for k in 0..self.rank {
                        if k == s {
                            ix.push(a);
                        } else if k == t {
                            ix.push(b);
                        } else {
                            ix.push(*it.next().unwrap());
                        }
                    }
                    acc += ginv[a][b] * *self.get(&ix);
                }
            }
            out.comps[f] = acc;
        }
        out
    }

    /// Value of the tensor on `rank` copies of a coordinate vector.
    pub fn on_vector(&self, v: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for (f, c) in self.comps.iter().enumerate() {
            let mut w = c.value();
            for k in 0..self.rank {
                w *= v[(f >> k) & 1];
            }
            s += w;
        }
        s
    }

    /// Largest component value in absolute terms.
    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.value().abs()))
    }

    /// Largest difference of component values.
    pub fn max_diff(&self, o: &TensorJet) -> f64 {
        self.comps
            .iter()
            .zip(&o.comps)
            .fold(0.0, |m, (a, b)| m.max((a.value() - b.value()).abs()))
    }

    /// Largest deviation from symmetry among component values.
    pub fn asymmetry(&self) -> f64 {
        let s = self.symmetrize();
        self.max_diff(&s)
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

pub trait TensorField: Send + Sync + fmt::Debug {
    fn rank(&self) -> usize;

    /// Jet of the components at `p` to the requested order.
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet>;

    fn value(&self, p: Complex64) -> Result<TensorJet> {
        self.jet(p, 0, DiffMode::Exact)
    }
}

pub type Tensor = Arc<dyn TensorField>;

pub(crate) fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::Capability(format!(
            "derivative order {order} exceeds supported {MAX_ORDER}"
        )))
    } else {
        Ok(())
    }
}

/// Evaluates a leaf tensor from an exact point-jet evaluator, or from point
/// samples in stencil mode.
pub fn leaf_jet(
    rank: usize,
    p: Complex64,
    order: usize,
    mode: DiffMode,
    exact: impl Fn(&CJet) -> Result<TensorJet>,
) -> Result<TensorJet> {
    check_order(order)?;
    match mode {
        DiffMode::Exact => exact(&CJet::point(p, order)),
        DiffMode::Stencil { h } => {
            let n = 1usize << rank;
            if n > MAX_LEAF_COMPS {
                return Err(Error::Capability(format!("stencil leaves support rank <= 4, got {rank}")));
            }
            let jets = stencil_jets::<MAX_LEAF_COMPS>(p, order, h, |q| {
                let v = exact(&CJet::point(q, 0))?.values();
                let mut out = [0.0; MAX_LEAF_COMPS];
                out[..n].copy_from_slice(&v);
                Ok(out)
            })?;
            Ok(TensorJet::from_comps(rank, jets[..n].to_vec()))
        }
    }
}

const MAX_LEAF_COMPS: usize = 16;

/// A scalar field viewed as a rank-0 tensor.
#[derive(Debug, Clone)]
pub struct ScalarTensor(pub Scalar);

impl TensorField for ScalarTensor {
    fn rank(&self) -> usize {
        0
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        Ok(TensorJet::scalar(scalar_jet(self.0.as_ref(), p, order, mode)?))
    }
}

/// The differential `df` of a scalar field.
#[derive(Debug, Clone)]
pub struct Differential(pub Scalar);

impl TensorField for Differential {
    fn rank(&self) -> usize {
        1
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        check_order(order + 1)?;
        let f = scalar_jet(self.0.as_ref(), p, order + 1, mode)?;
        Ok(TensorJet::from_comps(1, vec![f.dx(), f.dy()]))
    }
}

/// Rotation of a 1-form by a quarter turn, `a dx + b dy -> a dy - b dx`.
/// Commutes with orientation-preserving conformal maps.
#[derive(Debug, Clone)]
pub struct QuarterTurn(pub Tensor);

impl TensorField for QuarterTurn {
    fn rank(&self) -> usize {
        1
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        let t = self.0.jet(p, order, mode)?;
        Ok(TensorJet::from_comps(1, vec![-*t.comp(1), *t.comp(0)]))
    }
}

/// Symmetrized tensor product.
#[derive(Debug, Clone)]
pub struct SymProduct(pub Tensor, pub Tensor);

impl TensorField for SymProduct {
    fn rank(&self) -> usize {
        self.0.rank() + self.1.rank()
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        let a = self.0.jet(p, order, mode)?;
        let b = self.1.jet(p, order, mode)?;
        Ok(a.tensor(&b).symmetrize())
    }
}

/// Pointwise product of a scalar field and a tensor field.
#[derive(Debug, Clone)]
pub struct ScalarTimes(pub Scalar, pub Tensor);

impl TensorField for ScalarTimes {
    fn rank(&self) -> usize {
        self.1.rank()
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        let f = scalar_jet(self.0.as_ref(), p, order, mode)?;
        Ok(self.1.jet(p, order, mode)?.mul_jet(&f))
    }
}

/// Linear combination of tensor fields of equal rank.
#[derive(Debug, Clone)]
pub struct Combination(pub Vec<(f64, Tensor)>);

impl TensorField for Combination {
    fn rank(&self) -> usize {
        self.0.first().map_or(0, |(_, t)| t.rank())
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        let mut acc: Option<TensorJet> = None;
        for (c, t) in &self.0 {
            if t.rank() != self.rank() {
                return Err(Error::Contract("rank mismatch in tensor combination".into()));
            }
            let v = t.jet(p, order, mode)?.scale(*c);
            acc = Some(match acc {
                None => v,
                Some(a) => a.add(&v),
            });
        }
        acc.ok_or_else(|| Error::Contract("empty tensor combination".into()))
    }
}

/// The hyperbolic metric `(dx^2 + dy^2)/y^2`.
#[derive(Debug, Clone, Copy)]
pub struct HyperbolicMetric;

pub fn hyperbolic_jet(z: &CJet) -> TensorJet {
    let w = (z.im * z.im).recip();
    TensorJet::sym2(w, Jet::zero(w.order()), w)
}

impl TensorField for HyperbolicMetric {
    fn rank(&self) -> usize {
        2
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        leaf_jet(2, p, order, mode, |z| Ok(hyperbolic_jet(z)))
    }
}

/// `Re(q dz^2)` for a holomorphic `q`: trace-free and divergence-free for
/// the hyperbolic metric.
#[derive(Clone)]
pub struct HolomorphicQuadratic {
    pub name: String,
    pub q: Arc<dyn Fn(&CJet) -> CJet + Send + Sync>,
}

impl HolomorphicQuadratic {
    pub fn new(name: &str, q: impl Fn(&CJet) -> CJet + Send + Sync + 'static) -> Self {
        HolomorphicQuadratic {
            name: name.to_string(),
            q: Arc::new(q),
        }
    }
}

impl fmt::Debug for HolomorphicQuadratic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HolomorphicQuadratic({})", self.name)
    }
}

impl TensorField for HolomorphicQuadratic {
    fn rank(&self) -> usize {
        2
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        leaf_jet(2, p, order, mode, |z| {
            let q = (self.q)(z);
            Ok(TensorJet::sym2(q.re, -q.im, -q.re))
        })
    }
}

/// A rank-2 symmetric tensor with polynomial coordinate components.
#[derive(Debug, Clone)]
pub struct PolynomialSym2 {
    /// Terms `(c, a, b)` for the components 11, 12 and 22.
    pub comps: [Vec<(f64, u32, u32)>; 3],
}

impl TensorField for PolynomialSym2 {
    fn rank(&self) -> usize {
        2
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        leaf_jet(2, p, order, mode, |z| {
            let eval = |terms: &Vec<(f64, u32, u32)>| {
                let mut acc = Jet::zero(z.order());
                for &(c, a, b) in terms {
                    let mut t = Jet::constant(c, z.order());
                    for _ in 0..a {
                        t = t * z.re;
                    }
                    for _ in 0..b {
                        t = t * z.im;
                    }
                    acc += t;
                }
                acc
            };
            Ok(TensorJet::sym2(
                eval(&self.comps[0]),
                eval(&self.comps[1]),
                eval(&self.comps[2]),
            ))
        })
    }
}
