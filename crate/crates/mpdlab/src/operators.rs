//! Symmetric-tensor calculus: symmetrized covariant derivative, divergence,
//! rough and Lichnerowicz Laplacians, and the operator `R = 1/2 dRic`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::DiffMode;
use crate::fuchsian::UnitTangent;
use crate::metric::{Christoffel, MetricField, MetricJet};
use crate::tensor::{check_order, unflat, Tensor, TensorField, TensorJet};

/// `(nabla T)_{k i1..im}`; the derivative index is slot 0.
pub fn covariant(t: &TensorJet, gam: &Christoffel) -> TensorJet {
    let m = t.rank();
    let order = (t.order() - 1).min(gam[0][0][0].order());
    let dt = [t.d(0), t.d(1)];
    let mut out = TensorJet::zeros(m + 1, order);
    for f in 0..(1usize << (m + 1)) {
        let ix = unflat(f, m + 1);
        let k = ix[0];
        let rest = &ix[1..];
        let mut acc = dt[k].get(rest).truncate(order);
        for j in 0..m {
            for l in 0..2 {
                let mut r = rest.to_vec();
                r[j] = l;
                acc -= gam[l][k][rest[j]] * *t.get(&r);
            }
        }
        *out.comp_mut(f) = acc;
    }
    out
}

pub fn sym_derivative_jet(t: &TensorJet, m: &MetricJet) -> TensorJet {
    covariant(t, &m.christoffel()).symmetrize()
}

pub fn divergence_jet(t: &TensorJet, m: &MetricJet) -> TensorJet {
    covariant(t, &m.christoffel()).contract(0, 1, &m.ginv).scale(-1.0)
}

/// `nabla* nabla T = -g^{ab} (nabla nabla T)_{ab...}`, nonnegative on functions.
pub fn rough_laplacian_jet(t: &TensorJet, m: &MetricJet) -> TensorJet {
    let gam = m.christoffel();
    let n1 = covariant(t, &gam);
    let n2 = covariant(&n1, &gam);
    n2.contract(0, 1, &m.ginv).scale(-1.0)
}

pub fn trace_jet(s: &TensorJet, m: &MetricJet) -> TensorJet {
    s.contract(0, 1, &m.ginv)
}

/// `S - (tr S / 2) g`.
pub fn trace_free_jet(s: &TensorJet, m: &MetricJet) -> TensorJet {
    let tr = trace_jet(s, m);
    s.sub(&m.tensor().mul_jet(&tr.comp(0).scale(0.5)))
}

/// General Lichnerowicz Laplacian
/// `nabla* nabla S + Ric o S + S o Ric - 2 R(S)` with
/// `R(S)(X, Y) = sum_i S(Rm(e_i, X) Y, e_i)`.
pub fn lichnerowicz_jet(s: &TensorJet, m: &MetricJet) -> TensorJet {
    assert_eq!(s.rank(), 2);
    let rough = rough_laplacian_jet(s, m);
    let order = rough.order();
    let riem = m.riemann();
    let ric = m.ricci();
    // Ric with one index raised: ric_up[a][b] = g^{ac} Ric_cb
    let ric_up: [[_; 2]; 2] = std::array::from_fn(|a| {
        std::array::from_fn(|b| m.ginv[a][0] * ric[0][b] + m.ginv[a][1] * ric[1][b])
    });
    let mut out = rough;
    for x in 0..2 {
        for y in 0..2 {
            let mut acc = crate::jet::Jet::zero(order);
            for a in 0..2 {
                acc += ric_up[a][x] * *s.get(&[a, y]) + *s.get(&[x, a]) * ric_up[a][y];
                for i in 0..2 {
                    for j in 0..2 {
                        acc -= (m.ginv[i][j] * riem[a][y][i][x] * *s.get(&[a, j])).scale(2.0);
                    }
                }
            }
            let f = crate::tensor::flat(&[x, y]);
            let cur = *out.comp(f);
            *out.comp_mut(f) = cur + acc;
        }
    }
    out
}

/// Hyperbolic-surface form `nabla* nabla S - 2n S + 2 tr(S) g` with `n = 2`.
pub fn lichnerowicz_hyperbolic_jet(s: &TensorJet, m: &MetricJet) -> TensorJet {
    let rough = rough_laplacian_jet(s, m);
    let tr = trace_jet(s, m);
    rough
        .sub(&s.scale(4.0))
        .add(&m.tensor().mul_jet(&tr.comp(0).scale(2.0)))
}

/// `1/4 Delta_L S - 1/2 D D* S - 1/4 nabla d tr S`, which equals half the
/// first variation of the Ricci tensor at a hyperbolic metric.
pub fn operator_r_jet(s: &TensorJet, m: &MetricJet) -> TensorJet {
    let gam = m.christoffel();
    let lich = lichnerowicz_jet(s, m);
    let div = covariant(s, &gam).contract(0, 1, &m.ginv).scale(-1.0);
    let ddiv = covariant(&div, &gam).symmetrize();
    let tr = trace_jet(s, m);
    let hess_tr = covariant(&covariant(&tr, &gam), &gam);
    lich.scale(0.25).sub(&ddiv.scale(0.5)).sub(&hess_tr.scale(0.25))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Covariant,
    SymDerivative,
    Divergence,
    RoughLaplacian,
    Lichnerowicz,
    LichnerowiczHyperbolic,
    OperatorR,
    Trace,
    TraceFree,
}

impl OpKind {
    fn extra_order(self) -> usize {
        match self {
            OpKind::Covariant | OpKind::SymDerivative | OpKind::Divergence => 1,
            OpKind::RoughLaplacian
            | OpKind::Lichnerowicz
            | OpKind::LichnerowiczHyperbolic
            | OpKind::OperatorR => 2,
            OpKind::Trace | OpKind::TraceFree => 0,
        }
    }
}

/// A differential operator applied to a tensor field, relative to a metric.
#[derive(Debug, Clone)]
pub struct Operator {
    kind: OpKind,
    inner: Tensor,
    metric: Arc<MetricField>,
}

impl Operator {
    pub fn apply(kind: OpKind, inner: Tensor, metric: Arc<MetricField>) -> Result<Tensor> {
        let r = inner.rank();
        let ok = match kind {
            OpKind::Divergence => r >= 1,
            OpKind::Lichnerowicz | OpKind::LichnerowiczHyperbolic | OpKind::OperatorR | OpKind::TraceFree => r == 2,
            OpKind::Trace => r >= 2,
            _ => true,
        };
        if !ok {
            return Err(Error::Contract(format!("{kind:?} is not defined on rank {r}")));
        }
        if kind == OpKind::OperatorR && !metric.is_base() {
            return Err(Error::Contract("operator R is defined at the hyperbolic metric only".into()));
        }
        Ok(Arc::new(Operator { kind, inner, metric }))
    }
}

impl TensorField for Operator {
    fn rank(&self) -> usize {
        let r = self.inner.rank();
        match self.kind {
            OpKind::Covariant | OpKind::SymDerivative => r + 1,
            OpKind::Divergence => r - 1,
            OpKind::Trace => r - 2,
            _ => r,
        }
    }

    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        let n = order + self.kind.extra_order();
        check_order(n)?;
        let t = self.inner.jet(p, n, mode)?;
        let m = self.metric.jet(p, n, mode)?;
        let out = match self.kind {
            OpKind::Covariant => covariant(&t, &m.christoffel()),
            OpKind::SymDerivative => sym_derivative_jet(&t, &m),
            OpKind::Divergence => divergence_jet(&t, &m),
            OpKind::RoughLaplacian => rough_laplacian_jet(&t, &m),
            OpKind::Lichnerowicz => lichnerowicz_jet(&t, &m),
            OpKind::LichnerowiczHyperbolic => lichnerowicz_hyperbolic_jet(&t, &m),
            OpKind::OperatorR => operator_r_jet(&t, &m),
            OpKind::Trace => trace_jet(&t, &m),
            OpKind::TraceFree => trace_free_jet(&t, &m),
        };
        Ok(out.truncate(order))
    }
}

pub fn sym_derivative(p: Tensor, metric: Arc<MetricField>) -> Tensor {
    Operator::apply(OpKind::SymDerivative, p, metric).expect("D is defined on every rank")
}

pub fn divergence(s: Tensor, metric: Arc<MetricField>) -> Result<Tensor> {
    Operator::apply(OpKind::Divergence, s, metric)
}

pub fn rough_laplacian(s: Tensor, metric: Arc<MetricField>) -> Tensor {
    Operator::apply(OpKind::RoughLaplacian, s, metric).expect("defined on every rank")
}

pub fn lichnerowicz(s: Tensor, metric: Arc<MetricField>) -> Result<Tensor> {
    Operator::apply(OpKind::Lichnerowicz, s, metric)
}

pub fn operator_r(s: Tensor, metric: Arc<MetricField>) -> Result<Tensor> {
    Operator::apply(OpKind::OperatorR, s, metric)
}

pub fn trace_free(s: Tensor, metric: Arc<MetricField>) -> Result<Tensor> {
    Operator::apply(OpKind::TraceFree, s, metric)
}

pub fn trace(s: Tensor, metric: Arc<MetricField>) -> Result<Tensor> {
    Operator::apply(OpKind::Trace, s, metric)
}

/// `S_x(u, ..., u)` for a coordinate vector `u` of unit length.
pub fn pi_star_vector(s: &dyn TensorField, metric: &MetricField, p: Complex64, u: [f64; 2]) -> Result<f64> {
    let g = metric.values(p)?;
    let n2 = g[0][0] * u[0] * u[0] + 2.0 * g[0][1] * u[0] * u[1] + g[1][1] * u[1] * u[1];
    if (n2.sqrt() - 1.0).abs() > 1e-10 {
        return Err(Error::Contract(format!("vector has g-norm {} instead of 1", n2.sqrt())));
    }
    Ok(s.value(p)?.on_vector(u))
}

/// `S_x(v, ..., v)` for a unit tangent given by its direction angle.
pub fn pi_star(s: &dyn TensorField, metric: &MetricField, v: &UnitTangent) -> Result<f64> {
    let p = v.z();
    let u = metric.unit_vector(p, v.theta)?;
    pi_star_vector(s, metric, p, u)
}

/// `S = S2 + S0 g` with `S2` trace-free and `S0 = tr S / 2`.
pub fn trace_decompose(s: &dyn TensorField, metric: &MetricField, p: Complex64) -> Result<(f64, [[f64; 2]; 2])> {
    if s.rank() != 2 {
        return Err(Error::Contract("trace decomposition needs rank 2".into()));
    }
    let m = metric.jet(p, 0, DiffMode::Exact)?;
    let sj = s.value(p)?;
    let s0 = trace_jet(&sj, &m).comp(0).value() / 2.0;
    let g = m.values();
    let v = sj.matrix();
    let s2 = std::array::from_fn(|i| std::array::from_fn(|j| v[i][j] - s0 * g[i][j]));
    Ok((s0, s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Analytic, PowerY, Scalar};
    use crate::fuchsian::FuchsianGroup;
    use crate::jet::CJet;
    use crate::tensor::{Differential, HolomorphicQuadratic, PolynomialSym2, ScalarTensor, ScalarTimes};
    use approx::assert_relative_eq;

    fn base() -> Arc<MetricField> {
        Arc::new(MetricField::hyperbolic(Arc::new(FuchsianGroup::genus2_octagon())))
    }

    fn poly_s() -> Tensor {
        Arc::new(PolynomialSym2 {
            comps: [
                vec![(0.3, 2, 0), (0.1, 1, 1), (-0.2, 0, 3)],
                vec![(0.5, 1, 2), (0.05, 0, 0)],
                vec![(-0.4, 3, 0), (0.2, 0, 2)],
            ],
        })
    }

    #[test]
    fn rough_laplacian_of_power_of_y() {
        let g = base();
        for s in [0.5, 2.0, -1.3] {
            let f: Tensor = Arc::new(ScalarTensor(Arc::new(PowerY(s))));
            let lap = rough_laplacian(f, g.clone());
            let p = Complex64::new(0.2, 1.7);
            let v = lap.value(p).unwrap().comp(0).value();
            assert_relative_eq!(v, s * (1.0 - s) * 1.7f64.powf(s), epsilon = 1e-12);
        }
    }

    #[test]
    fn divergence_of_metric_vanishes() {
        let g = base();
        let d = divergence(g.as_tensor(), g.clone()).unwrap();
        let v = d.value(Complex64::new(-0.3, 0.6)).unwrap();
        assert!(v.max_abs_value() < 1e-12);
    }

    #[test]
    fn d_of_scalar_is_differential() {
        let g = base();
        let f: Scalar = Arc::new(Analytic::new("x^2 y", |z: &CJet| z.re * z.re * z.im));
        let d = sym_derivative(Arc::new(ScalarTensor(f.clone())), g);
        let p = Complex64::new(0.7, 1.2);
        let a = d.value(p).unwrap();
        let b = Differential(f).value(p).unwrap();
        assert!(a.max_diff(&b) < 1e-14);
    }

    #[test]
    fn lichnerowicz_general_and_hyperbolic_forms_agree_at_base() {
        let g = base();
        let s = poly_s();
        let a = lichnerowicz(s.clone(), g.clone()).unwrap();
        let b = Operator::apply(OpKind::LichnerowiczHyperbolic, s, g).unwrap();
        for p in [Complex64::new(0.1, 0.9), Complex64::new(-1.2, 2.5)] {
            let (va, vb) = (a.value(p).unwrap(), b.value(p).unwrap());
            assert!(va.max_diff(&vb) < 1e-10 * (1.0 + va.max_abs_value()), "{va:?} {vb:?}");
        }
    }

    #[test]
    fn lichnerowicz_on_conformal_multiple() {
        let g = base();
        let f: Scalar = Arc::new(Analytic::new("sin x cos y", |z: &CJet| z.re.sin() * z.im.cos()));
        let s: Tensor = Arc::new(ScalarTimes(f.clone(), g.as_tensor()));
        let lap_f = rough_laplacian(Arc::new(ScalarTensor(f)), g.clone());
        let l = lichnerowicz(s, g.clone()).unwrap();
        let p = Complex64::new(0.4, 1.1);
        let lv = l.value(p).unwrap();
        let expect = g.as_tensor().value(p).unwrap().scale(lap_f.value(p).unwrap().comp(0).value());
        assert!(lv.max_diff(&expect) < 1e-11);
    }

    #[test]
    fn tt_tensor_is_eigen_with_minus_two() {
        let g = base();
        let q: Tensor = Arc::new(HolomorphicQuadratic::new("z^2 + 0.3 z", |z: &CJet| {
            *z * *z + z.scale(0.3)
        }));
        let p = Complex64::new(0.3, 0.8);
        let sv = q.value(p).unwrap();
        let div = divergence(q.clone(), g.clone()).unwrap().value(p).unwrap();
        assert!(div.max_abs_value() < 1e-12);
        let l = lichnerowicz(q.clone(), g.clone()).unwrap().value(p).unwrap();
        assert!(l.max_diff(&sv.scale(-2.0)) < 1e-11);
        let r = operator_r(q, g).unwrap().value(p).unwrap();
        assert!(r.max_diff(&sv.scale(-0.5)) < 1e-11);
    }

    #[test]
    fn operator_r_is_half_ricci_variation() {
        let g = base();
        let s = poly_s();
        let p = Complex64::new(0.2, 1.4);
        let r = operator_r(s.clone(), g.clone()).unwrap().value(p).unwrap();
        let eps = 1e-4;
        let ric = |e: f64| {
            let h: Tensor = Arc::new(crate::tensor::Combination(vec![(e, s.clone())]));
            let m = MetricField::general(g.group().clone(), h).unwrap();
            m.jet(p, 2, DiffMode::Exact).unwrap().ricci()
        };
        let (rp, rm) = (ric(eps), ric(-eps));
        for i in 0..2 {
            for j in 0..2 {
                let d = (rp[i][j].value() - rm[i][j].value()) / (2.0 * eps);
                assert_relative_eq!(r.get(&[i, j]).value(), 0.5 * d, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn operator_r_rejects_perturbed_base() {
        let g = base();
        let scaled = Arc::new(g.scaled(2.0));
        assert!(matches!(operator_r(poly_s(), scaled), Err(Error::Contract(_))));
    }

    #[test]
    fn trace_decompose_of_metric() {
        let g = base();
        let p = Complex64::new(0.0, 2.0);
        let (s0, s2) = trace_decompose(g.as_tensor().as_ref(), &g, p).unwrap();
        assert_relative_eq!(s0, 1.0, epsilon = 1e-14);
        assert!(s2.iter().flatten().all(|v| v.abs() < 1e-14));
    }
}
