//! Seeded construction of group-invariant test fields and the approximate
//! solenoidal projection `S - D p`.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{AutomorphicBumps, BumpSpec, DiffMode, Scalar};
use crate::fuchsian::{to_disk, DirichletPolygon, FuchsianGroup, GroupElement};
use crate::jet::CJet;
use crate::metric::MetricField;
use crate::operators::{divergence, sym_derivative, trace_free, OpKind, Operator};
use crate::tensor::{leaf_jet, Combination, Differential, QuarterTurn, ScalarTimes, SymProduct, Tensor, TensorField, TensorJet};

/// Default truncation word length for automorphized bumps.
pub const DEFAULT_TRUNCATION: usize = 4;

/// A point of the Dirichlet polygon at a random angle and at a random
/// fraction (at most `frac`) of the distance to the boundary.
pub fn random_domain_point<R: Rng>(poly: &DirichletPolygon, rng: &mut R, frac: f64) -> Complex64 {
    let alpha = rng.gen_range(0.0..TAU);
    let side = poly.side_at(alpha);
    let r = poly.r_max(alpha, side) * frac * rng.gen_range(0.0f64..1.0).sqrt();
    poly.point(r, alpha)
}

/// Default range of bump radii.
pub const DEFAULT_RADII: Range<f64> = 0.6..1.2;

pub fn random_bump<R: Rng>(poly: &DirichletPolygon, rng: &mut R, amplitude: f64, radii: Range<f64>) -> BumpSpec {
    let z = random_domain_point(poly, rng, 0.9);
    BumpSpec {
        center: [z.re, z.im],
        radius: rng.gen_range(radii),
        amplitude: amplitude * rng.gen_range(-1.0..1.0),
    }
}

/// Sum of `n` automorphized bumps with amplitudes in `[-amplitude, amplitude]`.
pub fn random_scalar<R: Rng>(group: &Arc<FuchsianGroup>, rng: &mut R, n: usize, amplitude: f64) -> Result<Scalar> {
    random_scalar_with_radii(group, rng, n, amplitude, DEFAULT_RADII)
}

pub fn random_scalar_with_radii<R: Rng>(
    group: &Arc<FuchsianGroup>,
    rng: &mut R,
    n: usize,
    amplitude: f64,
    radii: Range<f64>,
) -> Result<Scalar> {
    let poly = DirichletPolygon::new(group)?;
    let bumps = (0..n).map(|_| random_bump(&poly, rng, amplitude, radii.clone())).collect();
    Ok(Arc::new(AutomorphicBumps::new(group.clone(), bumps, DEFAULT_TRUNCATION)?))
}

/// `d psi1 + J d psi2` with `J` the quarter turn.
pub fn random_one_form<R: Rng>(group: &Arc<FuchsianGroup>, rng: &mut R) -> Result<Tensor> {
    let a: Tensor = Arc::new(Differential(random_scalar(group, rng, 2, 1.0)?));
    let b: Tensor = Arc::new(QuarterTurn(Arc::new(Differential(random_scalar(group, rng, 2, 1.0)?))));
    Ok(Arc::new(Combination(vec![(1.0, a), (1.0, b)])))
}

/// Random invariant symmetric 2-tensor: a conformal part plus symmetric
/// products of (rotated) differentials of bump sums.
pub fn random_sym2<R: Rng>(group: &Arc<FuchsianGroup>, rng: &mut R, trace_free_part: bool) -> Result<Tensor> {
    random_sym2_with_radii(group, rng, trace_free_part, DEFAULT_RADII)
}

pub fn random_sym2_with_radii<R: Rng>(
    group: &Arc<FuchsianGroup>,
    rng: &mut R,
    trace_free_part: bool,
    radii: Range<f64>,
) -> Result<Tensor> {
    let base = Arc::new(MetricField::hyperbolic(group.clone()));
    let f = random_scalar_with_radii(group, rng, 2, 1.0, radii.clone())?;
    let d1: Tensor = Arc::new(Differential(random_scalar_with_radii(group, rng, 2, 1.0, radii.clone())?));
    let d2: Tensor = Arc::new(Differential(random_scalar_with_radii(group, rng, 2, 1.0, radii)?));
    let j2: Tensor = Arc::new(QuarterTurn(d2.clone()));
    let s: Tensor = Arc::new(Combination(vec![
        (1.0, Arc::new(ScalarTimes(f, base.as_tensor())) as Tensor),
        (1.0, Arc::new(SymProduct(d1.clone(), d2)) as Tensor),
        (0.5, Arc::new(SymProduct(d1, j2)) as Tensor),
    ]));
    if trace_free_part {
        trace_free(s, base)
    } else {
        Ok(s)
    }
}

/// Distinct group elements given by words of length at most `max_len`,
/// deduplicated by the image of the Dirichlet center.
pub fn group_ball(group: &FuchsianGroup, max_len: usize) -> Vec<GroupElement> {
    let center = group.dirichlet_center();
    let key = |g: &GroupElement| {
        let w = to_disk(center, g.apply(center));
        ((w.re * 1e8).round() as i64, (w.im * 1e8).round() as i64)
    };
    let mut seen = HashSet::new();
    seen.insert(key(&GroupElement::identity()));
    let mut out = vec![GroupElement::identity()];
    let mut frontier = vec![GroupElement::identity()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for g in &frontier {
            for (_, h) in group.closed_generators() {
                let e = *h * *g;
                if seen.insert(key(&e)) {
                    next.push(e);
                }
            }
        }
        out.extend_from_slice(&next);
        frontier = next;
    }
    out
}

/// Truncated Poincare series `Q(z) = sum_gamma sum_k a_k (gamma z - conj(w_k))^{-4} gamma'(z)^2`
/// of a quadratic differential, viewed as the tensor `Re(Q dz^2)`.
///
/// Every partial sum is holomorphic, so the tensor is exactly trace-free and
/// divergence-free for the hyperbolic metric; invariance under the group
/// holds up to the truncation error, see [`PoincareQuadratic::automorphy_defect`].
#[derive(Clone)]
pub struct PoincareQuadratic {
    group: Arc<FuchsianGroup>,
    poles: Vec<(Complex64, Complex64)>,
    truncation: usize,
    /// `(A, B, a)` with `a (A z + B)^{-4}` one term of the series.
    terms: Vec<(Complex64, Complex64, Complex64)>,
}

impl fmt::Debug for PoincareQuadratic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoincareQuadratic")
            .field("poles", &self.poles)
            .field("truncation", &self.truncation)
            .field("terms", &self.terms.len())
            .finish()
    }
}

impl PoincareQuadratic {
    pub fn poles(&self) -> &[(Complex64, Complex64)] {
        &self.poles
    }

    /// `poles` are `(w_k, a_k)` with `w_k` in the upper half-plane.
    pub fn new(group: Arc<FuchsianGroup>, poles: Vec<(Complex64, Complex64)>, truncation: usize) -> Result<Self> {
        if poles.iter().any(|p| !(p.0.im > 0.0)) {
            return Err(Error::Contract("poles must lie in the upper half-plane".into()));
        }
        let ball = group_ball(&group, truncation);
        let mut terms = Vec::with_capacity(ball.len() * poles.len());
        for g in &ball {
            for &(w, amp) in &poles {
                let c0 = w.conj();
                terms.push((g.a - c0 * g.c, g.b - c0 * g.d, amp));
            }
        }
        Ok(PoincareQuadratic {
            group,
            poles,
            truncation,
            terms,
        })
    }

    /// Taylor coefficients `q_k = Q^{(k)}(z) / k!` for `k <= order`.
    pub fn taylor(&self, z: Complex64, order: usize) -> Vec<Complex64> {
        let mut q = vec![Complex64::new(0.0, 0.0); order + 1];
        for &(a, b, amp) in &self.terms {
            let u = (a * z + b).inv();
            let r = a * u;
            // (A z + B)^{-4-k} A^k times (-1)^k binom(k + 3, 3)
            let mut t = amp * u * u * u * u;
            for (k, qk) in q.iter_mut().enumerate() {
                *qk += t;
                let kf = k as f64;
                t *= -r * ((kf + 4.0) / (kf + 1.0));
            }
        }
        q
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        self.taylor(z, 0)[0]
    }

    /// Largest violation of `Q(gamma z) gamma'(z)^2 = Q(z)` over the points
    /// and the side pairings, relative to the largest `|Q|` there, both in
    /// the hyperbolic norm `y^2 |Q|`.
    pub fn automorphy_defect(&self, points: &[Complex64]) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for &z in points {
            let q = self.value(z);
            scale = scale.max(q.norm() * z.im * z.im);
            for (_, g) in self.group.closed_generators() {
                let den = g.c * z + g.d;
                let pulled = self.value(g.apply(z)) / (den * den * den * den);
                worst = worst.max((pulled - q).norm() * z.im * z.im);
            }
        }
        worst / scale.max(1e-300)
    }
}

impl TensorField for PoincareQuadratic {
    fn rank(&self) -> usize {
        2
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        leaf_jet(2, p, order, mode, |z| {
            let z0 = z.value();
            let coeffs = self.taylor(z0, z.order());
            let dz = z.add_c(-z0);
            let mut q = CJet::constant(coeffs[z.order()], z.order());
            for c in coeffs[..z.order()].iter().rev() {
                q = (q * dz).add_c(*c);
            }
            Ok(TensorJet::sym2(q.re, -q.im, -q.re))
        })
    }
}

/// Poincare series with `n` poles at random polygon points and random
/// complex amplitudes of modulus at most one.
pub fn random_holomorphic_quadratic<R: Rng>(
    group: &Arc<FuchsianGroup>,
    rng: &mut R,
    n: usize,
    truncation: usize,
) -> Result<PoincareQuadratic> {
    let poly = DirichletPolygon::new(group)?;
    let poles = (0..n)
        .map(|_| {
            let w = random_domain_point(&poly, rng, 0.8);
            let a = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..TAU));
            (w, a)
        })
        .collect();
    PoincareQuadratic::new(group.clone(), poles, truncation)
}

/// Quadrature nodes `(z, area weight)` for the hyperbolic area of the polygon.
pub type AreaNodes = [(Complex64, f64)];

/// `sum_w g^{ij} a_i b_j` over the nodes.
fn inner_1form(a: &[[f64; 2]], b: &[[f64; 2]], ginv: &[[[f64; 2]; 2]], nodes: &AreaNodes) -> f64 {
    let mut acc = 0.0;
    for k in 0..nodes.len() {
        let gi = &ginv[k];
        let (x, y) = (a[k], b[k]);
        acc += nodes[k].1
            * (gi[0][0] * x[0] * y[0] + gi[0][1] * (x[0] * y[1] + x[1] * y[0]) + gi[1][1] * x[1] * y[1]);
    }
    acc
}

fn sample_1form(t: &dyn TensorField, nodes: &AreaNodes) -> Result<Vec<[f64; 2]>> {
    nodes
        .iter()
        .map(|(z, _)| {
            let v = t.jet(*z, 0, DiffMode::Exact)?;
            Ok([v.comp(0).value(), v.comp(1).value()])
        })
        .collect()
}

/// `||D* S||_{L^2}` over the nodes.
pub fn codifferential_norm(s: Tensor, metric: &Arc<MetricField>, nodes: &AreaNodes) -> Result<f64> {
    let ginv: Vec<_> = nodes.iter().map(|(z, _)| metric.jet(*z, 0, DiffMode::Exact).map(|m| m.inverse_values())).collect::<Result<_>>()?;
    let d = sample_1form(divergence(s, metric.clone())?.as_ref(), nodes)?;
    Ok(inner_1form(&d, &d, &ginv, nodes).max(0.0).sqrt())
}

/// 1-forms `d psi_k` and `J d psi_k` for unit bumps of the given radius
/// centered at points spread over the polygon.
pub fn bump_one_form_basis(group: &Arc<FuchsianGroup>, n_rings: usize, per_ring: usize, radius: f64) -> Result<Vec<Tensor>> {
    let poly = DirichletPolygon::new(group)?;
    let mut centers = vec![poly.center()];
    for ring in 1..=n_rings {
        let frac = ring as f64 / (n_rings as f64 + 0.5);
        for k in 0..per_ring {
            let alpha = (k as f64 + 0.5 * (ring % 2) as f64) * TAU / per_ring as f64;
            let side = poly.side_at(alpha);
            centers.push(poly.point(poly.r_max(alpha, side) * frac, alpha));
        }
    }
    let mut out: Vec<Tensor> = Vec::with_capacity(2 * centers.len());
    for c in centers {
        let psi: Scalar = Arc::new(AutomorphicBumps::new(
            group.clone(),
            vec![BumpSpec {
                center: [c.re, c.im],
                radius,
                amplitude: 1.0,
            }],
            DEFAULT_TRUNCATION,
        )?);
        let d: Tensor = Arc::new(Differential(psi));
        out.push(d.clone());
        out.push(Arc::new(QuarterTurn(d)));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SolenoidalProjection {
    pub tensor: Tensor,
    pub coefficients: Vec<f64>,
    /// `||D* S_raw||`.
    pub residual_before: f64,
    /// `||D* (S_raw - D p)||`, recomputed from the projected field.
    pub residual_after: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub residual_before: f64,
    pub residual_after: f64,
    pub relative: f64,
}

impl SolenoidalProjection {
    pub fn relative_residual(&self) -> f64 {
        self.residual_after / self.residual_before
    }

    pub fn summary(&self) -> ProjectionSummary {
        ProjectionSummary {
            residual_before: self.residual_before,
            residual_after: self.residual_after,
            relative: self.relative_residual(),
        }
    }
}

/// Least-squares minimizer of `||D*(S - sum c_k D p_k)||^2` over the basis,
/// by the normal equations. With `trace_free_part` the trace-free part of
/// `D p_k` is subtracted so a trace-free input stays trace-free.
pub fn solenoidal_projection(
    s: Tensor,
    metric: &Arc<MetricField>,
    basis: &[Tensor],
    nodes: &AreaNodes,
    trace_free_part: bool,
) -> Result<SolenoidalProjection> {
    if s.rank() != 2 || basis.iter().any(|p| p.rank() != 1) {
        return Err(Error::Contract("projection needs a rank-2 field and a 1-form basis".into()));
    }
    let ginv: Vec<_> = nodes
        .iter()
        .map(|(z, _)| metric.jet(*z, 0, DiffMode::Exact).map(|m| m.inverse_values()))
        .collect::<Result<_>>()?;
    let dirs: Vec<Tensor> = basis
        .iter()
        .map(|p| {
            let dp = sym_derivative(p.clone(), metric.clone());
            if trace_free_part {
                Operator::apply(OpKind::TraceFree, dp, metric.clone())
            } else {
                Ok(dp)
            }
        })
        .collect::<Result<_>>()?;
    let a: Vec<Vec<[f64; 2]>> = dirs
        .iter()
        .map(|d| sample_1form(divergence(d.clone(), metric.clone())?.as_ref(), nodes))
        .collect::<Result<_>>()?;
    let b = sample_1form(divergence(s.clone(), metric.clone())?.as_ref(), nodes)?;
    let n = dirs.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        rhs[i] = inner_1form(&a[i], &b, &ginv, nodes);
        for j in 0..=i {
            let v = inner_1form(&a[i], &a[j], &ginv, nodes);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let c = m
        .svd(true, true)
        .solve(&rhs, 1e-12 * rhs.amax().max(1e-300))
        .map_err(|e| Error::Numerical(format!("normal equations: {e}")))?;
    let mut terms: Vec<(f64, Tensor)> = vec![(1.0, s.clone())];
    terms.extend(dirs.iter().zip(c.iter()).map(|(d, &ck)| (-ck, d.clone())));
    let proj: Tensor = Arc::new(Combination(terms));
    Ok(SolenoidalProjection {
        residual_before: codifferential_norm(s, metric, nodes)?,
        residual_after: codifferential_norm(proj.clone(), metric, nodes)?,
        tensor: proj,
        coefficients: c.iter().copied().collect(),
    })
}
