//! Fiber and unit-tangent-bundle quadrature: Liouville integrals, mean root
//! curvature, Pesin entropy, the dimension-3 curvature identities and the
//! Hessian of the mean root curvature.

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CurvatureSample, Error, Result};
use crate::fields::DiffMode;
use crate::fuchsian::{DirichletPolygon, FuchsianGroup, GroupElement, UnitTangent};
use crate::geodesic::{riccati_unstable, unstable_jacobian};
use crate::metric::MetricField;
use crate::operators::rough_laplacian;
use crate::tensor::{Combination, Tensor, TensorField};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n).expect("at least one node");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

/// Probability rule on `S^1` (`dim = 1`) or `S^2` (`dim = 2`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereQuadrature {
    pub dim: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Spherical polynomials up to this degree are integrated exactly.
    pub degree: usize,
}

impl SphereQuadrature {
    /// `n` equally spaced angles.
    pub fn circle(n: usize) -> Self {
        let nodes = (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
        SphereQuadrature {
            dim: 1,
            nodes,
            weights: vec![1.0 / n as f64; n],
            degree: n - 1,
        }
    }

    /// Gauss-Legendre in `cos(colatitude)` times uniform longitude.
    pub fn sphere(n_theta: usize, n_phi: usize) -> Self {
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (z, w) in gauss_legendre(n_theta) {
            let rho = (1.0 - z * z).sqrt();
            for k in 0..n_phi {
                let a = TAU * k as f64 / n_phi as f64;
                nodes.push([rho * a.cos(), rho * a.sin(), z]);
                weights.push(0.5 * w / n_phi as f64);
            }
        }
        SphereQuadrature {
            dim: 2,
            nodes,
            weights,
            degree: (2 * n_theta - 1).min(n_phi - 1),
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64; 3]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(v, w)| w * f(v)).sum()
    }

    /// Largest error over all monomials up to the declared degree.
    pub fn exactness_error(&self) -> f64 {
        let mut worst = 0.0f64;
        let d = self.degree as u32;
        for a in 0..=d {
            for b in 0..=d - a {
                let cs: Vec<u32> = if self.dim == 2 { (0..=d - a - b).collect() } else { vec![0] };
                for c in cs {
                    let q = self.integrate(|v| v[0].powi(a as i32) * v[1].powi(b as i32) * v[2].powi(c as i32));
                    worst = worst.max((q - monomial_mean(self.dim, a, b, c)).abs());
                }
            }
        }
        worst
    }
}

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Mean of `x^a y^b z^c` over the unit sphere of the given dimension.
pub fn monomial_mean(dim: usize, a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    let num = double_factorial(a as i64 - 1) * double_factorial(b as i64 - 1) * double_factorial(c as i64 - 1);
    let deg = (a + b + c) as i64;
    if dim == 1 {
        num / double_factorial(deg)
    } else {
        num / double_factorial(deg + 1)
    }
}

/// Hyperbolic-area quadrature of the Dirichlet polygon in geodesic polar
/// coordinates about its center, sector by sector.
///
/// The radial extent is singular just past each vertex as a function of the
/// angle, so the angle is parametrized by the arclength `s` along the side
/// from the foot of the perpendicular: `tan(alpha - beta) = tanh s / sinh d`
/// and `cosh r_max = cosh d cosh s`, both analytic in a wide strip.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaseGrid {
    pub n_r: usize,
    pub n_alpha: usize,
    pub nodes: Vec<(Complex64, f64)>,
}

impl BaseGrid {
    pub fn new(group: &FuchsianGroup, n_r: usize, n_alpha: usize) -> Result<Self> {
        Self::build(group, n_r, n_alpha, false)
    }

    /// The same rule on another fundamental domain: each sector is moved by
    /// the inverse of the side pairing of its side. Integrals of invariant
    /// functions are unchanged; for non-invariant ones the change measures
    /// the invariance defect.
    pub fn translated(group: &FuchsianGroup, n_r: usize, n_alpha: usize) -> Result<Self> {
        Self::build(group, n_r, n_alpha, true)
    }

    fn build(group: &FuchsianGroup, n_r: usize, n_alpha: usize, translate: bool) -> Result<Self> {
        let poly = DirichletPolygon::new(group)?;
        let gr = gauss_legendre(n_r);
        let ga = gauss_legendre(n_alpha);
        let mut nodes = Vec::new();
        for &(lo, hi, side) in poly.sectors() {
            let (beta, th) = poly.side(side);
            let pairing = if translate {
                group.closed_generators()[side].1.inverse()
            } else {
                GroupElement::identity()
            };
            let d = th.atanh();
            let (sd, cd) = (d.sinh(), d.cosh());
            let plo = crate::fuchsian::wrap_angle(lo - beta);
            let phi = plo + (hi - lo);
            let (sa, sb) = ((sd * plo.tan()).atanh(), (sd * phi.tan()).atanh());
            for &(us, ws) in &ga {
                let s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * us;
                let ts = s.tanh();
                let alpha = beta + (ts / sd).atan();
                let da = (1.0 - ts * ts) / sd / (1.0 + ts * ts / (sd * sd));
                let rm = (cd * s.cosh()).acosh();
                for &(ur, wr) in &gr {
                    let r = 0.5 * rm * (1.0 + ur);
                    let w = 0.25 * (sb - sa) * rm * da * ws * wr * r.sinh();
                    nodes.push((pairing.apply(poly.point(r, alpha)), w));
                }
            }
        }
        Ok(BaseGrid { n_r, n_alpha, nodes })
    }

    /// Hyperbolic area of the polygon.
    pub fn area(&self) -> f64 {
        self.nodes.iter().map(|n| n.1).sum()
    }
}

/// `sqrt(det g) / sqrt(det g0)` at a point.
#[inline]
fn density(g: &[[f64; 2]; 2], z: Complex64) -> f64 {
    (g[0][0] * g[1][1] - g[0][1] * g[1][0]).sqrt() * z.im * z.im
}

/// Area nodes of `metric`: hyperbolic weights times the density.
pub fn metric_area_nodes(metric: &MetricField, base: &BaseGrid) -> Result<Vec<(Complex64, f64)>> {
    base.nodes
        .iter()
        .map(|&(z, w)| Ok((z, w * density(&metric.values(z)?, z))))
        .collect()
}

/// One node of a unit-tangent-bundle rule.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SmNode {
    pub tangent: UnitTangent,
    /// Coordinate components of the unit vector.
    pub v: [f64; 2],
    pub weight: f64,
}

/// Liouville probability rule: metric area over the polygon times an
/// equally spaced fiber rule in a `g`-orthonormal frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SMQuadrature {
    pub fiber: SphereQuadrature,
    pub nodes: Vec<SmNode>,
    pub volume: f64,
}

/// A `g`-orthonormal frame `(e1, e2)` with `e1` along the x-axis.
pub fn orthonormal_frame(g: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let s = g[0][0].sqrt();
    let t = (g[0][0] * det).sqrt();
    [[1.0 / s, 0.0], [-g[0][1] / t, g[0][0] / t]]
}

impl SMQuadrature {
    pub fn new(metric: &MetricField, base: &BaseGrid, fiber_n: usize) -> Result<Self> {
        let fiber = SphereQuadrature::circle(fiber_n);
        let mut nodes = Vec::with_capacity(base.nodes.len() * fiber_n);
        let mut volume = 0.0;
        for &(z, w0) in &base.nodes {
            let g = metric.values(z)?;
            let wa = w0 * density(&g, z);
            volume += wa;
            let [e1, e2] = orthonormal_frame(&g);
            for (f, fw) in fiber.nodes.iter().zip(&fiber.weights) {
                let v = [f[0] * e1[0] + f[1] * e2[0], f[0] * e1[1] + f[1] * e2[1]];
                nodes.push(SmNode {
                    tangent: UnitTangent::at(z, v[1].atan2(v[0])),
                    v,
                    weight: wa * fw,
                });
            }
        }
        for n in nodes.iter_mut() {
            n.weight /= volume;
        }
        Ok(SMQuadrature { fiber, nodes, volume })
    }

    pub fn mass(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

pub fn liouville_integral(rule: &SMQuadrature, mut f: impl FnMut(&SmNode) -> Result<f64>) -> Result<f64> {
    let mut acc = 0.0;
    for n in &rule.nodes {
        acc += n.weight * f(n)?;
    }
    Ok(acc)
}

/// `int_SM S(v, v) dm_g`.
pub fn liouville_pi2(rule: &SMQuadrature, s: &dyn TensorField) -> Result<f64> {
    let mut last: Option<(Complex64, crate::tensor::TensorJet)> = None;
    liouville_integral(rule, |n| {
        let z = n.tangent.z();
        if last.as_ref().is_none_or(|l| l.0 != z) {
            last = Some((z, s.value(z)?));
        }
        Ok(last.as_ref().expect("cached").1.on_vector(n.v))
    })
}

/// `(1 / (n Vol_g)) int tr_g S dvol_g` on the same base grid.
pub fn trace_average(metric: &MetricField, s: &dyn TensorField, base: &BaseGrid) -> Result<f64> {
    let mut acc = 0.0;
    let mut vol = 0.0;
    for &(z, w0) in &base.nodes {
        let g = metric.values(z)?;
        let wa = w0 * density(&g, z);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let m = s.value(z)?.matrix();
        let tr = (g[1][1] * m[0][0] - 2.0 * g[0][1] * m[0][1] + g[0][0] * m[1][1]) / det;
        acc += wa * tr;
        vol += wa;
    }
    Ok(acc / (2.0 * vol))
}

/// Largest hyperbolic norm `y^2 |S|` of a rank-2 field over the grid nodes.
pub fn sup_norm(s: &dyn TensorField, base: &BaseGrid) -> Result<f64> {
    let mut m = 0.0f64;
    for &(z, _) in &base.nodes {
        let v = s.value(z)?.matrix();
        let n = v.iter().flatten().map(|x| x * x).sum::<f64>().sqrt() * z.im * z.im;
        m = m.max(n);
    }
    Ok(m)
}

/// `kappa(g) = int sqrt(-K) dm_g`; fiber independent in dimension 2.
pub fn mean_root_curvature(metric: &MetricField, base: &BaseGrid) -> Result<f64> {
    let mut acc = 0.0;
    let mut vol = 0.0;
    let mut bad = Vec::new();
    for &(z, w0) in &base.nodes {
        let g = metric.values(z)?;
        let k = metric.gauss_curvature(z)?;
        if !(k < 0.0) {
            bad.push(CurvatureSample {
                x: z.re,
                y: z.im,
                curvature: k,
            });
            continue;
        }
        let wa = w0 * density(&g, z);
        acc += wa * (-k).sqrt();
        vol += wa;
    }
    if !bad.is_empty() {
        bad.truncate(5);
        return Err(Error::CurvatureSign { bound: 0.0, worst: bad });
    }
    Ok(acc / vol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyOptions {
    pub burn_in: f64,
    pub step: f64,
    /// Length of the Birkhoff orbit; zero disables it.
    pub birkhoff_time: f64,
    pub birkhoff_discard: f64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions {
            burn_in: crate::geodesic::DEFAULT_BURN_IN,
            step: 0.02,
            birkhoff_time: 2000.0,
            birkhoff_discard: 50.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Space average of `J^u` over the rule.
    pub space: f64,
    /// Time average of `u` along one long orbit.
    pub birkhoff: Option<f64>,
    pub nodes: usize,
    pub options: EntropyOptions,
}

/// Pesin-formula entropy `int J^u dm_g`, with a Birkhoff cross-check.
pub fn liouville_entropy(metric: &MetricField, rule: &SMQuadrature, opts: &EntropyOptions) -> Result<EntropyReport> {
    let space = liouville_integral(rule, |n| unstable_jacobian(metric, n.tangent, opts.burn_in, opts.step))?;
    let birkhoff = if opts.birkhoff_time > 0.0 {
        let poly = DirichletPolygon::new(metric.group())?;
        let start = UnitTangent::at(poly.point(0.3, 0.7), 1.3);
        let tr = riccati_unstable(metric, start, opts.birkhoff_discard, opts.birkhoff_time, opts.step, 1.0)?;
        Some(tr.average())
    } else {
        None
    };
    Ok(EntropyReport {
        space,
        birkhoff,
        nodes: rule.nodes.len(),
        options: *opts,
    })
}

pub type Mat3 = [[f64; 3]; 3];

/// A symmetric 3x3 tensor at a point with identity metric, and the Ricci
/// eigenvalue `mu` of the variation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTensor3 {
    pub s: Mat3,
    pub mu: f64,
}

pub fn trace3(s: &Mat3) -> f64 {
    s[0][0] + s[1][1] + s[2][2]
}

pub fn quad3(s: &Mat3, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (0..3).map(|j| a[i] * s[i][j] * b[j]).sum::<f64>()).sum()
}

/// Deterministic orthonormal basis of `v^perp` for a unit `v`.
pub fn normal_basis(v: &[f64; 3]) -> [[f64; 3]; 2] {
    let a = if v[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d: f64 = (0..3).map(|i| a[i] * v[i]).sum();
    let mut e1 = [a[0] - d * v[0], a[1] - d * v[1], a[2] - d * v[2]];
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|c| *c /= n);
    let e2 = [
        v[1] * e1[2] - v[2] * e1[1],
        v[2] * e1[0] - v[0] * e1[2],
        v[0] * e1[1] - v[1] * e1[0],
    ];
    [e1, e2]
}

fn check_trace_free(s: &Mat3) -> Result<()> {
    let scale = s.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    if trace3(s).abs() > 1e-12 * scale {
        return Err(Error::Contract(format!("tensor has trace {}", trace3(s))));
    }
    Ok(())
}

/// `(mu + 1) S(v, v) Id + (mu + 2) S|_{v^perp}` in the basis of [`normal_basis`].
pub fn dim3_curvature_derivative(pt: &PointTensor3, v: &[f64; 3]) -> Result<[[f64; 2]; 2]> {
    check_trace_free(&pt.s)?;
    let e = normal_basis(v);
    let svv = quad3(&pt.s, v, v);
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            (pt.mu + 1.0) * svv * (a == b) as u8 as f64 + (pt.mu + 2.0) * quad3(&pt.s, &e[a], &e[b])
        })
    }))
}

pub fn trace_sq3(s: &Mat3) -> f64 {
    (0..3).map(|i| (0..3).map(|j| s[i][j] * s[j][i]).sum::<f64>()).sum()
}

/// Fiber quadrature of `tr((dR(v))^2)` against the closed form
/// `(-2(mu+1) + (mu+2)^2) |pi2 S|^2 + (mu+2)^2/3 tr(S^2)` with unit volume,
/// where `|pi2 S|^2 = 2 tr(S^2) / 15` for trace-free `S`.
pub fn corr2_fiber_check(pt: &PointTensor3, rule: &SphereQuadrature) -> Result<(f64, f64)> {
    check_trace_free(&pt.s)?;
    if rule.dim != 2 || rule.degree < 4 {
        return Err(Error::Contract("need an S^2 rule of degree at least 4".into()));
    }
    let mut lhs = 0.0;
    for (v, w) in rule.nodes.iter().zip(&rule.weights) {
        let m = dim3_curvature_derivative(pt, v)?;
        lhs += w * (m[0][0] * m[0][0] + 2.0 * m[0][1] * m[1][0] + m[1][1] * m[1][1]);
    }
    let mu = pt.mu;
    let ts = trace_sq3(&pt.s);
    let rhs = (-2.0 * (mu + 1.0) + (mu + 2.0).powi(2)) * 2.0 * ts / 15.0 + (mu + 2.0).powi(2) / 3.0 * ts;
    Ok((lhs, rhs))
}

/// Pointwise Hessian of the mean root curvature in dimension 3 along a TT
/// direction with `dRic = mu S`, from the four-term formula, using the
/// fiber quadrature for the curvature term and `-(mu + 2) tr(S^2)` for the
/// total scalar curvature Hessian.
pub fn dim3_kappa_hessian(pt: &PointTensor3, rule: &SphereQuadrature) -> Result<f64> {
    let (lhs, _) = corr2_fiber_check(pt, rule)?;
    let m = rule.integrate(|v| quad3(&pt.s, v, v).powi(2));
    let mu = pt.mu;
    let ts = trace_sq3(&pt.s);
    Ok(1.5 * m + 0.5 * mu * m - 0.25 * lhs + (mu + 2.0) / 6.0 * ts)
}

/// Fiber mean of `S(v, v)^2` on `S^2`.
pub fn pi2_norm_sq3(pt: &PointTensor3, rule: &SphereQuadrature) -> f64 {
    rule.integrate(|v| quad3(&pt.s, v, v).powi(2))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HessianCheckOptions {
    pub n_r: usize,
    pub n_alpha: usize,
    pub fiber: usize,
    /// Largest finite-difference step in lambda; `h / 2` is used for the noise
    /// estimate.
    pub h: f64,
}

impl Default for HessianCheckOptions {
    fn default() -> Self {
        HessianCheckOptions {
            n_r: 16,
            n_alpha: 16,
            fiber: 16,
            h: 0.02,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SubCheck {
    pub fd: f64,
    pub formula: f64,
    pub noise: f64,
    pub relative_error: f64,
    pub inconclusive: bool,
}

impl SubCheck {
    fn new(fd: f64, formula: f64, noise: f64) -> Self {
        SubCheck {
            fd,
            formula,
            noise,
            relative_error: (fd - formula).abs() / formula.abs(),
            inconclusive: fd.abs().max(formula.abs()) < 10.0 * noise,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KappaHessianReport {
    /// `(3/4) int (pi2 S)^2`.
    pub t1: f64,
    /// `(1/2) int pi2 S dRic(v)`.
    pub t2: f64,
    /// `-(1/4) int tr((dR(v))^2)`.
    pub t3: f64,
    /// `-(1 / (2n Vol)) d^2 S(g)`.
    pub t4: f64,
    pub kappa: SubCheck,
    pub scalar_curvature: SubCheck,
    pub volume: f64,
    /// Step actually used, possibly reduced from the requested one.
    pub h: f64,
}

struct Sample {
    w0: f64,
    z: Complex64,
    g: [[f64; 2]; 2],
    k: f64,
}

fn sample_family(base: &BaseGrid, s: &Tensor, group: &Arc<FuchsianGroup>, lambda: f64) -> Result<(Vec<Sample>, f64)> {
    let m = MetricField::general(group.clone(), Arc::new(Combination(vec![(lambda, s.clone())])))?;
    let mut out = Vec::with_capacity(base.nodes.len());
    let mut vol = 0.0;
    for &(z, w0) in &base.nodes {
        let j = m.jet(z, 2, DiffMode::Exact)?;
        let g = j.values();
        vol += w0 * density(&g, z);
        out.push(Sample {
            w0,
            z,
            g,
            k: j.gauss_curvature().value(),
        });
    }
    Ok((out, vol))
}

/// `kappa` and total scalar curvature of `c (g0 + lambda S)` with `c`
/// restoring the hyperbolic area. In dimension 2 the area is linear in
/// `c`, so the constant is explicit.
fn family_values(samples: &[Sample], vol: f64, vol0: f64) -> (f64, f64) {
    let c = vol0 / vol;
    let mut kappa = 0.0;
    let mut scal = 0.0;
    for s in samples {
        let wa = c * s.w0 * density(&s.g, s.z);
        let k = s.k / c;
        kappa += wa * (-k).sqrt();
        scal += wa * 2.0 * k;
    }
    (kappa / vol0, scal)
}

/// `R(v) w = K (g(v, v) w - g(w, v) v)` as a coordinate matrix.
fn curvature_operator(g: &[[f64; 2]; 2], k: f64, v: &[f64; 2]) -> [[f64; 2]; 2] {
    let gvv = g[0][0] * v[0] * v[0] + 2.0 * g[0][1] * v[0] * v[1] + g[1][1] * v[1] * v[1];
    let gv = [g[0][0] * v[0] + g[0][1] * v[1], g[1][0] * v[0] + g[1][1] * v[1]];
    std::array::from_fn(|i| std::array::from_fn(|j| k * (gvv * (i == j) as u8 as f64 - v[i] * gv[j])))
}

struct HessianTerms {
    t: [f64; 4],
    kappa_fd: [f64; 2],
    scal_fd: [f64; 2],
    scal_formula: f64,
    s_norm: f64,
}

impl HessianTerms {
    fn formula(&self) -> f64 {
        self.t.iter().sum()
    }
}

fn hessian_terms(group: &Arc<FuchsianGroup>, s: &Tensor, base: &BaseGrid, fiber_n: usize, h: f64) -> Result<HessianTerms> {
    let vol0 = base.area();
    let g0 = Arc::new(MetricField::hyperbolic(group.clone()));
    let lams = [-h, -h / 2.0, 0.0, h / 2.0, h];
    let fam: Vec<(Vec<Sample>, f64)> = lams
        .iter()
        .map(|&l| sample_family(base, s, group, l))
        .collect::<Result<_>>()?;
    let vals: Vec<(f64, f64)> = fam.iter().map(|(smp, v)| family_values(smp, *v, vol0)).collect();
    let d2 = |i: usize, j: usize, hh: f64, pick: fn(&(f64, f64)) -> f64| {
        (pick(&vals[i]) - 2.0 * pick(&vals[2]) + pick(&vals[j])) / (hh * hh)
    };
    let kap = |p: &(f64, f64)| p.0;
    let sc = |p: &(f64, f64)| p.1;

    let fiber = SphereQuadrature::circle(fiber_n);
    let (mut t1, mut t2, mut t3) = (0.0, 0.0, 0.0);
    let mut s_norm = 0.0;
    let mut scal_formula = 0.0;
    let lap = rough_laplacian(s.clone(), g0);
    let (cp, cm) = (vol0 / fam[4].1, vol0 / fam[0].1);
    for (idx, &(z, w0)) in base.nodes.iter().enumerate() {
        let sv = s.value(z)?.matrix();
        let lv = lap.value(z)?.matrix();
        let y2 = z.im * z.im;
        // <A, B>_{g0} = y^4 sum A_ij B_ij
        let mut ip = 0.0;
        let mut nn = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                ip += sv[i][j] * (-0.5 * lv[i][j] + sv[i][j]);
                nn += sv[i][j] * sv[i][j];
            }
        }
        scal_formula += w0 * y2 * y2 * ip;
        s_norm += w0 * y2 * y2 * nn;
        let (p, m) = (&fam[4].0[idx], &fam[0].0[idx]);
        let gp = p.g.map(|r| r.map(|x| x * cp));
        let gm = m.g.map(|r| r.map(|x| x * cm));
        for (f, fw) in fiber.nodes.iter().zip(&fiber.weights) {
            let v = [f[0] * z.im, f[1] * z.im];
            let w = w0 / vol0 * fw;
            let svv = sv[0][0] * v[0] * v[0] + 2.0 * sv[0][1] * v[0] * v[1] + sv[1][1] * v[1] * v[1];
            // Ric(v, v) = K g(v, v) is scale invariant
            let ric = |smp: &Sample| {
                let gvv = smp.g[0][0] * v[0] * v[0] + 2.0 * smp.g[0][1] * v[0] * v[1] + smp.g[1][1] * v[1] * v[1];
                smp.k * gvv
            };
            let dric = (ric(p) - ric(m)) / (2.0 * h);
            let rp = curvature_operator(&gp, p.k / cp, &v);
            let rm = curvature_operator(&gm, m.k / cm, &v);
            let a: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| (rp[i][j] - rm[i][j]) / (2.0 * h)));
            let tr_a2 = a[0][0] * a[0][0] + 2.0 * a[0][1] * a[1][0] + a[1][1] * a[1][1];
            t1 += 0.75 * w * svv * svv;
            t2 += 0.5 * w * svv * dric;
            t3 -= 0.25 * w * tr_a2;
        }
    }
    let scal_fd = [d2(0, 4, h, sc), d2(1, 3, h / 2.0, sc)];
    let n = 2.0;
    Ok(HessianTerms {
        t: [t1, t2, t3, -scal_fd[0] / (2.0 * n * vol0)],
        kappa_fd: [d2(0, 4, h, kap), d2(1, 3, h / 2.0, kap)],
        scal_fd,
        scal_formula,
        s_norm: s_norm / vol0,
    })
}

/// Second finite difference of `kappa` along the area-normalized family
/// `c(lambda)(g0 + lambda S)` against the four-term formula, and of the
/// total scalar curvature against `<S, -1/2 nabla* nabla S + S>`.
///
/// Noise is the change under halving the step, plus the change of the
/// discrepancy between the requested grid and one with two thirds of the
/// nodes per direction, plus its change on the translated fundamental
/// domain, plus a floor of `1e-6 |S|^2`.
pub fn kappa_hessian_check(group: &Arc<FuchsianGroup>, s: &Tensor, opts: &HessianCheckOptions) -> Result<KappaHessianReport> {
    if s.rank() != 2 {
        return Err(Error::Contract("tangent must be a rank-2 field".into()));
    }
    let base = BaseGrid::new(group, opts.n_r, opts.n_alpha)?;
    // keep K_lambda within a quarter of its base value across the stencil
    let probe = 1e-3;
    let (kp, _) = sample_family(&base, s, group, probe)?;
    let (km, _) = sample_family(&base, s, group, -probe)?;
    let dk = kp.iter().zip(&km).map(|(a, b)| (a.k - b.k).abs() / (2.0 * probe)).fold(0.0, f64::max);
    let h = if dk > 0.0 { opts.h.min(0.25 / dk) } else { opts.h };

    let fine = hessian_terms(group, s, &base, opts.fiber, h)?;
    let coarse_grid = BaseGrid::new(group, (2 * opts.n_r / 3).max(2), (2 * opts.n_alpha / 3).max(2))?;
    let coarse = hessian_terms(group, s, &coarse_grid, opts.fiber, h)?;

    let moved_grid = BaseGrid::translated(group, opts.n_r, opts.n_alpha)?;
    let moved = hessian_terms(group, s, &moved_grid, opts.fiber, h)?;

    let formula = fine.formula();
    let kappa_noise = (fine.kappa_fd[0] - fine.kappa_fd[1]).abs()
        + ((fine.kappa_fd[0] - formula) - (coarse.kappa_fd[0] - coarse.formula())).abs()
        + ((fine.kappa_fd[0] - formula) - (moved.kappa_fd[0] - moved.formula())).abs()
        + 1e-6 * fine.s_norm;
    let scal_noise = (fine.scal_fd[0] - fine.scal_fd[1]).abs()
        + ((fine.scal_fd[0] - fine.scal_formula) - (coarse.scal_fd[0] - coarse.scal_formula)).abs()
        + ((fine.scal_fd[0] - fine.scal_formula) - (moved.scal_fd[0] - moved.scal_formula)).abs()
        + 1e-6 * fine.s_norm * base.area();
    Ok(KappaHessianReport {
        t1: fine.t[0],
        t2: fine.t[1],
        t3: fine.t[2],
        t4: fine.t[3],
        kappa: SubCheck::new(fine.kappa_fd[0], formula, kappa_noise),
        scalar_curvature: SubCheck::new(fine.scal_fd[0], fine.scal_formula, scal_noise),
        volume: base.area(),
        h,
    })
}

/// Area of the octagon surface by Gauss-Bonnet, `4 pi (genus - 1)`.
pub fn gauss_bonnet_area(genus: usize) -> f64 {
    4.0 * PI * (genus as f64 - 1.0)
}
