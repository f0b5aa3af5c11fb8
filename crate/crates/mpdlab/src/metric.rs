//! Metrics on the half-plane invariant under a Fuchsian group, and their
//! curvature.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CurvatureSample, Error, Result};
use crate::fields::{domain_samples, scalar_jet, DiffMode, Scalar, Scaled};
use crate::fuchsian::{DirichletPolygon, FuchsianGroup};
use crate::jet::{Jet, MAX_ORDER};
use crate::tensor::{check_order, Combination, HyperbolicMetric, Tensor, TensorField, TensorJet};

pub type Christoffel = [[[Jet; 2]; 2]; 2];
pub type Riemann = [[[[Jet; 2]; 2]; 2]; 2];

/// Metric components and their inverse as jets at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: [[Jet; 2]; 2],
    pub ginv: [[Jet; 2]; 2],
}

impl MetricJet {
    pub fn from_tensor(t: &TensorJet) -> Result<Self> {
        if t.rank() != 2 {
            return Err(Error::Contract("metric must be a rank-2 tensor".into()));
        }
        let g = [[*t.get(&[0, 0]), *t.get(&[0, 1])], [*t.get(&[1, 0]), *t.get(&[1, 1])]];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if !(det.value() > 0.0 && g[0][0].value() > 0.0) {
            return Err(Error::Numerical(format!(
                "metric is not positive definite (det {}, g11 {})",
                det.value(),
                g[0][0].value()
            )));
        }
        let inv = det.recip();
        let ginv = [[g[1][1] * inv, -(g[0][1] * inv)], [-(g[1][0] * inv), g[0][0] * inv]];
        Ok(MetricJet { g, ginv })
    }

    pub fn order(&self) -> usize {
        self.g[0][0].order()
    }

    pub fn tensor(&self) -> TensorJet {
        TensorJet::from_comps(2, vec![self.g[0][0], self.g[1][0], self.g[0][1], self.g[1][1]])
    }

    pub fn values(&self) -> [[f64; 2]; 2] {
        [
            [self.g[0][0].value(), self.g[0][1].value()],
            [self.g[1][0].value(), self.g[1][1].value()],
        ]
    }

    pub fn inverse_values(&self) -> [[f64; 2]; 2] {
        [
            [self.ginv[0][0].value(), self.ginv[0][1].value()],
            [self.ginv[1][0].value(), self.ginv[1][1].value()],
        ]
    }

    /// `Gamma[k][i][j]`, one order lower than the metric.
    pub fn christoffel(&self) -> Christoffel {
        let o = self.order();
        assert!(o >= 1, "Christoffel symbols need a first-order metric jet");
        let dg: [[[Jet; 2]; 2]; 2] =
            std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| self.g[i][j].d(k))));
        std::array::from_fn(|k| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut acc = Jet::zero(o - 1);
                    for l in 0..2 {
                        acc += self.ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                    }
                    acc.scale(0.5)
                })
            })
        })
    }

    /// `R[a][b][c][d]` with `R(d_c, d_d) d_b = R^a_{bcd} d_a`; two orders lower.
    pub fn riemann(&self) -> Riemann {
        let gam = self.christoffel();
        let o = self.order() - 2;
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                std::array::from_fn(|c| {
                    std::array::from_fn(|d| {
                        let mut acc = gam[a][d][b].d(c) - gam[a][c][b].d(d);
                        for e in 0..2 {
                            acc += gam[a][c][e] * gam[e][d][b] - gam[a][d][e] * gam[e][c][b];
                        }
                        acc.truncate(o)
                    })
                })
            })
        })
    }

    /// `Ric_{bd} = R^a_{bad}`.
    pub fn ricci(&self) -> [[Jet; 2]; 2] {
        let r = self.riemann();
        std::array::from_fn(|b| std::array::from_fn(|d| r[0][b][0][d] + r[1][b][1][d]))
    }

    pub fn gauss_curvature(&self) -> Jet {
        let r = self.riemann();
        let det = self.g[0][0] * self.g[1][1] - self.g[0][1] * self.g[1][0];
        let r1212 = self.g[0][0] * r[0][1][0][1] + self.g[0][1] * r[1][1][0][1];
        r1212 / det
    }
}

#[derive(Clone, Debug)]
pub enum Perturbation {
    None,
    /// `g = e^{2 phi} g0`.
    Conformal(Scalar),
    /// `g = g0 + h`.
    General(Tensor),
}

/// Curvature at a point of a surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureData {
    pub k: f64,
    pub ric: [[f64; 2]; 2],
    pub scal: f64,
}

/// Metric values and first partials: `dg[k][i][j] = d_k g_ij`.
#[derive(Clone, Copy, Debug)]
pub struct FlowData {
    pub g: [[f64; 2]; 2],
    pub dg: [[[f64; 2]; 2]; 2],
}

impl FlowData {
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let g = self.g;
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]]
    }

    pub fn christoffel(&self) -> [[[f64; 2]; 2]; 2] {
        let gi = self.inverse();
        let dg = &self.dg;
        std::array::from_fn(|k| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    0.5 * (0..2)
                        .map(|l| gi[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]))
                        .sum::<f64>()
                })
            })
        })
    }

    pub fn norm_sq(&self, v: [f64; 2]) -> f64 {
        let g = self.g;
        g[0][0] * v[0] * v[0] + 2.0 * g[0][1] * v[0] * v[1] + g[1][1] * v[1] * v[1]
    }
}

/// A Riemannian metric `scale * (perturbed hyperbolic metric)` invariant
/// under a Fuchsian group.
#[derive(Clone, Debug)]
pub struct MetricField {
    group: Arc<FuchsianGroup>,
    scale: f64,
    perturbation: Perturbation,
}

impl MetricField {
    pub fn hyperbolic(group: Arc<FuchsianGroup>) -> Self {
        MetricField {
            group,
            scale: 1.0,
            perturbation: Perturbation::None,
        }
    }

    pub fn conformal(group: Arc<FuchsianGroup>, phi: Scalar) -> Self {
        MetricField {
            group,
            scale: 1.0,
            perturbation: Perturbation::Conformal(phi),
        }
    }

    pub fn general(group: Arc<FuchsianGroup>, h: Tensor) -> Result<Self> {
        if h.rank() != 2 {
            return Err(Error::Contract("metric perturbation must have rank 2".into()));
        }
        Ok(MetricField {
            group,
            scale: 1.0,
            perturbation: Perturbation::General(h),
        })
    }

    /// The same metric multiplied by a positive constant.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0, "scale must be positive");
        MetricField {
            scale: self.scale * c,
            ..self.clone()
        }
    }

    /// The metric with its perturbation multiplied by `t`: the conformal
    /// factor `e^{2 t phi}` or `g0 + t h`. The scale is kept.
    pub fn blend(&self, t: f64) -> Self {
        let perturbation = match &self.perturbation {
            Perturbation::None => Perturbation::None,
            Perturbation::Conformal(phi) => Perturbation::Conformal(Arc::new(Scaled(t, phi.clone()))),
            Perturbation::General(h) => Perturbation::General(Arc::new(Combination(vec![(t, h.clone())]))),
        };
        MetricField {
            group: self.group.clone(),
            scale: self.scale,
            perturbation,
        }
    }

    pub fn group(&self) -> &Arc<FuchsianGroup> {
        &self.group
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    /// Whether this is exactly the hyperbolic metric.
    pub fn is_base(&self) -> bool {
        matches!(self.perturbation, Perturbation::None) && self.scale == 1.0
    }

    pub fn is_conformal(&self) -> bool {
        !matches!(self.perturbation, Perturbation::General(_))
    }

    pub fn derivative_order(&self) -> usize {
        MAX_ORDER
    }

    pub fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<MetricJet> {
        check_order(order)?;
        let g0 = HyperbolicMetric.jet(p, order, mode)?;
        let g = match &self.perturbation {
            Perturbation::None => g0,
            Perturbation::Conformal(phi) => {
                let f = scalar_jet(phi.as_ref(), p, order, mode)?;
                g0.mul_jet(&f.scale(2.0).exp())
            }
            Perturbation::General(h) => g0.add(&h.jet(p, order, mode)?),
        };
        MetricJet::from_tensor(&g.scale(self.scale))
    }

    pub fn values(&self, p: Complex64) -> Result<[[f64; 2]; 2]> {
        Ok(self.jet(p, 0, DiffMode::Exact)?.values())
    }

    /// Metric and first partials, with a fast path for conformal metrics.
    pub fn flow_data(&self, p: Complex64) -> Result<FlowData> {
        match &self.perturbation {
            Perturbation::General(_) => {
                let m = self.jet(p, 1, DiffMode::Exact)?;
                Ok(FlowData {
                    g: m.values(),
                    dg: std::array::from_fn(|k| {
                        std::array::from_fn(|i| std::array::from_fn(|j| m.g[i][j].partial(
                            (k == 0) as usize,
                            (k == 1) as usize,
                        )))
                    }),
                })
            }
            _ => {
                let y = p.im;
                if !(y > 0.0) {
                    return Err(Error::Numerical(format!("point {p} left the half-plane")));
                }
                let (f, fx, fy) = self.conformal_factor(p, 1)?;
                let w = self.scale * (2.0 * f).exp() / (y * y);
                let gx = w * 2.0 * fx;
                let gy = w * (2.0 * fy - 2.0 / y);
                Ok(FlowData {
                    g: [[w, 0.0], [0.0, w]],
                    dg: [[[gx, 0.0], [0.0, gx]], [[gy, 0.0], [0.0, gy]]],
                })
            }
        }
    }

    fn conformal_factor(&self, p: Complex64, order: usize) -> Result<(f64, f64, f64)> {
        match &self.perturbation {
            Perturbation::Conformal(phi) => {
                let j = scalar_jet(phi.as_ref(), p, order, DiffMode::Exact)?;
                Ok((j.value(), j.partial(1, 0), j.partial(0, 1)))
            }
            _ => Ok((0.0, 0.0, 0.0)),
        }
    }

    /// Metric, first partials and Gauss curvature.
    pub fn flow_data_with_curvature(&self, p: Complex64) -> Result<(FlowData, f64)> {
        match &self.perturbation {
            Perturbation::General(_) => {
                let m = self.jet(p, 2, DiffMode::Exact)?;
                let k = m.gauss_curvature().value();
                let fd = FlowData {
                    g: m.values(),
                    dg: std::array::from_fn(|k| {
                        std::array::from_fn(|i| std::array::from_fn(|j| m.g[i][j].partial(
                            (k == 0) as usize,
                            (k == 1) as usize,
                        )))
                    }),
                };
                Ok((fd, k))
            }
            _ => Ok((self.flow_data(p)?, self.gauss_curvature(p)?)),
        }
    }

    /// Gauss curvature; closed form for conformal metrics.
    pub fn gauss_curvature(&self, p: Complex64) -> Result<f64> {
        self.gauss_curvature_mode(p, DiffMode::Exact)
    }

    pub fn gauss_curvature_mode(&self, p: Complex64, mode: DiffMode) -> Result<f64> {
        match &self.perturbation {
            Perturbation::None => Ok(-1.0 / self.scale),
            Perturbation::Conformal(phi) => {
                let j = scalar_jet(phi.as_ref(), p, 2, mode)?;
                let lap = -p.im * p.im * (j.partial(2, 0) + j.partial(0, 2));
                Ok(-(-2.0 * j.value()).exp() * (1.0 - lap) / self.scale)
            }
            Perturbation::General(_) => self.coordinate_curvature(p, mode),
        }
    }

    /// Gauss curvature from the coordinate formula in the Christoffel symbols.
    pub fn coordinate_curvature(&self, p: Complex64, mode: DiffMode) -> Result<f64> {
        Ok(self.jet(p, 2, mode)?.gauss_curvature().value())
    }

    pub fn curvature(&self, p: Complex64) -> Result<CurvatureData> {
        let k = self.gauss_curvature(p)?;
        let g = self.values(p)?;
        Ok(CurvatureData {
            k,
            ric: [[k * g[0][0], k * g[0][1]], [k * g[1][0], k * g[1][1]]],
            scal: 2.0 * k,
        })
    }

    /// The metric as a rank-2 tensor field.
    pub fn as_tensor(self: &Arc<Self>) -> Tensor {
        Arc::new(MetricTensor(self.clone()))
    }

    /// Unit coordinate vector in direction `theta`.
    pub fn unit_vector(&self, p: Complex64, theta: f64) -> Result<[f64; 2]> {
        let g = self.values(p)?;
        let e = [theta.cos(), theta.sin()];
        let n = (g[0][0] * e[0] * e[0] + 2.0 * g[0][1] * e[0] * e[1] + g[1][1] * e[1] * e[1]).sqrt();
        Ok([e[0] / n, e[1] / n])
    }

    /// Largest curvature over a polar grid of the Dirichlet polygon and its
    /// refinement. Returns `-max K` if it is at least `margin_min`.
    pub fn check_negative_curvature(&self, n_r: usize, n_alpha: usize, margin_min: f64) -> Result<f64> {
        let poly = DirichletPolygon::new(&self.group)?;
        let mut samples = Vec::new();
        for p in domain_samples(&poly, n_r, n_alpha)
            .into_iter()
            .chain(domain_samples(&poly, 2 * n_r, 2 * n_alpha))
        {
            let k = self.gauss_curvature(p)?;
            samples.push(CurvatureSample {
                x: p.re,
                y: p.im,
                curvature: k,
            });
        }
        samples.sort_by(|a, b| b.curvature.total_cmp(&a.curvature));
        let max_k = samples[0].curvature;
        if max_k > -margin_min {
            samples.truncate(5);
            return Err(Error::CurvatureSign {
                bound: -margin_min,
                worst: samples,
            });
        }
        Ok(-max_k)
    }
}

#[derive(Debug, Clone)]
pub struct MetricTensor(pub Arc<MetricField>);

impl TensorField for MetricTensor {
    fn rank(&self) -> usize {
        2
    }
    fn jet(&self, p: Complex64, order: usize, mode: DiffMode) -> Result<TensorJet> {
        Ok(self.0.jet(p, order, mode)?.tensor())
    }
}
