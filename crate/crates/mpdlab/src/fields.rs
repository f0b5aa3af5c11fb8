//! Scalar fields on the half-plane evaluated as jets.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{dist, to_disk, DirichletPolygon, FuchsianGroup, GroupElement};
use crate::jet::{CJet, Jet, MAX_ORDER};

/// How leaf fields produce derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DiffMode {
    /// Exact jet propagation.
    Exact,
    /// Second-order central differences of point values with spacing `h`.
    Stencil { h: f64 },
}

const STENCILS: [&[f64]; MAX_ORDER + 1] = [
    &[1.0],
    &[-0.5, 0.0, 0.5],
    &[1.0, -2.0, 1.0],
    &[-0.5, 1.0, 0.0, -1.0, 0.5],
    &[1.0, -4.0, 6.0, -4.0, 1.0],
    &[-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5],
    &[1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0],
];

/// Builds approximate jets of a vector-valued function from a square grid
/// of point samples around `p`.
pub fn stencil_jets<const N: usize>(
    p: Complex64,
    order: usize,
    h: f64,
    mut sample: impl FnMut(Complex64) -> Result<[f64; N]>,
) -> Result<[Jet; N]> {
    if order > MAX_ORDER {
        return Err(Error::Capability(format!("stencil order {order} exceeds {MAX_ORDER}")));
    }
    let rad = order.div_ceil(2) as i32;
    let w = (2 * rad + 1) as usize;
    let mut grid = vec![[0.0; N]; w * w];
    for i in -rad..=rad {
        for j in -rad..=rad {
            let q = p + Complex64::new(i as f64 * h, j as f64 * h);
            grid[(i + rad) as usize * w + (j + rad) as usize] = sample(q)?;
        }
    }
    let mut out = [Jet::zero(order); N];
    for d in 0..=order {
        for b in 0..=d {
            let a = d - b;
            let (sa, sb) = (STENCILS[a], STENCILS[b]);
            let (ra, rb) = ((sa.len() / 2) as i32, (sb.len() / 2) as i32);
            let mut acc = [0.0; N];
            for (ii, ca) in sa.iter().enumerate() {
                if *ca == 0.0 {
                    continue;
                }
                for (jj, cb) in sb.iter().enumerate() {
                    if *cb == 0.0 {
                        continue;
                    }
                    let gi = (ii as i32 - ra + rad) as usize;
                    let gj = (jj as i32 - rb + rad) as usize;
                    let s = &grid[gi * w + gj];
                    for n in 0..N {
                        acc[n] += ca * cb * s[n];
                    }
                }
            }
            let scale = h.powi(d as i32) * fact(a) * fact(b);
            for n in 0..N {
                out[n].set_coeff(a, b, acc[n] / scale);
            }
        }
    }
    Ok(out)
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub trait ScalarField: Send + Sync + fmt::Debug {
    /// The field composed with the point jet `z`.
    fn jet_at(&self, z: &CJet) -> Result<Jet>;
}

pub type Scalar = Arc<dyn ScalarField>;

/// Jet of a scalar field at `p` under the given differentiation mode.
pub fn scalar_jet(f: &dyn ScalarField, p: Complex64, order: usize, mode: DiffMode) -> Result<Jet> {
    if order > MAX_ORDER {
        return Err(Error::Capability(format!(
            "derivative order {order} exceeds supported {MAX_ORDER}"
        )));
    }
    match mode {
        DiffMode::Exact => f.jet_at(&CJet::point(p, order)),
        DiffMode::Stencil { h } => {
            let [j] = stencil_jets(p, order, h, |q| Ok([f.jet_at(&CJet::point(q, 0))?.value()]))?;
            Ok(j)
        }
    }
}

pub fn scalar_value(f: &dyn ScalarField, p: Complex64) -> Result<f64> {
    Ok(f.jet_at(&CJet::point(p, 0))?.value())
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn jet_at(&self, z: &CJet) -> Result<Jet> {
        Ok(Jet::constant(self.0, z.order()))
    }
}

/// `y^s`.
#[derive(Debug, Clone, Copy)]
pub struct PowerY(pub f64);

impl ScalarField for PowerY {
    fn jet_at(&self, z: &CJet) -> Result<Jet> {
        Ok(z.im.powf(self.0))
    }
}

/// `sum c x^a y^b` in half-plane coordinates (not group invariant).
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub terms: Vec<(f64, u32, u32)>,
}

impl ScalarField for Polynomial {
    fn jet_at(&self, z: &CJet) -> Result<Jet> {
        let mut acc = Jet::zero(z.order());
        for &(c, a, b) in &self.terms {
            let mut t = Jet::constant(c, z.order());
            for _ in 0..a {
                t = t * z.re;
            }
            for _ in 0..b {
                t = t * z.im;
            }
            acc += t;
        }
        Ok(acc)
    }
}

/// A field given by a closure on point jets.
#[derive(Clone)]
pub struct Analytic {
    pub name: String,
    pub f: Arc<dyn Fn(&CJet) -> Jet + Send + Sync>,
}

impl Analytic {
    pub fn new(name: &str, f: impl Fn(&CJet) -> Jet + Send + Sync + 'static) -> Self {
        Analytic {
            name: name.to_string(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for Analytic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Analytic({})", self.name)
    }
}

impl ScalarField for Analytic {
    fn jet_at(&self, z: &CJet) -> Result<Jet> {
        Ok((self.f)(z))
    }
}

#[derive(Debug, Clone)]
pub struct Scaled(pub f64, pub Scalar);

impl ScalarField for Scaled {
    fn jet_at(&self, z: &CJet) -> Result<Jet> {
        Ok(self.1.jet_at(z)?.scale(self.0))
    }
}

#[derive(Debug, Clone)]
pub struct Sum(pub Vec<Scalar>);

impl ScalarField for Sum {
    fn jet_at(&self, z: &CJet) -> Result<Jet> {
        let mut acc = Jet::zero(z.order());
        for f in &self.0 {
            acc += f.jet_at(z)?;
        }
        Ok(acc)
    }
}

/// A compactly supported bump `A exp(1 - 1/(1 - s))`, where
/// `s = (cosh d - 1)/(cosh R - 1)` and `d` is the distance to the center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl BumpSpec {
    pub fn center_z(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }
}

/// Gap to the support edge below which the bump and all its derivatives are
/// treated as zero (the profile is below 1e-80 there).
const EDGE: f64 = 5e-3;

fn bump_profile(w: &CJet, c: Complex64, cosh_r_m1: f64, amp: f64) -> Option<Jet> {
    let s0 = (w.value() - c).norm_sqr() / (2.0 * w.value().im * c.im * cosh_r_m1);
    if s0 >= 1.0 - EDGE {
        return None;
    }
    let dz = w.add_c(-c);
    let s = dz.norm_sqr() / (w.im * (2.0 * c.im * cosh_r_m1));
    let q = (-(s - 1.0)).recip();
    Some((-(q - 1.0)).exp().scale(amp))
}

/// A single bump in half-plane coordinates (not automorphized).
#[derive(Clone, Copy, Debug)]
pub struct Bump(pub BumpSpec);

impl ScalarField for Bump {
    fn jet_at(&self, z: &CJet) -> Result<Jet> {
        let b = self.0;
        Ok(bump_profile(z, b.center_z(), b.radius.cosh() - 1.0, b.amplitude)
            .unwrap_or_else(|| Jet::zero(z.order())))
    }
}

#[derive(Clone, Copy, Debug)]
struct OrbitCenter {
    z: Complex64,
    from_center: f64,
    bump: usize,
}

/// Sum of the group translates of a list of bumps.
///
/// The orbit of each bump center is taken over words of length at most the
/// truncation length. A point is evaluated by reducing it into the Dirichlet
/// domain, so the field is group invariant by construction.
#[derive(Clone)]
pub struct AutomorphicBumps {
    group: Arc<FuchsianGroup>,
    bumps: Vec<BumpSpec>,
    truncation: usize,
    orbit: Vec<OrbitCenter>,
    max_radius: f64,
}

impl fmt::Debug for AutomorphicBumps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AutomorphicBumps")
            .field("bumps", &self.bumps)
            .field("truncation", &self.truncation)
            .field("orbit_points", &self.orbit.len())
            .finish()
    }
}

impl AutomorphicBumps {
    pub fn new(group: Arc<FuchsianGroup>, bumps: Vec<BumpSpec>, truncation: usize) -> Result<Self> {
        for (i, b) in bumps.iter().enumerate() {
            if !(b.radius > 0.0) || !(b.center[1] > 0.0) {
                return Err(Error::config(
                    format!("perturbation.bumps[{i}]"),
                    "bump needs a positive radius and a center in the upper half-plane",
                ));
            }
        }
        let center = group.dirichlet_center();
        let mut elems = vec![GroupElement::identity()];
        let mut frontier = vec![GroupElement::identity()];
        for _ in 0..truncation {
            let mut next = Vec::new();
            for g in &frontier {
                for (_, h) in group.closed_generators() {
                    next.push(*h * *g);
                }
            }
            elems.extend_from_slice(&next);
            frontier = next;
        }
        let mut orbit = Vec::new();
        for (k, b) in bumps.iter().enumerate() {
            let (c0, _) = group.reduce_to_domain(b.center_z())?;
            let mut seen: HashSet<(i64, i64)> = HashSet::new();
            let mut uniq: Vec<Complex64> = Vec::new();
            for g in &elems {
                let p = g.apply(c0);
                let w = to_disk(center, p);
                let key = ((w.re * 1e8).round() as i64, (w.im * 1e8).round() as i64);
                let dup = (-1..=1).any(|i| (-1..=1).any(|j| seen.contains(&(key.0 + i, key.1 + j))));
                if !dup {
                    seen.insert(key);
                    uniq.push(p);
                }
            }
            orbit.extend(uniq.into_iter().map(|z| OrbitCenter {
                z,
                from_center: dist(z, center),
                bump: k,
            }));
        }
        orbit.sort_by(|a, b| a.from_center.total_cmp(&b.from_center));
        let max_radius = bumps.iter().map(|b| b.radius).fold(0.0, f64::max);
        Ok(AutomorphicBumps {
            group,
            bumps,
            truncation,
            orbit,
            max_radius,
        })
    }

    pub fn bumps(&self) -> &[BumpSpec] {
        &self.bumps
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn group(&self) -> &Arc<FuchsianGroup> {
        &self.group
    }

    /// Number of distinct orbit points kept.
    pub fn orbit_size(&self) -> usize {
        self.orbit.len()
    }

    /// Sum of the bumps at a point already in the domain.
    fn sum_reduced(&self, w: &CJet) -> Jet {
        let w0 = w.value();
        let rho = dist(w0, self.group.dirichlet_center());
        let cut = rho + self.max_radius;
        let end = self.orbit.partition_point(|o| o.from_center <= cut + 1e-9);
        let mut acc = Jet::zero(w.order());
        for o in &self.orbit[..end] {
            let b = &self.bumps[o.bump];
            if let Some(j) = bump_profile(w, o.z, b.radius.cosh() - 1.0, b.amplitude) {
                acc += j;
            }
        }
        acc
    }

    /// Largest change of the field at the given points when the truncation
    /// length grows by one.
    pub fn truncation_error(&self, points: &[Complex64]) -> Result<f64> {
        let finer = AutomorphicBumps::new(self.group.clone(), self.bumps.clone(), self.truncation + 1)?;
        let mut worst: f64 = 0.0;
        for p in points {
            let a = scalar_value(self, *p)?;
            let b = scalar_value(&finer, *p)?;
            worst = worst.max((a - b).abs());
        }
        Ok(worst)
    }
}

impl ScalarField for AutomorphicBumps {
    fn jet_at(&self, z: &CJet) -> Result<Jet> {
        let (_, gamma) = self.group.reduce_to_domain(z.value())?;
        let w = gamma.apply_jet(z);
        Ok(self.sum_reduced(&w))
    }
}

/// Sample points covering the Dirichlet polygon (polar grid).
pub fn domain_samples(poly: &DirichletPolygon, n_r: usize, n_alpha: usize) -> Vec<Complex64> {
    let mut out = vec![poly.center()];
    for &(lo, hi, side) in poly.sectors() {
        for ia in 0..n_alpha {
            let alpha = lo + (hi - lo) * (ia as f64 + 0.5) / n_alpha as f64;
            let rmax = poly.r_max(alpha, side);
            for ir in 1..=n_r {
                let r = rmax * ir as f64 / n_r as f64 * (1.0 - 1e-9);
                out.push(poly.point(r, alpha));
            }
        }
    }
    out
}
