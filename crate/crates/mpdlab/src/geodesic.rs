//! Geodesic flow, closed geodesics by shooting, Jacobi monodromy and the
//! unstable Riccati solution.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{
    axis_seed, translation_length, wrap_angle, ConjugacyClass, FuchsianGroup, GroupElement, Letter, UnitTangent,
};
use crate::metric::{FlowData, MetricField};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_BURN_IN: f64 = 15.0;
/// Orbits with `y` outside `[Y_MIN, Y_MAX]` are rejected.
pub const Y_MIN: f64 = 1e-10;
pub const Y_MAX: f64 = 1e10;
/// Upper bound on stored samples per closed geodesic.
pub const MAX_SAMPLES: usize = 1024;
/// Pre-condition on closure for monodromy computations.
pub const MONODROMY_CLOSURE_TOL: f64 = 1e-6;
/// Classes with `|tr| - 2` below this are treated as parabolic.
pub const PARABOLIC_TOL: f64 = 1e-6;

type State = [f64; 3];

fn check_state(s: &State) -> Result<()> {
    if !(s[1] > Y_MIN && s[1] < Y_MAX) || !s[0].is_finite() || !s[2].is_finite() {
        return Err(Error::Numerical(format!(
            "orbit left the validity region at ({}, {})",
            s[0], s[1]
        )));
    }
    Ok(())
}

/// Unit velocity in coordinates for direction angle `theta`.
#[inline]
pub fn unit_velocity(fd: &FlowData, theta: f64) -> [f64; 2] {
    let e = [theta.cos(), theta.sin()];
    let n = fd.norm_sq(e).sqrt();
    [e[0] / n, e[1] / n]
}

#[inline]
fn rhs(fd: &FlowData, theta: f64) -> State {
    let v = unit_velocity(fd, theta);
    let gam = fd.christoffel();
    let mut a = [0.0; 2];
    for (k, ak) in a.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                *ak -= gam[k][i][j] * v[i] * v[j];
            }
        }
    }
    let w = (v[1] * a[0] - v[0] * a[1]) / (v[0] * v[0] + v[1] * v[1]);
    [v[0], v[1], -w]
}

fn eval(metric: &MetricField, s: &State, with_k: bool) -> Result<(State, f64)> {
    check_state(s)?;
    let p = Complex64::new(s[0], s[1]);
    if with_k {
        let (fd, k) = metric.flow_data_with_curvature(p)?;
        Ok((rhs(&fd, s[2]), k))
    } else {
        Ok((rhs(&metric.flow_data(p)?, s[2]), 0.0))
    }
}

fn axpy(s: &State, h: f64, k: &State) -> State {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]]
}

/// One classical Runge-Kutta step. With `with_k` the curvature at the four
/// stage points is returned as well.
fn rk4(metric: &MetricField, s: &State, h: f64, with_k: bool) -> Result<(State, [f64; 4])> {
    let (k1, c1) = eval(metric, s, with_k)?;
    let (k2, c2) = eval(metric, &axpy(s, h / 2.0, &k1), with_k)?;
    let (k3, c3) = eval(metric, &axpy(s, h / 2.0, &k2), with_k)?;
    let (k4, c4) = eval(metric, &axpy(s, h, &k3), with_k)?;
    let mut out = *s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok((out, [c1, c2, c3, c4]))
}

fn to_state(v: &UnitTangent) -> State {
    [v.x, v.y, v.theta]
}

fn to_tangent(s: &State) -> UnitTangent {
    UnitTangent::new(s[0], s[1], wrap_angle(s[2]))
}

fn steps_for(time: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !time.is_finite() {
        return Err(Error::Usage(format!("invalid integration step {step} or time {time}")));
    }
    Ok(((time.abs() / step).ceil() as usize).max(1))
}

/// Sampled orbit of the flow in the universal cover.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<(f64, UnitTangent)>,
}

impl Trajectory {
    pub fn end(&self) -> UnitTangent {
        self.samples.last().expect("nonempty trajectory").1
    }
}

/// Integrates `time` units (negative runs the flow backwards) with one
/// sample per step.
pub fn integrate_geodesic(metric: &MetricField, start: UnitTangent, time: f64, step: f64) -> Result<Trajectory> {
    let n = steps_for(time, step)?;
    let h = time / n as f64;
    let mut s = to_state(&start);
    let mut samples = Vec::with_capacity(n + 1);
    samples.push((0.0, start));
    for i in 0..n {
        s = rk4(metric, &s, h, false)?.0;
        samples.push(((i + 1) as f64 * h, to_tangent(&s)));
    }
    Ok(Trajectory { samples })
}

/// Endpoint of the flow after `n` steps of size `h`, without storage.
pub fn flow_steps(metric: &MetricField, start: UnitTangent, n: usize, h: f64) -> Result<UnitTangent> {
    let mut s = to_state(&start);
    for _ in 0..n {
        s = rk4(metric, &s, h, false)?.0;
    }
    Ok(to_tangent(&s))
}

pub fn flow(metric: &MetricField, start: UnitTangent, time: f64, step: f64) -> Result<UnitTangent> {
    let n = steps_for(time, step)?;
    flow_steps(metric, start, n, time / n as f64)
}

/// Curvature at the four Runge-Kutta stages of every step along an orbit.
/// Driving scalar ODEs with these values reproduces the coupled scheme.
#[derive(Clone, Debug)]
pub struct StageCurvature {
    pub h: f64,
    pub stages: Vec<[f64; 4]>,
    pub end: UnitTangent,
}

impl StageCurvature {
    pub fn duration(&self) -> f64 {
        self.h * self.stages.len() as f64
    }

    /// `min(-K)` over all stages.
    pub fn min_neg_curvature(&self) -> f64 {
        self.stages.iter().flatten().fold(f64::INFINITY, |m, &k| m.min(-k))
    }
}

/// Integrates `n` steps and records stage curvature. With `reduce` the
/// state is brought back into the Dirichlet domain whenever it leaves.
pub fn curvature_along(
    metric: &MetricField,
    start: UnitTangent,
    n: usize,
    h: f64,
    reduce: bool,
) -> Result<StageCurvature> {
    let group = metric.group().clone();
    let mut s = to_state(&start);
    let mut stages = Vec::with_capacity(n);
    for _ in 0..n {
        let (next, k) = rk4(metric, &s, h, true)?;
        s = next;
        stages.push(k);
        if reduce {
            s = reduce_state(&group, &s)?;
        }
    }
    Ok(StageCurvature {
        h,
        stages,
        end: to_tangent(&s),
    })
}

fn reduce_state(group: &FuchsianGroup, s: &State) -> Result<State> {
    let z = Complex64::new(s[0], s[1]);
    if group.in_domain(z, 1e-9) {
        return Ok(*s);
    }
    let (_, gamma) = group.reduce_to_domain(z)?;
    Ok(to_state(&gamma.push(&to_tangent(s))))
}

/// Scalar Jacobi system `J'' + K J = 0` driven by stage curvature; returns
/// the fundamental matrix `[[J1, J2], [J1', J2']]`.
pub fn jacobi_fundamental(kc: &StageCurvature) -> [[f64; 2]; 2] {
    let h = kc.h;
    let f = |y: [f64; 2], k: f64| [y[1], -k * y[0]];
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for k in &kc.stages {
        for y in cols.iter_mut() {
            let a1 = f(*y, k[0]);
            let a2 = f([y[0] + h / 2.0 * a1[0], y[1] + h / 2.0 * a1[1]], k[1]);
            let a3 = f([y[0] + h / 2.0 * a2[0], y[1] + h / 2.0 * a2[1]], k[2]);
            let a4 = f([y[0] + h * a3[0], y[1] + h * a3[1]], k[3]);
            for i in 0..2 {
                y[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
            }
        }
    }
    [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]
}

/// One RK4 step of `u' = -u^2 - K`, also returning the step's quadrature of `u`.
#[inline]
fn riccati_step(u: f64, k: &[f64; 4], h: f64) -> (f64, f64) {
    let f = |u: f64, k: f64| -u * u - k;
    let u1 = u;
    let a1 = f(u1, k[0]);
    let u2 = u + h / 2.0 * a1;
    let a2 = f(u2, k[1]);
    let u3 = u + h / 2.0 * a2;
    let a3 = f(u3, k[2]);
    let u4 = u + h * a3;
    let a4 = f(u4, k[3]);
    (
        u + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4),
    )
}

fn check_u(u: f64, t: f64) -> Result<()> {
    if !(u > 0.0 && u < 1e6) {
        return Err(Error::Numerical(format!(
            "Riccati solution left (0, 1e6) at t = {t} (u = {u}); curvature is not negative along the orbit"
        )));
    }
    Ok(())
}

/// `u(t)` for `u' = -u^2 - K(t)` with `K` sampled at RK4 stages.
pub fn riccati_along(k: impl Fn(f64) -> f64, u0: f64, t_end: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    let n = steps_for(t_end, step)?;
    let h = t_end / n as f64;
    let mut u = u0;
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, u));
    for i in 0..n {
        let t = i as f64 * h;
        let ks = [k(t), k(t + h / 2.0), k(t + h / 2.0), k(t + h)];
        u = riccati_step(u, &ks, h).0;
        check_u(u, t + h)?;
        out.push((t + h, u));
    }
    Ok(out)
}

/// Positive solution of the Riccati equation along an orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RiccatiTrace {
    /// `(t, u)` after burn-in, with `t` measured from the end of burn-in.
    pub samples: Vec<(f64, f64)>,
    pub burn_in: f64,
    pub u0: f64,
    /// `exp(-2 burn_in sqrt(min |K|))`.
    pub burn_in_bound: f64,
    /// `int u dt` over the retained part.
    pub integral: f64,
    pub duration: f64,
}

impl RiccatiTrace {
    pub fn average(&self) -> f64 {
        self.integral / self.duration
    }

    pub fn last(&self) -> f64 {
        self.samples.last().map(|s| s.1).unwrap_or(self.u0)
    }
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_SAMPLES).max(1)
}

/// Riccati along the (domain-reduced) orbit of `start`: burn-in, then
/// `duration` recorded units.
pub fn riccati_unstable(
    metric: &MetricField,
    start: UnitTangent,
    burn_in: f64,
    duration: f64,
    step: f64,
    u0: f64,
) -> Result<RiccatiTrace> {
    if burn_in < 0.0 || !(u0 > 0.0) {
        return Err(Error::Usage(format!("burn-in {burn_in} and u0 {u0} must be nonnegative/positive")));
    }
    let nb = if burn_in > 0.0 { steps_for(burn_in, step)? } else { 0 };
    let nd = steps_for(duration, step)?;
    let hb = if nb > 0 { burn_in / nb as f64 } else { 0.0 };
    let hd = duration / nd as f64;
    let mut u = u0;
    let mut kmin = f64::INFINITY;
    let mut v = start;
    if nb > 0 {
        let kc = curvature_along(metric, v, nb, hb, true)?;
        kmin = kmin.min(kc.min_neg_curvature());
        for (i, k) in kc.stages.iter().enumerate() {
            u = riccati_step(u, k, hb).0;
            check_u(u, (i + 1) as f64 * hb)?;
        }
        v = kc.end;
    }
    let kc = curvature_along(metric, v, nd, hd, true)?;
    kmin = kmin.min(kc.min_neg_curvature());
    let st = stride(nd);
    let mut samples = vec![(0.0, u)];
    let mut integral = 0.0;
    for (i, k) in kc.stages.iter().enumerate() {
        let (un, q) = riccati_step(u, k, hd);
        u = un;
        integral += q;
        check_u(u, burn_in + (i + 1) as f64 * hd)?;
        if (i + 1) % st == 0 || i + 1 == nd {
            samples.push(((i + 1) as f64 * hd, u));
        }
    }
    Ok(RiccatiTrace {
        samples,
        burn_in,
        u0,
        burn_in_bound: (-2.0 * burn_in * kmin.max(0.0).sqrt()).exp(),
        integral,
        duration,
    })
}

/// `J^u(v)`: the Riccati solution started `burn_in` units in the past of `v`.
pub fn unstable_jacobian(metric: &MetricField, v: UnitTangent, burn_in: f64, step: f64) -> Result<f64> {
    if !(burn_in > 0.0) {
        return Err(Error::Usage("burn-in must be positive".into()));
    }
    let n = steps_for(burn_in, step)?;
    let h = burn_in / n as f64;
    let past = curvature_along(metric, v.flip(), n, h, true)?.end.flip();
    let kc = curvature_along(metric, past, n, h, true)?;
    let mut u = 1.0;
    for (i, k) in kc.stages.iter().enumerate() {
        u = riccati_step(u, k, h).0;
        check_u(u, (i + 1) as f64 * h)?;
    }
    Ok(u)
}

/// Newton/shooting controls for closed geodesics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            step: DEFAULT_STEP,
            tol: 1e-10,
            max_iter: 40,
        }
    }
}

/// A periodic orbit: the flow maps `start` to `deck_* start` in time `period`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClosedGeodesic {
    pub class: ConjugacyClass,
    pub deck: GroupElement,
    pub period: f64,
    pub start: UnitTangent,
    /// Number of fixed-size steps used for one period.
    pub steps: usize,
    pub samples: Vec<(f64, UnitTangent)>,
    pub closure_residual: f64,
    pub iterations: usize,
}

impl ClosedGeodesic {
    pub fn step(&self) -> f64 {
        self.period / self.steps as f64
    }
}

struct Shooter<'a> {
    metric: &'a MetricField,
    deck: GroupElement,
    seed: UnitTangent,
    n: usize,
}

impl Shooter<'_> {
    fn start(&self, x: &[f64; 3]) -> UnitTangent {
        let (s, t) = self.seed.theta.sin_cos();
        let y0 = self.seed.y;
        UnitTangent::new(
            self.seed.x - x[0] * y0 * s,
            self.seed.y + x[0] * y0 * t,
            self.seed.theta + x[1],
        )
    }

    fn residual(&self, x: &[f64; 3]) -> Result<[f64; 3]> {
        if !(x[2] > 0.0) {
            return Err(Error::Numerical(format!("shooting produced nonpositive period {}", x[2])));
        }
        let v = self.start(x);
        let end = flow_steps(self.metric, v, self.n, x[2] / self.n as f64)?;
        let target = self.deck.push(&v);
        Ok([
            (end.x - target.x) / target.y,
            (end.y - target.y) / target.y,
            wrap_angle(end.theta - target.theta),
        ])
    }

    fn jacobian(&self, x: &[f64; 3], r: &[f64; 3]) -> Result<[[f64; 3]; 3]> {
        let mut j = [[0.0; 3]; 3];
        for c in 0..3 {
            let e = 1e-7 * if c == 2 { x[2].max(1.0) } else { 1.0 };
            let mut xp = *x;
            xp[c] += e;
            let rp = self.residual(&xp)?;
            for row in 0..3 {
                j[row][c] = (rp[row] - r[row]) / e;
            }
        }
        Ok(j)
    }
}

fn norm_inf(r: &[f64; 3]) -> f64 {
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Solves a 3x3 system by Gaussian elimination with partial pivoting.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            for k in c..4 {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let s: f64 = (c + 1..3).map(|k| m[c][k] * x[k]).sum();
        x[c] = (m[c][3] - s) / m[c][c];
    }
    Some(x)
}

/// Length of the hyperbolic axis segment from `seed` to `deck seed` measured in `metric`.
fn seed_period(metric: &MetricField, seed: UnitTangent, l0: f64) -> Result<f64> {
    if metric.is_base() {
        return Ok(l0 * metric.scale().sqrt());
    }
    let base = MetricField::hyperbolic(metric.group().clone());
    let n = ((l0 / 0.02).ceil() as usize).max(8);
    let h = l0 / n as f64;
    let mut v = seed;
    let speed = |v: &UnitTangent| -> Result<f64> {
        let fd = base.flow_data(v.z())?;
        let u = unit_velocity(&fd, v.theta);
        let g = metric.values(v.z())?;
        Ok((g[0][0] * u[0] * u[0] + 2.0 * g[0][1] * u[0] * u[1] + g[1][1] * u[1] * u[1]).sqrt())
    };
    let mut acc = 0.5 * speed(&v)?;
    for i in 0..n {
        v = flow_steps(&base, v, 1, h)?;
        acc += if i + 1 == n { 0.5 } else { 1.0 } * speed(&v)?;
    }
    Ok(acc * h)
}

struct Shot {
    start: UnitTangent,
    period: f64,
    n: usize,
    residual: f64,
    iterations: usize,
}

/// Damped Newton with Broyden updates on (normal offset, angle offset,
/// period) about `seed`.
fn shoot(metric: &MetricField, deck: GroupElement, seed: UnitTangent, t0: f64, opts: &ShootingOptions) -> Result<Shot> {
    let n = steps_for(t0, opts.step)?;
    let sh = Shooter {
        metric,
        deck,
        seed,
        n,
    };
    let mut x = [0.0, 0.0, t0];
    let mut r = sh.residual(&x)?;
    let mut jac: Option<[[f64; 3]; 3]> = None;
    let mut iterations = 0;
    while norm_inf(&r) > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::Convergence {
                iterations,
                residual: norm_inf(&r),
            });
        }
        iterations += 1;
        let j = match jac {
            Some(j) => j,
            None => sh.jacobian(&x, &r)?,
        };
        let dx = solve3(j, [-r[0], -r[1], -r[2]])
            .ok_or_else(|| Error::Numerical("singular shooting Jacobian".into()))?;
        let mut lam = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let xn = [x[0] + lam * dx[0], x[1] + lam * dx[1], x[2] + lam * dx[2]];
            if let Ok(rn) = sh.residual(&xn) {
                if norm_inf(&rn) < norm_inf(&r) {
                    accepted = Some((xn, rn));
                    break;
                }
            }
            lam *= 0.5;
        }
        match accepted {
            Some((xn, rn)) => {
                // Broyden rank-one update of the Jacobian.
                let s = [xn[0] - x[0], xn[1] - x[1], xn[2] - x[2]];
                let ss: f64 = s.iter().map(|v| v * v).sum();
                let mut jn = j;
                for row in 0..3 {
                    let js: f64 = (0..3).map(|c| j[row][c] * s[c]).sum();
                    let y = rn[row] - r[row];
                    for c in 0..3 {
                        jn[row][c] += (y - js) * s[c] / ss;
                    }
                }
                jac = Some(jn);
                x = xn;
                r = rn;
            }
            None if jac.is_some() => jac = None,
            None => {
                return Err(Error::Convergence {
                    iterations,
                    residual: norm_inf(&r),
                })
            }
        }
    }
    Ok(Shot {
        start: sh.start(&x),
        period: x[2],
        n,
        residual: norm_inf(&r),
        iterations,
    })
}

/// Smallest continuation step before giving up.
const MIN_BLEND_STEP: f64 = 1.0 / 64.0;

/// Follows the orbit from the hyperbolic axis along `metric.blend(t)`,
/// halving the step in `t` whenever a solve fails.
fn shoot_by_continuation(
    metric: &MetricField,
    deck: GroupElement,
    axis: UnitTangent,
    l0: f64,
    opts: &ShootingOptions,
) -> Result<Shot> {
    let mut shot = Shot {
        start: axis,
        period: l0 * metric.scale().sqrt(),
        n: 0,
        residual: 0.0,
        iterations: 0,
    };
    let mut iterations = 0;
    let (mut t, mut dt) = (0.0f64, 0.25);
    let mut last_err = None;
    while t < 1.0 {
        let tn = (t + dt).min(1.0);
        match shoot(&metric.blend(tn), deck, shot.start, shot.period, opts) {
            Ok(s) => {
                iterations += s.iterations;
                shot = s;
                t = tn;
                dt *= 1.5;
            }
            Err(e) => {
                iterations += opts.max_iter;
                dt *= 0.5;
                if dt < MIN_BLEND_STEP {
                    return Err(last_err.unwrap_or(e));
                }
                last_err.get_or_insert(e);
            }
        }
    }
    shot.iterations = iterations;
    Ok(shot)
}

/// Shortest `r` with `word = r^k`.
fn primitive_root(word: &[Letter]) -> (&[Letter], usize) {
    let n = word.len();
    for p in 1..n {
        if n.is_multiple_of(p) && word.chunks(p).all(|c| c == &word[..p]) {
            return (&word[..p], n / p);
        }
    }
    (word, 1)
}

/// Closed geodesic in the free homotopy class by single shooting on
/// (normal offset, angle offset, period), seeded from the hyperbolic axis.
/// If the direct solve fails the perturbation is switched on gradually.
pub fn find_closed_geodesic(
    metric: &MetricField,
    group: &FuchsianGroup,
    class: &ConjugacyClass,
    opts: &ShootingOptions,
) -> Result<ClosedGeodesic> {
    let deck = group.evaluate_class(class);
    if deck.trace().abs() - 2.0 < PARABOLIC_TOL {
        return Err(Error::NonHyperbolic { trace: deck.trace() });
    }
    let (root, k) = primitive_root(class.word());
    let shot = if k > 1 {
        // the orbit of a power is the root's orbit traversed k times
        let g1 = find_closed_geodesic(metric, group, &ConjugacyClass::new(root.to_vec())?, opts)?;
        Shot {
            start: g1.start,
            period: k as f64 * g1.period,
            n: k * g1.steps,
            residual: g1.closure_residual,
            iterations: g1.iterations,
        }
    } else {
        let l0 = translation_length(&deck)?;
        let seed = axis_seed(&deck, group.dirichlet_center())?;
        let t0 = seed_period(metric, seed, l0)?;
        match shoot(metric, deck, seed, t0, opts) {
            Ok(s) => s,
            Err(e @ (Error::Convergence { .. } | Error::Numerical(_))) if !metric.is_base() => {
                shoot_by_continuation(metric, deck, seed, l0, opts).map_err(|_| e)?
            }
            Err(e) => return Err(e),
        }
    };
    let Shot {
        start,
        period,
        n,
        mut residual,
        iterations,
    } = shot;
    let h = period / n as f64;
    let st = stride(n);
    let mut samples = Vec::with_capacity(n / st + 2);
    samples.push((0.0, start));
    let mut s = to_state(&start);
    for i in 0..n {
        s = rk4(metric, &s, h, false)?.0;
        if (i + 1) % st == 0 || i + 1 == n {
            samples.push(((i + 1) as f64 * h, to_tangent(&s)));
        }
    }
    if k > 1 {
        let end = to_tangent(&s);
        let target = deck.push(&start);
        let r = [
            (end.x - target.x) / target.y,
            (end.y - target.y) / target.y,
            wrap_angle(end.theta - target.theta),
        ];
        residual = residual.max(norm_inf(&r));
    }
    Ok(ClosedGeodesic {
        class: class.clone(),
        deck,
        period,
        start,
        steps: n,
        samples,
        closure_residual: residual,
        iterations,
    })
}

/// Linearized Poincare map on the normal Jacobi coordinates `(J, J')`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonodromyData {
    pub matrix: [[f64; 2]; 2],
    pub sigma_u: f64,
    pub sigma_s: f64,
    pub unstable: [f64; 2],
}

impl MonodromyData {
    pub fn det(&self) -> f64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }
}

pub fn curvature_on(metric: &MetricField, geo: &ClosedGeodesic) -> Result<StageCurvature> {
    if !(geo.closure_residual <= MONODROMY_CLOSURE_TOL) {
        return Err(Error::Contract(format!(
            "closure residual {} exceeds {MONODROMY_CLOSURE_TOL}",
            geo.closure_residual
        )));
    }
    curvature_along(metric, geo.start, geo.steps, geo.step(), false)
}

pub fn monodromy_from(kc: &StageCurvature) -> Result<MonodromyData> {
    let p = jacobi_fundamental(kc);
    let tr = p[0][0] + p[1][1];
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let disc = tr * tr - 4.0 * det;
    if !(disc > 0.0) {
        return Err(Error::Numerical(format!(
            "monodromy has no real eigenpair (trace {tr}, det {det})"
        )));
    }
    let sigma_u = 0.5 * (tr + tr.signum() * disc.sqrt());
    let sigma_s = det / sigma_u;
    let a = [p[0][1], sigma_u - p[0][0]];
    let b = [sigma_u - p[1][1], p[1][0]];
    let e = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
    let n = e[0].hypot(e[1]);
    Ok(MonodromyData {
        matrix: p,
        sigma_u,
        sigma_s,
        unstable: [e[0] / n, e[1] / n],
    })
}

pub fn monodromy(metric: &MetricField, geo: &ClosedGeodesic) -> Result<MonodromyData> {
    monodromy_from(&curvature_on(metric, geo)?)
}

/// Periodic Riccati solution by restarting whole periods until at least
/// `burn_in` has elapsed; the final period is recorded.
pub fn riccati_periodic(kc: &StageCurvature, burn_in: f64) -> Result<RiccatiTrace> {
    let h = kc.h;
    let period = kc.duration();
    let reps = (burn_in / period).ceil() as usize;
    let mut u = 1.0;
    for rep in 0..reps {
        for (i, k) in kc.stages.iter().enumerate() {
            u = riccati_step(u, k, h).0;
            check_u(u, (rep * kc.stages.len() + i + 1) as f64 * h)?;
        }
    }
    let st = stride(kc.stages.len());
    let mut samples = vec![(0.0, u)];
    let mut integral = 0.0;
    for (i, k) in kc.stages.iter().enumerate() {
        let (un, q) = riccati_step(u, k, h);
        u = un;
        integral += q;
        check_u(u, (i + 1) as f64 * h)?;
        if (i + 1) % st == 0 || i + 1 == kc.stages.len() {
            samples.push(((i + 1) as f64 * h, u));
        }
    }
    let burn = reps as f64 * period;
    Ok(RiccatiTrace {
        samples,
        burn_in: burn,
        u0: 1.0,
        burn_in_bound: (-2.0 * burn * kc.min_neg_curvature().max(0.0).sqrt()).exp(),
        integral,
        duration: period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{AutomorphicBumps, BumpSpec, Constant};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn octagon() -> Arc<FuchsianGroup> {
        Arc::new(FuchsianGroup::genus2_octagon())
    }

    fn bumped(amp: f64) -> MetricField {
        let g = octagon();
        let phi = AutomorphicBumps::new(
            g.clone(),
            vec![BumpSpec {
                center: [0.1, 1.2],
                radius: 0.8,
                amplitude: amp,
            }],
            4,
        )
        .unwrap();
        MetricField::conformal(g, Arc::new(phi))
    }

    #[test]
    fn vertical_geodesic_closed_form() {
        let m = MetricField::hyperbolic(octagon());
        let v = flow(&m, UnitTangent::new(0.0, 1.0, std::f64::consts::FRAC_PI_2), 3.0, DEFAULT_STEP).unwrap();
        assert!(v.x.abs() < 1e-12);
        assert_relative_eq!(v.y, 3f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn flow_is_reversible() {
        let m = bumped(0.05);
        let v0 = UnitTangent::new(0.1, 0.9, 0.4);
        let v1 = flow(&m, v0, 2.0, DEFAULT_STEP).unwrap();
        let back = flow(&m, v1.flip(), 2.0, DEFAULT_STEP).unwrap().flip();
        assert!((back.x - v0.x).abs() < 1e-8 && (back.y - v0.y).abs() < 1e-8);
        assert!(wrap_angle(back.theta - v0.theta).abs() < 1e-8);
    }

    #[test]
    fn base_class_period_is_translation_length() {
        let g = octagon();
        let m = MetricField::hyperbolic(g.clone());
        for w in ["a", "aB", "abc"] {
            let c = g.parse_class(w).unwrap();
            let geo = find_closed_geodesic(&m, &g, &c, &ShootingOptions::default()).unwrap();
            let l = translation_length(&g.evaluate_class(&c)).unwrap();
            assert_relative_eq!(geo.period, l, max_relative = 1e-10);
            assert!(geo.closure_residual <= 1e-8);
        }
    }

    #[test]
    fn perturbed_closed_geodesic_converges() {
        let g = octagon();
        let m = bumped(0.05);
        let c = g.parse_class("ab").unwrap();
        let geo = find_closed_geodesic(&m, &g, &c, &ShootingOptions::default()).unwrap();
        assert!(geo.closure_residual <= 1e-8, "{}", geo.closure_residual);
        let inv = find_closed_geodesic(&m, &g, &c.inverse(), &ShootingOptions::default()).unwrap();
        assert!((geo.period - inv.period).abs() < 1e-8);
    }

    #[test]
    fn constant_curvature_monodromy_and_riccati() {
        let g = octagon();
        let m = MetricField::hyperbolic(g.clone());
        let c = g.parse_class("aB").unwrap();
        let geo = find_closed_geodesic(&m, &g, &c, &ShootingOptions::default()).unwrap();
        let kc = curvature_on(&m, &geo).unwrap();
        let md = monodromy_from(&kc).unwrap();
        assert_relative_eq!(md.sigma_u, geo.period.exp(), max_relative = 1e-10);
        assert!((md.det() - 1.0).abs() < 1e-8);
        let rt = riccati_periodic(&kc, DEFAULT_BURN_IN).unwrap();
        assert_relative_eq!(rt.integral, md.sigma_u.ln(), max_relative = 1e-10);
    }

    #[test]
    fn riccati_routes_agree_on_perturbed_metric() {
        let g = octagon();
        let m = bumped(0.05);
        let c = g.parse_class("aB").unwrap();
        let geo = find_closed_geodesic(&m, &g, &c, &ShootingOptions::default()).unwrap();
        let kc = curvature_on(&m, &geo).unwrap();
        let md = monodromy_from(&kc).unwrap();
        let rt = riccati_periodic(&kc, DEFAULT_BURN_IN).unwrap();
        assert!((md.det() - 1.0).abs() < 1e-8);
        assert!((rt.integral - md.sigma_u.ln()).abs() <= 1e-6 * md.sigma_u.ln());
    }

    #[test]
    fn unstable_jacobian_scaling() {
        let g = octagon();
        let v = UnitTangent::new(0.2, 1.1, 0.3);
        let m = MetricField::hyperbolic(g.clone());
        assert_relative_eq!(unstable_jacobian(&m, v, 10.0, 1e-2).unwrap(), 1.0, epsilon = 1e-10);
        let c = MetricField::conformal(g, Arc::new(Constant(2f64.ln())));
        assert_relative_eq!(unstable_jacobian(&c, v, 25.0, 1e-2).unwrap(), 0.5, epsilon = 1e-8);
    }

    #[test]
    fn riccati_constant_curvature_closed_forms() {
        let tr = riccati_along(|_| -1.0, 2.0, 10.0, DEFAULT_STEP).unwrap();
        let a = 0.5f64.atanh();
        let err = tr.iter().map(|(t, u)| (u - 1.0 / (t + a).tanh()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        let fp = riccati_along(|_| -4.0, 2.0, 5.0, DEFAULT_STEP).unwrap();
        assert!((fp.last().unwrap().1 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn primitive_root_splits_powers() {
        let g = octagon();
        for (w, root, k) in [("abab", "ab", 2), ("AAA", "A", 3), ("abc", "abc", 1), ("abcab", "abcab", 1)] {
            let word = g.parse_word(w).unwrap();
            let (r, n) = primitive_root(&word);
            assert_eq!((g.format_word(r), n), (root.to_string(), k));
        }
    }

    #[test]
    fn power_orbit_repeats_root() {
        let g = octagon();
        let m = bumped(0.05);
        let opts = ShootingOptions::default();
        let root = find_closed_geodesic(&m, &g, &g.parse_class("ab").unwrap(), &opts).unwrap();
        let sq = find_closed_geodesic(&m, &g, &g.parse_class("abab").unwrap(), &opts).unwrap();
        assert_relative_eq!(sq.period, 2.0 * root.period, max_relative = 1e-12);
        assert!(sq.closure_residual <= 1e-6, "{}", sq.closure_residual);
    }

    #[test]
    fn continuation_reaches_the_direct_solution() {
        let g = octagon();
        let m = bumped(0.05);
        let opts = ShootingOptions::default();
        let c = g.parse_class("ab").unwrap();
        let direct = find_closed_geodesic(&m, &g, &c, &opts).unwrap();
        let deck = g.evaluate_class(&c);
        let axis = axis_seed(&deck, g.dirichlet_center()).unwrap();
        let cont = shoot_by_continuation(&m, deck, axis, translation_length(&deck).unwrap(), &opts).unwrap();
        assert_relative_eq!(cont.period, direct.period, max_relative = 1e-9);
        assert!(cont.residual <= opts.tol);
    }
}
