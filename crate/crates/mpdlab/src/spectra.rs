//! Marked length spectrum, marked Poincare determinant, X-ray transform and
//! finite-difference checks of the first-variation formulas.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Scalar, Scaled};
use crate::fuchsian::{ConjugacyClass, FuchsianGroup};
use crate::geodesic::{
    curvature_on, find_closed_geodesic, monodromy_from, riccati_periodic, unit_velocity, ClosedGeodesic,
    MonodromyData, ShootingOptions,
};
use crate::metric::MetricField;
use crate::operators::operator_r;
use crate::tensor::{Combination, ScalarTimes, Tensor, TensorField};

/// Route discrepancy above which an MPD value is rejected.
pub const MPD_INCONSISTENCY: f64 = 1e-4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpdResult {
    /// `int_0^T u dt` with the periodic Riccati solution.
    pub log_mpd: f64,
    /// `log sigma_u` from the monodromy.
    pub log_sigma_u: f64,
    pub route_discrepancy: f64,
    pub burn_in_bound: f64,
    pub monodromy: MonodromyData,
}

/// Log MPD of a closed geodesic by the Riccati route, checked against the
/// monodromy eigenvalue.
pub fn mpd(metric: &MetricField, geo: &ClosedGeodesic, burn_in: f64) -> Result<MpdResult> {
    let kc = curvature_on(metric, geo)?;
    let md = monodromy_from(&kc)?;
    let rt = riccati_periodic(&kc, burn_in)?;
    let a = md.sigma_u.abs().ln();
    let disc = (rt.integral - a).abs() / a.abs();
    if !(disc <= MPD_INCONSISTENCY) {
        return Err(Error::Inconsistency {
            discrepancy: disc,
            bound: MPD_INCONSISTENCY,
        });
    }
    Ok(MpdResult {
        log_mpd: rt.integral,
        log_sigma_u: a,
        route_discrepancy: disc,
        burn_in_bound: rt.burn_in_bound,
        monodromy: md,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub word: String,
    pub length: f64,
    pub log_mpd: f64,
    pub lambda: f64,
    pub route_discrepancy: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Spectrum {
    pub entries: Vec<SpectrumEntry>,
    /// `(word, error)` for classes that failed.
    pub failures: Vec<(String, String)>,
}

/// Closed geodesic plus its spectral data for one class.
pub fn spectrum_entry(
    metric: &MetricField,
    group: &FuchsianGroup,
    class: &ConjugacyClass,
    opts: &ShootingOptions,
    burn_in: f64,
) -> Result<(SpectrumEntry, ClosedGeodesic)> {
    let geo = find_closed_geodesic(metric, group, class, opts)?;
    let entry = entry_for(metric, group, &geo, burn_in)?;
    Ok((entry, geo))
}

pub fn entry_for(metric: &MetricField, group: &FuchsianGroup, geo: &ClosedGeodesic, burn_in: f64) -> Result<SpectrumEntry> {
    let m = mpd(metric, geo, burn_in)?;
    Ok(SpectrumEntry {
        word: group.format_word(geo.class.word()),
        length: geo.period,
        log_mpd: m.log_mpd,
        lambda: m.log_mpd / geo.period,
        route_discrepancy: m.route_discrepancy,
    })
}

/// One entry per class of word length at most `max_word_length`, in class
/// order. Failing classes are collected.
pub fn spectrum(
    metric: &MetricField,
    group: &FuchsianGroup,
    max_word_length: usize,
    opts: &ShootingOptions,
    burn_in: f64,
) -> Spectrum {
    let mut out = Spectrum::default();
    for class in group.enumerate_classes(max_word_length) {
        match spectrum_entry(metric, group, &class, opts, burn_in) {
            Ok((e, _)) => out.entries.push(e),
            Err(e) => out.failures.push((group.format_word(class.word()), e.to_string())),
        }
    }
    out
}

/// Per-step values of `S(v, v)` along one period, `steps + 1` of them.
fn orbit_values(s: &dyn TensorField, metric: &MetricField, geo: &ClosedGeodesic) -> Result<Vec<f64>> {
    if s.rank() != 2 {
        return Err(Error::Contract("the X-ray transform takes a rank-2 field".into()));
    }
    let traj = crate::geodesic::integrate_geodesic(metric, geo.start, geo.period, geo.step())?;
    traj.samples
        .iter()
        .map(|(_, v)| {
            let fd = metric.flow_data(v.z())?;
            let u = unit_velocity(&fd, v.theta);
            Ok(s.value(v.z())?.on_vector(u))
        })
        .collect()
}

/// `int_gamma S(gamma', gamma') dt` by the composite trapezoid rule on the
/// orbit's integration grid.
pub fn xray(s: &dyn TensorField, metric: &MetricField, geo: &ClosedGeodesic) -> Result<f64> {
    let v = orbit_values(s, metric, geo)?;
    let n = v.len() - 1;
    let inner: f64 = v[1..n].iter().sum();
    Ok(geo.step() * (inner + 0.5 * (v[0] + v[n])))
}

/// One-parameter metric families through the hyperbolic metric.
#[derive(Clone, Debug)]
pub enum Family {
    /// `e^{2 lambda phi} g0`, tangent `2 phi g0`.
    Conformal(Scalar),
    /// `g0 + lambda h`, tangent `h`.
    Linear(Tensor),
}

impl Family {
    pub fn metric(&self, group: &Arc<FuchsianGroup>, lambda: f64) -> Result<MetricField> {
        match self {
            Family::Conformal(phi) => Ok(MetricField::conformal(
                group.clone(),
                Arc::new(Scaled(lambda, phi.clone())),
            )),
            Family::Linear(h) => MetricField::general(
                group.clone(),
                Arc::new(Combination(vec![(lambda, h.clone())])),
            ),
        }
    }

    pub fn tangent(&self, group: &Arc<FuchsianGroup>) -> Tensor {
        match self {
            Family::Conformal(phi) => {
                let g0 = Arc::new(MetricField::hyperbolic(group.clone())).as_tensor();
                Arc::new(ScalarTimes(Arc::new(Scaled(2.0, phi.clone())), g0))
            }
            Family::Linear(h) => h.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub word: String,
    /// Central difference at the finest step.
    pub fd_value: f64,
    pub formula_value: f64,
    pub step: f64,
    pub relative_error: f64,
    /// `(h, central difference)` for every step, coarsest first.
    pub fd_steps: Vec<(f64, f64)>,
    /// Richardson extrapolation of the two finest steps, when available.
    pub richardson: Option<f64>,
}

pub const DEFAULT_FD_STEPS: [f64; 2] = [1e-2, 5e-3];

fn report(word: String, formula: f64, fd_steps: Vec<(f64, f64)>) -> DerivativeReport {
    let (step, fd) = *fd_steps.last().expect("at least one step");
    let richardson = if fd_steps.len() >= 2 {
        let (h1, f1) = fd_steps[fd_steps.len() - 2];
        let r = (h1 / step).powi(2);
        Some((r * fd - f1) / (r - 1.0))
    } else {
        None
    };
    DerivativeReport {
        word,
        fd_value: fd,
        formula_value: formula,
        step,
        relative_error: (fd - formula).abs() / formula.abs(),
        fd_steps,
        richardson,
    }
}

fn central<F: FnMut(f64) -> Result<f64>>(steps: &[f64], mut f: F) -> Result<Vec<(f64, f64)>> {
    if steps.is_empty() {
        return Err(Error::Usage("no finite-difference steps given".into()));
    }
    steps
        .iter()
        .map(|&h| Ok((h, (f(h)? - f(-h)?) / (2.0 * h))))
        .collect()
}

/// Central difference of the length of `class` along the family vs half the
/// X-ray of the tangent over the base geodesic.
pub fn length_derivative_check(
    group: &Arc<FuchsianGroup>,
    family: &Family,
    class: &ConjugacyClass,
    steps: &[f64],
    opts: &ShootingOptions,
) -> Result<DerivativeReport> {
    let base = MetricField::hyperbolic(group.clone());
    let geo0 = find_closed_geodesic(&base, group, class, opts)?;
    let formula = 0.5 * xray(family.tangent(group).as_ref(), &base, &geo0)?;
    let fd = central(steps, |l| {
        Ok(find_closed_geodesic(&family.metric(group, l)?, group, class, opts)?.period)
    })?;
    Ok(report(group.format_word(class.word()), formula, fd))
}

/// Central difference of `Phi = D_g / D_g0` along the family vs
/// `(1 / D_g0) int R(S)(gamma', gamma')` over the base geodesic.
pub fn mpd_derivative_check(
    group: &Arc<FuchsianGroup>,
    family: &Family,
    class: &ConjugacyClass,
    steps: &[f64],
    opts: &ShootingOptions,
    burn_in: f64,
) -> Result<DerivativeReport> {
    let base = Arc::new(MetricField::hyperbolic(group.clone()));
    let geo0 = find_closed_geodesic(&base, group, class, opts)?;
    let d0 = mpd(&base, &geo0, burn_in)?.log_mpd;
    let rs = operator_r(family.tangent(group), base.clone())?;
    let formula = xray(rs.as_ref(), &base, &geo0)? / d0;
    let fd = central(steps, |l| {
        let m = family.metric(group, l)?;
        let geo = find_closed_geodesic(&m, group, class, opts)?;
        Ok(mpd(&m, &geo, burn_in)?.log_mpd / d0)
    })?;
    Ok(report(group.format_word(class.word()), formula, fd))
}
