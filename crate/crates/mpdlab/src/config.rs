//! Experiment configuration: JSON schema, defaults, validation, dotted-path
//! overrides and the canonical hash.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::construct::{random_holomorphic_quadratic, random_sym2_with_radii, PoincareQuadratic};
use crate::error::{Error, Result};
use crate::fields::{AutomorphicBumps, BumpSpec, Scalar};
use crate::fuchsian::{DirichletPolygon, FuchsianGroup, GroupElement};
use crate::geodesic::ShootingOptions;
use crate::metric::MetricField;
use crate::operators::{sym_derivative, trace_free};
use crate::spectra::Family;
use crate::tensor::{Combination, Differential, ScalarTimes, SymProduct, Tensor};

pub const OCTAGON_PRESET: &str = "genus2-octagon";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub label: String,
    /// `[[a, b], [c, d]]`.
    pub matrix: [[f64; 2]; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub relator: Option<String>,
    #[serde(default)]
    pub dirichlet_center: Option<[f64; 2]>,
}

impl Default for GroupSpec {
    fn default() -> Self {
        GroupSpec {
            preset: Some(OCTAGON_PRESET.into()),
            generators: Vec::new(),
            relator: None,
            dirichlet_center: None,
        }
    }
}

impl GroupSpec {
    pub fn build(&self) -> Result<FuchsianGroup> {
        match (&self.preset, self.generators.is_empty()) {
            (Some(p), true) if p == OCTAGON_PRESET => {
                if self.relator.is_some() || self.dirichlet_center.is_some() {
                    return Err(Error::config("group", "a preset takes no relator or center"));
                }
                Ok(FuchsianGroup::genus2_octagon())
            }
            (Some(p), true) => Err(Error::config("group.preset", format!("unknown preset {p:?}"))),
            (Some(_), false) => Err(Error::config("group", "give either a preset or generators, not both")),
            (None, true) => Err(Error::config("group", "no generators given")),
            (None, false) => {
                let mut labels = Vec::new();
                let mut gens = Vec::new();
                for (i, g) in self.generators.iter().enumerate() {
                    let [[a, b], [c, d]] = g.matrix;
                    let e = GroupElement::new(a, b, c, d).map_err(|e| {
                        Error::config(format!("group.generators[{i}]"), format!("generator {}: {e}", g.label))
                    })?;
                    labels.push(g.label.clone());
                    gens.push(e);
                }
                let c = self.dirichlet_center.unwrap_or([0.0, 1.0]);
                FuchsianGroup::new(labels, gens, self.relator.as_deref(), Complex64::new(c[0], c[1]))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// The hyperbolic metric itself.
    #[default]
    None,
    /// `e^{2 phi} g0` with `phi` a sum of bumps.
    Conformal,
    /// `g0 + f g0 + Hess psi + Sym(d psi1, d psi2)`, optionally trace-free.
    General,
    /// `Re(Q dz^2)` with `Q` a Poincare series; tangents only.
    Holomorphic,
}

/// Bumps drawn from the experiment seed, appended to the explicit ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBumps {
    pub count: usize,
    pub amplitude: f64,
    #[serde(default = "default_radii")]
    pub radius: [f64; 2],
}

fn default_radii() -> [f64; 2] {
    [0.6, 1.2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub center: [f64; 2],
    /// Complex amplitude `[re, im]`.
    pub amplitude: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    #[serde(default)]
    pub kind: PerturbationKind,
    /// Conformal factor, or the multiple of `g0` for general perturbations.
    #[serde(default)]
    pub bumps: Vec<BumpSpec>,
    #[serde(default)]
    pub hessian: Vec<BumpSpec>,
    #[serde(default)]
    pub pair: [Vec<BumpSpec>; 2],
    #[serde(default)]
    pub poles: Vec<PoleSpec>,
    #[serde(default)]
    pub random: Option<RandomBumps>,
    #[serde(default)]
    pub trace_free: bool,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    /// Constant factor applied to the whole metric (homothety).
    #[serde(default = "one")]
    pub scale: f64,
}

fn default_truncation() -> usize {
    crate::construct::DEFAULT_TRUNCATION
}

fn one() -> f64 {
    1.0
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            kind: PerturbationKind::None,
            bumps: Vec::new(),
            hessian: Vec::new(),
            pair: [Vec::new(), Vec::new()],
            poles: Vec::new(),
            random: None,
            trace_free: false,
            truncation: default_truncation(),
            scale: 1.0,
        }
    }
}

impl PerturbationSpec {
    fn bumps_field(&self, group: &Arc<FuchsianGroup>, bumps: &[BumpSpec]) -> Result<Scalar> {
        Ok(Arc::new(AutomorphicBumps::new(group.clone(), bumps.to_vec(), self.truncation)?))
    }

    /// Explicit bumps plus seeded random ones.
    fn all_bumps(&self, group: &FuchsianGroup, rng: &mut ChaCha8Rng) -> Result<Vec<BumpSpec>> {
        let mut out = self.bumps.clone();
        if let Some(r) = &self.random {
            let poly = DirichletPolygon::new(group)?;
            for _ in 0..r.count {
                out.push(crate::construct::random_bump(&poly, rng, r.amplitude, r.radius[0]..r.radius[1]));
            }
        }
        Ok(out)
    }

    /// Conformal factor of a conformal spec.
    pub fn conformal_factor(&self, group: &Arc<FuchsianGroup>, seed: u64) -> Result<Scalar> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = self.all_bumps(group, &mut rng)?;
        self.bumps_field(group, &bumps)
    }

    /// The symmetric 2-tensor described by the spec (for `conformal`,
    /// `2 phi g0`).
    pub fn tensor(&self, group: &Arc<FuchsianGroup>, seed: u64) -> Result<Tensor> {
        let base = Arc::new(MetricField::hyperbolic(group.clone()));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Tensor = match self.kind {
            PerturbationKind::None => Arc::new(Combination(Vec::new())),
            PerturbationKind::Conformal => {
                let phi = self.conformal_factor(group, seed)?;
                Arc::new(ScalarTimes(Arc::new(crate::fields::Scaled(2.0, phi)), base.as_tensor()))
            }
            PerturbationKind::General => {
                let mut terms: Vec<(f64, Tensor)> = Vec::new();
                if !self.bumps.is_empty() {
                    terms.push((1.0, Arc::new(ScalarTimes(self.bumps_field(group, &self.bumps)?, base.as_tensor()))));
                }
                if !self.hessian.is_empty() {
                    let d: Tensor = Arc::new(Differential(self.bumps_field(group, &self.hessian)?));
                    terms.push((1.0, sym_derivative(d, base.clone())));
                }
                if !self.pair[0].is_empty() && !self.pair[1].is_empty() {
                    let d1: Tensor = Arc::new(Differential(self.bumps_field(group, &self.pair[0])?));
                    let d2: Tensor = Arc::new(Differential(self.bumps_field(group, &self.pair[1])?));
                    terms.push((1.0, Arc::new(SymProduct(d1, d2))));
                }
                if let Some(r) = &self.random {
                    for _ in 0..r.count {
                        let s = random_sym2_with_radii(group, &mut rng, false, r.radius[0]..r.radius[1])?;
                        terms.push((r.amplitude, s));
                    }
                }
                Arc::new(Combination(terms))
            }
            PerturbationKind::Holomorphic => Arc::new(self.holomorphic(group, seed)?),
        };
        if self.trace_free && self.kind == PerturbationKind::General {
            trace_free(t, base)
        } else {
            Ok(t)
        }
    }

    fn holomorphic(&self, group: &Arc<FuchsianGroup>, seed: u64) -> Result<PoincareQuadratic> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut poles: Vec<(Complex64, Complex64)> = self
            .poles
            .iter()
            .map(|p| (Complex64::new(p.center[0], p.center[1]), Complex64::new(p.amplitude[0], p.amplitude[1])))
            .collect();
        if let Some(r) = &self.random {
            let q = random_holomorphic_quadratic(group, &mut rng, r.count, self.truncation)?;
            poles.extend(q.poles().iter().map(|&(w, a)| (w, a * r.amplitude)));
        }
        PoincareQuadratic::new(group.clone(), poles, self.truncation)
    }

    /// The metric `scale * g` described by the spec.
    pub fn metric(&self, group: &Arc<FuchsianGroup>, seed: u64) -> Result<MetricField> {
        let m = match self.kind {
            PerturbationKind::None => MetricField::hyperbolic(group.clone()),
            PerturbationKind::Conformal => MetricField::conformal(group.clone(), self.conformal_factor(group, seed)?),
            PerturbationKind::General => MetricField::general(group.clone(), self.tensor(group, seed)?)?,
            PerturbationKind::Holomorphic => MetricField::general(group.clone(), self.tensor(group, seed)?)?,
        };
        Ok(if self.scale != 1.0 { m.scaled(self.scale) } else { m })
    }

    /// One-parameter family through `g0` in the direction of the spec.
    pub fn family(&self, group: &Arc<FuchsianGroup>, seed: u64) -> Result<Family> {
        match self.kind {
            PerturbationKind::Conformal => Ok(Family::Conformal(self.conformal_factor(group, seed)?)),
            _ => Ok(Family::Linear(self.tensor(group, seed)?)),
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        if !(self.scale > 0.0) {
            return Err(Error::config(format!("{path}.scale"), "scale must be positive"));
        }
        for (name, list) in [("bumps", &self.bumps), ("hessian", &self.hessian), ("pair[0]", &self.pair[0]), ("pair[1]", &self.pair[1])] {
            for (i, b) in list.iter().enumerate() {
                if !(b.radius > 0.0) || !(b.center[1] > 0.0) || !b.amplitude.is_finite() {
                    return Err(Error::config(
                        format!("{path}.{name}[{i}]"),
                        "bump needs a positive radius, a center with y > 0 and a finite amplitude",
                    ));
                }
            }
        }
        if let Some(r) = &self.random {
            if !(r.radius[0] > 0.0 && r.radius[1] > r.radius[0]) || !r.amplitude.is_finite() {
                return Err(Error::config(format!("{path}.random"), "need 0 < radius[0] < radius[1] and a finite amplitude"));
            }
        }
        for (i, p) in self.poles.iter().enumerate() {
            if !(p.center[1] > 0.0) {
                return Err(Error::config(format!("{path}.poles[{i}]"), "pole must lie in the upper half-plane"));
            }
        }
        if self.kind == PerturbationKind::Conformal && self.trace_free {
            return Err(Error::config(format!("{path}.trace_free"), "a conformal perturbation is pure trace"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub ode_step: f64,
    pub fd_steps: Vec<f64>,
    pub burn_in: f64,
    pub shooting_tol: f64,
    pub shooting_max_iter: usize,
    /// Base grid nodes per sector, radial and angular.
    pub grid: [usize; 2],
    pub fiber: usize,
    /// Colatitude and longitude counts of the `S^2` rule.
    pub sphere: [usize; 2],
    pub entropy_step: f64,
    pub birkhoff_time: f64,
    pub birkhoff_discard: f64,
    pub stencil_h: f64,
    pub curvature_margin: f64,
    pub hessian_h: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            ode_step: crate::geodesic::DEFAULT_STEP,
            fd_steps: crate::spectra::DEFAULT_FD_STEPS.to_vec(),
            burn_in: crate::geodesic::DEFAULT_BURN_IN,
            shooting_tol: 1e-10,
            shooting_max_iter: 40,
            grid: [12, 12],
            fiber: 16,
            sphere: [8, 16],
            entropy_step: 0.02,
            birkhoff_time: 2000.0,
            birkhoff_discard: 50.0,
            stencil_h: 1e-3,
            curvature_margin: 0.05,
            hessian_h: 0.02,
        }
    }
}

impl Numerics {
    pub fn shooting(&self) -> ShootingOptions {
        ShootingOptions {
            step: self.ode_step,
            tol: self.shooting_tol,
            max_iter: self.shooting_max_iter,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("ode_step", self.ode_step),
            ("shooting_tol", self.shooting_tol),
            ("entropy_step", self.entropy_step),
            ("stencil_h", self.stencil_h),
            ("hessian_h", self.hessian_h),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("numerics.{name}"), format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("burn_in", self.burn_in),
            ("birkhoff_time", self.birkhoff_time),
            ("birkhoff_discard", self.birkhoff_discard),
            ("curvature_margin", self.curvature_margin),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!("numerics.{name}"), format!("must be nonnegative, got {v}")));
            }
        }
        if self.fd_steps.is_empty() {
            return Err(Error::config("numerics.fd_steps", "need at least one step"));
        }
        for (i, h) in self.fd_steps.iter().enumerate() {
            if !(*h > 0.0) {
                return Err(Error::config(format!("numerics.fd_steps[{i}]"), format!("must be positive, got {h}")));
            }
        }
        if self.shooting_max_iter == 0 {
            return Err(Error::config("numerics.shooting_max_iter", "must be at least 1"));
        }
        if self.grid.contains(&0) || self.fiber == 0 || self.sphere.contains(&0) {
            return Err(Error::config("numerics", "quadrature sizes must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub group: GroupSpec,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    /// Direction for X-ray, derivative and Hessian checks.
    #[serde(default)]
    pub tangent: Option<PerturbationSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    /// Maximal word length of enumerated classes.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Explicit class words; when empty, classes are enumerated to `depth`.
    #[serde(default)]
    pub classes: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_depth() -> usize {
    2
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            group: GroupSpec::default(),
            perturbation: PerturbationSpec::default(),
            tangent: None,
            numerics: Numerics::default(),
            depth: default_depth(),
            classes: Vec::new(),
            seed: 0,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Checks everything that can be checked without running anything,
    /// including the group relator.
    pub fn validate(&self) -> Result<()> {
        self.numerics.validate()?;
        self.perturbation.validate("perturbation")?;
        if self.perturbation.kind == PerturbationKind::Holomorphic {
            return Err(Error::config("perturbation.kind", "holomorphic is only available as a tangent"));
        }
        if let Some(t) = &self.tangent {
            t.validate("tangent")?;
            if t.scale != 1.0 {
                return Err(Error::config("tangent.scale", "tangents take no scale"));
            }
        }
        let g = self.group.build()?;
        for (i, w) in self.classes.iter().enumerate() {
            g.parse_class(w)
                .map_err(|e| Error::config(format!("classes[{i}]"), e.to_string()))?;
        }
        Ok(())
    }

    pub fn group(&self) -> Result<Arc<FuchsianGroup>> {
        Ok(Arc::new(self.group.build()?))
    }

    /// Canonical JSON: keys sorted at every level, no whitespace.
    pub fn canonical_json(&self) -> String {
        canonical_string(&serde_json::to_value(self).expect("config serializes"))
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Serializes with object keys sorted recursively.
pub fn canonical_string(v: &Value) -> String {
    fn sorted(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                let mut out = serde_json::Map::new();
                for k in keys {
                    out.insert(k.clone(), sorted(&m[k]));
                }
                Value::Object(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(sorted).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sorted(v)).expect("json value serializes")
}

/// Parses `key=value`; the value is read as JSON when it parses, else as a
/// string.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override {s:?} is not key=value")))?;
    key_segments(k)?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

/// Splits `a.b[2].c` (or `a.b.2.c`) into its segments.
fn key_segments(key: &str) -> Result<Vec<String>> {
    let bad = || Error::Usage(format!("override key {key:?} is not a dotted path"));
    let mut out = Vec::new();
    for part in key.split('.') {
        let (name, mut rest) = part.split_at(part.find('[').unwrap_or(part.len()));
        if name.is_empty() {
            return Err(bad());
        }
        out.push(name.to_string());
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            let idx = &rest[1..close];
            if idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            out.push(idx.to_string());
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(bad());
            }
        }
    }
    Ok(out)
}

/// Sets a dotted path in a JSON object, creating objects along the way.
/// Numeric segments (`a.0` or `a[0]`) index into existing arrays.
pub fn apply_override(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts = key_segments(key)?;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if cur.is_null() {
            *cur = Value::Object(serde_json::Map::new());
        }
        cur = match cur {
            Value::Object(m) => {
                if last {
                    m.insert(part.clone(), value);
                    return Ok(());
                }
                m.entry(part.clone()).or_insert(Value::Null)
            }
            Value::Array(a) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::config(key, format!("segment {part:?} indexes an array")))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(key, format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::config(key, format!("segment {part:?} is not an object"))),
        };
    }
    Ok(())
}

/// Parses and validates a configuration document with overrides applied.
pub fn parse_config_str(text: &str, overrides: &[(String, Value)]) -> Result<ExperimentConfig> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| Error::config("", e.to_string()))?;
    if !v.is_object() {
        return Err(Error::config("", "configuration must be a JSON object"));
    }
    for (k, val) in overrides {
        apply_override(&mut v, k, val.clone())?;
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path, overrides: &[(String, Value)]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("", format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}
