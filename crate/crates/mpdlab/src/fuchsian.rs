//! Upper half-plane model, Fuchsian groups, words and conjugacy classes.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::CJet;

pub const DET_TOL: f64 = 1e-12;
pub const CLASSIFY_TOL: f64 = 1e-10;
/// Guard on the number of greedy reduction steps.
pub const MAX_REDUCTION_STEPS: usize = 10_000;

/// `cosh` of the hyperbolic distance between two points of the half-plane.
#[inline]
pub fn cosh_dist(z: Complex64, w: Complex64) -> f64 {
    1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im)
}

pub fn dist(z: Complex64, w: Complex64) -> f64 {
    cosh_dist(z, w).max(1.0).acosh()
}

/// A point of the half-plane with a coordinate direction angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitTangent {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl UnitTangent {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        UnitTangent { x, y, theta }
    }

    pub fn at(z: Complex64, theta: f64) -> Self {
        UnitTangent {
            x: z.re,
            y: z.im,
            theta,
        }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    /// Same point, opposite direction.
    pub fn flip(&self) -> Self {
        UnitTangent {
            theta: self.theta + PI,
            ..*self
        }
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Hyperbolic,
    Parabolic,
    Elliptic,
}

/// An element of SL(2, R) acting by Mobius transformations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GroupElement {
    /// Checked constructor: the determinant must be one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::Contract(format!("determinant {det} is not 1")));
        }
        Ok(GroupElement { a, b, c, d })
    }

    /// Divides by the square root of a positive determinant.
    pub fn normalized(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) {
            return Err(Error::Contract(format!("determinant {det} is not positive")));
        }
        let s = det.sqrt().recip();
        Ok(GroupElement {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        })
    }

    pub const fn identity() -> Self {
        GroupElement {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    pub fn diag(l: f64) -> Self {
        GroupElement {
            a: l,
            b: 0.0,
            c: 0.0,
            d: 1.0 / l,
        }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        GroupElement {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn classify(&self) -> Classification {
        let t = self.trace().abs();
        if (t - 2.0).abs() <= CLASSIFY_TOL {
            Classification::Parabolic
        } else if t > 2.0 {
            Classification::Hyperbolic
        } else {
            Classification::Elliptic
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.classify() == Classification::Hyperbolic
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn apply_jet(&self, z: &CJet) -> CJet {
        z.mobius(self.a, self.b, self.c, self.d)
    }

    /// Argument of the complex derivative at `z`.
    pub fn derivative_arg(&self, z: Complex64) -> f64 {
        -2.0 * (self.c * z + self.d).arg()
    }

    /// Pushforward of a tangent vector; the direction rotates by `arg` of the derivative.
    pub fn push(&self, v: &UnitTangent) -> UnitTangent {
        let z = v.z();
        UnitTangent::at(self.apply(z), v.theta + self.derivative_arg(z))
    }

    pub fn max_abs_diff(&self, o: &GroupElement) -> f64 {
        [
            self.a - o.a,
            self.b - o.b,
            self.c - o.c,
            self.d - o.d,
        ]
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether the element equals plus or minus the identity within `tol`.
    pub fn is_identity(&self, tol: f64) -> bool {
        let id = GroupElement::identity();
        let neg = GroupElement {
            a: -1.0,
            b: 0.0,
            c: 0.0,
            d: -1.0,
        };
        self.max_abs_diff(&id) <= tol || self.max_abs_diff(&neg) <= tol
    }

    /// Repelling and attracting fixed points on the boundary; `None` is infinity.
    pub fn fixed_points(&self) -> Result<(Option<f64>, Option<f64>)> {
        if !self.is_hyperbolic() {
            return Err(Error::NonHyperbolic {
                trace: self.trace().abs(),
            });
        }
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
        if c.abs() <= 1e-14 * scale {
            let finite = b / (d - a);
            // derivative at the finite fixed point is 1/d^2
            if d.abs() > 1.0 {
                Ok((None, Some(finite)))
            } else {
                Ok((Some(finite), None))
            }
        } else {
            let disc = ((a + d) * (a + d) - 4.0).sqrt();
            let p = (a - d + disc) / (2.0 * c);
            let q = (a - d - disc) / (2.0 * c);
            if (c * p + d).abs() > 1.0 {
                Ok((Some(q), Some(p)))
            } else {
                Ok((Some(p), Some(q)))
            }
        }
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, o: GroupElement) -> GroupElement {
        GroupElement {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Length of the closed geodesic in the class of a hyperbolic element.
pub fn translation_length(elem: &GroupElement) -> Result<f64> {
    let t = elem.trace().abs();
    if t <= 2.0 + CLASSIFY_TOL {
        return Err(Error::NonHyperbolic { trace: t });
    }
    Ok(2.0 * (t / 2.0).acosh())
}

/// A point on the oriented axis of `elem` with direction towards the attracting
/// fixed point; the point is the foot of the perpendicular from `center`.
pub fn axis_seed(elem: &GroupElement, center: Complex64) -> Result<UnitTangent> {
    let (rep, att) = elem.fixed_points()?;
    // n maps 0 to the repelling and infinity to the attracting fixed point
    let n = match (rep, att) {
        (Some(r), None) => GroupElement::new(1.0, r, 0.0, 1.0)?,
        (None, Some(a)) => GroupElement::new(a, -1.0, 1.0, 0.0)?,
        (Some(r), Some(a)) => {
            let s = (a - r).signum();
            GroupElement::normalized(a * s, r, s, 1.0)?
        }
        (None, None) => unreachable!("a hyperbolic element has a finite fixed point"),
    };
    let w = n.inverse().apply(center);
    let foot = Complex64::new(0.0, w.norm());
    Ok(n.push(&UnitTangent::at(foot, FRAC_PI_2)))
}

/// One letter of a word: a generator index and whether it is inverted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    /// Ordering key: a < A < b < B < ...
    pub fn key(self) -> usize {
        2 * self.generator + self.inverse as usize
    }
}

impl Ord for Letter {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key().cmp(&o.key())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

pub fn is_reduced(word: &[Letter]) -> bool {
    word.windows(2).all(|w| w[1] != w[0].inv())
}

pub fn is_cyclically_reduced(word: &[Letter]) -> bool {
    is_reduced(word) && (word.len() < 2 || word[0] != word[word.len() - 1].inv())
}

/// Lexicographically minimal rotation.
pub fn min_rotation(word: &[Letter]) -> Vec<Letter> {
    let n = word.len();
    (0..n)
        .map(|s| word[s..].iter().chain(&word[..s]).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

pub fn inverse_word(word: &[Letter]) -> Vec<Letter> {
    word.iter().rev().map(|l| l.inv()).collect()
}

/// A free homotopy class, stored as its canonical cyclically reduced word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConjugacyClass {
    word: Vec<Letter>,
}

impl ConjugacyClass {
    pub fn new(word: Vec<Letter>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::Contract("conjugacy class word is empty".into()));
        }
        if !is_cyclically_reduced(&word) {
            return Err(Error::Contract("word is not cyclically reduced".into()));
        }
        Ok(ConjugacyClass { word })
    }

    /// Canonical representative of the class of `word`.
    pub fn canonical(word: &[Letter]) -> Result<Self> {
        Self::new(min_rotation(word))
    }

    pub fn word(&self) -> &[Letter] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn inverse(&self) -> Self {
        ConjugacyClass {
            word: min_rotation(&inverse_word(&self.word)),
        }
    }
}

impl Ord for ConjugacyClass {
    fn cmp(&self, o: &Self) -> Ordering {
        self.word
            .len()
            .cmp(&o.word.len())
            .then_with(|| self.word.cmp(&o.word))
    }
}

impl PartialOrd for ConjugacyClass {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn valid_label(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_alphanumeric() || c == '_')
        && s.chars().next().is_some_and(|c| c.is_alphabetic())
        && s.to_lowercase() == s
        && s.to_uppercase() != s
}

/// A cocompact Fuchsian group given by generator matrices.
#[derive(Clone, Debug)]
pub struct FuchsianGroup {
    labels: Vec<String>,
    generators: Vec<GroupElement>,
    relator: Option<Vec<Letter>>,
    center: Complex64,
    closed: Vec<(Letter, GroupElement)>,
}

impl FuchsianGroup {
    pub fn new(
        labels: Vec<String>,
        generators: Vec<GroupElement>,
        relator: Option<&str>,
        center: Complex64,
    ) -> Result<Self> {
        if labels.len() != generators.len() || labels.is_empty() {
            return Err(Error::config("group.generators", "need one label per generator"));
        }
        for (i, l) in labels.iter().enumerate() {
            if !valid_label(l) {
                return Err(Error::config(
                    format!("group.generators[{i}].label"),
                    format!("label {l:?} must be a lowercase identifier"),
                ));
            }
            if labels[..i].contains(l) {
                return Err(Error::config(
                    format!("group.generators[{i}].label"),
                    format!("duplicate label {l:?}"),
                ));
            }
        }
        for (i, g) in generators.iter().enumerate() {
            if (g.det() - 1.0).abs() > DET_TOL {
                return Err(Error::config(
                    format!("group.generators[{i}]"),
                    format!("generator {} has determinant {}", labels[i], g.det()),
                ));
            }
            if !g.is_hyperbolic() {
                return Err(Error::config(
                    format!("group.generators[{i}]"),
                    format!("generator {} is not hyperbolic (trace {})", labels[i], g.trace()),
                ));
            }
        }
        if !(center.im > 0.0) {
            return Err(Error::config("group.dirichlet_center", "center must lie in the upper half-plane"));
        }
        let closed = generators
            .iter()
            .enumerate()
            .flat_map(|(i, g)| [(Letter::new(i, false), *g), (Letter::new(i, true), g.inverse())])
            .collect();
        let mut group = FuchsianGroup {
            labels,
            generators,
            relator: None,
            center,
            closed,
        };
        if let Some(r) = relator {
            let w = group.parse_word(r)?;
            let m = group.evaluate_word(&w);
            if !m.is_identity(1e-9) {
                return Err(Error::config(
                    "group.relator",
                    format!("relator {r} evaluates to {m:?}, not +-identity"),
                ));
            }
            group.relator = Some(w);
        }
        Ok(group)
    }

    /// The genus-2 group of the regular octagon with angles pi/4.
    ///
    /// Generators are `R^k T R^-k` in the disk, with `T` the translation along
    /// the real diameter of length `l`, `cosh(l/2) = 1 + sqrt 2`, and `R` the
    /// rotation by `pi/4`; they are conjugated to the half-plane by the Cayley
    /// map sending 0 to `i`.
    pub fn genus2_octagon() -> Self {
        let ch = 1.0 + 2f64.sqrt();
        let sh = (ch * ch - 1.0).sqrt();
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::i();
        // z = (i w + i) / (-w + 1)
        let cay = [[i, i], [-one, one]];
        let det = cay[0][0] * cay[1][1] - cay[0][1] * cay[1][0];
        let cay_inv = [
            [cay[1][1] / det, -cay[0][1] / det],
            [-cay[1][0] / det, cay[0][0] / det],
        ];
        let mm = |p: [[Complex64; 2]; 2], q: [[Complex64; 2]; 2]| {
            let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
            for (r_i, p_i) in r.iter_mut().zip(&p) {
                for (j, r_ij) in r_i.iter_mut().enumerate() {
                    *r_ij = p_i[0] * q[0][j] + p_i[1] * q[1][j];
                }
            }
            r
        };
        let t = [[ch * one, sh * one], [sh * one, ch * one]];
        let gens: Vec<GroupElement> = (0..4)
            .map(|k| {
                let half = Complex64::from_polar(1.0, k as f64 * PI / 8.0);
                let rot = [[half, 0.0 * one], [0.0 * one, half.conj()]];
                let rot_inv = [[half.conj(), 0.0 * one], [0.0 * one, half]];
                let disk = mm(mm(rot, t), rot_inv);
                let h = mm(mm(cay, disk), cay_inv);
                debug_assert!(h.iter().flatten().all(|v| v.im.abs() < 1e-12));
                GroupElement::normalized(h[0][0].re, h[0][1].re, h[1][0].re, h[1][1].re)
                    .expect("octagon generator")
            })
            .collect();
        let labels = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        FuchsianGroup::new(labels, gens, Some("aBcDAbCd"), Complex64::i())
            .expect("octagon group satisfies its relator")
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn relator(&self) -> Option<&[Letter]> {
        self.relator.as_deref()
    }

    pub fn dirichlet_center(&self) -> Complex64 {
        self.center
    }

    /// Generators together with their inverses.
    pub fn closed_generators(&self) -> &[(Letter, GroupElement)] {
        &self.closed
    }

    pub fn element(&self, l: Letter) -> GroupElement {
        let g = self.generators[l.generator];
        if l.inverse {
            g.inverse()
        } else {
            g
        }
    }

    fn single_char_labels(&self) -> bool {
        self.labels.iter().all(|l| l.chars().count() == 1)
    }

    pub fn parse_word(&self, s: &str) -> Result<Vec<Letter>> {
        let tokens: Vec<String> = if self.single_char_labels() {
            s.chars().filter(|c| !c.is_whitespace() && *c != '.').map(String::from).collect()
        } else {
            s.split('.').filter(|t| !t.is_empty()).map(String::from).collect()
        };
        tokens
            .iter()
            .map(|t| {
                if let Some(i) = self.labels.iter().position(|l| l == t) {
                    Ok(Letter::new(i, false))
                } else if let Some(i) = self.labels.iter().position(|l| l.to_uppercase() == *t) {
                    Ok(Letter::new(i, true))
                } else {
                    Err(Error::config("word", format!("unknown generator label {t:?} in {s:?}")))
                }
            })
            .collect()
    }

    pub fn format_word(&self, word: &[Letter]) -> String {
        let parts: Vec<String> = word
            .iter()
            .map(|l| {
                let s = &self.labels[l.generator];
                if l.inverse {
                    s.to_uppercase()
                } else {
                    s.clone()
                }
            })
            .collect();
        if self.single_char_labels() {
            parts.concat()
        } else {
            parts.join(".")
        }
    }

    pub fn parse_class(&self, s: &str) -> Result<ConjugacyClass> {
        ConjugacyClass::canonical(&self.parse_word(s)?)
    }

    /// Ordered product of the letters' matrices; the empty word gives the identity.
    pub fn evaluate_word(&self, word: &[Letter]) -> GroupElement {
        word.iter()
            .fold(GroupElement::identity(), |m, l| m * self.element(*l))
    }

    pub fn evaluate_class(&self, class: &ConjugacyClass) -> GroupElement {
        self.evaluate_word(class.word())
    }

    /// Conjugacy classes of cyclically reduced words up to the given length,
    /// sorted by length then lexicographically; the trivial class is omitted.
    pub fn enumerate_classes(&self, max_word_length: usize) -> Vec<ConjugacyClass> {
        let letters: Vec<Letter> = (0..self.rank())
            .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
            .collect();
        let mut out = Vec::new();
        let mut stack: Vec<Letter> = Vec::new();
        fn rec(
            letters: &[Letter],
            max: usize,
            stack: &mut Vec<Letter>,
            out: &mut Vec<ConjugacyClass>,
        ) {
            if !stack.is_empty() && is_cyclically_reduced(stack) && min_rotation(stack) == *stack {
                out.push(ConjugacyClass { word: stack.clone() });
            }
            if stack.len() == max {
                return;
            }
            for &l in letters {
                if stack.last().is_some_and(|p| *p == l.inv()) {
                    continue;
                }
                // the canonical rotation starts with its smallest letter
                if stack.first().is_some_and(|f| l < *f) {
                    continue;
                }
                stack.push(l);
                rec(letters, max, stack, out);
                stack.pop();
            }
        }
        rec(&letters, max_word_length, &mut stack, &mut out);
        out.sort();
        out
    }

    /// Greedy descent into the Dirichlet domain. Returns the reduced point and
    /// the element mapping the input to it.
    pub fn reduce_to_domain(&self, z: Complex64) -> Result<(Complex64, GroupElement)> {
        self.reduce_from(z, GroupElement::identity())
    }

    /// Reduction starting from a guess `hint` (the result is `g z` for some g).
    pub fn reduce_from(&self, z: Complex64, hint: GroupElement) -> Result<(Complex64, GroupElement)> {
        if !(z.im > 0.0) || !z.re.is_finite() {
            return Err(Error::Numerical(format!("point {z} is not in the upper half-plane")));
        }
        let mut gamma = hint;
        let mut w = hint.apply(z);
        let mut cur = cosh_dist(w, self.center);
        for _ in 0..MAX_REDUCTION_STEPS {
            let mut best: Option<(f64, Complex64, GroupElement)> = None;
            for (_, h) in &self.closed {
                let hw = h.apply(w);
                let d = cosh_dist(hw, self.center);
                if best.as_ref().is_none_or(|b| d < b.0) {
                    best = Some((d, hw, *h));
                }
            }
            let (d, hw, h) = best.expect("nonempty generator set");
            if d < cur - 1e-13 * cur {
                w = hw;
                cur = d;
                gamma = h * gamma;
            } else {
                return Ok((w, gamma));
            }
        }
        Err(Error::Numerical(format!(
            "domain reduction of {z} exceeded {MAX_REDUCTION_STEPS} steps"
        )))
    }

    pub fn in_domain(&self, z: Complex64, tol: f64) -> bool {
        let c = cosh_dist(z, self.center);
        self.closed
            .iter()
            .all(|(_, h)| cosh_dist(h.apply(z), self.center) >= c - tol * c)
    }
}

/// Geodesic polar description of the Dirichlet polygon about its center.
///
/// In the disk model centered at the Dirichlet center, each side pairing
/// `h` contributes the bisector of `0` and `h(0)`, a geodesic at distance
/// `d_h / 2` in direction `beta_h`.
#[derive(Clone, Debug)]
pub struct DirichletPolygon {
    center: Complex64,
    /// `(beta, tanh(d/2))` per side.
    sides: Vec<(f64, f64)>,
    /// Angular breakpoints with the active side on each interval.
    sectors: Vec<(f64, f64, usize)>,
}

impl DirichletPolygon {
    pub fn new(group: &FuchsianGroup) -> Result<Self> {
        let center = group.dirichlet_center();
        let sides: Vec<(f64, f64)> = group
            .closed_generators()
            .iter()
            .map(|(_, h)| {
                let w = to_disk(center, h.apply(center));
                let half = dist(center, h.apply(center)) / 2.0;
                (w.arg(), half.tanh())
            })
            .collect();
        let active = |alpha: f64| -> (usize, f64) {
            let mut best = (usize::MAX, f64::INFINITY);
            for (k, &(beta, th)) in sides.iter().enumerate() {
                let c = (alpha - beta).cos();
                if c > th {
                    let r = (th / c).atanh();
                    if r < best.1 {
                        best = (k, r);
                    }
                }
            }
            best
        };
        let samples = 4096;
        let mut breaks: Vec<f64> = Vec::new();
        let a0 = -PI;
        let mut prev = active(a0);
        if prev.0 == usize::MAX {
            return Err(Error::Numerical("Dirichlet polygon is not compact".into()));
        }
        for s in 1..=samples {
            let a = a0 + 2.0 * PI * s as f64 / samples as f64;
            let cur = active(a);
            if cur.0 == usize::MAX {
                return Err(Error::Numerical("Dirichlet polygon is not compact".into()));
            }
            if cur.0 != prev.0 {
                let (mut lo, mut hi) = (a - 2.0 * PI / samples as f64, a);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if active(mid).0 == prev.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                breaks.push(0.5 * (lo + hi));
            }
            prev = cur;
        }
        if breaks.is_empty() {
            return Err(Error::Numerical("Dirichlet polygon has no vertices".into()));
        }
        let mut sectors = Vec::new();
        for k in 0..breaks.len() {
            let lo = breaks[k];
            let hi = if k + 1 < breaks.len() {
                breaks[k + 1]
            } else {
                breaks[0] + 2.0 * PI
            };
            let side = active(0.5 * (lo + hi)).0;
            sectors.push((lo, hi, side));
        }
        Ok(DirichletPolygon {
            center,
            sides,
            sectors,
        })
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    /// `(alpha_start, alpha_end, side)` for each angular sector.
    pub fn sectors(&self) -> &[(f64, f64, usize)] {
        &self.sectors
    }

    /// `(beta, tanh d)` for a side: direction of the foot of the perpendicular
    /// from the center and the Klein-model distance to it.
    pub fn side(&self, k: usize) -> (f64, f64) {
        self.sides[k]
    }

    /// Side hit by the ray at angle `alpha` (any real angle).
    pub fn side_at(&self, alpha: f64) -> usize {
        let lo = self.sectors[0].0;
        let a = lo + (alpha - lo).rem_euclid(2.0 * PI);
        self.sectors
            .iter()
            .find(|s| a >= s.0 && a < s.1)
            .unwrap_or(&self.sectors[0])
            .2
    }

    /// Radial extent of the polygon in direction `alpha` along side `side`.
    pub fn r_max(&self, alpha: f64, side: usize) -> f64 {
        let (beta, th) = self.sides[side];
        (th / (alpha - beta).cos()).atanh()
    }

    /// Half-plane point at geodesic polar coordinates `(r, alpha)` about the center.
    pub fn point(&self, r: f64, alpha: f64) -> Complex64 {
        from_disk(self.center, Complex64::from_polar((r / 2.0).tanh(), alpha))
    }

    pub fn max_radius(&self) -> f64 {
        self.sectors
            .iter()
            .map(|&(lo, _, s)| self.r_max(lo, s).max(self.r_max(lo + 1e-12, s)))
            .fold(0.0, f64::max)
    }
}

/// Disk coordinate of `z` with `center` sent to the origin.
pub fn to_disk(center: Complex64, z: Complex64) -> Complex64 {
    // Cayley map adapted to the center a + ib: u = (z - a)/b, w = (u - i)/(u + i)
    let u = (z - center.re) / center.im;
    (u - Complex64::i()) / (u + Complex64::i())
}

pub fn from_disk(center: Complex64, w: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let u = Complex64::i() * (one + w) / (one - w);
    u * center.im + center.re
}
