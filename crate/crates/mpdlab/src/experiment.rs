//! Command orchestration: runs one command on a validated configuration and
//! persists the result envelope (plus CSV tables) under the output directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{canonical_string, ExperimentConfig, Numerics, PerturbationKind, PerturbationSpec};
use crate::error::{Error, Result};
use crate::fiber::{
    corr2_fiber_check, gauss_bonnet_area, liouville_entropy, liouville_pi2, mean_root_curvature, kappa_hessian_check,
    trace_average, BaseGrid, EntropyOptions, HessianCheckOptions, Mat3, PointTensor3, SMQuadrature, SphereQuadrature,
};
use crate::fields::{domain_samples, scalar_value};
use crate::fuchsian::{translation_length, ConjugacyClass, DirichletPolygon, FuchsianGroup};
use crate::geodesic::{find_closed_geodesic, integrate_geodesic, ClosedGeodesic, ShootingOptions};
use crate::metric::MetricField;
use crate::spectra::{entry_for, length_derivative_check, mpd, mpd_derivative_check, xray, SpectrumEntry};
use crate::tensor::Tensor;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "MPDLAB_OUT";
pub const DEFAULT_OUT: &str = "mpdlab-out";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Mpd,
    Kappa,
    Entropy,
    Xray,
    DerivativeCheck,
    HessianCheck,
    Validate,
    Export,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Spectrum,
        Command::Mpd,
        Command::Kappa,
        Command::Entropy,
        Command::Xray,
        Command::DerivativeCheck,
        Command::HessianCheck,
        Command::Validate,
        Command::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Mpd => "mpd",
            Command::Kappa => "kappa",
            Command::Entropy => "entropy",
            Command::Xray => "xray",
            Command::DerivativeCheck => "derivative-check",
            Command::HessianCheck => "hessian-check",
            Command::Validate => "validate",
            Command::Export => "export",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
            Error::Usage(format!("unknown command {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub config_hash: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub command: Command,
    pub seed: u64,
    pub numerics: Numerics,
    /// The full validated configuration, defaults filled in.
    pub config: ExperimentConfig,
    /// False when a `validate` invariant failed.
    pub success: bool,
    pub payload: Value,
}

/// Error document written in place of an envelope.
pub fn error_payload(err: &Error, command: Option<&str>) -> Value {
    let mut v = json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
        }
    });
    if let Some(c) = command {
        v["error"]["command"] = json!(c);
    }
    match err {
        Error::Config { path, .. } => v["error"]["path"] = json!(path),
        Error::CurvatureSign { bound, worst } => {
            v["error"]["bound"] = json!(bound);
            v["error"]["worst"] = json!(worst);
        }
        _ => {}
    }
    v
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub out_dir: Option<PathBuf>,
    /// Also write CSV tables where the command has them.
    pub csv: bool,
}

/// `--out`, then the config, then `$MPDLAB_OUT`, then `mpdlab-out`.
pub fn resolve_out_dir(opts: &RunOptions, config: &ExperimentConfig) -> PathBuf {
    if let Some(d) = &opts.out_dir {
        return d.clone();
    }
    if let Some(d) = &config.output_dir {
        return PathBuf::from(d);
    }
    match std::env::var_os(OUT_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

/// Paths written by one run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub envelope: ResultEnvelope,
    pub files: Vec<PathBuf>,
}

/// Runs `command` and writes `<out>/<command>.json` plus any CSV tables.
pub fn run(command: Command, config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    config.validate()?;
    let out = resolve_out_dir(opts, config);
    std::fs::create_dir_all(&out)?;
    let ctx = Context::new(config, &out)?;
    let mut tables: Vec<(String, Vec<String>, Vec<Vec<String>>)> = Vec::new();
    let (payload, success) = match command {
        Command::Spectrum => {
            let sp = ctx.spectrum()?;
            tables.push(spectrum_table(&sp.entries));
            (serde_json::to_value(&sp)?, true)
        }
        Command::Mpd => (ctx.mpd()?, true),
        Command::Kappa => (ctx.kappa()?, true),
        Command::Entropy => (ctx.entropy()?, true),
        Command::Xray => (ctx.xray()?, true),
        Command::DerivativeCheck => (ctx.derivative_check()?, true),
        Command::HessianCheck => (ctx.hessian_check()?, true),
        Command::Validate => {
            let report = ctx.validate()?;
            let ok = report.failed == 0;
            (serde_json::to_value(&report)?, ok)
        }
        Command::Export => {
            let (payload, t) = ctx.export()?;
            tables.extend(t);
            (payload, true)
        }
    };
    let envelope = ResultEnvelope {
        config_hash: config.hash(),
        tool_version: TOOL_VERSION.into(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        command,
        seed: config.seed,
        numerics: config.numerics.clone(),
        config: config.clone(),
        success,
        payload,
    };
    let mut files = Vec::new();
    let path = out.join(format!("{}.json", command.name()));
    std::fs::write(&path, serde_json::to_string_pretty(&envelope)?)?;
    files.push(path);
    if opts.csv || command == Command::Export {
        for (name, header, rows) in tables {
            let path = out.join(name);
            write_csv(&path, &header, &rows)?;
            files.push(path);
        }
    }
    Ok(RunOutput { envelope, files })
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn spectrum_table(entries: &[SpectrumEntry]) -> (String, Vec<String>, Vec<Vec<String>>) {
    let header = ["word", "length", "log_mpd", "lambda", "route_discrepancy"].map(String::from).to_vec();
    let rows = entries
        .iter()
        .map(|e| vec![e.word.clone(), num(e.length), num(e.log_mpd), num(e.lambda), num(e.route_discrepancy)])
        .collect();
    ("spectrum.csv".into(), header, rows)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Failure {
    pub word: String,
    pub kind: String,
    pub error: String,
}

impl Failure {
    fn new(word: String, e: &Error) -> Self {
        Failure {
            word,
            kind: e.kind().into(),
            error: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumPayload {
    pub entries: Vec<SpectrumEntry>,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidateReport {
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
    /// Checks that could not be evaluated, with the error.
    pub errors: Vec<Failure>,
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    group: Arc<FuchsianGroup>,
    metric: MetricField,
    classes: Vec<ConjugacyClass>,
    shooting: ShootingOptions,
    cache_dir: PathBuf,
    metric_key: String,
}

impl<'a> Context<'a> {
    fn new(config: &'a ExperimentConfig, out: &Path) -> Result<Self> {
        let group = config.group()?;
        let metric = config.perturbation.metric(&group, config.seed)?;
        let classes = if config.classes.is_empty() {
            group.enumerate_classes(config.depth)
        } else {
            config.classes.iter().map(|w| group.parse_class(w)).collect::<Result<_>>()?
        };
        let shooting = config.numerics.shooting();
        let metric_key = canonical_string(&json!({
            "group": config.group,
            "perturbation": config.perturbation,
            "seed": config.seed,
            "shooting": shooting,
        }));
        Ok(Context {
            config,
            group,
            metric,
            classes,
            shooting,
            cache_dir: out.join("cache"),
            metric_key,
        })
    }

    fn word(&self, c: &ConjugacyClass) -> String {
        self.group.format_word(c.word())
    }

    fn numerics(&self) -> &Numerics {
        &self.config.numerics
    }

    /// Closed geodesic of the configured metric, read from or stored in the
    /// per-(metric, class) cache.
    fn geodesic(&self, class: &ConjugacyClass) -> Result<ClosedGeodesic> {
        self.geodesic_on(&self.metric, &self.metric_key, class)
    }

    fn geodesic_on(&self, metric: &MetricField, key: &str, class: &ConjugacyClass) -> Result<ClosedGeodesic> {
        let word = self.word(class);
        let hash = hex::encode(Sha256::digest(format!("{key}|{word}").as_bytes()));
        let path = self.cache_dir.join(format!("{hash}.json"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(geo) = serde_json::from_str::<ClosedGeodesic>(&text) {
                return Ok(geo);
            }
        }
        let geo = find_closed_geodesic(metric, &self.group, class, &self.shooting)?;
        std::fs::create_dir_all(&self.cache_dir)?;
        std::fs::write(&path, serde_json::to_string(&geo)?)?;
        Ok(geo)
    }

    fn base_key(&self) -> String {
        canonical_string(&json!({
            "group": self.config.group,
            "perturbation": PerturbationSpec::default(),
            "seed": 0,
            "shooting": self.shooting,
        }))
    }

    fn spectrum(&self) -> Result<SpectrumPayload> {
        let mut out = SpectrumPayload {
            entries: Vec::new(),
            failures: Vec::new(),
        };
        for c in &self.classes {
            let r = self.geodesic(c).and_then(|g| entry_for(&self.metric, &self.group, &g, self.numerics().burn_in));
            match r {
                Ok(e) => out.entries.push(e),
                Err(e) => out.failures.push(Failure::new(self.word(c), &e)),
            }
        }
        Ok(out)
    }

    fn mpd(&self) -> Result<Value> {
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for c in &self.classes {
            match self.geodesic(c).and_then(|g| Ok((mpd(&self.metric, &g, self.numerics().burn_in)?, g))) {
                Ok((m, g)) => rows.push(json!({
                    "word": self.word(c),
                    "length": g.period,
                    "mpd": m,
                    "closure_residual": g.closure_residual,
                    "newton_iterations": g.iterations,
                })),
                Err(e) => failures.push(Failure::new(self.word(c), &e)),
            }
        }
        Ok(json!({ "classes": rows, "failures": failures }))
    }

    fn base_grid(&self) -> Result<BaseGrid> {
        let [n_r, n_a] = self.numerics().grid;
        BaseGrid::new(&self.group, n_r, n_a)
    }

    fn kappa(&self) -> Result<Value> {
        let base = self.base_grid()?;
        let margin = self.metric.check_negative_curvature(
            self.numerics().grid[0],
            self.numerics().grid[1],
            self.numerics().curvature_margin,
        )?;
        let kappa = mean_root_curvature(&self.metric, &base)?;
        Ok(json!({
            "kappa": kappa,
            "curvature_margin": margin,
            "base_nodes": base.nodes.len(),
            "base_area": base.area(),
        }))
    }

    fn entropy_options(&self) -> EntropyOptions {
        let n = self.numerics();
        EntropyOptions {
            burn_in: n.burn_in,
            step: n.entropy_step,
            birkhoff_time: n.birkhoff_time,
            birkhoff_discard: n.birkhoff_discard,
        }
    }

    fn entropy(&self) -> Result<Value> {
        let base = self.base_grid()?;
        let n = self.numerics();
        self.metric.check_negative_curvature(n.grid[0], n.grid[1], n.curvature_margin)?;
        let rule = SMQuadrature::new(&self.metric, &base, n.fiber)?;
        let report = liouville_entropy(&self.metric, &rule, &self.entropy_options())?;
        let kappa = mean_root_curvature(&self.metric, &base)?;
        Ok(json!({
            "entropy": report,
            "kappa": kappa,
            "gap": report.space - kappa,
            "mass": rule.mass(),
        }))
    }

    /// Direction field: the tangent spec, else the perturbation itself.
    fn direction(&self) -> Result<(Tensor, crate::spectra::Family)> {
        let group = &self.group;
        let spec = match &self.config.tangent {
            Some(t) => t,
            None if self.config.perturbation.kind != PerturbationKind::None => &self.config.perturbation,
            None => return Err(Error::config("tangent", "this command needs a tangent or a perturbation")),
        };
        Ok((spec.tensor(group, self.config.seed)?, spec.family(group, self.config.seed)?))
    }

    fn xray(&self) -> Result<Value> {
        let (s, _) = self.direction()?;
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for c in &self.classes {
            match self.geodesic(c).and_then(|g| Ok((xray(s.as_ref(), &self.metric, &g)?, g.period))) {
                Ok((x, l)) => rows.push(json!({ "word": self.word(c), "length": l, "xray": x, "ratio": x / l })),
                Err(e) => failures.push(Failure::new(self.word(c), &e)),
            }
        }
        Ok(json!({ "classes": rows, "failures": failures }))
    }

    fn derivative_check(&self) -> Result<Value> {
        let (_, family) = self.direction()?;
        let n = self.numerics();
        let mut length = Vec::new();
        let mut mpd_reports = Vec::new();
        let mut failures = Vec::new();
        for c in &self.classes {
            match length_derivative_check(&self.group, &family, c, &n.fd_steps, &self.shooting) {
                Ok(r) => length.push(r),
                Err(e) => failures.push(Failure::new(self.word(c), &e)),
            }
            match mpd_derivative_check(&self.group, &family, c, &n.fd_steps, &self.shooting, n.burn_in) {
                Ok(r) => mpd_reports.push(r),
                Err(e) => failures.push(Failure::new(self.word(c), &e)),
            }
        }
        Ok(json!({ "length": length, "mpd": mpd_reports, "failures": failures }))
    }

    fn hessian_check(&self) -> Result<Value> {
        let (s, _) = self.direction()?;
        let n = self.numerics();
        let opts = HessianCheckOptions {
            n_r: n.grid[0],
            n_alpha: n.grid[1],
            fiber: n.fiber,
            h: n.hessian_h,
        };
        Ok(serde_json::to_value(kappa_hessian_check(&self.group, &s, &opts)?)?)
    }

    fn validate(&self) -> Result<ValidateReport> {
        let mut checks = Vec::new();
        let mut errors = Vec::new();
        let mut check = |name: &str, r: Result<(f64, f64)>| match r {
            Ok((measured, bound)) => checks.push(Check {
                name: name.into(),
                measured,
                bound,
                passed: measured <= bound,
            }),
            Err(e) => errors.push(Failure::new(name.into(), &e)),
        };
        let n = self.numerics();
        let group = &self.group;

        check("relator_identity", Ok((relator_defect(group), 1e-9)));
        check("domain_reduction_idempotent", self.reduction_defect().map(|d| (d, 1e-9)));
        let base = self.base_grid();
        if group.rank() == 4 && group.relator().is_some() {
            check(
                "base_area_gauss_bonnet",
                base.as_ref().map_err(clone_err).map(|b| ((b.area() - gauss_bonnet_area(2)).abs(), 1e-6)),
            );
        }
        check("circle_rule_exactness", Ok((SphereQuadrature::circle(n.fiber).exactness_error(), 1e-12)));
        check(
            "sphere_rule_exactness",
            Ok((SphereQuadrature::sphere(n.sphere[0], n.sphere[1]).exactness_error(), 1e-12)),
        );
        let margin = self.metric.check_negative_curvature(n.grid[0], n.grid[1], n.curvature_margin);
        check("negative_curvature", margin.as_ref().map_err(clone_err).map(|m| (-m, -n.curvature_margin)));
        if let (Ok(base), Ok(_)) = (&base, &margin) {
            let rule = SMQuadrature::new(&self.metric, base, n.fiber);
            check("liouville_mass", rule.as_ref().map_err(clone_err).map(|r| ((r.mass() - 1.0).abs(), 1e-6)));
            if let Ok(rule) = &rule {
                check("pi2_trace_identity", self.pi2_trace_defect(rule, base).map(|d| (d, 1e-6)));
            }
        }
        check("dim3_fiber_identity", self.corr2_defect().map(|d| (d, 1e-6)));
        if margin.is_err() {
            // flow checks presuppose negative curvature
            let e = Error::Capability("skipped: curvature is not negative".into());
            for c in self.classes.iter().filter(|c| c.len() <= 2) {
                errors.push(Failure::new(format!("closed_geodesics[{}]", self.word(c)), &e));
            }
            return Ok(finish(checks, errors));
        }

        let base_metric = MetricField::hyperbolic(group.clone());
        let base_key = self.base_key();
        for c in self.classes.iter().filter(|c| c.len() <= 2) {
            let w = self.word(c);
            check(
                &format!("route_consistency[{w}]"),
                self.geodesic(c).and_then(|g| {
                    let e = entry_for(&self.metric, group, &g, n.burn_in)?;
                    Ok((e.route_discrepancy, 1e-6))
                }),
            );
            check(
                &format!("period_orientation_symmetry[{w}]"),
                self.geodesic(c)
                    .and_then(|g| Ok((g, self.geodesic(&c.inverse())?)))
                    .map(|(g, gi)| ((g.period - gi.period).abs(), 1e-8)),
            );
            check(
                &format!("constant_curvature_identity[{w}]"),
                self.geodesic_on(&base_metric, &base_key, c).and_then(|g| {
                    let ell = translation_length(&group.evaluate_class(c))?;
                    let m = mpd(&base_metric, &g, n.burn_in)?;
                    Ok(((m.log_mpd - ell).abs() / ell, 1e-6))
                }),
            );
        }
        Ok(finish(checks, errors))
    }

    fn reduction_defect(&self) -> Result<f64> {
        let poly = DirichletPolygon::new(&self.group)?;
        let mut worst = 0.0f64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        for _ in 0..20 {
            let w = crate::construct::random_domain_point(&poly, &mut rng, 0.95);
            let g = self.group.evaluate_word(&random_word(&self.group, &mut rng, 4));
            let (z, _) = self.group.reduce_to_domain(g.apply(w))?;
            let (z2, e2) = self.group.reduce_to_domain(z)?;
            worst = worst.max((z2 - z).norm()).max(if e2.is_identity(1e-9) { 0.0 } else { 1.0 });
        }
        Ok(worst)
    }

    /// Relative defect of `int pi2 S dm = (1 / (2 Vol)) int tr S` for a seeded
    /// random tensor.
    fn pi2_trace_defect(&self, rule: &SMQuadrature, base: &BaseGrid) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x5eed);
        let s = crate::construct::random_sym2(&self.group, &mut rng, false)?;
        let lhs = liouville_pi2(rule, s.as_ref())?;
        let rhs = trace_average(&self.metric, s.as_ref(), base)?;
        Ok((lhs - rhs).abs() / rhs.abs().max(1e-12))
    }

    fn corr2_defect(&self) -> Result<f64> {
        let n = self.numerics();
        let rule = SphereQuadrature::sphere(n.sphere[0], n.sphere[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0xd13);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let mut s: Mat3 = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    let x = rng.gen_range(-1.0..1.0);
                    s[i][j] = x;
                    s[j][i] = x;
                }
            }
            let t = (s[0][0] + s[1][1] + s[2][2]) / 3.0;
            for (i, row) in s.iter_mut().enumerate() {
                row[i] -= t;
            }
            let (lhs, rhs) = corr2_fiber_check(&PointTensor3 { s, mu: 0.0 }, &rule)?;
            worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-12));
        }
        Ok(worst)
    }

    #[allow(clippy::type_complexity)]
    fn export(&self) -> Result<(Value, Vec<(String, Vec<String>, Vec<Vec<String>>)>)> {
        let poly = DirichletPolygon::new(&self.group)?;
        let n = self.numerics();
        let pts = domain_samples(&poly, n.grid[0], n.grid[1]);
        let xy = ["x", "y", "value"].map(String::from).to_vec();
        let mut tables = Vec::new();

        let curvature: Vec<Vec<String>> = pts
            .iter()
            .map(|&p| Ok(vec![num(p.re), num(p.im), num(self.metric.gauss_curvature(p)?)]))
            .collect::<Result<_>>()?;
        tables.push(("curvature.csv".to_string(), xy.clone(), curvature));

        let p = &self.config.perturbation;
        let field_kind = match p.kind {
            PerturbationKind::None => None,
            PerturbationKind::Conformal => {
                let phi = p.conformal_factor(&self.group, self.config.seed)?;
                let rows = pts
                    .iter()
                    .map(|&z| Ok(vec![num(z.re), num(z.im), num(scalar_value(phi.as_ref(), z)?)]))
                    .collect::<Result<_>>()?;
                tables.push(("field.csv".to_string(), xy.clone(), rows));
                Some("conformal_factor")
            }
            _ => {
                let s = p.tensor(&self.group, self.config.seed)?;
                let rows = pts
                    .iter()
                    .map(|&z| Ok(vec![num(z.re), num(z.im), num(hyperbolic_norm(s.as_ref(), z)?)]))
                    .collect::<Result<_>>()?;
                tables.push(("field.csv".to_string(), xy.clone(), rows));
                Some("tensor_norm")
            }
        };

        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for c in &self.classes {
            let r = self
                .geodesic(c)
                .and_then(|g| integrate_geodesic(&self.metric, g.start, g.period, g.step()));
            match r {
                Ok(traj) => {
                    for (t, v) in traj.samples {
                        rows.push(vec![self.word(c), num(t), num(v.x), num(v.y), num(v.theta)]);
                    }
                }
                Err(e) => failures.push(Failure::new(self.word(c), &e)),
            }
        }
        let header = ["word", "t", "x", "y", "theta"].map(String::from).to_vec();
        tables.push(("geodesics.csv".to_string(), header, rows));

        let payload = json!({
            "points": pts.len(),
            "field": field_kind,
            "tables": tables.iter().map(|t| t.0.clone()).collect::<Vec<_>>(),
            "failures": failures,
        });
        Ok((payload, tables))
    }
}

fn finish(checks: Vec<Check>, errors: Vec<Failure>) -> ValidateReport {
    let bad = checks.iter().filter(|c| !c.passed).count();
    ValidateReport {
        passed: checks.len() - bad,
        failed: bad + errors.len(),
        checks,
        errors,
    }
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::CurvatureSign { bound, worst } => Error::CurvatureSign {
            bound: *bound,
            worst: worst.clone(),
        },
        other => Error::Numerical(other.to_string()),
    }
}

/// `|S|` in the hyperbolic metric, `y^2 sqrt(sum S_ij^2)`.
fn hyperbolic_norm(s: &dyn crate::tensor::TensorField, z: Complex64) -> Result<f64> {
    let m = s.value(z)?.matrix();
    let f: f64 = m.iter().flatten().map(|x| x * x).sum();
    Ok(z.im * z.im * f.sqrt())
}

/// Distance of the relator's matrix from `+-1`, zero without a relator.
fn relator_defect(group: &FuchsianGroup) -> f64 {
    let Some(r) = group.relator() else { return 0.0 };
    let m = group.evaluate_word(r);
    let s = if m.a + m.d >= 0.0 { 1.0 } else { -1.0 };
    [(m.a - s).abs(), m.b.abs(), m.c.abs(), (m.d - s).abs()].into_iter().fold(0.0, f64::max)
}

fn random_word<R: Rng>(group: &FuchsianGroup, rng: &mut R, len: usize) -> Vec<crate::fuchsian::Letter> {
    (0..len)
        .map(|_| crate::fuchsian::Letter::new(rng.gen_range(0..group.rank()), rng.gen_bool(0.5)))
        .collect()
}
