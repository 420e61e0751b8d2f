//! Config-driven scenarios with deterministic tabular output.
//!
//! A run is a pure function of its [`ExperimentConfig`]: every task draws from
//! a stream seeded by [`derive_seed`] on its coordinates, tasks are fanned out
//! over a pool of `workers` threads, and rows are sorted by task coordinates
//! before writing. The worker count never reaches the output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::descriptor::PrefixDescriptor;
use crate::error::{LabError, Result};
use crate::matrix::{Kind, MatrixPrefix};
use crate::observable::{Observable, ObservableSpec};
use crate::rng::{fnv1a, mix64};
use crate::spectral::{
    audit_frobenius_inequality_h, audit_tau_inequality_z, audit_trace_identity, boundedness_verdict, check_schedule,
    AuditReport, RadialProfile, ScaledProfile, VerdictConfig,
};
use crate::weak::{
    default_lp_grid, default_test_family, levy_prohorov_estimate, precompactness_diagnostic, recurrence_estimate,
    PrecompactnessConfig,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_SCHEDULE: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    IdentityAudit,
    RadialSurvey,
    OrbitalConvergence,
    RecurrenceProbe,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::IdentityAudit => "identity-audit",
            Scenario::RadialSurvey => "radial-survey",
            Scenario::OrbitalConvergence => "orbital-convergence",
            Scenario::RecurrenceProbe => "recurrence-probe",
        }
    }
}

/// Coordinates of one task; seeds are functions of these, never of the
/// execution schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TaskCoord<'a> {
    pub label: &'a str,
    pub n: u64,
    pub replicate: u64,
}

/// Mix a master seed with task coordinates into a per-task stream seed.
pub fn derive_seed(master_seed: u64, coord: TaskCoord<'_>) -> u64 {
    let mut h = mix64(master_seed ^ 0x6F72_6269_7461_6C21);
    h = mix64(h ^ fnv1a(coord.label.as_bytes()));
    h = mix64(h ^ coord.n);
    mix64(h ^ coord.replicate.wrapping_mul(0xA24B_AED4_963E_E407))
}

fn default_schedule() -> Vec<usize> {
    DEFAULT_SCHEDULE.to_vec()
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_one() -> usize {
    1
}
fn default_family_window() -> usize {
    2
}
fn default_family_count() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    pub ensemble: PrefixDescriptor,
    #[serde(default = "default_schedule")]
    pub n_schedule: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_one")]
    pub m: usize,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_one")]
    pub workers: usize,
    #[serde(default = "default_one")]
    pub replicates: usize,
    /// Window of the default psi-distance family used by `recurrence-probe`.
    #[serde(default = "default_family_window")]
    pub family_window: usize,
    #[serde(default = "default_family_count")]
    pub family_count: usize,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, ensemble: PrefixDescriptor) -> Self {
        ExperimentConfig {
            scenario: Some(scenario),
            ensemble,
            n_schedule: default_schedule(),
            samples: DEFAULT_SAMPLES,
            m: 1,
            observables: Vec::new(),
            master_seed: 0,
            output_path: None,
            workers: 1,
            replicates: 1,
            family_window: default_family_window(),
            family_count: default_family_count(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains('`'))
                .unwrap_or("config")
                .to_string();
            LabError::config(field, msg)
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.ok_or_else(|| LabError::config("scenario", "no scenario given"))
    }

    /// Hash of everything that determines the output (not `workers` or
    /// `output_path`).
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = 1;
        canonical.output_path = None;
        let text = toml::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn observable_list(&self) -> Result<Vec<Observable>> {
        self.observables
            .iter()
            .map(|s| Observable::new(s.clone()).map_err(|e| LabError::config("observables", e.to_string())))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let scenario = self.scenario()?;
        check_schedule(&self.n_schedule).map_err(|e| LabError::config("n_schedule", e.to_string()))?;
        if self.samples == 0 {
            return Err(LabError::config("samples", "must be >= 1"));
        }
        if self.workers == 0 {
            return Err(LabError::config("workers", "must be >= 1"));
        }
        if self.replicates == 0 {
            return Err(LabError::config("replicates", "must be >= 1"));
        }
        self.ensemble.build(0).map_err(|e| LabError::config("ensemble", e.to_string()))?;
        let min_n = self.n_schedule[0];
        let observables = self.observable_list()?;
        for f in &observables {
            if f.window() > min_n {
                return Err(LabError::config(
                    "observables",
                    format!("{} reads a {}x{} window but the smallest n is {min_n}", f.label(), f.window(), f.window()),
                ));
            }
        }
        match scenario {
            Scenario::IdentityAudit => {
                if self.m == 0 {
                    return Err(LabError::config("m", "identity-audit needs m >= 1"));
                }
                if min_n <= 3 * self.m {
                    return Err(LabError::config(
                        "n_schedule",
                        format!("identity-audit needs every n > 3m = {}", 3 * self.m),
                    ));
                }
            }
            Scenario::RadialSurvey => {
                if self.n_schedule.len() < 4 {
                    return Err(LabError::config("n_schedule", "radial-survey needs >= 4 dimensions"));
                }
            }
            Scenario::OrbitalConvergence => {
                if self.n_schedule.len() < 2 {
                    return Err(LabError::config("n_schedule", "orbital-convergence needs >= 2 dimensions"));
                }
            }
            Scenario::RecurrenceProbe => {
                if let Some(f) = observables.iter().find(|f| !f.is_strictly_positive()) {
                    return Err(LabError::config("observables", format!("{} is not strictly positive", f.label())));
                }
                if observables.is_empty() {
                    if self.family_count == 0 {
                        return Err(LabError::config("family_count", "must be >= 1"));
                    }
                    if self.family_window == 0 || self.family_window > min_n {
                        return Err(LabError::config("family_window", format!("must lie in 1..={min_n}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
    Error,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub scenario: Scenario,
    pub parameters: String,
    pub n: Option<usize>,
    pub replicate: usize,
    pub statistic: String,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub status: Status,
    pub note: String,
}

/// One point of plot-ready data.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotPoint {
    pub replicate: usize,
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub yerr: Option<f64>,
}

pub const RESULT_COLUMNS: [&str; 9] =
    ["scenario", "parameters", "n", "replicate", "statistic", "value", "stderr", "status", "note"];
pub const PLOT_COLUMNS: [&str; 6] = ["scenario", "replicate", "series", "x", "y", "yerr"];

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub scenario: Scenario,
    pub rows: Vec<ResultRow>,
    pub plot: Vec<PlotPoint>,
    pub master_seed: u64,
    pub config_hash: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultTable {
    /// Exit status contract: every audit passed and no task errored.
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| matches!(r.status, Status::Pass | Status::Info))
    }

    pub fn count(&self, status: Status) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    pub fn rows_for<'a>(&'a self, statistic: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.statistic == statistic)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| LabError::Io(e.to_string());
        w.write_record(RESULT_COLUMNS).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.as_str().to_string(),
                r.parameters.clone(),
                r.n.map(|n| n.to_string()).unwrap_or_default(),
                r.replicate.to_string(),
                r.statistic.clone(),
                fmt_opt(r.value),
                fmt_opt(r.stderr),
                r.status.as_str().to_string(),
                r.note.clone(),
            ])
            .map_err(io)?;
        }
        let mut out = String::from_utf8(w.into_inner().map_err(|e| LabError::Io(e.to_string()))?)
            .map_err(|e| LabError::Io(e.to_string()))?;
        let _ = writeln!(out, "# master_seed={},version={}", self.master_seed, VERSION);
        Ok(out)
    }

    pub fn plot_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| LabError::Io(e.to_string());
        w.write_record(PLOT_COLUMNS).map_err(io)?;
        for p in &self.plot {
            w.write_record([
                self.scenario.as_str().to_string(),
                p.replicate.to_string(),
                p.series.clone(),
                p.x.to_string(),
                p.y.to_string(),
                fmt_opt(p.yerr),
            ])
            .map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| LabError::Io(e.to_string()))?).map_err(|e| LabError::Io(e.to_string()))
    }

    pub fn metadata(&self) -> String {
        format!(
            "scenario = \"{}\"\nmaster_seed = {}\nconfig_hash = \"{}\"\nversion = \"{}\"\nrows = {}\nfailed = {}\nerrors = {}\n",
            self.scenario.as_str(),
            self.master_seed,
            self.config_hash,
            VERSION,
            self.rows.len(),
            self.count(Status::Fail),
            self.count(Status::Error),
        )
    }

    /// Write `<path>`, `<stem>.plot.csv` and `<stem>.meta.toml`. Returns the
    /// three paths.
    pub fn write(&self, path: &Path) -> Result<[PathBuf; 3]> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
        let plot = path.with_file_name(format!("{stem}.plot.csv"));
        let meta = path.with_file_name(format!("{stem}.meta.toml"));
        std::fs::write(path, self.to_csv()?)?;
        std::fs::write(&plot, self.plot_csv()?)?;
        std::fs::write(&meta, self.metadata())?;
        Ok([path.to_path_buf(), plot, meta])
    }
}

/// Rows and plot points produced by one task, keyed for sorting.
#[derive(Default)]
struct TaskOutput {
    rows: Vec<ResultRow>,
    plot: Vec<PlotPoint>,
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    scenario: Scenario,
    label: String,
}

impl Ctx<'_> {
    fn prefix(&self, replicate: usize) -> Result<MatrixPrefix> {
        let seed = derive_seed(
            self.config.master_seed,
            TaskCoord { label: "ensemble", n: 0, replicate: replicate as u64 },
        );
        self.config.ensemble.build(seed)
    }

    fn task_seed(&self, n: usize, replicate: usize) -> u64 {
        derive_seed(
            self.config.master_seed,
            TaskCoord { label: self.scenario.as_str(), n: n as u64, replicate: replicate as u64 },
        )
    }

    fn row(&self, n: Option<usize>, replicate: usize, statistic: impl Into<String>) -> ResultRow {
        ResultRow {
            scenario: self.scenario,
            parameters: format!("ensemble={}", self.label),
            n,
            replicate,
            statistic: statistic.into(),
            value: None,
            stderr: None,
            status: Status::Info,
            note: String::new(),
        }
    }

    fn error_row(&self, n: Option<usize>, replicate: usize, err: &LabError) -> ResultRow {
        let mut r = self.row(n, replicate, "error");
        r.status = Status::Error;
        r.note = err.to_string();
        r
    }
}

/// Execute a validated config on a pool of `config.workers` threads.
pub fn run(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| LabError::config("workers", e.to_string()))?;
    pool.install(|| execute(config))
}

fn execute(config: &ExperimentConfig) -> Result<ResultTable> {
    let scenario = config.scenario()?;
    let ctx = Ctx { config, scenario, label: config.ensemble.label() };
    let replicates: Vec<usize> = (0..config.replicates).collect();
    let outputs: Vec<TaskOutput> = match scenario {
        Scenario::IdentityAudit => {
            let tasks: Vec<(usize, usize)> =
                replicates.iter().flat_map(|&r| config.n_schedule.iter().map(move |&n| (r, n))).collect();
            tasks.par_iter().map(|&(r, n)| identity_task(&ctx, r, n)).collect()
        }
        Scenario::RadialSurvey => replicates.par_iter().map(|&r| radial_task(&ctx, r)).collect(),
        Scenario::OrbitalConvergence => replicates.par_iter().map(|&r| convergence_task(&ctx, r)).collect(),
        Scenario::RecurrenceProbe => replicates.par_iter().map(|&r| recurrence_task(&ctx, r)).collect(),
    };
    let mut rows = Vec::new();
    let mut plot = Vec::new();
    for out in outputs {
        rows.extend(out.rows);
        plot.extend(out.plot);
    }
    // tasks already come back in coordinate order; the stable sort pins it
    rows.sort_by_key(|r| r.replicate);
    plot.sort_by_key(|p| p.replicate);
    Ok(ResultTable { scenario, rows, plot, master_seed: config.master_seed, config_hash: config.config_hash() })
}

fn audit_row(ctx: &Ctx<'_>, n: usize, replicate: usize, report: &AuditReport) -> ResultRow {
    let mut row = ctx.row(Some(n), replicate, report.operation);
    row.parameters = format!("ensemble={};{}", ctx.label, report.parameters);
    row.value = Some(report.lhs);
    row.status = if report.passed { Status::Pass } else { Status::Fail };
    let terms: Vec<String> = report.rhs_terms.iter().map(|(k, v)| format!("{k}={v}")).collect();
    row.note = format!("rhs={};{};tolerance={}", report.rhs, terms.join(";"), report.tolerance);
    row
}

fn identity_task(ctx: &Ctx<'_>, replicate: usize, n: usize) -> TaskOutput {
    let mut out = TaskOutput::default();
    let m = ctx.config.m;
    let p = match ctx.prefix(replicate) {
        Ok(p) => p,
        Err(e) => {
            out.rows.push(ctx.error_row(Some(n), replicate, &e));
            return out;
        }
    };
    let mut audits = Vec::new();
    if p.kind() == Kind::Hermitian {
        audits.push(audit_trace_identity(&p, m, n));
        audits.push(audit_frobenius_inequality_h(&p, m, n));
    }
    audits.push(audit_tau_inequality_z(&p.as_complex(), m, n));
    for a in audits {
        match a {
            Ok(report) => {
                out.plot.push(PlotPoint {
                    replicate,
                    series: format!("{}:slack", report.operation),
                    x: n as f64,
                    y: report.slack(),
                    yerr: None,
                });
                out.rows.push(audit_row(ctx, n, replicate, &report));
            }
            Err(e) => out.rows.push(ctx.error_row(Some(n), replicate, &e)),
        }
    }
    out
}

fn radial_task(ctx: &Ctx<'_>, replicate: usize) -> TaskOutput {
    let mut out = TaskOutput::default();
    let p = match ctx.prefix(replicate) {
        Ok(p) => p,
        Err(e) => {
            out.rows.push(ctx.error_row(None, replicate, &e));
            return out;
        }
    };
    p.materialize(*ctx.config.n_schedule.last().expect("validated"));
    let results: Vec<(usize, Result<ScaledProfile>)> = ctx
        .config
        .n_schedule
        .par_iter()
        .map(|&n| (n, p.corner(n).and_then(|c| ScaledProfile::of_corner(&c))))
        .collect();
    let mut profiles = Vec::new();
    for (n, res) in results {
        match res {
            Ok(profile) => profiles.push(profile),
            Err(e) => out.rows.push(ctx.error_row(Some(n), replicate, &e)),
        }
    }
    let rp = match RadialProfile::from_profiles(profiles) {
        Ok(rp) => rp,
        Err(e) => {
            out.rows.push(ctx.error_row(None, replicate, &e));
            return out;
        }
    };
    let growth_name = match rp.kind() {
        Kind::Hermitian => "gamma2",
        Kind::Complex => "gamma",
    };
    for (k, profile) in rp.profiles.iter().enumerate() {
        let n = profile.n();
        let mut push = |stat: &str, v: f64| {
            let mut row = ctx.row(Some(n), replicate, stat);
            row.value = Some(v);
            out.rows.push(row);
            out.plot.push(PlotPoint { replicate, series: stat.to_string(), x: n as f64, y: v, yerr: None });
        };
        if let Some(g1) = profile.gamma1() {
            push("gamma1", g1);
        }
        push(growth_name, profile.growth_statistic());
        if let Some(x1) = profile.x1() {
            push("x1", x1);
        }
        if let Some(s) = rp.running_sup_gamma1_abs() {
            push("sup_gamma1_abs", s[k]);
        }
        push(&format!("sup_{growth_name}"), rp.running_sup_growth()[k]);
    }
    match boundedness_verdict(&rp, &VerdictConfig::default()) {
        Ok(v) => {
            let mut row = ctx.row(None, replicate, "verdict");
            row.note = v.as_str().to_string();
            out.rows.push(row);
        }
        Err(e) => out.rows.push(ctx.error_row(None, replicate, &e)),
    }
    out
}

fn observables_or(ctx: &Ctx<'_>, default: impl FnOnce() -> Result<Vec<Observable>>) -> Result<Vec<Observable>> {
    let list = ctx.config.observable_list()?;
    if list.is_empty() {
        default()
    } else {
        Ok(list)
    }
}

fn convergence_task(ctx: &Ctx<'_>, replicate: usize) -> TaskOutput {
    let mut out = TaskOutput::default();
    let setup = ctx.prefix(replicate).and_then(|p| Ok((p, observables_or(ctx, || Ok(vec![Observable::clamped_h11()]))?)));
    let (p, observables) = match setup {
        Ok(s) => s,
        Err(e) => {
            out.rows.push(ctx.error_row(None, replicate, &e));
            return out;
        }
    };
    let schedule = &ctx.config.n_schedule;
    let seed = ctx.task_seed(0, replicate);
    for f in &observables {
        let report =
            match precompactness_diagnostic(&p, f, schedule, ctx.config.samples, seed, &PrecompactnessConfig::default()) {
                Ok(r) => r,
                Err(e) => {
                    out.rows.push(ctx.error_row(None, replicate, &e));
                    continue;
                }
            };
        let obs = f.label();
        for (k, &n) in schedule.iter().enumerate() {
            let mut row = ctx.row(Some(n), replicate, format!("mean:{obs}"));
            row.value = Some(report.measures[k].mean());
            row.stderr = Some(report.stderrs[k]);
            out.rows.push(row);
            out.plot.push(PlotPoint {
                replicate,
                series: format!("mean:{obs}"),
                x: n as f64,
                y: report.measures[k].mean(),
                yerr: Some(report.stderrs[k]),
            });
            if k > 0 {
                let (a, b) = (&report.measures[k - 1], &report.measures[k]);
                let mut row = ctx.row(Some(n), replicate, format!("w1_prev:{obs}"));
                row.value = Some(report.pairwise[k - 1][k]);
                out.rows.push(row);
                match levy_prohorov_estimate(a, b, default_lp_grid(a, b)) {
                    Ok(lp) => {
                        let mut row = ctx.row(Some(n), replicate, format!("lp_prev:{obs}"));
                        row.value = Some(lp);
                        out.rows.push(row);
                    }
                    Err(e) => out.rows.push(ctx.error_row(Some(n), replicate, &e)),
                }
            }
            for (j, &nb) in schedule.iter().enumerate() {
                out.plot.push(PlotPoint {
                    replicate,
                    series: format!("w1:{obs}:n={n}"),
                    x: nb as f64,
                    y: report.pairwise[k][j],
                    yerr: None,
                });
            }
        }
        let mut row = ctx.row(None, replicate, format!("verdict:{obs}"));
        row.value = Some(report.cauchy_tolerance);
        row.stderr = Some(report.pooled_stderr);
        row.note = report.verdict.as_str().to_string();
        out.rows.push(row);
    }
    out
}

fn recurrence_task(ctx: &Ctx<'_>, replicate: usize) -> TaskOutput {
    let mut out = TaskOutput::default();
    let cfg = ctx.config;
    let setup = ctx
        .prefix(replicate)
        .and_then(|p| Ok((p, observables_or(ctx, || default_test_family(cfg.family_window, cfg.family_count))?)));
    let (p, observables) = match setup {
        Ok(s) => s,
        Err(e) => {
            out.rows.push(ctx.error_row(None, replicate, &e));
            return out;
        }
    };
    // one seed per replicate: every observable sees the same orbit draws
    let seed = ctx.task_seed(0, replicate);
    for f in &observables {
        let obs = f.label();
        match recurrence_estimate(&p, f, &cfg.n_schedule, cfg.samples, seed) {
            Ok(est) => {
                for (k, &n) in est.n_schedule.iter().enumerate() {
                    let mut row = ctx.row(Some(n), replicate, format!("mean:{obs}"));
                    row.value = Some(est.means[k]);
                    row.stderr = Some(est.stderrs[k]);
                    out.rows.push(row);
                    out.plot.push(PlotPoint {
                        replicate,
                        series: format!("mean:{obs}"),
                        x: n as f64,
                        y: est.means[k],
                        yerr: Some(est.stderrs[k]),
                    });
                }
                let mut row = ctx.row(None, replicate, format!("inf:{obs}"));
                row.value = Some(est.inf);
                out.rows.push(row);
            }
            Err(e) => out.rows.push(ctx.error_row(None, replicate, &e)),
        }
    }
    out
}
