//! Ladder orchestration: run every member, the reference and all
//! diagnostics, persist reports and a manifest, re-verify from disk, and
//! emit plot-ready CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compactness::{
    choose_c, compensated_d, decompose_production, dirac_concentration, div_curl_test,
    tartar_pairs, time_derivative_l1, weak_limit_f11, young_histograms, CompensatedQuad,
};
use crate::config::{build_scenario, DataPreset, ScenarioConfig};
use crate::convergence::{ConvergenceReport, RateFit};
use crate::entropy::{kruzkov_family, make_entropy_pair, EntropyPair, EntropyPreset};
use crate::error::{LabError, Result};
use crate::flux::{FluxComponent, ViscosityModel};
use crate::grid::FieldTrajectory;
use crate::norms::gradient_energy;
use crate::persist::{
    csv_error, read_trajectory, sha256_bytes, sha256_file, write_trajectory, LAYOUT,
};
use crate::quadrature::AntiderivativeTable;
use crate::reference::reference_from_setup;
use crate::solver::{ScenarioSetup, SolveStats};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const RESOLVED_FILE: &str = "resolved.toml";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const MEMBERS_FILE: &str = "members.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const TRAJECTORY_DIR: &str = "trajectories";
pub const REFERENCE_DIR: &str = "reference";
pub const PLOT_DIR: &str = "plot";

pub const ESTIMATE_IDS: [&str; 9] = [
    "max_principle",
    "energy",
    "h1_decay",
    "measure_bound",
    "ut_l1",
    "dirac",
    "divcurl",
    "d2_quad",
    "convergence",
];

pub const MAX_PRINCIPLE_TOL: f64 = 1e-10;
pub const BOUND_SLACK: f64 = 1.05;
pub const H1_MIN_SLOPE: f64 = 0.4;
pub const H1_MAX_RESIDUAL: f64 = 0.15;
pub const UT_MIN_SLOPE: f64 = -0.1;
pub const DIRAC_RATIO: f64 = 0.5;
pub const DIVCURL_MAX: f64 = 1e-2;
pub const D_FLOOR: f64 = -1e-12;
pub const CAUCHY_MIN_RATE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Relation {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::AtMost => lhs <= rhs,
            Relation::AtLeast => lhs >= rhs,
            Relation::Below => lhs < rhs,
            Relation::NotApplicable => true,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
            Relation::NotApplicable => "n/a",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateEntry {
    pub epsilon: Option<f64>,
    pub label: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub pass: bool,
}

impl EstimateEntry {
    fn new(
        epsilon: Option<f64>,
        label: impl Into<String>,
        lhs: f64,
        relation: Relation,
        rhs: f64,
    ) -> Self {
        EstimateEntry {
            epsilon,
            label: label.into(),
            lhs,
            relation,
            rhs,
            pass: relation.holds(lhs, rhs),
        }
    }

    fn verdict(epsilon: Option<f64>, label: impl Into<String>, pass: bool) -> Self {
        EstimateEntry {
            epsilon,
            label: label.into(),
            lhs: 0.0,
            relation: Relation::NotApplicable,
            rhs: 0.0,
            pass,
        }
    }
}

/// One estimate with its per-ε (or per-fit) entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: String,
    pub entries: Vec<EstimateEntry>,
    /// Conjunction of the entries' flags.
    pub verdict: bool,
}

impl EstimateReport {
    fn new(id: &str, entries: Vec<EstimateEntry>) -> Self {
        let verdict = entries.iter().all(|e| e.pass);
        EstimateReport {
            id: id.into(),
            entries,
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyMetrics {
    pub entropy_id: String,
    pub h1_norm_a: f64,
    pub measure_norm_m: f64,
    pub measure_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberMetrics {
    pub epsilon: f64,
    pub max_abs: f64,
    pub energy: f64,
    pub ut_l1: f64,
    pub dirac: f64,
    pub divcurl: Option<f64>,
    pub d_mean: Option<f64>,
    pub d_min: Option<f64>,
    pub l1_error: Option<f64>,
    pub entropies: Vec<EntropyMetrics>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub members: Vec<MemberMetrics>,
    pub convergence: Option<ConvergenceReport>,
    pub reports: Vec<EstimateReport>,
}

impl Evaluation {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.verdict)
    }
}

/// Entropies used by the diagnostics: `u²/2` plus the smoothed Kruzkov
/// family.
pub fn diagnostic_entropies(setup: &ScenarioSetup) -> Result<Vec<EntropyPair>> {
    let scheme = &setup.config.scheme;
    let mut presets = vec![EntropyPreset::Quadratic];
    presets.extend(kruzkov_family(
        setup.interval(),
        scheme.kruzkov_count,
        scheme.kruzkov_smoothing,
    ));
    presets
        .into_iter()
        .map(|p| make_entropy_pair(p, &setup.flux, scheme.quadrature_tol))
        .collect()
}

fn fit_entries(
    label: &str,
    fit: Result<RateFit>,
    min_rate: f64,
    max_residual: Option<f64>,
) -> Vec<EstimateEntry> {
    match fit {
        Ok(RateFit::Fitted { rate, residual }) => {
            let mut v = vec![EstimateEntry::new(
                None,
                format!("{label} slope"),
                rate,
                Relation::AtLeast,
                min_rate,
            )];
            if let Some(r) = max_residual {
                v.push(EstimateEntry::new(
                    None,
                    format!("{label} fit residual"),
                    residual,
                    Relation::AtMost,
                    r,
                ));
            }
            v
        }
        Ok(RateFit::ExactConvergence) => vec![EstimateEntry::verdict(
            None,
            format!("{label} identically zero"),
            true,
        )],
        Err(e) => vec![EstimateEntry::verdict(None, format!("{label}: {e}"), false)],
    }
}

/// Evaluates every diagnostic and estimate from trajectories alone.
/// `members` must be ordered by decreasing `ε`.
pub fn evaluate(
    setup: &ScenarioSetup,
    members: &[FieldTrajectory],
    reference: Option<&FieldTrajectory>,
) -> Result<Evaluation> {
    let cfg = &setup.config;
    let interval = setup.interval();
    let pairs = diagnostic_entropies(setup)?;
    let visc = &setup.viscosity;
    let u0 = setup.data.sup_norm();
    let r = visc.lower_bound();
    let volume = setup.grid.volume();
    let energy_rhs = u0 * u0 * volume / (2.0 * r) * BOUND_SLACK;
    let window = &cfg.diagnostics.window;
    let dim = setup.grid.dim();
    let g_table = (dim == 1).then(|| {
        let c = *setup.flux.component(0);
        AntiderivativeTable::build(
            move |s| c.derivative(s).powi(2),
            interval,
            cfg.scheme.quadrature_tol,
        )
    });

    let mut metrics: Vec<MemberMetrics> = members
        .par_iter()
        .map(|traj| -> Result<MemberMetrics> {
            let eps = traj.epsilon();
            let entropies = pairs
                .iter()
                .map(|pair| {
                    let split = decompose_production(traj, pair, visc, eps)?;
                    let eta2 = pair.preset().second_derivative_sup(interval);
                    Ok(EntropyMetrics {
                        entropy_id: pair.id(),
                        h1_norm_a: split.h1_norm_a,
                        measure_norm_m: split.measure_norm_m,
                        measure_bound: visc.upper_bound() * eta2 * u0 * u0 * volume / (2.0 * r)
                            * BOUND_SLACK,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let set = young_histograms(traj, window, cfg.diagnostics.bins, interval)?;
            let divcurl = match &g_table {
                Some(g) => {
                    let (gp, hp) = tartar_pairs(traj, &setup.flux, g)?;
                    Some(div_curl_test([&gp[0], &gp[1]], [&hp[0], &hp[1]], window)?)
                }
                None => None,
            };
            Ok(MemberMetrics {
                epsilon: eps,
                max_abs: traj.max_abs(),
                energy: eps * gradient_energy(traj)?,
                ut_l1: time_derivative_l1(traj)?,
                dirac: dirac_concentration(&set),
                divcurl,
                d_mean: None,
                d_min: None,
                l1_error: None,
                entropies,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if dim == 2 {
        if let Some(finest) = members.last() {
            let quad = CompensatedQuad::new(&setup.flux, cfg.scheme.quadrature_tol)?;
            let bar = weak_limit_f11(finest, &quad, window)?;
            let (c, _) = choose_c(&bar, &quad);
            for (m, traj) in metrics.iter_mut().zip(members) {
                let s = compensated_d(traj, &quad, &c)?;
                m.d_mean = Some(s.mean);
                m.d_min = Some(s.min);
            }
        }
    }

    let convergence = match reference {
        Some(reference) if !members.is_empty() => {
            let refs: Vec<&FieldTrajectory> = members.iter().collect();
            let report = ConvergenceReport::build(&refs, reference)?;
            for (m, e) in metrics.iter_mut().zip(&report.errors) {
                m.l1_error = Some(*e);
            }
            Some(report)
        }
        _ => None,
    };

    let reports = build_reports(&metrics, convergence.as_ref(), u0, energy_rhs, dim);
    Ok(Evaluation {
        members: metrics,
        convergence,
        reports,
    })
}

fn build_reports(
    metrics: &[MemberMetrics],
    convergence: Option<&ConvergenceReport>,
    u0: f64,
    energy_rhs: f64,
    dim: usize,
) -> Vec<EstimateReport> {
    let mut reports = Vec::with_capacity(ESTIMATE_IDS.len());
    let per =
        |f: &dyn Fn(&MemberMetrics) -> EstimateEntry| metrics.iter().map(f).collect::<Vec<_>>();

    reports.push(EstimateReport::new(
        "max_principle",
        per(&|m| {
            EstimateEntry::new(
                Some(m.epsilon),
                "sup_t |u|_inf",
                m.max_abs,
                Relation::AtMost,
                u0 + MAX_PRINCIPLE_TOL,
            )
        }),
    ));
    reports.push(EstimateReport::new(
        "energy",
        per(&|m| {
            EstimateEntry::new(
                Some(m.epsilon),
                "eps |grad u|^2",
                m.energy,
                Relation::AtMost,
                energy_rhs,
            )
        }),
    ));

    let entropy_ids: Vec<String> = metrics
        .first()
        .map(|m| m.entropies.iter().map(|e| e.entropy_id.clone()).collect())
        .unwrap_or_default();
    let mut h1 = Vec::new();
    for (k, id) in entropy_ids.iter().enumerate() {
        let points: Vec<(f64, f64)> = metrics
            .iter()
            .map(|m| (m.epsilon, m.entropies[k].h1_norm_a))
            .collect();
        h1.extend(fit_entries(
            id,
            crate::convergence::fit_rate(&points),
            H1_MIN_SLOPE,
            Some(H1_MAX_RESIDUAL),
        ));
    }
    if metrics.is_empty() {
        h1.push(EstimateEntry::verdict(None, "no ladder members", false));
    }
    reports.push(EstimateReport::new("h1_decay", h1));

    let mut measure = Vec::new();
    for m in metrics {
        for e in &m.entropies {
            measure.push(EstimateEntry::new(
                Some(m.epsilon),
                e.entropy_id.clone(),
                e.measure_norm_m,
                Relation::AtMost,
                e.measure_bound,
            ));
        }
    }
    reports.push(EstimateReport::new("measure_bound", measure));

    let ut: Vec<(f64, f64)> = metrics.iter().map(|m| (m.epsilon, m.ut_l1)).collect();
    reports.push(EstimateReport::new(
        "ut_l1",
        fit_entries(
            "|u_t|_L1",
            crate::convergence::fit_rate(&ut),
            UT_MIN_SLOPE,
            None,
        ),
    ));

    let dirac = match (metrics.first(), metrics.last()) {
        (Some(coarse), Some(fine)) if metrics.len() >= 2 => vec![EstimateEntry::new(
            Some(fine.epsilon),
            format!(
                "dirac(finest) vs {DIRAC_RATIO} x dirac(eps={})",
                coarse.epsilon
            ),
            fine.dirac,
            Relation::AtMost,
            DIRAC_RATIO * coarse.dirac,
        )],
        _ => vec![EstimateEntry::verdict(
            None,
            "needs two ladder members",
            false,
        )],
    };
    reports.push(EstimateReport::new("dirac", dirac));

    let divcurl = if dim == 1 {
        match metrics.last() {
            Some(m) => vec![EstimateEntry::new(
                Some(m.epsilon),
                "Tartar pairs on finest member",
                m.divcurl.unwrap_or(f64::INFINITY),
                Relation::AtMost,
                DIVCURL_MAX,
            )],
            None => vec![EstimateEntry::verdict(None, "no ladder members", false)],
        }
    } else {
        vec![EstimateEntry::verdict(
            None,
            "Tartar pairs are one-dimensional; see d2_quad",
            true,
        )]
    };
    reports.push(EstimateReport::new("divcurl", divcurl));

    let d2 = if dim == 2 {
        let mut v: Vec<EstimateEntry> = metrics
            .iter()
            .map(|m| {
                EstimateEntry::new(
                    Some(m.epsilon),
                    "min D",
                    m.d_min.unwrap_or(f64::NEG_INFINITY),
                    Relation::AtLeast,
                    D_FLOOR,
                )
            })
            .collect();
        for w in metrics.windows(2) {
            v.push(EstimateEntry::new(
                Some(w[1].epsilon),
                format!("mean D below eps={}", w[0].epsilon),
                w[1].d_mean.unwrap_or(f64::INFINITY),
                Relation::Below,
                w[0].d_mean.unwrap_or(f64::NEG_INFINITY),
            ));
        }
        v
    } else {
        vec![EstimateEntry::verdict(
            None,
            "compensated quadratic needs d = 2",
            true,
        )]
    };
    reports.push(EstimateReport::new("d2_quad", d2));

    let conv = match convergence {
        Some(c) => {
            let all_zero = c.errors.iter().all(|&e| e == 0.0);
            let mut v: Vec<EstimateEntry> = if all_zero {
                vec![EstimateEntry::verdict(
                    None,
                    "reference errors identically zero",
                    true,
                )]
            } else {
                c.epsilons
                    .windows(2)
                    .zip(c.errors.windows(2))
                    .map(|(e, err)| {
                        EstimateEntry::new(
                            Some(e[1]),
                            format!("L1 error below eps={}", e[0]),
                            err[1],
                            Relation::Below,
                            err[0],
                        )
                    })
                    .collect()
            };
            if c.cauchy.len() < 3 {
                v.push(EstimateEntry::verdict(
                    None,
                    "Cauchy rate needs four ladder members",
                    true,
                ));
                v
            } else {
                v.extend(fit_entries(
                    "Cauchy",
                    crate::convergence::fit_rate(
                        &c.epsilons
                            .iter()
                            .copied()
                            .zip(c.cauchy.iter().copied())
                            .collect::<Vec<_>>(),
                    ),
                    CAUCHY_MIN_RATE,
                    None,
                ));
                v
            }
        }
        None => vec![EstimateEntry::verdict(None, "reference unavailable", false)],
    };
    reports.push(EstimateReport::new("convergence", conv));
    reports
}

/// Plain-text table of reports.
pub fn render_reports(reports: &[EstimateReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<14} {:<7} details", "estimate", "verdict");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<14} {:<7}",
            r.id,
            if r.verdict { "PASS" } else { "FAIL" }
        );
        for e in &r.entries {
            let eps = e.epsilon.map(|v| format!("eps={v} ")).unwrap_or_default();
            if e.relation == Relation::NotApplicable {
                let _ = writeln!(s, "    {} {eps}{}", flag(e.pass), e.label);
            } else {
                let _ = writeln!(
                    s,
                    "    {} {eps}{}: {:.6e} {} {:.6e}",
                    flag(e.pass),
                    e.label,
                    e.lhs,
                    e.relation.symbol(),
                    e.rhs
                );
            }
        }
    }
    s
}

fn flag(pass: bool) -> &'static str {
    if pass {
        "ok  "
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------------------
// Manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub ok: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub epsilon: f64,
    pub dir: String,
    pub ok: bool,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub id: String,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub config_sha256: String,
    pub config_text: String,
    pub resolved_config: String,
    pub started: String,
    pub finished: String,
    pub layout: String,
    pub ladder: Vec<f64>,
    pub members: Vec<MemberRecord>,
    pub reference: Option<String>,
    pub stages: Vec<StageRecord>,
    pub estimates: Vec<VerdictRecord>,
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(LabError::NoManifest(dir.to_path_buf()));
        }
        let text = fs::read_to_string(&path).map_err(|e| LabError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| LabError::Corrupt {
            path,
            reason: e.to_string(),
        })
    }

    fn store(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| LabError::io(&path, e))
    }

    pub fn execution_ok(&self) -> bool {
        self.stages.iter().all(|s| s.ok)
    }

    pub fn all_pass(&self) -> bool {
        self.estimates.len() == ESTIMATE_IDS.len() && self.estimates.iter().all(|v| v.verdict)
    }

    fn record_files(&mut self, dir: &Path, paths: &[PathBuf]) -> Result<()> {
        for p in paths {
            let rel = p
                .strip_prefix(dir)
                .unwrap_or(p)
                .to_string_lossy()
                .replace('\\', "/");
            let record = FileRecord {
                sha256: sha256_file(p)?,
                bytes: fs::metadata(p).map_err(|e| LabError::io(p, e))?.len(),
                path: rel.clone(),
            };
            self.files.retain(|f| f.path != rel);
            self.files.push(record);
        }
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }
}

/// Process exit status of a run or a verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    AllPass,
    EstimateFailure,
    ExecutionFailure,
}

impl RunStatus {
    pub fn code(self) -> i32 {
        match self {
            RunStatus::AllPass => 0,
            RunStatus::EstimateFailure => 1,
            RunStatus::ExecutionFailure => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Overrides the config's `output_dir`.
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub overwrite: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out: None,
            jobs: 1,
            overwrite: false,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub evaluation: Option<Evaluation>,
    pub status: RunStatus,
}

pub fn member_dir(epsilon: f64) -> String {
    format!("{TRAJECTORY_DIR}/eps_{epsilon}")
}

fn reference_dir() -> String {
    format!("{TRAJECTORY_DIR}/{REFERENCE_DIR}")
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Makes `dir` ready for a run of a config with hash `hash`.
fn prepare_output(dir: &Path, hash: &str, overwrite: bool) -> Result<()> {
    if !dir.exists() {
        return fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e));
    }
    let previous = RunManifest::load(dir);
    match &previous {
        Ok(m) if m.config_sha256 == hash || overwrite => {}
        Ok(_) => return Err(LabError::OutputOccupied(dir.to_path_buf())),
        Err(LabError::NoManifest(_)) => {
            let occupied = fs::read_dir(dir)
                .map_err(|e| LabError::io(dir, e))?
                .next()
                .is_some();
            if occupied && !overwrite {
                return Err(LabError::OutputOccupied(dir.to_path_buf()));
            }
        }
        Err(e) => {
            if !overwrite {
                return Err(LabError::Corrupt {
                    path: dir.join(MANIFEST_FILE),
                    reason: format!("{e}; pass overwrite to replace the run"),
                });
            }
        }
    }
    // remove only what a run writes
    if let Ok(m) = previous {
        for f in &m.files {
            let p = dir.join(&f.path);
            if p.is_file() {
                fs::remove_file(&p).map_err(|e| LabError::io(&p, e))?;
            }
        }
    }
    for sub in [TRAJECTORY_DIR, PLOT_DIR] {
        let p = dir.join(sub);
        if p.is_dir() {
            fs::remove_dir_all(&p).map_err(|e| LabError::io(&p, e))?;
        }
    }
    let m = dir.join(MANIFEST_FILE);
    if m.is_file() {
        fs::remove_file(&m).map_err(|e| LabError::io(&m, e))?;
    }
    Ok(())
}

/// Solver used for each ladder member; replaceable for fault injection.
pub type MemberSolver<'a> =
    &'a (dyn Fn(&ScenarioSetup, f64) -> Result<(FieldTrajectory, SolveStats)> + Sync);

/// Runs the full ladder for the given config text.
pub fn run_ladder(config_text: &str, options: &RunOptions) -> Result<RunOutcome> {
    run_ladder_with(config_text, options, &|setup, eps| setup.solve_viscous(eps))
}

pub fn run_ladder_with(
    config_text: &str,
    options: &RunOptions,
    solver: MemberSolver<'_>,
) -> Result<RunOutcome> {
    let started = now();
    let scenario = build_scenario(config_text)?;
    let dir = options
        .out
        .clone()
        .unwrap_or_else(|| scenario.output_dir.clone());
    let hash = sha256_bytes(config_text.as_bytes());
    prepare_output(&dir, &hash, options.overwrite)?;
    let setup = ScenarioSetup::new(&scenario)?;

    let mut manifest = RunManifest {
        tool: "viscolab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: scenario.name.clone(),
        config_sha256: hash,
        config_text: config_text.into(),
        resolved_config: scenario.render(),
        started,
        finished: String::new(),
        layout: LAYOUT.into(),
        ladder: scenario.ladder.epsilons.clone(),
        members: Vec::new(),
        reference: None,
        stages: Vec::new(),
        estimates: Vec::new(),
        files: Vec::new(),
    };
    let mut written = Vec::new();
    let config_path = dir.join(CONFIG_FILE);
    fs::write(&config_path, config_text).map_err(|e| LabError::io(&config_path, e))?;
    let resolved_path = dir.join(RESOLVED_FILE);
    fs::write(&resolved_path, &manifest.resolved_config)
        .map_err(|e| LabError::io(&resolved_path, e))?;
    written.extend([config_path, resolved_path]);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| LabError::Unsupported(format!("thread pool: {e}")))?;
    let results: Vec<Result<(FieldTrajectory, SolveStats, Vec<PathBuf>)>> = pool.install(|| {
        scenario
            .ladder
            .epsilons
            .par_iter()
            .map(|&eps| {
                log::info!("solving eps = {eps}");
                let (traj, stats) = solver(&setup, eps)?;
                let files = write_trajectory(&dir.join(member_dir(eps)), &traj)?;
                Ok((traj, stats, files))
            })
            .collect()
    });

    let mut members = Vec::new();
    for (&eps, result) in scenario.ladder.epsilons.iter().zip(results) {
        let name = format!("solve eps={eps}");
        match result {
            Ok((traj, stats, files)) => {
                log::info!(
                    "eps = {eps}: {} steps, max |u| = {}",
                    stats.steps,
                    stats.max_seen
                );
                manifest.members.push(MemberRecord {
                    epsilon: eps,
                    dir: member_dir(eps),
                    ok: true,
                    steps: Some(stats.steps),
                    dt: Some(stats.dt),
                });
                manifest.stages.push(StageRecord {
                    name,
                    ok: true,
                    message: None,
                });
                written.extend(files);
                members.push(traj);
            }
            Err(e) => {
                log::error!("eps = {eps} failed: {e}");
                manifest.members.push(MemberRecord {
                    epsilon: eps,
                    dir: member_dir(eps),
                    ok: false,
                    steps: None,
                    dt: None,
                });
                manifest.stages.push(StageRecord {
                    name,
                    ok: false,
                    message: Some(e.to_string()),
                });
            }
        }
    }

    let reference = match reference_from_setup(&setup)
        .and_then(|r| write_trajectory(&dir.join(reference_dir()), &r).map(|files| (r, files)))
    {
        Ok((r, files)) => {
            manifest.reference = Some(reference_dir());
            manifest.stages.push(StageRecord {
                name: "reference".into(),
                ok: true,
                message: None,
            });
            written.extend(files);
            Some(r)
        }
        Err(e) => {
            log::error!("reference failed: {e}");
            manifest.stages.push(StageRecord {
                name: "reference".into(),
                ok: false,
                message: Some(e.to_string()),
            });
            None
        }
    };

    let evaluation = match evaluate(&setup, &members, reference.as_ref())
        .and_then(|ev| write_reports(&dir, &ev).map(|files| (ev, files)))
    {
        Ok((ev, files)) => {
            manifest.stages.push(StageRecord {
                name: "diagnostics".into(),
                ok: true,
                message: None,
            });
            manifest.estimates = verdicts(&ev.reports);
            written.extend(files);
            Some(ev)
        }
        Err(e) => {
            log::error!("diagnostics failed: {e}");
            manifest.stages.push(StageRecord {
                name: "diagnostics".into(),
                ok: false,
                message: Some(e.to_string()),
            });
            None
        }
    };

    manifest.record_files(&dir, &written)?;
    manifest.finished = now();
    manifest.store(&dir)?;
    let status = status_of(&manifest);
    Ok(RunOutcome {
        dir,
        manifest,
        evaluation,
        status,
    })
}

fn verdicts(reports: &[EstimateReport]) -> Vec<VerdictRecord> {
    reports
        .iter()
        .map(|r| VerdictRecord {
            id: r.id.clone(),
            verdict: r.verdict,
        })
        .collect()
}

fn status_of(manifest: &RunManifest) -> RunStatus {
    if !manifest.execution_ok() {
        RunStatus::ExecutionFailure
    } else if manifest.all_pass() {
        RunStatus::AllPass
    } else {
        RunStatus::EstimateFailure
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_reports(dir: &Path, ev: &Evaluation) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    files.push(write_csv(
        &dir.join(DIAGNOSTICS_FILE),
        &[
            "epsilon",
            "entropy_id",
            "h1_norm_A",
            "measure_norm_M",
            "ut_l1",
            "dirac_metric",
            "divcurl_dev",
            "D_mean",
        ],
        ev.members.iter().flat_map(|m| {
            m.entropies.iter().map(move |e| {
                vec![
                    num(m.epsilon),
                    e.entropy_id.clone(),
                    num(e.h1_norm_a),
                    num(e.measure_norm_m),
                    num(m.ut_l1),
                    num(m.dirac),
                    opt(m.divcurl),
                    opt(m.d_mean),
                ]
            })
        }),
    )?);
    files.push(write_csv(
        &dir.join(MEMBERS_FILE),
        &[
            "epsilon",
            "max_abs",
            "energy",
            "ut_l1",
            "dirac_metric",
            "divcurl_dev",
            "D_mean",
            "D_min",
            "l1_error",
        ],
        ev.members.iter().map(|m| {
            vec![
                num(m.epsilon),
                num(m.max_abs),
                num(m.energy),
                num(m.ut_l1),
                num(m.dirac),
                opt(m.divcurl),
                opt(m.d_mean),
                opt(m.d_min),
                opt(m.l1_error),
            ]
        }),
    )?);
    files.push(write_csv(
        &dir.join(ESTIMATES_FILE),
        &[
            "estimate_id",
            "epsilon",
            "label",
            "lhs",
            "relation",
            "rhs",
            "pass",
        ],
        ev.reports.iter().flat_map(|r| {
            r.entries.iter().map(move |e| {
                vec![
                    r.id.clone(),
                    opt(e.epsilon),
                    e.label.clone(),
                    num(e.lhs),
                    e.relation.symbol().into(),
                    num(e.rhs),
                    e.pass.to_string(),
                ]
            })
        }),
    )?);
    if let Some(c) = &ev.convergence {
        files.push(write_csv(
            &dir.join(CONVERGENCE_FILE),
            &["epsilon", "l1_error", "cauchy_to_next"],
            c.epsilons
                .iter()
                .enumerate()
                .map(|(k, e)| vec![num(*e), num(c.errors[k]), opt(c.cauchy.get(k).copied())]),
        )?);
    }
    let mut summary = render_reports(&ev.reports);
    if let Some(c) = &ev.convergence {
        summary.push('\n');
        summary.push_str(&c.summary());
    }
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, summary).map_err(|e| LabError::io(&path, e))?;
    files.push(path);
    Ok(files)
}

// ---------------------------------------------------------------------------
// Verification and plot data

#[derive(Debug)]
pub struct VerifyOutcome {
    pub reports: Vec<EstimateReport>,
    /// Verdicts stored at run time.
    pub stored: Vec<VerdictRecord>,
    /// Whether re-evaluated verdicts match the stored ones.
    pub consistent: bool,
    pub status: RunStatus,
}

/// Checks hashes of every listed file.
fn check_inventory(dir: &Path, manifest: &RunManifest) -> Result<()> {
    for f in &manifest.files {
        let path = dir.join(&f.path);
        if !path.is_file() {
            return Err(LabError::Corrupt {
                path,
                reason: "listed in the manifest but missing".into(),
            });
        }
        if sha256_file(&path)? != f.sha256 {
            return Err(LabError::Corrupt {
                path,
                reason: "content hash differs from the manifest".into(),
            });
        }
    }
    Ok(())
}

struct LoadedRun {
    manifest: RunManifest,
    setup: ScenarioSetup,
    members: Vec<FieldTrajectory>,
    reference: Option<FieldTrajectory>,
}

fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest = RunManifest::load(dir)?;
    check_inventory(dir, &manifest)?;
    let config_path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&config_path).map_err(|e| LabError::io(&config_path, e))?;
    if sha256_bytes(text.as_bytes()) != manifest.config_sha256 {
        return Err(LabError::Corrupt {
            path: config_path,
            reason: "config hash differs from the manifest".into(),
        });
    }
    let setup = ScenarioSetup::new(&build_scenario(&text)?)?;
    let members = manifest
        .members
        .iter()
        .filter(|m| m.ok)
        .map(|m| read_trajectory(&dir.join(&m.dir), setup.grid.clone(), m.epsilon))
        .collect::<Result<Vec<_>>>()?;
    let reference = manifest
        .reference
        .as_ref()
        .map(|r| read_trajectory(&dir.join(r), setup.grid.clone(), 0.0))
        .transpose()?;
    Ok(LoadedRun {
        manifest,
        setup,
        members,
        reference,
    })
}

/// Re-evaluates all estimates from persisted trajectories.
pub fn verify(dir: &Path) -> Result<VerifyOutcome> {
    let run = load_run(dir)?;
    let ev = evaluate(&run.setup, &run.members, run.reference.as_ref())?;
    let now = verdicts(&ev.reports);
    let consistent = now == run.manifest.estimates;
    let status = if !run.manifest.execution_ok() {
        RunStatus::ExecutionFailure
    } else if ev.all_pass() {
        RunStatus::AllPass
    } else {
        RunStatus::EstimateFailure
    };
    Ok(VerifyOutcome {
        reports: ev.reports,
        stored: run.manifest.estimates,
        consistent,
        status,
    })
}

/// Writes `plot/profiles.csv` and `plot/metrics.csv` and lists them in the
/// manifest.
pub fn emit_plotdata(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut run = load_run(dir)?;
    let cfg = &run.setup.config;
    let grid = run.setup.grid.clone();
    let plot = dir.join(PLOT_DIR);
    fs::create_dir_all(&plot).map_err(|e| LabError::io(&plot, e))?;

    let header: Vec<&str> = if grid.dim() == 1 {
        vec!["epsilon", "t", "x", "u"]
    } else {
        vec!["epsilon", "t", "x", "y", "u"]
    };
    let mut rows = Vec::new();
    for traj in &run.members {
        for &target in &cfg.diagnostics.profile_times {
            let n = nearest(traj.times(), target);
            let t = traj.times()[n];
            for (idx, &u) in traj.snapshot(n).iter().enumerate() {
                let p = grid.point(idx);
                let mut row = vec![num(traj.epsilon()), num(t), num(p[0])];
                if grid.dim() == 2 {
                    row.push(num(p[1]));
                }
                row.push(num(u));
                rows.push(row);
            }
        }
    }
    let profiles = write_csv(&plot.join("profiles.csv"), &header, rows)?;

    let metrics_rows = read_metrics(dir)?;
    let metrics = write_csv(
        &plot.join("metrics.csv"),
        &["epsilon", "metric", "value"],
        metrics_rows,
    )?;

    let files = vec![profiles, metrics];
    run.manifest.record_files(dir, &files)?;
    run.manifest.store(dir)?;
    Ok(files)
}

fn nearest(times: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (n, t) in times.iter().enumerate() {
        if (t - target).abs() < (times[best] - target).abs() {
            best = n;
        }
    }
    best
}

/// Long-format `(epsilon, metric, value)` rows from the persisted CSVs.
fn read_metrics(dir: &Path) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    let members_path = dir.join(MEMBERS_FILE);
    let mut reader =
        csv::Reader::from_path(&members_path).map_err(|e| csv_error(&members_path, e))?;
    let header = reader
        .headers()
        .map_err(|e| csv_error(&members_path, e))?
        .clone();
    let mut per_eps: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&members_path, e))?;
        let eps = record.get(0).unwrap_or_default().to_string();
        let mut group = Vec::new();
        for (name, value) in header.iter().zip(record.iter()).skip(1) {
            if !value.is_empty() {
                group.push(vec![eps.clone(), name.to_string(), value.to_string()]);
            }
        }
        per_eps.push((eps, group));
    }
    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let mut reader = csv::Reader::from_path(&diag_path).map_err(|e| csv_error(&diag_path, e))?;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&diag_path, e))?;
        let eps = record.get(0).unwrap_or_default();
        let id = record.get(1).unwrap_or_default();
        if let Some((_, group)) = per_eps.iter_mut().find(|(e, _)| e == eps) {
            group.push(vec![
                eps.into(),
                format!("h1_norm_A:{id}"),
                record.get(2).unwrap_or_default().into(),
            ]);
            group.push(vec![
                eps.into(),
                format!("measure_norm_M:{id}"),
                record.get(3).unwrap_or_default().into(),
            ]);
        }
    }
    for (_, group) in per_eps {
        rows.extend(group);
    }
    Ok(rows)
}

/// Preset names accepted in scenario files.
pub fn presets_text() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "flux components:  {}", FluxComponent::NAMES.join(", "));
    let _ = writeln!(s, "viscosity models: {}", ViscosityModel::NAMES.join(", "));
    let _ = writeln!(s, "initial data:     {}", DataPreset::NAMES.join(", "));
    let _ = writeln!(
        s,
        "entropies:        quadratic, kruzkov family (smoothed |u - k|)"
    );
    s
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<(String, ScenarioConfig)> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let cfg = build_scenario(&text)?;
    Ok((text, cfg))
}
