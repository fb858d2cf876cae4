use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Format, ScanMode};
use super::output::{
    header_lines, write_circle_csv, write_fss_csv, write_json, write_zeros_csv, Document, FssRow,
};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::scaling::{fit_fss_joint, fit_fss_pair, FitOptions, FssPoint, JointFit, ScalingFit};
use crate::scan::{
    detect_circle_zeros, edge_report, refine_hl, scan_circle, scan_grid, solver_for, CircleScan, EdgeReport,
    FidelityMode, FoldMethod, FoldPoint, GridSpec, PlaneScan, ZeroSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTiming {
    pub task: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub zeros: usize,
    pub flagged_intervals: usize,
    pub unconverged_zeros: usize,
    pub max_zero_residual: f64,
}

/// Provenance of one run. Timings and the timestamp make it the only output
/// that differs between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub code_version: String,
    pub timestamp_unix: u64,
    pub tasks: Vec<TaskTiming>,
    pub diagnostics: DiagnosticsSummary,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleResult {
    pub scan: CircleScan,
    pub zeros: ZeroSet,
    /// Absent when fewer than four zeros were found.
    pub edge: Option<EdgeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub plane: PlaneScan,
    pub h_l: Option<FoldPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssResult {
    pub points: Vec<FssRow>,
    /// Sizes dropped for lack of zeros, with the reason.
    pub excluded: Vec<(usize, String)>,
    pub re: ScalingFit,
    pub im: ScalingFit,
    pub joint: Option<JointFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunSummary {
    Circle(Vec<CircleResult>),
    Grid(GridResult),
    Fss(FssResult),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub files: Vec<PathBuf>,
    pub summary: RunSummary,
}

struct Recorder<'a> {
    config: &'a ExperimentConfig,
    digest: String,
    dir: &'a Path,
    files: Vec<PathBuf>,
    tasks: Vec<TaskTiming>,
}

impl<'a> Recorder<'a> {
    fn new(config: &'a ExperimentConfig, dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Recorder {
            config,
            digest: config.digest(),
            dir,
            files: Vec::new(),
            tasks: Vec::new(),
        })
    }

    fn time<T>(&mut self, task: impl Into<String>, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        self.tasks.push(TaskTiming {
            task: task.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    fn header(&self, extra: &[(&str, String)]) -> Vec<String> {
        let mut lines = header_lines(&self.digest, &self.config.model, extra);
        let scan = toml::to_string(&self.config.scan).expect("scan section serialises");
        lines.extend(scan.lines().filter(|l| !l.is_empty()).map(|l| format!("scan.{l}")));
        lines
    }

    fn json<T: Serialize>(&mut self, name: &str, payload: T) -> Result<()> {
        if !self.config.wants(Format::Structured) {
            return Ok(());
        }
        let path = self.dir.join(name);
        write_json(
            &path,
            &Document {
                digest: self.digest.clone(),
                model: self.config.model.clone(),
                payload,
            },
        )?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if !self.config.wants(Format::Csv) {
            return Ok(());
        }
        let path = self.dir.join(name);
        write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(mut self, summary: RunSummary, diagnostics: DiagnosticsSummary) -> Result<RunOutput> {
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = RunManifest {
            config_digest: self.digest.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix,
            tasks: std::mem::take(&mut self.tasks),
            diagnostics,
            files: self
                .files
                .iter()
                .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect(),
        };
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        self.files.push(path);
        Ok(RunOutput {
            manifest,
            files: self.files,
            summary,
        })
    }
}

fn summarize<'z>(sets: impl IntoIterator<Item = &'z ZeroSet>) -> DiagnosticsSummary {
    let mut d = DiagnosticsSummary {
        zeros: 0,
        flagged_intervals: 0,
        unconverged_zeros: 0,
        max_zero_residual: 0.0,
    };
    for s in sets {
        d.zeros += s.len();
        d.flagged_intervals += s.flagged.len();
        d.unconverged_zeros += s.zeros.iter().filter(|z| !z.converged).count();
        d.max_zero_residual = d.max_zero_residual.max(s.max_residual());
    }
    d
}

fn radius_tag(g: f64) -> String {
    format!("{g}").replace('.', "p")
}

/// Runs the scan the config describes and writes its outputs under `dir`.
pub fn cmd_scan(config: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    config.validate()?;
    match config.scan.mode {
        ScanMode::Circle => circle_run(config, dir),
        ScanMode::Grid => grid_run(config, dir),
        ScanMode::Fss => cmd_fss(config, dir),
    }
}

fn circle_run(config: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    let spec = config.spec()?;
    let mut rec = Recorder::new(config, dir)?;
    let solver = solver_for(&spec, config.scan.backend, config.solver.solver_config())?;
    let n_theta = config.n_theta(spec.length);
    let mode = match config.reference() {
        Some(h) => FidelityMode::Reference { h },
        None => FidelityMode::Consecutive,
    };
    let options = config.scan.options;
    let mut results = Vec::new();
    for &g in &config.scan.g {
        let tag = radius_tag(g);
        let scan = rec.time(format!("circle g={g}"), || scan_circle(solver.as_ref(), g, n_theta, mode, &options))?;
        let zeros = rec.time(format!("zeros g={g}"), || detect_circle_zeros(solver.as_ref(), &scan, &options))?;
        let edge = match edge_report(&zeros, config.scan.edge_threshold) {
            Ok(r) => Some(r),
            Err(Error::InsufficientData(msg)) => {
                log::warn!("g = {g}: {msg}; no edge report");
                None
            }
            Err(e) => return Err(e),
        };
        let header = rec.header(&[("g", format!("{g}")), ("n_theta", n_theta.to_string())]);
        rec.csv(&format!("circle_g{tag}.csv"), |p| write_circle_csv(p, &header, &scan.samples))?;
        rec.csv(&format!("zeros_g{tag}.csv"), |p| write_zeros_csv(p, &header, &zeros.zeros))?;
        rec.json(&format!("zeros_g{tag}.json"), &zeros)?;
        if let Some(edge) = &edge {
            rec.json(&format!("edge_g{tag}.json"), edge)?;
        }
        results.push(CircleResult { scan, zeros, edge });
    }
    let diag = summarize(results.iter().map(|r| &r.zeros));
    rec.finish(RunSummary::Circle(results), diag)
}

fn grid_run(config: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    let spec = config.spec()?;
    let grid = config.grid()?;
    let mut rec = Recorder::new(config, dir)?;
    let solver = solver_for(&spec, config.scan.backend, config.solver.solver_config())?;
    let options = config.scan.options;
    let plane = rec.time("grid", || scan_grid(solver.as_ref(), &grid, &options))?;
    let h_l = match rec.time("h_l", || refine_hl(solver.as_ref(), &plane, &options)) {
        Ok(f) => Some(f),
        Err(Error::NoZeros) => {
            log::warn!("grid scan found no zeros in the upper half plane");
            None
        }
        Err(e) => return Err(e),
    };
    let header = rec.header(&[]);
    rec.csv("grid_zeros.csv", |p| write_zeros_csv(p, &header, &plane.zeros.zeros))?;
    rec.json("grid.json", &plane)?;
    rec.json("h_l.json", h_l)?;
    let diag = summarize([&plane.zeros]);
    rec.finish(RunSummary::Grid(GridResult { plane, h_l }), diag)
}

/// Where the `h_L` of each size comes from.
pub trait HlSource {
    fn locate(&self, config: &ExperimentConfig, spec: &ModelSpec, grid: &GridSpec) -> Result<FoldPoint>;
}

/// Grid scan followed by sub-grid refinement of the fold.
pub struct ScanHl;

impl HlSource for ScanHl {
    fn locate(&self, config: &ExperimentConfig, spec: &ModelSpec, grid: &GridSpec) -> Result<FoldPoint> {
        let solver = solver_for(spec, config.scan.backend, config.solver.solver_config())?;
        let options = config.scan.options;
        let plane = scan_grid(solver.as_ref(), grid, &options)?;
        refine_hl(solver.as_ref(), &plane, &options)
    }
}

/// Exact scaling-law data, for exercising the pipeline without a solver.
pub struct SyntheticHl {
    pub h_c: Complex64,
    pub a: Complex64,
    pub nu: f64,
}

impl HlSource for SyntheticHl {
    fn locate(&self, _config: &ExperimentConfig, spec: &ModelSpec, _grid: &GridSpec) -> Result<FoldPoint> {
        let h = self.h_c + self.a * (spec.length as f64).powf(-1.0 / self.nu);
        Ok(FoldPoint {
            h,
            initial: h,
            method: FoldMethod::Newton,
            evaluations: 0,
        })
    }
}

/// A small window around the linear extrapolation of the last two points.
fn tracked_grid(points: &[FssRow], length: usize) -> Option<GridSpec> {
    let [.., a, b] = points else { return None };
    let slope = (b.h_l - a.h_l) / (b.length as f64 - a.length as f64);
    let p = b.h_l + slope * (length as f64 - b.length as f64);
    let half = 2.0 * (b.h_l.re - a.h_l.re).abs().max(2e-3);
    Some(GridSpec {
        re_range: [p.re - half, p.re + half],
        im_range: [0.6 * p.im, 1.4 * p.im],
        n_re: 5,
        n_im: 32,
    })
}

pub fn cmd_fss(config: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    cmd_fss_with(config, dir, &ScanHl)
}

pub fn cmd_fss_with(config: &ExperimentConfig, dir: &Path, source: &dyn HlSource) -> Result<RunOutput> {
    config.validate()?;
    let base = config.grid()?;
    let mut rec = Recorder::new(config, dir)?;
    let mut lengths = config.scan.l_list.clone();
    lengths.sort_unstable();
    lengths.dedup();
    let mut points: Vec<FssRow> = Vec::new();
    let mut excluded = Vec::new();
    for &l in &lengths {
        let spec = config.spec_at(l)?;
        let tracked = if config.scan.track { tracked_grid(&points, l) } else { None };
        let grid = tracked.unwrap_or(base);
        match rec.time(format!("h_l L={l}"), || source.locate(config, &spec, &grid)) {
            Ok(f) => points.push(FssRow {
                length: l,
                h_l: f.h,
                method: f.method,
                evaluations: f.evaluations,
            }),
            Err(e @ (Error::NoZeros | Error::InsufficientData(_))) => {
                log::warn!("L = {l} excluded: {e}");
                excluded.push((l, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} sizes produced zeros; at least 4 are needed",
            points.len()
        )));
    }
    let re: Vec<FssPoint> = points.iter().map(|p| FssPoint::new(p.length, p.h_l.re)).collect();
    let im: Vec<FssPoint> = points.iter().map(|p| FssPoint::new(p.length, p.h_l.im)).collect();
    let (re_fit, im_fit) = rec.time("fit", || fit_fss_pair(&re, &im))?;
    let joint = fit_fss_joint(&re, &im, &FitOptions::default())
        .inspect_err(|e| log::warn!("joint fit failed: {e}"))
        .ok();
    let header = rec.header(&[]);
    rec.csv("fss_points.csv", |p| write_fss_csv(p, &header, &points))?;
    let result = FssResult {
        points,
        excluded,
        re: re_fit,
        im: im_fit,
        joint,
    };
    rec.json("fit.json", &result)?;
    let report = format!("# digest = \"{}\"\n{}", rec.digest, fit_report(&result));
    let path = dir.join("fit.txt");
    std::fs::write(&path, &report)?;
    rec.files.push(path);
    let diag = DiagnosticsSummary {
        zeros: result.points.len(),
        flagged_intervals: 0,
        unconverged_zeros: 0,
        max_zero_residual: 0.0,
    };
    rec.finish(RunSummary::Fss(result), diag)
}

/// Human-readable fit summary.
pub fn fit_report(r: &FssResult) -> String {
    let mut s = String::new();
    s.push_str("   L        Re(h_L)              Im(h_L)          res(Re)     res(Im)\n");
    for (i, p) in r.points.iter().enumerate() {
        s.push_str(&format!(
            "{:>4}  {:>.12}  {:>.12}  {:>10.2e}  {:>10.2e}\n",
            p.length, p.h_l.re, p.h_l.im, r.re.per_point_residuals[i], r.im.per_point_residuals[i]
        ));
    }
    for fit in [&r.re, &r.im] {
        s.push_str(&format!(
            "{:?}: h_c = {:.6}  a = {:.6}  nu = {:.6}  rss = {:.3e}{}\n",
            fit.fitted_component,
            fit.h_c,
            fit.a,
            fit.nu,
            fit.rss,
            if fit.nu_at_bound { "  (nu at bound)" } else { "" }
        ));
    }
    if let Some(j) = &r.joint {
        s.push_str(&format!(
            "joint: h_c = {:.6} {:+.6}i  nu = {:.6}  rss = {:.3e}\n",
            j.h_c_re, j.h_c_im, j.nu, j.rss
        ));
    }
    for (l, why) in &r.excluded {
        s.push_str(&format!("excluded L = {l}: {why}\n"));
    }
    s
}
