use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::roots::refine_root;
use super::solver::{state_fidelity, GroundSolver, SectorPair, SectorState};
use super::{FlaggedInterval, Parameterization, ScanOptions, Zero, ZeroSet};
use crate::error::{Error, Result};
use crate::model::SectorLabel;

/// `max(8L, 256)`: at least four samples per expected sector switch.
pub fn default_n_theta(length: usize) -> usize {
    (8 * length).max(256)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FidelityMode {
    /// Fidelity between the ground states at consecutive angles.
    Consecutive,
    /// Fidelity against the ground state at a fixed field.
    Reference { h: Complex64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSample {
    pub theta: f64,
    /// Ground-state sector; `None` when the sample could not be solved.
    pub sector: Option<SectorLabel>,
    /// Ground energy `E₀`.
    pub energy: Complex64,
    /// `Re(E_a) − Re(E_b)` for the competing sectors in order.
    pub gap: f64,
    /// Consecutive (to the next sample, wrapping) or reference fidelity.
    pub fidelity: Option<f64>,
}

impl CircleSample {
    pub fn flagged(&self) -> bool {
        self.sector.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleScan {
    pub g: f64,
    pub n_theta: usize,
    pub fidelity_mode: FidelityMode,
    pub sectors: [SectorLabel; 2],
    pub samples: Vec<CircleSample>,
}

impl CircleScan {
    /// Number of sector switches between consecutive samples, wrap included.
    pub fn switch_count(&self) -> usize {
        let n = self.samples.len();
        (0..n)
            .filter(|&i| {
                let (a, b) = (self.samples[i].sector, self.samples[(i + 1) % n].sector);
                a.is_some() && b.is_some() && a != b
            })
            .count()
    }
}

fn theta_at(i: usize, n: usize) -> f64 {
    TAU * (i + 1) as f64 / n as f64
}

struct ChunkOut {
    samples: Vec<CircleSample>,
    first: Option<SectorState>,
    last: Option<SectorState>,
}

/// Samples `h = g e^{iθ}` at `θ_i = 2π(i+1)/n`, i = 0..n.
pub fn scan_circle(
    solver: &dyn GroundSolver,
    g: f64,
    n_theta: usize,
    mode: FidelityMode,
    options: &ScanOptions,
) -> Result<CircleScan> {
    let length = solver.spec().length;
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::validation(format!("circle radius must be finite and nonnegative, got {g}")));
    }
    if n_theta < 8 * length {
        return Err(Error::validation(format!("n_theta = {n_theta} is below 8L = {}", 8 * length)));
    }
    let reference = match mode {
        FidelityMode::Consecutive => None,
        FidelityMode::Reference { h } => Some(solver.solve(h, None)?.ground().clone()),
    };
    let chunk = options.chunk.max(1);
    let starts: Vec<usize> = (0..n_theta).step_by(chunk).collect();
    let chunks: Vec<ChunkOut> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + chunk).min(n_theta);
            let mut samples = Vec::with_capacity(end - start);
            let mut warm: Option<SectorPair> = None;
            let mut prev: Option<SectorState> = None;
            let mut first = None;
            for i in start..end {
                let theta = theta_at(i, n_theta);
                let h = Complex64::from_polar(g, theta);
                match solver.solve(h, warm.as_ref()) {
                    Ok(pair) => {
                        let ground = pair.ground().clone();
                        if let Some(p) = prev.take() {
                            if reference.is_none() {
                                let last: &mut CircleSample = samples.last_mut().expect("previous sample");
                                last.fidelity = state_fidelity(&p, &ground).ok();
                            }
                        }
                        let fidelity = reference.as_ref().and_then(|r| state_fidelity(r, &ground).ok());
                        samples.push(CircleSample {
                            theta,
                            sector: Some(ground.sector),
                            energy: ground.energy,
                            gap: pair.gap(),
                            fidelity,
                        });
                        if i == start {
                            first = Some(ground.clone());
                        }
                        prev = Some(ground);
                        warm = Some(pair);
                    }
                    Err(e) => {
                        log::warn!("sample θ = {theta} failed: {e}");
                        samples.push(CircleSample {
                            theta,
                            sector: None,
                            energy: Complex64::new(f64::NAN, f64::NAN),
                            gap: f64::NAN,
                            fidelity: None,
                        });
                        prev = None;
                        warm = None;
                    }
                }
            }
            ChunkOut { samples, first, last: prev }
        })
        .collect();

    // Join the chunk boundaries (and the wrap-around pair) in consecutive mode.
    let mut samples = Vec::with_capacity(n_theta);
    let k = chunks.len();
    for c in 0..k {
        let mut part = chunks[c].samples.clone();
        if reference.is_none() {
            let next = &chunks[(c + 1) % k];
            if let (Some(a), Some(b)) = (&chunks[c].last, &next.first) {
                if next.samples.first().is_some_and(|s| !s.flagged()) {
                    if let Some(s) = part.last_mut() {
                        s.fidelity = state_fidelity(a, b).ok();
                    }
                }
            }
        }
        samples.append(&mut part);
    }

    let flagged = samples.iter().filter(|s| s.flagged()).count();
    if flagged as f64 > options.max_flagged_fraction * n_theta as f64 {
        return Err(Error::Solver(format!(
            "{flagged} of {n_theta} circle samples failed (limit {:.0}%)",
            100.0 * options.max_flagged_fraction
        )));
    }
    let sectors = solver.spec().competing_sectors();
    Ok(CircleScan {
        g,
        n_theta,
        fidelity_mode: mode,
        sectors,
        samples,
    })
}

/// A sign change of the gap between two angles, with the gaps at both ends.
#[derive(Clone, Copy)]
struct Bracket {
    lo: f64,
    hi: f64,
    g_lo: f64,
    g_hi: f64,
}

type Point = (f64, f64);

/// Smallest value of `sign · p(x)` on `[b.0, c.0]` for the parabola through
/// three points, `sign` being the sign of the gap at `b`.
fn parabola_floor(p: [Point; 3], b: Point, c: Point) -> f64 {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    let eval = |x: f64| y0 + d01 * (x - x0) + curv * (x - x0) * (x - x1);
    let sign = b.1.signum();
    let mut low = (sign * b.1).min(sign * c.1);
    if curv != 0.0 {
        let vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
        if vertex > b.0 && vertex < c.0 {
            low = low.min(sign * eval(vertex));
        }
    }
    low
}

/// Whether two crossings could hide between samples `b` and `c` whose gaps
/// have the same sign. Parabolas through `b`, `c` and each neighbour must
/// stay clear of zero by a tenth of the local change in the gap; without
/// neighbours the interval counts as suspect when an end value is below half
/// the change across it.
fn may_hide_pair(a: Option<Point>, b: Point, c: Point, d: Option<Point>) -> bool {
    let a = a.filter(|p| p.1.is_finite());
    let d = d.filter(|p| p.1.is_finite());
    let mut spread = (c.1 - b.1).abs();
    for (x, y) in [(a, b), (d, c)] {
        if let Some(x) = x {
            spread = spread.max((y.1 - x.1).abs());
        }
    }
    let floors: Vec<f64> = [a.map(|a| [a, b, c]), d.map(|d| [b, c, d])]
        .into_iter()
        .flatten()
        .map(|p| parabola_floor(p, b, c))
        .collect();
    if floors.is_empty() {
        return b.1.abs().min(c.1.abs()) < 0.5 * spread;
    }
    floors.iter().any(|&f| f < 0.1 * spread)
}

/// Resamples `[lo, hi]` until a switch appears or `depth` levels are spent.
fn subdivide(
    gap: &mut dyn FnMut(f64) -> Result<f64>,
    points: [Point; 2],
    outer: [Option<Point>; 2],
    depth: usize,
    out: &mut Vec<Bracket>,
) -> Result<()> {
    if depth == 0 {
        return Ok(());
    }
    const PARTS: usize = 4;
    let [(lo, g_lo), (hi, g_hi)] = points;
    let mut pts = vec![(lo, g_lo)];
    for k in 1..PARTS {
        let t = lo + (hi - lo) * k as f64 / PARTS as f64;
        pts.push((t, gap(t)?));
    }
    pts.push((hi, g_hi));
    let mut found = false;
    for w in pts.windows(2) {
        if w[0].1.signum() != w[1].1.signum() {
            found = true;
            out.push(Bracket { lo: w[0].0, hi: w[1].0, g_lo: w[0].1, g_hi: w[1].1 });
        }
    }
    if found {
        return Ok(());
    }
    for j in 0..PARTS {
        let a = if j == 0 { outer[0] } else { Some(pts[j - 1]) };
        let d = if j + 2 < pts.len() { Some(pts[j + 2]) } else { outer[1] };
        if may_hide_pair(a, pts[j], pts[j + 1], d) {
            subdivide(gap, [pts[j], pts[j + 1]], [a, d], depth - 1, out)?;
        }
    }
    Ok(())
}

/// Refines every sector switch of a circle scan to `|ΔRe E| ≤ tol` in θ.
///
/// Besides the switches between samples, same-sector intervals that could
/// hide a pair of crossings are resampled (up to `options.subdivide_depth`
/// levels of four-way splits), so closely spaced zeros are not lost.
pub fn detect_circle_zeros(solver: &dyn GroundSolver, scan: &CircleScan, options: &ScanOptions) -> Result<ZeroSet> {
    let n = scan.samples.len();
    let g = scan.g;
    let sample = |i: usize| &scan.samples[i % n];
    let unwrap_hi = |i: usize, j: usize| if j <= i { scan.samples[j].theta + TAU } else { scan.samples[j].theta };
    let solved = |i: usize| !sample(i).flagged();
    // Neighbouring sample as a point on the unwrapped axis around interval i.
    let neighbour = |i: usize, offset: f64| Some(sample(i)).filter(|s| !s.flagged()).map(|s| (s.theta + offset, s.gap));

    let intervals: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).filter(|&(i, j)| solved(i) && solved(j)).collect();
    let per_interval: Vec<Result<Vec<Bracket>>> = intervals
        .par_iter()
        .map(|&(i, j)| {
            let (si, sj) = (sample(i), sample(j));
            let hi = unwrap_hi(i, j);
            if si.sector != sj.sector {
                return Ok(vec![Bracket { lo: si.theta, hi, g_lo: si.gap, g_hi: sj.gap }]);
            }
            let (lo, hi_pt) = ((si.theta, si.gap), (hi, sj.gap));
            let before = if i == 0 { -TAU } else { 0.0 };
            let after = if i + 2 >= n { TAU } else { 0.0 };
            let outer = [neighbour(i + n - 1, before), neighbour(j + 1, after)];
            if options.subdivide_depth == 0 || !may_hide_pair(outer[0], lo, hi_pt, outer[1]) {
                return Ok(vec![]);
            }
            let mut warm: Option<SectorPair> = None;
            let mut gap = |theta: f64| -> Result<f64> {
                let pair = solver.solve(Complex64::from_polar(g, theta), warm.as_ref())?;
                let d = pair.gap();
                warm = Some(pair);
                Ok(d)
            };
            let mut out = Vec::new();
            subdivide(&mut gap, [lo, hi_pt], outer, options.subdivide_depth, &mut out)?;
            Ok(out)
        })
        .collect();

    let mut brackets = Vec::new();
    let mut flagged = Vec::new();
    for (&(i, j), r) in intervals.iter().zip(per_interval) {
        match r {
            Ok(b) => brackets.extend(b),
            Err(e) => flagged.push(FlaggedInterval {
                from: Complex64::from_polar(g, scan.samples[i].theta),
                to: Complex64::from_polar(g, scan.samples[j].theta),
                reason: e.to_string(),
            }),
        }
    }

    let [a, b] = scan.sectors;
    let lower = |gap: f64| if gap < 0.0 { a } else { b };
    let results: Vec<Result<Zero>> = brackets
        .par_iter()
        .map(|br| {
            let mut warm: Option<SectorPair> = None;
            let mut gap = |theta: f64| -> Result<f64> {
                let pair = solver.solve(Complex64::from_polar(g, theta), warm.as_ref())?;
                let d = pair.gap();
                warm = Some(pair);
                Ok(d)
            };
            let root = refine_root(&mut gap, br.lo, br.hi, br.g_lo, br.g_hi, options.root_tolerance, options.max_root_iterations)?;
            let theta = if root.x > TAU { root.x - TAU } else { root.x };
            if !root.converged {
                log::warn!("zero near θ = {theta} refined only to residual {:e}", root.residual);
            }
            Ok(Zero {
                h: Complex64::from_polar(g, theta),
                theta: Some(theta),
                sectors: [lower(br.g_lo), lower(br.g_hi)],
                residual: root.residual,
                converged: root.converged,
            })
        })
        .collect();
    let mut zeros = Vec::new();
    for (br, r) in brackets.iter().zip(results) {
        match r {
            Ok(z) => zeros.push(z),
            Err(e) => flagged.push(FlaggedInterval {
                from: Complex64::from_polar(g, br.lo),
                to: Complex64::from_polar(g, br.hi),
                reason: e.to_string(),
            }),
        }
    }
    zeros.sort_by(|a, b| a.theta.unwrap().total_cmp(&b.theta.unwrap()));
    Ok(ZeroSet {
        parameterization: Parameterization::Circle { g },
        zeros,
        flagged,
    })
}
