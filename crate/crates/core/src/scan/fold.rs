//! Sub-grid location of `h_L`.
//!
//! On a vertical line `Re(h) = x` the zeros come in pairs in `Im(h)`. As `x`
//! grows the pair nearest the real axis approaches, merges and disappears;
//! the merge point is the rightmost zero and therefore `h_L`. There `ΔRe E`
//! has a double root along the line:
//!
//! `Re D(h) = 0` and `∂_y Re D(h) = −Im D′(h) = 0`, with `D = E_a − E_b`.
//!
//! `D` is holomorphic away from level crossings, so Newton's method on these
//! two equations only needs `D′` and `D″`, taken from five-point central
//! differences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::plane::{extract_hl, scan_line, PlaneScan};
use super::solver::{GroundSolver, SectorPair};
use super::ScanOptions;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMethod {
    Newton,
    /// Bisection in `Re(h)` on the existence of a zero pair.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldPoint {
    pub h: Complex64,
    /// Grid estimate the refinement started from.
    pub initial: Complex64,
    pub method: FoldMethod,
    pub evaluations: usize,
}

const DIFF_STEP: f64 = 1e-3;

struct Probe<'a> {
    solver: &'a dyn GroundSolver,
    warm: Option<SectorPair>,
    evaluations: usize,
}

impl Probe<'_> {
    fn d(&mut self, h: Complex64) -> Result<Complex64> {
        let pair = self.solver.solve(h, self.warm.as_ref())?;
        self.evaluations += 1;
        let d = pair.0[0].energy - pair.0[1].energy;
        self.warm = Some(pair);
        Ok(d)
    }

    /// `(F, J)` of the fold equations at `x + iy`.
    fn system(&mut self, x: f64, y: f64) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let h = Complex64::new(x, y);
        let s = DIFF_STEP;
        let dm2 = self.d(h - 2.0 * s)?;
        let dm = self.d(h - s)?;
        let d0 = self.d(h)?;
        let dp = self.d(h + s)?;
        let dp2 = self.d(h + 2.0 * s)?;
        let d1 = (8.0 * (dp - dm) - (dp2 - dm2)) / (12.0 * s);
        let d2 = (16.0 * (dp + dm) - (dp2 + dm2) - 30.0 * d0) / (12.0 * s * s);
        let f = [d0.re, -d1.im];
        let j = [[d1.re, -d1.im], [-d2.im, -d2.re]];
        Ok((f, j))
    }
}

fn newton(probe: &mut Probe<'_>, x0: f64, y0: f64, max_step: f64) -> Result<(f64, f64)> {
    let (mut x, mut y) = (x0, y0);
    let (mut f, mut j) = probe.system(x, y)?;
    for _ in 0..60 {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Solver("singular fold Jacobian".into()));
        }
        let mut sx = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let mut sy = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        let len = sx.hypot(sy);
        if len > max_step {
            sx *= max_step / len;
            sy *= max_step / len;
        }
        let merit = f[0].hypot(f[1]);
        let mut lambda = 1.0;
        let (mut nf, mut nj);
        loop {
            let (tx, ty) = (x + lambda * sx, (y + lambda * sy).max(0.5 * y));
            (nf, nj) = probe.system(tx, ty)?;
            if nf[0].hypot(nf[1]) < merit || lambda < 1e-3 {
                let step = (tx - x).hypot(ty - y);
                x = tx;
                y = ty;
                if step < 1e-11 {
                    return Ok((x, y));
                }
                break;
            }
            lambda *= 0.5;
        }
        f = nf;
        j = nj;
    }
    Err(Error::Solver("fold Newton iteration did not converge".into()))
}

/// Rightmost `x ∈ [x_lo, x_hi]` at which the line `Re(h) = x` still carries
/// a sector switch inside the Im window.
fn bisect(
    solver: &dyn GroundSolver,
    x_lo: f64,
    x_hi: f64,
    window: [f64; 2],
    options: &ScanOptions,
    evaluations: &mut usize,
) -> Result<f64> {
    const SAMPLES: usize = 400;
    let ims: Vec<f64> = (0..SAMPLES)
        .map(|i| window[0] + (window[1] - window[0]) * i as f64 / (SAMPLES - 1) as f64)
        .collect();
    let quick = ScanOptions {
        max_root_iterations: 0,
        ..*options
    };
    let (mut lo, mut hi) = (x_lo, x_hi);
    while hi - lo > 1e-12 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        let zs = scan_line(solver, mid, &ims, &quick)?;
        *evaluations += SAMPLES;
        if zs.is_empty() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Refines the merge point of the zero pair at `Im ∈ {y1, y2}` on the line
/// `Re(h) = x0`, given that no zeros remain at `Re(h) = x0 + dx`.
pub fn refine_fold(
    solver: &dyn GroundSolver,
    x0: f64,
    pair: [f64; 2],
    dx: f64,
    options: &ScanOptions,
) -> Result<FoldPoint> {
    let (y1, y2) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
    let initial = Complex64::new(x0, y1);
    let mut probe = Probe {
        solver,
        warm: None,
        evaluations: 0,
    };
    let slack = 1e-9;
    match newton(&mut probe, x0, 0.5 * (y1 + y2), dx.max(1e-3)) {
        Ok((x, y)) if x >= x0 - slack && x <= x0 + dx + slack && y > 0.0 => {
            return Ok(FoldPoint {
                h: Complex64::new(x, y),
                initial,
                method: FoldMethod::Newton,
                evaluations: probe.evaluations,
            })
        }
        Ok((x, y)) => log::warn!("fold Newton left the bracket (landed at {x} + {y}i); bisecting"),
        Err(e) => log::warn!("fold Newton failed ({e}); bisecting"),
    }
    let spread = (y2 - y1).max(0.05 * y1.max(1e-3));
    let window = [(y1 - spread).max(0.25 * y1), y2 + spread];
    let mut evaluations = probe.evaluations;
    let x = bisect(solver, x0, x0 + dx, window, options, &mut evaluations)?;
    // Locate the pair at the final line just inside the bracket.
    let ims: Vec<f64> = (0..400)
        .map(|i| window[0] + (window[1] - window[0]) * i as f64 / 399.0)
        .collect();
    let zs = scan_line(solver, x, &ims, options)?;
    let y = if zs.is_empty() {
        0.5 * (y1 + y2)
    } else {
        zs.zeros.iter().map(|z| z.h.im).sum::<f64>() / zs.len() as f64
    };
    Ok(FoldPoint {
        h: Complex64::new(x, y),
        initial,
        method: FoldMethod::Bisection,
        evaluations,
    })
}

/// `h_L` from a plane scan, refined below the grid resolution.
pub fn refine_hl(solver: &dyn GroundSolver, plane: &PlaneScan, options: &ScanOptions) -> Result<FoldPoint> {
    let coarse = extract_hl(&plane.zeros)?;
    let mut on_line: Vec<f64> = plane
        .zeros
        .zeros
        .iter()
        .filter(|z| (z.h.re - coarse.re).abs() <= 1e-9 && z.h.im > 0.0)
        .map(|z| z.h.im)
        .collect();
    on_line.sort_by(f64::total_cmp);
    let pair = match on_line.as_slice() {
        [a, b, ..] => [*a, *b],
        [a] => [*a, *a],
        [] => return Err(Error::NoZeros),
    };
    let dx = match plane.grid.re_step() {
        s if s > 0.0 => s,
        _ => 1e-2,
    };
    refine_fold(solver, coarse.re, pair, dx, options)
}
