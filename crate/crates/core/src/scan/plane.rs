use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::roots::refine_root;
use super::solver::{GroundSolver, SectorPair};
use super::{FlaggedInterval, Parameterization, ScanOptions, Zero, ZeroSet};
use crate::error::{Error, Result};

/// Rectangle of vertical sweep lines: `n_re` lines of constant `Re(h)`, each
/// sampled at `n_im` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub re_range: [f64; 2],
    pub im_range: [f64; 2],
    pub n_re: usize,
    pub n_im: usize,
}

fn linspace(range: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range[0]];
    }
    let step = (range[1] - range[0]) / (n - 1) as f64;
    (0..n).map(|i| range[0] + step * i as f64).collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = self.re_range.iter().chain(&self.im_range).all(|v| v.is_finite());
        if !finite {
            return Err(Error::validation("grid ranges must be finite"));
        }
        if self.re_range[0] > self.re_range[1] {
            return Err(Error::validation(format!(
                "empty Re range: {} > {}",
                self.re_range[0], self.re_range[1]
            )));
        }
        if self.im_range[0] >= self.im_range[1] {
            return Err(Error::validation(format!(
                "empty Im range: {} >= {}",
                self.im_range[0], self.im_range[1]
            )));
        }
        if self.n_re == 0 || self.n_im < 2 {
            return Err(Error::validation("grid needs n_re >= 1 and n_im >= 2"));
        }
        Ok(())
    }

    pub fn re_values(&self) -> Vec<f64> {
        linspace(self.re_range, self.n_re)
    }

    pub fn im_values(&self) -> Vec<f64> {
        linspace(self.im_range, self.n_im)
    }

    pub fn re_step(&self) -> f64 {
        if self.n_re > 1 {
            (self.re_range[1] - self.re_range[0]) / (self.n_re - 1) as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSummary {
    pub re: f64,
    pub zero_count: usize,
    pub failed_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneScan {
    pub grid: GridSpec,
    pub lines: Vec<LineSummary>,
    pub zeros: ZeroSet,
}

struct PathOut {
    zeros: Vec<Zero>,
    flagged: Vec<FlaggedInterval>,
    failed_samples: usize,
}

/// Sweeps a path `t ↦ h(t)` over the given (increasing) parameter values and
/// refines every sector switch between consecutive samples.
fn sweep_path(
    solver: &dyn GroundSolver,
    path: &dyn Fn(f64) -> Complex64,
    ts: &[f64],
    options: &ScanOptions,
) -> PathOut {
    let mut out = PathOut {
        zeros: Vec::new(),
        flagged: Vec::new(),
        failed_samples: 0,
    };
    let mut prev: Option<(f64, SectorPair)> = None;
    for &t in ts {
        let warm = prev.as_ref().map(|(_, p)| p);
        let pair = match solver.solve(path(t), warm) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("sample at h = {} failed: {e}", path(t));
                out.failed_samples += 1;
                prev = None;
                continue;
            }
        };
        if let Some((t0, p0)) = &prev {
            let (s0, s1) = (p0.ground().sector, pair.ground().sector);
            if s0 != s1 {
                let mut warm = Some(p0.clone());
                let mut gap = |t: f64| -> Result<f64> {
                    let p = solver.solve(path(t), warm.as_ref())?;
                    let d = p.gap();
                    warm = Some(p);
                    Ok(d)
                };
                match refine_root(&mut gap, *t0, t, p0.gap(), pair.gap(), options.root_tolerance, options.max_root_iterations) {
                    Ok(root) => out.zeros.push(Zero {
                        h: path(root.x),
                        theta: None,
                        sectors: [s0, s1],
                        residual: root.residual,
                        converged: root.converged,
                    }),
                    Err(e) => out.flagged.push(FlaggedInterval {
                        from: path(*t0),
                        to: path(t),
                        reason: e.to_string(),
                    }),
                }
            }
        }
        prev = Some((t, pair));
    }
    out
}

/// Zeros along an arbitrary one-dimensional path in the field plane.
pub fn detect_path_zeros(
    solver: &dyn GroundSolver,
    path: &(dyn Fn(f64) -> Complex64 + Sync),
    ts: &[f64],
    options: &ScanOptions,
) -> Result<ZeroSet> {
    let out = sweep_path(solver, path, ts, options);
    check_failures(out.failed_samples, ts.len(), options)?;
    Ok(ZeroSet {
        parameterization: Parameterization::CartesianGrid,
        zeros: out.zeros,
        flagged: out.flagged,
    })
}

/// Zeros along the vertical line `Re(h) = re`.
pub fn scan_line(solver: &dyn GroundSolver, re: f64, ims: &[f64], options: &ScanOptions) -> Result<ZeroSet> {
    detect_path_zeros(solver, &move |y| Complex64::new(re, y), ims, options)
}

fn check_failures(failed: usize, total: usize, options: &ScanOptions) -> Result<()> {
    if failed as f64 > options.max_flagged_fraction * total as f64 {
        return Err(Error::Solver(format!(
            "{failed} of {total} samples failed (limit {:.0}%)",
            100.0 * options.max_flagged_fraction
        )));
    }
    Ok(())
}

/// Plane distribution of zeros from independent vertical sweeps.
pub fn scan_grid(solver: &dyn GroundSolver, grid: &GridSpec, options: &ScanOptions) -> Result<PlaneScan> {
    grid.validate()?;
    let ims = grid.im_values();
    let outs: Vec<(f64, PathOut)> = grid
        .re_values()
        .into_par_iter()
        .map(|re| (re, sweep_path(solver, &move |y| Complex64::new(re, y), &ims, options)))
        .collect();
    let failed: usize = outs.iter().map(|(_, o)| o.failed_samples).sum();
    check_failures(failed, grid.n_re * grid.n_im, options)?;
    let mut lines = Vec::with_capacity(outs.len());
    let mut zeros = Vec::new();
    let mut flagged = Vec::new();
    for (re, out) in outs {
        lines.push(LineSummary {
            re,
            zero_count: out.zeros.len(),
            failed_samples: out.failed_samples,
        });
        zeros.extend(out.zeros);
        flagged.extend(out.flagged);
    }
    Ok(PlaneScan {
        grid: *grid,
        lines,
        zeros: ZeroSet {
            parameterization: Parameterization::CartesianGrid,
            zeros,
            flagged,
        },
    })
}

/// The zero with the largest real part (Im > 0 only); near-ties in `Re`
/// within 1e-9 go to the smallest imaginary part.
pub fn extract_hl(zeros: &ZeroSet) -> Result<Complex64> {
    let upper: Vec<&Zero> = zeros.zeros.iter().filter(|z| z.h.im > 0.0).collect();
    let max_re = upper
        .iter()
        .map(|z| z.h.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = upper
        .iter()
        .filter(|z| z.h.re >= max_re - 1e-9)
        .min_by(|a, b| a.h.im.total_cmp(&b.h.im))
        .ok_or(Error::NoZeros)?;
    let min_im = upper.iter().map(|z| z.h.im).fold(f64::INFINITY, f64::min);
    if chosen.h.im > min_im {
        log::info!(
            "rightmost zero {} is not the lowest one (min Im = {min_im})",
            chosen.h
        );
    }
    Ok(chosen.h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SectorLabel;

    fn zero(re: f64, im: f64) -> Zero {
        Zero {
            h: Complex64::new(re, im),
            theta: None,
            sectors: [SectorLabel(0), SectorLabel(1)],
            residual: 0.0,
            converged: true,
        }
    }

    fn set(zeros: Vec<Zero>) -> ZeroSet {
        ZeroSet {
            parameterization: Parameterization::CartesianGrid,
            zeros,
            flagged: vec![],
        }
    }

    #[test]
    fn selection_rule() {
        let z = set(vec![zero(1.0, 0.2), zero(0.8, 0.1)]);
        assert_eq!(extract_hl(&z).unwrap(), Complex64::new(1.0, 0.2));
        let z = set(vec![zero(1.0, 0.3), zero(1.0 + 1e-10, 0.2), zero(0.9, 0.05)]);
        assert_eq!(extract_hl(&z).unwrap(), Complex64::new(1.0 + 1e-10, 0.2));
        let z = set(vec![zero(1.0, -0.2)]);
        assert!(matches!(extract_hl(&z), Err(Error::NoZeros)));
        assert!(matches!(extract_hl(&set(vec![])), Err(Error::NoZeros)));
    }

    #[test]
    fn grid_validation() {
        let bad = GridSpec {
            re_range: [1.2, 0.8],
            im_range: [0.0, 1.0],
            n_re: 4,
            n_im: 4,
        };
        assert!(bad.validate().unwrap_err().is_validation());
        let ok = GridSpec { re_range: [0.8, 1.2], ..bad };
        ok.validate().unwrap();
        assert_eq!(ok.re_values().len(), 4);
        assert!((ok.re_step() - 0.4 / 3.0).abs() < 1e-15);
    }
}
