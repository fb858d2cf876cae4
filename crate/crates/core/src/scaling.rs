//! Finite-size scaling of the transition point.
//!
//! The rightmost fidelity zero `h_L` of a chain of length `L` approaches the
//! critical field as `h_L = h_c + a L^{-1/ν}`. Real and imaginary parts are
//! fitted separately; the imaginary series should extrapolate to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    Re,
    Im,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FssPoint {
    pub length: usize,
    pub value: f64,
}

impl FssPoint {
    pub fn new(length: usize, value: f64) -> Self {
        FssPoint { length, value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub h_c: f64,
    pub a: f64,
    pub nu: f64,
    pub rss: f64,
    /// `value − model`, in input order.
    pub per_point_residuals: Vec<f64>,
    pub fitted_component: Component,
    /// False when the data carry no information on `ν` (flat series).
    pub nu_identifiable: bool,
    /// The optimum sits on a `ν` bound.
    pub nu_at_bound: bool,
    /// Starting `ν` of the winning start.
    pub start_nu: f64,
    pub iterations: usize,
}

impl ScalingFit {
    pub fn predict(&self, length: usize) -> f64 {
        self.h_c + self.a * (length as f64).powf(-1.0 / self.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative parameter change that counts as converged.
    pub tolerance: f64,
    pub initial_damping: f64,
    pub nu_bounds: [f64; 2],
    pub nu_starts: [f64; 3],
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            tolerance: 1e-10,
            initial_damping: 1e-3,
            nu_bounds: [0.1, 10.0],
            nu_starts: [0.5, 1.0, 2.0],
        }
    }
}

fn check_points(points: &[FssPoint]) -> Result<()> {
    if let Some(p) = points.iter().find(|p| !p.value.is_finite()) {
        return Err(Error::validation(format!("non-finite value {} at L = {}", p.value, p.length)));
    }
    if let Some(p) = points.iter().find(|p| p.length == 0) {
        return Err(Error::validation(format!("chain length must be positive, got {}", p.length)));
    }
    let mut lengths: Vec<usize> = points.iter().map(|p| p.length).collect();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "scaling fit needs at least 4 distinct lengths, got {}",
            lengths.len()
        )));
    }
    Ok(())
}

/// Least-squares solution of `[J; √λ·D] δ = [−r; 0]` by modified Gram-Schmidt
/// with one reorthogonalisation pass. `D` is the column-norm scaling, which
/// makes the step invariant under rescaling of the parameters.
fn damped_step(jac: &[Vec<f64>], r: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let m = r.len();
    let n = jac.len();
    let rows = m + n;
    let mut cols: Vec<Vec<f64>> = jac
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut col = c.clone();
            col.resize(rows, 0.0);
            col[m + j] = lambda.sqrt() * norm.max(f64::MIN_POSITIVE);
            col
        })
        .collect();
    let mut rhs: Vec<f64> = r.iter().map(|x| -x).collect();
    rhs.resize(rows, 0.0);
    let mut upper = vec![vec![0.0; n]; n];
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let proj: f64 = (0..rows).map(|k| cols[i][k] * cols[j][k]).sum();
                upper[i][j] += proj;
                for k in 0..rows {
                    cols[j][k] -= proj * cols[i][k];
                }
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        upper[j][j] = norm;
        cols[j].iter_mut().for_each(|x| *x /= norm);
    }
    let qtb: Vec<f64> = (0..n).map(|j| (0..rows).map(|k| cols[j][k] * rhs[k]).sum()).collect();
    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        let s: f64 = (j + 1..n).map(|i| upper[j][i] * x[i]).sum();
        x[j] = (qtb[j] - s) / upper[j][j];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct LmOutcome {
    params: Vec<f64>,
    rss: f64,
    iterations: usize,
    converged: bool,
}

/// Damped step with parameters sitting on a bound, and pushed outwards, held
/// fixed.
fn bounded_step(jac: &[Vec<f64>], r: &[f64], lambda: f64, p: &[f64], bounds: &[Option<[f64; 2]>]) -> Option<Vec<f64>> {
    let full = damped_step(jac, r, lambda)?;
    let pinned: Vec<bool> = (0..p.len())
        .map(|i| {
            bounds[i].is_some_and(|[lo, hi]| (p[i] <= lo && full[i] < 0.0) || (p[i] >= hi && full[i] > 0.0))
        })
        .collect();
    if !pinned.contains(&true) {
        return Some(full);
    }
    let free: Vec<usize> = (0..p.len()).filter(|&i| !pinned[i]).collect();
    let sub: Vec<Vec<f64>> = free.iter().map(|&i| jac[i].clone()).collect();
    let reduced = damped_step(&sub, r, lambda)?;
    let mut step = vec![0.0; p.len()];
    for (k, &i) in free.iter().enumerate() {
        step[i] = reduced[k];
    }
    Some(step)
}

/// Levenberg-Marquardt on a residual function returning `(r, J)` with `J`
/// stored column-major, inside optional per-parameter bounds.
fn levenberg_marquardt(
    eval: &dyn Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
    bounds: &[Option<[f64; 2]>],
    start: Vec<f64>,
    options: &FitOptions,
) -> LmOutcome {
    let rss_of = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut p = start;
    let (mut r, mut jac) = eval(&p);
    let mut rss = rss_of(&r);
    let mut lambda = options.initial_damping;
    for iteration in 1..=options.max_iterations {
        if rss == 0.0 {
            return LmOutcome { params: p, rss, iterations: iteration - 1, converged: true };
        }
        let Some(step) = bounded_step(&jac, &r, lambda, &p, bounds) else {
            break;
        };
        let trial: Vec<f64> = p
            .iter()
            .zip(&step)
            .zip(bounds)
            .map(|((a, b), bound)| match bound {
                Some([lo, hi]) => (a + b).clamp(*lo, *hi),
                None => a + b,
            })
            .collect();
        let (tr, tj) = eval(&trial);
        let trss = rss_of(&tr);
        if trss.is_finite() && trss <= rss {
            let small = p
                .iter()
                .zip(&trial)
                .all(|(a, b)| (b - a).abs() <= options.tolerance * a.abs().max(options.tolerance));
            p = trial;
            r = tr;
            jac = tj;
            rss = trss;
            lambda = (lambda / 2.0).max(1e-15);
            if small {
                let (p, rss) = polish(eval, bounds, p, r, jac, rss);
                return LmOutcome { params: p, rss, iterations: iteration, converged: true };
            }
        } else {
            lambda *= 3.0;
            if lambda > 1e16 {
                // No descent direction left at any damping: a stationary point.
                return LmOutcome { params: p, rss, iterations: iteration, converged: true };
            }
        }
    }
    LmOutcome {
        params: p,
        rss,
        iterations: options.max_iterations,
        converged: false,
    }
}

/// Undamped Gauss-Newton steps from a converged point, kept while they lower
/// the residual. Removes the bias a large damping leaves in flat valleys.
fn polish(
    eval: &dyn Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
    bounds: &[Option<[f64; 2]>],
    mut p: Vec<f64>,
    mut r: Vec<f64>,
    mut jac: Vec<Vec<f64>>,
    mut rss: f64,
) -> (Vec<f64>, f64) {
    for _ in 0..20 {
        let Some(step) = bounded_step(&jac, &r, 0.0, &p, bounds) else {
            break;
        };
        let trial: Vec<f64> = p
            .iter()
            .zip(&step)
            .zip(bounds)
            .map(|((a, b), bound)| match bound {
                Some([lo, hi]) => (a + b).clamp(*lo, *hi),
                None => a + b,
            })
            .collect();
        let (tr, tj) = eval(&trial);
        let trss: f64 = tr.iter().map(|x| x * x).sum();
        // Near the optimum rss is flat to rounding; allow for that.
        if !(trss <= rss * (1.0 + 1e-10)) {
            break;
        }
        let settled = p.iter().zip(&trial).all(|(a, b)| (a - b).abs() <= 1e-15 * a.abs().max(1e-300));
        (p, r, jac, rss) = (trial, tr, tj, trss);
        if settled {
            break;
        }
    }
    (p, rss)
}

fn power_law_eval(points: &[FssPoint], p: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (h_c, a, nu) = (p[0], p[1], p[2]);
    let mut r = Vec::with_capacity(points.len());
    let mut jac = vec![Vec::with_capacity(points.len()); 3];
    for pt in points {
        let ln_l = (pt.length as f64).ln();
        let x = (-ln_l / nu).exp();
        r.push(h_c + a * x - pt.value);
        jac[0].push(1.0);
        jac[1].push(x);
        jac[2].push(a * x * ln_l / (nu * nu));
    }
    (r, jac)
}

fn initial_guess(points: &[FssPoint], nu0: f64) -> [f64; 3] {
    let mut sorted: Vec<&FssPoint> = points.iter().collect();
    sorted.sort_by_key(|p| p.length);
    let last = sorted[sorted.len() - 1];
    let prev = sorted
        .iter()
        .rev()
        .find(|p| p.length != last.length)
        .expect("at least two distinct lengths");
    let x = |l: usize| (l as f64).powf(-1.0 / nu0);
    let a = (prev.value - last.value) / (x(prev.length) - x(last.length));
    [last.value, a, nu0]
}

/// Fits `value = h_c + a L^{-1/ν}` by damped least squares, keeping the best
/// of several starting exponents.
pub fn fit_fss(points: &[FssPoint], component: Component) -> Result<ScalingFit> {
    fit_fss_with(points, component, &FitOptions::default())
}

pub fn fit_fss_with(points: &[FssPoint], component: Component, options: &FitOptions) -> Result<ScalingFit> {
    check_points(points)?;
    let [lo, hi] = options.nu_bounds;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::validation(format!("invalid ν bounds [{lo}, {hi}]")));
    }
    let first = points[0].value;
    if points.iter().all(|p| p.value == first) {
        return Ok(ScalingFit {
            h_c: first,
            a: 0.0,
            nu: 1.0,
            rss: 0.0,
            per_point_residuals: vec![0.0; points.len()],
            fitted_component: component,
            nu_identifiable: false,
            nu_at_bound: false,
            start_nu: 1.0,
            iterations: 0,
        });
    }

    let eval = |p: &[f64]| power_law_eval(points, p);
    let bounds = [None, None, Some([lo, hi])];
    let mut best: Option<(LmOutcome, f64)> = None;
    let mut failures = Vec::new();
    for &nu0 in &options.nu_starts {
        let out = levenberg_marquardt(&eval, &bounds, initial_guess(points, nu0).to_vec(), options);
        if !out.converged || !out.rss.is_finite() {
            failures.push(format!("ν₀ = {nu0}: rss {:e} after {} iterations", out.rss, out.iterations));
            continue;
        }
        if best.as_ref().is_none_or(|(b, _)| out.rss < b.rss) {
            best = Some((out, nu0));
        }
    }
    let (out, start_nu) = best.ok_or_else(|| Error::Fit(format!("no start converged ({})", failures.join("; "))))?;
    let (h_c, a, nu) = (out.params[0], out.params[1], out.params[2]);
    let per_point_residuals = points.iter().map(|p| p.value - h_c - a * (p.length as f64).powf(-1.0 / nu)).collect();
    let bound_tol = 1e-9 * hi;
    Ok(ScalingFit {
        h_c,
        a,
        nu,
        rss: out.rss,
        per_point_residuals,
        fitted_component: component,
        nu_identifiable: a != 0.0,
        nu_at_bound: (nu - lo).abs() <= bound_tol || (hi - nu).abs() <= bound_tol,
        start_nu,
        iterations: out.iterations,
    })
}

fn same_lengths(re: &[FssPoint], im: &[FssPoint]) -> Result<()> {
    if re.len() != im.len() || re.iter().zip(im).any(|(a, b)| a.length != b.length) {
        return Err(Error::validation("real and imaginary series must share the same L list"));
    }
    Ok(())
}

/// Independent fits of the real and imaginary series.
pub fn fit_fss_pair(re: &[FssPoint], im: &[FssPoint]) -> Result<(ScalingFit, ScalingFit)> {
    same_lengths(re, im)?;
    Ok((fit_fss(re, Component::Re)?, fit_fss(im, Component::Im)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointFit {
    pub h_c_re: f64,
    pub a_re: f64,
    pub h_c_im: f64,
    pub a_im: f64,
    pub nu: f64,
    pub rss: f64,
    pub iterations: usize,
}

/// Both series with a shared exponent.
pub fn fit_fss_joint(re: &[FssPoint], im: &[FssPoint], options: &FitOptions) -> Result<JointFit> {
    same_lengths(re, im)?;
    check_points(re)?;
    check_points(im)?;
    let [lo, hi] = options.nu_bounds;
    let n = re.len();
    let eval = |p: &[f64]| {
        let (rr, jr) = power_law_eval(re, &[p[0], p[1], p[4]]);
        let (ri, ji) = power_law_eval(im, &[p[2], p[3], p[4]]);
        let zeros = vec![0.0; n];
        let cat = |a: &[f64], b: &[f64]| [a, b].concat();
        let r = cat(&rr, &ri);
        let jac = vec![
            cat(&jr[0], &zeros),
            cat(&jr[1], &zeros),
            cat(&zeros, &ji[0]),
            cat(&zeros, &ji[1]),
            cat(&jr[2], &ji[2]),
        ];
        (r, jac)
    };
    let bounds = [None, None, None, None, Some([lo, hi])];
    let mut best: Option<LmOutcome> = None;
    for &nu0 in &options.nu_starts {
        let [hr, ar, _] = initial_guess(re, nu0);
        let [hi_, ai, _] = initial_guess(im, nu0);
        let out = levenberg_marquardt(&eval, &bounds, vec![hr, ar, hi_, ai, nu0], options);
        if out.converged && best.as_ref().is_none_or(|b| out.rss < b.rss) {
            best = Some(out);
        }
    }
    let out = best.ok_or_else(|| Error::Fit("joint fit: no start converged".into()))?;
    Ok(JointFit {
        h_c_re: out.params[0],
        a_re: out.params[1],
        h_c_im: out.params[2],
        a_im: out.params[3],
        nu: out.params[4],
        rss: out.rss,
        iterations: out.iterations,
    })
}

/// Sum of squared residuals of the scaling law at the given parameters.
pub fn fss_rss(points: &[FssPoint], h_c: f64, a: f64, nu: f64) -> f64 {
    points
        .iter()
        .map(|p| (p.value - h_c - a * (p.length as f64).powf(-1.0 / nu)).powi(2))
        .sum()
}
