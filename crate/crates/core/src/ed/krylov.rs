//! Implicitly restarted Arnoldi for the eigenvalue of smallest real part.
//!
//! The iteration runs on `B = σI − A` and keeps the Ritz values of largest
//! real part, so the wanted end of the spectrum of `A` is the dominant end of
//! `B`. Unwanted Ritz values are used as exact shifts at each restart.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::normalize;
use super::{residual_norm, EigenPair};
use crate::error::{Error, Result};
use crate::model::LinearOperator;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrylovConfig {
    /// Arnoldi basis size `m`.
    pub subspace: usize,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
    pub max_restarts: usize,
    /// Convergence threshold on `‖Ax − θx‖ / max(1, |θ|)`.
    pub tolerance: f64,
    /// Real shift `σ` in `B = σI − A`; `None` picks a Gershgorin bound.
    pub shift: Option<f64>,
    pub seed: u64,
    /// Rerun from a perturbed start and compare energies.
    pub verify: bool,
    pub verify_tolerance: f64,
    /// Two Ritz values closer than this in `Re` are flagged as degenerate.
    pub degeneracy_tolerance: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig {
            subspace: 32,
            keep: 12,
            max_restarts: 1000,
            tolerance: 1e-11,
            shift: None,
            seed: 0x5eed,
            verify: true,
            verify_tolerance: 1e-8,
            degeneracy_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KrylovDiagnostics {
    pub matvecs: usize,
    pub restarts: usize,
    pub residual: f64,
    /// Gap in `Re` to the next Ritz value, when one exists.
    pub ritz_gap: Option<f64>,
    pub degenerate: bool,
    /// Energy difference to the verification rerun.
    pub verification: Option<f64>,
}

struct Shifted<'a> {
    op: &'a dyn LinearOperator,
    sigma: f64,
    matvecs: usize,
}

impl Shifted<'_> {
    fn apply(&mut self, x: &[Complex64], y: &mut [Complex64]) {
        self.op.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.sigma * xi - *yi;
        }
        self.matvecs += 1;
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Removes the components of `w` along the orthonormal columns `v`, with one
/// round of DGKS reorthogonalisation when cancellation is severe. Returns the
/// accumulated coefficients.
fn orthogonalize(v: &[Vec<Complex64>], w: &mut [Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![ZERO; v.len()];
    let mut before = norm(w);
    for _ in 0..2 {
        let h: Vec<Complex64> = v.iter().map(|vi| dot(vi, w)).collect();
        for (vi, &hi) in v.iter().zip(&h) {
            for (wk, vk) in w.iter_mut().zip(vi) {
                *wk -= hi * vk;
            }
        }
        for (c, hi) in coeffs.iter_mut().zip(h) {
            *c += hi;
        }
        let after = norm(w);
        if after > 0.717 * before {
            break;
        }
        before = after;
    }
    coeffs
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Arnoldi factorisation `B V = V H + f e_mᵀ`.
struct Factorization {
    v: Vec<Vec<Complex64>>,
    /// Square Hessenberg, row-major, `m × m`.
    h: Vec<Vec<Complex64>>,
    f: Vec<Complex64>,
    /// Largest `‖Bv‖` seen; sets the breakdown threshold.
    scale: f64,
}

impl Factorization {
    fn extend(&mut self, b: &mut Shifted<'_>, m: usize, rng: &mut ChaCha8Rng) {
        let n = self.f.len();
        let k = self.v.len();
        for row in self.h.iter_mut() {
            row.resize(m, ZERO);
        }
        self.h.resize(m, vec![ZERO; m]);
        let mut w = vec![ZERO; n];
        for j in k..m {
            let beta = norm(&self.f);
            let mut next = std::mem::take(&mut self.f);
            if j == 0 || beta > 1e-13 * self.scale {
                for x in next.iter_mut() {
                    *x /= beta;
                }
                if j > 0 {
                    self.h[j][j - 1] = Complex64::new(beta, 0.0);
                }
            } else {
                // Invariant subspace: continue with a fresh orthogonal direction.
                next = random_vector(rng, n);
                orthogonalize(&self.v, &mut next);
                normalize(&mut next);
                self.h[j][j - 1] = ZERO;
            }
            self.v.push(next);
            b.apply(&self.v[j], &mut w);
            self.scale = self.scale.max(norm(&w));
            let coeffs = orthogonalize(&self.v, &mut w);
            for (i, c) in coeffs.into_iter().enumerate() {
                self.h[i][j] = c;
            }
            self.f = w.clone();
        }
    }

    /// Applies the shifted QR steps and truncates to `k` columns.
    fn restart(&mut self, shifts: &[Complex64], k: usize) {
        let m = self.v.len();
        let mut q = identity(m);
        for &mu in shifts {
            qr_step(&mut self.h, &mut q, mu);
        }
        let beta_k = self.h[k][k - 1];
        let sigma = q[m - 1][k - 1];
        let n = self.f.len();
        let combine = |col: usize| -> Vec<Complex64> {
            let mut out = vec![ZERO; n];
            for (i, vi) in self.v.iter().enumerate() {
                let c = q[i][col];
                if c != ZERO {
                    for (o, x) in out.iter_mut().zip(vi) {
                        *o += c * x;
                    }
                }
            }
            out
        };
        let new_v: Vec<Vec<Complex64>> = (0..k).map(combine).collect();
        let vk = combine(k);
        let mut f = vec![ZERO; n];
        for ((fi, a), b) in f.iter_mut().zip(&vk).zip(&self.f) {
            *fi = a * beta_k + b * sigma;
        }
        self.v = new_v;
        self.f = f;
        self.h.truncate(k);
        for row in self.h.iter_mut() {
            row.truncate(k);
        }
    }
}

fn identity(m: usize) -> Vec<Vec<Complex64>> {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { ZERO }).collect())
        .collect()
}

/// One explicitly shifted QR step `H − μI = QR`, `H ← RQ + μI`, on an upper
/// Hessenberg matrix, accumulating `Q` into `acc`.
fn qr_step(h: &mut [Vec<Complex64>], acc: &mut [Vec<Complex64>], mu: Complex64) {
    let m = h.len();
    for (i, row) in h.iter_mut().enumerate() {
        row[i] -= mu;
    }
    let mut rotations = Vec::with_capacity(m.saturating_sub(1));
    for i in 0..m.saturating_sub(1) {
        let a = h[i][i];
        let b = h[i + 1][i];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (Complex64::new(1.0, 0.0), ZERO)
        } else {
            (a / r, b / r)
        };
        for col in i..m {
            let x = h[i][col];
            let y = h[i + 1][col];
            h[i][col] = c.conj() * x + s.conj() * y;
            h[i + 1][col] = -s * x + c * y;
        }
        rotations.push((c, s));
    }
    for (i, &(c, s)) in rotations.iter().enumerate() {
        let rows = (i + 2).min(m);
        for row in h.iter_mut().take(rows) {
            let x = row[i];
            let y = row[i + 1];
            row[i] = c * x + s * y;
            row[i + 1] = -s.conj() * x + c.conj() * y;
        }
        for row in acc.iter_mut() {
            let x = row[i];
            let y = row[i + 1];
            row[i] = c * x + s * y;
            row[i + 1] = -s.conj() * x + c.conj() * y;
        }
    }
    for (i, row) in h.iter_mut().enumerate() {
        row[i] += mu;
    }
}

/// Ritz pairs of the Hessenberg matrix, ordered by `Re` descending.
fn ritz(h: &[Vec<Complex64>]) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
    let m = h.len();
    let mat = Mat::<Complex64>::from_fn(m, m, |i, j| h[i][j]);
    let eig = mat
        .eigen()
        .map_err(|e| Error::Solver(format!("Hessenberg eigenproblem failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re).then(s[a].im.total_cmp(&s[b].im)));
    let values = order.iter().map(|&i| s[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut y: Vec<Complex64> = (0..m).map(|r| u[(r, i)]).collect();
            normalize(&mut y);
            y
        })
        .collect();
    Ok((values, vectors))
}

/// Single IRAM run from a given start vector.
fn iram(
    op: &dyn LinearOperator,
    sigma: f64,
    start: Vec<Complex64>,
    config: &KrylovConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(EigenPair, KrylovDiagnostics)> {
    let n = op.dim();
    let m = config.subspace.min(n).max(1);
    let k = config.keep.clamp(1, m.saturating_sub(1).max(1));
    let mut b = Shifted { op, sigma, matvecs: 0 };
    let mut fact = Factorization {
        v: Vec::with_capacity(m),
        h: Vec::new(),
        f: start,
        scale: 0.0,
    };
    let mut restarts = 0;
    let mut best = f64::INFINITY;
    loop {
        fact.extend(&mut b, m, rng);
        let (theta, y) = ritz(&fact.h)?;
        let beta = norm(&fact.f);
        let res = beta * y[0][m - 1].norm();
        let scale = theta[0].norm().max(1.0);
        best = best.min(res / scale);
        if res <= config.tolerance * scale || m == n {
            let mut x = vec![ZERO; n];
            for (vi, &yi) in fact.v.iter().zip(&y[0]) {
                for (xk, vk) in x.iter_mut().zip(vi) {
                    *xk += yi * vk;
                }
            }
            normalize(&mut x);
            let energy = Complex64::new(sigma, 0.0) - theta[0];
            let mut ax = vec![ZERO; n];
            op.apply(&x, &mut ax);
            let residual = residual_norm(&ax, &x, energy);
            let ritz_gap = theta.get(1).map(|t| theta[0].re - t.re);
            let diagnostics = KrylovDiagnostics {
                matvecs: b.matvecs + 1,
                restarts,
                residual,
                ritz_gap,
                degenerate: ritz_gap.is_some_and(|g| g < config.degeneracy_tolerance),
                verification: None,
            };
            return Ok((
                EigenPair {
                    energy,
                    vector: x,
                    residual,
                },
                diagnostics,
            ));
        }
        if restarts >= config.max_restarts {
            return Err(Error::NoConvergence {
                restarts,
                residual: best,
            });
        }
        restarts += 1;
        fact.restart(&theta[k..], k);
    }
}

/// The eigenpair of `op` with the smallest real part.
///
/// `start` seeds the iteration (warm start); otherwise a seeded random vector
/// is used. With `verify` set, a second run from a perturbed start must agree
/// in energy within `verify_tolerance`. On disagreement the pair is solved
/// again with a doubled subspace, started from the lower of the two, up to
/// `VERIFY_RETRIES` times.
pub fn krylov_ground(
    op: &dyn LinearOperator,
    config: &KrylovConfig,
    start: Option<&[Complex64]>,
) -> Result<(EigenPair, KrylovDiagnostics)> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::validation("krylov_ground on an empty operator"));
    }
    if let Some(s) = start {
        if s.len() != n {
            return Err(Error::DimensionMismatch(s.len(), n));
        }
    }
    // A bare operator exposes no entries to bound; callers that can should
    // pass a Gershgorin shift.
    let sigma = config.shift.unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut v0 = match start {
        Some(s) => s.to_vec(),
        None => random_vector(&mut rng, n),
    };
    if normalize(&mut v0) == 0.0 {
        v0 = random_vector(&mut rng, n);
        normalize(&mut v0);
    }
    let mut config = *config;
    let mut matvecs = 0;
    let mut attempt = 0;
    loop {
        let (pair, mut diag) = iram(op, sigma, v0.clone(), &config, &mut rng)?;
        diag.matvecs += matvecs;
        if !config.verify {
            return Ok((pair, diag));
        }
        let noise = random_vector(&mut rng, n);
        let mut v1: Vec<Complex64> = v0.iter().zip(&noise).map(|(a, b)| a + 0.3 * b).collect();
        normalize(&mut v1);
        let (second, d2) = iram(op, sigma, v1, &config, &mut rng)?;
        let difference = (second.energy - pair.energy).norm();
        diag.matvecs += d2.matvecs;
        diag.verification = Some(difference);
        diag.degenerate |= d2.degenerate;
        // A degenerate target has no preferred eigenvector; the flag says so.
        if difference <= config.verify_tolerance || diag.degenerate {
            return Ok((pair, diag));
        }
        if attempt == VERIFY_RETRIES || config.subspace * 2 > n {
            return Err(Error::Verification {
                first: pair.energy,
                second: second.energy,
                difference,
            });
        }
        log::debug!(
            "krylov runs disagree ({} vs {}); retrying with subspace {}",
            pair.energy,
            second.energy,
            2 * config.subspace
        );
        attempt += 1;
        matvecs = diag.matvecs;
        v0 = if second.energy.re < pair.energy.re { second.vector } else { pair.vector };
        config.subspace *= 2;
        config.keep *= 2;
    }
}

const VERIFY_RETRIES: usize = 2;
