use faer::Mat;
use num_complex::Complex64;

use super::{residual_norm, EigenPair};
use crate::error::{Error, Result};
use crate::model::{LinearOperator, SparseOperator};

/// Default largest dimension accepted by [`dense_eig`].
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Sorts by `Re` ascending, then `Im` ascending.
pub fn spectral_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Full spectrum and right eigenvectors of a general complex matrix.
pub fn dense_eig(a: &SparseOperator, cap: usize) -> Result<Vec<EigenPair>> {
    let n = a.dim();
    if n > cap {
        return Err(Error::Capacity {
            requested: n as u128,
            capacity: cap as u128,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut m = Mat::<Complex64>::zeros(n, n);
    for (r, c, v) in a.entries() {
        m[(r, c)] = v;
    }
    let eig = m
        .eigen()
        .map_err(|e| Error::Solver(format!("dense eigendecomposition of dimension {n} failed: {e:?}")))?;
    let values = eig.S().column_vector();
    let vectors = eig.U();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| spectral_order(&values[i], &values[j]));

    let mut out = Vec::with_capacity(n);
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    for i in order {
        let mut v: Vec<Complex64> = (0..n).map(|r| vectors[(r, i)]).collect();
        normalize(&mut v);
        let energy = values[i];
        a.apply(&v, &mut ax);
        let residual = residual_norm(&ax, &v, energy);
        out.push(EigenPair {
            energy,
            vector: v,
            residual,
        });
    }
    Ok(out)
}

pub(crate) fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}
