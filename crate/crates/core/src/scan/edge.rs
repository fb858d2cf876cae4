use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{Parameterization, ZeroSet};
use crate::error::{Error, Result};

pub const DEFAULT_EDGE_THRESHOLD: f64 = 2.0;

/// Angular gap statistics of zeros on a circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub zero_count: usize,
    /// Gaps between angularly consecutive zeros, wrap-around gap last.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    /// `max_gap / (2π / zero_count)`; 1 for evenly spaced zeros.
    pub uniformity_ratio: f64,
    pub threshold: f64,
    pub edge_detected: bool,
}

pub fn edge_report(zeros: &ZeroSet, threshold: f64) -> Result<EdgeReport> {
    if !matches!(zeros.parameterization, Parameterization::Circle { .. }) {
        return Err(Error::validation("edge report needs a circle zero set"));
    }
    let mut thetas: Vec<f64> = zeros
        .zeros
        .iter()
        .map(|z| z.theta.unwrap_or_else(|| z.h.arg().rem_euclid(TAU)))
        .collect();
    if thetas.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "edge report needs at least 4 zeros, got {}",
            thetas.len()
        )));
    }
    thetas.sort_by(f64::total_cmp);
    let n = thetas.len();
    let mut gaps: Vec<f64> = thetas.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(thetas[0] + TAU - thetas[n - 1]);
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let uniformity_ratio = max_gap / (TAU / n as f64);
    Ok(EdgeReport {
        zero_count: n,
        gaps,
        max_gap,
        uniformity_ratio,
        threshold,
        edge_detected: uniformity_ratio > threshold,
    })
}
