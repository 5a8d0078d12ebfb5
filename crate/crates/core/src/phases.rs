//! Segmentation of a reward trace into exploration, competition and
//! convergence phases.
//!
//! A window of `width` consecutive values slides over the trace. Exploration
//! lasts while the window's mean slope exceeds `slope_frac * range` per step.
//! Convergence starts at the first window after which every window has
//! variance below `(spread_frac * range)^2`. Anything in between is
//! competition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    Exploration,
    Competition,
    Convergence,
}

/// Inclusive index range `[start, end]` of the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub label: PhaseLabel,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseParams {
    pub width: usize,
    pub slope_frac: f64,
    pub spread_frac: f64,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self {
            width: 5,
            slope_frac: 0.01,
            spread_frac: 0.005,
        }
    }
}

pub fn detect_phases(series: &[f64]) -> Result<Vec<Phase>> {
    detect_phases_with(series, PhaseParams::default())
}

pub fn detect_phases_with(series: &[f64], params: PhaseParams) -> Result<Vec<Phase>> {
    let m = series.len();
    if m < 3 {
        return Err(Error::TooFewRecords(m));
    }
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range <= 0.0 {
        return Ok(vec![Phase {
            label: PhaseLabel::Convergence,
            start: 0,
            end: m - 1,
        }]);
    }
    let width = params.width.clamp(2, m);
    let slope_min = params.slope_frac * range;
    let var_max = (params.spread_frac * range).powi(2);
    let last_start = m - width;

    let slope = |i: usize| (series[i + width - 1] - series[i]) / (width - 1) as f64;
    let variance = |i: usize| {
        let w = &series[i..i + width];
        let mean = w.iter().sum::<f64>() / width as f64;
        w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / width as f64
    };

    let mut converge = m;
    for i in (0..=last_start).rev() {
        if variance(i) < var_max {
            converge = i;
        } else {
            break;
        }
    }
    let explore_end = (0..=last_start)
        .find(|&i| slope(i) <= slope_min)
        .unwrap_or(m)
        .min(converge);

    let mut phases = Vec::new();
    if explore_end > 0 {
        phases.push(Phase {
            label: PhaseLabel::Exploration,
            start: 0,
            end: explore_end - 1,
        });
    }
    if converge > explore_end {
        phases.push(Phase {
            label: PhaseLabel::Competition,
            start: explore_end,
            end: converge - 1,
        });
    }
    if converge < m {
        phases.push(Phase {
            label: PhaseLabel::Convergence,
            start: converge,
            end: m - 1,
        });
    }
    Ok(phases)
}
