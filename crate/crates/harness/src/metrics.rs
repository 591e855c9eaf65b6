//! Tracking metrics over run logs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log::{EventKind, LogRow, RunLog};

/// Default approach window excluded from the windowed mean, s.
pub const DEFAULT_SKIP: f64 = 10.0;
/// Time the error must stay below the threshold to count as recovered, s.
pub const RECOVERY_HOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no samples after the skip window")]
    EmptyWindow,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean planar distance after the skip window, m.
    pub mean_distance: f64,
    /// Mean planar distance over the whole run, m.
    pub mean_distance_full: f64,
    pub max_distance: f64,
    pub recovery_time: Option<f64>,
    pub slack_events: usize,
    pub lifting_violations: usize,
    pub solver_failures: usize,
    /// 95th percentile of wall-clock QP time, s.
    pub solve_time_p95: f64,
    pub samples: usize,
}

/// Arithmetic mean of the object-to-reference distance for `t ≥ skip`.
pub fn mean_distance(rows: &[LogRow], skip: f64) -> Result<f64, MetricsError> {
    let (sum, count) = rows
        .iter()
        .filter(|r| r.t >= skip - 1e-9)
        .fold((0.0, 0usize), |(s, c), r| (s + r.distance, c + 1));
    if count == 0 {
        return Err(MetricsError::EmptyWindow);
    }
    Ok(sum / count as f64)
}

/// Time from `t_end` until the distance drops below `threshold` and stays there
/// for at least [`RECOVERY_HOLD`]. `None` if the log ends first.
pub fn recovery_time(rows: &[LogRow], t_end: f64, threshold: f64) -> Option<f64> {
    let mut below_since: Option<f64> = None;
    for r in rows.iter().filter(|r| r.t >= t_end - 1e-9) {
        if r.distance < threshold {
            let start = *below_since.get_or_insert(r.t);
            if r.t - start >= RECOVERY_HOLD - 1e-9 {
                return Some((start - t_end).max(0.0));
            }
        } else {
            below_since = None;
        }
    }
    None
}

/// Nearest-rank percentile, `q` in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Metrics for one run. The recovery threshold is the mean distance between the
/// skip window and the first disturbance; without a disturbance no recovery is reported.
pub fn compute_metrics(log: &RunLog, skip: f64) -> Result<Metrics, MetricsError> {
    let rows = &log.rows;
    let mean_full = mean_distance(rows, f64::NEG_INFINITY)?;
    let mean = mean_distance(rows, skip).unwrap_or(mean_full);
    let recovery = log.disturbances.first().and_then(|&(t0, t1)| {
        let pre: Vec<LogRow> = rows.iter().filter(|r| r.t < t0).cloned().collect();
        let threshold = mean_distance(&pre, skip.min(t0 / 2.0)).ok()?;
        recovery_time(rows, t1, threshold)
    });
    Ok(Metrics {
        mean_distance: mean,
        mean_distance_full: mean_full,
        max_distance: rows.iter().map(|r| r.distance).fold(0.0, f64::max),
        recovery_time: recovery,
        slack_events: log.count(EventKind::Slack),
        lifting_violations: log.count(EventKind::Lifting),
        solver_failures: log.count(EventKind::SolverFailure),
        solve_time_p95: percentile(&log.solve_times, 0.95),
        samples: rows.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub n_samples: usize,
}

/// Sample mean and (n − 1)-denominator standard deviation.
pub fn fit_normal(samples: &[f64]) -> Result<NormalFit, MetricsError> {
    let n = samples.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    let mu = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(NormalFit { mu, sigma: var.sqrt(), n_samples: n })
}
