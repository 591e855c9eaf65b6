//! Paired multi/single comparison over randomized trajectories.

use std::collections::BTreeMap;

use cotow_core::mission::{random_plan, MissionPlan, RandomPlanSpec};
use cotow_core::strategy::StrategyRegistry;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ExperimentConfig};
use crate::metrics::{compute_metrics, fit_normal, Metrics, NormalFit};
use crate::runner::run_experiment;

pub const DEFAULT_PAIRS: usize = 30;
pub const MODES: [&str; 2] = ["multi", "single"];

/// Trajectory `id` of the stream seeded by `seed`. Each id has its own ChaCha
/// stream, so a plan never depends on how many others were drawn.
pub fn campaign_plan(seed: u64, id: usize, spec: &RandomPlanSpec) -> MissionPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    random_plan(&mut rng, spec, &format!("random-{id:03}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub trajectory: usize,
    pub mode: String,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub trajectory: usize,
    pub plan: String,
    pub multi: Option<f64>,
    pub single: Option<f64>,
}

impl PairResult {
    /// `None` unless both runs finished.
    pub fn multi_wins(&self) -> Option<bool> {
        Some(self.multi? < self.single?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub seed: u64,
    pub pairs: Vec<PairResult>,
    /// One fit per mode over its successful runs; absent with fewer than two.
    pub fits: BTreeMap<String, Option<NormalFit>>,
    pub multi_wins: usize,
    pub complete_pairs: usize,
    pub failures: Vec<RunOutcome>,
}

impl CampaignReport {
    pub fn win_rate(&self) -> f64 {
        if self.complete_pairs == 0 {
            0.0
        } else {
            self.multi_wins as f64 / self.complete_pairs as f64
        }
    }

    pub fn fit(&self, mode: &str) -> Option<NormalFit> {
        self.fits.get(mode).copied().flatten()
    }

    /// 1 − μ_multi / μ_single.
    pub fn relative_improvement(&self) -> Option<f64> {
        Some(1.0 - self.fit("multi")?.mu / self.fit("single")?.mu)
    }
}

/// Runs every (trajectory, mode) pair in parallel. Run failures are recorded,
/// not raised; only an unusable base config is an error.
pub fn run_campaign(base: &ExperimentConfig, pairs: usize) -> Result<CampaignReport, ConfigError> {
    let strategies = StrategyRegistry::default();
    let spec = base.random_plan_spec();
    let skip = base.skip();
    let mut jobs = Vec::with_capacity(2 * pairs);
    for id in 0..pairs {
        let plan = campaign_plan(base.seed, id, &spec);
        for mode in MODES {
            let mut cfg = base.clone();
            cfg.duration = None;
            let setup = cfg.setup_for(plan.clone(), strategies.get(mode).map_err(|e| ConfigError::Invalid(e.to_string()))?)?;
            jobs.push((id, mode, setup));
        }
    }

    let mut outcomes: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|(id, mode, setup)| {
            let result = run_experiment(setup)
                .map_err(|e| e.to_string())
                .and_then(|log| compute_metrics(&log, skip).map_err(|e| e.to_string()));
            let (metrics, error) = match result {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e)),
            };
            RunOutcome { trajectory: *id, mode: (*mode).to_owned(), metrics, error }
        })
        .collect();
    outcomes.sort_by(|a, b| (a.trajectory, &a.mode).cmp(&(b.trajectory, &b.mode)));

    let mean_of = |id: usize, mode: &str| {
        outcomes
            .iter()
            .find(|o| o.trajectory == id && o.mode == mode)
            .and_then(|o| o.metrics.as_ref())
            .map(|m| m.mean_distance)
    };
    let pair_results: Vec<PairResult> = (0..pairs)
        .map(|id| PairResult {
            trajectory: id,
            plan: format!("random-{id:03}"),
            multi: mean_of(id, "multi"),
            single: mean_of(id, "single"),
        })
        .collect();
    let fits = MODES
        .iter()
        .map(|&mode| {
            let samples: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.mode == mode)
                .filter_map(|o| o.metrics.as_ref().map(|m| m.mean_distance))
                .collect();
            (mode.to_owned(), fit_normal(&samples).ok())
        })
        .collect();
    let decided: Vec<bool> = pair_results.iter().filter_map(PairResult::multi_wins).collect();
    Ok(CampaignReport {
        seed: base.seed,
        multi_wins: decided.iter().filter(|w| **w).count(),
        complete_pairs: decided.len(),
        pairs: pair_results,
        fits,
        failures: outcomes.into_iter().filter(|o| o.error.is_some()).collect(),
    })
}
