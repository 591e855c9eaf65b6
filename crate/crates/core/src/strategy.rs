//! Towing strategies, selected by name.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use cotow_qp::INFTY;

use crate::dynamics::layout::{ETA_U, U_U};
use crate::dynamics::CoupledLinearModel;
use crate::mpc::MpcConfig;
use crate::plant::PlantParams;
use crate::CoreError;

/// How the robots share the tow. Strategies reshape the controller model and
/// configuration and say whether the UAV tether is attached in the plant.
pub trait TowStrategy: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn uses_uav(&self) -> bool;

    fn adapt_model(&self, _model: &mut CoupledLinearModel) {}

    fn adapt_config(&self, _cfg: &mut MpcConfig) {}

    fn adapt_plant(&self, plant: &mut PlantParams) {
        plant.uav_attached = self.uses_uav();
    }
}

/// USV and UAV tow together.
#[derive(Debug, Clone, Copy, Default)]
pub struct MultiRobot;

impl TowStrategy for MultiRobot {
    fn name(&self) -> &'static str {
        "multi"
    }

    fn uses_uav(&self) -> bool {
        true
    }
}

/// USV alone; the UAV is detached and its model rows are frozen.
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleRobot;

impl TowStrategy for SingleRobot {
    fn name(&self) -> &'static str {
        "single"
    }

    fn uses_uav(&self) -> bool {
        false
    }

    fn adapt_model(&self, model: &mut CoupledLinearModel) {
        for i in ETA_U {
            model.a.row_mut(i).fill(0.0);
            model.b.row_mut(i).fill(0.0);
        }
        for j in U_U {
            model.b.column_mut(j).fill(0.0);
        }
    }

    fn adapt_config(&self, cfg: &mut MpcConfig) {
        for i in ETA_U {
            cfg.q[i] = 0.0;
            cfg.s[i] = 0.0;
            cfg.x_min[i] = -INFTY;
            cfg.x_max[i] = INFTY;
        }
        for j in U_U {
            cfg.u_min[j] = 0.0;
            cfg.u_max[j] = 0.0;
        }
    }
}

/// Name-indexed strategy table.
#[derive(Debug, Clone)]
pub struct StrategyRegistry {
    entries: BTreeMap<&'static str, Arc<dyn TowStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, strategy: Arc<dyn TowStrategy>) {
        self.entries.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TowStrategy>, CoreError> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| CoreError::Unknown {
                kind: "strategy",
                name: name.to_owned(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(MultiRobot));
        r.register(Arc::new(SingleRobot));
        r
    }
}
