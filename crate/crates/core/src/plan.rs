//! End-to-end planning: NSGA-II search followed by ideal-point selection.

use serde::{Deserialize, Serialize};

use crate::cost::{self, CostBreakdown};
use crate::error::Result;
use crate::nsga2::{self, GaConfig, Individual, ParetoSet};
use crate::problem::ProblemInstance;
use crate::topsis::{self, Normalization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub model: String,
    pub chosen: Individual,
    pub distance: f64,
    pub costs: CostBreakdown,
    pub pareto_set: ParetoSet,
    pub ga_config: GaConfig,
    pub normalization: Normalization,
}

impl SplitPlan {
    pub fn chosen_l1(&self) -> usize {
        self.chosen.candidate.l1
    }

    pub fn chosen_l2(&self) -> usize {
        self.chosen.candidate.l2
    }
}

pub fn plan_split(
    instance: &ProblemInstance,
    config: &GaConfig,
    normalization: Normalization,
) -> Result<SplitPlan> {
    let pareto_set = nsga2::evolve(instance, config)?;
    let choice = topsis::select_best(&pareto_set, instance, normalization)?;
    let costs = cost::cost_breakdown(instance, choice.individual.candidate.l1)?;
    Ok(SplitPlan {
        model: instance.model.name().to_string(),
        chosen: choice.individual,
        distance: choice.distance,
        costs,
        pareto_set,
        ga_config: config.clone(),
        normalization,
    })
}
