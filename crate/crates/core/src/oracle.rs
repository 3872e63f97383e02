//! Exhaustive ground truth: every split index is evaluated and the Pareto set
//! is found by pairwise dominance over the feasible ones.

use serde::{Deserialize, Serialize};

use crate::cost::{self, CostBreakdown};
use crate::error::{Error, Result};
use crate::nsga2::{self, Individual, ParetoSet};
use crate::problem::{self, ObjectiveVector, ProblemInstance, SplitCandidate};
use crate::topsis::{self, Normalization, TopsisChoice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub candidate: SplitCandidate,
    pub objectives: ObjectiveVector,
    pub costs: CostBreakdown,
    pub feasible: bool,
}

/// One entry per split index in `[1, L - 1]`, in order.
pub fn enumerate(instance: &ProblemInstance) -> Result<Vec<SweepEntry>> {
    instance.validate()?;
    let total = instance.total_layers();
    instance
        .split_range()
        .map(|l1| {
            let candidate = SplitCandidate::at(l1, total);
            Ok(SweepEntry {
                candidate,
                objectives: problem::evaluate(instance, candidate)?,
                costs: cost::cost_breakdown(instance, l1)?,
                feasible: problem::feasible(instance, candidate).is_feasible(),
            })
        })
        .collect()
}

/// Positions in `entries` of the feasible entries no other feasible entry dominates.
pub fn pareto_positions(entries: &[SweepEntry]) -> Vec<usize> {
    let feasible: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].feasible).collect();
    feasible
        .iter()
        .copied()
        .filter(|&i| {
            !feasible
                .iter()
                .any(|&j| entries[j].objectives.dominates(&entries[i].objectives))
        })
        .collect()
}

/// The exact Pareto set and the selection made over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSelection {
    pub entries: Vec<SweepEntry>,
    pub pareto: ParetoSet,
    pub choice: TopsisChoice,
}

pub fn true_selection(instance: &ProblemInstance, method: Normalization) -> Result<OracleSelection> {
    let entries = enumerate(instance)?;
    let positions = pareto_positions(&entries);
    if positions.is_empty() {
        return Err(Error::NoFeasibleSolution);
    }
    let points: Vec<[f64; 3]> = positions
        .iter()
        .map(|&i| entries[i].objectives.as_array())
        .collect();
    let all: Vec<usize> = (0..points.len()).collect();
    let crowding = nsga2::crowding_distance(&points, &all);
    let pareto = ParetoSet::from_members(positions.iter().zip(crowding).map(|(&i, c)| Individual {
        candidate: entries[i].candidate,
        objectives: entries[i].objectives,
        rank: 0,
        crowding: c,
        feasible: true,
    }));
    let choice = topsis::select_best(&pareto, instance, method)?;
    Ok(OracleSelection { entries, pareto, choice })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{bundled, LayerSpec, ModelProfile, TensorShape};

    #[test]
    fn entry_counts() {
        let alex = ProblemInstance::reference(bundled("alexnet").unwrap());
        assert_eq!(enumerate(&alex).unwrap().len(), 20);
        let vgg = ProblemInstance::reference(bundled("vgg16").unwrap());
        let entries = enumerate(&vgg).unwrap();
        assert_eq!(entries.len(), 38);
        for e in &entries {
            assert_eq!(e.objectives, problem::evaluate(&vgg, e.candidate).unwrap());
        }
    }

    #[test]
    fn two_layer_toy() {
        let model = ModelProfile::new(
            "toy2",
            TensorShape::new(vec![3, 4, 4]).unwrap(),
            vec![LayerSpec::conv2d(3, 2, 3, 1, 1), LayerSpec::relu()],
            4,
        )
        .unwrap();
        let sel = true_selection(&ProblemInstance::reference(model), Normalization::Vector).unwrap();
        assert_eq!(sel.pareto.split_indices(), vec![1]);
        assert_eq!(sel.choice.individual.l1(), 1);
        assert_eq!(sel.choice.distance, 0.0);
    }

    #[test]
    fn increasing_objectives_give_first_split() {
        // Every layer widens the activation, so all three objectives grow with l1.
        let model = ModelProfile::new(
            "widening",
            TensorShape::new(vec![1, 8, 8]).unwrap(),
            vec![
                LayerSpec::conv2d(1, 2, 3, 1, 1),
                LayerSpec::conv2d(2, 4, 3, 1, 1),
                LayerSpec::conv2d(4, 8, 3, 1, 1),
                LayerSpec::conv2d(8, 16, 3, 1, 1),
            ],
            4,
        )
        .unwrap();
        let mut inst = ProblemInstance::reference(model);
        // a slow client makes client time dominate the server time it saves
        inst.client.clock_hz = 1e3;
        let sel = true_selection(&inst, Normalization::Vector).unwrap();
        assert_eq!(sel.pareto.split_indices(), vec![1]);
    }

    #[test]
    fn nothing_feasible() {
        let mut inst = ProblemInstance::reference(bundled("alexnet").unwrap());
        inst.memory_cap = 1;
        assert!(matches!(
            true_selection(&inst, Normalization::Vector),
            Err(Error::NoFeasibleSolution)
        ));
    }
}
