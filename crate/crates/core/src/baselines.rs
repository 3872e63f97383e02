//! Competing split strategies: latency-only, energy-only, everything on the
//! client, everything on the server and a uniformly random split.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{self, CostBreakdown, EnergyBreakdown, LatencyBreakdown};
use crate::error::{Error, Result};
use crate::problem::{self, ObjectiveVector, ProblemInstance, SplitCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BaselineKind {
    /// Minimum end-to-end latency.
    Lbo,
    /// Minimum client energy.
    Ebo,
    /// Whole model on the client.
    Cos,
    /// Whole model on the server.
    Coc,
    /// Uniformly random split.
    Rs,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [Self::Lbo, Self::Ebo, Self::Cos, Self::Coc, Self::Rs];

    pub fn label(self) -> &'static str {
        match self {
            Self::Lbo => "LBO",
            Self::Ebo => "EBO",
            Self::Cos => "COS",
            Self::Coc => "COC",
            Self::Rs => "RS",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown baseline `{s}`")))
    }
}

/// Split chosen by a baseline with its objective values and cost breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub kind: BaselineKind,
    pub candidate: SplitCandidate,
    pub objectives: ObjectiveVector,
    pub costs: CostBreakdown,
    /// False for the all-client and all-server assignments, which leave one side empty.
    pub in_feasible_set: bool,
}

fn split_outcome(kind: BaselineKind, instance: &ProblemInstance, l1: usize) -> Result<BaselineOutcome> {
    let candidate = SplitCandidate::at(l1, instance.total_layers());
    Ok(BaselineOutcome {
        kind,
        candidate,
        objectives: problem::evaluate(instance, candidate)?,
        costs: cost::cost_breakdown(instance, l1)?,
        in_feasible_set: problem::feasible(instance, candidate).is_feasible(),
    })
}

fn argmin_split(
    kind: BaselineKind,
    instance: &ProblemInstance,
    key: impl Fn(&ObjectiveVector) -> f64,
) -> Result<BaselineOutcome> {
    let mut best: Option<(usize, f64)> = None;
    for l1 in instance.split_range() {
        let value = key(&problem::evaluate_split(instance, l1)?);
        if best.is_none_or(|(_, b)| value < b) {
            best = Some((l1, value));
        }
    }
    let (l1, _) = best.expect("split range is non-empty");
    split_outcome(kind, instance, l1)
}

fn all_on_client(instance: &ProblemInstance) -> Result<BaselineOutcome> {
    let model = &instance.model;
    let total = model.total_layers();
    let memory = model.client_memory(total)?;
    let latency = LatencyBreakdown {
        t_client: memory as f64 / instance.client.compute_rate(),
        t_upload: 0.0,
        t_server: 0.0,
        t_download: 0.0,
    };
    let energy = EnergyBreakdown {
        e_client: instance.client.power_mw()? * latency.t_client,
        e_upload: 0.0,
        e_download: 0.0,
    };
    Ok(whole_model_outcome(BaselineKind::Cos, SplitCandidate::new(total, 0), memory, latency, energy))
}

fn all_on_server(instance: &ProblemInstance) -> Result<BaselineOutcome> {
    let model = &instance.model;
    let total = model.total_layers();
    let net = &instance.network;
    // The raw input is uploaded in place of an intermediate activation.
    let latency = LatencyBreakdown {
        t_client: 0.0,
        t_upload: net.transfer_seconds(model.input_size_bits() as f64),
        t_server: model.server_memory(total)? as f64 / instance.server.compute_rate(),
        t_download: net.download_seconds(),
    };
    let energy = EnergyBreakdown {
        e_client: 0.0,
        e_upload: net.upload_power_mw() * latency.t_upload,
        e_download: net.download_power_mw() * latency.t_download,
    };
    Ok(whole_model_outcome(BaselineKind::Coc, SplitCandidate::new(0, total), 0, latency, energy))
}

fn whole_model_outcome(
    kind: BaselineKind,
    candidate: SplitCandidate,
    client_bytes: u64,
    latency: LatencyBreakdown,
    energy: EnergyBreakdown,
) -> BaselineOutcome {
    let costs = CostBreakdown::new(latency, energy);
    BaselineOutcome {
        kind,
        candidate,
        objectives: ObjectiveVector { f1: costs.t_total, f2: costs.e_total, f3: client_bytes as f64 },
        costs,
        in_feasible_set: false,
    }
}

/// Runs one baseline. `seed` is only used by [`BaselineKind::Rs`].
pub fn run_baseline(kind: BaselineKind, instance: &ProblemInstance, seed: u64) -> Result<BaselineOutcome> {
    instance.validate()?;
    match kind {
        BaselineKind::Lbo => argmin_split(kind, instance, |v| v.f1),
        BaselineKind::Ebo => argmin_split(kind, instance, |v| v.f2),
        BaselineKind::Cos => all_on_client(instance),
        BaselineKind::Coc => all_on_server(instance),
        BaselineKind::Rs => {
            let l1 = random_split(instance.total_layers(), seed);
            split_outcome(kind, instance, l1)
        }
    }
}

/// Uniform split index in `[1, total_layers - 1]` drawn from `seed`.
pub fn random_split(total_layers: usize, seed: u64) -> usize {
    ChaCha8Rng::seed_from_u64(seed).gen_range(1..total_layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::bundled;

    fn alexnet() -> ProblemInstance {
        ProblemInstance::reference(bundled("alexnet").unwrap())
    }

    #[test]
    fn whole_model_assignments() {
        let inst = alexnet();
        let cos = run_baseline(BaselineKind::Cos, &inst, 0).unwrap();
        assert_eq!(cos.candidate, SplitCandidate::new(21, 0));
        assert!(!cos.in_feasible_set);
        assert_eq!(cos.costs.t_upload + cos.costs.t_server + cos.costs.e_upload + cos.costs.e_download, 0.0);
        assert_eq!(cos.objectives.f3, inst.model.client_memory(21).unwrap() as f64);

        let coc = run_baseline(BaselineKind::Coc, &inst, 0).unwrap();
        assert_eq!(coc.candidate.l1, 0);
        assert_eq!(coc.objectives.f3, 0.0);
        assert_eq!(coc.costs.t_client, 0.0);
        assert_eq!(coc.costs.t_upload, 3.0 * 224.0 * 224.0 * 32.0 / 1e6 / 10.0);
    }

    #[test]
    fn optimizing_baselines_are_global_minima() {
        let inst = alexnet();
        let lbo = run_baseline(BaselineKind::Lbo, &inst, 0).unwrap();
        let ebo = run_baseline(BaselineKind::Ebo, &inst, 0).unwrap();
        for l1 in inst.split_range() {
            let v = problem::evaluate_split(&inst, l1).unwrap();
            assert!(lbo.objectives.f1 <= v.f1);
            assert!(ebo.objectives.f2 <= v.f2);
        }
    }

    #[test]
    fn random_split_is_seeded() {
        let inst = alexnet();
        let a = run_baseline(BaselineKind::Rs, &inst, 99).unwrap();
        let b = run_baseline(BaselineKind::Rs, &inst, 99).unwrap();
        assert_eq!(a, b);
        assert!((1..=20).contains(&a.candidate.l1));
    }

    #[test]
    fn labels_parse() {
        for kind in BaselineKind::ALL {
            assert_eq!(kind.label().to_lowercase().parse::<BaselineKind>().unwrap(), kind);
        }
    }
}
