//! The constrained three-objective split problem: latency, client energy and
//! client memory, all minimized.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::{self, DeviceProfile, DeviceSetup, NetworkProfile};
use crate::error::{Error, Result};
use crate::profile::ModelProfile;

/// Default per-application memory cap on the client, 1 GiB.
pub const DEFAULT_MEMORY_CAP: u64 = 1 << 30;

/// A model, the two devices, the link between them and the client memory cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub model: ModelProfile,
    pub client: DeviceProfile,
    pub server: DeviceProfile,
    pub network: NetworkProfile,
    /// Client memory cap in bytes.
    pub memory_cap: u64,
}

impl ProblemInstance {
    pub fn new(
        model: ModelProfile,
        client: DeviceProfile,
        server: DeviceProfile,
        network: NetworkProfile,
        memory_cap: u64,
    ) -> Result<Self> {
        let instance = Self { model, client, server, network, memory_cap };
        instance.validate()?;
        Ok(instance)
    }

    pub fn from_setup(model: ModelProfile, setup: DeviceSetup, memory_cap: u64) -> Result<Self> {
        Self::new(model, setup.client, setup.server, setup.network, memory_cap)
    }

    /// Reference handset, server and 10 Mbps link with a 1 GiB cap.
    pub fn reference(model: ModelProfile) -> Self {
        Self::from_setup(model, DeviceSetup::default(), DEFAULT_MEMORY_CAP)
            .expect("reference instance is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |e: Error| match e {
            Error::Validation(m) => Error::InvalidInstance(m),
            other => other,
        };
        if self.memory_cap == 0 {
            return Err(Error::InvalidInstance("memory cap must be > 0".into()));
        }
        if self.model.total_layers() < 2 {
            return Err(Error::InvalidInstance("model needs at least 2 layers".into()));
        }
        self.client.validate().map_err(invalid)?;
        self.server.validate().map_err(invalid)?;
        self.network.validate().map_err(invalid)?;
        self.client.power_mw()?;
        if self.network.tau_u_mbps > self.network.bandwidth_mbps {
            return Err(Error::InvalidInstance(
                "upload throughput exceeds bandwidth".into(),
            ));
        }
        if self.network.tau_d_mbps > self.network.bandwidth_mbps {
            return Err(Error::InvalidInstance(
                "download throughput exceeds bandwidth".into(),
            ));
        }
        Ok(())
    }

    pub fn total_layers(&self) -> usize {
        self.model.total_layers()
    }

    /// Smallest and largest split index with at least one layer on each side.
    pub fn split_range(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.total_layers() - 1
    }
}

/// Layers on the client (`l1`) and on the server (`l2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub l1: usize,
    pub l2: usize,
}

impl SplitCandidate {
    pub fn new(l1: usize, l2: usize) -> Self {
        Self { l1, l2 }
    }

    /// Split after layer `l1` of a model with `total_layers` layers.
    pub fn at(l1: usize, total_layers: usize) -> Self {
        Self { l1, l2: total_layers.saturating_sub(l1) }
    }
}

/// Objective values of one split: latency (s), client energy (mJ), client memory (bytes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl ObjectiveVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }

    /// Strict Pareto dominance (all objectives minimized).
    pub fn dominates(&self, other: &Self) -> bool {
        crate::nsga2::dominates(&self.as_array(), &other.as_array())
    }
}

/// The six problem constraints, numbered as in the problem statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    /// Client memory within the cap.
    MemoryCap = 1,
    /// `l1 + l2` equals the layer count.
    LayerSum = 2,
    /// `1 <= l1 <= L`.
    ClientLayers = 3,
    /// `1 <= l2 <= L`.
    ServerLayers = 4,
    /// Upload throughput within bandwidth.
    UploadThroughput = 5,
    /// Download throughput within bandwidth.
    DownloadThroughput = 6,
}

impl Constraint {
    pub fn index(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Result of a constraint check: empty `violations` means feasible.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Feasibility {
    pub violations: Vec<Constraint>,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn indices(&self) -> Vec<u8> {
        self.violations.iter().map(|c| c.index()).collect()
    }
}

/// Checks all six constraints for `candidate`.
pub fn feasible(instance: &ProblemInstance, candidate: SplitCandidate) -> Feasibility {
    let total = instance.total_layers();
    let SplitCandidate { l1, l2 } = candidate;
    let mut violations = Vec::new();

    // Memory of a prefix longer than the model is unbounded.
    let over_cap = instance
        .model
        .client_memory(l1)
        .map_or(true, |bytes| bytes > instance.memory_cap);
    if over_cap {
        violations.push(Constraint::MemoryCap);
    }
    if l1.checked_add(l2) != Some(total) {
        violations.push(Constraint::LayerSum);
    }
    if !(1..=total).contains(&l1) {
        violations.push(Constraint::ClientLayers);
    }
    if !(1..=total).contains(&l2) {
        violations.push(Constraint::ServerLayers);
    }
    if instance.network.tau_u_mbps > instance.network.bandwidth_mbps {
        violations.push(Constraint::UploadThroughput);
    }
    if instance.network.tau_d_mbps > instance.network.bandwidth_mbps {
        violations.push(Constraint::DownloadThroughput);
    }
    Feasibility { violations }
}

/// Objective vector of a split. The candidate must put at least one layer on
/// each side; the memory cap is not enforced here.
pub fn evaluate(instance: &ProblemInstance, candidate: SplitCandidate) -> Result<ObjectiveVector> {
    let total = instance.total_layers();
    if candidate.l1.checked_add(candidate.l2) != Some(total) {
        return Err(Error::InvalidInstance(format!(
            "split {}+{} does not cover {total} layers",
            candidate.l1, candidate.l2
        )));
    }
    let costs = cost::cost_breakdown(instance, candidate.l1)?;
    Ok(ObjectiveVector {
        f1: costs.t_total,
        f2: costs.e_total,
        f3: instance.model.client_memory(candidate.l1)? as f64,
    })
}

/// [`evaluate`] for a split after layer `l1`.
pub fn evaluate_split(instance: &ProblemInstance, l1: usize) -> Result<ObjectiveVector> {
    evaluate(instance, SplitCandidate::at(l1, instance.total_layers()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{bundled, LayerSpec, TensorShape};

    fn two_layer() -> ModelProfile {
        ModelProfile::new(
            "toy2",
            TensorShape::new(vec![3, 4, 4]).unwrap(),
            vec![LayerSpec::conv2d(3, 2, 3, 1, 1), LayerSpec::relu()],
            4,
        )
        .unwrap()
    }

    #[test]
    fn f3_is_client_memory() {
        let inst = ProblemInstance::reference(bundled("alexnet").unwrap());
        for l1 in inst.split_range() {
            let v = evaluate_split(&inst, l1).unwrap();
            assert_eq!(v.f3, inst.model.client_memory(l1).unwrap() as f64);
        }
    }

    #[test]
    fn two_layer_model_has_one_point() {
        let inst = ProblemInstance::reference(two_layer());
        assert_eq!(inst.split_range(), 1..=1);
        let v = evaluate_split(&inst, 1).unwrap();
        assert!(v.f1 > 0.0 && v.f2 > 0.0 && v.f3 > 0.0);
        assert!(feasible(&inst, SplitCandidate::at(1, 2)).is_feasible());
        assert!(evaluate_split(&inst, 2).is_err());
    }

    #[test]
    fn zero_client_layers_violates_three() {
        let inst = ProblemInstance::reference(bundled("alexnet").unwrap());
        let f = feasible(&inst, SplitCandidate::at(0, 21));
        assert_eq!(f.violations, vec![Constraint::ClientLayers]);
    }

    #[test]
    fn all_on_client_violates_four() {
        let inst = ProblemInstance::reference(bundled("alexnet").unwrap());
        let f = feasible(&inst, SplitCandidate::at(21, 21));
        assert_eq!(f.violations, vec![Constraint::ServerLayers]);
        let f = feasible(&inst, SplitCandidate::new(3, 3));
        assert_eq!(f.violations, vec![Constraint::LayerSum]);
    }

    #[test]
    fn tiny_cap_violates_one_everywhere() {
        let model = bundled("alexnet").unwrap();
        let cap = model.client_memory(1).unwrap() - 1;
        let mut inst = ProblemInstance::reference(model);
        inst.memory_cap = cap;
        for l1 in inst.split_range() {
            assert_eq!(feasible(&inst, SplitCandidate::at(l1, 21)).indices(), vec![1]);
        }
    }

    #[test]
    fn throughput_constraints_reported() {
        let mut inst = ProblemInstance::reference(two_layer());
        inst.network.tau_u_mbps = 20.0;
        inst.network.tau_d_mbps = 11.0;
        assert_eq!(feasible(&inst, SplitCandidate::at(1, 2)).indices(), vec![5, 6]);
        assert!(matches!(inst.validate(), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn reference_alexnet_split_three_feasible() {
        let inst = ProblemInstance::reference(bundled("alexnet").unwrap());
        assert!(inst.model.client_memory(3).unwrap() < DEFAULT_MEMORY_CAP);
        assert!(feasible(&inst, SplitCandidate::at(3, 21)).is_feasible());
    }

    #[test]
    fn invalid_instances_rejected() {
        let setup = DeviceSetup::default();
        assert!(ProblemInstance::from_setup(two_layer(), setup.clone(), 0).is_err());
        let mut no_power = setup.clone();
        no_power.client.k = None;
        assert!(ProblemInstance::from_setup(two_layer(), no_power, 1).is_err());
    }
}
