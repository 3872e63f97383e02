//! Latency and energy model of a client/server CNN split.
//!
//! Units: memory in bytes, tensor and download sizes in bits, bandwidth and
//! throughput in Mbps, power in mW, time in seconds, energy in mJ and the client
//! operating frequency in GHz. Compute rate is one byte of assigned memory per
//! core cycle, so `t = memory / (cores * clock_hz)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;

/// Empirical power constant of the reference handset.
pub const DEFAULT_K: f64 = 1.172;
/// Upload power slope, mW/Mbps.
pub const DEFAULT_ALPHA_U: f64 = 283.17;
/// Download power slope, mW/Mbps.
pub const DEFAULT_ALPHA_D: f64 = 137.01;
/// Upload power intercept, mW.
pub const DEFAULT_BETA_U: f64 = 132.86;
/// Download power intercept, mW.
pub const DEFAULT_BETA_D: f64 = 132.86;

const BITS_PER_MEGABIT: f64 = 1e6;

/// Compute parameters of one side of the split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    #[serde(default)]
    pub name: String,
    pub cores: u32,
    pub clock_hz: f64,
    /// Operating frequency in GHz; only needed on the client.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_ghz: Option<f64>,
    /// Dynamic power constant; only needed on the client.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

impl DeviceProfile {
    /// Octa-core 1.6 GHz handset.
    pub fn reference_client() -> Self {
        Self {
            name: "samsung-galaxy-j6".into(),
            cores: 8,
            clock_hz: 1.6e9,
            freq_ghz: Some(1.6),
            k: Some(DEFAULT_K),
        }
    }

    /// Quad-core 1.6 GHz server.
    pub fn reference_server() -> Self {
        Self {
            name: "i5-quad-core".into(),
            cores: 4,
            clock_hz: 1.6e9,
            freq_ghz: None,
            k: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cores < 1 {
            return Err(Error::Validation(format!("device `{}`: cores must be >= 1", self.name)));
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::Validation(format!("device `{}`: clock_hz must be > 0", self.name)));
        }
        for (field, value) in [("freq_ghz", self.freq_ghz), ("k", self.k)] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Validation(format!(
                        "device `{}`: {field} must be > 0",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Byte-work per second, `cores * clock_hz`.
    pub fn compute_rate(&self) -> f64 {
        self.cores as f64 * self.clock_hz
    }

    /// Dynamic power `k * cores * freq^3` in mW.
    pub fn power_mw(&self) -> Result<f64> {
        match (self.k, self.freq_ghz) {
            (Some(k), Some(freq)) => Ok(k * self.cores as f64 * freq.powi(3)),
            _ => Err(Error::InvalidInstance(format!(
                "device `{}` has no power model (needs `k` and `freq_ghz`)",
                self.name
            ))),
        }
    }
}

/// Link parameters and the linear throughput/power model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub bandwidth_mbps: f64,
    pub tau_u_mbps: f64,
    pub tau_d_mbps: f64,
    #[serde(default = "default_alpha_u")]
    pub alpha_u: f64,
    #[serde(default = "default_beta_u")]
    pub beta_u: f64,
    #[serde(default = "default_alpha_d")]
    pub alpha_d: f64,
    #[serde(default = "default_beta_d")]
    pub beta_d: f64,
    /// Size of the result fetched from the server, in bits.
    pub download_bits: f64,
}

fn default_alpha_u() -> f64 {
    DEFAULT_ALPHA_U
}
fn default_beta_u() -> f64 {
    DEFAULT_BETA_U
}
fn default_alpha_d() -> f64 {
    DEFAULT_ALPHA_D
}
fn default_beta_d() -> f64 {
    DEFAULT_BETA_D
}

impl Default for NetworkProfile {
    /// 10 Mbps saturated link returning 1000 float32 class scores.
    fn default() -> Self {
        Self::saturated(10.0)
    }
}

impl NetworkProfile {
    /// A link whose upload and download throughput both equal the bandwidth.
    pub fn saturated(bandwidth_mbps: f64) -> Self {
        Self {
            bandwidth_mbps,
            tau_u_mbps: bandwidth_mbps,
            tau_d_mbps: bandwidth_mbps,
            alpha_u: DEFAULT_ALPHA_U,
            beta_u: DEFAULT_BETA_U,
            alpha_d: DEFAULT_ALPHA_D,
            beta_d: DEFAULT_BETA_D,
            download_bits: 32_000.0,
        }
    }

    /// Checks sign and finiteness. Throughput-vs-bandwidth is a problem constraint
    /// and is checked by [`ProblemInstance::new`].
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth_mbps", self.bandwidth_mbps),
            ("tau_u_mbps", self.tau_u_mbps),
            ("tau_d_mbps", self.tau_d_mbps),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("network: {field} must be > 0")));
            }
        }
        let non_negative = [
            ("alpha_u", self.alpha_u),
            ("beta_u", self.beta_u),
            ("alpha_d", self.alpha_d),
            ("beta_d", self.beta_d),
            ("download_bits", self.download_bits),
        ];
        for (field, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!("network: {field} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn upload_power_mw(&self) -> f64 {
        self.alpha_u * self.tau_u_mbps + self.beta_u
    }

    pub fn download_power_mw(&self) -> f64 {
        self.alpha_d * self.tau_d_mbps + self.beta_d
    }

    /// Seconds to move `bits` over the link.
    pub fn transfer_seconds(&self, bits: f64) -> f64 {
        bits / BITS_PER_MEGABIT / self.bandwidth_mbps
    }

    pub fn download_seconds(&self) -> f64 {
        self.transfer_seconds(self.download_bits)
    }
}

/// Client, server and link parameters as stored in a device document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSetup {
    pub client: DeviceProfile,
    pub server: DeviceProfile,
    pub network: NetworkProfile,
}

impl Default for DeviceSetup {
    fn default() -> Self {
        Self {
            client: DeviceProfile::reference_client(),
            server: DeviceProfile::reference_server(),
            network: NetworkProfile::default(),
        }
    }
}

/// The bundled reference device document.
pub const DEFAULT_DEVICE_DOCUMENT: &str = include_str!("../data/default_device.json");

/// Parses a device/network document.
pub fn load_device_setup(document: &str) -> Result<DeviceSetup> {
    let setup: DeviceSetup =
        serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    setup.client.validate()?;
    setup.server.validate()?;
    setup.network.validate()?;
    Ok(setup)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_client: f64,
    pub t_upload: f64,
    pub t_server: f64,
    pub t_download: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub e_client: f64,
    pub e_upload: f64,
    pub e_download: f64,
}

/// Per-component latency (s) and client energy (mJ) of one split.
///
/// `t_total` excludes the download time; `e_total` includes the download energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub t_client: f64,
    pub t_upload: f64,
    pub t_server: f64,
    pub t_download: f64,
    pub t_total: f64,
    pub e_client: f64,
    pub e_upload: f64,
    pub e_download: f64,
    pub e_total: f64,
}

impl CostBreakdown {
    pub fn new(latency: LatencyBreakdown, energy: EnergyBreakdown) -> Self {
        Self {
            t_client: latency.t_client,
            t_upload: latency.t_upload,
            t_server: latency.t_server,
            t_download: latency.t_download,
            t_total: latency.t_client + latency.t_upload + latency.t_server,
            e_client: energy.e_client,
            e_upload: energy.e_upload,
            e_download: energy.e_download,
            e_total: energy.e_client + energy.e_upload + energy.e_download,
        }
    }
}

fn check_split(instance: &ProblemInstance, l1: usize) -> Result<()> {
    let total = instance.model.total_layers();
    if l1 < 1 || l1 > total - 1 {
        return Err(Error::IndexOutOfRange { index: l1, min: 1, max: total - 1 });
    }
    for (side, device) in [("client", &instance.client), ("server", &instance.server)] {
        if !(device.compute_rate() > 0.0) {
            return Err(Error::InvalidInstance(format!("{side} compute rate must be > 0")));
        }
    }
    if !(instance.network.bandwidth_mbps > 0.0) {
        return Err(Error::InvalidInstance("bandwidth must be > 0".into()));
    }
    Ok(())
}

/// Client, upload, server and download times for a split after layer `l1`.
pub fn latency_breakdown(instance: &ProblemInstance, l1: usize) -> Result<LatencyBreakdown> {
    check_split(instance, l1)?;
    let model = &instance.model;
    let l2 = model.total_layers() - l1;
    let client_bytes = model.client_memory(l1)? as f64;
    let server_bytes = model.server_memory(l2)? as f64;
    let intermediate_bits = model.intermediate_size_bits(l1)? as f64;
    Ok(LatencyBreakdown {
        t_client: client_bytes / instance.client.compute_rate(),
        t_upload: instance.network.transfer_seconds(intermediate_bits),
        t_server: server_bytes / instance.server.compute_rate(),
        t_download: instance.network.download_seconds(),
    })
}

/// Client, upload and download energy for a split after layer `l1`.
pub fn energy_breakdown(instance: &ProblemInstance, l1: usize) -> Result<EnergyBreakdown> {
    let latency = latency_breakdown(instance, l1)?;
    energy_from_latency(instance, &latency)
}

pub(crate) fn energy_from_latency(
    instance: &ProblemInstance,
    latency: &LatencyBreakdown,
) -> Result<EnergyBreakdown> {
    let net = &instance.network;
    Ok(EnergyBreakdown {
        e_client: instance.client.power_mw()? * latency.t_client,
        e_upload: net.upload_power_mw() * latency.t_upload,
        e_download: net.download_power_mw() * latency.t_download,
    })
}

/// Full latency and energy breakdown for a split after layer `l1`.
pub fn cost_breakdown(instance: &ProblemInstance, l1: usize) -> Result<CostBreakdown> {
    let latency = latency_breakdown(instance, l1)?;
    let energy = energy_from_latency(instance, &latency)?;
    Ok(CostBreakdown::new(latency, energy))
}
