//! Free-space path-loss gains and Shannon link rates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::LinkMatrix;
use crate::orbit::Constellation;

pub const LIGHT_SPEED: f64 = 299_792_458.0;

/// Converts a density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub carrier_frequency_hz: f64,
    pub light_speed: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_density: f64,
    /// Total satellite bandwidth B_j^max in Hz, split evenly over stations.
    pub satellite_bandwidth_hz: f64,
    /// Satellite beam capacity C^Sat in bits/s.
    pub satellite_capacity_bps: f64,
    pub max_power_w: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 20e9,
            light_speed: LIGHT_SPEED,
            noise_density: dbm_per_hz_to_watts(-174.0),
            satellite_bandwidth_hz: 0.25e9,
            satellite_capacity_bps: 558.7e6,
            max_power_w: 1000.0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("light_speed", self.light_speed),
            ("noise_density", self.noise_density),
            ("satellite_bandwidth_hz", self.satellite_bandwidth_hz),
            ("satellite_capacity_bps", self.satellite_capacity_bps),
            ("max_power_w", self.max_power_w),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {value}")));
            }
        }
        Ok(())
    }

    /// Per-link bandwidth B_ij = B^max / I.
    pub fn link_bandwidth_hz(&self, stations: usize) -> f64 {
        self.satellite_bandwidth_hz / stations as f64
    }

    pub fn path_gain(&self, d_km: f64) -> Result<f64> {
        path_gain_with(d_km, self.carrier_frequency_hz, self.light_speed)
    }
}

/// Free-space gain (C / (4π f_c d))² with `d` given in km.
pub fn path_gain(d_km: f64, carrier_frequency_hz: f64) -> Result<f64> {
    path_gain_with(d_km, carrier_frequency_hz, LIGHT_SPEED)
}

fn path_gain_with(d_km: f64, carrier_frequency_hz: f64, light_speed: f64) -> Result<f64> {
    if !(d_km > 0.0) {
        return Err(Error::Domain(format!("slant range must be positive, got {d_km} km")));
    }
    let ratio = light_speed / (4.0 * PI * carrier_frequency_hz * d_km * 1e3);
    Ok(ratio * ratio)
}

/// Received interference at station `i` on the link to satellite `j`:
/// Σ_{j'≠j} P_ij' h_ij'.
pub fn interference(i: usize, j: usize, power: &LinkMatrix<f64>, gain: &LinkMatrix<f64>) -> f64 {
    (0..power.cols()).filter(|&jj| jj != j).map(|jj| power[(i, jj)] * gain[(i, jj)]).sum()
}

/// Shannon rate B log2(1 + P h / (N0 B + I)) in bits/s.
pub fn link_rate(power: f64, gain: f64, bandwidth_hz: f64, noise_density: f64, interference: f64) -> f64 {
    if power <= 0.0 || gain <= 0.0 {
        return 0.0;
    }
    let sinr = power * gain / (noise_density * bandwidth_hz + interference);
    bandwidth_hz * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Gain matrix h_ij = α_ij h^a_ij at time `t` (seconds).
pub fn gain_matrix(
    constellation: &Constellation,
    station_angles: &[f64],
    t: f64,
    params: &LinkParams,
) -> Result<LinkMatrix<f64>> {
    let mut gain = LinkMatrix::zeros(station_angles.len(), constellation.len());
    for (i, &angle) in station_angles.iter().enumerate() {
        for j in 0..constellation.len() {
            if constellation.visible(t, angle, j) {
                gain[(i, j)] = params.path_gain(constellation.slant_range(t, angle, j))?;
            }
        }
    }
    Ok(gain)
}

/// Rates R_ij in bits/s for a full allocation, with inter-satellite interference.
pub fn rate_matrix(
    power: &LinkMatrix<f64>,
    gain: &LinkMatrix<f64>,
    bandwidth_hz: f64,
    noise_density: f64,
) -> LinkMatrix<f64> {
    LinkMatrix::from_fn(power.rows(), power.cols(), |i, j| {
        link_rate(power[(i, j)], gain[(i, j)], bandwidth_hz, noise_density, interference(i, j, power, gain))
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityCheck {
    /// C^Sat − Σ_i R_ij; negative when over capacity.
    pub slack: f64,
    pub violated: bool,
}

/// Checks Σ_i R_ij ≤ C^Sat allowing a relative tolerance `rel_tol`.
pub fn satellite_capacity_check(rates: &[f64], capacity: f64, rel_tol: f64) -> CapacityCheck {
    let total: f64 = rates.iter().sum();
    let slack = capacity - total;
    CapacityCheck { slack, violated: total > capacity * (1.0 + rel_tol) }
}
