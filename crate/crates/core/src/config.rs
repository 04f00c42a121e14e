//! Simulation configuration.
//!
//! `SimConfig::default()` carries the reference constellation and network
//! parameters; [`SimConfig::desk_scale`] shrinks the constellation to the
//! small setup used for trend experiments.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::channel::LinkParams;
use crate::controller::Tolerances;
use crate::error::{invalid, Result};
use crate::orbit::{OrbitalPlane, PlaneType, EARTH_RADIUS_KM};
use crate::powersolver::SolverSettings;
use crate::traffic::TrafficProfile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timeline {
    pub orbital_period_s: f64,
    /// Frames per orbital period, F.
    pub frames: usize,
    /// Slots per frame, K.
    pub frame_slots: usize,
    /// Slot duration δ in seconds.
    pub slot_s: f64,
}

impl Default for Timeline {
    fn default() -> Self {
        Self { orbital_period_s: 6627.6, frames: 100, frame_slots: 100, slot_s: 0.66276 }
    }
}

impl Timeline {
    pub fn validate(&self) -> Result<()> {
        if !(self.orbital_period_s > 0.0 && self.slot_s > 0.0) || self.frames == 0 || self.frame_slots == 0 {
            return Err(invalid("timeline values must be positive"));
        }
        let implied = self.frames as f64 * self.frame_slots as f64 * self.slot_s;
        if (implied - self.orbital_period_s).abs() > 1e-9 * self.orbital_period_s {
            return Err(invalid(format!(
                "timeline.orbital_period_s = {} but frames * frame_slots * slot_s = {implied}",
                self.orbital_period_s
            )));
        }
        Ok(())
    }

    pub fn slots_per_orbit(&self) -> usize {
        self.frames * self.frame_slots
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstellationConfig {
    pub polar_planes: usize,
    pub inclined_planes: usize,
    pub satellites_per_polar_plane: usize,
    pub satellites_per_inclined_plane: usize,
    pub polar_inclination_deg: f64,
    pub inclined_inclination_deg: f64,
    pub polar_altitude_km: f64,
    pub inclined_altitude_km: f64,
    pub min_elevation_deg: f64,
    pub earth_radius_km: f64,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        Self {
            polar_planes: 1,
            inclined_planes: 1,
            satellites_per_polar_plane: 12,
            satellites_per_inclined_plane: 9,
            polar_inclination_deg: 99.5,
            inclined_inclination_deg: 37.4,
            polar_altitude_km: 1015.0,
            inclined_altitude_km: 1325.0,
            min_elevation_deg: 10.0,
            earth_radius_km: EARTH_RADIUS_KM,
        }
    }
}

impl ConstellationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.polar_planes + self.inclined_planes == 0 {
            return Err(invalid("constellation needs at least one plane"));
        }
        if (self.polar_planes > 0 && self.satellites_per_polar_plane == 0)
            || (self.inclined_planes > 0 && self.satellites_per_inclined_plane == 0)
        {
            return Err(invalid("every plane needs at least one satellite"));
        }
        if !(0.0..90.0).contains(&self.min_elevation_deg) {
            return Err(invalid(format!("min_elevation_deg {} outside [0, 90)", self.min_elevation_deg)));
        }
        Ok(())
    }

    /// Orbital planes. Planes of one type are phase-staggered so that their
    /// satellites interleave evenly on the ring.
    pub fn planes(&self, period_s: f64) -> Vec<OrbitalPlane> {
        let mut planes = Vec::new();
        let groups = [
            (
                PlaneType::Polar,
                self.polar_planes,
                self.satellites_per_polar_plane,
                self.polar_inclination_deg,
                self.polar_altitude_km,
            ),
            (
                PlaneType::Inclined,
                self.inclined_planes,
                self.satellites_per_inclined_plane,
                self.inclined_inclination_deg,
                self.inclined_altitude_km,
            ),
        ];
        for (plane_type, count, per_plane, inclination_deg, altitude_km) in groups {
            for p in 0..count {
                planes.push(OrbitalPlane {
                    plane_type,
                    inclination: inclination_deg.to_radians(),
                    altitude_km,
                    period_s,
                    ascending_node_longitude: TAU * p as f64 / count as f64,
                    perigee_argument: TAU * p as f64 / (count * per_plane) as f64,
                    ascending_node_epoch_s: 0.0,
                    satellite_count: per_plane,
                });
            }
        }
        planes
    }
}

/// A per-station quantity given either once for all stations or per station.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerStation {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerStation {
    pub fn resolve(&self, stations: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            Self::Uniform(v) => Ok(vec![*v; stations]),
            Self::Each(v) if v.len() == stations => Ok(v.clone()),
            Self::Each(v) => Err(invalid(format!("{name} lists {} values for {stations} stations", v.len()))),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Uniform(v) => Self::Uniform(v * factor),
            Self::Each(v) => Self::Each(v.iter().map(|x| x * factor).collect()),
        }
    }

    /// Mean over stations; used as the sweep coordinate.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Uniform(v) => *v,
            Self::Each(v) if v.is_empty() => 0.0,
            Self::Each(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationConfig {
    pub count: usize,
    /// Polar angles in degrees; evenly spaced when empty.
    pub polar_angles_deg: Vec<f64>,
    pub terrestrial_capacity_kbps: PerStation,
}

impl Default for StationConfig {
    fn default() -> Self {
        Self { count: 4, polar_angles_deg: Vec::new(), terrestrial_capacity_kbps: PerStation::Uniform(120.0) }
    }
}

impl StationConfig {
    pub fn polar_angles(&self) -> Result<Vec<f64>> {
        if self.polar_angles_deg.is_empty() {
            return Ok((0..self.count).map(|i| TAU * i as f64 / self.count as f64).collect());
        }
        if self.polar_angles_deg.len() != self.count {
            return Err(invalid(format!(
                "stations.polar_angles_deg lists {} angles for {} stations",
                self.polar_angles_deg.len(),
                self.count
            )));
        }
        Ok(self.polar_angles_deg.iter().map(|d| d.to_radians().rem_euclid(TAU)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub embb_kbps: PerStation,
    pub urllc_kbps: PerStation,
    pub mmtc_kbps: PerStation,
    /// A^max as a multiple of the mMTC mean; at least 2 keeps the mean exact.
    pub mmtc_cap_factor: f64,
    pub pareto_shape: f64,
    pub packet_bits: f64,
    /// Prediction window W in slots.
    pub window: usize,
    /// Relative multiplicative noise of the predictor; 0 is the perfect oracle.
    pub prediction_noise: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            embb_kbps: PerStation::Uniform(80.0),
            urllc_kbps: PerStation::Uniform(10.0),
            mmtc_kbps: PerStation::Uniform(80.0),
            mmtc_cap_factor: 2.0,
            pareto_shape: 3.0,
            packet_bits: 12_000.0,
            window: 0,
            prediction_noise: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReleaseSplit {
    /// Released mMTC goes to the terrestrial backhaul up to its decision,
    /// the rest to the satellite.
    TerrestrialFirst,
    /// Released mMTC is split in proportion to the two decisions.
    ProRata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub v: f64,
    pub beta: f64,
    pub tolerances: Tolerances,
    /// D_u = factor · C^Ter per slot.
    pub urllc_threshold_factor: f64,
    /// D_m^Ter = factor · C^Ter per slot.
    pub ter_mmtc_threshold_factor: f64,
    /// D_m^Sat = factor · C^Sat per slot.
    pub sat_mmtc_threshold_factor: f64,
    /// b_max^Ter = factor · C^Ter per slot.
    pub b_max_ter_factor: f64,
    /// b_max^Sat = factor · C^Sat per slot.
    pub b_max_sat_factor: f64,
    pub release_split: ReleaseSplit,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            v: 1e4,
            beta: 0.5,
            tolerances: Tolerances { urllc: 1e-5, ter_mmtc: 1e-3, sat_mmtc: 1e-2 },
            urllc_threshold_factor: 0.3,
            ter_mmtc_threshold_factor: 0.7,
            sat_mmtc_threshold_factor: 0.5,
            b_max_ter_factor: 0.5,
            b_max_sat_factor: 1.0,
            release_split: ReleaseSplit::TerrestrialFirst,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub horizon_slots: usize,
    /// Fraction of leading slots excluded from time averages.
    pub warmup_fraction: f64,
    /// Bits per workload unit; queues and rates are kept in these units.
    pub workload_unit_bits: f64,
    pub timeline: Timeline,
    pub constellation: ConstellationConfig,
    pub stations: StationConfig,
    pub link: LinkParams,
    pub traffic: TrafficConfig,
    pub control: ControlConfig,
    pub solver: SolverSettings,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            horizon_slots: 20_000,
            warmup_fraction: 0.1,
            workload_unit_bits: 12_000.0,
            timeline: Timeline::default(),
            constellation: ConstellationConfig::default(),
            stations: StationConfig::default(),
            link: LinkParams::default(),
            traffic: TrafficConfig::default(),
            control: ControlConfig::default(),
            solver: SolverSettings::default(),
        }
    }
}

impl SimConfig {
    /// Two polar planes of three satellites each; everything else default.
    pub fn desk_scale() -> Self {
        let mut c = Self::default();
        c.constellation.polar_planes = 2;
        c.constellation.inclined_planes = 0;
        c.constellation.satellites_per_polar_plane = 3;
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.timeline.validate()?;
        self.constellation.validate()?;
        self.link.validate()?;
        self.solver.validate()?;
        self.control.tolerances.validate()?;
        if self.stations.count == 0 {
            return Err(invalid("stations.count must be at least 1"));
        }
        self.stations.polar_angles()?;
        for c in self.stations.terrestrial_capacity_kbps.resolve(self.stations.count, "terrestrial_capacity_kbps")? {
            if !(c > 0.0) {
                return Err(invalid("terrestrial capacity must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.control.beta) {
            return Err(invalid(format!("control.beta must lie in [0, 1], got {}", self.control.beta)));
        }
        if !(self.control.v >= 0.0 && self.control.v.is_finite()) {
            return Err(invalid(format!("control.v must be non-negative, got {}", self.control.v)));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(invalid("warmup_fraction must lie in [0, 1)"));
        }
        if !(self.workload_unit_bits > 0.0) {
            return Err(invalid("workload_unit_bits must be positive"));
        }
        if !(self.traffic.mmtc_cap_factor >= 1.0) {
            return Err(invalid("traffic.mmtc_cap_factor must be at least 1"));
        }
        if !(self.traffic.prediction_noise >= 0.0) {
            return Err(invalid("traffic.prediction_noise must be non-negative"));
        }
        let urllc = self.traffic.urllc_kbps.resolve(self.stations.count, "urllc_kbps")?;
        if !(urllc.iter().sum::<f64>() > 0.0) {
            return Err(invalid("URLLC arrival rates sum to zero"));
        }
        for p in self.traffic_profiles()? {
            p.validate()?;
        }
        Ok(())
    }

    fn kbps_to_bits_per_slot(&self, kbps: f64) -> f64 {
        kbps * 1e3 * self.timeline.slot_s
    }

    /// Arrival profiles in bits per slot.
    pub fn traffic_profiles(&self) -> Result<Vec<TrafficProfile>> {
        let n = self.stations.count;
        let t = &self.traffic;
        let e = t.embb_kbps.resolve(n, "embb_kbps")?;
        let u = t.urllc_kbps.resolve(n, "urllc_kbps")?;
        let m = t.mmtc_kbps.resolve(n, "mmtc_kbps")?;
        Ok((0..n)
            .map(|i| {
                let mmtc_mean = self.kbps_to_bits_per_slot(m[i]);
                TrafficProfile {
                    embb_mean: self.kbps_to_bits_per_slot(e[i]),
                    urllc_mean: self.kbps_to_bits_per_slot(u[i]),
                    mmtc_mean,
                    mmtc_cap: t.mmtc_cap_factor * mmtc_mean,
                    pareto_shape: t.pareto_shape,
                    packet_bits: t.packet_bits,
                }
            })
            .collect())
    }

    /// C_i^Ter in bits per slot.
    pub fn terrestrial_capacity_bits(&self) -> Result<Vec<f64>> {
        Ok(self
            .stations
            .terrestrial_capacity_kbps
            .resolve(self.stations.count, "terrestrial_capacity_kbps")?
            .into_iter()
            .map(|c| self.kbps_to_bits_per_slot(c))
            .collect())
    }

    pub fn satellite_count(&self) -> usize {
        let c = &self.constellation;
        c.polar_planes * c.satellites_per_polar_plane + c.inclined_planes * c.satellites_per_inclined_plane
    }
}
