//! Circular-orbit geometry on the polar-angle ring model.
//!
//! A satellite's position is reduced to an angle on the orbital ring and each
//! small base station to a polar angle on the same ring. Visibility then only
//! depends on the angular separation, the orbit radius and the maximum slant
//! range implied by the minimum elevation angle. Latitude/longitude are kept
//! for ground-track reporting.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneType {
    Polar,
    Inclined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalPlane {
    pub plane_type: PlaneType,
    /// Inclination in radians.
    pub inclination: f64,
    pub altitude_km: f64,
    pub period_s: f64,
    /// Longitude of the ascending node in radians.
    pub ascending_node_longitude: f64,
    /// Argument of perigee in radians; also the plane's phase on the ring.
    pub perigee_argument: f64,
    /// Time of the ascending-node passage in seconds.
    pub ascending_node_epoch_s: f64,
    pub satellite_count: usize,
}

impl OrbitalPlane {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_s > 0.0) {
            return Err(invalid(format!("orbital period must be positive, got {}", self.period_s)));
        }
        if !(self.altitude_km > 0.0) {
            return Err(invalid(format!("altitude must be positive, got {}", self.altitude_km)));
        }
        if !(0.0..=PI).contains(&self.inclination) {
            return Err(invalid(format!("inclination {} outside [0, pi]", self.inclination)));
        }
        if self.satellite_count == 0 {
            return Err(invalid("a plane needs at least one satellite"));
        }
        Ok(())
    }

    pub fn orbit_radius_km(&self, earth_radius_km: f64) -> f64 {
        earth_radius_km + self.altitude_km
    }

    /// Uniform in-plane phase offset 2πk/n of the k-th satellite.
    pub fn phase_offset(&self, k: usize) -> f64 {
        TAU * k as f64 / self.satellite_count as f64
    }

    /// Angle of satellite `k` on the orbital ring at time `t`, including the
    /// plane's perigee argument.
    pub fn ring_angle(&self, t: f64, k: usize) -> f64 {
        let anomaly = (TAU * t / self.period_s + self.phase_offset(k)).rem_euclid(TAU);
        (anomaly + self.perigee_argument).rem_euclid(TAU)
    }
}

/// True anomaly on a circular orbit, `(2πt/T + phase) mod 2π`.
pub fn true_anomaly(t: f64, period_s: f64, phase_offset: f64) -> Result<f64> {
    if !(period_s > 0.0) {
        return Err(invalid(format!("orbital period must be positive, got {period_s}")));
    }
    Ok((TAU * t / period_s + phase_offset).rem_euclid(TAU))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTrackPoint {
    pub latitude: f64,
    pub longitude: f64,
    /// Set when cos Φ vanished and the longitude was carried over.
    pub singular: bool,
}

/// Sub-satellite point of satellite `k` of `plane` at time `t`.
///
/// At a polar crossing (cos Φ = 0) the longitude is undefined; the previous
/// evaluable longitude is returned instead (or the node longitude when there
/// is none) and the point is flagged.
pub fn ground_track(t: f64, plane: &OrbitalPlane, k: usize, previous_longitude: Option<f64>) -> GroundTrackPoint {
    let argument = TAU * t / plane.period_s + plane.phase_offset(k) + plane.perigee_argument;
    let latitude = (plane.inclination.sin() * argument.sin()).clamp(-1.0, 1.0).asin();
    let cos_lat = latitude.cos();
    if cos_lat.abs() < 1e-12 {
        return GroundTrackPoint {
            latitude,
            longitude: previous_longitude.unwrap_or(plane.ascending_node_longitude),
            singular: true,
        };
    }
    let ratio = (argument.cos() / cos_lat).clamp(-1.0, 1.0);
    let raw = plane.ascending_node_longitude + ratio.acos() - TAU / plane.period_s * (t - plane.ascending_node_epoch_s);
    GroundTrackPoint { latitude, longitude: wrap_pi(raw), singular: false }
}

fn wrap_pi(angle: f64) -> f64 {
    let a = (angle + PI).rem_euclid(TAU) - PI;
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Law-of-cosines distance between a ground point at radius `earth_radius_km`
/// and a satellite at radius `orbit_radius_km`, separated by `separation` rad.
pub fn slant_range_km(separation: f64, orbit_radius_km: f64, earth_radius_km: f64) -> f64 {
    let r = orbit_radius_km;
    let re = earth_radius_km;
    (re * re + r * r - 2.0 * re * r * separation.cos()).max(0.0).sqrt()
}

pub fn slant_range(t: f64, station_angle: f64, plane: &OrbitalPlane, k: usize, earth_radius_km: f64) -> f64 {
    let separation = plane.ring_angle(t, k) - station_angle;
    slant_range_km(separation, plane.orbit_radius_km(earth_radius_km), earth_radius_km)
}

/// Visibility test on the angular separation: `cos Δ ≥ (R² + r² − d_max²) / (2 R r)`.
pub fn visible_at_separation(separation: f64, orbit_radius_km: f64, earth_radius_km: f64, d_max_km: f64) -> bool {
    let (re, r) = (earth_radius_km, orbit_radius_km);
    let threshold = (re * re + r * r - d_max_km * d_max_km) / (2.0 * re * r);
    separation.cos() >= threshold
}

pub fn visibility(
    t: f64,
    station_angle: f64,
    plane: &OrbitalPlane,
    k: usize,
    d_max_km: f64,
    earth_radius_km: f64,
) -> bool {
    let separation = plane.ring_angle(t, k) - station_angle;
    visible_at_separation(separation, plane.orbit_radius_km(earth_radius_km), earth_radius_km, d_max_km)
}

/// Maximum slant range for a minimum elevation angle `min_elevation` (rad).
pub fn elevation_to_dmax(min_elevation: f64, altitude_km: f64, earth_radius_km: f64) -> f64 {
    let s = min_elevation.sin();
    let re = earth_radius_km;
    -re * s + (re * re * s * s + altitude_km * altitude_km + 2.0 * re * altitude_km).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub index: usize,
    /// Polar angle θ_i on the ring, in [0, 2π).
    pub polar_angle: f64,
    pub macro_cell: usize,
    /// Terrestrial backhaul capacity in bits per slot.
    pub terrestrial_capacity: f64,
}

impl GroundStation {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..TAU).contains(&self.polar_angle) {
            return Err(invalid(format!("station {} polar angle {} outside [0, 2pi)", self.index, self.polar_angle)));
        }
        if !(self.terrestrial_capacity > 0.0) {
            return Err(invalid(format!("station {} terrestrial capacity must be positive", self.index)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SatelliteId {
    pub plane: usize,
    pub slot: usize,
}

/// All planes of the constellation with a flat, plane-major satellite index.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    pub planes: Vec<OrbitalPlane>,
    pub earth_radius_km: f64,
    /// Maximum slant range per plane, from the minimum elevation angle.
    pub d_max_km: Vec<f64>,
    satellites: Vec<SatelliteId>,
}

impl Constellation {
    pub fn new(planes: Vec<OrbitalPlane>, earth_radius_km: f64, min_elevation: f64) -> Result<Self> {
        if planes.is_empty() {
            return Err(invalid("constellation needs at least one plane"));
        }
        for p in &planes {
            p.validate()?;
        }
        let d_max_km =
            planes.iter().map(|p| elevation_to_dmax(min_elevation, p.altitude_km, earth_radius_km)).collect();
        let satellites = planes
            .iter()
            .enumerate()
            .flat_map(|(p, plane)| (0..plane.satellite_count).map(move |slot| SatelliteId { plane: p, slot }))
            .collect();
        Ok(Self { planes, earth_radius_km, d_max_km, satellites })
    }

    pub fn satellites(&self) -> &[SatelliteId] {
        &self.satellites
    }

    pub fn len(&self) -> usize {
        self.satellites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.satellites.is_empty()
    }

    pub fn plane_type(&self, j: usize) -> PlaneType {
        self.planes[self.satellites[j].plane].plane_type
    }

    pub fn slant_range(&self, t: f64, station_angle: f64, j: usize) -> f64 {
        let id = self.satellites[j];
        slant_range(t, station_angle, &self.planes[id.plane], id.slot, self.earth_radius_km)
    }

    pub fn visible(&self, t: f64, station_angle: f64, j: usize) -> bool {
        let id = self.satellites[j];
        visibility(t, station_angle, &self.planes[id.plane], id.slot, self.d_max_km[id.plane], self.earth_radius_km)
    }

    pub fn ground_track(&self, t: f64, j: usize, previous_longitude: Option<f64>) -> GroundTrackPoint {
        let id = self.satellites[j];
        ground_track(t, &self.planes[id.plane], id.slot, previous_longitude)
    }
}

/// Visibility indicators α_ij(t) over a run of slots, stored slot-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VisibilitySeries {
    slots: usize,
    stations: usize,
    satellites: usize,
    data: Vec<bool>,
}

impl VisibilitySeries {
    pub fn from_fn(
        slots: usize,
        stations: usize,
        satellites: usize,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Self {
        let mut data = Vec::with_capacity(slots * stations * satellites);
        for t in 0..slots {
            for i in 0..stations {
                for j in 0..satellites {
                    data.push(f(t, i, j));
                }
            }
        }
        Self { slots, stations, satellites, data }
    }

    /// Samples the constellation every `slot_s` seconds for `slots` slots.
    pub fn sample(constellation: &Constellation, station_angles: &[f64], slots: usize, slot_s: f64) -> Self {
        Self::from_fn(slots, station_angles.len(), constellation.len(), |t, i, j| {
            constellation.visible(t as f64 * slot_s, station_angles[i], j)
        })
    }

    pub fn get(&self, t: usize, i: usize, j: usize) -> bool {
        self.data[(t * self.stations + i) * self.satellites + j]
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn satellites(&self) -> usize {
        self.satellites
    }

    /// Per-satellite fraction of (slot, station) pairs with the satellite in view.
    pub fn visibility_fractions(&self) -> Result<Vec<f64>> {
        if self.slots == 0 || self.stations == 0 || self.satellites == 0 {
            return Err(invalid("visibility matrix is empty"));
        }
        let mut counts = vec![0usize; self.satellites];
        for chunk in self.data.chunks(self.satellites) {
            for (j, &seen) in chunk.iter().enumerate() {
                counts[j] += usize::from(seen);
            }
        }
        let denom = (self.slots * self.stations) as f64;
        Ok(counts.into_iter().map(|c| c as f64 / denom).collect())
    }
}

/// Power weighting factors γ_j: the visibility fraction of each satellite,
/// averaged over satellites of the same plane type.
pub fn gamma_weights(series: &VisibilitySeries, plane_types: &[PlaneType]) -> Result<Vec<f64>> {
    let fractions = series.visibility_fractions()?;
    if plane_types.len() != fractions.len() {
        return Err(invalid(format!("{} plane types for {} satellites", plane_types.len(), fractions.len())));
    }
    let class_mean = |ty: PlaneType| {
        let (sum, n) = fractions
            .iter()
            .zip(plane_types)
            .filter(|(_, &t)| t == ty)
            .fold((0.0, 0usize), |(s, n), (f, _)| (s + f, n + 1));
        sum / n as f64
    };
    let polar = class_mean(PlaneType::Polar);
    let inclined = class_mean(PlaneType::Inclined);
    Ok(plane_types
        .iter()
        .map(|ty| match ty {
            PlaneType::Polar => polar,
            PlaneType::Inclined => inclined,
        })
        .collect())
}

/// Writes `t, satellite_id, lat_deg, lon_deg, visible_station_ids` rows.
/// Visible station ids are separated by `;`.
pub fn write_ground_track<W: Write>(
    out: W,
    constellation: &Constellation,
    station_angles: &[f64],
    times_s: &[f64],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["t", "satellite_id", "lat_deg", "lon_deg", "visible_station_ids"])?;
    let mut previous: Vec<Option<f64>> = vec![None; constellation.len()];
    for &t in times_s {
        for (j, prev) in previous.iter_mut().enumerate() {
            let point = constellation.ground_track(t, j, *prev);
            *prev = Some(point.longitude);
            let visible: Vec<String> = station_angles
                .iter()
                .enumerate()
                .filter(|(_, &angle)| constellation.visible(t, angle, j))
                .map(|(i, _)| i.to_string())
                .collect();
            writer.write_record([
                format!("{t}"),
                j.to_string(),
                format!("{:.6}", point.latitude.to_degrees()),
                format!("{:.6}", point.longitude.to_degrees()),
                visible.join(";"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane(altitude_km: f64, inclination: f64, n: usize) -> OrbitalPlane {
        OrbitalPlane {
            plane_type: PlaneType::Polar,
            inclination,
            altitude_km,
            period_s: 6627.6,
            ascending_node_longitude: 0.0,
            perigee_argument: 0.0,
            ascending_node_epoch_s: 0.0,
            satellite_count: n,
        }
    }

    #[test]
    fn true_anomaly_examples() {
        let ts = 6627.6;
        assert!((true_anomaly(ts / 4.0, ts, 0.0).unwrap() - PI / 2.0).abs() < 1e-12);
        assert_eq!(true_anomaly(0.0, ts, 0.0).unwrap(), 0.0);
        assert!((true_anomaly(ts, ts, PI).unwrap() - PI).abs() < 1e-12);
        assert!(true_anomaly(1.0, 0.0, 0.0).is_err());
        assert!(true_anomaly(1.0, -3.0, 0.0).is_err());
    }

    #[test]
    fn ground_track_latitudes() {
        // Equator crossing.
        let p = plane(1015.0, 1.2, 1);
        assert!(ground_track(0.0, &p, 0, None).latitude.abs() < 1e-12);

        // Polar orbit at argument π/2 sits on the pole and is flagged.
        let polar = plane(1015.0, PI / 2.0, 1);
        let quarter = polar.period_s / 4.0;
        let pt = ground_track(quarter, &polar, 0, Some(0.3));
        assert!((pt.latitude - PI / 2.0).abs() < 1e-7);
        assert!(pt.singular);
        assert_eq!(pt.longitude, 0.3);

        // 99.5° inclination at argument π/2: asin(sin 99.5°), value from an
        // independent evaluation.
        let telesat = plane(1015.0, 99.5_f64.to_radians(), 1);
        let pt = ground_track(quarter, &telesat, 0, None);
        assert!((pt.latitude - 1.404_990_047_855_435_6).abs() < 1e-9);
        assert!(!pt.singular);
    }

    #[test]
    fn slant_range_examples() {
        let re = EARTH_RADIUS_KM;
        let r = re + 1000.0;
        assert!((slant_range_km(0.0, r, re) - 1000.0).abs() < 1e-9);
        assert!((slant_range_km(PI, r, re) - 13742.0).abs() < 1e-9);
        // Independent evaluation of the law of cosines at Δ = 0.2 rad.
        assert!((slant_range_km(0.2, r, re) - 1_694.748_525_238_416_3).abs() < 1e-6);
    }

    #[test]
    fn visibility_examples() {
        let re = EARTH_RADIUS_KM;
        let r = re + 1000.0;
        assert!(visible_at_separation(0.0, r, re, 1000.0));
        assert!(!visible_at_separation(PI, r, re, 2000.0));
        assert!(visible_at_separation(0.2, r, re, 1694.7486));
        assert!(!visible_at_separation(0.2, r, re, 1694.7484));
    }

    #[test]
    fn elevation_to_dmax_examples() {
        let re = EARTH_RADIUS_KM;
        assert!((elevation_to_dmax(PI / 2.0, 1000.0, re) - 1000.0).abs() < 1e-6);
        assert!((elevation_to_dmax(0.0, 1000.0, re) - 3_707.020_366_817_533_6).abs() < 1e-6);
        assert_eq!(elevation_to_dmax(0.0, 0.0, re), 0.0);
    }

    #[test]
    fn gamma_weight_examples() {
        let all = VisibilitySeries::from_fn(4, 3, 1, |_, _, _| true);
        assert_eq!(gamma_weights(&all, &[PlaneType::Polar]).unwrap(), vec![1.0]);
        let none = VisibilitySeries::from_fn(4, 3, 1, |_, _, _| false);
        assert_eq!(gamma_weights(&none, &[PlaneType::Polar]).unwrap(), vec![0.0]);
        let half = VisibilitySeries::from_fn(4, 3, 1, |t, _, _| t % 2 == 0);
        assert_eq!(gamma_weights(&half, &[PlaneType::Polar]).unwrap(), vec![0.5]);
        let empty = VisibilitySeries::from_fn(0, 3, 1, |_, _, _| true);
        assert!(gamma_weights(&empty, &[PlaneType::Polar]).is_err());
    }

    #[test]
    fn gamma_is_shared_within_plane_type() {
        let series = VisibilitySeries::from_fn(10, 1, 3, |t, _, j| match j {
            0 => t < 2,
            1 => t < 4,
            _ => t < 9,
        });
        let types = [PlaneType::Polar, PlaneType::Polar, PlaneType::Inclined];
        let gamma = gamma_weights(&series, &types).unwrap();
        assert!((gamma[0] - 0.3).abs() < 1e-12);
        assert_eq!(gamma[0], gamma[1]);
        assert!((gamma[2] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn slant_range_extremes_over_an_orbit() {
        let p = plane(1015.0, 1.7, 1);
        let r = p.orbit_radius_km(EARTH_RADIUS_KM);
        let (mut lo, mut hi) = (f64::MAX, 0.0f64);
        for step in 0..=100_000 {
            let t = p.period_s * step as f64 / 100_000.0;
            let d = slant_range(t, 0.0, &p, 0, EARTH_RADIUS_KM);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        assert!((lo - (r - EARTH_RADIUS_KM)).abs() < 1e-3);
        assert!((hi - (r + EARTH_RADIUS_KM)).abs() < 1e-3);
    }

    #[test]
    fn visibility_agrees_with_slant_range_threshold() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = plane(1015.0, 1.7, 5);
        let d_max = elevation_to_dmax(10f64.to_radians(), p.altitude_km, EARTH_RADIUS_KM);
        for _ in 0..10_000 {
            let t = rng.random_range(0.0..3.0 * p.period_s);
            let station = rng.random_range(0.0..TAU);
            let k = rng.random_range(0..5);
            let by_range = slant_range(t, station, &p, k, EARTH_RADIUS_KM) <= d_max;
            assert_eq!(visibility(t, station, &p, k, d_max, EARTH_RADIUS_KM), by_range);
        }
    }

    #[test]
    fn ground_track_csv_has_header_and_rows() {
        let c = Constellation::new(vec![plane(1015.0, 1.7, 2)], EARTH_RADIUS_KM, 10f64.to_radians()).unwrap();
        let mut buf = Vec::new();
        write_ground_track(&mut buf, &c, &[0.0, PI], &[0.0, 60.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,satellite_id,lat_deg,lon_deg,visible_station_ids");
        assert_eq!(lines.len(), 1 + 2 * 2);
        // Satellite 0 starts overhead station 0, satellite 1 overhead station 1.
        assert!(lines[1].ends_with(",0"));
        assert!(lines[2].ends_with(",1"));
    }

    proptest! {
        #[test]
        fn slant_range_symmetric_and_periodic(sep in -10.0f64..10.0, h in 100.0f64..3000.0) {
            let r = EARTH_RADIUS_KM + h;
            let d = slant_range_km(sep, r, EARTH_RADIUS_KM);
            prop_assert!((d - slant_range_km(-sep, r, EARTH_RADIUS_KM)).abs() < 1e-6);
            prop_assert!((d - slant_range_km(sep + TAU, r, EARTH_RADIUS_KM)).abs() < 1e-6);
            prop_assert!(d >= h - 1e-6 && d <= r + EARTH_RADIUS_KM + 1e-6);
        }
    }
}
