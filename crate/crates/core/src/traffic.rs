//! Per-station eMBB, URLLC and mMTC arrival processes and the oracle
//! mMTC predictor.
//!
//! All quantities are bits per slot. Traces are generated station by station
//! from one ChaCha stream per station, so a longer trace extends a shorter one
//! with the same seed and the content does not depend on the window size.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    /// Mean eMBB arrivals λ_e, bits/slot.
    pub embb_mean: f64,
    /// Mean URLLC arrivals λ_u, bits/slot.
    pub urllc_mean: f64,
    /// Mean mMTC arrivals λ_m, bits/slot.
    pub mmtc_mean: f64,
    /// mMTC cap A^max, bits/slot.
    pub mmtc_cap: f64,
    /// Pareto shape a of the URLLC arrivals.
    pub pareto_shape: f64,
    /// eMBB packet size; the Poisson count is in packets.
    pub packet_bits: f64,
}

impl TrafficProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("embb_mean", self.embb_mean),
            ("urllc_mean", self.urllc_mean),
            ("mmtc_mean", self.mmtc_mean),
            ("mmtc_cap", self.mmtc_cap),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be non-negative and finite, got {v}")));
            }
        }
        if self.mmtc_cap < self.mmtc_mean {
            return Err(invalid(format!("mMTC cap {} below mean {}", self.mmtc_cap, self.mmtc_mean)));
        }
        if !(self.pareto_shape > 1.0) {
            return Err(invalid(format!("Pareto shape must exceed 1, got {}", self.pareto_shape)));
        }
        if !(self.packet_bits > 0.0) {
            return Err(invalid("packet_bits must be positive"));
        }
        Ok(())
    }

    /// Pareto scale x = λ_u (a − 1) / a giving mean λ_u.
    pub fn pareto_scale(&self) -> f64 {
        self.urllc_mean * (self.pareto_shape - 1.0) / self.pareto_shape
    }
}

pub fn sample_embb<R: Rng + ?Sized>(profile: &TrafficProfile, rng: &mut R) -> f64 {
    let packets = profile.embb_mean / profile.packet_bits;
    if packets <= 0.0 {
        return 0.0;
    }
    let count: f64 = Poisson::new(packets).expect("positive Poisson mean").sample(rng);
    count * profile.packet_bits
}

pub fn sample_urllc<R: Rng + ?Sized>(profile: &TrafficProfile, rng: &mut R) -> Result<f64> {
    if !(profile.pareto_shape > 1.0) {
        return Err(invalid(format!("Pareto shape must exceed 1, got {}", profile.pareto_shape)));
    }
    let scale = profile.pareto_scale();
    if scale <= 0.0 {
        return Ok(0.0);
    }
    let dist = Pareto::new(scale, profile.pareto_shape).map_err(|e| invalid(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Uniform on [0, 2λ_m], truncated at A^max.
pub fn sample_mmtc<R: Rng + ?Sized>(profile: &TrafficProfile, rng: &mut R) -> f64 {
    if profile.mmtc_mean <= 0.0 {
        return 0.0;
    }
    let draw = rng.random_range(0.0..=2.0 * profile.mmtc_mean);
    draw.min(profile.mmtc_cap)
}

/// σ_i = λ_u,i / Σ λ_u.
pub fn sigma_weights(urllc_means: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = urllc_means.iter().sum();
    if !(total > 0.0) {
        return Err(invalid("URLLC arrival rates sum to zero"));
    }
    Ok(urllc_means.iter().map(|l| l / total).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArrivalBatch {
    pub embb: f64,
    pub urllc: f64,
    pub mmtc: f64,
}

/// Pre-generated arrivals, `slots` long for every station.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficTrace {
    per_station: Vec<Vec<ArrivalBatch>>,
}

impl TrafficTrace {
    pub fn generate(profiles: &[TrafficProfile], slots: usize, seed: u64) -> Result<Self> {
        for p in profiles {
            p.validate()?;
        }
        let per_station = profiles
            .iter()
            .enumerate()
            .map(|(i, profile)| {
                let mut rng = station_rng(seed, i);
                (0..slots)
                    .map(|_| {
                        let embb = sample_embb(profile, &mut rng);
                        let urllc = sample_urllc(profile, &mut rng)?;
                        let mmtc = sample_mmtc(profile, &mut rng);
                        Ok(ArrivalBatch { embb, urllc, mmtc })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_station })
    }

    pub fn from_batches(per_station: Vec<Vec<ArrivalBatch>>) -> Result<Self> {
        if let Some(first) = per_station.first() {
            if per_station.iter().any(|s| s.len() != first.len()) {
                return Err(invalid("trace stations have different lengths"));
            }
        }
        Ok(Self { per_station })
    }

    pub fn stations(&self) -> usize {
        self.per_station.len()
    }

    pub fn slots(&self) -> usize {
        self.per_station.first().map_or(0, Vec::len)
    }

    pub fn get(&self, station: usize, t: usize) -> Result<ArrivalBatch> {
        self.per_station[station]
            .get(t)
            .copied()
            .ok_or(Error::HorizonExceeded { requested: t, available: self.slots() })
    }

    pub fn station(&self, station: usize) -> &[ArrivalBatch] {
        &self.per_station[station]
    }

    /// Writes `t, station, embb_bits, urllc_bits, mmtc_bits` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "station", "embb_bits", "urllc_bits", "mmtc_bits"])?;
        for t in 0..self.slots() {
            for (i, station) in self.per_station.iter().enumerate() {
                let a = station[t];
                w.write_record([
                    t.to_string(),
                    i.to_string(),
                    format!("{:?}", a.embb),
                    format!("{:?}", a.urllc),
                    format!("{:?}", a.mmtc),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t: usize,
            station: usize,
            embb_bits: f64,
            urllc_bits: f64,
            mmtc_bits: f64,
        }
        let mut per_station: Vec<Vec<ArrivalBatch>> = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: Row = row?;
            if row.station >= per_station.len() {
                per_station.resize(row.station + 1, Vec::new());
            }
            let series = &mut per_station[row.station];
            if row.t != series.len() {
                return Err(invalid(format!("trace rows out of order at t={} station={}", row.t, row.station)));
            }
            series.push(ArrivalBatch { embb: row.embb_bits, urllc: row.urllc_bits, mmtc: row.mmtc_bits });
        }
        Self::from_batches(per_station)
    }
}

pub fn station_rng(seed: u64, station: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(station as u64 + 1);
    rng
}

/// Predicted mMTC arrivals for slots t+1..=t+W of one station.
///
/// With `noise_level > 0` each value is scaled by a factor drawn uniformly
/// from [1 − noise, 1 + noise] and clipped to [0, A^max].
pub fn oracle_predict<R: Rng + ?Sized>(
    trace: &TrafficTrace,
    station: usize,
    t: usize,
    window: usize,
    noise_level: f64,
    mmtc_cap: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (1..=window)
        .map(|w| {
            let exact = trace.get(station, t + w)?.mmtc;
            Ok(perturb(exact, noise_level, mmtc_cap, rng))
        })
        .collect()
}

pub(crate) fn perturb<R: Rng + ?Sized>(value: f64, noise_level: f64, cap: f64, rng: &mut R) -> f64 {
    if noise_level <= 0.0 {
        return value;
    }
    let factor = 1.0 + rng.random_range(-noise_level..=noise_level);
    (value * factor).clamp(0.0, cap)
}
