//! Slot pipeline, full runs and parameter sweeps.
//!
//! Each slot: observe arrivals and the predicted future mMTC arrival, take
//! the offloading decisions, update the prediction bank and terrestrial
//! queues, allocate satellite power, update the satellite queues, evaluate
//! violation indicators on the new backlogs and step the virtual queues.
//!
//! Queues are kept internally in workload units of `workload_unit_bits`;
//! records and metrics are reported in bits.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::gain_matrix;
use crate::config::{PerStation, ReleaseSplit, SimConfig};
use crate::controller::{
    drift_bound_diag, sp1_satellite, sp1_terrestrial, step_virtual_queues, utility, ControllerParams, StationQueues,
    StationView, VirtualQueues,
};
use crate::error::{invalid, Error, Result};
use crate::matrix::LinkMatrix;
use crate::orbit::{gamma_weights, Constellation, VisibilitySeries};
use crate::powersolver::{satellite_coefficients, sca, station_coefficients, PowerSolution, Sp2Instance};
use crate::queues::{
    step_sat_embb, step_sat_mmtc, step_ter_mmtc, step_ter_urllc, violation_indicators, BacklogSet, PredictionBank,
    Thresholds,
};
use crate::traffic::{perturb, sigma_weights, TrafficTrace};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StationRecord {
    pub q_sum: f64,
    pub arrival_queue: f64,
    pub prediction_backlog: f64,
    pub ter_mmtc: f64,
    pub ter_urllc: f64,
    pub sat_mmtc: f64,
    pub sat_embb: f64,
    pub z_ter_mmtc: f64,
    pub z_sat_mmtc: f64,
    pub z_urllc: f64,
    pub arrival_embb: f64,
    pub arrival_urllc: f64,
    pub arrival_mmtc: f64,
    pub b_ter_decision: f64,
    pub b_sat_decision: f64,
    /// mMTC actually released to each backhaul.
    pub b_ter: f64,
    pub b_sat: f64,
    pub rate: f64,
    pub power: f64,
    /// Net drain min(Q, s) of each queue for its service term s, so that
    /// Q' = Q − served + inflow. Negative when s is (the recursion then adds
    /// the shortfall); service beyond Q is the clamp loss.
    pub served_ter_mmtc: f64,
    pub served_ter_urllc: f64,
    pub served_sat_mmtc: f64,
    pub served_sat_embb: f64,
    pub violation_ter_mmtc: bool,
    pub violation_sat_mmtc: bool,
    pub violation_urllc: bool,
}

/// One slot. Backlogs are the post-update values Q(t+1); volumes in bits.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: usize,
    pub utility: f64,
    pub total_power: f64,
    /// Σ R_ij in bits per slot.
    pub sum_rate: f64,
    pub drift: f64,
    pub capacity_excess: f64,
    pub capacity_scaled: bool,
    pub solver_failed: bool,
    pub sca_iterations: usize,
    pub stations: Vec<StationRecord>,
}

impl SlotRecord {
    pub fn sum_sat_mmtc(&self) -> f64 {
        self.stations.iter().map(|s| s.sat_mmtc).sum()
    }

    pub fn sum_ter_mmtc(&self) -> f64 {
        self.stations.iter().map(|s| s.ter_mmtc).sum()
    }
}

/// Time averages over the slots after warm-up; queue and offload volumes in
/// bits (per slot where applicable).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub averaged_slots: usize,
    pub mean_sat_mmtc: f64,
    pub mean_ter_mmtc: f64,
    pub mean_mmtc_offload_queues: f64,
    pub mean_sat_embb: f64,
    pub mean_ter_urllc: f64,
    pub mean_q_sum: f64,
    pub mean_utility: f64,
    pub mean_offloaded: f64,
    pub mean_offloaded_ter: f64,
    pub mean_offloaded_sat: f64,
    pub mean_total_power: f64,
    pub mean_sum_rate: f64,
    pub freq_urllc_violation: f64,
    pub max_freq_urllc_violation: f64,
    pub freq_ter_mmtc_violation: f64,
    pub freq_sat_mmtc_violation: f64,
    pub capacity_violations: usize,
    pub capacity_scaled_slots: usize,
    pub solver_failures: usize,
}

impl MetricsBundle {
    pub const CSV_HEADER: [&'static str; 20] = [
        "averaged_slots",
        "mean_sat_mmtc",
        "mean_ter_mmtc",
        "mean_mmtc_offload_queues",
        "mean_sat_embb",
        "mean_ter_urllc",
        "mean_q_sum",
        "mean_utility",
        "mean_offloaded",
        "mean_offloaded_ter",
        "mean_offloaded_sat",
        "mean_total_power",
        "mean_sum_rate",
        "freq_urllc_violation",
        "max_freq_urllc_violation",
        "freq_ter_mmtc_violation",
        "freq_sat_mmtc_violation",
        "capacity_violations",
        "capacity_scaled_slots",
        "solver_failures",
    ];

    pub fn csv_fields(&self) -> Vec<String> {
        let mut out = vec![self.averaged_slots.to_string()];
        out.extend(
            [
                self.mean_sat_mmtc,
                self.mean_ter_mmtc,
                self.mean_mmtc_offload_queues,
                self.mean_sat_embb,
                self.mean_ter_urllc,
                self.mean_q_sum,
                self.mean_utility,
                self.mean_offloaded,
                self.mean_offloaded_ter,
                self.mean_offloaded_sat,
                self.mean_total_power,
                self.mean_sum_rate,
                self.freq_urllc_violation,
                self.max_freq_urllc_violation,
                self.freq_ter_mmtc_violation,
                self.freq_sat_mmtc_violation,
            ]
            .iter()
            .map(|v| format_float(*v)),
        );
        out.extend([self.capacity_violations, self.capacity_scaled_slots, self.solver_failures].map(|v| v.to_string()));
        out
    }

    /// Averages of the record stream from `start` onward; counters cover the
    /// whole stream.
    pub fn from_records(records: &[SlotRecord], start: usize, capacity_tolerance: f64) -> Self {
        let mut m = MetricsBundle {
            capacity_violations: records.iter().filter(|r| r.capacity_excess > capacity_tolerance).count(),
            capacity_scaled_slots: records.iter().filter(|r| r.capacity_scaled).count(),
            solver_failures: records.iter().filter(|r| r.solver_failed).count(),
            ..Default::default()
        };
        let window = &records[start.min(records.len())..];
        if window.is_empty() {
            return m;
        }
        let n = window.len() as f64;
        let stations = window[0].stations.len();
        let mean = |f: &dyn Fn(&SlotRecord) -> f64| window.iter().map(f).sum::<f64>() / n;
        let sum_st = |r: &SlotRecord, f: &dyn Fn(&StationRecord) -> f64| r.stations.iter().map(f).sum::<f64>();
        m.averaged_slots = window.len();
        m.mean_sat_mmtc = mean(&|r| sum_st(r, &|s| s.sat_mmtc));
        m.mean_ter_mmtc = mean(&|r| sum_st(r, &|s| s.ter_mmtc));
        m.mean_mmtc_offload_queues = mean(&|r| sum_st(r, &|s| s.ter_mmtc + s.sat_mmtc));
        m.mean_sat_embb = mean(&|r| sum_st(r, &|s| s.sat_embb));
        m.mean_ter_urllc = mean(&|r| sum_st(r, &|s| s.ter_urllc));
        m.mean_q_sum = mean(&|r| sum_st(r, &|s| s.q_sum));
        m.mean_utility = mean(&|r| r.utility);
        m.mean_offloaded = mean(&|r| sum_st(r, &|s| s.b_ter + s.b_sat));
        m.mean_offloaded_ter = mean(&|r| sum_st(r, &|s| s.b_ter));
        m.mean_offloaded_sat = mean(&|r| sum_st(r, &|s| s.b_sat));
        m.mean_total_power = mean(&|r| r.total_power);
        m.mean_sum_rate = mean(&|r| r.sum_rate);
        let freq = |i: usize, f: &dyn Fn(&StationRecord) -> bool| {
            window.iter().filter(|r| f(&r.stations[i])).count() as f64 / n
        };
        let urllc: Vec<f64> = (0..stations).map(|i| freq(i, &|s| s.violation_urllc)).collect();
        m.freq_urllc_violation = urllc.iter().sum::<f64>() / stations as f64;
        m.max_freq_urllc_violation = urllc.iter().copied().fold(0.0, f64::max);
        m.freq_ter_mmtc_violation =
            (0..stations).map(|i| freq(i, &|s| s.violation_ter_mmtc)).sum::<f64>() / stations as f64;
        m.freq_sat_mmtc_violation =
            (0..stations).map(|i| freq(i, &|s| s.violation_sat_mmtc)).sum::<f64>() / stations as f64;
        m
    }
}

/// Nine significant digits, scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.8e}")
}

/// Full simulation state; one per run.
pub struct Simulation {
    config: SimConfig,
    constellation: Constellation,
    station_angles: Vec<f64>,
    trace: TrafficTrace,
    params: ControllerParams,
    /// C_i^Ter in units per slot.
    c_ter: Vec<f64>,
    /// A^max per station, in bits.
    mmtc_caps: Vec<f64>,
    unit: f64,
    rate_scale: f64,
    noise: f64,
    banks: Vec<PredictionBank>,
    backlogs: Vec<BacklogSet>,
    virtual_queues: Vec<VirtualQueues>,
    prev_power: LinkMatrix<f64>,
    /// Rates of the last slot, in workload units per slot.
    prev_rates: LinkMatrix<f64>,
    predictor_rng: ChaCha8Rng,
    t: usize,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let stations = config.stations.count;
        let period = config.timeline.orbital_period_s;
        let constellation = Constellation::new(
            config.constellation.planes(period),
            config.constellation.earth_radius_km,
            config.constellation.min_elevation_deg.to_radians(),
        )?;
        let station_angles = config.stations.polar_angles()?;
        let window = config.traffic.window;
        let profiles = config.traffic_profiles()?;
        let trace = TrafficTrace::generate(&profiles, config.horizon_slots + window + 1, config.seed)?;

        let visibility = VisibilitySeries::sample(
            &constellation,
            &station_angles,
            config.timeline.slots_per_orbit(),
            config.timeline.slot_s,
        );
        let plane_types: Vec<_> = (0..constellation.len()).map(|j| constellation.plane_type(j)).collect();
        let gamma = gamma_weights(&visibility, &plane_types)?;

        let unit = config.workload_unit_bits;
        let delta = config.timeline.slot_s;
        let c_ter: Vec<f64> = config.terrestrial_capacity_bits()?.into_iter().map(|c| c / unit).collect();
        let c_sat = config.link.satellite_capacity_bps * delta / unit;
        let ctl = &config.control;
        let urllc_means: Vec<f64> = profiles.iter().map(|p| p.urllc_mean).collect();
        let params = ControllerParams {
            v: ctl.v,
            beta: ctl.beta,
            sigma: sigma_weights(&urllc_means)?,
            gamma,
            tolerances: ctl.tolerances,
            thresholds: c_ter
                .iter()
                .map(|&c| Thresholds {
                    ter_mmtc: ctl.ter_mmtc_threshold_factor * c,
                    sat_mmtc: ctl.sat_mmtc_threshold_factor * c_sat,
                    urllc: ctl.urllc_threshold_factor * c,
                })
                .collect(),
            b_max_ter: c_ter.iter().map(|c| ctl.b_max_ter_factor * c).collect(),
            b_max_sat: vec![ctl.b_max_sat_factor * c_sat; stations],
            c_sat,
            p_max: config.link.max_power_w,
        };
        params.validate()?;

        let bandwidth = config.link.link_bandwidth_hz(stations);
        let mut predictor_rng = ChaCha8Rng::seed_from_u64(config.seed);
        predictor_rng.set_stream(0);
        let noise_level = config.traffic.prediction_noise;
        let banks = (0..stations)
            .map(|i| {
                let known: Vec<f64> = (0..window)
                    .map(|t| {
                        let exact = trace.get(i, t)?.mmtc;
                        Ok(perturb(exact, noise_level, profiles[i].mmtc_cap, &mut predictor_rng) / unit)
                    })
                    .collect::<Result<_>>()?;
                PredictionBank::new(window, &known)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            constellation,
            station_angles,
            trace,
            params,
            c_ter,
            mmtc_caps: profiles.iter().map(|p| p.mmtc_cap).collect(),
            unit,
            rate_scale: bandwidth * delta / unit,
            noise: config.link.noise_density * bandwidth,
            banks,
            backlogs: vec![BacklogSet::default(); stations],
            virtual_queues: vec![VirtualQueues::default(); stations],
            prev_power: LinkMatrix::zeros(stations, config.satellite_count()),
            prev_rates: LinkMatrix::zeros(stations, config.satellite_count()),
            predictor_rng,
            t: 0,
            config: config.clone(),
        })
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn station_angles(&self) -> &[f64] {
        &self.station_angles
    }

    pub fn trace(&self) -> &TrafficTrace {
        &self.trace
    }

    pub fn time(&self) -> usize {
        self.t
    }

    /// Power allocation P_ij of the last simulated slot.
    pub fn last_power(&self) -> &LinkMatrix<f64> {
        &self.prev_power
    }

    /// Rates R_ij of the last simulated slot in bits per slot.
    pub fn last_rates_bits(&self) -> LinkMatrix<f64> {
        self.prev_rates.map(|r| *r * self.unit)
    }

    fn queue_state(&self) -> Vec<StationQueues> {
        (0..self.banks.len())
            .map(|i| StationQueues {
                q_sum: self.banks[i].total(),
                backlog: self.backlogs[i],
                virtual_queues: self.virtual_queues[i],
            })
            .collect()
    }

    /// Advances one slot and returns its record.
    pub fn run_slot(&mut self) -> Result<SlotRecord> {
        let t = self.t;
        let stations = self.banks.len();
        let window = self.config.traffic.window;
        let unit = self.unit;
        let before = self.queue_state();

        // (1) arrivals and predicted future mMTC arrival
        let mut arrivals = Vec::with_capacity(stations);
        let mut future = Vec::with_capacity(stations);
        for i in 0..stations {
            let a = self.trace.get(i, t)?;
            arrivals.push(a);
            let exact = self.trace.get(i, t + window)?.mmtc;
            let predicted = if window == 0 {
                exact
            } else {
                perturb(exact, self.config.traffic.prediction_noise, self.mmtc_caps[i], &mut self.predictor_rng)
            };
            future.push(predicted / unit);
        }

        // (2) offloading decisions on current backlogs
        let views: Vec<StationView> = (0..stations)
            .map(|i| StationView {
                backlog: self.backlogs[i],
                virtual_queues: self.virtual_queues[i],
                q_sum: self.banks[i].total(),
                a_urllc: arrivals[i].urllc / unit,
                a_embb: arrivals[i].embb / unit,
                c_ter: self.c_ter[i],
            })
            .collect();
        let b_ter_dec: Vec<f64> = (0..stations).map(|i| sp1_terrestrial(&views[i], self.params.b_max_ter[i])).collect();
        let b_sat_dec: Vec<f64> = (0..stations).map(|i| sp1_satellite(&views[i], self.params.b_max_sat[i])).collect();

        // (3) prediction bank and terrestrial queues
        let mut b_ter = vec![0.0; stations];
        let mut b_sat = vec![0.0; stations];
        let mut served = vec![[0.0; 4]; stations];
        for i in 0..stations {
            let released = self.banks[i].step(b_ter_dec[i], b_sat_dec[i], future[i])?.released;
            (b_ter[i], b_sat[i]) =
                split_release(released, b_ter_dec[i], b_sat_dec[i], self.config.control.release_split);
            let a_u = arrivals[i].urllc / unit;
            let q = &mut self.backlogs[i];
            served[i][0] = q.ter_mmtc.min(self.c_ter[i] - a_u);
            served[i][1] = q.ter_urllc.min(self.c_ter[i] - b_ter[i]);
            q.ter_mmtc = step_ter_mmtc(q.ter_mmtc, self.c_ter[i], a_u, b_ter[i]).0;
            q.ter_urllc = step_ter_urllc(q.ter_urllc, self.c_ter[i], b_ter[i], a_u);
        }

        // (4) power allocation
        let time_s = t as f64 * self.config.timeline.slot_s;
        let gain = gain_matrix(&self.constellation, &self.station_angles, time_s, &self.config.link)?;
        let instance = Sp2Instance {
            x_station: station_coefficients(&views, &self.params),
            x_satellite: satellite_coefficients(&self.params),
            gain,
            rate_scale: self.rate_scale,
            noise: self.noise,
            p_max: self.params.p_max,
            capacity: self.params.c_sat,
        };
        let mut solution = sca(&instance, &self.config.solver);
        let solver_failed = !solution.objective.is_finite() || !instance.respects_power_limits(&solution.power);
        if solver_failed {
            let power = LinkMatrix::from_fn(stations, instance.satellites(), |i, j| {
                if instance.visible(i, j) {
                    self.prev_power[(i, j)]
                } else {
                    0.0
                }
            });
            solution = PowerSolution {
                rates: instance.rates(&power),
                objective: instance.objective(&power),
                power,
                ..solution
            };
        }
        self.prev_power = solution.power.clone();
        self.prev_rates = solution.rates.clone();

        // (5) satellite queues
        for i in 0..stations {
            let rate = solution.rates.row_sum(i);
            let a_e = arrivals[i].embb / unit;
            let q = &mut self.backlogs[i];
            let (m, e) = (q.sat_mmtc, q.sat_embb);
            served[i][2] = m.min(rate - a_e);
            served[i][3] = e.min(rate - b_sat[i]);
            q.sat_mmtc = step_sat_mmtc(m, rate, a_e, b_sat[i]);
            q.sat_embb = step_sat_embb(e, rate, b_sat[i], a_e);
        }

        // (6) indicators on Q(t+1), (7) virtual queues
        let mut records = Vec::with_capacity(stations);
        for i in 0..stations {
            let ind = violation_indicators(&self.backlogs[i], &self.params.thresholds[i]);
            self.virtual_queues[i] = step_virtual_queues(&self.virtual_queues[i], &ind, &self.params.tolerances);
            let q = self.backlogs[i];
            let z = self.virtual_queues[i];
            let bank = &self.banks[i];
            records.push(StationRecord {
                q_sum: bank.total() * unit,
                arrival_queue: bank.get(-1) * unit,
                prediction_backlog: (bank.total() - bank.get(-1)) * unit,
                ter_mmtc: q.ter_mmtc * unit,
                ter_urllc: q.ter_urllc * unit,
                sat_mmtc: q.sat_mmtc * unit,
                sat_embb: q.sat_embb * unit,
                z_ter_mmtc: z.ter_mmtc,
                z_sat_mmtc: z.sat_mmtc,
                z_urllc: z.urllc,
                arrival_embb: arrivals[i].embb,
                arrival_urllc: arrivals[i].urllc,
                arrival_mmtc: arrivals[i].mmtc,
                b_ter_decision: b_ter_dec[i] * unit,
                b_sat_decision: b_sat_dec[i] * unit,
                b_ter: b_ter[i] * unit,
                b_sat: b_sat[i] * unit,
                rate: solution.rates.row_sum(i) * unit,
                power: solution.power.row_sum(i),
                served_ter_mmtc: served[i][0] * unit,
                served_ter_urllc: served[i][1] * unit,
                served_sat_mmtc: served[i][2] * unit,
                served_sat_embb: served[i][3] * unit,
                violation_ter_mmtc: ind.ter_mmtc,
                violation_sat_mmtc: ind.sat_mmtc,
                violation_urllc: ind.urllc,
            });
        }
        let eta = utility(&solution.rates, &solution.power, &self.params);
        let after = self.queue_state();
        self.t += 1;
        Ok(SlotRecord {
            t,
            utility: eta,
            total_power: solution.power.total(),
            sum_rate: solution.rates.total() * unit,
            drift: drift_bound_diag(&before, &after, self.params.v, eta),
            capacity_excess: solution.capacity_excess_unscaled,
            capacity_scaled: solution.capacity_scaled,
            solver_failed,
            sca_iterations: solution.iterations,
            stations: records,
        })
    }
}

/// Splits the released mMTC workload between the two backhauls.
pub fn split_release(released: f64, b_ter: f64, b_sat: f64, policy: ReleaseSplit) -> (f64, f64) {
    let total = b_ter + b_sat;
    if released <= 0.0 || total <= 0.0 {
        return (0.0, 0.0);
    }
    match policy {
        ReleaseSplit::TerrestrialFirst => {
            let ter = released.min(b_ter);
            (ter, released - ter)
        }
        ReleaseSplit::ProRata => {
            let ter = released * b_ter / total;
            (ter, released - ter)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub records: Vec<SlotRecord>,
    pub metrics: MetricsBundle,
    pub gamma: Vec<f64>,
}

/// Simulates the configured horizon.
pub fn run(config: &SimConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(config)?;
    let mut records = Vec::with_capacity(config.horizon_slots);
    for _ in 0..config.horizon_slots {
        records.push(sim.run_slot()?);
    }
    let start = (config.warmup_fraction * config.horizon_slots as f64).floor() as usize;
    let metrics = MetricsBundle::from_records(&records, start, config.solver.capacity_tolerance);
    Ok(RunOutput { records, metrics, gamma: sim.params.gamma.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SatellitesPerPlane,
    Planes,
    Beta,
    #[serde(rename = "V", alias = "v")]
    V,
    Window,
    ArrivalRate,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::SatellitesPerPlane => "satellites_per_plane",
            Self::Planes => "planes",
            Self::Beta => "beta",
            Self::V => "V",
            Self::Window => "window",
            Self::ArrivalRate => "arrival_rate",
        }
    }

    pub fn read(self, c: &SimConfig) -> f64 {
        match self {
            Self::SatellitesPerPlane => c.constellation.satellites_per_polar_plane as f64,
            Self::Planes => c.constellation.polar_planes as f64,
            Self::Beta => c.control.beta,
            Self::V => c.control.v,
            Self::Window => c.traffic.window as f64,
            Self::ArrivalRate => c.traffic.mmtc_kbps.mean(),
        }
    }

    /// Sets the axis value. Counts must be non-negative integers; the
    /// arrival rate sets the mean mMTC rate in kbps.
    pub fn apply(self, c: &mut SimConfig, value: f64) -> Result<()> {
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value.is_finite() {
                Ok(value as usize)
            } else {
                Err(invalid(format!("{} needs a non-negative integer, got {value}", self.name())))
            }
        };
        match self {
            Self::SatellitesPerPlane => c.constellation.satellites_per_polar_plane = count()?,
            Self::Planes => c.constellation.polar_planes = count()?,
            Self::Beta => c.control.beta = value,
            Self::V => c.control.v = value,
            Self::Window => c.traffic.window = count()?,
            Self::ArrivalRate => {
                c.traffic.mmtc_kbps = match &c.traffic.mmtc_kbps {
                    PerStation::Uniform(_) => PerStation::Uniform(value),
                    each => {
                        let mean = each.mean();
                        if mean > 0.0 {
                            each.scaled(value / mean)
                        } else {
                            PerStation::Uniform(value)
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub output: RunOutput,
}

/// Runs configurations that differ only along `axis`, in parallel on the
/// current rayon pool; rows keep the input order.
pub fn aggregate_sweep(configs: &[SimConfig], axis: SweepAxis) -> Result<Vec<SweepRow>> {
    if let Some(base) = configs.first() {
        for c in configs {
            let mut probe = base.clone();
            axis.apply(&mut probe, axis.read(c))?;
            if &probe != c {
                return Err(Error::HeterogeneousSweep(format!(
                    "configurations differ outside the {} axis",
                    axis.name()
                )));
            }
        }
    }
    configs.par_iter().map(|c| Ok(SweepRow { axis_value: axis.read(c), output: run(c)? })).collect()
}

/// Column names of the per-slot CSV for `stations` stations.
pub fn slot_csv_header(stations: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "t",
        "utility",
        "total_power",
        "sum_rate",
        "sum_q_sat_mmtc",
        "sum_q_ter_mmtc",
        "drift",
        "capacity_excess",
        "capacity_scaled",
        "solver_failed",
        "sca_iterations",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 0..stations {
        for field in STATION_FIELDS {
            h.push(format!("s{i}_{field}"));
        }
    }
    h
}

const STATION_FIELDS: [&str; 26] = [
    "q_sum",
    "arrival_queue",
    "prediction_backlog",
    "q_ter_mmtc",
    "q_ter_urllc",
    "q_sat_mmtc",
    "q_sat_embb",
    "z_ter_mmtc",
    "z_sat_mmtc",
    "z_urllc",
    "a_embb",
    "a_urllc",
    "a_mmtc",
    "b_ter_decision",
    "b_sat_decision",
    "b_ter",
    "b_sat",
    "rate",
    "power",
    "served_ter_mmtc",
    "served_ter_urllc",
    "served_sat_mmtc",
    "served_sat_embb",
    "viol_ter_mmtc",
    "viol_sat_mmtc",
    "viol_urllc",
];

pub fn slot_csv_fields(r: &SlotRecord) -> Vec<String> {
    let mut out = vec![
        r.t.to_string(),
        format_float(r.utility),
        format_float(r.total_power),
        format_float(r.sum_rate),
        format_float(r.sum_sat_mmtc()),
        format_float(r.sum_ter_mmtc()),
        format_float(r.drift),
        format_float(r.capacity_excess),
        u8::from(r.capacity_scaled).to_string(),
        u8::from(r.solver_failed).to_string(),
        r.sca_iterations.to_string(),
    ];
    for s in &r.stations {
        for v in [
            s.q_sum,
            s.arrival_queue,
            s.prediction_backlog,
            s.ter_mmtc,
            s.ter_urllc,
            s.sat_mmtc,
            s.sat_embb,
            s.z_ter_mmtc,
            s.z_sat_mmtc,
            s.z_urllc,
            s.arrival_embb,
            s.arrival_urllc,
            s.arrival_mmtc,
            s.b_ter_decision,
            s.b_sat_decision,
            s.b_ter,
            s.b_sat,
            s.rate,
            s.power,
            s.served_ter_mmtc,
            s.served_ter_urllc,
            s.served_sat_mmtc,
            s.served_sat_embb,
        ] {
            out.push(format_float(v));
        }
        for b in [s.violation_ter_mmtc, s.violation_sat_mmtc, s.violation_urllc] {
            out.push(u8::from(b).to_string());
        }
    }
    out
}

/// Writes one row per slot; an empty record set yields only the header.
pub fn write_slot_records<W: Write>(out: W, stations: usize, records: &[SlotRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(slot_csv_header(stations))?;
    for r in records {
        w.write_record(slot_csv_fields(r))?;
    }
    w.flush()?;
    Ok(())
}
