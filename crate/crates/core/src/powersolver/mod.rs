//! Per-slot satellite power allocation.
//!
//! The rate part of the objective is split as (F − G)/ln 2 with F and G
//! concave. Each outer iteration replaces G by its tangent at the current
//! point, which gives a concave minorant of the true objective, and the
//! capacity constraint uses the tangent of F, which is conservative. The
//! convex subproblem is solved by projected gradient ascent, with the
//! capacity constraint handled by an augmented Lagrangian.

mod dc;
mod grid;
mod inner;
mod sca;

pub use dc::{dc_parts, linearize_f, linearize_g, surrogate_gradient, surrogate_objective, AffineSurrogate};
pub use grid::{closed_form_single_link, grid_oracle, GridResult, GRID_LINK_LIMIT};
pub use inner::{project_capped_simplex, solve_linearized, InnerResult};
pub use sca::{sca, write_trace, PowerSolution, TraceRow};

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerParams, StationView};
use crate::error::{invalid, Result};
use crate::matrix::LinkMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Outer stopping tolerance as a fraction of P^max.
    pub epsilon_error_fraction: f64,
    pub max_sca_iters: usize,
    /// Inner stopping tolerance on the step length, fraction of P^max.
    pub inner_tolerance: f64,
    pub inner_max_iters: usize,
    /// Relative tolerance on the true capacity constraint before scaling.
    pub capacity_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            epsilon_error_fraction: 1e-3,
            max_sca_iters: 50,
            inner_tolerance: 1e-7,
            inner_max_iters: 1000,
            capacity_tolerance: 0.01,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_error_fraction > 0.0) {
            return Err(invalid("epsilon_error_fraction must be positive"));
        }
        if self.max_sca_iters == 0 || self.inner_max_iters == 0 {
            return Err(invalid("solver iteration caps must be at least 1"));
        }
        if !(self.inner_tolerance > 0.0 && self.capacity_tolerance >= 0.0) {
            return Err(invalid("solver tolerances must be positive"));
        }
        Ok(())
    }
}

/// One power-allocation problem.
///
/// Rates are `rate_scale · log2(1 + SINR)` in workload units per slot, the
/// same unit as `capacity`. A link is visible iff its gain is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Sp2Instance {
    pub x_station: Vec<f64>,
    pub x_satellite: Vec<f64>,
    pub gain: LinkMatrix<f64>,
    pub rate_scale: f64,
    /// Noise power N_0 B_ij in W.
    pub noise: f64,
    pub p_max: f64,
    pub capacity: f64,
}

impl Sp2Instance {
    pub fn stations(&self) -> usize {
        self.gain.rows()
    }

    pub fn satellites(&self) -> usize {
        self.gain.cols()
    }

    pub fn visible(&self, i: usize, j: usize) -> bool {
        self.gain[(i, j)] > 0.0
    }

    pub fn link_count(&self) -> usize {
        self.gain.as_slice().iter().filter(|&&h| h > 0.0).count()
    }

    /// Interference Σ_{j'≠j} P_ij' h_ij' seen on link (i, j).
    pub fn interference(&self, power: &LinkMatrix<f64>, i: usize, j: usize) -> f64 {
        crate::channel::interference(i, j, power, &self.gain)
    }

    pub fn rates(&self, power: &LinkMatrix<f64>) -> LinkMatrix<f64> {
        LinkMatrix::from_fn(self.stations(), self.satellites(), |i, j| {
            let h = self.gain[(i, j)];
            let p = power[(i, j)];
            if h <= 0.0 || p <= 0.0 {
                0.0
            } else {
                let sinr = p * h / (self.noise + self.interference(power, i, j));
                self.rate_scale * sinr.ln_1p() / std::f64::consts::LN_2
            }
        })
    }

    /// True objective Σ X_i R_ij − Σ X_j P_ij.
    pub fn objective(&self, power: &LinkMatrix<f64>) -> f64 {
        let rates = self.rates(power);
        let mut obj = 0.0;
        for i in 0..self.stations() {
            for j in 0..self.satellites() {
                obj += self.x_station[i] * rates[(i, j)] - self.x_satellite[j] * power[(i, j)];
            }
        }
        obj
    }

    /// Initial point P^max / I on visible links.
    pub fn even_split(&self) -> LinkMatrix<f64> {
        let share = self.p_max / self.stations() as f64;
        LinkMatrix::from_fn(self.stations(), self.satellites(), |i, j| if self.visible(i, j) { share } else { 0.0 })
    }

    pub fn respects_power_limits(&self, power: &LinkMatrix<f64>) -> bool {
        (0..self.satellites()).all(|j| power.col_sum(j) <= self.p_max)
            && (0..self.stations()).all(|i| {
                (0..self.satellites()).all(|j| {
                    let p = power[(i, j)];
                    p >= 0.0 && p <= self.p_max && (self.visible(i, j) || p == 0.0)
                })
            })
    }

    pub fn capacity_violation(&self, power: &LinkMatrix<f64>) -> f64 {
        let rates = self.rates(power);
        (0..self.satellites()).map(|j| rates.col_sum(j) / self.capacity - 1.0).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// X_i = Vβσ_i/(C^Sat I M) + 2Q_m^Sat + Q_e^Sat + Z_m^Sat + A_e.
pub fn station_coefficients(views: &[StationView], params: &ControllerParams) -> Vec<f64> {
    let im = (params.stations() * params.satellites()) as f64;
    views
        .iter()
        .zip(&params.sigma)
        .map(|(view, sigma)| params.v * params.beta * sigma / (params.c_sat * im) + view.sat_weight())
        .collect()
}

/// X_j = V(1−β)γ_j/(I M P^max).
pub fn satellite_coefficients(params: &ControllerParams) -> Vec<f64> {
    let im = (params.stations() * params.satellites()) as f64;
    params.gamma.iter().map(|gamma| params.v * (1.0 - params.beta) * gamma / (im * params.p_max)).collect()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;

    /// Instance in the operating regime: Ka-band path loss over LEO slant
    /// ranges, noise of a 62.5 MHz link and queue-sized weights.
    pub fn random_instance<R: Rng>(rng: &mut R, stations: usize, satellites: usize, visible_prob: f64) -> Sp2Instance {
        let gain = LinkMatrix::from_fn(stations, satellites, |_, _| {
            if rng.random_bool(visible_prob) {
                let d_km: f64 = rng.random_range(1000.0..2800.0);
                crate::channel::path_gain(d_km, 20e9).unwrap()
            } else {
                0.0
            }
        });
        let noise = crate::channel::dbm_per_hz_to_watts(-174.0) * 0.25e9 / stations as f64;
        let rate_scale = 0.25e9 / stations as f64 * 0.66276 / 12_000.0;
        Sp2Instance {
            x_station: (0..stations).map(|_| rng.random_range(0.0..200.0)).collect(),
            x_satellite: (0..satellites).map(|_| rng.random_range(0.0..3.0)).collect(),
            gain,
            rate_scale,
            noise,
            p_max: 1000.0,
            capacity: rng.random_range(5.0..60.0),
        }
    }
}
