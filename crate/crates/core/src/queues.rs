//! Prediction bank, integrate queue and the terrestrial/satellite backlogs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// mMTC sub-queues A^w for w = −1, 0, …, W−1.
///
/// Index 0 holds the arrival queue A^{−1} (arrived but not yet offloaded),
/// index w+1 the remaining part of the arrival expected w slots ahead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionBank {
    subqueues: VecDeque<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BankStep {
    /// Workload actually removed, min(b_ter + b_sat, Q^sum).
    pub released: f64,
}

impl PredictionBank {
    /// Bank for window `window` preloaded with the known arrivals
    /// A(0), …, A(W−1); the arrival queue starts empty.
    pub fn new(window: usize, known: &[f64]) -> Result<Self> {
        if known.len() != window {
            return Err(Error::Domain(format!(
                "prediction bank for window {window} needs {window} preloaded values, got {}",
                known.len()
            )));
        }
        let mut subqueues = VecDeque::with_capacity(window + 1);
        subqueues.push_back(0.0);
        subqueues.extend(known.iter().copied());
        Ok(Self { subqueues })
    }

    pub fn window(&self) -> usize {
        self.subqueues.len() - 1
    }

    /// A^w for w ∈ {−1, …, W−1}.
    pub fn get(&self, w: isize) -> f64 {
        self.subqueues[(w + 1) as usize]
    }

    pub fn subqueues(&self) -> impl Iterator<Item = f64> + '_ {
        self.subqueues.iter().copied()
    }

    /// Integrate queue Q^sum = Σ_w A^w.
    pub fn total(&self) -> f64 {
        self.subqueues.iter().sum()
    }

    /// Drains b_ter + b_sat oldest-first, shifts the window by one slot and
    /// appends the newly predicted arrival A(t+W).
    pub fn step(&mut self, b_ter: f64, b_sat: f64, future_arrival: f64) -> Result<BankStep> {
        if b_ter < 0.0 || b_sat < 0.0 || future_arrival < 0.0 {
            return Err(Error::Domain(format!(
                "negative bank input (b_ter={b_ter}, b_sat={b_sat}, arrival={future_arrival})"
            )));
        }
        let mut budget = b_ter + b_sat;
        let mut released = 0.0;
        for q in self.subqueues.iter_mut() {
            if budget <= 0.0 {
                break;
            }
            let take = q.min(budget);
            *q -= take;
            budget -= take;
            released += take;
        }
        if self.subqueues.len() == 1 {
            self.subqueues[0] += future_arrival;
        } else {
            let oldest = self.subqueues.pop_front().unwrap_or(0.0);
            self.subqueues[0] += oldest;
            self.subqueues.push_back(future_arrival);
        }
        Ok(BankStep { released })
    }
}

/// Direct integrate-queue recursion [Q − (b_ter + b_sat)]⁺ + A(t+W).
pub fn integrate_step(q_sum: f64, b_ter: f64, b_sat: f64, future_arrival: f64) -> f64 {
    (q_sum - (b_ter + b_sat)).max(0.0) + future_arrival
}

fn clamp_step(q: f64, service: f64, arrival: f64) -> f64 {
    (q - service).max(0.0) + arrival
}

/// Q' = [Q − (C_ter − A_u)]⁺ + b_ter. Also returns the mMTC served,
/// min(Q, [C_ter − A_u]⁺).
pub fn step_ter_mmtc(q: f64, c_ter: f64, a_u: f64, b_ter: f64) -> (f64, f64) {
    let served = q.min((c_ter - a_u).max(0.0));
    (clamp_step(q, c_ter - a_u, b_ter), served)
}

/// Q' = [Q − (C_ter − b_ter)]⁺ + A_u.
pub fn step_ter_urllc(q: f64, c_ter: f64, b_ter: f64, a_u: f64) -> f64 {
    clamp_step(q, c_ter - b_ter, a_u)
}

/// Q' = [Q − (ΣR − A_e)]⁺ + b_sat.
pub fn step_sat_mmtc(q: f64, rate_sum: f64, a_e: f64, b_sat: f64) -> f64 {
    clamp_step(q, rate_sum - a_e, b_sat)
}

/// Q' = [Q − (ΣR − b_sat)]⁺ + A_e.
pub fn step_sat_embb(q: f64, rate_sum: f64, b_sat: f64, a_e: f64) -> f64 {
    clamp_step(q, rate_sum - b_sat, a_e)
}

/// Real backlogs of one station outside the prediction bank.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BacklogSet {
    pub ter_mmtc: f64,
    pub ter_urllc: f64,
    pub sat_mmtc: f64,
    pub sat_embb: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub ter_mmtc: f64,
    pub sat_mmtc: f64,
    pub urllc: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicators {
    pub ter_mmtc: bool,
    pub sat_mmtc: bool,
    pub urllc: bool,
}

/// 1{Q > D} for each constrained queue, evaluated on next-slot backlogs.
pub fn violation_indicators(next: &BacklogSet, d: &Thresholds) -> Indicators {
    Indicators {
        ter_mmtc: next.ter_mmtc > d.ter_mmtc,
        sat_mmtc: next.sat_mmtc > d.sat_mmtc,
        urllc: next.ter_urllc > d.urllc,
    }
}
